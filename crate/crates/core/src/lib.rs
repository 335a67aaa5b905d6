//! Allocation-only core of the panotour engine.
//!
//! Everything here is pure computation over in-memory values: sphere
//! geometry, equirectangular resampling, the acceptance rules for panoramas,
//! the tour graph, byte inventories and the load simulator. Decoding,
//! encoding, file layout and networking live in the `panotour` crate.
//!
//! See [`geometry`] for the coordinate conventions every module shares.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod geometry;
pub mod inventory;
pub mod media;
pub mod profiler;
pub mod projection;
pub mod raster;
pub mod tour;

pub use geometry::{
    pixel_to_sphere, rotate_view, sphere_to_pixel, sphere_to_vec, vec_to_sphere, Dimensions,
    GeometryError, PixelCoord, SphericalDirection, UnitVector,
};
pub use inventory::{AssetCategory, ByteInventory, InventoryRow};
pub use media::{
    read_xmp_projection, validate_panorama, ImageFormat, MediaCode, MediaLimits, ProjectionMetadata,
    Severity, ValidationReport,
};
pub use profiler::{simulate_load, ClientModel, LoadPolicy, LoadReport, NetworkModel};
pub use projection::{
    equirect_to_cubemap, render_little_planet, render_perspective, sample_bilinear, CubeFace,
    CubeMap, ViewParams,
};
pub use raster::{Channels, Color, EquirectImage, Raster};
pub use tour::{validate_tour, Hotspot, HotspotKind, HotspotPayload, Scene, Tour, TourCode};

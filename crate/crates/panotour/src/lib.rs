//! 360° virtual tour engine.
//!
//! The pure parts (geometry, resampling, validation rules, tour graph, load
//! model) live in [`panotour_core`] and are re-exported as [`core`]. This
//! crate adds everything that touches bytes, files or sockets:
//!
//! * [`codec`]: PNG/JPEG decoding, PNG encoding, XMP injection
//! * [`manifest`]: the JSON tour manifest
//! * [`bundle`]: compiling a manifest and media into a servable directory
//! * [`server`]: the HTTP service over a bundle
//! * [`report`]: load-profile rendering
//! * [`cli`]: the `panotour` command

pub use panotour_core as core;

pub mod bundle;
pub mod cli;
pub mod codec;
pub mod config;
pub mod manifest;
pub mod render;
pub mod report;
pub mod sample;
pub mod server;
pub mod viewer;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::Dimensions;
use crate::media::ProjectionMetadata;

/// RGBA color. Three-channel rasters report alpha as 255.
pub type Color = [u8; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channels {
    Rgb,
    Rgba,
}

impl Channels {
    #[inline]
    pub fn count(self) -> usize {
        match self {
            Channels::Rgb => 3,
            Channels::Rgba => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RasterError {
    BufferLength { expected: usize, actual: usize },
    UnsupportedChannels(usize),
}

impl fmt::Display for RasterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RasterError::BufferLength { expected, actual } => {
                write!(f, "pixel buffer holds {actual} bytes, expected {expected}")
            }
            RasterError::UnsupportedChannels(n) => write!(f, "{n} channels unsupported, need 3 or 4"),
        }
    }
}

/// Row-major 8-bit raster.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    dims: Dimensions,
    channels: Channels,
    pixels: Vec<u8>,
}

impl fmt::Debug for Raster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Raster")
            .field("dims", &self.dims)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl Raster {
    pub fn new(dims: Dimensions, channels: Channels, pixels: Vec<u8>) -> Result<Self, RasterError> {
        let expected = dims.pixel_count() * channels.count();
        if pixels.len() != expected {
            return Err(RasterError::BufferLength {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self { dims, channels, pixels })
    }

    pub fn filled(dims: Dimensions, channels: Channels, color: Color) -> Self {
        let n = channels.count();
        let mut pixels = vec![0u8; dims.pixel_count() * n];
        for px in pixels.chunks_exact_mut(n) {
            px.copy_from_slice(&color[..n]);
        }
        Self { dims, channels, pixels }
    }

    /// Builds a raster by evaluating `f(col, row)` for every pixel.
    pub fn from_fn(dims: Dimensions, channels: Channels, mut f: impl FnMut(u32, u32) -> Color) -> Self {
        let n = channels.count();
        let mut pixels = Vec::with_capacity(dims.pixel_count() * n);
        for row in 0..dims.height() {
            for col in 0..dims.width() {
                pixels.extend_from_slice(&f(col, row)[..n]);
            }
        }
        Self { dims, channels, pixels }
    }

    #[inline]
    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    #[inline]
    pub fn channels(&self) -> Channels {
        self.channels
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn row_stride(&self) -> usize {
        self.dims.width() as usize * self.channels.count()
    }

    /// Panics when `(col, row)` lies outside the raster.
    #[inline]
    pub fn pixel(&self, col: u32, row: u32) -> Color {
        assert!(col < self.dims.width() && row < self.dims.height());
        let n = self.channels.count();
        let i = (row as usize * self.dims.width() as usize + col as usize) * n;
        let mut c = [255u8; 4];
        c[..n].copy_from_slice(&self.pixels[i..i + n]);
        c
    }

    pub fn set_pixel(&mut self, col: u32, row: u32, color: Color) {
        assert!(col < self.dims.width() && row < self.dims.height());
        let n = self.channels.count();
        let i = (row as usize * self.dims.width() as usize + col as usize) * n;
        self.pixels[i..i + n].copy_from_slice(&color[..n]);
    }

    /// Top-to-bottom mirror.
    pub fn flipped_vertically(&self) -> Raster {
        let stride = self.row_stride();
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for row in self.pixels.chunks_exact(stride).rev() {
            pixels.extend_from_slice(row);
        }
        Raster {
            dims: self.dims,
            channels: self.channels,
            pixels,
        }
    }

    /// Rotates columns so that new column `c` holds old column `(c + k) mod W`.
    pub fn shifted_columns(&self, k: i64) -> Raster {
        let w = self.dims.width() as i64;
        Raster::from_fn(self.dims, self.channels, |c, r| {
            self.pixel((c as i64 + k).rem_euclid(w) as u32, r)
        })
    }
}

/// A decoded equirectangular panorama.
#[derive(Debug, Clone, PartialEq)]
pub struct EquirectImage {
    raster: Raster,
    source_metadata: Option<ProjectionMetadata>,
}

impl EquirectImage {
    pub fn new(raster: Raster) -> Self {
        Self {
            raster,
            source_metadata: None,
        }
    }

    pub fn with_metadata(raster: Raster, metadata: ProjectionMetadata) -> Self {
        Self {
            raster,
            source_metadata: Some(metadata),
        }
    }

    #[inline]
    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    #[inline]
    pub fn dims(&self) -> Dimensions {
        self.raster.dims()
    }

    pub fn metadata(&self) -> Option<&ProjectionMetadata> {
        self.source_metadata.as_ref()
    }

    pub fn into_raster(self) -> Raster {
        self.raster
    }
}

impl From<Raster> for EquirectImage {
    fn from(raster: Raster) -> Self {
        EquirectImage::new(raster)
    }
}

//! Coordinate conventions shared by every part of the engine.
//!
//! # Conventions
//!
//! * An equirectangular image of `W×H` pixels spans the continuous rectangle
//!   `[0, W] × [0, H]`. Integer pixel `i` has its center at `i + 0.5`.
//! * Yaw (longitude) grows left to right across the image and lives in
//!   `[-π, π)`; `u = 0` is the seam at `-π`, `u = W/2` looks forward.
//! * Pitch (latitude) is `+π/2` at the top row (zenith) and `-π/2` at the
//!   bottom row (nadir).
//! * World frame is right-handed with `+z` up: yaw 0 / pitch 0 is `+x`, yaw
//!   `π/2` is `+y`.
//! * Camera rotation applies pitch about the lateral axis first, then yaw
//!   about the world vertical. There is no roll.

use core::f64::consts::{FRAC_PI_2, PI, TAU};
use core::fmt;

use libm::{asin, atan2, cos, sin, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    NonFinite,
    OutOfRange,
    ZeroVector,
    ZeroDimension,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::NonFinite => f.write_str("coordinate is not finite"),
            GeometryError::OutOfRange => f.write_str("coordinate outside the image domain"),
            GeometryError::ZeroVector => f.write_str("zero-length vector has no direction"),
            GeometryError::ZeroDimension => f.write_str("image dimensions must be positive"),
        }
    }
}

/// Wraps an angle into `[-π, π)`. Values already in range are returned untouched.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        return a;
    }
    let mut m = libm::fmod(a + PI, TAU);
    if m < 0.0 {
        m += TAU;
    }
    let mut w = m - PI;
    if w >= PI {
        w -= TAU;
    }
    if w < -PI {
        w = -PI;
    }
    w
}

/// A direction on the unit sphere as (yaw, pitch) in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SphericalDirection {
    yaw: f64,
    pitch: f64,
}

impl SphericalDirection {
    /// Yaw is wrapped into `[-π, π)` and pitch clamped to `[-π/2, π/2]`.
    pub fn new(yaw: f64, pitch: f64) -> Result<Self, GeometryError> {
        if !yaw.is_finite() || !pitch.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self {
            yaw: wrap_angle(yaw),
            pitch: pitch.clamp(-FRAC_PI_2, FRAC_PI_2),
        })
    }

    pub fn from_degrees(yaw_deg: f64, pitch_deg: f64) -> Result<Self, GeometryError> {
        Self::new(yaw_deg.to_radians(), pitch_deg.to_radians())
    }

    pub const FORWARD: Self = Self { yaw: 0.0, pitch: 0.0 };
    pub const ZENITH: Self = Self { yaw: 0.0, pitch: FRAC_PI_2 };
    pub const NADIR: Self = Self { yaw: 0.0, pitch: -FRAC_PI_2 };

    #[inline]
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    #[inline]
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Great-circle angle to `other`, in radians.
    pub fn angle_to(&self, other: &SphericalDirection) -> f64 {
        sphere_to_vec(*self).angle_to(&sphere_to_vec(*other))
    }
}

/// Continuous pixel position in an equirectangular image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub fn new(u: f64, v: f64) -> Result<Self, GeometryError> {
        if !u.is_finite() || !v.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { u, v })
    }

    /// Center of the integer pixel `(col, row)`.
    pub fn center_of(col: u32, row: u32) -> Self {
        Self {
            u: col as f64 + 0.5,
            v: row as f64 + 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dimensions {
    width: u32,
    height: u32,
}

impl Dimensions {
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        Ok(Self { width, height })
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

impl fmt::Display for Dimensions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// Unit-length vector in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVector {
    pub const X: Self = Self { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Self = Self { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Self = Self { x: 0.0, y: 0.0, z: 1.0 };

    /// Normalizes `(x, y, z)`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = sqrt(x * x + y * y + z * z);
        if n == 0.0 {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Self::from_normalized(x / n, y / n, z / n))
    }

    #[inline]
    pub(crate) fn from_normalized(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    #[inline]
    pub fn dot(&self, o: &UnitVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.dot(self))
    }

    /// Angle between two unit vectors, stable near 0 and π.
    pub fn angle_to(&self, o: &UnitVector) -> f64 {
        let cx = self.y * o.z - self.z * o.y;
        let cy = self.z * o.x - self.x * o.z;
        let cz = self.x * o.y - self.y * o.x;
        atan2(sqrt(cx * cx + cy * cy + cz * cz), self.dot(o))
    }
}

/// Maps a continuous pixel position to the direction it depicts.
pub fn pixel_to_sphere(p: PixelCoord, d: Dimensions) -> Result<SphericalDirection, GeometryError> {
    if !p.u.is_finite() || !p.v.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    let (w, h) = (d.width as f64, d.height as f64);
    if !(0.0..=w).contains(&p.u) || !(0.0..=h).contains(&p.v) {
        return Err(GeometryError::OutOfRange);
    }
    let yaw = (p.u / w) * TAU - PI;
    let pitch = FRAC_PI_2 - (p.v / h) * PI;
    SphericalDirection::new(yaw, pitch)
}

/// Inverse of [`pixel_to_sphere`].
pub fn sphere_to_pixel(s: SphericalDirection, d: Dimensions) -> PixelCoord {
    PixelCoord {
        u: ((s.yaw + PI) / TAU) * d.width as f64,
        v: ((FRAC_PI_2 - s.pitch) / PI) * d.height as f64,
    }
}

pub fn sphere_to_vec(s: SphericalDirection) -> UnitVector {
    let (cp, sp) = (cos(s.pitch), sin(s.pitch));
    UnitVector::from_normalized(cp * cos(s.yaw), cp * sin(s.yaw), sp)
}

/// Inverse of [`sphere_to_vec`]. At the poles yaw is reported as 0.
pub fn vec_to_sphere(v: UnitVector) -> Result<SphericalDirection, GeometryError> {
    let n = v.norm();
    if !n.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if n == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    let (x, y, z) = if libm::fabs(n - 1.0) > 1e-9 {
        (v.x / n, v.y / n, v.z / n)
    } else {
        (v.x, v.y, v.z)
    };
    let yaw = if x == 0.0 && y == 0.0 { 0.0 } else { atan2(y, x) };
    let pitch = asin(z.clamp(-1.0, 1.0));
    SphericalDirection::new(yaw, pitch)
}

/// Precomputed camera rotation: pitch about the lateral axis, then yaw about `+z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewRotation {
    cos_yaw: f64,
    sin_yaw: f64,
    cos_pitch: f64,
    sin_pitch: f64,
}

impl ViewRotation {
    pub fn new(yaw: f64, pitch: f64) -> Self {
        // evaluate on |pitch| so that ±pitch give exactly mirrored rotations
        let sp = sin(libm::fabs(pitch));
        Self {
            cos_yaw: cos(yaw),
            sin_yaw: sin(yaw),
            cos_pitch: cos(libm::fabs(pitch)),
            sin_pitch: if pitch.is_sign_negative() { -sp } else { sp },
        }
    }

    #[inline]
    pub fn apply_raw(&self, x: f64, y: f64, z: f64) -> (f64, f64, f64) {
        // positive pitch raises +x towards +z
        let px = self.cos_pitch * x - self.sin_pitch * z;
        let pz = self.sin_pitch * x + self.cos_pitch * z;
        let rx = self.cos_yaw * px - self.sin_yaw * y;
        let ry = self.sin_yaw * px + self.cos_yaw * y;
        (rx, ry, pz)
    }

    #[inline]
    pub fn apply(&self, v: UnitVector) -> UnitVector {
        let (x, y, z) = self.apply_raw(v.x, v.y, v.z);
        UnitVector::from_normalized(x, y, z)
    }
}

/// Rotates a camera-frame vector into the world frame for a view at (yaw, pitch).
pub fn rotate_view(v: UnitVector, yaw: f64, pitch: f64) -> UnitVector {
    ViewRotation::new(yaw, pitch).apply(v)
}

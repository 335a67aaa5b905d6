//! Resampling of equirectangular panoramas.
//!
//! All samplers quantize source positions to 1/256 pixel and interpolate in
//! integer arithmetic. Yaw is applied as an integer column offset in that
//! fixed-point space, so a yaw of `2πk/W` reads exactly the same source texels
//! as a `k`-column rotation of the panorama, and a pitch of `-p` on a
//! vertically mirrored panorama reads the mirrored texels of pitch `p`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};
use core::fmt;

use libm::{asin, atan, atan2, floor, round, sqrt, tan};

use crate::geometry::{wrap_angle, Dimensions, SphericalDirection, UnitVector, ViewRotation};
use crate::raster::{Channels, Color, EquirectImage, Raster};

const SUBPIXEL_BITS: u32 = 8;
const SUBPIXEL: i64 = 1 << SUBPIXEL_BITS;
const HALF_PIXEL: i64 = SUBPIXEL / 2;
const SUBPIXEL_MASK: i64 = SUBPIXEL - 1;

/// Largest horizontal field of view accepted, strictly below π.
pub const MAX_FOV: f64 = PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionError {
    NonFinite,
    FieldOfView(f64),
    Zoom(f64),
    FaceSize,
}

impl fmt::Display for ProjectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionError::NonFinite => f.write_str("view angles must be finite"),
            ProjectionError::FieldOfView(v) => {
                write!(f, "field of view {v} rad outside the open interval (0, π)")
            }
            ProjectionError::Zoom(z) => write!(f, "zoom {z} must be positive and finite"),
            ProjectionError::FaceSize => f.write_str("cube face size must be at least 1"),
        }
    }
}

/// Fixed-point bilinear sampler over an equirectangular raster.
#[derive(Clone, Copy)]
pub struct Sampler<'a> {
    raster: &'a Raster,
    width: i64,
    height: i64,
    lon_scale: f64,
    lat_scale: f64,
}

impl<'a> Sampler<'a> {
    pub fn new(img: &'a EquirectImage) -> Self {
        Self::for_raster(img.raster())
    }

    pub fn for_raster(raster: &'a Raster) -> Self {
        let d = raster.dims();
        let (w, h) = (d.width() as i64, d.height() as i64);
        Self {
            raster,
            width: w,
            height: h,
            lon_scale: (w * SUBPIXEL) as f64 / TAU,
            lat_scale: (h * SUBPIXEL) as f64 / PI,
        }
    }

    /// Horizontal offset of a yaw angle, in subpixels.
    #[inline]
    fn yaw_offset(&self, yaw: f64) -> i64 {
        round(wrap_angle(yaw) * self.lon_scale) as i64
    }

    /// Horizontal fixed-point position of a longitude in `[-π, π)`.
    #[inline]
    fn u_fixed(&self, yaw: f64) -> i64 {
        self.width * HALF_PIXEL + round(yaw * self.lon_scale) as i64
    }

    #[inline]
    fn v_fixed(&self, pitch: f64) -> i64 {
        self.height * HALF_PIXEL - round(pitch * self.lat_scale) as i64
    }

    /// Interpolates at a fixed-point position, writing one pixel into `out`.
    #[inline]
    fn sample_fixed(&self, u: i64, v: i64, out: &mut [u8]) {
        let tx = u - HALF_PIXEL;
        let ty = v - HALF_PIXEL;
        let fx = tx & SUBPIXEL_MASK;
        let fy = ty & SUBPIXEL_MASK;
        let c0 = (tx >> SUBPIXEL_BITS).rem_euclid(self.width);
        let c1 = if c0 + 1 == self.width { 0 } else { c0 + 1 };
        let r = ty >> SUBPIXEL_BITS;
        let r0 = r.clamp(0, self.height - 1);
        let r1 = (r + 1).clamp(0, self.height - 1);

        let n = self.raster.channels().count();
        let stride = self.width as usize * n;
        let px = self.raster.pixels();
        let i00 = r0 as usize * stride + c0 as usize * n;
        let i01 = r0 as usize * stride + c1 as usize * n;
        let i10 = r1 as usize * stride + c0 as usize * n;
        let i11 = r1 as usize * stride + c1 as usize * n;

        let w00 = ((SUBPIXEL - fx) * (SUBPIXEL - fy)) as u32;
        let w01 = (fx * (SUBPIXEL - fy)) as u32;
        let w10 = ((SUBPIXEL - fx) * fy) as u32;
        let w11 = (fx * fy) as u32;
        const ROUND: u32 = 1 << (2 * SUBPIXEL_BITS - 1);
        for (ch, o) in out.iter_mut().enumerate().take(n) {
            let acc = w00 * px[i00 + ch] as u32
                + w01 * px[i01 + ch] as u32
                + w10 * px[i10 + ch] as u32
                + w11 * px[i11 + ch] as u32;
            *o = ((acc + ROUND) >> (2 * SUBPIXEL_BITS)) as u8;
        }
    }

    pub fn sample(&self, s: SphericalDirection) -> Color {
        let mut c = [255u8; 4];
        self.sample_fixed(self.u_fixed(s.yaw()), self.v_fixed(s.pitch()), &mut c);
        c
    }
}

/// Bilinear sample of the panorama in direction `s`.
///
/// Columns wrap across the ±π seam and rows clamp at the poles.
pub fn sample_bilinear(img: &EquirectImage, s: SphericalDirection) -> Color {
    Sampler::new(img).sample(s)
}

/// Renders one output row at a time; the unit of internal parallelism.
pub trait RowRenderer {
    fn output_dims(&self) -> Dimensions;
    fn channels(&self) -> Channels;
    /// Fills `out` (one row, `width × channels` bytes) for output row `row`.
    fn render_row(&self, row: u32, out: &mut [u8]);

    fn render(&self) -> Raster {
        let d = self.output_dims();
        let stride = d.width() as usize * self.channels().count();
        let mut pixels = vec![0u8; stride * d.height() as usize];
        for (row, chunk) in pixels.chunks_exact_mut(stride).enumerate() {
            self.render_row(row as u32, chunk);
        }
        Raster::new(d, self.channels(), pixels).expect("row renderer produced a consistent buffer")
    }
}

/// Camera state for perspective renders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewParams {
    yaw: f64,
    pitch: f64,
    fov: f64,
    out: Dimensions,
}

impl ViewParams {
    /// Pitch is clamped to `[-π/2, π/2]`; `fov` is the horizontal field of view.
    pub fn new(yaw: f64, pitch: f64, fov: f64, out: Dimensions) -> Result<Self, ProjectionError> {
        if !yaw.is_finite() || !pitch.is_finite() {
            return Err(ProjectionError::NonFinite);
        }
        if !(fov > 0.0 && fov < MAX_FOV) {
            return Err(ProjectionError::FieldOfView(fov));
        }
        Ok(Self {
            yaw,
            pitch: pitch.clamp(-FRAC_PI_2, FRAC_PI_2),
            fov,
            out,
        })
    }

    pub fn from_degrees(
        yaw_deg: f64,
        pitch_deg: f64,
        fov_deg: f64,
        out: Dimensions,
    ) -> Result<Self, ProjectionError> {
        Self::new(yaw_deg.to_radians(), pitch_deg.to_radians(), fov_deg.to_radians(), out)
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn out(&self) -> Dimensions {
        self.out
    }
}

/// Gnomonic (rectilinear) view into a panorama.
pub struct PerspectiveRenderer<'a> {
    sampler: Sampler<'a>,
    channels: Channels,
    out: Dimensions,
    half_width: f64,
    pitch_only: ViewRotation,
    pitch: f64,
    yaw_offset: i64,
}

impl<'a> PerspectiveRenderer<'a> {
    pub fn new(img: &'a EquirectImage, view: &ViewParams) -> Self {
        let sampler = Sampler::new(img);
        Self {
            sampler,
            channels: img.raster().channels(),
            out: view.out,
            half_width: tan(view.fov / 2.0),
            pitch_only: ViewRotation::new(0.0, view.pitch),
            pitch: view.pitch,
            yaw_offset: sampler.yaw_offset(view.yaw),
        }
    }

    /// Source position for the output pixel center `(col, row)`.
    #[inline]
    fn source_position(&self, col: u32, row: u32) -> (i64, i64) {
        let w = self.out.width() as f64;
        let nx = 2 * col as i64 + 1 - self.out.width() as i64;
        let ny = self.out.height() as i64 - 2 * row as i64 - 1;
        if nx == 0 && ny == 0 {
            // the optical axis looks at (yaw, pitch) exactly
            let u = self.sampler.u_fixed(0.0) + self.yaw_offset;
            return (u, self.sampler.v_fixed(self.pitch));
        }
        // screen right is +y (increasing yaw), screen up is +z
        let sx = (nx as f64 / w) * self.half_width;
        let sy = (ny as f64 / w) * self.half_width;
        let norm = sqrt(1.0 + sx * sx + sy * sy);
        let (x, y, z) = self.pitch_only.apply_raw(1.0 / norm, sx / norm, sy / norm);
        let lon = if x == 0.0 && y == 0.0 { 0.0 } else { atan2(y, x) };
        let lat = asin(z.clamp(-1.0, 1.0));
        (
            self.sampler.u_fixed(lon) + self.yaw_offset,
            self.sampler.v_fixed(lat),
        )
    }
}

impl RowRenderer for PerspectiveRenderer<'_> {
    fn output_dims(&self) -> Dimensions {
        self.out
    }

    fn channels(&self) -> Channels {
        self.channels
    }

    fn render_row(&self, row: u32, out: &mut [u8]) {
        let n = self.channels.count();
        for (col, px) in out.chunks_exact_mut(n).enumerate() {
            let (u, v) = self.source_position(col as u32, row);
            self.sampler.sample_fixed(u, v, px);
        }
    }
}

/// Perspective view of the panorama. The output has the source's channel layout.
pub fn render_perspective(img: &EquirectImage, view: &ViewParams) -> Raster {
    PerspectiveRenderer::new(img, view).render()
}

/// Parameters of the stereographic "little planet" preview.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LittlePlanetParams {
    /// Radial scale in units of the output half-size; the horizon lands at `zoom`.
    pub zoom: f64,
    pub background: Color,
    /// Pixels closer than this to the zenith are painted with `background`.
    pub zenith_margin: f64,
}

impl Default for LittlePlanetParams {
    fn default() -> Self {
        Self {
            zoom: 0.5,
            background: [0, 0, 0, 255],
            zenith_margin: 1e-3,
        }
    }
}

/// Stereographic projection from the zenith onto the plane tangent at the nadir.
///
/// The output center shows the nadir. Screen up is yaw 0, screen right yaw π/2.
pub struct LittlePlanetRenderer<'a> {
    sampler: Sampler<'a>,
    channels: Channels,
    out: Dimensions,
    params: LittlePlanetParams,
    radius: f64,
}

impl<'a> LittlePlanetRenderer<'a> {
    pub fn new(
        img: &'a EquirectImage,
        out: Dimensions,
        params: LittlePlanetParams,
    ) -> Result<Self, ProjectionError> {
        if !(params.zoom > 0.0 && params.zoom.is_finite()) {
            return Err(ProjectionError::Zoom(params.zoom));
        }
        Ok(Self {
            sampler: Sampler::new(img),
            channels: img.raster().channels(),
            out,
            params,
            radius: out.width().min(out.height()) as f64 / 2.0,
        })
    }

    /// Direction shown at the output pixel center, or `None` for background.
    pub fn direction_at(&self, col: u32, row: u32) -> Option<SphericalDirection> {
        let dx = (2 * col as i64 + 1 - self.out.width() as i64) as f64 / 2.0 / self.radius;
        let dy = (self.out.height() as i64 - 2 * row as i64 - 1) as f64 / 2.0 / self.radius;
        let r = sqrt(dx * dx + dy * dy);
        let pitch = -FRAC_PI_2 + 2.0 * atan(r / self.params.zoom);
        if pitch > FRAC_PI_2 - self.params.zenith_margin {
            return None;
        }
        let yaw = if r == 0.0 { 0.0 } else { atan2(dx, dy) };
        SphericalDirection::new(yaw, pitch).ok()
    }
}

impl RowRenderer for LittlePlanetRenderer<'_> {
    fn output_dims(&self) -> Dimensions {
        self.out
    }

    fn channels(&self) -> Channels {
        self.channels
    }

    fn render_row(&self, row: u32, out: &mut [u8]) {
        let n = self.channels.count();
        for (col, px) in out.chunks_exact_mut(n).enumerate() {
            match self.direction_at(col as u32, row) {
                Some(dir) => {
                    let c = self.sampler.sample(dir);
                    px.copy_from_slice(&c[..n]);
                }
                None => px.copy_from_slice(&self.params.background[..n]),
            }
        }
    }
}

pub fn render_little_planet(
    img: &EquirectImage,
    out: Dimensions,
    zoom: f64,
) -> Result<Raster, ProjectionError> {
    let params = LittlePlanetParams {
        zoom,
        ..LittlePlanetParams::default()
    };
    render_little_planet_with(img, out, params)
}

pub fn render_little_planet_with(
    img: &EquirectImage,
    out: Dimensions,
    params: LittlePlanetParams,
) -> Result<Raster, ProjectionError> {
    Ok(LittlePlanetRenderer::new(img, out, params)?.render())
}

/// Cube faces in the conventional `+X, −X, +Y, −Y, +Z, −Z` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CubeFace {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] = [
        CubeFace::PosX,
        CubeFace::NegX,
        CubeFace::PosY,
        CubeFace::NegY,
        CubeFace::PosZ,
        CubeFace::NegZ,
    ];

    /// View (yaw, pitch) whose 90° perspective render produces this face.
    pub fn view_angles(self) -> (f64, f64) {
        match self {
            CubeFace::PosX => (0.0, 0.0),
            CubeFace::NegX => (-PI, 0.0),
            CubeFace::PosY => (FRAC_PI_2, 0.0),
            CubeFace::NegY => (-FRAC_PI_2, 0.0),
            CubeFace::PosZ => (0.0, FRAC_PI_2),
            CubeFace::NegZ => (0.0, -FRAC_PI_2),
        }
    }

    /// Short name used in URLs and file names.
    pub fn name(self) -> &'static str {
        match self {
            CubeFace::PosX => "px",
            CubeFace::NegX => "nx",
            CubeFace::PosY => "py",
            CubeFace::NegY => "ny",
            CubeFace::PosZ => "pz",
            CubeFace::NegZ => "nz",
        }
    }

    pub fn from_name(name: &str) -> Option<CubeFace> {
        CubeFace::ALL.into_iter().find(|f| f.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Six square faces sharing one size.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeMap {
    faces: Vec<Raster>,
    size: u32,
}

impl CubeMap {
    pub fn face(&self, face: CubeFace) -> &Raster {
        &self.faces[face.index()]
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn faces(&self) -> impl Iterator<Item = (CubeFace, &Raster)> {
        CubeFace::ALL.into_iter().zip(self.faces.iter())
    }

    /// Float bilinear lookup in the face the direction falls on, clamped at face edges.
    pub fn sample(&self, dir: SphericalDirection) -> Color {
        let d = crate::geometry::sphere_to_vec(dir);
        let mut best = (CubeFace::PosX, f64::NEG_INFINITY, ViewRotation::new(0.0, 0.0));
        for face in CubeFace::ALL {
            let (yaw, pitch) = face.view_angles();
            let rot = ViewRotation::new(yaw, pitch);
            let fwd = rot.apply(UnitVector::X);
            let dot = fwd.dot(&d);
            if dot > best.1 {
                best = (face, dot, rot);
            }
        }
        let (face, depth, rot) = best;
        let right = rot.apply(UnitVector::Y);
        let up = rot.apply(UnitVector::Z);
        let sx = right.dot(&d) / depth;
        let sy = up.dot(&d) / depth;
        let n = self.size as f64;
        let fu = (sx + 1.0) / 2.0 * n - 0.5;
        let fv = (1.0 - sy) / 2.0 * n - 0.5;
        bilinear_clamped(self.face(face), fu, fv)
    }
}

fn bilinear_clamped(r: &Raster, fu: f64, fv: f64) -> Color {
    let (w, h) = (r.dims().width() as i64, r.dims().height() as i64);
    let fu = fu.clamp(0.0, (w - 1) as f64);
    let fv = fv.clamp(0.0, (h - 1) as f64);
    let (c0, r0) = (floor(fu) as i64, floor(fv) as i64);
    let (ax, ay) = (fu - c0 as f64, fv - r0 as f64);
    let (c1, r1) = ((c0 + 1).min(w - 1), (r0 + 1).min(h - 1));
    let p = |c: i64, rr: i64| r.pixel(c as u32, rr as u32);
    let (p00, p01, p10, p11) = (p(c0, r0), p(c1, r0), p(c0, r1), p(c1, r1));
    let mut out = [255u8; 4];
    for ch in 0..4 {
        let top = p00[ch] as f64 * (1.0 - ax) + p01[ch] as f64 * ax;
        let bot = p10[ch] as f64 * (1.0 - ax) + p11[ch] as f64 * ax;
        out[ch] = round(top * (1.0 - ay) + bot * ay).clamp(0.0, 255.0) as u8;
    }
    out
}

/// Renders the six 90° faces of a cube around the viewer.
pub fn equirect_to_cubemap(img: &EquirectImage, face_size: u32) -> Result<CubeMap, ProjectionError> {
    let dims = Dimensions::new(face_size, face_size).map_err(|_| ProjectionError::FaceSize)?;
    let faces = CubeFace::ALL
        .into_iter()
        .map(|f| {
            let (yaw, pitch) = f.view_angles();
            let view = ViewParams::new(yaw, pitch, FRAC_PI_2, dims)?;
            Ok(render_perspective(img, &view))
        })
        .collect::<Result<Vec<_>, ProjectionError>>()?;
    Ok(CubeMap {
        faces,
        size: face_size,
    })
}

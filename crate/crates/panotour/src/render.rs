//! Row-parallel rendering on the rayon pool.
//!
//! Rows are independent and each is computed by the same code path as the
//! serial [`RowRenderer::render`], so output is bit-identical to it.

use rayon::prelude::*;

use panotour_core::projection::{LittlePlanetParams, LittlePlanetRenderer, PerspectiveRenderer, ProjectionError, RowRenderer};
use std::f64::consts::FRAC_PI_2;

use panotour_core::{CubeFace, Dimensions, EquirectImage, Raster, ViewParams};

pub fn render_parallel<R: RowRenderer + Sync>(r: &R) -> Raster {
    let d = r.output_dims();
    let stride = d.width() as usize * r.channels().count();
    let mut pixels = vec![0u8; stride * d.height() as usize];
    pixels
        .par_chunks_exact_mut(stride)
        .enumerate()
        .for_each(|(row, chunk)| r.render_row(row as u32, chunk));
    Raster::new(d, r.channels(), pixels).expect("row renderer produced a consistent buffer")
}

pub fn perspective(img: &EquirectImage, view: &ViewParams) -> Raster {
    render_parallel(&PerspectiveRenderer::new(img, view))
}

pub fn little_planet(img: &EquirectImage, out: Dimensions, params: LittlePlanetParams) -> Result<Raster, ProjectionError> {
    Ok(render_parallel(&LittlePlanetRenderer::new(img, out, params)?))
}

/// The six cube faces, each rendered row-parallel. Same pixels as [`equirect_to_cubemap`].
pub fn cube_faces(img: &EquirectImage, face_size: u32) -> Result<Vec<(CubeFace, Raster)>, ProjectionError> {
    let dims = Dimensions::new(face_size, face_size).map_err(|_| ProjectionError::FaceSize)?;
    CubeFace::ALL
        .into_iter()
        .map(|f| {
            let (yaw, pitch) = f.view_angles();
            let view = ViewParams::new(yaw, pitch, FRAC_PI_2, dims)?;
            Ok((f, perspective(img, &view)))
        })
        .collect()
}

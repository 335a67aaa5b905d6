//! Synthetic sample tour: three workshop areas linked as a storyboard.
//!
//! The panoramas are procedural (sky, floor grid, coloured equipment
//! columns, a nadir marker) so the fixture is small, deterministic and free
//! of licensing questions.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use panotour_core::media::EQUIRECTANGULAR;
use panotour_core::{Channels, Dimensions, Raster};

use crate::codec::{encode_jpeg, encode_png, inject_xmp_projection};

pub const SAMPLE_WIDTH: u32 = 1024;
pub const SAMPLE_HEIGHT: u32 = 512;
const JPEG_QUALITY: u8 = 85;

/// Procedural equirectangular scene; `tint` selects the area's colour scheme.
pub fn synthetic_panorama(w: u32, h: u32, tint: u8) -> Raster {
    let dims = Dimensions::new(w, h).expect("nonzero sample dimensions");
    let hue = [[200u8, 60, 40], [40, 150, 70], [50, 90, 200]][tint as usize % 3];
    Raster::from_fn(dims, Channels::Rgb, |c, r| {
        let yaw = (c as f64 + 0.5) / w as f64 * 2.0 * PI - PI;
        let pitch = PI / 2.0 - (r as f64 + 0.5) / h as f64 * PI;
        if pitch < -80f64.to_radians() {
            // nadir marker
            return [250, 250, 250, 255];
        }
        // equipment: six columns around the horizon
        let sector = ((yaw + PI) / (PI / 3.0)).floor();
        let within = (yaw + PI) - sector * (PI / 3.0);
        if pitch.abs() < 20f64.to_radians() && within < 0.25 {
            let k = sector as u8;
            return [hue[0] / 2 + k * 20, hue[1] / 2 + k * 15, hue[2] / 2 + k * 10, 255];
        }
        if pitch >= 0.0 {
            let t = (pitch / (PI / 2.0) * 255.0) as u8;
            [120u8.saturating_add(t / 3), 160u8.saturating_add(t / 4), 230, 255]
        } else {
            let grid = ((yaw * 12.0 / PI).floor() as i64 + (pitch * 24.0 / PI).floor() as i64).rem_euclid(2);
            let base = if grid == 0 { 90 } else { 130 };
            [base + hue[0] / 8, base + hue[1] / 8, base + hue[2] / 8, 255]
        }
    })
}

/// JPEG bytes of a sample panorama, tagged as equirectangular.
pub fn sample_panorama_jpeg(w: u32, h: u32, tint: u8) -> Vec<u8> {
    let jpeg = encode_jpeg(&synthetic_panorama(w, h, tint), JPEG_QUALITY);
    inject_xmp_projection(&jpeg, EQUIRECTANGULAR).expect("freshly encoded JPEG is well formed")
}

fn sample_picture() -> Vec<u8> {
    let dims = Dimensions::new(96, 64).expect("nonzero");
    encode_png(&Raster::from_fn(dims, Channels::Rgb, |c, r| {
        let on = (c / 8 + r / 8) % 2 == 0;
        if on {
            [200, 40, 40, 255]
        } else {
            [240, 240, 240, 255]
        }
    }))
}

pub const SAMPLE_MANIFEST: &str = r#"{
  "id": "machinery-workshop",
  "title": "Machinery workshop",
  "start_scene": "intro",
  "scenes": [
    {
      "id": "intro",
      "title": "Introduction area",
      "panorama": "panoramas/intro.jpg",
      "initial_view": { "yaw_deg": 0.0, "pitch_deg": 0.0, "fov_deg": 90.0 },
      "hotspots": [
        { "id": "welcome", "kind": "text", "yaw_deg": -30.0, "pitch_deg": 5.0, "title": "Welcome",
          "payload": "Start here: the introduction area covers workshop safety." },
        { "id": "to-medium", "kind": "link", "yaw_deg": 60.0, "pitch_deg": -5.0, "title": "Medium area",
          "payload": "medium" }
      ]
    },
    {
      "id": "medium",
      "title": "Medium area",
      "panorama": "panoramas/medium.jpg",
      "initial_view": { "yaw_deg": 45.0, "pitch_deg": -10.0, "fov_deg": 75.0 },
      "hotspots": [
        { "id": "lathe", "kind": "picture", "yaw_deg": 120.0, "pitch_deg": 0.0, "title": "Lathe controls",
          "payload": "pictures/lathe.png" },
        { "id": "lathe-video", "kind": "video", "yaw_deg": 135.0, "pitch_deg": 10.0, "title": "Operating the lathe",
          "payload": "https://www.youtube.com/watch?v=dQw4w9WgXcQ" },
        { "id": "back", "kind": "link", "yaw_deg": -120.0, "pitch_deg": -5.0, "title": "Introduction area",
          "payload": "intro" },
        { "id": "to-advance", "kind": "link", "yaw_deg": 0.0, "pitch_deg": -5.0, "title": "Advance area",
          "payload": "advance" }
      ]
    },
    {
      "id": "advance",
      "title": "Advance area",
      "panorama": "panoramas/advance.jpg",
      "initial_view": { "yaw_deg": -90.0, "pitch_deg": 0.0, "fov_deg": 100.0 },
      "hotspots": [
        { "id": "back", "kind": "link", "yaw_deg": 180.0, "pitch_deg": -5.0, "title": "Medium area",
          "payload": "medium" }
      ]
    }
  ]
}
"#;

/// Writes `tour.json` and `media/` under `dir` and returns the manifest path.
pub fn write_sample_tour(dir: &Path) -> io::Result<PathBuf> {
    let media = dir.join("media");
    fs::create_dir_all(media.join("panoramas"))?;
    fs::create_dir_all(media.join("pictures"))?;
    for (i, name) in ["intro", "medium", "advance"].iter().enumerate() {
        fs::write(
            media.join(format!("panoramas/{name}.jpg")),
            sample_panorama_jpeg(SAMPLE_WIDTH, SAMPLE_HEIGHT, i as u8),
        )?;
    }
    fs::write(media.join("pictures/lathe.png"), sample_picture())?;
    let manifest = dir.join("tour.json");
    fs::write(&manifest, SAMPLE_MANIFEST)?;
    Ok(manifest)
}

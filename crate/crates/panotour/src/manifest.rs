//! The tour manifest: a JSON document describing scenes and hotspots.
//!
//! ```json
//! {
//!   "id": "workshop",
//!   "title": "Machinery workshop",
//!   "start_scene": "intro",
//!   "scenes": [{
//!     "id": "intro",
//!     "title": "Introduction",
//!     "panorama": "intro.jpg",
//!     "initial_view": { "yaw_deg": 0.0, "pitch_deg": 0.0, "fov_deg": 90.0 },
//!     "hotspots": [{
//!       "id": "to-medium", "kind": "link", "yaw_deg": 30.0, "pitch_deg": -5.0,
//!       "title": "Medium area", "payload": "medium"
//!     }]
//!   }]
//! }
//! ```
//!
//! Angles are degrees in the file and radians in memory. Unknown fields are
//! ignored and reported as warnings. `title`, `initial_view` and `hotspots`
//! may be omitted; everything else is required.

use serde::Serialize;
use serde_json::{Map, Value};

use panotour_core::geometry::SphericalDirection;
use panotour_core::tour::{
    Hotspot, HotspotKind, HotspotPayload, InitialView, Scene, Tour, TourError, TourErrorKind,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ManifestError {
    #[error("manifest syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("manifest error at {path}: {message}")]
    Semantic { path: String, message: String },
}

impl ManifestError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ManifestError::Semantic {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// A field the parser does not know, located by JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestWarning {
    pub path: String,
}

impl std::fmt::Display for ManifestWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: unknown field ignored", self.path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedManifest {
    pub tour: Tour,
    pub warnings: Vec<ManifestWarning>,
}

pub fn parse_manifest(text: &str) -> Result<ParsedManifest, ManifestError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ManifestError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    let mut p = Parser { warnings: Vec::new() };
    let tour = p.tour(&root)?;
    Ok(ParsedManifest {
        tour,
        warnings: p.warnings,
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

struct Parser {
    warnings: Vec<ManifestWarning>,
}

impl Parser {
    fn object<'v>(&mut self, v: &'v Value, path: &str, known: &[&str]) -> Result<&'v Map<String, Value>, ManifestError> {
        let m = v
            .as_object()
            .ok_or_else(|| ManifestError::at(display(path), "expected an object"))?;
        for k in m.keys().filter(|k| !known.contains(&k.as_str())) {
            self.warnings.push(ManifestWarning {
                path: format!("{path}/{k}"),
            });
        }
        Ok(m)
    }

    fn tour(&mut self, v: &Value) -> Result<Tour, ManifestError> {
        let m = self.object(v, "", &["id", "title", "start_scene", "scenes"])?;
        let id = string(m, "", "id")?;
        let title = opt_string(m, "", "title")?;
        let start = string(m, "", "start_scene")?;
        let list = m
            .get("scenes")
            .ok_or_else(|| ManifestError::at("/scenes", "missing required field"))?
            .as_array()
            .ok_or_else(|| ManifestError::at("/scenes", "expected an array"))?;
        if list.is_empty() {
            return Err(ManifestError::at(
                "/start_scene",
                format!("start scene {start:?} cannot resolve: the scene list is empty"),
            ));
        }
        let mut scenes = Vec::with_capacity(list.len());
        for (i, s) in list.iter().enumerate() {
            let path = format!("/scenes/{i}");
            let scene = self.scene(s, &path)?;
            if let Some(j) = scenes.iter().position(|o: &Scene| o.id() == scene.id()) {
                return Err(ManifestError::at(
                    format!("{path}/id"),
                    format!("duplicate scene id {:?}, first used at /scenes/{j}", scene.id()),
                ));
            }
            scenes.push(scene);
        }
        if !scenes.iter().any(|s| s.id() == start) {
            return Err(ManifestError::at(
                "/start_scene",
                format!("start scene {start:?} is not a scene of this tour"),
            ));
        }
        Tour::new(id, title, start, scenes).map_err(|e| core_error("", e))
    }

    fn scene(&mut self, v: &Value, path: &str) -> Result<Scene, ManifestError> {
        let m = self.object(v, path, &["id", "title", "panorama", "initial_view", "hotspots"])?;
        let id = string(m, path, "id")?;
        let title = opt_string(m, path, "title")?;
        let panorama = string(m, path, "panorama")?;
        let view = match m.get("initial_view") {
            None => InitialView::default(),
            Some(v) => {
                let vp = format!("{path}/initial_view");
                let vm = self.object(v, &vp, &["yaw_deg", "pitch_deg", "fov_deg"])?;
                let yaw = number(vm, &vp, "yaw_deg")?;
                let pitch = pitch_deg(vm, &vp)?;
                let fov = number(vm, &vp, "fov_deg")?;
                if !(fov > 0.0 && fov < 180.0) {
                    return Err(ManifestError::at(
                        format!("{vp}/fov_deg"),
                        format!("field of view {fov} outside the open interval (0, 180)"),
                    ));
                }
                InitialView::new(yaw.to_radians(), pitch.to_radians(), fov.to_radians())
                    .map_err(|e| core_error(&vp, e))?
            }
        };
        let mut hotspots: Vec<Hotspot> = Vec::new();
        if let Some(list) = m.get("hotspots") {
            let hp = format!("{path}/hotspots");
            let list = list
                .as_array()
                .ok_or_else(|| ManifestError::at(&hp, "expected an array"))?;
            for (j, h) in list.iter().enumerate() {
                let p = format!("{hp}/{j}");
                let h = self.hotspot(h, &p)?;
                if let Some(k) = hotspots.iter().position(|o| o.id() == h.id()) {
                    return Err(ManifestError::at(
                        format!("{p}/id"),
                        format!("duplicate hotspot id {:?}, first used at {hp}/{k}", h.id()),
                    ));
                }
                hotspots.push(h);
            }
        }
        Scene::new(id, title, panorama, view, hotspots).map_err(|e| core_error(path, e))
    }

    fn hotspot(&mut self, v: &Value, path: &str) -> Result<Hotspot, ManifestError> {
        let m = self.object(v, path, &["id", "kind", "yaw_deg", "pitch_deg", "title", "payload"])?;
        let id = string(m, path, "id")?;
        let kind_name = string(m, path, "kind")?;
        let kind = HotspotKind::parse(&kind_name).ok_or_else(|| {
            ManifestError::at(
                format!("{path}/kind"),
                format!("unknown hotspot kind {kind_name:?} (expected picture, video, text or link)"),
            )
        })?;
        let yaw = number(m, path, "yaw_deg")?;
        let pitch = pitch_deg(m, path)?;
        let title = opt_string(m, path, "title")?;
        let payload = string(m, path, "payload")?;
        let dir = SphericalDirection::from_degrees(yaw, pitch)
            .map_err(|e| ManifestError::at(format!("{path}/yaw_deg"), e.to_string()))?;
        Hotspot::new(id, title, dir, HotspotPayload::new(kind, payload)).map_err(|e| core_error(path, e))
    }
}

fn display(path: &str) -> &str {
    if path.is_empty() {
        "/"
    } else {
        path
    }
}

fn field<'v>(m: &'v Map<String, Value>, path: &str, key: &str) -> Result<&'v Value, ManifestError> {
    m.get(key)
        .ok_or_else(|| ManifestError::at(format!("{path}/{key}"), "missing required field"))
}

fn string(m: &Map<String, Value>, path: &str, key: &str) -> Result<String, ManifestError> {
    field(m, path, key)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| ManifestError::at(format!("{path}/{key}"), "expected a string"))
}

fn opt_string(m: &Map<String, Value>, path: &str, key: &str) -> Result<String, ManifestError> {
    match m.get(key) {
        None => Ok(String::new()),
        Some(_) => string(m, path, key),
    }
}

fn number(m: &Map<String, Value>, path: &str, key: &str) -> Result<f64, ManifestError> {
    field(m, path, key)?
        .as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ManifestError::at(format!("{path}/{key}"), "expected a finite number"))
}

fn pitch_deg(m: &Map<String, Value>, path: &str) -> Result<f64, ManifestError> {
    let p = number(m, path, "pitch_deg")?;
    if !(-90.0..=90.0).contains(&p) {
        return Err(ManifestError::at(
            format!("{path}/pitch_deg"),
            format!("pitch {p} outside [-90, 90]"),
        ));
    }
    Ok(p)
}

fn core_error(prefix: &str, e: TourError) -> ManifestError {
    let field = match &e.kind {
        TourErrorKind::BadVideoUrl(_) | TourErrorKind::BadMediaRef(_) | TourErrorKind::EmptyLinkTarget
            if e.path == "payload" =>
        {
            "payload"
        }
        _ => e.path.as_str(),
    };
    let path = if field.is_empty() {
        display(prefix).to_string()
    } else {
        format!("{prefix}/{field}")
    };
    let message = e.to_string();
    let message = message.split_once(": ").map(|(_, m)| m.to_string()).unwrap_or(message);
    ManifestError::Semantic { path, message }
}

/// A degree value whose conversion back to radians reproduces `rad` exactly.
///
/// Prefers the shortest decimal form; falls back to the nearest double when no
/// degree value maps onto `rad`, which can only happen for radians that did
/// not come from a degree value in the first place.
pub fn degrees_for(rad: f64) -> f64 {
    let guess = rad.to_degrees();
    for digits in 0..17 {
        if let Ok(d) = format!("{guess:.digits$e}").parse::<f64>() {
            if d.to_radians() == rad {
                return d;
            }
        }
    }
    let (mut lo, mut hi) = (guess, guess);
    for _ in 0..8 {
        lo = lo.next_down();
        hi = hi.next_up();
        for d in [lo, hi] {
            if d.to_radians() == rad {
                return d;
            }
        }
    }
    guess
}

#[derive(Serialize)]
struct TourOut<'a> {
    id: &'a str,
    title: &'a str,
    start_scene: &'a str,
    scenes: Vec<SceneOut<'a>>,
}

#[derive(Serialize)]
struct SceneOut<'a> {
    id: &'a str,
    title: &'a str,
    panorama: &'a str,
    initial_view: ViewOut,
    hotspots: Vec<HotspotOut<'a>>,
}

#[derive(Serialize)]
struct ViewOut {
    yaw_deg: f64,
    pitch_deg: f64,
    fov_deg: f64,
}

#[derive(Serialize)]
struct HotspotOut<'a> {
    id: &'a str,
    kind: &'static str,
    yaw_deg: f64,
    pitch_deg: f64,
    title: &'a str,
    payload: &'a str,
}

/// Canonical text: fixed field order, scenes and hotspots in model order, trailing newline.
pub fn serialize_manifest(t: &Tour) -> String {
    let out = TourOut {
        id: t.id(),
        title: t.title(),
        start_scene: t.start_scene(),
        scenes: t
            .scenes()
            .iter()
            .map(|s| {
                let v = s.initial_view();
                SceneOut {
                    id: s.id(),
                    title: s.title(),
                    panorama: s.panorama(),
                    initial_view: ViewOut {
                        yaw_deg: degrees_for(v.yaw()),
                        pitch_deg: degrees_for(v.pitch()),
                        fov_deg: degrees_for(v.fov()),
                    },
                    hotspots: s
                        .hotspots()
                        .iter()
                        .map(|h| HotspotOut {
                            id: h.id(),
                            kind: h.kind().as_str(),
                            yaw_deg: degrees_for(h.direction().yaw()),
                            pitch_deg: degrees_for(h.direction().pitch()),
                            title: h.title(),
                            payload: h.payload().value(),
                        })
                        .collect(),
                }
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("manifest values are always serializable");
    s.push('\n');
    s
}

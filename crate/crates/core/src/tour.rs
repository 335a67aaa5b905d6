//! The scenario graph: scenes linked into a storyboard, each carrying hotspots.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use core::fmt;

use crate::geometry::SphericalDirection;
pub use crate::media::Severity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HotspotKind {
    Picture,
    Video,
    Text,
    Link,
}

impl HotspotKind {
    pub const ALL: [HotspotKind; 4] = [
        HotspotKind::Picture,
        HotspotKind::Video,
        HotspotKind::Text,
        HotspotKind::Link,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HotspotKind::Picture => "picture",
            HotspotKind::Video => "video",
            HotspotKind::Text => "text",
            HotspotKind::Link => "link",
        }
    }

    pub fn parse(s: &str) -> Option<HotspotKind> {
        HotspotKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for HotspotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hotspot content. The variant determines the hotspot kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HotspotPayload {
    /// Media reference relative to the media directory.
    Picture(String),
    /// External stream URL; never copied into a bundle.
    Video(String),
    Text(String),
    /// Target scene id.
    Link(String),
}

impl HotspotPayload {
    pub fn new(kind: HotspotKind, value: String) -> Self {
        match kind {
            HotspotKind::Picture => HotspotPayload::Picture(value),
            HotspotKind::Video => HotspotPayload::Video(value),
            HotspotKind::Text => HotspotPayload::Text(value),
            HotspotKind::Link => HotspotPayload::Link(value),
        }
    }

    pub fn kind(&self) -> HotspotKind {
        match self {
            HotspotPayload::Picture(_) => HotspotKind::Picture,
            HotspotPayload::Video(_) => HotspotKind::Video,
            HotspotPayload::Text(_) => HotspotKind::Text,
            HotspotPayload::Link(_) => HotspotKind::Link,
        }
    }

    pub fn value(&self) -> &str {
        match self {
            HotspotPayload::Picture(v)
            | HotspotPayload::Video(v)
            | HotspotPayload::Text(v)
            | HotspotPayload::Link(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TourErrorKind {
    EmptyId,
    DuplicateScene(String),
    DuplicateHotspot(String),
    NoScenes,
    UnknownStartScene(String),
    NonFiniteAngle,
    PitchOutOfRange(f64),
    FovOutOfRange(f64),
    BadMediaRef(String),
    BadVideoUrl(String),
    EmptyLinkTarget,
}

/// Structural violation, located by a `/`-separated path such as `scenes/intro/hotspots/h1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TourError {
    pub path: String,
    pub kind: TourErrorKind,
}

impl TourError {
    fn at(path: impl Into<String>, kind: TourErrorKind) -> Self {
        Self {
            path: path.into(),
            kind,
        }
    }
}

impl fmt::Display for TourError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", if self.path.is_empty() { "<tour>" } else { &self.path })?;
        match &self.kind {
            TourErrorKind::EmptyId => f.write_str("identifier must not be empty"),
            TourErrorKind::DuplicateScene(id) => write!(f, "duplicate scene id {id:?}"),
            TourErrorKind::DuplicateHotspot(id) => write!(f, "duplicate hotspot id {id:?}"),
            TourErrorKind::NoScenes => f.write_str("tour has no scenes"),
            TourErrorKind::UnknownStartScene(id) => write!(f, "start scene {id:?} is not a scene of this tour"),
            TourErrorKind::NonFiniteAngle => f.write_str("angle is not finite"),
            TourErrorKind::PitchOutOfRange(p) => write!(f, "pitch {}° outside [-90°, 90°]", p.to_degrees()),
            TourErrorKind::FovOutOfRange(v) => write!(f, "field of view {}° outside (0°, 180°)", v.to_degrees()),
            TourErrorKind::BadMediaRef(r) => write!(f, "media reference {r:?} must be a non-empty relative path"),
            TourErrorKind::BadVideoUrl(u) => write!(f, "video payload {u:?} must be an http(s) URL"),
            TourErrorKind::EmptyLinkTarget => f.write_str("link hotspot has no target scene"),
        }
    }
}

/// A relative, forward-slash path with no `..`, `.` or empty components.
pub fn is_valid_media_ref(r: &str) -> bool {
    !r.is_empty()
        && !r.starts_with('/')
        && !r.contains('\\')
        && !r.contains('\0')
        && r.split('/').all(|c| !c.is_empty() && c != "." && c != "..")
}

fn check_pitch(path: &str, pitch: f64) -> Result<(), TourError> {
    if !pitch.is_finite() {
        return Err(TourError::at(path, TourErrorKind::NonFiniteAngle));
    }
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&pitch) {
        return Err(TourError::at(path, TourErrorKind::PitchOutOfRange(pitch)));
    }
    Ok(())
}

/// Scene entry view, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialView {
    yaw: f64,
    pitch: f64,
    fov: f64,
}

impl InitialView {
    pub fn new(yaw: f64, pitch: f64, fov: f64) -> Result<Self, TourError> {
        if !yaw.is_finite() || !fov.is_finite() {
            return Err(TourError::at("initial_view", TourErrorKind::NonFiniteAngle));
        }
        check_pitch("initial_view", pitch)?;
        if !(fov > 0.0 && fov < PI) {
            return Err(TourError::at("initial_view", TourErrorKind::FovOutOfRange(fov)));
        }
        Ok(Self {
            yaw: crate::geometry::wrap_angle(yaw),
            pitch,
            fov,
        })
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
}

impl Default for InitialView {
    fn default() -> Self {
        Self {
            yaw: 0.0,
            pitch: 0.0,
            fov: FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hotspot {
    id: String,
    title: String,
    direction: SphericalDirection,
    payload: HotspotPayload,
}

impl Hotspot {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        direction: SphericalDirection,
        payload: HotspotPayload,
    ) -> Result<Self, TourError> {
        let id = id.into();
        if id.is_empty() {
            return Err(TourError::at("", TourErrorKind::EmptyId));
        }
        match &payload {
            HotspotPayload::Picture(r) if !is_valid_media_ref(r) => {
                return Err(TourError::at("payload", TourErrorKind::BadMediaRef(r.clone())))
            }
            HotspotPayload::Video(u) if !is_http_url(u) => {
                return Err(TourError::at("payload", TourErrorKind::BadVideoUrl(u.clone())))
            }
            HotspotPayload::Link(t) if t.is_empty() => {
                return Err(TourError::at("payload", TourErrorKind::EmptyLinkTarget))
            }
            _ => {}
        }
        Ok(Self {
            id,
            title: title.into(),
            direction,
            payload,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn direction(&self) -> SphericalDirection {
        self.direction
    }

    pub fn kind(&self) -> HotspotKind {
        self.payload.kind()
    }

    pub fn payload(&self) -> &HotspotPayload {
        &self.payload
    }
}

fn is_http_url(u: &str) -> bool {
    let rest = u
        .strip_prefix("https://")
        .or_else(|| u.strip_prefix("http://"));
    matches!(rest, Some(host) if !host.is_empty() && !host.starts_with('/') && !host.contains(char::is_whitespace))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    id: String,
    title: String,
    panorama: String,
    initial_view: InitialView,
    hotspots: Vec<Hotspot>,
}

impl Scene {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        panorama: impl Into<String>,
        initial_view: InitialView,
        hotspots: Vec<Hotspot>,
    ) -> Result<Self, TourError> {
        let id = id.into();
        if id.is_empty() {
            return Err(TourError::at("", TourErrorKind::EmptyId));
        }
        let panorama = panorama.into();
        if !is_valid_media_ref(&panorama) {
            return Err(TourError::at("panorama", TourErrorKind::BadMediaRef(panorama)));
        }
        let mut seen = BTreeSet::new();
        for h in &hotspots {
            if !seen.insert(h.id.as_str()) {
                return Err(TourError::at(
                    format!("hotspots/{}", h.id),
                    TourErrorKind::DuplicateHotspot(h.id.clone()),
                ));
            }
        }
        Ok(Self {
            id,
            title: title.into(),
            panorama,
            initial_view,
            hotspots,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn panorama(&self) -> &str {
        &self.panorama
    }

    pub fn initial_view(&self) -> InitialView {
        self.initial_view
    }

    pub fn hotspots(&self) -> &[Hotspot] {
        &self.hotspots
    }

    /// Targets of this scene's link hotspots, in hotspot order.
    pub fn links(&self) -> impl Iterator<Item = &str> {
        self.hotspots.iter().filter_map(|h| match &h.payload {
            HotspotPayload::Link(t) => Some(t.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    id: String,
    title: String,
    start_scene: String,
    scenes: Vec<Scene>,
}

impl Tour {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        start_scene: impl Into<String>,
        scenes: Vec<Scene>,
    ) -> Result<Self, TourError> {
        let id = id.into();
        if id.is_empty() {
            return Err(TourError::at("id", TourErrorKind::EmptyId));
        }
        let mut seen = BTreeSet::new();
        for s in &scenes {
            if !seen.insert(s.id.as_str()) {
                return Err(TourError::at(
                    format!("scenes/{}", s.id),
                    TourErrorKind::DuplicateScene(s.id.clone()),
                ));
            }
        }
        let start_scene = start_scene.into();
        if scenes.is_empty() {
            return Err(TourError::at("scenes", TourErrorKind::NoScenes));
        }
        if !seen.contains(start_scene.as_str()) {
            return Err(TourError::at("start_scene", TourErrorKind::UnknownStartScene(start_scene)));
        }
        Ok(Self {
            id,
            title: title.into(),
            start_scene,
            scenes,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn start_scene(&self) -> &str {
        &self.start_scene
    }

    pub fn scenes(&self) -> &[Scene] {
        &self.scenes
    }

    pub fn scene(&self, id: &str) -> Option<&Scene> {
        self.scenes.iter().find(|s| s.id == id)
    }

    /// Every media reference the tour needs: panoramas and picture payloads.
    pub fn media_refs(&self) -> BTreeSet<&str> {
        let mut refs = BTreeSet::new();
        for s in &self.scenes {
            refs.insert(s.panorama.as_str());
            for h in &s.hotspots {
                if let HotspotPayload::Picture(r) = &h.payload {
                    refs.insert(r.as_str());
                }
            }
        }
        refs
    }

    /// Scenes reachable from the start scene by following link hotspots breadth-first.
    pub fn reachable_scenes(&self) -> BTreeSet<&str> {
        let index: BTreeMap<&str, &Scene> = self.scenes.iter().map(|s| (s.id.as_str(), s)).collect();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(self.start_scene.as_str());
        queue.push_back(self.start_scene.as_str());
        while let Some(id) = queue.pop_front() {
            let Some(scene) = index.get(id) else { continue };
            for target in scene.links() {
                if index.contains_key(target) && seen.insert(target) {
                    queue.push_back(target);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TourCode {
    #[cfg_attr(feature = "serde", serde(rename = "DANGLING_LINK"))]
    DanglingLink,
    #[cfg_attr(feature = "serde", serde(rename = "MISSING_MEDIA"))]
    MissingMedia,
    #[cfg_attr(feature = "serde", serde(rename = "UNREACHABLE"))]
    Unreachable,
    #[cfg_attr(feature = "serde", serde(rename = "OVERLAP"))]
    Overlap,
}

impl TourCode {
    pub fn as_str(self) -> &'static str {
        match self {
            TourCode::DanglingLink => "DANGLING_LINK",
            TourCode::MissingMedia => "MISSING_MEDIA",
            TourCode::Unreachable => "UNREACHABLE",
            TourCode::Overlap => "OVERLAP",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            TourCode::DanglingLink | TourCode::MissingMedia => Severity::Error,
            TourCode::Unreachable | TourCode::Overlap => Severity::Warning,
        }
    }
}

impl fmt::Display for TourCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TourFinding {
    pub location: String,
    pub code: TourCode,
    pub severity: Severity,
    pub message: String,
}

/// Findings sorted by location then code, so scene order never affects the report.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TourValidationReport {
    findings: Vec<TourFinding>,
}

impl TourValidationReport {
    pub fn ok(&self) -> bool {
        self.findings.iter().all(|f| f.severity != Severity::Error)
    }

    pub fn findings(&self) -> &[TourFinding] {
        &self.findings
    }

    pub fn with_code(&self, code: TourCode) -> impl Iterator<Item = &TourFinding> {
        self.findings.iter().filter(move |f| f.code == code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TourValidationOptions {
    /// Hotspots closer than this many degrees in one scene draw an OVERLAP warning.
    pub overlap_threshold_deg: f64,
}

impl Default for TourValidationOptions {
    fn default() -> Self {
        Self {
            overlap_threshold_deg: 2.0,
        }
    }
}

pub fn validate_tour(tour: &Tour, available_media: &BTreeSet<String>) -> TourValidationReport {
    validate_tour_with(tour, available_media, TourValidationOptions::default())
}

pub fn validate_tour_with(
    tour: &Tour,
    available_media: &BTreeSet<String>,
    options: TourValidationOptions,
) -> TourValidationReport {
    let scene_ids: BTreeSet<&str> = tour.scenes.iter().map(|s| s.id.as_str()).collect();
    let reachable = tour.reachable_scenes();
    let threshold = options.overlap_threshold_deg.to_radians();
    let mut findings = Vec::new();
    let mut push = |location: String, code: TourCode, message: String| {
        findings.push(TourFinding {
            location,
            code,
            severity: code.severity(),
            message,
        })
    };

    for scene in &tour.scenes {
        let base = format!("scenes/{}", scene.id);
        if !available_media.contains(&scene.panorama) {
            push(
                format!("{base}/panorama"),
                TourCode::MissingMedia,
                format!("panorama {:?} not found in media", scene.panorama),
            );
        }
        if !reachable.contains(scene.id.as_str()) {
            push(
                base.clone(),
                TourCode::Unreachable,
                format!("scene {:?} cannot be reached from {:?}", scene.id, tour.start_scene),
            );
        }
        for h in &scene.hotspots {
            let loc = format!("{base}/hotspots/{}", h.id);
            match &h.payload {
                HotspotPayload::Link(target) if !scene_ids.contains(target.as_str()) => push(
                    loc,
                    TourCode::DanglingLink,
                    format!("link target {target:?} is not a scene"),
                ),
                HotspotPayload::Picture(r) if !available_media.contains(r) => push(
                    loc,
                    TourCode::MissingMedia,
                    format!("picture {r:?} not found in media"),
                ),
                _ => {}
            }
        }
        for (i, a) in scene.hotspots.iter().enumerate() {
            for b in &scene.hotspots[i + 1..] {
                let sep = a.direction.angle_to(&b.direction);
                if sep < threshold {
                    let (first, second) = if a.id <= b.id { (a, b) } else { (b, a) };
                    push(
                        format!("{base}/hotspots/{}", first.id),
                        TourCode::Overlap,
                        format!(
                            "hotspots {:?} and {:?} are {:.3}° apart (minimum {}°)",
                            first.id,
                            second.id,
                            sep.to_degrees(),
                            options.overlap_threshold_deg
                        ),
                    );
                }
            }
        }
    }
    findings.sort();
    TourValidationReport { findings }
}

impl fmt::Display for TourFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}: {}", self.severity, self.code, self.location, self.message)
    }
}

//! Compiling a manifest and a media directory into a servable bundle.
//!
//! Layout of a bundle directory:
//!
//! ```text
//! manifest.resolved          canonical manifest
//! inventory                  byte inventory (JSON)
//! scenes/<id>/pano.<ext>     panorama, byte-for-byte copy of the source
//! scenes/<id>/preview.png    512×512 little-planet preview
//! scenes/<id>/cube_<f>.png   cube faces px nx py ny pz nz (opt-in)
//! media/<ref>                picture payloads
//! viewer/                    browser client
//! digest                     SHA-256 over every other file, plus creation time
//! ```
//!
//! The digest covers file paths and contents only, so recompiling identical
//! inputs reproduces it even though `created_at` changes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use panotour_core::media::{validate_panorama, MediaCode, MediaFinding};
use panotour_core::projection::LittlePlanetParams;
use panotour_core::tour::{validate_tour_with, HotspotPayload, TourFinding, TourValidationOptions};
use panotour_core::{AssetCategory, ByteInventory, CubeFace, Dimensions, InventoryRow, MediaLimits, Severity, Tour};

use crate::codec::{decode_image, encode_png, DecodeError};
use crate::manifest::{parse_manifest, serialize_manifest, ManifestError, ManifestWarning};
use crate::render;
use crate::viewer;

pub const MANIFEST_FILE: &str = "manifest.resolved";
pub const INVENTORY_FILE: &str = "inventory";
pub const DIGEST_FILE: &str = "digest";
pub const PREVIEW_SIZE: u32 = 512;

/// A validation outcome with a stable code from the media or tour rules.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub location: String,
    pub code: String,
    pub severity: Severity,
    pub message: String,
}

impl Finding {
    pub fn from_media(location: impl Into<String>, f: &MediaFinding) -> Self {
        Finding {
            location: location.into(),
            code: f.code.as_str().to_string(),
            severity: f.severity,
            message: f.message.clone(),
        }
    }

    pub fn from_tour(f: &TourFinding) -> Self {
        Finding {
            location: f.location.clone(),
            code: f.code.as_str().to_string(),
            severity: f.severity,
            message: f.message.clone(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {}: {}", self.severity, self.code, self.location, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("validation failed with {} error(s)", .0.iter().filter(|f| f.is_error()).count())]
    Findings(Vec<Finding>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Decode { path: PathBuf, source: DecodeError },
    #[error("scene id {0:?} cannot be used as a directory name (allowed: letters, digits, '.', '_', '-')")]
    SceneId(String),
    #[error("refusing to replace {0}: it exists and is not a bundle")]
    OutDir(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CompileError + '_ {
    move |source| CompileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    pub cubemaps: bool,
    /// Downgrades a missing or wrong projection tag to a warning.
    pub force: bool,
    pub limits: MediaLimits,
    pub tour: TourValidationOptions,
    /// Cube face edge; defaults to half the panorama height.
    pub face_size: Option<u32>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            cubemaps: false,
            force: false,
            limits: MediaLimits::default(),
            tour: TourValidationOptions::default(),
            face_size: None,
        }
    }
}

/// Reads the panorama and picture files referenced by `tour` that exist under `media_dir`.
pub fn available_media(tour: &Tour, media_dir: &Path) -> BTreeSet<String> {
    tour.media_refs()
        .into_iter()
        .filter(|r| media_dir.join(r).is_file())
        .map(str::to_string)
        .collect()
}

fn safe_scene_id(id: &str) -> bool {
    id != "."
        && id != ".."
        && !id.is_empty()
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

struct SceneAssets {
    files: Vec<(String, AssetCategory, Vec<u8>)>,
    findings: Vec<Finding>,
}

fn scene_assets(
    scene: &panotour_core::Scene,
    media_dir: &Path,
    options: &CompileOptions,
) -> Result<SceneAssets, CompileError> {
    let src = media_dir.join(scene.panorama());
    let bytes = fs::read(&src).map_err(io_err(&src))?;
    let decoded = decode_image(&bytes).map_err(|source| CompileError::Decode {
        path: src.clone(),
        source,
    })?;
    let mut report = validate_panorama(&decoded.metadata, &options.limits);
    if options.force {
        report.downgrade(MediaCode::Xmp);
    }
    let location = format!("scenes/{}/panorama", scene.id());
    let findings: Vec<Finding> = report.findings().iter().map(|f| Finding::from_media(&location, f)).collect();
    if !report.ok() {
        return Ok(SceneAssets {
            files: Vec::new(),
            findings,
        });
    }

    let dir = format!("scenes/{}", scene.id());
    let mut files = Vec::new();
    let preview = render::little_planet(
        &decoded.image,
        Dimensions::new(PREVIEW_SIZE, PREVIEW_SIZE).expect("nonzero"),
        LittlePlanetParams::default(),
    )
    .expect("default little-planet parameters are valid");
    files.push((
        format!("{dir}/pano.{}", decoded.metadata.format.extension()),
        AssetCategory::Panorama,
        bytes,
    ));
    files.push((format!("{dir}/preview.png"), AssetCategory::Preview, encode_png(&preview)));
    if options.cubemaps {
        let size = options
            .face_size
            .unwrap_or_else(|| (decoded.image.dims().height() / 2).max(1));
        let faces = render::cube_faces(&decoded.image, size).map_err(|e| CompileError::Io {
            path: src.clone(),
            source: io::Error::new(io::ErrorKind::InvalidInput, e.to_string()),
        })?;
        for (face, raster) in faces {
            files.push((
                format!("{dir}/cube_{}.png", face.name()),
                AssetCategory::Cubemap,
                encode_png(&raster),
            ));
        }
    }
    Ok(SceneAssets { files, findings })
}

/// Result of a successful compile: the bundle plus non-fatal findings.
#[derive(Debug)]
pub struct Compiled {
    pub bundle: TourBundle,
    pub warnings: Vec<Finding>,
    pub manifest_warnings: Vec<ManifestWarning>,
}

pub fn compile(
    manifest_path: &Path,
    media_dir: &Path,
    out_dir: &Path,
    options: &CompileOptions,
) -> Result<Compiled, CompileError> {
    let text = fs::read_to_string(manifest_path).map_err(io_err(manifest_path))?;
    let parsed = parse_manifest(&text)?;
    let tour = parsed.tour;
    if let Some(s) = tour.scenes().iter().find(|s| !safe_scene_id(s.id())) {
        return Err(CompileError::SceneId(s.id().to_string()));
    }
    let media = available_media(&tour, media_dir);
    let mut findings: Vec<Finding> = validate_tour_with(&tour, &media, options.tour).findings().iter().map(Finding::from_tour).collect();

    let per_scene: Vec<Result<Option<SceneAssets>, CompileError>> = tour
        .scenes()
        .par_iter()
        .map(|s| {
            if media.contains(s.panorama()) {
                scene_assets(s, media_dir, options).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect();
    let mut scene_files = Vec::new();
    for r in per_scene {
        if let Some(a) = r? {
            findings.extend(a.findings);
            scene_files.push(a.files);
        } else {
            scene_files.push(Vec::new());
        }
    }
    findings.sort();
    if findings.iter().any(Finding::is_error) {
        return Err(CompileError::Findings(findings));
    }

    let mut files: Vec<(String, AssetCategory, Vec<u8>)> = Vec::new();
    files.push(("viewer/index.html".into(), AssetCategory::Document, viewer::INDEX_HTML.as_bytes().to_vec()));
    files.push((MANIFEST_FILE.into(), AssetCategory::Document, serialize_manifest(&tour).into_bytes()));
    files.push(("viewer/viewer.js".into(), AssetCategory::ViewerScript, viewer::VIEWER_JS.as_bytes().to_vec()));
    files.push(("viewer/viewer.css".into(), AssetCategory::ViewerStyle, viewer::VIEWER_CSS.as_bytes().to_vec()));
    // start scene first so the load model sees its panorama as the first one
    let start = tour.scenes().iter().position(|s| s.id() == tour.start_scene()).unwrap_or(0);
    let mut order: Vec<usize> = (0..tour.scenes().len()).collect();
    order.remove(start);
    order.insert(0, start);
    for i in order {
        files.append(&mut scene_files[i]);
    }
    let pictures: BTreeSet<&str> = tour
        .scenes()
        .iter()
        .flat_map(|s| s.hotspots())
        .filter_map(|h| match h.payload() {
            HotspotPayload::Picture(r) => Some(r.as_str()),
            _ => None,
        })
        .collect();
    for r in pictures {
        let src = media_dir.join(r);
        let bytes = fs::read(&src).map_err(io_err(&src))?;
        files.push((format!("media/{r}"), AssetCategory::Picture, bytes));
    }

    let inventory = ByteInventory::new(
        files
            .iter()
            .map(|(p, c, b)| InventoryRow {
                path: p.clone(),
                category: *c,
                bytes: b.len() as u64,
            })
            .collect(),
    );
    files.push((INVENTORY_FILE.into(), AssetCategory::Document, inventory_json(&inventory).into_bytes()));

    let content_digest = digest_files(files.iter().map(|(p, _, b)| (p.as_str(), b.as_slice())));
    let created_at = created_at();
    let record = DigestRecord {
        algorithm: "sha256".into(),
        content_digest: content_digest.clone(),
        created_at,
    };
    let mut digest_text = serde_json::to_string_pretty(&record).expect("serializable");
    digest_text.push('\n');
    files.push((DIGEST_FILE.into(), AssetCategory::Document, digest_text.into_bytes()));

    write_tree(out_dir, &files)?;
    let bundle = TourBundle::from_parts(out_dir.to_path_buf(), tour, inventory, content_digest, created_at);
    Ok(Compiled {
        bundle,
        warnings: findings,
        manifest_warnings: parsed.warnings,
    })
}

fn created_at() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

/// Writes into a sibling staging directory, then swaps it into place.
fn write_tree(out_dir: &Path, files: &[(String, AssetCategory, Vec<u8>)]) -> Result<(), CompileError> {
    if out_dir.exists() {
        let is_empty = fs::read_dir(out_dir).map_err(io_err(out_dir))?.next().is_none();
        if !is_empty && !out_dir.join(DIGEST_FILE).is_file() {
            return Err(CompileError::OutDir(out_dir.to_path_buf()));
        }
    }
    let name = out_dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "bundle".into());
    let parent = out_dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
    }
    for (rel, _, bytes) in files {
        let p = staging.join(rel);
        if let Some(d) = p.parent() {
            fs::create_dir_all(d).map_err(io_err(d))?;
        }
        fs::write(&p, bytes).map_err(io_err(&p))?;
    }
    if out_dir.exists() {
        fs::remove_dir_all(out_dir).map_err(io_err(out_dir))?;
    }
    fs::rename(&staging, out_dir).map_err(io_err(out_dir))?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct InventoryFile {
    rows: Vec<InventoryRow>,
    totals: BTreeMap<String, u64>,
    grand_total: u64,
}

fn inventory_json(inv: &ByteInventory) -> String {
    let f = InventoryFile {
        rows: inv.rows().to_vec(),
        totals: inv.totals().into_iter().map(|(c, b)| (c.as_str().to_string(), b)).collect(),
        grand_total: inv.grand_total(),
    };
    let mut s = serde_json::to_string_pretty(&f).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DigestRecord {
    algorithm: String,
    content_digest: String,
    created_at: u64,
}

/// SHA-256 over `(path, NUL, length, bytes)` for each file in path order.
pub fn digest_files<'a>(files: impl IntoIterator<Item = (&'a str, &'a [u8])>) -> String {
    let mut sorted: Vec<(&str, &[u8])> = files.into_iter().filter(|(p, _)| *p != DIGEST_FILE).collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    let mut h = Sha256::new();
    for (p, b) in sorted {
        h.update(p.as_bytes());
        h.update([0]);
        h.update((b.len() as u64).to_le_bytes());
        h.update(b);
    }
    hex::encode(h.finalize())
}

/// Every regular file under `root` as a `/`-separated relative path, sorted.
pub fn list_files(root: &Path) -> io::Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let path = entry.path();
            let ty = entry.file_type()?;
            if ty.is_dir() {
                walk(root, &path, out)?;
            } else if ty.is_file() {
                let rel = path.strip_prefix(root).expect("walked from root");
                let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                out.push(parts.join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("bundle asset {0} is missing")]
    MissingAsset(String),
    #[error("bundle asset {path} is {actual} bytes, inventory records {expected}")]
    SizeMismatch { path: String, expected: u64, actual: u64 },
    #[error("bundle digest mismatch: recorded {expected}, content hashes to {actual}")]
    DigestMismatch { expected: String, actual: String },
}

/// Bundle files belonging to one scene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneFiles {
    pub pano: String,
    pub preview: String,
    pub cube_faces: BTreeMap<CubeFace, String>,
}

/// A compiled bundle on disk.
#[derive(Debug, Clone)]
pub struct TourBundle {
    root: PathBuf,
    tour: Tour,
    inventory: ByteInventory,
    content_digest: String,
    created_at: u64,
    scenes: BTreeMap<String, SceneFiles>,
}

impl TourBundle {
    fn from_parts(root: PathBuf, tour: Tour, inventory: ByteInventory, content_digest: String, created_at: u64) -> Self {
        let mut scenes: BTreeMap<String, SceneFiles> = BTreeMap::new();
        for s in tour.scenes() {
            let dir = format!("scenes/{}/", s.id());
            let mut files = SceneFiles {
                pano: String::new(),
                preview: String::new(),
                cube_faces: BTreeMap::new(),
            };
            for r in inventory.rows().iter().filter(|r| r.path.starts_with(&dir)) {
                let name = &r.path[dir.len()..];
                match r.category {
                    AssetCategory::Panorama => files.pano = r.path.clone(),
                    AssetCategory::Preview => files.preview = r.path.clone(),
                    AssetCategory::Cubemap => {
                        let face = name.strip_prefix("cube_").and_then(|n| n.strip_suffix(".png")).and_then(CubeFace::from_name);
                        if let Some(f) = face {
                            files.cube_faces.insert(f, r.path.clone());
                        }
                    }
                    _ => {}
                }
            }
            scenes.insert(s.id().to_string(), files);
        }
        Self {
            root,
            tour,
            inventory,
            content_digest,
            created_at,
            scenes,
        }
    }

    /// Loads the bundle metadata. Does not hash content; see [`TourBundle::verify`].
    pub fn open(root: &Path) -> Result<Self, BundleError> {
        let read = |name: &str| {
            let p = root.join(name);
            fs::read_to_string(&p).map_err(|source| BundleError::Io { path: p, source })
        };
        let format_err = |name: &str, message: String| BundleError::Format {
            path: root.join(name),
            message,
        };
        let tour = parse_manifest(&read(MANIFEST_FILE)?)
            .map_err(|e| format_err(MANIFEST_FILE, e.to_string()))?
            .tour;
        let inv: InventoryFile =
            serde_json::from_str(&read(INVENTORY_FILE)?).map_err(|e| format_err(INVENTORY_FILE, e.to_string()))?;
        let digest: DigestRecord =
            serde_json::from_str(&read(DIGEST_FILE)?).map_err(|e| format_err(DIGEST_FILE, e.to_string()))?;
        if digest.algorithm != "sha256" {
            return Err(format_err(DIGEST_FILE, format!("unsupported algorithm {:?}", digest.algorithm)));
        }
        let inventory = ByteInventory::new(inv.rows);
        if inventory.rows().iter().any(|r| !panotour_core::tour::is_valid_media_ref(&r.path)) {
            return Err(format_err(INVENTORY_FILE, "inventory paths must be relative".into()));
        }
        Ok(Self::from_parts(root.to_path_buf(), tour, inventory, digest.content_digest, digest.created_at))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn tour(&self) -> &Tour {
        &self.tour
    }

    pub fn content_digest(&self) -> &str {
        &self.content_digest
    }

    pub fn created_at(&self) -> u64 {
        self.created_at
    }

    /// The inventory as recorded at compile time.
    pub fn recorded_inventory(&self) -> &ByteInventory {
        &self.inventory
    }

    pub fn scene_files(&self, scene_id: &str) -> Option<&SceneFiles> {
        self.scenes.get(scene_id)
    }

    /// Inventory row for a bundle-relative path, if the bundle lists it.
    pub fn asset(&self, path: &str) -> Option<&InventoryRow> {
        self.inventory.get(path)
    }

    /// Bundle path of each media reference in the tour.
    pub fn asset_table(&self) -> BTreeMap<String, InventoryRow> {
        let mut table = BTreeMap::new();
        for s in self.tour.scenes() {
            if let Some(row) = self.scenes.get(s.id()).and_then(|f| self.inventory.get(&f.pano)) {
                table.entry(s.panorama().to_string()).or_insert_with(|| row.clone());
            }
            for h in s.hotspots() {
                if let HotspotPayload::Picture(r) = h.payload() {
                    if let Some(row) = self.inventory.get(&format!("media/{r}")) {
                        table.insert(r.clone(), row.clone());
                    }
                }
            }
        }
        table
    }

    pub fn path_of(&self, rel: &str) -> PathBuf {
        rel.split('/').fold(self.root.clone(), |p, c| p.join(c))
    }

    /// Byte inventory measured on disk; every recorded asset must exist with its recorded size.
    pub fn inventory(&self) -> Result<ByteInventory, BundleError> {
        let mut rows = Vec::with_capacity(self.inventory.rows().len());
        for r in self.inventory.rows() {
            let meta = match fs::metadata(self.path_of(&r.path)) {
                Ok(m) if m.is_file() => m,
                _ => return Err(BundleError::MissingAsset(r.path.clone())),
            };
            if meta.len() != r.bytes {
                return Err(BundleError::SizeMismatch {
                    path: r.path.clone(),
                    expected: r.bytes,
                    actual: meta.len(),
                });
            }
            rows.push(InventoryRow {
                path: r.path.clone(),
                category: r.category,
                bytes: meta.len(),
            });
        }
        Ok(ByteInventory::new(rows))
    }

    /// Re-hashes every file and compares with the recorded digest.
    pub fn verify(&self) -> Result<(), BundleError> {
        let actual = self.compute_digest()?;
        if actual != self.content_digest {
            return Err(BundleError::DigestMismatch {
                expected: self.content_digest.clone(),
                actual,
            });
        }
        self.inventory().map(|_| ())
    }

    pub fn compute_digest(&self) -> Result<String, BundleError> {
        let io = |path: PathBuf| move |source| BundleError::Io { path, source };
        let names = list_files(&self.root).map_err(io(self.root.clone()))?;
        let mut contents = Vec::with_capacity(names.len());
        for n in &names {
            let p = self.path_of(n);
            contents.push(fs::read(&p).map_err(io(p))?);
        }
        Ok(digest_files(names.iter().map(String::as_str).zip(contents.iter().map(Vec::as_slice))))
    }
}

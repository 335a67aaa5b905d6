//! Command-line front end. Every subcommand is a thin adapter over the library.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use panotour_core::media::{validate_panorama, MediaCode};
use panotour_core::projection::LittlePlanetParams;
use panotour_core::tour::{validate_tour_with, TourValidationOptions};
use panotour_core::{simulate_load, ClientModel, Dimensions, LoadPolicy, MediaLimits, NetworkModel, ViewParams};

use crate::bundle::{available_media, compile, CompileError, CompileOptions, Finding, TourBundle};
use crate::codec::{decode_image, encode_png};
use crate::config::Config;
use crate::manifest::{parse_manifest, ManifestError};
use crate::render;
use crate::report::{render_report, ReportFormat};
use crate::server::{Server, ServerConfig};

/// Process exit status; the numeric codes are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Findings,
    Usage,
    Failure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Findings => 1,
            ExitStatus::Usage => 2,
            ExitStatus::Failure => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "panotour", version, about = "Validate, compile, render, serve and profile 360° virtual tours")]
struct Cli {
    /// TOML file with media limits and server defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a manifest and its media; prints tour and media findings.
    Validate {
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        media: PathBuf,
        /// Treat a missing projection tag as a warning.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        checks: CheckFlags,
        #[arg(long, default_value = "text", value_parser = parse_format)]
        format: ReportFormat,
    },
    /// Build a servable bundle.
    Compile {
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        media: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Also write six cube faces per scene.
        #[arg(long)]
        cubemaps: bool,
        /// Cube face edge in pixels (default: half the panorama height).
        #[arg(long, value_name = "PX")]
        face_size: Option<u32>,
        /// Treat a missing projection tag as a warning.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        checks: CheckFlags,
        #[arg(long, default_value = "text", value_parser = parse_format)]
        format: ReportFormat,
    },
    /// Render a perspective view or a little-planet preview to PNG.
    Render {
        pano: PathBuf,
        /// Degrees, positive turns right.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        yaw: f64,
        /// Degrees, positive looks up.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        pitch: f64,
        /// Horizontal field of view in degrees.
        #[arg(long, default_value_t = 90.0)]
        fov: f64,
        /// Output size as WIDTHxHEIGHT.
        #[arg(long, value_parser = parse_size)]
        size: Option<(u32, u32)>,
        #[arg(long, value_name = "PNG")]
        out: PathBuf,
        /// Stereographic projection centred on the nadir instead of a perspective view.
        #[arg(long)]
        little_planet: bool,
        /// Little-planet radial scale; the horizon sits at this fraction of the radius.
        #[arg(long, default_value_t = 0.5)]
        zoom: f64,
    },
    /// Serve a bundle over HTTP until interrupted.
    Serve {
        bundle: PathBuf,
        /// Address to listen on (env PANOTOUR_BIND, default 127.0.0.1:8080).
        #[arg(long, value_name = "ADDR:PORT")]
        bind: Option<String>,
        #[arg(long, value_name = "SECONDS")]
        cache_seconds: Option<u64>,
        #[arg(long, value_name = "N")]
        max_renders: Option<usize>,
    },
    /// Simulate page load over a bundle's byte inventory.
    Profile {
        bundle: PathBuf,
        /// Bits per second; accepts k, M and G suffixes.
        #[arg(long, default_value = "8M", value_parser = parse_bandwidth)]
        bandwidth: f64,
        /// Round-trip time in milliseconds.
        #[arg(long, default_value_t = 50.0)]
        rtt: f64,
        #[arg(long, default_value_t = 6)]
        connections: u32,
        /// Script processing rate in bytes per second.
        #[arg(long, default_value_t = ClientModel::REFERENCE.script_bytes_per_sec)]
        script_rate: f64,
        /// Image decode rate in bytes per second.
        #[arg(long, default_value_t = ClientModel::REFERENCE.image_decode_bytes_per_sec)]
        decode_rate: f64,
        #[arg(long, default_value = "text", value_parser = parse_format)]
        format: ReportFormat,
    },
}

#[derive(Debug, Args)]
struct CheckFlags {
    #[arg(long, value_name = "PX")]
    max_width: Option<u32>,
    #[arg(long, value_name = "PX")]
    max_height: Option<u32>,
    #[arg(long, value_name = "BYTES")]
    max_bytes: Option<u64>,
    /// Hotspots closer than this many degrees draw an OVERLAP warning.
    #[arg(long, value_name = "DEG")]
    overlap_deg: Option<f64>,
}

impl CheckFlags {
    fn apply(&self, base: MediaLimits) -> Result<MediaLimits, String> {
        let l = MediaLimits {
            max_width: self.max_width.unwrap_or(base.max_width),
            max_height: self.max_height.unwrap_or(base.max_height),
            max_bytes: self.max_bytes.unwrap_or(base.max_bytes),
        };
        if l.is_valid() {
            Ok(l)
        } else {
            Err("media limits must be positive".into())
        }
    }

    fn tour_options(&self, base: TourValidationOptions) -> Result<TourValidationOptions, String> {
        match self.overlap_deg {
            None => Ok(base),
            Some(d) if d.is_finite() && d >= 0.0 => Ok(TourValidationOptions { overlap_threshold_deg: d }),
            Some(d) => Err(format!("--overlap-deg {d} must be a non-negative number")),
        }
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: crate::report::UnknownFormat| e.to_string())
}

pub fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("{s:?} is not WIDTHxHEIGHT"))?;
    let parse = |v: &str| v.trim().parse::<u32>().ok().filter(|n| *n > 0);
    match (parse(w), parse(h)) {
        (Some(w), Some(h)) => Ok((w, h)),
        _ => Err(format!("{s:?} is not WIDTHxHEIGHT with positive integers")),
    }
}

pub fn parse_bandwidth(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let (num, scale) = match t.char_indices().last() {
        Some((i, 'k' | 'K')) => (&t[..i], 1e3),
        Some((i, 'M')) => (&t[..i], 1e6),
        Some((i, 'G')) => (&t[..i], 1e9),
        _ => (t, 1.0),
    };
    match num.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v * scale),
        _ => Err(format!("{s:?} is not a positive bandwidth in bits per second")),
    }
}

#[derive(Serialize)]
struct FindingsDoc<'a> {
    ok: bool,
    findings: &'a [Finding],
    warnings: Vec<String>,
}

fn print_findings(out: &mut dyn Write, format: ReportFormat, findings: &[Finding], warnings: &[String]) {
    let ok = !findings.iter().any(Finding::is_error);
    match format {
        ReportFormat::Json => {
            let doc = FindingsDoc {
                ok,
                findings,
                warnings: warnings.to_vec(),
            };
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
        ReportFormat::Text => {
            for f in findings {
                let _ = writeln!(out, "{f}");
            }
            for w in warnings {
                let _ = writeln!(out, "warning {w}");
            }
            let errors = findings.iter().filter(|f| f.is_error()).count();
            let _ = writeln!(
                out,
                "{}: {errors} error(s), {} warning(s)",
                if ok { "ok" } else { "failed" },
                findings.len() - errors + warnings.len()
            );
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let is_usage = e.use_stderr();
            let _ = if is_usage {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return if is_usage { ExitStatus::Usage } else { ExitStatus::Success };
        }
    };
    let config = match &cli.config {
        None => Config::default(),
        Some(p) => match Config::load(p) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return ExitStatus::Usage;
            }
        },
    };
    match execute(cli.command, &config, out, err) {
        Ok(s) => s,
        Err(Fail(status, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            status
        }
    }
}

/// A command failure: the exit status and a one-line message.
pub struct Fail(pub ExitStatus, pub String);

fn failure(e: impl std::fmt::Display) -> Fail {
    Fail(ExitStatus::Failure, e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Fail {
    Fail(ExitStatus::Usage, e.to_string())
}

fn manifest_failure(e: ManifestError) -> Fail {
    Fail(ExitStatus::Findings, e.to_string())
}

fn execute(cmd: Command, config: &Config, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus, Fail> {
    match cmd {
        Command::Validate {
            manifest,
            media,
            force,
            checks,
            format,
        } => {
            let tour = checks.tour_options(config.tour_options()).map_err(usage)?;
            let limits = checks.apply(config.limits()).map_err(usage)?;
            let (findings, warnings) = validate_inputs(&manifest, &media, force, &limits, tour)?;
            print_findings(out, format, &findings, &warnings);
            Ok(status_for(&findings))
        }
        Command::Compile {
            manifest,
            media,
            out: out_dir,
            cubemaps,
            face_size,
            force,
            checks,
            format,
        } => {
            let options = CompileOptions {
                cubemaps,
                force,
                limits: checks.apply(config.limits()).map_err(usage)?,
                tour: checks.tour_options(config.tour_options()).map_err(usage)?,
                face_size,
            };
            match compile(&manifest, &media, &out_dir, &options) {
                Ok(c) => {
                    let warnings: Vec<String> = c.manifest_warnings.iter().map(|w| w.to_string()).collect();
                    print_findings(out, format, &c.warnings, &warnings);
                    let _ = writeln!(
                        err,
                        "compiled {} scene(s) into {} (digest {})",
                        c.bundle.tour().scenes().len(),
                        out_dir.display(),
                        c.bundle.content_digest()
                    );
                    Ok(ExitStatus::Success)
                }
                Err(CompileError::Findings(findings)) => {
                    print_findings(out, format, &findings, &[]);
                    let _ = writeln!(err, "error: compile aborted, validation failed");
                    Ok(ExitStatus::Findings)
                }
                Err(CompileError::Manifest(e)) => Err(manifest_failure(e)),
                Err(e) => Err(failure(e)),
            }
        }
        Command::Render {
            pano,
            yaw,
            pitch,
            fov,
            size,
            out: png,
            little_planet,
            zoom,
        } => {
            let bytes = std::fs::read(&pano).map_err(|e| failure(format!("{}: {e}", pano.display())))?;
            let decoded = decode_image(&bytes).map_err(|e| failure(format!("{}: {e}", pano.display())))?;
            let raster = if little_planet {
                let (w, h) = size.unwrap_or((512, 512));
                let params = LittlePlanetParams {
                    zoom,
                    ..LittlePlanetParams::default()
                };
                render::little_planet(&decoded.image, Dimensions::new(w, h).map_err(usage)?, params).map_err(usage)?
            } else {
                let (w, h) = size.unwrap_or((1024, 768));
                if !(-90.0..=90.0).contains(&pitch) {
                    return Err(usage(format!("--pitch {pitch} outside [-90, 90]")));
                }
                let view = ViewParams::from_degrees(yaw, pitch, fov, Dimensions::new(w, h).map_err(usage)?)
                    .map_err(usage)?;
                render::perspective(&decoded.image, &view)
            };
            std::fs::write(&png, encode_png(&raster)).map_err(|e| failure(format!("{}: {e}", png.display())))?;
            Ok(ExitStatus::Success)
        }
        Command::Serve {
            bundle,
            bind,
            cache_seconds,
            max_renders,
        } => {
            let mut sc = ServerConfig::new(bundle);
            sc.bind = config.bind(bind.as_deref());
            if let Some(c) = cache_seconds.or(config.server.cache_seconds) {
                sc.cache_seconds = c;
            }
            if let Some(m) = max_renders.or(config.server.max_concurrent_renders) {
                sc.max_concurrent_renders = m;
            }
            let rt = tokio::runtime::Runtime::new().map_err(failure)?;
            rt.block_on(async {
                let server = Server::bind(&sc).await.map_err(failure)?;
                let addr = server.local_addr().map_err(failure)?;
                let _ = writeln!(err, "serving {} on http://{addr}/", sc.bundle.display());
                server
                    .run_until(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
                    .map_err(failure)
            })?;
            let _ = writeln!(err, "shut down");
            Ok(ExitStatus::Success)
        }
        Command::Profile {
            bundle,
            bandwidth,
            rtt,
            connections,
            script_rate,
            decode_rate,
            format,
        } => {
            let net = NetworkModel {
                bandwidth_bps: bandwidth,
                rtt_ms: rtt,
                connections,
            };
            let client = ClientModel {
                script_bytes_per_sec: script_rate,
                image_decode_bytes_per_sec: decode_rate,
            };
            let b = TourBundle::open(&bundle).map_err(failure)?;
            let inv = b.inventory().map_err(failure)?;
            let report = simulate_load(&inv, &net, &client, &LoadPolicy::default()).map_err(usage)?;
            let _ = write!(out, "{}", render_report(&report, format));
            Ok(ExitStatus::Success)
        }
    }
}

fn status_for(findings: &[Finding]) -> ExitStatus {
    if findings.iter().any(Finding::is_error) {
        ExitStatus::Findings
    } else {
        ExitStatus::Success
    }
}

/// Tour findings plus media findings for every panorama that exists.
pub fn validate_inputs(
    manifest: &Path,
    media: &Path,
    force: bool,
    limits: &MediaLimits,
    tour_options: TourValidationOptions,
) -> Result<(Vec<Finding>, Vec<String>), Fail> {
    let text = std::fs::read_to_string(manifest).map_err(|e| failure(format!("{}: {e}", manifest.display())))?;
    let parsed = parse_manifest(&text).map_err(manifest_failure)?;
    let tour = &parsed.tour;
    let available = available_media(tour, media);
    let mut findings: Vec<Finding> = validate_tour_with(tour, &available, tour_options).findings().iter().map(Finding::from_tour).collect();
    for s in tour.scenes().iter().filter(|s| available.contains(s.panorama())) {
        let path = media.join(s.panorama());
        let bytes = std::fs::read(&path).map_err(|e| failure(format!("{}: {e}", path.display())))?;
        let decoded = decode_image(&bytes).map_err(|e| failure(format!("{}: {e}", path.display())))?;
        let mut report = validate_panorama(&decoded.metadata, limits);
        if force {
            report.downgrade(MediaCode::Xmp);
        }
        let location = format!("scenes/{}/panorama", s.id());
        findings.extend(report.findings().iter().map(|f| Finding::from_media(&location, f)));
    }
    findings.sort();
    Ok((findings, parsed.warnings.iter().map(|w| w.to_string()).collect()))
}

impl std::fmt::Debug for Fail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}: {}", self.0, self.1)
    }
}

//! Optional TOML configuration for media limits and server defaults.
//!
//! ```toml
//! [limits]
//! max_width = 8192
//! max_height = 4096
//! max_bytes = 33554432
//!
//! [tour]
//! overlap_threshold_deg = 2.0
//!
//! [server]
//! bind = "127.0.0.1:8080"
//! cache_seconds = 3600
//! max_concurrent_renders = 4
//! ```
//!
//! Precedence, highest first: command-line flags, the `PANOTOUR_BIND`
//! environment variable (bind address only), this file, built-in defaults.

use std::path::Path;

use serde::Deserialize;

use panotour_core::tour::TourValidationOptions;
use panotour_core::MediaLimits;

pub const BIND_ENV: &str = "PANOTOUR_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub limits: LimitsSection,
    pub tour: TourSection,
    pub server: ServerSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TourSection {
    pub overlap_threshold_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsSection {
    pub max_width: Option<u32>,
    pub max_height: Option<u32>,
    pub max_bytes: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSection {
    pub bind: Option<String>,
    pub cache_seconds: Option<u64>,
    pub max_concurrent_renders: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.display().to_string(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Config, String> {
        let c: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        if !c.limits().is_valid() {
            return Err("media limits must be positive".into());
        }
        if c.tour.overlap_threshold_deg.is_some_and(|d| !(d.is_finite() && d >= 0.0)) {
            return Err("overlap_threshold_deg must be a non-negative number".into());
        }
        if c.server.max_concurrent_renders == Some(0) {
            return Err("max_concurrent_renders must be at least 1".into());
        }
        Ok(c)
    }

    pub fn limits(&self) -> MediaLimits {
        let d = MediaLimits::default();
        MediaLimits {
            max_width: self.limits.max_width.unwrap_or(d.max_width),
            max_height: self.limits.max_height.unwrap_or(d.max_height),
            max_bytes: self.limits.max_bytes.unwrap_or(d.max_bytes),
        }
    }

    pub fn tour_options(&self) -> TourValidationOptions {
        let d = TourValidationOptions::default();
        TourValidationOptions {
            overlap_threshold_deg: self.tour.overlap_threshold_deg.unwrap_or(d.overlap_threshold_deg),
        }
    }

    /// Flag, then environment, then file, then the built-in default.
    pub fn bind(&self, flag: Option<&str>) -> String {
        flag.map(str::to_string)
            .or_else(|| std::env::var(BIND_ENV).ok().filter(|s| !s.is_empty()))
            .or_else(|| self.server.bind.clone())
            .unwrap_or_else(|| DEFAULT_BIND.to_string())
    }
}

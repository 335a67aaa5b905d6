//! Text and JSON renderings of a [`LoadReport`].

use std::fmt::Write as _;
use std::str::FromStr;

use panotour_core::LoadReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown report format {0:?} (expected text or json)")]
pub struct UnknownFormat(pub String);

impl FromStr for ReportFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" | "table" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            _ => Err(UnknownFormat(s.to_string())),
        }
    }
}

pub fn render_report(r: &LoadReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => text_table(r),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("load reports are always serializable");
            s.push('\n');
            s
        }
    }
}

pub fn parse_json_report(text: &str) -> Result<LoadReport, serde_json::Error> {
    serde_json::from_str(text)
}

fn text_table(r: &LoadReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>12} {:>12} {:>14}",
        "category", "requests", "latency_ms", "transfer_ms", "processing_ms"
    );
    let _ = writeln!(out, "{}", "-".repeat(64));
    for c in r.categories.iter().filter(|c| c.requests > 0) {
        let _ = writeln!(
            out,
            "{:<14} {:>8} {:>12.3} {:>12.3} {:>14.3}",
            c.category.as_str(),
            c.requests,
            c.latency_ms,
            c.transfer_ms,
            c.processing_ms
        );
    }
    if r.timeline.is_empty() && r.deferred.is_empty() {
        return out;
    }
    let _ = writeln!(out, "\ncritical path: {:.3} ms", r.critical_path_ms);
    if !r.timeline.is_empty() {
        let _ = writeln!(
            out,
            "\n{:<40} {:<14} {:>4} {:>10} {:>12} {:>10}",
            "asset", "category", "conn", "start_ms", "received_ms", "ready_ms"
        );
        for t in &r.timeline {
            let _ = writeln!(
                out,
                "{:<40} {:<14} {:>4} {:>10.3} {:>12.3} {:>10.3}",
                t.path,
                t.category.as_str(),
                t.connection,
                t.start_ms,
                t.transfer_end_ms,
                t.end_ms
            );
        }
    }
    if !r.deferred.is_empty() {
        let _ = writeln!(out, "\non demand:");
        for d in &r.deferred {
            let _ = writeln!(
                out,
                "{:<40} {:<14} {:>10} bytes {:>10.3} ms",
                d.path,
                d.category.as_str(),
                d.bytes,
                d.latency_ms + d.transfer_ms + d.processing_ms
            );
        }
    }
    out
}

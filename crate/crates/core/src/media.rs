//! Panorama acceptance rules and XMP projection-tag scanning.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use memchr::memmem;

use crate::geometry::Dimensions;

pub const EQUIRECTANGULAR: &str = "equirectangular";

pub const XPACKET_BEGIN: &[u8] = b"<?xpacket begin";
pub const XPACKET_END: &[u8] = b"<?xpacket end";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ImageFormat {
    Png,
    Jpeg,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Jpeg => "jpg",
        }
    }

    pub fn mime(self) -> &'static str {
        match self {
            ImageFormat::Png => "image/png",
            ImageFormat::Jpeg => "image/jpeg",
        }
    }

    /// Sniffs the leading magic bytes.
    pub fn detect(bytes: &[u8]) -> Option<ImageFormat> {
        if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            Some(ImageFormat::Png)
        } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
            Some(ImageFormat::Jpeg)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProjectionMetadata {
    pub projection_type: Option<String>,
    pub byte_size: u64,
    pub dims: Dimensions,
    pub format: ImageFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MediaLimits {
    pub max_width: u32,
    pub max_height: u32,
    pub max_bytes: u64,
}

impl Default for MediaLimits {
    fn default() -> Self {
        Self {
            max_width: 8192,
            max_height: 4096,
            max_bytes: 32 * 1024 * 1024,
        }
    }
}

impl MediaLimits {
    pub fn is_valid(&self) -> bool {
        self.max_width > 0 && self.max_height > 0 && self.max_bytes > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MediaCode {
    #[cfg_attr(feature = "serde", serde(rename = "ASPECT"))]
    Aspect,
    #[cfg_attr(feature = "serde", serde(rename = "XMP"))]
    Xmp,
    #[cfg_attr(feature = "serde", serde(rename = "RESOLUTION"))]
    Resolution,
    #[cfg_attr(feature = "serde", serde(rename = "FILESIZE"))]
    FileSize,
}

impl MediaCode {
    pub fn as_str(self) -> &'static str {
        match self {
            MediaCode::Aspect => "ASPECT",
            MediaCode::Xmp => "XMP",
            MediaCode::Resolution => "RESOLUTION",
            MediaCode::FileSize => "FILESIZE",
        }
    }
}

impl fmt::Display for MediaCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MediaFinding {
    pub code: MediaCode,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    findings: Vec<MediaFinding>,
}

impl ValidationReport {
    pub fn new(findings: Vec<MediaFinding>) -> Self {
        Self { findings }
    }

    /// True when no finding has error severity.
    pub fn ok(&self) -> bool {
        self.findings.iter().all(|f| f.severity != Severity::Error)
    }

    pub fn findings(&self) -> &[MediaFinding] {
        &self.findings
    }

    pub fn codes(&self) -> Vec<MediaCode> {
        self.findings.iter().map(|f| f.code).collect()
    }

    /// Lowers every finding with `code` to a warning.
    pub fn downgrade(&mut self, code: MediaCode) {
        for f in self.findings.iter_mut().filter(|f| f.code == code) {
            f.severity = Severity::Warning;
        }
    }

    pub fn into_findings(self) -> Vec<MediaFinding> {
        self.findings
    }
}

/// Checks the 2:1 aspect, the equirectangular projection tag, and the size limits.
pub fn validate_panorama(meta: &ProjectionMetadata, limits: &MediaLimits) -> ValidationReport {
    let mut findings = Vec::new();
    let (w, h) = (meta.dims.width() as u64, meta.dims.height() as u64);
    let mut error = |code, message| {
        findings.push(MediaFinding {
            code,
            severity: Severity::Error,
            message,
        })
    };
    if w != 2 * h {
        error(
            MediaCode::Aspect,
            format!("{} is not 2:1 (width must equal twice the height {})", meta.dims, 2 * h),
        );
    }
    match meta.projection_type.as_deref() {
        Some(EQUIRECTANGULAR) => {}
        Some(other) => error(
            MediaCode::Xmp,
            format!("XMP ProjectionType is {other:?}, expected \"{EQUIRECTANGULAR}\""),
        ),
        None => error(MediaCode::Xmp, "no XMP ProjectionType tag".to_string()),
    }
    if meta.dims.width() > limits.max_width || meta.dims.height() > limits.max_height {
        error(
            MediaCode::Resolution,
            format!(
                "{} exceeds the {}x{} limit",
                meta.dims, limits.max_width, limits.max_height
            ),
        );
    }
    if meta.byte_size > limits.max_bytes {
        error(
            MediaCode::FileSize,
            format!("{} bytes exceeds the {} byte limit", meta.byte_size, limits.max_bytes),
        );
    }
    ValidationReport::new(findings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XmpNote {
    /// A packet start marker at this offset has no matching end marker.
    UnterminatedPacket { offset: usize },
}

impl fmt::Display for XmpNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XmpNote::UnterminatedPacket { offset } => {
                write!(f, "XMP packet at byte {offset} is missing its end marker")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct XmpScan {
    pub projection_type: Option<String>,
    pub notes: Vec<XmpNote>,
}

/// Byte range of every complete XMP packet, end marker included up to its `?>`.
pub fn xmp_packets(bytes: &[u8]) -> (Vec<core::ops::Range<usize>>, Vec<XmpNote>) {
    let mut packets = Vec::new();
    let mut notes = Vec::new();
    let mut pos = 0;
    while let Some(rel) = memmem::find(&bytes[pos..], XPACKET_BEGIN) {
        let start = pos + rel;
        let body = start + XPACKET_BEGIN.len();
        match memmem::find(&bytes[body..], XPACKET_END) {
            Some(rel_end) => {
                let end_marker = body + rel_end;
                let end = memmem::find(&bytes[end_marker..], b"?>")
                    .map(|i| end_marker + i + 2)
                    .unwrap_or(end_marker + XPACKET_END.len());
                packets.push(start..end);
                pos = end;
            }
            None => {
                notes.push(XmpNote::UnterminatedPacket { offset: start });
                break;
            }
        }
    }
    (packets, notes)
}

pub fn scan_xmp(bytes: &[u8]) -> XmpScan {
    let (packets, notes) = xmp_packets(bytes);
    let projection_type = packets
        .into_iter()
        .find_map(|r| find_projection_type(&bytes[r]));
    XmpScan {
        projection_type,
        notes,
    }
}

/// `ProjectionType` from the first XMP packet that carries one.
pub fn read_xmp_projection(bytes: &[u8]) -> Option<String> {
    scan_xmp(bytes).projection_type
}

const PROPERTY: &[u8] = b"ProjectionType";

/// Accepts `prefix:ProjectionType="v"` attributes and `<prefix:ProjectionType>v</...>` elements.
fn find_projection_type(packet: &[u8]) -> Option<String> {
    let mut pos = 0;
    while let Some(rel) = memmem::find(&packet[pos..], PROPERTY) {
        let at = pos + rel;
        pos = at + PROPERTY.len();
        let before = if at == 0 { b' ' } else { packet[at - 1] };
        if !(before == b':' || before == b'<' || before.is_ascii_whitespace()) {
            continue;
        }
        let rest = &packet[pos..];
        let value = if before == b'<' || is_element_open(packet, at) {
            element_text(rest)
        } else {
            attribute_value(rest)
        };
        if let Some(v) = value {
            return Some(v);
        }
    }
    None
}

fn is_element_open(packet: &[u8], name_at: usize) -> bool {
    // walk back over the namespace prefix to the '<'
    let mut i = name_at;
    while i > 0 {
        let b = packet[i - 1];
        if b == b'<' {
            return true;
        }
        if !(b.is_ascii_alphanumeric() || b == b':' || b == b'_' || b == b'-' || b == b'.') {
            return false;
        }
        i -= 1;
    }
    false
}

fn attribute_value(rest: &[u8]) -> Option<String> {
    let rest = trim_start(rest);
    let rest = trim_start(rest.strip_prefix(b"=")?);
    let quote = *rest.first()?;
    if quote != b'"' && quote != b'\'' {
        return None;
    }
    let inner = &rest[1..];
    let end = memchr::memchr(quote, inner)?;
    decode_text(&inner[..end])
}

fn element_text(rest: &[u8]) -> Option<String> {
    let rest = trim_start(rest);
    let rest = rest.strip_prefix(b">")?;
    let end = memchr::memchr(b'<', rest)?;
    decode_text(trim(&rest[..end]))
}

fn decode_text(raw: &[u8]) -> Option<String> {
    let s = core::str::from_utf8(raw).ok()?;
    if !s.contains('&') {
        return Some(s.to_string());
    }
    Some(
        s.replace("&lt;", "<")
            .replace("&gt;", ">")
            .replace("&quot;", "\"")
            .replace("&apos;", "'")
            .replace("&amp;", "&"),
    )
}

fn trim_start(b: &[u8]) -> &[u8] {
    let n = b.iter().take_while(|c| c.is_ascii_whitespace()).count();
    &b[n..]
}

fn trim(b: &[u8]) -> &[u8] {
    let b = trim_start(b);
    let n = b.iter().rev().take_while(|c| c.is_ascii_whitespace()).count();
    &b[..b.len() - n]
}

/// A minimal XMP packet declaring `GPano:ProjectionType`.
pub fn build_xmp_packet(projection_type: &str) -> String {
    let escaped = projection_type
        .replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;");
    format!(
        "<?xpacket begin=\"\u{feff}\" id=\"W5M0MpCehiHzreSzNTczkc9d\"?>\
<x:xmpmeta xmlns:x=\"adobe:ns:meta/\">\
<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\">\
<rdf:Description rdf:about=\"\" xmlns:GPano=\"http://ns.google.com/photos/1.0/panorama/\" \
GPano:ProjectionType=\"{escaped}\" GPano:UsePanoramaViewer=\"True\"/>\
</rdf:RDF></x:xmpmeta><?xpacket end=\"w\"?>"
    )
}

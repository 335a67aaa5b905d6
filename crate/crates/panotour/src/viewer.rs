//! Browser client shipped in every bundle under `viewer/`.
//!
//! This is a thin client: it asks the server's `/view` endpoint for each
//! frame and draws hotspot markers on top. It exists so a compiled bundle is
//! explorable out of the box.

pub const INDEX_HTML: &str = include_str!("../assets/viewer/index.html");
pub const VIEWER_JS: &str = include_str!("../assets/viewer/viewer.js");
pub const VIEWER_CSS: &str = include_str!("../assets/viewer/viewer.css");

/// Content type for a file name under `viewer/`.
pub fn content_type(name: &str) -> &'static str {
    match name.rsplit_once('.').map(|(_, e)| e) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("png") => "image/png",
        Some("jpg") | Some("jpeg") => "image/jpeg",
        Some("json") => "application/json",
        _ => "application/octet-stream",
    }
}

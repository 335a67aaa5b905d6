//! The HTTP service, exercised over real sockets.

mod support;

use std::collections::BTreeMap;
use std::fs;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use panotour::bundle::{TourBundle, MANIFEST_FILE};
use panotour::codec::decode_image;
use panotour::render;
use panotour::server::ViewQuery;
use support::{compile_sample, HttpResponse, SplitMix, TestServer};

struct Fixture {
    _dir: tempfile::TempDir,
    root: std::path::PathBuf,
    server: TestServer,
}

fn fixture(cubemaps: bool) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("bundle");
    compile_sample(&root, cubemaps);
    let server = TestServer::start(&root);
    Fixture { _dir: dir, root, server }
}

fn view_target(scene: &str, q: &ViewQuery) -> String {
    format!(
        "/api/scene/{scene}/view?yaw_deg={}&pitch_deg={}&fov_deg={}&w={}&h={}",
        q.yaw_deg, q.pitch_deg, q.fov_deg, q.width, q.height
    )
}

fn random_query(rng: &mut SplitMix) -> ViewQuery {
    let pitch = match rng.next_u64() % 5 {
        0 => 90.0,
        1 => -90.0,
        _ => rng.range(-90.0, 90.0),
    };
    ViewQuery {
        yaw_deg: rng.range(-720.0, 720.0),
        pitch_deg: pitch,
        fov_deg: rng.range(1.0, 170.0),
        width: 1 + (rng.next_u64() % 200) as u32,
        height: 1 + (rng.next_u64() % 150) as u32,
    }
}

#[test]
fn tour_is_served_byte_identical() {
    let f = fixture(false);
    let r = f.server.get("/api/tour");
    assert_eq!(r.status, 200);
    assert_eq!(r.header("content-type"), Some("application/json"));
    assert_eq!(r.body, fs::read(f.root.join(MANIFEST_FILE)).unwrap());
    assert!(r.header("cache-control").unwrap().contains("max-age=3600"));
}

#[test]
fn static_assets_match_the_bundle() {
    let f = fixture(false);
    for (target, rel, mime) in [
        ("/api/scene/intro/pano", "scenes/intro/pano.jpg", "image/jpeg"),
        ("/api/scene/advance/preview", "scenes/advance/preview.png", "image/png"),
        ("/api/media/pictures/lathe.png", "media/pictures/lathe.png", "image/png"),
        ("/", "viewer/index.html", "text/html; charset=utf-8"),
        ("/viewer/viewer.js", "viewer/viewer.js", "text/javascript; charset=utf-8"),
        ("/viewer/viewer.css", "viewer/viewer.css", "text/css; charset=utf-8"),
    ] {
        let r = f.server.get(target);
        assert_eq!(r.status, 200, "{target}");
        assert_eq!(r.header("content-type"), Some(mime), "{target}");
        assert_eq!(r.body, fs::read(f.root.join(rel)).unwrap(), "{target}");
    }
}

#[test]
fn unknown_things_are_json_404s() {
    let f = fixture(false);
    for target in [
        "/api/scene/nowhere/pano",
        "/api/scene/nowhere/view",
        "/api/scene/intro/cubemap/px",
        "/api/media/pictures/missing.png",
        "/api/media/..%2Fdigest",
        "/viewer/none.js",
        "/not/a/route",
    ] {
        let r = f.server.get(target);
        assert_eq!(r.status, 404, "{target}");
        assert_eq!(r.json()["code"], "NOT_FOUND", "{target}");
        assert!(r.json()["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
}

#[test]
fn cube_faces_are_served_when_compiled() {
    let f = fixture(true);
    let r = f.server.get("/api/scene/medium/cubemap/nz");
    assert_eq!(r.status, 200);
    assert_eq!(r.body, fs::read(f.root.join("scenes/medium/cube_nz.png")).unwrap());
    assert_eq!(f.server.get("/api/scene/medium/cubemap/up").status, 404);
}

#[test]
fn bad_view_parameters_are_json_400s() {
    let f = fixture(false);
    for q in ["pitch_deg=91", "fov_deg=0", "fov_deg=171", "w=0", "h=4096", "yaw_deg=NaN", "yaw_deg=abc", "w=1.5"] {
        let r = f.server.get(&format!("/api/scene/intro/view?{q}"));
        assert_eq!(r.status, 400, "{q}");
        assert_eq!(r.json()["code"], "BAD_PARAMETER", "{q}");
    }
}

#[test]
fn view_matches_library_rendering() {
    let f = fixture(false);
    let bundle = TourBundle::open(&f.root).unwrap();
    let scenes = ["intro", "medium", "advance"];
    let mut rng = SplitMix(2024);
    for i in 0..20 {
        let scene = scenes[i % 3];
        let q = random_query(&mut rng);
        let r = f.server.get(&view_target(scene, &q));
        assert_eq!(r.status, 200, "{q:?}");
        assert_eq!(r.header("content-type"), Some("image/png"));
        let served = decode_image(&r.body).unwrap().image;
        let pano = fs::read(bundle.path_of(&bundle.scene_files(scene).unwrap().pano)).unwrap();
        let direct = render::perspective(&decode_image(&pano).unwrap().image, &q.view_params());
        assert_eq!(served.raster(), &direct, "{scene} {q:?}");
    }
}

fn mixed_requests() -> Vec<String> {
    let mut rng = SplitMix(77);
    let scenes = ["intro", "medium", "advance"];
    (0..50)
        .map(|i| {
            let s = scenes[i % 3];
            match i % 6 {
                0 => "/api/tour".to_string(),
                1 => format!("/api/scene/{s}/pano"),
                2 => format!("/api/scene/{s}/preview"),
                3 => format!("/api/scene/{s}/cubemap/{}", ["px", "nx", "py", "ny", "pz", "nz"][i % 6 + i / 6 % 3]),
                4 => "/api/media/pictures/lathe.png".to_string(),
                _ => {
                    let mut q = random_query(&mut rng);
                    q.width = q.width.min(96);
                    q.height = q.height.min(72);
                    view_target(s, &q)
                }
            }
        })
        .collect()
}

fn fingerprint(r: &HttpResponse) -> (u16, String) {
    (r.status, hex::encode(Sha256::digest(&r.body)))
}

#[test]
fn concurrent_requests_match_serial_ones() {
    let f = fixture(true);
    let reqs = mixed_requests();
    let serial: Vec<_> = reqs.iter().map(|t| fingerprint(&f.server.get(t))).collect();
    assert!(serial.iter().all(|(s, _)| *s == 200));
    let addr = f.server.addr;
    let reqs = Arc::new(reqs);
    let handles: Vec<_> = (0..reqs.len())
        .map(|i| {
            let reqs = reqs.clone();
            std::thread::spawn(move || fingerprint(&support::http_get(addr, &reqs[i], &[])))
        })
        .collect();
    let concurrent: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(concurrent, serial);
}

#[test]
fn one_render_slot_still_serves_everything() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("bundle");
    compile_sample(&root, false);
    let server = TestServer::start_with(&root, 1);
    let addr = server.addr;
    let handles: Vec<_> = (0..8)
        .map(|i| {
            std::thread::spawn(move || {
                support::http_get(addr, &format!("/api/scene/intro/view?yaw_deg={}&w=64&h=48", i * 40), &[]).status
            })
        })
        .collect();
    assert!(handles.into_iter().all(|h| h.join().unwrap() == 200));
}

#[test]
fn metrics_count_requests_and_bytes() {
    let f = fixture(false);
    let mut expect: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut hit = |endpoint: &'static str, target: &str| {
        let r = f.server.get(target);
        let e = expect.entry(endpoint).or_default();
        e.0 += 1;
        e.1 += r.body.len() as u64;
    };
    hit("tour", "/api/tour");
    hit("tour", "/api/tour");
    hit("pano", "/api/scene/medium/pano");
    hit("preview", "/api/scene/nowhere/preview");
    hit("view", "/api/scene/intro/view?w=32&h=24");
    hit("view", "/api/scene/intro/view?pitch_deg=100");
    hit("media", "/api/media/pictures/lathe.png");
    hit("viewer", "/viewer/viewer.css");
    let snap = f.server.state.metrics_snapshot();
    for (endpoint, (count, bytes)) in &expect {
        let s = &snap.endpoints[*endpoint];
        assert_eq!((s.count, s.bytes), (*count, *bytes), "{endpoint}");
        assert!(s.max_ms >= s.p95_ms && s.p95_ms >= s.p50_ms && s.p50_ms >= 0.0);
    }
    assert_eq!(snap.endpoints["cubemap"].count, 0);
    let r = f.server.get("/api/metrics");
    assert_eq!(r.status, 200);
    assert_eq!(r.header("cache-control"), Some("no-store"));
    assert_eq!(r.json()["endpoints"]["tour"]["count"], 2);
}

#[test]
fn panorama_ranges() {
    let f = fixture(false);
    let full = fs::read(f.root.join("scenes/intro/pano.jpg")).unwrap();
    let len = full.len();
    let r = f.server.get("/api/scene/intro/pano");
    assert_eq!(r.header("accept-ranges"), Some("bytes"));

    let r = f.server.get_with("/api/scene/intro/pano", &[("Range", "bytes=10-99")]);
    assert_eq!(r.status, 206);
    assert_eq!(r.body, &full[10..100]);
    assert_eq!(r.header("content-range").unwrap(), format!("bytes 10-99/{len}"));

    let r = f.server.get_with("/api/scene/intro/pano", &[("Range", "bytes=-16")]);
    assert_eq!(r.status, 206);
    assert_eq!(r.body, &full[len - 16..]);

    let r = f.server.get_with("/api/scene/intro/pano", &[("Range", &format!("bytes={len}-"))]);
    assert_eq!(r.status, 416);
    assert_eq!(r.header("content-range").unwrap(), format!("bytes */{len}"));
    assert_eq!(r.json()["code"], "RANGE_NOT_SATISFIABLE");
}

#[test]
fn serving_leaves_the_bundle_intact() {
    let f = fixture(true);
    for t in mixed_requests() {
        f.server.get(&t);
    }
    drop(f.server);
    TourBundle::open(&f.root).unwrap().verify().unwrap();
}

#[test]
fn refuses_a_tampered_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("bundle");
    compile_sample(&root, false);
    fs::write(root.join("viewer/viewer.css"), "body{}").unwrap();
    let mut cfg = panotour::server::ServerConfig::new(&root);
    cfg.bind = "127.0.0.1:0".into();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    assert!(rt.block_on(panotour::server::Server::bind(&cfg)).is_err());
}

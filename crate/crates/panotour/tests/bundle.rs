//! Compiling tours into bundles and reading them back.

mod support;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use panotour::bundle::{
    compile, list_files, BundleError, CompileError, CompileOptions, TourBundle, DIGEST_FILE, INVENTORY_FILE,
};
use panotour::codec::{encode_jpeg, encode_png, inject_xmp_projection};
use panotour::core::media::EQUIRECTANGULAR;
use panotour::core::AssetCategory;
use panotour::sample::synthetic_panorama;
use support::{compile_sample, sample_dir};

fn disk_sizes(root: &Path) -> BTreeMap<String, u64> {
    list_files(root)
        .unwrap()
        .into_iter()
        .map(|p| {
            let len = fs::metadata(root.join(&p)).unwrap().len();
            (p, len)
        })
        .collect()
}

#[test]
fn recompiling_gives_the_same_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let a = compile_sample(&tmp.path().join("a"), true);
    let b = compile_sample(&tmp.path().join("b"), true);
    assert_eq!(a.bundle.content_digest(), b.bundle.content_digest());
    // in-place recompile replaces the previous bundle
    let again = compile_sample(&tmp.path().join("a"), true);
    assert_eq!(again.bundle.content_digest(), a.bundle.content_digest());
    for rel in list_files(&tmp.path().join("a")).unwrap() {
        if rel != DIGEST_FILE {
            assert_eq!(
                fs::read(tmp.path().join("a").join(&rel)).unwrap(),
                fs::read(tmp.path().join("b").join(&rel)).unwrap(),
                "{rel}"
            );
        }
    }
    a.bundle.verify().unwrap();
    assert_eq!(a.bundle.compute_digest().unwrap(), a.bundle.content_digest());
    // without cube faces the content differs
    let c = compile_sample(&tmp.path().join("c"), false);
    assert_ne!(c.bundle.content_digest(), a.bundle.content_digest());
}

#[test]
fn inventory_totals_equal_file_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bundle");
    let c = compile_sample(&out, true);
    let mut sizes = disk_sizes(&out);
    sizes.remove(INVENTORY_FILE);
    sizes.remove(DIGEST_FILE);
    let inv = TourBundle::open(&out).unwrap().inventory().unwrap();
    let listed: BTreeMap<String, u64> = inv.rows().iter().map(|r| (r.path.clone(), r.bytes)).collect();
    assert_eq!(listed, sizes);
    assert_eq!(inv.grand_total(), sizes.values().sum::<u64>());
    let by_dir = |prefix: &str, suffix: &str| -> u64 {
        sizes
            .iter()
            .filter(|(p, _)| p.starts_with(prefix) && p.ends_with(suffix))
            .map(|(_, n)| n)
            .sum()
    };
    assert_eq!(inv.category_total(AssetCategory::Panorama), by_dir("scenes/", "/pano.jpg"));
    assert_eq!(inv.category_total(AssetCategory::Preview), by_dir("scenes/", "/preview.png"));
    assert_eq!(inv.category_total(AssetCategory::Cubemap), by_dir("scenes/", ".png") - by_dir("scenes/", "/preview.png"));
    assert_eq!(inv.category_total(AssetCategory::Picture), by_dir("media/", ""));
    assert_eq!(inv.category_total(AssetCategory::ViewerScript), sizes["viewer/viewer.js"]);
    assert_eq!(&inv, c.bundle.recorded_inventory());
    // recorded inventory file agrees with itself
    let recorded: serde_json::Value = serde_json::from_slice(&fs::read(out.join(INVENTORY_FILE)).unwrap()).unwrap();
    assert_eq!(recorded["grand_total"].as_u64(), Some(inv.grand_total()));
}

#[test]
fn start_scene_assets_come_first() {
    let tmp = tempfile::tempdir().unwrap();
    let c = compile_sample(&tmp.path().join("b"), false);
    let paths: Vec<&str> = c.bundle.recorded_inventory().rows().iter().map(|r| r.path.as_str()).collect();
    assert_eq!(
        paths,
        [
            "viewer/index.html",
            "manifest.resolved",
            "viewer/viewer.js",
            "viewer/viewer.css",
            "scenes/intro/pano.jpg",
            "scenes/intro/preview.png",
            "scenes/medium/pano.jpg",
            "scenes/medium/preview.png",
            "scenes/advance/pano.jpg",
            "scenes/advance/preview.png",
            "media/pictures/lathe.png",
        ]
    );
    // panoramas are copied verbatim
    assert_eq!(
        fs::read(tmp.path().join("b/scenes/medium/pano.jpg")).unwrap(),
        fs::read(sample_dir().join("media/panoramas/medium.jpg")).unwrap()
    );
}

fn write_tour(dir: &Path, manifest: &str, panos: &[(&str, Vec<u8>)]) -> std::path::PathBuf {
    for (name, bytes) in panos {
        let p = dir.join("media").join(name);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, bytes).unwrap();
    }
    let m = dir.join("tour.json");
    fs::write(&m, manifest).unwrap();
    m
}

const ONE_SCENE: &str = r#"{"id":"t","start_scene":"a","scenes":[{"id":"a","panorama":"a.jpg"}]}"#;

#[test]
fn bad_aspect_aborts_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let wide = inject_xmp_projection(&encode_jpeg(&synthetic_panorama(2304, 1296, 0), 80), EQUIRECTANGULAR).unwrap();
    let m = write_tour(tmp.path(), ONE_SCENE, &[("a.jpg", wide)]);
    let out = tmp.path().join("out");
    match compile(&m, &tmp.path().join("media"), &out, &CompileOptions::default()) {
        Err(CompileError::Findings(f)) => {
            assert_eq!(f.len(), 1);
            assert_eq!(f[0].code, "ASPECT");
            assert_eq!(f[0].location, "scenes/a/panorama");
        }
        other => panic!("expected ASPECT, got {other:?}"),
    }
    assert!(!out.exists());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 2, "no staging directory left behind");
}

#[test]
fn force_accepts_untagged_panoramas_with_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let png = encode_png(&synthetic_panorama(256, 128, 0));
    let m = write_tour(tmp.path(), &ONE_SCENE.replace("a.jpg", "a.png"), &[("a.png", png)]);
    let media = tmp.path().join("media");
    let out = tmp.path().join("out");
    assert!(matches!(
        compile(&m, &media, &out, &CompileOptions::default()),
        Err(CompileError::Findings(_))
    ));
    let opts = CompileOptions {
        force: true,
        ..CompileOptions::default()
    };
    let c = compile(&m, &media, &out, &opts).unwrap();
    assert_eq!(c.warnings.len(), 1);
    assert_eq!(c.warnings[0].code, "XMP");
    assert!(out.join("scenes/a/pano.png").is_file());
}

#[test]
fn minimal_bundle_has_one_row_per_asset() {
    let tmp = tempfile::tempdir().unwrap();
    let jpeg = inject_xmp_projection(&encode_jpeg(&synthetic_panorama(128, 64, 2), 80), EQUIRECTANGULAR).unwrap();
    let m = write_tour(tmp.path(), ONE_SCENE, &[("a.jpg", jpeg)]);
    let out = tmp.path().join("out");
    let c = compile(&m, &tmp.path().join("media"), &out, &CompileOptions::default()).unwrap();
    let cats: Vec<AssetCategory> = c.bundle.recorded_inventory().rows().iter().map(|r| r.category).collect();
    assert_eq!(
        cats,
        [
            AssetCategory::Document,
            AssetCategory::Document,
            AssetCategory::ViewerScript,
            AssetCategory::ViewerStyle,
            AssetCategory::Panorama,
            AssetCategory::Preview,
        ]
    );
}

#[test]
fn adding_a_picture_adds_exactly_its_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let jpeg = inject_xmp_projection(&encode_jpeg(&synthetic_panorama(128, 64, 1), 80), EQUIRECTANGULAR).unwrap();
    let picture = encode_png(&synthetic_panorama(40, 30, 0));
    let with_pic = r#"{"id":"t","start_scene":"a","scenes":[{"id":"a","panorama":"a.jpg","hotspots":[
        {"id":"p","kind":"picture","yaw_deg":10,"pitch_deg":0,"payload":"pics/p.png"}]}]}"#;
    let plain_dir = tmp.path().join("plain");
    let pic_dir = tmp.path().join("pic");
    let m1 = write_tour(&plain_dir, ONE_SCENE, &[("a.jpg", jpeg.clone())]);
    let m2 = write_tour(&pic_dir, with_pic, &[("a.jpg", jpeg), ("pics/p.png", picture.clone())]);
    let a = compile(&m1, &plain_dir.join("media"), &tmp.path().join("o1"), &CompileOptions::default()).unwrap();
    let b = compile(&m2, &pic_dir.join("media"), &tmp.path().join("o2"), &CompileOptions::default()).unwrap();
    let (ia, ib) = (a.bundle.recorded_inventory(), b.bundle.recorded_inventory());
    assert_eq!(ib.category_total(AssetCategory::Picture) - ia.category_total(AssetCategory::Picture), picture.len() as u64);
    for c in [AssetCategory::Panorama, AssetCategory::Preview, AssetCategory::ViewerScript, AssetCategory::ViewerStyle] {
        assert_eq!(ia.category_total(c), ib.category_total(c), "{c:?}");
    }
    assert_eq!(b.bundle.asset_table()["pics/p.png"].bytes, picture.len() as u64);
}

#[test]
fn missing_or_altered_files_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    compile_sample(&out, false);
    fs::remove_file(out.join("scenes/medium/preview.png")).unwrap();
    let b = TourBundle::open(&out).unwrap();
    assert!(matches!(b.inventory(), Err(BundleError::MissingAsset(p)) if p == "scenes/medium/preview.png"));
    assert!(b.verify().is_err());

    compile_sample(&out, false);
    let p = out.join("media/pictures/lathe.png");
    let mut bytes = fs::read(&p).unwrap();
    bytes.push(0);
    fs::write(&p, bytes).unwrap();
    let b = TourBundle::open(&out).unwrap();
    assert!(matches!(b.inventory(), Err(BundleError::SizeMismatch { .. })));

    compile_sample(&out, false);
    let p = out.join("scenes/intro/pano.jpg");
    let mut bytes = fs::read(&p).unwrap();
    let last = bytes.len() - 3;
    bytes[last] ^= 1;
    fs::write(&p, bytes).unwrap();
    assert!(matches!(TourBundle::open(&out).unwrap().verify(), Err(BundleError::DigestMismatch { .. })));
}

#[test]
fn refuses_to_overwrite_a_foreign_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("precious");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("notes.txt"), "keep me").unwrap();
    let src = sample_dir();
    let r = compile(&src.join("tour.json"), &src.join("media"), &out, &CompileOptions::default());
    assert!(matches!(r, Err(CompileError::OutDir(_))));
    assert_eq!(fs::read_to_string(out.join("notes.txt")).unwrap(), "keep me");
}

#[test]
fn unsafe_scene_ids_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = ONE_SCENE.replace("\"a\"", "\"../a\"");
    let m = write_tour(tmp.path(), &manifest, &[]);
    let r = compile(&m, &tmp.path().join("media"), &tmp.path().join("o"), &CompileOptions::default());
    assert!(matches!(r, Err(CompileError::SceneId(id)) if id == "../a"));
}

#[test]
fn cube_faces_use_the_requested_size() {
    let tmp = tempfile::tempdir().unwrap();
    let src = sample_dir();
    let opts = CompileOptions {
        cubemaps: true,
        face_size: Some(64),
        ..CompileOptions::default()
    };
    let c = compile(&src.join("tour.json"), &src.join("media"), &tmp.path().join("o"), &opts).unwrap();
    let files = c.bundle.scene_files("advance").unwrap();
    assert_eq!(files.cube_faces.len(), 6);
    let face = panotour::codec::decode_image(&fs::read(c.bundle.path_of(&files.cube_faces[&panotour::core::CubeFace::ALL[0]])).unwrap()).unwrap();
    assert_eq!((face.metadata.dims.width(), face.metadata.dims.height()), (64, 64));
}

//! Generators shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeSet;

use panotour_core::geometry::SphericalDirection;
use panotour_core::inventory::{AssetCategory, ByteInventory};
use panotour_core::profiler::{ClientModel, NetworkModel};
use panotour_core::tour::{Hotspot, HotspotPayload, InitialView, Scene, Tour};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub scenes: usize,
    pub start: usize,
    // (from, to) where `to` may exceed the scene count to make a dangling link
    pub links: Vec<(usize, usize, f64, f64)>,
    pub pictures: Vec<(usize, usize, f64, f64)>,
    pub missing: Vec<usize>,
}

pub fn graph_spec(max_scenes: usize) -> impl Strategy<Value = GraphSpec> {
    (1..=max_scenes).prop_flat_map(|n| {
        (
            Just(n),
            0..n,
            prop::collection::vec((0..n, 0..n + 1, -180.0f64..180.0, -90.0f64..=90.0), 0..(2 * n)),
            prop::collection::vec((0..n, 0..4usize, -180.0f64..180.0, -90.0f64..=90.0), 0..3),
            prop::collection::vec(0..n + 4, 0..3),
        )
            .prop_map(|(scenes, start, links, pictures, missing)| GraphSpec {
                scenes,
                start,
                links,
                pictures,
                missing,
            })
    })
}

pub fn build(spec: &GraphSpec, order: &[usize]) -> (Tour, BTreeSet<String>) {
    let mut scenes = Vec::new();
    for &i in order {
        let mut hotspots = Vec::new();
        for (k, &(from, to, yaw, pitch)) in spec.links.iter().enumerate() {
            if from == i {
                let dir = SphericalDirection::from_degrees(yaw, pitch).unwrap();
                let h = Hotspot::new(format!("l{k}"), "", dir, HotspotPayload::Link(format!("s{to}"))).unwrap();
                hotspots.push(h);
                // a near twin every third link exercises OVERLAP
                if k % 3 == 0 {
                    let twin = SphericalDirection::from_degrees(yaw + 0.5, pitch.clamp(-89.0, 89.0)).unwrap();
                    hotspots.push(
                        Hotspot::new(format!("t{k}"), "", twin, HotspotPayload::Text("note".into())).unwrap(),
                    );
                }
            }
        }
        for (k, &(at, pic, yaw, pitch)) in spec.pictures.iter().enumerate() {
            if at == i {
                let dir = SphericalDirection::from_degrees(yaw, pitch).unwrap();
                hotspots.push(
                    Hotspot::new(format!("p{k}"), "", dir, HotspotPayload::Picture(format!("pic{pic}.jpg"))).unwrap(),
                );
            }
        }
        scenes.push(Scene::new(format!("s{i}"), "", format!("pano{i}.jpg"), InitialView::default(), hotspots).unwrap());
    }
    let tour = Tour::new("t", "T", format!("s{}", spec.start), scenes).unwrap();
    let mut media: BTreeSet<String> = (0..spec.scenes).map(|i| format!("pano{i}.jpg")).collect();
    media.extend((0..4).map(|i| format!("pic{i}.jpg")));
    for m in &spec.missing {
        media.remove(&format!("pano{m}.jpg"));
        media.remove(&format!("pic{}.jpg", m % 4));
    }
    (tour, media)
}

fn category() -> impl Strategy<Value = AssetCategory> {
    prop::sample::select(AssetCategory::ALL.to_vec())
}

pub fn inventory(max: usize) -> impl Strategy<Value = ByteInventory> {
    prop::collection::vec((category(), 1u64..5_000_000), 1..=max).prop_map(|rows| {
        let mut inv = ByteInventory::default();
        for (i, (c, b)) in rows.into_iter().enumerate() {
            inv.push(format!("asset{i}"), c, b);
        }
        inv
    })
}

pub fn network() -> impl Strategy<Value = NetworkModel> {
    (1e5f64..1e8, 1.0f64..300.0, 1u32..8).prop_map(|(bandwidth_bps, rtt_ms, connections)| NetworkModel {
        bandwidth_bps,
        rtt_ms,
        connections,
    })
}

pub fn client() -> impl Strategy<Value = ClientModel> {
    (1e5f64..1e7, 1e6f64..1e8).prop_map(|(s, i)| ClientModel {
        script_bytes_per_sec: s,
        image_decode_bytes_per_sec: i,
    })
}

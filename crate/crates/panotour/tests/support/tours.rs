//! Random well-formed tours for manifest round trips.

use panotour::core::geometry::SphericalDirection;
use panotour::core::tour::{Hotspot, HotspotPayload, InitialView, Scene, Tour};
use proptest::prelude::*;

fn title() -> impl Strategy<Value = String> {
    prop_oneof![Just(String::new()), "[a-zA-Z0-9 \"\\\\/é°\t\n-]{1,16}"]
}

fn angles() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        (-180.0f64..180.0, -90.0f64..=90.0),
        (-180i32..=180, -90i32..=90).prop_map(|(y, p)| (y as f64, p as f64)),
        Just((180.0, 90.0)),
        Just((-180.0, -90.0)),
    ]
}

fn payload(scenes: usize) -> impl Strategy<Value = HotspotPayload> {
    prop_oneof![
        "[a-z]{1,6}(/[a-z0-9_-][a-z0-9_.-]{0,7}){0,2}\\.(png|jpg)".prop_map(HotspotPayload::Picture),
        "https://[a-z]{3,8}\\.example/[a-zA-Z0-9?=&]{0,10}".prop_map(HotspotPayload::Video),
        "[ -~]{1,40}".prop_map(HotspotPayload::Text),
        (0..scenes).prop_map(|i| HotspotPayload::Link(format!("scene-{i}"))),
    ]
}

/// Tours with up to `max_scenes` scenes and four hotspots per scene.
pub fn tour(max_scenes: usize) -> impl Strategy<Value = Tour> {
    (1..=max_scenes).prop_flat_map(|n| {
        let scene = (
            title(),
            angles(),
            1.0f64..179.0,
            prop::collection::vec((title(), angles(), payload(n)), 0..4),
        );
        (0..n, title(), prop::collection::vec(scene, n)).prop_map(move |(start, tour_title, scenes)| {
            let scenes = scenes
                .into_iter()
                .enumerate()
                .map(|(i, (t, (yaw, pitch), fov, hs))| {
                    let view =
                        InitialView::new(yaw.to_radians(), pitch.to_radians(), fov.to_radians()).unwrap();
                    let hotspots = hs
                        .into_iter()
                        .enumerate()
                        .map(|(k, (ht, (y, p), payload))| {
                            let dir = SphericalDirection::from_degrees(y, p).unwrap();
                            Hotspot::new(format!("h{k}"), ht, dir, payload).unwrap()
                        })
                        .collect();
                    Scene::new(format!("scene-{i}"), t, format!("panoramas/p{i}.jpg"), view, hotspots).unwrap()
                })
                .collect();
            Tour::new("generated", tour_title, format!("scene-{start}"), scenes).unwrap()
        })
    })
}

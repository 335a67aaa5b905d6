//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use panotour_core::inventory::{AssetCategory, ByteInventory};
use panotour_core::profiler::{ClientModel, NetworkModel};
use panotour_core::tour::{HotspotPayload, Tour, TourCode};

/// Scene ids reached by exhaustively enumerating every simple link path from the start scene.
pub fn reachable_by_path_enumeration(tour: &Tour) -> BTreeSet<String> {
    let ids: BTreeSet<&str> = tour.scenes().iter().map(|s| s.id()).collect();
    let edges: BTreeMap<&str, Vec<&str>> = tour
        .scenes()
        .iter()
        .map(|s| {
            let targets = s
                .hotspots()
                .iter()
                .filter_map(|h| match h.payload() {
                    HotspotPayload::Link(t) if ids.contains(t.as_str()) => Some(t.as_str()),
                    _ => None,
                })
                .collect();
            (s.id(), targets)
        })
        .collect();

    fn walk<'a>(
        at: &'a str,
        path: &mut Vec<&'a str>,
        edges: &BTreeMap<&'a str, Vec<&'a str>>,
        ends: &mut BTreeSet<String>,
    ) {
        ends.insert(at.to_string());
        for &next in edges.get(at).into_iter().flatten() {
            if !path.contains(&next) {
                path.push(next);
                walk(next, path, edges, ends);
                path.pop();
            }
        }
    }

    let mut ends = BTreeSet::new();
    let start = tour.start_scene();
    walk(start, &mut vec![start], &edges, &mut ends);
    ends
}

/// Haversine separation in degrees.
fn separation_deg(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (l1, p1) = a;
    let (l2, p2) = b;
    let h = ((p2 - p1) / 2.0).sin().powi(2) + p1.cos() * p2.cos() * ((l2 - l1) / 2.0).sin().powi(2);
    (2.0 * h.sqrt().min(1.0).asin()).to_degrees()
}

/// Expected (location, code) pairs computed from first principles.
pub fn expected_tour_findings(
    tour: &Tour,
    media: &BTreeSet<String>,
    overlap_deg: f64,
) -> BTreeSet<(String, TourCode)> {
    let ids: BTreeSet<&str> = tour.scenes().iter().map(|s| s.id()).collect();
    let reachable = reachable_by_path_enumeration(tour);
    let mut out = BTreeSet::new();
    for s in tour.scenes() {
        let base = format!("scenes/{}", s.id());
        if !media.contains(s.panorama()) {
            out.insert((format!("{base}/panorama"), TourCode::MissingMedia));
        }
        if !reachable.contains(s.id()) {
            out.insert((base.clone(), TourCode::Unreachable));
        }
        let hs = s.hotspots();
        for h in hs {
            let loc = format!("{base}/hotspots/{}", h.id());
            match h.payload() {
                HotspotPayload::Link(t) if !ids.contains(t.as_str()) => {
                    out.insert((loc, TourCode::DanglingLink));
                }
                HotspotPayload::Picture(r) if !media.contains(r) => {
                    out.insert((loc, TourCode::MissingMedia));
                }
                _ => {}
            }
        }
        for a in hs {
            for b in hs {
                if a.id() < b.id() {
                    let d = separation_deg(
                        (a.direction().yaw(), a.direction().pitch()),
                        (b.direction().yaw(), b.direction().pitch()),
                    );
                    if d < overlap_deg {
                        out.insert((format!("{base}/hotspots/{}", a.id()), TourCode::Overlap));
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub path: String,
    pub connection: u32,
    pub start_ms: f64,
    pub transfer_end_ms: f64,
    pub end_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleLoad {
    pub rows: Vec<OracleRow>,
    pub critical_path_ms: f64,
}

fn priority(c: AssetCategory) -> Option<u8> {
    match c {
        AssetCategory::Document => Some(0),
        AssetCategory::ViewerScript => Some(1),
        AssetCategory::ViewerStyle => Some(2),
        AssetCategory::Panorama => Some(3),
        AssetCategory::Preview => Some(4),
        AssetCategory::Cubemap | AssetCategory::Picture => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
enum Event {
    TransferDone { asset: usize, connection: usize },
    ProcessDone { asset: usize },
}

/// Single-threaded discrete-event simulation of the documented load model, with the
/// entry document and first panorama taken as the first rows of their categories.
pub fn event_list_simulate(inv: &ByteInventory, net: &NetworkModel, client: &ClientModel) -> OracleLoad {
    // eager list: stable sort by category priority, only the first panorama
    let mut eager: Vec<_> = Vec::new();
    let mut seen_pano = false;
    for (idx, r) in inv.rows().iter().enumerate() {
        let Some(p) = priority(r.category) else { continue };
        if r.category == AssetCategory::Panorama {
            if seen_pano {
                continue;
            }
            seen_pano = true;
        }
        eager.push((p, idx, r));
    }
    eager.sort_by_key(|(p, idx, _)| (*p, *idx));
    let assets: Vec<_> = eager.into_iter().map(|(_, _, r)| r).collect();
    let n = assets.len();
    if n == 0 {
        return OracleLoad {
            rows: vec![],
            critical_path_ms: 0.0,
        };
    }
    let transfer = |i: usize| net.rtt_ms + (assets[i].bytes as f64 * 8000.0) / net.bandwidth_bps;
    let process = |i: usize| {
        let rate = match assets[i].category {
            AssetCategory::Document | AssetCategory::ViewerScript | AssetCategory::ViewerStyle => {
                client.script_bytes_per_sec
            }
            _ => client.image_decode_bytes_per_sec,
        };
        (assets[i].bytes as f64 * 1000.0) / rate
    };

    let conns = net.connections as usize;
    let mut conn_busy = vec![false; conns];
    let mut rows: Vec<Option<OracleRow>> = vec![None; n];
    let mut pending: std::collections::VecDeque<usize> = Default::default();
    let mut main_queue: Vec<(f64, usize)> = Vec::new();
    let mut main_busy = false;
    let mut events: Vec<(f64, Event)> = Vec::new();

    conn_busy[0] = true;
    rows[0] = Some(OracleRow {
        path: assets[0].path.clone(),
        connection: 0,
        start_ms: 0.0,
        transfer_end_ms: transfer(0),
        end_ms: 0.0,
    });
    events.push((transfer(0), Event::TransferDone { asset: 0, connection: 0 }));

    let mut now;
    let mut critical = 0.0f64;
    while !events.is_empty() {
        now = events.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
        let (batch, rest): (Vec<_>, Vec<_>) = events.into_iter().partition(|e| e.0 == now);
        events = rest;
        for (_, ev) in batch {
            match ev {
                Event::TransferDone { asset, connection } => {
                    conn_busy[connection] = false;
                    main_queue.push((now, asset));
                }
                Event::ProcessDone { asset } => {
                    main_busy = false;
                    rows[asset].as_mut().unwrap().end_ms = now;
                    critical = critical.max(now);
                    if asset == 0 {
                        pending.extend(1..n);
                    }
                }
            }
        }
        // hand out requests to idle connections, lowest index first
        for c in 0..conns {
            if !conn_busy[c] {
                if let Some(a) = pending.pop_front() {
                    conn_busy[c] = true;
                    let end = now + transfer(a);
                    rows[a] = Some(OracleRow {
                        path: assets[a].path.clone(),
                        connection: c as u32,
                        start_ms: now,
                        transfer_end_ms: end,
                        end_ms: 0.0,
                    });
                    events.push((end, Event::TransferDone { asset: a, connection: c }));
                }
            }
        }
        if !main_busy && !main_queue.is_empty() {
            main_queue.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (_, a) = main_queue.remove(0);
            main_busy = true;
            events.push((now + process(a), Event::ProcessDone { asset: a }));
        }
    }
    OracleLoad {
        rows: rows.into_iter().map(|r| r.expect("every eager asset scheduled")).collect(),
        critical_path_ms: critical,
    }
}

//! Deterministic page-load simulation over a byte inventory.
//!
//! Model:
//!
//! * Every request costs one round trip plus `bytes · 8 / bandwidth`; each
//!   connection transfers at the full bandwidth.
//! * The entry document is fetched first on connection 0. The remaining
//!   eager assets are requested once the document has been processed and are
//!   assigned in list order to the connection that frees up first (lowest
//!   index on ties).
//! * Processing runs on a single main thread in order of transfer completion
//!   (list order on ties). Documents, scripts and styles run at the script
//!   rate, images at the decode rate.
//! * Eager assets, in order: entry document, other documents, viewer scripts,
//!   viewer styles, the first scene's panorama, scene previews. Everything
//!   else (other panoramas, cubemap faces, pictures) loads on demand and is
//!   reported as deferred.
//! * The critical path ends when the last eager asset has been processed.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::inventory::{AssetCategory, ByteInventory, InventoryRow};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkModel {
    pub bandwidth_bps: f64,
    pub rtt_ms: f64,
    pub connections: u32,
}

impl NetworkModel {
    /// 8 Mbit/s, 50 ms round trip, 6 parallel connections.
    pub const REFERENCE: NetworkModel = NetworkModel {
        bandwidth_bps: 8_000_000.0,
        rtt_ms: 50.0,
        connections: 6,
    };

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.bandwidth_bps > 0.0 && self.bandwidth_bps.is_finite()) {
            return Err(ModelError::Bandwidth);
        }
        if !(self.rtt_ms > 0.0 && self.rtt_ms.is_finite()) {
            return Err(ModelError::Rtt);
        }
        if self.connections == 0 {
            return Err(ModelError::Connections);
        }
        Ok(())
    }

    /// Payload time in milliseconds, excluding the round trip.
    #[inline]
    pub fn payload_ms(&self, bytes: u64) -> f64 {
        (bytes as f64 * 8000.0) / self.bandwidth_bps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClientModel {
    pub script_bytes_per_sec: f64,
    pub image_decode_bytes_per_sec: f64,
}

impl ClientModel {
    /// 1 MB/s of script work, 50 MB/s of image decoding.
    pub const REFERENCE: ClientModel = ClientModel {
        script_bytes_per_sec: 1_000_000.0,
        image_decode_bytes_per_sec: 50_000_000.0,
    };

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = |r: f64| r > 0.0 && r.is_finite();
        if !ok(self.script_bytes_per_sec) || !ok(self.image_decode_bytes_per_sec) {
            return Err(ModelError::ClientRate);
        }
        Ok(())
    }

    #[inline]
    pub fn processing_ms(&self, category: AssetCategory, bytes: u64) -> f64 {
        let rate = if category.is_image() {
            self.image_decode_bytes_per_sec
        } else {
            self.script_bytes_per_sec
        };
        (bytes as f64 * 1000.0) / rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelError {
    Bandwidth,
    Rtt,
    Connections,
    ClientRate,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelError::Bandwidth => "bandwidth must be positive",
            ModelError::Rtt => "round-trip time must be positive",
            ModelError::Connections => "at least one connection is required",
            ModelError::ClientRate => "client processing rates must be positive",
        })
    }
}

/// Which assets gate the first view.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadPolicy {
    /// Fetched first; defaults to the first document row.
    pub entry_document: Option<String>,
    /// Panorama of the start scene; defaults to the first panorama row.
    pub first_panorama: Option<String>,
}

impl LoadPolicy {
    /// Splits the inventory into the eager fetch list and the deferred rows.
    pub fn plan<'a>(&self, inv: &'a ByteInventory) -> (Vec<&'a InventoryRow>, Vec<&'a InventoryRow>) {
        let rows = inv.rows();
        let of = |c: AssetCategory| rows.iter().filter(move |r| r.category == c);
        let entry = match &self.entry_document {
            Some(p) => rows.iter().find(|r| &r.path == p),
            None => of(AssetCategory::Document).next(),
        };
        let first_pano = match &self.first_panorama {
            Some(p) => rows.iter().find(|r| &r.path == p && r.category == AssetCategory::Panorama),
            None => of(AssetCategory::Panorama).next(),
        };
        let is = |a: Option<&InventoryRow>, r: &InventoryRow| a.is_some_and(|a| core::ptr::eq(a, r));

        let mut eager: Vec<&InventoryRow> = Vec::new();
        eager.extend(entry);
        eager.extend(of(AssetCategory::Document).filter(|r| !is(entry, r)));
        eager.extend(of(AssetCategory::ViewerScript).filter(|r| !is(entry, r)));
        eager.extend(of(AssetCategory::ViewerStyle).filter(|r| !is(entry, r)));
        eager.extend(first_pano.filter(|r| !is(entry, r)));
        eager.extend(of(AssetCategory::Preview).filter(|r| !is(entry, r)));

        let deferred = rows
            .iter()
            .filter(|r| !eager.iter().any(|e| core::ptr::eq(*e, *r)))
            .collect();
        (eager, deferred)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CategoryTiming {
    pub category: AssetCategory,
    pub requests: u32,
    /// Round-trip share of the transfer time.
    pub latency_ms: f64,
    /// Payload share of the transfer time; scales with 1/bandwidth.
    pub transfer_ms: f64,
    pub processing_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimelineRow {
    pub path: String,
    pub category: AssetCategory,
    pub connection: u32,
    pub start_ms: f64,
    pub transfer_end_ms: f64,
    pub end_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeferredAsset {
    pub path: String,
    pub category: AssetCategory,
    pub bytes: u64,
    /// Round trip when fetched on its own.
    pub latency_ms: f64,
    pub transfer_ms: f64,
    pub processing_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LoadReport {
    pub categories: Vec<CategoryTiming>,
    pub critical_path_ms: f64,
    pub timeline: Vec<TimelineRow>,
    pub deferred: Vec<DeferredAsset>,
}

impl LoadReport {
    pub fn category(&self, c: AssetCategory) -> Option<&CategoryTiming> {
        self.categories.iter().find(|t| t.category == c)
    }
}

pub fn simulate_load(
    inv: &ByteInventory,
    net: &NetworkModel,
    client: &ClientModel,
    policy: &LoadPolicy,
) -> Result<LoadReport, ModelError> {
    net.validate()?;
    client.validate()?;
    let (eager, deferred) = policy.plan(inv);

    let n = eager.len();
    let mut start = alloc::vec![0.0f64; n];
    let mut transfer_end = alloc::vec![0.0f64; n];
    let mut conn_of = alloc::vec![0u32; n];
    let mut free_at = alloc::vec![0.0f64; net.connections as usize];

    let mut release = 0.0;
    if let Some(doc) = eager.first() {
        transfer_end[0] = net.rtt_ms + net.payload_ms(doc.bytes);
        free_at[0] = transfer_end[0];
        release = transfer_end[0] + client.processing_ms(doc.category, doc.bytes);
    }
    for i in 1..n {
        // a connection idle before the release instant counts as free at release
        let (c, s) = free_at
            .iter()
            .map(|&t| if t > release { t } else { release })
            .enumerate()
            .fold((0usize, f64::INFINITY), |best, (c, t)| if t < best.1 { (c, t) } else { best });
        start[i] = s;
        transfer_end[i] = s + (net.rtt_ms + net.payload_ms(eager[i].bytes));
        conn_of[i] = c as u32;
        free_at[c] = transfer_end[i];
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| transfer_end[a].total_cmp(&transfer_end[b]).then(a.cmp(&b)));
    let mut end = alloc::vec![0.0f64; n];
    let mut main_free = 0.0f64;
    for i in order {
        let begin = if transfer_end[i] > main_free { transfer_end[i] } else { main_free };
        end[i] = begin + client.processing_ms(eager[i].category, eager[i].bytes);
        main_free = end[i];
    }

    let timeline: Vec<TimelineRow> = (0..n)
        .map(|i| TimelineRow {
            path: eager[i].path.clone(),
            category: eager[i].category,
            connection: conn_of[i],
            start_ms: start[i],
            transfer_end_ms: transfer_end[i],
            end_ms: end[i],
        })
        .collect();
    let critical_path_ms = end.iter().copied().fold(0.0, f64::max);

    let deferred: Vec<DeferredAsset> = deferred
        .into_iter()
        .map(|r| DeferredAsset {
            path: r.path.clone(),
            category: r.category,
            bytes: r.bytes,
            latency_ms: net.rtt_ms,
            transfer_ms: net.payload_ms(r.bytes),
            processing_ms: client.processing_ms(r.category, r.bytes),
        })
        .collect();

    let categories = AssetCategory::ALL
        .into_iter()
        .map(|category| {
            let mut t = CategoryTiming {
                category,
                requests: 0,
                latency_ms: 0.0,
                transfer_ms: 0.0,
                processing_ms: 0.0,
            };
            for r in inv.rows().iter().filter(|r| r.category == category) {
                t.requests += 1;
                t.latency_ms += net.rtt_ms;
                t.transfer_ms += net.payload_ms(r.bytes);
                t.processing_ms += client.processing_ms(r.category, r.bytes);
            }
            t
        })
        .collect();

    Ok(LoadReport {
        categories,
        critical_path_ms,
        timeline,
        deferred,
    })
}

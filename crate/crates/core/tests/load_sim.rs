mod support;

use panotour_core::inventory::{AssetCategory, ByteInventory};
use panotour_core::profiler::*;
use proptest::prelude::*;
use support::oracles::event_list_simulate;
use support::strategies::{client, inventory, network};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matches_event_list_oracle(inv in inventory(20), net in network(), client in client()) {
        let report = simulate_load(&inv, &net, &client, &LoadPolicy::default()).unwrap();
        let oracle = event_list_simulate(&inv, &net, &client);
        prop_assert_eq!(report.critical_path_ms, oracle.critical_path_ms);
        prop_assert_eq!(report.timeline.len(), oracle.rows.len());
        for (got, want) in report.timeline.iter().zip(&oracle.rows) {
            prop_assert_eq!(&got.path, &want.path);
            prop_assert_eq!(got.connection, want.connection);
            prop_assert_eq!(got.start_ms, want.start_ms);
            prop_assert_eq!(got.transfer_end_ms, want.transfer_end_ms);
            prop_assert_eq!(got.end_ms, want.end_ms);
        }
    }

    #[test]
    fn every_asset_reported_once(inv in inventory(20), net in network()) {
        let report = simulate_load(&inv, &net, &ClientModel::REFERENCE, &LoadPolicy::default()).unwrap();
        let mut seen: Vec<&str> = report
            .timeline
            .iter()
            .map(|t| t.path.as_str())
            .chain(report.deferred.iter().map(|d| d.path.as_str()))
            .collect();
        seen.sort();
        let mut all: Vec<&str> = inv.rows().iter().map(|r| r.path.as_str()).collect();
        all.sort();
        prop_assert_eq!(seen, all);
        let max_end = report.timeline.iter().map(|t| t.end_ms).fold(0.0, f64::max);
        prop_assert!(report.critical_path_ms >= max_end);
        prop_assert!(report.deferred.iter().all(|d| d.category != AssetCategory::Preview));
    }

    #[test]
    fn doubling_bandwidth_halves_transfer(inv in inventory(20), net in network(), client in client()) {
        let fast = NetworkModel { bandwidth_bps: net.bandwidth_bps * 2.0, ..net };
        let a = simulate_load(&inv, &net, &client, &LoadPolicy::default()).unwrap();
        let b = simulate_load(&inv, &fast, &client, &LoadPolicy::default()).unwrap();
        for (x, y) in a.categories.iter().zip(&b.categories) {
            prop_assert_eq!(y.transfer_ms, x.transfer_ms / 2.0);
            prop_assert_eq!(y.latency_ms, x.latency_ms);
            prop_assert_eq!(y.processing_ms, x.processing_ms);
        }
        for (x, y) in a.deferred.iter().zip(&b.deferred) {
            prop_assert_eq!(y.transfer_ms, x.transfer_ms / 2.0);
        }
    }

    #[test]
    fn growing_an_asset_never_shortens_the_critical_path(
        inv in inventory(20),
        net in network(),
        client in client(),
        pick in any::<prop::sample::Index>(),
        extra in 1u64..10_000_000,
    ) {
        let before = simulate_load(&inv, &net, &client, &LoadPolicy::default()).unwrap();
        let mut rows = inv.rows().to_vec();
        let i = pick.index(rows.len());
        rows[i].bytes += extra;
        let grown = ByteInventory::new(rows);
        let after = simulate_load(&grown, &net, &client, &LoadPolicy::default()).unwrap();
        prop_assert!(after.critical_path_ms >= before.critical_path_ms);
    }

    #[test]
    fn one_connection_completes_in_list_order(inv in inventory(20), client in client()) {
        let net = NetworkModel { bandwidth_bps: 1e6, rtt_ms: 20.0, connections: 1 };
        let report = simulate_load(&inv, &net, &client, &LoadPolicy::default()).unwrap();
        for w in report.timeline.windows(2) {
            prop_assert!(w[0].transfer_end_ms <= w[1].start_ms);
        }
        let mut by_completion = report.timeline.clone();
        by_completion.sort_by(|a, b| a.end_ms.total_cmp(&b.end_ms));
        prop_assert_eq!(by_completion, report.timeline);
    }
}

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use survey_core::preference::{intersection_area, KiviatPolygon};
use survey_core::quality::{rank_stops, stop_probability, verdict_for_gap, SatisfactionRecord, Verdict};
use survey_core::routing::{brute_force_routes, OracleLimits};
use survey_core::sim::{generate_network, SynthParams};
use survey_core::{route_metrics, Objective, Router, RouterConfig, StateGraph, TransitGraph};

fn axis() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.01f64..1.0]
}

fn axes() -> impl Strategy<Value = [f64; 4]> {
    [axis(), axis(), axis(), axis()]
}

fn polygon(a: [f64; 4]) -> KiviatPolygon {
    KiviatPolygon::new(a[0], a[1], a[2], a[3])
}

fn record(origin: u8, unsatisfied: bool) -> SatisfactionRecord {
    SatisfactionRecord {
        rider_id: String::new(),
        origin: format!("s{origin}"),
        criterion: Objective::Distance,
        valc_real: 0.0,
        valc_opt: 0.0,
        lambda: 0.0,
        verdict: if unsatisfied { Verdict::Unsatisfactory } else { Verdict::Satisfactory },
    }
}

proptest! {
    #[test]
    fn intersection_is_symmetric_and_bounded(a in axes(), b in axes()) {
        let (a, b) = (polygon(a), polygon(b));
        let ab = intersection_area(&a, &b);
        let ba = intersection_area(&b, &a);
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ab >= 0.0);
        prop_assert!(ab <= a.area().min(b.area()) + 1e-12);
        prop_assert!((intersection_area(&a, &a) - a.area()).abs() <= 1e-12);
    }

    #[test]
    fn intersection_scales_quadratically(a in axes(), b in axes(), k in 0.1f64..10.0) {
        let s = |p: [f64; 4]| polygon(p.map(|v| v * k));
        let base = intersection_area(&polygon(a), &polygon(b));
        let scaled = intersection_area(&s(a), &s(b));
        prop_assert!((scaled - k * k * base).abs() <= 1e-9 * (1.0 + k * k * base));
    }

    #[test]
    fn stop_probability_matches_counting(rides in prop::collection::vec((0u8..8, any::<bool>()), 0..120)) {
        let records: Vec<_> = rides.iter().map(|&(o, u)| record(o, u)).collect();
        let mut want: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        for &(o, u) in &rides {
            let e = want.entry(format!("s{o}")).or_default();
            if u { e.0 += 1 } else { e.1 += 1 }
        }
        let got = stop_probability(&records);
        prop_assert_eq!(got.len(), want.len());
        for s in got {
            let (qr, qb) = want[&s.stop_id];
            prop_assert_eq!((s.qr, s.qb), (qr, qb));
            prop_assert_eq!(s.probability, qr as f64 / (qr + qb) as f64);
        }
    }

    #[test]
    fn ranking_is_sorted_and_filtered(rides in prop::collection::vec((0u8..8, any::<bool>()), 0..120), min in 0u64..6) {
        let stats = stop_probability(&rides.iter().map(|&(o, u)| record(o, u)).collect::<Vec<_>>());
        let ranked = rank_stops(&stats, min);
        prop_assert!(ranked.iter().all(|s| s.total() >= min));
        prop_assert_eq!(ranked.len(), stats.iter().filter(|s| s.total() >= min).count());
        prop_assert!(ranked.windows(2).all(|w| w[0].probability >= w[1].probability));
    }

    #[test]
    fn raising_lambda_never_adds_unsatisfied(gap in 0.0f64..20.0, l1 in 0.0f64..20.0, l2 in 0.0f64..20.0) {
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        if verdict_for_gap(gap, hi) == Verdict::Unsatisfactory {
            prop_assert_eq!(verdict_for_gap(gap, lo), Verdict::Unsatisfactory);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn router_matches_exhaustive_search(seed in any::<u64>(), lines in 2usize..6, cap in 0u32..4) {
        let params = SynthParams {
            grid_cols: 4,
            grid_rows: 3,
            max_step: 2,
            line_count: lines,
            line_length: [2, 6],
            speed_kmh: [10.0, 40.0],
            ..Default::default()
        };
        let (net, times) = generate_network(&params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let graph = TransitGraph::build(&net);
        let states = StateGraph::build(&net, &times);
        let router = Router::new(&net, &graph, &states, RouterConfig { max_transfers: cap });
        let limits = OracleLimits::for_network(&net, cap);
        for o in net.stops() {
            for d in net.stops() {
                if o.id == d.id {
                    continue;
                }
                let all = brute_force_routes(&net, &o.id, &d.id, limits).unwrap();
                let set = router.optimal_set(&o.id, &d.id).unwrap();
                prop_assert_eq!(all.is_empty(), set.iter().all(Option::is_none));
                if all.is_empty() {
                    continue;
                }
                for obj in Objective::AXES {
                    let best = all
                        .iter()
                        .map(|r| route_metrics(r, &net, &times).unwrap().value(obj))
                        .fold(f64::INFINITY, f64::min);
                    let got = set[obj.axis()].as_ref().unwrap();
                    prop_assert!(got.metrics.transfers <= cap);
                    prop_assert!((got.metrics.value(obj) - best).abs() <= 1e-9 * best.max(1.0));
                }
            }
        }
    }
}

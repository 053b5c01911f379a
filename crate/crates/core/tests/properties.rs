//! Randomized checks of the scheme's structural invariants.

use coded_caching::bounds::{cutset_bound, sota_envelope, stc_bound};
use coded_caching::combin::ratio;
use coded_caching::decoder::decode_all;
use coded_caching::delivery::{deliver, select_leaders, PhaseCounts};
use coded_caching::model::{subfile_index, Demand, Library, Phase, SystemParams};
use coded_caching::placement::build_placement;
use coded_caching::rates::{rate_theorem1, scheme_envelope, transmission_count};
use proptest::prelude::*;

/// `(N, K, g, demand, seed)` with N <= 5, K <= 7.
fn instance() -> impl Strategy<Value = (usize, usize, usize, Vec<usize>, u64)> {
    (1usize..=5, 0usize..=2).prop_flat_map(|(n, extra)| {
        let k = n + extra;
        (Just(n), Just(k), 1..=n, prop::collection::vec(1..=n, k), any::<u64>())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_instances_decode_and_match_counts((n, k, g, files, seed) in instance()) {
        let params = SystemParams::new(n, k, g, 3).unwrap();
        let placement = build_placement(&params, Library::generate(&params, seed)).unwrap();
        let demand = Demand::new(&params, files).unwrap();
        let log = deliver(&placement, &demand, &select_leaders(&demand)).unwrap();

        let ne = demand.distinct();
        prop_assert_eq!(log.len() as u64, transmission_count(&params, ne).unwrap());
        let counts = PhaseCounts::closed_form(&params, ne);
        for p in Phase::ALL {
            prop_assert_eq!(log.count(p) as u64, counts.of_phase(p));
        }
        let rate = rate_theorem1(&params, ne).unwrap() * ratio(params.subfiles_per_file() as i64, 1);
        prop_assert!(rate.is_integer());

        for m in log.messages() {
            let weight = m.footprint.weight();
            prop_assert!(weight >= 1 && weight <= g + 1);
            match m.phase {
                Phase::TypeI | Phase::TypeIIPhase1 => prop_assert_eq!(weight, 1),
                Phase::TypeIIPhase2 | Phase::TypeIIIPhase1 => prop_assert_eq!(weight, 2),
                Phase::TypeIIIPhase2 => prop_assert_eq!(weight, g + 1),
            }
        }
        for o in decode_all(&placement, &log, &demand, true) {
            prop_assert!(o.decoded, "user {} failed: {:?}", o.user, o.error);
            prop_assert!(o.oracle.unwrap().decodable);
        }
    }

    #[test]
    fn placement_partitions_subfiles((n, k, g, _files, seed) in instance()) {
        let params = SystemParams::new(n, k, g, 2).unwrap();
        let a = build_placement(&params, Library::generate(&params, seed)).unwrap();
        let mut hits = vec![0u8; params.subfile_count()];
        for user in 1..=k {
            prop_assert_eq!(a.cache(user).len(), params.symbols_per_cache());
            for sym in a.cache(user) {
                for id in sym.constituents() {
                    hits[subfile_index(&params, &id).unwrap()] += 1;
                }
            }
        }
        prop_assert!(hits.iter().all(|&h| h == 1));
        // the same library gives the same caches, whatever is later requested
        let b = build_placement(&params, Library::generate(&params, seed)).unwrap();
        for user in 1..=k {
            prop_assert_eq!(a.cache(user), b.cache(user));
        }
    }

    #[test]
    fn bounds_sandwich_the_scheme(n in 1usize..=6, extra in 0usize..=8, j in 0i64..=40) {
        let k = n + extra;
        let scheme = scheme_envelope(n, k).unwrap();
        let m = ratio(1, k as i64) + ratio(n as i64 - 1, k as i64) * ratio(j, 40);
        let new = scheme.eval(&m).unwrap();
        let cut = cutset_bound(n, k, &m).unwrap();
        let stc = stc_bound(n, k, &m).unwrap();
        prop_assert!(cut <= new);
        prop_assert!(stc <= new);
        if 2 * k <= n * n + 1 {
            prop_assert!(new <= sota_envelope(n, k).unwrap().eval(&m).unwrap());
        }
    }
}

use ndslab::analysis::{entropy_estimate, greedy_separated, grid, ly_classify, Classification};
use ndslab::blowup::{Atlas, LimitMapBundle};
use ndslab::constructions::BlockProgram;
use ndslab::plmap::PLMap;
use ndslab::rational::{half, q, zero};
use ndslab::symbolic::{Block, Code};
use ndslab::Q;
use proptest::prelude::*;

/// Continuous PL maps with breakpoints on the 1/24 grid and values on 1/12.
fn pl_map() -> impl Strategy<Value = PLMap> {
    (proptest::collection::btree_set(1i64..24, 0..5), proptest::collection::vec(0i64..=12, 6))
        .prop_map(|(inner, ys)| {
            let mut xs = vec![q(0, 1)];
            xs.extend(inner.into_iter().map(|k| q(k, 24)));
            xs.push(q(1, 1));
            let ys = (0..xs.len()).map(|i| q(ys[i], 12)).collect();
            PLMap::new(xs, ys).expect("valid map")
        })
}

fn code() -> impl Strategy<Value = Code> {
    (proptest::collection::vec(0u8..=1, 0..10), 0u8..=1)
        .prop_map(|(bits, tail)| Code::canonicalize(&bits, tail))
}

fn point() -> impl Strategy<Value = Q> {
    (0i64..=96).prop_map(|k| q(k, 96))
}

proptest! {
    #[test]
    fn compose_evaluates_pointwise(f in pl_map(), g in pl_map(), x in point()) {
        let fg = f.compose(&g);
        prop_assert_eq!(fg.eval(&x).unwrap(), f.eval(&g.eval(&x).unwrap()).unwrap());
    }

    #[test]
    fn compose_is_associative(f in pl_map(), g in pl_map(), h in pl_map()) {
        let a = f.compose(&g).compose(&h);
        let b = f.compose(&g.compose(&h));
        prop_assert_eq!(a.sup_distance(&b), zero());
    }

    #[test]
    fn identity_is_neutral(f in pl_map()) {
        let id = PLMap::identity();
        prop_assert_eq!(f.compose(&id).sup_distance(&f), zero());
        prop_assert_eq!(id.compose(&f).sup_distance(&f), zero());
    }

    #[test]
    fn sup_distance_is_a_metric(f in pl_map(), g in pl_map(), h in pl_map()) {
        prop_assert_eq!(f.sup_distance(&f), zero());
        prop_assert_eq!(f.sup_distance(&g), g.sup_distance(&f));
        prop_assert!(f.sup_distance(&h) <= f.sup_distance(&g) + g.sup_distance(&h));
    }

    #[test]
    fn sup_distance_dominates_samples(f in pl_map(), g in pl_map(), x in point()) {
        let d = f.eval(&x).unwrap() - g.eval(&x).unwrap();
        let d = if d < zero() { -d } else { d };
        prop_assert!(d <= f.sup_distance(&g));
    }

    #[test]
    fn laps_are_submultiplicative(f in pl_map(), g in pl_map()) {
        prop_assert!(f.compose(&g).lap_count() <= f.lap_count() * g.lap_count());
    }

    #[test]
    fn json_round_trip(f in pl_map()) {
        let s = serde_json::to_string(&f).unwrap();
        let back: PLMap = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn alpha_is_invertible(c in code()) {
        prop_assert_eq!(c.succ().pred(), c.clone());
        prop_assert_eq!(c.pred().succ(), c.clone());
        prop_assert_eq!(c.succ().orbit_index(), c.orbit_index() + 1);
        prop_assert_eq!(Code::from_index(c.orbit_index()), c);
    }

    #[test]
    fn alpha_pow_matches_iteration(c in code(), n in 0i64..40) {
        let mut cur = c.clone();
        for _ in 0..n {
            cur = cur.succ();
        }
        prop_assert_eq!(c.alpha_pow(n), cur.clone());
        prop_assert_eq!(cur.alpha_pow(-n), c);
    }

    #[test]
    fn tau_is_an_involution(c in code(), w in proptest::collection::vec(0u8..=1, 1..6)) {
        let w = Block::new(w).unwrap();
        prop_assert_eq!(c.tau(&w).tau(&w), c.clone());
        prop_assert_eq!(c.tau(&w).starts_with(&w), c.starts_with(&w));
    }

    #[test]
    fn zero_has_eta_period_two_to_the_k(w in proptest::collection::vec(0u8..=1, 1..6)) {
        let w = Block::new(w).unwrap();
        let period = 1u64 << w.len();
        prop_assert_eq!(Code::zeros().eta_period(&w, 2 * period), Some(period));
    }

    #[test]
    fn greedy_witnesses_are_separated(f in pl_map(), k in 2i64..12) {
        let prog = BlockProgram::autonomous("f", f);
        let cands = grid(&zero(), &q(1, 1), 64);
        let eps = q(1, 2 * k);
        let r = greedy_separated(&prog, &cands, &[1, 2, 3], 3, &eps).unwrap();
        prop_assert!(r.verified);
        prop_assert!(r.cardinality >= 1);
    }

    #[test]
    fn entropy_table_monotone_in_epsilon(f in pl_map()) {
        let prog = BlockProgram::autonomous("f", f);
        let cands = grid(&zero(), &q(1, 1), 64);
        let eps = [q(1, 4), q(1, 8), q(1, 16)];
        let r = entropy_estimate(&prog, &cands, &[1, 2, 3, 4], &eps, &[2, 4]).unwrap();
        for n in [2, 4] {
            let cards: Vec<usize> = eps
                .iter()
                .map(|e| r.cells.iter().find(|c| c.n == n && c.epsilon == *e).unwrap().cardinality)
                .collect();
            prop_assert!(cards.windows(2).all(|w| w[0] <= w[1]));
            for c in r.cells.iter().filter(|c| c.n == n) {
                prop_assert!(c.log_card_over_n <= (cands.len() as f64).ln() / n as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn a_point_is_asymptotic_to_itself(f in pl_map(), x in point()) {
        let prog = BlockProgram::autonomous("f", f);
        let v = ly_classify(&prog, &x, &x, 8, &q(1, 100)).unwrap();
        prop_assert_eq!(v.classification, Classification::AsymptoticCandidate);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn limit_map_moves_intervals_along_the_orbit(depth in 2usize..8) {
        let b = LimitMapBundle::build(Atlas::build(depth, half(), 4).unwrap()).unwrap();
        let atlas = &b.atlas;
        prop_assert_eq!(atlas.total_g_length() + atlas.total_gap_length(), q(1, 1));
        prop_assert_eq!(atlas.entries().len(), 2 << depth);
        for e in atlas.entries() {
            if b.frontier_codes.contains(&e.code) {
                continue;
            }
            prop_assert_eq!(&b.f.image(&e.g), atlas.require(&e.code.succ()).unwrap());
        }
        prop_assert!(b.verify_orbit_action(b.exact_horizon).unwrap().passed());
    }
}

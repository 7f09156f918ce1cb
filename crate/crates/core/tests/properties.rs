use std::sync::Arc;

use proptest::prelude::*;

use ivp_core::estimators::component_median;
use ivp_core::fields::Sine;
use ivp_core::holder::uniform_grid;
use ivp_core::taylor::{integrate_w_along, local_step};
use ivp_core::{choose_k, validate_holder, CostLedger, HolderParams, IvpProblem, TwoLevelMesh};

fn ledger() -> impl Strategy<Value = CostLedger> {
    (0u64..1 << 40, 0u64..1 << 40, 0u64..1 << 40, 0u64..1 << 40, 0u64..1 << 40).prop_map(|(f, d, q, r, s)| {
        let mut l = CostLedger::new();
        l.charge_f(f);
        l.charge_deriv(d);
        l.charge_queries(q);
        l.charge_draws(r);
        l.charge_sim(s);
        l
    })
}

proptest! {
    #[test]
    fn locate_finds_a_covering_piece(a in -10.0..10.0f64, len in 0.01..20.0f64, n in 1usize..40, m in 1usize..40, u in 0.0..=1.0f64) {
        let mesh = TwoLevelMesh::new(a, a + len, n, m).unwrap();
        let t = (a + u * len).min(mesh.b);
        let (i, j) = mesh.locate(t).unwrap();
        prop_assert!(mesh.fine(i, j) <= t && t <= mesh.fine(i, j + 1));
    }

    #[test]
    fn mesh_points_nest_and_increase(a in -5.0..5.0f64, len in 0.01..10.0f64, n in 1usize..30, m in 1usize..30) {
        let mesh = TwoLevelMesh::new(a, a + len, n, m).unwrap();
        let pts: Vec<f64> = mesh.points().collect();
        prop_assert_eq!(pts.len(), n * m + 1);
        prop_assert!(pts.windows(2).all(|w| w[0] < w[1]));
        for i in 0..=n {
            prop_assert_eq!(pts[i * m], mesh.coarse(i));
        }
        prop_assert_eq!(pts[0], mesh.a);
        prop_assert_eq!(*pts.last().unwrap(), mesh.b);
    }

    #[test]
    fn ledger_addition_is_associative(x in ledger(), y in ledger(), z in ledger()) {
        prop_assert_eq!((x + y) + z, x + (y + z));
        prop_assert_eq!((x + y).since(&x), y);
        prop_assert_eq!((x + y).total(), x.total() + y.total());
    }

    #[test]
    fn median_lies_within_runs(runs in prop::collection::vec(prop::collection::vec(-1e6..1e6f64, 3), 1..8)) {
        let mut runs = runs;
        if runs.len() % 2 == 0 {
            runs.pop();
        }
        let med = component_median(&runs);
        for c in 0..3 {
            let lo = runs.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
            let hi = runs.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= med[c] && med[c] <= hi);
        }
        let mut reversed = runs.clone();
        reversed.reverse();
        prop_assert_eq!(component_median(&reversed), med);
    }

    #[test]
    fn choose_k_is_monotone(n in 1usize..200, delta in 0.001..0.49f64) {
        let k = choose_k(n, delta).unwrap();
        prop_assert!(choose_k(n + 1, delta).unwrap() >= k);
        prop_assert!(choose_k(n, (delta * 0.5).max(1e-4)).unwrap() >= k);
    }

    #[test]
    fn validation_is_monotone_in_the_bounds(d0 in 0.1..2.0f64, h in 0.1..2.0f64, grow in 1.0..3.0f64) {
        let problem = IvpProblem::new(Arc::new(Sine), vec![1.0], 0.0, 1.0).unwrap();
        let grid = uniform_grid(-2.0, 2.0, 21);
        let tight = HolderParams::new(0, 1.0, vec![d0], h).unwrap();
        let loose = HolderParams::new(0, 1.0, vec![d0 * grow], h * grow).unwrap();
        let a = validate_holder(&problem, &tight, &grid, 0.0).unwrap();
        let b = validate_holder(&problem, &loose, &grid, 0.0).unwrap();
        prop_assert!(b.violations.len() <= a.violations.len());
        if a.passed() {
            prop_assert!(b.passed());
        }
    }

    #[test]
    fn w_integrals_are_additive(y in -3.0..3.0f64, r in 0usize..4, split in 0.0..1.0f64) {
        let problem = IvpProblem::new(Arc::new(Sine), vec![1.0], 0.0, 1.0).unwrap();
        prop_assume!(y.sin().abs() > 1e-3);
        let (piece, w, _) = local_step(&problem, &[y], 0.5, 0.1, r, &mut CostLedger::new()).unwrap();
        let mid = 0.5 + 0.1 * split;
        let whole = integrate_w_along(&w, &piece, 0.5, 0.6)[0];
        let parts = integrate_w_along(&w, &piece, 0.5, mid)[0] + integrate_w_along(&w, &piece, mid, 0.6)[0];
        prop_assert!((whole - parts).abs() <= 1e-15);
    }
}

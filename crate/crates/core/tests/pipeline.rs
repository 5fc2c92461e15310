use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unwrap_dd::decomp::{run_with_costs, split_costs, DecompConfig};
use unwrap_dd::graph::{
    build_constraints, build_cycle_basis, build_decomposition, build_grid_graph, k5_fixture, ArcLevel,
    TreeRule, UnwrapGraph,
};
use unwrap_dd::mcf::{read_dimacs, solve_cost_scaling, write_dimacs};
use unwrap_dd::oracle::{solve_brute_force, solve_lp_exact, DenseLP};
use unwrap_dd::phase::{compute_costs, synthesize, CostModel, CostScheme, Surface, WrappedField, COST_UNITS};

fn optimum(g: &UnwrapGraph, f: &WrappedField, costs: &CostModel, brute: bool) -> i64 {
    let basis = build_cycle_basis(g, &TreeRule::default()).unwrap();
    let cs = build_constraints(g, &basis, &f.wrapped_gradients(g)).unwrap();
    let arc_costs: Vec<i64> = costs.units().iter().flat_map(|&c| [c, c]).collect();
    let lp = DenseLP::from_constraints(&cs, &arc_costs, 1).unwrap();
    if brute {
        solve_brute_force(&lp).unwrap().objective
    } else {
        solve_lp_exact(&lp).unwrap().objective
    }
}

#[test]
fn k5_reaches_the_enumerated_optimum() {
    let (g, d) = k5_fixture().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let psi: Vec<f32> = (0..5).map(|_| rng.random_range(-3.1..3.1)).collect();
        let f = WrappedField::new(1, 5, psi);
        let costs = CostModel::uniform(g.num_edges());
        let opt = optimum(&g, &f, &costs, true);
        let r = run_with_costs(&f, &g, &d, &costs, &DecompConfig::default()).unwrap().report;
        assert!(r.coverage_condition);
        assert!(r.best_dual_units <= opt);
        assert!((opt - r.best_dual_units) as f64 <= 1e-3 * opt as f64, "{} vs {opt}", r.best_dual_units);
        assert_eq!(r.primal_objective_units, opt);
    }
}

#[test]
fn small_grid_gap_and_monotone_best() {
    let g = build_grid_graph(12, 12, ArcLevel::Diagonal).unwrap();
    let d = build_decomposition(&g, ArcLevel::Diagonal).unwrap();
    let f = synthesize(&Surface::Peaks { amplitude: 0.6 }, 12, 12, 0.4, 3).unwrap();
    let costs = compute_costs(&f, &g, CostScheme::Variance).unwrap();
    let opt = optimum(&g, &f, &costs, false);
    let r = run_with_costs(&f, &g, &d, &costs, &DecompConfig::default()).unwrap().report;
    assert!(r.iterations.windows(2).all(|w| w[0].best_dual <= w[1].best_dual));
    let gap = (opt - r.best_dual_units) as f64 / opt as f64;
    assert!((0.0..=1e-3).contains(&gap), "gap {gap}");
    assert!(r.primal_objective_units >= opt);
}

#[test]
fn dimacs_round_trip_keeps_the_optimum() {
    let g = build_grid_graph(6, 6, ArcLevel::Planar).unwrap();
    let d = build_decomposition(&g, ArcLevel::Planar).unwrap();
    let f = synthesize(&Surface::Peaks { amplitude: 0.6 }, 6, 6, 1.0, 2).unwrap();
    let costs: Vec<i64> = compute_costs(&f, &g, CostScheme::Variance)
        .unwrap()
        .units()
        .iter()
        .flat_map(|&c| [c, c])
        .collect();
    let net = unwrap_dd::mcf::build_dual_network(&g, d.subgraph(0), &f.wrapped_gradients(&g), &costs, 1).unwrap();
    let text = write_dimacs(&net.problem);
    let back = read_dimacs(&text).unwrap();
    assert_eq!(
        solve_cost_scaling(&back, 8).unwrap().objective,
        solve_cost_scaling(&net.problem, 8).unwrap().objective
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shares_sum_to_the_edge_cost(size in 3usize..7, r in 0u8..3, seed in 0u64..1000) {
        let level = ArcLevel::from_index(r).unwrap();
        let g = build_grid_graph(size, size, level).unwrap();
        let d = build_decomposition(&g, level).unwrap();
        let f = synthesize(&Surface::Peaks { amplitude: 0.6 }, size, size, 0.8, seed).unwrap();
        let costs = compute_costs(&f, &g, CostScheme::Variance).unwrap();
        let shares = split_costs(&costs, &g, &d);
        let units = costs.units();
        for (e, &c) in units.iter().enumerate() {
            for a in [2 * e, 2 * e + 1] {
                let total: i64 = shares.shares.iter().map(|s| s[a]).sum();
                prop_assert_eq!(total, c);
                prop_assert!(c <= COST_UNITS);
            }
        }
    }

    #[test]
    fn every_dual_value_is_a_lower_bound(size in 3usize..6, r in 1u8..3, seed in 0u64..1000) {
        let level = ArcLevel::from_index(r).unwrap();
        let g = build_grid_graph(size, size, level).unwrap();
        let d = build_decomposition(&g, level).unwrap();
        let f = synthesize(&Surface::Peaks { amplitude: 0.6 }, size, size, 1.0, seed).unwrap();
        let costs = compute_costs(&f, &g, CostScheme::Variance).unwrap();
        let opt = optimum(&g, &f, &costs, false);
        let config = DecompConfig { max_iterations: 300, ..DecompConfig::default() };
        let r = run_with_costs(&f, &g, &d, &costs, &config).unwrap().report;
        for it in &r.iterations {
            prop_assert!((it.dual * COST_UNITS as f64).round() as i64 <= opt);
        }
        prop_assert!(r.primal_objective_units >= opt);
    }
}

use super::*;
use crate::graph::{build_decomposition, build_grid_graph, ArcLevel, Embedding, SubgraphSpec};
use crate::mcf::solve_cost_scaling;
use crate::oracle::{solve_lp_exact, DenseLP};
use crate::phase::{synthesize, Surface};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn angle(g: &UnwrapGraph, v: usize, e: usize) -> f64 {
    let (r0, c0) = g.position(v);
    let (r1, c1) = g.position(g.edge(e).other(v));
    (r1 as f64 - r0 as f64).atan2(c1 as f64 - c0 as f64)
}

fn noisy_field(rows: usize, cols: usize, seed: u64) -> WrappedField {
    synthesize(&Surface::Peaks { amplitude: 0.6 }, rows, cols, 0.6, seed).unwrap()
}

fn oracle_objective(f: &WrappedField, g: &UnwrapGraph, costs: &CostModel) -> i64 {
    let basis = build_cycle_basis(g, &TreeRule::default()).unwrap();
    let cs = build_constraints(g, &basis, &f.wrapped_gradients(g)).unwrap();
    let arc_costs: Vec<i64> = costs.units().iter().flat_map(|&c| [c, c]).collect();
    solve_lp_exact(&DenseLP::from_constraints(&cs, &arc_costs, 1).unwrap())
        .unwrap()
        .objective
}

#[test]
fn shared_edge_splits_evenly() {
    let g = build_grid_graph(3, 3, ArcLevel::Diagonal).unwrap();
    let d = build_decomposition(&g, ArcLevel::Diagonal).unwrap();
    let costs = CostModel::uniform(g.num_edges());
    let shares = split_costs(&costs, &g, &d);
    for e in 0..g.num_edges() {
        let members = d.membership(e);
        for a in [arc_index(e, true), arc_index(e, false)] {
            let total: i64 = (0..d.num_subgraphs()).map(|k| shares.shares[k][a]).sum();
            assert_eq!(total, COST_UNITS);
            for &k in members {
                let exact = COST_UNITS as f64 / members.len() as f64;
                assert!((shares.shares[k][a] as f64 - exact).abs() < 1.0);
            }
            if members.len() == 2 {
                assert_eq!(shares.share(members[0], a), 0.5);
            }
        }
    }
}

#[test]
fn remainder_goes_to_lowest_subgraph() {
    let g = build_grid_graph(3, 3, ArcLevel::Diagonal).unwrap();
    let d = build_decomposition(&g, ArcLevel::Diagonal).unwrap();
    let e = (0..g.num_edges()).find(|&e| d.membership(e).len() >= 2).unwrap();
    let m = d.membership(e);
    let mut costs = CostModel::uniform(g.num_edges());
    costs.costs[e] = (m.len() + 1) as f64 / COST_UNITS as f64;
    let shares = split_costs(&costs, &g, &d);
    assert_eq!(shares.shares[m[0]][2 * e], 2);
    for &k in &m[1..] {
        assert_eq!(shares.shares[k][2 * e], 1);
    }
}

#[test]
fn subgradient_step_moves_toward_mean() {
    let g = UnwrapGraph::from_edges(2, &[(0, 1)]).unwrap();
    let specs = (0..2)
        .map(|_| SubgraphSpec {
            edges: vec![0],
            embedding: Embedding::from_rotation(g.edges(), vec![vec![(1, 0)], vec![(0, 0)]]),
            tree: TreeRule::default(),
        })
        .collect();
    let d = Decomposition::from_specs(&g, specs).unwrap();
    let mut state = DualState::new(2, 2, 0.5);
    update_duals(&mut state, &g, &d, &[vec![1, 0], vec![0, 0]]);
    assert_eq!(state.lambda(0, 0), 0.25);
    assert_eq!(state.lambda(1, 0), -0.25);
    assert_eq!(state.lambda(0, 1), 0.0);
    // Agreement leaves the multipliers alone.
    update_duals(&mut state, &g, &d, &[vec![1, 0], vec![1, 0]]);
    assert_eq!(state.lambda(0, 0), 0.25);
}

#[test]
fn schedule_reacts_to_relative_change() {
    let config = DecompConfig::default();
    let mut state = DualState::new(1, 2, 0.1);
    assert_eq!(step_schedule(&mut state, 0.05, &config), ScheduleAction::Continue);
    assert_eq!(state.phase, Phase::Constant);
    assert_eq!(step_schedule(&mut state, 0.01, &config), ScheduleAction::Halved);
    assert_eq!(state.phase, Phase::Decaying);
    assert_eq!(state.step_size, 0.05);
    // A flat window with a large step keeps halving.
    assert_eq!(step_schedule(&mut state, 0.0005, &config), ScheduleAction::Halved);
    assert_eq!(state.step_size, 0.025);
    state.step_size = config.min_step;
    assert_eq!(step_schedule(&mut state, 0.0005, &config), ScheduleAction::Terminate);
    assert_eq!(relative_change(100, 101), 1.0 / 101.0);
    assert_eq!(relative_change(0, 0), 0.0);
}

#[test]
fn consensus_takes_agreed_value_or_lowest_copy() {
    let g = build_grid_graph(2, 3, ArcLevel::Diagonal).unwrap();
    let d = build_decomposition(&g, ArcLevel::Diagonal).unwrap();
    assert!(d.num_subgraphs() >= 2);
    let e = (0..g.num_edges()).find(|&e| d.membership(e).len() >= 2).unwrap();
    let mut deltas = vec![vec![0i64; g.num_arcs()]; d.num_subgraphs()];
    let m = d.membership(e).to_vec();
    deltas[m[0]][2 * e] = 1;
    deltas[m[1]][2 * e + 1] = 1;
    let costs = vec![1; g.num_arcs()];
    let c = extract_consensus(&g, &d, &deltas, &costs);
    assert_eq!(c.delta[2 * e], 1);
    assert_eq!(c.delta[2 * e + 1], 0);
    assert_eq!(c.primal_objective, 1);
    let expected = (g.num_edges() - 1) as f64 / g.num_edges() as f64;
    assert!((c.agreement_fraction - expected).abs() < 1e-12);
}

#[test]
fn single_subgraph_matches_direct_solve() {
    let g = build_grid_graph(8, 8, ArcLevel::Planar).unwrap();
    let d = build_decomposition(&g, ArcLevel::Planar).unwrap();
    assert_eq!(d.num_subgraphs(), 1);
    for seed in 0..5 {
        let f = noisy_field(8, 8, seed);
        let config = DecompConfig::default();
        let out = run(&f, &g, &d, &config).unwrap();
        let costs = compute_costs(&f, &g, config.cost_scheme).unwrap();
        let arc_costs: Vec<i64> = costs.units().iter().flat_map(|&c| [c, c]).collect();
        let net = build_dual_network(&g, d.subgraph(0), &f.wrapped_gradients(&g), &arc_costs, 1).unwrap();
        let direct = solve_cost_scaling(&net.problem, 8).unwrap();
        assert_eq!(out.flows, extract_primal_flows(&net, &direct));
        assert_eq!(out.report.primal_objective_units, direct.objective);
        assert_eq!(out.report.best_dual_units, direct.objective);
        assert_eq!(out.report.termination, Termination::Certified);
        assert_eq!(out.report.iterations.len(), 1);
    }
}

#[test]
fn dual_bound_reaches_oracle_with_coverage() {
    for level in [ArcLevel::Diagonal, ArcLevel::Distance2] {
        let g = build_grid_graph(6, 6, level).unwrap();
        let d = build_decomposition(&g, level).unwrap();
        for seed in 0..3 {
            let f = noisy_field(6, 6, seed);
            let costs = compute_costs(&f, &g, CostScheme::Variance).unwrap();
            let opt = oracle_objective(&f, &g, &costs);
            let out = run_with_costs(&f, &g, &d, &costs, &DecompConfig::default()).unwrap();
            let r = &out.report;
            assert!(r.coverage_condition);
            assert!(r.best_dual_units <= opt, "{level:?} seed {seed}");
            assert!(r.primal_objective_units >= opt);
            let gap = (opt - r.best_dual_units) as f64 / opt.max(1) as f64;
            assert!(gap <= 1e-3, "{level:?} seed {seed}: gap {gap}");
        }
    }
}

#[test]
fn acyclic_pieces_leave_a_gap() {
    let g = build_grid_graph(2, 2, ArcLevel::Planar).unwrap();
    let specs = [[0usize, 1], [2, 3]]
        .iter()
        .map(|edges| SubgraphSpec {
            edges: edges.to_vec(),
            embedding: Embedding::from_angles(4, g.edges(), edges, |v, e| angle(&g, v, e)),
            tree: TreeRule::default(),
        })
        .collect();
    let d = Decomposition::from_specs(&g, specs).unwrap();
    // One unit of residue on the single square.
    let f = WrappedField::new(2, 2, vec![0.0, 2.1, -0.5, -2.1]);
    let costs = CostModel::uniform(g.num_edges());
    let config = DecompConfig {
        max_iterations: 200,
        ..DecompConfig::default()
    };
    let out = run_with_costs(&f, &g, &d, &costs, &config).unwrap();
    let opt = oracle_objective(&f, &g, &costs);
    assert!(opt > 0);
    assert!(!out.report.coverage_condition);
    assert!((out.report.best_dual_units as f64) < opt as f64 * 0.999);
}

#[test]
fn report_serializes() {
    let g = build_grid_graph(4, 4, ArcLevel::Diagonal).unwrap();
    let d = build_decomposition(&g, ArcLevel::Diagonal).unwrap();
    let f = noisy_field(4, 4, 9);
    let out = run(&f, &g, &d, &DecompConfig::default()).unwrap();
    let json = serde_json::to_string(&out.report).unwrap();
    let back: RunReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.best_dual_units, out.report.best_dual_units);
    assert_eq!(back.iterations.len(), out.report.iterations.len());
}

#[test]
fn long_runs_keep_multipliers_balanced() {
    let g = build_grid_graph(6, 6, ArcLevel::Distance2).unwrap();
    let d = build_decomposition(&g, ArcLevel::Distance2).unwrap();
    let f = noisy_field(6, 6, 4);
    let config = DecompConfig {
        max_iterations: 1000,
        stop_on_certificate: false,
        stop_on_plateau: false,
        ..DecompConfig::default()
    };
    let out = run(&f, &g, &d, &config).unwrap();
    assert_eq!(out.report.iterations.len(), 1000);
    assert!(out.report.nonconvergence);
    assert!(out.state.projection_residual() < 1e-9);
}

#[test]
fn rejects_bad_parameters() {
    let g = build_grid_graph(3, 3, ArcLevel::Planar).unwrap();
    let d = build_decomposition(&g, ArcLevel::Planar).unwrap();
    let f = noisy_field(3, 3, 0);
    for config in [
        DecompConfig { window: 0, ..DecompConfig::default() },
        DecompConfig { alpha0: 0.0, ..DecompConfig::default() },
        DecompConfig { max_iterations: 0, ..DecompConfig::default() },
    ] {
        assert!(matches!(run(&f, &g, &d, &config), Err(Error::InvalidParameter(_))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multipliers_sum_to_zero(seed in 0u64..1_000_000, alpha in 0.001f64..2.0, steps in 1usize..40) {
        let g = build_grid_graph(4, 4, ArcLevel::Distance2).unwrap();
        let d = build_decomposition(&g, ArcLevel::Distance2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = DualState::new(d.num_subgraphs(), g.num_arcs(), alpha);
        for _ in 0..steps {
            let deltas: Vec<Vec<i64>> = (0..d.num_subgraphs())
                .map(|_| (0..g.num_arcs()).map(|_| rng.random_range(0..=1)).collect())
                .collect();
            update_duals(&mut state, &g, &d, &deltas);
        }
        for a in 0..g.num_arcs() {
            prop_assert_eq!(state.lambda.iter().map(|l| l[a]).sum::<i64>(), 0);
            let e = a / 2;
            for k in 0..d.num_subgraphs() {
                if !d.membership(e).contains(&k) {
                    prop_assert_eq!(state.lambda[k][a], 0);
                }
            }
        }
    }

    #[test]
    fn dual_never_exceeds_primal_optimum(seed in 0u64..1_000_000, alpha in 0.01f64..1.0) {
        let g = build_grid_graph(4, 4, ArcLevel::Diagonal).unwrap();
        let d = build_decomposition(&g, ArcLevel::Diagonal).unwrap();
        let f = noisy_field(4, 4, seed);
        let costs = compute_costs(&f, &g, CostScheme::Variance).unwrap();
        let opt = oracle_objective(&f, &g, &costs);
        let config = DecompConfig { alpha0: alpha, max_iterations: 60, ..DecompConfig::default() };
        let out = run_with_costs(&f, &g, &d, &costs, &config).unwrap();
        for rec in &out.report.iterations {
            prop_assert!(rec.dual <= opt as f64 / COST_UNITS as f64 + 1e-12);
        }
        prop_assert!(out.report.primal_objective_units >= opt);
    }
}

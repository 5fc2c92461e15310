//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unwrap_dd::decomp::{run, run_with_costs, DecompConfig, Termination};
use unwrap_dd::graph::{
    build_constraints, build_cycle_basis, build_decomposition, build_grid_graph,
    check_coverage_condition, check_total_unimodularity, k5_fixture, ArcLevel, Decomposition, Embedding,
    SubgraphSpec, TreeRule, UnwrapGraph,
};
use unwrap_dd::mcf::{build_dual_network, extract_primal_flows, solve_cost_scaling, solve_network_simplex};
use unwrap_dd::oracle::{solve_lp_exact, verify_tight_relaxation, DenseLP};
use unwrap_dd::phase::{compute_costs, synthesize, CostModel, Surface, WrappedField, COST_UNITS};
use unwrap_dd_cli::commands::bench;
use unwrap_dd_cli::solve::solve_field;
use unwrap_dd_cli::{ExperimentConfig, SolverChoice};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn arc_costs(units: &[i64]) -> Vec<i64> {
    units.iter().flat_map(|&c| [c, c]).collect()
}

fn random_costs(rng: &mut ChaCha8Rng, edges: usize) -> Vec<i64> {
    (0..edges).map(|_| rng.random_range(0..=COST_UNITS)).collect()
}

fn lp_for(g: &UnwrapGraph, wrapped: &[i64], arc_costs: &[i64]) -> DenseLP {
    let basis = build_cycle_basis(g, &TreeRule::default()).unwrap();
    let cs = build_constraints(g, &basis, wrapped).unwrap();
    DenseLP::from_constraints(&cs, arc_costs, 1).unwrap()
}

fn oracle(g: &UnwrapGraph, f: &WrappedField, costs: &CostModel) -> i64 {
    solve_lp_exact(&lp_for(g, &f.wrapped_gradients(g), &arc_costs(&costs.units())))
        .unwrap()
        .objective
}

fn tight_relaxation() -> Outcome {
    let (k5, _) = k5_fixture().unwrap();
    let graphs = [
        ("K5", k5),
        ("3x3", build_grid_graph(3, 3, ArcLevel::Diagonal).unwrap()),
        ("4x4", build_grid_graph(4, 4, ArcLevel::Diagonal).unwrap()),
    ];
    let mut parts = Vec::new();
    let mut all = true;
    for (name, g) in &graphs {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tight = 0;
        for _ in 0..100 {
            let wrapped: Vec<i64> = (0..g.num_edges()).map(|_| rng.random_range(-1..=1)).collect();
            let costs = arc_costs(&random_costs(&mut rng, g.num_edges()));
            tight += usize::from(verify_tight_relaxation(&lp_for(g, &wrapped, &costs)).unwrap());
        }
        all &= tight == 100;
        parts.push(format!("{name} {tight}/100"));
    }
    outcome(all, parts.join(", "))
}

fn total_unimodularity() -> Outcome {
    let (k5, _) = k5_fixture().unwrap();
    let grid = build_grid_graph(4, 4, ArcLevel::Diagonal).unwrap();
    let mut parts = Vec::new();
    let mut all = true;
    for (name, g) in [("K5", &k5), ("4x4", &grid)] {
        let basis = build_cycle_basis(g, &TreeRule::default()).unwrap();
        let cs = build_constraints(g, &basis, &vec![0; g.num_edges()]).unwrap();
        let report = check_total_unimodularity(&cs, 4, &[(5, 10_000), (6, 10_000)], 7);
        all &= report.passed();
        let exhaustive: u64 = report.exhaustive.iter().map(|&(_, n)| n).sum();
        let sampled: u64 = report.sampled.iter().map(|&(_, n)| n).sum();
        parts.push(format!("{name} {exhaustive} exhaustive + {sampled} sampled"));
    }
    outcome(all, parts.join(", "))
}

fn mcf_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut matched = 0;
    let mut drawn = 0;
    while drawn < 200 {
        let (rows, cols) = (rng.random_range(3..=7), rng.random_range(3..=7));
        let surface = Surface::defaults()[drawn % 4];
        let f = synthesize(&surface, rows, cols, rng.random_range(0.2..1.2), rng.random()).unwrap();
        let g = build_grid_graph(rows, cols, ArcLevel::Planar).unwrap();
        let d = build_decomposition(&g, ArcLevel::Planar).unwrap();
        let costs = arc_costs(&random_costs(&mut rng, g.num_edges()));
        let wrapped = f.wrapped_gradients(&g);
        let Ok(opt) = solve_lp_exact(&lp_for(&g, &wrapped, &costs)) else {
            continue;
        };
        drawn += 1;
        let net = build_dual_network(&g, d.subgraph(0), &wrapped, &costs, 1).unwrap();
        let cs = solve_cost_scaling(&net.problem, 8).unwrap().objective;
        let ns = solve_network_simplex(&net.problem).unwrap().objective;
        matched += usize::from(cs == opt.objective && ns == opt.objective);
    }

    let mut cross = 0;
    for _ in 0..50 {
        let size = rng.random_range(3..=7);
        let f = synthesize(&Surface::Peaks { amplitude: 0.6 }, size, size, 0.8, rng.random()).unwrap();
        let g = build_grid_graph(size, size, ArcLevel::Planar).unwrap();
        let d = build_decomposition(&g, ArcLevel::Planar).unwrap();
        let costs: Vec<i64> = (0..g.num_arcs()).map(|_| rng.random_range(-COST_UNITS..=COST_UNITS)).collect();
        let net = build_dual_network(&g, d.subgraph(0), &f.wrapped_gradients(&g), &costs, 1).unwrap();
        let cs = solve_cost_scaling(&net.problem, 8).map(|s| s.objective);
        let ns = solve_network_simplex(&net.problem).map(|s| s.objective);
        cross += usize::from(matches!((cs, ns), (Ok(a), Ok(b)) if a == b));
    }
    outcome(
        matched == 200 && cross == 50,
        format!("{matched}/200 match the oracle, {cross}/50 negative-cost pairs agree"),
    )
}

fn decomposition_convergence() -> Outcome {
    let combos = [(ArcLevel::Diagonal, 0.4), (ArcLevel::Diagonal, 1.0), (ArcLevel::Distance2, 0.4), (ArcLevel::Distance2, 1.0)];
    let mut within = 0;
    let mut bounded = 0;
    let mut covered = true;
    let mut worst: f64 = 0.0;
    for (c, &(level, var)) in combos.iter().enumerate() {
        let g = build_grid_graph(12, 12, level).unwrap();
        let d = build_decomposition(&g, level).unwrap();
        for j in 0..25u64 {
            let seed = c as u64 * 25 + j;
            let surface = Surface::defaults()[(seed % 4) as usize];
            let f = synthesize(&surface, 12, 12, var, seed).unwrap();
            let config = DecompConfig::default();
            let costs = compute_costs(&f, &g, config.cost_scheme).unwrap();
            let opt = oracle(&g, &f, &costs);
            let r = run_with_costs(&f, &g, &d, &costs, &config).unwrap().report;
            covered &= r.coverage_condition;
            let below = r
                .iterations
                .iter()
                .all(|it| (it.dual * COST_UNITS as f64).round() as i64 <= opt);
            bounded += usize::from(below && r.best_dual_units <= opt);
            let gap = (opt - r.best_dual_units) as f64 / opt.max(1) as f64;
            worst = worst.max(gap);
            within += usize::from(gap <= 1e-3);
        }
    }
    outcome(
        covered && within >= 95 && bounded == 100,
        format!("{within}/100 within 0.1% (worst gap {:.4}%), lower bound held on {bounded}/100, coverage {covered}", worst * 100.0),
    )
}

fn coverage_necessity() -> Outcome {
    let g = build_grid_graph(2, 2, ArcLevel::Planar).unwrap();
    let angle = |v: usize, e: usize| {
        let (r0, c0) = g.position(v);
        let (r1, c1) = g.position(g.edge(e).other(v));
        (r1 as f64 - r0 as f64).atan2(c1 as f64 - c0 as f64)
    };
    let specs = [[0usize, 1], [2, 3]]
        .iter()
        .map(|edges| SubgraphSpec {
            edges: edges.to_vec(),
            embedding: Embedding::from_angles(4, g.edges(), edges, angle),
            tree: TreeRule::default(),
        })
        .collect();
    let d = Decomposition::from_specs(&g, specs).unwrap();
    let full = build_cycle_basis(&g, &TreeRule::default()).unwrap();
    let spanned: usize = d.subgraphs().iter().map(|s| s.basis().cycles().len()).sum();
    let deficit = full.cycles().len().saturating_sub(spanned);
    let coverage = check_coverage_condition(&d, &full);

    let f = WrappedField::new(2, 2, vec![0.0, 2.1, -0.5, -2.1]);
    let costs = CostModel::uniform(g.num_edges());
    let config = DecompConfig { max_iterations: 200, ..DecompConfig::default() };
    let r = run_with_costs(&f, &g, &d, &costs, &config).unwrap().report;
    let opt = oracle(&g, &f, &costs);
    let gap = (opt - r.best_dual_units) as f64 / opt.max(1) as f64;
    outcome(
        !coverage && deficit >= 1 && gap > 1e-3,
        format!("coverage {coverage}, rank deficit {deficit}, best dual {} vs optimum {opt} (gap {:.1}%)", r.best_dual_units, gap * 100.0),
    )
}

fn degeneracy() -> Outcome {
    let mut identical = 0;
    for seed in 0..50u64 {
        let size = 6 + (seed as usize % 5) * 2;
        let g = build_grid_graph(size, size, ArcLevel::Planar).unwrap();
        let d = build_decomposition(&g, ArcLevel::Planar).unwrap();
        let surface = Surface::defaults()[(seed % 4) as usize];
        let f = synthesize(&surface, size, size, 0.3 + 0.7 * (seed % 3) as f64 / 2.0, seed).unwrap();
        let config = DecompConfig::default();
        let out = run(&f, &g, &d, &config).unwrap();
        let costs = compute_costs(&f, &g, config.cost_scheme).unwrap();
        let net = build_dual_network(&g, d.subgraph(0), &f.wrapped_gradients(&g), &arc_costs(&costs.units()), 1).unwrap();
        let direct = config.solver.solve(&net.problem).unwrap();
        identical += usize::from(
            d.num_subgraphs() == 1
                && out.flows == extract_primal_flows(&net, &direct)
                && out.report.primal_objective_units == direct.objective
                && out.report.termination == Termination::Certified,
        );
    }
    outcome(identical == 50, format!("{identical}/50 runs bit-identical to the direct solve"))
}

fn projection() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (level, seed) in [(ArcLevel::Diagonal, 1), (ArcLevel::Distance2, 2)] {
        let g = build_grid_graph(8, 8, level).unwrap();
        let d = build_decomposition(&g, level).unwrap();
        let f = synthesize(&Surface::Peaks { amplitude: 0.6 }, 8, 8, 1.0, seed).unwrap();
        let config = DecompConfig {
            max_iterations: 1000,
            stop_on_certificate: false,
            stop_on_plateau: false,
            ..DecompConfig::default()
        };
        let out = run(&f, &g, &d, &config).unwrap();
        runs += usize::from(out.report.iterations.len() == 1000);
        worst = worst.max(out.state.projection_residual());
    }
    outcome(runs == 2 && worst < 1e-9, format!("max |sum of multipliers| {worst:e} after 1000 iterations ({runs}/2 runs)"))
}

fn round_trip() -> Outcome {
    let config = ExperimentConfig::default();
    let mut exact = 0;
    let mut total = 0;
    for surface in Surface::defaults().into_iter().take(2) {
        for size in [32, 64] {
            let f = synthesize(&surface, size, size, 0.0, 0).unwrap();
            let truth = f.truth_n.clone().unwrap();
            for level in [ArcLevel::Diagonal, ArcLevel::Distance2] {
                for solver in [SolverChoice::CostScaling, SolverChoice::Simplex, SolverChoice::McfOnly] {
                    if solver == SolverChoice::McfOnly && level == ArcLevel::Distance2 {
                        continue;
                    }
                    let s = solve_field(&f, level, solver, &config).unwrap();
                    total += 1;
                    exact += usize::from(unwrap_dd::phase::inconsistency(&s.result.n, &truth) == 0.0);
                }
            }
        }
    }
    outcome(exact == total, format!("{exact}/{total} ramp and bump runs at 0% inconsistency"))
}

fn quality_ordering() -> Outcome {
    let config = ExperimentConfig::default();
    let runs = [
        (ArcLevel::Planar, SolverChoice::McfOnly),
        (ArcLevel::Diagonal, SolverChoice::CostScaling),
        (ArcLevel::Distance2, SolverChoice::CostScaling),
    ];
    let mut mean = [0.0; 3];
    for seed in 0..10 {
        let f = synthesize(&Surface::defaults()[1], 64, 64, 1.0, seed).unwrap();
        for (i, &(level, solver)) in runs.iter().enumerate() {
            mean[i] += solve_field(&f, level, solver, &config).unwrap().inconsistency.unwrap() / 10.0;
        }
    }
    let [r0, r1, r2] = mean;
    outcome(
        r2 <= r1 + 1.0 && r1 <= r0 + 1.0,
        format!("mean inconsistency r=2 {r2:.3}%, r=1 {r1:.3}%, r=0 {r0:.3}%"),
    )
}

fn bench_table() -> Outcome {
    let config = ExperimentConfig {
        sizes: vec![10],
        noise_levels: vec![1.0],
        instances: 1,
        solvers: vec![SolverChoice::CostScaling, SolverChoice::Simplex, SolverChoice::McfOnly],
        ..ExperimentConfig::default()
    };
    let rows = bench(&config).unwrap();
    let instances = config.shapes.len();
    let expected = instances * (1 + 2 * config.arc_levels.len());
    let complete = rows.len() == expected
        && rows.iter().all(|r| r.objective.is_finite() && r.total_seconds >= r.solver_seconds && r.inconsistency.is_some());
    let mut pairs = 0;
    let mut equal = 0;
    for a in rows.iter().filter(|r| r.solver == "cost-scaling") {
        for b in rows.iter().filter(|b| b.solver == "simplex" && b.image == a.image && b.r == a.r) {
            pairs += 1;
            equal += usize::from(a.objective == b.objective);
        }
    }
    outcome(
        complete && pairs > 0 && equal == pairs,
        format!("{}/{expected} rows, {equal}/{pairs} backend objective pairs identical", rows.len()),
    )
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("tight relaxation", Some(Duration::from_secs(120)), tight_relaxation),
        ("total unimodularity", Some(Duration::from_secs(60)), total_unimodularity),
        ("min-cost flow correctness", Some(Duration::from_secs(60)), mcf_correctness),
        ("decomposition convergence", Some(Duration::from_secs(600)), decomposition_convergence),
        ("coverage necessity", None, coverage_necessity),
        ("single-subgraph degeneracy", None, degeneracy),
        ("multiplier projection", None, projection),
        ("noiseless round trip", None, round_trip),
        ("quality ordering", None, quality_ordering),
        ("bench table", None, bench_table),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let passed = o.passed && in_time;
        failed += usize::from(!passed);
        let budget = limit.map_or(String::new(), |l| format!(" of {}s", l.as_secs()));
        println!(
            "{} {:>2} {name}: {} [{:.1}s{budget}]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

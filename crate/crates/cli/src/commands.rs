use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use unwrap_dd::decomp::{run_with_costs, IterationRecord, RunReport};
use unwrap_dd::graph::{
    build_constraints, build_cycle_basis, build_decomposition, build_grid_graph,
    check_total_unimodularity, k5_fixture, ArcLevel, TreeRule, UnwrapGraph,
};
use unwrap_dd::mcf::{build_dual_network, solve_cost_scaling, solve_network_simplex};
use unwrap_dd::oracle::{solve_lp_exact, verify_tight_relaxation, DenseLP};
use unwrap_dd::phase::{compute_costs, inconsistency, synthesize, Surface, WrappedField};

use crate::config::{ExperimentConfig, SolverChoice};
use crate::field_file::{io_error, read_field, write_atomic, write_field};
use crate::solve::{solve_field, Solved};
use crate::CliError;

/// One synthetic field of a sweep.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub surface: Surface,
    pub size: usize,
    pub noise_variance: f64,
    pub seed: u64,
}

impl Instance {
    pub fn synthesize(&self) -> Result<WrappedField, CliError> {
        Ok(synthesize(&self.surface, self.size, self.size, self.noise_variance, self.seed)?)
    }
}

/// The sweep in file order: shapes, then sizes, then noise levels, then
/// instances. Instance `k` of the sweep uses seed `config.seed + k`.
pub fn instances(config: &ExperimentConfig) -> Result<Vec<Instance>, CliError> {
    config.validate()?;
    let surfaces = config.surfaces()?;
    let mut names = HashSet::new();
    if let Some(s) = surfaces.iter().find(|s| !names.insert(s.name())) {
        return Err(CliError::Usage(format!("shape {} listed twice", s.name())));
    }
    let mut out = Vec::new();
    for surface in &surfaces {
        for &size in &config.sizes {
            for &var in &config.noise_levels {
                for i in 0..config.instances {
                    out.push(Instance {
                        id: format!("{}_{size}_v{var:.2}_{i:03}", surface.name()),
                        surface: *surface,
                        size,
                        noise_variance: var,
                        seed: config.seed.wrapping_add(out.len() as u64),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Writes one field file per instance into `config.output_dir`.
pub fn generate(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let list = instances(config)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| io_error(&config.output_dir, e))?;
    let mut paths = Vec::with_capacity(list.len());
    for inst in &list {
        let path = config.output_dir.join(format!("{}.phwr", inst.id));
        write_field(&path, &inst.synthesize()?)?;
        paths.push(path);
    }
    Ok(paths)
}

fn level(r: u8) -> Result<ArcLevel, CliError> {
    ArcLevel::from_index(r).map_err(|e| CliError::Usage(e.to_string()))
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

/// Unwraps one field file and writes `<prefix>.result.json` and, for the
/// decomposition solvers, `<prefix>.report.json`.
pub fn unwrap(
    field: &Path,
    r: u8,
    solver: SolverChoice,
    config: &ExperimentConfig,
    prefix: &Path,
) -> Result<Solved, CliError> {
    config.validate()?;
    let f = read_field(field)?;
    let mut solved = solve_field(&f, level(r)?, solver, config)?;
    let report = solved.report.take();
    write_atomic(&with_suffix(prefix, ".result.json"), &json(&solved))?;
    if let Some(report) = &report {
        write_atomic(&with_suffix(prefix, ".report.json"), &json(report))?;
    }
    solved.report = report;
    Ok(solved)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub image: String,
    pub size: usize,
    pub r: u8,
    pub noise_variance: f64,
    pub solver: &'static str,
    pub iterations: usize,
    pub solver_seconds: f64,
    pub total_seconds: f64,
    pub objective: f64,
    pub inconsistency: Option<f64>,
}

/// Every instance of the sweep under every arc level and solver. The
/// planar-only solver ignores the arc level and runs once per instance.
pub fn bench(config: &ExperimentConfig) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = Vec::new();
    for inst in instances(config)? {
        let f = inst.synthesize()?;
        let mut planar_done = false;
        for &r in &config.arc_levels {
            for &solver in &config.solvers {
                if solver == SolverChoice::McfOnly {
                    if planar_done {
                        continue;
                    }
                    planar_done = true;
                }
                let s = solve_field(&f, level(r)?, solver, config)?;
                rows.push(BenchRow {
                    image: inst.id.clone(),
                    size: inst.size,
                    r: s.arc_level,
                    noise_variance: inst.noise_variance,
                    solver: solver.name(),
                    iterations: s.iterations,
                    solver_seconds: s.solver_seconds,
                    total_seconds: s.total_seconds,
                    objective: s.objective,
                    inconsistency: s.inconsistency,
                });
            }
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "image", "size", "r", "noise_variance", "solver", "iterations", "solver_seconds",
            "total_seconds", "objective", "inconsistency",
        ])
        .expect("in-memory write");
    }
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Dual-evolution trace of one decomposition run.
pub fn trace(
    field: &Path,
    r: u8,
    solver: SolverChoice,
    config: &ExperimentConfig,
) -> Result<RunReport, CliError> {
    config.validate()?;
    if matches!(solver, SolverChoice::Oracle) {
        return Err(CliError::Usage("the oracle has no dual trace".into()));
    }
    let f = read_field(field)?;
    let s = solve_field(&f, level(r)?, solver, config)?;
    Ok(s.report.expect("decomposition solvers report"))
}

#[derive(Serialize)]
struct TraceRow {
    iter: usize,
    dual: f64,
    best_dual: f64,
    alpha: f64,
    agreement_fraction: f64,
}

pub fn trace_csv(records: &[IterationRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(TraceRow {
            iter: r.iter,
            dual: r.dual,
            best_dual: r.best_dual,
            alpha: r.alpha,
            agreement_fraction: r.agreement,
        })
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_lp(g: &UnwrapGraph, seed: u64) -> Result<DenseLP, CliError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let basis = build_cycle_basis(g, &TreeRule::default())?;
    let wrapped: Vec<i64> = (0..g.num_edges()).map(|_| rng.random_range(-1..=1)).collect();
    let cs = build_constraints(g, &basis, &wrapped)?;
    let costs: Vec<i64> = (0..g.num_edges())
        .flat_map(|_| {
            let c = rng.random_range(0..=1_000_000);
            [c, c]
        })
        .collect();
    Ok(DenseLP::from_constraints(&cs, &costs, 1)?)
}

/// A quick pass over the oracle and invariant checks.
pub fn verify(instances: usize) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let (k5, _) = k5_fixture()?;
    let grid = build_grid_graph(3, 3, ArcLevel::Diagonal)?;

    let mut tight = 0;
    for seed in 0..instances as u64 {
        for g in [&k5, &grid] {
            tight += usize::from(verify_tight_relaxation(&random_lp(g, seed)?)?);
        }
    }
    checks.push(Check {
        name: "tight-relaxation",
        passed: tight == 2 * instances,
        detail: format!("{tight}/{} instances", 2 * instances),
    });

    let basis = build_cycle_basis(&k5, &TreeRule::default())?;
    let cs = build_constraints(&k5, &basis, &vec![0; k5.num_edges()])?;
    let tu = check_total_unimodularity(&cs, 3, &[(4, 500), (5, 500)], 1);
    checks.push(Check {
        name: "total-unimodularity",
        passed: tu.passed(),
        detail: format!("exhaustive {:?}, sampled {:?}", tu.exhaustive, tu.sampled),
    });

    let mut mcf_ok = 0;
    let mut dd_ok = 0;
    let mut balanced = true;
    let config = ExperimentConfig::default();
    for seed in 0..instances as u64 {
        let size = 4 + (seed as usize % 3);
        let f = synthesize(&Surface::Peaks { amplitude: 0.6 }, size, size, 0.8, seed)?;
        let planar = build_grid_graph(size, size, ArcLevel::Planar)?;
        let costs = compute_costs(&f, &planar, config.cost_scheme)?;
        let arc_costs: Vec<i64> = costs.units().iter().flat_map(|&c| [c, c]).collect();
        let d = build_decomposition(&planar, ArcLevel::Planar)?;
        let net = build_dual_network(&planar, d.subgraph(0), &f.wrapped_gradients(&planar), &arc_costs, 1)?;
        let basis = build_cycle_basis(&planar, &TreeRule::default())?;
        let lp = DenseLP::from_constraints(
            &build_constraints(&planar, &basis, &f.wrapped_gradients(&planar))?,
            &arc_costs,
            1,
        )?;
        let opt = solve_lp_exact(&lp)?.objective;
        let cs_obj = solve_cost_scaling(&net.problem, 8)?.objective;
        let ns_obj = solve_network_simplex(&net.problem)?.objective;
        mcf_ok += usize::from(cs_obj == opt && ns_obj == opt);

        let level = if seed % 2 == 0 { ArcLevel::Diagonal } else { ArcLevel::Distance2 };
        let g = build_grid_graph(size, size, level)?;
        let d = build_decomposition(&g, level)?;
        let costs = compute_costs(&f, &g, config.cost_scheme)?;
        let basis = build_cycle_basis(&g, &TreeRule::default())?;
        let arc_costs: Vec<i64> = costs.units().iter().flat_map(|&c| [c, c]).collect();
        let lp = DenseLP::from_constraints(
            &build_constraints(&g, &basis, &f.wrapped_gradients(&g))?,
            &arc_costs,
            1,
        )?;
        let opt = solve_lp_exact(&lp)?.objective;
        let out = run_with_costs(&f, &g, &d, &costs, &config.decomp_config(Default::default()))?;
        let r = &out.report;
        let below = r.iterations.iter().all(|it| it.dual * 1e6 <= opt as f64 + 0.5);
        let gap = (opt - r.best_dual_units) as f64 / opt.max(1) as f64;
        dd_ok += usize::from(below && gap <= 1e-3);
        balanced &= out.state.projection_residual() < 1e-9;
    }
    checks.push(Check {
        name: "mcf-vs-oracle",
        passed: mcf_ok == instances,
        detail: format!("{mcf_ok}/{instances} planar instances"),
    });
    checks.push(Check {
        name: "decomposition-vs-oracle",
        passed: dd_ok == instances,
        detail: format!("{dd_ok}/{instances} instances within 0.1% and below the optimum"),
    });
    checks.push(Check {
        name: "multiplier-projection",
        passed: balanced,
        detail: "per-arc multiplier sums".into(),
    });

    let mut exact = true;
    for surface in [Surface::Ramp { slope_row: 0.3, slope_col: 0.5 }, Surface::Bump { amplitude: 12.0, width: 0.2 }] {
        let f = synthesize(&surface, 16, 16, 0.0, 0)?;
        for solver in [SolverChoice::CostScaling, SolverChoice::Simplex, SolverChoice::McfOnly] {
            let s = solve_field(&f, ArcLevel::Diagonal, solver, &config)?;
            exact &= inconsistency(&s.result.n, f.truth_n.as_deref().unwrap_or(&[])) == 0.0;
        }
    }
    checks.push(Check {
        name: "noiseless-round-trip",
        passed: exact,
        detail: "ramp and bump, 16x16".into(),
    });
    Ok(checks)
}

use super::{FlowSolution, McfProblem};
use crate::error::{Error, Result};
use crate::graph::{arc_index, Subgraph, UnwrapGraph};

/// Face-dual network of a planar subgraph. Node `f` is the `f`-th traced
/// face (the outer face included); dual arc `a` carries the primal arc
/// variable `primal_arcs[a]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualNetwork {
    pub problem: McfProblem,
    pub primal_arcs: Vec<usize>,
    pub num_primal_arcs: usize,
}

impl DualNetwork {
    pub fn num_nodes(&self) -> usize {
        self.problem.num_nodes()
    }

    pub fn residues(&self) -> &[i64] {
        &self.problem.residues
    }
}

/// Builds the dual network of subgraph `sub` of `g`.
///
/// `wrapped` holds `δ'` per global edge; `arc_costs` the integer cost of
/// every global arc. Each face's residue is the signed sum of `δ'` along its
/// boundary. If a face walks edge `i → j`, the variable `δ_ij` enters that
/// face's equation positively and the opposite face's negatively, so it
/// becomes a dual arc from the opposite face into this one; `δ_ji` runs the
/// other way. Bridges become self-loops.
pub fn build_dual_network(
    g: &UnwrapGraph,
    sub: &Subgraph,
    wrapped: &[i64],
    arc_costs: &[i64],
    capacity: i64,
) -> Result<DualNetwork> {
    if wrapped.len() != g.num_edges() || arc_costs.len() != g.num_arcs() {
        return Err(Error::InvalidParameter(format!(
            "expected {} gradients and {} arc costs, got {} and {}",
            g.num_edges(),
            g.num_arcs(),
            wrapped.len(),
            arc_costs.len()
        )));
    }
    let faces = sub.faces();
    let mut face_of = vec![usize::MAX; g.num_arcs()];
    let mut problem = McfProblem::new(faces.len());
    for (f, face) in faces.iter().enumerate() {
        for s in &face.steps {
            face_of[arc_index(s.edge, s.forward)] = f;
            problem.residues[f] += if s.forward {
                wrapped[s.edge]
            } else {
                -wrapped[s.edge]
            };
        }
    }
    let total: i64 = problem.residues.iter().sum();
    if total != 0 {
        return Err(Error::ResidueImbalance(total));
    }
    let mut primal_arcs = Vec::with_capacity(2 * sub.edges().len());
    for &e in sub.edges() {
        let left = face_of[arc_index(e, true)];
        let right = face_of[arc_index(e, false)];
        if left == usize::MAX || right == usize::MAX {
            return Err(Error::InvalidGraph(format!("edge {e} lies on no traced face")));
        }
        let fwd = arc_index(e, true);
        let bwd = arc_index(e, false);
        problem.add_arc(right, left, capacity, arc_costs[fwd]);
        primal_arcs.push(fwd);
        problem.add_arc(left, right, capacity, arc_costs[bwd]);
        primal_arcs.push(bwd);
    }
    Ok(DualNetwork {
        problem,
        primal_arcs,
        num_primal_arcs: g.num_arcs(),
    })
}

/// Per global arc flows; arcs outside the subgraph are zero.
pub fn extract_primal_flows(net: &DualNetwork, sol: &FlowSolution) -> Vec<i64> {
    let mut delta = vec![0; net.num_primal_arcs];
    for (&a, &f) in net.primal_arcs.iter().zip(&sol.flows) {
        delta[a] = f;
    }
    delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_constraints, build_decomposition, build_grid_graph, k5_fixture, ArcLevel};
    use crate::mcf::McfSolver;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gradients_give_zero_residues() {
        let g = build_grid_graph(3, 3, ArcLevel::Diagonal).unwrap();
        let d = build_decomposition(&g, ArcLevel::Diagonal).unwrap();
        for sub in d.subgraphs() {
            let net = build_dual_network(&g, sub, &vec![0; g.num_edges()], &vec![1; g.num_arcs()], 1)
                .unwrap();
            assert!(net.residues().iter().all(|&r| r == 0));
            assert_eq!(net.problem.arcs.len(), 2 * sub.edges().len());
            let sol = McfSolver::default().solve(&net.problem).unwrap();
            assert_eq!(extract_primal_flows(&net, &sol), vec![0; g.num_arcs()]);
        }
    }

    #[test]
    fn triangle_face_residue() {
        let g = UnwrapGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let sub = crate::graph::Decomposition::from_specs(
            &g,
            vec![crate::graph::SubgraphSpec {
                edges: vec![0, 1, 2],
                embedding: crate::graph::Embedding::from_angles(3, g.edges(), &[0, 1, 2], |v, e| {
                    let pos = [(0.0f64, 0.0f64), (1.0, 0.0), (0.0, 1.0)];
                    let w = g.edge(e).other(v);
                    (pos[w].1 - pos[v].1).atan2(pos[w].0 - pos[v].0)
                }),
                tree: Default::default(),
            }],
        )
        .unwrap();
        let sub = sub.subgraph(0);
        // δ'_01 = 1; the other two edges zero.
        let wrapped = vec![1, 0, 0];
        let net = build_dual_network(&g, sub, &wrapped, &[1, 1, 1, 1, 1, 1], 1).unwrap();
        let mut res = net.residues().to_vec();
        res.sort_unstable();
        assert_eq!(res, vec![-1, 1]);
        let sol = McfSolver::NetworkSimplex.solve(&net.problem).unwrap();
        let delta = extract_primal_flows(&net, &sol);
        assert_eq!(delta.iter().sum::<i64>(), 1);
        let cs = build_constraints(&g, sub.basis(), &wrapped).unwrap();
        assert!(cs.check(&delta).is_ok());
    }

    fn random_wrapped(rng: &mut ChaCha8Rng, m: usize) -> Vec<i64> {
        (0..m).map(|_| rng.random_range(-1..=1)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn residues_balance_and_flows_satisfy_cycles(seed in 0u64..1_000_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let level = ArcLevel::from_index(rng.random_range(0..3)).unwrap();
            let (rows, cols) = (rng.random_range(2..6), rng.random_range(2..6));
            let g = build_grid_graph(rows, cols, level).unwrap();
            let d = build_decomposition(&g, level).unwrap();
            let wrapped = random_wrapped(&mut rng, g.num_edges());
            let costs: Vec<i64> = (0..g.num_arcs()).map(|_| rng.random_range(-3..10)).collect();
            for sub in d.subgraphs() {
                let net = build_dual_network(&g, sub, &wrapped, &costs, 4).unwrap();
                // Double-entry audit: each δ' enters two faces with opposite signs.
                let mut audit = 0;
                for face in sub.faces() {
                    for s in &face.steps {
                        audit += if s.forward { wrapped[s.edge] } else { -wrapped[s.edge] };
                    }
                }
                prop_assert_eq!(audit, 0);
                prop_assert_eq!(net.residues().iter().sum::<i64>(), 0);
                let a = McfSolver::default().solve(&net.problem).unwrap();
                let b = McfSolver::NetworkSimplex.solve(&net.problem).unwrap();
                prop_assert_eq!(a.objective, b.objective);
                let cs = build_constraints(&g, sub.basis(), &wrapped).unwrap();
                prop_assert!(cs.check(&extract_primal_flows(&net, &a)).is_ok());
                prop_assert!(cs.check(&extract_primal_flows(&net, &b)).is_ok());
            }
        }

        #[test]
        fn k5_subgraphs_are_solvable(seed in 0u64..1_000_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (g, d) = k5_fixture().unwrap();
            let wrapped = random_wrapped(&mut rng, g.num_edges());
            for sub in d.subgraphs() {
                let net = build_dual_network(&g, sub, &wrapped, &vec![1; g.num_arcs()], 1)
                    .unwrap();
                match McfSolver::default().solve(&net.problem) {
                    Ok(sol) => {
                        let cs = build_constraints(&g, sub.basis(), &wrapped).unwrap();
                        prop_assert!(cs.check(&extract_primal_flows(&net, &sol)).is_ok());
                    }
                    Err(Error::Infeasible { required, capacity, .. }) => {
                        prop_assert!(required > capacity);
                    }
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }
    }
}

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;

use super::{
    build_forest_basis, ArcLevel, CycleBasis, Edge, EdgeKind, Embedding, Face, TreeRule,
    UnwrapGraph,
};
use crate::error::{Error, Result};

/// A subgraph as supplied to [`Decomposition::from_specs`].
#[derive(Debug, Clone)]
pub struct SubgraphSpec {
    pub edges: Vec<usize>,
    pub embedding: Embedding,
    pub tree: TreeRule,
}

/// Planar subgraph on the full vertex set with its faces and cycle basis.
#[derive(Debug, Clone)]
pub struct Subgraph {
    edges: Vec<usize>,
    embedding: Embedding,
    faces: Vec<Face>,
    basis: CycleBasis,
}

impl Subgraph {
    /// Global edge ids, ascending.
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn basis(&self) -> &CycleBasis {
        &self.basis
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    subgraphs: Vec<Subgraph>,
    membership: Vec<Vec<usize>>,
}

impl Decomposition {
    /// Validates covering and planarity, then traces faces and builds each
    /// subgraph's cycle basis.
    pub fn from_specs(g: &UnwrapGraph, specs: Vec<SubgraphSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::UnsupportedDecomposition("no subgraphs".into()));
        }
        let mut membership = vec![Vec::new(); g.num_edges()];
        let mut subgraphs = Vec::with_capacity(specs.len());
        for (k, spec) in specs.into_iter().enumerate() {
            let mut edges = spec.edges;
            edges.sort_unstable();
            edges.dedup();
            if let Some(&bad) = edges.iter().find(|&&e| e >= g.num_edges()) {
                return Err(Error::InvalidGraph(format!("subgraph {k} uses unknown edge {bad}")));
            }
            if spec.embedding.num_edges() != edges.len() {
                return Err(Error::InvalidGraph(format!(
                    "subgraph {k}: embedding covers {} edges, subgraph has {}",
                    spec.embedding.num_edges(),
                    edges.len()
                )));
            }
            spec.embedding.check_planar(g.edges())?;
            let faces = spec.embedding.faces(g.edges());
            let basis = build_forest_basis(g.num_vertices(), g.edges(), &edges, &spec.tree)?;
            for &e in &edges {
                membership[e].push(k);
            }
            subgraphs.push(Subgraph {
                edges,
                embedding: spec.embedding,
                faces,
                basis,
            });
        }
        if let Some(e) = membership.iter().position(Vec::is_empty) {
            let Edge { tail, head } = g.edge(e);
            return Err(Error::UnsupportedDecomposition(format!(
                "edge ({tail}, {head}) is not covered by any subgraph"
            )));
        }
        Ok(Decomposition {
            subgraphs,
            membership,
        })
    }

    pub fn num_subgraphs(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn subgraphs(&self) -> &[Subgraph] {
        &self.subgraphs
    }

    pub fn subgraph(&self, k: usize) -> &Subgraph {
        &self.subgraphs[k]
    }

    /// Subgraph indices containing edge `e`, ascending.
    pub fn membership(&self, e: usize) -> &[usize] {
        &self.membership[e]
    }

    /// Line-oriented dump: header `rows cols r`, then `i j k...` per edge
    /// with 0-based subgraph indices. `r` is `-` for non-grid graphs.
    pub fn dump(&self, g: &UnwrapGraph) -> String {
        let mut out = String::new();
        let level = g
            .arc_level()
            .map_or_else(|| "-".to_string(), |l| l.index().to_string());
        let _ = writeln!(out, "{} {} {}", g.rows(), g.cols(), level);
        for (e, Edge { tail, head }) in g.edges().iter().enumerate() {
            let _ = write!(out, "{tail} {head}");
            for k in &self.membership[e] {
                let _ = write!(out, " {k}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parsed form of [`Decomposition::dump`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpRecord {
    pub rows: usize,
    pub cols: usize,
    pub arc_level: Option<u8>,
    pub edges: Vec<(usize, usize, Vec<usize>)>,
}

pub fn parse_dump(text: &str) -> Result<DumpRecord> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse("line 1", "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::parse("line 1", "header must be `rows cols r`"));
    }
    let num = |s: &str, line: usize| {
        s.parse::<usize>()
            .map_err(|_| Error::parse(format!("line {line}"), format!("not an integer: {s}")))
    };
    let rows = num(fields[0], 1)?;
    let cols = num(fields[1], 1)?;
    let arc_level = match fields[2] {
        "-" => None,
        s => Some(num(s, 1)? as u8),
    };
    let mut edges = Vec::new();
    for (i, line) in lines {
        let vals = line
            .split_whitespace()
            .map(|s| num(s, i + 1))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() < 3 {
            return Err(Error::parse(
                format!("line {}", i + 1),
                "edge line needs `i j` and at least one subgraph id",
            ));
        }
        edges.push((vals[0], vals[1], vals[2..].to_vec()));
    }
    Ok(DumpRecord {
        rows,
        cols,
        arc_level,
        edges,
    })
}

/// Grid drawing: x = column, y = −row. Length-2 arcs are bent so that
/// consecutive arcs of a row (column) alternate sides.
fn grid_angle(g: &UnwrapGraph, v: usize, e: usize) -> f64 {
    let w = g.edge(e).other(v);
    let (rv, cv) = g.position(v);
    let (rw, cw) = g.position(w);
    let base = (rv as f64 - rw as f64).atan2(cw as f64 - cv as f64);
    match g.kind(e) {
        EdgeKind::Horizontal2 => {
            let left_col = cv.min(cw);
            let up = left_col % 2 == 0;
            let bend = if up { FRAC_PI_4 } else { -FRAC_PI_4 };
            if cv < cw {
                base + bend
            } else {
                // base is π here; keep the result inside (−π, π].
                if up {
                    PI - FRAC_PI_4
                } else {
                    -PI + FRAC_PI_4
                }
            }
        }
        EdgeKind::Vertical2 => {
            let top_row = rv.min(rw);
            let right = top_row % 2 == 0;
            if rv < rw {
                // Heading down (−π/2).
                if right {
                    -FRAC_PI_2 + FRAC_PI_4
                } else {
                    -FRAC_PI_2 - FRAC_PI_4
                }
            } else if right {
                FRAC_PI_2 - FRAC_PI_4
            } else {
                FRAC_PI_2 + FRAC_PI_4
            }
        }
        _ => base,
    }
}

fn grid_spec(g: &UnwrapGraph, edges: Vec<usize>, tree: TreeRule) -> SubgraphSpec {
    let embedding = Embedding::from_angles(g.num_vertices(), g.edges(), &edges, |v, e| {
        grid_angle(g, v, e)
    });
    SubgraphSpec {
        edges,
        embedding,
        tree,
    }
}

/// Predefined planar decomposition of a grid graph.
///
/// * subgraph 0: the 4-neighbour grid;
/// * 1 and 2: the breadth-first grid tree plus all `/` resp. `\` diagonals;
/// * 3 and 4 (distance-2 level): a comb tree plus the horizontal resp.
///   vertical length-2 arcs, bent to alternate sides.
///
/// The planar level yields the single grid subgraph. Arc families that are
/// empty for the grid size are skipped.
pub fn build_decomposition(g: &UnwrapGraph, level: ArcLevel) -> Result<Decomposition> {
    let graph_level = g.arc_level().ok_or_else(|| {
        Error::UnsupportedDecomposition("templates only apply to grid graphs".into())
    })?;
    if graph_level != level {
        return Err(Error::UnsupportedDecomposition(format!(
            "graph has arc level {} but decomposition requested for level {}",
            graph_level.index(),
            level.index()
        )));
    }
    let family = |kinds: &[EdgeKind]| -> Vec<usize> {
        (0..g.num_edges()).filter(|&e| kinds.contains(&g.kind(e))).collect()
    };
    let grid = family(&[EdgeKind::Horizontal, EdgeKind::Vertical]);
    let mut specs = vec![grid_spec(g, grid.clone(), TreeRule::Bfs { root: 0 })];
    if level >= ArcLevel::Diagonal {
        let grid_tree = build_forest_basis(g.num_vertices(), g.edges(), &grid, &TreeRule::Bfs { root: 0 })?
            .tree_edges()
            .to_vec();
        for kind in [EdgeKind::Slash, EdgeKind::Backslash] {
            let mut edges = grid_tree.clone();
            edges.extend(family(&[kind]));
            specs.push(grid_spec(g, edges, TreeRule::Given(grid_tree.clone())));
        }
    }
    if level >= ArcLevel::Distance2 {
        let (rows, cols) = (g.rows(), g.cols());
        // Horizontal comb: every row path joined through column 0.
        let comb_h: Vec<usize> = (0..g.num_edges())
            .filter(|&e| match g.kind(e) {
                EdgeKind::Horizontal => true,
                EdgeKind::Vertical => g.position(g.edge(e).tail).1 == 0,
                _ => false,
            })
            .collect();
        let comb_v: Vec<usize> = (0..g.num_edges())
            .filter(|&e| match g.kind(e) {
                EdgeKind::Vertical => true,
                EdgeKind::Horizontal => g.position(g.edge(e).tail).0 == 0,
                _ => false,
            })
            .collect();
        for (tree, kind, present) in [
            (comb_h, EdgeKind::Horizontal2, cols > 2),
            (comb_v, EdgeKind::Vertical2, rows > 2),
        ] {
            if !present {
                continue;
            }
            let mut edges = tree.clone();
            edges.extend(family(&[kind]));
            specs.push(grid_spec(g, edges, TreeRule::Given(tree)));
        }
    }
    Decomposition::from_specs(g, specs)
}

/// The complete graph on five vertices with a star spanning tree at vertex 0,
/// decomposed into three planar subgraphs that all contain the star: a wheel
/// (star plus the rim 1-2-3-4) and the star plus each rim diagonal.
pub fn k5_fixture() -> Result<(UnwrapGraph, Decomposition)> {
    let pairs: Vec<(usize, usize)> = (0..5)
        .flat_map(|a| (a + 1..5).map(move |b| (a, b)))
        .collect();
    let g = UnwrapGraph::from_edges(5, &pairs)?;
    let id = |a: usize, b: usize| g.find_edge(a, b).expect("complete graph").0;
    let star: Vec<usize> = (1..5).map(|v| id(0, v)).collect();

    let wheel_pos = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
    let chord_pos = [(0.0, 1.0), (1.0, 0.0), (1.0, 2.0), (-1.0, 0.0), (-1.0, 2.0)];
    let spec = |extra: &[(usize, usize)], pos: &[(f64, f64); 5]| {
        let mut edges = star.clone();
        edges.extend(extra.iter().map(|&(a, b)| id(a, b)));
        let embedding = Embedding::from_angles(5, g.edges(), &edges, |v, e| {
            let w = g.edge(e).other(v);
            (pos[w].1 - pos[v].1).atan2(pos[w].0 - pos[v].0)
        });
        SubgraphSpec {
            edges,
            embedding,
            tree: TreeRule::Given(star.clone()),
        }
    };
    let specs = vec![
        spec(&[(1, 2), (2, 3), (3, 4), (1, 4)], &wheel_pos),
        spec(&[(1, 3)], &chord_pos),
        spec(&[(2, 4)], &chord_pos),
    ];
    let d = Decomposition::from_specs(&g, specs)?;
    Ok((g, d))
}

/// Whether the subgraph cycle bases jointly span the cycle space of the full
/// graph: GF(2) rank of all subgraph cycles (as edge-incidence vectors)
/// against the size of `full_basis`.
pub fn check_coverage_condition(d: &Decomposition, full_basis: &CycleBasis) -> bool {
    let num_edges = d.membership.len();
    let words = num_edges.div_ceil(64);
    let mut pivots: Vec<Vec<u64>> = Vec::new();
    let mut pivot_bits: Vec<usize> = Vec::new();
    for sub in &d.subgraphs {
        for cycle in sub.basis.cycles() {
            let mut v = vec![0u64; words];
            for s in &cycle.steps {
                v[s.edge / 64] ^= 1 << (s.edge % 64);
            }
            for (p, &bit) in pivots.iter().zip(&pivot_bits) {
                if v[bit / 64] >> (bit % 64) & 1 == 1 {
                    v.iter_mut().zip(p).for_each(|(a, b)| *a ^= b);
                }
            }
            if let Some(w) = v.iter().position(|&x| x != 0) {
                let bit = w * 64 + v[w].trailing_zeros() as usize;
                // Keep the basis reduced on the new pivot.
                for p in pivots.iter_mut() {
                    if p[bit / 64] >> (bit % 64) & 1 == 1 {
                        p.iter_mut().zip(&v).for_each(|(a, b)| *a ^= b);
                    }
                }
                pivots.push(v);
                pivot_bits.push(bit);
            }
        }
    }
    pivots.len() == full_basis.cycles().len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_cycle_basis, build_grid_graph};

    fn euler_ok(d: &Decomposition, g: &UnwrapGraph) {
        for s in d.subgraphs() {
            s.embedding().check_planar(g.edges()).unwrap();
        }
    }

    #[test]
    fn k5_fixture_is_valid() {
        let (g, d) = k5_fixture().unwrap();
        assert_eq!(g.num_edges(), 10);
        assert_eq!(d.num_subgraphs(), 3);
        euler_ok(&d, &g);
        let full = build_cycle_basis(&g, &TreeRule::default()).unwrap();
        assert_eq!(full.cycles().len(), 6);
        assert!(check_coverage_condition(&d, &full));
        // Star edges are shared by all three subgraphs.
        let (e01, _) = g.find_edge(0, 1).unwrap();
        assert_eq!(d.membership(e01), &[0, 1, 2]);
    }

    #[test]
    fn grid_templates_cover_and_are_planar() {
        for (rows, cols) in [(2, 2), (3, 3), (3, 5), (6, 4)] {
            for level in [ArcLevel::Planar, ArcLevel::Diagonal, ArcLevel::Distance2] {
                let g = build_grid_graph(rows, cols, level).unwrap();
                let d = build_decomposition(&g, level).unwrap();
                euler_ok(&d, &g);
                let full = build_cycle_basis(&g, &TreeRule::default()).unwrap();
                assert!(check_coverage_condition(&d, &full), "{rows}x{cols} {level:?}");
                for s in d.subgraphs() {
                    assert!(s.basis().is_spanning_tree());
                }
            }
        }
    }

    #[test]
    fn diagonal_template_has_three_subgraphs() {
        let g = build_grid_graph(3, 3, ArcLevel::Diagonal).unwrap();
        let d = build_decomposition(&g, ArcLevel::Diagonal).unwrap();
        assert_eq!(d.num_subgraphs(), 3);
        let mut covered = vec![false; g.num_edges()];
        for s in d.subgraphs() {
            for &e in s.edges() {
                covered[e] = true;
            }
        }
        assert!(covered.iter().all(|&c| c));
    }

    #[test]
    fn acyclic_pieces_fail_coverage() {
        let g = build_grid_graph(2, 2, ArcLevel::Planar).unwrap();
        let specs = [[0usize, 1], [2, 3]]
            .iter()
            .map(|edges| SubgraphSpec {
                edges: edges.to_vec(),
                embedding: Embedding::from_angles(4, g.edges(), edges, |v, e| grid_angle(&g, v, e)),
                tree: TreeRule::default(),
            })
            .collect();
        let d = Decomposition::from_specs(&g, specs).unwrap();
        let full = build_cycle_basis(&g, &TreeRule::default()).unwrap();
        assert!(!check_coverage_condition(&d, &full));
    }

    #[test]
    fn uncovered_edge_is_rejected() {
        let g = build_grid_graph(2, 2, ArcLevel::Planar).unwrap();
        let edges = vec![0, 1, 2];
        let spec = SubgraphSpec {
            embedding: Embedding::from_angles(4, g.edges(), &edges, |v, e| grid_angle(&g, v, e)),
            edges,
            tree: TreeRule::default(),
        };
        assert!(Decomposition::from_specs(&g, vec![spec]).is_err());
    }

    #[test]
    fn level_mismatch_is_rejected() {
        let g = build_grid_graph(3, 3, ArcLevel::Distance2).unwrap();
        assert!(build_decomposition(&g, ArcLevel::Diagonal).is_err());
        let (k5, _) = k5_fixture().unwrap();
        assert!(build_decomposition(&k5, ArcLevel::Diagonal).is_err());
    }

    #[test]
    fn dump_round_trips() {
        let g = build_grid_graph(3, 4, ArcLevel::Distance2).unwrap();
        let d = build_decomposition(&g, ArcLevel::Distance2).unwrap();
        let text = d.dump(&g);
        assert!(text.starts_with("3 4 2\n"));
        let rec = parse_dump(&text).unwrap();
        assert_eq!(rec.edges.len(), g.num_edges());
        for (e, (i, j, ks)) in rec.edges.iter().enumerate() {
            assert_eq!(g.edge(e), Edge { tail: *i, head: *j });
            assert_eq!(ks.as_slice(), d.membership(e));
        }
        assert!(parse_dump("3 4\n").is_err());
        assert!(parse_dump("3 4 1\n0 1\n").is_err());
    }
}

//! Unwrapping graphs over pixel grids, their fundamental cycle bases, the
//! cycle constraint space and planar decompositions.
//!
//! Vertices are row-major pixel ids. Every undirected edge `(i, j)` is stored
//! once with `i < j` and carries two directed arc slots: arc `2e` is the
//! forward flow `δ_ij`, arc `2e + 1` the backward flow `δ_ji`.

mod constraints;
mod cycles;
mod decomposition;
mod embedding;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use constraints::{
    build_constraints, check_total_unimodularity, ConstraintRow, ConstraintSpace, TuReport,
    TuViolation,
};
pub use cycles::{build_cycle_basis, build_forest_basis, CycleBasis, FundamentalCycle, SignedEdge, TreeRule};
pub use decomposition::{
    build_decomposition, check_coverage_condition, k5_fixture, parse_dump, Decomposition, DumpRecord,
    Subgraph, SubgraphSpec,
};
pub use embedding::{Embedding, Face};

/// Redundant-arc template level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArcLevel {
    /// 4-neighbour grid (planar).
    Planar,
    /// Adds both diagonals of every unit cell.
    Diagonal,
    /// Additionally adds horizontal and vertical arcs of length 2.
    Distance2,
}

impl ArcLevel {
    pub fn from_index(r: u8) -> Result<Self> {
        match r {
            0 => Ok(ArcLevel::Planar),
            1 => Ok(ArcLevel::Diagonal),
            2 => Ok(ArcLevel::Distance2),
            other => Err(Error::InvalidParameter(format!(
                "redundant arc level must be 0, 1 or 2, got {other}"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            ArcLevel::Planar => 0,
            ArcLevel::Diagonal => 1,
            ArcLevel::Distance2 => 2,
        }
    }
}

/// Geometric family of a grid edge. Decomposition templates are built from
/// these families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Horizontal,
    Vertical,
    /// Joins `(r, c + 1)` and `(r + 1, c)`.
    Slash,
    /// Joins `(r, c)` and `(r + 1, c + 1)`.
    Backslash,
    Horizontal2,
    Vertical2,
    /// Edge of a non-grid graph.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.tail {
            self.head
        } else {
            self.tail
        }
    }
}

/// Arc slot of edge `e` in the given direction.
#[inline]
pub fn arc_index(edge: usize, forward: bool) -> usize {
    2 * edge + usize::from(!forward)
}

#[derive(Debug, Clone)]
pub struct UnwrapGraph {
    rows: usize,
    cols: usize,
    arc_level: Option<ArcLevel>,
    edges: Vec<Edge>,
    kinds: Vec<EdgeKind>,
    lookup: HashMap<(usize, usize), usize>,
}

/// Closed-form edge count of the grid template.
pub fn grid_edge_count(rows: usize, cols: usize, level: ArcLevel) -> usize {
    let mut count = rows * (cols - 1) + cols * (rows - 1);
    if level >= ArcLevel::Diagonal {
        count += 2 * (rows - 1) * (cols - 1);
    }
    if level >= ArcLevel::Distance2 {
        count += rows * cols.saturating_sub(2) + cols * rows.saturating_sub(2);
    }
    count
}

pub fn build_grid_graph(rows: usize, cols: usize, level: ArcLevel) -> Result<UnwrapGraph> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidDimension { rows, cols });
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut pairs = Vec::with_capacity(grid_edge_count(rows, cols, level));
    for r in 0..rows {
        for c in 0..cols {
            let v = id(r, c);
            if c + 1 < cols {
                pairs.push((v, id(r, c + 1), EdgeKind::Horizontal));
            }
            if r + 1 < rows {
                pairs.push((v, id(r + 1, c), EdgeKind::Vertical));
            }
            if level >= ArcLevel::Diagonal && r + 1 < rows {
                if c + 1 < cols {
                    pairs.push((v, id(r + 1, c + 1), EdgeKind::Backslash));
                }
                if c >= 1 {
                    pairs.push((v, id(r + 1, c - 1), EdgeKind::Slash));
                }
            }
            if level >= ArcLevel::Distance2 {
                if c + 2 < cols {
                    pairs.push((v, id(r, c + 2), EdgeKind::Horizontal2));
                }
                if r + 2 < rows {
                    pairs.push((v, id(r + 2, c), EdgeKind::Vertical2));
                }
            }
        }
    }
    let mut g = UnwrapGraph::assemble(rows * cols, pairs)?;
    g.rows = rows;
    g.cols = cols;
    g.arc_level = Some(level);
    Ok(g)
}

impl UnwrapGraph {
    /// General graph from an undirected edge list. Vertices are laid out as a
    /// single row. Fails on self-loops, duplicates, out-of-range ids or a
    /// disconnected graph.
    pub fn from_edges(num_vertices: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let tagged = pairs.iter().map(|&(a, b)| (a, b, EdgeKind::Other)).collect();
        let mut g = Self::assemble(num_vertices, tagged)?;
        g.rows = 1;
        g.cols = num_vertices;
        Ok(g)
    }

    fn assemble(num_vertices: usize, mut pairs: Vec<(usize, usize, EdgeKind)>) -> Result<Self> {
        for p in pairs.iter_mut() {
            if p.0 == p.1 {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", p.0)));
            }
            if p.0 >= num_vertices || p.1 >= num_vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) references a vertex outside 0..{num_vertices}",
                    p.0, p.1
                )));
            }
            if p.0 > p.1 {
                std::mem::swap(&mut p.0, &mut p.1);
            }
        }
        pairs.sort_by_key(|p| (p.0, p.1));
        let mut lookup = HashMap::with_capacity(pairs.len());
        let mut edges = Vec::with_capacity(pairs.len());
        let mut kinds = Vec::with_capacity(pairs.len());
        for (a, b, kind) in pairs {
            if lookup.insert((a, b), edges.len()).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            edges.push(Edge { tail: a, head: b });
            kinds.push(kind);
        }
        let components = count_components(num_vertices, edges.iter().copied());
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(UnwrapGraph {
            rows: 0,
            cols: 0,
            arc_level: None,
            edges,
            kinds,
            lookup,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Template level for grid graphs, `None` for general graphs.
    pub fn arc_level(&self) -> Option<ArcLevel> {
        self.arc_level
    }

    pub fn num_vertices(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_arcs(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn kind(&self, e: usize) -> EdgeKind {
        self.kinds[e]
    }

    /// Edge id joining `a` and `b`, plus whether `a -> b` is its forward
    /// direction.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<(usize, bool)> {
        if a < b {
            self.lookup.get(&(a, b)).map(|&e| (e, true))
        } else {
            self.lookup.get(&(b, a)).map(|&e| (e, false))
        }
    }

    /// `(row, col)` of a vertex.
    pub fn position(&self, v: usize) -> (usize, usize) {
        (v / self.cols, v % self.cols)
    }

    pub fn vertex(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Incident `(neighbour, edge)` pairs per vertex, ordered by edge id.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        adjacency_of(self.num_vertices(), &self.edges, 0..self.edges.len())
    }

    /// Cycle space dimension `|E| - |V| + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.num_edges() + 1 - self.num_vertices()
    }
}

pub(crate) fn adjacency_of(
    num_vertices: usize,
    edges: &[Edge],
    subset: impl IntoIterator<Item = usize>,
) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); num_vertices];
    for e in subset {
        let Edge { tail, head } = edges[e];
        adj[tail].push((head, e));
        adj[head].push((tail, e));
    }
    adj
}

pub(crate) fn count_components(num_vertices: usize, edges: impl IntoIterator<Item = Edge>) -> usize {
    let mut parent: Vec<usize> = (0..num_vertices).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = num_vertices;
    for Edge { tail, head } in edges {
        let (a, b) = (find(&mut parent, tail), find(&mut parent, head));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components
}

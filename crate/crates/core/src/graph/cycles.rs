use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adjacency_of, count_components, Edge, UnwrapGraph};
use crate::error::{Error, Result};

/// How the spanning tree behind a fundamental cycle basis is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeRule {
    /// Breadth-first from `root`, neighbours visited in edge-id order.
    Bfs { root: usize },
    /// Depth-first from `root`.
    Dfs { root: usize },
    /// Kruskal over a seeded random edge order.
    Random { seed: u64 },
    /// Explicit tree edges (global edge ids).
    Given(Vec<usize>),
}

impl Default for TreeRule {
    fn default() -> Self {
        TreeRule::Bfs { root: 0 }
    }
}

/// An edge traversed in a direction; `forward` means tail to head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedEdge {
    pub edge: usize,
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FundamentalCycle {
    pub back_edge: usize,
    /// Tail of the back edge; the walk starts and ends here.
    pub start: usize,
    /// Tree path from the back edge's tail to its head, closed by the back
    /// edge traversed head to tail.
    pub steps: Vec<SignedEdge>,
}

impl FundamentalCycle {
    /// Follows the signed steps from `start`; returns the final vertex, or
    /// `None` if a step does not leave the current vertex.
    pub fn walk(&self, edges: &[Edge]) -> Option<usize> {
        let mut at = self.start;
        for s in &self.steps {
            let Edge { tail, head } = edges[s.edge];
            let (from, to) = if s.forward { (tail, head) } else { (head, tail) };
            if from != at {
                return None;
            }
            at = to;
        }
        Some(at)
    }
}

/// Spanning forest plus one fundamental cycle per back edge, over a subset
/// of a graph's edges. Edge ids are global.
#[derive(Debug, Clone)]
pub struct CycleBasis {
    num_vertices: usize,
    tree_edges: Vec<usize>,
    back_edges: Vec<usize>,
    cycles: Vec<FundamentalCycle>,
    /// `(parent, edge)` for every non-root vertex.
    parent: Vec<Option<(usize, usize)>>,
    /// Vertices in tree order: every vertex appears after its parent.
    order: Vec<usize>,
    roots: Vec<usize>,
}

impl CycleBasis {
    pub fn tree_edges(&self) -> &[usize] {
        &self.tree_edges
    }

    pub fn back_edges(&self) -> &[usize] {
        &self.back_edges
    }

    pub fn cycles(&self) -> &[FundamentalCycle] {
        &self.cycles
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_components(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn is_spanning_tree(&self) -> bool {
        self.roots.len() == 1
    }

    pub fn parent(&self, v: usize) -> Option<(usize, usize)> {
        self.parent[v]
    }

    /// Vertices ordered so that parents precede children.
    pub fn tree_order(&self) -> &[usize] {
        &self.order
    }
}

/// Fundamental cycle basis of a connected graph.
pub fn build_cycle_basis(g: &UnwrapGraph, rule: &TreeRule) -> Result<CycleBasis> {
    let all: Vec<usize> = (0..g.num_edges()).collect();
    let basis = build_forest_basis(g.num_vertices(), g.edges(), &all, rule)?;
    if !basis.is_spanning_tree() {
        return Err(Error::Disconnected {
            components: basis.num_components(),
        });
    }
    Ok(basis)
}

/// Fundamental cycle basis over `subset` of `edges`, using a spanning forest
/// when the subset does not connect every vertex.
pub fn build_forest_basis(
    num_vertices: usize,
    edges: &[Edge],
    subset: &[usize],
    rule: &TreeRule,
) -> Result<CycleBasis> {
    let tree = select_tree(num_vertices, edges, subset, rule)?;
    let mut in_tree = vec![false; edges.len()];
    for &e in &tree {
        in_tree[e] = true;
    }

    // Root each component (the requested root first), then orient by BFS.
    let tree_adj = adjacency_of(num_vertices, edges, tree.iter().copied());
    let first_root = match rule {
        TreeRule::Bfs { root } | TreeRule::Dfs { root } => *root,
        _ => 0,
    };
    let mut parent = vec![None; num_vertices];
    let mut depth = vec![0usize; num_vertices];
    let mut seen = vec![false; num_vertices];
    let mut order = Vec::with_capacity(num_vertices);
    let mut roots = Vec::new();
    let mut queue = VecDeque::new();
    for root in std::iter::once(first_root).chain(0..num_vertices) {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        roots.push(root);
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(w, e) in &tree_adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, e));
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }

    let mut tree_edges: Vec<usize> = tree;
    tree_edges.sort_unstable();
    let mut back_edges: Vec<usize> = subset.iter().copied().filter(|&e| !in_tree[e]).collect();
    back_edges.sort_unstable();

    let step = |from: usize, e: usize| SignedEdge {
        edge: e,
        forward: edges[e].tail == from,
    };
    let cycles = back_edges
        .iter()
        .map(|&b| {
            let Edge { tail, head } = edges[b];
            // Climb from both ends to the lowest common ancestor.
            let (mut u, mut v) = (tail, head);
            let mut up = Vec::new();
            let mut down = Vec::new();
            while depth[u] > depth[v] {
                let (p, e) = parent[u].expect("non-root has parent");
                up.push(step(u, e));
                u = p;
            }
            while depth[v] > depth[u] {
                let (p, e) = parent[v].expect("non-root has parent");
                down.push(step(p, e));
                v = p;
            }
            while u != v {
                let (pu, eu) = parent[u].expect("distinct vertices in one tree");
                let (pv, ev) = parent[v].expect("distinct vertices in one tree");
                up.push(step(u, eu));
                down.push(step(pv, ev));
                u = pu;
                v = pv;
            }
            down.reverse();
            up.extend(down);
            up.push(SignedEdge {
                edge: b,
                forward: false,
            });
            FundamentalCycle {
                back_edge: b,
                start: tail,
                steps: up,
            }
        })
        .collect();

    Ok(CycleBasis {
        num_vertices,
        tree_edges,
        back_edges,
        cycles,
        parent,
        order,
        roots,
    })
}

fn select_tree(
    num_vertices: usize,
    edges: &[Edge],
    subset: &[usize],
    rule: &TreeRule,
) -> Result<Vec<usize>> {
    let adj = adjacency_of(num_vertices, edges, subset.iter().copied());
    let check_root = |root: usize| {
        if root >= num_vertices {
            Err(Error::InvalidParameter(format!("tree root {root} out of range")))
        } else {
            Ok(())
        }
    };
    let mut seen = vec![false; num_vertices];
    let mut tree = Vec::with_capacity(num_vertices.saturating_sub(1));
    match rule {
        TreeRule::Bfs { root } => {
            check_root(*root)?;
            let mut queue = VecDeque::new();
            for start in std::iter::once(*root).chain(0..num_vertices) {
                if seen[start] {
                    continue;
                }
                seen[start] = true;
                queue.push_back(start);
                while let Some(v) = queue.pop_front() {
                    for &(w, e) in &adj[v] {
                        if !seen[w] {
                            seen[w] = true;
                            tree.push(e);
                            queue.push_back(w);
                        }
                    }
                }
            }
        }
        TreeRule::Dfs { root } => {
            check_root(*root)?;
            for start in std::iter::once(*root).chain(0..num_vertices) {
                if seen[start] {
                    continue;
                }
                seen[start] = true;
                // (vertex, next adjacency slot)
                let mut stack = vec![(start, 0usize)];
                while let Some(top) = stack.last_mut() {
                    let (v, slot) = *top;
                    if slot == adj[v].len() {
                        stack.pop();
                        continue;
                    }
                    top.1 += 1;
                    let (w, e) = adj[v][slot];
                    if !seen[w] {
                        seen[w] = true;
                        tree.push(e);
                        stack.push((w, 0));
                    }
                }
            }
        }
        TreeRule::Random { seed } => {
            let mut order = subset.to_vec();
            order.sort_unstable();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mut dsu: Vec<usize> = (0..num_vertices).collect();
            fn find(p: &mut [usize], mut x: usize) -> usize {
                while p[x] != x {
                    p[x] = p[p[x]];
                    x = p[x];
                }
                x
            }
            for e in order {
                let (a, b) = (find(&mut dsu, edges[e].tail), find(&mut dsu, edges[e].head));
                if a != b {
                    dsu[a] = b;
                    tree.push(e);
                }
            }
        }
        TreeRule::Given(given) => {
            let mut in_subset = vec![false; edges.len()];
            for &e in subset {
                in_subset[e] = true;
            }
            if let Some(&bad) = given.iter().find(|&&e| e >= edges.len() || !in_subset[e]) {
                return Err(Error::InvalidGraph(format!(
                    "tree edge {bad} is not part of the graph"
                )));
            }
            let forest = count_components(num_vertices, given.iter().map(|&e| edges[e]));
            let full = count_components(num_vertices, subset.iter().map(|&e| edges[e]));
            if forest + given.len() != num_vertices || forest != full {
                return Err(Error::InvalidGraph(
                    "given edges do not form a spanning tree".into(),
                ));
            }
            tree = given.clone();
        }
    }
    Ok(tree)
}

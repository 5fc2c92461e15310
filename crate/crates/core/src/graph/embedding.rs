use super::{arc_index, Edge, SignedEdge};
use crate::error::{Error, Result};

/// Rotation system of a (sub)graph: incident edges around each vertex in
/// counter-clockwise order.
#[derive(Debug, Clone)]
pub struct Embedding {
    rotation: Vec<Vec<(usize, usize)>>,
    /// Position of the edge in its source vertex's rotation, per dart.
    slot: Vec<usize>,
    edge_count: usize,
}

/// A face boundary, darts in traversal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub steps: Vec<SignedEdge>,
}

impl Embedding {
    /// Orders the incident edges of every vertex by `angle(vertex, edge)`.
    pub fn from_angles(
        num_vertices: usize,
        edges: &[Edge],
        subset: &[usize],
        angle: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let mut rotation: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_vertices];
        for &e in subset {
            let Edge { tail, head } = edges[e];
            rotation[tail].push((head, e));
            rotation[head].push((tail, e));
        }
        for (v, rot) in rotation.iter_mut().enumerate() {
            rot.sort_by(|a, b| angle(v, a.1).total_cmp(&angle(v, b.1)));
        }
        Self::from_rotation(edges, rotation)
    }

    /// Wraps an explicit rotation system of `(neighbour, edge)` lists.
    pub fn from_rotation(edges: &[Edge], rotation: Vec<Vec<(usize, usize)>>) -> Self {
        let mut slot = vec![usize::MAX; 2 * edges.len()];
        for (v, rot) in rotation.iter().enumerate() {
            for (i, &(_, e)) in rot.iter().enumerate() {
                slot[arc_index(e, edges[e].tail == v)] = i;
            }
        }
        let edge_count = rotation.iter().map(Vec::len).sum::<usize>() / 2;
        Embedding {
            rotation,
            slot,
            edge_count,
        }
    }

    pub fn rotation(&self, v: usize) -> &[(usize, usize)] {
        &self.rotation[v]
    }

    pub fn num_edges(&self) -> usize {
        self.edge_count
    }

    /// Traces every face: leaving a vertex along the edge that precedes the
    /// arrival edge in counter-clockwise order, so each dart lies on exactly
    /// one face.
    pub fn faces(&self, edges: &[Edge]) -> Vec<Face> {
        let mut used = vec![false; 2 * edges.len()];
        let mut faces = Vec::new();
        for (v, rot) in self.rotation.iter().enumerate() {
            for &(_, e) in rot {
                let forward = edges[e].tail == v;
                if used[arc_index(e, forward)] {
                    continue;
                }
                let mut steps = Vec::new();
                let (mut edge, mut fwd) = (e, forward);
                while !used[arc_index(edge, fwd)] {
                    used[arc_index(edge, fwd)] = true;
                    steps.push(SignedEdge { edge, forward: fwd });
                    let to = if fwd { edges[edge].head } else { edges[edge].tail };
                    let back = self.slot[arc_index(edge, !fwd)];
                    let rot_to = &self.rotation[to];
                    let (_, next) = rot_to[(back + rot_to.len() - 1) % rot_to.len()];
                    fwd = edges[next].tail == to;
                    edge = next;
                }
                faces.push(Face { steps });
            }
        }
        faces
    }

    /// Euler check per connected component with at least one edge:
    /// `V − E + F = 2` holds exactly when the rotation system is planar.
    pub fn check_planar(&self, edges: &[Edge]) -> Result<()> {
        let n = self.rotation.len();
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for rot in &self.rotation {
            for &(_, e) in rot {
                let (a, b) = (find(&mut comp, edges[e].tail), find(&mut comp, edges[e].head));
                if a != b {
                    comp[a] = b;
                }
            }
        }
        let mut v_count = vec![0i64; n];
        let mut e_count = vec![0i64; n];
        let mut f_count = vec![0i64; n];
        for v in 0..n {
            let c = find(&mut comp, v);
            v_count[c] += 1;
            e_count[c] += self.rotation[v].len() as i64;
        }
        for face in self.faces(edges) {
            let s = face.steps[0];
            let from = if s.forward { edges[s.edge].tail } else { edges[s.edge].head };
            f_count[find(&mut comp, from)] += 1;
        }
        for c in 0..n {
            if find(&mut comp, c) != c || e_count[c] == 0 {
                continue;
            }
            let euler = v_count[c] - e_count[c] / 2 + f_count[c];
            if euler != 2 {
                return Err(Error::NotPlanar { euler, expected: 2 });
            }
        }
        Ok(())
    }
}

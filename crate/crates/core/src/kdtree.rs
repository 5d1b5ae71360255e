//! Exact nearest-neighbor search with a balanced k-d tree.

use alloc::vec::Vec;

use crate::{Error, Result};

const DEFAULT_LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Immutable k-d tree over `len` points of dimension `dim`.
///
/// Splits at the median of the dimension with the widest spread. Queries
/// return the exact minimizer of squared Euclidean distance, lowest original
/// index among equidistant points.
#[derive(Debug, Clone)]
pub struct NnIndex {
    dim: usize,
    /// Points copied in tree order.
    points: Vec<f64>,
    /// Original index of each point in tree order.
    ids: Vec<usize>,
    nodes: Vec<Node>,
}

impl NnIndex {
    /// `points` is row-major, `points.len() / dim` rows.
    pub fn build(points: &[f64], dim: usize) -> Result<Self> {
        Self::with_leaf_size(points, dim, DEFAULT_LEAF_SIZE)
    }

    pub fn with_leaf_size(points: &[f64], dim: usize, leaf_size: usize) -> Result<Self> {
        if dim == 0 || points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                what: "point buffer length",
                expected: points.len() / dim * dim + dim,
                got: points.len(),
            });
        }
        if points.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("index points"));
        }
        let len = points.len() / dim;
        let mut ids: Vec<usize> = (0..len).collect();
        let mut nodes = Vec::new();
        build_node(points, dim, leaf_size.max(1), &mut ids, 0, &mut nodes);
        let mut ordered = Vec::with_capacity(points.len());
        for &id in &ids {
            ordered.extend_from_slice(&points[id * dim..(id + 1) * dim]);
        }
        Ok(Self {
            dim,
            points: ordered,
            ids,
            nodes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Split planes `(dimension, value)` in pre-order.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![0usize];
        while let Some(i) = stack.pop() {
            if let Node::Split {
                dim,
                value,
                left,
                right,
            } = self.nodes[i]
            {
                out.push((dim, value));
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }

    /// Returns `(index, squared distance)` of the nearest stored point.
    pub fn nearest(&self, query: &[f64]) -> Result<(usize, f64)> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "query dimension",
                expected: self.dim,
                got: query.len(),
            });
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, query, &mut best);
        Ok(best)
    }

    fn search(&self, node: usize, query: &[f64], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start..end {
                    let p = &self.points[slot * self.dim..(slot + 1) * self.dim];
                    let d = squared_distance(p, query, best.1);
                    let id = self.ids[slot];
                    if d < best.1 || (d == best.1 && id < best.0) {
                        *best = (id, d);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, best);
                if diff * diff <= best.1 {
                    self.search(far, query, best);
                }
            }
        }
    }
}

/// Squared distance, abandoning early (returning a value above `bound`) once
/// the partial sum exceeds `bound`.
#[inline]
fn squared_distance(a: &[f64], b: &[f64], bound: f64) -> f64 {
    let mut acc = 0.0;
    for (chunk_a, chunk_b) in a.chunks(8).zip(b.chunks(8)) {
        for (x, y) in chunk_a.iter().zip(chunk_b) {
            let d = x - y;
            acc += d * d;
        }
        if acc > bound {
            return acc;
        }
    }
    acc
}

fn build_node(
    points: &[f64],
    dim: usize,
    leaf_size: usize,
    ids: &mut [usize],
    offset: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let slot = nodes.len();
    nodes.push(Node::Leaf {
        start: offset,
        end: offset + ids.len(),
    });
    if ids.len() <= leaf_size {
        return slot;
    }

    let coord = |id: usize, d: usize| points[id * dim + d];
    let mut split_dim = 0;
    let mut widest = -1.0;
    for d in 0..dim {
        let (lo, hi) = ids
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &id| {
                (lo.min(coord(id, d)), hi.max(coord(id, d)))
            });
        if hi - lo > widest {
            widest = hi - lo;
            split_dim = d;
        }
    }
    if widest <= 0.0 {
        // all points coincide
        return slot;
    }

    ids.sort_unstable_by(|&a, &b| {
        coord(a, split_dim)
            .total_cmp(&coord(b, split_dim))
            .then(a.cmp(&b))
    });
    let mid = ids.len() / 2;
    let value = coord(ids[mid], split_dim);
    let (lower, upper) = ids.split_at_mut(mid);
    let left = build_node(points, dim, leaf_size, lower, offset, nodes);
    let right = build_node(points, dim, leaf_size, upper, offset + mid, nodes);
    nodes[slot] = Node::Split {
        dim: split_dim,
        value,
        left,
        right,
    };
    slot
}

/// Linear scan with the same tie rule as [`NnIndex::nearest`].
pub fn brute_force_nearest(points: &[f64], dim: usize, query: &[f64]) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in points.chunks_exact(dim).enumerate() {
        let d: f64 = p.iter().zip(query).map(|(x, y)| (x - y) * (x - y)).sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

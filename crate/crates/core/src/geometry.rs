//! Microphone arrays, the DOA scan grid, and the TDOA tables derived from them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::{Error, Result};

pub type Vec3 = [f64; 3];

/// Deepest subdivision level accepted by [`DoaGrid::icosphere`] (40962 points).
pub const MAX_GRID_LEVEL: u32 = 6;

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Angle between two unit vectors, with the cosine clamped to `[-1, 1]`.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Nearest integer, ties toward positive infinity.
#[inline]
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicArray {
    name: String,
    positions: Vec<Vec3>,
}

impl MicArray {
    /// Positions are in meters.
    pub fn new(name: impl Into<String>, positions: Vec<Vec3>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::TooFewMicrophones(positions.len()));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("microphone positions"));
        }
        Ok(Self {
            name: name.into(),
            positions,
        })
    }

    pub fn from_centimeters(name: impl Into<String>, positions_cm: &[Vec3]) -> Result<Self> {
        let positions = positions_cm
            .iter()
            .map(|p| [p[0] / 100.0, p[1] / 100.0, p[2] / 100.0])
            .collect();
        Self::new(name, positions)
    }

    /// Seven microphones on the x-axis.
    pub fn linear7() -> Self {
        Self::from_centimeters(
            "linear7",
            &[
                [-5.0, 0.0, 0.0],
                [-3.3, 0.0, 0.0],
                [-1.7, 0.0, 0.0],
                [0.0, 0.0, 0.0],
                [1.7, 0.0, 0.0],
                [3.3, 0.0, 0.0],
                [5.0, 0.0, 0.0],
            ],
        )
        .expect("preset is valid")
    }

    /// Hexagon plus center in the xy-plane.
    pub fn planar7() -> Self {
        Self::from_centimeters(
            "planar7",
            &[
                [0.0, 0.0, 0.0],
                [5.0, 0.0, 0.0],
                [2.5, 4.3, 0.0],
                [-2.5, 4.3, 0.0],
                [-5.0, 0.0, 0.0],
                [-2.5, -4.3, 0.0],
                [2.5, -4.3, 0.0],
            ],
        )
        .expect("preset is valid")
    }

    /// Center plus one microphone on each half-axis.
    pub fn spatial7() -> Self {
        Self::from_centimeters(
            "spatial7",
            &[
                [0.0, 0.0, 0.0],
                [-5.0, 0.0, 0.0],
                [5.0, 0.0, 0.0],
                [0.0, -5.0, 0.0],
                [0.0, 5.0, 0.0],
                [0.0, 0.0, -5.0],
                [0.0, 0.0, 5.0],
            ],
        )
        .expect("preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "linear7" => Some(Self::linear7()),
            "planar7" => Some(Self::planar7()),
            "spatial7" => Some(Self::spatial7()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn num_mics(&self) -> usize {
        self.positions.len()
    }

    pub fn num_pairs(&self) -> usize {
        let m = self.positions.len();
        m * (m - 1) / 2
    }

    /// Pairs `(i, j)` with `i < j`, ordered `(0,1), (0,2), …, (M-2, M-1)`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let m = self.positions.len();
        (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .collect()
    }

    pub fn centroid(&self) -> Vec3 {
        let n = self.positions.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.positions {
            for d in 0..3 {
                c[d] += p[d] / n;
            }
        }
        c
    }

    pub fn max_spacing(&self) -> f64 {
        self.pairs()
            .into_iter()
            .map(|(i, j)| norm(&sub(&self.positions[j], &self.positions[i])))
            .fold(0.0, f64::max)
    }
}

/// Unit-sphere scan directions.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaGrid {
    level: u32,
    directions: Vec<Vec3>,
}

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

impl DoaGrid {
    /// Geodesic sphere: a regular icosahedron subdivided `level` times, each
    /// edge midpoint pushed back onto the unit sphere. Yields `10 * 4^level + 2`
    /// points. Base vertices come first, then new vertices in the order their
    /// edges are first split.
    pub fn icosphere(level: u32) -> Result<Self> {
        if level > MAX_GRID_LEVEL {
            return Err(Error::GridLevelTooLarge(level));
        }
        let t = (1.0 + 5.0.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .iter()
        .map(normalize)
        .collect();
        let mut faces: Vec<[usize; 3]> = ICOSAHEDRON_FACES.to_vec();

        for _ in 0..level {
            let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            let mut split = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    let (va, vb) = (vertices[a], vertices[b]);
                    vertices.push(normalize(&[va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]]));
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for &[a, b, c] in &faces {
                let ab = split(a, b, &mut vertices);
                let bc = split(b, c, &mut vertices);
                let ca = split(c, a, &mut vertices);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }

        Ok(Self {
            level,
            directions: vertices,
        })
    }

    /// A grid from arbitrary directions; each is normalized.
    pub fn from_directions(directions: Vec<Vec3>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidParameter("grid needs at least one direction"));
        }
        if directions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("grid directions"));
        }
        let directions: Vec<Vec3> = directions.iter().map(normalize).collect();
        if directions.iter().any(|d| !d.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidParameter("zero-length grid direction"));
        }
        Ok(Self {
            level: 0,
            directions,
        })
    }

    pub fn expected_len(level: u32) -> usize {
        10 * 4usize.pow(level) + 2
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn direction(&self, q: usize) -> Vec3 {
        self.directions[q]
    }

    /// Index of the grid point closest in angle to `v`, lowest index on ties.
    pub fn nearest(&self, v: &Vec3) -> usize {
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (q, d) in self.directions.iter().enumerate() {
            let c = dot(d, v);
            if c > best_dot {
                best_dot = c;
                best = q;
            }
        }
        best
    }
}

/// `tau[p * Q + q]` is the TDOA in samples of pair `p` for direction `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct TdoaTable {
    pairs: Vec<(usize, usize)>,
    num_directions: usize,
    tau: Vec<f64>,
    tau_rounded: Vec<i64>,
    fs: f64,
    c: f64,
}

impl TdoaTable {
    pub fn new(array: &MicArray, grid: &DoaGrid, fs: f64, c: f64) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::InvalidParameter("sample rate must be positive"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter("speed of sound must be positive"));
        }
        let pairs = array.pairs();
        let q_len = grid.len();
        let scale = fs / c;
        let mut tau = Vec::with_capacity(pairs.len() * q_len);
        for &(i, j) in &pairs {
            let baseline = sub(&array.positions()[j], &array.positions()[i]);
            tau.extend(grid.directions().iter().map(|s| scale * dot(&baseline, s)));
        }
        let tau_rounded = tau.iter().map(|&t| round_half_up(t)).collect();
        Ok(Self {
            pairs,
            num_directions: q_len,
            tau,
            tau_rounded,
            fs,
            c,
        })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn num_directions(&self) -> usize {
        self.num_directions
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.c
    }

    pub fn tau(&self, pair: usize, q: usize) -> f64 {
        self.tau[pair * self.num_directions + q]
    }

    pub fn tau_rounded(&self, pair: usize, q: usize) -> i64 {
        self.tau_rounded[pair * self.num_directions + q]
    }

    /// Continuous TDOAs of one pair over all directions.
    pub fn pair_row(&self, pair: usize) -> &[f64] {
        &self.tau[pair * self.num_directions..(pair + 1) * self.num_directions]
    }

    pub fn pair_row_rounded(&self, pair: usize) -> &[i64] {
        &self.tau_rounded[pair * self.num_directions..(pair + 1) * self.num_directions]
    }
}

/// For each direction `q`, the sorted indices within `delta_theta` of it.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSets {
    delta_theta: f64,
    sets: Vec<Vec<usize>>,
}

impl NeighborSets {
    pub fn new(grid: &DoaGrid, delta_theta: f64) -> Result<Self> {
        if !(delta_theta > 0.0 && delta_theta <= core::f64::consts::PI) {
            return Err(Error::InvalidParameter("delta_theta must lie in (0, pi]"));
        }
        let dirs = grid.directions();
        let sets = dirs
            .iter()
            .enumerate()
            .map(|(q, sq)| {
                dirs.iter()
                    .enumerate()
                    .filter(|&(x, sx)| x == q || angle_between(sx, sq) <= delta_theta)
                    .map(|(x, _)| x)
                    .collect()
            })
            .collect();
        Ok(Self { delta_theta, sets })
    }

    pub fn delta_theta(&self) -> f64 {
        self.delta_theta
    }

    pub fn get(&self, q: usize) -> &[usize] {
        &self.sets[q]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Integer lag intervals zeroed in the GCC of each pair once direction `q` is found.
#[derive(Debug, Clone, PartialEq)]
pub struct NullRangeTable {
    num_directions: usize,
    ranges: Vec<(i64, i64)>,
    delta_theta: f64,
}

impl NullRangeTable {
    pub fn new(tdoa: &TdoaTable, neighbors: &NeighborSets) -> Result<Self> {
        let q_len = tdoa.num_directions();
        if neighbors.len() != q_len {
            return Err(Error::DimensionMismatch {
                what: "neighbor sets",
                expected: q_len,
                got: neighbors.len(),
            });
        }
        let mut ranges = vec![(0, 0); tdoa.num_pairs() * q_len];
        for p in 0..tdoa.num_pairs() {
            let row = tdoa.pair_row(p);
            for q in 0..q_len {
                let (lo, hi) = neighbors
                    .get(q)
                    .iter()
                    .map(|&x| row[x])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                        (lo.min(t), hi.max(t))
                    });
                ranges[p * q_len + q] = (lo.floor() as i64, hi.ceil() as i64);
            }
        }
        Ok(Self {
            num_directions: q_len,
            ranges,
            delta_theta: neighbors.delta_theta(),
        })
    }

    pub fn range(&self, pair: usize, q: usize) -> (i64, i64) {
        self.ranges[pair * self.num_directions + q]
    }

    pub fn num_directions(&self) -> usize {
        self.num_directions
    }

    pub fn delta_theta(&self) -> f64 {
        self.delta_theta
    }
}

//! Dyadic Whitney cubes for the complement of a finite set inside a box,
//! neighbour lists of the expanded cubes and sampled distance diagnostics.

use std::collections::{HashMap, VecDeque};
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::jets::CompactSet;
use crate::{Error, Result};

/// Expansion factor of `Q*` relative to `Q`.
pub const EXPANSION: f64 = 9.0 / 8.0;

/// An accepted Whitney cube with its distance data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
    pub level: u32,
    /// Index of the nearest point of `E` to the center.
    pub nearest: usize,
    /// `d(x_i, E)` for the center `x_i`.
    pub center_dist: f64,
    /// `d(Q_i, E)` for the closed cube.
    pub cube_dist: f64,
}

impl Cube {
    pub fn diam(&self) -> f64 {
        self.side * (self.center.len() as f64).sqrt()
    }

    /// Closed membership in the cube scaled by `factor` about its center.
    pub fn contains_scaled(&self, x: &[f64], factor: f64) -> bool {
        let h = 0.5 * factor * self.side;
        self.center.iter().zip(x).all(|(c, v)| (v - c).abs() <= h)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_scaled(x, 1.0)
    }

    pub fn in_star(&self, x: &[f64]) -> bool {
        self.contains_scaled(x, EXPANSION)
    }
}

/// Euclidean distance from a closed cube to a finite set.
pub fn cube_distance(center: &[f64], side: f64, set: &CompactSet) -> f64 {
    set.points()
        .iter()
        .map(|p| {
            p.iter()
                .zip(center)
                .map(|(a, c)| {
                    let g = ((a - c).abs() - 0.5 * side).max(0.0);
                    g * g
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Nearest point of `E`; ties go to the lexicographically smallest point.
pub fn nearest(x: &[f64], set: &CompactSet) -> Vec<f64> {
    set.points()[set.nearest_index(x)].clone()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollarCell {
    pub center: Vec<f64>,
    pub side: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeDecomposition {
    pub dim: usize,
    /// Lower corner and side of the root box.
    pub box_lo: Vec<f64>,
    pub box_side: f64,
    pub depth_cap: u32,
    /// Accepted cubes in breadth-first creation order.
    pub cubes: Vec<Cube>,
    /// Unresolved cells at the depth cap.
    pub collar: Vec<CollarCell>,
    /// Largest distance to `E` of a point in a collar cell.
    pub collar_radius: f64,
    /// `neighbors[i]`: all `j != i` with `Q_i* ∩ Q_j* != ∅`, ascending.
    pub neighbors: Vec<Vec<usize>>,
    /// Realized `min` and `max` of `diam Q_j / diam Q_i` over neighbour pairs.
    pub b1: f64,
    pub big_b1: f64,
    pub set: CompactSet,
    #[serde(skip)]
    index: HashMap<(u32, Vec<i64>), usize>,
    pub fingerprint: u64,
}

/// Decomposition of `box ∖ E` with the default feature scale (half the
/// smallest gap between points of `E`, or the box side for one point).
pub fn decompose(box_lo: &[f64], box_side: f64, set: &CompactSet, depth_cap: u32) -> Result<CubeDecomposition> {
    let feature = default_feature(set, box_side);
    decompose_with(box_lo, box_side, set, depth_cap, feature)
}

fn default_feature(set: &CompactSet, box_side: f64) -> f64 {
    let pts = set.points();
    let mut gap = f64::INFINITY;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            gap = gap.min(d);
        }
    }
    if gap.is_finite() {
        0.5 * gap
    } else {
        box_side
    }
}

pub fn decompose_with(
    box_lo: &[f64],
    box_side: f64,
    set: &CompactSet,
    depth_cap: u32,
    min_feature: f64,
) -> Result<CubeDecomposition> {
    let dim = set.dim();
    if box_lo.len() != dim || !(box_side > 0.0) {
        return Err(Error::InvalidInput("box must match the dimension of E and have positive side".into()));
    }
    if !(1..=40).contains(&depth_cap) {
        return Err(Error::InvalidInput(format!("depth cap {depth_cap} outside 1..=40")));
    }
    let inside = set.points().iter().all(|p| p.iter().zip(box_lo).all(|(v, lo)| *v >= *lo && *v <= lo + box_side));
    if !inside {
        return Err(Error::InvalidInput("E must lie inside the box".into()));
    }
    let sqrt_n = (dim as f64).sqrt();
    let mut cubes = Vec::new();
    let mut collar = Vec::new();
    let mut index = HashMap::new();
    let mut queue: VecDeque<(u32, Vec<i64>)> = VecDeque::new();
    queue.push_back((0, vec![0; dim]));
    while let Some((level, key)) = queue.pop_front() {
        let side = box_side / 2f64.powi(level as i32);
        let center: Vec<f64> = key.iter().zip(box_lo).map(|(&k, lo)| lo + (k as f64 + 0.5) * side).collect();
        let diam = side * sqrt_n;
        let cube_dist = cube_distance(&center, side, set);
        if cube_dist >= diam && cube_dist <= 4.0 * diam {
            let nearest = set.nearest_index(&center);
            let center_dist = set.distance(&center);
            index.insert((level, key), cubes.len());
            cubes.push(Cube { center, side, level, nearest, center_dist, cube_dist });
        } else if level == depth_cap {
            collar.push(CollarCell { center, side });
        } else {
            let children = 1usize << dim;
            for c in 0..children {
                let child: Vec<i64> = (0..dim).map(|a| 2 * key[a] + ((c >> (dim - 1 - a)) & 1) as i64).collect();
                queue.push_back((level + 1, child));
            }
        }
    }
    let collar_radius =
        collar.iter().map(|c| cube_distance(&c.center, c.side, set) + c.side * sqrt_n).fold(0.0, f64::max);
    if collar_radius > min_feature {
        return Err(Error::DepthExhausted { collar: collar_radius, feature: min_feature });
    }
    let neighbors = star_neighbors(&cubes);
    let mut b1 = f64::INFINITY;
    let mut big_b1 = 0.0f64;
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            let r = cubes[j].side / cubes[i].side;
            b1 = b1.min(r);
            big_b1 = big_b1.max(r);
        }
    }
    if !b1.is_finite() {
        b1 = 1.0;
        big_b1 = 1.0;
    }
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for c in &cubes {
        c.level.hash(&mut h);
        for v in &c.center {
            v.to_bits().hash(&mut h);
        }
    }
    let dec = CubeDecomposition {
        dim,
        box_lo: box_lo.to_vec(),
        box_side,
        depth_cap,
        cubes,
        collar,
        collar_radius,
        neighbors,
        b1,
        big_b1,
        set: set.clone(),
        index,
        fingerprint: h.finish(),
    };
    dec.check_invariants()?;
    Ok(dec)
}

/// Neighbour lists by a sweep over the first axis.
fn star_neighbors(cubes: &[Cube]) -> Vec<Vec<usize>> {
    let half = |c: &Cube| 0.5 * EXPANSION * c.side;
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| {
        let ka = cubes[a].center[0] - half(&cubes[a]);
        let kb = cubes[b].center[0] - half(&cubes[b]);
        ka.partial_cmp(&kb).unwrap().then(a.cmp(&b))
    });
    let mut out = vec![Vec::new(); cubes.len()];
    for (pos, &i) in order.iter().enumerate() {
        let right = cubes[i].center[0] + half(&cubes[i]);
        for &j in &order[pos + 1..] {
            if cubes[j].center[0] - half(&cubes[j]) > right {
                break;
            }
            let meet = cubes[i]
                .center
                .iter()
                .zip(&cubes[j].center)
                .all(|(a, b)| (a - b).abs() <= half(&cubes[i]) + half(&cubes[j]));
            if meet {
                out[i].push(j);
                out[j].push(i);
            }
        }
    }
    for v in &mut out {
        v.sort_unstable();
    }
    out
}

impl CubeDecomposition {
    /// Re-check the structural invariants on the stored cubes.
    pub fn check_invariants(&self) -> Result<()> {
        let cap = 12usize.pow(2 * self.dim as u32);
        for (i, c) in self.cubes.iter().enumerate() {
            let d = c.diam();
            if !(d <= c.cube_dist && c.cube_dist <= 4.0 * d) {
                return Err(Error::InvariantViolation(format!("cube {i}: distance ratio {}", c.cube_dist / d)));
            }
            if self.neighbors[i].len() > cap {
                return Err(Error::InvariantViolation(format!(
                    "cube {i} has {} star neighbours",
                    self.neighbors[i].len()
                )));
            }
        }
        // dyadic cells of the tree either nest or have disjoint interiors;
        // distinct accepted cells never nest because accepted cells are leaves
        let mut volume: f64 = self.cubes.iter().map(|c| c.side.powi(self.dim as i32)).sum();
        volume += self.collar.iter().map(|c| c.side.powi(self.dim as i32)).sum::<f64>();
        let total = self.box_side.powi(self.dim as i32);
        if (volume - total).abs() > 1e-12 * total {
            return Err(Error::InvariantViolation(format!("cells cover volume {volume} of {total}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Largest number of star neighbours over all cubes.
    pub fn max_overlap(&self) -> usize {
        self.neighbors.iter().map(|v| v.len()).max().unwrap_or(0)
    }

    /// Total volume of the collar.
    pub fn collar_volume(&self) -> f64 {
        self.collar.iter().map(|c| c.side.powi(self.dim as i32)).sum()
    }

    /// Accepted cube containing `x`, if any. On shared faces the coarsest
    /// cube wins.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.iter().zip(&self.box_lo).any(|(v, lo)| *v < *lo || *v > lo + self.box_side) {
            return None;
        }
        for level in 0..=self.depth_cap {
            let n = 1i64 << level;
            let side = self.box_side / n as f64;
            let key: Vec<i64> =
                x.iter().zip(&self.box_lo).map(|(v, lo)| (((v - lo) / side).floor() as i64).clamp(0, n - 1)).collect();
            if let Some(&i) = self.index.get(&(level, key)) {
                return Some(i);
            }
        }
        None
    }

    /// All cubes with `x ∈ Q_j*`, ascending.
    pub fn star_cubes(&self, x: &[f64]) -> Vec<usize> {
        match self.locate(x) {
            Some(i) if self.cubes[i].contains(x) => {
                let mut v: Vec<usize> = std::iter::once(i)
                    .chain(self.neighbors[i].iter().copied())
                    .filter(|&j| self.cubes[j].in_star(x))
                    .collect();
                v.sort_unstable();
                v
            }
            _ => (0..self.cubes.len()).filter(|&j| self.cubes[j].in_star(x)).collect(),
        }
    }

    /// Whether `x` lies in a collar cell (not covered by accepted cubes).
    pub fn in_collar(&self, x: &[f64]) -> bool {
        self.collar.iter().any(|c| {
            let h = 0.5 * c.side;
            c.center.iter().zip(x).all(|(a, v)| (v - a).abs() <= h)
        })
    }

    /// Cubes with `d(Q, E) <= threshold`.
    pub fn small_cubes(&self, threshold: f64) -> Vec<usize> {
        (0..self.cubes.len()).filter(|&i| self.cubes[i].cube_dist <= threshold).collect()
    }
}

/// Worst realized ratio `lhs / rhs` for each distance inequality; all must be `<= 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub samples: usize,
    /// `d(x)/2 <= d(x_i)`
    pub lower_center: f64,
    /// `d(x_i) <= 3 d(x)`
    pub upper_center: f64,
    /// `|x̂_i - x| <= 2 d(x_i)`
    pub foot_to_point: f64,
    /// `|x̂_i - x̂| <= 4 d(x_i)`
    pub foot_to_foot: f64,
    /// `diam Q_i / 3 <= d(x)`
    pub lower_diam: f64,
    /// `d(x) <= 9 diam Q_i`
    pub upper_diam: f64,
}

impl Diagnostics {
    pub fn worst(&self) -> f64 {
        [self.lower_center, self.upper_center, self.foot_to_point, self.foot_to_foot, self.lower_diam, self.upper_diam]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Ratios of the six distance inequalities at one point `x ∈ Q_i*`.
pub fn point_ratios(dec: &CubeDecomposition, i: usize, x: &[f64]) -> [f64; 6] {
    let c = &dec.cubes[i];
    let set = &dec.set;
    let dx = set.distance(x);
    let foot_i = &set.points()[c.nearest];
    let foot_x = &set.points()[set.nearest_index(x)];
    let di = c.center_dist;
    let ratio = |l: f64, r: f64| if l == 0.0 { 0.0 } else { l / r };
    [
        ratio(0.5 * dx, di),
        ratio(di, 3.0 * dx),
        ratio(dist(foot_i, x), 2.0 * di),
        ratio(dist(foot_i, foot_x), 4.0 * di),
        ratio(c.diam() / 3.0, dx),
        ratio(dx, 9.0 * c.diam()),
    ]
}

/// Sample `samples_per_cube` points in every `Q_i*` and check the distance
/// inequalities. Each cube draws from its own seeded stream.
/// Worst ratios of one cube, or the cube and point where a ratio exceeds 1.
type CubeOutcome = std::result::Result<[f64; 6], (usize, Vec<f64>)>;

pub fn cube_diagnostics(dec: &CubeDecomposition, samples_per_cube: usize, seed: u64) -> Result<Diagnostics> {
    let per_cube: Vec<CubeOutcome> = (0..dec.cubes.len())
        .into_par_iter()
        .map(|i| {
            let c = &dec.cubes[i];
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let h = 0.5 * EXPANSION * c.side;
            let mut worst = [0.0f64; 6];
            for s in 0..samples_per_cube.max(1) {
                let x: Vec<f64> = if s == 0 {
                    c.center.clone()
                } else {
                    c.center.iter().map(|v| v + rng.random_range(-h..=h)).collect()
                };
                let r = point_ratios(dec, i, &x);
                if r.iter().any(|v| *v > 1.0 + 1e-12) {
                    return Err((i, x));
                }
                for k in 0..6 {
                    worst[k] = worst[k].max(r[k]);
                }
            }
            Ok(worst)
        })
        .collect();
    let mut worst = [0.0f64; 6];
    for r in per_cube {
        match r {
            Ok(w) => {
                for k in 0..6 {
                    worst[k] = worst[k].max(w[k]);
                }
            }
            Err((i, x)) => {
                return Err(Error::InvariantViolation(format!("distance inequality fails in cube {i} at {x:?}")));
            }
        }
    }
    Ok(Diagnostics {
        samples: dec.cubes.len() * samples_per_cube.max(1),
        lower_center: worst[0],
        upper_center: worst[1],
        foot_to_point: worst[2],
        foot_to_foot: worst[3],
        lower_diam: worst[4],
        upper_diam: worst[5],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn origin_1d() -> CompactSet {
        CompactSet::new(vec![vec![0.0]]).unwrap()
    }

    #[test]
    fn dyadic_cubes_around_origin() {
        let dec = decompose(&[-1.0], 2.0, &origin_1d(), 12).unwrap();
        let q = dec.cubes.iter().find(|c| (c.center[0] - 0.375).abs() < 1e-15).expect("[1/4, 1/2] is accepted");
        assert_eq!(q.side, 0.25);
        assert_eq!(q.cube_dist, 0.25);
        for c in &dec.cubes {
            let r = c.cube_dist / c.diam();
            assert!((1.0..=4.0).contains(&r));
        }
        // two cubes per level and side, starting at level 2
        assert_eq!(dec.len(), 2 * 11);
        assert_eq!(dec.collar.len(), 2);
    }

    #[test]
    fn symmetric_pair() {
        let e = CompactSet::new(vec![vec![-1.0], vec![1.0]]).unwrap();
        let dec = decompose(&[-2.0], 4.0, &e, 10).unwrap();
        let mut left: Vec<(f64, f64)> =
            dec.cubes.iter().filter(|c| c.center[0] < 0.0).map(|c| (-c.center[0], c.side)).collect();
        let mut right: Vec<(f64, f64)> =
            dec.cubes.iter().filter(|c| c.center[0] > 0.0).map(|c| (c.center[0], c.side)).collect();
        left.sort_by(|a, b| a.partial_cmp(b).unwrap());
        right.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(left, right);
    }

    #[test]
    fn nearest_tie_break() {
        let e = CompactSet::new(vec![vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(nearest(&[0.0], &e), vec![-1.0]);
        assert_eq!(nearest(&[1.0], &e), vec![1.0]);
    }

    #[test]
    fn planar_overlap_counts() {
        let e = CompactSet::new(vec![vec![0.0, 0.0]]).unwrap();
        let dec = decompose(&[-1.0, -1.0], 2.0, &e, 8).unwrap();
        assert!(dec.max_overlap() <= 12usize.pow(4));
        assert!(dec.max_overlap() <= 20, "{}", dec.max_overlap());
        let d = cube_diagnostics(&dec, 20, 7).unwrap();
        assert!(d.worst() <= 1.0);
        assert_eq!(d.foot_to_foot, 0.0);
    }

    #[test]
    fn collar_halves_per_level() {
        let e = CompactSet::new(vec![vec![-1.0], vec![0.5]]).unwrap();
        let v: Vec<f64> = (6..10).map(|k| decompose(&[-2.0], 4.0, &e, k).unwrap().collar_volume()).collect();
        for w in v.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 1e-12);
        }
        assert!(matches!(decompose_with(&[-2.0], 4.0, &e, 2, 0.1), Err(Error::DepthExhausted { .. })));
    }

    #[test]
    fn locate_and_star_queries() {
        let e = CompactSet::new(vec![vec![0.0, 0.0]]).unwrap();
        let dec = decompose(&[-1.0, -1.0], 2.0, &e, 6).unwrap();
        for x in [[0.3, 0.7], [-0.9, 0.05], [0.5, 0.5]] {
            let i = dec.locate(&x).unwrap();
            assert!(dec.cubes[i].contains(&x));
            let brute: Vec<usize> = (0..dec.len()).filter(|&j| dec.cubes[j].in_star(&x)).collect();
            assert_eq!(dec.star_cubes(&x), brute);
        }
        assert!(dec.locate(&[0.0, 0.0]).is_none());
        assert!(dec.in_collar(&[0.001, 0.0]));
    }

    #[test]
    fn deterministic_fingerprint() {
        let e = CompactSet::new(vec![vec![0.1, -0.2], vec![0.4, 0.3]]).unwrap();
        let a = decompose(&[-1.0, -1.0], 2.0, &e, 7).unwrap();
        let b = decompose(&[-1.0, -1.0], 2.0, &e, 7).unwrap();
        assert_eq!(a.fingerprint, b.fingerprint);
        assert_eq!(a.cubes, b.cubes);
    }

    proptest! {
        #[test]
        fn nearest_matches_linear_scan(pts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
                                       x in (-2.0f64..2.0, -2.0f64..2.0)) {
            let mut pts: Vec<Vec<f64>> = pts.into_iter().map(|(a, b)| vec![a, b]).collect();
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            pts.dedup();
            let e = CompactSet::new(pts.clone()).unwrap();
            let q = [x.0, x.1];
            let got = nearest(&q, &e);
            let best = pts.iter().map(|p| dist(p, &q)).fold(f64::INFINITY, f64::min);
            let first = pts.iter().find(|p| dist(p, &q) == best).unwrap();
            prop_assert_eq!(&got, first);
        }
    }
}

//! Iterated-convolution bumps and the partition of unity over Whitney cubes.
//!
//! A bump is the indicator of `[-a, a]` convolved with `J` uniform densities
//! of half-widths `r_1 >= ... >= r_J`. Its value at `x` is `P(|x + S| <= a)`
//! where `S` is the sum of the uniforms, so away from the center it equals the
//! CDF of `S` at `a - |x|`. That CDF is stored once as an exact piecewise
//! polynomial for radii normalised to sum 1 and rescaled per cube.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::CubeDecomposition;
use crate::jets::{index_count, index_position, multi_indices, Germ};
use crate::numeric::ln_factorial;
use crate::seqcore::WeightSequence;
use crate::{Error, Result};

/// Largest supported number of convolution stages.
pub const MAX_STAGES: usize = 16;

/// CDF of `sum_i U[-r_i, r_i]` as a piecewise polynomial.
#[derive(Debug, Clone)]
pub struct UniformSumCdf {
    radii: Vec<f64>,
    breaks: Vec<f64>,
    /// `coefs[k]` in powers of `s - breaks[k]` on `[breaks[k], breaks[k+1]]`.
    coefs: Vec<Vec<f64>>,
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * t + v)
}

/// Coefficients of `q(t + h)` from those of `q`.
fn taylor_shift(q: &[f64], h: f64) -> Vec<f64> {
    let mut c = q.to_vec();
    let n = c.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            c[j] += h * c[j + 1];
        }
    }
    c
}

impl UniformSumCdf {
    pub fn new(radii: &[f64]) -> Result<Self> {
        if radii.is_empty() || radii.len() > MAX_STAGES {
            return Err(Error::StageOverflow(format!("{} stages outside 1..={MAX_STAGES}", radii.len())));
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidInput("convolution radii must be positive".into()));
        }
        let r = radii[0];
        let mut cdf = UniformSumCdf { radii: vec![r], breaks: vec![-r, r], coefs: vec![vec![0.0, 0.5 / r]] };
        for &r in &radii[1..] {
            cdf = cdf.convolve(r);
        }
        Ok(cdf)
    }

    fn convolve(&self, rho: f64) -> Self {
        let m = self.breaks.len() - 1;
        // antiderivative anchored at the left end
        let mut anti = Vec::with_capacity(m);
        let mut acc = 0.0;
        for k in 0..m {
            let mut a = Vec::with_capacity(self.coefs[k].len() + 1);
            a.push(acc);
            for (i, c) in self.coefs[k].iter().enumerate() {
                a.push(c / (i + 1) as f64);
            }
            acc = horner(&a, self.breaks[k + 1] - self.breaks[k]);
            anti.push(a);
        }
        let total = acc;
        let b0 = self.breaks[0];
        let bm = self.breaks[m];
        let mut nb: Vec<f64> = self.breaks.iter().flat_map(|b| [b - rho, b + rho]).collect();
        nb.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = nb[nb.len() - 1] - nb[0];
        let mut breaks = vec![nb[0]];
        for &b in &nb[1..] {
            if b - breaks[breaks.len() - 1] > 1e-14 * scale {
                breaks.push(b);
            }
        }
        let deg = self.coefs[0].len();
        let shifted = |s0: f64, mid: f64, sigma: f64| -> Vec<f64> {
            let u = mid + sigma;
            if u <= b0 {
                return vec![0.0; deg + 1];
            }
            if u >= bm {
                let mut v = vec![0.0; deg + 1];
                v[0] = total + (s0 + sigma - bm);
                v[1] = 1.0;
                return v;
            }
            let k = self.breaks.partition_point(|b| *b <= u) - 1;
            taylor_shift(&anti[k], s0 + sigma - self.breaks[k])
        };
        let coefs = breaks
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let p = shifted(w[0], mid, rho);
                let q = shifted(w[0], mid, -rho);
                p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * rho)).collect()
            })
            .collect();
        let mut radii = self.radii.clone();
        radii.push(rho);
        UniformSumCdf { radii, breaks, coefs }
    }

    pub fn stages(&self) -> usize {
        self.radii.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn pieces(&self) -> usize {
        self.coefs.len()
    }

    /// Support `[lo, hi]` of the density.
    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    /// `j`-th derivative of the CDF at `s`.
    pub fn eval(&self, s: f64, j: usize) -> f64 {
        let (lo, hi) = self.support();
        if s <= lo {
            return 0.0;
        }
        if s >= hi {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        let k = (self.breaks.partition_point(|b| *b <= s) - 1).min(self.coefs.len() - 1);
        let c = &self.coefs[k];
        if j >= c.len() {
            return 0.0;
        }
        let t = s - self.breaks[k];
        if j == 0 {
            return horner(c, t).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for i in (j..c.len()).rev() {
            let f: f64 = ((i - j + 1)..=i).map(|m| m as f64).product();
            acc = acc * t + c[i] * f;
        }
        acc
    }
}

/// One-dimensional bump: `1` on `[-(a - L), a - L]`, `0` outside `[-(a + L), a + L]`
/// with `L = sum r_j`.
#[derive(Debug, Clone)]
pub struct Bump1D {
    pub a: f64,
    pub radii: Vec<f64>,
    lambda: f64,
    /// Known plateau and support half-widths; tested before the CDF.
    plateau: f64,
    support: f64,
    /// `B_j = prod_{i <= j} 1/r_i` for `j = 0..J-1`.
    pub bounds: Vec<f64>,
    cdf: Arc<UniformSumCdf>,
}

impl Bump1D {
    /// Bump with explicit plateau half-width `a` and radii.
    pub fn new(a: f64, radii: &[f64]) -> Result<Self> {
        let lambda: f64 = radii.iter().sum();
        if !(lambda < a) {
            return Err(Error::StageOverflow(format!("radii sum {lambda} is not below a = {a}")));
        }
        let normalized: Vec<f64> = radii.iter().map(|r| r / lambda).collect();
        let cdf = Arc::new(UniformSumCdf::new(&normalized)?);
        Ok(Self::with_profile(a, lambda, cdf, a - lambda, a + lambda))
    }

    fn with_profile(a: f64, lambda: f64, cdf: Arc<UniformSumCdf>, plateau: f64, support: f64) -> Self {
        let radii: Vec<f64> = cdf.radii().iter().map(|r| r * lambda).collect();
        let mut bounds = vec![1.0];
        for r in &radii[..radii.len() - 1] {
            let last = bounds[bounds.len() - 1];
            bounds.push(last / r);
        }
        Bump1D { a, radii, lambda, plateau, support, bounds, cdf }
    }

    pub fn stages(&self) -> usize {
        self.radii.len()
    }

    /// Half-width of the closed support.
    pub fn support_half_width(&self) -> f64 {
        self.support
    }

    pub fn plateau_half_width(&self) -> f64 {
        self.plateau
    }

    /// `j`-th derivative at `x` (bump centred at 0).
    pub fn eval(&self, x: f64, j: usize) -> Result<f64> {
        let cap = self.stages() - 1;
        if j > cap {
            return Err(Error::OrderCapExceeded { requested: j, cap });
        }
        Ok(self.eval_unchecked(x, j))
    }

    fn eval_unchecked(&self, x: f64, j: usize) -> f64 {
        let ax = x.abs();
        if ax >= self.support {
            return 0.0;
        }
        if ax <= self.plateau {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        let s = (self.a - ax) / self.lambda;
        let v = self.cdf.eval(s, j) / self.lambda.powi(j as i32);
        if x > 0.0 && j % 2 == 1 {
            -v
        } else {
            v
        }
    }

    /// Derivatives `0..=order` at `x`.
    pub fn derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        (0..=order).map(|j| self.eval_unchecked(x, j)).collect()
    }
}

/// Bump equal to 1 on `[-r, r]` with support `[-9r/8, 9r/8]`.
///
/// Radii are `delta / mu_j` for `j = 1..=stages`, shrunk if needed so that
/// they sum to at most `r / 16`; `delta = None` always uses the cap.
pub fn build_bump(r: f64, seq: &WeightSequence, delta: Option<f64>, stages: usize) -> Result<Bump1D> {
    let profile = Arc::new(bump_profile(seq, stages)?);
    bump_from_profile(r, profile, seq, delta)
}

fn inverse_quotient_sum(seq: &WeightSequence, stages: usize) -> f64 {
    (1..=stages).map(|j| 1.0 / seq.mu(j)).sum()
}

/// Normalised CDF for radii proportional to `1/mu_j`.
pub fn bump_profile(seq: &WeightSequence, stages: usize) -> Result<UniformSumCdf> {
    if !seq.flags().non_quasianalytic {
        return Err(Error::QuasianalyticInput(seq.label.clone()));
    }
    if stages == 0 || stages > MAX_STAGES || seq.k_max() < stages {
        return Err(Error::StageOverflow(format!(
            "{stages} stages with sequence range {} and cap {MAX_STAGES}",
            seq.k_max()
        )));
    }
    let total = inverse_quotient_sum(seq, stages);
    let rho: Vec<f64> = (1..=stages).map(|j| 1.0 / seq.mu(j) / total).collect();
    if rho.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
        return Err(Error::NotAWeightSequence(seq.label.clone()));
    }
    UniformSumCdf::new(&rho)
}

fn bump_from_profile(r: f64, profile: Arc<UniformSumCdf>, seq: &WeightSequence, delta: Option<f64>) -> Result<Bump1D> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("bump half-width must be positive, got {r}")));
    }
    let cap = r / 16.0;
    let lambda = match delta {
        Some(d) if d > 0.0 => (d * inverse_quotient_sum(seq, profile.stages())).min(cap),
        Some(d) => return Err(Error::InvalidInput(format!("delta must be positive, got {d}"))),
        None => cap,
    };
    let a = r + r / 8.0 - lambda;
    let plateau = (a - lambda).max(r);
    Ok(Bump1D::with_profile(a, lambda, profile, plateau, 1.125 * r))
}

#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub dec: Arc<CubeDecomposition>,
    pub order_cap: usize,
    pub stages: usize,
    pub delta: Option<f64>,
    pub seq_label: String,
    /// Per-cube one-dimensional bump, centred at 0, used on every axis.
    pub bumps: Vec<Bump1D>,
}

/// Germ of `prod_axis bump(x_axis - center_axis)` up to `order`.
pub fn tensor_germ(bump: &Bump1D, center: &[f64], x: &[f64], order: usize) -> Germ {
    let tables: Vec<Vec<f64>> = x
        .iter()
        .zip(center)
        .map(|(v, c)| {
            let mut fact = 1.0;
            bump.derivatives(v - c, order)
                .iter()
                .enumerate()
                .map(|(j, d)| {
                    if j > 0 {
                        fact *= j as f64;
                    }
                    d / fact
                })
                .collect()
        })
        .collect();
    let dim = x.len();
    let mut g = Germ::zero(dim, order);
    for alpha in multi_indices(dim, order) {
        g.coef[index_position(&alpha)] = alpha.iter().zip(&tables).map(|(&k, t)| t[k]).product();
    }
    g
}

/// Partition of unity with `J = order_cap + 4` stages.
pub fn build_pou(
    dec: Arc<CubeDecomposition>,
    seq: &WeightSequence,
    delta: Option<f64>,
    order_cap: usize,
) -> Result<PartitionOfUnity> {
    let stages = order_cap + 4;
    let profile = Arc::new(bump_profile(seq, stages)?);
    let bumps = dec
        .cubes
        .par_iter()
        .map(|c| bump_from_profile(0.5 * c.side, profile.clone(), seq, delta))
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionOfUnity { dec, order_cap, stages, delta, seq_label: seq.label.clone(), bumps })
}

/// Certified bound table of one cube.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpCertificate {
    pub cube: usize,
    pub side: f64,
    pub bounds: Vec<f64>,
}

impl PartitionOfUnity {
    pub fn dim(&self) -> usize {
        self.dec.dim
    }

    /// Germ of `psi_i` at `x` up to `order`.
    pub fn psi_germ(&self, i: usize, x: &[f64], order: usize) -> Germ {
        tensor_germ(&self.bumps[i], &self.dec.cubes[i].center, x, order)
    }

    /// Germs of every nonzero `phi_i` at `x`, in cube order.
    pub fn phi_germs(&self, x: &[f64], order: usize) -> Vec<(usize, Germ)> {
        self.partition_germs(x, order).0
    }

    /// Nonzero `phi_i` germs at `x` together with `prod_k (1 - psi_k)`, so that
    /// `sum phi_i = 1 - rest` holds term by term.
    pub fn partition_germs(&self, x: &[f64], order: usize) -> (Vec<(usize, Germ)>, Germ) {
        let star = self.dec.star_cubes(x);
        let mut out = Vec::with_capacity(star.len());
        let mut rest = Germ::constant(self.dim(), order, 1.0);
        for &i in &star {
            let psi = self.psi_germ(i, x, order);
            let phi = psi.mul(&rest);
            if phi.coef.iter().any(|v| *v != 0.0) {
                out.push((i, phi));
            }
            rest = rest.mul(&psi.one_minus());
        }
        (out, rest)
    }

    /// `phi_i(x)` and its derivatives up to `order`, graded order.
    pub fn phi_derivatives(&self, i: usize, x: &[f64], order: usize) -> Result<Vec<f64>> {
        if order > self.order_cap {
            return Err(Error::OrderCapExceeded { requested: order, cap: self.order_cap });
        }
        Ok(self
            .phi_germs(x, order)
            .into_iter()
            .find(|(j, _)| *j == i)
            .map(|(_, g)| g.derivatives())
            .unwrap_or_else(|| vec![0.0; index_count(self.dim(), order)]))
    }

    pub fn phi(&self, i: usize, x: &[f64]) -> f64 {
        self.phi_germs(x, 0).into_iter().find(|(j, _)| *j == i).map_or(0.0, |(_, g)| g.coef[0])
    }

    pub fn sum(&self, x: &[f64]) -> f64 {
        self.phi_germs(x, 0).iter().map(|(_, g)| g.coef[0]).sum()
    }

    /// Whether `x` lies in an accepted cube.
    pub fn covered(&self, x: &[f64]) -> bool {
        self.dec.locate(x).is_some_and(|i| self.dec.cubes[i].contains(x))
    }

    /// Uniform bound on `|d^beta psi_i|` for `|beta| <= order`.
    fn psi_bound_germ(&self, i: usize, order: usize) -> Germ {
        let b = &self.bumps[i].bounds;
        let dim = self.dim();
        let mut g = Germ::zero(dim, order);
        for alpha in multi_indices(dim, order) {
            let v: f64 = alpha.iter().map(|&k| b[k] / ln_factorial(k).exp()).product();
            g.coef[index_position(&alpha)] = v;
        }
        g
    }

    /// Leibniz-expanded bound on `|d^beta phi_i|` over all `x`.
    pub fn phi_bound(&self, i: usize, order: usize) -> Vec<f64> {
        let mut g = self.psi_bound_germ(i, order);
        for &k in self.dec.neighbors[i].iter().filter(|&&k| k < i) {
            g = g.mul(&self.psi_bound_germ(k, order));
        }
        g.derivatives()
    }

    pub fn certificates(&self) -> Vec<BumpCertificate> {
        self.bumps
            .iter()
            .enumerate()
            .map(|(i, b)| BumpCertificate { cube: i, side: self.dec.cubes[i].side, bounds: b.bounds.clone() })
            .collect()
    }
}

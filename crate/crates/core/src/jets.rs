//! Jets on finite point sets: value tables, Taylor polynomials, Whitney
//! remainders and brute-force Roumieu certificates.
//!
//! Multi-indices are enumerated in graded lexicographic order: first by
//! `|alpha|`, then by decreasing first coordinate. In one dimension the
//! position of `alpha` is `alpha` itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numeric::{binomial, ln_factorial};
use crate::seqcore::{ViewKind, WeightSequence};
use crate::{Error, Result};

/// Number of multi-indices of length `dim` with `|alpha| <= order`.
pub fn index_count(dim: usize, order: usize) -> usize {
    match dim {
        1 => order + 1,
        2 => (order + 1) * (order + 2) / 2,
        _ => panic!("dimension {dim} is not supported"),
    }
}

/// Position of `alpha` in graded lexicographic order.
pub fn index_position(alpha: &[usize]) -> usize {
    match alpha.len() {
        1 => alpha[0],
        2 => {
            let d = alpha[0] + alpha[1];
            d * (d + 1) / 2 + alpha[1]
        }
        n => panic!("dimension {n} is not supported"),
    }
}

/// All multi-indices with `|alpha| <= order`, in graded lexicographic order.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(index_count(dim, order));
    for d in 0..=order {
        match dim {
            1 => out.push(vec![d]),
            2 => out.extend((0..=d).map(|k| vec![d - k, k])),
            _ => panic!("dimension {dim} is not supported"),
        }
    }
    out
}

fn order_of(alpha: &[usize]) -> usize {
    alpha.iter().sum()
}

fn ln_alpha_factorial(alpha: &[usize]) -> f64 {
    alpha.iter().map(|&a| ln_factorial(a)).sum()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A non-empty finite set of distinct points in dimension 1 or 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl CompactSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidInput("compact set is empty".into()));
        };
        let dim = first.len();
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidInput(format!("dimension {dim} is not supported")));
        }
        if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("points must be finite and of equal dimension".into()));
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("points must be pairwise distinct".into()));
        }
        let lo = (0..dim).map(|i| points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min)).collect();
        let hi = (0..dim).map(|i| points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
        Ok(CompactSet { dim, points, lo, hi })
    }

    /// `n >= 2` equally spaced samples of `[lo, hi]`.
    pub fn sampled_interval(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) || n < 2 {
            return Err(Error::InvalidInput("interval sampling needs lo < hi and n >= 2".into()));
        }
        let h = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|i| vec![lo + h * i as f64]).collect())
    }

    /// `n x n` tensor samples of a box.
    pub fn sampled_box(lo: [f64; 2], hi: [f64; 2], n: usize) -> Result<Self> {
        if !(hi[0] > lo[0] && hi[1] > lo[1]) || n < 2 {
            return Err(Error::InvalidInput("box sampling needs lo < hi and n >= 2".into()));
        }
        let step = |i: usize, k: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (n - 1) as f64;
        let pts = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| vec![step(i, 0), step(j, 1)]).collect();
        Self::new(pts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bounding box of the points as `(lo, hi)`.
    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    /// Index of the Euclidean-nearest point; ties go to the lexicographically
    /// smallest coordinates.
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let better =
                d < best_d || (d == best_d && p.partial_cmp(&self.points[best]) == Some(std::cmp::Ordering::Less));
            if better {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        distance(&self.points[self.nearest_index(x)], x)
    }
}

/// One-variable profile `g` composed with a linear form, `f(x) = g(a . x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JetPreset {
    /// `sin(a . x + b)`
    Sin {
        a: Vec<f64>,
        b: f64,
    },
    /// `exp(a . x)`
    Exp {
        a: Vec<f64>,
    },
    /// `1 / (1 + c (a . x)^2)`
    Runge {
        c: f64,
        a: Vec<f64>,
    },
    /// `sum coeff * x^powers`
    Poly {
        terms: Vec<PolyTerm>,
    },
    Sum {
        left: Box<JetPreset>,
        right: Box<JetPreset>,
    },
    Product {
        left: Box<JetPreset>,
        right: Box<JetPreset>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: f64,
    pub powers: Vec<usize>,
}

fn falling(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    ((n - k + 1)..=n).map(|v| v as f64).product()
}

impl JetPreset {
    pub fn sin(a: f64, b: f64) -> Self {
        JetPreset::Sin { a: vec![a], b }
    }

    pub fn exp(a: f64) -> Self {
        JetPreset::Exp { a: vec![a] }
    }

    pub fn runge(c: f64) -> Self {
        JetPreset::Runge { c, a: vec![1.0] }
    }

    /// One-variable polynomial from coefficients of `1, x, x^2, ...`.
    pub fn poly(coeffs: &[f64]) -> Self {
        JetPreset::Poly {
            terms: coeffs.iter().enumerate().map(|(k, &c)| PolyTerm { coeff: c, powers: vec![k] }).collect(),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        let ok = match self {
            JetPreset::Sin { a, .. } | JetPreset::Exp { a } | JetPreset::Runge { a, .. } => a.len() == dim,
            JetPreset::Poly { terms } => terms.iter().all(|t| t.powers.len() == dim),
            JetPreset::Sum { left, right } | JetPreset::Product { left, right } => {
                left.check_dim(dim).is_ok() && right.check_dim(dim).is_ok()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("preset does not match dimension {dim}")))
        }
    }

    /// Largest total degree for polynomial presets.
    pub fn poly_degree(&self) -> Option<usize> {
        match self {
            JetPreset::Poly { terms } => terms.iter().map(|t| order_of(&t.powers)).max(),
            _ => None,
        }
    }

    fn profile_derivatives(&self, u: f64, order: usize) -> Vec<f64> {
        match self {
            JetPreset::Sin { b, .. } => {
                let (s, c) = (u + b).sin_cos();
                let cycle = [s, c, -s, -c];
                (0..=order).map(|k| cycle[k % 4]).collect()
            }
            JetPreset::Exp { .. } => vec![u.exp(); order + 1],
            JetPreset::Runge { c, .. } => {
                // (1 + c u^2) g^(n) + 2 c n u g^(n-1) + c n (n-1) g^(n-2) = 0
                let q = 1.0 + c * u * u;
                let mut g = Vec::with_capacity(order + 1);
                g.push(1.0 / q);
                for n in 1..=order {
                    let nf = n as f64;
                    let mut acc = 2.0 * c * nf * u * g[n - 1];
                    if n >= 2 {
                        acc += c * nf * (nf - 1.0) * g[n - 2];
                    }
                    g.push(-acc / q);
                }
                g
            }
            _ => unreachable!(),
        }
    }

    /// `d^alpha f(x)` for all `|alpha| <= order`, in graded lexicographic order.
    pub fn derivatives(&self, x: &[f64], order: usize) -> Vec<f64> {
        let dim = x.len();
        let idx = multi_indices(dim, order);
        match self {
            JetPreset::Sin { a, .. } | JetPreset::Exp { a } | JetPreset::Runge { a, .. } => {
                let u: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                let g = self.profile_derivatives(u, order);
                idx.iter()
                    .map(|alpha| {
                        let scale: f64 = a.iter().zip(alpha).map(|(a, &k)| a.powi(k as i32)).product();
                        scale * g[order_of(alpha)]
                    })
                    .collect()
            }
            JetPreset::Poly { terms } => idx
                .iter()
                .map(|alpha| {
                    terms
                        .iter()
                        .map(|t| {
                            let mut v = t.coeff;
                            for k in 0..dim {
                                if alpha[k] > t.powers[k] {
                                    return 0.0;
                                }
                                v *= falling(t.powers[k], alpha[k]) * x[k].powi((t.powers[k] - alpha[k]) as i32);
                            }
                            v
                        })
                        .sum()
                })
                .collect(),
            JetPreset::Sum { left, right } => {
                let l = left.derivatives(x, order);
                let r = right.derivatives(x, order);
                l.iter().zip(&r).map(|(a, b)| a + b).collect()
            }
            JetPreset::Product { left, right } => {
                let l = left.derivatives(x, order);
                let r = right.derivatives(x, order);
                leibniz_product(dim, order, &l, &r)
            }
        }
    }
}

/// `d^gamma (f g)` from derivative tables of `f` and `g`.
pub fn leibniz_product(dim: usize, order: usize, f: &[f64], g: &[f64]) -> Vec<f64> {
    multi_indices(dim, order)
        .iter()
        .map(|gamma| {
            let mut acc = 0.0;
            match dim {
                1 => {
                    for b in 0..=gamma[0] {
                        acc += binomial(gamma[0], b) * f[b] * g[gamma[0] - b];
                    }
                }
                _ => {
                    for b0 in 0..=gamma[0] {
                        for b1 in 0..=gamma[1] {
                            let c = binomial(gamma[0], b0) * binomial(gamma[1], b1);
                            acc +=
                                c * f[index_position(&[b0, b1])] * g[index_position(&[gamma[0] - b0, gamma[1] - b1])];
                        }
                    }
                }
            }
            acc
        })
        .collect()
}

/// Which inequality family binds a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Value,
    Remainder,
}

/// The exact data tuple attaining the certified constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Binding {
    pub family: Family,
    pub a: usize,
    pub b: Option<usize>,
    pub p: usize,
    pub alpha: Vec<usize>,
}

/// Normalisation of the remainder bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RemainderForm {
    /// `C rho^{p+1} M_{p+1} |b-a|^{p+1-|alpha|} / (p+1-|alpha|)!`
    Whitney,
    /// `C rho^{p+1} |alpha|! m_{p+1} |b-a|^{p+1-|alpha|}`
    Factorial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub rho: f64,
    pub c: f64,
    pub ok: bool,
    pub seq_label: String,
    /// Largest remainder degree checked.
    pub p_max: usize,
    pub form: RemainderForm,
    pub binding: Option<Binding>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ultrajet {
    set: CompactSet,
    a_max: usize,
    /// `values[point][index_position(alpha)]`
    values: Vec<Vec<f64>>,
    pub certificate: Option<Certificate>,
}

impl Ultrajet {
    pub fn from_values(set: CompactSet, a_max: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = index_count(set.dim(), a_max);
        if values.len() != set.len() || values.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidInput(format!("jet table must have {} rows of {n} values", set.len())));
        }
        Ok(Ultrajet { set, a_max, values, certificate: None })
    }

    pub fn zero(set: CompactSet, a_max: usize) -> Self {
        let n = index_count(set.dim(), a_max);
        let values = vec![vec![0.0; n]; set.len()];
        Ultrajet { set, a_max, values, certificate: None }
    }

    /// Jet of a closed-form function, derivatives by exact recurrences.
    pub fn from_preset(preset: &JetPreset, set: CompactSet, a_max: usize) -> Result<Self> {
        preset.check_dim(set.dim())?;
        let values = set.points().par_iter().map(|p| preset.derivatives(p, a_max)).collect();
        Ok(Ultrajet { set, a_max, values, certificate: None })
    }

    pub fn set(&self) -> &CompactSet {
        &self.set
    }

    pub fn a_max(&self) -> usize {
        self.a_max
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// `F^alpha(a)` for the point with index `a`.
    pub fn value(&self, a: usize, alpha: &[usize]) -> Result<f64> {
        let k = order_of(alpha);
        if k > self.a_max {
            return Err(Error::OrderCapExceeded { requested: k, cap: self.a_max });
        }
        Ok(self.values[a][index_position(alpha)])
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.values[a]
    }

    /// `d^alpha (T_a^p F)(x)`.
    pub fn taylor(&self, a: usize, p: usize, alpha: &[usize], x: &[f64]) -> Result<f64> {
        self.taylor_band(a, 0, p, alpha, x)
    }

    /// `d^alpha` of the Taylor terms of total degree `from..=to` at `a`, evaluated at `x`.
    pub fn taylor_band(&self, a: usize, from: usize, to: usize, alpha: &[usize], x: &[f64]) -> Result<f64> {
        if to > self.a_max {
            return Err(Error::OrderCapExceeded { requested: to, cap: self.a_max });
        }
        let k = order_of(alpha);
        if k > to || from > to {
            return Ok(0.0);
        }
        let first = from.saturating_sub(k);
        let h: Vec<f64> = x.iter().zip(&self.set.points()[a]).map(|(x, a)| x - a).collect();
        let row = &self.values[a];
        Ok(match self.dim() {
            1 => {
                let mut acc = 0.0;
                let mut term = 1.0;
                for j in 0..=(to - k) {
                    if j > 0 {
                        term *= h[0] / j as f64;
                        if term == 0.0 {
                            break;
                        }
                    }
                    if j >= first {
                        acc += term * row[k + j];
                    }
                }
                acc
            }
            _ => {
                let mut acc = 0.0;
                for beta in multi_indices(2, to - k) {
                    if beta[0] + beta[1] < first {
                        continue;
                    }
                    let c = h[0].powi(beta[0] as i32) * h[1].powi(beta[1] as i32) / (ln_alpha_factorial(&beta)).exp();
                    acc += c * row[index_position(&[alpha[0] + beta[0], alpha[1] + beta[1]])];
                }
                acc
            }
        })
    }

    /// All `d^alpha (T_a^p F)(x)` with `|alpha| <= order`, graded order.
    pub fn taylor_derivatives(&self, a: usize, p: usize, x: &[f64], order: usize) -> Result<Vec<f64>> {
        multi_indices(self.dim(), order).iter().map(|alpha| self.taylor(a, p, alpha, x)).collect()
    }

    /// Whitney remainder `(R_a^p F)^alpha(b)`.
    pub fn remainder(&self, a: usize, p: usize, alpha: &[usize], b: usize) -> Result<f64> {
        let fb = self.value(b, alpha)?;
        Ok(fb - self.taylor(a, p, alpha, &self.set.points()[b])?)
    }

    /// Smallest `C` making both bounds hold over all stored data with `p <= p_max`.
    pub fn certify(&self, seq: &WeightSequence, rho: f64, p_max: usize) -> Result<Certificate> {
        self.certify_with(seq, rho, p_max, RemainderForm::Whitney)
    }

    pub fn certify_with(
        &self,
        seq: &WeightSequence,
        rho: f64,
        p_max: usize,
        form: RemainderForm,
    ) -> Result<Certificate> {
        if p_max > self.a_max {
            return Err(Error::OrderCapExceeded { requested: p_max, cap: self.a_max });
        }
        if seq.k_max() < p_max + 1 {
            return Err(Error::RangeExhausted { what: "certificate sequence", index: seq.k_max() });
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidInput(format!("rho must be positive, got {rho}")));
        }
        let log_m = seq.log_m();
        let small = seq.view(ViewKind::Small);
        let ln_rho = rho.ln();
        let idx = multi_indices(self.dim(), p_max);
        let n = self.set.len();
        let per_point: Vec<(f64, Option<Binding>)> = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut best = (f64::NEG_INFINITY, None);
                let mut consider = |v: f64, bind: Binding| {
                    if v > best.0 {
                        best = (v, Some(bind));
                    }
                };
                for alpha in &idx {
                    let k = order_of(alpha);
                    let f = self.values[a][index_position(alpha)].abs();
                    if f > 0.0 {
                        let v = f.ln() - k as f64 * ln_rho - log_m[k];
                        consider(v, Binding { family: Family::Value, a, b: None, p: k, alpha: alpha.clone() });
                    }
                }
                for b in 0..n {
                    if b == a {
                        continue;
                    }
                    let ln_dist = distance(&self.set.points()[a], &self.set.points()[b]).ln();
                    for p in 0..=p_max {
                        for alpha in idx.iter().filter(|al| order_of(al) <= p) {
                            let k = order_of(alpha);
                            let r = self.remainder(a, p, alpha, b).unwrap().abs();
                            if r == 0.0 {
                                continue;
                            }
                            let e = (p + 1 - k) as f64;
                            let bound = match form {
                                RemainderForm::Whitney => log_m[p + 1] - ln_factorial(p + 1 - k),
                                RemainderForm::Factorial => ln_factorial(k) + small.log_value(p + 1),
                            } + (p + 1) as f64 * ln_rho
                                + e * ln_dist;
                            consider(
                                r.ln() - bound,
                                Binding { family: Family::Remainder, a, b: Some(b), p, alpha: alpha.clone() },
                            );
                        }
                    }
                }
                best
            })
            .collect();
        let mut best = (f64::NEG_INFINITY, None);
        for (v, b) in per_point {
            if v > best.0 {
                best = (v, b);
            }
        }
        let c = best.0.exp();
        Ok(Certificate { rho, c, ok: c.is_finite(), seq_label: seq.label.clone(), p_max, form, binding: best.1 })
    }

    /// Attach a certificate after checking it against the stored data.
    pub fn with_certificate(mut self, cert: Certificate) -> Result<Self> {
        if !cert.ok {
            return Err(Error::InvariantViolation("certificate constant is not finite".into()));
        }
        self.certificate = Some(cert);
        Ok(self)
    }
}

/// Truncated Taylor expansion at a point, stored as `d^alpha f / alpha!`.
#[derive(Debug, Clone, PartialEq)]
pub struct Germ {
    pub dim: usize,
    pub order: usize,
    pub coef: Vec<f64>,
}

impl Germ {
    pub fn zero(dim: usize, order: usize) -> Self {
        Germ { dim, order, coef: vec![0.0; index_count(dim, order)] }
    }

    pub fn constant(dim: usize, order: usize, c: f64) -> Self {
        let mut g = Self::zero(dim, order);
        g.coef[0] = c;
        g
    }

    pub fn from_derivatives(dim: usize, order: usize, d: &[f64]) -> Self {
        let coef =
            multi_indices(dim, order).iter().zip(d).map(|(alpha, v)| v / ln_alpha_factorial(alpha).exp()).collect();
        Germ { dim, order, coef }
    }

    pub fn derivatives(&self) -> Vec<f64> {
        multi_indices(self.dim, self.order)
            .iter()
            .zip(&self.coef)
            .map(|(alpha, c)| c * ln_alpha_factorial(alpha).exp())
            .collect()
    }

    pub fn add_assign(&mut self, other: &Germ) {
        for (a, b) in self.coef.iter_mut().zip(&other.coef) {
            *a += b;
        }
    }

    /// Cauchy product truncated at `order`.
    pub fn mul(&self, other: &Germ) -> Germ {
        let mut out = Germ::zero(self.dim, self.order);
        match self.dim {
            1 => {
                for i in 0..=self.order {
                    if self.coef[i] == 0.0 {
                        continue;
                    }
                    for j in 0..=(self.order - i) {
                        out.coef[i + j] += self.coef[i] * other.coef[j];
                    }
                }
            }
            _ => {
                let idx = multi_indices(2, self.order);
                for (p, a) in idx.iter().enumerate() {
                    if self.coef[p] == 0.0 {
                        continue;
                    }
                    for (q, b) in idx.iter().enumerate() {
                        if order_of(a) + order_of(b) > self.order {
                            break;
                        }
                        out.coef[index_position(&[a[0] + b[0], a[1] + b[1]])] += self.coef[p] * other.coef[q];
                    }
                }
            }
        }
        out
    }

    /// `1 - self`
    pub fn one_minus(&self) -> Germ {
        let mut out = Germ { dim: self.dim, order: self.order, coef: self.coef.iter().map(|c| -c).collect() };
        out.coef[0] += 1.0;
        out
    }
}

//! Whitney extension of an ultrajet: degree schedule, the weighted Taylor sum
//! `f = sum_i phi_i T_{x_i^}^{p_i} F`, and a verification harness.
//!
//! Near `E` the partition derivatives grow like `Lambda^{-|beta|}` while the
//! neighbouring Taylor polynomials agree to many digits, so the sum is formed
//! as `(1 - rest) T_ref + sum_i phi_i (T_i - T_ref)`. When two cubes share a
//! foot point the difference is a band of Taylor terms and is computed
//! directly instead of by subtraction.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conditions::{check_almost_increasing, resolve_chain_single, ChainCertificate};
use crate::fncore::WeightMatrix;
use crate::geometry::CubeDecomposition;
use crate::jets::{index_count, index_position, multi_indices, Germ, Ultrajet};
use crate::numeric::{pow2_at_least, CONSTANT_GRID_MAX_EXP, C_CAP};
use crate::pou::{build_bump, tensor_germ, Bump1D, PartitionOfUnity};
use crate::seqcore::{gamma_bar, h_assoc, ViewKind, WeightSequence};
use crate::{Error, Result};

/// Residual curves starting below this are treated as identically zero.
const ZERO_RESIDUAL: f64 = 1e-12;

/// Where the degree sequence comes from.
#[derive(Debug, Clone)]
pub enum DegreeSource {
    /// One sequence plays every role in the chain.
    Single(WeightSequence),
    /// Rows of a matrix selected by a resolved chain.
    Matrix { matrix: WeightMatrix, chain: ChainCertificate },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScheduleMode {
    Single { label: String, chain: ChainCertificate },
    Matrix { source: String, chain: ChainCertificate },
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeSchedule {
    pub fingerprint: u64,
    pub l: f64,
    pub mode: ScheduleMode,
    pub degrees: Vec<usize>,
    pub capped: Vec<bool>,
    /// Sequence whose `m`-view drives `Gbar`.
    #[serde(skip)]
    pub degree_seq: WeightSequence,
    /// Sequence whose `h` shapes the residual fit.
    #[serde(skip)]
    pub shape_seq: WeightSequence,
}

/// Change of the degrees when `L` is doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DoubledL {
    pub raised: usize,
    pub lowered: usize,
    pub unchanged: usize,
}

fn degree_for(seq: &WeightSequence, t: f64, a_max: usize) -> Result<(usize, bool)> {
    match gamma_bar(&seq.view(ViewKind::Small), t) {
        Ok(k) if 2 * k <= a_max => Ok((2 * k, false)),
        Ok(_) => Ok((a_max, true)),
        // the table ends before the minimiser, which is then past a_max / 2
        Err(Error::RangeExhausted { .. }) if 2 * seq.k_max() >= a_max => Ok((a_max, true)),
        Err(e) => Err(e),
    }
}

fn degrees(dec: &CubeDecomposition, seq: &WeightSequence, l: f64, a_max: usize) -> Result<Vec<(usize, bool)>> {
    dec.cubes.par_iter().map(|c| degree_for(seq, l * c.center_dist, a_max)).collect()
}

/// `p_i = 2 Gbar(L d(x_i, E))`, capped at `a_max`.
pub fn schedule(dec: &CubeDecomposition, source: &DegreeSource, l: f64, a_max: usize) -> Result<DegreeSchedule> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidInput(format!("L must be positive, got {l}")));
    }
    let (mode, degree_seq, shape_seq) = match source {
        DegreeSource::Single(seq) => {
            if !seq.flags().moderate_growth || !check_almost_increasing(seq).holds {
                return Err(Error::InvalidInput(format!(
                    "{} needs moderate growth and almost increasing mu_k/k for single-sequence mode",
                    seq.label
                )));
            }
            let chain = resolve_chain_single(seq)?;
            let mode = ScheduleMode::Single { label: seq.label.clone(), chain };
            (mode, seq.clone(), seq.clone())
        }
        DegreeSource::Matrix { matrix, chain } => {
            let row = |y: f64| {
                matrix.row(y).cloned().ok_or_else(|| Error::InvalidInput(format!("chain row {y} is not in the matrix")))
            };
            let mode = ScheduleMode::Matrix { source: matrix.source.clone(), chain: chain.clone() };
            (mode, row(chain.y2)?, row(chain.y3)?)
        }
    };
    let (degrees, capped) = degrees(dec, &degree_seq, l, a_max)?.into_iter().unzip();
    Ok(DegreeSchedule { fingerprint: dec.fingerprint, l, mode, degrees, capped, degree_seq, shape_seq })
}

impl DegreeSchedule {
    pub fn capped_count(&self) -> usize {
        self.capped.iter().filter(|c| **c).count()
    }

    /// Replays the schedule at `2L` and counts the changed degrees.
    pub fn doubled_l(&self, dec: &CubeDecomposition, a_max: usize) -> Result<DoubledL> {
        let again = degrees(dec, &self.degree_seq, 2.0 * self.l, a_max)?;
        let mut out = DoubledL { raised: 0, lowered: 0, unchanged: 0 };
        for (p, (q, _)) in self.degrees.iter().zip(again) {
            match q.cmp(p) {
                std::cmp::Ordering::Greater => out.raised += 1,
                std::cmp::Ordering::Less => out.lowered += 1,
                std::cmp::Ordering::Equal => out.unchanged += 1,
            }
        }
        Ok(out)
    }
}

/// Smooth factor equal to 1 near `E` and supported in `d(x, E) < radius`.
#[derive(Debug, Clone)]
pub struct Cutoff {
    pub radius: f64,
    bump: Bump1D,
    points: Vec<Vec<f64>>,
}

impl Cutoff {
    /// Support radius `r0 / (3 B1)` with `B1` the realized neighbour size ratio.
    pub fn new(dec: &CubeDecomposition, bump_seq: &WeightSequence, r0: f64, stages: usize) -> Result<Self> {
        let radius = r0 / (3.0 * dec.big_b1);
        let half = radius / (1.125 * (dec.dim as f64).sqrt());
        let bump = build_bump(half, bump_seq, None, stages)?;
        Ok(Cutoff { radius, bump, points: dec.set.points().to_vec() })
    }

    pub fn germ(&self, x: &[f64], order: usize) -> Germ {
        let mut rest = Germ::constant(x.len(), order, 1.0);
        for p in &self.points {
            let g = tensor_germ(&self.bump, p, x, order);
            if g.coef.iter().any(|v| *v != 0.0) {
                rest = rest.mul(&g.one_minus());
            }
        }
        rest.one_minus()
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionField {
    pub jet: Arc<Ultrajet>,
    pub pou: Arc<PartitionOfUnity>,
    pub schedule: Arc<DegreeSchedule>,
    pub cutoff: Option<Cutoff>,
    pub warnings: Vec<String>,
}

pub fn extend(jet: Arc<Ultrajet>, pou: Arc<PartitionOfUnity>, sched: Arc<DegreeSchedule>) -> Result<ExtensionField> {
    if pou.dec.fingerprint != sched.fingerprint || sched.degrees.len() != pou.dec.cubes.len() {
        return Err(Error::IncompatibleGeometry);
    }
    if jet.set() != &pou.dec.set {
        return Err(Error::IncompatibleGeometry);
    }
    if sched.degrees.iter().any(|p| *p > jet.a_max()) {
        return Err(Error::OrderCapExceeded { requested: *sched.degrees.iter().max().unwrap(), cap: jet.a_max() });
    }
    let mut warnings = Vec::new();
    let capped = sched.capped_count();
    if capped > 0 {
        warnings.push(format!("{capped} cubes have degree capped at A_max = {}", jet.a_max()));
    }
    if jet.certificate.is_none() {
        warnings.push("jet carries no certificate".into());
    }
    Ok(ExtensionField { jet, pou, schedule: sched, cutoff: None, warnings })
}

impl ExtensionField {
    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    pub fn dim(&self) -> usize {
        self.jet.dim()
    }

    /// Germ of `f` at `x` up to `order`.
    pub fn germ(&self, x: &[f64], order: usize) -> Result<Germ> {
        if order > self.pou.order_cap {
            return Err(Error::OrderCapExceeded { requested: order, cap: self.pou.order_cap });
        }
        let dim = self.dim();
        let set = self.jet.set();
        let a = set.nearest_index(x);
        if set.points()[a].as_slice() == x {
            let row = &self.jet.row(a)[..index_count(dim, order.min(self.jet.a_max()))];
            let mut d = row.to_vec();
            d.resize(index_count(dim, order), 0.0);
            return self.with_cutoff_applied(Germ::from_derivatives(dim, order, &d), x, order);
        }
        let (phis, rest) = self.pou.partition_germs(x, order);
        let Some(&(first, _)) = phis.first() else {
            return Ok(Germ::zero(dim, order));
        };
        let cubes = &self.pou.dec.cubes;
        let degrees = &self.schedule.degrees;
        let a_ref = cubes[first].nearest;
        let p_ref = degrees[first];
        let taylor = |a: usize, lo: usize, hi: usize| -> Result<Vec<f64>> {
            multi_indices(dim, order).iter().map(|alpha| self.jet.taylor_band(a, lo, hi, alpha, x)).collect()
        };
        let t_ref = Germ::from_derivatives(dim, order, &taylor(a_ref, 0, p_ref)?);
        let mut acc = t_ref.mul(&rest.one_minus());
        for (i, phi) in &phis {
            let (a, p) = (cubes[*i].nearest, degrees[*i]);
            let diff: Vec<f64> = if a == a_ref {
                if p == p_ref {
                    continue;
                }
                let band = taylor(a, p.min(p_ref) + 1, p.max(p_ref))?;
                if p > p_ref {
                    band
                } else {
                    band.iter().map(|v| -v).collect()
                }
            } else {
                let own = taylor(a, 0, p)?;
                let base = t_ref.derivatives();
                own.iter().zip(&base).map(|(u, v)| u - v).collect()
            };
            acc.add_assign(&phi.mul(&Germ::from_derivatives(dim, order, &diff)));
        }
        self.with_cutoff_applied(acc, x, order)
    }

    fn with_cutoff_applied(&self, g: Germ, x: &[f64], order: usize) -> Result<Germ> {
        Ok(match &self.cutoff {
            Some(c) => g.mul(&c.germ(x, order)),
            None => g,
        })
    }

    /// `d^alpha f(x)` for `|alpha| <= order`, graded order.
    pub fn derivatives(&self, x: &[f64], order: usize) -> Result<Vec<f64>> {
        Ok(self.germ(x, order)?.derivatives())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.germ(x, 0)?.coef[0])
    }

    /// Point query `(x, alpha) -> d^alpha f(x)`.
    pub fn query(&self, x: &[f64], alpha: &[usize]) -> Result<f64> {
        let order = alpha.iter().sum();
        Ok(self.derivatives(x, order)?[index_position(alpha)])
    }

    /// Points in collar cells are evaluated but not certified.
    pub fn flagged(&self, x: &[f64]) -> bool {
        self.pou.dec.in_collar(x)
    }

    /// Whether any cube contributing at `x` had its degree capped.
    pub fn touches_capped(&self, x: &[f64]) -> bool {
        self.pou.dec.star_cubes(x).iter().any(|&i| self.schedule.capped[i])
    }

    /// Values on a grid, in parallel, in point order.
    pub fn evaluate_grid(&self, points: &[Vec<f64>], order: usize) -> Result<Vec<Vec<f64>>> {
        points.par_iter().map(|x| self.derivatives(x, order)).collect()
    }
}

/// What `verify` samples and checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Residuals are tabulated for `|alpha| <= orders`.
    pub orders: usize,
    pub approach_scales: Vec<f64>,
    pub samples_per_scale: usize,
    /// Growth certificate for `|alpha| <= growth_orders`.
    pub growth_orders: usize,
    /// Grid points per axis for the growth certificate.
    pub growth_grid: usize,
    pub fd_points: usize,
    /// Derivative orders covered by the finite-difference check.
    pub fd_orders: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            orders: 4,
            approach_scales: (3..=10).map(|i| 2f64.powi(-i)).collect(),
            samples_per_scale: 64,
            growth_orders: 8,
            growth_grid: 2001,
            fd_points: 100,
            fd_orders: 4,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub point: usize,
    pub alpha: Vec<usize>,
    pub d: f64,
    pub residual: f64,
    pub samples: usize,
}

/// Fit of one residual curve against `C' (h(K d) + d)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualFit {
    pub point: usize,
    pub alpha: Vec<usize>,
    pub c_prime: f64,
    pub k: f64,
    pub fitted: bool,
    pub inversions: usize,
    /// At most one inversion, and that one under 10%.
    pub monotone: bool,
    /// The residual at the smallest scale is at most half the one at the
    /// largest, or the curve is zero to rounding.
    pub decays: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub order: usize,
    pub sup: f64,
    /// `sup / (M1^{order+1} W_order)`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub target: String,
    pub m1: f64,
    pub c: f64,
    pub grid_points: usize,
    pub rows: Vec<GrowthRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorCheck {
    pub name: String,
    pub samples: usize,
    /// Largest `lhs / rhs`.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdCheck {
    pub points: usize,
    pub worst_relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub l: f64,
    pub residuals: Vec<ResidualRow>,
    pub fits: Vec<ResidualFit>,
    pub growth: Option<GrowthCertificate>,
    pub taylor_checks: Vec<TaylorCheck>,
    pub fd: FdCheck,
    pub excluded_capped: usize,
    pub warnings: Vec<String>,
    pub passed: bool,
}

/// Per-task generator independent of scheduling.
fn task_rng(seed: u64, a: usize, b: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed ^ (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F),
    )
}

fn in_box(dec: &CubeDecomposition, x: &[f64]) -> bool {
    x.iter().zip(&dec.box_lo).all(|(v, lo)| *v >= *lo && *v <= lo + dec.box_side)
}

/// Point at distance `r` from `a` in a random direction.
fn around(rng: &mut ChaCha8Rng, a: &[f64], r: f64) -> Vec<f64> {
    if a.len() == 1 {
        let s = if rng.random_range(0..2) == 0 { -1.0 } else { 1.0 };
        vec![a[0] + s * r]
    } else {
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        vec![a[0] + r * th.cos(), a[1] + r * th.sin()]
    }
}

/// Sample points with `d(x, E)` in `[d, 1.125 d]` and foot point `a`.
fn shell_samples(field: &ExtensionField, a: usize, d: f64, n: usize, seed: u64, tag: usize) -> (Vec<Vec<f64>>, usize) {
    let dec = &field.pou.dec;
    let set = field.jet.set();
    let center = &set.points()[a];
    let mut rng = task_rng(seed, a, tag);
    let mut out = Vec::with_capacity(n);
    let mut capped = 0;
    for _ in 0..20 * n {
        if out.len() == n {
            break;
        }
        let r = d * rng.random_range(1.0..1.125);
        let x = around(&mut rng, center, r);
        if !in_box(dec, &x) || set.nearest_index(&x) != a || field.flagged(&x) {
            continue;
        }
        if field.touches_capped(&x) {
            capped += 1;
            continue;
        }
        out.push(x);
    }
    (out, capped)
}

fn fit_curve(shape: &WeightSequence, ds: &[f64], rs: &[f64]) -> (f64, f64, bool) {
    let small = shape.view(ViewKind::Small);
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=CONSTANT_GRID_MAX_EXP {
        let k = 2f64.powi(i);
        let Ok(hs) = ds.iter().map(|d| h_assoc(&small, k * d).map(|h| h.0)).collect::<Result<Vec<_>>>() else {
            continue;
        };
        let c = rs.iter().zip(ds.iter().zip(&hs)).map(|(r, (d, h))| r / (h + d)).fold(0.0, f64::max);
        if best.is_none_or(|(bc, _)| c < bc) {
            best = Some((c, k));
        }
    }
    match best {
        Some((c, k)) => (c, k, c <= C_CAP),
        None => (f64::INFINITY, f64::NAN, false),
    }
}

/// Inversions of a curve that should decrease.
fn inversions(rs: &[f64]) -> (usize, bool) {
    let mut count = 0;
    let mut small = true;
    for w in rs.windows(2) {
        if w[1] > w[0] {
            count += 1;
            if w[1] > 1.1 * w[0] {
                small = false;
            }
        }
    }
    (count, count == 0 || (count == 1 && small))
}

/// Residual tables, growth certificate, Taylor-field checks and the
/// finite-difference cross-check.
pub fn verify(field: &ExtensionField, target: &WeightSequence, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let cap = field.pou.order_cap;
    for order in [cfg.orders, cfg.growth_orders, cfg.fd_orders] {
        if order > cap {
            return Err(Error::OrderCapExceeded { requested: order, cap });
        }
    }
    let dim = field.dim();
    let set = field.jet.set();
    let alphas = multi_indices(dim, cfg.orders);
    let mut scales = cfg.approach_scales.clone();
    scales.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // residual tables
    let tasks: Vec<(usize, usize)> = (0..set.len()).flat_map(|a| (0..scales.len()).map(move |s| (a, s))).collect();
    let sampled = tasks
        .par_iter()
        .map(|&(a, s)| {
            let (xs, capped) = shell_samples(field, a, scales[s], cfg.samples_per_scale, cfg.seed, s);
            let exact = &field.jet.row(a)[..alphas.len()];
            let mut worst = vec![0.0f64; alphas.len()];
            for x in &xs {
                let d = field.derivatives(x, cfg.orders)?;
                for (w, (u, v)) in worst.iter_mut().zip(d.iter().zip(exact)) {
                    *w = w.max((u - v).abs());
                }
            }
            Ok((worst, xs.len(), capped))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut residuals = Vec::new();
    let mut excluded_capped = 0;
    for (&(a, s), (worst, n, capped)) in tasks.iter().zip(&sampled) {
        excluded_capped += capped;
        if *n == 0 {
            continue;
        }
        for (alpha, r) in alphas.iter().zip(worst) {
            residuals.push(ResidualRow { point: a, alpha: alpha.clone(), d: scales[s], residual: *r, samples: *n });
        }
    }
    let mut fits = Vec::new();
    for a in 0..set.len() {
        for alpha in &alphas {
            let curve: Vec<&ResidualRow> = residuals.iter().filter(|r| r.point == a && &r.alpha == alpha).collect();
            if curve.is_empty() {
                continue;
            }
            let ds: Vec<f64> = curve.iter().map(|r| r.d).collect();
            let rs: Vec<f64> = curve.iter().map(|r| r.residual).collect();
            let (c_prime, k, fitted) = fit_curve(&field.schedule.shape_seq, &ds, &rs);
            let (inv, monotone) = inversions(&rs);
            let decays = rs[0] <= ZERO_RESIDUAL || rs[rs.len() - 1] <= 0.5 * rs[0];
            fits.push(ResidualFit {
                point: a,
                alpha: alpha.clone(),
                c_prime,
                k,
                fitted,
                inversions: inv,
                monotone,
                decays,
            });
        }
    }

    let growth = growth_certificate(field, target, cfg.growth_orders, cfg.growth_grid)?;
    let taylor_checks = taylor_checks(field, &scales, cfg)?;
    let fd = fd_check(field, cfg)?;

    let mut warnings = field.warnings.clone();
    if residuals.is_empty() {
        warnings.push("no residual samples: approach scales outside the decomposition".into());
    }
    if growth.is_none() {
        warnings.push(format!("growth certificate not found with M1 <= 2^{CONSTANT_GRID_MAX_EXP}"));
    }
    let passed = !residuals.is_empty()
        && fits.iter().all(|f| f.fitted && f.monotone && f.decays)
        && growth.is_some()
        && fd.worst_relative < 1e-4;
    Ok(VerifyReport {
        l: field.schedule.l,
        residuals,
        fits,
        growth,
        taylor_checks,
        fd,
        excluded_capped,
        warnings,
        passed,
    })
}

/// Uniform grid over the root box without collar points and points of `E`.
pub fn box_grid(dec: &CubeDecomposition, per_axis: usize) -> Vec<Vec<f64>> {
    let step = dec.box_side / (per_axis - 1) as f64;
    let axis: Vec<f64> = (0..per_axis).map(|i| i as f64 * step).collect();
    let pts: Vec<Vec<f64>> = match dec.dim {
        1 => axis.iter().map(|u| vec![dec.box_lo[0] + u]).collect(),
        _ => axis
            .iter()
            .flat_map(|u| axis.iter().map(move |v| (*u, *v)))
            .map(|(u, v)| vec![dec.box_lo[0] + u, dec.box_lo[1] + v])
            .collect(),
    };
    pts.into_iter().filter(|x| !dec.in_collar(x) && dec.set.distance(x) > 0.0).collect()
}

/// Smallest `M1 = 2^i` with every order's ratio at most the order-0 ratio;
/// `C` is that ratio.
pub fn growth_certificate(
    field: &ExtensionField,
    target: &WeightSequence,
    orders: usize,
    per_axis: usize,
) -> Result<Option<GrowthCertificate>> {
    if target.k_max() < orders {
        return Err(Error::RangeExhausted { what: "growth target sequence", index: target.k_max() });
    }
    let dim = field.dim();
    let grid = box_grid(&field.pou.dec, per_axis);
    let values = field.evaluate_grid(&grid, orders)?;
    let idx = multi_indices(dim, orders);
    let mut sups = vec![0.0f64; orders + 1];
    for v in &values {
        for (alpha, x) in idx.iter().zip(v) {
            let k: usize = alpha.iter().sum();
            sups[k] = sups[k].max(x.abs());
        }
    }
    let log_w = target.log_m();
    let ratio = |m: f64, k: usize| sups[k] / (m.powi(k as i32 + 1) * log_w[k].exp());
    let found = (0..=CONSTANT_GRID_MAX_EXP).map(|i| 2f64.powi(i)).find(|&m| {
        let base = ratio(m, 0);
        (1..=orders).all(|k| ratio(m, k) <= base)
    });
    Ok(found.map(|m1| GrowthCertificate {
        target: target.label.clone(),
        m1,
        c: ratio(m1, 0),
        grid_points: grid.len(),
        rows: (0..=orders).map(|k| GrowthRow { order: k, sup: sups[k], ratio: ratio(m1, k) }).collect(),
    }))
}

/// Bounds on the Taylor fields `T_{x^}^{p(x)} F` at residual sample points:
/// `|d^alpha T| <= C (2L)^{|alpha|+1} S_{|alpha|}` and
/// `|d^alpha T(x) - F^alpha(x^)| <= C (2L)^{|alpha|+1} |alpha|! s_{|alpha|+1} d(x)`.
fn taylor_checks(field: &ExtensionField, scales: &[f64], cfg: &VerifyConfig) -> Result<Vec<TaylorCheck>> {
    let Some(cert) = field.jet.certificate.as_ref() else {
        return Ok(Vec::new());
    };
    let seq = &field.schedule.degree_seq;
    let set = field.jet.set();
    let dim = field.dim();
    let two_l = 2.0 * field.schedule.l;
    let alphas = multi_indices(dim, cfg.orders);
    let mut worst = [0.0f64; 2];
    let mut samples = 0;
    for a in 0..set.len() {
        for (s, d) in scales.iter().enumerate() {
            let (xs, _) = shell_samples(field, a, *d, cfg.samples_per_scale.min(8), cfg.seed ^ 0x5EED, s);
            for x in xs {
                let dist = set.distance(&x);
                let (p, capped) = degree_for(seq, field.schedule.l * dist, field.jet.a_max())?;
                if capped {
                    continue;
                }
                samples += 1;
                for alpha in &alphas {
                    let k: usize = alpha.iter().sum();
                    if seq.k_max() < k + 1 {
                        continue;
                    }
                    let t = field.jet.taylor(a, p, alpha, &x)?;
                    let f = field.jet.value(a, alpha)?;
                    let scale = cert.c * two_l.powi(k as i32 + 1);
                    let bound0 = scale * seq.log_m()[k].exp();
                    let small = seq.view(ViewKind::Small);
                    let ln_kf: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
                    let bound1 = scale * (ln_kf + small.log_value(k + 1)).exp() * dist;
                    worst[0] = worst[0].max(t.abs() / bound0);
                    worst[1] = worst[1].max((t - f).abs() / bound1);
                }
            }
        }
    }
    Ok(vec![
        TaylorCheck { name: "taylor_field_bound".into(), samples, worst_ratio: worst[0] },
        TaylorCheck { name: "taylor_field_matching".into(), samples, worst_ratio: worst[1] },
    ])
}

/// `d^alpha f` against a five-point difference of `d^{alpha - e_j} f`.
fn fd_check(field: &ExtensionField, cfg: &VerifyConfig) -> Result<FdCheck> {
    let dec = &field.pou.dec;
    let dim = field.dim();
    let mut rng = task_rng(cfg.seed, usize::MAX, 0);
    let mut points = Vec::new();
    for _ in 0..100 * cfg.fd_points.max(1) {
        if points.len() == cfg.fd_points {
            break;
        }
        let x: Vec<f64> = dec.box_lo.iter().map(|lo| lo + rng.random_range(0.0..dec.box_side)).collect();
        let Some(i) = dec.locate(&x) else { continue };
        if dec.in_collar(&x) || !dec.cubes[i].contains(&x) {
            continue;
        }
        points.push((x, dec.cubes[i].side));
    }
    let alphas: Vec<Vec<usize>> =
        multi_indices(dim, cfg.fd_orders).into_iter().filter(|a| a.iter().sum::<usize>() > 0).collect();
    let worst = points
        .par_iter()
        .map(|(x, side)| {
            let h = 1e-4 * side;
            let exact = field.derivatives(x, cfg.fd_orders)?;
            let mut worst = 0.0f64;
            for alpha in &alphas {
                let axis = (0..dim).rev().find(|&j| alpha[j] > 0).unwrap();
                let mut lower = alpha.clone();
                lower[axis] -= 1;
                let at = |s: f64| -> Result<f64> {
                    let mut y = x.clone();
                    y[axis] += s * h;
                    field.query(&y, &lower)
                };
                let fd = (at(-2.0)? - 8.0 * at(-1.0)? + 8.0 * at(1.0)? - at(2.0)?) / (12.0 * h);
                let e = exact[index_position(alpha)];
                worst = worst.max((e - fd).abs() / e.abs().max(1.0));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(FdCheck { points: points.len(), worst_relative: worst })
}

/// Extension with `L = guard * rho`, doubling the guard until verification
/// passes or `L` would exceed `2^16 rho`.
pub fn extend_verified(
    jet: Arc<Ultrajet>,
    pou: Arc<PartitionOfUnity>,
    source: &DegreeSource,
    rho: f64,
    guard: f64,
    target: &WeightSequence,
    cfg: &VerifyConfig,
) -> Result<(ExtensionField, VerifyReport)> {
    let mut guard = guard;
    loop {
        let sched = Arc::new(schedule(&pou.dec, source, guard * rho, jet.a_max())?);
        let field = extend(jet.clone(), pou.clone(), sched)?;
        let report = verify(&field, target, cfg)?;
        if report.passed || 2.0 * guard > 65536.0 {
            return Ok((field, report));
        }
        guard *= 2.0;
    }
}

/// Smallest power of two at least `x`, used for reporting guards.
pub fn guard_for(l: f64, rho: f64) -> Option<f64> {
    pow2_at_least(l / rho, CONSTANT_GRID_MAX_EXP)
}

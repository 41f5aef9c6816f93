//! Weight functions `omega`, the Young conjugate of `phi(s) = omega(e^s)`,
//! the conjugate `omega*`, the kappa integral, the Poisson extension and the
//! weight matrix `W^x_k = exp(phi*(x k)/x)`.

use serde::Serialize;

use crate::numeric::{divergence, golden_max, log_grid, pow2_at_least, RangePolicy, CONSTANT_GRID_MAX_EXP};
use crate::quad;
use crate::seqcore::WeightSequence;
use crate::{Error, Result};

/// Spacing of the uniform `s`-grid used for `phi*`: 64 points per decade of `e^s`.
pub const S_STEP: f64 = std::f64::consts::LN_10 / 64.0;
/// Largest `s` the conjugate grid may extend to (`e^s` must stay finite).
pub const S_CAP: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Preset {
    /// `t^alpha`, shifted to `max(0, t^alpha - 1)` when normalized.
    Power { alpha: f64, normalized: bool },
    /// `t^a / (ln t)^b` for large `t`, joined convexly (in `ln t`) to a power below.
    LogPower { a: f64, b: f64 },
    /// `omega_M` of a weight sequence, continued past `K_max` by its fitted power tail.
    OfSequence(WeightSequence),
    /// Piecewise linear through `(t_i, w_i)`, log-log extrapolated beyond the data.
    Tabulated { t: Vec<f64>, w: Vec<f64> },
    /// `kappa` of another weight function.
    Kappa(Box<WeightFunction>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightFunction {
    pub label: String,
    pub preset: Preset,
    #[serde(skip)]
    log_power_junction: Option<(f64, f64, f64)>,
}

/// Finite-range verdicts on the weight-function axioms and extra properties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionFlags {
    pub increasing: bool,
    /// Smallest grid `C` with `omega(2t) <= C omega(t) + C`, if any.
    pub doubling_constant: Option<f64>,
    /// `omega(t) = O(t)`: smallest grid `C` with `omega(t) <= C t + C`.
    pub linear_bound: Option<f64>,
    /// `ln t = o(omega(t))`
    pub beats_log: bool,
    pub convex_phi: bool,
    pub non_quasianalytic: bool,
    pub concave: bool,
    pub o_of_t: bool,
    pub normalized: bool,
}

impl WeightFunction {
    fn new(label: String, preset: Preset) -> Self {
        let log_power_junction = match &preset {
            Preset::LogPower { a, b } => Some(log_power_junction(*a, *b)),
            _ => None,
        };
        WeightFunction { label, preset, log_power_junction }
    }

    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("power exponent must lie in (0, 1), got {alpha}")));
        }
        Ok(Self::new(format!("power({alpha})"), Preset::Power { alpha, normalized: true }))
    }

    /// `t^alpha` without the shift; used for closed-form comparisons.
    pub fn power_unnormalized(alpha: f64) -> Result<Self> {
        let mut w = Self::power(alpha)?;
        w.preset = Preset::Power { alpha, normalized: false };
        w.label = format!("power_raw({alpha})");
        Ok(w)
    }

    pub fn log_power(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0 && b >= 0.0) {
            return Err(Error::InvalidInput(format!("log_power needs 0 < a <= 1, b >= 0, got ({a}, {b})")));
        }
        Ok(Self::new(format!("log_power({a},{b})"), Preset::LogPower { a, b }))
    }

    /// The weight `t^{1/(1+s)}` whose matrix is equivalent to Gevrey order `s`.
    pub fn gevrey_dual(s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidInput(format!("Gevrey order must be positive, got {s}")));
        }
        let mut w = Self::power(1.0 / (1.0 + s))?;
        w.label = format!("gevrey_dual({s})");
        Ok(w)
    }

    pub fn of_sequence(seq: WeightSequence) -> Result<Self> {
        seq.require_weight_sequence()?;
        if seq.tail().p <= 0.0 {
            return Err(Error::InvalidInput("sequence tail does not grow".into()));
        }
        Ok(Self::new(format!("omega_of({})", seq.label), Preset::OfSequence(seq)))
    }

    pub fn tabulated(t: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != w.len() {
            return Err(Error::InvalidInput("tabulated weight needs matching t and w with >= 2 points".into()));
        }
        if t[0] <= 0.0 || t.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidInput("tabulated t must be positive and strictly increasing".into()));
        }
        if w[0] < 0.0 || w.windows(2).any(|p| p[1] < p[0]) || *w.last().unwrap() <= 0.0 {
            return Err(Error::InvalidInput("tabulated w must be non-negative and non-decreasing".into()));
        }
        Ok(Self::new("tabulated".into(), Preset::Tabulated { t, w }))
    }

    pub fn kappa_of(inner: WeightFunction) -> Self {
        let label = format!("kappa({})", inner.label);
        Self::new(label, Preset::Kappa(Box::new(inner)))
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.preset {
            Preset::Power { alpha, normalized } => {
                if *normalized {
                    (t.powf(*alpha) - 1.0).max(0.0)
                } else {
                    t.powf(*alpha)
                }
            }
            Preset::LogPower { a, b } => {
                let (s_j, w_j, q) = self.log_power_junction.unwrap();
                let s = t.ln();
                if s <= 0.0 {
                    0.0
                } else if s >= s_j {
                    (a * s - b * s.ln()).exp()
                } else {
                    w_j * (q * s).exp_m1() / (q * s_j).exp_m1()
                }
            }
            Preset::OfSequence(seq) => omega_of_sequence(seq, t),
            Preset::Tabulated { t: ts, w } => tabulated_eval(ts, w, t),
            Preset::Kappa(inner) => inner.kappa(t).unwrap_or(f64::INFINITY),
        }
    }

    /// `phi(s) = omega(e^s)`.
    pub fn phi(&self, s: f64) -> f64 {
        match &self.preset {
            Preset::Power { alpha, normalized: true } => {
                if s <= 0.0 {
                    0.0
                } else {
                    (alpha * s).exp_m1()
                }
            }
            _ => self.eval(s.exp()),
        }
    }

    /// `ln phi(s)`, finite for `s` far beyond the range where `e^s` overflows.
    pub fn log_phi(&self, s: f64) -> f64 {
        match &self.preset {
            Preset::Power { alpha, normalized } => {
                if !*normalized {
                    alpha * s
                } else if s <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    alpha * s + (-(-alpha * s).exp_m1()).ln()
                }
            }
            Preset::LogPower { a, b } => {
                let (s_j, _, _) = self.log_power_junction.unwrap();
                if s >= s_j {
                    a * s - b * s.ln()
                } else {
                    self.eval(s.exp()).ln()
                }
            }
            Preset::Tabulated { t: ts, w } => {
                let n = ts.len();
                if s > ts[n - 1].ln() && w[n - 2] > 0.0 {
                    let slope = (w[n - 1] / w[n - 2]).ln() / (ts[n - 1] / ts[n - 2]).ln();
                    w[n - 1].ln() + slope * (s - ts[n - 1].ln())
                } else {
                    self.eval(s.exp()).ln()
                }
            }
            _ => self.eval(s.exp()).ln(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        match &self.preset {
            Preset::Power { normalized, .. } => *normalized,
            Preset::LogPower { .. } => true,
            Preset::OfSequence(seq) => seq.mu(1) >= 1.0,
            Preset::Tabulated { .. } => self.eval(1.0) == 0.0,
            Preset::Kappa(_) => false,
        }
    }

    /// `kappa(t) = t int_t^inf omega(u)/u^2 du = int_0^inf omega(t e^w) e^{-w} dw`.
    pub fn kappa(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("kappa needs t > 0, got {t}")));
        }
        let lt = t.ln();
        quad::semi_infinite(|w: f64| (self.log_phi(lt + w) - w).exp()).map_err(|e| {
            Error::QuasianalyticInput(format!("{}: integrand decays like w^-{:.4}", self.label, e.exponent))
        })
    }

    /// `phi*(t) = sup_{s >= 0} (s t - phi(s))`.
    pub fn young_conjugate(&self, t: f64) -> Result<f64> {
        YoungGrid::new(self).eval(t)
    }

    /// `omega*(s) = sup_{t >= 0} (omega(t) - s t)`; needs `omega(t) = o(t)`.
    pub fn omega_conjugate(&self, s: f64) -> Result<f64> {
        if !self.o_of_t() {
            return Err(Error::NotLittleO);
        }
        self.omega_conjugate_unchecked(s)
    }

    pub(crate) fn omega_conjugate_unchecked(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::InvalidInput(format!("omega* needs s > 0, got {s}")));
        }
        let grid = log_grid(1e-6, 1e9, 64);
        let f = |lt: f64| {
            let t = lt.exp();
            self.eval(t) - s * t
        };
        let mut best = 0.0;
        let mut arg = None;
        for (i, t) in grid.iter().enumerate() {
            let v = self.eval(*t) - s * t;
            if v > best {
                best = v;
                arg = Some(i);
            }
        }
        let Some(i) = arg else { return Ok(0.0) };
        if i == grid.len() - 1 {
            return Err(Error::GridExhausted { edge: grid[i] });
        }
        let lo = grid[i.saturating_sub(1)].ln();
        let hi = grid[i + 1].ln();
        let (_, v) = golden_max(f, lo, hi, 200);
        Ok(best.max(v))
    }

    /// `omega(t) = o(t)` on `[1, 1e9]`: `t / omega(t)` diverges.
    pub fn o_of_t(&self) -> bool {
        let ts = log_grid(10.0, 1e9, 8);
        let r: Vec<f64> = ts.iter().map(|t| t / self.eval(*t).max(f64::MIN_POSITIVE)).collect();
        divergence(&ts, &r, &RangePolicy::default()).diverging
    }

    /// Poisson extension `(|y|/pi) int omega(|u|) / ((u - x)^2 + y^2) du`.
    pub fn poisson(&self, x: f64, y: f64) -> Result<f64> {
        let y = y.abs();
        if y == 0.0 {
            return Ok(self.eval(x.abs()));
        }
        let ax = x.abs();
        let kernel = |u: f64| 1.0 / ((u - ax).powi(2) + y * y) + 1.0 / ((u + ax).powi(2) + y * y);
        let g = |u: f64| self.eval(u) * kernel(u);
        let mut cuts = vec![0.0, 1.0, ax];
        for m in [1.0, 4.0, 16.0, 64.0] {
            cuts.push(ax + m * y);
            if ax > m * y {
                cuts.push(ax - m * y);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let far = 2.0 * cuts.last().unwrap();
        cuts.push(far);
        let mut total = 0.0f64;
        for w in cuts.windows(2) {
            total += quad::adaptive(g, w[0], w[1], 1e-13 * (1.0 + total.abs()));
        }
        let tail = quad::semi_infinite(|w: f64| {
            let u = far * w.exp();
            g(u) * u
        })
        .map_err(|e| {
            Error::QuasianalyticInput(format!("{}: Poisson integrand decays like w^-{:.4}", self.label, e.exponent))
        })?;
        Ok(y / std::f64::consts::PI * (total + tail))
    }

    /// Evaluate all flags on `t in [1, 1e9]` (16 points per decade).
    pub fn flags(&self) -> FunctionFlags {
        let ts = log_grid(1.0, 1e9, 16);
        let w: Vec<f64> = ts.iter().map(|t| self.eval(*t)).collect();
        let increasing = w.windows(2).all(|p| p[1] >= p[0]);
        let need = ts.iter().zip(&w).map(|(t, wt)| (self.eval(2.0 * t) / (wt + 1.0)).max(0.0)).fold(0.0, f64::max);
        let doubling_constant = pow2_at_least(need, CONSTANT_GRID_MAX_EXP);
        let lin = ts.iter().zip(&w).map(|(t, wt)| wt / (t + 1.0)).fold(0.0, f64::max);
        let linear_bound = pow2_at_least(lin, CONSTANT_GRID_MAX_EXP);
        let big: Vec<f64> = ts.iter().copied().filter(|t| *t >= 10.0).collect();
        let ratio: Vec<f64> = big.iter().map(|t| self.eval(*t) / t.ln()).collect();
        let beats_log = divergence(&big, &ratio, &RangePolicy::default()).diverging;
        let s: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let convex_phi = (1..ts.len() - 1).all(|i| {
            let l = (w[i] - w[i - 1]) / (s[i] - s[i - 1]);
            let r = (w[i + 1] - w[i]) / (s[i + 1] - s[i]);
            r >= l - 1e-9 * (1.0 + l.abs())
        });
        let concave = (1..ts.len() - 1).all(|i| {
            let l = (w[i] - w[i - 1]) / (ts[i] - ts[i - 1]);
            let r = (w[i + 1] - w[i]) / (ts[i + 1] - ts[i]);
            r <= l + 1e-9 * (1.0 + l.abs())
        });
        FunctionFlags {
            increasing,
            doubling_constant,
            linear_bound,
            beats_log,
            convex_phi,
            non_quasianalytic: self.kappa(1.0).is_ok(),
            concave,
            o_of_t: self.o_of_t(),
            normalized: self.is_normalized(),
        }
    }

    /// Weight matrix rows `ln W^x_k = phi*(x k)/x` for `k = 0..=k_max`.
    pub fn weight_matrix(&self, x_grid: &[f64], k_max: usize) -> Result<WeightMatrix> {
        if !self.is_normalized() {
            return Err(Error::InvalidInput(format!("{} is not normalized", self.label)));
        }
        if x_grid.is_empty() || x_grid.windows(2).any(|p| p[1] <= p[0]) || x_grid[0] <= 0.0 {
            return Err(Error::InvalidInput("x_grid must be positive and increasing".into()));
        }
        let grid = YoungGrid::new(self);
        let rows = x_grid
            .iter()
            .map(|&x| {
                let log_m = (0..=k_max).map(|k| Ok(grid.eval(x * k as f64)? / x)).collect::<Result<Vec<f64>>>()?;
                let row = WeightSequence::from_log_m(format!("W^{x}[{}]", self.label), log_m)?;
                match self.row_tail(&grid, x, k_max) {
                    Some(r) => row.with_tail_remainder(r),
                    None => Ok(row),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightMatrix { x_grid: x_grid.to_vec(), rows, source: self.label.clone() })
    }
}

impl WeightFunction {
    /// `sum_{l > K} 1/theta^x_l` from the continuous model `ln theta^x(l) = s*(x(l - 1/2))`.
    ///
    /// With `T = exp(s*(x K))` partial integration gives
    /// `(kappa(T) - omega(T) - x K) / (x T)`.
    fn row_tail(&self, grid: &YoungGrid<'_>, x: f64, k_max: usize) -> Option<f64> {
        let xk = x * k_max as f64;
        let (_, s) = grid.eval_with_argmax(xk).ok()?;
        let t = s.exp();
        let k = self.kappa(t).ok()?;
        let r = (k - self.eval(t) - xk) / (x * t);
        (r.is_finite() && r > 0.0).then_some(r)
    }
}

/// Default matrix parameters `2^j`, `-4 <= j <= 6`.
pub fn default_x_grid() -> Vec<f64> {
    (-4..=6).map(|j| 2f64.powi(j)).collect()
}

fn log_power_junction(a: f64, b: f64) -> (f64, f64, f64) {
    let s_j = (2.0 * b / a).max(4.0 / a);
    let w_j = (a * s_j - b * s_j.ln()).exp();
    // slope of ln-phi on the right of the junction; match q / (1 - e^{-q s_j}) to it
    let target = a - b / s_j;
    let slope = |q: f64| q / (-(q * s_j)).exp_m1().abs();
    let (mut lo, mut hi) = (1e-12, target.max(1e-6));
    while slope(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (s_j, w_j, lo)
}

fn omega_of_sequence(seq: &WeightSequence, t: f64) -> f64 {
    let lt = t.ln();
    let lm = seq.log_m();
    let k_max = seq.k_max();
    let mut best = 0.0f64;
    for (k, v) in lm.iter().enumerate().skip(1) {
        best = best.max(k as f64 * lt - v);
    }
    let tail = seq.tail();
    if seq.log_mu(k_max) < lt {
        // continue mu_j = c j^p past K_max; the maximiser sits where mu_j crosses t
        let j_star = ((t / tail.c).powf(1.0 / tail.p)).floor().max(k_max as f64);
        let ln_g = statrs::function::gamma::ln_gamma;
        let k0 = k_max as f64;
        for j in [j_star, j_star + 1.0] {
            let log_mj = lm[k_max] + (j - k0) * tail.c.ln() + tail.p * (ln_g(j + 1.0) - ln_g(k0 + 1.0));
            best = best.max(j * lt - log_mj);
        }
    }
    best
}

fn tabulated_eval(ts: &[f64], w: &[f64], t: f64) -> f64 {
    let n = ts.len();
    if t <= ts[0] {
        return w[0] * t / ts[0];
    }
    if t >= ts[n - 1] {
        let (t0, t1, w0, w1) = (ts[n - 2], ts[n - 1], w[n - 2], w[n - 1]);
        if w0 <= 0.0 {
            return w1 * t / t1;
        }
        let slope = (w1 / w0).ln() / (t1 / t0).ln();
        return w1 * (t / t1).powf(slope);
    }
    let i = ts.partition_point(|x| *x <= t) - 1;
    let f = (t - ts[i]) / (ts[i + 1] - ts[i]);
    w[i] + f * (w[i + 1] - w[i])
}

/// `phi` tabulated on `s = 0, h, 2h, ...` for repeated conjugate queries.
pub struct YoungGrid<'a> {
    func: &'a WeightFunction,
    phi: Vec<f64>,
}

impl<'a> YoungGrid<'a> {
    pub fn new(func: &'a WeightFunction) -> Self {
        let n = (1e9f64.ln() / S_STEP).ceil() as usize;
        let phi = (0..=n).map(|i| func.phi(i as f64 * S_STEP)).collect();
        YoungGrid { func, phi }
    }

    fn extend_to(&self, n: usize) -> Vec<f64> {
        let mut phi = self.phi.clone();
        for i in phi.len()..=n {
            phi.push(self.func.phi(i as f64 * S_STEP));
        }
        phi
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.eval_with_argmax(t)?.0)
    }

    /// `(phi*(t), s)` with `s` the maximiser of `s t - phi(s)`.
    pub fn eval_with_argmax(&self, t: f64) -> Result<(f64, f64)> {
        if t < 0.0 {
            return Err(Error::InvalidInput(format!("phi* needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok((-self.phi[0], 0.0));
        }
        let mut extended: Option<Vec<f64>> = None;
        loop {
            let phi = extended.as_deref().unwrap_or(&self.phi);
            let (i, best) = phi
                .iter()
                .enumerate()
                .map(|(i, p)| (i, i as f64 * S_STEP * t - p))
                .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
            if i + 1 < phi.len() {
                let lo = i.saturating_sub(1) as f64 * S_STEP;
                let hi = (i + 1) as f64 * S_STEP;
                let (s, v) = golden_max(|s| s * t - self.func.phi(s), lo, hi, 200);
                return Ok(if v >= best { (v, s) } else { (best, i as f64 * S_STEP) });
            }
            let edge = phi.len() as f64 * S_STEP;
            if edge >= S_CAP {
                return Err(Error::GridExhausted { edge });
            }
            let next = ((2.0 * edge).min(S_CAP) / S_STEP).ceil() as usize;
            extended = Some(self.extend_to(next));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightMatrix {
    pub x_grid: Vec<f64>,
    pub rows: Vec<WeightSequence>,
    pub source: String,
}

impl WeightMatrix {
    /// Build from explicit rows (hand-made fixtures).
    pub fn from_rows(source: impl Into<String>, x_grid: Vec<f64>, rows: Vec<WeightSequence>) -> Result<Self> {
        if x_grid.len() != rows.len() || x_grid.is_empty() {
            return Err(Error::InvalidInput("one row per x is required".into()));
        }
        Ok(WeightMatrix { x_grid, rows, source: source.into() })
    }

    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.x_grid.iter().position(|v| (v / x - 1.0).abs() < 1e-12)
    }

    pub fn row(&self, x: f64) -> Option<&WeightSequence> {
        self.index_of(x).map(|i| &self.rows[i])
    }

    pub fn k_max(&self) -> usize {
        self.rows.iter().map(|r| r.k_max()).min().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn presets_vanish_on_unit_interval() {
        for w in [
            WeightFunction::power(0.5).unwrap(),
            WeightFunction::log_power(1.0, 2.0).unwrap(),
            WeightFunction::gevrey_dual(1.0).unwrap(),
        ] {
            assert_eq!(w.eval(0.0), 0.0);
            assert_eq!(w.eval(0.7), 0.0);
            assert_eq!(w.eval(1.0), 0.0);
            assert!(w.is_normalized());
        }
        assert!(WeightFunction::power(1.5).is_err());
    }

    #[test]
    fn log_power_matches_formula_past_junction() {
        let w = WeightFunction::log_power(1.0, 2.0).unwrap();
        let t = 1e4f64;
        assert!(rel(w.eval(t), t / t.ln().powi(2)) < 1e-14);
        // continuous at e^4
        let j = 4f64.exp();
        assert!(rel(w.eval(j * (1.0 - 1e-12)), w.eval(j)) < 1e-9);
        let f = w.flags();
        assert!(f.increasing && f.convex_phi && f.o_of_t && f.non_quasianalytic);
    }

    #[test]
    fn young_conjugate_closed_form() {
        assert_eq!(WeightFunction::power(0.5).unwrap().young_conjugate(0.0).unwrap(), 0.0);
        let w = WeightFunction::power_unnormalized(0.5).unwrap();
        for t in [0.75f64, 3.0, 40.0, 1e3] {
            let exact = 2.0 * t * (2.0 * t).ln() - 2.0 * t;
            assert!(rel(w.young_conjugate(t).unwrap(), exact) < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn young_conjugate_extends_grid() {
        let w = WeightFunction::power(0.5).unwrap();
        // maximiser s = 2 ln(2t) = 2 ln(2e6) is beyond ln 1e9
        assert!(w.young_conjugate(1e6).is_ok());
        assert!(matches!(w.young_conjugate(1e200), Err(Error::GridExhausted { .. })));
    }

    #[test]
    fn omega_conjugate_closed_form() {
        let w = WeightFunction::power_unnormalized(0.5).unwrap();
        for s in [0.01, 0.1, 1.0, 5.0] {
            assert!(rel(w.omega_conjugate(s).unwrap(), 0.25 / s) < 1e-6);
        }
        let n = WeightFunction::power(0.5).unwrap();
        assert_eq!(n.omega_conjugate(1.0).unwrap(), 0.0);
        assert_eq!(n.omega_conjugate(3.0).unwrap(), 0.0);
    }

    #[test]
    fn kappa_closed_form_and_domination() {
        let w = WeightFunction::power_unnormalized(0.5).unwrap();
        for t in [1.0, 1e2, 1e5] {
            assert!(rel(w.kappa(t).unwrap(), 2.0 * t.sqrt()) < 1e-9);
        }
        let lp = WeightFunction::log_power(1.0, 2.0).unwrap();
        for t in [1e2, 1e4, 1e7] {
            assert!(lp.kappa(t).unwrap() >= lp.eval(t));
        }
        let q = WeightFunction::tabulated(vec![1.0, 10.0], vec![1.0, 10.0]).unwrap();
        assert!(matches!(q.kappa(1.0), Err(Error::QuasianalyticInput(_))));
    }

    #[test]
    fn poisson_boundary_and_lower_bound() {
        let w = WeightFunction::power(0.5).unwrap();
        assert_eq!(w.poisson(4.0, 0.0).unwrap(), 1.0);
        for (x, y) in [(0.0, 1.0), (3.0, 0.5), (100.0, 2.0)] {
            assert!(w.poisson(x, y).unwrap() >= w.eval(x) - 1e-12);
        }
        // unnormalized root at the origin: (1/pi) int |u|^{1/2}/(u^2 + 1) du = sqrt(2)
        let raw = WeightFunction::power_unnormalized(0.5).unwrap();
        assert!(rel(raw.poisson(0.0, 1.0).unwrap(), 2f64.sqrt()) < 1e-6);
    }

    #[test]
    fn sequence_weight_matches_brute_force() {
        let g = WeightSequence::gevrey(1.0, 64).unwrap();
        let w = WeightFunction::of_sequence(g.clone()).unwrap();
        for t in [0.5, 3.0, 100.0, 1e3] {
            let brute = g.omega_assoc(t).unwrap();
            assert!((w.eval(t) - brute).abs() < 1e-12 * (1.0 + brute));
        }
        // past K_max the continuation agrees with the untruncated sequence
        let long = WeightSequence::gevrey(1.0, 400).unwrap();
        let t = 1e5;
        assert!(rel(w.eval(t), long.omega_assoc(t).unwrap()) < 1e-3);
    }

    #[test]
    fn matrix_rows_start_at_one_and_are_log_convex() {
        let w = WeightFunction::power(0.5).unwrap();
        let m = w.weight_matrix(&default_x_grid(), 64).unwrap();
        for r in &m.rows {
            assert_eq!(r.log_m()[0], 0.0);
            assert!(r.flags().log_convex);
        }
        assert!(m.row(1.0).is_some());
        assert!(m.row(3.0).is_none());
    }

    #[test]
    fn row_tail_matches_longer_table() {
        for f in [WeightFunction::power(0.5).unwrap(), WeightFunction::log_power(1.0, 2.0).unwrap()] {
            let short = f.weight_matrix(&[1.0], 64).unwrap();
            let long = f.weight_matrix(&[1.0], 512).unwrap();
            let a = short.rows[0].tail_sums().unwrap()[32];
            let b = long.rows[0].tail_sums().unwrap()[32];
            assert!(rel(a, b) < 1e-3, "{}: {a} vs {b}", f.label);
        }
    }
}

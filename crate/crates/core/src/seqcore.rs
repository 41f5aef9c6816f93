//! Weight sequences stored as `ln M_k`, their associated functions and the
//! descendant construction.
//!
//! Naming: `M_k = mu_1 ... mu_k` and `m_k = M_k / k!`. All arithmetic is done
//! on natural logs so that `k!^2` stays finite far beyond `k = 170`.

use serde::Serialize;

use crate::numeric::{divergence, ln_factorials, RangePolicy, LOG_TIE};
use crate::quad;
use crate::{Error, Result};

pub const DEFAULT_K_MAX: usize = 128;

/// Properties evaluated over `0..=K_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Flags {
    pub log_convex: bool,
    pub weight_sequence: bool,
    pub strongly_log_convex: bool,
    pub non_quasianalytic: bool,
    pub moderate_growth: bool,
}

/// Least-squares fit `mu_j ~ c j^p` over the last quarter of the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTail {
    pub c: f64,
    pub p: f64,
    /// Last tabulated index; the tail starts after it.
    pub end: usize,
}

impl PowerTail {
    /// Estimate of `sum_{j > end} 1/mu_j` by the midpoint integral from `end + 1/2`.
    pub fn remainder(&self) -> Option<f64> {
        if self.p <= 1.0 + 1e-6 {
            return None;
        }
        let a = self.end as f64 + 0.5;
        Some(a.powf(1.0 - self.p) / (self.c * (self.p - 1.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSequence {
    pub label: String,
    log_m: Vec<f64>,
    flags: Flags,
    tail: PowerTail,
    /// Caller-supplied `sum_{j > K_max} 1/mu_j`, preferred over the fitted tail.
    remainder: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViewKind {
    /// `M_k`
    Big,
    /// `m_k = M_k / k!`
    Small,
    /// `mu_k = M_k / M_{k-1}` with `mu_0 = 1`
    Quotient,
}

/// One of the three mutually determined tables of a sequence.
#[derive(Debug, Clone)]
pub struct SequenceView<'a> {
    pub kind: ViewKind,
    pub source: &'a WeightSequence,
    table: Vec<f64>,
}

impl<'a> SequenceView<'a> {
    pub fn log_value(&self, k: usize) -> f64 {
        self.table[k]
    }

    pub fn value(&self, k: usize) -> f64 {
        self.table[k].exp()
    }

    pub fn log_table(&self) -> &[f64] {
        &self.table
    }
}

impl WeightSequence {
    /// Build from quotients `mu_0 = 1, mu_1, ..., mu_K`.
    pub fn from_mu(label: impl Into<String>, mu: &[f64]) -> Result<Self> {
        if mu.len() < 2 {
            return Err(Error::InvalidInput("need at least mu_0 and mu_1".into()));
        }
        if (mu[0] - 1.0).abs() > 1e-15 {
            return Err(Error::InvalidInput(format!("mu_0 must be 1, got {}", mu[0])));
        }
        if let Some(bad) = mu.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(format!("mu_{bad} is not positive")));
        }
        let mut log_m = Vec::with_capacity(mu.len());
        let mut acc = 0.0;
        log_m.push(0.0);
        for v in &mu[1..] {
            acc += v.ln();
            log_m.push(acc);
        }
        Self::from_log_m(label, log_m)
    }

    /// Build from `ln M_k`, `k = 0..=K`.
    pub fn from_log_m(label: impl Into<String>, log_m: Vec<f64>) -> Result<Self> {
        if log_m.len() < 2 || log_m[0] != 0.0 {
            return Err(Error::InvalidInput("ln M_0 must be 0 and K_max >= 1".into()));
        }
        if log_m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite ln M_k".into()));
        }
        let tail = fit_tail(&log_m);
        let mut seq = WeightSequence { label: label.into(), log_m, flags: Flags::default(), tail, remainder: None };
        seq.flags = seq.compute_flags();
        Ok(seq)
    }

    /// `M_k = k!^{1+s}`.
    pub fn gevrey(s: f64, k_max: usize) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidInput(format!("Gevrey order must be positive, got {s}")));
        }
        let log_m = ln_factorials(k_max).into_iter().map(|v| (1.0 + s) * v).collect();
        Self::from_log_m(format!("gevrey({s})"), log_m)
    }

    /// Attach a known value of `sum_{j > K_max} 1/mu_j`.
    pub fn with_tail_remainder(mut self, remainder: f64) -> Result<Self> {
        if !(remainder.is_finite() && remainder >= 0.0) {
            return Err(Error::InvalidInput(format!("tail remainder {remainder} is not finite")));
        }
        self.remainder = Some(remainder);
        self.flags.non_quasianalytic = true;
        Ok(self)
    }

    /// `sum_{j > K_max} 1/mu_j`: the supplied value, else the fitted power tail.
    pub fn tail_remainder(&self) -> Option<f64> {
        self.remainder.or_else(|| self.tail.remainder())
    }

    pub fn k_max(&self) -> usize {
        self.log_m.len() - 1
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn tail(&self) -> PowerTail {
        self.tail
    }

    pub fn log_m(&self) -> &[f64] {
        &self.log_m
    }

    pub fn log_mu(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.log_m[k] - self.log_m[k - 1]
        }
    }

    pub fn mu(&self, k: usize) -> f64 {
        self.log_mu(k).exp()
    }

    /// `ln M_k^{1/k}` for `k >= 1`.
    pub fn log_root(&self, k: usize) -> f64 {
        self.log_m[k] / k as f64
    }

    pub fn view(&self, kind: ViewKind) -> SequenceView<'_> {
        let table = match kind {
            ViewKind::Big => self.log_m.clone(),
            ViewKind::Small => {
                let f = ln_factorials(self.k_max());
                self.log_m.iter().zip(f).map(|(a, b)| a - b).collect()
            }
            ViewKind::Quotient => (0..=self.k_max()).map(|k| self.log_mu(k)).collect(),
        };
        SequenceView { kind, source: self, table }
    }

    /// The same sequence with `K_max` lowered.
    pub fn truncated(&self, k_max: usize) -> Result<Self> {
        let k = k_max.min(self.k_max());
        Self::from_log_m(self.label.clone(), self.log_m[..=k].to_vec())
        // a supplied remainder only describes the full table, so it is dropped
    }

    /// Error unless the `weight_sequence` flag is set.
    pub fn require_weight_sequence(&self) -> Result<&Self> {
        if self.flags.weight_sequence {
            Ok(self)
        } else {
            Err(Error::NotAWeightSequence(self.label.clone()))
        }
    }

    fn compute_flags(&self) -> Flags {
        let k_max = self.k_max();
        let tol = |v: f64| 1e-12 * (1.0 + v.abs());
        let lmu: Vec<f64> = (0..=k_max).map(|k| self.log_mu(k)).collect();
        let log_convex = lmu[1] >= -tol(lmu[1]) && (1..k_max).all(|k| lmu[k + 1] >= lmu[k] - tol(lmu[k]));
        let strongly_log_convex = (1..k_max).all(|k| {
            let a = lmu[k] - (k as f64).ln();
            let b = lmu[k + 1] - ((k + 1) as f64).ln();
            b >= a - tol(a)
        });
        let ks: Vec<f64> = (1..=k_max).map(|k| k as f64).collect();
        let roots: Vec<f64> = (1..=k_max).map(|k| self.log_root(k).exp()).collect();
        let policy = RangePolicy::default();
        let weight_sequence = log_convex && divergence(&ks, &roots, &policy).diverging;
        let ratio: Vec<f64> = (1..=k_max).map(|k| (lmu[k] - self.log_root(k)).exp()).collect();
        let moderate_growth = log_convex && !divergence(&ks, &ratio, &policy).diverging;
        Flags {
            log_convex,
            weight_sequence,
            strongly_log_convex,
            non_quasianalytic: self.tail.p > 1.0 + 1e-6,
            moderate_growth,
        }
    }

    /// `T_k = sum_{j >= k} 1/mu_j` for `k = 0..=K_max` (entry 0 includes `1/mu_0`).
    pub fn tail_sums(&self) -> Result<Vec<f64>> {
        let rest = self
            .tail_remainder()
            .ok_or_else(|| Error::TailUnbounded(format!("{}: fitted exponent {:.4} <= 1", self.label, self.tail.p)))?;
        let k_max = self.k_max();
        let mut out = vec![0.0; k_max + 1];
        let mut acc = rest;
        for k in (0..=k_max).rev() {
            acc += (-self.log_mu(k)).exp();
            out[k] = acc;
        }
        Ok(out)
    }

    /// `omega_M(t) = sup_k (k ln t - ln M_k)`.
    pub fn omega_assoc(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("omega_M needs t > 0, got {t}")));
        }
        let (log_h, _) = log_assoc(&self.log_m, 1.0 / t)?;
        Ok(-log_h)
    }

    /// Conjugate `sup_s (omega_M(s) - s t)`, which is `sup_k (k ln(k/t) - k - ln M_k)`.
    pub fn omega_assoc_conjugate(&self, t: f64) -> Result<f64> {
        let mut best = 0.0f64;
        let mut arg = 0;
        for k in 1..=self.k_max() {
            let kf = k as f64;
            let v = kf * (kf / t).ln() - kf - self.log_m[k];
            if v > best + LOG_TIE * (1.0 + best.abs()) {
                best = v;
                arg = k;
            }
        }
        if arg == self.k_max() {
            return Err(Error::RangeExhausted { what: "omega_M conjugate", index: arg });
        }
        Ok(best)
    }

    /// `Sigma_M(t) = max{k : mu_k <= t}`.
    pub fn counting(&self, t: f64) -> Result<usize> {
        if t < 1.0 {
            return Err(Error::InvalidInput(format!("counting needs t >= mu_0 = 1, got {t}")));
        }
        let lt = t.ln();
        let k_max = self.k_max();
        if self.log_mu(k_max) <= lt {
            return Err(Error::RangeExhausted { what: "counting function", index: k_max });
        }
        Ok((0..=k_max).rev().find(|&k| self.log_mu(k) <= lt).unwrap_or(0))
    }

    /// `int_0^t Sigma_M(u)/u du` by Gauss-Legendre panels between the jumps of `Sigma_M`.
    pub fn counting_integral(&self, t: f64) -> Result<f64> {
        let top = self.counting(t.max(1.0))?;
        let mut total = 0.0;
        for k in 1..=top {
            let lo = self.mu(k).max(1.0);
            let hi = if k < top { self.mu(k + 1).min(t) } else { t };
            if hi > lo {
                let kf = k as f64;
                total += quad::gl20(|u: f64| kf / u, lo, hi);
            }
        }
        Ok(total)
    }

    /// The sequence with quotients `sigma_k = tau_1 k / tau_k`, where
    /// `tau_k = k/mu_k + sum_{j >= k} 1/mu_j`.
    pub fn descendant(&self) -> Result<WeightSequence> {
        if !self.flags.non_quasianalytic {
            return Err(Error::QuasianalyticInput(self.label.clone()));
        }
        let tails = self.tail_sums()?;
        let k_max = self.k_max();
        let tau: Vec<f64> = (0..=k_max).map(|k| k as f64 * (-self.log_mu(k)).exp() + tails[k]).collect();
        let mut sigma = vec![1.0; k_max + 1];
        for k in 1..=k_max {
            sigma[k] = tau[1] * k as f64 / tau[k];
        }
        WeightSequence::from_mu(format!("descendant({})", self.label), &sigma)
    }
}

fn fit_tail(log_m: &[f64]) -> PowerTail {
    let k_max = log_m.len() - 1;
    let start = (k_max - k_max / 4).max(1);
    let pts: Vec<(f64, f64)> = (start..=k_max).map(|j| ((j as f64).ln(), log_m[j] - log_m[j - 1])).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return PowerTail { c: pts[0].1.exp(), p: 0.0, end: k_max };
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let p = sxy / sxx;
    PowerTail { c: (my - p * mx).exp(), p, end: k_max }
}

fn exhausted(what: &'static str, index: usize) -> Error {
    Error::RangeExhausted { what, index }
}

/// `min_k (table[k] + k ln t)` and its smallest minimising index, for a log table
/// with `table[0] = 0`. The minimum is `ln h(t)` when `table` holds `ln m_k`.
pub fn log_assoc(table: &[f64], t: f64) -> Result<(f64, usize)> {
    if t == 0.0 {
        return Ok((f64::NEG_INFINITY, 0));
    }
    let lt = t.ln();
    let mut best = table[0];
    let mut arg = 0;
    for (k, v) in table.iter().enumerate().skip(1) {
        let val = v + k as f64 * lt;
        if val < best - LOG_TIE * (1.0 + best.abs()) {
            best = val;
            arg = k;
        }
    }
    if arg == table.len() - 1 {
        return Err(exhausted("associated function", arg));
    }
    Ok((best, arg))
}

/// Smallest `k` with `table[k+1] - table[k] >= -ln t`.
pub fn log_gamma_under(table: &[f64], t: f64) -> Result<usize> {
    let target = -t.ln();
    (0..table.len() - 1)
        .find(|&k| table[k + 1] - table[k] >= target - LOG_TIE * (1.0 + target.abs()))
        .ok_or_else(|| exhausted("lower index function", table.len() - 1))
}

/// `h(t) = inf_k v_k t^k` with its smallest minimising index; `h(0) = 0`.
pub fn h_assoc(view: &SequenceView<'_>, t: f64) -> Result<(f64, usize)> {
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("h needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok((0.0, 0));
    }
    let (v, k) = log_assoc(view.log_table(), t)?;
    Ok((v.exp(), k))
}

/// Upper index function: the smallest minimiser of `k -> v_k t^k`.
pub fn gamma_bar(view: &SequenceView<'_>, t: f64) -> Result<usize> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("index function needs t > 0, got {t}")));
    }
    Ok(log_assoc(view.log_table(), t)?.1)
}

/// Lower index function: the smallest `k` with `v_{k+1}/v_k >= 1/t`.
pub fn gamma_under(view: &SequenceView<'_>, t: f64) -> Result<usize> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("index function needs t > 0, got {t}")));
    }
    log_gamma_under(view.log_table(), t)
}

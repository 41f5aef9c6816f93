//! Grids, factorial tables, constant searches and the finite-range
//! divergence test used by every asymptotic verdict.

/// Largest exponent of the geometric constant grid `{2^i : 0 <= i <= 40}`.
pub const CONSTANT_GRID_MAX_EXP: i32 = 40;

/// `2^40`, the cap for searched constants.
pub const C_CAP: f64 = 1_099_511_627_776.0;

/// Relative tie tolerance for log-domain minima.
pub const LOG_TIE: f64 = 1e-12;

/// `ln k!` for `k = 0..=n` by cumulative sums.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

pub fn ln_factorial(k: usize) -> f64 {
    if k < 2 {
        return 0.0;
    }
    if k <= 4096 {
        (2..=k).map(|j| (j as f64).ln()).sum()
    } else {
        statrs::function::gamma::ln_gamma(k as f64 + 1.0)
    }
}

/// Log-spaced grid from `lo` to `hi` inclusive with `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0);
    let a = lo.log10();
    let b = hi.log10();
    let n = ((b - a) * per_decade as f64).round().max(1.0) as usize;
    (0..=n).map(|i| 10f64.powf(a + (b - a) * i as f64 / n as f64)).collect()
}

/// Smallest `2^i` with `0 <= i <= max_exp` that is `>= value`.
pub fn pow2_at_least(value: f64, max_exp: i32) -> Option<f64> {
    if value.is_nan() {
        return None;
    }
    (0..=max_exp).map(|i| 2f64.powi(i)).find(|c| *c >= value)
}

/// Thresholds for certifying "tends to infinity" on a finite range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangePolicy {
    /// A quantity exceeding this value with a monotone last quarter counts as divergent.
    pub threshold: f64,
    /// Minimum of `d ln r / d ln ln x` over the last quarter for divergence.
    pub min_elasticity: f64,
}

impl Default for RangePolicy {
    fn default() -> Self {
        RangePolicy { threshold: 1e6, min_elasticity: 0.3 }
    }
}

/// Outcome of the divergence test on a sampled quantity `r(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub diverging: bool,
    pub monotone_tail: bool,
    pub elasticity: f64,
    /// Largest value before the last quarter.
    pub prior_max: f64,
    /// Value at the start of the last quarter.
    pub tail_start: f64,
    pub last: f64,
    /// Index of the witness sample (the last one).
    pub witness: usize,
}

/// Decide whether `r` sampled at increasing abscissas `x > 1` tends to infinity.
///
/// Divergent means: strictly growing and non-decreasing on the last quarter,
/// and either the last value exceeds the policy threshold or the local growth
/// is at least `(ln x)^min_elasticity`. Early transients are ignored.
pub fn divergence(x: &[f64], r: &[f64], policy: &RangePolicy) -> Divergence {
    let n = r.len();
    assert_eq!(x.len(), n);
    if n < 4 {
        return Divergence {
            diverging: false,
            monotone_tail: false,
            elasticity: 0.0,
            prior_max: f64::NAN,
            tail_start: f64::NAN,
            last: r.last().copied().unwrap_or(f64::NAN),
            witness: n.saturating_sub(1),
        };
    }
    let q = n - n / 4 - 1;
    let monotone_tail = (q..n - 1).all(|i| r[i + 1] >= r[i] - 1e-12 * r[i].abs());
    let prior_max = r[..q].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last = r[n - 1];
    let elasticity = if r[q] > 0.0 && last > 0.0 && x[n - 1] > x[q] && x[n - 1] > 1.0 {
        let slope = (last.ln() - r[q].ln()) / (x[n - 1].ln() - x[q].ln());
        slope * x[n - 1].ln()
    } else {
        0.0
    };
    let grows = elasticity >= policy.min_elasticity || last >= policy.threshold;
    Divergence {
        diverging: monotone_tail && last > r[q] && grows,
        monotone_tail,
        elasticity,
        prior_max,
        tail_start: r[q],
        last,
        witness: n - 1,
    }
}

/// Golden-section maximisation of a unimodal function on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
    }
    let fa = f(a);
    let fb = f(b);
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    if fa > best.1 {
        best = (a, fa);
    }
    if fb > best.1 {
        best = (b, fb);
    }
    best
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_table_matches_products() {
        let t = ln_factorials(10);
        assert!((t[5] - 120f64.ln()).abs() < 1e-14);
        assert!((ln_factorial(10) - 3628800f64.ln()).abs() < 1e-12);
        assert!((ln_factorial(5000) - statrs::function::gamma::ln_gamma(5001.0)).abs() < 1e-8);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-2, 1e3, 4);
        assert_eq!(g.len(), 21);
        assert!((g[0] - 1e-2).abs() < 1e-15);
        assert!((g[20] / 1e3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pow2_search() {
        assert_eq!(pow2_at_least(0.3, 40), Some(1.0));
        assert_eq!(pow2_at_least(5.0, 40), Some(8.0));
        assert_eq!(pow2_at_least(C_CAP * 1.5, 40), None);
    }

    #[test]
    fn divergence_separates_log_from_saturating() {
        let x: Vec<f64> = log_grid(1.0, 1e9, 8);
        let log: Vec<f64> = x.iter().map(|t| (t + 1.0).ln()).collect();
        let sat: Vec<f64> = x.iter().map(|t| 2.0 - 1.0 / t.sqrt()).collect();
        let p = RangePolicy::default();
        assert!(divergence(&x, &log, &p).diverging);
        assert!(!divergence(&x, &sat, &p).diverging);
        let k: Vec<f64> = (1..=128).map(|k| k as f64).collect();
        let lin: Vec<f64> = k.iter().map(|k| k / std::f64::consts::E).collect();
        assert!(divergence(&k, &lin, &p).diverging);
        let one = vec![1.0; 128];
        assert!(!divergence(&k, &one, &p).diverging);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 4.0, 200);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-12);
    }
}

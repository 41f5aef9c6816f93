//! Gauss-Legendre panels, adaptive refinement and semi-infinite integrals
//! with geometrically growing panels plus a fitted power-law tail.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static G10: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static G20: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        10 => G10.get_or_init(|| gauss_legendre(10)),
        20 => G20.get_or_init(|| gauss_legendre(20)),
        _ => panic!("only 10 and 20 point rules are cached"),
    }
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = rule(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

/// Fixed 20-point Gauss-Legendre panel.
pub fn gl20<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    panel(&f, a, b, 20)
}

/// Adaptive bisection comparing the 10- and 20-point rules.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let hi = panel(f, a, b, 20);
        let lo = panel(f, a, b, 10);
        if !hi.is_finite() || (hi - lo).abs() <= tol.max(1e-15 * hi.abs()) || depth >= 40 {
            return hi;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    rec(&f, a, b, tol, 0)
}

/// Why a semi-infinite integral could not be certified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoDecay {
    /// Last fitted decay exponent of the integrand.
    pub exponent: f64,
}

/// `∫_0^∞ g(w) dw` over panels `[0,1], [1,2], [2,4], ...`.
///
/// Stops when a panel adds less than `1e-12` of the running total, or, once
/// `w >= 2^16`, when the integrand decays like `w^{-q}` with `q >= 1.1` (the
/// remaining tail `g(W) W / (q - 1)` is added). Fails at `w = 2^60`.
pub fn semi_infinite<F: Fn(f64) -> f64>(g: F) -> Result<f64, NoDecay> {
    let mut acc = adaptive(&g, 0.0, 1.0, 1e-14);
    let mut lo = 1.0f64;
    let mut q = f64::NAN;
    loop {
        let hi = 2.0 * lo;
        let c = adaptive(&g, lo, hi, 1e-14 * acc.abs().max(1e-300));
        acc += c;
        if c.abs() <= 1e-12 * acc.abs() {
            return Ok(acc);
        }
        let g_lo = g(lo);
        let g_hi = g(hi);
        if g_lo > 0.0 && g_hi > 0.0 {
            q = (g_lo / g_hi).log2();
        }
        if hi >= 65536.0 && q >= 1.1 {
            return Ok(acc + g_hi * hi / (q - 1.0));
        }
        if hi >= 2f64.powi(60) {
            if q > 1.001 {
                return Ok(acc + g_hi * hi / (q - 1.0));
            }
            return Err(NoDecay { exponent: q });
        }
        lo = hi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(20);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((s - 2.0 / 39.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kink() {
        let v = adaptive(|x: f64| x.abs(), -1.0, 2.0, 1e-13);
        assert!((v - 2.5).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_exponential_and_power() {
        let e = semi_infinite(|w: f64| (-w / 2.0).exp()).unwrap();
        assert!((e - 2.0).abs() < 1e-11);
        let p = semi_infinite(|w: f64| 1.0 / ((3.0 + w) * (3.0 + w))).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-8);
        assert!(semi_infinite(|w: f64| 1.0 / (3.0 + w)).is_err());
    }
}

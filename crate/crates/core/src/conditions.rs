//! Finite-range decision procedures for the structural conditions on weights.
//!
//! Every check reduces to a profile `need(x)`: the constant the inequality
//! requires at a sample point. A verdict holds when the profile stays below a
//! power of two `<= 2^40` and does not trend to infinity on the tested range.
//! A failing verdict names the sample point and a constant that is violated
//! there.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::fncore::{WeightFunction, WeightMatrix};
use crate::numeric::{divergence, log_grid, pow2_at_least, RangePolicy, CONSTANT_GRID_MAX_EXP, C_CAP};
use crate::seqcore::{log_assoc, log_gamma_under, ViewKind, WeightSequence};
use crate::{Error, Result};

/// A point where the inequality fails with constant `allowed` (it needs `required`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub at: BTreeMap<String, f64>,
    pub required: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub holds: bool,
    pub witness_constants: BTreeMap<String, f64>,
    pub counterexample: Option<Counterexample>,
    pub range: String,
    pub finite_range: bool,
}

impl Verdict {
    fn new(name: &str, range: String) -> Self {
        Verdict {
            name: name.to_string(),
            holds: true,
            witness_constants: BTreeMap::new(),
            counterexample: None,
            range,
            finite_range: true,
        }
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.witness_constants.get(key).copied()
    }

    fn fail(&mut self, c: Counterexample) {
        self.holds = false;
        self.counterexample = Some(c);
    }
}

/// Outcome of a bounded-profile test.
#[derive(Debug, Clone, PartialEq)]
struct Profile {
    constant: Option<f64>,
    realized: f64,
    /// `(index, required, allowed)` when the profile is not bounded.
    failure: Option<(usize, f64, f64)>,
}

fn grid_constant(v: f64) -> Option<f64> {
    pow2_at_least(v * (1.0 - 1e-12), CONSTANT_GRID_MAX_EXP)
}

fn bounded_profile(xs: &[f64], need: &[f64]) -> Profile {
    let (arg, realized) =
        need.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, v| if v.1 > a.1 { v } else { a });
    let constant = grid_constant(realized);
    let trend = divergence(xs, need, &RangePolicy::default());
    let failure = if trend.diverging {
        Some((trend.witness, trend.last, trend.tail_start))
    } else if constant.is_none() || !realized.is_finite() {
        Some((arg, realized, C_CAP))
    } else {
        None
    };
    Profile { constant: if failure.is_some() { None } else { constant }, realized, failure }
}

fn point(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Sample points `t in [1, 1e9]`, 16 per decade.
pub fn heir_grid() -> Vec<f64> {
    log_grid(1.0, 1e9, 16)
}

/// `kappa_omega(t) <= C sigma(t) + C`.
pub fn check_heir(omega: &WeightFunction, sigma: &WeightFunction) -> Result<Verdict> {
    if !sigma.o_of_t() {
        return Err(Error::NotLittleO);
    }
    let ts = heir_grid();
    let need = ts.iter().map(|&t| Ok(omega.kappa(t)? / (sigma.eval(t) + 1.0))).collect::<Result<Vec<f64>>>()?;
    let mut v = Verdict::new("heir", "t in [1, 1e9], 16 per decade".into());
    let p = bounded_profile(&ts, &need);
    v.witness_constants.insert("realized".into(), p.realized);
    match p.failure {
        None => {
            v.witness_constants.insert("C".into(), p.constant.unwrap());
        }
        Some((i, required, allowed)) => v.fail(Counterexample { at: point(&[("t", ts[i])]), required, allowed }),
    }
    Ok(v)
}

/// `omega` is strong when it is its own heir.
pub fn check_strong(omega: &WeightFunction) -> Result<Verdict> {
    let mut v = check_heir(omega, omega)?;
    v.name = "strong".into();
    Ok(v)
}

fn quotient_over_index(row: &WeightSequence) -> Vec<f64> {
    (0..=row.k_max()).map(|k| if k == 0 { 0.0 } else { row.log_mu(k) - (k as f64).ln() }).collect()
}

/// `max_{j <= k} a_j / b_k` as a profile in `k`, from log tables indexed from 1.
fn prefix_ratio(log_a: &[f64], log_b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = log_a.len().min(log_b.len());
    let mut best = f64::NEG_INFINITY;
    let mut at = 0;
    let mut need = Vec::with_capacity(n - 1);
    let mut arg = Vec::with_capacity(n - 1);
    for k in 1..n {
        if log_a[k] > best {
            best = log_a[k];
            at = k;
        }
        need.push((best - log_b[k]).exp());
        arg.push(at);
    }
    (need, arg)
}

fn index_axis(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64).collect()
}

/// Goodness: for each `x` some `y >= x` and `C` with `theta^x_j/j <= C theta^y_k/k`, `j <= k`.
pub fn check_good(matrix: &WeightMatrix) -> Verdict {
    let mut v = Verdict::new("good", format!("1 <= j <= k <= {}, x in {:?}", matrix.k_max(), matrix.x_grid));
    let tables: Vec<Vec<f64>> = matrix.rows.iter().map(quotient_over_index).collect();
    for (i, x) in matrix.x_grid.iter().enumerate() {
        let mut last_fail = None;
        let mut found = false;
        for (jy, y) in matrix.x_grid.iter().enumerate().skip(i) {
            let (need, arg) = prefix_ratio(&tables[i], &tables[jy]);
            let p = bounded_profile(&index_axis(need.len()), &need);
            match p.failure {
                None => {
                    v.witness_constants.insert(format!("y[{x}]"), *y);
                    v.witness_constants.insert(format!("C[{x}]"), p.constant.unwrap());
                    found = true;
                    break;
                }
                Some((k, required, allowed)) => {
                    last_fail = Some(Counterexample {
                        at: point(&[("x", *x), ("y", *y), ("j", arg[k] as f64), ("k", (k + 1) as f64)]),
                        required,
                        allowed,
                    });
                }
            }
        }
        if !found {
            v.fail(last_fail.unwrap());
            return v;
        }
    }
    v
}

/// Goodness recomputed from secants of `phi*` and compared with [`check_good`].
///
/// `ln theta^x_k = (phi*(x k) - phi*(x k - x))/x`, so the two tests must agree.
pub fn check_good_secant(func: &WeightFunction, matrix: &WeightMatrix) -> Result<Verdict> {
    let k_max = matrix.k_max();
    let mut tables = Vec::new();
    for x in &matrix.x_grid {
        let phi_star = (0..=k_max).map(|k| func.young_conjugate(x * k as f64)).collect::<Result<Vec<f64>>>()?;
        let mut t = vec![0.0];
        for k in 1..=k_max {
            t.push((phi_star[k] - phi_star[k - 1]) / x - (k as f64).ln());
        }
        tables.push(t);
    }
    let rows = tables
        .iter()
        .map(|t| {
            let mut log_m = vec![0.0];
            for k in 1..t.len() {
                log_m.push(log_m[k - 1] + t[k] + (k as f64).ln());
            }
            WeightSequence::from_log_m("secant", log_m)
        })
        .collect::<Result<Vec<_>>>()?;
    let secant = WeightMatrix::from_rows(func.label.clone(), matrix.x_grid.clone(), rows)?;
    let mut v = check_good(&secant);
    v.name = "good_secant".into();
    let direct = check_good(matrix);
    if direct.holds != v.holds {
        return Err(Error::InvariantViolation(format!("goodness and its secant form disagree for {}", func.label)));
    }
    Ok(v)
}

/// `sum_{l >= k} 1/nu_l <= C k / mu_k` for `1 <= k <= K_max`.
pub fn check_mixed_tail(mu_seq: &WeightSequence, nu_seq: &WeightSequence) -> Result<Verdict> {
    let tails = nu_seq.tail_sums()?;
    let k_max = mu_seq.k_max().min(nu_seq.k_max());
    let need: Vec<f64> = (1..=k_max).map(|k| tails[k] * mu_seq.mu(k) / k as f64).collect();
    let mut v = Verdict::new("mixed_tail", format!("1 <= k <= {k_max}"));
    let p = bounded_profile(&index_axis(k_max), &need);
    v.witness_constants.insert("realized".into(), p.realized);
    match p.failure {
        None => {
            v.witness_constants.insert("C".into(), p.constant.unwrap());
        }
        Some((i, required, allowed)) => {
            v.fail(Counterexample { at: point(&[("k", (i + 1) as f64)]), required, allowed })
        }
    }
    Ok(v)
}

/// `mu_k/k` tends to infinity and `mu_j/j <= C mu_k/k` for `j <= k`; also
/// reports the root form `m_j^{1/j} <= C m_k^{1/k}`.
pub fn check_almost_increasing(seq: &WeightSequence) -> Verdict {
    let k_max = seq.k_max();
    let mut v = Verdict::new("almost_increasing", format!("1 <= j <= k <= {k_max}"));
    let a = quotient_over_index(seq);
    let (need, arg) = prefix_ratio(&a, &a);
    let realized = need.iter().copied().fold(1.0, f64::max);
    v.witness_constants.insert("C_realized".into(), realized);
    let small = seq.view(ViewKind::Small);
    let roots: Vec<f64> = (0..=k_max).map(|k| if k == 0 { 0.0 } else { small.log_value(k) / k as f64 }).collect();
    let (root_need, _) = prefix_ratio(&roots, &roots);
    v.witness_constants.insert("C_root_realized".into(), root_need.iter().copied().fold(1.0, f64::max));
    // lower envelope min_{j >= k} mu_j/j has to diverge
    let mut envelope: Vec<f64> = a[1..].iter().map(|x| x.exp()).collect();
    for k in (0..envelope.len() - 1).rev() {
        envelope[k] = envelope[k].min(envelope[k + 1]);
    }
    let ks = index_axis(k_max);
    let trend = divergence(&ks, &envelope, &RangePolicy::default());
    match grid_constant(realized) {
        Some(c) if trend.diverging => {
            v.witness_constants.insert("C".into(), c);
        }
        Some(_) => {
            v.fail(Counterexample { at: point(&[("k", k_max as f64)]), required: f64::INFINITY, allowed: trend.last })
        }
        None => {
            let k = need.iter().enumerate().fold((0, 0.0), |b, (i, x)| if *x > b.1 { (i, *x) } else { b }).0;
            v.fail(Counterexample {
                at: point(&[("j", arg[k] as f64), ("k", (k + 1) as f64)]),
                required: need[k],
                allowed: C_CAP,
            });
        }
    }
    v
}

/// `mu_k <= C M_k^{1/k}`.
pub fn check_moderate_growth(seq: &WeightSequence) -> Verdict {
    let k_max = seq.k_max();
    let need: Vec<f64> = (1..=k_max).map(|k| (seq.log_mu(k) - seq.log_root(k)).exp()).collect();
    let mut v = Verdict::new("moderate_growth", format!("1 <= k <= {k_max}"));
    let p = bounded_profile(&index_axis(k_max), &need);
    v.witness_constants.insert("realized".into(), p.realized);
    match p.failure {
        None => {
            v.witness_constants.insert("C".into(), p.constant.unwrap());
        }
        Some((i, required, allowed)) => {
            v.fail(Counterexample { at: point(&[("k", (i + 1) as f64)]), required, allowed })
        }
    }
    v
}

/// Smallest `H` with `2 omega(t) <= omega(H t) + H` at one `t`, by bisection in `ln H`.
fn doubling_need(func: &WeightFunction, t: f64) -> f64 {
    let ok = |h: f64| 2.0 * func.eval(t) <= func.eval(h * t) + h;
    if ok(1.0) {
        return 1.0;
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while !ok(hi.exp()) {
        lo = hi;
        hi *= 2.0;
        if hi > 200.0 {
            return f64::INFINITY;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.exp()
}

/// `2 omega(t) <= omega(H t) + H` on `t in [1, 1e9]`.
pub fn check_dilation_doubling(func: &WeightFunction) -> Verdict {
    let ts = heir_grid();
    let need: Vec<f64> = ts.iter().map(|&t| doubling_need(func, t)).collect();
    let mut v = Verdict::new("dilation_doubling", "t in [1, 1e9], 16 per decade".into());
    let p = bounded_profile(&ts, &need);
    v.witness_constants.insert("realized".into(), p.realized);
    match p.failure {
        None => {
            v.witness_constants.insert("H".into(), p.constant.unwrap());
        }
        Some((i, required, allowed)) => v.fail(Counterexample { at: point(&[("t", ts[i])]), required, allowed }),
    }
    v
}

/// `theta^x_k <= C (W^y_k)^{1/k}` for each `x` with some `y >= x`.
pub fn check_theta_below_root(matrix: &WeightMatrix) -> Verdict {
    let k_max = matrix.k_max();
    let mut v = Verdict::new("theta_below_root", format!("1 <= k <= {k_max}, x in {:?}", matrix.x_grid));
    let ks = index_axis(k_max);
    for (i, x) in matrix.x_grid.iter().enumerate() {
        let mut last_fail = None;
        let mut found = false;
        for (jy, y) in matrix.x_grid.iter().enumerate().skip(i) {
            let need: Vec<f64> =
                (1..=k_max).map(|k| (matrix.rows[i].log_mu(k) - matrix.rows[jy].log_root(k)).exp()).collect();
            let p = bounded_profile(&ks, &need);
            match p.failure {
                None => {
                    v.witness_constants.insert(format!("y[{x}]"), *y);
                    v.witness_constants.insert(format!("C[{x}]"), p.constant.unwrap());
                    found = true;
                    break;
                }
                Some((k, required, allowed)) => {
                    last_fail = Some(Counterexample {
                        at: point(&[("x", *x), ("y", *y), ("k", (k + 1) as f64)]),
                        required,
                        allowed,
                    })
                }
            }
        }
        if !found {
            v.fail(last_fail.unwrap());
            return v;
        }
    }
    v
}

/// Both forms of the concave-majorant criterion, evaluated side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityReport {
    /// `omega(lambda t) <= C lambda omega(t)` for `lambda = 2^i`, `t >= 10`.
    pub scaling: Verdict,
    /// `(w^x_j)^{1/j} <= D (w^y_k)^{1/k}` for `j <= k`.
    pub roots: Verdict,
    pub consistent: bool,
}

pub fn check_concavity(func: &WeightFunction, matrix: &WeightMatrix) -> ConcavityReport {
    let ts = log_grid(10.0, 1e9, 16);
    let need: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let base = func.eval(t);
            (0..=30)
                .map(|i| {
                    let l = 2f64.powi(i);
                    func.eval(l * t) / (l * base)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let mut scaling = Verdict::new("concave_scaling", "t in [10, 1e9], lambda = 2^0..2^30".into());
    let p = bounded_profile(&ts, &need);
    scaling.witness_constants.insert("realized".into(), p.realized);
    match p.failure {
        None => {
            scaling.witness_constants.insert("C".into(), p.constant.unwrap());
        }
        Some((i, required, allowed)) => scaling.fail(Counterexample { at: point(&[("t", ts[i])]), required, allowed }),
    }

    let k_max = matrix.k_max();
    let mut roots = Verdict::new("concave_roots", format!("1 <= j <= k <= {k_max}, x in {:?}", matrix.x_grid));
    let tables: Vec<Vec<f64>> = matrix
        .rows
        .iter()
        .map(|r| {
            let small = r.view(ViewKind::Small);
            (0..=k_max).map(|k| if k == 0 { 0.0 } else { small.log_value(k) / k as f64 }).collect()
        })
        .collect();
    'outer: for (i, x) in matrix.x_grid.iter().enumerate() {
        let mut last_fail = None;
        for (jy, y) in matrix.x_grid.iter().enumerate().skip(i) {
            let (need, arg) = prefix_ratio(&tables[i], &tables[jy]);
            let p = bounded_profile(&index_axis(need.len()), &need);
            match p.failure {
                None => {
                    roots.witness_constants.insert(format!("y[{x}]"), *y);
                    roots.witness_constants.insert(format!("D[{x}]"), p.constant.unwrap());
                    continue 'outer;
                }
                Some((k, required, allowed)) => {
                    last_fail = Some(Counterexample {
                        at: point(&[("x", *x), ("y", *y), ("j", arg[k] as f64), ("k", (k + 1) as f64)]),
                        required,
                        allowed,
                    })
                }
            }
        }
        roots.fail(last_fail.unwrap());
        break;
    }
    let consistent = scaling.holds == roots.holds;
    ConcavityReport { scaling, roots, consistent }
}

/// Both quantifier forms of `sum_{l >= k} 1/theta^y_l <= C k / theta^x_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongMatrixReport {
    /// For every `x` some `y`.
    pub for_all: Verdict,
    /// Some pair `(x, y)`.
    pub exists: Verdict,
}

pub fn check_strong_matrix(matrix: &WeightMatrix) -> Result<StrongMatrixReport> {
    let mut for_all =
        Verdict::new("strong_matrix_forall", format!("1 <= k <= {}, x in {:?}", matrix.k_max(), matrix.x_grid));
    let mut exists = Verdict::new("strong_matrix_exists", for_all.range.clone());
    let mut any = None;
    let mut first_fail = None;
    for (i, x) in matrix.x_grid.iter().enumerate() {
        let mut ok = None;
        let mut fail = None;
        // the left side shrinks as y grows, so y >= x loses nothing
        for (jy, y) in matrix.x_grid.iter().enumerate().skip(i) {
            let v = check_mixed_tail(&matrix.rows[i], &matrix.rows[jy])?;
            if v.holds {
                ok = Some((*y, v.constant("C").unwrap()));
                break;
            }
            let mut c = v.counterexample.unwrap();
            c.at.insert("x".into(), *x);
            c.at.insert("y".into(), *y);
            fail = Some(c);
        }
        match ok {
            Some((y, c)) => {
                for_all.witness_constants.insert(format!("y[{x}]"), y);
                for_all.witness_constants.insert(format!("C[{x}]"), c);
                if any.is_none() {
                    any = Some((*x, y, c));
                }
            }
            None => {
                if first_fail.is_none() {
                    first_fail = fail;
                }
            }
        }
    }
    if let Some(c) = first_fail.clone() {
        for_all.fail(c);
    }
    match any {
        Some((x, y, c)) => {
            exists.witness_constants.insert("x".into(), x);
            exists.witness_constants.insert("y".into(), y);
            exists.witness_constants.insert("C".into(), c);
        }
        None => exists.fail(first_fail.unwrap()),
    }
    Ok(StrongMatrixReport { for_all, exists })
}

/// Parameters making the four-step index chain hold on a `t`-grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainCertificate {
    pub x: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub d: f64,
    pub t_range: (f64, f64),
    pub per_decade: usize,
}

/// Log tables of the `m`-views (`w^x_k = W^x_k / k!`) of a list of rows.
fn small_tables(rows: &[&WeightSequence]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.view(ViewKind::Small).log_table().to_vec()).collect()
}

/// `t` range on which the chain is tested: the lower index of `w^x` runs from `K/2` to 0.
fn chain_range(base: &[f64]) -> (f64, f64) {
    let half = (base.len() - 1) / 2;
    let lo = (base[half] - base[half + 1]).exp();
    let hi = 4.0 * (-base[1]).exp().max(1.0);
    (lo, hi.max(4.0 * lo))
}

/// Whether the chain `Gbar_3(D^3 t) <= Gund_2(D^2 t) <= Gbar_2(D^2 t) <= Gund_1(D t) <= Gund_x(t)/2`
/// holds at every `t`.
fn chain_holds(base: &[f64], r1: &[f64], r2: &[f64], r3: &[f64], d: f64, ts: &[f64]) -> bool {
    ts.iter().all(|&t| {
        let step = || -> Result<bool> {
            let g0 = log_gamma_under(base, t)? as f64;
            let g1 = log_gamma_under(r1, d * t)? as f64;
            let g2b = log_assoc(r2, d * d * t)?.1 as f64;
            let g2u = log_gamma_under(r2, d * d * t)? as f64;
            let g3 = log_assoc(r3, d * d * d * t)?.1 as f64;
            Ok(g3 <= g2u && g2u <= g2b && g2b <= g1 && g1 <= g0 / 2.0)
        };
        step().unwrap_or(false)
    })
}

/// `w^a_{j+k} <= w^b_j w^b_k` for `j + k <= K`.
fn submultiplicative(a: &[f64], b: &[f64]) -> bool {
    let n = a.len().min(b.len());
    (0..n).all(|j| (0..n - j).all(|k| a[j + k] <= b[j] + b[k] + 1e-9 * (1.0 + a[j + k].abs())))
}

/// `matrix_mode` enforces `y1 >= 2x`, `y2 >= 2 y1` and the product supplement.
fn chain_search(x: f64, base: &[f64], candidates: &[(f64, Vec<f64>)], matrix_mode: bool) -> Result<ChainCertificate> {
    let (lo, hi) = chain_range(base);
    let per_decade = 16;
    let ts = log_grid(lo, hi, per_decade);
    let fine = log_grid(lo, hi, 10 * per_decade);
    for (i1, (y1, r1)) in candidates.iter().enumerate() {
        if matrix_mode && *y1 < 2.0 * x {
            continue;
        }
        if matrix_mode && !submultiplicative(base, r1) {
            continue;
        }
        for (i2, (y2, r2)) in candidates.iter().enumerate().skip(i1) {
            if matrix_mode && *y2 < 2.0 * y1 {
                continue;
            }
            if matrix_mode && !submultiplicative(r1, r2) {
                continue;
            }
            for (y3, r3) in candidates.iter().skip(i2) {
                for i in 0..=CONSTANT_GRID_MAX_EXP {
                    let d = 2f64.powi(i);
                    if chain_holds(base, r1, r2, r3, d, &ts) && chain_holds(base, r1, r2, r3, d, &fine) {
                        return Ok(ChainCertificate { x, y1: *y1, y2: *y2, y3: *y3, d, t_range: (lo, hi), per_decade });
                    }
                }
            }
        }
    }
    Err(Error::RangeExhausted { what: "index chain", index: base.len() - 1 })
}

/// Smallest in-grid `(y1 >= 2x, y2 >= 2 y1, y3 >= y2, D = 2^i)` for the index chain.
pub fn resolve_chain(matrix: &WeightMatrix, x: f64) -> Result<ChainCertificate> {
    let i = matrix.index_of(x).ok_or_else(|| Error::InvalidInput(format!("x = {x} is not in the grid")))?;
    let rows: Vec<&WeightSequence> = matrix.rows.iter().collect();
    let tables = small_tables(&rows);
    let candidates: Vec<(f64, Vec<f64>)> = matrix.x_grid.iter().copied().zip(tables.iter().cloned()).collect();
    chain_search(x, &tables[i], &candidates, true)
}

/// The chain with every row equal to one sequence; only `D` is searched.
pub fn resolve_chain_single(seq: &WeightSequence) -> Result<ChainCertificate> {
    let table = small_tables(&[seq]).remove(0);
    chain_search(1.0, &table, &[(1.0, table.clone())], false)
}

/// Replays a certificate on a `t`-grid of the given density.
pub fn verify_chain(matrix: &WeightMatrix, cert: &ChainCertificate, per_decade: usize) -> bool {
    let row = |y: f64| matrix.row(y).map(|r| r.view(ViewKind::Small).log_table().to_vec());
    let (Some(b), Some(r1), Some(r2), Some(r3)) = (row(cert.x), row(cert.y1), row(cert.y2), row(cert.y3)) else {
        return false;
    };
    let ts = log_grid(cert.t_range.0, cert.t_range.1, per_decade);
    chain_holds(&b, &r1, &r2, &r3, cert.d, &ts)
}

#![allow(dead_code)]

use std::sync::Arc;

use ultrajet::extend::{extend, extend_verified, schedule, DegreeSource, ExtensionField, VerifyConfig, VerifyReport};
use ultrajet::geometry::{decompose, CubeDecomposition};
use ultrajet::jets::{CompactSet, JetPreset, Ultrajet};
use ultrajet::pou::{build_pou, PartitionOfUnity};
use ultrajet::seqcore::WeightSequence;

pub const RHO: f64 = 1.0 / 128.0;
pub const GUARD: f64 = 64.0;
pub const A_MAX: usize = 8192;
pub const DEPTH: u32 = 18;
pub const ORDER_CAP: usize = 8;

pub fn pair() -> CompactSet {
    CompactSet::new(vec![vec![-1.0], vec![1.0]]).unwrap()
}

/// `S_k = k!^2`, long enough for degrees up to `A_MAX`.
pub fn gevrey2() -> WeightSequence {
    WeightSequence::gevrey(1.0, A_MAX / 2 + 8).unwrap()
}

pub fn bump_seq() -> WeightSequence {
    WeightSequence::gevrey(0.05, 64).unwrap()
}

pub fn pair_pou(depth: u32, order_cap: usize) -> (Arc<CubeDecomposition>, Arc<PartitionOfUnity>) {
    let dec = Arc::new(decompose(&[-2.0], 4.0, &pair(), depth).unwrap());
    let pou = Arc::new(build_pou(dec.clone(), &bump_seq(), None, order_cap).unwrap());
    (dec, pou)
}

/// sin on `{-1, 1}` in `[-2, 2]`, extended with `L = GUARD * RHO`.
pub fn sin_fixture(cfg: &VerifyConfig) -> (ExtensionField, VerifyReport) {
    let (_, pou) = pair_pou(DEPTH, ORDER_CAP);
    let s = gevrey2();
    let jet = Ultrajet::from_preset(&JetPreset::sin(1.0, 0.0), pair(), A_MAX).unwrap();
    let cert = jet.certify(&s, RHO, 40).unwrap();
    let jet = Arc::new(jet.with_certificate(cert).unwrap());
    extend_verified(jet, pou, &DegreeSource::Single(s.clone()), RHO, GUARD, &s, cfg).unwrap()
}

pub fn poly_field(coeffs: &[f64], depth: u32) -> ExtensionField {
    let (dec, pou) = pair_pou(depth, 4);
    let jet = Arc::new(Ultrajet::from_preset(&JetPreset::poly(coeffs), pair(), 64).unwrap());
    let sched = Arc::new(schedule(&dec, &DegreeSource::Single(gevrey2()), GUARD * RHO, 64).unwrap());
    extend(jet, pou, sched).unwrap()
}

pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `min_k k! t^k` by direct enumeration.
pub fn h_factorial(t: f64) -> f64 {
    let mut best = 1.0f64;
    let mut term = 1.0f64;
    for k in 1..100_000 {
        term *= k as f64 * t;
        best = best.min(term);
        if term > 1.0 && k as f64 * t > 1.0 {
            break;
        }
    }
    best
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp()).collect()
}

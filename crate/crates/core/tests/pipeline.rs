mod common;

use std::sync::Arc;

use common::*;
use ultrajet::conditions::resolve_chain;
use ultrajet::extend::{extend, growth_certificate, schedule, verify, DegreeSource, ScheduleMode, VerifyConfig};
use ultrajet::fncore::{default_x_grid, WeightFunction};
use ultrajet::geometry::decompose;
use ultrajet::jets::{CompactSet, JetPreset, Ultrajet};
use ultrajet::pou::build_pou;
use ultrajet::Error;

fn small_cfg() -> VerifyConfig {
    VerifyConfig {
        approach_scales: (3..=7).map(|i| 2f64.powi(-i)).collect(),
        samples_per_scale: 16,
        growth_grid: 401,
        fd_points: 20,
        growth_orders: 4,
        ..VerifyConfig::default()
    }
}

#[test]
fn zero_jet_has_zero_residuals() {
    let f = poly_field(&[0.0], 12);
    let zero = Arc::new(Ultrajet::zero(pair(), 64));
    let f = extend(zero, f.pou.clone(), f.schedule.clone()).unwrap();
    let r = verify(&f, &gevrey2(), &small_cfg()).unwrap();
    assert!(!r.residuals.is_empty());
    assert!(r.residuals.iter().all(|row| row.residual == 0.0));
    assert_eq!(r.fd.worst_relative, 0.0);
}

#[test]
fn polynomial_growth_matches_its_own_sups() {
    // 0.5 - x + 2x^2 on [-2, 2]: sup |f| = 10.5, sup |f'| = 9, f'' = 4
    let f = poly_field(&[0.5, -1.0, 2.0], 14);
    let g = growth_certificate(&f, &gevrey2(), 2, 4001).unwrap().unwrap();
    let exact = [10.5, 9.0, 4.0];
    for (row, e) in g.rows.iter().zip(exact) {
        assert!((row.sup - e).abs() < 1e-9 * e, "order {}: {} vs {e}", row.order, row.sup);
    }
}

#[test]
fn planar_polynomial_is_reproduced() {
    let e = CompactSet::new(vec![vec![0.0, 0.0]]).unwrap();
    let dec = Arc::new(decompose(&[-1.0, -1.0], 2.0, &e, 7).unwrap());
    let pou = Arc::new(build_pou(dec.clone(), &bump_seq(), None, 3).unwrap());
    // exact jet of 1 + x - 2xy + y^2 at the origin
    let mut vals = vec![0.0; ultrajet::jets::index_count(2, 20)];
    vals[0] = 1.0;
    vals[ultrajet::jets::index_position(&[1, 0])] = 1.0;
    vals[ultrajet::jets::index_position(&[1, 1])] = -2.0;
    vals[ultrajet::jets::index_position(&[0, 2])] = 2.0;
    let jet = Arc::new(Ultrajet::from_values(e, 20, vec![vals]).unwrap());
    let sched = Arc::new(schedule(&dec, &DegreeSource::Single(gevrey2()), 0.5, 20).unwrap());
    let f = extend(jet, pou.clone(), sched).unwrap();
    let mut worst = 0.0f64;
    for a in 0..40 {
        for b in 0..40 {
            let x = [-1.0 + 2.0 * (a as f64 + 0.5) / 40.0, -1.0 + 2.0 * (b as f64 + 0.5) / 40.0];
            if !pou.covered(&x) {
                continue;
            }
            let exact = 1.0 + x[0] - 2.0 * x[0] * x[1] + x[1] * x[1];
            worst = worst.max((f.value(&x).unwrap() - exact).abs());
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn matrix_mode_schedule_uses_chain_rows() {
    let m = WeightFunction::power(0.5).unwrap().weight_matrix(&default_x_grid(), 128).unwrap();
    let chain = resolve_chain(&m, 1.0).unwrap();
    let (dec, pou) = pair_pou(10, 4);
    let source = DegreeSource::Matrix { matrix: m.clone(), chain: chain.clone() };
    let sched = schedule(&dec, &source, 1.0, 200).unwrap();
    assert!(matches!(sched.mode, ScheduleMode::Matrix { .. }));
    assert_eq!(sched.degree_seq.label, m.row(chain.y2).unwrap().label);
    assert_eq!(sched.shape_seq.label, m.row(chain.y3).unwrap().label);
    let jet = Arc::new(Ultrajet::from_preset(&JetPreset::sin(1.0, 0.0), pair(), 200).unwrap());
    let f = extend(jet, pou, Arc::new(sched)).unwrap();
    let near = 1.0 + 1e-2;
    assert!(f.pou.covered(&[near]));
    assert!((f.value(&[near]).unwrap() - near.sin()).abs() < 1e-9);
}

#[test]
fn flat_extension_does_not_verify() {
    // with a huge L every degree is 0, so f is locally constant near E
    let m = WeightFunction::power(0.5).unwrap().weight_matrix(&default_x_grid(), 128).unwrap();
    let chain = resolve_chain(&m, 1.0).unwrap();
    let (dec, pou) = pair_pou(10, 4);
    let target = m.row(chain.y3).unwrap().clone();
    let source = DegreeSource::Matrix { matrix: m, chain };
    let sched = schedule(&dec, &source, 512.0, 200).unwrap();
    assert!(sched.degrees.iter().all(|p| *p == 0));
    let jet = Arc::new(Ultrajet::from_preset(&JetPreset::sin(1.0, 0.0), pair(), 200).unwrap());
    let f = extend(jet, pou, Arc::new(sched)).unwrap();
    let r = verify(&f, &target, &small_cfg()).unwrap();
    let slope = r.fits.iter().find(|fit| fit.alpha == vec![1]).unwrap();
    assert!(slope.monotone && !slope.decays);
    assert!(!r.passed);
}

#[test]
fn single_mode_needs_moderate_growth() {
    let (dec, _) = pair_pou(8, 4);
    let log_m: Vec<f64> = (0..=64).map(|k: usize| (k * k) as f64 * 0.5).collect();
    let fast = ultrajet::seqcore::WeightSequence::from_log_m("exp(k^2/2)", log_m).unwrap();
    let err = schedule(&dec, &DegreeSource::Single(fast), 1.0, 64).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let f = poly_field(&[0.0, 1.0, 0.0, -0.5], 12);
            let r = verify(&f, &gevrey2(), &small_cfg()).unwrap();
            serde_json::to_string(&r).unwrap()
        })
    };
    assert_eq!(run(1), run(4));
}

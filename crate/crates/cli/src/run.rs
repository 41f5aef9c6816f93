//! Stage pipelines behind each subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;
use ultrajet::conditions::{
    check_almost_increasing, check_dilation_doubling, check_good, check_heir, check_moderate_growth, check_strong,
    check_strong_matrix, check_theta_below_root, resolve_chain, verify_chain, ChainCertificate,
};
use ultrajet::extend::{
    box_grid, extend, extend_verified, schedule, Cutoff, DegreeSource, ExtensionField, VerifyConfig,
};
use ultrajet::fncore::{WeightFunction, WeightMatrix};
use ultrajet::geometry::{cube_diagnostics, decompose, decompose_with, CubeDecomposition};
use ultrajet::jets::{multi_indices, Ultrajet};
use ultrajet::pou::{build_pou, PartitionOfUnity};
use ultrajet::seqcore::WeightSequence;

use crate::config::{ExperimentConfig, Mode};
use crate::report::{fmt_f64, to_value, write_csv, Report, ResidualTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Seq,
    Fn,
    Matrix,
    Check,
    Cubes,
    Pou,
    Extend,
    Verify,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Seq => "seq",
            Command::Fn => "fn",
            Command::Matrix => "matrix",
            Command::Check => "check",
            Command::Cubes => "cubes",
            Command::Pou => "pou",
            Command::Extend => "extend",
            Command::Verify => "verify",
            Command::All => "all",
        }
    }

    fn stages(self) -> Vec<Command> {
        use Command::*;
        match self {
            All => vec![Seq, Fn, Matrix, Check, Cubes, Pou, Extend, Verify],
            c => vec![c],
        }
    }
}

/// A stage failed outright; the message becomes an error entry.
struct StageError {
    kind: String,
    message: String,
}

impl From<ultrajet::Error> for StageError {
    fn from(e: ultrajet::Error) -> Self {
        StageError { kind: error_kind(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for StageError {
    fn from(e: std::io::Error) -> Self {
        StageError { kind: "io".into(), message: e.to_string() }
    }
}

/// Snake-case variant name of a library error.
fn error_kind(e: &ultrajet::Error) -> String {
    let debug = format!("{e:?}");
    let name: String = debug.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

type StageResult = Result<(), StageError>;

pub struct Runner {
    cfg: ExperimentConfig,
    out: PathBuf,
    strict: bool,
    report: Report,
    dec: Option<Arc<CubeDecomposition>>,
    pou: Option<Arc<PartitionOfUnity>>,
}

impl Runner {
    pub fn new(command: Command, cfg: ExperimentConfig, out: PathBuf, strict: bool) -> Self {
        let report = Report::new(command.name(), to_value(&cfg));
        Runner { cfg, out, strict, report, dec: None, pou: None }
    }

    /// Runs every stage of `command`, writes the report and returns it.
    pub fn run(mut self, command: Command) -> std::io::Result<Report> {
        std::fs::create_dir_all(&self.out)?;
        for stage in command.stages() {
            let r = match stage {
                Command::Seq => self.seq(),
                Command::Fn => self.func(),
                Command::Matrix => self.matrix(),
                Command::Check => self.check(),
                Command::Cubes => self.cubes(),
                Command::Pou => self.pou_stage(),
                Command::Extend => self.extend_stage(),
                Command::Verify => self.verify_stage(),
                Command::All => unreachable!(),
            };
            if let Err(e) = r {
                self.report.error(stage.name(), &e.kind, e.message);
            }
        }
        self.report.finish(self.strict);
        crate::report::write_json(&self.out.join("report.json"), &self.report)?;
        Ok(self.report)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> StageResult {
        write_csv(&self.out.join(name), header, rows)?;
        self.report.artifacts.push(name.to_string());
        Ok(())
    }

    fn sequence(&self) -> Result<WeightSequence, StageError> {
        Ok(self.cfg.sequence.build()?)
    }

    fn weight(&self) -> Result<WeightFunction, StageError> {
        Ok(self.cfg.weight.build()?)
    }

    fn sigma(&self) -> Result<WeightFunction, StageError> {
        Ok(self.cfg.sigma.as_ref().unwrap_or(&self.cfg.weight).build()?)
    }

    fn weight_matrix(&self) -> Result<WeightMatrix, StageError> {
        Ok(self.weight()?.weight_matrix(&self.cfg.matrix.x_grid, self.cfg.matrix.k_max)?)
    }

    fn seq(&mut self) -> StageResult {
        let s = self.sequence()?;
        let flags = s.flags();
        self.report.verdict("seq", "weight_sequence", flags.weight_sequence, true, flags);
        let v = check_almost_increasing(&s);
        self.report.verdict("seq", &v.name.clone(), v.holds, false, v);
        let v = check_moderate_growth(&s);
        self.report.verdict("seq", &v.name.clone(), v.holds, false, v);
        self.report.certificate("seq", "power_tail", s.tail());
        if flags.non_quasianalytic {
            self.report.certificate("seq", "tail_remainder", s.tail_remainder());
            match s.descendant() {
                Ok(d) => {
                    let f = d.flags();
                    self.report.verdict("seq", "descendant_strongly_log_convex", f.strongly_log_convex, false, f);
                }
                Err(e) => self.report.warn(format!("descendant: {e}")),
            }
            if self.cfg.sequence.fitted_tail() {
                self.report.warn(format!(
                    "non-quasianalyticity of {} rests on a fitted power tail past k = {}",
                    s.label,
                    s.k_max()
                ));
            }
        }
        let rows: Vec<Vec<String>> = (0..=s.k_max())
            .map(|k| vec![k.to_string(), fmt_f64(s.log_m()[k]), fmt_f64(s.mu(k)), fmt_f64(s.log_root(k))])
            .collect();
        self.csv("seq.csv", &["k", "ln_M", "mu", "ln_root"], &rows)?;
        let mut rows = Vec::new();
        // both need an index strictly inside the table
        for t in log_spaced(1.0, 0.5 * s.mu(s.k_max()), 8) {
            rows.push(vec![fmt_f64(t), fmt_f64(s.omega_assoc(t)?), s.counting(t)?.to_string()]);
        }
        self.csv("seq_omega.csv", &["t", "omega_M", "counting"], &rows)
    }

    fn func(&mut self) -> StageResult {
        let w = self.weight()?;
        let f = w.flags();
        let axioms = f.increasing && f.doubling_constant.is_some() && f.beats_log && f.convex_phi;
        self.report.verdict("fn", "weight_function", axioms, true, &f);
        let v = check_dilation_doubling(&w);
        self.report.verdict("fn", &v.name.clone(), v.holds, false, v);
        let mut rows = Vec::new();
        for t in log_spaced(1.0, 1e6, 8) {
            let kappa = if f.non_quasianalytic { w.kappa(t).ok() } else { None };
            rows.push(vec![fmt_f64(t), fmt_f64(w.eval(t)), opt(kappa)]);
        }
        self.csv("fn_curves.csv", &["t", "omega", "kappa"], &rows)?;
        let mut rows = Vec::new();
        for s in log_spaced(1e-3, 1e3, 8) {
            let star = if f.o_of_t { w.omega_conjugate(s).ok() } else { None };
            rows.push(vec![fmt_f64(s), opt(w.young_conjugate(s).ok()), opt(star)]);
        }
        self.csv("fn_conjugates.csv", &["s", "phi_star", "omega_star"], &rows)
    }

    fn matrix(&mut self) -> StageResult {
        let m = self.weight_matrix()?;
        let v = check_good(&m);
        self.report.verdict("matrix", &v.name.clone(), v.holds, true, v);
        let v = check_theta_below_root(&m);
        self.report.verdict("matrix", &v.name.clone(), v.holds, false, v);
        let strong = check_strong_matrix(&m)?;
        self.report.verdict("matrix", &strong.for_all.name.clone(), strong.for_all.holds, false, &strong.for_all);
        self.report.verdict("matrix", &strong.exists.name.clone(), strong.exists.holds, false, &strong.exists);
        match resolve_chain(&m, self.cfg.matrix.x) {
            Ok(chain) => {
                let ok = verify_chain(&m, &chain, 10 * chain.per_decade);
                self.report.verdict("matrix", "index_chain", ok, false, &chain);
            }
            Err(e) => self.report.verdict("matrix", "index_chain", false, false, e.to_string()),
        }
        let mut header = vec!["k".to_string()];
        header.extend(m.x_grid.iter().map(|x| format!("ln_W_{}", fmt_f64(*x))));
        let rows: Vec<Vec<String>> = (0..=m.k_max())
            .map(|k| {
                let mut r = vec![k.to_string()];
                r.extend(m.rows.iter().map(|row| fmt_f64(row.log_m()[k])));
                r
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        self.csv("matrix.csv", &header, &rows)
    }

    fn check(&mut self) -> StageResult {
        let w = self.weight()?;
        let sigma = self.sigma()?;
        let v = check_heir(&w, &sigma)?;
        self.report.verdict("check", "heir", v.holds, true, v);
        let v = check_strong(&w)?;
        self.report.verdict("check", "strong", v.holds, false, v);
        Ok(())
    }

    fn decomposition(&mut self) -> Result<Arc<CubeDecomposition>, StageError> {
        if let Some(d) = &self.dec {
            return Ok(d.clone());
        }
        let set = self.cfg.set.build()?;
        let c = &self.cfg.cubes;
        let dec = match c.min_feature {
            Some(f) => decompose_with(&c.box_lo, c.box_side, &set, c.depth, f)?,
            None => decompose(&c.box_lo, c.box_side, &set, c.depth)?,
        };
        let dec = Arc::new(dec);
        self.dec = Some(dec.clone());
        Ok(dec)
    }

    fn cubes(&mut self) -> StageResult {
        let dec = self.decomposition()?;
        let inv = dec.check_invariants();
        self.report.verdict("cubes", "invariants", inv.is_ok(), true, inv.err().map(|e| e.to_string()));
        match cube_diagnostics(&dec, self.cfg.cubes.samples_per_cube, self.cfg.seed) {
            Ok(d) => {
                let worst = d.worst();
                self.report.verdict("cubes", "distance_inequalities", worst <= 1.0, true, &d);
            }
            Err(e) => self.report.verdict("cubes", "distance_inequalities", false, true, e.to_string()),
        }
        let mut levels = BTreeMap::new();
        for c in &dec.cubes {
            *levels.entry(c.level).or_insert(0usize) += 1;
        }
        self.report.cube_stats = Some(json!({
            "cubes": dec.len(),
            "collar_cells": dec.collar.len(),
            "collar_radius": dec.collar_radius,
            "max_overlap": dec.max_overlap(),
            "neighbour_diam_ratio": [dec.b1, dec.big_b1],
            "cubes_per_level": levels,
            "fingerprint": dec.fingerprint.to_string(),
        }));
        let mut header = vec!["cube", "level", "side"];
        header.extend(["center_0", "center_1"].iter().take(dec.dim));
        header.extend(["center_dist", "cube_dist", "nearest"]);
        let rows: Vec<Vec<String>> = dec
            .cubes
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut r = vec![i.to_string(), c.level.to_string(), fmt_f64(c.side)];
                r.extend(c.center.iter().map(|v| fmt_f64(*v)));
                r.extend([fmt_f64(c.center_dist), fmt_f64(c.cube_dist), c.nearest.to_string()]);
                r
            })
            .collect();
        self.csv("cubes.csv", &header, &rows)
    }

    fn partition(&mut self) -> Result<Arc<PartitionOfUnity>, StageError> {
        if let Some(p) = &self.pou {
            return Ok(p.clone());
        }
        let dec = self.decomposition()?;
        let p = &self.cfg.pou;
        let pou = Arc::new(build_pou(dec, &self.bump_sequence()?, p.delta, p.order_cap)?);
        self.pou = Some(pou.clone());
        Ok(pou)
    }

    fn bump_sequence(&self) -> Result<WeightSequence, StageError> {
        Ok(WeightSequence::gevrey(self.cfg.pou.bump_s, 64)?)
    }

    fn per_axis(&self, total: usize) -> usize {
        let dim = self.cfg.cubes.box_lo.len();
        let n = if dim == 1 { total } else { (total as f64).sqrt().ceil() as usize };
        n.max(2)
    }

    fn pou_stage(&mut self) -> StageResult {
        let pou = self.partition()?;
        let pts = box_grid(&pou.dec, self.per_axis(self.cfg.pou.check_points));
        let pts: Vec<Vec<f64>> = pts.into_iter().filter(|x| pou.covered(x)).collect();
        let sums: Vec<f64> = pts.iter().map(|x| pou.sum(x)).collect();
        let worst = sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        self.report.verdict(
            "pou",
            "sum_to_one",
            worst < 1e-10,
            true,
            json!({"points": pts.len(), "max_deviation": worst}),
        );

        let order = self.cfg.pou.order_cap;
        let stride = (pts.len() / 500).max(1);
        let mut outside = 0usize;
        let mut bound_ratio = 0.0f64;
        for x in pts.iter().step_by(stride) {
            for (i, _) in pou.phi_germs(x, 0) {
                if !pou.dec.cubes[i].in_star(x) {
                    outside += 1;
                }
                let d = pou.phi_derivatives(i, x, order)?;
                let b = pou.phi_bound(i, order);
                for (v, bound) in d.iter().zip(&b) {
                    if *bound > 0.0 {
                        bound_ratio = bound_ratio.max(v.abs() / bound);
                    }
                }
            }
        }
        self.report.verdict("pou", "supports", outside == 0, true, json!({"outside_star": outside}));
        self.report.verdict(
            "pou",
            "derivative_bounds",
            bound_ratio <= 1.0,
            true,
            json!({"worst_ratio": bound_ratio, "order": order}),
        );
        self.report.certificate(
            "pou",
            "bump_profile",
            json!({"stages": pou.stages, "sequence": pou.seq_label, "delta": pou.delta}),
        );
        self.report.certificate("pou", "bump_bounds", pou.certificates());

        let coarse = box_grid(&pou.dec, self.per_axis(self.cfg.extend.eval_points));
        let dim = pou.dim();
        let mut header: Vec<&str> = ["x_0", "x_1"].into_iter().take(dim).collect();
        header.extend(["sum", "active"]);
        let rows: Vec<Vec<String>> = coarse
            .iter()
            .filter(|x| pou.covered(x))
            .map(|x| {
                let mut r: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
                r.push(fmt_f64(pou.sum(x)));
                r.push(pou.phi_germs(x, 0).len().to_string());
                r
            })
            .collect();
        self.csv("pou_sum.csv", &header, &rows)
    }

    fn certified_jet(&mut self) -> Result<Arc<Ultrajet>, StageError> {
        let set = self.cfg.set.build()?;
        let j = &self.cfg.jet;
        let jet = Ultrajet::from_preset(&j.function, set, j.a_max)?;
        let cert = jet.certify(&self.sequence()?, j.rho, j.cert_order)?;
        Ok(Arc::new(jet.with_certificate(cert)?))
    }

    fn degree_source(&self) -> Result<(DegreeSource, WeightSequence), StageError> {
        match self.cfg.extend.mode {
            Mode::Single => {
                let s = self.sequence()?;
                Ok((DegreeSource::Single(s.clone()), s))
            }
            Mode::Matrix => {
                let m = self.weight_matrix()?;
                let chain: ChainCertificate = resolve_chain(&m, self.cfg.matrix.x)?;
                let target = m.row(chain.y3).cloned().ok_or_else(|| StageError {
                    kind: "invalid_input".into(),
                    message: format!("chain row {} missing from the matrix", chain.y3),
                })?;
                Ok((DegreeSource::Matrix { matrix: m, chain }, target))
            }
        }
    }

    fn extend_stage(&mut self) -> StageResult {
        let pou = self.partition()?;
        let jet = self.certified_jet()?;
        let cert = jet.certificate.clone();
        let cert_ok = cert.as_ref().is_some_and(|c| c.ok);
        self.report.verdict("extend", "jet_certificate", cert_ok, true, &cert);
        let (source, _) = self.degree_source()?;
        let l = self.cfg.extend.guard * self.cfg.jet.rho;
        let sched = Arc::new(schedule(&pou.dec, &source, l, jet.a_max())?);
        let doubled = sched.doubled_l(&pou.dec, jet.a_max())?;
        let mut field = extend(jet.clone(), pou.clone(), sched.clone())?;
        if self.cfg.extend.cutoff {
            let c = Cutoff::new(&pou.dec, &self.bump_sequence()?, self.cfg.extend.cutoff_r0, pou.stages)?;
            self.report.certificate("extend", "cutoff_radius", c.radius);
            field = field.with_cutoff(c);
        }
        for w in &field.warnings {
            self.report.warn(w.clone());
        }
        let (lo, hi) = degree_range(&sched.degrees);
        self.report.certificate(
            "extend",
            "degree_schedule",
            json!({
                "l": sched.l,
                "mode": sched.mode,
                "degree_min": lo,
                "degree_max": hi,
                "capped": sched.capped_count(),
                "doubled_l": doubled,
            }),
        );

        let order = self.cfg.extend.orders;
        let mut worst = 0.0f64;
        for (a, x) in jet.set().points().iter().enumerate() {
            let d = field.derivatives(x, order)?;
            for (v, e) in d.iter().zip(jet.row(a)) {
                worst = worst.max((v - e).abs());
            }
        }
        self.report.verdict("extend", "matches_jet_on_set", worst == 0.0, true, json!({"max_deviation": worst}));
        self.write_field(&field, order)
    }

    fn write_field(&mut self, field: &ExtensionField, order: usize) -> StageResult {
        let dim = field.dim();
        let pts = box_grid(&field.pou.dec, self.per_axis(self.cfg.extend.eval_points));
        let pts: Vec<Vec<f64>> = pts.into_iter().filter(|x| field.pou.covered(x)).collect();
        let vals = field.evaluate_grid(&pts, order)?;
        let mut header: Vec<String> = (0..dim).map(|i| format!("x_{i}")).collect();
        for alpha in multi_indices(dim, order) {
            let tag: Vec<String> = alpha.iter().map(|k| k.to_string()).collect();
            header.push(format!("d_{}", tag.join("_")));
        }
        header.push("capped".into());
        let rows: Vec<Vec<String>> = pts
            .iter()
            .zip(&vals)
            .map(|(x, v)| {
                let mut r: Vec<String> = x.iter().chain(v).map(|u| fmt_f64(*u)).collect();
                r.push(field.touches_capped(x).to_string());
                r
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        self.csv("extension.csv", &header, &rows)
    }

    fn verify_stage(&mut self) -> StageResult {
        let pou = self.partition()?;
        let jet = self.certified_jet()?;
        let (source, target) = self.degree_source()?;
        let e = &self.cfg.extend;
        let cfg = VerifyConfig {
            orders: e.orders,
            approach_scales: e.approach_scales.clone(),
            samples_per_scale: e.samples_per_scale,
            growth_orders: e.growth_orders,
            growth_grid: e.growth_grid,
            fd_points: e.fd_points,
            fd_orders: e.fd_orders,
            seed: self.cfg.seed,
        };
        let (field, rep) = extend_verified(jet, pou, &source, self.cfg.jet.rho, e.guard, &target, &cfg)?;
        for w in rep.warnings.iter().chain(&field.warnings) {
            self.report.warn(w.clone());
        }
        let requested = e.guard * self.cfg.jet.rho;
        if rep.l != requested {
            self.report.warn(format!("verification raised L from {requested} to {}", rep.l));
        }
        self.report.verdict(
            "verify",
            "extension_verified",
            rep.passed,
            true,
            json!({"l": rep.l, "excluded_capped": rep.excluded_capped}),
        );
        self.report.certificate("verify", "growth", &rep.growth);
        self.report.certificate("verify", "taylor_checks", &rep.taylor_checks);
        self.report.certificate("verify", "finite_differences", rep.fd);

        let mut tables: BTreeMap<(usize, Vec<usize>), ResidualTable> = BTreeMap::new();
        for row in &rep.residuals {
            let t = tables.entry((row.point, row.alpha.clone())).or_insert_with(|| ResidualTable {
                point: row.point,
                alpha: row.alpha.clone(),
                d: Vec::new(),
                residual: Vec::new(),
                c_prime: None,
                k: None,
                monotone: None,
            });
            t.d.push(row.d);
            t.residual.push(row.residual);
        }
        for fit in &rep.fits {
            if let Some(t) = tables.get_mut(&(fit.point, fit.alpha.clone())) {
                t.c_prime = fit.fitted.then_some(fit.c_prime);
                t.k = fit.fitted.then_some(fit.k);
                t.monotone = Some(fit.monotone);
            }
        }
        self.report.residual_tables = tables.into_values().collect();
        let rows: Vec<Vec<String>> = rep
            .residuals
            .iter()
            .map(|r| {
                let alpha: Vec<String> = r.alpha.iter().map(|k| k.to_string()).collect();
                vec![r.point.to_string(), alpha.join(" "), fmt_f64(r.d), fmt_f64(r.residual), r.samples.to_string()]
            })
            .collect();
        self.csv("residuals.csv", &["point", "alpha", "d", "residual", "samples"], &rows)
    }
}

fn degree_range(d: &[usize]) -> (usize, usize) {
    (d.iter().copied().min().unwrap_or(0), d.iter().copied().max().unwrap_or(0))
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// `per_decade` log-spaced points from `lo` to `hi`, both included.
fn log_spaced(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).ceil().max(1.0) as usize;
    (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect()
}

/// Output directory: the flag, else the config entry resolved against the
/// config file's directory.
pub fn output_dir(flag: Option<&Path>, cfg_dir: &str, config_path: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    let dir = Path::new(cfg_dir);
    match config_path.and_then(Path::parent) {
        Some(base) if dir.is_relative() => base.join(dir),
        _ => dir.to_path_buf(),
    }
}

/// Report for a config that failed to load.
pub fn config_failure(command: Command, message: String) -> Report {
    let mut r = Report::new(command.name(), serde_json::Value::Null);
    r.error("config", "config", message);
    r.finish(false);
    r
}

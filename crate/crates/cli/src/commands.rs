use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use causal_bounds::bounds::{
    full_report_with_tol, instrumental_lower, instrumental_upper, natural_bounds, tight_bounds_lp, FullReport,
};
use causal_bounds::classical::{self, CanonicalModel};
use causal_bounds::epr::{
    chsh, local_strategies_max_chsh, scan_grid, scan_max_violation, second_experiment, toy_distribution, toy_embedding,
    PolarizerAngles, SecondExperiment,
};
use causal_bounds::quantum::{self, check_exclusion, QuantumLatentModel};
use causal_bounds::trial_data::{
    estimate, read_records_csv, sample_observed, validate, write_records_csv, ObservedDistribution, TrialRecord,
};
use serde::{Deserialize, Serialize};

use crate::output::{emit, fmt_opt, Failure, Report, EXIT_MISMATCH, EXIT_OK, EXIT_VIOLATION};
use crate::{Config, InputFormat};

/// LP optimum vs closed-form bounds; looser than `--tol` because it compares two solvers.
const LP_TIGHTNESS_TOL: f64 = 1e-7;

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- bounds

#[derive(Serialize)]
struct BoundsOutput {
    input: String,
    records: Option<usize>,
    distribution: ObservedDistribution,
    #[serde(flatten)]
    report: FullReport,
}

impl Report for BoundsOutput {
    fn command(&self) -> &'static str {
        "bounds"
    }

    fn table(&self, out: &mut String) {
        let b = &self.report.bounds;
        let row = |v: &[f64; 8]| v.iter().map(|x| format!("{x:>12.9}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "input        {}", self.input);
        if let Some(n) = self.records {
            let _ = writeln!(out, "records      {n}");
        }
        let _ = writeln!(out, "natural      [{:.9}, {:.9}]", b.natural_lower, b.natural_upper);
        let _ = writeln!(out, "lower 1-8    {}", row(&b.inst_lower));
        let _ = writeln!(out, "upper 1-8    {}", row(&b.inst_upper));
        if b.feasible {
            let _ = writeln!(out, "tight (LP)   [{}, {}]", fmt_opt(b.lp_lower), fmt_opt(b.lp_upper));
        } else {
            let _ = writeln!(out, "tight (LP)   infeasible: no classical latent model reproduces the data");
        }
        if let Some(ace) = self.report.true_ace {
            let _ = writeln!(out, "true ACE     {ace}");
            if self.report.violations.is_empty() {
                let _ = writeln!(out, "violations   none");
            }
            for v in &self.report.violations {
                let side = serde_json::to_value(v.side).expect("side serializes");
                let _ = writeln!(out, "violation    {} {} = {:.9}", side.as_str().unwrap_or("?"), v.index, v.value);
            }
        }
        for d in &self.report.printed_upper_diagnostics {
            let _ = writeln!(
                out,
                "printed upper row {}: {:.9} (generated {:.9}){}",
                d.index,
                d.printed,
                d.generated,
                if d.below_max_lower { ", below the largest lower bound" } else { "" }
            );
        }
    }

    fn csv(&self, out: &mut String) {
        let b = &self.report.bounds;
        out.push_str("bound,index,value\n");
        let _ = writeln!(out, "natural_lower,,{}", b.natural_lower);
        let _ = writeln!(out, "natural_upper,,{}", b.natural_upper);
        for (i, v) in b.inst_lower.iter().enumerate() {
            let _ = writeln!(out, "lower,{},{v}", i + 1);
        }
        for (i, v) in b.inst_upper.iter().enumerate() {
            let _ = writeln!(out, "upper,{},{v}", i + 1);
        }
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "lp_lower,,{}", opt(b.lp_lower));
        let _ = writeln!(out, "lp_upper,,{}", opt(b.lp_upper));
    }
}

pub fn bounds(cfg: &Config, input: &Path, format: Option<InputFormat>, true_ace: Option<f64>) -> Result<u8, Failure> {
    if true_ace.is_some_and(|a| !a.is_finite()) {
        return Err(Failure::usage("--true-ace must be finite"));
    }
    let format = format.unwrap_or(match input.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => InputFormat::Json,
        _ => InputFormat::Csv,
    });
    let (dist, records) = match format {
        InputFormat::Csv => {
            let file = fs::File::open(input).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
            let records = read_records_csv(file)?;
            (estimate(&records)?, Some(records.len()))
        }
        InputFormat::Json => {
            let raw = ObservedDistribution::from_json(&read_file(input)?)?;
            let problems = validate(&raw, cfg.tol.max(1e-12));
            if !problems.is_empty() {
                let list: Vec<String> = problems.iter().map(ToString::to_string).collect();
                return Err(Failure::invalid(format!("invalid distribution: {}", list.join("; "))));
            }
            (ObservedDistribution::with_tol(*raw.cells(), raw.pz(), cfg.tol.max(1e-12))?, None)
        }
    };
    let report = full_report_with_tol(&dist, true_ace, cfg.tol);
    let code = if report.violations.is_empty() { EXIT_OK } else { EXIT_VIOLATION };
    emit(cfg, &BoundsOutput { input: input.display().to_string(), records, distribution: dist, report })?;
    Ok(code)
}

// ------------------------------------------------------------- reproduce

#[derive(Debug, Clone, Copy, Serialize)]
enum Relation {
    #[serde(rename = "==")]
    Equal,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    value: f64,
    relation: Relation,
    target: f64,
    passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, relation: Relation, target: f64, tol: f64) -> Self {
        let passed = match relation {
            Relation::Equal => (value - target).abs() <= tol,
            Relation::AtMost => value <= target + tol,
            Relation::AtLeast => value >= target - tol,
        };
        Self { name: name.into(), value, relation, target, passed }
    }
}

fn checks_table(checks: &[Check], out: &mut String) {
    for c in checks {
        let rel = match c.relation {
            Relation::Equal => "==",
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        let mark = if c.passed { "ok  " } else { "FAIL" };
        let _ = writeln!(out, "{mark} {:<34} {:>15.12} {rel} {:.12}", c.name, c.value, c.target);
    }
}

fn checks_csv(checks: &[Check], out: &mut String) {
    out.push_str("check,value,relation,target,passed\n");
    for c in checks {
        let rel = serde_json::to_value(c.relation).expect("relation serializes");
        let _ = writeln!(out, "{},{},{},{},{}", c.name, c.value, rel.as_str().unwrap_or(""), c.target, c.passed);
    }
}

#[derive(Serialize)]
struct CertificateRow {
    bound: usize,
    state_value: f64,
    min_eigenvalue: f64,
}

#[derive(Serialize)]
struct ReproduceOutput {
    angles: PolarizerAngles,
    checks: Vec<Check>,
    /// Third lower bound minus the true ACE.
    violation: f64,
    note: String,
    certificates: Vec<CertificateRow>,
    passed: bool,
}

impl Report for ReproduceOutput {
    fn command(&self) -> &'static str {
        "reproduce"
    }

    fn table(&self, out: &mut String) {
        let _ = writeln!(out, "angles (a0,a1,b0,b1) = {}", self.angles);
        checks_table(&self.checks, out);
        for c in &self.certificates {
            let _ = writeln!(
                out,
                "certificate for lower bound {}: rho(C) = {:.12}, min eigenvalue {:.3e}",
                c.bound, c.state_value, c.min_eigenvalue
            );
        }
        let _ = writeln!(out, "{}", self.note);
        let _ = writeln!(out, "{}", if self.passed { "all targets met" } else { "TARGETS MISSED" });
    }

    fn csv(&self, out: &mut String) {
        checks_csv(&self.checks, out);
    }
}

pub fn reproduce(cfg: &Config, angles: Option<PolarizerAngles>) -> Result<u8, Failure> {
    let tol = cfg.tol;
    let angles = angles.unwrap_or(PolarizerAngles::VIOLATION);
    let documented = angles == PolarizerAngles::VIOLATION;
    let closed = toy_distribution(&angles);
    let model = toy_embedding(&angles);
    let d = model.observed_distribution(0.5)?;
    let ace = model.quantum_ace()?;

    let a_plus = (1.0 + 1.0 / SQRT_2) / 4.0;
    let a_minus = (1.0 - 1.0 / SQRT_2) / 4.0;
    let mut checks = Vec::new();
    let cells = [(1, 1, 0, a_plus), (1, 1, 1, a_minus), (1, 0, 1, a_minus), (0, 1, 0, a_minus), (1, 0, 0, a_minus)];
    for (y, x, z, documented_value) in cells {
        let target = if documented { documented_value } else { closed.prob(y, x, z) };
        checks.push(Check::new(format!("P(y{y},x{x}|z{z})"), d.prob(y, x, z), Relation::Equal, target, tol));
    }
    checks.push(Check::new("quantum ACE", ace, Relation::Equal, 0.0, tol));
    let l3 = instrumental_lower(&d)[2];
    let l3_target = if documented { (5.0 / SQRT_2 - 3.0) / 4.0 } else { instrumental_lower(&closed)[2] };
    checks.push(Check::new("lower bound 3", l3, Relation::Equal, l3_target, tol));
    checks.push(Check::new("exclusion residual", check_exclusion(&model), Relation::AtMost, 0.0, tol));

    let mut certificates = Vec::new();
    for (bound, cert) in model.group_certificates()? {
        checks.push(Check::new(format!("certificate {bound} rho(C)"), cert.state_value, Relation::AtLeast, 0.0, tol));
        certificates.push(CertificateRow { bound, state_value: cert.state_value, min_eigenvalue: cert.min_eigenvalue });
    }

    let violation = l3 - ace;
    let note = if violation > tol {
        format!(
            "lower bound 3 exceeds the true ACE by {violation:.9}: a classical analysis would report a positive effect"
        )
    } else {
        "no violation: lower bound 3 does not exceed the true ACE".to_string()
    };
    let passed = checks.iter().all(|c| c.passed);
    emit(cfg, &ReproduceOutput { angles, checks, violation, note, certificates, passed })?;
    Ok(if passed { EXIT_OK } else { EXIT_MISMATCH })
}

#[derive(Serialize)]
struct ChshOutput {
    angles: PolarizerAngles,
    experiment: SecondExperiment,
    local_strategies_max: f64,
    checks: Vec<Check>,
    passed: bool,
}

impl Report for ChshOutput {
    fn command(&self) -> &'static str {
        "reproduce --chsh"
    }

    fn table(&self, out: &mut String) {
        let e = &self.experiment;
        let _ = writeln!(out, "angles (a0,a1,b0,b1) = {}", self.angles);
        let _ = writeln!(out, "z w   P(x0,y0)  P(x0,y1)  P(x1,y0)  P(x1,y1)   C(a_z,b_w)");
        for z in 0..2 {
            for w in 0..2 {
                let t = &e.table[z][w];
                let _ = writeln!(
                    out,
                    "{z} {w}   {:.6}  {:.6}  {:.6}  {:.6}   {:+.6}",
                    t[0][0], t[0][1], t[1][0], t[1][1], e.chsh.covariances[z][w]
                );
            }
        }
        let _ =
            writeln!(out, "s = {:.9}, local strategies reach at most {}", e.chsh.s_value, self.local_strategies_max);
        if e.exceeds_classical_bound {
            let _ = writeln!(out, "|s| > 2: no classical latent model without a drug effect explains this table");
        }
        checks_table(&self.checks, out);
    }

    fn csv(&self, out: &mut String) {
        checks_csv(&self.checks, out);
    }
}

pub fn reproduce_chsh(cfg: &Config, angles: Option<PolarizerAngles>) -> Result<u8, Failure> {
    let tol = cfg.tol;
    let documented = angles.is_none();
    let angles = angles.unwrap_or(PolarizerAngles::CHSH_OPTIMAL);
    let experiment = second_experiment(&angles);
    let s = chsh(&angles).s_value;
    let local = local_strategies_max_chsh();
    let mut checks = vec![
        Check::new("s from table vs closed form", experiment.chsh.s_value, Relation::Equal, s, tol),
        if documented {
            Check::new("|s|", s.abs(), Relation::Equal, 2.0 * SQRT_2, tol)
        } else {
            Check::new("|s|", s.abs(), Relation::AtMost, 2.0 * SQRT_2, tol)
        },
        Check::new("local strategies max |s|", local, Relation::Equal, 2.0, 0.0),
    ];
    for z in 0..2 {
        for w in 0..2 {
            let t = &experiment.table[z][w];
            checks.push(Check::new(format!("P(x1|z{z},w{w})"), t[1][0] + t[1][1], Relation::Equal, 0.5, tol));
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    emit(cfg, &ChshOutput { angles, experiment, local_strategies_max: local, checks, passed })?;
    Ok(if passed { EXIT_OK } else { EXIT_MISMATCH })
}

// ---------------------------------------------------------------- verify

#[derive(Serialize)]
struct QuantumSummary {
    models: usize,
    failures: usize,
    worst_group_margin: f64,
    worst_natural_margin: f64,
    worst_certificate_value: f64,
    max_certificate_identity_error: f64,
    worst_natural_certificate_eigenvalue: f64,
    max_exclusion_residual: f64,
}

#[derive(Serialize)]
struct ClassicalSummary {
    models: usize,
    failures: usize,
    worst_soundness_margin: f64,
    max_lp_gap: f64,
    infeasible: usize,
}

#[derive(Serialize)]
struct VerifyFailure {
    suite: &'static str,
    index: usize,
    seed: u64,
    check: String,
    value: f64,
}

#[derive(Serialize)]
struct VerifyOutput {
    samples: usize,
    dims: [usize; 2],
    mixing: f64,
    quantum: QuantumSummary,
    classical: ClassicalSummary,
    failures: Vec<VerifyFailure>,
    passed: bool,
}

impl Report for VerifyOutput {
    fn command(&self) -> &'static str {
        "verify"
    }

    fn table(&self, out: &mut String) {
        let q = &self.quantum;
        let c = &self.classical;
        let _ = writeln!(
            out,
            "quantum models ({}x{}, mixing {}): {} checked, {} failures",
            self.dims[0], self.dims[1], self.mixing, q.models, q.failures
        );
        let _ = writeln!(out, "  worst margin, bounds 1,2,5,6     {:+.3e}", q.worst_group_margin);
        let _ = writeln!(out, "  worst margin, natural bounds     {:+.3e}", q.worst_natural_margin);
        let _ = writeln!(out, "  smallest certificate rho(C)      {:+.3e}", q.worst_certificate_value);
        let _ = writeln!(out, "  certificate identity error       {:.3e}", q.max_certificate_identity_error);
        let _ = writeln!(out, "  natural certificate eigenvalue   {:+.3e}", q.worst_natural_certificate_eigenvalue);
        let _ = writeln!(out, "  exclusion residual               {:.3e}", q.max_exclusion_residual);
        let _ = writeln!(out, "classical models: {} checked, {} failures", c.models, c.failures);
        let _ = writeln!(out, "  worst margin, all 16 bounds      {:+.3e}", c.worst_soundness_margin);
        let _ = writeln!(out, "  LP vs closed form                {:.3e}", c.max_lp_gap);
        let _ = writeln!(out, "  infeasible LPs                   {}", c.infeasible);
        for f in &self.failures {
            let _ = writeln!(out, "FAIL {} #{} (seed {}): {} = {:e}", f.suite, f.index, f.seed, f.check, f.value);
        }
        let _ = writeln!(out, "{}", if self.passed { "all checks passed" } else { "CHECKS FAILED" });
    }

    fn csv(&self, out: &mut String) {
        let q = &self.quantum;
        let c = &self.classical;
        out.push_str("suite,quantity,value\n");
        let rows: [(&str, &str, f64); 12] = [
            ("quantum", "models", q.models as f64),
            ("quantum", "failures", q.failures as f64),
            ("quantum", "worst_group_margin", q.worst_group_margin),
            ("quantum", "worst_natural_margin", q.worst_natural_margin),
            ("quantum", "worst_certificate_value", q.worst_certificate_value),
            ("quantum", "worst_natural_certificate_eigenvalue", q.worst_natural_certificate_eigenvalue),
            ("quantum", "max_exclusion_residual", q.max_exclusion_residual),
            ("classical", "models", c.models as f64),
            ("classical", "failures", c.failures as f64),
            ("classical", "worst_soundness_margin", c.worst_soundness_margin),
            ("classical", "max_lp_gap", c.max_lp_gap),
            ("classical", "infeasible", c.infeasible as f64),
        ];
        for (suite, name, v) in rows {
            let _ = writeln!(out, "{suite},{name},{v}");
        }
    }
}

fn parse_dims(s: &str) -> Result<[usize; 2], Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let dims: Vec<usize> = parts.iter().filter_map(|p| p.parse().ok()).collect();
    match dims[..] {
        [a, b] if parts.len() == 2 && a >= 2 && b >= 2 => Ok([a, b]),
        _ => Err(Failure::usage(format!("--dims expects two integers >= 2 as dA,dB, got `{s}`"))),
    }
}

/// Accumulates worst-case statistics and failure records for one suite.
struct Tally<'a> {
    suite: &'static str,
    tol: f64,
    failures: &'a mut Vec<VerifyFailure>,
    failed_models: usize,
}

impl Tally<'_> {
    /// Records `value` as a failure unless `ok`; returns `ok`.
    fn check(&mut self, ok: bool, index: usize, seed: u64, check: impl Into<String>, value: f64) -> bool {
        if !ok {
            self.failures.push(VerifyFailure { suite: self.suite, index, seed, check: check.into(), value });
        }
        ok
    }

    fn margin(&mut self, margin: f64, index: usize, seed: u64, check: impl Into<String>) -> bool {
        let tol = self.tol;
        self.check(margin >= -tol, index, seed, check, margin)
    }
}

fn verify_quantum(cfg: &Config, i: usize, dims: [usize; 2], mixing: f64, s: &mut QuantumSummary, t: &mut Tally) {
    let seed = cfg.seed.wrapping_add(i as u64);
    let model = quantum::random_model_mixed(seed, dims[0], dims[1], mixing);
    let residual = check_exclusion(&model);
    s.max_exclusion_residual = s.max_exclusion_residual.max(residual);
    let mut ok = t.check(residual <= cfg.tol, i, seed, "exclusion residual", residual);
    let (Ok(ace), Ok(d), Ok(certs), Ok(natural)) = (
        model.quantum_ace(),
        model.observed_distribution(0.5),
        model.group_certificates(),
        model.certificate_natural(),
    ) else {
        t.check(false, i, seed, "model evaluation", f64::NAN);
        t.failed_models += 1;
        return;
    };
    let (lower, upper) = (instrumental_lower(&d), instrumental_upper(&d));
    for k in [0, 1, 4, 5] {
        let (ml, mu) = (ace - lower[k], upper[k] - ace);
        s.worst_group_margin = s.worst_group_margin.min(ml).min(mu);
        ok &= t.margin(ml, i, seed, format!("lower {} margin", k + 1));
        ok &= t.margin(mu, i, seed, format!("upper {} margin", k + 1));
    }
    let (nl, nu) = natural_bounds(&d);
    s.worst_natural_margin = s.worst_natural_margin.min(ace - nl).min(nu - ace);
    ok &= t.margin(ace - nl, i, seed, "natural lower margin");
    ok &= t.margin(nu - ace, i, seed, "natural upper margin");
    for (bound, cert) in certs {
        s.worst_certificate_value = s.worst_certificate_value.min(cert.state_value);
        ok &= t.margin(cert.state_value, i, seed, format!("certificate {bound} value"));
        let err = (cert.state_value - (ace - lower[bound - 1])).abs();
        s.max_certificate_identity_error = s.max_certificate_identity_error.max(err);
        ok &= t.check(err <= cfg.tol, i, seed, format!("certificate {bound} identity"), err);
    }
    s.worst_natural_certificate_eigenvalue = s.worst_natural_certificate_eigenvalue.min(natural.min_eigenvalue);
    ok &= t.margin(natural.min_eigenvalue, i, seed, "natural certificate eigenvalue");
    if !ok {
        t.failed_models += 1;
    }
}

fn verify_classical(cfg: &Config, i: usize, s: &mut ClassicalSummary, t: &mut Tally) {
    let seed = cfg.seed.wrapping_add(i as u64);
    let model = classical::random_model(seed);
    let ace = classical::ace(&model);
    let d = classical::forward(&model);
    let (lower, upper) = (instrumental_lower(&d), instrumental_upper(&d));
    let (nl, nu) = natural_bounds(&d);
    let mut ok = true;
    for k in 0..8 {
        s.worst_soundness_margin = s.worst_soundness_margin.min(ace - lower[k]).min(upper[k] - ace);
        ok &= t.margin(ace - lower[k], i, seed, format!("lower {} margin", k + 1));
        ok &= t.margin(upper[k] - ace, i, seed, format!("upper {} margin", k + 1));
    }
    ok &= t.margin(ace - nl, i, seed, "natural lower margin");
    ok &= t.margin(nu - ace, i, seed, "natural upper margin");
    let lp = tight_bounds_lp(&d);
    if let (true, Some(lo), Some(hi)) = (lp.feasible, lp.lower, lp.upper) {
        let max_lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_upper = upper.iter().copied().fold(f64::INFINITY, f64::min);
        let gap = (lo - max_lower).abs().max((hi - min_upper).abs());
        s.max_lp_gap = s.max_lp_gap.max(gap);
        ok &= t.check(gap <= LP_TIGHTNESS_TOL, i, seed, "LP vs closed form", gap);
    } else {
        s.infeasible += 1;
        ok &= t.check(false, i, seed, "LP feasibility", f64::NAN);
    }
    if !ok {
        t.failed_models += 1;
    }
}

pub fn verify(cfg: &Config, samples: usize, dims: &str, mixing: f64) -> Result<u8, Failure> {
    if samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    if !(0.0..=1.0).contains(&mixing) {
        return Err(Failure::usage("--mixing must lie in [0, 1]"));
    }
    let dims = parse_dims(dims)?;
    let mut failures = Vec::new();

    let mut q = QuantumSummary {
        models: samples,
        failures: 0,
        worst_group_margin: f64::INFINITY,
        worst_natural_margin: f64::INFINITY,
        worst_certificate_value: f64::INFINITY,
        max_certificate_identity_error: 0.0,
        worst_natural_certificate_eigenvalue: f64::INFINITY,
        max_exclusion_residual: 0.0,
    };
    let mut tally = Tally { suite: "quantum", tol: cfg.tol, failures: &mut failures, failed_models: 0 };
    for i in 0..samples {
        verify_quantum(cfg, i, dims, mixing, &mut q, &mut tally);
    }
    q.failures = tally.failed_models;

    let mut c = ClassicalSummary {
        models: samples,
        failures: 0,
        worst_soundness_margin: f64::INFINITY,
        max_lp_gap: 0.0,
        infeasible: 0,
    };
    let mut tally = Tally { suite: "classical", tol: cfg.tol, failures: &mut failures, failed_models: 0 };
    for i in 0..samples {
        verify_classical(cfg, i, &mut c, &mut tally);
    }
    c.failures = tally.failed_models;

    let passed = failures.is_empty();
    emit(cfg, &VerifyOutput { samples, dims, mixing, quantum: q, classical: c, failures, passed })?;
    Ok(if passed { EXIT_OK } else { EXIT_MISMATCH })
}

// -------------------------------------------------------------- simulate

#[derive(Deserialize)]
struct ClassicalFile {
    q: [[f64; 4]; 4],
    pz: f64,
}

pub fn simulate(cfg: &Config, input: &Path, samples: usize, pz: f64) -> Result<u8, Failure> {
    if samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    if !(0.0..=1.0).contains(&pz) {
        return Err(Failure::usage("--pz must lie in [0, 1]"));
    }
    let text = read_file(input)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
    let records: Vec<TrialRecord> = if value.get("q").is_some() {
        let f: ClassicalFile = serde_json::from_value(value).map_err(|e| Failure::invalid(e.to_string()))?;
        let model = CanonicalModel::new(f.q, f.pz)?;
        classical::sample(&model, samples, cfg.seed)
    } else if value.get("rho").is_some() {
        let model = QuantumLatentModel::from_json(&text)?;
        sample_observed(&model.observed_distribution(pz)?, samples, cfg.seed)
    } else if value.get("p").is_some() {
        let raw = ObservedDistribution::from_json(&text)?;
        let d = ObservedDistribution::with_tol(*raw.cells(), raw.pz(), cfg.tol.max(1e-12))?;
        sample_observed(&d, samples, cfg.seed)
    } else {
        return Err(Failure::invalid("input is neither a classical model, a quantum model nor a distribution"));
    };
    eprintln!("# simulate: seed {}, {} records", cfg.seed, records.len());
    write_records_csv(&records, BufWriter::new(std::io::stdout().lock()))?;
    Ok(EXIT_OK)
}

// ------------------------------------------------------------------ scan

#[derive(Serialize)]
struct ScanRow {
    alpha0: f64,
    alpha1: f64,
    beta0: f64,
    beta1: f64,
    violation: f64,
}

impl From<(PolarizerAngles, f64)> for ScanRow {
    fn from((a, v): (PolarizerAngles, f64)) -> Self {
        Self { alpha0: a.alpha0, alpha1: a.alpha1, beta0: a.beta0, beta1: a.beta1, violation: v }
    }
}

#[derive(Serialize)]
struct ScanOutput {
    step: f64,
    best: ScanRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<ScanRow>>,
}

impl Report for ScanOutput {
    fn command(&self) -> &'static str {
        "scan"
    }

    fn table(&self, out: &mut String) {
        let b = &self.best;
        let _ = writeln!(out, "grid step {} degrees", self.step);
        let _ = writeln!(out, "best angles (a0,a1,b0,b1) = {},{},{},{}", b.alpha0, b.alpha1, b.beta0, b.beta1);
        let _ = writeln!(out, "lower bound 3 minus true ACE = {:.9}", b.violation);
        if let Some(grid) = &self.grid {
            let _ = writeln!(out, "{} grid points evaluated", grid.len());
        }
    }

    fn csv(&self, out: &mut String) {
        out.push_str("alpha0,alpha1,beta0,beta1,violation\n");
        for r in self.grid.as_deref().unwrap_or(std::slice::from_ref(&self.best)) {
            let _ = writeln!(out, "{},{},{},{},{}", r.alpha0, r.alpha1, r.beta0, r.beta1, r.violation);
        }
    }
}

pub fn scan(cfg: &Config, step: f64, all: bool) -> Result<u8, Failure> {
    if !(step > 0.0 && step <= 45.0) {
        return Err(Failure::usage(format!("--step must lie in (0, 45], got {step}")));
    }
    let best = scan_max_violation(step).into();
    let grid = all.then(|| scan_grid(step).map(ScanRow::from).collect());
    emit(cfg, &ScanOutput { step, best, grid })?;
    Ok(EXIT_OK)
}

// ------------------------------------------------------------------- toy

pub fn toy(angles: PolarizerAngles, model: bool) -> Result<u8, Failure> {
    let json = if model { toy_embedding(&angles).to_json() } else { toy_distribution(&angles).to_json() };
    println!("{json}");
    Ok(EXIT_OK)
}

//! Running scenarios and writing their outputs.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dynamics::{order_swap_residual, run, TimeOrderedExperiment};
use crate::oracle::{brute_force_not_optimum, BruteForceConfig};
use crate::qcore::{trace_distance, Ket};
use crate::scenario::Scenario;
use crate::taxonomy::{classify_with_tol, Settings};
use crate::theorem::{verify_theorem1, Certificate, IntersectionSet};
use crate::unot::{optimize_universal_not, NotOptimum, OptimizerConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default seed when none is given.
pub const DEFAULT_SEED: u64 = crate::acceptance::DEFAULT_SEED;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    pub status: Status,
    pub entries: Vec<(String, String)>,
}

impl Section {
    fn new(name: impl Into<String>) -> Self {
        Section {
            name: name.into(),
            status: Status::Ok,
            entries: Vec::new(),
        }
    }

    fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Records a self-check; a failing check fails the section.
    fn check(&mut self, key: &str, ok: bool) {
        self.put(format!("check.{key}"), if ok { "pass" } else { "fail" });
        if !ok && self.status == Status::Ok {
            self.status = Status::Failed(format!("self-check '{key}' failed"));
        }
    }

    fn fail(&mut self, message: String) {
        self.status = Status::Failed(message);
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: Scenario,
    pub seed: u64,
    pub sections: Vec<Section>,
    pub certificate: Option<Certificate>,
    pub optimum: Option<NotOptimum>,
}

impl Report {
    /// 0 iff every analysis completed and every self-check passed.
    pub fn exit_status(&self) -> i32 {
        if self.sections.iter().all(|s| s.status == Status::Ok) {
            0
        } else {
            1
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "noflip {VERSION} report");
        let _ = writeln!(out, "scenario = {}", self.scenario.name.as_deref().unwrap_or("unnamed"));
        let _ = writeln!(out, "seed = {}", self.seed);
        for s in &self.sections {
            let _ = writeln!(out, "\n[{}]", s.name);
            match &s.status {
                Status::Ok => {
                    let _ = writeln!(out, "status = ok");
                }
                Status::Failed(m) => {
                    let _ = writeln!(out, "status = failed: {m}");
                }
            }
            for (k, v) in &s.entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        let _ = writeln!(out, "\nexit_status = {}", self.exit_status());
        out
    }
}

fn experiment_section(scenario: &Scenario, order: &str) -> (Section, Option<TimeOrderedExperiment>) {
    let mut sec = Section::new(format!("experiment.{order}"));
    let exp = match scenario.experiment(order) {
        Ok(e) => e,
        Err(e) => {
            sec.fail(format!("could not build experiment: {e}"));
            return (sec, None);
        }
    };
    let steps: Vec<String> = exp
        .steps
        .iter()
        .map(|s| format!("{}:{}", s.party.name().to_lowercase(), s.label))
        .collect();
    sec.put("steps", steps.join(" -> "));
    match run(&exp) {
        Ok(rho) => {
            sec.put("final.purity", rho.purity());
            let rows: Vec<String> = (0..4)
                .map(|i| {
                    (0..4)
                        .map(|j| {
                            let z = rho.entry(i, j);
                            format!("{}{:+}i", z.re, z.im)
                        })
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            sec.put("final.state", format!("[{}]", rows.join("; ")));
        }
        // Undefined actions are a finding about the hypothesis, not a crash.
        Err(e) => sec.put("final.undefined", e),
    }
    (sec, Some(exp))
}

fn theorem_section(scenario: &Scenario) -> (Section, Option<Certificate>) {
    let mut sec = Section::new("theorem1");
    let tol = &scenario.tolerances;
    let cert = match verify_theorem1() {
        Ok(c) => c,
        Err(e) => {
            sec.fail(format!("certificate could not be built: {e}"));
            return (sec, None);
        }
    };
    for line in cert.render().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            sec.put(k, v);
        }
    }
    let expected = [Ket::phi_plus(), Ket::phi_minus(), Ket::psi_plus()];
    let mut bells_ok = true;
    for (inter, bell) in cert.pairwise.iter().zip(&expected) {
        let d = match &inter.set {
            IntersectionSet::Point { state, .. } => trace_distance(state, &bell.density()).unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        };
        sec.put(format!("pair.{}.bell_distance", inter.families.join("&")), d);
        bells_ok &= d <= tol.bell;
    }
    sec.check("pairwise_bell_states", bells_ok);
    sec.check("targets", cert.target_errors.iter().all(|&e| e <= tol.target));
    sec.check("triple_empty", cert.empty);
    (sec, Some(cert))
}

fn classify_section(
    scenario: &Scenario,
    pair: &(String, String),
    experiments: &[(String, Option<TimeOrderedExperiment>)],
) -> Section {
    let mut sec = Section::new("classify");
    sec.put("orders", format!("{} vs {}", pair.0, pair.1));
    let find = |o: &str| experiments.iter().find(|(n, _)| n == o).and_then(|(_, e)| e.clone());
    let (Some(a), Some(b)) = (find(&pair.0), find(&pair.1)) else {
        sec.fail("an order could not be built".into());
        return sec;
    };
    match order_swap_residual(&a, &b) {
        Ok(r) => sec.put("order_swap_residual", r),
        Err(e) => sec.put("order_swap_residual", format!("n/a ({e})")),
    }
    let (fa, fb) = match (run(&a), run(&b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => {
            sec.fail(format!("final state undefined: {e}"));
            return sec;
        }
    };
    let settings = Settings::pauli();
    match classify_with_tol(&fa, &fb, &settings, scenario.tolerances.differs) {
        Ok(v) => {
            sec.put("level", v.level);
            sec.put("evidence", v.describe(&settings));
            if let Some(p) = v.signaling_success(&fa, &fb, &settings) {
                sec.put("order_guess_success", p);
            }
            sec.check("evidence_recheck", v.recheck(&fa, &fb, &settings).unwrap_or(false));
        }
        Err(e) => sec.fail(format!("classification failed: {e}")),
    }
    sec
}

fn optimize_section(scenario: &Scenario, seed: u64) -> (Section, Option<NotOptimum>) {
    let mut sec = Section::new("optimize-not");
    let tol = &scenario.tolerances;
    let opt = match optimize_universal_not(&OptimizerConfig {
        seed,
        ..OptimizerConfig::default()
    }) {
        Ok(o) => o,
        Err(e) => {
            sec.fail(format!("optimizer failed: {e}"));
            return (sec, None);
        }
    };
    sec.put("strategy", opt.strategy.name());
    sec.put("worst_case_fidelity", opt.score.worst);
    sec.put("average_fidelity", opt.score.average);
    sec.put("ascent.worst_case_fidelity", opt.ascent_score.worst);
    sec.put("ascent.average_fidelity", opt.ascent_score.average);
    sec.put("ascent.iterations", opt.trace.len());
    sec.put("ascent.converged", opt.converged);
    sec.put("covariant_line.parameter", opt.line_parameter);
    sec.put("covariant_line.worst_case_fidelity", opt.line_score.worst);
    match brute_force_not_optimum(&BruteForceConfig {
        seed: seed ^ 0x0ac1e,
        ..BruteForceConfig::default()
    }) {
        Ok((_, oracle)) => {
            sec.put("oracle.worst_case_fidelity", oracle);
            sec.check("matches_oracle", (opt.score.worst - oracle).abs() <= tol.optimum_match);
        }
        Err(e) => sec.fail(format!("brute-force oracle failed: {e}")),
    }
    sec.put("gap_to_perfect", 1.0 - opt.score.worst);
    sec.check("strictly_imperfect", 1.0 - opt.score.worst >= tol.not_gap);
    sec.check(
        "trace_feasible",
        opt.trace.iter().all(|r| r.min_eigenvalue >= -1e-10 && r.tp_residual <= 1e-10),
    );
    (sec, Some(opt))
}

/// Runs every requested analysis in a fixed order.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Report {
    let mut sections = Vec::new();
    let mut experiments = Vec::new();
    for order in scenario.orders() {
        let (sec, exp) = experiment_section(scenario, &order);
        sections.push(sec);
        experiments.push((order, exp));
    }
    let mut certificate = None;
    if scenario.analyses.theorem1 {
        let (sec, cert) = theorem_section(scenario);
        sections.push(sec);
        certificate = cert;
    }
    if let Some(pair) = &scenario.analyses.classify {
        sections.push(classify_section(scenario, pair, &experiments));
    }
    let mut optimum = None;
    if scenario.analyses.optimize_not {
        let (sec, opt) = optimize_section(scenario, seed);
        sections.push(sec);
        optimum = opt;
    }
    Report {
        scenario: scenario.clone(),
        seed,
        sections,
        certificate,
        optimum,
    }
}

/// Phase samples per family in the families table.
pub const FAMILY_SAMPLES: usize = 360;

/// `family  phase  coherence_re  coherence_im`, one circle per family.
pub fn families_tsv(cert: Option<&Certificate>) -> String {
    let mut out = String::from("family\tphase\tcoherence_re\tcoherence_im\n");
    if let Some(cert) = cert {
        for f in &cert.families {
            for k in 0..FAMILY_SAMPLES {
                let phase = 2.0 * PI * k as f64 / FAMILY_SAMPLES as f64;
                let coh = f.coherence(&f.extreme_state(phase).density());
                let _ = writeln!(out, "{}\t{phase}\t{}\t{}", f.id(), coh.re, coh.im);
            }
        }
    }
    out
}

/// One labeled row per pairwise intersection point, with the point's
/// coherence in each of the two families it belongs to.
pub fn intersections_tsv(cert: Option<&Certificate>) -> String {
    let mut out = String::from(
        "label\tfamily_a\tfamily_b\tcoherence_a_re\tcoherence_a_im\tcoherence_b_re\tcoherence_b_im\n",
    );
    if let Some(cert) = cert {
        for inter in &cert.pairwise {
            let IntersectionSet::Point { state, bell } = &inter.set else {
                continue;
            };
            let (Some(fa), Some(fb)) = (cert.family(&inter.families[0]), cert.family(&inter.families[1])) else {
                continue;
            };
            let (ca, cb) = (fa.coherence(state), fb.coherence(state));
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                bell.unwrap_or("point"),
                fa.id(),
                fb.id(),
                ca.re,
                ca.im,
                cb.re,
                cb.im
            );
        }
    }
    out
}

pub fn trace_tsv(opt: Option<&NotOptimum>) -> String {
    match opt {
        Some(o) => o.trace_tsv(),
        None => String::from("iteration\tobjective\tmin_eigenvalue\ttp_residual\n"),
    }
}

/// Writes the plot tables into `dir`. Sections the report lacks produce
/// header-only files.
pub fn emit_plot_data(report: &Report, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let out = &report.scenario.output;
    let files = [
        (&out.families, families_tsv(report.certificate.as_ref())),
        (&out.intersections, intersections_tsv(report.certificate.as_ref())),
        (&out.trace, trace_tsv(report.optimum.as_ref())),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes the rendered report and the plot tables into `dir`.
pub fn write_outputs(report: &Report, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut written = emit_plot_data(report, dir)?;
    let path = dir.join(&report.scenario.output.report);
    fs::write(&path, report.render())?;
    written.insert(0, path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    #[test]
    fn family_table_traces_half_circles() {
        let cert = verify_theorem1().unwrap();
        let t = families_tsv(Some(&cert));
        let rows: Vec<&str> = t.lines().skip(1).collect();
        assert_eq!(rows.len(), 3 * FAMILY_SAMPLES);
        for row in rows {
            let cols: Vec<f64> = row.split('\t').skip(2).map(|x| x.parse().unwrap()).collect();
            assert!((cols[0].hypot(cols[1]) - 0.5).abs() < 1e-12);
        }
        let i = intersections_tsv(Some(&cert));
        let labels: Vec<&str> = i.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(labels, vec!["phi+", "phi-", "psi+"]);
    }

    #[test]
    fn empty_sections_give_header_only_files() {
        assert_eq!(families_tsv(None).lines().count(), 1);
        assert_eq!(intersections_tsv(None).lines().count(), 1);
        assert_eq!(trace_tsv(None).lines().count(), 1);
    }

    #[test]
    fn identical_orders_classify_as_none() {
        let text = r#"
[state]
builtin = "psi-minus"

[[steps]]
order = "one"
party = "alice"
op = "measure-z"

[[steps]]
order = "one"
party = "bob"
op = "pauli-x"

[[steps]]
order = "two"
party = "bob"
op = "pauli-x"

[[steps]]
order = "two"
party = "alice"
op = "measure-z"

[analyses]
classify = ["one", "two"]
"#;
        let report = run_scenario(&parse_scenario(text).unwrap(), 1);
        let text = report.render();
        assert!(text.contains("level = none"), "{text}");
        assert_eq!(report.exit_status(), 0);
    }
}

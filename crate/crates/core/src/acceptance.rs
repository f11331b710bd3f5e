//! The acceptance suite, shared by the `selftest` command and the test target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::dynamics::{order_swap_residual, run, Operation, PureRule, StateMap, Step, TimeOrderedExperiment};
use crate::error::Result;
use crate::oracle::{self, brute_force_not_optimum, BruteForceConfig};
use crate::qcore::{c, max_abs_diff, random, trace_distance, Axis, CMatrix, DensityMatrix, Ket, Party, ProjectiveMeasurement};
use crate::taxonomy::{classify, correlation_table, reconstruct_state, Settings, ViolationLevel};
use crate::theorem::{membership, verify_theorem1, IntersectionSet, PhaseFamily};
use crate::unot::{optimize_universal_not, OptimizerConfig};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn result(id: u8, name: &'static str, outcome: Result<(bool, String)>) -> CriterionResult {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { id, name, passed, detail }
}

fn sub_seed(seed: u64, id: u8) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(id as u64)
}

/// Pairwise intersections are single Bell states and the triple is empty.
pub fn criterion_1() -> CriterionResult {
    result(1, "theorem certificate", (|| {
        let cert = verify_theorem1()?;
        let mut ok = cert.empty;
        let mut parts = Vec::new();
        let expected = [("phi+", Ket::phi_plus()), ("phi-", Ket::phi_minus()), ("psi+", Ket::psi_plus())];
        for (inter, (name, bell)) in cert.pairwise.iter().zip(expected) {
            match &inter.set {
                IntersectionSet::Point { state, .. } => {
                    let d = trace_distance(state, &bell.density())?;
                    ok &= d <= 1e-9 && inter.solution_dimension == 0;
                    parts.push(format!("{}={name} (distance {d:.3e})", inter.families.join("&")));
                }
                other => {
                    ok = false;
                    parts.push(format!("{}: {other:?}", inter.families.join("&")));
                }
            }
        }
        parts.push(format!(
            "triple empty={} (lp residual {:.6})",
            cert.triple.is_empty(),
            cert.lp_triple_residual
        ));
        Ok((ok, parts.join(", ")))
    })())
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Random mixture of one to four extreme states.
pub fn positive_instance(rng: &mut ChaCha8Rng, family: &PhaseFamily) -> Result<DensityMatrix> {
    let k = rng.gen_range(1..=4);
    let weights = dirichlet(rng, k);
    let mut m = CMatrix::zeros(4, 4);
    for w in weights {
        let phase = rng.gen_range(0.0..2.0 * PI);
        m += family.extreme_state(phase).projector() * c(w, 0.0);
    }
    DensityMatrix::new(m)
}

/// Largest deviation of `chi` from the family's linear constraints.
pub fn constraint_violation(chi: &DensityMatrix, family: &PhaseFamily) -> f64 {
    let b = family.in_family_basis(chi.matrix());
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j && i < 2 { 0.5 } else { 0.0 };
            if (i < 2 && j < 2) && i != j {
                continue;
            }
            worst = worst.max((b[(i, j)] - c(want, 0.0)).norm());
        }
    }
    worst
}

/// A valid state pushed off the family by at least `1e-6` in some constraint.
pub fn negative_instance(rng: &mut ChaCha8Rng, family: &PhaseFamily) -> Result<DensityMatrix> {
    loop {
        let base = positive_instance(rng, family)?;
        let w = family.basis();
        let candidate = match rng.gen_range(0..3) {
            // weight leaks into span{a₀⊗b₁, a₁⊗b₀}
            0 => {
                let eps = log_uniform(rng, 1e-6, 1e-1);
                let z = random::ket(rng, 2);
                let leak = CMatrix::from_fn(4, 1, |i, _| {
                    w[(i, 2)] * z.amplitude(0) + w[(i, 3)] * z.amplitude(1)
                });
                DensityMatrix::new(base.matrix() * c(1.0 - eps, 0.0) + &leak * leak.adjoint() * c(eps, 0.0))?
            }
            // unbalanced populations of u and v
            1 => {
                let delta = log_uniform(rng, 1e-6, 1e-1);
                let r = (0.25 - delta * delta).sqrt() * rng.gen::<f64>();
                let phase = rng.gen_range(0.0..2.0 * PI);
                let mut block = CMatrix::zeros(4, 4);
                block[(0, 0)] = c(0.5 + delta, 0.0);
                block[(1, 1)] = c(0.5 - delta, 0.0);
                block[(0, 1)] = c(r * phase.cos(), r * phase.sin());
                block[(1, 0)] = block[(0, 1)].conj();
                DensityMatrix::new(&w * block * w.adjoint())?
            }
            // generic noise
            _ => {
                let eps = log_uniform(rng, 1e-4, 0.5);
                let rank = rng.gen_range(1..=4);
                let noise = random::density(rng, 4, rank);
                DensityMatrix::new(base.matrix() * c(1.0 - eps, 0.0) + noise.matrix() * c(eps, 0.0))?
            }
        };
        if constraint_violation(&candidate, family) >= 1e-6 {
            return Ok(candidate);
        }
    }
}

/// Closed-form membership against the LP oracle on labeled instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleAgreement {
    pub instances: usize,
    pub disagreements: usize,
    pub mislabeled: usize,
}

pub fn membership_agreement(seed: u64, per_family: usize) -> Result<OracleAgreement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = OracleAgreement {
        instances: 0,
        disagreements: 0,
        mislabeled: 0,
    };
    for axis in Axis::ALL {
        let family = PhaseFamily::for_axis(axis);
        for k in 0..per_family {
            let expected = k % 2 == 0;
            let chi = if expected {
                positive_instance(&mut rng, &family)?
            } else {
                negative_instance(&mut rng, &family)?
            };
            let closed = membership(&chi, &family).member;
            let lp = oracle::family_membership_lp(&chi, &family)?.feasible;
            out.instances += 1;
            out.disagreements += (closed != lp) as usize;
            out.mislabeled += (closed != expected) as usize;
        }
    }
    Ok(out)
}

pub fn criterion_2(seed: u64) -> CriterionResult {
    result(2, "constraint sets", (|| {
        let mut worst: f64 = 0.0;
        for axis in Axis::ALL {
            let family = PhaseFamily::for_axis(axis);
            for k in 0..360 {
                let rho = family.extreme_state(2.0 * PI * k as f64 / 360.0).density();
                let d = family.dephase(&rho)?;
                worst = worst.max(max_abs_diff(d.matrix(), family.target().matrix()));
            }
        }
        let agreement = membership_agreement(sub_seed(seed, 2), 667)?;
        let ok = worst <= 1e-12 && agreement.instances >= 2000 && agreement.disagreements == 0 && agreement.mislabeled == 0;
        Ok((
            ok,
            format!(
                "max target error {worst:.3e}; {} instances, {} LP disagreements, {} mislabeled",
                agreement.instances, agreement.disagreements, agreement.mislabeled
            ),
        ))
    })())
}

fn random_linear_op(rng: &mut ChaCha8Rng) -> Operation {
    match rng.gen_range(0..3) {
        0 => StateMap::Unitary(random::unitary(rng, 2)).into(),
        1 => {
            let kraus = rng.gen_range(1..=4);
            StateMap::Cptp(random::channel(rng, kraus)).into()
        }
        _ => ProjectiveMeasurement::along(random::direction(rng))
            .expect("unit direction")
            .into(),
    }
}

/// Largest order-swap residual over `trials` random linear experiments.
pub fn linear_order_swap(seed: u64, trials: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let rank = rng.gen_range(1..=4);
        let initial = random::density(&mut rng, 4, rank);
        let mut alice = Vec::new();
        let mut bob = Vec::new();
        for (party, steps) in [(Party::Alice, &mut alice), (Party::Bob, &mut bob)] {
            for k in 0..rng.gen_range(1..=3) {
                steps.push(Step::new(party, random_linear_op(&mut rng)).labeled(format!("{}{k}", party.name())));
            }
        }
        let mut first = TimeOrderedExperiment::new(initial.clone(), "alice-first");
        let mut second = TimeOrderedExperiment::new(initial, "bob-first");
        for s in alice.iter().chain(&bob) {
            first = first.then(s.clone());
        }
        for s in bob.iter().chain(&alice) {
            second = second.then(s.clone());
        }
        worst = worst.max(order_swap_residual(&first, &second)?);
    }
    Ok(worst)
}

pub fn criterion_3(seed: u64) -> CriterionResult {
    result(3, "linear dynamics order invariance", (|| {
        let worst = linear_order_swap(sub_seed(seed, 3), 200)?;
        Ok((worst <= 1e-10, format!("200 experiments, max residual {worst:.3e}")))
    })())
}

fn eta(a: Ket, b: Ket) -> Result<DensityMatrix> {
    let u = Ket::product(&a, &a)?.projector();
    let v = Ket::product(&b, &b)?.projector();
    DensityMatrix::new((u + v) * c(0.5, 0.0))
}

pub fn criterion_4(seed: u64) -> CriterionResult {
    result(4, "violation taxonomy", (|| {
        let settings = Settings::pauli();
        let ez = eta(Ket::zero(), Ket::one())?;
        let ex = eta(Ket::plus(), Ket::minus())?;
        let case = classify(&ez, &ex, &settings)?;

        let g = |axis: Axis| {
            run(&TimeOrderedExperiment::new(DensityMatrix::singlet(), format!("measure-{}", axis.name())).step(Party::Alice, ProjectiveMeasurement::pauli(axis)).step(Party::Bob, StateMap::EnsembleMap(PureRule::ResetNonBasis)))
        };
        let (gz, gx) = (g(Axis::Z)?, g(Axis::X)?);
        let strong = classify(&gz, &gx, &settings)?;

        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 4));
        let mut weak = 0;
        for _ in 0..500 {
            let ra = rng.gen_range(1..=4);
            let a = random::density(&mut rng, 4, ra);
            let rb = rng.gen_range(1..=4);
            let b = random::density(&mut rng, 4, rb);
            weak += (classify(&a, &b, &settings)?.level == ViolationLevel::Weak) as usize;
        }
        let ok = case.level == ViolationLevel::Intermediate
            && case.recheck(&ez, &ex, &settings)?
            && strong.level == ViolationLevel::Strong
            && strong.recheck(&gz, &gx, &settings)?
            && weak == 0;
        Ok((
            ok,
            format!(
                "case I vs II: {}; g-map: {}; weak verdicts on 500 random pairs: {weak}",
                case.level, strong.level
            ),
        ))
    })())
}

pub fn criterion_5(seed: u64) -> CriterionResult {
    result(5, "tomography round trip", (|| {
        let settings = Settings::pauli();
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 5));
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let rank = rng.gen_range(1..=4);
            let rho = random::density(&mut rng, 4, rank);
            let back = reconstruct_state(&correlation_table(&rho, &settings)?)?;
            worst = worst.max(max_abs_diff(back.matrix(), rho.matrix()));
        }
        Ok((worst <= 1e-9, format!("200 states, max entry error {worst:.3e}")))
    })())
}

pub fn criterion_6(seed: u64) -> CriterionResult {
    result(6, "approximate NOT", (|| {
        let optimum = optimize_universal_not(&OptimizerConfig {
            seed: sub_seed(seed, 6),
            ..OptimizerConfig::default()
        })?;
        let (_, oracle_worst) = brute_force_not_optimum(&BruteForceConfig {
            seed: sub_seed(seed, 60),
            ..BruteForceConfig::default()
        })?;
        let found = optimum.score.worst;
        let gap = 1.0 - found;
        let ok = (found - oracle_worst).abs() <= 1e-3 && gap >= 0.3;
        Ok((
            ok,
            format!(
                "optimizer {found:.9} ({}; ascent alone {:.9}), oracle {oracle_worst:.9}, difference {:.3e}, gap to 1 {gap:.6}",
                optimum.strategy.name(),
                optimum.ascent_score.worst,
                (found - oracle_worst).abs()
            ),
        ))
    })())
}

/// Criteria 1 to 6.
pub fn run_criteria(seed: u64) -> Vec<CriterionResult> {
    vec![
        criterion_1(),
        criterion_2(seed),
        criterion_3(seed),
        criterion_4(seed),
        criterion_5(seed),
        criterion_6(seed),
    ]
}

pub fn render(seed: u64, results: &[CriterionResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "noflip {} selftest", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "seed = {seed}");
    for r in results {
        let _ = writeln!(out, "{}", r.line());
    }
    out
}

/// Full suite: criteria 1 to 6 run twice, criterion 7 compares the two
/// renderings byte for byte.
#[derive(Debug, Clone)]
pub struct Selftest {
    pub seed: u64,
    pub results: Vec<CriterionResult>,
    pub report: String,
}

impl Selftest {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

pub fn selftest(seed: u64) -> Selftest {
    let first = run_criteria(seed);
    let first_text = render(seed, &first);
    let second_text = render(seed, &run_criteria(seed));
    let same = first_text == second_text;
    let mut results = first;
    results.push(CriterionResult {
        id: 7,
        name: "determinism",
        passed: same,
        detail: format!(
            "two runs with seed {seed}: {}",
            if same { "byte-identical" } else { "reports differ" }
        ),
    });
    let report = render(seed, &results);
    Selftest { seed, results, report }
}

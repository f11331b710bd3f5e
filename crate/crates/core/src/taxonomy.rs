//! Grading how visible a time-order dependence is.
//!
//! Two final states that should agree but don't can differ in a single party's
//! statistics (strong: usable for signaling), only in product-measurement
//! correlations (intermediate), or only in ways no product measurement sees
//! (weak). With tomographically complete local settings the weak case cannot
//! occur for quantum states.

use nalgebra::DMatrix;
use std::fmt;

use crate::error::{Error, Result};
use crate::oracle::hermitian_coordinates;
use crate::qcore::{
    c, lift, pauli_basis, trace_distance, trace_product, Axis, CMatrix, DensityMatrix, Party,
    ProjectiveMeasurement,
};

/// Threshold above which two probabilities or states count as different.
pub const DIFFERS_TOL: f64 = 1e-9;

/// Local measurement choices for both parties.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub alice: Vec<ProjectiveMeasurement>,
    pub bob: Vec<ProjectiveMeasurement>,
}

impl Settings {
    /// σ_x, σ_y, σ_z on each side.
    pub fn pauli() -> Self {
        let all: Vec<_> = Axis::ALL.iter().map(|&a| ProjectiveMeasurement::pauli(a)).collect();
        Settings {
            alice: all.clone(),
            bob: all,
        }
    }

    pub fn new(alice: Vec<ProjectiveMeasurement>, bob: Vec<ProjectiveMeasurement>) -> Result<Self> {
        for m in alice.iter().chain(&bob) {
            if m.dim() != 2 {
                return Err(Error::InvalidMeasurement("settings must be qubit measurements".into()));
            }
        }
        if alice.is_empty() || bob.is_empty() {
            return Err(Error::InvalidMeasurement("each party needs at least one setting".into()));
        }
        Ok(Settings { alice, bob })
    }

    fn of(&self, party: Party) -> &[ProjectiveMeasurement] {
        match party {
            Party::Alice => &self.alice,
            Party::Bob => &self.bob,
        }
    }

    /// Whether the product effects span all 4×4 Hermitian operators.
    pub fn is_tomographically_complete(&self) -> bool {
        let mut cols = Vec::new();
        for x in &self.alice {
            for y in &self.bob {
                for p in x.projectors() {
                    for q in y.projectors() {
                        cols.push(hermitian_coordinates(&p.kronecker(q)));
                    }
                }
            }
        }
        let m = DMatrix::from_fn(16, cols.len(), |i, j| cols[j][i]);
        m.rank(1e-9) == 16
    }
}

fn setting_name(m: &ProjectiveMeasurement) -> String {
    Axis::ALL
        .iter()
        .find(|&&a| m.matches_pauli(a))
        .map(|a| a.name().to_string())
        .unwrap_or_else(|| match m.direction() {
            Some(r) => format!("n({:.6},{:.6},{:.6})", r[0], r[1], r[2]),
            None => "custom".into(),
        })
}

/// Joint outcome probabilities `p(a, b | x, y)` for every setting pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    settings: Settings,
    /// `probabilities[x][y][a][b]`
    probabilities: Vec<Vec<Vec<Vec<f64>>>>,
}

impl CorrelationTable {
    /// Builds a table from raw probabilities and checks normalization
    /// (1e-12) and no-signaling (1e-10).
    pub fn new(settings: Settings, probabilities: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        let table = CorrelationTable {
            settings,
            probabilities,
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        let (na, nb) = (self.settings.alice.len(), self.settings.bob.len());
        if self.probabilities.len() != na || self.probabilities.iter().any(|r| r.len() != nb) {
            return Err(Error::InvalidTable("shape does not match the settings".into()));
        }
        for x in 0..na {
            for y in 0..nb {
                let p = &self.probabilities[x][y];
                let (ka, kb) = (self.settings.alice[x].len(), self.settings.bob[y].len());
                if p.len() != ka || p.iter().any(|r| r.len() != kb) {
                    return Err(Error::InvalidTable(format!("setting ({x},{y}) has the wrong outcome count")));
                }
                if p.iter().flatten().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
                    return Err(Error::InvalidTable(format!("setting ({x},{y}) has a probability outside [0,1]")));
                }
                let total: f64 = p.iter().flatten().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidTable(format!("setting ({x},{y}) sums to {total}")));
                }
            }
        }
        for x in 0..na {
            for y in 1..nb {
                for a in 0..self.settings.alice[x].len() {
                    let d = (self.marginal_at(Party::Alice, x, y, a) - self.marginal_at(Party::Alice, x, 0, a)).abs();
                    if d > 1e-10 {
                        return Err(Error::InvalidTable(format!("Alice's marginal depends on Bob's setting ({d:e})")));
                    }
                }
            }
        }
        for y in 0..nb {
            for x in 1..na {
                for b in 0..self.settings.bob[y].len() {
                    let d = (self.marginal_at(Party::Bob, x, y, b) - self.marginal_at(Party::Bob, 0, y, b)).abs();
                    if d > 1e-10 {
                        return Err(Error::InvalidTable(format!("Bob's marginal depends on Alice's setting ({d:e})")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    /// `p(a, b | x, y)`
    pub fn probability(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.probabilities[x][y][a][b]
    }

    pub fn joint(&self, x: usize, y: usize) -> &[Vec<f64>] {
        &self.probabilities[x][y]
    }

    fn marginal_at(&self, party: Party, x: usize, y: usize, outcome: usize) -> f64 {
        let p = &self.probabilities[x][y];
        match party {
            Party::Alice => p[outcome].iter().sum(),
            Party::Bob => p.iter().map(|row| row[outcome]).sum(),
        }
    }

    /// Marginal distribution of `party` for its setting `index`.
    pub fn marginal(&self, party: Party, index: usize) -> Vec<f64> {
        let n = self.settings.of(party)[index].len();
        (0..n)
            .map(|k| match party {
                Party::Alice => self.marginal_at(party, index, 0, k),
                Party::Bob => self.marginal_at(party, 0, index, k),
            })
            .collect()
    }

    /// `Σ (−1)^{a+b} p(a, b | x, y)` for two-outcome settings.
    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        let p = &self.probabilities[x][y];
        let mut acc = 0.0;
        for (a, row) in p.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                acc += if (a + b) % 2 == 0 { *v } else { -*v };
            }
        }
        acc
    }
}

/// Born-rule table of `rho` for all product settings.
pub fn correlation_table(rho: &DensityMatrix, settings: &Settings) -> Result<CorrelationTable> {
    rho.require_dim(4)?;
    let probabilities = settings
        .alice
        .iter()
        .map(|x| {
            settings
                .bob
                .iter()
                .map(|y| {
                    x.projectors()
                        .iter()
                        .map(|p| {
                            y.projectors()
                                .iter()
                                .map(|q| trace_product(&p.kronecker(q), rho.matrix()).clamp(0.0, 1.0))
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    CorrelationTable::new(settings.clone(), probabilities)
}

/// Rebuilds the state from a table containing all three Pauli settings per
/// party: `ρ = ¼ Σ T_μν σ_μ ⊗ σ_ν`.
pub fn reconstruct_state(table: &CorrelationTable) -> Result<DensityMatrix> {
    let find = |party: Party, axis: Axis| -> Result<usize> {
        table
            .settings
            .of(party)
            .iter()
            .position(|m| m.matches_pauli(axis))
            .ok_or_else(|| Error::InvalidTable(format!("no σ_{} setting for {}", axis.name(), party.name())))
    };
    let mut ax = [0; 3];
    let mut by = [0; 3];
    for (k, &axis) in Axis::ALL.iter().enumerate() {
        ax[k] = find(Party::Alice, axis)?;
        by[k] = find(Party::Bob, axis)?;
    }
    let expectation = |probs: &[f64]| probs[0] - probs[1];
    let mut t = [[0.0; 4]; 4];
    t[0][0] = 1.0;
    for k in 0..3 {
        t[k + 1][0] = expectation(&table.marginal(Party::Alice, ax[k]));
        t[0][k + 1] = expectation(&table.marginal(Party::Bob, by[k]));
        for l in 0..3 {
            t[k + 1][l + 1] = table.correlator(ax[k], by[l]);
        }
    }
    let p = pauli_basis();
    let mut m = CMatrix::zeros(4, 4);
    for (mu, row) in t.iter().enumerate() {
        for (nu, &coef) in row.iter().enumerate() {
            m += p[mu].kronecker(&p[nu]) * c(coef / 4.0, 0.0);
        }
    }
    DensityMatrix::new(m).map_err(|e| Error::NonQuantumTable(format!("reconstruction is not a state: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationLevel {
    None,
    Weak,
    Intermediate,
    Strong,
}

impl ViolationLevel {
    pub fn name(self) -> &'static str {
        match self {
            ViolationLevel::None => "none",
            ViolationLevel::Weak => "weak",
            ViolationLevel::Intermediate => "intermediate",
            ViolationLevel::Strong => "strong",
        }
    }
}

impl fmt::Display for ViolationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    /// One party's outcome probability under one of its settings.
    Marginal {
        party: Party,
        setting: usize,
        outcome: usize,
        first: f64,
        second: f64,
    },
    /// A joint outcome probability under a product setting.
    Joint {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
        first: f64,
        second: f64,
    },
    TraceDistance(f64),
    /// Largest trace distance found; below threshold.
    Identical(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationVerdict {
    pub level: ViolationLevel,
    pub evidence: Evidence,
    /// Set when the settings could not pin down the states.
    pub relative_to_settings: bool,
    /// Difference threshold the verdict was made with.
    pub threshold: f64,
}

impl ViolationVerdict {
    /// Recomputes the evidence from the states and checks it still shows the
    /// claimed difference.
    pub fn recheck(&self, first: &DensityMatrix, second: &DensityMatrix, settings: &Settings) -> Result<bool> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        Ok(match self.evidence {
            Evidence::Marginal { party, setting, outcome, first: p, second: q } => {
                let m = &settings.of(party)[setting].projectors()[outcome];
                let op = lift(m, party);
                let (p2, q2) = (trace_product(&op, first.matrix()), trace_product(&op, second.matrix()));
                close(p, p2) && close(q, q2) && (p2 - q2).abs() > self.threshold
            }
            Evidence::Joint { x, y, a, b, first: p, second: q } => {
                let op = settings.alice[x].projectors()[a].kronecker(&settings.bob[y].projectors()[b]);
                let (p2, q2) = (trace_product(&op, first.matrix()), trace_product(&op, second.matrix()));
                close(p, p2) && close(q, q2) && (p2 - q2).abs() > self.threshold
            }
            Evidence::TraceDistance(d) => {
                let d2 = trace_distance(first, second)?;
                close(d, d2) && d2 > self.threshold
            }
            Evidence::Identical(d) => {
                let d2 = trace_distance(first, second)?;
                close(d, d2) && d2 <= self.threshold
            }
        })
    }

    /// Success probability of guessing the time order from one run, using
    /// only the witnessing party's local outcome: `½ + ½·TV`.
    pub fn signaling_success(&self, first: &DensityMatrix, second: &DensityMatrix, settings: &Settings) -> Option<f64> {
        let Evidence::Marginal { party, setting, .. } = self.evidence else {
            return None;
        };
        let m = &settings.of(party)[setting];
        let tv: f64 = m
            .projectors()
            .iter()
            .map(|p| {
                let op = lift(p, party);
                (trace_product(&op, first.matrix()) - trace_product(&op, second.matrix())).abs()
            })
            .sum::<f64>()
            / 2.0;
        Some(0.5 + 0.5 * tv)
    }

    pub fn describe(&self, settings: &Settings) -> String {
        let base = match &self.evidence {
            Evidence::Marginal { party, setting, outcome, first, second } => format!(
                "{} marginal differs: setting {} outcome {outcome}: {first} vs {second}",
                party.name(),
                setting_name(&settings.of(*party)[*setting])
            ),
            Evidence::Joint { x, y, a, b, first, second } => format!(
                "joint statistics differ: settings ({},{}) outcomes ({a},{b}): {first} vs {second}",
                setting_name(&settings.alice[*x]),
                setting_name(&settings.bob[*y])
            ),
            Evidence::TraceDistance(d) => format!("states differ only globally: trace distance {d}"),
            Evidence::Identical(d) => format!("states agree: trace distance {d}"),
        };
        if self.relative_to_settings {
            format!("{base} (relative to given settings)")
        } else {
            base
        }
    }
}

/// Grades the difference between the final states of two time orders.
pub fn classify(first: &DensityMatrix, second: &DensityMatrix, settings: &Settings) -> Result<ViolationVerdict> {
    classify_with_tol(first, second, settings, DIFFERS_TOL)
}

/// [`classify`] with a custom difference threshold.
pub fn classify_with_tol(
    first: &DensityMatrix,
    second: &DensityMatrix,
    settings: &Settings,
    tol: f64,
) -> Result<ViolationVerdict> {
    first.require_dim(4)?;
    second.require_dim(4)?;
    let relative_to_settings = !settings.is_tomographically_complete();
    let verdict = |level, evidence| ViolationVerdict {
        level,
        evidence,
        relative_to_settings,
        threshold: tol,
    };

    let mut best: Option<(f64, Evidence)> = None;
    let consider = |diff: f64, ev: Evidence, best: &mut Option<(f64, Evidence)>| {
        if diff > tol && best.as_ref().is_none_or(|(d, _)| diff > *d) {
            *best = Some((diff, ev));
        }
    };

    for party in [Party::Alice, Party::Bob] {
        for (setting, m) in settings.of(party).iter().enumerate() {
            for (outcome, p) in m.projectors().iter().enumerate() {
                let op = lift(p, party);
                let (a, b) = (trace_product(&op, first.matrix()), trace_product(&op, second.matrix()));
                consider(
                    (a - b).abs(),
                    Evidence::Marginal { party, setting, outcome, first: a, second: b },
                    &mut best,
                );
            }
        }
    }
    if let Some((_, ev)) = best.take() {
        return Ok(verdict(ViolationLevel::Strong, ev));
    }

    for (x, mx) in settings.alice.iter().enumerate() {
        for (y, my) in settings.bob.iter().enumerate() {
            for (a, p) in mx.projectors().iter().enumerate() {
                for (b, q) in my.projectors().iter().enumerate() {
                    let op = p.kronecker(q);
                    let (pa, pb) = (trace_product(&op, first.matrix()), trace_product(&op, second.matrix()));
                    consider(
                        (pa - pb).abs(),
                        Evidence::Joint { x, y, a, b, first: pa, second: pb },
                        &mut best,
                    );
                }
            }
        }
    }
    if let Some((_, ev)) = best {
        return Ok(verdict(ViolationLevel::Intermediate, ev));
    }

    let d = trace_distance(first, second)?;
    if d > tol {
        Ok(verdict(ViolationLevel::Weak, Evidence::TraceDistance(d)))
    } else {
        Ok(verdict(ViolationLevel::None, Evidence::Identical(d)))
    }
}

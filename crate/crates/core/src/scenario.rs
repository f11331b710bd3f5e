//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "case-one"            # optional
//!
//! [state]
//! builtin = "psi-minus"        # psi-minus | phi-plus | product | maximally-mixed
//! # or an explicit matrix instead of `builtin`:
//! # matrix.re = [[...4 rows of 4...]]
//! # matrix.im = [[...]]        # optional
//!
//! [[steps]]                    # applied in file order within each `order`
//! order = "alice-first"
//! party = "alice"              # alice | bob
//! op = "measure-z"
//!
//! [analyses]
//! theorem1 = true
//! classify = ["alice-first", "bob-first"]
//! optimize-not = true
//!
//! [tolerances]                 # all optional
//! differs = 1e-9
//!
//! [output]
//! report = "report.txt"
//! ```
//!
//! Step operations: `measure-x`, `measure-y`, `measure-z`, `measure` (with
//! `direction = [x, y, z]`), `flip`, `reset-nonbasis`, `identity`,
//! `pauli-x`, `pauli-y`, `pauli-z`, `unitary` (with a 2×2 `matrix`),
//! `channel` (with a 4×4 Choi `matrix`), `depolarize` (with `p`) and
//! `flip-hypothesis` (with the 4×4 joint state `matrix` the device is assumed
//! to produce from the singlet). An optional `label` names the step; two
//! orders are compared as reorderings when their labels match.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;
use toml::Spanned;

use crate::dynamics::{Operation, PureRule, StateMap, Step, TimeOrderedExperiment};
use crate::qcore::{
    c, Axis, CMatrix, ChoiMatrix, DensityMatrix, Ket, Party, ProjectiveMeasurement,
};

/// One problem found while reading a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ScenarioError {
    pub issues: Vec<Issue>,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, issue) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    PsiMinus,
    PhiPlus,
    /// `|00⟩`
    Product,
    MaximallyMixed,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::PsiMinus,
        Builtin::PhiPlus,
        Builtin::Product,
        Builtin::MaximallyMixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::PsiMinus => "psi-minus",
            Builtin::PhiPlus => "phi-plus",
            Builtin::Product => "product",
            Builtin::MaximallyMixed => "maximally-mixed",
        }
    }

    pub fn state(self) -> DensityMatrix {
        match self {
            Builtin::PsiMinus => DensityMatrix::singlet(),
            Builtin::PhiPlus => Ket::phi_plus().density(),
            Builtin::Product => Ket::product(&Ket::zero(), &Ket::zero())
                .expect("qubits")
                .density(),
            Builtin::MaximallyMixed => DensityMatrix::maximally_mixed(4).expect("dimension 4"),
        }
    }
}

/// Real and imaginary parts, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        let im: Vec<Vec<f64>> = rows(|z| z.im);
        MatrixSpec {
            re: rows(|z| z.re),
            im: im.iter().flatten().any(|v| *v != 0.0).then_some(im),
        }
    }

    fn to_matrix(&self, n: usize) -> Result<CMatrix, String> {
        let check = |rows: &Vec<Vec<f64>>, part: &str| -> Result<(), String> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(format!("{part} part must be {n}x{n}"));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(format!("{part} part has a non-finite entry"));
            }
            Ok(())
        };
        check(&self.re, "real")?;
        if let Some(im) = &self.im {
            check(im, "imaginary")?;
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            c(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Builtin(Builtin),
    Matrix(MatrixSpec),
}

impl StateSpec {
    pub fn state(&self) -> crate::Result<DensityMatrix> {
        match self {
            StateSpec::Builtin(b) => Ok(b.state()),
            StateSpec::Matrix(m) => DensityMatrix::new(
                m.to_matrix(4)
                    .map_err(crate::Error::InvalidMeasurement)?,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpSpec {
    Measure(Axis),
    MeasureAlong([f64; 3]),
    Flip,
    ResetNonBasis,
    Identity,
    Pauli(Axis),
    Unitary(MatrixSpec),
    Channel(MatrixSpec),
    Depolarize(f64),
    FlipHypothesis(MatrixSpec),
}

impl OpSpec {
    fn keyword(&self) -> String {
        match self {
            OpSpec::Measure(a) => format!("measure-{}", a.name()),
            OpSpec::MeasureAlong(_) => "measure".into(),
            OpSpec::Flip => "flip".into(),
            OpSpec::ResetNonBasis => "reset-nonbasis".into(),
            OpSpec::Identity => "identity".into(),
            OpSpec::Pauli(a) => format!("pauli-{}", a.name()),
            OpSpec::Unitary(_) => "unitary".into(),
            OpSpec::Channel(_) => "channel".into(),
            OpSpec::Depolarize(_) => "depolarize".into(),
            OpSpec::FlipHypothesis(_) => "flip-hypothesis".into(),
        }
    }

    pub fn operation(&self) -> crate::Result<Operation> {
        Ok(match self {
            OpSpec::Measure(a) => ProjectiveMeasurement::pauli(*a).into(),
            OpSpec::MeasureAlong(n) => ProjectiveMeasurement::along(*n)?.into(),
            OpSpec::Flip => StateMap::EnsembleMap(PureRule::Orthogonal).into(),
            OpSpec::ResetNonBasis => StateMap::EnsembleMap(PureRule::ResetNonBasis).into(),
            OpSpec::Identity => StateMap::identity().into(),
            OpSpec::Pauli(a) => StateMap::pauli(*a).into(),
            OpSpec::Unitary(m) => StateMap::unitary(
                m.to_matrix(2).map_err(crate::Error::InvalidChannel)?,
            )?
            .into(),
            OpSpec::Channel(m) => StateMap::Cptp(ChoiMatrix::new(
                m.to_matrix(4).map_err(crate::Error::InvalidChannel)?,
            )?)
            .into(),
            OpSpec::Depolarize(p) => StateMap::Cptp(ChoiMatrix::depolarizing(*p)?).into(),
            OpSpec::FlipHypothesis(m) => StateMap::flip_hypothesis(DensityMatrix::new(
                m.to_matrix(4).map_err(crate::Error::InvalidChannel)?,
            )?)?
            .into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSpec {
    pub order: String,
    pub party: Party,
    pub op: OpSpec,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Analyses {
    pub theorem1: bool,
    /// Two order labels whose final states are compared.
    pub classify: Option<(String, String)>,
    pub optimize_not: bool,
}

/// Thresholds used by the report's self-checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Probability or trace-distance difference counted as a violation.
    pub differs: f64,
    /// Trace distance between an intersection point and its Bell state.
    pub bell: f64,
    /// Entrywise error of dephased extreme states against the target.
    pub target: f64,
    /// Allowed gap between optimizer and brute-force oracle.
    pub optimum_match: f64,
    /// Required distance of the optimal flip fidelity below 1.
    pub not_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            differs: 1e-9,
            bell: 1e-9,
            target: 1e-12,
            optimum_match: 1e-3,
            not_gap: 0.3,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 5] = ["differs", "bell", "target", "optimum-match", "not-gap"];

    /// Sets one tolerance by key. Values must be finite and positive.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance '{key}' must be a positive number, got {value}"));
        }
        let slot = match key {
            "differs" => &mut self.differs,
            "bell" => &mut self.bell,
            "target" => &mut self.target,
            "optimum-match" => &mut self.optimum_match,
            "not-gap" => &mut self.not_gap,
            other => {
                return Err(format!(
                    "unknown tolerance '{other}' (expected one of {})",
                    Self::KEYS.join(", ")
                ))
            }
        };
        *slot = value;
        Ok(())
    }

    fn get(&self, key: &str) -> f64 {
        match key {
            "differs" => self.differs,
            "bell" => self.bell,
            "target" => self.target,
            "optimum-match" => self.optimum_match,
            _ => self.not_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub report: String,
    pub families: String,
    pub intersections: String,
    pub trace: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            report: "report.txt".into(),
            families: "families.tsv".into(),
            intersections: "intersections.tsv".into(),
            trace: "optimization_trace.tsv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub state: StateSpec,
    pub steps: Vec<StepSpec>,
    pub analyses: Analyses,
    pub tolerances: Tolerances,
    pub output: OutputSpec,
}

impl Scenario {
    /// Order labels in order of first appearance.
    pub fn orders(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.steps {
            if !out.contains(&s.order) {
                out.push(s.order.clone());
            }
        }
        out
    }

    /// The experiment for one order label.
    pub fn experiment(&self, order: &str) -> crate::Result<TimeOrderedExperiment> {
        let mut exp = TimeOrderedExperiment::new(self.state.state()?, order);
        for s in self.steps.iter().filter(|s| s.order == order) {
            let mut step = Step::new(s.party, s.op.operation()?);
            if let Some(label) = &s.label {
                step = step.labeled(label.clone());
            }
            exp = exp.then(step);
        }
        Ok(exp)
    }
}

// Wire format.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    state: Spanned<RawState>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    steps: Vec<RawStep>,
    #[serde(default)]
    analyses: RawAnalyses,
    #[serde(default, skip_serializing_if = "RawTolerances::is_empty")]
    tolerances: RawTolerances,
    #[serde(default, skip_serializing_if = "RawOutput::is_empty")]
    output: RawOutput,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    builtin: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Spanned<MatrixSpec>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    order: Spanned<String>,
    party: Spanned<String>,
    op: Spanned<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Spanned<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Spanned<MatrixSpec>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct RawAnalyses {
    #[serde(default)]
    theorem1: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classify: Option<Spanned<Vec<String>>>,
    #[serde(default)]
    optimize_not: bool,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct RawTolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    differs: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bell: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optimum_match: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    not_gap: Option<Spanned<f64>>,
}

impl RawTolerances {
    fn is_empty(&self) -> bool {
        self.entries().iter().all(|(_, v)| v.is_none())
    }

    fn entries(&self) -> [(&'static str, &Option<Spanned<f64>>); 5] {
        [
            ("differs", &self.differs),
            ("bell", &self.bell),
            ("target", &self.target),
            ("optimum-match", &self.optimum_match),
            ("not-gap", &self.not_gap),
        ]
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    families: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intersections: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
}

impl RawOutput {
    fn is_empty(&self) -> bool {
        self.report.is_none()
            && self.families.is_none()
            && self.intersections.is_none()
            && self.trace.is_none()
    }
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn at(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0[..end].matches('\n').count() + 1
    }
}

fn spanned<T>(value: T) -> Spanned<T> {
    Spanned::new(0..0, value)
}

/// Parses and validates a scenario, collecting every problem found.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let lines = Lines(text);
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError {
        issues: vec![Issue {
            line: e.span().map_or(1, |s| lines.at(s)),
            message: e.message().trim().to_string(),
        }],
    })?;
    let mut issues = Vec::new();
    let mut issue = |span: Range<usize>, message: String| {
        issues.push(Issue {
            line: lines.at(span),
            message,
        })
    };

    let state_span = raw.state.span();
    let raw_state = raw.state.into_inner();
    let state = match (raw_state.builtin, raw_state.matrix) {
        (Some(b), None) => match Builtin::ALL.iter().find(|x| x.name() == b.get_ref()) {
            Some(x) => Some(StateSpec::Builtin(*x)),
            None => {
                issue(
                    b.span(),
                    format!(
                        "unknown builtin state '{}' (expected one of {})",
                        b.get_ref(),
                        Builtin::ALL.map(|x| x.name()).join(", ")
                    ),
                );
                None
            }
        },
        (None, Some(m)) => {
            let span = m.span();
            let spec = m.into_inner();
            match spec.to_matrix(4).map(DensityMatrix::new) {
                Err(msg) => {
                    issue(span, format!("state matrix: {msg}"));
                    None
                }
                Ok(Err(e)) => {
                    issue(span, format!("state matrix is not a density matrix: {e}"));
                    None
                }
                Ok(Ok(_)) => Some(StateSpec::Matrix(spec)),
            }
        }
        (Some(b), Some(_)) => {
            issue(b.span(), "give either 'builtin' or 'matrix', not both".into());
            None
        }
        (None, None) => {
            issue(state_span, "[state] needs 'builtin' or 'matrix'".into());
            None
        }
    };

    let mut steps = Vec::new();
    for raw_step in raw.steps {
        let party = match raw_step.party.get_ref().as_str() {
            "alice" => Some(Party::Alice),
            "bob" => Some(Party::Bob),
            other => {
                issue(
                    raw_step.party.span(),
                    format!("unknown party '{other}' (expected alice or bob)"),
                );
                None
            }
        };
        let op_span = raw_step.op.span();
        let keyword = raw_step.op.get_ref().as_str();
        let need_matrix = |m: &Option<Spanned<MatrixSpec>>,
                           n: usize,
                           issue: &mut dyn FnMut(Range<usize>, String)|
         -> Option<MatrixSpec> {
            match m {
                None => {
                    issue(op_span.clone(), format!("op '{keyword}' needs a {n}x{n} 'matrix'"));
                    None
                }
                Some(m) => match m.get_ref().to_matrix(n) {
                    Ok(_) => Some(m.get_ref().clone()),
                    Err(msg) => {
                        issue(m.span(), format!("matrix: {msg}"));
                        None
                    }
                },
            }
        };
        let op = match keyword {
            "measure-x" => Some(OpSpec::Measure(Axis::X)),
            "measure-y" => Some(OpSpec::Measure(Axis::Y)),
            "measure-z" => Some(OpSpec::Measure(Axis::Z)),
            "pauli-x" => Some(OpSpec::Pauli(Axis::X)),
            "pauli-y" => Some(OpSpec::Pauli(Axis::Y)),
            "pauli-z" => Some(OpSpec::Pauli(Axis::Z)),
            "flip" => Some(OpSpec::Flip),
            "reset-nonbasis" => Some(OpSpec::ResetNonBasis),
            "identity" => Some(OpSpec::Identity),
            "measure" => match &raw_step.direction {
                Some(d) if d.get_ref().len() == 3 => {
                    let v = d.get_ref();
                    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    if (n - 1.0).abs() > 1e-9 {
                        issue(d.span(), format!("direction must be a unit vector (norm {n})"));
                        None
                    } else {
                        Some(OpSpec::MeasureAlong([v[0], v[1], v[2]]))
                    }
                }
                Some(d) => {
                    issue(d.span(), "direction needs three components".into());
                    None
                }
                None => {
                    issue(op_span.clone(), "op 'measure' needs 'direction = [x, y, z]'".into());
                    None
                }
            },
            "depolarize" => match &raw_step.p {
                Some(p) if (0.0..=1.0).contains(p.get_ref()) => Some(OpSpec::Depolarize(*p.get_ref())),
                Some(p) => {
                    issue(p.span(), format!("'p' must lie in [0, 1], got {}", p.get_ref()));
                    None
                }
                None => {
                    issue(op_span.clone(), "op 'depolarize' needs 'p'".into());
                    None
                }
            },
            "unitary" => need_matrix(&raw_step.matrix, 2, &mut issue).map(OpSpec::Unitary),
            "channel" => need_matrix(&raw_step.matrix, 4, &mut issue).map(OpSpec::Channel),
            "flip-hypothesis" => need_matrix(&raw_step.matrix, 4, &mut issue).map(OpSpec::FlipHypothesis),
            other => {
                issue(op_span.clone(), format!("unknown op '{other}'"));
                None
            }
        };
        let uses_direction = keyword == "measure";
        let uses_p = keyword == "depolarize";
        let uses_matrix = matches!(keyword, "unitary" | "channel" | "flip-hypothesis");
        if let (Some(d), false) = (&raw_step.direction, uses_direction) {
            issue(d.span(), format!("'direction' does not apply to op '{keyword}'"));
        }
        if let (Some(p), false) = (&raw_step.p, uses_p) {
            issue(p.span(), format!("'p' does not apply to op '{keyword}'"));
        }
        if let (Some(m), false) = (&raw_step.matrix, uses_matrix) {
            issue(m.span(), format!("'matrix' does not apply to op '{keyword}'"));
        }
        // Validate the operation itself (unitarity, CPTP, state validity).
        if let Some(op) = &op {
            if let Err(e) = op.operation() {
                let span = raw_step.matrix.as_ref().map_or(op_span.clone(), |m| m.span());
                issue(span, format!("op '{keyword}': {e}"));
            }
        }
        if raw_step.order.get_ref().is_empty() {
            issue(raw_step.order.span(), "order label must not be empty".into());
        }
        if let (Some(party), Some(op)) = (party, op) {
            steps.push(StepSpec {
                order: raw_step.order.into_inner(),
                party,
                op,
                label: raw_step.label,
            });
        }
    }

    let mut orders: Vec<&str> = Vec::new();
    for s in &steps {
        if !orders.contains(&s.order.as_str()) {
            orders.push(&s.order);
        }
    }
    let classify = match raw.analyses.classify {
        None => None,
        Some(pair) => {
            let span = pair.span();
            let pair = pair.into_inner();
            if pair.len() != 2 {
                issue(span, format!("'classify' needs exactly two order labels, got {}", pair.len()));
                None
            } else {
                for o in &pair {
                    if !orders.contains(&o.as_str()) {
                        issue(span.clone(), format!("'classify' names order '{o}' which has no steps"));
                    }
                }
                Some((pair[0].clone(), pair[1].clone()))
            }
        }
    };

    let mut tolerances = Tolerances::default();
    for (key, value) in raw.tolerances.entries() {
        if let Some(v) = value {
            if let Err(msg) = tolerances.set(key, *v.get_ref()) {
                issue(v.span(), msg);
            }
        }
    }

    let defaults = OutputSpec::default();
    let output = OutputSpec {
        report: raw.output.report.unwrap_or(defaults.report),
        families: raw.output.families.unwrap_or(defaults.families),
        intersections: raw.output.intersections.unwrap_or(defaults.intersections),
        trace: raw.output.trace.unwrap_or(defaults.trace),
    };

    if !issues.is_empty() {
        issues.sort_by_key(|i| i.line);
        return Err(ScenarioError { issues });
    }
    Ok(Scenario {
        name: raw.name,
        state: state.expect("no issues implies a state"),
        steps,
        analyses: Analyses {
            theorem1: raw.analyses.theorem1,
            classify,
            optimize_not: raw.analyses.optimize_not,
        },
        tolerances,
        output,
    })
}

/// Writes a scenario back to TOML; [`parse_scenario`] inverts it.
pub fn serialize_scenario(s: &Scenario) -> String {
    let state = match &s.state {
        StateSpec::Builtin(b) => RawState {
            builtin: Some(spanned(b.name().to_string())),
            matrix: None,
        },
        StateSpec::Matrix(m) => RawState {
            builtin: None,
            matrix: Some(spanned(m.clone())),
        },
    };
    let steps = s
        .steps
        .iter()
        .map(|st| {
            let (direction, p, matrix) = match &st.op {
                OpSpec::MeasureAlong(n) => (Some(spanned(n.to_vec())), None, None),
                OpSpec::Depolarize(p) => (None, Some(spanned(*p)), None),
                OpSpec::Unitary(m) | OpSpec::Channel(m) | OpSpec::FlipHypothesis(m) => {
                    (None, None, Some(spanned(m.clone())))
                }
                _ => (None, None, None),
            };
            RawStep {
                order: spanned(st.order.clone()),
                party: spanned(st.party.name().to_lowercase()),
                op: spanned(st.op.keyword()),
                label: st.label.clone(),
                direction,
                p,
                matrix,
            }
        })
        .collect();
    let defaults = Tolerances::default();
    let tol = |key: &str| {
        let v = s.tolerances.get(key);
        (v != defaults.get(key)).then(|| spanned(v))
    };
    let out_defaults = OutputSpec::default();
    let out = |v: &String, d: &String| (v != d).then(|| v.clone());
    let raw = RawScenario {
        name: s.name.clone(),
        state: spanned(state),
        steps,
        analyses: RawAnalyses {
            theorem1: s.analyses.theorem1,
            classify: s
                .analyses
                .classify
                .as_ref()
                .map(|(a, b)| spanned(vec![a.clone(), b.clone()])),
            optimize_not: s.analyses.optimize_not,
        },
        tolerances: RawTolerances {
            differs: tol("differs"),
            bell: tol("bell"),
            target: tol("target"),
            optimum_match: tol("optimum-match"),
            not_gap: tol("not-gap"),
        },
        output: RawOutput {
            report: out(&s.output.report, &out_defaults.report),
            families: out(&s.output.families, &out_defaults.families),
            intersections: out(&s.output.intersections, &out_defaults.intersections),
            trace: out(&s.output.trace, &out_defaults.trace),
        },
    };
    toml::to_string(&raw).expect("scenario serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[state]\nbuiltin = \"psi-minus\"\n\n[analyses]\ntheorem1 = true\n";

    #[test]
    fn minimal_document_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.state, StateSpec::Builtin(Builtin::PsiMinus));
        assert!(s.analyses.theorem1 && !s.analyses.optimize_not);
        assert!(s.steps.is_empty());
        assert_eq!(s.tolerances, Tolerances::default());
        assert_eq!(s.output, OutputSpec::default());
    }

    #[test]
    fn non_psd_matrix_names_the_eigenvalue() {
        let text = "[state]\nmatrix.re = [[0.6, 0.0, 0.0, 0.0], [0.0, 0.6, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, -0.2]]\n";
        let err = parse_scenario(text).unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert_eq!(err.issues[0].line, 2);
        assert!(err.issues[0].message.contains("-0.2"), "{}", err.issues[0].message);
    }

    #[test]
    fn unknown_keys_and_ops_are_located() {
        let err = parse_scenario("[state]\nbuiltin = \"psi-minus\"\ncolour = 3\n").unwrap_err();
        assert_eq!(err.issues[0].line, 3);
        let text = "[state]\nbuiltin = \"psi-minus\"\n\n[[steps]]\norder = \"a\"\nparty = \"carol\"\nop = \"teleport\"\n";
        let err = parse_scenario(text).unwrap_err();
        let lines: Vec<usize> = err.issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![6, 7]);
    }

    #[test]
    fn invalid_tolerance_is_located() {
        let err = parse_scenario("[state]\nbuiltin = \"product\"\n[tolerances]\ndiffers = -1.0\n").unwrap_err();
        assert_eq!(err.issues[0].line, 4);
        let err = parse_scenario("[state]\nbuiltin = \"product\"\n[tolerances]\nwhatever = 1.0\n").unwrap_err();
        assert_eq!(err.issues[0].line, 4);
    }

    #[test]
    fn round_trip() {
        let text = r#"
name = "mixed bag"

[state]
matrix.re = [[0.5, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.5]]

[[steps]]
order = "one"
party = "alice"
op = "measure"
direction = [0.0, 0.6, 0.8]

[[steps]]
order = "one"
party = "bob"
op = "depolarize"
p = 0.25
label = "noise"

[[steps]]
order = "two"
party = "bob"
op = "unitary"
matrix.re = [[0.0, 1.0], [1.0, 0.0]]

[[steps]]
order = "two"
party = "alice"
op = "flip-hypothesis"
matrix.re = [[0.5, 0.0, 0.0, 0.5], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.5, 0.0, 0.0, 0.5]]

[analyses]
classify = ["one", "two"]
optimize-not = true

[tolerances]
differs = 1e-8

[output]
report = "r.txt"
"#;
        let s = parse_scenario(text).unwrap();
        let again = parse_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(s, again);
        let min = parse_scenario(MINIMAL).unwrap();
        assert_eq!(parse_scenario(&serialize_scenario(&min)).unwrap(), min);
    }
}

//! Local operations and two-party experiments executed in a chosen time order.
//!
//! The flip device never gets a global action derived from linearity. It acts
//! either through an explicit ensemble whose members have a pure factor on the
//! device's side, or through a `BlackBoxJoint` table that states a hypothesis
//! for its action on a specific joint input.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::qcore::{
    c, hermitian_eigen, lift, max_abs_diff, measure_update, orthogonal_pure, partial_trace,
    tensor, trace_distance, Axis, CMatrix, ChoiMatrix, DensityMatrix, Ket, Party,
    ProjectiveMeasurement,
};

/// Reduced states with purity below `1 − PURE_TOL` count as mixed.
pub const PURE_TOL: f64 = 1e-9;

/// Black-box table keys match inputs within this trace distance.
pub const TABLE_MATCH_TOL: f64 = 1e-9;

/// A deterministic rule on single-qubit pure states.
#[derive(Clone)]
pub enum PureRule {
    /// `|ψ⟩ ↦ |ψ⊥⟩`.
    Orthogonal,
    /// Keeps `|0⟩` and `|1⟩`, sends every other input to `|0⟩`.
    ResetNonBasis,
    Custom {
        name: String,
        rule: Arc<dyn Fn(&Ket) -> Ket + Send + Sync>,
    },
}

impl PureRule {
    pub fn custom<F>(name: impl Into<String>, rule: F) -> Self
    where
        F: Fn(&Ket) -> Ket + Send + Sync + 'static,
    {
        PureRule::Custom {
            name: name.into(),
            rule: Arc::new(rule),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            PureRule::Orthogonal => "flip",
            PureRule::ResetNonBasis => "reset-nonbasis",
            PureRule::Custom { name, .. } => name,
        }
    }

    pub fn apply(&self, psi: &Ket) -> Result<Ket> {
        if psi.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: psi.dim(),
            });
        }
        match self {
            PureRule::Orthogonal => orthogonal_pure(psi),
            PureRule::ResetNonBasis => {
                if psi.overlap(&Ket::one()) > 1.0 - PURE_TOL {
                    Ok(Ket::one())
                } else {
                    Ok(Ket::zero())
                }
            }
            PureRule::Custom { rule, .. } => {
                let out = rule(psi);
                if out.dim() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: out.dim(),
                    });
                }
                Ok(out)
            }
        }
    }
}

impl fmt::Debug for PureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PureRule({})", self.name())
    }
}

/// A local operation on one party's qubit.
#[derive(Debug, Clone)]
pub enum StateMap {
    Unitary(CMatrix),
    Cptp(ChoiMatrix),
    /// The universal flip device: defined only where the acted-on factor is pure.
    PureFlip,
    /// A possibly nonlinear rule applied member-by-member to an explicit ensemble.
    EnsembleMap(PureRule),
    /// Hypothesized joint outputs for named joint inputs.
    BlackBoxJoint(Vec<(DensityMatrix, DensityMatrix)>),
}

impl StateMap {
    pub fn unitary(u: CMatrix) -> Result<Self> {
        if u.nrows() != 2 || u.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: u.nrows(),
            });
        }
        let dev = max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(2, 2));
        if dev > 1e-12 {
            return Err(Error::InvalidChannel(format!("U†U ≠ I (deviation {dev:e})")));
        }
        Ok(StateMap::Unitary(u))
    }

    pub fn identity() -> Self {
        StateMap::Unitary(CMatrix::identity(2, 2))
    }

    pub fn pauli(axis: Axis) -> Self {
        StateMap::Unitary(crate::qcore::pauli(axis))
    }

    pub fn black_box(table: Vec<(DensityMatrix, DensityMatrix)>) -> Result<Self> {
        for (input, output) in &table {
            input.require_dim(4)?;
            output.require_dim(4)?;
        }
        Ok(StateMap::BlackBoxJoint(table))
    }

    /// Hypothesis that the device turns the shared singlet into `chi`.
    pub fn flip_hypothesis(chi: DensityMatrix) -> Result<Self> {
        Self::black_box(vec![(DensityMatrix::singlet(), chi)])
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, StateMap::Unitary(_) | StateMap::Cptp(_))
    }

    pub fn default_label(&self) -> String {
        match self {
            StateMap::Unitary(u) if max_abs_diff(u, &CMatrix::identity(2, 2)) == 0.0 => {
                "identity".into()
            }
            StateMap::Unitary(_) => "unitary".into(),
            StateMap::Cptp(_) => "channel".into(),
            StateMap::PureFlip => "flip".into(),
            StateMap::EnsembleMap(rule) => rule.name().into(),
            StateMap::BlackBoxJoint(_) => "black-box".into(),
        }
    }
}

/// One member of an explicit (proper) mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub state: DensityMatrix,
}

/// A state given together with a particular decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    components: Vec<Component>,
}

impl Ensemble {
    pub fn new(components: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::TraceNotOne(0.0));
        }
        let dim = components[0].1.dim();
        let mut total = 0.0;
        for (w, rho) in &components {
            if *w < 0.0 {
                return Err(Error::NegativeEigenvalue(*w));
            }
            rho.require_dim(dim)?;
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::TraceNotOne(total));
        }
        Ok(Ensemble {
            components: components
                .into_iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(weight, state)| Component { weight, state })
                .collect(),
        })
    }

    pub fn single(rho: DensityMatrix) -> Self {
        Ensemble {
            components: vec![Component {
                weight: 1.0,
                state: rho,
            }],
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// The density matrix `Σ wᵢ ρᵢ`.
    pub fn averaged(&self) -> Result<DensityMatrix> {
        let n = self.components[0].state.dim();
        let mut acc = CMatrix::zeros(n, n);
        for comp in &self.components {
            acc += comp.state.matrix() * c(comp.weight, 0.0);
        }
        DensityMatrix::from_derived(acc)
    }

    fn map_each<F>(&self, f: F) -> Result<Ensemble>
    where
        F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
    {
        let components = self
            .components
            .iter()
            .map(|comp| {
                Ok(Component {
                    weight: comp.weight,
                    state: f(&comp.state)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble { components })
    }
}

fn apply_linear_matrix(rho: &CMatrix, party: Party, f: &dyn Fn(&CMatrix) -> CMatrix) -> CMatrix {
    if rho.nrows() == 2 {
        return f(rho);
    }
    let mut out = CMatrix::zeros(4, 4);
    for p in 0..2 {
        for q in 0..2 {
            // Block over the acted-on factor with the other factor's indices (p, q) fixed.
            let idx = |p: usize, i: usize| match party {
                Party::Alice => 2 * i + p,
                Party::Bob => 2 * p + i,
            };
            let block = CMatrix::from_fn(2, 2, |i, j| rho[(idx(p, i), idx(q, j))]);
            let image = f(&block);
            for i in 0..2 {
                for j in 0..2 {
                    out[(idx(p, i), idx(q, j))] = image[(i, j)];
                }
            }
        }
    }
    out
}

/// Ket of a pure qubit state, in canonical phase.
fn pure_ket(rho: &DensityMatrix) -> Result<Option<Ket>> {
    if rho.purity() < 1.0 - PURE_TOL {
        return Ok(None);
    }
    let (_, vectors) = hermitian_eigen(rho.matrix());
    let top = vectors.column(rho.dim() - 1).into_owned();
    Ok(Some(Ket::from_vector(top)?.canonical_phase()))
}

fn apply_rule(rule: &PureRule, party: Party, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() == 2 {
        let ket = pure_ket(rho)?.ok_or_else(|| {
            Error::UndefinedAction(format!(
                "{} is defined only on pure inputs (purity {:.6})",
                rule.name(),
                rho.purity()
            ))
        })?;
        return Ok(rule.apply(&ket)?.density());
    }
    let local = partial_trace(rho, party)?;
    let ket = pure_ket(&local)?.ok_or_else(|| {
        Error::UndefinedAction(format!(
            "{} has no defined action on a joint state whose {party} factor is mixed or \
             entangled (local purity {:.6}); supply an ensemble or a black-box hypothesis",
            rule.name(),
            local.purity()
        ))
    })?;
    let other = partial_trace(rho, party.other())?;
    let image = rule.apply(&ket)?.density();
    match party {
        Party::Alice => tensor(&image, &other),
        Party::Bob => tensor(&other, &image),
    }
}

fn apply_to_member(map: &StateMap, party: Party, rho: &DensityMatrix) -> Result<DensityMatrix> {
    match map {
        StateMap::Unitary(u) => {
            let full = if rho.dim() == 2 { u.clone() } else { lift(u, party) };
            DensityMatrix::from_derived(&full * rho.matrix() * full.adjoint())
        }
        StateMap::Cptp(choi) => {
            DensityMatrix::from_derived(apply_linear_matrix(rho.matrix(), party, &|b| {
                choi.apply_matrix(b)
            }))
        }
        StateMap::PureFlip => apply_rule(&PureRule::Orthogonal, party, rho),
        StateMap::EnsembleMap(rule) => apply_rule(rule, party, rho),
        StateMap::BlackBoxJoint(table) => {
            for (input, output) in table {
                if input.dim() == rho.dim() && trace_distance(input, rho)? <= TABLE_MATCH_TOL {
                    return Ok(output.clone());
                }
            }
            Err(Error::UndefinedAction(
                "black-box table has no entry for this input state".into(),
            ))
        }
    }
}

/// Applies `map` to every member of `input`, keeping the decomposition.
///
/// For nonlinear rules the averaged output depends on which decomposition is
/// supplied; linear maps give the same average for every decomposition.
pub fn apply_local_ensemble(map: &StateMap, party: Party, input: &Ensemble) -> Result<Ensemble> {
    input.map_each(|rho| apply_to_member(map, party, rho))
}

/// Applies `map` to `party`'s factor of `rho`.
///
/// `PureFlip` and `EnsembleMap` fail with [`Error::UndefinedAction`] unless the
/// acted-on factor of `rho` is pure; use [`apply_local_ensemble`] to act on an
/// explicit decomposition instead.
pub fn apply_local(map: &StateMap, party: Party, rho: &DensityMatrix) -> Result<DensityMatrix> {
    apply_to_member(map, party, rho)
}

#[derive(Debug, Clone)]
pub enum Operation {
    Map(StateMap),
    Measure(ProjectiveMeasurement),
}

impl Operation {
    pub fn default_label(&self) -> String {
        match self {
            Operation::Map(m) => m.default_label(),
            Operation::Measure(m) => Axis::ALL
                .iter()
                .find(|a| m.matches_pauli(**a))
                .map(|a| format!("measure-{}", a.name()))
                .unwrap_or_else(|| "measure".into()),
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            Operation::Map(m) => m.is_linear(),
            Operation::Measure(_) => true,
        }
    }
}

impl From<StateMap> for Operation {
    fn from(m: StateMap) -> Self {
        Operation::Map(m)
    }
}

impl From<ProjectiveMeasurement> for Operation {
    fn from(m: ProjectiveMeasurement) -> Self {
        Operation::Measure(m)
    }
}

#[derive(Debug, Clone)]
pub struct Step {
    pub party: Party,
    pub operation: Operation,
    /// Identifies the physical process; reorderings must share labels.
    pub label: String,
}

impl Step {
    pub fn new(party: Party, operation: impl Into<Operation>) -> Self {
        let operation = operation.into();
        Step {
            party,
            label: operation.default_label(),
            operation,
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// How measurement outcomes are carried between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnsembleMode {
    /// Outcome-conditioned members are kept as a proper mixture.
    #[default]
    Proper,
    /// Members are merged into the averaged state after each measurement.
    Improper,
}

/// An initial joint state and a sequence of local steps applied in order.
#[derive(Debug, Clone)]
pub struct TimeOrderedExperiment {
    pub initial: DensityMatrix,
    pub steps: Vec<Step>,
    pub order_label: String,
    pub mode: EnsembleMode,
}

impl TimeOrderedExperiment {
    pub fn new(initial: DensityMatrix, order_label: impl Into<String>) -> Self {
        TimeOrderedExperiment {
            initial,
            steps: Vec::new(),
            order_label: order_label.into(),
            mode: EnsembleMode::default(),
        }
    }

    pub fn then(mut self, step: Step) -> Self {
        self.steps.push(step);
        self
    }

    pub fn step(self, party: Party, operation: impl Into<Operation>) -> Self {
        self.then(Step::new(party, operation))
    }

    pub fn with_mode(mut self, mode: EnsembleMode) -> Self {
        self.mode = mode;
        self
    }

    /// Same steps, same initial state, in reverse order.
    pub fn reversed(&self, order_label: impl Into<String>) -> Self {
        let mut out = self.clone();
        out.steps.reverse();
        out.order_label = order_label.into();
        out
    }

    fn step_multiset(&self) -> BTreeMap<(Party, String), usize> {
        let mut counts = BTreeMap::new();
        for s in &self.steps {
            *counts.entry((s.party, s.label.clone())).or_insert(0) += 1;
        }
        counts
    }
}

/// Runs the experiment, returning the outcome-conditioned final ensemble.
pub fn run_branches(exp: &TimeOrderedExperiment) -> Result<Ensemble> {
    exp.initial.require_dim(4)?;
    let mut state = Ensemble::single(exp.initial.clone());
    for step in &exp.steps {
        state = match &step.operation {
            Operation::Map(map) => apply_local_ensemble(map, step.party, &state)?,
            Operation::Measure(m) => {
                let mut members = Vec::new();
                for comp in state.components() {
                    let update = measure_update(&comp.state, m, step.party)?;
                    match exp.mode {
                        EnsembleMode::Proper => {
                            for b in update.ensemble {
                                members.push(Component {
                                    weight: comp.weight * b.probability,
                                    state: b.state,
                                });
                            }
                        }
                        EnsembleMode::Improper => members.push(Component {
                            weight: comp.weight,
                            state: update.averaged,
                        }),
                    }
                }
                let merged = Ensemble {
                    components: members,
                };
                match exp.mode {
                    EnsembleMode::Proper => merged,
                    EnsembleMode::Improper => Ensemble::single(merged.averaged()?),
                }
            }
        };
    }
    Ok(state)
}

/// Runs the experiment and returns the unread (averaged) final state.
pub fn run(exp: &TimeOrderedExperiment) -> Result<DensityMatrix> {
    run_branches(exp)?.averaged()
}

/// Trace distance between the final states of two orderings of the same steps.
pub fn order_swap_residual(
    first: &TimeOrderedExperiment,
    second: &TimeOrderedExperiment,
) -> Result<f64> {
    if first.step_multiset() != second.step_multiset() {
        return Err(Error::StepMismatch(format!(
            "'{}' and '{}' contain different steps",
            first.order_label, second.order_label
        )));
    }
    if max_abs_diff(first.initial.matrix(), second.initial.matrix()) > 0.0 {
        return Err(Error::StepMismatch("initial states differ".into()));
    }
    trace_distance(&run(first)?, &run(second)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random, Ket};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_pair(entries: [(usize, f64); 2]) -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        for (i, v) in entries {
            m[(i, i)] = c(v, 0.0);
        }
        m
    }

    fn product(a: &Ket, b: &Ket) -> DensityMatrix {
        Ket::product(a, b).unwrap().density()
    }

    fn flip() -> StateMap {
        StateMap::EnsembleMap(PureRule::Orthogonal)
    }

    fn alice_first(axis: Axis) -> TimeOrderedExperiment {
        TimeOrderedExperiment::new(DensityMatrix::singlet(), "alice-first")
            .step(Party::Alice, ProjectiveMeasurement::pauli(axis))
            .step(Party::Bob, flip())
    }

    #[test]
    fn flip_on_dephased_singlet_gives_correlated_mixture() {
        let sigma = Ensemble::new(vec![
            (0.5, product(&Ket::zero(), &Ket::one())),
            (0.5, product(&Ket::one(), &Ket::zero())),
        ])
        .unwrap();
        let out = apply_local_ensemble(&flip(), Party::Bob, &sigma)
            .unwrap()
            .averaged()
            .unwrap();
        assert!(max_abs_diff(out.matrix(), &diag_pair([(0, 0.5), (3, 0.5)])) < 1e-15);
    }

    #[test]
    fn unitary_on_bob() {
        let out = apply_local(
            &StateMap::pauli(Axis::X),
            Party::Bob,
            &product(&Ket::zero(), &Ket::zero()),
        )
        .unwrap();
        assert!(max_abs_diff(out.matrix(), &diag_pair([(1, 1.0), (2, 0.0)])) < 1e-15);
    }

    #[test]
    fn reset_rule_on_x_decomposition() {
        let singlet_x = Ensemble::new(vec![
            (0.5, product(&Ket::plus(), &Ket::minus())),
            (0.5, product(&Ket::minus(), &Ket::plus())),
        ])
        .unwrap();
        let out = apply_local_ensemble(
            &StateMap::EnsembleMap(PureRule::ResetNonBasis),
            Party::Bob,
            &singlet_x,
        )
        .unwrap()
        .averaged()
        .unwrap();
        // oracle: ½(|x⟩⟨x| + |x̄⟩⟨x̄|) ⊗ |0⟩⟨0| = diag(½, 0, ½, 0)
        assert!(max_abs_diff(out.matrix(), &diag_pair([(0, 0.5), (2, 0.5)])) < 1e-15);
    }

    #[test]
    fn flip_on_entangled_input_is_undefined() {
        let err = apply_local(&StateMap::PureFlip, Party::Bob, &DensityMatrix::singlet());
        assert!(matches!(err, Err(Error::UndefinedAction(_))));
        let bob_first = TimeOrderedExperiment::new(DensityMatrix::singlet(), "bob-first")
            .step(Party::Bob, flip())
            .step(Party::Alice, ProjectiveMeasurement::pauli(Axis::Z));
        assert!(matches!(run(&bob_first), Err(Error::UndefinedAction(_))));
    }

    #[test]
    fn pure_flip_on_single_qubit() {
        let out = apply_local(&StateMap::PureFlip, Party::Bob, &Ket::plus().density()).unwrap();
        assert!(max_abs_diff(out.matrix(), &Ket::minus().projector()) < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(apply_local(&StateMap::PureFlip, Party::Bob, &mixed).is_err());
    }

    #[test]
    fn case_one_chain() {
        let eta = run(&alice_first(Axis::Z)).unwrap();
        assert!(max_abs_diff(eta.matrix(), &diag_pair([(0, 0.5), (3, 0.5)])) < 1e-15);
    }

    #[test]
    fn identity_steps_leave_singlet() {
        let exp = TimeOrderedExperiment::new(DensityMatrix::singlet(), "id")
            .step(Party::Alice, StateMap::identity())
            .step(Party::Bob, StateMap::identity());
        let out = run(&exp).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::singlet().matrix()) < 1e-15);
    }

    #[test]
    fn case_two_chain() {
        let out = run(&alice_first(Axis::X)).unwrap();
        // oracle: ψ⁻ = (|xx̄⟩ − |x̄x⟩)/√2, so flipping Bob gives ½(|xx⟩⟨xx| + |x̄x̄⟩⟨x̄x̄|)
        let xx = product(&Ket::plus(), &Ket::plus());
        let mm = product(&Ket::minus(), &Ket::minus());
        let expected = (xx.matrix() + mm.matrix()) * c(0.5, 0.0);
        assert!(max_abs_diff(out.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn linear_orders_commute() {
        let base = TimeOrderedExperiment::new(DensityMatrix::singlet(), "alice-first")
            .step(Party::Alice, ProjectiveMeasurement::pauli(Axis::Z))
            .step(Party::Bob, StateMap::pauli(Axis::X));
        let r = order_swap_residual(&base, &base.reversed("bob-first")).unwrap();
        assert!(r < 1e-15);

        let depol = StateMap::Cptp(ChoiMatrix::depolarizing(0.4).unwrap());
        let base = TimeOrderedExperiment::new(DensityMatrix::singlet(), "alice-first")
            .step(Party::Alice, ProjectiveMeasurement::pauli(Axis::Z))
            .step(Party::Bob, depol);
        let r = order_swap_residual(&base, &base.reversed("bob-first")).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn declared_phi_plus_matches_case_one_but_not_case_three() {
        let chi = Ket::phi_plus().density();
        let bob_first = |axis| {
            TimeOrderedExperiment::new(DensityMatrix::singlet(), "bob-first")
                .then(
                    Step::new(Party::Bob, StateMap::flip_hypothesis(chi.clone()).unwrap())
                        .labeled("flip"),
                )
                .step(Party::Alice, ProjectiveMeasurement::pauli(axis))
        };
        let z = order_swap_residual(&alice_first(Axis::Z), &bob_first(Axis::Z)).unwrap();
        assert!(z < 1e-12);
        // oracle: dephasing φ⁺ in the y basis gives (II − YY)/4 while the
        // y-case target is (II + YY)/4; ½‖YY/2‖₁ = 1
        let y = order_swap_residual(&alice_first(Axis::Y), &bob_first(Axis::Y)).unwrap();
        assert!((y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_steps_rejected() {
        let a = alice_first(Axis::Z);
        let b = TimeOrderedExperiment::new(DensityMatrix::singlet(), "other")
            .step(Party::Alice, ProjectiveMeasurement::pauli(Axis::X))
            .step(Party::Bob, flip());
        assert!(matches!(order_swap_residual(&a, &b), Err(Error::StepMismatch(_))));
    }

    #[test]
    fn decomposition_dependence_of_nonlinear_rule() {
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        let z = Ensemble::new(vec![(0.5, Ket::zero().density()), (0.5, Ket::one().density())])
            .unwrap();
        let x = Ensemble::new(vec![(0.5, Ket::plus().density()), (0.5, Ket::minus().density())])
            .unwrap();
        for e in [&z, &x] {
            assert!(max_abs_diff(e.averaged().unwrap().matrix(), half.matrix()) < 1e-15);
        }
        let g = StateMap::EnsembleMap(PureRule::ResetNonBasis);
        let out_z = apply_local_ensemble(&g, Party::Bob, &z).unwrap().averaged().unwrap();
        let out_x = apply_local_ensemble(&g, Party::Bob, &x).unwrap().averaged().unwrap();
        assert!(max_abs_diff(out_z.matrix(), half.matrix()) < 1e-15);
        assert!(max_abs_diff(out_x.matrix(), &Ket::zero().projector()) < 1e-15);
    }

    #[test]
    fn improper_mode_forgets_the_decomposition() {
        let exp = alice_first(Axis::Z).with_mode(EnsembleMode::Improper);
        assert!(matches!(run(&exp), Err(Error::UndefinedAction(_))));
    }

    #[test]
    fn run_is_bit_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = random::unitary(&mut rng, 2);
        let exp = alice_first(Axis::Y).step(Party::Alice, StateMap::unitary(u).unwrap());
        let a = run(&exp).unwrap();
        let b = run(&exp).unwrap();
        assert_eq!(a, b);
    }
}

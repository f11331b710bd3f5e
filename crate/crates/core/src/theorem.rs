//! Order-invariance constraints on the flip device acting on half a singlet.
//!
//! Running "Alice measures, then Bob flips" fixes a target state `η`. If Bob
//! flips first, his device turns the singlet into some unknown `χ`, and
//! Alice's later measurement must dephase `χ` into the same `η`. For a rank-1
//! measurement with eigenkets `a₀, a₁`, the Alice-first run leaves Bob in pure
//! states `b₀, b₁`, so
//!
//! ```text
//! ⟨aᵢ|χ|aᵢ⟩ = ½ |bᵢ⟩⟨bᵢ|          (dephasing constraint)
//! ```
//!
//! Positivity forces every matrix element touching `a₀⊗b₁` or `a₁⊗b₀` to vanish,
//! leaving one free coherence `c = ⟨u|χ|v⟩` between `u = a₀⊗b₀` and
//! `v = a₁⊗b₁` with `|c| ≤ ½`. That disc is exactly the convex hull of the
//! extreme states `(u + e^{iθ} v)/√2`, whose coherence is `½e^{−iθ}`.
//!
//! Doing this for σ_z, σ_x and σ_y gives three discs. Each pair meets in one
//! Bell state and no state lies in all three.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use crate::dynamics::{run, run_branches, PureRule, StateMap, TimeOrderedExperiment};
use crate::error::{Error, Result};
use crate::oracle::{self, hermitian_coordinates};
use crate::qcore::{
    c, hermitian_eigen, measure_update, trace_distance, Axis, CMatrix,
    DensityMatrix, Ket, Party, ProjectiveMeasurement,
};

/// Entrywise tolerance of the membership characterization.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Relative singular-value cutoff when computing ranks of constraint systems.
const RANK_TOL: f64 = 1e-10;

/// The convex family of states allowed for `χ` by one of Alice's measurements.
#[derive(Debug, Clone)]
pub struct PhaseFamily {
    id: String,
    phase_symbol: &'static str,
    alice: [Ket; 2],
    bob: [Ket; 2],
    names: [String; 2],
    measurement: ProjectiveMeasurement,
    target: DensityMatrix,
}

impl PhaseFamily {
    pub fn for_axis(axis: Axis) -> Self {
        ac_constraint_set(&ProjectiveMeasurement::pauli(axis)).expect("Pauli measurements are rank one")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn phase_symbol(&self) -> &'static str {
        self.phase_symbol
    }

    pub fn measurement(&self) -> &ProjectiveMeasurement {
        &self.measurement
    }

    /// The Alice-first final state every member must dephase into.
    pub fn target(&self) -> &DensityMatrix {
        &self.target
    }

    /// `u = a₀ ⊗ b₀`
    pub fn upper(&self) -> Ket {
        Ket::product(&self.alice[0], &self.bob[0]).expect("qubit kets")
    }

    /// `v = a₁ ⊗ b₁`
    pub fn lower(&self) -> Ket {
        Ket::product(&self.alice[1], &self.bob[1]).expect("qubit kets")
    }

    /// Display names of `u` and `v`.
    pub fn basis_names(&self) -> (&str, &str) {
        (&self.names[0], &self.names[1])
    }

    /// `(u + e^{i·phase} v)/√2`
    pub fn extreme_state(&self, phase: f64) -> Ket {
        Ket::superpose(&self.upper(), &self.lower(), phase).expect("orthonormal pair")
    }

    /// Unitary whose columns are `u, v, a₀⊗b₁, a₁⊗b₀`.
    pub fn basis(&self) -> CMatrix {
        let cols = [
            self.upper(),
            self.lower(),
            Ket::product(&self.alice[0], &self.bob[1]).expect("qubit kets"),
            Ket::product(&self.alice[1], &self.bob[0]).expect("qubit kets"),
        ];
        CMatrix::from_fn(4, 4, |i, j| cols[j].amplitude(i))
    }

    /// `χ` written in [`Self::basis`].
    pub fn in_family_basis(&self, chi: &CMatrix) -> CMatrix {
        let w = self.basis();
        w.adjoint() * chi * w
    }

    /// `⟨u|χ|v⟩`
    pub fn coherence(&self, chi: &DensityMatrix) -> Complex64 {
        self.in_family_basis(chi.matrix())[(0, 1)]
    }

    /// `χ` after Alice's measurement, outcome unread.
    pub fn dephase(&self, chi: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(measure_update(chi, &self.measurement, Party::Alice)?.averaged)
    }

    /// The affine constraints `A x = b` over [`hermitian_coordinates`] that
    /// define the family's linear span: populations of `u`, `v` equal ½ and
    /// every entry touching the complement vanishes. 14 rows.
    pub fn constraint_system(&self) -> (DMatrix<f64>, DVector<f64>) {
        let basis = hermitian_unit_basis();
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(14);
        let functional = |f: &dyn Fn(&CMatrix) -> f64| -> Vec<f64> {
            basis.iter().map(|e| f(&self.in_family_basis(e))).collect()
        };
        rows.push((functional(&|b| b[(0, 0)].re), 0.5));
        rows.push((functional(&|b| b[(1, 1)].re), 0.5));
        rows.push((functional(&|b| b[(2, 2)].re), 0.0));
        rows.push((functional(&|b| b[(3, 3)].re), 0.0));
        for p in 0..4 {
            for q in p + 1..4 {
                if (p, q) == (0, 1) {
                    continue;
                }
                rows.push((functional(&|b| b[(p, q)].re), 0.0));
                rows.push((functional(&|b| b[(p, q)].im), 0.0));
            }
        }
        let a = DMatrix::from_fn(rows.len(), 16, |i, j| rows[i].0[j]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        (a, b)
    }
}

/// Basis of 4×4 Hermitian matrices dual to [`hermitian_coordinates`].
fn hermitian_unit_basis() -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(16);
    for i in 0..4 {
        let mut m = CMatrix::zeros(4, 4);
        m[(i, i)] = c(1.0, 0.0);
        out.push(m);
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let mut re = CMatrix::zeros(4, 4);
            re[(i, j)] = c(1.0, 0.0);
            re[(j, i)] = c(1.0, 0.0);
            out.push(re);
            let mut im = CMatrix::zeros(4, 4);
            im[(i, j)] = c(0.0, 1.0);
            im[(j, i)] = c(0.0, -1.0);
            out.push(im);
        }
    }
    out
}

fn hermitian_from_coordinates(x: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (coef, e) in x.iter().zip(hermitian_unit_basis()) {
        m += e * c(*coef, 0.0);
    }
    m
}

fn ket_name(k: &Ket) -> String {
    let named = [
        (Ket::zero(), "0"),
        (Ket::one(), "1"),
        (Ket::plus(), "x"),
        (Ket::minus(), "x̄"),
        (Ket::plus_i(), "y"),
        (Ket::minus_i(), "ȳ"),
    ];
    named
        .iter()
        .find(|(n, _)| n.overlap(k) > 1.0 - 1e-12)
        .map(|(_, s)| s.to_string())
        .unwrap_or_else(|| {
            let r = k.bloch();
            format!("n({:.3},{:.3},{:.3})", r[0], r[1], r[2])
        })
}

/// Derives the family of `χ` consistent with both time orders for Alice's
/// rank-1 qubit measurement `alice_m`.
pub fn ac_constraint_set(alice_m: &ProjectiveMeasurement) -> Result<PhaseFamily> {
    if !alice_m.is_rank_one_qubit() {
        return Err(Error::InvalidMeasurement(
            "the constraint family needs a rank-one qubit measurement".into(),
        ));
    }
    let alice_first = TimeOrderedExperiment::new(DensityMatrix::singlet(), "alice-first")
        .step(Party::Alice, alice_m.clone())
        .step(Party::Bob, StateMap::EnsembleMap(PureRule::Orthogonal));
    let target = run(&alice_first)?;

    // Diagonal blocks of η in Alice's basis: each must be ½|bᵢ⟩⟨bᵢ|.
    let alice = [alice_m.eigenket(0)?, alice_m.eigenket(1)?];
    let mut bob = Vec::with_capacity(2);
    for a in &alice {
        let lifted = a.projector().kronecker(&CMatrix::identity(2, 2));
        let block = crate::qcore::partial_trace_matrix(&(&lifted * target.matrix() * &lifted), Party::Bob);
        let (values, vectors) = hermitian_eigen(&block);
        if (values[1] - 0.5).abs() > 1e-12 || values[0].abs() > 1e-12 {
            return Err(Error::InvalidMeasurement(format!(
                "conditional state on Bob's side is not pure with weight ½ (spectrum {values:?})"
            )));
        }
        bob.push(Ket::from_vector(vectors.column(1).into_owned())?.canonical_phase());
    }
    let bob = [bob[0].clone(), bob[1].clone()];

    let axis = Axis::ALL.iter().copied().find(|a| alice_m.matches_pauli(*a));
    let (id, phase_symbol) = match axis {
        Some(Axis::Z) => ("z".to_string(), "alpha"),
        Some(Axis::X) => ("x".to_string(), "beta"),
        Some(Axis::Y) => ("y".to_string(), "delta"),
        None => {
            let r = alice.iter().next().map(|k| k.bloch()).unwrap_or([0.0; 3]);
            (format!("n({:.6},{:.6},{:.6})", r[0], r[1], r[2]), "theta")
        }
    };
    let names = [
        format!("|{}{}⟩", ket_name(&alice[0]), ket_name(&bob[0])),
        format!("|{}{}⟩", ket_name(&alice[1]), ket_name(&bob[1])),
    ];
    Ok(PhaseFamily {
        id,
        phase_symbol,
        alice,
        bob,
        names,
        measurement: alice_m.clone(),
        target,
    })
}

/// A constraint of the membership characterization that `χ` breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Nonzero entry `(row, col)` in the family basis touching the complement
    /// of `span{u, v}`.
    Leakage { row: usize, col: usize, magnitude: f64 },
    /// Population of `u` (slot 0) or `v` (slot 1) differs from ½.
    Population { slot: usize, value: f64 },
    /// `|⟨u|χ|v⟩| > ½`.
    Coherence { modulus: f64 },
}

impl Violation {
    /// Re-evaluates the violation on `chi`.
    pub fn holds(&self, chi: &DensityMatrix, family: &PhaseFamily, tol: f64) -> bool {
        let b = family.in_family_basis(chi.matrix());
        match *self {
            Violation::Leakage { row, col, .. } => b[(row, col)].norm() > tol,
            Violation::Population { slot, .. } => (b[(slot, slot)].re - 0.5).abs() > tol,
            Violation::Coherence { .. } => b[(0, 1)].norm() > 0.5 + tol,
        }
    }

    pub fn describe(&self, family: &PhaseFamily) -> String {
        let (u, v) = family.basis_names();
        match self {
            Violation::Leakage { row, col, magnitude } => format!(
                "support leaks outside span{{{u},{v}}}: family-basis entry ({row},{col}) has modulus {magnitude}"
            ),
            Violation::Population { slot, value } => format!(
                "population of {} is {value}, expected 0.5",
                if *slot == 0 { u } else { v }
            ),
            Violation::Coherence { modulus } => {
                format!("coherence ⟨{u}|χ|{v}⟩ has modulus {modulus} > 0.5")
            }
        }
    }
}

/// One extreme state `(u + e^{i·phase} v)/√2` with its mixing weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremePoint {
    pub phase: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Decomposition(Vec<ExtremePoint>),
    Violations(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub family: String,
    pub member: bool,
    pub witness: Witness,
}

impl FeasibilityReport {
    /// First violated constraint, if any.
    pub fn primary_violation(&self) -> Option<&Violation> {
        match &self.witness {
            Witness::Violations(v) => v.first(),
            Witness::Decomposition(_) => None,
        }
    }

    /// Checks the witness: a decomposition must rebuild `chi` within `1e-9`,
    /// and each listed violation must still be violated.
    pub fn verify(&self, chi: &DensityMatrix, family: &PhaseFamily) -> bool {
        match &self.witness {
            Witness::Decomposition(points) => {
                let mut m = CMatrix::zeros(4, 4);
                let mut total = 0.0;
                for p in points {
                    if p.weight < 0.0 {
                        return false;
                    }
                    total += p.weight;
                    m += family.extreme_state(p.phase).projector() * c(p.weight, 0.0);
                }
                let err = (&m - chi.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                self.member && (total - 1.0).abs() < 1e-12 && err <= 1e-9
            }
            Witness::Violations(vs) => {
                !self.member && !vs.is_empty() && vs.iter().all(|v| v.holds(chi, family, MEMBERSHIP_TOL))
            }
        }
    }
}

/// [`membership_with_tol`] at [`MEMBERSHIP_TOL`].
pub fn membership(chi: &DensityMatrix, family: &PhaseFamily) -> FeasibilityReport {
    membership_with_tol(chi, family, MEMBERSHIP_TOL)
}

/// Decides hull membership by the closed-form characterization: in the family
/// basis, populations of `u`, `v` are ½, every entry touching the complement
/// vanishes, and `|⟨u|χ|v⟩| ≤ ½`.
pub fn membership_with_tol(chi: &DensityMatrix, family: &PhaseFamily, tol: f64) -> FeasibilityReport {
    let b = family.in_family_basis(chi.matrix());
    let mut violations = Vec::new();

    let mut leaks: Vec<Violation> = Vec::new();
    for row in 0..4 {
        for col in row..4 {
            if row < 2 && col < 2 {
                continue;
            }
            let magnitude = b[(row, col)].norm();
            if magnitude > tol {
                leaks.push(Violation::Leakage { row, col, magnitude });
            }
        }
    }
    leaks.sort_by(|x, y| match (x, y) {
        (Violation::Leakage { magnitude: a, .. }, Violation::Leakage { magnitude: b, .. }) => {
            b.total_cmp(a)
        }
        _ => std::cmp::Ordering::Equal,
    });
    violations.extend(leaks);

    for slot in 0..2 {
        let value = b[(slot, slot)].re;
        if (value - 0.5).abs() > tol {
            violations.push(Violation::Population { slot, value });
        }
    }
    let coherence = b[(0, 1)];
    if coherence.norm() > 0.5 + tol {
        violations.push(Violation::Coherence {
            modulus: coherence.norm(),
        });
    }

    if !violations.is_empty() {
        return FeasibilityReport {
            family: family.id.clone(),
            member: false,
            witness: Witness::Violations(violations),
        };
    }

    // c = ½ Σ wₖ e^{−iθₖ}: put weight on the ray through c and its antipode.
    let r = coherence.norm().min(0.5);
    let theta = if r > 0.0 { -coherence.arg() } else { 0.0 };
    let mut points = vec![ExtremePoint {
        phase: theta.rem_euclid(2.0 * PI),
        weight: 0.5 + r,
    }];
    let rest = 0.5 - r;
    if rest > 1e-15 {
        points.push(ExtremePoint {
            phase: (theta + PI).rem_euclid(2.0 * PI),
            weight: rest,
        });
    }
    FeasibilityReport {
        family: family.id.clone(),
        member: true,
        witness: Witness::Decomposition(points),
    }
}

/// Why a candidate intersection is empty.
#[derive(Debug, Clone, PartialEq)]
pub enum EmptyReason {
    /// The combined linear constraints have no solution.
    Inconsistent { residual: f64 },
    /// The unique linear solution is not positive semidefinite.
    NotPositive { min_eigenvalue: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntersectionSet {
    Empty(EmptyReason),
    Point {
        state: DensityMatrix,
        bell: Option<&'static str>,
    },
    /// Affine solution set of positive dimension (before positivity).
    Continuum { dimension: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    pub families: Vec<String>,
    pub rank: usize,
    pub solution_dimension: usize,
    pub residual: f64,
    pub set: IntersectionSet,
}

impl Intersection {
    pub fn point(&self) -> Option<&DensityMatrix> {
        match &self.set {
            IntersectionSet::Point { state, .. } => Some(state),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.set, IntersectionSet::Empty(_))
    }
}

/// Name of the Bell state within trace distance `1e-9` of `rho`.
pub fn bell_name(rho: &DensityMatrix) -> Option<&'static str> {
    let bells = [
        ("phi+", Ket::phi_plus()),
        ("phi-", Ket::phi_minus()),
        ("psi+", Ket::psi_plus()),
        ("psi-", Ket::singlet()),
    ];
    bells.into_iter().find_map(|(name, k)| {
        (rho.dim() == 4 && trace_distance(rho, &k.density()).ok()? <= 1e-9).then_some(name)
    })
}

/// States satisfying the characterizations of every family in `families`.
///
/// Stacks the families' linear systems, solves them in the least-squares
/// sense, and reads the solution-set dimension off the rank.
pub fn intersect_all(families: &[&PhaseFamily]) -> Result<Intersection> {
    let systems: Vec<_> = families.iter().map(|f| f.constraint_system()).collect();
    let rows: usize = systems.iter().map(|(a, _)| a.nrows()).sum();
    let mut a = DMatrix::zeros(rows, 16);
    let mut b = DVector::zeros(rows);
    let mut offset = 0;
    for (sa, sb) in &systems {
        a.view_mut((offset, 0), (sa.nrows(), 16)).copy_from(sa);
        b.rows_mut(offset, sb.len()).copy_from(sb);
        offset += sa.nrows();
    }
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * max_sv.max(1.0))
        .count();
    let x = svd
        .solve(&b, RANK_TOL * max_sv.max(1.0))
        .map_err(|e| Error::LinearProgram(e.to_string()))?;
    let residual = (&a * &x - &b).norm();
    let solution_dimension = 16 - rank;
    let set = if residual > MEMBERSHIP_TOL {
        IntersectionSet::Empty(EmptyReason::Inconsistent { residual })
    } else if solution_dimension > 0 {
        IntersectionSet::Continuum {
            dimension: solution_dimension,
        }
    } else {
        let m = hermitian_from_coordinates(x.as_slice());
        match DensityMatrix::new(m.clone()) {
            Ok(state) => IntersectionSet::Point {
                bell: bell_name(&state),
                state,
            },
            Err(_) => IntersectionSet::Empty(EmptyReason::NotPositive {
                min_eigenvalue: hermitian_eigen(&m).0[0],
            }),
        }
    };
    Ok(Intersection {
        families: families.iter().map(|f| f.id.clone()).collect(),
        rank,
        solution_dimension,
        residual,
        set,
    })
}

/// Pairwise intersection of two families.
pub fn intersect(a: &PhaseFamily, b: &PhaseFamily) -> Result<Intersection> {
    intersect_all(&[a, b])
}

/// A pairwise intersection point checked against the remaining family.
#[derive(Debug, Clone)]
pub struct Exclusion {
    pub pair: (String, String),
    pub third: String,
    pub report: FeasibilityReport,
    pub violation: String,
}

/// Evidence that the three families share no state.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub families: Vec<PhaseFamily>,
    pub pairwise: Vec<Intersection>,
    pub exclusions: Vec<Exclusion>,
    pub triple: Intersection,
    /// Minimal L1 residual of the x and y constraints over mixtures of the
    /// z family sampled at the oracle grid.
    pub lp_triple_residual: f64,
    pub target_errors: Vec<f64>,
    pub empty: bool,
}

impl Certificate {
    pub fn family(&self, id: &str) -> Option<&PhaseFamily> {
        self.families.iter().find(|f| f.id == id)
    }

    /// Structured text form used in reports.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = self.write_into(&mut out);
        out
    }

    fn write_into(&self, out: &mut String) -> fmt::Result {
        for f in &self.families {
            let (u, v) = f.basis_names();
            writeln!(
                out,
                "family.{} = ({u} + e^(i {}) {v})/sqrt2",
                f.id, f.phase_symbol
            )?;
        }
        for (f, err) in self.families.iter().zip(&self.target_errors) {
            writeln!(out, "family.{}.target_error = {err}", f.id)?;
        }
        for p in &self.pairwise {
            let label = p.families.join("&");
            match &p.set {
                IntersectionSet::Point { bell, .. } => writeln!(
                    out,
                    "pair.{label} = {} (dimension {}, residual {})",
                    bell.unwrap_or("non-Bell point"),
                    p.solution_dimension,
                    p.residual
                )?,
                other => writeln!(out, "pair.{label} = {other:?}")?,
            }
        }
        for e in &self.exclusions {
            writeln!(
                out,
                "exclude.{}&{}.not_in.{} = {}",
                e.pair.0, e.pair.1, e.third, e.violation
            )?;
        }
        match &self.triple.set {
            IntersectionSet::Empty(EmptyReason::Inconsistent { residual }) => {
                writeln!(out, "triple.least_squares_residual = {residual}")?
            }
            other => writeln!(out, "triple = {other:?}")?,
        }
        writeln!(out, "triple.lp_grid_residual = {}", self.lp_triple_residual)?;
        writeln!(out, "triple.empty = {}", self.empty)
    }
}

/// Builds the three families for σ_z, σ_x, σ_y and certifies that their
/// common intersection is empty.
pub fn verify_theorem1() -> Result<Certificate> {
    let z = PhaseFamily::for_axis(Axis::Z);
    let x = PhaseFamily::for_axis(Axis::X);
    let y = PhaseFamily::for_axis(Axis::Y);

    let mut target_errors = Vec::new();
    for f in [&z, &x, &y] {
        let mut worst: f64 = 0.0;
        for k in 0..8 {
            let rho = f.extreme_state(2.0 * PI * k as f64 / 8.0).density();
            let d = f.dephase(&rho)?;
            worst = worst.max(crate::qcore::max_abs_diff(d.matrix(), f.target().matrix()));
        }
        target_errors.push(worst);
    }

    let pairs = [(&z, &x, &y), (&z, &y, &x), (&y, &x, &z)];
    let mut pairwise = Vec::new();
    let mut exclusions = Vec::new();
    let mut all_excluded = true;
    for (a, b, third) in pairs {
        let inter = intersect(a, b)?;
        match inter.point() {
            Some(state) => {
                let report = membership(state, third);
                let violation = report
                    .primary_violation()
                    .map(|v| v.describe(third))
                    .unwrap_or_else(|| "member".into());
                all_excluded &= !report.member && report.verify(state, third);
                exclusions.push(Exclusion {
                    pair: (a.id.clone(), b.id.clone()),
                    third: third.id.clone(),
                    report,
                    violation,
                });
            }
            None => all_excluded = false,
        }
        pairwise.push(inter);
    }

    let triple = intersect_all(&[&z, &x, &y])?;

    let mut lp_rows: Vec<Vec<f64>> = Vec::new();
    let mut lp_rhs: Vec<f64> = Vec::new();
    for f in [&x, &y] {
        let (a, b) = f.constraint_system();
        for i in 0..a.nrows() {
            lp_rows.push(a.row(i).iter().copied().collect());
            lp_rhs.push(b[i]);
        }
    }
    let columns: Vec<Vec<f64>> = oracle::phase_grid(oracle::ORACLE_GRID, 0.0)
        .iter()
        .map(|&p| {
            let coords = hermitian_coordinates(&z.extreme_state(p).projector());
            lp_rows
                .iter()
                .map(|row| row.iter().zip(&coords).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let (lp_triple_residual, _) = oracle::min_l1_residual(&columns, &lp_rhs)?;

    let empty = triple.is_empty() && all_excluded && lp_triple_residual > oracle::LP_FEASIBILITY_TOL;
    Ok(Certificate {
        families: vec![z, x, y],
        pairwise,
        exclusions,
        triple,
        lp_triple_residual,
        target_errors,
        empty,
    })
}

/// Whether outcome-conditioned Bob-first branches for hypothesis `chi` match
/// the Alice-first branches outcome by outcome, not just on average.
pub fn outcome_conditioned_match(chi: &DensityMatrix, family: &PhaseFamily, tol: f64) -> Result<bool> {
    let alice_first = TimeOrderedExperiment::new(DensityMatrix::singlet(), "alice-first")
        .step(Party::Alice, family.measurement.clone())
        .step(Party::Bob, StateMap::EnsembleMap(PureRule::Orthogonal));
    let bob_first = TimeOrderedExperiment::new(DensityMatrix::singlet(), "bob-first")
        .step(Party::Bob, StateMap::flip_hypothesis(chi.clone())?)
        .step(Party::Alice, family.measurement.clone());
    let a = run_branches(&alice_first)?;
    let b = run_branches(&bob_first)?;
    if a.len() != b.len() {
        return Ok(false);
    }
    for (x, y) in a.components().iter().zip(b.components()) {
        if (x.weight - y.weight).abs() > tol || trace_distance(&x.state, &y.state)? > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{max_abs_diff, partial_trace, random};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn same_ray(a: &Ket, b: &Ket) -> bool {
        (a.overlap(b) - 1.0).abs() < 1e-12
    }

    fn pk(a: Ket, b: Ket) -> Ket {
        Ket::product(&a, &b).unwrap()
    }

    #[test]
    fn pauli_families_match_the_expected_bases() {
        let cases = [
            (Axis::Z, pk(Ket::zero(), Ket::zero()), pk(Ket::one(), Ket::one())),
            (Axis::X, pk(Ket::plus(), Ket::plus()), pk(Ket::minus(), Ket::minus())),
            (Axis::Y, pk(Ket::plus_i(), Ket::plus_i()), pk(Ket::minus_i(), Ket::minus_i())),
        ];
        for (axis, u, v) in cases {
            let f = PhaseFamily::for_axis(axis);
            assert!(same_ray(&f.upper(), &u), "{axis:?}");
            assert!(same_ray(&f.lower(), &v), "{axis:?}");
            // exact phase convention: θ = 0 is (u + v)/√2 with the literal kets
            let e0 = f.extreme_state(0.0);
            let want = Ket::superpose(&u, &v, 0.0).unwrap();
            assert!((e0.inner(&want) - c(1.0, 0.0)).norm() < 1e-12, "{axis:?}");
        }
        assert_eq!(PhaseFamily::for_axis(Axis::Y).basis_names(), ("|yy⟩", "|ȳȳ⟩"));
    }

    #[test]
    fn rejects_non_rank_one_measurements() {
        let trivial =
            ProjectiveMeasurement::new(vec![CMatrix::identity(2, 2)], vec!["1".into()]).unwrap();
        assert!(ac_constraint_set(&trivial).is_err());
        let pair = ProjectiveMeasurement::from_basis(
            &[
                Ket::phi_plus(),
                Ket::phi_minus(),
                Ket::psi_plus(),
                Ket::singlet(),
            ],
            &["a", "b", "c", "d"],
        )
        .unwrap();
        assert!(ac_constraint_set(&pair).is_err());
    }

    #[test]
    fn extreme_states_are_maximally_entangled_and_hit_the_target() {
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        for axis in Axis::ALL {
            let f = PhaseFamily::for_axis(axis);
            for k in 0..36 {
                let rho = f.extreme_state(2.0 * PI * k as f64 / 36.0).density();
                for party in [Party::Alice, Party::Bob] {
                    let r = partial_trace(&rho, party).unwrap();
                    assert!(max_abs_diff(r.matrix(), half.matrix()) < 1e-10);
                }
                let d = f.dephase(&rho).unwrap();
                assert!(max_abs_diff(d.matrix(), f.target().matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn membership_examples() {
        let z = PhaseFamily::for_axis(Axis::Z);
        let phi = Ket::phi_plus().density();
        let rep = membership(&phi, &z);
        assert!(rep.member && rep.verify(&phi, &z));
        match &rep.witness {
            Witness::Decomposition(p) => {
                assert_eq!(p.len(), 1);
                assert!(p[0].phase.abs() < 1e-12 && (p[0].weight - 1.0).abs() < 1e-12);
            }
            _ => panic!("expected decomposition"),
        }

        let singlet = DensityMatrix::singlet();
        let rep = membership(&singlet, &z);
        assert!(!rep.member && rep.verify(&singlet, &z));
        assert!(matches!(rep.primary_violation(), Some(Violation::Leakage { .. })));

        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(0.5, 0.0);
        m[(3, 3)] = c(0.5, 0.0);
        let dephased = DensityMatrix::new(m).unwrap();
        let rep = membership(&dephased, &z);
        assert!(rep.member && rep.verify(&dephased, &z));
        match &rep.witness {
            Witness::Decomposition(p) => {
                assert_eq!(p.len(), 2);
                assert!((p[0].weight - 0.5).abs() < 1e-12);
                assert!(((p[1].phase - p[0].phase).rem_euclid(2.0 * PI) - PI).abs() < 1e-12);
            }
            _ => panic!("expected decomposition"),
        }
        let lp = oracle::family_membership_lp(&dephased, &z).unwrap();
        assert!(lp.feasible, "LP residual {}", lp.residual);
        assert!(lp.reconstruction_error < 1e-9);
    }

    #[test]
    fn pairwise_intersections_are_single_bell_states() {
        let (z, x, y) = (
            PhaseFamily::for_axis(Axis::Z),
            PhaseFamily::for_axis(Axis::X),
            PhaseFamily::for_axis(Axis::Y),
        );
        for (a, b, want) in [(&z, &x, "phi+"), (&z, &y, "phi-"), (&y, &x, "psi+")] {
            let inter = intersect(a, b).unwrap();
            assert_eq!(inter.solution_dimension, 0);
            match inter.set {
                IntersectionSet::Point { bell, .. } => assert_eq!(bell, Some(want)),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn phi_plus_leaks_out_of_the_y_family() {
        let y = PhaseFamily::for_axis(Axis::Y);
        let phi = Ket::phi_plus().density();
        let rep = membership(&phi, &y);
        assert!(!rep.member);
        let v = rep.primary_violation().unwrap();
        assert!(matches!(v, Violation::Leakage { .. }));
        assert!(v.describe(&y).contains("span{|yy⟩,|ȳȳ⟩}"));
        // oracle: φ⁺ = (|yȳ⟩ + |ȳy⟩)/√2, all weight on the complement
        let b = y.in_family_basis(phi.matrix());
        assert!((b[(2, 2)].re + b[(3, 3)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_is_empty_and_reproducible() {
        let a = verify_theorem1().unwrap();
        let b = verify_theorem1().unwrap();
        assert!(a.empty);
        assert!(a.triple.is_empty());
        assert!(a.lp_triple_residual > 0.1);
        assert_eq!(a.render(), b.render());
        assert!(a.target_errors.iter().all(|&e| e < 1e-12));
    }

    #[test]
    fn rotational_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let z = PhaseFamily::for_axis(Axis::Z);
        for _ in 0..20 {
            let n = random::direction(&mut rng);
            let fam = ac_constraint_set(&ProjectiveMeasurement::along(n).unwrap()).unwrap();
            let up = Ket::from_bloch(n).unwrap();
            let down = crate::qcore::orthogonal_pure(&up).unwrap();
            let u = CMatrix::from_fn(2, 2, |i, j| if j == 0 { up.amplitude(i) } else { down.amplitude(i) });
            let uu = u.kronecker(&u);
            let rotated_target = &uu * z.target().matrix() * uu.adjoint();
            assert!(max_abs_diff(&rotated_target, fam.target().matrix()) < 1e-12);
            for k in 0..12 {
                let phase = 2.0 * PI * k as f64 / 12.0;
                let image = DensityMatrix::new(&uu * z.extreme_state(phase).projector() * uu.adjoint()).unwrap();
                assert!(membership(&image, &fam).member);
                let back = DensityMatrix::new(uu.adjoint() * fam.extreme_state(phase).projector() * &uu).unwrap();
                assert!(membership(&back, &z).member);
            }
        }
    }

    #[test]
    fn averaged_and_outcome_conditioned_constraints_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for axis in Axis::ALL {
            let f = PhaseFamily::for_axis(axis);
            for _ in 0..10 {
                let r: f64 = rng.gen_range(0.0..0.5);
                let phase: f64 = rng.gen_range(0.0..2.0 * PI);
                let mix = f.extreme_state(phase).projector() * c(0.5 + r, 0.0)
                    + f.extreme_state(phase + PI).projector() * c(0.5 - r, 0.0);
                let chi = DensityMatrix::new(mix).unwrap();
                assert!(outcome_conditioned_match(&chi, &f, 1e-10).unwrap());
            }
            // a non-member fails both
            let bad = DensityMatrix::maximally_mixed(4).unwrap();
            assert!(!outcome_conditioned_match(&bad, &f, 1e-10).unwrap());
            assert!(!membership(&bad, &f).member);
        }
    }
}

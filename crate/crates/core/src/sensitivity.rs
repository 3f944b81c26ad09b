// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! Differential sensitivity of the gate error to structured Hamiltonian
//! uncertainty.
//!
//! A perturbation of strength `δ` adds `δ Σ_m s[k][m] α[m][k] Ĥ_m` to the
//! step-`k` Hamiltonian. Slot `m = 0` is the drift (`α = 1`) and slot
//! `m ≥ 1` the `m`-th control Hamiltonian (`α = f[m][k]`). The derivative of
//! the error at `δ = 0` is linear in the weights:
//!
//! ```text
//! ζ = Σ_k Σ_m Z[k][m] s[k][m]
//! Z[k][m] = Re{ -e^{-iφ}/N · Tr[Φ(k,0) U_f† Φ(κ,k+1) X_m^(k)] }
//! ```
//!
//! with `X_m^(k)` the Fréchet derivative of step `k` along `α Ĥ_m` and `φ`
//! the phase of `Tr[U_f† Φ(κ,0)]`. The prefix stops at `t_k` and the suffix
//! starts at `t_{k+1}`; step `k` itself is covered by `X`.
//!
//! Bounds:
//!
//! * variable uncertainty: `B_vu = Σ_k ‖Z[k]‖₂`, attained by the unit rows
//!   `Z[k]/‖Z[k]‖₂`;
//! * static uncertainty: `B_static = ‖Σ_k Z[k]‖₂`, the operator norm of
//!   `s ↦ Γ s` on unit vectors. Always `B_static ≤ B_vu`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{fidelity, propagate, Controller, PropagatorSet};
use crate::error::{Error, Result};
use crate::linalg::{self, frobenius_norm, trace_product, Operator};
use crate::problems::ProblemSpec;

const UNIT_TOL: f64 = 1e-12;

/// Normalized structure matrices `Ĥ_0..Ĥ_M` and which slots are uncertain.
#[derive(Debug, Clone)]
pub struct UncertaintyStructure {
    slots: Vec<Operator>,
    active: Vec<bool>,
}

impl UncertaintyStructure {
    /// Takes already-normalized structures. Inactive slots may hold anything.
    pub fn new(slots: Vec<Operator>, active: Vec<bool>) -> Result<Self> {
        if slots.is_empty() || slots.len() != active.len() {
            return Err(Error::Argument(format!(
                "{} structures vs {} mask entries",
                slots.len(),
                active.len()
            )));
        }
        let n = slots[0].nrows();
        for (m, (h, &on)) in slots.iter().zip(&active).enumerate() {
            if h.nrows() != n || h.ncols() != n {
                return Err(Error::Argument(format!("structure {m} has wrong shape")));
            }
            if on {
                if !linalg::is_hermitian(h, linalg::HERMITIAN_TOL) {
                    return Err(Error::Contract(format!("structure {m} is not Hermitian")));
                }
                let norm = frobenius_norm(h);
                if (norm - 1.0).abs() > UNIT_TOL {
                    return Err(Error::Contract(format!(
                        "structure {m} has Frobenius norm {norm}, expected 1"
                    )));
                }
            }
        }
        Ok(Self { slots, active })
    }

    /// Normalizes each present matrix to unit Frobenius norm; `None` marks a
    /// slot as certain.
    pub fn from_raw(raw: Vec<Option<Operator>>) -> Result<Self> {
        let n = raw
            .iter()
            .flatten()
            .map(|h| h.nrows())
            .next()
            .ok_or_else(|| Error::Argument("no active uncertainty slot".into()))?;
        let mut slots = Vec::with_capacity(raw.len());
        let mut active = Vec::with_capacity(raw.len());
        for (m, h) in raw.into_iter().enumerate() {
            match h {
                Some(h) => {
                    let norm = frobenius_norm(&h);
                    if norm == 0.0 || !norm.is_finite() {
                        return Err(Error::Argument(format!(
                            "structure {m} cannot be normalized"
                        )));
                    }
                    slots.push(h / Complex64::new(norm, 0.0));
                    active.push(true);
                }
                None => {
                    slots.push(Operator::zeros(n, n));
                    active.push(false);
                }
            }
        }
        Self::new(slots, active)
    }

    /// `Ĥ_0 = H0/‖H0‖_F`, `Ĥ_m = H_m/‖H_m‖_F`; zero Hamiltonians become
    /// inactive slots.
    pub fn standard(spec: &ProblemSpec) -> Result<Self> {
        let raw = std::iter::once(&spec.drift)
            .chain(&spec.controls)
            .map(|h| (frobenius_norm(h) > 0.0).then(|| h.clone()))
            .collect();
        Self::from_raw(raw)
    }

    /// Same structures with only `keep` left active.
    pub fn restricted_to(&self, keep: &[usize]) -> Result<Self> {
        if let Some(bad) = keep.iter().find(|&&m| m >= self.num_slots()) {
            return Err(Error::Argument(format!("slot {bad} out of range")));
        }
        let active = (0..self.num_slots())
            .map(|m| self.active[m] && keep.contains(&m))
            .collect();
        Ok(Self {
            slots: self.slots.clone(),
            active,
        })
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn is_active(&self, slot: usize) -> bool {
        self.active[slot]
    }

    pub fn active_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_slots()).filter(|&m| self.active[m])
    }

    pub fn structure(&self, slot: usize) -> &Operator {
        &self.slots[slot]
    }

    /// `α[m][k]`: 1 for the drift slot, the control amplitude otherwise.
    pub fn alpha(&self, ctrl: &Controller, slot: usize, step: usize) -> f64 {
        if slot == 0 {
            1.0
        } else {
            ctrl.field(slot - 1, step)
        }
    }

    pub fn check_compatible(&self, spec: &ProblemSpec, ctrl: &Controller) -> Result<()> {
        if self.num_slots() != spec.num_controls() + 1 {
            return Err(Error::Argument(format!(
                "{} uncertainty slots for {} controls (need M + 1)",
                self.num_slots(),
                spec.num_controls()
            )));
        }
        if self.slots[0].nrows() != spec.dim() {
            return Err(Error::Argument(
                "uncertainty structure dimension mismatch".into(),
            ));
        }
        if ctrl.channels() != spec.num_controls() {
            return Err(Error::Argument("controller channel count mismatch".into()));
        }
        Ok(())
    }

    /// `Σ_m s[k][m] α[m][k] Ĥ_m` over active slots.
    pub fn step_perturbation(
        &self,
        ctrl: &Controller,
        dirs: &DirectionSequence,
        step: usize,
    ) -> Operator {
        let n = self.slots[0].nrows();
        let mut out = Operator::zeros(n, n);
        for m in self.active_slots() {
            let w = dirs.weight(step, m) * self.alpha(ctrl, m, step);
            if w != 0.0 {
                out += &self.slots[m] * Complex64::new(w, 0.0);
            }
        }
        out
    }
}

/// Per-step direction weights `s[k][m]`, each row a unit vector or zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSequence {
    weights: DMatrix<f64>,
}

impl DirectionSequence {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        for (k, row) in weights.row_iter().enumerate() {
            let norm = row.norm();
            if norm != 0.0 && (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::Argument(format!(
                    "direction row {k} has norm {norm}, expected 1 or 0"
                )));
            }
        }
        Ok(Self { weights })
    }

    pub fn zeros(steps: usize, slots: usize) -> Self {
        Self {
            weights: DMatrix::zeros(steps, slots),
        }
    }

    /// The same unit row at every step.
    pub fn constant(steps: usize, row: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_fn(steps, row.len(), |_, m| row[m]))
    }

    /// Natural basis direction `e_slot` at every step.
    pub fn basis(steps: usize, slots: usize, slot: usize) -> Self {
        Self {
            weights: DMatrix::from_fn(steps, slots, |_, m| if m == slot { 1.0 } else { 0.0 }),
        }
    }

    /// Independent uniformly random unit rows supported on the active slots.
    pub fn random_unit(steps: usize, unc: &UncertaintyStructure, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slots = unc.num_slots();
        let mut weights = DMatrix::zeros(steps, slots);
        for k in 0..steps {
            let mut norm = 0.0;
            for m in unc.active_slots() {
                let g: f64 = StandardNormal.sample(&mut rng);
                weights[(k, m)] = g;
                norm += g * g;
            }
            let norm = norm.sqrt();
            if norm > 0.0 {
                for m in 0..slots {
                    weights[(k, m)] /= norm;
                }
            }
        }
        Self { weights }
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, step: usize, slot: usize) -> f64 {
        self.weights[(step, slot)]
    }

    pub fn steps(&self) -> usize {
        self.weights.nrows()
    }

    pub fn slots(&self) -> usize {
        self.weights.ncols()
    }

    pub fn check_shape(&self, steps: usize, slots: usize) -> Result<()> {
        if self.weights.shape() != (steps, slots) {
            return Err(Error::Argument(format!(
                "direction sequence is {:?}, expected ({steps}, {slots})",
                self.weights.shape()
            )));
        }
        Ok(())
    }
}

/// `Z` from propagators of arbitrary (possibly perturbed) step Hamiltonians.
///
/// `α` is always taken from the nominal controller amplitudes.
pub fn z_from_propagators(
    props: &PropagatorSet,
    target: &Operator,
    unc: &UncertaintyStructure,
    ctrl: &Controller,
) -> Result<DMatrix<f64>> {
    let fid = fidelity(props, target)?;
    if fid.degenerate {
        return Err(Error::PhaseUndefined);
    }
    let n = props.dim() as f64;
    let coeff = -Complex64::from_polar(1.0, -fid.phase) / n;
    let kernels = props.overlap_kernels(target);
    let mut z = DMatrix::zeros(props.kappa(), unc.num_slots());
    for (k, kernel) in kernels.iter().enumerate() {
        for m in unc.active_slots() {
            let alpha = unc.alpha(ctrl, m, k);
            if alpha == 0.0 {
                continue;
            }
            let dt = trace_product(unc.structure(m), kernel) * alpha;
            z[(k, m)] = (coeff * dt).re;
        }
    }
    Ok(z)
}

/// `κ × (M+1)` coefficient matrix of the differential sensitivity.
pub fn z_coefficients(
    spec: &ProblemSpec,
    ctrl: &Controller,
    unc: &UncertaintyStructure,
) -> Result<DMatrix<f64>> {
    unc.check_compatible(spec, ctrl)?;
    let props = propagate(spec, ctrl)?;
    z_from_propagators(&props, &spec.target, unc, ctrl)
}

/// `ζ = Σ_k Z[k] · s[k]`.
pub fn differential_sensitivity(z: &DMatrix<f64>, dirs: &DirectionSequence) -> Result<f64> {
    dirs.check_shape(z.nrows(), z.ncols())?;
    Ok(z.component_mul(dirs.weights()).sum())
}

/// `Γ = Σ_k Z[k]`.
pub fn gamma(z: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(z.ncols(), |m, _| z.column(m).sum())
}

#[derive(Debug, Clone)]
pub struct VariableBound {
    pub b_vu: f64,
    pub worst_dirs: DirectionSequence,
    pub varsigma: DVector<f64>,
}

/// Variable-uncertainty bound: `ℓ¹` over steps of the row norms of `Z`.
pub fn bound_vu(z: &DMatrix<f64>) -> VariableBound {
    let varsigma = DVector::from_fn(z.nrows(), |k, _| z.row(k).norm());
    let mut worst = DMatrix::zeros(z.nrows(), z.ncols());
    for k in 0..z.nrows() {
        if varsigma[k] > 0.0 {
            for m in 0..z.ncols() {
                worst[(k, m)] = z[(k, m)] / varsigma[k];
            }
        }
    }
    VariableBound {
        b_vu: varsigma.sum(),
        worst_dirs: DirectionSequence { weights: worst },
        varsigma,
    }
}

/// Static-uncertainty bound `‖Γ‖₂`.
pub fn bound_static(z: &DMatrix<f64>) -> f64 {
    gamma(z).norm()
}

#[derive(Debug, Clone)]
pub struct LogSensitivity {
    /// `S_μ = Γ_μ / ε` for each slot (zero for inactive slots).
    pub per_slot: DVector<f64>,
    pub norm: f64,
}

pub fn log_sensitivity_from(z: &DMatrix<f64>, error: f64) -> Result<LogSensitivity> {
    if error == 0.0 {
        return Err(Error::ZeroError);
    }
    let per_slot = gamma(z) / error;
    let norm = per_slot.norm();
    Ok(LogSensitivity { per_slot, norm })
}

pub fn log_sensitivity(
    spec: &ProblemSpec,
    ctrl: &Controller,
    unc: &UncertaintyStructure,
) -> Result<LogSensitivity> {
    unc.check_compatible(spec, ctrl)?;
    let props = propagate(spec, ctrl)?;
    let error = fidelity(&props, &spec.target)?.error;
    if error == 0.0 {
        return Err(Error::ZeroError);
    }
    let z = z_from_propagators(&props, &spec.target, unc, ctrl)?;
    log_sensitivity_from(&z, error)
}

/// Everything the sensitivity analysis knows about one controller.
#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub error: f64,
    pub z: DMatrix<f64>,
    pub gamma: DVector<f64>,
    pub b_vu: f64,
    pub b_static: f64,
    pub worst_dirs: DirectionSequence,
    pub varsigma: DVector<f64>,
    /// `None` when the nominal error is exactly zero.
    pub log_sensitivity: Option<LogSensitivity>,
}

impl SensitivityReport {
    pub fn zeta(&self, dirs: &DirectionSequence) -> Result<f64> {
        differential_sensitivity(&self.z, dirs)
    }
}

pub fn analyze(
    spec: &ProblemSpec,
    ctrl: &Controller,
    unc: &UncertaintyStructure,
) -> Result<SensitivityReport> {
    unc.check_compatible(spec, ctrl)?;
    let props = propagate(spec, ctrl)?;
    let error = fidelity(&props, &spec.target)?.error;
    let z = z_from_propagators(&props, &spec.target, unc, ctrl)?;
    let VariableBound {
        b_vu,
        worst_dirs,
        varsigma,
    } = bound_vu(&z);
    let log_sensitivity = match log_sensitivity_from(&z, error) {
        Ok(ls) => Some(ls),
        Err(Error::ZeroError) => None,
        Err(e) => return Err(e),
    };
    Ok(SensitivityReport {
        error,
        gamma: gamma(&z),
        b_static: bound_static(&z),
        z,
        b_vu,
        worst_dirs,
        varsigma,
        log_sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::perturbed_error;
    use crate::linalg::{sigma, PauliAxis};
    use crate::problems;
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn toy_x(target_angle: f64) -> ProblemSpec {
        // H = f σx/2 on one qubit; target exp(-i angle σx/2)
        let x = sigma(PauliAxis::X);
        let target = linalg::expm_step(&(&x * Complex64::new(0.5, 0.0)), target_angle).unwrap();
        ProblemSpec::new(
            "toy-x",
            1,
            Operator::zeros(2, 2),
            vec![x * Complex64::new(0.5, 0.0)],
            target,
        )
        .unwrap()
    }

    fn problem1() -> ProblemSpec {
        problems::problem(1).unwrap().build().unwrap()
    }

    fn random_controller(channels: usize, steps: usize, tf: f64, seed: u64) -> Controller {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields = DMatrix::from_fn(channels, steps, |_, _| rng.random_range(-1.5..1.5));
        Controller::new(fields, tf).unwrap()
    }

    fn central_difference(
        spec: &ProblemSpec,
        ctrl: &Controller,
        unc: &UncertaintyStructure,
        dirs: &DirectionSequence,
        h: f64,
    ) -> f64 {
        let plus = perturbed_error(spec, ctrl, unc, dirs, h).unwrap();
        let minus = perturbed_error(spec, ctrl, unc, dirs, -h).unwrap();
        (plus - minus) / (2.0 * h)
    }

    #[test]
    fn masked_slot_has_zero_column() {
        let spec = problem1();
        let ctrl = random_controller(4, 6, 2.0, 1);
        let unc = UncertaintyStructure::standard(&spec)
            .unwrap()
            .restricted_to(&[0, 2])
            .unwrap();
        let z = z_coefficients(&spec, &ctrl, &unc).unwrap();
        for m in [1, 3, 4] {
            assert!(z.column(m).iter().all(|&v| v == 0.0));
        }
        assert!(z.column(0).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn z_axis_perturbation_at_x_optimum_is_first_order_silent() {
        let spec = toy_x(PI / 2.0);
        let tf = 1.0;
        let ctrl = Controller::new(DMatrix::from_element(1, 1, PI / 2.0 / tf), tf).unwrap();
        let z_op = sigma(PauliAxis::Z);
        let unc = UncertaintyStructure::from_raw(vec![Some(z_op), None]).unwrap();
        let z = z_coefficients(&spec, &ctrl, &unc).unwrap();
        assert!(z[(0, 0)].abs() < 1e-12);
        let dirs = DirectionSequence::basis(1, 2, 0);
        assert!(central_difference(&spec, &ctrl, &unc, &dirs, 1e-6).abs() < 1e-8);
    }

    #[test]
    fn zeta_matches_central_difference() {
        let spec = problem1();
        for seed in 0..4 {
            let ctrl = random_controller(4, 10, 2.0, 100 + seed);
            let unc = UncertaintyStructure::standard(&spec).unwrap();
            let dirs = DirectionSequence::random_unit(10, &unc, 200 + seed);
            let z = z_coefficients(&spec, &ctrl, &unc).unwrap();
            let zeta = differential_sensitivity(&z, &dirs).unwrap();
            let fd = central_difference(&spec, &ctrl, &unc, &dirs, 1e-6);
            assert!((zeta - fd).abs() / fd.abs() < 1e-5, "zeta {zeta} fd {fd}");
        }
    }

    #[test]
    fn zero_direction_gives_zero() {
        let z = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(
            differential_sensitivity(&z, &DirectionSequence::zeros(2, 2)).unwrap(),
            0.0
        );
        assert!(differential_sensitivity(&z, &DirectionSequence::zeros(3, 2)).is_err());
    }

    #[test]
    fn bound_of_zero_matrix() {
        let b = bound_vu(&DMatrix::zeros(4, 3));
        assert_eq!(b.b_vu, 0.0);
        assert!(b.worst_dirs.weights().iter().all(|&w| w == 0.0));
        assert!(b.varsigma.iter().all(|&w| w == 0.0));
        assert_eq!(bound_static(&DMatrix::zeros(4, 3)), 0.0);
    }

    #[test]
    fn single_step_bound_is_row_norm() {
        let z = dmatrix![1.0, -2.0, 2.0];
        assert!((bound_vu(&z).b_vu - 3.0).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_bound() {
        let z = dmatrix![3.0, 4.0; 0.0, 0.0; 5.0, 12.0];
        let b = bound_vu(&z);
        assert!((b.b_vu - 18.0).abs() < 1e-14);
        let w = b.worst_dirs.weights();
        let want = dmatrix![0.6, 0.8; 0.0, 0.0; 5.0 / 13.0, 12.0 / 13.0];
        assert!((w - want).abs().max() < 1e-15);
        assert_eq!(b.varsigma.as_slice(), &[5.0, 0.0, 13.0]);
        assert!((differential_sensitivity(&z, &b.worst_dirs).unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn aligned_rows_static_equals_variable() {
        let z = dmatrix![1.0, 2.0; 1.0, 2.0; 1.0, 2.0];
        assert!((bound_static(&z) - bound_vu(&z).b_vu).abs() < 1e-14);
    }

    #[test]
    fn antiparallel_rows_cancel_statically() {
        let z = dmatrix![1.0, 0.0; -1.0, 0.0];
        assert_eq!(bound_static(&z), 0.0);
        assert_eq!(bound_vu(&z).b_vu, 2.0);
    }

    #[test]
    fn log_sensitivity_definitions() {
        let z = DMatrix::zeros(3, 2);
        assert_eq!(log_sensitivity_from(&z, 0.1).unwrap().norm, 0.0);
        let z = dmatrix![0.1, 0.0; 0.1, 0.0];
        let ls = log_sensitivity_from(&z, 0.1).unwrap();
        assert!((ls.norm - 2.0).abs() < 1e-14);
        assert!(matches!(
            log_sensitivity_from(&z, 0.0),
            Err(Error::ZeroError)
        ));
    }

    #[test]
    fn log_sensitivity_matches_basis_differences() {
        let spec = problem1();
        let ctrl = random_controller(4, 8, 2.0, 9);
        let unc = UncertaintyStructure::standard(&spec).unwrap();
        let ls = log_sensitivity(&spec, &ctrl, &unc).unwrap();
        let err = fidelity(&propagate(&spec, &ctrl).unwrap(), &spec.target)
            .unwrap()
            .error;
        for slot in 0..5 {
            let dirs = DirectionSequence::basis(8, 5, slot);
            let fd = central_difference(&spec, &ctrl, &unc, &dirs, 1e-6);
            let got = ls.per_slot[slot] * err;
            assert!(
                (got - fd).abs() / fd.abs() < 1e-5,
                "slot {slot}: {got} vs {fd}"
            );
        }
    }

    #[test]
    fn log_sensitivity_rejects_exact_optimum() {
        let mut spec = toy_x(0.0);
        spec.target = linalg::identity(2);
        let ctrl = Controller::zeros(1, 2, 1.0).unwrap();
        let unc = UncertaintyStructure::from_raw(vec![None, Some(sigma(PauliAxis::X))]).unwrap();
        assert!(matches!(
            log_sensitivity(&spec, &ctrl, &unc),
            Err(Error::ZeroError)
        ));
    }

    #[test]
    fn orthogonal_target_is_phase_undefined() {
        let x = sigma(PauliAxis::X);
        let spec = ProblemSpec::new(
            "orth",
            1,
            Operator::zeros(2, 2),
            vec![&x * Complex64::new(0.5, 0.0)],
            x.clone(),
        )
        .unwrap();
        let ctrl = Controller::zeros(1, 2, 1.0).unwrap();
        let unc = UncertaintyStructure::from_raw(vec![None, Some(x)]).unwrap();
        assert!(matches!(
            z_coefficients(&spec, &ctrl, &unc),
            Err(Error::PhaseUndefined)
        ));
    }

    #[test]
    fn structure_validation() {
        let bad = sigma(PauliAxis::X);
        assert!(UncertaintyStructure::new(vec![bad.clone()], vec![true]).is_err());
        assert!(UncertaintyStructure::new(vec![bad.clone()], vec![false]).is_ok());
        assert!(UncertaintyStructure::from_raw(vec![Some(Operator::zeros(2, 2))]).is_err());
        let unc = UncertaintyStructure::from_raw(vec![Some(bad)]).unwrap();
        assert!((frobenius_norm(unc.structure(0)) - 1.0).abs() < 1e-15);
        assert!(DirectionSequence::constant(2, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn rescaled_structures_leave_z_unchanged() {
        let spec = problem1();
        let ctrl = random_controller(4, 6, 2.0, 31);
        let raw: Vec<_> = std::iter::once(&spec.drift)
            .chain(&spec.controls)
            .cloned()
            .collect();
        let a = UncertaintyStructure::from_raw(raw.iter().cloned().map(Some).collect()).unwrap();
        let b = UncertaintyStructure::from_raw(
            raw.iter()
                .map(|h| Some(h * Complex64::new(7.5, 0.0)))
                .collect(),
        )
        .unwrap();
        let za = z_coefficients(&spec, &ctrl, &a).unwrap();
        let zb = z_coefficients(&spec, &ctrl, &b).unwrap();
        assert!((za - zb).abs().max() < 1e-12);
    }

    #[test]
    fn report_invariants() {
        let spec = problem1();
        let ctrl = random_controller(4, 12, 3.0, 41);
        let unc = UncertaintyStructure::standard(&spec).unwrap();
        let r = analyze(&spec, &ctrl, &unc).unwrap();
        assert!((r.varsigma.sum() - r.b_vu).abs() < 1e-14);
        assert!(r.b_static <= r.b_vu + 1e-14);
        let achieved = r.zeta(&r.worst_dirs).unwrap();
        assert!((achieved - r.b_vu).abs() <= 1e-12 * r.b_vu);
        for seed in 0..200 {
            let dirs = DirectionSequence::random_unit(12, &unc, seed);
            assert!(r.zeta(&dirs).unwrap().abs() <= r.b_vu + 1e-12);
        }
        assert!(r.log_sensitivity.is_some());
    }

    proptest! {
        #[test]
        fn static_never_exceeds_variable(rows in 1usize..12, cols in 1usize..6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-5.0..5.0));
            let b = bound_vu(&z);
            prop_assert!(bound_static(&z) <= b.b_vu * (1.0 + 1e-12));
            let achieved = differential_sensitivity(&z, &b.worst_dirs).unwrap();
            prop_assert!((achieved - b.b_vu).abs() <= 1e-12 * b.b_vu.max(1.0));
        }

        #[test]
        fn random_directions_are_dominated(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = DMatrix::from_fn(7, 4, |_, _| rng.random_range(-1.0..1.0));
            let mut w = DMatrix::from_fn(7, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
            for mut row in w.row_iter_mut() {
                let n = row.norm();
                row /= n;
            }
            let dirs = DirectionSequence::new(w).unwrap();
            let zeta = differential_sensitivity(&z, &dirs).unwrap();
            prop_assert!(zeta.abs() <= bound_vu(&z).b_vu + 1e-12);
        }
    }
}

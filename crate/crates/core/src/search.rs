// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! Directed worst-case search for the largest perturbation `δ̄` that keeps the
//! perturbed error below a threshold `ϵ`.
//!
//! Strength is quantized into steps of size `d`. Starting from the nominal
//! step Hamiltonians, each iteration adds `d Σ_m α[m][k] Ĥ_m s[k][m]` where
//! `s` is the worst-case direction sequence of the *current* perturbed
//! system. The path is therefore polygonal, bending towards the locally
//! most damaging direction at every vertex. The search stops at the first
//! `n` with `ε̃(n d) ≥ ϵ` and reports `δ̄ = (n - 1) d`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fidelity, perturbed_error, step_hamiltonians, Controller, PropagatorSet};
use crate::error::{Error, Result};
use crate::linalg::Operator;
use crate::problems::ProblemSpec;
use crate::sensitivity::{bound_vu, z_from_propagators, DirectionSequence, UncertaintyStructure};

pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Largest step tried by [`choose_step_size`].
pub const STEP_LADDER_MAX: f64 = 0.1;
/// Smallest step [`choose_step_size`] will return.
pub const STEP_FLOOR: f64 = 1e-6;
/// Decades per ladder rung are split in four: `d ∈ {10^-1, 10^-1.25, ...}`.
pub const STEP_LADDER_RUNGS_PER_DECADE: u32 = 4;
/// Admissible relative change of the error over one step.
pub const STEP_RELATIVE_CHANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Crossed,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSearchResult {
    pub delta_bar: f64,
    pub n_bar: usize,
    pub step: f64,
    /// `(δ_n, ε̃(δ_n))` for `n = 1..`; a single `(0, ε)` entry when the
    /// nominal error already violates the threshold.
    pub trace: Vec<(f64, f64)>,
    pub threshold: f64,
    pub nominal_error: f64,
    pub terminated: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepChoice {
    pub step: f64,
    /// True when no ladder rung passed and the floor was returned.
    pub floored: bool,
}

/// The descending step ladder `10^{-1}, 10^{-1.25}, …, 10^{-6}`.
pub fn step_ladder() -> Vec<f64> {
    let top = STEP_LADDER_MAX.log10();
    let bottom = STEP_FLOOR.log10();
    let rungs = ((top - bottom) * STEP_LADDER_RUNGS_PER_DECADE as f64).round() as i32;
    (0..=rungs)
        .map(|i| 10f64.powf(top - i as f64 / STEP_LADDER_RUNGS_PER_DECADE as f64))
        .collect()
}

/// Largest ladder step whose single move along the nominal worst-case
/// direction changes the error by less than 10 % (relative to `max(ε, 1e-12)`).
pub fn choose_step_size(
    spec: &ProblemSpec,
    ctrl: &Controller,
    unc: &UncertaintyStructure,
) -> Result<StepChoice> {
    unc.check_compatible(spec, ctrl)?;
    let hams = step_hamiltonians(spec, ctrl)?;
    let props = PropagatorSet::from_hamiltonians(&hams, ctrl.step_duration())?;
    let nominal = fidelity(&props, &spec.target)?.error;
    let worst = bound_vu(&z_from_propagators(&props, &spec.target, unc, ctrl)?).worst_dirs;
    let scale = nominal.max(1e-12);
    for d in step_ladder() {
        let moved = perturbed_error(spec, ctrl, unc, &worst, d)?;
        if (moved - nominal).abs() / scale < STEP_RELATIVE_CHANGE {
            return Ok(StepChoice {
                step: d,
                floored: false,
            });
        }
    }
    Ok(StepChoice {
        step: STEP_FLOOR,
        floored: true,
    })
}

fn advance(
    hams: &mut [Operator],
    unc: &UncertaintyStructure,
    ctrl: &Controller,
    dirs: &DirectionSequence,
    step: f64,
) {
    let d = Complex64::new(step, 0.0);
    for (k, h) in hams.iter_mut().enumerate() {
        *h += unc.step_perturbation(ctrl, dirs, k) * d;
    }
}

pub fn find_delta_bar(
    spec: &ProblemSpec,
    ctrl: &Controller,
    unc: &UncertaintyStructure,
    threshold: f64,
    step: f64,
    max_iter: usize,
) -> Result<DeltaSearchResult> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Argument(format!(
            "step size {step} must be positive"
        )));
    }
    if max_iter == 0 {
        return Err(Error::Argument("max_iter must be at least 1".into()));
    }
    unc.check_compatible(spec, ctrl)?;
    let dt = ctrl.step_duration();
    let mut hams = step_hamiltonians(spec, ctrl)?;
    let mut props = PropagatorSet::from_hamiltonians(&hams, dt)?;
    let nominal_error = fidelity(&props, &spec.target)?.error;

    if threshold <= nominal_error {
        return Ok(DeltaSearchResult {
            delta_bar: 0.0,
            n_bar: 0,
            step,
            trace: vec![(0.0, nominal_error)],
            threshold,
            nominal_error,
            terminated: Termination::Crossed,
        });
    }

    let mut trace = Vec::new();
    let mut n = 0usize;
    loop {
        // worst directions of the current (perturbed) system, then one step
        let dirs = bound_vu(&z_from_propagators(&props, &spec.target, unc, ctrl)?).worst_dirs;
        advance(&mut hams, unc, ctrl, &dirs, step);
        n += 1;
        props = PropagatorSet::from_hamiltonians(&hams, dt)?;
        let err = fidelity(&props, &spec.target)?.error;
        trace.push((n as f64 * step, err));
        if err >= threshold {
            let n_bar = n - 1;
            return Ok(DeltaSearchResult {
                delta_bar: n_bar as f64 * step,
                n_bar,
                step,
                trace,
                threshold,
                nominal_error,
                terminated: Termination::Crossed,
            });
        }
        if n == max_iter {
            return Ok(DeltaSearchResult {
                delta_bar: n as f64 * step,
                n_bar: n,
                step,
                trace,
                threshold,
                nominal_error,
                terminated: Termination::MaxIterations,
            });
        }
    }
}

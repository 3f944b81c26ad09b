// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant propagation and gate fidelity.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{identity, HermitianSpectrum, Operator};
use crate::problems::ProblemSpec;
use crate::sensitivity::{DirectionSequence, UncertaintyStructure};

/// Below this `|Tr[U_f† Φ]| / N` the phase of the overlap is treated as undefined.
pub const DEGENERATE_OVERLAP: f64 = 1e-14;

/// Control amplitudes `f[m][k]` for `m < M` channels over `κ` equal steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    fields: DMatrix<f64>,
    final_time: f64,
}

impl Controller {
    pub fn new(fields: DMatrix<f64>, final_time: f64) -> Result<Self> {
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::Argument(format!(
                "final time {final_time} must be positive"
            )));
        }
        if fields.ncols() == 0 {
            return Err(Error::Argument(
                "controller needs at least one time step".into(),
            ));
        }
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(Error::Contract("control amplitudes must be finite".into()));
        }
        Ok(Self { fields, final_time })
    }

    pub fn zeros(channels: usize, steps: usize, final_time: f64) -> Result<Self> {
        Self::new(DMatrix::zeros(channels, steps), final_time)
    }

    /// Builds from a channel-major flat vector (`f[m][k]` at `m * κ + k`).
    pub fn from_flat(channels: usize, steps: usize, flat: &[f64], final_time: f64) -> Result<Self> {
        if flat.len() != channels * steps {
            return Err(Error::Argument(format!(
                "flat length {} != {channels} x {steps}",
                flat.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(channels, steps, flat), final_time)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.fields.len());
        for m in 0..self.channels() {
            out.extend(self.fields.row(m).iter());
        }
        out
    }

    pub fn fields(&self) -> &DMatrix<f64> {
        &self.fields
    }

    pub fn field(&self, channel: usize, step: usize) -> f64 {
        self.fields[(channel, step)]
    }

    pub fn channels(&self) -> usize {
        self.fields.nrows()
    }

    pub fn steps(&self) -> usize {
        self.fields.ncols()
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn step_duration(&self) -> f64 {
        self.final_time / self.steps() as f64
    }

    /// Controller that undoes this one on the negated drift: fields negated
    /// and played in reverse order.
    pub fn reversed_adjoint(&self) -> Self {
        let k = self.steps();
        let fields = DMatrix::from_fn(self.channels(), k, |m, j| -self.fields[(m, k - 1 - j)]);
        Self {
            fields,
            final_time: self.final_time,
        }
    }
}

/// `H^(k) = H0 + Σ_m f[m][k] H_m` for every step.
pub fn step_hamiltonians(spec: &ProblemSpec, ctrl: &Controller) -> Result<Vec<Operator>> {
    if ctrl.channels() != spec.num_controls() {
        return Err(Error::Argument(format!(
            "controller has {} channels, problem has {} controls",
            ctrl.channels(),
            spec.num_controls()
        )));
    }
    Ok((0..ctrl.steps())
        .map(|k| {
            let mut h = spec.drift.clone();
            for (m, hm) in spec.controls.iter().enumerate() {
                let f = ctrl.field(m, k);
                if f != 0.0 {
                    h += hm * Complex64::new(f, 0.0);
                }
            }
            h
        })
        .collect())
}

/// Step propagators with cached prefix and suffix products.
///
/// `forward[k] = Φ(k,0)` with `forward[0] = I`; `backward[k] = Φ(κ,k)` with
/// `backward[κ] = I`; so `backward[k] · forward[k]` is the total propagator.
#[derive(Debug, Clone)]
pub struct PropagatorSet {
    pub step_duration: f64,
    pub spectra: Vec<HermitianSpectrum>,
    pub steps: Vec<Operator>,
    pub forward: Vec<Operator>,
    pub backward: Vec<Operator>,
}

impl PropagatorSet {
    pub fn from_hamiltonians(hamiltonians: &[Operator], step_duration: f64) -> Result<Self> {
        let kappa = hamiltonians.len();
        if kappa == 0 {
            return Err(Error::Argument("no time steps".into()));
        }
        let n = hamiltonians[0].nrows();
        let spectra = hamiltonians
            .iter()
            .map(HermitianSpectrum::new)
            .collect::<Result<Vec<_>>>()?;
        let steps: Vec<Operator> = spectra.iter().map(|s| s.exp_step(step_duration)).collect();
        let mut forward = Vec::with_capacity(kappa + 1);
        forward.push(identity(n));
        for step in &steps {
            let next = step * forward.last().unwrap();
            forward.push(next);
        }
        let mut backward = vec![identity(n); kappa + 1];
        for k in (0..kappa).rev() {
            backward[k] = &backward[k + 1] * &steps[k];
        }
        Ok(Self {
            step_duration,
            spectra,
            steps,
            forward,
            backward,
        })
    }

    pub fn kappa(&self) -> usize {
        self.steps.len()
    }

    pub fn dim(&self) -> usize {
        self.forward[0].nrows()
    }

    pub fn total(&self) -> &Operator {
        &self.forward[self.kappa()]
    }

    /// Per-step kernels `K_k` with `∂Tr[U_f† Φ] = Tr[Ĥ K_k]` for a unit
    /// perturbation `Ĥ` of step `k` alone.
    ///
    /// With `A_k = Φ(k,0) U_f† Φ(κ,k+1)` the derivative of the overlap is
    /// `Tr[A_k X_k]`, `X_k` the Fréchet derivative of step `k`.
    pub fn overlap_kernels(&self, target: &Operator) -> Vec<Operator> {
        let target_adj = target.adjoint();
        (0..self.kappa())
            .map(|k| {
                let a = &self.forward[k] * &target_adj * &self.backward[k + 1];
                self.spectra[k].frechet_kernel(&a, self.step_duration)
            })
            .collect()
    }
}

pub fn propagate(spec: &ProblemSpec, ctrl: &Controller) -> Result<PropagatorSet> {
    let hams = step_hamiltonians(spec, ctrl)?;
    PropagatorSet::from_hamiltonians(&hams, ctrl.step_duration())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fidelity {
    /// `|Tr[U_f† Φ]| / N`.
    pub fidelity: f64,
    /// `1 - fidelity`.
    pub error: f64,
    /// Argument of `Tr[U_f† Φ]`; zero when `degenerate`.
    pub phase: f64,
    pub degenerate: bool,
}

pub fn overlap_fidelity(total: &Operator, target: &Operator) -> Result<Fidelity> {
    if total.shape() != target.shape() {
        return Err(Error::Argument(format!(
            "propagator {:?} vs target {:?}",
            total.shape(),
            target.shape()
        )));
    }
    let n = total.nrows() as f64;
    let trace = crate::linalg::trace_product(&target.adjoint(), total);
    let fidelity = trace.norm() / n;
    let degenerate = fidelity < DEGENERATE_OVERLAP;
    Ok(Fidelity {
        fidelity,
        error: 1.0 - fidelity,
        phase: if degenerate { 0.0 } else { trace.arg() },
        degenerate,
    })
}

pub fn fidelity(props: &PropagatorSet, target: &Operator) -> Result<Fidelity> {
    overlap_fidelity(props.total(), target)
}

/// Step Hamiltonians shifted by `δ Σ_m s[k][m] α[m][k] Ĥ_m`.
pub fn perturbed_hamiltonians(
    spec: &ProblemSpec,
    ctrl: &Controller,
    unc: &UncertaintyStructure,
    dirs: &DirectionSequence,
    delta: f64,
) -> Result<Vec<Operator>> {
    let mut hams = step_hamiltonians(spec, ctrl)?;
    unc.check_compatible(spec, ctrl)?;
    dirs.check_shape(ctrl.steps(), unc.num_slots())?;
    if delta != 0.0 {
        for (k, h) in hams.iter_mut().enumerate() {
            *h += unc.step_perturbation(ctrl, dirs, k) * Complex64::new(delta, 0.0);
        }
    }
    Ok(hams)
}

/// `ε̃(δ)`: fidelity error with every step perturbed along `dirs` at strength `δ`.
pub fn perturbed_error(
    spec: &ProblemSpec,
    ctrl: &Controller,
    unc: &UncertaintyStructure,
    dirs: &DirectionSequence,
    delta: f64,
) -> Result<f64> {
    let hams = perturbed_hamiltonians(spec, ctrl, unc, dirs, delta)?;
    let props = PropagatorSet::from_hamiltonians(&hams, ctrl.step_duration())?;
    Ok(fidelity(&props, &spec.target)?.error)
}

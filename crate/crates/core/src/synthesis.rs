// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! Controller synthesis: unconstrained quasi-Newton minimization of the gate
//! error with exact gradients, and seeded multi-restart batches.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fidelity, propagate, Controller};
use crate::error::{Error, Result};
use crate::linalg::trace_product;
use crate::optimizer::{self, BfgsOptions, BfgsStatus};
use crate::problems::ProblemSpec;

pub const DEFAULT_MAX_ITERS: usize = 5_000;
pub const DEFAULT_GRAD_TOL: f64 = 1e-9;
pub const DEFAULT_FIDELITY_FILTER: f64 = 1e-2;

/// How the initial control amplitudes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Independent draws from `U[-1, 1)`.
    Uniform,
    StandardNormal,
    Zeros,
}

impl InitStrategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::StandardNormal => "standard-normal",
            Self::Zeros => "zeros",
        }
    }
}

impl std::str::FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "standard-normal" | "normal" => Ok(Self::StandardNormal),
            "zeros" => Ok(Self::Zeros),
            other => Err(Error::Argument(format!("unknown init strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisConfig {
    pub init: InitStrategy,
    /// Master seed; restart `r` uses ChaCha20 stream `r` of this seed.
    pub seed: u64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub fidelity_filter: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            init: InitStrategy::Uniform,
            seed: 0,
            max_iters: DEFAULT_MAX_ITERS,
            grad_tol: DEFAULT_GRAD_TOL,
            fidelity_filter: DEFAULT_FIDELITY_FILTER,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fidelity_filter > 0.0 && self.fidelity_filter <= 1.0) {
            return Err(Error::Argument(format!(
                "fidelity filter {} outside (0, 1]",
                self.fidelity_filter
            )));
        }
        if self.grad_tol.is_nan() || self.grad_tol < 0.0 {
            return Err(Error::Argument(
                "gradient tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Error and its gradient with respect to every amplitude, `M × κ`.
pub fn error_and_gradient(spec: &ProblemSpec, ctrl: &Controller) -> Result<(f64, DMatrix<f64>)> {
    let props = propagate(spec, ctrl)?;
    let fid = fidelity(&props, &spec.target)?;
    if fid.degenerate {
        return Err(Error::PhaseUndefined);
    }
    let coeff = -Complex64::from_polar(1.0, -fid.phase) / spec.dim() as f64;
    let kernels = props.overlap_kernels(&spec.target);
    let mut grad = DMatrix::zeros(ctrl.channels(), ctrl.steps());
    for (k, kernel) in kernels.iter().enumerate() {
        for (m, h) in spec.controls.iter().enumerate() {
            grad[(m, k)] = (coeff * trace_product(h, kernel)).re;
        }
    }
    Ok((fid.error, grad))
}

/// `∂ε / ∂f[m][k]`, `M × κ`.
pub fn gradient_error(spec: &ProblemSpec, ctrl: &Controller) -> Result<DMatrix<f64>> {
    error_and_gradient(spec, ctrl).map(|(_, g)| g)
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub controller: Controller,
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn initial_fields(
    channels: usize,
    steps: usize,
    init: InitStrategy,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let n = channels * steps;
    match init {
        InitStrategy::Zeros => vec![0.0; n],
        InitStrategy::Uniform => {
            let dist = Uniform::new(-1.0, 1.0).expect("valid range");
            (0..n).map(|_| rng.sample(dist)).collect()
        }
        InitStrategy::StandardNormal => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
    }
}

fn minimize_from(
    spec: &ProblemSpec,
    start: Controller,
    config: &SynthesisConfig,
) -> Result<Synthesized> {
    let (channels, steps, tf) = (start.channels(), start.steps(), start.final_time());
    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let ctrl = Controller::from_flat(channels, steps, x, tf)
            .map_err(|e| Error::OptimizerAbort(e.to_string()))?;
        let (err, grad) = error_and_gradient(spec, &ctrl)?;
        let mut flat = Vec::with_capacity(grad.len());
        for m in 0..channels {
            flat.extend(grad.row(m).iter());
        }
        Ok((err, flat))
    };
    let opts = BfgsOptions {
        max_iters: config.max_iters,
        grad_tol: config.grad_tol,
        ..BfgsOptions::default()
    };
    let out = optimizer::minimize(objective, start.to_flat(), &opts)?;
    if out.status == BfgsStatus::LineSearchStalled {
        log::debug!(
            "line search stalled after {} iterations at eps = {:.3e}",
            out.iterations,
            out.value
        );
    }
    Ok(Synthesized {
        controller: Controller::from_flat(channels, steps, &out.x, tf)?,
        error: out.value,
        iterations: out.iterations,
        converged: out.converged(),
    })
}

/// Single run from `config.init` seeded by `config.seed` (stream 0).
pub fn optimize(
    spec: &ProblemSpec,
    final_time: f64,
    steps: usize,
    config: &SynthesisConfig,
) -> Result<Synthesized> {
    restart(spec, final_time, steps, config, 0)
}

/// Restart `index` of a batch: its RNG is stream `index` of the master seed.
pub fn restart(
    spec: &ProblemSpec,
    final_time: f64,
    steps: usize,
    config: &SynthesisConfig,
    index: u64,
) -> Result<Synthesized> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    let flat = initial_fields(spec.num_controls(), steps, config.init, &mut rng);
    let start = Controller::from_flat(spec.num_controls(), steps, &flat, final_time)?;
    minimize_from(spec, start, config)
}

/// Outcome of one restart inside a batch.
#[derive(Debug)]
pub struct RestartOutcome {
    pub index: u64,
    pub result: Result<Synthesized>,
}

#[derive(Debug, Clone)]
pub struct Survivor {
    pub restart: u64,
    pub seed: u64,
    pub init: InitStrategy,
    pub synthesized: Synthesized,
}

/// Runs every restart in parallel and returns all outcomes ordered by index.
pub fn run_restarts(
    spec: &ProblemSpec,
    final_time: f64,
    steps: usize,
    count: usize,
    config: &SynthesisConfig,
) -> Result<Vec<RestartOutcome>> {
    config.validate()?;
    let mut out: Vec<RestartOutcome> = (0..count as u64)
        .into_par_iter()
        .map(|index| RestartOutcome {
            index,
            result: restart(spec, final_time, steps, config, index),
        })
        .collect();
    out.sort_by_key(|o| o.index);
    Ok(out)
}

/// Survivors (`ε < fidelity_filter`) of `count` seeded restarts, ordered by
/// restart index. Failed restarts are logged and dropped.
pub fn batch_synthesize(
    spec: &ProblemSpec,
    final_time: f64,
    steps: usize,
    count: usize,
    config: &SynthesisConfig,
) -> Result<Vec<Survivor>> {
    let outcomes = run_restarts(spec, final_time, steps, count, config)?;
    let mut survivors = Vec::new();
    for o in outcomes {
        match o.result {
            Ok(s) if s.error < config.fidelity_filter => survivors.push(Survivor {
                restart: o.index,
                seed: config.seed,
                init: config.init,
                synthesized: s,
            }),
            Ok(_) => {}
            Err(e) => log::warn!("restart {} aborted: {e}", o.index),
        }
    }
    if survivors.is_empty() {
        log::warn!("no restart reached eps < {}", config.fidelity_filter);
    }
    Ok(survivors)
}

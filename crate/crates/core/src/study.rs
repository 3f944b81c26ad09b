// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! Per-controller robustness pipeline: sensitivity report, step-size choice
//! and worst-case perturbation search under the standard drift + control
//! uncertainty structure.

use rayon::prelude::*;

use crate::dynamics::Controller;
use crate::error::{Error, Result};
use crate::problems::ProblemSpec;
use crate::search::{self, Termination};
use crate::sensitivity::{self, UncertaintyStructure};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Error threshold `ϵ` of the worst-case search.
    pub threshold: f64,
    /// Fixed search step; `None` picks one per controller from the ladder.
    pub step: Option<f64>,
    pub max_iter: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            threshold: search::DEFAULT_THRESHOLD,
            step: None,
            max_iter: search::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Robustness {
    pub error: f64,
    pub b_vu: f64,
    pub b_static: f64,
    /// `‖S‖₂`; `None` when the error is exactly zero.
    pub log_sensitivity: Option<f64>,
    pub delta_bar: f64,
    pub n_bar: usize,
    pub step: f64,
    pub step_floored: bool,
    pub terminated: Termination,
}

pub fn analyze_controller(
    spec: &ProblemSpec,
    ctrl: &Controller,
    unc: &UncertaintyStructure,
    opts: &AnalysisOptions,
) -> Result<Robustness> {
    let report = sensitivity::analyze(spec, ctrl, unc)?;
    let (step, step_floored) = match opts.step {
        Some(d) => (d, false),
        None => {
            let c = search::choose_step_size(spec, ctrl, unc)?;
            (c.step, c.floored)
        }
    };
    let found = search::find_delta_bar(spec, ctrl, unc, opts.threshold, step, opts.max_iter)?;
    let out = Robustness {
        error: report.error,
        b_vu: report.b_vu,
        b_static: report.b_static,
        log_sensitivity: report.log_sensitivity.map(|s| s.norm),
        delta_bar: found.delta_bar,
        n_bar: found.n_bar,
        step,
        step_floored,
        terminated: found.terminated,
    };
    let finite = [out.error, out.b_vu, out.b_static, out.delta_bar]
        .iter()
        .chain(out.log_sensitivity.as_ref())
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::Contract("non-finite robustness metric".into()));
    }
    Ok(out)
}

/// Analyzes every controller in parallel; results keep the input order.
pub fn analyze_batch(
    spec: &ProblemSpec,
    controllers: &[Controller],
    opts: &AnalysisOptions,
) -> Result<Vec<Result<Robustness>>> {
    let unc = UncertaintyStructure::standard(spec)?;
    Ok(controllers
        .par_iter()
        .map(|c| analyze_controller(spec, c, &unc, opts))
        .collect())
}

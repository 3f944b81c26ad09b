// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use num_complex::Complex64;

use qsens::dynamics::{fidelity, propagate, Controller};
use qsens::io::{self, ControllerRecord, RobustnessRecord};
use qsens::linalg::{expm_step, sigma, PauliAxis};
use qsens::problems::{problem, ProblemSpec};
use qsens::search::{self, Termination};
use qsens::sensitivity::{self, UncertaintyStructure};
use qsens::study::{analyze_batch, analyze_controller, AnalysisOptions};
use qsens::synthesis::{batch_synthesize, SynthesisConfig};

fn toy() -> ProblemSpec {
    let x = sigma(PauliAxis::X);
    let half = Complex64::new(0.5, 0.0);
    let target = expm_step(&(&x * half), std::f64::consts::FRAC_PI_2).unwrap();
    ProblemSpec::new(
        "toy",
        1,
        sigma(PauliAxis::Z) * Complex64::new(0.3, 0.0),
        vec![x * half],
        target,
    )
    .unwrap()
}

#[test]
fn single_controller_matches_library_calls() {
    let spec = toy();
    let ctrl = Controller::new(DMatrix::from_row_slice(1, 4, &[1.4, 1.8, 1.5, 1.7]), 1.0).unwrap();
    let unc = UncertaintyStructure::standard(&spec).unwrap();
    let opts = AnalysisOptions::default();
    let row = analyze_controller(&spec, &ctrl, &unc, &opts).unwrap();

    let report = sensitivity::analyze(&spec, &ctrl, &unc).unwrap();
    let step = search::choose_step_size(&spec, &ctrl, &unc).unwrap();
    let found =
        search::find_delta_bar(&spec, &ctrl, &unc, opts.threshold, step.step, opts.max_iter)
            .unwrap();
    assert_eq!(row.error, report.error);
    assert_eq!(row.b_vu, report.b_vu);
    assert_eq!(row.b_static, report.b_static);
    assert_eq!(row.log_sensitivity, report.log_sensitivity.map(|s| s.norm));
    assert_eq!(row.step, step.step);
    assert_eq!(row.delta_bar, found.delta_bar);
}

#[test]
fn batch_of_fifty_is_finite_and_round_trips() {
    let spec = problem(1).unwrap().build().unwrap();
    let config = SynthesisConfig {
        seed: 17,
        grad_tol: 1e-4,
        fidelity_filter: 1.0,
        ..SynthesisConfig::default()
    };
    let survivors = batch_synthesize(&spec, 2.0, 40, 50, &config).unwrap();
    assert_eq!(survivors.len(), 50);
    assert!(survivors.windows(2).all(|w| w[0].restart < w[1].restart));

    let dir = tempfile::tempdir().unwrap();
    let mut records = Vec::new();
    for s in &survivors {
        let rec = ControllerRecord::from_survivor(1, s);
        let path = dir.path().join(format!("{}.json", rec.id));
        io::write_controller(&path, &rec).unwrap();
        let back = io::read_controller(&path).unwrap();
        let ctrl = back.controller().unwrap();
        assert_eq!(ctrl, s.synthesized.controller);
        let e = fidelity(&propagate(&spec, &ctrl).unwrap(), &spec.target)
            .unwrap()
            .error;
        assert!((e - back.error).abs() < 1e-12);
        records.push(back);
    }

    let controllers: Vec<Controller> = records.iter().map(|r| r.controller().unwrap()).collect();
    let opts = AnalysisOptions {
        step: Some(0.01),
        ..AnalysisOptions::default()
    };
    let rows: Vec<RobustnessRecord> = analyze_batch(&spec, &controllers, &opts)
        .unwrap()
        .into_iter()
        .zip(&records)
        .map(|(r, rec)| RobustnessRecord::new(rec, &r.unwrap()))
        .collect();
    assert_eq!(rows.len(), 50);
    for r in &rows {
        assert!(
            r.error.is_finite()
                && r.b_vu.is_finite()
                && r.b_static.is_finite()
                && r.delta_bar.is_finite()
        );
        assert!(r.b_static <= r.b_vu * (1.0 + 1e-12));
        if r.terminated == Termination::Crossed && r.error < opts.threshold {
            assert!(r.delta_bar > 0.0);
        }
    }
    let csv = dir.path().join("records.csv");
    io::write_records(&csv, &rows).unwrap();
    assert_eq!(io::read_records(&csv).unwrap(), rows);
}

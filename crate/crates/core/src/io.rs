// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! File formats: controller JSON records, RFC-4180 CSV tables and log-log
//! scatter output (CSV data plus a standalone SVG).
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::Controller;
use crate::error::{Error, Result};
use crate::search::Termination;
use crate::stats::{CorrelationResult, Tail};
use crate::study::Robustness;
use crate::synthesis::{InitStrategy, Survivor};

/// Version of the robustness CSV columns; bumped on any change.
pub const RECORD_SCHEMA_VERSION: u32 = 1;
/// Log-log plots clamp values below this.
pub const LOG_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerRecord {
    pub id: String,
    pub problem: usize,
    pub final_time: f64,
    pub kappa: usize,
    /// `fields[m][k]`, one row per control channel.
    pub fields: Vec<Vec<f64>>,
    pub seed: u64,
    pub restart: u64,
    pub init: InitStrategy,
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_abs_field: f64,
}

impl ControllerRecord {
    pub fn from_survivor(problem: usize, s: &Survivor) -> Self {
        let c = &s.synthesized.controller;
        let fields = (0..c.channels())
            .map(|m| c.fields().row(m).iter().copied().collect())
            .collect();
        Self {
            id: controller_id(s.seed, s.restart),
            problem,
            final_time: c.final_time(),
            kappa: c.steps(),
            fields,
            seed: s.seed,
            restart: s.restart,
            init: s.init,
            error: s.synthesized.error,
            iterations: s.synthesized.iterations,
            converged: s.synthesized.converged,
            max_abs_field: c.fields().amax(),
        }
    }

    pub fn controller(&self) -> Result<Controller> {
        let channels = self.fields.len();
        if self.fields.iter().any(|row| row.len() != self.kappa) {
            return Err(Error::Argument(format!(
                "controller {}: field rows must all have {} steps",
                self.id, self.kappa
            )));
        }
        let flat: Vec<f64> = self.fields.concat();
        Controller::from_flat(channels, self.kappa, &flat, self.final_time)
    }
}

pub fn controller_id(seed: u64, restart: u64) -> String {
    format!("s{seed}-r{restart:05}")
}

pub fn write_controller(path: &Path, rec: &ControllerRecord) -> Result<()> {
    let mut text = serde_json::to_string_pretty(rec)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_controller(path: &Path) -> Result<ControllerRecord> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub id: String,
    pub seed: u64,
    pub restart: u64,
    pub init: InitStrategy,
    pub error: f64,
    pub converged: bool,
    pub max_abs_field: f64,
}

impl From<&ControllerRecord> for IndexRow {
    fn from(r: &ControllerRecord) -> Self {
        Self {
            id: r.id.clone(),
            seed: r.seed,
            restart: r.restart,
            init: r.init,
            error: r.error,
            converged: r.converged,
            max_abs_field: r.max_abs_field,
        }
    }
}

/// One analyzed controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRecord {
    pub schema: u32,
    pub id: String,
    pub problem: usize,
    pub final_time: f64,
    pub kappa: usize,
    pub seed: u64,
    pub restart: u64,
    pub init: InitStrategy,
    pub error: f64,
    pub b_vu: f64,
    pub b_static: f64,
    pub log_sensitivity: Option<f64>,
    pub delta_bar: f64,
    pub n_bar: usize,
    pub step: f64,
    pub step_floored: bool,
    pub terminated: Termination,
}

impl RobustnessRecord {
    pub fn new(rec: &ControllerRecord, r: &Robustness) -> Self {
        Self {
            schema: RECORD_SCHEMA_VERSION,
            id: rec.id.clone(),
            problem: rec.problem,
            final_time: rec.final_time,
            kappa: rec.kappa,
            seed: rec.seed,
            restart: rec.restart,
            init: rec.init,
            error: r.error,
            b_vu: r.b_vu,
            b_static: r.b_static,
            log_sensitivity: r.log_sensitivity,
            delta_bar: r.delta_bar,
            n_bar: r.n_bar,
            step: r.step,
            step_floored: r.step_floored,
            terminated: r.terminated,
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header-only CSV for an empty table of `T`.
pub fn write_csv_header(path: &Path, header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    w.flush()?;
    Ok(())
}

pub const ROBUSTNESS_HEADER: &[&str] = &[
    "schema",
    "id",
    "problem",
    "final_time",
    "kappa",
    "seed",
    "restart",
    "init",
    "error",
    "b_vu",
    "b_static",
    "log_sensitivity",
    "delta_bar",
    "n_bar",
    "step",
    "step_floored",
    "terminated",
];

pub const INDEX_HEADER: &[&str] = &[
    "id",
    "seed",
    "restart",
    "init",
    "error",
    "converged",
    "max_abs_field",
];

pub fn write_records(path: &Path, rows: &[RobustnessRecord]) -> Result<()> {
    if rows.is_empty() {
        write_csv_header(path, ROBUSTNESS_HEADER)
    } else {
        write_csv(path, rows)
    }
}

pub fn read_records(path: &Path) -> Result<Vec<RobustnessRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<RobustnessRecord>, _>>()?;
    if let Some(bad) = rows.iter().find(|r| r.schema != RECORD_SCHEMA_VERSION) {
        return Err(Error::Argument(format!(
            "record {} has schema {}, expected {RECORD_SCHEMA_VERSION}",
            bad.id, bad.schema
        )));
    }
    Ok(rows)
}

/// Quantity pairs that can be tested for correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricPair {
    /// `(B_vu, ε)`
    #[serde(rename = "bvu-error")]
    BoundError,
    /// `(B_vu, δ̄)`
    #[serde(rename = "bvu-delta")]
    BoundDelta,
    /// `(‖S‖, ε)`
    #[serde(rename = "logsens-error")]
    LogSensError,
}

impl MetricPair {
    pub fn name(self) -> &'static str {
        match self {
            Self::BoundError => "bvu-error",
            Self::BoundDelta => "bvu-delta",
            Self::LogSensError => "logsens-error",
        }
    }

    pub fn axis_labels(self) -> (&'static str, &'static str) {
        match self {
            Self::BoundError => ("B_vu", "error"),
            Self::BoundDelta => ("B_vu", "delta_bar"),
            Self::LogSensError => ("log-sensitivity norm", "error"),
        }
    }

    /// `(x, y)` columns; records without a log-sensitivity are skipped.
    pub fn extract(self, rows: &[RobustnessRecord]) -> (Vec<f64>, Vec<f64>) {
        rows.iter()
            .filter_map(|r| match self {
                Self::BoundError => Some((r.b_vu, r.error)),
                Self::BoundDelta => Some((r.b_vu, r.delta_bar)),
                Self::LogSensError => r.log_sensitivity.map(|s| (s, r.error)),
            })
            .unzip()
    }
}

impl std::str::FromStr for MetricPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bvu-error" => Ok(Self::BoundError),
            "bvu-delta" => Ok(Self::BoundDelta),
            "logsens-error" => Ok(Self::LogSensError),
            other => Err(Error::Argument(format!(
                "unknown pair {other:?}; expected bvu-error, bvu-delta or logsens-error"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Pearson,
    Kendall,
}

/// A correlation table row: problem, `t_f`, `κ`, sample size, coefficient,
/// statistic, p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub problem: Option<usize>,
    pub final_time: Option<f64>,
    pub kappa: Option<usize>,
    pub pair: MetricPair,
    pub test: TestKind,
    pub n: usize,
    pub coefficient: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub tail: Tail,
    pub significant: bool,
    /// Empty unless the test could not be run.
    pub error: String,
}

impl CorrelationRow {
    pub fn new(
        rows: &[RobustnessRecord],
        pair: MetricPair,
        test: TestKind,
        c: &CorrelationResult,
    ) -> Self {
        let (problem, final_time, kappa) = common_problem(rows);
        Self {
            problem,
            final_time,
            kappa,
            pair,
            test,
            n: c.n,
            coefficient: c.coefficient,
            statistic: c.statistic,
            p_value: c.p_value,
            tail: c.tail,
            significant: c.significant,
            error: String::new(),
        }
    }

    pub fn failed(
        rows: &[RobustnessRecord],
        pair: MetricPair,
        test: TestKind,
        tail: Tail,
        err: &Error,
    ) -> Self {
        let (problem, final_time, kappa) = common_problem(rows);
        Self {
            problem,
            final_time,
            kappa,
            pair,
            test,
            n: pair.extract(rows).0.len(),
            coefficient: f64::NAN,
            statistic: f64::NAN,
            p_value: f64::NAN,
            tail,
            significant: false,
            error: err.to_string(),
        }
    }
}

/// Problem, `t_f` and `κ` if every record shares them.
fn common_problem(rows: &[RobustnessRecord]) -> (Option<usize>, Option<f64>, Option<usize>) {
    let Some(first) = rows.first() else {
        return (None, None, None);
    };
    let same = |f: &dyn Fn(&RobustnessRecord) -> bool| rows.iter().all(f);
    (
        same(&|r| r.problem == first.problem).then_some(first.problem),
        same(&|r| r.final_time == first.final_time).then_some(first.final_time),
        same(&|r| r.kappa == first.kappa).then_some(first.kappa),
    )
}

pub fn write_scatter_csv(path: &Path, x: &[f64], y: &[f64], labels: (&str, &str)) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([labels.0, labels.1])?;
    for (a, b) in x.iter().zip(y) {
        w.write_record([a.max(LOG_FLOOR).to_string(), b.max(LOG_FLOOR).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn decade_range(v: &[f64]) -> (f64, f64) {
    let logs = v.iter().map(|x| x.max(LOG_FLOOR).log10());
    let (lo, hi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), l| {
        (a.min(l), b.max(l))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Standalone log-log scatter plot with decade ticks.
pub fn scatter_svg(x: &[f64], y: &[f64], labels: (&str, &str), title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const L: f64 = 80.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 60.0;
    let (x0, x1) = decade_range(x);
    let (y0, y1) = decade_range(y);
    let px = |v: f64| L + (v.max(LOG_FLOOR).log10() - x0) / (x1 - x0) * (W - L - R);
    let py = |v: f64| H - B - (v.max(LOG_FLOOR).log10() - y0) / (y1 - y0) * (H - T - B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - T - B
    );
    let xd = (x1 - x0) as i32;
    for i in 0..=xd {
        let e = x0 as i32 + i;
        let p = px(10f64.powi(e));
        let _ = writeln!(
            s,
            r#"<line x1="{p:.2}" y1="{}" x2="{p:.2}" y2="{}" stroke="black"/>"#,
            H - B,
            H - B + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{p:.2}" y="{}" text-anchor="middle">1e{e}</text>"#,
            H - B + 20.0
        );
    }
    let yd = (y1 - y0) as i32;
    for i in 0..=yd {
        let e = y0 as i32 + i;
        let p = py(10f64.powi(e));
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{p:.2}" x2="{L}" y2="{p:.2}" stroke="black"/>"#,
            L - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            L - 8.0,
            p + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (L + W - R) / 2.0,
        H - 15.0,
        escape(labels.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (T + H - B) / 2.0,
        escape(labels.1)
    );
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue" fill-opacity="0.7"/>"#,
            px(*a),
            py(*b)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

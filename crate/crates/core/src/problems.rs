// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! Benchmark gate problems on linear qubit registers.
//!
//! Drift Hamiltonians are the rotating-frame nearest-neighbour forms
//!
//! ```text
//! H0 = ½ Σ_{ℓ<Q} (α σx σx + α σy σy + β σz σz)      (Ising ZZ: α=0, β=1; XXX: α=β=1)
//! H0 = ½ Σ_{ℓ<Q} σz σz − ½ Σ_ℓ (ℓ+2) σz_ℓ            (Ising ZZ with Stark shift)
//! ```
//!
//! in units of ħJ. Qubit 1 is the leftmost tensor factor, so basis index
//! `b = Σ_ℓ bit_ℓ 2^{Q-ℓ}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, haar_unitary, pauli_embed, Operator, PauliAxis};

/// Seed of the Haar-random target shared by problems 6 and 9.
pub const RANDOM_TARGET_SEED: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingKind {
    IsingZZ,
    HeisenbergXXX,
    IsingZZStark,
}

impl CouplingKind {
    /// `(α, β)` weights of the xx+yy and zz couplings.
    pub fn weights(self) -> (f64, f64) {
        match self {
            CouplingKind::IsingZZ | CouplingKind::IsingZZStark => (0.0, 1.0),
            CouplingKind::HeisenbergXXX => (1.0, 1.0),
        }
    }

    pub fn has_onsite_terms(self) -> bool {
        matches!(self, CouplingKind::IsingZZStark)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlTopology {
    IndividualQubit,
    GlobalSimultaneous,
    FirstQubitOnly,
}

impl ControlTopology {
    pub fn num_controls(self, qubits: usize) -> usize {
        match self {
            ControlTopology::IndividualQubit => 2 * qubits,
            ControlTopology::GlobalSimultaneous | ControlTopology::FirstQubitOnly => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    Cnot,
    Qft,
    RandomUnitary { seed: u64 },
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn build_drift(qubits: usize, kind: CouplingKind) -> Result<Operator> {
    if qubits < 2 {
        return Err(Error::Argument(format!(
            "drift needs at least 2 qubits, got {qubits}"
        )));
    }
    let n = 1usize << qubits;
    let (alpha, beta) = kind.weights();
    let mut h = Operator::zeros(n, n);
    for l in 1..qubits {
        for (axis, w) in [
            (PauliAxis::X, alpha),
            (PauliAxis::Y, alpha),
            (PauliAxis::Z, beta),
        ] {
            if w == 0.0 {
                continue;
            }
            let pair = pauli_embed(axis, l, qubits)? * pauli_embed(axis, l + 1, qubits)?;
            h += pair * real(0.5 * w);
        }
    }
    if kind.has_onsite_terms() {
        for l in 1..=qubits {
            h -= pauli_embed(PauliAxis::Z, l, qubits)? * real(0.5 * (l as f64 + 2.0));
        }
    }
    Ok(h)
}

pub fn build_controls(qubits: usize, topo: ControlTopology) -> Result<Vec<Operator>> {
    if qubits < 1 {
        return Err(Error::Argument("controls need at least 1 qubit".into()));
    }
    let half = real(0.5);
    let ops = match topo {
        ControlTopology::IndividualQubit => {
            let mut ops = Vec::with_capacity(2 * qubits);
            for l in 1..=qubits {
                ops.push(pauli_embed(PauliAxis::X, l, qubits)? * half);
                ops.push(pauli_embed(PauliAxis::Y, l, qubits)? * half);
            }
            ops
        }
        ControlTopology::GlobalSimultaneous => {
            let n = 1usize << qubits;
            let mut hx = Operator::zeros(n, n);
            let mut hy = Operator::zeros(n, n);
            for l in 1..=qubits {
                hx += pauli_embed(PauliAxis::X, l, qubits)?;
                hy += pauli_embed(PauliAxis::Y, l, qubits)?;
            }
            vec![hx * half, hy * half]
        }
        ControlTopology::FirstQubitOnly => vec![
            pauli_embed(PauliAxis::X, 1, qubits)? * half,
            pauli_embed(PauliAxis::Y, 1, qubits)? * half,
        ],
    };
    Ok(ops)
}

/// CNOT with qubit 1 as control: swaps |10⟩ and |11⟩.
pub fn cnot() -> Operator {
    let mut u = Operator::zeros(4, 4);
    u[(0, 0)] = real(1.0);
    u[(1, 1)] = real(1.0);
    u[(2, 3)] = real(1.0);
    u[(3, 2)] = real(1.0);
    u
}

/// `QFT[j][k] = ω^{jk}/√N`, `ω = exp(2πi/N)`.
pub fn qft(n: usize) -> Operator {
    let norm = 1.0 / (n as f64).sqrt();
    Operator::from_fn(n, n, |j, k| {
        // reduce jk mod N before taking the angle to keep phases exact
        let power = (j * k) % n;
        Complex64::from_polar(norm, 2.0 * PI * power as f64 / n as f64)
    })
}

pub fn build_target(kind: TargetKind, n: usize) -> Result<Operator> {
    match kind {
        TargetKind::Cnot => {
            if n != 4 {
                return Err(Error::Argument(format!("CNOT acts on N = 4, not {n}")));
            }
            Ok(cnot())
        }
        TargetKind::Qft => {
            if !n.is_power_of_two() {
                return Err(Error::Argument(format!("QFT register size {n} is not 2^Q")));
            }
            Ok(qft(n))
        }
        TargetKind::RandomUnitary { seed } => haar_unitary(n, seed),
    }
}

/// A concrete gate problem: drift, controls and target on `N = 2^Q` levels.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub label: String,
    pub qubits: usize,
    pub drift: Operator,
    pub controls: Vec<Operator>,
    pub target: Operator,
}

impl ProblemSpec {
    pub fn new(
        label: impl Into<String>,
        qubits: usize,
        drift: Operator,
        controls: Vec<Operator>,
        target: Operator,
    ) -> Result<Self> {
        let n = 1usize << qubits;
        let check_dim = |op: &Operator, what: &str| {
            if op.nrows() != n || op.ncols() != n {
                Err(Error::Argument(format!(
                    "{what} is {}x{}, expected {n}x{n}",
                    op.nrows(),
                    op.ncols()
                )))
            } else {
                Ok(())
            }
        };
        check_dim(&drift, "drift")?;
        check_dim(&target, "target")?;
        if !linalg::is_hermitian(&drift, linalg::HERMITIAN_TOL) {
            return Err(Error::Contract("drift Hamiltonian is not Hermitian".into()));
        }
        for (m, h) in controls.iter().enumerate() {
            check_dim(h, "control")?;
            if !linalg::is_hermitian(h, linalg::HERMITIAN_TOL) {
                return Err(Error::Contract(format!(
                    "control {} is not Hermitian",
                    m + 1
                )));
            }
        }
        if !linalg::is_unitary(&target, 1e-10) {
            return Err(Error::Contract("target gate is not unitary".into()));
        }
        Ok(Self {
            label: label.into(),
            qubits,
            drift,
            controls,
            target,
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn num_controls(&self) -> usize {
        self.controls.len()
    }
}

/// One row of the benchmark table; builds its matrices on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemTemplate {
    pub id: usize,
    pub coupling: CouplingKind,
    pub qubits: usize,
    pub topology: ControlTopology,
    pub target: TargetKind,
    pub final_times: Vec<f64>,
    pub step_counts: Vec<usize>,
}

impl ProblemTemplate {
    pub fn build(&self) -> Result<ProblemSpec> {
        let drift = build_drift(self.qubits, self.coupling)?;
        let controls = build_controls(self.qubits, self.topology)?;
        let target = build_target(self.target, 1 << self.qubits)?;
        ProblemSpec::new(
            format!("problem-{}", self.id),
            self.qubits,
            drift,
            controls,
            target,
        )
    }

    pub fn admits(&self, final_time: f64, steps: usize) -> bool {
        self.final_times.contains(&final_time) && self.step_counts.contains(&steps)
    }
}

/// The nine benchmark problems, indexed so that `registry()[i].id == i + 1`.
pub fn problem_registry() -> Vec<ProblemTemplate> {
    use ControlTopology::*;
    use CouplingKind::*;
    let random = TargetKind::RandomUnitary {
        seed: RANDOM_TARGET_SEED,
    };
    let row = |id, coupling, qubits, topology, target, tf: &[f64], k: &[usize]| ProblemTemplate {
        id,
        coupling,
        qubits,
        topology,
        target,
        final_times: tf.to_vec(),
        step_counts: k.to_vec(),
    };
    vec![
        row(
            1,
            IsingZZ,
            2,
            IndividualQubit,
            TargetKind::Cnot,
            &[2., 3., 4.],
            &[40, 64, 128],
        ),
        row(
            2,
            IsingZZ,
            3,
            IndividualQubit,
            TargetKind::Qft,
            &[7., 8.],
            &[40, 64],
        ),
        row(
            3,
            IsingZZ,
            4,
            IndividualQubit,
            TargetKind::Qft,
            &[12., 15., 20.],
            &[40, 64],
        ),
        row(
            4,
            IsingZZ,
            5,
            IndividualQubit,
            TargetKind::Qft,
            &[12., 15., 25.],
            &[64, 128],
        ),
        row(
            5,
            HeisenbergXXX,
            3,
            IndividualQubit,
            TargetKind::Qft,
            &[7., 8.],
            &[40, 64],
        ),
        row(
            6,
            HeisenbergXXX,
            3,
            IndividualQubit,
            random,
            &[7., 8.],
            &[40, 64],
        ),
        row(
            7,
            IsingZZStark,
            5,
            GlobalSimultaneous,
            TargetKind::Qft,
            &[125., 150.],
            &[1000],
        ),
        row(
            8,
            HeisenbergXXX,
            3,
            FirstQubitOnly,
            TargetKind::Qft,
            &[10., 15.],
            &[32, 64],
        ),
        row(
            9,
            HeisenbergXXX,
            3,
            FirstQubitOnly,
            random,
            &[10., 15.],
            &[32, 64],
        ),
    ]
}

pub fn problem(id: usize) -> Result<ProblemTemplate> {
    problem_registry()
        .into_iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Error::Argument(format!("unknown problem id {id}; expected 1..=9")))
}

// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex matrix kernel.
//!
//! Operators are plain `DMatrix<Complex64>` values indexed `(row, col)` with
//! `0..N`. Units are ħ = 1 throughout: a step propagator is `exp(-i H dt)`.
//!
//! Two routes to the Fréchet derivative of the step exponential live here:
//!
//! * [`frechet_step`] exponentiates the block upper-triangular matrix
//!   `[[-iH dt, -i s Ĥ dt], [0, -iH dt]]` and reads the off-diagonal block.
//! * [`HermitianSpectrum::frechet`] uses the eigenbasis of `H`, where the
//!   convolution integral reduces to divided differences of `exp(-iλ dt)`.
//!
//! The spectral route is what the propagation and sensitivity code uses
//! since the step eigendecomposition is already on hand; the block route is
//! the reference it is checked against.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Square complex matrix acting on the register Hilbert space.
pub type Operator = DMatrix<Complex64>;

/// Tolerance for the Hermitian contract on inputs to the exponential.
pub const HERMITIAN_TOL: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

pub fn identity(n: usize) -> Operator {
    Operator::identity(n, n)
}

pub fn sigma(axis: PauliAxis) -> Operator {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    match axis {
        PauliAxis::X => Operator::from_row_slice(2, 2, &[z, o, o, z]),
        PauliAxis::Y => Operator::from_row_slice(2, 2, &[z, -I, I, z]),
        PauliAxis::Z => Operator::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

/// `σ_axis` on qubit `site` (1-based, qubit 1 is the leftmost tensor factor)
/// of a `qubits`-qubit register.
pub fn pauli_embed(axis: PauliAxis, site: usize, qubits: usize) -> Result<Operator> {
    if site == 0 || site > qubits {
        return Err(Error::Argument(format!(
            "pauli site {site} outside 1..={qubits}"
        )));
    }
    let mut out = identity(1);
    for q in 1..=qubits {
        let factor = if q == site { sigma(axis) } else { identity(2) };
        out = kron(&out, &factor);
    }
    Ok(out)
}

/// Largest entrywise modulus.
pub fn max_abs(a: &Operator) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius_norm(a: &Operator) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `max |A - A†|`.
pub fn hermiticity_defect(a: &Operator) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(a: &Operator, tol: f64) -> bool {
    hermiticity_defect(a) < tol
}

/// `max |U†U - I|`.
pub fn unitarity_defect(u: &Operator) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - identity(n)))
}

pub fn is_unitary(u: &Operator, tol: f64) -> bool {
    unitarity_defect(u) < tol
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &Operator, b: &Operator) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..n {
        for c in 0..n {
            acc += a[(r, c)] * b[(c, r)];
        }
    }
    acc
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

fn ensure_hermitian(h: &Operator, what: &str) -> Result<()> {
    let defect = hermiticity_defect(h);
    if defect < HERMITIAN_TOL {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "{what} is not Hermitian (max |A - A†| = {defect:.3e})"
        )))
    }
}

/// `(e^{iθ} - 1) / (iθ)` evaluated without cancellation.
fn phi1_imag(theta: f64) -> Complex64 {
    if theta == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let half = 0.5 * theta;
    let s = half.sin();
    let em1 = Complex64::new(-2.0 * s * s, theta.sin());
    em1 / Complex64::new(0.0, theta)
}

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian operator, with the
/// step-level quantities derived from it.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub vectors: Operator,
    pub values: DVector<f64>,
}

impl HermitianSpectrum {
    pub fn new(h: &Operator) -> Result<Self> {
        ensure_hermitian(h, "generator")?;
        let eig = SymmetricEigen::new(h.clone());
        Ok(Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(-i H dt)`.
    pub fn exp_step(&self, dt: f64) -> Operator {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let phase = Complex64::from_polar(1.0, -self.values[c] * dt);
            for r in 0..n {
                scaled[(r, c)] *= phase;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Divided-difference weights `G[j][l] = ∫_0^dt e^{-iλ_j(dt-τ)} e^{-iλ_l τ} dτ`.
    fn weights(&self, dt: f64) -> Operator {
        let n = self.dim();
        Operator::from_fn(n, n, |j, l| {
            let lj = self.values[j];
            let ll = self.values[l];
            Complex64::from_polar(dt, -lj * dt) * phi1_imag((lj - ll) * dt)
        })
    }

    /// `-i s ∫_0^dt e^{-iH(dt-τ)} Ĥ e^{-iHτ} dτ` in the eigenbasis of `H`.
    pub fn frechet(&self, hhat: &Operator, scale: f64, dt: f64) -> Operator {
        let v = &self.vectors;
        let rotated = v.adjoint() * hhat * v;
        let g = self.weights(dt);
        let inner = rotated.component_mul(&g) * Complex64::new(0.0, -scale);
        v * inner * v.adjoint()
    }

    /// Operator `K` with `Tr[A · frechet(Ĥ, 1, dt)] = Tr[Ĥ K]` for every `Ĥ`.
    ///
    /// Lets one step contract against many structure matrices at O(N²) each
    /// after a single O(N³) preparation.
    pub fn frechet_kernel(&self, a: &Operator, dt: f64) -> Operator {
        let v = &self.vectors;
        let rotated = v.adjoint() * a * v;
        let g = self.weights(dt);
        let n = self.dim();
        // W[j][l] = G[j][l] · Ã[l][j]; K = -i V Wᵀ V†
        let wt = Operator::from_fn(n, n, |l, j| g[(j, l)] * rotated[(l, j)]);
        (v * wt * v.adjoint()) * Complex64::new(0.0, -1.0)
    }
}

/// `exp(-i H dt)` for Hermitian `H`.
pub fn expm_step(h: &Operator, dt: f64) -> Result<Operator> {
    if !dt.is_finite() {
        return Err(Error::Argument(format!("non-finite duration {dt}")));
    }
    Ok(HermitianSpectrum::new(h)?.exp_step(dt))
}

/// Fréchet derivative of `exp(-i(H + δ s Ĥ) dt)` at `δ = 0`, by exponentiating
/// the 2N×2N block upper-triangular augmentation.
pub fn frechet_step(h: &Operator, hhat: &Operator, scale: f64, dt: f64) -> Result<Operator> {
    ensure_hermitian(h, "generator")?;
    ensure_hermitian(hhat, "structure")?;
    if h.shape() != hhat.shape() {
        return Err(Error::Argument(format!(
            "shape mismatch {:?} vs {:?}",
            h.shape(),
            hhat.shape()
        )));
    }
    let n = h.nrows();
    let diag = h * Complex64::new(0.0, -dt);
    let off = hhat * Complex64::new(0.0, -dt * scale);
    let mut block = Operator::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&diag);
    block.view_mut((n, n), (n, n)).copy_from(&diag);
    block.view_mut((0, n), (n, n)).copy_from(&off);
    let e = block.exp();
    Ok(e.view((0, n), (n, n)).into_owned())
}

/// Haar-distributed unitary from a seeded complex Ginibre matrix.
///
/// Entries are `(a + ib)/√2` with `a, b` standard normal drawn in row-major
/// order from `ChaCha20Rng::seed_from_u64(seed)`. The QR factor `Q` is
/// multiplied by the phases of `diag(R)` so the factorization is unique.
pub fn haar_unitary(n: usize, seed: u64) -> Result<Operator> {
    if n == 0 {
        return Err(Error::Argument("haar_unitary needs N >= 1".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        entries.push(Complex64::new(re * scale, im * scale));
    }
    let z = Operator::from_row_slice(n, n, &entries);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, c)] *= phase;
        }
    }
    Ok(q)
}


#[cfg(test)]
mod tests {
    use super::testing::random_hermitian;
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_qubit_z_is_sigma_z() {
        let z = pauli_embed(PauliAxis::Z, 1, 1).unwrap();
        let expected =
            Operator::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
        assert_eq!(z, expected);
    }

    #[test]
    fn x_on_first_of_two() {
        let x = pauli_embed(PauliAxis::X, 1, 2).unwrap();
        assert_eq!(x, kron(&sigma(PauliAxis::X), &identity(2)));
    }

    #[test]
    fn embedded_pauli_squares_to_identity() {
        let y = pauli_embed(PauliAxis::Y, 2, 3).unwrap();
        assert_eq!(y.nrows(), 8);
        assert!(y.trace().norm() < 1e-15);
        assert!(max_abs(&(&y * &y - identity(8))) < 1e-15);
        assert!(is_hermitian(&y, 1e-15));
    }

    #[test]
    fn site_out_of_range() {
        assert!(matches!(
            pauli_embed(PauliAxis::X, 0, 2),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            pauli_embed(PauliAxis::X, 3, 2),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn pauli_commutation_pattern() {
        let q = 3;
        for a in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
            for b in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
                let pa = pauli_embed(a, 1, q).unwrap();
                let pb = pauli_embed(b, 3, q).unwrap();
                assert!(max_abs(&commutator(&pa, &pb)) < 1e-12);
            }
        }
        let x = pauli_embed(PauliAxis::X, 2, q).unwrap();
        let y = pauli_embed(PauliAxis::Y, 2, q).unwrap();
        assert!(max_abs(&(&x * &y + &y * &x)) < 1e-12);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let u = expm_step(&Operator::zeros(4, 4), 0.3).unwrap();
        assert!(max_abs(&(u - identity(4))) < 1e-15);
    }

    #[test]
    fn half_x_for_pi_is_minus_i_x() {
        let h = sigma(PauliAxis::X) * c(0.5, 0.0);
        let u = expm_step(&h, PI).unwrap();
        let expected = sigma(PauliAxis::X) * c(0.0, -1.0);
        assert!(max_abs(&(u - expected)) < 1e-14);
    }

    #[test]
    fn random_exp_is_unitary() {
        let h = random_hermitian(8, 11);
        let u = expm_step(&h, 0.1).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut h = random_hermitian(3, 2);
        h[(0, 1)] += c(1e-6, 0.0);
        assert!(matches!(expm_step(&h, 0.1), Err(Error::Contract(_))));
    }

    #[test]
    fn exp_semigroup() {
        let h = random_hermitian(6, 5);
        let a = expm_step(&h, 0.13).unwrap();
        let b = expm_step(&h, 0.29).unwrap();
        let ab = expm_step(&h, 0.42).unwrap();
        assert!(max_abs(&(a * b - ab)) < 1e-10);
    }

    #[test]
    fn frechet_of_zero_structure() {
        let h = random_hermitian(4, 1);
        let x = frechet_step(&h, &Operator::zeros(4, 4), 1.0, 0.2).unwrap();
        assert!(max_abs(&x) == 0.0);
    }

    #[test]
    fn frechet_commuting_closed_form() {
        let h = pauli_embed(PauliAxis::Z, 1, 2).unwrap() * c(0.7, 0.0);
        let hhat = pauli_embed(PauliAxis::Z, 2, 2).unwrap();
        let (scale, dt) = (1.3, 0.4);
        let x = frechet_step(&h, &hhat, scale, dt).unwrap();
        let expected = &hhat * expm_step(&h, dt).unwrap() * c(0.0, -scale * dt);
        assert!(max_abs(&(x - expected)) < 1e-13);
    }

    fn central_difference(h: &Operator, hhat: &Operator, dt: f64, step: f64) -> Operator {
        let plus = expm_step(&(h + hhat * c(step, 0.0)), dt).unwrap();
        let minus = expm_step(&(h - hhat * c(step, 0.0)), dt).unwrap();
        (plus - minus) / c(2.0 * step, 0.0)
    }

    #[test]
    fn frechet_matches_finite_difference() {
        let h = random_hermitian(4, 21);
        let hhat = random_hermitian(4, 22);
        let x = frechet_step(&h, &hhat, 1.0, 0.2).unwrap();
        let fd = central_difference(&h, &hhat, 0.2, 1e-6);
        let rel = max_abs(&(&x - &fd)) / max_abs(&x);
        assert!(rel < 1e-6, "relative error {rel:e}");
    }

    #[test]
    fn spectral_and_block_routes_agree() {
        for (n, seed) in [(2, 1u64), (4, 2), (8, 3), (8, 4)] {
            let h = random_hermitian(n, seed);
            let hhat = random_hermitian(n, seed + 100);
            let block = frechet_step(&h, &hhat, 0.8, 0.25).unwrap();
            let spectral = HermitianSpectrum::new(&h)
                .unwrap()
                .frechet(&hhat, 0.8, 0.25);
            assert!(max_abs(&(block - spectral)) < 1e-12);
        }
    }

    #[test]
    fn spectral_route_handles_degenerate_spectrum() {
        // drift-like operator with repeated eigenvalues
        let h = (pauli_embed(PauliAxis::Z, 1, 2).unwrap()
            * pauli_embed(PauliAxis::Z, 2, 2).unwrap())
            * c(0.5, 0.0);
        let hhat = random_hermitian(4, 9);
        let block = frechet_step(&h, &hhat, 1.0, 0.3).unwrap();
        let spectral = HermitianSpectrum::new(&h).unwrap().frechet(&hhat, 1.0, 0.3);
        assert!(max_abs(&(block - spectral)) < 1e-12);
    }

    #[test]
    fn frechet_kernel_contracts_trace() {
        let h = random_hermitian(4, 31);
        let a = random_hermitian(4, 32) * c(0.3, 0.9);
        let spec = HermitianSpectrum::new(&h).unwrap();
        let k = spec.frechet_kernel(&a, 0.17);
        for seed in 40..44 {
            let hhat = random_hermitian(4, seed);
            let direct = trace_product(&a, &frechet_step(&h, &hhat, 1.0, 0.17).unwrap());
            let via_kernel = trace_product(&hhat, &k);
            assert!((direct - via_kernel).norm() < 1e-12);
        }
    }

    #[test]
    fn frechet_linear_in_structure_and_scale() {
        let h = random_hermitian(4, 50);
        let h1 = random_hermitian(4, 51);
        let h2 = random_hermitian(4, 52);
        let (a, b) = (0.7, -1.9);
        let combo = &h1 * c(a, 0.0) + &h2 * c(b, 0.0);
        let lhs = frechet_step(&h, &combo, 1.0, 0.3).unwrap();
        let rhs = frechet_step(&h, &h1, 1.0, 0.3).unwrap() * c(a, 0.0)
            + frechet_step(&h, &h2, 1.0, 0.3).unwrap() * c(b, 0.0);
        assert!(max_abs(&(lhs - rhs)) < 1e-10);
        let scaled = frechet_step(&h, &h1, 2.5, 0.3).unwrap();
        let base = frechet_step(&h, &h1, 1.0, 0.3).unwrap() * c(2.5, 0.0);
        assert!(max_abs(&(scaled - base)) < 1e-10);
    }

    #[test]
    fn haar_is_unitary_and_deterministic() {
        let u2 = haar_unitary(2, 7).unwrap();
        assert!(unitarity_defect(&u2) < 1e-12);
        let a = haar_unitary(8, 2024).unwrap();
        let b = haar_unitary(8, 2024).unwrap();
        assert_eq!(a, b);
        let det = a.clone().determinant().norm();
        assert!((det - 1.0).abs() < 1e-10);
        assert_ne!(a, haar_unitary(8, 2025).unwrap());
    }

    #[test]
    fn haar_diagonal_phase_is_uniform_on_average() {
        // The phase normalization removes the bias of raw QR towards a real
        // positive diagonal; the mean of U[0][0] over many draws should vanish.
        let mut mean = c(0.0, 0.0);
        let draws = 2000;
        for s in 0..draws {
            mean += haar_unitary(2, s).unwrap()[(0, 0)];
        }
        mean /= c(draws as f64, 0.0);
        assert!(mean.norm() < 0.05, "mean {mean}");
    }
}

// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! One-tailed correlation tests.
//!
//! Pearson: `t = r √((n−2)/(1−r²))` referred to Student's t with `n − 2`
//! degrees of freedom. Kendall: τ-b with the tie-corrected normal
//! approximation for `S = concordant − discordant`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Direction of the alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Negative,
    Positive,
}

impl std::str::FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negative" | "neg" | "-" => Ok(Self::Negative),
            "positive" | "pos" | "+" => Ok(Self::Positive),
            other => Err(Error::Argument(format!("unknown tail {other:?}"))),
        }
    }
}

impl std::fmt::Display for Tail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Negative => "negative",
            Self::Positive => "positive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub n: usize,
    /// `r` or `τ`.
    pub coefficient: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub tail: Tail,
    pub significant: bool,
}

impl CorrelationResult {
    fn new(n: usize, coefficient: f64, statistic: f64, p_value: f64, tail: Tail) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            n,
            coefficient,
            statistic,
            p_value,
            tail,
            significant: p_value < SIGNIFICANCE_LEVEL,
        }
    }
}

fn one_tailed<D: ContinuousCDF<f64, f64>>(dist: &D, statistic: f64, tail: Tail) -> f64 {
    match tail {
        Tail::Negative => dist.cdf(statistic),
        Tail::Positive => dist.sf(statistic),
    }
}

fn check_sample(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "sample lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientSample {
            needed: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Argument("sample contains non-finite values".into()));
    }
    Ok(())
}

/// Test of a known coefficient `r` from `n` pairs.
pub fn pearson_from_coefficient(r: f64, n: usize, tail: Tail) -> Result<CorrelationResult> {
    if n < 3 {
        return Err(Error::InsufficientSample { needed: 3, got: n });
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::Argument(format!("correlation {r} outside [-1, 1]")));
    }
    let dof = (n - 2) as f64;
    if 1.0 - r * r <= 0.0 {
        let statistic = r.signum() * f64::INFINITY;
        let p = match (tail, r > 0.0) {
            (Tail::Positive, true) | (Tail::Negative, false) => 0.0,
            _ => 1.0,
        };
        return Ok(CorrelationResult::new(n, r, statistic, p, tail));
    }
    let statistic = r * (dof / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(CorrelationResult::new(
        n,
        r,
        statistic,
        one_tailed(&dist, statistic, tail),
        tail,
    ))
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_sample(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateSample("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn pearson_test(x: &[f64], y: &[f64], tail: Tail) -> Result<CorrelationResult> {
    let r = pearson_r(x, y)?;
    pearson_from_coefficient(r, x.len(), tail)
}

/// Sizes of runs of equal values.
fn tie_groups(v: &[f64]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut run = 1;
    for w in s.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            if run > 1 {
                groups.push(run);
            }
            run = 1;
        }
    }
    if run > 1 {
        groups.push(run);
    }
    groups
}

pub fn kendall_test(x: &[f64], y: &[f64], tail: Tail) -> Result<CorrelationResult> {
    check_sample(x, y)?;
    let n = x.len();
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[j] - x[i]).partial_cmp(&0.0).unwrap() as i64;
            let b = (y[j] - y[i]).partial_cmp(&0.0).unwrap() as i64;
            s += a * b;
        }
    }
    let tx = tie_groups(x);
    let ty = tie_groups(y);
    let nf = n as f64;
    let n0 = nf * (nf - 1.0) / 2.0;
    let pairs = |g: &[usize]| g.iter().map(|&t| (t * (t - 1) / 2) as f64).sum::<f64>();
    let (n1, n2) = (pairs(&tx), pairs(&ty));
    if n1 >= n0 || n2 >= n0 {
        return Err(Error::DegenerateSample("all values tied".into()));
    }
    let tau = s as f64 / ((n0 - n1) * (n0 - n2)).sqrt();

    let sum = |g: &[usize], f: &dyn Fn(f64) -> f64| g.iter().map(|&t| f(t as f64)).sum::<f64>();
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt = sum(&tx, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum(&ty, &|u| u * (u - 1.0) * (2.0 * u + 5.0));
    let v1 = sum(&tx, &|t| t * (t - 1.0)) * sum(&ty, &|u| u * (u - 1.0)) / (2.0 * nf * (nf - 1.0));
    let v2 = sum(&tx, &|t| t * (t - 1.0) * (t - 2.0)) * sum(&ty, &|u| u * (u - 1.0) * (u - 2.0))
        / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    let var = (v0 - vt - vu) / 18.0 + v1 + v2;
    let z = s as f64 / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(CorrelationResult::new(
        n,
        tau.clamp(-1.0, 1.0),
        z,
        one_tailed(&normal, z, tail),
        tail,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let r = pearson_test(&x, &y, Tail::Positive).unwrap();
        assert!((r.coefficient - 1.0).abs() < 1e-12);
        assert!(r.p_value < 1e-12);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(
            pearson_test(&x, &[4.0; 3], Tail::Positive),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            kendall_test(&[1.0; 3], &x, Tail::Positive),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn two_points_are_insufficient() {
        assert!(matches!(
            pearson_test(&[1.0, 2.0], &[1.0, 3.0], Tail::Positive),
            Err(Error::InsufficientSample { .. })
        ));
    }

    #[test]
    fn kendall_small_fixture() {
        let r = kendall_test(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0], Tail::Positive).unwrap();
        assert!((r.coefficient - 2.0 / 3.0).abs() < 1e-15);
        // no ties: z = 3τ√(n(n−1)) / √(2(2n+5))
        let z = 3.0 * (2.0 / 3.0) * 12f64.sqrt() / 26f64.sqrt();
        assert!((r.statistic - z).abs() < 1e-12);
    }

    #[test]
    fn kendall_reversed_order() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| -v.powi(3)).collect();
        let r = kendall_test(&x, &y, Tail::Negative).unwrap();
        assert_eq!(r.coefficient, -1.0);
        assert!(r.p_value < 1e-6);
    }

    /// Brute-force τ-b from pair classification.
    fn tau_b_oracle(x: &[f64], y: &[f64]) -> f64 {
        let (mut c, mut d, mut tx, mut ty) = (0.0f64, 0.0, 0.0, 0.0);
        for i in 0..x.len() {
            for j in 0..i {
                let dx = x[i] - x[j];
                let dy = y[i] - y[j];
                if dx == 0.0 && dy == 0.0 {
                } else if dx == 0.0 {
                    tx += 1.0;
                } else if dy == 0.0 {
                    ty += 1.0;
                } else if dx * dy > 0.0 {
                    c += 1.0;
                } else {
                    d += 1.0;
                }
            }
        }
        (c - d) / ((c + d + tx) * (c + d + ty)).sqrt()
    }

    #[test]
    fn tau_b_with_ties_matches_pair_oracle() {
        let x = [1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 4.0, 5.0];
        let y = [2.0, 1.0, 1.0, 4.0, 3.0, 3.0, 5.0, 5.0];
        let r = kendall_test(&x, &y, Tail::Positive).unwrap();
        assert!((r.coefficient - tau_b_oracle(&x, &y)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 5..40),
            a in 0.1f64..10.0, b in -5.0f64..5.0, c in 0.1f64..10.0, d in -5.0f64..5.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Ok(base) = pearson_r(&x, &y) {
                let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let ys: Vec<f64> = y.iter().map(|v| c * v + d).collect();
                prop_assert!((pearson_r(&xs, &ys).unwrap() - base).abs() < 1e-12);
            }
        }

        #[test]
        fn negation_mirrors_tails(
            pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 5..40),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            if let Ok(p) = pearson_test(&x, &y, Tail::Positive) {
                let q = pearson_test(&x, &neg, Tail::Positive).unwrap();
                prop_assert!((p.coefficient + q.coefficient).abs() < 1e-12);
                prop_assert!((p.p_value - (1.0 - q.p_value)).abs() < 1e-9);
            }
            if let Ok(p) = kendall_test(&x, &y, Tail::Positive) {
                let q = kendall_test(&x, &neg, Tail::Positive).unwrap();
                prop_assert!((p.coefficient + q.coefficient).abs() < 1e-12);
                prop_assert!((p.p_value - (1.0 - q.p_value)).abs() < 1e-9);
            }
        }

        #[test]
        fn kendall_monotone_invariance(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..30),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Ok(base) = kendall_test(&x, &y, Tail::Negative) {
                let xs: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let ys: Vec<f64> = y.iter().map(|v| v.powi(3) + v).collect();
                let t = kendall_test(&xs, &ys, Tail::Negative).unwrap();
                prop_assert!((t.coefficient - base.coefficient).abs() < 1e-12);
                prop_assert!((t.p_value - base.p_value).abs() < 1e-12);
            }
        }

        #[test]
        fn p_values_in_unit_interval(r in -1.0f64..=1.0, n in 3usize..500) {
            for tail in [Tail::Negative, Tail::Positive] {
                let t = pearson_from_coefficient(r, n, tail).unwrap();
                prop_assert!((0.0..=1.0).contains(&t.p_value));
            }
        }
    }
}

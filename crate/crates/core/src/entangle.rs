//! Entanglement measures of a two-particle pure state `Σ a_ij |i⟩|j⟩`.

use faer::{Mat, MatRef};

use crate::basis;
use crate::error::{Error, Result};
use crate::linalg;

/// Allowed deviation of `‖a‖_F` from one.
pub const NORM_TOL: f64 = 1e-8;

/// Schmidt coefficients below this are treated as exact zeros.
pub const SCHMIDT_FLOOR: f64 = 1e-14;

fn frobenius(a: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

fn check_norm(a: MatRef<'_, f64>) -> Result<()> {
    let norm = frobenius(a);
    if (norm - 1.0).abs() > NORM_TOL || !norm.is_finite() {
        return Err(Error::Normalization { norm });
    }
    Ok(())
}

/// Singular values of `a`, nonincreasing, with tiny ones clamped to zero.
pub fn schmidt_coefficients(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    check_norm(a)?;
    let mut s = linalg::singular_values(a).map_err(Error::Linalg)?;
    for v in &mut s {
        if *v < SCHMIDT_FLOOR {
            *v = 0.0;
        }
    }
    Ok(s)
}

fn entropy_of(schmidt: &[f64]) -> f64 {
    let s: f64 = schmidt
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let p = x * x;
            -p * p.ln()
        })
        .sum();
    s.max(0.0)
}

/// Von Neumann entropy of either reduced state, in nats.
pub fn entropy(a: MatRef<'_, f64>) -> Result<f64> {
    Ok(entropy_of(&schmidt_coefficients(a)?))
}

/// Expectation of the fidelity witness built on `Σ_{i≤n_w} |ii⟩/√n_w`.
pub fn witness(a: MatRef<'_, f64>, n_w: usize) -> Result<f64> {
    if n_w < 1 {
        return Err(Error::param("n_w", "must be at least 1"));
    }
    let n = a.nrows().min(a.ncols());
    if n_w > n {
        return Err(Error::param("n_w", format!("{n_w} exceeds basis size {n}")));
    }
    check_norm(a)?;
    let trace: f64 = (0..n_w).map(|i| a[(i, i)]).sum();
    let nw = n_w as f64;
    Ok(1.0 / nw - trace * trace / nw)
}

/// Diagonal of the reduced state of particle A.
pub fn mode_probabilities(a: MatRef<'_, f64>) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * a[(i, j)]).sum())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionObservables {
    pub mean_u1: f64,
    pub mean_u2: f64,
    pub corr_u1u2: f64,
    pub covariance: f64,
}

pub fn position_observables(a: MatRef<'_, f64>) -> PositionObservables {
    let (n1, n2) = (a.nrows(), a.ncols());
    let u1 = basis::position_matrix(n1);
    let u2 = basis::position_matrix(n2);
    // u1·a·u2 gives ⟨u1u2⟩ = Σ a ∘ (u1 a u2)
    let u1a = linalg::matmul_seq(u1.as_ref(), a);
    let au2 = linalg::matmul_seq(a, u2.as_ref());
    let u1au2 = linalg::matmul_seq(u1a.as_ref(), u2.as_ref());
    let (mut m1, mut m2, mut c) = (0.0, 0.0, 0.0);
    for j in 0..n2 {
        for i in 0..n1 {
            m1 += a[(i, j)] * u1a[(i, j)];
            m2 += a[(i, j)] * au2[(i, j)];
            c += a[(i, j)] * u1au2[(i, j)];
        }
    }
    PositionObservables {
        mean_u1: m1,
        mean_u2: m2,
        corr_u1u2: c,
        covariance: c - m1 * m2,
    }
}

/// `ψ(u1, u2)` on a `resolution × resolution` grid over `[0, 1]²` including
/// both boundaries; entry `(r, c)` is at `u1 = r/(res−1)`, `u2 = c/(res−1)`.
pub fn wavefunction_grid(a: MatRef<'_, f64>, resolution: usize) -> Result<Mat<f64>> {
    if resolution < 16 {
        return Err(Error::param("resolution", format!("must be at least 16, got {resolution}")));
    }
    let last = (resolution - 1) as f64;
    let s1 = Mat::from_fn(resolution, a.nrows(), |g, i| basis::mode(i + 1, g as f64 / last));
    let s2 = Mat::from_fn(resolution, a.ncols(), |g, j| basis::mode(j + 1, g as f64 / last));
    let left = linalg::matmul_seq(s1.as_ref(), a);
    let mut psi = linalg::matmul_seq(left.as_ref(), s2.transpose());
    for k in 0..resolution {
        psi[(0, k)] = 0.0;
        psi[(resolution - 1, k)] = 0.0;
        psi[(k, 0)] = 0.0;
        psi[(k, resolution - 1)] = 0.0;
    }
    Ok(psi)
}

#[derive(Debug, Clone)]
pub struct EntanglementReport {
    pub entropy: f64,
    pub witness: f64,
    /// Dimension the witness was evaluated with.
    pub witness_dim: usize,
    pub schmidt: Vec<f64>,
    pub mode_probs: Vec<f64>,
    pub position: PositionObservables,
}

/// All measures at once; `n_w = None` uses the full basis size.
pub fn analyze(a: MatRef<'_, f64>, n_w: Option<usize>) -> Result<EntanglementReport> {
    let schmidt = schmidt_coefficients(a)?;
    let witness_dim = n_w.unwrap_or(a.nrows().min(a.ncols()));
    Ok(EntanglementReport {
        entropy: entropy_of(&schmidt),
        witness: witness(a, witness_dim)?,
        witness_dim,
        schmidt,
        mode_probs: mode_probabilities(a),
        position: position_observables(a),
    })
}

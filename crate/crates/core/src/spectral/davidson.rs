//! Lowest eigenpairs of a dense symmetric matrix by Davidson iteration.
//!
//! The kinetic term makes the sector blocks strongly diagonally dominant, so
//! the diagonal (Jacobi) preconditioner `(θ − A_ii)⁻¹` turns residuals into
//! good corrections. The start block is the unit vectors of the smallest
//! diagonal entries plus one seeded random vector, so no invariant subspace of
//! the preconditioner can hide a low eigenvector.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg;

#[derive(Debug, Clone, Copy)]
pub(crate) struct DavidsonOptions {
    /// Absolute residual tolerance `‖Av − θv‖`.
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl DavidsonOptions {
    pub fn for_matrix(a: &Mat<f64>) -> Self {
        let scale = (0..a.nrows()).map(|i| a[(i, i)].abs()).fold(1.0, f64::max);
        Self {
            tol: (100.0 * f64::EPSILON * scale).max(1e-10),
            seed: 0x5eed,
            max_iter: 2000,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y = A x` for symmetric `A` (column `i` dotted with `x`).
fn symv(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|i| dot(a.col_as_slice(i), x)).collect()
}

struct Basis<'a> {
    a: &'a Mat<f64>,
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
}

impl Basis<'_> {
    /// Orthogonalizes `x` against the basis and appends it unless it vanishes.
    fn push(&mut self, mut x: Vec<f64>) -> bool {
        let before = dot(&x, &x).sqrt();
        for _ in 0..2 {
            for q in &self.v {
                let c = dot(q, &x);
                axpy(&mut x, -c, q);
            }
        }
        let norm = dot(&x, &x).sqrt();
        if !(norm > 1e-10 * before) || norm == 0.0 {
            return false;
        }
        x.iter_mut().for_each(|e| *e /= norm);
        self.av.push(symv(self.a, &x));
        self.v.push(x);
        true
    }

    fn combine(vs: &[Vec<f64>], s: &Mat<f64>, col: usize) -> Vec<f64> {
        let mut y = vec![0.0; vs[0].len()];
        for (j, q) in vs.iter().enumerate() {
            axpy(&mut y, s[(j, col)], q);
        }
        y
    }
}

/// The `k` lowest eigenpairs of symmetric `a`, eigenvalues nondecreasing.
pub(crate) fn lowest_eigenpairs(
    a: &Mat<f64>,
    k: usize,
    opts: &DavidsonOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), String> {
    let n = a.nrows();
    let k = k.min(n);
    if k == 0 {
        return Ok((vec![], vec![]));
    }
    if n <= 4 * k + 64 {
        let (vals, vecs) = linalg::sym_eigen(a.as_ref())?;
        let vectors = (0..k).map(|c| vecs.col_as_slice(c).to_vec()).collect();
        return Ok((vals[..k].to_vec(), vectors));
    }
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]).then(x.cmp(&y)));

    let max_basis = (4 * k + 24).min(n);
    let keep = (2 * k + 4).min(max_basis - k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = Basis {
        a,
        v: Vec::new(),
        av: Vec::new(),
    };
    for &i in order.iter().take(k + 4) {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        basis.push(e);
    }
    basis.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());

    for _ in 0..opts.max_iter {
        let m = basis.v.len();
        let h = Mat::from_fn(m, m, |r, c| {
            0.5 * (dot(&basis.v[r], &basis.av[c]) + dot(&basis.v[c], &basis.av[r]))
        });
        let (theta, s) = linalg::sym_eigen(h.as_ref())?;
        let want = k.min(m);
        let mut ritz = Vec::with_capacity(want);
        let mut residuals = Vec::with_capacity(want);
        for i in 0..want {
            let x = Basis::combine(&basis.v, &s, i);
            let mut r = Basis::combine(&basis.av, &s, i);
            axpy(&mut r, -theta[i], &x);
            residuals.push(r);
            ritz.push(x);
        }
        let norms: Vec<f64> = residuals.iter().map(|r| dot(r, r).sqrt()).collect();
        if want == k && norms.iter().all(|&r| r <= opts.tol) {
            let vectors = ritz
                .into_iter()
                .map(|mut x| {
                    let nx = dot(&x, &x).sqrt();
                    x.iter_mut().for_each(|e| *e /= nx);
                    x
                })
                .collect();
            return Ok((theta[..k].to_vec(), vectors));
        }

        let pending = norms.iter().filter(|&&r| r > opts.tol).count();
        if m + pending > max_basis {
            // thick restart on the lowest Ritz vectors
            let nkeep = keep.max(want).min(m);
            let v: Vec<Vec<f64>> = (0..nkeep).map(|c| Basis::combine(&basis.v, &s, c)).collect();
            let av: Vec<Vec<f64>> = (0..nkeep).map(|c| Basis::combine(&basis.av, &s, c)).collect();
            basis.v = v;
            basis.av = av;
        }
        let mut added = 0;
        for (i, r) in residuals.iter().enumerate() {
            if norms[i] <= opts.tol {
                continue;
            }
            let t: Vec<f64> = r
                .iter()
                .zip(&diag)
                .map(|(ri, di)| {
                    let d = theta[i] - di;
                    let d = if d.abs() < 1e-8 { 1e-8f64.copysign(d) } else { d };
                    ri / d
                })
                .collect();
            if basis.push(t) {
                added += 1;
            }
        }
        if added == 0 && !basis.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()) {
            return Err("Davidson basis stagnated".into());
        }
    }
    Err(format!("no convergence to {:e} after {} iterations", opts.tol, opts.max_iter))
}

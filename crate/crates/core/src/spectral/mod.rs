//! The two-particle Hamiltonian in the tensor-product sine basis.
//!
//! `H = (n1² + n2²)/2 − γ/(u1 + u2 + δ)` commutes with particle exchange, so it
//! is assembled and diagonalized separately in the symmetric and antisymmetric
//! sectors. Eigenvectors are mapped back to full coefficient matrices `a_ij`
//! with `|ψ⟩ = Σ a_ij |i⟩|j⟩`.

mod davidson;

use std::fmt;
use std::sync::OnceLock;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg;
use crate::quadrature::{same_delta, JTable};
use crate::units::ScaledParams;

/// Residual bound above which a level is flagged as unconverged.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Above this sector dimension the dense solver is never used.
pub const DENSE_LIMIT: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sector {
    Symmetric,
    Antisymmetric,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::Symmetric, Sector::Antisymmetric];

    pub fn sign(self) -> f64 {
        match self {
            Sector::Symmetric => 1.0,
            Sector::Antisymmetric => -1.0,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Sector::Symmetric => "s",
            Sector::Antisymmetric => "a",
        }
    }

    /// Number of basis pairs for `n` single-particle levels.
    pub fn dim(self, n: usize) -> usize {
        match self {
            Sector::Symmetric => n * (n + 1) / 2,
            Sector::Antisymmetric => n * n.saturating_sub(1) / 2,
        }
    }

    /// Ordered pairs `(i, j)`, `i ≤ j` (`i < j` when antisymmetric), 1-based.
    pub fn basis_pairs(self, n: usize) -> Vec<(usize, usize)> {
        let off = match self {
            Sector::Symmetric => 0,
            Sector::Antisymmetric => 1,
        };
        (1..=n)
            .flat_map(|i| (i + off..=n).map(move |j| (i, j)))
            .collect()
    }

    /// Non-interacting levels of the sector in energy order; exact ties are
    /// broken lexicographically.
    pub fn free_levels(self, n: usize) -> Vec<(usize, usize)> {
        let mut pairs = self.basis_pairs(n);
        pairs.sort_by_key(|&(i, j)| (i * i + j * j, i, j));
        pairs
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Symmetric => "symmetric",
            Sector::Antisymmetric => "antisymmetric",
        })
    }
}

/// One exchange sector of the Hamiltonian in units of `E0`.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    pub sector: Sector,
    pub nmax: usize,
    pub basis_pairs: Vec<(usize, usize)>,
    pub matrix: Mat<f64>,
}

impl SectorBlock {
    pub fn dim(&self) -> usize {
        self.basis_pairs.len()
    }

    /// Expands a sector vector into the `nmax × nmax` coefficient matrix.
    pub fn coefficients(&self, v: &[f64]) -> Mat<f64> {
        let mut a = Mat::<f64>::zeros(self.nmax, self.nmax);
        let sign = self.sector.sign();
        for (&(i, j), &c) in self.basis_pairs.iter().zip(v) {
            if i == j {
                a[(i - 1, i - 1)] = c;
            } else {
                a[(i - 1, j - 1)] = c * std::f64::consts::FRAC_1_SQRT_2;
                a[(j - 1, i - 1)] = sign * c * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        a
    }
}

fn check_table(s: &ScaledParams, t: &JTable) -> Result<()> {
    s.validate()?;
    if !same_delta(t.delta, s.delta) {
        return Err(Error::Config(format!(
            "table built for delta = {} but parameters have delta = {}",
            t.delta, s.delta
        )));
    }
    if t.pmax < 2 * s.nmax {
        return Err(Error::Config(format!(
            "table pmax {} < 2·nmax = {}",
            t.pmax,
            2 * s.nmax
        )));
    }
    Ok(())
}

pub fn assemble_sector(s: &ScaledParams, t: &JTable, sector: Sector) -> Result<SectorBlock> {
    check_table(s, t)?;
    let pairs = sector.basis_pairs(s.nmax);
    let dim = pairs.len();
    let sign = sector.sign();
    let norm = |i: usize, j: usize| {
        if i == j {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            1.0
        }
    };
    let mut m = Mat::<f64>::zeros(dim, dim);
    for c in 0..dim {
        let (k, l) = pairs[c];
        for r in c..dim {
            let (i, j) = pairs[r];
            let v = t.kernel_element(i, j, k, l) + sign * t.kernel_element(i, j, l, k);
            let mut h = -s.gamma * norm(i, j) * norm(k, l) * v;
            if r == c {
                h += 0.5 * (i * i + j * j) as f64;
            }
            m[(r, c)] = h;
            m[(c, r)] = h;
        }
    }
    Ok(SectorBlock {
        sector,
        nmax: s.nmax,
        basis_pairs: pairs,
        matrix: m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Iterative for a handful of levels of a large block, dense otherwise.
    #[default]
    Auto,
    Dense,
    /// Preconditioned Davidson iteration.
    Iterative,
}

impl EigenMethod {
    fn use_iterative(self, dim: usize, k: usize) -> bool {
        match self {
            EigenMethod::Dense => false,
            EigenMethod::Iterative => true,
            EigenMethod::Auto => dim > DENSE_LIMIT || (k <= 24 && dim >= 400),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    /// Energy in units of `E0`.
    pub energy: f64,
    /// `a_ij`, unit Frobenius norm, symmetric or antisymmetric per `sector`.
    pub coefficients: Mat<f64>,
    pub sector: Sector,
    /// 0-based rank within the sector.
    pub sector_rank: usize,
    /// Non-interacting level `(n1, n2)` this state connects to.
    pub free_label: (usize, usize),
    /// `‖H v − E v‖₂`.
    pub residual: f64,
}

impl Level {
    pub fn free_energy(&self) -> f64 {
        let (a, b) = self.free_label;
        0.5 * (a * a + b * b) as f64
    }

    /// `E − (n1² + n2²)/2`.
    pub fn energy_shift(&self) -> f64 {
        self.energy - self.free_energy()
    }

    pub fn converged(&self) -> bool {
        self.residual <= RESIDUAL_TOL
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub scaled: ScaledParams,
    pub levels: Vec<Level>,
}

impl EigenSolution {
    pub fn ground(&self) -> &Level {
        &self.levels[0]
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// Levels of one sector in rank order.
    pub fn sector_levels(&self, sector: Sector) -> Vec<&Level> {
        let mut v: Vec<&Level> = self.levels.iter().filter(|l| l.sector == sector).collect();
        v.sort_by_key(|l| l.sector_rank);
        v
    }
}

struct SectorSolution {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

fn residuals(block: &SectorBlock, values: &[f64], vectors: &[Vec<f64>]) -> Vec<f64> {
    if vectors.is_empty() {
        return vec![];
    }
    let v = Mat::from_fn(block.dim(), vectors.len(), |r, c| vectors[c][r]);
    let hv = linalg::matmul_seq(block.matrix.as_ref(), v.as_ref());
    (0..vectors.len())
        .map(|c| {
            (0..block.dim())
                .map(|r| (hv[(r, c)] - values[c] * v[(r, c)]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

fn solve_sector(block: &SectorBlock, k: usize, method: EigenMethod) -> Result<SectorSolution> {
    let k = k.min(block.dim());
    if k == 0 {
        return Ok(SectorSolution {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
        });
    }
    let fail = |tolerance: f64, reason: String| Error::Eigensolver {
        sector: block.sector,
        tolerance,
        reason,
    };
    let (values, vectors) = if method.use_iterative(block.dim(), k) {
        let opts = davidson::DavidsonOptions::for_matrix(&block.matrix);
        davidson::lowest_eigenpairs(&block.matrix, k, &opts).map_err(|e| fail(opts.tol, e))?
    } else {
        let (vals, vecs) = linalg::sym_eigen(block.matrix.as_ref()).map_err(|e| fail(0.0, e))?;
        let vectors = (0..k).map(|c| vecs.col_as_slice(c).to_vec()).collect();
        (vals[..k].to_vec(), vectors)
    };
    let residuals = residuals(block, &values, &vectors);
    Ok(SectorSolution {
        values,
        vectors,
        residuals,
    })
}

/// Flips `a` so that its largest-magnitude entry (first in row-major order on
/// ties) is positive.
fn fix_phase(a: &mut Mat<f64>) {
    let n = a.nrows();
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
    }
    if sign < 0.0 {
        for j in 0..n {
            for i in 0..n {
                a[(i, j)] = -a[(i, j)];
            }
        }
    }
}

pub fn solve_lowest(s: &ScaledParams, t: &JTable, k: usize) -> Result<EigenSolution> {
    solve_lowest_with(s, t, k, EigenMethod::Auto)
}

/// The `k` lowest two-particle levels across both sectors, energy-ordered,
/// phase-fixed and labelled.
pub fn solve_lowest_with(
    s: &ScaledParams,
    t: &JTable,
    k: usize,
    method: EigenMethod,
) -> Result<EigenSolution> {
    check_table(s, t)?;
    let total = s.nmax * s.nmax;
    if k == 0 || k > total {
        return Err(Error::param("k", format!("must lie in 1..={total}, got {k}")));
    }
    let solve = |sector: Sector| -> Result<Vec<Level>> {
        let block = assemble_sector(s, t, sector)?;
        let sol = solve_sector(&block, k, method)?;
        Ok(sol
            .values
            .iter()
            .zip(&sol.vectors)
            .zip(&sol.residuals)
            .enumerate()
            .map(|(rank, ((&energy, v), &residual))| {
                let mut coefficients = block.coefficients(v);
                fix_phase(&mut coefficients);
                Level {
                    energy,
                    coefficients,
                    sector,
                    sector_rank: rank,
                    free_label: (0, 0),
                    residual,
                }
            })
            .collect())
    };
    let (sym, anti) = rayon::join(
        || solve(Sector::Symmetric),
        || solve(Sector::Antisymmetric),
    );
    let levels = merge_sectors(sym?, anti?, k);
    label_levels(EigenSolution { scaled: *s, levels })
}

/// Energies closer than this (relative to `max(1, |E|)`) count as degenerate.
pub const TIE_TOL: f64 = 1e-10;

/// Merges two rank-ordered sector lists; symmetric wins ties within
/// [`TIE_TOL`], so exact degeneracies come out in a fixed order.
fn merge_sectors(sym: Vec<Level>, anti: Vec<Level>, k: usize) -> Vec<Level> {
    let mut out = Vec::with_capacity(k);
    let mut s = sym.into_iter().peekable();
    let mut a = anti.into_iter().peekable();
    while out.len() < k {
        let take_anti = match (s.peek(), a.peek()) {
            (Some(x), Some(y)) => y.energy < x.energy - TIE_TOL * x.energy.abs().max(1.0),
            (None, Some(_)) => true,
            (_, None) => false,
        };
        match if take_anti { a.next() } else { s.next() } {
            Some(l) => out.push(l),
            None => break,
        }
    }
    out
}

/// Assigns each level the non-interacting pair of equal rank in its sector.
pub fn label_levels(mut sol: EigenSolution) -> Result<EigenSolution> {
    static CACHE: OnceLock<std::sync::Mutex<Vec<(usize, [Vec<(usize, usize)>; 2])>>> = OnceLock::new();
    let n = sol.scaled.nmax;
    let free = {
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().expect("label cache poisoned");
        if let Some((_, f)) = guard.iter().find(|(m, _)| *m == n) {
            f.clone()
        } else {
            let f = [
                Sector::Symmetric.free_levels(n),
                Sector::Antisymmetric.free_levels(n),
            ];
            guard.push((n, f.clone()));
            f
        }
    };
    for level in &mut sol.levels {
        let list = &free[level.sector as usize];
        level.free_label = *list.get(level.sector_rank).ok_or(Error::Labelling {
            sector: level.sector,
            rank: level.sector_rank,
        })?;
    }
    Ok(sol)
}

//! Parameter sweeps behind every plotted quantity.
//!
//! All sweeps pull J-tables through a [`TableSource`] and return rows in a
//! deterministic order regardless of how work is scheduled.

use rayon::prelude::*;

use crate::entangle;
use crate::error::{Error, Result};
use crate::quadrature::TableSource;
use crate::spectral::{self, EigenSolution, Sector};
use crate::units::{scale_params, PhysicalParams, ScaledParams};

pub const DESK_NMAX: usize = 60;
pub const DESK_LEVELS: usize = 200;
pub const DESK_GRID: usize = 24;
pub const FULL_NMAX: usize = 100;
pub const FULL_LEVELS: usize = 1000;
pub const MASS_RANGE: (f64, f64) = (1e-18, 2e-17);
pub const WIDTH_RANGE: (f64, f64) = (25e-6, 150e-6);
pub const DEFAULT_DELTAS: [f64; 5] = [2.0, 1.0, 0.5, 0.1, 0.02];

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    _ if i == n - 1 => hi,
                    _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

fn at_point(point: String) -> impl FnOnce(Error) -> Error {
    move |e| Error::SweepPoint {
        point,
        source: Box::new(e),
    }
}

/// One eigenlevel as it appears in sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    /// 1-based energy rank across both sectors.
    pub level: usize,
    pub energy: f64,
    /// `E − (n1² + n2²)/2`.
    pub shift: f64,
    pub sector: Sector,
    pub free_label: (usize, usize),
    pub residual: f64,
}

fn level_rows(sol: &EigenSolution) -> Vec<LevelRow> {
    sol.levels
        .iter()
        .enumerate()
        .map(|(i, l)| LevelRow {
            level: i + 1,
            energy: l.energy,
            shift: l.energy_shift(),
            sector: l.sector,
            free_label: l.free_label,
            residual: l.residual,
        })
        .collect()
}

/// Solves one physical point with `k` levels.
pub fn solve_point(
    p: &PhysicalParams,
    nmax: usize,
    k: usize,
    tables: &dyn TableSource,
) -> Result<EigenSolution> {
    let s = scale_params(p, nmax)?;
    let t = tables.table(s.delta, 2 * nmax)?;
    spectral::solve_lowest(&s, &t, k)
}

#[derive(Debug, Clone)]
pub struct DistancePoint {
    pub delta: f64,
    /// Wall-to-wall separation, m.
    pub separation: f64,
    pub scaled: ScaledParams,
    pub levels: Vec<LevelRow>,
    pub ground_entropy: f64,
    pub ground_witness: f64,
}

/// Lowest `k` levels and ground-state entanglement for each `δ`, in the given
/// (descending) order.
pub fn distance_sweep(
    p: &PhysicalParams,
    deltas: &[f64],
    nmax: usize,
    k: usize,
    tables: &dyn TableSource,
    witness_dim: Option<usize>,
) -> Result<Vec<DistancePoint>> {
    if deltas.is_empty() {
        return Err(Error::InvalidRange("no separations given".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidRange(
            "separations must be strictly decreasing".into(),
        ));
    }
    deltas
        .par_iter()
        .map(|&delta| {
            let q = PhysicalParams {
                separation: delta * p.well_width,
                ..*p
            };
            let sol = solve_point(&q, nmax, k, tables)
                .map_err(at_point(format!("delta={delta}")))?;
            let a = sol.ground().coefficients.as_ref();
            let n_w = witness_dim.unwrap_or(nmax);
            Ok(DistancePoint {
                delta,
                separation: q.separation,
                scaled: sol.scaled,
                levels: level_rows(&sol),
                ground_entropy: entangle::entropy(a)?,
                ground_witness: entangle::witness(a, n_w)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub level: LevelRow,
    pub entropy: f64,
    pub witness: f64,
}

/// The lowest `k` levels at one point with shifts and per-level entanglement.
pub fn level_spectrum(
    p: &PhysicalParams,
    nmax: usize,
    k: usize,
    tables: &dyn TableSource,
    witness_dim: Option<usize>,
) -> Result<(ScaledParams, Vec<SpectrumRow>)> {
    let sol = solve_point(p, nmax, k, tables)?;
    let n_w = witness_dim.unwrap_or(nmax);
    let rows = level_rows(&sol)
        .into_par_iter()
        .zip(sol.levels.par_iter())
        .map(|(level, l)| {
            let a = l.coefficients.as_ref();
            Ok(SpectrumRow {
                level,
                entropy: entangle::entropy(a)?,
                witness: entangle::witness(a, n_w)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((sol.scaled, rows))
}

/// `ΔE` of the lowest `k` levels, in energy-rank order.
pub fn spectrum_shift(
    p: &PhysicalParams,
    nmax: usize,
    k: usize,
    tables: &dyn TableSource,
) -> Result<Vec<LevelRow>> {
    let sol = solve_point(p, nmax, k, tables)?;
    Ok(level_rows(&sol))
}

/// `S ≈ a + b ln n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `values[i]` against `ln(i + 1)`.
pub fn log_fit(values: &[f64]) -> Result<LogFit> {
    if values.len() < 3 {
        return Err(Error::InvalidRange(format!(
            "log fit needs at least 3 points, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let xs: Vec<f64> = (1..=values.len()).map(|i| (i as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = values.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = values.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(values)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LogFit { a, b, r_squared })
}

#[derive(Debug, Clone)]
pub struct EntropySpectrum {
    pub scaled: ScaledParams,
    pub rows: Vec<SpectrumRow>,
    pub fit: LogFit,
}

pub fn entropy_spectrum(
    p: &PhysicalParams,
    nmax: usize,
    k: usize,
    tables: &dyn TableSource,
    witness_dim: Option<usize>,
) -> Result<EntropySpectrum> {
    let (scaled, rows) = level_spectrum(p, nmax, k, tables, witness_dim)?;
    let s: Vec<f64> = rows.iter().map(|r| r.entropy).collect();
    let fit = log_fit(&s)?;
    Ok(EntropySpectrum { scaled, rows, fit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundEntanglement {
    pub energy: f64,
    pub entropy: f64,
    pub witness: f64,
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub mass: f64,
    pub width: f64,
    /// NaN when the parameters could not be scaled.
    pub gamma: f64,
    pub delta: f64,
    pub outcome: std::result::Result<GroundEntanglement, String>,
}

/// Ground-state `S` and `w` on the `masses × widths` grid at fixed separation.
/// Failing cells keep their error message; the rest of the grid still runs.
/// Cells are ordered by mass, then width.
pub fn mass_width_grid(
    base: &PhysicalParams,
    masses: &[f64],
    widths: &[f64],
    separation: f64,
    nmax: usize,
    tables: &dyn TableSource,
    witness_dim: Option<usize>,
) -> Result<Vec<GridCell>> {
    if masses.is_empty() || widths.is_empty() {
        return Err(Error::InvalidRange("empty mass or width list".into()));
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::param("separation", format!("must be > 0, got {separation}")));
    }
    let n_w = witness_dim.unwrap_or(nmax);
    let cells: Vec<(f64, f64)> = masses
        .iter()
        .flat_map(|&m| widths.iter().map(move |&l| (m, l)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(mass, width)| {
            let p = PhysicalParams {
                mass,
                well_width: width,
                separation,
                ..*base
            };
            let (gamma, delta) = match scale_params(&p, nmax) {
                Ok(s) => (s.gamma, s.delta),
                Err(_) => (f64::NAN, separation / width),
            };
            let outcome = solve_point(&p, nmax, 1, tables)
                .and_then(|sol| {
                    let g = sol.ground();
                    let a = g.coefficients.as_ref();
                    Ok(GroundEntanglement {
                        energy: g.energy,
                        entropy: entangle::entropy(a)?,
                        witness: entangle::witness(a, n_w)?,
                    })
                })
                .map_err(|e| e.to_string());
            GridCell {
                mass,
                width,
                gamma,
                delta,
                outcome,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub nmax: usize,
    pub ground_energy: f64,
    /// `|E(n) − E(prev)|/|E(n)|`; `None` for the first row.
    pub rel_diff: Option<f64>,
}

/// Ground energy against basis size; one table serves every `nmax`.
pub fn convergence_study(
    p: &PhysicalParams,
    nmaxes: &[usize],
    tables: &dyn TableSource,
) -> Result<Vec<ConvergenceRow>> {
    if nmaxes.is_empty() {
        return Err(Error::InvalidRange("no basis sizes given".into()));
    }
    if nmaxes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidRange("basis sizes must be strictly increasing".into()));
    }
    let largest = *nmaxes.last().unwrap();
    let s = scale_params(p, largest)?;
    let table = tables.table(s.delta, 2 * largest)?;
    let energies = nmaxes
        .par_iter()
        .map(|&n| {
            spectral::solve_lowest(&s.with_nmax(n), &table, 1)
                .map(|sol| sol.ground().energy)
                .map_err(at_point(format!("nmax={n}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(nmaxes
        .iter()
        .zip(&energies)
        .enumerate()
        .map(|(i, (&nmax, &e))| ConvergenceRow {
            nmax,
            ground_energy: e,
            rel_diff: (i > 0).then(|| (e - energies[i - 1]).abs() / e.abs()),
        })
        .collect())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        // ties share their mean rank
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation.
pub fn rank_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidRange(format!(
            "rank correlation needs two equal-length samples of size >= 2 ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    Ok(sxy / (sxx * syy).sqrt())
}

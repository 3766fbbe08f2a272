//! Caldeira–Leggett evolution of the two-particle density matrix.
//!
//! In units of `E0` and `t0` the generator is
//!
//! ```text
//! dρ/ds = −i[h, ρ] + iκ1[u1² + u2², ρ] − κ2([u1,[u1,ρ]] + [u2,[u2,ρ]])
//! ```
//!
//! on the product sine basis `|i⟩|j⟩`, `1 ≤ i, j ≤ n_d`, flattened as
//! `(i−1)·n_d + (j−1)`. The κ1 term uses the exact `u²`; the double commutator
//! expands with the truncated `u·u`, which keeps it exactly traceless.

use faer::{c64, Mat, MatRef};

use crate::basis;
use crate::error::{Error, Result};
use crate::linalg;
use crate::quadrature::{same_delta, JTable};
use crate::units::{PhysicalParams, ScaledParams};

/// `dt · max(‖h‖, κ1, κ2·n_d²)` may not exceed this.
pub const STABILITY_LIMIT: f64 = 0.1;
/// Trace drift that aborts an integration.
pub const TRACE_FAIL: f64 = 1e-6;
/// Purity overshoot that aborts an integration.
pub const PURITY_FAIL: f64 = 1e-9;
/// Eigenvalues below this are counted by the positivity watchdog.
pub const POSITIVITY_FLOOR: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub kappa1: f64,
    pub kappa2: f64,
}

impl BathParams {
    pub fn new(kappa1: f64, kappa2: f64) -> Result<Self> {
        for (name, v) in [("kappa1", kappa1), ("kappa2", kappa2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self { kappa1, kappa2 })
    }

    pub fn none() -> Self {
        Self {
            kappa1: 0.0,
            kappa2: 0.0,
        }
    }
}

/// Dimensionless bath rates for the physical environment `p`.
pub fn scale_decoherence(p: &PhysicalParams, s: &ScaledParams) -> Result<BathParams> {
    p.validate()?;
    s.validate()?;
    let e0 = p.energy_unit();
    if ((s.energy_unit - e0) / e0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "scaled energy unit {:e} J does not belong to these physical parameters ({e0:e} J)",
            s.energy_unit
        )));
    }
    let ml2 = p.mass * p.well_width * p.well_width;
    BathParams::new(
        ml2 * p.damping * p.cutoff / e0,
        2.0 * ml2 * p.damping * p.k_b * p.temperature / (p.hbar * e0),
    )
}

/// `(u, u²)` on the first `n_d` modes.
pub fn position_matrices(n_d: usize) -> Result<(Mat<f64>, Mat<f64>)> {
    if n_d < 2 {
        return Err(Error::param("n_d", format!("must be >= 2, got {n_d}")));
    }
    Ok((basis::position_matrix(n_d), basis::position_sq_matrix(n_d)))
}

/// Diagonal `(i² + j²)/2` on the product basis.
pub fn free_hamiltonian(n_d: usize) -> Mat<f64> {
    let dim = n_d * n_d;
    Mat::from_fn(dim, dim, |r, c| {
        if r == c {
            let (i, j) = (r / n_d + 1, r % n_d + 1);
            0.5 * (i * i + j * j) as f64
        } else {
            0.0
        }
    })
}

/// The gravitating Hamiltonian on the `n_d²` product basis (`s.nmax` is
/// ignored in favour of `n_d`).
pub fn coupled_hamiltonian(s: &ScaledParams, t: &JTable, n_d: usize) -> Result<Mat<f64>> {
    if !same_delta(s.delta, t.delta) {
        return Err(Error::Config(format!(
            "table built for delta = {} but parameters have delta = {}",
            t.delta, s.delta
        )));
    }
    if t.pmax < 2 * n_d {
        return Err(Error::Config(format!("table pmax {} < 2·n_d = {}", t.pmax, 2 * n_d)));
    }
    let mut h = free_hamiltonian(n_d);
    let dim = n_d * n_d;
    for c in 0..dim {
        let (k, l) = (c / n_d + 1, c % n_d + 1);
        for r in 0..dim {
            let (i, j) = (r / n_d + 1, r % n_d + 1);
            h[(r, c)] -= s.gamma * t.kernel_element(i, j, k, l);
        }
    }
    Ok(h)
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub n_d: usize,
    pub rho: Mat<c64>,
    /// In units of `t0`.
    pub time: f64,
}

impl DensityMatrix {
    /// `|ψ⟩⟨ψ|` for `ψ = Σ a_ij |i⟩|j⟩`, `a` square and normalized.
    pub fn from_coefficients(a: MatRef<'_, f64>) -> Result<Self> {
        let n_d = a.nrows();
        if a.ncols() != n_d || n_d < 2 {
            return Err(Error::param("a", format!("need square n_d >= 2, got {}×{}", n_d, a.ncols())));
        }
        let psi: Vec<f64> = (0..n_d * n_d).map(|r| a[(r / n_d, r % n_d)]).collect();
        let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::Normalization { norm });
        }
        let rho = Mat::from_fn(psi.len(), psi.len(), |r, c| c64::new(psi[r] * psi[c], 0.0));
        Ok(Self { n_d, rho, time: 0.0 })
    }

    /// `|1⟩|1⟩`.
    pub fn product_ground(n_d: usize) -> Result<Self> {
        let a = Mat::from_fn(n_d, n_d, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
        Self::from_coefficients(a.as_ref())
    }

    pub fn dim(&self) -> usize {
        self.n_d * self.n_d
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.rho[(i, i)]).sum()
    }

    /// `tr ρ²`, using Hermiticity.
    pub fn purity(&self) -> f64 {
        purity(self.rho.as_ref())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let e = linalg::hermitian_eigenvalues(self.rho.as_ref()).map_err(Error::Linalg)?;
        Ok(e.first().copied().unwrap_or(0.0))
    }
}

fn purity(rho: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for c in 0..rho.ncols() {
        for r in 0..rho.nrows() {
            s += rho[(r, c)].norm_sqr();
        }
    }
    s
}

/// Which particle a single-particle operator acts on.
#[derive(Clone, Copy)]
enum Slot {
    First,
    Second,
}

/// `(O ⊗ 1) ρ (O ⊗ 1)` or `(1 ⊗ O) ρ (1 ⊗ O)` for real symmetric `O`, without
/// forming the Kronecker product.
fn sandwich(o: &[f64], n: usize, rho: &Mat<c64>, slot: Slot) -> Mat<c64> {
    let dim = n * n;
    let split = |r: usize| (r / n, r % n);
    let join = |a: usize, b: usize| a * n + b;
    let mut left = Mat::<c64>::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            let (a, b) = split(r);
            let mut acc = c64::new(0.0, 0.0);
            for m in 0..n {
                let (w, src) = match slot {
                    Slot::First => (o[a * n + m], join(m, b)),
                    Slot::Second => (o[b * n + m], join(a, m)),
                };
                if w != 0.0 {
                    acc += rho[(src, c)] * w;
                }
            }
            left[(r, c)] = acc;
        }
    }
    let mut out = Mat::<c64>::zeros(dim, dim);
    for c in 0..dim {
        let (a, b) = split(c);
        for m in 0..n {
            let (w, src) = match slot {
                Slot::First => (o[m * n + a], join(m, b)),
                Slot::Second => (o[m * n + b], join(a, m)),
            };
            if w == 0.0 {
                continue;
            }
            for r in 0..dim {
                out[(r, c)] += left[(r, src)] * w;
            }
        }
    }
    out
}

/// Precomputed pieces of the generator: `ρ̇ = Bρ + (Bρ)† + 2κ2 Σ UρU`.
struct Generator {
    n: usize,
    b: Mat<c64>,
    u: Vec<f64>,
    two_kappa2: f64,
}

impl Generator {
    fn new(h: MatRef<'_, f64>, bath: &BathParams, n: usize) -> Self {
        let dim = n * n;
        let u = basis::position_matrix(n);
        let u2 = basis::position_sq_matrix(n);
        let uu = linalg::matmul_seq(u.as_ref(), u.as_ref());
        let b = Mat::from_fn(dim, dim, |r, c| {
            let (i, j) = (r / n, r % n);
            let (k, l) = (c / n, c % n);
            let mut x = 0.0;
            let mut q = 0.0;
            if j == l {
                x += u2[(i, k)];
                q += uu[(i, k)];
            }
            if i == k {
                x += u2[(j, l)];
                q += uu[(j, l)];
            }
            let a = h[(r, c)] - bath.kappa1 * x;
            c64::new(-bath.kappa2 * q, -a)
        });
        let u = (0..n * n).map(|idx| u[(idx / n, idx % n)]).collect();
        Self {
            n,
            b,
            u,
            two_kappa2: 2.0 * bath.kappa2,
        }
    }

    fn apply(&self, rho: &Mat<c64>) -> Mat<c64> {
        let br = linalg::matmul_seq(self.b.as_ref(), rho.as_ref());
        let dim = rho.nrows();
        let mut out = Mat::from_fn(dim, dim, |r, c| br[(r, c)] + br[(c, r)].conj());
        if self.two_kappa2 != 0.0 {
            let s1 = sandwich(&self.u, self.n, rho, Slot::First);
            let s2 = sandwich(&self.u, self.n, rho, Slot::Second);
            for c in 0..dim {
                for r in 0..dim {
                    out[(r, c)] += (s1[(r, c)] + s2[(r, c)]) * self.two_kappa2;
                }
            }
        }
        out
    }
}

fn spectral_norm(h: MatRef<'_, f64>) -> Result<f64> {
    let e = linalg::sym_eigenvalues(h).map_err(Error::Linalg)?;
    Ok(e.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Largest `dt` accepted by [`evolve`] for this generator.
pub fn stable_dt_bound(h: MatRef<'_, f64>, bath: &BathParams, n_d: usize) -> Result<f64> {
    let rate = spectral_norm(h)?
        .max(bath.kappa1)
        .max(bath.kappa2 * (n_d * n_d) as f64);
    Ok(if rate > 0.0 { STABILITY_LIMIT / rate } else { f64::INFINITY })
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Record a sample every this many steps (step 0 and the last step are
    /// always recorded).
    pub sample_every: usize,
    /// Keep a copy of ρ every this many steps.
    pub snapshot_every: Option<usize>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            sample_every: 1,
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub n_d: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    pub purity: Vec<f64>,
    /// `|tr ρ − 1|`.
    pub trace_err: Vec<f64>,
    /// Smallest eigenvalue of ρ at each sample.
    pub min_eig: Vec<f64>,
    pub snapshots: Vec<DensityMatrix>,
    pub final_state: DensityMatrix,
    /// Largest `max|ρ − ρ†|` seen after a step, before re-symmetrization.
    pub max_hermiticity_drift: f64,
    /// Samples whose smallest eigenvalue fell below [`POSITIVITY_FLOOR`].
    pub positivity_flags: usize,
}

/// Fourth-order Runge–Kutta integration for `steps` steps of size `dt`.
pub fn evolve(
    rho0: &DensityMatrix,
    h: MatRef<'_, f64>,
    bath: &BathParams,
    dt: f64,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let n = rho0.n_d;
    let dim = rho0.dim();
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::Config(format!(
            "Hamiltonian is {}×{} but ρ has dimension {dim}",
            h.nrows(),
            h.ncols()
        )));
    }
    BathParams::new(bath.kappa1, bath.kappa2)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
    }
    let bound = stable_dt_bound(h, bath, n)?;
    if dt > bound {
        return Err(Error::param(
            "dt",
            format!("{dt:e} exceeds the stability bound {bound:e} for this generator"),
        ));
    }
    if opts.sample_every == 0 {
        return Err(Error::param("sample_every", "must be >= 1"));
    }

    let gen = Generator::new(h, bath, n);
    let mut rho = rho0.rho.clone();
    let t0 = rho0.time;
    let mut traj = Trajectory {
        n_d: n,
        dt,
        times: vec![],
        purity: vec![],
        trace_err: vec![],
        min_eig: vec![],
        snapshots: vec![],
        final_state: rho0.clone(),
        max_hermiticity_drift: 0.0,
        positivity_flags: 0,
    };
    let record = |traj: &mut Trajectory, rho: &Mat<c64>, step: usize| -> Result<()> {
        let state = DensityMatrix {
            n_d: n,
            rho: rho.clone(),
            time: t0 + step as f64 * dt,
        };
        let min_eig = state.min_eigenvalue()?;
        if min_eig < POSITIVITY_FLOOR {
            traj.positivity_flags += 1;
        }
        traj.times.push(state.time);
        traj.purity.push(state.purity());
        traj.trace_err.push((state.trace() - c64::new(1.0, 0.0)).norm());
        traj.min_eig.push(min_eig);
        Ok(())
    };
    record(&mut traj, &rho, 0)?;
    if opts.snapshot_every.is_some() {
        traj.snapshots.push(rho0.clone());
    }

    let sixth = dt / 6.0;
    let shifted = |rho: &Mat<c64>, k: &Mat<c64>, h: f64| {
        Mat::from_fn(dim, dim, |r, c| rho[(r, c)] + k[(r, c)] * h)
    };
    for step in 1..=steps {
        let k1 = gen.apply(&rho);
        let k2 = gen.apply(&shifted(&rho, &k1, dt / 2.0));
        let k3 = gen.apply(&shifted(&rho, &k2, dt / 2.0));
        let k4 = gen.apply(&shifted(&rho, &k3, dt));
        let mut next = Mat::from_fn(dim, dim, |r, c| {
            rho[(r, c)] + (k1[(r, c)] + (k2[(r, c)] + k3[(r, c)]) * 2.0 + k4[(r, c)]) * sixth
        });
        let mut drift = 0.0f64;
        for c in 0..dim {
            for r in 0..=c {
                let (x, y) = (next[(r, c)], next[(c, r)]);
                drift = drift.max((x - y.conj()).norm());
                let m = (x + y.conj()) * 0.5;
                next[(r, c)] = m;
                next[(c, r)] = m.conj();
            }
        }
        traj.max_hermiticity_drift = traj.max_hermiticity_drift.max(drift);
        rho = next;

        let tr = (0..dim).map(|i| rho[(i, i)]).sum::<c64>();
        let p = purity(rho.as_ref());
        let fail = |reason: String| Error::Integration { step, reason };
        if !tr.re.is_finite() || !p.is_finite() {
            return Err(fail("state became non-finite".into()));
        }
        if (tr - c64::new(1.0, 0.0)).norm() > TRACE_FAIL {
            return Err(fail(format!("trace drifted to {}", tr.re)));
        }
        if p > 1.0 + PURITY_FAIL {
            return Err(fail(format!("purity {p} exceeds 1")));
        }
        if step % opts.sample_every == 0 || step == steps {
            record(&mut traj, &rho, step)?;
        }
        if let Some(every) = opts.snapshot_every {
            if every > 0 && step % every == 0 {
                traj.snapshots.push(DensityMatrix {
                    n_d: n,
                    rho: rho.clone(),
                    time: t0 + step as f64 * dt,
                });
            }
        }
    }
    traj.final_state = DensityMatrix {
        n_d: n,
        rho,
        time: t0 + steps as f64 * dt,
    };
    Ok(traj)
}

/// Purity ratios `P/P0` that bound the fitting window.
pub const FIT_WINDOW: (f64, f64) = (0.5, 0.98);
pub const MIN_FIT_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceFit {
    /// In units of `t0`; infinite when purity never decreases.
    pub tau_d: f64,
    pub slope: f64,
    pub r_squared: f64,
    /// Time span the fit used.
    pub window: (f64, f64),
    pub points: usize,
}

impl DecoherenceFit {
    pub fn no_decoherence() -> Self {
        Self {
            tau_d: f64::INFINITY,
            slope: 0.0,
            r_squared: f64::NAN,
            window: (f64::NAN, f64::NAN),
            points: 0,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.tau_d.is_infinite()
    }
}

pub fn decoherence_time(traj: &Trajectory) -> Result<DecoherenceFit> {
    fit_purity_decay(&traj.times, &traj.purity)
}

/// Straight-line fit of `ln P` against time over `P/P0 ∈ FIT_WINDOW`.
pub fn fit_purity_decay(times: &[f64], purity: &[f64]) -> Result<DecoherenceFit> {
    if times.len() != purity.len() {
        return Err(Error::Fit("times and purity differ in length".into()));
    }
    if times.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "{} samples, need at least {MIN_FIT_SAMPLES}",
            times.len()
        )));
    }
    let p0 = purity[0];
    let last = *purity.last().unwrap();
    // unitary runs wander at round-off level
    if last >= p0 * (1.0 - PURITY_FAIL) {
        return Ok(DecoherenceFit::no_decoherence());
    }
    if last > 0.99 * p0 {
        return Err(Error::Fit(format!(
            "purity fell by only {:.3}%, need at least 1%",
            100.0 * (1.0 - last / p0)
        )));
    }
    let (lo, hi) = FIT_WINDOW;
    let mut pts: Vec<(f64, f64)> = times
        .iter()
        .zip(purity)
        .filter(|(_, &p)| p / p0 <= hi && p / p0 >= lo)
        .map(|(&t, &p)| (t, p.ln()))
        .collect();
    if pts.len() < 5 {
        // short run: everything past the transient
        pts = times
            .iter()
            .zip(purity)
            .filter(|(_, &p)| p / p0 <= 0.99)
            .map(|(&t, &p)| (t, p.ln()))
            .collect();
    }
    if pts.len() < 3 {
        return Err(Error::Fit(format!("only {} samples in the fit window", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("fit window spans no time".into()));
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return Err(Error::Fit(format!("fitted slope {slope} is not negative")));
    }
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecoherenceFit {
        tau_d: -1.0 / slope,
        slope,
        r_squared,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    })
}

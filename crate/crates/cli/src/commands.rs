//! One function per subcommand. Each resolves its inputs from the config,
//! runs the library, and writes one or two CSV files.

use std::path::PathBuf;

use wellgrav::decohere::{
    coupled_hamiltonian, decoherence_time, evolve, free_hamiltonian, scale_decoherence, stable_dt_bound,
    DensityMatrix, EvolveOptions,
};
use wellgrav::entangle::{analyze, wavefunction_grid};
use wellgrav::quadrature::TableSource;
use wellgrav::spectral::solve_lowest;
use wellgrav::sweep::{
    convergence_study, distance_sweep, entropy_spectrum, log_space, mass_width_grid, rank_correlation,
    spectrum_shift, LevelRow,
};
use wellgrav::units::{adiabaticity_check, pseudopotential_check, scale_params, FeasibilityReport, ScaledParams};

use crate::config::{ConfigError, DecohereModel, RunConfig};
use crate::output::{num, CsvFile};
use crate::Failure;

type Outcome = Result<Vec<PathBuf>, Failure>;

const LEVEL_COLUMNS: &[&str] = &["delta", "level", "energy_E0", "sector", "n1", "n2", "dE"];

fn level_fields(delta: f64, r: &LevelRow) -> Vec<String> {
    vec![
        num(delta),
        r.level.to_string(),
        num(r.energy),
        r.sector.short().to_owned(),
        r.free_label.0.to_string(),
        r.free_label.1.to_string(),
        num(r.shift),
    ]
}

fn no_gamma_override(cfg: &RunConfig, command: &str) -> Result<(), Failure> {
    match cfg.gamma {
        Some(_) => Err(ConfigError::Combination(format!(
            "solver.gamma override applies to `solve` and `wavefunction` only, not `{command}`"
        ))
        .into()),
        None => Ok(()),
    }
}

/// The dimensionless point for the configured geometry, with any γ override.
fn scaled(cfg: &RunConfig, nmax: usize) -> Result<ScaledParams, Failure> {
    let s = scale_params(&cfg.physics, nmax)?;
    Ok(match cfg.gamma {
        Some(g) => s.with_gamma(g),
        None => s,
    })
}

fn write(files: &[&CsvFile], cfg: &RunConfig) -> Outcome {
    files
        .iter()
        .map(|f| f.write(cfg).map_err(Failure::from))
        .collect()
}

pub fn solve(cfg: &RunConfig, tables: &dyn TableSource) -> Outcome {
    let s = scaled(cfg, cfg.nmax)?;
    let t = tables.table(s.delta, 2 * cfg.nmax)?;
    let sol = solve_lowest(&s, &t, 1)?;
    let g = sol.ground();
    let report = analyze(g.coefficients.as_ref(), cfg.witness_dim)?;
    let mut f = CsvFile::new(
        "solve",
        &[
            "nmax", "gamma", "delta", "E_ground_E0", "sector", "n1", "n2", "S", "w", "mean_u1", "mean_u2",
            "cov_u1u2", "residual",
        ],
    );
    f.note("witness_dim", report.witness_dim);
    f.note("energy_unit_J", num(s.energy_unit));
    let top: Vec<String> = report.schmidt.iter().take(5).map(|&x| num(x)).collect();
    f.note("schmidt_leading", top.join(";"));
    f.row(&[
        s.nmax.to_string(),
        num(s.gamma),
        num(s.delta),
        num(g.energy),
        g.sector.short().to_owned(),
        g.free_label.0.to_string(),
        g.free_label.1.to_string(),
        num(report.entropy),
        num(report.witness),
        num(report.position.mean_u1),
        num(report.position.mean_u2),
        num(report.position.covariance),
        num(g.residual),
    ]);
    write(&[&f], cfg)
}

pub fn sweep_distance(cfg: &RunConfig, tables: &dyn TableSource) -> Outcome {
    no_gamma_override(cfg, "sweep-distance")?;
    let points = distance_sweep(
        &cfg.physics,
        &cfg.deltas,
        cfg.nmax,
        cfg.distance_levels,
        tables,
        cfg.witness_dim,
    )?;
    let mut levels = CsvFile::new("levels", LEVEL_COLUMNS);
    let mut summary = CsvFile::new("distance", &["delta", "d_m", "gamma", "E_ground_E0", "S", "w"]);
    for p in &points {
        for r in &p.levels {
            levels.row(&level_fields(p.delta, r));
        }
        summary.row(&[
            num(p.delta),
            num(p.separation),
            num(p.scaled.gamma),
            num(p.levels[0].energy),
            num(p.ground_entropy),
            num(p.ground_witness),
        ]);
    }
    write(&[&levels, &summary], cfg)
}

pub fn spectrum(cfg: &RunConfig, tables: &dyn TableSource) -> Outcome {
    no_gamma_override(cfg, "spectrum-shift")?;
    let s = scale_params(&cfg.physics, cfg.nmax)?;
    let rows = spectrum_shift(&cfg.physics, cfg.nmax, cfg.levels, tables)?;
    let mut f = CsvFile::new("levels", LEVEL_COLUMNS);
    let mean = rows.iter().map(|r| r.shift).sum::<f64>() / rows.len() as f64;
    f.note("mean_dE", num(mean));
    for r in &rows {
        f.row(&level_fields(s.delta, r));
    }
    write(&[&f], cfg)
}

pub fn entropy(cfg: &RunConfig, tables: &dyn TableSource) -> Outcome {
    no_gamma_override(cfg, "entropy-spectrum")?;
    let spec = entropy_spectrum(&cfg.physics, cfg.nmax, cfg.levels, tables, cfg.witness_dim)?;
    let mut f = CsvFile::new("entropy", &["level", "energy_E0", "S", "w"]);
    f.note("fit", "S = a + b ln(level)");
    f.note("fit_a", num(spec.fit.a));
    f.note("fit_b", num(spec.fit.b));
    f.note("fit_r_squared", num(spec.fit.r_squared));
    for r in &spec.rows {
        f.row(&[
            r.level.level.to_string(),
            num(r.level.energy),
            num(r.entropy),
            num(r.witness),
        ]);
    }
    write(&[&f], cfg)
}

pub fn grid(cfg: &RunConfig, tables: &dyn TableSource) -> Outcome {
    no_gamma_override(cfg, "grid-mass-width")?;
    let masses = log_space(cfg.mass_range.0, cfg.mass_range.1, cfg.mass_points);
    let widths = log_space(cfg.width_range.0, cfg.width_range.1, cfg.width_points);
    let cells = mass_width_grid(
        &cfg.physics,
        &masses,
        &widths,
        cfg.physics.separation,
        cfg.nmax,
        tables,
        cfg.witness_dim,
    )?;
    let mut f = CsvFile::new("grid", &["m_kg", "L_m", "gamma", "delta", "S", "w"]);
    let (mut s_ok, mut w_ok, mut failed) = (Vec::new(), Vec::new(), 0);
    for c in &cells {
        let (s, w) = match &c.outcome {
            Ok(g) => {
                s_ok.push(g.entropy);
                w_ok.push(g.witness);
                (g.entropy, g.witness)
            }
            Err(e) => {
                log::warn!("cell m = {:e} kg, L = {:e} m failed: {e}", c.mass, c.width);
                failed += 1;
                (f64::NAN, f64::NAN)
            }
        };
        f.row(&[num(c.mass), num(c.width), num(c.gamma), num(c.delta), num(s), num(w)]);
    }
    f.note("failed_cells", failed);
    if let Ok(rho) = rank_correlation(&s_ok, &w_ok) {
        f.note("rank_correlation_S_w", num(rho));
    }
    write(&[&f], cfg)
}

pub fn converge(cfg: &RunConfig, tables: &dyn TableSource) -> Outcome {
    no_gamma_override(cfg, "converge")?;
    let rows = convergence_study(&cfg.physics, &cfg.nmaxes, tables)?;
    let mut f = CsvFile::new("converge", &["nmax", "E_ground_E0", "rel_diff"]);
    let monotone = rows.windows(2).all(|w| w[1].ground_energy <= w[0].ground_energy);
    let last = rows.last().and_then(|r| r.rel_diff);
    f.note("monotone_non_increasing", monotone);
    f.note(
        "plateau",
        last.map_or_else(|| "n/a".to_owned(), |d| (d <= cfg.convergence_tol).to_string()),
    );
    for r in &rows {
        f.row(&[
            r.nmax.to_string(),
            num(r.ground_energy),
            r.rel_diff.map(num).unwrap_or_default(),
        ]);
    }
    write(&[&f], cfg)
}

pub fn decohere(cfg: &RunConfig, tables: &dyn TableSource) -> Outcome {
    no_gamma_override(cfg, "decohere")?;
    let n_d = cfg.n_d;
    let s = scale_params(&cfg.physics, n_d)?;
    let bath = scale_decoherence(&cfg.physics, &s)?;
    let h = match cfg.model {
        DecohereModel::Coupled => {
            let t = tables.table(s.delta, 2 * n_d)?;
            coupled_hamiltonian(&s, &t, n_d)?
        }
        DecohereModel::Free => free_hamiltonian(n_d),
    };
    let dt = match cfg.dt {
        Some(dt) => dt,
        None => 0.5 * stable_dt_bound(h.as_ref(), &bath, n_d)?,
    };
    let rho0 = DensityMatrix::product_ground(n_d)?;
    let opts = EvolveOptions {
        sample_every: cfg.sample_every,
        snapshot_every: None,
    };
    let traj = evolve(&rho0, h.as_ref(), &bath, dt, cfg.steps, &opts)?;
    let mut f = CsvFile::new("decohere", &["time_t0", "purity", "trace_err", "min_eig"]);
    f.note("caveat", "Markovian high-temperature bath; memory effects of the environment are neglected");
    f.note("dt_t0", num(dt));
    f.note("time_unit_s", num(cfg.physics.hbar / s.energy_unit));
    f.note("kappa1", num(bath.kappa1));
    f.note("kappa2", num(bath.kappa2));
    f.note("positivity_flags", traj.positivity_flags);
    match decoherence_time(&traj) {
        Ok(fit) => {
            f.note("tau_d_t0", num(fit.tau_d));
            f.note("fit_r_squared", num(fit.r_squared));
            f.note("fit_window", format!("{};{}", num(fit.window.0), num(fit.window.1)));
        }
        Err(e) => f.note("fit_error", e.to_string().replace('\n', " ")),
    }
    for i in 0..traj.times.len() {
        f.row(&[
            num(traj.times[i]),
            num(traj.purity[i]),
            num(traj.trace_err[i]),
            num(traj.min_eig[i]),
        ]);
    }
    write(&[&f], cfg)
}

pub fn feasibility(cfg: &RunConfig) -> Outcome {
    let p = &cfg.physics;
    let a = adiabaticity_check(cfg.d_ini, p.separation, cfg.velocity, p, cfg.thresholds.adiabatic_ratio)?;
    let ps = pseudopotential_check(p, cfg.density, cfg.range_b, &cfg.thresholds)?;
    let r = FeasibilityReport::new(&a, &ps);
    let mut f = CsvFile::new(
        "feasibility",
        &["tau_c_s", "tau_o_s", "ratio", "k_1_per_m", "kb", "density_ratio", "pass_flags"],
    );
    f.row(&[
        num(r.tau_c),
        num(r.tau_o),
        num(r.adiabatic_ratio),
        num(r.k_wavenumber),
        num(r.kb_product),
        num(r.density_ratio),
        r.flags(),
    ]);
    write(&[&f], cfg)
}

pub fn wavefunction(cfg: &RunConfig, tables: &dyn TableSource) -> Outcome {
    let s = scaled(cfg, cfg.nmax)?;
    let t = tables.table(s.delta, 2 * cfg.nmax)?;
    let sol = solve_lowest(&s, &t, cfg.wf_level)?;
    let level = &sol.levels[cfg.wf_level - 1];
    let g = wavefunction_grid(level.coefficients.as_ref(), cfg.wf_resolution)?;
    let mut f = CsvFile::new("wavefunction", &["u1", "u2", "psi"]);
    f.note("level", cfg.wf_level);
    f.note("energy_E0", num(level.energy));
    f.note("sector", level.sector.short());
    f.note("n1", level.free_label.0);
    f.note("n2", level.free_label.1);
    let last = (cfg.wf_resolution - 1) as f64;
    for r in 0..cfg.wf_resolution {
        for c in 0..cfg.wf_resolution {
            f.row(&[num(r as f64 / last), num(c as f64 / last), num(g[(r, c)])]);
        }
    }
    write(&[&f], cfg)
}

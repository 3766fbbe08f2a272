//! Flat `section.key = value` configuration.
//!
//! Precedence, lowest first: built-in defaults, `--paper-scale`, the
//! `--config` file, `--set` overrides, then the dedicated `--out`, `--cache`
//! and `--workers` flags. A CSV written by this tool is itself a valid config
//! file: only its `# config key = value` lines are read.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::output::num;
use wellgrav::sweep::{DEFAULT_DELTAS, DESK_GRID, DESK_LEVELS, DESK_NMAX, MASS_RANGE, FULL_LEVELS, FULL_NMAX, WIDTH_RANGE};
use wellgrav::units::{FeasibilityThresholds, PhysicalParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown key `{key}`; valid keys: {}", valid_keys().join(", "))]
    UnknownKey { key: String },
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("{path}:{line}: expected `key = value`, got `{text}`")]
    Syntax { path: String, line: usize, text: String },
    #[error("invalid combination: {0}")]
    Combination(String),
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which Hamiltonian drives the open-system evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecohereModel {
    Coupled,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub physics: PhysicalParams,
    pub nmax: usize,
    pub levels: usize,
    pub witness_dim: Option<usize>,
    pub gamma: Option<f64>,
    pub accuracy: f64,
    pub deltas: Vec<f64>,
    pub distance_levels: usize,
    pub mass_range: (f64, f64),
    pub mass_points: usize,
    pub width_range: (f64, f64),
    pub width_points: usize,
    pub nmaxes: Vec<usize>,
    pub n_d: usize,
    pub steps: usize,
    pub dt: Option<f64>,
    pub sample_every: usize,
    pub model: DecohereModel,
    pub d_ini: f64,
    pub velocity: f64,
    pub density: f64,
    pub range_b: f64,
    pub thresholds: FeasibilityThresholds,
    pub convergence_tol: f64,
    pub wf_level: usize,
    pub wf_resolution: usize,
    pub paper_scale: bool,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            physics: PhysicalParams::default(),
            nmax: DESK_NMAX,
            levels: DESK_LEVELS,
            witness_dim: None,
            gamma: None,
            accuracy: wellgrav::quadrature::DEFAULT_ACCURACY,
            deltas: DEFAULT_DELTAS.to_vec(),
            distance_levels: 10,
            mass_range: MASS_RANGE,
            mass_points: DESK_GRID,
            width_range: WIDTH_RANGE,
            width_points: DESK_GRID,
            nmaxes: vec![20, 40, 60, 80, 100],
            n_d: 8,
            steps: 10_000,
            dt: None,
            sample_every: 10,
            model: DecohereModel::Coupled,
            d_ini: 50e-6,
            velocity: 1e-6,
            density: 1.0 / (50e-6f64).powi(3),
            range_b: 100e-9,
            thresholds: FeasibilityThresholds::default(),
            convergence_tol: 1e-4,
            wf_level: 1,
            wf_resolution: 101,
            paper_scale: false,
            out: PathBuf::from("."),
            cache: None,
            workers: 0,
        }
    }
}

/// Keys that describe the machine rather than the computation; they are not
/// written to output headers.
const RUNTIME_KEYS: [&str; 3] = ["run.out", "run.cache", "run.workers"];

fn list<T: Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn auto<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "auto".to_owned(), |x| x.to_string())
}

pub fn valid_keys() -> Vec<&'static str> {
    RunConfig::default().entries().into_iter().map(|(k, _)| k).collect()
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_owned(),
        reason: format!("`{value}`: {e}"),
    })
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: Display,
{
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: Display,
{
    value
        .split(',')
        .map(|v| parse(key, v.trim()))
        .collect()
}

impl RunConfig {
    pub fn paper_scale() -> Self {
        let mut c = Self::default();
        c.apply_paper_scale();
        c
    }

    fn apply_paper_scale(&mut self) {
        self.paper_scale = true;
        self.nmax = FULL_NMAX;
        self.levels = FULL_LEVELS;
    }

    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.physics;
        vec![
            ("physics.mass", num(p.mass)),
            ("physics.well_width", num(p.well_width)),
            ("physics.separation", num(p.separation)),
            ("physics.temperature", num(p.temperature)),
            ("physics.damping", num(p.damping)),
            ("physics.cutoff", num(p.cutoff)),
            ("solver.nmax", self.nmax.to_string()),
            ("solver.levels", self.levels.to_string()),
            ("solver.witness_dim", auto(self.witness_dim)),
            ("solver.gamma", auto(self.gamma.map(num))),
            ("quadrature.accuracy", num(self.accuracy)),
            ("distance.deltas", self.deltas.iter().map(|&d| num(d)).collect::<Vec<_>>().join(",")),
            ("distance.levels", self.distance_levels.to_string()),
            ("grid.mass_min", num(self.mass_range.0)),
            ("grid.mass_max", num(self.mass_range.1)),
            ("grid.mass_points", self.mass_points.to_string()),
            ("grid.width_min", num(self.width_range.0)),
            ("grid.width_max", num(self.width_range.1)),
            ("grid.width_points", self.width_points.to_string()),
            ("converge.nmaxes", list(&self.nmaxes)),
            ("decohere.n_d", self.n_d.to_string()),
            ("decohere.steps", self.steps.to_string()),
            ("decohere.dt", auto(self.dt.map(num))),
            ("decohere.sample_every", self.sample_every.to_string()),
            (
                "decohere.hamiltonian",
                match self.model {
                    DecohereModel::Coupled => "coupled",
                    DecohereModel::Free => "free",
                }
                .to_owned(),
            ),
            ("feasibility.d_ini", num(self.d_ini)),
            ("feasibility.velocity", num(self.velocity)),
            ("feasibility.density", num(self.density)),
            ("feasibility.range_b", num(self.range_b)),
            ("thresholds.adiabatic_ratio", num(self.thresholds.adiabatic_ratio)),
            ("thresholds.kb_max", num(self.thresholds.kb_max)),
            ("thresholds.density_ratio_min", num(self.thresholds.density_ratio_min)),
            ("thresholds.convergence", num(self.convergence_tol)),
            ("wavefunction.level", self.wf_level.to_string()),
            ("wavefunction.resolution", self.wf_resolution.to_string()),
            ("run.paper_scale", self.paper_scale.to_string()),
            ("run.out", self.out.display().to_string()),
            (
                "run.cache",
                self.cache.as_ref().map_or_else(|| "none".to_owned(), |c| c.display().to_string()),
            ),
            ("run.workers", auto((self.workers > 0).then_some(self.workers))),
        ]
    }

    /// The entries that determine the numbers in an output file.
    pub fn recorded_entries(&self) -> Vec<(&'static str, String)> {
        self.entries()
            .into_iter()
            .filter(|(k, _)| !RUNTIME_KEYS.contains(k))
            .collect()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let p = &mut self.physics;
        match key {
            "physics.mass" => p.mass = parse(key, value)?,
            "physics.well_width" => p.well_width = parse(key, value)?,
            "physics.separation" => p.separation = parse(key, value)?,
            "physics.temperature" => p.temperature = parse(key, value)?,
            "physics.damping" => p.damping = parse(key, value)?,
            "physics.cutoff" => p.cutoff = parse(key, value)?,
            "solver.nmax" => self.nmax = parse(key, value)?,
            "solver.levels" => self.levels = parse(key, value)?,
            "solver.witness_dim" => self.witness_dim = parse_auto(key, value)?,
            "solver.gamma" => self.gamma = parse_auto(key, value)?,
            "quadrature.accuracy" => self.accuracy = parse(key, value)?,
            "distance.deltas" => self.deltas = parse_list(key, value)?,
            "distance.levels" => self.distance_levels = parse(key, value)?,
            "grid.mass_min" => self.mass_range.0 = parse(key, value)?,
            "grid.mass_max" => self.mass_range.1 = parse(key, value)?,
            "grid.mass_points" => self.mass_points = parse(key, value)?,
            "grid.width_min" => self.width_range.0 = parse(key, value)?,
            "grid.width_max" => self.width_range.1 = parse(key, value)?,
            "grid.width_points" => self.width_points = parse(key, value)?,
            "converge.nmaxes" => self.nmaxes = parse_list(key, value)?,
            "decohere.n_d" => self.n_d = parse(key, value)?,
            "decohere.steps" => self.steps = parse(key, value)?,
            "decohere.dt" => self.dt = parse_auto(key, value)?,
            "decohere.sample_every" => self.sample_every = parse(key, value)?,
            "decohere.hamiltonian" => {
                self.model = match value {
                    "coupled" => DecohereModel::Coupled,
                    "free" => DecohereModel::Free,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.to_owned(),
                            reason: format!("`{value}`: expected `coupled` or `free`"),
                        })
                    }
                }
            }
            "feasibility.d_ini" => self.d_ini = parse(key, value)?,
            "feasibility.velocity" => self.velocity = parse(key, value)?,
            "feasibility.density" => self.density = parse(key, value)?,
            "feasibility.range_b" => self.range_b = parse(key, value)?,
            "thresholds.adiabatic_ratio" => self.thresholds.adiabatic_ratio = parse(key, value)?,
            "thresholds.kb_max" => self.thresholds.kb_max = parse(key, value)?,
            "thresholds.density_ratio_min" => self.thresholds.density_ratio_min = parse(key, value)?,
            "thresholds.convergence" => self.convergence_tol = parse(key, value)?,
            "wavefunction.level" => self.wf_level = parse(key, value)?,
            "wavefunction.resolution" => self.wf_resolution = parse(key, value)?,
            "run.paper_scale" => {
                if parse(key, value)? {
                    self.apply_paper_scale();
                } else {
                    self.paper_scale = false;
                }
            }
            "run.out" => self.out = PathBuf::from(value),
            "run.cache" => self.cache = (value != "none").then(|| PathBuf::from(value)),
            "run.workers" => self.workers = parse_auto(key, value)?.unwrap_or(0),
            _ => return Err(ConfigError::UnknownKey { key: key.to_owned() }),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped,
    /// except `# config key = value`, which is how output headers record runs.
    /// Files carrying a `# wellgrav` header contribute only those lines.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        let from_output = text.lines().next().is_some_and(|l| l.starts_with("# wellgrav "));
        // a header's paper-scale flag must not clobber the explicit values after it
        let mut deferred = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let body = match line.strip_prefix("# config ") {
                Some(rest) => rest,
                None if from_output || line.is_empty() || line.starts_with('#') => continue,
                None => line,
            };
            let (k, v) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: origin.to_owned(),
                line: n + 1,
                text: raw.to_owned(),
            })?;
            let k = k.trim();
            if k == "run.paper_scale" {
                self.set(k, v)?;
            } else {
                deferred.push((k.to_owned(), v.to_owned()));
            }
        }
        for (k, v) in deferred {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Checks ranges and cross-key constraints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: String| {
            Err(ConfigError::BadValue {
                key: key.to_owned(),
                reason,
            })
        };
        let combo = |msg: String| Err(ConfigError::Combination(msg));
        let positive = [
            ("physics.mass", self.physics.mass),
            ("physics.well_width", self.physics.well_width),
            ("physics.separation", self.physics.separation),
            ("quadrature.accuracy", self.accuracy),
            ("grid.mass_min", self.mass_range.0),
            ("grid.width_min", self.width_range.0),
            ("feasibility.velocity", self.velocity),
            ("feasibility.density", self.density),
            ("feasibility.range_b", self.range_b),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(k, format!("must be finite and > 0, got {v}"));
            }
        }
        if self.nmax < 2 {
            return bad("solver.nmax", format!("must be >= 2, got {}", self.nmax));
        }
        if self.levels == 0 || self.distance_levels == 0 {
            return combo("solver.levels and distance.levels must be >= 1".into());
        }
        if let Some(n_w) = self.witness_dim {
            if n_w == 0 || n_w > self.nmax {
                return combo(format!(
                    "solver.witness_dim ({n_w}) must lie in 1..=solver.nmax ({})",
                    self.nmax
                ));
            }
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return bad("solver.gamma", format!("must be >= 0 or auto, got {g}"));
            }
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return bad("distance.deltas", "need positive separations".into());
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return combo("distance.deltas must be strictly decreasing".into());
        }
        if self.mass_range.1 < self.mass_range.0 {
            return combo("grid.mass_max must be >= grid.mass_min".into());
        }
        if self.width_range.1 < self.width_range.0 {
            return combo("grid.width_max must be >= grid.width_min".into());
        }
        if self.mass_points == 0 || self.width_points == 0 {
            return combo("grid.mass_points and grid.width_points must be >= 1".into());
        }
        if self.nmaxes.is_empty() || self.nmaxes[0] < 2 || self.nmaxes.windows(2).any(|w| w[1] <= w[0]) {
            return combo("converge.nmaxes must be strictly increasing and start at >= 2".into());
        }
        if self.n_d < 2 || self.steps == 0 || self.sample_every == 0 {
            return combo("decohere.n_d >= 2, decohere.steps >= 1 and decohere.sample_every >= 1 required".into());
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return bad("decohere.dt", format!("must be > 0 or auto, got {dt}"));
            }
        }
        if !(self.d_ini > self.physics.separation) {
            return combo(format!(
                "feasibility.d_ini ({}) must exceed physics.separation ({})",
                self.d_ini, self.physics.separation
            ));
        }
        if self.wf_level == 0 || self.wf_level > self.nmax * self.nmax {
            return combo(format!(
                "wavefunction.level ({}) must lie in 1..=solver.nmax² ({})",
                self.wf_level,
                self.nmax * self.nmax
            ));
        }
        if self.wf_resolution < 16 {
            return bad("wavefunction.resolution", format!("must be >= 16, got {}", self.wf_resolution));
        }
        Ok(())
    }
}

//! Laboratory (SI) parameters, the dimensionless problem derived from them,
//! and the experimental-feasibility scales.
//!
//! Energies are measured in `E0 = π²ħ²/(mL²)` and times in `t0 = ħ/E0`.
//! Positions inside each well are `u = x/L ∈ [0, 1]`, so a single particle in
//! level `n` carries kinetic energy `n²/2` and the gravitational coupling reads
//! `−γ/(u1 + u2 + δ)` with `γ = Gm³L/(π²ħ²)` and `δ = d/L`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// CODATA 2018 values.
pub const GRAVITATIONAL_CONSTANT: f64 = 6.674_30e-11;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Mass of each particle, kg.
    pub mass: f64,
    /// Well width `L`, m.
    pub well_width: f64,
    /// Wall-to-wall separation `d` between the wells, m.
    pub separation: f64,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Phenomenological damping `γ0`, 1/s.
    pub damping: f64,
    /// High-frequency bath cutoff `Λ`, 1/s.
    pub cutoff: f64,
    pub big_g: f64,
    pub hbar: f64,
    pub k_b: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mass: 1e-17,
            well_width: 50e-6,
            separation: 1e-6,
            temperature: 1e-3,
            damping: 1e-24,
            cutoff: 1e7,
            big_g: GRAVITATIONAL_CONSTANT,
            hbar: HBAR,
            k_b: BOLTZMANN,
        }
    }
}

impl PhysicalParams {
    pub fn with_geometry(mass: f64, well_width: f64, separation: f64) -> Self {
        Self {
            mass,
            well_width,
            separation,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        positive("well_width", self.well_width)?;
        positive("separation", self.separation)?;
        non_negative("temperature", self.temperature)?;
        non_negative("damping", self.damping)?;
        non_negative("cutoff", self.cutoff)?;
        positive("G", self.big_g)?;
        positive("hbar", self.hbar)?;
        positive("kB", self.k_b)?;
        Ok(())
    }

    /// `E0 = π²ħ²/(mL²)` in joules.
    pub fn energy_unit(&self) -> f64 {
        PI * PI * self.hbar * self.hbar / (self.mass * self.well_width * self.well_width)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and >= 0, got {v}")))
    }
}

/// The dimensionless problem handed to every numerical module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    pub gamma: f64,
    pub delta: f64,
    /// Sine-basis size per particle.
    pub nmax: usize,
    /// `E0` in joules.
    pub energy_unit: f64,
    /// `t0 = ħ/E0` in seconds.
    pub time_unit: f64,
}

impl ScaledParams {
    /// A purely dimensionless problem with unit energy and time scales.
    pub fn dimensionless(gamma: f64, delta: f64, nmax: usize) -> Result<Self> {
        let s = Self {
            gamma,
            delta,
            nmax,
            energy_unit: 1.0,
            time_unit: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("gamma", self.gamma)?;
        positive("delta", self.delta)?;
        if self.nmax < 2 {
            return Err(Error::param("nmax", format!("must be >= 2, got {}", self.nmax)));
        }
        positive("energy_unit", self.energy_unit)?;
        positive("time_unit", self.time_unit)?;
        Ok(())
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_nmax(self, nmax: usize) -> Self {
        Self { nmax, ..self }
    }

    /// Recovers `(mass, well_width, separation)` from the scaled problem.
    ///
    /// Inverts `E0 = π²ħ²/(mL²)` and `γ = Gm³L/(π²ħ²)`, which requires `γ > 0`.
    pub fn to_physical(&self, big_g: f64, hbar: f64) -> Result<(f64, f64, f64)> {
        positive("gamma", self.gamma)?;
        let pi2h2 = PI * PI * hbar * hbar;
        let m_l2 = pi2h2 / self.energy_unit;
        let m3_l = self.gamma * pi2h2 / big_g;
        let mass = (m3_l * m3_l / m_l2).powf(0.2);
        let width = m3_l / (mass * mass * mass);
        Ok((mass, width, self.delta * width))
    }
}

pub fn scale_params(p: &PhysicalParams, nmax: usize) -> Result<ScaledParams> {
    p.validate()?;
    let energy_unit = p.energy_unit();
    let s = ScaledParams {
        gamma: p.big_g * p.mass.powi(3) * p.well_width / (PI * PI * p.hbar * p.hbar),
        delta: p.separation / p.well_width,
        nmax,
        energy_unit,
        time_unit: p.hbar / energy_unit,
    };
    s.validate()?;
    Ok(s)
}

/// Configurable cut-offs for the "≫" and "≪" feasibility conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityThresholds {
    /// `τ_c/τ_o` must exceed this.
    pub adiabatic_ratio: f64,
    /// `k·b` must stay below this.
    pub kb_max: f64,
    /// `ρ^(−1/3)/b` must exceed this.
    pub density_ratio_min: f64,
}

impl Default for FeasibilityThresholds {
    fn default() -> Self {
        Self {
            adiabatic_ratio: 100.0,
            kb_max: 0.1,
            density_ratio_min: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adiabaticity {
    /// `(d_ini − d_f)/v`, s.
    pub tau_c: f64,
    /// `2πħ/E_ini`, s.
    pub tau_o: f64,
    pub ratio: f64,
    pub adiabatic: bool,
}

pub fn adiabaticity_check(
    d_ini: f64,
    d_f: f64,
    velocity: f64,
    p: &PhysicalParams,
    threshold: f64,
) -> Result<Adiabaticity> {
    p.validate()?;
    positive("d_f", d_f)?;
    positive("velocity", velocity)?;
    if !(d_ini > d_f) {
        return Err(Error::InvalidRange(format!(
            "initial distance {d_ini} m must exceed final distance {d_f} m"
        )));
    }
    let tau_c = (d_ini - d_f) / velocity;
    // single-particle ground energy, E0/2
    let e_ini = 0.5 * p.energy_unit();
    let tau_o = 2.0 * PI * p.hbar / e_ini;
    let ratio = tau_c / tau_o;
    Ok(Adiabaticity {
        tau_c,
        tau_o,
        ratio,
        adiabatic: ratio > threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pseudopotential {
    /// Mean wave number from the ground-state kinetic energy, 1/m.
    pub k_wavenumber: f64,
    pub kb_product: f64,
    /// `ρ^(−1/3)/b`.
    pub density_ratio: f64,
    pub kb_ok: bool,
    pub density_ok: bool,
}

pub fn pseudopotential_check(
    p: &PhysicalParams,
    density: f64,
    range_b: f64,
    thresholds: &FeasibilityThresholds,
) -> Result<Pseudopotential> {
    p.validate()?;
    positive("density", density)?;
    positive("range_b", range_b)?;
    let e_kin = 0.5 * p.energy_unit();
    let k = (2.0 * p.mass * e_kin).sqrt() / p.hbar;
    let kb = k * range_b;
    let density_ratio = density.powf(-1.0 / 3.0) / range_b;
    Ok(Pseudopotential {
        k_wavenumber: k,
        kb_product: kb,
        density_ratio,
        kb_ok: kb < thresholds.kb_max,
        density_ok: density_ratio > thresholds.density_ratio_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub tau_c: f64,
    pub tau_o: f64,
    pub adiabatic_ratio: f64,
    pub k_wavenumber: f64,
    pub kb_product: f64,
    pub density_ratio: f64,
    pub adiabatic_ok: bool,
    pub kb_ok: bool,
    pub density_ok: bool,
}

impl FeasibilityReport {
    pub fn new(a: &Adiabaticity, ps: &Pseudopotential) -> Self {
        Self {
            tau_c: a.tau_c,
            tau_o: a.tau_o,
            adiabatic_ratio: a.ratio,
            k_wavenumber: ps.k_wavenumber,
            kb_product: ps.kb_product,
            density_ratio: ps.density_ratio,
            adiabatic_ok: a.adiabatic,
            kb_ok: ps.kb_ok,
            density_ok: ps.density_ok,
        }
    }

    /// `adiabatic=pass;kb=pass;density=fail` style summary.
    pub fn flags(&self) -> String {
        let f = |ok: bool| if ok { "pass" } else { "fail" };
        format!(
            "adiabatic={};kb={};density={}",
            f(self.adiabatic_ok),
            f(self.kb_ok),
            f(self.density_ok)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn running_example() -> PhysicalParams {
        PhysicalParams::default()
    }

    #[test]
    fn running_example_scales() {
        let s = scale_params(&running_example(), 60).unwrap();
        assert_relative_eq!(s.delta, 0.02, max_relative = 1e-14);
        // G m³ L / (π² ħ²) with CODATA 2018 constants
        let expected_gamma = 6.674_30e-11 * 1e-51 * 50e-6 / (PI * PI * HBAR * HBAR);
        assert_relative_eq!(s.gamma, expected_gamma, max_relative = 1e-14);
        assert!((s.gamma - 30.4).abs() < 0.05, "gamma = {}", s.gamma);
        assert!((s.energy_unit - 4.39e-42).abs() < 0.01e-42);
        assert_relative_eq!(s.time_unit * s.energy_unit, HBAR, max_relative = 1e-14);
    }

    #[test]
    fn gamma_is_cubic_in_mass() {
        let a = scale_params(&running_example(), 10).unwrap();
        let b = scale_params(&PhysicalParams { mass: 2e-17, ..running_example() }, 10).unwrap();
        assert_relative_eq!(b.gamma / a.gamma, 8.0, max_relative = 1e-13);
        assert_eq!(a.delta, b.delta);
    }

    #[test]
    fn rejects_bad_inputs() {
        for bad in [
            PhysicalParams { mass: 0.0, ..running_example() },
            PhysicalParams { well_width: -1.0, ..running_example() },
            PhysicalParams { separation: 0.0, ..running_example() },
            PhysicalParams { temperature: -1.0, ..running_example() },
            PhysicalParams { mass: f64::NAN, ..running_example() },
        ] {
            assert!(matches!(
                scale_params(&bad, 10),
                Err(Error::InvalidParameter { .. })
            ));
        }
        assert!(scale_params(&running_example(), 1).is_err());
    }

    #[test]
    fn adiabaticity_examples() {
        let a = adiabaticity_check(50e-6, 1e-6, 49e-6, &running_example(), 100.0).unwrap();
        assert_relative_eq!(a.tau_c, 1.0, max_relative = 1e-12);
        let s = scale_params(&running_example(), 10).unwrap();
        assert_relative_eq!(a.tau_o, 4.0 * PI * HBAR / s.energy_unit, max_relative = 1e-13);
        assert_relative_eq!(a.ratio, a.tau_c / a.tau_o);
        // τ_o is years at the running example; the approach is far from adiabatic at 1 s
        assert!(!a.adiabatic);

        // E_ini = 2πħ / 1 s gives τ_o = 1 s; E_ini = π²ħ²/(2mL²) fixes mL².
        let e_ini = 2.0 * PI * HBAR;
        let width = 1e-3;
        let mass = PI * PI * HBAR * HBAR / (2.0 * e_ini * width * width);
        let p = PhysicalParams { mass, well_width: width, ..running_example() };
        let a = adiabaticity_check(2.0, 1.0, 1.0, &p, 100.0).unwrap();
        assert_relative_eq!(a.tau_o, 1.0, max_relative = 1e-12);

        assert!(matches!(
            adiabaticity_check(1e-6, 1e-6, 1.0, &running_example(), 100.0),
            Err(Error::InvalidRange(_))
        ));
    }

    #[test]
    fn pseudopotential_examples() {
        let th = FeasibilityThresholds::default();
        let r = pseudopotential_check(&running_example(), 1.0 / (50e-6f64).powi(3), 100e-9, &th).unwrap();
        assert_relative_eq!(r.k_wavenumber * 50e-6, PI, max_relative = 1e-14);
        assert_relative_eq!(r.kb_product, PI * 100e-9 / 50e-6, max_relative = 1e-13);
        assert!((r.kb_product - 6.28e-3).abs() < 0.01e-3);
        assert!(r.kb_ok);
        let sparse = pseudopotential_check(&running_example(), 1e-200, 100e-9, &th).unwrap();
        assert!(sparse.density_ratio > 1e60 && sparse.density_ok);
        assert!(pseudopotential_check(&running_example(), 0.0, 1e-7, &th).is_err());
    }

    #[test]
    fn flags_render() {
        let th = FeasibilityThresholds::default();
        let a = adiabaticity_check(50e-6, 1e-6, 1e-6, &running_example(), th.adiabatic_ratio).unwrap();
        let ps = pseudopotential_check(&running_example(), 1.0 / (50e-6f64).powi(3), 100e-9, &th).unwrap();
        let rep = FeasibilityReport::new(&a, &ps);
        assert_eq!(rep.flags(), "adiabatic=fail;kb=pass;density=pass");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gamma_increases_in_mass_and_width(
                m in 1e-19f64..1e-15, l in 1e-6f64..1e-3, f in 1.001f64..3.0
            ) {
                let base = scale_params(&PhysicalParams::with_geometry(m, l, 1e-6), 4).unwrap();
                let heavier = scale_params(&PhysicalParams::with_geometry(m * f, l, 1e-6), 4).unwrap();
                let wider = scale_params(&PhysicalParams::with_geometry(m, l * f, 1e-6), 4).unwrap();
                prop_assert!(heavier.gamma > base.gamma);
                prop_assert!(wider.gamma > base.gamma);
                prop_assert_eq!(heavier.delta, base.delta);
            }

            #[test]
            fn inverse_map_recovers_inputs(
                m in 1e-19f64..1e-15, l in 1e-6f64..1e-3, d in 1e-8f64..1e-4
            ) {
                let p = PhysicalParams::with_geometry(m, l, d);
                let s = scale_params(&p, 4).unwrap();
                let (m2, l2, d2) = s.to_physical(p.big_g, p.hbar).unwrap();
                prop_assert!(((m2 - m) / m).abs() < 1e-12);
                prop_assert!(((l2 - l) / l).abs() < 1e-12);
                prop_assert!(((d2 - d) / d).abs() < 1e-12);
            }

            #[test]
            fn ground_wavenumber_is_pi_over_width(m in 1e-19f64..1e-15, l in 1e-6f64..1e-3) {
                let p = PhysicalParams::with_geometry(m, l, 1e-6);
                let r = pseudopotential_check(&p, 1.0, 1e-9, &FeasibilityThresholds::default()).unwrap();
                prop_assert!((r.k_wavenumber * l / PI - 1.0).abs() < 1e-13);
            }
        }
    }
}

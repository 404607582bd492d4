//! Exact wavefunctions of the time-dependent oscillators.
//!
//! Every state family shares one shape at a fixed time:
//!
//! ```text
//! ψ(x) = A · H_n(ξ) · exp(−ξ²/2) · exp(i[φ₀ + k x + c y²]),   y = x − x_p,  ξ = s·y
//! ```
//!
//! The families differ only in how `A, s, c, φ₀, x_p, k` are obtained: from
//! a classical basis (general, unit-mass and driven forms) or from the
//! closed-form expressions of the SHO, Caldirola–Kanai and Lo examples.
//! [`FieldSlice`] holds those numbers; each family computes them on its own.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::classical::{ClassicalBasis, DrivenSolution};
use crate::error::{Error, Result};
use crate::models::{OscillatorModel, Units};
use crate::transforms::{GridFunction, GridSpec};

/// Physicists' Hermite polynomial by the three-term recurrence.
pub fn hermite(n: usize, xi: f64) -> f64 {
    let mut h_prev = 1.0;
    if n == 0 {
        return h_prev;
    }
    let mut h = 2.0 * xi;
    for k in 1..n {
        let next = 2.0 * xi * h - 2.0 * k as f64 * h_prev;
        h_prev = h;
        h = next;
    }
    h
}

/// `ln(2ⁿ n!)`.
fn ln_norm_factor(n: usize) -> f64 {
    n as f64 * std::f64::consts::LN_2 + (1..=n).map(|k| (k as f64).ln()).sum::<f64>()
}

/// Parameters of one time slice of a state; see the module docs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldSlice {
    pub n: usize,
    pub t: f64,
    /// `ln A`, including `1/√(2ⁿn!)`.
    pub log_amp: f64,
    /// Inverse width: `ξ = scale · (x − shift)`.
    pub scale: f64,
    /// Coefficient of `y²` in the phase.
    pub chirp: f64,
    pub phase0: f64,
    pub shift: f64,
    pub wavenumber: f64,
}

impl FieldSlice {
    pub fn eval(&self, x: f64) -> C64 {
        let y = x - self.shift;
        let xi = self.scale * y;
        let log_mag = self.log_amp - 0.5 * xi * xi;
        // Gaussian first, in log space; skip the polynomial once it cannot matter
        if log_mag + self.n as f64 * (2.0 * xi.abs() + 2.0).ln() < -745.0 {
            return C64::new(0.0, 0.0);
        }
        let mag = hermite(self.n, xi) * log_mag.exp();
        let phase = self.phase0 + self.wavenumber * x + self.chirp * y * y;
        C64::from_polar(mag, phase)
    }

    /// Interval outside which the state is negligible:
    /// `x_p ± 8·ρ·√(ħ(2n+1)/Ω)`.
    pub fn support(&self) -> (f64, f64) {
        let half = 8.0 * ((2 * self.n + 1) as f64).sqrt() / self.scale;
        (self.shift - half, self.shift + half)
    }

    /// Real part of the coefficient of `−x²/(2ħ)` in the exponent, i.e.
    /// `Ω/ρ²` (for `hbar`).
    pub fn gaussian_width_parameter(&self, hbar: f64) -> f64 {
        self.scale * self.scale * hbar
    }
}

/// Quantum number, units, classical inputs and the model they belong to.
#[derive(Clone, Debug)]
pub struct StateSpec {
    pub n: usize,
    pub units: Units,
    pub basis: ClassicalBasis,
    pub driven: Option<DrivenSolution>,
    pub model: OscillatorModel,
}

impl StateSpec {
    pub fn new(
        n: usize,
        units: Units,
        basis: ClassicalBasis,
        driven: Option<DrivenSolution>,
        model: OscillatorModel,
    ) -> Result<Self> {
        units.validate()?;
        if !(basis.omega() > 0.0) {
            return Err(Error::NonPositiveOmega(basis.omega()));
        }
        if model.is_driven() && driven.is_none() {
            return Err(Error::InvalidParameter(
                "driven model needs a particular solution".into(),
            ));
        }
        if !model.is_driven() && driven.is_some() {
            return Err(Error::InvalidParameter(
                "particular solution supplied for an undriven model".into(),
            ));
        }
        Ok(Self {
            n,
            units,
            basis,
            driven,
            model,
        })
    }

    /// Same state without its driving: model force removed, no particular solution.
    pub fn undriven(&self) -> Self {
        Self {
            n: self.n,
            units: self.units,
            basis: self.basis.clone(),
            driven: None,
            model: self.model.clone().with_force(crate::models::Force::None),
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    fn slice_with_mass(&self, t: f64, mass: f64) -> Result<FieldSlice> {
        let hbar = self.units.hbar;
        let b = self.basis.sample(t)?;
        let omega = self.basis.omega();
        let n = self.n;
        let (shift, wavenumber, delta) = match &self.driven {
            Some(d) => {
                let s = d.sample(t)?;
                (s.xp, mass * s.dxp / hbar, s.delta)
            }
            None => (0.0, 0.0, 0.0),
        };
        Ok(FieldSlice {
            n,
            t,
            log_amp: -0.5 * ln_norm_factor(n) + 0.25 * (omega / (PI * hbar)).ln() - 0.5 * b.rho.ln(),
            scale: (omega / hbar).sqrt() / b.rho,
            chirp: mass * b.drho / (2.0 * hbar * b.rho),
            phase0: (n as f64 + 0.5) * b.theta + delta / hbar,
            shift,
            wavenumber,
        })
    }
}

/// `[(u − iv)/ρ]^{n+1/2}` on the continuous branch of the basis angle.
pub fn complex_halfint_power(basis: &ClassicalBasis, n: usize, t: f64) -> Result<C64> {
    let theta = basis.sample(t)?.theta;
    Ok(C64::from_polar(1.0, (n as f64 + 0.5) * theta))
}

/// Closed-form `ρ̃_s = √(1 + (C²−1)cos² wt)`, its time derivative, and the
/// continuous argument of `C cos wt − i sin wt`.
fn pulsating_envelope(w: f64, c: f64, t: f64) -> (f64, f64, f64) {
    let phi = w * t;
    let (s, co) = phi.sin_cos();
    let rho = (1.0 + (c * c - 1.0) * co * co).sqrt();
    let drho = -(c * c - 1.0) * w * co * s / rho;
    // arg(C cos φ − i sin φ) = −atan(tan φ / C) − kπ on the branch through 0
    let k = (phi / PI).round();
    let r = phi - k * PI;
    let theta = -((r.tan() / c).atan() + k * PI);
    (rho, drho, theta)
}

/// The state families with an analytic rule `(x, t) → ψ`.
#[allow(clippy::large_enum_variant)] // built once per state, never in hot loops
#[derive(Clone, Debug)]
pub enum WavefunctionField {
    /// Basis-driven form; unit-mass, variable-mass and driven states alike.
    General(StateSpec),
    /// Unit-mass oscillator of constant frequency with `C = A/B`.
    Sho { w_s: f64, c: f64, n: usize, units: Units },
    /// Caldirola–Kanai closed form.
    Ck {
        m: f64,
        gamma: f64,
        w1: f64,
        c: f64,
        n: usize,
        hbar: f64,
    },
    /// Lo damped-pulsating closed form.
    Lo {
        m0: f64,
        gamma: f64,
        mu: f64,
        nu: f64,
        w_lo: f64,
        c: f64,
        n: usize,
        hbar: f64,
    },
}

impl WavefunctionField {
    pub fn sho(w_s: f64, c: f64, n: usize, units: Units) -> Result<Self> {
        if !(w_s > 0.0 && c > 0.0) {
            return Err(Error::InvalidParameter(format!("need w_s > 0 and C > 0 (w_s={w_s}, C={c})")));
        }
        units.validate()?;
        Ok(Self::Sho { w_s, c, n, units })
    }

    pub fn ck(m: f64, gamma: f64, w1: f64, c: f64, n: usize, hbar: f64) -> Result<Self> {
        if !(w1 * w1 > 0.25 * gamma * gamma) {
            return Err(Error::Overdamped {
                w1_sq: w1 * w1,
                quarter_gamma_sq: 0.25 * gamma * gamma,
            });
        }
        if !(m > 0.0 && c > 0.0 && hbar > 0.0) {
            return Err(Error::InvalidParameter("need m, C, hbar > 0".into()));
        }
        Ok(Self::Ck {
            m,
            gamma,
            w1,
            c,
            n,
            hbar,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn lo(m0: f64, gamma: f64, mu: f64, nu: f64, w_lo: f64, c: f64, n: usize, hbar: f64) -> Result<Self> {
        if !(w_lo > 0.0 && m0 > 0.0 && c > 0.0 && hbar > 0.0) {
            return Err(Error::InvalidParameter("need w_Lo, m0, C, hbar > 0".into()));
        }
        Ok(Self::Lo {
            m0,
            gamma,
            mu,
            nu,
            w_lo,
            c,
            n,
            hbar,
        })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::General(spec) => spec.n,
            Self::Sho { n, .. } | Self::Ck { n, .. } | Self::Lo { n, .. } => *n,
        }
    }

    pub fn hbar(&self) -> f64 {
        match self {
            Self::General(spec) => spec.units.hbar,
            Self::Sho { units, .. } => units.hbar,
            Self::Ck { hbar, .. } | Self::Lo { hbar, .. } => *hbar,
        }
    }

    /// Same family with a different quantum number.
    pub fn with_n(&self, n_new: usize) -> Self {
        let mut f = self.clone();
        match &mut f {
            Self::General(spec) => spec.n = n_new,
            Self::Sho { n, .. } | Self::Ck { n, .. } | Self::Lo { n, .. } => *n = n_new,
        }
        f
    }

    pub fn slice(&self, t: f64) -> Result<FieldSlice> {
        match self {
            Self::General(spec) => {
                let m = spec.model.evaluate(t)?.m;
                spec.slice_with_mass(t, m)
            }
            Self::Sho { w_s, c, n, units } => {
                let (rho, drho, theta) = pulsating_envelope(*w_s, *c, t);
                let hbar = units.hbar;
                let omega = units.unit_mass * c * w_s;
                Ok(FieldSlice {
                    n: *n,
                    t,
                    log_amp: -0.5 * ln_norm_factor(*n) + 0.25 * (omega / (PI * hbar)).ln() - 0.5 * rho.ln(),
                    scale: (omega / hbar).sqrt() / rho,
                    chirp: units.unit_mass * drho / (2.0 * hbar * rho),
                    phase0: (*n as f64 + 0.5) * theta,
                    shift: 0.0,
                    wavenumber: 0.0,
                })
            }
            Self::Ck {
                m,
                gamma,
                w1,
                c,
                n,
                hbar,
            } => {
                let w_ck = (w1 * w1 - 0.25 * gamma * gamma).sqrt();
                let mass = m * (gamma * t).exp();
                let (rho, drho, theta) = pulsating_envelope(w_ck, *c, t);
                let k = mass * c * w_ck;
                Ok(FieldSlice {
                    n: *n,
                    t,
                    log_amp: -0.5 * ln_norm_factor(*n) + 0.25 * (k / (PI * hbar)).ln() - 0.5 * rho.ln(),
                    scale: (k / hbar).sqrt() / rho,
                    chirp: mass * (drho / rho - 0.5 * gamma) / (2.0 * hbar),
                    phase0: (*n as f64 + 0.5) * theta,
                    shift: 0.0,
                    wavenumber: 0.0,
                })
            }
            Self::Lo {
                m0,
                gamma,
                mu,
                nu,
                w_lo,
                c,
                n,
                hbar,
            } => {
                let mass = m0 * (2.0 * (gamma * t + mu * (nu * t).sin())).exp();
                let mass_rate = 2.0 * (gamma + mu * nu * (nu * t).cos());
                let (rho, drho, theta) = pulsating_envelope(*w_lo, *c, t);
                let k = mass * c * w_lo;
                Ok(FieldSlice {
                    n: *n,
                    t,
                    log_amp: -0.5 * ln_norm_factor(*n) + 0.25 * (k / (PI * hbar)).ln() - 0.5 * rho.ln(),
                    scale: (k / hbar).sqrt() / rho,
                    chirp: mass * (drho / rho - 0.5 * mass_rate) / (2.0 * hbar),
                    phase0: (*n as f64 + 0.5) * theta,
                    shift: 0.0,
                    wavenumber: 0.0,
                })
            }
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<C64> {
        Ok(self.slice(t)?.eval(x))
    }

    /// Samples the field on `grid` at `t`, keeping the analytic rule attached
    /// so that transforms can re-evaluate instead of interpolating.
    pub fn sample(&self, grid: GridSpec, t: f64) -> Result<GridFunction> {
        let slice = self.slice(t)?;
        Ok(GridFunction::from_fn(grid, t, self.hbar(), Arc::new(move |x| slice.eval(x))))
    }

    /// JSON description for sidecar files.
    pub fn describe(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Self::General(spec) => json!({
                "family": "general",
                "n": spec.n,
                "hbar": spec.units.hbar,
                "unit_mass": spec.units.unit_mass,
                "omega": spec.basis.omega(),
                "numeric_basis": spec.basis.is_numeric(),
                "driven": spec.driven.as_ref().map(|d| json!({
                    "t0": d.t0(),
                    "xp0": d.initial().0,
                    "dxp0": d.initial().1,
                })),
                "model": spec.model,
            }),
            Self::Sho { w_s, c, n, units } => json!({
                "family": "sho", "w_s": w_s, "C": c, "n": n, "hbar": units.hbar, "unit_mass": units.unit_mass,
            }),
            Self::Ck { m, gamma, w1, c, n, hbar } => json!({
                "family": "ck", "m": m, "gamma": gamma, "w1": w1, "C": c, "n": n, "hbar": hbar,
            }),
            Self::Lo { m0, gamma, mu, nu, w_lo, c, n, hbar } => json!({
                "family": "lo", "m0": m0, "gamma": gamma, "mu": mu, "nu": nu, "w_lo": w_lo, "C": c, "n": n, "hbar": hbar,
            }),
        }
    }
}

/// Unit-mass state over the reduced oscillator: `spec.model` must have
/// constant mass `spec.units.unit_mass`.
pub fn psi_unit_mass(spec: &StateSpec, x: f64, t: f64) -> Result<C64> {
    let s = spec.model.evaluate(t)?;
    if s.dm != 0.0 || (s.m - spec.units.unit_mass).abs() > 1e-14 * s.m {
        return Err(Error::InvalidParameter(format!(
            "unit-mass state needs M ≡ {} (got M = {}, Ṁ = {})",
            spec.units.unit_mass, s.m, s.dm
        )));
    }
    Ok(spec.slice_with_mass(t, spec.units.unit_mass)?.eval(x))
}

pub fn psi_general(spec: &StateSpec, x: f64, t: f64) -> Result<C64> {
    if spec.driven.is_some() {
        return Err(Error::InvalidParameter(
            "general undriven form called with a particular solution; use psi_driven".into(),
        ));
    }
    WavefunctionField::General(spec.clone()).eval(x, t)
}

pub fn psi_driven(spec: &StateSpec, x: f64, t: f64) -> Result<C64> {
    if spec.driven.is_none() {
        return Err(Error::InvalidParameter("driven form needs a particular solution".into()));
    }
    WavefunctionField::General(spec.clone()).eval(x, t)
}

pub fn psi_sho(w_s: f64, c: f64, n: usize, units: Units, x: f64, t: f64) -> Result<C64> {
    WavefunctionField::sho(w_s, c, n, units)?.eval(x, t)
}

#[allow(clippy::too_many_arguments)]
pub fn psi_ck(m: f64, gamma: f64, w1: f64, c: f64, n: usize, hbar: f64, x: f64, t: f64) -> Result<C64> {
    WavefunctionField::ck(m, gamma, w1, c, n, hbar)?.eval(x, t)
}

#[allow(clippy::too_many_arguments)]
pub fn psi_lo(
    m0: f64,
    gamma: f64,
    mu: f64,
    nu: f64,
    w_lo: f64,
    c: f64,
    n: usize,
    hbar: f64,
    x: f64,
    t: f64,
) -> Result<C64> {
    WavefunctionField::lo(m0, gamma, mu, nu, w_lo, c, n, hbar)?.eval(x, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::BasisInitial;
    use crate::models::Force;
    use crate::ode::Tolerance;
    use crate::transforms::GridSpec;
    use crate::verify::{align_global_phase, norm};

    fn units() -> Units {
        Units::default()
    }

    /// Σ_k (−1)^k n!/(k!(n−2k)!) (2ξ)^{n−2k}
    fn hermite_series(n: usize, xi: f64) -> f64 {
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        (0..=n / 2)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * fact(n) / (fact(k) * fact(n - 2 * k)) * (2.0 * xi).powi((n - 2 * k) as i32)
            })
            .sum()
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 3.7), 1.0);
        assert_eq!(hermite(2, 1.0), 2.0);
        let (r, s) = (hermite(10, 0.5), hermite_series(10, 0.5));
        assert!(((r - s) / s).abs() < 1e-12, "{r} vs {s}");
        for n in 0..15 {
            for &xi in &[-2.3, -0.4, 0.0, 0.9, 3.1] {
                let (r, s) = (hermite(n, xi), hermite_series(n, xi));
                assert!((r - s).abs() <= 1e-11 * s.abs().max(1.0), "n={n} xi={xi}");
            }
        }
    }

    #[test]
    fn halfint_power_branch() {
        let b = ClassicalBasis::analytic_sho(1.0, 1.0, 1.0).unwrap();
        let p0 = complex_halfint_power(&b, 0, 0.0).unwrap();
        assert!((p0 - C64::new(1.0, 0.0)).norm() < 1e-15);
        // θ decreases by 2π over one period: e^{−iπ} = −1
        let p = complex_halfint_power(&b, 0, 2.0 * PI).unwrap();
        assert!((p - C64::new(-1.0, 0.0)).norm() < 1e-12, "{p}");
        for k in 0..1000 {
            let t = k as f64 * 0.0137 - 3.0;
            assert!((complex_halfint_power(&b, 3, t).unwrap().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn halfint_power_branch_numeric() {
        // integrate dθ/dt = −Ω/ρ² over one period on a numeric basis
        let model = OscillatorModel::sho(1.0, 0.0, 7.0).unwrap();
        let b = ClassicalBasis::solve_homogeneous(
            &model,
            BasisInitial { u0: 1.0, du0: 0.0, v0: 0.0, dv0: 1.0 },
            Tolerance::default(),
        )
        .unwrap();
        let p = complex_halfint_power(&b, 0, 2.0 * PI).unwrap();
        assert!((p - C64::new(-1.0, 0.0)).norm() < 1e-8, "{p}");
    }

    fn sho_spec(a: f64, b: f64, n: usize) -> StateSpec {
        StateSpec::new(
            n,
            units(),
            ClassicalBasis::analytic_sho(1.0, a, b).unwrap(),
            None,
            OscillatorModel::sho(1.0, -20.0, 20.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn unit_mass_ground_state() {
        let spec = sho_spec(1.0, 1.0, 0);
        let (x, t) = (0.3, 1.1);
        let expected = PI.powf(-0.25) * (-x * x / 2.0f64).exp() * C64::from_polar(1.0, -t / 2.0);
        let got = psi_unit_mass(&spec, x, t).unwrap();
        assert!((got - expected).norm() < 1e-15);
        for &t in &[0.0, 0.4, 2.0] {
            assert_eq!(psi_unit_mass(&spec.with_n(1), 0.0, t).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn unit_mass_pulsating_magnitude() {
        let spec = sho_spec(2.0, 1.0, 0);
        let d0 = psi_unit_mass(&spec, 0.0, 0.0).unwrap().norm_sqr();
        let d1 = psi_unit_mass(&spec, 0.0, PI / 2.0).unwrap().norm_sqr();
        // (Ω/πħ)^{1/2}/ρ with Ω = 2, ρ(0) = 2, ρ(π/2) = 1
        assert!((d0 - (2.0 / PI).sqrt() / 2.0).abs() < 1e-15);
        assert!((d1 - (2.0 / PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_mass_rejects_variable_mass() {
        let model = OscillatorModel::caldirola_kanai(1.0, 0.5, 1.0, 0.0, 5.0).unwrap();
        let spec = StateSpec::new(0, units(), ClassicalBasis::analytic_ck(1.0, 0.5, 1.0, 1.0, 1.0).unwrap(), None, model)
            .unwrap();
        assert!(psi_unit_mass(&spec, 0.0, 1.0).is_err());
    }

    #[test]
    fn sho_closed_form_matches_basis_form() {
        for &(c, w) in &[(1.0, 1.0), (2.0, 1.0), (0.6, 1.7)] {
            for n in 0..6 {
                let field = WavefunctionField::sho(w, c, n, units()).unwrap();
                let spec = StateSpec::new(
                    n,
                    units(),
                    ClassicalBasis::analytic_sho(w, c, 1.0).unwrap(),
                    None,
                    OscillatorModel::sho(w, -50.0, 50.0).unwrap(),
                )
                .unwrap();
                for k in 0..40 {
                    let t = -7.0 + k as f64 * 0.41;
                    let grid = GridSpec::new(-8.0, 16.0 / 400.0, 401).unwrap();
                    let a: Vec<C64> = grid.xs().map(|x| field.eval(x, t).unwrap()).collect();
                    let b: Vec<C64> = grid.xs().map(|x| psi_unit_mass(&spec, x, t).unwrap()).collect();
                    let (_, resid) = align_global_phase(&a, &b);
                    assert!(resid < 1e-12, "C={c} n={n} t={t} resid={resid}");
                }
            }
        }
    }

    #[test]
    fn sho_pulsation_envelope() {
        let (rho0, _, _) = pulsating_envelope(1.0, 2.0, 0.0);
        let (rho1, _, _) = pulsating_envelope(1.0, 2.0, PI / 2.0);
        assert!((rho0 - 2.0).abs() < 1e-15 && (rho1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sho_c1_density_is_stationary() {
        for n in 0..=5 {
            let f = WavefunctionField::sho(1.3, 1.0, n, units()).unwrap();
            for &x in &[-2.0, -0.3, 0.0, 1.1, 2.5] {
                let d0 = f.eval(x, 0.0).unwrap().norm_sqr();
                for &t in &[0.5, 1.7, 6.0] {
                    assert!((f.eval(x, t).unwrap().norm_sqr() - d0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn general_with_constant_unit_mass_equals_unit_mass_form() {
        let spec = sho_spec(1.5, 0.8, 3);
        for &(x, t) in &[(0.2, 0.1), (-1.4, 3.3), (2.2, -4.0)] {
            assert_eq!(psi_general(&spec, x, t).unwrap(), psi_unit_mass(&spec, x, t).unwrap());
        }
    }

    #[test]
    fn ck_closed_form_reduces_and_matches() {
        // undamped limit
        for n in 0..4 {
            let ck = WavefunctionField::ck(1.0, 0.0, 1.2, 1.5, n, 1.0).unwrap();
            let sho = WavefunctionField::sho(1.2, 1.5, n, units()).unwrap();
            for &(x, t) in &[(0.3, 0.2), (-1.0, 2.0), (1.7, 5.5)] {
                assert!((ck.eval(x, t).unwrap() - sho.eval(x, t).unwrap()).norm() < 1e-14);
            }
        }
        // Gaussian width parameter m e^{γt} C w_ck / ρ̃²
        let ck = WavefunctionField::ck(1.3, 0.6, 1.0, 2.0, 0, 1.0).unwrap();
        for &t in &[0.0, 1.0, 2.7] {
            let s = ck.slice(t).unwrap();
            let w = 0.91f64.sqrt();
            let rho_sq = 1.0 + 3.0 * (w * t).cos().powi(2);
            let expected = 1.3 * (0.6 * t).exp() * 2.0 * w / rho_sq;
            assert!((s.gaussian_width_parameter(1.0) - expected).abs() < 1e-13 * expected);
        }
        assert!(WavefunctionField::ck(1.0, 0.6, 0.2, 1.0, 0, 1.0).is_err());
    }

    #[test]
    fn ck_closed_form_vs_general() {
        let model = OscillatorModel::caldirola_kanai(1.0, 0.6, 1.0, -1.0, 10.0).unwrap();
        for &c in &[1.0, 2.0] {
            let basis = ClassicalBasis::analytic_ck(1.0, 0.6, 1.0, c, 1.0).unwrap();
            for n in 0..5 {
                let spec = StateSpec::new(n, units(), basis.clone(), None, model.clone()).unwrap();
                let closed = WavefunctionField::ck(1.0, 0.6, 1.0, c, n, 1.0).unwrap();
                for &t in &[0.0, 0.9, 2.5, 6.1] {
                    let grid = GridSpec::new(-6.0, 0.03, 401).unwrap();
                    let a: Vec<C64> = grid.xs().map(|x| closed.eval(x, t).unwrap()).collect();
                    let b: Vec<C64> = grid.xs().map(|x| psi_general(&spec, x, t).unwrap()).collect();
                    let (_, resid) = align_global_phase(&a, &b);
                    assert!(resid < 1e-10, "c={c} n={n} t={t}: {resid}");
                }
            }
        }
    }

    #[test]
    fn ck_normalization() {
        let f = WavefunctionField::ck(1.0, 0.6, 1.0, 1.0, 0, 1.0).unwrap();
        for &t in &[0.0, 1.0, 5.0] {
            let s = f.slice(t).unwrap();
            let (lo, hi) = s.support();
            let g = f.sample(GridSpec::covering(lo, hi, 2049).unwrap(), t).unwrap();
            assert!((norm(&g).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn lo_closed_form_reduces_to_sho() {
        for n in 0..4 {
            let lo = WavefunctionField::lo(1.0, 0.0, 0.0, 3.0, 1.4, 0.7, n, 1.0).unwrap();
            let sho = WavefunctionField::sho(1.4, 0.7, n, units()).unwrap();
            for &(x, t) in &[(0.3, 0.2), (-1.0, 2.0), (1.7, 5.5)] {
                assert!((lo.eval(x, t).unwrap() - sho.eval(x, t).unwrap()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn lo_closed_form_vs_numeric_basis() {
        let (gamma, mu, nu, w_lo, c) = (0.1, 0.2, 3.0, 1.0, 1.5);
        let model = OscillatorModel::lo(1.0, gamma, mu, nu, w_lo, 0.0, 10.0).unwrap();
        // u = u₀/√M with u₀ = C cos w t, v₀ = sin w t
        let s0 = model.evaluate(0.0).unwrap();
        let half_rate = 0.5 * s0.dm / s0.m;
        let inv_sqrt_m = 1.0 / s0.m.sqrt();
        let init = BasisInitial {
            u0: c * inv_sqrt_m,
            du0: -half_rate * c * inv_sqrt_m,
            v0: 0.0,
            dv0: w_lo * inv_sqrt_m,
        };
        let basis = ClassicalBasis::solve_homogeneous(&model, init, Tolerance::default()).unwrap();
        assert!((basis.omega() - c * w_lo).abs() < 1e-14);
        let closed = WavefunctionField::lo(1.0, gamma, mu, nu, w_lo, c, 2, 1.0).unwrap();
        let general = WavefunctionField::General(StateSpec::new(2, units(), basis, None, model).unwrap());
        for &t in &[0.3, 2.0, 4.4, 9.0] {
            let (lo, hi) = closed.slice(t).unwrap().support();
            let grid = GridSpec::covering(lo, hi, 801).unwrap();
            let a: Vec<C64> = grid.xs().map(|x| closed.eval(x, t).unwrap()).collect();
            let b: Vec<C64> = grid.xs().map(|x| general.eval(x, t).unwrap()).collect();
            let (_, resid) = align_global_phase(&a, &b);
            assert!(resid < 1e-8, "t={t}: {resid}");
        }
    }

    #[test]
    fn driven_form_collapses_without_force() {
        let model = OscillatorModel::sho(1.0, 0.0, 10.0).unwrap();
        let basis = ClassicalBasis::analytic_sho(1.0, 1.0, 1.0).unwrap();
        let d = DrivenSolution::solve_particular(&model, 0.0, 0.0, 0.0, Tolerance::default()).unwrap();
        // model is undriven, so build the spec directly
        let spec = StateSpec { n: 2, units: units(), basis: basis.clone(), driven: Some(d), model: model.clone() };
        let plain = StateSpec::new(2, units(), basis, None, model).unwrap();
        for &(x, t) in &[(0.3, 0.2), (-1.0, 2.0), (1.7, 5.5)] {
            assert_eq!(psi_driven(&spec, x, t).unwrap(), psi_general(&plain, x, t).unwrap());
        }
    }

    #[test]
    fn driven_magnitude_is_shifted_undriven_magnitude() {
        let model = OscillatorModel::sho(1.0, -1.0, 10.0)
            .unwrap()
            .with_force(Force::Cosine { amp: 1.0, omega: 2.0, phase: 0.0, rate: 0.0 });
        let basis = ClassicalBasis::analytic_sho(1.0, 1.3, 1.0).unwrap();
        let d = DrivenSolution::solve_particular(&model, -1.0 / 3.0, 0.0, 0.0, Tolerance::default()).unwrap();
        let spec = StateSpec::new(3, units(), basis, Some(d.clone()), model).unwrap();
        let undriven = spec.undriven();
        for &t in &[0.0, 1.0, 2.5] {
            let xp = d.sample(t).unwrap().xp;
            for k in 0..50 {
                let x = -5.0 + k as f64 * 0.2;
                let a = psi_driven(&spec, x, t).unwrap().norm_sqr();
                let b = psi_general(&undriven, x - xp, t).unwrap().norm_sqr();
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn parity_of_undriven_states() {
        let spec = sho_spec(1.7, 1.0, 0);
        for n in 0..6 {
            let s = spec.with_n(n);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            for &(x, t) in &[(0.4, 0.3), (1.9, 2.2), (3.0, -1.0)] {
                let d = psi_general(&s, -x, t).unwrap() - sign * psi_general(&s, x, t).unwrap();
                assert!(d.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn large_n_stays_finite() {
        let f = WavefunctionField::sho(1.0, 1.0, 50, units()).unwrap();
        for k in 0..200 {
            let x = -60.0 + k as f64 * 0.6;
            assert!(f.eval(x, 0.3).unwrap().norm().is_finite());
        }
        assert_eq!(f.eval(1e4, 0.0).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn spec_validation() {
        let model = OscillatorModel::sho(1.0, 0.0, 1.0).unwrap().with_force(Force::Constant { f0: 1.0 });
        let basis = ClassicalBasis::analytic_sho(1.0, 1.0, 1.0).unwrap();
        assert!(StateSpec::new(0, units(), basis.clone(), None, model).is_err());
        let bad_units = Units { hbar: 0.0, unit_mass: 1.0 };
        assert!(StateSpec::new(0, bad_units, basis, None, OscillatorModel::sho(1.0, 0.0, 1.0).unwrap()).is_err());
    }
}

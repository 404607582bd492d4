//! Oscillator parameter families: mass `M(t)`, squared frequency `w²(t)` and
//! driving force `F(t)`, with closed-form time derivatives of the mass.
//!
//! The Hamiltonian is `p²/2M + M w² x²/2 − x F`. Every family can be reduced
//! to a unit-mass oscillator whose squared frequency is
//! `w₀² = w² − (1/√M) d²√M/dt² = w² + (Ṁ/M)²/4 − M̈/(2M)`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::spline::CubicSpline;

/// Physical constants that the formulas otherwise suppress.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    #[serde(default = "one")]
    pub hbar: f64,
    /// Mass of the reduced (unit-mass) oscillator.
    #[serde(default = "one")]
    pub unit_mass: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Units {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            unit_mass: 1.0,
        }
    }
}

impl Units {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.unit_mass > 0.0 && self.unit_mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "unit_mass must be positive, got {}",
                self.unit_mass
            )));
        }
        Ok(())
    }
}

/// Driving force families.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Force {
    #[default]
    None,
    Constant {
        f0: f64,
    },
    /// `amp · e^{rate·t} · cos(omega·t + phase)`.
    Cosine {
        amp: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        rate: f64,
    },
    /// `Σ coeffs[k] t^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
}

impl Force {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Force::None => 0.0,
            Force::Constant { f0 } => *f0,
            Force::Cosine {
                amp,
                omega,
                phase,
                rate,
            } => amp * (rate * t).exp() * (omega * t + phase).cos(),
            Force::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }

    pub fn is_none(&self) -> bool {
        match self {
            Force::None => true,
            Force::Constant { f0 } => *f0 == 0.0,
            Force::Cosine { amp, .. } => *amp == 0.0,
            Force::Polynomial { coeffs } => coeffs.iter().all(|&c| c == 0.0),
        }
    }
}

/// Tabulated coefficients, interpolated by natural cubic splines.
#[derive(Clone, Debug)]
pub struct ParametricTable {
    t: Vec<f64>,
    m: Vec<f64>,
    dm: Vec<f64>,
    d2m: Vec<f64>,
    w2: Vec<f64>,
    f: Option<Vec<f64>>,
    splines: ParametricSplines,
    /// Largest relative disagreement between the derivative of the mass spline
    /// and the supplied `dm` column.
    dm_mismatch: f64,
}

#[derive(Clone, Debug)]
struct ParametricSplines {
    m: CubicSpline,
    dm: CubicSpline,
    d2m: CubicSpline,
    w2: CubicSpline,
    f: Option<CubicSpline>,
}

pub const SPLINE_DM_WARN_THRESHOLD: f64 = 1e-4;

impl ParametricTable {
    pub fn new(
        t: Vec<f64>,
        m: Vec<f64>,
        dm: Vec<f64>,
        d2m: Vec<f64>,
        w2: Vec<f64>,
        f: Option<Vec<f64>>,
    ) -> Result<Self> {
        if let Some(bad) = m.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "tabulated mass must be positive, found {bad}"
            )));
        }
        let spline = |col: &[f64]| CubicSpline::natural(t.clone(), col.to_vec());
        let splines = ParametricSplines {
            m: spline(&m)?,
            dm: spline(&dm)?,
            d2m: spline(&d2m)?,
            w2: spline(&w2)?,
            f: f.as_deref().map(spline).transpose()?,
        };
        let dm_mismatch = t
            .iter()
            .zip(&dm)
            .map(|(&ti, &dmi)| (splines.m.derivative(ti) - dmi).abs() / dmi.abs().max(1.0))
            .fold(0.0, f64::max);
        if dm_mismatch > SPLINE_DM_WARN_THRESHOLD {
            log::warn!(
                "mass spline derivative disagrees with supplied dm by {dm_mismatch:.3e} (relative)"
            );
        }
        Ok(Self {
            t,
            m,
            dm,
            d2m,
            w2,
            f,
            splines,
            dm_mismatch,
        })
    }

    pub fn dm_mismatch(&self) -> f64 {
        self.dm_mismatch
    }
}

#[allow(clippy::large_enum_variant)] // built once per state, never in hot loops
#[derive(Clone, Debug)]
pub enum Family {
    UnitMassSho {
        w_s: f64,
    },
    CaldirolaKanai {
        m: f64,
        gamma: f64,
        w1: f64,
    },
    LoDampedPulsating {
        m0: f64,
        gamma: f64,
        mu: f64,
        nu: f64,
        w_lo: f64,
    },
    GeneralParametric(ParametricTable),
    /// Constant mass `unit_mass`, squared frequency equal to the reduced
    /// frequency of `parent`, no driving.
    UnitMassReduced {
        parent: Box<OscillatorModel>,
        unit_mass: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::UnitMassSho { .. } => "UnitMassSHO",
            Family::CaldirolaKanai { .. } => "CaldirolaKanai",
            Family::LoDampedPulsating { .. } => "LoDampedPulsating",
            Family::GeneralParametric(_) => "GeneralParametric",
            Family::UnitMassReduced { .. } => "UnitMassReduced",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelSample {
    pub t: f64,
    pub m: f64,
    pub dm: f64,
    pub d2m: f64,
    pub w2: f64,
    pub f: f64,
}

impl ModelSample {
    /// `w² + (Ṁ/M)²/4 − M̈/(2M)`.
    pub fn reduced_frequency_squared(&self) -> f64 {
        let r = self.dm / self.m;
        self.w2 + 0.25 * r * r - 0.5 * self.d2m / self.m
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc", into = "ModelDoc")]
pub struct OscillatorModel {
    family: Family,
    t_min: f64,
    t_max: f64,
    force: Force,
}

/// `w_Lo² + (γ + μν cos νt)² − μν² sin νt`, the frequency that makes the
/// pulsating-mass model reduce to a constant-frequency oscillator.
pub fn lo_frequency_squared(_m0: f64, gamma: f64, mu: f64, nu: f64, w_lo: f64, t: f64) -> f64 {
    let g = gamma + mu * nu * (nu * t).cos();
    w_lo * w_lo + g * g - mu * nu * nu * (nu * t).sin()
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl OscillatorModel {
    pub fn new(family: Family, t_min: f64, t_max: f64) -> Result<Self> {
        finite("t_min", t_min)?;
        finite("t_max", t_max)?;
        if !(t_max > t_min) {
            return Err(Error::InvalidParameter(format!(
                "empty time domain [{t_min}, {t_max}]"
            )));
        }
        match &family {
            Family::UnitMassSho { w_s } => positive("w_s", *w_s)?,
            Family::CaldirolaKanai { m, gamma, w1 } => {
                positive("m", *m)?;
                finite("gamma", *gamma)?;
                finite("w1", *w1)?;
            }
            Family::LoDampedPulsating {
                m0,
                gamma,
                mu,
                nu,
                w_lo,
            } => {
                positive("m0", *m0)?;
                finite("gamma", *gamma)?;
                finite("mu", *mu)?;
                finite("nu", *nu)?;
                finite("w_lo", *w_lo)?;
            }
            Family::GeneralParametric(table) => {
                let (lo, hi) = (table.t[0], table.t[table.t.len() - 1]);
                if t_min < lo || t_max > hi {
                    return Err(Error::InvalidParameter(format!(
                        "table covers [{lo}, {hi}] but domain is [{t_min}, {t_max}]; no extrapolation"
                    )));
                }
            }
            Family::UnitMassReduced { parent, unit_mass } => {
                positive("unit_mass", *unit_mass)?;
                if t_min < parent.t_min || t_max > parent.t_max {
                    return Err(Error::InvalidParameter(
                        "reduced model domain must lie inside the parent domain".into(),
                    ));
                }
            }
        }
        Ok(Self {
            family,
            t_min,
            t_max,
            force: Force::None,
        })
    }

    pub fn with_force(mut self, force: Force) -> Self {
        self.force = force;
        self
    }

    pub fn sho(w_s: f64, t_min: f64, t_max: f64) -> Result<Self> {
        Self::new(Family::UnitMassSho { w_s }, t_min, t_max)
    }

    pub fn caldirola_kanai(m: f64, gamma: f64, w1: f64, t_min: f64, t_max: f64) -> Result<Self> {
        Self::new(Family::CaldirolaKanai { m, gamma, w1 }, t_min, t_max)
    }

    pub fn lo(
        m0: f64,
        gamma: f64,
        mu: f64,
        nu: f64,
        w_lo: f64,
        t_min: f64,
        t_max: f64,
    ) -> Result<Self> {
        Self::new(
            Family::LoDampedPulsating {
                m0,
                gamma,
                mu,
                nu,
                w_lo,
            },
            t_min,
            t_max,
        )
    }

    /// The unit-mass oscillator with squared frequency `w₀²(t)` of this model.
    pub fn unit_mass_reduction(&self, unit_mass: f64) -> Result<Self> {
        Self::new(
            Family::UnitMassReduced {
                parent: Box::new(self.clone()),
                unit_mass,
            },
            self.t_min,
            self.t_max,
        )
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn force(&self) -> &Force {
        &self.force
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }

    pub fn check_domain(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain {
                t,
                t_min: self.t_min,
                t_max: self.t_max,
            })
        }
    }

    pub fn is_driven(&self) -> bool {
        let table_force = match &self.family {
            Family::GeneralParametric(table) => {
                table.f.as_ref().is_some_and(|f| f.iter().any(|&v| v != 0.0))
            }
            _ => false,
        };
        !self.force.is_none() || table_force
    }

    /// Closed-form `M, Ṁ, M̈, w², F` at `t`.
    pub fn evaluate(&self, t: f64) -> Result<ModelSample> {
        self.check_domain(t)?;
        let s = self.sample_unchecked(t);
        if !(s.m > 0.0) {
            return Err(Error::InvalidParameter(format!("mass {} not positive at t = {t}", s.m)));
        }
        Ok(s)
    }

    /// Evaluation without the domain check; used inside integrators whose
    /// stages stay within the domain.
    pub(crate) fn sample_unchecked(&self, t: f64) -> ModelSample {
        let mut s = match &self.family {
            Family::UnitMassSho { w_s } => ModelSample {
                t,
                m: 1.0,
                dm: 0.0,
                d2m: 0.0,
                w2: w_s * w_s,
                f: 0.0,
            },
            Family::CaldirolaKanai { m, gamma, w1 } => {
                let mass = m * (gamma * t).exp();
                ModelSample {
                    t,
                    m: mass,
                    dm: gamma * mass,
                    d2m: gamma * gamma * mass,
                    w2: w1 * w1,
                    f: 0.0,
                }
            }
            Family::LoDampedPulsating {
                m0,
                gamma,
                mu,
                nu,
                w_lo,
            } => {
                // M = m0 exp(2g), g = γt + μ sin νt
                let g = gamma * t + mu * (nu * t).sin();
                let dg = gamma + mu * nu * (nu * t).cos();
                let d2g = -mu * nu * nu * (nu * t).sin();
                let mass = m0 * (2.0 * g).exp();
                ModelSample {
                    t,
                    m: mass,
                    dm: 2.0 * dg * mass,
                    d2m: (2.0 * d2g + 4.0 * dg * dg) * mass,
                    w2: lo_frequency_squared(*m0, *gamma, *mu, *nu, *w_lo, t),
                    f: 0.0,
                }
            }
            Family::GeneralParametric(table) => {
                let sp = &table.splines;
                ModelSample {
                    t,
                    m: sp.m.eval(t),
                    dm: sp.dm.eval(t),
                    d2m: sp.d2m.eval(t),
                    w2: sp.w2.eval(t),
                    f: sp.f.as_ref().map_or(0.0, |f| f.eval(t)),
                }
            }
            Family::UnitMassReduced { parent, unit_mass } => ModelSample {
                t,
                m: *unit_mass,
                dm: 0.0,
                d2m: 0.0,
                w2: parent.sample_unchecked(t).reduced_frequency_squared(),
                f: 0.0,
            },
        };
        s.f += self.force.eval(t);
        s
    }

    pub fn reduced_frequency_squared(&self, t: f64) -> Result<f64> {
        Ok(self.evaluate(t)?.reduced_frequency_squared())
    }

    /// A characteristic angular frequency used to size time steps.
    pub fn frequency_scale(&self) -> f64 {
        let n = 64;
        let mut scale: f64 = 1e-3;
        for k in 0..=n {
            let t = self.t_min + (self.t_max - self.t_min) * k as f64 / n as f64;
            let s = self.sample_unchecked(t);
            scale = scale
                .max(s.w2.abs().sqrt())
                .max(s.reduced_frequency_squared().abs().sqrt())
                .max((s.dm / s.m).abs());
        }
        if let Force::Cosine { omega, .. } = self.force {
            scale = scale.max(omega.abs());
        }
        scale
    }

    /// Dense scan of the domain for the flags callers should know about.
    pub fn diagnostics(&self, n_samples: usize) -> ModelDiagnostics {
        let n = n_samples.max(2);
        let mut min_mass = f64::INFINITY;
        let mut min_w0_sq = f64::INFINITY;
        for k in 0..n {
            let t = self.t_min + (self.t_max - self.t_min) * k as f64 / (n - 1) as f64;
            let s = self.sample_unchecked(t);
            min_mass = min_mass.min(s.m);
            min_w0_sq = min_w0_sq.min(s.reduced_frequency_squared());
        }
        let spline_dm_mismatch = match &self.family {
            Family::GeneralParametric(table) => Some(table.dm_mismatch),
            _ => None,
        };
        ModelDiagnostics {
            min_mass,
            min_reduced_frequency_squared: min_w0_sq,
            negative_reduced_frequency: min_w0_sq < 0.0,
            spline_dm_mismatch,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelDiagnostics {
    pub min_mass: f64,
    pub min_reduced_frequency_squared: f64,
    pub negative_reduced_frequency: bool,
    pub spline_dm_mismatch: Option<f64>,
}

// ---------------------------------------------------------------------------
// JSON document form

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    family: String,
    params: Value,
    t_min: f64,
    t_max: f64,
    #[serde(default, skip_serializing_if = "Force::is_none")]
    force: Force,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShoParams {
    w_s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CkParams {
    #[serde(default = "one")]
    m: f64,
    gamma: f64,
    w1: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoParams {
    #[serde(default = "one")]
    m0: f64,
    gamma: f64,
    mu: f64,
    nu: f64,
    w_lo: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableParams {
    t: Vec<f64>,
    m: Vec<f64>,
    dm: Vec<f64>,
    d2m: Vec<f64>,
    w2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReducedParams {
    unit_mass: f64,
    parent: OscillatorModel,
}

fn params<T: serde::de::DeserializeOwned>(family: &str, v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::config(format!("model.params ({family})"), e.to_string()))
}

impl TryFrom<ModelDoc> for OscillatorModel {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        let family = match doc.family.as_str() {
            "UnitMassSHO" => {
                let p: ShoParams = params(&doc.family, doc.params)?;
                Family::UnitMassSho { w_s: p.w_s }
            }
            "CaldirolaKanai" => {
                let p: CkParams = params(&doc.family, doc.params)?;
                Family::CaldirolaKanai {
                    m: p.m,
                    gamma: p.gamma,
                    w1: p.w1,
                }
            }
            "LoDampedPulsating" => {
                let p: LoParams = params(&doc.family, doc.params)?;
                Family::LoDampedPulsating {
                    m0: p.m0,
                    gamma: p.gamma,
                    mu: p.mu,
                    nu: p.nu,
                    w_lo: p.w_lo,
                }
            }
            "GeneralParametric" => {
                let p: TableParams = params(&doc.family, doc.params)?;
                Family::GeneralParametric(ParametricTable::new(p.t, p.m, p.dm, p.d2m, p.w2, p.f)?)
            }
            "UnitMassReduced" => {
                let p: ReducedParams = params(&doc.family, doc.params)?;
                Family::UnitMassReduced {
                    parent: Box::new(p.parent),
                    unit_mass: p.unit_mass,
                }
            }
            other => {
                return Err(Error::config("model.family", format!("unknown family {other:?}")));
            }
        };
        Ok(OscillatorModel::new(family, doc.t_min, doc.t_max)?.with_force(doc.force))
    }
}

impl From<OscillatorModel> for ModelDoc {
    fn from(model: OscillatorModel) -> Self {
        let family = model.family.name().to_string();
        let params = match model.family {
            Family::UnitMassSho { w_s } => serde_json::to_value(ShoParams { w_s }),
            Family::CaldirolaKanai { m, gamma, w1 } => {
                serde_json::to_value(CkParams { m, gamma, w1 })
            }
            Family::LoDampedPulsating {
                m0,
                gamma,
                mu,
                nu,
                w_lo,
            } => serde_json::to_value(LoParams {
                m0,
                gamma,
                mu,
                nu,
                w_lo,
            }),
            Family::GeneralParametric(table) => serde_json::to_value(TableParams {
                t: table.t,
                m: table.m,
                dm: table.dm,
                d2m: table.d2m,
                w2: table.w2,
                f: table.f,
            }),
            Family::UnitMassReduced { parent, unit_mass } => serde_json::to_value(ReducedParams {
                unit_mass,
                parent: *parent,
            }),
        }
        .expect("model parameters serialize");
        ModelDoc {
            family,
            params,
            t_min: model.t_min,
            t_max: model.t_max,
            force: model.force,
        }
    }
}

//! Scenario files: one JSON document fixes the model, the classical inputs,
//! the states, times, grid and the checks to run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classical::{BasisInitial, ClassicalBasis, DrivenSolution};
use crate::error::{Error, Result};
use crate::models::{Family, Force, OscillatorModel, Units};
use crate::ode::Tolerance;
use crate::states::{StateSpec, WavefunctionField};
use crate::tolerances::{self, Thresholds};
use crate::transforms::{GridSpec, DEFAULT_GRID_POINTS};
use crate::verify::covering_grid;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisDoc {
    /// Closed-form basis of the model family: `A cos`, `B sin` (SHO) or the
    /// damped analogue (Caldirola–Kanai). `w` replaces the family's
    /// frequency (`w_s` or `w1`); only useful for deliberately mismatched
    /// negative controls.
    Analytic {
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<f64>,
    },
    /// Integrated from initial data at `t_ref` (default: the model's `t_min`).
    Numeric {
        #[serde(default)]
        t_ref: Option<f64>,
        u0: f64,
        du0: f64,
        v0: f64,
        dv0: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivingDoc {
    #[serde(default)]
    pub force: Option<Force>,
    pub xp0: f64,
    #[serde(default)]
    pub dxp0: f64,
    #[serde(default)]
    pub t0: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    #[serde(default)]
    pub x_min: Option<f64>,
    #[serde(default)]
    pub x_max: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckDoc {
    Name(String),
    WithThreshold { name: String, threshold: f64 },
}

impl CheckDoc {
    fn name(&self) -> &str {
        match self {
            CheckDoc::Name(n) | CheckDoc::WithThreshold { name: n, .. } => n,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// The file format, field for field.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default)]
    pub name: Option<String>,
    pub model: OscillatorModel,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub unit_mass: f64,
    pub basis: BasisDoc,
    #[serde(default)]
    pub driving: Option<DrivingDoc>,
    pub states: Vec<usize>,
    pub times: Vec<f64>,
    #[serde(default)]
    pub grid: GridDoc,
    #[serde(default)]
    pub checks: Option<Vec<CheckDoc>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerance: Option<Tolerance>,
    /// Time step of the residual's time derivative.
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridPolicy {
    /// Fit each state's support with this many points.
    Auto { points: usize },
    Fixed(GridSpec),
}

/// A validated, solved scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub doc: ScenarioDoc,
    pub model: OscillatorModel,
    pub units: Units,
    pub basis: ClassicalBasis,
    pub driven: Option<DrivenSolution>,
    pub states: Vec<usize>,
    pub times: Vec<f64>,
    pub grid: GridPolicy,
    pub checks: Vec<String>,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub tol: Tolerance,
    pub dt: Option<f64>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        Self::from_json(&text, name)
    }

    /// Parses and validates; `fallback_name` is used when the document has none.
    pub fn from_json(text: &str, fallback_name: Option<String>) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        Self::from_doc(doc, fallback_name)
    }

    pub fn from_doc(doc: ScenarioDoc, fallback_name: Option<String>) -> Result<Self> {
        let name = doc
            .name
            .clone()
            .or(fallback_name)
            .unwrap_or_else(|| "scenario".to_string());
        let units = Units {
            hbar: doc.hbar,
            unit_mass: doc.unit_mass,
        };
        units.validate().map_err(|e| Error::config("hbar", e.to_string()))?;
        let tol = doc.tolerance.unwrap_or_default();
        if !(tol.rtol > 0.0 && tol.atol > 0.0) {
            return Err(Error::config("tolerance", "rtol and atol must be positive"));
        }
        if doc.states.is_empty() {
            return Err(Error::config("states", "at least one quantum number is required"));
        }
        if doc.times.is_empty() {
            return Err(Error::config("times", "at least one time is required"));
        }
        if let Some(dt) = doc.dt {
            if !(dt > 0.0) {
                return Err(Error::config("dt", "must be positive"));
            }
        }

        let mut model = doc.model.clone();
        if let Some(driving) = &doc.driving {
            if let Some(force) = &driving.force {
                if model.is_driven() {
                    return Err(Error::config("driving.force", "force given both in model and driving"));
                }
                model = model.with_force(force.clone());
            }
        }
        for (i, &t) in doc.times.iter().enumerate() {
            if !model.contains(t) {
                return Err(Error::config(
                    format!("times[{i}]"),
                    format!("t={t} outside [{}, {}]", model.t_min(), model.t_max()),
                ));
            }
        }

        let basis = match &doc.basis {
            BasisDoc::Analytic { a, b, w } => match model.family() {
                Family::UnitMassSho { w_s } => ClassicalBasis::analytic_sho(w.unwrap_or(*w_s), *a, *b),
                Family::CaldirolaKanai { m, gamma, w1 } => {
                    ClassicalBasis::analytic_ck(*m, *gamma, w.unwrap_or(*w1), *a, *b)
                }
                other => {
                    return Err(Error::config(
                        "basis.kind",
                        format!("no closed-form basis for {}; use \"numeric\"", other.name()),
                    ))
                }
            },
            BasisDoc::Numeric { t_ref, u0, du0, v0, dv0 } => ClassicalBasis::solve_homogeneous_at(
                &model,
                t_ref.unwrap_or(model.t_min()),
                BasisInitial {
                    u0: *u0,
                    du0: *du0,
                    v0: *v0,
                    dv0: *dv0,
                },
                tol,
            ),
        }
        .map_err(|e| Error::config("basis", e.to_string()))?;

        let driven = match &doc.driving {
            Some(d) => Some(
                DrivenSolution::solve_particular(&model, d.xp0, d.dxp0, d.t0, tol)
                    .map_err(|e| Error::config("driving", e.to_string()))?,
            ),
            None if model.is_driven() => {
                return Err(Error::config("driving", "driven model needs particular-solution data"));
            }
            None => None,
        };

        let grid = match (doc.grid.x_min, doc.grid.x_max) {
            (Some(lo), Some(hi)) => GridPolicy::Fixed(
                GridSpec::covering(lo, hi, doc.grid.points.unwrap_or(DEFAULT_GRID_POINTS))
                    .map_err(|e| Error::config("grid", e.to_string()))?,
            ),
            (None, None) => GridPolicy::Auto {
                points: doc.grid.points.unwrap_or(DEFAULT_GRID_POINTS),
            },
            _ => return Err(Error::config("grid", "give both x_min and x_max, or neither")),
        };
        if let GridPolicy::Auto { points } = grid {
            GridSpec::covering(-1.0, 1.0, points).map_err(|e| Error::config("grid.points", e.to_string()))?;
        }

        let mut thresholds = Thresholds::default();
        let checks = match &doc.checks {
            Some(list) => {
                let mut names = Vec::new();
                for (i, c) in list.iter().enumerate() {
                    let name = c.name();
                    if !tolerances::is_known(name) {
                        return Err(Error::config(format!("checks[{i}]"), format!("unknown check '{name}'")));
                    }
                    if let CheckDoc::WithThreshold { threshold, .. } = c {
                        thresholds
                            .set(name, *threshold)
                            .map_err(|e| Error::config(format!("checks[{i}].threshold"), e.to_string()))?;
                    }
                    names.push(name.to_string());
                }
                names
            }
            None => Vec::new(),
        };

        let mut scenario = Self {
            name,
            doc: doc.clone(),
            model,
            units,
            basis,
            driven,
            states: doc.states.clone(),
            times: doc.times.clone(),
            grid,
            checks,
            thresholds,
            seed: doc.seed,
            tol,
            dt: doc.dt,
        };
        if doc.checks.is_none() {
            scenario.checks = scenario.applicable_checks();
        }
        for (i, c) in scenario.checks.iter().enumerate() {
            if !scenario.applicable_checks().contains(c) {
                return Err(Error::config(
                    format!("checks[{i}]"),
                    format!("check '{c}' does not apply to this scenario"),
                ));
            }
        }
        scenario.validate_grid()?;
        Ok(scenario)
    }

    pub fn is_driven(&self) -> bool {
        self.driven.is_some()
    }

    pub fn spec(&self, n: usize) -> Result<StateSpec> {
        StateSpec::new(n, self.units, self.basis.clone(), self.driven.clone(), self.model.clone())
    }

    pub fn field(&self, n: usize) -> Result<WavefunctionField> {
        Ok(WavefunctionField::General(self.spec(n)?))
    }

    /// `C` of the closed-form family for this basis: the ratio of the
    /// cosine and sine amplitudes of the unit-mass basis at `t = 0`, when the
    /// basis has that standard shape there.
    pub fn pulsation_constant(&self) -> Option<f64> {
        if let BasisDoc::Analytic { a, b, w } = self.doc.basis {
            return w.is_none().then_some(a / b);
        }
        let w = self.family_frequency()?;
        let s = self.basis.to_unit_mass(&self.model, self.units.unit_mass).sample(0.0).ok()?;
        let scale = s.u.abs().max(s.dv.abs() / w);
        if s.du.abs() > 1e-12 * scale * w || s.v.abs() > 1e-12 * scale {
            return None;
        }
        Some(s.u * w / s.dv)
    }

    /// Constant reduced frequency of the closed-form families.
    pub fn family_frequency(&self) -> Option<f64> {
        match self.model.family() {
            Family::UnitMassSho { w_s } => Some(*w_s),
            Family::CaldirolaKanai { gamma, w1, .. } => Some((w1 * w1 - 0.25 * gamma * gamma).sqrt()),
            Family::LoDampedPulsating { w_lo, .. } => Some(*w_lo),
            _ => None,
        }
    }

    /// Closed-form field for quantum number `n`, if the family has one and
    /// the basis has the standard shape.
    pub fn closed_form(&self, n: usize) -> Option<WavefunctionField> {
        if self.is_driven() {
            return None;
        }
        let c = self.pulsation_constant()?;
        let hbar = self.units.hbar;
        match *self.model.family() {
            Family::UnitMassSho { w_s } => {
                let units = Units {
                    hbar,
                    unit_mass: self.model.evaluate(self.model.t_min()).ok()?.m,
                };
                WavefunctionField::sho(w_s, c, n, units).ok()
            }
            Family::CaldirolaKanai { m, gamma, w1 } => WavefunctionField::ck(m, gamma, w1, c, n, hbar).ok(),
            Family::LoDampedPulsating { m0, gamma, mu, nu, w_lo } => {
                WavefunctionField::lo(m0, gamma, mu, nu, w_lo, c, n, hbar).ok()
            }
            _ => None,
        }
    }

    /// Checks that make sense for this scenario, in canonical order.
    pub fn applicable_checks(&self) -> Vec<String> {
        let driven = self.is_driven();
        let mut out = vec![if driven { "driven_residual" } else { "residual" }, "residual_convergence"];
        out.extend(["transform_chain", "transform_chain_analytic", "inverse_composition"]);
        if self.family_frequency().is_some() {
            out.push("frequency_map");
        }
        out.push("omega_constancy");
        if self.closed_form(0).is_some() {
            out.push("closed_form");
        }
        if driven {
            out.extend(["uncertainty_preservation", "moment_shift", "delta_equivalence", "shift_rule"]);
        }
        out.extend(["heisenberg", "orthonormality"]);
        if !driven && matches!(self.model.family(), Family::UnitMassSho { .. }) {
            match self.pulsation_constant() {
                Some(1.0) => out.push("stationarity"),
                Some(_) => out.push("pulsation"),
                None => {}
            }
        }
        out.into_iter().map(String::from).collect()
    }

    /// Grid for state `n` at `t`.
    pub fn grid_for(&self, fields: &[&WavefunctionField], t: f64) -> Result<GridSpec> {
        match self.grid {
            GridPolicy::Fixed(g) => Ok(g),
            GridPolicy::Auto { points } => covering_grid(fields, t, points),
        }
    }

    pub fn points(&self) -> usize {
        match self.grid {
            GridPolicy::Fixed(g) => g.points,
            GridPolicy::Auto { points } => points,
        }
    }

    /// A fixed grid must hold every requested state at every time.
    fn validate_grid(&self) -> Result<()> {
        let GridPolicy::Fixed(g) = self.grid else {
            return Ok(());
        };
        let n_max = *self.states.iter().max().expect("states checked non-empty");
        let field = self.field(n_max).map_err(|e| Error::config("states", e.to_string()))?;
        for &t in &self.times {
            let (lo, hi) = field.slice(t).map_err(|e| Error::config("times", e.to_string()))?.support();
            if lo < g.x_min || hi > g.x_max() {
                return Err(Error::config(
                    "grid",
                    format!(
                        "grid [{}, {}] too small for n={n_max} at t={t}: need [{lo:.6}, {hi:.6}]",
                        g.x_min,
                        g.x_max()
                    ),
                ));
            }
        }
        Ok(())
    }
}

//! Unitary operators on sampled wavefunctions.
//!
//! A [`GridFunction`] is a set of complex samples on a uniform grid at one
//! time slice. It may also carry the analytic rule it was sampled from; when
//! it does, dilations and translations re-evaluate that rule instead of
//! interpolating. Otherwise real and imaginary parts are interpolated with
//! natural cubic splines, and the function is taken to vanish off-grid.
//!
//! Composite operators are applied right to left, exactly as written:
//!
//! ```text
//! U₀  = QuadraticPhase(m_u Ṁ/4M) ∘ Dilation(−½ ln(M/m_u))
//! U₀† = Dilation(+½ ln(M/m_u)) ∘ QuadraticPhase(−m_u Ṁ/4M)
//! U_F = Phase(δ) ∘ LinearPhase(Mẋ_p) ∘ Translation(x_p)
//! ```

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::classical::DrivenSolution;
use crate::error::{Error, Result};
use crate::models::{OscillatorModel, Units};
use crate::spline::CubicSpline;

/// Relative magnitude below which samples count as zero at the grid edges.
pub const BOUNDARY_NEGLIGIBLE: f64 = 1e-10;
pub const MIN_GRID_POINTS: usize = 16;
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Uniform grid `x_i = x_min + i·dx`, `i < points`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub dx: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, dx: f64, points: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite() && x_min.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid needs finite x_min and dx > 0 (dx={dx})")));
        }
        if points < MIN_GRID_POINTS {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {MIN_GRID_POINTS} points (got {points})"
            )));
        }
        Ok(Self { x_min, dx, points })
    }

    /// `points` samples spanning `[lo, hi]` inclusive.
    pub fn covering(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidParameter(format!("empty grid range [{lo}, {hi}]")));
        }
        Self::new(lo, (hi - lo) / (points.max(2) - 1) as f64, points)
    }

    /// Smallest grid covering the union of `intervals`.
    pub fn covering_all(intervals: &[(f64, f64)], points: usize) -> Result<Self> {
        let lo = intervals.iter().map(|i| i.0).fold(f64::INFINITY, f64::min);
        let hi = intervals.iter().map(|i| i.1).fold(f64::NEG_INFINITY, f64::max);
        Self::covering(lo, hi, points)
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.points - 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|i| self.x(i))
    }

    /// Same span, `factor`× coarser spacing.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        Self::new(self.x_min, self.dx * factor as f64, (self.points - 1) / factor + 1)
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.points == other.points
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.dx
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
    }
}

pub type AnalyticRule = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Complex samples of `ψ(·, t)`.
#[derive(Clone)]
pub struct GridFunction {
    grid: GridSpec,
    t: f64,
    hbar: f64,
    values: Vec<C64>,
    rule: Option<AnalyticRule>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("grid", &self.grid)
            .field("t", &self.t)
            .field("hbar", &self.hbar)
            .field("analytic", &self.rule.is_some())
            .finish_non_exhaustive()
    }
}

impl GridFunction {
    pub fn from_samples(grid: GridSpec, t: f64, hbar: f64, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {}-point grid",
                values.len(),
                grid.points
            )));
        }
        Ok(Self {
            grid,
            t,
            hbar,
            values,
            rule: None,
        })
    }

    pub fn from_fn(grid: GridSpec, t: f64, hbar: f64, rule: AnalyticRule) -> Self {
        let values = grid.xs().map(|x| rule(x)).collect();
        Self {
            grid,
            t,
            hbar,
            values,
            rule: Some(rule),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.xs()
    }

    pub fn is_analytic(&self) -> bool {
        self.rule.is_some()
    }

    /// Drops the analytic rule so later transforms interpolate.
    pub fn samples_only(&self) -> Self {
        Self {
            rule: None,
            ..self.clone()
        }
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Larger edge magnitude relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let n = self.values.len();
        self.values[0].norm().max(self.values[n - 1].norm()) / peak
    }

    pub fn check_boundary(&self) -> Result<()> {
        if self.boundary_ratio() >= BOUNDARY_NEGLIGIBLE {
            let (lo, hi) = self.effective_support().unwrap_or((self.grid.x_min, self.grid.x_max()));
            return Err(Error::GridTooSmall {
                required_min: lo,
                required_max: hi,
                x_min: self.grid.x_min,
                x_max: self.grid.x_max(),
            });
        }
        Ok(())
    }

    /// Interval where `|ψ|` exceeds the negligibility level, widened by one
    /// grid step on each side.
    pub fn effective_support(&self) -> Option<(f64, f64)> {
        let cut = BOUNDARY_NEGLIGIBLE * self.max_abs();
        let first = self.values.iter().position(|v| v.norm() > cut)?;
        let last = self.values.iter().rposition(|v| v.norm() > cut)?;
        Some((self.grid.x(first) - self.grid.dx, self.grid.x(last) + self.grid.dx))
    }

    fn interpolator(&self) -> Result<impl Fn(f64) -> C64 + '_> {
        let xs: Vec<f64> = self.grid.xs().collect();
        let re = CubicSpline::natural(xs.clone(), self.values.iter().map(|v| v.re).collect())?;
        let im = CubicSpline::natural(xs, self.values.iter().map(|v| v.im).collect())?;
        let (lo, hi) = (self.grid.x_min, self.grid.x_max());
        Ok(move |x: f64| {
            if x < lo || x > hi {
                C64::new(0.0, 0.0)
            } else {
                C64::new(re.eval(x), im.eval(x))
            }
        })
    }

    /// Value at arbitrary `x`: analytic rule when attached, else spline.
    pub fn eval_at(&self, x: f64) -> Result<C64> {
        match &self.rule {
            Some(rule) => Ok(rule(x)),
            None => Ok(self.interpolator()?(x)),
        }
    }

    /// New function `g(x) = factor(x) · f(map(x))`. The source support
    /// pulled back through `map` must fit the grid.
    fn remap(
        &self,
        map: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
        inverse: impl Fn(f64) -> f64,
        factor: impl Fn(f64) -> C64 + Send + Sync + Clone + 'static,
    ) -> Result<Self> {
        if let Some((lo, hi)) = self.effective_support() {
            let (a, b) = (inverse(lo), inverse(hi));
            let (need_lo, need_hi) = (a.min(b), a.max(b));
            if need_lo < self.grid.x_min || need_hi > self.grid.x_max() {
                return Err(Error::GridTooSmall {
                    required_min: need_lo,
                    required_max: need_hi,
                    x_min: self.grid.x_min,
                    x_max: self.grid.x_max(),
                });
            }
        }
        match &self.rule {
            Some(rule) => {
                let rule = rule.clone();
                let composed: AnalyticRule = Arc::new(move |x| factor(x) * rule(map(x)));
                Ok(Self::from_fn(self.grid, self.t, self.hbar, composed))
            }
            None => {
                let f = self.interpolator()?;
                let values = self.grid.xs().map(|x| factor(x) * f(map(x))).collect();
                Self::from_samples(self.grid, self.t, self.hbar, values)
            }
        }
    }

    /// Pointwise multiplication by a unimodular factor; exact on samples.
    fn multiply(&self, factor: impl Fn(f64) -> C64 + Send + Sync + Clone + 'static) -> Self {
        let values = self
            .grid
            .xs()
            .zip(&self.values)
            .map(|(x, v)| factor(x) * v)
            .collect();
        let rule = self.rule.clone().map(|rule| -> AnalyticRule {
            let factor = factor.clone();
            Arc::new(move |x| factor(x) * rule(x))
        });
        Self {
            grid: self.grid,
            t: self.t,
            hbar: self.hbar,
            values,
            rule,
        }
    }
}

/// One of the four unitary building blocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveTransform {
    /// `f(x) → e^{a/2} f(eᵃ x)`
    Dilation { a: f64 },
    /// `f(x) → e^{iαx²/ħ} f(x)`
    QuadraticPhase { alpha: f64 },
    /// `f(x) → e^{ikx/ħ} f(x)`
    LinearPhase { k: f64 },
    /// `f(x) → f(x − d)`
    Translation { d: f64 },
}

impl PrimitiveTransform {
    pub fn apply(&self, g: &GridFunction) -> Result<GridFunction> {
        match *self {
            Self::Dilation { a } => apply_dilation(g, a),
            Self::QuadraticPhase { alpha } => Ok(apply_quadratic_phase(g, alpha)),
            Self::LinearPhase { k } => Ok(apply_linear_phase(g, k)),
            Self::Translation { d } => apply_translation(g, d),
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            Self::Dilation { a } => Self::Dilation { a: -a },
            Self::QuadraticPhase { alpha } => Self::QuadraticPhase { alpha: -alpha },
            Self::LinearPhase { k } => Self::LinearPhase { k: -k },
            Self::Translation { d } => Self::Translation { d: -d },
        }
    }
}

pub fn apply_dilation(g: &GridFunction, a: f64) -> Result<GridFunction> {
    if a == 0.0 {
        return Ok(g.clone());
    }
    let (scale, amp) = (a.exp(), (0.5 * a).exp());
    g.remap(move |x| scale * x, move |x| x / scale, move |_| C64::new(amp, 0.0))
}

pub fn apply_quadratic_phase(g: &GridFunction, alpha: f64) -> GridFunction {
    let c = alpha / g.hbar;
    g.multiply(move |x| C64::from_polar(1.0, c * x * x))
}

pub fn apply_linear_phase(g: &GridFunction, k: f64) -> GridFunction {
    let c = k / g.hbar;
    g.multiply(move |x| C64::from_polar(1.0, c * x))
}

/// Multiplies by the constant `e^{iφ/ħ}`.
pub fn apply_constant_phase(g: &GridFunction, phi: f64) -> GridFunction {
    let z = C64::from_polar(1.0, phi / g.hbar);
    g.multiply(move |_| z)
}

pub fn apply_translation(g: &GridFunction, d: f64) -> Result<GridFunction> {
    if d == 0.0 {
        return Ok(g.clone());
    }
    g.remap(move |x| x - d, move |x| x + d, |_| C64::new(1.0, 0.0))
}

/// `(α, a)` of the unit-mass reduction at `t`: phase `m_u Ṁ/(4M)` and
/// dilation `−½ ln(M/m_u)`.
pub fn u0_parameters(model: &OscillatorModel, t: f64, unit_mass: f64) -> Result<(f64, f64)> {
    let s = model.evaluate(t)?;
    Ok((unit_mass * s.dm / (4.0 * s.m), -0.5 * (s.m / unit_mass).ln()))
}

fn check_slice(g: &GridFunction, t: f64, units: Units) -> Result<()> {
    if (g.t - t).abs() > 1e-12 * t.abs().max(1.0) {
        return Err(Error::GridMismatch(format!("grid function at t={} used at t={t}", g.t)));
    }
    if (g.hbar - units.hbar).abs() > 1e-15 * units.hbar {
        return Err(Error::GridMismatch(format!("grid function has ħ={} but units give {}", g.hbar, units.hbar)));
    }
    Ok(())
}

/// Original-mass state → unit-mass state.
pub fn apply_u0(model: &OscillatorModel, t: f64, units: Units, g: &GridFunction) -> Result<GridFunction> {
    check_slice(g, t, units)?;
    let (alpha, a) = u0_parameters(model, t, units.unit_mass)?;
    let g = apply_dilation(g, a)?;
    Ok(apply_quadratic_phase(&g, alpha))
}

/// Unit-mass state → original-mass state.
pub fn apply_u0_dagger(model: &OscillatorModel, t: f64, units: Units, g: &GridFunction) -> Result<GridFunction> {
    check_slice(g, t, units)?;
    let (alpha, a) = u0_parameters(model, t, units.unit_mass)?;
    let g = apply_quadratic_phase(g, -alpha);
    apply_dilation(&g, -a)
}

/// Undriven state → driven state.
pub fn apply_uf(
    model: &OscillatorModel,
    driven: &DrivenSolution,
    t: f64,
    g: &GridFunction,
) -> Result<GridFunction> {
    let m = model.evaluate(t)?.m;
    let d = driven.sample(t)?;
    let g = apply_translation(g, d.xp)?;
    let g = apply_linear_phase(&g, m * d.dxp);
    Ok(apply_constant_phase(&g, d.delta))
}

/// Driven state → undriven state.
pub fn apply_uf_dagger(
    model: &OscillatorModel,
    driven: &DrivenSolution,
    t: f64,
    g: &GridFunction,
) -> Result<GridFunction> {
    let m = model.evaluate(t)?.m;
    let d = driven.sample(t)?;
    let g = apply_constant_phase(g, -d.delta);
    let g = apply_linear_phase(&g, -m * d.dxp);
    apply_translation(&g, -d.xp)
}

/// Coefficients of the transformed Hamiltonian
/// `H = p²/(2·kinetic) + cross·(xp+px) + potential·x²/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HamiltonianCoefficients {
    pub kinetic: f64,
    pub cross: f64,
    pub potential: f64,
}

/// Conjugates `H = p²/2M + Mw²x²/2` by `e^{iαx²/ħ} e^{iβ(xp+px)/4ħ}`.
pub fn hnew_coefficients(
    model: &OscillatorModel,
    t: f64,
    alpha: f64,
    beta: f64,
    dalpha: f64,
    dbeta: f64,
) -> Result<HamiltonianCoefficients> {
    let s = model.evaluate(t)?;
    let me = s.m * beta.exp();
    Ok(HamiltonianCoefficients {
        kinetic: me,
        cross: -0.25 * dbeta - alpha / me,
        potential: s.m * s.w2 * beta.exp() + 2.0 * alpha * dbeta - 2.0 * dalpha + 4.0 * alpha * alpha / me,
    })
}

/// `(α, α̇, β, β̇)` of the unit-mass gauge: `β = −ln(M/m_u)` and the
/// cross-term-cancelling `α = −(M/4) β̇ e^β`.
pub fn unit_mass_gauge(model: &OscillatorModel, t: f64, unit_mass: f64) -> Result<(f64, f64, f64, f64)> {
    let s = model.evaluate(t)?;
    let r = s.dm / s.m;
    let beta = -(s.m / unit_mass).ln();
    let dbeta = -r;
    let alpha = 0.25 * unit_mass * r;
    let dalpha = 0.25 * unit_mass * (s.d2m / s.m - r * r);
    Ok((alpha, dalpha, beta, dbeta))
}

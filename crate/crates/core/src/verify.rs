//! Numerical certification: quadrature, moments, Schrödinger residuals and
//! the invariant checks. Every check returns the measured number; the
//! caller judges it against a threshold from [`crate::tolerances`].

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::classical::{ClassicalBasis, DrivenSolution};
use crate::error::{Error, Result};
use crate::models::{OscillatorModel, Units};
use crate::states::{StateSpec, WavefunctionField};
use crate::tolerances::{RESIDUAL_CONVERGENCE_RATIO, RESIDUAL_FLOOR};
use crate::transforms::{apply_u0_dagger, apply_uf, GridFunction, GridSpec};

/// Composite Simpson rule; with an odd number of intervals the last three
/// use Simpson's 3/8 rule.
pub fn simpson(values: &[f64], dx: f64) -> Result<f64> {
    simpson_generic(values, dx, 0.0)
}

fn simpson_generic<T>(values: &[T], dx: f64, zero: T) -> Result<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = values.len();
    if n < 4 {
        return Err(Error::GridMismatch(format!("quadrature needs at least 4 samples, got {n}")));
    }
    let intervals = n - 1;
    let even_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
    let mut acc = zero;
    let mut i = 0;
    while i < even_end {
        acc = acc + (values[i] + values[i + 1] * 4.0 + values[i + 2]) * (dx / 3.0);
        i += 2;
    }
    if intervals % 2 == 1 {
        let j = n - 4;
        acc = acc + (values[j] + values[j + 1] * 3.0 + values[j + 2] * 3.0 + values[j + 3]) * (3.0 * dx / 8.0);
    }
    Ok(acc)
}

pub fn trapezoid(values: &[f64], dx: f64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::GridMismatch("trapezoid needs at least 2 samples".into()));
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    Ok(dx * (inner + 0.5 * (values[0] + values[values.len() - 1])))
}

fn check_same_grid(a: &GridFunction, b: &GridFunction) -> Result<()> {
    if !a.grid().same_as(&b.grid()) {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid(), b.grid())));
    }
    Ok(())
}

/// `‖g‖ = (∫|g|²)^{1/2}`.
pub fn norm(g: &GridFunction) -> Result<f64> {
    let dens: Vec<f64> = g.values().iter().map(|v| v.norm_sqr()).collect();
    Ok(simpson(&dens, g.grid().dx)?.max(0.0).sqrt())
}

/// `⟨a|b⟩ = ∫ a* b`.
pub fn inner_product(a: &GridFunction, b: &GridFunction) -> Result<C64> {
    check_same_grid(a, b)?;
    let prod: Vec<C64> = a.values().iter().zip(b.values()).map(|(x, y)| x.conj() * y).collect();
    simpson_generic(&prod, a.grid().dx, C64::new(0.0, 0.0))
}

/// `‖a − b‖ / ‖b‖`.
pub fn relative_l2(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    check_same_grid(a, b)?;
    let diff: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm_sqr()).collect();
    let num = simpson(&diff, a.grid().dx)?.max(0.0).sqrt();
    Ok(num / norm(b)?)
}

/// Unimodular `z` minimising `‖a − z b‖`, and the residual `‖a − z b‖/‖a‖`
/// (discrete sums).
pub fn align_global_phase(a: &[C64], b: &[C64]) -> (C64, f64) {
    let overlap: C64 = b.iter().zip(a).map(|(y, x)| y.conj() * x).sum();
    let z = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - z * y).norm_sqr()).sum();
    let den: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    (z, if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// Fourth-order central first derivative; the two samples at each edge are
/// left at zero (edges are negligible by the grid policy).
pub fn first_derivative(f: &[C64], dx: f64) -> Vec<C64> {
    let n = f.len();
    let mut d = vec![C64::new(0.0, 0.0); n];
    for i in 2..n.saturating_sub(2) {
        d[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * dx);
    }
    d
}

/// Fourth-order central second derivative, edges as in [`first_derivative`].
pub fn second_derivative(f: &[C64], dx: f64) -> Vec<C64> {
    let n = f.len();
    let mut d = vec![C64::new(0.0, 0.0); n];
    for i in 2..n.saturating_sub(2) {
        d[i] = (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) / (12.0 * dx * dx);
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub t: f64,
    pub norm: f64,
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p: f64,
    /// From `−ħ²∫ψ*ψ″`.
    pub var_p: f64,
    /// From `ħ²∫|ψ′|²`; cross-check of `var_p`.
    pub var_p_gradient: f64,
}

/// Position and momentum moments, normalised by `‖g‖²`.
///
/// The dominant plane wave `e^{ik₀x/ħ}` is divided out before
/// differentiating; `⟨p⟩ = k₀ + ⟨p⟩_φ` and the variance is unaffected. This
/// keeps the finite-difference error independent of the mean momentum.
pub fn moments(g: &GridFunction) -> Result<MomentReport> {
    let grid = g.grid();
    let (dx, hbar) = (grid.dx, g.hbar());
    let xs: Vec<f64> = grid.xs().collect();
    let vals = g.values();

    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..vals.len() - 1 {
        let w = vals[i].norm() * vals[i + 1].norm();
        num += w * (vals[i + 1] * vals[i].conj()).arg();
        den += w;
    }
    let k0 = if den > 0.0 { hbar * num / (den * dx) } else { 0.0 };
    let phi: Vec<C64> = xs
        .iter()
        .zip(vals)
        .map(|(x, v)| v * C64::from_polar(1.0, -k0 * x / hbar))
        .collect();

    let dens: Vec<f64> = phi.iter().map(|v| v.norm_sqr()).collect();
    let n2 = simpson(&dens, dx)?;
    if !(n2 > 0.0) {
        return Err(Error::InvalidParameter("moments of a zero function".into()));
    }
    let mean_x = simpson(&dens.iter().zip(&xs).map(|(d, x)| d * x).collect::<Vec<_>>(), dx)? / n2;
    let var_x = simpson(
        &dens.iter().zip(&xs).map(|(d, x)| d * (x - mean_x) * (x - mean_x)).collect::<Vec<_>>(),
        dx,
    )? / n2;

    let d1 = first_derivative(&phi, dx);
    let d2 = second_derivative(&phi, dx);
    let mean_p_phi = simpson(&phi.iter().zip(&d1).map(|(f, d)| (f.conj() * d).im).collect::<Vec<_>>(), dx)? * hbar / n2;
    let p2_phi = -simpson(&phi.iter().zip(&d2).map(|(f, d)| (f.conj() * d).re).collect::<Vec<_>>(), dx)? * hbar * hbar / n2;
    let p2_grad = simpson(&d1.iter().map(|d| d.norm_sqr()).collect::<Vec<_>>(), dx)? * hbar * hbar / n2;

    Ok(MomentReport {
        t: g.t(),
        norm: n2.sqrt(),
        mean_x,
        var_x,
        mean_p: k0 + mean_p_phi,
        var_p: p2_phi - mean_p_phi * mean_p_phi,
        var_p_gradient: p2_grad - mean_p_phi * mean_p_phi,
    })
}

/// Default time step for residuals: a thousandth of the shortest period.
pub fn default_dt(model: &OscillatorModel) -> f64 {
    1e-3 * 2.0 * std::f64::consts::PI / model.frequency_scale().max(1e-3)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub t: f64,
    pub rel_l2_residual: f64,
    pub grid: GridSpec,
    pub dt: f64,
    /// Residuals at spacing `(4dx, 4dt)`, `(2dx, 2dt)`, `(dx, dt)`.
    pub refinement: [f64; 3],
    /// Reduction factor for one halving, taken from the finest pair whose
    /// finer member is above the round-off floor.
    pub convergence_ratio: f64,
    pub convergence_order_estimate: f64,
    pub at_floor: bool,
}

impl ResidualReport {
    pub fn converges(&self) -> bool {
        self.convergence_ratio >= RESIDUAL_CONVERGENCE_RATIO || self.at_floor
    }
}

/// `‖(iħ∂_t − H)ψ‖ / ‖Hψ‖` over interior grid points at one resolution.
pub fn residual_at(
    field: &WavefunctionField,
    model: &OscillatorModel,
    grid: GridSpec,
    t: f64,
    dt: f64,
) -> Result<f64> {
    for k in [-2.0, 2.0] {
        model.check_domain(t + k * dt)?;
    }
    let hbar = field.hbar();
    let s = model.evaluate(t)?;
    let slices = [
        field.slice(t - 2.0 * dt)?,
        field.slice(t - dt)?,
        field.slice(t)?,
        field.slice(t + dt)?,
        field.slice(t + 2.0 * dt)?,
    ];
    let xs: Vec<f64> = grid.xs().collect();
    let psi: Vec<C64> = xs.iter().map(|&x| slices[2].eval(x)).collect();
    let d2 = second_derivative(&psi, grid.dx);
    let (mut o2, mut h2) = (0.0, 0.0);
    for i in 2..xs.len() - 2 {
        let x = xs[i];
        let dpsi = (8.0 * (slices[3].eval(x) - slices[1].eval(x)) - (slices[4].eval(x) - slices[0].eval(x))) / (12.0 * dt);
        let h = -hbar * hbar / (2.0 * s.m) * d2[i] + (0.5 * s.m * s.w2 * x * x - x * s.f) * psi[i];
        let o = C64::new(0.0, hbar) * dpsi - h;
        o2 += o.norm_sqr();
        h2 += h.norm_sqr();
    }
    if !(h2 > 0.0) {
        return Err(Error::InvalidParameter("Hψ vanishes on the grid".into()));
    }
    Ok((o2 / h2).sqrt())
}

/// Residual at the given resolution plus two coarsenings for the
/// convergence estimate. `dt = None` uses [`default_dt`].
pub fn schrodinger_residual(
    field: &WavefunctionField,
    model: &OscillatorModel,
    grid: GridSpec,
    t: f64,
    dt: Option<f64>,
) -> Result<ResidualReport> {
    let dt = dt.unwrap_or_else(|| default_dt(model));
    let r1 = residual_at(field, model, grid, t, dt)?;
    let r2 = residual_at(field, model, grid.coarsened(2)?, t, 2.0 * dt)?;
    let r4 = residual_at(field, model, grid.coarsened(4)?, t, 4.0 * dt)?;
    let ratio = if r1 >= RESIDUAL_FLOOR { r2 / r1 } else { r4 / r2 };
    Ok(ResidualReport {
        t,
        rel_l2_residual: r1,
        grid,
        dt,
        refinement: [r4, r2, r1],
        convergence_ratio: ratio,
        convergence_order_estimate: ratio.log2(),
        at_floor: r1 < RESIDUAL_FLOOR && r2 < RESIDUAL_FLOOR,
    })
}

/// Largest relative deviation of `M(v̇u − u̇v)` from the basis invariant
/// over `n_samples` uniform times in the common domain.
pub fn check_omega_constancy(basis: &ClassicalBasis, model: &OscillatorModel, n_samples: usize) -> Result<f64> {
    let lo = basis.t_min().max(model.t_min());
    let hi = basis.t_max().min(model.t_max());
    let n = n_samples.max(2);
    let reference = basis.omega();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let t = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let omega = basis.omega_at(model, t)?;
        worst = worst.max(((omega - reference) / reference).abs());
    }
    Ok(worst)
}

/// `ψₙ⁰` on the unit-mass oscillator of `model`.
pub fn unit_mass_field(model: &OscillatorModel, basis: &ClassicalBasis, n: usize, units: Units) -> Result<WavefunctionField> {
    let reduced = model.unit_mass_reduction(units.unit_mass)?;
    Ok(WavefunctionField::General(StateSpec::new(
        n,
        units,
        basis.to_unit_mass(model, units.unit_mass),
        None,
        reduced,
    )?))
}

/// Grid covering the supports of every listed field at `t`.
pub fn covering_grid(fields: &[&WavefunctionField], t: f64, points: usize) -> Result<GridSpec> {
    let supports = fields.iter().map(|f| Ok(f.slice(t)?.support())).collect::<Result<Vec<_>>>()?;
    GridSpec::covering_all(&supports, points)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainPath {
    /// The analytic rule travels with the samples.
    Analytic,
    /// Only samples; transforms interpolate.
    Interpolated,
}

/// Builds `ψₙ⁰`, applies `U₀†` then `U_F`, and returns the relative L²
/// distance to the directly evaluated target state.
#[allow(clippy::too_many_arguments)]
pub fn check_transform_equivalence(
    model: &OscillatorModel,
    basis: &ClassicalBasis,
    driven: Option<&DrivenSolution>,
    n: usize,
    t: f64,
    grid: Option<GridSpec>,
    units: Units,
    path: ChainPath,
) -> Result<f64> {
    let psi0 = unit_mass_field(model, basis, n, units)?;
    let target = WavefunctionField::General(StateSpec::new(n, units, basis.clone(), driven.cloned(), model.clone())?);
    let undriven = WavefunctionField::General(StateSpec::new(
        n,
        units,
        basis.clone(),
        None,
        model.clone().with_force(crate::models::Force::None),
    )?);
    let grid = match grid {
        Some(g) => g,
        None => covering_grid(&[&psi0, &undriven, &target], t, crate::transforms::DEFAULT_GRID_POINTS)?,
    };
    let mut g = psi0.sample(grid, t)?;
    if path == ChainPath::Interpolated {
        g = g.samples_only();
    }
    let mut g = apply_u0_dagger(model, t, units, &g)?;
    if let Some(d) = driven {
        g = apply_uf(model, d, t, &g)?;
    }
    relative_l2(&g, &target.sample(grid, t)?)
}

/// `max_t ∫ | |ψ(x,t)|² − |ψ(x,t₀)|² | dx` with `t₀ = times[0]`.
pub fn check_stationarity(field: &WavefunctionField, grid: GridSpec, times: &[f64]) -> Result<f64> {
    let (&t0, rest) = times
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("stationarity needs at least one time".into()))?;
    let density = |t: f64| -> Result<Vec<f64>> {
        let s = field.slice(t)?;
        Ok(grid.xs().map(|x| s.eval(x).norm_sqr()).collect())
    };
    let d0 = density(t0)?;
    let mut worst: f64 = 0.0;
    for &t in rest {
        let d = density(t)?;
        let diff: Vec<f64> = d.iter().zip(&d0).map(|(a, b)| (a - b).abs()).collect();
        worst = worst.max(simpson(&diff, grid.dx)?);
    }
    Ok(worst)
}

/// Driven state against its undriven counterpart at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UncertaintyComparison {
    pub t: f64,
    pub n: usize,
    pub driven: MomentReport,
    pub undriven: MomentReport,
    pub xp: f64,
    pub kinetic_momentum: f64,
}

impl UncertaintyComparison {
    pub fn var_x_difference(&self) -> f64 {
        (self.driven.var_x - self.undriven.var_x).abs()
    }

    pub fn var_p_difference(&self) -> f64 {
        (self.driven.var_p - self.undriven.var_p).abs()
    }

    pub fn mean_x_shift_error(&self) -> f64 {
        (self.driven.mean_x - self.undriven.mean_x - self.xp).abs()
    }

    pub fn mean_p_shift_error(&self) -> f64 {
        (self.driven.mean_p - self.undriven.mean_p - self.kinetic_momentum).abs()
    }

    /// `var_x·var_p / (ħ²/4)` of the driven state.
    pub fn heisenberg_ratio(&self, hbar: f64) -> f64 {
        self.driven.var_x * self.driven.var_p / (0.25 * hbar * hbar)
    }
}

/// Moments of the driven state `spec` and of `spec.undriven()` at `t`, on
/// one grid covering both.
pub fn compare_uncertainties(spec: &StateSpec, t: f64, points: usize) -> Result<UncertaintyComparison> {
    let d = spec
        .driven
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("uncertainty comparison needs a driven state".into()))?
        .sample(t)?;
    let driven = WavefunctionField::General(spec.clone());
    let undriven = WavefunctionField::General(spec.undriven());
    let grid = covering_grid(&[&driven, &undriven], t, points)?;
    let m = spec.model.evaluate(t)?.m;
    Ok(UncertaintyComparison {
        t,
        n: spec.n,
        driven: moments(&driven.sample(grid, t)?)?,
        undriven: moments(&undriven.sample(grid, t)?)?,
        xp: d.xp,
        kinetic_momentum: m * d.dxp,
    })
}

/// `max_{m,k ≤ n_max} |⟨ψ_m|ψ_k⟩ − δ_mk|` at `t`.
pub fn orthonormality_deviation(field: &WavefunctionField, n_max: usize, t: f64, points: usize) -> Result<f64> {
    let top = field.with_n(n_max);
    let (lo, hi) = top.slice(t)?.support();
    let grid = GridSpec::covering(lo, hi, points)?;
    let states = (0..=n_max)
        .map(|n| field.with_n(n).sample(grid, t))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for (m, a) in states.iter().enumerate() {
        for (k, b) in states.iter().enumerate().skip(m) {
            let target = if m == k { 1.0 } else { 0.0 };
            worst = worst.max((inner_product(a, b)? - target).norm());
        }
    }
    Ok(worst)
}

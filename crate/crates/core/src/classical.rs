//! Classical trajectories that parameterize the exact quantum states.
//!
//! A [`ClassicalBasis`] is a pair of independent real solutions `u, v` of
//! `d/dt(M ẋ) + M w² x = 0` together with the invariant
//! `Ω = M (v̇u − u̇v)`, the envelope `ρ = √(u² + v²)` and the continuous
//! argument `θ` of `u − iv`. A [`DrivenSolution`] is a particular solution
//! of the driven equation plus the phase integral `δ(t)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::OscillatorModel;
use crate::ode::{self, DenseTrajectory, Tolerance};
use crate::quad;

/// Wraps an angle into `(−π, π]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let r = a - 2.0 * PI * ((a + PI) / (2.0 * PI)).floor();
    if r <= -PI {
        r + 2.0 * PI
    } else if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BasisSample {
    pub t: f64,
    pub u: f64,
    pub du: f64,
    pub v: f64,
    pub dv: f64,
    pub rho: f64,
    pub drho: f64,
    /// Continuous argument of `u − iv`.
    pub theta: f64,
}

impl BasisSample {
    fn from_uv(t: f64, u: f64, du: f64, v: f64, dv: f64, theta: f64) -> Self {
        let rho = u.hypot(v);
        Self {
            t,
            u,
            du,
            v,
            dv,
            rho,
            drho: (u * du + v * dv) / rho,
            theta,
        }
    }

    /// `v̇u − u̇v`.
    pub fn wronskian(&self) -> f64 {
        self.dv * self.u - self.du * self.v
    }
}

/// Initial data `u(t_ref), u̇(t_ref), v(t_ref), v̇(t_ref)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisInitial {
    pub u0: f64,
    pub du0: f64,
    pub v0: f64,
    pub dv0: f64,
}

#[derive(Clone, Debug)]
struct NumericBasis {
    traj: DenseTrajectory<4>,
    theta_t: Vec<f64>,
    theta: Vec<f64>,
}

impl NumericBasis {
    fn theta_at(&self, t: f64, raw: f64) -> f64 {
        let i = self.theta_t.partition_point(|&s| s <= t).saturating_sub(1);
        // neighbouring samples are closer than π/4 in angle
        let i = if i + 1 < self.theta_t.len() && (self.theta_t[i + 1] - t) < (t - self.theta_t[i]) {
            i + 1
        } else {
            i
        };
        self.theta[i] + wrap_angle(raw - self.theta[i])
    }
}

#[derive(Clone, Debug)]
enum BasisKind {
    Sho { w: f64, a: f64, b: f64 },
    Ck { gamma: f64, w: f64, a: f64, b: f64 },
    Numeric(Arc<NumericBasis>),
    /// `u' = s u, v' = s v` with `s = (M/m_u)^{±1/2}`.
    MassScaled {
        inner: Box<ClassicalBasis>,
        model: Box<OscillatorModel>,
        unit_mass: f64,
        to_unit_mass: bool,
    },
}

#[derive(Clone, Debug)]
pub struct ClassicalBasis {
    kind: BasisKind,
    omega: f64,
    t_min: f64,
    t_max: f64,
}

/// Closed-form continuous argument of `A cos φ − iB sin φ` with `A, B > 0`.
fn elliptic_angle(a: f64, b: f64, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    -phi + ((a - b) * s * c).atan2(a * c * c + b * s * s)
}

impl ClassicalBasis {
    /// `u = A cos w t`, `v = B sin w t`: the unit-mass oscillator basis.
    pub fn analytic_sho(w_s: f64, a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("w_s", w_s), ("A", a), ("B", b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            kind: BasisKind::Sho { w: w_s, a, b },
            omega: a * b * w_s,
            t_min: f64::NEG_INFINITY,
            t_max: f64::INFINITY,
        })
    }

    /// `u = A e^{−γt/2} cos w_ck t`, `v = B e^{−γt/2} sin w_ck t` for the
    /// Caldirola–Kanai mass `m e^{γt}`, `w_ck² = w₁² − γ²/4`.
    pub fn analytic_ck(m: f64, gamma: f64, w1: f64, a: f64, b: f64) -> Result<Self> {
        let w_sq = w1 * w1 - 0.25 * gamma * gamma;
        if !(w_sq > 0.0) {
            return Err(Error::Overdamped {
                w1_sq: w1 * w1,
                quarter_gamma_sq: 0.25 * gamma * gamma,
            });
        }
        for (name, v) in [("m", m), ("A", a), ("B", b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let w = w_sq.sqrt();
        Ok(Self {
            kind: BasisKind::Ck { gamma, w, a, b },
            omega: m * a * b * w,
            t_min: f64::NEG_INFINITY,
            t_max: f64::INFINITY,
        })
    }

    /// Integrates the homogeneous equation from initial data at `model.t_min()`.
    pub fn solve_homogeneous(model: &OscillatorModel, init: BasisInitial, tol: Tolerance) -> Result<Self> {
        Self::solve_homogeneous_at(model, model.t_min(), init, tol)
    }

    /// Integrates the homogeneous equation over the whole model domain from
    /// initial data given at `t_ref`.
    pub fn solve_homogeneous_at(
        model: &OscillatorModel,
        t_ref: f64,
        init: BasisInitial,
        tol: Tolerance,
    ) -> Result<Self> {
        let s = model.evaluate(t_ref)?;
        let w = init.u0 * init.dv0 - init.du0 * init.v0;
        let scale = init.u0.hypot(init.du0) * init.v0.hypot(init.dv0);
        if !(w.abs() > 1e-14 * scale) || scale == 0.0 {
            return Err(Error::DegenerateBasis(w));
        }
        let omega = s.m * w;
        if omega <= 0.0 {
            return Err(Error::NonPositiveOmega(omega));
        }

        let span = model.t_max() - model.t_min();
        let h_max = (span / 16.0).min(0.5 / model.frequency_scale());
        let traj = ode::integrate(
            |t, y: &[f64; 4]| {
                let s = model.sample_unchecked(t);
                let damp = s.dm / s.m;
                [y[1], -damp * y[1] - s.w2 * y[0], y[3], -damp * y[3] - s.w2 * y[2]]
            },
            t_ref,
            [init.u0, init.du0, init.v0, init.dv0],
            model.t_min(),
            model.t_max(),
            tol,
            h_max,
        )?;

        let (theta_t, theta) = unwrap_theta(&traj, model, omega, t_ref);
        Ok(Self {
            kind: BasisKind::Numeric(Arc::new(NumericBasis {
                traj,
                theta_t,
                theta,
            })),
            omega,
            t_min: model.t_min(),
            t_max: model.t_max(),
        })
    }

    /// Maps this basis of `model` to the unit-mass basis `u₀ = √(M/m_u) u`
    /// of the reduced oscillator.
    pub fn to_unit_mass(&self, model: &OscillatorModel, unit_mass: f64) -> Self {
        self.mass_scaled(model, unit_mass, true)
    }

    /// Maps a basis of the reduced unit-mass oscillator of `model` back to a
    /// basis of `model` itself: `u = u₀ / √(M/m_u)`.
    pub fn from_unit_mass(&self, model: &OscillatorModel, unit_mass: f64) -> Self {
        self.mass_scaled(model, unit_mass, false)
    }

    fn mass_scaled(&self, model: &OscillatorModel, unit_mass: f64, to_unit_mass: bool) -> Self {
        Self {
            kind: BasisKind::MassScaled {
                inner: Box::new(self.clone()),
                model: Box::new(model.clone()),
                unit_mass,
                to_unit_mass,
            },
            // M (v̇u − u̇v) is unchanged by the rescaling
            omega: self.omega,
            t_min: self.t_min.max(model.t_min()),
            t_max: self.t_max.min(model.t_max()),
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn is_numeric(&self) -> bool {
        match &self.kind {
            BasisKind::Numeric(_) => true,
            BasisKind::MassScaled { inner, .. } => inner.is_numeric(),
            _ => false,
        }
    }

    pub fn sample(&self, t: f64) -> Result<BasisSample> {
        if !(t >= self.t_min && t <= self.t_max) {
            return Err(Error::Domain {
                t,
                t_min: self.t_min,
                t_max: self.t_max,
            });
        }
        Ok(self.sample_unchecked(t))
    }

    pub(crate) fn sample_unchecked(&self, t: f64) -> BasisSample {
        match &self.kind {
            BasisKind::Sho { w, a, b } => {
                let (s, c) = (w * t).sin_cos();
                BasisSample::from_uv(t, a * c, -a * w * s, b * s, b * w * c, elliptic_angle(*a, *b, w * t))
            }
            BasisKind::Ck { gamma, w, a, b } => {
                let e = (-0.5 * gamma * t).exp();
                let (s, c) = (w * t).sin_cos();
                let g = 0.5 * gamma;
                BasisSample::from_uv(
                    t,
                    a * e * c,
                    a * e * (-g * c - w * s),
                    b * e * s,
                    b * e * (-g * s + w * c),
                    elliptic_angle(*a, *b, w * t),
                )
            }
            BasisKind::Numeric(nb) => {
                let y = nb.traj.eval(t);
                let raw = (-y[2]).atan2(y[0]);
                BasisSample::from_uv(t, y[0], y[1], y[2], y[3], nb.theta_at(t, raw))
            }
            BasisKind::MassScaled {
                inner,
                model,
                unit_mass,
                to_unit_mass,
            } => {
                let b = inner.sample_unchecked(t);
                let m = model.sample_unchecked(t);
                let half_rate = 0.5 * m.dm / m.m;
                let (s, ds_over_s) = if *to_unit_mass {
                    ((m.m / unit_mass).sqrt(), half_rate)
                } else {
                    ((unit_mass / m.m).sqrt(), -half_rate)
                };
                BasisSample {
                    t,
                    u: s * b.u,
                    du: s * (b.du + ds_over_s * b.u),
                    v: s * b.v,
                    dv: s * (b.dv + ds_over_s * b.v),
                    rho: s * b.rho,
                    drho: s * (b.drho + ds_over_s * b.rho),
                    theta: b.theta,
                }
            }
        }
    }

    /// `M(t)(v̇u − u̇v)` evaluated along the trajectory.
    pub fn omega_at(&self, model: &OscillatorModel, t: f64) -> Result<f64> {
        let m = model.evaluate(t)?;
        Ok(m.m * self.sample(t)?.wronskian())
    }

    /// Step boundaries of the underlying numeric trajectory, if any.
    pub fn knots(&self) -> Option<Vec<f64>> {
        match &self.kind {
            BasisKind::Numeric(nb) => Some(nb.traj.knots()),
            BasisKind::MassScaled { inner, .. } => inner.knots(),
            _ => None,
        }
    }
}

/// Samples the argument of `u − iv` densely enough that adjacent samples
/// differ by less than π/4, then removes the 2π jumps outward from `t_ref`.
fn unwrap_theta(
    traj: &DenseTrajectory<4>,
    model: &OscillatorModel,
    omega: f64,
    t_ref: f64,
) -> (Vec<f64>, Vec<f64>) {
    const MAX_STEP: f64 = PI / 4.0;
    let raw = |t: f64| {
        let y = traj.eval(t);
        (-y[2]).atan2(y[0])
    };
    // |dθ/dt| = Ω / (M ρ²)
    let rate = |t: f64| {
        let y = traj.eval(t);
        omega / (model.sample_unchecked(t).m * (y[0] * y[0] + y[2] * y[2]))
    };
    let knots = traj.knots();
    let mut ts = vec![knots[0]];
    for w in knots.windows(2) {
        refine(&raw, &rate, w[0], w[1], 0, MAX_STEP, &mut ts);
    }
    let raws: Vec<f64> = ts.iter().map(|&t| raw(t)).collect();
    let i_ref = ts
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t_ref).abs().total_cmp(&(b.1 - t_ref).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut theta = vec![0.0; ts.len()];
    theta[i_ref] = raws[i_ref];
    for i in i_ref + 1..ts.len() {
        theta[i] = theta[i - 1] + wrap_angle(raws[i] - raws[i - 1]);
    }
    for i in (0..i_ref).rev() {
        theta[i] = theta[i + 1] + wrap_angle(raws[i] - raws[i + 1]);
    }
    (ts, theta)
}

fn refine(
    raw: &dyn Fn(f64) -> f64,
    rate: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    depth: u32,
    max_step: f64,
    out: &mut Vec<f64>,
) {
    // θ decreases monotonically, so a non-negative wrapped difference means
    // more than half a turn was skipped
    let d = wrap_angle(raw(b) - raw(a));
    let est = rate(a).max(rate(b)) * (b - a);
    if depth < 30 && (d.abs() >= max_step || d > 0.0 || est >= max_step) {
        let mid = 0.5 * (a + b);
        refine(raw, rate, a, mid, depth + 1, max_step, out);
        refine(raw, rate, mid, b, depth + 1, max_step, out);
    } else {
        out.push(b);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DrivenSample {
    pub t: f64,
    pub xp: f64,
    pub dxp: f64,
    pub delta: f64,
}

/// Particular solution `x_p` of `d/dt(M ẋ_p) + M w² x_p = F` with the phase
/// `δ(t) = ∫_{t0}^t (M w² x_p²/2 − M ẋ_p²/2) dz`, integrated together.
#[derive(Clone, Debug)]
pub struct DrivenSolution {
    traj: Arc<DenseTrajectory<3>>,
    t0: f64,
    xp0: f64,
    dxp0: f64,
    tol: Tolerance,
}

impl DrivenSolution {
    pub fn solve_particular(
        model: &OscillatorModel,
        xp0: f64,
        dxp0: f64,
        t0: f64,
        tol: Tolerance,
    ) -> Result<Self> {
        model.check_domain(t0)?;
        let span = model.t_max() - model.t_min();
        let h_max = (span / 16.0).min(0.5 / model.frequency_scale());
        let traj = ode::integrate(
            |t, y: &[f64; 3]| {
                let s = model.sample_unchecked(t);
                [
                    y[1],
                    s.f / s.m - (s.dm / s.m) * y[1] - s.w2 * y[0],
                    0.5 * s.m * (s.w2 * y[0] * y[0] - y[1] * y[1]),
                ]
            },
            t0,
            [xp0, dxp0, 0.0],
            model.t_min(),
            model.t_max(),
            tol,
            h_max,
        )?;
        Ok(Self {
            traj: Arc::new(traj),
            t0,
            xp0,
            dxp0,
            tol,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_min(&self) -> f64 {
        self.traj.t_min()
    }

    pub fn t_max(&self) -> f64 {
        self.traj.t_max()
    }

    pub fn initial(&self) -> (f64, f64) {
        (self.xp0, self.dxp0)
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn sample(&self, t: f64) -> Result<DrivenSample> {
        if !(t >= self.t_min() && t <= self.t_max()) {
            return Err(Error::Domain {
                t,
                t_min: self.t_min(),
                t_max: self.t_max(),
            });
        }
        Ok(self.sample_unchecked(t))
    }

    pub(crate) fn sample_unchecked(&self, t: f64) -> DrivenSample {
        let y = self.traj.eval(t);
        DrivenSample {
            t,
            xp: y[0],
            dxp: y[1],
            delta: y[2],
        }
    }

    /// The particular solution `x_p + c·u`, with `δ` re-integrated from the
    /// shifted trajectory.
    pub fn shift_particular(&self, basis: &ClassicalBasis, c: f64, model: &OscillatorModel) -> Result<Self> {
        if c == 0.0 {
            return Ok(self.clone());
        }
        let b = basis.sample(self.t0)?;
        Self::solve_particular(model, self.xp0 + c * b.u, self.dxp0 + c * b.du, self.t0, self.tol)
    }

    /// `d/dt(M ẋ_p) + M w² x_p − F` from the trajectory, using the equation of
    /// motion only through `ẍ_p` estimated by central differences.
    pub fn motion_residual(&self, model: &OscillatorModel, t: f64, h: f64) -> Result<f64> {
        let p = |t: f64| -> Result<f64> {
            let s = model.evaluate(t)?;
            Ok(s.m * self.sample(t)?.dxp)
        };
        let dp = (8.0 * (p(t + h)? - p(t - h)?) - (p(t + 2.0 * h)? - p(t - 2.0 * h)?)) / (12.0 * h);
        let s = model.evaluate(t)?;
        let d = self.sample(t)?;
        Ok(dp + s.m * s.w2 * d.xp - s.f)
    }
}

/// `δ = −(M/2)(v̇/v) x_p² − ½ ∫_{t0}^t M (x_p v̇/v − ẋ_p)² dz`, singular where
/// `v` vanishes. Used only as a cross-check of the regular form.
pub fn delta_legacy(
    basis: &ClassicalBasis,
    driven: &DrivenSolution,
    model: &OscillatorModel,
    t0: f64,
    t: f64,
) -> Result<f64> {
    model.check_domain(t0)?;
    model.check_domain(t)?;
    let (lo, hi) = (t0.min(t), t0.max(t));
    let v_scale = {
        let n = 64;
        (0..=n)
            .map(|k| {
                let s = basis.sample_unchecked(lo + (hi - lo) * k as f64 / n as f64);
                s.rho
            })
            .fold(0.0, f64::max)
    };
    let n_scan = 256;
    let mut prev_sign = 0.0;
    for k in 0..=n_scan {
        let tk = lo + (hi - lo) * k as f64 / n_scan as f64;
        let v = basis.sample(tk)?.v;
        if v.abs() <= 1e-9 * v_scale || (prev_sign != 0.0 && v.signum() != prev_sign) {
            return Err(Error::SingularPath { t: tk });
        }
        prev_sign = v.signum();
    }

    let integrand = |z: f64| {
        let s = model.sample_unchecked(z);
        let b = basis.sample_unchecked(z);
        let d = driven.sample_unchecked(z);
        let q = d.xp * b.dv / b.v - d.dxp;
        s.m * q * q
    };
    let integral = quad::integrate(&integrand, t0, t, 1e-14, 1e-13)?;
    let s = model.evaluate(t)?;
    let b = basis.sample(t)?;
    let d = driven.sample(t)?;
    Ok(-0.5 * s.m * (b.dv / b.v) * d.xp * d.xp - 0.5 * integral)
}

//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! Accepted steps keep the coefficients of the fourth-order continuous
//! extension, so trajectories can be evaluated anywhere inside the integrated
//! span without re-integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        if !(rtol > 0.0 && atol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive (rtol={rtol}, atol={atol})"
            )));
        }
        Ok(Self { rtol, atol })
    }

    /// Relative tolerance `tol`, absolute `tol/100`.
    pub fn uniform(tol: f64) -> Result<Self> {
        Self::new(tol, tol * 1e-2)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 5_000_000;

#[derive(Clone, Debug)]
struct Segment<const N: usize> {
    t0: f64,
    h: f64,
    rc: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let rc = &self.rc;
        std::array::from_fn(|i| {
            rc[0][i] + s * (rc[1][i] + s1 * (rc[2][i] + s * (rc[3][i] + s1 * rc[4][i])))
        })
    }

    fn bounds(&self) -> (f64, f64) {
        let t1 = self.t0 + self.h;
        (self.t0.min(t1), self.t0.max(t1))
    }
}

/// Piecewise-polynomial solution over `[t_min, t_max]`.
#[derive(Clone, Debug)]
pub struct DenseTrajectory<const N: usize> {
    t_lo: Vec<f64>,
    segments: Vec<Segment<N>>,
    t_min: f64,
    t_max: f64,
    rejected: usize,
}

impl<const N: usize> DenseTrajectory<N> {
    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.segments.len()
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// State at `t`; `t` is clamped into the integrated span.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let t = t.clamp(self.t_min, self.t_max);
        let idx = self.t_lo.partition_point(|&lo| lo <= t).saturating_sub(1);
        self.segments[idx].eval(t)
    }

    /// Sorted step boundaries, including both ends of the span.
    pub fn knots(&self) -> Vec<f64> {
        let mut k = self.t_lo.clone();
        k.push(self.t_max);
        k
    }
}

fn sweep<const N: usize, F>(
    rhs: &F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: Tolerance,
    h_max: f64,
    rejected: &mut usize,
) -> Result<Vec<Segment<N>>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::new();
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(out);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = (1e-2f64).min(span.abs()).min(h_max) * dir;
    let comb = |y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]| -> [f64; N] {
        std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
    };
    let mut last_rejected = false;

    for _ in 0..MAX_STEPS {
        let remaining = t_end - t;
        if remaining * dir <= 0.0 {
            return Ok(out);
        }
        let finishing = (h.abs() >= remaining.abs()) || (remaining.abs() - h.abs()) < 1e-12 * span.abs();
        if finishing {
            h = remaining;
        }

        let k2 = rhs(t + C2 * h, &comb(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &comb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h, &comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(
            t + C5 * h,
            &comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &comb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = comb(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t1 = if finishing { t_end } else { t + h };
        let k7 = rhs(t1, &y1);

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y1[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
        }

        if err <= 1.0 {
            let mut rc = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y1[i] - y[i];
                let bspl = h * k1[i] - dy;
                rc[0][i] = y[i];
                rc[1][i] = dy;
                rc[2][i] = bspl;
                rc[3][i] = dy - h * k7[i] - bspl;
                rc[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            out.push(Segment { t0: t, h: t1 - t, rc });
            t = t1;
            y = y1;
            k1 = k7;
            let grow = if last_rejected { 1.0 } else { 5.0 };
            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, grow);
            h = (h * fac).abs().min(h_max) * dir;
            last_rejected = false;
        } else {
            *rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).max(0.1);
            h *= fac;
            last_rejected = true;
            if h.abs() < 1e-14 * span.abs().max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
    }
    Err(Error::Integration(format!(
        "exceeded {MAX_STEPS} steps before reaching t = {t_end}"
    )))
}

/// Integrates `y' = rhs(t, y)` from the initial state `y0` at `t0` both
/// forwards to `t_max` and backwards to `t_min`.
pub fn integrate<const N: usize, F>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t_min: f64,
    t_max: f64,
    tol: Tolerance,
    h_max: f64,
) -> Result<DenseTrajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(t_min <= t0 && t0 <= t_max && t_min < t_max) {
        return Err(Error::InvalidParameter(format!(
            "initial time {t0} outside span [{t_min}, {t_max}]"
        )));
    }
    let mut rejected = 0;
    let mut backward = sweep(&rhs, t0, y0, t_min, tol, h_max, &mut rejected)?;
    let forward = sweep(&rhs, t0, y0, t_max, tol, h_max, &mut rejected)?;
    backward.reverse();
    let segments: Vec<Segment<N>> = backward.into_iter().chain(forward).collect();
    let t_lo = segments.iter().map(|s| s.bounds().0).collect();
    Ok(DenseTrajectory {
        t_lo,
        segments,
        t_min,
        t_max,
        rejected,
    })
}

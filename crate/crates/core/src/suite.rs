//! Runs a scenario's checks and collects a deterministic report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classical::delta_legacy;
use crate::error::{Error, Result};
use crate::models::Family;
use crate::scenario::Scenario;
use crate::transforms::{apply_u0, apply_u0_dagger, apply_uf, apply_uf_dagger, GridFunction, GridSpec};
use crate::verify::{
    align_global_phase, check_omega_constancy, check_stationarity, check_transform_equivalence,
    compare_uncertainties, moments, orthonormality_deviation, relative_l2, schrodinger_residual, ChainPath,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Full,
    /// `n ≤ 2` and at most three times.
    Fast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub params: Value,
    pub measured: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckResult {
    /// Passes when `measured ≤ threshold`.
    fn at_most(check: &str, params: Value, measured: f64, threshold: f64) -> Self {
        Self {
            check: check.into(),
            params,
            measured: Some(measured),
            threshold,
            pass: measured <= threshold,
            error: None,
        }
    }

    fn failed(check: &str, params: Value, threshold: f64, err: Error) -> Self {
        Self {
            check: check.into(),
            params,
            measured: None,
            threshold,
            pass: false,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Report(pub Vec<CheckResult>);

impl Report {
    pub fn all_pass(&self) -> bool {
        self.0.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.0.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

type Task<'a> = Box<dyn Fn() -> Vec<CheckResult> + Send + Sync + 'a>;

struct Plan<'a> {
    sc: &'a Scenario,
    states: Vec<usize>,
    times: Vec<f64>,
    ortho_max: usize,
}

impl<'a> Plan<'a> {
    fn threshold(&self, check: &str) -> f64 {
        self.sc.thresholds.get(check)
    }

    /// Runs `f`, turning an error into a failed result for `check`.
    fn guard(&self, check: &str, params: Value, f: impl FnOnce(f64) -> Result<Vec<CheckResult>>) -> Vec<CheckResult> {
        let thr = self.threshold(check);
        f(thr).unwrap_or_else(|e| vec![CheckResult::failed(check, params, thr, e)])
    }
}

/// Runs every check of the scenario. Checks run concurrently; the result
/// is sorted by check name, then parameters.
pub fn run(sc: &Scenario, kind: SuiteKind) -> Report {
    let (states, times, ortho_max) = match kind {
        SuiteKind::Full => (sc.states.clone(), sc.times.clone(), 8),
        SuiteKind::Fast => {
            let mut s: Vec<usize> = sc.states.iter().copied().filter(|&n| n <= 2).collect();
            if s.is_empty() {
                s.push(*sc.states.iter().min().expect("non-empty states"));
            }
            (s, sc.times.iter().copied().take(3).collect(), 2)
        }
    };
    let plan = Plan {
        sc,
        states,
        times,
        ortho_max,
    };
    let mut tasks: Vec<Task> = Vec::new();
    let wants = |c: &str| sc.checks.iter().any(|x| x == c);

    for &n in &plan.states {
        for &t in &plan.times {
            let p = &plan;
            if wants("residual") || wants("driven_residual") || wants("residual_convergence") {
                tasks.push(Box::new(move || residual_task(p, n, t)));
            }
            if wants("transform_chain") || wants("transform_chain_analytic") {
                tasks.push(Box::new(move || chain_task(p, n, t)));
            }
            if wants("closed_form") {
                tasks.push(Box::new(move || closed_form_task(p, n, t)));
            }
            if wants("uncertainty_preservation") || wants("moment_shift") || wants("heisenberg") {
                tasks.push(Box::new(move || moment_task(p, n, t)));
            }
        }
    }
    let p = &plan;
    if wants("frequency_map") {
        tasks.push(Box::new(move || frequency_map_task(p)));
    }
    if wants("omega_constancy") {
        tasks.push(Box::new(move || {
            let params = json!({"samples": 1001});
            p.guard("omega_constancy", params.clone(), |thr| {
                let d = check_omega_constancy(&p.sc.basis, &p.sc.model, 1001)?;
                Ok(vec![CheckResult::at_most("omega_constancy", params, d, thr)])
            })
        }));
    }
    if wants("delta_equivalence") {
        tasks.push(Box::new(move || delta_task(p)));
    }
    if wants("shift_rule") {
        tasks.push(Box::new(move || shift_rule_task(p)));
    }
    if wants("orthonormality") {
        for &t in &plan.times {
            tasks.push(Box::new(move || {
                let params = json!({"t": t, "n_max": p.ortho_max});
                p.guard("orthonormality", params.clone(), |thr| {
                    let d = orthonormality_deviation(&p.sc.field(0)?, p.ortho_max, t, p.sc.points().max(4097))?;
                    Ok(vec![CheckResult::at_most("orthonormality", params, d, thr)])
                })
            }));
        }
    }
    if wants("stationarity") || wants("pulsation") {
        tasks.push(Box::new(move || stationarity_task(p)));
    }
    if wants("inverse_composition") {
        tasks.push(Box::new(move || inverse_composition_task(p)));
    }

    let mut results: Vec<CheckResult> = tasks.par_iter().flat_map_iter(|task| task()).collect();
    results.retain(|r| sc.checks.contains(&r.check));
    results.sort_by(|a, b| {
        a.check
            .cmp(&b.check)
            .then_with(|| a.params.to_string().cmp(&b.params.to_string()))
    });
    Report(results)
}

fn residual_task(p: &Plan, n: usize, t: f64) -> Vec<CheckResult> {
    let name = if p.sc.is_driven() { "driven_residual" } else { "residual" };
    let params = json!({"n": n, "t": t});
    p.guard(name, params.clone(), |thr| {
        let field = p.sc.field(n)?;
        let grid = p.sc.grid_for(&[&field], t)?;
        let r = schrodinger_residual(&field, &p.sc.model, grid, t, p.sc.dt)?;
        let conv_thr = p.threshold("residual_convergence");
        Ok(vec![
            CheckResult::at_most(name, json!({"n": n, "t": t, "dt": r.dt, "points": grid.points}), r.rel_l2_residual, thr),
            CheckResult {
                check: "residual_convergence".into(),
                params: json!({
                    "n": n,
                    "t": t,
                    "refinement": r.refinement,
                    "order": r.convergence_order_estimate,
                    "at_floor": r.at_floor,
                }),
                measured: Some(r.convergence_ratio),
                threshold: conv_thr,
                pass: r.converges(),
                error: None,
            },
        ])
    })
}

fn chain_task(p: &Plan, n: usize, t: f64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for (check, path) in [
        ("transform_chain", ChainPath::Interpolated),
        ("transform_chain_analytic", ChainPath::Analytic),
    ] {
        let params = json!({"n": n, "t": t});
        out.extend(p.guard(check, params.clone(), |thr| {
            let grid = match p.sc.grid {
                crate::scenario::GridPolicy::Fixed(g) => Some(g),
                crate::scenario::GridPolicy::Auto { .. } => None,
            };
            let d = check_transform_equivalence(
                &p.sc.model,
                &p.sc.basis,
                p.sc.driven.as_ref(),
                n,
                t,
                grid,
                p.sc.units,
                path,
            )?;
            Ok(vec![CheckResult::at_most(check, params, d, thr)])
        }));
    }
    out
}

fn closed_form_task(p: &Plan, n: usize, t: f64) -> Vec<CheckResult> {
    let params = json!({"n": n, "t": t});
    p.guard("closed_form", params.clone(), |thr| {
        let closed = p
            .sc
            .closed_form(n)
            .ok_or_else(|| Error::InvalidParameter("no closed form for this scenario".into()))?;
        let general = p.sc.field(n)?;
        let grid = p.sc.grid_for(&[&closed, &general], t)?;
        let (cs, gs) = (closed.slice(t)?, general.slice(t)?);
        let a: Vec<_> = grid.xs().map(|x| cs.eval(x)).collect();
        let b: Vec<_> = grid.xs().map(|x| gs.eval(x)).collect();
        let (z, _) = align_global_phase(&a, &b);
        let worst = a.iter().zip(&b).map(|(x, y)| (x - z * y).norm()).fold(0.0, f64::max);
        Ok(vec![CheckResult::at_most("closed_form", params, worst, thr)])
    })
}

fn moment_task(p: &Plan, n: usize, t: f64) -> Vec<CheckResult> {
    let params = json!({"n": n, "t": t});
    let hbar = p.sc.units.hbar;
    if !p.sc.is_driven() {
        return p.guard("heisenberg", params.clone(), |thr| {
            let field = p.sc.field(n)?;
            let m = moments(&field.sample(p.sc.grid_for(&[&field], t)?, t)?)?;
            let deficit = (1.0 - m.var_x * m.var_p / (0.25 * hbar * hbar)).max(0.0);
            Ok(vec![CheckResult::at_most("heisenberg", params, deficit, thr)])
        });
    }
    p.guard("uncertainty_preservation", params.clone(), |thr| {
        let c = compare_uncertainties(&p.sc.spec(n)?, t, p.sc.points())?;
        let deficit = (1.0 - c.heisenberg_ratio(hbar)).max(0.0);
        Ok(vec![
            CheckResult::at_most(
                "uncertainty_preservation",
                json!({"n": n, "t": t, "var_x": c.undriven.var_x, "var_p": c.undriven.var_p}),
                c.var_x_difference().max(c.var_p_difference()),
                thr,
            ),
            CheckResult::at_most(
                "moment_shift",
                json!({"n": n, "t": t, "xp": c.xp, "kinetic_momentum": c.kinetic_momentum}),
                c.mean_x_shift_error().max(c.mean_p_shift_error()),
                p.threshold("moment_shift"),
            ),
            CheckResult::at_most("heisenberg", params.clone(), deficit, p.threshold("heisenberg")),
        ])
    })
}

fn frequency_map_task(p: &Plan) -> Vec<CheckResult> {
    let params = json!({"samples": 1001, "family": p.sc.model.family().name()});
    p.guard("frequency_map", params.clone(), |thr| {
        let expected = match *p.sc.model.family() {
            Family::UnitMassSho { w_s } => w_s * w_s,
            Family::CaldirolaKanai { gamma, w1, .. } => w1 * w1 - 0.25 * gamma * gamma,
            Family::LoDampedPulsating { w_lo, .. } => w_lo * w_lo,
            _ => return Err(Error::InvalidParameter("no closed-form reduced frequency".into())),
        };
        let (lo, hi) = (p.sc.model.t_min(), p.sc.model.t_max());
        let mut worst: f64 = 0.0;
        for k in 0..=1000 {
            let t = lo + (hi - lo) * k as f64 / 1000.0;
            worst = worst.max((p.sc.model.reduced_frequency_squared(t)? - expected).abs());
        }
        Ok(vec![CheckResult::at_most("frequency_map", params, worst, thr)])
    })
}

fn population_std(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Longest stretch of the domain on which `v` keeps one sign, trimmed by a
/// tenth of its length at both ends.
fn regular_window(p: &Plan) -> Result<(f64, f64)> {
    let (lo, hi) = (p.sc.model.t_min(), p.sc.model.t_max());
    let n = 2000;
    let ts: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let vs = ts.iter().map(|&t| Ok(p.sc.basis.sample(t)?.v)).collect::<Result<Vec<_>>>()?;
    let (mut best, mut start) = ((0, 0), 0);
    for i in 1..=n {
        if vs[i] == 0.0 || vs[i].signum() != vs[i - 1].signum() || vs[start] == 0.0 {
            start = i;
            continue;
        }
        if i - start > best.1 - best.0 {
            best = (start, i);
        }
    }
    if best.1 - best.0 < 10 {
        return Err(Error::SingularPath { t: lo });
    }
    let (a, b) = (ts[best.0], ts[best.1]);
    let trim = 0.1 * (b - a);
    Ok((a + trim, b - trim))
}

fn delta_task(p: &Plan) -> Vec<CheckResult> {
    let params = json!({"samples": 100});
    p.guard("delta_equivalence", params, |thr| {
        let driven = p.sc.driven.as_ref().expect("driven scenario");
        let (a, b) = regular_window(p)?;
        let mut diffs = Vec::with_capacity(100);
        for k in 0..100 {
            let t = a + (b - a) * k as f64 / 99.0;
            let legacy = delta_legacy(&p.sc.basis, driven, &p.sc.model, a, t)?;
            diffs.push(driven.sample(t)?.delta - legacy);
        }
        Ok(vec![CheckResult::at_most(
            "delta_equivalence",
            json!({"samples": 100, "window": [a, b]}),
            population_std(&diffs),
            thr,
        )])
    })
}

fn shift_rule_task(p: &Plan) -> Vec<CheckResult> {
    let c = 0.5;
    let params = json!({"samples": 100, "c": c});
    p.guard("shift_rule", params.clone(), |thr| {
        let driven = p.sc.driven.as_ref().expect("driven scenario");
        let shifted = driven.shift_particular(&p.sc.basis, c, &p.sc.model)?;
        let (lo, hi) = (p.sc.model.t_min(), p.sc.model.t_max());
        let mut q = Vec::with_capacity(100);
        for k in 0..100 {
            let t = lo + (hi - lo) * k as f64 / 99.0;
            let (d, s, b) = (driven.sample(t)?, shifted.sample(t)?, p.sc.basis.sample(t)?);
            let m = p.sc.model.evaluate(t)?.m;
            q.push(s.delta - d.delta + c * m * b.du * (d.xp + 0.5 * c * b.u));
        }
        Ok(vec![CheckResult::at_most("shift_rule", params, population_std(&q), thr)])
    })
}

fn stationarity_task(p: &Plan) -> Vec<CheckResult> {
    let Some(c) = p.sc.pulsation_constant() else {
        return Vec::new();
    };
    let w = p.sc.family_frequency().expect("SHO family");
    let mut out = Vec::new();
    for &n in &p.states {
        let params = json!({"n": n, "C": c});
        if c == 1.0 {
            out.extend(p.guard("stationarity", params.clone(), |thr| {
                let field = p.sc.field(n)?;
                let grid = p.sc.grid_for(&[&field], p.times[0])?;
                let d = check_stationarity(&field, grid, &p.times)?;
                Ok(vec![CheckResult::at_most("stationarity", params, d, thr)])
            }));
        } else {
            out.extend(p.guard("pulsation", params.clone(), |thr| {
                let field = p.sc.field(n)?;
                let period = std::f64::consts::PI / w;
                let mut worst: f64 = 0.0;
                let mut contrast: f64 = f64::INFINITY;
                for &t in &p.times {
                    let grid = p.sc.grid_for(&[&field], t)?;
                    worst = worst.max(check_stationarity(&field, grid, &[t, t + period])?);
                    contrast = contrast.min(check_stationarity(&field, grid, &[t, t + 0.5 * period])?);
                }
                Ok(vec![CheckResult::at_most(
                    "pulsation",
                    json!({"n": n, "C": c, "half_period_contrast": contrast}),
                    worst,
                    thr,
                )])
            }));
        }
    }
    out
}

/// `U₀†U₀` and `U_F†U_F` on seeded random Gaussian packets, via the
/// interpolating path.
fn inverse_composition_task(p: &Plan) -> Vec<CheckResult> {
    let params = json!({"seed": p.sc.seed, "samples": 20});
    p.guard("inverse_composition", params.clone(), |thr| {
        let mut rng = ChaCha8Rng::seed_from_u64(p.sc.seed);
        let hbar = p.sc.units.hbar;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let t = p.times[rng.gen_range(0..p.times.len())];
            let (c, sigma): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(0.5..1.5));
            let (k, chirp): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0));
            let s = p.sc.model.evaluate(t)?;
            let stretch = (s.m / p.sc.units.unit_mass).sqrt().max((p.sc.units.unit_mass / s.m).sqrt());
            let xp = p.sc.driven.as_ref().map(|d| d.sample(t).map(|d| d.xp.abs())).transpose()?.unwrap_or(0.0);
            let half = (c.abs() + 10.0 * sigma) * stretch + xp;
            let grid = GridSpec::covering(-half, half, p.sc.points())?;
            let amp = (std::f64::consts::PI * sigma * sigma).powf(-0.25);
            let g = GridFunction::from_fn(
                grid,
                t,
                hbar,
                std::sync::Arc::new(move |x: f64| {
                    let y = x - c;
                    num_complex::Complex64::from_polar(amp * (-0.5 * y * y / (sigma * sigma)).exp(), (k * x + chirp * y * y) / hbar)
                }),
            )
            .samples_only();
            let round = apply_u0_dagger(&p.sc.model, t, p.sc.units, &apply_u0(&p.sc.model, t, p.sc.units, &g)?)?;
            worst = worst.max(relative_l2(&round, &g)?);
            if let Some(d) = &p.sc.driven {
                let round = apply_uf_dagger(&p.sc.model, d, t, &apply_uf(&p.sc.model, d, t, &g)?)?;
                worst = worst.max(relative_l2(&round, &g)?);
            }
        }
        Ok(vec![CheckResult::at_most("inverse_composition", params, worst, thr)])
    })
}

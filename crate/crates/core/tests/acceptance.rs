//! Acceptance criteria, one line each. Runs without the libtest harness so
//! that every line is printed; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64 as C64;
use tdho::classical::{delta_legacy, BasisInitial, ClassicalBasis, DrivenSolution};
use tdho::models::{Force, OscillatorModel, Units};
use tdho::ode::Tolerance;
use tdho::scenario::Scenario;
use tdho::states::{StateSpec, WavefunctionField};
use tdho::suite::{self, SuiteKind};
use tdho::transforms::GridSpec;
use tdho::verify::{
    align_global_phase, check_omega_constancy, check_stationarity, check_transform_equivalence,
    compare_uncertainties, covering_grid, orthonormality_deviation, schrodinger_residual, ChainPath,
};
use tdho::Result;

const POINTS: usize = 4096;
const TIMES: [f64; 3] = [0.0, 1.0, 2.5];

// Pinned tolerances.
const RESIDUAL_TOL: f64 = 1e-6;
const CONVERGENCE_RATIO: f64 = 8.0;
const CHAIN_INTERP_TOL: f64 = 1e-6;
const CHAIN_ANALYTIC_TOL: f64 = 1e-10;
const FREQ_TOL: f64 = 1e-12;
const OMEGA_DRIFT_TOL: f64 = 1e-8;
const CLOSED_FORM_TOL: f64 = 1e-8;
const UNCERTAINTY_TOL: f64 = 1e-8;
const DELTA_STD_TOL: f64 = 1e-8;
const ORTHO_TOL: f64 = 1e-8;
const STATIONARY_TOL: f64 = 1e-9;
const PULSATION_TOL: f64 = 1e-8;
const SUITE_SECONDS: f64 = 60.0;

fn units() -> Units {
    Units::default()
}

fn tight() -> Tolerance {
    Tolerance::new(1e-12, 1e-14).expect("valid tolerance")
}

struct Case {
    label: &'static str,
    model: OscillatorModel,
    basis: ClassicalBasis,
    driven: Option<DrivenSolution>,
}

impl Case {
    fn field(&self, n: usize) -> Result<WavefunctionField> {
        Ok(WavefunctionField::General(self.spec(n)?))
    }

    fn spec(&self, n: usize) -> Result<StateSpec> {
        StateSpec::new(n, units(), self.basis.clone(), self.driven.clone(), self.model.clone())
    }
}

fn sho_case(c: f64) -> Result<Case> {
    Ok(Case {
        label: if c == 1.0 { "SHO C=1" } else { "SHO C=2" },
        model: OscillatorModel::sho(1.0, -1.0, 10.0)?,
        basis: ClassicalBasis::analytic_sho(1.0, c, 1.0)?,
        driven: None,
    })
}

fn ck_case() -> Result<Case> {
    Ok(Case {
        label: "C-K",
        model: OscillatorModel::caldirola_kanai(1.0, 0.6, 1.0, -1.0, 10.0)?,
        basis: ClassicalBasis::analytic_ck(1.0, 0.6, 1.0, 1.0, 1.0)?,
        driven: None,
    })
}

/// Lo basis from `u₀ = C cos t`, `v₀ = sin t` at `t = 0`, mapped to the
/// physical mass.
fn lo_case(c: f64, tol: Tolerance) -> Result<Case> {
    let model = OscillatorModel::lo(1.0, 0.1, 0.2, 3.0, 1.0, -1.0, 10.0)?;
    let s = model.evaluate(0.0)?;
    let k = 1.0 / s.m.sqrt();
    let half_rate = 0.5 * s.dm / s.m;
    let basis = ClassicalBasis::solve_homogeneous_at(
        &model,
        0.0,
        BasisInitial {
            u0: c * k,
            du0: -half_rate * c * k,
            v0: 0.0,
            dv0: k,
        },
        tol,
    )?;
    Ok(Case {
        label: "Lo",
        model,
        basis,
        driven: None,
    })
}

fn driven_sho_case() -> Result<Case> {
    let model = OscillatorModel::sho(1.0, -1.0, 10.0)?.with_force(Force::Cosine {
        amp: 1.0,
        omega: 2.0,
        phase: 0.0,
        rate: 0.0,
    });
    let driven = DrivenSolution::solve_particular(&model, -1.0 / 3.0, 0.0, 0.0, tight())?;
    Ok(Case {
        label: "driven SHO",
        basis: ClassicalBasis::analytic_sho(1.0, 1.0, 1.0)?,
        model,
        driven: Some(driven),
    })
}

fn driven_ck_case() -> Result<Case> {
    let model = OscillatorModel::caldirola_kanai(1.0, 0.6, 1.0, -1.0, 10.0)?.with_force(Force::Cosine {
        amp: 1.0,
        omega: 1.0,
        phase: 0.0,
        rate: 0.3,
    });
    let driven = DrivenSolution::solve_particular(&model, 0.0, 0.0, 0.0, tight())?;
    Ok(Case {
        label: "driven C-K",
        basis: ClassicalBasis::analytic_ck(1.0, 0.6, 1.0, 1.0, 1.0)?,
        model,
        driven: Some(driven),
    })
}

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn residual_sweep(cases: &[Case], check_convergence: bool) -> Result<Outcome> {
    let (mut worst, mut worst_at) = (0.0f64, String::new());
    let mut min_ratio = f64::INFINITY;
    let mut conv_ok = true;
    for case in cases {
        for n in 0..=3 {
            let field = case.field(n)?;
            for &t in &TIMES {
                let grid = covering_grid(&[&field], t, POINTS)?;
                let r = schrodinger_residual(&field, &case.model, grid, t, None)?;
                if r.rel_l2_residual > worst {
                    worst = r.rel_l2_residual;
                    worst_at = format!("{} n={n} t={t}", case.label);
                }
                if !r.at_floor {
                    min_ratio = min_ratio.min(r.convergence_ratio);
                }
                conv_ok &= r.converges();
            }
        }
    }
    let pass = worst < RESIDUAL_TOL && (!check_convergence || conv_ok);
    let mut detail = format!("max residual {worst:.2e} ({worst_at}) < {RESIDUAL_TOL:.0e}");
    if check_convergence {
        detail += &format!("; min halving ratio {min_ratio:.1} >= {CONVERGENCE_RATIO}");
    }
    Ok(Outcome { pass, detail })
}

fn criterion_1() -> Result<Outcome> {
    let cases = [sho_case(1.0)?, sho_case(2.0)?, ck_case()?, lo_case(1.0, tight())?];
    residual_sweep(&cases, true)
}

fn criterion_2() -> Result<Outcome> {
    residual_sweep(&[driven_sho_case()?, driven_ck_case()?], false)
}

fn criterion_3() -> Result<Outcome> {
    let cases = [driven_sho_case()?, driven_ck_case()?, lo_case(1.5, tight())?];
    let (mut interp, mut analytic) = (0.0f64, 0.0f64);
    for case in &cases {
        for n in 0..=5 {
            for &t in &TIMES {
                let run = |path| {
                    check_transform_equivalence(&case.model, &case.basis, case.driven.as_ref(), n, t, None, units(), path)
                };
                interp = interp.max(run(ChainPath::Interpolated)?);
                analytic = analytic.max(run(ChainPath::Analytic)?);
            }
        }
    }
    Ok(Outcome {
        pass: interp < CHAIN_INTERP_TOL && analytic < CHAIN_ANALYTIC_TOL,
        detail: format!(
            "interpolated {interp:.2e} < {CHAIN_INTERP_TOL:.0e}; analytic {analytic:.2e} < {CHAIN_ANALYTIC_TOL:.0e}"
        ),
    })
}

fn criterion_4() -> Result<Outcome> {
    let ck = OscillatorModel::caldirola_kanai(1.0, 0.6, 1.0, -1.0, 10.0)?;
    let lo = OscillatorModel::lo(1.0, 0.1, 0.2, 3.0, 1.0, -1.0, 10.0)?;
    let (mut lo_ck, mut hi_ck, mut off_ck, mut off_lo) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for k in 0..=1000 {
        let t = -1.0 + 11.0 * k as f64 / 1000.0;
        let w = ck.reduced_frequency_squared(t)?;
        lo_ck = lo_ck.min(w);
        hi_ck = hi_ck.max(w);
        off_ck = off_ck.max((w - (1.0 - 0.09)).abs());
        off_lo = off_lo.max((lo.reduced_frequency_squared(t)? - 1.0).abs());
    }
    let spread = hi_ck - lo_ck;
    Ok(Outcome {
        pass: spread < FREQ_TOL && off_ck < FREQ_TOL && off_lo < FREQ_TOL,
        detail: format!(
            "C-K spread {spread:.1e}, |w0^2-(w1^2-g^2/4)| {off_ck:.1e}; Lo |w0^2-wLo^2| {off_lo:.1e} < {FREQ_TOL:.0e}"
        ),
    })
}

fn criterion_5() -> Result<Outcome> {
    let ck = OscillatorModel::caldirola_kanai(1.0, 0.6, 1.0, 0.0, 10.0)?;
    let lo = OscillatorModel::lo(1.0, 0.1, 0.2, 3.0, 1.0, 0.0, 10.0)?;
    let init = |m: &OscillatorModel| -> Result<BasisInitial> {
        let s = m.evaluate(0.0)?;
        Ok(BasisInitial { u0: 1.0, du0: -0.5 * s.dm / s.m, v0: 0.0, dv0: 1.0 })
    };
    let mut worst = 0.0f64;
    for model in [&ck, &lo] {
        let basis = ClassicalBasis::solve_homogeneous(model, init(model)?, Tolerance::default())?;
        worst = worst.max(check_omega_constancy(&basis, model, 1001)?);
    }
    Ok(Outcome {
        pass: worst < OMEGA_DRIFT_TOL,
        detail: format!("max relative drift {worst:.2e} < {OMEGA_DRIFT_TOL:.0e} (C-K, Lo; tol 1e-10)"),
    })
}

fn closed_form_distance(closed: &WavefunctionField, general: &WavefunctionField, t: f64) -> Result<f64> {
    let grid = covering_grid(&[closed, general], t, POINTS)?;
    let (cs, gs) = (closed.slice(t)?, general.slice(t)?);
    let a: Vec<C64> = grid.xs().map(|x| cs.eval(x)).collect();
    let b: Vec<C64> = grid.xs().map(|x| gs.eval(x)).collect();
    let (z, _) = align_global_phase(&a, &b);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - z * y).norm()).fold(0.0, f64::max))
}

fn criterion_6() -> Result<Outcome> {
    let ck = ck_case()?;
    let lo = lo_case(1.5, Tolerance::default())?;
    let (mut d_ck, mut d_lo) = (0.0f64, 0.0f64);
    for n in 0..=5 {
        let closed_ck = WavefunctionField::ck(1.0, 0.6, 1.0, 1.0, n, 1.0)?;
        let closed_lo = WavefunctionField::lo(1.0, 0.1, 0.2, 3.0, 1.0, 1.5, n, 1.0)?;
        for &t in &[0.0, 1.0, 2.5, 5.0, 9.0] {
            d_ck = d_ck.max(closed_form_distance(&closed_ck, &ck.field(n)?, t)?);
            d_lo = d_lo.max(closed_form_distance(&closed_lo, &lo.field(n)?, t)?);
        }
    }
    Ok(Outcome {
        pass: d_ck < CLOSED_FORM_TOL && d_lo < CLOSED_FORM_TOL,
        detail: format!("C-K {d_ck:.2e}, Lo {d_lo:.2e} < {CLOSED_FORM_TOL:.0e} (max pointwise, phase aligned)"),
    })
}

fn criterion_7() -> Result<Outcome> {
    let (mut var, mut shift) = (0.0f64, 0.0f64);
    for case in [driven_sho_case()?, driven_ck_case()?] {
        for n in 0..=5 {
            for &t in &TIMES {
                let c = compare_uncertainties(&case.spec(n)?, t, POINTS)?;
                var = var.max(c.var_x_difference()).max(c.var_p_difference());
                shift = shift.max(c.mean_x_shift_error()).max(c.mean_p_shift_error());
            }
        }
    }
    Ok(Outcome {
        pass: var < UNCERTAINTY_TOL && shift < UNCERTAINTY_TOL,
        detail: format!("variance change {var:.2e}, mean shift error {shift:.2e} < {UNCERTAINTY_TOL:.0e}"),
    })
}

fn std_dev(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn criterion_8() -> Result<Outcome> {
    let (mut eq, mut rule) = (0.0f64, 0.0f64);
    for case in [driven_sho_case()?, driven_ck_case()?] {
        let d = case.driven.as_ref().expect("driven");
        // v = sin-type vanishes at 0 and at the half period (> 3.2 for both)
        let (a, b) = (0.3, 3.0);
        let mut diffs = Vec::new();
        for k in 0..100 {
            let t = a + (b - a) * k as f64 / 99.0;
            diffs.push(d.sample(t)?.delta - delta_legacy(&case.basis, d, &case.model, a, t)?);
        }
        eq = eq.max(std_dev(&diffs));

        let c = 0.5;
        let shifted = d.shift_particular(&case.basis, c, &case.model)?;
        let mut q = Vec::new();
        for k in 0..100 {
            let t = -1.0 + 11.0 * k as f64 / 99.0;
            let (s0, s1, u) = (d.sample(t)?, shifted.sample(t)?, case.basis.sample(t)?);
            let m = case.model.evaluate(t)?.m;
            q.push(s1.delta - s0.delta + c * m * u.du * (s0.xp + 0.5 * c * u.u));
        }
        rule = rule.max(std_dev(&q));
    }
    Ok(Outcome {
        pass: eq < DELTA_STD_TOL && rule < DELTA_STD_TOL,
        detail: format!("std(regular - singular form) {eq:.2e}; shift rule std {rule:.2e} < {DELTA_STD_TOL:.0e}"),
    })
}

fn criterion_9() -> Result<Outcome> {
    let cases = [
        sho_case(1.0)?,
        sho_case(2.0)?,
        ck_case()?,
        lo_case(1.5, Tolerance::default())?,
        driven_sho_case()?,
        driven_ck_case()?,
    ];
    let mut closed = vec![
        WavefunctionField::sho(1.0, 2.0, 0, units())?,
        WavefunctionField::ck(1.0, 0.6, 1.0, 1.0, 0, 1.0)?,
        WavefunctionField::lo(1.0, 0.1, 0.2, 3.0, 1.0, 1.5, 0, 1.0)?,
    ];
    for case in &cases {
        closed.push(case.field(0)?);
    }
    let mut worst = 0.0f64;
    for field in &closed {
        for &t in &TIMES {
            worst = worst.max(orthonormality_deviation(field, 8, t, 2 * POINTS + 1)?);
        }
    }
    Ok(Outcome {
        pass: worst < ORTHO_TOL,
        detail: format!("max |<m|n> - delta_mn| {worst:.2e} < {ORTHO_TOL:.0e} (m, n <= 8, 3 closed + 6 general constructions)"),
    })
}

fn criterion_10() -> Result<Outcome> {
    let (mut drift, mut period, mut contrast) = (0.0f64, 0.0f64, f64::INFINITY);
    for n in 0..=5 {
        let c1 = WavefunctionField::sho(1.0, 1.0, n, units())?;
        let c2 = WavefunctionField::sho(1.0, 2.0, n, units())?;
        let grid = covering_grid(&[&c2], 0.0, POINTS)?.max_span_with(&covering_grid(&[&c1], 0.0, POINTS)?);
        drift = drift.max(check_stationarity(&c1, grid, &[0.0, 0.3, 1.0, 2.5, 7.0])?);
        for &t in &[0.0, 0.4, 1.0, 2.5] {
            period = period.max(check_stationarity(&c2, grid, &[t, t + PI])?);
            contrast = contrast.min(check_stationarity(&c2, grid, &[t, t + PI / 2.0])?);
        }
    }
    Ok(Outcome {
        pass: drift < STATIONARY_TOL && period < PULSATION_TOL && contrast > 1e-2,
        detail: format!(
            "C=1 drift {drift:.2e} < {STATIONARY_TOL:.0e}; C=2 period-pi mismatch {period:.2e} < {PULSATION_TOL:.0e}, half-period change {contrast:.2e} > 1e-2"
        ),
    })
}

fn bundled_suite() -> Result<Outcome> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let start = Instant::now();
    let mut failing = Vec::new();
    let mut control_detected = false;
    for name in ["sho_c1", "sho_c2", "ck", "lo", "driven_sho", "driven_ck", "negative_control"] {
        let sc = Scenario::load(&dir.join(format!("{name}.json")))?;
        let report = suite::run(&sc, SuiteKind::Full);
        if name == "negative_control" {
            control_detected = !report.all_pass();
        } else if !report.all_pass() {
            failing.push(name);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Outcome {
        pass: failing.is_empty() && control_detected && secs < SUITE_SECONDS,
        detail: format!(
            "6 scenarios pass: {}; negative control fails: {control_detected}; {secs:.1}s < {SUITE_SECONDS}s",
            failing.is_empty()
        ),
    })
}

trait GridUnion {
    fn max_span_with(&self, other: &GridSpec) -> GridSpec;
}

impl GridUnion for GridSpec {
    fn max_span_with(&self, other: &GridSpec) -> GridSpec {
        GridSpec::covering(self.x_min.min(other.x_min), self.x_max().max(other.x_max()), self.points.max(other.points))
            .expect("valid union")
    }
}

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("1  Schrodinger residual", criterion_1),
        ("2  driven residual", criterion_2),
        ("3  transform chain", criterion_3),
        ("4  frequency map", criterion_4),
        ("5  invariant Omega", criterion_5),
        ("6  closed-form agreement", criterion_6),
        ("7  uncertainty preservation", criterion_7),
        ("8  delta equivalence", criterion_8),
        ("9  orthonormality", criterion_9),
        ("10 stationarity/pulsation", criterion_10),
        ("   bundled suite", bundled_suite),
    ];
    let mut all = true;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        all &= outcome.pass;
        println!(
            "[{}] {name}: {} ({:.2}s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if !all {
        std::process::exit(1);
    }
}

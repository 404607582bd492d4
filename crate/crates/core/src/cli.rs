//! Command-line front end. Every command reads one scenario file.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::suite::{self, SuiteKind};
use crate::transforms::GridFunction;
use crate::verify::norm;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tdho", about = "Exact states of time-dependent and driven harmonic oscillators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write sampled wavefunctions (CSV plus JSON sidecar) for each n and t.
    State {
        scenario: PathBuf,
        /// Times to sample; defaults to the scenario's times.
        #[arg(long = "t", allow_negative_numbers = true)]
        times: Vec<f64>,
        /// Quantum numbers; defaults to the scenario's states.
        #[arg(long = "n")]
        states: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the scenario's checks and print the JSON report.
    Verify {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        suite: SuiteKind,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the classical basis and, if driven, the particular solution.
    Classical {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
    },
    /// Print the version.
    Version,
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::State {
            scenario,
            times,
            states,
            out,
        } => cmd_state(&scenario, &times, &states, &out).map(|_| EXIT_PASS),
        Command::Verify { scenario, suite, out } => cmd_verify(&scenario, suite, out.as_deref()),
        Command::Classical { scenario, out, samples } => cmd_classical(&scenario, &out, samples).map(|_| EXIT_PASS),
        Command::Version => {
            println!("tdho {}", env!("CARGO_PKG_VERSION"));
            Ok(EXIT_PASS)
        }
    };
    outcome.unwrap_or_else(|e| {
        match &e {
            Error::Config { path, message } => eprintln!("configuration error at '{path}': {message}"),
            other => eprintln!("error: {other}"),
        }
        EXIT_CONFIG
    })
}

/// 17 significant digits, '.' decimal separator.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::config(dir.display().to_string(), e.to_string()))
}

pub fn write_grid_csv(path: &Path, g: &GridFunction) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Integration(e.to_string()))?;
    let io = |e: csv::Error| Error::Integration(e.to_string());
    w.write_record(["x", "re_psi", "im_psi", "abs2"]).map_err(io)?;
    for (x, v) in g.xs().zip(g.values()) {
        w.write_record([fmt_f64(x), fmt_f64(v.re), fmt_f64(v.im), fmt_f64(v.norm_sqr())])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn time_label(t: f64) -> String {
    format!("{t}")
}

pub fn cmd_state(scenario: &Path, times: &[f64], states: &[usize], out: &Path) -> Result<Vec<PathBuf>> {
    let sc = Scenario::load(scenario)?;
    let times = if times.is_empty() { sc.times.clone() } else { times.to_vec() };
    let states = if states.is_empty() { sc.states.clone() } else { states.to_vec() };
    for (i, &t) in times.iter().enumerate() {
        sc.model
            .check_domain(t)
            .map_err(|e| Error::config(format!("--t[{i}]"), e.to_string()))?;
    }
    create_dir(out)?;
    let mut written = Vec::new();
    for &n in &states {
        let field = sc.field(n)?;
        for &t in &times {
            let grid = sc.grid_for(&[&field], t)?;
            let g = field.sample(grid, t)?;
            g.check_boundary()?;
            let stem = format!("{}_n{}_t{}", sc.name, n, time_label(t));
            let csv_path = out.join(format!("{stem}.csv"));
            write_grid_csv(&csv_path, &g)?;
            let sidecar = json!({
                "scenario": sc.name,
                "n": n,
                "t": t,
                "hbar": sc.units.hbar,
                "unit_mass": sc.units.unit_mass,
                "grid": {"x_min": grid.x_min, "x_max": grid.x_max(), "dx": grid.dx, "points": grid.points},
                "state": field.describe(),
                "norm": norm(&g)?,
                "boundary_ratio": g.boundary_ratio(),
                "columns": ["x", "re_psi", "im_psi", "abs2"],
                "version": env!("CARGO_PKG_VERSION"),
            });
            let json_path = out.join(format!("{stem}.json"));
            fs::write(&json_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
            log::info!("wrote {}", csv_path.display());
            written.push(csv_path);
            written.push(json_path);
        }
    }
    Ok(written)
}

pub fn cmd_verify(scenario: &Path, kind: SuiteKind, out: Option<&Path>) -> Result<i32> {
    let sc = Scenario::load(scenario)?;
    let report = suite::run(&sc, kind);
    let text = report.to_json() + "\n";
    match out {
        Some(path) => fs::write(path, &text)?,
        None => print!("{text}"),
    }
    for r in report.failures() {
        log::warn!("{} {} failed: measured {:?}, threshold {}", r.check, r.params, r.measured, r.threshold);
    }
    Ok(if report.all_pass() { EXIT_PASS } else { EXIT_FAIL })
}

pub fn cmd_classical(scenario: &Path, out: &Path, samples: usize) -> Result<Vec<PathBuf>> {
    let sc = Scenario::load(scenario)?;
    if samples < 2 {
        return Err(Error::config("--samples", "need at least 2 samples"));
    }
    create_dir(out)?;
    let lo = sc.model.t_min().max(sc.basis.t_min());
    let hi = sc.model.t_max().min(sc.basis.t_max());
    let ts: Vec<f64> = (0..samples).map(|k| lo + (hi - lo) * k as f64 / (samples - 1) as f64).collect();
    let io = |e: csv::Error| Error::Integration(e.to_string());

    let basis_path = out.join(format!("{}_basis.csv", sc.name));
    let mut w = csv::Writer::from_path(&basis_path).map_err(io)?;
    w.write_record(["t", "u", "du", "v", "dv", "omega_check"]).map_err(io)?;
    for &t in &ts {
        let b = sc.basis.sample(t)?;
        let omega = sc.basis.omega_at(&sc.model, t)?;
        w.write_record([t, b.u, b.du, b.v, b.dv, omega].map(fmt_f64)).map_err(io)?;
    }
    w.flush()?;
    let mut written = vec![basis_path];

    if let Some(d) = &sc.driven {
        let path = out.join(format!("{}_driven.csv", sc.name));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(["t", "xp", "dxp", "delta"]).map_err(io)?;
        for &t in &ts {
            let s = d.sample(t)?;
            w.write_record([t, s.xp, s.dxp, s.delta].map(fmt_f64)).map_err(io)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert!(!s.contains(','));
        }
    }

    #[test]
    fn parses_commands() {
        let cli = Cli::try_parse_from(["tdho", "verify", "s.json", "--suite", "fast"]).unwrap();
        assert!(matches!(cli.command, Command::Verify { suite: SuiteKind::Fast, .. }));
        let cli = Cli::try_parse_from(["tdho", "state", "s.json", "--t", "-0.5", "--t", "1", "--out", "d"]).unwrap();
        match cli.command {
            Command::State { times, .. } => assert_eq!(times, vec![-0.5, 1.0]),
            _ => panic!(),
        }
        assert!(Cli::try_parse_from(["tdho", "verify", "s.json", "--suite", "slow"]).is_err());
    }

    #[test]
    fn missing_file_is_config_error() {
        let code = run(Cli::try_parse_from(["tdho", "verify", "/nonexistent/x.json"]).unwrap());
        assert_eq!(code, EXIT_CONFIG);
    }
}

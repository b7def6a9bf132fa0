//! The `sesi` command-line harness.
//!
//! Every subcommand reads a flat JSON scenario and writes CSV: `#` metadata
//! lines, one header row, then data with 17 significant digits. Exit codes are
//! 0 (ok), 2 (configuration), 3 (numerical failure), 4 (some compared method
//! failed) and 5 (benchmark calibration).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::diagnostics::{convergence_study, diagnose_trajectory, drift_summary, DiagnosticsRow};
use crate::error::{Error, Result};
use crate::hamiltonian::{SphereNBodyHamiltonian, SplitHamiltonian};
use crate::integrators::{
    dopri45_integrate_with_stats, integrate, DopriConfig, FixedStepMethod, MethodId,
    MidpointSolverConfig,
};
use crate::oracle::{
    azimuth_per_period, benchmark_params, build_benchmark_initial_state, closure_distance,
    oracle_trajectory, OracleParams, BENCHMARK_THETA0,
};
use crate::phase::{BodyState, PhaseState, SphereParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;
pub const EXIT_CALIBRATION: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "sesi",
    version,
    about = "Symplectic integrators for N bodies on a sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one scenario and write the diagnosed trajectory.
    Run(CommonArgs),
    /// Step-size refinement study at a fixed final time.
    Converge(CommonArgs),
    /// Run several methods on the same scenario and summarize their drifts.
    Compare(CommonArgs),
    /// Closed-form benchmark trajectory and closure report.
    Oracle(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (flat JSON).
    pub config: PathBuf,
    /// Output path; a directory for `compare`. Defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress the progress summary on standard error.
    #[arg(long)]
    pub quiet: bool,
    /// Leave wall-clock figures out of the output so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

/// Initial condition: the calibrated benchmark or explicit
/// `[theta, phi, p_theta, p_phi]` rows.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Initial {
    Named(String),
    Explicit(Vec<[f64; 4]>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_bodies: Option<usize>,
    /// Defaults to 2 for the benchmark and 1 otherwise.
    pub mass: Option<f64>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "quarter_pi")]
    pub theta0: f64,
    pub initial: Initial,
    pub method: Option<MethodId>,
    pub methods: Option<Vec<MethodId>>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    pub taus: Option<Vec<f64>>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default)]
    pub midpoint: MidpointSolverConfig,
    #[serde(default)]
    pub dopri: DopriConfig,
    #[serde(default = "default_periods")]
    pub periods: u32,
    #[serde(default = "default_samples_per_period")]
    pub samples_per_period: usize,
    #[serde(default = "default_closure_tau")]
    pub closure_tau: f64,
}

fn one() -> f64 {
    1.0
}
fn quarter_pi() -> f64 {
    BENCHMARK_THETA0
}
fn default_tau() -> f64 {
    0.1
}
fn default_steps() -> usize {
    8000
}
fn default_sample_every() -> usize {
    10
}
fn default_t_final() -> f64 {
    10.0
}
fn default_periods() -> u32 {
    6
}
fn default_samples_per_period() -> usize {
    100
}
fn default_closure_tau() -> f64 {
    0.01
}

pub const DEFAULT_TAUS: [f64; 5] = [0.1, 0.05, 0.025, 0.0125, 0.00625];

/// A validated scenario ready to integrate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: SphereParams,
    pub initial: PhaseState,
    pub oracle: Option<OracleParams>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn is_benchmark(&self) -> Result<bool> {
        match &self.initial {
            Initial::Named(n) if n == "benchmark" => Ok(true),
            Initial::Named(n) => Err(Error::Config(format!("unknown initial condition {n:?}"))),
            Initial::Explicit(_) => Ok(false),
        }
    }

    /// Checks every field and builds the initial state. Benchmark calibration
    /// failures come back as [`Error::Calibration`].
    pub fn scenario(&self) -> Result<Scenario> {
        let config_err = |e: Error| match e {
            Error::Calibration(_) => e,
            e => Error::Config(e.to_string()),
        };
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.n_steps == 0 || self.sample_every == 0 {
            return Err(Error::Config(
                "n_steps and sample_every must be >= 1".into(),
            ));
        }
        self.midpoint.validate().map_err(config_err)?;
        self.dopri.validate().map_err(config_err)?;

        if self.is_benchmark()? {
            let params = SphereParams {
                n_bodies: self.n_bodies.unwrap_or(3),
                mass: self.mass.unwrap_or(benchmark_params().mass),
                radius: self.radius,
                theta0: self.theta0,
            };
            params.validate().map_err(config_err)?;
            if params.n_bodies != 3 || (params.theta0 - BENCHMARK_THETA0).abs() > 1e-12 {
                return Err(Error::Config(
                    "the benchmark needs n_bodies = 3 and theta0 = pi/4".into(),
                ));
            }
            let (initial, oracle) = build_benchmark_initial_state(&params).map_err(config_err)?;
            return Ok(Scenario {
                config: self.clone(),
                params,
                initial,
                oracle: Some(oracle),
            });
        }

        let Initial::Explicit(rows) = &self.initial else {
            unreachable!()
        };
        if rows.is_empty() {
            return Err(Error::Config("explicit initial state has no bodies".into()));
        }
        if let Some(n) = self.n_bodies {
            if n != rows.len() {
                return Err(Error::Config(format!(
                    "n_bodies = {n} but {} initial rows given",
                    rows.len()
                )));
            }
        }
        let params = SphereParams {
            n_bodies: rows.len(),
            mass: self.mass.unwrap_or(1.0),
            radius: self.radius,
            theta0: self.theta0,
        };
        params.validate().map_err(config_err)?;
        let initial = PhaseState::new(
            0.0,
            rows.iter()
                .map(|r| BodyState::new(r[0], r[1], r[2], r[3]))
                .collect(),
        );
        if let Err(v) = crate::phase::validate_state(&initial, &params) {
            return Err(Error::Config(format!("invalid initial state: {v}")));
        }
        Ok(Scenario {
            config: self.clone(),
            params,
            initial,
            oracle: None,
        })
    }

    fn method(&self) -> Result<MethodId> {
        self.method
            .ok_or_else(|| Error::Config("missing field `method`".into()))
    }
}

fn fixed_step(method: MethodId, cfg: &ScenarioConfig) -> Option<FixedStepMethod> {
    match method {
        MethodId::Sesi2 => Some(FixedStepMethod::Sesi2),
        MethodId::Sesi4 => Some(FixedStepMethod::Sesi4),
        MethodId::Midpoint => Some(FixedStepMethod::Midpoint(cfg.midpoint)),
        MethodId::Dopri45 => None,
    }
}

/// Diagnosed trajectory of one method.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: MethodId,
    pub samples: Vec<PhaseState>,
    pub rows: Vec<DiagnosticsRow>,
    pub wall_clock: f64,
    /// Accepted steps (fixed-step methods: `n_steps`).
    pub steps: usize,
}

/// Integrates `sc` with `method` for `n_steps * tau`, timing only the solver.
pub fn run_method(sc: &Scenario, method: MethodId) -> Result<MethodRun> {
    let cfg = &sc.config;
    let h = SphereNBodyHamiltonian::new(sc.params)?;
    let start = Instant::now();
    let (samples, steps) = match fixed_step(method, cfg) {
        Some(m) => (
            integrate(&sc.initial, &h, m, cfg.tau, cfg.n_steps, cfg.sample_every)?,
            cfg.n_steps,
        ),
        None => {
            let t_end = sc.initial.t + cfg.n_steps as f64 * cfg.tau;
            let cadence = cfg.sample_every as f64 * cfg.tau;
            let run = dopri45_integrate_with_stats(&sc.initial, &h, t_end, &cfg.dopri, cadence)?;
            (run.samples, run.accepted)
        }
    };
    let wall_clock = start.elapsed().as_secs_f64();
    let rows = diagnose_trajectory(&samples, &h, &sc.params)?;
    Ok(MethodRun {
        method,
        samples,
        rows,
        wall_clock,
        steps,
    })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_meta(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "# {key} = {value}");
}

fn scenario_meta(out: &mut String, sc: &Scenario) {
    let p = &sc.params;
    push_meta(out, "n_bodies", p.n_bodies);
    push_meta(out, "mass", num(p.mass));
    push_meta(out, "radius", num(p.radius));
    push_meta(out, "theta0", num(p.theta0));
    if let Some(o) = &sc.oracle {
        oracle_meta(out, o);
    }
}

fn oracle_meta(out: &mut String, o: &OracleParams) {
    push_meta(out, "oracle_e0", num(o.e0));
    push_meta(out, "oracle_l", num(o.l));
    push_meta(out, "oracle_amplitude", num(o.amplitude));
    push_meta(out, "momentum_scale", num(o.momentum_scale));
    push_meta(out, "energy_scale", num(o.energy_scale));
    push_meta(out, "time_scale", num(o.time_scale));
    push_meta(out, "radial_period", num(o.radial_period()));
}

/// The trajectory CSV of one run.
pub fn trajectory_csv(sc: &Scenario, run: &MethodRun, timing: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sesi run");
    push_meta(&mut out, "method", run.method);
    push_meta(&mut out, "tau", num(sc.config.tau));
    push_meta(&mut out, "n_steps", sc.config.n_steps);
    push_meta(&mut out, "sample_every", sc.config.sample_every);
    scenario_meta(&mut out, sc);
    push_meta(&mut out, "accepted_steps", run.steps);
    if timing {
        push_meta(&mut out, "wall_clock_s", num(run.wall_clock));
        push_meta(
            &mut out,
            "steps_per_s",
            num(run.steps as f64 / run.wall_clock),
        );
    }

    let n = sc.params.n_bodies;
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for f in ["theta", "phi", "p_theta", "p_phi"] {
            header.push(format!("{f}_{i}"));
        }
    }
    header.extend(["E", "dE", "Lx", "Ly", "Lz"].map(String::from));
    for i in 0..n {
        header.push(format!("x_{i}"));
        header.push(format!("y_{i}"));
    }
    let _ = writeln!(out, "{}", header.join(","));

    for (s, r) in run.samples.iter().zip(&run.rows) {
        let mut cols = vec![num(s.t)];
        for b in &s.bodies {
            cols.extend(b.components().map(num));
        }
        cols.extend([r.energy, r.delta_e, r.l_vec[0], r.l_vec[1], r.l_vec[2]].map(num));
        for &(x, y) in &r.bodies_xy {
            cols.push(num(x));
            cols.push(num(y));
        }
        let _ = writeln!(out, "{}", cols.join(","));
    }
    out
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Config(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn cmd_run(args: &CommonArgs) -> Result<()> {
    let cfg = ScenarioConfig::load(&args.config)?;
    let sc = cfg.scenario()?;
    let method = cfg.method()?;
    let run = run_method(&sc, method)?;
    emit(
        args.out.as_deref(),
        &trajectory_csv(&sc, &run, !args.no_timing),
    )?;
    if !args.quiet {
        let d = drift_summary(&run.rows, sc.initial.t + 0.5 * cfg.n_steps as f64 * cfg.tau);
        eprintln!(
            "{method}: {} rows, max|dE| = {:.3e}, {:.3} s",
            run.rows.len(),
            d.max_de_first.max(d.max_de_second),
            run.wall_clock
        );
    }
    Ok(())
}

pub fn cmd_converge(args: &CommonArgs) -> Result<()> {
    let cfg = ScenarioConfig::load(&args.config)?;
    let sc = cfg.scenario()?;
    let method = cfg.method()?;
    let Some(m) = fixed_step(method, &cfg) else {
        return Err(Error::Config(
            "convergence studies need a fixed-step method".into(),
        ));
    };
    let taus = cfg.taus.clone().unwrap_or_else(|| DEFAULT_TAUS.to_vec());
    let h = SphereNBodyHamiltonian::new(sc.params)?;
    let study = convergence_study(&sc.initial, &h, m, &taus, cfg.t_final)?;

    let mut out = String::new();
    let _ = writeln!(out, "# sesi converge");
    push_meta(&mut out, "method", method);
    push_meta(&mut out, "t_final", num(cfg.t_final));
    scenario_meta(&mut out, &sc);
    match study.slope {
        Some(s) => push_meta(&mut out, "slope", num(s)),
        None => push_meta(&mut out, "slope", "undefined"),
    }
    let _ = writeln!(out, "tau,diff");
    for (tau, diff) in &study.diffs {
        let _ = writeln!(out, "{},{}", num(*tau), num(*diff));
    }
    emit(args.out.as_deref(), &out)?;
    if !args.quiet {
        match study.slope {
            Some(s) => eprintln!("{method}: fitted order {s:.3}"),
            None => eprintln!("{method}: all differences zero, order undefined"),
        }
    }
    Ok(())
}

pub fn cmd_compare(args: &CommonArgs) -> Result<bool> {
    let cfg = ScenarioConfig::load(&args.config)?;
    let methods = cfg
        .methods
        .clone()
        .ok_or_else(|| Error::Config("missing field `methods`".into()))?;
    if methods.len() < 2 {
        return Err(Error::Config("compare needs at least 2 methods".into()));
    }
    let sc = cfg.scenario()?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    let t_split = sc.initial.t + 0.5 * cfg.n_steps as f64 * cfg.tau;
    let timing = !args.no_timing;

    let mut summary = String::new();
    let _ = writeln!(summary, "# sesi compare");
    push_meta(&mut summary, "tau", num(cfg.tau));
    push_meta(&mut summary, "n_steps", cfg.n_steps);
    scenario_meta(&mut summary, &sc);
    let mut header = "method,status,max_dE_first_half,max_dE_second_half,dLx,dLy,dLz".to_string();
    if timing {
        header.push_str(",wall_clock_s,steps_per_s");
    }
    let _ = writeln!(summary, "{header}");

    let mut all_ok = true;
    for &method in &methods {
        match run_method(&sc, method) {
            Ok(run) => {
                if let Some(dir) = &args.out {
                    let path = dir.join(format!("{method}.csv"));
                    emit(Some(&path), &trajectory_csv(&sc, &run, timing))?;
                }
                let d = drift_summary(&run.rows, t_split);
                let mut line = format!(
                    "{method},ok,{},{},{},{},{}",
                    num(d.max_de_first),
                    num(d.max_de_second),
                    num(d.l_drift[0]),
                    num(d.l_drift[1]),
                    num(d.l_drift[2])
                );
                if timing {
                    let _ = write!(
                        line,
                        ",{},{}",
                        num(run.wall_clock),
                        num(run.steps as f64 / run.wall_clock)
                    );
                }
                let _ = writeln!(summary, "{line}");
                if !args.quiet {
                    eprintln!("{method}: ok ({:.3} s)", run.wall_clock);
                }
            }
            Err(e) => {
                all_ok = false;
                let mut line = format!("{method},failed,,,,,");
                if timing {
                    line.push_str(",,");
                }
                let _ = writeln!(summary, "{line}");
                eprintln!("{method}: {e}");
            }
        }
    }
    let summary_path = args.out.as_ref().map(|d| d.join("summary.csv"));
    emit(summary_path.as_deref(), &summary)?;
    Ok(all_ok)
}

pub fn cmd_oracle(args: &CommonArgs) -> Result<()> {
    let cfg = ScenarioConfig::load(&args.config)?;
    if !cfg.is_benchmark()? {
        return Err(Error::Config(
            "the oracle needs the benchmark initial condition".into(),
        ));
    }
    if cfg.samples_per_period == 0 || cfg.periods == 0 {
        return Err(Error::Config(
            "periods and samples_per_period must be >= 1".into(),
        ));
    }
    if !(cfg.closure_tau > 0.0) {
        return Err(Error::Config("closure_tau must be > 0".into()));
    }
    let sc = cfg.scenario()?;
    let oracle = sc.oracle.expect("benchmark scenarios carry an oracle");
    let h = SphereNBodyHamiltonian::new(sc.params)?;

    let period = oracle.radial_period();
    let n = cfg.periods as usize * cfg.samples_per_period;
    let dt = period / cfg.samples_per_period as f64;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    let traj = oracle_trajectory(&oracle, sc.initial.bodies[0].phi, &times)?;
    let advance = azimuth_per_period(&oracle, 1e-13)?;
    let closure = closure_distance(&sc.initial, &h, &oracle, cfg.closure_tau, cfg.periods)?;

    let mut out = String::new();
    let _ = writeln!(out, "# sesi oracle");
    scenario_meta(&mut out, &sc);
    push_meta(&mut out, "energy", num(h.energy(&sc.initial)?));
    push_meta(&mut out, "azimuth_per_period", num(advance));
    push_meta(
        &mut out,
        "azimuth_per_period_error",
        num(advance - PI / 3.0),
    );
    push_meta(&mut out, "closure_tau", num(cfg.closure_tau));
    push_meta(&mut out, "closure_distance", num(closure));
    let _ = writeln!(out, "t,theta,phi,x,y");
    for s in &traj {
        let b = &s.bodies[0];
        let r = sc.params.radius * b.theta.sin();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(s.t),
            num(b.theta),
            num(b.phi),
            num(r * b.phi.cos()),
            num(r * b.phi.sin())
        );
    }
    emit(args.out.as_deref(), &out)?;
    if !args.quiet {
        eprintln!(
            "azimuth per period {advance:.15}, closure distance {closure:.3e} at tau = {}",
            cfg.closure_tau
        );
    }
    Ok(())
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config(_) => EXIT_CONFIG,
        Error::Calibration(_) => EXIT_CALIBRATION,
        _ => EXIT_NUMERICAL,
    }
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Converge(a) => cmd_converge(a).map(|_| true),
        Command::Compare(a) => cmd_compare(a),
        Command::Oracle(a) => cmd_oracle(a).map(|_| true),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_PARTIAL,
        Err(e) => {
            match e.step_index() {
                Some(k) => eprintln!("error at step {k}: {}", e.root()),
                None => eprintln!("error: {e}"),
            }
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_benchmark_defaults() {
        let cfg =
            ScenarioConfig::from_json(r#"{"initial": "benchmark", "method": "sesi2"}"#).unwrap();
        assert_eq!(cfg.tau, 0.1);
        assert_eq!(cfg.n_steps, 8000);
        assert_eq!(cfg.sample_every, 10);
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc.params.mass, 2.0);
        assert!(sc.oracle.is_some());
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"initial": "benchmark", "bogus": 1}"#,
            r#"{"initial": "somewhere"}"#,
            r#"{"initial": "benchmark", "n_bodies": 4}"#,
            r#"{"initial": "benchmark", "theta0": 1.0}"#,
            r#"{"initial": "benchmark", "tau": 0}"#,
            r#"{"initial": "benchmark", "sample_every": 0}"#,
            r#"{"initial": [], "method": "sesi2"}"#,
            r#"{"initial": [[0.0, 0.0, 0.0, 0.0]]}"#,
            r#"{"initial": [[1.0, 0.0, 0.0, 0.0]], "n_bodies": 2}"#,
            r#"{"initial": [[1.0, 0.0, 0.0, 0.0]], "midpoint": {"tolerance": 0.0, "max_iterations": 5}}"#,
        ];
        for text in bad {
            let err = ScenarioConfig::from_json(text).and_then(|c| c.scenario().map(|_| ()));
            assert!(matches!(err, Err(Error::Config(_))), "{text}: {err:?}");
        }
        let err = ScenarioConfig::from_json(r#"{"initial": "benchmark", "mass": 1.0}"#)
            .unwrap()
            .scenario()
            .unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CALIBRATION);
    }

    #[test]
    fn exit_codes_look_through_wrappers() {
        let e = Error::Singularity {
            body: 0,
            theta: 0.0,
        }
        .at_step(3);
        assert_eq!(exit_code(&e), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
    }

    #[test]
    fn trajectory_rows_follow_the_count_contract() {
        let cfg = ScenarioConfig::from_json(
            r#"{"initial": [[1.0, 0.0, 0.1, 0.2], [2.0, 1.0, 0.0, -0.1]], "method": "sesi2",
                "tau": 0.05, "n_steps": 25, "sample_every": 5}"#,
        )
        .unwrap();
        let sc = cfg.scenario().unwrap();
        for m in [
            MethodId::Sesi2,
            MethodId::Sesi4,
            MethodId::Midpoint,
            MethodId::Dopri45,
        ] {
            let run = run_method(&sc, m).unwrap();
            assert_eq!(run.rows.len(), 25 / 5 + 1);
            let csv = trajectory_csv(&sc, &run, false);
            let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
            assert_eq!(data.len(), 1 + 6);
            assert_eq!(data[0].split(',').count(), 1 + 8 + 5 + 4);
        }
    }
}

mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use fracwave::fvp_core::{
    residual, solve_direct, solve_direct_verified, terminal_check, Scenario, Source, TimeSeries,
};
use fracwave::inverse_coefficient::{
    closed_loop_defect, default_profiles, forward_bound, solve_p, stability_ratio, stability_sweep,
    synthesize_caputo_data, IP2Problem, ObservationData,
};
use fracwave::inverse_source::{ip1_noise_study, solve_ip1, IP1Problem};
use fracwave::operator_models::{synthesize, CoefficientVector};
use fracwave::rho_zeros::{
    default_eta_max, default_theta, delta_sign_convention, eta_bound, find_roots, ConventionLog,
    RhoParams,
};
use fracwave::specfun::MittagLeffler;
use fracwave::verify::run_suite;

use config::{HSource, Ip2DataConfig, Profile, RunConfig};
use output::{mode_header, mode_rows, LinePlot, OutputDir};

const DEFAULT_OUT: &str = "fracwave_out";

/// Largest node-wise gap between the assembled IP1 trajectory and a direct
/// solve with the reconstructed source, relative to the trajectory size.
const IP1_TWO_PATH_TOL: f64 = 1e-8;
/// Largest accepted closed-loop defect of a recovered p.
const IP2_CLOSED_LOOP_TOL: f64 = 1e-2;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(fracwave::Error),
}

impl From<fracwave::Error> for CliError {
    fn from(e: fracwave::Error) -> Self {
        CliError::Solver(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Solver(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(e) if e.is_admissibility() => 3,
            CliError::Solver(e) if e.is_numerical() => 4,
            CliError::Solver(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "fracwave", version, about = "Final value and inverse problems for fractional diffusion-wave equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate E_{alpha,beta}(z)
    Ml {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Locate the positive zeros of rho
    RhoRoots {
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long)]
        eta_max: Option<f64>,
        #[arg(long, default_value_t = 4000)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound on the zeros of rho for gamma > 0
    EtaBound {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the final value problem
    Direct {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct a time-independent source from a snapshot
    Ip1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the time profile of a separable source
    Ip2 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct Summary {
    command: &'static str,
    version: &'static str,
    status: &'static str,
    exit_code: u8,
    error: Option<String>,
    inputs: Value,
    admissibility: Value,
    defects: Value,
    timings: Option<BTreeMap<&'static str, f64>>,
    convention_log: Option<ConventionLog>,
}

struct Run {
    out: OutputDir,
    summary: Summary,
    record_timings: bool,
    timings: BTreeMap<&'static str, f64>,
}

impl Run {
    fn new(command: &'static str, dir: &Path, inputs: Value, record_timings: bool) -> Result<Self, CliError> {
        Ok(Self {
            out: OutputDir::create(dir)?,
            summary: Summary {
                command,
                version: env!("CARGO_PKG_VERSION"),
                status: "ok",
                exit_code: 0,
                error: None,
                inputs,
                admissibility: Value::Null,
                defects: Value::Null,
                timings: None,
                convention_log: None,
            },
            record_timings,
            timings: BTreeMap::new(),
        })
    }

    fn time(&mut self, phase: &'static str, start: Instant) {
        self.timings.insert(phase, start.elapsed().as_secs_f64());
    }

    fn finish(mut self, result: Result<(), CliError>) -> ExitCode {
        let code = match &result {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                self.summary.status = "error";
                self.summary.error = Some(e.to_string());
                if let CliError::Solver(s) = e {
                    if s.is_admissibility() {
                        self.summary.admissibility = json!({ "admissible": false, "violation": s.to_string() });
                    }
                }
                e.exit_code()
            }
        };
        self.summary.exit_code = code;
        if self.record_timings {
            self.summary.timings = Some(std::mem::take(&mut self.timings));
        }
        if let Err(e) = self.out.json("summary.json", &self.summary) {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
        ExitCode::from(code)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Ml { alpha, beta, z, out } => {
            let inputs = json!({ "alpha": alpha, "beta": beta, "z": z });
            with_run("ml", out.as_deref(), inputs, false, |run| ml(run, alpha, beta, z))
        }
        Command::RhoRoots {
            alpha,
            gamma,
            eta_max,
            resolution,
            out,
        } => {
            let inputs = json!({ "alpha": alpha, "gamma": gamma, "eta_max": eta_max, "resolution": resolution });
            with_run("rho-roots", out.as_deref(), inputs, false, |run| {
                rho_roots(run, alpha, gamma, eta_max, resolution)
            })
        }
        Command::EtaBound { alpha, gamma, theta, out } => {
            let inputs = json!({ "alpha": alpha, "gamma": gamma, "theta": theta });
            with_run("eta-bound", out.as_deref(), inputs, false, |run| {
                eta_bound_cmd(run, alpha, gamma, theta)
            })
        }
        Command::Direct { config, out } => with_config("direct", &config, out, direct),
        Command::Ip1 { config, out } => with_config("ip1", &config, out, ip1),
        Command::Ip2 { config, out } => with_config("ip2", &config, out, ip2),
        Command::Verify { out } => with_run("verify", out.as_deref(), Value::Null, false, verify),
    }
}

fn with_run(
    command: &'static str,
    out: Option<&Path>,
    inputs: Value,
    record_timings: bool,
    body: impl FnOnce(&mut Run) -> Result<(), CliError>,
) -> ExitCode {
    let dir = out.unwrap_or(Path::new(DEFAULT_OUT));
    let mut run = match Run::new(command, dir, inputs, record_timings) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let result = body(&mut run);
    run.finish(result)
}

fn with_config(
    command: &'static str,
    path: &Path,
    out: Option<PathBuf>,
    body: fn(&RunConfig, &mut Run) -> Result<(), CliError>,
) -> ExitCode {
    let cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            let dir = out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            let inputs = json!({ "config_path": path });
            return with_run(command, Some(&dir), inputs, false, |_| Err(e));
        }
    };
    let dir = out
        .or_else(|| cfg.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let inputs = serde_json::to_value(&cfg).unwrap_or(Value::Null);
    with_run(command, Some(&dir), inputs, cfg.output.record_timings, |run| {
        if let Some(n) = cfg.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
        }
        body(&cfg, run)
    })
}

fn ml(run: &mut Run, alpha: f64, beta: f64, z: f64) -> Result<(), CliError> {
    let (v, regime) = MittagLeffler::new(alpha, beta)?.eval_with_regime(z)?;
    println!("{v:.10}");
    run.summary.defects = json!({ "value": v, "regime": regime });
    Ok(())
}

fn rho_roots(run: &mut Run, alpha: f64, gamma: f64, eta_max: Option<f64>, resolution: usize) -> Result<(), CliError> {
    let p = RhoParams::new(alpha, gamma)?;
    let start = Instant::now();
    let report = find_roots(p, eta_max.unwrap_or_else(|| default_eta_max(p)), resolution)?;
    run.time("scan", start);
    let header: Vec<String> = ["index", "eta", "rho", "tangential"].map(String::from).to_vec();
    let rows: Vec<Vec<Option<f64>>> = report
        .roots
        .iter()
        .enumerate()
        .map(|(j, r)| {
            vec![
                Some(j as f64),
                Some(r.eta),
                Some(r.residual),
                Some(if r.tangential { 1.0 } else { 0.0 }),
            ]
        })
        .collect();
    run.out.csv("roots.csv", &header, &rows)?;
    run.out.json("roots.json", &report)?;
    println!("{} roots in (0, {:e}]", report.roots.len(), report.eta_max);
    for r in &report.roots {
        println!("  eta = {:.12e}", r.eta);
    }
    run.summary.defects = json!({
        "root_count": report.roots.len(),
        "max_residual": report.roots.iter().map(|r| r.residual.abs()).fold(0.0, f64::max),
    });
    Ok(())
}

fn eta_bound_cmd(run: &mut Run, alpha: f64, gamma: f64, theta: Option<f64>) -> Result<(), CliError> {
    let p = RhoParams::new(alpha, gamma)?;
    let (bound, constants) = eta_bound(p, theta.unwrap_or_else(|| default_theta(alpha)))?;
    run.out.json("eta_bound.json", &json!({ "bound": bound, "constants": constants }))?;
    println!("{bound:.10e}");
    run.summary.defects = json!({ "bound": bound });
    Ok(())
}

fn convention(sc: &Scenario) -> Result<ConventionLog, CliError> {
    let tf = sc.t_final();
    Ok(delta_sign_convention(sc, &[0.25 * tf, 0.5 * tf, 0.75 * tf])?)
}

fn write_modes(cfg: &RunConfig, run: &Run, sc: &Scenario, t: &[f64], modes: &[Vec<f64>]) -> Result<(), CliError> {
    if cfg.output.csv() {
        run.out.csv("u_modes.csv", &mode_header(modes.len()), &mode_rows(t, modes))?;
    }
    if cfg.output.plot {
        let probes = cfg.probe_points();
        let values: Vec<Vec<f64>> = (0..t.len())
            .map(|i| {
                let c = CoefficientVector::new(modes.iter().map(|m| m[i]).collect())?;
                Ok(synthesize(&c, sc.eigensystem(), &probes))
            })
            .collect::<Result<_, CliError>>()?;
        let series = probes
            .iter()
            .enumerate()
            .map(|(k, x)| (format!("x = {x}"), t.to_vec(), values.iter().map(|v| v[k]).collect()))
            .collect();
        let plot = LinePlot {
            title: "u(t, x)".into(),
            x_label: "t".into(),
            series,
        };
        run.out.svg("u.svg", &plot)?;
    }
    Ok(())
}

fn direct(cfg: &RunConfig, run: &mut Run) -> Result<(), CliError> {
    let sc = cfg.scenario(true)?;
    run.summary.admissibility = json!({ "admissible": true, "lambda": sc.lambda_report() });
    let start = Instant::now();
    let (sol, terminal) = if cfg.verification {
        solve_direct_verified(&sc)?
    } else {
        let s = solve_direct(&sc)?;
        let d = terminal_check(&sc, &s);
        (s, d)
    };
    run.time("solve", start);
    let residual_max = if cfg.verification {
        let start = Instant::now();
        let r = residual(&sc, &sol)?.into_iter().fold(0.0, f64::max);
        run.time("residual", start);
        Some(r)
    } else {
        None
    };
    run.summary.defects = json!({ "terminal": terminal, "residual_max": residual_max });
    run.summary.convention_log = Some(convention(&sc)?);
    write_modes(cfg, run, &sc, &sol.trajectory.t, &sol.trajectory.modes)?;
    println!(
        "solved {} modes on {} nodes; terminal defects {:.3e} / {:.3e}",
        sc.n_modes(),
        sc.grid().len(),
        terminal.value,
        terminal.slope
    );
    Ok(())
}

fn snapshot(cfg: &RunConfig, sc: &Scenario, h: &HSource, xi: f64) -> Result<CoefficientVector, CliError> {
    let es = sc.eigensystem();
    Ok(match h {
        HSource::Coefficients { values } => CoefficientVector::new(values.clone())?.resized(es.n_modes()),
        HSource::Preset { data } => data.coefficients(es)?,
        HSource::Forward { refine } => {
            let f = cfg
                .f(es)?
                .ok_or_else(|| CliError::Config("h source 'forward' needs data.f".into()))?;
            let fine = sc.with_grid(sc.grid().refined((*refine).max(1))?, Source::Constant(f))?;
            let sol = solve_direct(&fine)?;
            let values = (0..fine.n_modes())
                .map(|n| fine.mode_response(n)?.value_at(&sol.modes[n], xi))
                .collect::<fracwave::Result<Vec<f64>>>()?;
            CoefficientVector::new(values)?
        }
    })
}

fn ip1(cfg: &RunConfig, run: &mut Run) -> Result<(), CliError> {
    let block = cfg
        .ip1
        .as_ref()
        .ok_or_else(|| CliError::Config("the ip1 command needs an ip1 block".into()))?;
    let sc = cfg.scenario(false)?;
    run.summary.admissibility = json!({ "lambda": sc.lambda_report() });
    let h = snapshot(cfg, &sc, &block.h, block.xi)?;
    let prob = IP1Problem::new(sc.clone(), block.xi, h)?;
    run.summary.admissibility = json!({
        "admissible": true,
        "lambda": sc.lambda_report(),
        "xi": prob.xi_report(),
    });
    let start = Instant::now();
    let sol = solve_ip1(&prob)?;
    run.time("reconstruct", start);

    let two_path = if cfg.verification {
        let check = solve_direct(&sc.with_source(Source::Constant(sol.f.clone()))?)?;
        let scale = sol.u.max_abs().max(1e-300);
        let gap = check
            .trajectory
            .modes
            .iter()
            .flatten()
            .zip(sol.u.modes.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        if !(gap <= IP1_TWO_PATH_TOL) {
            return Err(fracwave::Error::VerificationFailure(format!(
                "assembled trajectory differs from the direct solve by {gap:e}"
            ))
            .into());
        }
        Some(gap)
    } else {
        None
    };
    run.summary.defects = json!({
        "snapshot": sol.snapshot_defect,
        "terminal": sol.terminal_defect,
        "two_path": two_path,
        "conditioning": sol.conditioning,
        "conditioning_mode": sol.conditioning_mode,
    });
    run.summary.convention_log = Some(convention(&sc)?);

    if cfg.output.csv() {
        let header: Vec<String> = ["n", "lambda_n", "f_n"].map(String::from).to_vec();
        let rows: Vec<Vec<Option<f64>>> = (0..sc.n_modes())
            .map(|n| vec![Some((n + 1) as f64), Some(sc.lambda(n)), Some(sol.f.get(n))])
            .collect();
        run.out.csv("f.csv", &header, &rows)?;
    }
    write_modes(cfg, run, &sc, &sol.u.t, &sol.u.modes)?;

    if let Some(noise) = &block.noise {
        let seed = cfg.effective_seed()?;
        let start = Instant::now();
        let studies = noise
            .levels
            .iter()
            .map(|&l| ip1_noise_study(&prob, l, noise.trials, seed))
            .collect::<fracwave::Result<Vec<_>>>()?;
        run.time("noise_study", start);
        if cfg.output.json() {
            run.out.json("noise.json", &studies)?;
        }
    }
    println!(
        "reconstructed f on {} modes; conditioning {:.3e} at mode index {}",
        sc.n_modes(),
        sol.conditioning,
        sol.conditioning_mode
    );
    Ok(())
}

fn ip2(cfg: &RunConfig, run: &mut Run) -> Result<(), CliError> {
    let block = cfg
        .ip2
        .as_ref()
        .ok_or_else(|| CliError::Config("the ip2 command needs an ip2 block".into()))?;
    let sc = cfg.scenario(false)?;
    run.summary.admissibility = json!({ "lambda": sc.lambda_report() });
    let es = sc.eigensystem();
    let f = cfg
        .f(es)?
        .ok_or_else(|| CliError::Config("the ip2 command needs data.f".into()))?;
    let functional = cfg.functional(es)?;
    let grid = sc.grid();
    let profile = cfg.data.p.as_ref();
    let analytic = |p: &Profile| -> Option<Box<dyn Fn(f64) -> f64>> {
        let p = p.clone();
        let tf = grid.t_final();
        p.eval(0.0, tf)?;
        Some(Box::new(move |t| p.eval(t, tf).unwrap_or(0.0)))
    };

    let start = Instant::now();
    let data = match &block.data {
        Ip2DataConfig::Forward { refine } => {
            let p = profile
                .and_then(analytic)
                .ok_or_else(|| CliError::Config("forward data needs an analytic data.p profile".into()))?;
            ObservationData::CaputoH(synthesize_caputo_data(&sc, &f, p, &functional, (*refine).max(1))?)
        }
        Ip2DataConfig::CaputoValues { values } => {
            ObservationData::CaputoH(TimeSeries::new(grid.nodes().to_vec(), values.clone())?)
        }
        Ip2DataConfig::HValues { values } => ObservationData::H(TimeSeries::new(grid.nodes().to_vec(), values.clone())?),
    };
    run.time("data", start);
    let prob = IP2Problem::new(sc.clone(), f, functional, data)?;
    run.summary.admissibility = json!({
        "admissible": true,
        "lambda": sc.lambda_report(),
        "phi_f": prob.phi_f(),
        "functional_margin": sc.tolerances().functional_margin,
    });
    let start = Instant::now();
    let sol = solve_p(&prob)?;
    run.time("solve", start);

    let closed_loop = if cfg.verification {
        let d = closed_loop_defect(&prob, &sol)?;
        if !(d <= IP2_CLOSED_LOOP_TOL) {
            return Err(fracwave::Error::VerificationFailure(format!(
                "recovered p reproduces the data only to {d:e}"
            ))
            .into());
        }
        Some(d)
    } else {
        None
    };
    let ratio = stability_ratio(&prob, &sol)?;
    let bound = forward_bound(&prob)?;
    let sweep = if block.sweep {
        let start = Instant::now();
        let s = stability_sweep(&prob, &default_profiles(grid.t_final()))?;
        run.time("sweep", start);
        Some(s)
    } else {
        None
    };
    let truth: Option<Vec<f64>> = profile.map(|p| p.sample(grid)).transpose()?.map(|s| s.values);
    let recovery_error = truth.as_ref().map(|tv| {
        let scale = tv.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        sol.p.values.iter().zip(tv).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
    });

    if cfg.output.csv() {
        let header: Vec<String> = ["t", "p_recovered", "p_true"].map(String::from).to_vec();
        let rows: Vec<Vec<Option<f64>>> = (0..sol.p.len())
            .map(|i| vec![Some(sol.p.t[i]), Some(sol.p.values[i]), truth.as_ref().map(|v| v[i])])
            .collect();
        run.out.csv("p.csv", &header, &rows)?;
    }
    if cfg.output.json() {
        run.out.json("ratio.json", &json!({ "ratio": ratio, "forward_bound": bound, "sweep": sweep }))?;
        run.out.json(
            "system_diag.json",
            &json!({
                "condition": sol.condition,
                "residual": sol.residual,
                "phi_f": sol.phi_f,
                "closed_loop_defect": closed_loop,
            }),
        )?;
    }
    run.summary.defects = json!({
        "residual": sol.residual,
        "condition": sol.condition,
        "closed_loop": closed_loop,
        "recovery_error": recovery_error,
    });
    run.summary.convention_log = Some(convention(&sc)?);
    println!(
        "recovered p on {} nodes; condition {:.3e}, residual {:.3e}",
        sol.p.len(),
        sol.condition,
        sol.residual
    );
    Ok(())
}

fn verify(run: &mut Run) -> Result<(), CliError> {
    let checks = run_suite()?;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<28} {:.3e} (limit {:.1e})", c.name, c.value, c.limit);
    }
    run.out.json("verify.json", &checks)?;
    run.summary.defects = serde_json::to_value(&checks).unwrap_or(Value::Null);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(fracwave::Error::VerificationFailure(format!("failed checks: {}", failed.join(", "))).into())
    }
}

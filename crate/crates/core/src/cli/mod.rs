//! `fracinv` command line: config resolution, subcommand pipelines and artifacts.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

pub use config::{parse_ladder, ConfigFile, RunConfig};
pub use output::{format_g, RunManifest};

use crate::error::{Error, Result};
use crate::estimates::{compute_constants, compute_constants_with, verify_bounds};
use crate::forward::{add_noise, solve_forward, synthesize_data, synthesize_fine};
use crate::inverse::{solve_inverse_with, InverseSetup, OUTSIDE_REGIME};
use crate::problem::{ProblemSpec, Trace};
use crate::specfun::{mittag_leffler, MLParams};
use crate::verify::{
    convergence_study, h_error, manufactured_case, u_error, ManufacturedCase, StudyTarget,
};

/// Worker-count override for the rayon pool.
pub const THREADS_ENV: &str = "FRACINV_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "fracinv",
    version,
    about = "Source recovery for time-fractional subdiffusion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the direct problem with the case's source and write the trace.
    Forward(RunArgs),
    /// Produce trace data (optionally noisy, optionally on a finer grid).
    Synthesize(RunArgs),
    /// Recover the source from the trace.
    Invert(RunArgs),
    /// Run a grid-refinement study on a manufactured case.
    Verify(RunArgs),
    /// Evaluate the theorem constants and the smallness condition.
    CheckConditions(RunArgs),
    /// Print E_{alpha,mu}(z).
    MlEval(MlArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; flags take precedence over its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub l0: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "K")]
    pub modes: Option<usize>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub noise_level: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub dump_full: bool,
    #[arg(long)]
    pub dump_modes: bool,
    #[arg(long)]
    pub fine_factor: Option<usize>,
    /// CSV `t,x,psi` replacing the case's analytic trace.
    #[arg(long)]
    pub psi_file: Option<PathBuf>,
    /// `forward` or `inverse`.
    #[arg(long)]
    pub target: Option<String>,
    /// Refinement levels, e.g. `33x33,65x65,129x129`.
    #[arg(long)]
    pub ladder: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct MlArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
    pub z: Vec<f64>,
}

impl RunArgs {
    fn to_file(&self) -> Result<ConfigFile> {
        let target = match self.target.as_deref() {
            None => None,
            Some("forward") => Some(StudyTarget::Forward),
            Some("inverse") => Some(StudyTarget::Inverse),
            Some(other) => {
                return Err(Error::Config(format!(
                    "target must be `forward` or `inverse`, got `{other}`"
                )))
            }
        };
        Ok(ConfigFile {
            case: self.case.clone(),
            alpha: self.alpha,
            t_final: self.t_final,
            l0: self.l0,
            epsilon: self.epsilon,
            modes: self.modes,
            nt: self.nt,
            nx: self.nx,
            ny: self.ny,
            tol: self.tol,
            max_iter: self.max_iter,
            noise_level: self.noise_level,
            seed: self.seed,
            output: self.output.clone(),
            dump_full: self.dump_full.then_some(true),
            dump_modes: self.dump_modes.then_some(true),
            fine_factor: self.fine_factor,
            psi_file: self.psi_file.clone(),
            target,
            ladder: self.ladder.as_deref().map(parse_ladder).transpose()?,
        })
    }

    /// Config file (if any) overlaid with the flags.
    pub fn resolve(&self, command: &str) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        RunConfig::resolve(command, base.overlay(self.to_file()?))
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Forward(_) => "forward",
            Command::Synthesize(_) => "synthesize",
            Command::Invert(_) => "invert",
            Command::Verify(_) => "verify",
            Command::CheckConditions(_) => "check-conditions",
            Command::MlEval(_) => "ml-eval",
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    configure_threads();
    let name = cli.command.name();
    match cli.command {
        Command::MlEval(a) => match ml_eval(&a) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Forward(a)
        | Command::Synthesize(a)
        | Command::Invert(a)
        | Command::Verify(a)
        | Command::CheckConditions(a) => match a.resolve(name) {
            Ok(config) => match run(&config) {
                Ok((code, _)) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
    }
}

fn configure_threads() {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                warn!("{THREADS_ENV}: {e}");
            }
        }
        _ => warn!("{THREADS_ENV}={value} ignored, expected a positive integer"),
    }
}

fn ml_eval(a: &MlArgs) -> Result<()> {
    let p = MLParams::new(a.alpha, a.mu)?;
    for &z in &a.z {
        println!(
            "{} {}",
            format_g(z, 12),
            format_g(mittag_leffler(p, z)?, 12)
        );
    }
    Ok(())
}

/// Runs one subcommand. The manifest is written before any data file and
/// finalised with the exit code; `Err` only when the manifest itself cannot be
/// written.
pub fn run(config: &RunConfig) -> Result<(i32, RunManifest)> {
    let mut manifest = RunManifest::start(config)?;
    let started = Instant::now();
    let outcome = dispatch(config, &mut manifest);
    manifest
        .timings
        .insert("total_s".into(), started.elapsed().as_secs_f64());
    let (code, status) = match outcome {
        Ok(true) => (0, "ok"),
        Ok(false) => (2, "not-converged"),
        Err(e) => {
            eprintln!("error: {e}");
            manifest.messages.push(e.to_string());
            (1, "failed")
        }
    };
    manifest.finish(status, code)?;
    Ok((code, manifest))
}

/// The case with the config's parameters, and the trace file if one is given.
pub fn build_problem(config: &RunConfig) -> Result<(ManufacturedCase, ProblemSpec)> {
    let case = manufactured_case(&config.case)?.with_params(config.params)?;
    let mut spec = case.spec.clone();
    if let Some(path) = &config.psi_file {
        let p = config.params;
        let values = output::read_psi_csv(path, p.nt, p.nx)?;
        set_sampled_psi(&mut spec, values);
    }
    Ok((case, spec))
}

fn set_sampled_psi(spec: &mut ProblemSpec, values: ndarray::Array2<f64>) {
    spec.psi = Some(Trace::Sampled(values));
    spec.derivatives.psi_caputo = None;
    spec.derivatives.psi_xx = None;
}

fn timed<T>(manifest: &mut RunManifest, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let started = Instant::now();
    let value = f();
    manifest
        .timings
        .insert(format!("{stage}_s"), started.elapsed().as_secs_f64());
    value
}

fn dispatch(config: &RunConfig, manifest: &mut RunManifest) -> Result<bool> {
    let (case, mut spec) = build_problem(config)?;
    for w in spec.compatibility_warnings()? {
        warn!("{w}");
        manifest.messages.push(w);
    }
    let out = config.output.clone();
    let p = config.params;
    match config.command.as_str() {
        "forward" => {
            let (state, field) = timed(manifest, "forward", || solve_forward(&spec))?;
            let psi = synthesize_data(&state, p.l0, 0.0, config.seed)?;
            let path = out.join("psi.csv");
            output::write_tx_csv(&path, "psi", &psi, &state.time(), &state.space())?;
            manifest.record(&path)?;
            if config.dump_modes {
                for mode in &state.modes {
                    let path = output::write_mode_csv(&out, mode)?;
                    manifest.record(&path)?;
                }
            }
            if config.dump_full {
                let path = out.join("full.csv");
                output::write_full_csv(&path, &field)?;
                manifest.record(&path)?;
            }
            let (abs, rel) = u_error(&case, &state)?;
            println!(
                "forward {}: L2 error of u {} (relative {})",
                case.id,
                format_g(abs, 6),
                format_g(rel, 6)
            );
            Ok(true)
        }
        "synthesize" => {
            let psi = timed(manifest, "synthesize", || {
                if config.fine_factor > 1 {
                    synthesize_fine(&spec, config.noise_level, config.seed, config.fine_factor)
                } else {
                    let (state, _) = solve_forward(&spec)?;
                    synthesize_data(&state, p.l0, config.noise_level, config.seed)
                }
            })?;
            let path = out.join("psi.csv");
            output::write_tx_csv(&path, "psi", &psi, &p.time()?, &p.space()?)?;
            manifest.record(&path)?;
            println!("synthesize {}: wrote {}", case.id, path.display());
            Ok(true)
        }
        "invert" => {
            if config.noise_level > 0.0 {
                let clean = spec
                    .psi_grid()?
                    .ok_or_else(|| Error::Usage("invert needs a trace".into()))?;
                set_sampled_psi(
                    &mut spec,
                    add_noise(&clean, config.noise_level, config.seed)?,
                );
            }
            let setup = timed(manifest, "setup", || InverseSetup::new(&spec))?;
            let outcome = timed(manifest, "invert", || {
                solve_inverse_with(&setup, config.tol, config.max_iter)
            })?;
            let path = out.join("h.csv");
            output::write_tx_csv(
                &path,
                "h",
                &outcome.source.h,
                &outcome.source.time,
                &outcome.source.space,
            )?;
            manifest.record(&path)?;
            let path = out.join("convergence.json");
            output::write_json(&path, &outcome.report)?;
            manifest.record(&path)?;
            if config.dump_modes {
                for mode in &outcome.state.modes {
                    let path = output::write_mode_csv(&out, mode)?;
                    manifest.record(&path)?;
                }
            }
            let mut report = timed(manifest, "estimates", || {
                compute_constants_with(&spec, &setup)
            })?;
            report.bound_checks = verify_bounds(&outcome.state, &outcome.source, &report)?;
            let path = out.join("estimates.json");
            output::write_json(&path, &report)?;
            manifest.record(&path)?;

            let r = &outcome.report;
            println!(
                "invert {}: {} after {} iterations, terminal increment {}, condition value {}",
                case.id,
                if r.converged {
                    "converged"
                } else {
                    "NOT converged"
                },
                r.iterations,
                format_g(r.terminal_increment, 6),
                format_g(r.condition_value, 6)
            );
            if r.regime == OUTSIDE_REGIME {
                println!("warning: {OUTSIDE_REGIME}");
            }
            if config.psi_file.is_none() && config.noise_level == 0.0 {
                let (abs, rel) = h_error(&case, &outcome.source);
                println!(
                    "h error vs exact: {} (relative {})",
                    format_g(abs, 6),
                    format_g(rel, 6)
                );
            }
            for b in &report.bound_checks {
                println!(
                    "bound {:<12} lhs {} rhs {} {}",
                    b.name,
                    format_g(b.lhs, 6),
                    format_g(b.rhs, 6),
                    if b.holds { "holds" } else { "VIOLATED" }
                );
            }
            Ok(r.converged)
        }
        "verify" => {
            let ladder: Vec<(usize, usize)> = config.ladder.iter().map(|l| (l[0], l[1])).collect();
            let study = timed(manifest, "study", || {
                convergence_study(&case, &ladder, config.target)
            })?;
            let path = out.join("study.json");
            output::write_json(&path, &study)?;
            manifest.record(&path)?;
            print!("{}", study.table());
            if let Some(reason) = &study.aborted {
                println!("study aborted: {reason}");
            }
            Ok(study.aborted.is_none())
        }
        "check-conditions" => {
            let report = timed(manifest, "estimates", || compute_constants(&spec))?;
            let path = out.join("estimates.json");
            output::write_json(&path, &report)?;
            manifest.record(&path)?;
            println!("condition4 {}", format_g(report.condition4, 12));
            println!("contraction {}", format_g(report.contraction, 12));
            if report.condition4 > 1.0 || report.contraction >= 1.0 {
                println!("warning: {OUTSIDE_REGIME}");
            }
            for w in &report.warnings {
                println!("warning: {w}");
            }
            info!("estimates written to {}", path.display());
            Ok(true)
        }
        other => Err(Error::Usage(format!("unknown subcommand `{other}`"))),
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mzeuler::config::RunConfig;
use mzeuler::diagnostics::{fit_loglog_slope, write_outputs, RunSummary};
use mzeuler::integrate::{run_from, Simulation};
use mzeuler::Result;

const EXIT_BLOW_UP: u8 = 2;
const EXIT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(name = "mzeuler", version, about = "Reduced models of the 3D Euler equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write energy.csv and manifest.json.
    Run(RunArgs),
    /// Print the generated sums of Z^n.
    ShowTerms {
        n: usize,
        /// Also print the evaluation plan.
        #[arg(long)]
        plan: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Start from a named preset.
    #[arg(long)]
    preset: Option<String>,
    /// `key = value` file or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Memory length, or `inf`.
    #[arg(long)]
    t0: Option<String>,
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    quadrature: Option<String>,
    #[arg(long)]
    memory_mode: Option<String>,
    #[arg(long)]
    project_divergence: bool,
    #[arg(long)]
    record_interval: Option<u64>,
    #[arg(long)]
    fit_start: Option<f64>,
    #[arg(long)]
    fit_end: Option<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verify: bool,
    /// Any other key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print every record as it is produced.
    #[arg(long)]
    progress: bool,
}

impl RunArgs {
    fn build(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::from_file(path)?,
            (None, Some(p)) => RunConfig::preset(p)?,
            (None, None) => RunConfig::default(),
        };
        if let (Some(_), Some(p)) = (&self.config, &self.preset) {
            cfg.set("preset", p)?;
        }
        let mut pairs: Vec<(&str, String)> = Vec::new();
        let mut opt = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k, v));
            }
        };
        opt("model", self.model.clone());
        opt("n", self.n.map(|v| v.to_string()));
        opt("m", self.m.map(|v| v.to_string()));
        opt("dt", self.dt.map(|v| v.to_string()));
        opt("t_end", self.t_end.map(|v| v.to_string()));
        opt("t0", self.t0.clone());
        opt("integrator", self.integrator.clone());
        opt("quadrature", self.quadrature.clone());
        opt("memory_mode", self.memory_mode.clone());
        opt("record_interval", self.record_interval.map(|v| v.to_string()));
        opt("fit_start", self.fit_start.map(|v| v.to_string()));
        opt("fit_end", self.fit_end.map(|v| v.to_string()));
        opt("output_dir", self.output.as_ref().map(|p| p.display().to_string()));
        opt("threads", self.threads.map(|v| v.to_string()));
        if self.project_divergence {
            opt("project_divergence", Some("true".into()));
        }
        if self.verify {
            opt("verify", Some("true".into()));
        }
        for (k, v) in pairs {
            cfg.set(k, &v)?;
        }
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| mzeuler::Error::Config(format!("--set expects key=value, got `{o}`")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: &RunArgs) -> Result<bool> {
    let cfg = args.build()?;
    eprintln!(
        "model {} on {}^3 (M = {}), dt = {}, t_end = {}, t0 = {}",
        cfg.model,
        cfg.n,
        cfg.m,
        cfg.dt,
        cfg.t_end,
        cfg.t0.map_or("inf".to_string(), |t| t.to_string())
    );
    let sim = Simulation::new(cfg.clone())?;
    let progress = args.progress;
    let outcome = run_from(sim, |r| {
        if progress {
            eprintln!("t = {:.4}  E = {:.10e}  dE/dt = {:.6e}", r.t, r.e, r.dedt);
        }
    })?;
    let fit = fit_loglog_slope(&outcome.records, cfg.fit_window).map_err(|e| e.to_string());
    let summary = RunSummary {
        config: &cfg,
        fit: fit.clone(),
        blow_up: outcome.blow_up.clone(),
        steps: outcome.final_state.step,
        final_time: outcome.final_state.t,
        initial_energy: outcome.initial_energy,
        final_energy: outcome.final_energy,
        wall_clock_seconds: outcome.wall_clock_seconds,
        verification: outcome.verification.clone(),
    };
    write_outputs(&outcome.records, &summary, &cfg.output_dir)?;
    println!("output: {}", cfg.output_dir.display());
    println!(
        "steps: {}, t = {}, E = {:.10e} (E0 = {:.10e}), {:.1} s",
        summary.steps, summary.final_time, summary.final_energy, summary.initial_energy, summary.wall_clock_seconds
    );
    match &fit {
        Ok(f) => println!(
            "decay slope on [{}, {}]: {:.4} ± {:.4} ({} points)",
            f.window.0, f.window.1, f.slope, f.stderr, f.points
        ),
        Err(e) => println!("decay slope: unavailable ({e})"),
    }
    if let Some(v) = &outcome.verification {
        if let Some(d) = v.term_oracle_rel_diff {
            println!("verify: terms vs word oracle rel. diff {d:.3e}");
        }
        if let Some(d) = v.memory_rel_diff {
            println!("verify: incremental vs direct memory rel. diff {d:.3e}");
        }
    }
    if let Some(b) = &outcome.blow_up {
        println!("blow-up at t = {} (step {}): {}", b.t, b.step, b.reason);
        return Ok(false);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args).map(|clean| if clean { ExitCode::SUCCESS } else { ExitCode::from(EXIT_BLOW_UP) }),
        Command::ShowTerms { n, plan } => mzeuler::compiler::report::show_terms(*n, *plan).map(|text| {
            print!("{text}");
            ExitCode::SUCCESS
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_ERROR)
    })
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curved_pipe::config::{OutputFormat, RunConfig};
use curved_pipe::pipeline::{self, OUTPUT_ENV, THREADS_ENV};
use curved_pipe::PipeError;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

/// Reduced-order Stokes flow through thin curved pipes.
#[derive(Parser, Debug)]
#[command(name = "curved-pipe", version)]
struct Cli {
    /// Worker threads (default: CURVED_PIPE_THREADS, then available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Run configuration (TOML)
    #[arg(long)]
    config: PathBuf,

    /// Output directory (overrides CURVED_PIPE_OUTPUT and the config file)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full solve: rigidity, pressure, transverse correction and flow field
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Field output format (overrides the config file)
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Mesh refinement study over study.meshes
    Converge {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Full solution against the two-term small-h expansion over study.h_values
    ComparePerturbation {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Built-in oracle battery
    Validate {
        /// Optional run configuration; it is parsed and checked only
        #[arg(long)]
        config: Option<PathBuf>,
        /// Multiplies every error tolerance
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
}

fn output_dir(run: &RunArgs, cfg: &RunConfig) -> PathBuf {
    run.output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.base_dir.join(&cfg.output.directory))
}

fn configure_threads(flag: Option<usize>) -> Result<(), PipeError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                PipeError::Config(format!("{THREADS_ENV}={v:?} is not a thread count"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(PipeError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| PipeError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, PipeError> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Solve { run, format } => {
            let cfg = RunConfig::from_file(&run.config)?;
            let out = output_dir(&run, &cfg);
            let rep = pipeline::cmd_solve(&cfg, &out, format.unwrap_or(cfg.output.format))?;
            println!(
                "G in [{:.6}, {:.6}], flux defect {:.2e}, wall time {:.2} s",
                rep.rigidity_min,
                rep.rigidity_max,
                rep.residuals.flux_defect,
                rep.timing.wall_seconds
            );
            println!("wrote {} to {}", rep.artifacts.join(", "), out.display());
        }
        Command::Converge { run } => {
            let cfg = RunConfig::from_file(&run.config)?;
            let out = output_dir(&run, &cfg);
            let rep = pipeline::cmd_converge(&cfg, &out)?;
            for r in &rep.rows {
                println!(
                    "n = {:>4}  G change {:.3e} (order {:.2})  p change {:.3e} (order {:.2})",
                    r.n_rho, r.g_change, r.g_order, r.p_change, r.p_order
                );
            }
            if !rep.g_monotone || !rep.p_monotone {
                println!("warning: defect sequence is not monotone");
            }
            println!("wrote convergence.csv to {}", out.display());
        }
        Command::ComparePerturbation { run } => {
            let cfg = RunConfig::from_file(&run.config)?;
            let out = output_dir(&run, &cfg);
            let rep = pipeline::cmd_compare_perturbation(&cfg, &out)?;
            println!(
                "slopes on a {0}x{0} mesh: psi {1:.3}, G {2:.3}, p {3:.3}, v {4:.3}",
                rep.mesh, rep.psi_slope, rep.g_slope, rep.p_slope, rep.v_slope
            );
            println!("wrote perturbation.csv to {}", out.display());
        }
        Command::Validate {
            config,
            tolerance_scale,
        } => {
            if let Some(path) = config {
                RunConfig::from_file(&path)?;
            }
            if tolerance_scale.is_nan() || tolerance_scale <= 0.0 {
                return Err(PipeError::Config(
                    "--tolerance-scale must be positive".into(),
                ));
            }
            let rep = pipeline::cmd_validate(tolerance_scale)?;
            print!("{}", rep.table());
            return Ok(rep.all_passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: validation failed");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
    }
}

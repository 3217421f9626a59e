use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elmflow::bench::{self, ExperimentConfig, ProblemConfig};
use elmflow::marcher::{march, march_quasi_adaptive, MarchConfig, QUASI_ADAPTIVE_SAFETY};
use elmflow::modelfile::{load_model, read_manifest, save_model};
use elmflow::{Error, Result};

/// Learn flow maps of ODE systems and march with them.
#[derive(Parser)]
#[command(name = "elmflow", version)]
struct Cli {
    /// Overrides the seed of the problem or experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for training and sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it to a model file.
    Train(TrainArgs),
    /// March a trained model and print the trajectory as CSV.
    March(MarchArgs),
    /// Run an experiment sweep from a TOML file.
    Bench {
        config: PathBuf,
        /// Replaces the output path of the experiment file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the flow-map periodicity properties numerically.
    Verify {
        /// Catalog ids; defaults to every problem with periodicity metadata.
        problems: Vec<String>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Print the manifest of a model file as JSON.
    Inspect { model: PathBuf },
    /// List catalog problems, or print one as a TOML problem file.
    Problems { id: Option<String> },
}

#[derive(Args)]
struct TrainArgs {
    /// Catalog problem id.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    problem: Option<String>,
    /// TOML problem file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    /// Writes the per-sub-domain training reports as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct MarchArgs {
    model: PathBuf,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    y0: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, allow_negative_numbers = true)]
    tf: f64,
    #[arg(long, conflicts_with = "quasi_adaptive", required_unless_present = "quasi_adaptive")]
    dt: Option<f64>,
    #[arg(long)]
    quasi_adaptive: bool,
    #[arg(long, default_value_t = QUASI_ADAPTIVE_SAFETY)]
    safety: f64,
    /// Forces periodic wrapping on or off; default follows the metadata.
    #[arg(long)]
    periodicity: Option<bool>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Writes the quasi-adaptive step log (t, subdomain, h) as CSV.
    #[arg(long)]
    steps: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        3
    } else {
        match e {
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

fn write_or_print(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn train(args: &TrainArgs, seed: Option<u64>, jobs: usize) -> Result<()> {
    let mut cfg = match (&args.problem, &args.config) {
        (Some(id), _) => bench::entry(id)?.config,
        (None, Some(p)) => ProblemConfig::load(p)?,
        (None, None) => return Err(Error::Config("give --problem or --config".into())),
    };
    if let Some(s) = seed {
        cfg.network.seed = s;
        cfg.training.seed = s;
    }
    let (model, reports) = bench::train_problem(&cfg, jobs)?;
    save_model(&model, &args.out)?;
    for (id, r) in reports.iter().enumerate() {
        log::info!("sub-domain {id}: residual max {:.3e}, {} iterations", r.residual_max, r.iterations);
    }
    if let Some(p) = &args.report {
        std::fs::write(p, serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(())
}

fn march_cmd(args: &MarchArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let traj = if args.quasi_adaptive {
        if args.periodicity.is_some() {
            log::warn!("--periodicity is ignored by the quasi-adaptive march");
        }
        let (traj, log) = march_quasi_adaptive(&model, &args.y0, args.t0, args.tf, args.safety)?;
        if let Some(p) = &args.steps {
            let mut s = String::from("t,subdomain,h\n");
            for r in &log {
                s.push_str(&format!("{:.16e},{},{:.16e}\n", r.t, r.subdomain, r.h));
            }
            std::fs::write(p, s)?;
        }
        traj
    } else {
        let dt = args.dt.ok_or_else(|| Error::Config("give --dt or --quasi-adaptive".into()))?;
        let mut cfg = MarchConfig::fixed(args.t0, args.tf, dt);
        if let Some(on) = args.periodicity {
            cfg = cfg.with_periodicity(on);
        }
        march(&model, &args.y0, &cfg)?
    };
    write_or_print(args.out.as_ref(), &traj.to_csv_string())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Command::Train(a) => train(a, cli.seed, cli.jobs),
        Command::March(a) => march_cmd(a),
        Command::Bench { config, out } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if out.is_some() {
                cfg.output = out.clone();
            }
            let rows = bench::run_experiment(&cfg, cli.jobs)?;
            if cfg.output.is_none() {
                bench::experiment::write_csv(&rows, std::io::stdout().lock(), cfg.csv_timings)?;
            }
            Ok(())
        }
        Command::Verify { problems, samples, tol } => {
            let ids: Vec<String> = if problems.is_empty() {
                bench::catalog::ids()
                    .into_iter()
                    .filter(|id| {
                        let s = bench::entry(id).map(|e| e.system());
                        s.is_ok_and(|s| s.temporal_period().is_some() || s.has_state_periodicity())
                    })
                    .map(String::from)
                    .collect()
            } else {
                problems.clone()
            };
            let mut failed = false;
            for id in ids {
                let rep = bench::verify_flow_theorems(&id, *samples, *tol)?;
                for c in &rep.checks {
                    println!(
                        "{id} {}: max deviation {:.3e} (tol {:.1e}) {}",
                        c.name,
                        c.max_deviation,
                        c.tol,
                        if c.passed { "PASS" } else { "FAIL" }
                    );
                }
                failed |= !rep.passed();
            }
            if failed {
                return Err(Error::NumericFailure { iteration: 0, message: "flow-map check failed".into() });
            }
            Ok(())
        }
        Command::Inspect { model } => {
            println!("{}", serde_json::to_string_pretty(&read_manifest(model)?)?);
            Ok(())
        }
        Command::Problems { id } => {
            match id {
                Some(id) => print!("{}", bench::entry(id)?.config.to_toml_string()?),
                None => {
                    for e in bench::catalog() {
                        println!("{:<18} {}", e.id, e.description);
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

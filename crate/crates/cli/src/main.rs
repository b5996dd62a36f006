use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpdtol_cli::{
    audit, bounds, fm_table, selftest, simulate, to_json, with_threads, write_file, AuditRequest, CliError,
    EnvSpec, ExperimentConfig, FmRequest, Result,
};

#[derive(Parser)]
#[command(name = "dpdtol", version, about = "Private online learning experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks automatically.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes from a config and write results.csv and summary.json.
    Simulate,
    /// Exact neighbor audit of the output law.
    Audit {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 7)]
        t: u64,
        #[arg(long)]
        epsilon: f64,
        /// Comma-separated loss values.
        #[arg(long, default_value = "0,1", value_delimiter = ',')]
        grid: Vec<f64>,
        /// Sample this many base datasets instead of enumerating all.
        #[arg(long)]
        datasets: Option<usize>,
    },
    /// Tabulate F_m for m = 1..=m_max.
    Fm {
        /// Inline JSON environment; defaults to the config's environment.
        #[arg(long)]
        env: Option<String>,
        #[arg(long)]
        m_max: u64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Closed-form regret bounds.
    Bounds {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta_min: f64,
        #[arg(long)]
        epsilon: f64,
    },
    /// Inequality suite and core invariant grids.
    Selftest,
}

fn load_config(global: &Global) -> Result<ExperimentConfig> {
    let path = global
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = global.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn emit(global: &Global, fallback: Option<&PathBuf>, name: &str, contents: &str) -> Result<()> {
    match global.out.as_ref().or(fallback) {
        Some(dir) => write_file(dir, name, contents),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Simulate => {
            let config = load_config(g)?;
            let output = with_threads(g.threads, || simulate(&config))??;
            let dir = g
                .out
                .clone()
                .or_else(|| config.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            write_file(&dir, "results.csv", &output.results_csv)?;
            write_file(&dir, "summary.json", &to_json(&output.summary))?;
            eprintln!("wrote {} and {}", dir.join("results.csv").display(), dir.join("summary.json").display());
            Ok(())
        }
        Command::Audit { k, t, epsilon, grid, datasets } => {
            let request = AuditRequest {
                k,
                t,
                epsilon,
                grid,
                datasets,
                seed: g.seed.unwrap_or(0),
            };
            let (report, value) = with_threads(g.threads, || audit(&request))??;
            let text = to_json(&value);
            print!("{text}");
            emit(g, None, "audit.json", &text)?;
            if report.pass {
                Ok(())
            } else {
                Err(CliError::Failed(format!(
                    "max ratio {} exceeds bound {}",
                    report.max_ratio, report.bound
                )))
            }
        }
        Command::Fm { env, m_max, epsilon, samples } => {
            let (environment, seed, fallback) = match env {
                Some(text) => {
                    let spec: EnvSpec = serde_json::from_str(&text)
                        .map_err(|e| CliError::Validation(format!("environment: {e}")))?;
                    (spec, g.seed.unwrap_or(0), None)
                }
                None => {
                    let c = load_config(g)?;
                    (c.environment, c.master_seed, c.output_dir)
                }
            };
            let request = FmRequest {
                environment,
                m_max,
                epsilon,
                samples,
                seed,
            };
            let (_, csv) = with_threads(g.threads, || fm_table(&request))??;
            match g.out.as_ref().or(fallback.as_ref()) {
                Some(dir) => write_file(dir, "fm.csv", &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::Bounds { k, delta_min, epsilon } => {
            let text = to_json(&bounds(k, delta_min, epsilon)?);
            print!("{text}");
            emit(g, None, "bounds.json", &text)
        }
        Command::Selftest => {
            let report = with_threads(g.threads, selftest)?;
            let text = to_json(&report);
            print!("{text}");
            emit(g, None, "selftest.json", &text)?;
            if report.pass {
                Ok(())
            } else {
                Err(CliError::Failed("selftest reported failures".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

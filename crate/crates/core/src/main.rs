use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fklab::config::ExperimentConfig;
use fklab::experiment;

#[derive(Parser)]
#[command(name = "fklab", version, about = "Fuglede–Kadison determinant experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured estimators and write CSV tables plus summary.json.
    Run(Common),
    /// Write growth and Følner-defect diagnostics to foelner_stats.csv.
    FoelnerStats(Common),
    /// Parse and validate a config without computing anything.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` in the config, then `out`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Seed for randomized helpers; estimators are deterministic and ignore it.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

impl Common {
    fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn load(c: &Common) -> Result<ExperimentConfig, String> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("--threads: {e}"))?;
    }
    ExperimentConfig::load(&c.config).map_err(|e| format!("{}: {e}", c.config.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Validate(c) => {
            let cfg = load(&c)?;
            let names: Vec<&str> = cfg.methods.iter().map(|m| m.name()).collect();
            println!(
                "ok: {} group, {} coefficients, methods: {}",
                experiment::describe_group(&cfg.spec),
                cfg.element.kind(),
                names.join(", ")
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(c) => {
            let cfg = load(&c)?;
            let mut out = experiment::run(&cfg).map_err(|e| e.to_string())?;
            if let Some(seed) = c.seed {
                out.summary["seed"] = seed.into();
            }
            let dir = c.out_dir(&cfg);
            out.write(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            for o in &out.outcomes {
                match (&o.report, &o.error) {
                    (_, Some(e)) => println!("{:<16} error: {e}", o.method.name()),
                    (Some(r), None) => println!(
                        "{:<16} {:>24}  bound {}",
                        o.method.name(),
                        fklab::determinant::fmt_full(r.final_value),
                        r.error_bound.map_or("-".to_string(), fklab::determinant::fmt_full)
                    ),
                    (None, None) => println!("{:<16} no value", o.method.name()),
                }
            }
            for d in out.comparisons.iter().filter(|d| d.disagree) {
                println!(
                    "DISAGREE {} vs {}: |diff| = {:e} > {:e}",
                    d.a, d.b, d.difference, d.threshold
                );
            }
            println!("wrote {}", dir.display());
            Ok(if out.failures() > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::FoelnerStats(c) => {
            let cfg = load(&c)?;
            let csv = experiment::foelner_stats(&cfg).map_err(|e| e.to_string())?;
            let dir = c.out_dir(&cfg);
            std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let path = dir.join("foelner_stats.csv");
            std::fs::write(&path, csv).map_err(|e| format!("{}: {e}", path.display()))?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

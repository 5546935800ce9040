use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddps_cli::commands::{cmd_ablate, cmd_run, cmd_table, AblationKind};
use ddps_cli::config::ExperimentConfig;
use ddps_cli::CliError;

#[derive(Parser)]
#[command(
    name = "ddps",
    version,
    about = "Pareto front learning with data-driven preference sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOpts {
    /// Experiment file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds, overriding the file and DDPS_SEED
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Write SVG plots; a bare `--plots` means true
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    plots: Option<bool>,
    /// Runs to execute in parallel
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Swept {
    Gamma,
    Kappa,
}

#[derive(Subcommand)]
enum Command {
    /// Train every run declared in an experiment file
    Run(RunOpts),
    /// Tabulate final metrics of finished runs
    Table {
        /// Run directories or directories containing them
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Directory for table.csv, summary.csv and ranks.csv; stdout if absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the selection fraction or the mixture size
    Ablate {
        #[arg(value_enum)]
        parameter: Swept,
        /// Comma-separated values to try
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        grid: Vec<f64>,
        #[command(flatten)]
        run: RunOpts,
    },
}

fn load(opts: &RunOpts) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(&opts.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", opts.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(out) = &opts.out {
        cfg.out = out.clone();
    }
    let seeds = match &opts.seeds {
        Some(s) => Some(s.clone()),
        None => match std::env::var("DDPS_SEED") {
            Ok(v) => Some(vec![v.trim().parse().map_err(|_| {
                CliError::Config(format!("DDPS_SEED '{v}' is not a seed"))
            })?]),
            Err(_) => None,
        },
    };
    if let Some(s) = seeds {
        if s.is_empty() {
            return Err(CliError::Config("--seeds is empty".into()));
        }
        cfg.set_seeds(&s);
        cfg.plan()?;
    }
    if let Some(p) = opts.plots {
        cfg.plots = p;
    }
    if let Some(j) = opts.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(opts) => {
            let cfg = load(&opts)?;
            let runs = cmd_run(&cfg)?;
            for r in runs {
                let s = &r.record.summary;
                println!(
                    "{}  hv {:.6}  igd {:.6}  epochs {}",
                    r.id, s.final_hv, s.final_igd, s.epochs_completed
                );
            }
        }
        Command::Table { dirs, out } => {
            let t = cmd_table(&dirs)?;
            match out {
                Some(out) => {
                    fs::create_dir_all(&out)?;
                    fs::write(out.join("table.csv"), &t.runs)?;
                    fs::write(out.join("summary.csv"), &t.summary)?;
                    fs::write(out.join("ranks.csv"), &t.ranks)?;
                }
                None => print!("{}\n{}\n{}", t.runs, t.summary, t.ranks),
            }
        }
        Command::Ablate {
            parameter,
            grid,
            run,
        } => {
            let kind = match parameter {
                Swept::Gamma => AblationKind::Gamma,
                Swept::Kappa => AblationKind::Kappa,
            };
            if grid.is_empty() {
                return Err(CliError::Config("ablation grid is empty".into()));
            }
            let cfg = load(&run)?;
            let res = cmd_ablate(kind, &grid, &cfg)?;
            print!("{}", res.sweep_csv);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpshare_bench::commands::{inspect_config, inspect_report};
use dpshare_bench::{
    cmd_noise, cmd_partition, cmd_report, cmd_run, cmd_simulate, BenchError, DatasetConfig, Placement, Preset,
    Result, RunConfig, DATA_DIR_ENV,
};
use dpshare_core::classifiers::ClassifierKind;

#[derive(Parser)]
#[command(name = "dpshare", version, about = "Privacy-preserving classification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the grid through the direct pipeline.
    Run(GridArgs),
    /// Run the grid through the owner/CSP protocol and scan the traces.
    Simulate {
        #[command(flatten)]
        grid: GridArgs,
        /// Number of data owners.
        #[arg(long)]
        owners: Option<usize>,
    },
    /// Compare the first report against each of the others.
    Report {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "dpshare-out")]
        out_dir: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Write each dataset's sensitive and non-sensitive parts.
    Partition(GridArgs),
    /// Write each dataset's sanitized upload and noise log.
    Noise(GridArgs),
    /// Summarize a saved report, or print the resolved config.
    Inspect {
        /// A `report.json`; without it the resolved config is shown.
        report: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct GridArgs {
    /// TOML or JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    placement: Option<Vec<Placement>>,
    #[arg(long, value_delimiter = ',')]
    classifiers: Option<Vec<ClassifierKind>>,
    /// Dataset names from the config, or preset names.
    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<String>>,
    /// Directory holding the dataset files; defaults to $DPSHARE_DATA_DIR.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

impl GridArgs {
    fn config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_path(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(s) = self.seeds {
            cfg.seeds = s;
        }
        if let Some(d) = self.out_dir {
            cfg.out_dir = d;
        }
        if let Some(p) = self.placement {
            cfg.placements = p;
        }
        if let Some(c) = self.classifiers {
            cfg.classifiers = c;
        }
        if let Some(names) = self.datasets {
            let mut picked = Vec::new();
            for n in names {
                let named = cfg
                    .datasets
                    .iter()
                    .find(|d| d.name.as_deref() == Some(n.as_str()) || d.preset.map(|p| p.as_str()) == Some(n.as_str()));
                match named {
                    Some(d) => picked.push(d.clone()),
                    None => picked.push(DatasetConfig::preset(n.parse::<Preset>().map_err(BenchError::Input)?)),
                }
            }
            cfg.datasets = picked;
        }
        if let Some(d) = self.data_dir {
            cfg.data_dir = Some(d);
        } else if cfg.data_dir.is_none() {
            cfg.data_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
        }
        Ok(cfg)
    }
}

fn summary(report: &dpshare_bench::BenchReport) {
    let failed = report.cells.iter().filter(|c| c.point().is_none()).count();
    println!(
        "{} cells ({failed} failed) written to {}",
        report.cells.len(),
        report.config.out_dir.display()
    );
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(grid) => summary(&cmd_run(grid.config()?)?),
        Command::Simulate { grid, owners } => {
            let mut cfg = grid.config()?;
            if let Some(n) = owners {
                cfg.owners = n;
            }
            let report = cmd_simulate(cfg)?;
            summary(&report);
            if let dpshare_bench::report::RunMode::Protocol { runs, .. } = &report.mode {
                let noisy = runs.iter().filter(|r| r.placement != Placement::Clean);
                let dirty: Vec<_> = noisy
                    .filter(|r| !r.leakage.as_ref().is_some_and(|l| l.is_clean()))
                    .map(|r| format!("{}/{}/{}", r.dataset, r.placement, r.seed))
                    .collect();
                if dirty.is_empty() {
                    println!("leakage scan: clean");
                } else {
                    println!("leakage scan flagged: {}", dirty.join(", "));
                }
            }
        }
        Command::Report { reports, out_dir, alpha } => {
            let s = cmd_report(&reports, alpha, &out_dir)?;
            println!("{} comparisons written to {}", s.comparisons.len(), out_dir.display());
        }
        Command::Partition(grid) => {
            for d in cmd_partition(grid.config()?)? {
                println!("{}", d.display());
            }
        }
        Command::Noise(grid) => {
            for d in cmd_noise(grid.config()?)? {
                println!("{}", d.display());
            }
        }
        Command::Inspect { report, grid } => match report {
            Some(p) => print!("{}", inspect_report(&p)?),
            None => print!("{}", inspect_config(grid.config()?)?),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| execute(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(1),
    }
}

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use lifsel::harness::{
    emit_table, read_report_csv, resolve_threads, run_benchmark_with_threads, run_rates,
    write_levels_csv, write_rates_csv, ExperimentConfig, TableStyle,
};

/// Adaptive estimation of linear functionals of a noisy signal by penalized
/// model selection, with a Monte Carlo benchmark harness.
#[derive(Parser)]
#[command(name = "lifsel", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo risk benchmark described by a TOML config;
    /// writes report.csv and table.md into the config's output_dir.
    Benchmark {
        /// Path to the experiment config (TOML).
        config: PathBuf,
        /// Worker threads (0 = one per core). Overrides LIFSEL_THREADS.
        #[arg(long, short)]
        threads: Option<usize>,
    },
    /// Tabulate which model the selection procedures pick; writes
    /// levels.csv into the config's output_dir.
    Histogram {
        /// Path to the experiment config (TOML).
        config: PathBuf,
        /// Worker threads (0 = one per core). Overrides LIFSEL_THREADS.
        #[arg(long, short)]
        threads: Option<usize>,
    },
    /// Fit the slope of ln(risk) against ln(ln n / n) over the config's
    /// rate_sizes; writes rates.csv into the config's output_dir.
    Rates {
        /// Path to the experiment config (TOML).
        config: PathBuf,
        /// Worker threads (0 = one per core). Overrides LIFSEL_THREADS.
        #[arg(long, short)]
        threads: Option<usize>,
    },
    /// Re-render table.md from an existing report.csv.
    Tables {
        /// Path to a report.csv produced by `benchmark`.
        report: PathBuf,
        /// Output directory (defaults to the report's directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    ExperimentConfig::from_path(path)
        .with_context(|| format!("loading config {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Benchmark { config, threads } => {
            let config = load_config(&config)?;
            let threads = resolve_threads(threads);
            let start = Instant::now();
            let output = run_benchmark_with_threads(&config, threads)?;
            let csv_path = emit_table(&output.report, TableStyle::RawCsv, &config.output_dir)?;
            let md_path = emit_table(&output.report, TableStyle::X100, &config.output_dir)?;
            eprintln!(
                "benchmark: {} rows in {:.1?} -> {}, {}",
                output.report.rows.len(),
                start.elapsed(),
                csv_path.display(),
                md_path.display()
            );
        }
        Command::Histogram { config, threads } => {
            let config = load_config(&config)?;
            let threads = resolve_threads(threads);
            let output = run_benchmark_with_threads(&config, threads)?;
            std::fs::create_dir_all(&config.output_dir)?;
            let path = config.output_dir.join("levels.csv");
            write_levels_csv(&output.levels, &path)?;
            eprintln!(
                "histogram: {} rows -> {}",
                output.levels.rows.len(),
                path.display()
            );
        }
        Command::Rates { config, threads } => {
            let config = load_config(&config)?;
            let threads = resolve_threads(threads);
            let fit = run_rates(&config, threads)?;
            std::fs::create_dir_all(&config.output_dir)?;
            let path = config.output_dir.join("rates.csv");
            write_rates_csv(&fit, &path)?;
            println!(
                "slope {:.4} (se {:.4}), intercept {:.4} -> {}",
                fit.slope,
                fit.slope_se,
                fit.intercept,
                path.display()
            );
        }
        Command::Tables { report, out_dir } => {
            let parsed = read_report_csv(&report)
                .with_context(|| format!("reading {}", report.display()))?;
            let dir = out_dir.unwrap_or_else(|| {
                report
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            let path = emit_table(&parsed, TableStyle::X100, &dir)?;
            eprintln!("tables: {} rows -> {}", parsed.rows.len(), path.display());
        }
    }
    Ok(())
}

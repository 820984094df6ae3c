//! Command-line front end. Exit codes: 0 success, 1 configuration or
//! argument error, 2 failed validation.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::empirical_sweep;
use crate::channel::ChannelSet;
use crate::config::{dbm_to_w, load_config, SystemConfig};
use crate::eem::{init_random_phase, run_eem};
use crate::error::{Error, Result};
use crate::harness::{parse_seeds, run_benchmark, write_bench_csv, write_sweep_csv, Scheme, SweepVariable};
use crate::phase::PhaseConfig;
use crate::validate::run_all;

#[derive(Parser, Debug)]
#[command(name = "ris-eem", version, about = "Energy-efficient hybrid beamforming for RIS-aided cell-free downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize one channel draw and print the report as JSON.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter over a grid and write per-seed CSV rows.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// pt (dBm), m, l or b (0 = continuous).
        #[arg(long)]
        variable: SweepVariable,
        /// Comma-separated grid values.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value = "0..10")]
        seeds: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-point summary as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        omit_timing: bool,
    },
    /// Compare schemes over a seed range.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `all` or a comma list of proposed_ris, das, no_ris, conventional_cellfree.
        #[arg(long, default_value = "all")]
        schemes: String,
        #[arg(long, default_value = "0..10")]
        seeds: String,
        /// Overrides the per-BS budget.
        #[arg(long, allow_hyphen_values = true)]
        ptdbm: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Zero the timing column for byte-identical reruns.
        #[arg(long)]
        omit_timing: bool,
    },
    /// Run the built-in oracle suites.
    Validate,
    /// Dump the channel draw for a seed as JSON.
    Channels {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_config(path: Option<&Path>) -> Result<SystemConfig> {
    match path {
        None => Ok(SystemConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            load_config(&text).map_err(|e| match e {
                Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        None => Box::new(io::stdout().lock()),
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?)),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::Io(e.to_string()))
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>> {
    if text.trim() == "all" {
        return Ok(Scheme::ALL.to_vec());
    }
    text.split(',').map(|s| s.trim().parse()).collect()
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad grid value {s:?}"))))
        .collect()
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Run { config, seed, out } => {
            let cfg = read_config(config.as_deref())?;
            let ch = ChannelSet::generate(&cfg, seed);
            let q = if cfg.ris_elements() > 0 {
                init_random_phase(&cfg, seed)
            } else {
                PhaseConfig::zeros(0, cfg.resolution)
            };
            write_json(out.as_deref(), &run_eem(&cfg, &ch, &q)?)?;
        }
        Command::Sweep { config, variable, grid, seeds, out, summary, omit_timing } => {
            let cfg = read_config(config.as_deref())?;
            let (report, rows) = empirical_sweep(variable, &parse_grid(&grid)?, &cfg, &parse_seeds(&seeds)?)?;
            write_sweep_csv(sink(out.as_deref())?, &rows, omit_timing)?;
            if let Some(p) = summary {
                write_json(Some(&p), &report)?;
            }
        }
        Command::Bench { config, schemes, seeds, ptdbm, out, omit_timing } => {
            let mut cfg = read_config(config.as_deref())?;
            if let Some(dbm) = ptdbm {
                cfg.pt_w = dbm_to_w(dbm);
                cfg.validate()?;
            }
            let seeds = parse_seeds(&seeds)?;
            let records: Vec<_> = parse_schemes(&schemes)?.into_iter().flat_map(|s| run_benchmark(s, &cfg, &seeds)).collect();
            write_bench_csv(sink(out.as_deref())?, &records, omit_timing)?;
        }
        Command::Validate => {
            let results = run_all();
            for r in &results {
                println!("{:<30} {:>4}/{:<4} {}", r.name, r.passed, r.total, if r.ok() { "PASS" } else { "FAIL" });
            }
            return Ok(if results.iter().all(|r| r.ok()) { 0 } else { 2 });
        }
        Command::Channels { config, seed, out } => {
            let cfg = read_config(config.as_deref())?;
            write_json(out.as_deref(), &ChannelSet::generate(&cfg, seed))?;
        }
    }
    Ok(0)
}

/// Parse `argv` (program name first) and run the command.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

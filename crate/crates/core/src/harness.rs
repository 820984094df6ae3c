//! Benchmark schemes, Monte Carlo batches and CSV output.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_channels, generate_topology, ChannelSet, Topology};
use crate::config::{BudgetMode, PhaseResolution, SystemConfig};
use crate::eem::{init_random_phase, run_eem, EEReport};
use crate::error::{Error, Result};
use crate::phase::PhaseConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ProposedRis,
    Das,
    NoRis,
    ConventionalCellfree,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::ProposedRis, Scheme::Das, Scheme::NoRis, Scheme::ConventionalCellfree];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ProposedRis => "proposed_ris",
            Scheme::Das => "das",
            Scheme::NoRis => "no_ris",
            Scheme::ConventionalCellfree => "conventional_cellfree",
        }
    }

    /// The system actually simulated for this scheme.
    ///
    /// * `das`: every RIS element becomes an active antenna with its own
    ///   static power, and all `N N_a + M L` antennas share one budget `N P_T`.
    /// * `no_ris`: the RISs are removed.
    /// * `conventional_cellfree`: every RIS is replaced by a BS.
    pub fn derive_config(self, base: &SystemConfig) -> SystemConfig {
        let mut c = base.clone();
        match self {
            Scheme::ProposedRis => {}
            Scheme::Das => {
                c.distributed_antennas = base.ris_elements();
                c.n_ris = 0;
                c.budget = BudgetMode::SharedTotal;
            }
            Scheme::NoRis => c.n_ris = 0,
            Scheme::ConventionalCellfree => {
                c.n_bs = base.n_bs + base.n_ris;
                c.n_ris = 0;
            }
        }
        c
    }

    /// Channels for this scheme, drawn on the topology of `base`.
    pub fn channels(self, base: &SystemConfig, seed: u64) -> ChannelSet {
        let topo = generate_topology(base, seed);
        let derived = self.derive_config(base);
        match self {
            Scheme::ProposedRis => generate_channels(&topo, &derived, seed),
            Scheme::NoRis => {
                let t = Topology { ris_positions: vec![], ..topo };
                generate_channels(&t, &derived, seed)
            }
            Scheme::ConventionalCellfree => {
                let mut bs = topo.bs_positions.clone();
                bs.extend_from_slice(&topo.ris_positions);
                let t = Topology { bs_positions: bs, ris_positions: vec![], user_positions: topo.user_positions };
                generate_channels(&t, &derived, seed)
            }
            Scheme::Das => {
                // RIS-to-user links of the RIS system double as the links of
                // the distributed antennas at the element positions.
                let full = generate_channels(&topo, base, seed);
                let k = full.users();
                let t = full.antennas() + full.elements();
                let mut h_d = crate::numerics::ComplexMatrix::zeros(k, t);
                h_d.columns_mut(0, full.antennas()).copy_from(&full.h_d);
                h_d.columns_mut(full.antennas(), full.elements()).copy_from(&full.h_ru_h);
                ChannelSet {
                    h_d,
                    h_br: crate::numerics::ComplexMatrix::zeros(0, t),
                    h_ru_h: crate::numerics::ComplexMatrix::zeros(k, 0),
                    topology: full.topology,
                }
            }
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scheme> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme {s:?}")))
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub seed: u64,
    pub config_hash: String,
    pub eta: f64,
    pub sum_rate: f64,
    pub iterations: usize,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Full run of one scheme on one seed.
pub fn run_scheme(scheme: Scheme, base: &SystemConfig, seed: u64) -> Result<EEReport> {
    let config = scheme.derive_config(base);
    let ch = scheme.channels(base, seed);
    let q = if config.ris_elements() > 0 {
        init_random_phase(&config, seed)
    } else {
        PhaseConfig::zeros(0, config.resolution)
    };
    run_eem(&config, &ch, &q)
}

fn record(scheme: Scheme, base: &SystemConfig, seed: u64) -> RunRecord {
    let start = Instant::now();
    let hash = scheme.derive_config(base).hash_hex();
    let out = run_scheme(scheme, base, seed);
    let wall_time = start.elapsed().as_secs_f64();
    match out {
        Ok(rep) => RunRecord {
            scheme,
            seed,
            config_hash: hash,
            eta: rep.final_eta,
            sum_rate: rep.final_rates.sum,
            iterations: rep.iterations,
            wall_time,
            error: None,
        },
        Err(e) => RunRecord {
            scheme,
            seed,
            config_hash: hash,
            eta: f64::NAN,
            sum_rate: f64::NAN,
            iterations: 0,
            wall_time,
            error: Some(e.to_string()),
        },
    }
}

/// Thread pool honouring `EEM_THREADS`.
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("EEM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

/// One record per seed, in seed order. A failing seed is recorded with its
/// error and NaN metrics instead of aborting the batch.
pub fn run_benchmark(scheme: Scheme, config: &SystemConfig, seeds: &[u64]) -> Vec<RunRecord> {
    thread_pool().install(|| seeds.par_iter().map(|&s| record(scheme, config, s)).collect())
}

pub const BENCH_HEADER: &str = "scheme,seed,eta_bits_per_joule,sum_rate_bps_hz,iterations,wall_time_s";

#[derive(Serialize)]
struct BenchRow<'a> {
    scheme: &'a str,
    seed: u64,
    eta_bits_per_joule: f64,
    sum_rate_bps_hz: f64,
    iterations: usize,
    wall_time_s: f64,
}

fn header_writer<W: Write>(out: W, header: &str) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header.split(',')).map_err(|e| Error::Io(e.to_string()))?;
    Ok(w)
}

/// Write records as CSV. With `omit_timing` the wall time column is zeroed
/// so that reruns are byte-identical.
pub fn write_bench_csv<W: Write>(out: W, records: &[RunRecord], omit_timing: bool) -> Result<()> {
    let mut w = header_writer(out, BENCH_HEADER)?;
    for r in records {
        w.serialize(BenchRow {
            scheme: r.scheme.name(),
            seed: r.seed,
            eta_bits_per_joule: r.eta,
            sum_rate_bps_hz: r.sum_rate,
            iterations: r.iterations,
            wall_time_s: if omit_timing { 0.0 } else { r.wall_time },
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// Parse `a..b` (exclusive), `a..=b` or a comma list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("bad seed list {text:?}"));
    if let Some((a, b)) = text.split_once("..=") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return Ok((a..=b).collect());
    }
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return Ok((a..b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

/// Quantity varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Per-BS budget in dBm.
    Pt,
    /// RIS count with `N + M` held constant.
    M,
    /// Elements per RIS.
    L,
    /// Phase bits; `0` stands for continuous.
    B,
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<SweepVariable> {
        match s.to_ascii_lowercase().as_str() {
            "pt" | "p_t" | "ptdbm" => Ok(SweepVariable::Pt),
            "m" => Ok(SweepVariable::M),
            "l" => Ok(SweepVariable::L),
            "b" | "bits" => Ok(SweepVariable::B),
            _ => Err(Error::InvalidConfig(format!("unknown sweep variable {s:?}"))),
        }
    }
}

/// Configuration at one grid point.
pub fn sweep_point(variable: SweepVariable, value: f64, base: &SystemConfig) -> Result<SystemConfig> {
    let mut c = base.clone();
    let count = |v: f64| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::InvalidConfig(format!("grid value {v} is not a count")))
        }
    };
    match variable {
        SweepVariable::Pt => c.pt_w = crate::config::dbm_to_w(value),
        SweepVariable::M => {
            let m = count(value)?;
            let total = base.n_bs + base.n_ris;
            if m >= total {
                return Err(Error::InvalidConfig(format!("M = {m} leaves no BS out of {total}")));
            }
            c.n_ris = m;
            c.n_bs = total - m;
        }
        SweepVariable::L => c.elements_per_ris = count(value)?,
        SweepVariable::B => {
            c.resolution = match count(value)? {
                0 => PhaseResolution::Continuous,
                b => PhaseResolution::Bits(b as u8),
            }
        }
    }
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub eta: f64,
    pub sum_rate: f64,
    pub iterations: usize,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Proposed scheme at every grid point and seed. Seeds are shared across
/// grid points so trends are compared on common random numbers.
pub fn sweep_rows(
    variable: SweepVariable,
    grid: &[f64],
    base: &SystemConfig,
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    let configs: Vec<SystemConfig> = grid.iter().map(|&v| sweep_point(variable, v, base)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..grid.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let rows = thread_pool().install(|| {
        jobs.par_iter()
            .map(|&(i, seed)| {
                let r = record(Scheme::ProposedRis, &configs[i], seed);
                SweepRow {
                    value: grid[i],
                    seed,
                    eta: r.eta,
                    sum_rate: r.sum_rate,
                    iterations: r.iterations,
                    wall_time: r.wall_time,
                    error: r.error,
                }
            })
            .collect()
    });
    Ok(rows)
}

pub const SWEEP_HEADER: &str = "value,seed,eta_bits_per_joule,sum_rate_bps_hz,iterations,wall_time_s";

#[derive(Serialize)]
struct SweepCsvRow {
    value: f64,
    seed: u64,
    eta_bits_per_joule: f64,
    sum_rate_bps_hz: f64,
    iterations: usize,
    wall_time_s: f64,
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow], omit_timing: bool) -> Result<()> {
    let mut w = header_writer(out, SWEEP_HEADER)?;
    for r in rows {
        w.serialize(SweepCsvRow {
            value: r.value,
            seed: r.seed,
            eta_bits_per_joule: r.eta,
            sum_rate_bps_hz: r.sum_rate,
            iterations: r.iterations,
            wall_time_s: if omit_timing { 0.0 } else { r.wall_time },
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// Mean over the successful seeds; NaN when every seed failed.
pub fn mean_finite(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().filter(|v| v.is_finite()).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

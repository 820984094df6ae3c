//! Self-check suites run by the `validate` subcommand.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analog::{closed_form_phase, objective_channel, ElementWorkspace};
use crate::analysis::{prop1_derivative, prop1_eta, Prop2Constants, Prop3Params};
use crate::channel::{effective_channel, ChannelSet};
use crate::config::{PathLossModel, PhaseResolution, SystemConfig};
use crate::digital::{dinkelbach_power_allocation, zf_beamformer};
use crate::eem::{init_random_phase, run_eem};
use crate::error::Result;
use crate::metrics::{energy_efficiency, total_power, user_rates};
use crate::numerics::ComplexMatrix;
use crate::phase::PhaseConfig;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Passes needed for the suite to count as green.
    pub required: usize,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.passed >= self.required
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let normal = rand_distr::StandardNormal;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(normal);
        let im: f64 = rng.sample(normal);
        num_complex::Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// `H V` must be diagonal with entries `sqrt(p_k)`.
pub fn zf_suite(instances: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let passed = (0..instances)
        .filter(|_| {
            let k = rng.random_range(1..=8);
            let t = rng.random_range(k..=32);
            let h = gaussian(&mut rng, k, t);
            let p: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..4.0)).collect();
            let Ok(beam) = zf_beamformer(&h, &p) else { return false };
            let hv = &h * &beam.v_d;
            (0..k).all(|i| {
                (0..k).all(|j| {
                    let z = hv[(i, j)];
                    if i == j {
                        (z.norm() - p[i].sqrt()).abs() <= 1e-9 * p[i].sqrt()
                    } else {
                        z.norm() <= 1e-9
                    }
                })
            })
        })
        .count();
    SuiteResult { name: "zf_properties", passed, total: instances, required: instances }
}

/// Closed-form element phase against a uniform angle grid, reflected path only.
pub fn closed_form_suite(instances: usize, grid: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    for _ in 0..instances {
        let k = rng.random_range(1..=3);
        let e = rng.random_range(k.max(2)..=6);
        let t = rng.random_range(k..=5);
        let ch = ChannelSet { h_d: gaussian(&mut rng, k, t), h_br: gaussian(&mut rng, e, t), h_ru_h: gaussian(&mut rng, k, e), topology: None };
        let theta: Vec<f64> = (0..e).map(|_| rng.random::<f64>() * TAU).collect();
        let p: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..2.0)).collect();
        let j = rng.random_range(0..e);
        let ok = (|| -> Result<bool> {
            let h = objective_channel(&ch, &PhaseConfig::Continuous { theta: theta.clone() }, false)?;
            let ws = ElementWorkspace::assemble(&ch, &h, j, theta[j], &p)?;
            let cf = closed_form_phase(&ws)?;
            let best = (0..grid).map(|i| ws.objective(i as f64 * TAU / grid as f64)).fold(f64::INFINITY, f64::min);
            Ok(cf.f <= best + 1e-8 * best.abs())
        })();
        passed += usize::from(matches!(ok, Ok(true)));
    }
    SuiteResult { name: "closed_form_vs_grid", passed, total: instances, required: instances * 95 / 100 }
}

/// Small deployment with equal-strength links in which every phase state
/// can be enumerated.
pub fn exhaustive_config() -> SystemConfig {
    SystemConfig {
        n_bs: 2,
        antennas_per_bs: 2,
        n_users: 2,
        n_ris: 1,
        elements_per_ris: 4,
        resolution: PhaseResolution::Bits(1),
        path_loss: PathLossModel::Unit,
        ..SystemConfig::default()
    }
}

/// Best `eta` over all phase states, each with its own power allocation.
pub fn exhaustive_eta(config: &SystemConfig, ch: &ChannelSet) -> Result<f64> {
    let PhaseResolution::Bits(bits) = config.resolution else {
        return Err(crate::Error::InvalidConfig("enumeration needs discrete phases".into()));
    };
    let e = config.ris_elements();
    let levels = 1u32 << bits;
    let mut best = f64::NEG_INFINITY;
    for code in 0..levels.pow(e as u32) {
        let indices = (0..e).map(|i| code / levels.pow(i as u32) % levels).collect();
        let q = PhaseConfig::Discrete { bits, indices };
        let h = effective_channel(ch, &q)?;
        let beam = dinkelbach_power_allocation(&h, config)?;
        let rates = user_rates(&h, &beam.v_d, config.noise_w)?;
        let eta = energy_efficiency(&rates, &total_power(config, &beam.v_d)?, config.bandwidth_hz);
        best = best.max(eta);
    }
    Ok(best)
}

/// Alternating optimization within 5% of the enumerated optimum.
pub fn exhaustive_suite(seeds: std::ops::Range<u64>) -> SuiteResult {
    let config = exhaustive_config();
    let total = seeds.clone().count();
    let passed = seeds
        .filter(|&seed| {
            let ch = ChannelSet::generate(&config, seed);
            let (Ok(rep), Ok(best)) = (run_eem(&config, &ch, &init_random_phase(&config, seed)), exhaustive_eta(&config, &ch)) else {
                return false;
            };
            rep.final_eta >= 0.95 * best
        })
        .count();
    SuiteResult { name: "exhaustive_vs_sweep", passed, total, required: total * 9 / 10 }
}

/// Richardson-extrapolated central difference.
pub fn richardson(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1e-12);
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp()
}

/// Random deployment parameters for the analytic models.
pub fn random_model_config(rng: &mut ChaCha8Rng) -> SystemConfig {
    let n_bs = rng.random_range(1..=6);
    SystemConfig {
        n_bs,
        n_users: rng.random_range(1..=8),
        n_ris: rng.random_range(1..=6),
        elements_per_ris: rng.random_range(4..=256),
        bandwidth_hz: log_uniform(rng, 1e6, 1e8),
        noise_w: log_uniform(rng, 1e-14, 1e-10),
        omega: rng.random_range(1.0..3.0),
        pb_w: log_uniform(rng, 0.1, 20.0),
        pu_w: log_uniform(rng, 1e-3, 0.1),
        pt_w: log_uniform(rng, 0.01, 10.0),
        ..SystemConfig::default()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * b.abs()
}

/// Closed-form derivatives against finite differences of their own `eta`.
pub fn derivative_suite(draws: usize, seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    for _ in 0..draws {
        let cfg = random_model_config(&mut rng);
        let s = log_uniform(&mut rng, 1e-3, 10.0);
        let one = close(prop1_derivative(s, &cfg), richardson(|x| prop1_eta(x, &cfg), s));

        let norms: Vec<f64> = (0..cfg.n_users).map(|_| log_uniform(&mut rng, 1e-2, 1e2) * cfg.noise_w).collect();
        let c = Prop2Constants::new(&cfg, &norms);
        let m = rng.random_range(1.0..9.0);
        let two = close(c.derivative(m), richardson(|x| c.eta(x), m));

        let a: Vec<f64> = (0..cfg.n_users).map(|_| log_uniform(&mut rng, 1.0, 1e4)).collect();
        let p3 = Prop3Params::new(&cfg, cfg.n_bs as f64 * cfg.pt_w, &a);
        let l = log_uniform(&mut rng, 1.0, 4096.0);
        let three = close(p3.derivative(l), richardson(|x| p3.eta(x), l));
        passed += usize::from(one && two && three);
    }
    SuiteResult { name: "derivative_finite_difference", passed, total: draws, required: draws }
}

/// Every suite at its default size.
pub fn run_all() -> Vec<SuiteResult> {
    vec![
        zf_suite(500, 1),
        closed_form_suite(200, 10_000, 2),
        exhaustive_suite(0..20),
        derivative_suite(100, 4),
    ]
}

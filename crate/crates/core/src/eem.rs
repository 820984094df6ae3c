//! Alternating digital/analog optimization of the energy efficiency.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analog::analog_sweep;
use crate::channel::{effective_channel, ChannelSet};
use crate::config::{PhaseResolution, SystemConfig};
use crate::digital::{allocate_with_warm_start, zf_beamformer, BeamformerState};
use crate::error::{Error, Result};
use crate::metrics::{energy_efficiency, total_power, user_rates, PowerBreakdown, RateReport};
use crate::phase::PhaseConfig;
use crate::rng::{stream, Domain};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EEReport {
    /// bits/J after each outer iteration.
    pub eta_trace: Vec<f64>,
    pub final_rates: RateReport,
    pub final_power: PowerBreakdown,
    pub final_eta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub phase_state: PhaseConfig,
    pub beam_state: BeamformerState,
}

/// Independent uniform grid draw per element (uniform angles when continuous).
pub fn init_random_phase(config: &SystemConfig, seed: u64) -> PhaseConfig {
    let n = config.ris_elements();
    let mut rng = stream(seed, Domain::PhaseInit, 0, 0);
    match config.resolution {
        PhaseResolution::Bits(bits) => {
            PhaseConfig::Discrete { bits, indices: (0..n).map(|_| rng.random_range(0..1u32 << bits)).collect() }
        }
        PhaseResolution::Continuous => PhaseConfig::Continuous {
            theta: (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect(),
        },
    }
}

struct Evaluated {
    eta: f64,
    rates: RateReport,
    power: PowerBreakdown,
    beam: BeamformerState,
}

fn evaluate(config: &SystemConfig, ch: &ChannelSet, q: &PhaseConfig, p: &[f64]) -> Result<Evaluated> {
    let h = effective_channel(ch, q)?;
    let beam = zf_beamformer(&h, p)?;
    let rates = user_rates(&h, &beam.v_d, config.noise_w)?;
    let power = total_power(config, &beam.v_d)?;
    let eta = energy_efficiency(&rates, &power, config.bandwidth_hz);
    Ok(Evaluated { eta, rates, power, beam })
}

/// Alternate power allocation on `H(Q)` and a phase sweep with `p` fixed
/// until `eta` changes by at most `epsilon` relative or `max_outer` is hit.
pub fn run_eem(config: &SystemConfig, ch: &ChannelSet, init_phase: &PhaseConfig) -> Result<EEReport> {
    run_eem_from(config, ch, init_phase, None)
}

/// As [`run_eem`], optionally resuming from a known power vector. A resumed
/// run may stop after one iteration when it cannot improve on its start.
pub fn run_eem_from(
    config: &SystemConfig,
    ch: &ChannelSet,
    init_phase: &PhaseConfig,
    init_power: Option<&[f64]>,
) -> Result<EEReport> {
    config.validate()?;
    ch.check_dimensions()?;
    init_phase.validate()?;
    if ch.antennas() != config.tx_antennas() || ch.users() != config.n_users {
        return Err(Error::Dimension(format!(
            "channel is {}x{}, configuration expects {}x{}",
            ch.users(),
            ch.antennas(),
            config.n_users,
            config.tx_antennas()
        )));
    }
    let has_ris = ch.elements() > 0;
    let mut q = init_phase.clone();
    let mut previous = match init_power {
        Some(p) => Some(evaluate(config, ch, &q, p)?.eta),
        None => None,
    };
    let mut warm: Option<Vec<f64>> = init_power.map(<[f64]>::to_vec);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut last = None;

    for _ in 0..config.max_outer {
        let h = effective_channel(ch, &q)?;
        let beam = allocate_with_warm_start(&h, config, warm.as_deref())?;
        let p = beam.power_alloc.clone();
        if has_ris {
            q = analog_sweep(ch, &p, &q, config)?.phase;
        }
        let mut state = evaluate(config, ch, &q, &p)?;
        state.beam.y = beam.y;
        state.beam.ratio_trace = beam.ratio_trace;
        trace.push(state.eta);
        warm = Some(p);
        let settled = match previous {
            Some(prev) => (state.eta - prev).abs() <= config.epsilon * prev.abs(),
            None => false,
        };
        previous = Some(state.eta);
        last = Some(state);
        if !has_ris || settled {
            converged = true;
            break;
        }
    }
    let state = last.ok_or_else(|| Error::InvalidConfig("max_outer must be positive".into()))?;
    Ok(EEReport {
        iterations: trace.len(),
        eta_trace: trace,
        final_rates: state.rates,
        final_power: state.power,
        final_eta: state.eta,
        converged,
        phase_state: q,
        beam_state: state.beam,
    })
}

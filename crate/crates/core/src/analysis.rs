//! High-SNR energy-efficiency models and their derivatives.
//!
//! Three analytic models of `eta` are provided, one per swept quantity, each
//! with a closed-form derivative:
//!
//! * total transmit power `S`: `eta(S) = B log2(S / sigma^2) / (omega S + P_s)`;
//! * RIS count `M` with `N + M = N_0` fixed:
//!   `eta(M) = (c1 ln M + c2) / (c3 M^2 + c4 M + c5)`;
//! * RIS size `L`: `eta(L) = B log2(L c) / (W + L M P_R)` with
//!   `c = (M / K) sum_k a_k` and `W = omega sum_k p_k + K P_U + N P_B`.
//!
//! The last model assumes interference-free (ZF) reception.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::harness::{mean_finite, sweep_rows, SweepRow, SweepVariable};

/// `B log2(S / sigma^2) / (omega S + P_s)`.
pub fn prop1_eta(s: f64, config: &SystemConfig) -> f64 {
    config.bandwidth_hz * (s / config.noise_w).log2() / (config.omega * s + config.static_power_w())
}

/// Numerator `h(S)` of `d eta / dS` over the common denominator
/// `S (omega S + P_s)^2`.
pub fn prop1_molecule(s: f64, config: &SystemConfig) -> f64 {
    let b = config.bandwidth_hz;
    let w = config.omega;
    let ps = config.static_power_w();
    b * ps / LN_2 + w * b * s / LN_2 - w * b * s * s.ln() / LN_2 + w * b * s * config.noise_w.log2()
}

/// `h'(S) = -omega B log2(S / sigma^2)`.
pub fn prop1_molecule_slope(s: f64, config: &SystemConfig) -> f64 {
    -config.omega * config.bandwidth_hz * (s / config.noise_w).log2()
}

/// `d eta / dS` of [`prop1_eta`].
pub fn prop1_derivative(s: f64, config: &SystemConfig) -> f64 {
    let d = config.omega * s + config.static_power_w();
    prop1_molecule(s, config) / (s * d * d)
}

/// Constants of the RIS-count model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop2Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl Prop2Constants {
    /// `per_user_norms[k] = |v_k|^2`, the squared precoder column norms
    /// (their sum is `Tr(V^H V)`). `N_0 = n_bs + n_ris`.
    pub fn new(config: &SystemConfig, per_user_norms: &[f64]) -> Prop2Constants {
        let b = config.bandwidth_hz;
        let k = config.n_users as f64;
        let l = config.elements_per_ris as f64;
        let n0 = (config.n_bs + config.n_ris) as f64;
        let trace: f64 = per_user_norms.iter().sum();
        Prop2Constants {
            c1: 2.0 * b * k / LN_2,
            c2: b * per_user_norms.iter().map(|v| (l * l * v / config.noise_w).log2()).sum::<f64>(),
            c3: config.omega * l * l * trace,
            c4: l * config.pr_element_w() - config.pb_w,
            c5: k * config.pu_w + n0 * config.pb_w,
        }
    }

    pub fn eta(&self, m: f64) -> f64 {
        (self.c1 * m.ln() + self.c2) / (self.c3 * m * m + self.c4 * m + self.c5)
    }

    /// The three parts of the derivative numerator:
    /// `(c1 - c2)(M c4 + M^2 c3)`, `c1 c5 - M^2 c2 c3` and
    /// `-M ln M (c1 c4 + 2 M c1 c3)`.
    pub fn terms(&self, m: f64) -> [f64; 3] {
        let Prop2Constants { c1, c2, c3, c4, c5 } = *self;
        [
            (c1 - c2) * (m * c4 + m * m * c3),
            c1 * c5 - m * m * c2 * c3,
            -m * m.ln() * (c1 * c4 + 2.0 * m * c1 * c3),
        ]
    }

    pub fn derivative(&self, m: f64) -> f64 {
        let den = self.c3 * m * m + self.c4 * m + self.c5;
        self.terms(m).iter().sum::<f64>() / (m * den * den)
    }
}

/// `d eta / dM` of the RIS-count model.
pub fn prop2_derivative(m: f64, config: &SystemConfig, per_user_norms: &[f64]) -> f64 {
    Prop2Constants::new(config, per_user_norms).derivative(m)
}

/// Parameters of the RIS-size model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop3Params {
    pub bandwidth_hz: f64,
    pub n_ris: f64,
    pub pr_w: f64,
    /// `omega sum_k p_k + K P_U + N P_B`.
    pub w: f64,
    /// `(M / K) sum_k a_k`.
    pub c: f64,
}

impl Prop3Params {
    /// `a_k` is the per-element SNR contribution of user `k`.
    pub fn new(config: &SystemConfig, transmit_sum_w: f64, a: &[f64]) -> Prop3Params {
        let m = config.n_ris as f64;
        Prop3Params {
            bandwidth_hz: config.bandwidth_hz,
            n_ris: m,
            pr_w: config.pr_element_w(),
            w: config.omega * transmit_sum_w
                + config.n_users as f64 * config.pu_w
                + config.n_bs as f64 * config.pb_w,
            c: m / config.n_users as f64 * a.iter().sum::<f64>(),
        }
    }

    pub fn eta(&self, l: f64) -> f64 {
        self.bandwidth_hz * (l * self.c).log2() / (self.w + l * self.n_ris * self.pr_w)
    }

    /// Numerator `g(L)` of `d eta / dL` over `L (W + L M P_R)^2`.
    pub fn g(&self, l: f64) -> f64 {
        let b = self.bandwidth_hz;
        b / LN_2 * self.w + ((l - l * l.ln()) * b / LN_2 - l * b * self.c.log2()) * self.n_ris * self.pr_w
    }

    pub fn derivative(&self, l: f64) -> f64 {
        let d = self.w + l * self.n_ris * self.pr_w;
        self.g(l) / (l * d * d)
    }
}

/// Sufficient condition for the RIS-size curve to rise before it falls:
/// `P_s / (M P_R) > ln(N P_T / (K sigma^2))`, with `P_s = K P_U + N P_B`.
pub fn prop3_condition(config: &SystemConfig) -> bool {
    let ps = config.n_users as f64 * config.pu_w + config.n_bs as f64 * config.pb_w;
    let m_pr = config.n_ris as f64 * config.pr_element_w();
    let rhs = (config.n_bs as f64 * config.pt_w / (config.n_users as f64 * config.noise_w)).ln();
    ps / m_pr > rhs
}

/// `(g(L), condition)`.
pub fn prop3_g(l: f64, params: &Prop3Params, config: &SystemConfig) -> (f64, bool) {
    (params.g(l), prop3_condition(config))
}

/// Differences below this fraction of the local value count as flat.
pub const FLAT_TOL: f64 = 1e-9;
/// Relative tolerance of the trend verdicts.
pub const TREND_TOL: f64 = 0.05;

fn step_signs(values: &[f64]) -> Vec<i8> {
    values
        .windows(2)
        .filter_map(|w| {
            let d = w[1] - w[0];
            if d.abs() < FLAT_TOL * w[0].abs().max(w[1].abs()) {
                None
            } else {
                Some(if d > 0.0 { 1 } else { -1 })
            }
        })
        .collect()
}

/// Rises, then falls: exactly one sign change of the differences, from up to
/// down, ignoring flat steps.
pub fn rises_then_falls(values: &[f64]) -> bool {
    let s = step_signs(values);
    let changes = s.windows(2).filter(|w| w[0] != w[1]).count();
    changes == 1 && s.first() == Some(&1)
}

/// No decrease beyond [`TREND_TOL`] anywhere and a final relative change below it.
pub fn rises_then_flattens(values: &[f64]) -> bool {
    let no_drop = values.windows(2).all(|w| w[1] >= w[0] * (1.0 - TREND_TOL));
    let flat_end = match values {
        [.., a, b] => ((b - a) / a).abs() < TREND_TOL,
        _ => false,
    };
    no_drop && flat_end
}

/// Non-decreasing up to a one-sided relative slack.
pub fn nondecreasing_within(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] * (1.0 - slack))
}

pub fn argmax(values: &[f64]) -> Option<usize> {
    values.iter().enumerate().filter(|(_, v)| v.is_finite()).max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    /// 1, 2 or 3 for the power, count and size models; 0 for a bit sweep.
    pub proposition_id: u8,
    pub sweep_variable: SweepVariable,
    pub sweep_points: Vec<f64>,
    /// Mean bits/J per grid point.
    pub eta_values: Vec<f64>,
    /// Mean bits/s/Hz per grid point.
    pub sum_rate_values: Vec<f64>,
    /// Finite-difference slope of `eta_values` over the grid.
    pub derivative_values: Vec<f64>,
    pub condition_holds: bool,
    pub verdict: bool,
}

fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (a, b) = match (i, n) {
                (_, 1) => return 0.0,
                (0, _) => (0, 1),
                (i, n) if i == n - 1 => (n - 2, n - 1),
                (i, _) => (i - 1, i + 1),
            };
            (y[b] - y[a]) / (x[b] - x[a])
        })
        .collect()
}

/// Summarize sweep rows into per-point means and a trend verdict.
pub fn summarize(variable: SweepVariable, grid: &[f64], rows: &[SweepRow], config: &SystemConfig) -> PropositionReport {
    let mean_of = |f: fn(&SweepRow) -> f64| -> Vec<f64> {
        grid.iter().map(|&g| mean_finite(rows.iter().filter(|r| r.value == g).map(f))).collect()
    };
    let eta_values = mean_of(|r| r.eta);
    let sum_rate_values = mean_of(|r| r.sum_rate);
    let derivative_values = slopes(grid, &eta_values);
    let (proposition_id, condition_holds, verdict) = match variable {
        SweepVariable::Pt => (1, true, rises_then_flattens(&eta_values)),
        SweepVariable::M => (2, true, rises_then_falls(&eta_values)),
        SweepVariable::L => (3, prop3_condition(config), rises_then_falls(&eta_values)),
        SweepVariable::B => (0, true, eta_values.iter().all(|v| v.is_finite())),
    };
    PropositionReport {
        proposition_id,
        sweep_variable: variable,
        sweep_points: grid.to_vec(),
        eta_values,
        sum_rate_values,
        derivative_values,
        condition_holds,
        verdict,
    }
}

/// Full optimization at every grid point and seed, summarized.
pub fn empirical_sweep(
    variable: SweepVariable,
    grid: &[f64],
    config: &SystemConfig,
    seeds: &[u64],
) -> Result<(PropositionReport, Vec<SweepRow>)> {
    if grid.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig("sweep needs a grid point and a seed".into()));
    }
    let rows = sweep_rows(variable, grid, config, seeds)?;
    Ok((summarize(variable, grid, &rows, config), rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-4 * x;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn prop1_small_power_limit() {
        let cfg = SystemConfig::default();
        let want = cfg.omega * cfg.bandwidth_hz * cfg.static_power_w() / LN_2;
        let got = prop1_molecule(1e-15, &cfg);
        assert!((got - want).abs() <= 1e-6 * want);
    }

    #[test]
    fn prop1_single_root() {
        let cfg = SystemConfig::default();
        let grid: Vec<f64> = (0..=900).map(|i| 10f64.powf(-6.0 + i as f64 / 100.0)).collect();
        let signs: Vec<bool> = grid.iter().map(|&s| prop1_derivative(s, &cfg) > 0.0).collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1);
        assert!(signs[0] && !signs[signs.len() - 1]);
    }

    #[test]
    fn prop1_molecule_slope_matches() {
        let cfg = SystemConfig::default();
        for s in [1e-3, 0.1, 4.0] {
            let fd = central(|x| prop1_molecule(x, &cfg), s);
            assert!((fd - prop1_molecule_slope(s, &cfg)).abs() <= 1e-6 * fd.abs());
        }
    }

    #[test]
    fn prop2_terms_sum_to_numerator() {
        let cfg = SystemConfig::default();
        let c = Prop2Constants::new(&cfg, &[1e-6, 2e-6, 5e-7]);
        for m in [1.0, 2.5, 6.0] {
            let fd = central(|x| c.eta(x), m);
            assert!((c.derivative(m) - fd).abs() <= 1e-6 * fd.abs());
            if c.c4 + 2.0 * m * c.c3 >= 0.0 {
                assert!(c.terms(m)[2] <= 0.0);
            }
        }
    }

    #[test]
    fn prop3_derivative_and_decay() {
        let cfg = SystemConfig::default();
        let p = Prop3Params::new(&cfg, 2.0, &[1e3; 8]);
        for l in [1.0, 10.0, 300.0] {
            let fd = central(|x| p.eta(x), l);
            assert!((p.derivative(l) - fd).abs() <= 1e-6 * fd.abs());
        }
        let peak = (1..=4096).map(|l| p.eta(l as f64)).fold(f64::NEG_INFINITY, f64::max);
        assert!(p.eta(1e6) < 0.01 * peak);
        assert!(prop3_condition(&cfg));
    }

    #[test]
    fn trend_helpers() {
        assert!(rises_then_falls(&[1.0, 2.0, 3.0, 2.0]));
        assert!(!rises_then_falls(&[3.0, 2.0, 1.0]));
        assert!(!rises_then_falls(&[1.0, 2.0, 1.0, 2.0]));
        assert!(rises_then_falls(&[1.0, 2.0, 2.0, 1.0]));
        assert!(rises_then_flattens(&[1.0, 2.0, 2.5, 2.51]));
        assert!(!rises_then_flattens(&[1.0, 2.0, 3.0]));
        assert_eq!(argmax(&[1.0, 5.0, f64::NAN, 2.0]), Some(1));
    }
}

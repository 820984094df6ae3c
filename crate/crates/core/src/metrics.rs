//! Rates, power consumption and energy efficiency.

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// bits/s/Hz per user.
    pub per_user: Vec<f64>,
    pub sum: f64,
    pub sinr_per_user: Vec<f64>,
}

/// Consumed power in W.
///
/// `total` is the exact sum of `amplifier_weighted` and the static terms.
/// The distributed fields are zero except for the DAS benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub transmit_per_bs: Vec<f64>,
    pub transmit_distributed: f64,
    pub amplifier_weighted: f64,
    pub static_bs: f64,
    pub static_ris: f64,
    pub static_users: f64,
    pub static_distributed: f64,
    pub total: f64,
}

/// SINR and Shannon rate of each user for an arbitrary precoder.
pub fn user_rates(h: &ComplexMatrix, v_d: &ComplexMatrix, noise_w: f64) -> Result<RateReport> {
    let k = h.nrows();
    if v_d.nrows() != h.ncols() || v_d.ncols() != k {
        return Err(Error::Dimension(format!(
            "channel {}x{} with precoder {}x{}",
            h.nrows(),
            h.ncols(),
            v_d.nrows(),
            v_d.ncols()
        )));
    }
    let hv = h * v_d;
    let mut sinr = Vec::with_capacity(k);
    for u in 0..k {
        let signal = hv[(u, u)].norm_sqr();
        let interference: f64 = (0..k).filter(|&o| o != u).map(|o| hv[(u, o)].norm_sqr()).sum();
        sinr.push(signal / (interference + noise_w));
    }
    let per_user: Vec<f64> = sinr.iter().map(|s| s.ln_1p() / std::f64::consts::LN_2).collect();
    let sum = per_user.iter().sum();
    Ok(RateReport { per_user, sum, sinr_per_user: sinr })
}

fn block_power(v_d: &ComplexMatrix, start: usize, rows: usize) -> f64 {
    v_d.rows(start, rows).iter().map(|z| z.norm_sqr()).sum()
}

/// Total consumed power with amplifier efficiency `omega` shared by all BSs.
///
/// Rows of `v_d` are the `N * N_a` BS antennas in BS order, followed by any
/// distributed antennas.
pub fn total_power(config: &SystemConfig, v_d: &ComplexMatrix) -> Result<PowerBreakdown> {
    let na = config.antennas_per_bs;
    let bs_rows = config.n_bs * na;
    let expected = bs_rows + config.distributed_antennas;
    if v_d.nrows() != expected {
        return Err(Error::BlockMismatch { rows: v_d.nrows(), expected });
    }
    let transmit_per_bs: Vec<f64> = (0..config.n_bs).map(|n| block_power(v_d, n * na, na)).collect();
    let transmit_distributed = block_power(v_d, bs_rows, config.distributed_antennas);
    let amplifier_weighted =
        config.omega * (transmit_per_bs.iter().sum::<f64>() + transmit_distributed);
    let static_bs = config.n_bs as f64 * config.pb_w;
    let static_ris = config.ris_elements() as f64 * config.pr_element_w();
    let static_users = config.n_users as f64 * config.pu_w;
    let static_distributed = config.distributed_antennas as f64 * config.das_element_w;
    let total = amplifier_weighted + static_bs + static_ris + static_users + static_distributed;
    Ok(PowerBreakdown {
        transmit_per_bs,
        transmit_distributed,
        amplifier_weighted,
        static_bs,
        static_ris,
        static_users,
        static_distributed,
        total,
    })
}

/// `B * R / P` in bits per Joule.
pub fn energy_efficiency(rates: &RateReport, power: &PowerBreakdown, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * rates.sum / power.total
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_precoder_zero_rate() {
        let h = ComplexMatrix::from_element(2, 3, c(1.0, 0.5));
        let v = ComplexMatrix::zeros(3, 2);
        let r = user_rates(&h, &v, 1e-3).unwrap();
        assert_eq!(r.sum, 0.0);
        assert!(r.per_user.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_snr_is_one_bit() {
        let h = ComplexMatrix::from_element(1, 1, c(0.0, 2.0));
        let v = ComplexMatrix::from_element(1, 1, c(0.5, 0.0));
        let r = user_rates(&h, &v, 1.0).unwrap();
        assert!((r.sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interference_counts() {
        // two users, identity channel, crossed precoder columns
        let h = ComplexMatrix::identity(2, 2);
        let v = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let r = user_rates(&h, &v, 1.0).unwrap();
        assert!((r.sinr_per_user[0] - 0.5).abs() < 1e-15);
        assert!((r.sinr_per_user[1] - 1.0).abs() < 1e-15);
        let want = (1.5f64).log2() + 1.0;
        assert!((r.sum - want).abs() < 1e-14);
    }

    fn tiny_config() -> SystemConfig {
        SystemConfig {
            n_bs: 1,
            antennas_per_bs: 1,
            n_users: 1,
            n_ris: 1,
            elements_per_ris: 2,
            pb_w: 10.0,
            pu_w: 0.1,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn static_power_arithmetic() {
        let cfg = tiny_config();
        let pr = cfg.pr_element_w();
        assert!((pr - 0.0316).abs() < 1e-4);
        let p = total_power(&cfg, &ComplexMatrix::zeros(1, 1)).unwrap();
        assert_eq!(p.total, 10.0 + 2.0 * pr + 0.1);
        assert!((p.total - 10.1632).abs() < 2e-4);
        assert_eq!(p.amplifier_weighted, 0.0);
    }

    #[test]
    fn unit_precoder_adds_one_watt() {
        let cfg = tiny_config();
        let base = total_power(&cfg, &ComplexMatrix::zeros(1, 1)).unwrap().total;
        let v = ComplexMatrix::from_element(1, 1, c(0.6, 0.8));
        let p = total_power(&cfg, &v).unwrap();
        assert!((p.total - base - 1.0).abs() < 1e-14);
        let doubled = total_power(&cfg, &(v * c(2.0, 0.0))).unwrap();
        assert!((doubled.amplifier_weighted - 4.0 * p.amplifier_weighted).abs() < 1e-14);
    }

    #[test]
    fn block_mismatch() {
        let cfg = SystemConfig { n_bs: 2, antennas_per_bs: 3, ..tiny_config() };
        let err = total_power(&cfg, &ComplexMatrix::zeros(5, 1)).unwrap_err();
        assert!(matches!(err, Error::BlockMismatch { rows: 5, expected: 6 }));
    }

    #[test]
    fn efficiency_arithmetic() {
        let rates = RateReport { per_user: vec![10.0], sum: 10.0, sinr_per_user: vec![1023.0] };
        let cfg = tiny_config();
        let mut power = total_power(&cfg, &ComplexMatrix::zeros(1, 1)).unwrap();
        power.total = 50.0;
        assert!((energy_efficiency(&rates, &power, 10e6) - 2.0e6).abs() < 1e-6);
        assert!((energy_efficiency(&rates, &power, 20e6) - 4.0e6).abs() < 1e-6);
        let zero = RateReport { per_user: vec![0.0], sum: 0.0, sinr_per_user: vec![0.0] };
        assert_eq!(energy_efficiency(&zero, &power, 10e6), 0.0);
    }
}

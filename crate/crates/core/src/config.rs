//! System parameters.
//!
//! [`SystemConfig`] holds every quantity in linear SI units. The on-disk JSON
//! format ([`ConfigFile`]) carries units in its key names (`pt_dbm`,
//! `noise_dbm`, `bandwidth_hz`, ...) and is converted once at load time.
//! Missing keys take the reference values from the simulation setup
//! (4 BSs x 8 antennas, 8 users, 3 RISs x 64 elements, 3-bit phases).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn dbw_to_w(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

/// Phase resolution of every RIS element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseResolution {
    /// `2^b` uniformly spaced phases `i * pi / 2^(b-1)`.
    Bits(u8),
    Continuous,
}

impl PhaseResolution {
    pub fn levels(self) -> Option<u32> {
        match self {
            PhaseResolution::Bits(b) => Some(1u32 << b),
            PhaseResolution::Continuous => None,
        }
    }
}

impl fmt::Display for PhaseResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseResolution::Bits(b) => write!(f, "{b}"),
            PhaseResolution::Continuous => f.write_str("continuous"),
        }
    }
}

impl std::str::FromStr for PhaseResolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "continuous" | "inf" | "cont" => Ok(PhaseResolution::Continuous),
            other => other
                .parse::<u8>()
                .map(PhaseResolution::Bits)
                .map_err(|_| Error::InvalidConfig(format!("bad phase resolution `{other}`"))),
        }
    }
}

impl Serialize for PhaseResolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PhaseResolution::Bits(b) => s.serialize_u8(*b),
            PhaseResolution::Continuous => s.serialize_str("continuous"),
        }
    }
}

impl<'de> Deserialize<'de> for PhaseResolution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Bits(u8),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Bits(b) => Ok(PhaseResolution::Bits(b)),
            Raw::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLossModel {
    /// `28 + 22 log10(d) + 20 log10(f_GHz)` dB on every link.
    UmaLos,
    /// Unit large-scale gain; only the Rician small-scale part remains.
    Unit,
}

/// How the element-wise phase update picks a new phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSearch {
    /// Evaluate every grid phase on the full objective.
    Enumerate,
    /// Stationary point of the per-element rational objective, then quantize.
    ClosedForm,
}

/// Structure of the transmit power constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// `Tr(V_n^H V_n) <= P_T` for every BS block.
    PerBs,
    /// One constraint `Tr(V^H V) <= N * P_T` over all antennas.
    SharedTotal,
}

/// Static power drawn by one RIS element, keyed by phase resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RisElementPower {
    pub by_bits: BTreeMap<u8, f64>,
    pub continuous_w: f64,
}

impl RisElementPower {
    pub fn get(&self, res: PhaseResolution) -> Option<f64> {
        match res {
            PhaseResolution::Bits(b) => self.by_bits.get(&b).copied(),
            PhaseResolution::Continuous => Some(self.continuous_w),
        }
    }
}

impl Default for RisElementPower {
    fn default() -> Self {
        let by_bits = [(1u8, 5.0), (2, 10.0), (3, 15.0)]
            .into_iter()
            .map(|(b, dbm)| (b, dbm_to_w(dbm)))
            .collect();
        RisElementPower { by_bits, continuous_w: dbm_to_w(25.0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_bs: usize,
    pub antennas_per_bs: usize,
    pub n_users: usize,
    pub n_ris: usize,
    pub elements_per_ris: usize,
    pub resolution: PhaseResolution,
    /// Active antennas placed at RIS element positions (DAS benchmark only).
    pub distributed_antennas: usize,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    pub rician_k: f64,
    pub carrier_hz: f64,
    pub bs_radius_m: f64,
    pub user_radius_m: f64,
    pub bs_antenna_spacing_m: f64,
    pub ris_element_size_m: f64,
    pub pt_w: f64,
    pub omega: f64,
    pub pb_w: f64,
    pub pr_w: RisElementPower,
    pub pu_w: f64,
    pub das_element_w: f64,
    pub budget: BudgetMode,
    pub epsilon: f64,
    pub rho: f64,
    pub seed: u64,
    pub path_loss: PathLossModel,
    pub phase_search: PhaseSearch,
    pub max_outer: usize,
    pub max_passes: usize,
    pub max_inner_iters: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_bs: 4,
            antennas_per_bs: 8,
            n_users: 8,
            n_ris: 3,
            elements_per_ris: 64,
            resolution: PhaseResolution::Bits(3),
            distributed_antennas: 0,
            bandwidth_hz: 10e6,
            noise_w: dbm_to_w(-90.0),
            rician_k: 4.0,
            carrier_hz: 5.9e9,
            bs_radius_m: 150.0,
            user_radius_m: 20.0,
            bs_antenna_spacing_m: 1.0,
            ris_element_size_m: 0.02,
            pt_w: dbm_to_w(30.0),
            omega: 1.0,
            pb_w: dbw_to_w(10.0),
            pr_w: RisElementPower::default(),
            pu_w: dbm_to_w(10.0),
            das_element_w: dbm_to_w(20.0),
            budget: BudgetMode::PerBs,
            epsilon: 1e-3,
            rho: 1e-3,
            seed: 0,
            path_loss: PathLossModel::UmaLos,
            phase_search: PhaseSearch::Enumerate,
            max_outer: 50,
            max_passes: 20,
            max_inner_iters: 10_000,
        }
    }
}

impl SystemConfig {
    /// Antennas driven by the digital precoder.
    pub fn tx_antennas(&self) -> usize {
        self.n_bs * self.antennas_per_bs + self.distributed_antennas
    }

    pub fn ris_elements(&self) -> usize {
        self.n_ris * self.elements_per_ris
    }

    pub fn pr_element_w(&self) -> f64 {
        self.pr_w.get(self.resolution).unwrap_or(0.0)
    }

    /// Static consumption `N P_B + M L P_R(b) + K P_U` (+ DAS elements).
    pub fn static_power_w(&self) -> f64 {
        self.n_bs as f64 * self.pb_w
            + self.ris_elements() as f64 * self.pr_element_w()
            + self.distributed_antennas as f64 * self.das_element_w
            + self.n_users as f64 * self.pu_w
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_bs == 0 || self.antennas_per_bs == 0 {
            return bad("at least one BS antenna is required".into());
        }
        if self.n_users == 0 {
            return bad("at least one user is required".into());
        }
        if self.n_users > self.tx_antennas() {
            return bad(format!(
                "K = {} exceeds the {} transmit antennas",
                self.n_users,
                self.tx_antennas()
            ));
        }
        match self.resolution {
            PhaseResolution::Bits(b) if !(1..=3).contains(&b) => {
                return bad(format!("phase bits must be 1, 2, 3 or continuous, got {b}"))
            }
            _ => {}
        }
        if self.ris_elements() > 0 && self.pr_w.get(self.resolution).is_none() {
            return bad(format!("no RIS element power for resolution {}", self.resolution));
        }
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise", self.noise_w),
            ("carrier_hz", self.carrier_hz),
            ("pt", self.pt_w),
            ("omega", self.omega),
            ("pb", self.pb_w),
            ("pu", self.pu_w),
            ("epsilon", self.epsilon),
            ("rho", self.rho),
            ("bs_radius_m", self.bs_radius_m),
            ("ris_element_size_m", self.ris_element_size_m),
            ("bs_antenna_spacing_m", self.bs_antenna_spacing_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.user_radius_m.is_finite() && self.user_radius_m >= 0.0) {
            return bad(format!("user_radius_m must be non-negative, got {}", self.user_radius_m));
        }
        if !(self.rician_k.is_finite() && self.rician_k >= 0.0) {
            return bad(format!("rician_k must be non-negative, got {}", self.rician_k));
        }
        if self.max_outer == 0 || self.max_passes == 0 || self.max_inner_iters == 0 {
            return bad("iteration caps must be positive".into());
        }
        Ok(())
    }

    /// Short fingerprint of the canonical serialization.
    pub fn hash_hex(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// JSON configuration with units in the key names. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub n_bs: Option<usize>,
    pub antennas_per_bs: Option<usize>,
    pub n_users: Option<usize>,
    pub n_ris: Option<usize>,
    pub elements_per_ris: Option<usize>,
    pub phase_bits: Option<PhaseResolution>,
    pub bandwidth_hz: Option<f64>,
    pub noise_dbm: Option<f64>,
    pub rician_k: Option<f64>,
    pub carrier_hz: Option<f64>,
    pub bs_radius_m: Option<f64>,
    pub user_radius_m: Option<f64>,
    pub bs_antenna_spacing_m: Option<f64>,
    pub ris_element_size_m: Option<f64>,
    pub pt_dbm: Option<f64>,
    pub omega: Option<f64>,
    pub pb_dbw: Option<f64>,
    /// Keys `"1"`, `"2"`, `"3"`, `"continuous"`.
    pub pr_dbm: Option<BTreeMap<String, f64>>,
    pub pu_dbm: Option<f64>,
    pub das_element_dbm: Option<f64>,
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
    pub seed: Option<u64>,
    pub path_loss: Option<PathLossModel>,
    pub phase_search: Option<PhaseSearch>,
    pub max_outer: Option<usize>,
    pub max_passes: Option<usize>,
    pub max_inner_iters: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn into_config(self) -> Result<SystemConfig> {
        let mut c = SystemConfig::default();
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            };
        }
        take!(n_bs);
        take!(antennas_per_bs);
        take!(n_users);
        take!(n_ris);
        take!(elements_per_ris);
        take!(bandwidth_hz);
        take!(rician_k);
        take!(carrier_hz);
        take!(bs_radius_m);
        take!(user_radius_m);
        take!(bs_antenna_spacing_m);
        take!(ris_element_size_m);
        take!(omega);
        take!(epsilon);
        take!(rho);
        take!(seed);
        take!(path_loss);
        take!(phase_search);
        take!(max_outer);
        take!(max_passes);
        take!(max_inner_iters);
        if let Some(r) = self.phase_bits {
            c.resolution = r;
        }
        if let Some(v) = self.noise_dbm {
            c.noise_w = dbm_to_w(v);
        }
        if let Some(v) = self.pt_dbm {
            c.pt_w = dbm_to_w(v);
        }
        if let Some(v) = self.pb_dbw {
            c.pb_w = dbw_to_w(v);
        }
        if let Some(v) = self.pu_dbm {
            c.pu_w = dbm_to_w(v);
        }
        if let Some(v) = self.das_element_dbm {
            c.das_element_w = dbm_to_w(v);
        }
        if let Some(map) = self.pr_dbm {
            for (key, dbm) in map {
                match key.parse::<PhaseResolution>()? {
                    PhaseResolution::Bits(b) => {
                        c.pr_w.by_bits.insert(b, dbm_to_w(dbm));
                    }
                    PhaseResolution::Continuous => c.pr_w.continuous_w = dbm_to_w(dbm),
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn load_config(text: &str) -> Result<SystemConfig> {
    ConfigFile::parse(text)?.into_config()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_w(30.0) - 1.0).abs() < 1e-12);
        assert!((dbm_to_w(-90.0) - 1e-12).abs() < 1e-24);
        assert!((dbw_to_w(10.0) - 10.0).abs() < 1e-12);
        assert!((w_to_dbm(0.01) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn defaults_validate() {
        let c = SystemConfig::default();
        c.validate().unwrap();
        assert_eq!(c.tx_antennas(), 32);
        assert_eq!(c.ris_elements(), 192);
        assert!((c.pr_element_w() - dbm_to_w(15.0)).abs() < 1e-15);
    }

    #[test]
    fn too_many_users_rejected() {
        let c = SystemConfig { n_users: 40, ..SystemConfig::default() };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn four_bits_rejected() {
        let c = SystemConfig { resolution: PhaseResolution::Bits(4), ..SystemConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_overrides_and_units() {
        let c = load_config(
            r#"{ "pt_dbm": 20, "phase_bits": "continuous", "n_ris": 2, "pr_dbm": {"continuous": 20} }"#,
        )
        .unwrap();
        assert!((c.pt_w - 0.1).abs() < 1e-12);
        assert_eq!(c.resolution, PhaseResolution::Continuous);
        assert_eq!(c.n_ris, 2);
        assert!((c.pr_element_w() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn malformed_json_reports_line() {
        let err = load_config("{\n  \"pt_dbm\": 20,\n  \"n_bs\": \"four\"\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(load_config(r#"{ "pt_watts": 1 }"#).is_err());
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = load_config(r#"{ "pt_dbm": 20, "n_ris": 2 }"#).unwrap();
        let b = load_config(r#"{ "n_ris": 2, "pt_dbm": 20 }"#).unwrap();
        assert_eq!(a.hash_hex(), b.hash_hex());
        let c = load_config(r#"{ "n_ris": 1, "pt_dbm": 20 }"#).unwrap();
        assert_ne!(a.hash_hex(), c.hash_hex());
    }
}

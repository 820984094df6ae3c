//! Topology, large-scale path loss and Rician small-scale fading.
//!
//! The equivalent downlink channel is `H = H_D + H_RU^H Q H_BR` with
//! `H_D: K x T`, `H_BR: ML x T`, `H_RU^H: K x ML` and `T = N * N_a`.
//! Each scalar link is `sqrt(g) (sqrt(k/(k+1)) e^{-j 2 pi d / lambda} +
//! sqrt(1/(k+1)) w)` where `d` is the exact element-to-element distance.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{PathLossModel, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::phase::PhaseConfig;
use crate::rng::{stream, Domain};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub bs_positions: Vec<Point>,
    pub ris_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    #[serde(with = "matrix_serde")]
    pub h_d: ComplexMatrix,
    #[serde(with = "matrix_serde")]
    pub h_br: ComplexMatrix,
    /// `H_RU^H`, users by RIS elements.
    #[serde(with = "matrix_serde")]
    pub h_ru_h: ComplexMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
}

fn uniform_in_disc<R: Rng>(rng: &mut R, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = TAU * rng.random::<f64>();
    [r * phi.cos(), r * phi.sin()]
}

/// BSs and RISs uniform in the disc of radius `bs_radius_m`, users uniform in
/// the disc of radius `user_radius_m`, all centred on the origin.
pub fn generate_topology(config: &SystemConfig, seed: u64) -> Topology {
    let place = |domain, count: usize, radius| {
        (0..count)
            .map(|i| uniform_in_disc(&mut stream(seed, domain, i as u64, 0), radius))
            .collect::<Vec<_>>()
    };
    Topology {
        bs_positions: place(Domain::BsPosition, config.n_bs, config.bs_radius_m),
        ris_positions: place(Domain::RisPosition, config.n_ris, config.bs_radius_m),
        user_positions: place(Domain::UserPosition, config.n_users, config.user_radius_m),
    }
}

pub fn path_loss_db(distance_m: f64, carrier_hz: f64) -> f64 {
    let d = distance_m.max(1.0);
    28.0 + 22.0 * d.log10() + 20.0 * (carrier_hz / 1e9).log10()
}

/// Linear power gain of the 3GPP UMa LOS model (distances clamped to 1 m).
pub fn path_loss_linear(distance_m: f64, carrier_hz: f64) -> f64 {
    10f64.powf(-path_loss_db(distance_m, carrier_hz) / 10.0)
}

/// Positions of the antennas of a BS: a uniform linear array along x.
pub fn bs_antenna_positions(center: Point, count: usize, spacing: f64) -> Vec<Point> {
    let mid = (count as f64 - 1.0) / 2.0;
    (0..count).map(|a| [center[0] + (a as f64 - mid) * spacing, center[1]]).collect()
}

/// Element positions of one RIS: a square grid when `count` is a perfect
/// square, a single row otherwise.
pub fn ris_element_positions(center: Point, count: usize, pitch: f64) -> Vec<Point> {
    let side = (count as f64).sqrt().round() as usize;
    if side * side == count && side > 0 {
        let mid = (side as f64 - 1.0) / 2.0;
        (0..count)
            .map(|l| {
                let (row, col) = (l / side, l % side);
                [center[0] + (col as f64 - mid) * pitch, center[1] + (row as f64 - mid) * pitch]
            })
            .collect()
    } else {
        bs_antenna_positions(center, count, pitch)
    }
}

fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

struct LinkModel {
    los_amp: f64,
    nlos_amp: f64,
    wavelength: f64,
    carrier_hz: f64,
    path_loss: PathLossModel,
}

impl LinkModel {
    fn new(config: &SystemConfig) -> LinkModel {
        let k = config.rician_k;
        LinkModel {
            los_amp: (k / (k + 1.0)).sqrt(),
            nlos_amp: (1.0 / (k + 1.0)).sqrt(),
            wavelength: SPEED_OF_LIGHT / config.carrier_hz,
            carrier_hz: config.carrier_hz,
            path_loss: config.path_loss,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R, from: Point, to: Point) -> Complex64 {
        let d = distance(from, to);
        let gain = match self.path_loss {
            PathLossModel::UmaLos => path_loss_linear(d, self.carrier_hz),
            PathLossModel::Unit => 1.0,
        };
        let los = Complex64::from_polar(1.0, -TAU * d / self.wavelength);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let w = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        (los * self.los_amp + w * self.nlos_amp) * gain.sqrt()
    }
}

/// Draw all three channel matrices for a fixed topology.
///
/// Streams are keyed per entity pair, so the direct links of BS `n` do not
/// depend on how many RISs or further BSs exist.
pub fn generate_channels(topology: &Topology, config: &SystemConfig, seed: u64) -> ChannelSet {
    let na = config.antennas_per_bs;
    let l = config.elements_per_ris;
    let n = topology.bs_positions.len();
    let m = topology.ris_positions.len();
    let k = topology.user_positions.len();
    let link = LinkModel::new(config);

    let bs_ant: Vec<Vec<Point>> = topology
        .bs_positions
        .iter()
        .map(|&c| bs_antenna_positions(c, na, config.bs_antenna_spacing_m))
        .collect();
    let ris_el: Vec<Vec<Point>> = topology
        .ris_positions
        .iter()
        .map(|&c| ris_element_positions(c, l, config.ris_element_size_m))
        .collect();

    let t = n * na;
    let mut h_d = ComplexMatrix::zeros(k, t);
    for (bs, ants) in bs_ant.iter().enumerate() {
        for (u, &user) in topology.user_positions.iter().enumerate() {
            let mut rng = stream(seed, Domain::BsUserLink, bs as u64, u as u64);
            for (a, &ant) in ants.iter().enumerate() {
                h_d[(u, bs * na + a)] = link.sample(&mut rng, ant, user);
            }
        }
    }

    let mut h_br = ComplexMatrix::zeros(m * l, t);
    for (bs, ants) in bs_ant.iter().enumerate() {
        for (r, elems) in ris_el.iter().enumerate() {
            let mut rng = stream(seed, Domain::BsRisLink, bs as u64, r as u64);
            for (e, &el) in elems.iter().enumerate() {
                for (a, &ant) in ants.iter().enumerate() {
                    h_br[(r * l + e, bs * na + a)] = link.sample(&mut rng, ant, el);
                }
            }
        }
    }

    let mut h_ru_h = ComplexMatrix::zeros(k, m * l);
    for (r, elems) in ris_el.iter().enumerate() {
        for (u, &user) in topology.user_positions.iter().enumerate() {
            let mut rng = stream(seed, Domain::RisUserLink, r as u64, u as u64);
            for (e, &el) in elems.iter().enumerate() {
                h_ru_h[(u, r * l + e)] = link.sample(&mut rng, el, user);
            }
        }
    }

    ChannelSet { h_d, h_br, h_ru_h, topology: Some(topology.clone()) }
}

impl ChannelSet {
    /// Topology and channels for `config`, both derived from `seed`.
    pub fn generate(config: &SystemConfig, seed: u64) -> ChannelSet {
        generate_channels(&generate_topology(config, seed), config, seed)
    }

    /// i.i.d. `CN(0, 1)` entries on every link, no geometry.
    pub fn iid_rayleigh(users: usize, antennas: usize, elements: usize, seed: u64) -> ChannelSet {
        let mut rng = stream(seed, Domain::BsUserLink, u64::MAX, u64::MAX);
        let mut draw = |rows, cols| {
            ComplexMatrix::from_fn(rows, cols, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
        };
        let h_d = draw(users, antennas);
        let h_br = draw(elements, antennas);
        let h_ru_h = draw(users, elements);
        ChannelSet { h_d, h_br, h_ru_h, topology: None }
    }

    pub fn users(&self) -> usize {
        self.h_d.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.h_d.ncols()
    }

    pub fn elements(&self) -> usize {
        self.h_br.nrows()
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let (k, t, e) = (self.users(), self.antennas(), self.elements());
        if self.h_br.ncols() != t || self.h_ru_h.nrows() != k || self.h_ru_h.ncols() != e {
            return Err(Error::Dimension(format!(
                "H_D {}x{}, H_BR {}x{}, H_RU^H {}x{}",
                k,
                t,
                self.h_br.nrows(),
                self.h_br.ncols(),
                self.h_ru_h.nrows(),
                self.h_ru_h.ncols()
            )));
        }
        Ok(())
    }

    /// Reflected part `H_RU^H Q H_BR` for reflection coefficients `q`.
    pub fn reflected(&self, q: &[Complex64]) -> ComplexMatrix {
        let mut scaled = self.h_ru_h.clone();
        for (j, &qj) in q.iter().enumerate() {
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= qj);
        }
        scaled * &self.h_br
    }
}

/// `H = H_D + H_RU^H Q H_BR`.
pub fn effective_channel(ch: &ChannelSet, q: &PhaseConfig) -> Result<ComplexMatrix> {
    if q.len() != ch.elements() {
        return Err(Error::Dimension(format!(
            "{} phases for {} RIS elements",
            q.len(),
            ch.elements()
        )));
    }
    if ch.elements() == 0 {
        return Ok(ch.h_d.clone());
    }
    Ok(&ch.h_d + ch.reflected(&q.coefficients()))
}

/// Off-diagonal RMS of `H_BR^H H_BR / (M L)`.
///
/// For i.i.d. fading the normalized Gram matrix concentrates on a scaled
/// identity and this decays like `(M L)^(-1/2)`.
pub fn hardening_metric(ch: &ChannelSet) -> f64 {
    let ml = ch.h_br.nrows();
    let t = ch.h_br.ncols();
    if ml == 0 || t < 2 {
        return 0.0;
    }
    let gram = ch.h_br.adjoint() * &ch.h_br / Complex64::new(ml as f64, 0.0);
    let mut sum = 0.0;
    for i in 0..t {
        for j in 0..t {
            if i != j {
                sum += gram[(i, j)].norm_sqr();
            }
        }
    }
    (sum / (t * (t - 1)) as f64).sqrt()
}

/// Complex matrices as `{rows, cols, data: [[re, im], ...]}`, row-major.
pub mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Flat {
        rows: usize,
        cols: usize,
        data: Vec<[f64; 2]>,
    }

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Flat { rows: m.nrows(), cols: m.ncols(), data }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let flat = Flat::deserialize(d)?;
        if flat.data.len() != flat.rows * flat.cols {
            return Err(serde::de::Error::custom(format!(
                "{} entries for a {}x{} matrix",
                flat.data.len(),
                flat.rows,
                flat.cols
            )));
        }
        Ok(ComplexMatrix::from_fn(flat.rows, flat.cols, |i, j| {
            let [re, im] = flat.data[i * flat.cols + j];
            Complex64::new(re, im)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PhaseResolution;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> SystemConfig {
        SystemConfig {
            n_bs: 2,
            antennas_per_bs: 2,
            n_users: 2,
            n_ris: 2,
            elements_per_ris: 4,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn topology_deterministic() {
        let c = small_config();
        assert_eq!(generate_topology(&c, 7), generate_topology(&c, 7));
        assert_ne!(generate_topology(&c, 7), generate_topology(&c, 8));
    }

    #[test]
    fn zero_radius_user_at_origin() {
        let c = SystemConfig { n_users: 1, user_radius_m: 0.0, ..small_config() };
        let t = generate_topology(&c, 3);
        assert_eq!(t.user_positions, vec![[0.0, 0.0]]);
    }

    #[test]
    fn topology_radii_respected() {
        let c = SystemConfig { n_bs: 50, n_ris: 50, n_users: 50, ..SystemConfig::default() };
        let t = generate_topology(&c, 1);
        let r = |p: &Point| (p[0] * p[0] + p[1] * p[1]).sqrt();
        assert!(t.bs_positions.iter().chain(&t.ris_positions).all(|p| r(p) <= 150.0));
        assert!(t.user_positions.iter().all(|p| r(p) <= 20.0));
    }

    #[test]
    fn path_loss_hand_values() {
        // 20 log10(5.9) = 15.417...
        let f = 5.9e9;
        let offset = 20.0 * 5.9f64.log10();
        assert!((path_loss_db(1.0, f) - (28.0 + offset)).abs() < 1e-12);
        assert!((path_loss_db(1.0, f) - 43.42).abs() < 5e-3);
        assert!((path_loss_db(100.0, f) - 87.42).abs() < 5e-3);
        assert!(path_loss_db(200.0, f) > path_loss_db(100.0, f));
        assert_eq!(path_loss_db(0.2, f), path_loss_db(1.0, f));
        assert!(path_loss_linear(1.0, f) <= 1.0);
    }

    #[test]
    fn pure_los_magnitude() {
        let c = SystemConfig { rician_k: 1e12, ..small_config() };
        let topo = generate_topology(&c, 4);
        let ch = generate_channels(&topo, &c, 4);
        let ants = bs_antenna_positions(topo.bs_positions[1], 2, 1.0);
        let d = distance(ants[1], topo.user_positions[0]);
        let g = path_loss_linear(d, c.carrier_hz);
        let h = ch.h_d[(0, 3)];
        assert!((h.norm() - g.sqrt()).abs() <= 1e-4 * g.sqrt());
    }

    #[test]
    fn same_seed_same_channels() {
        let c = small_config();
        assert_eq!(ChannelSet::generate(&c, 5), ChannelSet::generate(&c, 5));
    }

    #[test]
    fn adding_users_keeps_bs_links() {
        let c = small_config();
        let more = SystemConfig { n_users: 3, ..c.clone() };
        let a = ChannelSet::generate(&c, 9);
        let b = ChannelSet::generate(&more, 9);
        assert_eq!(a.h_br, b.h_br);
        assert_eq!(a.h_d.rows(0, 2), b.h_d.rows(0, 2));
    }

    #[test]
    fn effective_channel_reduces_to_direct() {
        let c = small_config();
        let mut ch = ChannelSet::generate(&c, 2);
        ch.h_ru_h.fill(Complex64::new(0.0, 0.0));
        let q = PhaseConfig::zeros(8, PhaseResolution::Bits(2));
        assert_eq!(effective_channel(&ch, &q).unwrap(), ch.h_d);
    }

    #[test]
    fn scalar_chain() {
        let c = |re, im| Complex64::new(re, im);
        let ch = ChannelSet {
            h_d: ComplexMatrix::from_element(1, 1, c(0.5, 0.1)),
            h_br: ComplexMatrix::from_element(1, 1, c(-0.3, 0.7)),
            h_ru_h: ComplexMatrix::from_element(1, 1, c(0.2, -0.4)),
            topology: None,
        };
        let theta = 1.1;
        let q = PhaseConfig::Continuous { theta: vec![theta] };
        let got = effective_channel(&ch, &q).unwrap()[(0, 0)];
        let want = c(0.5, 0.1) + c(0.2, -0.4) * Complex64::from_polar(1.0, theta) * c(-0.3, 0.7);
        assert!((got - want).norm() < 1e-15);
    }

    #[test]
    fn effective_channel_matches_triple_loop() {
        let ch = ChannelSet::iid_rayleigh(3, 5, 7, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta: Vec<f64> = (0..7).map(|_| rng.random::<f64>() * TAU).collect();
        let q = PhaseConfig::Continuous { theta: theta.clone() };
        let h = effective_channel(&ch, &q).unwrap();
        for k in 0..3 {
            for t in 0..5 {
                let mut acc = ch.h_d[(k, t)];
                for e in 0..7 {
                    acc += ch.h_ru_h[(k, e)] * Complex64::from_polar(1.0, theta[e]) * ch.h_br[(e, t)];
                }
                assert!((acc - h[(k, t)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reflected_part_is_linear_in_q() {
        let ch = ChannelSet::iid_rayleigh(2, 3, 4, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rand_q = || -> Vec<Complex64> {
            (0..4).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
        };
        let (a, b) = (rand_q(), rand_q());
        let (alpha, beta) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let mix: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
        let lhs = ch.reflected(&mix);
        let rhs = ch.reflected(&a) * alpha + ch.reflected(&b) * beta;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn hardening_edge_cases() {
        let single = ChannelSet::iid_rayleigh(1, 1, 16, 0);
        assert_eq!(hardening_metric(&single), 0.0);

        // identical unit-modulus rows: rank-one Gram, no hardening at all
        let row: Vec<Complex64> = (0..4).map(|i| Complex64::from_polar(1.0, 0.7 * i as f64)).collect();
        let h_br = ComplexMatrix::from_fn(32, 4, |_, j| row[j]);
        let ch = ChannelSet {
            h_d: ComplexMatrix::zeros(1, 4),
            h_br,
            h_ru_h: ComplexMatrix::zeros(1, 32),
            topology: None,
        };
        assert!((hardening_metric(&ch) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channel_json_round_trip() {
        let ch = ChannelSet::generate(&small_config(), 3);
        let text = serde_json::to_string(&ch).unwrap();
        let back: ChannelSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ch);
    }
}

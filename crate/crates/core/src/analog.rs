//! RIS phase optimization by element-wise coordinate descent.
//!
//! With the power vector `p` held fixed, ZF transmit power is
//! `f(Q) = Tr((H H^H)^-1 P)` with `H = H_D + H_RU^H Q H_BR`. Changing the
//! coefficient of element `j` by `delta` adds `delta r g` to `H`, where `r` is
//! column `j` of `H_RU^H` and `g` is row `j` of `H_BR`. The Gram matrix then
//! moves by two rank-one terms, so each candidate phase costs two
//! Sherman-Morrison updates instead of a fresh inversion.
//!
//! For continuous phases the objective restricted to one element is a ratio
//! of first-order trigonometric polynomials in `theta`, and its stationary
//! points are the real roots of a quartic in `tan(theta / 2)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::config::{BudgetMode, PhaseSearch, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{
    diag_weighted_trace, hermitian_inverse, max_abs, rank_one_update_in_place, weighted_inverse_trace,
    ComplexMatrix, ComplexVector,
};
use crate::phase::{grid_angle, quantize_index, wrap_angle, PhaseConfig};

/// Relative decrease a candidate needs to displace the incumbent.
pub const IMPROVEMENT_TOL: f64 = 1e-12;
/// Slack on the per-BS budget when screening candidates.
pub const BUDGET_SLACK: f64 = 1e-9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn reflected(ch: &ChannelSet, q: &PhaseConfig) -> Result<ComplexMatrix> {
    if q.len() != ch.elements() {
        return Err(Error::Dimension(format!("{} phases for {} RIS elements", q.len(), ch.elements())));
    }
    if ch.elements() == 0 {
        return Ok(ComplexMatrix::zeros(ch.users(), ch.antennas()));
    }
    Ok(ch.reflected(&q.coefficients()))
}

/// Channel seen by the precoder: the full `H`, or only the reflected part.
pub fn objective_channel(ch: &ChannelSet, q: &PhaseConfig, include_direct: bool) -> Result<ComplexMatrix> {
    let r = reflected(ch, q)?;
    Ok(if include_direct { &ch.h_d + r } else { r })
}

/// `Tr((H H^H)^-1 P)` on the full or reflected-only channel.
pub fn objective_f(ch: &ChannelSet, p: &[f64], q: &PhaseConfig, include_direct: bool) -> Result<f64> {
    weighted_inverse_trace(&objective_channel(ch, q, include_direct)?, p)
}

fn ris_column(ch: &ChannelSet, j: usize) -> ComplexVector {
    ch.h_ru_h.column(j).into_owned()
}

/// Row `j` of `H_BR` as a column vector `g^T`.
fn bs_row(ch: &ChannelSet, j: usize) -> ComplexVector {
    ch.h_br.row(j).transpose()
}

/// Per-block transmit powers of the ZF precoder `H^H Ginv P^(1/2)`.
fn block_powers(h: &ComplexMatrix, ginv: &ComplexMatrix, p: &[f64], blocks: &[(usize, usize)]) -> Vec<f64> {
    let mut w = h.adjoint() * ginv;
    for (k, &pk) in p.iter().enumerate() {
        let s = pk.max(0.0).sqrt();
        w.column_mut(k).iter_mut().for_each(|z| *z *= s);
    }
    blocks
        .iter()
        .map(|&(start, len)| w.rows(start, len).iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// Per-BS budgets a candidate must respect with `p` held fixed.
#[derive(Clone, Debug)]
struct BudgetGuard {
    blocks: Vec<(usize, usize)>,
    limit: f64,
}

impl BudgetGuard {
    fn from_config(config: &SystemConfig) -> BudgetGuard {
        let na = config.antennas_per_bs;
        let bs_rows = config.n_bs * na;
        match config.budget {
            BudgetMode::PerBs => {
                let mut blocks: Vec<(usize, usize)> = (0..config.n_bs).map(|n| (n * na, na)).collect();
                if config.distributed_antennas > 0 {
                    blocks.push((bs_rows, config.distributed_antennas));
                }
                BudgetGuard { blocks, limit: config.pt_w * (1.0 + BUDGET_SLACK) }
            }
            BudgetMode::SharedTotal => BudgetGuard {
                blocks: vec![(0, bs_rows + config.distributed_antennas)],
                limit: config.n_bs as f64 * config.pt_w * (1.0 + BUDGET_SLACK),
            },
        }
    }

    fn admits(&self, h: &ComplexMatrix, ginv: &ComplexMatrix, p: &[f64]) -> bool {
        block_powers(h, ginv, p, &self.blocks).iter().all(|&x| x <= self.limit)
    }
}

/// Effective channel, its Gram inverse and the objective, kept in step with
/// single-element phase changes.
struct Tracker<'a> {
    ch: &'a ChannelSet,
    p: &'a [f64],
    include_direct: bool,
    h: ComplexMatrix,
    ginv: ComplexMatrix,
    f: f64,
    fallbacks: usize,
}

struct Candidate {
    f: f64,
    ginv: ComplexMatrix,
    delta: Complex64,
}

impl<'a> Tracker<'a> {
    fn new(ch: &'a ChannelSet, p: &'a [f64], q: &PhaseConfig, include_direct: bool) -> Result<Tracker<'a>> {
        let h = objective_channel(ch, q, include_direct)?;
        if h.nrows() > h.ncols() {
            return Err(Error::RankDeficient);
        }
        if p.len() != h.nrows() {
            return Err(Error::Dimension(format!("{} powers for {} users", p.len(), h.nrows())));
        }
        let ginv = hermitian_inverse(&(&h * h.adjoint()))?;
        let f = diag_weighted_trace(&ginv, p);
        Ok(Tracker { ch, p, include_direct, h, ginv, f, fallbacks: 0 })
    }

    /// Rebuild `H` and its inverse from scratch to shed accumulated rounding.
    fn refresh(&mut self, q: &PhaseConfig) -> Result<()> {
        self.h = objective_channel(self.ch, q, self.include_direct)?;
        self.ginv = hermitian_inverse(&(&self.h * self.h.adjoint()))?;
        self.f = diag_weighted_trace(&self.ginv, self.p);
        Ok(())
    }

    /// Objective and inverse with element `j` moved by `delta`.
    fn evaluate(&mut self, j: usize, delta: Complex64) -> Result<Candidate> {
        let r = ris_column(self.ch, j);
        let g = bs_row(self.ch, j);
        let w = &self.h * g.conjugate();
        let s = g.norm_squared();
        let dc = delta.conj();
        let v1 = &w * dc + &r * Complex64::new(delta.norm_sqr() * s, 0.0);
        let u2 = &w * dc;
        let mut ginv = self.ginv.clone();
        let updated = rank_one_update_in_place(&mut ginv, &r, &v1)
            .and_then(|_| rank_one_update_in_place(&mut ginv, &u2, &r));
        match updated {
            Ok(()) => {}
            Err(Error::DegenerateUpdate(_)) => {
                self.fallbacks += 1;
                let h = self.moved(j, delta);
                ginv = hermitian_inverse(&(&h * h.adjoint()))?;
            }
            Err(e) => return Err(e),
        }
        let f = diag_weighted_trace(&ginv, self.p);
        Ok(Candidate { f, ginv, delta })
    }

    fn moved(&self, j: usize, delta: Complex64) -> ComplexMatrix {
        let r = ris_column(self.ch, j) * delta;
        let g = self.ch.h_br.row(j);
        &self.h + r * g
    }

    fn accept(&mut self, j: usize, cand: Candidate) {
        self.h = self.moved(j, cand.delta);
        self.ginv = cand.ginv;
        self.f = cand.f;
    }
}

/// Grid index of element `j` minimizing the full objective with every other
/// element fixed. Exact ties go to the smaller index.
pub fn best_discrete_phase(j: usize, ch: &ChannelSet, p: &[f64], q: &PhaseConfig) -> Result<u32> {
    let PhaseConfig::Discrete { bits, indices } = q else {
        return Err(Error::InvalidConfig("best_discrete_phase needs a discrete phase state".into()));
    };
    let mut tracker = Tracker::new(ch, p, q, true)?;
    let ranked = rank_grid(&mut tracker, j, *bits, indices[j])?;
    Ok(ranked[0].0)
}

/// Every grid index with its candidate, best first. The incumbent keeps its
/// place unless beaten by more than [`IMPROVEMENT_TOL`].
fn rank_grid(tracker: &mut Tracker, j: usize, bits: u8, current: u32) -> Result<Vec<(u32, Candidate)>> {
    let q_old = Complex64::from_polar(1.0, grid_angle(current, bits));
    let f_inc = tracker.f;
    let mut out = Vec::with_capacity(1 << bits);
    for i in 0..1u32 << bits {
        let cand = if i == current {
            Candidate { f: f_inc, ginv: ComplexMatrix::zeros(0, 0), delta: ZERO }
        } else {
            let q_new = Complex64::from_polar(1.0, grid_angle(i, bits));
            tracker.evaluate(j, q_new - q_old)?
        };
        out.push((i, cand));
    }
    let threshold = f_inc * (1.0 - IMPROVEMENT_TOL);
    let key = |i: u32, c: &Candidate| {
        if i == current || c.f >= threshold || !c.f.is_finite() {
            f_inc
        } else {
            c.f
        }
    };
    out.sort_by(|(ia, a), (ib, b)| {
        key(*ia, a)
            .total_cmp(&key(*ib, b))
            .then_with(|| (*ib == current).cmp(&(*ia == current)))
            .then(ia.cmp(ib))
    });
    Ok(out)
}

/// Scalars that pin down the single-element objective
/// `f(theta) = Tr(Z P) - Num(theta) / Den(theta)`.
///
/// Write the channel as `A_j + e^{j theta} B_j` with `B_j = r g` and
/// `C_j = A_j A_j^H + B_j B_j^H`, `Z = C_j^-1`, `u = r`, `w = A_j g^H`. Then
/// `Num = a0 + a1 cos + a2 sin` and `Den = b0 + b1 cos + b2 sin`.
#[derive(Clone, Debug)]
pub struct ElementWorkspace {
    pub index: usize,
    pub a_j: ComplexMatrix,
    pub b_j: ComplexMatrix,
    pub c_j: ComplexMatrix,
    pub z: ComplexMatrix,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Complex64,
    pub nu_uu: f64,
    pub nu_ww: f64,
    pub nu_uw: Complex64,
    pub trace_zp: f64,
    pub num: [f64; 3],
    pub den: [f64; 3],
    /// Phase offset with `P sin + Q cos = rho sin(theta + gamma1)`.
    pub gamma1: f64,
    /// `asin(-R / rho)`, NaN when the stationarity equation has no solution.
    pub gamma2: f64,
    /// Real roots `t = tan(theta / 2)` of the stationarity quartic.
    pub chi_candidates: Vec<f64>,
}

fn quad_form(x: &ComplexVector, m: &ComplexMatrix, y: &ComplexVector) -> Complex64 {
    x.dotc(&(m * y))
}

impl ElementWorkspace {
    /// Assemble the workspace for element `j` around the channel `h_now`
    /// (full or reflected-only) in which element `j` currently has phase
    /// `theta_now`.
    pub fn assemble(
        ch: &ChannelSet,
        h_now: &ComplexMatrix,
        j: usize,
        theta_now: f64,
        p: &[f64],
    ) -> Result<ElementWorkspace> {
        let r = ris_column(ch, j);
        let g = ch.h_br.row(j).into_owned();
        let b_j = &r * &g;
        let a_j = h_now - &b_j * Complex64::from_polar(1.0, theta_now);
        let s = g.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let c_j = &a_j * a_j.adjoint() + (&r * r.adjoint()) * Complex64::new(s, 0.0);
        let z = hermitian_inverse(&c_j)?;
        let w = &a_j * g.adjoint();

        let mut zpz = z.clone();
        for (k, &pk) in p.iter().enumerate() {
            zpz.column_mut(k).iter_mut().for_each(|x| *x *= pk);
        }
        let zpz = zpz * &z;
        let alpha = quad_form(&r, &z, &r).re;
        let beta = quad_form(&w, &z, &w).re;
        let gamma = quad_form(&r, &z, &w);
        let nu_uu = quad_form(&r, &zpz, &r).re;
        let nu_ww = quad_form(&w, &zpz, &w).re;
        let nu_uw = quad_form(&r, &zpz, &w);
        let trace_zp = diag_weighted_trace(&z, p);

        let num = [
            beta * nu_uu + alpha * nu_ww - 2.0 * (gamma * nu_uw.conj()).re,
            -2.0 * nu_uw.re,
            -2.0 * nu_uw.im,
        ];
        let den = [alpha * beta - 1.0 - gamma.norm_sqr(), -2.0 * gamma.re, -2.0 * gamma.im];

        let (pc, qc, rc) = stationarity(&num, &den);
        let amp = pc.hypot(qc);
        let gamma1 = qc.atan2(pc);
        let gamma2 = if amp > 0.0 && rc.abs() <= amp { (-rc / amp).asin() } else { f64::NAN };
        let chi_candidates = real_roots(&[qc + rc, 2.0 * pc, 2.0 * rc, 2.0 * pc, rc - qc]);

        Ok(ElementWorkspace {
            index: j,
            a_j,
            b_j,
            c_j,
            z,
            alpha,
            beta,
            gamma,
            nu_uu,
            nu_ww,
            nu_uw,
            trace_zp,
            num,
            den,
            gamma1,
            gamma2,
            chi_candidates,
        })
    }

    /// Largest deviation of the stored `C_j` from `A_j A_j^H + B_j B_j^H`.
    pub fn consistency_defect(&self) -> f64 {
        let rebuilt = &self.a_j * self.a_j.adjoint() + &self.b_j * self.b_j.adjoint();
        max_abs(&(rebuilt - &self.c_j)) / max_abs(&self.c_j).max(f64::MIN_POSITIVE)
    }

    /// Single-element objective at `theta`.
    pub fn objective(&self, theta: f64) -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        let num = self.num[0] + self.num[1] * c + self.num[2] * s;
        let den = self.den[0] + self.den[1] * c + self.den[2] * s;
        self.trace_zp - num / den
    }
}

/// Coefficients of `P sin + Q cos + R = 0`, the numerator of the derivative
/// of `Num / Den`.
fn stationarity(num: &[f64; 3], den: &[f64; 3]) -> (f64, f64, f64) {
    let [a0, a1, a2] = *num;
    let [b0, b1, b2] = *den;
    (a0 * b1 - a1 * b0, a2 * b0 - a0 * b2, a2 * b1 - a1 * b2)
}

/// Real roots of `sum_i c[i] t^i` via the eigenvalues of the companion matrix.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return vec![];
    }
    let mut c: Vec<f64> = coeffs.iter().map(|x| x / scale).collect();
    while c.len() > 1 && c.last().is_some_and(|x| x.abs() <= 1e-14) {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return vec![];
    }
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let eval = |t: f64| c.iter().rev().fold(0.0, |acc, &x| acc * t + x);
    let deriv = |t: f64| c.iter().enumerate().rev().take(deg).fold(0.0, |acc, (i, &x)| acc * t + i as f64 * x);
    comp.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| {
            let mut t = z.re;
            for _ in 0..3 {
                let d = deriv(t);
                if d != 0.0 {
                    let next = t - eval(t) / d;
                    if next.is_finite() {
                        t = next;
                    }
                }
            }
            t
        })
        .collect()
}

/// Minimizer of a single-element objective.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormPhase {
    pub theta: f64,
    pub f: f64,
    pub candidates: Vec<f64>,
}

/// Stationary points of the single-element objective, evaluated exactly; the
/// best one is returned. `theta = pi` (the root at `t = infinity`) is always
/// among the candidates, together with the two branches
/// `theta = gamma2 - gamma1` and `theta = pi - gamma2 - gamma1`.
pub fn closed_form_phase(ws: &ElementWorkspace) -> Result<ClosedFormPhase> {
    let (pc, qc, rc) = stationarity(&ws.num, &ws.den);
    let scale = ws.num.iter().chain(&ws.den).fold(0.0_f64, |m, x| m.max(x.abs())).powi(2);
    if pc.abs().max(qc.abs()).max(rc.abs()) <= 1e-14 * scale {
        return Err(Error::NoRealRoot);
    }
    let mut candidates: Vec<f64> = ws.chi_candidates.iter().map(|t| wrap_angle(2.0 * t.atan())).collect();
    candidates.push(PI);
    if ws.gamma2.is_finite() {
        candidates.push(wrap_angle(ws.gamma2 - ws.gamma1));
        candidates.push(wrap_angle(PI - ws.gamma2 - ws.gamma1));
    }
    let best = candidates
        .iter()
        .map(|&t| (t, ws.objective(t)))
        .filter(|(_, f)| f.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::NoRealRoot)?;
    Ok(ClosedFormPhase { theta: best.0, f: best.1, candidates })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub phase: PhaseConfig,
    pub f_initial: f64,
    pub f_final: f64,
    pub passes: usize,
    /// Objective after every element visit, in visiting order.
    pub element_trace: Vec<f64>,
    pub accepted: usize,
    /// Candidates re-inverted because a rank-one update degenerated.
    pub fallbacks: usize,
}

/// Coordinate descent over all RIS elements in index order with `p` fixed.
///
/// Discrete states without closed-form search enumerate the grid directly.
/// Otherwise each element gets its continuous minimizer of the full
/// objective, quantized when the state is discrete, and the change is kept
/// only when the full objective does not increase. Candidates that would
/// push any BS past its budget are skipped. Stops once a pass improves `f`
/// by at most `rho` relative, or after `max_passes`.
pub fn analog_sweep(ch: &ChannelSet, p: &[f64], q: &PhaseConfig, config: &SystemConfig) -> Result<SweepReport> {
    q.validate()?;
    let guard = BudgetGuard::from_config(config);
    let mut q = q.clone();
    let mut tracker = Tracker::new(ch, p, &q, true)?;
    let f_initial = tracker.f;
    let mut report = SweepReport {
        phase: q.clone(),
        f_initial,
        f_final: f_initial,
        passes: 0,
        element_trace: Vec::with_capacity(q.len()),
        accepted: 0,
        fallbacks: 0,
    };
    if q.is_empty() {
        report.passes = 1;
        return Ok(report);
    }
    let enumerate = matches!(q, PhaseConfig::Discrete { .. }) && config.phase_search == PhaseSearch::Enumerate;
    for pass in 0..config.max_passes {
        if pass > 0 {
            tracker.refresh(&q)?;
        }
        let f_start = tracker.f;
        for j in 0..q.len() {
            let changed = if enumerate {
                discrete_step(&mut tracker, &mut q, j, &guard)?
            } else {
                continuous_step(&mut tracker, &mut q, j, &guard)?
            };
            report.accepted += changed as usize;
            report.element_trace.push(tracker.f);
        }
        report.passes = pass + 1;
        if f_start - tracker.f <= config.rho * f_start {
            break;
        }
    }
    report.f_final = tracker.f;
    report.fallbacks = tracker.fallbacks;
    report.phase = q;
    Ok(report)
}

fn discrete_step(tracker: &mut Tracker, q: &mut PhaseConfig, j: usize, guard: &BudgetGuard) -> Result<bool> {
    let PhaseConfig::Discrete { bits, indices } = q else { unreachable!() };
    let current = indices[j];
    let ranked = rank_grid(tracker, j, *bits, current)?;
    for (i, cand) in ranked {
        if i == current {
            return Ok(false);
        }
        let h = tracker.moved(j, cand.delta);
        if guard.admits(&h, &cand.ginv, tracker.p) {
            tracker.accept(j, cand);
            indices[j] = i;
            return Ok(true);
        }
    }
    Ok(false)
}

fn continuous_step(tracker: &mut Tracker, q: &mut PhaseConfig, j: usize, guard: &BudgetGuard) -> Result<bool> {
    let theta_now = q.angle(j);
    let ws = ElementWorkspace::assemble(tracker.ch, &tracker.h, j, theta_now, tracker.p);
    let target = match ws.and_then(|ws| closed_form_phase(&ws)) {
        Ok(cf) => cf.theta,
        Err(Error::NoRealRoot) | Err(Error::SingularMatrix { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    let (new_angle, new_index) = match q {
        PhaseConfig::Discrete { bits, .. } => {
            let i = quantize_index(target, *bits);
            (grid_angle(i, *bits), i)
        }
        PhaseConfig::Continuous { .. } => (target, 0),
    };
    let delta = Complex64::from_polar(1.0, new_angle) - Complex64::from_polar(1.0, theta_now);
    if delta.norm() <= 1e-15 {
        return Ok(false);
    }
    let cand = tracker.evaluate(j, delta)?;
    if !(cand.f < tracker.f * (1.0 - IMPROVEMENT_TOL)) {
        return Ok(false);
    }
    let h = tracker.moved(j, cand.delta);
    if !guard.admits(&h, &cand.ginv, tracker.p) {
        return Ok(false);
    }
    tracker.accept(j, cand);
    match q {
        PhaseConfig::Discrete { indices, .. } => indices[j] = new_index,
        PhaseConfig::Continuous { theta } => theta[j] = target,
    }
    Ok(true)
}

//! Zero-forcing precoding and energy-efficient power allocation.
//!
//! With ZF directions `V~ = H^H (H H^H)^-1` every user sees an
//! interference-free SNR `p_k / sigma^2`, so the energy efficiency reduces to
//! the ratio `A(p) / D(p)` with `A = sum_k log2(1 + p_k / sigma^2)` and
//! `D = omega * sum_k w_k p_k + P_s`, where `w_k = |v~_k|^2` is the transmit
//! power spent per unit of `p_k`. The ratio is maximized by the quadratic
//! transform: alternate `y = sqrt(A) / D` with the concave subproblem
//! `max 2 y sqrt(A(p)) - y^2 D(p)` over the per-BS budget polytope.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{BudgetMode, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_inverse, ComplexMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerState {
    #[serde(skip)]
    pub zf_directions: ComplexMatrix,
    pub power_alloc: Vec<f64>,
    #[serde(skip)]
    pub v_d: ComplexMatrix,
    pub y: f64,
    /// Ratio `A / D` after each outer iteration of the power allocation.
    pub ratio_trace: Vec<f64>,
}

/// `H^H (H H^H)^-1`.
pub fn zf_directions(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h.nrows() > h.ncols() {
        return Err(Error::RankDeficient);
    }
    let gram = h * h.adjoint();
    let ginv = hermitian_inverse(&gram).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::RankDeficient,
        other => other,
    })?;
    Ok(h.adjoint() * ginv)
}

/// Scale column `k` of the ZF directions by `sqrt(p_k)`.
pub fn apply_power(directions: &ComplexMatrix, p: &[f64]) -> ComplexMatrix {
    let mut v = directions.clone();
    for (k, &pk) in p.iter().enumerate() {
        let s = Complex64::new(pk.max(0.0).sqrt(), 0.0);
        v.column_mut(k).iter_mut().for_each(|z| *z *= s);
    }
    v
}

pub fn zf_beamformer(h: &ComplexMatrix, p: &[f64]) -> Result<BeamformerState> {
    if p.len() != h.nrows() {
        return Err(Error::Dimension(format!("{} powers for {} users", p.len(), h.nrows())));
    }
    let dirs = zf_directions(h)?;
    let v_d = apply_power(&dirs, p);
    Ok(BeamformerState { zf_directions: dirs, power_alloc: p.to_vec(), v_d, y: 0.0, ratio_trace: vec![] })
}

/// `Tr(V_n^H V_n)` for the `n`-th block of `antennas_per_bs` rows.
pub fn per_bs_power(v_d: &ComplexMatrix, n: usize, antennas_per_bs: usize) -> Result<f64> {
    let start = n * antennas_per_bs;
    if antennas_per_bs == 0 || start + antennas_per_bs > v_d.nrows() {
        return Err(Error::BlockMismatch { rows: v_d.nrows(), expected: start + antennas_per_bs });
    }
    Ok(v_d.rows(start, antennas_per_bs).iter().map(|z| z.norm_sqr()).sum())
}

/// The power allocation problem induced by a fixed set of ZF directions.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProblem {
    /// Transmit power per unit of `p_k`.
    pub cost: Vec<f64>,
    /// `[G_n]_kk` for every budget constraint `sum_k p_k [G_n]_kk <= budget`.
    pub constraints: Vec<Vec<f64>>,
    pub budget_w: f64,
    pub noise_w: f64,
    pub omega: f64,
    pub static_w: f64,
}

fn column_block_norms(dirs: &ComplexMatrix, start: usize, rows: usize) -> Vec<f64> {
    (0..dirs.ncols())
        .map(|k| dirs.view((start, k), (rows, 1)).iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

impl PowerProblem {
    pub fn from_directions(dirs: &ComplexMatrix, config: &SystemConfig) -> Result<PowerProblem> {
        let na = config.antennas_per_bs;
        let expected = config.n_bs * na + config.distributed_antennas;
        if dirs.nrows() != expected {
            return Err(Error::BlockMismatch { rows: dirs.nrows(), expected });
        }
        let cost = column_block_norms(dirs, 0, dirs.nrows());
        let (constraints, budget_w) = match config.budget {
            BudgetMode::PerBs => {
                let mut rows: Vec<Vec<f64>> =
                    (0..config.n_bs).map(|n| column_block_norms(dirs, n * na, na)).collect();
                if config.distributed_antennas > 0 {
                    rows.push(column_block_norms(dirs, config.n_bs * na, config.distributed_antennas));
                }
                (rows, config.pt_w)
            }
            BudgetMode::SharedTotal => (vec![cost.clone()], config.n_bs as f64 * config.pt_w),
        };
        Ok(PowerProblem {
            cost,
            constraints,
            budget_w,
            noise_w: config.noise_w,
            omega: config.omega,
            static_w: config.static_power_w(),
        })
    }

    pub fn users(&self) -> usize {
        self.cost.len()
    }

    /// `sum_k log2(1 + p_k / sigma^2)`.
    pub fn rate_sum(&self, p: &[f64]) -> f64 {
        p.iter().map(|&pk| (pk / self.noise_w).ln_1p()).sum::<f64>() / std::f64::consts::LN_2
    }

    /// `omega * sum_k w_k p_k + P_s`.
    pub fn consumption(&self, p: &[f64]) -> f64 {
        self.omega * p.iter().zip(&self.cost).map(|(a, b)| a * b).sum::<f64>() + self.static_w
    }

    pub fn ratio(&self, p: &[f64]) -> f64 {
        self.rate_sum(p) / self.consumption(p)
    }

    pub fn benson_objective(&self, y: f64, p: &[f64]) -> f64 {
        2.0 * y * self.rate_sum(p).sqrt() - y * y * self.consumption(p)
    }

    /// Largest `sum_k p_k [G_n]_kk / budget` over the constraints.
    pub fn max_load(&self, p: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|g| g.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() / self.budget_w)
            .fold(0.0, f64::max)
    }

    /// Equal power `min_n budget / (K max_k [G_n]_kk)`, feasible by construction.
    pub fn equal_power(&self) -> Vec<f64> {
        let k = self.users() as f64;
        let level = self
            .constraints
            .iter()
            .map(|g| {
                let worst = g.iter().copied().fold(0.0, f64::max);
                if worst > 0.0 {
                    self.budget_w / (k * worst)
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min);
        vec![if level.is_finite() { level } else { 0.0 }; self.users()]
    }

    /// Shrink `p` uniformly until every constraint holds.
    pub fn scale_to_feasible(&self, p: &[f64]) -> Vec<f64> {
        let p: Vec<f64> = p.iter().map(|&x| if x.is_finite() { x.max(0.0) } else { 0.0 }).collect();
        let load = self.max_load(&p);
        if load > 1.0 {
            p.iter().map(|x| x / load).collect()
        } else {
            p
        }
    }
}

/// Power of user `k` when it is the only one served.
fn solo_limits(problem: &PowerProblem) -> Result<Vec<f64>> {
    (0..problem.users())
        .map(|k| {
            let worst = problem.constraints.iter().map(|g| g[k]).fold(0.0, f64::max);
            if worst > 0.0 {
                Ok(problem.budget_w / worst)
            } else {
                Err(Error::RankDeficient)
            }
        })
        .collect()
}

/// Euclidean projection onto `{x >= 0, G x <= 1}`.
///
/// Cyclic exact maximization of the dual, one multiplier at a time. Each
/// one-dimensional step solves a piecewise-linear equation over its sorted
/// breakpoints. A final uniform rescale removes any residual infeasibility.
pub fn project_polytope(z: &[f64], g: &[Vec<f64>]) -> Vec<f64> {
    let k = z.len();
    let load = |x: &[f64], row: &[f64]| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let mut x: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
    if g.iter().all(|row| load(&x, row) <= 1.0) {
        return x;
    }
    let mut lambda = vec![0.0; g.len()];
    // shift_k = sum_m lambda_m G_mk
    let mut shift = vec![0.0; k];
    let mut breaks: Vec<(f64, f64, f64)> = Vec::with_capacity(k);
    for _ in 0..5000 {
        let mut moved = 0.0_f64;
        for (n, row) in g.iter().enumerate() {
            // c_k = z_k - sum_{m != n} lambda_m G_mk
            breaks.clear();
            let (mut s1, mut s2) = (0.0, 0.0);
            for j in 0..k {
                let c = z[j] - (shift[j] - lambda[n] * row[j]);
                if row[j] > 0.0 && c > 0.0 {
                    breaks.push((c / row[j], row[j] * c, row[j] * row[j]));
                    s1 += row[j] * c;
                    s2 += row[j] * row[j];
                }
            }
            let new = if s1 <= 1.0 {
                0.0
            } else {
                breaks.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut value = 0.0;
                for &(b, gc, gg) in &breaks {
                    let candidate = (s1 - 1.0) / s2;
                    if candidate <= b {
                        value = candidate;
                        break;
                    }
                    s1 -= gc;
                    s2 -= gg;
                    value = b;
                }
                value.max(0.0)
            };
            let delta = new - lambda[n];
            if delta != 0.0 {
                for j in 0..k {
                    shift[j] += delta * row[j];
                }
                lambda[n] = new;
                moved = moved.max(delta.abs() / (1.0 + new));
            }
        }
        if moved <= 1e-15 {
            break;
        }
    }
    for j in 0..k {
        x[j] = (z[j] - shift[j]).max(0.0);
    }
    let worst = g.iter().map(|row| load(&x, row)).fold(0.0, f64::max);
    if worst > 1.0 {
        x.iter_mut().for_each(|v| *v /= worst);
    }
    x
}

/// The inner subproblem in the scaled variables `x_k = p_k / s_k`, normalized
/// by `y^2 P_s` so its values are O(1).
struct ScaledSubproblem<'a> {
    problem: &'a PowerProblem,
    y: f64,
    scale: Vec<f64>,
    g_hat: Vec<Vec<f64>>,
}

impl ScaledSubproblem<'_> {
    fn powers(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.scale).map(|(a, s)| a * s).collect()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.powers(x);
        self.problem.benson_objective(self.y, &p) / (self.y * self.y * self.problem.static_w)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let pb = self.problem;
        let p = self.powers(x);
        let a = pb.rate_sum(&p).max(1e-300);
        let norm = self.y * self.y * pb.static_w;
        (0..x.len())
            .map(|k| {
                let s = self.scale[k];
                let da = s / ((pb.noise_w + p[k]) * std::f64::consts::LN_2);
                (self.y / a.sqrt() * da - self.y * self.y * pb.omega * pb.cost[k] * s) / norm
            })
            .collect()
    }

    fn project(&self, z: &[f64]) -> Vec<f64> {
        project_polytope(z, &self.g_hat)
    }

    /// Infinity norm of `Proj(x + grad) - x`.
    fn residual(&self, x: &[f64], grad: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(grad).map(|(a, b)| a + b).collect();
        let px = self.project(&z);
        px.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Converged projected-gradient residual of the normalized subproblem.
pub const INNER_TOL: f64 = 1e-10;

/// Maximize `2 y sqrt(A(p)) - y^2 D(p)` over the budget polytope.
///
/// Projected gradient with Barzilai-Borwein steps and Armijo backtracking,
/// started from `start` (made feasible first). Returns the best iterate.
pub fn dinkelbach_inner(
    y: f64,
    problem: &PowerProblem,
    start: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(problem.budget_w > 0.0) {
        return Err(Error::InfeasibleBudget(problem.budget_w));
    }
    if y <= 0.0 {
        return Ok(vec![0.0; problem.users()]);
    }
    let scale = solo_limits(problem)?;
    let g_hat: Vec<Vec<f64>> = problem
        .constraints
        .iter()
        .map(|g| g.iter().zip(&scale).map(|(a, s)| a * s / problem.budget_w).collect())
        .collect();
    let sub = ScaledSubproblem { problem, y, scale, g_hat };

    let start = problem.scale_to_feasible(start);
    let mut x: Vec<f64> = start.iter().zip(&sub.scale).map(|(p, s)| p / s).collect();
    if x.iter().all(|&v| v == 0.0) {
        x = problem.equal_power().iter().zip(&sub.scale).map(|(p, s)| p / s).collect();
    }
    x = sub.project(&x);
    let mut f = sub.value(&x);
    let mut grad = sub.gradient(&x);
    let gmax = grad.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut step = if gmax > 0.0 { 0.1 / gmax } else { 1.0 };
    let mut residual = sub.residual(&x, &grad);

    for _ in 0..max_iters {
        if residual <= tol {
            return Ok(sub.powers(&x));
        }
        let z: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a + step * b).collect();
        let target = sub.project(&z);
        let d: Vec<f64> = target.iter().zip(&x).map(|(a, b)| a - b).collect();
        let slope: f64 = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
        if slope <= 0.0 {
            // projection noise swamps the step; a unit-step residual decides
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-20 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| (a + t * b).max(0.0)).collect();
            let ft = sub.value(&trial);
            let g_trial = sub.gradient(&trial);
            // by concavity a non-negative slope at the trial point means the
            // objective rose along the whole segment, even when the gain is
            // below the resolution of `f`
            let still_rising = d.iter().zip(&g_trial).map(|(a, b)| a * b).sum::<f64>() >= 0.0;
            if ft >= f + 1e-4 * t * slope || still_rising {
                accepted = Some((trial, ft.max(f), g_trial));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else { break };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        step = if sy < 0.0 { (ss / -sy).clamp(1e-12, 1e12) } else { (step * 2.0).min(1e12) };
        let stalled = f_new - f <= 1e-15 * f.abs().max(1.0);
        x = x_new;
        f = f_new;
        grad = g_new;
        residual = sub.residual(&x, &grad);
        if stalled && residual <= tol.max(1e-7) {
            return Ok(sub.powers(&x));
        }
    }
    if residual <= tol.max(1e-7) {
        Ok(sub.powers(&x))
    } else {
        Err(Error::NonConvergence { iterations: max_iters, residual })
    }
}

/// Outcome of the outer power-allocation loop.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSolution {
    pub p: Vec<f64>,
    pub y: f64,
    pub ratio: f64,
    pub ratio_trace: Vec<f64>,
}

/// Relative ratio change that ends the outer loop.
pub const OUTER_TOL: f64 = 1e-9;

/// Maximize `A(p) / D(p)`. The best of the equal-power start and `warm`
/// (rescaled to feasibility) seeds the iteration; the ratio never decreases.
pub fn maximize_ratio(
    problem: &PowerProblem,
    max_outer: usize,
    max_inner: usize,
    warm: Option<&[f64]>,
) -> Result<PowerSolution> {
    let k = problem.users();
    if problem.budget_w == 0.0 {
        return Ok(PowerSolution { p: vec![0.0; k], y: 0.0, ratio: 0.0, ratio_trace: vec![0.0] });
    }
    if !(problem.budget_w > 0.0) {
        return Err(Error::InfeasibleBudget(problem.budget_w));
    }
    let mut p = problem.equal_power();
    let mut ratio = problem.ratio(&p);
    if let Some(w) = warm.filter(|w| w.len() == k) {
        let w = problem.scale_to_feasible(w);
        let r = problem.ratio(&w);
        if r > ratio {
            p = w;
            ratio = r;
        }
    }
    let mut trace = vec![ratio];
    for _ in 0..max_outer {
        let y = problem.rate_sum(&p).sqrt() / problem.consumption(&p);
        let candidate = dinkelbach_inner(y, problem, &p, max_inner, INNER_TOL)?;
        let r = problem.ratio(&candidate);
        let gain = r - ratio;
        if gain > 0.0 {
            p = candidate;
            ratio = r;
        }
        trace.push(ratio);
        if gain <= OUTER_TOL * ratio {
            break;
        }
    }
    let y = problem.rate_sum(&p).sqrt() / problem.consumption(&p);
    Ok(PowerSolution { p, y, ratio, ratio_trace: trace })
}

/// ZF directions on `h` plus the energy-efficient power allocation.
pub fn dinkelbach_power_allocation(h: &ComplexMatrix, config: &SystemConfig) -> Result<BeamformerState> {
    allocate_with_warm_start(h, config, None)
}

pub fn allocate_with_warm_start(
    h: &ComplexMatrix,
    config: &SystemConfig,
    warm: Option<&[f64]>,
) -> Result<BeamformerState> {
    let dirs = zf_directions(h)?;
    let problem = PowerProblem::from_directions(&dirs, config)?;
    let sol = maximize_ratio(&problem, config.max_outer, config.max_inner_iters, warm)?;
    let v_d = apply_power(&dirs, &sol.p);
    Ok(BeamformerState {
        zf_directions: dirs,
        power_alloc: sol.p,
        v_d,
        y: sol.y,
        ratio_trace: sol.ratio_trace,
    })
}

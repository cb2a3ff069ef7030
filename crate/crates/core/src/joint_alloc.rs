//! Joint bandwidth and power allocation across `K` subchannels.
//!
//! Maximizes `Σ_k B_k log₂(1 + P_k h_k / (N₀ B_k))` subject to `Σ B_k <= B`
//! and `Σ P_k <= P_h` with a projected primal-dual gradient iteration. One
//! iteration updates, in this order:
//!
//! ```text
//! B_k ← [B_k + β(φ(x_k) + μ_k - χ)]⁺,   φ(x) = log₂(1+x) - x/((1+x) ln 2),  x_k = P_k h_k/(N₀ B_k)
//! P_k ← min(B_k [1/((ω - λ_k) ln 2) - N₀/h_k]⁺, P_h)     (P_h when ω - λ_k <= 0)
//! χ   ← [χ + β(Σ B_k - B)]⁺
//! μ_k ← [μ_k - β B_k]⁺
//! ω   ← [ω + β(Σ P_k - P_h)]⁺
//! λ_k ← [λ_k - β P_k]⁺
//! ```
//!
//! The iteration runs in scaled units (bandwidth in `bandwidth_unit_hz`, power
//! in `power_unit_w`, capacity in `bandwidth_unit_hz` bits/s) so that the step
//! `β` has a fixed meaning. It stops once every capacity increment over the
//! last `window` iterations is below `Δ`. The final iterate is then completed
//! onto the budgets: bandwidths are rescaled to sum to `B`, powers are
//! water-filled exactly for those bandwidths, and the multipliers are set to
//! the values consistent with that primal point.

use std::f64::consts::LN_2;

use crate::channel::{sample_subchannel_model, ChannelParams};
use crate::error::{Error, Result};
use crate::numerics::{bisect, try_mc_expectation, McConfig, McEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct JointProblem {
    pub gains: Vec<f64>,
    pub total_bandwidth: f64,
    pub total_power: f64,
    pub noise_psd: f64,
}

impl JointProblem {
    pub fn new(gains: Vec<f64>, total_bandwidth: f64, total_power: f64, noise_psd: f64) -> Result<Self> {
        let p = Self { gains, total_bandwidth, total_power, noise_psd };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gains.is_empty() {
            return Err(Error::InvalidParam("at least one subchannel gain is required".into()));
        }
        if self.gains.iter().any(|&h| !(h >= 0.0 && h.is_finite())) {
            return Err(Error::InvalidParam("gains must be finite and non-negative".into()));
        }
        if !(self.total_bandwidth > 0.0 && self.noise_psd > 0.0) {
            return Err(Error::InvalidParam("bandwidth and noise PSD must be positive".into()));
        }
        if !(self.total_power >= 0.0 && self.total_power.is_finite()) {
            return Err(Error::InvalidParam("total power must be non-negative".into()));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.gains.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub step: f64,
    pub stop: f64,
    pub max_iter: usize,
    /// Number of trailing iterations whose capacity increments must all be
    /// below `stop`.
    pub window: usize,
    pub bandwidth_unit_hz: f64,
    pub power_unit_w: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { step: 0.01, stop: 0.01, max_iter: 8000, window: 100, bandwidth_unit_hz: 1e7, power_unit_w: 1e-3 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.stop > 0.0) {
            return Err(Error::InvalidParam("step and stop threshold must be positive".into()));
        }
        if self.max_iter < 1 || self.window < 1 {
            return Err(Error::InvalidParam("max_iter and window must be at least 1".into()));
        }
        if !(self.bandwidth_unit_hz > 0.0 && self.power_unit_w > 0.0) {
            return Err(Error::InvalidParam("solver units must be positive".into()));
        }
        Ok(())
    }
}

/// Primal variables in SI units; multipliers in solver units
/// (`ω`, `λ_k` per solver power unit, `χ`, `μ_k` in bits/s per solver bandwidth unit).
#[derive(Debug, Clone, PartialEq)]
pub struct JointAllocState {
    pub bandwidths: Vec<f64>,
    pub powers: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub omega: f64,
    pub chi: f64,
    pub iteration: usize,
}

impl JointAllocState {
    /// `B/K`, `P_h/K`, all multipliers 0.1.
    pub fn initial(problem: &JointProblem) -> Self {
        let k = problem.k();
        let kf = k as f64;
        Self {
            bandwidths: vec![problem.total_bandwidth / kf; k],
            powers: vec![problem.total_power / kf; k],
            lambda: vec![0.1; k],
            mu: vec![0.1; k],
            omega: 0.1,
            chi: 0.1,
            iteration: 0,
        }
    }
}

/// Problem and state in solver units.
struct Scaled {
    gains: Vec<f64>,
    bandwidth: f64,
    power: f64,
    n0: f64,
}

impl Scaled {
    fn new(p: &JointProblem, cfg: &SolverConfig) -> Self {
        Self {
            gains: p.gains.clone(),
            bandwidth: p.total_bandwidth / cfg.bandwidth_unit_hz,
            power: p.total_power / cfg.power_unit_w,
            n0: p.noise_psd * cfg.bandwidth_unit_hz / cfg.power_unit_w,
        }
    }
}

#[derive(Clone)]
struct Iterate {
    b: Vec<f64>,
    p: Vec<f64>,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    omega: f64,
    chi: f64,
}

impl Iterate {
    fn from_state(s: &JointAllocState, cfg: &SolverConfig) -> Self {
        Self {
            b: s.bandwidths.iter().map(|v| v / cfg.bandwidth_unit_hz).collect(),
            p: s.powers.iter().map(|v| v / cfg.power_unit_w).collect(),
            lambda: s.lambda.clone(),
            mu: s.mu.clone(),
            omega: s.omega,
            chi: s.chi,
        }
    }

    fn to_state(&self, cfg: &SolverConfig, iteration: usize) -> JointAllocState {
        JointAllocState {
            bandwidths: self.b.iter().map(|v| v * cfg.bandwidth_unit_hz).collect(),
            powers: self.p.iter().map(|v| v * cfg.power_unit_w).collect(),
            lambda: self.lambda.clone(),
            mu: self.mu.clone(),
            omega: self.omega,
            chi: self.chi,
            iteration,
        }
    }
}

fn snr(p: f64, h: f64, n0: f64, b: f64) -> f64 {
    if b > 0.0 && p > 0.0 && h > 0.0 {
        p * h / (n0 * b)
    } else {
        0.0
    }
}

/// `∂/∂B [B log₂(1 + P h/(N₀ B))]` as a function of the SNR `x`.
fn bandwidth_gradient(x: f64) -> f64 {
    x.ln_1p() / LN_2 - x / ((1.0 + x) * LN_2)
}

fn rate(b: f64, p: f64, h: f64, n0: f64) -> f64 {
    if b > 0.0 {
        b * snr(p, h, n0, b).ln_1p() / LN_2
    } else {
        0.0
    }
}

fn scaled_capacity(sp: &Scaled, it: &Iterate) -> f64 {
    (0..sp.gains.len()).map(|k| rate(it.b[k], it.p[k], sp.gains[k], sp.n0)).sum()
}

fn update(sp: &Scaled, it: &mut Iterate, beta: f64) {
    let k = sp.gains.len();
    for j in 0..k {
        let x = snr(it.p[j], sp.gains[j], sp.n0, it.b[j]);
        let g = bandwidth_gradient(x) + it.mu[j] - it.chi;
        it.b[j] = (it.b[j] + beta * g).max(0.0);
        let h = sp.gains[j];
        let level = it.omega - it.lambda[j];
        it.p[j] = if h <= 0.0 {
            0.0
        } else if level <= 0.0 {
            sp.power
        } else {
            (it.b[j] * (1.0 / (level * LN_2) - sp.n0 / h)).max(0.0).min(sp.power)
        };
    }
    let sb: f64 = it.b.iter().sum();
    it.chi = (it.chi + beta * (sb - sp.bandwidth)).max(0.0);
    for j in 0..k {
        it.mu[j] = (it.mu[j] - beta * it.b[j]).max(0.0);
    }
    let sp_sum: f64 = it.p.iter().sum();
    it.omega = (it.omega + beta * (sp_sum - sp.power)).max(0.0);
    for j in 0..k {
        it.lambda[j] = (it.lambda[j] - beta * it.p[j]).max(0.0);
    }
}

/// Sum rate `Σ_k B_k log₂(1 + P_k h_k/(N₀ B_k))` in bits/s; a term with
/// `B_k = 0` contributes zero.
pub fn objective(problem: &JointProblem, state: &JointAllocState) -> f64 {
    (0..problem.k())
        .map(|k| rate(state.bandwidths[k], state.powers[k], problem.gains[k], problem.noise_psd))
        .sum()
}

/// One iteration of the update rules.
pub fn step(problem: &JointProblem, state: &JointAllocState, cfg: &SolverConfig) -> Result<JointAllocState> {
    problem.validate()?;
    cfg.validate()?;
    if state.bandwidths.len() != problem.k() || state.powers.len() != problem.k() {
        return Err(Error::InvalidParam("state length does not match the number of gains".into()));
    }
    let sp = Scaled::new(problem, cfg);
    let mut it = Iterate::from_state(state, cfg);
    update(&sp, &mut it, cfg.step);
    Ok(it.to_state(cfg, state.iteration + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub bandwidths: Vec<f64>,
    pub powers: Vec<f64>,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSolution {
    /// Completed allocation and consistent multipliers.
    pub state: JointAllocState,
    pub capacity: f64,
    pub converged: bool,
    /// Raw iterates, starting with the initial point; empty when not recorded.
    pub trace: Vec<TraceRow>,
}

/// Exact water-filling `P_k = B_k [ν - N₀/h_k]⁺` with `Σ P_k = P` (scaled units).
/// Returns the powers and the level `ν`, or `None` if no channel can carry power.
fn water_fill(b: &[f64], gains: &[f64], n0: f64, power: f64) -> Option<(Vec<f64>, f64)> {
    let usable: Vec<usize> = (0..b.len()).filter(|&k| b[k] > 0.0 && gains[k] > 0.0).collect();
    if usable.is_empty() || power <= 0.0 {
        return None;
    }
    let spent = |nu: f64| usable.iter().map(|&k| b[k] * (nu - n0 / gains[k]).max(0.0)).sum::<f64>();
    let floor = usable.iter().map(|&k| n0 / gains[k]).fold(f64::INFINITY, f64::min);
    let total_b: f64 = usable.iter().map(|&k| b[k]).sum();
    let top = usable.iter().map(|&k| n0 / gains[k]).fold(0.0, f64::max) + power / total_b;
    let nu = bisect(|nu| spent(nu) - power, floor, top, 1e-15 * top).ok()?;
    // distribute any bisection residue proportionally so the budget is met exactly
    let mut p: Vec<f64> = (0..b.len())
        .map(|k| if b[k] > 0.0 && gains[k] > 0.0 { b[k] * (nu - n0 / gains[k]).max(0.0) } else { 0.0 })
        .collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        for v in &mut p {
            *v *= power / s;
        }
    }
    Some((p, nu))
}

fn complete(sp: &Scaled, it: &Iterate) -> Iterate {
    let k = sp.gains.len();
    let sb: f64 = it.b.iter().sum();
    let b: Vec<f64> = if sb > 0.0 {
        it.b.iter().map(|v| v * sp.bandwidth / sb).collect()
    } else {
        vec![sp.bandwidth / k as f64; k]
    };
    let (p, omega) = match water_fill(&b, &sp.gains, sp.n0, sp.power) {
        Some((p, nu)) => (p, 1.0 / (nu * LN_2)),
        None => (vec![0.0; k], 0.0),
    };
    let lambda: Vec<f64> = (0..k)
        .map(|j| {
            if p[j] > 0.0 || sp.gains[j] <= 0.0 {
                0.0
            } else {
                (omega - sp.gains[j] / (sp.n0 * LN_2)).max(0.0)
            }
        })
        .collect();
    let phis: Vec<f64> = (0..k)
        .filter(|&j| b[j] > 0.0)
        .map(|j| bandwidth_gradient(snr(p[j], sp.gains[j], sp.n0, b[j])))
        .collect();
    let (lo, hi) = phis.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let chi = if phis.is_empty() { 0.0 } else { 0.5 * (lo + hi) };
    let mu: Vec<f64> = (0..k).map(|j| if b[j] > 0.0 { 0.0 } else { chi }).collect();
    Iterate { b, p, lambda, mu, omega, chi }
}

fn run(problem: &JointProblem, cfg: &SolverConfig, record: bool) -> Result<JointSolution> {
    problem.validate()?;
    cfg.validate()?;
    let sp = Scaled::new(problem, cfg);
    let mut it = Iterate::from_state(&JointAllocState::initial(problem), cfg);
    let mut trace = Vec::new();
    let row = |it: &Iterate, i: usize, c: f64| TraceRow {
        iteration: i,
        bandwidths: it.b.iter().map(|v| v * cfg.bandwidth_unit_hz).collect(),
        powers: it.p.iter().map(|v| v * cfg.power_unit_w).collect(),
        capacity: c * cfg.bandwidth_unit_hz,
    };
    let mut cap = scaled_capacity(&sp, &it);
    if record {
        trace.push(row(&it, 0, cap));
    }
    let mut recent = std::collections::VecDeque::with_capacity(cfg.window);
    let mut converged = false;
    let mut i = 0;
    while i < cfg.max_iter {
        update(&sp, &mut it, cfg.step);
        i += 1;
        let next = scaled_capacity(&sp, &it);
        if recent.len() == cfg.window {
            recent.pop_front();
        }
        recent.push_back((next - cap).abs());
        cap = next;
        if record {
            trace.push(row(&it, i, cap));
        }
        if recent.len() == cfg.window && recent.iter().all(|&d| d < cfg.stop) {
            converged = true;
            break;
        }
    }
    let done = complete(&sp, &it);
    let state = done.to_state(cfg, i);
    let capacity = objective(problem, &state);
    Ok(JointSolution { state, capacity, converged, trace })
}

/// Runs the iteration to termination and returns the completed allocation
/// with the full iterate trace.
pub fn solve(problem: &JointProblem, cfg: &SolverConfig) -> Result<JointSolution> {
    run(problem, cfg, true)
}

/// [`solve`] without recording the trace.
pub fn solve_quiet(problem: &JointProblem, cfg: &SolverConfig) -> Result<JointSolution> {
    run(problem, cfg, false)
}

/// Baseline with `B_k = B/K` and exactly water-filled powers.
pub fn solve_fixed_bandwidth(problem: &JointProblem, cfg: &SolverConfig) -> Result<JointAllocState> {
    problem.validate()?;
    cfg.validate()?;
    let sp = Scaled::new(problem, cfg);
    let k = problem.k();
    let b = vec![sp.bandwidth / k as f64; k];
    let (p, omega) = match water_fill(&b, &sp.gains, sp.n0, sp.power) {
        Some((p, nu)) => (p, 1.0 / (nu * LN_2)),
        None => (vec![0.0; k], 0.0),
    };
    let lambda = (0..k)
        .map(|j| if p[j] > 0.0 || sp.gains[j] <= 0.0 { 0.0 } else { (omega - sp.gains[j] / (sp.n0 * LN_2)).max(0.0) })
        .collect();
    let it = Iterate { b, p, lambda, mu: vec![0.0; k], omega, chi: 0.0 };
    Ok(it.to_state(cfg, 0))
}

/// Largest violation of each optimality condition, in solver units.
/// Stationarity entries only look at active (non-zero) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub stationarity_power: f64,
    pub stationarity_bandwidth: f64,
    pub complementary_slackness: f64,
    /// Relative budget overshoot and negativity of primal variables.
    pub primal_feasibility: f64,
    /// Negativity of multipliers.
    pub dual_feasibility: f64,
}

impl KktReport {
    pub fn max_stationarity_feasibility(&self) -> f64 {
        self.stationarity_power.max(self.stationarity_bandwidth).max(self.primal_feasibility)
    }
}

pub fn kkt_residual(problem: &JointProblem, state: &JointAllocState, cfg: &SolverConfig) -> KktReport {
    let sp = Scaled::new(problem, cfg);
    let it = Iterate::from_state(state, cfg);
    let k = problem.k();
    let mut st_p: f64 = 0.0;
    let mut st_b: f64 = 0.0;
    let mut cs: f64 = 0.0;
    let mut neg: f64 = 0.0;
    let mut dual: f64 = 0.0;
    for j in 0..k {
        let (b, p, h) = (it.b[j], it.p[j], sp.gains[j]);
        if p > 0.0 && b > 0.0 {
            let marginal = b * h / (LN_2 * (sp.n0 * b + p * h));
            st_p = st_p.max((marginal + it.lambda[j] - it.omega).abs());
        }
        if b > 0.0 {
            let x = snr(p, h, sp.n0, b);
            st_b = st_b.max((bandwidth_gradient(x) + it.mu[j] - it.chi).abs());
        }
        cs = cs.max((it.mu[j] * b).abs()).max((it.lambda[j] * p).abs());
        neg = neg.max(-b).max(-p);
        dual = dual.max(-it.mu[j]).max(-it.lambda[j]);
    }
    let sb: f64 = it.b.iter().sum();
    let spw: f64 = it.p.iter().sum();
    cs = cs.max((it.chi * (sb - sp.bandwidth)).abs()).max((it.omega * (spw - sp.power)).abs());
    dual = dual.max(-it.chi).max(-it.omega);
    let over_b = (sb - sp.bandwidth) / sp.bandwidth;
    let over_p = if sp.power > 0.0 { (spw - sp.power) / sp.power } else { spw };
    KktReport {
        stationarity_power: st_p,
        stationarity_bandwidth: st_b,
        complementary_slackness: cs,
        primal_feasibility: over_b.max(over_p).max(neg).max(0.0),
        dual_feasibility: dual.max(0.0),
    }
}

/// Budgets for the ergodic joint allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointBudget {
    pub total_bandwidth: f64,
    pub total_power: f64,
    pub noise_psd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Adaptive,
    FixedBandwidth,
    /// Per-draw difference adaptive minus fixed-bandwidth (paired samples).
    AdaptiveMinusFixed,
}

/// Monte Carlo expectation, over independent draws from each subchannel's F law, of the
/// per-draw optimal sum rate, in bits/s.
pub fn ergodic_capacity_p2(
    cp: &ChannelParams,
    budget: &JointBudget,
    cfg: &SolverConfig,
    mc: &McConfig,
    scheme: Scheme,
) -> Result<McEstimate> {
    let k = cp.k();
    if budget.total_power == 0.0 {
        return Ok(McEstimate { mean: 0.0, std_error: 0.0 });
    }
    try_mc_expectation(
        k,
        |rng, x| {
            for (j, s) in cp.subchannels.iter().enumerate() {
                x[j] = sample_subchannel_model(s, rng);
            }
        },
        |x| {
            let problem = JointProblem::new(x.to_vec(), budget.total_bandwidth, budget.total_power, budget.noise_psd)?;
            let adaptive = || solve_quiet(&problem, cfg).map(|s| s.capacity);
            let fixed = || solve_fixed_bandwidth(&problem, cfg).map(|s| objective(&problem, &s));
            match scheme {
                Scheme::Adaptive => adaptive(),
                Scheme::FixedBandwidth => fixed(),
                Scheme::AdaptiveMinusFixed => Ok(adaptive()? - fixed()?),
            }
        },
        mc,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{pdf_subchannel, FadingParams, SubchannelParams};
    use crate::numerics::{integrate_from_scaled, QuadratureConfig};
    use proptest::prelude::*;

    fn default_problem(gains: &[f64]) -> JointProblem {
        JointProblem::new(gains.to_vec(), 200e6, 30e-3, 1e-12).unwrap()
    }

    #[test]
    fn objective_examples() {
        let p = JointProblem::new(vec![2.0, 3.0], 1e6, 1.0, 1e-9).unwrap();
        let mut s = JointAllocState::initial(&p);
        s.powers = vec![0.0, 0.0];
        assert_eq!(objective(&p, &s), 0.0);
        let p = JointProblem::new(vec![1e-3], 1e6, 1.0, 1e-9).unwrap();
        let s = JointAllocState::initial(&p);
        assert!((objective(&p, &s) - 1e6).abs() < 1e-6);
        let p = JointProblem::new(vec![4.0, 4.0], 1e6, 1e-3, 1e-12).unwrap();
        let sym = JointAllocState::initial(&p);
        let mut lop = sym.clone();
        lop.bandwidths = vec![0.8e6, 0.2e6];
        assert!(objective(&p, &sym) >= objective(&p, &lop));
    }

    #[test]
    fn zero_bandwidth_term_is_zero() {
        let p = JointProblem::new(vec![4.0, 4.0], 1e6, 1e-3, 1e-12).unwrap();
        let mut s = JointAllocState::initial(&p);
        s.bandwidths = vec![0.0, 1e6];
        s.powers = vec![5e-4, 5e-4];
        let want = 1e6 * (5e-4 * 4.0 / 1e-6f64).ln_1p() / LN_2;
        assert!((objective(&p, &s) - want).abs() < 1e-6);
    }

    #[test]
    fn step_with_zero_gains_zeroes_powers() {
        let p = JointProblem::new(vec![0.0; 3], 200e6, 30e-3, 1e-12).unwrap();
        let s = step(&p, &JointAllocState::initial(&p), &SolverConfig::default()).unwrap();
        assert!(s.powers.iter().all(|&v| v == 0.0));
        assert_eq!(s.iteration, 1);
    }

    #[test]
    fn step_preserves_symmetry() {
        let p = default_problem(&[5.0, 5.0, 5.0]);
        let cfg = SolverConfig::default();
        let mut s = JointAllocState::initial(&p);
        for _ in 0..300 {
            s = step(&p, &s, &cfg).unwrap();
            assert!(s.bandwidths.iter().all(|&b| b == s.bandwidths[0]));
            assert!(s.powers.iter().all(|&v| v == s.powers[0]));
        }
    }

    #[test]
    fn step_change_bounded_by_gradient() {
        let p = default_problem(&[4.0, 5.0, 6.0]);
        let cfg = SolverConfig::default();
        let s0 = JointAllocState::initial(&p);
        let s1 = step(&p, &s0, &cfg).unwrap();
        let sp = Scaled::new(&p, &cfg);
        let it = Iterate::from_state(&s0, &cfg);
        for k in 0..3 {
            let x = snr(it.p[k], sp.gains[k], sp.n0, it.b[k]);
            let g = bandwidth_gradient(x) + it.mu[k] - it.chi;
            let db = (s1.bandwidths[k] - s0.bandwidths[k]) / cfg.bandwidth_unit_hz;
            assert!(db.abs() <= cfg.step * g.abs() + 1e-15);
        }
        let dc = (objective(&p, &s1) - objective(&p, &s0)).abs();
        assert!(dc.is_finite());
    }

    #[test]
    fn degenerate_water_level_caps_at_budget() {
        let p = default_problem(&[5.0, 5.0]);
        let mut s = JointAllocState::initial(&p);
        s.omega = 0.0;
        let s1 = step(&p, &s, &SolverConfig::default()).unwrap();
        assert!(s1.powers.iter().all(|&v| (v - 30e-3).abs() < 1e-15));
    }

    #[test]
    fn single_channel_takes_everything() {
        let p = JointProblem::new(vec![3.0], 200e6, 30e-3, 1e-12).unwrap();
        let cfg = SolverConfig::default();
        let sol = solve(&p, &cfg).unwrap();
        assert!((sol.state.bandwidths[0] - 200e6).abs() < 1e-3);
        assert!((sol.state.powers[0] - 30e-3).abs() < 1e-12);
        let fixed = solve_fixed_bandwidth(&p, &cfg).unwrap();
        assert!((objective(&p, &fixed) - sol.capacity).abs() < 1e-6 * sol.capacity);
    }

    #[test]
    fn symmetric_anchor() {
        let p = default_problem(&[5.0, 5.0, 5.0]);
        let cfg = SolverConfig::default();
        let sol = solve(&p, &cfg).unwrap();
        assert!(sol.converged);
        for k in 0..3 {
            assert!((60e6..=70e6).contains(&sol.state.bandwidths[k]));
            assert!((9e-3..=11e-3).contains(&sol.state.powers[k]));
        }
        let r = kkt_residual(&p, &sol.state, &cfg);
        assert!(r.max_stationarity_feasibility() <= 1e-3, "{r:?}");
    }

    #[test]
    fn asymmetric_anchor() {
        let p = default_problem(&[4.0, 5.0, 6.0]);
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        let b = &sol.state.bandwidths;
        let pw = &sol.state.powers;
        assert!(b[0] < 1e6 && pw[0] < 0.5e-3, "{b:?} {pw:?}");
        assert!(b[2] > b[1] && b[1] > b[0]);
        assert!(pw[2] > pw[1] && pw[1] > pw[0]);
    }

    #[test]
    fn symmetric_kkt_point_has_zero_residual() {
        let p = default_problem(&[5.0, 5.0, 5.0]);
        let cfg = SolverConfig::default();
        let sp = Scaled::new(&p, &cfg);
        let (b, pw) = (sp.bandwidth / 3.0, sp.power / 3.0);
        let x = snr(pw, 5.0, sp.n0, b);
        let omega = b * 5.0 / (LN_2 * (sp.n0 * b + pw * 5.0));
        let it = Iterate { b: vec![b; 3], p: vec![pw; 3], lambda: vec![0.0; 3], mu: vec![0.0; 3], omega, chi: bandwidth_gradient(x) };
        let r = kkt_residual(&p, &it.to_state(&cfg, 0), &cfg);
        for v in [r.stationarity_power, r.stationarity_bandwidth, r.complementary_slackness, r.primal_feasibility, r.dual_feasibility] {
            assert!(v <= 1e-6, "{r:?}");
        }
    }

    #[test]
    fn infeasible_state_is_flagged() {
        let p = default_problem(&[5.0, 5.0, 5.0]);
        let mut s = JointAllocState::initial(&p);
        s.bandwidths = vec![100e6; 3];
        assert!(kkt_residual(&p, &s, &SolverConfig::default()).primal_feasibility > 0.0);
    }

    #[test]
    fn fixed_bandwidth_equal_gains() {
        let p = default_problem(&[5.0, 5.0, 5.0]);
        let s = solve_fixed_bandwidth(&p, &SolverConfig::default()).unwrap();
        for v in &s.powers {
            assert!((v - 10e-3).abs() < 1e-12);
        }
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let p = default_problem(&[4.0, 5.0, 6.0]);
        let cfg = SolverConfig { max_iter: 50, ..Default::default() };
        let sol = solve(&p, &cfg).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.trace.len(), 51);
    }

    #[test]
    fn trace_and_feasibility() {
        let p = default_problem(&[4.0, 5.0, 6.0]);
        let cfg = SolverConfig::default();
        let sol = solve(&p, &cfg).unwrap();
        let sb: f64 = sol.state.bandwidths.iter().sum();
        let spw: f64 = sol.state.powers.iter().sum();
        assert!(sb <= 200e6 * (1.0 + 1e-6) && spw <= 30e-3 * (1.0 + 1e-6));
        for row in &sol.trace {
            assert!(row.bandwidths.iter().chain(&row.powers).all(|&v| v >= 0.0));
        }
        let mut running = f64::NEG_INFINITY;
        for row in &sol.trace {
            let next = running.max(row.capacity);
            assert!(next >= running);
            running = next;
        }
    }

    #[test]
    fn ergodic_single_channel_matches_quadrature() {
        let sc = SubchannelParams::new(FadingParams::new(2.0, 2.0, 5.0).unwrap(), 8, 300.0, 1.0, 0.5).unwrap();
        let cp = ChannelParams::identical(1, sc).unwrap();
        let budget = JointBudget { total_bandwidth: 200e6, total_power: 30e-3, noise_psd: 1e-12 };
        let mc = McConfig::default().with_samples(400);
        let est = ergodic_capacity_p2(&cp, &budget, &SolverConfig::default(), &mc, Scheme::Adaptive).unwrap();
        let snr0 = 30e-3 / (1e-12 * 200e6);
        let q = integrate_from_scaled(
            |h| 200e6 * (snr0 * h).ln_1p() / LN_2 * pdf_subchannel(h, &sc).unwrap(),
            0.0,
            2.0,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!((est.mean - q).abs() < 3.0 * est.std_error, "{est:?} vs {q}");
        let zero = JointBudget { total_power: 0.0, ..budget };
        assert_eq!(ergodic_capacity_p2(&cp, &zero, &SolverConfig::default(), &mc, Scheme::Adaptive).unwrap().mean, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn permutation_equivariance(h in proptest::collection::vec(1.0f64..10.0, 3)) {
            let cfg = SolverConfig::default();
            let a = solve_quiet(&default_problem(&h), &cfg).unwrap();
            let rev: Vec<f64> = h.iter().rev().cloned().collect();
            let b = solve_quiet(&default_problem(&rev), &cfg).unwrap();
            for k in 0..3 {
                prop_assert!((a.state.bandwidths[k] - b.state.bandwidths[2 - k]).abs() <= 1e-6 * 200e6);
                prop_assert!((a.state.powers[k] - b.state.powers[2 - k]).abs() <= 1e-6 * 30e-3);
            }
        }

        #[test]
        fn projection_keeps_iterates_nonnegative(h in proptest::collection::vec(0.0f64..10.0, 1..5), steps in 1usize..200) {
            let p = default_problem(&h);
            let cfg = SolverConfig::default();
            let mut s = JointAllocState::initial(&p);
            for _ in 0..steps {
                s = step(&p, &s, &cfg).unwrap();
                prop_assert!(s.bandwidths.iter().chain(&s.powers).chain(&s.lambda).chain(&s.mu).all(|&v| v >= 0.0));
                prop_assert!(s.omega >= 0.0 && s.chi >= 0.0);
            }
        }

        #[test]
        fn objective_concave(h in proptest::collection::vec(0.5f64..10.0, 3),
                             b1 in proptest::collection::vec(1e6f64..1e8, 3), b2 in proptest::collection::vec(1e6f64..1e8, 3),
                             p1 in proptest::collection::vec(0.0f64..0.02, 3), p2 in proptest::collection::vec(0.0f64..0.02, 3)) {
            let p = default_problem(&h);
            let mut s1 = JointAllocState::initial(&p);
            let mut s2 = s1.clone();
            s1.bandwidths = b1.clone(); s1.powers = p1.clone();
            s2.bandwidths = b2.clone(); s2.powers = p2.clone();
            let mut mid = s1.clone();
            mid.bandwidths = (0..3).map(|k| 0.5 * (b1[k] + b2[k])).collect();
            mid.powers = (0..3).map(|k| 0.5 * (p1[k] + p2[k])).collect();
            let lhs = objective(&p, &mid);
            let rhs = 0.5 * (objective(&p, &s1) + objective(&p, &s2));
            prop_assert!(lhs >= rhs - 1e-9 * rhs.abs());
        }
    }
}

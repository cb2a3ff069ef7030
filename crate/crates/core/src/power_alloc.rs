//! Water-filling power allocation over the composite channel.
//!
//! The policy is `P(h) = min(δ²/h₀ - δ²/h, P_h)` above the outage threshold
//! `h₀` and zero below it. The average-power constraint is taken against the
//! composite density exactly as it is defined in [`crate::channel::pdf_composite`],
//! i.e. including its `∏_k L_k^α` mass; capacities are integrated the same way.
//!
//! Two thresholds are available. [`threshold_closed_form`] uses
//! `h₀ = ∏L^α [P̄/δ² + ε (Λ/K) ∏L^α]^{-1}` with `ε = KNm_s/(KNm - 1)`, which
//! replaces `∫_0^{h₀} f/h` by `∫_0^{h₀} f/h₀`. [`threshold_exact`] solves the
//! balance `∫_{h₀}^∞ P(h) f(h) dh = P̄` by bisection, peak clamp included.

use crate::channel::{pdf_composite, sample_composite_model, ChannelParams};
use crate::error::{Error, Result};
use crate::numerics::{
    bisect, integrate, integrate_detailed, integrate_from_scaled, integrate_from_scaled_detailed, mc_expectation, McConfig,
    McEstimate, Quadrature, QuadratureConfig,
};
use crate::specfun::{beta_inc_reg, gamma_ratio_epsilon};

use std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub avg_power: f64,
    pub peak_power: f64,
    pub noise_psd: f64,
    pub bandwidth: f64,
}

impl PowerBudget {
    pub fn new(avg_power: f64, peak_power: f64, noise_psd: f64, bandwidth: f64) -> Result<Self> {
        let pb = Self { avg_power, peak_power, noise_psd, bandwidth };
        pb.validate()?;
        Ok(pb)
    }

    /// A zero average power is accepted and yields the all-off policy.
    pub fn validate(&self) -> Result<()> {
        if !(self.avg_power >= 0.0 && self.avg_power.is_finite()) {
            return Err(Error::InvalidParam(format!("average power {} must be >= 0", self.avg_power)));
        }
        for (name, v) in [("peak power", self.peak_power), ("noise PSD", self.noise_psd), ("bandwidth", self.bandwidth)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(format!("{name} {v} must be positive")));
            }
        }
        if self.avg_power > self.peak_power {
            return Err(Error::InvalidParam("average power exceeds peak power".into()));
        }
        Ok(())
    }

    /// `δ² = N₀ B`.
    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }
}

/// Piecewise water-filling map with the channel constants it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPolicy {
    pub threshold: f64,
    /// `δ²/h₀`; zero when the threshold is infinite.
    pub water_level_power: f64,
    pub peak: f64,
    pub noise_power: f64,
    pub avg_power: f64,
    pub prod_path_loss: f64,
    /// `Λ/K`.
    pub rate: f64,
}

impl PowerPolicy {
    pub fn new(cp: &ChannelParams, pb: &PowerBudget, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::InvalidParam(format!("threshold {threshold} must be positive")));
        }
        let d2 = pb.noise_power();
        Ok(Self {
            threshold,
            water_level_power: if threshold.is_finite() { d2 / threshold } else { 0.0 },
            peak: pb.peak_power,
            noise_power: d2,
            avg_power: pb.avg_power,
            prod_path_loss: cp.prod_path_loss(),
            rate: cp.rate(),
        })
    }

    /// Gain above which the policy sits at the peak; infinite if never.
    pub fn clamp_gain(&self) -> f64 {
        clamp_gain(self.water_level_power, self.peak, self.noise_power)
    }
}

fn clamp_gain(level: f64, peak: f64, d2: f64) -> f64 {
    if level > peak {
        d2 / (level - peak)
    } else {
        f64::INFINITY
    }
}

fn epsilon(cp: &ChannelParams) -> Result<f64> {
    let (a, b) = cp.shapes();
    gamma_ratio_epsilon(a, b)
        .map_err(|_| Error::domain("threshold_closed_form", format!("KNm = {a} must exceed 1")))
}

/// Closed-form outage threshold.
pub fn threshold_closed_form(cp: &ChannelParams, pb: &PowerBudget) -> Result<f64> {
    pb.validate()?;
    let eps = epsilon(cp)?;
    let prod = cp.prod_path_loss();
    Ok(prod / (pb.avg_power / pb.noise_power() + eps * cp.rate() * prod))
}

/// Gain laws a water-filling threshold can be balanced against.
#[derive(Debug, Clone, Copy)]
pub enum GainLaw<'a> {
    /// The composite F density with its `∏L^α` mass.
    Composite(&'a ChannelParams),
    /// `mass · e^{-h/mean} / mean`.
    Exponential { mass: f64, mean: f64 },
}

impl GainLaw<'_> {
    pub fn density(&self, h: f64) -> f64 {
        match *self {
            GainLaw::Composite(cp) => pdf_composite(h, cp).unwrap_or(0.0),
            GainLaw::Exponential { mass, mean } => mass * (-h / mean).exp() / mean,
        }
    }

    /// Mapping scale for semi-infinite quadrature.
    pub fn scale(&self) -> f64 {
        match *self {
            GainLaw::Composite(cp) => cp.typical_gain(),
            GainLaw::Exponential { mean, .. } => mean,
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            GainLaw::Composite(cp) => cp.prod_path_loss(),
            GainLaw::Exponential { mass, .. } => mass,
        }
    }

    /// `∫_h^∞ f`.
    pub fn tail_mass(&self, h: f64) -> f64 {
        match *self {
            GainLaw::Composite(cp) => {
                let (a, b) = cp.shapes();
                let cx = cp.rate() * h;
                // Y/(X+Y) ~ Beta(b, a) gives the upper tail without cancellation
                cp.prod_path_loss() * beta_inc_reg(b, a, 1.0 / (1.0 + cx)).unwrap_or(0.0)
            }
            GainLaw::Exponential { mass, mean } => mass * (-h / mean).exp(),
        }
    }
}

/// Average transmit power `∫_{h₀}^∞ P(h) f(h) dh` under `law`.
fn average_power_under(law: &GainLaw, h0: f64, peak: f64, d2: f64, qcfg: &QuadratureConfig) -> Result<f64> {
    if !h0.is_finite() {
        return Ok(0.0);
    }
    let level = d2 / h0;
    let hc = clamp_gain(level, peak, d2);
    if hc.is_finite() {
        let below = integrate(|h| (level - d2 / h) * law.density(h), h0, hc, qcfg)?;
        Ok(below + peak * law.tail_mass(hc))
    } else {
        integrate_from_scaled(|h| (level - d2 / h) * law.density(h), h0, law.scale(), qcfg)
    }
}

/// Threshold whose clamped water-filling policy spends exactly `P̄` under `law`.
pub fn threshold_for_law(law: &GainLaw, pb: &PowerBudget, qcfg: &QuadratureConfig) -> Result<f64> {
    pb.validate()?;
    if pb.avg_power == 0.0 {
        return Ok(f64::INFINITY);
    }
    let d2 = pb.noise_power();
    if pb.avg_power >= pb.peak_power * law.mass() {
        return Err(Error::Bracket(format!(
            "average power {} is not below peak power times channel mass {}",
            pb.avg_power,
            pb.peak_power * law.mass()
        )));
    }
    // work in log-threshold; the balance decreases with h0
    let balance = |u: f64| match average_power_under(law, u.exp(), pb.peak_power, d2, qcfg) {
        Ok(p) => p - pb.avg_power,
        Err(Error::Tolerance { estimate, .. }) => estimate - pb.avg_power,
        Err(_) => f64::NAN,
    };
    let start = (d2 * law.mass() / pb.avg_power).ln();
    let (mut lo, mut hi) = (start, start);
    let mut steps = 0;
    while !(balance(lo) > 0.0) {
        lo -= 2.0;
        steps += 1;
        if steps > 400 {
            return Err(Error::Bracket("no threshold low enough to spend the budget".into()));
        }
    }
    steps = 0;
    while !(balance(hi) < 0.0) {
        hi += 2.0;
        steps += 1;
        if steps > 400 {
            return Err(Error::Bracket("no threshold high enough to meet the budget".into()));
        }
    }
    bisect(balance, lo, hi, 1e-13).map(f64::exp)
}

/// Threshold solving the average-power balance against the composite density.
pub fn threshold_exact(cp: &ChannelParams, pb: &PowerBudget) -> Result<f64> {
    threshold_exact_with(cp, pb, &QuadratureConfig::default())
}

/// [`threshold_exact`] with explicit quadrature tolerances.
pub fn threshold_exact_with(cp: &ChannelParams, pb: &PowerBudget, qcfg: &QuadratureConfig) -> Result<f64> {
    threshold_for_law(&GainLaw::Composite(cp), pb, qcfg)
}

pub fn policy_closed_form(cp: &ChannelParams, pb: &PowerBudget) -> Result<PowerPolicy> {
    PowerPolicy::new(cp, pb, threshold_closed_form(cp, pb)?)
}

pub fn policy_exact(cp: &ChannelParams, pb: &PowerBudget) -> Result<PowerPolicy> {
    PowerPolicy::new(cp, pb, threshold_exact(cp, pb)?)
}

/// Transmit power at gain `h`.
pub fn policy_eval(pol: &PowerPolicy, h: f64) -> f64 {
    if !(h >= pol.threshold) {
        return 0.0;
    }
    (pol.water_level_power - pol.noise_power / h).max(0.0).min(pol.peak)
}

/// Crossover gain `δ²∏L^α [P̄ + (εΛδ²/K - P_h)∏L^α]^{-1}` of the asymptotic
/// policy; infinite when the bracket is not positive.
pub fn asymptotic_crossover(pol: &PowerPolicy, eps: f64) -> f64 {
    let prod = pol.prod_path_loss;
    let den = pol.avg_power + (eps * pol.rate * pol.noise_power - pol.peak) * prod;
    if den > 0.0 {
        pol.noise_power * prod / den
    } else {
        f64::INFINITY
    }
}

/// Asymptotic policy: water level `(P̄ + εΛδ²∏L^α/K)/∏L^α`, peak above
/// [`asymptotic_crossover`], zero below the policy threshold.
pub fn policy_eval_asymptotic(pol: &PowerPolicy, h: f64, eps: f64) -> f64 {
    if !(h >= pol.threshold) {
        return 0.0;
    }
    if h >= asymptotic_crossover(pol, eps) {
        return pol.peak;
    }
    let level = pol.avg_power / pol.prod_path_loss + eps * pol.rate * pol.noise_power;
    level - pol.noise_power / h
}

/// Relative violation of the pointwise stationarity condition
/// `(B/ln2) h / (δ² + h P(h)) = λ` at `h` in the unclamped branch, with
/// `λ = B h₀ / (δ² ln 2)`. Returns `None` outside that branch.
pub fn kkt_stationarity_residual(pol: &PowerPolicy, pb: &PowerBudget, h: f64) -> Option<f64> {
    let p = policy_eval(pol, h);
    if h < pol.threshold || p >= pol.peak {
        return None;
    }
    let marginal = pb.bandwidth / LN_2 * h / (pol.noise_power + h * p);
    let lambda = pb.bandwidth * pol.threshold / (pol.noise_power * LN_2);
    Some(((marginal - lambda) / lambda).abs())
}

/// `∫ P(h) f(h) dh` against the composite density.
pub fn average_power(cp: &ChannelParams, pol: &PowerPolicy) -> Result<f64> {
    average_power_under(&GainLaw::Composite(cp), pol.threshold, pol.peak, pol.noise_power, &QuadratureConfig::default())
}

fn capacity_under(law: &GainLaw, pol: &PowerPolicy, scale: f64, pb: &PowerBudget) -> Result<f64> {
    if pol.threshold.is_infinite() || scale == 0.0 {
        return Ok(0.0);
    }
    let d2 = pol.noise_power;
    let qcfg = QuadratureConfig::default();
    let hc = pol.clamp_gain();
    let rate = |p: f64, h: f64| pb.bandwidth * (scale * p * h / d2).ln_1p() / LN_2;
    let body = |h: f64| rate(pol.water_level_power - d2 / h, h) * law.density(h);
    let peak = |h: f64| rate(pol.peak, h) * law.density(h);
    if hc.is_finite() {
        Ok(integrate(body, pol.threshold, hc, &qcfg)? + integrate_from_scaled(peak, hc, law.scale(), &qcfg)?)
    } else {
        integrate_from_scaled(body, pol.threshold, law.scale(), &qcfg)
    }
}

/// Ergodic capacity `∫_{h₀}^∞ B log₂(1 + P(h) h/δ²) f(h) dh` in bits/s,
/// against the composite density including its `∏L^α` mass.
pub fn ergodic_capacity_p1(cp: &ChannelParams, pb: &PowerBudget, pol: &PowerPolicy) -> Result<f64> {
    pb.validate()?;
    capacity_under(&GainLaw::Composite(cp), pol, 1.0, pb)
}

/// Monte Carlo counterpart of [`ergodic_capacity_p1`]: draws from the
/// normalized composite law and rescales by `∏L^α`.
pub fn ergodic_capacity_p1_mc(cp: &ChannelParams, pb: &PowerBudget, pol: &PowerPolicy, mc: &McConfig) -> Result<McEstimate> {
    let prod = cp.prod_path_loss();
    let d2 = pb.noise_power();
    let est = mc_expectation(
        1,
        |rng, x| x[0] = sample_composite_model(cp, rng),
        |x| pb.bandwidth * (policy_eval(pol, x[0]) * x[0] / d2).ln_1p() / LN_2,
        mc,
    )?;
    Ok(McEstimate { mean: est.mean * prod, std_error: est.std_error * prod })
}

/// Rayleigh-designed policy and the factor that rescales it onto the budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighBaseline {
    pub policy: PowerPolicy,
    /// Multiplier applied to the designed powers so that the average power
    /// under the true channel does not exceed `P̄`.
    pub scale: f64,
    /// Average power of the unscaled policy under the true channel.
    pub unscaled_avg_power: f64,
}

/// Water-filling designed for an exponential gain law with the composite
/// mean and mass, then scaled by `min(1, P̄ / spent)` where `spent` is its
/// average power under the true composite law.
pub fn rayleigh_baseline(cp: &ChannelParams, pb: &PowerBudget) -> Result<RayleighBaseline> {
    rayleigh_baseline_with(cp, pb, &QuadratureConfig::default())
}

/// [`rayleigh_baseline`] with explicit quadrature tolerances.
pub fn rayleigh_baseline_with(cp: &ChannelParams, pb: &PowerBudget, qcfg: &QuadratureConfig) -> Result<RayleighBaseline> {
    let mean = cp
        .model_mean()
        .ok_or_else(|| Error::InvalidParam("Rayleigh baseline needs a finite channel mean (KNm_s > 1)".into()))?;
    let law = GainLaw::Exponential { mass: cp.prod_path_loss(), mean };
    let h0 = threshold_for_law(&law, pb, qcfg)?;
    let policy = PowerPolicy::new(cp, pb, h0)?;
    let spent = average_power_under(&GainLaw::Composite(cp), h0, pb.peak_power, pb.noise_power(), qcfg)?;
    let scale = if spent > pb.avg_power { pb.avg_power / spent } else { 1.0 };
    Ok(RayleighBaseline { policy, scale, unscaled_avg_power: spent })
}

/// Ergodic capacity of the [`rayleigh_baseline`] policy under the true composite law.
pub fn rayleigh_baseline_capacity(cp: &ChannelParams, pb: &PowerBudget) -> Result<f64> {
    let base = rayleigh_baseline(cp, pb)?;
    capacity_under(&GainLaw::Composite(cp), &base.policy, base.scale, pb)
}

/// Capacity of policy `a` minus that of policy `b` with its powers multiplied
/// by `scale_b`, integrated as a single pointwise difference so that gaps far
/// below either capacity's quadrature tolerance stay resolvable.
pub fn capacity_gap(
    cp: &ChannelParams,
    pb: &PowerBudget,
    a: &PowerPolicy,
    b: &PowerPolicy,
    scale_b: f64,
    qcfg: &QuadratureConfig,
) -> Result<Quadrature> {
    pb.validate()?;
    let start = a.threshold.min(b.threshold);
    if !start.is_finite() {
        return Ok(Quadrature { value: 0.0, error: 0.0, intervals: 0 });
    }
    let d2 = pb.noise_power();
    let diff = |h: f64| {
        let xa = policy_eval(a, h) * h / d2;
        let xb = scale_b * policy_eval(b, h) * h / d2;
        pb.bandwidth / LN_2 * ((xa - xb) / (1.0 + xb)).ln_1p() * pdf_composite(h, cp).unwrap_or(0.0)
    };
    let mut cuts: Vec<f64> = [a.threshold, b.threshold, a.clamp_gain(), b.clamp_gain()]
        .into_iter()
        .filter(|&c| c.is_finite() && c > start)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Quadrature { value: 0.0, error: 0.0, intervals: 0 };
    let mut lo = start;
    for c in cuts {
        let q = integrate_detailed(diff, lo, c, qcfg)?;
        out.value += q.value;
        out.error += q.error;
        out.intervals += q.intervals;
        lo = c;
    }
    let q = integrate_from_scaled_detailed(diff, lo, cp.typical_gain(), qcfg)?;
    out.value += q.value;
    out.error += q.error;
    out.intervals += q.intervals;
    Ok(out)
}

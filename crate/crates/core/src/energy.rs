//! Energy efficiency of IRS-assisted versus relay-assisted links.
//!
//! Both systems split the bandwidth into `K` orthogonal subchannels with noise
//! power `δ² = N₀B/K` each. Efficiency is capacity over `K(P_node + P_S/η)`.

use std::f64::consts::LN_2;

use crate::channel::{sample_gain, sample_subchannel_model, ChannelParams, FadingParams};
use crate::error::{Error, Result};
use crate::numerics::{try_mc_expectation, McConfig, McEstimate};
use crate::power_alloc::{policy_closed_form, policy_eval, PowerBudget, PowerPolicy};

/// Transceiver circuit blocks, in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitPowerModel {
    pub p_dac: f64,
    pub p_mix: f64,
    pub p_filt: f64,
    pub p_filr: f64,
    pub p_syn: f64,
    pub p_lna: f64,
    pub p_ifa: f64,
    pub p_adc: f64,
    pub m_t: u32,
    pub m_r: u32,
    /// When set, replaces the component sum.
    pub aggregate: Option<f64>,
}

impl Default for CircuitPowerModel {
    fn default() -> Self {
        Self {
            p_dac: 0.0,
            p_mix: 30.3e-3,
            p_filt: 2.5,
            p_filr: 2.5,
            p_syn: 50e-3,
            p_lna: 20e-3,
            p_ifa: 3e-3,
            p_adc: 0.0,
            m_t: 1,
            m_r: 1,
            aggregate: Some(3.0),
        }
    }
}

impl CircuitPowerModel {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.p_dac, self.p_mix, self.p_filt, self.p_filr, self.p_syn, self.p_lna, self.p_ifa, self.p_adc];
        if parts.iter().chain(self.aggregate.iter()).any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParam("circuit powers must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// `M_t(P_DAC + P_MIX + P_FILT) + 2P_SYN + M_r(P_LNA + P_MIX + P_IFA + P_FILR + P_ADC)`,
    /// or the aggregate override.
    pub fn total(&self) -> f64 {
        if let Some(p) = self.aggregate {
            return p;
        }
        self.m_t as f64 * (self.p_dac + self.p_mix + self.p_filt)
            + 2.0 * self.p_syn
            + self.m_r as f64 * (self.p_lna + self.p_mix + self.p_ifa + self.p_filr + self.p_adc)
    }
}

/// Node hardware, in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePowerModel {
    pub p_fpga_relay: f64,
    pub p_pa: f64,
    pub p_fpga_irs: f64,
    pub p_pin: f64,
    pub n_pins: u32,
    pub eta: f64,
}

impl Default for NodePowerModel {
    fn default() -> Self {
        Self { p_fpga_relay: 1.0, p_pa: 5.0, p_fpga_irs: 0.5, p_pin: 8.5e-3, n_pins: 8, eta: 0.8 }
    }
}

impl NodePowerModel {
    pub fn validate(&self) -> Result<()> {
        let powers = [self.p_fpga_relay, self.p_pa, self.p_fpga_irs, self.p_pin];
        if powers.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParam("node powers must be finite and non-negative".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParam(format!("conversion efficiency {} must lie in (0, 1]", self.eta)));
        }
        Ok(())
    }
}

/// `(P_C + P_FPGAR + P_PA)/η`.
pub fn relay_power(node: &NodePowerModel, circuit: &CircuitPowerModel) -> f64 {
    (circuit.total() + node.p_fpga_relay + node.p_pa) / node.eta
}

/// `(P_FPGAI + N P_PIN)/η`.
pub fn irs_power(node: &NodePowerModel) -> f64 {
    (node.p_fpga_irs + node.n_pins as f64 * node.p_pin) / node.eta
}

#[derive(Debug, Clone, PartialEq)]
pub struct EeScenario {
    /// IRS channel; its distances are also the relay hop distances.
    pub channel: ChannelParams,
    /// Single-hop fading on the relay-to-user link.
    pub relay_fading: FadingParams,
    pub source_power: f64,
    /// Average and peak transmit power, noise PSD and total bandwidth.
    pub budget: PowerBudget,
    pub node: NodePowerModel,
    pub circuit: CircuitPowerModel,
}

impl EeScenario {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.relay_fading.validate()?;
        self.budget.validate()?;
        self.node.validate()?;
        self.circuit.validate()?;
        if !(self.source_power >= 0.0 && self.source_power.is_finite()) {
            return Err(Error::InvalidParam("source power must be non-negative".into()));
        }
        if self.node.n_pins != self.channel.n() {
            return Err(Error::InvalidParam(format!(
                "node has {} PIN diodes but the channel has {} reflectors",
                self.node.n_pins,
                self.channel.n()
            )));
        }
        Ok(())
    }

    /// Per-subchannel noise power `N₀B/K`.
    pub fn subchannel_noise(&self) -> f64 {
        self.budget.noise_power() / self.channel.k() as f64
    }

    /// Budget seen by one subchannel (bandwidth `B/K`).
    pub fn subchannel_budget(&self) -> Result<PowerBudget> {
        let b = &self.budget;
        PowerBudget::new(b.avg_power, b.peak_power, b.noise_psd, b.bandwidth / self.channel.k() as f64)
    }
}

/// `γ₁ = P_S L_SR^{-α}/δ²`, `γ₂ = P_PA L_RD^{-α} g/δ²`.
pub fn relay_hop_snrs(dist_sr: f64, dist_rd: f64, alpha: f64, p_s: f64, p_pa: f64, noise: f64, g: f64) -> (f64, f64) {
    (p_s * dist_sr.powf(-alpha) / noise, p_pa * dist_rd.powf(-alpha) * g / noise)
}

/// `(B/2K) log₂(1 + 4γ₁γ₂/(1 + 2γ₁ + 2γ₂))`.
pub fn relay_rate(bandwidth: f64, k: usize, g1: f64, g2: f64) -> f64 {
    let snr = 4.0 * g1 * g2 / (1.0 + 2.0 * g1 + 2.0 * g2);
    bandwidth / (2.0 * k as f64) * snr.ln_1p() / LN_2
}

/// Monte Carlo over independent relay-link gains of the summed two-hop rates.
pub fn relay_capacity(sc: &EeScenario, mc: &McConfig) -> Result<McEstimate> {
    sc.validate()?;
    let k = sc.channel.k();
    let d2 = sc.subchannel_noise();
    try_mc_expectation(
        k,
        |rng, x| {
            for v in x.iter_mut() {
                *v = sample_gain(&sc.relay_fading, rng);
            }
        },
        |x| {
            Ok(sc
                .channel
                .subchannels
                .iter()
                .zip(x)
                .map(|(s, &g)| {
                    let (g1, g2) = relay_hop_snrs(s.dist_sr, s.dist_rd, s.pathloss_exp, sc.source_power, sc.node.p_pa, d2, g);
                    relay_rate(sc.budget.bandwidth, k, g1, g2)
                })
                .sum())
        },
        mc,
    )
}

/// Closed-form water-filling policy used on each IRS subchannel: water level
/// `P̄/∏L^α + ε(Λ/K)N₀B/K`, clamped at `P_h`.
pub fn irs_policy(sc: &EeScenario) -> Result<PowerPolicy> {
    policy_closed_form(&sc.channel, &sc.subchannel_budget()?)
}

/// Monte Carlo over independent draws from each subchannel's F law of
/// `Σ_k (B/K) log₂(1 + P(h_k) h_k K/(N₀B))` under [`irs_policy`].
pub fn irs_capacity(sc: &EeScenario, mc: &McConfig) -> Result<McEstimate> {
    sc.validate()?;
    let k = sc.channel.k();
    let pol = irs_policy(sc)?;
    let bk = sc.budget.bandwidth / k as f64;
    let d2 = sc.subchannel_noise();
    try_mc_expectation(
        k,
        |rng, x| {
            for (v, s) in x.iter_mut().zip(&sc.channel.subchannels) {
                *v = sample_subchannel_model(s, rng);
            }
        },
        |x| Ok(x.iter().map(|&h| bk * (policy_eval(&pol, h) * h / d2).ln_1p() / LN_2).sum()),
        mc,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Relay,
    Irs,
}

/// `C / (K(P_node + P_S/η))` in bits/J, with the standard error scaled alike.
pub fn energy_efficiency(sc: &EeScenario, which: Node, mc: &McConfig) -> Result<McEstimate> {
    let (cap, p_node) = match which {
        Node::Relay => (relay_capacity(sc, mc)?, relay_power(&sc.node, &sc.circuit)),
        Node::Irs => (irs_capacity(sc, mc)?, irs_power(&sc.node)),
    };
    let den = sc.channel.k() as f64 * (p_node + sc.source_power / sc.node.eta);
    Ok(McEstimate { mean: cap.mean / den, std_error: cap.std_error / den })
}

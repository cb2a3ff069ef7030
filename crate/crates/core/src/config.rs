//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored; lists are comma-separated.
//! Units are SI throughout (Hz, W, W/Hz, m). Every key has a default, so an
//! empty file describes the reference operating point.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::{ChannelParams, FadingParams, SubchannelParams};
use crate::energy::{CircuitPowerModel, EeScenario, NodePowerModel};
use crate::error::{Error, Result};
use crate::joint_alloc::{JointBudget, JointProblem, SolverConfig};
use crate::numerics::McConfig;
use crate::power_alloc::PowerBudget;

pub trait ConfigValue: Sized {
    fn parse_value(s: &str) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

impl ConfigValue for f64 {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("'{s}' is not finite"))
        }
    }
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! integer_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                s.parse().map_err(|_| format!("'{s}' is not a non-negative integer"))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
integer_value!(u32, u64, usize);

impl ConfigValue for String {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        Ok(s.to_string())
    }
    fn render(&self) -> String {
        self.clone()
    }
}

impl<T: ConfigValue> ConfigValue for Vec<T> {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|p| T::parse_value(p.trim())).collect()
    }
    fn render(&self) -> String {
        self.iter().map(T::render).collect::<Vec<_>>().join(",")
    }
}

macro_rules! config {
    ($($key:ident : $ty:ty = $default:expr, $doc:literal;)*) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct ExperimentConfig {
            $(#[doc = $doc] pub $key: $ty,)*
        }

        impl Default for ExperimentConfig {
            fn default() -> Self {
                Self { $($key: $default,)* }
            }
        }

        impl ExperimentConfig {
            /// Assigns one key from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $(stringify!($key) => {
                        self.$key = <$ty as ConfigValue>::parse_value(value)
                            .map_err(|e| Error::Config(format!("{key}: {e}")))?;
                    })*
                    _ => return Err(Error::Config(format!("unknown key '{key}'"))),
                }
                Ok(())
            }

            /// `(key, rendered value, description)` for every key, in declaration order.
            pub fn entries(&self) -> Vec<(&'static str, String, &'static str)> {
                vec![$((stringify!($key), self.$key.render(), $doc),)*]
            }
        }
    };
}

config! {
    k: u32 = 3, "number of subchannels";
    n: u32 = 8, "reflecting elements per subchannel";
    m: f64 = 2.0, "fading parameter";
    m_s: f64 = 2.0, "shadowing parameter";
    alpha: f64 = 0.5, "path-loss exponent";
    dist_sr: f64 = 300.0, "source to node distance (m)";
    dist_rd: f64 = 1.0, "node to user distance (m)";
    mean_gain: f64 = 5.0, "mean power gain per reflector";
    relay_mean_gain: f64 = 1.0, "mean power gain of the relay link";
    avg_power: f64 = 0.5, "average transmit power (W)";
    peak_power: f64 = 1.0, "peak transmit power (W)";
    noise_psd: f64 = 5e-14, "noise power spectral density (W/Hz)";
    bandwidth: f64 = 200e6, "total bandwidth (Hz)";
    threshold: String = "closed_form".into(), "outage threshold rule: closed_form or exact";
    joint_gains: Vec<f64> = vec![5.0, 5.0, 5.0], "instantaneous subchannel gains for joint allocation";
    joint_power: f64 = 30e-3, "total power for joint allocation (W)";
    step: f64 = 0.01, "gradient step";
    stop: f64 = 0.01, "stopping threshold on capacity increments (solver units)";
    max_iter: usize = 8000, "iteration cap";
    window: usize = 100, "iterations that must all satisfy the stopping threshold";
    joint_draws: usize = 200, "gain draws for the ergodic joint comparison";
    seed: u64 = 20_240_601, "Monte Carlo seed";
    samples: usize = 1_000_000, "Monte Carlo samples per estimate";
    chunk_size: usize = 4096, "samples per random stream";
    sweep_name: String = String::new(), "swept parameter (empty: command default)";
    sweep_start: f64 = 0.0, "first sweep value";
    sweep_stop: f64 = 0.0, "last sweep value";
    sweep_points: usize = 0, "number of sweep values";
    pdf_points: usize = 200, "gain grid size for densities and policies";
    pdf_h_max: f64 = 0.0, "upper end of the gain grid (0: automatic)";
    surface_axis: String = "m_s".into(), "second axis of the power surface: m or m_s";
    surface_values: Vec<f64> = vec![1.0, 2.0, 5.0, 10.0], "values along the surface axis";
    energy_k_values: Vec<u32> = vec![3], "subchannel counts for the efficiency sweep";
    energy_n_values: Vec<u32> = vec![4, 8, 16], "reflector counts for the efficiency sweep";
    p_c: f64 = 3.0, "circuit power (W)";
    p_fpga_relay: f64 = 1.0, "relay FPGA power (W)";
    p_pa: f64 = 5.0, "relay power amplifier (W)";
    p_fpga_irs: f64 = 0.5, "IRS FPGA power (W)";
    p_pin: f64 = 8.5e-3, "power per PIN diode (W)";
    eta: f64 = 0.8, "power conversion efficiency";
    tol_identity: f64 = 1e-10, "relative tolerance of special-function identities";
    tol_gamma_ratio: f64 = 1e-12, "relative tolerance of the gamma-ratio check";
    tol_normalization: f64 = 1e-6, "relative tolerance of density normalization";
    tol_ks: f64 = 0.01, "Kolmogorov-Smirnov distance bound for the sampler";
    tol_budget: f64 = 5e-3, "relative tolerance of the spent average power";
    tol_sigma: f64 = 5.0, "Monte Carlo agreement bound in standard errors";
    tol_kkt: f64 = 1e-3, "KKT residual bound for the symmetric joint problem";
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", no + 1)));
            }
            cfg.set(key, value.trim()).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", no + 1)),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Effective configuration as a parseable file.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (key, value, doc) in self.entries() {
            let _ = writeln!(s, "# {doc}\n{key} = {value}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k == 0 || self.n == 0 {
            return bad("k and n must be at least 1".into());
        }
        if !matches!(self.threshold.as_str(), "closed_form" | "exact") {
            return bad(format!("threshold must be closed_form or exact, got '{}'", self.threshold));
        }
        if !matches!(self.surface_axis.as_str(), "m" | "m_s") {
            return bad(format!("surface_axis must be m or m_s, got '{}'", self.surface_axis));
        }
        if !matches!(self.sweep_name.as_str(), "" | "k" | "n" | "m" | "m_s" | "alpha" | "avg_power") {
            return bad(format!("sweep_name '{}' is not a sweepable parameter", self.sweep_name));
        }
        if !self.sweep_name.is_empty() && self.sweep_points == 0 {
            return bad("sweep_points must be at least 1 when sweep_name is set".into());
        }
        if self.joint_gains.is_empty() {
            return bad("joint_gains must list at least one gain".into());
        }
        if self.pdf_points < 2 || self.samples == 0 || self.chunk_size == 0 || self.joint_draws == 0 {
            return bad("pdf_points must be >= 2 and samples, chunk_size, joint_draws >= 1".into());
        }
        if !(self.pdf_h_max >= 0.0) {
            return bad("pdf_h_max must be >= 0".into());
        }
        let tols = [
            self.tol_identity,
            self.tol_gamma_ratio,
            self.tol_normalization,
            self.tol_ks,
            self.tol_budget,
            self.tol_sigma,
            self.tol_kkt,
        ];
        if tols.iter().any(|&t| !(t > 0.0)) {
            return bad("tolerances must be positive".into());
        }
        // the typed builders carry the physical checks
        self.channel().map_err(to_config)?;
        self.budget().map_err(to_config)?;
        self.solver().validate().map_err(to_config)?;
        self.mc().validate().map_err(to_config)?;
        self.node().validate().map_err(to_config)?;
        FadingParams::new(self.m, self.m_s, self.relay_mean_gain).map_err(to_config)?;
        Ok(())
    }

    pub fn fading(&self) -> Result<FadingParams> {
        FadingParams::new(self.m, self.m_s, self.mean_gain)
    }

    pub fn subchannel(&self) -> Result<SubchannelParams> {
        SubchannelParams::new(self.fading()?, self.n, self.dist_sr, self.dist_rd, self.alpha)
    }

    pub fn channel(&self) -> Result<ChannelParams> {
        ChannelParams::identical(self.k as usize, self.subchannel()?)
    }

    pub fn budget(&self) -> Result<PowerBudget> {
        PowerBudget::new(self.avg_power, self.peak_power, self.noise_psd, self.bandwidth)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { step: self.step, stop: self.stop, max_iter: self.max_iter, window: self.window, ..Default::default() }
    }

    pub fn joint_problem(&self) -> Result<JointProblem> {
        JointProblem::new(self.joint_gains.clone(), self.bandwidth, self.joint_power, self.noise_psd)
    }

    pub fn joint_budget(&self) -> JointBudget {
        JointBudget { total_bandwidth: self.bandwidth, total_power: self.joint_power, noise_psd: self.noise_psd }
    }

    pub fn mc(&self) -> McConfig {
        McConfig { seed: self.seed, samples: self.samples, chunk_size: self.chunk_size }
    }

    pub fn node(&self) -> NodePowerModel {
        NodePowerModel {
            p_fpga_relay: self.p_fpga_relay,
            p_pa: self.p_pa,
            p_fpga_irs: self.p_fpga_irs,
            p_pin: self.p_pin,
            n_pins: self.n,
            eta: self.eta,
        }
    }

    pub fn circuit(&self) -> CircuitPowerModel {
        CircuitPowerModel { aggregate: Some(self.p_c), ..Default::default() }
    }

    /// Efficiency scenario with the source transmitting at the average power.
    pub fn scenario(&self) -> Result<EeScenario> {
        Ok(EeScenario {
            channel: self.channel()?,
            relay_fading: FadingParams::new(self.m, self.m_s, self.relay_mean_gain)?,
            source_power: self.avg_power,
            budget: self.budget()?,
            node: self.node(),
            circuit: self.circuit(),
        })
    }

    /// Sweep values from `sweep_start` to `sweep_stop`, or `None` when no
    /// sweep is configured.
    pub fn sweep(&self) -> Option<(&str, Vec<f64>)> {
        if self.sweep_name.is_empty() {
            return None;
        }
        Some((self.sweep_name.as_str(), linspace(self.sweep_start, self.sweep_stop, self.sweep_points)))
    }

    /// Copy with one sweepable parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match name {
            "k" | "n" => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("{name} sweep value {value} is not a positive integer")));
                }
                if name == "k" {
                    c.k = value as u32;
                } else {
                    c.n = value as u32;
                }
            }
            "m" => c.m = value,
            "m_s" => c.m_s = value,
            "alpha" => c.alpha = value,
            "avg_power" => c.avg_power = value,
            _ => return Err(Error::Config(format!("'{name}' is not sweepable"))),
        }
        Ok(c)
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// `points` evenly spaced values; a single point yields `start`.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points).map(|i| start + (stop - start) * i as f64 / (points - 1) as f64).collect(),
    }
}

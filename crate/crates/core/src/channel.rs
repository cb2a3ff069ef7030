//! Fisher-Snedecor F composite fading.
//!
//! A single reflector gain follows the F law
//! `f(g) = m^m (m_s ḡ)^{m_s} g^{m-1} / [B(m, m_s) (m g + m_s ḡ)^{m+m_s}]`,
//! i.e. `g = (m_s ḡ / m) X/Y` with `X ~ Gamma(m)`, `Y ~ Gamma(m_s)`. Here `ḡ`
//! is a scale: the actual mean is `m_s ḡ / (m_s - 1)`.
//!
//! The sum of `N` reflector gains is modelled by the F form with shapes
//! `(N m, N m_s)`; subchannel `k` scales that sum by `L_k^{-α}`, and the
//! heterogeneous composite `h = Σ_k h_k` is modelled by the F form with shapes
//! `(K N m, K N m_s)` and rate `Λ/K`, multiplied by `∏_k L_k^α`. That prefactor
//! is kept, so [`pdf_composite`] integrates to `∏_k L_k^α`;
//! [`normalized_pdf_composite`] divides it out.
//!
//! Every density has an elementary evaluation and a Meijer-G evaluation; both
//! work in log space.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{integrate_from_scaled, sample_gamma, QuadratureConfig};
use crate::specfun::{beta_inc_reg, ln_gamma_pos, ln_meijer_g_2212};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub m: f64,
    pub m_s: f64,
    pub mean_gain: f64,
}

impl FadingParams {
    pub fn new(m: f64, m_s: f64, mean_gain: f64) -> Result<Self> {
        let p = Self { m, m_s, mean_gain };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 0.5 && self.m.is_finite()) {
            return Err(Error::InvalidParam(format!("fading parameter m = {} must be >= 0.5", self.m)));
        }
        if !(self.m_s > 0.0 && self.m_s.is_finite()) {
            return Err(Error::InvalidParam(format!("shadowing parameter m_s = {} must be > 0", self.m_s)));
        }
        if !(self.mean_gain > 0.0 && self.mean_gain.is_finite()) {
            return Err(Error::InvalidParam(format!("mean gain {} must be > 0", self.mean_gain)));
        }
        Ok(())
    }

    /// Mean of the single-reflector law, `m_s ḡ/(m_s - 1)`; `None` when
    /// `m_s <= 1`, where it diverges.
    pub fn true_mean(&self) -> Option<f64> {
        (self.m_s > 1.0).then(|| self.m_s * self.mean_gain / (self.m_s - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubchannelParams {
    pub fading: FadingParams,
    pub n_reflectors: u32,
    pub dist_sr: f64,
    pub dist_rd: f64,
    pub pathloss_exp: f64,
}

impl SubchannelParams {
    pub fn new(fading: FadingParams, n_reflectors: u32, dist_sr: f64, dist_rd: f64, pathloss_exp: f64) -> Result<Self> {
        let s = Self { fading, n_reflectors, dist_sr, dist_rd, pathloss_exp };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.fading.validate()?;
        if self.n_reflectors < 1 {
            return Err(Error::InvalidParam("reflector count N must be at least 1".into()));
        }
        if !(self.dist_sr > 0.0 && self.dist_rd > 0.0 && self.dist_sr.is_finite() && self.dist_rd.is_finite()) {
            return Err(Error::InvalidParam("hop distances must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.pathloss_exp) {
            return Err(Error::InvalidParam(format!("path-loss exponent {} outside [0, 1]", self.pathloss_exp)));
        }
        Ok(())
    }

    /// `L_k = L^{SR} L^{RD}`.
    pub fn distance(&self) -> f64 {
        self.dist_sr * self.dist_rd
    }

    /// `L_k^α`, the factor dividing the sum gain.
    pub fn path_loss(&self) -> f64 {
        self.distance().powf(self.pathloss_exp)
    }

    /// `Λ_k = m L_k^α / (N m_s ḡ)`.
    pub fn lambda(&self) -> f64 {
        let f = &self.fading;
        f.m * self.path_loss() / (self.n_reflectors as f64 * f.m_s * f.mean_gain)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub subchannels: Vec<SubchannelParams>,
    pub avg_m: f64,
    pub avg_m_s: f64,
    pub avg_dist: f64,
    pub avg_gain: f64,
}

impl ChannelParams {
    /// Builds the composite with average parameters taken as arithmetic means
    /// of the per-subchannel values. All subchannels must share `N` and `α`.
    pub fn from_subchannels(subchannels: Vec<SubchannelParams>) -> Result<Self> {
        let first = *subchannels
            .first()
            .ok_or_else(|| Error::InvalidParam("at least one subchannel is required".into()))?;
        for s in &subchannels {
            s.validate()?;
            if s.n_reflectors != first.n_reflectors {
                return Err(Error::InvalidParam("subchannels must share the reflector count N".into()));
            }
            if s.pathloss_exp != first.pathloss_exp {
                return Err(Error::InvalidParam("subchannels must share the path-loss exponent".into()));
            }
        }
        let k = subchannels.len() as f64;
        let mean = |f: &dyn Fn(&SubchannelParams) -> f64| subchannels.iter().map(f).sum::<f64>() / k;
        let cp = Self {
            avg_m: mean(&|s| s.fading.m),
            avg_m_s: mean(&|s| s.fading.m_s),
            avg_dist: mean(&|s| s.distance()),
            avg_gain: mean(&|s| s.fading.mean_gain),
            subchannels,
        };
        cp.validate()?;
        Ok(cp)
    }

    /// `K` copies of one subchannel.
    pub fn identical(k: usize, sc: SubchannelParams) -> Result<Self> {
        Self::from_subchannels(vec![sc; k])
    }

    pub fn validate(&self) -> Result<()> {
        if self.subchannels.is_empty() {
            return Err(Error::InvalidParam("at least one subchannel is required".into()));
        }
        for v in [self.avg_m, self.avg_m_s, self.avg_dist, self.avg_gain] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam("average channel parameters must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.subchannels.len()
    }

    pub fn n(&self) -> u32 {
        self.subchannels[0].n_reflectors
    }

    pub fn alpha(&self) -> f64 {
        self.subchannels[0].pathloss_exp
    }

    /// `Λ = m L̄^α / (N m_s h̄)` from the average parameters.
    pub fn lambda(&self) -> f64 {
        self.avg_m * self.avg_dist.powf(self.alpha()) / (self.n() as f64 * self.avg_m_s * self.avg_gain)
    }

    /// Rate of the composite F form, `Λ/K`.
    pub fn rate(&self) -> f64 {
        self.lambda() / self.k() as f64
    }

    /// Shapes `(K N m, K N m_s)`.
    pub fn shapes(&self) -> (f64, f64) {
        let kn = (self.k() as u64 * self.n() as u64) as f64;
        (kn * self.avg_m, kn * self.avg_m_s)
    }

    /// `∏_k L_k^α`, the total mass of [`pdf_composite`].
    pub fn prod_path_loss(&self) -> f64 {
        self.ln_prod_path_loss().exp()
    }

    pub fn ln_prod_path_loss(&self) -> f64 {
        self.subchannels.iter().map(|s| s.pathloss_exp * s.distance().ln()).sum()
    }

    /// `(KNm / KNm_s) (K/Λ)`, the location of the bulk of the composite law;
    /// used as the quadrature mapping scale.
    pub fn typical_gain(&self) -> f64 {
        let (a, b) = self.shapes();
        a / (b * self.rate())
    }

    /// Mean of the normalized composite law, `(K/Λ) KNm/(KNm_s - 1)`;
    /// `None` when `KNm_s <= 1`.
    pub fn model_mean(&self) -> Option<f64> {
        let (a, b) = self.shapes();
        (b > 1.0).then(|| a / (self.rate() * (b - 1.0)))
    }

    /// Mean of `Σ_k L_k^{-α} Σ_n g_{k,n}`; `None` if any `m_s <= 1`.
    pub fn true_mean(&self) -> Option<f64> {
        self.subchannels
            .iter()
            .map(|s| s.fading.true_mean().map(|mu| s.n_reflectors as f64 * mu / s.path_loss()))
            .sum()
    }
}

/// Log density of `c X/Y`-type laws: `c (c x)^{a-1} (1 + c x)^{-(a+b)} / B(a, b)`.
fn ln_scaled_beta_prime(x: f64, a: f64, b: f64, c: f64) -> f64 {
    if x == 0.0 {
        return match a.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Greater) => f64::NEG_INFINITY,
            Some(std::cmp::Ordering::Equal) => c.ln() - ln_beta_pos(a, b),
            _ => f64::INFINITY,
        };
    }
    let cx = c * x;
    c.ln() + (a - 1.0) * cx.ln() - (a + b) * cx.ln_1p() - ln_beta_pos(a, b)
}

fn ln_beta_pos(a: f64, b: f64) -> f64 {
    ln_gamma_pos(a) + ln_gamma_pos(b) - ln_gamma_pos(a + b)
}

/// Same law through `c / (Γ(a)Γ(b)) · G(c x | -b, 0; a-1, 0)`.
fn ln_scaled_beta_prime_meijer(x: f64, a: f64, b: f64, c: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(ln_scaled_beta_prime(0.0, a, b, c));
    }
    let lg = ln_meijer_g_2212(c * x, -b, 0.0, a - 1.0, 0.0)?;
    Ok(c.ln() - ln_gamma_pos(a) - ln_gamma_pos(b) + lg)
}

fn check_gain(func: &'static str, g: f64) -> Result<()> {
    if g < 0.0 || g.is_nan() {
        return Err(Error::domain(func, format!("gain {g} must be non-negative")));
    }
    Ok(())
}

fn single_rate(p: &FadingParams, n: u32) -> f64 {
    p.m / (n as f64 * p.m_s * p.mean_gain)
}

/// Single-reflector F density.
pub fn pdf_single_reflector(g: f64, p: &FadingParams) -> Result<f64> {
    check_gain("pdf_single_reflector", g)?;
    Ok(ln_scaled_beta_prime(g, p.m, p.m_s, single_rate(p, 1)).exp())
}

/// Density of the sum of `n` reflector gains: F form with shapes `(n m, n m_s)`
/// and scale `n m_s ḡ / m`.
pub fn pdf_sum_gain(g: f64, p: &FadingParams, n: u32) -> Result<f64> {
    check_gain("pdf_sum_gain", g)?;
    let nf = n as f64;
    Ok(ln_scaled_beta_prime(g, nf * p.m, nf * p.m_s, single_rate(p, n)).exp())
}

/// [`pdf_sum_gain`] through the Meijer G representation.
pub fn pdf_sum_gain_meijer(g: f64, p: &FadingParams, n: u32) -> Result<f64> {
    check_gain("pdf_sum_gain", g)?;
    let nf = n as f64;
    Ok(ln_scaled_beta_prime_meijer(g, nf * p.m, nf * p.m_s, single_rate(p, n))?.exp())
}

/// Density of `h_k = L_k^{-α} g_k`: `L_k^α f_g(h L_k^α)`.
pub fn pdf_subchannel(h: f64, sc: &SubchannelParams) -> Result<f64> {
    check_gain("pdf_subchannel", h)?;
    let la = sc.path_loss();
    Ok(la * pdf_sum_gain(h * la, &sc.fading, sc.n_reflectors)?)
}

/// [`pdf_subchannel`] as `Λ_k / (Γ(Nm)Γ(Nm_s)) G(Λ_k h | -Nm_s, 0; Nm-1, 0)`.
pub fn pdf_subchannel_meijer(h: f64, sc: &SubchannelParams) -> Result<f64> {
    check_gain("pdf_subchannel", h)?;
    let nf = sc.n_reflectors as f64;
    Ok(ln_scaled_beta_prime_meijer(h, nf * sc.fading.m, nf * sc.fading.m_s, sc.lambda())?.exp())
}

/// Composite density including the `∏_k L_k^α` prefactor.
pub fn pdf_composite(h: f64, cp: &ChannelParams) -> Result<f64> {
    check_gain("pdf_composite", h)?;
    let (a, b) = cp.shapes();
    Ok((cp.ln_prod_path_loss() + ln_scaled_beta_prime(h, a, b, cp.rate())).exp())
}

/// [`pdf_composite`] through the Meijer G representation.
pub fn pdf_composite_meijer(h: f64, cp: &ChannelParams) -> Result<f64> {
    check_gain("pdf_composite", h)?;
    let (a, b) = cp.shapes();
    Ok((cp.ln_prod_path_loss() + ln_scaled_beta_prime_meijer(h, a, b, cp.rate())?).exp())
}

/// [`pdf_composite`] divided by `∏_k L_k^α`.
pub fn normalized_pdf_composite(h: f64, cp: &ChannelParams) -> Result<f64> {
    check_gain("normalized_pdf_composite", h)?;
    let (a, b) = cp.shapes();
    Ok(ln_scaled_beta_prime(h, a, b, cp.rate()).exp())
}

fn scaled_beta_prime_cdf(x: f64, a: f64, b: f64, c: f64) -> Result<f64> {
    let cx = c * x;
    if cx.is_infinite() {
        return Ok(1.0);
    }
    beta_inc_reg(a, b, cx / (1.0 + cx))
}

/// Distribution function of the single-reflector law.
pub fn cdf_single_reflector(g: f64, p: &FadingParams) -> Result<f64> {
    check_gain("cdf_single_reflector", g)?;
    scaled_beta_prime_cdf(g, p.m, p.m_s, single_rate(p, 1))
}

/// Distribution function of the `n`-reflector sum law.
pub fn cdf_sum_gain(g: f64, p: &FadingParams, n: u32) -> Result<f64> {
    check_gain("cdf_sum_gain", g)?;
    let nf = n as f64;
    scaled_beta_prime_cdf(g, nf * p.m, nf * p.m_s, single_rate(p, n))
}

/// Distribution function of [`normalized_pdf_composite`].
pub fn cdf_composite(h: f64, cp: &ChannelParams) -> Result<f64> {
    check_gain("cdf_composite", h)?;
    let (a, b) = cp.shapes();
    scaled_beta_prime_cdf(h, a, b, cp.rate())
}

/// One exact draw from the single-reflector law.
pub fn sample_gain<R: Rng + ?Sized>(p: &FadingParams, rng: &mut R) -> f64 {
    let x = sample_gamma(p.m, rng);
    let y = sample_gamma(p.m_s, rng);
    p.m_s * p.mean_gain / p.m * x / y
}

/// `Σ_n g_n` over `n` independent reflectors.
pub fn sample_sum_gain<R: Rng + ?Sized>(p: &FadingParams, n: u32, rng: &mut R) -> f64 {
    (0..n).map(|_| sample_gain(p, rng)).sum()
}

/// `L_k^{-α} Σ_n g_{k,n}`.
pub fn sample_subchannel<R: Rng + ?Sized>(sc: &SubchannelParams, rng: &mut R) -> f64 {
    sample_sum_gain(&sc.fading, sc.n_reflectors, rng) / sc.path_loss()
}

/// One draw from the subchannel F law (shapes `(N m, N m_s)`, rate `Λ_k`),
/// the density [`pdf_subchannel`] describes.
pub fn sample_subchannel_model<R: Rng + ?Sized>(sc: &SubchannelParams, rng: &mut R) -> f64 {
    let nf = sc.n_reflectors as f64;
    sample_gamma(nf * sc.fading.m, rng) / sample_gamma(nf * sc.fading.m_s, rng) / sc.lambda()
}

/// `Σ_k L_k^{-α} Σ_n g_{k,n}` with all `N K` reflector gains independent.
pub fn sample_composite<R: Rng + ?Sized>(cp: &ChannelParams, rng: &mut R) -> f64 {
    cp.subchannels.iter().map(|s| sample_subchannel(s, rng)).sum()
}

/// One draw from the normalized composite model law (shapes `(KNm, KNm_s)`,
/// rate `Λ/K`), as opposed to the physical sum drawn by [`sample_composite`].
pub fn sample_composite_model<R: Rng + ?Sized>(cp: &ChannelParams, rng: &mut R) -> f64 {
    let (a, b) = cp.shapes();
    sample_gamma(a, rng) / sample_gamma(b, rng) / cp.rate()
}

/// Quadrature of [`pdf_composite`] next to its expected value `∏_k L_k^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub integral: f64,
    pub expected: f64,
}

impl Normalization {
    pub fn rel_error(&self) -> f64 {
        ((self.integral - self.expected) / self.expected).abs()
    }
}

pub fn composite_normalization(cp: &ChannelParams, qcfg: &QuadratureConfig) -> Result<Normalization> {
    let integral = integrate_from_scaled(|h| pdf_composite(h, cp).unwrap_or(f64::NAN), 0.0, cp.typical_gain(), qcfg)?;
    Ok(Normalization { integral, expected: cp.prod_path_loss() })
}

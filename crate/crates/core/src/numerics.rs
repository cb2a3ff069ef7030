//! Quadrature, root bracketing and reproducible Monte Carlo.
//!
//! Semi-infinite integrals are mapped to `[0, 1)` with `h = t/(1-t)` and
//! integrated by globally adaptive 7/15-point Gauss-Kronrod subdivision.
//! Monte Carlo work is split into fixed-size chunks; chunk `c` draws from its
//! own ChaCha stream (`seed`, stream `c`) and chunk statistics are merged in
//! chunk order, so estimates do not depend on the number of worker threads.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Random stream handed to samplers.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Fraction of the running integral that the outermost interval (the one
    /// reaching infinity) may carry before its error is ignored.
    pub tail_cutoff_mass: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-8, max_subdivisions: 4000, tail_cutoff_mass: 1e-10 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParam("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidParam("max_subdivisions must be at least 1".into()));
        }
        if !(self.tail_cutoff_mass > 0.0 && self.tail_cutoff_mass <= 1e-6) {
            return Err(Error::InvalidParam("tail_cutoff_mass must lie in (0, 1e-6]".into()));
        }
        Ok(())
    }
}

/// Value and error bound of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hw * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let kron = kron * hw;
    let gauss = gauss * hw;
    let err = (kron - gauss).abs();
    if !kron.is_finite() || !err.is_finite() {
        return (f64::NAN, f64::INFINITY);
    }
    (kron, err)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const INITIAL_PIECES: usize = 16;

/// Adaptive Gauss-Kronrod on `[a, b]`. When `open_right` is set the interval
/// touching `b` may be retired under the tail-mass rule.
fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadratureConfig, open_right: bool) -> Result<Quadrature> {
    cfg.validate()?;
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    // a uniform starting partition keeps narrow peaks from slipping between nodes
    let pieces = INITIAL_PIECES.min(cfg.max_subdivisions);
    for i in 0..pieces {
        let lo = a + (b - a) * i as f64 / pieces as f64;
        let hi = if i + 1 == pieces { b } else { a + (b - a) * (i + 1) as f64 / pieces as f64 };
        let (v, e) = gk15(f, lo, hi);
        if !v.is_finite() {
            return Err(Error::Tolerance { estimate: v, error: e });
        }
        total += v;
        total_err += e;
        heap.push(Piece { a: lo, b: hi, value: v, error: e });
    }
    // tail intervals retired under the mass rule keep their value only
    let mut retired_value = 0.0;
    let mut count = pieces;
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if open_right
            && worst.b == b
            && worst.value.abs() + worst.error <= cfg.tail_cutoff_mass * total.abs()
        {
            total_err -= worst.error;
            retired_value += worst.value;
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if count >= cfg.max_subdivisions || !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        if !v1.is_finite() || !v2.is_finite() {
            return Err(Error::Tolerance { estimate: total, error: f64::INFINITY });
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        count += 1;
        // re-sum periodically to keep cancellation error out of the running totals
        if count % 64 == 0 {
            total = retired_value + heap.iter().map(|p| p.value).sum::<f64>();
            total_err = heap.iter().map(|p| p.error).sum::<f64>();
        }
    }
    let value = retired_value + heap.iter().map(|p| p.value).sum::<f64>();
    let error = heap.iter().map(|p| p.error).sum::<f64>();
    let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
    if error <= tol {
        Ok(Quadrature { value, error, intervals: count })
    } else {
        Err(Error::Tolerance { estimate: value, error })
    }
}

/// `∫_a^b f` with error estimate.
pub fn integrate_detailed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParam(format!("finite limits required, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, intervals: 0 });
    }
    if a > b {
        return integrate_detailed(f, b, a, cfg).map(|q| Quadrature { value: -q.value, ..q });
    }
    adapt(&f, a, b, cfg, false)
}

/// `∫_a^b f`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_detailed(f, a, b, cfg).map(|q| q.value)
}

/// `∫_a^∞ f` with error estimate, through `h = a + t/(1-t)`.
pub fn integrate_from_detailed<F: Fn(f64) -> f64>(f: F, a: f64, cfg: &QuadratureConfig) -> Result<Quadrature> {
    integrate_from_scaled_detailed(f, a, 1.0, cfg)
}

/// `∫_a^∞ f` through `h = a + scale · t/(1-t)`; `scale` should be the width
/// over which `f` carries its mass so that the mapped integrand is not
/// squeezed against `t = 1`.
pub fn integrate_from_scaled_detailed<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<Quadrature> {
    if !a.is_finite() {
        return Err(Error::InvalidParam(format!("finite lower limit required, got {a}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParam(format!("mapping scale {scale} must be positive")));
    }
    let mapped = |t: f64| {
        let s = 1.0 - t;
        let h = a + scale * t / s;
        if !h.is_finite() {
            return 0.0;
        }
        let v = scale * f(h) / (s * s);
        if v.is_finite() {
            v
        } else {
            f64::NAN
        }
    };
    adapt(&mapped, 0.0, 1.0, cfg, true)
}

/// `∫_a^∞ f`.
pub fn integrate_from<F: Fn(f64) -> f64>(f: F, a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_from_detailed(f, a, cfg).map(|q| q.value)
}

/// `∫_a^∞ f` with a mapping scale, see [`integrate_from_scaled_detailed`].
pub fn integrate_from_scaled<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_from_scaled_detailed(f, a, scale, cfg).map(|q| q.value)
}

/// `∫_0^∞ f`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_from(f, 0.0, cfg)
}

/// Root of `f` on `[lo, hi]` by bisection, to absolute width `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.signum() * fhi.signum() < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub seed: u64,
    pub samples: usize,
    /// Samples per independent stream; fixes the work partition.
    pub chunk_size: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { seed: 0x5eed_f00d, samples: 1_000_000, chunk_size: 4096 }
    }
}

impl McConfig {
    pub fn with_samples(self, samples: usize) -> Self {
        Self { samples, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 || self.chunk_size < 1 {
            return Err(Error::InvalidParam("samples and chunk_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Stream number `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }
}

/// Monte Carlo estimate of `E[g(X)]` where `sampler` fills `X` (length `dim`).
///
/// Fallible integrands abort the estimate with the first error in chunk order.
pub fn try_mc_expectation<S, G>(dim: usize, sampler: S, g: G, cfg: &McConfig) -> Result<McEstimate>
where
    S: Fn(&mut StreamRng, &mut [f64]) + Sync,
    G: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let chunks = cfg.samples.div_ceil(cfg.chunk_size);
    let parts: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(cfg.seed, c as u64);
            let n = cfg.chunk_size.min(cfg.samples - c * cfg.chunk_size);
            let mut x = vec![0.0; dim];
            let mut m = Moments { n: 0.0, mean: 0.0, m2: 0.0 };
            for _ in 0..n {
                sampler(&mut rng, &mut x);
                let y = g(&x)?;
                m.n += 1.0;
                let d = y - m.mean;
                m.mean += d / m.n;
                m.m2 += d * (y - m.mean);
            }
            Ok(m)
        })
        .collect();
    let mut acc = Moments { n: 0.0, mean: 0.0, m2: 0.0 };
    for p in parts {
        acc = acc.merge(p?);
    }
    let std_error = if acc.n > 1.0 { (acc.m2 / (acc.n - 1.0) / acc.n).sqrt() } else { f64::NAN };
    Ok(McEstimate { mean: acc.mean, std_error })
}

/// Monte Carlo estimate of `E[g(X)]` for an infallible integrand.
pub fn mc_expectation<S, G>(dim: usize, sampler: S, g: G, cfg: &McConfig) -> Result<McEstimate>
where
    S: Fn(&mut StreamRng, &mut [f64]) + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    try_mc_expectation(dim, sampler, |x| Ok(g(x)), cfg)
}

/// `cfg.samples` scalar draws in stream order, using the same chunk-to-stream
/// assignment as [`try_mc_expectation`].
pub fn draw_samples<S>(draw: S, cfg: &McConfig) -> Result<Vec<f64>>
where
    S: Fn(&mut StreamRng) -> f64 + Sync,
{
    cfg.validate()?;
    let chunks = cfg.samples.div_ceil(cfg.chunk_size);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(cfg.seed, c as u64);
            let n = cfg.chunk_size.min(cfg.samples - c * cfg.chunk_size);
            (0..n).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Largest gap between the empirical distribution of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Gamma(shape, 1) variate by Marsaglia-Tsang; shapes below one use the
/// `Gamma(shape+1) · U^{1/shape}` boost.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.gen::<f64>();
        return sample_gamma(shape + 1.0, rng) * (u.ln() / shape).exp();
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.gen();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

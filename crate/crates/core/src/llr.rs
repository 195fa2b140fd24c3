//! Channel model and L-value computation.
//!
//! BPSK symbols `x = 2c - 1` pass through `y = h x + z + g d` with Gaussian
//! noise `z ~ N(0, sigma2_z)` and an equiprobable BPSK interferer `d = ±1`.
//! L-values are `log p(y|1) / p(y|0)`; every batch produced here is
//! conditioned on `c = 0` through the scrambling sign flip, so matched
//! batches have negative mean.

use crate::error::{Error, Result};
use crate::rng::{block_rng, blocks, SAMPLE_BLOCK};
use crate::special::{db_to_linear, linear_to_db, log_add_exp, log_sum_exp};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Physical parameters of the interference channel for one symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    h: f64,
    g: f64,
    sigma2_z: f64,
}

impl ChannelParams {
    /// Validated constructor: `sigma2_z > 0`, `h > 0`, `0 <= g < h`.
    pub fn new(h: f64, g: f64, sigma2_z: f64) -> Result<Self> {
        let p = Self::with_strong_interference(h, g, sigma2_z)?;
        if g >= h {
            return Err(Error::InvalidChannel(format!(
                "interference gain g = {g} must be below the channel gain h = {h}"
            )));
        }
        Ok(p)
    }

    /// Like [`ChannelParams::new`] but admits `g >= h`. Used by fading
    /// simulations in which the interferer fades independently of the signal.
    pub fn with_strong_interference(h: f64, g: f64, sigma2_z: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "channel gain h = {h} must be positive"
            )));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidChannel(format!(
                "interference gain g = {g} must be non-negative"
            )));
        }
        if !(sigma2_z.is_finite() && sigma2_z > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "noise variance sigma2_z = {sigma2_z} must be positive"
            )));
        }
        Ok(Self { h, g, sigma2_z })
    }

    /// Builds parameters from `SNR = h²/N0` and `SIR = h²/g²` in dB.
    /// `sir_db = +inf` gives an interference-free channel.
    pub fn from_snr_sir_db(h: f64, snr_db: f64, sir_db: f64) -> Result<Self> {
        let n0 = h * h / db_to_linear(snr_db);
        let g = h * 10f64.powf(-sir_db / 20.0);
        Self::new(h, g, n0 / 2.0)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn sigma2_z(&self) -> f64 {
        self.sigma2_z
    }

    pub fn n0(&self) -> f64 {
        2.0 * self.sigma2_z
    }

    pub fn snr(&self) -> f64 {
        self.h * self.h / self.n0()
    }

    pub fn sir(&self) -> f64 {
        (self.h * self.h) / (self.g * self.g)
    }

    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.snr())
    }

    pub fn sir_db(&self) -> f64 {
        linear_to_db(self.sir())
    }

    /// Variance of noise plus interference, `sigma2_z + g²`.
    pub fn noise_plus_interference(&self) -> f64 {
        self.sigma2_z + self.g * self.g
    }

    pub fn weak_interference(&self) -> bool {
        self.g < self.h
    }

    /// Same channel with the interferer switched off.
    pub fn without_interference(&self) -> Self {
        Self { g: 0.0, ..*self }
    }
}

/// Bit/symbol/metric convention: `x = 2c - 1`, decoders maximize `Σ l_n c_n`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BitConvention;

impl BitConvention {
    pub fn symbol(self, bit: u8) -> f64 {
        2.0 * f64::from(bit) - 1.0
    }

    pub fn hard_decision(self, llr: f64) -> u8 {
        u8::from(llr > 0.0)
    }

    pub fn metric(self, llrs: &[f64], bits: &[u8]) -> f64 {
        llrs.iter()
            .zip(bits)
            .filter(|(_, &c)| c == 1)
            .map(|(l, _)| l)
            .sum()
    }
}

/// Exact L-value of the interference channel, evaluated in the log domain.
pub fn true_llr(y: f64, p: &ChannelParams) -> f64 {
    let (h, g) = (p.h, p.g);
    let two_var = 2.0 * p.sigma2_z;
    let e = |m: f64| -(y - m) * (y - m) / two_var;
    log_add_exp(e(h + g), e(h - g)) - log_add_exp(e(-h + g), e(-h - g))
}

/// L-value of a receiver that ignores the interference: `2 h y / sigma2_z`.
pub fn mismatched_llr(y: f64, p: &ChannelParams) -> f64 {
    2.0 * p.h * y / p.sigma2_z
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LValueKind {
    /// Exact L-values.
    Matched,
    /// Interference-blind L-values.
    Mismatched,
    /// Interference-blind L-values scaled by a correction factor.
    Corrected { alpha: f64 },
}

impl LValueKind {
    pub fn tag(&self) -> &'static str {
        match self {
            LValueKind::Matched => "matched",
            LValueKind::Mismatched => "mismatched",
            LValueKind::Corrected { .. } => "corrected",
        }
    }

    pub fn compute(&self, y: f64, p: &ChannelParams) -> f64 {
        match *self {
            LValueKind::Matched => true_llr(y, p),
            LValueKind::Mismatched => mismatched_llr(y, p),
            LValueKind::Corrected { alpha } => alpha * mismatched_llr(y, p),
        }
    }
}

/// L-values conditioned on the transmitted bit being zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LValueBatch {
    pub samples: Vec<f64>,
    pub kind: LValueKind,
    pub params: ChannelParams,
}

impl LValueBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.samples.len() as f64;
        let m = self.mean();
        self.samples.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / (n - 1.0)
    }
}

/// Draws one observation and returns the scrambled L-value together with the
/// internal bit that was transmitted.
pub fn draw_conditioned<R: Rng + ?Sized>(
    rng: &mut R,
    p: &ChannelParams,
    kind: LValueKind,
) -> (f64, bool) {
    let c: bool = rng.gen();
    let d = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let z: f64 = rng.sample(StandardNormal);
    let x = if c { 1.0 } else { -1.0 };
    let y = p.h * x + p.sigma2_z.sqrt() * z + p.g * d;
    let l = kind.compute(y, p);
    (if c { -l } else { l }, c)
}

/// Samples `n` scrambled L-values of the requested kind.
pub fn sample_llrs(
    p: &ChannelParams,
    kind: LValueKind,
    n: usize,
    seed: u64,
) -> Result<LValueBatch> {
    sample_llrs_with_bits(p, kind, n, seed).map(|(batch, _)| batch)
}

/// [`sample_llrs`] that also returns the internally drawn bits.
pub fn sample_llrs_with_bits(
    p: &ChannelParams,
    kind: LValueKind,
    n: usize,
    seed: u64,
) -> Result<(LValueBatch, Vec<bool>)> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let chunks: Vec<(Vec<f64>, Vec<bool>)> = blocks(n, SAMPLE_BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, len)| {
            let mut rng = block_rng(seed, b);
            (0..len)
                .map(|_| draw_conditioned(&mut rng, p, kind))
                .unzip()
        })
        .collect();
    let mut samples = Vec::with_capacity(n);
    let mut bits = Vec::with_capacity(n);
    for (s, c) in chunks {
        samples.extend(s);
        bits.extend(c);
    }
    Ok((
        LValueBatch {
            samples,
            kind,
            params: *p,
        },
        bits,
    ))
}

/// Minimum per-bin count for a bin pair to enter the consistency check.
pub const CONSISTENCY_MIN_COUNT: usize = 100;

/// Largest deviation from the consistency condition `log p(-l|0)/p(l|0) = l`
/// over histogram bins.
///
/// Bins have equal width and are symmetric about zero, spanning six sample
/// standard deviations on either side. For each positive bin `B` with mirror
/// `-B` the statistic is `|log(n(-B)/n(B)) - log mean_{l∈B} e^l|`: the
/// abscissa is the exponential mean over the bin, for which the consistency
/// condition holds exactly in expectation at any bin width. Only pairs where
/// both bins hold at least [`CONSISTENCY_MIN_COUNT`] samples are used.
pub fn empirical_consistency_check(batch: &LValueBatch, bins: usize) -> Result<f64> {
    if bins < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 bins, got {bins}"
        )));
    }
    if batch.len() < 2 {
        return Err(Error::Degenerate("batch has fewer than two samples".into()));
    }
    let sd = batch.variance().sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("batch has zero spread".into()));
    }
    let range = 6.0 * sd;
    let width = 2.0 * range / bins as f64;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for &l in &batch.samples {
        let k = ((l + range) / width).floor();
        if k >= 0.0 && (k as usize) < bins {
            members[k as usize].push(l);
        }
    }
    let mut worst: Option<f64> = None;
    for k in bins.div_ceil(2)..bins {
        let mirror = bins - 1 - k;
        if k == mirror {
            continue;
        }
        let (pos, neg) = (&members[k], &members[mirror]);
        if pos.len() < CONSISTENCY_MIN_COUNT || neg.len() < CONSISTENCY_MIN_COUNT {
            continue;
        }
        let abscissa = log_sum_exp(pos.iter().copied()) - (pos.len() as f64).ln();
        let dev = ((neg.len() as f64).ln() - (pos.len() as f64).ln() - abscissa).abs();
        worst = Some(worst.map_or(dev, |w: f64| w.max(dev)));
    }
    worst.ok_or_else(|| {
        Error::Degenerate(format!(
            "no symmetric bin pair holds {CONSISTENCY_MIN_COUNT} samples on both sides"
        ))
    })
}

//! Coded bit-error rate over a Rayleigh-faded interference channel.
//!
//! Each block draws a message, encodes it, sends every code bit through its
//! own fading realization, forms L-values in the configured way, and decodes
//! with the soft Viterbi decoder. Block `b` of SNR point `i` always uses the
//! same random stream, so different L-value modes see identical channels.

use crate::correction::alpha_saddlepoint_channel;
use crate::error::{Error, Result};
use crate::experiments::gmi_table::{GmiTable, GmiTableSpec};
use crate::experiments::output::fmt_real;
use crate::fec::{conv_encode, ConvCodeSpec, ViterbiDecoder};
use crate::llr::{true_llr, ChannelParams};
use crate::rng::{block_rng, derive_seed};
use crate::special::db_to_linear;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

pub const BER_HEADER: [&str; 6] = ["snr_db", "mode", "blocks", "bit_errors", "ber", "stderr"];

/// Smallest accepted error target per SNR point.
pub const MIN_ERRORS_FLOOR: u64 = 50;

/// Blocks simulated between two checks of the stopping rule. Fixed so the
/// number of simulated blocks does not depend on the worker count.
pub const BLOCKS_PER_BATCH: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LlrMode {
    /// Interference-blind L-values.
    Uncorrected,
    /// Blind L-values scaled by the per-symbol saddlepoint factor.
    Saddlepoint,
    /// Blind L-values scaled by the interpolated GMI factor.
    GmiTable,
    /// Blind L-values scaled by `σ_z² / (σ_z² + g²)`.
    Gauss0,
    /// Exact L-values.
    True,
}

impl LlrMode {
    pub const ALL: [LlrMode; 5] = [
        LlrMode::Uncorrected,
        LlrMode::Saddlepoint,
        LlrMode::GmiTable,
        LlrMode::Gauss0,
        LlrMode::True,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            LlrMode::Uncorrected => "uncorrected",
            LlrMode::Saddlepoint => "saddlepoint",
            LlrMode::GmiTable => "gmi_table",
            LlrMode::Gauss0 => "gauss0",
            LlrMode::True => "true",
        }
    }
}

impl fmt::Display for LlrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for LlrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LlrMode::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown L-value mode `{s}`")))
    }
}

/// How the interference gain of each symbol is drawn, with `ρ = 10^{-SIR/20}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InterferenceModel {
    /// `g_n = ρ`: the configured SIR is an average over the signal fading
    /// and the instantaneous SIR `h_n²/ρ²` varies from symbol to symbol.
    Fixed,
    /// `g_n = ρ h_n`: every symbol sees the configured SIR.
    Proportional,
    /// `g_n = ρ |w_n|` with `w_n` circular Gaussian independent of `h_n`.
    IndependentRayleigh,
}

impl InterferenceModel {
    pub const ALL: [InterferenceModel; 3] = [
        InterferenceModel::Fixed,
        InterferenceModel::Proportional,
        InterferenceModel::IndependentRayleigh,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            InterferenceModel::Proportional => "proportional",
            InterferenceModel::Fixed => "fixed",
            InterferenceModel::IndependentRayleigh => "independent",
        }
    }
}

impl FromStr for InterferenceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InterferenceModel::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown interference model `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerConfig {
    pub code: ConvCodeSpec,
    pub block_info_bits: usize,
    pub sir_db: f64,
    pub snr_db_grid: Vec<f64>,
    pub llr_mode: LlrMode,
    pub interference: InterferenceModel,
    pub min_errors: u64,
    pub max_blocks: u64,
    pub seed: u64,
}

impl BerConfig {
    /// Rate-1/2 `{15, 17}` code, 1000-bit blocks, fixed interference gain,
    /// 200 errors or 10^5 blocks.
    pub fn new(sir_db: f64, snr_db_grid: Vec<f64>, llr_mode: LlrMode, seed: u64) -> Self {
        Self {
            code: ConvCodeSpec::standard_15_17(),
            block_info_bits: 1000,
            sir_db,
            snr_db_grid,
            llr_mode,
            interference: InterferenceModel::Fixed,
            min_errors: 200,
            max_blocks: 100_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_info_bits == 0 {
            return Err(Error::Config(
                "blocks must carry at least one information bit".into(),
            ));
        }
        if self.snr_db_grid.is_empty() || self.snr_db_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(
                "SNR grid must be non-empty and finite".into(),
            ));
        }
        if !self.sir_db.is_finite() {
            return Err(Error::Config(format!(
                "SIR must be finite, got {}",
                self.sir_db
            )));
        }
        if self.min_errors < MIN_ERRORS_FLOOR {
            return Err(Error::Config(format!(
                "min_errors must be at least {MIN_ERRORS_FLOOR}, got {}",
                self.min_errors
            )));
        }
        if self.max_blocks == 0 {
            return Err(Error::Config("max_blocks must be positive".into()));
        }
        Ok(())
    }

    /// Table grid covering the SIR values a symbol can see under this
    /// configuration.
    pub fn gmi_table_spec(&self) -> GmiTableSpec {
        let half_width = match self.interference {
            InterferenceModel::Proportional => 1.0,
            InterferenceModel::Fixed | InterferenceModel::IndependentRayleigh => 15.0,
        };
        GmiTableSpec::around((self.sir_db - half_width, self.sir_db + half_width))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerRow {
    pub snr_db: f64,
    pub mode: LlrMode,
    pub blocks: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub stderr: f64,
}

impl BerRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            fmt_real(self.snr_db),
            self.mode.tag().into(),
            self.blocks.to_string(),
            self.bit_errors.to_string(),
            fmt_real(self.ber),
            fmt_real(self.stderr),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerResult {
    pub rows: Vec<BerRow>,
}

struct PointContext<'a> {
    cfg: &'a BerConfig,
    sigma2_z: f64,
    rho: f64,
    table: Option<&'a GmiTable>,
}

fn rayleigh(rng: &mut ChaCha8Rng) -> f64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    ((a * a + b * b) / 2.0).sqrt()
}

impl PointContext<'_> {
    fn llr(&self, y: f64, h: f64, g: f64) -> Result<f64> {
        let s2 = self.sigma2_z;
        let blind = 2.0 * h * y / s2;
        if h <= 0.0 {
            return Ok(0.0);
        }
        let params = || ChannelParams::with_strong_interference(h, g, s2);
        Ok(match self.cfg.llr_mode {
            LlrMode::Uncorrected => blind,
            LlrMode::Gauss0 => s2 / (s2 + g * g) * blind,
            LlrMode::True => true_llr(y, &params()?),
            LlrMode::Saddlepoint => alpha_saddlepoint_channel(&params()?)?.alpha * blind,
            LlrMode::GmiTable => {
                let table = self
                    .table
                    .ok_or_else(|| Error::Config("GMI table missing".into()))?;
                table.alpha_for(&params()?)? * blind
            }
        })
    }

    /// Bit errors in one block.
    fn block(&self, rng: &mut ChaCha8Rng, decoder: &mut ViterbiDecoder) -> Result<u64> {
        let cfg = self.cfg;
        let message: Vec<u8> = (0..cfg.block_info_bits)
            .map(|_| rng.gen::<bool>() as u8)
            .collect();
        let code = conv_encode(&message, &cfg.code, true);
        let sd = self.sigma2_z.sqrt();
        let mut llrs = Vec::with_capacity(code.len());
        for &c in &code {
            let h = rayleigh(rng);
            let g = match cfg.interference {
                InterferenceModel::Proportional => self.rho * h,
                InterferenceModel::Fixed => self.rho,
                InterferenceModel::IndependentRayleigh => self.rho * rayleigh(rng),
            };
            let d = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let z: f64 = rng.sample(StandardNormal);
            let x = 2.0 * c as f64 - 1.0;
            llrs.push(self.llr(h * x + sd * z + g * d, h, g)?);
        }
        let decoded = decoder.decode(&llrs)?;
        Ok(decoded
            .bits
            .iter()
            .zip(&message)
            .filter(|(a, b)| a != b)
            .count() as u64)
    }
}

fn run_point(
    cfg: &BerConfig,
    index: usize,
    snr_db: f64,
    table: Option<&GmiTable>,
) -> Result<BerRow> {
    // average SNR 1/N0 with E[h²] = 1
    let ctx = PointContext {
        cfg,
        sigma2_z: 0.5 / db_to_linear(snr_db),
        rho: 10f64.powf(-cfg.sir_db / 20.0),
        table,
    };
    let seed = derive_seed(cfg.seed, index as u64);
    let mut blocks = 0u64;
    let mut errors = 0u64;
    while errors < cfg.min_errors && blocks < cfg.max_blocks {
        let end = (blocks + BLOCKS_PER_BATCH).min(cfg.max_blocks);
        let counts = (blocks..end)
            .into_par_iter()
            .map_init(
                || ViterbiDecoder::new(cfg.code.clone(), true),
                |decoder, b| ctx.block(&mut block_rng(seed, b), decoder),
            )
            .collect::<Result<Vec<u64>>>()?;
        errors += counts.iter().sum::<u64>();
        blocks = end;
    }
    let bits = blocks * cfg.block_info_bits as u64;
    let ber = errors as f64 / bits as f64;
    Ok(BerRow {
        snr_db,
        mode: cfg.llr_mode,
        blocks,
        bits,
        bit_errors: errors,
        ber,
        stderr: (ber * (1.0 - ber) / bits as f64).sqrt(),
    })
}

/// Simulates every SNR point of `cfg`. A GMI table is built on demand when
/// the mode needs one; [`run_ber_with_table`] reuses an existing one.
pub fn run_ber(cfg: &BerConfig) -> Result<BerResult> {
    cfg.validate()?;
    let table = match cfg.llr_mode {
        LlrMode::GmiTable => Some(GmiTable::build(&cfg.gmi_table_spec())?),
        _ => None,
    };
    run_ber_with_table(cfg, table.as_ref())
}

pub fn run_ber_with_table(cfg: &BerConfig, table: Option<&GmiTable>) -> Result<BerResult> {
    cfg.validate()?;
    if cfg.llr_mode == LlrMode::GmiTable && table.is_none() {
        return Err(Error::Config("gmi_table mode needs a GMI table".into()));
    }
    let rows = cfg
        .snr_db_grid
        .iter()
        .enumerate()
        .map(|(i, &snr)| run_point(cfg, i, snr, table))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerResult { rows })
}

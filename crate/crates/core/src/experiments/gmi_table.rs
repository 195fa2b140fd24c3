//! Precomputed GMI correction factors with bilinear interpolation.
//!
//! Solving the GMI condition per received symbol is too slow for BER runs,
//! so factors are tabulated on an (SNR dB, SIR dB) grid with `h = 1` (the
//! factor depends only on the two ratios). Queries outside the grid are
//! clamped to its edges, and queries above [`GMI_SNR_CAP_DB`] use the
//! saddlepoint factor instead.

use crate::correction::{alpha_gmi, alpha_saddlepoint_channel, MixturePdf, GMI_SNR_CAP_DB};
use crate::error::{Error, Result};
use crate::llr::ChannelParams;
use crate::quadrature::DEFAULT_ORDER;
use crate::special::db_to_linear;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct GmiTableSpec {
    pub snr_db: (f64, f64),
    pub snr_step: f64,
    pub sir_db: (f64, f64),
    pub sir_step: f64,
    pub quad_order: usize,
}

impl GmiTableSpec {
    /// Grid with 0.5 dB spacing from -20 dB to the SNR cap and across `sir_db`.
    pub fn around(sir_db: (f64, f64)) -> Self {
        Self {
            snr_db: (-20.0, GMI_SNR_CAP_DB),
            snr_step: 0.5,
            sir_db,
            sir_step: 0.5,
            quad_order: DEFAULT_ORDER,
        }
    }

    fn axis(range: (f64, f64), step: f64, what: &str) -> Result<Vec<f64>> {
        let (lo, hi) = range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!(
                "{what} range [{lo}, {hi}] is not an interval"
            )));
        }
        if !(step > 0.0) {
            return Err(Error::Config(format!(
                "{what} step must be positive, got {step}"
            )));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if n > 100_000 {
            return Err(Error::Config(format!("{what} axis would have {n} nodes")));
        }
        Ok((0..n).map(|i| lo + i as f64 * step).collect())
    }
}

#[derive(Debug, Clone)]
pub struct GmiTable {
    snr_nodes: Vec<f64>,
    sir_nodes: Vec<f64>,
    /// SIR-major: `values[j * snr_nodes.len() + i]` belongs to `(snr_i, sir_j)`.
    values: Vec<f64>,
    fallback: Vec<bool>,
}

fn node_value(snr_db: f64, sir_db: f64, order: usize) -> Result<(f64, bool)> {
    let snr = db_to_linear(snr_db);
    let sigma2 = 1.0 / (2.0 * snr);
    let g = 10f64.powf(-sir_db / 20.0);
    let p = ChannelParams::with_strong_interference(1.0, g, sigma2)?;
    match alpha_gmi(&MixturePdf::interference(&p), order) {
        Ok(e) => Ok((e.alpha, false)),
        Err(_) => Ok((alpha_saddlepoint_channel(&p)?.alpha, true)),
    }
}

impl GmiTable {
    pub fn build(spec: &GmiTableSpec) -> Result<Self> {
        if spec.snr_db.1 > GMI_SNR_CAP_DB {
            return Err(Error::Config(format!(
                "GMI table SNR range must end at or below {GMI_SNR_CAP_DB} dB"
            )));
        }
        let snr_nodes = GmiTableSpec::axis(spec.snr_db, spec.snr_step, "SNR")?;
        let sir_nodes = GmiTableSpec::axis(spec.sir_db, spec.sir_step, "SIR")?;
        let grid: Vec<(f64, f64)> = sir_nodes
            .iter()
            .flat_map(|&sir| snr_nodes.iter().map(move |&snr| (snr, sir)))
            .collect();
        let cells = grid
            .par_iter()
            .map(|&(snr, sir)| node_value(snr, sir, spec.quad_order))
            .collect::<Result<Vec<_>>>()?;
        let (values, fallback) = cells.into_iter().unzip();
        Ok(Self {
            snr_nodes,
            sir_nodes,
            values,
            fallback,
        })
    }

    pub fn snr_nodes(&self) -> &[f64] {
        &self.snr_nodes
    }

    pub fn sir_nodes(&self) -> &[f64] {
        &self.sir_nodes
    }

    /// Stored value at node `(i, j)` and whether it is a saddlepoint fill-in.
    pub fn node(&self, i: usize, j: usize) -> (f64, bool) {
        let k = j * self.snr_nodes.len() + i;
        (self.values[k], self.fallback[k])
    }

    pub fn fallback_count(&self) -> usize {
        self.fallback.iter().filter(|&&f| f).count()
    }

    /// Cell index and fractional position of `x` on `nodes`, clamped.
    fn locate(nodes: &[f64], x: f64) -> (usize, f64) {
        if nodes.len() == 1 || x <= nodes[0] {
            return (0, 0.0);
        }
        let last = nodes.len() - 1;
        if x >= nodes[last] {
            return (last - 1, 1.0);
        }
        let i = nodes.partition_point(|&n| n <= x) - 1;
        (i, (x - nodes[i]) / (nodes[i + 1] - nodes[i]))
    }

    /// Bilinear interpolation at `(snr_db, sir_db)`, clamped to the grid.
    pub fn interpolate(&self, snr_db: f64, sir_db: f64) -> f64 {
        let (i, u) = Self::locate(&self.snr_nodes, snr_db);
        let (j, v) = Self::locate(&self.sir_nodes, sir_db);
        let i1 = (i + 1).min(self.snr_nodes.len() - 1);
        let j1 = (j + 1).min(self.sir_nodes.len() - 1);
        let at = |a: usize, b: usize| self.values[b * self.snr_nodes.len() + a];
        (1.0 - u) * (1.0 - v) * at(i, j)
            + u * (1.0 - v) * at(i1, j)
            + (1.0 - u) * v * at(i, j1)
            + u * v * at(i1, j1)
    }

    /// Correction factor for one symbol's channel.
    pub fn alpha_for(&self, p: &ChannelParams) -> Result<f64> {
        if p.g() == 0.0 {
            return Ok(1.0);
        }
        let snr_db = p.snr_db();
        if snr_db > GMI_SNR_CAP_DB {
            return Ok(alpha_saddlepoint_channel(p)?.alpha);
        }
        Ok(self.interpolate(snr_db, p.sir_db()))
    }
}

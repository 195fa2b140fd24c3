//! Correction factors over an (SNR, SIR) grid.

use crate::correction::{
    alpha_gauss_moment_pdf, alpha_gmi_channel, alpha_high_snr, alpha_low_snr,
    alpha_saddlepoint_channel, alpha_wlsf_with_order, CorrectionEstimate, CorrectionMethod,
    MixturePdf,
};
use crate::error::{Error, Result};
use crate::experiments::output::fmt_real;
use crate::llr::ChannelParams;
use crate::pep::alpha_grid_2sm;
use crate::quadrature::DEFAULT_ORDER;
use rayon::prelude::*;

pub const SWEEP_HEADER: [&str; 5] = ["snr_db", "sir_db", "method", "alpha", "flag"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub snr_db_grid: Vec<f64>,
    pub sir_db_grid: Vec<f64>,
    pub methods: Vec<CorrectionMethod>,
    pub quad_order: usize,
    /// Error-event weights used by the grid-search method.
    pub d1: usize,
    pub d2: usize,
    pub grid_step: f64,
}

impl SweepConfig {
    pub fn new(
        snr_db_grid: Vec<f64>,
        sir_db_grid: Vec<f64>,
        methods: Vec<CorrectionMethod>,
    ) -> Result<Self> {
        let cfg = Self {
            snr_db_grid,
            sir_db_grid,
            methods,
            quad_order: DEFAULT_ORDER,
            d1: 4,
            d2: 4,
            grid_step: 1e-3,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db_grid.is_empty() || self.sir_db_grid.is_empty() {
            return Err(Error::Config("SNR and SIR grids must be non-empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config(
                "at least one correction method is required".into(),
            ));
        }
        if self
            .snr_db_grid
            .iter()
            .chain(&self.sir_db_grid)
            .any(|x| x.is_nan())
        {
            return Err(Error::Config("grid values must be numbers".into()));
        }
        Ok(())
    }
}

/// One estimator at one grid point; `outcome` keeps the failure text when
/// the estimator errored.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub sir_db: f64,
    pub method: CorrectionMethod,
    pub outcome: std::result::Result<CorrectionEstimate, String>,
}

impl SweepRow {
    pub fn alpha(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|e| e.alpha)
    }

    pub fn to_record(&self) -> Vec<String> {
        let (alpha, flag) = match &self.outcome {
            Ok(e) => (
                fmt_real(e.alpha),
                e.diagnostics.flag.map_or("", |f| f.tag()).to_string(),
            ),
            Err(msg) => (String::new(), format!("error: {msg}")),
        };
        vec![
            fmt_real(self.snr_db),
            fmt_real(self.sir_db),
            self.method.tag().into(),
            alpha,
            flag,
        ]
    }
}

/// Runs one estimator on channel `p`.
pub fn estimate(
    method: CorrectionMethod,
    p: &ChannelParams,
    cfg: &SweepConfig,
) -> Result<CorrectionEstimate> {
    match method {
        CorrectionMethod::Saddlepoint => alpha_saddlepoint_channel(p),
        CorrectionMethod::Gmi => alpha_gmi_channel(p, cfg.quad_order),
        CorrectionMethod::Wlsf => {
            alpha_wlsf_with_order(&MixturePdf::interference(p), cfg.quad_order)
        }
        CorrectionMethod::GaussMoment => alpha_gauss_moment_pdf(&MixturePdf::interference(p)),
        CorrectionMethod::LowSnr => Ok(alpha_low_snr(p)),
        CorrectionMethod::HighSnr => alpha_high_snr(p),
        CorrectionMethod::Grid2sm => alpha_grid_2sm(p, cfg.d1, cfg.d2, cfg.grid_step),
    }
}

/// Evaluates every method at every grid point with `h = 1`. Rows come out
/// SIR-major, then SNR, then in the configured method order.
pub fn run_alpha_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let points: Vec<(f64, f64)> = cfg
        .sir_db_grid
        .iter()
        .flat_map(|&sir| cfg.snr_db_grid.iter().map(move |&snr| (snr, sir)))
        .collect();
    let rows = points
        .par_iter()
        .flat_map_iter(|&(snr_db, sir_db)| {
            let params = ChannelParams::from_snr_sir_db(1.0, snr_db, sir_db);
            cfg.methods.iter().map(move |&method| SweepRow {
                snr_db,
                sir_db,
                method,
                outcome: params
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|p| estimate(method, p, cfg))
                    .map_err(|e| e.to_string()),
            })
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failures_become_rows() {
        let cfg = SweepConfig::new(
            vec![10.0],
            vec![-3.0, 6.0],
            vec![CorrectionMethod::Saddlepoint],
        )
        .unwrap();
        let rows = run_alpha_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].outcome.is_err());
        assert!(rows[0].to_record()[4].starts_with("error: "));
        assert!(rows[1].alpha().unwrap() < 1.0);
    }

    #[test]
    fn empty_grids_are_rejected() {
        assert!(SweepConfig::new(vec![], vec![6.0], vec![CorrectionMethod::Gmi]).is_err());
        assert!(SweepConfig::new(vec![1.0], vec![6.0], vec![]).is_err());
    }
}

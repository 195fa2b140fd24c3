//! Pairwise error probabilities of a sum of corrected L-values.
//!
//! An error event collects `d1` mismatched L-values, each scaled by `α`, and
//! `d2` exact ones. With every L-value conditioned on a zero bit the event is
//! `α Σ L̃ + Σ L >= 0`; a sum of exactly zero counts as an error.

use crate::cgf::{
    cgf_mismatched_llr, default_tolerance, find_saddlepoint, Cgf, CgfTerm, GaussianCgf, SumCgf,
    DEFAULT_MAX_ITER,
};
use crate::correction::{CorrectionEstimate, CorrectionFlag, CorrectionMethod, Diagnostics};
use crate::error::{Error, Result};
use crate::llr::{draw_conditioned, ChannelParams, LValueKind};
use crate::rng::{block_rng, blocks, SAMPLE_BLOCK};
use crate::special::{ln_q_function, log_sum_exp};
use rayon::prelude::*;
use std::f64::consts::{LN_2, PI};
use std::fmt;

/// Smallest trial count accepted by [`pep_mc_oracle`].
pub const MC_MIN_TRIALS: usize = 100_000;

/// Upper end of the correction-factor grid searched by [`alpha_grid_2sm`].
pub const ALPHA_GRID_MAX: f64 = 1.5;

/// Coarsest grid step accepted by [`alpha_grid_2sm`].
pub const ALPHA_GRID_MAX_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PepQuery {
    d1: usize,
    d2: usize,
    alpha: f64,
}

impl PepQuery {
    pub fn new(d1: usize, d2: usize, alpha: f64) -> Result<Self> {
        if d1 + d2 == 0 {
            return Err(Error::InvalidArgument(
                "error event needs at least one L-value".into(),
            ));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "correction factor must be positive, got {alpha}"
            )));
        }
        Ok(Self { d1, d2, alpha })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.d1, self.d2, alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PepMethod {
    ExactGauss,
    Exact2sm,
    BhattacharyyaUb,
    Spa,
    McOracle,
}

impl PepMethod {
    pub fn tag(self) -> &'static str {
        match self {
            PepMethod::ExactGauss => "exact_gauss",
            PepMethod::Exact2sm => "exact_2sm",
            PepMethod::BhattacharyyaUb => "bhattacharyya_ub",
            PepMethod::Spa => "spa",
            PepMethod::McOracle => "mc_oracle",
        }
    }
}

impl fmt::Display for PepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PepEstimate {
    pub value: f64,
    /// Natural log of the probability; finite where `value` underflows.
    pub log_value: f64,
    pub method: PepMethod,
    pub stderr: Option<f64>,
    pub saddlepoint: Option<f64>,
    pub samples: Option<usize>,
}

impl PepEstimate {
    fn from_log(log_value: f64, method: PepMethod) -> Self {
        Self {
            value: log_value.exp().min(1.0),
            log_value: log_value.min(0.0),
            method,
            stderr: None,
            saddlepoint: None,
            samples: None,
        }
    }
}

/// Exact PEP when both kinds of L-value are Gaussian: exact ones with law
/// `N(-4γ, 8γ)` and mismatched ones with law `N(-4γ̃, 8γ̃²/γ)`.
pub fn pep_exact_gauss(q: &PepQuery, gamma: f64, gamma_tilde: f64) -> Result<PepEstimate> {
    if !(gamma > 0.0 && gamma_tilde > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "SNR parameters must be positive, got {gamma} and {gamma_tilde}"
        )));
    }
    let (d1, d2, a) = (q.d1 as f64, q.d2 as f64, q.alpha);
    let num = a * d1 * gamma_tilde + d2 * gamma;
    let den = (a * a * d1 * gamma_tilde * gamma_tilde / gamma + d2 * gamma).sqrt();
    Ok(PepEstimate::from_log(
        ln_q_function(2f64.sqrt() * num / den),
        PepMethod::ExactGauss,
    ))
}

/// Means and variance of the two-state model: the mismatched L-value is an
/// equal mixture of `N(-μ̃₁, σ²)` and `N(-μ̃₂, σ²)`, the exact one is
/// `N(-μ₀, σ²)`.
fn two_state_moments(p: &ChannelParams) -> (f64, f64, f64, f64) {
    let (h, g, s2) = (p.h(), p.g(), p.sigma2_z());
    let mu1 = 2.0 * h * (h - g) / s2;
    let mu2 = 2.0 * h * (h + g) / s2;
    let mu0 = 2.0 * h * h / s2;
    (mu1, mu2, mu0, 4.0 * h * h / s2)
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Largest `n` whose binomial coefficients are all exact in an `f64`.
const EXACT_BINOMIAL_MAX: usize = 56;

fn pascal_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    row
}

/// Logarithms of the weights `2^{-d1} C(d1, k)`.
fn ln_two_state_weights(d1: usize) -> Vec<f64> {
    if d1 > EXACT_BINOMIAL_MAX {
        return (0..=d1)
            .map(|k| ln_binomial(d1, k) - d1 as f64 * LN_2)
            .collect();
    }
    pascal_row(d1)
        .iter()
        .map(|c| c.ln() - d1 as f64 * LN_2)
        .collect()
}

/// Weights `2^{-d1} C(d1, k)` of the two-state binomial mixture. Up to
/// `d1 = 56` the coefficients are exact integers, so the weights are exact
/// dyadic rationals and sum to one without rounding.
pub fn two_state_weights(d1: usize) -> Vec<f64> {
    if d1 > EXACT_BINOMIAL_MAX {
        return ln_two_state_weights(d1).into_iter().map(f64::exp).collect();
    }
    let scale = 0.5f64.powi(d1 as i32);
    pascal_row(d1).into_iter().map(|c| c * scale).collect()
}

/// Exact PEP for `d1` mismatched L-values on the interference channel `p`
/// and `d2` exact L-values of the same channel without interference.
pub fn pep_exact_2sm(q: &PepQuery, p: &ChannelParams) -> Result<PepEstimate> {
    if !p.weak_interference() {
        return Err(Error::InvalidChannel(format!(
            "two-state PEP needs g < h (g = {}, h = {})",
            p.g(),
            p.h()
        )));
    }
    let (mu1, mu2, mu0, var) = two_state_moments(p);
    let (d1, d2, a) = (q.d1, q.d2 as f64, q.alpha);
    let spread = var.sqrt() * (d1 as f64 * a * a + d2).sqrt();
    let log_value = log_sum_exp(ln_two_state_weights(d1).into_iter().enumerate().map(
        |(k, ln_w)| {
            let mean = (d1 - k) as f64 * a * mu1 + k as f64 * a * mu2 + d2 * mu0;
            ln_w + ln_q_function(mean / spread)
        },
    ));
    Ok(PepEstimate::from_log(log_value, PepMethod::Exact2sm))
}

fn composite<'a>(terms: &[(&'a dyn Cgf, usize)], alphas: &[f64]) -> Result<SumCgf<'a>> {
    if terms.len() != alphas.len() {
        return Err(Error::LengthMismatch {
            expected: terms.len(),
            got: alphas.len(),
        });
    }
    SumCgf::new(
        terms
            .iter()
            .zip(alphas)
            .map(|(&(cgf, mult), &alpha)| CgfTerm {
                cgf,
                weight: mult as f64,
                alpha,
            })
            .collect(),
    )
}

fn composite_saddlepoint(sum: &SumCgf<'_>) -> Result<f64> {
    let r = find_saddlepoint(
        sum,
        sum.default_seed(),
        default_tolerance(sum),
        DEFAULT_MAX_ITER,
    )?;
    if !r.converged {
        return Err(Error::NotConverged {
            residual: r.residual,
            iterations: r.iterations,
        });
    }
    Ok(r.s_hat)
}

/// Bhattacharyya (Chernoff) bound `e^{κ_Σ(ŝ)}` for the sum of
/// `multiplicity` copies of each L-value, each scaled by its factor.
pub fn pep_bhattacharyya(terms: &[(&dyn Cgf, usize)], alphas: &[f64]) -> Result<PepEstimate> {
    let sum = composite(terms, alphas)?;
    let s = composite_saddlepoint(&sum)?;
    let mut est = PepEstimate::from_log(sum.value(s), PepMethod::BhattacharyyaUb);
    est.saddlepoint = Some(s);
    Ok(est)
}

/// Saddlepoint approximation `e^{κ_Σ(ŝ)} / (|ŝ| sqrt(2π κ''_Σ(ŝ)))`.
pub fn pep_spa(terms: &[(&dyn Cgf, usize)], alphas: &[f64]) -> Result<PepEstimate> {
    let sum = composite(terms, alphas)?;
    let s = composite_saddlepoint(&sum)?;
    let curvature = sum.d2(s);
    if !(curvature > 0.0) {
        return Err(Error::NonPositiveCurvature(curvature));
    }
    let log_value = sum.value(s) - (s.abs() * (2.0 * PI * curvature).sqrt()).ln();
    let mut est = PepEstimate::from_log(log_value, PepMethod::Spa);
    est.saddlepoint = Some(s);
    Ok(est)
}

/// CGFs of the mismatched and the exact L-value in the two-state model.
pub fn two_state_cgfs(p: &ChannelParams) -> (impl Cgf, GaussianCgf) {
    let mu0 = two_state_moments(p).2;
    (
        cgf_mismatched_llr(p),
        GaussianCgf {
            mean: -mu0,
            var: 2.0 * mu0,
        },
    )
}

/// [`pep_bhattacharyya`] for the two-state model of [`pep_exact_2sm`].
pub fn pep_bhattacharyya_2sm(q: &PepQuery, p: &ChannelParams) -> Result<PepEstimate> {
    let (mis, exact) = two_state_cgfs(p);
    pep_bhattacharyya(&[(&mis, q.d1), (&exact, q.d2)], &[q.alpha, 1.0])
}

/// [`pep_spa`] for the two-state model of [`pep_exact_2sm`].
pub fn pep_spa_2sm(q: &PepQuery, p: &ChannelParams) -> Result<PepEstimate> {
    let (mis, exact) = two_state_cgfs(p);
    pep_spa(&[(&mis, q.d1), (&exact, q.d2)], &[q.alpha, 1.0])
}

/// Monte Carlo PEP of the two-state model: `n` trials drawn from the channel
/// itself, in fixed blocks with one random stream per block.
pub fn pep_mc_oracle(q: &PepQuery, p: &ChannelParams, n: usize, seed: u64) -> Result<PepEstimate> {
    if n < MC_MIN_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo PEP needs at least {MC_MIN_TRIALS} trials, got {n}"
        )));
    }
    let clean = p.without_interference();
    let errors: u64 = blocks(n, SAMPLE_BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, len)| {
            let mut rng = block_rng(seed, b);
            let mut count = 0u64;
            for _ in 0..len {
                let mut sum = 0.0;
                for _ in 0..q.d1 {
                    sum += q.alpha * draw_conditioned(&mut rng, p, LValueKind::Mismatched).0;
                }
                for _ in 0..q.d2 {
                    sum += draw_conditioned(&mut rng, &clean, LValueKind::Mismatched).0;
                }
                if sum >= 0.0 {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let value = errors as f64 / n as f64;
    Ok(PepEstimate {
        value,
        log_value: value.ln(),
        method: PepMethod::McOracle,
        stderr: Some((value * (1.0 - value) / n as f64).sqrt()),
        saddlepoint: None,
        samples: Some(n),
    })
}

/// Exhaustive grid minimization of a log-objective over `α = k·step`,
/// `k = 1..`, up to [`ALPHA_GRID_MAX`]. Ties go to the smaller factor.
pub fn alpha_grid_minimize<F>(step: f64, mut objective: F) -> Result<CorrectionEstimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(step > 0.0 && step <= ALPHA_GRID_MAX_STEP) {
        return Err(Error::InvalidArgument(format!(
            "grid step must lie in (0, {ALPHA_GRID_MAX_STEP}], got {step}"
        )));
    }
    let points = (ALPHA_GRID_MAX / step).round() as usize;
    let mut best = (f64::NAN, f64::INFINITY);
    let mut worst = f64::NEG_INFINITY;
    for k in 1..=points {
        let alpha = k as f64 * step;
        let v = objective(alpha)?;
        if v < best.1 {
            best = (alpha, v);
        }
        worst = worst.max(v);
    }
    let flat = (worst - best.1).abs() <= 1e-12 * best.1.abs().max(1.0);
    Ok(CorrectionEstimate {
        alpha: if flat { step } else { best.0 },
        method: CorrectionMethod::Grid2sm,
        diagnostics: Diagnostics {
            iterations: Some(points),
            residual: Some(best.1),
            flag: flat.then_some(CorrectionFlag::AlphaIndependent),
            ..Diagnostics::default()
        },
    })
}

/// Correction factor minimizing [`pep_exact_2sm`] on a grid of the given
/// step; a flat objective is flagged [`CorrectionFlag::AlphaIndependent`].
pub fn alpha_grid_2sm(
    p: &ChannelParams,
    d1: usize,
    d2: usize,
    step: f64,
) -> Result<CorrectionEstimate> {
    let q = PepQuery::new(d1, d2, 1.0)?;
    alpha_grid_minimize(step, |a| Ok(pep_exact_2sm(&q.with_alpha(a)?, p)?.log_value))
}

/// Correction factor minimizing the two-state Bhattacharyya bound on a grid.
pub fn alpha_grid_bhattacharyya(
    p: &ChannelParams,
    d1: usize,
    d2: usize,
    step: f64,
) -> Result<CorrectionEstimate> {
    let q = PepQuery::new(d1, d2, 1.0)?;
    alpha_grid_minimize(step, |a| {
        Ok(pep_bhattacharyya_2sm(&q.with_alpha(a)?, p)?.log_value)
    })
}

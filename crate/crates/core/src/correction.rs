//! Correction-factor estimators for mismatched L-values.
//!
//! All estimators return a factor `α` that multiplies the interference-blind
//! L-value. The proposed rule is `α = 2|ŝ|` with `ŝ` the saddlepoint of the
//! L-value's CGF; the others (GMI, weighted least squares, Gaussian moments
//! and the two closed-form asymptotes) are kept for comparison.

use crate::cgf::{cgf_mismatched_llr, solve, Cgf, MixtureCgf};
use crate::error::{Error, Result};
use crate::llr::{ChannelParams, LValueBatch};
use crate::quadrature::{GaussianRule, PanelRule, DEFAULT_ORDER};
use crate::special::{log_sum_exp, q_function, sigmoid};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Bracket of the GMI stationarity root. The upper end exceeds one so that an
/// already matched metric (`α = 1`) is an interior solution.
pub const GMI_ALPHA_MIN: f64 = 1e-3;
pub const GMI_ALPHA_MAX: f64 = 2.0;

/// Minimum Gauss–Hermite order accepted by [`alpha_gmi`].
pub const GMI_MIN_ORDER: usize = 20;

/// Minimum batch size accepted by [`alpha_gmi_mc`].
pub const GMI_MC_MIN_SAMPLES: usize = 10_000;

/// Instantaneous SNR above which the quadrature GMI estimate is replaced by
/// the saddlepoint factor.
pub const GMI_SNR_CAP_DB: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrectionMethod {
    Saddlepoint,
    Gmi,
    Wlsf,
    GaussMoment,
    LowSnr,
    HighSnr,
    Grid2sm,
}

impl CorrectionMethod {
    pub const ALL: [CorrectionMethod; 7] = [
        CorrectionMethod::Saddlepoint,
        CorrectionMethod::Gmi,
        CorrectionMethod::Wlsf,
        CorrectionMethod::GaussMoment,
        CorrectionMethod::LowSnr,
        CorrectionMethod::HighSnr,
        CorrectionMethod::Grid2sm,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            CorrectionMethod::Saddlepoint => "saddlepoint",
            CorrectionMethod::Gmi => "gmi",
            CorrectionMethod::Wlsf => "wlsf",
            CorrectionMethod::GaussMoment => "gauss_moment",
            CorrectionMethod::LowSnr => "low_snr",
            CorrectionMethod::HighSnr => "high_snr",
            CorrectionMethod::Grid2sm => "grid_2sm",
        }
    }
}

impl fmt::Display for CorrectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CorrectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CorrectionMethod::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown correction method `{s}`")))
    }
}

/// Conditions worth surfacing next to an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionFlag {
    /// The objective does not depend on `α`.
    AlphaIndependent,
    /// The requested estimator was replaced by the saddlepoint factor.
    SaddlepointFallback,
}

impl CorrectionFlag {
    pub fn tag(self) -> &'static str {
        match self {
            CorrectionFlag::AlphaIndependent => "alpha_independent",
            CorrectionFlag::SaddlepointFallback => "saddlepoint_fallback",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub iterations: Option<usize>,
    pub quad_order: Option<usize>,
    pub residual: Option<f64>,
    pub stderr: Option<f64>,
    pub samples: Option<usize>,
    pub flag: Option<CorrectionFlag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionEstimate {
    pub alpha: f64,
    pub method: CorrectionMethod,
    pub diagnostics: Diagnostics,
}

impl CorrectionEstimate {
    fn new(alpha: f64, method: CorrectionMethod) -> Self {
        Self {
            alpha,
            method,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Gaussian mixture with a shared variance, used as the conditional density
/// `p(l|0)` of an L-value.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePdf {
    means: Vec<f64>,
    weights: Vec<f64>,
    sigma2: f64,
}

impl MixturePdf {
    pub fn new(means: Vec<f64>, weights: Vec<f64>, sigma2: f64) -> Result<Self> {
        if means.is_empty() || means.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "mixture needs matching non-empty means and weights ({} vs {})",
                means.len(),
                weights.len()
            )));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mixture variance {sigma2} must be positive"
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument(
                "mixture weights must be positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(Self {
            means,
            weights,
            sigma2,
        })
    }

    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        Self::new(vec![mean], vec![1.0], var)
    }

    /// Density of the interference-blind L-value `2hy/σ_z²` given a zero bit:
    /// an equal mixture of `N(-2h(h∓g)/σ_z², 4h²/σ_z²)`.
    pub fn interference(p: &ChannelParams) -> Self {
        let (h, g, s2) = (p.h(), p.g(), p.sigma2_z());
        Self {
            means: vec![-2.0 * h * (h - g) / s2, -2.0 * h * (h + g) / s2],
            weights: vec![0.5, 0.5],
            sigma2: 4.0 * h * h / s2,
        }
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.sigma2
            + self
                .weights
                .iter()
                .zip(&self.means)
                .map(|(w, mu)| w * (mu - m) * (mu - m))
                .sum::<f64>()
    }

    /// Log-density up to the shared normalizing constant.
    fn ln_kernel(&self, l: f64) -> f64 {
        log_sum_exp(
            self.weights
                .iter()
                .zip(&self.means)
                .map(|(w, m)| w.ln() - (l - m) * (l - m) / (2.0 * self.sigma2)),
        )
    }

    /// Optimal correction function `log p(-l|0) / p(l|0)`.
    pub fn correction_fn(&self, l: f64) -> f64 {
        self.ln_kernel(-l) - self.ln_kernel(l)
    }

    /// `E[f(L)]`, each component integrated by the given rule.
    pub fn expect<F: FnMut(f64) -> f64>(&self, rule: &GaussianRule, mut f: F) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * rule.expect(*m, self.sigma2, &mut f))
            .sum()
    }

    pub fn cgf(&self) -> MixtureCgf {
        MixtureCgf::new(&self.means, &self.weights, self.sigma2)
    }
}

/// `α = 2|ŝ|` where `ŝ` is the saddlepoint of the L-value CGF.
pub fn alpha_saddlepoint<C: Cgf + ?Sized>(cgf: &C) -> Result<CorrectionEstimate> {
    let r = solve(cgf)?;
    if !r.converged {
        return Err(Error::NotConverged {
            residual: r.residual,
            iterations: r.iterations,
        });
    }
    let mut est = CorrectionEstimate::new(2.0 * r.s_hat.abs(), CorrectionMethod::Saddlepoint);
    est.diagnostics.iterations = Some(r.iterations);
    est.diagnostics.residual = Some(r.residual);
    Ok(est)
}

/// Saddlepoint factor of the interference-blind L-value on channel `p`.
pub fn alpha_saddlepoint_channel(p: &ChannelParams) -> Result<CorrectionEstimate> {
    alpha_saddlepoint(&cgf_mismatched_llr(p))
}

/// Root of `f` on `[lo, hi]` given a sign change, by bisection.
fn bisect<F: FnMut(f64) -> f64>(
    what: &'static str,
    mut f: F,
    lo: f64,
    hi: f64,
) -> Result<(f64, usize)> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if !(fa.signum() != fb.signum() && fa.is_finite() && fb.is_finite()) || fa == 0.0 || fb == 0.0 {
        if fa == 0.0 {
            return Ok((a, 0));
        }
        if fb == 0.0 {
            return Ok((b, 0));
        }
        return Err(Error::NoRoot {
            what,
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let neg_at_a = fa < 0.0;
    let mut iterations = 0;
    while b - a > 1e-14 * b.abs().max(1.0) && iterations < 200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok((mid, iterations + 1));
        }
        if (fm < 0.0) == neg_at_a {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    Ok((0.5 * (a + b), iterations))
}

/// `E[L σ(αL)]` for `L ~ N(mean, var)`.
///
/// The integrand is split as `l·1{l>0} - |l|·σ(-α|l|)`: the first part has a
/// closed form, the second is smooth on each side of zero and decays like
/// `e^{-α|l|}`, so composite Gauss–Legendre on a few panels resolves it even
/// when `σ(αl)` varies much faster than the Gaussian.
fn gmi_gaussian_term(rule: &PanelRule, mean: f64, var: f64, alpha: f64) -> f64 {
    let sd = var.sqrt();
    let z = mean / sd;
    let step = mean * q_function(-z) + sd * (-0.5 * z * z).exp() / (2.0 * PI).sqrt();

    let reach = 40.0 / alpha;
    let lo = (mean - 12.0 * sd).max(-reach);
    let hi = (mean + 12.0 * sd).min(reach);
    let width = sd.min(1.0 / alpha);
    let density = |l: f64| (-(l - mean) * (l - mean) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
    let remainder = |l: f64| -l.abs() * sigmoid(-alpha * l.abs()) * density(l);
    let mut tail = 0.0;
    for (a, b) in [(lo, hi.min(0.0)), (lo.max(0.0), hi)] {
        if b > a {
            let panels = ((b - a) / width).ceil().min(1000.0) as usize;
            tail += rule.integrate(a, b, panels, remainder);
        }
    }
    step + tail
}

/// GMI-maximizing factor: the root in `α` of `E[L σ(αL)] = 0`.
///
/// `quad_order` is the number of Gauss–Legendre nodes per panel.
pub fn alpha_gmi(pdf: &MixturePdf, quad_order: usize) -> Result<CorrectionEstimate> {
    if quad_order < GMI_MIN_ORDER {
        return Err(Error::InvalidArgument(format!(
            "GMI quadrature order must be at least {GMI_MIN_ORDER}, got {quad_order}"
        )));
    }
    let rule = PanelRule::new(quad_order)?;
    let stationarity = |alpha: f64| {
        pdf.weights
            .iter()
            .zip(&pdf.means)
            .map(|(w, m)| w * gmi_gaussian_term(&rule, *m, pdf.sigma2, alpha))
            .sum::<f64>()
    };
    let (alpha, iterations) = bisect("GMI", stationarity, GMI_ALPHA_MIN, GMI_ALPHA_MAX)?;
    let mut est = CorrectionEstimate::new(alpha, CorrectionMethod::Gmi);
    est.diagnostics.quad_order = Some(quad_order);
    est.diagnostics.iterations = Some(iterations);
    est.diagnostics.residual = Some(stationarity(alpha).abs());
    Ok(est)
}

/// Sample-mean version of the GMI stationarity condition.
///
/// The reported standard error is the delta-method value
/// `sd(L σ(αL)) / (sqrt(n) · |d/dα E[L σ(αL)]|)`.
pub fn alpha_gmi_mc(batch: &LValueBatch) -> Result<CorrectionEstimate> {
    let n = batch.len();
    if n < GMI_MC_MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo GMI needs at least {GMI_MC_MIN_SAMPLES} samples, got {n}"
        )));
    }
    let xs = &batch.samples;
    let mean_of = |f: &dyn Fn(f64) -> f64| xs.iter().map(|&l| f(l)).sum::<f64>() / n as f64;
    let (alpha, iterations) = bisect(
        "Monte Carlo GMI",
        |a| mean_of(&|l| l * sigmoid(a * l)),
        GMI_ALPHA_MIN,
        GMI_ALPHA_MAX,
    )?;
    let m1 = mean_of(&|l| l * sigmoid(alpha * l));
    let m2 = mean_of(&|l| (l * sigmoid(alpha * l)).powi(2));
    let slope = mean_of(&|l| {
        let s = sigmoid(alpha * l);
        l * l * s * (1.0 - s)
    });
    let mut est = CorrectionEstimate::new(alpha, CorrectionMethod::Gmi);
    est.diagnostics.iterations = Some(iterations);
    est.diagnostics.samples = Some(n);
    est.diagnostics.residual = Some(m1.abs());
    est.diagnostics.stderr = Some(((m2 - m1 * m1).max(0.0) / n as f64).sqrt() / slope);
    Ok(est)
}

/// Weighted least-squares fit of `α l` to the optimal correction function,
/// `α = E[L f(L)] / E[L²]`.
pub fn alpha_wlsf(pdf: &MixturePdf) -> Result<CorrectionEstimate> {
    alpha_wlsf_with_order(pdf, DEFAULT_ORDER)
}

pub fn alpha_wlsf_with_order(pdf: &MixturePdf, quad_order: usize) -> Result<CorrectionEstimate> {
    let rule = GaussianRule::new(quad_order)?;
    let cross = pdf.expect(&rule, |l| l * pdf.correction_fn(l));
    let energy = pdf.expect(&rule, |l| l * l);
    let mut est = CorrectionEstimate::new(cross / energy, CorrectionMethod::Wlsf);
    est.diagnostics.quad_order = Some(quad_order);
    Ok(est)
}

/// Gaussian-model factor `2·(-mean)/variance` from analytic mixture moments.
pub fn alpha_gauss_moment_pdf(pdf: &MixturePdf) -> Result<CorrectionEstimate> {
    gauss_moment(pdf.mean(), pdf.variance(), None)
}

/// Gaussian-model factor from sample moments.
pub fn alpha_gauss_moment_batch(batch: &LValueBatch) -> Result<CorrectionEstimate> {
    if batch.len() < 2 {
        return Err(Error::Degenerate(
            "need at least two samples for a variance".into(),
        ));
    }
    gauss_moment(batch.mean(), batch.variance(), Some(batch.len()))
}

fn gauss_moment(mean: f64, var: f64, samples: Option<usize>) -> Result<CorrectionEstimate> {
    if !(var > 0.0) {
        return Err(Error::Degenerate(format!("L-value variance is {var}")));
    }
    let mut est = CorrectionEstimate::new(-2.0 * mean / var, CorrectionMethod::GaussMoment);
    est.diagnostics.samples = samples;
    Ok(est)
}

/// Low-SNR asymptote `σ_z² / (σ_z² + g²)`.
pub fn alpha_low_snr(p: &ChannelParams) -> CorrectionEstimate {
    CorrectionEstimate::new(
        p.sigma2_z() / p.noise_plus_interference(),
        CorrectionMethod::LowSnr,
    )
}

/// High-SNR asymptote `1 - g/h`.
pub fn alpha_high_snr(p: &ChannelParams) -> Result<CorrectionEstimate> {
    if !p.weak_interference() {
        return Err(Error::InvalidChannel(format!(
            "high-SNR factor needs g < h (g = {}, h = {})",
            p.g(),
            p.h()
        )));
    }
    Ok(CorrectionEstimate::new(
        1.0 - p.g() / p.h(),
        CorrectionMethod::HighSnr,
    ))
}

/// GMI factor for the interference channel, guarded at high SNR: above
/// [`GMI_SNR_CAP_DB`] the saddlepoint factor is returned with
/// [`CorrectionFlag::SaddlepointFallback`].
pub fn alpha_gmi_channel(p: &ChannelParams, quad_order: usize) -> Result<CorrectionEstimate> {
    if p.snr_db() > GMI_SNR_CAP_DB {
        let mut est = alpha_saddlepoint_channel(p)?;
        est.method = CorrectionMethod::Gmi;
        est.diagnostics.flag = Some(CorrectionFlag::SaddlepointFallback);
        return Ok(est);
    }
    alpha_gmi(&MixturePdf::interference(p), quad_order)
}

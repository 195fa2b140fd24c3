//! Cumulant generating functions and the saddlepoint solver.
//!
//! A [`Cgf`] exposes `κ(s)`, `κ'(s)`, `κ''(s)` on a real interval. The
//! saddlepoint is the root of `κ'`; for L-values conditioned on a zero bit it
//! is positive, and for exactly computed L-values it equals one half.

use crate::error::{Error, Result};
use crate::llr::{ChannelParams, LValueBatch};
use crate::special::{ln_cosh, log_sum_exp, sech2};

/// Iteration cap used by [`solve`].
pub const DEFAULT_MAX_ITER: usize = 200;

/// Relative stopping tolerance: `|κ'(ŝ)| <= SOLVER_RTOL * gradient_scale`.
pub const SOLVER_RTOL: f64 = 1e-10;

/// Minimum tilted effective sample size inside an empirical CGF's domain.
pub const EMPIRICAL_MIN_ESS: f64 = 30.0;

pub trait Cgf: Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn d1(&self, s: f64) -> f64;
    fn d2(&self, s: f64) -> f64;

    /// Closed interval on which the three functions are finite and trusted.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Interval known to bracket the saddlepoint, if the model provides one.
    fn bracket_hint(&self) -> Option<(f64, f64)> {
        None
    }

    /// Starting point for Newton iterations.
    fn default_seed(&self) -> f64 {
        0.5
    }

    /// Typical magnitude of `κ'`; sets the scale of the stopping tolerance.
    fn gradient_scale(&self) -> f64 {
        1.0
    }
}

impl<C: Cgf + ?Sized> Cgf for &C {
    fn value(&self, s: f64) -> f64 {
        (**self).value(s)
    }
    fn d1(&self, s: f64) -> f64 {
        (**self).d1(s)
    }
    fn d2(&self, s: f64) -> f64 {
        (**self).d2(s)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn bracket_hint(&self) -> Option<(f64, f64)> {
        (**self).bracket_hint()
    }
    fn default_seed(&self) -> f64 {
        (**self).default_seed()
    }
    fn gradient_scale(&self) -> f64 {
        (**self).gradient_scale()
    }
}

impl<C: Cgf + ?Sized> Cgf for Box<C> {
    fn value(&self, s: f64) -> f64 {
        (**self).value(s)
    }
    fn d1(&self, s: f64) -> f64 {
        (**self).d1(s)
    }
    fn d2(&self, s: f64) -> f64 {
        (**self).d2(s)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn bracket_hint(&self) -> Option<(f64, f64)> {
        (**self).bracket_hint()
    }
    fn default_seed(&self) -> f64 {
        (**self).default_seed()
    }
    fn gradient_scale(&self) -> f64 {
        (**self).gradient_scale()
    }
}

/// CGF of a Gaussian variable, `κ(s) = mean·s + var·s²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCgf {
    pub mean: f64,
    pub var: f64,
}

impl GaussianCgf {
    pub fn new(mean: f64, var: f64) -> Result<Self> {
        if !(var > 0.0 && var.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Gaussian CGF needs finite mean and positive variance, got ({mean}, {var})"
            )));
        }
        Ok(Self { mean, var })
    }

    /// Exact BPSK L-values at SNR `gamma`: `N(-4γ, 8γ)`.
    pub fn matched_bpsk(gamma: f64) -> Result<Self> {
        Self::new(-4.0 * gamma, 8.0 * gamma)
    }

    /// BPSK L-values computed with a wrong SNR `gamma_tilde`: `N(-4γ̃, 8γ̃²/γ)`.
    pub fn mismatched_bpsk(gamma: f64, gamma_tilde: f64) -> Result<Self> {
        Self::new(-4.0 * gamma_tilde, 8.0 * gamma_tilde * gamma_tilde / gamma)
    }
}

impl Cgf for GaussianCgf {
    fn value(&self, s: f64) -> f64 {
        self.mean * s + 0.5 * self.var * s * s
    }
    fn d1(&self, s: f64) -> f64 {
        self.mean + self.var * s
    }
    fn d2(&self, _s: f64) -> f64 {
        self.var
    }
    fn default_seed(&self) -> f64 {
        0.0
    }
    fn gradient_scale(&self) -> f64 {
        self.mean.abs() + self.var
    }
}

/// CGF of a Gaussian mixture with a shared variance.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCgf {
    means: Vec<f64>,
    ln_weights: Vec<f64>,
    var: f64,
}

impl MixtureCgf {
    pub fn new(means: &[f64], weights: &[f64], var: f64) -> Self {
        Self {
            means: means.to_vec(),
            ln_weights: weights.iter().map(|w| w.ln()).collect(),
            var,
        }
    }

    /// Posterior component weights under exponential tilting by `s`.
    fn tilted(&self, s: f64) -> Vec<f64> {
        let logits: Vec<f64> = self
            .means
            .iter()
            .zip(&self.ln_weights)
            .map(|(m, lw)| lw + m * s)
            .collect();
        let norm = log_sum_exp(logits.iter().copied());
        logits.iter().map(|x| (x - norm).exp()).collect()
    }

    fn moments(&self) -> (f64, f64) {
        let w = self.tilted(0.0);
        let m1: f64 = w.iter().zip(&self.means).map(|(w, m)| w * m).sum();
        let m2: f64 = w.iter().zip(&self.means).map(|(w, m)| w * m * m).sum();
        (m1, self.var + m2 - m1 * m1)
    }
}

impl Cgf for MixtureCgf {
    fn value(&self, s: f64) -> f64 {
        0.5 * self.var * s * s
            + log_sum_exp(
                self.means
                    .iter()
                    .zip(&self.ln_weights)
                    .map(|(m, lw)| lw + m * s),
            )
    }
    fn d1(&self, s: f64) -> f64 {
        let w = self.tilted(s);
        self.var * s + w.iter().zip(&self.means).map(|(w, m)| w * m).sum::<f64>()
    }
    fn d2(&self, s: f64) -> f64 {
        let w = self.tilted(s);
        let m1: f64 = w.iter().zip(&self.means).map(|(w, m)| w * m).sum();
        let m2: f64 = w.iter().zip(&self.means).map(|(w, m)| w * m * m).sum();
        self.var + (m2 - m1 * m1).max(0.0)
    }
    fn default_seed(&self) -> f64 {
        let (mean, var) = self.moments();
        -mean / var
    }
    fn gradient_scale(&self) -> f64 {
        let (mean, var) = self.moments();
        mean.abs() + var
    }
}

/// CGF of the channel observation `Y` given a zero bit:
/// `κ_Y(s) = -h s + σ_z² s²/2 + log cosh(g s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationCgf {
    params: ChannelParams,
}

impl ObservationCgf {
    pub fn params(&self) -> &ChannelParams {
        &self.params
    }
}

impl Cgf for ObservationCgf {
    fn value(&self, s: f64) -> f64 {
        let p = &self.params;
        -p.h() * s + 0.5 * p.sigma2_z() * s * s + ln_cosh(p.g() * s)
    }
    fn d1(&self, s: f64) -> f64 {
        let p = &self.params;
        -p.h() + p.sigma2_z() * s + p.g() * (p.g() * s).tanh()
    }
    fn d2(&self, s: f64) -> f64 {
        let p = &self.params;
        p.sigma2_z() + p.g() * p.g() * sech2(p.g() * s)
    }
    fn bracket_hint(&self) -> Option<(f64, f64)> {
        let p = &self.params;
        let s0 = saddle_seed_low_snr(p);
        let lo = saddle_seed_high_snr(p).map_or(s0, |sinf| sinf.min(s0));
        Some((lo * 1e-3, p.h() / p.sigma2_z()))
    }
    fn default_seed(&self) -> f64 {
        let p = &self.params;
        let s0 = saddle_seed_low_snr(p);
        saddle_seed_high_snr(p).map_or(s0, |sinf| sinf.max(s0))
    }
    fn gradient_scale(&self) -> f64 {
        self.params.h() + self.params.sigma2_z()
    }
}

/// `s ↦ κ(c·s)`: the CGF of `c·X` given the CGF of `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled<C> {
    inner: C,
    factor: f64,
}

impl<C: Cgf> Scaled<C> {
    pub fn new(inner: C, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale factor {factor} must be finite and nonzero"
            )));
        }
        Ok(Self { inner, factor })
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    fn map_interval(&self, (lo, hi): (f64, f64)) -> (f64, f64) {
        let (a, b) = (lo / self.factor, hi / self.factor);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

impl<C: Cgf> Cgf for Scaled<C> {
    fn value(&self, s: f64) -> f64 {
        self.inner.value(self.factor * s)
    }
    fn d1(&self, s: f64) -> f64 {
        self.factor * self.inner.d1(self.factor * s)
    }
    fn d2(&self, s: f64) -> f64 {
        self.factor * self.factor * self.inner.d2(self.factor * s)
    }
    fn domain(&self) -> (f64, f64) {
        self.map_interval(self.inner.domain())
    }
    fn bracket_hint(&self) -> Option<(f64, f64)> {
        self.inner.bracket_hint().map(|b| self.map_interval(b))
    }
    fn default_seed(&self) -> f64 {
        self.inner.default_seed() / self.factor
    }
    fn gradient_scale(&self) -> f64 {
        self.factor.abs() * self.inner.gradient_scale()
    }
}

/// Sample-based CGF `κ̂(s) = log mean e^{s l}` with tilted-moment derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCgf {
    samples: Vec<f64>,
    domain: (f64, f64),
    mean: f64,
    var: f64,
}

impl EmpiricalCgf {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "empirical CGF needs at least one sample".into(),
            ));
        }
        if samples.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument(
                "empirical CGF needs finite samples".into(),
            ));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
        let mut cgf = Self {
            samples,
            domain: (0.0, 0.0),
            mean,
            var,
        };
        cgf.domain = (cgf.ess_edge(-1.0), cgf.ess_edge(1.0));
        Ok(cgf)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Tilted effective sample size `(Σ e^{sl})² / Σ e^{2sl}`.
    pub fn effective_sample_size(&self, s: f64) -> f64 {
        let a = log_sum_exp(self.samples.iter().map(|l| s * l));
        let b = log_sum_exp(self.samples.iter().map(|l| 2.0 * s * l));
        (2.0 * a - b).exp()
    }

    /// Furthest `s` in direction `dir` with ESS at least [`EMPIRICAL_MIN_ESS`].
    fn ess_edge(&self, dir: f64) -> f64 {
        if self.effective_sample_size(0.0) < EMPIRICAL_MIN_ESS {
            return 0.0;
        }
        let unit = 1.0 / self.var.sqrt().max(self.mean.abs()).max(1e-12);
        let mut good = 0.0;
        let mut step = 1e-3 * unit;
        let mut bad = None;
        for _ in 0..200 {
            let s = dir * (good + step);
            if self.effective_sample_size(s) >= EMPIRICAL_MIN_ESS {
                good += step;
                step *= 2.0;
            } else {
                bad = Some(good + step);
                break;
            }
        }
        let Some(mut bad) = bad else {
            return dir * good;
        };
        for _ in 0..60 {
            let mid = 0.5 * (good + bad);
            if self.effective_sample_size(dir * mid) >= EMPIRICAL_MIN_ESS {
                good = mid;
            } else {
                bad = mid;
            }
        }
        dir * good
    }

    /// Returns `(log Σ e^{sl}, tilted mean, tilted variance)`.
    fn tilted(&self, s: f64) -> (f64, f64, f64) {
        let m = self
            .samples
            .iter()
            .map(|l| s * l)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut t1 = 0.0;
        for &l in &self.samples {
            let w = (s * l - m).exp();
            z += w;
            t1 += w * l;
        }
        let mean = t1 / z;
        let mut t2 = 0.0;
        for &l in &self.samples {
            let w = (s * l - m).exp();
            t2 += w * (l - mean) * (l - mean);
        }
        (m + z.ln(), mean, t2 / z)
    }
}

impl Cgf for EmpiricalCgf {
    fn value(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.tilted(s).0 - (self.samples.len() as f64).ln()
    }
    fn d1(&self, s: f64) -> f64 {
        self.tilted(s).1
    }
    fn d2(&self, s: f64) -> f64 {
        self.tilted(s).2
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn default_seed(&self) -> f64 {
        let (lo, hi) = self.domain;
        if self.var > 0.0 {
            (-self.mean / self.var).clamp(lo, hi)
        } else {
            0.0
        }
    }
    fn gradient_scale(&self) -> f64 {
        self.samples.iter().map(|l| l.abs()).sum::<f64>() / self.samples.len() as f64
    }
}

/// One term `weight · κ(alpha · s)` of a composite CGF.
pub struct CgfTerm<'a> {
    pub cgf: &'a dyn Cgf,
    pub weight: f64,
    pub alpha: f64,
}

/// CGF of a weighted sum of independent scaled variables,
/// `κ_Σ(s) = Σ weight_i κ_i(alpha_i s)`.
pub struct SumCgf<'a> {
    terms: Vec<CgfTerm<'a>>,
}

impl<'a> SumCgf<'a> {
    pub fn new(terms: Vec<CgfTerm<'a>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument(
                "composite CGF needs at least one term".into(),
            ));
        }
        for t in &terms {
            if !(t.alpha > 0.0 && t.alpha.is_finite()) || !(t.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "composite CGF term needs alpha > 0 and weight >= 0, got ({}, {})",
                    t.alpha, t.weight
                )));
            }
        }
        if terms.iter().all(|t| t.weight == 0.0) {
            return Err(Error::InvalidArgument(
                "composite CGF has zero total weight".into(),
            ));
        }
        Ok(Self { terms })
    }

    fn active(&self) -> impl Iterator<Item = &CgfTerm<'a>> {
        self.terms.iter().filter(|t| t.weight > 0.0)
    }
}

impl Cgf for SumCgf<'_> {
    fn value(&self, s: f64) -> f64 {
        self.active()
            .map(|t| t.weight * t.cgf.value(t.alpha * s))
            .sum()
    }
    fn d1(&self, s: f64) -> f64 {
        self.active()
            .map(|t| t.weight * t.alpha * t.cgf.d1(t.alpha * s))
            .sum()
    }
    fn d2(&self, s: f64) -> f64 {
        self.active()
            .map(|t| t.weight * t.alpha * t.alpha * t.cgf.d2(t.alpha * s))
            .sum()
    }
    fn domain(&self) -> (f64, f64) {
        self.active()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), t| {
                let (a, b) = t.cgf.domain();
                (lo.max(a / t.alpha), hi.min(b / t.alpha))
            })
    }
    fn default_seed(&self) -> f64 {
        let total: f64 = self.active().map(|t| t.weight).sum();
        self.active()
            .map(|t| t.weight * t.cgf.default_seed() / t.alpha)
            .sum::<f64>()
            / total
    }
    fn gradient_scale(&self) -> f64 {
        self.active()
            .map(|t| t.weight * t.alpha * t.cgf.gradient_scale())
            .sum()
    }
}

/// Outcome of a saddlepoint search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlepointResult {
    pub s_hat: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `|κ'(ŝ)|`
    pub residual: f64,
}

/// `κ_Y` for the interference channel.
pub fn cgf_observation(p: &ChannelParams) -> ObservationCgf {
    ObservationCgf { params: *p }
}

/// CGF of the interference-blind L-value: `κ_L̃(s) = κ_Y(2h/σ_z² · s)`.
pub fn cgf_mismatched_llr(p: &ChannelParams) -> Scaled<ObservationCgf> {
    Scaled {
        inner: cgf_observation(p),
        factor: 2.0 * p.h() / p.sigma2_z(),
    }
}

pub fn cgf_empirical(batch: &LValueBatch) -> Result<EmpiricalCgf> {
    EmpiricalCgf::new(batch.samples.clone())
}

/// Saddlepoint under the linearization `tanh x ≈ x`: `h / (σ_z² + g²)`.
pub fn saddle_seed_low_snr(p: &ChannelParams) -> f64 {
    p.h() / p.noise_plus_interference()
}

/// Saddlepoint under the saturation `tanh ∞ = 1`: `(h - g) / σ_z²`.
pub fn saddle_seed_high_snr(p: &ChannelParams) -> Result<f64> {
    if !p.weak_interference() {
        return Err(Error::InvalidChannel(format!(
            "high-SNR seed needs g < h (g = {}, h = {})",
            p.g(),
            p.h()
        )));
    }
    Ok((p.h() - p.g()) / p.sigma2_z())
}

/// Stopping tolerance [`solve`] uses for `cgf`.
pub fn default_tolerance<C: Cgf + ?Sized>(cgf: &C) -> f64 {
    SOLVER_RTOL * cgf.gradient_scale()
}

/// Saddlepoint with the CGF's own seed and the scale-aware tolerance.
pub fn solve<C: Cgf + ?Sized>(cgf: &C) -> Result<SaddlepointResult> {
    find_saddlepoint(
        cgf,
        cgf.default_seed(),
        default_tolerance(cgf),
        DEFAULT_MAX_ITER,
    )
}

/// Safeguarded Newton iteration for `κ'(s) = 0`.
///
/// Each step is the Newton update `s - κ'/κ''`; it is replaced by bisection of
/// the current sign bracket whenever it leaves the bracket or fails to shrink
/// `|κ'|`.
pub fn find_saddlepoint<C: Cgf + ?Sized>(
    cgf: &C,
    seed: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SaddlepointResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (mut lo, mut hi) = sign_bracket(cgf, seed)?;
    let mut x = if seed.is_finite() {
        seed.clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    };
    let mut fx = cgf.d1(x);
    let mut iterations = 0;
    while iterations < max_iter && fx.abs() > tol {
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        let curvature = cgf.d2(x);
        let newton = x - fx / curvature;
        let (mut next, mut fnext);
        if curvature > 0.0 && newton > lo && newton < hi {
            next = newton;
            fnext = cgf.d1(next);
            if fnext.abs() >= fx.abs() {
                next = 0.5 * (lo + hi);
                fnext = cgf.d1(next);
            }
        } else {
            next = 0.5 * (lo + hi);
            fnext = cgf.d1(next);
        }
        x = next;
        fx = fnext;
        iterations += 1;
    }
    Ok(SaddlepointResult {
        s_hat: x,
        iterations,
        converged: fx.abs() <= tol,
        residual: fx.abs(),
    })
}

/// Finds `[lo, hi]` inside the domain with `κ'(lo) < 0 <= κ'(hi)`.
fn sign_bracket<C: Cgf + ?Sized>(cgf: &C, seed: f64) -> Result<(f64, f64)> {
    if let Some((a, b)) = cgf.bracket_hint() {
        if cgf.d1(a) < 0.0 && cgf.d1(b) >= 0.0 {
            return Ok((a, b));
        }
    }
    let (dlo, dhi) = cgf.domain();
    let x0 = if seed.is_finite() && seed >= dlo && seed <= dhi {
        seed
    } else if dlo <= 0.0 && dhi >= 0.0 {
        0.0
    } else {
        0.5 * (dlo + dhi)
    };
    let f0 = cgf.d1(x0);
    if f0 == 0.0 {
        return Ok((x0, x0));
    }
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let edge = if dir > 0.0 { dhi } else { dlo };
    let mut step = x0.abs().max(1e-3);
    let mut prev = x0;
    for _ in 0..2000 {
        let cand = if dir > 0.0 {
            (prev + step).min(edge)
        } else {
            (prev - step).max(edge)
        };
        let fc = cgf.d1(cand);
        let crossed = if dir > 0.0 { fc >= 0.0 } else { fc < 0.0 };
        if crossed {
            return Ok(if dir > 0.0 {
                (prev, cand)
            } else {
                (cand, prev)
            });
        }
        if cand == edge || !cand.is_finite() {
            return Err(if dir > 0.0 {
                Error::NoSaddlepoint {
                    lo: x0,
                    hi: cand,
                    d_lo: f0,
                    d_hi: fc,
                }
            } else {
                Error::NoSaddlepoint {
                    lo: cand,
                    hi: x0,
                    d_lo: fc,
                    d_hi: f0,
                }
            });
        }
        prev = cand;
        step *= 2.0;
    }
    Err(Error::NoSaddlepoint {
        lo: x0.min(prev),
        hi: x0.max(prev),
        d_lo: f0,
        d_hi: cgf.d1(prev),
    })
}

/// Plain Newton with a fixed number of iterations and no safeguards.
pub fn newton_fixed<C: Cgf + ?Sized>(cgf: &C, seed: f64, iterations: usize) -> f64 {
    (0..iterations).fold(seed, |s, _| s - cgf.d1(s) / cgf.d2(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llr::LValueKind;
    use approx::assert_relative_eq;

    fn p(h: f64, g: f64, s2: f64) -> ChannelParams {
        ChannelParams::new(h, g, s2).unwrap()
    }

    #[test]
    fn observation_cgf_values() {
        let k = cgf_observation(&p(1.0, 0.0, 0.5));
        assert_eq!(k.value(0.0), 0.0);
        assert_relative_eq!(k.value(1.0), -0.75, max_relative = 1e-15);
    }

    #[test]
    fn gaussian_saddlepoint_in_one_newton_step() {
        let k = GaussianCgf::new(-3.0, 1.5).unwrap();
        let r = solve(&k).unwrap();
        assert_eq!(r.s_hat, 2.0);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
    }

    #[test]
    fn matched_bpsk_saddlepoint_is_one_half() {
        for gamma in [0.1, 1.0, 7.5] {
            let r = solve(&GaussianCgf::matched_bpsk(gamma).unwrap()).unwrap();
            assert_relative_eq!(r.s_hat, 0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn mismatched_cgf_interference_free_saddlepoint_is_half() {
        let r = solve(&cgf_mismatched_llr(&p(1.3, 0.0, 0.4))).unwrap();
        assert_relative_eq!(r.s_hat, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn seeds() {
        let q = p(1.0, 0.0, 0.8);
        assert_relative_eq!(saddle_seed_low_snr(&q), 1.25);
        assert_relative_eq!(saddle_seed_high_snr(&q).unwrap(), 1.25);
        assert_relative_eq!(
            saddle_seed_low_snr(&p(1.0, 0.5, 2.0)),
            1.0 / 2.25,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            saddle_seed_high_snr(&p(1.0, 0.5, 0.01)).unwrap(),
            50.0,
            max_relative = 1e-12
        );
        let strong = ChannelParams::with_strong_interference(1.0, 1.5, 0.1).unwrap();
        assert!(saddle_seed_high_snr(&strong).is_err());
    }

    #[test]
    fn strong_interference_still_has_a_saddlepoint() {
        let strong = ChannelParams::with_strong_interference(1.0, 1.5, 0.1).unwrap();
        let r = solve(&cgf_observation(&strong)).unwrap();
        assert!(r.converged && r.s_hat > 0.0);
    }

    #[test]
    fn solver_rejects_bad_tolerance_and_monotone_cgf() {
        let k = GaussianCgf::new(-1.0, 1.0).unwrap();
        assert!(find_saddlepoint(&k, 0.0, 0.0, 10).is_err());
        let e = EmpiricalCgf::new(vec![-1.0; 100]).unwrap();
        assert!(matches!(solve(&e), Err(Error::NoSaddlepoint { .. })));
    }

    #[test]
    fn empirical_two_point_is_log_cosh() {
        let e = EmpiricalCgf::new(vec![-1.0, 1.0]).unwrap();
        // two samples never reach the ESS floor, but the value is still defined
        for s in [0.3, -1.2, 2.0] {
            assert_relative_eq!(e.value(s), s.cosh().ln(), max_relative = 1e-14);
            assert_relative_eq!(e.d1(s), s.tanh(), max_relative = 1e-14);
        }
        assert_eq!(e.value(0.0), 0.0);
    }

    #[test]
    fn empirical_domain_respects_ess_floor() {
        let q = p(1.0, 0.5, 0.25);
        let batch = crate::llr::sample_llrs(&q, LValueKind::Mismatched, 20_000, 3).unwrap();
        let e = cgf_empirical(&batch).unwrap();
        let (lo, hi) = e.domain();
        assert!(lo < 0.0 && hi > 0.0);
        assert!(e.effective_sample_size(hi) >= EMPIRICAL_MIN_ESS);
        assert!(e.effective_sample_size(hi * 1.01) < EMPIRICAL_MIN_ESS);
    }

    #[test]
    fn scaled_chain_rule() {
        let q = p(1.0, 0.5, 0.25);
        let k = cgf_mismatched_llr(&q);
        let y = cgf_observation(&q);
        for s in [0.1, 0.3, 0.9] {
            assert_eq!(k.value(s), y.value(8.0 * s));
            assert_relative_eq!(k.d1(s), 8.0 * y.d1(8.0 * s), max_relative = 1e-15);
            assert_relative_eq!(k.d2(s), 64.0 * y.d2(8.0 * s), max_relative = 1e-15);
        }
    }
}

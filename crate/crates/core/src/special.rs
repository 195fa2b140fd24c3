//! Scalar special functions shared by the estimators.

use libm::erfc;
use std::f64::consts::{LN_2, PI, SQRT_2};

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `ln Q(x)`, finite for every finite `x` (including where `Q` underflows).
pub fn ln_q_function(x: f64) -> f64 {
    if x < 30.0 {
        return q_function(x).ln();
    }
    // Asymptotic series of the Mills ratio; at x >= 30 five terms are exact to f64.
    let x2 = x * x;
    let inv = 1.0 / x2;
    let series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
    -0.5 * x2 - x.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln Σ e^{x_i}`; `-inf` for an empty iterator.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln cosh(x)` for any finite `x`.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    // cosh(a) = e^a (1 + e^{-2a}) / 2
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// Logistic function `1 / (1 + e^{-x})`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `1 / cosh(x)^2`, zero once `cosh` would overflow.
pub fn sech2(x: f64) -> f64 {
    let a = x.abs();
    if a > 350.0 {
        return 0.0;
    }
    let e = (-2.0 * a).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

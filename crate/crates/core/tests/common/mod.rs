//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the solver, quadrature or decoder code under test;
//! each helper takes a different route to the same quantity.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddle_llr::fec::{conv_encode, ConvCodeSpec};

/// `true_llr(0.8)` at `h = 1, g = 0.5, σ_z² = 0.25`, from a 60-digit
/// evaluation of the four exponential terms.
pub const TRUE_LLR_FROZEN: f64 = 3.57035435869595;

/// `ln Q(40)` at 60 digits.
pub const LN_Q_40_FROZEN: f64 = -804.6084420137538;

/// Plain bisection for an increasing function.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iterations: usize) -> f64 {
    assert!(
        f(lo) < 0.0 && f(hi) > 0.0,
        "bracket does not straddle a root"
    );
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn gauss_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Critical KS value at level 0.01.
pub fn ks_critical_01(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Bootstrap standard error of `stat` over `reps` resamples.
pub fn bootstrap_se<F: Fn(&[f64]) -> f64>(xs: &[f64], stat: F, reps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; xs.len()];
    let vals: Vec<f64> = (0..reps)
        .map(|_| {
            for v in buf.iter_mut() {
                *v = xs[rng.gen_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    let m = vals.iter().sum::<f64>() / reps as f64;
    (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (reps - 1) as f64).sqrt()
}

/// Maximum of `Σ l_n c_n` over all `2^k` terminated codewords, enumerated in
/// Gray-code order so each step flips one information bit (and, by
/// linearity, XORs one shifted impulse response into the codeword).
pub fn brute_force_ml(llrs: &[f64], spec: &ConvCodeSpec, k: usize) -> (Vec<u8>, f64) {
    let responses: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let mut unit = vec![0u8; k];
            unit[i] = 1;
            conv_encode(&unit, spec, true)
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == 1)
                .map(|(n, _)| n)
                .collect()
        })
        .collect();
    let mut code = vec![0u8; llrs.len()];
    let mut metric = 0.0;
    let mut best = (0u64, 0.0f64);
    let mut gray = 0u64;
    for step in 1u64..(1u64 << k) {
        let bit = step.trailing_zeros() as usize;
        gray ^= 1 << bit;
        for &n in &responses[bit] {
            code[n] ^= 1;
            metric += if code[n] == 1 { llrs[n] } else { -llrs[n] };
        }
        if metric > best.1 {
            best = (gray, metric);
        }
    }
    let bits = (0..k).map(|i| ((best.0 >> i) & 1) as u8).collect();
    (bits, best.1)
}

//! Shared helpers for the integration and acceptance suites: closed-form
//! BER oracles, an implementation-independent numeric minimizer, and small
//! statistics utilities.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Complementary error function (Abramowitz & Stegun 7.1.26, |err| < 1.5e-7).
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    poly * (-x * x).exp()
}

/// Gaussian tail Q(x) = 0.5·erfc(x/√2).
pub fn qfunc(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Coefficient of determination of the least-squares line through (x, y).
pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    (sxy * sxy) / (sxx * syy)
}

/// Gradient descent with central finite differences and backtracking line
/// search. Deliberately knows nothing about the objective's structure; used
/// as the independent oracle for the closed-form combiners.
pub fn minimize_fd<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], iterations: usize) -> Vec<f64> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut step = 1.0f64;
    for _ in 0..iterations {
        let fx = f(&x);
        let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let h = 1e-6 * scale;
        let mut g = vec![0.0; n];
        for i in 0..n {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            g[i] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        let gnorm_sq: f64 = g.iter().map(|v| v * v).sum();
        if gnorm_sq.sqrt() < 1e-13 {
            break;
        }
        let mut t = step;
        loop {
            let xt: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            if f(&xt) <= fx - 0.25 * t * gnorm_sq {
                x = xt;
                step = (t * 2.0).min(1e3);
                break;
            }
            t *= 0.5;
            if t < 1e-18 {
                return x;
            }
        }
    }
    x
}

/// Pack a complex vector into interleaved re/im reals.
pub fn pack(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Unpack interleaved re/im reals into a complex vector.
pub fn unpack(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// Full-CSI MSE quadratic, reimplemented independently for the oracle:
/// `p|vĥ|² − 2√p·Re(vĥ) + p·Σσᵢ|vᵢ|² + σ²‖v‖² + 1`.
pub fn oracle_mse_full(
    v: &[Complex64],
    h_hat: &[Complex64],
    sigma_h: &[f64],
    p: f64,
    sigma2: f64,
) -> f64 {
    let mut vh = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut norm_sq = 0.0;
    for i in 0..v.len() {
        vh += v[i] * h_hat[i];
        err += sigma_h[i] * v[i].norm_sqr();
        norm_sq += v[i].norm_sqr();
    }
    p * vh.norm_sqr() - 2.0 * p.sqrt() * vh.re + p * err + sigma2 * norm_sq + 1.0
}

/// Partial-CSI MSE quadratic, reimplemented for the oracle:
/// `p|w·1|² − 2√p·Re(w·1) + wBwᴴ + p·wSwᴴ + 1` with diagonal B, S.
pub fn oracle_mse_partial(w: &[Complex64], b: &[f64], s: &[f64], p: f64) -> f64 {
    let w1: Complex64 = w.iter().sum();
    let mut quad_b = 0.0;
    let mut quad_s = 0.0;
    for i in 0..w.len() {
        quad_b += b[i] * w[i].norm_sqr();
        quad_s += s[i] * w[i].norm_sqr();
    }
    p * w1.norm_sqr() - 2.0 * p.sqrt() * w1.re + quad_b + p * quad_s + 1.0
}

/// Uniform complex in the centered unit square.
pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

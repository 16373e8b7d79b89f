//! Special functions and bound formulas.
//!
//! `beta_k(u)` is the positive root of `X^2 - (1 - (1-u)^k) X - u (1-u)^k`,
//! `g_k(x) = -log beta_k(1 - e^{-x})`, and `lambda(d, r)` is the integral of
//! `g_{r-1}(z^{d-r+1})` over `(0, inf)`.

mod bounds;
pub mod crosscheck;
mod quadrature;

pub use bounds::{
    c_r, cstar_bound, droplet_scales, ub_bound, ub_bound_with_lambda, BoundParams, DropletScales,
};
pub use quadrature::{lambda_const, QuadResult};

use crate::error::{invalid, Result};

/// `(1 - (1-u)^k, (1-u)^k)` without cancellation near `u = 0`.
#[inline]
fn powers(k: u32, u: f64) -> (f64, f64) {
    let log_w = k as f64 * (-u).ln_1p();
    (-log_w.exp_m1(), log_w.exp())
}

/// Root form `(B + sqrt(B^2 + 4C)) / 2`, which equals the closed form since
/// `1 + (4u - 2) w + w^2 = (1 - w)^2 + 4uw`.
#[inline]
fn beta_from(b: f64, w: f64, u: f64) -> f64 {
    0.5 * (b + (b * b + 4.0 * u * w).sqrt())
}

/// `1 - beta`, rewritten as `2w(1-u) / ((1+w) + sqrt(D))`.
#[inline]
fn one_minus_beta_from(b: f64, w: f64, u: f64, one_minus_u: f64) -> f64 {
    2.0 * w * one_minus_u / ((1.0 + w) + (b * b + 4.0 * u * w).sqrt())
}

pub fn beta(k: u32, u: f64) -> Result<f64> {
    if k == 0 {
        return invalid("beta_k needs k >= 1");
    }
    if !(0.0..=1.0).contains(&u) {
        return invalid(format!("beta_k(u) needs u in [0, 1], got {u}"));
    }
    Ok(beta_unchecked(k, u))
}

#[inline]
pub(crate) fn beta_unchecked(k: u32, u: f64) -> f64 {
    let (b, w) = powers(k, u);
    beta_from(b, w, u)
}

/// `g_k(x) = -log beta_k(1 - e^{-x})` for `x > 0`.
pub fn g(k: u32, x: f64) -> Result<f64> {
    if k == 0 {
        return invalid("g_k needs k >= 1");
    }
    if x.is_nan() || x <= 0.0 {
        return invalid(format!("g_k(x) needs x > 0, got {x}"));
    }
    Ok(g_unchecked(k, x))
}

#[inline]
pub(crate) fn g_unchecked(k: u32, x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    let u = -(-x).exp_m1();
    let one_minus_u = (-x).exp();
    let w = (-(k as f64) * x).exp();
    let b = -(-(k as f64) * x).exp_m1();
    let beta = beta_from(b, w, u);
    if beta > 0.5 {
        -(-one_minus_beta_from(b, w, u, one_minus_u)).ln_1p()
    } else {
        -beta.ln()
    }
}

/// `q = -log(1 - p)`.
pub fn q_of_p(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return invalid(format!("q(p) needs p in [0, 1), got {p}"));
    }
    Ok(-(-p).ln_1p())
}

/// `log` applied `k` times; `k = 0` returns `x`.
pub fn iterated_log(k: u32, x: f64) -> Result<f64> {
    let mut v = x;
    for step in 0..k {
        if !(v > 0.0) {
            return invalid(format!(
                "iterated log undefined: step {step} has argument {v}"
            ));
        }
        v = v.ln();
    }
    Ok(v)
}

/// `log_(k)(n)` given `ln n`, for `n` too large to hold in an `f64`.
pub fn iterated_log_of_ln(k: u32, ln_x: f64) -> Result<f64> {
    if k == 0 {
        return Ok(ln_x.exp());
    }
    iterated_log(k - 1, ln_x)
}

/// `G_a^b = exp(-sum_{i=a}^{b-1} g_{ell+1}(i^{d-1} q))`.
pub fn g_value(a: u64, b: u64, d: u32, ell: u32, q: f64) -> Result<f64> {
    if a < 2 {
        return invalid(format!("G_a^b needs a >= 2, got a = {a}"));
    }
    if b < a {
        return invalid(format!("G_a^b needs b >= a, got a = {a}, b = {b}"));
    }
    if d == 0 {
        return invalid("G_a^b needs d >= 1");
    }
    if q.is_nan() || q <= 0.0 {
        return invalid(format!("G_a^b needs q > 0, got {q}"));
    }
    let sum: f64 = (a..b)
        .map(|i| g_unchecked(ell + 1, (i as f64).powi(d as i32 - 1) * q))
        .sum();
    Ok((-sum).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Positive root of `X^2 - B X - C` by bisection on `[0, 1]`.
    fn quadratic_root_oracle(k: u32, u: f64) -> f64 {
        let w = (1.0 - u).powi(k as i32);
        let (bb, cc) = (1.0 - w, u * w);
        let f = |x: f64| x * x - bb * x - cc;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn closed_form(k: u32, u: f64) -> f64 {
        let w = (1.0 - u).powi(k as i32);
        0.5 * (1.0 - w + (1.0 + (4.0 * u - 2.0) * w + w * w).sqrt())
    }

    #[test]
    fn beta_endpoints_and_known_value() {
        for k in 1..8 {
            assert_eq!(beta(k, 0.0).unwrap(), 0.0);
            assert_eq!(beta(k, 1.0).unwrap(), 1.0);
        }
        let oracle = quadratic_root_oracle(1, 0.5);
        assert!((oracle - 0.809017).abs() < 1e-6);
        assert!((beta(1, 0.5).unwrap() - oracle).abs() < 1e-14);
        assert!(beta(1, 1.5).is_err());
        assert!(beta(1, -0.1).is_err());
        assert!(beta(0, 0.5).is_err());
    }

    #[test]
    fn beta_matches_closed_form_and_oracle() {
        for k in 1..=6 {
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let b = beta(k, u).unwrap();
                assert!((b - closed_form(k, u)).abs() < 1e-14);
                assert!((b - quadratic_root_oracle(k, u)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn beta_recursion_residual() {
        let mut worst = 0.0f64;
        for k in 1..=6 {
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let b = beta(k, u).unwrap();
                let w = (1.0 - u).powi(k as i32);
                worst = worst.max((b * b - (1.0 - w) * b - u * w).abs());
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn beta_increasing_and_ratio_decreasing() {
        for k in 1..=6 {
            let mut prev = 0.0;
            let mut prev_ratio = f64::INFINITY;
            for i in 1..1000 {
                let u = i as f64 / 1000.0;
                let b = beta(k, u).unwrap();
                assert!(b > prev || b == 1.0);
                let ratio = b / u;
                assert!(ratio <= prev_ratio * (1.0 + 1e-14));
                prev = b;
                prev_ratio = ratio;
            }
        }
    }

    #[test]
    fn g_values() {
        assert!(g(3, 50.0).unwrap() < 1e-10);
        assert!(g(1, 50.0).unwrap() < 1e-10);
        let expected = -quadratic_root_oracle(1, 0.5).ln();
        assert!((expected - 0.21195).abs() < 2e-5);
        assert!((g(1, std::f64::consts::LN_2).unwrap() - expected).abs() < 1e-13);
        assert!(g(2, 1.0).unwrap() > g(2, 2.0).unwrap());
        assert!(g(2, 0.0).is_err());
        assert!(g(2, -1.0).is_err());
    }

    #[test]
    fn g_tail_is_accurate() {
        // 1 - beta ~ w (1-u) for large x; g ~ e^{-(k+1)x}.
        let x = 30.0f64;
        let approx = (-(3.0) * x).exp();
        let got = g(2, x).unwrap();
        assert!((got / approx - 1.0).abs() < 1e-6, "{got} vs {approx}");
    }

    #[test]
    fn q_values() {
        assert_eq!(q_of_p(0.0).unwrap(), 0.0);
        assert!((q_of_p(1.0 - (-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        let series: f64 = (1..60).map(|j| 0.01f64.powi(j) / j as f64).sum();
        assert!((series - 0.0100503).abs() < 1e-7);
        assert!((q_of_p(0.01).unwrap() - series).abs() < 1e-12);
        assert!(q_of_p(1.0).is_err());
        for i in 1..=70 {
            let p = i as f64 / 100.0;
            let q = q_of_p(p).unwrap();
            assert!(p <= q && q <= 2.0 * p);
        }
    }

    #[test]
    fn iterated_logs() {
        let e = std::f64::consts::E;
        assert_eq!(iterated_log(0, 5.0).unwrap(), 5.0);
        assert!((iterated_log(1, e).unwrap() - 1.0).abs() < 1e-15);
        assert!((iterated_log(2, e.powf(e)).unwrap() - 1.0).abs() < 1e-15);
        assert!(iterated_log(2, 1.0).is_err());
        assert!(iterated_log(1, 0.0).is_err());
        assert!((iterated_log_of_ln(2, 100.0).unwrap() - 100f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn g_value_cases() {
        assert_eq!(g_value(4, 4, 2, 0, 0.3).unwrap(), 1.0);
        assert!(g_value(1, 4, 2, 0, 0.3).is_err());
        assert!(g_value(5, 4, 2, 0, 0.3).is_err());
        let expected = quadratic_root_oracle(1, 1.0 - (-1.0f64).exp());
        assert!((g_value(2, 3, 2, 0, 0.5).unwrap() - expected).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn beta_inequality(k in 1u32..=6, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (u, v) = if a <= b { (a, b) } else { (b, a) };
            let w = (1.0 - u).powi(k as i32);
            let h = (1.0 - w) * beta(k, v).unwrap() + w * v - beta(k, u).unwrap() * beta(k, v).unwrap();
            prop_assert!(h >= -1e-12);
        }
    }
}

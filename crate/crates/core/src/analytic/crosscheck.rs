//! Second, independent evaluation of `lambda(d, r)` by composite
//! Gauss-Legendre rules on a fixed mesh: dyadic panels `[2^{-j-1}, 2^{-j}]`
//! on `(0, 1]` and panels of width 1/2 on `[1, z_max]`. No substitution is
//! used. The error estimate is the difference between the 20- and 32-point
//! rules plus the truncation bound.

use super::g_unchecked;
use super::quadrature::{truncation, validate_lambda_args, QuadResult};
use crate::error::Result;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn composite(f: &impl Fn(f64) -> f64, panels: &[(f64, f64)], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    panels
        .iter()
        .map(|&(a, b)| {
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            rule.0
                .iter()
                .zip(&rule.1)
                .map(|(x, w)| w * f(c + h * x))
                .sum::<f64>()
                * h
        })
        .sum()
}

pub fn lambda_fixed_rule(d: u32, r: u32, tol: f64) -> Result<QuadResult> {
    validate_lambda_args(d, r, tol)?;
    let k = r - 1;
    let s = (d - r + 1) as i32;
    let cut = truncation(d, r, tol);
    let f = |z: f64| g_unchecked(k, z.powi(s));

    let mut panels = Vec::new();
    let mut hi = 1.0f64;
    while hi > cut.eps {
        let lo = (0.5 * hi).max(cut.eps);
        panels.push((lo, hi));
        hi = lo;
    }
    let mut a = 1.0;
    while a < cut.z_max {
        let b = (a + 0.5).min(cut.z_max);
        panels.push((a, b));
        a = b;
    }

    let low = composite(&f, &panels, &gauss_legendre(20));
    let high = composite(&f, &panels, &gauss_legendre(32));
    Ok(QuadResult {
        value: high,
        error: (high - low).abs() + cut.bound,
        evaluations: panels.len() * 52,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::lambda_const;

    #[test]
    fn legendre_rule_is_exact_for_degree_2n_minus_1() {
        let rule = gauss_legendre(10);
        let v: f64 = rule
            .0
            .iter()
            .zip(&rule.1)
            .map(|(x, w)| w * x.powi(18))
            .sum();
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        assert!((rule.1.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn fixed_rule_recovers_lambda_2_2() {
        let exact = std::f64::consts::PI.powi(2) / 18.0;
        let r = lambda_fixed_rule(2, 2, 1e-8).unwrap();
        assert!((r.value - exact).abs() < 1e-8, "{}", r.value - exact);
    }

    #[test]
    fn schemes_agree() {
        for (d, r) in [(2, 2), (3, 3), (4, 2), (4, 3), (4, 4)] {
            let a = lambda_const(d, r, 1e-8).unwrap();
            let b = lambda_fixed_rule(d, r, 1e-8).unwrap();
            assert!(
                (a.value - b.value).abs() <= a.error + b.error,
                "({d},{r}): {} vs {} (errors {:e}, {:e})",
                a.value,
                b.value,
                a.error,
                b.error
            );
            assert!((a.value - b.value).abs() <= 2e-8);
        }
    }
}

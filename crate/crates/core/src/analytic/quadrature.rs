//! Adaptive Gauss-Kronrod evaluation of `lambda(d, r)`.
//!
//! The integral is split at `z = 1`. On `(0, 1]` the substitution
//! `z = e^{-t}` turns the logarithmic singularity at 0 into exponential decay
//! in `t`. Both ends are truncated where an explicit majorant of the
//! integrand integrates to at most `tol / 10`:
//!
//! - near 0: `g_k(x) <= -ln(x)/2 + (ln 2 + k)/2` for `x <= 1`,
//! - at infinity: `g_k(x) <= 2 e^{-(k+1)x}` once `e^{-(k+1)x} <= 1/2`.

use std::collections::BinaryHeap;

use serde::Serialize;

use super::g_unchecked;
use crate::error::{invalid, Error, Result};

// 15-point Kronrod nodes with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// Bound on `|value - exact|`: quadrature estimate plus truncation.
    pub error: f64,
    pub evaluations: usize,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    piece: usize,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Global adaptive integration over several finite pieces sharing one budget.
fn integrate_pieces(
    pieces: &[(&dyn Fn(f64) -> f64, f64, f64)],
    budget: f64,
) -> Result<(f64, f64, usize)> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for (idx, &(f, a, b)) in pieces.iter().enumerate() {
        let (value, error) = gk15(&f, a, b);
        evaluations += 15;
        heap.push(Panel {
            a,
            b,
            piece: idx,
            value,
            error,
        });
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        if total_err <= budget {
            let total: f64 = heap.iter().map(|p| p.value).sum();
            return Ok((total, total_err, evaluations));
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::NoConvergence(format!(
                "error {total_err:e} above {budget:e} after {MAX_INTERVALS} panels"
            )));
        }
        let worst = heap.pop().expect("nonempty");
        let f = pieces[worst.piece].0;
        let mid = 0.5 * (worst.a + worst.b);
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, a, b);
            evaluations += 15;
            heap.push(Panel {
                a,
                b,
                piece: worst.piece,
                value,
                error,
            });
        }
    }
}

pub(crate) struct Truncation {
    /// Left cutoff in `z`; `(0, eps)` is dropped.
    pub eps: f64,
    /// Right cutoff in `z`; `(z_max, inf)` is dropped.
    pub z_max: f64,
    pub bound: f64,
}

pub(crate) fn validate_lambda_args(d: u32, r: u32, tol: f64) -> Result<()> {
    if r < 2 || d < r {
        return invalid(format!(
            "lambda(d, r) needs d >= r >= 2, got d = {d}, r = {r}"
        ));
    }
    if tol.is_nan() || tol < 1e-10 {
        return invalid(format!("tolerance must be at least 1e-10, got {tol}"));
    }
    Ok(())
}

/// Cutoffs whose dropped mass is at most `tol / 10` in total.
pub(crate) fn truncation(d: u32, r: u32, tol: f64) -> Truncation {
    let k = (r - 1) as f64;
    let s = (d - r + 1) as f64;
    let c0 = 0.5 * (std::f64::consts::LN_2 + k);
    let left = |eps: f64| eps * (0.5 * s * (1.0 - eps.ln()) + c0);
    let mut eps = 0.5f64;
    while left(eps) > tol / 20.0 {
        eps *= 0.5;
    }
    let z_max = ((40.0 / ((k + 1.0) * tol)).ln() / (k + 1.0)).max(1.0);
    let right = 2.0 * (-(k + 1.0) * z_max).exp() / (k + 1.0);
    Truncation {
        eps,
        z_max,
        bound: left(eps) + right,
    }
}

/// `lambda(d, r)` with a rigorous truncation bound and a Gauss-Kronrod error
/// estimate whose sum is at most `tol`.
pub fn lambda_const(d: u32, r: u32, tol: f64) -> Result<QuadResult> {
    validate_lambda_args(d, r, tol)?;
    let k = r - 1;
    let s = (d - r + 1) as i32;
    let cut = truncation(d, r, tol);

    let left = move |t: f64| g_unchecked(k, (-(s as f64) * t).exp()) * (-t).exp();
    let right = move |z: f64| g_unchecked(k, z.powi(s));
    let t_max = -cut.eps.ln();
    let pieces: [(&dyn Fn(f64) -> f64, f64, f64); 2] =
        [(&left, 0.0, t_max), (&right, 1.0, cut.z_max)];

    let (value, err, evaluations) = integrate_pieces(&pieces, 0.8 * tol - cut.bound)?;
    Ok(QuadResult {
        value,
        error: err + cut.bound,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI2_18: f64 = std::f64::consts::PI * std::f64::consts::PI / 18.0;

    #[test]
    fn gk15_integrates_polynomials_exactly() {
        let (v, _) = gk15(&|x: f64| x.powi(20), 0.0, 1.0);
        assert!((v - 1.0 / 21.0).abs() < 1e-15);
        let (v, e) = gk15(&|x: f64| x.powi(12), 0.0, 1.0);
        assert!((v - 1.0 / 13.0).abs() < 1e-15);
        assert!(e < 1e-14);
    }

    #[test]
    fn lambda_2_2() {
        let r = lambda_const(2, 2, 1e-8).unwrap();
        assert!((r.value - PI2_18).abs() < 1e-8, "{} vs {}", r.value, PI2_18);
        assert!(r.error <= 1e-8);
        assert!((r.value - PI2_18).abs() <= r.error);
    }

    #[test]
    fn lambda_4_2_refines_consistently() {
        let coarse = lambda_const(4, 2, 1e-6).unwrap();
        let fine = lambda_const(4, 2, 5e-7).unwrap();
        assert!(coarse.value > 0.0 && coarse.value.is_finite());
        assert!((coarse.value - fine.value).abs() < coarse.error);
    }

    #[test]
    fn lambda_rejects_bad_arguments() {
        assert!(lambda_const(2, 3, 1e-8).is_err());
        assert!(lambda_const(3, 1, 1e-8).is_err());
        assert!(lambda_const(3, 3, 1e-12).is_err());
    }

    #[test]
    fn truncation_is_within_budget() {
        for (d, r) in [(2, 2), (3, 3), (4, 2), (6, 3)] {
            for tol in [1e-4, 1e-8, 1e-10] {
                let t = truncation(d, r, tol);
                assert!(t.bound <= tol / 10.0, "{d} {r} {tol}: {}", t.bound);
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use super::{iterated_log_of_ln, lambda_const};
use crate::error::{invalid, Error, Result};

const LAMBDA_TOL: f64 = 1e-10;

/// Inputs to the upper-bound formulas. The grid side `n` is carried as
/// `ln n` so that scales like `e^{e^{50}}` stay representable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub ln_n: f64,
    pub d: u32,
    pub r: u32,
    pub ell: u32,
    pub c: f64,
    pub c2: f64,
}

impl BoundParams {
    pub fn from_n(n: u64, d: u32, r: u32, ell: u32, c: f64, c2: f64) -> Result<Self> {
        if n == 0 {
            return invalid("n must be positive");
        }
        let params = BoundParams {
            ln_n: (n as f64).ln(),
            d,
            r,
            ell,
            c,
            c2,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 2 || self.d < self.r {
            return invalid(format!(
                "need d >= r >= 2, got d = {}, r = {}",
                self.d, self.r
            ));
        }
        if !(self.ln_n >= 0.0) {
            return invalid(format!("ln n must be nonnegative, got {}", self.ln_n));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return invalid(format!("c must be a nonnegative real, got {}", self.c));
        }
        if !(self.c2 >= 0.0) || !self.c2.is_finite() {
            return invalid(format!("c2 must be a nonnegative real, got {}", self.c2));
        }
        Ok(())
    }

    /// `log_(r-1)(n)`.
    pub fn scale(&self) -> Result<f64> {
        iterated_log_of_ln(self.r - 1, self.ln_n)
    }
}

/// `c_2 = c2`, `c_r = c_{r-1} - 2^{-r+1} c2`.
pub fn c_r(r: u32, c2: f64) -> Result<f64> {
    if r < 2 {
        return invalid(format!("c_r needs r >= 2, got {r}"));
    }
    let mut c = c2;
    for j in 3..=r {
        c -= c2 * 0.5f64.powi(j as i32 - 1);
    }
    Ok(c)
}

/// `(lambda / L - c / L^{2 - 1/(2d-2)})^{d-r+1}` with `L = log_(r-1)(n)`.
pub fn ub_bound_with_lambda(params: &BoundParams, lambda: f64, c: f64) -> Result<f64> {
    params.validate()?;
    let l = params.scale()?;
    if !(l > 0.0) {
        return Err(Error::BelowValidity(format!(
            "log_(r-1)(n) = {l} is not positive"
        )));
    }
    let exponent = 2.0 - 1.0 / (2.0 * params.d as f64 - 2.0);
    let base = lambda / l - c / l.powf(exponent);
    if !(base > 0.0) {
        return Err(Error::BelowValidity(format!(
            "bound base {base:e} is not positive at log_(r-1)(n) = {l}"
        )));
    }
    Ok(base.powi((params.d - params.r + 1) as i32))
}

/// Upper bound on the critical probability with constant `c`, using
/// `lambda(d + ell, ell + r)`.
pub fn ub_bound(params: &BoundParams) -> Result<f64> {
    params.validate()?;
    let lambda = lambda_const(params.d + params.ell, params.ell + params.r, LAMBDA_TOL)?.value;
    ub_bound_with_lambda(params, lambda, params.c)
}

/// Same formula with `c` replaced by `c_r(r, c2)`.
pub fn cstar_bound(params: &BoundParams) -> Result<f64> {
    params.validate()?;
    let lambda = lambda_const(params.d + params.ell, params.ell + params.r, LAMBDA_TOL)?.value;
    ub_bound_with_lambda(params, lambda, c_r(params.r, params.c2)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DropletScales {
    /// `log_(r-2)(M)`, the root `x0`.
    pub log_iter_big_m: f64,
    /// `log_(r-2)(m) = (1 - 2 delta) y`.
    pub log_iter_small_m: f64,
    /// `ln M`; infinite when `M` is beyond `f64` even in log space.
    pub ln_big_m: f64,
    pub ln_small_m: f64,
    pub delta: f64,
    /// `N = (ln n)^3`.
    pub big_n: f64,
    /// `y = log_(r-1)(n)`.
    pub y: f64,
    /// `f(x0)`.
    pub residual: f64,
}

fn iterated_exp(times: u32, mut x: f64) -> f64 {
    for _ in 0..times {
        x = x.exp();
    }
    x
}

/// Largest root of `f(x) = x - (1 - C x^{beta-1}) y` with
/// `C = 2^{-r} c2 / lambda`, `beta = 1/(2d-2)`, located in `[y/2, y]`.
pub fn droplet_scales(params: &BoundParams, lambda: f64) -> Result<DropletScales> {
    params.validate()?;
    if params.r < 3 {
        return invalid(format!("droplet scales need r >= 3, got {}", params.r));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return invalid(format!("lambda must be positive, got {lambda}"));
    }
    let y = params.scale()?;
    if !(y > 1.0) {
        return Err(Error::NoRoot(format!(
            "y = log_(r-1)(n) = {y} must exceed 1"
        )));
    }
    let beta = 1.0 / (2.0 * params.d as f64 - 2.0);
    let cc = 0.5f64.powi(params.r as i32) * params.c2 / lambda;
    let f = |x: f64| x - (1.0 - cc * x.powf(beta - 1.0)) * y;

    let x0 = if cc == 0.0 {
        y
    } else {
        let (mut lo, mut hi) = (0.5 * y, y);
        if f(lo) >= 0.0 {
            return Err(Error::NoRoot(format!(
                "f(y/2) = {:e} is not negative at y = {y}; n is too small",
                f(lo)
            )));
        }
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let delta = cc * x0.powf(beta - 1.0);
    let small = (1.0 - 2.0 * delta) * y;
    let up = params.r - 3;
    Ok(DropletScales {
        log_iter_big_m: x0,
        log_iter_small_m: small,
        ln_big_m: iterated_exp(up, x0),
        ln_small_m: iterated_exp(up, small),
        delta,
        big_n: params.ln_n.powi(3),
        y,
        residual: f(x0),
    })
}

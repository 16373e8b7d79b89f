//! Reproducible sampling, estimators, threshold search and exact small-case
//! enumeration.

mod estimate;
mod exact;
mod rng;
mod threshold;

pub use estimate::{estimate_event, estimate_p, estimate_p_on, scan, EventPredicate, EventSpec};
pub use exact::{
    exact_p_small, exact_p_small_reversed, percolating_counts, probability_from_counts,
    set_probability, up_sets, verify_harris, HarrisReport, MAX_EXACT_SITES,
};
pub use rng::{sample_config, threshold_field, SampleMode, UniformField, RNG_ID};
pub use threshold::{find_p_alpha, BisectionStep, PAlphaResult, SearchStatus, StepDecision};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};

pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Two-sided Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return invalid("trials must be positive");
    }
    if successes > trials {
        return invalid("successes exceed trials");
    }
    check_confidence(confidence)?;
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2n = z * z / n;
    let center = (p_hat + z2n / 2.0) / (1.0 + z2n);
    let half = z / (1.0 + z2n) * (p_hat * (1.0 - p_hat) / n + z2n / (4.0 * n)).sqrt();
    let low = (center - half).clamp(0.0, 1.0).min(p_hat);
    let high = (center + half).clamp(0.0, 1.0).max(p_hat);
    Ok((low, high))
}

fn check_confidence(confidence: f64) -> Result<()> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return invalid(format!("confidence must be in (0, 1), got {confidence}"));
    }
    Ok(())
}

/// Knobs shared by the estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub trials: u64,
    pub master_seed: u64,
    pub confidence: f64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            trials: 1000,
            master_seed: 0,
            confidence: DEFAULT_CONFIDENCE,
            workers: 0,
        }
    }
}

impl RunOptions {
    pub fn new(trials: u64, master_seed: u64) -> Self {
        RunOptions {
            trials,
            master_seed,
            ..Default::default()
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        check_confidence(self.confidence)
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| crate::Error::InvalidParameter(format!("cannot start worker pool: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub n: usize,
    pub d: usize,
    pub ell: usize,
    pub r: usize,
    pub p: f64,
    /// Event identifier for event estimates; absent for semi-percolation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
    pub padded: bool,
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub master_seed: u64,
    pub rng_id: String,
    pub wall_time: f64,
}

pub(crate) struct RecordParams {
    pub n: usize,
    pub d: usize,
    pub ell: usize,
    pub r: usize,
    pub p: f64,
    pub event: Option<String>,
    pub padded: bool,
}

impl EstimateRecord {
    pub(crate) fn build(
        params: RecordParams,
        successes: u64,
        opts: &RunOptions,
        trials: u64,
        wall_time: f64,
    ) -> Result<Self> {
        let (ci_low, ci_high) = wilson_interval(successes, trials, opts.confidence)?;
        Ok(EstimateRecord {
            n: params.n,
            d: params.d,
            ell: params.ell,
            r: params.r,
            p: params.p,
            event: params.event,
            padded: params.padded,
            trials,
            successes,
            p_hat: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            confidence: opts.confidence,
            master_seed: opts.master_seed,
            rng_id: RNG_ID.to_string(),
            wall_time,
        })
    }

    /// Half-width of the interval around the point estimate, the larger side.
    pub fn radius(&self) -> f64 {
        (self.p_hat - self.ci_low).max(self.ci_high - self.p_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        // 95%: 5 of 10 gives 0.2366 .. 0.7634.
        let (lo, hi) = wilson_interval(5, 10, 0.95).unwrap();
        assert!((lo - 0.236_593).abs() < 1e-5, "{lo}");
        assert!((hi - 0.763_407).abs() < 1e-5, "{hi}");
        let (lo, hi) = wilson_interval(0, 20, 0.99).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.3);
        let (lo, hi) = wilson_interval(20, 20, 0.99).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.7);
    }

    #[test]
    fn wilson_orders_bounds() {
        for trials in [1u64, 2, 7, 100, 10_000] {
            for s in [0, trials / 3, trials / 2, trials] {
                let (lo, hi) = wilson_interval(s, trials, 0.999).unwrap();
                let p = s as f64 / trials as f64;
                assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
            }
        }
        assert!(wilson_interval(1, 0, 0.9).is_err());
        assert!(wilson_interval(3, 2, 0.9).is_err());
        assert!(wilson_interval(1, 2, 1.0).is_err());
    }
}

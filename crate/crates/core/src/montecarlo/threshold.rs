use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::estimate::count_successes;
use super::rng::{sample_config, SampleMode};
use super::{EstimateRecord, RecordParams, RunOptions};
use crate::dynamics::semi_percolates_with;
use crate::error::{invalid, Result};
use crate::lattice::build_structure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepDecision {
    /// `P(mid) >= alpha`: the upper end moves to `mid`.
    Above,
    /// `P(mid) < alpha`: the lower end moves to `mid`.
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Clean,
    /// At least one step hit the trial cap with `alpha` inside the interval
    /// and was decided by the point estimate.
    Flagged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub record: EstimateRecord,
    pub decision: StepDecision,
    pub indeterminate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PAlphaResult {
    pub p_lo: f64,
    pub p_hi: f64,
    pub alpha: f64,
    pub status: SearchStatus,
    pub steps: Vec<BisectionStep>,
}

/// Bisection for `p_alpha = inf {p : P(p) >= alpha}` on `[0, 1]`.
///
/// Every midpoint uses trials `0..k` of the same seed, so the uniforms behind
/// each trial are shared across all `p`. `k` starts at `opts.trials` and
/// doubles until the Wilson interval excludes `alpha` or `max_trials` is
/// reached.
#[allow(clippy::too_many_arguments)]
pub fn find_p_alpha(
    n: usize,
    d: usize,
    ell: usize,
    r: usize,
    alpha: f64,
    tol: f64,
    max_trials: u64,
    padded: bool,
    opts: &RunOptions,
) -> Result<PAlphaResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must be in (0, 1), got {alpha}"));
    }
    if !(tol > 0.0) {
        return invalid(format!("tol must be positive, got {tol}"));
    }
    opts.validate()?;
    if max_trials < opts.trials {
        return invalid(format!(
            "max_trials {max_trials} is below the starting batch {}",
            opts.trials
        ));
    }
    let structure = build_structure(n, d, ell, r, padded)?;
    let shape = structure.shape();
    let pool = opts.pool()?;

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut steps = Vec::new();
    let mut status = SearchStatus::Clean;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let start = Instant::now();
        let mut trials = 0u64;
        let mut successes = 0u64;
        let mut target = opts.trials;
        let (record, decision, indeterminate) = loop {
            successes += count_successes(&pool, trials..target, |t, engine| {
                let config = sample_config(shape, mid, opts.master_seed, t, SampleMode::Direct)?;
                semi_percolates_with(engine, &structure, config)
            })?;
            trials = target;
            let record = EstimateRecord::build(
                RecordParams {
                    n,
                    d,
                    ell,
                    r,
                    p: mid,
                    event: None,
                    padded,
                },
                successes,
                opts,
                trials,
                start.elapsed().as_secs_f64(),
            )?;
            if record.ci_low > alpha {
                break (record, StepDecision::Above, false);
            }
            if record.ci_high < alpha {
                break (record, StepDecision::Below, false);
            }
            if trials >= max_trials {
                let decision = if record.p_hat >= alpha {
                    StepDecision::Above
                } else {
                    StepDecision::Below
                };
                break (record, decision, true);
            }
            target = (2 * trials).min(max_trials);
        };
        match decision {
            StepDecision::Above => hi = mid,
            StepDecision::Below => lo = mid,
        }
        if indeterminate {
            status = SearchStatus::Flagged;
        }
        steps.push(BisectionStep {
            record,
            decision,
            indeterminate,
        });
    }
    Ok(PAlphaResult {
        p_lo: lo,
        p_hi: hi,
        alpha,
        status,
        steps,
    })
}

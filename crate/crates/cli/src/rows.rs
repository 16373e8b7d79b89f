use perclab_core::montecarlo::{BisectionStep, PAlphaResult, SearchStatus, StepDecision};
use perclab_core::EstimateRecord;
use serde::{Deserialize, Serialize};

use crate::spec::ExperimentSpec;

/// Header line of every results file. Timestamps appear only here, so the
/// rows that follow are identical across reruns of the same spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub spec: ExperimentSpec,
    pub rng_id: String,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub elapsed_seconds: f64,
}

/// An estimate without its timing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRow {
    pub n: usize,
    pub d: usize,
    pub ell: usize,
    pub r: usize,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
    pub padded: bool,
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub seed: u64,
    pub rng_id: String,
    /// Set on bisection steps only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<StepDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indeterminate: Option<bool>,
}

impl From<&EstimateRecord> for EstimateRow {
    fn from(r: &EstimateRecord) -> Self {
        EstimateRow {
            n: r.n,
            d: r.d,
            ell: r.ell,
            r: r.r,
            p: r.p,
            event: r.event.clone(),
            padded: r.padded,
            trials: r.trials,
            successes: r.successes,
            p_hat: r.p_hat,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            confidence: r.confidence,
            seed: r.master_seed,
            rng_id: r.rng_id.clone(),
            decision: None,
            indeterminate: None,
        }
    }
}

impl From<&BisectionStep> for EstimateRow {
    fn from(s: &BisectionStep) -> Self {
        EstimateRow {
            decision: Some(s.decision),
            indeterminate: Some(s.indeterminate),
            ..EstimateRow::from(&s.record)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketRow {
    pub n: usize,
    pub d: usize,
    pub ell: usize,
    pub r: usize,
    pub padded: bool,
    pub alpha: f64,
    pub tol: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub status: SearchStatus,
    pub steps: usize,
    pub seed: u64,
}

impl BracketRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        d: usize,
        ell: usize,
        r: usize,
        padded: bool,
        tol: f64,
        seed: u64,
        res: &PAlphaResult,
    ) -> Self {
        BracketRow {
            n,
            d,
            ell,
            r,
            padded,
            alpha: res.alpha,
            tol,
            p_lo: res.p_lo,
            p_hi: res.p_hi,
            status: res.status,
            steps: res.steps.len(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaRow {
    pub d: u32,
    pub r: u32,
    pub tol: f64,
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgapRow {
    pub m: i64,
    pub ell: u32,
    pub u: Vec<f64>,
    pub no_gap: f64,
    /// Brute-force value, when the sequence is short enough.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumerated: Option<f64>,
    /// Product lower bound, when the probabilities are nondecreasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRow {
    pub p: f64,
    pub d: u32,
    pub c: f64,
    pub m: u32,
    pub count: u64,
    pub bound: f64,
    pub lo: u64,
    pub hi: u64,
    pub max_growth: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    pub pass: bool,
    pub params: String,
    pub observed: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "row", rename_all = "kebab-case")]
pub enum ResultRow {
    Meta(Box<Meta>),
    Estimate(EstimateRow),
    Bracket(BracketRow),
    Lambda(LambdaRow),
    Lgap(LgapRow),
    Count(CountRow),
    Check(CheckRow),
}

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{check_p, sample_config, threshold_field, SampleMode, UniformField};
use super::{EstimateRecord, RecordParams, RunOptions};
use crate::dynamics::{semi_percolates_with, ClosureEngine};
use crate::error::{invalid, Error, Result};
use crate::events::{detect_d, detect_growth, detect_t, GapVector, GrowthSpec};
use crate::lattice::{build_structure, BootstrapStructure, Configuration};

/// Site-trial-grid products above this are refused by `scan`.
pub const SCAN_BUDGET: u128 = 1 << 40;

/// Sums `trial(t)` over `range` on the pool; the total does not depend on
/// how trials are split between workers.
pub(crate) fn count_successes<F>(
    pool: &rayon::ThreadPool,
    range: std::ops::Range<u64>,
    trial: F,
) -> Result<u64>
where
    F: Fn(u64, &mut ClosureEngine) -> Result<bool> + Sync,
{
    pool.install(|| {
        range
            .into_par_iter()
            .map_init(ClosureEngine::new, |engine, t| {
                trial(t, engine).map(u64::from)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })
}

fn structure_params(structure: &BootstrapStructure, p: f64, event: Option<String>) -> RecordParams {
    let shape = structure.shape();
    RecordParams {
        n: shape.core_extents()[0],
        d: shape.dim(),
        ell: shape.doubled_axes(),
        r: structure.rule().base(),
        p,
        event,
        padded: shape.padded(),
    }
}

/// Monte Carlo estimate of the semi-percolation probability on the padded
/// structure `C*(n, d, ell, r)`.
pub fn estimate_p(
    n: usize,
    d: usize,
    ell: usize,
    r: usize,
    p: f64,
    opts: &RunOptions,
) -> Result<EstimateRecord> {
    let structure = build_structure(n, d, ell, r, true)?;
    estimate_p_on(&structure, p, opts)
}

/// Same, on any structure.
pub fn estimate_p_on(
    structure: &BootstrapStructure,
    p: f64,
    opts: &RunOptions,
) -> Result<EstimateRecord> {
    check_p(p)?;
    opts.validate()?;
    let start = Instant::now();
    let pool = opts.pool()?;
    let shape = structure.shape();
    let successes = count_successes(&pool, 0..opts.trials, |t, engine| {
        let config = sample_config(shape, p, opts.master_seed, t, SampleMode::Direct)?;
        semi_percolates_with(engine, structure, config)
    })?;
    EstimateRecord::build(
        structure_params(structure, p, None),
        successes,
        opts,
        opts.trials,
        start.elapsed().as_secs_f64(),
    )
}

/// Named events with serializable parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EventSpec {
    Always,
    Diagonal { a: usize, b: usize },
    Crossing { gap: GapVector },
    Growth { spec: GrowthSpec },
}

impl EventSpec {
    pub fn id(&self) -> String {
        match self {
            EventSpec::Always => "always".into(),
            EventSpec::Diagonal { a, b } => format!("D({a},{b})"),
            EventSpec::Crossing { gap } => format!("T({};{:?})", gap.a(), gap.bvec()),
            EventSpec::Growth { spec } => {
                let gaps: Vec<String> = spec
                    .gaps()
                    .iter()
                    .map(|g| format!("{}:{:?}", g.a(), g.bvec()))
                    .collect();
                format!("growth({};{})", spec.big_b(), gaps.join(","))
            }
        }
    }

    pub fn holds(&self, config: &Configuration, structure: &BootstrapStructure) -> Result<bool> {
        match self {
            EventSpec::Always => Ok(true),
            EventSpec::Diagonal { a, b } => detect_d(config, structure, *a, *b),
            EventSpec::Crossing { gap } => detect_t(config, structure, gap),
            EventSpec::Growth { spec } => detect_growth(config, structure, spec),
        }
    }
}

type CustomTest = Arc<dyn Fn(&Configuration) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum EventPredicate {
    Named(EventSpec),
    Custom { name: String, test: CustomTest },
}

impl fmt::Debug for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventPredicate::Named(spec) => f.debug_tuple("Named").field(spec).finish(),
            EventPredicate::Custom { name, .. } => f
                .debug_struct("Custom")
                .field("name", name)
                .finish_non_exhaustive(),
        }
    }
}

impl EventPredicate {
    pub fn custom(
        name: impl Into<String>,
        test: impl Fn(&Configuration) -> bool + Send + Sync + 'static,
    ) -> Self {
        EventPredicate::Custom {
            name: name.into(),
            test: Arc::new(test),
        }
    }

    pub fn id(&self) -> String {
        match self {
            EventPredicate::Named(spec) => spec.id(),
            EventPredicate::Custom { name, .. } => name.clone(),
        }
    }

    fn holds(&self, config: &Configuration, structure: &BootstrapStructure) -> Result<bool> {
        match self {
            EventPredicate::Named(spec) => spec.holds(config, structure),
            EventPredicate::Custom { test, .. } => Ok(test(config)),
        }
    }
}

impl From<EventSpec> for EventPredicate {
    fn from(spec: EventSpec) -> Self {
        EventPredicate::Named(spec)
    }
}

/// Monte Carlo frequency of an event under `Bin(region, p)`.
pub fn estimate_event(
    structure: &BootstrapStructure,
    predicate: &EventPredicate,
    p: f64,
    opts: &RunOptions,
) -> Result<EstimateRecord> {
    check_p(p)?;
    opts.validate()?;
    let start = Instant::now();
    let pool = opts.pool()?;
    let shape = structure.shape();
    // Surface parameter errors once instead of from every worker.
    predicate.holds(&Configuration::empty(shape), structure)?;
    let successes = count_successes(&pool, 0..opts.trials, |t, _| {
        let config = sample_config(shape, p, opts.master_seed, t, SampleMode::Direct)?;
        predicate.holds(&config, structure)
    })?;
    EstimateRecord::build(
        structure_params(structure, p, Some(predicate.id())),
        successes,
        opts,
        opts.trials,
        start.elapsed().as_secs_f64(),
    )
}

/// Semi-percolation frequencies on a grid of `(n, p)`. Within a trial the
/// same uniform field is thresholded at every `p`, so each sampled curve is
/// monotone in `p`.
#[allow(clippy::too_many_arguments)]
pub fn scan(
    n_list: &[usize],
    p_grid: &[f64],
    d: usize,
    ell: usize,
    r: usize,
    padded: bool,
    opts: &RunOptions,
) -> Result<Vec<EstimateRecord>> {
    if n_list.is_empty() || p_grid.is_empty() {
        return invalid("scan needs at least one n and one p");
    }
    for &p in p_grid {
        check_p(p)?;
    }
    opts.validate()?;
    let structures: Vec<BootstrapStructure> = n_list
        .iter()
        .map(|&n| build_structure(n, d, ell, r, padded))
        .collect::<Result<_>>()?;
    let work: u128 = structures
        .iter()
        .map(|s| s.shape().site_count() as u128 * opts.trials as u128 * p_grid.len() as u128)
        .sum();
    if work > SCAN_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "scan needs {work} site-trials, limit is {SCAN_BUDGET}"
        )));
    }

    let pool = opts.pool()?;
    let mut records = Vec::with_capacity(n_list.len() * p_grid.len());
    for structure in &structures {
        let start = Instant::now();
        let shape = structure.shape();
        let counts = pool.install(|| {
            (0..opts.trials)
                .into_par_iter()
                .map_init(
                    || (ClosureEngine::new(), vec![0.0f64; shape.site_count()]),
                    |(engine, values), t| -> Result<Vec<u64>> {
                        UniformField::new(opts.master_seed, t).fill(values);
                        p_grid
                            .iter()
                            .map(|&p| {
                                let config = threshold_field(shape, values, p);
                                semi_percolates_with(engine, structure, config).map(u64::from)
                            })
                            .collect()
                    },
                )
                .try_reduce(
                    || vec![0u64; p_grid.len()],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        Ok(a)
                    },
                )
        })?;
        let elapsed = start.elapsed().as_secs_f64();
        for (&p, &successes) in p_grid.iter().zip(&counts) {
            records.push(EstimateRecord::build(
                structure_params(structure, p, None),
                successes,
                opts,
                opts.trials,
                elapsed,
            )?);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::exact_p_small;

    #[test]
    fn extremes() {
        let opts = RunOptions::new(50, 3);
        assert_eq!(estimate_p(4, 2, 1, 2, 1.0, &opts).unwrap().p_hat, 1.0);
        assert_eq!(estimate_p(4, 2, 1, 2, 0.0, &opts).unwrap().p_hat, 0.0);
        assert!(estimate_p(4, 2, 1, 2, 0.5, &RunOptions::new(0, 3)).is_err());
    }

    #[test]
    fn matches_exact_value() {
        let exact = exact_p_small(2, 2, 0, 2, 0.3).unwrap();
        let rec = estimate_p(2, 2, 0, 2, 0.3, &RunOptions::new(100_000, 11)).unwrap();
        assert!(rec.padded);
        let sd = (exact * (1.0 - exact) / rec.trials as f64).sqrt();
        assert!(
            (rec.p_hat - exact).abs() <= 5.0 * sd,
            "{} vs {exact}",
            rec.p_hat
        );
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let base = estimate_p(8, 2, 1, 2, 0.12, &RunOptions::new(400, 99).with_workers(1)).unwrap();
        for workers in [2, 8] {
            let rec = estimate_p(
                8,
                2,
                1,
                2,
                0.12,
                &RunOptions::new(400, 99).with_workers(workers),
            )
            .unwrap();
            assert_eq!(rec.successes, base.successes);
        }
    }

    #[test]
    fn events() {
        let s = build_structure(8, 2, 1, 2, false).unwrap();
        let opts = RunOptions::new(200, 1);
        let always = estimate_event(&s, &EventSpec::Always.into(), 0.2, &opts).unwrap();
        assert_eq!(always.p_hat, 1.0);
        let vacuous =
            estimate_event(&s, &EventSpec::Diagonal { a: 4, b: 4 }.into(), 0.2, &opts).unwrap();
        assert_eq!(vacuous.p_hat, 1.0);
        assert_eq!(vacuous.event.as_deref(), Some("D(4,4)"));
        let custom = EventPredicate::custom("nonempty", |c| c.count() > 0);
        let rec = estimate_event(&s, &custom, 0.0, &opts).unwrap();
        assert_eq!(rec.p_hat, 0.0);
        assert!(
            estimate_event(&s, &EventSpec::Diagonal { a: 4, b: 40 }.into(), 0.2, &opts).is_err()
        );
    }

    #[test]
    fn event_spec_parsing() {
        let spec: EventSpec =
            serde_json::from_str(r#"{"kind": "diagonal", "a": 2, "b": 5}"#).unwrap();
        assert_eq!(spec, EventSpec::Diagonal { a: 2, b: 5 });
        assert!(serde_json::from_str::<EventSpec>(r#"{"kind": "zigzag"}"#).is_err());
        assert!(serde_json::from_str::<EventSpec>(
            r#"{"kind": "crossing", "gap": {"a": 2, "bvec": [3]}}"#
        )
        .is_err());
    }

    #[test]
    fn scan_extremes_and_monotone() {
        let opts = RunOptions::new(100, 5);
        let recs = scan(&[6], &[0.0, 1.0], 2, 0, 2, false, &opts).unwrap();
        assert_eq!((recs[0].p_hat, recs[1].p_hat), (0.0, 1.0));
        let grid: Vec<f64> = (0..12).map(|i| i as f64 / 40.0).collect();
        let recs = scan(&[10, 12], &grid, 2, 0, 2, true, &opts).unwrap();
        assert_eq!(recs.len(), 24);
        for chunk in recs.chunks(12) {
            assert!(chunk.windows(2).all(|w| w[0].successes <= w[1].successes));
        }
        assert!(scan(&[], &grid, 2, 0, 2, true, &opts).is_err());
        assert!(scan(&[4], &[1.2], 2, 0, 2, true, &opts).is_err());
    }

    #[test]
    fn scan_agrees_with_direct_estimate() {
        let opts = RunOptions::new(300, 17);
        let recs = scan(&[9], &[0.1, 0.2], 2, 1, 2, true, &opts).unwrap();
        for rec in recs {
            let direct = estimate_p(9, 2, 1, 2, rec.p, &opts).unwrap();
            assert_eq!(direct.successes, rec.successes);
        }
    }

    #[test]
    fn scan_crossing_lies_below_leading_order() {
        let grid: Vec<f64> = (1..=20).map(|i| 0.01 * i as f64).collect();
        let recs = scan(&[64], &grid, 2, 0, 2, false, &RunOptions::new(500, 13)).unwrap();
        let leading = std::f64::consts::PI.powi(2) / 18.0 / (64f64).ln();
        let crossing = recs
            .iter()
            .find(|r| r.p_hat >= 0.5)
            .expect("curve reaches 1/2")
            .p;
        assert!(
            crossing > 0.0 && crossing < leading,
            "{crossing} vs {leading}"
        );
    }
}

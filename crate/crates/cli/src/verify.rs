//! Fixed-seed property checks grouped into named suites.

use std::f64::consts::PI;

use perclab_core::analytic::crosscheck::lambda_fixed_rule;
use perclab_core::analytic::{beta, g_value, lambda_const, q_of_p};
use perclab_core::events::{
    detect_growth, detect_t, enumerate_growth_specs, growth_anchor_sites, transverse_sequence,
};
use perclab_core::lgaps::{
    count_gap_sequences, has_lgap, lgap_enumerate, lgap_exact, lgap_lower_bound,
};
use perclab_core::montecarlo::{
    estimate_event, estimate_p, exact_p_small, percolating_counts, sample_config, verify_harris,
    UniformField,
};
use perclab_core::*;
use rayon::prelude::*;

use crate::rows::CheckRow;
use crate::HarnessError;

pub const SUITES: [&str; 6] = ["all", "analytic", "lgap", "events", "harris", "dynamics"];

type CoreResult<T> = perclab_core::Result<T>;

struct Checks {
    suite: &'static str,
    rows: Vec<CheckRow>,
}

impl Checks {
    fn push(
        &mut self,
        check: &str,
        pass: bool,
        params: impl Into<String>,
        observed: impl Into<String>,
    ) {
        self.rows.push(CheckRow {
            suite: self.suite.to_string(),
            check: check.to_string(),
            pass,
            params: params.into(),
            observed: observed.into(),
        });
    }
}

struct Draws {
    field: UniformField,
    next: usize,
}

impl Draws {
    fn new(seed: u64, stream: u64) -> Self {
        Draws {
            field: UniformField::new(seed, stream),
            next: 0,
        }
    }

    /// Uniform in `(0, 1)`.
    fn open(&mut self) -> f64 {
        loop {
            self.next += 1;
            let u = self.field.uniform_at(self.next - 1);
            if u > 0.0 {
                return u;
            }
        }
    }

    fn below(&mut self, n: usize) -> usize {
        ((self.open() * n as f64) as usize).min(n - 1)
    }
}

pub fn run_suite(name: &str, seed: u64) -> std::result::Result<Vec<CheckRow>, HarnessError> {
    let suites: Vec<&'static str> = match SUITES.iter().find(|&&s| s == name) {
        Some(&"all") => SUITES[1..].to_vec(),
        Some(&s) => vec![s],
        None => {
            let other = name;
            return Err(HarnessError::Validation(format!(
                "unknown suite `{other}`, expected one of {SUITES:?}"
            )));
        }
    };
    let mut rows = Vec::new();
    for suite in suites {
        let mut checks = Checks {
            suite,
            rows: Vec::new(),
        };
        match suite {
            "analytic" => analytic(&mut checks, seed)?,
            "lgap" => lgap(&mut checks, seed)?,
            "events" => events(&mut checks, seed)?,
            "harris" => harris(&mut checks)?,
            "dynamics" => dynamics(&mut checks, seed)?,
            _ => unreachable!(),
        }
        rows.extend(checks.rows);
    }
    Ok(rows)
}

fn analytic(out: &mut Checks, seed: u64) -> CoreResult<()> {
    let mut worst: f64 = 0.0;
    for k in 1..=6u32 {
        for i in 1..=99 {
            let u = i as f64 / 100.0;
            let b = beta(k, u)?;
            let w = (1.0 - u).powi(k as i32);
            worst = worst.max((b * b - (1.0 - w) * b - u * w).abs());
        }
    }
    out.push(
        "beta-recursion",
        worst < 1e-12,
        "k=1..6, u=0.01..0.99",
        format!("max residual {worst:.3e}"),
    );

    let mut draws = Draws::new(seed, 1);
    let (mut ineq, mut ratio) = (0, 0);
    for k in 1..=4u32 {
        for _ in 0..10_000 {
            let (x, y) = (draws.open(), draws.open());
            let (u, v) = if x <= y { (x, y) } else { (y, x) };
            let (bu, bv) = (beta(k, u)?, beta(k, v)?);
            let w = (1.0 - u).powi(k as i32);
            if (1.0 - w) * bv + w * v - bu * bv < -1e-12 {
                ineq += 1;
            }
            if bv / v - bu / u > 1e-12 {
                ratio += 1;
            }
        }
    }
    out.push(
        "beta-inequality",
        ineq == 0,
        "k=1..4, 10000 pairs each",
        format!("{ineq} violations"),
    );
    out.push(
        "beta-ratio-decreasing",
        ratio == 0,
        "k=1..4, 10000 pairs each",
        format!("{ratio} violations"),
    );

    let lambda = lambda_const(2, 2, 1e-8)?;
    let err = (lambda.value - PI * PI / 18.0).abs();
    out.push(
        "lambda-2-2",
        err <= 1e-8,
        "d=2, r=2, tol=1e-8",
        format!("{:.12}, error {err:.2e}", lambda.value),
    );

    for (d, r) in [(3, 2), (3, 3), (4, 2)] {
        let adaptive = lambda_const(d, r, 1e-9)?;
        let fixed = lambda_fixed_rule(d, r, 1e-9)?;
        let gap = (adaptive.value - fixed.value).abs();
        out.push(
            "lambda-two-schemes",
            gap <= 1e-7,
            format!("d={d}, r={r}"),
            format!("{:.12} vs {:.12}", adaptive.value, fixed.value),
        );
    }
    Ok(())
}

fn lgap(out: &mut Checks, seed: u64) -> CoreResult<()> {
    let mut draws = Draws::new(seed, 2);
    let mut worst: f64 = 0.0;
    for m in -1..=4i64 {
        for ell in 0..=2u32 {
            for _ in 0..200 {
                let u = (0..m + 1).map(|_| draws.open()).collect();
                let spec = EventSeqSpec::new(m, ell, u)?;
                worst = worst.max((lgap_exact(&spec) - lgap_enumerate(&spec)?).abs());
            }
        }
    }
    out.push(
        "exact-vs-enumerated",
        worst <= 1e-12,
        "m=-1..4, ell=0..2, 200 vectors each",
        format!("max difference {worst:.3e}"),
    );

    let mut exceeded = 0;
    for _ in 0..1000 {
        let m = draws.below(52) as i64 - 1;
        let ell = draws.below(4) as u32;
        let mut u: Vec<f64> = (0..m + 1).map(|_| draws.open()).collect();
        u.sort_by(f64::total_cmp);
        let spec = EventSeqSpec::new(m, ell, u)?;
        if lgap_exact(&spec) < lgap_lower_bound(&spec)? {
            exceeded += 1;
        }
    }
    out.push(
        "product-bound",
        exceeded == 0,
        "1000 nondecreasing specs, m<=50",
        format!("{exceeded} exceed"),
    );

    for (p, m) in [(0.04, 1), (0.02, 2)] {
        let res = count_gap_sequences(p, 2, 0.2, m)?;
        let pass = res.count as f64 >= res.bound && (m != 1 || res.count == 66);
        out.push(
            "gap-sequence-count",
            pass,
            format!("d=2, c=0.2, p={p}, m={m}"),
            format!("{} >= {}", res.count, res.bound),
        );
    }
    Ok(())
}

fn spanned(config: &Configuration, s: &BootstrapStructure, side: usize) -> CoreResult<bool> {
    let ell = s.shape().doubled_axes();
    internally_semi_spanned(s, &SiteBox::cube(side, 2, ell), config)
}

#[derive(Default)]
struct Tally {
    tried: u64,
    accepted: u64,
    spans: u64,
    sequences: u64,
}

/// Samples conditioned on the crossing event and on `[a]^2 x [2]^ell` being
/// internally semi-spanned.
fn crossing_tally(ell: usize, seed: u64, want: u64, budget: u64) -> CoreResult<Tally> {
    let pairs: Vec<(usize, usize)> = (2..=6)
        .flat_map(|a| (a + 3..=12).map(move |b| (a, b)))
        .collect();
    let structures = pairs
        .iter()
        .map(|&(_, b)| build_structure(b, 2, ell, 2, false))
        .collect::<CoreResult<Vec<_>>>()?;
    let mut tally = Tally::default();
    let batch = 20_000;
    while tally.accepted < want && tally.tried < budget {
        let found = (tally.tried..tally.tried + batch)
            .into_par_iter()
            .map(|trial| -> CoreResult<(u64, u64, u64)> {
                let k = (trial % pairs.len() as u64) as usize;
                let (a, b) = pairs[k];
                let s = &structures[k];
                let p = 0.1 + 0.3 * ((trial / pairs.len() as u64) % 13) as f64 / 12.0;
                let c = sample_config(s.shape(), p, seed, trial, SampleMode::Direct)?;
                let gap = GapVector::new(a, vec![b])?;
                if !detect_t(&c, s, &gap)? || !spanned(&c, s, a)? {
                    return Ok((0, 0, 0));
                }
                let (u, v) = transverse_sequence(&c, s, &gap, 0)?;
                Ok((
                    1,
                    u64::from(!spanned(&c, s, b)?),
                    u64::from(has_lgap(&u, &v)),
                ))
            })
            .try_reduce(|| (0, 0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1, x.2 + y.2)))?;
        tally.tried += batch;
        tally.accepted += found.0;
        tally.spans += found.1;
        tally.sequences += found.2;
    }
    Ok(tally)
}

fn events(out: &mut Checks, seed: u64) -> CoreResult<()> {
    for ell in [0usize, 1] {
        let t = crossing_tally(ell, seed.wrapping_add(ell as u64), 100, 20_000_000)?;
        let params = format!("d=2, ell={ell}, a<=6, b<=12, p in [0.1, 0.4]");
        if t.accepted < 100 {
            out.push(
                "crossing-spans",
                true,
                params,
                format!("skipped: {} accepted of {} tried", t.accepted, t.tried),
            );
            continue;
        }
        out.push(
            "crossing-spans",
            t.spans == 0,
            params.clone(),
            format!("{} violations in {} accepted", t.spans, t.accepted),
        );
        out.push(
            "crossing-sequences-gap-free",
            t.sequences == 0,
            params,
            format!("{} with an L-gap in {} accepted", t.sequences, t.accepted),
        );
    }

    let specs = (6..=10)
        .map(|b| enumerate_growth_specs(b, 2).map(|l| (b, l)))
        .collect::<CoreResult<Vec<_>>>()?;
    for ell in [0usize, 1] {
        let (mut worst, mut hit) = (0, 0);
        for i in 0..500u64 {
            let (big_b, list) = &specs[i as usize % specs.len()];
            let s = build_structure(*big_b, 2, ell, 2, false)?;
            let p = 0.1 + 0.3 * (i % 11) as f64 / 10.0;
            let mut c = sample_config(
                s.shape(),
                p,
                seed.wrapping_add(10 + ell as u64),
                i,
                SampleMode::Direct,
            )?;
            for site in growth_anchor_sites(s.shape(), *big_b)? {
                c.set(site, true);
            }
            let mut satisfied = 0;
            for spec in list {
                satisfied += usize::from(detect_growth(&c, &s, spec)?);
            }
            worst = worst.max(satisfied);
            hit += usize::from(satisfied > 0);
        }
        out.push(
            "growth-disjoint",
            worst <= 1,
            format!("d=2, ell={ell}, B=6..10, 500 configurations"),
            format!("at most {worst} satisfied, {hit} configurations with one"),
        );
    }

    let (a, b, p) = (6usize, 14usize, 0.12);
    let s = build_structure(b, 2, 1, 2, false)?;
    let opts = RunOptions::new(10_000, seed).with_confidence(0.999);
    let rec = estimate_event(
        &s,
        &EventPredicate::Named(EventSpec::Diagonal { a, b }),
        p,
        &opts,
    )?;
    let bound = g_value(a as u64, b as u64, 2, 1, q_of_p(p)?)?.powi(2);
    out.push(
        "diagonal-bound",
        rec.ci_high >= bound,
        "d=2, ell=1, a=6, b=14, p=0.12, 10000 trials, 99.9%",
        format!("upper {:.5} vs G^2 {bound:.5}", rec.ci_high),
    );
    Ok(())
}

fn harris(out: &mut Checks) -> CoreResult<()> {
    for k in 1..=4 {
        for p in [0.3, 0.5] {
            let r = verify_harris(k, p)?;
            out.push(
                "harris",
                r.violations == 0,
                format!("sites={k}, p={p}"),
                format!(
                    "{} up-sets, {} violations, min slack {:.3e}",
                    r.up_sets, r.violations, r.min_slack
                ),
            );
        }
    }
    Ok(())
}

fn dynamics(out: &mut Checks, seed: u64) -> CoreResult<()> {
    let s = build_structure(2, 2, 0, 2, false)?;
    let counts = percolating_counts(&s)?;
    out.push(
        "two-by-two-counts",
        counts == [0, 0, 2, 4, 1],
        "[2]^2, r=2",
        format!("{counts:?}"),
    );

    let s = build_structure(6, 2, 1, 2, true)?;
    let (mut idempotent, mut monotone) = (0, 0);
    for t in 0..200u64 {
        let small = sample_config(s.shape(), 0.1, seed, t, SampleMode::Direct)?;
        let large = sample_config(s.shape(), 0.2, seed, t, SampleMode::Direct)?;
        let once = closure(&s, &small)?.final_config;
        idempotent += usize::from(closure(&s, &once)?.final_config != once);
        monotone += usize::from(!once.is_subset_of(&closure(&s, &large)?.final_config));
    }
    out.push(
        "closure-idempotent",
        idempotent == 0,
        "C*(6,2,1,2) padded, 200 configs",
        format!("{idempotent} failures"),
    );
    out.push(
        "closure-monotone",
        monotone == 0,
        "p=0.1 inside p=0.2, 200 coupled pairs",
        format!("{monotone} failures"),
    );

    for p in [0.2, 0.5, 0.8] {
        let exact = exact_p_small(2, 2, 0, 2, p)?;
        let rec = estimate_p(2, 2, 0, 2, p, &RunOptions::new(100_000, seed))?;
        out.push(
            "estimate-vs-exact",
            (rec.p_hat - exact).abs() <= rec.radius(),
            format!("n=2, d=2, r=2, p={p}, 100000 trials, 99%"),
            format!("{:.5} vs {exact:.5}, radius {:.5}", rec.p_hat, rec.radius()),
        );
    }

    let runs = [1usize, 2, 8]
        .iter()
        .map(|&w| {
            estimate_p(
                8,
                2,
                1,
                2,
                0.12,
                &RunOptions::new(2000, seed).with_workers(w),
            )
            .map(|r| r.successes)
        })
        .collect::<CoreResult<Vec<_>>>()?;
    out.push(
        "workers-reproducible",
        runs.iter().all(|&x| x == runs[0]),
        "n=8, d=2, ell=1, p=0.12, workers 1/2/8",
        format!("{runs:?}"),
    );
    Ok(())
}

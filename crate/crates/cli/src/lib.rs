//! Experiment harness: JSON experiment specs, JSON-lines results with a
//! metadata header, plot-ready CSV and the verification suites.

pub mod rows;
pub mod spec;
pub mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use perclab_core::analytic::lambda_const;
use perclab_core::events::GapVector;
use perclab_core::lgaps::{
    count_gap_sequences, lgap_enumerate, lgap_exact, lgap_lower_bound, MAX_ENUMERATED_EVENTS,
};
use perclab_core::montecarlo::{estimate_event, estimate_p_on, find_p_alpha, scan, RNG_ID};
use perclab_core::{build_structure, EventPredicate, EventSeqSpec, EventSpec, RunOptions};

pub use rows::{BracketRow, CheckRow, CountRow, EstimateRow, LambdaRow, LgapRow, Meta, ResultRow};
pub use spec::{ExperimentSpec, Format, Kind, OutputSpec, Params};
pub use verify::{run_suite, SUITES};

use spec::require;

pub const CSV_COLUMNS: [&str; 11] = [
    "n",
    "d",
    "ell",
    "r",
    "p",
    "trials",
    "successes",
    "p_hat",
    "ci_low",
    "ci_high",
    "seed",
];

pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_MAX_TRIALS: u64 = 1 << 16;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("run failed: {0}")]
    Runtime(String),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl HarnessError {
    /// 2 for bad input, 3 for failures while running, 1 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 2,
            HarnessError::Runtime(_) => 3,
            HarnessError::ChecksFailed { .. } => 1,
        }
    }
}

impl From<perclab_core::Error> for HarnessError {
    fn from(e: perclab_core::Error) -> Self {
        use perclab_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::ShapeMismatch | E::OutOfRegion(_) | E::BelowValidity(_) => {
                HarnessError::Validation(e.to_string())
            }
            _ => HarnessError::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for HarnessError {
    fn from(e: io::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

fn run_options(p: &Params) -> RunOptions {
    let mut opts = RunOptions::new(
        p.trials.unwrap_or(DEFAULT_TRIALS),
        p.seed.unwrap_or(DEFAULT_SEED),
    );
    if let Some(c) = p.confidence {
        opts = opts.with_confidence(c);
    }
    opts.with_workers(p.workers.unwrap_or(0))
}

fn small(value: usize, name: &str) -> Result<u32, HarnessError> {
    u32::try_from(value).map_err(|_| HarnessError::Validation(format!("`{name}` is too large")))
}

/// Runs the experiment and returns its result rows, without the header.
pub fn execute(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, HarnessError> {
    spec.validate()?;
    let p = &spec.params;
    let d = p.d.unwrap_or(2);
    let ell = p.ell.unwrap_or(0);
    let r = p.r.unwrap_or(2);
    match spec.kind {
        Kind::Estimate => {
            let n = require(&p.n, "n")?;
            let structure = build_structure(n, d, ell, r, p.padded.unwrap_or(true))?;
            let rec = estimate_p_on(&structure, require(&p.p, "p")?, &run_options(p))?;
            Ok(vec![ResultRow::Estimate(EstimateRow::from(&rec))])
        }
        Kind::Scan => {
            let n_list = match (&p.n_list, p.n) {
                (Some(list), None) => list.clone(),
                (None, Some(n)) => vec![n],
                _ => {
                    return Err(HarnessError::Validation(
                        "give exactly one of `n` and `n_list`".into(),
                    ))
                }
            };
            let grid = require(&p.p_grid, "p_grid")?;
            let recs = scan(
                &n_list,
                &grid,
                d,
                ell,
                r,
                p.padded.unwrap_or(false),
                &run_options(p),
            )?;
            Ok(recs
                .iter()
                .map(|rec| ResultRow::Estimate(rec.into()))
                .collect())
        }
        Kind::Pc => {
            let n = require(&p.n, "n")?;
            let padded = p.padded.unwrap_or(false);
            let tol = p.tol.unwrap_or(0.005);
            let opts = run_options(p);
            let res = find_p_alpha(
                n,
                d,
                ell,
                r,
                p.alpha.unwrap_or(0.5),
                tol,
                p.max_trials.unwrap_or(DEFAULT_MAX_TRIALS),
                padded,
                &opts,
            )?;
            let mut rows: Vec<ResultRow> = res
                .steps
                .iter()
                .map(|s| ResultRow::Estimate(s.into()))
                .collect();
            rows.push(ResultRow::Bracket(BracketRow::new(
                n,
                d,
                ell,
                r,
                padded,
                tol,
                opts.master_seed,
                &res,
            )));
            Ok(rows)
        }
        Kind::Event => {
            let n = require(&p.n, "n")?;
            let event = match (&p.event, p.a, p.b, &p.bvec) {
                (Some(e), None, None, None) => e.clone(),
                (None, Some(a), None, Some(bvec)) => EventSpec::Crossing {
                    gap: GapVector::new(a, bvec.clone())?,
                },
                (None, Some(a), Some(b), None) => EventSpec::Diagonal { a, b },
                _ => {
                    return Err(HarnessError::Validation(
                        "give `event`, or `a` with `b`, or `a` with `bvec`".into(),
                    ))
                }
            };
            let structure = build_structure(n, d, ell, r, p.padded.unwrap_or(false))?;
            let rec = estimate_event(
                &structure,
                &EventPredicate::Named(event),
                require(&p.p, "p")?,
                &run_options(p),
            )?;
            Ok(vec![ResultRow::Estimate(EstimateRow::from(&rec))])
        }
        Kind::Lambda => {
            let tol = p.tol.unwrap_or(1e-10);
            let (d, r) = (small(d, "d")?, small(r, "r")?);
            let res = lambda_const(d, r, tol)?;
            Ok(vec![ResultRow::Lambda(LambdaRow {
                d,
                r,
                tol,
                value: res.value,
                error: res.error,
                evaluations: res.evaluations,
            })])
        }
        Kind::Lgap => {
            let u = require(&p.u, "u")?;
            let ell = small(ell, "ell")?;
            let seq = match p.m {
                Some(m) => EventSeqSpec::new(m, ell, u)?,
                None => EventSeqSpec::from_probs(ell, u)?,
            };
            let enumerated = if seq.event_count() <= MAX_ENUMERATED_EVENTS {
                Some(lgap_enumerate(&seq)?)
            } else {
                None
            };
            let lower_bound = if seq.is_nondecreasing() {
                Some(lgap_lower_bound(&seq)?)
            } else {
                None
            };
            Ok(vec![ResultRow::Lgap(LgapRow {
                m: seq.m(),
                ell,
                u: seq.probs().to_vec(),
                no_gap: lgap_exact(&seq),
                enumerated,
                lower_bound,
            })])
        }
        Kind::CountSeq => {
            let (prob, c) = (require(&p.p, "p")?, require(&p.c, "c")?);
            let m = u32::try_from(require(&p.m, "m")?)
                .map_err(|_| HarnessError::Validation("`m` must be positive".into()))?;
            let d = small(d, "d")?;
            let res = count_gap_sequences(prob, d, c, m)?;
            let count = u64::try_from(res.count).map_err(|_| {
                HarnessError::Runtime(format!("count {} does not fit in 64 bits", res.count))
            })?;
            Ok(vec![ResultRow::Count(CountRow {
                p: prob,
                d,
                c,
                m,
                count,
                bound: res.bound,
                lo: res.lo,
                hi: res.hi,
                max_growth: res.max_growth,
            })])
        }
        Kind::Verify => {
            let suite = p.suite.as_deref().unwrap_or("all");
            let rows = run_suite(suite, p.seed.unwrap_or(DEFAULT_SEED))?;
            Ok(rows.into_iter().map(ResultRow::Check).collect())
        }
    }
}

/// Executes `spec`, writes the results where its output section says, and
/// reports failed checks as an error after the results are written.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, HarnessError> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let rows = execute(spec)?;
    let meta = Meta {
        spec: spec.clone(),
        rng_id: RNG_ID.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started: started.to_rfc3339(),
        finished: chrono::Utc::now().to_rfc3339(),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
    };
    write_results(&spec.output, &meta, &rows)?;

    let checks: Vec<&CheckRow> = rows
        .iter()
        .filter_map(|r| match r {
            ResultRow::Check(c) => Some(c),
            _ => None,
        })
        .collect();
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(HarnessError::ChecksFailed {
            failed,
            total: checks.len(),
        });
    }
    Ok(rows)
}

pub fn to_jsonl(meta: &Meta, rows: &[ResultRow]) -> Result<String, HarnessError> {
    let mut text = String::new();
    for row in std::iter::once(&ResultRow::Meta(Box::new(meta.clone()))).chain(rows) {
        text.push_str(
            &serde_json::to_string(row).map_err(|e| HarnessError::Runtime(e.to_string()))?,
        );
        text.push('\n');
    }
    Ok(text)
}

fn write_results(output: &OutputSpec, meta: &Meta, rows: &[ResultRow]) -> Result<(), HarnessError> {
    match (output.format, &output.path) {
        (Format::Jsonl, Some(path)) => write_atomic(path, to_jsonl(meta, rows)?.as_bytes()),
        (Format::Jsonl, None) => Ok(io::stdout().write_all(to_jsonl(meta, rows)?.as_bytes())?),
        (Format::Csv, path) => {
            let csv = to_csv(rows.iter())?;
            let meta_json = serde_json::to_string_pretty(&ResultRow::Meta(Box::new(meta.clone())))
                .map_err(|e| HarnessError::Runtime(e.to_string()))?;
            match path {
                Some(path) => {
                    let mut side = path.as_os_str().to_owned();
                    side.push(".meta.json");
                    write_atomic(Path::new(&side), meta_json.as_bytes())?;
                    write_atomic(path, csv.as_bytes())
                }
                None => {
                    eprintln!("{meta_json}");
                    Ok(io::stdout().write_all(csv.as_bytes())?)
                }
            }
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| HarnessError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| {
        HarnessError::Runtime(format!("cannot write {}: {}", path.display(), e.error))
    })?;
    Ok(())
}

/// CSV of the estimate rows. Other row kinds are skipped; a nonempty input
/// with no estimate rows lacks the columns and is rejected.
pub fn to_csv<'a>(rows: impl Iterator<Item = &'a ResultRow>) -> Result<String, HarnessError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Runtime(e.to_string());
    writer.write_record(CSV_COLUMNS).map_err(csv_err)?;
    let (mut data, mut other) = (0, 0);
    for row in rows {
        match row {
            ResultRow::Estimate(e) => {
                writer
                    .write_record([
                        e.n.to_string(),
                        e.d.to_string(),
                        e.ell.to_string(),
                        e.r.to_string(),
                        e.p.to_string(),
                        e.trials.to_string(),
                        e.successes.to_string(),
                        e.p_hat.to_string(),
                        e.ci_low.to_string(),
                        e.ci_high.to_string(),
                        e.seed.to_string(),
                    ])
                    .map_err(csv_err)?;
                data += 1;
            }
            ResultRow::Meta(_) => {}
            _ => other += 1,
        }
    }
    if data == 0 && other > 0 {
        return Err(HarnessError::Validation(format!(
            "results have no rows with the columns {}",
            CSV_COLUMNS.join(",")
        )));
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Runtime(e.to_string()))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Validation(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| HarnessError::Validation(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Converts a JSON-lines results file to CSV, at `output` or on stdout.
pub fn emit_curve(input: &Path, output: Option<&Path>) -> Result<String, HarnessError> {
    let rows = read_results(input)?;
    let csv = to_csv(rows.iter())?;
    match output {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(csv)
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Validation(format!("cannot read {}: {e}", path.display())))?;
    ExperimentSpec::from_json(&text)
}

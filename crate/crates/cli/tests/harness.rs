use std::f64::consts::PI;

use perclab::*;

fn spec(json: &str) -> ExperimentSpec {
    ExperimentSpec::from_json(json).unwrap()
}

fn rows_without_meta(path: &std::path::Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(str::to_string)
        .collect()
}

#[test]
fn lambda_row_matches_closed_form() {
    let rows = execute(&spec(r#"{"kind": "lambda", "params": {"d": 2, "r": 2}}"#)).unwrap();
    match &rows[..] {
        [ResultRow::Lambda(l)] => assert!((l.value - PI * PI / 18.0).abs() < 1e-9),
        other => panic!("{other:?}"),
    }
}

#[test]
fn estimate_at_one_is_certain() {
    let rows = execute(&spec(
        r#"{"kind": "estimate", "params": {"n": 4, "p": 1.0, "trials": 50}}"#,
    ))
    .unwrap();
    match &rows[..] {
        [ResultRow::Estimate(e)] => {
            assert_eq!(e.p_hat, 1.0);
            assert_eq!(e.successes, 50);
            assert!(e.padded);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn lgap_suite_passes() {
    let rows = run_suite("lgap", DEFAULT_SEED).unwrap();
    assert!(rows.len() >= 3);
    assert!(rows.iter().all(|r| r.pass), "{rows:?}");
}

#[test]
fn harris_and_analytic_suites_pass() {
    for suite in ["harris", "analytic"] {
        let rows = run_suite(suite, DEFAULT_SEED).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }
}

#[test]
fn unknown_suite_is_a_validation_error() {
    let err = run_suite("everything", 1).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = execute(&spec(r#"{"kind": "verify", "params": {"suite": "nope"}}"#)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn malformed_specs_are_rejected() {
    for bad in [
        r#"{"kind": "lambda", "params": {"d": 2}, "extra": 1}"#,
        r#"{"kind": "lambda", "params": {"dimension": 2}}"#,
        r#"{"kind": "lambda", "params": {"d": 2, "p": 0.5}}"#,
        r#"{"kind": "teleport"}"#,
        r#"{"kind": "estimate", "output": {"path": "x", "format": "xml"}}"#,
        "not json",
    ] {
        let err = ExperimentSpec::from_json(bad).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{bad}");
    }
    // Missing or out-of-range values fail at run time with the same code.
    for bad in [
        r#"{"kind": "estimate", "params": {"p": 0.5}}"#,
        r#"{"kind": "estimate", "params": {"n": 4, "p": 1.5}}"#,
        r#"{"kind": "event", "params": {"n": 8, "p": 0.2, "a": 2}}"#,
    ] {
        assert_eq!(execute(&spec(bad)).unwrap_err().exit_code(), 2, "{bad}");
    }
}

#[test]
fn parameters_alias_is_accepted() {
    let s = spec(r#"{"kind": "lambda", "parameters": {"d": 3, "r": 2, "tol": 1e-9}}"#);
    assert_eq!(s.params.d, Some(3));
}

#[test]
fn same_spec_gives_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b] {
        let mut s = spec(
            r#"{"kind": "scan", "params": {"n_list": [4, 6], "p_grid": [0.1, 0.3], "trials": 200, "seed": 9}}"#,
        );
        s.output.path = Some(path.clone());
        run(&s).unwrap();
    }
    assert_eq!(rows_without_meta(&a), rows_without_meta(&b));
    let meta: ResultRow =
        serde_json::from_str(std::fs::read_to_string(&a).unwrap().lines().next().unwrap()).unwrap();
    match meta {
        ResultRow::Meta(m) => {
            assert_eq!(m.rng_id, perclab_core::montecarlo::RNG_ID);
            assert_eq!(m.spec.kind, Kind::Scan);
            assert!(!m.started.is_empty() && !m.finished.is_empty());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn scan_gives_one_csv_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("scan.jsonl");
    let csv_path = dir.path().join("scan.csv");
    let mut s = spec(
        r#"{"kind": "scan", "params": {"n_list": [4, 8], "p_grid": [0.0, 0.05, 0.2, 1.0], "trials": 100}}"#,
    );
    s.output.path = Some(results.clone());
    let rows = run(&s).unwrap();
    assert_eq!(rows.len(), 8);

    let text = emit_curve(&results, Some(&csv_path)).unwrap();
    assert_eq!(text, std::fs::read_to_string(&csv_path).unwrap());
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect();
    assert_eq!(header, CSV_COLUMNS);
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 8);

    // Parsing the CSV back reproduces the stored numbers exactly.
    for (rec, row) in records.iter().zip(&rows) {
        let ResultRow::Estimate(e) = row else {
            panic!("{row:?}")
        };
        let f = |i: usize| rec[i].parse::<f64>().unwrap();
        assert_eq!(rec[0].parse::<usize>().unwrap(), e.n);
        assert_eq!(f(4), e.p);
        assert_eq!(rec[6].parse::<u64>().unwrap(), e.successes);
        assert_eq!(f(7), e.p_hat);
        assert_eq!(f(8), e.ci_low);
        assert_eq!(f(9), e.ci_high);
        assert_eq!(rec[10].parse::<u64>().unwrap(), e.seed);
    }
    assert_eq!(&records[0][7], "0");
    assert_eq!(&records[3][7], "1");
}

#[test]
fn empty_results_give_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let text = emit_curve(&empty, Some(&dir.path().join("out.csv"))).unwrap();
    assert_eq!(text.trim_end(), CSV_COLUMNS.join(","));
}

#[test]
fn results_without_estimates_lack_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lambda.jsonl");
    let mut s = spec(r#"{"kind": "lambda", "params": {"d": 2, "r": 2}}"#);
    s.output.path = Some(path.clone());
    run(&s).unwrap();
    let err = emit_curve(&path, Some(&dir.path().join("x.csv"))).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn csv_format_writes_metadata_alongside() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("est.csv");
    let mut s = spec(
        r#"{"kind": "estimate", "params": {"n": 3, "p": 0.3, "trials": 100}, "output": {"format": "csv"}}"#,
    );
    s.output.path = Some(path.clone());
    run(&s).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("n,d,ell,r,p,trials,successes,p_hat,ci_low,ci_high,seed\n"));
    assert!(dir.path().join("est.csv.meta.json").exists());
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let mut s = spec(r#"{"kind": "lambda", "params": {"d": 2, "r": 2}}"#);
    s.output.path = Some("/nonexistent-dir/for/sure/out.jsonl".into());
    assert_eq!(run(&s).unwrap_err().exit_code(), 3);
}

#[test]
fn pc_rows_end_with_bracket() {
    let rows = execute(&spec(
        r#"{"kind": "pc", "params": {"n": 6, "tol": 0.05, "trials": 100, "max_trials": 800, "seed": 4}}"#,
    ))
    .unwrap();
    let ResultRow::Bracket(b) = rows.last().unwrap() else {
        panic!()
    };
    assert!(b.p_hi - b.p_lo <= 0.05);
    assert_eq!(b.steps, rows.len() - 1);
    assert!(rows[..rows.len() - 1]
        .iter()
        .all(|r| matches!(r, ResultRow::Estimate(e) if e.decision.is_some())));
}

#[test]
fn event_rows_name_the_event() {
    let rows = execute(&spec(
        r#"{"kind": "event", "params": {"n": 10, "ell": 1, "p": 0.2, "a": 3, "b": 3, "trials": 50}}"#,
    ))
    .unwrap();
    let ResultRow::Estimate(e) = &rows[0] else {
        panic!()
    };
    assert_eq!(e.p_hat, 1.0);
    assert_eq!(e.event.as_deref(), Some("D(3,3)"));

    let rows = execute(&spec(
        r#"{"kind": "event", "params": {"n": 10, "p": 0.2, "trials": 50,
            "event": {"kind": "crossing", "gap": {"a": 2, "bvec": [7]}}}}"#,
    ))
    .unwrap();
    let ResultRow::Estimate(e) = &rows[0] else {
        panic!()
    };
    assert!(e.event.as_deref().unwrap().starts_with('T'));
}

#[test]
fn count_and_lgap_rows() {
    let rows = execute(&spec(
        r#"{"kind": "count-seq", "params": {"p": 0.04, "d": 2, "c": 0.2, "m": 1}}"#,
    ))
    .unwrap();
    let ResultRow::Count(c) = &rows[0] else {
        panic!()
    };
    assert_eq!(c.count, 66);
    assert_eq!(c.bound, 31.25);

    let rows = execute(&spec(
        r#"{"kind": "lgap", "params": {"ell": 1, "u": [0.2, 0.3, 0.5]}}"#,
    ))
    .unwrap();
    let ResultRow::Lgap(l) = &rows[0] else {
        panic!()
    };
    assert_eq!(l.m, 2);
    assert!((l.no_gap - l.enumerated.unwrap()).abs() < 1e-12);
    assert!(l.no_gap >= l.lower_bound.unwrap());
}

#[test]
fn rows_reject_unknown_fields() {
    let line = r#"{"row":"lambda","d":2,"r":2,"tol":1e-10,"value":0.5,"error":0.0,"evaluations":1,"extra":0}"#;
    assert!(serde_json::from_str::<ResultRow>(line).is_err());
    let ok = r#"{"row":"lambda","d":2,"r":2,"tol":1e-10,"value":0.5,"error":0.0,"evaluations":1}"#;
    assert!(serde_json::from_str::<ResultRow>(ok).is_ok());
}

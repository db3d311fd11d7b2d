use std::process::Command;

use robustbf::ExtRational;
use robustbf_bench::experiment::summarize;
use robustbf_bench::output::render_svg;
use robustbf_bench::{
    emit_csv, emit_svg_lines, read_csv, run_experiment, ExperimentConfig, Metric, ResultRow,
    RowStatus,
};

fn row(snr_db: f64, q: &str, run: usize, sinr_db: f64) -> ResultRow {
    ResultRow {
        snr_db,
        p: ExtRational::INFINITY,
        q: q.parse().unwrap(),
        run,
        sinr_db,
        worst_case_sinr_db: f64::NEG_INFINITY,
        opt_bound_db: 12.5,
        iterations: 4,
        cpu_ms: 1.25,
        status: RowStatus::Threshold,
    }
}

/// Bitwise equality, so NaN fields compare equal to themselves.
fn same(a: &ResultRow, b: &ResultRow) -> bool {
    let f = |x: f64, y: f64| x.to_bits() == y.to_bits();
    f(a.snr_db, b.snr_db)
        && a.p == b.p
        && a.q == b.q
        && a.run == b.run
        && f(a.sinr_db, b.sinr_db)
        && f(a.worst_case_sinr_db, b.worst_case_sinr_db)
        && f(a.opt_bound_db, b.opt_bound_db)
        && a.iterations == b.iterations
        && f(a.cpu_ms, b.cpu_ms)
        && a.status == b.status
}

#[test]
fn csv_encoding_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let rows = vec![
        row(0.0, "3/2", 0, 1.0 / 3.0),
        row(10.0, "inf", 1, f64::NAN),
        ResultRow {
            status: RowStatus::SubproblemFailed,
            ..row(-5.5, "1", 2, -0.1)
        },
    ];
    emit_csv(&rows[..1], &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "snr_db,p,q,run,sinr_db,worst_case_sinr_db,opt_bound_db,iterations,cpu_ms,status"
    );
    assert!(lines[1].starts_with("0,inf,3/2,0,"), "{}", lines[1]);

    emit_csv(&rows, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert!(same(a, b), "{a:?} vs {b:?}");
    }
    assert!(emit_csv(&[], &path).is_err());
}

#[test]
fn svg_is_well_formed_with_one_polyline_per_series() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plot.svg");
    let rows = vec![row(0.0, "1", 0, 3.0), row(10.0, "1", 0, 8.0)];
    let report = emit_svg_lines(&rows, Metric::SinrDb, &path).unwrap();
    assert_eq!(report.drawn, vec!["p=inf, q=1".to_string()]);
    let text = std::fs::read_to_string(&path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let series: Vec<_> = doc
        .descendants()
        .filter(|n| n.has_tag_name("polyline") && n.attribute("class") == Some("series"))
        .collect();
    assert_eq!(series.len(), 1);
    let vertices = series[0]
        .attribute("points")
        .unwrap()
        .split_whitespace()
        .count();
    assert_eq!(vertices, 2);
    let texts: Vec<&str> = doc.descendants().filter_map(|n| n.text()).collect();
    assert!(texts.contains(&"SNR (dB)"));
    assert!(texts.contains(&"Output SINR (dB)"));
    assert!(texts.contains(&"p=inf, q=1"));
}

#[test]
fn empty_series_is_dropped_with_a_report() {
    let rows = vec![
        row(0.0, "1", 0, 3.0),
        row(0.0, "2", 0, f64::NAN),
        row(10.0, "2", 0, f64::NAN),
    ];
    let (svg, report) = render_svg(&rows, Metric::SinrDb);
    assert_eq!(report.skipped, vec!["p=inf, q=2".to_string()]);
    assert!(roxmltree::Document::parse(&svg).is_ok());
    let (cpu, report) = render_svg(&rows, Metric::CpuMs);
    assert!(report.skipped.is_empty());
    assert!(roxmltree::Document::parse(&cpu).is_ok());
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(
        r#"
        seed = 4
        runs = 3
        snr_list_db = [0, 20]
        pq_list = [["2", "1"], ["2", "inf"]]
        "#,
    )
    .unwrap()
}

fn without_timing(rows: &[ResultRow]) -> Vec<ResultRow> {
    rows.iter()
        .map(|r| ResultRow {
            cpu_ms: 0.0,
            ..r.clone()
        })
        .collect()
}

#[test]
fn experiment_is_deterministic_apart_from_timing() {
    let cfg = small_config();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.len(), 2 * 2 * 3);
    let (a, b) = (without_timing(&a), without_timing(&b));
    assert!(a.iter().zip(&b).all(|(x, y)| same(x, y)));

    let other = run_experiment(&ExperimentConfig { seed: 5, ..cfg }).unwrap();
    assert!(a
        .iter()
        .zip(&without_timing(&other))
        .any(|(x, y)| x.sinr_db != y.sinr_db));
}

#[test]
fn rows_respect_the_optimal_bound() {
    let rows = run_experiment(&small_config()).unwrap();
    for r in &rows {
        assert!(r.status.converged(), "{r:?}");
        assert!(r.sinr_db <= r.opt_bound_db + 1e-6, "{r:?}");
    }
    // Norm pairs at one cell share the sample covariance, hence the bound.
    let s = summarize(&rows);
    assert_eq!(s.len(), 4);
    assert_eq!(s[0].opt_bound_db, s[1].opt_bound_db);
}

#[test]
fn exact_model_orders_worst_case_below_actual() {
    let mut cfg = small_config();
    cfg.exact_covariance = true;
    cfg.runs = 1;
    cfg.scenario.signal_presumed = cfg.scenario.signal_true;
    for r in run_experiment(&cfg).unwrap() {
        assert!(r.worst_case_sinr_db <= r.sinr_db + 1e-6, "{r:?}");
        assert!(r.sinr_db <= r.opt_bound_db + 1e-6, "{r:?}");
    }
}

#[test]
fn cli_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        "runs = 1\nsnr_list_db = [10]\npq_list = [[\"2\", \"3/2\"]]\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let svg = dir.path().join("out.svg");
    let status = Command::new(env!("CARGO_BIN_EXE_robustbf-bench"))
        .args(["--threads", "1", "run", "--config"])
        .arg(&config)
        .arg("--out-csv")
        .arg(&csv)
        .arg("--out-svg")
        .arg(&svg)
        .args(["--seed", "11", "--runs", "2"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{status:?}");
    let rows = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.q == "3/2".parse().unwrap()));
    for path in [svg, dir.path().join("out_cpu.svg")] {
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(roxmltree::Document::parse(&text).is_ok());
    }
}

#[test]
fn cli_rejects_bad_config_and_paths() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "runs = 0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_robustbf-bench"))
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("runs"));

    std::fs::write(&config, "runs = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_robustbf-bench"))
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out-csv")
        .arg(dir.path().join("missing/dir/out.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn shipped_configs_load_and_run() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let reference = ExperimentConfig::load(&dir.join("reference.toml")).unwrap();
    let mut expected = ExperimentConfig::default();
    expected.output = reference.output.clone();
    assert_eq!(reference, expected);

    let mut sweep = ExperimentConfig::load(&dir.join("pq_sweep.toml")).unwrap();
    sweep.runs = 1;
    sweep.snr_list_db = vec![20.0];
    let rows = run_experiment(&sweep).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r.status.converged(), "{r:?}");
        assert!(r.sinr_db <= r.opt_bound_db + 1e-6);
    }
}

mod common;

use std::collections::BTreeMap;
use std::path::Path;

use clap::CommandFactory;
use common::*;
use fireline_cli::Cli;
use fireline_core::raster::GridGeometry;
use rand::Rng;
use sha2::{Digest, Sha256};

fn straight(id: &str, from: [f64; 2], to: [f64; 2], kv: Option<f64>) -> Line {
    Line {
        id: id.to_string(),
        coords: vec![from, to],
        kv,
    }
}

fn segments_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn risk_run(f: &Fixture, segments: &Path, metric: &str, extra: &[&str]) -> std::path::PathBuf {
    let vector = f.path(&format!("{metric}.csv"));
    let mut args = vec![
        "risk".to_string(),
        "--segments".into(),
        p(segments),
        "--raster-dir".into(),
        p(&f.rasters),
        "--metric".into(),
        metric.into(),
        "--table-out".into(),
        p(&f.path(&format!("{metric}_table.csv"))),
        "--vector-out".into(),
        p(&vector),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    run_ok(&args);
    vector
}

fn segment_run(f: &Fixture, interval: f64) -> std::path::PathBuf {
    let out = f.path(&format!("segments_{interval}.json"));
    run_ok(&[
        "segment",
        "--network",
        &p(&f.network),
        "--interval-km",
        &interval.to_string(),
        "--out",
        &p(&out),
    ]);
    out
}

#[test]
fn twenty_five_km_line_at_ten_km_gives_three_records() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.geojson");
    write_network(&net, &[straight("a", [0.0, 0.0], [25.0, 0.0], Some(115.0))]);
    let out = dir.path().join("seg.json");
    run_ok(&["segment", "--network", &p(&net), "--interval-km", "10", "--out", &p(&out)]);
    let doc = segments_json(&out);
    let segs = doc["segments"].as_array().unwrap();
    let lengths: Vec<f64> = segs.iter().map(|s| s["length_km"].as_f64().unwrap()).collect();
    assert_eq!(lengths.len(), 3);
    assert!((lengths[0] - 10.0).abs() < 1e-12 && (lengths[1] - 10.0).abs() < 1e-12);
    assert!((lengths[2] - 5.0).abs() < 1e-12);
    assert_eq!(segs[0]["segment_id"], "a/0");
    assert_eq!(segs[2]["parent_line_id"], "a");
    assert_eq!(segs[1]["voltage_kv"], 115.0);
    assert!(dir.path().join("seg.manifest.json").exists());
}

#[test]
fn zero_interval_keeps_one_record_per_line_and_length_is_conserved() {
    let f = Fixture::new(3, 12, 1);
    let whole = segments_json(&segment_run(&f, 0.0));
    let split = segments_json(&segment_run(&f, 2.5));
    let total = |d: &serde_json::Value| -> f64 {
        d["segments"].as_array().unwrap().iter().map(|s| s["length_km"].as_f64().unwrap()).sum()
    };
    assert_eq!(whole["segments"].as_array().unwrap().len(), 12);
    assert!(split["segments"].as_array().unwrap().len() > 12);
    assert!((total(&whole) - total(&split)).abs() <= 1e-9 * total(&whole));
}

#[test]
fn one_segment_one_scenario_gives_one_table_row() {
    let dir = tempfile::tempdir().unwrap();
    let g = km_grid(4, 4);
    let net = dir.path().join("net.geojson");
    write_network(&net, &[straight("a", [0.5, 0.5], [3.5, 0.5], Some(12.0))]);
    let rasters = dir.path().join("r");
    std::fs::create_dir(&rasters).unwrap();
    write_raster(&rasters.join("d1.asc"), g, (0..16).collect());
    let seg = dir.path().join("seg.json");
    run_ok(&["segment", "--network", &p(&net), "--out", &p(&seg)]);
    let (table, vector) = (dir.path().join("t.csv"), dir.path().join("v.csv"));
    run_ok(&[
        "risk", "--segments", &p(&seg), "--rasters", &p(&rasters.join("d1.asc")),
        "--table-out", &p(&table), "--vector-out", &p(&vector),
    ]);
    let t = read_csv(&table);
    assert_eq!(t.header, ["segment_id", "scenario_id", "value", "metric"]);
    assert_eq!(t.rows, [["a/0", "d1", "40.5", "cumulative"]]);
    // Bottom row holds 12..=15; half a cell of 12 and 15, whole cells of 13 and 14.
    let v = read_csv(&vector);
    assert_eq!(v.rows, [["a/0", "40.5", "scenario_sum"]]);
}

#[test]
fn threshold_vector_counts_days_at_or_above_the_pooled_75th_percentile() {
    let f = Fixture::new(5, 10, 6);
    let seg = segment_run(&f, 10.0);
    let vector = risk_run(&f, &seg, "threshold", &[]);
    let table = read_csv(&f.path("threshold_table.csv"));
    assert!(table.column("metric").iter().all(|m| m == "cumulative"));

    let values = table.floats("value");
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let tau = sorted[(0.75 * sorted.len() as f64).ceil() as usize - 1];
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for (id, v) in table.column("segment_id").into_iter().zip(values) {
        *counts.entry(id).or_default() += if v >= tau { 1.0 } else { 0.0 };
    }
    let v = read_csv(&vector);
    assert!(v.column("provenance").iter().all(|s| s == "threshold_count"));
    for (id, r) in v.column("segment_id").iter().zip(v.floats("R")) {
        assert_eq!(counts[id], r, "{id}");
    }
}

fn all_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_file() {
            out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap());
        }
    }
    out
}

fn full_pipeline(f: &Fixture) {
    let seg = segment_run(f, 5.0);
    let cum = risk_run(f, &seg, "cumulative", &["--kv-weighting"]);
    let max = risk_run(f, &seg, "maximum", &[]);
    run_ok(&[
        "optimize", "--segments", &p(&seg), "--risk", &p(&cum), "--budget", "80000000",
        "--plan-out", &p(&f.path("plan.csv")), "--geojson-out", &p(&f.path("plan.geojson")),
    ]);
    run_ok(&[
        "sweep", "--segments", &p(&seg), "--risk", &p(&cum), "--budget-steps", "8",
        "--out", &p(&f.path("sweep.csv")),
    ]);
    run_ok(&[
        "compare", "--segments", &p(&seg), "--vector", &format!("maximum={}", p(&max)),
        "--vector", &format!("cumulative={}", p(&cum)), "--budget", "80000000", "--out", &p(&f.path("cmp.txt")),
    ]);
}

#[test]
fn reruns_are_byte_identical() {
    let f = Fixture::new(8, 15, 4);
    full_pipeline(&f);
    let first = all_files(f.dir.path());
    assert!(first.len() >= 15, "{:?}", first.keys());
    full_pipeline(&f);
    assert_eq!(first, all_files(f.dir.path()));
}

#[test]
fn manifest_echoes_config_and_digests_inputs() {
    let f = Fixture::new(9, 6, 3);
    let seg = segment_run(&f, 0.0);
    let vector = risk_run(&f, &seg, "cumulative", &["--percentile", "80"]);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(f.path("cumulative.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["tool"], "fireline");
    assert_eq!(m["command"], "risk");
    assert_eq!(m["config"]["metric"]["percentile"], 80.0);
    assert_eq!(m["config"]["voltage"]["kv_threshold"], 69.0);
    let inputs = m["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 4);
    for input in inputs {
        let bytes = std::fs::read(input["path"].as_str().unwrap()).unwrap();
        assert_eq!(input["sha256"], hex::encode(Sha256::digest(&bytes)));
        assert_eq!(input["bytes"], bytes.len());
    }
    assert_eq!(m["outputs"][1], p(&vector));
}

#[test]
fn exit_codes_follow_the_documented_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| p(&dir.path().join(n));

    std::fs::write(dir.path().join("bad.geojson"), "{\"features\": 3}").unwrap();
    assert_eq!(run(&["segment", "--network", &d("bad.geojson"), "--out", &d("x.json")]), 2);
    assert_eq!(run(&["segment", "--network", &d("missing.geojson"), "--out", &d("x.json")]), 1);
    assert_eq!(run(&["segment", "--bogus-flag"]), 2);

    let net = dir.path().join("net.geojson");
    write_network(&net, &[straight("a", [0.5, 0.5], [2.5, 1.5], Some(12.0)), straight("b", [1.0, 3.0], [3.0, 3.0], None)]);
    run_ok(&["segment", "--network", &p(&net), "--out", &d("seg.json")]);

    let g = km_grid(4, 4);
    write_raster(&dir.path().join("d1.asc"), g, vec![10; 16]);
    write_raster(&dir.path().join("d2.asc"), GridGeometry { x_origin: 0.5, ..g }, vec![10; 16]);
    write_raster(&dir.path().join("d3.asc"), g, vec![200; 16]);
    let risk = |rasters: &[&str]| {
        let mut args = vec!["risk".to_string(), "--segments".into(), d("seg.json"), "--rasters".into()];
        args.extend(rasters.iter().map(|r| d(r)));
        args.extend(["--table-out".into(), d("t.csv"), "--vector-out".into(), d("v.csv")]);
        run(&args)
    };
    assert_eq!(risk(&["d1.asc", "d2.asc"]), 3);
    assert_eq!(risk(&["d1.asc", "d3.asc"]), 2);
    assert_eq!(risk(&["d1.asc"]), 0);

    let optimize = |vector: &str, budget: &str| {
        run(&[
            "optimize", "--segments", &d("seg.json"), "--risk", &d(vector), "--budget", budget, "--plan-out", &d("plan.csv"),
        ])
    };
    assert_eq!(optimize("v.csv", "-5"), 4);
    assert_eq!(optimize("v.csv", "1000000"), 0);
    std::fs::write(dir.path().join("other.csv"), "segment_id,R,provenance\na/0,1,scenario_sum\nc/0,2,scenario_sum\n").unwrap();
    assert_eq!(optimize("other.csv", "1000000"), 5);
    std::fs::write(dir.path().join("short.csv"), "segment_id,R,provenance\na/0,1,scenario_sum\n").unwrap();
    assert_eq!(optimize("short.csv", "1000000"), 5);

    let compare = |second: &str| {
        run(&[
            "compare", "--segments", &d("seg.json"), "--vector", &format!("maximum={}", d("v.csv")),
            "--vector", &format!("cumulative={}", d(second)), "--budget", "1000000", "--out", &d("cmp.txt"),
        ])
    };
    assert_eq!(compare("other.csv"), 5);
    assert_eq!(compare("v.csv"), 0);
}

#[test]
fn help_documents_defaults() {
    let mut cmd = Cli::command();
    let mut help = |name: &str| cmd.find_subcommand_mut(name).unwrap().render_long_help().to_string();
    let optimize = help("optimize");
    assert!(optimize.contains("[default: 2000000]"), "{optimize}");
    assert!(optimize.contains("[default: bb]"));
    let risk = help("risk");
    for default in ["[default: 69]", "[default: 3]", "[default: 75]", "[default: cumulative]", "[default: global]"] {
        assert!(risk.contains(default), "{default} missing from\n{risk}");
    }
}

fn optimize_run(f: &Fixture, seg: &Path, vector: &Path, budget: f64, extra: &[&str]) -> (CsvRows, BTreeMap<String, String>) {
    let plan = f.path("plan.csv");
    let mut args = vec![
        "optimize".to_string(),
        "--segments".into(),
        p(seg),
        "--risk".into(),
        p(vector),
        "--budget".into(),
        budget.to_string(),
        "--plan-out".into(),
        p(&plan),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    run_ok(&args);
    let summary = std::fs::read_to_string(f.path("plan.summary")).unwrap();
    (read_csv(&plan), key_values(&summary))
}

#[test]
fn budget_endpoints_select_nothing_or_everything() {
    let f = Fixture::new(11, 10, 3);
    let seg = segment_run(&f, 4.0);
    let vector = risk_run(&f, &seg, "cumulative", &[]);
    let geo = f.path("plan.geojson");

    let (plan, summary) = optimize_run(&f, &seg, &vector, 0.0, &["--geojson-out", &p(&geo)]);
    assert!(plan.column("selected").iter().all(|s| s == "false"));
    assert_eq!(summary["removed_risk"], "0");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&geo).unwrap()).unwrap();
    assert_eq!(doc["features"].as_array().unwrap().len(), 0);

    let total: f64 = plan.floats("cost_usd").iter().sum();
    let (plan, summary) = optimize_run(&f, &seg, &vector, total * 1.01, &["--geojson-out", &p(&geo), "--include-unselected"]);
    let risks = plan.floats("R");
    for (sel, r) in plan.column("selected").iter().zip(&risks) {
        assert_eq!(sel == "true", *r > 0.0);
    }
    assert_eq!(summary["residual_risk"], "0");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&geo).unwrap()).unwrap();
    let features = doc["features"].as_array().unwrap();
    assert_eq!(features.len(), risks.len());
    assert_eq!(features[0]["geometry"]["type"], "LineString");
}

/// Exhaustive search over the positive-risk items; ties go to the
/// lexicographically smallest index list.
fn exhaustive(risks: &[f64], costs: &[f64], budget: f64) -> Vec<usize> {
    let items: Vec<usize> = (0..risks.len()).filter(|&i| risks[i] > 0.0).collect();
    assert!(items.len() <= 22);
    let mut best: (f64, Vec<usize>) = (0.0, Vec::new());
    for mask in 0u32..(1 << items.len()) {
        let chosen: Vec<usize> = items.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect();
        let cost: f64 = chosen.iter().map(|&i| costs[i]).sum();
        if cost > budget {
            continue;
        }
        let value: f64 = chosen.iter().map(|&i| risks[i]).sum();
        if value > best.0 || (value == best.0 && chosen < best.1) {
            best = (value, chosen);
        }
    }
    best.1
}

#[test]
fn fifty_segment_plan_matches_exhaustive_search() {
    let dir = tempfile::tempdir().unwrap();
    let f = Fixture {
        network: dir.path().join("net.geojson"),
        rasters: dir.path().join("r"),
        dir,
    };
    let mut r = rng(50);
    let g = km_grid(40, 20);
    // Left half burns, right half is zero.
    let values = (0..g.ncols * g.nrows).map(|k| if k % g.ncols < 20 { r.gen_range(1..=150) } else { 0 }).collect();
    std::fs::create_dir(&f.rasters).unwrap();
    write_raster(&f.rasters.join("d.asc"), g, values);
    let lines: Vec<Line> = (0..50)
        .map(|i| {
            let x0 = if i % 5 < 2 { r.gen_range(0.5..14.0) } else { r.gen_range(21.0..34.0) };
            let a = [x0, r.gen_range(0.5..19.5)];
            let b = [a[0] + r.gen_range(0.3..5.0), r.gen_range(0.5..19.5)];
            straight(&format!("s{i:02}"), a, b, Some(69.0))
        })
        .collect();
    write_network(&f.network, &lines);
    let seg = segment_run(&f, 0.0);
    let vector = risk_run(&f, &seg, "cumulative", &[]);

    let v = read_csv(&vector);
    let risks = v.floats("R");
    assert_eq!(risks.iter().filter(|&&x| x > 0.0).count(), 20);
    let (plan, _) = optimize_run(&f, &seg, &vector, 0.0, &[]);
    let costs = plan.floats("cost_usd");
    let total: f64 = costs.iter().sum();
    for frac in [0.05, 0.15, 0.3] {
        let budget = (frac * total).round();
        let want = exhaustive(&risks, &costs, budget);
        let (plan, _) = optimize_run(&f, &seg, &vector, budget, &[]);
        let got: Vec<usize> = plan.column("selected").iter().enumerate().filter(|(_, s)| *s == "true").map(|(i, _)| i).collect();
        assert_eq!(got, want, "budget {budget}");
    }
}

#[test]
fn sweep_endpoints_and_monotonicity() {
    let f = Fixture::new(12, 8, 3);
    let seg = segment_run(&f, 3.0);
    let vector = risk_run(&f, &seg, "maximum", &[]);
    let total_r: f64 = read_csv(&vector).floats("R").iter().sum();
    let out = f.path("sweep.csv");
    run_ok(&["sweep", "--segments", &p(&seg), "--risk", &p(&vector), "--budget-steps", "12", "--out", &p(&out)]);
    let s = read_csv(&out);
    assert_eq!(s.header, ["budget_usd", "removed_risk", "residual_risk", "n_selected"]);
    let removed = s.floats("removed_risk");
    let residual = s.floats("residual_risk");
    assert_eq!(removed.len(), 13);
    assert_eq!(removed[0], 0.0);
    assert_eq!(s.column("n_selected")[0], "0");
    assert_eq!(*residual.last().unwrap(), 0.0);
    assert!((removed.last().unwrap() - total_r).abs() <= 1e-9 * total_r);
    assert!(removed.windows(2).all(|w| w[1] >= w[0]));

    let code = run(&["sweep", "--segments", &p(&seg), "--risk", &p(&vector), "--budgets", "5,3", "--out", &p(&out)]);
    assert_eq!(code, 4);
}

#[test]
fn finer_sweep_series_dominate() {
    let f = Fixture::new(13, 10, 4);
    let out = f.path("sweeps");
    run_ok(&[
        "sweep", "--network", &p(&f.network), "--intervals", "0,10,1", "--raster-dir", &p(&f.rasters),
        "--budget-steps", "15", "--out", &p(&out),
    ]);
    let series = |label: &str| read_csv(&out.join(format!("sweep_{label}.csv"))).floats("removed_risk");
    let (whole, ten, one) = (series("none"), series("10km"), series("1km"));
    for k in 0..whole.len() {
        let slack = 1e-9 * one[k].abs();
        assert!(one[k] + slack >= ten[k] && ten[k] + slack >= whole[k], "budget {k}: {} {} {}", one[k], ten[k], whole[k]);
    }
    assert!(one.iter().zip(&whole).any(|(a, b)| a > b));
    assert!(out.join("manifest.json").exists());
}

fn report_rows(text: &str) -> BTreeMap<String, Vec<String>> {
    text.lines()
        .filter_map(|l| {
            let label_end = l.find("  ")?;
            let label = l[..label_end].trim().to_string();
            let cells = l[label_end..].split_whitespace().map(str::to_string).collect();
            Some((label, cells))
        })
        .collect()
}

#[test]
fn compare_reductions_match_independent_recomputation() {
    let f = Fixture::new(21, 14, 5);
    let seg = segment_run(&f, 2.0);
    let metrics = ["maximum", "cumulative", "threshold"];
    let vectors: Vec<_> = metrics.iter().map(|m| risk_run(&f, &seg, m, &[])).collect();
    let budget = 150_000_000.0;

    let mut masks = Vec::new();
    for v in &vectors {
        let (plan, _) = optimize_run(&f, &seg, v, budget, &[]);
        masks.push(plan.column("selected").iter().map(|s| s == "true").collect::<Vec<_>>());
    }
    let mut args = vec!["compare".to_string(), "--segments".into(), p(&seg)];
    for (m, v) in metrics.iter().zip(&vectors) {
        args.extend(["--vector".to_string(), format!("{m}={}", p(v))]);
    }
    args.extend(["--budget".into(), budget.to_string(), "--out".into(), p(&f.path("cmp.txt"))]);
    run_ok(&args);
    let text = std::fs::read_to_string(f.path("cmp.txt")).unwrap();
    let rows = report_rows(&text);

    let n_sel: Vec<String> = masks.iter().map(|m| m.iter().filter(|&&b| b).count().to_string()).collect();
    assert_eq!(rows["Segments Upgraded"], n_sel);
    let names = ["Maximum", "Cumulative", "Threshold"];
    for (row, v) in vectors.iter().enumerate() {
        let r = read_csv(v).floats("R");
        let total: f64 = r.iter().sum();
        let want: Vec<String> = masks
            .iter()
            .map(|mask| {
                let removed: f64 = r.iter().zip(mask).filter(|(_, &s)| s).map(|(x, _)| x).sum();
                format!("{:.1}", 100.0 * removed / total)
            })
            .collect();
        assert_eq!(rows[&format!("{} Risk [% reduction]", names[row])], want, "{text}");
    }
    let common = (0..masks[0].len()).filter(|&i| masks.iter().all(|m| m[i])).count();
    assert!(text.contains(&format!("All plans: {common} (")), "{text}");
    let pair = (0..masks[0].len()).filter(|&i| masks[0][i] && masks[1][i]).count();
    assert!(text.contains(&format!("Maximum & Cumulative: {pair} (")), "{text}");
}

#[test]
fn identical_vectors_give_identical_columns() {
    let f = Fixture::new(22, 8, 3);
    let seg = segment_run(&f, 5.0);
    let v = p(&risk_run(&f, &seg, "cumulative", &[]));
    run_ok(&[
        "compare", "--segments", &p(&seg), "--vector", &format!("maximum={v}"), "--vector", &format!("cumulative={v}"),
        "--budget", "60000000", "--out", &p(&f.path("cmp.txt")),
    ]);
    let text = std::fs::read_to_string(f.path("cmp.txt")).unwrap();
    for (label, cells) in report_rows(&text) {
        if label.starts_with("Segments") || label.ends_with("reduction]") {
            assert_eq!(cells[0], cells[1], "{label}");
        }
    }
    assert!(text.contains("(100.0% of Maximum, 100.0% of Cumulative)"), "{text}");
}

#[test]
fn compare_report_matches_golden_file() {
    let f = Fixture::new(31, 12, 5);
    let out = f.path("report.txt");
    run_ok(&[
        "compare", "--network", &p(&f.network), "--interval-km", "1", "--raster-dir", &p(&f.rasters),
        "--budget", "120000000", "--out", &p(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/compare.txt");
    if std::env::var_os("FIRELINE_BLESS").is_some() {
        std::fs::write(&golden, &text).unwrap();
    }
    assert_eq!(text, std::fs::read_to_string(&golden).unwrap());
}

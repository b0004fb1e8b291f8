//! End-to-end checks of the `foi` binary: every subcommand runs against real
//! files, the bundled traces reproduce their recorded score chains through
//! the CLI, and identical inputs give byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use foi_core::fixtures::{crane_trace, dust_net_trace, TraceFixture};
use foi_core::formats::{read_frames, write_frames, ReadOptions};
use foi_core::store::ReferenceStore;

fn foi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_foi"))
}

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("foi-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn fixture_bytes(fixture: &TraceFixture) -> (Vec<u8>, Vec<u8>) {
    let mut frames = Vec::new();
    write_frames(&mut frames, &fixture.frames).unwrap();
    let mut store = Vec::new();
    fixture.store.save(&mut store).unwrap();
    (frames, store)
}

/// The committed fixture files are exactly what the in-crate builders
/// produce. Regenerate with REGEN_FIXTURES=1.
#[test]
fn bundled_fixture_files_match_the_builders() {
    let dir = fixtures_dir();
    let expected = [
        ("crane_frames.jsonl", "crane_store.jsonl", crane_trace().unwrap()),
        ("net_frames.jsonl", "net_store.jsonl", dust_net_trace().unwrap()),
    ];
    for (frames_name, store_name, fixture) in expected {
        let (frames, store) = fixture_bytes(&fixture);
        if std::env::var_os("REGEN_FIXTURES").is_some() {
            fs::create_dir_all(&dir).unwrap();
            fs::write(dir.join(frames_name), &frames).unwrap();
            fs::write(dir.join(store_name), &store).unwrap();
            continue;
        }
        assert_eq!(
            fs::read(dir.join(frames_name)).unwrap(),
            frames,
            "{frames_name} out of date; run with REGEN_FIXTURES=1"
        );
        assert_eq!(
            fs::read(dir.join(store_name)).unwrap(),
            store,
            "{store_name} out of date; run with REGEN_FIXTURES=1"
        );
    }
}

#[test]
fn build_store_appends_and_round_trips() {
    let dir = tempdir("build-store");
    let records = dir.join("records.jsonl");
    fs::write(
        &records,
        concat!(
            "{\"label\":\"crane vehicle\",\"source_path\":\"img/0.png\",\"embedding\":[1.0,0.0,0.0]}\n",
            "{\"index\":7,\"label\":\"dust-proof net\",\"source_path\":\"img/1.png\",\"embedding\":[0.0,1.0,0.0]}\n",
        ),
    )
    .unwrap();
    let out = dir.join("store.jsonl");
    let result = run(foi()
        .args(["build-store", "--records"])
        .arg(&records)
        .arg("--out")
        .arg(&out)
        .args(["--dim", "3"]));
    assert_success(&result);
    let store = ReferenceStore::load_path(&out).unwrap();
    assert_eq!(store.len(), 2);
    assert_eq!(store.records()[1].index, 7);

    // Extend the snapshot with a novel label.
    let more = dir.join("more.jsonl");
    fs::write(
        &more,
        "{\"label\":\"weather balloon\",\"source_path\":\"img/2.png\",\"embedding\":[0.0,0.0,1.0]}\n",
    )
    .unwrap();
    let extended = dir.join("extended.jsonl");
    let result = run(foi()
        .args(["build-store", "--records"])
        .arg(&more)
        .arg("--base")
        .arg(&out)
        .arg("--out")
        .arg(&extended));
    assert_success(&result);
    let store = ReferenceStore::load_path(&extended).unwrap();
    assert_eq!(store.len(), 3);
    assert_eq!(store.records()[2].label.as_str(), "weather balloon");
    assert_eq!(store.records()[2].index, 8);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn query_returns_ranked_matches() {
    let dir = tempdir("query");
    let embedding = dir.join("query.json");
    let mut values = vec![0.0f32; 16];
    values[0] = 2.5;
    fs::write(&embedding, serde_json::to_string(&values).unwrap()).unwrap();
    let result = run(foi()
        .args(["query", "--store"])
        .arg(fixtures_dir().join("crane_store.jsonl"))
        .arg("--embedding")
        .arg(&embedding)
        .args(["--k", "2"]));
    assert_success(&result);
    let lines: Vec<serde_json::Value> = String::from_utf8(result.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["label"], "crane vehicle");
    assert!((lines[0]["similarity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(lines[1]["label"], "dust-proof net");
    assert!(lines[1]["similarity"].as_f64().unwrap().abs() < 1e-9);
    fs::remove_dir_all(&dir).ok();
}

fn zone_flag(fixture: &TraceFixture) -> String {
    let b = &fixture.zone.bounds;
    format!("{}:{},{},{},{}", fixture.zone.name, b.x_min, b.y_min, b.x_max, b.y_max)
}

#[test]
fn track_emits_events_reports_and_diagnostics() {
    let fixture = dust_net_trace().unwrap();
    let dir = tempdir("track");
    let events = dir.join("events.jsonl");
    let reports = dir.join("reports.jsonl");
    let diagnostics = dir.join("diag.jsonl");
    let result = run(foi()
        .args(["track", "--frames"])
        .arg(fixtures_dir().join("net_frames.jsonl"))
        .arg("--store")
        .arg(fixtures_dir().join("net_store.jsonl"))
        .arg("--zone")
        .arg(zone_flag(&fixture))
        .arg("--out")
        .arg(&events)
        .arg("--reports")
        .arg(&reports)
        .arg("--diagnostics")
        .arg(&diagnostics));
    assert_success(&result);

    let event_lines: Vec<serde_json::Value> = fs::read_to_string(&events)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let entered: Vec<_> = event_lines
        .iter()
        .filter(|e| e["kind"] == "Entered")
        .collect();
    assert_eq!(entered.len(), 1);
    assert_eq!(entered[0]["label"], "dust-proof net");
    assert_eq!(entered[0]["zone"], "critical");

    let report_lines: Vec<serde_json::Value> = fs::read_to_string(&reports)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(report_lines.len(), 1);
    assert_eq!(report_lines[0]["final_label"], "dust-proof net");
    assert_eq!(report_lines[0]["votes"].as_array().unwrap().len(), 6);

    let diag_lines: Vec<serde_json::Value> = fs::read_to_string(&diagnostics)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(diag_lines.len(), 6);
    for line in &diag_lines[1..] {
        let assignments = line["assignments"].as_array().unwrap();
        assert_eq!(assignments.len(), 1);
        assert_eq!(assignments[0]["mode"], "Feature");
    }

    // Determinism: a second run writes byte-identical events and reports.
    let events2 = dir.join("events2.jsonl");
    let reports2 = dir.join("reports2.jsonl");
    let result = run(foi()
        .args(["track", "--frames"])
        .arg(fixtures_dir().join("net_frames.jsonl"))
        .arg("--store")
        .arg(fixtures_dir().join("net_store.jsonl"))
        .arg("--zone")
        .arg(zone_flag(&fixture))
        .arg("--out")
        .arg(&events2)
        .arg("--reports")
        .arg(&reports2));
    assert_success(&result);
    assert_eq!(fs::read(&events).unwrap(), fs::read(&events2).unwrap());
    assert_eq!(fs::read(&reports).unwrap(), fs::read(&reports2).unwrap());
    fs::remove_dir_all(&dir).ok();
}

/// Running the bundled traces with a single-embedding buffer makes each
/// frame's appearance score the consecutive-pair cosine, so the diagnostics
/// reproduce the recorded IoU and similarity chains to four decimal places.
#[test]
fn bundled_traces_reproduce_score_chains_to_four_decimals() {
    for (fixture, frames_file, store_file) in [
        (crane_trace().unwrap(), "crane_frames.jsonl", "crane_store.jsonl"),
        (dust_net_trace().unwrap(), "net_frames.jsonl", "net_store.jsonl"),
    ] {
        let dir = tempdir(&format!("fidelity-{}", frames_file));
        let diagnostics = dir.join("diag.jsonl");
        let result = run(foi()
            .args(["track", "--frames"])
            .arg(fixtures_dir().join(frames_file))
            .arg("--store")
            .arg(fixtures_dir().join(store_file))
            .args(["--buffer-size", "1"])
            .arg("--diagnostics")
            .arg(&diagnostics));
        assert_success(&result);
        let diag_lines: Vec<serde_json::Value> = fs::read_to_string(&diagnostics)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(diag_lines.len(), 6);
        for (i, line) in diag_lines[1..].iter().enumerate() {
            let assignment = &line["assignments"].as_array().unwrap()[0];
            let iou = assignment["iou"].as_f64().unwrap();
            let similarity = assignment["similarity"].as_f64().unwrap();
            assert!(
                (iou - fixture.iou_chain[i]).abs() < 5e-5,
                "{frames_file} transition {i}: iou {iou} vs {}",
                fixture.iou_chain[i]
            );
            assert!(
                (similarity - fixture.similarity_chain[i]).abs() < 5e-5,
                "{frames_file} transition {i}: similarity {similarity} vs {}",
                fixture.similarity_chain[i]
            );
        }
        fs::remove_dir_all(&dir).ok();
    }
}

#[test]
fn synth_is_byte_stable_and_parseable() {
    let dir = tempdir("synth");
    let mut outputs = Vec::new();
    for round in 0..2 {
        let frames = dir.join(format!("frames{round}.jsonl"));
        let gt = dir.join(format!("gt{round}.jsonl"));
        let store = dir.join(format!("store{round}.jsonl"));
        let diagnostics = dir.join(format!("diag{round}.jsonl"));
        let result = run(foi()
            .args(["synth", "--preset", "crossing3", "--seed", "5"])
            .arg("--out-frames")
            .arg(&frames)
            .arg("--out-gt")
            .arg(&gt)
            .arg("--out-store")
            .arg(&store)
            .arg("--diagnostics")
            .arg(&diagnostics));
        assert_success(&result);
        outputs.push((
            fs::read(&frames).unwrap(),
            fs::read(&gt).unwrap(),
            fs::read(&store).unwrap(),
            fs::read(&diagnostics).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);

    let lenient = ReadOptions {
        expected_dim: None,
        require_embedding: false,
    };
    let frames = read_frames(outputs[0].0.as_slice(), ReadOptions::default()).unwrap();
    let gt = read_frames(outputs[0].1.as_slice(), lenient).unwrap();
    assert_eq!(frames.len(), 120);
    assert_eq!(gt.len(), 120);
    assert!(gt[0].detections.iter().all(|d| d.gt_identity.is_some()));
    fs::remove_dir_all(&dir).ok();
}

/// The whole pipeline is deterministic: synth -> track -> eval with a fixed
/// seed produces byte-identical artifacts on every run.
#[test]
fn synth_track_eval_chain_is_byte_stable() {
    let dir = tempdir("chain");
    let mut artifacts: Vec<Vec<Vec<u8>>> = Vec::new();
    for round in 0..2 {
        let frames = dir.join(format!("frames{round}.jsonl"));
        let gt = dir.join(format!("gt{round}.jsonl"));
        let store = dir.join(format!("store{round}.jsonl"));
        let result = run(foi()
            .args(["synth", "--preset", "crossing3", "--seed", "9"])
            .arg("--out-frames")
            .arg(&frames)
            .arg("--out-gt")
            .arg(&gt)
            .arg("--out-store")
            .arg(&store));
        assert_success(&result);

        let events = dir.join(format!("events{round}.jsonl"));
        let reports = dir.join(format!("reports{round}.jsonl"));
        let result = run(foi()
            .args(["track", "--frames"])
            .arg(&frames)
            .arg("--store")
            .arg(&store)
            .args(["--zone", "critical:500,250,800,450"])
            .arg("--out")
            .arg(&events)
            .arg("--reports")
            .arg(&reports));
        assert_success(&result);

        // Predictions for eval: the ground truth with its labels exposed as
        // predicted labels.
        let pred = dir.join(format!("pred{round}.jsonl"));
        let text = fs::read_to_string(&gt)
            .unwrap()
            .replace("\"gt_label\"", "\"label\"");
        fs::write(&pred, text).unwrap();
        let eval_out = run(foi()
            .args(["eval", "--pred"])
            .arg(&pred)
            .arg("--gt")
            .arg(&gt)
            .args(["--iou", "0.5"]));
        assert_success(&eval_out);

        artifacts.push(vec![
            fs::read(&frames).unwrap(),
            fs::read(&gt).unwrap(),
            fs::read(&store).unwrap(),
            fs::read(&events).unwrap(),
            fs::read(&reports).unwrap(),
            eval_out.stdout.clone(),
        ]);
    }
    assert_eq!(artifacts[0], artifacts[1]);

    // Perfect predictions score perfectly.
    let summary: serde_json::Value =
        serde_json::from_str(String::from_utf8(artifacts[0][5].clone()).unwrap().trim()).unwrap();
    assert_eq!(summary["precision"].as_f64().unwrap(), 1.0);
    assert_eq!(summary["recall"].as_f64().unwrap(), 1.0);
    assert_eq!(summary["mean_ap"].as_f64().unwrap(), 1.0);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn eval_scores_predictions_against_ground_truth() {
    let dir = tempdir("eval");
    let gt = dir.join("gt.jsonl");
    fs::write(
        &gt,
        "{\"frame_index\":0,\"timestamp_ms\":0,\"detections\":[\
         {\"box\":[0,0,10,10],\"confidence\":1.0,\"gt_label\":\"crane vehicle\"},\
         {\"box\":[20,0,30,10],\"confidence\":1.0,\"gt_label\":\"crane vehicle\"}]}\n",
    )
    .unwrap();
    let pred = dir.join("pred.jsonl");
    fs::write(
        &pred,
        "{\"frame_index\":0,\"timestamp_ms\":0,\"detections\":[\
         {\"box\":[0,0,10,10],\"confidence\":0.95,\"label\":\"crane vehicle\"},\
         {\"box\":[1,0,11,10],\"confidence\":0.90,\"label\":\"crane vehicle\"},\
         {\"box\":[20,0,30,10],\"confidence\":0.85,\"label\":\"crane vehicle\"}]}\n",
    )
    .unwrap();
    let result = run(foi()
        .args(["eval", "--pred"])
        .arg(&pred)
        .arg("--gt")
        .arg(&gt)
        .args(["--iou", "0.5"]));
    assert_success(&result);
    let summary: serde_json::Value =
        serde_json::from_str(String::from_utf8(result.stdout).unwrap().trim()).unwrap();
    assert!((summary["precision"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
    assert_eq!(summary["recall"].as_f64().unwrap(), 1.0);
    assert!((summary["mean_ap"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-9);
    assert_eq!(summary["counts"]["true_positives"].as_u64().unwrap(), 2);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn bench_reports_the_measured_distribution() {
    let result = run(foi()
        .args(["bench", "--store"])
        .arg(fixtures_dir().join("crane_store.jsonl"))
        .args(["--queries", "300", "--seed", "11"]));
    assert_success(&result);
    let report: serde_json::Value =
        serde_json::from_str(String::from_utf8(result.stdout).unwrap().trim()).unwrap();
    assert_eq!(report["store_size"].as_u64().unwrap(), 2);
    assert_eq!(report["requested_queries"].as_u64().unwrap(), 300);
    assert_eq!(report["warmup_queries"].as_u64().unwrap(), 30);
    assert_eq!(report["measured_queries"].as_u64().unwrap(), 270);
    assert!(report["p50_ms"].as_f64().unwrap() <= report["p95_ms"].as_f64().unwrap());
}

#[test]
fn config_file_mirrors_flags_and_flags_win() {
    let dir = tempdir("config");
    let config = dir.join("bench.json");
    fs::write(
        &config,
        format!(
            "{{\"store\":{:?},\"queries\":50,\"seed\":2}}",
            fixtures_dir().join("crane_store.jsonl").to_str().unwrap()
        ),
    )
    .unwrap();
    // Config alone supplies everything.
    let result = run(foi().args(["bench", "--config"]).arg(&config));
    assert_success(&result);
    let report: serde_json::Value =
        serde_json::from_str(String::from_utf8(result.stdout).unwrap().trim()).unwrap();
    assert_eq!(report["requested_queries"].as_u64().unwrap(), 50);
    assert_eq!(report["seed"].as_u64().unwrap(), 2);

    // An explicit flag overrides the config value.
    let result = run(foi()
        .args(["bench", "--config"])
        .arg(&config)
        .args(["--queries", "80"]));
    assert_success(&result);
    let report: serde_json::Value =
        serde_json::from_str(String::from_utf8(result.stdout).unwrap().trim()).unwrap();
    assert_eq!(report["requested_queries"].as_u64().unwrap(), 80);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_distinguish_input_and_contract_errors() {
    // Unknown flag: usage on stderr, exit 1.
    let out = run(foi().args(["track", "--wat"]));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    // Missing input file: exit 1.
    let dir = tempdir("exit-codes");
    let embedding = dir.join("e.json");
    fs::write(&embedding, "[1.0, 0.0]").unwrap();
    let out = run(foi()
        .args(["query", "--store", "/nonexistent/store.jsonl", "--embedding"])
        .arg(&embedding));
    assert_eq!(out.status.code(), Some(1));

    // Contract violation (k = 0): exit 2.
    let out = run(foi()
        .args(["query", "--store"])
        .arg(fixtures_dir().join("crane_store.jsonl"))
        .arg("--embedding")
        .arg(&embedding)
        .args(["--k", "0"]));
    assert_eq!(out.status.code(), Some(2));

    // Help exits 0.
    let out = run(foi().arg("--help"));
    assert_eq!(out.status.code(), Some(0));
    fs::remove_dir_all(&dir).ok();
}

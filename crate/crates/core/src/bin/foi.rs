//! Command-line front end: build and query reference stores, track frame
//! streams with zone alerting, generate synthetic scenarios, score
//! predictions, and benchmark retrieval latency.
//!
//! Every subcommand accepts `--config FILE` pointing at a JSON object whose
//! keys mirror the long flags; explicit flags win over config values. Exit
//! codes: 0 on success, 1 on input errors, 2 on contract violations.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use foi_core::bench::bench_store;
use foi_core::embedding::{Embedding, DEFAULT_DIM};
use foi_core::error::{Error, Result};
use foi_core::formats::{self, FrameReader, ReadOptions};
use foi_core::geometry::{BoundingBox, Zone};
use foi_core::metrics::{DatasetEval, GtBox, PredBox};
use foi_core::pipeline::{Session, SessionConfig};
use foi_core::store::ReferenceStore;
use foi_core::synth::{self, ScenarioConfig};
use foi_core::taxonomy::ClassLabel;
use foi_core::tracker::TrackerConfig;

#[derive(Parser)]
#[command(name = "foi", version, about = "Foreign-object-intrusion tracking and identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or extend a reference store snapshot from record lines.
    BuildStore(BuildStoreArgs),
    /// Query a store for the nearest records to one embedding.
    Query(QueryArgs),
    /// Track a frame stream, classify tracks, and emit alerts and reports.
    Track(TrackArgs),
    /// Generate a synthetic scenario: frames, ground truth, and a store.
    Synth(SynthArgs),
    /// Score predictions against ground truth (P/R/F1 and mAP).
    Eval(EvalArgs),
    /// Measure per-query retrieval latency against a store.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BuildStoreArgs {
    /// JSONL records: {"label":..,"source_path":..,"embedding":[..]} with an
    /// optional explicit "index".
    #[arg(long)]
    records: Option<PathBuf>,
    /// Output snapshot path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Existing snapshot to extend instead of starting empty.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Embedding dimension when starting a fresh store.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BuildStoreFile {
    records: Option<PathBuf>,
    out: Option<PathBuf>,
    base: Option<PathBuf>,
    dim: Option<usize>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    /// JSON file holding one embedding as an array of numbers.
    #[arg(long)]
    embedding: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct QueryFile {
    store: Option<PathBuf>,
    embedding: Option<PathBuf>,
    k: Option<usize>,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(long)]
    store: Option<PathBuf>,
    /// Zone as "x_min,y_min,x_max,y_max" or "name:x_min,y_min,x_max,y_max";
    /// repeatable.
    #[arg(long = "zone")]
    zones: Vec<String>,
    /// Alert events (JSONL) destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Track reports (JSONL) destination.
    #[arg(long)]
    reports: Option<PathBuf>,
    /// Per-frame association diagnostics (JSONL) destination.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[arg(long)]
    iou_threshold: Option<f64>,
    #[arg(long)]
    feature_threshold: Option<f64>,
    #[arg(long)]
    max_misses: Option<u32>,
    #[arg(long)]
    buffer_size: Option<usize>,
    #[arg(long)]
    approach_window: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TrackFile {
    frames: Option<PathBuf>,
    store: Option<PathBuf>,
    zones: Option<Vec<String>>,
    out: Option<PathBuf>,
    reports: Option<PathBuf>,
    diagnostics: Option<PathBuf>,
    iou_threshold: Option<f64>,
    feature_threshold: Option<f64>,
    max_misses: Option<u32>,
    buffer_size: Option<usize>,
    approach_window: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario description (JSON). Mutually exclusive with --preset.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Built-in scenario name (currently "crossing3").
    #[arg(long)]
    preset: Option<String>,
    /// Seed override for presets and scenario files alike.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_frames: Option<PathBuf>,
    #[arg(long)]
    out_gt: Option<PathBuf>,
    #[arg(long)]
    out_store: Option<PathBuf>,
    /// Per-object consecutive-IoU diagnostics (JSONL) destination.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SynthFile {
    scenario: Option<PathBuf>,
    preset: Option<String>,
    seed: Option<u64>,
    out_frames: Option<PathBuf>,
    out_gt: Option<PathBuf>,
    out_store: Option<PathBuf>,
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted frames (detections carry "label" and "confidence").
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Ground-truth frames (detections carry "gt_label").
    #[arg(long)]
    gt: Option<PathBuf>,
    /// IoU matching threshold.
    #[arg(long)]
    iou: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct EvalFile {
    pred: Option<PathBuf>,
    gt: Option<PathBuf>,
    iou: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BenchFile {
    store: Option<PathBuf>,
    queries: Option<usize>,
    seed: Option<u64>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => {
                print!("{e}");
                std::process::exit(0);
            }
            _ => {
                eprint!("{e}");
                std::process::exit(1);
            }
        },
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(if err.is_input_error() { 1 } else { 2 });
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildStore(args) => build_store(args),
        Command::Query(args) => query(args),
        Command::Track(args) => track(args),
        Command::Synth(args) => synth_cmd(args),
        Command::Eval(args) => eval(args),
        Command::Bench(args) => bench(args),
    }
}

fn load_config<T: Default + for<'de> Deserialize<'de>>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| input(format!("bad config file: {e}")))
        }
    }
}

/// Input-shaped error (exit code 1).
fn input(message: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        message: message.into(),
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| input(format!("missing required --{flag} (flag or config)")))
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Deserialize)]
struct RawStoreRecord {
    index: Option<u64>,
    label: ClassLabel,
    #[serde(default)]
    source_path: String,
    embedding: Vec<f32>,
}

fn build_store(args: BuildStoreArgs) -> Result<()> {
    let file: BuildStoreFile = load_config(&args.config)?;
    let records_path = required(args.records.or(file.records), "records")?;
    let out_path = required(args.out.or(file.out), "out")?;
    let base = args.base.or(file.base);
    let dim = args.dim.or(file.dim);

    let mut store = match base {
        Some(path) => ReferenceStore::load_path(path)?,
        None => ReferenceStore::new(dim.unwrap_or(DEFAULT_DIM))?,
    };
    if let Some(dim) = dim {
        if dim != store.dim() {
            return Err(input(format!(
                "--dim {dim} conflicts with base store dimension {}",
                store.dim()
            )));
        }
    }
    let reader = open_reader(&records_path)?;
    let mut inserted = 0usize;
    for (offset, line) in reader.lines().enumerate() {
        let line_no = offset + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawStoreRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let embedding = Embedding::from_f32(&raw.embedding)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let outcome = match raw.index {
            Some(index) => store.insert_with_index(index, &embedding, raw.label, raw.source_path),
            None => store.insert(&embedding, raw.label, raw.source_path),
        };
        outcome.map_err(|e| Error::parse(line_no, e.to_string()))?;
        inserted += 1;
    }
    store.save_path(&out_path)?;
    eprintln!(
        "store: {} records (dim {}), {} inserted -> {}",
        store.len(),
        store.dim(),
        inserted,
        out_path.display()
    );
    Ok(())
}

fn query(args: QueryArgs) -> Result<()> {
    let file: QueryFile = load_config(&args.config)?;
    let store_path = required(args.store.or(file.store), "store")?;
    let embedding_path = required(args.embedding.or(file.embedding), "embedding")?;
    let k = args.k.or(file.k).unwrap_or(5);

    let store = ReferenceStore::load_path(store_path)?;
    let mut text = String::new();
    File::open(&embedding_path)?.read_to_string(&mut text)?;
    let values: Vec<f32> = serde_json::from_str(&text)
        .map_err(|e| input(format!("bad embedding file: {e}")))?;
    let query = Embedding::from_f32(&values)?;
    let matches = store.nearest(&query, k)?;
    let stdout = std::io::stdout();
    formats::write_jsonl(stdout.lock(), &matches)?;
    Ok(())
}

fn parse_zone(spec: &str, ordinal: usize) -> Result<Zone> {
    let (name, coords) = match spec.rsplit_once(':') {
        Some((name, coords)) if !name.is_empty() => (name.to_string(), coords),
        _ => (format!("zone{ordinal}"), spec),
    };
    let parts: Vec<&str> = coords.split(',').collect();
    if parts.len() != 4 {
        return Err(input(format!(
            "zone {spec:?} must be x_min,y_min,x_max,y_max with an optional name: prefix"
        )));
    }
    let mut values = [0.0f64; 4];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| input(format!("zone {spec:?}: {e}")))?;
    }
    let bounds = BoundingBox::new(values[0], values[1], values[2], values[3])?;
    Ok(Zone::new(name, bounds))
}

fn track(args: TrackArgs) -> Result<()> {
    let file: TrackFile = load_config(&args.config)?;
    let frames_path = required(args.frames.or(file.frames), "frames")?;
    let store_path = required(args.store.or(file.store), "store")?;
    let zone_specs = if args.zones.is_empty() {
        file.zones.unwrap_or_default()
    } else {
        args.zones
    };
    let out_path = args.out.or(file.out);
    let reports_path = args.reports.or(file.reports);
    let diagnostics_path = args.diagnostics.or(file.diagnostics);

    let defaults = TrackerConfig::default();
    let tracker = TrackerConfig {
        iou_threshold: args
            .iou_threshold
            .or(file.iou_threshold)
            .unwrap_or(defaults.iou_threshold),
        feature_threshold: args
            .feature_threshold
            .or(file.feature_threshold)
            .unwrap_or(defaults.feature_threshold),
        max_misses: args.max_misses.or(file.max_misses).unwrap_or(defaults.max_misses),
        buffer_size: args
            .buffer_size
            .or(file.buffer_size)
            .unwrap_or(defaults.buffer_size),
    };
    let zones = zone_specs
        .iter()
        .enumerate()
        .map(|(i, spec)| parse_zone(spec, i))
        .collect::<Result<Vec<_>>>()?;
    let config = SessionConfig {
        tracker,
        zones,
        approach_window: args
            .approach_window
            .or(file.approach_window)
            .unwrap_or_else(|| SessionConfig::default().approach_window),
        ..SessionConfig::default()
    };

    let store = ReferenceStore::load_path(store_path)?;
    let options = ReadOptions {
        expected_dim: Some(store.dim()),
        require_embedding: true,
    };
    let mut session = Session::new(store, config)?;

    let mut events = Vec::new();
    let mut diagnostics = Vec::new();
    let mut reader = FrameReader::new(open_reader(&frames_path)?, options);
    loop {
        let parse_started = Instant::now();
        let next = reader.next();
        let parse_spent = parse_started.elapsed();
        let frame = match next {
            None => break,
            Some(frame) => frame?,
        };
        session.add_parse_time(parse_spent);
        let step = session.process_frame(&frame)?;
        events.extend(step.alerts);
        if diagnostics_path.is_some() {
            diagnostics.push(step.result);
        }
    }

    if let Some(path) = &out_path {
        formats::write_jsonl(&mut create_writer(path)?, &events)?;
    }
    let reports = session.finalize();
    if let Some(path) = &reports_path {
        formats::write_jsonl(&mut create_writer(path)?, &reports)?;
    }
    if let Some(path) = &diagnostics_path {
        formats::write_jsonl(&mut create_writer(path)?, &diagnostics)?;
    }

    let stats = session.stats();
    let active = session.tracker().tracks().iter().filter(|t| t.is_active()).count();
    let ms = |d: std::time::Duration| d.as_secs_f64() * 1000.0;
    eprintln!(
        "tracked {} frames: {} tracks ({} active), {} events",
        stats.frames,
        reports.len(),
        active,
        events.len()
    );
    eprintln!(
        "stage ms (non-inference share): parse {:.3} associate {:.3} classify {:.3} alert {:.3} total {:.3}",
        ms(stats.parse),
        ms(stats.associate),
        ms(stats.classify),
        ms(stats.alert),
        ms(stats.total)
    );
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> Result<()> {
    let file: SynthFile = load_config(&args.config)?;
    let scenario_path = args.scenario.or(file.scenario);
    let preset = args.preset.or(file.preset);
    let seed = args.seed.or(file.seed);
    let out_frames = required(args.out_frames.or(file.out_frames), "out-frames")?;
    let out_gt = required(args.out_gt.or(file.out_gt), "out-gt")?;
    let out_store = required(args.out_store.or(file.out_store), "out-store")?;
    let diagnostics_path = args.diagnostics.or(file.diagnostics);

    let mut scenario_config = match (scenario_path, preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<ScenarioConfig>(&text)
                .map_err(|e| input(format!("bad scenario file: {e}")))?
        }
        (None, Some(name)) => match name.as_str() {
            "crossing3" => ScenarioConfig::crossing(seed.unwrap_or(0)),
            other => return Err(input(format!("unknown preset {other:?}"))),
        },
        (None, None) => return Err(input("either --scenario or --preset is required")),
        (Some(_), Some(_)) => {
            return Err(input("--scenario and --preset are mutually exclusive"))
        }
    };
    if let Some(seed) = seed {
        scenario_config.seed = seed;
    }

    let scenario = synth::generate(&scenario_config)?;
    formats::write_frames(&mut create_writer(&out_frames)?, &scenario.frames)?;
    formats::write_frames(&mut create_writer(&out_gt)?, &scenario.ground_truth)?;
    scenario.store.save_path(&out_store)?;
    if let Some(path) = &diagnostics_path {
        #[derive(serde::Serialize)]
        struct ObjectIous<'a> {
            object: usize,
            label: &'a str,
            ious: &'a [Option<f64>],
        }
        let rows: Vec<ObjectIous> = scenario
            .object_ious
            .iter()
            .enumerate()
            .map(|(i, ious)| ObjectIous {
                object: i,
                label: &scenario_config.objects[i].label,
                ious,
            })
            .collect();
        formats::write_jsonl(&mut create_writer(path)?, &rows)?;
    }
    for warning in &scenario.warnings {
        eprintln!("warning: {warning}");
    }
    eprintln!(
        "synthesized {} frames, {} objects, store of {} records (seed {})",
        scenario.frames.len(),
        scenario_config.objects.len(),
        scenario.store.len(),
        scenario_config.seed
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let file: EvalFile = load_config(&args.config)?;
    let pred_path = required(args.pred.or(file.pred), "pred")?;
    let gt_path = required(args.gt.or(file.gt), "gt")?;
    let iou_threshold = args.iou.or(file.iou).unwrap_or(0.5);

    let lenient = ReadOptions {
        expected_dim: None,
        require_embedding: false,
    };
    let pred_frames = formats::read_frames(open_reader(&pred_path)?, lenient)?;
    let gt_frames = formats::read_frames(open_reader(&gt_path)?, lenient)?;

    use std::collections::BTreeMap;
    let mut by_frame: BTreeMap<u64, (Vec<PredBox>, Vec<GtBox>)> = BTreeMap::new();
    for frame in &pred_frames {
        let slot = &mut by_frame.entry(frame.frame_index).or_default().0;
        for (i, det) in frame.detections.iter().enumerate() {
            let label = det.label.clone().ok_or_else(|| {
                input(format!(
                    "prediction {} at frame {} has no \"label\"",
                    i, frame.frame_index
                ))
            })?;
            slot.push(PredBox {
                bbox: det.bbox,
                label,
                confidence: det.confidence,
            });
        }
    }
    for frame in &gt_frames {
        let slot = &mut by_frame.entry(frame.frame_index).or_default().1;
        for (i, det) in frame.detections.iter().enumerate() {
            let label = det.gt_label.clone().ok_or_else(|| {
                input(format!(
                    "ground truth {} at frame {} has no \"gt_label\"",
                    i, frame.frame_index
                ))
            })?;
            slot.push(GtBox {
                bbox: det.bbox,
                label,
            });
        }
    }

    let mut eval = DatasetEval::default();
    for (preds, gts) in by_frame.values() {
        eval.add_image(preds, gts, iou_threshold)?;
    }
    let summary = eval.summary();
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let file: BenchFile = load_config(&args.config)?;
    let store_path = required(args.store.or(file.store), "store")?;
    let queries = args.queries.or(file.queries).unwrap_or(12_000);
    let seed = args.seed.or(file.seed).unwrap_or(7);

    let store = ReferenceStore::load_path(store_path)?;
    let report = bench_store(&store, queries, seed)?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    eprintln!(
        "store {} x dim {}: p50 {:.4} ms, p95 {:.4} ms, max {:.4} ms over {} measured queries",
        report.store_size,
        report.dim,
        report.p50_ms,
        report.p95_ms,
        report.max_ms,
        report.measured_queries
    );
    Ok(())
}

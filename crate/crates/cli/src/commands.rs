use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use motif::affordance::{
    build_affordance, filter_grasps, run_denoise, DenoiseReport, GraspCandidate, GraspRecord, Rejection,
};
use motif::cloud::{read_ply, write_ply, write_ply_string, PointCloud};
use motif::dataset::{
    read_features_file, read_trace_dir, write_features, write_frames, write_trace_dir, TraceMeta, TRACE_COLUMNS,
};
use motif::features::{batch_extract, FeatureTable, FlickTrace, ImuSample, FEATURE_NAMES};
use motif::lda::{confidence_ellipse, fit, leave_one_out, ConfidenceEllipse, LdaModel};
use motif::projection::{colorize_thermal, paint_thermal, CameraFile, CameraModel, DepthImage, ThermalImage};
use motif::raster::read_pgm;
use motif::synth::{gen_cylinder, gen_flick, CylinderScene, FlickModel, FLICK_MASSES};
use motif::wire::{decode_stream, SensorFrame};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::{Cli, Command, DecodeArgs, LdaCommand, PipelineCommand, SynthCommand, ThermalInputs};

const ELLIPSE_COVERAGE: f64 = 0.95;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(cli.config.as_deref())?;
    let out = Output { json: cli.json };
    match cli.command {
        Command::Decode(args) => decode(&args, &out),
        Command::Paint(args) => {
            let (painted, report) = paint(&args.inputs, &cfg)?;
            write_cloud(&args.output, &painted)?;
            out.report(&report, || format!("painted {} of {} points", report.painted, report.points))
        }
        Command::Denoise(args) => {
            let cloud = load_cloud(&args.input)?;
            let (clean, report) = run_denoise(&cloud, &cfg.denoise).map_err(|e| CliError::core(args.input.display(), e))?;
            match &args.output {
                Some(path) => write_cloud(path, &clean)?,
                None => write_stdout(write_ply_string(&clean).as_bytes())?,
            }
            if let Some(path) = &args.report {
                write_json(path, &report)?;
            }
            let summary = || {
                format!(
                    "boundary at slice {} (h = {:.4} m, {}), {} anomalies replaced",
                    report.boundary_slice,
                    report.boundary_height,
                    if report.qualified { "qualified" } else { "low confidence" },
                    report.anomaly_count
                )
            };
            // PLY on stdout leaves no room for a JSON report there.
            if args.output.is_none() {
                eprintln!("{}", summary());
                Ok(())
            } else {
                out.report(&report, summary)
            }
        }
        Command::FilterGrasps(args) => {
            let cloud = load_cloud(&args.cloud)?;
            let records: Vec<GraspRecord> = read_json(&args.grasps)?;
            let radius = args.radius.unwrap_or(cfg.grasp.safety_radius);
            let (kept, report) = filter(&cloud, &records, &args.grasps, radius, cfg.grasp.hot_threshold)?;
            write_json(&args.output, &kept)?;
            out.report(&report, || format!("kept {} of {} grasp candidates", report.kept.len(), report.candidates))
        }
        Command::Features(args) => {
            let loaded = read_trace_dir(&args.traces, cfg.stream.tick_interval_us)
                .map_err(|e| CliError::core(args.traces.display(), e))?;
            let fills: usize = loaded.iter().map(|l| l.fills).sum();
            let traces: Vec<FlickTrace> = loaded.into_iter().map(|l| l.trace).collect();
            let table = extract(&traces, &cfg, &args.traces)?;
            write_table(&args.output, &table)?;
            let report = FeaturesReport { traces: table.len(), features: FEATURE_NAMES.len(), filled_ticks: fills };
            out.report(&report, || format!("{} traces, {} held ticks", report.traces, fills))
        }
        Command::Lda(cmd) => lda(cmd, &cfg, &out),
        Command::Synth(cmd) => synth(cmd, &cfg, &out),
        Command::Pipeline(PipelineCommand::Thermal { inputs, grasps, out_dir }) => {
            let report = thermal_pipeline(&inputs, &grasps, &out_dir, &cfg)?;
            print_json(&report)
        }
        Command::Pipeline(PipelineCommand::Flick { synth, seed, traces, out_dir }) => {
            let (traces, source) = if synth {
                let seed = seed.expect("clap requires --seed with --synth");
                (synth_flicks(seed, cfg.synth.trials_per_mass, &cfg), FlickSource::Synthetic { seed })
            } else {
                let dir = traces.expect("clap requires --traces without --synth");
                let loaded =
                    read_trace_dir(&dir, cfg.stream.tick_interval_us).map_err(|e| CliError::core(dir.display(), e))?;
                (loaded.into_iter().map(|l| l.trace).collect(), FlickSource::Traces { dir })
            };
            let table = extract(&traces, &cfg, Path::new("traces"))?;
            let (model, report) = flick_report(&table, &cfg, Some(source))?;
            if let Some(dir) = out_dir {
                create_dir(&dir)?;
                write_table(&dir.join("features.csv"), &table)?;
                write_json(&dir.join("model.json"), &model)?;
                write_json(&dir.join("report.json"), &report)?;
            }
            print_json(&report)
        }
    }
}

/// Where reports go: JSON on stdout with `--json`, otherwise a one-line
/// summary on stderr.
struct Output {
    json: bool,
}

impl Output {
    fn report<T: Serialize>(&self, report: &T, summary: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.json {
            print_json(report)
        } else {
            eprintln!("{}", summary());
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct DecodeReport {
    frames: usize,
    dropped: usize,
    /// Frame count per unit id.
    units: BTreeMap<u8, usize>,
}

fn decode(args: &DecodeArgs, out: &Output) -> Result<(), CliError> {
    let bytes = std::fs::read(&args.input).map_err(|source| CliError::Io { path: args.input.clone(), source })?;
    let stream = decode_stream(&bytes);
    let mut units = BTreeMap::new();
    for f in &stream.frames {
        *units.entry(f.unit_id).or_insert(0) += 1;
    }
    let frames: Vec<_> = stream.frames.into_iter().filter(|f| args.unit.is_none_or(|u| f.unit_id == u)).collect();
    match args.trigger_us {
        // Raw timestamps are kept; windowing happens when the trace is read.
        Some(trigger) => write_raw_trace(&args.output, &frames, trigger, args.label.clone())?,
        None => {
            let file = create_file(&args.output)?;
            write_frames(file, &frames).map_err(|e| csv_error(&args.output, e))?;
        }
    }
    let report = DecodeReport { frames: frames.len(), dropped: stream.dropped, units };
    out.report(&report, || format!("decoded {} frames, dropped {} corrupt messages", report.frames, report.dropped))
}

fn write_raw_trace(path: &Path, frames: &[SensorFrame], trigger_us: i64, label: Option<String>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create_file(path)?);
    w.write_record(TRACE_COLUMNS).map_err(|e| csv_error(path, e))?;
    for f in frames {
        let s = ImuSample::from(f);
        let mut rec = vec![f.timestamp_us.to_string()];
        rec.extend(s.acc.iter().chain(&s.gyro).chain(&s.mag).map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    write_json(&path.with_extension("json"), &TraceMeta { trigger_us, label })
}

#[derive(Debug, Serialize)]
struct PaintReport {
    points: usize,
    painted: usize,
    /// Temperatures mapped to the cold and hot ends of the color ramp.
    range: [f64; 2],
}

fn paint(inputs: &ThermalInputs, cfg: &PipelineConfig) -> Result<(PointCloud, PaintReport), CliError> {
    let cloud = load_cloud(&inputs.cloud)?;
    let cam_file: CameraFile = read_json(&inputs.camera)?;
    let cam = CameraModel::try_from(cam_file).map_err(|e| CliError::core(inputs.camera.display(), e))?;
    let thermal = read_pgm(&inputs.thermal)
        .map_err(|e| CliError::core(inputs.thermal.display(), e))
        .and_then(|r| ThermalImage::new(r).map_err(|e| CliError::core(inputs.thermal.display(), e)))?;
    let depth = read_pgm(&inputs.depth)
        .map_err(|e| CliError::core(inputs.depth.display(), e))
        .and_then(|r| DepthImage::new(r).map_err(|e| CliError::core(inputs.depth.display(), e)))?;
    let painted = paint_thermal(&cloud, &cam, &thermal, &depth, cfg.projection.depth_tolerance)
        .map_err(|e| CliError::core(inputs.cloud.display(), e))?;
    let (lo, hi) = match &inputs.range {
        Some(r) => (r[0], r[1]),
        None => thermal.range(),
    };
    if !(lo < hi) {
        return Err(CliError::Invalid(format!("temperature range [{lo}, {hi}] is empty")));
    }
    let colored = colorize_thermal(&painted, lo, hi);
    let report = PaintReport {
        points: colored.len(),
        painted: colored.points.iter().filter(|p| p.thermal_raw.is_some()).count(),
        range: [lo, hi],
    };
    Ok((colored, report))
}

#[derive(Debug, Serialize)]
struct FilterReport {
    candidates: usize,
    hot_points: usize,
    safety_radius: f64,
    kept: Vec<usize>,
    rejected: Vec<Rejection>,
}

fn filter(
    cloud: &PointCloud,
    records: &[GraspRecord],
    source: &Path,
    radius: f64,
    hot_threshold: f64,
) -> Result<(Vec<GraspRecord>, FilterReport), CliError> {
    if !(radius >= 0.0) {
        return Err(CliError::Invalid(format!("safety radius must be non-negative, got {radius}")));
    }
    let candidates = records
        .iter()
        .enumerate()
        .map(|(i, r)| GraspCandidate::try_from(r).map_err(|e| CliError::core(format!("{} candidate {i}", source.display()), e)))
        .collect::<Result<Vec<_>, _>>()?;
    let map = build_affordance(cloud, hot_threshold).map_err(|e| CliError::core("affordance map", e))?;
    let result = filter_grasps(&candidates, &map, radius);
    let kept = result.kept.iter().map(|&i| records[i].clone()).collect();
    let report = FilterReport {
        candidates: candidates.len(),
        hot_points: map.hot_indices.len(),
        safety_radius: radius,
        kept: result.kept,
        rejected: result.rejected,
    };
    Ok((kept, report))
}

#[derive(Debug, Serialize)]
struct ThermalReport {
    paint: PaintReport,
    denoise: DenoiseReport,
    filter: FilterReport,
}

fn thermal_pipeline(inputs: &ThermalInputs, grasps: &Path, out_dir: &Path, cfg: &PipelineConfig) -> Result<ThermalReport, CliError> {
    let records: Vec<GraspRecord> = read_json(grasps)?;
    let (painted, paint_report) = paint(inputs, cfg)?;
    let (clean, denoise_report) = run_denoise(&painted, &cfg.denoise).map_err(|e| CliError::core("painted cloud", e))?;
    let (kept, filter_report) = filter(&clean, &records, grasps, cfg.grasp.safety_radius, cfg.grasp.hot_threshold)?;
    create_dir(out_dir)?;
    write_cloud(&out_dir.join("painted.ply"), &painted)?;
    write_cloud(&out_dir.join("denoised.ply"), &clean)?;
    write_json(&out_dir.join("grasps.json"), &kept)?;
    let report = ThermalReport { paint: paint_report, denoise: denoise_report, filter: filter_report };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Serialize)]
struct FeaturesReport {
    traces: usize,
    features: usize,
    filled_ticks: usize,
}

fn extract(traces: &[FlickTrace], cfg: &PipelineConfig, source: &Path) -> Result<FeatureTable, CliError> {
    batch_extract(traces, cfg.lda.std_divisor).map_err(|e| CliError::core(source.display(), e))
}

fn feature_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum FlickSource {
    Synthetic { seed: u64 },
    Traces { dir: PathBuf },
    Features { file: PathBuf },
}

#[derive(Debug, Serialize)]
struct ClassSummary {
    label: String,
    count: usize,
    /// Class centroid in discriminant coordinates.
    centroid: Vec<f64>,
    /// 95% coverage ellipse in the LD1/LD2 plane, when defined.
    ellipse: Option<ConfidenceEllipse>,
}

#[derive(Debug, Serialize)]
struct FlickReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<FlickSource>,
    samples: usize,
    class_labels: Vec<String>,
    explained_variance: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Leave-one-out nearest-centroid accuracy.
    accuracy: f64,
    /// `confusion[true][predicted]`, rows and columns in `class_labels` order.
    confusion: Vec<Vec<usize>>,
    classes: Vec<ClassSummary>,
    /// Five strongest standardized-feature weights per direction.
    top_features: Vec<Vec<(String, f64)>>,
}

fn flick_report(table: &FeatureTable, cfg: &PipelineConfig, source: Option<FlickSource>) -> Result<(LdaModel, FlickReport), CliError> {
    let x = table.matrix();
    let names = feature_names();
    let model = fit(&x, &table.labels, &names, &cfg.lda.lda()).map_err(|e| CliError::core("lda fit", e))?;
    let loo = leave_one_out(&x, &table.labels, &names, &cfg.lda.lda()).map_err(|e| CliError::core("leave-one-out", e))?;
    let projected = model.project(&x).map_err(|e| CliError::core("lda project", e))?;
    let classes = model
        .class_labels
        .iter()
        .zip(&model.projected_centroids)
        .map(|(label, centroid)| {
            let pts: Vec<[f64; 2]> = (0..x.nrows())
                .filter(|&r| &table.labels[r] == label)
                .map(|r| [projected[(r, 0)], projected.ncols().gt(&1).then(|| projected[(r, 1)]).unwrap_or(0.0)])
                .collect();
            ClassSummary {
                label: label.clone(),
                count: pts.len(),
                centroid: centroid.clone(),
                ellipse: confidence_ellipse(&pts, ELLIPSE_COVERAGE).ok(),
            }
        })
        .collect();
    let top_features = model.feature_contributions().into_iter().map(|mut c| {
        c.truncate(5);
        c
    });
    let report = FlickReport {
        source,
        samples: table.len(),
        class_labels: loo.class_labels,
        explained_variance: model.explained_variance.clone(),
        eigenvalues: model.eigenvalues.clone(),
        accuracy: loo.accuracy,
        confusion: loo.confusion,
        classes,
        top_features: top_features.collect(),
    };
    Ok((model, report))
}

#[derive(Debug, Serialize)]
struct FitReport {
    class_labels: Vec<String>,
    explained_variance: Vec<f64>,
    eigenvalues: Vec<f64>,
    ridge: f64,
}

#[derive(Debug, Serialize)]
struct ClassifyReport {
    rows: usize,
    /// Share of labeled rows classified correctly, when labels are present.
    accuracy: Option<f64>,
}

fn lda(cmd: LdaCommand, cfg: &PipelineConfig, out: &Output) -> Result<(), CliError> {
    match cmd {
        LdaCommand::Fit { features, output } => {
            let table = read_features_file(&features).map_err(|e| CliError::core(features.display(), e))?;
            let model =
                fit(&table.matrix(), &table.labels, &feature_names(), &cfg.lda.lda()).map_err(|e| CliError::core(features.display(), e))?;
            write_json(&output, &model)?;
            let report = FitReport {
                class_labels: model.class_labels.clone(),
                explained_variance: model.explained_variance.clone(),
                eigenvalues: model.eigenvalues.clone(),
                ridge: model.ridge,
            };
            out.report(&report, || {
                let pct: Vec<String> = report.explained_variance.iter().map(|v| format!("{:.1}%", 100.0 * v)).collect();
                format!("{} classes, explained variance {}", report.class_labels.len(), pct.join(" / "))
            })
        }
        LdaCommand::Classify { model, features, output } => {
            let m: LdaModel = read_json(&model)?;
            m.validate().map_err(|e| CliError::core(model.display(), e))?;
            let table = read_features_file(&features).map_err(|e| CliError::core(features.display(), e))?;
            let mut w = csv::Writer::from_writer(create_file(&output)?);
            let mut header = vec!["row".to_string(), "predicted".to_string(), "label".to_string()];
            header.extend((1..=m.n_directions()).map(|i| format!("LD{i}")));
            w.write_record(&header).map_err(|e| csv_error(&output, e))?;
            let (mut labeled, mut correct) = (0, 0);
            for (i, row) in table.rows.iter().enumerate() {
                let c = m.classify(row).map_err(|e| CliError::core(format!("{} row {i}", features.display()), e))?;
                let truth = table.labels.get(i).cloned().unwrap_or_default();
                if !truth.is_empty() {
                    labeled += 1;
                    correct += usize::from(truth == c.label);
                }
                let mut rec = vec![i.to_string(), c.label, truth];
                rec.extend(c.projected.iter().map(|v| v.to_string()));
                w.write_record(&rec).map_err(|e| csv_error(&output, e))?;
            }
            w.flush().map_err(|source| CliError::Io { path: output.clone(), source })?;
            let report = ClassifyReport { rows: table.len(), accuracy: (labeled > 0).then(|| correct as f64 / labeled as f64) };
            out.report(&report, || match report.accuracy {
                Some(a) => format!("classified {} rows, {:.1}% of labeled rows correct", report.rows, 100.0 * a),
                None => format!("classified {} rows", report.rows),
            })
        }
        LdaCommand::Report { features } => {
            let table = read_features_file(&features).map_err(|e| CliError::core(features.display(), e))?;
            let (_, report) = flick_report(&table, cfg, Some(FlickSource::Features { file: features }))?;
            print_json(&report)
        }
    }
}

fn synth_flicks(seed: u64, trials: usize, cfg: &PipelineConfig) -> Vec<FlickTrace> {
    FLICK_MASSES
        .iter()
        .flat_map(|&m| {
            let model = FlickModel { trial_jitter: cfg.synth.trial_jitter, ..FlickModel::for_mass(m, seed) };
            gen_flick(&model, trials)
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct FlicksReport {
    seed: u64,
    traces: usize,
    files: Vec<PathBuf>,
}

fn synth(cmd: SynthCommand, cfg: &PipelineConfig, out: &Output) -> Result<(), CliError> {
    match cmd {
        SynthCommand::Cylinder { output, seed, anomalies, truth } => {
            let scene = CylinderScene {
                seed,
                anomaly_count: anomalies.unwrap_or(cfg.synth.cylinder.anomaly_count),
                ..cfg.synth.cylinder.clone()
            };
            let (cloud, t) = gen_cylinder(&scene).map_err(|e| CliError::core("synth cylinder", e))?;
            write_cloud(&output, &cloud)?;
            if let Some(path) = truth {
                write_json(&path, &t)?;
            }
            out.report(&t, || format!("{} points, {} anomalies", cloud.len(), t.anomaly_indices.len()))
        }
        SynthCommand::Flicks { output, seed, trials } => {
            let traces = synth_flicks(seed, trials.unwrap_or(cfg.synth.trials_per_mass), cfg);
            let files = write_trace_dir(&output, &traces).map_err(|e| CliError::core(output.display(), e))?;
            let report = FlicksReport { seed, traces: traces.len(), files };
            out.report(&report, || format!("wrote {} traces to {}", report.traces, output.display()))
        }
    }
}

fn load_cloud(path: &Path) -> Result<PointCloud, CliError> {
    read_ply(path).map_err(|e| CliError::core(path.display(), e))
}

fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<(), CliError> {
    write_ply(path, cloud).map_err(|e| CliError::core(path.display(), e))
}

fn write_table(path: &Path, table: &FeatureTable) -> Result<(), CliError> {
    write_features(create_file(path)?, table).map_err(|e| csv_error(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json { path: "<stdout>".into(), source })?;
    text.push('\n');
    write_stdout(text.as_bytes())
}

fn write_stdout(bytes: &[u8]) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(bytes)
        .and_then(|()| stdout.flush())
        .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
}

fn create_file(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::create(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { path: path.to_path_buf(), source },
        other => CliError::Invalid(format!("{}: {other:?}", path.display())),
    }
}

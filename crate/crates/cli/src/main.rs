use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use wbsc::bench::{self, ExperimentConfig, TrialOutcome};
use wbsc::classify::{ClassifierKind, Dataset, TrainedModel};
use wbsc::features::{attach_labels, spectrum_features, FeatureVector};
use wbsc::frontend::{acquire, build_sensing_matrix, prefilter, BandPass};
use wbsc::io;
use wbsc::recovery::{solve, RecoveryOperator, SolveDiagnostics, SolverKind};
use wbsc::scene::{add_awgn, compose_scene, random_scene, WidebandScene};
use wbsc::{seed, Error, Result};

#[derive(Parser)]
#[command(name = "wbsc", version, about = "Compressive wide-band sensing and modulation classification")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (JSON). Missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true)]
    solver: Option<SolverKind>,
    /// Restricts sweeps to one classifier; selects the model for `train`.
    #[arg(long, global = true)]
    classifier: Option<ClassifierKind>,
    /// Worker threads. Defaults to one per core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random scene and write its time series.
    Synth {
        /// Add white noise at this SNR; noiseless when omitted.
        #[arg(long, allow_negative_numbers = true)]
        snr: Option<f64>,
    },
    /// Compress a time series and recover its spectrum.
    Recover {
        /// I/Q file written by `synth`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
    },
    /// Segment a recovered spectrum into per-emitter features.
    Features {
        /// Spectrum file written by `recover`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Scene description used to label the rows.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Train a classifier on feature files, or on freshly simulated trials.
    Train {
        #[arg(long)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        snr: f64,
    },
    /// Score a trained model on feature files, or on freshly simulated trials.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        snr: f64,
    },
    /// Classification rate against compression ratio.
    SweepCompression,
    /// Classification rate against SNR.
    SweepSnr,
}

fn load_config(g: &Global) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = match &g.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if let Some(s) = g.solver {
        cfg.solver = s;
    }
    if let Some(c) = g.classifier {
        cfg.classifiers = vec![c];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(g: &Global, name: &str) -> PathBuf {
    g.out_dir.join(name)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn synth(g: &Global, cfg: &ExperimentConfig, snr: Option<f64>) -> Result<serde_json::Value> {
    let scene = random_scene(&cfg.scene, seed::stream(cfg.master_seed, b"scene"))?;
    let clean = compose_scene(&scene)?;
    let ts = match snr {
        Some(db) => add_awgn(&clean, db, seed::stream(cfg.master_seed, b"awgn"))?,
        None => clean,
    };
    let scene_path = out_path(g, "scene.json");
    let iq_path = out_path(g, "signal.bin");
    fs::write(&scene_path, serde_json::to_string_pretty(&scene)? + "\n")?;
    io::write_iq(&iq_path, &ts)?;
    Ok(json!({
        "scene": display(&scene_path),
        "signal": display(&iq_path),
        "emitters": scene.emitters.len(),
        "n_samples": ts.len(),
    }))
}

fn recover(g: &Global, cfg: &ExperimentConfig, input: Option<PathBuf>, ratio: f64) -> Result<serde_json::Value> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!("ratio {ratio} outside (0, 1]")));
    }
    let input = input.unwrap_or_else(|| out_path(g, "signal.bin"));
    let ts = io::read_iq(&input)?;
    let r = if cfg.prefilter {
        prefilter(&ts, BandPass::new(0.0, cfg.scene.band_upper_hz))?
    } else {
        ts
    };
    let n = r.len();
    let m = ((ratio * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let sensing = build_sensing_matrix(m, n, cfg.sensing, seed::stream(cfg.master_seed, b"sensing"))?;
    let rec = acquire(&sensing, &r)?.with_context(display(&input), None);
    let op = RecoveryOperator::unit(sensing)?;
    let est = solve(cfg.solver, &rec, &op, &cfg.solver_options)?;

    let meas_path = out_path(g, "measurement.json");
    let spec_path = out_path(g, "spectrum.bin");
    let csv_path = out_path(g, "spectrum.csv");
    let diag_path = out_path(g, "diagnostics.jsonl");
    io::write_measurement(&meas_path, &rec)?;
    io::write_spectrum_bin(&spec_path, &est)?;
    io::write_spectrum_csv(&csv_path, &est)?;
    let diag = SolveDiagnostics::new(&est, m);
    io::append_diagnostics(&diag_path, &diag)?;
    Ok(json!({
        "measurement": display(&meas_path),
        "spectrum": display(&spec_path),
        "spectrum_csv": display(&csv_path),
        "diagnostics": diag,
    }))
}

fn features(g: &Global, cfg: &ExperimentConfig, input: Option<PathBuf>, scene: Option<PathBuf>) -> Result<serde_json::Value> {
    let input = input.unwrap_or_else(|| out_path(g, "spectrum.bin"));
    let est = io::read_spectrum_bin(&input)?;
    let mut rows = spectrum_features(&est, (0.0, cfg.scene.band_upper_hz), &cfg.features)?;
    if let Some(path) = scene {
        let scene: WidebandScene = serde_json::from_str(&fs::read_to_string(path)?)?;
        attach_labels(&mut rows, &scene.emitters);
    }
    let path = out_path(g, "features.csv");
    io::save_features(&path, &rows)?;
    Ok(json!({
        "features": display(&path),
        "segments": rows.len(),
        "labeled": rows.iter().filter(|f| f.label.is_some()).count(),
    }))
}

/// Rows from the given files, or from simulated trials of the requested split.
fn gather(cfg: &ExperimentConfig, inputs: &[PathBuf], ratio: f64, snr: f64, train: bool) -> Result<Vec<FeatureVector>> {
    if !inputs.is_empty() {
        let mut rows = Vec::new();
        for p in inputs {
            rows.extend(io::load_features(p)?);
        }
        return Ok(rows);
    }
    let outcomes = bench::run_point(cfg, ratio, ratio, snr)?;
    let keep = |t: &TrialOutcome| {
        if train {
            t.trial_index < cfg.train_trials && t.converged
        } else {
            t.trial_index >= cfg.train_trials
        }
    };
    Ok(outcomes
        .iter()
        .filter(|t| keep(t))
        .flat_map(|t| t.labeled().cloned())
        .collect())
}

fn train(g: &Global, cfg: &ExperimentConfig, inputs: &[PathBuf], ratio: f64, snr: f64) -> Result<serde_json::Value> {
    let rows = gather(cfg, inputs, ratio, snr, true)?;
    let data = Dataset::from_features(&rows);
    let kind = g.classifier.unwrap_or(ClassifierKind::Rf);
    let model = TrainedModel::train(
        &data,
        kind,
        &cfg.forest,
        seed::stream(cfg.master_seed, b"model"),
        cfg.class_names(),
        bench::feature_names(),
    )?;
    let model_path = out_path(g, "model.json");
    fs::write(&model_path, model.to_json()? + "\n")?;
    if inputs.is_empty() {
        io::save_features(&out_path(g, "train_features.csv"), &rows)?;
    }
    Ok(json!({
        "model": display(&model_path),
        "classifier": kind,
        "train_rows": data.len(),
    }))
}

fn eval(
    g: &Global,
    cfg: &ExperimentConfig,
    model: Option<PathBuf>,
    inputs: &[PathBuf],
    ratio: f64,
    snr: f64,
) -> Result<serde_json::Value> {
    let model_path = model.unwrap_or_else(|| out_path(g, "model.json"));
    let model = TrainedModel::from_json(&fs::read_to_string(&model_path)?)?;
    let rows = gather(cfg, inputs, ratio, snr, false)?;
    let data = Dataset::from_features(&rows);
    let result = bench::evaluate(&model, &data, &vec![0; model.classes.len()], &model.classes)?;
    let path = out_path(g, "eval.json");
    fs::write(&path, serde_json::to_string_pretty(&result)? + "\n")?;
    Ok(json!({
        "eval": display(&path),
        "test_rows": data.len(),
        "rates": result.rates.iter().map(|r| (r.class.clone(), json!(r.rate))).collect::<serde_json::Map<_, _>>(),
    }))
}

fn sweep(g: &Global, cfg: &ExperimentConfig, compression: bool) -> Result<serde_json::Value> {
    let (report, stem) = if compression {
        (bench::sweep_compression(cfg)?, "sweep_compression")
    } else {
        (bench::sweep_snr(cfg)?, "sweep_snr")
    };
    let paths = bench::emit_report(&report, &g.out_dir, stem)?;
    Ok(json!({
        "files": paths.iter().map(|p| display(p)).collect::<Vec<_>>(),
        "points": report.points.len(),
    }))
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    let g = &cli.global;
    let cfg = load_config(g)?;
    fs::create_dir_all(&g.out_dir)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = g.jobs {
        if n == 0 {
            return Err(Error::InvalidConfig("--jobs must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth { snr } => synth(g, &cfg, snr),
        Command::Recover { input, ratio } => recover(g, &cfg, input, ratio),
        Command::Features { input, scene } => features(g, &cfg, input, scene),
        Command::Train { input, ratio, snr } => train(g, &cfg, &input, ratio, snr),
        Command::Eval {
            model,
            input,
            ratio,
            snr,
        } => eval(g, &cfg, model, &input, ratio, snr),
        Command::SweepCompression => sweep(g, &cfg, true),
        Command::SweepSnr => sweep(g, &cfg, false),
    })
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string(), 2),
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string(), 1),
    }
}

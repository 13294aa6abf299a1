//! Monte Carlo experiments: one trial runs the whole receiver chain on a
//! random scene, and a sweep trains and scores classifiers at each point of
//! a compression-ratio or SNR axis.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{confusion_matrix, wilson_interval, ClassifierKind, ConfusionMatrix, Dataset, ForestConfig, TrainedModel};
use crate::error::{Error, Result};
use crate::features::{attach_labels, spectrum_features, FeatureOptions, FeatureVector};
use crate::frontend::{acquire, build_sensing_matrix, prefilter, BandPass, SensingKind};
use crate::recovery::{solve, RecoveryOperator, SolverKind, SolverOptions};
use crate::scene::{add_awgn, compose_scene, random_scene, ModulationKind, SceneConfig, WidebandScene};
use crate::seed;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Whether each axis point gets its own classifier or all points share one
/// trained on every point's training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    #[default]
    PerPoint,
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Band, transform size, modulation pool and emitter draws.
    pub scene: SceneConfig,
    pub compression_ratios: Vec<f64>,
    /// SNR held fixed along the compression axis.
    pub compression_snr_db: f64,
    pub snrs_db: Vec<f64>,
    /// Compression ratio held fixed along the SNR axis.
    pub snr_ratio: f64,
    pub n_trials: usize,
    pub train_trials: usize,
    pub test_trials: usize,
    pub master_seed: u64,
    pub sensing: SensingKind,
    pub solver: SolverKind,
    pub solver_options: SolverOptions,
    pub prefilter: bool,
    pub features: FeatureOptions,
    pub classifiers: Vec<ClassifierKind>,
    pub forest: ForestConfig,
    pub training: TrainingMode,
    /// Score ground-truth emitters that produced no labelled segment as
    /// misclassified. When off, rates cover detected emitters only.
    pub count_missed: bool,
    /// Record wall-clock time per pipeline stage. Timings differ between
    /// runs, so reports carrying them are not byte-reproducible.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scene: SceneConfig::default(),
            compression_ratios: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            compression_snr_db: 5.0,
            snrs_db: vec![-6.0, -3.0, 0.0, 3.0, 6.0, 9.0],
            snr_ratio: 0.5,
            n_trials: 1500,
            train_trials: 1200,
            test_trials: 300,
            master_seed: 0,
            sensing: SensingKind::RandomSubsample,
            solver: SolverKind::Bp,
            solver_options: SolverOptions::default(),
            prefilter: true,
            features: FeatureOptions::default(),
            classifiers: vec![ClassifierKind::Rf, ClassifierKind::Nbc],
            forest: ForestConfig::default(),
            training: TrainingMode::PerPoint,
            count_missed: true,
            record_timing: false,
        }
    }
}

fn in_range(values: &[f64], lo: f64, hi: f64) -> bool {
    values.iter().all(|v| (lo..=hi).contains(v))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.solver_options.validate()?;
        self.forest.validate()?;
        if self.train_trials + self.test_trials != self.n_trials {
            return Err(Error::InvalidConfig(format!(
                "train_trials ({}) + test_trials ({}) must equal n_trials ({})",
                self.train_trials, self.test_trials, self.n_trials
            )));
        }
        if self.train_trials == 0 || self.test_trials == 0 {
            return Err(Error::InvalidConfig("both splits need at least one trial".into()));
        }
        if !in_range(&self.compression_ratios, 0.5, 1.0) || !(0.5..=1.0).contains(&self.snr_ratio) {
            return Err(Error::InvalidConfig("compression ratios must lie in [0.5, 1.0]".into()));
        }
        if !in_range(&self.snrs_db, -6.0, 9.0) {
            return Err(Error::InvalidConfig("swept SNRs must lie in [-6, 9] dB".into()));
        }
        if self.compression_snr_db.is_nan() {
            return Err(Error::InvalidConfig("compression_snr_db is NaN".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::InvalidConfig("no classifiers selected".into()));
        }
        if !self.scene.n_samples.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.scene.n_samples));
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        ModulationKind::ALL.iter().map(|m| m.name().to_string()).collect()
    }

    /// `M = ⌈ratio · N⌉`.
    pub fn measurements_for(&self, ratio: f64) -> usize {
        let n = self.scene.n_samples;
        ((ratio * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
    }
}

/// Accumulated wall-clock time per pipeline stage, in seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub synthesize: f64,
    pub acquire: f64,
    pub recover: f64,
    pub features: f64,
    pub train: f64,
    pub evaluate: f64,
}

impl StageTiming {
    fn add(&mut self, other: &StageTiming) {
        self.synthesize += other.synthesize;
        self.acquire += other.acquire;
        self.recover += other.recover;
        self.features += other.features;
        self.train += other.train;
        self.evaluate += other.evaluate;
    }
}

/// Output of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial_index: usize,
    pub scene: WidebandScene,
    /// One row per detected segment; unmatched segments carry no label.
    pub features: Vec<FeatureVector>,
    pub converged: bool,
    pub iterations: usize,
    /// All zero unless `record_timing` is set.
    pub timing: StageTiming,
}

impl TrialOutcome {
    pub fn labeled(&self) -> impl Iterator<Item = &FeatureVector> {
        self.features.iter().filter(|f| f.label.is_some())
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// scene → compose → AWGN → pre-filter → acquire → solve → features, with
/// labels attached from the scene's ground truth. Pass `snr_db = +∞` for a
/// noiseless trial.
pub fn run_trial(config: &ExperimentConfig, ratio: f64, snr_db: f64, trial_seed: u64) -> Result<TrialOutcome> {
    run_trial_indexed(config, ratio, snr_db, trial_seed, 0)
}

fn run_trial_indexed(
    config: &ExperimentConfig,
    ratio: f64,
    snr_db: f64,
    trial_seed: u64,
    trial_index: usize,
) -> Result<TrialOutcome> {
    let mut timing = StageTiming::default();
    let t0 = Instant::now();
    let scene = random_scene(&config.scene, seed::stream(trial_seed, b"scene"))?;
    let clean = compose_scene(&scene)?;
    let noisy = if clean.power() > 0.0 {
        add_awgn(&clean, snr_db, seed::stream(trial_seed, b"awgn"))?
    } else {
        clean
    };
    timing.synthesize = secs(t0.elapsed());

    let t0 = Instant::now();
    let band_upper = config.scene.band_upper_hz;
    let r = if config.prefilter {
        prefilter(&noisy, BandPass::new(0.0, band_upper))?
    } else {
        noisy
    };
    let m = config.measurements_for(ratio);
    let sensing = build_sensing_matrix(m, r.len(), config.sensing, seed::stream(trial_seed, b"sensing"))?;
    let snr_field = snr_db.is_finite().then_some(snr_db);
    let rec = acquire(&sensing, &r)?.with_context(format!("trial-{trial_index}"), snr_field);
    timing.acquire = secs(t0.elapsed());

    let t0 = Instant::now();
    let op = RecoveryOperator::unit(sensing)?;
    let est = solve(config.solver, &rec, &op, &config.solver_options)?;
    timing.recover = secs(t0.elapsed());

    let t0 = Instant::now();
    let mut features = spectrum_features(&est, (0.0, band_upper), &config.features)?;
    attach_labels(&mut features, &scene.emitters);
    timing.features = secs(t0.elapsed());
    if !config.record_timing {
        timing = StageTiming::default();
    }

    Ok(TrialOutcome {
        trial_index,
        scene,
        features,
        converged: est.converged,
        iterations: est.iterations,
        timing,
    })
}

/// Runs trials `0..n_trials` at one axis point, in parallel on the current
/// rayon pool; the result is in trial order regardless of scheduling.
pub fn run_point(config: &ExperimentConfig, axis_value: f64, ratio: f64, snr_db: f64) -> Result<Vec<TrialOutcome>> {
    (0..config.n_trials)
        .into_par_iter()
        .map(|i| {
            let s = seed::trial_seed(config.master_seed, axis_value, i as u64);
            run_trial_indexed(config, ratio, snr_db, s, i)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    CompressionRatio,
    SnrDb,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::CompressionRatio => "compression_ratio",
            Axis::SnrDb => "snr_db",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRate {
    pub class: String,
    pub correct: usize,
    /// Detected test rows of this class, plus missed emitters when those
    /// are counted.
    pub total: usize,
    /// `None` when the class never appears in the test split.
    pub rate: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierResult {
    pub classifier: ClassifierKind,
    pub rates: Vec<ClassRate>,
    pub confusion: ConfusionMatrix,
}

impl ClassifierResult {
    pub fn rate(&self, class: ModulationKind) -> Option<f64> {
        self.rates.get(class.index()).and_then(|r| r.rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub axis_value: f64,
    pub ratio: f64,
    pub snr_db: f64,
    pub n_measurements: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Trials whose solver stopped at the iteration cap; their rows are
    /// left out of training.
    pub non_converged: usize,
    /// Detected segments per trial, averaged.
    pub mean_detected: f64,
    /// Test-split ground-truth emitters with no matching detection, per class.
    pub missed: Vec<usize>,
    pub results: Vec<ClassifierResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<StageTiming>,
}

impl PointReport {
    pub fn result(&self, kind: ClassifierKind) -> Option<&ClassifierResult> {
        self.results.iter().find(|r| r.classifier == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format_version: u32,
    pub axis: Axis,
    pub classes: Vec<String>,
    pub config: ExperimentConfig,
    pub points: Vec<PointReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<StageTiming>,
}

struct PointData {
    axis_value: f64,
    ratio: f64,
    snr_db: f64,
    train: Dataset,
    test: Dataset,
    non_converged: usize,
    mean_detected: f64,
    missed: Vec<usize>,
    timing: StageTiming,
}

fn collect_point(config: &ExperimentConfig, axis_value: f64, ratio: f64, snr_db: f64) -> Result<PointData> {
    let trials = run_point(config, axis_value, ratio, snr_db)?;
    let k = ModulationKind::ALL.len();
    let mut train = Dataset::new(FeatureVector::DIM, k);
    let mut test = Dataset::new(FeatureVector::DIM, k);
    let mut non_converged = 0;
    let mut detected = 0usize;
    let mut missed = vec![0usize; k];
    let mut timing = StageTiming::default();
    for t in &trials {
        timing.add(&t.timing);
        detected += t.features.len();
        if !t.converged {
            non_converged += 1;
        }
        let mut seen = vec![0usize; k];
        for f in t.labeled() {
            seen[f.label.unwrap().index()] += 1;
        }
        let in_train = t.trial_index < config.train_trials;
        for e in &t.scene.emitters {
            let c = e.modulation.index();
            if seen[c] > 0 {
                seen[c] -= 1;
            } else if !in_train {
                missed[c] += 1;
            }
        }
        if in_train && !t.converged {
            continue;
        }
        let target = if in_train { &mut train } else { &mut test };
        for f in t.labeled() {
            target.push(&f.as_array(), f.label.unwrap().index())?;
        }
    }
    Ok(PointData {
        axis_value,
        ratio,
        snr_db,
        train,
        test,
        non_converged,
        mean_detected: detected as f64 / trials.len().max(1) as f64,
        missed,
        timing,
    })
}

fn check_representation(data: &Dataset) -> Result<()> {
    for (class, &count) in data.class_counts().iter().enumerate() {
        if count < 2 {
            return Err(Error::InsufficientClassSamples {
                class,
                count,
                required: 2,
            });
        }
    }
    Ok(())
}

/// Per-class rates with Wilson intervals and the confusion matrix of `model`
/// on `test`. `missed[c]` extra class-`c` emitters are scored as wrong.
pub fn evaluate(model: &TrainedModel, test: &Dataset, missed: &[usize], classes: &[String]) -> Result<ClassifierResult> {
    let pred = model.predict_all(test)?;
    let confusion = confusion_matrix(test.labels(), &pred, classes.len())?;
    let rates = (0..classes.len())
        .map(|c| {
            let total = confusion.row_total(c) + missed[c];
            let correct = confusion.counts[c][c];
            let (rate, ci_lo, ci_hi) = if total > 0 {
                let (lo, hi) = wilson_interval(correct, total);
                (Some(correct as f64 / total as f64), Some(lo), Some(hi))
            } else {
                (None, None, None)
            };
            ClassRate {
                class: classes[c].clone(),
                correct,
                total,
                rate,
                ci_lo,
                ci_hi,
            }
        })
        .collect();
    Ok(ClassifierResult {
        classifier: model.kind(),
        rates,
        confusion,
    })
}

/// Column names of [`FeatureVector::as_array`].
pub fn feature_names() -> Vec<String> {
    ["f_c_hz", "bw_hz", "a_max", "e_t"].iter().map(|s| s.to_string()).collect()
}

fn train_model(config: &ExperimentConfig, data: &Dataset, kind: ClassifierKind, seed_value: u64) -> Result<TrainedModel> {
    TrainedModel::train(data, kind, &config.forest, seed_value, config.class_names(), feature_names())
}

/// Runs the trials at every `(axis_value, ratio, snr_db)` point, trains the
/// configured classifiers and scores them on the test split.
pub fn run_sweep(config: &ExperimentConfig, axis: Axis, points: &[(f64, f64, f64)]) -> Result<SweepReport> {
    config.validate()?;
    let classes = config.class_names();
    let data: Vec<PointData> = points
        .iter()
        .map(|&(v, ratio, snr)| collect_point(config, v, ratio, snr))
        .collect::<Result<_>>()?;

    let pooled: Option<BTreeMap<ClassifierKind, TrainedModel>> = match config.training {
        TrainingMode::PerPoint => None,
        TrainingMode::Pooled => {
            let mut all = Dataset::new(FeatureVector::DIM, classes.len());
            for p in &data {
                for i in 0..p.train.len() {
                    all.push(p.train.row(i), p.train.label(i))?;
                }
            }
            check_representation(&all)?;
            let seed_value = seed::stream(config.master_seed, b"pooled-model");
            Some(
                config
                    .classifiers
                    .iter()
                    .map(|&k| Ok((k, train_model(config, &all, k, seed_value)?)))
                    .collect::<Result<_>>()?,
            )
        }
    };

    let mut total_timing = StageTiming::default();
    let mut reports = Vec::with_capacity(data.len());
    for p in data {
        let mut timing = p.timing.clone();
        let mut results = Vec::new();
        for &kind in &config.classifiers {
            let t0 = Instant::now();
            let owned;
            let model = match &pooled {
                Some(models) => &models[&kind],
                None => {
                    check_representation(&p.train)?;
                    let seed_value = seed::derive(&[config.master_seed, p.axis_value.to_bits(), 0x006d_6f64_656c]);
                    owned = train_model(config, &p.train, kind, seed_value)?;
                    &owned
                }
            };
            timing.train += secs(t0.elapsed());
            let t0 = Instant::now();
            let missed = if config.count_missed { p.missed.clone() } else { vec![0; classes.len()] };
            results.push(evaluate(model, &p.test, &missed, &classes)?);
            timing.evaluate += secs(t0.elapsed());
        }
        total_timing.add(&timing);
        reports.push(PointReport {
            axis_value: p.axis_value,
            ratio: p.ratio,
            snr_db: p.snr_db,
            n_measurements: config.measurements_for(p.ratio),
            train_rows: p.train.len(),
            test_rows: p.test.len(),
            non_converged: p.non_converged,
            mean_detected: p.mean_detected,
            missed: p.missed,
            results,
            timing: config.record_timing.then_some(timing),
        });
    }
    Ok(SweepReport {
        format_version: REPORT_FORMAT_VERSION,
        axis,
        classes,
        config: config.clone(),
        points: reports,
        timing: config.record_timing.then_some(total_timing),
    })
}

/// Correct-classification rate against compression ratio at a fixed SNR.
pub fn sweep_compression(config: &ExperimentConfig) -> Result<SweepReport> {
    let points: Vec<_> = config
        .compression_ratios
        .iter()
        .map(|&r| (r, r, config.compression_snr_db))
        .collect();
    run_sweep(config, Axis::CompressionRatio, &points)
}

/// Correct-classification rate against SNR at a fixed compression ratio.
pub fn sweep_snr(config: &ExperimentConfig) -> Result<SweepReport> {
    let points: Vec<_> = config.snrs_db.iter().map(|&s| (s, config.snr_ratio, s)).collect();
    run_sweep(config, Axis::SnrDb, &points)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per axis point and class, with rate and interval columns for
/// each classifier in configuration order.
pub fn report_csv(report: &SweepReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![report.axis.name().to_string(), "class".into()];
    for k in &report.config.classifiers {
        for col in ["rate", "ci_lo", "ci_hi", "n"] {
            header.push(format!("{k}_{col}"));
        }
    }
    w.write_record(&header)?;
    for p in &report.points {
        for (c, class) in report.classes.iter().enumerate() {
            let mut row = vec![p.axis_value.to_string(), class.clone()];
            for k in &report.config.classifiers {
                match p.result(*k).map(|r| &r.rates[c]) {
                    Some(r) => row.extend([opt(r.rate), opt(r.ci_lo), opt(r.ci_hi), r.total.to_string()]),
                    None => row.extend([String::new(), String::new(), String::new(), String::new()]),
                }
            }
            w.write_record(&row)?;
        }
    }
    finish_csv(w)
}

/// Plot-ready long format: `axis, axis_value, classifier, class, rate, ci_lo, ci_hi, n`.
pub fn report_long_csv(report: &SweepReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["axis", "axis_value", "classifier", "class", "rate", "ci_lo", "ci_hi", "n"])?;
    for p in &report.points {
        for r in &p.results {
            for rate in &r.rates {
                w.write_record([
                    report.axis.name().to_string(),
                    p.axis_value.to_string(),
                    r.classifier.to_string(),
                    rate.class.clone(),
                    opt(rate.rate),
                    opt(rate.ci_lo),
                    opt(rate.ci_hi),
                    rate.total.to_string(),
                ])?;
            }
        }
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn report_json(report: &SweepReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_report(text: &str) -> Result<SweepReport> {
    let report: SweepReport = serde_json::from_str(text)?;
    if report.format_version != REPORT_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(report.format_version));
    }
    Ok(report)
}

/// Writes `<stem>.csv`, `<stem>.json` and `<stem>_long.csv` into `dir`,
/// returning the paths in that order.
pub fn emit_report(report: &SweepReport, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let files = [
        (dir.join(format!("{stem}.csv")), report_csv(report)?),
        (dir.join(format!("{stem}.json")), report_json(report)?),
        (dir.join(format!("{stem}_long.csv")), report_long_csv(report)?),
    ];
    let mut paths = Vec::new();
    for (path, body) in files {
        fs::write(&path, body)?;
        paths.push(path);
    }
    Ok(paths)
}

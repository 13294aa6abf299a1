//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its criterion
//! and then asserts it. Run with `--nocapture` to see the lines.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use wbsc::bench::{report_json, run_trial, sweep_compression, sweep_snr, ExperimentConfig, PointReport, SweepReport};
use wbsc::classify::{
    entropy, information_gain, train_forest, train_nbc, train_tree, ClassifierKind, Dataset, ForestConfig, TreeConfig,
};
use wbsc::features::{detect_segments, estimate_psd_in_band, extract_features, spectrum_features, FeatureOptions, PsdOptions};
use wbsc::frontend::{acquire, build_sensing_matrix, prefilter, BandPass, SensingKind};
use wbsc::recovery::dft::{dft, Direction};
use wbsc::recovery::{solve, solve_bp, RecoveryOperator, SolverKind, SolverOptions, SpectrumEstimate};
use wbsc::scene::{add_awgn, compose_scene, modulate_nb, random_scene, EmitterSpec, ModulationKind, SamplingGrid, TimeSeries, ROLLOFF};
use wbsc::seed;

const SCALED_CONFIG: &str = include_str!("../../../configs/scaled-sweep.json");

struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn finish(self, id: u32, title: &str) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {id} [{status}] {title}");
        for n in &self.notes {
            println!("    ok   {n}");
        }
        for f in &self.failures {
            println!("    FAIL {f}");
        }
        assert!(self.failures.is_empty(), "criterion {id} failed: {:?}", self.failures);
    }
}

fn scaled_config() -> ExperimentConfig {
    serde_json::from_str(SCALED_CONFIG).expect("scaled sweep config parses")
}

fn sweeps() -> &'static (SweepReport, SweepReport) {
    static SWEEPS: OnceLock<(SweepReport, SweepReport)> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        let cfg = scaled_config();
        assert_eq!((cfg.n_trials, cfg.train_trials, cfg.test_trials), (500, 400, 100));
        assert_eq!(cfg.scene.n_samples, 2048);
        (sweep_compression(&cfg).unwrap(), sweep_snr(&cfg).unwrap())
    })
}

fn point(report: &SweepReport, axis_value: f64) -> &PointReport {
    report
        .points
        .iter()
        .find(|p| (p.axis_value - axis_value).abs() < 1e-12)
        .unwrap_or_else(|| panic!("axis point {axis_value} missing"))
}

fn rf_rate(p: &PointReport, m: ModulationKind) -> f64 {
    p.result(ClassifierKind::Rf).and_then(|r| r.rate(m)).unwrap_or(f64::NAN)
}

fn check_band(c: &mut Check, p: &PointReport, label: &str, centre: f64, tol: f64) {
    for m in [ModulationKind::Bask, ModulationKind::Bpsk] {
        let r = rf_rate(p, m);
        c.expect(
            (r - centre).abs() <= tol + 1e-12,
            format!("{label}: {} rate {r:.3} within {centre} ± {tol}", m.name()),
        );
    }
}

#[test]
fn criterion_1_compression_sweep() {
    let (comp, _) = sweeps();
    let mut c = Check::new();
    check_band(&mut c, point(comp, 1.0), "M/N = 1.0", 0.94, 0.08);
    check_band(&mut c, point(comp, 0.5), "M/N = 0.5", 0.75, 0.10);

    let mut pts: Vec<&PointReport> = comp.points.iter().collect();
    pts.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
    let rf = |p: &PointReport| p.result(ClassifierKind::Rf).unwrap().rates.clone();
    let mut violations = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            // pts[i] is more compressed than pts[j]; it must not do better
            // than pts[j] beyond the overlap of their intervals.
            let (lo_ratio, hi_ratio) = (rf(pts[i]), rf(pts[j]));
            for (a, b) in lo_ratio.iter().zip(&hi_ratio) {
                if let (Some(a_lo), Some(b_hi)) = (a.ci_lo, b.ci_hi) {
                    if a_lo > b_hi {
                        violations.push(format!("{} at {} vs {}", a.class, pts[i].ratio, pts[j].ratio));
                    }
                }
            }
        }
    }
    c.expect(
        violations.is_empty(),
        format!("rate non-increasing with compression within 95% intervals (violations: {violations:?})"),
    );
    for p in &pts {
        let rates: Vec<String> = ModulationKind::ALL.iter().map(|&m| format!("{:.2}", rf_rate(p, m))).collect();
        c.notes.push(format!("M/N = {:.1}: rf {}", p.ratio, rates.join(" ")));
    }
    c.finish(1, "classification rate against compression ratio at 5 dB");
}

#[test]
fn criterion_2_snr_sweep() {
    let (_, snr) = sweeps();
    let mut c = Check::new();
    check_band(&mut c, point(snr, 9.0), "9 dB", 0.80, 0.08);
    check_band(&mut c, point(snr, -6.0), "-6 dB", 0.60, 0.10);
    for p in &snr.points {
        let rates: Vec<String> = ModulationKind::ALL.iter().map(|&m| format!("{:.2}", rf_rate(p, m))).collect();
        c.notes.push(format!("{:+} dB: rf {}", p.snr_db, rates.join(" ")));
    }
    c.finish(2, "classification rate against SNR at M/N = 0.5");
}

#[test]
fn criterion_3_baseline_ordering() {
    let (comp, snr) = sweeps();
    let mut c = Check::new();
    for (axis, report) in [("M/N", comp), ("SNR", snr)] {
        for p in &report.points {
            let rf = p.result(ClassifierKind::Rf).unwrap();
            let nbc = p.result(ClassifierKind::Nbc).unwrap();
            for m in [ModulationKind::Bask, ModulationKind::Bpsk] {
                let (a, b) = (rf.rate(m).unwrap_or(f64::NAN), nbc.rate(m).unwrap_or(f64::NAN));
                c.expect(a >= b, format!("{axis} {}: {} rf {a:.3} >= nbc {b:.3}", p.axis_value, m.name()));
            }
        }
    }
    let half_ratio = comp.points.iter().chain(&snr.points).filter(|p| (p.ratio - 0.5).abs() < 1e-12);
    for p in half_ratio {
        let qam = rf_rate(p, ModulationKind::Qam32);
        let others = [ModulationKind::Bask, ModulationKind::Bpsk, ModulationKind::Qpsk].map(|m| rf_rate(p, m));
        c.expect(
            others.iter().all(|&o| qam <= o),
            format!("M/N = 0.5, {:+} dB: QAM32 rate {qam:.3} is the lowest of {others:.3?}", p.snr_db),
        );
    }
    c.finish(3, "forest beats naive Bayes on BASK/BPSK; QAM32 worst at M/N = 0.5");
}

fn random_sparse(n: usize, k: usize, rng: &mut impl Rng) -> (Vec<Complex64>, Vec<usize>) {
    let support = rand::seq::index::sample(rng, n, k).into_vec();
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    for &j in &support {
        let mag = rng.random_range(0.5..2.0);
        s[j] = Complex64::from_polar(mag, rng.random_range(0.0..std::f64::consts::TAU));
    }
    let mut sorted = support;
    sorted.sort_unstable();
    (s, sorted)
}

fn record_for(op: &RecoveryOperator, s: &[Complex64]) -> wbsc::frontend::MeasurementRecord {
    let n = op.dft_size();
    let mut r = s.to_vec();
    wbsc::recovery::dft::dft_in_place(&mut r, Direction::Inverse).unwrap();
    let ts = TimeSeries {
        samples: r,
        sample_rate_hz: n as f64,
    };
    acquire(op.sensing(), &ts).unwrap()
}

fn l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn criterion_4_sparse_recovery_oracles() {
    let mut c = Check::new();
    let (n, m) = (256, 128);
    let opts = SolverOptions::default();
    for k in 1..=5 {
        let mut exact = 0;
        let mut worst = 0.0f64;
        for t in 0..100u64 {
            let s_seed = seed::derive(&[k as u64, t]);
            let mut rng = seed::rng(s_seed);
            let (s, support) = random_sparse(n, k, &mut rng);
            let sensing = build_sensing_matrix(m, n, SensingKind::Bernoulli, seed::stream(s_seed, b"theta")).unwrap();
            let op = RecoveryOperator::unit(sensing).unwrap();
            let est = solve_bp(&record_for(&op, &s), &op, &opts).unwrap();
            let peak = est.s_hat.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let found: Vec<usize> = (0..n).filter(|&j| est.s_hat[j].norm() > 1e-6 * peak).collect();
            let err = l2(&est.s_hat, &s);
            worst = worst.max(err);
            if found == support && err < 1e-6 {
                exact += 1;
            }
        }
        c.expect(exact >= 95, format!("k = {k}: exact support with l2 error < 1e-6 in {exact}/100 (worst error {worst:.1e})"));
    }

    for kind in [SensingKind::RandomSubsample, SensingKind::Bernoulli] {
        let mut rng = seed::rng(91);
        let r: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let sensing = build_sensing_matrix(n, n, kind, 17).unwrap();
        let op = RecoveryOperator::unit(sensing.clone()).unwrap();
        let rec = acquire(&sensing, &TimeSeries { samples: r.clone(), sample_rate_hz: n as f64 }).unwrap();
        let est = solve_bp(&rec, &op, &opts).unwrap();
        // Oracle: invert the dense operator directly.
        let a = op.to_dense().unwrap();
        let z = nalgebra::DVector::from_vec(rec.z.clone());
        let direct = a.lu().solve(&z).unwrap();
        let err = est.s_hat.iter().zip(direct.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        c.expect(err < 1e-9, format!("M = N {kind:?}: max deviation from direct inversion {err:.1e}"));
        if kind == SensingKind::RandomSubsample {
            let f = naive_unitary_dft(&r);
            let e = est.s_hat.iter().zip(&f).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            c.expect(e < 1e-9, format!("M = N subsampling equals unitary DFT of r within {e:.1e}"));
        }
    }
    c.finish(4, "noiseless sparse recovery, N = 256, M = 128");
}

fn naive_unitary_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| v * Complex64::from_polar(scale, -std::f64::consts::TAU * ((k * t) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn random_complex(n: usize, s: u64) -> Vec<Complex64> {
    let mut rng = seed::rng(s);
    (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn small_pipeline_config() -> ExperimentConfig {
    let mut cfg = scaled_config();
    cfg.compression_ratios = vec![0.5];
    cfg.snrs_db = vec![0.0];
    cfg.n_trials = 12;
    cfg.train_trials = 8;
    cfg.test_trials = 4;
    cfg.forest.n_trees = 8;
    cfg
}

#[test]
fn criterion_5_numerical_invariants() {
    let mut c = Check::new();

    let mut worst = 0.0f64;
    for (i, n) in [8usize, 256, 4096].into_iter().enumerate() {
        let x = random_complex(n, i as u64);
        let f = dft(&x, Direction::Forward).unwrap();
        worst = worst.max((norm(&f) - norm(&x)).abs() / norm(&x));
    }
    c.expect(worst <= 1e-12, format!("Parseval: relative energy mismatch {worst:.1e} <= 1e-12"));

    let mut worst = 0.0f64;
    for kind in [SensingKind::RandomSubsample, SensingKind::Bernoulli] {
        let sensing = build_sensing_matrix(96, 256, kind, 4).unwrap();
        let gains: Vec<Complex64> = random_complex(256, 5).iter().map(|g| g + Complex64::new(2.0, 0.0)).collect();
        let op = RecoveryOperator::new(sensing, gains).unwrap();
        let (x, y) = (random_complex(256, 6), random_complex(96, 7));
        let lhs = inner(&op.forward(&x).unwrap(), &y);
        let rhs = inner(&x, &op.adjoint(&y).unwrap());
        worst = worst.max((lhs - rhs).norm() / lhs.norm().max(1.0));
    }
    c.expect(worst <= 1e-10, format!("adjoint: <Ax, y> vs <x, A^H y> mismatch {worst:.1e} <= 1e-10"));

    let opts = SolverOptions::default();
    let mut worst = 0.0f64;
    for t in 0..10u64 {
        let mut rng = seed::rng(100 + t);
        let (s, _) = random_sparse(256, 12, &mut rng);
        let sensing = build_sensing_matrix(100, 256, SensingKind::Bernoulli, t).unwrap();
        let op = RecoveryOperator::unit(sensing).unwrap();
        let rec = record_for(&op, &s);
        let est = solve_bp(&rec, &op, &opts).unwrap();
        let az = op.forward(&est.s_hat).unwrap();
        worst = worst.max(l2(&az, &rec.z) / norm(&rec.z));
    }
    c.expect(worst <= opts.tol, format!("BP feasibility: ||A s - z|| / ||z|| = {worst:.1e} <= tol {}", opts.tol));

    let hand = [
        (entropy(&[0, 0, 1, 1]).unwrap(), 1.0, "H[A,A,B,B]"),
        (entropy(&[0, 0, 0]).unwrap(), 0.0, "H[A,A,A]"),
        (entropy(&[0, 1, 2, 3]).unwrap(), 2.0, "H[uniform 4]"),
        (information_gain(&[0, 0, 1, 1], &[&[0, 0], &[1, 1]]).unwrap(), 1.0, "IG perfect split"),
        (information_gain(&[0, 0, 1, 1], &[&[0, 1], &[0, 1]]).unwrap(), 0.0, "IG ratio-preserving split"),
        (information_gain(&[0, 0, 0, 1], &[&[0, 0], &[0, 1]]).unwrap(), 0.8113 - 0.5, "IG [A,A,A,B]"),
    ];
    for (got, want, what) in hand {
        c.expect((got - want).abs() <= 1e-4, format!("{what} = {got:.4} (hand value {want:.4})"));
    }

    let mut rng = seed::rng(8);
    let rows: Vec<Vec<f64>> = (0..120).map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + r[2] > 1.0) + usize::from(r[1] > 0.7)).collect();
    let data = Dataset::from_rows(&rows, &labels, 3).unwrap();
    let tree_cfg = TreeConfig {
        features_per_split: Some(4),
        ..TreeConfig::default()
    };
    let forest_cfg = ForestConfig {
        n_trees: 1,
        tree: tree_cfg.clone(),
        bootstrap: false,
    };
    let tree = train_tree(&data, &tree_cfg, 42).unwrap();
    let forest = train_forest(&data, &forest_cfg, 42).unwrap();
    let probes: Vec<Vec<f64>> = (0..500).map(|_| (0..4).map(|_| rng.random_range(-0.2..1.2)).collect()).collect();
    let same_preds = probes.iter().all(|x| tree.predict(x) == forest.predict(x).unwrap());
    c.expect(forest.trees[0] == tree && same_preds, "forest with one tree, no bootstrap, all features equals a single tree".into());

    let cfg = small_pipeline_config();
    let ts = seed::trial_seed(cfg.master_seed, 0.5, 3);
    let scene_a = random_scene(&cfg.scene, ts).unwrap();
    let scene_b = random_scene(&cfg.scene, ts).unwrap();
    let clean_a = compose_scene(&scene_a).unwrap();
    let clean_b = compose_scene(&scene_b).unwrap();
    let noisy_a = add_awgn(&clean_a, 0.0, 9).unwrap();
    let noisy_b = add_awgn(&clean_b, 0.0, 9).unwrap();
    let filt_a = prefilter(&noisy_a, BandPass::new(0.0, 100e6)).unwrap();
    let filt_b = prefilter(&noisy_b, BandPass::new(0.0, 100e6)).unwrap();
    let sens_a = build_sensing_matrix(1024, 2048, SensingKind::RandomSubsample, 3).unwrap();
    let sens_b = build_sensing_matrix(1024, 2048, SensingKind::RandomSubsample, 3).unwrap();
    let rec_a = acquire(&sens_a, &filt_a).unwrap();
    let rec_b = acquire(&sens_b, &filt_b).unwrap();
    let bits = |v: &[Complex64]| v.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect::<Vec<u64>>();
    let stages_equal = scene_a == scene_b
        && bits(&clean_a.samples) == bits(&clean_b.samples)
        && bits(&noisy_a.samples) == bits(&noisy_b.samples)
        && bits(&filt_a.samples) == bits(&filt_b.samples)
        && sens_a == sens_b
        && bits(&rec_a.z) == bits(&rec_b.z);
    c.expect(stages_equal, "scene, compose, AWGN, pre-filter, sensing and acquisition rerun bit-exactly".into());

    let op = RecoveryOperator::unit(sens_a).unwrap();
    let mut solvers_equal = true;
    for kind in [SolverKind::Bp, SolverKind::Lasso, SolverKind::Omp] {
        let x = solve(kind, &rec_a, &op, &opts).unwrap();
        let y = solve(kind, &rec_b, &op, &opts).unwrap();
        solvers_equal &= bits(&x.s_hat) == bits(&y.s_hat) && x.iterations == y.iterations;
        let fx = spectrum_features(&x, (0.0, 100e6), &cfg.features).unwrap();
        let fy = spectrum_features(&y, (0.0, 100e6), &cfg.features).unwrap();
        solvers_equal &= fx == fy;
    }
    c.expect(solvers_equal, "BP, LASSO, OMP and feature extraction rerun bit-exactly".into());

    let forest_a = train_forest(&data, &ForestConfig::default(), 5).unwrap();
    let forest_b = train_forest(&data, &ForestConfig::default(), 5).unwrap();
    let nbc_a = train_nbc(&data).unwrap();
    let nbc_b = train_nbc(&data).unwrap();
    c.expect(forest_a == forest_b && nbc_a == nbc_b, "forest and naive Bayes training rerun identically".into());

    let trial_a = run_trial(&cfg, 0.5, 0.0, ts).unwrap();
    let trial_b = run_trial(&cfg, 0.5, 0.0, ts).unwrap();
    let sweep_a = report_json(&sweep_snr(&cfg).unwrap()).unwrap();
    let sweep_b = report_json(&sweep_snr(&cfg).unwrap()).unwrap();
    c.expect(
        trial_a == trial_b && sweep_a == sweep_b,
        "trials and sweep reports rerun byte-identically".into(),
    );

    c.finish(5, "numerical invariants and determinism");
}

fn lossless(ts: &TimeSeries) -> SpectrumEstimate {
    let n = ts.len();
    let sensing = build_sensing_matrix(n, n, SensingKind::RandomSubsample, 0).unwrap();
    let op = RecoveryOperator::unit(sensing.clone()).unwrap();
    solve_bp(&acquire(&sensing, ts).unwrap(), &op, &SolverOptions::default()).unwrap()
}

#[test]
fn criterion_6_feature_oracles() {
    let mut c = Check::new();
    let opts = FeatureOptions::default();

    let n = 4096;
    let fs = 200e6;
    let bin_hz = fs / n as f64;
    let mut worst = 0.0f64;
    let mut single = true;
    for f0 in [30e6, 1.3e6, 12.345e6, 49.99e6, 77.7e6, 98.1e6] {
        let ts = TimeSeries {
            samples: (0..n)
                .map(|t| Complex64::from_polar(1.0, std::f64::consts::TAU * f0 * t as f64 / fs))
                .collect(),
            sample_rate_hz: fs,
        };
        let feats = spectrum_features(&lossless(&ts), (0.0, 100e6), &opts).unwrap();
        single &= feats.len() == 1;
        if let Some(f) = feats.first() {
            worst = worst.max((f.f_c_hz - f0).abs());
        }
    }
    c.expect(
        single && worst <= bin_hz / 2.0,
        format!("pure tones: one segment each, worst f_c error {worst:.0} Hz <= bin/2 = {:.0} Hz", bin_hz / 2.0),
    );

    let grid = SamplingGrid {
        sample_rate_hz: fs,
        n_samples: n,
    };
    let mut worst = 0.0f64;
    let mut ratios = Vec::new();
    for rate in [2.0e6, 5.0e6, 10.0e6, 20.0e6] {
        for s in 0..8u64 {
            let spec = EmitterSpec {
                modulation: ModulationKind::Bpsk,
                carrier_hz: 40e6,
                symbol_rate_hz: rate,
                amplitude: 1.0,
                channel_gain: Complex64::new(1.0, 0.0),
            };
            let mut rng = seed::rng(s);
            let sym: Vec<usize> = (0..wbsc::scene::symbols_needed(&spec, grid)).map(|_| rng.random_range(0..2)).collect();
            let ts = modulate_nb(&spec, &sym, wbsc::scene::PULSE_HALF_SPAN, grid).unwrap();
            let feats = spectrum_features(&lossless(&ts), (0.0, 100e6), &opts).unwrap();
            let truth = (1.0 + ROLLOFF) * rate;
            match feats.as_slice() {
                [f] => {
                    ratios.push(f.bw_hz / truth);
                    worst = worst.max((f.bw_hz - truth).abs() / truth);
                }
                _ => worst = f64::INFINITY,
            }
        }
    }
    c.expect(
        worst <= 0.15,
        format!("noiseless RRC BPSK, 32 realisations: worst bandwidth error {:.1}% <= 15%", 100.0 * worst),
    );
    // Oracle: 99%-power width of the raised-cosine PSD, integrated numerically.
    let rc = |f: f64| {
        let edge = 0.5 * (1.0 - ROLLOFF);
        if f <= edge {
            1.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI / ROLLOFF * (f - edge)).cos())
        }
    };
    let steps = 200_000;
    let h = 0.5 * (1.0 + ROLLOFF) / steps as f64;
    let cum: Vec<f64> = (0..steps)
        .scan(0.0, |acc, i| {
            *acc += rc((i as f64 + 0.5) * h) * h;
            Some(*acc)
        })
        .collect();
    let total = cum[steps - 1];
    let f99 = cum.iter().position(|&v| v >= 0.99 * total).unwrap() as f64 * h;
    let expected = 2.0 * f99 / (1.0 + ROLLOFF);
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    c.expect(
        (mean - expected).abs() <= 0.03,
        format!("mean bw / (1+rolloff)R = {mean:.3}, integrated raised-cosine value {expected:.3}"),
    );

    let mut exact = true;
    let mut worst_rel = 0.0f64;
    let base = {
        let mut rng = seed::rng(77);
        let mut s = random_complex(1024, 78);
        for (i, v) in s.iter_mut().enumerate() {
            let bump = if (200..260).contains(&i) || (600..610).contains(&i) { 30.0 } else { 0.1 };
            *v *= bump * rng.random_range(0.5..1.5);
        }
        SpectrumEstimate {
            s_hat: s,
            residual_norm: 0.0,
            iterations: 0,
            solver: SolverKind::Bp,
            converged: true,
            sample_rate_hz: 200e6,
            trace: Vec::new(),
        }
    };
    let psd0 = estimate_psd_in_band(&base, 0.0, 100e6, PsdOptions::default()).unwrap();
    let segs = detect_segments(&psd0, opts.threshold_factor, opts.min_gap_bins).unwrap();
    for scale in [0.25, 2.0, 8.0, 3.7, 0.013] {
        let mut scaled = base.clone();
        for v in scaled.s_hat.iter_mut() {
            *v *= scale;
        }
        let psd = estimate_psd_in_band(&scaled, 0.0, 100e6, PsdOptions::default()).unwrap();
        for seg in &segs {
            let a = extract_features(&psd0, seg, &opts).unwrap().e_t;
            let b = extract_features(&psd, seg, &opts).unwrap().e_t;
            let want = a * scale * scale;
            let power_of_two = scale.log2().fract() == 0.0;
            if power_of_two {
                exact &= b == want;
            }
            worst_rel = worst_rel.max((b - want).abs() / want);
        }
        exact &= detect_segments(&psd, opts.threshold_factor, opts.min_gap_bins).unwrap() == segs;
    }
    c.expect(
        !segs.is_empty() && exact && worst_rel <= 1e-12,
        format!("e_t scales by c^2: bit-exact for powers of two, relative error {worst_rel:.1e} otherwise; segments unchanged"),
    );
    c.finish(6, "spectral feature oracles");
}

use num_complex::Complex64;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

use wbsc::features::{
    detect_segments, detect_segments_smoothed, estimate_psd_in_band, extract_features, spectrum_features, FeatureOptions,
    PsdOptions,
};
use wbsc::recovery::{SolverKind, SpectrumEstimate};

fn estimate(s_hat: Vec<Complex64>) -> SpectrumEstimate {
    SpectrumEstimate {
        s_hat,
        residual_norm: 0.0,
        iterations: 0,
        solver: SolverKind::Bp,
        converged: true,
        sample_rate_hz: 200e6,
        trace: Vec::new(),
    }
}

fn white(n: usize, sigma2: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = wbsc::seed::rng(seed);
    let s = (0.5 * sigma2).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

fn in_band(s: Vec<Complex64>) -> wbsc::features::PsdEstimate {
    estimate_psd_in_band(&estimate(s), 0.0, 100e6, PsdOptions::default()).unwrap()
}

#[test]
fn noise_floor_tracks_true_level() {
    for t in 0..100 {
        let sigma2 = 0.1 + 0.05 * t as f64;
        let psd = in_band(white(4096, sigma2, t));
        let rel = psd.noise_floor / sigma2;
        assert!((0.75..=1.25).contains(&rel), "trial {t}: {rel}");
    }
}

#[test]
fn pure_noise_raises_no_segments() {
    let quiet = (0..100)
        .filter(|&t| {
            let psd = in_band(white(4096, 1.0, 1000 + t));
            detect_segments(&psd, 5.0, 3).unwrap().is_empty()
        })
        .count();
    assert!(quiet >= 95, "{quiet}/100");
}

#[test]
fn two_separated_emitters_give_two_segments() {
    let n = 4096;
    let mut s = white(n, 1e-6, 7);
    let blocks = [(300usize, 340usize, 2.0), (900, 960, 1.0)];
    for &(lo, hi, amp) in &blocks {
        for (k, v) in s.iter_mut().enumerate().take(hi).skip(lo) {
            let peak = if k == (lo + hi) / 2 { 1.5 } else { 1.0 };
            *v += Complex64::new(amp * peak, 0.0);
        }
    }
    let psd = in_band(s);
    let segs = detect_segments(&psd, 4.0, 3).unwrap();
    assert_eq!(segs.len(), 2);
    for (seg, &(lo, hi, _)) in segs.iter().zip(&blocks) {
        assert_eq!(seg.peak_bin, (lo + hi) / 2);
        assert!(seg.lo_bin <= lo && seg.hi_bin >= hi - 1);
    }
}

#[test]
fn tone_gives_one_segment_with_floor_bandwidth() {
    let n = 4096;
    let k = 614;
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    s[k] = Complex64::new(3.0, 0.0);
    let feats = spectrum_features(&estimate(s), (0.0, 100e6), &FeatureOptions::default()).unwrap();
    assert_eq!(feats.len(), 1);
    let bin_hz = 200e6 / n as f64;
    assert!((feats[0].f_c_hz - k as f64 * bin_hz).abs() <= bin_hz / 2.0);
    assert_eq!(feats[0].bw_hz, bin_hz);
    assert!((feats[0].e_t - 9.0 * bin_hz).abs() < 1e-9);
}

#[test]
fn smoothing_width_one_matches_raw_thresholding() {
    let psd = in_band(white(1024, 1.0, 3));
    let raw = detect_segments_smoothed(&psd, 3.0, 0, 1).unwrap();
    let expected: Vec<usize> = (psd.analysis_lo..=psd.analysis_hi)
        .filter(|&k| psd.bins[k] > 3.0 * psd.noise_floor)
        .collect();
    let covered: Vec<usize> = raw.iter().flat_map(|s| s.lo_bin..=s.hi_bin).collect();
    assert_eq!(covered, expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn features_scale_covariantly(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut s = white(1024, 1e-4, seed);
        for v in s.iter_mut().take(420).skip(380) {
            *v += Complex64::new(1.0, 0.5);
        }
        let base = in_band(s.clone());
        let scaled = in_band(s.iter().map(|v| v * c).collect());
        let opts = FeatureOptions::default();
        let segs = detect_segments(&base, opts.threshold_factor, opts.min_gap_bins).unwrap();
        prop_assert_eq!(&detect_segments(&scaled, opts.threshold_factor, opts.min_gap_bins).unwrap(), &segs);
        for seg in &segs {
            let a = extract_features(&base, seg, &opts).unwrap();
            let b = extract_features(&scaled, seg, &opts).unwrap();
            prop_assert!((b.e_t - c * c * a.e_t).abs() <= 1e-12 * b.e_t);
            prop_assert!((b.a_max - a.a_max).abs() <= 1e-9 * a.a_max);
            prop_assert!((b.f_c_hz - a.f_c_hz).abs() <= 1e-6);
            prop_assert_eq!(b.bw_hz, a.bw_hz);
        }
    }

    #[test]
    fn segments_are_sorted_and_disjoint(seed in any::<u64>(), factor in 1.5f64..8.0, gap in 0usize..10) {
        let psd = in_band(white(2048, 1.0, seed));
        let segs = detect_segments(&psd, factor, gap).unwrap();
        for w in segs.windows(2) {
            prop_assert!(w[0].hi_bin < w[1].lo_bin);
        }
        for s in &segs {
            prop_assert!(s.lo_bin <= s.peak_bin && s.peak_bin <= s.hi_bin);
            prop_assert!(s.lo_bin >= psd.analysis_lo && s.hi_bin <= psd.analysis_hi);
        }
    }
}

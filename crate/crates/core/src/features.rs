//! Per-emitter spectral features from a recovered spectrum.
//!
//! The PSD is the per-bin power `|ŝ_f|²`. Contiguous runs above a multiple of
//! the estimated noise floor become support segments, and each segment yields
//! four features: power-weighted centre frequency, occupied bandwidth, peak
//! power relative to the floor, and integrated power over the segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recovery::dft::bin_frequency;
use crate::recovery::SpectrumEstimate;
use crate::scene::{EmitterSpec, ModulationKind};

/// Per-bin power of a recovered spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub bins: Vec<f64>,
    pub bin_hz: f64,
    pub sample_rate_hz: f64,
    pub noise_floor: f64,
    /// Inclusive bin range that floor estimation and segmentation look at.
    pub analysis_lo: usize,
    pub analysis_hi: usize,
}

impl PsdEstimate {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin_frequency(bin, self.bins.len(), self.sample_rate_hz)
    }

    pub fn total_power(&self) -> f64 {
        self.bins.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsdOptions {
    /// The floor is never reported below `peak · 10^(-dynamic_range_db/10)`,
    /// which keeps noiseless spectra from producing an infinite `a_max`.
    pub dynamic_range_db: f64,
}

impl Default for PsdOptions {
    fn default() -> Self {
        PsdOptions { dynamic_range_db: 50.0 }
    }
}

/// PSD over the whole grid with default options.
pub fn estimate_psd(s_hat: &SpectrumEstimate) -> PsdEstimate {
    let n = s_hat.s_hat.len();
    build_psd(s_hat, 0, n.saturating_sub(1), PsdOptions::default())
}

/// PSD whose floor and segmentation are restricted to `[lo_hz, hi_hz]`.
pub fn estimate_psd_in_band(s_hat: &SpectrumEstimate, lo_hz: f64, hi_hz: f64, opts: PsdOptions) -> Result<PsdEstimate> {
    let n = s_hat.s_hat.len();
    let in_band: Vec<usize> = (0..n)
        .filter(|&k| {
            let f = bin_frequency(k, n, s_hat.sample_rate_hz);
            f >= lo_hz && f <= hi_hz
        })
        .collect();
    let (Some(&lo), Some(&hi)) = (in_band.first(), in_band.last()) else {
        return Err(Error::InvalidConfig(format!("band [{lo_hz}, {hi_hz}] Hz holds no bins")));
    };
    if hi - lo + 1 != in_band.len() {
        return Err(Error::InvalidConfig("analysis band must not wrap around the grid".into()));
    }
    Ok(build_psd(s_hat, lo, hi, opts))
}

fn build_psd(s_hat: &SpectrumEstimate, lo: usize, hi: usize, opts: PsdOptions) -> PsdEstimate {
    let bins: Vec<f64> = s_hat.s_hat.iter().map(|c| c.norm_sqr()).collect();
    let noise_floor = if bins.is_empty() {
        0.0
    } else {
        let mut window: Vec<f64> = bins[lo..=hi].to_vec();
        window.sort_by(f64::total_cmp);
        let mid = window.len() / 2;
        let median = if window.len() % 2 == 1 {
            window[mid]
        } else {
            0.5 * (window[mid - 1] + window[mid])
        };
        let peak = window.last().copied().unwrap_or(0.0);
        (median / std::f64::consts::LN_2).max(peak * 10f64.powf(-opts.dynamic_range_db / 10.0))
    };
    PsdEstimate {
        bins,
        bin_hz: s_hat.bin_hz(),
        sample_rate_hz: s_hat.sample_rate_hz,
        noise_floor,
        analysis_lo: lo,
        analysis_hi: hi,
    }
}

/// Contiguous bins attributed to one emitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSegment {
    pub lo_bin: usize,
    pub hi_bin: usize,
    pub peak_bin: usize,
}

/// Width of the moving average that [`detect_segments`] thresholds.
pub const DEFAULT_SMOOTHING_BINS: usize = 21;

/// Support segments with the default smoothing width.
pub fn detect_segments(psd: &PsdEstimate, threshold_factor: f64, min_gap_bins: usize) -> Result<Vec<SupportSegment>> {
    detect_segments_smoothed(psd, threshold_factor, min_gap_bins, DEFAULT_SMOOTHING_BINS)
}

/// Maximal runs where the `smoothing_bins`-wide moving average of the PSD
/// exceeds `threshold_factor · noise_floor`, with runs separated by fewer
/// than `min_gap_bins` quiet bins merged.
///
/// A single periodogram bin of pure noise is exponentially distributed, so
/// thresholding raw bins fires about `e^-factor` of the time per bin. The
/// average over an odd window of `w` bins has a far thinner tail. Pass
/// `smoothing_bins = 1` to threshold raw bins.
pub fn detect_segments_smoothed(
    psd: &PsdEstimate,
    threshold_factor: f64,
    min_gap_bins: usize,
    smoothing_bins: usize,
) -> Result<Vec<SupportSegment>> {
    if !(threshold_factor > 1.0) {
        return Err(Error::InvalidConfig(format!("threshold_factor {threshold_factor} must be > 1")));
    }
    if smoothing_bins.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("smoothing_bins {smoothing_bins} must be odd")));
    }
    if psd.bins.is_empty() {
        return Ok(Vec::new());
    }
    let (lo, hi) = (psd.analysis_lo, psd.analysis_hi);
    let half = smoothing_bins / 2;
    let mut prefix = Vec::with_capacity(hi - lo + 2);
    prefix.push(0.0);
    for k in lo..=hi {
        prefix.push(prefix.last().unwrap() + psd.bins[k]);
    }
    let smoothed = |k: usize| {
        let a = k.saturating_sub(half).max(lo);
        let b = (k + half).min(hi);
        (prefix[b - lo + 1] - prefix[a - lo]) / (b - a + 1) as f64
    };

    let threshold = threshold_factor * psd.noise_floor;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for k in lo..=hi {
        let above = smoothed(k) > threshold;
        match (above, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, hi));
    }

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for (lo, hi) in runs {
        match merged.last_mut() {
            Some(last) if lo - last.1 - 1 < min_gap_bins => last.1 = hi,
            _ => merged.push((lo, hi)),
        }
    }

    Ok(merged
        .into_iter()
        .map(|(lo_bin, hi_bin)| {
            let mut peak_bin = lo_bin;
            for k in lo_bin..=hi_bin {
                if psd.bins[k] > psd.bins[peak_bin] {
                    peak_bin = k;
                }
            }
            SupportSegment { lo_bin, hi_bin, peak_bin }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// Width between the 0.5% and 99.5% cumulative-power points.
    Occupied99,
    /// Extent of bins at or above half the peak power.
    ThreeDb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    pub threshold_factor: f64,
    pub min_gap_bins: usize,
    /// Odd moving-average width used for detection only.
    pub smoothing_bins: usize,
    pub bandwidth: BandwidthRule,
    /// Report `a_max` relative to the noise floor instead of as raw power.
    pub normalize_amax: bool,
    pub psd: PsdOptions,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            threshold_factor: 4.0,
            min_gap_bins: 3,
            smoothing_bins: DEFAULT_SMOOTHING_BINS,
            bandwidth: BandwidthRule::Occupied99,
            normalize_amax: true,
            psd: PsdOptions::default(),
        }
    }
}

/// `(f_c, bw, a_max, e_t)` for one detected emitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub f_c_hz: f64,
    pub bw_hz: f64,
    pub a_max: f64,
    pub e_t: f64,
    pub label: Option<ModulationKind>,
}

impl FeatureVector {
    pub const DIM: usize = 4;

    pub fn as_array(&self) -> [f64; 4] {
        [self.f_c_hz, self.bw_hz, self.a_max, self.e_t]
    }
}

pub fn extract_features(psd: &PsdEstimate, seg: &SupportSegment, opts: &FeatureOptions) -> Result<FeatureVector> {
    if seg.lo_bin > seg.hi_bin || seg.hi_bin >= psd.bins.len() || !(seg.lo_bin..=seg.hi_bin).contains(&seg.peak_bin) {
        return Err(Error::InvalidConfig(format!("segment {seg:?} invalid for {} bins", psd.bins.len())));
    }
    let bins = &psd.bins[seg.lo_bin..=seg.hi_bin];
    let total: f64 = bins.iter().sum();
    let peak = psd.bins[seg.peak_bin];

    let f_c_hz = if total > 0.0 {
        bins.iter()
            .enumerate()
            .map(|(i, p)| p * psd.frequency(seg.lo_bin + i))
            .sum::<f64>()
            / total
    } else {
        psd.frequency(seg.peak_bin)
    };

    let width_bins = match opts.bandwidth {
        BandwidthRule::Occupied99 => occupied_bins(bins, total, 0.99),
        BandwidthRule::ThreeDb => {
            let first = bins.iter().position(|&p| p >= 0.5 * peak).unwrap_or(0);
            let last = bins.iter().rposition(|&p| p >= 0.5 * peak).unwrap_or(0);
            last - first + 1
        }
    };

    let a_max = if opts.normalize_amax {
        if psd.noise_floor > 0.0 {
            peak / psd.noise_floor
        } else {
            f64::INFINITY
        }
    } else {
        peak
    };

    Ok(FeatureVector {
        f_c_hz,
        bw_hz: width_bins as f64 * psd.bin_hz,
        a_max,
        e_t: total * psd.bin_hz,
        label: None,
    })
}

/// Bins between the `(1-fraction)/2` and `(1+fraction)/2` cumulative-power points.
fn occupied_bins(bins: &[f64], total: f64, fraction: f64) -> usize {
    if bins.len() <= 1 || total <= 0.0 {
        return 1;
    }
    let tail = 0.5 * (1.0 - fraction) * total;
    let mut cum = 0.0;
    let mut lo = 0;
    let mut hi = bins.len() - 1;
    let mut found_lo = false;
    for (i, &p) in bins.iter().enumerate() {
        cum += p;
        if !found_lo && cum > tail {
            lo = i;
            found_lo = true;
        }
        if cum >= total - tail {
            hi = i;
            break;
        }
    }
    hi.max(lo) - lo + 1
}

/// PSD, segmentation and feature extraction in one call.
pub fn spectrum_features(s_hat: &SpectrumEstimate, band: (f64, f64), opts: &FeatureOptions) -> Result<Vec<FeatureVector>> {
    let psd = estimate_psd_in_band(s_hat, band.0, band.1, opts.psd)?;
    detect_segments_smoothed(&psd, opts.threshold_factor, opts.min_gap_bins, opts.smoothing_bins)?
        .iter()
        .map(|seg| extract_features(&psd, seg, opts))
        .collect()
}

/// Assigns ground-truth labels to detected features.
///
/// A feature may take an emitter's label when its centre frequency lies within
/// half the emitter's occupied bandwidth of the carrier. Pairs are matched
/// one-to-one, closest first; features left unmatched keep `label = None`.
pub fn attach_labels(features: &mut [FeatureVector], emitters: &[EmitterSpec]) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (fi, f) in features.iter().enumerate() {
        for (ei, e) in emitters.iter().enumerate() {
            let d = (f.f_c_hz - e.carrier_hz).abs();
            if d <= 0.5 * e.occupied_bw_hz() {
                pairs.push((d, fi, ei));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut feature_used = vec![false; features.len()];
    let mut emitter_used = vec![false; emitters.len()];
    for f in features.iter_mut() {
        f.label = None;
    }
    for (_, fi, ei) in pairs {
        if !feature_used[fi] && !emitter_used[ei] {
            feature_used[fi] = true;
            emitter_used[ei] = true;
            features[fi].label = Some(emitters[ei].modulation);
        }
    }
}

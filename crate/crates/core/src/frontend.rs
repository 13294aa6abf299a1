//! Compressive sampling frontend: the `M × N` sensing operator, measurement
//! acquisition and the FFT-mask noise pre-filter.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recovery::dft::{bin_frequency, dft_in_place, Direction};
use crate::scene::TimeSeries;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingKind {
    /// Keep `M` of the `N` Nyquist-rate samples, chosen uniformly at random.
    RandomSubsample,
    /// Dense ±1/√M projection.
    Bernoulli,
}

/// Persisted form of a sensing matrix. The matrix itself is always rebuilt
/// from the seed, never stored densely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensingSpec {
    pub kind: SensingKind,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SensingSpec", into = "SensingSpec")]
pub struct SensingMatrix {
    rows: usize,
    cols: usize,
    kind: SensingKind,
    seed: u64,
    selected_indices: Vec<usize>,
    /// Row-major sign pattern for `Bernoulli`; `true` means `-1/√M`.
    signs: Vec<bool>,
}

impl TryFrom<SensingSpec> for SensingMatrix {
    type Error = Error;

    fn try_from(s: SensingSpec) -> Result<Self> {
        build_sensing_matrix(s.rows, s.cols, s.kind, s.seed)
    }
}

impl From<SensingMatrix> for SensingSpec {
    fn from(m: SensingMatrix) -> Self {
        m.spec()
    }
}

/// Builds a deterministic sensing matrix with `rows ≤ cols`.
pub fn build_sensing_matrix(rows: usize, cols: usize, kind: SensingKind, seed: u64) -> Result<SensingMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig("sensing matrix needs M >= 1 and N >= 1".into()));
    }
    if rows > cols {
        return Err(Error::InvalidConfig(format!("M = {rows} exceeds N = {cols}")));
    }
    let mut rng = seed::rng(seed::stream(seed, b"sensing"));
    let (selected_indices, signs) = match kind {
        SensingKind::RandomSubsample => {
            let mut idx = rand::seq::index::sample(&mut rng, cols, rows).into_vec();
            idx.sort_unstable();
            (idx, Vec::new())
        }
        SensingKind::Bernoulli => (Vec::new(), (0..rows * cols).map(|_| rng.random::<bool>()).collect()),
    };
    Ok(SensingMatrix {
        rows,
        cols,
        kind,
        seed,
        selected_indices,
        signs,
    })
}

impl SensingMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> SensingKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn selected_indices(&self) -> &[usize] {
        &self.selected_indices
    }

    pub fn spec(&self) -> SensingSpec {
        SensingSpec {
            kind: self.kind,
            rows: self.rows,
            cols: self.cols,
            seed: self.seed,
        }
    }

    fn entry_scale(&self) -> f64 {
        1.0 / (self.rows as f64).sqrt()
    }

    /// Entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            SensingKind::RandomSubsample => {
                if self.selected_indices[i] == j {
                    1.0
                } else {
                    0.0
                }
            }
            SensingKind::Bernoulli => {
                if self.signs[i * self.cols + j] {
                    -self.entry_scale()
                } else {
                    self.entry_scale()
                }
            }
        }
    }

    /// Dense copy, row-major. Intended for small test oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.entry(i, j)).collect())
            .collect()
    }

    /// `Θ x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok(match self.kind {
            SensingKind::RandomSubsample => self.selected_indices.iter().map(|&j| x[j]).collect(),
            SensingKind::Bernoulli => {
                let s = self.entry_scale();
                (0..self.rows)
                    .map(|i| {
                        let row = &self.signs[i * self.cols..(i + 1) * self.cols];
                        let acc = row
                            .iter()
                            .zip(x)
                            .fold(Complex64::new(0.0, 0.0), |acc, (&neg, &v)| if neg { acc - v } else { acc + v });
                        acc * s
                    })
                    .collect()
            }
        })
    }

    /// `Θᵀ y` (the matrix is real, so this is also the adjoint).
    pub fn apply_transpose(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: y.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        match self.kind {
            SensingKind::RandomSubsample => {
                for (&j, &v) in self.selected_indices.iter().zip(y) {
                    out[j] = v;
                }
            }
            SensingKind::Bernoulli => {
                let s = self.entry_scale();
                for (i, &v) in y.iter().enumerate() {
                    let row = &self.signs[i * self.cols..(i + 1) * self.cols];
                    let sv = v * s;
                    for (o, &neg) in out.iter_mut().zip(row) {
                        if neg {
                            *o -= sv;
                        } else {
                            *o += sv;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Compressed measurements `z = Θ r` with the metadata needed to recover from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    #[serde(skip)]
    pub z: Vec<Complex64>,
    pub sensing: SensingMatrix,
    pub scene_ref: String,
    /// `None` for noiseless acquisitions.
    pub snr_db: Option<f64>,
    pub sample_rate_hz: f64,
}

impl MeasurementRecord {
    pub fn with_context(mut self, scene_ref: impl Into<String>, snr_db: Option<f64>) -> Self {
        self.scene_ref = scene_ref.into();
        self.snr_db = snr_db;
        self
    }
}

/// Applies the sensing matrix to a Nyquist-rate time series.
pub fn acquire(sensing: &SensingMatrix, r: &TimeSeries) -> Result<MeasurementRecord> {
    let z = sensing.apply(&r.samples)?;
    Ok(MeasurementRecord {
        z,
        sensing: sensing.clone(),
        scene_ref: String::new(),
        snr_db: None,
        sample_rate_hz: r.sample_rate_hz,
    })
}

/// Band-pass mask with raised-cosine skirts outside the pass band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPass {
    pub lo_hz: f64,
    pub hi_hz: f64,
    /// Width of each raised-cosine skirt, placed outside `[lo_hz, hi_hz]`.
    pub taper_hz: f64,
}

impl BandPass {
    /// Pass band `[lo_hz, hi_hz]` with skirts 2% of its width.
    pub fn new(lo_hz: f64, hi_hz: f64) -> Self {
        BandPass {
            lo_hz,
            hi_hz,
            taper_hz: 0.02 * (hi_hz - lo_hz),
        }
    }

    fn gain(&self, f: f64, sample_rate_hz: f64) -> f64 {
        // Distance to the pass band, accounting for spectral wrap-around.
        let d = [f - sample_rate_hz, f, f + sample_rate_hz]
            .iter()
            .map(|&g| {
                if g < self.lo_hz {
                    self.lo_hz - g
                } else if g > self.hi_hz {
                    g - self.hi_hz
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min);
        if d <= 0.0 {
            1.0
        } else if d >= self.taper_hz {
            0.0
        } else {
            0.5 * (1.0 + (PI * d / self.taper_hz).cos())
        }
    }
}

/// FFT-domain band-pass filter. The band must lie inside `[0, fs/2]`.
pub fn prefilter(r: &TimeSeries, band: BandPass) -> Result<TimeSeries> {
    if !(band.lo_hz < band.hi_hz) {
        return Err(Error::InvalidConfig(format!(
            "empty pre-filter band [{}, {}]",
            band.lo_hz, band.hi_hz
        )));
    }
    let nyquist = 0.5 * r.sample_rate_hz;
    if band.lo_hz < 0.0 || band.hi_hz > nyquist * (1.0 + 1e-12) || band.taper_hz < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "pre-filter band [{}, {}] not inside [0, {nyquist}]",
            band.lo_hz, band.hi_hz
        )));
    }
    let n = r.len();
    let mut spec = r.samples.clone();
    dft_in_place(&mut spec, Direction::Forward)?;
    for (k, v) in spec.iter_mut().enumerate() {
        *v *= band.gain(bin_frequency(k, n, r.sample_rate_hz), r.sample_rate_hz);
    }
    dft_in_place(&mut spec, Direction::Inverse)?;
    Ok(TimeSeries {
        samples: spec,
        sample_rate_hz: r.sample_rate_hz,
    })
}

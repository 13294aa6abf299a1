//! File formats: interleaved I/Q binaries with JSON sidecars, measurement
//! records, spectrum and feature CSVs, and JSON-lines diagnostics.
//!
//! Every binary payload is little-endian `f64` pairs `(re, im)`.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::frontend::MeasurementRecord;
use crate::recovery::dft::bin_frequency;
use crate::recovery::{SolveDiagnostics, SolverKind, SpectrumEstimate};
use crate::scene::TimeSeries;

pub fn write_complex(path: &Path, data: &[Complex64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for c in data {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_complex(path: &Path) -> Result<Vec<Complex64>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 16 != 0 {
        return Err(Error::Parse(format!(
            "{}: {} bytes is not a whole number of complex samples",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

/// `foo.bin` → `foo.json`.
pub fn sidecar_path(payload: &Path) -> PathBuf {
    payload.with_extension("json")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn check_len(path: &Path, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Parse(format!(
            "{}: sidecar declares {expected} samples, payload holds {got}",
            path.display()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqSidecar {
    pub sample_rate_hz: f64,
    pub n_samples: usize,
}

/// Writes the samples to `path` and `{sample_rate_hz, n_samples}` beside it.
pub fn write_iq(path: &Path, ts: &TimeSeries) -> Result<()> {
    write_complex(path, &ts.samples)?;
    write_json(
        &sidecar_path(path),
        &IqSidecar {
            sample_rate_hz: ts.sample_rate_hz,
            n_samples: ts.len(),
        },
    )
}

pub fn read_iq(path: &Path) -> Result<TimeSeries> {
    let meta: IqSidecar = read_json(&sidecar_path(path))?;
    let samples = read_complex(path)?;
    check_len(path, meta.n_samples, samples.len())?;
    Ok(TimeSeries {
        samples,
        sample_rate_hz: meta.sample_rate_hz,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeasurementFile {
    payload: String,
    n_measurements: usize,
    record: MeasurementRecord,
}

/// Metadata to `path` (JSON), measurements to the same stem with `.bin`.
pub fn write_measurement(path: &Path, rec: &MeasurementRecord) -> Result<()> {
    let payload = path.with_extension("bin");
    write_complex(&payload, &rec.z)?;
    write_json(
        path,
        &MeasurementFile {
            payload: file_name(&payload),
            n_measurements: rec.z.len(),
            record: rec.clone(),
        },
    )
}

pub fn read_measurement(path: &Path) -> Result<MeasurementRecord> {
    let file: MeasurementFile = read_json(path)?;
    let payload = path.parent().unwrap_or(Path::new(".")).join(&file.payload);
    let z = read_complex(&payload)?;
    check_len(&payload, file.n_measurements, z.len())?;
    if z.len() != file.record.sensing.rows() {
        return Err(Error::DimensionMismatch {
            expected: file.record.sensing.rows(),
            got: z.len(),
        });
    }
    Ok(MeasurementRecord { z, ..file.record })
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpectrumSidecar {
    n_bins: usize,
    sample_rate_hz: f64,
    solver: SolverKind,
    iterations: usize,
    converged: bool,
    residual_norm: f64,
}

/// Rows of `bin_hz, re, im, magnitude`, where `bin_hz` is the signed
/// centre frequency of the bin.
pub fn write_spectrum_csv(path: &Path, est: &SpectrumEstimate) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_hz", "re", "im", "magnitude"])?;
    let n = est.s_hat.len();
    for (k, v) in est.s_hat.iter().enumerate() {
        w.write_record([
            bin_frequency(k, n, est.sample_rate_hz).to_string(),
            v.re.to_string(),
            v.im.to_string(),
            v.norm().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the complex bins back from a spectrum CSV.
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<Complex64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let field = |i: usize| -> Result<f64> {
            row.get(i)
                .ok_or_else(|| Error::Parse("short spectrum row".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("spectrum CSV: {e}")))
        };
        out.push(Complex64::new(field(1)?, field(2)?));
    }
    Ok(out)
}

pub fn write_spectrum_bin(path: &Path, est: &SpectrumEstimate) -> Result<()> {
    write_complex(path, &est.s_hat)?;
    write_json(
        &sidecar_path(path),
        &SpectrumSidecar {
            n_bins: est.s_hat.len(),
            sample_rate_hz: est.sample_rate_hz,
            solver: est.solver,
            iterations: est.iterations,
            converged: est.converged,
            residual_norm: est.residual_norm,
        },
    )
}

pub fn read_spectrum_bin(path: &Path) -> Result<SpectrumEstimate> {
    let meta: SpectrumSidecar = read_json(&sidecar_path(path))?;
    let s_hat = read_complex(path)?;
    check_len(path, meta.n_bins, s_hat.len())?;
    Ok(SpectrumEstimate {
        s_hat,
        residual_norm: meta.residual_norm,
        iterations: meta.iterations,
        solver: meta.solver,
        converged: meta.converged,
        sample_rate_hz: meta.sample_rate_hz,
        trace: Vec::new(),
    })
}

/// Appends one JSON line.
pub fn append_diagnostics(path: &Path, diag: &SolveDiagnostics) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{}", serde_json::to_string(diag)?)?;
    Ok(())
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<SolveDiagnostics>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureRow {
    f_c_hz: f64,
    bw_hz: f64,
    a_max: f64,
    e_t: f64,
    label: Option<String>,
}

/// Header `f_c_hz,bw_hz,a_max,e_t,label`; unlabelled rows leave `label` empty.
pub fn write_features_csv<W: Write>(out: W, features: &[FeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["f_c_hz", "bw_hz", "a_max", "e_t", "label"])?;
    for f in features {
        w.write_record([
            f.f_c_hz.to_string(),
            f.bw_hz.to_string(),
            f.a_max.to_string(),
            f.e_t.to_string(),
            f.label.map(|l| l.name().to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv<R: Read>(input: R) -> Result<Vec<FeatureVector>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize::<FeatureRow>() {
        let row = row?;
        let label = match row.label.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(s.parse()?),
        };
        out.push(FeatureVector {
            f_c_hz: row.f_c_hz,
            bw_hz: row.bw_hz,
            a_max: row.a_max,
            e_t: row.e_t,
            label,
        });
    }
    Ok(out)
}

pub fn save_features(path: &Path, features: &[FeatureVector]) -> Result<()> {
    write_features_csv(File::create(path)?, features)
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureVector>> {
    read_features_csv(File::open(path)?)
}

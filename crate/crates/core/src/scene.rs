//! Wide-band scene synthesis.
//!
//! A scene is a set of narrow-band emitters, each a root-raised-cosine shaped
//! linear modulation on its own carrier, received through a known flat complex
//! gain and summed with white Gaussian noise. Everything is complex baseband
//! sampled at twice the upper band edge, so the monitored band `[0, band_upper]`
//! lands on the non-negative half of the DFT grid.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Roll-off of the root-raised-cosine pulse used by every emitter.
pub const ROLLOFF: f64 = 0.35;

/// Half-span of the truncated pulse, in symbols.
pub const PULSE_HALF_SPAN: usize = 8;

/// Maximum fraction of DFT bins the emitters may occupy in total.
pub const MAX_OCCUPANCY: f64 = 0.3;

/// Modulation classes, in the fixed order used for class indices and tie-breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModulationKind {
    #[serde(rename = "BASK")]
    Bask,
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "QAM32")]
    Qam32,
}

impl ModulationKind {
    pub const ALL: [ModulationKind; 4] = [
        ModulationKind::Bask,
        ModulationKind::Bpsk,
        ModulationKind::Qpsk,
        ModulationKind::Qam32,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModulationKind::Bask => "BASK",
            ModulationKind::Bpsk => "BPSK",
            ModulationKind::Qpsk => "QPSK",
            ModulationKind::Qam32 => "QAM32",
        }
    }

    pub fn order(self) -> usize {
        match self {
            ModulationKind::Bask | ModulationKind::Bpsk => 2,
            ModulationKind::Qpsk => 4,
            ModulationKind::Qam32 => 32,
        }
    }

    /// Constellation points, normalised to unit average energy.
    ///
    /// BASK is on-off keying (`0`, `√2`); QAM32 is the 6×6 cross with the
    /// corners removed.
    pub fn constellation(self) -> Vec<Complex64> {
        match self {
            ModulationKind::Bask => vec![Complex64::new(0.0, 0.0), Complex64::new(2f64.sqrt(), 0.0)],
            ModulationKind::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            ModulationKind::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                vec![
                    Complex64::new(a, a),
                    Complex64::new(-a, a),
                    Complex64::new(-a, -a),
                    Complex64::new(a, -a),
                ]
            }
            ModulationKind::Qam32 => {
                let levels = [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0];
                let scale = 1.0 / 20f64.sqrt();
                let mut points = Vec::with_capacity(32);
                for &q in &levels {
                    for &i in &levels {
                        if f64::abs(i) == 5.0 && f64::abs(q) == 5.0 {
                            continue;
                        }
                        points.push(Complex64::new(i * scale, q * scale));
                    }
                }
                points
            }
        }
    }
}

impl fmt::Display for ModulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BASK" => Ok(ModulationKind::Bask),
            "BPSK" => Ok(ModulationKind::Bpsk),
            "QPSK" => Ok(ModulationKind::Qpsk),
            "QAM32" | "32QAM" | "32-QAM" => Ok(ModulationKind::Qam32),
            other => Err(Error::Parse(format!("unknown modulation {other:?}"))),
        }
    }
}

/// One narrow-band transmitter as seen by the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    pub modulation: ModulationKind,
    pub carrier_hz: f64,
    pub symbol_rate_hz: f64,
    pub amplitude: f64,
    /// Known flat channel gain applied at the receiver.
    #[serde(default = "unit_gain")]
    pub channel_gain: Complex64,
}

fn unit_gain() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl EmitterSpec {
    /// Two-sided occupied bandwidth `(1 + rolloff)·symbol_rate`.
    pub fn occupied_bw_hz(&self) -> f64 {
        (1.0 + ROLLOFF) * self.symbol_rate_hz
    }

    pub fn occupied_band(&self) -> (f64, f64) {
        let half = 0.5 * self.occupied_bw_hz();
        (self.carrier_hz - half, self.carrier_hz + half)
    }
}

/// Ground truth for one wide-band observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidebandScene {
    pub band_upper_hz: f64,
    pub n_samples: usize,
    pub emitters: Vec<EmitterSpec>,
    /// Noise power spectral density σ² in W/Hz.
    #[serde(default)]
    pub noise_psd: f64,
    #[serde(default)]
    pub seed: u64,
}

impl WidebandScene {
    pub fn sample_rate_hz(&self) -> f64 {
        2.0 * self.band_upper_hz
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz() / self.n_samples as f64
    }

    pub fn grid(&self) -> SamplingGrid {
        SamplingGrid {
            sample_rate_hz: self.sample_rate_hz(),
            n_samples: self.n_samples,
        }
    }

    /// Total occupied bins summed over emitters (overlaps counted twice).
    pub fn occupied_bins(&self) -> f64 {
        self.emitters
            .iter()
            .map(|e| e.occupied_bw_hz() / self.bin_hz())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.band_upper_hz.is_finite() && self.band_upper_hz > 0.0) {
            return Err(Error::InvalidConfig("band_upper_hz must be positive".into()));
        }
        if !self.n_samples.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n_samples));
        }
        if !(self.noise_psd.is_finite() && self.noise_psd >= 0.0) {
            return Err(Error::InvalidConfig("noise_psd must be finite and >= 0".into()));
        }
        for (i, e) in self.emitters.iter().enumerate() {
            if !(e.amplitude.is_finite() && e.amplitude > 0.0) {
                return Err(Error::InvalidConfig(format!("emitter {i}: amplitude must be > 0")));
            }
            if !(e.symbol_rate_hz.is_finite() && e.symbol_rate_hz > 0.0) {
                return Err(Error::InvalidConfig(format!("emitter {i}: symbol rate must be > 0")));
            }
            if !(e.carrier_hz > 0.0 && e.carrier_hz < self.band_upper_hz) {
                return Err(Error::InvalidConfig(format!(
                    "emitter {i}: carrier {} Hz outside (0, {})",
                    e.carrier_hz, self.band_upper_hz
                )));
            }
            let (lo, hi) = e.occupied_band();
            if lo < 0.0 || hi > self.band_upper_hz {
                return Err(Error::BandOutsideGrid { lo_hz: lo, hi_hz: hi });
            }
        }
        if self.occupied_bins() > MAX_OCCUPANCY * self.n_samples as f64 {
            return Err(Error::InfeasibleScene(format!(
                "emitters occupy {:.1} bins, cap is {:.1}",
                self.occupied_bins(),
                MAX_OCCUPANCY * self.n_samples as f64
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingGrid {
    pub sample_rate_hz: f64,
    pub n_samples: usize,
}

/// Complex baseband samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl TimeSeries {
    pub fn zeros(grid: SamplingGrid) -> Self {
        TimeSeries {
            samples: vec![Complex64::new(0.0, 0.0); grid.n_samples],
            sample_rate_hz: grid.sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean `|x|²` per sample.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Root-raised-cosine impulse response at `t` symbol periods, unit energy per symbol.
pub fn rrc_pulse(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let edge = 1.0 / (4.0 * beta);
    if (t.abs() - edge).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// Number of symbols `compose_scene` draws for an emitter on `grid`, including
/// the lead-in that keeps the pulse tails fully populated at both edges.
pub fn symbols_needed(spec: &EmitterSpec, grid: SamplingGrid) -> usize {
    let sps = grid.sample_rate_hz / spec.symbol_rate_hz;
    (grid.n_samples as f64 / sps).ceil() as usize + 2 * PULSE_HALF_SPAN + 1
}

/// Pulse-shape, carrier-shift and scale one emitter's symbol stream.
///
/// Symbol `k` is centred at `(k - lead_in)` symbol periods after the first
/// sample; symbols outside `symbols` are zero. The channel gain is not applied
/// here.
pub fn modulate_nb(
    spec: &EmitterSpec,
    symbols: &[usize],
    lead_in: usize,
    grid: SamplingGrid,
) -> Result<TimeSeries> {
    let constellation = spec.modulation.constellation();
    if let Some(&bad) = symbols.iter().find(|&&s| s >= constellation.len()) {
        return Err(Error::SymbolOutOfRange {
            index: bad,
            size: constellation.len(),
        });
    }
    if !(spec.symbol_rate_hz.is_finite() && spec.symbol_rate_hz > 0.0) {
        return Err(Error::InvalidConfig("symbol rate must be > 0".into()));
    }
    let nyquist = 0.5 * grid.sample_rate_hz;
    let (lo, hi) = spec.occupied_band();
    if lo <= -nyquist || hi >= nyquist {
        return Err(Error::BandOutsideGrid { lo_hz: lo, hi_hz: hi });
    }
    let sps = grid.sample_rate_hz / spec.symbol_rate_hz;
    if (grid.n_samples as f64) < 8.0 * sps {
        return Err(Error::InvalidConfig(format!(
            "grid of {} samples holds fewer than 8 symbols at {} samples/symbol",
            grid.n_samples, sps
        )));
    }

    let span = PULSE_HALF_SPAN as f64;
    let omega = 2.0 * PI * spec.carrier_hz / grid.sample_rate_hz;
    let samples = (0..grid.n_samples)
        .map(|n| {
            let u = n as f64 / sps + lead_in as f64;
            let first = (u - span).ceil().max(0.0) as usize;
            let last = ((u + span).floor() as usize).min(symbols.len().saturating_sub(1));
            let mut acc = Complex64::new(0.0, 0.0);
            if !symbols.is_empty() {
                for (k, &sym) in symbols.iter().enumerate().take(last + 1).skip(first) {
                    acc += constellation[sym] * rrc_pulse(u - k as f64, ROLLOFF);
                }
            }
            acc * spec.amplitude * Complex64::from_polar(1.0, omega * n as f64)
        })
        .collect();
    Ok(TimeSeries {
        samples,
        sample_rate_hz: grid.sample_rate_hz,
    })
}

/// Symbol stream seed for one emitter, keyed by the scene seed and the
/// emitter's own parameters so that single-emitter sub-scenes reproduce the
/// same waveform.
fn emitter_seed(scene_seed: u64, e: &EmitterSpec) -> u64 {
    seed::derive(&[
        scene_seed,
        e.modulation.index() as u64,
        e.carrier_hz.to_bits(),
        e.symbol_rate_hz.to_bits(),
    ])
}

/// Waveform of a single emitter exactly as `compose_scene` would render it,
/// channel gain included.
pub fn render_emitter(scene: &WidebandScene, e: &EmitterSpec) -> Result<TimeSeries> {
    let grid = scene.grid();
    let mut rng = seed::rng(emitter_seed(scene.seed, e));
    let order = e.modulation.order();
    let symbols: Vec<usize> = (0..symbols_needed(e, grid))
        .map(|_| rng.random_range(0..order))
        .collect();
    let mut ts = modulate_nb(e, &symbols, PULSE_HALF_SPAN, grid)?;
    for s in ts.samples.iter_mut() {
        *s *= e.channel_gain;
    }
    Ok(ts)
}

/// Sum of all emitters through their channels plus AWGN at `scene.noise_psd`.
pub fn compose_scene(scene: &WidebandScene) -> Result<TimeSeries> {
    scene.validate()?;
    let mut out = TimeSeries::zeros(scene.grid());
    for e in &scene.emitters {
        let ts = render_emitter(scene, e)?;
        for (o, s) in out.samples.iter_mut().zip(&ts.samples) {
            *o += s;
        }
    }
    if scene.noise_psd > 0.0 {
        let variance = scene.noise_psd * scene.sample_rate_hz();
        inject_noise(&mut out.samples, variance, seed::stream(scene.seed, b"awgn"));
    }
    Ok(out)
}

/// Adds circular complex Gaussian noise of total per-sample variance `variance`.
fn inject_noise(samples: &mut [Complex64], variance: f64, seed: u64) {
    let sigma = (0.5 * variance).sqrt();
    let mut rng = seed::rng(seed);
    for s in samples.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *s += Complex64::new(sigma * re, sigma * im);
    }
}

/// Adds AWGN so that `10·log10(P_signal / P_noise) = snr_db` in expectation.
/// `snr_db = +∞` returns the input unchanged.
pub fn add_awgn(ts: &TimeSeries, snr_db: f64, rng_seed: u64) -> Result<TimeSeries> {
    if ts.is_empty() {
        return Err(Error::Empty("time series"));
    }
    if snr_db == f64::INFINITY {
        return Ok(ts.clone());
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidConfig("snr_db is NaN".into()));
    }
    let p = ts.power();
    if p <= 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    let mut out = ts.clone();
    inject_noise(&mut out.samples, p / 10f64.powf(snr_db / 10.0), rng_seed);
    Ok(out)
}

/// Inclusive numeric range used by scene randomisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..self.hi)
        } else {
            self.lo
        }
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

/// Per-modulation override of the symbol-rate and amplitude draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationProfile {
    pub modulation: ModulationKind,
    #[serde(default)]
    pub symbol_rate_hz: Option<Range>,
    #[serde(default)]
    pub amplitude: Option<Range>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Occupied bands are pairwise disjoint with at least `guard_hz` between them.
    NonOverlapping { guard_hz: f64 },
    /// Carriers drawn independently; bands may overlap.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// Emitter `i` uses `modulations[i % len]`.
    RoundRobin,
    /// Each emitter draws its modulation uniformly from the pool.
    Random,
}

/// Parameters for drawing random scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub band_upper_hz: f64,
    pub n_samples: usize,
    pub min_emitters: usize,
    pub max_emitters: usize,
    pub modulations: Vec<ModulationKind>,
    pub assignment: Assignment,
    pub symbol_rate_hz: Range,
    pub amplitude: Range,
    pub profiles: Vec<ModulationProfile>,
    pub placement: Placement,
    /// Keep occupied bands at least this far from 0 Hz and from the band edge.
    pub edge_guard_hz: f64,
    /// Draw a uniformly random unit-magnitude channel phase per emitter.
    pub random_channel_phase: bool,
    pub noise_psd: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            band_upper_hz: 100e6,
            n_samples: 4096,
            min_emitters: 4,
            max_emitters: 4,
            modulations: ModulationKind::ALL.to_vec(),
            assignment: Assignment::RoundRobin,
            symbol_rate_hz: Range::new(0.5e6, 2.0e6),
            amplitude: Range::new(0.5, 1.5),
            profiles: Vec::new(),
            placement: Placement::NonOverlapping { guard_hz: 1e6 },
            edge_guard_hz: 1e6,
            random_channel_phase: false,
            noise_psd: 0.0,
        }
    }
}

impl SceneConfig {
    fn profile(&self, m: ModulationKind) -> Option<&ModulationProfile> {
        self.profiles.iter().find(|p| p.modulation == m)
    }

    fn symbol_rate_range(&self, m: ModulationKind) -> Range {
        self.profile(m)
            .and_then(|p| p.symbol_rate_hz)
            .unwrap_or(self.symbol_rate_hz)
    }

    fn amplitude_range(&self, m: ModulationKind) -> Range {
        self.profile(m)
            .and_then(|p| p.amplitude)
            .unwrap_or(self.amplitude)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_samples.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n_samples));
        }
        if self.min_emitters > self.max_emitters {
            return Err(Error::InvalidConfig("min_emitters > max_emitters".into()));
        }
        if self.max_emitters > 0 && self.modulations.is_empty() {
            return Err(Error::InvalidConfig("empty modulation pool".into()));
        }
        let mut ranges = vec![self.symbol_rate_hz, self.amplitude];
        for p in &self.profiles {
            ranges.extend(p.symbol_rate_hz);
            ranges.extend(p.amplitude);
        }
        if ranges.iter().any(|r| !r.is_valid() || r.lo <= 0.0) {
            return Err(Error::InvalidConfig("ranges must satisfy 0 < lo <= hi".into()));
        }
        Ok(())
    }
}

const PLACEMENT_ATTEMPTS: usize = 10_000;
const LAYOUT_RESTARTS: usize = 100;

/// Rejection-samples a carrier in `[lo, hi)` whose band clears every placed
/// emitter by `guard` (any carrier when `guard` is `None`).
fn place<R: Rng>(rng: &mut R, placed: &[EmitterSpec], half: f64, lo: f64, hi: f64, guard: Option<f64>) -> Option<f64> {
    for _ in 0..PLACEMENT_ATTEMPTS {
        let carrier_hz = rng.random_range(lo..hi);
        let ok = match guard {
            None => true,
            Some(g) => placed.iter().all(|other| {
                let (olo, ohi) = other.occupied_band();
                carrier_hz + half + g <= olo || carrier_hz - half - g >= ohi
            }),
        };
        if ok {
            return Some(carrier_hz);
        }
    }
    None
}

/// Draws a random scene satisfying all [`WidebandScene`] invariants.
pub fn random_scene(config: &SceneConfig, rng_seed: u64) -> Result<WidebandScene> {
    config.validate()?;
    let mut rng = seed::rng(seed::stream(rng_seed, b"scene"));
    let count = rng.random_range(config.min_emitters..=config.max_emitters);
    let bin_hz = 2.0 * config.band_upper_hz / config.n_samples as f64;

    let mut emitters: Vec<EmitterSpec> = Vec::with_capacity(count);
    let mut occupied_bins = 0.0;
    for i in 0..count {
        let modulation = match config.assignment {
            Assignment::RoundRobin => config.modulations[i % config.modulations.len()],
            Assignment::Random => config.modulations[rng.random_range(0..config.modulations.len())],
        };
        let symbol_rate_hz = config.symbol_rate_range(modulation).sample(&mut rng);
        let amplitude = config.amplitude_range(modulation).sample(&mut rng);
        let channel_gain = if config.random_channel_phase {
            Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
        } else {
            unit_gain()
        };
        let half = 0.5 * (1.0 + ROLLOFF) * symbol_rate_hz;
        occupied_bins += 2.0 * half / bin_hz;
        if occupied_bins > MAX_OCCUPANCY * config.n_samples as f64 {
            return Err(Error::InfeasibleScene(format!(
                "{count} emitters exceed the {MAX_OCCUPANCY} occupancy cap"
            )));
        }
        let lo = config.edge_guard_hz + half;
        let hi = config.band_upper_hz - config.edge_guard_hz - half;
        if lo >= hi {
            return Err(Error::InfeasibleScene(format!(
                "emitter {i} ({:.3} MHz wide) does not fit inside the guarded band",
                2.0 * half / 1e6
            )));
        }

        let guard = match config.placement {
            Placement::Random => None,
            Placement::NonOverlapping { guard_hz } => Some(guard_hz),
        };
        let carrier_hz = match place(&mut rng, &emitters, half, lo, hi, guard) {
            Some(c) => c,
            None => {
                // Boxed in by earlier carriers: lay out everything placed so
                // far again, keeping their other parameters.
                let mut result = None;
                for _ in 0..LAYOUT_RESTARTS {
                    let mut fresh: Vec<EmitterSpec> = Vec::with_capacity(emitters.len());
                    let mut ok = true;
                    for e in &emitters {
                        let h = 0.5 * e.occupied_bw_hz();
                        let (elo, ehi) = (config.edge_guard_hz + h, config.band_upper_hz - config.edge_guard_hz - h);
                        match place(&mut rng, &fresh, h, elo, ehi, guard) {
                            Some(c) => fresh.push(EmitterSpec { carrier_hz: c, ..e.clone() }),
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        if let Some(c) = place(&mut rng, &fresh, half, lo, hi, guard) {
                            emitters = fresh;
                            result = Some(c);
                            break;
                        }
                    }
                }
                result.ok_or_else(|| Error::InfeasibleScene(format!("could not place emitter {i} without overlap")))?
            }
        };
        emitters.push(EmitterSpec {
            modulation,
            carrier_hz,
            symbol_rate_hz,
            amplitude,
            channel_gain,
        });
    }

    let scene = WidebandScene {
        band_upper_hz: config.band_upper_hz,
        n_samples: config.n_samples,
        emitters,
        noise_psd: config.noise_psd,
        seed: seed::stream(rng_seed, b"symbols"),
    };
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> SamplingGrid {
        SamplingGrid {
            sample_rate_hz: 200e6,
            n_samples: n,
        }
    }

    fn emitter(m: ModulationKind, carrier: f64, rate: f64) -> EmitterSpec {
        EmitterSpec {
            modulation: m,
            carrier_hz: carrier,
            symbol_rate_hz: rate,
            amplitude: 1.0,
            channel_gain: unit_gain(),
        }
    }

    #[test]
    fn constellation_sizes_and_energy() {
        for m in ModulationKind::ALL {
            let c = m.constellation();
            assert_eq!(c.len(), m.order());
            let mean: f64 = c.iter().map(|p| p.norm_sqr()).sum::<f64>() / c.len() as f64;
            assert!((mean - 1.0).abs() < 1e-12, "{m}: {mean}");
        }
    }

    #[test]
    fn qam32_points_are_distinct() {
        let c = ModulationKind::Qam32.constellation();
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                assert!((c[i] - c[j]).norm() > 1e-6);
            }
        }
    }

    #[test]
    fn rrc_pulse_special_points_are_continuous() {
        let edge = 1.0 / (4.0 * ROLLOFF);
        let at = rrc_pulse(edge, ROLLOFF);
        let near = rrc_pulse(edge + 1e-6, ROLLOFF);
        assert!((at - near).abs() < 1e-4);
        assert!((rrc_pulse(0.0, ROLLOFF) - rrc_pulse(1e-7, ROLLOFF)).abs() < 1e-6);
    }

    #[test]
    fn modulate_rejects_bad_symbol() {
        let e = emitter(ModulationKind::Bpsk, 10e6, 1e6);
        let err = modulate_nb(&e, &[0, 2], 0, grid(4096)).unwrap_err();
        assert!(matches!(err, Error::SymbolOutOfRange { index: 2, size: 2 }));
    }

    #[test]
    fn modulate_rejects_band_beyond_nyquist() {
        let e = emitter(ModulationKind::Bpsk, 99.9e6, 1e6);
        assert!(matches!(
            modulate_nb(&e, &[0; 64], 0, grid(4096)),
            Err(Error::BandOutsideGrid { .. })
        ));
    }

    #[test]
    fn modulate_rejects_short_grid() {
        let e = emitter(ModulationKind::Bpsk, 10e6, 0.5e6);
        assert!(modulate_nb(&e, &[0; 64], 0, grid(1024)).is_err());
    }

    #[test]
    fn bask_all_ones_is_a_tone() {
        let g = grid(4096);
        // Carrier on an exact bin so the tone is a single line.
        let bin = g.sample_rate_hz / g.n_samples as f64;
        let e = emitter(ModulationKind::Bask, 400.0 * bin, 1e6);
        let syms = vec![1; symbols_needed(&e, g)];
        let ts = modulate_nb(&e, &syms, PULSE_HALF_SPAN, g).unwrap();
        let spec = crate::recovery::dft::dft(&ts.samples, crate::recovery::dft::Direction::Forward).unwrap();
        let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        assert!(spec[400].norm_sqr() / total > 0.999);
    }

    #[test]
    fn bpsk_envelope_flips_sign() {
        let g = grid(4096);
        let e = emitter(ModulationKind::Bpsk, 0.0 + 1e6, 1e6);
        // Zero carrier would violate nothing in modulate_nb; use a small one and undo it.
        let ts = modulate_nb(&e, &[0, 1], 0, g).unwrap();
        let sps = g.sample_rate_hz / e.symbol_rate_hz;
        let omega = 2.0 * PI * e.carrier_hz / g.sample_rate_hz;
        let base = |n: usize| (ts.samples[n] * Complex64::from_polar(1.0, -omega * n as f64)).re;
        assert!(base(0) > 0.0);
        assert!(base(sps as usize) < 0.0);
    }

    #[test]
    fn awgn_infinite_snr_is_identity() {
        let ts = TimeSeries {
            samples: vec![Complex64::new(1.0, -2.0); 16],
            sample_rate_hz: 1.0,
        };
        assert_eq!(add_awgn(&ts, f64::INFINITY, 3).unwrap(), ts);
    }

    #[test]
    fn awgn_rejects_zero_power() {
        let ts = TimeSeries::zeros(grid(16));
        assert!(matches!(add_awgn(&ts, 0.0, 1), Err(Error::ZeroPowerSignal)));
    }

    #[test]
    fn scene_validation_catches_overflow() {
        let mut s = WidebandScene {
            band_upper_hz: 100e6,
            n_samples: 1000,
            emitters: vec![],
            noise_psd: 0.0,
            seed: 0,
        };
        assert!(matches!(s.validate(), Err(Error::NotPowerOfTwo(1000))));
        s.n_samples = 1024;
        s.emitters.push(emitter(ModulationKind::Qpsk, 99.5e6, 1e6));
        assert!(matches!(s.validate(), Err(Error::BandOutsideGrid { .. })));
    }

    #[test]
    fn random_scene_infeasible_when_too_dense() {
        let cfg = SceneConfig {
            min_emitters: 40,
            max_emitters: 40,
            n_samples: 1024,
            ..SceneConfig::default()
        };
        assert!(matches!(random_scene(&cfg, 1), Err(Error::InfeasibleScene(_))));
    }

    #[test]
    fn scene_json_round_trip() {
        let scene = random_scene(&SceneConfig::default(), 5).unwrap();
        let text = serde_json::to_string(&scene).unwrap();
        let back: WidebandScene = serde_json::from_str(&text).unwrap();
        assert_eq!(scene, back);
    }
}

//! Phase scans: simulated fringe records and their CSV form.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::engine::{
    blocked_probability_from_signal, probability_from_signal, signal_state, InterferometerConfig,
    Polarization, Source,
};
use crate::error::{Error, Result};

pub const MIN_SCAN_POINTS: usize = 8;
pub const CSV_HEADER: [&str; 7] = [
    "polarization",
    "theta_rad",
    "delta_rad",
    "phi_in_rad",
    "probability",
    "counts",
    "shots",
];

/// Exact probabilities slightly outside [0, 1] by at most this are rounding.
const PROB_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    /// (φ_in, probability)
    Exact(Vec<(f64, f64)>),
    /// (φ_in, counts, shots)
    Sampled(Vec<(f64, u64, u64)>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::Exact(v) => v.len(),
            Samples::Sampled(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, Samples::Sampled(_))
    }

    pub fn phases(&self) -> Vec<f64> {
        match self {
            Samples::Exact(v) => v.iter().map(|s| s.0).collect(),
            Samples::Sampled(v) => v.iter().map(|s| s.0).collect(),
        }
    }
}

/// One fringe measurement: a fixed analyzer and waveplate, φ_in varied.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanRecord {
    polarization: Polarization,
    theta: f64,
    delta: f64,
    samples: Samples,
}

impl PhaseScanRecord {
    pub fn new(polarization: Polarization, theta: f64, delta: f64, samples: Samples) -> Result<Self> {
        if !theta.is_finite() || !delta.is_finite() {
            return Err(Error::InvalidScan("waveplate angles must be finite".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidScan("no samples".into()));
        }
        match &samples {
            Samples::Exact(v) => {
                for &(phi, p) in v {
                    if !phi.is_finite() || !p.is_finite() || !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidScan(format!(
                            "sample ({phi}, {p}) is not a probability at a finite phase"
                        )));
                    }
                }
            }
            Samples::Sampled(v) => {
                for &(phi, counts, shots) in v {
                    if !phi.is_finite() || shots == 0 || counts > shots {
                        return Err(Error::InvalidScan(format!(
                            "sample ({phi}, {counts}/{shots}) needs finite phase and 0 <= counts <= shots, shots > 0"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            polarization,
            theta,
            delta,
            samples,
        })
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn samples(&self) -> &Samples {
        &self.samples
    }
    pub fn is_sampled(&self) -> bool {
        self.samples.is_sampled()
    }
}

/// Where and how to record one scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSetting {
    pub polarization: Polarization,
    pub theta: f64,
    pub delta: f64,
    /// `Some(k)`: only source k's signal beam reaches the beamsplitter.
    pub open_arm: Option<Source>,
}

impl ScanSetting {
    pub fn fringe(polarization: Polarization, theta: f64, delta: f64) -> Self {
        Self {
            polarization,
            theta,
            delta,
            open_arm: None,
        }
    }

    pub fn blocked(polarization: Polarization, open: Source) -> Self {
        Self {
            polarization,
            theta: 0.0,
            delta: 0.0,
            open_arm: Some(open),
        }
    }

    /// Random-stream id: a hash of the setting, so every scan in a plan gets
    /// its own stream regardless of the order in which scans are run.
    fn stream_id(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let arm = match self.open_arm {
            None => 0u8,
            Some(Source::One) => 1,
            Some(Source::Two) => 2,
        };
        let mut bytes = Vec::with_capacity(18);
        bytes.push(self.polarization as u8);
        bytes.extend_from_slice(&self.theta.to_bits().to_le_bytes());
        bytes.extend_from_slice(&self.delta.to_bits().to_le_bytes());
        bytes.push(arm);
        bytes
            .iter()
            .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
    }
}

/// Uniform grid of `n` phases on [0, 2π).
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

fn clamp_probability(p: f64) -> Result<f64> {
    if p < -PROB_SLACK || p > 1.0 + PROB_SLACK {
        return Err(Error::Numeric(format!("probability {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Simulate one scan. `shots = None` records exact probabilities; otherwise
/// each point records Poisson(shots·P) counts, capped at `shots`.
pub fn simulate_setting(
    config: &InterferometerConfig,
    setting: &ScanSetting,
    n_points: usize,
    shots: Option<u64>,
    seed: u64,
) -> Result<PhaseScanRecord> {
    if n_points < MIN_SCAN_POINTS {
        return Err(Error::InvalidScan(format!(
            "{n_points} points requested, need at least {MIN_SCAN_POINTS}"
        )));
    }
    if shots == Some(0) {
        return Err(Error::InvalidScan("shots must be positive in sampled mode".into()));
    }
    let cfg = config.with_waveplate(setting.theta, setting.delta);
    let rho_s = signal_state(&cfg)?;
    let projector = setting.polarization.projector();
    let grid = phase_grid(n_points);
    let mut probs = Vec::with_capacity(n_points);
    for &phi in &grid {
        let p = match setting.open_arm {
            Some(open) => blocked_probability_from_signal(&rho_s, &projector, open)?,
            None => probability_from_signal(&rho_s, &projector, cfg.with_phi_in(phi).phi_s)?,
        };
        probs.push(clamp_probability(p)?);
    }
    let samples = match shots {
        None => Samples::Exact(grid.into_iter().zip(probs).collect()),
        Some(shots) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(setting.stream_id());
            let mut out = Vec::with_capacity(n_points);
            for (phi, p) in grid.into_iter().zip(probs) {
                out.push((phi, draw_counts(&mut rng, shots, p)?, shots));
            }
            Samples::Sampled(out)
        }
    };
    PhaseScanRecord::new(setting.polarization, setting.theta, setting.delta, samples)
}

fn draw_counts<R: Rng>(rng: &mut R, shots: u64, p: f64) -> Result<u64> {
    let mean = shots as f64 * p;
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::Numeric(format!("Poisson({mean}): {e}")))?;
    let k: f64 = dist.sample(rng);
    Ok((k as u64).min(shots))
}

/// Fringe scan over `n_points` phases with the given analyzer; see [`simulate_setting`].
pub fn simulate_scan(
    config: &InterferometerConfig,
    polarization: Polarization,
    n_points: usize,
    shots: Option<u64>,
    seed: u64,
) -> Result<PhaseScanRecord> {
    let setting = ScanSetting::fringe(polarization, config.theta, config.delta);
    simulate_setting(config, &setting, n_points, shots, seed)
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_scan_csv<W: Write>(record: &PhaseScanRecord, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    let pol = record.polarization.as_str();
    let theta = fmt_f64(record.theta);
    let delta = fmt_f64(record.delta);
    match &record.samples {
        Samples::Exact(v) => {
            for &(phi, p) in v {
                w.write_record([pol, &theta, &delta, &fmt_f64(phi), &fmt_f64(p), "", ""])?;
            }
        }
        Samples::Sampled(v) => {
            for &(phi, counts, shots) in v {
                w.write_record([
                    pol,
                    &theta,
                    &delta,
                    &fmt_f64(phi),
                    "",
                    &counts.to_string(),
                    &shots.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn scan_to_csv_string(record: &PhaseScanRecord) -> Result<String> {
    let mut buf = Vec::new();
    write_scan_csv(record, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Csv(e.to_string()))
}

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("line {line}: bad {what} `{field}`")))
}

fn parse_u64(field: &str, what: &str, line: usize) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("line {line}: bad {what} `{field}`")))
}

pub fn read_scan_csv<R: Read>(input: R) -> Result<PhaseScanRecord> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Csv(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut setting: Option<(Polarization, f64, f64)> = None;
    let mut exact = Vec::new();
    let mut sampled = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row?;
        let line = idx + 2;
        let pol: Polarization = row[0]
            .parse()
            .map_err(|_| Error::Csv(format!("line {line}: bad polarization `{}`", &row[0])))?;
        let theta = parse_f64(&row[1], "theta_rad", line)?;
        let delta = parse_f64(&row[2], "delta_rad", line)?;
        match setting {
            None => setting = Some((pol, theta, delta)),
            Some(s) if s != (pol, theta, delta) => {
                return Err(Error::Csv(format!(
                    "line {line}: setting changes within one scan"
                )))
            }
            _ => {}
        }
        let phi = parse_f64(&row[3], "phi_in_rad", line)?;
        let (prob, counts, shots) = (row[4].trim(), row[5].trim(), row[6].trim());
        match (prob.is_empty(), counts.is_empty() && shots.is_empty()) {
            (false, true) => exact.push((phi, parse_f64(prob, "probability", line)?)),
            (true, false) => sampled.push((
                phi,
                parse_u64(counts, "counts", line)?,
                parse_u64(shots, "shots", line)?,
            )),
            _ => {
                return Err(Error::Csv(format!(
                    "line {line}: exactly one of probability or counts/shots must be given"
                )))
            }
        }
    }
    let (pol, theta, delta) = setting.ok_or_else(|| Error::Csv("scan has no rows".into()))?;
    let samples = match (exact.is_empty(), sampled.is_empty()) {
        (false, true) => Samples::Exact(exact),
        (true, false) => Samples::Sampled(sampled),
        _ => return Err(Error::Csv("scan mixes exact and sampled rows".into())),
    };
    PhaseScanRecord::new(pol, theta, delta, samples)
}

//! Brute-force density-matrix simulation of the two-source interferometer.
//!
//! The chain is
//! 1. [`joint_unaligned_state`]: both sources in one 8-dim space
//!    (source ⊗ idler ⊗ signal);
//! 2. [`apply_alignment`]: the source-2 idler is sent through the waveplate
//!    unitary and the attenuator and overlaid on the source-1 idler, with two
//!    extra loss modes (16-dim: idler ⊕ loss ⊗ signal₁ ⊕ signal₂);
//! 3. [`reduce_signal`]: trace out idler and loss modes (4-dim);
//! 4. [`detection_probability`]: project the signal onto one beamsplitter
//!    output port and a polarization.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, expi, CMatrix, I, ZERO};
use crate::state::{build_state, DensityMatrix, GeneralizedWernerParams};

const NORM_TOL: f64 = 1e-12;

/// Propagation phases picked up by each joint idler/signal polarization
/// component between the two sources (source 1 ket, source 2 bra).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTable {
    pub phi_hh: f64,
    pub phi_vh: f64,
    pub phi_hv: f64,
    pub phi_vv: f64,
    pub phi_hh_vv: f64,
    pub phi_vv_hh: f64,
}

impl PhaseTable {
    /// A table for which the joint two-source state is always positive
    /// semidefinite: the VV phase tracks the HH phase, and the HH↔VV
    /// phases absorb the state phase `phi`. `phi_hv` and `phi_vh` are free.
    pub fn consistent(phi_hh: f64, phi_hv: f64, phi_vh: f64, state_phi: f64) -> Self {
        Self {
            phi_hh,
            phi_vh,
            phi_hv,
            phi_vv: phi_hh,
            phi_hh_vv: phi_hh - state_phi,
            phi_vv_hh: phi_hh + state_phi,
        }
    }

    /// Phase difference seen by the H-polarized signal.
    pub fn chi(&self) -> f64 {
        self.phi_vh - self.phi_hh
    }

    /// Phase difference seen by the V-polarized signal.
    pub fn chi_v(&self) -> f64 {
        self.phi_vv - self.phi_hv
    }

    /// Phase difference between the two HH↔VV cross terms.
    pub fn chi_cross(&self) -> f64 {
        self.phi_vv_hh - self.phi_hh_vv
    }

    fn validate(&self) -> Result<()> {
        let all = [
            ("phi_hh", self.phi_hh),
            ("phi_vh", self.phi_vh),
            ("phi_hv", self.phi_hv),
            ("phi_vv", self.phi_vv),
            ("phi_hh_vv", self.phi_hh_vv),
            ("phi_vv_hh", self.phi_vv_hh),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerConfig {
    pub state: GeneralizedWernerParams,
    pub b1_mag: f64,
    pub b2_mag: f64,
    pub arg_b1: f64,
    pub arg_b2: f64,
    /// Idler propagation phase.
    pub phi_i: f64,
    /// Signal propagation phase; the knob varied in a phase scan.
    pub phi_s: f64,
    pub phases: PhaseTable,
    /// Waveplate rotation angle.
    pub theta: f64,
    /// Waveplate retardance parameter.
    pub delta: f64,
    /// Attenuator amplitude transmissions.
    pub t_h: f64,
    pub t_v: f64,
}

impl InterferometerConfig {
    /// Balanced emission, lossless, all phases and waveplate angles zero.
    pub fn new(state: GeneralizedWernerParams) -> Self {
        Self {
            state,
            b1_mag: FRAC_1_SQRT_2,
            b2_mag: FRAC_1_SQRT_2,
            arg_b1: 0.0,
            arg_b2: 0.0,
            phi_i: 0.0,
            phi_s: 0.0,
            phases: PhaseTable::default(),
            theta: 0.0,
            delta: 0.0,
            t_h: 1.0,
            t_v: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("b1_mag", self.b1_mag), ("b2_mag", self.b2_mag)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("{v} is not in [0, 1]")));
            }
        }
        let norm = self.b1_mag * self.b1_mag + self.b2_mag * self.b2_mag;
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::param(
                "b1_mag",
                format!("|b1|^2 + |b2|^2 = {norm}, expected 1"),
            ));
        }
        for (name, v) in [("t_h", self.t_h), ("t_v", self.t_v)] {
            if !v.is_finite() || v <= 0.0 || v > 1.0 {
                return Err(Error::param(name, format!("{v} is not in (0, 1]")));
            }
        }
        for (name, v) in [
            ("arg_b1", self.arg_b1),
            ("arg_b2", self.arg_b2),
            ("phi_i", self.phi_i),
            ("phi_s", self.phi_s),
            ("theta", self.theta),
            ("delta", self.delta),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        self.phases.validate()
    }

    pub fn b1(&self) -> Complex64 {
        Complex64::from_polar(self.b1_mag, self.arg_b1)
    }

    pub fn b2(&self) -> Complex64 {
        Complex64::from_polar(self.b2_mag, self.arg_b2)
    }

    /// Total interferometric phase.
    pub fn phi_in(&self) -> f64 {
        self.arg_b1 - self.arg_b2 + self.phi_i - self.phi_s
    }

    /// Same configuration with the signal phase chosen so that
    /// [`phi_in`](Self::phi_in) equals `phi_in`.
    pub fn with_phi_in(mut self, phi_in: f64) -> Self {
        self.phi_s = self.arg_b1 - self.arg_b2 + self.phi_i - phi_in;
        self
    }

    pub fn with_waveplate(mut self, theta: f64, delta: f64) -> Self {
        self.theta = theta;
        self.delta = delta;
        self
    }

    /// |b₁||b₂|
    pub fn b_product(&self) -> f64 {
        self.b1_mag * self.b2_mag
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    pub fn projector(self) -> PolarizationProjector {
        PolarizationProjector::from(self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
            Polarization::D => "D",
            Polarization::A => "A",
            Polarization::R => "R",
            Polarization::L => "L",
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" => Ok(Polarization::H),
            "V" | "v" => Ok(Polarization::V),
            "D" | "d" => Ok(Polarization::D),
            "A" | "a" => Ok(Polarization::A),
            "R" | "r" => Ok(Polarization::R),
            "L" | "l" => Ok(Polarization::L),
            other => Err(Error::param(
                "polarization",
                format!("unknown polarization `{other}` (expected H, V, D, A, R or L)"),
            )),
        }
    }
}

/// Polarization analyzer in front of the detector, as amplitudes on H and V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationProjector {
    pub label: Option<Polarization>,
    pub c_h: Complex64,
    pub c_v: Complex64,
}

impl PolarizationProjector {
    /// Arbitrary analyzer; amplitudes must be normalized.
    pub fn custom(c_h: Complex64, c_v: Complex64) -> Result<Self> {
        let norm = c_h.norm_sqr() + c_v.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::param(
                "projector",
                format!("|c_h|^2 + |c_v|^2 = {norm}, expected 1"),
            ));
        }
        Ok(Self {
            label: None,
            c_h,
            c_v,
        })
    }
}

impl From<Polarization> for PolarizationProjector {
    // R = (H - iV)/√2 and L = (H + iV)/√2; with this choice the R fringe has
    // the negative T_H T_V cross term in its amplitude.
    fn from(p: Polarization) -> Self {
        let s = FRAC_1_SQRT_2;
        let (c_h, c_v) = match p {
            Polarization::H => (c(1.0, 0.0), ZERO),
            Polarization::V => (ZERO, c(1.0, 0.0)),
            Polarization::D => (c(s, 0.0), c(s, 0.0)),
            Polarization::A => (c(s, 0.0), c(-s, 0.0)),
            Polarization::R => (c(s, 0.0), c(0.0, -s)),
            Polarization::L => (c(s, 0.0), c(0.0, s)),
        };
        Self {
            label: Some(p),
            c_h,
            c_v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    One,
    Two,
}

impl Source {
    pub fn index(self) -> usize {
        match self {
            Source::One => 1,
            Source::Two => 2,
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Source::One),
            "2" => Ok(Source::Two),
            other => Err(Error::param("block", format!("`{other}` is not 1 or 2"))),
        }
    }
}

/// Waveplate unitary on the idler polarization.
pub fn unitary(theta: f64, delta: f64) -> CMatrix {
    let (s, co) = (2.0 * theta).sin_cos();
    let m = expi(-delta);
    let p = expi(delta);
    CMatrix::from_row_slice(2, 2, &[m * co, m * s, p * s, -p * co])
}

pub fn joint_labels() -> Vec<String> {
    let mut out = Vec::with_capacity(8);
    for k in 1..=2 {
        for mu in ["H", "V"] {
            for nu in ["H", "V"] {
                out.push(format!("{mu}_I{k} {nu}_S{k}"));
            }
        }
    }
    out
}

pub fn aligned_labels() -> Vec<String> {
    let idler = ["H_I1", "V_I1", "H_0", "V_0"];
    let signal = ["H_S1", "V_S1", "H_S2", "V_S2"];
    let mut out = Vec::with_capacity(16);
    for i in idler {
        for s in signal {
            out.push(format!("{i} {s}"));
        }
    }
    out
}

pub fn signal_labels() -> Vec<String> {
    ["H_S1", "V_S1", "H_S2", "V_S2"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// The inter-source coherence matrix: entry (a, b) couples the source-1
/// component a with the source-2 component b (both indexed idler·2 + signal).
fn cross_coherence(config: &InterferometerConfig) -> CMatrix {
    let params = &config.state;
    let n = params.noise_floor();
    let x = params.coherence();
    let t = &config.phases;
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = expi(t.phi_hh) * (params.eta() * params.i_h() + n);
    m[(1, 1)] = expi(t.phi_hv) * n;
    m[(2, 2)] = expi(t.phi_vh) * n;
    m[(3, 3)] = expi(t.phi_vv) * (params.eta() * params.i_v() + n);
    m[(0, 3)] = expi(t.phi_hh_vv) * x;
    m[(3, 0)] = expi(t.phi_vv_hh) * x;
    m
}

/// Joint state of both sources before the idlers are aligned
/// (index: source·4 + idler·2 + signal). Fails if the phase table is
/// incompatible with a positive semidefinite joint state.
pub fn joint_unaligned_state(config: &InterferometerConfig) -> Result<DensityMatrix> {
    config.validate()?;
    let rho = build_state(&config.state);
    let b1 = config.b1();
    let b2 = config.b2();
    let cross = cross_coherence(config) * (b1 * b2.conj());
    let mut m = CMatrix::zeros(8, 8);
    for a in 0..4 {
        for b in 0..4 {
            m[(a, b)] = rho.get(a, b) * b1.norm_sqr();
            m[(4 + a, 4 + b)] = rho.get(a, b) * b2.norm_sqr();
            m[(a, 4 + b)] = cross[(a, b)];
            m[(4 + b, a)] = cross[(a, b)].conj();
        }
    }
    DensityMatrix::new(m, joint_labels())
}

/// Isometry from the 8-dim joint space into the 16-dim aligned space.
pub fn alignment_map(config: &InterferometerConfig) -> CMatrix {
    let u = unitary(config.theta, config.delta);
    let phase = expi(-config.phi_i);
    let t = [config.t_h, config.t_v];
    let mut a = CMatrix::zeros(16, 8);
    for mu in 0..2 {
        for nu in 0..2 {
            // Source 1 embeds unchanged.
            a[(mu * 4 + nu, mu * 2 + nu)] = c(1.0, 0.0);
            // Source 2: idler μ → e^{-iφ_I} T_μ Σ_λ U*_{μλ}|λ⟩ + R_μ|μ₀⟩, signal ν → S₂.
            let col = 4 + mu * 2 + nu;
            let sig = 2 + nu;
            for lambda in 0..2 {
                a[(lambda * 4 + sig, col)] = phase * u[(mu, lambda)].conj() * t[mu];
            }
            let r = (1.0 - t[mu] * t[mu]).max(0.0).sqrt();
            a[((2 + mu) * 4 + sig, col)] = c(r, 0.0);
        }
    }
    a
}

pub fn apply_alignment(config: &InterferometerConfig, rho8: &DensityMatrix) -> Result<DensityMatrix> {
    if rho8.dim() != 8 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            got: rho8.dim(),
        });
    }
    config.validate()?;
    let a = alignment_map(config);
    DensityMatrix::new(&a * rho8.entries() * a.adjoint(), aligned_labels())
}

/// Partial trace over the idler and loss modes of a 16-dim aligned state.
pub fn reduce_signal(rho16: &DensityMatrix) -> Result<DensityMatrix> {
    if rho16.dim() != 16 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            got: rho16.dim(),
        });
    }
    let m = rho16.entries();
    let out = CMatrix::from_fn(4, 4, |s, t| (0..4).map(|i| m[(i * 4 + s, i * 4 + t)]).sum());
    DensityMatrix::new(out, signal_labels())
}

/// Reduced signal state for a configuration. Independent of `phi_s`.
pub fn signal_state(config: &InterferometerConfig) -> Result<DensityMatrix> {
    let rho8 = joint_unaligned_state(config)?;
    reduce_signal(&apply_alignment(config, &rho8)?)
}

fn output_mode(projector: &PolarizationProjector, phi_s: f64, keep: [bool; 2]) -> [Complex64; 4] {
    let s = FRAC_1_SQRT_2;
    let arm2 = -I * expi(-phi_s) * s;
    let k1 = if keep[0] { s } else { 0.0 };
    let k2 = if keep[1] { arm2 } else { ZERO };
    [
        projector.c_h * k1,
        projector.c_v * k1,
        projector.c_h * k2,
        projector.c_v * k2,
    ]
}

fn expectation(rho_s: &DensityMatrix, mode: &[Complex64; 4]) -> f64 {
    let mut acc = ZERO;
    for a in 0..4 {
        for b in 0..4 {
            acc += mode[a].conj() * rho_s.get(a, b) * mode[b];
        }
    }
    acc.re
}

fn check_signal_dim(rho_s: &DensityMatrix) -> Result<()> {
    if rho_s.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho_s.dim(),
        });
    }
    Ok(())
}

/// Detection probability at the monitored output port for a precomputed
/// signal state; lets a phase scan reuse one signal state across `phi_s`.
pub fn probability_from_signal(
    rho_s: &DensityMatrix,
    projector: &PolarizationProjector,
    phi_s: f64,
) -> Result<f64> {
    check_signal_dim(rho_s)?;
    Ok(expectation(rho_s, &output_mode(projector, phi_s, [true, true])))
}

/// Detection probability with only one source's signal arm open.
pub fn blocked_probability_from_signal(
    rho_s: &DensityMatrix,
    projector: &PolarizationProjector,
    open: Source,
) -> Result<f64> {
    check_signal_dim(rho_s)?;
    let keep = match open {
        Source::One => [true, false],
        Source::Two => [false, true],
    };
    Ok(expectation(rho_s, &output_mode(projector, 0.0, keep)))
}

pub fn detection_probability(
    config: &InterferometerConfig,
    projector: &PolarizationProjector,
) -> Result<f64> {
    probability_from_signal(&signal_state(config)?, projector, config.phi_s)
}

/// Probability recorded when only `open`'s signal beam reaches the beamsplitter.
pub fn blocked_arm_probability(
    config: &InterferometerConfig,
    projector: &PolarizationProjector,
    open: Source,
) -> Result<f64> {
    blocked_probability_from_signal(&signal_state(config)?, projector, open)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use std::f64::consts::PI;

    fn rho4() -> GeneralizedWernerParams {
        GeneralizedWernerParams::new(0.7, 1.0, 0.5, 0.0).unwrap()
    }

    #[test]
    fn unitary_is_unitary() {
        for &(th, de) in &[(0.0, 0.0), (0.3, 1.2), (PI / 8.0, -2.0), (1.7, 4.4)] {
            let u = unitary(th, de);
            let prod = u.adjoint() * &u;
            assert!(max_abs_diff(&prod, &CMatrix::identity(2, 2)) < 1e-14);
        }
    }

    #[test]
    fn alignment_is_isometry() {
        let mut cfg = InterferometerConfig::new(rho4()).with_waveplate(0.4, 1.1);
        cfg.t_h = 0.25;
        cfg.t_v = 0.35;
        cfg.phi_i = 0.9;
        let a = alignment_map(&cfg);
        assert!(max_abs_diff(&(a.adjoint() * &a), &CMatrix::identity(8, 8)) < 1e-14);
    }

    #[test]
    fn single_source_joint_state() {
        let mut cfg = InterferometerConfig::new(rho4());
        cfg.b1_mag = 1.0;
        cfg.b2_mag = 0.0;
        let rho8 = joint_unaligned_state(&cfg).unwrap();
        let rho = build_state(&cfg.state);
        for a in 0..8 {
            for b in 0..8 {
                let want = if a < 4 && b < 4 { rho.get(a, b) } else { ZERO };
                assert!((rho8.get(a, b) - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pure_two_source_state() {
        let cfg = InterferometerConfig::new(GeneralizedWernerParams::new(1.0, 1.0, 0.5, 0.0).unwrap());
        let rho8 = joint_unaligned_state(&cfg).unwrap();
        let mut ket = [ZERO; 8];
        for k in [0, 3, 4, 7] {
            ket[k] = c(0.5, 0.0);
        }
        let v = CMatrix::from_row_slice(8, 1, &ket);
        assert!(max_abs_diff(rho8.entries(), &(&v * v.adjoint())) < 1e-15);
    }

    #[test]
    fn source_block_traces() {
        let mut cfg = InterferometerConfig::new(rho4());
        cfg.b1_mag = 0.6;
        cfg.b2_mag = 0.8;
        let rho8 = joint_unaligned_state(&cfg).unwrap();
        let t1: f64 = (0..4).map(|k| rho8.get(k, k).re).sum();
        let t2: f64 = (4..8).map(|k| rho8.get(k, k).re).sum();
        assert!((t1 - 0.36).abs() < 1e-15);
        assert!((t2 - 0.64).abs() < 1e-15);
    }

    #[test]
    fn rejects_unphysical_phase_table() {
        let mut cfg = InterferometerConfig::new(GeneralizedWernerParams::new(1.0, 1.0, 0.5, 0.0).unwrap());
        cfg.phases.phi_vv = PI;
        assert!(matches!(
            joint_unaligned_state(&cfg),
            Err(Error::InvalidDensityMatrix(_))
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = InterferometerConfig::new(rho4());
        cfg.b1_mag = 0.9;
        assert!(cfg.validate().is_err());
        let mut cfg = InterferometerConfig::new(rho4());
        cfg.t_v = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidParameter { name, .. }) if name == "t_v"));
    }

    #[test]
    fn single_source_signal_state() {
        let mut cfg = InterferometerConfig::new(rho4());
        cfg.b1_mag = 1.0;
        cfg.b2_mag = 0.0;
        let rs = signal_state(&cfg).unwrap();
        let want = [0.5, 0.5, 0.0, 0.0];
        for k in 0..4 {
            assert!((rs.get(k, k).re - want[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn lossless_direct_embedding() {
        let mut cfg = InterferometerConfig::new(rho4());
        cfg.b1_mag = 1.0;
        cfg.b2_mag = 0.0;
        let rho8 = joint_unaligned_state(&cfg).unwrap();
        let rho16 = apply_alignment(&cfg, &rho8).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let (ia, sa) = (a / 2, a % 2);
                let (ib, sb) = (b / 2, b % 2);
                assert_eq!(rho16.get(ia * 4 + sa, ib * 4 + sb), rho8.get(a, b));
            }
        }
    }

    #[test]
    fn blocked_arm_values() {
        let cfg = InterferometerConfig::new(rho4());
        let p = blocked_arm_probability(&cfg, &Polarization::H.projector(), Source::One).unwrap();
        assert!((p - 0.125).abs() < 1e-15);
        let mut cfg = cfg;
        cfg.b1_mag = 1.0;
        cfg.b2_mag = 0.0;
        let p = blocked_arm_probability(&cfg, &Polarization::H.projector(), Source::Two).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn pure_state_full_visibility() {
        let cfg = InterferometerConfig::new(GeneralizedWernerParams::new(1.0, 1.0, 0.5, 0.0).unwrap());
        let rs = signal_state(&cfg).unwrap();
        let proj = Polarization::H.projector();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..360 {
            let x = 2.0 * PI * k as f64 / 360.0;
            let p = probability_from_signal(&rs, &proj, cfg.with_phi_in(x).phi_s).unwrap();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        assert!(lo.abs() < 1e-12);
        assert!((hi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fully_mixed_is_flat() {
        let cfg = InterferometerConfig::new(GeneralizedWernerParams::new(0.0, 1.0, 0.5, 0.0).unwrap());
        for k in 0..12 {
            let x = k as f64 * 0.5;
            let p = detection_probability(&cfg.with_phi_in(x), &Polarization::H.projector()).unwrap();
            assert!((p - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn parses_labels() {
        assert_eq!("R".parse::<Polarization>().unwrap(), Polarization::R);
        assert!("X".parse::<Polarization>().is_err());
        assert_eq!("2".parse::<Source>().unwrap(), Source::Two);
    }
}

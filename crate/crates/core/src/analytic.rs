//! Closed-form single-photon fringes and visibilities.
//!
//! Every fringe is `offset + amplitude·sin(φ_in + phase0)`. The interference
//! term is a sum of sinusoids in φ_in whose weights are products of the state
//! populations, the attenuator transmissions and the waveplate factors; they
//! are folded into one sinusoid with [`combine_sinusoids`].

use std::f64::consts::{FRAC_PI_2, PI};

use crate::engine::{InterferometerConfig, PhaseTable, Polarization, Source};
use crate::error::{Error, Result};

/// Below this the amplitude of a combined sinusoid is treated as zero.
const CANCEL_TOL: f64 = 1e-15;
/// Tolerance for the waveplate settings at which closed-form visibilities hold.
const SETTING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeModel {
    pub offset: f64,
    pub amplitude: f64,
    pub phase0: f64,
}

impl FringeModel {
    pub fn eval(&self, phi_in: f64) -> f64 {
        self.offset + self.amplitude * (phi_in + self.phase0).sin()
    }

    pub fn max(&self) -> f64 {
        self.offset + self.amplitude
    }

    pub fn min(&self) -> f64 {
        self.offset - self.amplitude
    }

    /// (P_max - P_min)/(P_max + P_min); zero for a dark fringe.
    pub fn visibility(&self) -> f64 {
        let sum = self.max() + self.min();
        if sum < CANCEL_TOL {
            0.0
        } else {
            (self.max() - self.min()) / sum
        }
    }
}

/// `u·sin x + v·sin(x + α) = amplitude·sin(x + β)`.
pub fn combine_sinusoids(u: f64, v: f64, alpha: f64) -> (f64, f64) {
    let (s, c) = alpha.sin_cos();
    let amplitude = (u * u + v * v + 2.0 * u * v * c).max(0.0).sqrt();
    if amplitude < CANCEL_TOL {
        return (0.0, 0.0);
    }
    (amplitude, (v * s).atan2(u + v * c))
}

/// Accumulates `Σ w_k·sin(x + ψ_k)` as a single sinusoid.
#[derive(Debug, Clone, Copy, Default)]
struct SineSum {
    amplitude: f64,
    phase: f64,
}

impl SineSum {
    fn add_sin(&mut self, weight: f64, phase: f64) {
        let (a, b) = combine_sinusoids(self.amplitude, weight, phase - self.phase);
        self.phase = if a == 0.0 { 0.0 } else { self.phase + b };
        self.amplitude = a;
    }

    fn add_cos(&mut self, weight: f64, phase: f64) {
        self.add_sin(weight, phase + FRAC_PI_2);
    }
}

struct Coefficients {
    /// |b₁||b₂|
    b: f64,
    /// (1 - η)/4
    noise: f64,
    /// ηI_H + (1 - η)/4
    m_h: f64,
    m_v: f64,
    /// η𝓘√(I_H I_V)
    coh: f64,
    cos2t: f64,
    sin2t: f64,
}

impl Coefficients {
    fn new(config: &InterferometerConfig) -> Self {
        let p = &config.state;
        let noise = p.noise_floor();
        let (sin2t, cos2t) = (2.0 * config.theta).sin_cos();
        Self {
            b: config.b_product(),
            noise,
            m_h: p.eta() * p.i_h() + noise,
            m_v: p.eta() * p.i_v() + noise,
            coh: p.coherence(),
            cos2t,
            sin2t,
        }
    }
}

/// Interference contribution of the H-signal (`h`) and V-signal (`v`)
/// same-polarization cross terms, each scaled by cos 2θ.
fn add_parallel(sum: &mut SineSum, cfg: &InterferometerConfig, k: &Coefficients, h: f64, v: f64) {
    let t = &cfg.phases;
    let d = cfg.delta;
    let w = k.b * k.cos2t;
    sum.add_sin(h * w * cfg.t_h * k.m_h, t.phi_hh - d);
    sum.add_sin(-h * w * cfg.t_v * k.noise, t.phi_vh + d);
    sum.add_sin(v * w * cfg.t_h * k.noise, t.phi_hv - d);
    sum.add_sin(-v * w * cfg.t_v * k.m_v, t.phi_vv + d);
}

/// Closed-form fringe of the detection probability as a function of φ_in.
pub fn fringe_model(config: &InterferometerConfig, pol: Polarization) -> Result<FringeModel> {
    config.validate()?;
    let k = Coefficients::new(config);
    let t = &config.phases;
    let d = config.delta;
    let mut sum = SineSum::default();
    let offset = match pol {
        Polarization::H => {
            add_parallel(&mut sum, config, &k, 1.0, 0.0);
            k.m_h / 2.0 + k.noise / 2.0
        }
        Polarization::V => {
            add_parallel(&mut sum, config, &k, 0.0, 1.0);
            k.m_v / 2.0 + k.noise / 2.0
        }
        Polarization::D | Polarization::A => {
            let sign = if pol == Polarization::D { 1.0 } else { -1.0 };
            add_parallel(&mut sum, config, &k, 0.5, 0.5);
            let w = sign * k.b / 2.0 * k.coh * k.sin2t;
            sum.add_sin(w * config.t_v, t.phi_hh_vv + d);
            sum.add_sin(w * config.t_h, t.phi_vv_hh - d);
            0.25
        }
        Polarization::R | Polarization::L => {
            let sign = if pol == Polarization::R { -1.0 } else { 1.0 };
            add_parallel(&mut sum, config, &k, 0.5, 0.5);
            let w = sign * k.b / 2.0 * k.coh * k.sin2t;
            sum.add_cos(w * config.t_v, t.phi_hh_vv + d);
            sum.add_cos(-w * config.t_h, t.phi_vv_hh - d);
            0.25
        }
    };
    Ok(FringeModel {
        offset,
        amplitude: sum.amplitude,
        phase0: sum.phase,
    })
}

/// Flat detection probability with only `open`'s signal beam unblocked.
pub fn blocked_probability_closed(
    config: &InterferometerConfig,
    pol: Polarization,
    open: Source,
) -> Result<f64> {
    config.validate()?;
    let p = &config.state;
    let weight = match open {
        Source::One => config.b1_mag * config.b1_mag,
        Source::Two => config.b2_mag * config.b2_mag,
    };
    let k_h = p.eta() * p.i_h() + (1.0 - p.eta()) / 2.0;
    let k_v = p.eta() * p.i_v() + (1.0 - p.eta()) / 2.0;
    let mixed = match pol {
        Polarization::H => k_h,
        Polarization::V => k_v,
        _ => 0.5 * (k_h + k_v),
    };
    Ok(weight * mixed / 2.0)
}

/// Visibility at the settings where it has a simple closed form:
/// θ = 0 with the H (or V) cross terms in phase for H (V), and θ = π/4 for
/// the diagonal and circular analyzers.
pub fn visibility_closed(config: &InterferometerConfig, pol: Polarization) -> Result<f64> {
    config.validate()?;
    let k = Coefficients::new(config);
    let p = &config.state;
    let (th, tv) = (config.t_h, config.t_v);
    let d = config.delta;
    let require = |ok: bool, what: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::Settings(format!(
                "closed-form {pol} visibility requires {what}"
            )))
        }
    };
    match pol {
        Polarization::H | Polarization::V => {
            require(k.sin2t.abs() < SETTING_TOL, "theta = 0")?;
            let (chi, name) = if pol == Polarization::H {
                (config.phases.chi(), "cos(chi + 2 delta) = 1")
            } else {
                (config.phases.chi_v(), "cos(chi_v + 2 delta) = 1")
            };
            require(((chi + 2.0 * d).cos() - 1.0).abs() < SETTING_TOL, name)?;
            let (num, plus) = if pol == Polarization::H {
                let x = p.eta() * p.i_h();
                ((th - tv) * k.noise + th * x, 2.0 * k.noise + x)
            } else {
                let x = p.eta() * p.i_v();
                ((th - tv) * k.noise - tv * x, 2.0 * k.noise + x)
            };
            // A dark fringe has zero visibility rather than 0/0.
            if plus < CANCEL_TOL {
                return Ok(0.0);
            }
            Ok(2.0 * k.b * num.abs() / plus)
        }
        _ => {
            require(k.cos2t.abs() < SETTING_TOL, "theta = pi/4")?;
            let sign = match pol {
                Polarization::D | Polarization::A => 1.0,
                _ => -1.0,
            };
            let cross = (config.phases.chi_cross() - 2.0 * d).cos();
            let root = (th * th + tv * tv + sign * 2.0 * th * tv * cross).max(0.0).sqrt();
            Ok(2.0 * k.b * k.coh * root)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeltaTarget {
    /// cos(χ + 2δ) = 1
    H,
    /// cos(χ_v + 2δ) = 1
    V,
    /// cos(χ + 2δ) = -1
    HPrime,
    /// cos(χ_v + 2δ) = -1
    VPrime,
}

fn mod_pi(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    // `+ 0.0` turns a -0.0 remainder into 0.0.
    if r >= PI {
        0.0
    } else {
        r + 0.0
    }
}

/// Retardance that puts the θ = 0 cross terms in phase (unprimed) or in
/// antiphase (primed), in [0, π).
pub fn delta_star(phases: &PhaseTable, which: DeltaTarget) -> f64 {
    match which {
        DeltaTarget::H => mod_pi(-phases.chi() / 2.0),
        DeltaTarget::V => mod_pi(-phases.chi_v() / 2.0),
        DeltaTarget::HPrime => mod_pi((PI - phases.chi()) / 2.0),
        DeltaTarget::VPrime => mod_pi((PI - phases.chi_v()) / 2.0),
    }
}

/// Retardance with χ′ - 2δ equal to `target`, in [0, π).
pub fn delta_for_cross_phase(phases: &PhaseTable, target: f64) -> f64 {
    mod_pi((phases.chi_cross() - target) / 2.0)
}

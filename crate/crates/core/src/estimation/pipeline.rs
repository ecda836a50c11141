//! End-to-end estimation: a plan of ten scans in, an entanglement report out.
//!
//! The plan is four blocked-arm scans (each source alone, H and V analyzers),
//! four θ = 0 fringes (H and V, cross terms in phase and in antiphase) and
//! two θ = π/4 fringes (D and R at a shared retardance).

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::fit::{fit_fringe, ExtremaEstimate};
use super::inversion::{
    estimate_b1b2, estimate_coh_product, estimate_eta_lossy, ppt_and_concurrence_with_band,
    recover_icoh, recover_ih_from_offset,
};
use super::scan::{read_scan_csv, scan_to_csv_string, simulate_setting, PhaseScanRecord, ScanSetting};
use super::transmissions::{
    nearest_candidate, solve_branch, transmission_candidates, Branch, SolverTolerance,
    TransmissionObservables,
};
use crate::analytic::{delta_for_cross_phase, delta_star, DeltaTarget};
use crate::engine::{InterferometerConfig, PhaseTable, Polarization, Source};
use crate::error::{Error, Result};
use crate::state::{Verdict, EXACT_VERDICT_BAND};

pub const DEFAULT_POINTS: usize = 24;
/// Sampled-mode verdicts need |α₁| beyond this many standard errors.
pub const SAMPLED_VERDICT_SIGMAS: f64 = 2.0;
/// Sampled-mode transmission residual gate, in units of the largest
/// observable standard error.
const SAMPLED_RESIDUAL_SIGMAS: f64 = 10.0;
const SAMPLED_RANGE_SLACK: f64 = 0.1;
const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlanSlot {
    BlockedS1H,
    BlockedS2H,
    BlockedS1V,
    BlockedS2V,
    HInPhase,
    HAntiPhase,
    VInPhase,
    VAntiPhase,
    Diagonal,
    Circular,
}

impl PlanSlot {
    pub const ALL: [PlanSlot; 10] = [
        PlanSlot::BlockedS1H,
        PlanSlot::BlockedS2H,
        PlanSlot::BlockedS1V,
        PlanSlot::BlockedS2V,
        PlanSlot::HInPhase,
        PlanSlot::HAntiPhase,
        PlanSlot::VInPhase,
        PlanSlot::VAntiPhase,
        PlanSlot::Diagonal,
        PlanSlot::Circular,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            PlanSlot::BlockedS1H => "blocked_s1_H.csv",
            PlanSlot::BlockedS2H => "blocked_s2_H.csv",
            PlanSlot::BlockedS1V => "blocked_s1_V.csv",
            PlanSlot::BlockedS2V => "blocked_s2_V.csv",
            PlanSlot::HInPhase => "H_dH.csv",
            PlanSlot::HAntiPhase => "H_dH_prime.csv",
            PlanSlot::VInPhase => "V_dV.csv",
            PlanSlot::VAntiPhase => "V_dV_prime.csv",
            PlanSlot::Diagonal => "D.csv",
            PlanSlot::Circular => "R.csv",
        }
    }

    pub fn polarization(self) -> Polarization {
        match self {
            PlanSlot::BlockedS1H | PlanSlot::BlockedS2H | PlanSlot::HInPhase | PlanSlot::HAntiPhase => {
                Polarization::H
            }
            PlanSlot::BlockedS1V | PlanSlot::BlockedS2V | PlanSlot::VInPhase | PlanSlot::VAntiPhase => {
                Polarization::V
            }
            PlanSlot::Diagonal => Polarization::D,
            PlanSlot::Circular => Polarization::R,
        }
    }

    /// Waveplate and arm settings, with retardances chosen from the phase table.
    pub fn setting(self, phases: &PhaseTable, cross_phase: f64) -> ScanSetting {
        let pol = self.polarization();
        let at = |target| ScanSetting::fringe(pol, 0.0, delta_star(phases, target));
        match self {
            PlanSlot::BlockedS1H | PlanSlot::BlockedS1V => ScanSetting::blocked(pol, Source::One),
            PlanSlot::BlockedS2H | PlanSlot::BlockedS2V => ScanSetting::blocked(pol, Source::Two),
            PlanSlot::HInPhase => at(DeltaTarget::H),
            PlanSlot::HAntiPhase => at(DeltaTarget::HPrime),
            PlanSlot::VInPhase => at(DeltaTarget::V),
            PlanSlot::VAntiPhase => at(DeltaTarget::VPrime),
            PlanSlot::Diagonal | PlanSlot::Circular => {
                ScanSetting::fringe(pol, FRAC_PI_4, delta_for_cross_phase(phases, cross_phase))
            }
        }
    }
}

/// The ten scans, in [`PlanSlot::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan {
    scans: Vec<PhaseScanRecord>,
}

impl ScanPlan {
    pub fn new(scans: Vec<PhaseScanRecord>) -> Result<Self> {
        if scans.len() != PlanSlot::ALL.len() {
            return Err(Error::InvalidScan(format!(
                "a plan has {} scans, got {}",
                PlanSlot::ALL.len(),
                scans.len()
            )));
        }
        for (slot, rec) in PlanSlot::ALL.iter().zip(&scans) {
            if rec.polarization() != slot.polarization() {
                return Err(Error::InvalidScan(format!(
                    "{} holds a {} scan, expected {}",
                    slot.file_name(),
                    rec.polarization(),
                    slot.polarization()
                )));
            }
        }
        Ok(Self { scans })
    }

    pub fn get(&self, slot: PlanSlot) -> &PhaseScanRecord {
        &self.scans[slot as usize]
    }

    pub fn is_sampled(&self) -> bool {
        self.scans.iter().any(PhaseScanRecord::is_sampled)
    }

    /// SHA-256 over every scan's CSV text, each preceded by its file name.
    pub fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        for slot in PlanSlot::ALL {
            h.update(slot.file_name().as_bytes());
            h.update(b"\n");
            h.update(scan_to_csv_string(self.get(slot))?.as_bytes());
        }
        Ok(hex::encode(h.finalize()))
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for slot in PlanSlot::ALL {
            fs::write(dir.join(slot.file_name()), scan_to_csv_string(self.get(slot))?)?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let missing: Vec<String> = PlanSlot::ALL
            .iter()
            .map(|s| s.file_name())
            .filter(|name| !dir.join(name).is_file())
            .map(str::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(Error::IncompletePlan(missing));
        }
        let scans = PlanSlot::ALL
            .iter()
            .map(|slot| {
                let file = fs::File::open(dir.join(slot.file_name()))?;
                read_scan_csv(file)
                    .map_err(|e| Error::Csv(format!("{}: {e}", slot.file_name())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(scans)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSettings {
    pub points: usize,
    /// `None`: exact probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
    /// Target value of χ′ − 2δ for the θ = π/4 scans.
    pub cross_phase: f64,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            points: DEFAULT_POINTS,
            shots: None,
            seed: 0,
            cross_phase: FRAC_PI_4,
        }
    }
}

pub fn simulate_plan(config: &InterferometerConfig, settings: &PlanSettings) -> Result<ScanPlan> {
    config.validate()?;
    let scans = PlanSlot::ALL
        .par_iter()
        .map(|slot| {
            let setting = slot.setting(&config.phases, settings.cross_phase);
            simulate_setting(config, &setting, settings.points, settings.shots, settings.seed)
        })
        .collect::<Result<Vec<_>>>()?;
    ScanPlan::new(scans)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub b1b2: f64,
    /// Raw estimate; may stray outside [0, 1] under noise.
    pub eta: f64,
    pub coh_product: f64,
    pub alpha1: f64,
    pub verdict: Verdict,
    pub concurrence: f64,
    pub i_h: Option<f64>,
    pub i_coh: Option<f64>,
    /// `None` when the transmissions cannot be identified from the data.
    pub t_h: Option<f64>,
    pub t_v: Option<f64>,
    pub inputs_digest: String,
    /// Present for shot-noise data only.
    pub alpha1_stderr: Option<f64>,
    pub concurrence_stderr: Option<f64>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

impl fmt::Display for EstimationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "b1b2={}", self.b1b2)?;
        writeln!(f, "eta={}", self.eta)?;
        writeln!(f, "coh_product={}", self.coh_product)?;
        writeln!(f, "alpha1={}", self.alpha1)?;
        writeln!(f, "verdict={}", self.verdict)?;
        writeln!(f, "concurrence={}", self.concurrence)?;
        writeln!(f, "i_h={}", fmt_opt(self.i_h))?;
        writeln!(f, "i_coh={}", fmt_opt(self.i_coh))?;
        writeln!(f, "t_h={}", fmt_opt(self.t_h))?;
        writeln!(f, "t_v={}", fmt_opt(self.t_v))?;
        if let Some(s) = self.alpha1_stderr {
            writeln!(f, "alpha1_stderr={s}")?;
        }
        if let Some(s) = self.concurrence_stderr {
            writeln!(f, "concurrence_stderr={s}")?;
        }
        writeln!(f, "inputs_digest={}", self.inputs_digest)
    }
}

/// Raw fit outputs the estimate is a function of: the four blocked-arm
/// means followed by (c0, c1, c2) of the six fringes.
const RAW_LEN: usize = 4 + 6 * 3;
const FRINGE_SLOTS: [PlanSlot; 6] = [
    PlanSlot::HInPhase,
    PlanSlot::HAntiPhase,
    PlanSlot::VInPhase,
    PlanSlot::VAntiPhase,
    PlanSlot::Diagonal,
    PlanSlot::Circular,
];

#[derive(Debug, Clone, Copy)]
struct Core {
    b: f64,
    eta: f64,
    coh: f64,
    alpha1: f64,
    transmissions: Option<(f64, f64)>,
    i_h: Option<f64>,
    branch: Option<Branch>,
}

fn extrema_at(raw: &[f64; RAW_LEN], k: usize) -> ExtremaEstimate {
    let o = 4 + 3 * k;
    ExtremaEstimate::from_coefficients([raw[o], raw[o + 1], raw[o + 2]])
}

/// Estimate from raw fit outputs. With `fixed_branch` the transmission
/// solver skips its acceptance test, so the map is smooth for differentiation.
fn core_estimate(
    raw: &[f64; RAW_LEN],
    fixed_branch: Option<Branch>,
    fallback_t: (f64, f64),
    tol: SolverTolerance,
) -> Result<Core> {
    let b = estimate_b1b2(raw[0] + raw[2], raw[1] + raw[3])?;
    let [h, h_anti, v, v_anti, d, r] = std::array::from_fn(|k| extrema_at(raw, k));
    let obs = TransmissionObservables {
        p_minus_h: h.p_minus,
        p_minus_h_prime: h_anti.p_minus,
        p_minus_v: v.p_minus,
        p_minus_v_prime: v_anti.p_minus,
        p_plus_h: h.p_plus,
        p_plus_v: v.p_plus,
    };
    let (transmissions, i_h_solver, branch) = match fixed_branch {
        Some(br) => match solve_branch(&obs, b, br) {
            Ok([t_h, t_v, eta, x]) => (Some((t_h, t_v)), (eta > 1e-9).then(|| x / eta), Some(br)),
            Err(Error::Unidentifiable(_)) => (None, None, None),
            Err(e) => return Err(e),
        },
        // Several data-consistent solutions: the supplied transmissions
        // pick the one closest to them.
        None => match transmission_candidates(&obs, b, tol) {
            Ok(c) => {
                let s = nearest_candidate(&c, fallback_t).expect("candidates are never empty");
                (Some((s.t_h, s.t_v)), s.i_h, Some(s.branch))
            }
            Err(Error::Unidentifiable(_)) => (None, None, None),
            Err(e) => return Err(e),
        },
    };
    let (t_h, t_v) = transmissions.unwrap_or(fallback_t);
    let eta = estimate_eta_lossy(&h, &v, b, t_h, t_v)?;
    let coh = estimate_coh_product(d.p_minus, r.p_minus, b, t_h, t_v)?;
    let eta_c = eta.clamp(0.0, 1.0);
    let alpha1 = (1.0 - eta_c - 4.0 * coh) / 4.0;
    let i_h = match i_h_solver {
        Some(x) => Some(x),
        None => recover_ih_from_offset(h.p_plus, eta_c).ok(),
    };
    Ok(Core {
        b,
        eta,
        coh,
        alpha1,
        transmissions,
        i_h,
        branch,
    })
}

struct RawFits {
    values: [f64; RAW_LEN],
    /// Covariance blocks: one 1×1 per blocked scan, one 3×3 per fringe.
    blocked_var: [f64; 4],
    fringe_cov: [[[f64; 3]; 3]; 6],
    max_observable_stderr: f64,
}

fn raw_fits(plan: &ScanPlan) -> Result<RawFits> {
    let mut values = [0.0; RAW_LEN];
    let mut blocked_var = [0.0; 4];
    let mut fringe_cov = [[[0.0; 3]; 3]; 6];
    let mut max_se: f64 = 0.0;
    let blocked = [
        PlanSlot::BlockedS1H,
        PlanSlot::BlockedS2H,
        PlanSlot::BlockedS1V,
        PlanSlot::BlockedS2V,
    ];
    // Layout: p1 = raw[0] + raw[2], p2 = raw[1] + raw[3].
    for (k, slot) in blocked.iter().enumerate() {
        let e = fit_fringe(plan.get(*slot))?;
        values[k] = e.mean();
        blocked_var[k] = e.fit.covariance[0][0];
    }
    for (k, slot) in FRINGE_SLOTS.iter().enumerate() {
        let e = fit_fringe(plan.get(*slot))?;
        values[4 + 3 * k..4 + 3 * k + 3].copy_from_slice(&e.fit.coefficients);
        fringe_cov[k] = e.fit.covariance;
        if let Some(se) = e.stderr {
            max_se = max_se.max(se.p_minus).max(se.p_plus);
        }
    }
    Ok(RawFits {
        values,
        blocked_var,
        fringe_cov,
        max_observable_stderr: max_se,
    })
}

/// First-order standard error of α₁ via a central-difference gradient.
fn alpha1_stderr(fits: &RawFits, branch: Option<Branch>, fallback_t: (f64, f64), tol: SolverTolerance) -> Result<f64> {
    let mut grad = [0.0; RAW_LEN];
    for (i, g) in grad.iter_mut().enumerate() {
        let step = JACOBIAN_STEP * fits.values[i].abs().max(1e-2);
        let mut up = fits.values;
        let mut down = fits.values;
        up[i] += step;
        down[i] -= step;
        let f_up = core_estimate(&up, branch, fallback_t, tol)?.alpha1;
        let f_down = core_estimate(&down, branch, fallback_t, tol)?.alpha1;
        *g = (f_up - f_down) / (2.0 * step);
    }
    let mut var = 0.0;
    for k in 0..4 {
        var += grad[k] * grad[k] * fits.blocked_var[k];
    }
    for (k, cov) in fits.fringe_cov.iter().enumerate() {
        let o = 4 + 3 * k;
        for i in 0..3 {
            for j in 0..3 {
                var += grad[o + i] * cov[i][j] * grad[o + j];
            }
        }
    }
    Ok(var.max(0.0).sqrt())
}

/// Estimate from a complete plan. `fallback_t` stands in for the
/// transmissions when the data cannot identify them (η = 1), and selects
/// among several solutions when the data admit more than one.
pub fn estimate_plan(plan: &ScanPlan, fallback_t: (f64, f64)) -> Result<EstimationReport> {
    let fits = raw_fits(plan)?;
    let sampled = plan.is_sampled();
    let tol = if sampled {
        SolverTolerance {
            residual: SAMPLED_RESIDUAL_SIGMAS * fits.max_observable_stderr,
            range_slack: SAMPLED_RANGE_SLACK,
        }
    } else {
        SolverTolerance::EXACT
    };
    let core = core_estimate(&fits.values, None, fallback_t, tol)?;
    let (alpha1_se, band) = if sampled {
        let se = alpha1_stderr(&fits, core.branch, fallback_t, tol)?;
        (Some(se), SAMPLED_VERDICT_SIGMAS * se)
    } else {
        (None, EXACT_VERDICT_BAND)
    };
    let eta_c = core.eta.clamp(0.0, 1.0);
    let ppt = ppt_and_concurrence_with_band(eta_c, core.coh, band);
    let i_coh = core
        .i_h
        .and_then(|ih| recover_icoh(core.coh, eta_c, ih).ok());
    Ok(EstimationReport {
        b1b2: core.b,
        eta: core.eta,
        coh_product: core.coh,
        alpha1: ppt.alpha1,
        verdict: ppt.verdict,
        concurrence: ppt.concurrence,
        i_h: core.i_h,
        i_coh,
        t_h: core.transmissions.map(|t| t.0),
        t_v: core.transmissions.map(|t| t.1),
        inputs_digest: plan.digest()?,
        alpha1_stderr: alpha1_se,
        concurrence_stderr: alpha1_se.map(|s| if ppt.concurrence > 0.0 { 2.0 * s } else { 0.0 }),
    })
}

/// Simulate the full plan for `config` and estimate from it.
pub fn run_pipeline(config: &InterferometerConfig, settings: &PlanSettings) -> Result<EstimationReport> {
    let plan = simulate_plan(config, settings)?;
    estimate_plan(&plan, (config.t_h, config.t_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::GeneralizedWernerParams;

    fn cfg(eta: f64, ic: f64, ih: f64) -> InterferometerConfig {
        InterferometerConfig::new(GeneralizedWernerParams::new(eta, ic, ih, 0.0).unwrap())
    }

    #[test]
    fn rho3_lossless() {
        let r = run_pipeline(&cfg(0.6, 0.8, 0.3), &PlanSettings::default()).unwrap();
        assert!((r.eta - 0.6).abs() < 1e-10);
        assert!((r.concurrence - (0.6 - 1.0 + 4.0 * 0.48 * 0.21f64.sqrt()) / 2.0).abs() < 1e-10);
        assert_eq!(r.verdict, Verdict::Entangled);
        assert!((r.t_h.unwrap() - 1.0).abs() < 1e-10);
        assert!((r.i_h.unwrap() - 0.3).abs() < 1e-10);
        assert!((r.i_coh.unwrap() - 0.8).abs() < 1e-10);
        assert!(r.alpha1_stderr.is_none());
    }

    #[test]
    fn rho5_lossy_falls_back_on_transmissions() {
        let mut c = cfg(1.0, 1.0, 0.5);
        c.t_h = 0.25;
        c.t_v = 0.35;
        let r = run_pipeline(&c, &PlanSettings::default()).unwrap();
        assert_eq!(r.t_h, None);
        assert!((r.concurrence - 1.0).abs() < 1e-10);
        let text = r.to_string();
        assert!(text.contains("t_h=NA\n"));
        assert!(text.contains("verdict=entangled\n"));
    }

    #[test]
    fn digest_tracks_inputs() {
        let a = simulate_plan(&cfg(0.7, 1.0, 0.5), &PlanSettings::default()).unwrap();
        let b = simulate_plan(&cfg(0.7, 1.0, 0.5), &PlanSettings::default()).unwrap();
        let c = simulate_plan(&cfg(0.6, 1.0, 0.5), &PlanSettings::default()).unwrap();
        assert_eq!(a.digest().unwrap(), b.digest().unwrap());
        assert_ne!(a.digest().unwrap(), c.digest().unwrap());
        assert_eq!(a.digest().unwrap().len(), 64);
    }

    #[test]
    fn rejects_wrong_polarization() {
        let plan = simulate_plan(&cfg(0.7, 1.0, 0.5), &PlanSettings::default()).unwrap();
        let mut scans = plan.scans.clone();
        scans.swap(0, 2);
        assert!(matches!(ScanPlan::new(scans), Err(Error::InvalidScan(_))));
    }

    #[test]
    fn sampled_reports_stderr() {
        let settings = PlanSettings {
            shots: Some(1_000_000),
            seed: 5,
            ..PlanSettings::default()
        };
        let r = run_pipeline(&cfg(0.7, 1.0, 0.5), &settings).unwrap();
        let se = r.alpha1_stderr.unwrap();
        assert!(se > 0.0 && se < 0.01);
        assert!((r.concurrence - 0.55).abs() < 5.0 * 2.0 * se);
        assert_eq!(r.verdict, Verdict::Entangled);
    }
}

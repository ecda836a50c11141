//! The five reference states and the summary tables built from them.

use super::fit::fit_fringe;
use super::inversion::{
    estimate_b1b2, estimate_coh_product_visibility, estimate_eta_lossless, estimate_eta_prob,
    ppt_and_concurrence,
};
use super::pipeline::{run_pipeline, simulate_plan, PlanSettings, PlanSlot};
use crate::engine::InterferometerConfig;
use crate::error::{Error, Result};
use crate::state::{concurrence_closed, GeneralizedWernerParams, Verdict};

/// Attenuation used for the lossy table.
pub const LOSSY_T_H: f64 = 0.25;
pub const LOSSY_T_V: f64 = 0.35;

/// (η, 𝓘, I_H) of the reference states ρ₁…ρ₅. For ρ₁ (η = 0) the other two
/// parameters are irrelevant and set to 1 and 1/2.
pub const REFERENCE_STATES: [(&str, f64, f64, f64); 5] = [
    ("rho1", 0.0, 1.0, 0.5),
    ("rho2", 0.2, 1.0, 0.5),
    ("rho3", 0.6, 0.8, 0.3),
    ("rho4", 0.7, 1.0, 0.5),
    ("rho5", 1.0, 1.0, 0.5),
];

pub fn reference_params(index: usize) -> GeneralizedWernerParams {
    let (_, eta, ic, ih) = REFERENCE_STATES[index];
    GeneralizedWernerParams::new(eta, ic, ih, 0.0).expect("reference states are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityRow {
    pub name: &'static str,
    pub params: GeneralizedWernerParams,
    pub v_r: f64,
    pub v_d: f64,
    pub v_v: f64,
    pub v_h: f64,
    pub eta_est: f64,
    pub coh_est: f64,
    pub verdict: Verdict,
    pub concurrence: f64,
}

/// Lossless visibilities from exact scans and the visibility-form verdict.
pub fn visibility_table(cross_phase: f64) -> Result<Vec<VisibilityRow>> {
    let settings = PlanSettings {
        cross_phase,
        ..PlanSettings::default()
    };
    (0..REFERENCE_STATES.len())
        .map(|k| {
            let params = reference_params(k);
            let plan = simulate_plan(&InterferometerConfig::new(params), &settings)?;
            let fit = |slot| fit_fringe(plan.get(slot));
            let p1 = fit(PlanSlot::BlockedS1H)?.mean() + fit(PlanSlot::BlockedS1V)?.mean();
            let p2 = fit(PlanSlot::BlockedS2H)?.mean() + fit(PlanSlot::BlockedS2V)?.mean();
            let b = estimate_b1b2(p1, p2)?;
            let h = fit(PlanSlot::HInPhase)?;
            let v_h = h.visibility;
            let v_v = fit(PlanSlot::VInPhase)?.visibility;
            let v_d = fit(PlanSlot::Diagonal)?.visibility;
            let v_r = fit(PlanSlot::Circular)?.visibility;
            let eta_est = match estimate_eta_lossless(v_h, v_v, b) {
                Ok(eta) => eta,
                // 0/0 at η = 1, b = 1/2: the H fringe extrema still determine η.
                Err(Error::Degenerate(_)) => estimate_eta_prob(h.p_minus, h.p_plus, b)?,
                Err(e) => return Err(e),
            };
            let coh_est = estimate_coh_product_visibility(v_d, v_r, b)?;
            let ppt = ppt_and_concurrence(eta_est.clamp(0.0, 1.0), coh_est);
            Ok(VisibilityRow {
                name: REFERENCE_STATES[k].0,
                params,
                v_r,
                v_d,
                v_v,
                v_h,
                eta_est,
                coh_est,
                verdict: ppt.verdict,
                concurrence: ppt.concurrence,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossyRow {
    pub name: &'static str,
    pub params: GeneralizedWernerParams,
    /// η estimated from the θ = 0 fringes with attenuation.
    pub p_hv: f64,
    /// Coherence product from the θ = π/4 fringes with attenuation.
    pub p_dr: f64,
    pub verdict: Verdict,
    pub concurrence: f64,
}

/// Full exact pipeline for each reference state behind an attenuator.
pub fn lossy_table(t_h: f64, t_v: f64, cross_phase: f64) -> Result<Vec<LossyRow>> {
    let settings = PlanSettings {
        cross_phase,
        ..PlanSettings::default()
    };
    (0..REFERENCE_STATES.len())
        .map(|k| {
            let params = reference_params(k);
            let mut cfg = InterferometerConfig::new(params);
            cfg.t_h = t_h;
            cfg.t_v = t_v;
            let r = run_pipeline(&cfg, &settings)?;
            Ok(LossyRow {
                name: REFERENCE_STATES[k].0,
                params,
                p_hv: r.eta,
                p_dr: r.coh_product,
                verdict: r.verdict,
                concurrence: r.concurrence,
            })
        })
        .collect()
}

/// (name, concurrence from state parameters, concurrence from visibilities).
pub fn concurrence_pairs(cross_phase: f64) -> Result<Vec<(&'static str, f64, f64)>> {
    Ok(visibility_table(cross_phase)?
        .into_iter()
        .map(|row| (row.name, concurrence_closed(&row.params), row.concurrence))
        .collect())
}

/// Round half to even at two decimals, as displayed in the tables.
pub fn round2(x: f64) -> String {
    let r = (x * 100.0).round_ties_even() / 100.0;
    // Avoid printing "-0.00".
    format!("{:.2}", if r == 0.0 { 0.0 } else { r })
}

pub fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Entangled => "Entangled",
        Verdict::Separable => "Separable",
        Verdict::Boundary => "Boundary",
    }
}

pub fn visibility_table_csv(rows: &[VisibilityRow]) -> String {
    let mut out = String::from("state,eta,icoh,ih,V_R,V_D,V_V,V_H,ppt,concurrence\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.name,
            r.params.eta(),
            r.params.i_coh(),
            r.params.i_h(),
            round2(r.v_r),
            round2(r.v_d),
            round2(r.v_v),
            round2(r.v_h),
            verdict_label(r.verdict),
            round2(r.concurrence)
        ));
    }
    out
}

pub fn lossy_table_csv(rows: &[LossyRow]) -> String {
    let mut out = String::from("state,eta,icoh,ih,P_HV,P_DR,ppt,concurrence\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.name,
            r.params.eta(),
            r.params.i_coh(),
            r.params.i_h(),
            round2(r.p_hv),
            round2(r.p_dr),
            verdict_label(r.verdict),
            round2(r.concurrence)
        ));
    }
    out
}

pub fn concurrence_pairs_csv(pairs: &[(&str, f64, f64)]) -> String {
    let mut out = String::from("state,concurrence_params,concurrence_visibilities\n");
    for (name, a, b) in pairs {
        out.push_str(&format!("{name},{a:.16e},{b:.16e}\n"));
    }
    out
}

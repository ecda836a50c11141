//! Estimators that turn fringe extrema into state parameters.
//!
//! Notation: `b` is |b₁||b₂|, `P⁺`/`P⁻` are the sum/difference of a fringe's
//! extrema, and the "coherence product" is η𝓘√(I_H I_V).

use super::fit::ExtremaEstimate;
use crate::error::{Error, Result};
use crate::state::{Verdict, EXACT_VERDICT_BAND};

/// Below this, a denominator is treated as zero.
const DENOM_TOL: f64 = 1e-12;
/// The visibility-form η estimate is 0/0 at η = 1, b = 1/2; below this
/// denominator it is reported as degenerate.
pub const VISIBILITY_FORM_DENOM_TOL: f64 = 1e-8;
const IH_MARGIN: f64 = 1e-9;
const ICOH_CLAMP: f64 = 1e-6;

fn check_b(b: f64) -> Result<()> {
    if !(b > 0.0) {
        return Err(Error::Degenerate(format!("|b1||b2| = {b} must be positive")));
    }
    Ok(())
}

// Only positivity is enforced: transmissions estimated from noisy data may
// exceed 1 slightly and are still meaningful inputs here.
fn check_t(t_h: f64, t_v: f64) -> Result<()> {
    for (name, t) in [("t_h", t_h), ("t_v", t_v)] {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::param(name, format!("{t} must be positive")));
        }
    }
    Ok(())
}

/// |b₁||b₂| from the detection probabilities with one arm blocked at a time.
pub fn estimate_b1b2(p1: f64, p2: f64) -> Result<f64> {
    if p1 < 0.0 || p2 < 0.0 || !p1.is_finite() || !p2.is_finite() {
        return Err(Error::param("blocked probability", format!("({p1}, {p2}) must be finite and >= 0")));
    }
    if p1 + p2 <= 0.0 {
        return Err(Error::Degenerate("both blocked-arm probabilities are zero".into()));
    }
    Ok((p1 * p2).sqrt() / (p1 + p2))
}

/// η from the lossless H and V visibilities at their minimizing retardances.
pub fn estimate_eta_lossless(v_h: f64, v_v: f64, b: f64) -> Result<f64> {
    check_b(b)?;
    let den = 4.0 * b - v_h - v_v;
    if den.abs() < VISIBILITY_FORM_DENOM_TOL {
        return Err(Error::Degenerate(format!(
            "visibility-form eta denominator {den:e} vanishes"
        )));
    }
    Ok((v_h + v_v - v_h * v_v / b) / den)
}

/// η from one lossless H (or V) fringe: P⁻/b - 2P⁺ + 1.
pub fn estimate_eta_prob(p_minus: f64, p_plus: f64, b: f64) -> Result<f64> {
    check_b(b)?;
    Ok(p_minus / b - 2.0 * p_plus + 1.0)
}

/// η with attenuation: uses the H fringe if T_H ≥ T_V, else the V fringe.
pub fn estimate_eta_lossy(
    extrema_h: &ExtremaEstimate,
    extrema_v: &ExtremaEstimate,
    b: f64,
    t_h: f64,
    t_v: f64,
) -> Result<f64> {
    check_b(b)?;
    check_t(t_h, t_v)?;
    let (e, t_major) = if t_h >= t_v {
        (extrema_h, t_h)
    } else {
        (extrema_v, t_v)
    };
    let sum = t_h + t_v;
    Ok((2.0 * e.p_minus + b * (sum - 4.0 * e.p_plus * t_major)) / (b * sum))
}

/// Coherence product from the diagonal and circular fringe amplitudes at
/// θ = π/4 and a common retardance.
pub fn estimate_coh_product(
    p_minus_d: f64,
    p_minus_r: f64,
    b: f64,
    t_h: f64,
    t_v: f64,
) -> Result<f64> {
    check_b(b)?;
    check_t(t_h, t_v)?;
    let quad = 2.0 * (p_minus_d * p_minus_d + p_minus_r * p_minus_r);
    Ok(quad.sqrt() / (2.0 * b * (t_h * t_h + t_v * t_v).sqrt()))
}

/// Lossless coherence product from the D and R visibilities.
pub fn estimate_coh_product_visibility(v_d: f64, v_r: f64, b: f64) -> Result<f64> {
    check_b(b)?;
    Ok(v_d.hypot(v_r) / (4.0 * b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptEstimate {
    pub alpha1: f64,
    pub verdict: Verdict,
    pub concurrence: f64,
}

/// Smallest partial-transpose eigenvalue, verdict and concurrence from η and
/// the coherence product.
pub fn ppt_and_concurrence(eta: f64, coh: f64) -> PptEstimate {
    ppt_and_concurrence_with_band(eta, coh, EXACT_VERDICT_BAND)
}

pub fn ppt_and_concurrence_with_band(eta: f64, coh: f64, band: f64) -> PptEstimate {
    let alpha1 = (1.0 - eta - 4.0 * coh) / 4.0;
    PptEstimate {
        alpha1,
        verdict: Verdict::from_alpha1(alpha1, band),
        concurrence: (-2.0 * alpha1).max(0.0),
    }
}

/// I_H from a lossless H fringe at its minimizing retardance.
pub fn recover_ih(extrema_h: &ExtremaEstimate, b: f64) -> Result<f64> {
    check_b(b)?;
    let den = 2.0 * extrema_h.p_minus + b * (2.0 - 4.0 * extrema_h.p_plus);
    if den.abs() < DENOM_TOL {
        return Err(Error::Undefined(
            "I_H cannot be recovered from a flat H fringe (eta = 0)".into(),
        ));
    }
    Ok(extrema_h.p_minus / den)
}

/// I_H from the mean H level, which does not depend on losses: P_H⁺ = (1-η)/2 + ηI_H.
pub fn recover_ih_from_offset(p_plus_h: f64, eta: f64) -> Result<f64> {
    if eta <= IH_MARGIN {
        return Err(Error::Undefined(format!("I_H is undefined at eta = {eta}")));
    }
    Ok((p_plus_h - (1.0 - eta) / 2.0) / eta)
}

/// 𝓘 = coh / (η√(I_H I_V)). Values above one by less than 1e-6 are clamped.
pub fn recover_icoh(coh: f64, eta: f64, ih: f64) -> Result<f64> {
    if eta <= IH_MARGIN {
        return Err(Error::Undefined(format!("coherence is undefined at eta = {eta}")));
    }
    if !(ih > IH_MARGIN && ih < 1.0 - IH_MARGIN) {
        return Err(Error::Undefined(format!(
            "coherence is undefined at I_H = {ih}"
        )));
    }
    let icoh = coh / (eta * (ih * (1.0 - ih)).sqrt());
    if icoh > 1.0 && icoh - 1.0 < ICOH_CLAMP {
        return Ok(1.0);
    }
    Ok(icoh)
}

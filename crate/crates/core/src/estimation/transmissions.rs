//! Recovery of the attenuator transmissions from θ = 0 fringes.
//!
//! At θ = 0 the H fringe amplitude is 2b|T_H(N + ηI_H) − T_V N| when the two
//! cross terms are in phase (retardance δ_H) and 2b(T_H(N + ηI_H) + T_V N)
//! in antiphase (δ′_H), with N = (1 − η)/4; likewise for V with the roles of
//! T_H and T_V swapped. Half-sums and half-differences of the two amplitudes
//! isolate the products T_H(N + ηI_H) and T_V N, and together with the mean
//! levels P⁺ this pins down (T_H, T_V, η, I_H).

use super::fit::ExtremaEstimate;
use crate::error::{Error, Result};

/// Below this, the noise population N is taken to vanish (η = 1).
const IDENTIFIABLE_TOL: f64 = 1e-12;
/// Two accepted branches are the same solution if they agree this closely.
const SAME_SOLUTION_TOL: f64 = 1e-6;

/// The six fringe observables the solver consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionObservables {
    pub p_minus_h: f64,
    pub p_minus_h_prime: f64,
    pub p_minus_v: f64,
    pub p_minus_v_prime: f64,
    pub p_plus_h: f64,
    pub p_plus_v: f64,
}

impl TransmissionObservables {
    fn as_array(&self) -> [f64; 6] {
        [
            self.p_minus_h,
            self.p_minus_h_prime,
            self.p_minus_v,
            self.p_minus_v_prime,
            self.p_plus_h,
            self.p_plus_v,
        ]
    }
}

/// Which absolute value in the in-phase amplitudes had a negative argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Direct,
    HFlipped,
    VFlipped,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Direct, Branch::HFlipped, Branch::VFlipped];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerance {
    /// Largest accepted forward-reconstruction residual.
    pub residual: f64,
    /// How far the solution may stray outside the physical ranges.
    pub range_slack: f64,
}

impl SolverTolerance {
    pub const EXACT: SolverTolerance = SolverTolerance {
        residual: 1e-9,
        range_slack: 1e-9,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionSolution {
    pub t_h: f64,
    pub t_v: f64,
    pub eta: f64,
    /// Undefined at η = 0.
    pub i_h: Option<f64>,
    pub branch: Branch,
    pub residual: f64,
}

/// Model prediction for the six observables.
pub fn forward_observables(t_h: f64, t_v: f64, eta: f64, eta_ih: f64, b: f64) -> TransmissionObservables {
    let n = (1.0 - eta) / 4.0;
    let eta_iv = eta - eta_ih;
    TransmissionObservables {
        p_minus_h: 2.0 * b * (t_h * (n + eta_ih) - t_v * n).abs(),
        p_minus_h_prime: 2.0 * b * (t_h * (n + eta_ih) + t_v * n),
        p_minus_v: 2.0 * b * (t_h * n - t_v * (n + eta_iv)).abs(),
        p_minus_v_prime: 2.0 * b * (t_h * n + t_v * (n + eta_iv)),
        p_plus_h: 2.0 * n + eta_ih,
        p_plus_v: 2.0 * n + eta_iv,
    }
}

/// Closed-form solution on one branch, with no acceptance test.
/// Returns (T_H, T_V, η, ηI_H).
pub fn solve_branch(obs: &TransmissionObservables, b: f64, branch: Branch) -> Result<[f64; 4]> {
    if !(b > 0.0) {
        return Err(Error::Degenerate(format!("|b1||b2| = {b} must be positive")));
    }
    let scale = 4.0 * b;
    let mut s_h = (obs.p_minus_h_prime + obs.p_minus_h) / scale;
    let mut d_h = (obs.p_minus_h_prime - obs.p_minus_h) / scale;
    let mut s_v = (obs.p_minus_v_prime + obs.p_minus_v) / scale;
    let mut d_v = (obs.p_minus_v_prime - obs.p_minus_v) / scale;
    match branch {
        Branch::Direct => {}
        Branch::HFlipped => std::mem::swap(&mut s_h, &mut d_h),
        Branch::VFlipped => std::mem::swap(&mut s_v, &mut d_v),
    }
    // d_H = T_V N and s_V = T_V (P_V⁺ − N), so N = d_H P_V⁺ / (s_V + d_H);
    // the V-side expression d_V P_H⁺ / (s_H + d_V) is an independent check.
    let estimates: Vec<f64> = [(d_h, obs.p_plus_v, s_v + d_h), (d_v, obs.p_plus_h, s_h + d_v)]
        .iter()
        .filter(|(_, _, den)| den.abs() > IDENTIFIABLE_TOL)
        .map(|(d, p, den)| d * p / den)
        .collect();
    let noise = if estimates.is_empty() {
        0.0
    } else {
        estimates.iter().sum::<f64>() / estimates.len() as f64
    };
    if noise.abs() <= IDENTIFIABLE_TOL {
        return Err(Error::Unidentifiable(
            "the fringes carry no white-noise contribution (eta = 1)".into(),
        ));
    }
    let eta = 1.0 - 4.0 * noise;
    let t_h = d_v / noise;
    let t_v = d_h / noise;
    let eta_ih = obs.p_plus_h - 2.0 * noise;
    Ok([t_h, t_v, eta, eta_ih])
}

fn in_range(sol: &[f64; 4], slack: f64) -> bool {
    let [t_h, t_v, eta, eta_ih] = *sol;
    let t_ok = |t: f64| t > 0.0 && t <= 1.0 + slack;
    t_ok(t_h)
        && t_ok(t_v)
        && eta >= -slack
        && eta <= 1.0 + slack
        && eta_ih >= -slack
        && eta_ih <= eta + slack
}

impl TransmissionSolution {
    fn from_parts(sol: [f64; 4], branch: Branch, residual: f64) -> Self {
        let [t_h, t_v, eta, eta_ih] = sol;
        Self {
            t_h,
            t_v,
            eta,
            i_h: (eta > 1e-9).then(|| eta_ih / eta),
            branch,
            residual,
        }
    }

    fn same_as(&self, other: &Self) -> bool {
        (self.t_h - other.t_h).abs() <= SAME_SOLUTION_TOL
            && (self.t_v - other.t_v).abs() <= SAME_SOLUTION_TOL
            && (self.eta - other.eta).abs() <= SAME_SOLUTION_TOL
    }
}

/// Every distinct solution whose forward reconstruction reproduces all six
/// observables within `tol.residual`, direct branch first.
///
/// More than one candidate is a genuine ambiguity of the data: for I_H = 1/2
/// and T_H ≠ T_V a flipped branch generically yields a second exact solution.
pub fn transmission_candidates(
    obs: &TransmissionObservables,
    b: f64,
    tol: SolverTolerance,
) -> Result<Vec<TransmissionSolution>> {
    let measured = obs.as_array();
    let mut accepted: Vec<TransmissionSolution> = Vec::new();
    let mut unidentifiable = None;
    for branch in Branch::ALL {
        let sol = match solve_branch(obs, b, branch) {
            Ok(s) => s,
            Err(e @ Error::Unidentifiable(_)) => {
                unidentifiable = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if !sol.iter().all(|x| x.is_finite()) || !in_range(&sol, tol.range_slack) {
            continue;
        }
        let [t_h, t_v, eta, eta_ih] = sol;
        let predicted = forward_observables(t_h, t_v, eta, eta_ih, b).as_array();
        let residual = predicted
            .iter()
            .zip(&measured)
            .map(|(p, m)| (p - m).abs())
            .fold(0.0, f64::max);
        if residual <= tol.residual {
            let cand = TransmissionSolution::from_parts(sol, branch, residual);
            if !accepted.iter().any(|a| a.same_as(&cand)) {
                accepted.push(cand);
            }
        }
    }
    if accepted.is_empty() {
        return Err(unidentifiable.unwrap_or_else(|| {
            Error::InconsistentData("no branch reproduces the observed fringe amplitudes".into())
        }));
    }
    Ok(accepted)
}

/// Recover (T_H, T_V, η, I_H). The direct branch is preferred whenever it
/// reproduces the data; otherwise the flipped branch with the smaller
/// residual is taken, and an exact tie between distinct flipped solutions
/// is reported as ambiguous.
pub fn estimate_transmissions_with(
    obs: &TransmissionObservables,
    b: f64,
    tol: SolverTolerance,
) -> Result<TransmissionSolution> {
    let mut candidates = transmission_candidates(obs, b, tol)?;
    if let Some(direct) = candidates.iter().find(|c| c.branch == Branch::Direct) {
        return Ok(*direct);
    }
    candidates.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    if let [best, second, ..] = candidates.as_slice() {
        if second.residual - best.residual <= 1e-12 {
            return Err(Error::Ambiguous(format!(
                "branches {:?} and {:?} both reproduce the data",
                best.branch, second.branch
            )));
        }
    }
    Ok(candidates[0])
}

/// The candidate whose transmissions are closest to `prior`.
pub fn nearest_candidate(candidates: &[TransmissionSolution], prior: (f64, f64)) -> Option<TransmissionSolution> {
    candidates
        .iter()
        .min_by(|a, b| {
            let da = (a.t_h - prior.0).hypot(a.t_v - prior.1);
            let db = (b.t_h - prior.0).hypot(b.t_v - prior.1);
            da.total_cmp(&db).then(a.residual.total_cmp(&b.residual))
        })
        .copied()
}

/// Transmissions from the four θ = 0 fringes (in-phase and antiphase
/// retardances for H and V), with exact-data tolerances.
pub fn estimate_transmissions(
    extrema_h: &ExtremaEstimate,
    extrema_h_prime: &ExtremaEstimate,
    extrema_v: &ExtremaEstimate,
    extrema_v_prime: &ExtremaEstimate,
    p_plus_h: f64,
    p_plus_v: f64,
    b: f64,
) -> Result<TransmissionSolution> {
    let obs = TransmissionObservables {
        p_minus_h: extrema_h.p_minus,
        p_minus_h_prime: extrema_h_prime.p_minus,
        p_minus_v: extrema_v.p_minus,
        p_minus_v_prime: extrema_v_prime.p_minus,
        p_plus_h,
        p_plus_v,
    };
    estimate_transmissions_with(&obs, b, SolverTolerance::EXACT)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(p_minus: f64) -> ExtremaEstimate {
        ExtremaEstimate::from_extrema(0.5, p_minus)
    }

    #[test]
    fn hand_traced_instance() {
        let s = estimate_transmissions(&e(0.08), &e(0.1325), &e(0.13), &e(0.1675), 0.5, 0.5, 0.5).unwrap();
        assert!((s.t_h - 0.25).abs() < 1e-12);
        assert!((s.t_v - 0.35).abs() < 1e-12);
        assert!((s.eta - 0.7).abs() < 1e-12);
        assert!((s.i_h.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(s.branch, Branch::Direct);
    }

    #[test]
    fn forward_matches_hand_values() {
        let o = forward_observables(0.25, 0.35, 0.7, 0.35, 0.5);
        for (got, want) in o.as_array().iter().zip([0.08, 0.1325, 0.13, 0.1675, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn lossless_round_trip() {
        let o = forward_observables(1.0, 1.0, 0.4, 0.1, 0.5);
        let s = estimate_transmissions_with(&o, 0.5, SolverTolerance::EXACT).unwrap();
        assert!((s.t_h - 1.0).abs() < 1e-12 && (s.t_v - 1.0).abs() < 1e-12);
        assert!((s.eta - 0.4).abs() < 1e-12);
        assert!((s.i_h.unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn flipped_branch_round_trip() {
        // T_H(N + ηI_H) < T_V N: small I_H, weak H transmission.
        let (t_h, t_v, eta, x) = (0.2, 0.9, 0.3, 0.03);
        let n = (1.0 - eta) / 4.0;
        assert!(t_h * (n + x) < t_v * n);
        let o = forward_observables(t_h, t_v, eta, x, 0.45);
        let s = estimate_transmissions_with(&o, 0.45, SolverTolerance::EXACT).unwrap();
        assert_eq!(s.branch, Branch::HFlipped);
        assert!((s.t_h - t_h).abs() < 1e-12 && (s.t_v - t_v).abs() < 1e-12);
    }

    #[test]
    fn pure_state_unidentifiable() {
        let o = forward_observables(0.25, 0.35, 1.0, 0.5, 0.5);
        assert!(matches!(
            estimate_transmissions_with(&o, 0.5, SolverTolerance::EXACT),
            Err(Error::Unidentifiable(_))
        ));
    }

    #[test]
    fn balanced_state_has_second_solution() {
        let o = forward_observables(0.25, 0.35, 0.7, 0.35, 0.5);
        let c = transmission_candidates(&o, 0.5, SolverTolerance::EXACT).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].branch, Branch::Direct);
        let alt = c[1];
        assert!((alt.t_h - 0.09).abs() < 1e-12 && (alt.t_v - 0.51).abs() < 1e-12);
        assert!((alt.eta - 1.0 / 6.0).abs() < 1e-12);
        let picked = nearest_candidate(&c, (0.3, 0.3)).unwrap();
        assert_eq!(picked.branch, Branch::Direct);
    }

    #[test]
    fn corrupted_input_rejected() {
        let r = estimate_transmissions(&e(0.08), &e(0.1325), &e(0.13), &e(0.1675), 0.3, 0.5, 0.5);
        assert!(matches!(r, Err(Error::InconsistentData(_))));
    }
}

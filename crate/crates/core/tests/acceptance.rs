//! Acceptance criteria 1 to 8. Each test prints one line,
//! `acceptance criterion N: PASS|FAIL (details)`, before asserting.
//!
//! Tolerances are fixed here and nowhere else.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use werner_sim::analytic::fringe_model;
use werner_sim::engine::{detection_probability, InterferometerConfig, PhaseTable, Polarization};
use werner_sim::estimation::tables::{
    concurrence_pairs, lossy_table, reference_params, visibility_table, LOSSY_T_H, LOSSY_T_V,
};
use werner_sim::estimation::{
    estimate_transmissions, run_pipeline, Branch, ExtremaEstimate, PlanSettings,
};
use werner_sim::state::{
    build_state, concurrence_closed, concurrence_wootters_numeric, lambda_spectrum_closed,
    ppt_spectrum_closed, ppt_spectrum_numeric, GeneralizedWernerParams, Verdict,
};
use werner_sim::Error;

const TABLE_TOL: f64 = 0.005;
/// Table entries are printed to two decimals; a computed value exactly one
/// rounding step away is at the tolerance and must not fail on the last bit.
const LOSSY_TABLE_TOL: f64 = 0.01 + 1e-12;
const THRESHOLD_TOL: f64 = 1e-9;
const PAIR_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-10;
const ENGINE_TOL: f64 = 1e-10;
const BASIS_SUM_TOL: f64 = 1e-12;
const ROUND_TRIP_TOL: f64 = 1e-8;
const SHOT_MEAN_TOL: f64 = 0.005;
const SHOT_RUNS: u64 = 100;
const SHOT_MIN_COVERED: usize = 95;
const SHOTS: u64 = 1_000_000;
const SOLVER_TOL: f64 = 1e-9;

fn report(criterion: u32, ok: bool, details: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("acceptance criterion {criterion}: {status} ({details})");
}

/// Reference values per state: (V_R, V_D, V_V, V_H, verdict, concurrence).
const LOSSLESS_REFERENCE: [(f64, f64, f64, f64, Verdict, f64); 5] = [
    (0.00, 0.00, 0.00, 0.00, Verdict::Separable, 0.00),
    (0.08, 0.18, 0.20, 0.20, Verdict::Separable, 0.00),
    (0.17, 0.41, 0.67, 0.47, Verdict::Entangled, 0.24),
    (0.27, 0.64, 0.70, 0.70, Verdict::Entangled, 0.55),
    (0.38, 0.92, 1.00, 1.00, Verdict::Entangled, 1.00),
];

/// Reference values per state under loss: (P_HV, P_DR, verdict, concurrence).
const LOSSY_REFERENCE: [(f64, f64, Verdict, f64); 5] = [
    (0.00, 0.00, Verdict::Separable, 0.00),
    (0.20, 0.10, Verdict::Separable, 0.00),
    (0.60, 0.22, Verdict::Entangled, 0.24),
    (0.69, 0.35, Verdict::Entangled, 0.55),
    (1.00, 0.50, Verdict::Entangled, 1.00),
];

#[test]
fn criterion_1_lossless_table() {
    let rows = visibility_table(FRAC_PI_4).unwrap();
    let mut misses = Vec::new();
    let mut verdicts_ok = true;
    for (row, want) in rows.iter().zip(LOSSLESS_REFERENCE) {
        let entries = [
            ("V_R", row.v_r, want.0),
            ("V_D", row.v_d, want.1),
            ("V_V", row.v_v, want.2),
            ("V_H", row.v_h, want.3),
            ("concurrence", row.concurrence, want.5),
        ];
        for (name, got, expected) in entries {
            if (got - expected).abs() > TABLE_TOL {
                misses.push(format!("{} {name} {got:.4} vs {expected:.2}", row.name));
            }
        }
        verdicts_ok &= row.verdict == want.4;
    }
    let ok = misses.is_empty() && verdicts_ok && rows.len() == 5;
    let details = if ok {
        "25 entries within 0.005, verdicts identical".to_string()
    } else {
        format!("outside 0.005: [{}]; verdicts match: {verdicts_ok}", misses.join("; "))
    };
    report(1, ok, &details);
    assert!(ok, "{details}");
}

#[test]
fn criterion_2_lossy_table() {
    let lossy = lossy_table(LOSSY_T_H, LOSSY_T_V, FRAC_PI_4).unwrap();
    let lossless = visibility_table(FRAC_PI_4).unwrap();
    let mut misses = Vec::new();
    for ((row, want), clean) in lossy.iter().zip(LOSSY_REFERENCE).zip(&lossless) {
        for (name, got, expected) in [("P_HV", row.p_hv, want.0), ("P_DR", row.p_dr, want.1)] {
            if (got - expected).abs() > LOSSY_TABLE_TOL {
                misses.push(format!("{} {name} {got:.4} vs {expected:.2}", row.name));
            }
        }
        if row.verdict != want.2 || row.verdict != clean.verdict {
            misses.push(format!("{} verdict {}", row.name, row.verdict));
        }
        if (row.concurrence - clean.concurrence).abs() > PAIR_TOL || (row.concurrence - want.3).abs() > TABLE_TOL {
            misses.push(format!("{} concurrence {}", row.name, row.concurrence));
        }
    }
    let ok = misses.is_empty() && lossy.len() == 5;
    let details = if ok {
        "T_H=0.25, T_V=0.35: all entries within 0.01, verdicts and concurrences as without loss".to_string()
    } else {
        misses.join("; ")
    };
    report(2, ok, &details);
    assert!(ok, "{details}");
}

#[test]
fn criterion_3_threshold_and_concurrence_pairs() {
    let alpha1 = |eta: f64| ppt_spectrum_closed(&GeneralizedWernerParams::new(eta, 1.0, 0.5, 0.0).unwrap()).alpha1;
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if alpha1(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let root_ok = (root - 1.0 / 3.0).abs() <= THRESHOLD_TOL;
    let bell_ok = (alpha1(1.0) + 0.5).abs() <= 1e-15;
    let pairs = concurrence_pairs(FRAC_PI_4).unwrap();
    let worst = pairs.iter().map(|(_, a, b)| (a - b).abs()).fold(0.0, f64::max);
    let pairs_ok = pairs.len() == 5 && worst <= PAIR_TOL;
    let ok = root_ok && bell_ok && pairs_ok;
    report(
        3,
        ok,
        &format!("alpha1 root at {root:.12}, alpha1(1) = {}, worst pair gap {worst:.1e}", alpha1(1.0)),
    );
    assert!(ok);
}

fn random_params(rng: &mut ChaCha8Rng) -> GeneralizedWernerParams {
    GeneralizedWernerParams::new(
        rng.random_range(0.0..=1.0),
        rng.random_range(0.0..=1.0),
        rng.random_range(0.0..=1.0),
        rng.random_range(-PI..PI),
    )
    .unwrap()
}

#[test]
fn criterion_4_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let (mut spectrum, mut concurrence, mut identity, mut relation) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let rho = build_state(&p);
        let closed = ppt_spectrum_closed(&p).sorted();
        let numeric = ppt_spectrum_numeric(&rho).unwrap();
        for k in 0..4 {
            spectrum = spectrum.max((closed[k] - numeric[k]).abs());
        }
        concurrence = concurrence.max((concurrence_closed(&p) - concurrence_wootters_numeric(&rho).unwrap()).abs());
        let l2 = lambda_spectrum_closed(&p);
        let l: Vec<f64> = l2.iter().map(|x| x.max(0.0).sqrt()).collect();
        let a1 = ppt_spectrum_closed(&p).alpha1;
        let lhs = (l2[3] + l2[2] - 4.0 * (l[0] - a1).powi(2)).powi(2);
        identity = identity.max((lhs - 4.0 * l2[3] * l2[2]).abs());
        relation = relation.max((l[3] - l[2] - 2.0 * l[0] + 2.0 * a1).abs());
    }
    let ok = [spectrum, concurrence, identity, relation].iter().all(|&e| e <= ORACLE_TOL);
    report(
        4,
        ok,
        &format!(
            "1000 draws; max errors: spectrum {spectrum:.1e}, concurrence {concurrence:.1e}, \
             lambda identity {identity:.1e}, alpha1 relation {relation:.1e}"
        ),
    );
    assert!(ok);
}

fn random_config(rng: &mut ChaCha8Rng) -> InterferometerConfig {
    let state = random_params(rng);
    let mut cfg = InterferometerConfig::new(state);
    cfg.b1_mag = rng.random_range(0.05..0.99);
    cfg.b2_mag = (1.0 - cfg.b1_mag * cfg.b1_mag).sqrt();
    cfg.arg_b1 = rng.random_range(-PI..PI);
    cfg.arg_b2 = rng.random_range(-PI..PI);
    cfg.phi_i = rng.random_range(-PI..PI);
    cfg.phases = PhaseTable::consistent(
        rng.random_range(-PI..PI),
        rng.random_range(-PI..PI),
        rng.random_range(-PI..PI),
        state.phi(),
    );
    cfg.theta = rng.random_range(-PI..PI);
    cfg.delta = rng.random_range(-PI..PI);
    cfg.t_h = rng.random_range(0.1..=1.0);
    cfg.t_v = rng.random_range(0.1..=1.0);
    cfg
}

#[test]
fn criterion_5_engine_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let (mut worst, mut worst_sum) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let mut cfg = random_config(&mut rng);
        let pol = Polarization::ALL[rng.random_range(0..6)];
        cfg = cfg.with_phi_in(rng.random_range(-PI..PI));
        let engine = detection_probability(&cfg, &pol.projector()).unwrap();
        let model = fringe_model(&cfg, pol).unwrap().eval(cfg.phi_in());
        worst = worst.max((engine - model).abs());
        let p = |q: Polarization| detection_probability(&cfg, &q.projector()).unwrap();
        let hv = p(Polarization::H) + p(Polarization::V);
        let da = p(Polarization::D) + p(Polarization::A);
        let rl = p(Polarization::R) + p(Polarization::L);
        worst_sum = worst_sum.max((hv - da).abs()).max((hv - rl).abs());
    }
    let ok = worst <= ENGINE_TOL && worst_sum <= BASIS_SUM_TOL;
    report(
        5,
        ok,
        &format!("1000 triples with losses; max |engine - closed form| {worst:.1e}, max basis-sum gap {worst_sum:.1e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_6_pipeline_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut check = |name: &str, got: Option<f64>, want: f64, idx: usize| match got {
        Some(g) if (g - want).abs() <= ROUND_TRIP_TOL => worst = worst.max((g - want).abs()),
        other => failures.push(format!("#{idx} {name}: {other:?} vs {want}")),
    };
    for idx in 0..100 {
        let mut cfg = random_config(&mut rng);
        cfg.theta = 0.0;
        cfg.delta = 0.0;
        let p = cfg.state;
        let r = run_pipeline(&cfg, &PlanSettings::default()).unwrap();
        let coh = p.eta() * p.i_coh() * (p.i_h() * p.i_v()).sqrt();
        check("eta", Some(r.eta), p.eta(), idx);
        check("coh_product", Some(r.coh_product), coh, idx);
        check("concurrence", Some(r.concurrence), concurrence_closed(&p), idx);
        // I_H needs η > 0; 𝓘 also needs I_H I_V > 0; the transmissions need η < 1.
        if p.eta() > 1e-6 {
            check("i_h", r.i_h, p.i_h(), idx);
            if p.i_h() * p.i_v() > 1e-6 {
                check("i_coh", r.i_coh, p.i_coh(), idx);
            }
        }
        if p.eta() < 1.0 - 1e-6 {
            check("t_h", r.t_h, cfg.t_h, idx);
            check("t_v", r.t_v, cfg.t_v, idx);
        }
    }
    let ok = failures.is_empty();
    let details = if ok {
        format!("100 lossy states; max error {worst:.1e}")
    } else {
        failures.join("; ")
    };
    report(6, ok, &details);
    assert!(ok, "{details}");
}

#[test]
fn criterion_7_shot_noise() {
    let cfg = InterferometerConfig::new(reference_params(3));
    let truth = concurrence_closed(&cfg.state);
    let mut sum = 0.0;
    let mut covered = 0;
    for seed in 0..SHOT_RUNS {
        let settings = PlanSettings {
            shots: Some(SHOTS),
            seed,
            ..PlanSettings::default()
        };
        let r = run_pipeline(&cfg, &settings).unwrap();
        sum += r.concurrence;
        let se = r.concurrence_stderr.unwrap();
        if (r.concurrence - truth).abs() <= 3.0 * se {
            covered += 1;
        }
    }
    let mean = sum / SHOT_RUNS as f64;
    let ok = (mean - truth).abs() <= SHOT_MEAN_TOL && covered >= SHOT_MIN_COVERED;
    report(
        7,
        ok,
        &format!("mean concurrence {mean:.5} (target {truth:.2}), {covered}/{SHOT_RUNS} runs within 3 sigma"),
    );
    assert!(ok);
}

#[test]
fn criterion_8_transmission_solver() {
    // Extrema traced by hand for η = 0.7, I_H = 1/2, T = (0.25, 0.35),
    // |b₁||b₂| = 1/2: every P⁺ is 1/2, and the P⁻ are
    // 2b|T_H(N + ηI_H) ∓ T_V N| and 2b|T_H N ∓ T_V(N + ηI_V)| with N = 0.075.
    let e = |p_minus| ExtremaEstimate::from_extrema(0.5, p_minus);
    let (h, h_anti, v, v_anti) = (e(0.08), e(0.1325), e(0.13), e(0.1675));
    let s = estimate_transmissions(&h, &h_anti, &v, &v_anti, 0.5, 0.5, 0.5).unwrap();
    let errors = [
        (s.t_h - 0.25).abs(),
        (s.t_v - 0.35).abs(),
        (s.eta - 0.7).abs(),
        (s.i_h.unwrap() - 0.5).abs(),
    ];
    let solved = errors.iter().all(|&x| x <= SOLVER_TOL) && s.branch == Branch::Direct;
    // Raising the H mean level breaks consistency with the amplitudes.
    let corrupted = estimate_transmissions(&h, &h_anti, &v, &v_anti, 0.3, 0.5, 0.5);
    let rejected = matches!(corrupted, Err(Error::InconsistentData(_)));
    let ok = solved && rejected;
    report(
        8,
        ok,
        &format!(
            "recovered (T_H, T_V, eta, I_H) = ({:.12}, {:.12}, {:.12}, {:.12}); corrupted input -> {:?}",
            s.t_h,
            s.t_v,
            s.eta,
            s.i_h.unwrap(),
            corrupted.map(|c| c.branch)
        ),
    );
    assert!(ok);
}

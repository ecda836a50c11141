//! Plain-text run configuration: one `key = value` per line.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. Omitted phases default to 0, omitted transmissions to 1 and
//! omitted emission amplitudes to 1/√2. Angles accept `pi`, `pi/4`,
//! `-pi/2`, `3pi/4` as well as plain numbers.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::engine::InterferometerConfig;
use crate::error::{Error, Result};
use crate::state::GeneralizedWernerParams;

pub const CONFIG_KEYS: [&str; 18] = [
    "eta", "icoh", "ih", "phi", "b1_mag", "b2_mag", "arg_b1", "arg_b2", "phi_i", "phi_s", "phi_hh",
    "phi_vh", "phi_hv", "phi_vv", "phi_hh_vv", "phi_vv_hh", "t_h", "t_v",
];

/// Number or multiple of π.
pub fn parse_angle(text: &str) -> Option<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(x) = s.parse::<f64>() {
        return Some(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().ok()?),
        None => (s.as_str(), 1.0),
    };
    let coeff = match num.strip_suffix("pi")? {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.trim_end_matches('*').parse::<f64>().ok()?,
    };
    let x = coeff * PI / den;
    x.is_finite().then_some(x)
}

pub fn parse_run_config(text: &str) -> Result<InterferometerConfig> {
    let mut values: [Option<f64>; CONFIG_KEYS.len()] = [None; CONFIG_KEYS.len()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let slot = CONFIG_KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        if values[slot].is_some() {
            return Err(Error::Config(format!("key `{key}` given twice")));
        }
        let v = parse_angle(value)
            .ok_or_else(|| Error::Config(format!("key `{key}`: cannot parse `{}`", value.trim())))?;
        values[slot] = Some(v);
    }
    let get = |key: &str, default: f64| {
        let i = CONFIG_KEYS.iter().position(|k| *k == key).expect("known key");
        values[i].unwrap_or(default)
    };
    let state = GeneralizedWernerParams::new(
        get("eta", 1.0),
        get("icoh", 1.0),
        get("ih", 0.5),
        get("phi", 0.0),
    )?;
    let mut cfg = InterferometerConfig::new(state);
    cfg.b1_mag = get("b1_mag", cfg.b1_mag);
    cfg.b2_mag = get("b2_mag", cfg.b2_mag);
    cfg.arg_b1 = get("arg_b1", 0.0);
    cfg.arg_b2 = get("arg_b2", 0.0);
    cfg.phi_i = get("phi_i", 0.0);
    cfg.phi_s = get("phi_s", 0.0);
    cfg.phases.phi_hh = get("phi_hh", 0.0);
    cfg.phases.phi_vh = get("phi_vh", 0.0);
    cfg.phases.phi_hv = get("phi_hv", 0.0);
    cfg.phases.phi_vv = get("phi_vv", 0.0);
    cfg.phases.phi_hh_vv = get("phi_hh_vv", 0.0);
    cfg.phases.phi_vv_hh = get("phi_vv_hh", 0.0);
    cfg.t_h = get("t_h", 1.0);
    cfg.t_v = get("t_v", 1.0);
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_run_config(path: &Path) -> Result<InterferometerConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_run_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.25"), Some(0.25));
        assert!((parse_angle("pi/4").unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((parse_angle("-pi").unwrap() + PI).abs() < 1e-15);
        assert!((parse_angle("3pi/4").unwrap() - 0.75 * PI).abs() < 1e-15);
        assert!((parse_angle("3*pi/2").unwrap() - 1.5 * PI).abs() < 1e-15);
        assert_eq!(parse_angle("tau"), None);
        assert_eq!(parse_angle("pi/x"), None);
    }

    #[test]
    fn defaults_and_overrides() {
        let cfg = parse_run_config("# lossy rho4\neta = 0.7\nt_h=0.25\n t_v = 0.35 \n\nphi_vh = pi/2\n").unwrap();
        assert_eq!(cfg.state.eta(), 0.7);
        assert_eq!(cfg.state.i_coh(), 1.0);
        assert_eq!(cfg.state.i_h(), 0.5);
        assert_eq!((cfg.t_h, cfg.t_v), (0.25, 0.35));
        assert!((cfg.phases.phi_vh - PI / 2.0).abs() < 1e-15);
        assert_eq!(cfg.phases.phi_hh, 0.0);
        assert_eq!(cfg.b1_mag, std::f64::consts::FRAC_1_SQRT_2);
    }

    #[test]
    fn rejects_unknown_repeated_and_invalid() {
        let msg = |t: &str| parse_run_config(t).unwrap_err().to_string();
        assert!(msg("etaa = 0.5").contains("etaa"));
        assert!(msg("eta = 0.5\neta = 0.6").contains("twice"));
        assert!(msg("eta 0.5").contains("line 1"));
        assert!(msg("ih = abc").contains("ih"));
        assert!(msg("eta = 1.5").contains("eta"));
        assert!(msg("t_h = -0.1").contains("t_h"));
    }
}

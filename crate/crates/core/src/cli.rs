//! Command implementations for the `werner-sim` binary.
//!
//! Exit codes: 0 success (and `entangled` for `estimate`), 1 `separable`,
//! 3 `boundary`, 2 usage or input errors.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use werner_sim::analytic::{delta_for_cross_phase, delta_star, DeltaTarget};
use werner_sim::config::{load_run_config, parse_angle};
use werner_sim::engine::{InterferometerConfig, Polarization, Source};
use werner_sim::estimation::scan::scan_to_csv_string;
use werner_sim::estimation::tables::{
    concurrence_pairs, concurrence_pairs_csv, lossy_table, lossy_table_csv, visibility_table,
    visibility_table_csv, LOSSY_T_H, LOSSY_T_V,
};
use werner_sim::estimation::{
    estimate_plan, run_pipeline, simulate_plan, simulate_setting, PlanSettings, ScanPlan,
    ScanSetting,
};
use werner_sim::state::{
    build_state, concurrence_closed, concurrence_wootters_numeric, ppt_spectrum_closed,
    ppt_spectrum_numeric, GeneralizedWernerParams, Verdict, EXACT_VERDICT_BAND,
};
use werner_sim::{Error, Result};

pub const EXIT_ENTANGLED: i32 = 0;
pub const EXIT_SEPARABLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BOUNDARY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "werner-sim",
    version,
    about = "Entanglement verification of generalized Werner states by single-photon interference"
)]
pub struct Cli {
    /// Run configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for shot-noise sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted. For `scan --plan` this is a directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, clap::Args)]
struct StateArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    eta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    icoh: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    ih: f64,
    #[arg(long, default_value = "0", value_parser = angle, allow_negative_numbers = true)]
    phi: f64,
}

impl StateArgs {
    fn params(&self) -> Result<GeneralizedWernerParams> {
        GeneralizedWernerParams::new(self.eta, self.icoh, self.ih, self.phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    Eta,
    Ih,
    Icoh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Table {
    #[value(name = "1")]
    Lossless,
    #[value(name = "s1")]
    Lossy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DeltaChoice {
    Auto,
    AutoPrime,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Range {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Range {
    fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|k| self.lo + step * k as f64).collect()
    }
}

fn angle(s: &str) -> std::result::Result<f64, String> {
    parse_angle(s).ok_or_else(|| format!("`{s}` is not a number or multiple of pi"))
}

fn delta_choice(s: &str) -> std::result::Result<DeltaChoice, String> {
    match s {
        "auto" => Ok(DeltaChoice::Auto),
        "auto-prime" => Ok(DeltaChoice::AutoPrime),
        _ => angle(s).map(DeltaChoice::Value),
    }
}

fn range(s: &str) -> std::result::Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(format!("`{s}` is not lo:hi:n"));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad point count `{n}`"))?;
    if n < 2 {
        return Err("a range needs at least 2 points".into());
    }
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(format!("need finite lo <= hi, got {lo}:{hi}"));
    }
    Ok(Range { lo, hi, n })
}

fn polarization(s: &str) -> std::result::Result<Polarization, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn source(s: &str) -> std::result::Result<Source, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a state's density matrix, PPT spectrum, concurrence and verdict.
    State(StateArgs),
    /// Sweep one state parameter and tabulate alpha1 and concurrence.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// lo:hi:n, endpoints included.
        #[arg(long, value_parser = range, allow_hyphen_values = true)]
        range: Range,
        #[command(flatten)]
        fixed: StateArgs,
    },
    /// Simulate one phase scan (or a full scan plan with --plan) as CSV.
    Scan {
        #[arg(long, value_parser = polarization, default_value = "H")]
        pol: Polarization,
        #[arg(long, value_parser = angle, default_value = "0", allow_negative_numbers = true)]
        theta: f64,
        /// Retardance: auto, auto-prime or a number.
        #[arg(long, value_parser = delta_choice, default_value = "auto", allow_negative_numbers = true)]
        delta: DeltaChoice,
        #[arg(long, default_value_t = werner_sim::estimation::pipeline::DEFAULT_POINTS)]
        points: usize,
        /// Shots per phase point; 0 records exact probabilities.
        #[arg(long, default_value_t = 0)]
        shots: u64,
        /// Record a blocked-arm scan with only this source's signal open.
        #[arg(long, value_parser = source)]
        block: Option<Source>,
        /// Write the ten-scan estimation plan into `--out` (a directory).
        #[arg(long)]
        plan: bool,
        #[arg(long, value_parser = angle, default_value = "pi/4", allow_negative_numbers = true)]
        chi_prime_minus_2delta: f64,
    },
    /// Estimate entanglement from simulated scans or a directory of scan CSVs.
    Estimate {
        #[arg(long, default_value_t = werner_sim::estimation::pipeline::DEFAULT_POINTS)]
        points: usize,
        /// Shots per phase point; 0 uses exact probabilities.
        #[arg(long, default_value_t = 0)]
        shots: u64,
        #[arg(long)]
        from_csv: Option<PathBuf>,
        #[arg(long, value_parser = angle, default_value = "pi/4", allow_negative_numbers = true)]
        chi_prime_minus_2delta: f64,
    },
    /// Reproduce the reference tables for the five benchmark states.
    Tables {
        #[arg(long, value_enum)]
        which: Table,
        #[arg(long, value_parser = angle, default_value = "pi/4", allow_negative_numbers = true)]
        chi_prime_minus_2delta: f64,
    },
    /// Concurrence from state parameters against concurrence from visibilities.
    Fig3,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn require_config(path: Option<&Path>) -> Result<InterferometerConfig> {
    let path = path.ok_or_else(|| Error::Config("this command needs --config <path>".into()))?;
    load_run_config(path)
}

fn shots_option(shots: u64) -> Option<u64> {
    (shots > 0).then_some(shots)
}

fn state_report(args: &StateArgs) -> Result<String> {
    let params = args.params()?;
    let rho = build_state(&params);
    let closed = ppt_spectrum_closed(&params);
    let numeric = ppt_spectrum_numeric(&rho)?;
    let mut s = String::new();
    for (i, row) in rho.labels().iter().enumerate() {
        for (j, col) in rho.labels().iter().enumerate() {
            let z = rho.get(i, j);
            let _ = writeln!(s, "rho[{row}|{col}]={}{:+}i", z.re, z.im);
        }
    }
    for (k, a) in closed.as_array().iter().enumerate() {
        let _ = writeln!(s, "alpha{}_closed={a}", k + 1);
    }
    // Eigenvalues carry no labels; compare against the sorted closed values.
    for (k, a) in numeric.iter().enumerate() {
        let _ = writeln!(s, "alpha_sorted{}_numeric={a}", k + 1);
    }
    let _ = writeln!(s, "concurrence_closed={}", concurrence_closed(&params));
    let _ = writeln!(s, "concurrence_wootters={}", concurrence_wootters_numeric(&rho)?);
    let _ = writeln!(s, "verdict={}", Verdict::from_alpha1(closed.alpha1, EXACT_VERDICT_BAND));
    Ok(s)
}

fn sweep_csv(param: SweepParam, range: &Range, fixed: &StateArgs) -> Result<String> {
    let mut s = String::from("param_value,alpha1,concurrence\n");
    for x in range.points() {
        let mut a = *fixed;
        match param {
            SweepParam::Eta => a.eta = x,
            SweepParam::Ih => a.ih = x,
            SweepParam::Icoh => a.icoh = x,
        }
        let p = a.params()?;
        let _ = writeln!(
            s,
            "{x:.16e},{:.16e},{:.16e}",
            ppt_spectrum_closed(&p).alpha1,
            concurrence_closed(&p)
        );
    }
    Ok(s)
}

fn resolve_delta(
    cfg: &InterferometerConfig,
    pol: Polarization,
    choice: DeltaChoice,
    cross_phase: f64,
) -> Result<f64> {
    let target = |unprimed, primed| match choice {
        DeltaChoice::AutoPrime => primed,
        _ => unprimed,
    };
    Ok(match (choice, pol) {
        (DeltaChoice::Value(d), _) => d,
        (_, Polarization::H) => delta_star(&cfg.phases, target(DeltaTarget::H, DeltaTarget::HPrime)),
        (_, Polarization::V) => delta_star(&cfg.phases, target(DeltaTarget::V, DeltaTarget::VPrime)),
        (DeltaChoice::AutoPrime, _) => {
            return Err(Error::Settings(format!(
                "auto-prime applies to H and V analyzers, not {pol}"
            )))
        }
        (DeltaChoice::Auto, _) => delta_for_cross_phase(&cfg.phases, cross_phase),
    })
}

fn verdict_exit(v: Verdict) -> i32 {
    match v {
        Verdict::Entangled => EXIT_ENTANGLED,
        Verdict::Separable => EXIT_SEPARABLE,
        Verdict::Boundary => EXIT_BOUNDARY,
    }
}

/// Run a parsed command and return its exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let out = cli.out.as_deref();
    let config = cli.config.as_deref();
    match cli.command {
        Command::State(args) => {
            emit(out, &state_report(&args)?)?;
            Ok(0)
        }
        Command::Sweep { param, range, fixed } => {
            emit(out, &sweep_csv(param, &range, &fixed)?)?;
            Ok(0)
        }
        Command::Scan {
            pol,
            theta,
            delta,
            points,
            shots,
            block,
            plan,
            chi_prime_minus_2delta,
        } => {
            let cfg = require_config(config)?;
            if plan {
                let dir = out.ok_or_else(|| Error::Config("--plan needs --out <dir>".into()))?;
                let settings = PlanSettings {
                    points,
                    shots: shots_option(shots),
                    seed: cli.seed,
                    cross_phase: chi_prime_minus_2delta,
                };
                simulate_plan(&cfg, &settings)?.write_dir(dir)?;
                return Ok(0);
            }
            let setting = match block {
                Some(open) => ScanSetting::blocked(pol, open),
                None => ScanSetting::fringe(
                    pol,
                    theta,
                    resolve_delta(&cfg, pol, delta, chi_prime_minus_2delta)?,
                ),
            };
            let record = simulate_setting(&cfg, &setting, points, shots_option(shots), cli.seed)?;
            emit(out, &scan_to_csv_string(&record)?)?;
            Ok(0)
        }
        Command::Estimate {
            points,
            shots,
            from_csv,
            chi_prime_minus_2delta,
        } => {
            let report = match from_csv {
                Some(dir) => {
                    // Without a config the transmissions default to lossless.
                    let prior = match config {
                        Some(p) => {
                            let c = load_run_config(p)?;
                            (c.t_h, c.t_v)
                        }
                        None => (1.0, 1.0),
                    };
                    estimate_plan(&ScanPlan::read_dir(&dir)?, prior)?
                }
                None => {
                    let settings = PlanSettings {
                        points,
                        shots: shots_option(shots),
                        seed: cli.seed,
                        cross_phase: chi_prime_minus_2delta,
                    };
                    run_pipeline(&require_config(config)?, &settings)?
                }
            };
            emit(out, &report.to_string())?;
            Ok(verdict_exit(report.verdict))
        }
        Command::Tables {
            which,
            chi_prime_minus_2delta,
        } => {
            let csv = match which {
                Table::Lossless => visibility_table_csv(&visibility_table(chi_prime_minus_2delta)?),
                Table::Lossy => lossy_table_csv(&lossy_table(
                    LOSSY_T_H,
                    LOSSY_T_V,
                    chi_prime_minus_2delta,
                )?),
            };
            emit(out, &csv)?;
            Ok(0)
        }
        Command::Fig3 => {
            emit(out, &concurrence_pairs_csv(&concurrence_pairs(FRAC_PI_4)?))?;
            Ok(0)
        }
    }
}

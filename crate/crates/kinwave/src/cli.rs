//! Command-line front end.
//!
//! Exit codes: 0 success, 2 existence condition fails, 3 input error, 4 numerical failure.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::conditions::{
    check_exists, classify_uniqueness, ConditionReport, Uniqueness, UniquenessVerdict,
};
use crate::config::{Config, OutputSettings};
use crate::densities::oracle_compare;
use crate::error::{Error, Result};
use crate::examples::{example_shock, example_solitary, example_train};
use crate::families::{
    boltzmann_train_match, gamma_star, rescale_to_period, solitary_inject_case_b,
    solitary_inject_case_c, solitary_perturb, train_box_family, FamilyKind, FamilyMember,
    Untrapped,
};
use crate::model::PlasmaParams;
use crate::output::{phase_csv, profile_csv, write_atomic, write_json};
use crate::profile::{build_shock, build_solitary, build_train, ProfileSettings, WaveProfile};
use crate::reconstruction::{reconstruct, verify_profile, Species, Verification};
use crate::sagdeev::{SagdeevPotential, WaveKind};

#[derive(Parser, Debug)]
#[command(
    name = "kinwave",
    version,
    about = "Traveling waves of the two-species Vlasov-Poisson system"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the existence report for a configuration as JSON.
    Check { config: PathBuf },
    /// Build the profile, reconstruct both species and verify.
    ///
    /// Writes profile.csv, phase_plus.csv, phase_minus.csv and report.json.
    Solve {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a family of non-unique solutions; writes members.json and member_<i>.json configs.
    Family {
        config: PathBuf,
        /// perturb | inject-b | inject-c | train-box | boltzmann-match
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        /// Perturbation or box parameter; repeatable (default: the config's family.taus).
        #[arg(long)]
        tau: Vec<f64>,
        /// Target period: a number, or a multiple of gamma* written like 0.5gamma*.
        #[arg(long)]
        gamma: Option<String>,
        /// Number of Boltzmann-matched members (default 3).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Run a built-in worked example: s2.5 (solitary), s3.3 (shock) or train.
    Example {
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// Shock amplitude (default 1).
        #[arg(long = "phi-l")]
        phi_l: Option<f64>,
        /// Train amplitude (default 1).
        #[arg(long)]
        beta: Option<f64>,
        /// Train box width parameter (default 1).
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Compare every density with brute-force midpoint quadrature.
    Oracle {
        config: PathBuf,
        /// Levels sampled uniformly in (0, amplitude].
        #[arg(long, default_value_t = 8)]
        points: usize,
        /// Midpoint cells per comparison.
        #[arg(long, default_value_t = 10_000_000)]
        cells: usize,
    },
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Check { config } => {
            let c = Config::load(&config)?;
            let pot = c.potential()?;
            let report = check_exists(&pot);
            println!("{}", to_json(&report)?);
            Ok(if report.exists() { 0 } else { 2 })
        }
        Command::Solve { config, out } => {
            let c = Config::load(&config)?;
            let pot = c.potential()?;
            solve(&pot, &c.profile, &c.output, &out, None)
        }
        Command::Family {
            config,
            kind,
            out,
            tau,
            gamma,
            count,
        } => {
            let c = Config::load(&config)?;
            let kind = FamilyKind::parse(&kind)
                .ok_or_else(|| Error::Input(format!("unknown family kind {kind}")))?;
            let taus = if tau.is_empty() {
                c.family.taus.clone()
            } else {
                tau
            };
            let gamma = match gamma {
                Some(g) => Some(parse_gamma(&g, &c.params)?),
                None => c.family.gamma,
            };
            let members = family(&c, kind, &taus, gamma, count.or(c.family.count))?;
            write_json(&out.join("members.json"), &members)?;
            for (i, m) in members.iter().enumerate() {
                if let Some(s) = m.sagdeev() {
                    write_json(
                        &out.join(format!("member_{i}.json")),
                        &Config::from_potential(s),
                    )?;
                }
            }
            println!("{} member(s) written to {}", members.len(), out.display());
            Ok(0)
        }
        Command::Example {
            name,
            out,
            phi_l,
            beta,
            tau,
        } => example(&name, &out, phi_l, beta, tau),
        Command::Oracle {
            config,
            points,
            cells,
        } => {
            let c = Config::load(&config)?;
            let pot = c.potential()?;
            if points == 0 || cells < 1000 {
                return Err(Error::Input(
                    "need at least one level and 1000 cells".into(),
                ));
            }
            let phis: Vec<f64> = (1..=points)
                .map(|i| c.amplitude * i as f64 / points as f64)
                .collect();
            let cases = oracle_compare(&pot, &phis, cells, 1e-9)?;
            let worst = cases.iter().map(|k| k.relative_error).fold(0.0, f64::max);
            println!(
                "{}",
                to_json(&json!({ "cases": cases, "max_relative_error": worst }))?
            );
            Ok(if worst < 1e-6 { 0 } else { 4 })
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(format!("json: {e}")))
}

/// "1.5" or "0.5gamma*" (also accepts the Greek spelling).
fn parse_gamma(s: &str, params: &PlasmaParams) -> Result<f64> {
    let t = s.trim();
    for suffix in ["gamma*", "γ⋆", "γ*"] {
        if let Some(f) = t.strip_suffix(suffix) {
            let f = f.trim().trim_end_matches('*');
            let frac: f64 = if f.is_empty() {
                1.0
            } else {
                f.parse()
                    .map_err(|_| Error::Input(format!("bad gamma {s}")))?
            };
            return Ok(frac * gamma_star(params)?);
        }
    }
    t.parse()
        .map_err(|_| Error::Input(format!("bad gamma {s}")))
}

fn build_profile(pot: &SagdeevPotential, s: &ProfileSettings) -> Result<WaveProfile> {
    let p = Arc::new(pot.clone());
    match pot.kind {
        WaveKind::Solitary => build_solitary(p, s),
        WaveKind::Shock => build_shock(p, s),
        WaveKind::Train => build_train(p, s),
    }
}

#[derive(Serialize)]
struct ProfileSummary {
    kind: WaveKind,
    amplitude: f64,
    period: Option<f64>,
    truncation: Option<f64>,
    points: usize,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    conditions: ConditionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    uniqueness: Option<UniquenessVerdict>,
    profile: ProfileSummary,
    verification: Verification,
    slice_norms_plus: Vec<f64>,
    slice_norms_minus: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    example: Option<&'a serde_json::Value>,
}

fn solve(
    pot: &SagdeevPotential,
    ps: &ProfileSettings,
    os: &OutputSettings,
    out: &Path,
    example: Option<&serde_json::Value>,
) -> Result<i32> {
    let conditions = check_exists(pot);
    if !conditions.exists() {
        println!("{}", to_json(&conditions)?);
        return Ok(2);
    }
    let uniqueness = if pot.kind == WaveKind::Solitary {
        Some(classify_uniqueness(pot)?)
    } else {
        None
    };
    let profile = build_profile(pot, ps)?;
    let verification = verify_profile(&profile, os.seed)?;
    let plus = reconstruct(&profile, Species::Plus, os.nx, os.nxi)?;
    let minus = reconstruct(&profile, Species::Minus, os.nx, os.nxi)?;
    write_atomic(&out.join("profile.csv"), profile_csv(&profile).as_bytes())?;
    write_atomic(&out.join("phase_plus.csv"), phase_csv(&plus).as_bytes())?;
    write_atomic(&out.join("phase_minus.csv"), phase_csv(&minus).as_bytes())?;
    let report = SolveReport {
        conditions,
        uniqueness,
        profile: ProfileSummary {
            kind: profile.kind,
            amplitude: profile.amplitude,
            period: profile.period,
            truncation: profile.truncation,
            points: profile.x.len(),
        },
        verification,
        slice_norms_plus: plus.slice_norms(),
        slice_norms_minus: minus.slice_norms(),
        example,
    };
    write_json(&out.join("report.json"), &report)?;
    println!(
        "wrote profile.csv, phase_plus.csv, phase_minus.csv, report.json to {}",
        out.display()
    );
    Ok(0)
}

fn example(
    name: &str,
    out: &Path,
    phi_l: Option<f64>,
    beta: Option<f64>,
    tau: Option<f64>,
) -> Result<i32> {
    let params = PlasmaParams::unit(0.0);
    let (pot, summary) = match name {
        "s2.5" => {
            let ex = example_solitary(&params)?;
            (ex.potential.clone(), serde_json::to_value(&ex))
        }
        "s3.3" => {
            let ex = example_shock(phi_l.unwrap_or(1.0), &params)?;
            (ex.potential.clone(), serde_json::to_value(&ex))
        }
        "train" => {
            let ex = example_train(&params, beta.unwrap_or(1.0), tau.unwrap_or(1.0))?;
            let pot = ex
                .member
                .sagdeev()
                .cloned()
                .ok_or_else(|| Error::Numerical("train member".into()))?;
            (pot, serde_json::to_value(&ex))
        }
        _ => {
            return Err(Error::Input(format!(
                "unknown example {name} (expected s2.5, s3.3 or train)"
            )))
        }
    };
    let summary = summary.map_err(|e| Error::Numerical(format!("json: {e}")))?;
    solve(
        &pot,
        &ProfileSettings::default(),
        &OutputSettings::default(),
        out,
        Some(&summary),
    )
}

fn family(
    c: &Config,
    kind: FamilyKind,
    taus: &[f64],
    gamma: Option<f64>,
    count: Option<usize>,
) -> Result<Vec<FamilyMember>> {
    let need_solitary = || -> Result<SagdeevPotential> {
        let pot = c.potential()?;
        if pot.kind != WaveKind::Solitary {
            return Err(Error::Input(format!(
                "{kind:?} needs a solitary configuration"
            )));
        }
        Ok(pot)
    };
    match kind {
        FamilyKind::Perturb => {
            let base = need_solitary()?;
            let taus = if taus.is_empty() {
                vec![0.1, 0.2, 0.3, 0.4]
            } else {
                taus.to_vec()
            };
            taus.iter().map(|t| solitary_perturb(&base, *t)).collect()
        }
        FamilyKind::InjectB | FamilyKind::InjectC => {
            let base = need_solitary()?;
            let v = classify_uniqueness(&base)?;
            let expected = if kind == FamilyKind::InjectB {
                Uniqueness::NonuniqueB
            } else {
                Uniqueness::NonuniqueC
            };
            if v.classification != expected {
                return Err(Error::Condition(format!(
                    "classification is {:?}: {}",
                    v.classification, v.details
                )));
            }
            let bs = v
                .beta_sharp
                .ok_or_else(|| Error::Numerical("beta_sharp missing".into()))?;
            let bstar = v.beta_star.unwrap_or(f64::INFINITY);
            let (beta, params) = (base.amplitude, base.params);
            let u = Untrapped::Marginals(base);
            let m = if kind == FamilyKind::InjectB {
                solitary_inject_case_b(&u, beta, bs, bstar, &params)?
            } else {
                solitary_inject_case_c(&u, beta, bs, bstar, &params)?
            };
            Ok(vec![m])
        }
        FamilyKind::TrainBox => {
            let taus = if taus.is_empty() {
                vec![c.amplitude]
            } else {
                taus.to_vec()
            };
            taus.iter()
                .map(|t| {
                    let m = train_box_family(&c.params, c.amplitude, *t)?;
                    match gamma {
                        Some(g) => rescale_to_period(&m, g),
                        None => Ok(m),
                    }
                })
                .collect()
        }
        FamilyKind::BoltzmannMatch => {
            let g = gamma.ok_or_else(|| Error::Input("boltzmann-match needs --gamma".into()))?;
            boltzmann_train_match(&c.params, g, count.unwrap_or(3))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_parsing() {
        let mut p = PlasmaParams::unit(0.0);
        assert_eq!(parse_gamma("2.5", &p).unwrap(), 2.5);
        assert!(parse_gamma("0.5gamma*", &p).is_err());
        p.boltzmann = Some(crate::model::Boltzmann {
            rho: 1.0,
            kappa: 1.0,
        });
        let g = gamma_star(&p).unwrap();
        assert!((parse_gamma("0.5gamma*", &p).unwrap() - 0.5 * g).abs() < 1e-15);
        assert!((parse_gamma("0.5γ⋆", &p).unwrap() - 0.5 * g).abs() < 1e-15);
        assert!(parse_gamma("abc", &p).is_err());
    }

    #[test]
    fn usage_errors_exit_three() {
        assert_eq!(run(["kinwave", "frobnicate"]), 3);
        assert_eq!(run(["kinwave", "--help"]), 0);
        assert_eq!(run(["kinwave", "check", "/nonexistent/config.json"]), 3);
    }
}

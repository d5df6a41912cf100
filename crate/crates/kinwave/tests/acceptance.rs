//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits non-zero when a criterion fails that is not in `KNOWN_FAILURES`.

use std::time::{Duration, Instant};

use kinwave::conditions::{check_exists, classify_tail, Endpoint, TailClass, Uniqueness};
use kinwave::densities::{
    brute_force_density, rho_minus, rho_plus_inf, rho_plus_trapped, rho_shock_plus,
};
use kinwave::examples::{example_shock, example_solitary, example_train};
use kinwave::families::{
    boltzmann_gamma_tilde, boltzmann_train_match, gamma_star, gamma_tilde_star, rescale_to_period,
    solitary_inject_case_b, solitary_perturb, tau_star, train_box_family, Untrapped,
};
use kinwave::model::{Boltzmann, Marginal, PlasmaParams};
use kinwave::profile::ProfileSettings;
use kinwave::quad::QuadSettings;
use kinwave::reconstruction::{slice_density, verify_profile, Species};
use kinwave::sagdeev::{derivative_mismatch, FnPotential, Potential, WaveKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose failure is expected and recorded in the decisions ledger.
const KNOWN_FAILURES: &[usize] = &[7];

type Outcome = Result<Vec<String>, Vec<String>>;
type Criterion = (&'static str, fn() -> Outcome);

struct Check {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn that(&mut self, ok: bool, what: impl Into<String>) {
        let w = what.into();
        if ok {
            self.notes.push(w);
        } else {
            self.failures.push(w);
        }
    }

    fn budget(&mut self, start: Instant, limit: Duration) {
        let t = start.elapsed();
        self.that(
            t < limit,
            format!("runtime {:.2}s < {}s", t.as_secs_f64(), limit.as_secs()),
        );
    }

    fn done(self) -> Outcome {
        if self.failures.is_empty() {
            Ok(self.notes)
        } else {
            let mut f = self.failures;
            if !self.notes.is_empty() {
                f.push(format!("passed: {}", self.notes.join("; ")));
            }
            Err(f)
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn unit() -> PlasmaParams {
    PlasmaParams::unit(0.0)
}

fn boltzmann_params() -> PlasmaParams {
    PlasmaParams {
        boltzmann: Some(Boltzmann {
            rho: 1.0,
            kappa: 1.0,
        }),
        ..unit()
    }
}

fn solitary_reproduction() -> Outcome {
    let start = Instant::now();
    let mut c = Check::new();
    let ex = example_solitary(&unit()).map_err(|e| vec![e.to_string()])?;
    c.that(
        ex.rho_at_0.abs() < 1e-14,
        format!("rho(0) = {:e}", ex.rho_at_0),
    );
    c.that(
        ex.rho_at_hundredth > 0.0,
        format!("rho(1/100) = {:.6}", ex.rho_at_hundredth),
    );
    c.that(ex.rho_at_1 < 0.0, format!("rho(1) = {:.6}", ex.rho_at_1));
    c.that(
        ex.rho_residual < 1e-12,
        format!("|rho(beta0)| = {:e}", ex.rho_residual),
    );
    c.that(
        ex.v_residual < 1e-12,
        format!("|V(beta1)| = {:e}", ex.v_residual),
    );
    c.that(
        0.01 < ex.beta0 && ex.beta0 < ex.beta1 && ex.beta1 < 1.0,
        format!("beta0 = {:.15}, beta1 = {:.15}", ex.beta0, ex.beta1),
    );
    c.that(
        ex.report.exists(),
        format!("check_exists: {}", ex.report.verdict),
    );
    c.that(
        ex.uniqueness.classification == Uniqueness::NonuniqueB,
        format!("uniqueness {:?}", ex.uniqueness.classification),
    );
    c.budget(start, Duration::from_secs(5));
    c.done()
}

fn shock_reproduction() -> Outcome {
    let mut c = Check::new();
    for phi_l in [0.5, 1.0, 2.0] {
        let start = Instant::now();
        let ex =
            example_shock(phi_l, &unit()).map_err(|e| vec![format!("Phi_l = {phi_l}: {e}")])?;
        let want = 0.5 * phi_l.sqrt();
        let worst_mass = ex.masses.iter().map(|m| rel(*m, want)).fold(0.0, f64::max);
        c.that(
            worst_mass <= 4.0 * f64::EPSILON,
            format!("Phi_l = {phi_l}: masses rel {worst_mass:e}"),
        );
        c.that(
            ex.symmetry_defect < 1e-12,
            format!("Phi_l = {phi_l}: V symmetry {:e}", ex.symmetry_defect),
        );
        c.that(
            ex.report.exists(),
            format!("Phi_l = {phi_l}: {}", ex.report.verdict),
        );
        let p = ex
            .profile(&ProfileSettings::default())
            .map_err(|e| vec![e.to_string()])?;
        let mid = (p.phi_at(0.0) - 0.5 * phi_l).abs();
        c.that(
            mid < 1e-8,
            format!("Phi_l = {phi_l}: |Phi(0) - Phi_l/2| = {mid:e}"),
        );
        let sym =
            p.x.iter()
                .map(|x| (p.phi_at(*x) + p.phi_at(-x) - phi_l).abs())
                .fold(0.0, f64::max);
        c.that(
            sym < 1e-8,
            format!("Phi_l = {phi_l}: point symmetry {sym:e}"),
        );
        c.budget(start, Duration::from_secs(5));
    }
    c.done()
}

fn residual_suite() -> Outcome {
    let start = Instant::now();
    let mut c = Check::new();
    let s = ProfileSettings::default();
    let err = |e: kinwave::error::Error| vec![e.to_string()];
    let solitary = example_solitary(&unit())
        .map_err(err)?
        .profile(&s)
        .map_err(err)?;
    let shock = example_shock(1.0, &unit())
        .map_err(err)?
        .profile(&s)
        .map_err(err)?;
    let train = example_train(&unit(), 1.0, 1.0).map_err(err)?.profile;
    for (name, p, neutral) in [
        ("solitary", &solitary, 1e-4),
        ("shock", &shock, 1e-4),
        ("train", &train, 1e-10),
    ] {
        let v = verify_profile(p, 7).map_err(err)?;
        c.that(v.poisson < 1e-6, format!("{name}: Poisson {:e}", v.poisson));
        c.that(v.energy < 1e-8, format!("{name}: energy {:e}", v.energy));
        c.that(
            v.characteristics() < 1e-8,
            format!("{name}: characteristics {:e}", v.characteristics()),
        );
        c.that(
            v.neutrality < neutral,
            format!("{name}: neutrality {:e}", v.neutrality),
        );
    }
    c.budget(start, Duration::from_secs(30));
    c.done()
}

fn random_marginal(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Marginal {
    match rng.gen_range(0..3) {
        0 => {
            let k = rng.gen_range(1..=3);
            let w = (hi - lo) / k as f64;
            let pieces: Vec<(f64, f64, f64)> = (0..k)
                .map(|i| {
                    let a = lo + w * (i as f64 + rng.gen_range(0.0..0.3));
                    let b = lo + w * (i as f64 + rng.gen_range(0.6..1.0));
                    (a, b, rng.gen_range(0.1..1.0))
                })
                .collect();
            Marginal::piecewise(&pieces).expect("disjoint pieces")
        }
        1 => {
            let n = rng.gen_range(4..9);
            let knots: Vec<f64> = (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect();
            let values = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            Marginal::tabulated(knots, values).expect("increasing knots")
        }
        _ => {
            let centre = rng.gen_range(lo..hi);
            Marginal::maxwellian(
                rng.gen_range(0.5..2.0),
                centre,
                rng.gen_range(0.5..3.0),
                1.0,
            )
            .expect("positive data")
        }
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let s = QuadSettings::default();
    let n = 10_000_000;
    let excise = 1e-9;
    let inf = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let alpha = rng.gen_range(-0.5..0.5);
        let p = PlasmaParams {
            e_plus: rng.gen_range(0.5..2.0),
            e_minus: rng.gen_range(0.5..2.0),
            q_plus: rng.gen_range(0.5..2.0),
            q_minus: rng.gen_range(0.5..2.0),
            ..PlasmaParams::unit(alpha)
        };
        let phi = rng.gen_range(0.01..1.5);
        let (op, value, brute) = match case % 4 {
            0 => {
                let g = random_marginal(&mut rng, alpha - 3.0, alpha + 3.0);
                let b = brute_force_density(&g, alpha, 2.0 * p.q_minus * phi, -inf, inf, n, excise);
                ("rho_minus", rho_minus(&g, &p, phi, &s), b)
            }
            1 => {
                let g = random_marginal(&mut rng, alpha - 3.0, alpha + 3.0);
                let b = brute_force_density(&g, alpha, -2.0 * p.q_plus * phi, -inf, inf, n, excise);
                ("rho_plus_inf", rho_plus_inf(&g, &p, phi, &s), b)
            }
            2 => {
                let beta = phi * rng.gen_range(1.1..3.0);
                let top = (2.0 * p.q_plus * beta).sqrt();
                let g = random_marginal(&mut rng, alpha, alpha + top);
                let g = match g {
                    Marginal::Maxwellian { .. } => {
                        Marginal::piecewise(&[(alpha, alpha + 0.7 * top, 0.4)]).unwrap()
                    }
                    other => other,
                };
                let b = 2.0
                    * brute_force_density(
                        &g,
                        alpha,
                        2.0 * p.q_plus * (beta - phi),
                        0.0,
                        top,
                        n,
                        excise,
                    );
                (
                    "rho_plus_trapped",
                    rho_plus_trapped(&g, &p, beta, phi, &s),
                    b,
                )
            }
            _ => {
                let phi_l = phi * rng.gen_range(1.1..3.0);
                let g = random_marginal(&mut rng, alpha - 3.0, alpha + 3.0);
                let b = brute_force_density(
                    &g,
                    alpha,
                    2.0 * p.q_plus * (phi_l - phi),
                    -inf,
                    inf,
                    n,
                    excise,
                );
                ("rho_shock_plus", rho_shock_plus(&g, &p, phi_l, phi, &s), b)
            }
        };
        let value = value.map_err(|e| vec![format!("case {case} {op}: {e}")])?;
        let r = rel(value, brute);
        worst = worst.max(r);
        c.that(
            r < 1e-6,
            format!("case {case} {op} Phi = {phi:.4}: rel {r:.2e}"),
        );
    }
    c.notes.clear();
    c.notes
        .push(format!("20 cases, worst relative error {worst:.2e}"));
    c.budget(start, Duration::from_secs(120));
    c.done()
}

fn derivative_consistency() -> Outcome {
    let mut c = Check::new();
    let err = |e: kinwave::error::Error| vec![e.to_string()];
    let solitary = example_solitary(&unit()).map_err(err)?.potential;
    let shock = example_shock(1.0, &unit()).map_err(err)?.potential;
    let train = example_train(&unit(), 1.0, 1.0)
        .map_err(err)?
        .member
        .potential;
    let pots: [(&str, &dyn Potential); 3] = [
        ("solitary", &solitary),
        ("shock", &shock),
        ("train", train.as_ref()),
    ];
    for (name, pot) in pots {
        let m = derivative_mismatch(pot, 200);
        c.that(m < 1e-6, format!("{name}: {m:.2e}"));
    }
    c.done()
}

fn nonuniqueness_families() -> Outcome {
    let mut c = Check::new();
    let err = |e: kinwave::error::Error| vec![e.to_string()];
    let ex = example_solitary(&unit()).map_err(err)?;
    let base = ex.potential.clone();
    let b1 = base.amplitude;
    let inj = solitary_inject_case_b(
        &Untrapped::Marginals(base.clone()),
        b1,
        b1,
        f64::INFINITY,
        &base.params,
    )
    .map_err(err)?;
    let lambda = inj.lambda.unwrap_or(0.0);
    c.that(
        check_exists(inj.potential.as_ref()).exists() && lambda > 0.0,
        format!("(b) injected member exists, lambda = {lambda:.4}"),
    );

    let seeded = inj.sagdeev().expect("marginal-based member").clone();
    let beta = seeded.amplitude;
    for tau in [0.05, 0.1, 0.2, 0.3, 0.45] {
        let m = match solitary_perturb(&seeded, tau) {
            Ok(m) => m,
            Err(e) => {
                c.that(false, format!("(a) tau = {tau}: {e}"));
                continue;
            }
        };
        let s = m.sagdeev().expect("marginal-based member");
        let v0 = (s.v0(beta) - seeded.v0(beta)).abs();
        let dominated = (0..=500).all(|i| {
            let phi = beta * i as f64 / 500.0;
            s.v(phi) >= seeded.v(phi) - 1e-14
        });
        c.that(
            check_exists(s).exists() && v0 < 1e-12 && dominated,
            format!("(a) tau = {tau}: exists, V0 shift {v0:.1e}, dominance {dominated}"),
        );
    }

    let first = train_box_family(&unit(), 1.0, 1.0).map_err(err)?;
    let target = first.period.expect("train period");
    for tau in [0.2, 0.4, 0.6, 0.8, 1.0] {
        let m = train_box_family(&unit(), 1.0, tau)
            .and_then(|m| rescale_to_period(&m, target))
            .map_err(err)?;
        let r = rel(m.period.unwrap_or(f64::NAN), target);
        c.that(
            r < 1e-8,
            format!("(c) tau = {tau}: scale {:.6}, period rel {r:.1e}", m.scale),
        );
    }
    c.done()
}

fn boltzmann_matching() -> Outcome {
    let start = Instant::now();
    let mut c = Check::new();
    let err = |e: kinwave::error::Error| vec![e.to_string()];
    let kappa = 1.0;
    let ts = tau_star(kappa);
    let grid: Vec<f64> = (1..=10).map(|i| ts * i as f64 / 10.0).collect();
    let mut monotone = true;
    for beta in &grid {
        let mut prev = 0.0;
        for tau in &grid {
            let g = boltzmann_gamma_tilde(*tau, *beta, kappa).map_err(err)?;
            monotone &= g > prev;
            prev = g;
        }
    }
    c.that(monotone, "gamma~ increasing in tau on the 10x10 grid");

    let star = gamma_tilde_star(kappa).map_err(err)?;
    let mut seq = Vec::new();
    for k in 2..=5 {
        seq.push(boltzmann_gamma_tilde(ts, 10f64.powi(-k), kappa).map_err(err)?);
    }
    c.that(
        seq.windows(2).all(|w| w[1] < w[0]),
        "gamma~(tau*, beta) decreasing for beta = 1e-2..1e-5",
    );
    let ratio = seq[3] / star;
    c.that(
        ratio < 0.05,
        format!("gamma~(tau*, 1e-5) / gamma~* = {ratio:.4} < 0.05"),
    );

    let p = boltzmann_params();
    let target = 0.5 * gamma_star(&p).map_err(err)?;
    let members = boltzmann_train_match(&p, target, 3).map_err(err)?;
    let taus: Vec<f64> = members.iter().map(|m| m.tau.unwrap_or(f64::NAN)).collect();
    let distinct =
        members.len() == 3 && taus[0] != taus[1] && taus[1] != taus[2] && taus[0] != taus[2];
    c.that(distinct, format!("three members, tau = {taus:.5?}"));
    let worst = members
        .iter()
        .map(|m| rel(m.period.unwrap_or(f64::NAN), target))
        .fold(0.0, f64::max);
    c.that(worst < 1e-6, format!("member periods rel {worst:.1e}"));
    let mut dens: f64 = 0.0;
    for m in &members {
        let s = m.sagdeev().expect("marginal-based member");
        for i in 0..=20 {
            let phi = m.beta * i as f64 / 20.0;
            let want = (-kappa * phi).exp();
            dens = dens.max(rel(
                slice_density(s, Species::Minus, phi, &s.settings),
                want,
            ));
        }
    }
    c.that(
        dens < 1e-8,
        format!("electron density vs rho exp(-kappa Phi): {dens:.1e}"),
    );
    c.budget(start, Duration::from_secs(120));
    c.done()
}

fn tail_calibration() -> Outcome {
    let mut c = Check::new();
    for coeff in [1e-3, 1.0, 1e3] {
        let quad = FnPotential::new(
            WaveKind::Solitary,
            1.0,
            move |x| coeff * x * x,
            move |x| 2.0 * coeff * x,
        );
        let lin = FnPotential::new(WaveKind::Solitary, 1.0, move |x| coeff * x, move |_| coeff);
        for (name, pot, want) in [
            ("c Phi^2", &quad, TailClass::Divergent),
            ("c Phi", &lin, TailClass::Convergent),
        ] {
            match classify_tail(pot, Endpoint::Zero) {
                Ok(r) => c.that(
                    r.class == want,
                    format!("{name}, c = {coeff:e}: {:?}", r.class),
                ),
                Err(e) => c.that(false, format!("{name}, c = {coeff:e}: {e}")),
            }
        }
    }
    c.done()
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("solitary worked example", solitary_reproduction),
        ("shock worked example", shock_reproduction),
        ("residual suite", residual_suite),
        ("oracle equivalence", oracle_equivalence),
        ("derivative consistency", derivative_consistency),
        ("nonuniqueness families", nonuniqueness_families),
        ("Boltzmann period matching", boltzmann_matching),
        ("tail classifier calibration", tail_calibration),
    ];
    let mut unexpected = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let outcome =
            std::panic::catch_unwind(run).unwrap_or_else(|_| Err(vec!["panicked".into()]));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(notes) => println!(
                "criterion {id} PASS  {name} ({secs:.1}s): {}",
                notes.join("; ")
            ),
            Err(fails) => {
                let known = KNOWN_FAILURES.contains(&id);
                let tag = if known { " [known]" } else { "" };
                println!(
                    "criterion {id} FAIL{tag}  {name} ({secs:.1}s): {}",
                    fails.join("; ")
                );
                if !known {
                    unexpected += 1;
                }
            }
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}

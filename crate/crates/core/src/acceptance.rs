//! The acceptance suite: nine desk-scale checks with pinned tolerances.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::banded::SymBanded;
use crate::criteria::{eft_criterion_for, CriterionParams, Status};
use crate::error::Result;
use crate::extinction::{extinction_bound, kv_integral_equiv, ode_descent};
use crate::groundstate::{
    minimize_lambda1, reference_bump, testfn_upper_bound, Grid, LambdaCurve, MinimizeOptions,
};
use crate::orlicz::{complementary_numeric, holder_verify, luxemburg_norm, nfn_inverse, NFunction};
use crate::potential::{tilde_transform, Domain, Omega, Potential, PotentialSpec};
use crate::simulator::{energy_identity_residual, simulate, InitialData, SimConfig, SimResult};
use crate::sphi::{sphi_membership, PhiFn};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} [{:.2} s] {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

fn timed(
    id: u8,
    title: &'static str,
    budget: Option<Duration>,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> Check {
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match out {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if elapsed > b {
            passed = false;
            detail.push_str(&format!("; over the {:.0} s budget", b.as_secs_f64()));
        }
    }
    Check {
        id,
        title,
        passed,
        detail,
        elapsed,
    }
}

pub fn run_all() -> Vec<Check> {
    vec![
        criterion_threshold(),
        ground_state_oracle(),
        test_function_band(),
        end_to_end_extinction(),
        energy_dissipation(),
        closed_form_bound(),
        orlicz_suite(),
        sphi_calculus(),
        sum_integral_equivalence(),
    ]
}

/// Criterion 1: Finite below `α = 2`, divergent above, for `m = 1`, `N = 3`.
pub fn criterion_threshold() -> Check {
    timed(
        1,
        "criterion threshold",
        Some(Duration::from_secs(5)),
        || {
            let ball = Domain::ball(3, 1.0, 64)?;
            let params = CriterionParams::new(1, 3)?;
            let mut ok = true;
            let mut parts = Vec::new();
            for (alpha, want_finite) in [
                (1.0, true),
                (1.5, true),
                (1.8, true),
                (2.2, false),
                (3.0, false),
            ] {
                let v = eft_criterion_for(&PotentialSpec::radial_exp(alpha, ball)?, &params)?;
                let good = if want_finite {
                    v.is_finite()
                } else {
                    v.is_divergent()
                };
                ok &= good;
                parts.push(format!("alpha={alpha}:{}", v.status.label()));
            }
            Ok((ok, parts.join(" ")))
        },
    )
}

/// Lowest eigenvalue of `K v = λ Δx v` by inverse iteration.
fn banded_lowest(k: &SymBanded, dx: f64) -> Result<f64> {
    let chol = k.cholesky()?;
    let n = k.dim();
    let mut v: Vec<f64> = (0..n)
        .map(|i| (PI * (i + 1) as f64 / (n + 1) as f64).sin())
        .collect();
    let mut rho = 0.0;
    for _ in 0..500 {
        let norm = (v.iter().map(|x| x * x).sum::<f64>() * dx).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let next = k.quadratic_form(&v);
        if (next - rho).abs() <= 1e-14 * next {
            break;
        }
        rho = next;
        let rhs: Vec<f64> = v.iter().map(|x| x * dx).collect();
        v = chol.solve(&rhs);
    }
    Ok(rho)
}

/// Criterion 2: `π²` for the Laplacian, the clamped-beam level for `m = 2`, and exact
/// homogeneity in `h` without potential.
pub fn ground_state_oracle() -> Check {
    timed(
        2,
        "ground-state oracle",
        Some(Duration::from_secs(60)),
        || {
            let zero = PotentialSpec::constant(0.0, Domain::unit_interval(1.0, 64)?)?;
            let opts = MinimizeOptions {
                resolution: 2048,
                ..MinimizeOptions::default()
            };
            let l1 = minimize_lambda1(&zero, 1, 0.5, 1.0, &opts)?.lambda;
            let e1 = (l1 - PI * PI).abs() / (PI * PI);
            let l2 = minimize_lambda1(&zero, 2, 0.5, 1.0, &opts)?.lambda;
            let fine = Grid::interval(0.0, 1.0, 16383, 2)?;
            let oracle = banded_lowest(&fine.stiffness(), fine.spacing())?;
            let e2 = (l2 - oracle).abs() / oracle;
            let small = MinimizeOptions {
                resolution: 256,
                ..MinimizeOptions::default()
            };
            let base = minimize_lambda1(&zero, 1, 0.5, 1.0, &small)?.lambda;
            let mut hom = 0.0f64;
            for h in [1e-6, 1e-3, 10.0] {
                let l = minimize_lambda1(&zero, 1, 0.5, h, &small)?.lambda;
                hom = hom.max((l / h - base).abs() / base);
            }
            let ok = e1 < 1e-3 && e2 < 1e-2 && hom < 1e-8;
            Ok((ok, format!("m=1 rel.err {e1:.2e}; m=2 {l2:.4} vs {oracle:.4} rel.err {e2:.2e}; homogeneity {hom:.1e}")))
        },
    )
}

/// Criterion 3: `λ̃₁(h)/(h(-ln h)^2)` stays in a band and below the test-function bound.
pub fn test_function_band() -> Check {
    timed(3, "test-function band", None, || {
        let d = Domain::symmetric_interval(1.0, 256)?;
        let at = tilde_transform(&PotentialSpec::constant(1.0, d)?, 1.0)?;
        let opts = MinimizeOptions {
            resolution: 2048,
            ..MinimizeOptions::default()
        };
        let bump = reference_bump(1, 1, 2048)?;
        let mut ratios = Vec::new();
        let mut below = true;
        for k in 2..=8 {
            let h = 10f64.powi(-k);
            let l = minimize_lambda1(&at, 1, 0.5, h, &opts)?.lambda;
            let ub = testfn_upper_bound(1.0, 0.5, h, 1.0, d.origin_clearance(), &bump)?;
            below &= l <= ub.total;
            ratios.push(l / (h * (-h.ln()).powi(2)));
        }
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        Ok((
            below && hi / lo <= 10.0,
            format!(
                "band max/min {:.3}; below test-function bound: {below}",
                hi / lo
            ),
        ))
    })
}

fn flagship(n: usize, dt: f64) -> Result<SimConfig> {
    Ok(SimConfig {
        m: 1,
        q: 0.5,
        n,
        dt,
        t_max: 10.0,
        potential: PotentialSpec::constant(1.0, Domain::unit_interval(1.0, 64)?)?,
        initial: InitialData::Sine,
        eps_rel: 0.0,
    })
}

/// Ground-state curve of a potential on the simulation grid.
pub fn computed_curve(
    spec: &PotentialSpec,
    m: usize,
    q: f64,
    n: usize,
    y0: f64,
) -> Result<LambdaCurve> {
    let opts = MinimizeOptions {
        resolution: n,
        ..MinimizeOptions::default()
    };
    let hs: Vec<f64> = (0..=12).map(|k| y0 * 10f64.powf(-0.5 * k as f64)).collect();
    let mut pairs = Vec::new();
    for h in hs {
        pairs.push((h, minimize_lambda1(spec, m, q, h, &opts)?.lambda));
    }
    LambdaCurve::from_samples(pairs)
}

/// Criterion 4: Simulation extinguishes no later than the bound from the computed curve.
pub fn end_to_end_extinction() -> Check {
    timed(
        4,
        "end-to-end extinction",
        Some(Duration::from_secs(120)),
        || {
            let cfg = flagship(255, 1e-3)?;
            let run = simulate(&cfg)?;
            let y0 = run.trace[0].l2sq;
            let curve = computed_curve(&cfg.potential, 1, 0.5, 255, y0)?;
            let bound = extinction_bound(&curve, y0)?;
            let Some(t) = bound.value() else {
                return Ok((
                    false,
                    format!("no bound (tail beta {:.3})", bound.tail.fit.beta),
                ));
            };
            let ok = run.extinct() && run.extinction_time <= t;
            Ok((
                ok,
                format!(
                    "T_num {:.4} <= T {:.4} (tail beta {:.3})",
                    run.extinction_time, t, bound.tail.fit.beta
                ),
            ))
        },
    )
}

fn suite_runs() -> Result<Vec<SimResult>> {
    let d = Domain::unit_interval(1.0, 64)?;
    let tilde = tilde_transform(
        &PotentialSpec::constant(1.0, Domain::symmetric_interval(1.0, 64)?)?,
        1.0,
    )?;
    let mut runs = Vec::new();
    for (n, dt) in [(255, 1e-3), (255, 5e-4), (127, 2e-3)] {
        runs.push(simulate(&flagship(n, dt)?)?);
    }
    runs.push(simulate(&SimConfig {
        m: 2,
        ..flagship(127, 1e-3)?
    })?);
    runs.push(simulate(&SimConfig {
        potential: PotentialSpec::constant(0.0, d)?,
        t_max: 0.2,
        eps_rel: 1e-12,
        ..flagship(255, 1e-3)?
    })?);
    for dt in [1e-3, 5e-4] {
        runs.push(simulate(&SimConfig {
            potential: tilde.clone(),
            t_max: 3.0,
            ..flagship(255, dt)?
        })?);
    }
    Ok(runs)
}

/// Criterion 5: The one-sided energy residual is `<= 1e-8 + C Δt`, with `C` fitted once
/// on the `Δt = 1e-3` runs and held for the others; `‖u‖²` never increases.
pub fn energy_dissipation() -> Check {
    timed(5, "energy dissipation", None, || {
        let runs = suite_runs()?;
        let worst = |r: &SimResult| {
            energy_identity_residual(r)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let c = runs
            .iter()
            .filter(|r| r.dt == 1e-3)
            .map(|r| (worst(r) - 1e-8).max(0.0) / r.dt)
            .fold(0.0, f64::max);
        let mut ok = true;
        let mut excess = f64::NEG_INFINITY;
        for r in &runs {
            let w = worst(r);
            excess = excess.max(w - 1e-8 - c * r.dt);
            ok &= w <= 1e-8 + c * r.dt;
            ok &= r.trace.windows(2).all(|p| p[1].l2sq <= p[0].l2sq);
        }
        Ok((
            ok,
            format!(
                "{} runs; fitted C = {c:.3e}; max excess {excess:.2e}",
                runs.len()
            ),
        ))
    })
}

/// Criterion 6: `λ = h^{3/4}`: bound 2 and matching ODE vanish time.
pub fn closed_form_bound() -> Check {
    timed(6, "closed-form bound", None, || {
        let hs: Vec<f64> = (0..=24).map(|k| 10f64.powf(-0.5 * k as f64)).collect();
        let sampled = LambdaCurve::from_fn(&hs, |h| h.powf(0.75))?;
        let exact = LambdaCurve::power_law(1.0, 0.75)?;
        let b1 = extinction_bound(&sampled, 1.0)?.value().unwrap_or(f64::NAN);
        let b2 = extinction_bound(&exact, 1.0)?.value().unwrap_or(f64::NAN);
        let dt = 1e-3;
        let vt = ode_descent(&sampled, 1.0, dt, 10.0)?
            .vanish_time
            .unwrap_or(f64::INFINITY);
        let ok = (b1 - 2.0).abs() < 1e-6 && (b2 - 2.0).abs() < 1e-6 && (vt - 2.0).abs() <= dt;
        Ok((
            ok,
            format!("sampled {b1:.9}, closed {b2:.9}, vanish {vt:.6}"),
        ))
    })
}

/// Criterion 7: Hölder, square identity, constant equality and the numeric complementary.
pub fn orlicz_suite() -> Check {
    timed(7, "Orlicz suite", Some(Duration::from_secs(30)), || {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let b = NFunction::ExpRemainder;
        let n = 32;
        let mut worst_ratio = 0.0f64;
        for _ in 0..1000 {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / total).collect();
            let mask: Vec<bool> = (0..n).map(|i| i < 8 || rng.gen_bool(0.7)).collect();
            let piece = |rng: &mut ChaCha8Rng| {
                let k = rng.gen_range(1..6);
                let vals: Vec<f64> = (0..k).map(|_| rng.gen_range(-4.0..4.0)).collect();
                (0..n).map(|i| vals[i * k / n]).collect::<Vec<f64>>()
            };
            let u = piece(&mut rng);
            let v = piece(&mut rng);
            worst_ratio = worst_ratio.max(holder_verify(&u, &v, &w, &mask, &b)?.ratio);
        }

        let a = NFunction::exp_poly(2.0)?;
        let m = a.clone().square_composed();
        let mut square_err = 0.0f64;
        for _ in 0..100 {
            let w = vec![1.0 / n as f64; n];
            let mask = vec![true; n];
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let lhs = luxemburg_norm(&v, &w, &mask, &a)?.powi(2);
            let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
            let rhs = luxemburg_norm(&sq, &w, &mask, &m)?;
            square_err = square_err.max((lhs - rhs).abs() / rhs);
        }

        let mut const_err = 0.0f64;
        for (c, meas) in [(1.0, 1.0), (-2.5, 0.3), (0.01, 7.0), (40.0, 0.05)] {
            let k = 10;
            let w = vec![meas / k as f64; k];
            let got = luxemburg_norm(&vec![c; k], &w, &vec![true; k], &b)?;
            let want = f64::abs(c) / nfn_inverse(&b, 1.0 / meas)?;
            const_err = const_err.max((got - want).abs() / want);
        }

        let numeric = complementary_numeric(&b)?;
        let mut comp_err = 0.0f64;
        for i in 1..=20 {
            let s = 0.5 * i as f64;
            let closed = (s + 1.0) * (s + 1.0).ln() - s;
            comp_err = comp_err.max((numeric.eval(s) - closed).abs());
        }

        let ok = worst_ratio <= 1.0 + 1e-6
            && square_err <= 1e-8
            && const_err <= 1e-8
            && comp_err <= 1e-8;
        Ok((
            ok,
            format!(
                "max Hölder ratio {worst_ratio:.6}; square identity {square_err:.1e}; constants {const_err:.1e}; complementary {comp_err:.1e}"
            ),
        ))
    })
}

/// The six potentials of the product-stability check.
pub fn sphi_zoo(ball: Domain) -> Result<Vec<(&'static str, PotentialSpec)>> {
    let omega = Potential::RadialOmega {
        omega: Omega::Power {
            coeff: 2.0,
            exponent: 0.3,
        },
        exponent: 2.0,
    };
    Ok(vec![
        ("const:1", PotentialSpec::constant(1.0, ball)?),
        ("const:0.5", PotentialSpec::constant(0.5, ball)?),
        ("radialexp:0.5", PotentialSpec::radial_exp(0.5, ball)?),
        ("radialexp:1.5", PotentialSpec::radial_exp(1.5, ball)?),
        ("omega:2s^0.3,exp=2", PotentialSpec::new(omega, ball)?),
        ("radialexp:2.5", PotentialSpec::radial_exp(2.5, ball)?),
    ])
}

/// Criterion 8: Product stability on the zoo, the `Nβ/α > 1` grid, and the entropy
/// membership of `exp(-1/|x|^{N/2})`.
pub fn sphi_calculus() -> Check {
    timed(8, "S_phi calculus", None, || {
        let ball = Domain::ball(3, 1.0, 64)?;
        let phi = PhiFn::power(2.0 / 3.0)?;
        let zoo = sphi_zoo(ball)?;
        let members: Vec<bool> = zoo
            .iter()
            .map(|(_, s)| sphi_membership(s, &phi).map(|v| v.is_finite()))
            .collect::<Result<_>>()?;
        let mut products_ok = true;
        let mut pairs = 0;
        for i in 0..zoo.len() {
            for j in i..zoo.len() {
                if members[i] && members[j] {
                    pairs += 1;
                    products_ok &=
                        sphi_membership(&zoo[i].1.product(&zoo[j].1)?, &phi)?.is_finite();
                }
            }
        }
        let mut grid_ok = true;
        let mut mismatches = Vec::new();
        for alpha in [0.5, 1.0, 1.5, 2.5, 4.0] {
            for beta in [0.2, 0.45, 0.7, 1.0, 1.6] {
                let v = sphi_membership(
                    &PotentialSpec::radial_exp(alpha, ball)?,
                    &PhiFn::power(beta)?,
                )?;
                let want_finite = 3.0 * beta / alpha > 1.0;
                let good = if want_finite {
                    v.is_finite()
                } else {
                    v.is_divergent()
                };
                if !good {
                    mismatches.push(format!("({alpha},{beta}):{}", v.status.label()));
                }
                grid_ok &= good;
            }
        }
        let entropy = sphi_membership(&PotentialSpec::radial_exp(1.5, ball)?, &PhiFn::Entropy)?;
        let ok = products_ok
            && grid_ok
            && entropy.is_finite()
            && members.iter().filter(|m| **m).count() == 5;
        Ok((
            ok,
            format!(
                "{pairs} member pairs, products finite: {products_ok}; threshold grid mismatches: [{}]; entropy membership {}",
                mismatches.join(" "),
                entropy.status.label()
            ),
        ))
    })
}

/// Criterion 9: Sum and integral conditions agree on three synthetic profiles.
pub fn sum_integral_equivalence() -> Check {
    timed(9, "sum/integral equivalence", None, || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (p, want_finite) in [(2.0, true), (1.0, false), (1.5, true)] {
            let profile = move |t: f64| Ok(t.powf(p));
            let e = kv_integral_equiv(&profile, 0.5, 30)?;
            let kind = |s: &Status| {
                if want_finite {
                    matches!(s, Status::Finite(_))
                } else {
                    matches!(s, Status::Divergent)
                }
            };
            ok &= e.agree && kind(&e.integral.status) && kind(&e.sum.status);
            parts.push(format!(
                "p={p}: {}/{}",
                e.integral.status.label(),
                e.sum.status.label()
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

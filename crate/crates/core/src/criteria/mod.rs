//! Sufficient conditions for finite extinction time, each posed as the
//! convergence of an improper integral at `s = 0`.

pub mod engine;

pub use engine::{
    classify_depth, classify_depth_with, classify_improper_integral, Block, BlockLayout,
    Diagnostics, EngineOptions, IntegralVerdict, Status,
};

use crate::error::{parameter, precondition, Error, Result};
use crate::potential::{DistFn, Omega, PotentialSpec, Shape};

const INV_E: f64 = 0.36787944117144233;

/// Operator half-order `m` and dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriterionParams {
    pub m: usize,
    pub dim: usize,
}

impl CriterionParams {
    pub fn new(m: usize, dim: usize) -> Result<Self> {
        if m == 0 || dim == 0 {
            return parameter(format!("m = {m} and N = {dim} must both be positive"));
        }
        Ok(Self { m, dim })
    }

    /// `N = 2m`, where the entropy weight replaces the power weight.
    pub fn is_critical(&self) -> bool {
        self.dim == 2 * self.m
    }

    /// `θ = min(2m/N, 1)`; undefined when `N = 2m`.
    pub fn theta(&self) -> Result<f64> {
        if self.is_critical() {
            return parameter("theta is not used when N = 2m");
        }
        Ok((2.0 * self.m as f64 / self.dim as f64).min(1.0))
    }

    /// `min(2m, N)`, the critical exponent of `exp(-1/|x|^alpha)`.
    pub fn radial_threshold(&self) -> f64 {
        (2 * self.m).min(self.dim) as f64
    }
}

/// `E(s) = s(-ln s)` with `E(0) = 0`.
pub fn entropy(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        -s * s.ln()
    }
}

fn weight(m: f64, params: &CriterionParams) -> f64 {
    if params.is_critical() {
        entropy(m.min(INV_E))
    } else {
        m.powf((2.0 * params.m as f64 / params.dim as f64).min(1.0))
    }
}

/// `∫_0^c s^{-1} M(s)^θ ds` (or the entropy-weighted form at `N = 2m`)
/// with `c = 1/e`.
pub fn eft_criterion(dist: &DistFn, params: &CriterionParams) -> Result<IntegralVerdict> {
    eft_criterion_with_limit(dist, params, INV_E)
}

pub fn eft_criterion_with_limit(
    dist: &DistFn,
    params: &CriterionParams,
    c: f64,
) -> Result<IntegralVerdict> {
    if !(c > 0.0) {
        return parameter(format!("upper limit c = {c} must be positive"));
    }
    classify_depth(|t| weight(dist.at_depth(t), params), -c.ln())
}

/// [`eft_criterion`] for a potential, with `c = min(1/e, sup a)`.
pub fn eft_criterion_for(
    spec: &PotentialSpec,
    params: &CriterionParams,
) -> Result<IntegralVerdict> {
    let sup = spec.sup();
    if sup == 0.0 {
        // a ≡ 0: M = |Ω| down to s = 0
        return eft_criterion_with_limit(&spec.distribution(), params, INV_E);
    }
    eft_criterion_with_limit(&spec.distribution(), params, sup.min(INV_E))
}

/// Which threshold on `p` the log-integrability statement is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogLpStatement {
    /// `p > N/2`, stated for `m = 1`.
    HalfDimension,
    /// `p > θ`.
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogLpReport {
    pub outcome: Outcome,
    /// `∫ |ln a|^p` status (`None` when `a` vanishes on a positive-measure set).
    pub integral: Option<IntegralVerdict>,
    pub threshold: f64,
    pub statement: LogLpStatement,
    pub p_exceeds_threshold: bool,
    /// The other statement's threshold, for comparison.
    pub alternative_threshold: Option<f64>,
}

fn thresholds(params: &CriterionParams, statement: LogLpStatement) -> Result<(f64, Option<f64>)> {
    let half = params.dim as f64 / 2.0;
    let theta = params.theta().ok();
    match statement {
        LogLpStatement::HalfDimension => {
            if params.m != 1 {
                return parameter("the p > N/2 statement is made for m = 1 only");
            }
            Ok((half, theta))
        }
        LogLpStatement::Theta => match theta {
            Some(t) => Ok((t, (params.m == 1).then_some(half))),
            None => parameter("the p > theta statement needs N != 2m"),
        },
    }
}

/// `ln(1/a) ∈ L^p(Ω)` together with the chosen threshold on `p`.
pub fn log_lp_criterion(
    spec: &PotentialSpec,
    p: f64,
    params: &CriterionParams,
    statement: LogLpStatement,
) -> Result<LogLpReport> {
    if !(p > 0.0 && p.is_finite()) {
        return parameter(format!("p = {p} must be positive"));
    }
    let (threshold, alternative_threshold) = thresholds(params, statement)?;
    let p_exceeds_threshold = p > threshold;
    let mut report = LogLpReport {
        outcome: Outcome::Fails,
        integral: None,
        threshold,
        statement,
        p_exceeds_threshold,
        alternative_threshold,
    };

    let vanishes =
        spec.sup() == 0.0 || (!spec.is_radial() && spec.ln_on_cells().contains(&f64::NEG_INFINITY));
    if vanishes {
        return Ok(report);
    }
    let verdict = integrate_over_domain(spec, |ln_a| p * (-ln_a).abs().ln())?;
    report.outcome = match verdict.status {
        Status::Finite(_) if p_exceeds_threshold => Outcome::Holds,
        Status::Finite(_) | Status::Divergent => Outcome::Fails,
        Status::Inconclusive => Outcome::Inconclusive,
    };
    report.integral = Some(verdict);
    Ok(report)
}

/// `∫_Ω exp(g(ln a(x))) dx`, where `g` maps `ln a` to the log of the
/// integrand. Radial potentials use `u = -ln |x|` with unit blocks; other
/// potentials are summed over the sampling cells.
fn integrate_over_domain(spec: &PotentialSpec, g: impl Fn(f64) -> f64) -> Result<IntegralVerdict> {
    let dom = spec.domain();
    if !spec.is_radial() {
        let cells = dom.cells();
        let mut total = 0.0;
        for (c, ln_a) in cells.iter().zip(spec.ln_on_cells()) {
            let v = g(ln_a).exp() * c.volume;
            if !v.is_finite() {
                return Ok(IntegralVerdict {
                    status: Status::Divergent,
                    diagnostics: Diagnostics::default(),
                });
            }
            total += v;
        }
        return Ok(IntegralVerdict {
            status: Status::Finite(total),
            diagnostics: Diagnostics::default(),
        });
    }
    let ln_density = |r: f64| -> f64 {
        match dom.shape() {
            Shape::Interval { .. } => dom.radial_density(r).ln(),
            Shape::Ball { .. } => {
                crate::potential::unit_sphere_area(dom.dim()).ln()
                    + (dom.dim() as f64 - 1.0) * r.ln()
            }
        }
    };
    let u0 = -dom.max_radius().ln();
    let umin = if dom.min_radius() > 0.0 {
        -dom.min_radius().ln()
    } else {
        f64::INFINITY
    };
    // an integrand that overflows the log scale is reported as divergent
    let overflow = std::cell::Cell::new(false);
    let integrand = |u: f64| -> f64 {
        if u > umin {
            return 0.0;
        }
        let r = (-u).exp();
        let ln_v = g(spec.ln_at_radius(r)) + ln_density(r) - u;
        if ln_v.is_nan() || ln_v > 700.0 {
            overflow.set(true);
            return 0.0;
        }
        ln_v.exp()
    };
    let verdict = classify_depth_with(integrand, u0, &EngineOptions::uniform(1.0))?;
    if overflow.get() {
        return Ok(IntegralVerdict {
            status: Status::Divergent,
            diagnostics: verdict.diagnostics,
        });
    }
    Ok(verdict)
}

/// Combined `f(a) ∈ L^1` and weight-integral verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct FReport {
    pub l1: IntegralVerdict,
    pub integral: IntegralVerdict,
    /// Finite only when both parts are finite.
    pub combined: IntegralVerdict,
}

/// `∫_Ω f(a(x)) dx` where `ln_f(t) = ln f(e^{-t})`.
pub fn f_l1_norm(ln_f: &impl Fn(f64) -> f64, spec: &PotentialSpec) -> Result<IntegralVerdict> {
    integrate_over_domain(spec, |ln_a| {
        if ln_a == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            ln_f(-ln_a)
        }
    })
}

fn check_weight_monotone(ln_f: &impl Fn(f64) -> f64) -> Result<()> {
    // f nonincreasing in s  <=>  ln f nondecreasing in depth
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=400 {
        let t = 10f64.powf(-3.0 + 7.0 * i as f64 / 400.0);
        let v = ln_f(t);
        if v.is_nan() {
            return Err(Error::Evaluation {
                s: (-t).exp(),
                depth: t,
                value: v,
            });
        }
        if v < prev - 1e-12 * prev.abs().max(1.0) {
            return precondition(format!(
                "f must be nonincreasing in s; it increases near s = e^-{t}"
            ));
        }
        prev = v;
    }
    Ok(())
}

/// Criterion with an auxiliary weight `f`: `f(a) ∈ L^1` and
/// `∫_0 s^{-1} f(s)^{-θ} ds < ∞` (or `∫_0 s^{-1} f^{-1} ln f ds` at `N = 2m`).
///
/// `ln_f(t)` is `ln f(e^{-t})`.
pub fn f_criterion(
    ln_f: impl Fn(f64) -> f64,
    spec: &PotentialSpec,
    params: &CriterionParams,
) -> Result<FReport> {
    check_weight_monotone(&ln_f)?;
    let l1 = f_l1_norm(&ln_f, spec)?;
    let integral = if params.is_critical() {
        classify_depth(
            |t| {
                let lf = ln_f(t);
                (-lf).exp() * lf.max(0.0)
            },
            1.0,
        )?
    } else {
        let theta = params.theta()?;
        classify_depth(|t| (-theta * ln_f(t)).exp(), 1.0)?
    };
    let combined = if l1.is_finite() {
        integral.clone()
    } else {
        l1.clone()
    };
    Ok(FReport {
        l1,
        integral,
        combined,
    })
}

/// Dini-type condition on the modulus of `exp(-omega(|x|)/|x|^e)`.
pub fn dini_criterion(omega: &Omega, params: &CriterionParams) -> Result<IntegralVerdict> {
    if let Omega::Table(t) = omega {
        if t.ys()[0] < 0.0 {
            return precondition("omega must be nonnegative");
        }
    }
    if params.is_critical() {
        classify_depth(
            |t| {
                let w = omega.at_depth(t);
                if w <= 0.0 {
                    0.0
                } else {
                    w * (-w.ln() + t)
                }
            },
            1.0,
        )
    } else {
        classify_depth(|t| omega.at_depth(t), 1.0)
    }
}

pub const VERDICT_HEADER: &str = "criterion,m,N,theta,status,value,blocks_used";

/// One row of the verdict CSV (`theta` empty when `N = 2m`).
pub fn verdict_row(criterion: &str, params: &CriterionParams, verdict: &IntegralVerdict) -> String {
    let theta = params.theta().map(crate::report::num).unwrap_or_default();
    let value = verdict
        .status
        .value()
        .map(crate::report::num)
        .unwrap_or_default();
    format!(
        "{criterion},{},{},{theta},{},{value},{}",
        params.m,
        params.dim,
        verdict.status.label(),
        verdict.blocks_used()
    )
}

//! Extinction-time bounds from ground-state curves, the descent ODE, and the
//! sum/integral conditions on the linear level.

use std::cell::RefCell;

use crate::criteria::{classify_depth, IntegralVerdict, Status};
use crate::error::{parameter, precondition, Error, Result};
use crate::groundstate::{LambdaCurve, PowerFit};
use crate::report;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundStatus {
    Bound(f64),
    NoBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRecord {
    /// Law used below the smallest sample.
    pub fit: PowerFit,
    /// `∫_0^{h_min} dh/λ`, infinite when `β >= 1`.
    pub contribution: f64,
    pub h_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub status: BoundStatus,
    pub tail: TailRecord,
}

impl BoundResult {
    pub fn value(&self) -> Option<f64> {
        match self.status {
            BoundStatus::Bound(t) => Some(t),
            BoundStatus::NoBound => None,
        }
    }
}

/// `T <= ½ ∫_0^{y0} dh / λ(h)`.
pub fn extinction_bound(curve: &LambdaCurve, y0: f64) -> Result<BoundResult> {
    if !(y0 > 0.0 && y0.is_finite()) {
        return parameter(format!("initial mass y0 = {y0} must be positive"));
    }
    if let Some((hs, _)) = curve.samples() {
        if hs.len() < 4 {
            return precondition(format!(
                "bound needs at least 4 curve samples, got {}",
                hs.len()
            ));
        }
        let decades = (hs[hs.len() - 1] / hs[0]).log10();
        if decades < 3.0 - 1e-9 {
            return precondition(format!("curve spans {decades:.2} decades of h, need 3"));
        }
    }
    let fit = curve.tail_law();
    let h_min = curve.samples().map_or(y0, |(hs, _)| hs[0]).min(y0);
    let contribution = fit.inverse_integral(0.0, h_min);
    let tail = TailRecord {
        fit,
        contribution,
        h_min,
    };
    if fit.beta >= 1.0 || !contribution.is_finite() {
        return Ok(BoundResult {
            status: BoundStatus::NoBound,
            tail,
        });
    }
    let total = contribution + curve.inverse_integral(h_min, y0);
    Ok(BoundResult {
        status: BoundStatus::Bound(0.5 * total),
        tail,
    })
}

pub const INTEGRAND_HEADER: &str = "h,lambda,inv_lambda";

/// `h, λ(h), 1/λ(h)` on a log grid over `[y0 10^{-decades}, y0]`.
pub fn integrand_trace(curve: &LambdaCurve, y0: f64, decades: f64, points: usize) -> String {
    let rows = (0..points.max(2)).map(|i| {
        let h = y0 * 10f64.powf(-decades * (1.0 - i as f64 / (points.max(2) - 1) as f64));
        let l = curve.eval(h);
        format!(
            "{},{},{}",
            report::num(h),
            report::num(l),
            report::num(1.0 / l)
        )
    });
    report::csv(INTEGRAND_HEADER, rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<f64>,
    pub vanish_time: Option<f64>,
}

/// Local law `λ ≈ κ y^β` from a log derivative.
fn local_law(curve: &LambdaCurve, y: f64) -> PowerFit {
    if let LambdaCurve::PowerLaw(p) = curve {
        return *p;
    }
    let e = 1e-4;
    let up = curve.eval(y * (1.0 + e));
    let dn = curve.eval(y * (1.0 - e));
    let beta = (up / dn).ln() / ((1.0 + e) / (1.0 - e)).ln();
    PowerFit {
        kappa: curve.eval(y) / y.powf(beta),
        beta,
    }
}

/// `y' = -2λ(y)` by RK4 up to `t_max`; once the local power law (`β < 1`)
/// reaches zero within one step, the remaining time is taken analytically.
pub fn ode_descent(curve: &LambdaCurve, y0: f64, dt: f64, t_max: f64) -> Result<Trajectory> {
    if !(y0 > 0.0 && y0.is_finite()) {
        return parameter(format!("initial mass y0 = {y0} must be positive"));
    }
    if !(dt > 0.0 && t_max >= dt) {
        return parameter("need dt > 0 and t_max >= dt");
    }
    let rhs = |y: f64| if y > 0.0 { -2.0 * curve.eval(y) } else { 0.0 };
    let mut ts = vec![0.0];
    let mut ys = vec![y0];
    let mut t = 0.0;
    let mut y = y0;
    while t < t_max {
        let law = local_law(curve, y);
        if law.beta < 1.0 {
            let remaining = y.powf(1.0 - law.beta) / (2.0 * law.kappa * (1.0 - law.beta));
            if remaining <= dt {
                t += remaining;
                ts.push(t);
                ys.push(0.0);
                return Ok(Trajectory {
                    ts,
                    ys,
                    vanish_time: Some(t),
                });
            }
        }
        let mut step = dt.min(t_max - t);
        let next = loop {
            let k1 = rhs(y);
            let k2 = rhs(y + 0.5 * step * k1);
            let k3 = rhs(y + 0.5 * step * k2);
            let k4 = rhs(y + step * k3);
            let cand = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let stages_positive =
                y + 0.5 * step * k1 > 0.0 && y + 0.5 * step * k2 > 0.0 && y + step * k3 > 0.0;
            if cand > 0.0 && cand < y && stages_positive {
                break cand;
            }
            step *= 0.5;
            if step < dt * 1e-12 {
                return Err(Error::Numerical(format!(
                    "descent step collapsed at t = {t}, y = {y}"
                )));
            }
        };
        t += step;
        y = next;
        ts.push(t);
        ys.push(y);
    }
    Ok(Trajectory {
        ts,
        ys,
        vanish_time: None,
    })
}

/// `ln α_n = -n ln n`.
pub fn default_ln_alpha(n: usize) -> f64 {
    let n = n as f64;
    -n * n.ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KvRow {
    pub n: usize,
    pub ln_alpha: f64,
    pub term: f64,
    pub partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KvReport {
    pub rows: Vec<KvRow>,
    /// Local exponent of the terms over the last index block.
    pub exponent: f64,
    /// `2^{1 - p}`, the dyadic block ratio of a `n^{-p}` sequence.
    pub block_ratio: f64,
    pub status: Status,
}

pub const KV_HEADER: &str = "n,alpha_n,term,partial_sum";

impl KvReport {
    pub fn csv(&self) -> String {
        report::csv(
            KV_HEADER,
            self.rows.iter().map(|r| {
                format!(
                    "{},{},{},{}",
                    r.n,
                    report::num(r.ln_alpha.exp()),
                    report::num(r.term),
                    report::num(r.partial_sum)
                )
            }),
        )
    }
}

/// Block ratios at or below this classify a term sequence as summable.
pub const SEQ_FINITE_RATIO: f64 = 0.7;
/// Block ratios at or above this classify it as divergent.
pub const SEQ_DIVERGENT_RATIO: f64 = 0.9;

/// `Σ_{2<=n<=n_max} λ(h_n)^{-1} (ln λ(h_n) + ln(α_n/α_{n+1}) + 1)` with
/// `h_n = α_n^{(1-q)/2}`. The profile `lambda_at_depth(t)` returns `λ(e^{-t})`;
/// `ln_alpha(n)` returns `ln α_n`.
pub fn kv_sum(
    lambda_at_depth: &dyn Fn(f64) -> Result<f64>,
    ln_alpha: &dyn Fn(usize) -> f64,
    q: f64,
    n_max: usize,
) -> Result<KvReport> {
    if !(q > 0.0 && q < 1.0) {
        return parameter(format!("q = {q} must lie in (0, 1)"));
    }
    if n_max < 5 {
        return parameter("kv sum needs n_max >= 5");
    }
    let mut rows = Vec::with_capacity(n_max - 1);
    let mut partial = 0.0;
    for n in 2..=n_max {
        let la = ln_alpha(n);
        let la_next = ln_alpha(n + 1);
        if !(la_next < la && la < 0.0) {
            return precondition(format!(
                "ln alpha must decrease and stay negative (n = {n})"
            ));
        }
        let depth = -(1.0 - q) / 2.0 * la;
        let lambda = lambda_at_depth(depth)
            .map_err(|e| Error::Numerical(format!("profile failed at alpha_{n} = e^{la}: {e}")))?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Numerical(format!(
                "profile value {lambda} at alpha_{n} = e^{la}"
            )));
        }
        let term = (lambda.ln() + (la - la_next) + 1.0) / lambda;
        partial += term;
        rows.push(KvRow {
            n,
            ln_alpha: la,
            term,
            partial_sum: partial,
        });
    }
    let tail: Vec<&KvRow> = rows.iter().filter(|r| 2 * r.n >= n_max).collect();
    let exponent = if tail.iter().all(|r| r.term > 0.0) {
        let xs: Vec<f64> = tail.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|r| r.term.ln()).collect();
        let k = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        -sxy / sxx
    } else {
        f64::NAN
    };
    let block_ratio = 2f64.powf(1.0 - exponent);
    let status = if block_ratio <= SEQ_FINITE_RATIO {
        // geometric tail in the block ratio, blocks of the last block's size
        let last_block: f64 = tail.iter().map(|r| r.term).sum();
        Status::Finite(partial + last_block * block_ratio / (1.0 - block_ratio))
    } else if block_ratio >= SEQ_DIVERGENT_RATIO {
        Status::Divergent
    } else {
        Status::Inconclusive
    };
    Ok(KvReport {
        rows,
        exponent,
        block_ratio,
        status,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KvEquivalence {
    /// `∫_0^{1/e} dh / (h λ(h))`.
    pub integral: IntegralVerdict,
    pub sum: KvReport,
    pub agree: bool,
}

/// The integral condition next to the sum with `α_n = n^{-n}`.
pub fn kv_integral_equiv(
    lambda_at_depth: &dyn Fn(f64) -> Result<f64>,
    q: f64,
    n_max: usize,
) -> Result<KvEquivalence> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integral = classify_depth(
        |t| match lambda_at_depth(t) {
            Ok(l) => 1.0 / l,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        1.0,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let integral = integral?;
    let sum = kv_sum(lambda_at_depth, &default_ln_alpha, q, n_max)?;
    let agree =
        integral.status.same_kind(&sum.status) && !matches!(sum.status, Status::Inconclusive);
    Ok(KvEquivalence {
        integral,
        sum,
        agree,
    })
}

/// Piecewise power law in the depth `t = -ln h`, extended by the end segments.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthProfile {
    ts: Vec<f64>,
    ls: Vec<f64>,
}

impl DepthProfile {
    pub fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.len() < 2
            || pairs
                .iter()
                .any(|(t, l)| !(*t > 0.0 && *l > 0.0 && t.is_finite() && l.is_finite()))
        {
            return parameter("depth profile needs at least two samples with t > 0, lambda > 0");
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return parameter("depth profile samples must have distinct depths");
        }
        let (ts, ls) = pairs.into_iter().unzip();
        Ok(Self { ts, ls })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.ts.len();
        let i = match self.ts.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return self.ls[i],
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let p = (self.ls[i + 1] / self.ls[i]).ln() / (self.ts[i + 1] / self.ts[i]).ln();
        self.ls[i] * (t / self.ts[i]).powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::engine::EngineOptions;
    use proptest::prelude::*;

    fn log_grid(lo_exp: i32, hi_exp: i32, per_decade: usize) -> Vec<f64> {
        let n = (hi_exp - lo_exp) as usize * per_decade;
        (0..=n)
            .map(|i| 10f64.powf(lo_exp as f64 + i as f64 / per_decade as f64))
            .collect()
    }

    #[test]
    fn power_law_bound() {
        let c = LambdaCurve::power_law(1.0, 0.75).unwrap();
        let b = extinction_bound(&c, 1.0).unwrap();
        assert!((b.value().unwrap() - 2.0).abs() < 1e-12);
        let hs = log_grid(-8, 0, 4);
        let s = LambdaCurve::from_fn(&hs, |h| h.powf(0.75)).unwrap();
        assert!((extinction_bound(&s, 1.0).unwrap().value().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn linear_curve_has_no_bound() {
        let hs = log_grid(-8, 0, 2);
        let s = LambdaCurve::from_fn(&hs, |h| std::f64::consts::PI.powi(2) * h).unwrap();
        assert_eq!(
            extinction_bound(&s, 1.0).unwrap().status,
            BoundStatus::NoBound
        );
    }

    #[test]
    fn log_corrected_power() {
        let lam = |h: f64| h.powf(0.9) * (-h.ln());
        // uniform in ln(-ln h), dense where the log factor bends most
        let hs: Vec<f64> = (0..=4000)
            .map(|i| (-(690f64.ln() * i as f64 / 4000.0).exp()).exp())
            .collect();
        let c = LambdaCurve::from_fn(&hs, lam).unwrap();
        let y0 = (-1.0f64).exp();
        let got = extinction_bound(&c, y0).unwrap().value().unwrap();
        // oracle: ½ ∫_1^∞ e^{-0.1 t} / t dt by the depth engine at tight settings
        let opts = EngineOptions {
            tol: 1e-13,
            ..EngineOptions::default()
        };
        let v = crate::criteria::classify_depth_with(|t| (-0.1 * t).exp() / t, 1.0, &opts).unwrap();
        let oracle = 0.5 * v.status.value().unwrap();
        assert!((got - oracle).abs() < 1e-6 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn bound_preconditions() {
        let c = LambdaCurve::from_fn(&[1e-2, 1e-1, 1.0], |h| h).unwrap();
        assert!(matches!(
            extinction_bound(&c, 1.0),
            Err(Error::Precondition(_))
        ));
        let c = LambdaCurve::from_fn(&[1e-2, 3e-2, 1e-1, 1.0], |h| h).unwrap();
        assert!(matches!(
            extinction_bound(&c, 1.0),
            Err(Error::Precondition(_))
        ));
        let c = LambdaCurve::power_law(1.0, 0.5).unwrap();
        assert!(matches!(
            extinction_bound(&c, 0.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn ode_matches_closed_forms() {
        let c = LambdaCurve::power_law(1.0, 0.75).unwrap();
        let dt = 1e-3;
        let tr = ode_descent(&c, 1.0, dt, 10.0).unwrap();
        assert!((tr.vanish_time.unwrap() - 2.0).abs() < dt);
        assert!(tr.ys.windows(2).all(|w| w[1] < w[0]));

        let lin = LambdaCurve::power_law(1.0, 1.0).unwrap();
        let tr = ode_descent(&lin, 1.0, 1e-3, 3.0).unwrap();
        assert!(tr.vanish_time.is_none());
        for (t, y) in tr.ts.iter().zip(&tr.ys) {
            assert!((y - (-2.0 * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn kv_examples() {
        let sq = |t: f64| Ok(t * t);
        let lin = |t: f64| Ok(t);
        let mid = |t: f64| Ok(t.powf(1.5));
        let konst = |_t: f64| Ok(3.0);
        let r = kv_sum(&sq, &default_ln_alpha, 0.5, 30).unwrap();
        assert!(matches!(r.status, Status::Finite(_)), "{r:?}");
        assert_eq!(r.rows.len(), 29);
        assert_eq!(
            kv_sum(&lin, &default_ln_alpha, 0.5, 30).unwrap().status,
            Status::Divergent
        );
        assert_eq!(
            kv_sum(&konst, &default_ln_alpha, 0.5, 30).unwrap().status,
            Status::Divergent
        );

        let e = kv_integral_equiv(&sq, 0.5, 30).unwrap();
        assert!(e.agree && e.integral.is_finite());
        let e = kv_integral_equiv(&lin, 0.5, 30).unwrap();
        assert!(e.agree && e.integral.is_divergent());
        let e = kv_integral_equiv(&mid, 0.5, 30).unwrap();
        assert!(e.agree && e.integral.is_finite(), "{:?}", e.sum);
    }

    #[test]
    fn kv_propagates_profile_failure() {
        let bad = |t: f64| {
            if t > 5.0 {
                Err(Error::Numerical("boom".into()))
            } else {
                Ok(t)
            }
        };
        assert!(kv_sum(&bad, &default_ln_alpha, 0.5, 30).is_err());
        assert!(kv_integral_equiv(&bad, 0.5, 30).is_err());
    }

    #[test]
    fn depth_profile_extends_power_laws() {
        let p =
            DepthProfile::new((1..20).map(|k| (k as f64, (k as f64).powi(2))).collect()).unwrap();
        assert!((p.eval(100.0) - 1e4).abs() < 1e-8);
        assert!((p.eval(0.5) - 0.25).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn larger_curve_smaller_bound(beta in 0.3f64..0.95, k in 0.2f64..5.0, boost in 1.0f64..4.0) {
            let hs = log_grid(-9, 0, 3);
            let small = LambdaCurve::from_fn(&hs, |h| k * h.powf(beta)).unwrap();
            let big = LambdaCurve::from_fn(&hs, |h| boost * k * h.powf(beta) * (1.0 + h)).unwrap();
            let bs = extinction_bound(&small, 1.0).unwrap().value().unwrap();
            let bb = extinction_bound(&big, 1.0).unwrap().value().unwrap();
            prop_assert!(bb <= bs * (1.0 + 1e-12));
            let closed = 1.0 / (2.0 * k * (1.0 - beta));
            prop_assert!((bs - closed).abs() <= 1e-6 * closed);
        }

        #[test]
        fn ode_within_bound(beta in 0.3f64..0.95, k in 0.2f64..5.0, y0 in 0.1f64..2.0) {
            let c = LambdaCurve::power_law(k, beta).unwrap();
            let dt = 1e-2;
            let b = extinction_bound(&c, y0).unwrap().value().unwrap();
            let tr = ode_descent(&c, y0, dt, 2.0 * b + 1.0).unwrap();
            prop_assert!(tr.vanish_time.unwrap() <= b + dt);
        }
    }
}

//! N-functions, complementary pairs and Luxemburg norms on grid functions.

use std::fmt;
use std::sync::Arc;

use crate::criteria::engine::simpson;
use crate::error::{parameter, precondition, Error, Result};

/// Exponents beyond this are treated as overflow (value `+inf`).
const EXP_CAP: f64 = 700.0;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum NFunction {
    /// `exp(t^{p/(p-1)}) - 1`, `p > 1`.
    ExpPoly(f64),
    /// `e^t - 1 - t`.
    ExpRemainder,
    /// `(s+1) ln(s+1) - s`.
    ComplementaryExpRemainder,
    /// `A(√t)`; not necessarily an N-function.
    SquareComposed(Box<NFunction>),
    /// `∫_0^s (A')^{-1}(σ) dσ`, evaluated by quadrature.
    NumericComplementary(Box<NFunction>),
    Custom {
        value: RealFn,
        derivative: RealFn,
    },
}

impl fmt::Debug for NFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NFunction::ExpPoly(p) => write!(f, "ExpPoly({p})"),
            NFunction::ExpRemainder => write!(f, "ExpRemainder"),
            NFunction::ComplementaryExpRemainder => write!(f, "ComplementaryExpRemainder"),
            NFunction::SquareComposed(a) => write!(f, "SquareComposed({a:?})"),
            NFunction::NumericComplementary(a) => write!(f, "NumericComplementary({a:?})"),
            NFunction::Custom { .. } => write!(f, "Custom"),
        }
    }
}

fn capped_exp(x: f64) -> f64 {
    if x > EXP_CAP {
        f64::INFINITY
    } else {
        x.exp()
    }
}

impl NFunction {
    pub fn exp_poly(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return parameter(format!("ExpPoly needs p > 1, got {p}"));
        }
        Ok(NFunction::ExpPoly(p))
    }

    pub fn custom(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        NFunction::Custom {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    pub fn square_composed(self) -> Self {
        NFunction::SquareComposed(Box::new(self))
    }

    /// `false` for the extended kinds that need not be convex.
    pub fn is_n_function(&self) -> bool {
        !matches!(self, NFunction::SquareComposed(_))
    }

    /// `F(t)` for `t >= 0`; `+inf` once the exponential overflows.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            NFunction::ExpPoly(p) => {
                let r = p / (p - 1.0);
                let x = t.powf(r);
                if x > EXP_CAP {
                    f64::INFINITY
                } else {
                    x.exp_m1()
                }
            }
            NFunction::ExpRemainder => {
                if t > EXP_CAP {
                    f64::INFINITY
                } else if t < 1e-3 {
                    t * t * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0)))
                } else {
                    t.exp_m1() - t
                }
            }
            NFunction::ComplementaryExpRemainder => {
                if t < 1e-3 {
                    t * t * (0.5 - t * (1.0 / 6.0 - t * (1.0 / 12.0 - t / 20.0)))
                } else {
                    (t + 1.0) * t.ln_1p() - t
                }
            }
            NFunction::SquareComposed(a) => a.eval(t.sqrt()),
            NFunction::NumericComplementary(a) => {
                let inv = |s: f64| -> Result<f64> { inverse_derivative(a, s) };
                simpson(&inv, 0.0, t, 1e-13).unwrap_or(f64::NAN)
            }
            NFunction::Custom { value, .. } => value(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            NFunction::ExpPoly(p) => {
                let r = p / (p - 1.0);
                if t == 0.0 {
                    return 0.0;
                }
                capped_exp(t.powf(r)) * r * t.powf(r - 1.0)
            }
            NFunction::ExpRemainder => {
                if t > EXP_CAP {
                    f64::INFINITY
                } else {
                    t.exp_m1()
                }
            }
            NFunction::ComplementaryExpRemainder => t.ln_1p(),
            NFunction::SquareComposed(a) => {
                if t == 0.0 {
                    // right derivative of A(√t) at 0
                    let h: f64 = 1e-12;
                    return a.eval(h.sqrt()) / h;
                }
                let r = t.sqrt();
                a.derivative(r) / (2.0 * r)
            }
            NFunction::NumericComplementary(a) => inverse_derivative(a, t).unwrap_or(f64::NAN),
            NFunction::Custom { derivative, .. } => derivative(t),
        }
    }
}

/// `t` with `A'(t) = s`.
fn inverse_derivative(a: &NFunction, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Ok(0.0);
    }
    solve_increasing(|t| a.derivative(t), |t| second_difference(a, t), s)
}

fn second_difference(a: &NFunction, t: f64) -> f64 {
    let h = 1e-6 * t.max(1e-6);
    (a.derivative(t + h) - a.derivative((t - h).max(0.0))) / (t + h - (t - h).max(0.0))
}

/// Root of `f(t) = y` for increasing `f` with `f(0) <= y`: geometric
/// bracketing, then Newton steps kept inside the bracket.
fn solve_increasing(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, y: f64) -> Result<f64> {
    let probe = |t: f64| -> Result<f64> {
        let v = f(t);
        if v.is_nan() {
            Err(Error::Numerical(format!(
                "function is not finite at t = {t}"
            )))
        } else {
            Ok(v)
        }
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while probe(hi)? < y {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numerical(format!("no bracket for the value {y}")));
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..300 {
        let v = probe(t)? - y;
        if v == 0.0 {
            return Ok(t);
        }
        if v > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let d = df(t);
        let step = v / d;
        if hi - lo <= 1e-15 * hi || step.abs() <= 1e-16 * t {
            break;
        }
        let newton = t - step;
        t = if d.is_finite() && d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(t)
}

/// `t >= 0` with `F(t) = y` (relative accuracy well below `1e-10`); 0 for `y <= 0`.
pub fn nfn_inverse(f: &NFunction, y: f64) -> Result<f64> {
    if y.is_nan() {
        return parameter("cannot invert at NaN");
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    match f {
        NFunction::ComplementaryExpRemainder | NFunction::ExpRemainder | NFunction::ExpPoly(_) => {
            solve_increasing(|t| f.eval(t), |t| f.derivative(t), y)
        }
        NFunction::SquareComposed(a) => Ok(nfn_inverse(a, y)?.powi(2)),
        _ => solve_increasing(|t| f.eval(t), |t| f.derivative(t), y),
    }
}

/// Complementary function `Â(s) = ∫_0^s (A')^{-1}`; the closed form for
/// `e^t - 1 - t` and its dual.
pub fn complementary(f: &NFunction) -> Result<NFunction> {
    match f {
        NFunction::ExpRemainder => Ok(NFunction::ComplementaryExpRemainder),
        NFunction::ComplementaryExpRemainder => Ok(NFunction::ExpRemainder),
        _ => complementary_numeric(f),
    }
}

/// Quadrature-based complementary function, even when a closed form exists.
pub fn complementary_numeric(f: &NFunction) -> Result<NFunction> {
    let mut prev = f.derivative(0.0);
    for i in 1..=400 {
        let t = 10f64.powf(-6.0 + 8.0 * i as f64 / 400.0);
        let d = f.derivative(t);
        if d.is_nan() || d < prev {
            return precondition(format!("the derivative is not increasing near t = {t}"));
        }
        if d.is_infinite() {
            break;
        }
        prev = d;
    }
    Ok(NFunction::NumericComplementary(Box::new(f.clone())))
}

/// `∫_E F(|u|/k)` over the masked cells.
fn modular(u: &[f64], weights: &[f64], mask: &[bool], f: &NFunction, k: f64) -> f64 {
    let mut acc = 0.0;
    for ((x, w), m) in u.iter().zip(weights).zip(mask) {
        if *m && *x != 0.0 {
            acc += w * f.eval(x.abs() / k);
            if acc.is_infinite() {
                return acc;
            }
        }
    }
    acc
}

fn check_set(u: &[f64], weights: &[f64], mask: &[bool]) -> Result<f64> {
    if u.len() != weights.len() || u.len() != mask.len() {
        return parameter("function, weights and mask must have equal length");
    }
    if u.iter().any(|v| !v.is_finite()) || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return parameter("function values and weights must be finite (weights >= 0)");
    }
    let meas: f64 = weights
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(w, _)| w)
        .sum();
    if !(meas > 0.0) {
        return precondition("the set E must have positive measure");
    }
    Ok(meas)
}

/// `inf{k > 0 : ∫_E F(|u|/k) <= 1}` with cell weights as the quadrature.
pub fn luxemburg_norm(u: &[f64], weights: &[f64], mask: &[bool], f: &NFunction) -> Result<f64> {
    let meas = check_set(u, weights, mask)?;
    let sup = u
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(x, _)| x.abs())
        .fold(0.0, f64::max);
    if sup == 0.0 {
        return Ok(0.0);
    }
    let level = nfn_inverse(f, 1.0 / meas)?;
    let mut hi = sup / level;
    if modular(u, weights, mask, f, hi) > 1.0 {
        // quadrature rounding; widen slightly
        hi *= 1.0 + 1e-12;
        while modular(u, weights, mask, f, hi) > 1.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Numerical(
                    "no feasible k for the Luxemburg norm".into(),
                ));
            }
        }
    }
    let mut lo = hi / 2.0;
    while modular(u, weights, mask, f, lo) <= 1.0 {
        hi = lo;
        lo /= 2.0;
        if lo < f64::MIN_POSITIVE {
            return Ok(hi);
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if modular(u, weights, mask, f, mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderReport {
    /// `|∫_E u v|`.
    pub integral: f64,
    pub norm_a: f64,
    pub norm_complementary: f64,
    /// `|∫uv| / (2 ‖u‖_A ‖v‖_Â)`.
    pub ratio: f64,
}

/// Hölder ratio for the pair `(A, Â)`.
pub fn holder_verify(
    u: &[f64],
    v: &[f64],
    weights: &[f64],
    mask: &[bool],
    a: &NFunction,
) -> Result<HolderReport> {
    check_set(u, weights, mask)?;
    if v.len() != u.len() {
        return parameter("u and v must have equal length");
    }
    let conj = complementary(a)?;
    let integral: f64 = u
        .iter()
        .zip(v)
        .zip(weights)
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(((x, y), w), _)| x * y * w)
        .sum::<f64>()
        .abs();
    let norm_a = luxemburg_norm(u, weights, mask, a)?;
    let norm_complementary = luxemburg_norm(v, weights, mask, &conj)?;
    let denom = 2.0 * norm_a * norm_complementary;
    let ratio = if denom == 0.0 {
        if integral == 0.0 {
            0.0
        } else {
            return Err(Error::Numerical(
                "zero norms with a nonzero integral".into(),
            ));
        }
    } else {
        integral / denom
    };
    Ok(HolderReport {
        integral,
        norm_a,
        norm_complementary,
        ratio,
    })
}

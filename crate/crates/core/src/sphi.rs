//! The `S_φ` classes: potentials whose φ-weighted distribution function
//! has a convergent Dini integral at 0.

use crate::criteria::{classify_depth, IntegralVerdict};
use crate::error::{parameter, precondition, Error, Result};
use crate::potential::PotentialSpec;

const INV_E: f64 = 0.36787944117144233;

#[derive(Debug, Clone, PartialEq)]
pub enum PhiFn {
    /// `t^beta` on `[0, ∞)`.
    Power(f64),
    /// `t(-ln t)` on `[0, 1/e]`.
    Entropy,
    /// Monotone table with log-spaced abscissae, linear toward `(0, 0)`
    /// below the first row; defined up to the last abscissa.
    Custom { xs: Vec<f64>, ys: Vec<f64> },
}

impl PhiFn {
    pub fn power(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return parameter(format!("phi exponent beta = {beta} must be positive"));
        }
        Ok(PhiFn::Power(beta))
    }

    pub fn custom(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 3 || xs.len() != ys.len() {
            return parameter("a custom phi table needs at least three (t, phi) rows");
        }
        if xs[0] <= 0.0 || xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return parameter("custom phi abscissae must be positive and all entries finite");
        }
        let step = (xs[1] / xs[0]).ln();
        if !(step > 0.0)
            || xs
                .windows(2)
                .any(|w| ((w[1] / w[0]).ln() - step).abs() > 1e-6 * step)
        {
            return precondition("custom phi abscissae must be log-spaced and increasing");
        }
        if ys[0] <= 0.0 || ys.windows(2).any(|w| w[1] < w[0]) {
            return precondition("custom phi values must be positive and nondecreasing");
        }
        Ok(PhiFn::Custom { xs, ys })
    }

    /// Upper end `γ` of the validity interval.
    pub fn gamma(&self) -> f64 {
        match self {
            PhiFn::Power(_) => f64::INFINITY,
            PhiFn::Entropy => INV_E,
            PhiFn::Custom { xs, .. } => *xs.last().unwrap(),
        }
    }

    /// `ln φ(t)`; `-inf` at `t = 0`.
    pub fn ln_eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || t > self.gamma() * (1.0 + 1e-14) {
            return Err(Error::Evaluation {
                s: t,
                depth: -t.ln(),
                value: f64::NAN,
            });
        }
        if t == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(match self {
            PhiFn::Power(beta) => beta * t.ln(),
            PhiFn::Entropy => t.ln() + (-t.ln()).max(0.0).ln(),
            PhiFn::Custom { xs, ys } => {
                if t <= xs[0] {
                    (ys[0] * t / xs[0]).ln()
                } else {
                    let k = xs.partition_point(|&x| x <= t).min(xs.len() - 1);
                    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
                    (y0 + (y1 - y0) * (t - x0) / (x1 - x0)).ln()
                }
            }
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.ln_eval(t)?.exp())
    }

    /// Parses `phi:power:beta=0.5` or `phi:entropy`.
    pub fn parse(text: &str) -> Result<Self> {
        let body = text.trim().strip_prefix("phi:").unwrap_or(text.trim());
        if body == "entropy" {
            return Ok(PhiFn::Entropy);
        }
        if let Some(rest) = body.strip_prefix("power:") {
            if let Some(v) = rest.trim().strip_prefix("beta=") {
                let beta = v
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad beta `{v}`")))?;
                return Self::power(beta);
            }
        }
        Err(Error::Parse(format!("unknown phi `{text}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    /// `φ(0) = 0`.
    pub zero_at_origin: bool,
    pub nondecreasing: bool,
    pub positive: bool,
    /// Sampled quasi-additivity constant over `(0, γ/2]`.
    pub quasi_additive_constant: f64,
    /// The sampled constant is finite (the only thing sampling can refute).
    pub quasi_additive_sampled: bool,
    /// Midpoint convexity on the grid.
    pub convex: bool,
    /// `φ(2t)/φ(t)` averaged over the smallest sampled `t`.
    pub doubling_limsup: f64,
    /// Convexity and a bounded doubling ratio.
    pub convex_doubling: bool,
}

impl AxiomReport {
    /// Axioms 1 to 4 (the last one sampled).
    pub fn axioms_hold(&self) -> bool {
        self.zero_at_origin && self.nondecreasing && self.positive && self.quasi_additive_sampled
    }
}

/// Log-spaced grid `top * 10^{-decades} .. top`.
fn log_grid(top: f64, samples: usize, decades: f64) -> Vec<f64> {
    (0..samples)
        .map(|i| top * 10f64.powf(-decades * (1.0 - i as f64 / (samples - 1) as f64)))
        .collect()
}

pub fn phi_axioms_check(phi: &PhiFn, samples: usize) -> Result<AxiomReport> {
    if samples < 100 {
        return parameter(format!("at least 100 samples are needed, got {samples}"));
    }
    let top = phi.gamma().min(1.0);
    let grid = log_grid(top, samples, 300.0);
    let ln: Vec<f64> = grid
        .iter()
        .map(|&t| phi.ln_eval(t))
        .collect::<Result<_>>()?;

    let zero_at_origin = phi.eval(0.0)? == 0.0;
    let positive = ln.iter().all(|v| *v > f64::NEG_INFINITY);
    let nondecreasing = ln.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs());

    // pairs in (0, γ'] with γ' = γ/2, so that α + β stays admissible
    let half: Vec<(f64, f64)> = grid
        .iter()
        .zip(&ln)
        .filter(|(t, _)| **t <= top / 2.0)
        .map(|(t, l)| (*t, *l))
        .collect();
    let mut c: f64 = 0.0;
    for (i, &(a, la)) in half.iter().enumerate() {
        for &(b, lb) in &half[i..] {
            let lab = phi.ln_eval(a + b)?;
            let hi = la.max(lb);
            let lo = la.min(lb);
            let ratio = (lab - hi).exp() / (1.0 + (lo - hi).exp());
            c = c.max(ratio);
        }
    }

    let mut convex = true;
    for (i, &(a, la)) in half.iter().enumerate() {
        for &(b, lb) in half[i + 1..].iter().step_by(7) {
            let mid = phi.eval(0.5 * (a + b))?;
            let chord = 0.5 * (la.exp() + lb.exp());
            if mid > chord * (1.0 + 1e-12) {
                convex = false;
            }
        }
    }

    let doubling: Vec<f64> = half
        .iter()
        .take(5)
        .map(|&(t, l)| phi.ln_eval(2.0 * t).map(|l2| (l2 - l).exp()))
        .collect::<Result<_>>()?;
    let doubling_limsup = doubling.iter().sum::<f64>() / doubling.len() as f64;

    Ok(AxiomReport {
        zero_at_origin,
        nondecreasing,
        positive,
        quasi_additive_constant: c,
        quasi_additive_sampled: c.is_finite(),
        convex,
        doubling_limsup,
        convex_doubling: convex && doubling_limsup.is_finite(),
    })
}

/// Classifies `∫_0^c φ(M_a(t))/t dt`.
///
/// `c` starts at `min(1/e, sup a)` and is lowered until `M_a(c) <= γ`.
pub fn sphi_membership(spec: &PotentialSpec, phi: &PhiFn) -> Result<IntegralVerdict> {
    let dist = spec.distribution();
    let gamma = phi.gamma();
    let sup = spec.sup();
    let mut t0 = if sup > 0.0 { -sup.min(INV_E).ln() } else { 1.0 };
    if dist.at_depth(t0) > gamma {
        let mut hi = t0.max(1.0);
        loop {
            hi *= 2.0;
            if dist.at_depth(hi) <= gamma {
                break;
            }
            if hi > 1e300 {
                return precondition(format!(
                    "meas{{a <= s}} exceeds the phi domain [0, {gamma}] for every admissible s"
                ));
            }
        }
        let mut lo = t0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dist.at_depth(mid) <= gamma {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        t0 = hi;
    }
    let phi = phi.clone();
    classify_depth(
        move |t| phi.eval(dist.at_depth(t).min(gamma)).unwrap_or(f64::NAN),
        t0,
    )
}

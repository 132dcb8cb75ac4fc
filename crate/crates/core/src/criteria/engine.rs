//! Convergence classification of improper integrals at `s = 0`.
//!
//! The integral `∫_0^c g(s) ds` becomes `∫_{-ln c}^∞ g(e^{-t}) e^{-t} dt`
//! and is accumulated block by block. A run of shrinking block sums with a
//! small geometric tail classifies as finite; a run of nondecreasing sums as
//! divergent. Neither is a proof; anything else is left inconclusive.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Finite(f64),
    Divergent,
    Inconclusive,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Finite(_) => "Finite",
            Status::Divergent => "Divergent",
            Status::Inconclusive => "Inconclusive",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Status::Finite(v) => Some(*v),
            _ => None,
        }
    }

    /// Same variant, ignoring the value.
    pub fn same_kind(&self, other: &Status) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub lo: f64,
    pub hi: f64,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Integral over the stretch before the first block.
    pub head: f64,
    pub blocks: Vec<Block>,
    /// `blocks[k].sum / blocks[k-1].sum`; `0/0` is recorded as 0.
    pub ratios: Vec<f64>,
    /// Geometric tail added to a finite value.
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralVerdict {
    pub status: Status,
    pub diagnostics: Diagnostics,
}

impl IntegralVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self.status, Status::Finite(_))
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self.status, Status::Divergent)
    }

    pub fn blocks_used(&self) -> usize {
        self.diagnostics.blocks.len()
    }
}

/// How successive blocks are laid out in the integration variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockLayout {
    /// `[2^k t0, 2^{k+1} t0]`.
    Dyadic,
    /// `[t0 + k w, t0 + (k+1) w]`.
    Uniform(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineOptions {
    pub layout: BlockLayout,
    /// Number of trailing ratios inspected by both rules.
    pub window: usize,
    /// Largest block ratio accepted as decay.
    pub finite_ratio: f64,
    /// Tail estimate must stay below this fraction of the accumulated value.
    pub tail_rel: f64,
    /// Relative slack allowed in the nondecreasing test.
    pub divergence_slack: f64,
    pub max_blocks: usize,
    /// Blocks reaching past this point are not integrated.
    pub max_depth: f64,
    /// Relative Simpson tolerance per block.
    pub tol: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            layout: BlockLayout::Dyadic,
            window: 8,
            finite_ratio: 0.97,
            tail_rel: 1e-8,
            divergence_slack: 1e-9,
            max_blocks: 1020,
            max_depth: f64::INFINITY,
            tol: 1e-10,
        }
    }
}

impl EngineOptions {
    pub fn uniform(width: f64) -> Self {
        Self {
            layout: BlockLayout::Uniform(width),
            max_blocks: 4000,
            ..Self::default()
        }
    }
}

/// `∫_0^c g(s) ds` for an integrand given in `s`.
///
/// `s = e^{-t}` underflows past `t ≈ 745`, so blocks stop there; integrands
/// whose behavior is only visible deeper must use [`classify_depth`].
pub fn classify_improper_integral(g: impl Fn(f64) -> f64, c: f64) -> Result<IntegralVerdict> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Parameter(format!(
            "upper limit c = {c} must be positive"
        )));
    }
    let opts = EngineOptions {
        max_depth: 745.0,
        ..EngineOptions::default()
    };
    classify_depth_with(
        |t| {
            let s = (-t).exp();
            g(s) * s
        },
        -c.ln(),
        &opts,
    )
}

/// `∫_{t_lo}^∞ f(t) dt` with the default options.
pub fn classify_depth(f: impl Fn(f64) -> f64, t_lo: f64) -> Result<IntegralVerdict> {
    classify_depth_with(f, t_lo, &EngineOptions::default())
}

pub fn classify_depth_with(
    f: impl Fn(f64) -> f64,
    t_lo: f64,
    opts: &EngineOptions,
) -> Result<IntegralVerdict> {
    let eval = |t: f64| -> Result<f64> {
        let v = f(t);
        if v.is_finite() {
            Ok(v.max(0.0))
        } else {
            Err(Error::Evaluation {
                s: (-t).exp(),
                depth: t,
                value: v,
            })
        }
    };

    let mut diag = Diagnostics::default();
    let start = match opts.layout {
        BlockLayout::Dyadic if t_lo < 1.0 => {
            diag.head = simpson(&eval, t_lo, 1.0, opts.tol)?;
            1.0
        }
        _ => t_lo,
    };
    let mut acc = diag.head;

    for k in 0..opts.max_blocks {
        let (lo, hi) = match opts.layout {
            BlockLayout::Dyadic => (start * 2f64.powi(k as i32), start * 2f64.powi(k as i32 + 1)),
            BlockLayout::Uniform(w) => (start + k as f64 * w, start + (k + 1) as f64 * w),
        };
        if !hi.is_finite() || hi > opts.max_depth {
            break;
        }
        let sum = simpson(&eval, lo, hi, opts.tol)?;
        if let Some(prev) = diag.blocks.last() {
            diag.ratios.push(ratio(sum, prev.sum));
        }
        diag.blocks.push(Block { lo, hi, sum });
        acc += sum;

        if diag.blocks.len() <= opts.window {
            continue;
        }
        let w = opts.window;
        let recent = &diag.ratios[diag.ratios.len() - w..];
        let r = recent.iter().cloned().fold(0.0, f64::max);
        if r <= opts.finite_ratio {
            let tail = if r == 0.0 { 0.0 } else { sum * r / (1.0 - r) };
            if tail <= opts.tail_rel * acc {
                diag.tail = tail;
                return Ok(IntegralVerdict {
                    status: Status::Finite(acc + tail),
                    diagnostics: diag,
                });
            }
        }
        let sums = &diag.blocks[diag.blocks.len() - w..];
        let nondecreasing = sums
            .windows(2)
            .all(|p| p[1].sum >= p[0].sum * (1.0 - opts.divergence_slack));
        if nondecreasing && sum > 0.0 {
            return Ok(IntegralVerdict {
                status: Status::Divergent,
                diagnostics: diag,
            });
        }
    }
    Ok(IntegralVerdict {
        status: Status::Inconclusive,
        diagnostics: diag,
    })
}

fn ratio(cur: f64, prev: f64) -> f64 {
    if prev == 0.0 {
        if cur == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        cur / prev
    }
}

/// Adaptive Simpson on `[a, b]`, starting from 16 panels so that narrow
/// features are not missed by the first estimate.
pub(crate) fn simpson(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut nodes = Vec::with_capacity(2 * PANELS + 1);
    for i in 0..=2 * PANELS {
        let x = if i == 2 * PANELS {
            b
        } else {
            a + 0.5 * h * i as f64
        };
        nodes.push((x, f(x)?));
    }
    let mut coarse = 0.0;
    for p in 0..PANELS {
        coarse += h / 6.0 * (nodes[2 * p].1 + 4.0 * nodes[2 * p + 1].1 + nodes[2 * p + 2].1);
    }
    let eps = tol * coarse.abs() / PANELS as f64;
    let budget = std::cell::Cell::new(MAX_EVALS);
    let mut total = 0.0;
    for p in 0..PANELS {
        let (x0, f0) = nodes[2 * p];
        let (xm, fm) = nodes[2 * p + 1];
        let (x1, f1) = nodes[2 * p + 2];
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += adapt(f, &budget, x0, xm, x1, f0, fm, f1, whole, eps, 40)?;
    }
    Ok(total)
}

/// Evaluation budget per block; refinement stops once it is spent.
const MAX_EVALS: usize = 1 << 16;

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> Result<f64>,
    budget: &std::cell::Cell<usize>,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    budget.set(budget.get().saturating_sub(2));
    if depth == 0 || budget.get() == 0 || diff.abs() <= 15.0 * eps {
        return Ok(left + right + diff / 15.0);
    }
    Ok(
        adapt(f, budget, a, lm, m, fa, flm, fm, left, eps / 2.0, depth - 1)?
            + adapt(
                f,
                budget,
                m,
                rm,
                b,
                fm,
                frm,
                fb,
                right,
                eps / 2.0,
                depth - 1,
            )?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_square_log_is_one() {
        let v = classify_depth(|t| t.powi(-2), 1.0).unwrap();
        let got = v.status.value().unwrap();
        assert!((got - 1.0).abs() < 1e-6, "{got}");
        assert!(v.blocks_used() >= 8);
    }

    #[test]
    fn harmonic_log_diverges() {
        let v = classify_depth(|t| 1.0 / t, 1.0).unwrap();
        assert_eq!(v.status, Status::Divergent);
        assert!(v.blocks_used() >= 8);
    }

    #[test]
    fn slow_power_is_ten() {
        let v = classify_depth(|t| t.powf(-1.1), 1.0).unwrap();
        let got = v.status.value().unwrap();
        assert!((got - 10.0).abs() < 1e-5, "{got}");
    }

    #[test]
    fn s_domain_wrapper() {
        let v = classify_improper_integral(|s| 3.0 * s * s, 1.0).unwrap();
        assert!((v.status.value().unwrap() - 1.0).abs() < 1e-8);
        // too slow to settle before s underflows
        let v =
            classify_improper_integral(|s| 1.0 / (s * (-s.ln()).powi(3)), (-1.0f64).exp()).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
    }

    #[test]
    fn zero_integrand_is_finite_zero() {
        let v = classify_depth(|_| 0.0, 1.0).unwrap();
        assert_eq!(v.status, Status::Finite(0.0));
        assert!(v.blocks_used() >= 8);
    }

    #[test]
    fn nan_is_an_evaluation_error() {
        let e = classify_depth(|t| if t > 3.0 { f64::NAN } else { 1.0 }, 1.0).unwrap_err();
        assert!(matches!(e, Error::Evaluation { .. }));
    }

    #[test]
    fn borderline_decay_is_not_declared_finite() {
        // ratio 2^{-0.01} never clears the decay threshold
        let v = classify_depth(|t| t.powf(-1.01), 1.0).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
    }

    #[test]
    fn uniform_blocks_exponential() {
        let v = classify_depth_with(|u| (-u).exp(), 0.0, &EngineOptions::uniform(1.0)).unwrap();
        assert!((v.status.value().unwrap() - 1.0).abs() < 1e-8);
    }
}

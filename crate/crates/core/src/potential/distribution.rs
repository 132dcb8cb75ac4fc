use std::fmt;
use std::sync::Arc;

use super::PotentialSpec;

#[derive(Clone)]
enum Repr {
    /// `t -> M(e^{-t})`.
    ClosedForm(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Sorted `ln a` levels with the cumulative cell volume up to each level.
    Table {
        levels: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

/// Distribution function `M(s) = meas{a <= s}`.
///
/// Evaluation is by log-depth `t = -ln s`; [`DistFn::eval`] is a thin
/// wrapper for callers working with `s` directly.
#[derive(Clone)]
pub struct DistFn {
    repr: Repr,
    total: f64,
}

impl fmt::Debug for DistFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::ClosedForm(_) => f
                .debug_struct("DistFn")
                .field("closed_form", &true)
                .field("total", &self.total)
                .finish(),
            Repr::Table { levels, .. } => f
                .debug_struct("DistFn")
                .field("table_len", &levels.len())
                .field("total", &self.total)
                .finish(),
        }
    }
}

impl DistFn {
    /// Closed form given in log-depth.
    pub fn from_depth_fn(total: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            repr: Repr::ClosedForm(Arc::new(f)),
            total,
        }
    }

    /// Closed form given in `s`.
    pub fn from_s_fn(total: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_depth_fn(total, move |t| f((-t).exp()))
    }

    /// Grid-counting table: each sampling cell contributes its volume once
    /// `s` reaches the cell-center value.
    pub fn from_cells(spec: &PotentialSpec) -> Self {
        let cells = spec.domain().cells();
        let mut pairs: Vec<(f64, f64)> = spec
            .ln_on_cells()
            .into_iter()
            .zip(cells.iter().map(|c| c.volume))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_levels(spec.domain().measure(), pairs)
    }

    /// Table from `(ln level, volume)` pairs in any order.
    pub fn from_levels(total: f64, mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let mut levels = Vec::with_capacity(pairs.len());
        let mut cumulative = Vec::with_capacity(pairs.len());
        for (l, v) in pairs {
            acc += v;
            levels.push(l);
            cumulative.push(acc);
        }
        Self {
            repr: Repr::Table { levels, cumulative },
            total,
        }
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Repr::ClosedForm(_))
    }

    /// `M(e^{-t})`, clamped to `[0, |Omega|]`.
    pub fn at_depth(&self, t: f64) -> f64 {
        let v = match &self.repr {
            Repr::ClosedForm(f) => f(t),
            Repr::Table { levels, cumulative } => {
                let k = levels.partition_point(|&l| l <= -t);
                if k == 0 {
                    0.0
                } else {
                    cumulative[k - 1]
                }
            }
        };
        v.clamp(0.0, self.total)
    }

    /// `M(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        if s.is_nan() || s < 0.0 {
            return 0.0;
        }
        self.at_depth(-s.ln())
    }
}

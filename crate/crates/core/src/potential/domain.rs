use crate::error::{parameter, Result};

/// Smallest sampling resolution accepted for a domain.
pub const MIN_RESOLUTION: usize = 16;

/// Volume of the unit ball in `R^dim`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        d => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Area of the unit sphere `S^{dim-1}`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `(lo, hi)` on the real line.
    Interval { lo: f64, hi: f64 },
    /// Centered ball of the given radius.
    Ball { radius: f64 },
}

/// One cell of the sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// Cell-center coordinate (interval) or shell-center radius (ball).
    pub center: f64,
    pub volume: f64,
}

/// A bounded domain together with the resolution used for sampled evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    dim: usize,
    shape: Shape,
    resolution: usize,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return parameter(format!("interval ({lo}, {hi}) is empty or unbounded"));
        }
        Self::checked(Self {
            dim: 1,
            shape: Shape::Interval { lo, hi },
            resolution,
        })
    }

    /// `(0, length)`.
    pub fn unit_interval(length: f64, resolution: usize) -> Result<Self> {
        Self::interval(0.0, length, resolution)
    }

    /// `(-half_width, half_width)`.
    pub fn symmetric_interval(half_width: f64, resolution: usize) -> Result<Self> {
        Self::interval(-half_width, half_width, resolution)
    }

    pub fn ball(dim: usize, radius: f64, resolution: usize) -> Result<Self> {
        if dim == 0 {
            return parameter("dimension must be at least 1");
        }
        if !(radius.is_finite() && radius > 0.0) {
            return parameter(format!("ball radius must be positive, got {radius}"));
        }
        Self::checked(Self {
            dim,
            shape: Shape::Ball { radius },
            resolution,
        })
    }

    fn checked(self) -> Result<Self> {
        if self.resolution < MIN_RESOLUTION {
            return parameter(format!(
                "resolution {} is below the minimum {MIN_RESOLUTION}",
                self.resolution
            ));
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Self {
            resolution,
            ..*self
        }
        .checked()
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.shape, Shape::Interval { .. })
    }

    /// `|Omega|`.
    pub fn measure(&self) -> f64 {
        match self.shape {
            Shape::Interval { lo, hi } => hi - lo,
            Shape::Ball { radius } => unit_ball_volume(self.dim) * radius.powi(self.dim as i32),
        }
    }

    /// Whether the origin is an interior point.
    pub fn contains_origin(&self) -> bool {
        match self.shape {
            Shape::Interval { lo, hi } => lo < 0.0 && hi > 0.0,
            Shape::Ball { .. } => true,
        }
    }

    /// Distance from the origin to the boundary (0 when the origin is not interior).
    pub fn origin_clearance(&self) -> f64 {
        match self.shape {
            Shape::Interval { lo, hi } if self.contains_origin() => (-lo).min(hi),
            Shape::Interval { .. } => 0.0,
            Shape::Ball { radius } => radius,
        }
    }

    /// `sup |x|` over the domain.
    pub fn max_radius(&self) -> f64 {
        match self.shape {
            Shape::Interval { lo, hi } => lo.abs().max(hi.abs()),
            Shape::Ball { radius } => radius,
        }
    }

    /// Smallest `|x|` over the closure of the domain.
    pub fn min_radius(&self) -> f64 {
        match self.shape {
            Shape::Interval { lo, hi } if lo <= 0.0 && hi >= 0.0 => 0.0,
            Shape::Interval { lo, hi } => lo.abs().min(hi.abs()),
            Shape::Ball { .. } => 0.0,
        }
    }

    /// Whether `x` lies in the closure of the domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self.shape {
            Shape::Interval { lo, hi } => x[0] >= lo && x[0] <= hi,
            Shape::Ball { radius } => norm(x) <= radius * (1.0 + 1e-14),
        }
    }

    /// `meas{x in Omega : |x| <= rho}`.
    pub fn radial_measure(&self, rho: f64) -> f64 {
        if !(rho > 0.0) {
            return 0.0;
        }
        match self.shape {
            Shape::Interval { lo, hi } => {
                let a = lo.max(-rho);
                let b = hi.min(rho);
                (b - a).max(0.0)
            }
            Shape::Ball { radius } => {
                unit_ball_volume(self.dim) * rho.min(radius).powi(self.dim as i32)
            }
        }
    }

    /// Derivative of [`Domain::radial_measure`] in `rho`.
    pub fn radial_density(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        match self.shape {
            Shape::Interval { lo, hi } => {
                let mut w = 0.0;
                if r < hi && r > lo {
                    w += 1.0;
                }
                if -r > lo && -r < hi {
                    w += 1.0;
                }
                w
            }
            Shape::Ball { radius } if r <= radius => {
                unit_sphere_area(self.dim) * r.powi(self.dim as i32 - 1)
            }
            Shape::Ball { .. } => 0.0,
        }
    }

    /// Uniform cell-centered sampling grid: `resolution` cells on an interval,
    /// `resolution` concentric shells on a ball.
    pub fn cells(&self) -> Vec<Cell> {
        let n = self.resolution;
        match self.shape {
            Shape::Interval { lo, hi } => {
                let h = (hi - lo) / n as f64;
                (0..n)
                    .map(|i| Cell {
                        center: lo + (i as f64 + 0.5) * h,
                        volume: h,
                    })
                    .collect()
            }
            Shape::Ball { radius } => {
                let h = radius / n as f64;
                let c = unit_ball_volume(self.dim);
                let d = self.dim as i32;
                (0..n)
                    .map(|i| {
                        let r0 = i as f64 * h;
                        let r1 = r0 + h;
                        Cell {
                            center: r0 + 0.5 * h,
                            volume: c * (r1.powi(d) - r0.powi(d)),
                        }
                    })
                    .collect()
            }
        }
    }

    /// Index of the sampling cell containing `x` (clamped to the grid).
    pub fn cell_index(&self, x: &[f64]) -> usize {
        let n = self.resolution;
        let pos = match self.shape {
            Shape::Interval { lo, hi } => (x[0] - lo) / (hi - lo),
            Shape::Ball { radius } => norm(x) / radius,
        };
        ((pos * n as f64).floor().max(0.0) as usize).min(n - 1)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

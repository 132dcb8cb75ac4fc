//! Clamped finite-difference grids and the discrete energy functional.

use crate::banded::SymBanded;
use crate::error::{parameter, Error, Result};
use crate::potential::{unit_sphere_area, Domain, PotentialSpec, Shape};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    /// Nodes `lo + (i+1) Δx`, `Δx = (hi - lo)/(n+1)`; both walls clamped.
    Interval { lo: f64, hi: f64 },
    /// Radial nodes `(i + 1/2) Δr`, `Δr = R/(n + 1/2)`; symmetric at the
    /// origin, zero at `r = R`.
    Radial { dim: usize, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    kind: GridKind,
    n: usize,
    m: usize,
}

impl Grid {
    pub fn interval(lo: f64, hi: f64, n: usize, m: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return parameter(format!("interval ({lo}, {hi}) is empty"));
        }
        if m == 0 {
            return parameter("clamp order m must be positive");
        }
        if n < 2 * m + 1 {
            return parameter(format!(
                "need at least {} interior nodes for m = {m}, got {n}",
                2 * m + 1
            ));
        }
        Ok(Self {
            kind: GridKind::Interval { lo, hi },
            n,
            m,
        })
    }

    pub fn radial(dim: usize, radius: f64, n: usize) -> Result<Self> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return parameter(format!("bad radial grid: N = {dim}, R = {radius}"));
        }
        if n < 3 {
            return parameter(format!("need at least 3 radial nodes, got {n}"));
        }
        Ok(Self {
            kind: GridKind::Radial { dim, radius },
            n,
            m: 1,
        })
    }

    /// Interval grid for an interval domain, radial grid (`m = 1` only) for a ball.
    pub fn for_domain(domain: &Domain, m: usize, n: usize) -> Result<Self> {
        match domain.shape() {
            Shape::Interval { lo, hi } => Self::interval(lo, hi, n, m),
            Shape::Ball { radius } => {
                if m != 1 {
                    return parameter(format!(
                        "the radial reduction is only available for m = 1, got m = {m}"
                    ));
                }
                Self::radial(domain.dim(), radius, n)
            }
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            GridKind::Interval { .. } => 1,
            GridKind::Radial { dim, .. } => dim,
        }
    }

    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Interval { lo, hi } => (hi - lo) / (self.n + 1) as f64,
            GridKind::Radial { radius, .. } => radius / (self.n as f64 + 0.5),
        }
    }

    /// Node coordinates (radii on a radial grid).
    pub fn nodes(&self) -> Vec<f64> {
        let d = self.spacing();
        match self.kind {
            GridKind::Interval { lo, .. } => (0..self.n).map(|i| lo + (i + 1) as f64 * d).collect(),
            GridKind::Radial { .. } => (0..self.n).map(|i| (i as f64 + 0.5) * d).collect(),
        }
    }

    /// Point in `R^N` for node `x` (radius along the first axis).
    pub fn point(&self, x: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        p[0] = x;
        p
    }

    /// Quadrature weights for `∫ v`.
    pub fn weights(&self) -> Vec<f64> {
        let d = self.spacing();
        match self.kind {
            GridKind::Interval { .. } => vec![d; self.n],
            GridKind::Radial { dim, .. } => {
                let area = unit_sphere_area(dim);
                self.nodes()
                    .iter()
                    .map(|r| area * r.powi(dim as i32 - 1) * d)
                    .collect()
            }
        }
    }

    /// `K` with `v^T K v = ∫ |D^m v|^2` under zero ghost extension.
    pub fn stiffness(&self) -> SymBanded {
        let d = self.spacing();
        match self.kind {
            GridKind::Interval { .. } => {
                let m = self.m;
                let scale = d.powi(-(2 * m as i32 - 1));
                let stencil: Vec<f64> = (0..=m)
                    .map(|j| {
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        sign * binomial(2 * m, m + j) * scale
                    })
                    .collect();
                SymBanded::toeplitz(self.n, &stencil)
            }
            GridKind::Radial { dim, .. } => {
                let area = unit_sphere_area(dim);
                let mut k = SymBanded::zeros(self.n, 1);
                for i in 0..self.n {
                    let face = (i + 1) as f64 * d;
                    let c = area * face.powi(dim as i32 - 1) / d;
                    k.set(i, i, k.get(i, i) + c);
                    if i + 1 < self.n {
                        k.set(i + 1, i + 1, k.get(i + 1, i + 1) + c);
                        k.set(i, i + 1, k.get(i, i + 1) - c);
                    }
                }
                k
            }
        }
    }

    /// `a` at the nodes; the potential must be defined on this grid's domain.
    pub fn sample_potential(&self, spec: &PotentialSpec) -> Result<Vec<f64>> {
        self.nodes()
            .iter()
            .map(|&x| spec.eval(&self.point(x)))
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Values at the interior nodes of a clamped grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return parameter(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return parameter("grid function values must be finite");
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `‖v‖₂²`.
    pub fn mass(&self) -> f64 {
        weighted_mass(&self.grid.weights(), &self.values)
    }

    /// `‖v‖_p^p`.
    pub fn lp_power(&self, p: f64) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum()
    }
}

pub(crate) fn weighted_mass(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(w, v)| w * v * v).sum()
}

/// `F(v) = ∫ |D^m v|^2 + ∫ a |v|^{1+q}` on a fixed grid.
#[derive(Debug, Clone)]
pub struct EnergyFunctional {
    grid: Grid,
    stiffness: SymBanded,
    weights: Vec<f64>,
    /// `w_i a(x_i)`.
    absorb: Vec<f64>,
    q: f64,
}

impl EnergyFunctional {
    pub fn new(grid: Grid, spec: &PotentialSpec, q: f64) -> Result<Self> {
        let a = grid.sample_potential(spec)?;
        Self::with_potential_values(grid, &a, q)
    }

    pub fn with_potential_values(grid: Grid, a: &[f64], q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return parameter(format!("q = {q} must lie in (0, 1)"));
        }
        if a.len() != grid.len() || a.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return parameter("potential values must be finite, nonnegative and match the grid");
        }
        let weights = grid.weights();
        let absorb = weights.iter().zip(a).map(|(w, a)| w * a).collect();
        Ok(Self {
            grid,
            stiffness: grid.stiffness(),
            weights,
            absorb,
            q,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn stiffness(&self) -> &SymBanded {
        &self.stiffness
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self, v: &[f64]) -> f64 {
        weighted_mass(&self.weights, v)
    }

    pub fn gradient_term(&self, v: &[f64]) -> f64 {
        self.stiffness.quadratic_form(v)
    }

    pub fn potential_term(&self, v: &[f64]) -> f64 {
        let p = 1.0 + self.q;
        self.absorb
            .iter()
            .zip(v)
            .map(|(c, x)| if *c == 0.0 { 0.0 } else { c * x.abs().powf(p) })
            .sum()
    }

    pub fn energy(&self, v: &[f64]) -> f64 {
        self.gradient_term(v) + self.potential_term(v)
    }

    /// `∇F`; the `|v|^{1+q}` part has derivative 0 at `v = 0`.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut g = self.stiffness.matvec(v);
        let p = 1.0 + self.q;
        for ((gi, c), x) in g.iter_mut().zip(&self.absorb).zip(v) {
            *gi *= 2.0;
            if *x != 0.0 {
                *gi += p * c * x.abs().powf(self.q) * x.signum();
            }
        }
        g
    }
}

/// `F(v)` for a grid function against a potential.
pub fn discrete_energy(v: &GridFunction, spec: &PotentialSpec, q: f64) -> Result<f64> {
    let f = EnergyFunctional::new(*v.grid(), spec, q)?;
    Ok(f.energy(v.values()))
}

pub(crate) fn internal(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_energy() {
        let grid = Grid::interval(0.0, 1.0, 1023, 1).unwrap();
        let v = GridFunction::from_fn(grid, |x| (PI * x).sin()).unwrap();
        let spec = PotentialSpec::constant(0.0, Domain::unit_interval(1.0, 64).unwrap()).unwrap();
        let e = discrete_energy(&v, &spec, 0.5).unwrap();
        let dx = grid.spacing();
        assert!(
            (e - PI * PI / 2.0).abs() < 2.0 * dx * dx * PI.powi(4),
            "{e}"
        );
        let zero = GridFunction::zeros(grid);
        assert_eq!(discrete_energy(&zero, &spec, 0.5).unwrap(), 0.0);
        let v3 = GridFunction::from_fn(grid, |x| 3.0 * (PI * x).sin()).unwrap();
        let e3 = discrete_energy(&v3, &spec, 0.5).unwrap();
        assert!((e3 - 9.0 * e).abs() < 1e-12 * e3);
    }

    #[test]
    fn q_outside_range() {
        let grid = Grid::interval(0.0, 1.0, 16, 1).unwrap();
        let spec = PotentialSpec::constant(1.0, Domain::unit_interval(1.0, 64).unwrap()).unwrap();
        for q in [0.0, 1.0, -0.5] {
            let v = GridFunction::zeros(grid);
            assert!(matches!(
                discrete_energy(&v, &spec, q),
                Err(Error::Parameter(_))
            ));
        }
    }

    #[test]
    fn biharmonic_stencil_is_d2_squared() {
        // zero-ghost second differences on every node touching the interior
        let n = 9;
        let grid = Grid::interval(0.0, 1.0, n, 2).unwrap();
        let k = grid.stiffness();
        let dx = grid.spacing();
        let v: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
        let mut ext = vec![0.0; n + 4];
        ext[2..n + 2].copy_from_slice(&v);
        let direct: f64 = (1..n + 3)
            .map(|i| (ext[i - 1] - 2.0 * ext[i] + ext[i + 1]).powi(2))
            .sum::<f64>()
            / dx.powi(3);
        assert!((k.quadratic_form(&v) - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn radial_mass_of_ball() {
        let grid = Grid::radial(3, 1.0, 400).unwrap();
        let v = GridFunction::from_fn(grid, |_| 1.0).unwrap();
        // midpoint nodes stop half a cell short of the wall
        assert!((v.mass() - 4.0 * PI / 3.0).abs() < 4.0 * PI * grid.spacing());
        assert!(Grid::for_domain(&Domain::ball(3, 1.0, 32).unwrap(), 2, 64).is_err());
    }

    #[test]
    fn too_few_nodes() {
        assert!(Grid::interval(0.0, 1.0, 4, 2).is_err());
        assert!(Grid::interval(0.0, 1.0, 5, 2).is_ok());
    }
}

use super::grid::{weighted_mass, Grid};
use crate::error::{parameter, Error, Result};
use crate::potential::PotentialSpec;

const MAX_ITERS: usize = 20_000;

/// Smallest eigenvalue of `-Δ_h + a/h²` (Dirichlet, `m = 1`) on `n` nodes, by
/// inverse iteration with zero shift.
pub fn linear_lambda12(spec: &PotentialSpec, n: usize, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return parameter(format!("h = {h} must be positive"));
    }
    let grid = Grid::for_domain(spec.domain(), 1, n)?;
    let w = grid.weights();
    let a = grid.sample_potential(spec)?;
    let mut op = grid.stiffness();
    let diag: Vec<f64> = w.iter().zip(&a).map(|(w, a)| w * a / (h * h)).collect();
    if diag.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numerical(format!(
            "potential term overflows at h = {h}"
        )));
    }
    op.add_diagonal(&diag);
    let chol = op.cholesky()?;

    let mut v: Vec<f64> = super::bump_profile(&grid);
    let mut rho = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let mass = weighted_mass(&w, &v);
        let c = mass.sqrt().recip();
        v.iter_mut().for_each(|x| *x *= c);
        let next = op.quadratic_form(&v);
        if (rho - next).abs() <= 1e-10 * next.abs() {
            return Ok(next);
        }
        rho = next;
        let rhs: Vec<f64> = w.iter().zip(&v).map(|(w, x)| w * x).collect();
        v = chol.solve(&rhs);
    }
    Err(Error::Numerical(format!(
        "inverse iteration stagnated, last Rayleigh quotient {rho}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{tilde_transform, Domain};
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_level_for_zero_potential() {
        let spec = PotentialSpec::constant(0.0, Domain::unit_interval(1.0, 64).unwrap()).unwrap();
        let n = 1000;
        let dx = 1.0 / (n + 1) as f64;
        let oracle = 4.0 / (dx * dx) * (PI * dx / 2.0).sin().powi(2);
        for h in [1e-3, 1.0, 10.0] {
            let l = linear_lambda12(&spec, n, h).unwrap();
            assert!((l - oracle).abs() < 1e-8 * oracle, "{l}");
        }
    }

    #[test]
    fn nonincreasing_in_h() {
        let d = Domain::symmetric_interval(1.0, 256).unwrap();
        let spec = tilde_transform(&PotentialSpec::constant(1.0, d).unwrap(), 1.0).unwrap();
        let hs = [1e-1, 1e-2, 1e-3, 1e-4];
        let ls: Vec<f64> = hs
            .iter()
            .map(|&h| linear_lambda12(&spec, 400, h).unwrap())
            .collect();
        for w in ls.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-9));
        }
        // growth stays within a band of (-ln h)^{2/α}
        let ratios: Vec<f64> = hs
            .iter()
            .zip(&ls)
            .map(|(h, l)| l / (-h.ln()).powi(2))
            .collect();
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        assert!(hi / lo < 10.0, "{ratios:?}");
    }
}

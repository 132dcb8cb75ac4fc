//! Ground-state levels of the constrained energy `F(v)` with `‖v‖₂² = h`,
//! the linear level with a `1/h²`-scaled potential, and the lower-bound
//! certificate built from a sampled curve.

mod curve;
mod grid;
mod linear;

pub use curve::{
    lower_bound_certificate, Certificate, CertificateForm, CertificateRow, LambdaCurve, PowerFit,
};
pub use grid::{discrete_energy, EnergyFunctional, Grid, GridFunction, GridKind};
pub use linear::linear_lambda12;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{parameter, precondition, Result};
use crate::potential::PotentialSpec;
use crate::report;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    /// Interior nodes.
    pub resolution: usize,
    pub max_iters: usize,
    /// Random perturbations of the bump start.
    pub extra_starts: usize,
    pub seed: u64,
    /// Iterations over which the relative change of `F` is measured.
    pub window: usize,
    pub rel_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            resolution: 512,
            max_iters: 5000,
            extra_starts: 4,
            seed: 0,
            window: 100,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateResult {
    pub h: f64,
    /// Smallest `F(v)` found.
    pub lambda: f64,
    pub minimizer: GridFunction,
    /// Iterations of the winning start.
    pub iterations: usize,
    pub starts: usize,
    pub converged: bool,
}

/// Seed for task `index` of a sweep rooted at `root` (splitmix64 mixing).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Nonnegative bump vanishing at the walls, peaked at the domain center
/// (the origin for a radial grid).
pub fn bump_profile(grid: &Grid) -> Vec<f64> {
    let m = grid.order() as i32;
    match grid.kind() {
        GridKind::Interval { lo, hi } => grid
            .nodes()
            .iter()
            .map(|x| (std::f64::consts::PI * (x - lo) / (hi - lo)).sin().powi(m))
            .collect(),
        GridKind::Radial { radius, .. } => grid
            .nodes()
            .iter()
            .map(|r| (std::f64::consts::FRAC_PI_2 * r / radius).cos())
            .collect(),
    }
}

fn rescale(v: &mut [f64], w: &[f64], h: f64) -> bool {
    let mass = grid::weighted_mass(w, v);
    if !(mass > 0.0 && mass.is_finite()) {
        return false;
    }
    let c = (h / mass).sqrt();
    v.iter_mut().for_each(|x| *x *= c);
    true
}

fn starts(grid: &Grid, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let bump = bump_profile(grid);
    let mut out = vec![bump.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = grid.nodes();
    let (x0, span) = match grid.kind() {
        GridKind::Interval { lo, hi } => (lo, hi - lo),
        GridKind::Radial { radius, .. } => (0.0, radius),
    };
    for _ in 0..extra {
        // sharpen by a random power, then modulate smoothly
        let power = 1.0 + 4.0 * rng.gen::<f64>();
        let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = bump
            .iter()
            .zip(&nodes)
            .map(|(b, x)| {
                let s = (x - x0) / span;
                let wave: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * s).sin())
                    .sum();
                b.powf(power) * (0.5 * wave).exp()
            })
            .collect();
        out.push(v);
    }
    out
}

struct Descent {
    value: f64,
    v: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Preconditioned descent on the sphere `‖v‖₂² = h`: the constrained
/// residual is preconditioned by the stiffness matrix, projected back to the
/// tangent space, and followed with Armijo backtracking and rescaling.
fn descend(
    f: &EnergyFunctional,
    chol: &crate::banded::BandedCholesky,
    mut v: Vec<f64>,
    h: f64,
    opts: &MinimizeOptions,
) -> Result<Descent> {
    let w = f.weights();
    if !rescale(&mut v, w, h) {
        return Err(grid::internal("start has zero mass"));
    }
    let mut value = f.energy(&v);
    let mut history = vec![value];
    let mut tau: f64 = 1.0;
    for it in 1..=opts.max_iters {
        let g = f.gradient(&v);
        let wv: Vec<f64> = w.iter().zip(&v).map(|(w, x)| w * x).collect();
        let vwv: f64 = wv.iter().zip(&v).map(|(a, b)| a * b).sum();
        let mu = g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / vwv;
        let r: Vec<f64> = g.iter().zip(&wv).map(|(g, y)| g - mu * y).collect();
        let mut p = chol.solve(&r);
        let c = wv.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() / vwv;
        p.iter_mut().zip(&v).for_each(|(p, x)| *p -= c * x);
        let slope: f64 = r.iter().zip(&p).map(|(a, b)| a * b).sum();
        if !(slope > 0.0) || slope <= 1e-15 * value.abs() {
            return Ok(Descent {
                value,
                v,
                iterations: it,
                converged: true,
            });
        }
        tau = (2.0 * tau).min(1.0);
        let mut accepted = None;
        while tau > 1e-14 {
            let mut cand: Vec<f64> = v.iter().zip(&p).map(|(x, p)| x - tau * p).collect();
            if rescale(&mut cand, w, h) {
                let fc = f.energy(&cand);
                if fc <= value - 1e-4 * tau * slope {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            tau *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            // no representable decrease left
            return Ok(Descent {
                value,
                v,
                iterations: it,
                converged: true,
            });
        };
        v = cand;
        value = fc;
        history.push(value);
        if history.len() > opts.window {
            let old = history[history.len() - 1 - opts.window];
            if (old - value).abs() <= opts.rel_tol * value.abs() {
                return Ok(Descent {
                    value,
                    v,
                    iterations: it,
                    converged: true,
                });
            }
        }
    }
    Ok(Descent {
        value,
        v,
        iterations: opts.max_iters,
        converged: false,
    })
}

/// Multi-start estimate of `inf{F(v) : ‖v‖₂² = h}` on the potential's domain.
pub fn minimize_lambda1(
    spec: &PotentialSpec,
    m: usize,
    q: f64,
    h: f64,
    opts: &MinimizeOptions,
) -> Result<GroundStateResult> {
    if !(h > 0.0 && h.is_finite()) {
        return parameter(format!("mass h = {h} must be positive"));
    }
    let grid = Grid::for_domain(spec.domain(), m, opts.resolution)?;
    let f = EnergyFunctional::new(grid, spec, q)?;
    minimize_functional(&f, h, opts)
}

/// [`minimize_lambda1`] on a prebuilt functional.
pub fn minimize_functional(
    f: &EnergyFunctional,
    h: f64,
    opts: &MinimizeOptions,
) -> Result<GroundStateResult> {
    let chol = f.stiffness().cholesky()?;
    let grid = *f.grid();
    let all = starts(&grid, opts.extra_starts, opts.seed);
    let count = all.len();
    let mut best: Option<Descent> = None;
    for s in all {
        let d = descend(f, &chol, s, h, opts)?;
        if best.as_ref().is_none_or(|b| d.value < b.value) {
            best = Some(d);
        }
    }
    let best = best.expect("at least one start");
    Ok(GroundStateResult {
        h,
        lambda: best.value,
        minimizer: GridFunction::new(grid, best.v)?,
        iterations: best.iterations,
        starts: count,
        converged: best.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunctionBound {
    /// Support radius `(-ln h)^{-1/alpha}`.
    pub radius: f64,
    pub gradient_term: f64,
    pub potential_term: f64,
    pub total: f64,
}

/// Unit-mass reference bump for [`testfn_upper_bound`]: a profile on
/// `(-1, 1)` for `N = 1`, a radial one on the unit ball for `N > 1` (`m = 1`).
pub fn reference_bump(dim: usize, m: usize, n: usize) -> Result<GridFunction> {
    let grid = if dim == 1 {
        Grid::interval(-1.0, 1.0, n, m)?
    } else if m == 1 {
        Grid::radial(dim, 1.0, n)?
    } else {
        return parameter("radial bumps are only available for m = 1");
    };
    let mut v = bump_profile(&grid);
    rescale(&mut v, &grid.weights(), 1.0);
    GridFunction::new(grid, v)
}

/// Energy of the rescaled bump `√(h/r^N) b(x/r)` with `r = (-ln h)^{-1/α}`,
/// using `sup_{B_r} ã <= C e^{-1/r^α} = C h`.
pub fn testfn_upper_bound(
    alpha: f64,
    q: f64,
    h: f64,
    c_tilde: f64,
    clearance: f64,
    bump: &GridFunction,
) -> Result<TestFunctionBound> {
    if !(h > 0.0 && h < 1.0) {
        return parameter(format!("h = {h} must lie in (0, 1)"));
    }
    if !(alpha > 0.0 && q > 0.0 && q < 1.0 && c_tilde >= 0.0) {
        return parameter("need alpha > 0, q in (0, 1) and C >= 0");
    }
    let radius = (-h.ln()).powf(-1.0 / alpha);
    if radius > clearance {
        return precondition(format!(
            "support radius {radius} exceeds the clearance {clearance}"
        ));
    }
    let grid = bump.grid();
    let m = grid.order() as i32;
    let dim = grid.dim() as f64;
    let d_norm = grid.stiffness().quadratic_form(bump.values());
    let lp = bump.lp_power(1.0 + q);
    let gradient_term = h * radius.powi(-2 * m) * d_norm;
    let sup_a = c_tilde * (-radius.powf(-alpha)).exp();
    let potential_term = h.powf((1.0 + q) / 2.0) * radius.powf(dim * (1.0 - q) / 2.0) * sup_a * lp;
    Ok(TestFunctionBound {
        radius,
        gradient_term,
        potential_term,
        total: gradient_term + potential_term,
    })
}

pub const LAMBDA_HEADER: &str = "h,lambda,upper_bound,converged,starts,iters";

/// One CSV row; a missing upper bound is written as `nan`.
pub fn lambda_row(r: &GroundStateResult, upper: Option<f64>) -> String {
    format!(
        "{},{},{},{},{},{}",
        report::num(r.h),
        report::num(r.lambda),
        report::num(upper.unwrap_or(f64::NAN)),
        r.converged,
        r.starts,
        r.iterations
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{tilde_transform, Domain};
    use nalgebra::DMatrix;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use std::f64::consts::PI;

    fn zero_on(lo: f64, hi: f64) -> PotentialSpec {
        PotentialSpec::constant(0.0, Domain::interval(lo, hi, 64).unwrap()).unwrap()
    }

    fn opts(n: usize) -> MinimizeOptions {
        MinimizeOptions {
            resolution: n,
            ..MinimizeOptions::default()
        }
    }

    /// Smallest eigenvalue of the dense stiffness matrix relative to the mass weights.
    fn dense_lowest(grid: &Grid) -> f64 {
        let k = grid.stiffness();
        let w = grid.weights();
        let n = grid.len();
        let a = DMatrix::from_fn(n, n, |i, j| k.get(i, j) / (w[i] * w[j]).sqrt());
        a.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn laplacian_level_matches_dense_eigensolve() {
        let spec = zero_on(0.0, 1.0);
        let r = minimize_lambda1(&spec, 1, 0.5, 1.0, &opts(200)).unwrap();
        let oracle = dense_lowest(r.minimizer.grid());
        assert!(
            (r.lambda - oracle).abs() < 1e-9 * oracle,
            "{} vs {oracle}",
            r.lambda
        );
        assert!((r.lambda - PI * PI).abs() < 1e-3 * PI * PI);
        assert!((r.minimizer.mass() - 1.0).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn beam_level_matches_dense_eigensolve() {
        let spec = zero_on(0.0, 1.0);
        let r = minimize_lambda1(&spec, 2, 0.5, 1.0, &opts(200)).unwrap();
        let oracle = dense_lowest(r.minimizer.grid());
        assert!(
            (r.lambda - oracle).abs() < 1e-7 * oracle,
            "{} vs {oracle}",
            r.lambda
        );
    }

    #[test]
    fn homogeneous_in_h_without_potential() {
        let spec = zero_on(0.0, 1.0);
        let base = minimize_lambda1(&spec, 1, 0.5, 1.0, &opts(128))
            .unwrap()
            .lambda;
        for h in [1e-4, 1e-2, 3.0] {
            let r = minimize_lambda1(&spec, 1, 0.5, h, &opts(128)).unwrap();
            assert!((r.lambda / h - base).abs() < 1e-8 * base);
            assert!((r.minimizer.mass() - h).abs() < 1e-12 * h);
        }
    }

    #[test]
    fn radial_level_of_unit_ball() {
        // first Dirichlet eigenvalue of the unit ball in R^3 is π²
        let spec = PotentialSpec::constant(0.0, Domain::ball(3, 1.0, 32).unwrap()).unwrap();
        let r = minimize_lambda1(&spec, 1, 0.5, 1.0, &opts(800)).unwrap();
        assert!((r.lambda - PI * PI).abs() < 2e-3 * PI * PI, "{}", r.lambda);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = Grid::interval(-1.0, 1.0, 40, 1).unwrap();
        let spec = PotentialSpec::radial_exp(1.0, Domain::symmetric_interval(1.0, 64).unwrap())
            .unwrap()
            .scaled(5.0)
            .unwrap();
        for trial in 0..100 {
            let q = 0.5 + 0.45 * rng.gen::<f64>();
            let f = EnergyFunctional::new(grid, &spec, q).unwrap();
            let v: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = f.gradient(&v);
            for i in (0..grid.len()).step_by(7) {
                if v[i].abs() < 1e-8 {
                    continue;
                }
                let eps = 1e-5f64.min(0.1 * v[i].abs());
                let mut up = v.clone();
                let mut dn = v.clone();
                up[i] += eps;
                dn[i] -= eps;
                let fd = (f.energy(&up) - f.energy(&dn)) / (2.0 * eps);
                assert!(
                    (fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0),
                    "trial {trial} i {i}: {fd} vs {}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn tilde_level_below_plain_level() {
        let d = Domain::symmetric_interval(1.0, 256).unwrap();
        let a = PotentialSpec::constant(1.0, d).unwrap();
        let at = tilde_transform(&a, 1.0).unwrap();
        for h in [1e-2, 1e-4] {
            let l = minimize_lambda1(&a, 1, 0.5, h, &opts(256)).unwrap().lambda;
            let lt = minimize_lambda1(&at, 1, 0.5, h, &opts(256)).unwrap().lambda;
            assert!(lt <= l * (1.0 + 1e-9), "{lt} > {l}");
        }
    }

    #[test]
    fn multistart_not_far_from_dense_random_starts() {
        let d = Domain::symmetric_interval(1.0, 256).unwrap();
        let at = tilde_transform(&PotentialSpec::constant(1.0, d).unwrap(), 1.0).unwrap();
        let base = minimize_lambda1(&at, 1, 0.5, 1e-3, &opts(128))
            .unwrap()
            .lambda;
        let dense = MinimizeOptions {
            extra_starts: 40,
            seed: 99,
            ..opts(128)
        };
        let other = minimize_lambda1(&at, 1, 0.5, 1e-3, &dense).unwrap().lambda;
        assert!(base <= 2.0 * other);
    }

    #[test]
    fn second_order_mesh_trend() {
        let spec = zero_on(0.0, 1.0);
        let l: Vec<f64> = [64, 129, 259]
            .iter()
            .map(|&n| {
                minimize_lambda1(&spec, 1, 0.5, 1.0, &opts(n))
                    .unwrap()
                    .lambda
            })
            .collect();
        assert!((l[0] - l[1]).abs() < 4.0 * (l[1] - l[2]).abs() * 1.01 + 1e-12);
    }

    #[test]
    fn testfn_bound_scaling() {
        let bump = reference_bump(1, 1, 400).unwrap();
        let h = (-10.0f64).exp();
        let b = testfn_upper_bound(1.0, 0.5, h, 1.0, 1.0, &bump).unwrap();
        assert!((b.radius - 0.1).abs() < 1e-15);
        let d = bump.grid().stiffness().quadratic_form(bump.values());
        assert!((b.gradient_term - 100.0 * h * d).abs() < 1e-12 * b.gradient_term);
        // r exceeds the domain for h close to 1
        assert!(testfn_upper_bound(1.0, 0.5, 0.9, 1.0, 1.0, &bump).is_err());
    }

    #[test]
    fn minimizer_below_testfn_bound() {
        let d = Domain::symmetric_interval(1.0, 256).unwrap();
        let at = tilde_transform(&PotentialSpec::constant(1.0, d).unwrap(), 1.0).unwrap();
        let bump = reference_bump(1, 1, 400).unwrap();
        for h in [1e-2, 1e-4, 1e-6] {
            let r = minimize_lambda1(&at, 1, 0.5, h, &opts(512)).unwrap();
            let ub = testfn_upper_bound(1.0, 0.5, h, 1.0, 1.0, &bump).unwrap();
            assert!(r.lambda <= ub.total, "h = {h}: {} > {}", r.lambda, ub.total);
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn constraint_is_exact(lh in -8.0f64..1.0, a0 in 0.0f64..10.0) {
            let h = 10f64.powf(lh);
            let spec = PotentialSpec::constant(a0, Domain::unit_interval(1.0, 64).unwrap()).unwrap();
            let r = minimize_lambda1(&spec, 1, 0.5, h, &MinimizeOptions { extra_starts: 1, ..opts(64) }).unwrap();
            prop_assert!((r.minimizer.mass() - h).abs() <= 1e-12 * h);
        }
    }
}

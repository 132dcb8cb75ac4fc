//! Absorption potentials, their domains and distribution functions.
//!
//! Every potential is evaluated in the log domain: `ln a(x)`, with `-inf`
//! standing for `a(x) = 0`. The criteria integrate in log-depth
//! `t = -ln s`, so sublevel sets `{a <= e^{-t}}` never need `e^{-t}`
//! itself and stay exact for depths far beyond the `f64` range of `s`.

mod distribution;
mod domain;
mod parse;

pub use distribution::DistFn;
pub use domain::{unit_ball_volume, unit_sphere_area, Cell, Domain, Shape, MIN_RESOLUTION};
pub use parse::{parse_potential, parse_potential_with_base};

use crate::error::{parameter, precondition, Error, Result};
use crate::table::MonotoneTable;

/// Modulus in `exp(-omega(r) / r^e)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Omega {
    Constant(f64),
    /// `coeff * r^exponent`.
    Power {
        coeff: f64,
        exponent: f64,
    },
    /// `(-ln min(r, 1/e))^{-power}`.
    InvLog {
        power: f64,
    },
    /// Tabulated `(r, omega)`, linear between rows and clamped outside.
    Table(MonotoneTable),
}

impl Omega {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Omega::Constant(c) => *c,
            Omega::Power { coeff, exponent } => coeff * r.powf(*exponent),
            Omega::InvLog { power } => (-r.min((-1.0f64).exp()).ln()).powf(-power),
            Omega::Table(t) => t.eval(r),
        }
    }

    /// `omega(e^{-t})` without forming `e^{-t}` when it can be avoided.
    pub fn at_depth(&self, t: f64) -> f64 {
        match self {
            Omega::Constant(c) => *c,
            Omega::Power { coeff, exponent } => coeff * (-exponent * t).exp(),
            Omega::InvLog { power } => t.max(1.0).powf(-power),
            Omega::Table(tab) => tab.eval((-t).exp()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Omega::Constant(c) if !(c.is_finite() && *c >= 0.0) => {
                parameter(format!("omega constant {c} must be >= 0"))
            }
            Omega::Power { coeff, exponent }
                if !(coeff.is_finite() && *coeff >= 0.0 && *exponent > 0.0) =>
            {
                parameter("omega power needs coeff >= 0 and exponent > 0")
            }
            Omega::InvLog { power } if !(power.is_finite() && *power > 0.0) => {
                parameter("omega invlog power must be positive")
            }
            Omega::Table(t) if t.ys()[0] < 0.0 => precondition("omega table must be nonnegative"),
            _ => Ok(()),
        }
    }
}

/// Symbolic absorption potential `a(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Constant(f64),
    /// `exp(-1/|x|^alpha)`.
    RadialExp {
        alpha: f64,
    },
    /// `exp(-omega(|x|)/|x|^exponent)`.
    RadialOmega {
        omega: Omega,
        exponent: f64,
    },
    Product(Box<Potential>, Box<Potential>),
    /// `a^kappa`.
    Power {
        base: Box<Potential>,
        kappa: f64,
    },
    /// One value per sampling cell of the domain.
    GridSampled(Vec<f64>),
}

impl Potential {
    pub fn product(a: Potential, b: Potential) -> Self {
        Potential::Product(Box::new(a), Box::new(b))
    }

    /// `lambda * a`.
    pub fn scaled(a: Potential, lambda: f64) -> Self {
        Self::product(Potential::Constant(lambda), a)
    }

    pub fn power(a: Potential, kappa: f64) -> Self {
        Potential::Power {
            base: Box::new(a),
            kappa,
        }
    }

    /// `ln a` at radius `r = |x|`; `cell` is the sampling cell holding `x`.
    pub fn ln_value(&self, r: f64, cell: usize) -> f64 {
        match self {
            Potential::Constant(a0) => a0.ln(),
            Potential::RadialExp { alpha } => {
                if r > 0.0 {
                    -r.powf(-alpha)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Potential::RadialOmega { omega, exponent } => {
                if r > 0.0 {
                    -omega.eval(r) * r.powf(-exponent)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Potential::Product(a, b) => {
                let la = a.ln_value(r, cell);
                if la == f64::NEG_INFINITY {
                    return la;
                }
                la + b.ln_value(r, cell)
            }
            Potential::Power { base, kappa } => kappa * base.ln_value(r, cell),
            Potential::GridSampled(v) => v[cell].ln(),
        }
    }

    fn is_radial(&self) -> bool {
        match self {
            Potential::GridSampled(_) => false,
            Potential::Product(a, b) => a.is_radial() && b.is_radial(),
            Potential::Power { base, .. } => base.is_radial(),
            _ => true,
        }
    }

    /// Whether `r -> ln a(r)` is nondecreasing on `(0, rmax]`.
    fn is_radially_nondecreasing(&self, rmax: f64) -> bool {
        match self {
            Potential::Constant(_) | Potential::RadialExp { .. } => true,
            Potential::RadialOmega { .. } => {
                // sampled check of `omega(r)/r^e` nonincreasing
                let n = 600;
                let mut prev = f64::NEG_INFINITY;
                for i in 0..=n {
                    let ln_r = rmax.ln() - 690.0 * (1.0 - i as f64 / n as f64);
                    let v = self.ln_value(ln_r.exp(), 0);
                    if v < prev - 1e-12 * prev.abs() {
                        return false;
                    }
                    prev = v;
                }
                true
            }
            Potential::Product(a, b) => {
                a.is_radially_nondecreasing(rmax) && b.is_radially_nondecreasing(rmax)
            }
            Potential::Power { base, .. } => base.is_radially_nondecreasing(rmax),
            Potential::GridSampled(_) => false,
        }
    }

    /// `sup{r in (0, rmax] : ln a(r) <= y}` for a radially nondecreasing
    /// potential, 0 when the set is empty.
    fn level_radius(&self, y: f64, rmax: f64) -> f64 {
        match self {
            Potential::Constant(a0) => {
                if a0.ln() <= y {
                    rmax
                } else {
                    0.0
                }
            }
            Potential::RadialExp { alpha } => {
                if y >= 0.0 {
                    rmax
                } else {
                    (-y).powf(-1.0 / alpha).min(rmax)
                }
            }
            Potential::Power { base, kappa } => base.level_radius(y / kappa, rmax),
            Potential::Product(a, b) => match (a.as_ref(), b.as_ref()) {
                (Potential::Constant(c), other) | (other, Potential::Constant(c)) => {
                    other.level_radius(y - c.ln(), rmax)
                }
                _ => self.bisect_level(y, rmax),
            },
            _ => self.bisect_level(y, rmax),
        }
    }

    fn bisect_level(&self, y: f64, rmax: f64) -> f64 {
        if self.ln_value(rmax, 0) <= y {
            return rmax;
        }
        let mut hi = rmax.ln();
        let mut lo = hi - 700.0;
        if self.ln_value(lo.exp(), 0) > y {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.ln_value(mid.exp(), 0) <= y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        lo.exp()
    }

    /// An upper bound for `sup a`; exact for radially nondecreasing potentials.
    fn sup_bound(&self, rmax: f64) -> f64 {
        match self {
            Potential::Constant(a0) => *a0,
            Potential::RadialExp { .. } => self.ln_value(rmax, 0).exp(),
            Potential::RadialOmega { .. } if self.is_radially_nondecreasing(rmax) => {
                self.ln_value(rmax, 0).exp()
            }
            Potential::RadialOmega { .. } => 1.0,
            Potential::Product(a, b) => a.sup_bound(rmax) * b.sup_bound(rmax),
            Potential::Power { base, kappa } => base.sup_bound(rmax).powf(*kappa),
            Potential::GridSampled(v) => v.iter().cloned().fold(0.0, f64::max),
        }
    }

    fn validate(&self, domain: &Domain) -> Result<()> {
        match self {
            Potential::Constant(a0) if !(a0.is_finite() && *a0 >= 0.0) => {
                parameter(format!("constant potential {a0} must be finite and >= 0"))
            }
            Potential::RadialExp { alpha } if !(alpha.is_finite() && *alpha > 0.0) => {
                parameter(format!("radial exponent alpha = {alpha} must be positive"))
            }
            Potential::RadialOmega { omega, exponent } => {
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return parameter(format!("omega exponent {exponent} must be positive"));
                }
                omega.validate()
            }
            Potential::Product(a, b) => {
                a.validate(domain)?;
                b.validate(domain)
            }
            Potential::Power { base, kappa } => {
                if !(kappa.is_finite() && *kappa > 0.0) {
                    return parameter(format!("power kappa = {kappa} must be positive"));
                }
                base.validate(domain)
            }
            Potential::GridSampled(v) => {
                if v.len() != domain.resolution() {
                    return parameter(format!(
                        "grid potential has {} values but the domain grid has {} cells",
                        v.len(),
                        domain.resolution()
                    ));
                }
                if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return parameter("grid potential values must be finite and >= 0");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A potential bound to its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    potential: Potential,
    domain: Domain,
}

impl PotentialSpec {
    pub fn new(potential: Potential, domain: Domain) -> Result<Self> {
        potential.validate(&domain)?;
        Ok(Self { potential, domain })
    }

    pub fn constant(a0: f64, domain: Domain) -> Result<Self> {
        Self::new(Potential::Constant(a0), domain)
    }

    pub fn radial_exp(alpha: f64, domain: Domain) -> Result<Self> {
        Self::new(Potential::RadialExp { alpha }, domain)
    }

    /// Samples `f(x)` at the cell centers of `domain` (`x` is the radius on a ball).
    pub fn sampled(domain: Domain, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = domain.cells().iter().map(|c| f(c.center)).collect();
        Self::new(Potential::GridSampled(values), domain)
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Same potential on a different domain (grid data must still fit).
    pub fn on_domain(&self, domain: Domain) -> Result<Self> {
        Self::new(self.potential.clone(), domain)
    }

    pub fn product(&self, other: &PotentialSpec) -> Result<Self> {
        Self::new(
            Potential::product(self.potential.clone(), other.potential.clone()),
            self.domain,
        )
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            Potential::scaled(self.potential.clone(), lambda),
            self.domain,
        )
    }

    pub fn power(&self, kappa: f64) -> Result<Self> {
        Self::new(Potential::power(self.potential.clone(), kappa), self.domain)
    }

    /// `a(x)` for `x` in the closure of the domain.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.ln_eval(x)?.exp())
    }

    pub fn ln_eval(&self, x: &[f64]) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!("{x:?}")));
        }
        let r = domain::norm(x);
        Ok(self.potential.ln_value(r, self.domain.cell_index(x)))
    }

    /// `ln a` at every sampling cell, in cell order.
    pub fn ln_on_cells(&self) -> Vec<f64> {
        self.domain
            .cells()
            .iter()
            .enumerate()
            .map(|(i, c)| self.potential.ln_value(c.center.abs(), i))
            .collect()
    }

    /// `ln a` on a radial profile; only meaningful for radial potentials.
    pub fn ln_at_radius(&self, r: f64) -> f64 {
        let probe = match self.domain.shape() {
            Shape::Interval { lo, hi } => {
                if r <= hi && r >= lo {
                    r
                } else {
                    -r
                }
            }
            Shape::Ball { .. } => r,
        };
        let cell = if self.domain.is_interval() {
            self.domain.cell_index(&[probe])
        } else {
            let mut x = vec![0.0; self.domain.dim()];
            x[0] = r;
            self.domain.cell_index(&x)
        };
        self.potential.ln_value(r, cell)
    }

    /// Whether `a` depends on `|x|` only.
    pub fn is_radial(&self) -> bool {
        !self.domain.is_interval() || self.potential.is_radial()
    }

    /// Whether the closed-form (radius inversion) path applies.
    pub fn has_closed_form_distribution(&self) -> bool {
        self.potential.is_radial()
            && self
                .potential
                .is_radially_nondecreasing(self.domain.max_radius())
    }

    /// Upper bound for `sup a` over the domain (exact in the radially
    /// nondecreasing case).
    pub fn sup(&self) -> f64 {
        self.potential.sup_bound(self.domain.max_radius())
    }

    /// `M_a(s) = meas{x : a(x) <= s}`.
    pub fn measure_below(&self, s: f64) -> f64 {
        self.distribution().eval(s)
    }

    /// `M_a(e^{-t})`.
    pub fn measure_below_depth(&self, t: f64) -> f64 {
        self.distribution().at_depth(t)
    }

    /// Grid-counting `M_a(s)` regardless of the closed-form path.
    pub fn measure_below_grid(&self, s: f64) -> f64 {
        DistFn::from_cells(self).eval(s)
    }

    /// Distribution function, closed form when available.
    pub fn distribution(&self) -> DistFn {
        if self.has_closed_form_distribution() {
            let pot = self.potential.clone();
            let dom = self.domain;
            let rmax = dom.max_radius();
            let total = dom.measure();
            // absorb exp/ln round trips at s = sup a
            let ln_sup = self.sup().ln();
            let top = ln_sup - 8.0 * f64::EPSILON * ln_sup.abs();
            DistFn::from_depth_fn(total, move |t| {
                if -t >= top {
                    total
                } else {
                    dom.radial_measure(pot.level_radius(-t, rmax))
                }
            })
        } else {
            DistFn::from_cells(self)
        }
    }
}

/// `ã = a * exp(-1/|x|^alpha)`; needs the origin inside the domain.
pub fn tilde_transform(spec: &PotentialSpec, alpha: f64) -> Result<PotentialSpec> {
    if !spec.domain.contains_origin() {
        return precondition("the tilde transform needs the origin inside the domain");
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return parameter(format!("tilde exponent alpha = {alpha} must be positive"));
    }
    PotentialSpec::new(
        Potential::product(spec.potential.clone(), Potential::RadialExp { alpha }),
        spec.domain,
    )
}

/// Default tilde exponent `min(2m, N) / 2`.
pub fn default_tilde_alpha(m: usize, dim: usize) -> f64 {
    (2 * m).min(dim) as f64 / 2.0
}

/// Constant `C` with `ã <= C exp(-1/|x|^alpha)`.
pub fn tilde_constant(spec: &PotentialSpec) -> f64 {
    spec.sup()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(n: usize) -> Domain {
        Domain::symmetric_interval(1.0, n).unwrap()
    }

    #[test]
    fn pointwise_values() {
        let d = sym(64);
        let c = PotentialSpec::constant(0.7, d).unwrap();
        assert_eq!(c.eval(&[0.3]).unwrap(), 0.7);
        let r = PotentialSpec::radial_exp(1.0, d).unwrap();
        assert!((r.eval(&[0.25]).unwrap() - (-4.0f64).exp()).abs() < 1e-16);
        assert_eq!(r.eval(&[0.0]).unwrap(), 0.0);
        let p = r
            .product(&PotentialSpec::constant(2.0, d).unwrap())
            .unwrap();
        assert!((p.eval(&[-0.25]).unwrap() - 2.0 * (-4.0f64).exp()).abs() < 1e-16);
        assert!(matches!(p.eval(&[1.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn measure_of_constant() {
        let c = PotentialSpec::constant(1.0, sym(64)).unwrap();
        assert_eq!(c.measure_below(0.5), 0.0);
        assert_eq!(c.measure_below(1.0), 2.0);
    }

    #[test]
    fn radial_exp_inversion() {
        let r = PotentialSpec::radial_exp(1.0, sym(64)).unwrap();
        assert!((r.measure_below((-4.0f64).exp()) - 0.5).abs() < 1e-14);
        let b = PotentialSpec::radial_exp(1.5, Domain::ball(3, 1.0, 64).unwrap()).unwrap();
        let s: f64 = 1e-3;
        let want = unit_ball_volume(3) * (-s.ln()).powf(-3.0 / 1.5);
        assert!((b.measure_below(s) - want).abs() < 1e-13 * want);
    }

    #[test]
    fn tilde_of_radial_exp() {
        let r = PotentialSpec::radial_exp(1.0, sym(64)).unwrap();
        let t = tilde_transform(&r, 1.0).unwrap();
        assert!((t.measure_below((-8.0f64).exp()) - 0.5).abs() < 1e-10);
        let off = PotentialSpec::constant(1.0, Domain::unit_interval(1.0, 32).unwrap()).unwrap();
        assert!(matches!(
            tilde_transform(&off, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn omega_modulated_uses_closed_form() {
        let d = Domain::ball(3, 1.0, 64).unwrap();
        let p = Potential::RadialOmega {
            omega: Omega::Power {
                coeff: 2.0,
                exponent: 0.3,
            },
            exponent: 2.0,
        };
        let spec = PotentialSpec::new(p, d).unwrap();
        assert!(spec.has_closed_form_distribution());
        // -2 r^{-1.7} <= -t  <=>  r <= (t/2)^{-1/1.7}
        let t: f64 = 50.0;
        let rho = (t / 2.0).powf(-1.0 / 1.7);
        let want = unit_ball_volume(3) * rho.powi(3);
        let got = spec.measure_below_depth(t);
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn grid_sampled_counts_cells() {
        let d = Domain::unit_interval(1.0, 100).unwrap();
        let spec = PotentialSpec::sampled(d, |x| x).unwrap();
        assert!(!spec.has_closed_form_distribution());
        assert!((spec.measure_below(0.25) - 0.25).abs() <= 0.01 + 1e-12);
        assert_eq!(spec.measure_below(2.0), 1.0);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let d = sym(32);
        assert!(PotentialSpec::constant(-1.0, d).is_err());
        assert!(PotentialSpec::radial_exp(0.0, d).is_err());
        assert!(PotentialSpec::new(Potential::GridSampled(vec![1.0; 3]), d).is_err());
    }
}

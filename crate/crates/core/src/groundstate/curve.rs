use crate::criteria::{entropy, CriterionParams};
use crate::error::{parameter, precondition, Error, Result};
use crate::potential::PotentialSpec;

/// `λ ≈ κ h^β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub kappa: f64,
    pub beta: f64,
}

impl PowerFit {
    pub fn eval(&self, h: f64) -> f64 {
        self.kappa * h.powf(self.beta)
    }

    /// `∫_lo^hi h^{-β}/κ dh`; infinite when `lo = 0` and `β >= 1`.
    pub fn inverse_integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let e = 1.0 - self.beta;
        if e.abs() < 1e-12 {
            if lo == 0.0 {
                return f64::INFINITY;
            }
            return (hi / lo).ln() / self.kappa;
        }
        if lo == 0.0 && e < 0.0 {
            return f64::INFINITY;
        }
        (hi.powf(e) - lo.powf(e)) / (self.kappa * e)
    }
}

/// A ground-state level as a function of the mass `h`.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaCurve {
    /// Samples sorted by increasing `h`; piecewise power law in between.
    Samples {
        hs: Vec<f64>,
        lambdas: Vec<f64>,
    },
    PowerLaw(PowerFit),
}

impl LambdaCurve {
    pub fn from_samples(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.len() < 2 {
            return parameter("a sampled curve needs at least two points");
        }
        if pairs
            .iter()
            .any(|(h, l)| !(h.is_finite() && *h > 0.0 && l.is_finite() && *l > 0.0))
        {
            return parameter("curve samples need h > 0 and lambda > 0");
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return parameter("curve samples must have distinct h");
        }
        let (hs, lambdas) = pairs.into_iter().unzip();
        Ok(LambdaCurve::Samples { hs, lambdas })
    }

    pub fn from_fn(hs: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_samples(hs.iter().map(|&h| (h, f(h))).collect())
    }

    pub fn power_law(kappa: f64, beta: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite() && beta.is_finite()) {
            return parameter(format!(
                "power law needs kappa > 0 and finite beta, got {kappa}, {beta}"
            ));
        }
        Ok(LambdaCurve::PowerLaw(PowerFit { kappa, beta }))
    }

    /// `powerlaw:kappa=K,beta=B`, or a CSV table with columns `h,lambda`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some(rest) = t.strip_prefix("powerlaw:") {
            let mut kappa = None;
            let mut beta = None;
            for kv in rest.split(',') {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected key=value in '{kv}'")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number '{v}'")))?;
                match k.trim() {
                    "kappa" => kappa = Some(v),
                    "beta" => beta = Some(v),
                    other => return Err(Error::Parse(format!("unknown power-law key '{other}'"))),
                }
            }
            let (Some(k), Some(b)) = (kappa, beta) else {
                return Err(Error::Parse("power law needs kappa and beta".into()));
            };
            return Self::power_law(k, b);
        }
        Self::from_csv_str(t)
    }

    /// First two columns `h, lambda`; a header line and `#` comments are skipped.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse(format!(
                    "line {}: expected at least two columns",
                    i + 1
                )));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(h), Ok(l)) => pairs.push((h, l)),
                _ if pairs.is_empty() && i == 0 => continue,
                _ => return Err(Error::Parse(format!("line {}: not numeric", i + 1))),
            }
        }
        Self::from_samples(pairs).map_err(|e| match e {
            Error::Parameter(m) => Error::Parse(m),
            e => e,
        })
    }

    pub fn samples(&self) -> Option<(&[f64], &[f64])> {
        match self {
            LambdaCurve::Samples { hs, lambdas } => Some((hs, lambdas)),
            LambdaCurve::PowerLaw(_) => None,
        }
    }

    /// Least-squares power law over the samples within one decade of the
    /// smallest `h` (at least the two smallest samples).
    pub fn tail_fit(&self) -> PowerFit {
        match self {
            LambdaCurve::PowerLaw(p) => *p,
            LambdaCurve::Samples { hs, lambdas } => {
                let cut = 10.0 * hs[0];
                let k = hs
                    .iter()
                    .take_while(|&&h| h <= cut * (1.0 + 1e-12))
                    .count()
                    .max(2);
                let xs: Vec<f64> = hs[..k].iter().map(|h| h.ln()).collect();
                let ys: Vec<f64> = lambdas[..k].iter().map(|l| l.ln()).collect();
                let mx = xs.iter().sum::<f64>() / k as f64;
                let my = ys.iter().sum::<f64>() / k as f64;
                let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
                let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
                let beta = sxy / sxx;
                PowerFit {
                    kappa: (my - beta * mx).exp(),
                    beta,
                }
            }
        }
    }

    /// Power law through samples `i` and `i + 1`.
    fn segment(hs: &[f64], ls: &[f64], i: usize) -> PowerFit {
        let beta = (ls[i + 1] / ls[i]).ln() / (hs[i + 1] / hs[i]).ln();
        PowerFit {
            kappa: ls[i] / hs[i].powf(beta),
            beta,
        }
    }

    pub fn eval(&self, h: f64) -> f64 {
        match self {
            LambdaCurve::PowerLaw(p) => p.eval(h),
            LambdaCurve::Samples { hs, lambdas } => {
                let n = hs.len();
                if h < hs[0] {
                    // anchor the tail at the first sample
                    let fit = self.tail_fit();
                    return lambdas[0] * (h / hs[0]).powf(fit.beta);
                }
                let i = match hs.binary_search_by(|x| x.total_cmp(&h)) {
                    Ok(i) => return lambdas[i],
                    Err(i) => (i - 1).min(n - 2),
                };
                Self::segment(hs, lambdas, i).eval(h)
            }
        }
    }

    /// `∫_lo^hi dh / λ(h)`, exact for the interpolant.
    pub fn inverse_integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self {
            LambdaCurve::PowerLaw(p) => p.inverse_integral(lo, hi),
            LambdaCurve::Samples { hs, lambdas } => {
                let n = hs.len();
                let mut total = 0.0;
                if lo < hs[0] {
                    total += self.tail_law().inverse_integral(lo, hi.min(hs[0]));
                }
                for i in 0..n - 1 {
                    let a = lo.max(hs[i]);
                    let b = hi.min(hs[i + 1]);
                    if b > a {
                        total += Self::segment(hs, lambdas, i).inverse_integral(a, b);
                    }
                }
                if hi > hs[n - 1] {
                    total +=
                        Self::segment(hs, lambdas, n - 2).inverse_integral(lo.max(hs[n - 1]), hi);
                }
                total
            }
        }
    }

    /// The law used below the smallest sample, continuous there.
    pub fn tail_law(&self) -> PowerFit {
        match self {
            LambdaCurve::PowerLaw(p) => *p,
            LambdaCurve::Samples { hs, lambdas } => {
                let fit = self.tail_fit();
                PowerFit {
                    kappa: lambdas[0] / hs[0].powf(fit.beta),
                    beta: fit.beta,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateForm {
    /// `(λ/h) M^θ`.
    Theta,
    /// `(λ/h) E(M)`, the `N = 2m` form.
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateRow {
    pub h: f64,
    pub lambda: f64,
    /// `C′ h^η`.
    pub level: f64,
    pub measure: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub c_prime: f64,
    pub eta: f64,
    pub form: CertificateForm,
    pub rows: Vec<CertificateRow>,
    pub infimum: f64,
}

impl Certificate {
    pub fn is_positive(&self) -> bool {
        self.infimum > 0.0
    }
}

/// `(λ̃(h)/h) · M_ã(C′ h^η)^θ` over `hs`, with `η = γ(1-q)/2` and
/// `C′ = 2 sup_h λ̃(h)/h^{1-η}` (one admissible choice of the constants).
pub fn lower_bound_certificate(
    curve: &LambdaCurve,
    spec: &PotentialSpec,
    params: &CriterionParams,
    q: f64,
    gamma: f64,
    hs: &[f64],
    form: CertificateForm,
) -> Result<Certificate> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return parameter(format!("gamma = {gamma} must lie in (0, 1)"));
    }
    if !(q > 0.0 && q < 1.0) {
        return parameter(format!("q = {q} must lie in (0, 1)"));
    }
    if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0)) {
        return parameter("certificate needs positive sample masses");
    }
    if form == CertificateForm::Theta && params.is_critical() {
        return precondition("N = 2m needs the entropy-weighted certificate");
    }
    let eta = gamma * (1.0 - q) / 2.0;
    let lambdas: Vec<f64> = hs.iter().map(|&h| curve.eval(h)).collect();
    let c_prime = 2.0
        * hs.iter()
            .zip(&lambdas)
            .map(|(h, l)| l / h.powf(1.0 - eta))
            .fold(0.0, f64::max);
    let dist = spec.distribution();
    let rows: Vec<CertificateRow> = hs
        .iter()
        .zip(&lambdas)
        .map(|(&h, &lambda)| {
            let level = c_prime * h.powf(eta);
            let measure = dist.eval(level);
            let weight = match form {
                CertificateForm::Theta => measure.powf(params.theta().unwrap_or(1.0)),
                CertificateForm::Entropy => entropy(measure.min((-1.0f64).exp())),
            };
            CertificateRow {
                h,
                lambda,
                level,
                measure,
                value: lambda / h * weight,
            }
        })
        .collect();
    let infimum = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    Ok(Certificate {
        c_prime,
        eta,
        form,
        rows,
        infimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{tilde_transform, Domain};

    #[test]
    fn interpolation_reproduces_power_laws() {
        let hs: Vec<f64> = (0..10).map(|k| 10f64.powi(-k)).collect();
        let c = LambdaCurve::from_fn(&hs, |h| 3.0 * h.powf(0.75)).unwrap();
        for h in [1e-12, 3e-7, 0.5, 2.0] {
            assert!((c.eval(h) - 3.0 * h.powf(0.75)).abs() < 1e-12 * c.eval(h));
        }
        let fit = c.tail_fit();
        assert!((fit.beta - 0.75).abs() < 1e-12 && (fit.kappa - 3.0).abs() < 1e-10);
        let exact = 1.0f64.powf(0.25) / (3.0 * 0.25);
        assert!((c.inverse_integral(0.0, 1.0) - exact).abs() < 1e-12);
    }

    #[test]
    fn parse_forms() {
        let c = LambdaCurve::parse("powerlaw:kappa=1,beta=0.75").unwrap();
        assert_eq!(
            c,
            LambdaCurve::PowerLaw(PowerFit {
                kappa: 1.0,
                beta: 0.75
            })
        );
        let c = LambdaCurve::parse("h,lambda\n1e-2,0.5\n1e-1,2\n").unwrap();
        assert_eq!(c.samples().unwrap().0, &[1e-2, 1e-1]);
        assert!(matches!(
            LambdaCurve::parse("powerlaw:kappa=1"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            LambdaCurve::parse("1,2\n1,3\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn certificate_positive_for_bounded_below_potential() {
        let d = Domain::ball(3, 1.0, 64).unwrap();
        let at = tilde_transform(&PotentialSpec::constant(2.0, d).unwrap(), 1.0).unwrap();
        let hs: Vec<f64> = (2..=6).map(|k| 10f64.powi(-k)).collect();
        let curve = LambdaCurve::from_fn(&hs, |h| h * (-h.ln()).powi(2)).unwrap();
        let p = CriterionParams::new(1, 3).unwrap();
        let cert = lower_bound_certificate(&curve, &at, &p, 0.5, 0.5, &hs, CertificateForm::Theta)
            .unwrap();
        assert!(cert.is_positive(), "{cert:?}");
        assert_eq!(cert.rows.len(), 5);
        let crit = CriterionParams::new(1, 2).unwrap();
        let d2 = Domain::ball(2, 1.0, 64).unwrap();
        let at2 = tilde_transform(&PotentialSpec::constant(2.0, d2).unwrap(), 1.0).unwrap();
        assert!(lower_bound_certificate(
            &curve,
            &at2,
            &crit,
            0.5,
            0.5,
            &hs,
            CertificateForm::Theta
        )
        .is_err());
        let e =
            lower_bound_certificate(&curve, &at2, &crit, 0.5, 0.5, &hs, CertificateForm::Entropy)
                .unwrap();
        assert!(e.is_positive());
    }
}

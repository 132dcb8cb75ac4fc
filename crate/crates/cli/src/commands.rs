use std::path::Path;

use rayon::prelude::*;

use eft_core::acceptance;
use eft_core::criteria::{
    dini_criterion, eft_criterion_for, f_criterion, log_lp_criterion, verdict_row, CriterionParams,
    LogLpStatement, VERDICT_HEADER,
};
use eft_core::extinction::{
    extinction_bound, kv_integral_equiv, ode_descent, BoundStatus, DepthProfile,
};
use eft_core::groundstate::{
    lambda_row, linear_lambda12, minimize_lambda1, reference_bump, testfn_upper_bound, LambdaCurve,
    MinimizeOptions, LAMBDA_HEADER,
};
use eft_core::orlicz::{holder_verify, luxemburg_norm, NFunction};
use eft_core::potential::{parse_potential, tilde_transform, Domain, Potential};
use eft_core::report::{csv, num};
use eft_core::simulator::{simulate, InitialData, SimConfig};
use eft_core::sphi::{sphi_membership, PhiFn};
use eft_core::{Error, Result};

use crate::output::{RunManifest, Sink};
use crate::{Command, Common, Statement, Variant};

/// Dispatches and maps errors to exit codes.
pub fn run(command: Command) -> u8 {
    match dispatch(command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_caller_error() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Criterion {
            potential,
            m,
            n,
            variant,
            domain,
            resolution,
            p,
            statement,
            weight,
            common,
        } => {
            let dom = match &domain {
                Some(d) => parse_domain(d, resolution)?,
                None => Domain::ball(n, 1.0, resolution)?,
            };
            if dom.dim() != n {
                return Err(Error::Parameter(format!(
                    "domain dimension {} differs from --n {n}",
                    dom.dim()
                )));
            }
            let spec = parse_potential(&potential, dom)?;
            let params = CriterionParams::new(m, n)?;
            let mut man = RunManifest::new("criterion", 0);
            man.param("potential", &potential)
                .param("m", m)
                .param("n", n)
                .param("variant", format!("{variant:?}").to_lowercase())
                .param("domain", domain.as_deref().unwrap_or("ball"))
                .param("resolution", resolution);
            let body = match variant {
                Variant::Eft => csv(
                    VERDICT_HEADER,
                    [verdict_row(
                        "eft",
                        &params,
                        &eft_criterion_for(&spec, &params)?,
                    )],
                ),
                Variant::Dini => {
                    let Potential::RadialOmega { omega, .. } = spec.potential() else {
                        return Err(Error::Parameter(
                            "the dini variant needs an `omega:` potential".into(),
                        ));
                    };
                    csv(
                        VERDICT_HEADER,
                        [verdict_row(
                            "dini",
                            &params,
                            &dini_criterion(omega, &params)?,
                        )],
                    )
                }
                Variant::F => {
                    let w = weight
                        .ok_or_else(|| Error::Parameter("the f variant needs --weight".into()))?;
                    man.param("weight", &w);
                    let report = f_criterion(parse_weight(&w)?, &spec, &params)?;
                    csv(
                        VERDICT_HEADER,
                        [
                            verdict_row("f-l1", &params, &report.l1),
                            verdict_row("f-integral", &params, &report.integral),
                            verdict_row("f", &params, &report.combined),
                        ],
                    )
                }
                Variant::Log => {
                    let p =
                        p.ok_or_else(|| Error::Parameter("the log variant needs --p".into()))?;
                    let st = match statement {
                        Statement::Half => LogLpStatement::HalfDimension,
                        Statement::Theta => LogLpStatement::Theta,
                    };
                    man.param("p", p)
                        .param("statement", format!("{statement:?}").to_lowercase());
                    let r = log_lp_criterion(&spec, p, &params, st)?;
                    let integral = r.integral.as_ref().map(|v| v.status.label()).unwrap_or("");
                    let alt = r.alternative_threshold.map(num).unwrap_or_default();
                    csv(
                        "criterion,m,N,p,threshold,alternative_threshold,integral,outcome",
                        [format!(
                            "log-lp,{m},{n},{},{},{alt},{integral},{:?}",
                            num(p),
                            num(r.threshold),
                            r.outcome
                        )],
                    )
                }
            };
            Sink::new(common.out).emit(man, &[("criterion.csv", body)])?;
            Ok(0)
        }
        Command::Sphi {
            potential,
            phi,
            n,
            domain,
            resolution,
            common,
        } => {
            let dom = match &domain {
                Some(d) => parse_domain(d, resolution)?,
                None => Domain::ball(n, 1.0, resolution)?,
            };
            let spec = parse_potential(&potential, dom)?;
            let f = PhiFn::parse(&phi)?;
            let v = sphi_membership(&spec, &f)?;
            let mut man = RunManifest::new("sphi", 0);
            man.param("potential", &potential)
                .param("phi", &phi)
                .param("n", n)
                .param("resolution", resolution);
            let body = csv(
                "potential,phi,status,value,blocks_used",
                [format!(
                    "{potential},{phi},{},{},{}",
                    v.status.label(),
                    v.status.value().map(num).unwrap_or_default(),
                    v.blocks_used()
                )],
            );
            Sink::new(common.out).emit(man, &[("sphi.csv", body)])?;
            Ok(0)
        }
        Command::OrliczNorm {
            file,
            nfunction,
            common,
        } => {
            let a = parse_nfunction(&nfunction)?;
            let (w, u, v) = read_columns(&file)?;
            let mask: Vec<bool> = w.iter().map(|x| *x > 0.0).collect();
            let norm = luxemburg_norm(&u, &w, &mask, &a)?;
            let mut rows = vec![format!("norm_a,{}", num(norm))];
            if let Some(v) = v {
                let h = holder_verify(&u, &v, &w, &mask, &a)?;
                rows.push(format!("integral,{}", num(h.integral)));
                rows.push(format!("norm_complementary,{}", num(h.norm_complementary)));
                rows.push(format!("holder_ratio,{}", num(h.ratio)));
            }
            let mut man = RunManifest::new("orlicz-norm", 0);
            man.param("file", file.display())
                .param("nfunction", &nfunction);
            Sink::new(common.out).emit(man, &[("orlicz.csv", csv("quantity,value", rows))])?;
            Ok(0)
        }
        Command::Lambda1 {
            potential,
            m,
            q,
            h_grid,
            tilde_alpha,
            seed,
            domain,
            resolution,
            nodes,
            starts,
            common,
        } => {
            let dom = parse_domain(&domain, resolution)?;
            let mut spec = parse_potential(&potential, dom)?;
            let c_tilde = spec.sup();
            if let Some(alpha) = tilde_alpha {
                spec = tilde_transform(&spec, alpha)?;
            }
            let hs = parse_h_grid(&h_grid)?;
            let opts = MinimizeOptions {
                resolution: nodes,
                extra_starts: starts,
                seed,
                ..MinimizeOptions::default()
            };
            let bump = match tilde_alpha {
                Some(_) => Some(reference_bump(dom.dim(), m, nodes)?),
                None => None,
            };
            let rows = pool(common.jobs)?.install(|| {
                hs.par_iter()
                    .map(|&h| {
                        let r = minimize_lambda1(&spec, m, q, h, &opts)?;
                        let upper = match (tilde_alpha, &bump) {
                            (Some(alpha), Some(b)) => {
                                testfn_upper_bound(alpha, q, h, c_tilde, dom.origin_clearance(), b)
                                    .ok()
                                    .map(|t| t.total)
                            }
                            _ => None,
                        };
                        Ok(lambda_row(&r, upper))
                    })
                    .collect::<Result<Vec<String>>>()
            })?;
            let mut man = RunManifest::new("lambda1", seed);
            man.param("potential", &potential)
                .param("m", m)
                .param("q", q)
                .param("h-grid", &h_grid)
                .param(
                    "tilde-alpha",
                    tilde_alpha.map(|a| a.to_string()).unwrap_or_default(),
                )
                .param("domain", &domain)
                .param("resolution", resolution)
                .param("nodes", nodes)
                .param("starts", starts);
            Sink::new(common.out).emit(man, &[("lambda1.csv", csv(LAMBDA_HEADER, rows))])?;
            Ok(0)
        }
        Command::Lambda12 {
            potential,
            h_grid,
            domain,
            resolution,
            nodes,
            common,
        } => {
            let spec = parse_potential(&potential, parse_domain(&domain, resolution)?)?;
            let hs = parse_h_grid(&h_grid)?;
            let rows = pool(common.jobs)?.install(|| {
                hs.par_iter()
                    .map(|&h| {
                        Ok(format!(
                            "{},{}",
                            num(h),
                            num(linear_lambda12(&spec, nodes, h)?)
                        ))
                    })
                    .collect::<Result<Vec<String>>>()
            })?;
            let mut man = RunManifest::new("lambda12", 0);
            man.param("potential", &potential)
                .param("h-grid", &h_grid)
                .param("domain", &domain)
                .param("resolution", resolution)
                .param("nodes", nodes);
            Sink::new(common.out).emit(man, &[("lambda12.csv", csv("h,lambda12", rows))])?;
            Ok(0)
        }
        Command::Bound {
            curve,
            y0,
            dt,
            common,
        } => {
            let lc = load_curve(&curve)?;
            let b = extinction_bound(&lc, y0)?;
            let mut text = match b.status {
                BoundStatus::Bound(t) => format!("status = Bound\nT = {}\n", num(t)),
                BoundStatus::NoBound => "status = NoBound\nT = inf\n".to_string(),
            };
            text.push_str(&format!(
                "tail_kappa = {}\ntail_beta = {}\ntail_contribution = {}\nh_min = {}\n",
                num(b.tail.fit.kappa),
                num(b.tail.fit.beta),
                num(b.tail.contribution),
                num(b.tail.h_min)
            ));
            let mut man = RunManifest::new("bound", 0);
            man.param("curve", &curve).param("y0", y0);
            if let Some(dt) = dt {
                let horizon = b.value().map(|t| 2.0 * t + dt).unwrap_or(1e3);
                let traj = ode_descent(&lc, y0, dt, horizon)?;
                let vt = traj.vanish_time.map(num).unwrap_or_else(|| "inf".into());
                text.push_str(&format!("ode_vanish_time = {vt}\n"));
                man.param("dt", dt);
            }
            Sink::new(common.out).emit(man, &[("bound.txt", text)])?;
            Ok(0)
        }
        Command::Kv {
            profile,
            q,
            n_max,
            potential,
            domain,
            resolution,
            nodes,
            common,
        } => {
            let mut man = RunManifest::new("kv", 0);
            man.param("profile", &profile)
                .param("q", q)
                .param("n-max", n_max);
            let eq = if let Some(rest) = profile.strip_prefix("synthetic:") {
                let kv = key_values(rest)?;
                let power = lookup(&kv, "power")?;
                let coeff = if kv.iter().any(|(k, _)| k == "coeff") {
                    lookup(&kv, "coeff")?
                } else {
                    1.0
                };
                kv_integral_equiv(&|t: f64| Ok(coeff * t.powf(power)), q, n_max)?
            } else if profile == "computed" {
                let pot = potential
                    .ok_or_else(|| Error::Parameter("`computed` needs --potential".into()))?;
                let spec = parse_potential(&pot, parse_domain(&domain, resolution)?)?;
                man.param("potential", &pot)
                    .param("domain", &domain)
                    .param("resolution", resolution)
                    .param("nodes", nodes);
                // deepest level reached by the sum, t_n = (1 - q)/2 n ln n
                let deepest = (0.5 * (1.0 - q) * n_max as f64 * (n_max as f64).ln()).max(2.0);
                let ts: Vec<f64> = (0..=24).map(|i| deepest.powf(i as f64 / 24.0)).collect();
                let pairs = pool(common.jobs)?.install(|| {
                    ts.par_iter()
                        .map(|&t| Ok((t, linear_lambda12(&spec, nodes, (-t).exp())?)))
                        .collect::<Result<Vec<_>>>()
                })?;
                let prof = DepthProfile::new(pairs)?;
                kv_integral_equiv(&|t: f64| Ok(prof.eval(t)), q, n_max)?
            } else {
                return Err(Error::Parse(format!("unknown profile `{profile}`")));
            };
            let summary = format!(
                "integral_status = {}\nintegral_value = {}\nsum_status = {}\nsum_value = {}\nexponent = {}\nblock_ratio = {}\nagree = {}\n",
                eq.integral.status.label(),
                eq.integral.status.value().map(num).unwrap_or_default(),
                eq.sum.status.label(),
                eq.sum.status.value().map(num).unwrap_or_default(),
                num(eq.sum.exponent),
                num(eq.sum.block_ratio),
                eq.agree
            );
            Sink::new(common.out).emit(
                man,
                &[("kv.csv", eq.sum.csv()), ("kv_summary.txt", summary)],
            )?;
            Ok(0)
        }
        Command::Simulate {
            m,
            q,
            nodes,
            dt,
            t_max,
            potential,
            domain,
            resolution,
            initial,
            eps_rel,
            common,
        } => {
            let spec = parse_potential(&potential, parse_domain(&domain, resolution)?)?;
            let init = match initial.as_str() {
                "sine" => InitialData::Sine,
                "zero" => InitialData::Zero,
                path => InitialData::Values(read_last_column(Path::new(path))?),
            };
            let cfg = SimConfig {
                m,
                q,
                n: nodes,
                dt,
                t_max,
                potential: spec,
                initial: init,
                eps_rel,
            };
            let result = simulate(&cfg)?;
            let mut man = RunManifest::new("simulate", 0);
            man.param("m", m)
                .param("q", q)
                .param("nodes", nodes)
                .param("dt", dt)
                .param("t-max", t_max)
                .param("potential", &potential)
                .param("domain", &domain)
                .param("resolution", resolution)
                .param("initial", &initial)
                .param("eps-rel", eps_rel);
            let tnum = if result.extinct() {
                num(result.extinction_time)
            } else {
                "inf".into()
            };
            Sink::new(common.out.clone()).emit(
                man,
                &[
                    ("trace.csv", result.trace_csv()),
                    ("state.csv", result.state_csv()),
                ],
            )?;
            if common.out.is_some() {
                println!("T_num = {tnum}");
            }
            Ok(0)
        }
        Command::Verify { common } => verify(common),
    }
}

fn verify(common: Common) -> Result<u8> {
    let suite: [fn() -> acceptance::Check; 9] = [
        acceptance::criterion_threshold,
        acceptance::ground_state_oracle,
        acceptance::test_function_band,
        acceptance::end_to_end_extinction,
        acceptance::energy_dissipation,
        acceptance::closed_form_bound,
        acceptance::orlicz_suite,
        acceptance::sphi_calculus,
        acceptance::sum_integral_equivalence,
    ];
    let checks: Vec<acceptance::Check> =
        pool(common.jobs)?.install(|| suite.par_iter().map(|f| f()).collect());
    let failed = checks.iter().filter(|c| !c.passed).count();
    let mut table: String = checks.iter().map(|c| format!("{c}\n")).collect();
    table.push_str(&format!(
        "{} of {} criteria passed\n",
        checks.len() - failed,
        checks.len()
    ));
    if common.out.is_some() {
        print!("{table}");
    }
    Sink::new(common.out).emit(RunManifest::new("verify", 0), &[("verify.txt", table)])?;
    Ok(if failed == 0 { 0 } else { 3 })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))
}

fn key_values(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in `{kv}`")))?;
            let x = v
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{v}`")))?;
            Ok((k.trim().to_string(), x))
        })
        .collect()
}

fn lookup(kv: &[(String, f64)], key: &str) -> Result<f64> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Parse(format!("missing `{key}=`")))
}

/// `interval:lo=A,hi=B` or `ball:dim=N,radius=R`.
pub fn parse_domain(text: &str, resolution: usize) -> Result<Domain> {
    let (kind, body) = text
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("bad domain `{text}`")))?;
    let kv = key_values(body)?;
    match kind.trim() {
        "interval" => Domain::interval(lookup(&kv, "lo")?, lookup(&kv, "hi")?, resolution),
        "ball" => {
            let dim = lookup(&kv, "dim")?;
            if dim.fract() != 0.0 || dim < 1.0 {
                return Err(Error::Parse(format!(
                    "ball dimension must be a positive integer, got {dim}"
                )));
            }
            let radius = if kv.iter().any(|(k, _)| k == "radius") {
                lookup(&kv, "radius")?
            } else {
                1.0
            };
            Domain::ball(dim as usize, radius, resolution)
        }
        other => Err(Error::Parse(format!("unknown domain kind `{other}`"))),
    }
}

/// `lo:hi:pts`, log-spaced and inclusive.
pub fn parse_h_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, pts] = parts.as_slice() else {
        return Err(Error::Parse(format!(
            "h-grid must be lo:hi:pts, got `{text}`"
        )));
    };
    let bad = |s: &str| Error::Parse(format!("bad h-grid entry `{s}`"));
    let lo: f64 = lo.trim().parse().map_err(|_| bad(lo))?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad(hi))?;
    let pts: usize = pts.trim().parse().map_err(|_| bad(pts))?;
    if !(lo > 0.0 && hi >= lo && pts >= 1) {
        return Err(Error::Parameter(format!(
            "h-grid needs 0 < lo <= hi and pts >= 1, got `{text}`"
        )));
    }
    if pts == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut hs: Vec<f64> = (0..pts)
        .map(|i| (a + (b - a) * i as f64 / (pts - 1) as f64).exp())
        .collect();
    hs[0] = lo;
    hs[pts - 1] = hi;
    Ok(hs)
}

/// `ln f(e^{-t})` for the `f` variant.
fn parse_weight(text: &str) -> Result<impl Fn(f64) -> f64> {
    let (kind, g) = text
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("bad weight `{text}`")))?;
    let g: f64 = g
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad weight exponent `{g}`")))?;
    let log = match kind {
        "power" => false,
        "log" => true,
        other => return Err(Error::Parse(format!("unknown weight kind `{other}`"))),
    };
    Ok(move |t: f64| if log { g * t.ln() } else { g * t })
}

pub fn parse_nfunction(text: &str) -> Result<NFunction> {
    let t = text.trim();
    if let Some(inner) = t.strip_prefix("square:") {
        return Ok(parse_nfunction(inner)?.square_composed());
    }
    if let Some(inner) = t.strip_prefix("numeric:") {
        return eft_core::orlicz::complementary_numeric(&parse_nfunction(inner)?);
    }
    if let Some(rest) = t.strip_prefix("exppoly:") {
        return NFunction::exp_poly(lookup(&key_values(rest)?, "p")?);
    }
    match t {
        "exp-remainder" => Ok(NFunction::ExpRemainder),
        "complementary" => Ok(NFunction::ComplementaryExpRemainder),
        other => Err(Error::Parse(format!("unknown N-function `{other}`"))),
    }
}

fn load_curve(text: &str) -> Result<LambdaCurve> {
    if text.trim_start().starts_with("powerlaw:") {
        return LambdaCurve::parse(text);
    }
    let body = std::fs::read_to_string(text)
        .map_err(|e| Error::Precondition(format!("cannot read curve `{text}`: {e}")))?;
    LambdaCurve::from_csv_str(&body)
}

fn numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Precondition(format!("cannot read `{}`: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::Parse(format!(
                    "{}: bad row {}: `{line}`",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(rows)
}

type Columns = (Vec<f64>, Vec<f64>, Option<Vec<f64>>);

fn read_columns(path: &Path) -> Result<Columns> {
    let rows = numeric_rows(path)?;
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if !(width == 2 || width == 3) || rows.iter().any(|r| r.len() != width) {
        return Err(Error::Parse(format!(
            "{}: expected 2 or 3 columns per row",
            path.display()
        )));
    }
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    Ok((col(0), col(1), (width == 3).then(|| col(2))))
}

fn read_last_column(path: &Path) -> Result<Vec<f64>> {
    Ok(numeric_rows(path)?
        .into_iter()
        .filter_map(|r| r.last().copied())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_grid_endpoints() {
        let hs = parse_h_grid("1e-8:1e-2:7").unwrap();
        assert_eq!(hs.len(), 7);
        assert!((hs[0] - 1e-8).abs() < 1e-20 && (hs[6] - 1e-2).abs() < 1e-14);
        assert!((hs[1] / hs[0] - 10.0).abs() < 1e-9);
        assert!(parse_h_grid("1:0.5:3").is_err());
        assert!(parse_h_grid("1:2").is_err());
    }

    #[test]
    fn domains() {
        assert_eq!(parse_domain("ball:dim=3", 64).unwrap().dim(), 3);
        assert!(parse_domain("interval:lo=0,hi=1", 64)
            .unwrap()
            .is_interval());
        assert!(parse_domain("ball:dim=2.5", 64).is_err());
        assert!(parse_domain("disk:r=1", 64).is_err());
    }

    #[test]
    fn nfunctions() {
        assert!(matches!(
            parse_nfunction("exp-remainder").unwrap(),
            NFunction::ExpRemainder
        ));
        assert!(matches!(
            parse_nfunction("square:exppoly:p=2").unwrap(),
            NFunction::SquareComposed(_)
        ));
        assert!(parse_nfunction("numeric:exp-remainder").is_ok());
        assert!(parse_nfunction("cosh").is_err());
    }

    #[test]
    fn weights() {
        let f = parse_weight("power:0.5").unwrap();
        assert_eq!(f(4.0), 2.0);
        let g = parse_weight("log:2").unwrap();
        assert!((g(std::f64::consts::E) - 2.0).abs() < 1e-15);
    }
}

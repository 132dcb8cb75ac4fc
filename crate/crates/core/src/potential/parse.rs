//! Compact potential grammar.
//!
//! ```text
//! const:0.5
//! radialexp:alpha=1.5
//! omega:file=omega.csv,exp=2      omega:power=0.5,coeff=1,exp=2
//! omega:invlog=2,exp=2            omega:const=0.5,exp=2
//! grid:file=values.csv
//! prod(A,B)   pow(A,kappa=2)   scale(A,lambda=10)
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{Domain, Omega, Potential, PotentialSpec};
use crate::error::{Error, Result};
use crate::table::MonotoneTable;

pub fn parse_potential(text: &str, domain: Domain) -> Result<PotentialSpec> {
    parse_potential_with_base(text, domain, Path::new("."))
}

/// As [`parse_potential`], resolving `file=` paths against `base`.
pub fn parse_potential_with_base(text: &str, domain: Domain, base: &Path) -> Result<PotentialSpec> {
    let p = Parser {
        base: base.to_path_buf(),
        domain,
    }
    .expr(text.trim())?;
    PotentialSpec::new(p, domain)
}

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse(msg.into()))
}

struct Parser {
    base: PathBuf,
    domain: Domain,
}

impl Parser {
    fn expr(&self, s: &str) -> Result<Potential> {
        if let Some((head, inner)) = call(s) {
            let args = split_top(inner);
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            return match (head, args.as_slice()) {
                ("prod", [a, b]) => Ok(Potential::product(self.expr(a)?, self.expr(b)?)),
                ("pow", [a, k]) => Ok(Potential::power(self.expr(a)?, named(k, "kappa")?)),
                ("scale", [a, l]) => Ok(Potential::scaled(self.expr(a)?, named(l, "lambda")?)),
                ("prod" | "pow" | "scale", _) => {
                    err(format!("`{head}` expects two arguments in `{s}`"))
                }
                _ => err(format!("unknown combinator `{head}`")),
            };
        }
        let Some((kind, body)) = s.split_once(':') else {
            return err(format!("expected `kind:params`, got `{s}`"));
        };
        match kind.trim() {
            "const" => Ok(Potential::Constant(number(body)?)),
            "radialexp" => {
                let kv = pairs(body)?;
                Ok(Potential::RadialExp {
                    alpha: get(&kv, "alpha")?,
                })
            }
            "omega" => self.omega(body),
            "grid" => {
                let kv = pairs(body)?;
                let Some(file) = kv.get("file") else {
                    return err("grid potential needs `file=`");
                };
                let text = std::fs::read_to_string(self.base.join(file))?;
                Ok(Potential::GridSampled(grid_values(
                    &text,
                    self.domain.resolution(),
                )?))
            }
            other => err(format!("unknown potential kind `{other}`")),
        }
    }

    fn omega(&self, body: &str) -> Result<Potential> {
        let kv = pairs(body)?;
        let exponent = get(&kv, "exp")?;
        let omega = if let Some(file) = kv.get("file") {
            let text = std::fs::read_to_string(self.base.join(file))?;
            Omega::Table(MonotoneTable::from_csv_str(&text)?)
        } else if kv.contains_key("power") {
            let coeff = if kv.contains_key("coeff") {
                get(&kv, "coeff")?
            } else {
                1.0
            };
            Omega::Power {
                coeff,
                exponent: get(&kv, "power")?,
            }
        } else if kv.contains_key("invlog") {
            Omega::InvLog {
                power: get(&kv, "invlog")?,
            }
        } else if kv.contains_key("const") {
            Omega::Constant(get(&kv, "const")?)
        } else {
            return err("omega needs one of file=, power=, invlog=, const=");
        };
        Ok(Potential::RadialOmega { omega, exponent })
    }
}

/// `head(inner)` at the top level.
fn call(s: &str) -> Option<(&str, &str)> {
    let open = s.find('(')?;
    if !s.ends_with(')') || s[..open].contains(':') {
        return None;
    }
    Some((s[..open].trim(), &s[open + 1..s.len() - 1]))
}

/// Splits on commas outside parentheses, then re-attaches bare `key=value`
/// tokens to the leaf before them (`prod(omega:power=1,exp=2,const:1)`).
fn split_top(s: &str) -> Vec<String> {
    let mut raw = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                raw.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    raw.push(s[start..].trim());

    let mut parts: Vec<String> = Vec::new();
    for tok in raw {
        let bare = tok.contains('=') && !tok.contains(':') && !tok.contains('(');
        let combinator_arg = matches!(
            tok.split('=').next().map(str::trim),
            Some("kappa" | "lambda")
        );
        match parts.last_mut() {
            Some(prev) if bare && !combinator_arg && leaf_has_options(prev) => {
                prev.push(',');
                prev.push_str(tok);
            }
            _ => parts.push(tok.to_string()),
        }
    }
    parts
}

/// Whether the text is a leaf `kind:k=v,...` whose option list can continue.
fn leaf_has_options(s: &str) -> bool {
    !s.contains('(') && s.split_once(':').is_some_and(|(_, b)| b.contains('='))
}

fn pairs(body: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for item in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let Some((k, v)) = item.split_once('=') else {
            return err(format!("expected `key=value`, got `{item}`"));
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn get(kv: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    match kv.get(key) {
        Some(v) => number(v),
        None => err(format!("missing `{key}=`")),
    }
}

fn named(s: &str, key: &str) -> Result<f64> {
    match s.split_once('=') {
        Some((k, v)) if k.trim() == key => number(v),
        _ => err(format!("expected `{key}=value`, got `{s}`")),
    }
}

fn number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: `{}`", s.trim())))
}

/// One value per line (the last comma-separated column is used).
fn grid_values(text: &str, expected: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or(line).trim();
        match last.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(_) => return err(format!("grid file line {}: `{line}`", i + 1)),
        }
    }
    if out.len() != expected {
        return err(format!(
            "grid file has {} values, domain grid has {expected}",
            out.len()
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> Domain {
        Domain::symmetric_interval(1.0, 32).unwrap()
    }

    #[test]
    fn leaves() {
        assert_eq!(
            parse_potential("const:1.0", dom()).unwrap().potential(),
            &Potential::Constant(1.0)
        );
        assert_eq!(
            parse_potential("radialexp:alpha=1.5", dom())
                .unwrap()
                .potential(),
            &Potential::RadialExp { alpha: 1.5 }
        );
        let p = parse_potential("omega:power=0.3,coeff=2,exp=2", dom()).unwrap();
        assert_eq!(
            p.potential(),
            &Potential::RadialOmega {
                omega: Omega::Power {
                    coeff: 2.0,
                    exponent: 0.3
                },
                exponent: 2.0
            }
        );
    }

    #[test]
    fn combinators() {
        let p = parse_potential("prod(radialexp:alpha=1,const:2)", dom()).unwrap();
        assert_eq!(
            p.potential(),
            &Potential::product(
                Potential::RadialExp { alpha: 1.0 },
                Potential::Constant(2.0)
            )
        );
        let p = parse_potential("scale(pow(radialexp:alpha=1,kappa=2),lambda=10)", dom()).unwrap();
        assert_eq!(
            p.potential(),
            &Potential::scaled(
                Potential::power(Potential::RadialExp { alpha: 1.0 }, 2.0),
                10.0
            )
        );
        let p = parse_potential("prod(omega:invlog=2,exp=2,const:3)", dom()).unwrap();
        assert_eq!(
            p.potential(),
            &Potential::product(
                Potential::RadialOmega {
                    omega: Omega::InvLog { power: 2.0 },
                    exponent: 2.0
                },
                Potential::Constant(3.0)
            )
        );
    }

    #[test]
    fn omega_table_from_file() {
        let dir = std::env::temp_dir().join(format!("eft-omega-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("omega.csv"), "r,omega\n0,0\n0.5,0.5\n1,1\n").unwrap();
        let p = parse_potential_with_base("omega:file=omega.csv,exp=2", dom(), &dir).unwrap();
        assert!(matches!(
            p.potential(),
            Potential::RadialOmega {
                omega: Omega::Table(_),
                ..
            }
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_potential("bogus:1", dom()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_potential("radialexp:beta=1", dom()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_potential("prod(const:1)", dom()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_potential("omega:file=/nonexistent/x.csv,exp=2", dom()),
            Err(Error::Io(_))
        ));
    }
}

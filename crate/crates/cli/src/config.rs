//! Flat `key = value` config files merged into argv; explicit flags win.

use std::path::Path;

use eft_core::Error;

pub fn parse_flat(text: &str) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!(
                "config line {}: expected `key = value`, got `{raw}`",
                i + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Parse(format!("config line {}: empty key", i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn flag_present(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    args.iter()
        .any(|a| *a == long || a.starts_with(&format!("{long}=")))
}

/// Replaces `--config FILE` by the file's entries, skipping keys given as flags.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, Error> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(args);
    };
    let (path, consumed) = match args[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => match args.get(pos + 1) {
            Some(p) => (p.clone(), 2),
            None => return Err(Error::Parameter("--config needs a file".into())),
        },
    };
    let mut rest: Vec<String> = args[..pos].to_vec();
    rest.extend_from_slice(&args[pos + consumed..]);
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| Error::Precondition(format!("cannot read config `{path}`: {e}")))?;
    for (k, v) in parse_flat(&text)? {
        if !flag_present(&rest, &k) {
            rest.push(format!("--{k}"));
            rest.push(v);
        }
    }
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn comments_and_underscores() {
        let kv = parse_flat("# run\nt_max = 2\n dt=0.01 # step\n\n").unwrap();
        assert_eq!(
            kv,
            vec![("t-max".into(), "2".into()), ("dt".into(), "0.01".into())]
        );
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "dt = 0.1\nq = 0.5\n").unwrap();
        let args = strings(&[
            "eft",
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--dt",
            "0.2",
        ]);
        let out = expand(args).unwrap();
        assert_eq!(
            out,
            strings(&["eft", "simulate", "--dt", "0.2", "--q", "0.5"])
        );
    }

    #[test]
    fn missing_file_is_precondition() {
        let err = expand(strings(&[
            "eft",
            "simulate",
            "--config",
            "/nonexistent/x.cfg",
        ]))
        .unwrap_err();
        assert!(err.is_caller_error());
    }

    #[test]
    fn malformed_line() {
        assert!(parse_flat("just words").is_err());
    }
}

//! Run manifests and the single result collector.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use eft_core::Error;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: Vec<(String, String)>,
    pub seed: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        Self {
            subcommand: subcommand.into(),
            params: Vec::new(),
            seed,
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.push((key.into(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "subcommand = {}\nartifact_version = {ARTIFACT_VERSION}\nseed = {}\n",
            self.subcommand, self.seed
        );
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s.push_str(&format!("outputs = {}\n", self.outputs.join(",")));
        s
    }
}

/// Writes to `--out DIR` (manifest first) or to stdout with the manifest on stderr.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn emit(&self, mut manifest: RunManifest, files: &[(&str, String)]) -> Result<(), Error> {
        manifest.outputs = files.iter().map(|(n, _)| n.to_string()).collect();
        match &self.dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("manifest.txt"), manifest.render())?;
                for (name, body) in files {
                    fs::write(dir.join(name), body)?;
                }
                println!("wrote {} file(s) to {}", files.len() + 1, dir.display());
            }
            None => {
                eprint!("{}", manifest.render());
                let mut out = std::io::stdout().lock();
                for (_, body) in files {
                    out.write_all(body.as_bytes())?;
                }
            }
        }
        Ok(())
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashedFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name, without `--out`, with the
    /// resolved `--seed` appended.
    pub command: Vec<String>,
    pub seed: u64,
    pub inputs: Vec<HashedFile>,
    pub outputs: Vec<HashedFile>,
}

/// Output files of one run, written together with the manifest.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    inputs: Vec<HashedFile>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, body: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), body.into()));
    }

    /// Reads an input file and records its hash.
    pub fn input(&mut self, path: &Path) -> Result<String> {
        let text = read_input(path)?;
        self.inputs.push(HashedFile { path: path.display().to_string(), sha256: sha256_hex(text.as_bytes()) });
        Ok(text)
    }

    pub fn write(self, dir: &Path, command: Vec<String>, seed: u64) -> Result<Manifest> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let mut outputs = Vec::new();
        for (name, body) in &self.files {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
            outputs.push(HashedFile { path: name.clone(), sha256: sha256_hex(body) });
        }
        let m = Manifest {
            tool: "roadcast".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            seed,
            inputs: self.inputs,
            outputs,
        };
        let p = dir.join(MANIFEST);
        let body = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
        fs::write(&p, body).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
        Ok(m)
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), format!("manifest: {e}")))
}

/// Drops `--out`/`--seed` from `args` and appends the resolved seed.
pub fn replay_command(args: &[String], seed: u64) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" || a == "--seed" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") || a.starts_with("--seed=") {
            continue;
        }
        out.push(a.clone());
    }
    out.push("--seed".into());
    out.push(seed.to_string());
    out
}

/// Checks recorded input hashes against the files on disk.
pub fn verify_inputs(m: &Manifest) -> Result<()> {
    for f in &m.inputs {
        let text = read_input(Path::new(&f.path))?;
        if sha256_hex(text.as_bytes()) != f.sha256 {
            return Err(Error::Invalid(format!("input {} changed since the recorded run", f.path)));
        }
    }
    Ok(())
}

/// Names of recorded outputs whose bytes differ in `dir`.
pub fn diff_outputs(m: &Manifest, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut bad = Vec::new();
    for f in &m.outputs {
        let p = dir.join(&f.path);
        let body = fs::read(&p).map_err(|e| Error::io(format!("reading {}", p.display()), e))?;
        if sha256_hex(&body) != f.sha256 {
            bad.push(p);
        }
    }
    Ok(bad)
}

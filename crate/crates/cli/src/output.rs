//! Artifacts of a run, written together with a manifest of SHA-256 hashes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::Constants;
use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.txt";
pub const REPORT: &str = "report.txt";

/// Buffered artifacts; nothing touches the disk until [`Outputs::finish`].
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Outputs::default()
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        match self.files.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = bytes,
            None => self.files.push((name.to_string(), bytes)),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes every artifact and then the manifest; returns the manifest path.
    pub fn finish(&self, dir: &Path) -> CliResult<PathBuf> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut manifest = String::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io(&path))?;
            writeln!(manifest, "{}  {}", hex::encode(Sha256::digest(bytes)), name).unwrap();
        }
        let path = dir.join(MANIFEST);
        fs::write(&path, manifest).map_err(io(&path))?;
        Ok(path)
    }
}

/// `key = value` lines, in insertion order.
#[derive(Debug, Default, Clone)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(kind: &str) -> Self {
        let mut r = Report::default();
        r.line("scenario", kind);
        r
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.text, "{key} = {value}").unwrap();
    }

    pub fn section(&mut self, name: &str) {
        writeln!(self.text, "[{name}]").unwrap();
    }

    pub fn constants(&mut self, c: &Constants) {
        self.section("constants");
        self.line("gamma", c.gamma);
        self.line("diffusion", c.diffusion);
        self.line("epsilon", c.epsilon);
        self.line("mass", c.mass);
        self.line("hbar", c.hbar);
        self.line("hbar_source", c.source);
        self.line("lambda", c.lambda);
        self.line("mu", c.chemical_potential());
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

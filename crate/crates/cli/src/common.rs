use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use absa_lab::nn::{Checkpoint, Precision};
use absa_lab::text::{parse_semeval_xml, AtscDataset, AtscExample, Domain, Split, Vocab};
use absa_lab::training::{RunDir, RunDirError};

use crate::config::{echo, usage};

/// Create the run directory and write the resolved config into it.
pub fn start_run<T: Serialize>(out: &Option<PathBuf>, force: bool, resolved: &T) -> Result<RunDir> {
    let out = out.clone().ok_or_else(|| usage("missing --out"))?;
    let rd = RunDir::create(&out, force).map_err(|e| match e {
        RunDirError::Completed(_) => usage(e.to_string()),
        other => anyhow::Error::from(other),
    })?;
    std::fs::write(rd.join("config.toml"), echo(resolved)?)?;
    Ok(rd)
}

pub fn load_vocab(path: &Path) -> Result<Vocab> {
    Vocab::load(path).with_context(|| format!("loading vocabulary {}", path.display()))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

pub fn load_xml(path: &Path, domain: Domain, split: Split) -> Result<Vec<AtscExample>> {
    if !path.exists() {
        return Err(usage(format!("input path does not exist: {}", path.display())));
    }
    let (examples, _) = parse_semeval_xml(path, domain, split).with_context(|| format!("reading {}", path.display()))?;
    Ok(examples)
}

/// Parse `domain=path` entries (or bare paths, which take `default`).
pub fn dataset_from(files: &[PathBuf], default: Option<Domain>, split: Split) -> Result<AtscDataset> {
    let mut examples = Vec::new();
    for f in files {
        let domain = domain_hint(f).or(default).ok_or_else(|| {
            usage(format!("cannot tell the domain of {}; name it after the domain or pass --domain", f.display()))
        })?;
        examples.extend(load_xml(f, domain, split)?);
    }
    Ok(AtscDataset::new(split, examples))
}

/// Domain named in a file name, if exactly one is.
pub fn domain_hint(path: &Path) -> Option<Domain> {
    let name = path.file_name()?.to_string_lossy().to_lowercase();
    let hits: Vec<Domain> = Domain::ALL
        .into_iter()
        .filter(|d| name.contains(d.name().trim_end_matches('s')))
        .collect();
    match hits[..] {
        [d] => Some(d),
        _ => None,
    }
}

pub fn parse_precision(s: &str) -> std::result::Result<Precision, String> {
    match s.to_ascii_lowercase().as_str() {
        "single" | "f32" => Ok(Precision::Single),
        "double" | "f64" => Ok(Precision::Double),
        _ => Err(format!("unknown precision {s:?} (single or double)")),
    }
}

pub fn f(x: f64) -> String {
    format!("{x:.6}")
}

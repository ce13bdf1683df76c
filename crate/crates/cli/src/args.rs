use std::path::PathBuf;

use anyhow::{bail, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Seeds(pub Vec<u64>);

/// `a..b` (exclusive), `a..=b`, or a comma list of integers.
pub fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let s = s.trim();
    let seeds: Vec<u64> = if let Some((lo, hi)) = s.split_once("..=") {
        let (lo, hi) = (num(lo)?, num(hi)?);
        (lo..=hi).collect()
    } else if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi)?);
        (lo..hi).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(format!("seed spec `{s}` selects no seeds"));
    }
    Ok(Seeds(seeds))
}

fn num(s: &str) -> Result<u64, String> {
    s.trim()
        .parse()
        .map_err(|e| format!("bad seed `{}`: {e}", s.trim()))
}

/// Expands inputs into metrics files: a file is taken as-is, a run
/// directory contributes its `metrics.csv`, and a plan directory
/// contributes the `metrics.csv` of every run directory inside it.
pub fn collect_metric_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_file() {
            out.push(input.clone());
            continue;
        }
        if !input.is_dir() {
            bail!("{} does not exist", input.display());
        }
        let direct = input.join("metrics.csv");
        if direct.is_file() {
            out.push(direct);
            continue;
        }
        let mut found: Vec<PathBuf> = std::fs::read_dir(input)?
            .filter_map(|e| e.ok())
            .map(|e| e.path().join("metrics.csv"))
            .filter(|p| p.is_file())
            .collect();
        if found.is_empty() {
            bail!("no metrics.csv under {}", input.display());
        }
        found.sort();
        out.extend(found);
    }
    Ok(out)
}

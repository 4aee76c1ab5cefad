use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{io_err, write_file, CliError, CliResult};
use crate::evaluate::{
    BEST_ALPHA_FILE, EVAL_JSON, FIXED_ALPHA_FILE, HISTOGRAM_FILE, RATIOS_FILE,
    SWEEP_JSON, TIMING_FILE,
};
use crate::pipeline::HISTORY_FILE;

pub const SCHEMA_VERSION: u32 = 1;
pub const INDEX_FILE: &str = "index.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Serialize)]
struct IndexEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Index {
    schema_version: u32,
    files: Vec<IndexEntry>,
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_err(path, e))
}

fn require(dir: &Path, names: &[&str]) -> CliResult<()> {
    let missing: Vec<PathBuf> = names.iter().map(|n| dir.join(n)).filter(|p| !p.exists()).collect();
    match missing.first() {
        None => Ok(()),
        Some(p) => Err(CliError::Missing(p.clone())),
    }
}

/// Collects evaluation, sweep and (optionally) training outputs into one
/// directory with a consolidated `summary.json` and a hashed `index.json`.
///
/// Wall-clock timings vary between runs, so they are bundled only when
/// `include_timings` is set.
pub fn cmd_report(
    eval_dir: &Path,
    sweep_dir: &Path,
    models_dir: Option<&Path>,
    out_dir: &Path,
    include_timings: bool,
) -> CliResult<Vec<String>> {
    require(eval_dir, &[RATIOS_FILE, EVAL_JSON])?;
    require(sweep_dir, &[FIXED_ALPHA_FILE, BEST_ALPHA_FILE, HISTOGRAM_FILE, SWEEP_JSON])?;
    if let Some(m) = models_dir {
        require(m, &[HISTORY_FILE])?;
    }

    let mut copies: Vec<(String, Vec<u8>)> = Vec::new();
    for name in [RATIOS_FILE, EVAL_JSON] {
        copies.push((name.to_string(), read(&eval_dir.join(name))?));
    }
    for name in [FIXED_ALPHA_FILE, BEST_ALPHA_FILE, HISTOGRAM_FILE, SWEEP_JSON] {
        copies.push((name.to_string(), read(&sweep_dir.join(name))?));
    }
    if let Some(m) = models_dir {
        copies.push((HISTORY_FILE.to_string(), read(&m.join(HISTORY_FILE))?));
    }

    let eval: serde_json::Value = serde_json::from_slice(&read(&eval_dir.join(EVAL_JSON))?)?;
    let sweep: serde_json::Value = serde_json::from_slice(&read(&sweep_dir.join(SWEEP_JSON))?)?;
    let summary = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "evaluation": eval,
        "sweep": sweep,
    });
    copies.push((SUMMARY_FILE.to_string(), (serde_json::to_string_pretty(&summary)? + "\n").into_bytes()));

    let timings_path = out_dir.join(TIMINGS_FILE);
    if include_timings {
        let timing = |dir: &Path| -> CliResult<serde_json::Value> {
            match std::fs::read(dir.join(TIMING_FILE)) {
                Ok(bytes) => Ok(serde_json::from_slice(&bytes)?),
                Err(_) => Ok(serde_json::Value::Null),
            }
        };
        let doc = serde_json::json!({ "eval": timing(eval_dir)?, "sweep": timing(sweep_dir)? });
        copies.push((TIMINGS_FILE.to_string(), (serde_json::to_string_pretty(&doc)? + "\n").into_bytes()));
    } else if timings_path.exists() {
        std::fs::remove_file(&timings_path).map_err(|e| io_err(&timings_path, e))?;
    }

    let mut files = Vec::new();
    for (name, bytes) in &copies {
        write_file(&out_dir.join(name), bytes)?;
        files.push(IndexEntry {
            name: name.clone(),
            bytes: bytes.len(),
            sha256: hex(&Sha256::digest(bytes)),
        });
    }
    let index = Index {
        schema_version: SCHEMA_VERSION,
        files,
    };
    write_file(&out_dir.join(INDEX_FILE), serde_json::to_string_pretty(&index)? + "\n")?;

    let mut names: Vec<String> = copies.into_iter().map(|(n, _)| n).collect();
    names.push(INDEX_FILE.to_string());
    Ok(names)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parsed bundle contents, for consumers that want typed access.
pub fn load_bundle(dir: &Path) -> CliResult<(serde_json::Value, serde_json::Value)> {
    let summary: serde_json::Value = serde_json::from_slice(&read(&dir.join(SUMMARY_FILE))?)?;
    let index: serde_json::Value = serde_json::from_slice(&read(&dir.join(INDEX_FILE))?)?;
    Ok((summary, index))
}


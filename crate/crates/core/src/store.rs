//! JSON-lines persistence of scan shots, one `ShotOutcome` per line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::params::Params;
use crate::shooting::{assemble_scan, shot_outcome, ScanResult, ShotOutcome};

pub fn to_json_lines(outcomes: &[ShotOutcome]) -> Result<String> {
    let mut out = String::with_capacity(160 * outcomes.len());
    for o in outcomes {
        let line = serde_json::to_string(o).map_err(|e| Error::Json {
            path: Default::default(),
            source: e,
        })?;
        let _ = writeln!(out, "{line}");
    }
    Ok(out)
}

/// Writes the whole store, replacing the file atomically.
pub fn write_outcomes(path: &Path, outcomes: &[ShotOutcome]) -> Result<()> {
    let text = to_json_lines(outcomes)?;
    let tmp = path.with_extension("jsonl.tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads a store. A malformed final line without a trailing newline (an
/// interrupted write) is dropped; any other malformed line is an error.
pub fn read_outcomes(path: &Path) -> Result<Vec<ShotOutcome>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ShotOutcome>(line) {
            Ok(o) => out.push(o),
            Err(_) if i + 1 == lines.len() && !complete => break,
            Err(e) => {
                return Err(Error::Json {
                    path: path.to_path_buf(),
                    source: e,
                })
            }
        }
    }
    Ok(out)
}

/// Result of a resumable scan.
#[derive(Debug, Clone)]
pub struct ResumedScan {
    pub scan: ScanResult,
    /// Grid points shot in this run.
    pub computed: usize,
    /// Grid points taken from the existing store.
    pub reused: usize,
}

/// Shoots every grid offset not already present in the store at `path`
/// (matched on the exact offset) and rewrites the store in grid order.
pub fn scan_with_store(
    p: &Params,
    offsets: &[f64],
    cfg: &IntegratorConfig,
    jobs: usize,
    root_tol: f64,
    path: &Path,
    resume: bool,
) -> Result<ResumedScan> {
    cfg.validate()?;
    let mut known: HashMap<u64, ShotOutcome> = HashMap::new();
    if resume && path.exists() {
        for o in read_outcomes(path)? {
            known.insert(o.epsilon.to_bits(), o);
        }
    }
    let missing: Vec<f64> = offsets
        .iter()
        .copied()
        .filter(|e| !known.contains_key(&e.to_bits()))
        .collect();
    let fresh = crate::shooting::scan_offsets(p, &missing, cfg, jobs, root_tol)?;
    let computed = fresh.outcomes.len();
    for o in fresh.outcomes {
        known.insert(o.epsilon.to_bits(), o);
    }
    let outcomes: Vec<ShotOutcome> = offsets
        .iter()
        .map(|e| match known.get(&e.to_bits()) {
            Some(o) => Ok(*o),
            None => shot_outcome(p, *e, cfg),
        })
        .collect::<Result<_>>()?;
    let scan = assemble_scan(p, outcomes, root_tol);
    write_outcomes(path, &scan.outcomes)?;
    Ok(ResumedScan {
        reused: offsets.len() - computed,
        computed,
        scan,
    })
}

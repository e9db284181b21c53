//! Run manifests and CSV artifacts.
//!
//! Every experiment writes its table with a leading comment line carrying
//! the manifest hash, so a CSV can always be traced back to the exact
//! inputs that produced it. The hash covers the physical and numerical
//! inputs only (never wall time), and float formatting is fixed-width, so
//! identical inputs give byte-identical tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::EvolutionConfig;
use crate::model::SystemParams;
use crate::Result;

/// Everything needed to reproduce one run, plus bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub params: SystemParams,
    pub evolution: EvolutionConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Experiment-specific inputs (counts, sweep lists, bin widths, ...).
    pub extra: serde_json::Map<String, serde_json::Value>,
    pub tool_version: String,
    /// SHA-256 over the canonical JSON of all inputs above (wall time and
    /// the hash itself excluded).
    pub hash: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(
        experiment: &str,
        params: &SystemParams,
        evolution: &EvolutionConfig,
        master_seed: Option<u64>,
        extra: serde_json::Map<String, serde_json::Value>,
    ) -> Self {
        let mut manifest = Self {
            experiment: experiment.to_string(),
            params: *params,
            evolution: *evolution,
            master_seed,
            extra,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            hash: String::new(),
            wall_time_s: 0.0,
        };
        manifest.hash = manifest.compute_hash();
        manifest
    }

    fn compute_hash(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            experiment: &'a str,
            params: &'a SystemParams,
            evolution: &'a EvolutionConfig,
            master_seed: Option<u64>,
            extra: &'a serde_json::Map<String, serde_json::Value>,
            tool_version: &'a str,
        }
        let canonical = Canonical {
            experiment: &self.experiment,
            params: &self.params,
            evolution: &self.evolution,
            master_seed: self.master_seed,
            extra: &self.extra,
            tool_version: &self.tool_version,
        };
        // serde_json maps are ordered, so this serialization is canonical.
        let bytes = serde_json::to_vec(&canonical).expect("manifest serialization cannot fail");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        fs::write(path, json + "\n")?;
        Ok(())
    }
}

/// Write a numeric table: `# manifest=<hash>`, a header line, then rows in
/// fixed `%.12e` notation.
pub fn write_csv(
    path: &Path,
    manifest_hash: &str,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "# manifest={manifest_hash}")?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let formatted: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(out, "{}", formatted.join(","))?;
    }
    Ok(())
}

/// Same format, but with arbitrary pre-rendered cells (detector labels etc.).
pub fn write_csv_strings(
    path: &Path,
    manifest_hash: &str,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "# manifest={manifest_hash}")?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

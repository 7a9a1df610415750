//! Persisted beam history.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use beamtrain::BeamHistory;
use serde::{Deserialize, Serialize};

use crate::config::parse_json;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HistoryFile {
    pub schema_version: u32,
    pub history: BeamHistory,
}

impl HistoryFile {
    pub fn new(history: BeamHistory) -> Self {
        Self { schema_version: SCHEMA_VERSION, history }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let file: HistoryFile = parse_json(&text, path)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "{}: field `schemaVersion`: unsupported version {} (expected {SCHEMA_VERSION})",
                path.display(),
                file.schema_version
            )));
        }
        if !file.history.is_consistent() {
            return Err(CliError::Config(format!("{}: field `history`: counts are inconsistent", path.display())));
        }
        Ok(file)
    }

    /// Reads the file, or returns `None` if it does not exist yet.
    pub fn read_if_exists(path: &Path) -> CliResult<Option<Self>> {
        match fs::metadata(path) {
            Ok(_) => Self::read(path).map(Some),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CliError::io(path)(e)),
        }
    }

    /// Writes through a temporary sibling so readers never see a partial file.
    pub fn write(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(self).expect("history serializes");
        fs::write(&tmp, text + "\n").map_err(CliError::io(&tmp))?;
        fs::rename(&tmp, path).map_err(CliError::io(path))
    }
}

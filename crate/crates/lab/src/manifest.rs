//! Run manifests: a config snapshot written alongside every output file.
//!
//! A manifest is itself a valid config file; feeding it back through
//! `--config` re-runs the command with the identical resolved settings and
//! reproduces the outputs byte for byte.

use std::path::{Path, PathBuf};

use crate::config::ConfigMap;
use crate::csvout::write_atomic;
use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Resolved settings of one command invocation.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub command: String,
    pub settings: ConfigMap,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        RunManifest { command: command.into(), settings: ConfigMap::empty(), outputs: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.settings.set(key, value.to_string());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command = {}\n", self.command));
        out.push_str(&format!("version = {TOOL_VERSION}\n"));
        for (key, value) in self.settings.iter() {
            out.push_str(&format!("{key} = {value}\n"));
        }
        for output in &self.outputs {
            out.push_str(&format!("output = {}\n", output.display()));
        }
        out
    }

    /// Writes `<output>.manifest` next to the command's primary output.
    pub fn write_next_to(&self, output: &Path) -> Result<PathBuf, CliError> {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest");
        let path = PathBuf::from(name);
        write_atomic(&path, &self.render())?;
        Ok(path)
    }
}

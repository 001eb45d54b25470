//! Key=value configuration files.
//!
//! Flat `key = value` lines with `#` or `;` comments; dotted keys group
//! settings (`dataset.path`, `click_model.name`, ...). Flags override file
//! values, file values override the environment, and run manifests are
//! written in this same format so a manifest can be fed back via
//! `--config`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Parsed configuration key-value pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn empty() -> Self {
        ConfigMap::default()
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Io(format!(
                    "{origin}:{}: expected key = value, got `{line}`",
                    idx + 1
                )));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigMap { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading config {}", path.display()), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Typed lookup; a present-but-unparsable value is a validation error.
    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Validation(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    /// Comma-separated list lookup.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => parse_list(raw)
                .map(Some)
                .map_err(|bad| CliError::Validation(format!("config key `{key}`: {bad}"))),
        }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Parses a comma-separated list, rejecting empty items.
pub fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>, String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("cannot parse list item `{s}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_whitespace() {
        let text = "# comment\nseed = 42\n; another\ndataset.path=x.txt\n\n";
        let map = ConfigMap::parse(text, "test").unwrap();
        assert_eq!(map.get("seed"), Some("42"));
        assert_eq!(map.get("dataset.path"), Some("x.txt"));
        assert_eq!(map.get_parsed::<u64>("seed").unwrap(), Some(42));
        assert_eq!(map.get_parsed::<u64>("missing").unwrap(), None);
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(ConfigMap::parse("just words\n", "test").is_err());
    }

    #[test]
    fn typed_lookup_flags_bad_values() {
        let map = ConfigMap::parse("n = lots\n", "test").unwrap();
        assert!(map.get_parsed::<u64>("n").is_err());
    }

    #[test]
    fn lists_parse_with_spaces() {
        let map = ConfigMap::parse("alpha = 1, 100\n", "test").unwrap();
        assert_eq!(map.get_list::<f64>("alpha").unwrap(), Some(vec![1.0, 100.0]));
    }
}

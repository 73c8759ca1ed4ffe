//! Flat `key = value` configuration files and run manifests.
//!
//! Grammar: one `key = value` pair per line; blank lines and lines starting
//! with `#` are ignored. Resolution order is defaults, then command-line
//! flags, then config-file entries — a config file overrides flags, so a
//! saved manifest replays a run exactly regardless of the flags on the
//! re-run command line.
//!
//! A manifest is a config file with two reserved kinds of metadata keys that
//! resolution skips: `command` and `artifact.*`. Every run writes one into
//! its output directory; re-running the same command with
//! `--config <manifest>` and a fresh `--out` reproduces the artifacts
//! byte-for-byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::CliError;

/// Ordered key -> value settings with provenance-free plain strings.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn set_opt(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::usage(format!("missing required setting {key:?}")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::usage(format!("bad value {raw:?} for {key}"))),
        }
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn parse_bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("on") => Ok(true),
            Some("false") | Some("0") | Some("off") => Ok(false),
            Some(raw) => Err(CliError::usage(format!("bad boolean {raw:?} for {key}"))),
        }
    }

    pub fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse()
                        .map_err(|_| CliError::usage(format!("bad list item {tok:?} for {key}")))
                })
                .collect::<Result<Vec<T>, CliError>>()
                .map(Some),
        }
    }

    /// Applies a config file on top of the current settings. Metadata keys
    /// (`command`, `artifact.*`) are skipped; any key outside `known` is a
    /// usage error.
    pub fn apply_file(&mut self, path: &Path, known: &[&str]) -> Result<(), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!(
                    "{} line {}: expected key = value",
                    path.display(),
                    idx + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key == "command" || key.starts_with("artifact.") {
                continue;
            }
            if !known.contains(&key) {
                return Err(CliError::usage(format!(
                    "{} line {}: unknown setting {key:?}",
                    path.display(),
                    idx + 1
                )));
            }
            self.values.insert(key.to_string(), value.to_string());
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Writes `<out>/manifest.txt` with the command name, the resolved settings,
/// and the relative artifact paths of the run.
pub fn write_manifest(
    out: &Path,
    command: &str,
    settings: &Settings,
    artifacts: &[(&str, &str)],
) -> Result<(), CliError> {
    let mut text = String::new();
    let _ = writeln!(text, "command = {command}");
    for (key, value) in settings.iter() {
        let _ = writeln!(text, "{key} = {value}");
    }
    for (name, path) in artifacts {
        let _ = writeln!(text, "artifact.{name} = {path}");
    }
    let path = out.join("manifest.txt");
    fs::write(&path, text).map_err(|e| CliError::runtime(format!("write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "# comment\nseed = 9\n\nbatch-size = 4\n").unwrap();
        let mut s = Settings::default();
        s.set("seed", 1); // flag value
        s.apply_file(&path, &["seed", "batch-size"]).unwrap();
        assert_eq!(s.get("seed"), Some("9"));
        assert_eq!(s.get("batch-size"), Some("4"));
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "mystery = 1\n").unwrap();
        let mut s = Settings::default();
        assert!(s.apply_file(&path, &["seed"]).is_err());
    }

    #[test]
    fn manifest_metadata_keys_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        fs::write(&path, "command = train\nartifact.trace = trace.csv\nseed = 3\n").unwrap();
        let mut s = Settings::default();
        s.apply_file(&path, &["seed"]).unwrap();
        assert_eq!(s.get("seed"), Some("3"));
        assert_eq!(s.get("command"), None);
    }
}

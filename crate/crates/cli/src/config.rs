//! `key = value` settings files. Command-line flags win over file entries.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

pub const KEYS: [&str; 7] = ["seed", "format", "out", "tol", "max-cells", "refine", "j"];

/// Malformed flags or settings.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, InputError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(InputError(format!("config line {}: expected key=value, got '{raw}'", n + 1)));
            };
            let key = k.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(InputError(format!("config line {}: unknown key '{}'", n + 1, k.trim())));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("reading config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| InputError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>, InputError>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| InputError(format!("config key '{key}': cannot parse '{v}': {e}"))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.entries.get(key).map(PathBuf::from)
    }
}

/// Flag if given, else file entry, else `default`.
pub fn pick<T>(flag: Option<T>, file: &FileConfig, key: &str, default: T) -> Result<T, InputError>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    Ok(match flag {
        Some(v) => v,
        None => file.get(key)?.unwrap_or(default),
    })
}

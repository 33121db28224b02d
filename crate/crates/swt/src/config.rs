//! Flat `key = value` configuration files. Keys are flag names without the
//! leading dashes (`_` and `-` are interchangeable); `#` starts a comment
//! line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    path: PathBuf,
    values: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(path, i + 1, "expected `key = value`"))?;
            let key = k.trim().trim_start_matches("--").replace('_', "-");
            if values.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::parse(path, i + 1, format!("duplicate key `{key}`")));
            }
        }
        Ok(ConfigFile { path: path.to_path_buf(), values })
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.values {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::parse(&self.path, *line, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => {
                v.parse().map(Some).map_err(|e| Error::parse(&self.path, *line, format!("`{key}`: {e}")))
            }
        }
    }

    /// `flag` if given, else the file's value, else `default`.
    pub fn merge<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_merge() {
        let cfg = ConfigFile::parse("# c\nlr = 0.1\n--epochs=7\n\nexplore_epochs = 3\n", Path::new("c")).unwrap();
        assert_eq!(cfg.merge(None, "lr", 0.05).unwrap(), 0.1);
        assert_eq!(cfg.merge(Some(0.2), "lr", 0.05).unwrap(), 0.2);
        assert_eq!(cfg.merge::<usize>(None, "epochs", 500).unwrap(), 7);
        assert_eq!(cfg.merge(None, "alpha", 0.1).unwrap(), 0.1);
        assert_eq!(cfg.merge::<usize>(None, "explore-epochs", 100).unwrap(), 3);
        assert!(cfg.check_keys(&["lr", "epochs", "explore-epochs"]).is_ok());
        assert!(cfg.check_keys(&["lr"]).is_err());
        assert!(cfg.get::<usize>("lr").is_err());
        assert!(ConfigFile::parse("lr\n", Path::new("c")).is_err());
        assert!(ConfigFile::parse("a=1\na=2\n", Path::new("c")).is_err());
    }
}

//! Flat `key = value` run configs. Command-line values win over file values.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    /// Keys the command asked for, in order, with the value it ended up using.
    effective: Vec<(String, String)>,
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Format(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(CliError::Format(format!("config line {}: empty key", i + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Format(format!("config line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(map)
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => parse_config(&std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?)?,
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            effective: Vec::new(),
        })
    }

    fn file_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.file
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Format(format!("config key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    /// Command line, then config file, else `None`.
    pub fn opt<T: FromStr + Display>(&mut self, key: &str, cli: Option<T>) -> Result<Option<T>, CliError> {
        let v = match cli {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &v {
            self.effective.push((key.to_string(), v.to_string()));
        }
        Ok(v)
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, cli: Option<T>, default: T) -> Result<T, CliError> {
        Ok(match self.opt(key, cli)? {
            Some(v) => v,
            None => {
                self.effective.push((key.to_string(), default.to_string()));
                default
            }
        })
    }

    pub fn require<T: FromStr + Display>(&mut self, key: &str, cli: Option<T>) -> Result<T, CliError> {
        self.opt(key, cli)?
            .ok_or_else(|| CliError::Usage(format!("missing required setting {key} (flag --{} or config key)", key.replace('_', "-"))))
    }

    /// Fails on config keys the command never read.
    pub fn finish(&self) -> Result<(), CliError> {
        let unknown: Vec<&str> = self
            .file
            .keys()
            .filter(|k| !self.effective.iter().any(|(e, _)| e == *k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Format(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }

    pub fn effective(&self) -> &[(String, String)] {
        &self.effective
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_junk() {
        let m = parse_config("# run\nseed = 7\n\np=1.5\n").unwrap();
        assert_eq!(m["seed"], "7");
        assert_eq!(m["p"], "1.5");
        assert!(parse_config("seed 7").is_err());
        assert!(parse_config("a=1\na=2").is_err());
    }

    #[test]
    fn command_line_wins() {
        let mut s = Settings {
            file: parse_config("seed = 7\nc = 3").unwrap(),
            effective: Vec::new(),
        };
        assert_eq!(s.require::<u64>("seed", Some(9)).unwrap(), 9);
        assert_eq!(s.get::<f64>("c", None, 2.0).unwrap(), 3.0);
        assert_eq!(s.get::<f64>("p", None, 1.5).unwrap(), 1.5);
        s.finish().unwrap();
        let mut s = Settings {
            file: parse_config("bogus = 1").unwrap(),
            effective: Vec::new(),
        };
        assert!(s.opt::<u64>("seed", None).unwrap().is_none());
        assert!(s.finish().is_err());
    }
}

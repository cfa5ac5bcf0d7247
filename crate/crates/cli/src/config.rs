//! INI-style run configuration with strict key checking.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use lighthill_core::{Error, Result};

/// Key/value tables by section. Every lookup records the key and the value
/// actually used, so unknown keys can be rejected and the effective
/// configuration echoed.
#[derive(Debug, Default)]
pub struct RunConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    used: BTreeMap<String, BTreeMap<String, String>>,
}

pub const GENERAL: &str = "general";

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Parse { line: e.line, msg: e.msg.to_string() })?;
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (sec, props) in ini.iter() {
            let name = sec.unwrap_or(GENERAL).to_string();
            let table = sections.entry(name).or_default();
            for (k, v) in props.iter() {
                table.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(RunConfig { sections, used: BTreeMap::new() })
    }

    /// Overrides from `--set section.key=value`.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (lhs, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("expected section.key=value, got '{assignment}'")))?;
        let (sec, key) = lhs.trim().split_once('.').unwrap_or((GENERAL, lhs.trim()));
        self.sections.entry(sec.to_string()).or_default().insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get<T: FromStr + ToString>(&mut self, section: &str, key: &str, default: T) -> Result<T> {
        let raw = self.sections.get(section).and_then(|s| s.get(key)).cloned();
        let value = match raw {
            Some(v) => v.parse::<T>().map_err(|_| Error::invalid(format!("[{section}] {key} = '{v}' is not valid")))?,
            None => default,
        };
        self.used.entry(section.to_string()).or_default().insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn get_opt<T: FromStr + ToString>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        let raw = self.sections.get(section).and_then(|s| s.get(key)).cloned();
        let Some(v) = raw else {
            return Ok(None);
        };
        let value = v.parse::<T>().map_err(|_| Error::invalid(format!("[{section}] {key} = '{v}' is not valid")))?;
        self.used.entry(section.to_string()).or_default().insert(key.to_string(), value.to_string());
        Ok(Some(value))
    }

    /// Whitespace- or comma-separated list.
    pub fn get_list<T: FromStr + ToString + Clone>(&mut self, section: &str, key: &str, default: &[T]) -> Result<Vec<T>> {
        let raw = self.sections.get(section).and_then(|s| s.get(key)).cloned();
        let values = match raw {
            Some(v) => v
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<T>().map_err(|_| Error::invalid(format!("[{section}] {key}: '{s}' is not valid"))))
                .collect::<Result<Vec<T>>>()?,
            None => default.to_vec(),
        };
        let echo = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        self.used.entry(section.to_string()).or_default().insert(key.to_string(), echo);
        Ok(values)
    }

    pub fn path(&mut self, section: &str, key: &str, default: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.get::<String>(section, key, default.to_string())?))
    }

    /// Fails on any key the command never asked for, or any section other
    /// than `general` and the command's own.
    pub fn reject_unknown(&self, command: &str) -> Result<()> {
        for (sec, table) in &self.sections {
            if sec != GENERAL && sec != command {
                return Err(Error::invalid(format!("unknown section [{sec}] for command '{command}'")));
            }
            for key in table.keys() {
                let known = self.used.get(sec).is_some_and(|u| u.contains_key(key));
                if !known {
                    return Err(Error::invalid(format!("unknown key '{key}' in section [{sec}]")));
                }
            }
        }
        Ok(())
    }

    /// Effective configuration, every key the run consumed with the value used.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (sec, table) in &self.used {
            let _ = writeln!(s, "[{sec}]");
            for (k, v) in table {
                let _ = writeln!(s, "{k} = {v}");
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let mut c = RunConfig::parse("seed = 3\n[intersect]\nacoustic = a.mesh\ntypo = 1\n").unwrap();
        assert_eq!(c.get(GENERAL, "seed", 0u64).unwrap(), 3);
        let _ = c.get::<String>("intersect", "acoustic", String::new()).unwrap();
        let err = c.reject_unknown("intersect").unwrap_err();
        assert!(err.to_string().contains("typo"));
    }

    #[test]
    fn foreign_section_rejected() {
        let c = RunConfig::parse("[vortex-pair]\ndt = 0.1\n").unwrap();
        assert!(c.reject_unknown("intersect").is_err());
    }

    #[test]
    fn lists_and_overrides() {
        let mut c = RunConfig::parse("[project-sweep]\ndegrees = 1, 2 3\n").unwrap();
        c.set("project-sweep.refinements=2 4").unwrap();
        assert_eq!(c.get_list("project-sweep", "degrees", &[9usize]).unwrap(), vec![1, 2, 3]);
        assert_eq!(c.get_list("project-sweep", "refinements", &[9usize]).unwrap(), vec![2, 4]);
        c.reject_unknown("project-sweep").unwrap();
        assert!(c.echo().contains("degrees = 1 2 3"));
    }

    #[test]
    fn bad_value_is_an_error() {
        let mut c = RunConfig::parse("[general]\nworkers = many\n").unwrap();
        assert!(c.get(GENERAL, "workers", 1usize).is_err());
    }
}

//! Flat `section.key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Strings are
//! unquoted, booleans are `true`/`false`, numbers are decimal, lists are
//! comma-separated. Every key must be consumed by the reader; leftovers are
//! reported as unknown keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Io(String),
    Syntax(String),
    UnknownKey(String),
    Duplicate { key: String, first: usize },
    Missing(String),
    InvalidValue { key: String, value: String, expected: &'static str },
    Range { key: String, reason: String },
}

/// A configuration error; `line` is 1-based and absent only for errors not
/// tied to a line (I/O failures and missing keys).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: ")?,
            None => write!(f, "config: ")?,
        }
        match &self.kind {
            ConfigErrorKind::Io(e) => write!(f, "{e}"),
            ConfigErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ConfigErrorKind::UnknownKey(k) => write!(f, "unknown key `{k}`"),
            ConfigErrorKind::Duplicate { key, first } => {
                write!(f, "duplicate key `{key}` (first set on line {first})")
            }
            ConfigErrorKind::Missing(k) => write!(f, "missing required key `{k}`"),
            ConfigErrorKind::InvalidValue { key, value, expected } => {
                write!(f, "`{key}` = `{value}` is not {expected}")
            }
            ConfigErrorKind::Range { key, reason } => write!(f, "range violation for `{key}`: {reason}"),
        }
    }
}

impl ConfigError {
    fn at(line: usize, kind: ConfigErrorKind) -> Self {
        Self { line: Some(line), kind }
    }
}

/// Parsed but untyped entries, consumed key by key.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pending: BTreeMap<String, (String, usize)>,
    lines: BTreeMap<String, usize>,
}

impl FromStr for RawConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RawConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let Some((k, v)) = t.split_once('=') else {
                return Err(ConfigError::at(line, ConfigErrorKind::Syntax(format!("expected `key = value`, got `{t}`"))));
            };
            let (k, v) = (k.trim(), v.trim());
            let valid_key = !k.is_empty()
                && k.split('.').all(|part| {
                    !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                });
            if !valid_key {
                return Err(ConfigError::at(line, ConfigErrorKind::Syntax(format!("malformed key `{k}`"))));
            }
            if let Some(&first) = cfg.lines.get(k) {
                return Err(ConfigError::at(
                    line,
                    ConfigErrorKind::Duplicate {
                        key: k.to_string(),
                        first,
                    },
                ));
            }
            cfg.lines.insert(k.to_string(), line);
            cfg.pending.insert(k.to_string(), (v.to_string(), line));
        }
        Ok(cfg)
    }
}

/// Values readable from a config entry.
pub trait ConfigValue: Sized {
    const EXPECTED: &'static str;
    fn parse_value(s: &str) -> Option<Self>;
}

impl ConfigValue for f64 {
    const EXPECTED: &'static str = "a finite decimal number";
    fn parse_value(s: &str) -> Option<Self> {
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    }
}

impl ConfigValue for usize {
    const EXPECTED: &'static str = "a non-negative integer";
    fn parse_value(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl ConfigValue for u64 {
    const EXPECTED: &'static str = "a non-negative 64-bit integer";
    fn parse_value(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl ConfigValue for bool {
    const EXPECTED: &'static str = "`true` or `false`";
    fn parse_value(s: &str) -> Option<Self> {
        match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        }
    }
}

impl ConfigValue for String {
    const EXPECTED: &'static str = "a string";
    fn parse_value(s: &str) -> Option<Self> {
        (!s.is_empty()).then(|| s.to_string())
    }
}

impl ConfigValue for Vec<f64> {
    const EXPECTED: &'static str = "a comma-separated list of finite numbers";
    fn parse_value(s: &str) -> Option<Self> {
        s.split(',').map(|p| f64::parse_value(p.trim())).collect::<Option<Vec<_>>>().filter(|v| !v.is_empty())
    }
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            kind: ConfigErrorKind::Io(format!("{}: {e}", path.display())),
        })?;
        text.parse()
    }

    /// Line on which `key` was set, if it was.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.lines.contains_key(key)
    }

    pub fn get<T: ConfigValue>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        let Some((v, line)) = self.pending.remove(key) else {
            return Ok(None);
        };
        T::parse_value(&v).map(Some).ok_or_else(|| {
            ConfigError::at(
                line,
                ConfigErrorKind::InvalidValue {
                    key: key.to_string(),
                    value: v,
                    expected: T::EXPECTED,
                },
            )
        })
    }

    pub fn get_or<T: ConfigValue>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: ConfigValue>(&mut self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError {
            line: None,
            kind: ConfigErrorKind::Missing(key.to_string()),
        })
    }

    /// Range error for `key`, located at the line where it was set.
    pub fn range_error(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line_of(key),
            kind: ConfigErrorKind::Range {
                key: key.to_string(),
                reason: reason.into(),
            },
        }
    }

    /// Attribute a module validation message to the key of `section` whose
    /// field name occurs first in it.
    pub fn attribute(&self, section: &str, fields: &[&str], reason: impl Into<String>) -> ConfigError {
        let reason = reason.into();
        let is_word = |c: Option<char>| c.is_some_and(|c| c.is_ascii_alphanumeric() || c == '_');
        let position = |name: &str| {
            reason.match_indices(name).map(|(i, _)| i).find(|&i| {
                !is_word(reason[..i].chars().next_back()) && !is_word(reason[i + name.len()..].chars().next())
            })
        };
        let key = fields
            .iter()
            .filter_map(|f| position(f).map(|p| (p, *f)))
            .min()
            .map(|(_, f)| format!("{section}.{f}"))
            .unwrap_or_else(|| section.to_string());
        self.range_error(&key, reason)
    }

    /// Fail on any key not consumed so far.
    pub fn finish(self) -> Result<(), ConfigError> {
        match self.pending.iter().min_by_key(|(_, (_, line))| *line) {
            Some((k, (_, line))) => Err(ConfigError::at(*line, ConfigErrorKind::UnknownKey(k.clone()))),
            None => Ok(()),
        }
    }
}

/// Writer for the same format, used to echo fully resolved configurations.
#[derive(Debug, Default, Clone)]
pub struct ConfigWriter {
    out: String,
}

impl ConfigWriter {
    pub fn comment(&mut self, text: &str) -> &mut Self {
        for l in text.lines() {
            self.out.push_str("# ");
            self.out.push_str(l);
            self.out.push('\n');
        }
        self
    }

    pub fn set(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.out.push_str(&format!("{key} = {value}\n"));
        self
    }

    pub fn list(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let v: Vec<String> = values.iter().map(f64::to_string).collect();
        self.set(key, v.join(", "))
    }

    pub fn finish(&self) -> String {
        self.out.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_consumes() {
        let mut c: RawConfig = "# header\n\nparticles.n = 10\nparticles.reversals = true\nscan.kappas = 0.5, 2,10\n"
            .parse()
            .unwrap();
        assert_eq!(c.get::<usize>("particles.n").unwrap(), Some(10));
        assert!(c.get::<bool>("particles.reversals").unwrap().unwrap());
        assert_eq!(c.get::<Vec<f64>>("scan.kappas").unwrap().unwrap(), vec![0.5, 2.0, 10.0]);
        assert_eq!(c.get_or("particles.dt", 0.25).unwrap(), 0.25);
        c.finish().unwrap();
    }

    #[test]
    fn duplicate_reports_both_lines() {
        let e = "a.x = 1\n\na.x = 2\n".parse::<RawConfig>().unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(
            e.kind,
            ConfigErrorKind::Duplicate {
                key: "a.x".into(),
                first: 1
            }
        );
        let msg = e.to_string();
        assert!(msg.contains("line 3") && msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn unknown_key_has_line() {
        let mut c: RawConfig = "a.x = 1\na.typo = 2\n".parse().unwrap();
        let _ = c.get::<f64>("a.x").unwrap();
        let e = c.finish().unwrap_err();
        assert_eq!(e.line, Some(2));
        assert_eq!(e.kind, ConfigErrorKind::UnknownKey("a.typo".into()));
    }

    #[test]
    fn bad_values_and_syntax() {
        let mut c: RawConfig = "a.x = fast\na.flag = yes\na.n = -3\n".parse().unwrap();
        assert_eq!(c.get::<f64>("a.x").unwrap_err().line, Some(1));
        assert_eq!(c.get::<bool>("a.flag").unwrap_err().line, Some(2));
        assert_eq!(c.get::<usize>("a.n").unwrap_err().line, Some(3));
        assert_eq!("a.x 1".parse::<RawConfig>().unwrap_err().line, Some(1));
        assert_eq!("a..x = 1".parse::<RawConfig>().unwrap_err().line, Some(1));
        assert!("a.x = nan".parse::<RawConfig>().unwrap().get::<f64>("a.x").is_err());
    }

    #[test]
    fn missing_required_key() {
        let mut c = RawConfig::default();
        let e = c.require::<String>("experiment.kind").unwrap_err();
        assert_eq!(e.kind, ConfigErrorKind::Missing("experiment.kind".into()));
    }

    #[test]
    fn attribution_picks_first_named_field() {
        let c: RawConfig = "p.nu = 20\np.dt = 0.1\np.radius = 3\n".parse().unwrap();
        let e = c.attribute("p", &["radius", "nu", "dt"], "nu*dt must be <= 0.1");
        assert_eq!(e.line, Some(1));
        let e = c.attribute("p", &["radius", "nu", "dt"], "radius must satisfy R < box_length/2");
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn writer_round_trips() {
        let mut w = ConfigWriter::default();
        w.comment("generated").set("a.x", 0.1 + 0.2).list("a.l", &[1.0, 1e-300]).set("a.s", "front");
        let mut c: RawConfig = w.finish().parse().unwrap();
        assert_eq!(c.require::<f64>("a.x").unwrap(), 0.1 + 0.2);
        assert_eq!(c.require::<Vec<f64>>("a.l").unwrap(), vec![1.0, 1e-300]);
        assert_eq!(c.require::<String>("a.s").unwrap(), "front");
    }
}

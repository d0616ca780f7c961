//! Flat `key = value` experiment configs.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key ws* '=' ws* value ws* comment?
//! key     := [a-z0-9_]+
//! value   := item (',' item)*
//! ```
//!
//! Numbers are plain decimal or exponent literals. Time-like keys accept a
//! trailing `tau0`, meaning a multiple of the internal period (`t_end = 10 tau0`).
//! A key may appear only once.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Closest candidate by edit distance, if it is plausibly a typo.
pub fn suggest<'a>(word: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(word, c), c))
        .filter(|(d, c)| *d <= 2.max(c.len() / 3))
        .min()
        .map(|(_, c)| c)
}

#[derive(Clone, Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
    /// Source name for error messages.
    pub origin: String,
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("{origin}:{line_no}: expected `key = value`, got `{line}`"));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || !k.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_') {
                return err(format!("{origin}:{line_no}: invalid key `{k}`"));
            }
            if v.is_empty() {
                return err(format!("{origin}:{line_no}: empty value for `{k}`"));
            }
            if let Some((prev, _)) = entries.insert(k.to_string(), (line_no, v.to_string())) {
                return err(format!("{origin}:{line_no}: `{k}` already set on line {prev}"));
            }
        }
        Ok(Self {
            entries,
            origin: origin.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Rejects keys outside `allowed`, suggesting the nearest allowed key.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for (k, (line, _)) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                let hint = suggest(k, allowed.iter().copied())
                    .map(|s| format!("; did you mean `{s}`?"))
                    .unwrap_or_default();
                return err(format!("{}:{line}: unknown key `{k}`{hint}", self.origin));
            }
        }
        Ok(())
    }

    fn bad(&self, key: &str, what: &str) -> ConfigError {
        let line = self.entries.get(key).map(|(l, _)| *l).unwrap_or(0);
        ConfigError(format!("{}:{line}: `{key}` {what}", self.origin))
    }

    fn number(&self, key: &str, item: &str, tau0: Option<f64>) -> Result<f64, ConfigError> {
        let item = item.trim();
        let (num, scale) = match (item.strip_suffix("tau0"), tau0) {
            (Some(head), Some(t)) => (head.trim(), t),
            (Some(_), None) => return Err(self.bad(key, "does not accept the `tau0` suffix")),
            (None, _) => (item, 1.0),
        };
        let v: f64 = num
            .parse()
            .map_err(|_| self.bad(key, &format!("expects a number, got `{item}`")))?;
        if !v.is_finite() {
            return Err(self.bad(key, "must be finite"));
        }
        Ok(v * scale)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => self.number(key, v, None),
        }
    }

    /// Time value; `tau0` is the suffix multiplier.
    pub fn time_or(&self, key: &str, default: f64, tau0: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => self.number(key, v, Some(tau0)),
        }
    }

    pub fn list_f64_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|s| self.number(key, s, None)).collect(),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| self.bad(key, &format!("expects a non-negative integer, got `{v}`"))),
        }
    }

    pub fn list_usize_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| self.bad(key, &format!("expects integers, got `{}`", s.trim())))
                })
                .collect(),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(self.bad(key, &format!("expects `true` or `false`, got `{v}`"))),
        }
    }

    /// One of `choices`, with a suggestion on a near miss.
    pub fn choice_or<'a>(&self, key: &str, choices: &[&'a str], default: &'a str) -> Result<&'a str, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(default);
        };
        if let Some(c) = choices.iter().find(|c| **c == v) {
            return Ok(c);
        }
        let hint = suggest(v, choices.iter().copied())
            .map(|s| format!("; did you mean `{s}`?"))
            .unwrap_or_default();
        Err(self.bad(key, &format!("must be one of {}, got `{v}`{hint}", choices.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        let c = Config::parse("# header\nexperiment = spectrum  # trailing\n\nn = 16\nk0 = 0.1, 0.5,2\nt_end = 10 tau0\n", "t")
            .unwrap();
        assert_eq!(c.raw("experiment"), Some("spectrum"));
        assert_eq!(c.usize_or("n", 0).unwrap(), 16);
        assert_eq!(c.list_f64_or("k0", &[]).unwrap(), vec![0.1, 0.5, 2.0]);
        assert_eq!(c.time_or("t_end", 0.0, 2.0).unwrap(), 20.0);
        assert!(c.f64_or("t_end", 0.0).is_err());
    }

    #[test]
    fn malformed_lines() {
        assert!(Config::parse("n 16", "t").is_err());
        assert!(Config::parse("N = 16", "t").is_err());
        assert!(Config::parse("n =", "t").is_err());
        assert!(Config::parse("n = 1\nn = 2", "t").is_err());
        let c = Config::parse("n = sixteen", "t").unwrap();
        assert!(c.usize_or("n", 0).is_err());
    }

    #[test]
    fn unknown_keys_get_suggestions() {
        let c = Config::parse("sigmaa = 2", "t").unwrap();
        let e = c.check_keys(&["sigma", "k0"]).unwrap_err();
        assert!(e.0.contains("did you mean `sigma`"), "{e}");
        let c = Config::parse("branch = postive", "t").unwrap();
        let e = c.choice_or("branch", &["positive", "negative"], "positive").unwrap_err();
        assert!(e.0.contains("did you mean `positive`"));
    }
}

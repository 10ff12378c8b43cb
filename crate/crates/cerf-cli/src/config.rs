use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, Result};

/// Flat sectioned key–value config text:
///
/// ```text
/// [kernel]
/// family = gaussian
/// kappa = 1.0
/// ```
///
/// `#` and `;` start comments. Every key must appear in the schema the
/// command declares; unknown sections or keys are usage errors.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<(String, String), String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = match raw.find(['#', ';']) {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| format!("line {lineno}: unterminated section header"))?;
                section = name.trim().to_string();
                if section.is_empty() {
                    return Err(format!("line {lineno}: empty section name"));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {lineno}: expected key = value"))?;
            if section.is_empty() {
                return Err(format!("line {lineno}: key before any [section]"));
            }
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(format!("line {lineno}: empty key"));
            }
            if values
                .insert((section.clone(), key.clone()), value.trim().to_string())
                .is_some()
            {
                return Err(format!("line {lineno}: duplicate key '{section}.{key}'"));
            }
        }
        Ok(ConfigFile { values })
    }

    /// Rejects any key not named in `schema` (pairs of section, key).
    pub fn check_schema(&self, schema: &[(&str, &str)]) -> Result<()> {
        for (section, key) in self.values.keys() {
            if !schema
                .iter()
                .any(|(s, k)| s == section && k == key)
            {
                return Err(CliError::Usage(format!(
                    "unknown config key '{section}.{key}'"
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Usage(format!(
                    "config key '{section}.{key}': cannot parse '{raw}'"
                ))
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let cfg = ConfigFile::parse("[a]\nx = 1 # inline\n; full line\n[b]\ny = two\n").unwrap();
        assert_eq!(cfg.get("a", "x"), Some("1"));
        assert_eq!(cfg.get("b", "y"), Some("two"));
        assert_eq!(cfg.get_parsed::<u64>("a", "x").unwrap(), Some(1));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("x = 1").unwrap_err().contains("before any"));
        assert!(ConfigFile::parse("[a]\nnovalue").unwrap_err().contains("key = value"));
        assert!(ConfigFile::parse("[a\nx = 1").unwrap_err().contains("unterminated"));
        assert!(ConfigFile::parse("[a]\nx = 1\nx = 2").unwrap_err().contains("duplicate"));
    }

    #[test]
    fn schema_rejects_unknown_keys() {
        let cfg = ConfigFile::parse("[a]\nx = 1\nz = 3").unwrap();
        assert!(cfg.check_schema(&[("a", "x")]).is_err());
        assert!(cfg.check_schema(&[("a", "x"), ("a", "z")]).is_ok());
    }
}

//! Settings: command-line flags override the TOML config file, which
//! overrides built-in defaults.
//!
//! Recognised keys: `alpha`, `level`, `corr_threshold`,
//! `antagonism_tolerance`, `delimiter`, `strict_hierarchy`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub level: Option<f64>,
    pub corr_threshold: Option<f64>,
    pub antagonism_tolerance: Option<f64>,
    pub delimiter: Option<String>,
    pub strict_hierarchy: Option<bool>,
}

impl FileConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config '{}': {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub alpha: f64,
    pub level: f64,
    pub corr_threshold: f64,
    pub antagonism_tolerance: f64,
    pub delimiter: u8,
    pub strict_hierarchy: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            alpha: condreg_core::DEFAULT_ALPHA,
            level: 0.95,
            corr_threshold: condreg_core::DEFAULT_CORR_THRESHOLD,
            antagonism_tolerance: 0.05,
            delimiter: b',',
            strict_hierarchy: false,
        }
    }
}

/// Values given on the command line; `None` means "not given".
pub type Overrides = FileConfig;

fn delimiter_byte(s: &str) -> CliResult<u8> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(CliError::Config(format!("delimiter must be a single ASCII character, got '{s}'"))),
    }
}

fn open_unit(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl Settings {
    pub fn resolve(file: &FileConfig, flags: &Overrides) -> CliResult<Self> {
        let d = Self::default();
        let pick = |flag: Option<f64>, file: Option<f64>, default: f64| flag.or(file).unwrap_or(default);
        let delimiter = match flags.delimiter.as_ref().or(file.delimiter.as_ref()) {
            Some(s) => delimiter_byte(s)?,
            None => d.delimiter,
        };
        let tol = pick(flags.antagonism_tolerance, file.antagonism_tolerance, d.antagonism_tolerance);
        if !(0.0..1.0).contains(&tol) {
            return Err(CliError::Config(format!("antagonism_tolerance must lie in [0, 1), got {tol}")));
        }
        Ok(Self {
            alpha: open_unit("alpha", pick(flags.alpha, file.alpha, d.alpha))?,
            level: open_unit("level", pick(flags.level, file.level, d.level))?,
            corr_threshold: open_unit(
                "corr_threshold",
                pick(flags.corr_threshold, file.corr_threshold, d.corr_threshold),
            )?,
            antagonism_tolerance: tol,
            delimiter,
            strict_hierarchy: flags.strict_hierarchy.or(file.strict_hierarchy).unwrap_or(d.strict_hierarchy),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file = FileConfig::parse("alpha = 0.1\nlevel = 0.9\ndelimiter = \";\"\n").unwrap();
        let flags = Overrides { alpha: Some(0.01), ..Default::default() };
        let s = Settings::resolve(&file, &flags).unwrap();
        assert_eq!((s.alpha, s.level, s.delimiter), (0.01, 0.9, b';'));
        assert_eq!(s.corr_threshold, 0.7);
        assert_eq!(Settings::resolve(&FileConfig::default(), &Overrides::default()).unwrap(), Settings::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(FileConfig::parse("alpah = 0.1").is_err());
        assert!(FileConfig::parse("alpha = \"x\"").is_err());
        let bad = FileConfig { alpha: Some(1.0), ..Default::default() };
        assert!(Settings::resolve(&bad, &Overrides::default()).is_err());
        let bad = FileConfig { delimiter: Some(";;".into()), ..Default::default() };
        assert!(Settings::resolve(&bad, &Overrides::default()).is_err());
        let tab = FileConfig { delimiter: Some("\\t".into()), ..Default::default() };
        assert_eq!(Settings::resolve(&tab, &Overrides::default()).unwrap().delimiter, b'\t');
    }
}

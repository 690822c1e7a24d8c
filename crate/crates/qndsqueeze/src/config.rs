//! Flat `key = value` configuration files and flag/file/default layering.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::CliError;

/// Keys accepted in a config file. Dashes in flag names become underscores.
pub const KNOWN_KEYS: &[&str] = &[
    "n",
    "n_list",
    "m",
    "eta",
    "law",
    "scale",
    "lambda0",
    "dt",
    "t_max",
    "sample_every",
    "k",
    "seed",
    "index",
    "threads",
    "output",
    "dump_dir",
    "preset",
    "regime",
    "gamma",
    "kappa",
    "g",
    "area",
    "area_min",
    "wavelength",
    "power",
    "detuning",
    "omega",
    "feedback_delay",
    "alpha_override",
    "epsilon",
];

/// Parsed config file: key to (value, line number).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(msg) => CliError::Validation(format!("{}:{msg}", path.display())),
            other => other,
        })
    }

    /// One `key = value` per line; `#` starts a comment; blank lines ignored.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("{line_no}: expected `key = value`, found `{line}`"))
            })?;
            let key = key.trim().replace('-', "_");
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Validation(format!(
                    "{line_no}: unknown key `{key}`"
                )));
            }
            if value.is_empty() {
                return Err(CliError::Validation(format!(
                    "{line_no}: key `{key}` has no value"
                )));
            }
            if let Some((_, first)) = entries.insert(key.clone(), (value, line_no)) {
                return Err(CliError::Validation(format!(
                    "{line_no}: key `{key}` repeats line {first}"
                )));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Typed lookup with a line-numbered diagnostic on parse failure.
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e| {
                CliError::Validation(format!("{line}: bad value `{v}` for `{key}`: {e}"))
            }),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => match v.as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                _ => Err(CliError::Validation(format!(
                    "{line}: bad value `{v}` for `{key}`: expected true or false"
                ))),
            },
        }
    }
}

/// flag > file > default.
pub fn layer<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Parses `10,20,30` or a range `10..100:10` (inclusive, with step).
pub fn parse_n_list(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = |why: &str| CliError::Validation(format!("n_list `{s}`: {why}"));
    let list: Vec<u32> = if let Some((range, step)) = s.split_once(':') {
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| bad("expected lo..hi:step"))?;
        let lo: u32 = lo.trim().parse().map_err(|_| bad("bad lower bound"))?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad("bad upper bound"))?;
        let step: u32 = step.trim().parse().map_err(|_| bad("bad step"))?;
        if step == 0 {
            return Err(bad("step must be positive"));
        }
        (lo..=hi).step_by(step as usize).collect()
    } else {
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| bad("entries must be positive integers"))
            })
            .collect::<Result<_, _>>()?
    };
    if list.is_empty() || list[0] == 0 {
        return Err(bad("atom numbers must be positive"));
    }
    if list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("must be strictly increasing"));
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_spacing() {
        let c = ConfigFile::parse("# run\n n = 20 \n\neta=0.5 # inline\nt-max = 1.5\n").unwrap();
        assert_eq!(c.get::<u32>("n").unwrap(), Some(20));
        assert_eq!(c.get::<f64>("eta").unwrap(), Some(0.5));
        assert_eq!(c.get::<f64>("t_max").unwrap(), Some(1.5));
        assert_eq!(c.get::<f64>("dt").unwrap(), None);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let e = ConfigFile::parse("n = 2\nbogus = 1\n").unwrap_err();
        assert_eq!(e.to_string(), "2: unknown key `bogus`");
        let e = ConfigFile::parse("n = 2\n\nn = 3\n").unwrap_err();
        assert!(e.to_string().starts_with("3:"));
        let c = ConfigFile::parse("\n\neta = fast\n").unwrap();
        assert!(c
            .get::<f64>("eta")
            .unwrap_err()
            .to_string()
            .starts_with("3: bad value"));
        assert!(ConfigFile::parse("just words\n").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(layer(Some(1), Some(2), 3), 1);
        assert_eq!(layer(None, Some(2), 3), 2);
        assert_eq!(layer(None, None, 3), 3);
    }

    #[test]
    fn n_lists() {
        assert_eq!(parse_n_list("10..40:10").unwrap(), vec![10, 20, 30, 40]);
        assert_eq!(parse_n_list("5, 7,9").unwrap(), vec![5, 7, 9]);
        assert!(parse_n_list("5,5").is_err());
        assert!(parse_n_list("0,5").is_err());
        assert!(parse_n_list("1..5:0").is_err());
    }
}

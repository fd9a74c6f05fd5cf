//! Key=value config files.
//!
//! A file may set the same fields as the long flags (keys named like the
//! flags, e.g. `rho-comm=0.1`); blank lines and `#` comments are skipped.
//! Repeated keys are allowed — `kill` accumulates, anything else takes
//! the last value. Command-line flags always win over the file.

/// Parsed file entries, in file order.
#[derive(Clone, Debug, Default)]
pub struct FileConfig {
    pairs: Vec<(String, String)>,
}

/// A parse failure with its 1-based line number.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConfigError {
    pub line: usize,
    pub problem: &'static str,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config line {}: {}", self.line, self.problem)
    }
}

impl std::error::Error for ConfigError {}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig, ConfigError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError { line: i + 1, problem: "expected key=value" })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError { line: i + 1, problem: "empty key" });
            }
            pairs.push((key.to_string(), value.trim().to_string()));
        }
        Ok(FileConfig { pairs })
    }

    /// The last value set for `key`, if any.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Every value set for `key`, in file order.
    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.pairs
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_blanks() {
        let text = "\n# a comment\nseed = 7\nrho-comm=0.25\n  \nimage=in.pgm\n";
        let config = FileConfig::parse(text).unwrap();
        assert_eq!(config.get("seed"), Some("7"));
        assert_eq!(config.get("rho-comm"), Some("0.25"));
        assert_eq!(config.get("image"), Some("in.pgm"));
        assert_eq!(config.get("missing"), None);
    }

    #[test]
    fn values_may_contain_equals_signs() {
        let config = FileConfig::parse("note=a=b").unwrap();
        assert_eq!(config.get("note"), Some("a=b"));
    }

    #[test]
    fn last_value_wins_but_all_are_kept() {
        let config = FileConfig::parse("kill=3@10\nseed=1\nkill=4@12\nseed=2").unwrap();
        assert_eq!(config.get("seed"), Some("2"));
        assert_eq!(config.get_all("kill"), vec!["3@10", "4@12"]);
    }

    #[test]
    fn broken_lines_report_their_number() {
        let err = FileConfig::parse("seed=1\nnot a pair\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = FileConfig::parse("=5").unwrap_err();
        assert_eq!(err.problem, "empty key");
    }
}

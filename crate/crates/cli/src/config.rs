//! Optional TOML configuration file; command-line flags take precedence.

use std::path::Path;

use qnl_core::QnlError;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kernel: Option<String>,
    pub case: Option<String>,
    pub n_half: Option<usize>,
    pub r1: Option<usize>,
    pub r2: Option<usize>,
    pub t_final: Option<f64>,
    pub kappa: Option<f64>,
    pub operator: Option<String>,
    pub resolutions: Option<Vec<usize>>,
    pub errors: Option<String>,
    pub snapshots: Option<usize>,
    pub cells: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, QnlError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| QnlError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| QnlError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let c: FileConfig = toml::from_str("kernel = \"paper-2-over-s\"\nn_half = 100\nresolutions = [50, 100]\n").unwrap();
        assert_eq!(c.kernel.as_deref(), Some("paper-2-over-s"));
        assert_eq!(c.n_half, Some(100));
        assert_eq!(c.resolutions, Some(vec![50, 100]));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("horizon = 3").is_err());
    }
}

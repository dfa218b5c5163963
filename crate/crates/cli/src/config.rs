use std::path::{Path, PathBuf};

use serde::Deserialize;

use modelcomp_core::provider::LiveConfig;

/// Optional `--config` file. Every field mirrors a flag; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub provider: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub n_prompts: Option<usize>,
    pub seed: Option<u64>,
    pub policy: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub in_flight: Option<usize>,
    pub matcher: Option<String>,
    pub addr: Option<String>,
    #[serde(default)]
    pub live: LiveConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_fields() {
        let cfg: FileConfig = toml::from_str(
            r#"
            provider = "mock"
            n_prompts = 3
            policy = "top:2"
            [live]
            base_url = "http://localhost:9"
            timeout_secs = 5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.provider.as_deref(), Some("mock"));
        assert_eq!(cfg.n_prompts, Some(3));
        assert_eq!(cfg.live.base_url, "http://localhost:9");
        assert_eq!(cfg.live.max_retries, LiveConfig::default().max_retries);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("api_key = \"x\"").is_err());
    }
}

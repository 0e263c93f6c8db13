//! Flat `key = value` configuration file.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the directory holding the file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use postforge_core::matcher::Weights;
use postforge_core::snippets::DEFAULT_MIN_LINES;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const DEFAULT_SIMILARITY_FLOOR: f64 = 0.05;
pub const DEFAULT_RETRY_PERIOD: Duration = Duration::from_secs(6 * 3600);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub store: PathBuf,
    pub model: PathBuf,
    pub profile: PathBuf,
    /// Sources forming the developer's coding context.
    pub context: PathBuf,
    /// Sources searched for clones; defaults to `context`.
    pub corpus: PathBuf,
    pub outbox: PathBuf,
    pub weights: Weights,
    pub min_lines: usize,
    pub normalize_clones: bool,
    /// Overrides the profile's `max_suggestions_per_day` when set.
    pub rate_limit: Option<u32>,
    pub retry_period: Duration,
    pub similarity_floor: f64,
    pub seed: u64,
    pub dry_run: bool,
    pub site: String,
    pub api_base: String,
    pub extensions: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            store: PathBuf::from("store"),
            model: PathBuf::from("model.json"),
            profile: PathBuf::from("profile.json"),
            context: PathBuf::from("src"),
            corpus: PathBuf::from("src"),
            outbox: PathBuf::from("outbox"),
            weights: Weights::default(),
            min_lines: DEFAULT_MIN_LINES,
            normalize_clones: false,
            rate_limit: None,
            retry_period: DEFAULT_RETRY_PERIOD,
            similarity_floor: DEFAULT_SIMILARITY_FLOOR,
            seed: 1,
            dry_run: true,
            site: "stackoverflow".into(),
            api_base: postforge_core::ingest::DEFAULT_BASE_URL.into(),
            extensions: vec!["java".into()],
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

/// `30s`, `15m`, `6h`, `2d`, or plain seconds.
pub fn parse_duration(v: &str) -> Option<Duration> {
    let (num, unit) = match v.find(|c: char| !c.is_ascii_digit()) {
        Some(i) => v.split_at(i),
        None => (v, "s"),
    };
    let n: u64 = num.parse().ok()?;
    let secs = match unit {
        "s" => n,
        "m" => n.checked_mul(60)?,
        "h" => n.checked_mul(3600)?,
        "d" => n.checked_mul(86_400)?,
        _ => return None,
    };
    Some(Duration::from_secs(secs))
}

fn parse_weights(v: &str) -> Option<Weights> {
    let parts: Vec<f64> = v.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    match parts[..] {
        [code, api, text] => Some(Weights { code, api, text }),
        _ => None,
    }
}

impl PipelineConfig {
    /// Parses config text; `base` resolves relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ServiceError> {
        let mut cfg = PipelineConfig::default();
        let mut corpus_set = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| ServiceError::Config {
                line: n + 1,
                message: msg.to_string(),
            };
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base.join(value);
            match key {
                "store" => cfg.store = path(),
                "model" => cfg.model = path(),
                "profile" => cfg.profile = path(),
                "context" => cfg.context = path(),
                "corpus" => {
                    cfg.corpus = path();
                    corpus_set = true;
                }
                "outbox" => cfg.outbox = path(),
                "weights" => cfg.weights = parse_weights(value).ok_or_else(|| bad("weights: expected code,api,text"))?,
                "min_lines" => cfg.min_lines = value.parse().map_err(|_| bad("min_lines: expected an integer"))?,
                "normalize_clones" => cfg.normalize_clones = parse_bool(value).ok_or_else(|| bad("expected a boolean"))?,
                "rate_limit" => cfg.rate_limit = Some(value.parse().map_err(|_| bad("rate_limit: expected an integer"))?),
                "retry_period" => cfg.retry_period = parse_duration(value).ok_or_else(|| bad("retry_period: expected e.g. 6h"))?,
                "similarity_floor" => {
                    cfg.similarity_floor = value.parse().map_err(|_| bad("similarity_floor: expected a number"))?
                }
                "seed" => cfg.seed = value.parse().map_err(|_| bad("seed: expected an integer"))?,
                "dry_run" => cfg.dry_run = parse_bool(value).ok_or_else(|| bad("expected a boolean"))?,
                "site" => cfg.site = value.to_string(),
                "api_base" => cfg.api_base = value.to_string(),
                "extensions" => {
                    cfg.extensions = value
                        .split(',')
                        .map(|e| e.trim().trim_start_matches('.').to_string())
                        .filter(|e| !e.is_empty())
                        .collect()
                }
                _ => return Err(bad(&format!("unknown key {key:?}"))),
            }
        }
        if !corpus_set {
            cfg.corpus = cfg.context.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        let invalid = |m: String| Err(ServiceError::InvalidSettings(m));
        if self.retry_period.is_zero() {
            return invalid("retry_period must be positive".into());
        }
        if self.min_lines < 2 {
            return invalid("min_lines must be at least 2".into());
        }
        if self.rate_limit == Some(0) {
            return invalid("rate_limit must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.similarity_floor) {
            return invalid("similarity_floor must lie in [0, 1]".into());
        }
        self.weights.validate().map_err(|e| ServiceError::InvalidSettings(e.to_string()))
    }

    /// The paths that must exist before the service starts.
    pub fn check_paths(&self) -> Result<(), ServiceError> {
        for p in [&self.store, &self.model, &self.profile, &self.context, &self.corpus] {
            if !p.exists() {
                return Err(ServiceError::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "does not exist"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_dry_run() {
        let cfg = PipelineConfig::parse("", Path::new("/x")).unwrap();
        assert!(cfg.dry_run);
        assert_eq!(cfg.retry_period, Duration::from_secs(6 * 3600));
        assert_eq!(cfg.similarity_floor, 0.05);
    }

    #[test]
    fn parses_keys_and_resolves_paths() {
        let text = "# sample\nstore = data/store\nmodel=m.json\ncontext = /abs/src\nweights = 0.6, 0.2, 0.2\nretry_period = 30m\nrate_limit = 2\ndry_run = false\nextensions = .java, kt\n";
        let cfg = PipelineConfig::parse(text, Path::new("/etc/pf")).unwrap();
        assert_eq!(cfg.store, PathBuf::from("/etc/pf/data/store"));
        assert_eq!(cfg.model, PathBuf::from("/etc/pf/m.json"));
        assert_eq!(cfg.context, PathBuf::from("/abs/src"));
        assert_eq!(cfg.corpus, PathBuf::from("/abs/src"));
        assert_eq!(cfg.weights.code, 0.6);
        assert_eq!(cfg.retry_period, Duration::from_secs(1800));
        assert_eq!(cfg.rate_limit, Some(2));
        assert!(!cfg.dry_run);
        assert_eq!(cfg.extensions, vec!["java", "kt"]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = PipelineConfig::parse("store = a\nbogus = 1\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ServiceError::Config { line: 2, .. }), "{err}");
        assert!(PipelineConfig::parse("no equals sign", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("retry_period = 0s", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("weights = 1,1,1", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("retry_period = 5y", Path::new(".")).is_err());
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("90"), Some(Duration::from_secs(90)));
        assert_eq!(parse_duration("2d"), Some(Duration::from_secs(172_800)));
        assert_eq!(parse_duration("h"), None);
        assert_eq!(parse_duration("99999999999999999999d"), None);
    }
}

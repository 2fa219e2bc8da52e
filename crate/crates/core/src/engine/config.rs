use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::data::{CsvOptions, DEFAULT_FOLD_COUNT};
use crate::evaluators::DEFAULT_GRANGER_LAG;
use crate::featuredb::{DbParams, FilterMode};
use crate::filter::DEFAULT_CORR_THRESHOLD;
use crate::llm::{HttpConfig, DEFAULT_API_KEY_ENV};
use crate::model::GbtParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {value}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendKind {
    Mock { script: Option<PathBuf> },
    Http,
}

/// Everything a run needs. Paths in a config file are relative to the file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub data_path: PathBuf,
    pub description_path: PathBuf,
    pub template_path: Option<PathBuf>,
    pub timestamp_column: String,
    pub target_column: String,
    pub horizon: usize,
    pub test_frac: f64,
    pub val_frac: f64,
    pub val_folds: usize,
    pub test_folds: usize,
    pub filter: FilterMode,
    pub db: DbParams,
    pub n_resp: usize,
    pub llm_temperature: f64,
    pub model: GbtParams,
    pub corr_threshold: f64,
    pub granger_lag: usize,
    pub backend: BackendKind,
    pub endpoint: String,
    pub llm_model: String,
    pub timeout_secs: u64,
    pub api_key_env: String,
    /// Inline seed programs; when empty (and no seed files) the defaults are used.
    pub seed_features: Vec<String>,
    /// Files holding seed programs separated by `---` lines.
    pub seed_files: Vec<PathBuf>,
    /// Use [`DEFAULT_SEEDS`] when no seeds are given; otherwise start empty.
    pub default_seeds: bool,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Upper bound on prompts sent during `fit`.
    pub max_prompts: Option<usize>,
}

/// Seeds used when the config names none: a weekly mean and a first difference of the lagged target.
pub const DEFAULT_SEEDS: [&str; 2] = [
    "# smoothed recent level of the target\nfeature \"target_mean_7\": rolling_mean(Target_Tminus1, 7)",
    "# most recent change of the target\nfeature \"target_diff_1\": diff(Target_Tminus1, 1)",
];

impl EngineConfig {
    /// A config with defaults for everything except the data files and columns.
    pub fn new(
        data_path: impl Into<PathBuf>,
        description_path: impl Into<PathBuf>,
        timestamp_column: impl Into<String>,
        target_column: impl Into<String>,
    ) -> Self {
        let http = HttpConfig::default();
        Self {
            data_path: data_path.into(),
            description_path: description_path.into(),
            template_path: None,
            timestamp_column: timestamp_column.into(),
            target_column: target_column.into(),
            horizon: 1,
            test_frac: 0.1,
            val_frac: 0.1,
            val_folds: DEFAULT_FOLD_COUNT,
            test_folds: DEFAULT_FOLD_COUNT,
            filter: FilterMode::Shap,
            db: DbParams::default(),
            n_resp: 4,
            llm_temperature: 1.0,
            model: GbtParams::default(),
            corr_threshold: DEFAULT_CORR_THRESHOLD,
            granger_lag: DEFAULT_GRANGER_LAG,
            backend: BackendKind::Mock { script: None },
            endpoint: http.endpoint,
            llm_model: "gpt-4o".into(),
            timeout_secs: http.timeout.as_secs(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            seed_features: Vec::new(),
            seed_files: Vec::new(),
            default_seeds: true,
            seed: 0,
            output_dir: None,
            max_prompts: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir)
    }

    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut c = Self::new("", "", "", "");
        let (mut data, mut desc, mut ts, mut target) = (false, false, false, false);
        let mut backend = "mock".to_string();
        let mut script = None;
        let resolve = |v: &str| -> PathBuf {
            let p = Path::new(v);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            fn num<T: FromStr>(v: &str, bad: impl Fn() -> ConfigError) -> Result<T, ConfigError> {
                v.parse().map_err(|_| bad())
            }
            match key {
                "data_path" => {
                    c.data_path = resolve(value);
                    data = true;
                }
                "description_path" => {
                    c.description_path = resolve(value);
                    desc = true;
                }
                "template_path" => c.template_path = Some(resolve(value)),
                "timestamp_column" => {
                    c.timestamp_column = value.to_string();
                    ts = true;
                }
                "target_column" => {
                    c.target_column = value.to_string();
                    target = true;
                }
                "horizon" => c.horizon = num(value, bad)?,
                "test_frac" => c.test_frac = num(value, bad)?,
                "val_frac" => c.val_frac = num(value, bad)?,
                "val_folds" => c.val_folds = num(value, bad)?,
                "test_folds" => c.test_folds = num(value, bad)?,
                "filter" => {
                    c.filter = match value {
                        "shap" => FilterMode::Shap,
                        "fresh" => FilterMode::Fresh,
                        _ => return Err(bad()),
                    }
                }
                "n_max" => c.db.n_max = num(value, bad)?,
                "n_keep" => c.db.n_keep = num(value, bad)?,
                "generations" => c.db.generations = num(value, bad)?,
                "n_prompt" => c.db.n_prompt = num(value, bad)?,
                "t0" => c.db.t0 = num(value, bad)?,
                "decay_k" => c.db.decay_k = num(value, bad)?,
                "epsilon" => c.db.epsilon = num(value, bad)?,
                "n_resp" => c.n_resp = num(value, bad)?,
                "llm_temperature" => c.llm_temperature = num(value, bad)?,
                "n_trees" => c.model.n_trees = num(value, bad)?,
                "max_depth" => c.model.max_depth = num(value, bad)?,
                "learning_rate" => c.model.learning_rate = num(value, bad)?,
                "min_samples_leaf" => c.model.min_samples_leaf = num(value, bad)?,
                "corr_threshold" => c.corr_threshold = num(value, bad)?,
                "granger_lag" => c.granger_lag = num(value, bad)?,
                "backend" => backend = value.to_string(),
                "mock_script" => script = Some(resolve(value)),
                "endpoint" => c.endpoint = value.to_string(),
                "model" => c.llm_model = value.to_string(),
                "timeout_secs" => c.timeout_secs = num(value, bad)?,
                "api_key_env" => c.api_key_env = value.to_string(),
                "seed_feature" => c.seed_features.push(value.to_string()),
                "seed_file" => c.seed_files.push(resolve(value)),
                "default_seeds" => c.default_seeds = num(value, bad)?,
                "seed" => c.seed = num(value, bad)?,
                "output_dir" => c.output_dir = Some(resolve(value)),
                "max_prompts" => c.max_prompts = Some(num(value, bad)?),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        c.backend = match backend.as_str() {
            "mock" => BackendKind::Mock { script },
            "http" => BackendKind::Http,
            other => return Err(ConfigError::Invalid(format!("unknown backend `{other}`"))),
        };
        for (present, key) in [
            (data, "data_path"),
            (desc, "description_path"),
            (ts, "timestamp_column"),
            (target, "target_column"),
        ] {
            if !present {
                return Err(ConfigError::Missing(key));
            }
        }
        c.check()?;
        Ok(c)
    }

    /// Checks cross-field constraints.
    pub fn check(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.db.n_keep == 0 || self.db.n_keep >= self.db.n_max {
            return invalid("need 1 <= n_keep < n_max");
        }
        if self.db.generations == 0 {
            return invalid("generations must be at least 1");
        }
        if self.horizon == 0 {
            return invalid("horizon must be at least 1");
        }
        if !(self.test_frac > 0.0 && self.val_frac > 0.0 && self.test_frac + self.val_frac < 1.0) {
            return invalid("need test_frac, val_frac > 0 with test_frac + val_frac < 1");
        }
        if self.val_folds == 0 || self.test_folds == 0 {
            return invalid("fold counts must be at least 1");
        }
        if self.n_resp == 0 {
            return invalid("n_resp must be at least 1");
        }
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return invalid("corr_threshold must lie in (0, 1]");
        }
        if self.granger_lag == 0 {
            return invalid("granger_lag must be at least 1");
        }
        if !(self.db.t0 >= 0.0 && self.db.epsilon > 0.0) {
            return invalid("need t0 >= 0 and epsilon > 0");
        }
        Ok(())
    }

    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            timestamp_column: self.timestamp_column.clone(),
            target_column: self.target_column.clone(),
            horizon: self.horizon,
        }
    }

    pub fn http_config(&self) -> HttpConfig {
        HttpConfig {
            endpoint: self.endpoint.clone(),
            timeout: std::time::Duration::from_secs(self.timeout_secs),
            api_key_env: self.api_key_env.clone(),
            ..HttpConfig::default()
        }
    }
}

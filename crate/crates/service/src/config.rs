//! Flat `key = value` configuration.

use std::path::{Path, PathBuf};

use chrono::Weekday;
use thiserror::Error;
use winofusion_core::collab::PlatformConfig;
use winofusion_core::pipeline::PronounPolicy;
use winofusion_core::quality::HardnessWeights;

pub const CONFIG_ENV: &str = "WINOFUSION_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub platform: PlatformConfig,
    pub aggregation_days: Vec<Weekday>,
    pub rng_seed: u64,
    pub store_dir: PathBuf,
    pub snapshot_every: u64,
    pub listen: String,
    /// Load the bundled corpus into an empty store at startup.
    pub bootstrap_corpus: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            platform: PlatformConfig::default(),
            aggregation_days: vec![Weekday::Sat, Weekday::Sun],
            rng_seed: 0,
            store_dir: PathBuf::from("winofusion-data"),
            snapshot_every: 1000,
            listen: "127.0.0.1:8080".into(),
            bootstrap_corpus: true,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse::<T>().map_err(|_| format!("'{v}' is not a valid number"))
}

fn ranged<T: std::str::FromStr + PartialOrd + std::fmt::Display + Copy>(v: &str, lo: T, hi: T) -> Result<T, String> {
    let x: T = parse_num(v)?;
    if x < lo || x > hi {
        return Err(format!("{x} is outside [{lo}, {hi}]"));
    }
    Ok(x)
}

fn probability(v: &str) -> Result<f64, String> {
    let p: f64 = parse_num(v)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("{p} is outside [0, 1]"));
    }
    Ok(p)
}

fn weekday(v: &str) -> Result<Weekday, String> {
    v.trim().parse::<Weekday>().map_err(|_| format!("'{v}' is not a weekday"))
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("'{v}' is not a boolean")),
    }
}

const KEYS: [&str; 22] = [
    "score.valid",
    "score.invalid",
    "score.test_correct",
    "score.test_wrong",
    "ban.threshold",
    "test_question.probability",
    "test_question.validated_share",
    "hardness.weights",
    "training.base",
    "promote.score",
    "promote.valid_min",
    "schedule.aggregation_days",
    "queue.lease_minutes",
    "queue.semi_share",
    "template.cap",
    "rng.seed",
    "pipeline.sentence_length_max",
    "pipeline.pronoun_policy",
    "store.dir",
    "store.snapshot_every",
    "server.listen",
    "corpus.bootstrap",
];

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (key, value) = l.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.into() });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate { line, key: key.into() });
            }
            seen.push(key.to_string());
            cfg.set(key, value).map_err(|message| ConfigError::Value { line, key: key.into(), message })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let p = &mut self.platform;
        match key {
            "score.valid" => p.score.valid = ranged(v, 0, 1000)?,
            "score.invalid" => p.score.invalid = ranged(v, -1000, 0)?,
            "score.test_correct" => p.score.test_correct = ranged(v, 0, 1000)?,
            "score.test_wrong" => p.score.test_wrong = ranged(v, -1000, 0)?,
            "ban.threshold" => p.score.ban_threshold = ranged(v, -100_000, 0)?,
            "test_question.probability" => p.test_questions.probability = probability(v)?,
            "test_question.validated_share" => p.test_questions.validated_share = probability(v)?,
            "hardness.weights" => {
                let ws: Vec<f64> = v.split(',').map(|x| parse_num(x.trim())).collect::<Result<_, _>>()?;
                let ws: [f64; 5] = ws.try_into().map_err(|_| "expected five comma-separated weights".to_string())?;
                if ws.iter().any(|w| !(0.0..=1.0).contains(w)) {
                    return Err("each weight must lie in [0, 1]".into());
                }
                p.hardness = HardnessWeights(ws);
            }
            "training.base" => p.training_base = ranged(v, 1, 50)?,
            "promote.score" => p.promotion.score = ranged(v, 0, 1_000_000)?,
            "promote.valid_min" => p.promotion.valid_min = ranged(v, 0, 1_000_000)?,
            "schedule.aggregation_days" => {
                let days: Vec<Weekday> = v.split(',').filter(|d| !d.trim().is_empty()).map(weekday).collect::<Result<_, _>>()?;
                self.aggregation_days = days;
            }
            "queue.lease_minutes" => p.lease_minutes = ranged(v, 1, 24 * 60)?,
            "queue.semi_share" => p.semi_share = probability(v)?,
            "template.cap" => p.template_cap = ranged(v, 1, 1000)?,
            "rng.seed" => self.rng_seed = parse_num(v)?,
            "pipeline.sentence_length_max" => {
                p.pipeline.sentence_length_max = parse_num(v)?;
                p.pipeline.validate().map_err(|e| e.to_string())?;
            }
            "pipeline.pronoun_policy" => {
                p.pipeline.pronoun_policy = match v {
                    "first" => PronounPolicy::FirstThirdPerson,
                    "last" => PronounPolicy::LastThirdPerson,
                    _ => return Err("expected `first` or `last`".into()),
                }
            }
            "store.dir" => self.store_dir = PathBuf::from(v),
            "store.snapshot_every" => self.snapshot_every = ranged(v, 1, 1_000_000)?,
            "server.listen" => self.listen = v.to_string(),
            "corpus.bootstrap" => self.bootstrap_corpus = boolean(v)?,
            _ => unreachable!("key list checked by caller"),
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Config::parse(&text)
    }

    /// The env var wins over the given path; no path at all gives defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Config, ConfigError> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) => Config::load(Path::new(&p)),
            None => path.map_or_else(|| Ok(Config::default()), Config::load),
        }
    }
}

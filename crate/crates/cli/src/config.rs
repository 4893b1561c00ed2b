use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Dot,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "dot" => Ok(Format::Dot),
            other => Err(format!("unknown format `{other}` (expected text, json or dot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub depth_budget: usize,
    pub model_cap: u64,
    pub worker_count: usize,
    pub format: Format,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            depth_budget: qrc1::calculus::DEFAULT_DEPTH_BUDGET,
            model_cap: 10_000_000,
            worker_count: std::thread::available_parallelism().map_or(1, |n| n.get()),
            format: Format::Text,
            seed: 0,
        }
    }
}

/// One layer of settings; unset fields fall through to the layer below.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub depth_budget: Option<usize>,
    pub model_cap: Option<u64>,
    pub worker_count: Option<usize>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl RunConfig {
    fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.depth_budget {
            self.depth_budget = v;
        }
        if let Some(v) = o.model_cap {
            self.model_cap = v;
        }
        if let Some(v) = o.worker_count {
            self.worker_count = v;
        }
        if let Some(v) = o.format {
            self.format = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
    }

    fn validate(self) -> Result<Self, CliError> {
        if self.depth_budget == 0 || self.model_cap == 0 || self.worker_count == 0 {
            return Err(CliError::Usage(
                "depth_budget, model_cap and worker_count must be positive".into(),
            ));
        }
        Ok(self)
    }

    /// Flags over `QRC1_*` variables over the config file over defaults.
    /// The file is `explicit`, else `$QRC1_CONFIG`, else `./qrc1.toml` if
    /// present.
    pub fn resolve(
        explicit: Option<&Path>,
        env: &dyn Fn(&str) -> Option<String>,
        flags: &Overrides,
    ) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let path = explicit
            .map(Path::to_path_buf)
            .or_else(|| env("QRC1_CONFIG").map(PathBuf::from))
            .or_else(|| Some(PathBuf::from("qrc1.toml")).filter(|p| p.is_file()));
        if let Some(path) = path {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let file: Overrides =
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            cfg.apply(&file);
        }
        cfg.apply(&from_env(env)?);
        cfg.apply(flags);
        cfg.validate()
    }
}

fn from_env(env: &dyn Fn(&str) -> Option<String>) -> Result<Overrides, CliError> {
    fn parse<T: std::str::FromStr>(env: &dyn Fn(&str) -> Option<String>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        env(key)
            .map(|v| {
                v.trim()
                    .parse::<T>()
                    .map_err(|e| CliError::Usage(format!("{key}={v}: {e}")))
            })
            .transpose()
    }
    Ok(Overrides {
        depth_budget: parse(env, "QRC1_DEPTH_BUDGET")?,
        model_cap: parse(env, "QRC1_MODEL_CAP")?,
        worker_count: parse(env, "QRC1_WORKER_COUNT")?,
        format: parse(env, "QRC1_FORMAT")?,
        seed: parse(env, "QRC1_SEED")?,
    })
}

//! Runtime configuration shared by the server and the CLI. Every option can
//! come from a flag or a `CDA_*` environment variable.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

use crispr_agent::fixtures::{FixtureError, FixturePaths, Fixtures};
use crispr_agent::llm::{GatewayError, HttpProvider, ProviderConfig, Script, ScriptedProvider, SharedProvider};

use crate::store::StoreError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error("provider: {0}")]
    Provider(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl From<GatewayError> for ConfigError {
    fn from(e: GatewayError) -> Self {
        ConfigError::Provider(e.to_string())
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct FixtureArgs {
    /// Directory holding the standard fixture layout.
    #[arg(long, env = "CDA_FIXTURES", default_value = "fixtures", global = true)]
    pub fixtures: PathBuf,
    #[arg(long, env = "CDA_WORKFLOWS", global = true)]
    pub workflows: Option<PathBuf>,
    #[arg(long, env = "CDA_LIBRARY", global = true)]
    pub library: Option<PathBuf>,
    #[arg(long, env = "CDA_LOCI", global = true)]
    pub loci: Option<PathBuf>,
    /// FASTA scanned for off-target sites.
    #[arg(long, env = "CDA_GENOME", global = true)]
    pub genome: Option<PathBuf>,
    #[arg(long, env = "CDA_ORGANISMS", global = true)]
    pub organisms: Option<PathBuf>,
    #[arg(long = "safety-config", env = "CDA_SAFETY", global = true)]
    pub safety: Option<PathBuf>,
    #[arg(long, env = "CDA_PROTOCOLS", global = true)]
    pub protocols: Option<PathBuf>,
    #[arg(long, env = "CDA_CORPUS", global = true)]
    pub corpus: Option<PathBuf>,
}

impl FixtureArgs {
    pub fn paths(&self) -> FixturePaths {
        let mut p = FixturePaths::under(&self.fixtures);
        let pick = |slot: &mut PathBuf, v: &Option<PathBuf>| {
            if let Some(v) = v {
                *slot = v.clone();
            }
        };
        pick(&mut p.workflows, &self.workflows);
        pick(&mut p.library, &self.library);
        pick(&mut p.loci, &self.loci);
        pick(&mut p.genome, &self.genome);
        pick(&mut p.organisms, &self.organisms);
        pick(&mut p.safety, &self.safety);
        pick(&mut p.protocols, &self.protocols);
        pick(&mut p.corpus, &self.corpus);
        p
    }

    pub fn load(&self) -> Result<Fixtures, ConfigError> {
        Ok(Fixtures::load(self.paths())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProviderKind {
    /// Answers from a JSON script; no network.
    Scripted,
    /// OpenAI-compatible chat-completions endpoint.
    Http,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ProviderArgs {
    #[arg(long, env = "CDA_PROVIDER", value_enum, default_value_t = ProviderKind::Scripted, global = true)]
    pub provider: ProviderKind,
    /// Script for the scripted provider; defaults to `<fixtures>/scripts/default.json`.
    #[arg(long, env = "CDA_SCRIPT", global = true)]
    pub script: Option<PathBuf>,
    #[arg(long, env = "CDA_PROVIDER_ENDPOINT", default_value = "", global = true)]
    pub endpoint: String,
    #[arg(long = "api-key", env = "CDA_PROVIDER_KEY", hide_env_values = true, global = true)]
    pub api_key: Option<String>,
    #[arg(long, env = "CDA_PROVIDER_MODEL", default_value = "gpt-4o", global = true)]
    pub model: String,
    /// Per-call timeout in seconds.
    #[arg(long, env = "CDA_PROVIDER_TIMEOUT", default_value_t = 60.0, global = true)]
    pub timeout: f64,
    #[arg(long, env = "CDA_PROVIDER_RETRIES", default_value_t = 2, global = true)]
    pub retries: u32,
}

impl ProviderArgs {
    pub fn config(&self) -> ProviderConfig {
        ProviderConfig {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            timeout_secs: self.timeout,
            max_retries: self.retries,
            ..ProviderConfig::default()
        }
    }

    pub fn build(&self, fixtures_root: &Path) -> Result<SharedProvider, ConfigError> {
        let config = self.config();
        config.validate()?;
        Ok(match self.provider {
            ProviderKind::Scripted => {
                let path = self
                    .script
                    .clone()
                    .unwrap_or_else(|| fixtures_root.join("scripts").join("default.json"));
                Arc::new(ScriptedProvider::new(Script::load(&path)?))
            }
            ProviderKind::Http => Arc::new(
                HttpProvider::new(&config, self.api_key.clone()).map_err(|e| ConfigError::Provider(e.to_string()))?,
            ),
        })
    }
}

//! Loading the data files an engine runs on.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

use crate::genomics::{load_fasta, GuideLibrary};
use crate::qa::{load_corpus, Index};
use crate::safety::{OrganismTable, SafetyConfig};
use crate::tools::ToolProvider;
use crate::workflow::{Engine, WorkflowRegistry};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{path}: {message}")]
pub struct FixtureError {
    pub path: String,
    pub message: String,
}

impl FixtureError {
    fn at(path: &Path, err: impl ToString) -> Self {
        Self {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixturePaths {
    pub workflows: PathBuf,
    pub library: PathBuf,
    /// Per-gene loci used as primer templates.
    pub loci: PathBuf,
    /// Sequences scanned for off-target sites.
    pub genome: PathBuf,
    pub organisms: PathBuf,
    pub safety: PathBuf,
    pub protocols: PathBuf,
    pub corpus: PathBuf,
}

impl FixturePaths {
    /// The standard layout under `root`.
    pub fn under(root: &Path) -> Self {
        Self {
            workflows: root.join("workflows"),
            library: root.join("library.tsv"),
            loci: root.join("loci.fa"),
            genome: root.join("ref.fa"),
            organisms: root.join("organisms.txt"),
            safety: root.join("safety.toml"),
            protocols: root.join("protocols.toml"),
            corpus: root.join("corpus"),
        }
    }

    /// Labelled file paths (directories excluded), for hashing and reporting.
    pub fn files(&self) -> Vec<(&'static str, &Path)> {
        vec![
            ("library", self.library.as_path()),
            ("loci", self.loci.as_path()),
            ("genome", self.genome.as_path()),
            ("organisms", self.organisms.as_path()),
            ("safety", self.safety.as_path()),
            ("protocols", self.protocols.as_path()),
        ]
    }
}

/// Everything loaded from a fixture set, shareable across threads.
#[derive(Debug, Clone)]
pub struct Fixtures {
    pub paths: FixturePaths,
    pub registry: Arc<WorkflowRegistry>,
    pub tools: Arc<ToolProvider>,
    pub safety: SafetyConfig,
    pub organisms: Arc<OrganismTable>,
    pub corpus: Arc<Index>,
}

impl Fixtures {
    pub fn load(paths: FixturePaths) -> Result<Self, FixtureError> {
        let registry = WorkflowRegistry::load_dir(&paths.workflows).map_err(|e| FixtureError::at(&paths.workflows, e))?;
        let library = GuideLibrary::load(&paths.library).map_err(|e| FixtureError::at(&paths.library, e))?;
        let loci = load_fasta(&paths.loci).map_err(|e| FixtureError::at(&paths.loci, e))?;
        let genome = load_fasta(&paths.genome).map_err(|e| FixtureError::at(&paths.genome, e))?;
        let protocols = ToolProvider::load_protocols(&paths.protocols).map_err(|e| FixtureError::at(&paths.protocols, e))?;
        let organisms = OrganismTable::load(&paths.organisms).map_err(|e| FixtureError::at(&paths.organisms, e))?;
        let safety = SafetyConfig::load(&paths.safety).map_err(|e| FixtureError::at(&paths.safety, e))?;
        let docs = load_corpus(&paths.corpus).map_err(|e| FixtureError::at(&paths.corpus, e))?;
        let corpus = Index::build(&docs).map_err(|e| FixtureError::at(&paths.corpus, e))?;
        let tools = ToolProvider {
            library,
            genome,
            protocols,
            ..Default::default()
        }
        .with_loci(loci);
        Ok(Self {
            paths,
            registry: Arc::new(registry),
            tools: Arc::new(tools),
            safety,
            organisms: Arc::new(organisms),
            corpus: Arc::new(corpus),
        })
    }

    pub fn load_dir(root: &Path) -> Result<Self, FixtureError> {
        Self::load(FixturePaths::under(root))
    }

    pub fn engine(&self) -> Engine {
        Engine::new(
            Arc::clone(&self.registry),
            Arc::clone(&self.tools),
            self.safety.clone(),
            Arc::clone(&self.organisms),
        )
    }
}

//! The `dashgen.toml` configuration file and its command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dashgen::evaluation::{BleuMode, PassMode};
use dashgen::orchestrator::LlmConfig;
use dashgen::promptgen::{Architecture, ShotStrategy, DEFAULT_TOKEN_BUDGET};
use dashgen::repair::{DEFAULT_MAX_ATTEMPTS, DEFAULT_MAX_FIXES};
use dashgen::retrieval::{IndexConfig, RetrievalParams};

pub const DEFAULT_CONFIG: &str = "dashgen.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Seed for index training, the mock LLM, and dataset generation.
    pub seed: u64,
    pub paths: Paths,
    pub retrieval: RetrievalSection,
    pub generation: GenerationSection,
    pub llm: LlmSection,
    pub repair: RepairSection,
    pub evaluation: EvaluationSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 7,
            paths: Paths::default(),
            retrieval: RetrievalSection::default(),
            generation: GenerationSection::default(),
            llm: LlmSection::default(),
            repair: RepairSection::default(),
            evaluation: EvaluationSection::default(),
        }
    }
}

/// Relative paths in the file are taken relative to the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub workspace: PathBuf,
    /// Graph, index, run records and repair outcomes live here.
    pub state: PathBuf,
    /// Prompt template directory; built-in templates when unset.
    pub templates: Option<PathBuf>,
    /// Dataset template directory; built-in templates when unset.
    pub corpus_templates: Option<PathBuf>,
    pub dataset: PathBuf,
    /// Keyword table for domain labels; built-in table when unset.
    pub taxonomy: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: "corpus".into(),
            workspace: "workspace".into(),
            state: ".dashgen".into(),
            templates: None,
            corpus_templates: None,
            dataset: "dataset.jsonl".into(),
            taxonomy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub k: usize,
    pub nprobe: usize,
    pub sim_threshold: f64,
    pub rerank: bool,
    pub d: usize,
    pub k_c: usize,
    pub m: usize,
    pub k_s: usize,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        let p = RetrievalParams::default();
        let i = IndexConfig::default();
        RetrievalSection {
            k: p.k,
            nprobe: p.nprobe,
            sim_threshold: p.sim_threshold,
            rerank: p.rerank,
            d: i.d,
            k_c: i.k_c,
            m: i.m,
            k_s: i.k_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSection {
    pub strategy: ShotStrategy,
    pub architecture: Architecture,
    pub token_budget: usize,
    pub parallelism: usize,
}

impl Default for GenerationSection {
    fn default() -> Self {
        GenerationSection {
            strategy: ShotStrategy::Few(3),
            architecture: Architecture::default(),
            token_budget: DEFAULT_TOKEN_BUDGET,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    #[default]
    Http,
    Mock,
}

/// Unknown keys here are ignored: serde cannot reject them through the
/// flattened client settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSection {
    pub mode: LlmMode,
    #[serde(flatten)]
    pub client: LlmConfig,
}

impl Default for LlmSection {
    fn default() -> Self {
        LlmSection {
            mode: LlmMode::Http,
            client: LlmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepairSection {
    /// A: validation rounds.
    pub attempts: usize,
    /// F: fix proposals per broken file per round.
    pub fixes: usize,
    /// External validator command run in the workspace root.
    pub validator: Option<String>,
    /// Regexes with `file`, `line`, `col` and `msg` groups for its output.
    pub patterns: Vec<String>,
}

impl Default for RepairSection {
    fn default() -> Self {
        RepairSection {
            attempts: DEFAULT_MAX_ATTEMPTS,
            fixes: DEFAULT_MAX_FIXES,
            validator: None,
            patterns: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub ks: Vec<u64>,
    /// Samples drawn per dataset entry when evaluate generates them.
    pub samples: u64,
    pub pass_mode: PassMode,
    pub bleu_mode: BleuMode,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            ks: vec![1, 3, 5],
            samples: 5,
            pass_mode: PassMode::PerEntry,
            bleu_mode: BleuMode::Sentence,
        }
    }
}

impl Config {
    /// Reads `path`, or the defaults when `path` is the implicit default file
    /// and does not exist. Relative paths are resolved against the file's
    /// directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let (file, explicit) = match path {
            Some(p) => (p.to_path_buf(), true),
            None => (PathBuf::from(DEFAULT_CONFIG), false),
        };
        if !file.exists() {
            if explicit {
                bail!("config file {} not found", file.display());
            }
            return Ok(Config::default());
        }
        let text = std::fs::read_to_string(&file)
            .with_context(|| format!("cannot read config {}", file.display()))?;
        let mut config: Config =
            toml::from_str(&text).with_context(|| format!("invalid config {}", file.display()))?;
        let base = file.parent().unwrap_or(Path::new("")).to_path_buf();
        config.paths.resolve_against(&base);
        Ok(config)
    }

    pub fn index_config(&self) -> IndexConfig {
        IndexConfig {
            d: self.retrieval.d,
            k_c: self.retrieval.k_c,
            m: self.retrieval.m,
            k_s: self.retrieval.k_s,
            seed: self.seed,
        }
    }

    pub fn retrieval_params(&self) -> RetrievalParams {
        RetrievalParams {
            k: self.retrieval.k,
            nprobe: self.retrieval.nprobe,
            sim_threshold: self.retrieval.sim_threshold,
            rerank: self.retrieval.rerank,
        }
    }

    /// Checks the values no single command would catch early enough.
    pub fn validate(&self) -> Result<()> {
        let r = &self.retrieval;
        if r.k == 0 || r.nprobe == 0 {
            bail!("retrieval.k and retrieval.nprobe must be at least 1");
        }
        if !(-1.0..=1.0).contains(&r.sim_threshold) {
            bail!("retrieval.sim_threshold {} is outside [-1, 1]", r.sim_threshold);
        }
        self.index_config().validate()?;
        if self.generation.parallelism == 0 {
            bail!("generation.parallelism must be at least 1");
        }
        if self.repair.attempts == 0 || self.repair.fixes == 0 {
            bail!("repair.attempts and repair.fixes must be at least 1");
        }
        if self.evaluation.ks.is_empty() || self.evaluation.ks.contains(&0) {
            bail!("evaluation.ks must be non-empty and positive");
        }
        if self.evaluation.samples == 0 {
            bail!("evaluation.samples must be at least 1");
        }
        Ok(())
    }
}

impl Paths {
    fn resolve_against(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.corpus);
        join(&mut self.workspace);
        join(&mut self.state);
        join(&mut self.dataset);
        for p in [&mut self.templates, &mut self.corpus_templates, &mut self.taxonomy]
            .into_iter()
            .flatten()
        {
            join(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("dashgen.toml");
        std::fs::write(
            &file,
            "seed = 3\n[paths]\ncorpus = \"src\"\n[llm]\nmode = \"mock\"\nmodel = \"m\"\n[evaluation]\nks = [1, 10]\npass_mode = \"pooled\"\n",
        )
        .unwrap();
        let c = Config::load(Some(&file)).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.paths.corpus, dir.path().join("src"));
        assert_eq!(c.paths.state, dir.path().join(".dashgen"));
        assert_eq!(c.llm.mode, LlmMode::Mock);
        assert_eq!(c.llm.client.model, "m");
        assert_eq!(c.evaluation.ks, vec![1, 10]);
        assert_eq!(c.evaluation.pass_mode, PassMode::Pooled);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        std::fs::write(&file, "[retrieval]\nkk = 3\n").unwrap();
        assert!(Config::load(Some(&file)).is_err());
    }

    #[test]
    fn bad_values_rejected() {
        let mut c = Config::default();
        c.retrieval.d = 63;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.evaluation.ks = vec![];
        assert!(c.validate().is_err());
    }
}

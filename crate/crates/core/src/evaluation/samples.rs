//! Drawing completions for dataset entries and scoring them.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::{run_tests, DatasetEntry};
use super::metrics::{bleu, chrf, ter, tokenize, BleuStats, BLEU_MAX_N, CHRF_BETA, CHRF_N};
use super::report::EvalRecord;
use crate::error::{Error, Result};
use crate::orchestrator::pipeline::{prepare_page, PipelineConfig, PipelineInputs};
use crate::orchestrator::workspace::render_file_tree;
use crate::orchestrator::{clean_completion, Knowledge, LlmClient};
use crate::promptgen::{ShotStrategy, TemplateSet};

pub const SAMPLES_FORMAT: &str = "dashgen-samples";
pub const SAMPLES_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntrySamples {
    pub concat_id: String,
    pub page_id: String,
    pub samples: Vec<String>,
}

/// Completions drawn under one strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub strategy: ShotStrategy,
    pub model_id: String,
    pub entries: Vec<EntrySamples>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SamplesHeader {
    format: String,
    version: u32,
    strategy: ShotStrategy,
    model_id: String,
    entries: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

impl SampleSet {
    /// JSON Lines: a header line, then one line per entry.
    pub fn to_jsonl(&self) -> String {
        let header = SamplesHeader {
            format: SAMPLES_FORMAT.into(),
            version: SAMPLES_VERSION,
            strategy: self.strategy,
            model_id: self.model_id.clone(),
            entries: self.entries.len(),
            warnings: self.warnings.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("samples serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: SamplesHeader = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::Format("samples file is empty".into()))?,
        )
        .map_err(|e| Error::Format(format!("samples header: {e}")))?;
        if header.format != SAMPLES_FORMAT || header.version != SAMPLES_VERSION {
            return Err(Error::Format(format!(
                "expected {SAMPLES_FORMAT} v{SAMPLES_VERSION}, found {} v{}",
                header.format, header.version
            )));
        }
        let entries = lines
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Format(format!("samples line {}: {e}", i + 2)))
            })
            .collect::<Result<Vec<EntrySamples>>>()?;
        if entries.len() != header.entries {
            return Err(Error::Format(format!(
                "samples header announces {} entries, file holds {}",
                header.entries,
                entries.len()
            )));
        }
        Ok(SampleSet {
            strategy: header.strategy,
            model_id: header.model_id,
            entries,
            warnings: header.warnings,
        })
    }
}

/// Tests and metrics for every sample of every entry in `set`.
pub fn score_samples(dataset: &[DatasetEntry], set: &SampleSet) -> Result<Vec<EvalRecord>> {
    let by_key: BTreeMap<(&str, &str), &DatasetEntry> = dataset
        .iter()
        .map(|e| ((e.concat_id.as_str(), e.page_id.as_str()), e))
        .collect();
    set.entries
        .par_iter()
        .map(|s| {
            let entry = by_key
                .get(&(s.concat_id.as_str(), s.page_id.as_str()))
                .ok_or_else(|| {
                    Error::Input(format!("samples name unknown entry {}/{}", s.concat_id, s.page_id))
                })?;
            if s.samples.is_empty() {
                return Err(Error::Input(format!("{}: no samples", s.page_id)));
            }
            let reference = &entry.reference_completion;
            let ref_tokens = tokenize(reference);
            let mut rec = EvalRecord {
                concat_id: entry.concat_id.clone(),
                page_id: entry.page_id.clone(),
                page_type: entry.page_type,
                strategy: set.strategy,
                n: s.samples.len() as u64,
                c: 0,
                bleu: vec![],
                chrf: vec![],
                ter: vec![],
                bleu_stats: vec![],
            };
            for sample in &s.samples {
                if run_tests(sample, &entry.test_spec)?.passed {
                    rec.c += 1;
                }
                let toks = tokenize(sample);
                rec.bleu.push(bleu(&toks, &ref_tokens, BLEU_MAX_N)?);
                rec.bleu_stats.push(BleuStats::compute(&toks, &ref_tokens, BLEU_MAX_N));
                rec.chrf.push(chrf(sample, reference, CHRF_N, CHRF_BETA)?);
                rec.ter.push(ter(&toks, &ref_tokens)?);
            }
            Ok(rec)
        })
        .collect()
}

/// Prompts the client `n` times per entry, through the same prompt assembly
/// as page generation. A failed completion becomes an empty sample and a
/// warning.
pub fn collect_samples(
    dataset: &[DatasetEntry],
    n: u64,
    client: &dyn LlmClient,
    knowledge: Option<Knowledge<'_>>,
    templates: &TemplateSet,
    config: &PipelineConfig,
) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::Parameter("need at least one sample per entry".into()));
    }
    let results: Vec<(EntrySamples, Vec<String>)> = dataset
        .par_iter()
        .map(|entry| {
            let task = entry.task();
            let tasks = [task.clone()];
            let inputs = PipelineInputs {
                tasks: &tasks,
                wireframe: None,
                api_schema: "",
                knowledge,
                templates,
            };
            let tree = render_file_tree(&[task.target_path.clone()]);
            let prompt = prepare_page(&task, &inputs, config, &tree)?.bundle.render();
            let mut warnings = Vec::new();
            let samples = (0..n)
                .map(|i| match client.complete(&prompt, i) {
                    Ok(text) => clean_completion(&text),
                    Err(e) => {
                        warnings.push(format!("{} sample {i}: {e}", entry.page_id));
                        String::new()
                    }
                })
                .collect();
            Ok((
                EntrySamples {
                    concat_id: entry.concat_id.clone(),
                    page_id: entry.page_id.clone(),
                    samples,
                },
                warnings,
            ))
        })
        .collect::<Result<_>>()?;
    let mut set = SampleSet {
        strategy: config.strategy,
        model_id: client.model_id().to_string(),
        entries: vec![],
        warnings: vec![],
    };
    for (e, w) in results {
        set.entries.push(e);
        set.warnings.extend(w);
    }
    Ok(set)
}

/// Mock generator whose samples pass independently with probability `p`:
/// a passing sample is the reference, a failing one is the reference with
/// its last closing brace removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliSampler {
    pub p: f64,
    pub seed: u64,
}

impl BernoulliSampler {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("pass probability {p} is not in [0, 1]")));
        }
        Ok(BernoulliSampler { p, seed })
    }

    fn passes(&self, entry: &DatasetEntry, sample: u64) -> bool {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(entry.concat_id.as_bytes());
        h.update([0]);
        h.update(entry.page_id.as_bytes());
        h.update(sample.to_le_bytes());
        let digest = h.finalize();
        let mut bytes = [0u8; 32];
        bytes.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(bytes).gen_bool(self.p)
    }

    pub fn sample(&self, entry: &DatasetEntry, sample: u64) -> String {
        let reference = &entry.reference_completion;
        if self.passes(entry, sample) {
            return reference.clone();
        }
        match reference.rfind('}') {
            Some(i) => format!("{}{}", &reference[..i], &reference[i + 1..]),
            None => String::new(),
        }
    }

    pub fn sample_set(&self, dataset: &[DatasetEntry], n: u64, strategy: ShotStrategy) -> SampleSet {
        SampleSet {
            strategy,
            model_id: format!("mock-bernoulli-{}", self.p),
            entries: dataset
                .iter()
                .map(|e| EntrySamples {
                    concat_id: e.concat_id.clone(),
                    page_id: e.page_id.clone(),
                    samples: (0..n).map(|i| self.sample(e, i)).collect(),
                })
                .collect(),
            warnings: vec![],
        }
    }
}

//! Reference corpus, pass@k and similarity metrics, and report tables.

pub mod dataset;
pub mod metrics;
pub mod report;
pub mod samples;

pub use dataset::{
    corpus_from_jsonl, corpus_to_jsonl, generate_corpus, run_tests, Assertion, CorpusCounts,
    CorpusTemplates, DatasetEntry, StyleFlavor, TestOutcome, TestSpec, Variation,
};
pub use metrics::{bleu, chrf, corpus_bleu, pass_at_k, ter, ter_edits, tokenize, BleuStats};
pub use report::{
    aggregate_report, strategy_label, BleuMode, Column, EvalRecord, MetricReport, PassMode,
    ReportOptions, ReportRow,
};
pub use samples::{collect_samples, score_samples, BernoulliSampler, EntrySamples, SampleSet};

//! The templated reference corpus and its structural page tests.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dialect::ParsedSource;
use crate::error::{Error, Result};
use crate::promptgen::{component_name, fill};
use crate::repair::{static_validate, ImportPolicy};
use crate::task::{page_marker, PageTask, PageType};

pub const CORPUS_FORMAT: &str = "dashgen-corpus";
pub const CORPUS_VERSION: u32 = 1;

const BUILTIN: &[(&str, &str)] = &[
    ("base.prompt", include_str!("../../templates/corpus/base.prompt.txt")),
    ("base.jsx", include_str!("../../templates/corpus/base.jsx.txt")),
    ("home.prompt", include_str!("../../templates/corpus/home.prompt.txt")),
    ("home.jsx", include_str!("../../templates/corpus/home.jsx.txt")),
    ("geovisualization.prompt", include_str!("../../templates/corpus/geovisualization.prompt.txt")),
    ("geovisualization.jsx", include_str!("../../templates/corpus/geovisualization.jsx.txt")),
];

/// A prompt template and a reference template per page type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusTemplates {
    templates: BTreeMap<String, String>,
}

impl CorpusTemplates {
    pub fn builtin() -> Self {
        CorpusTemplates {
            templates: BUILTIN
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    /// Reads `<type>.prompt.txt` and `<type>.jsx.txt` for every page type.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut templates = BTreeMap::new();
        for t in PageType::ALL {
            for part in ["prompt", "jsx"] {
                let path = dir.join(format!("{t}.{part}.txt"));
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::Config(format!("corpus template {}: {e}", path.display()))
                })?;
                templates.insert(format!("{t}.{part}"), text);
            }
        }
        Ok(CorpusTemplates { templates })
    }

    /// Drops one template; a set built this way is incomplete on purpose.
    pub fn without(mut self, page_type: PageType, part: &str) -> Self {
        self.templates.remove(&format!("{page_type}.{part}"));
        self
    }

    fn get(&self, page_type: PageType, part: &str) -> Result<&str> {
        self.templates
            .get(&format!("{page_type}.{part}"))
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("no {part} template for {page_type} pages")))
    }
}

impl Default for CorpusTemplates {
    fn default() -> Self {
        CorpusTemplates::builtin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StyleFlavor {
    /// `export default function Name() { ... }`
    Function,
    /// `const Name = () => { ... }; export default Name;`
    Arrow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variation {
    pub theme: String,
    pub prefix: String,
    pub suffix: String,
    /// Seeds the order of the page's repeated items.
    pub ordering_seed: u64,
    pub style: StyleFlavor,
}

/// One structural check on a candidate page.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Assertion {
    /// Substring the page must contain.
    Marker(String),
    /// Module the page must import.
    Import(String),
    /// Token of the expected data shape.
    Shape(String),
}

impl Assertion {
    fn holds(&self, text: &str, imports: &BTreeSet<String>) -> bool {
        match self {
            Assertion::Marker(s) | Assertion::Shape(s) => text.contains(s.as_str()),
            Assertion::Import(m) => imports.contains(m),
        }
    }
}

impl std::fmt::Display for Assertion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Assertion::Marker(s) => write!(f, "marker `{s}`"),
            Assertion::Import(s) => write!(f, "import `{s}`"),
            Assertion::Shape(s) => write!(f, "shape token `{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSpec {
    pub assertions: Vec<Assertion>,
    /// Packages a candidate may import.
    pub allowed_packages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub concat_id: String,
    pub page_id: String,
    pub page_type: PageType,
    pub difficulty: u8,
    pub prompt: String,
    pub reference_completion: String,
    pub test_spec: TestSpec,
    pub variation: Variation,
}

impl DatasetEntry {
    /// The page as a generation task, with the prompt as its requirements.
    pub fn task(&self) -> PageTask {
        let mut t = PageTask::new(
            &self.concat_id,
            &self.page_id,
            self.page_type,
            &format!("/{}", self.page_id),
        );
        t.requirements = self.prompt.clone();
        t
    }

    pub fn key(&self) -> (String, String) {
        (self.concat_id.clone(), self.page_id.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestOutcome {
    pub passed: bool,
    /// Static diagnostics first, then failed assertions.
    pub failures: Vec<String>,
}

/// Static validation, then every assertion. A candidate that fails static
/// validation fails regardless of its assertions, which are not reported.
pub fn run_tests(candidate: &str, spec: &TestSpec) -> Result<TestOutcome> {
    if spec.assertions.is_empty() {
        return Err(Error::Input("test spec has no assertions".into()));
    }
    let policy = ImportPolicy::new(spec.allowed_packages.iter().cloned(), Vec::<String>::new());
    let report = static_validate("candidate.jsx", candidate, &policy);
    if !report.passed {
        return Ok(TestOutcome {
            passed: false,
            failures: report.diagnostics.iter().map(|d| d.to_string()).collect(),
        });
    }
    let imports: BTreeSet<String> = ParsedSource::parse(candidate)
        .imports()
        .into_iter()
        .map(|i| i.specifier)
        .collect();
    let failures: Vec<String> = spec
        .assertions
        .iter()
        .filter(|a| !a.holds(candidate, &imports))
        .map(|a| format!("missing {a}"))
        .collect();
    Ok(TestOutcome {
        passed: failures.is_empty(),
        failures,
    })
}

/// How many entries of each page type to generate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub base: usize,
    pub home: usize,
    pub geovisualization: usize,
}

impl CorpusCounts {
    pub fn new(base: usize, home: usize, geovisualization: usize) -> Self {
        CorpusCounts { base, home, geovisualization }
    }

    pub fn get(&self, t: PageType) -> usize {
        match t {
            PageType::Base => self.base,
            PageType::Home => self.home,
            PageType::Geovisualization => self.geovisualization,
        }
    }
}

const THEMES: &[(&str, &str)] = &[
    ("ocean", "#1d4e89"),
    ("forest", "#2e6b3a"),
    ("desert", "#b5651d"),
    ("slate", "#3f4756"),
    ("tundra", "#5b7c99"),
];
const PREFIXES: &[&str] = &["Build", "Create", "Generate", "Implement"];
const SUFFIXES: &[&str] = &[
    "Keep the component self-contained.",
    "Return a single React component.",
    "Prefer small, readable JSX.",
    "Do not fetch remote data.",
];
const TOPICS: &[&str] = &[
    "Air Quality",
    "River Gauges",
    "Heat Risk",
    "Flood Watch",
    "Soil Moisture",
    "Storm Tracks",
];
const SENTENCES: &[&str] = &[
    "Observations are refreshed every hour.",
    "Values are quality controlled before release.",
    "Use the navigation bar to switch pages.",
    "Historic records start in 1990.",
    "Contact the data team for bulk downloads.",
    "All times are given in UTC.",
];
const METADATA: &[(&str, &str)] = &[
    ("Owner", "Regional Climate Office"),
    ("Coverage", "Tennessee Valley"),
    ("Update cadence", "Hourly"),
    ("License", "CC BY 4.0"),
    ("Contact", "data@example.org"),
];
const LAYERS: &[&str] = &["Temperature", "Precipitation", "Wind", "Humidity"];

fn pick<'a, T, R: Rng>(rng: &mut R, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

fn spec_for(page_type: PageType, page_id: &str) -> TestSpec {
    let mut assertions = vec![
        Assertion::Marker(page_marker(page_id)),
        Assertion::Import("react".into()),
    ];
    let mut allowed = vec!["react".to_string()];
    match page_type {
        PageType::Base => {
            assertions.push(Assertion::Shape("<h1".into()));
            assertions.push(Assertion::Shape("<p".into()));
        }
        PageType::Home => {
            assertions.push(Assertion::Shape("<img".into()));
            assertions.push(Assertion::Shape("<dl".into()));
        }
        PageType::Geovisualization => {
            assertions.push(Assertion::Marker("data-role=\"map\"".into()));
            assertions.push(Assertion::Import("react-leaflet".into()));
            assertions.push(Assertion::Shape("FeatureCollection".into()));
            assertions.push(Assertion::Shape("coordinates".into()));
            allowed.push("react-leaflet".into());
        }
    }
    TestSpec {
        assertions,
        allowed_packages: allowed,
    }
}

fn js_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

struct Draft {
    vars: BTreeMap<&'static str, String>,
}

fn draft(page_type: PageType, page_id: &str, concat_id: &str, v: &Variation, color: &str, rng: &mut ChaCha8Rng) -> Draft {
    let name = component_name(page_id);
    let (open, close) = match v.style {
        StyleFlavor::Function => (format!("export default function {name}() {{"), "}".to_string()),
        StyleFlavor::Arrow => (
            format!("const {name} = () => {{"),
            format!("}};\n\nexport default {name};"),
        ),
    };
    let title = format!("{} {}", pick(rng, TOPICS), page_type.display_name());
    let mut order = ChaCha8Rng::seed_from_u64(v.ordering_seed);
    let mut vars: BTreeMap<&'static str, String> = BTreeMap::from([
        ("page_id", page_id.to_string()),
        ("concat_id", concat_id.to_string()),
        ("theme", v.theme.clone()),
        ("color", color.to_string()),
        ("prefix", v.prefix.clone()),
        ("suffix", v.suffix.clone()),
        ("title", title),
        ("open", open),
        ("close", close),
    ]);
    match page_type {
        PageType::Base => {
            let mut s: Vec<&str> = SENTENCES.to_vec();
            s.shuffle(&mut order);
            s.truncate(3);
            vars.insert("paragraph_list", s.iter().map(|p| format!("- {p}")).collect::<Vec<_>>().join("\n"));
            vars.insert("paragraphs", s.iter().map(|p| format!("      <p>{p}</p>")).collect::<Vec<_>>().join("\n"));
        }
        PageType::Home => {
            let mut m: Vec<(&str, &str)> = METADATA.to_vec();
            m.shuffle(&mut order);
            m.truncate(3);
            vars.insert("banner", format!("/img/{}-banner.jpg", v.theme));
            vars.insert("metadata_list", m.iter().map(|(k, d)| format!("- {k}: {d}")).collect::<Vec<_>>().join("\n"));
            vars.insert(
                "metadata",
                m.iter()
                    .map(|(k, d)| format!("  [{}, {}],", js_string(k), js_string(d)))
                    .collect::<Vec<_>>()
                    .join("\n"),
            );
        }
        PageType::Geovisualization => {
            let mut layers: Vec<&str> = LAYERS.to_vec();
            layers.shuffle(&mut order);
            layers.truncate(3);
            let lat = 35.0 + rng.gen_range(0..40) as f64 / 10.0;
            let lon = -90.0 + rng.gen_range(0..60) as f64 / 10.0;
            let stations: Vec<(String, f64, f64)> = (0..3)
                .map(|i| {
                    (
                        format!("S{}", i + 1),
                        lon + rng.gen_range(-10..=10) as f64 / 10.0,
                        lat + rng.gen_range(-10..=10) as f64 / 10.0,
                    )
                })
                .collect();
            vars.insert("center", format!("{lat:.1}, {lon:.1}"));
            vars.insert("zoom", rng.gen_range(6..=9).to_string());
            vars.insert("layer_list", layers.join(", "));
            vars.insert("layers", layers.iter().map(|l| js_string(l)).collect::<Vec<_>>().join(", "));
            vars.insert(
                "station_list",
                stations
                    .iter()
                    .map(|(n, x, y)| format!("- {n} at [{x:.1}, {y:.1}]"))
                    .collect::<Vec<_>>()
                    .join("\n"),
            );
            vars.insert(
                "features",
                stations
                    .iter()
                    .map(|(n, x, y)| {
                        format!(
                            "    {{ type: \"Feature\", properties: {{ name: \"{n}\" }}, geometry: {{ type: \"Point\", coordinates: [{x:.1}, {y:.1}] }} }},"
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n"),
            );
        }
    }
    Draft { vars }
}

/// Expands the page templates into a corpus.
///
/// Every variation axis is drawn from one ChaCha8 stream seeded with `seed`,
/// so equal inputs give identical corpora. Entry `i` of each page type
/// belongs to app instance `app-<i>`, so an instance holds at most one page
/// of each type. Each reference is checked against its own tests.
pub fn generate_corpus(counts: CorpusCounts, seed: u64, templates: &CorpusTemplates) -> Result<Vec<DatasetEntry>> {
    for t in PageType::ALL {
        templates.get(t, "prompt")?;
        templates.get(t, "jsx")?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instances = PageType::ALL.iter().map(|&t| counts.get(t)).max().unwrap_or(0);
    let mut out = Vec::new();
    for i in 0..instances {
        let concat_id = format!("app-{i:04}");
        for t in PageType::ALL {
            if i >= counts.get(t) {
                continue;
            }
            let page_id = format!("{t}-{i:04}");
            let (theme, color) = *pick(&mut rng, THEMES);
            let variation = Variation {
                theme: theme.to_string(),
                prefix: pick(&mut rng, PREFIXES).to_string(),
                suffix: pick(&mut rng, SUFFIXES).to_string(),
                ordering_seed: rng.gen(),
                style: if rng.gen_bool(0.5) { StyleFlavor::Function } else { StyleFlavor::Arrow },
            };
            let d = draft(t, &page_id, &concat_id, &variation, color, &mut rng);
            let prompt = fill(&format!("{t}.prompt"), templates.get(t, "prompt")?, &d.vars)?
                .trim_end()
                .to_string();
            let reference = format!(
                "{}\n",
                fill(&format!("{t}.jsx"), templates.get(t, "jsx")?, &d.vars)?.trim_end()
            );
            let test_spec = spec_for(t, &page_id);
            let outcome = run_tests(&reference, &test_spec)?;
            if !outcome.passed {
                return Err(Error::Config(format!(
                    "{t} template yields a reference that fails its tests: {}",
                    outcome.failures.join("; ")
                )));
            }
            out.push(DatasetEntry {
                concat_id: concat_id.clone(),
                page_id,
                page_type: t,
                difficulty: t.difficulty(),
                prompt,
                reference_completion: reference,
                test_spec,
                variation,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CorpusHeader {
    format: String,
    version: u32,
    entries: usize,
}

/// JSON Lines: a header line, then one entry per line.
pub fn corpus_to_jsonl(entries: &[DatasetEntry]) -> String {
    let header = CorpusHeader {
        format: CORPUS_FORMAT.into(),
        version: CORPUS_VERSION,
        entries: entries.len(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("entries serialize"));
        out.push('\n');
    }
    out
}

pub fn corpus_from_jsonl(text: &str) -> Result<Vec<DatasetEntry>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: CorpusHeader = serde_json::from_str(
        lines
            .next()
            .ok_or_else(|| Error::Format("corpus file is empty".into()))?,
    )
    .map_err(|e| Error::Format(format!("corpus header: {e}")))?;
    if header.format != CORPUS_FORMAT || header.version != CORPUS_VERSION {
        return Err(Error::Format(format!(
            "expected {CORPUS_FORMAT} v{CORPUS_VERSION}, found {} v{}",
            header.format, header.version
        )));
    }
    let entries = lines
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Format(format!("corpus entry {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<DatasetEntry>>>()?;
    if entries.len() != header.entries {
        return Err(Error::Format(format!(
            "corpus header announces {} entries, file holds {}",
            header.entries,
            entries.len()
        )));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_of_each_shares_an_instance() {
        let c = generate_corpus(CorpusCounts::new(1, 1, 1), 42, &CorpusTemplates::builtin()).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|e| e.concat_id == c[0].concat_id));
        let d: Vec<u8> = c.iter().map(|e| e.difficulty).collect();
        assert_eq!(d, [1, 2, 3]);
    }

    #[test]
    fn empty_counts_empty_corpus() {
        assert!(generate_corpus(CorpusCounts::default(), 1, &CorpusTemplates::builtin())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn missing_template_is_config_error() {
        let t = CorpusTemplates::builtin().without(PageType::Home, "jsx");
        assert!(matches!(
            generate_corpus(CorpusCounts::new(1, 0, 0), 1, &t),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn builtin_matches_shipped_directory() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("templates/corpus");
        assert_eq!(CorpusTemplates::load_dir(&dir).unwrap(), CorpusTemplates::builtin());
    }

    #[test]
    fn jsonl_round_trip() {
        let c = generate_corpus(CorpusCounts::new(2, 1, 1), 5, &CorpusTemplates::builtin()).unwrap();
        assert_eq!(corpus_from_jsonl(&corpus_to_jsonl(&c)).unwrap(), c);
    }

    #[test]
    fn header_version_checked() {
        let text = "{\"format\":\"dashgen-corpus\",\"version\":9,\"entries\":0}\n";
        assert!(matches!(corpus_from_jsonl(text), Err(Error::Format(_))));
    }

    #[test]
    fn empty_spec_is_input_error() {
        let spec = TestSpec { assertions: vec![], allowed_packages: vec![] };
        assert!(matches!(run_tests("", &spec), Err(Error::Input(_))));
    }
}

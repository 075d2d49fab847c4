use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use dashgen::kbase::{build_graph, ingest_corpus, EntityKind, Taxonomy};
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn dashgen(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_dashgen"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Indexes the fixture corpus into `dir/state`.
fn indexed(dir: &Path) {
    let corpus = path_str(&fixtures().join("corpus"));
    let out = dashgen(dir, &["--corpus", &corpus, "--state", "state", "index"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
}

fn generate(dir: &Path, workspace: &str, strategy: &str) -> Output {
    let app = path_str(&fixtures().join("app/app.toml"));
    dashgen(
        dir,
        &["--state", "state", "--workspace", workspace, "--mock-llm", "--strategy", strategy, "generate", "--app", &app],
    )
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    walk(root, root)
}

fn walk(root: &Path, dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(root, &p));
        } else {
            let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            out.insert(rel, std::fs::read(&p).unwrap());
        }
    }
    out
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn index_prints_graph_counts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path_str(&fixtures().join("corpus"));
    let out = dashgen(dir.path(), &["--corpus", &corpus, "--state", "state", "index"]);
    assert_eq!(out.code, 0, "{}", out.stderr);

    let ingest = ingest_corpus(&fixtures().join("corpus"), &Taxonomy::default()).unwrap();
    let graph = build_graph(&ingest.entities).unwrap();
    for kind in [EntityKind::Library, EntityKind::Component, EntityKind::Feature, EntityKind::Snippet] {
        let line = format!("{:<10} {}", kind.as_str(), graph.count_kind(kind));
        assert!(out.stdout.contains(&line), "{line:?} not in\n{}", out.stdout);
    }
    assert!(dir.path().join("state/graph.ndjson").exists());
    assert!(dir.path().join("state/index.json").exists());
}

#[test]
fn index_file_is_stable_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    indexed(a.path());
    indexed(b.path());
    indexed(b.path());
    let read = |d: &Path| std::fs::read(d.join("state/index.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn empty_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("corpus")).unwrap();
    let out = dashgen(dir.path(), &["--corpus", "corpus", "index"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("empty corpus"), "{}", out.stderr);
}

#[test]
fn generate_writes_three_routed_pages() {
    let dir = tempfile::tempdir().unwrap();
    indexed(dir.path());
    let out = generate(dir.path(), "ws", "few");
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    for page in ["About", "Home", "SiteMap"] {
        assert!(dir.path().join(format!("ws/pages/{page}.jsx")).exists());
    }
    let manifest = read_json(&dir.path().join("ws/routes.json"));
    assert_eq!(manifest["routes"].as_object().unwrap().len(), 3);

    let run = read_json(&dir.path().join("state/last-run.json"));
    assert_eq!(run["format"], "dashgen-run");
    assert_eq!(run["version"], 1);
    let id = run["run_id"].as_str().unwrap();
    assert!(dir.path().join(format!("state/runs/{id}.json")).exists());
    assert!(!dir.path().join("ws/last-run.json").exists());
}

#[test]
fn generate_without_index_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), "ws", "few");
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("dashgen index"), "{}", out.stderr);
}

/// Prompt sections other than the exemplars.
fn without_exemplars(prompt: &str) -> Vec<String> {
    prompt
        .split("\n\n## ")
        .filter(|s| !s.starts_with("Exemplars"))
        .map(str::to_string)
        .collect()
}

#[test]
fn zero_and_few_shot_prompts_differ_only_in_exemplars() {
    let dir = tempfile::tempdir().unwrap();
    indexed(dir.path());
    let prompts = |ws: &str, strategy: &str| -> Vec<String> {
        assert_eq!(generate(dir.path(), ws, strategy).code, 0);
        let run = read_json(&dir.path().join("state/last-run.json"));
        run["tasks"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t["transcripts"][0]["prompt"].as_str().unwrap().to_string())
            .collect()
    };
    let zero = prompts("ws-zero", "zero");
    let few = prompts("ws-few", "few:2");
    assert_eq!(zero.len(), 3);
    let mut some_exemplars = false;
    for (z, f) in zero.iter().zip(&few) {
        assert!(!z.contains("## Exemplars"));
        some_exemplars |= f.contains("## Exemplars");
        assert_eq!(without_exemplars(z), without_exemplars(f));
    }
    assert!(some_exemplars);
}

#[test]
fn repair_on_clean_workspace_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    indexed(dir.path());
    assert_eq!(generate(dir.path(), "ws", "few").code, 0);
    let before = snapshot(&dir.path().join("ws"));
    let out = dashgen(dir.path(), &["--state", "state", "--workspace", "ws", "--mock-llm", "repair"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(snapshot(&dir.path().join("ws")), before);
    let record = read_json(&dir.path().join("state/repair.json"));
    assert_eq!(record["format"], "dashgen-repair");
    assert_eq!(record["attempts_used"], 1);
    assert!(record["history"].as_array().unwrap().is_empty());
    for o in record["per_file"].as_object().unwrap().values() {
        assert_eq!(o["final_status"], "untouched");
    }
}

#[test]
fn repair_fixes_a_dropped_brace() {
    let dir = tempfile::tempdir().unwrap();
    indexed(dir.path());
    assert_eq!(generate(dir.path(), "ws", "few").code, 0);
    let page = dir.path().join("ws/pages/Home.jsx");
    let original = std::fs::read_to_string(&page).unwrap();
    let cut = original.rfind('}').unwrap();
    std::fs::write(&page, format!("{}{}", &original[..cut], &original[cut + 1..])).unwrap();

    let out = dashgen(dir.path(), &["--state", "state", "--workspace", "ws", "--mock-llm", "repair"]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    let squash = |s: &str| s.split_whitespace().collect::<String>();
    assert_eq!(squash(&std::fs::read_to_string(&page).unwrap()), squash(&original));
    let record = read_json(&dir.path().join("state/repair.json"));
    assert_eq!(record["per_file"]["pages/Home.jsx"]["final_status"], "fixed");
    assert_eq!(record["per_file"]["pages/Home.jsx"]["fixes_tried"], 1);
    assert!(dir.path().join("state/repair-log.jsonl").exists());
}

#[test]
fn repair_that_cannot_fix_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("ws/pages")).unwrap();
    std::fs::write(dir.path().join("ws/pages/Bad.jsx"), "export default function Bad() { return (<div>; }\n").unwrap();
    let out = dashgen(
        dir.path(),
        &["--state", "state", "--workspace", "ws", "--mock-llm", "--attempts", "2", "--fixes", "1", "repair"],
    );
    assert_eq!(out.code, 1, "{}{}", out.stdout, out.stderr);
    let record = read_json(&dir.path().join("state/repair.json"));
    assert_eq!(record["per_file"]["pages/Bad.jsx"]["final_status"], "still_broken");
}

#[test]
fn evaluate_reproduces_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let eval = fixtures().join("eval");
    let dataset = path_str(&eval.join("dataset.jsonl"));
    let zero = path_str(&eval.join("samples-zero.jsonl"));
    let one = path_str(&eval.join("samples-one.jsonl"));
    let out = dashgen(
        dir.path(),
        &["evaluate", "--dataset", &dataset, "--samples", &zero, "--samples", &one, "--out", "report"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let golden = std::fs::read_to_string(eval.join("report.txt")).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("report/report.txt")).unwrap(), golden);
    assert_eq!(out.stdout, golden);

    let inspected = dashgen(dir.path(), &["inspect", "report/report.json"]);
    assert_eq!(inspected.code, 0);
    assert_eq!(inspected.stdout, golden);
}

#[test]
fn evaluate_with_bernoulli_sampler() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = path_str(&fixtures().join("eval/dataset.jsonl"));
    let out = dashgen(
        dir.path(),
        &["evaluate", "--dataset", &dataset, "--mock-pass-rate", "1", "--n", "3", "--ks", "1,3", "--strategies", "one", "--out", "r"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("Pass@3"));
    assert!(!out.stdout.contains("Pass@5"));
    assert!(dir.path().join("r/samples-one.jsonl").exists());
    let report = read_json(&dir.path().join("r/report.json"));
    for row in report["rows"].as_array().unwrap() {
        assert_eq!(row["pass_at"], serde_json::json!([1.0, 1.0]));
    }
}

#[test]
fn dataset_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.jsonl", "b.jsonl"] {
        let out = dashgen(dir.path(), &["--seed", "7", "dataset", "--counts", "2,2,2", "--out", name]);
        assert_eq!(out.code, 0, "{}", out.stderr);
    }
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.jsonl")).unwrap());
    let out = dashgen(dir.path(), &["inspect", "a.jsonl"]);
    assert!(out.stdout.contains("6 entries in 2 app instances"), "{}", out.stdout);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dashgen(dir.path(), &["--attempts", "0", "repair"]).code, 2);
    assert_eq!(dashgen(dir.path(), &["--strategy", "many", "index"]).code, 2);
    assert_eq!(dashgen(dir.path(), &["--config", "missing.toml", "index"]).code, 2);
    assert_eq!(dashgen(dir.path(), &["dataset", "--counts", "1,2"]).code, 2);
    std::fs::write(dir.path().join("dashgen.toml"), "[retrieval]\nd = 63\n").unwrap();
    assert_eq!(dashgen(dir.path(), &["index"]).code, 2);
}

#[test]
fn config_file_paths_are_relative_to_it() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path_str(&fixtures().join("corpus"));
    std::fs::create_dir(dir.path().join("conf")).unwrap();
    std::fs::write(
        dir.path().join("conf/dashgen.toml"),
        format!("seed = 3\n[paths]\ncorpus = {corpus:?}\nstate = \"st\"\n[llm]\nmode = \"mock\"\n"),
    )
    .unwrap();
    let out = dashgen(dir.path(), &["--config", "conf/dashgen.toml", "index"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(dir.path().join("conf/st/index.json").exists());
    let idx = dashgen(dir.path(), &["inspect", "conf/st/index.json"]);
    assert!(idx.stdout.contains("seed=3"), "{}", idx.stdout);
}

#[test]
fn inspect_describes_run_and_wireframe() {
    let dir = tempfile::tempdir().unwrap();
    indexed(dir.path());
    assert_eq!(generate(dir.path(), "ws", "one").code, 0);
    let run = dashgen(dir.path(), &["inspect", "state/last-run.json"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("3 tasks, 0 failed"), "{}", run.stdout);
    let svg = path_str(&fixtures().join("app/wireframe.svg"));
    let wf = dashgen(dir.path(), &["inspect", &svg]);
    assert!(wf.stdout.contains("page=SiteMap"), "{}", wf.stdout);
    let unknown = dashgen(dir.path(), &["inspect", "ws/pages/Home.jsx"]);
    assert_eq!(unknown.code, 2);
}

#[test]
fn fixed_invalid_page_is_routed_after_repair() {
    let dir = tempfile::tempdir().unwrap();
    indexed(dir.path());
    assert_eq!(generate(dir.path(), "ws", "few").code, 0);
    let page = dir.path().join("ws/pages/Home.jsx");
    let original = std::fs::read_to_string(&page).unwrap();
    let cut = original.rfind('}').unwrap();
    std::fs::write(&page, format!("{}{}", &original[..cut], &original[cut + 1..])).unwrap();

    // What generate records when a written page fails validation.
    let run_path = dir.path().join("state/last-run.json");
    let mut run = read_json(&run_path);
    for t in run["tasks"].as_array_mut().unwrap() {
        if t["task"]["page_id"] == "Home" {
            t["status"] = serde_json::json!({"status": "invalid", "diagnostics": ["unbalanced braces"]});
        }
    }
    std::fs::write(&run_path, serde_json::to_string(&run).unwrap()).unwrap();
    let routes_path = dir.path().join("ws/routes.json");
    let mut routes = read_json(&routes_path);
    routes["routes"].as_object_mut().unwrap().remove("/");
    std::fs::write(&routes_path, serde_json::to_string(&routes).unwrap()).unwrap();

    let out = dashgen(dir.path(), &["--state", "state", "--workspace", "ws", "--mock-llm", "repair"]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.contains("routed Home"), "{}", out.stdout);
    let routes = read_json(&routes_path);
    assert_eq!(routes["routes"]["/"]["page_id"], "Home");
    let record = read_json(&dir.path().join("state/repair.json"));
    assert_eq!(record["reinjected"], serde_json::json!(["Home"]));
    assert!(std::fs::read_to_string(dir.path().join("ws/App.jsx")).unwrap().contains("Home"));
}

use std::collections::BTreeSet;

use dashgen::kbase::{build_graph, entity_text, DomainLabel, EntityKind, KnowledgeEntity, KnowledgeGraph};
use dashgen::retrieval::kmeans::squared_distance;
use dashgen::retrieval::{
    build_entity_index, embed, retrieve, train_index, EmbeddingVector, HashingEmbedder,
    IndexConfig, IvfadcIndex, RetrievalParams,
};
use dashgen::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> EmbeddingVector {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    EmbeddingVector::new(v).normalized()
}

fn dataset(n: usize, d: usize, seed: u64) -> Vec<(String, EmbeddingVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| (format!("v{i:05}"), random_unit(&mut rng, d))).collect()
}

/// Exact k nearest by linear scan, ties by id.
fn linear_scan(items: &[(String, EmbeddingVector)], q: &EmbeddingVector, k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(f64, &String)> = items
        .iter()
        .map(|(id, v)| (squared_distance(v.values(), q.values()), id))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    all.into_iter().take(k).map(|(d, id)| (id.clone(), d)).collect()
}

/// 40 vectors with k_s = 40: every residual sub-vector becomes its own
/// codeword, so encoding is lossless.
fn lossless_fixture() -> (Vec<(String, EmbeddingVector)>, IvfadcIndex) {
    let items = dataset(40, 8, 3);
    let index = train_index(&items, IndexConfig { d: 8, k_c: 4, m: 4, k_s: 40, seed: 1 }).unwrap();
    (items, index)
}

#[test]
fn lossless_fixture_really_is_lossless() {
    let (items, index) = lossless_fixture();
    for (_, v) in &items {
        let q = index.reconstruct(&index.encode(v.values()).unwrap());
        assert!(squared_distance(&q, v.values()) < 1e-20);
    }
}

#[test]
fn lossless_search_matches_linear_scan() {
    let (items, index) = lossless_fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for rerank in [false, true] {
        for _ in 0..20 {
            let q = random_unit(&mut rng, 8);
            let params = RetrievalParams { k: 7, nprobe: 4, sim_threshold: -1.0, rerank };
            let got: Vec<String> = index.search(&q, &params).unwrap().into_iter().map(|n| n.id).collect();
            let want: Vec<String> = linear_scan(&items, &q, 7).into_iter().map(|(id, _)| id).collect();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn stored_vector_is_its_own_nearest() {
    let (items, index) = lossless_fixture();
    let params = RetrievalParams { k: 3, nprobe: 1, sim_threshold: -1.0, rerank: false };
    let hits = index.search(&items[17].1, &params).unwrap();
    assert_eq!(hits[0].id, items[17].0);
    assert!(hits[0].distance.abs() < 1e-12);
}

#[test]
fn k_above_store_size_returns_everything_sorted() {
    let (items, index) = lossless_fixture();
    let q = &items[0].1;
    let params = RetrievalParams { k: 100, nprobe: 4, sim_threshold: -1.0, rerank: true };
    let hits = index.search(q, &params).unwrap();
    assert_eq!(hits.len(), 40);
    assert!(hits.windows(2).all(|w| w[0].distance <= w[1].distance));
}

#[test]
fn inverted_lists_partition_and_codes_reencode() {
    let items = dataset(100, 16, 11);
    let index = train_index(&items, IndexConfig { d: 16, k_c: 4, m: 4, k_s: 16, seed: 7 }).unwrap();
    let lists = index.inverted_lists();
    assert_eq!(lists.iter().map(Vec::len).sum::<usize>(), 100);
    let mut seen = BTreeSet::new();
    for (list_id, list) in lists.iter().enumerate() {
        for entry in list {
            assert!(seen.insert(entry.id.clone()), "{} in two lists", entry.id);
            assert_eq!(entry.code.len(), 4);
            // Oracle: brute-force nearest coarse centroid, lower index on ties.
            let raw = index.raw_vector(&entry.id).unwrap();
            let mut best = (0, f64::INFINITY);
            for (i, c) in index.coarse_centroids().iter().enumerate() {
                let d = squared_distance(c, raw);
                if d < best.1 {
                    best = (i, d);
                }
            }
            assert_eq!(best.0, list_id);
            let enc = index.encode(raw).unwrap();
            assert_eq!((enc.list_id, &enc.code), (list_id, &entry.code));
        }
    }
}

#[test]
fn zero_codeword_never_increases_error() {
    let items = dataset(200, 16, 5);
    let trained = train_index(&items, IndexConfig { d: 16, k_c: 4, m: 4, k_s: 8, seed: 2 }).unwrap();
    let mut pq = trained.sub_codebooks().to_vec();
    for book in &mut pq {
        book[0] = vec![0.0; 4];
    }
    let index =
        IvfadcIndex::from_codebooks(*trained.config(), trained.coarse_centroids().to_vec(), pq).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    for _ in 0..50 {
        let y = random_unit(&mut rng, 16);
        let enc = index.encode(y.values()).unwrap();
        let c = &index.coarse_centroids()[enc.list_id];
        let q = index.reconstruct(&enc);
        assert!(squared_distance(y.values(), &q) <= squared_distance(y.values(), c) + 1e-12);
    }
}

#[test]
fn larger_nprobe_scans_a_superset() {
    let items = dataset(300, 16, 8);
    let index = train_index(&items, IndexConfig { d: 16, k_c: 8, m: 4, k_s: 16, seed: 4 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let q = random_unit(&mut rng, 16);
        for a in 1..=8 {
            let params = RetrievalParams { k: 10, nprobe: a, sim_threshold: -1.0, rerank: true };
            let found: Vec<_> = index.search(&q, &params).unwrap().into_iter().map(|n| n.id).collect();
            for b in a..=8 {
                let scanned: BTreeSet<&str> = index.scanned_ids(q.values(), b).into_iter().collect();
                assert!(found.iter().all(|id| scanned.contains(id.as_str())));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lookup_table_distance_matches_direct(seed in any::<u64>(), qseed in any::<u64>()) {
        let items = dataset(64, 16, seed);
        let index = train_index(&items, IndexConfig { d: 16, k_c: 4, m: 4, k_s: 8, seed }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(qseed);
        let x = random_unit(&mut rng, 16);
        for (_, y) in items.iter().take(16) {
            let enc = index.encode(y.values()).unwrap();
            let table = index.adc_table(x.values(), enc.list_id);
            let adc = IvfadcIndex::adc_distance(&table, &enc.code);
            let direct = squared_distance(x.values(), &index.reconstruct(&enc));
            prop_assert!((adc - direct).abs() < 1e-9, "{} vs {}", adc, direct);
        }
    }
}

fn component(i: usize, name: &str, description: &str) -> KnowledgeEntity {
    KnowledgeEntity {
        entity_id: format!("c{i:02}"),
        kind: EntityKind::Component,
        name: name.into(),
        imports: vec![],
        domain_label: DomainLabel::Other,
        description: description.into(),
        sample_code: format!("export function {name}() {{}}"),
        source_path: format!("{name}.jsx"),
        span: (0, 0),
        features: vec![],
        exemplifies: None,
    }
}

fn twenty_entities() -> KnowledgeGraph {
    let rows = [
        ("MapPanel", "map panel"),
        ("SiteMap", "map of monitoring sites"),
        ("MapLegend", "legend for the map panel"),
        ("Choropleth", "choropleth map of regions"),
        ("SiteDropdown", "site dropdown"),
        ("DateSelector", "date range selector"),
        ("LineChart", "line chart of readings"),
        ("BarChart", "bar chart of totals"),
        ("Header", "page header with title"),
        ("Footer", "page footer"),
        ("NavBar", "navigation bar"),
        ("SearchBox", "search box form"),
        ("Banner", "hero banner image"),
        ("Card", "summary card"),
        ("DataTable", "data table of stations"),
        ("MapPopup", "popup on map marker"),
        ("TileLayer", "map tile layer"),
        ("Sidebar", "sidebar panel"),
        ("Spinner", "loading spinner"),
        ("Tabs", "tabbed panel navigation"),
    ];
    let entities: Vec<_> = rows
        .iter()
        .enumerate()
        .map(|(i, (n, d))| component(i, n, d))
        .collect();
    build_graph(&entities).unwrap()
}

#[test]
fn threshold_filter_matches_exhaustive_cosine_scan() {
    let graph = twenty_entities();
    let provider = HashingEmbedder::default();
    let built = build_entity_index(&graph, &provider, IndexConfig::default()).unwrap();
    assert!(built.clamped);
    let prompt = "component SiteMap: map panel of monitoring sites. domain geovisualization";
    let q = embed(prompt, &provider).unwrap();

    let mut previous: Option<BTreeSet<String>> = None;
    for t in [-1.0, -0.2, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9] {
        let params = RetrievalParams { k: 20, nprobe: built.config.k_c, sim_threshold: t, rerank: true };
        let got: BTreeSet<String> = retrieve(prompt, &graph, &built.index, &provider, &params)
            .unwrap()
            .into_iter()
            .map(|s| s.entity.entity_id)
            .collect();
        let oracle: BTreeSet<String> = graph
            .nodes()
            .filter(|e| embed(&entity_text(e), &provider).unwrap().cosine(&q) >= t)
            .map(|e| e.entity_id.clone())
            .collect();
        assert_eq!(got, oracle, "threshold {t}");
        if t == 0.5 {
            assert!(!got.is_empty() && got.len() < 20, "0.5 cut is trivial");
        }
        if let Some(prev) = &previous {
            assert!(got.is_subset(prev), "threshold {t} added members");
        }
        previous = Some(got);
    }
}

#[test]
fn vacuous_threshold_keeps_search_order() {
    let graph = twenty_entities();
    let provider = HashingEmbedder::default();
    let built = build_entity_index(&graph, &provider, IndexConfig::default()).unwrap();
    let params = RetrievalParams { k: 5, nprobe: 4, sim_threshold: -1.0, rerank: true };
    let got: Vec<String> = retrieve("site dropdown", &graph, &built.index, &provider, &params)
        .unwrap()
        .into_iter()
        .map(|s| s.entity.entity_id)
        .collect();
    let q = embed("site dropdown", &provider).unwrap();
    let searched: Vec<String> = built.index.search(&q, &params).unwrap().into_iter().map(|n| n.id).collect();
    assert_eq!(got, searched);
    assert_eq!(got.len(), 5);
}

#[test]
fn threshold_bounds() {
    let graph = twenty_entities();
    let provider = HashingEmbedder::default();
    let built = build_entity_index(&graph, &provider, IndexConfig::default()).unwrap();
    let over = RetrievalParams { sim_threshold: 1.0 + 1e-9, nprobe: 1, ..Default::default() };
    assert!(matches!(
        retrieve("map", &graph, &built.index, &provider, &over),
        Err(Error::Parameter(_))
    ));
    let one = RetrievalParams { sim_threshold: 1.0, nprobe: 1, ..Default::default() };
    assert!(retrieve("weather radar overlay", &graph, &built.index, &provider, &one)
        .unwrap()
        .is_empty());
}

#[test]
fn recorded_test_embedder_similarity() {
    let provider = HashingEmbedder::default();
    let a = embed("map panel", &provider).unwrap();
    let b = embed("site dropdown", &provider).unwrap();
    let cos = a.cosine(&b);
    assert!(cos < 0.9);
    assert!((cos - RECORDED_COSINE).abs() < 1e-12, "cosine {cos}");
}

// Recorded from the shipped embedder (equals 1/sqrt(99)).
const RECORDED_COSINE: f64 = 0.100_503_781_525_921_21;

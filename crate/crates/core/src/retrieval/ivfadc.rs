//! Inverted file index with asymmetric distance computation.
//!
//! A vector `y` is stored as the id of its nearest coarse centroid plus a
//! product-quantizer code for the residual, so that
//! `q(y) = q1(y) + q2(y - q1(y))`. Queries are compared against `q(y)`
//! through a per-query lookup table and never decompress the codes.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embed::EmbeddingVector;
use super::kmeans::{kmeans, nearest, squared_distance};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const INDEX_FORMAT: &str = "dashgen-ivfadc";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub d: usize,
    pub k_c: usize,
    pub m: usize,
    pub k_s: usize,
    pub seed: u64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            d: 64,
            k_c: 16,
            m: 8,
            k_s: 256,
            seed: 7,
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.m == 0 {
            return Err(Error::Config("d and m must be positive".into()));
        }
        if self.d % self.m != 0 {
            return Err(Error::Config(format!(
                "d = {} is not divisible by m = {}",
                self.d, self.m
            )));
        }
        if self.k_c == 0 {
            return Err(Error::Config("k_c must be at least 1".into()));
        }
        if self.k_s == 0 || self.k_s > u16::MAX as usize + 1 {
            return Err(Error::Config(format!("k_s = {} is out of range", self.k_s)));
        }
        Ok(())
    }

    /// Shrinks `k_c` and `k_s` so that `n` training vectors suffice.
    /// Returns the adjusted config and whether anything changed.
    pub fn fit_to(self, n: usize) -> (IndexConfig, bool) {
        let n = n.max(1);
        let fitted = IndexConfig {
            k_c: self.k_c.min(n),
            k_s: self.k_s.min(n),
            ..self
        };
        (fitted, fitted != self)
    }

    pub fn sub_dim(&self) -> usize {
        self.d / self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalParams {
    pub k: usize,
    pub nprobe: usize,
    pub sim_threshold: f64,
    pub rerank: bool,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        RetrievalParams {
            k: 5,
            nprobe: 4,
            sim_threshold: 0.3,
            rerank: true,
        }
    }
}

impl RetrievalParams {
    pub fn validate(&self, k_c: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        if self.nprobe == 0 || self.nprobe > k_c {
            return Err(Error::Parameter(format!(
                "nprobe = {} must lie in 1..={k_c}",
                self.nprobe
            )));
        }
        if !(-1.0..=1.0).contains(&self.sim_threshold) {
            return Err(Error::Parameter(format!(
                "sim_threshold = {} must lie in [-1, 1]",
                self.sim_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListEntry {
    pub id: String,
    pub code: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub list_id: usize,
    pub code: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub id: String,
    /// Squared Euclidean distance; exact when re-ranked, else approximate.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvfadcIndex {
    config: IndexConfig,
    coarse_centroids: Vec<Vec<f64>>,
    /// `pq[j][c]` is codeword `c` of sub-space `j`.
    pq: Vec<Vec<Vec<f64>>>,
    inverted_lists: Vec<Vec<ListEntry>>,
    raw: BTreeMap<String, Vec<f64>>,
    trained: bool,
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    format: String,
    version: u32,
    #[serde(flatten)]
    config: IndexConfig,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    header: IndexHeader,
    coarse_centroids: Vec<Vec<f64>>,
    pq: Vec<Vec<Vec<f64>>>,
    inverted_lists: Vec<Vec<ListEntry>>,
    raw: BTreeMap<String, Vec<f64>>,
}

impl IvfadcIndex {
    /// An empty, untrained index.
    pub fn new(config: IndexConfig) -> Result<Self> {
        config.validate()?;
        Ok(IvfadcIndex {
            config,
            coarse_centroids: vec![],
            pq: vec![],
            inverted_lists: vec![],
            raw: BTreeMap::new(),
            trained: false,
        })
    }

    /// A trained, empty index over caller-supplied codebooks.
    pub fn from_codebooks(
        config: IndexConfig,
        coarse_centroids: Vec<Vec<f64>>,
        pq: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        config.validate()?;
        let sub = config.sub_dim();
        if coarse_centroids.len() != config.k_c
            || coarse_centroids.iter().any(|c| c.len() != config.d)
        {
            return Err(Error::Config(format!(
                "expected {} coarse centroids of dimension {}",
                config.k_c, config.d
            )));
        }
        if pq.len() != config.m
            || pq
                .iter()
                .any(|book| book.len() != config.k_s || book.iter().any(|w| w.len() != sub))
        {
            return Err(Error::Config(format!(
                "expected {} sub-codebooks of {} codewords of dimension {sub}",
                config.m, config.k_s
            )));
        }
        Ok(IvfadcIndex {
            config,
            coarse_centroids,
            pq,
            inverted_lists: vec![Vec::new(); config.k_c],
            raw: BTreeMap::new(),
            trained: true,
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn coarse_centroids(&self) -> &[Vec<f64>] {
        &self.coarse_centroids
    }

    pub fn sub_codebooks(&self) -> &[Vec<Vec<f64>>] {
        &self.pq
    }

    pub fn inverted_lists(&self) -> &[Vec<ListEntry>] {
        &self.inverted_lists
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw_vector(&self, id: &str) -> Option<&[f64]> {
        self.raw.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.raw.keys().map(String::as_str)
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.config.d {
            return Err(Error::Input(format!(
                "vector has dimension {}, index expects {}",
                v.len(),
                self.config.d
            )));
        }
        Ok(())
    }

    fn require_trained(&self) -> Result<()> {
        if !self.trained {
            return Err(Error::State("index is not trained".into()));
        }
        Ok(())
    }

    /// Learns the coarse centroids and the residual sub-codebooks.
    pub fn train(&mut self, vectors: &[Vec<f64>]) -> Result<()> {
        let cfg = self.config;
        if vectors.len() < cfg.k_c {
            return Err(Error::Training(format!(
                "{} training vectors, k_c = {}",
                vectors.len(),
                cfg.k_c
            )));
        }
        if vectors.len() < cfg.k_s {
            return Err(Error::Training(format!(
                "{} training vectors, k_s = {}",
                vectors.len(),
                cfg.k_s
            )));
        }
        for v in vectors {
            self.check_dim(v)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let coarse = kmeans(vectors, cfg.k_c, &mut rng)?;

        let sub = cfg.sub_dim();
        let residuals: Vec<Vec<f64>> = vectors
            .iter()
            .zip(&coarse.assignments)
            .map(|(v, &c)| v.iter().zip(&coarse.centroids[c]).map(|(a, b)| a - b).collect())
            .collect();
        let mut pq = Vec::with_capacity(cfg.m);
        for j in 0..cfg.m {
            let part: Vec<Vec<f64>> = residuals
                .iter()
                .map(|r| r[j * sub..(j + 1) * sub].to_vec())
                .collect();
            pq.push(kmeans(&part, cfg.k_s, &mut rng)?.centroids);
        }

        self.coarse_centroids = coarse.centroids;
        self.pq = pq;
        self.inverted_lists = vec![Vec::new(); cfg.k_c];
        self.raw.clear();
        self.trained = true;
        Ok(())
    }

    pub fn encode(&self, y: &[f64]) -> Result<Encoded> {
        self.require_trained()?;
        self.check_dim(y)?;
        let (list_id, _) = nearest(&self.coarse_centroids, y);
        let c = &self.coarse_centroids[list_id];
        let sub = self.config.sub_dim();
        let code = self
            .pq
            .iter()
            .enumerate()
            .map(|(j, book)| {
                let r: Vec<f64> = (j * sub..(j + 1) * sub).map(|i| y[i] - c[i]).collect();
                nearest(book, &r).0 as u16
            })
            .collect();
        Ok(Encoded { list_id, code })
    }

    /// `q(y)` for an encoding.
    pub fn reconstruct(&self, encoded: &Encoded) -> Vec<f64> {
        let mut out = self.coarse_centroids[encoded.list_id].clone();
        let sub = self.config.sub_dim();
        for (j, &c) in encoded.code.iter().enumerate() {
            for (o, w) in out[j * sub..(j + 1) * sub].iter_mut().zip(&self.pq[j][c as usize]) {
                *o += w;
            }
        }
        out
    }

    pub fn add(&mut self, id: &str, y: &EmbeddingVector) -> Result<()> {
        if self.raw.contains_key(id) {
            return Err(Error::Conflict(format!("id {id:?} is already indexed")));
        }
        let enc = self.encode(y.values())?;
        self.inverted_lists[enc.list_id].push(ListEntry {
            id: id.to_string(),
            code: enc.code,
        });
        self.raw.insert(id.to_string(), y.values().to_vec());
        Ok(())
    }

    /// Coarse lists ordered by distance to `x`, ties to the lower index.
    pub fn probe_order(&self, x: &[f64]) -> Vec<usize> {
        let mut order: Vec<(f64, usize)> = self
            .coarse_centroids
            .iter()
            .enumerate()
            .map(|(i, c)| (squared_distance(c, x), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().map(|(_, i)| i).collect()
    }

    /// Lookup table `t[j][c] = ||(x - c1)_j - pq[j][c]||²` for one list.
    pub fn adc_table(&self, x: &[f64], list_id: usize) -> Vec<Vec<f64>> {
        let c = &self.coarse_centroids[list_id];
        let sub = self.config.sub_dim();
        self.pq
            .iter()
            .enumerate()
            .map(|(j, book)| {
                let r: Vec<f64> = (j * sub..(j + 1) * sub).map(|i| x[i] - c[i]).collect();
                book.iter().map(|w| squared_distance(&r, w)).collect()
            })
            .collect()
    }

    pub fn adc_distance(table: &[Vec<f64>], code: &[u16]) -> f64 {
        code.iter()
            .enumerate()
            .map(|(j, &c)| table[j][c as usize])
            .sum()
    }

    /// Ids stored in the `nprobe` lists nearest to `x`.
    pub fn scanned_ids(&self, x: &[f64], nprobe: usize) -> Vec<&str> {
        self.probe_order(x)
            .into_iter()
            .take(nprobe)
            .flat_map(|l| self.inverted_lists[l].iter().map(|e| e.id.as_str()))
            .collect()
    }

    pub fn search(&self, x: &EmbeddingVector, params: &RetrievalParams) -> Result<Vec<Neighbor>> {
        self.require_trained()?;
        params.validate(self.config.k_c)?;
        let x = x.values();
        self.check_dim(x)?;

        let mut candidates: Vec<(f64, &str)> = Vec::new();
        for list_id in self.probe_order(x).into_iter().take(params.nprobe) {
            let list = &self.inverted_lists[list_id];
            if list.is_empty() {
                continue;
            }
            let table = self.adc_table(x, list_id);
            candidates.extend(
                list.iter()
                    .map(|e| (Self::adc_distance(&table, &e.code), e.id.as_str())),
            );
        }
        let by_distance =
            |a: &(f64, &str), b: &(f64, &str)| a.0.total_cmp(&b.0).then(a.1.cmp(b.1));
        candidates.sort_by(by_distance);

        if params.rerank {
            candidates.truncate((4 * params.k).min(candidates.len()));
            for cand in &mut candidates {
                cand.0 = squared_distance(x, &self.raw[cand.1]);
            }
            candidates.sort_by(by_distance);
        }
        Ok(candidates
            .into_iter()
            .take(params.k)
            .map(|(distance, id)| Neighbor {
                id: id.to_string(),
                distance,
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        self.require_trained()?;
        let file = IndexFile {
            header: IndexHeader {
                format: INDEX_FORMAT.into(),
                version: INDEX_VERSION,
                config: self.config,
            },
            coarse_centroids: self.coarse_centroids.clone(),
            pq: self.pq.clone(),
            inverted_lists: self.inverted_lists.clone(),
            raw: self.raw.clone(),
        };
        Ok(serde_json::to_string(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: IndexFile =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("index file: {e}")))?;
        if file.header.format != INDEX_FORMAT {
            return Err(Error::Format(format!(
                "not an index file (format {:?})",
                file.header.format
            )));
        }
        if file.header.version != INDEX_VERSION {
            return Err(Error::Format(format!(
                "unsupported index version {}",
                file.header.version
            )));
        }
        let mut index =
            IvfadcIndex::from_codebooks(file.header.config, file.coarse_centroids, file.pq)?;
        if file.inverted_lists.len() != index.config.k_c {
            return Err(Error::Format("inverted list count does not match k_c".into()));
        }
        let stored: usize = file.inverted_lists.iter().map(Vec::len).sum();
        if stored != file.raw.len() {
            return Err(Error::Format(format!(
                "{stored} coded entries but {} raw vectors",
                file.raw.len()
            )));
        }
        for entry in file.inverted_lists.iter().flatten() {
            if !file.raw.contains_key(&entry.id)
                || entry.code.len() != index.config.m
                || entry.code.iter().any(|&c| c as usize >= index.config.k_s)
            {
                return Err(Error::Format(format!("corrupt entry {:?}", entry.id)));
            }
        }
        index.inverted_lists = file.inverted_lists;
        index.raw = file.raw;
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        IvfadcIndex::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Train on `vectors` and store every one of them.
pub fn train_index(vectors: &[(String, EmbeddingVector)], config: IndexConfig) -> Result<IvfadcIndex> {
    let mut index = IvfadcIndex::new(config)?;
    let training: Vec<Vec<f64>> = vectors.iter().map(|(_, v)| v.values().to_vec()).collect();
    index.train(&training)?;
    for (id, v) in vectors {
        index.add(id, v)?;
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(values: Vec<f64>) -> EmbeddingVector {
        EmbeddingVector::new(values).normalized()
    }

    #[test]
    fn single_coarse_centroid_is_the_mean() {
        let vs = [
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.6, 0.8],
        ];
        let items: Vec<_> = vs
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("v{i}"), EmbeddingVector::new(v.clone())))
            .collect();
        let cfg = IndexConfig { d: 2, k_c: 1, m: 1, k_s: 2, seed: 1 };
        let index = train_index(&items, cfg).unwrap();
        assert!((index.coarse_centroids()[0][0] - 0.15).abs() < 1e-9);
        assert!((index.coarse_centroids()[0][1] - 0.45).abs() < 1e-9);
    }

    #[test]
    fn non_divisible_dimension_is_config_error() {
        let cfg = IndexConfig { d: 10, m: 4, ..IndexConfig::default() };
        assert!(matches!(IvfadcIndex::new(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn too_few_vectors_is_training_error() {
        let items = vec![("a".to_string(), unit(vec![1.0, 0.0]))];
        let cfg = IndexConfig { d: 2, k_c: 2, m: 1, k_s: 1, seed: 0 };
        assert!(matches!(train_index(&items, cfg), Err(Error::Training(_))));
    }

    #[test]
    fn untrained_search_is_state_error() {
        let index = IvfadcIndex::new(IndexConfig::default()).unwrap();
        let q = unit(vec![1.0; 64]);
        assert!(matches!(
            index.search(&q, &RetrievalParams::default()),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn nprobe_above_k_c_is_parameter_error() {
        let items: Vec<_> = (0..4)
            .map(|i| (format!("{i}"), unit(vec![i as f64 + 1.0, 1.0])))
            .collect();
        let cfg = IndexConfig { d: 2, k_c: 2, m: 1, k_s: 2, seed: 0 };
        let index = train_index(&items, cfg).unwrap();
        let params = RetrievalParams { nprobe: 3, ..Default::default() };
        assert!(matches!(
            index.search(&items[0].1, &params),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn coarse_tie_goes_to_lower_index() {
        let cfg = IndexConfig { d: 2, k_c: 2, m: 1, k_s: 1, seed: 0 };
        let index = IvfadcIndex::from_codebooks(
            cfg,
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            vec![vec![vec![0.0, 0.0]]],
        )
        .unwrap();
        assert_eq!(index.encode(&[0.0, 1.0]).unwrap().list_id, 0);
    }

    #[test]
    fn centroid_with_zero_codeword_reconstructs_exactly() {
        let cfg = IndexConfig { d: 4, k_c: 2, m: 2, k_s: 2, seed: 0 };
        let c0 = vec![0.5, 0.5, 0.5, 0.5];
        let index = IvfadcIndex::from_codebooks(
            cfg,
            vec![c0.clone(), vec![-0.5; 4]],
            vec![
                vec![vec![0.3, 0.1], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![-0.2, 0.4]],
            ],
        )
        .unwrap();
        let enc = index.encode(&c0).unwrap();
        assert_eq!(enc, Encoded { list_id: 0, code: vec![1, 0] });
        assert_eq!(squared_distance(&index.reconstruct(&enc), &c0), 0.0);
    }

    #[test]
    fn persistence_round_trip() {
        let items: Vec<_> = (0..12)
            .map(|i| {
                let a = i as f64 * 0.5;
                (format!("e{i}"), unit(vec![a.cos(), a.sin(), 1.0, -a.cos()]))
            })
            .collect();
        let cfg = IndexConfig { d: 4, k_c: 3, m: 2, k_s: 4, seed: 5 };
        let index = train_index(&items, cfg).unwrap();
        let text = index.to_json().unwrap();
        assert!(text.starts_with("{\"header\":{\"format\":\"dashgen-ivfadc\",\"version\":1"));
        assert_eq!(IvfadcIndex::from_json(&text).unwrap(), index);
    }

    #[test]
    fn rejects_wrong_version() {
        let cfg = IndexConfig { d: 2, k_c: 1, m: 1, k_s: 1, seed: 0 };
        let index =
            IvfadcIndex::from_codebooks(cfg, vec![vec![0.0, 0.0]], vec![vec![vec![0.0, 0.0]]])
                .unwrap();
        let text = index.to_json().unwrap().replace("\"version\":1", "\"version\":9");
        assert!(matches!(IvfadcIndex::from_json(&text), Err(Error::Format(_))));
    }

    #[test]
    fn fit_to_clamps() {
        let (c, changed) = IndexConfig::default().fit_to(10);
        assert!(changed);
        assert_eq!((c.k_c, c.k_s), (10, 10));
        assert!(!IndexConfig::default().fit_to(1000).1);
    }
}

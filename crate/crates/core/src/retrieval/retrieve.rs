use super::embed::{embed, EmbeddingProvider, EmbeddingVector};
use super::ivfadc::{train_index, IndexConfig, IvfadcIndex, RetrievalParams};
use crate::error::{Error, Result};
use crate::kbase::{entity_text, KnowledgeEntity, KnowledgeGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntity {
    pub entity: KnowledgeEntity,
    pub similarity: f64,
}

#[derive(Debug)]
pub struct BuiltIndex {
    pub index: IvfadcIndex,
    /// Config actually used after clamping to the corpus size.
    pub config: IndexConfig,
    pub clamped: bool,
}

/// Embed every graph node and train an index over them.
///
/// `k_c` and `k_s` are reduced when the graph has fewer nodes than either.
pub fn build_entity_index(
    graph: &KnowledgeGraph,
    provider: &dyn EmbeddingProvider,
    config: IndexConfig,
) -> Result<BuiltIndex> {
    if provider.dim() != config.d {
        return Err(Error::Config(format!(
            "embedding provider yields d = {}, index configured for d = {}",
            provider.dim(),
            config.d
        )));
    }
    let vectors = graph
        .nodes()
        .map(|e| Ok((e.entity_id.clone(), embed(&entity_text(e), provider)?)))
        .collect::<Result<Vec<(String, EmbeddingVector)>>>()?;
    if vectors.is_empty() {
        return Err(Error::Training("knowledge graph has no entities".into()));
    }
    let (fitted, clamped) = config.fit_to(vectors.len());
    Ok(BuiltIndex {
        index: train_index(&vectors, fitted)?,
        config: fitted,
        clamped,
    })
}

/// Entities whose similarity to the prompt reaches `sim_threshold`, at most
/// `k`, most similar first.
///
/// Similarities are recomputed from the stored raw vectors as
/// `1 - dist²/2`, so the threshold applies to exact values even when the
/// search itself ran without re-ranking.
pub fn retrieve(
    prompt: &str,
    graph: &KnowledgeGraph,
    index: &IvfadcIndex,
    provider: &dyn EmbeddingProvider,
    params: &RetrievalParams,
) -> Result<Vec<ScoredEntity>> {
    params.validate(index.config().k_c)?;
    let query = embed(prompt, provider)?;
    let hits = index.search(&query, params)?;
    let mut out = Vec::with_capacity(hits.len());
    for hit in hits {
        let raw = index
            .raw_vector(&hit.id)
            .ok_or_else(|| Error::Lookup(format!("index entry {:?} has no vector", hit.id)))?;
        let dist2: f64 = raw
            .iter()
            .zip(query.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let similarity = 1.0 - dist2 / 2.0;
        if similarity < params.sim_threshold {
            continue;
        }
        let entity = graph
            .node(&hit.id)
            .ok_or_else(|| Error::Lookup(format!("index entry {:?} is not in the graph", hit.id)))?;
        out.push(ScoredEntity {
            entity: entity.clone(),
            similarity,
        });
    }
    out.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.entity.entity_id.cmp(&b.entity.entity_id))
    });
    Ok(out)
}

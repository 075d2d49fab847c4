//! pass@k and the reference-similarity metrics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stand-in for a zero n-gram match count so that the geometric mean stays
/// defined.
pub const BLEU_EPSILON: f64 = 1e-9;
pub const BLEU_MAX_N: usize = 4;
pub const CHRF_N: usize = 6;
pub const CHRF_BETA: f64 = 2.0;
/// Longest block a TER shift may move.
pub const TER_MAX_SHIFT_LEN: usize = 10;
/// Farthest a TER shift may move a block, in tokens.
pub const TER_MAX_SHIFT_DIST: usize = 50;

/// Probability that at least one of `k` draws without replacement from `n`
/// samples, `c` of them passing, is a passing one.
///
/// Evaluated as `1 - prod_{i<k} (n-c-i)/(n-i)`, which never forms a binomial
/// coefficient.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64> {
    if c > n {
        return Err(Error::Parameter(format!("c = {c} exceeds n = {n}")));
    }
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k = {k} must lie in 1..={n}")));
    }
    if n - c < k {
        return Ok(1.0);
    }
    let mut all_fail = 1.0;
    for i in 0..k {
        all_fail *= (n - c - i) as f64 / (n - i) as f64;
    }
    Ok(1.0 - all_fail)
}

/// Whitespace split after detaching punctuation: every character that is not
/// alphanumeric, `_`, `$` or whitespace becomes a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '_' || ch == '$' {
            word.push(ch);
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            out.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

fn ngram_counts<T: Eq + std::hash::Hash>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if items.len() >= n {
        for w in items.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Clipped n-gram statistics of one candidate against one reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    /// Clipped matches per order, starting at unigrams.
    pub matches: Vec<u64>,
    /// Candidate n-grams per order.
    pub totals: Vec<u64>,
    pub candidate_len: u64,
    pub reference_len: u64,
}

impl BleuStats {
    pub fn compute(candidate: &[String], reference: &[String], max_n: usize) -> Self {
        let mut matches = Vec::with_capacity(max_n);
        let mut totals = Vec::with_capacity(max_n);
        for n in 1..=max_n {
            let cand = ngram_counts(candidate, n);
            let refc = ngram_counts(reference, n);
            let m: usize = cand
                .iter()
                .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
                .sum();
            matches.push(m as u64);
            totals.push(candidate.len().saturating_sub(n - 1) as u64);
        }
        BleuStats {
            matches,
            totals,
            candidate_len: candidate.len() as u64,
            reference_len: reference.len() as u64,
        }
    }

    fn merge(&mut self, other: &BleuStats) {
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// Geometric mean of the precisions times the brevity penalty. Orders
    /// longer than the reference are left out, so that a reference shorter
    /// than `max_n` tokens can still be matched exactly.
    pub fn score(&self) -> f64 {
        if self.candidate_len == 0 {
            return 0.0;
        }
        let orders = self.matches.len().min(self.reference_len as usize).max(1);
        let log_sum: f64 = (0..orders)
            .map(|i| {
                let m = self.matches[i] as f64;
                let t = self.totals[i].max(1) as f64;
                (m.max(BLEU_EPSILON) / t).ln()
            })
            .sum();
        let bp = if self.candidate_len >= self.reference_len {
            1.0
        } else {
            (1.0 - self.reference_len as f64 / self.candidate_len as f64).exp()
        };
        bp * (log_sum / orders as f64).exp()
    }
}

/// Sentence BLEU over token lists.
pub fn bleu(candidate: &[String], reference: &[String], max_n: usize) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Input("BLEU reference is empty".into()));
    }
    if max_n == 0 {
        return Err(Error::Parameter("BLEU max_n must be at least 1".into()));
    }
    Ok(BleuStats::compute(candidate, reference, max_n).score())
}

/// Corpus BLEU: n-gram statistics summed over all pairs before scoring.
pub fn corpus_bleu(stats: &[BleuStats]) -> Result<f64> {
    let mut iter = stats.iter();
    let mut total = iter
        .next()
        .ok_or_else(|| Error::Input("corpus BLEU needs at least one pair".into()))?
        .clone();
    for s in iter {
        if s.matches.len() != total.matches.len() {
            return Err(Error::Input("BLEU statistics use different orders".into()));
        }
        total.merge(s);
    }
    if total.reference_len == 0 {
        return Err(Error::Input("BLEU reference is empty".into()));
    }
    Ok(total.score())
}

/// Character n-gram F-score, averaged over orders `1..=n`. Whitespace is
/// removed first; orders for which the reference has no n-gram are skipped.
pub fn chrf(candidate: &str, reference: &str, n: usize, beta: f64) -> Result<f64> {
    let refc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if refc.is_empty() {
        return Err(Error::Input("ChrF reference is empty".into()));
    }
    if n == 0 {
        return Err(Error::Parameter("ChrF order must be at least 1".into()));
    }
    let cand: Vec<char> = candidate.chars().filter(|c| !c.is_whitespace()).collect();
    let b2 = beta * beta;
    let mut sum = 0.0;
    let mut orders = 0;
    for k in 1..=n.min(refc.len()) {
        orders += 1;
        let rc = ngram_counts(&refc, k);
        let cc = ngram_counts(&cand, k);
        let matched: usize = cc
            .iter()
            .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
            .sum();
        if matched == 0 {
            continue;
        }
        let p = matched as f64 / (cand.len() + 1 - k) as f64;
        let r = matched as f64 / (refc.len() + 1 - k) as f64;
        sum += (1.0 + b2) * p * r / (b2 * p + r);
    }
    Ok(sum / orders as f64)
}

fn levenshtein(a: &[u32], b: &[u32], row: &mut Vec<usize>) -> usize {
    row.clear();
    row.extend(0..=b.len());
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

/// A minimum-cost alignment of `cand` to `reff`.
struct Alignment {
    distance: usize,
    /// Candidate tokens matched to an equal reference token.
    cand_matched: Vec<bool>,
    ref_matched: Vec<bool>,
    /// Candidate index at which each reference token is consumed.
    ref_pos: Vec<usize>,
}

fn align(cand: &[u32], reff: &[u32]) -> Alignment {
    let w = reff.len() + 1;
    let mut d = vec![0u32; (cand.len() + 1) * w];
    for j in 0..w {
        d[j] = j as u32;
    }
    for i in 1..=cand.len() {
        d[i * w] = i as u32;
        for j in 1..w {
            let sub = d[(i - 1) * w + j - 1] + u32::from(cand[i - 1] != reff[j - 1]);
            d[i * w + j] = sub.min(d[(i - 1) * w + j] + 1).min(d[i * w + j - 1] + 1);
        }
    }
    let mut al = Alignment {
        distance: d[cand.len() * w + reff.len()] as usize,
        cand_matched: vec![false; cand.len()],
        ref_matched: vec![false; reff.len()],
        ref_pos: vec![0; reff.len()],
    };
    // Walk back preferring the diagonal, then deletion, then insertion.
    let (mut i, mut j) = (cand.len(), reff.len());
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let same = cand[i - 1] == reff[j - 1];
            if d[(i - 1) * w + j - 1] + u32::from(!same) == here {
                al.cand_matched[i - 1] = same;
                al.ref_matched[j - 1] = same;
                al.ref_pos[j - 1] = i - 1;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[(i - 1) * w + j] + 1 == here {
            i -= 1;
        } else {
            al.ref_pos[j - 1] = i;
            j -= 1;
        }
    }
    al
}

/// Moves `cand[from..from + len]` so that it starts at `to` in the result.
fn shifted(cand: &[u32], from: usize, len: usize, to: usize) -> Vec<u32> {
    let mut rest: Vec<u32> = cand[..from].to_vec();
    rest.extend_from_slice(&cand[from + len..]);
    let block = &cand[from..from + len];
    let mut out = Vec::with_capacity(cand.len());
    out.extend_from_slice(&rest[..to]);
    out.extend_from_slice(block);
    out.extend_from_slice(&rest[to..]);
    out
}

/// Edit count behind [`ter`]: greedy block shifts, each counted as one edit,
/// followed by the Levenshtein distance of the shifted candidate.
///
/// Shift candidates come from the current minimum-cost alignment: a block of
/// at most [`TER_MAX_SHIFT_LEN`] unaligned candidate tokens that equals a
/// span of unaligned reference tokens is moved to where that span sits in
/// the alignment, if that is at most [`TER_MAX_SHIFT_DIST`] tokens away. The
/// shift that lowers the distance most is applied, as long as it saves more
/// than the one edit it costs; ties go to the earliest block, the shortest
/// block, then the earliest span.
pub fn ter_edits(candidate: &[String], reference: &[String]) -> usize {
    fn intern<'a>(ids: &mut HashMap<&'a str, u32>, tokens: &'a [String]) -> Vec<u32> {
        tokens
            .iter()
            .map(|t| {
                let next = ids.len() as u32;
                *ids.entry(t.as_str()).or_insert(next)
            })
            .collect()
    }
    let mut ids = HashMap::new();
    let mut cand = intern(&mut ids, candidate);
    let reff = intern(&mut ids, reference);

    let mut row = Vec::new();
    let mut shifts = 0;
    loop {
        let al = align(&cand, &reff);
        if al.distance < 2 {
            return shifts + al.distance;
        }
        let mut best: Option<(usize, Vec<u32>)> = None;
        for from in 0..cand.len() {
            for len in 1..=TER_MAX_SHIFT_LEN.min(cand.len() - from) {
                if al.cand_matched[from + len - 1] {
                    break;
                }
                let block = &cand[from..from + len];
                let mut occurs = false;
                for j in 0..(reff.len() + 1).saturating_sub(len) {
                    if &reff[j..j + len] != block {
                        continue;
                    }
                    occurs = true;
                    if al.ref_matched[j..j + len].iter().any(|&m| m) {
                        continue;
                    }
                    let p = al.ref_pos[j];
                    if (from..=from + len).contains(&p) || p.abs_diff(from) > TER_MAX_SHIFT_DIST {
                        continue;
                    }
                    let to = if p < from { p } else { p - len };
                    let next = shifted(&cand, from, len, to);
                    let d = levenshtein(&next, &reff, &mut row);
                    if d + 1 < al.distance && best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                        best = Some((d, next));
                    }
                }
                if !occurs {
                    // No longer block starting here occurs either.
                    break;
                }
            }
        }
        match best {
            Some((_, next)) => {
                cand = next;
                shifts += 1;
            }
            None => return shifts + al.distance,
        }
    }
}

/// Translation edit rate, scaled by 100. Exceeds 100 when the candidate
/// needs more edits than the reference has tokens.
pub fn ter(candidate: &[String], reference: &[String]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Input("TER reference is empty".into()));
    }
    Ok(100.0 * ter_edits(candidate, reference) as f64 / reference.len() as f64)
}

//! Tail-ranking evaluation of held-out links.
//!
//! For each test triple `(h, r, t)` every candidate tail is scored and the
//! rank of `t` is recorded. Raw ranks compete against all candidates;
//! filtered ranks drop tails already known from train/valid for `(h, r)`.
//! Ties count against the true tail.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::ontology::{ClassId, RelationId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Triple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Triple {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkSplit {
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

impl LinkSplit {
    /// Tails of `relation` across all three parts, sorted.
    pub fn candidates(&self, relation: &str) -> Vec<String> {
        self.train
            .iter()
            .chain(&self.valid)
            .chain(&self.test)
            .filter(|t| t.relation == relation)
            .map(|t| t.tail.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn is_disjoint(&self) -> bool {
        let train: HashSet<_> = self.train.iter().collect();
        let valid: HashSet<_> = self.valid.iter().collect();
        self.test
            .iter()
            .all(|t| !train.contains(t) && !valid.contains(t))
            && valid.iter().all(|t| !train.contains(t))
    }
}

/// Anything that can score candidate tails for a `(head, relation)` query.
pub trait LinkScorer: Sync {
    /// One score per entry of `tails`; higher means more plausible.
    fn score_tails(&self, head: &str, relation: &str, tails: &[String]) -> Result<Vec<f64>>;
}

/// `−max(0, ‖c + r − d‖ − r_c − r_d − γ)`.
pub fn score(e: &EmbeddingSet, c: ClassId, r: RelationId, d: ClassId, margin: f64) -> f64 {
    let dist = e
        .center(c)
        .iter()
        .zip(e.relation(r))
        .zip(e.center(d))
        .map(|((x, v), y)| {
            let z = x + v - y;
            z * z
        })
        .sum::<f64>()
        .sqrt();
    -(dist - e.radius(c) - e.radius(d) - margin).max(0.0)
}

/// Scores links with a trained embedding, matching names to rows.
pub struct EmbeddingScorer<'a> {
    pub embedding: &'a EmbeddingSet,
    pub margin: f64,
}

impl<'a> EmbeddingScorer<'a> {
    pub fn new(embedding: &'a EmbeddingSet, margin: f64) -> Self {
        EmbeddingScorer { embedding, margin }
    }

    fn class(&self, name: &str) -> Result<ClassId> {
        self.embedding
            .class_id(name)
            .ok_or_else(|| Error::MissingSymbol {
                kind: "class",
                name: name.to_string(),
            })
    }
}

impl LinkScorer for EmbeddingScorer<'_> {
    fn score_tails(&self, head: &str, relation: &str, tails: &[String]) -> Result<Vec<f64>> {
        let h = self.class(head)?;
        let r = self
            .embedding
            .relation_id(relation)
            .ok_or_else(|| Error::MissingSymbol {
                kind: "relation",
                name: relation.to_string(),
            })?;
        tails
            .iter()
            .map(|t| Ok(score(self.embedding, h, r, self.class(t)?, self.margin)))
            .collect()
    }
}

/// Rank of `scores[truth]` among the non-excluded entries, and how many
/// entries were scored (including the truth).
pub fn rank_from_scores(scores: &[f64], truth: usize, excluded: impl Fn(usize) -> bool) -> (usize, usize) {
    let s = scores[truth];
    let mut rank = 1;
    let mut n = 1;
    for (i, &x) in scores.iter().enumerate() {
        if i == truth || excluded(i) {
            continue;
        }
        n += 1;
        // ties rank ahead of the truth
        if x >= s {
            rank += 1;
        }
    }
    (rank, n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryRank {
    pub rank: usize,
    pub scored: usize,
}

impl QueryRank {
    /// ROC area with a single positive: fraction of negatives ranked below it.
    pub fn auc(&self) -> f64 {
        if self.scored <= 1 {
            1.0
        } else {
            (self.scored - self.rank) as f64 / (self.scored - 1) as f64
        }
    }
}

pub fn rank_query<S: LinkScorer + ?Sized>(
    scorer: &S,
    head: &str,
    relation: &str,
    true_tail: &str,
    candidates: &[String],
    exclude: &HashSet<String>,
) -> Result<QueryRank> {
    let truth = candidates
        .iter()
        .position(|c| c == true_tail)
        .ok_or_else(|| Error::Unknown {
            kind: "candidate tail",
            name: true_tail.to_string(),
        })?;
    let scores = scorer.score_tails(head, relation, candidates)?;
    let (rank, scored) = rank_from_scores(&scores, truth, |i| exclude.contains(&candidates[i]));
    Ok(QueryRank { rank, scored })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub hits_at_10: f64,
    pub hits_at_100: f64,
    pub mean_rank: f64,
    pub auc: f64,
}

impl Metrics {
    pub fn from_ranks(ranks: &[QueryRank]) -> Metrics {
        let n = ranks.len() as f64;
        let frac = |k: usize| ranks.iter().filter(|q| q.rank <= k).count() as f64 / n;
        Metrics {
            hits_at_10: frac(10),
            hits_at_100: frac(100),
            mean_rank: ranks.iter().map(|q| q.rank as f64).sum::<f64>() / n,
            auc: ranks.iter().map(QueryRank::auc).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub queries: usize,
    pub raw: Metrics,
    pub filtered: Metrics,
}

#[derive(Serialize)]
struct ReportRow {
    #[serde(rename = "Queries")]
    queries: usize,
    #[serde(rename = "Raw Hits@10")]
    raw_hits_10: f64,
    #[serde(rename = "Filtered Hits@10")]
    filtered_hits_10: f64,
    #[serde(rename = "Raw Hits@100")]
    raw_hits_100: f64,
    #[serde(rename = "Filtered Hits@100")]
    filtered_hits_100: f64,
    #[serde(rename = "Raw Mean Rank")]
    raw_mean_rank: f64,
    #[serde(rename = "Filtered Mean Rank")]
    filtered_mean_rank: f64,
    #[serde(rename = "Raw AUC")]
    raw_auc: f64,
    #[serde(rename = "Filtered AUC")]
    filtered_auc: f64,
}

impl Serialize for RankingReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReportRow {
            queries: self.queries,
            raw_hits_10: self.raw.hits_at_10,
            filtered_hits_10: self.filtered.hits_at_10,
            raw_hits_100: self.raw.hits_at_100,
            filtered_hits_100: self.filtered.hits_at_100,
            raw_mean_rank: self.raw.mean_rank,
            filtered_mean_rank: self.filtered.mean_rank,
            raw_auc: self.raw.auc,
            filtered_auc: self.filtered.auc,
        }
        .serialize(s)
    }
}

/// Ranks every test triple of `relation` against the split's candidate tails.
pub fn ranking_report<S: LinkScorer + ?Sized>(
    split: &LinkSplit,
    scorer: &S,
    relation: &str,
) -> Result<RankingReport> {
    let queries: Vec<&Triple> = split.test.iter().filter(|t| t.relation == relation).collect();
    if queries.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let candidates = split.candidates(relation);
    let index: HashMap<&str, usize> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut known: HashMap<&str, Vec<usize>> = HashMap::new();
    for t in split.train.iter().chain(&split.valid) {
        if t.relation == relation {
            known.entry(t.head.as_str()).or_default().push(index[t.tail.as_str()]);
        }
    }

    let ranks: Vec<(QueryRank, QueryRank)> = queries
        .par_iter()
        .map(|q| {
            let truth = index[q.tail.as_str()];
            let scores = scorer.score_tails(&q.head, relation, &candidates)?;
            let (rank, scored) = rank_from_scores(&scores, truth, |_| false);
            let raw = QueryRank { rank, scored };
            let mut mask = vec![false; candidates.len()];
            for &i in known.get(q.head.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                mask[i] = true;
            }
            let (rank, scored) = rank_from_scores(&scores, truth, |i| mask[i]);
            Ok((raw, QueryRank { rank, scored }))
        })
        .collect::<Result<_>>()?;

    let raw: Vec<QueryRank> = ranks.iter().map(|r| r.0).collect();
    let filtered: Vec<QueryRank> = ranks.iter().map(|r| r.1).collect();
    Ok(RankingReport {
        queries: ranks.len(),
        raw: Metrics::from_ranks(&raw),
        filtered: Metrics::from_ranks(&filtered),
    })
}

//! Answer selection over candidate pools and confidence routing.

use serde::{Deserialize, Serialize};

use crate::corpus::{CandidatePool, DocId};
use crate::error::{Error, Result};
use crate::simnet::SimilarityNetwork;
use crate::training::FeatureTable;

pub const DEFAULT_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Answer,
    Escalate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub outcome: Outcome,
    pub answer_doc: Option<DocId>,
    pub confidence: f64,
}

/// Index and score of the best-scoring candidate; the first index wins ties.
pub fn select_answer(
    net: &SimilarityNetwork,
    question: &[f64],
    pool: &CandidatePool,
    features: &FeatureTable,
) -> Result<(usize, f64)> {
    let scores = pool
        .candidates
        .iter()
        .map(|&a| net.score(question, features.answer(a)?))
        .collect::<Result<Vec<_>>>()?;
    argmax(&scores).ok_or(Error::Empty("candidate pool"))
}

/// First index of the maximum.
pub fn argmax(scores: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}

/// Answer when `score ≥ threshold`, otherwise escalate to a human agent.
pub fn route(answer_doc: DocId, score: f64, threshold: f64) -> Result<RoutingDecision> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!("routing threshold {threshold} must lie in (0, 1]")));
    }
    Ok(if score >= threshold {
        RoutingDecision { outcome: Outcome::Answer, answer_doc: Some(answer_doc), confidence: score }
    } else {
        RoutingDecision { outcome: Outcome::Escalate, answer_doc: None, confidence: score }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolAccuracy {
    /// Top-1 accuracy over pools that contain a correct answer.
    pub top1: f64,
    pub pools_scored: usize,
    pub pools_without_gold: usize,
}

/// Per-pool selection results, in pool order.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSelection {
    pub index: usize,
    pub score: f64,
    pub correct: Option<bool>,
}

pub fn select_all(
    net: &SimilarityNetwork,
    pools: &[CandidatePool],
    features: &FeatureTable,
) -> Result<Vec<PoolSelection>> {
    pools
        .iter()
        .map(|pool| {
            let (index, score) = select_answer(net, features.question(pool.question_doc)?, pool, features)?;
            let correct = pool.has_gold().then(|| pool.is_correct(index));
            Ok(PoolSelection { index, score, correct })
        })
        .collect()
}

pub fn summarize(selections: &[PoolSelection]) -> PoolAccuracy {
    let pools_scored = selections.iter().filter(|s| s.correct.is_some()).count();
    let hits = selections.iter().filter(|s| s.correct == Some(true)).count();
    PoolAccuracy {
        top1: if pools_scored == 0 { 0.0 } else { hits as f64 / pools_scored as f64 },
        pools_scored,
        pools_without_gold: selections.len() - pools_scored,
    }
}

/// Top-1 accuracy over the pools with at least one correct candidate; the
/// remaining pools are only counted.
pub fn evaluate_pool_accuracy(
    net: &SimilarityNetwork,
    pools: &[CandidatePool],
    features: &FeatureTable,
) -> Result<PoolAccuracy> {
    if pools.is_empty() {
        return Err(Error::Empty("pools to evaluate"));
    }
    Ok(summarize(&select_all(net, pools, features)?))
}

/// Evaluation summary written by `qasim eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pool_top1: f64,
    pub pools_scored: usize,
    pub pools_without_gold: usize,
    pub pair_accuracy: f64,
    pub threshold: f64,
    /// Fraction of pools whose best candidate clears the threshold.
    pub answer_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bow_baseline: Option<BaselineReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub pair_accuracy: f64,
    pub pool_top1: f64,
}

use std::collections::BTreeMap;

use rand::Rng;

use super::WordEmbeddingModel;
use crate::corpus::TokenId;
use crate::linalg::{axpy, dot, log_sigmoid, sigmoid, Matrix};

/// Unigram counts raised to the 0.75 power, sampled by inverse CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDistribution {
    counts: Vec<u64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl NoiseDistribution {
    pub const POWER: f64 = 0.75;

    pub fn from_counts(counts: &[u64]) -> Self {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(Self::POWER)).collect();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self { counts: counts.to_vec(), weights, cumulative }
    }

    /// Token counts over a corpus of encoded documents.
    pub fn from_corpus<'a>(docs: impl IntoIterator<Item = &'a [TokenId]>, vocab_size: usize) -> Self {
        let mut counts = vec![0u64; vocab_size];
        for doc in docs {
            for &t in doc {
                counts[t as usize] += 1;
            }
        }
        Self::from_counts(&counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> TokenId {
        let u = rng.random::<f64>() * self.total();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1) as TokenId
    }
}

/// What feeds the hidden layer of a word2vec update.
#[derive(Debug, Clone, Copy)]
pub enum NsInput<'a> {
    /// Skip-gram: the input row of the center word.
    Center(TokenId),
    /// CBOW: the mean of the input rows of the context words.
    Context(&'a [TokenId]),
}

impl NsInput<'_> {
    fn rows(&self) -> &[TokenId] {
        match self {
            NsInput::Center(c) => std::slice::from_ref(c),
            NsInput::Context(ids) => ids,
        }
    }

    fn hidden(&self, input: &Matrix) -> Vec<f64> {
        let rows = self.rows();
        let mut h = vec![0.0; input.cols()];
        for &r in rows {
            axpy(1.0, input.row(r as usize), &mut h);
        }
        let scale = 1.0 / rows.len() as f64;
        h.iter_mut().for_each(|v| *v *= scale);
        h
    }
}

/// Logistic negative-sampling loss for one hidden vector:
/// `-ln σ(o_t·h) - Σ ln σ(-o_n·h)`. Fills `coeffs` with `g_j` such that
/// `∂L/∂o_j = g_j h`, and `grad_hidden` with `Σ g_j o_j`.
pub(crate) fn ns_kernel(
    hidden: &[f64],
    output: &Matrix,
    target: TokenId,
    negatives: &[TokenId],
    coeffs: &mut Vec<f64>,
    grad_hidden: &mut [f64],
) -> f64 {
    coeffs.clear();
    grad_hidden.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (k, &w) in std::iter::once(&target).chain(negatives).enumerate() {
        let o = output.row(w as usize);
        let s = dot(o, hidden);
        let g = if k == 0 {
            loss -= log_sigmoid(s);
            sigmoid(s) - 1.0
        } else {
            loss -= log_sigmoid(-s);
            sigmoid(s)
        };
        coeffs.push(g);
        axpy(g, o, grad_hidden);
    }
    loss
}

/// Gradient step on the output rows touched by [`ns_kernel`].
pub(crate) fn ns_apply_output(
    output: &mut Matrix,
    hidden: &[f64],
    target: TokenId,
    negatives: &[TokenId],
    coeffs: &[f64],
    lr: f64,
) {
    for (&w, &g) in std::iter::once(&target).chain(negatives).zip(coeffs) {
        axpy(-lr * g, hidden, output.row_mut(w as usize));
    }
}

/// Per-row gradients of the negative-sampling loss. Rows that appear more
/// than once (repeated context or noise words) are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct NsGradients {
    pub loss: f64,
    pub input_rows: BTreeMap<TokenId, Vec<f64>>,
    pub output_rows: BTreeMap<TokenId, Vec<f64>>,
}

pub fn negative_sampling_loss(
    model: &WordEmbeddingModel,
    input: NsInput<'_>,
    target: TokenId,
    negatives: &[TokenId],
) -> f64 {
    let h = input.hidden(&model.input);
    let mut coeffs = Vec::new();
    let mut gh = vec![0.0; h.len()];
    ns_kernel(&h, &model.output, target, negatives, &mut coeffs, &mut gh)
}

pub fn negative_sampling_gradients(
    model: &WordEmbeddingModel,
    input: NsInput<'_>,
    target: TokenId,
    negatives: &[TokenId],
) -> NsGradients {
    let dim = model.dim;
    let h = input.hidden(&model.input);
    let mut coeffs = Vec::new();
    let mut gh = vec![0.0; dim];
    let loss = ns_kernel(&h, &model.output, target, negatives, &mut coeffs, &mut gh);

    let mut output_rows: BTreeMap<TokenId, Vec<f64>> = BTreeMap::new();
    for (&w, &g) in std::iter::once(&target).chain(negatives).zip(&coeffs) {
        axpy(g, &h, output_rows.entry(w).or_insert_with(|| vec![0.0; dim]));
    }
    let rows = input.rows();
    let share = 1.0 / rows.len() as f64;
    let mut input_rows: BTreeMap<TokenId, Vec<f64>> = BTreeMap::new();
    for &r in rows {
        axpy(share, &gh, input_rows.entry(r).or_insert_with(|| vec![0.0; dim]));
    }
    NsGradients { loss, input_rows, output_rows }
}

/// One SGD update on the touched rows. Returns the loss before the update.
pub fn negative_sampling_step(
    model: &mut WordEmbeddingModel,
    input: NsInput<'_>,
    target: TokenId,
    negatives: &[TokenId],
    lr: f64,
) -> f64 {
    let grads = negative_sampling_gradients(model, input, target, negatives);
    for (w, g) in &grads.output_rows {
        axpy(-lr, g, model.output.row_mut(*w as usize));
    }
    for (r, g) in &grads.input_rows {
        axpy(-lr, g, model.input.row_mut(*r as usize));
    }
    grads.loss
}

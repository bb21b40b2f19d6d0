//! Word and paragraph embeddings trained with negative sampling.
//!
//! [`WordEmbeddingModel`] covers CBOW and Skip-gram, [`DocEmbeddingModel`]
//! the distributed-memory paragraph vector model (PV-DM). Both keep their
//! parameters in `f64` and serialize to little-endian `f32`.

mod doc2vec;
mod io;
mod negative;
mod word2vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenId, TokenizedDocument};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use doc2vec::{infer_doc_vector, train_doc2vec, train_doc2vec_logged, Combine, DocEmbeddingModel, InferConfig};
pub use io::export_text;
pub use negative::{
    negative_sampling_gradients, negative_sampling_loss, negative_sampling_step, NoiseDistribution,
    NsGradients, NsInput,
};
pub use word2vec::{analogy, train_word2vec, train_word2vec_logged, Word2VecMode, WordEmbeddingModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedTrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbedTrainConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 10,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            seed: 42,
        }
    }
}

impl EmbedTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("embed.dim must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::invalid("embed.window must be at least 1"));
        }
        if self.negatives == 0 {
            return Err(Error::invalid("embed.negatives must be at least 1"));
        }
        if !(self.min_learning_rate > 0.0 && self.learning_rate > self.min_learning_rate) {
            return Err(Error::invalid(
                "embed.learning_rate must exceed embed.min_learning_rate, which must be positive",
            ));
        }
        Ok(())
    }
}

/// Per-epoch summary of an embedding run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedEpoch {
    pub epoch: usize,
    pub mean_loss: f64,
    pub end_learning_rate: f64,
}

/// Linear decay from `start` to `end` over `total` updates.
#[derive(Debug, Clone, Copy)]
struct LinearDecay {
    start: f64,
    end: f64,
    total: u64,
}

impl LinearDecay {
    fn at(&self, step: u64) -> f64 {
        if self.total == 0 {
            return self.start;
        }
        let frac = (step as f64 / self.total as f64).min(1.0);
        self.start - (self.start - self.end) * frac
    }
}

/// Uniform init in `[-0.5/d, 0.5/d]`.
fn uniform_init(rows: usize, cols: usize, dim: usize, rng: &mut impl Rng) -> Matrix {
    let half = 0.5 / dim as f64;
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-half..half))
}

fn check_corpus(corpus: &[TokenizedDocument], vocab_size: usize) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    if corpus.iter().all(|d| d.len() < 2) {
        return Err(Error::invalid("every training document is shorter than 2 tokens"));
    }
    if let Some(bad) = corpus.iter().flat_map(|d| &d.tokens).find(|&&t| t as usize >= vocab_size) {
        return Err(Error::invalid(format!("token id {bad} exceeds vocabulary size {vocab_size}")));
    }
    Ok(())
}

/// Draw `n` noise words different from `target`. Gives up on a slot after a
/// handful of rejections, which only happens for degenerate distributions.
fn draw_negatives(
    noise: &NoiseDistribution,
    target: TokenId,
    n: usize,
    rng: &mut impl Rng,
    out: &mut Vec<TokenId>,
) {
    out.clear();
    for _ in 0..n {
        for _ in 0..16 {
            let w = noise.sample(rng);
            if w != target {
                out.push(w);
                break;
            }
        }
    }
}

/// Cheap order-sensitive fingerprint of a parameter block.
pub(crate) fn fingerprint(blocks: &[&[f64]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for block in blocks {
        for v in *block {
            h ^= v.to_bits();
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h = h.rotate_left(7);
    }
    h
}

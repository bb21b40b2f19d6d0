use serde::{Deserialize, Serialize};

use super::negative::{ns_apply_output, ns_kernel, NoiseDistribution};
use super::{check_corpus, draw_negatives, uniform_init, EmbedEpoch, EmbedTrainConfig, LinearDecay};
use crate::corpus::{TokenId, TokenizedDocument, Vocabulary};
use crate::error::{Error, Result};
use crate::linalg::{axpy, cosine, dot, softmax, Matrix};
use crate::rng::{seeded, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Word2VecMode {
    Cbow,
    #[value(name = "skipgram")]
    #[serde(rename = "skipgram")]
    SkipGram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddingModel {
    /// Row `i` is the embedding of token `i`.
    pub input: Matrix,
    pub output: Matrix,
    pub mode: Word2VecMode,
    pub window: usize,
    pub negatives: usize,
    pub dim: usize,
}

impl WordEmbeddingModel {
    pub fn zeros(vocab_size: usize, dim: usize, mode: Word2VecMode, window: usize, negatives: usize) -> Self {
        Self {
            input: Matrix::zeros(vocab_size, dim),
            output: Matrix::zeros(vocab_size, dim),
            mode,
            window,
            negatives,
            dim,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.input.rows()
    }

    /// The embedding `F(w)`.
    pub fn vector(&self, id: TokenId) -> &[f64] {
        self.input.row(id as usize)
    }

    fn check_id(&self, id: TokenId) -> Result<()> {
        if (id as usize) < self.vocab_size() {
            Ok(())
        } else {
            Err(Error::invalid(format!("token id {id} out of range for vocabulary of {}", self.vocab_size())))
        }
    }

    fn full_softmax(&self, hidden: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = self.output.iter_rows().map(|o| dot(o, hidden)).collect();
        softmax(&logits)
    }

    /// Full-softmax CBOW probability `p(center | context)` with the context
    /// represented by the mean of its input vectors.
    pub fn context_probability(&self, center: TokenId, context: &[TokenId]) -> Result<f64> {
        if context.is_empty() {
            return Err(Error::Empty("context"));
        }
        self.check_id(center)?;
        let mut h = vec![0.0; self.dim];
        for &c in context {
            self.check_id(c)?;
            axpy(1.0 / context.len() as f64, self.input.row(c as usize), &mut h);
        }
        Ok(self.full_softmax(&h)[center as usize])
    }

    /// Full-softmax Skip-gram probability `p(outside | center)`.
    pub fn skipgram_probability(&self, center: TokenId, outside: TokenId) -> Result<f64> {
        self.check_id(center)?;
        self.check_id(outside)?;
        Ok(self.full_softmax(self.input.row(center as usize))[outside as usize])
    }

    /// The token whose vector is closest in cosine to `F(a) - F(b) + F(c)`,
    /// excluding the three query tokens. Ties go to the lowest id.
    pub fn analogy(&self, a: TokenId, b: TokenId, c: TokenId) -> Result<TokenId> {
        for id in [a, b, c] {
            self.check_id(id)?;
        }
        let mut query = self.vector(a).to_vec();
        axpy(-1.0, self.vector(b), &mut query);
        axpy(1.0, self.vector(c), &mut query);
        let mut best: Option<(TokenId, f64)> = None;
        for id in 0..self.vocab_size() as TokenId {
            if id == a || id == b || id == c {
                continue;
            }
            let sim = cosine(&query, self.vector(id));
            if best.is_none_or(|(_, s)| sim > s) {
                best = Some((id, sim));
            }
        }
        best.map(|(id, _)| id).ok_or(Error::Empty("no candidate tokens besides the query"))
    }

    /// [`analogy`](Self::analogy) over token strings.
    pub fn analogy_words(&self, vocab: &Vocabulary, a: &str, b: &str, c: &str) -> Result<String> {
        let id = |t: &str| vocab.id(t).ok_or_else(|| Error::OutOfVocabulary(t.to_string()));
        let out = self.analogy(id(a)?, id(b)?, id(c)?)?;
        Ok(vocab.token(out).unwrap_or_default().to_string())
    }

    pub fn fingerprint(&self) -> u64 {
        super::fingerprint(&[self.input.as_slice(), self.output.as_slice()])
    }
}

pub fn analogy(model: &WordEmbeddingModel, a: TokenId, b: TokenId, c: TokenId) -> Result<TokenId> {
    model.analogy(a, b, c)
}

pub fn train_word2vec(
    corpus: &[TokenizedDocument],
    vocab_size: usize,
    config: &EmbedTrainConfig,
    mode: Word2VecMode,
) -> Result<WordEmbeddingModel> {
    train_word2vec_logged(corpus, vocab_size, config, mode).map(|(m, _)| m)
}

/// Single-threaded training with a full symmetric window. Skip-gram
/// predicts each neighbour from the center word; CBOW predicts the center
/// word from the mean of its neighbours.
pub fn train_word2vec_logged(
    corpus: &[TokenizedDocument],
    vocab_size: usize,
    config: &EmbedTrainConfig,
    mode: Word2VecMode,
) -> Result<(WordEmbeddingModel, Vec<EmbedEpoch>)> {
    config.validate()?;
    check_corpus(corpus, vocab_size)?;
    let dim = config.dim;
    let mut init_rng = seeded(config.seed, streams::EMBED_INIT);
    let mut model = WordEmbeddingModel {
        input: uniform_init(vocab_size, dim, dim, &mut init_rng),
        output: Matrix::zeros(vocab_size, dim),
        mode,
        window: config.window,
        negatives: config.negatives,
        dim,
    };
    let noise = NoiseDistribution::from_corpus(corpus.iter().map(|d| d.tokens.as_slice()), vocab_size);
    let docs: Vec<&[TokenId]> = corpus.iter().map(|d| d.tokens.as_slice()).filter(|t| t.len() >= 2).collect();
    let tokens_per_epoch: u64 = docs.iter().map(|d| d.len() as u64).sum();
    let schedule = LinearDecay {
        start: config.learning_rate,
        end: config.min_learning_rate,
        total: tokens_per_epoch * config.epochs as u64,
    };

    let mut rng = seeded(config.seed, streams::EMBED_TRAIN);
    let mut negs = Vec::with_capacity(config.negatives);
    let mut coeffs = Vec::with_capacity(config.negatives + 1);
    let mut hidden = vec![0.0; dim];
    let mut grad_hidden = vec![0.0; dim];
    let mut context: Vec<TokenId> = Vec::with_capacity(2 * config.window);
    let mut step = 0u64;
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut total_loss = 0.0;
        let mut updates = 0u64;
        for doc in &docs {
            for i in 0..doc.len() {
                let lr = schedule.at(step);
                step += 1;
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window + 1).min(doc.len());
                context.clear();
                context.extend((lo..hi).filter(|&j| j != i).map(|j| doc[j]));
                match mode {
                    Word2VecMode::SkipGram => {
                        let center = doc[i] as usize;
                        for &outside in &context {
                            draw_negatives(&noise, outside, config.negatives, &mut rng, &mut negs);
                            hidden.copy_from_slice(model.input.row(center));
                            total_loss +=
                                ns_kernel(&hidden, &model.output, outside, &negs, &mut coeffs, &mut grad_hidden);
                            ns_apply_output(&mut model.output, &hidden, outside, &negs, &coeffs, lr);
                            axpy(-lr, &grad_hidden, model.input.row_mut(center));
                            updates += 1;
                        }
                    }
                    Word2VecMode::Cbow => {
                        let target = doc[i];
                        draw_negatives(&noise, target, config.negatives, &mut rng, &mut negs);
                        hidden.iter_mut().for_each(|h| *h = 0.0);
                        let share = 1.0 / context.len() as f64;
                        for &c in &context {
                            axpy(share, model.input.row(c as usize), &mut hidden);
                        }
                        total_loss +=
                            ns_kernel(&hidden, &model.output, target, &negs, &mut coeffs, &mut grad_hidden);
                        ns_apply_output(&mut model.output, &hidden, target, &negs, &coeffs, lr);
                        for &c in &context {
                            axpy(-lr * share, &grad_hidden, model.input.row_mut(c as usize));
                        }
                        updates += 1;
                    }
                }
            }
        }
        if !total_loss.is_finite() {
            return Err(Error::NonFinite(format!("word2vec loss at epoch {epoch}")));
        }
        log.push(EmbedEpoch {
            epoch,
            mean_loss: total_loss / updates.max(1) as f64,
            end_learning_rate: schedule.at(step),
        });
    }
    Ok((model, log))
}

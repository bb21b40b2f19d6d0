use serde::{Deserialize, Serialize};

use super::negative::{ns_apply_output, ns_kernel, NoiseDistribution};
use super::{check_corpus, draw_negatives, uniform_init, EmbedEpoch, EmbedTrainConfig, LinearDecay};
use crate::corpus::{TokenId, TokenizedDocument};
use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix};
use crate::rng::{seeded, streams};

/// How the paragraph vector is joined with the context word vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    #[default]
    Average,
    /// `[doc; w_{i-k}; ...; w_{i-1}]`, missing leading slots are zero.
    Concatenate,
}

/// PV-DM model: the paragraph vector and the `window` preceding words
/// predict the next word through negative sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct DocEmbeddingModel {
    pub word: Matrix,
    pub doc: Matrix,
    /// Output (negative-sampling) weights, one row per vocabulary id.
    pub output: Matrix,
    pub noise: NoiseDistribution,
    pub combine: Combine,
    pub window: usize,
    pub negatives: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub seed: u64,
}

impl Default for InferConfig {
    fn default() -> Self {
        Self { steps: 50, learning_rate: 0.025, min_learning_rate: 0.0001, seed: 42 }
    }
}

impl DocEmbeddingModel {
    pub fn vocab_size(&self) -> usize {
        self.word.rows()
    }

    pub fn num_docs(&self) -> usize {
        self.doc.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        match self.combine {
            Combine::Average => self.dim,
            Combine::Concatenate => self.dim * (self.window + 1),
        }
    }

    pub fn doc_vector(&self, doc: usize) -> &[f64] {
        self.doc.row(doc)
    }

    pub fn fingerprint(&self) -> u64 {
        super::fingerprint(&[
            self.word.as_slice(),
            self.doc.as_slice(),
            self.output.as_slice(),
            self.noise.weights(),
        ])
    }

    /// Build the hidden vector for predicting `tokens[i]` and return the
    /// context word ids (slot order for `Concatenate`, `None` = padding).
    fn hidden(&self, doc_vec: &[f64], tokens: &[TokenId], i: usize, hidden: &mut [f64], ctx: &mut Vec<Option<TokenId>>) {
        ctx.clear();
        for k in (1..=self.window).rev() {
            ctx.push(i.checked_sub(k).map(|j| tokens[j]));
        }
        let d = self.dim;
        match self.combine {
            Combine::Average => {
                let n = 1 + ctx.iter().flatten().count();
                let share = 1.0 / n as f64;
                hidden.iter_mut().zip(doc_vec).for_each(|(h, v)| *h = v * share);
                for &w in ctx.iter().flatten() {
                    axpy(share, self.word.row(w as usize), hidden);
                }
            }
            Combine::Concatenate => {
                hidden[..d].copy_from_slice(doc_vec);
                for (slot, w) in ctx.iter().enumerate() {
                    let dst = &mut hidden[d * (slot + 1)..d * (slot + 2)];
                    match w {
                        Some(w) => dst.copy_from_slice(self.word.row(*w as usize)),
                        None => dst.iter_mut().for_each(|x| *x = 0.0),
                    }
                }
            }
        }
    }

    /// Portion of the hidden gradient that flows to the paragraph vector.
    fn doc_grad_share<'g>(&self, grad_hidden: &'g [f64], ctx: &[Option<TokenId>]) -> (f64, &'g [f64]) {
        match self.combine {
            Combine::Average => (1.0 / (1 + ctx.iter().flatten().count()) as f64, grad_hidden),
            Combine::Concatenate => (1.0, &grad_hidden[..self.dim]),
        }
    }

    fn update_words(&mut self, grad_hidden: &[f64], ctx: &[Option<TokenId>], lr: f64) {
        let d = self.dim;
        match self.combine {
            Combine::Average => {
                let share = 1.0 / (1 + ctx.iter().flatten().count()) as f64;
                for &w in ctx.iter().flatten() {
                    axpy(-lr * share, grad_hidden, self.word.row_mut(w as usize));
                }
            }
            Combine::Concatenate => {
                for (slot, w) in ctx.iter().enumerate() {
                    if let Some(w) = w {
                        axpy(-lr, &grad_hidden[d * (slot + 1)..d * (slot + 2)], self.word.row_mut(*w as usize));
                    }
                }
            }
        }
    }
}

pub fn train_doc2vec(
    corpus: &[TokenizedDocument],
    vocab_size: usize,
    config: &EmbedTrainConfig,
    combine: Combine,
) -> Result<DocEmbeddingModel> {
    train_doc2vec_logged(corpus, vocab_size, config, combine).map(|(m, _)| m)
}

/// PV-DM training over the corpus in order, one row of `doc` per document
/// (rows are indexed by position in `corpus`, not by `doc_id`). Both the
/// word and the paragraph matrices are updated.
pub fn train_doc2vec_logged(
    corpus: &[TokenizedDocument],
    vocab_size: usize,
    config: &EmbedTrainConfig,
    combine: Combine,
) -> Result<(DocEmbeddingModel, Vec<EmbedEpoch>)> {
    config.validate()?;
    check_corpus(corpus, vocab_size)?;
    let dim = config.dim;
    let mut init_rng = seeded(config.seed, streams::EMBED_INIT);
    let word = uniform_init(vocab_size, dim, dim, &mut init_rng);
    let doc = uniform_init(corpus.len(), dim, dim, &mut init_rng);
    let noise = NoiseDistribution::from_corpus(corpus.iter().map(|d| d.tokens.as_slice()), vocab_size);
    let mut model = DocEmbeddingModel {
        word,
        doc,
        output: Matrix::zeros(vocab_size, 0),
        noise,
        combine,
        window: config.window,
        negatives: config.negatives,
        dim,
    };
    model.output = Matrix::zeros(vocab_size, model.hidden_dim());

    let positions: u64 = corpus.iter().map(|d| d.len() as u64).sum();
    let schedule = LinearDecay {
        start: config.learning_rate,
        end: config.min_learning_rate,
        total: positions * config.epochs as u64,
    };
    let mut rng = seeded(config.seed, streams::EMBED_TRAIN);
    let hdim = model.hidden_dim();
    let mut hidden = vec![0.0; hdim];
    let mut grad_hidden = vec![0.0; hdim];
    let mut coeffs = Vec::new();
    let mut negs = Vec::new();
    let mut ctx = Vec::new();
    let mut doc_vec = vec![0.0; dim];
    let mut step = 0u64;
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut total_loss = 0.0;
        for (row, doc) in corpus.iter().enumerate() {
            let tokens = doc.tokens.as_slice();
            for i in 0..tokens.len() {
                let lr = schedule.at(step);
                step += 1;
                doc_vec.copy_from_slice(model.doc.row(row));
                model.hidden(&doc_vec, tokens, i, &mut hidden, &mut ctx);
                draw_negatives(&model.noise, tokens[i], model.negatives, &mut rng, &mut negs);
                total_loss += ns_kernel(&hidden, &model.output, tokens[i], &negs, &mut coeffs, &mut grad_hidden);
                ns_apply_output(&mut model.output, &hidden, tokens[i], &negs, &coeffs, lr);
                let (share, g) = model.doc_grad_share(&grad_hidden, &ctx);
                axpy(-lr * share, &g[..dim], model.doc.row_mut(row));
                model.update_words(&grad_hidden, &ctx, lr);
            }
        }
        if !total_loss.is_finite() {
            return Err(Error::NonFinite(format!("doc2vec loss at epoch {epoch}")));
        }
        log.push(EmbedEpoch {
            epoch,
            mean_loss: total_loss / positions.max(1) as f64,
            end_learning_rate: schedule.at(step),
        });
    }
    Ok((model, log))
}

/// Paragraph vector for an unseen document: a fresh vector is fitted by
/// `steps` passes over the document while the word and output weights stay
/// frozen.
pub fn infer_doc_vector(model: &DocEmbeddingModel, doc: &TokenizedDocument, config: &InferConfig) -> Result<Vec<f64>> {
    if doc.is_empty() {
        return Err(Error::Empty("document to infer"));
    }
    if config.steps == 0 {
        return Err(Error::invalid("inference needs at least one step"));
    }
    if let Some(bad) = doc.tokens.iter().find(|&&t| t as usize >= model.vocab_size()) {
        return Err(Error::invalid(format!("token id {bad} exceeds vocabulary size {}", model.vocab_size())));
    }
    let dim = model.dim;
    let mut rng = seeded(config.seed, streams::INFER);
    let mut vector = uniform_init(1, dim, dim, &mut rng).as_slice().to_vec();
    let schedule = LinearDecay {
        start: config.learning_rate,
        end: config.min_learning_rate,
        total: (config.steps * doc.len()) as u64,
    };
    let hdim = model.hidden_dim();
    let mut hidden = vec![0.0; hdim];
    let mut grad_hidden = vec![0.0; hdim];
    let mut coeffs = Vec::new();
    let mut negs = Vec::new();
    let mut ctx = Vec::new();
    let mut step = 0u64;
    for _ in 0..config.steps {
        for i in 0..doc.len() {
            let lr = schedule.at(step);
            step += 1;
            model.hidden(&vector, &doc.tokens, i, &mut hidden, &mut ctx);
            draw_negatives(&model.noise, doc.tokens[i], model.negatives, &mut rng, &mut negs);
            ns_kernel(&hidden, &model.output, doc.tokens[i], &negs, &mut coeffs, &mut grad_hidden);
            let (share, g) = model.doc_grad_share(&grad_hidden, &ctx);
            axpy(-lr * share, &g[..dim], &mut vector);
        }
    }
    if vector.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("inferred paragraph vector".into()));
    }
    Ok(vector)
}

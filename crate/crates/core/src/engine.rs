//! End-to-end plumbing: one paragraph-vector model per side (questions,
//! answers), feature tables built from them, and an answering engine that
//! embeds a new question, picks the best answer and routes it.

use crate::corpus::{tokenize, QaDataset, Side, TokenizedDocument, Vocabulary};
use crate::embedding::{infer_doc_vector, train_doc2vec, Combine, DocEmbeddingModel, EmbedTrainConfig, InferConfig};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::retrieval::{argmax, route, RoutingDecision};
use crate::simnet::SimilarityNetwork;
use crate::training::FeatureTable;

/// Vocabulary and paragraph-vector model of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SideModel {
    pub vocab: Vocabulary,
    pub model: DocEmbeddingModel,
}

impl SideModel {
    pub fn train(texts: &[String], min_count: u64, config: &EmbedTrainConfig, combine: Combine) -> Result<Self> {
        let tokens: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
        let vocab = Vocabulary::build(&tokens, min_count)?;
        let docs: Vec<TokenizedDocument> =
            tokens.iter().enumerate().map(|(i, t)| vocab.encode(i as u32, t)).collect();
        let model = train_doc2vec(&docs, vocab.len(), config, combine)?;
        Ok(Self { vocab, model })
    }

    /// Trained paragraph vectors, one row per training document.
    pub fn doc_vectors(&self) -> Matrix {
        self.model.doc.clone()
    }

    /// Paragraph vector of unseen text.
    pub fn infer(&self, text: &str, config: &InferConfig) -> Result<Vec<f64>> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::Empty("question text"));
        }
        infer_doc_vector(&self.model, &self.vocab.encode(0, &tokens), config)
    }

    /// Inferred vectors for a batch of texts, one row each.
    pub fn infer_all(&self, texts: &[String], config: &InferConfig) -> Result<Matrix> {
        let mut out = Matrix::zeros(texts.len(), self.model.dim);
        for (i, t) in texts.iter().enumerate() {
            out.row_mut(i).copy_from_slice(&self.infer(t, config)?);
        }
        Ok(out)
    }
}

/// Separate question and answer models trained on the two corpora of a
/// dataset, and the feature table of their paragraph vectors.
pub fn train_sides(
    data: &QaDataset,
    min_count: u64,
    config: &EmbedTrainConfig,
    combine: Combine,
) -> Result<(SideModel, SideModel, FeatureTable)> {
    let question = SideModel::train(data.corpus(Side::Question), min_count, config, combine)?;
    let answer = SideModel::train(data.corpus(Side::Answer), min_count, config, combine)?;
    let features = FeatureTable::new(question.doc_vectors(), answer.doc_vectors())?;
    Ok((question, answer, features))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub decision: RoutingDecision,
    /// Best candidate, reported even when the question is escalated.
    pub best_index: usize,
    pub best_text: String,
}

/// Answers free-text questions from a fixed answer pool.
#[derive(Debug, Clone)]
pub struct AnswerEngine {
    pub question: SideModel,
    pub net: SimilarityNetwork,
    pub answers: Vec<String>,
    pub answer_features: Matrix,
    pub infer: InferConfig,
}

impl AnswerEngine {
    pub fn new(
        question: SideModel,
        net: SimilarityNetwork,
        answers: Vec<String>,
        answer_features: Matrix,
        infer: InferConfig,
    ) -> Result<Self> {
        if answers.is_empty() {
            return Err(Error::Empty("answer pool"));
        }
        if answer_features.rows() != answers.len() {
            return Err(Error::invalid(format!(
                "{} answer texts but {} answer vectors",
                answers.len(),
                answer_features.rows()
            )));
        }
        if answer_features.cols() != net.input_dim() || question.model.dim != net.input_dim() {
            return Err(Error::invalid(format!(
                "similarity network expects {}-dimensional features, embeddings have {} (questions) and {} (answers)",
                net.input_dim(),
                question.model.dim,
                answer_features.cols()
            )));
        }
        Ok(Self { question, net, answers, answer_features, infer })
    }

    /// Scores of every answer for an embedded question.
    pub fn scores(&self, question: &[f64]) -> Result<Vec<f64>> {
        self.answer_features.iter_rows().map(|a| self.net.score(question, a)).collect()
    }

    pub fn ask(&self, text: &str, threshold: f64) -> Result<Reply> {
        let q = self.question.infer(text, &self.infer)?;
        let scores = self.scores(&q)?;
        let (best_index, score) = argmax(&scores).ok_or(Error::Empty("answer pool"))?;
        Ok(Reply {
            decision: route(best_index as u32, score, threshold)?,
            best_index,
            best_text: self.answers[best_index].clone(),
        })
    }
}

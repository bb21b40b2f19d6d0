//! Mini-batch training of the similarity network with a step-decayed
//! learning rate and early stopping on validation pair accuracy.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{DocId, QaPair};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{mix, seeded, streams};
use crate::simnet::{Activation, Dropout, Example, Gradients, NetworkShape, SimilarityNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimTrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub dropout_p: f64,
    pub lambda: f64,
    pub init_std: f64,
    pub bias_const: f64,
    pub lr0: f64,
    pub decay: f64,
    pub decay_start_epoch: usize,
    pub lr_floor: f64,
    pub early_stop_patience: usize,
    pub optimizer: Optimizer,
    pub activation: Activation,
    pub hidden1: usize,
    pub hidden2: usize,
    pub seed: u64,
}

impl Default for SimTrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            max_epochs: 600,
            dropout_p: 0.5,
            lambda: 0.0005,
            init_std: 0.03,
            bias_const: 0.1,
            lr0: 0.0004,
            decay: 0.95,
            decay_start_epoch: 500,
            lr_floor: 1e-5,
            early_stop_patience: 100,
            optimizer: Optimizer::default(),
            activation: Activation::Tanh,
            hidden1: crate::simnet::DEFAULT_HIDDEN1,
            hidden2: crate::simnet::DEFAULT_HIDDEN2,
            seed: 42,
        }
    }
}

impl SimTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(msg.to_string()));
        if self.batch_size == 0 {
            return bad("simnet.batch_size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad("simnet.dropout_p must lie in [0, 1)");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("simnet.lambda must be non-negative");
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return bad("simnet.init_std must be positive");
        }
        if !self.bias_const.is_finite() {
            return bad("simnet.bias_const must be finite");
        }
        if !(self.lr_floor > 0.0 && self.lr_floor < self.lr0 && self.lr0.is_finite()) {
            return bad("simnet.lr_floor must be positive and below simnet.lr0");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("simnet.decay must lie in (0, 1]");
        }
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return bad("simnet.hidden1 and simnet.hidden2 must be positive");
        }
        Ok(())
    }

    /// `lr0` before `decay_start_epoch`, then `lr0 · decay^(e − start + 1)`
    /// clamped below at `lr_floor`.
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        if epoch < self.decay_start_epoch {
            return self.lr0;
        }
        let exponent = (epoch - self.decay_start_epoch + 1).min(i32::MAX as usize) as i32;
        (self.lr0 * self.decay.powi(exponent)).max(self.lr_floor)
    }
}

pub fn lr_at_epoch(config: &SimTrainConfig, epoch: usize) -> f64 {
    config.lr_at_epoch(epoch)
}

/// Doc-vector lookup for the question and answer corpora; row `i` holds the
/// vector of doc id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub questions: Matrix,
    pub answers: Matrix,
}

impl FeatureTable {
    pub fn new(questions: Matrix, answers: Matrix) -> Result<Self> {
        if questions.cols() != answers.cols() {
            return Err(Error::invalid(format!(
                "question vectors have dimension {} but answer vectors {}",
                questions.cols(),
                answers.cols()
            )));
        }
        Ok(Self { questions, answers })
    }

    pub fn dim(&self) -> usize {
        self.questions.cols()
    }

    pub fn question(&self, doc: DocId) -> Result<&[f64]> {
        if (doc as usize) < self.questions.rows() {
            Ok(self.questions.row(doc as usize))
        } else {
            Err(Error::MissingFeatures { side: "question", doc })
        }
    }

    pub fn answer(&self, doc: DocId) -> Result<&[f64]> {
        if (doc as usize) < self.answers.rows() {
            Ok(self.answers.row(doc as usize))
        } else {
            Err(Error::MissingFeatures { side: "answer", doc })
        }
    }

    pub fn example(&self, pair: &QaPair) -> Result<Example<'_>> {
        Ok(Example {
            question: self.question(pair.question_doc)?,
            answer: self.answer(pair.answer_doc)?,
            label: pair.label as f64,
        })
    }

    fn examples(&self, pairs: &[QaPair]) -> Result<Vec<Example<'_>>> {
        pairs.iter().map(|p| self.example(p)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStopping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub planned_epochs: usize,
    pub stop_reason: StopReason,
}

impl TrainReport {
    pub fn completed_epochs(&self) -> usize {
        self.epochs.len()
    }

    /// One JSON object per epoch.
    pub fn write_jsonl(&self, w: &mut impl Write) -> std::io::Result<()> {
        for e in &self.epochs {
            writeln!(w, "{}", serde_json::to_string(e).map_err(std::io::Error::other)?)?;
        }
        Ok(())
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "epoch,lr,train_loss,train_acc,val_acc")?;
        for e in &self.epochs {
            writeln!(w, "{},{},{},{},{}", e.epoch, e.lr, e.train_loss, e.train_acc, e.val_acc)?;
        }
        Ok(())
    }
}

/// Fraction of pairs whose thresholded score (`≥ 0.5` predicts a match)
/// equals the label.
pub fn evaluate_pair_accuracy(net: &SimilarityNetwork, pairs: &[QaPair], features: &FeatureTable) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("pairs to evaluate"));
    }
    let mut correct = 0usize;
    for p in pairs {
        let s = net.score(features.question(p.question_doc)?, features.answer(p.answer_doc)?)?;
        if (s >= 0.5) == (p.label == 1) {
            correct += 1;
        }
    }
    Ok(correct as f64 / pairs.len() as f64)
}

enum OptimizerState {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl OptimizerState {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(kind: Optimizer, n_params: usize) -> Self {
        match kind {
            Optimizer::Sgd => OptimizerState::Sgd,
            Optimizer::Adam => OptimizerState::Adam { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 },
        }
    }

    fn step(&mut self, net: &mut SimilarityNetwork, grads: &Gradients, lr: f64) {
        let params = net.blocks_mut().into_iter().flat_map(|b| b.iter_mut());
        let grads = grads.blocks().into_iter().flat_map(|b| b.iter());
        match self {
            OptimizerState::Sgd => {
                for (p, g) in params.zip(grads) {
                    *p -= lr * g;
                }
            }
            OptimizerState::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - Self::BETA1.powi(*t);
                let c2 = 1.0 - Self::BETA2.powi(*t);
                for (((p, g), m), v) in params.zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                    *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
                }
            }
        }
    }
}

pub fn train_simnet(
    train: &[QaPair],
    val: &[QaPair],
    features: &FeatureTable,
    config: &SimTrainConfig,
) -> Result<(SimilarityNetwork, TrainReport)> {
    train_simnet_observed(train, val, features, config, |_, _| Ok(()))
}

/// Training loop. `observer` sees every completed epoch together with the
/// current (not the best) parameters, e.g. to write checkpoints.
pub fn train_simnet_observed(
    train: &[QaPair],
    val: &[QaPair],
    features: &FeatureTable,
    config: &SimTrainConfig,
    mut observer: impl FnMut(&EpochRecord, &SimilarityNetwork) -> Result<()>,
) -> Result<(SimilarityNetwork, TrainReport)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training pairs"));
    }
    if val.is_empty() {
        return Err(Error::Empty("validation pairs"));
    }
    let train_examples = features.examples(train)?;
    features.examples(val)?;

    let shape = NetworkShape {
        input: features.dim(),
        hidden1: config.hidden1,
        hidden2: config.hidden2,
        activation: config.activation,
    };
    let mut net = SimilarityNetwork::init(shape, config.init_std, config.bias_const, config.seed)?;
    let mut optimizer = OptimizerState::new(config.optimizer, net.num_params());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle_rng = seeded(config.seed, streams::SIMNET_SHUFFLE);

    let mut best: Option<(usize, f64, SimilarityNetwork)> = None;
    let mut since_best = 0usize;
    let mut records = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.max_epochs {
        let lr = config.lr_at_epoch(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_examples[i]));
            let dropout = (config.dropout_p > 0.0).then(|| Dropout {
                p: config.dropout_p,
                seed: mix(config.seed, epoch as u64, b as u64),
            });
            let (loss, grads) = net.gradients(&batch, config.lambda, dropout)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}, batch {b}")));
            }
            loss_sum += loss * chunk.len() as f64;
            optimizer.step(&mut net, &grads, lr);
        }
        if !net.is_finite() {
            return Err(Error::NonFinite(format!("network parameters after epoch {epoch}")));
        }
        let record = EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / train.len() as f64,
            train_acc: evaluate_pair_accuracy(&net, train, features)?,
            val_acc: evaluate_pair_accuracy(&net, val, features)?,
        };
        observer(&record, &net)?;
        let improved = best.as_ref().is_none_or(|(_, acc, _)| record.val_acc > *acc);
        records.push(record);
        if improved {
            let acc = records[epoch].val_acc;
            best = Some((epoch, acc, net.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > config.early_stop_patience {
                stop_reason = StopReason::EarlyStopping;
                break;
            }
        }
    }

    let (best_epoch, best_val_acc, best_net) = match best {
        Some(b) => b,
        // max_epochs == 0: nothing trained, return the initialization
        None => (0, evaluate_pair_accuracy(&net, val, features)?, net),
    };
    let report = TrainReport {
        epochs: records,
        best_epoch,
        best_val_acc,
        planned_epochs: config.max_epochs,
        stop_reason,
    };
    Ok((best_net, report))
}

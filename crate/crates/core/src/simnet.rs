//! Two-tower similarity network.
//!
//! The question and answer vectors each pass through their own two-layer
//! tower (no weight sharing). The second-layer activations are concatenated
//! and a single sigmoid unit produces the match probability:
//!
//! ```text
//! h1 = act(W1 f + b1)          per tower, dropout on h1 and h2 in training
//! h2 = act(W2 h1 + b2)
//! y' = σ(W3 [h2q; h2a] + b3)
//! ```
//!
//! The training objective is the mean binary cross-entropy over a batch plus
//! `λ‖W3‖²_F`; only the head weights are regularized.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::binio::*;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, sigmoid, Matrix};
use crate::rng::{seeded, streams};

pub const SIMNET_MAGIC: &[u8; 4] = b"SIM1";
pub const DEFAULT_HIDDEN1: usize = 50;
pub const DEFAULT_HIDDEN2: usize = 20;
/// Predictions are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative at pre-activation `z` with output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn id(self) -> usize {
        match self {
            Activation::Tanh => 0,
            Activation::Relu => 1,
        }
    }
}

/// Fully connected layer; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weights: Matrix::zeros(outputs, inputs), bias: vec![0.0; outputs] }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tower {
    pub hidden1: Dense,
    pub hidden2: Dense,
}

impl Tower {
    fn zeros(input: usize, h1: usize, h2: usize) -> Self {
        Self { hidden1: Dense::zeros(input, h1), hidden2: Dense::zeros(h1, h2) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkShape {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub activation: Activation,
}

impl NetworkShape {
    pub fn new(input: usize) -> Self {
        Self { input, hidden1: DEFAULT_HIDDEN1, hidden2: DEFAULT_HIDDEN2, activation: Activation::Tanh }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityNetwork {
    pub question: Tower,
    pub answer: Tower,
    /// `1 × 2·hidden2` over `[h2q; h2a]`.
    pub head: Dense,
    pub activation: Activation,
}

/// Gradient of the loss with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub question: Tower,
    pub answer: Tower,
    pub head: Dense,
}

fn tower_blocks(t: &Tower) -> [&[f64]; 4] {
    [t.hidden1.weights.as_slice(), &t.hidden1.bias, t.hidden2.weights.as_slice(), &t.hidden2.bias]
}

fn tower_blocks_mut(t: &mut Tower) -> [&mut [f64]; 4] {
    [
        t.hidden1.weights.as_mut_slice(),
        &mut t.hidden1.bias,
        t.hidden2.weights.as_mut_slice(),
        &mut t.hidden2.bias,
    ]
}

/// Parameter blocks in file order: W1q, b1q, W2q, b2q, W1a, b1a, W2a, b2a, W3, b3.
fn blocks<'a>(q: &'a Tower, a: &'a Tower, head: &'a Dense) -> [&'a [f64]; 10] {
    let [q0, q1, q2, q3] = tower_blocks(q);
    let [a0, a1, a2, a3] = tower_blocks(a);
    [q0, q1, q2, q3, a0, a1, a2, a3, head.weights.as_slice(), &head.bias]
}

fn blocks_mut<'a>(q: &'a mut Tower, a: &'a mut Tower, head: &'a mut Dense) -> [&'a mut [f64]; 10] {
    let [q0, q1, q2, q3] = tower_blocks_mut(q);
    let [a0, a1, a2, a3] = tower_blocks_mut(a);
    [q0, q1, q2, q3, a0, a1, a2, a3, head.weights.as_mut_slice(), &mut head.bias]
}

impl Gradients {
    pub fn blocks(&self) -> [&[f64]; 10] {
        blocks(&self.question, &self.answer, &self.head)
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 10] {
        blocks_mut(&mut self.question, &mut self.answer, &mut self.head)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Dropout rate plus the seed its masks are drawn from. Example `i` of a
/// batch always gets the masks of stream `i`, so a fixed seed fixes them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    pub p: f64,
    pub seed: u64,
}

/// Inverted-dropout multipliers (0 or `1/(1-p)`) for both hidden layers of
/// both towers.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub question1: Vec<f64>,
    pub question2: Vec<f64>,
    pub answer1: Vec<f64>,
    pub answer2: Vec<f64>,
}

impl DropoutMasks {
    pub fn sample(h1: usize, h2: usize, p: f64, rng: &mut impl Rng) -> Self {
        let keep = 1.0 / (1.0 - p);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect()
        };
        let question1 = draw(h1);
        let question2 = draw(h2);
        let answer1 = draw(h1);
        let answer2 = draw(h2);
        Self { question1, question2, answer1, answer2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TowerTrace {
    pub pre1: Vec<f64>,
    pub act1: Vec<f64>,
    /// Activations after dropout; this is what the next layer sees.
    pub out1: Vec<f64>,
    pub pre2: Vec<f64>,
    pub act2: Vec<f64>,
    pub out2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub question: TowerTrace,
    pub answer: TowerTrace,
    pub masks: Option<DropoutMasks>,
    pub logit: f64,
    pub score: f64,
}

/// One labeled (question, answer) feature pair.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub question: &'a [f64],
    pub answer: &'a [f64],
    pub label: f64,
}

impl SimilarityNetwork {
    pub fn zeros(shape: NetworkShape) -> Self {
        let NetworkShape { input, hidden1, hidden2, activation } = shape;
        Self {
            question: Tower::zeros(input, hidden1, hidden2),
            answer: Tower::zeros(input, hidden1, hidden2),
            head: Dense::zeros(2 * hidden2, 1),
            activation,
        }
    }

    /// Weights drawn from `N(0, std²)`, every bias set to `bias_const`.
    pub fn init(shape: NetworkShape, std: f64, bias_const: f64, seed: u64) -> Result<Self> {
        if shape.input == 0 || shape.hidden1 == 0 || shape.hidden2 == 0 {
            return Err(Error::invalid("network dimensions must be positive"));
        }
        let normal = Normal::new(0.0, std)
            .ok()
            .filter(|_| std > 0.0)
            .ok_or_else(|| Error::invalid("init std must be positive and finite"))?;
        let mut net = Self::zeros(shape);
        let mut rng = seeded(seed, streams::SIMNET_INIT);
        let [w1q, b1q, w2q, b2q, w1a, b1a, w2a, b2a, w3, b3] = net.blocks_mut();
        for w in [w1q, w2q, w1a, w2a, w3] {
            w.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
        }
        for b in [b1q, b2q, b1a, b2a, b3] {
            b.iter_mut().for_each(|x| *x = bias_const);
        }
        Ok(net)
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape {
            input: self.question.hidden1.inputs(),
            hidden1: self.question.hidden1.outputs(),
            hidden2: self.question.hidden2.outputs(),
            activation: self.activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.question.hidden1.inputs()
    }

    pub fn blocks(&self) -> [&[f64]; 10] {
        blocks(&self.question, &self.answer, &self.head)
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 10] {
        blocks_mut(&mut self.question, &mut self.answer, &mut self.head)
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// `‖W3‖_F`
    pub fn head_norm(&self) -> f64 {
        self.head.weights.frobenius_sq().sqrt()
    }

    fn zero_gradients(&self) -> Gradients {
        let z = Self::zeros(self.shape());
        Gradients { question: z.question, answer: z.answer, head: z.head }
    }

    fn check_input(&self, v: &[f64], side: &str) -> Result<()> {
        if v.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "{side} vector has dimension {}, network expects {}",
                v.len(),
                self.input_dim()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("{side} feature vector")));
        }
        Ok(())
    }

    fn tower_forward(&self, tower: &Tower, f: &[f64], m1: Option<&[f64]>, m2: Option<&[f64]>) -> TowerTrace {
        let act = self.activation;
        let mut pre1 = vec![0.0; tower.hidden1.outputs()];
        tower.hidden1.weights.affine(f, &tower.hidden1.bias, &mut pre1);
        let act1: Vec<f64> = pre1.iter().map(|&z| act.apply(z)).collect();
        let out1 = match m1 {
            Some(m) => act1.iter().zip(m).map(|(a, k)| a * k).collect(),
            None => act1.clone(),
        };
        let mut pre2 = vec![0.0; tower.hidden2.outputs()];
        tower.hidden2.weights.affine(&out1, &tower.hidden2.bias, &mut pre2);
        let act2: Vec<f64> = pre2.iter().map(|&z| act.apply(z)).collect();
        let out2 = match m2 {
            Some(m) => act2.iter().zip(m).map(|(a, k)| a * k).collect(),
            None => act2.clone(),
        };
        TowerTrace { pre1, act1, out1, pre2, act2, out2 }
    }

    /// Forward pass with explicit masks (`None` = evaluation, no dropout).
    pub fn forward_with_masks(&self, fq: &[f64], fa: &[f64], masks: Option<&DropoutMasks>) -> Result<ForwardTrace> {
        self.check_input(fq, "question")?;
        self.check_input(fa, "answer")?;
        let question = self.tower_forward(
            &self.question,
            fq,
            masks.map(|m| m.question1.as_slice()),
            masks.map(|m| m.question2.as_slice()),
        );
        let answer = self.tower_forward(
            &self.answer,
            fa,
            masks.map(|m| m.answer1.as_slice()),
            masks.map(|m| m.answer2.as_slice()),
        );
        let h2 = question.out2.len();
        let w3 = self.head.weights.row(0);
        let logit = dot(&w3[..h2], &question.out2) + dot(&w3[h2..], &answer.out2) + self.head.bias[0];
        Ok(ForwardTrace { question, answer, masks: masks.cloned(), logit, score: sigmoid(logit) })
    }

    /// Forward pass. In `Train` mode with `dropout_p > 0` fresh inverted
    /// dropout masks are drawn from `seed`; `Eval` never drops.
    pub fn forward(&self, fq: &[f64], fa: &[f64], dropout_p: f64, mode: Mode, seed: u64) -> Result<ForwardTrace> {
        if !(0.0..1.0).contains(&dropout_p) {
            return Err(Error::invalid("dropout probability must lie in [0, 1)"));
        }
        let masks = self.sample_masks(dropout_p, mode, seed, 0);
        self.forward_with_masks(fq, fa, masks.as_ref())
    }

    fn sample_masks(&self, p: f64, mode: Mode, seed: u64, index: u64) -> Option<DropoutMasks> {
        if mode == Mode::Eval || p == 0.0 {
            return None;
        }
        let shape = self.shape();
        let mut rng = seeded(seed, streams::DROPOUT_BASE + index);
        Some(DropoutMasks::sample(shape.hidden1, shape.hidden2, p, &mut rng))
    }

    /// Match probability in evaluation mode.
    pub fn score(&self, fq: &[f64], fa: &[f64]) -> Result<f64> {
        Ok(self.forward_with_masks(fq, fa, None)?.score)
    }

    fn batch_traces(&self, batch: &[Example<'_>], dropout: Option<Dropout>) -> Result<Vec<ForwardTrace>> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        if let Some(d) = dropout {
            if !(0.0..1.0).contains(&d.p) {
                return Err(Error::invalid("dropout probability must lie in [0, 1)"));
            }
        }
        batch
            .iter()
            .enumerate()
            .map(|(i, ex)| {
                if ex.label != 0.0 && ex.label != 1.0 {
                    return Err(Error::invalid(format!("label must be 0 or 1, got {}", ex.label)));
                }
                let masks = dropout.and_then(|d| self.sample_masks(d.p, Mode::Train, d.seed, i as u64));
                self.forward_with_masks(ex.question, ex.answer, masks.as_ref())
            })
            .collect()
    }

    /// Mean clamped binary cross-entropy plus `λ‖W3‖²_F`.
    pub fn loss(&self, batch: &[Example<'_>], lambda: f64, dropout: Option<Dropout>) -> Result<f64> {
        let traces = self.batch_traces(batch, dropout)?;
        Ok(self.loss_from_traces(batch, &traces, lambda))
    }

    fn loss_from_traces(&self, batch: &[Example<'_>], traces: &[ForwardTrace], lambda: f64) -> f64 {
        let ce: f64 = batch.iter().zip(traces).map(|(ex, t)| cross_entropy(t.score, ex.label)).sum();
        ce / batch.len() as f64 + lambda * self.head.weights.frobenius_sq()
    }

    /// Loss and its exact gradient with respect to every parameter.
    pub fn gradients(&self, batch: &[Example<'_>], lambda: f64, dropout: Option<Dropout>) -> Result<(f64, Gradients)> {
        let traces = self.batch_traces(batch, dropout)?;
        let loss = self.loss_from_traces(batch, &traces, lambda);
        let mut grads = self.zero_gradients();
        let h2 = self.shape().hidden2;
        let scale = 1.0 / batch.len() as f64;
        let w3 = self.head.weights.row(0);
        for (ex, t) in batch.iter().zip(&traces) {
            // d(loss)/d(logit); zero where the clamp is active
            let p = t.score;
            let dlogit = if (PROB_EPS..=1.0 - PROB_EPS).contains(&p) { (p - ex.label) * scale } else { 0.0 };
            if dlogit == 0.0 {
                continue;
            }
            let gw3 = grads.head.weights.row_mut(0);
            axpy(dlogit, &t.question.out2, &mut gw3[..h2]);
            axpy(dlogit, &t.answer.out2, &mut gw3[h2..]);
            grads.head.bias[0] += dlogit;

            let dq: Vec<f64> = w3[..h2].iter().map(|w| w * dlogit).collect();
            let da: Vec<f64> = w3[h2..].iter().map(|w| w * dlogit).collect();
            let masks = t.masks.as_ref();
            self.tower_backward(
                &self.question,
                &mut grads.question,
                ex.question,
                &t.question,
                masks.map(|m| (m.question1.as_slice(), m.question2.as_slice())),
                dq,
            );
            self.tower_backward(
                &self.answer,
                &mut grads.answer,
                ex.answer,
                &t.answer,
                masks.map(|m| (m.answer1.as_slice(), m.answer2.as_slice())),
                da,
            );
        }
        let w3 = self.head.weights.as_slice();
        axpy(2.0 * lambda, w3, grads.head.weights.as_mut_slice());
        Ok((loss, grads))
    }

    fn tower_backward(
        &self,
        tower: &Tower,
        grads: &mut Tower,
        input: &[f64],
        trace: &TowerTrace,
        masks: Option<(&[f64], &[f64])>,
        mut d_out2: Vec<f64>,
    ) {
        let act = self.activation;
        if let Some((_, m2)) = masks {
            d_out2.iter_mut().zip(m2).for_each(|(d, k)| *d *= k);
        }
        let dz2: Vec<f64> = d_out2
            .iter()
            .zip(trace.pre2.iter().zip(&trace.act2))
            .map(|(d, (&z, &a))| d * act.derivative(z, a))
            .collect();
        let mut d_out1 = vec![0.0; trace.out1.len()];
        for (r, &g) in dz2.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            axpy(g, &trace.out1, grads.hidden2.weights.row_mut(r));
            grads.hidden2.bias[r] += g;
            axpy(g, tower.hidden2.weights.row(r), &mut d_out1);
        }
        if let Some((m1, _)) = masks {
            d_out1.iter_mut().zip(m1).for_each(|(d, k)| *d *= k);
        }
        for (r, (&d, (&z, &a))) in d_out1.iter().zip(trace.pre1.iter().zip(&trace.act1)).enumerate() {
            let g = d * act.derivative(z, a);
            if g == 0.0 {
                continue;
            }
            axpy(g, input, grads.hidden1.weights.row_mut(r));
            grads.hidden1.bias[r] += g;
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let shape = self.shape();
        write_magic(w, SIMNET_MAGIC)?;
        write_u32(w, shape.input)?;
        write_u32(w, shape.hidden1)?;
        write_u32(w, shape.hidden2)?;
        write_u32(w, shape.activation.id())?;
        for block in self.blocks() {
            write_f32s(w, block)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        read_magic(r, SIMNET_MAGIC)?;
        let input = read_u32(r)?;
        let hidden1 = read_u32(r)?;
        let hidden2 = read_u32(r)?;
        let activation = match read_u32(r)? {
            0 => Activation::Tanh,
            1 => Activation::Relu,
            other => return Err(Error::Format(format!("unknown activation id {other}"))),
        };
        let mut net = Self::zeros(NetworkShape { input, hidden1, hidden2, activation });
        for block in net.blocks_mut() {
            let values = read_f32s(r, block.len())?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format("model file contains non-finite parameters".into()));
            }
            block.copy_from_slice(&values);
        }
        expect_eof(r)?;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_with(path, |w| self.write_to(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }
}

/// Clamped binary cross-entropy of one prediction.
pub fn cross_entropy(score: f64, label: f64) -> f64 {
    let p = score.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

pub fn init_network(input_dim: usize, std: f64, bias_const: f64, seed: u64) -> Result<SimilarityNetwork> {
    SimilarityNetwork::init(NetworkShape::new(input_dim), std, bias_const, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_net(d: usize) -> SimilarityNetwork {
        SimilarityNetwork::zeros(NetworkShape::new(d))
    }

    #[test]
    fn init_statistics() {
        let net = init_network(100, 0.03, 0.1, 9).unwrap();
        let w = net.question.hidden1.weights.as_slice();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let sd = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64).sqrt();
        assert!((sd - 0.03).abs() < 0.003, "sd {sd}");
        for b in [&net.question.hidden1.bias, &net.answer.hidden2.bias, &net.head.bias] {
            assert!(b.iter().all(|&x| x == 0.1));
        }
        assert_eq!(net, init_network(100, 0.03, 0.1, 9).unwrap());
        assert_ne!(net.question.hidden1, net.answer.hidden1);
        assert!(init_network(4, 0.0, 0.1, 1).is_err());
    }

    #[test]
    fn layer_dimensions() {
        let net = init_network(16, 0.03, 0.1, 0).unwrap();
        assert_eq!((net.question.hidden1.outputs(), net.question.hidden1.inputs()), (50, 16));
        assert_eq!((net.answer.hidden2.outputs(), net.answer.hidden2.inputs()), (20, 50));
        assert_eq!((net.head.outputs(), net.head.inputs()), (1, 40));
    }

    #[test]
    fn towers_are_independent() {
        let mut net = init_network(4, 0.03, 0.1, 0).unwrap();
        let answer = net.answer.clone();
        net.question.hidden1.weights.set(0, 0, 5.0);
        net.question.hidden2.bias[3] = -1.0;
        assert_eq!(net.answer, answer);
    }

    #[test]
    fn zero_network_scores_one_half() {
        let net = zero_net(3);
        let t = net.forward(&[1.0, -2.0, 3.0], &[0.5, 0.5, 0.5], 0.0, Mode::Eval, 0).unwrap();
        assert_eq!(t.score, 0.5);
        assert_eq!(net.score(&[0.0; 3], &[9.0; 3]).unwrap(), 0.5);
    }

    #[test]
    fn zero_dropout_train_equals_eval() {
        let net = init_network(5, 0.5, 0.1, 3).unwrap();
        let fq = [0.1, -0.4, 0.3, 0.9, -1.0];
        let fa = [0.7, 0.2, -0.3, 0.0, 0.5];
        let train = net.forward(&fq, &fa, 0.0, Mode::Train, 11).unwrap();
        let eval = net.forward(&fq, &fa, 0.5, Mode::Eval, 11).unwrap();
        assert_eq!(train.score, eval.score);
    }

    #[test]
    fn trace_masks_replay() {
        let net = init_network(5, 0.5, 0.1, 3).unwrap();
        let fq = [0.1, -0.4, 0.3, 0.9, -1.0];
        let fa = [0.7, 0.2, -0.3, 0.0, 0.5];
        let t = net.forward(&fq, &fa, 0.5, Mode::Train, 4).unwrap();
        let masks = t.masks.as_ref().unwrap();
        assert!(masks.question1.iter().all(|&m| m == 0.0 || m == 2.0));
        let replay = net.forward_with_masks(&fq, &fa, Some(masks)).unwrap();
        assert_eq!(replay.score, t.score);
    }

    #[test]
    fn hand_computed_forward() {
        // d = 2, one unit per hidden layer, tanh
        let mut net = SimilarityNetwork::zeros(NetworkShape { input: 2, hidden1: 1, hidden2: 1, activation: Activation::Tanh });
        net.question.hidden1.weights = Matrix::from_vec(1, 2, vec![0.5, -1.0]);
        net.question.hidden1.bias = vec![0.1];
        net.question.hidden2.weights = Matrix::from_vec(1, 1, vec![2.0]);
        net.question.hidden2.bias = vec![0.0];
        net.answer.hidden1.weights = Matrix::from_vec(1, 2, vec![1.0, 1.0]);
        net.answer.hidden1.bias = vec![-0.2];
        net.answer.hidden2.weights = Matrix::from_vec(1, 1, vec![-1.5]);
        net.answer.hidden2.bias = vec![0.3];
        net.head.weights = Matrix::from_vec(1, 2, vec![1.2, 0.7]);
        net.head.bias = vec![-0.1];
        let (fq, fa) = ([1.0, 2.0], [0.3, 0.4]);
        let hq = (2.0 * (0.5f64 * 1.0 - 2.0 + 0.1).tanh()).tanh();
        let ha = (-1.5 * (0.3f64 + 0.4 - 0.2).tanh() + 0.3).tanh();
        let expect = 1.0 / (1.0 + (-(1.2 * hq + 0.7 * ha - 0.1)).exp());
        assert!((net.score(&fq, &fa).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let net = zero_net(2);
        assert!(net.score(&[f64::NAN, 0.0], &[0.0, 0.0]).is_err());
        assert!(net.score(&[0.0, f64::INFINITY], &[0.0, 0.0]).is_err());
        assert!(net.score(&[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_network_loss_is_log_two() {
        let net = zero_net(2);
        let (a, b) = ([1.0, 0.0], [0.0, 1.0]);
        let batch = [
            Example { question: &a, answer: &b, label: 1.0 },
            Example { question: &b, answer: &a, label: 0.0 },
        ];
        let loss = net.loss(&batch, 0.0, None).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn regularizer_adds_lambda_times_head_norm() {
        let net = init_network(3, 0.3, 0.1, 5).unwrap();
        let (a, b) = ([1.0, 0.0, 0.2], [0.0, 1.0, -0.4]);
        let batch = [Example { question: &a, answer: &b, label: 1.0 }];
        let base = net.loss(&batch, 0.0, None).unwrap();
        let reg = net.loss(&batch, 0.25, None).unwrap();
        let sq: f64 = net.head.weights.as_slice().iter().map(|w| w * w).sum();
        assert!((reg - base - 0.25 * sq).abs() < 1e-12);
    }

    #[test]
    fn loss_is_finite_under_saturation() {
        let mut net = init_network(2, 0.1, 0.0, 1).unwrap();
        net.head.bias[0] = 1e6;
        let v = [0.0, 0.0];
        let batch = [Example { question: &v, answer: &v, label: 0.0 }];
        let loss = net.loss(&batch, 0.0, None).unwrap();
        assert!(loss.is_finite() && loss > 15.0);
        let (_, g) = net.gradients(&batch, 0.0, None).unwrap();
        assert!(g.blocks().iter().all(|b| b.iter().all(|x| x.is_finite())));
    }

    #[test]
    fn perfect_prediction_zeroes_head_bias_gradient() {
        let net = zero_net(2);
        let v = [0.3, 0.1];
        // zero net predicts 0.5; pair the labels so residuals cancel exactly
        let batch = [
            Example { question: &v, answer: &v, label: 1.0 },
            Example { question: &v, answer: &v, label: 0.0 },
        ];
        let (_, g) = net.gradients(&batch, 0.0, None).unwrap();
        assert_eq!(g.head.bias[0], 0.0);
    }

    #[test]
    fn sim_file_round_trip() {
        let net = init_network(6, 0.03, 0.1, 2).unwrap();
        let mut buf = Vec::new();
        net.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SIM1");
        assert_eq!(buf.len(), 4 + 16 + 4 * net.num_params());
        let back = SimilarityNetwork::read_from(&mut &buf[..]).unwrap();
        for (a, b) in back.blocks().iter().zip(net.blocks()) {
            assert!(a.iter().zip(b).all(|(x, y)| *x == *y as f32 as f64));
        }
        assert!(SimilarityNetwork::read_from(&mut &buf[..20]).is_err());
    }
}

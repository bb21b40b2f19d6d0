//! Question classification with bag-of-words or paragraph-vector features
//! and a hinge-loss linear classifier, plus learning curves over training
//! ratios.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenId, TokenizedDocument};
use crate::error::{Error, Result};
use crate::rng::{seeded, streams};

/// Sparse unigram histogram.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowVector {
    counts: BTreeMap<TokenId, u32>,
}

impl BowVector {
    pub fn from_tokens(tokens: &[TokenId]) -> Self {
        let mut counts = BTreeMap::new();
        for &t in tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
        Self { counts }
    }

    pub fn count(&self, id: TokenId) -> u32 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, u32)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    /// Histogram of the concatenation of both documents.
    pub fn merged(&self, other: &Self) -> Self {
        let mut counts = self.counts.clone();
        for (k, v) in other.iter() {
            *counts.entry(k).or_insert(0) += v;
        }
        Self { counts }
    }

    /// Histogram over a joint id space in which this vector's ids come
    /// first and `other`'s ids are shifted by `offset`.
    pub fn joined(&self, other: &Self, offset: usize) -> Self {
        let mut counts = self.counts.clone();
        for (k, v) in other.iter() {
            counts.insert(k + offset as TokenId, v);
        }
        Self { counts }
    }
}

/// Unigram counts of an encoded document. `vocab_size` is checked so that
/// the histogram is usable as a feature vector of that width.
pub fn bow_features(doc: &TokenizedDocument, vocab_size: usize) -> Result<BowVector> {
    if let Some(&bad) = doc.tokens.iter().find(|&&t| t as usize >= vocab_size) {
        return Err(Error::invalid(format!("token id {bad} out of range for vocabulary of {vocab_size}")));
    }
    Ok(BowVector::from_tokens(&doc.tokens))
}

/// Feature vectors the linear classifier can consume.
pub trait Features {
    fn dot(&self, w: &[f64]) -> f64;
    /// `w += alpha · x`
    fn axpy_into(&self, alpha: f64, w: &mut [f64]);
    /// Smallest weight length that covers every non-zero entry.
    fn min_dim(&self) -> usize;
}

impl Features for [f64] {
    fn dot(&self, w: &[f64]) -> f64 {
        crate::linalg::dot(self, w)
    }

    fn axpy_into(&self, alpha: f64, w: &mut [f64]) {
        crate::linalg::axpy(alpha, self, w);
    }

    fn min_dim(&self) -> usize {
        self.len()
    }
}

impl Features for Vec<f64> {
    fn dot(&self, w: &[f64]) -> f64 {
        self.as_slice().dot(w)
    }

    fn axpy_into(&self, alpha: f64, w: &mut [f64]) {
        self.as_slice().axpy_into(alpha, w);
    }

    fn min_dim(&self) -> usize {
        self.len()
    }
}

impl Features for BowVector {
    fn dot(&self, w: &[f64]) -> f64 {
        self.iter().map(|(k, v)| w[k as usize] * v as f64).sum()
    }

    fn axpy_into(&self, alpha: f64, w: &mut [f64]) {
        for (k, v) in self.iter() {
            w[k as usize] += alpha * v as f64;
        }
    }

    fn min_dim(&self) -> usize {
        self.counts.keys().next_back().map_or(0, |&k| k as usize + 1)
    }
}

/// Rescale every column to zero mean and unit variance in place. Constant
/// columns are only centered.
pub fn standardize_columns(rows: &mut [Vec<f64>]) {
    let Some(dim) = rows.first().map(Vec::len) else { return };
    let n = rows.len() as f64;
    for c in 0..dim {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let sd = (rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = if sd > 1e-12 { 1.0 / sd } else { 1.0 };
        for r in rows.iter_mut() {
            r[c] = (r[c] - mean) * scale;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Objective {
    #[default]
    HingeLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub objective: Objective,
}

impl LinearClassifier {
    pub fn decision<F: Features + ?Sized>(&self, x: &F) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// +1 or −1; a zero margin counts as +1.
    pub fn predict<F: Features + ?Sized>(&self, x: &F) -> i8 {
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn accuracy<F: Features>(&self, xs: &[F], ys: &[i8]) -> f64 {
        let hits = xs.iter().zip(ys).filter(|(x, &y)| self.predict(*x) == y).count();
        hits as f64 / xs.len().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub reg: f64,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self { epochs: 50, learning_rate: 0.01, reg: 1e-4, seed: 42 }
    }
}

/// Mean hinge loss plus `reg · ‖w‖²`.
pub fn hinge_objective<F: Features>(clf: &LinearClassifier, xs: &[F], ys: &[i8], reg: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| (1.0 - y as f64 * clf.decision(x)).max(0.0))
        .sum();
    hinge / xs.len() as f64 + reg * crate::linalg::dot(&clf.weights, &clf.weights)
}

/// Subgradient of [`hinge_objective`]: `(∂/∂w, ∂/∂b)`. Exact wherever no
/// example sits on the hinge.
pub fn hinge_gradient<F: Features>(clf: &LinearClassifier, xs: &[F], ys: &[i8], reg: f64) -> (Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut gw: Vec<f64> = clf.weights.iter().map(|w| 2.0 * reg * w).collect();
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let y = y as f64;
        if y * clf.decision(x) < 1.0 {
            x.axpy_into(-y / n, &mut gw);
            gb -= y / n;
        }
    }
    (gw, gb)
}

fn check_labels(ys: &[i8]) -> Result<()> {
    if let Some(bad) = ys.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::invalid(format!("labels must be +1 or -1, got {bad}")));
    }
    if !(ys.contains(&1) && ys.contains(&-1)) {
        return Err(Error::invalid("training data must contain both classes"));
    }
    Ok(())
}

/// Per-example SGD on the regularized hinge loss, visiting examples in a
/// seeded order each epoch with a `1/(1 + t·lr·reg)`-style step decay.
pub fn train_linear<F: Features>(xs: &[F], ys: &[i8], dim: usize, config: &LinearConfig) -> Result<LinearClassifier> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("{} feature vectors but {} labels", xs.len(), ys.len())));
    }
    check_labels(ys)?;
    if let Some(x) = xs.iter().find(|x| x.min_dim() > dim) {
        return Err(Error::invalid(format!("feature of width {} exceeds classifier dim {dim}", x.min_dim())));
    }
    if !(config.learning_rate > 0.0 && config.reg >= 0.0) {
        return Err(Error::invalid("linear.learning_rate must be positive and linear.reg non-negative"));
    }
    let mut clf = LinearClassifier { weights: vec![0.0; dim], bias: 0.0, objective: Objective::HingeLoss };
    let mut rng = seeded(config.seed, streams::LINEAR);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut t = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let lr = config.learning_rate / (1.0 + config.learning_rate * config.reg * t as f64);
            t += 1;
            let y = ys[i] as f64;
            let margin = y * clf.decision(&xs[i]);
            let shrink = 1.0 - 2.0 * lr * config.reg;
            clf.weights.iter_mut().for_each(|w| *w *= shrink);
            if margin < 1.0 {
                xs[i].axpy_into(lr * y, &mut clf.weights);
                clf.bias += lr * y;
            }
        }
    }
    if !clf.weights.iter().all(|w| w.is_finite()) || !clf.bias.is_finite() {
        return Err(Error::NonFinite("linear classifier weights".into()));
    }
    Ok(clf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Bow,
    Doc2vec,
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureKind::Bow => "bow",
            FeatureKind::Doc2vec => "doc2vec",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub ratio: f64,
    pub feature_kind: FeatureKind,
    pub mean_accuracy: f64,
    pub std: f64,
    pub accuracies: Vec<f64>,
}

/// Stratified split: `ratio` of each class (at least one example) goes to
/// training, the rest is held out.
pub fn stratified_split(ys: &[i8], ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seeded(seed, streams::SPLIT);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [-1i8, 1] {
        let mut idx: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] == class).collect();
        idx.shuffle(&mut rng);
        let k = ((idx.len() as f64 * ratio).round() as usize).clamp(1, idx.len().saturating_sub(1).max(1));
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Held-out accuracy for each training ratio, averaged over `seeds`. The
/// split and the classifier both use the seed of the run.
pub fn learning_curve<F: Features + Clone>(
    xs: &[F],
    ys: &[i8],
    dim: usize,
    kind: FeatureKind,
    ratios: &[f64],
    seeds: &[u64],
    config: &LinearConfig,
) -> Result<Vec<CurvePoint>> {
    if xs.len() < 10 {
        return Err(Error::invalid(format!("learning curves need at least 10 examples, got {}", xs.len())));
    }
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("{} feature vectors but {} labels", xs.len(), ys.len())));
    }
    check_labels(ys)?;
    if seeds.is_empty() {
        return Err(Error::Empty("learning-curve seeds"));
    }
    if let Some(r) = ratios.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::invalid(format!("training ratio {r} must lie in (0, 1)")));
    }
    ratios
        .iter()
        .map(|&ratio| {
            let accuracies = seeds
                .iter()
                .map(|&seed| {
                    let (train, test) = stratified_split(ys, ratio, seed);
                    let pick = |idx: &[usize]| -> (Vec<F>, Vec<i8>) {
                        (idx.iter().map(|&i| xs[i].clone()).collect(), idx.iter().map(|&i| ys[i]).collect())
                    };
                    let (tx, ty) = pick(&train);
                    let (hx, hy) = pick(&test);
                    let clf = train_linear(&tx, &ty, dim, &LinearConfig { seed, ..*config })?;
                    Ok(clf.accuracy(&hx, &hy))
                })
                .collect::<Result<Vec<f64>>>()?;
            let n = accuracies.len() as f64;
            let mean = accuracies.iter().sum::<f64>() / n;
            let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
            Ok(CurvePoint { ratio, feature_kind: kind, mean_accuracy: mean, std: var.sqrt(), accuracies })
        })
        .collect()
}

pub fn write_curve_csv(w: &mut (impl Write + ?Sized), points: &[CurvePoint]) -> std::io::Result<()> {
    writeln!(w, "ratio,feature_kind,mean_accuracy,std")?;
    for p in points {
        writeln!(w, "{},{},{},{}", p.ratio, p.feature_kind, p.mean_accuracy, p.std)?;
    }
    Ok(())
}

/// One line of labeled classification data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledText {
    pub text: String,
    pub label: u8,
}

impl LabeledText {
    /// Label mapped to ±1.
    pub fn sign(&self) -> i8 {
        if self.label == 1 {
            1
        } else {
            -1
        }
    }
}

pub fn read_labeled(path: &Path) -> Result<Vec<LabeledText>> {
    crate::corpus::read_jsonl(path, |r: &LabeledText| {
        if r.label > 1 {
            Err(format!("label {} is not 0 or 1", r.label))
        } else {
            Ok(())
        }
    })
}

pub fn write_labeled(path: &Path, rows: &[LabeledText]) -> Result<()> {
    crate::binio::save_with(path, |w| {
        for r in rows {
            serde_json::to_writer(&mut *w, r).map_err(std::io::Error::other)?;
            writeln!(w)?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bow_counts() {
        let doc = TokenizedDocument { doc_id: 0, tokens: vec![0, 1, 0] };
        let b = bow_features(&doc, 2).unwrap();
        assert_eq!((b.count(0), b.count(1), b.total()), (2, 1, 3));
        let perm = TokenizedDocument { doc_id: 1, tokens: vec![1, 0, 0] };
        assert_eq!(bow_features(&perm, 2).unwrap(), b);
        assert!(bow_features(&doc, 1).is_err());
    }

    #[test]
    fn bow_concatenation_is_addition() {
        let a = [0, 3, 3, 1];
        let b = [3, 2];
        let joined: Vec<TokenId> = a.iter().chain(&b).copied().collect();
        assert_eq!(BowVector::from_tokens(&joined), BowVector::from_tokens(&a).merged(&BowVector::from_tokens(&b)));
    }

    fn separable() -> (Vec<Vec<f64>>, Vec<i8>) {
        let xs: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.37;
                let side = if i % 2 == 0 { 1.0 } else { -1.0 };
                vec![t.cos() + 2.0 * side, t.sin() - side]
            })
            .collect();
        let ys = (0..40).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        (xs, ys)
    }

    #[test]
    fn separable_fixture_is_learned() {
        let (xs, ys) = separable();
        let clf = train_linear(&xs, &ys, 2, &LinearConfig::default()).unwrap();
        assert_eq!(clf.accuracy(&xs, &ys), 1.0);
        assert_eq!(clf, train_linear(&xs, &ys, 2, &LinearConfig::default()).unwrap());
    }

    #[test]
    fn single_class_and_bad_labels_rejected() {
        let xs = vec![vec![1.0], vec![2.0]];
        assert!(train_linear(&xs, &[1, 1], 1, &LinearConfig::default()).is_err());
        assert!(train_linear(&xs, &[1, 0], 1, &LinearConfig::default()).is_err());
        assert!(train_linear(&xs, &[1], 1, &LinearConfig::default()).is_err());
    }

    #[test]
    fn hinge_gradient_matches_finite_differences() {
        let (xs, ys) = separable();
        let clf = LinearClassifier { weights: vec![0.3, -0.2], bias: 0.05, objective: Objective::HingeLoss };
        let margins: Vec<f64> = xs.iter().zip(&ys).map(|(x, &y)| y as f64 * clf.decision(x)).collect();
        assert!(margins.iter().all(|m| (m - 1.0).abs() > 1e-3), "fixture sits on the hinge");
        let reg = 0.01;
        let (gw, gb) = hinge_gradient(&clf, &xs, &ys, reg);
        let h = 1e-5;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
        for k in 0..2 {
            let mut up = clf.clone();
            up.weights[k] += h;
            let mut down = clf.clone();
            down.weights[k] -= h;
            let num = (hinge_objective(&up, &xs, &ys, reg) - hinge_objective(&down, &xs, &ys, reg)) / (2.0 * h);
            assert!(rel(gw[k], num) < 1e-4, "w{k}: {} vs {num}", gw[k]);
        }
        let mut up = clf.clone();
        up.bias += h;
        let mut down = clf.clone();
        down.bias -= h;
        let num = (hinge_objective(&up, &xs, &ys, reg) - hinge_objective(&down, &xs, &ys, reg)) / (2.0 * h);
        assert!(rel(gb, num) < 1e-4);
    }

    #[test]
    fn sparse_and_dense_training_agree() {
        let docs = [vec![0, 0, 1], vec![1, 1, 2], vec![0, 2], vec![1, 2, 2], vec![0, 0, 0], vec![2, 1]];
        let ys = [1, -1, 1, -1, 1, -1];
        let sparse: Vec<BowVector> = docs.iter().map(|d| BowVector::from_tokens(d)).collect();
        let dense: Vec<Vec<f64>> = sparse.iter().map(|b| (0..3).map(|k| b.count(k) as f64).collect()).collect();
        let c = LinearConfig::default();
        let a = train_linear(&sparse, &ys, 3, &c).unwrap();
        let b = train_linear(&dense, &ys, 3, &c).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_on_separable_fixture() {
        let (xs, ys) = separable();
        let pts = learning_curve(&xs, &ys, 2, FeatureKind::Doc2vec, &[0.5], &[1, 2], &LinearConfig::default()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].mean_accuracy, 1.0);
        let again = learning_curve(&xs, &ys, 2, FeatureKind::Doc2vec, &[0.5], &[1, 2], &LinearConfig::default()).unwrap();
        assert_eq!(pts, again);
        assert!(learning_curve(&xs, &ys, 2, FeatureKind::Bow, &[1.0], &[1], &LinearConfig::default()).is_err());
        assert!(learning_curve(&xs[..5], &ys[..5], 2, FeatureKind::Bow, &[0.5], &[1], &LinearConfig::default()).is_err());
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let ys: Vec<i8> = (0..30).map(|i| if i < 10 { 1 } else { -1 }).collect();
        let (train, test) = stratified_split(&ys, 0.2, 3);
        assert_eq!(train.len() + test.len(), 30);
        assert_eq!(train.iter().filter(|&&i| ys[i] == 1).count(), 2);
        assert_eq!(train.iter().filter(|&&i| ys[i] == -1).count(), 4);
        assert!(train.iter().all(|i| !test.contains(i)));
    }

    #[test]
    fn standardized_columns() {
        let mut rows = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        standardize_columns(&mut rows);
        let mean: f64 = rows.iter().map(|r| r[0]).sum::<f64>() / 3.0;
        let var: f64 = rows.iter().map(|r| r[0] * r[0]).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        assert!(rows.iter().all(|r| r[1] == 0.0));
    }

    #[test]
    fn curve_csv() {
        let p = CurvePoint { ratio: 0.2, feature_kind: FeatureKind::Bow, mean_accuracy: 0.5, std: 0.1, accuracies: vec![] };
        let mut out = Vec::new();
        write_curve_csv(&mut out, &[p]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "ratio,feature_kind,mean_accuracy,std\n0.2,bow,0.5,0.1\n");
    }
}

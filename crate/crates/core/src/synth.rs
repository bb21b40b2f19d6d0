//! Synthetic corpora and fixtures with known structure.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rand_distr::StandardNormal;

use crate::corpus::{QaPair, QaRecord, TokenizedDocument, Vocabulary};
use crate::evaluation::LabeledText;
use crate::linalg::Matrix;
use crate::training::FeatureTable;
use crate::rng::{seeded, streams};

/// Tokens of cluster `c` (0 or 1): `alphaa..alphat` and `betaa..betat`.
/// Letters only, so none of them encodes to the numeric symbol.
pub fn cluster_tokens(cluster: usize) -> Vec<String> {
    let stem = if cluster == 0 { "alpha" } else { "beta" };
    (b'a'..=b't').map(|c| format!("{stem}{}", c as char)).collect()
}

/// Documents alternate between two disjoint 20-token topics; every token in
/// a document is drawn from its topic. Returns the documents and their
/// cluster labels.
pub fn two_cluster_corpus(n_docs: usize, doc_len: usize, seed: u64) -> (Vec<Vec<String>>, Vec<usize>) {
    let mut rng = seeded(seed, streams::SYNTH);
    let topics = [cluster_tokens(0), cluster_tokens(1)];
    let labels: Vec<usize> = (0..n_docs).map(|i| i % 2).collect();
    let docs = labels
        .iter()
        .map(|&c| (0..doc_len).map(|_| topics[c].choose(&mut rng).unwrap().clone()).collect())
        .collect();
    (docs, labels)
}

/// [`two_cluster_corpus`] encoded against its own vocabulary (min count 1).
pub fn two_cluster_encoded(
    n_docs: usize,
    doc_len: usize,
    seed: u64,
) -> (Vec<TokenizedDocument>, Vec<usize>, Vocabulary) {
    let (docs, labels) = two_cluster_corpus(n_docs, doc_len, seed);
    let vocab = Vocabulary::build(&docs, 1).expect("non-empty synthetic corpus");
    let encoded = docs.iter().enumerate().map(|(i, d)| vocab.encode(i as u32, d)).collect();
    (encoded, labels, vocab)
}

/// Mean cosine similarity over within-group and across-group pairs of rows.
pub fn cluster_cosines<'a>(rows: impl Fn(usize) -> &'a [f64], labels: &[usize]) -> (f64, f64) {
    let (mut within, mut nw, mut across, mut na) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            let c = crate::linalg::cosine(rows(i), rows(j));
            if labels[i] == labels[j] {
                within += c;
                nw += 1;
            } else {
                across += c;
                na += 1;
            }
        }
    }
    (within / nw.max(1) as f64, across / na.max(1) as f64)
}

/// `n` pairs over Gaussian question and answer vectors in `dim` dimensions,
/// labeled by the sign of a hidden linear function of `[f_q; f_a]`. Pairs
/// within `margin` of the boundary are redrawn. Pair `i` uses question and
/// answer document `i`.
pub fn planted_separable_pairs(n: usize, dim: usize, margin: f64, seed: u64) -> (Vec<QaPair>, FeatureTable) {
    let mut rng = seeded(seed, streams::SYNTH);
    let gauss = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..2 * dim).map(|_| rng.sample(StandardNormal)).collect() };
    let w = gauss(&mut rng);
    let scale = 1.0 / (2.0 * dim as f64).sqrt();
    let mut questions = Matrix::zeros(n, dim);
    let mut answers = Matrix::zeros(n, dim);
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let x = gauss(&mut rng);
        let s = crate::linalg::dot(&x, &w) * scale;
        if s.abs() < margin {
            continue;
        }
        let i = pairs.len();
        questions.row_mut(i).copy_from_slice(&x[..dim]);
        answers.row_mut(i).copy_from_slice(&x[dim..]);
        pairs.push(QaPair { question_doc: i as u32, answer_doc: i as u32, label: (s > 0.0) as u8 });
    }
    let features = FeatureTable::new(questions, answers).expect("matching dimensions");
    (pairs, features)
}

const AUXILIARIES: [&str; 5] = ["will", "can", "do", "should", "would"];
const PRONOUNS: [&str; 4] = ["you", "we", "they", "i"];
const VERBS: [&str; 6] = ["pay", "cancel", "change", "update", "check", "upgrade"];
const DETERMINERS: [&str; 4] = ["the", "my", "your", "our"];
const NOUNS: [&str; 6] = ["bill", "plan", "account", "phone", "service", "order"];
const ADVERBS: [&str; 5] = ["today", "now", "online", "soon", "again"];

/// Question vs. statement sentences that differ only in word order:
/// label 1 opens with "<auxiliary> <pronoun>" ("will you pay the bill
/// today"), label 0 with "<pronoun> <auxiliary>" ("you will pay the bill
/// today"). Both classes draw every word from the same distributions, so
/// unigram histograms carry no class information. Each sentence has
/// `clauses` verb phrases after the opening; labels alternate.
pub fn paraphrase_classification(n: usize, clauses: usize, seed: u64) -> Vec<LabeledText> {
    let mut rng = seeded(seed, streams::SYNTH);
    (0..n)
        .map(|i| {
            let label = (i % 2 == 0) as u8;
            let aux = *AUXILIARIES.choose(&mut rng).unwrap();
            let pron = *PRONOUNS.choose(&mut rng).unwrap();
            let mut words = if label == 1 { vec![aux, pron] } else { vec![pron, aux] };
            for _ in 0..clauses {
                for list in [&VERBS[..], &DETERMINERS, &NOUNS, &ADVERBS] {
                    words.push(list.choose(&mut rng).unwrap());
                }
            }
            LabeledText { text: words.join(" "), label }
        })
        .collect()
}

const TOPICS: [[&str; 12]; 2] = [
    ["bill", "payment", "charge", "refund", "invoice", "fee", "credit", "card", "balance", "statement", "discount", "price"],
    ["signal", "outage", "router", "internet", "speed", "wifi", "modem", "coverage", "tower", "connection", "cable", "network"],
];
const QUESTION_STEMS: [&str; 5] = ["why is my", "how do i fix my", "what happened to my", "can you check my", "who handles my"];
const ANSWER_STEMS: [&str; 5] = ["we have updated your", "please restart the", "our team reviewed the", "you can manage the", "a technician will inspect the"];

/// Two-topic QA fixture. Question `i` belongs to topic `i % 2`; its planted
/// answer (answer `i`) repeats the question's key words. Every pool holds the
/// planted answer plus `pool_size − 1` distractors from the other topic, at a
/// seeded position. Answers beyond the first `n_questions` only ever appear
/// as distractors.
pub fn planted_qa(n_questions: usize, n_answers: usize, pool_size: usize, seed: u64) -> Vec<QaRecord> {
    assert!(n_answers >= n_questions, "every question needs its own planted answer");
    assert!(pool_size >= 1 && pool_size - 1 <= n_answers / 2, "not enough distractors");
    let mut rng = seeded(seed, streams::SYNTH);
    let keywords = |topic: usize, rng: &mut ChaCha8Rng| -> Vec<&'static str> {
        TOPICS[topic].choose_multiple(rng, 3).copied().collect()
    };
    let mut seen = HashSet::new();
    let mut questions = Vec::with_capacity(n_questions);
    let mut answers = Vec::with_capacity(n_answers);
    for j in 0..n_answers {
        let topic = j % 2;
        loop {
            let keys = keywords(topic, &mut rng);
            let answer = format!("{} {} {} and {}", ANSWER_STEMS.choose(&mut rng).unwrap(), keys[0], keys[1], keys[2]);
            if !seen.insert(answer.clone()) {
                continue;
            }
            if j < n_questions {
                let stem = QUESTION_STEMS.choose(&mut rng).unwrap();
                questions.push(format!("{stem} {} {} {}", keys[0], keys[1], keys[2]));
            }
            answers.push(answer);
            break;
        }
    }
    (0..n_questions)
        .map(|i| {
            let others: Vec<usize> = (0..n_answers).filter(|j| j % 2 != i % 2).collect();
            let mut candidates: Vec<usize> = others.choose_multiple(&mut rng, pool_size - 1).copied().collect();
            let pos = rng.random_range(0..pool_size);
            candidates.insert(pos, i);
            QaRecord {
                question: questions[i].clone(),
                candidates: candidates.iter().map(|&j| answers[j].clone()).collect(),
                correct: vec![pos],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, QaDataset};

    #[test]
    fn two_cluster_docs_stay_in_topic() {
        let (docs, labels) = two_cluster_corpus(6, 10, 1);
        for (d, &c) in docs.iter().zip(&labels) {
            let topic = cluster_tokens(c);
            assert!(d.iter().all(|t| topic.contains(t)));
        }
        assert_eq!(labels, [0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn cluster_tokens_are_regular_words() {
        let (docs, _, vocab) = two_cluster_encoded(8, 10, 1);
        assert!(vocab.len() > 2 && vocab.len() <= 42);
        assert!(docs.iter().flat_map(|d| &d.tokens).all(|&t| !vocab.is_special(t)));
    }

    #[test]
    fn planted_pools_have_one_gold_each() {
        let recs = planted_qa(50, 100, 10, 3);
        let data = QaDataset::from_records(&recs).unwrap();
        assert_eq!((data.questions.len(), data.answers.len()), (50, 100));
        for p in &data.pools {
            assert_eq!(p.candidates.len(), 10);
            assert_eq!(p.correct.len(), 1);
        }
        assert_eq!(recs, planted_qa(50, 100, 10, 3));
    }

    #[test]
    fn separable_pairs_are_balanced_enough() {
        let (pairs, f) = planted_separable_pairs(200, 8, 0.2, 1);
        let pos = pairs.iter().filter(|p| p.label == 1).count();
        assert!((50..150).contains(&pos), "{pos}");
        assert_eq!(f.dim(), 8);
    }

    #[test]
    fn paraphrase_classes_share_histograms() {
        let rows = paraphrase_classification(400, 1, 2);
        let mut counts = [std::collections::BTreeMap::new(), std::collections::BTreeMap::new()];
        for r in &rows {
            for t in tokenize(&r.text) {
                *counts[r.label as usize].entry(t).or_insert(0usize) += 1;
            }
        }
        assert_eq!(counts[0].keys().collect::<Vec<_>>(), counts[1].keys().collect::<Vec<_>>());
        let q = rows.iter().find(|r| r.label == 1).unwrap();
        assert!(AUXILIARIES.contains(&q.text.split(' ').next().unwrap()));
    }
}

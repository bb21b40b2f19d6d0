//! Tokenization, vocabularies, and QA dataset ingestion.
//!
//! Questions and answers live in two separate corpora, each with its own
//! [`Vocabulary`]. Document ids are dense indices into their corpus.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, streams};

pub type DocId = u32;
pub type TokenId = u32;

pub const LF_SYMBOL: &str = "<LF>";
pub const NUM_SYMBOL: &str = "<NUM>";

/// Characters stripped from token boundaries. Currency, percent and other
/// symbols are kept so that amounts like `$30.50` survive as one token.
fn is_boundary_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | ';' | ':' | '!' | '?' | '"' | '\'' | '`' | '(' | ')' | '[' | ']' | '{' | '}'
            | '<' | '>' | '¿' | '¡' | '“' | '”' | '‘' | '’' | '«' | '»' | '…' | '-' | '–' | '—'
    )
}

/// Lowercase, split on whitespace and strip punctuation from both ends of
/// every token. Tokens that are pure punctuation disappear.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(is_boundary_punct).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// A token is numeric when it contains at least one decimal digit.
pub fn is_numeric_token(token: &str) -> bool {
    token.chars().any(|c| c.is_ascii_digit())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, TokenId>,
    id_to_token: Vec<String>,
    frequency: Vec<u64>,
    min_count: u64,
    lf_id: TokenId,
    num_id: TokenId,
}

impl Vocabulary {
    /// Count tokens over `docs` and keep every non-numeric token seen at
    /// least `min_count` times. Regular ids are assigned by descending
    /// frequency with lexicographic tie-breaking; the low-frequency and
    /// numeric symbols take the two highest ids. Their frequencies record
    /// how many corpus tokens were mapped onto them.
    pub fn build<S: AsRef<str>>(docs: &[Vec<S>], min_count: u64) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Empty("no documents to build a vocabulary from"));
        }
        if min_count == 0 {
            return Err(Error::invalid("min_count must be at least 1"));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        let mut numeric = 0u64;
        for doc in docs {
            for tok in doc {
                let tok = tok.as_ref();
                if is_numeric_token(tok) {
                    numeric += 1;
                } else {
                    *counts.entry(tok).or_default() += 1;
                }
            }
        }
        let mut low_frequency = 0u64;
        let mut kept: Vec<(&str, u64)> = Vec::new();
        for (tok, n) in counts {
            if n >= min_count && tok != LF_SYMBOL && tok != NUM_SYMBOL {
                kept.push((tok, n));
            } else {
                low_frequency += n;
            }
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut id_to_token: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
        let mut frequency: Vec<u64> = kept.iter().map(|(_, n)| *n).collect();
        let lf_id = id_to_token.len() as TokenId;
        id_to_token.push(LF_SYMBOL.to_string());
        frequency.push(low_frequency);
        let num_id = lf_id + 1;
        id_to_token.push(NUM_SYMBOL.to_string());
        frequency.push(numeric);

        Ok(Self::from_parts(id_to_token, frequency, min_count, lf_id, num_id))
    }

    fn from_parts(
        id_to_token: Vec<String>,
        frequency: Vec<u64>,
        min_count: u64,
        lf_id: TokenId,
        num_id: TokenId,
    ) -> Self {
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .filter(|&(i, _)| i as TokenId != lf_id && i as TokenId != num_id)
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        Self { token_to_id, id_to_token, frequency, min_count, lf_id, num_id }
    }

    /// Number of ids, special symbols included.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn lf_id(&self) -> TokenId {
        self.lf_id
    }

    pub fn num_id(&self) -> TokenId {
        self.num_id
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Id of a retained regular token.
    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn frequency(&self, id: TokenId) -> u64 {
        self.frequency[id as usize]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequency
    }

    pub fn is_special(&self, id: TokenId) -> bool {
        id == self.lf_id || id == self.num_id
    }

    /// Map raw tokens onto ids: digits go to the numeric symbol, unknown
    /// tokens to the low-frequency symbol.
    pub fn encode_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        tokens
            .iter()
            .map(|t| {
                let t = t.as_ref();
                if is_numeric_token(t) {
                    self.num_id
                } else {
                    self.id(t).unwrap_or(self.lf_id)
                }
            })
            .collect()
    }

    pub fn encode<S: AsRef<str>>(&self, doc_id: DocId, tokens: &[S]) -> TokenizedDocument {
        TokenizedDocument { doc_id, tokens: self.encode_tokens(tokens) }
    }

    /// Writes `token<TAB>id<TAB>frequency` lines in id order.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for (id, (tok, freq)) in self.id_to_token.iter().zip(&self.frequency).enumerate() {
            writeln!(w, "{tok}\t{id}\t{freq}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    /// Parse a vocabulary file. The threshold is not stored in the file, so
    /// the loaded `min_count` is the smallest regular-token frequency (or 1).
    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut rows: Vec<(String, usize, u64)> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Format(format!("vocabulary line {}: {e}", lineno + 1)))?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(tok), Some(id), Some(freq), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::Format(format!("vocabulary line {}: expected 3 fields", lineno + 1)));
            };
            let id = id
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("vocabulary line {}: bad id: {e}", lineno + 1)))?;
            let freq = freq
                .parse::<u64>()
                .map_err(|e| Error::Format(format!("vocabulary line {}: bad frequency: {e}", lineno + 1)))?;
            rows.push((tok.to_string(), id, freq));
        }
        rows.sort_by_key(|r| r.1);
        if rows.iter().enumerate().any(|(i, r)| r.1 != i) {
            return Err(Error::Format("vocabulary ids are not dense 0..V-1".into()));
        }
        let pos = |sym: &str| {
            rows.iter()
                .position(|r| r.0 == sym)
                .map(|p| p as TokenId)
                .ok_or_else(|| Error::Format(format!("vocabulary lacks the {sym} symbol")))
        };
        let lf_id = pos(LF_SYMBOL)?;
        let num_id = pos(NUM_SYMBOL)?;
        let min_count = rows
            .iter()
            .enumerate()
            .filter(|&(i, _)| i as TokenId != lf_id && i as TokenId != num_id)
            .map(|(_, r)| r.2)
            .min()
            .unwrap_or(1)
            .max(1);
        let (tokens, freqs) = rows.into_iter().map(|(t, _, f)| (t, f)).unzip();
        let vocab = Self::from_parts(tokens, freqs, min_count, lf_id, num_id);
        if vocab.token_to_id.len() + 2 != vocab.len() {
            return Err(Error::Format("vocabulary contains duplicate tokens".into()));
        }
        Ok(vocab)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}

pub fn build_vocabulary<S: AsRef<str>>(docs: &[Vec<S>], min_count: u64) -> Result<Vocabulary> {
    Vocabulary::build(docs, min_count)
}

pub fn encode<S: AsRef<str>>(doc_id: DocId, doc: &[S], vocab: &Vocabulary) -> TokenizedDocument {
    vocab.encode(doc_id, doc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub doc_id: DocId,
    pub tokens: Vec<TokenId>,
}

impl TokenizedDocument {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Tokenize and encode every line of a corpus; doc ids are line indices.
pub fn encode_corpus<S: AsRef<str>>(texts: &[S], vocab: &Vocabulary) -> Vec<TokenizedDocument> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| vocab.encode(i as DocId, &tokenize(t.as_ref())))
        .collect()
}

/// One document per line. Blank lines are kept as empty documents so that
/// doc ids stay equal to line numbers.
pub fn read_corpus(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

pub fn write_corpus<S: AsRef<str>>(path: &Path, docs: &[S]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for d in docs {
        writeln!(w, "{}", d.as_ref()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QaPair {
    pub question_doc: DocId,
    pub answer_doc: DocId,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub question_doc: DocId,
    pub candidates: Vec<DocId>,
    pub correct: Vec<usize>,
}

impl CandidatePool {
    pub fn new(question_doc: DocId, candidates: Vec<DocId>, mut correct: Vec<usize>) -> Result<Self> {
        correct.sort_unstable();
        correct.dedup();
        if let Some(&bad) = correct.iter().find(|&&c| c >= candidates.len()) {
            return Err(Error::invalid(format!(
                "correct index {bad} out of range for a pool of {} candidates",
                candidates.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = candidates.iter().find(|c| !seen.insert(**c)) {
            return Err(Error::invalid(format!("answer document {dup} appears twice in one pool")));
        }
        Ok(Self { question_doc, candidates, correct })
    }

    pub fn is_correct(&self, index: usize) -> bool {
        self.correct.binary_search(&index).is_ok()
    }

    pub fn has_gold(&self) -> bool {
        !self.correct.is_empty()
    }
}

/// Draw `n_pairs` labeled pairs. Positives are drawn uniformly with
/// replacement from all (question, correct answer) combinations, negatives
/// likewise from all (question, incorrect candidate) combinations; the
/// result is shuffled.
pub fn sample_pairs(
    pools: &[CandidatePool],
    n_pairs: usize,
    positive_fraction: f64,
    seed: u64,
) -> Result<Vec<QaPair>> {
    if !(0.0..=1.0).contains(&positive_fraction) {
        return Err(Error::invalid("positive_fraction must lie in [0, 1]"));
    }
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for pool in pools {
        for (i, &a) in pool.candidates.iter().enumerate() {
            let pair = (pool.question_doc, a);
            if pool.is_correct(i) {
                positives.push(pair);
            } else {
                negatives.push(pair);
            }
        }
    }
    let n_pos = (n_pairs as f64 * positive_fraction).round() as usize;
    let n_neg = n_pairs - n_pos;
    if n_pos > 0 && positives.is_empty() {
        return Err(Error::invalid("positive pairs requested but no pool has a correct answer"));
    }
    if n_neg > 0 && negatives.is_empty() {
        return Err(Error::invalid("negative pairs requested but no pool has an incorrect candidate"));
    }

    let mut rng = seeded(seed, streams::PAIR_SAMPLING);
    let mut out = Vec::with_capacity(n_pairs);
    for (source, n, label) in [(&positives, n_pos, 1u8), (&negatives, n_neg, 0u8)] {
        for _ in 0..n {
            let (q, a) = source[rng.random_range(0..source.len())];
            out.push(QaPair { question_doc: q, answer_doc: a, label });
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

pub fn write_pairs(path: &Path, pairs: &[QaPair]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in pairs {
        let line = serde_json::to_string(p).expect("pair serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pairs(path: &Path) -> Result<Vec<QaPair>> {
    read_jsonl(path, |p: &QaPair| {
        if p.label > 1 {
            Err(format!("label must be 0 or 1, got {}", p.label))
        } else {
            Ok(())
        }
    })
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(
    path: &Path,
    check: impl Fn(&T) -> std::result::Result<(), String>,
) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item: T = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))?;
        check(&item).map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

/// One line of a QA dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaRecord {
    pub question: String,
    pub candidates: Vec<String>,
    #[serde(default)]
    pub correct: Vec<usize>,
}

/// A QA dataset split into its question corpus, its answer corpus and the
/// candidate pools that connect them. Answer texts are deduplicated, so an
/// answer shared by several pools has one doc id.
#[derive(Debug, Clone, PartialEq)]
pub struct QaDataset {
    pub questions: Vec<String>,
    pub answers: Vec<String>,
    pub pools: Vec<CandidatePool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Question,
    Answer,
}

impl QaDataset {
    pub fn from_records(records: &[QaRecord]) -> Result<Self> {
        let mut questions = Vec::with_capacity(records.len());
        let mut answers: Vec<String> = Vec::new();
        let mut answer_ids: HashMap<&str, DocId> = HashMap::new();
        let mut pools = Vec::with_capacity(records.len());
        for (qi, rec) in records.iter().enumerate() {
            questions.push(rec.question.clone());
            let candidates = rec
                .candidates
                .iter()
                .map(|text| {
                    *answer_ids.entry(text.as_str()).or_insert_with(|| {
                        answers.push(text.clone());
                        (answers.len() - 1) as DocId
                    })
                })
                .collect();
            let pool = CandidatePool::new(qi as DocId, candidates, rec.correct.clone())
                .map_err(|e| Error::Format(format!("record {}: {e}", qi + 1)))?;
            pools.push(pool);
        }
        Ok(Self { questions, answers, pools })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let records = read_jsonl(path, |_: &QaRecord| Ok(()))?;
        if records.is_empty() {
            return Err(Error::Format(format!("{}: no QA records", path.display())));
        }
        Self::from_records(&records)
    }

    pub fn corpus(&self, side: Side) -> &[String] {
        match side {
            Side::Question => &self.questions,
            Side::Answer => &self.answers,
        }
    }

    pub fn to_records(&self) -> Vec<QaRecord> {
        self.pools
            .iter()
            .map(|p| QaRecord {
                question: self.questions[p.question_doc as usize].clone(),
                candidates: p.candidates.iter().map(|&a| self.answers[a as usize].clone()).collect(),
                correct: p.correct.clone(),
            })
            .collect()
    }
}

pub fn write_qa_records(path: &Path, records: &[QaRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("record serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("When was Mozart born?"), toks(&["when", "was", "mozart", "born"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("I paid $30.50 today"), toks(&["i", "paid", "$30.50", "today"]));
        assert_eq!(tokenize("  \"Hello,\"  world...  ?! "), toks(&["hello", "world"]));
    }

    #[test]
    fn threshold_excludes_rare_tokens() {
        let v = Vocabulary::build(&[toks(&["a", "a", "b"])], 2).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("b"), None);
        assert_eq!((v.lf_id(), v.num_id()), (1, 2));
        assert_eq!(v.frequency(v.lf_id()), 1);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = Vocabulary::build(&[toks(&["b", "a"]), toks(&["a", "b"])], 1).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("b"), Some(1));
    }

    #[test]
    fn numeric_tokens_never_become_regular() {
        let v = Vocabulary::build(&[toks(&["42", "42", "42", "x"])], 1).unwrap();
        assert_eq!(v.id("42"), None);
        assert_eq!(v.frequency(v.num_id()), 3);
        assert_eq!(v.encode_tokens(&["$30.50"]), vec![v.num_id()]);
    }

    #[test]
    fn encode_maps_specials() {
        let v = Vocabulary::build(&[toks(&["a", "b"])], 1).unwrap();
        assert_eq!(v.encode_tokens(&["a", "b"]), vec![0, 1]);
        assert_eq!(v.encode_tokens(&["zzz-rare-word"]), vec![v.lf_id()]);
    }

    #[test]
    fn build_rejects_empty_input() {
        let empty: Vec<Vec<String>> = vec![];
        assert!(Vocabulary::build(&empty, 1).is_err());
        assert!(Vocabulary::build(&[toks(&["a"])], 0).is_err());
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let v = Vocabulary::build(&[toks(&["x", "y", "y", "7"])], 1).unwrap();
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "y\t0\t2\nx\t1\t1\n<LF>\t2\t0\n<NUM>\t3\t1\n");
        let back = Vocabulary::read_from(&buf[..]).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn vocabulary_file_errors() {
        assert!(Vocabulary::read_from(&b"a\t0\n"[..]).is_err());
        assert!(Vocabulary::read_from(&b"a\t0\t1\n"[..]).is_err());
        assert!(Vocabulary::read_from(&b"a\t1\t1\n<LF>\t0\t0\n<NUM>\t3\t0\n"[..]).is_err());
    }

    fn one_pool() -> Vec<CandidatePool> {
        vec![CandidatePool::new(0, vec![10, 11], vec![0]).unwrap()]
    }

    #[test]
    fn sample_pairs_counts_labels() {
        let pairs = sample_pairs(&one_pool(), 4, 0.5, 7).unwrap();
        assert_eq!(pairs.len(), 4);
        assert_eq!(pairs.iter().filter(|p| p.label == 1).count(), 2);
        assert!(pairs.iter().all(|p| (p.label == 1) == (p.answer_doc == 10)));
        assert_eq!(pairs, sample_pairs(&one_pool(), 4, 0.5, 7).unwrap());
    }

    #[test]
    fn sample_pairs_negatives_are_uniform() {
        let pools = vec![CandidatePool::new(0, vec![1, 2, 3], vec![0]).unwrap()];
        let pairs = sample_pairs(&pools, 10_000, 0.0, 3).unwrap();
        let twos = pairs.iter().filter(|p| p.answer_doc == 2).count();
        // Binomial(10000, 0.5) has sd 50; 300 is six standard deviations.
        assert!((4_700..=5_300).contains(&twos), "count {twos}");
    }

    #[test]
    fn sample_pairs_needs_positives() {
        let pools = vec![CandidatePool::new(0, vec![1, 2], vec![]).unwrap()];
        assert!(sample_pairs(&pools, 4, 0.5, 0).is_err());
        assert_eq!(sample_pairs(&pools, 4, 0.0, 0).unwrap().len(), 4);
    }

    #[test]
    fn pool_validation() {
        assert!(CandidatePool::new(0, vec![1, 2], vec![2]).is_err());
        assert!(CandidatePool::new(0, vec![1, 1], vec![]).is_err());
    }

    #[test]
    fn dataset_dedupes_answers() {
        let recs = vec![
            QaRecord { question: "q1".into(), candidates: vec!["a".into(), "b".into()], correct: vec![1] },
            QaRecord { question: "q2".into(), candidates: vec!["b".into(), "c".into()], correct: vec![] },
        ];
        let ds = QaDataset::from_records(&recs).unwrap();
        assert_eq!(ds.answers, vec!["a", "b", "c"]);
        assert_eq!(ds.pools[1].candidates, vec![1, 2]);
        assert_eq!(ds.to_records(), recs);
    }

    proptest! {
        #[test]
        fn encode_ids_in_range(texts in proptest::collection::vec("[a-c0-9 ?.]{0,20}", 1..8), probe in "[a-d1 ]{0,30}") {
            let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
            let v = Vocabulary::build(&docs, 2).unwrap();
            for id in v.encode_tokens(&tokenize(&probe)) {
                prop_assert!((id as usize) < v.len());
            }
            for id in 0..v.len() as TokenId {
                if !v.is_special(id) {
                    let tok = v.token(id).unwrap();
                    prop_assert_eq!(v.id(tok), Some(id));
                    prop_assert!(v.frequency(id) >= 2);
                }
            }
        }

        #[test]
        fn tokens_have_no_whitespace(text in "\\PC{0,40}") {
            for t in tokenize(&text) {
                prop_assert!(!t.is_empty() && !t.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn pure_fractions_give_pure_labels(n in 1usize..50, seed in any::<u64>()) {
            let pools = vec![CandidatePool::new(0, vec![1, 2, 3], vec![1]).unwrap()];
            prop_assert!(sample_pairs(&pools, n, 1.0, seed).unwrap().iter().all(|p| p.label == 1));
            prop_assert!(sample_pairs(&pools, n, 0.0, seed).unwrap().iter().all(|p| p.label == 0));
        }
    }
}

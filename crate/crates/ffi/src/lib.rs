//! C ABI over `qasim`.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_load`/`*_open` function and released by the matching `*_free`. Fallible
//! calls return a [`QasimStatus`]; on failure the message is available from
//! [`qasim_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use qasim::corpus::{QaDataset, Vocabulary};
use qasim::embedding::{DocEmbeddingModel, InferConfig};
use qasim::engine::{AnswerEngine, SideModel};
use qasim::retrieval::{route, Outcome};
use qasim::simnet::SimilarityNetwork;
use qasim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QasimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    OutOfVocabulary = 5,
    NonFinite = 6,
    Empty = 7,
    Utf8 = 8,
    Panic = 9,
}

/// Outcome of routing one question.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QasimDecision {
    /// 1 when the best answer clears the threshold, 0 when escalated.
    pub answered: i32,
    /// Index of the best-scoring answer, reported in both cases.
    pub best_index: usize,
    /// Score of the best answer, in (0, 1).
    pub confidence: f64,
}

pub struct QasimVocab(Vocabulary);
pub struct QasimDocModel(DocEmbeddingModel);
pub struct QasimSimNet(SimilarityNetwork);
pub struct QasimEngine {
    engine: AnswerEngine,
    answers: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> QasimStatus {
    match e {
        Error::Empty(_) => QasimStatus::Empty,
        Error::InvalidArgument(_) | Error::MissingFeatures { .. } => QasimStatus::InvalidArgument,
        Error::OutOfVocabulary(_) => QasimStatus::OutOfVocabulary,
        Error::NonFinite(_) => QasimStatus::NonFinite,
        Error::Format(_) => QasimStatus::Format,
        Error::Io { .. } => QasimStatus::Io,
    }
}

struct Failure(QasimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QasimStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QasimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QasimStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QasimStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(QasimStatus::Utf8, format!("{what} is not valid UTF-8")))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    str_arg(p, what).map(PathBuf::from)
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qasim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qasim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Route a score: answer when `score >= threshold`. `threshold` must lie in (0, 1].
///
/// # Safety
/// `out` must be null or point to writable memory for one `QasimDecision`.
#[no_mangle]
pub unsafe extern "C" fn qasim_route(score: f64, threshold: f64, out: *mut QasimDecision) -> QasimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let d = route(0, score, threshold)?;
        *out = QasimDecision { answered: (d.outcome == Outcome::Answer) as i32, best_index: 0, confidence: score };
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qasim_vocab_load(path: *const c_char, out: *mut *mut QasimVocab) -> QasimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let v = Vocabulary::load(&path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(QasimVocab(v)));
        Ok(())
    })
}

/// Number of ids, special symbols included; 0 for a null handle.
///
/// # Safety
/// `vocab` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qasim_vocab_len(vocab: *const QasimVocab) -> usize {
    vocab.as_ref().map_or(0, |v| v.0.len())
}

/// Id of `token`; unknown tokens report `QASIM_STATUS_OUT_OF_VOCABULARY`.
///
/// # Safety
/// `vocab` must be a live handle, `token` NUL-terminated, `out_id` writable.
#[no_mangle]
pub unsafe extern "C" fn qasim_vocab_id(vocab: *const QasimVocab, token: *const c_char, out_id: *mut u32) -> QasimStatus {
    guard(|| {
        let v = handle(vocab, "vocab")?;
        let token = str_arg(token, "token")?;
        let out = out_arg(out_id, "out_id")?;
        *out = v.0.id(token).ok_or_else(|| Error::OutOfVocabulary(token.to_string()))?;
        Ok(())
    })
}

/// # Safety
/// `vocab` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qasim_vocab_free(vocab: *mut QasimVocab) {
    if !vocab.is_null() {
        drop(Box::from_raw(vocab));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qasim_doc_model_load(path: *const c_char, out: *mut *mut QasimDocModel) -> QasimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = DocEmbeddingModel::load(&path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(QasimDocModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qasim_doc_model_dim(model: *const QasimDocModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim)
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qasim_doc_model_num_docs(model: *const QasimDocModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.num_docs())
}

/// Copy the trained vector of document `doc` into `out[0..len]`; `len`
/// must equal the model dimension.
///
/// # Safety
/// `model` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qasim_doc_model_vector(
    model: *const QasimDocModel,
    doc: usize,
    out: *mut f64,
    len: usize,
) -> QasimStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != m.dim || doc >= m.num_docs() {
            return Err(Error::InvalidArgument(format!(
                "document {doc} with buffer length {len}; the model has {} documents of dimension {}",
                m.num_docs(),
                m.dim
            ))
            .into());
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(m.doc_vector(doc));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qasim_doc_model_free(model: *mut QasimDocModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qasim_simnet_load(path: *const c_char, out: *mut *mut QasimSimNet) -> QasimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let n = SimilarityNetwork::load(&path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(QasimSimNet(n)));
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qasim_simnet_input_dim(net: *const QasimSimNet) -> usize {
    net.as_ref().map_or(0, |n| n.0.input_dim())
}

/// Match probability of a (question, answer) feature pair, each of length `dim`.
///
/// # Safety
/// `net` must be a live handle, `question` and `answer` readable for `dim`
/// doubles, `out_score` writable.
#[no_mangle]
pub unsafe extern "C" fn qasim_simnet_score(
    net: *const QasimSimNet,
    question: *const f64,
    answer: *const f64,
    dim: usize,
    out_score: *mut f64,
) -> QasimStatus {
    guard(|| {
        let n = &handle(net, "net")?.0;
        let q = slice_arg(question, dim, "question")?;
        let a = slice_arg(answer, dim, "answer")?;
        let out = out_arg(out_score, "out_score")?;
        *out = n.score(q, a)?;
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qasim_simnet_free(net: *mut QasimSimNet) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Open an answering engine from files written by the `qasim` tool: the
/// question doc2vec model and vocabulary, the answer doc2vec model, the QA
/// dataset whose answers form the pool, and the similarity network.
/// Inference uses the default settings.
///
/// # Safety
/// All paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qasim_engine_open(
    question_model: *const c_char,
    question_vocab: *const c_char,
    answer_model: *const c_char,
    qa_dataset: *const c_char,
    simnet: *const c_char,
    out: *mut *mut QasimEngine,
) -> QasimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let qm = DocEmbeddingModel::load(&path_arg(question_model, "question_model")?)?;
        let qv = Vocabulary::load(&path_arg(question_vocab, "question_vocab")?)?;
        let am = DocEmbeddingModel::load(&path_arg(answer_model, "answer_model")?)?;
        let data = QaDataset::load(&path_arg(qa_dataset, "qa_dataset")?)?;
        let net = SimilarityNetwork::load(&path_arg(simnet, "simnet")?)?;
        if qm.vocab_size() != qv.len() {
            return Err(Error::InvalidArgument(format!(
                "question vocabulary has {} entries, the question model expects {}",
                qv.len(),
                qm.vocab_size()
            ))
            .into());
        }
        if am.num_docs() != data.answers.len() {
            return Err(Error::InvalidArgument(format!(
                "answer model holds {} documents, the dataset has {} answers",
                am.num_docs(),
                data.answers.len()
            ))
            .into());
        }
        let answers = data
            .answers
            .iter()
            .map(|a| CString::new(a.replace('\0', " ")).expect("NUL bytes removed"))
            .collect();
        let engine = AnswerEngine::new(SideModel { vocab: qv, model: qm }, net, data.answers, am.doc, InferConfig::default())?;
        *out = Box::into_raw(Box::new(QasimEngine { engine, answers }));
        Ok(())
    })
}

/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qasim_engine_num_answers(engine: *const QasimEngine) -> usize {
    engine.as_ref().map_or(0, |e| e.answers.len())
}

/// Text of answer `index`, owned by the engine; null when out of range.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qasim_engine_answer_text(engine: *const QasimEngine, index: usize) -> *const c_char {
    engine
        .as_ref()
        .and_then(|e| e.answers.get(index))
        .map_or(std::ptr::null(), |s| s.as_ptr())
}

/// Embed `question`, pick the best answer and route it against `threshold`.
///
/// # Safety
/// `engine` must be a live handle, `question` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qasim_engine_ask(
    engine: *const QasimEngine,
    question: *const c_char,
    threshold: f64,
    out: *mut QasimDecision,
) -> QasimStatus {
    guard(|| {
        let e = handle(engine, "engine")?;
        let text = str_arg(question, "question")?;
        let out = out_arg(out, "out")?;
        let reply = e.engine.ask(text, threshold)?;
        *out = QasimDecision {
            answered: (reply.decision.outcome == Outcome::Answer) as i32,
            best_index: reply.best_index,
            confidence: reply.decision.confidence,
        };
        Ok(())
    })
}

/// # Safety
/// `engine` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qasim_engine_free(engine: *mut QasimEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

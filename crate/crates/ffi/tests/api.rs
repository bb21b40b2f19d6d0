use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use qasim::corpus::{write_qa_records, QaDataset};
use qasim::embedding::{Combine, EmbedTrainConfig};
use qasim::engine::train_sides;
use qasim::simnet::init_network;
use qasim::synth::planted_qa;
use qasim_ffi::*;

fn c(path: &Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(qasim_last_error()) }.to_string_lossy().into_owned()
}

struct Files {
    _dir: tempfile::TempDir,
    qm: CString,
    qv: CString,
    am: CString,
    qa: CString,
    net: CString,
    answers: Vec<String>,
}

fn write_models() -> Files {
    let dir = tempfile::tempdir().unwrap();
    let records = planted_qa(6, 12, 4, 3);
    let data = QaDataset::from_records(&records).unwrap();
    let config = EmbedTrainConfig { dim: 6, epochs: 3, ..Default::default() };
    let (q, a, _) = train_sides(&data, 1, &config, Combine::Average).unwrap();
    let p = |n: &str| dir.path().join(n);
    q.model.save(&p("q.d2v")).unwrap();
    q.vocab.save(&p("q.vocab")).unwrap();
    a.model.save(&p("a.d2v")).unwrap();
    write_qa_records(&p("qa.jsonl"), &records).unwrap();
    init_network(6, 0.3, 0.1, 1).unwrap().save(&p("net.sim")).unwrap();
    Files {
        qm: c(&p("q.d2v")),
        qv: c(&p("q.vocab")),
        am: c(&p("a.d2v")),
        qa: c(&p("qa.jsonl")),
        net: c(&p("net.sim")),
        answers: data.answers,
        _dir: dir,
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(qasim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn route_follows_threshold() {
    let mut d = QasimDecision { answered: -1, best_index: 9, confidence: 0.0 };
    unsafe {
        assert_eq!(qasim_route(0.7, 0.7, &mut d), QasimStatus::Ok);
        assert_eq!(d.answered, 1);
        assert_eq!(qasim_route(0.69, 0.7, &mut d), QasimStatus::Ok);
        assert_eq!(d.answered, 0);
        assert_eq!(qasim_route(0.5, 0.0, &mut d), QasimStatus::InvalidArgument);
        assert!(last_error().contains("threshold"));
        assert_eq!(qasim_route(0.5, 0.5, ptr::null_mut()), QasimStatus::NullPointer);
    }
}

#[test]
fn null_and_missing_inputs() {
    let mut v: *mut QasimVocab = ptr::null_mut();
    let missing = CString::new("/nonexistent/qasim.vocab").unwrap();
    unsafe {
        assert_eq!(qasim_vocab_load(ptr::null(), &mut v), QasimStatus::NullPointer);
        assert_eq!(qasim_vocab_load(missing.as_ptr(), &mut v), QasimStatus::Io);
        assert!(last_error().contains("/nonexistent/qasim.vocab"));
        assert!(v.is_null());
        assert_eq!(qasim_vocab_len(ptr::null()), 0);
        qasim_vocab_free(ptr::null_mut());
        qasim_engine_free(ptr::null_mut());
    }
}

#[test]
fn wrong_file_kind_is_format_error() {
    let f = write_models();
    let mut net: *mut QasimSimNet = ptr::null_mut();
    unsafe {
        assert_eq!(qasim_simnet_load(f.qm.as_ptr(), &mut net), QasimStatus::Format);
    }
    assert!(net.is_null());
}

#[test]
fn handles_expose_models() {
    let f = write_models();
    unsafe {
        let mut v = ptr::null_mut();
        assert_eq!(qasim_vocab_load(f.qv.as_ptr(), &mut v), QasimStatus::Ok);
        assert!(qasim_vocab_len(v) > 2);
        let mut id = u32::MAX;
        let word = CString::new("my").unwrap();
        assert_eq!(qasim_vocab_id(v, word.as_ptr(), &mut id), QasimStatus::Ok);
        assert!((id as usize) < qasim_vocab_len(v));
        let unknown = CString::new("zzzz").unwrap();
        assert_eq!(qasim_vocab_id(v, unknown.as_ptr(), &mut id), QasimStatus::OutOfVocabulary);
        qasim_vocab_free(v);

        let mut m = ptr::null_mut();
        assert_eq!(qasim_doc_model_load(f.am.as_ptr(), &mut m), QasimStatus::Ok);
        assert_eq!(qasim_doc_model_dim(m), 6);
        assert_eq!(qasim_doc_model_num_docs(m), f.answers.len());
        let mut buf = [0.0; 6];
        assert_eq!(qasim_doc_model_vector(m, 0, buf.as_mut_ptr(), 6), QasimStatus::Ok);
        assert!(buf.iter().any(|&x| x != 0.0));
        assert_eq!(qasim_doc_model_vector(m, 0, buf.as_mut_ptr(), 5), QasimStatus::InvalidArgument);
        assert_eq!(qasim_doc_model_vector(m, 10_000, buf.as_mut_ptr(), 6), QasimStatus::InvalidArgument);

        let mut n = ptr::null_mut();
        assert_eq!(qasim_simnet_load(f.net.as_ptr(), &mut n), QasimStatus::Ok);
        assert_eq!(qasim_simnet_input_dim(n), 6);
        let mut s = -1.0;
        assert_eq!(qasim_simnet_score(n, buf.as_ptr(), buf.as_ptr(), 6, &mut s), QasimStatus::Ok);
        assert!(s > 0.0 && s < 1.0);
        assert_eq!(qasim_simnet_score(n, buf.as_ptr(), buf.as_ptr(), 5, &mut s), QasimStatus::InvalidArgument);
        let nan = [f64::NAN; 6];
        assert_ne!(qasim_simnet_score(n, nan.as_ptr(), buf.as_ptr(), 6, &mut s), QasimStatus::Ok);
        qasim_simnet_free(n);
        qasim_doc_model_free(m);
    }
}

#[test]
fn engine_answers_and_escalates() {
    let f = write_models();
    unsafe {
        let mut e = ptr::null_mut();
        let st = qasim_engine_open(f.qm.as_ptr(), f.qv.as_ptr(), f.am.as_ptr(), f.qa.as_ptr(), f.net.as_ptr(), &mut e);
        assert_eq!(st, QasimStatus::Ok, "{}", last_error());
        assert_eq!(qasim_engine_num_answers(e), f.answers.len());
        let text = CStr::from_ptr(qasim_engine_answer_text(e, 0)).to_str().unwrap();
        assert_eq!(text, f.answers[0]);
        assert!(qasim_engine_answer_text(e, f.answers.len()).is_null());

        let q = CString::new("why is my invoice wrong").unwrap();
        let mut low = QasimDecision { answered: -1, best_index: 0, confidence: 0.0 };
        assert_eq!(qasim_engine_ask(e, q.as_ptr(), 1e-9, &mut low), QasimStatus::Ok);
        assert_eq!(low.answered, 1);
        assert!(low.best_index < f.answers.len());
        let mut high = low;
        assert_eq!(qasim_engine_ask(e, q.as_ptr(), 1.0, &mut high), QasimStatus::Ok);
        assert_eq!(high.answered, 0);
        assert_eq!(high.best_index, low.best_index);
        assert_eq!(high.confidence, low.confidence);

        let blank = CString::new("  ").unwrap();
        assert_eq!(qasim_engine_ask(e, blank.as_ptr(), 0.5, &mut high), QasimStatus::Empty);
        let bad = [0xffu8, 0];
        assert_eq!(qasim_engine_ask(e, bad.as_ptr().cast(), 0.5, &mut high), QasimStatus::Utf8);
        qasim_engine_free(e);
    }
}

#[test]
fn engine_rejects_mismatched_files() {
    let f = write_models();
    let mut e = ptr::null_mut();
    unsafe {
        let st = qasim_engine_open(f.am.as_ptr(), f.qv.as_ptr(), f.am.as_ptr(), f.qa.as_ptr(), f.net.as_ptr(), &mut e);
        assert_eq!(st, QasimStatus::InvalidArgument);
    }
    assert!(e.is_null());
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qasim.h")).unwrap();
    let source = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from qasim.h");
    }
}

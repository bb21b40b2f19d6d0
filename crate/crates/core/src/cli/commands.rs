use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use super::{pick, require_file, Cli, CliError, CliResult, Command, EmbedArgs, FixtureKind, RunConfig, SideArg, SourceArgs};
use crate::binio::save_with;
use crate::corpus::{
    read_corpus, read_pairs, sample_pairs, tokenize, write_corpus, write_pairs, write_qa_records, QaDataset, QaPair,
    Side, TokenizedDocument, Vocabulary,
};
use crate::embedding::{
    export_text, train_doc2vec_logged, train_word2vec_logged, DocEmbeddingModel, EmbedEpoch, EmbedTrainConfig,
};
use crate::engine::{AnswerEngine, SideModel};
use crate::evaluation::{
    bow_features, learning_curve, read_labeled, standardize_columns, train_linear, write_curve_csv, write_labeled,
    BowVector, FeatureKind, LinearClassifier,
};
use crate::retrieval::{argmax, select_all, summarize, BaselineReport, EvalReport, Outcome};
use crate::simnet::SimilarityNetwork;
use crate::synth;
use crate::training::{evaluate_pair_accuracy, train_simnet_observed, FeatureTable};

pub(super) fn execute(
    cli: Cli,
    env_seed: Option<&str>,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let mut config = match &cli.config {
        Some(path) => {
            require_file(path)?;
            RunConfig::load(path).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    config.resolve_seed(cli.seed, env_seed).map_err(|e| CliError::Usage(e.to_string()))?;

    match cli.command {
        Command::BuildVocab { source, min_count, out } => {
            if let Some(m) = min_count {
                config.corpus.min_count = m;
            }
            validated(&config)?;
            let texts = load_source(&source, &config)?;
            build_vocab(&texts, &config, &out, stdout)
        }
        Command::TrainWord2vec { source, vocab, mode, embed, out, export_text: text_out } => {
            apply_embed(&mut config.embed, &embed);
            validated(&config)?;
            let texts = load_source(&source, &config)?;
            let vocab_path = pick(vocab, &config.paths.vocab, "vocab")?;
            let vocab = Vocabulary::load(&vocab_path)?;
            echo_config(&config, &out, stdout)?;
            let docs = encode(&texts, &vocab);
            let (model, log) = train_word2vec_logged(&docs, vocab.len(), &config.embed, mode)?;
            model.save(&out)?;
            write_embed_report(&out, &log)?;
            if let Some(path) = text_out {
                save_with(&path, |w| export_text(&model.input, &vocab, w).map_err(std::io::Error::other))?;
            }
            writeln!(stdout, "wrote {} ({} words, dim {})", out.display(), vocab.len(), model.dim)?;
            Ok(())
        }
        Command::TrainDoc2vec { source, vocab, combine, embed, out, export_text: text_out } => {
            apply_embed(&mut config.embed, &embed);
            if let Some(c) = combine {
                config.combine = c;
            }
            validated(&config)?;
            let texts = load_source(&source, &config)?;
            let vocab_path = pick(vocab, &config.paths.vocab, "vocab")?;
            let vocab = Vocabulary::load(&vocab_path)?;
            echo_config(&config, &out, stdout)?;
            let docs = encode(&texts, &vocab);
            let (model, log) = train_doc2vec_logged(&docs, vocab.len(), &config.embed, config.combine)?;
            model.save(&out)?;
            write_embed_report(&out, &log)?;
            if let Some(path) = text_out {
                save_with(&path, |w| export_text(&model.word, &vocab, w).map_err(std::io::Error::other))?;
            }
            writeln!(stdout, "wrote {} ({} documents, dim {})", out.display(), model.num_docs(), model.dim)?;
            Ok(())
        }
        Command::SamplePairs { qa, n_pairs, positive_fraction, val_fraction, out, val_out } => {
            if let Some(n) = n_pairs {
                config.pairs.n_pairs = n;
            }
            if let Some(f) = positive_fraction {
                config.pairs.positive_fraction = f;
            }
            if let Some(f) = val_fraction {
                config.pairs.val_fraction = f;
            }
            validated(&config)?;
            let data = QaDataset::load(&pick(qa, &config.paths.qa, "qa")?)?;
            let p = &config.pairs;
            let pairs = sample_pairs(&data.pools, p.n_pairs, p.positive_fraction, p.seed)?;
            let (train, val) = match &val_out {
                Some(_) => pairs.split_at(pairs.len() - (pairs.len() as f64 * p.val_fraction).round() as usize),
                None => (&pairs[..], &[][..]),
            };
            write_pairs(&out, train)?;
            if let Some(path) = &val_out {
                write_pairs(path, val)?;
            }
            writeln!(stdout, "sampled {} training and {} validation pairs", train.len(), val.len())?;
            Ok(())
        }
        Command::TrainSimnet {
            question_model,
            answer_model,
            pairs,
            val_pairs,
            out,
            checkpoint_every,
            epochs,
            batch_size,
            lr0,
            dropout,
            lambda,
            patience,
            optimizer,
            activation,
        } => {
            let s = &mut config.simnet;
            set(&mut s.max_epochs, epochs);
            set(&mut s.batch_size, batch_size);
            set(&mut s.lr0, lr0);
            set(&mut s.dropout_p, dropout);
            set(&mut s.lambda, lambda);
            set(&mut s.early_stop_patience, patience);
            set(&mut s.optimizer, optimizer);
            set(&mut s.activation, activation);
            validated(&config)?;
            if checkpoint_every == Some(0) {
                return Err(CliError::Usage("--checkpoint-every must be at least 1".into()));
            }
            let features = load_features(question_model, answer_model, &config)?;
            let train = read_pairs(&pick(pairs, &config.paths.pairs, "pairs")?)?;
            let val_path = val_pairs.or_else(|| config.paths.val_pairs.clone());
            let (train, val) = match val_path {
                Some(path) => {
                    require_file(&path)?;
                    (train, read_pairs(&path)?)
                }
                None => split_validation(train, config.pairs.val_fraction)?,
            };
            echo_config(&config, &out, stdout)?;
            let (net, report) = train_simnet_observed(&train, &val, &features, &config.simnet, |rec, net| {
                if let Some(k) = checkpoint_every {
                    if (rec.epoch + 1) % k == 0 {
                        net.save(&PathBuf::from(format!("{}.epoch{}", out.display(), rec.epoch + 1)))?;
                    }
                }
                Ok(())
            })?;
            net.save(&out)?;
            save_with(&with_suffix(&out, ".report.jsonl"), |w| report.write_jsonl(w))?;
            save_with(&with_suffix(&out, ".report.csv"), |w| report.write_csv(w))?;
            let summary = serde_json::json!({
                "planned_epochs": report.planned_epochs,
                "completed_epochs": report.completed_epochs(),
                "best_epoch": report.best_epoch,
                "best_val_acc": report.best_val_acc,
                "stop_reason": report.stop_reason,
            });
            save_with(&with_suffix(&out, ".summary.json"), |w| writeln!(w, "{summary:#}"))?;
            writeln!(
                stdout,
                "trained {} of {} epochs; best validation pair accuracy {:.4} at epoch {}",
                report.completed_epochs(),
                report.planned_epochs,
                report.best_val_acc,
                report.best_epoch
            )?;
            Ok(())
        }
        Command::Eval { qa, question_model, answer_model, simnet, pairs, threshold, bow_baseline, train_pairs, out } => {
            set(&mut config.threshold, threshold);
            validated(&config)?;
            let data = QaDataset::load(&pick(qa, &config.paths.qa, "qa")?)?;
            let features = load_features(question_model, answer_model, &config)?;
            let net = SimilarityNetwork::load(&pick(simnet, &config.paths.simnet, "simnet")?)?;
            let pairs = match pairs.or_else(|| config.paths.pairs.clone()) {
                Some(path) => {
                    require_file(&path)?;
                    read_pairs(&path)?
                }
                None => pool_pairs(&data),
            };
            let train_pairs = match (bow_baseline, train_pairs) {
                (true, Some(path)) => {
                    require_file(&path)?;
                    Some(read_pairs(&path)?)
                }
                _ => None,
            };
            let report = evaluate(&data, &net, &features, &pairs, train_pairs.as_deref(), &config)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Some(path) = out {
                save_with(&path, |w| writeln!(w, "{text}"))?;
            }
            writeln!(stdout, "{text}")?;
            Ok(())
        }
        Command::Classify { data, ratios, seeds, embed, combine, out } => {
            apply_embed(&mut config.embed, &embed);
            set(&mut config.combine, combine);
            validated(&config)?;
            let rows = read_labeled(&pick(data, &config.paths.labeled, "data")?)?;
            let ys: Vec<i8> = rows.iter().map(|r| r.sign()).collect();
            let tokens: Vec<Vec<String>> = rows.iter().map(|r| tokenize(&r.text)).collect();
            let vocab = Vocabulary::build(&tokens, config.corpus.min_count)?;
            let docs: Vec<TokenizedDocument> =
                tokens.iter().enumerate().map(|(i, t)| vocab.encode(i as u32, t)).collect();
            let bow = docs.iter().map(|d| bow_features(d, vocab.len())).collect::<crate::Result<Vec<_>>>()?;
            let (model, _) = train_doc2vec_logged(&docs, vocab.len(), &config.embed, config.combine)?;
            let mut dense: Vec<Vec<f64>> = model.doc.iter_rows().map(<[f64]>::to_vec).collect();
            standardize_columns(&mut dense);
            let mut points =
                learning_curve(&bow, &ys, vocab.len(), FeatureKind::Bow, &ratios, &seeds, &config.linear)?;
            points.extend(learning_curve(&dense, &ys, model.dim, FeatureKind::Doc2vec, &ratios, &seeds, &config.linear)?);
            points.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
            match out {
                Some(path) => {
                    save_with(&path, |w| write_curve_csv(w, &points))?;
                    write_curve_csv(stdout, &points)?;
                }
                None => write_curve_csv(stdout, &points)?,
            }
            Ok(())
        }
        Command::Ask { question_model, question_vocab, answer_model, qa, simnet, threshold } => {
            set(&mut config.threshold, threshold);
            validated(&config)?;
            let qm = DocEmbeddingModel::load(&pick(question_model, &config.paths.question_model, "question-model")?)?;
            let qv = Vocabulary::load(&pick(question_vocab, &config.paths.question_vocab, "question-vocab")?)?;
            let am = DocEmbeddingModel::load(&pick(answer_model, &config.paths.answer_model, "answer-model")?)?;
            let data = QaDataset::load(&pick(qa, &config.paths.qa, "qa")?)?;
            let net = SimilarityNetwork::load(&pick(simnet, &config.paths.simnet, "simnet")?)?;
            if qm.vocab_size() != qv.len() {
                return Err(CliError::Usage(format!(
                    "question vocabulary has {} entries but the question model expects {}",
                    qv.len(),
                    qm.vocab_size()
                )));
            }
            if am.num_docs() != data.answers.len() {
                return Err(CliError::Usage(format!(
                    "answer model holds {} documents but the dataset has {} answers",
                    am.num_docs(),
                    data.answers.len()
                )));
            }
            let engine = AnswerEngine::new(
                SideModel { vocab: qv, model: qm },
                net,
                data.answers,
                am.doc,
                config.infer.clone(),
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            ask_loop(&engine, config.threshold, stdin, stdout, stderr)
        }
        Command::GenFixture { kind, out, n } => {
            let seed = config.seed.unwrap_or(synth_default_seed());
            match kind {
                FixtureKind::PlantedQa => {
                    let q = n.unwrap_or(50);
                    write_qa_records(&out, &synth::planted_qa(q, 2 * q, 10.min(q + 1), seed))?;
                }
                FixtureKind::Paraphrase => write_labeled(&out, &synth::paraphrase_classification(n.unwrap_or(200), 1, seed))?,
                FixtureKind::TwoCluster => {
                    let (docs, _) = synth::two_cluster_corpus(n.unwrap_or(50), 12, seed);
                    let lines: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
                    write_corpus(&out, &lines)?;
                }
            }
            writeln!(stdout, "wrote {}", out.display())?;
            Ok(())
        }
    }
}

fn synth_default_seed() -> u64 {
    RunConfig::default().embed.seed
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn validated(config: &RunConfig) -> CliResult<()> {
    config.validate().map_err(|e| CliError::Usage(e.to_string()))
}

fn apply_embed(c: &mut EmbedTrainConfig, a: &EmbedArgs) {
    set(&mut c.dim, a.dim);
    set(&mut c.window, a.window);
    set(&mut c.negatives, a.negatives);
    set(&mut c.epochs, a.epochs);
    set(&mut c.learning_rate, a.learning_rate);
    set(&mut c.min_learning_rate, a.min_learning_rate);
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Print the resolved configuration and keep a copy next to the output.
fn echo_config(config: &RunConfig, out: &Path, stdout: &mut dyn Write) -> CliResult<()> {
    let text = config.to_pretty_json();
    writeln!(stdout, "{text}")?;
    save_with(&with_suffix(out, ".config.json"), |w| writeln!(w, "{text}"))?;
    Ok(())
}

fn load_source(source: &SourceArgs, config: &RunConfig) -> CliResult<Vec<String>> {
    match (&source.corpus, &source.qa, &config.paths.corpus, &config.paths.qa) {
        (Some(path), _, _, _) | (None, None, Some(path), _) => {
            require_file(path)?;
            Ok(read_corpus(path)?)
        }
        (None, Some(path), _, _) | (None, None, None, Some(path)) => {
            require_file(path)?;
            let data = QaDataset::load(path)?;
            let side = match source.side {
                SideArg::Question => Side::Question,
                SideArg::Answer => Side::Answer,
            };
            Ok(data.corpus(side).to_vec())
        }
        (None, None, None, None) => Err(CliError::Usage("give --corpus or --qa".into())),
    }
}

fn encode(texts: &[String], vocab: &Vocabulary) -> Vec<TokenizedDocument> {
    texts.iter().enumerate().map(|(i, t)| vocab.encode(i as u32, &tokenize(t))).collect()
}

fn build_vocab(texts: &[String], config: &RunConfig, out: &Path, stdout: &mut dyn Write) -> CliResult<()> {
    let tokens: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
    let vocab = Vocabulary::build(&tokens, config.corpus.min_count)?;
    vocab.save(out)?;
    let total: usize = tokens.iter().map(Vec::len).sum();
    writeln!(stdout, "documents: {}", texts.len())?;
    writeln!(stdout, "tokens: {total}")?;
    writeln!(stdout, "vocabulary size: {}", vocab.len())?;
    writeln!(stdout, "low-frequency replacements: {}", vocab.frequency(vocab.lf_id()))?;
    writeln!(stdout, "numeric replacements: {}", vocab.frequency(vocab.num_id()))?;
    Ok(())
}

fn write_embed_report(out: &Path, log: &[EmbedEpoch]) -> CliResult<()> {
    save_with(&with_suffix(out, ".report.jsonl"), |w| {
        for e in log {
            writeln!(w, "{}", serde_json::to_string(e).map_err(std::io::Error::other)?)?;
        }
        Ok(())
    })?;
    save_with(&with_suffix(out, ".report.csv"), |w| {
        writeln!(w, "epoch,mean_loss,end_learning_rate")?;
        for e in log {
            writeln!(w, "{},{},{}", e.epoch, e.mean_loss, e.end_learning_rate)?;
        }
        Ok(())
    })?;
    Ok(())
}

fn load_features(q: Option<PathBuf>, a: Option<PathBuf>, config: &RunConfig) -> CliResult<FeatureTable> {
    let qm = DocEmbeddingModel::load(&pick(q, &config.paths.question_model, "question-model")?)?;
    let am = DocEmbeddingModel::load(&pick(a, &config.paths.answer_model, "answer-model")?)?;
    FeatureTable::new(qm.doc, am.doc).map_err(|e| CliError::Usage(e.to_string()))
}

/// Hold out the trailing `fraction` of the pairs (at least one) for
/// validation.
fn split_validation(mut pairs: Vec<QaPair>, fraction: f64) -> CliResult<(Vec<QaPair>, Vec<QaPair>)> {
    if pairs.len() < 2 {
        return Err(CliError::Runtime("need at least two pairs to hold out a validation set".into()));
    }
    let n_val = ((pairs.len() as f64 * fraction).round() as usize).clamp(1, pairs.len() - 1);
    let val = pairs.split_off(pairs.len() - n_val);
    Ok((pairs, val))
}

/// Every (question, candidate) combination of every pool, labeled by gold.
fn pool_pairs(data: &QaDataset) -> Vec<QaPair> {
    data.pools
        .iter()
        .flat_map(|p| {
            p.candidates.iter().enumerate().map(move |(i, &a)| QaPair {
                question_doc: p.question_doc,
                answer_doc: a,
                label: p.is_correct(i) as u8,
            })
        })
        .collect()
}

fn evaluate(
    data: &QaDataset,
    net: &SimilarityNetwork,
    features: &FeatureTable,
    pairs: &[QaPair],
    baseline_train: Option<&[QaPair]>,
    config: &RunConfig,
) -> CliResult<EvalReport> {
    let selections = select_all(net, &data.pools, features)?;
    let pools = summarize(&selections);
    let answered = selections.iter().filter(|s| s.score >= config.threshold).count();
    let bow_baseline = match baseline_train {
        Some(train) => Some(bow_baseline(data, train, pairs, config)?),
        None => None,
    };
    Ok(EvalReport {
        pool_top1: pools.top1,
        pools_scored: pools.pools_scored,
        pools_without_gold: pools.pools_without_gold,
        pair_accuracy: evaluate_pair_accuracy(net, pairs, features)?,
        threshold: config.threshold,
        answer_rate: answered as f64 / selections.len().max(1) as f64,
        bow_baseline,
    })
}

/// Bag-of-words pair features `[bow(q); bow(a)]` under the linear classifier.
fn bow_baseline(data: &QaDataset, train: &[QaPair], eval: &[QaPair], config: &RunConfig) -> CliResult<BaselineReport> {
    let side = |texts: &[String]| -> crate::Result<(usize, Vec<BowVector>)> {
        let tokens: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
        let vocab = Vocabulary::build(&tokens, config.corpus.min_count)?;
        let bows = tokens.iter().map(|t| BowVector::from_tokens(&vocab.encode_tokens(t))).collect();
        Ok((vocab.len(), bows))
    };
    let (vq, qb) = side(&data.questions)?;
    let (va, ab) = side(&data.answers)?;
    let pair_vec = |p: &QaPair| -> CliResult<BowVector> {
        let q = qb.get(p.question_doc as usize);
        let a = ab.get(p.answer_doc as usize);
        match (q, a) {
            (Some(q), Some(a)) => Ok(q.joined(a, vq)),
            _ => Err(CliError::Runtime(format!("pair ({}, {}) is outside the dataset", p.question_doc, p.answer_doc))),
        }
    };
    let xs = train.iter().map(pair_vec).collect::<CliResult<Vec<_>>>()?;
    let ys: Vec<i8> = train.iter().map(|p| if p.label == 1 { 1 } else { -1 }).collect();
    let clf: LinearClassifier = train_linear(&xs, &ys, vq + va, &config.linear)?;
    let ex = eval.iter().map(pair_vec).collect::<CliResult<Vec<_>>>()?;
    let ey: Vec<i8> = eval.iter().map(|p| if p.label == 1 { 1 } else { -1 }).collect();
    let mut hits = 0usize;
    let mut scored = 0usize;
    for pool in data.pools.iter().filter(|p| p.has_gold()) {
        let q = &qb[pool.question_doc as usize];
        let scores: Vec<f64> = pool.candidates.iter().map(|&a| clf.decision(&q.joined(&ab[a as usize], vq))).collect();
        scored += 1;
        if argmax(&scores).is_some_and(|(i, _)| pool.is_correct(i)) {
            hits += 1;
        }
    }
    Ok(BaselineReport {
        pair_accuracy: clf.accuracy(&ex, &ey),
        pool_top1: if scored == 0 { 0.0 } else { hits as f64 / scored as f64 },
    })
}

fn ask_loop(
    engine: &AnswerEngine,
    threshold: f64,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let mut line = Vec::new();
    loop {
        write!(stderr, "> ")?;
        stderr.flush()?;
        line.clear();
        if stdin.read_until(b'\n', &mut line)? == 0 {
            return Ok(());
        }
        let Ok(text) = std::str::from_utf8(&line) else {
            writeln!(stderr, "warning: skipping a line that is not valid UTF-8")?;
            continue;
        };
        let text = text.trim();
        if tokenize(text).is_empty() {
            continue;
        }
        let reply = match engine.ask(text, threshold) {
            Ok(r) => r,
            Err(e) => {
                writeln!(stderr, "warning: {e}")?;
                continue;
            }
        };
        let c = reply.decision.confidence;
        match reply.decision.outcome {
            Outcome::Answer => writeln!(stdout, "ANSWER ({c:.4}): {}", reply.best_text)?,
            Outcome::Escalate => {
                writeln!(stdout, "ESCALATE ({c:.4} < {threshold}): referring the question to a human agent")?
            }
        }
        stdout.flush()?;
    }
}

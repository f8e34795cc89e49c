//! Acceptance checks, one line each. Run with
//! `cargo test -p absa-promptkit --test acceptance`.
//!
//! Set `ABSA_PROMPTKIT_DATA` to a directory holding `csfd/{train,test}.tsv`
//! and `absa/{train,test}.xml` to also check the real corpus statistics.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use absa_promptkit::backend::{run_requests, Backend, CorruptionOracle, GoldOracle};
use absa_promptkit::corpus::{
    load_absa_corpus, load_polarity_corpus, make_split, star_to_polarity, write_absa_xml, write_jsonl, LabelCounts,
};
use absa_promptkit::metrics::aggregate_seeds;
use absa_promptkit::parsing::parse_output;
use absa_promptkit::pipeline::{evaluate, gold_store, prepare_absa, prepare_apd, prepare_sc, RawOutput, DEFAULT_MAX_OUTPUT_UNITS};
use absa_promptkit::prompting::render;
use absa_promptkit::{AbsaSentence, OpinionTriplet, Polarity, Regime, SplitSpec, Task, Verbalizer};
use common::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn outputs(backend: &dyn Backend, examples: &[absa_promptkit::pipeline::PreparedExample]) -> Result<Vec<RawOutput>, String> {
    let requests: Vec<_> = examples.iter().map(|e| e.request.clone()).collect();
    run_requests(backend, &requests, 8)
        .into_iter()
        .zip(&requests)
        .map(|(r, q)| r.map(|r| RawOutput::from_response(&q.id, &r)).map_err(|e| e.to_string()))
        .collect()
}

fn identity_pipeline() -> Outcome {
    let start = Instant::now();
    let sentences = fixture_sentences();
    let docs = fixture_documents();
    let mut checked = Vec::new();
    let mut check = |label: String, tasks: &[Task], examples: Vec<_>, regime: Regime| -> Result<(), String> {
        let (cfg, v) = config(regime);
        let oracle = GoldOracle::new(gold_store(&examples));
        let out = outputs(&oracle, &examples)?;
        let eval = evaluate(&examples, &out, tasks, &cfg, &v).map_err(|e| e.to_string())?;
        for s in &eval.scores {
            if s.score * 100.0 != 100.0 {
                return Err(format!("{label} {}: {:.4}", s.task, s.score * 100.0));
            }
            checked.push(format!("{label}/{}", s.task));
        }
        Ok(())
    };
    for regime in [Regime::Traditional, Regime::Sentinel, Regime::Mask] {
        let (cfg, v) = config(regime);
        let ex = prepare_absa(&sentences, &cfg, &v, DEFAULT_MAX_OUTPUT_UNITS).map_err(|e| e.to_string())?;
        check(regime.to_string(), &[Task::Acd, Task::Ate, Task::Acte, Task::Tasd], ex, regime)?;
    }
    for regime in [Regime::Mlm, Regime::Traditional] {
        let (cfg, v) = config(regime);
        let apd = prepare_apd(&sentences, &cfg, &v).map_err(|e| e.to_string())?;
        check(regime.to_string(), &[Task::Apd], apd, regime)?;
        let sc = prepare_sc(&docs, &cfg, &v).map_err(|e| e.to_string())?;
        check(regime.to_string(), &[Task::Sc], sc, regime)?;
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 5.0 {
        return Err(format!("took {secs:.2}s"));
    }
    Ok(format!("{} task/regime pairs at 100.0, {secs:.2}s", checked.len()))
}

fn round_trip() -> Outcome {
    let mut report = Vec::new();
    for regime in [Regime::Traditional, Regime::Sentinel, Regime::Mask] {
        let (cfg, v) = config(regime);
        let mut fixture_mismatches = 0;
        for s in fixture_sentences() {
            let r = render(&s, &cfg, &v).map_err(|e| e.to_string())?;
            if sorted(parse_output(&r.expected_target, &cfg, &v).triplets) != sorted(s.triplets.clone()) {
                fixture_mismatches += 1;
            }
        }
        let cases = 256;
        let mut runner = TestRunner::new(Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        });
        let result = runner.run(&sentence(), |s| {
            let r = render(&s, &cfg, &v).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let back = sorted(parse_output(&r.expected_target, &cfg, &v).triplets);
            if back == sorted(s.triplets.clone()) {
                Ok(())
            } else {
                Err(TestCaseError::fail(format!("{:?}", r.expected_target)))
            }
        });
        if fixture_mismatches > 0 {
            return Err(format!("{regime}: {fixture_mismatches} fixture mismatches"));
        }
        if let Err(e) = result {
            return Err(format!("{regime}: {e}"));
        }
        report.push(format!("{regime} 60+{cases}"));
    }
    Ok(format!("0 mismatches ({})", report.join(", ")))
}

/// Distinct synthetic sentences holding `n` triplets in total.
fn synthetic_sentences(n: usize) -> Vec<AbsaSentence> {
    let cats: Vec<_> = allowed().iter().cloned().collect();
    let per_sentence = 4;
    (0..n.div_ceil(per_sentence))
        .map(|i| AbsaSentence {
            review_id: format!("r{}", i / 10),
            sentence_id: format!("syn{i:05}"),
            text: format!("Synthetic sentence number {i}."),
            triplets: (0..per_sentence)
                .map(|k| {
                    let j = i * per_sentence + k;
                    let term = (j % 7 != 0).then(|| format!("term{j}"));
                    OpinionTriplet::new(cats[j % cats.len()].clone(), term, Polarity::ALL[j % 3]).unwrap()
                })
                .collect(),
        })
        .collect()
}

fn corruption_calibration() -> Outcome {
    let sentences = synthetic_sentences(10_000);
    let (cfg, v) = config(Regime::Traditional);
    let examples = prepare_absa(&sentences, &cfg, &v, DEFAULT_MAX_OUTPUT_UNITS).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for d in [0.1, 0.3, 0.5] {
        let run = || -> Result<(Vec<RawOutput>, f64, f64), String> {
            let oracle = CorruptionOracle::new(gold_store(&examples), d, 13, cfg.clone(), v.clone())
                .map_err(|e| e.to_string())?;
            let out = outputs(&oracle, &examples)?;
            let eval = evaluate(&examples, &out, &[Task::Tasd], &cfg, &v).map_err(|e| e.to_string())?;
            let prf = eval.scores[0].prf.ok_or("no precision/recall")?;
            if prf.counts.tp + prf.counts.fn_ < 10_000 {
                return Err(format!("only {} gold triplets", prf.counts.tp + prf.counts.fn_));
            }
            Ok((out, prf.precision, prf.recall))
        };
        let (first, p, r) = run()?;
        let (second, ..) = run()?;
        let bytes = |o: &[RawOutput]| serde_json::to_vec(o).unwrap();
        if bytes(&first) != bytes(&second) {
            return Err(format!("d={d}: reruns differ"));
        }
        if (r - (1.0 - d)).abs() > 0.02 || (p - 1.0).abs() > 0.01 {
            return Err(format!("d={d}: precision {p:.4}, recall {r:.4}"));
        }
        lines.push(format!("d={d} P={p:.4} R={r:.4}"));
    }
    Ok(format!("{}; reruns identical", lines.join(", ")))
}

fn verbalizer_tables() -> Outcome {
    let expected = [
        (Verbalizer::english(), [(Polarity::Positive, "great"), (Polarity::Neutral, "ok"), (Polarity::Negative, "bad")]),
        (Verbalizer::czech(), [(Polarity::Positive, "dobrý"), (Polarity::Neutral, "ok"), (Polarity::Negative, "špatný")]),
    ];
    for (v, table) in &expected {
        for (p, w) in table {
            if v.word(*p) != *w {
                return Err(format!("{p} -> {:?}, expected {w:?}", v.word(*p)));
            }
            if v.inverse(w) != Some(*p) {
                return Err(format!("{w:?} does not map back to {p}"));
            }
        }
    }
    Ok("great/ok/bad and dobrý/ok/špatný, bijective".into())
}

fn star_mapping() -> Outcome {
    use Polarity::*;
    let expected = [Negative, Negative, Neutral, Neutral, Positive, Positive];
    for (stars, want) in expected.iter().enumerate() {
        let got = star_to_polarity(stars as i64).map_err(|e| e.to_string())?;
        if got != *want {
            return Err(format!("{stars} stars -> {got}, expected {want}"));
        }
    }
    for bad in [-1, 6] {
        if star_to_polarity(bad).is_ok() {
            return Err(format!("{bad} stars accepted"));
        }
    }
    Ok("0-1 negative, 2-3 neutral, 4-5 positive; -1 and 6 rejected".into())
}

fn few_shot_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("train.xml");
    let synthetic = synthetic_sentences(1612 * 4);
    std::fs::write(&path, write_absa_xml(&synthetic)).map_err(|e| e.to_string())?;
    let sizes = [10, 20, 50, 100, 500, 1000];
    let splits = || -> Result<Vec<Vec<u8>>, String> {
        let corpus = load_absa_corpus(&path, Some(&allowed())).map_err(|e| e.to_string())?;
        sizes
            .iter()
            .map(|&n| {
                let split = make_split(&corpus, SplitSpec::few_shot(n).unwrap()).map_err(|e| e.to_string())?;
                let mut buf = Vec::new();
                write_jsonl(&split, &mut buf).map_err(|e| e.to_string())?;
                Ok(buf)
            })
            .collect()
    };
    let first = splits()?;
    if first != splits()? {
        return Err("reruns differ".into());
    }
    for (w, n) in first.windows(2).zip(sizes) {
        if !w[1].starts_with(&w[0]) {
            return Err(format!("split {n} is not a prefix of the next"));
        }
    }
    for (buf, n) in first.iter().zip(sizes) {
        if buf.iter().filter(|&&b| b == b'\n').count() != n {
            return Err(format!("split {n} has the wrong length"));
        }
    }
    Ok("n in {10,20,50,100,500,1000} nested and byte-stable".into())
}

fn ci_aggregation() -> Outcome {
    let r = aggregate_seeds::<f64>(&[0.80, 0.82, 0.84, 0.86, 0.88], 5).map_err(|e| e.to_string())?;
    if (r.mean - 0.84).abs() > 5e-5 || (r.ci95_halfwidth - 0.0393).abs() > 0.0005 {
        return Err(format!("mean {:.4}, halfwidth {:.4}", r.mean, r.ci95_halfwidth));
    }
    Ok(format!("mean {:.4}, halfwidth {:.4}", r.mean, r.ci95_halfwidth))
}

/// `None` when the real corpora are not available locally.
fn dataset_statistics() -> Option<Outcome> {
    let root = std::env::var_os("ABSA_PROMPTKIT_DATA")?;
    let root = Path::new(&root);
    let counts = |split: &str| -> Result<LabelCounts, String> {
        let docs = load_polarity_corpus(root.join("csfd").join(format!("{split}.tsv"))).map_err(|e| e.to_string())?;
        Ok(LabelCounts::of_documents(&docs))
    };
    let sentences = |split: &str| -> Result<usize, String> {
        load_absa_corpus(root.join("absa").join(format!("{split}.xml")), None)
            .map(|s| s.len())
            .map_err(|e| e.to_string())
    };
    Some((|| {
        let want = [("train", (24_573, 23_840, 24_691)), ("test", (6_324, 5_876, 6_077))];
        for (split, expected) in want {
            let c = counts(split)?;
            if (c.positive, c.negative, c.neutral) != expected {
                return Err(format!("CSFD {split}: {c:?}"));
            }
        }
        let (train, test) = (sentences("train")?, sentences("test")?);
        if (train, test) != (1612, 537) {
            return Err(format!("ABSA sentences train {train}, test {test}"));
        }
        Ok("CSFD and ABSA counts exact".into())
    })())
}

fn main() -> ExitCode {
    let checks: [Check; 7] = [
        ("identity pipeline", identity_pipeline),
        ("round-trip", round_trip),
        ("corruption calibration", corruption_calibration),
        ("verbalizer tables", verbalizer_tables),
        ("star mapping", star_mapping),
        ("few-shot determinism", few_shot_determinism),
        ("CI aggregation", ci_aggregation),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    match dataset_statistics() {
        None => println!("SKIP dataset statistics: ABSA_PROMPTKIT_DATA not set"),
        Some(Ok(detail)) => println!("PASS dataset statistics: {detail}"),
        Some(Err(detail)) => {
            failed += 1;
            println!("FAIL dataset statistics: {detail}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

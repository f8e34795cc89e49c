use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{check_candidates, Backend, BackendError, BackendRequest, BackendResponse, RequestKind, ResponseOutput};
use crate::corpus::AbsaSentence;
use crate::error::{Error, Result};
use crate::prompting::{render, PromptRendering, TemplateConfig, Verbalizer};

/// Gold answer for one example id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldEntry {
    pub target: String,
    /// Source sentence for seq2seq examples, used to re-render partial
    /// targets.
    pub sentence: Option<AbsaSentence>,
}

#[derive(Debug, Clone, Default)]
pub struct GoldStore {
    entries: HashMap<String, GoldEntry>,
}

impl GoldStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, rendering: &PromptRendering, sentence: Option<AbsaSentence>) {
        self.entries.insert(
            rendering.example_id.clone(),
            GoldEntry {
                target: rendering.expected_target.clone(),
                sentence,
            },
        );
    }

    pub fn get(&self, id: &str) -> Option<&GoldEntry> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, id: &str) -> std::result::Result<&GoldEntry, BackendError> {
        self.get(id).ok_or_else(|| BackendError::UnknownExample { id: id.to_string() })
    }
}

fn filled(chosen: String, candidates: &[String]) -> ResponseOutput {
    let scores: BTreeMap<String, f64> = candidates
        .iter()
        .map(|c| (c.clone(), if *c == chosen { 1.0 } else { 0.0 }))
        .collect();
    ResponseOutput::Filled { chosen, scores }
}

/// Answers every request with its gold target.
#[derive(Debug, Clone)]
pub struct GoldOracle {
    store: GoldStore,
}

impl GoldOracle {
    pub fn new(store: GoldStore) -> Self {
        Self { store }
    }
}

impl Backend for GoldOracle {
    fn respond(&self, request: &BackendRequest) -> std::result::Result<BackendResponse, BackendError> {
        let start = Instant::now();
        let gold = self.store.lookup(&request.id)?;
        let output = match &request.kind {
            RequestKind::Generate { .. } => ResponseOutput::Generated(gold.target.clone()),
            RequestKind::FillMask { candidates } => filled(gold.target.clone(), candidates),
        };
        let response = BackendResponse {
            output,
            latency_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        check_candidates(request, &response)?;
        Ok(response)
    }
}

/// Gold answers degraded at a fixed rate.
///
/// Each gold triplet is deleted independently with probability `rate`; label
/// words are replaced by a uniformly chosen other candidate with the same
/// probability. The random stream is derived from `(seed, example id)`, so
/// output does not depend on request order or concurrency.
#[derive(Debug, Clone)]
pub struct CorruptionOracle {
    store: GoldStore,
    rate: f64,
    seed: u64,
    template: TemplateConfig,
    verbalizer: Verbalizer,
}

impl CorruptionOracle {
    pub fn new(store: GoldStore, rate: f64, seed: u64, template: TemplateConfig, verbalizer: Verbalizer) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::Config(format!("corruption rate {rate} is outside [0, 1]")));
        }
        Ok(Self {
            store,
            rate,
            seed,
            template,
            verbalizer,
        })
    }

    fn rng_for(&self, id: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(id.as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    fn flip(&self, rng: &mut ChaCha8Rng, gold: &str, candidates: &[String]) -> String {
        let others: Vec<&String> = candidates.iter().filter(|c| *c != gold).collect();
        if !others.is_empty() && rng.random_bool(self.rate) {
            others[rng.random_range(0..others.len())].clone()
        } else {
            gold.to_string()
        }
    }
}

impl Backend for CorruptionOracle {
    fn respond(&self, request: &BackendRequest) -> std::result::Result<BackendResponse, BackendError> {
        let start = Instant::now();
        let gold = self.store.lookup(&request.id)?;
        let mut rng = self.rng_for(&request.id);
        let output = match (&request.kind, &gold.sentence) {
            (RequestKind::Generate { .. }, Some(sentence)) => {
                let mut kept = sentence.clone();
                kept.triplets.retain(|_| !rng.random_bool(self.rate));
                let rendering = render(&kept, &self.template, &self.verbalizer).map_err(|e| {
                    BackendError::InvalidRequest {
                        id: request.id.clone(),
                        message: e.to_string(),
                    }
                })?;
                ResponseOutput::Generated(rendering.expected_target)
            }
            (RequestKind::Generate { .. }, None) => {
                ResponseOutput::Generated(self.flip(&mut rng, &gold.target, &self.verbalizer.candidates()))
            }
            (RequestKind::FillMask { candidates }, _) => {
                let chosen = self.flip(&mut rng, &gold.target, candidates);
                filled(chosen, candidates)
            }
        };
        let response = BackendResponse {
            output,
            latency_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        check_candidates(request, &response)?;
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AspectCategory, CategorySet, OpinionTriplet, Polarity};
    use crate::prompting::{CategoryTable, Language, Regime};

    fn setup() -> (GoldStore, TemplateConfig, AbsaSentence) {
        let fq: AspectCategory = "FOOD#QUALITY".parse().unwrap();
        let cfg = TemplateConfig::new(
            Regime::Traditional,
            Language::En,
            CategoryTable::english(&CategorySet::new([fq.clone()])).unwrap(),
        );
        let s = AbsaSentence {
            review_id: "r".into(),
            sentence_id: "s".into(),
            text: "t".into(),
            triplets: (0..50)
                .map(|i| OpinionTriplet::new(fq.clone(), Some(format!("x{i}")), Polarity::Positive).unwrap())
                .collect(),
        };
        let mut store = GoldStore::new();
        store.insert(&render(&s, &cfg, &Verbalizer::english()).unwrap(), Some(s.clone()));
        store.insert(
            &PromptRendering {
                example_id: "m".into(),
                model_input: "Je to [MASK] film.".into(),
                expected_target: "dobrý".into(),
                regime: Regime::Mlm,
                triplet_count: 0,
            },
            None,
        );
        (store, cfg, s)
    }

    #[test]
    fn gold_echoes_and_rejects_unknown() {
        let (store, _, _) = setup();
        let oracle = GoldOracle::new(store.clone());
        let r = oracle.respond(&BackendRequest::generate("s", "t", 64).unwrap()).unwrap();
        assert_eq!(r.text(), store.get("s").unwrap().target);
        let fill = BackendRequest::fill_mask("m", "Je to [MASK] film.", Verbalizer::czech().candidates()).unwrap();
        assert_eq!(oracle.respond(&fill).unwrap().text(), "dobrý");
        assert!(matches!(
            oracle.respond(&BackendRequest::generate("nope", "t", 64).unwrap()),
            Err(BackendError::UnknownExample { .. })
        ));
    }

    #[test]
    fn degenerate_rates() {
        let (store, cfg, _) = setup();
        let req = BackendRequest::generate("s", "t", 64).unwrap();
        let fill = BackendRequest::fill_mask("m", "Je to [MASK] film.", Verbalizer::czech().candidates()).unwrap();
        let zero = CorruptionOracle::new(store.clone(), 0.0, 7, cfg.clone(), Verbalizer::english()).unwrap();
        let gold = GoldOracle::new(store.clone());
        assert_eq!(zero.respond(&req).unwrap().text(), gold.respond(&req).unwrap().text());
        assert_eq!(zero.respond(&fill).unwrap().text(), "dobrý");
        let one = CorruptionOracle::new(store.clone(), 1.0, 7, cfg.clone(), Verbalizer::czech()).unwrap();
        assert_eq!(one.respond(&req).unwrap().text(), "");
        assert_ne!(one.respond(&fill).unwrap().text(), "dobrý");
        assert!(CorruptionOracle::new(store, 1.5, 7, cfg, Verbalizer::english()).is_err());
    }

    #[test]
    fn seeded_reruns_identical() {
        let (store, cfg, _) = setup();
        let req = BackendRequest::generate("s", "t", 64).unwrap();
        let a = CorruptionOracle::new(store.clone(), 0.5, 11, cfg.clone(), Verbalizer::english()).unwrap();
        let b = CorruptionOracle::new(store.clone(), 0.5, 11, cfg.clone(), Verbalizer::english()).unwrap();
        let c = CorruptionOracle::new(store, 0.5, 12, cfg, Verbalizer::english()).unwrap();
        let out = a.respond(&req).unwrap().text().to_string();
        assert_eq!(out, b.respond(&req).unwrap().text());
        assert_eq!(out, a.respond(&req).unwrap().text());
        assert_ne!(out, c.respond(&req).unwrap().text());
    }
}

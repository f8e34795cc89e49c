//! One function per subcommand. Each reads the artifacts of the previous
//! step from the run directory and writes its own.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use absa_promptkit::backend::{
    run_requests, Backend, CorruptionOracle, EndpointConfig, GoldOracle, HttpBackend, RetryPolicy,
};
use absa_promptkit::corpus::{hold_out_validation, load_absa_corpus, load_polarity_corpus, make_split, LabelCounts};
use absa_promptkit::metrics::aggregate_seeds;
use absa_promptkit::pipeline::{
    evaluate, gold_store, prepare_absa, prepare_apd, prepare_sc, BackendSpec, PreparedExample, RawOutput, TaskScore,
};
use absa_promptkit::prompting::TemplateTables;
use absa_promptkit::{
    AbsaSentence, CategorySet, MetricReport, PolarityDocument, Regime, ReportRow, ReportTable, SplitSpec, Task,
    TemplateConfig, Verbalizer,
};
use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    read_json, read_jsonl, sha256_file, sha256_hex, write_json, write_jsonl_file, write_text, Kind, Layout,
};
use crate::config::ExperimentConfig;

/// A validated configuration with its tables and run directory.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub tables: TemplateTables,
    pub layout: Layout,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let tables = cfg.tables()?;
        let layout = Layout::new(cfg.out_dir()?);
        Ok(Self { cfg, tables, layout })
    }

    fn templates(&self) -> Result<(TemplateConfig, Verbalizer)> {
        let allowed: CategorySet = read_json(&self.layout.categories(), "ingest")?;
        let cfg = self.tables.template_config(self.cfg.regime, &allowed)?;
        Ok((cfg, self.tables.verbalizer_for(self.cfg.regime)))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AbsaStats {
    sentences: usize,
    opinions: LabelCounts,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CorpusStats {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    absa: BTreeMap<String, AbsaStats>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    csfd: BTreeMap<String, LabelCounts>,
}

fn absa_sources(cfg: &ExperimentConfig) -> Vec<(&'static str, &Path)> {
    [("absa_train", &cfg.data.absa_train), ("absa_test", &cfg.data.absa_test)]
        .into_iter()
        .filter_map(|(name, p)| p.as_deref().map(|p| (name, p)))
        .collect()
}

fn csfd_sources(cfg: &ExperimentConfig) -> Vec<(&'static str, &Path)> {
    [("csfd_train", &cfg.data.csfd_train), ("csfd_test", &cfg.data.csfd_test)]
        .into_iter()
        .filter_map(|(name, p)| p.as_deref().map(|p| (name, p)))
        .collect()
}

/// Paths of every input file the run depends on.
pub fn input_files(cfg: &ExperimentConfig) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = Vec::new();
    if cfg.needs_absa() {
        files.extend(absa_sources(cfg).into_iter().map(|(_, p)| p.to_path_buf()));
    }
    if cfg.needs_csfd() {
        files.extend(csfd_sources(cfg).into_iter().map(|(_, p)| p.to_path_buf()));
    }
    files.extend(cfg.templates.clone());
    files
}

pub fn ingest(ctx: &Context) -> Result<()> {
    let layout = &ctx.layout;
    let mut stats = CorpusStats::default();
    let mut observed = CategorySet::default();
    let allowed = ctx.tables.allowed();
    if ctx.cfg.needs_absa() {
        for (name, path) in absa_sources(&ctx.cfg) {
            let sentences = load_absa_corpus(path, allowed.as_ref())?;
            observed = CategorySet::new(observed.iter().cloned().chain(CategorySet::observed(&sentences).iter().cloned()));
            write_jsonl_file(&layout.corpus(name), &sentences)?;
            let opinions = LabelCounts::of_opinions(&sentences);
            eprintln!("{name}: {} sentences, {} opinions", sentences.len(), opinions.total());
            stats.absa.insert(
                name.to_string(),
                AbsaStats {
                    sentences: sentences.len(),
                    opinions,
                },
            );
        }
    }
    if ctx.cfg.needs_csfd() {
        for (name, path) in csfd_sources(&ctx.cfg) {
            let docs = load_polarity_corpus(path)?;
            write_jsonl_file(&layout.corpus(name), &docs)?;
            let counts = LabelCounts::of_documents(&docs);
            eprintln!(
                "{name}: {} documents ({} positive, {} negative, {} neutral)",
                docs.len(),
                counts.positive,
                counts.negative,
                counts.neutral
            );
            stats.csfd.insert(name.to_string(), counts);
        }
    }
    write_json(&layout.categories(), &allowed.unwrap_or(observed))?;
    write_json(&layout.stats(), &stats)
}

pub fn split(ctx: &Context) -> Result<()> {
    let spec = ctx.cfg.split_spec()?;
    if spec == SplitSpec::ZeroShot {
        eprintln!("zero-shot: no training split is produced");
        return Ok(());
    }
    let mut any = false;
    if ctx.cfg.needs_absa() && ctx.cfg.data.absa_train.is_some() {
        let corpus: Vec<AbsaSentence> = read_jsonl(&ctx.layout.corpus("absa_train"), "ingest")?;
        write_split(ctx, "absa_train", &corpus, spec)?;
        any = true;
    }
    if ctx.cfg.needs_csfd() && ctx.cfg.data.csfd_train.is_some() {
        let corpus: Vec<PolarityDocument> = read_jsonl(&ctx.layout.corpus("csfd_train"), "ingest")?;
        write_split(ctx, "csfd_train", &corpus, spec)?;
        any = true;
    }
    if !any {
        bail!("no training data configured (data.absa_train or data.csfd_train)");
    }
    Ok(())
}

fn write_split<T: Clone + Serialize>(ctx: &Context, name: &str, corpus: &[T], spec: SplitSpec) -> Result<()> {
    let train = make_split(corpus, spec)?;
    match ctx.cfg.val_frac {
        Some(frac) => {
            let (train, val) = hold_out_validation(&train, frac)?;
            write_jsonl_file(&ctx.layout.split(name), &train)?;
            write_jsonl_file(&ctx.layout.split(&format!("{name}_val")), &val)?;
            eprintln!("{name}: {} training, {} validation ({})", train.len(), val.len(), spec.setting_label());
        }
        None => {
            write_jsonl_file(&ctx.layout.split(name), &train)?;
            eprintln!("{name}: {} training ({})", train.len(), spec.setting_label());
        }
    }
    Ok(())
}

pub fn render(ctx: &Context) -> Result<()> {
    let (tcfg, v) = ctx.templates()?;
    for kind in Kind::needed(&ctx.cfg.tasks) {
        let examples = match kind {
            Kind::Absa | Kind::Apd => {
                let test: Vec<AbsaSentence> = read_jsonl(&ctx.layout.corpus("absa_test"), "ingest")?;
                if kind == Kind::Absa {
                    prepare_absa(&test, &tcfg, &v, ctx.cfg.max_output_units)?
                } else {
                    prepare_apd(&test, &tcfg, &v)?
                }
            }
            Kind::Sc => {
                let test: Vec<PolarityDocument> = read_jsonl(&ctx.layout.corpus("csfd_test"), "ingest")?;
                prepare_sc(&test, &tcfg, &v)?
            }
        };
        write_jsonl_file(&ctx.layout.rendered(kind), &examples)?;
        eprintln!("rendered {} {} examples ({})", examples.len(), kind.name(), ctx.cfg.regime);
    }
    Ok(())
}

fn backend_for(
    ctx: &Context,
    seed: u64,
    examples: &[PreparedExample],
    tcfg: &TemplateConfig,
    v: &Verbalizer,
) -> Result<Box<dyn Backend>> {
    Ok(match &ctx.cfg.backend {
        BackendSpec::Gold => Box::new(GoldOracle::new(gold_store(examples))),
        BackendSpec::Corrupt(d) => Box::new(CorruptionOracle::new(gold_store(examples), *d, seed, tcfg.clone(), v.clone())?),
        BackendSpec::Http(url) => {
            let mut endpoint = EndpointConfig::new(url.replace("{seed}", &seed.to_string()));
            endpoint.timeout = Duration::from_millis(ctx.cfg.http.timeout_ms);
            endpoint.retry = RetryPolicy {
                max_retries: ctx.cfg.http.max_retries,
                ..RetryPolicy::default()
            };
            Box::new(HttpBackend::new(endpoint))
        }
    })
}

pub fn predict(ctx: &Context) -> Result<()> {
    let (tcfg, v) = ctx.templates()?;
    for kind in Kind::needed(&ctx.cfg.tasks) {
        let examples: Vec<PreparedExample> = read_jsonl(&ctx.layout.rendered(kind), "render")?;
        let requests: Vec<_> = examples.iter().map(|e| e.request.clone()).collect();
        for &seed in &ctx.cfg.seeds {
            let backend = backend_for(ctx, seed, &examples, &tcfg, &v)?;
            let mut outputs = Vec::with_capacity(requests.len());
            let mut failures = Vec::new();
            for (request, result) in requests.iter().zip(run_requests(backend.as_ref(), &requests, ctx.cfg.max_in_flight)) {
                match result {
                    Ok(response) => outputs.push(RawOutput::from_response(&request.id, &response)),
                    Err(e) => failures.push(e),
                }
            }
            if let Some(first) = failures.first() {
                bail!("{} of {} {} requests failed (seed {seed}); first: {first}", failures.len(), requests.len(), kind.name());
            }
            write_jsonl_file(&ctx.layout.outputs(seed, kind), &outputs)?;
        }
        eprintln!(
            "predicted {} {} examples x {} seeds with {}",
            examples.len(),
            kind.name(),
            ctx.cfg.seeds.len(),
            ctx.cfg.backend
        );
    }
    Ok(())
}

/// Aggregated result of one run, the input of `report`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunScores {
    pub setting: String,
    pub regime: Regime,
    pub backend: BackendSpec,
    pub seeds: Vec<u64>,
    pub reports: BTreeMap<Task, MetricReport>,
}

pub fn score(ctx: &Context) -> Result<RunScores> {
    let (tcfg, v) = ctx.templates()?;
    let mut per_task: BTreeMap<Task, Vec<f64>> = BTreeMap::new();
    for &seed in &ctx.cfg.seeds {
        let mut seed_scores: Vec<TaskScore> = Vec::new();
        for kind in Kind::needed(&ctx.cfg.tasks) {
            let tasks: Vec<Task> = ctx.cfg.tasks.iter().copied().filter(|&t| Kind::of(t) == kind).collect();
            let examples: Vec<PreparedExample> = read_jsonl(&ctx.layout.rendered(kind), "render")?;
            let outputs: Vec<RawOutput> = read_jsonl(&ctx.layout.outputs(seed, kind), "predict")?;
            let eval = evaluate(&examples, &outputs, &tasks, &tcfg, &v)?;
            for (task, records) in &eval.predictions {
                write_jsonl_file(&ctx.layout.predictions(seed, *task), records)?;
            }
            seed_scores.extend(eval.scores);
        }
        for s in &seed_scores {
            per_task.entry(s.task).or_default().push(s.score);
        }
        write_json(&ctx.layout.seed_scores(seed), &seed_scores)?;
    }
    let reports = ctx
        .cfg
        .tasks
        .iter()
        .map(|&task| {
            let scores = per_task.get(&task).ok_or_else(|| anyhow!("no scores for {task}"))?;
            Ok((task, aggregate_seeds(scores, ctx.cfg.seeds.len())?.with_task(task)))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    let run = RunScores {
        setting: ctx.cfg.split_spec()?.setting_label(),
        regime: ctx.cfg.regime,
        backend: ctx.cfg.backend.clone(),
        seeds: ctx.cfg.seeds.clone(),
        reports,
    };
    for (task, r) in &run.reports {
        eprintln!("{task}: {:.1} ± {:.1}", r.mean * 100.0, r.ci95_halfwidth * 100.0);
    }
    write_json(&ctx.layout.scores(), &run)?;
    Ok(run)
}

/// Collects the `scores.json` of each run directory into one table.
pub fn report(runs: &[PathBuf], out: &Path) -> Result<ReportTable> {
    if runs.is_empty() {
        bail!("no run directories given");
    }
    let mut table = ReportTable::default();
    for dir in runs {
        let run: RunScores = read_json(&Layout::new(dir).scores(), "score")?;
        table.push(ReportRow {
            setting: run.setting,
            cells: run.reports,
        });
    }
    let layout = Layout::new(out);
    write_text(&layout.report_tsv(), &table.to_tsv())?;
    write_json(&layout.report_json(), &table)?;
    Ok(table)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool_version: &'static str,
    config_sha256: String,
    config: &'a ExperimentConfig,
    inputs: BTreeMap<String, String>,
    seeds: &'a [u64],
    outputs: BTreeMap<String, String>,
}

/// Every step in order, then a manifest tying the report to its inputs.
pub fn run_all(ctx: &Context) -> Result<ReportTable> {
    ingest(ctx)?;
    split(ctx)?;
    render(ctx)?;
    predict(ctx)?;
    score(ctx)?;
    let table = report(std::slice::from_ref(&ctx.layout.root), &ctx.layout.root)?;
    let inputs = input_files(&ctx.cfg)
        .iter()
        .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let outputs = [ctx.layout.scores(), ctx.layout.report_tsv()]
        .iter()
        .map(|p| Ok((p.strip_prefix(&ctx.layout.root)?.display().to_string(), sha256_file(p)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(&serde_json::to_vec(&ctx.cfg)?),
        config: &ctx.cfg,
        inputs,
        seeds: &ctx.cfg.seeds,
        outputs,
    };
    write_json(&ctx.layout.manifest(), &manifest)?;
    Ok(table)
}

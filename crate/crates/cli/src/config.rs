//! Experiment configuration: a TOML file, overridden by command-line flags.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use absa_promptkit::pipeline::{BackendSpec, DEFAULT_MAX_OUTPUT_UNITS};
use absa_promptkit::prompting::TemplateTables;
use absa_promptkit::{Regime, SplitSpec, Task};
use anyhow::{bail, Context as _, Result};
use serde::{Deserialize, Serialize};

/// Corpus locations. Relative paths resolve against the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub absa_train: Option<PathBuf>,
    pub absa_test: Option<PathBuf>,
    pub csfd_train: Option<PathBuf>,
    pub csfd_test: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpSettings {
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            timeout_ms: default_timeout_ms(),
            max_retries: default_retries(),
        }
    }
}

fn default_timeout_ms() -> u64 {
    60_000
}

fn default_retries() -> u32 {
    3
}

fn default_tasks() -> Vec<Task> {
    vec![Task::Acd, Task::Ate, Task::Acte, Task::Tasd]
}

fn default_regime() -> Regime {
    Regime::Traditional
}

fn default_seeds() -> Vec<u64> {
    (1..=5).collect()
}

fn default_backend() -> BackendSpec {
    BackendSpec::Gold
}

fn default_in_flight() -> usize {
    absa_promptkit::backend::DEFAULT_MAX_IN_FLIGHT
}

fn default_max_output_units() -> u32 {
    DEFAULT_MAX_OUTPUT_UNITS
}

/// ```toml
/// tasks = ["acd", "ate", "acte", "tasd"]
/// regime = "sentinel"
/// few_shot = 10
/// seeds = [1, 2, 3, 4, 5]
/// backend = "corrupt:0.3"
/// templates = "tables.toml"
/// out = "runs/sentinel-10"
///
/// [data]
/// absa_train = "data/train.xml"
/// absa_test = "data/test.xml"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub data: DataPaths,
    /// Template and verbalizer tables; built-in English tables when absent.
    #[serde(default)]
    pub templates: Option<PathBuf>,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    #[serde(default)]
    pub few_shot: Option<usize>,
    #[serde(default)]
    pub zero_shot: bool,
    /// Fraction of the training split held out for a trainer's validation.
    #[serde(default)]
    pub val_frac: Option<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_backend")]
    pub backend: BackendSpec,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_max_output_units")]
    pub max_output_units: u32,
    #[serde(default)]
    pub http: HttpSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

/// Flags that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tasks: Vec<Task>,
    pub regime: Option<Regime>,
    pub few_shot: Option<usize>,
    pub zero_shot: bool,
    pub val_frac: Option<f64>,
    pub seeds: Vec<u64>,
    pub backend: Option<BackendSpec>,
    pub out: Option<PathBuf>,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        Ok(toml::from_str(src)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::from_toml_str(&src).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.data.absa_train,
            &mut cfg.data.absa_test,
            &mut cfg.data.csfd_train,
            &mut cfg.data.csfd_test,
            &mut cfg.templates,
            &mut cfg.out,
        ] {
            resolve(base, p);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        if !o.tasks.is_empty() {
            self.tasks = o.tasks;
        }
        if let Some(r) = o.regime {
            self.regime = r;
        }
        if let Some(n) = o.few_shot {
            self.few_shot = Some(n);
            self.zero_shot = false;
        }
        if o.zero_shot {
            self.zero_shot = true;
            self.few_shot = None;
        }
        if o.val_frac.is_some() {
            self.val_frac = o.val_frac;
        }
        if !o.seeds.is_empty() {
            self.seeds = o.seeds;
        }
        if let Some(b) = o.backend {
            self.backend = b;
        }
        if o.out.is_some() {
            self.out = o.out;
        }
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        match (self.zero_shot, self.few_shot) {
            (true, Some(_)) => bail!("few_shot and zero_shot are mutually exclusive"),
            (true, None) => Ok(SplitSpec::ZeroShot),
            (false, Some(n)) => Ok(SplitSpec::few_shot(n)?),
            (false, None) => Ok(SplitSpec::Full),
        }
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .context("no output directory: set `out` in the config or pass --out")
    }

    pub fn needs_absa(&self) -> bool {
        self.tasks.iter().any(|t| *t != Task::Sc)
    }

    pub fn needs_csfd(&self) -> bool {
        self.tasks.contains(&Task::Sc)
    }

    pub fn tables(&self) -> Result<TemplateTables> {
        match &self.templates {
            Some(path) => Ok(TemplateTables::load(path)?),
            None => Ok(TemplateTables::default()),
        }
    }

    /// Checks everything that can be checked before touching the data.
    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            bail!("no tasks selected");
        }
        let unique: BTreeSet<_> = self.tasks.iter().collect();
        if unique.len() != self.tasks.len() {
            bail!("tasks are listed more than once");
        }
        if self.seeds.is_empty() {
            bail!("no seeds given");
        }
        let unique: BTreeSet<_> = self.seeds.iter().collect();
        if unique.len() != self.seeds.len() {
            bail!("seeds are listed more than once");
        }
        self.split_spec()?;
        if let Some(f) = self.val_frac {
            if !(f > 0.0 && f < 1.0) {
                bail!("val_frac must lie strictly between 0 and 1, got {f}");
            }
        }
        if self.max_in_flight == 0 {
            bail!("max_in_flight must be positive");
        }
        let has_tuple = self.tasks.iter().any(|t| t.is_tuple_task());
        let has_class = self.tasks.iter().any(|t| !t.is_tuple_task());
        match self.regime {
            Regime::Mlm if has_tuple => bail!("the mlm regime only serves apd and sc; drop the tuple tasks"),
            Regime::Sentinel | Regime::Mask if has_class => bail!(
                "apd and sc run under the mlm or traditional regime, not {}",
                self.regime
            ),
            _ => {}
        }
        if self.needs_absa() && self.data.absa_test.is_none() {
            bail!("tasks {:?} need data.absa_test", self.tasks);
        }
        if self.needs_csfd() && self.data.csfd_test.is_none() {
            bail!("task sc needs data.csfd_test");
        }
        Ok(())
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use slicefind::dataset::{load_embeddings, ScoresDocument, SliceDescription};
use slicefind::describe::{describe_slices, name_recall_at_k, DescribeError, PhraseCorpus};
use slicefind::evaluate::{
    render_markdown, score_against_truth, EvalConfig, EvalReport, SettingResult,
};
use slicefind::generate::{build_setting, BaseTable, GenError, GenerationConfig, PredictionSource};
use slicefind::method::{fit_method, FittedMethod, Method, MethodsConfig};
use slicefind::mixture::ModelDocument;
use slicefind::pipeline::{
    evaluate_manifest, load_report, synth_grid, write_json, write_report, EvalPlan, Manifest,
    PipelineError, SynthConfig, MANIFEST_FILE, REPORT_JSON, REPORT_MD,
};
use slicefind::Setting;

use crate::args::{DescribeArgs, EvalArgs, GenArgs, PhraseArgs, ReportArgs, RunArgs, SynthArgs};

pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config; exit code 2.
    Usage(String),
    /// Anything that fails while running; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => CliError::Usage(e.to_string()),
            PipelineError::Generation {
                source: GenError::AlphaOutOfRange { .. },
                ..
            } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Whether every result row failed; such runs exit 1 but keep their report.
pub type AllFailed = bool;

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Output directory that can be rolled back when a command fails: a
/// directory the command created is removed whole, otherwise only the
/// tracked entries are.
struct Output {
    dir: PathBuf,
    created: bool,
    tracked: Vec<PathBuf>,
}

impl Output {
    fn prepare(dir: &Path) -> Result<Self, CliError> {
        let created = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created,
            tracked: Vec::new(),
        })
    }

    fn path(&mut self, name: impl AsRef<Path>) -> PathBuf {
        let p = self.dir.join(name);
        self.tracked.push(p.clone());
        p
    }

    fn discard(self) {
        if self.created {
            let _ = fs::remove_dir_all(&self.dir);
            return;
        }
        for p in self.tracked {
            let _ = if p.is_dir() {
                fs::remove_dir_all(&p)
            } else {
                fs::remove_file(&p)
            };
        }
    }
}

fn with_output<R>(
    dir: &Path,
    body: impl FnOnce(&mut Output) -> Result<R, CliError>,
) -> Result<R, CliError> {
    let mut out = Output::prepare(dir)?;
    match body(&mut out) {
        Ok(r) => Ok(r),
        Err(e) => {
            log::warn!("removing partial outputs under {}", dir.display());
            out.discard();
            Err(e)
        }
    }
}

pub fn synth(args: &SynthArgs) -> Result<AllFailed, CliError> {
    let mut cfg: SynthConfig = read_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    with_output(&args.out, |out| {
        for p in cfg.grid() {
            out.path(&p.id);
        }
        out.path(MANIFEST_FILE);
        write_json(&cfg, out.path(CONFIG_FILE))?;
        let manifest = synth_grid(&cfg, &args.out, args.jobs)?;
        log::info!(
            "wrote {} settings to {}",
            manifest.settings.len(),
            args.out.display()
        );
        println!(
            "{}",
            serde_json::to_string_pretty(&manifest).map_err(runtime)?
        );
        Ok(false)
    })
}

/// Generation config as resolved, with the base inputs it was applied to.
#[derive(Serialize)]
struct ResolvedGen<'a> {
    #[serde(flatten)]
    config: &'a GenerationConfig,
    base: &'a Path,
    embeddings: &'a Path,
}

pub fn gen(args: &GenArgs) -> Result<AllFailed, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.config.display())))?;
    let mut cfg: GenerationConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        cfg.request.seed = seed;
    }
    let base = BaseTable::load(&args.base).map_err(runtime)?;
    let emb = load_embeddings::<f64>(&args.embeddings).map_err(runtime)?;
    let config_dir = args.config.parent().unwrap_or(Path::new("."));
    let source = PredictionSource::from_config(&cfg.model, config_dir).map_err(runtime)?;
    let setting =
        build_setting(cfg.slice_type, &base, &emb, &cfg.request, &source).map_err(|e| match e {
            GenError::AlphaOutOfRange { .. }
            | GenError::InfeasibleCounts { .. }
            | GenError::InvalidInput(_) => CliError::Usage(e.to_string()),
            other => runtime(other),
        })?;
    with_output(&args.out, |out| {
        for name in [
            "valid.emb",
            "valid.csv",
            "test.emb",
            "test.csv",
            "setting.json",
        ] {
            out.path(name);
        }
        setting.save(&args.out).map_err(runtime)?;
        let resolved = ResolvedGen {
            config: &cfg,
            base: &args.base,
            embeddings: &args.embeddings,
        };
        write_json(&resolved, out.path(CONFIG_FILE))?;
        log::info!(
            "{} setting: {} validation / {} test examples",
            setting.slice_type,
            setting.valid.1.n(),
            setting.test.1.n()
        );
        Ok(false)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescribeConfig {
    pub phrases: Option<PathBuf>,
    pub phrase_emb: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub top: usize,
    pub cosine: bool,
}

impl Default for DescribeConfig {
    fn default() -> Self {
        Self {
            phrases: None,
            phrase_emb: None,
            synonyms: None,
            top: 10,
            cosine: false,
        }
    }
}

impl DescribeConfig {
    fn apply(&mut self, a: &PhraseArgs) {
        if a.phrases.is_some() {
            self.phrases.clone_from(&a.phrases);
            self.phrase_emb.clone_from(&a.phrase_emb);
        }
        if a.synonyms.is_some() {
            self.synonyms.clone_from(&a.synonyms);
        }
        if let Some(top) = a.top {
            self.top = top;
        }
        self.cosine |= a.cosine;
    }

    fn corpus(&self) -> Result<Option<PhraseCorpus>, CliError> {
        let Some(phrases) = &self.phrases else {
            return Ok(None);
        };
        let emb = self
            .phrase_emb
            .clone()
            .unwrap_or_else(|| phrases.with_extension("emb"));
        let mut corpus = PhraseCorpus::load(phrases, emb).map_err(runtime)?;
        if let Some(syn) = &self.synonyms {
            corpus = corpus.with_synonyms_file(syn).map_err(runtime)?;
        }
        Ok(Some(corpus))
    }
}

/// Config file of `run` and `describe`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub method: Option<Method>,
    pub methods: MethodsConfig,
    pub eval: EvalConfig,
    pub describe: DescribeConfig,
}

fn resolve_run(
    config: Option<&Path>,
    method: Option<Method>,
    seed: Option<u64>,
    params: &crate::args::MethodFlags,
    phrases: &PhraseArgs,
) -> Result<RunConfig, CliError> {
    let mut cfg: RunConfig = read_config(config)?;
    if method.is_some() {
        cfg.method = method;
    }
    if cfg.method.is_none() {
        return Err(CliError::Usage(format!(
            "no method given; pass --method with one of: {}",
            Method::ALL.map(|m| m.as_str()).join(", ")
        )));
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    params.apply(&mut cfg.methods);
    cfg.methods = cfg.methods.with_seed(cfg.seed);
    cfg.describe.apply(phrases);
    Ok(cfg)
}

fn load_setting(dir: &Path) -> Result<Setting, CliError> {
    Setting::load(dir).map_err(|e| runtime(format!("setting {}: {e}", dir.display())))
}

fn fit_on_valid(setting: &Setting, cfg: &RunConfig) -> Result<FittedMethod, CliError> {
    let method = cfg.method.expect("resolved");
    let (emb, split) = &setting.valid;
    fit_method(method, &cfg.methods, emb, split).map_err(|e| runtime(format!("{method}: {e}")))
}

fn describe_valid(
    setting: &Setting,
    fitted: &FittedMethod,
    corpus: &PhraseCorpus,
    cfg: &DescribeConfig,
) -> Result<Vec<SliceDescription>, CliError> {
    let (emb, split) = &setting.valid;
    let scores = fitted.score(emb, split).map_err(runtime)?;
    describe_slices(emb, split, &scores, corpus, cfg.top, cfg.cosine).map_err(|e| match e {
        DescribeError::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
        other => runtime(other),
    })
}

pub fn run(args: &RunArgs) -> Result<AllFailed, CliError> {
    let mut cfg = resolve_run(
        args.config.as_deref(),
        args.method,
        args.seed,
        &args.params,
        &args.phrases,
    )?;
    if let Some(k) = args.k {
        cfg.eval.k = k;
    }
    let corpus = cfg.describe.corpus()?;
    let setting = load_setting(&args.setting)?;
    let fitted = fit_on_valid(&setting, &cfg)?;
    let (test_emb, test_split) = &setting.test;
    let scores = fitted.score(test_emb, test_split).map_err(runtime)?;
    let mut doc = ScoresDocument::from_scores(&scores);
    if let Some(corpus) = &corpus {
        doc.slice_descriptions = Some(describe_valid(&setting, &fitted, corpus, &cfg.describe)?);
    }
    let outcomes = if test_split.num_slices() > 0 {
        Some(score_against_truth(&scores, test_split, &cfg.eval).map_err(runtime)?)
    } else {
        None
    };
    with_output(&args.out, |out| {
        doc.save(out.path("scores.json")).map_err(runtime)?;
        match &fitted {
            FittedMethod::Domino(fit) => ModelDocument::from_fit(fit)
                .save(out.path("model.json"))
                .map_err(runtime)?,
            other => write_json(&other.summary(), out.path("fit.json"))?,
        }
        write_json(&cfg, out.path(CONFIG_FILE))?;
        Ok(())
    })?;
    for o in outcomes.iter().flatten() {
        println!(
            "{}: precision@{} = {:.3} (discovered slice {}), degraded = {}",
            o.name, cfg.eval.k, o.precision_at_k, o.best_slice, o.degraded
        );
    }
    Ok(false)
}

#[derive(Debug, Serialize)]
struct RecallRow {
    name: String,
    synonyms: Vec<String>,
    k: usize,
    hit: bool,
}

#[derive(Debug, Serialize)]
struct DescribeOutput {
    slice_descriptions: Vec<SliceDescription>,
    name_recall: Vec<RecallRow>,
}

pub fn describe(args: &DescribeArgs) -> Result<AllFailed, CliError> {
    let cfg = resolve_run(
        args.config.as_deref(),
        args.method,
        args.seed,
        &args.params,
        &args.phrases,
    )?;
    let corpus = cfg
        .describe
        .corpus()?
        .ok_or_else(|| CliError::Usage("describe needs --phrases (and --phrase-emb)".into()))?;
    let setting = load_setting(&args.setting)?;
    let fitted = fit_on_valid(&setting, &cfg)?;
    let descriptions = describe_valid(&setting, &fitted, &corpus, &cfg.describe)?;
    let names: Vec<String> = match &args.slice_name {
        Some(n) => vec![n.clone()],
        None => setting.valid.1.slice_names().to_vec(),
    };
    let mut recall = Vec::new();
    for name in &names {
        let synonyms = corpus.synonyms_for(name);
        for k in [1, 5, 10] {
            let hit = descriptions
                .iter()
                .any(|d| name_recall_at_k(&d.phrases, name, &synonyms, k));
            recall.push(RecallRow {
                name: name.clone(),
                synonyms: synonyms.clone(),
                k,
                hit,
            });
        }
    }
    for d in &descriptions {
        let top: Vec<&str> = d
            .phrases
            .iter()
            .take(5)
            .map(|p| p.phrase.as_str())
            .collect();
        println!(
            "slice {} (class {}): {}",
            d.slice,
            d.dominant_class,
            top.join(" | ")
        );
    }
    for r in &recall {
        println!("name recall@{} for {}: {}", r.k, r.name, r.hit);
    }
    let output = DescribeOutput {
        slice_descriptions: descriptions,
        name_recall: recall,
    };
    with_output(&args.out, |out| {
        write_json(&output, out.path("descriptions.json"))?;
        write_json(&cfg, out.path(CONFIG_FILE))?;
        Ok(false)
    })
}

/// Resolved `eval` config.
#[derive(Debug, Serialize)]
struct ResolvedEval<'a> {
    #[serde(flatten)]
    plan: &'a EvalPlan,
    manifest: &'a Path,
    jobs: usize,
}

fn all_failed(results: &[SettingResult]) -> bool {
    !results.is_empty() && results.iter().all(|r| r.error.is_some())
}

pub fn eval(args: &EvalArgs) -> Result<AllFailed, CliError> {
    let mut plan: EvalPlan = read_config(args.config.as_deref())?;
    if !args.method.is_empty() {
        plan.selected.clone_from(&args.method);
    }
    if let Some(s) = args.seed {
        plan.seed = s;
    }
    if let Some(k) = args.k {
        plan.eval.k = k;
    }
    if let Some(b) = args.beta {
        plan.eval.beta = b;
    }
    args.params.apply(&mut plan.config);
    if plan.eval.k == 0 {
        return Err(CliError::Usage("k must be at least 1".into()));
    }
    let manifest = Manifest::load(&args.manifest).map_err(|e| match e {
        PipelineError::Json(_) | PipelineError::Config(_) => CliError::Usage(e.to_string()),
        other => runtime(other),
    })?;
    let root = args.manifest.parent().unwrap_or(Path::new("."));
    log::info!(
        "evaluating {} settings x {} methods on {} threads",
        manifest.settings.len(),
        plan.selected.len(),
        args.jobs
    );
    let (report, timings) = evaluate_manifest(&manifest, root, &plan, args.jobs)?;
    with_output(&args.out, |out| {
        for name in [REPORT_JSON, REPORT_MD, slicefind::pipeline::TIMINGS_FILE] {
            out.path(name);
        }
        write_report(&report, &timings, &args.out)?;
        let resolved = ResolvedEval {
            plan: &plan,
            manifest: &args.manifest,
            jobs: args.jobs,
        };
        write_json(&resolved, out.path(CONFIG_FILE))?;
        Ok(())
    })?;
    print!("{}", render_markdown(&report));
    let failed = all_failed(&report.results);
    if failed {
        log::error!(
            "every setting failed; see {}",
            args.out.join(REPORT_MD).display()
        );
    }
    Ok(failed)
}

pub fn report(args: &ReportArgs) -> Result<AllFailed, CliError> {
    let mut results = Vec::new();
    let mut params: Option<(usize, f64, u64)> = None;
    for path in &args.inputs {
        let r: EvalReport = load_report(path).map_err(|e| match e {
            PipelineError::Json(_) => CliError::Usage(format!("{}: {e}", path.display())),
            other => runtime(other),
        })?;
        match params {
            None => params = Some((r.k, r.beta, r.seed)),
            Some((k, beta, _)) if k != r.k || beta != r.beta => {
                return Err(CliError::Usage(format!(
                    "{} was computed with k={} beta={}, the first input with k={k} beta={beta}",
                    path.display(),
                    r.k,
                    r.beta
                )))
            }
            Some(_) => {}
        }
        results.extend(r.results);
    }
    let (k, beta, seed) = params.expect("at least one input");
    let merged = EvalReport::new(results, k, beta, args.seed.unwrap_or(seed));
    let md = render_markdown(&merged);
    if let Some(dir) = &args.out {
        with_output(dir, |out| {
            write_json(&merged, out.path(REPORT_JSON))?;
            let p = out.path(REPORT_MD);
            fs::write(&p, &md).map_err(|e| runtime(format!("{}: {e}", p.display())))
        })?;
    }
    print!("{md}");
    Ok(all_failed(&merged.results))
}

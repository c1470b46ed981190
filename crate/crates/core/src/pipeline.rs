//! Batch plumbing: synthetic setting grids, manifests, and manifest-driven
//! evaluation.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataError, SliceType};
use crate::evaluate::{render_markdown, run_setting, EvalConfig, EvalReport, SettingResult};
use crate::generate::{
    build_setting, synth_embeddings, BaseTable, ClusterLayout, GenError, PredictionSource,
    SliceRequest, SyntheticModelSpec,
};
use crate::method::{Method, MethodsConfig};
use crate::rng::derive_seed;
use crate::Setting;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("setting {id}: {source}")]
    Generation { id: String, source: GenError },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json<S: Serialize>(value: &S, path: impl AsRef<Path>) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Fully synthetic benchmark grid: Gaussian cluster embeddings, a planted
/// attribute, and beta-distributed model predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub slice_types: Vec<SliceType>,
    pub alphas: Vec<f64>,
    /// Independent draws per (slice type, alpha).
    pub replicates: usize,
    /// Examples per setting, split evenly into validation and test.
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    /// Distance between class means in units of sigma.
    pub class_sep: f64,
    /// Displacement of attribute members in units of sigma.
    pub offset_norm: f64,
    /// Base rows per (label, attribute) cell; defaults to `n`.
    pub base_per_cell: Option<usize>,
    pub mu_a: f64,
    pub mu_b: f64,
    pub model: SyntheticModelSpec,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            slice_types: vec![SliceType::Rare],
            alphas: vec![0.02, 0.05, 0.08],
            replicates: 5,
            n: 4000,
            d: 32,
            sigma: 1.0,
            class_sep: 2.0,
            offset_norm: 4.0,
            base_per_cell: None,
            mu_a: 0.5,
            mu_b: 0.5,
            model: SyntheticModelSpec::natural_image(0),
            seed: 0,
        }
    }
}

/// One cell of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub id: String,
    pub slice_type: SliceType,
    pub alpha: f64,
    pub replicate: usize,
}

impl SynthConfig {
    /// Grid points in slice type, alpha, replicate order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &slice_type in &self.slice_types {
            for &alpha in &self.alphas {
                for replicate in 0..self.replicates {
                    out.push(GridPoint {
                        id: format!("{slice_type}-a{alpha}-r{replicate:03}"),
                        slice_type,
                        alpha,
                        replicate,
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.slice_types.is_empty() || self.alphas.is_empty() || self.replicates == 0 {
            return bad("grid is empty (need slice_types, alphas and replicates >= 1)".into());
        }
        if self.n < 4 {
            return bad(format!("n = {} (need n >= 4)", self.n));
        }
        if self.d < 2 {
            return bad(format!("d = {} (need d >= 2)", self.d));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {} must be positive", self.sigma));
        }
        for (name, v) in [("mu_a", self.mu_a), ("mu_b", self.mu_b)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} = {v} must lie in (0, 1)"));
            }
        }
        if !(self.model.kappa > 0.0) {
            return bad(format!(
                "model.kappa = {} must be positive",
                self.model.kappa
            ));
        }
        for p in self.grid() {
            if !p.slice_type.alpha_is_legal(p.alpha) {
                let (lo, hi, inclusive) = p.slice_type.alpha_range();
                let (l, r) = if inclusive { ('[', ']') } else { ('(', ')') };
                return bad(format!(
                    "grid point {}: alpha {} is outside the {} range {l}{lo}, {hi}{r}",
                    p.id, p.alpha, p.slice_type
                ));
            }
        }
        Ok(())
    }

    fn layout(&self) -> ClusterLayout {
        let per = self.base_per_cell.unwrap_or(self.n);
        ClusterLayout::two_class(
            self.d,
            self.sigma,
            self.class_sep,
            self.offset_norm,
            [[per, per], [per, per]],
        )
    }

    /// Builds the setting at grid point `p`. Every random draw is keyed by
    /// the master seed and the point id.
    pub fn build(&self, p: &GridPoint) -> Result<Setting, GenError> {
        let (emb, split) = synth_embeddings::<f64>(
            &self.layout(),
            derive_seed(self.seed, &["synth", &p.id, "base"]),
        )?;
        let base = BaseTable::from_split(&split, "target")?;
        let req = SliceRequest {
            target: "target".into(),
            attribute: split.slice_names()[0].clone(),
            alpha: p.alpha,
            n: self.n,
            mu_a: self.mu_a,
            mu_b: self.mu_b,
            seed: derive_seed(self.seed, &["synth", &p.id, "setting"]),
        };
        build_setting(
            p.slice_type,
            &base,
            &emb,
            &req,
            &PredictionSource::Synthetic(self.model),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Setting directory, relative to the manifest.
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_type: Option<SliceType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub settings: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        write_json(self, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let m: Self = serde_json::from_str(&text)?;
        let mut ids: Vec<&str> = m.settings.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(PipelineError::Config(format!(
                "duplicate setting id {}",
                w[0]
            )));
        }
        Ok(m)
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))
}

/// Generates every grid point under `out`, one directory per point, plus
/// the manifest. Points are generated on `jobs` threads and written in grid
/// order; nothing is written unless every point succeeds.
pub fn synth_grid(cfg: &SynthConfig, out: &Path, jobs: usize) -> Result<Manifest, PipelineError> {
    cfg.validate()?;
    let grid = cfg.grid();
    let settings: Vec<Setting> = pool(jobs)?.install(|| {
        grid.par_iter()
            .map(|p| {
                cfg.build(p).map_err(|source| PipelineError::Generation {
                    id: p.id.clone(),
                    source,
                })
            })
            .collect::<Result<_, _>>()
    })?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut entries = Vec::with_capacity(grid.len());
    for (p, s) in grid.iter().zip(&settings) {
        s.save(out.join(&p.id))?;
        entries.push(ManifestEntry {
            id: p.id.clone(),
            path: PathBuf::from(&p.id),
            slice_type: Some(p.slice_type),
            alpha: Some(p.alpha),
        });
    }
    let manifest = Manifest {
        seed: cfg.seed,
        settings: entries,
    };
    manifest.save(out.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// What `eval` runs over a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalPlan {
    /// Methods to run on every setting.
    #[serde(rename = "method")]
    pub selected: Vec<Method>,
    /// Per-method hyperparameters.
    #[serde(rename = "methods")]
    pub config: MethodsConfig,
    pub eval: EvalConfig,
    pub seed: u64,
}

impl Default for EvalPlan {
    fn default() -> Self {
        Self {
            selected: vec![Method::Domino, Method::Confusion],
            config: MethodsConfig::default(),
            eval: EvalConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub setting_id: String,
    pub method: Method,
    pub seconds: f64,
}

/// Runs every (setting, method) pair over a worker pool of `jobs` threads.
/// Method seeds derive from the plan seed and the setting id, so results
/// do not depend on `jobs`. Unloadable settings become error rows.
pub fn evaluate_manifest(
    manifest: &Manifest,
    root: &Path,
    plan: &EvalPlan,
    jobs: usize,
) -> Result<(EvalReport, Vec<Timing>), PipelineError> {
    if plan.selected.is_empty() {
        return Err(PipelineError::Config("no methods selected".into()));
    }
    let results: Vec<SettingResult> = pool(jobs)?.install(|| {
        manifest
            .settings
            .par_iter()
            .flat_map_iter(|entry| evaluate_entry(entry, root, plan))
            .collect()
    });
    let timings = results
        .iter()
        .map(|r| Timing {
            setting_id: r.setting_id.clone(),
            method: r.method,
            seconds: r.wall_time,
        })
        .collect();
    Ok((
        EvalReport::new(results, plan.eval.k, plan.eval.beta, plan.seed),
        timings,
    ))
}

fn evaluate_entry(entry: &ManifestEntry, root: &Path, plan: &EvalPlan) -> Vec<SettingResult> {
    match Setting::load(root.join(&entry.path)) {
        Ok(setting) => {
            let methods = plan
                .config
                .with_seed(derive_seed(plan.seed, &["method", &entry.id]));
            plan.selected
                .iter()
                .map(|&m| run_setting(&entry.id, &setting, m, &methods, &plan.eval))
                .collect()
        }
        Err(e) => {
            log::error!("{}: {e}", entry.id);
            plan.selected
                .iter()
                .map(|&m| SettingResult::failed(&entry.id, m, None, e.to_string()))
                .collect()
        }
    }
}

/// Writes `report.json`, `report.md`, and `timings.json` into `out`.
pub fn write_report(
    report: &EvalReport,
    timings: &[Timing],
    out: &Path,
) -> Result<(), PipelineError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_json(report, out.join(REPORT_JSON))?;
    let md = out.join(REPORT_MD);
    fs::write(&md, render_markdown(report)).map_err(io_err(&md))?;
    write_json(&timings, out.join(TIMINGS_FILE))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<EvalReport, PipelineError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{
    argmax_lower, DataError, EmbeddingMatrix, LabeledSplit, ModelKind, SchemaError, SliceSetting,
    SliceType, SplitParts,
};
use crate::rng;
use crate::scalar::Scalar;

use super::{correlation_counts, synth_predictions, BaseTable, GenError, SyntheticModelSpec};

/// Subsampling parameters shared by the three builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRequest {
    pub target: String,
    pub attribute: String,
    pub alpha: f64,
    pub n: usize,
    /// Target mean of Y (class balance).
    #[serde(default = "half")]
    pub mu_a: f64,
    /// Target mean of C; used by correlation settings only.
    #[serde(default = "half")]
    pub mu_b: f64,
    #[serde(default)]
    pub seed: u64,
}

fn half() -> f64 {
    0.5
}

/// Model section of a generation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelConfig {
    Synthetic(SyntheticModelSpec),
    /// Path to a CSV `id,y_hat[,p_0..p_{C-1}]` with one row per base row.
    Ingested(PathBuf),
}

/// Generation config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub slice_type: SliceType,
    #[serde(flatten)]
    pub request: SliceRequest,
    pub model: ModelConfig,
}

/// Where the predictions of a generated setting come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictionSource {
    /// Seeds inside the model settings are replaced by per-split derived seeds.
    Synthetic(SyntheticModelSpec),
    /// Predictions of a trained model, one entry per base row.
    Ingested {
        predictions: Vec<usize>,
        probs: Option<Vec<Vec<f64>>>,
    },
}

impl PredictionSource {
    pub fn from_config(model: &ModelConfig, base_dir: &Path) -> Result<Self, GenError> {
        match model {
            ModelConfig::Synthetic(spec) => Ok(PredictionSource::Synthetic(*spec)),
            ModelConfig::Ingested(path) => Self::load_ingested(base_dir.join(path)),
        }
    }

    pub fn load_ingested(path: impl AsRef<Path>) -> Result<Self, GenError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path.as_ref())
            .map_err(DataError::from)?;
        let headers = reader.headers().map_err(DataError::from)?.clone();
        let pred_col = headers
            .iter()
            .position(|h| h == "y_hat")
            .ok_or_else(|| DataError::from(SchemaError::MissingColumn("y_hat".into())))?;
        let prob_cols: Vec<usize> = (0..)
            .map_while(|k| headers.iter().position(|h| h == format!("p_{k}")))
            .collect();
        let mut predictions = Vec::new();
        let mut probs = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(DataError::from)?;
            let bad = |column: &str, value: &str| {
                GenError::from(DataError::from(SchemaError::BadValue {
                    row,
                    column: column.into(),
                    value: value.into(),
                }))
            };
            let p: Vec<f64> = prob_cols
                .iter()
                .map(|&c| {
                    let field = record.get(c).unwrap_or("");
                    field.parse::<f64>().map_err(|_| bad("p", field))
                })
                .collect::<Result<_, _>>()?;
            let field = record.get(pred_col).unwrap_or("");
            let pred = if field.is_empty() && !p.is_empty() {
                argmax_lower(&p)
            } else {
                field.parse::<usize>().map_err(|_| bad("y_hat", field))?
            };
            predictions.push(pred);
            if !p.is_empty() {
                probs.push(p);
            }
        }
        Ok(PredictionSource::Ingested {
            predictions,
            probs: (!prob_cols.is_empty()).then_some(probs),
        })
    }

    fn model_kind(&self) -> ModelKind {
        match self {
            PredictionSource::Synthetic(_) => ModelKind::Synthetic,
            PredictionSource::Ingested { .. } => ModelKind::TrainedIngested,
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            PredictionSource::Synthetic(spec) => json!({
                "kind": "synthetic",
                "sens_in": spec.sens_in,
                "spec_in": spec.spec_in,
                "sens_out": spec.sens_out,
                "spec_out": spec.spec_out,
                "kappa": spec.kappa,
            }),
            PredictionSource::Ingested { probs, .. } => json!({
                "kind": "ingested",
                "has_probabilities": probs.is_some(),
            }),
        }
    }
}

fn check_alpha(slice_type: SliceType, alpha: f64) -> Result<(), GenError> {
    if slice_type.alpha_is_legal(alpha) {
        Ok(())
    } else {
        Err(GenError::AlphaOutOfRange { slice_type, alpha })
    }
}

fn check_base<T: Scalar>(
    base: &BaseTable,
    emb: &EmbeddingMatrix<T>,
    source: &PredictionSource,
) -> Result<(), GenError> {
    if emb.n() != base.n() {
        return Err(DataError::RowCountMismatch {
            labels: base.n(),
            embeddings: emb.n(),
        }
        .into());
    }
    if let PredictionSource::Ingested { predictions, .. } = source {
        if predictions.len() != base.n() {
            return Err(GenError::InvalidInput(format!(
                "{} ingested predictions for {} base rows",
                predictions.len(),
                base.n()
            )));
        }
    }
    Ok(())
}

/// Draws `needed` rows from a cell without replacement; returned ascending.
fn sample_cell(
    cell: &[usize],
    needed: usize,
    label: &str,
    rng: &mut rng::StreamRng,
) -> Result<Vec<usize>, GenError> {
    if needed > cell.len() {
        return Err(GenError::InsufficientBase {
            cell: label.to_string(),
            needed,
            available: cell.len(),
        });
    }
    let mut picked: Vec<usize> = index::sample(rng, cell.len(), needed)
        .into_iter()
        .map(|i| cell[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

struct Draft {
    rows: Vec<usize>,
    labels: Vec<usize>,
    slice: Vec<bool>,
}

#[allow(clippy::too_many_arguments)]
fn assemble<T: Scalar>(
    draft: Draft,
    base: &BaseTable,
    emb: &EmbeddingMatrix<T>,
    source: &PredictionSource,
    slice_type: SliceType,
    req: &SliceRequest,
    mut provenance: serde_json::Value,
    extra_flips: Option<Vec<usize>>,
) -> Result<SliceSetting<T>, GenError> {
    let n = draft.rows.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(req.seed, &["split"]));
    // alternate within each (label, slice) stratum so both halves keep the
    // drawn cell proportions
    let mut seen = std::collections::HashMap::new();
    let (mut valid_pos, mut test_pos) =
        (Vec::with_capacity(n / 2 + 2), Vec::with_capacity(n / 2 + 2));
    for p in order {
        let count = seen
            .entry((draft.labels[p], draft.slice[p]))
            .or_insert(0usize);
        if *count % 2 == 0 {
            valid_pos.push(p)
        } else {
            test_pos.push(p)
        }
        *count += 1;
    }
    let (valid_pos, test_pos) = (valid_pos.as_slice(), test_pos.as_slice());
    if valid_pos.is_empty() || test_pos.is_empty() {
        return Err(GenError::InvalidInput(format!(
            "n = {n} is too small to split"
        )));
    }

    let build =
        |positions: &[usize], name: &str| -> Result<(EmbeddingMatrix<T>, LabeledSplit), GenError> {
            let rows: Vec<usize> = positions.iter().map(|&p| draft.rows[p]).collect();
            let labels: Vec<usize> = positions.iter().map(|&p| draft.labels[p]).collect();
            let slice: Vec<bool> = positions.iter().map(|&p| draft.slice[p]).collect();
            let sub_emb = emb.select_rows(&rows)?;
            let (predictions, probs) = match source {
                PredictionSource::Ingested { predictions, probs } => (
                    rows.iter().map(|&r| predictions[r]).collect(),
                    probs
                        .as_ref()
                        .map(|p| rows.iter().map(|&r| p[r].clone()).collect()),
                ),
                PredictionSource::Synthetic(_) => (labels.clone(), None),
            };
            let num_classes = match source {
                PredictionSource::Ingested { probs: Some(p), .. } => p.first().map_or(2, Vec::len),
                PredictionSource::Ingested { predictions, .. } => {
                    predictions.iter().max().map_or(2, |&m| (m + 1).max(2))
                }
                PredictionSource::Synthetic(_) => 2,
            };
            let split = LabeledSplit::new(SplitParts {
                num_classes,
                labels,
                predictions,
                prediction_probs: probs,
                slice_names: vec![req.attribute.clone()],
                slices: vec![slice],
            })?;
            let split = match source {
                PredictionSource::Synthetic(spec) => synth_predictions(
                    split,
                    &spec.with_seed(rng::derive_seed(req.seed, &["model", name])),
                )?,
                PredictionSource::Ingested { .. } => split,
            };
            Ok((sub_emb, split))
        };
    let valid = build(valid_pos, "valid")?;
    let test = build(test_pos, "test")?;

    let base_rows =
        |positions: &[usize]| positions.iter().map(|&p| draft.rows[p]).collect::<Vec<_>>();
    let obj = provenance.as_object_mut().expect("provenance is an object");
    obj.insert("target".into(), json!(req.target));
    obj.insert("attribute".into(), json!(req.attribute));
    obj.insert("alpha".into(), json!(req.alpha));
    obj.insert("n".into(), json!(req.n));
    obj.insert("mu_a".into(), json!(req.mu_a));
    obj.insert("seed".into(), json!(req.seed));
    obj.insert("base_rows_total".into(), json!(base.n()));
    obj.insert("model".into(), source.describe());
    obj.insert(
        "base_rows".into(),
        json!({ "valid": base_rows(valid_pos), "test": base_rows(test_pos) }),
    );
    if let Some(flipped) = extra_flips {
        // base rows whose label was flipped; the original label is 1 - y
        let by_split = |positions: &[usize]| {
            positions
                .iter()
                .enumerate()
                .filter(|(_, p)| flipped.contains(&draft.rows[**p]))
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        };
        obj.insert(
            "flipped_ids".into(),
            json!({ "valid": by_split(valid_pos), "test": by_split(test_pos) }),
        );
    }

    Ok(SliceSetting::new(
        valid,
        test,
        slice_type,
        req.alpha,
        source.model_kind(),
        req.seed,
        provenance,
    )?)
}

/// Subsamples `base` so that Y and C have Pearson correlation `alpha`; the
/// slice is `1[C != Y]`.
pub fn build_correlation_setting<T: Scalar>(
    base: &BaseTable,
    emb: &EmbeddingMatrix<T>,
    req: &SliceRequest,
    source: &PredictionSource,
) -> Result<SliceSetting<T>, GenError> {
    check_alpha(SliceType::Correlation, req.alpha)?;
    check_base(base, emb, source)?;
    let counts = correlation_counts(req.alpha, req.mu_a, req.mu_b, req.n)?;
    let cells = base.cells(&req.target, &req.attribute)?;
    let mut rng = rng::stream(req.seed, &["subsample"]);
    let mut draft = Draft {
        rows: Vec::with_capacity(req.n),
        labels: Vec::with_capacity(req.n),
        slice: Vec::with_capacity(req.n),
    };
    for (y, c) in [(1usize, 1usize), (1, 0), (0, 1), (0, 0)] {
        let picked = sample_cell(
            &cells[y][c],
            counts.cell(y, c),
            &format!("y={y},c={c}"),
            &mut rng,
        )?;
        let k = picked.len();
        draft.rows.extend(picked);
        draft.labels.extend(std::iter::repeat_n(y, k));
        draft.slice.extend(std::iter::repeat_n(c != y, k));
    }
    let provenance = json!({
        "generator": "correlation",
        "mu_b": req.mu_b,
        "cell_counts": counts,
    });
    assemble(
        draft,
        base,
        emb,
        source,
        SliceType::Correlation,
        req,
        provenance,
        None,
    )
}

/// Subsamples so that a fraction `alpha` of the positive class belongs to
/// subclass C; the slice is `1[Y = 1 and C = 1]`. Negatives are drawn from
/// rows with `Y = 0, C = 0`, so C only occurs inside the positive class.
pub fn build_rare_setting<T: Scalar>(
    base: &BaseTable,
    emb: &EmbeddingMatrix<T>,
    req: &SliceRequest,
    source: &PredictionSource,
) -> Result<SliceSetting<T>, GenError> {
    check_alpha(SliceType::Rare, req.alpha)?;
    check_base(base, emb, source)?;
    if !(req.mu_a > 0.0 && req.mu_a < 1.0) {
        return Err(GenError::InvalidInput(format!(
            "mu_a {} must lie in (0, 1)",
            req.mu_a
        )));
    }
    let n_pos = (req.mu_a * req.n as f64).round() as usize;
    let n_slice = (req.alpha * n_pos as f64).round() as usize;
    let plan = [
        (1usize, 1usize, n_slice),
        (1, 0, n_pos - n_slice),
        (0, 0, req.n - n_pos),
    ];
    let cells = base.cells(&req.target, &req.attribute)?;
    let mut rng = rng::stream(req.seed, &["subsample"]);
    let mut draft = Draft {
        rows: Vec::with_capacity(req.n),
        labels: Vec::with_capacity(req.n),
        slice: Vec::with_capacity(req.n),
    };
    for (y, c, needed) in plan {
        let picked = sample_cell(&cells[y][c], needed, &format!("y={y},c={c}"), &mut rng)?;
        let k = picked.len();
        draft.rows.extend(picked);
        draft.labels.extend(std::iter::repeat_n(y, k));
        draft.slice.extend(std::iter::repeat_n(y == 1 && c == 1, k));
    }
    let provenance = json!({
        "generator": "rare",
        "positives": n_pos,
        "slice_members": n_slice,
    });
    assemble(
        draft,
        base,
        emb,
        source,
        SliceType::Rare,
        req,
        provenance,
        None,
    )
}

/// Subsamples with class balance `mu_a` and flips the label of each
/// subclass-C row independently with probability `alpha`; the slice is C
/// membership.
pub fn build_noisy_setting<T: Scalar>(
    base: &BaseTable,
    emb: &EmbeddingMatrix<T>,
    req: &SliceRequest,
    source: &PredictionSource,
) -> Result<SliceSetting<T>, GenError> {
    check_alpha(SliceType::NoisyLabel, req.alpha)?;
    check_base(base, emb, source)?;
    if !(req.mu_a > 0.0 && req.mu_a < 1.0) {
        return Err(GenError::InvalidInput(format!(
            "mu_a {} must lie in (0, 1)",
            req.mu_a
        )));
    }
    let cells = base.cells(&req.target, &req.attribute)?;
    let attr = base.column(&req.attribute)?;
    let n_pos = (req.mu_a * req.n as f64).round() as usize;
    let mut rng = rng::stream(req.seed, &["subsample"]);
    let mut draft = Draft {
        rows: Vec::with_capacity(req.n),
        labels: Vec::with_capacity(req.n),
        slice: Vec::with_capacity(req.n),
    };
    for (y, needed) in [(1usize, n_pos), (0, req.n - n_pos)] {
        let mut pool: Vec<usize> = cells[y][0].iter().chain(&cells[y][1]).copied().collect();
        pool.sort_unstable();
        let picked = sample_cell(&pool, needed, &format!("y={y}"), &mut rng)?;
        for r in picked {
            draft.rows.push(r);
            draft.labels.push(y);
            draft.slice.push(attr[r]);
        }
    }
    let mut flip_rng = rng::stream(req.seed, &["label-noise"]);
    let mut flipped = Vec::new();
    for i in 0..draft.rows.len() {
        if draft.slice[i] && flip_rng.random_bool(req.alpha) {
            draft.labels[i] = 1 - draft.labels[i];
            flipped.push(draft.rows[i]);
        }
    }
    let provenance = json!({
        "generator": "noisy_label",
        "flipped_count": flipped.len(),
        "slice_members": draft.slice.iter().filter(|&&s| s).count(),
    });
    assemble(
        draft,
        base,
        emb,
        source,
        SliceType::NoisyLabel,
        req,
        provenance,
        Some(flipped),
    )
}

/// Dispatches on `slice_type`.
pub fn build_setting<T: Scalar>(
    slice_type: SliceType,
    base: &BaseTable,
    emb: &EmbeddingMatrix<T>,
    req: &SliceRequest,
    source: &PredictionSource,
) -> Result<SliceSetting<T>, GenError> {
    match slice_type {
        SliceType::Correlation => build_correlation_setting(base, emb, req, source),
        SliceType::Rare => build_rare_setting(base, emb, req, source),
        SliceType::NoisyLabel => build_noisy_setting(base, emb, req, source),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::synth_embeddings;
    use crate::generate::ClusterLayout;

    fn base_and_emb(per_cell: usize, seed: u64) -> (BaseTable, EmbeddingMatrix<f64>) {
        let layout = ClusterLayout::two_class(
            4,
            1.0,
            2.0,
            3.0,
            [[per_cell, per_cell], [per_cell, per_cell]],
        );
        let (emb, split) = synth_embeddings(&layout, seed).unwrap();
        let base = BaseTable::from_split(&split, "target").unwrap();
        (base, emb)
    }

    fn req(alpha: f64, n: usize, seed: u64) -> SliceRequest {
        SliceRequest {
            target: "target".into(),
            attribute: "planted".into(),
            alpha,
            n,
            mu_a: 0.5,
            mu_b: 0.5,
            seed,
        }
    }

    fn pearson(a: &[bool], b: &[bool]) -> f64 {
        let n = a.len() as f64;
        let x: Vec<f64> = a.iter().map(|&v| f64::from(u8::from(v))).collect();
        let y: Vec<f64> = b.iter().map(|&v| f64::from(u8::from(v))).collect();
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let cov: f64 = x.iter().zip(&y).map(|(p, q)| (p - mx) * (q - my)).sum();
        let vx: f64 = x.iter().map(|p| (p - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|q| (q - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    fn attribute_of(split: &LabeledSplit) -> Vec<bool> {
        // correlation slices are 1[C != Y], so C = Y xor S
        split
            .labels()
            .iter()
            .zip(split.slice(0))
            .map(|(&y, &s)| (y == 1) != s)
            .collect()
    }

    #[test]
    fn correlation_setting_attains_requested_correlation() {
        let (base, emb) = base_and_emb(2500, 1);
        let source = PredictionSource::Synthetic(SyntheticModelSpec::natural_image(0));
        let s = build_correlation_setting(&base, &emb, &req(0.6, 2000, 7), &source).unwrap();
        let (_, valid) = &s.valid;
        let y: Vec<bool> = valid.labels().iter().map(|&v| v == 1).collect();
        let r = pearson(&y, &attribute_of(valid));
        assert!((r - 0.6).abs() < 0.02, "r = {r}");
        assert_eq!(s.valid.1.n() + s.test.1.n(), 2000);
        assert_eq!(s.model_kind, ModelKind::Synthetic);
    }

    #[test]
    fn zero_correlation_prevalence_matches_independence() {
        let (base, emb) = base_and_emb(2500, 2);
        let source = PredictionSource::Synthetic(SyntheticModelSpec::natural_image(0));
        let mut r = req(0.0, 2000, 3);
        r.mu_a = 0.4;
        r.mu_b = 0.3;
        // alpha = 0 is outside the setting range, so check the cell plan
        assert!(matches!(
            build_correlation_setting(&base, &emb, &r, &source),
            Err(GenError::AlphaOutOfRange { .. })
        ));
        let c = correlation_counts(0.0, 0.4, 0.3, 2000).unwrap();
        let prevalence = (c.n10 + c.n01) as f64 / 2000.0;
        assert!((prevalence - (0.4 * 0.7 + 0.3 * 0.6)).abs() < 1e-3);
    }

    #[test]
    fn rare_setting_has_alpha_fraction_of_positives() {
        let (base, emb) = base_and_emb(2500, 4);
        let source = PredictionSource::Synthetic(SyntheticModelSpec::natural_image(0));
        let s = build_rare_setting(&base, &emb, &req(0.05, 2000, 5), &source).unwrap();
        let members: usize = [&s.valid.1, &s.test.1]
            .iter()
            .map(|sp| sp.slice(0).iter().filter(|&&v| v).count())
            .sum();
        assert_eq!(members, 50);
        assert!(matches!(
            build_rare_setting(&base, &emb, &req(0.5, 2000, 5), &source),
            Err(GenError::AlphaOutOfRange { .. })
        ));
    }

    #[test]
    fn builders_are_deterministic() {
        let (base, emb) = base_and_emb(600, 6);
        let source = PredictionSource::Synthetic(SyntheticModelSpec::natural_image(0));
        for t in [
            SliceType::Correlation,
            SliceType::Rare,
            SliceType::NoisyLabel,
        ] {
            let alpha = match t {
                SliceType::Correlation => 0.4,
                SliceType::Rare => 0.05,
                SliceType::NoisyLabel => 0.2,
            };
            let a = build_setting(t, &base, &emb, &req(alpha, 800, 9), &source).unwrap();
            let b = build_setting(t, &base, &emb, &req(alpha, 800, 9), &source).unwrap();
            assert_eq!(a, b);
            let c = build_setting(t, &base, &emb, &req(alpha, 800, 10), &source).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn noisy_flips_only_slice_rows_at_rate_alpha() {
        let (base, emb) = base_and_emb(1000, 8);
        let source = PredictionSource::Synthetic(SyntheticModelSpec::natural_image(0));
        let s = build_noisy_setting(&base, &emb, &req(0.29, 2000, 11), &source).unwrap();
        let prov = &s.provenance;
        let members = prov["slice_members"].as_u64().unwrap() as f64;
        let flipped = prov["flipped_count"].as_u64().unwrap() as f64;
        let expected = 0.29 * members;
        let sd = (members * 0.29 * 0.71).sqrt();
        assert!(
            (flipped - expected).abs() <= 3.0 * sd,
            "{flipped} vs {expected}"
        );
        // flipped rows are slice members, and the label truly changed
        let base_y = base.column("target").unwrap();
        let rows = prov["base_rows"]["valid"].as_array().unwrap();
        for id in prov["flipped_ids"]["valid"].as_array().unwrap() {
            let i = id.as_u64().unwrap() as usize;
            assert!(s.valid.1.slice(0)[i]);
            let r = rows[i].as_u64().unwrap() as usize;
            assert_ne!(s.valid.1.labels()[i] == 1, base_y[r]);
        }
        for (i, &r) in rows
            .iter()
            .map(|r| r.as_u64().unwrap() as usize)
            .collect::<Vec<_>>()
            .iter()
            .enumerate()
        {
            if !s.valid.1.slice(0)[i] {
                assert_eq!(s.valid.1.labels()[i] == 1, base_y[r]);
            }
        }
    }

    #[test]
    fn insufficient_base_is_reported() {
        let (base, emb) = base_and_emb(100, 12);
        let source = PredictionSource::Synthetic(SyntheticModelSpec::natural_image(0));
        assert!(matches!(
            build_correlation_setting(&base, &emb, &req(0.6, 2000, 1), &source),
            Err(GenError::InsufficientBase { .. })
        ));
    }

    #[test]
    fn ingested_predictions_follow_base_rows() {
        let (base, emb) = base_and_emb(300, 13);
        let preds: Vec<usize> = (0..base.n()).map(|i| i % 2).collect();
        let source = PredictionSource::Ingested {
            predictions: preds.clone(),
            probs: None,
        };
        let s = build_correlation_setting(&base, &emb, &req(0.4, 400, 2), &source).unwrap();
        assert_eq!(s.model_kind, ModelKind::TrainedIngested);
        let rows = s.provenance["base_rows"]["test"].as_array().unwrap();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(
                s.test.1.predictions()[i],
                preds[r.as_u64().unwrap() as usize]
            );
        }
    }

    #[test]
    fn config_document_parses() {
        let text = r#"{"slice_type":"rare","alpha":0.05,"target":"t","attribute":"a","n":100,
            "mu_a":0.5,"mu_b":0.5,"seed":3,
            "model":{"synthetic":{"sens_in":0.4,"spec_in":0.4,"sens_out":0.75,"spec_out":0.75,"kappa":5.0}}}"#;
        let cfg: GenerationConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.slice_type, SliceType::Rare);
        assert!(matches!(cfg.model, ModelConfig::Synthetic(s) if s.sens_out == 0.75));
        let text = r#"{"slice_type":"correlation","alpha":0.4,"target":"t","attribute":"a","n":100,
            "model":{"ingested":"preds.csv"}}"#;
        let cfg: GenerationConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.model, ModelConfig::Ingested("preds.csv".into()));
    }
}

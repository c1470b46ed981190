use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{EmbeddingMatrix, LabeledSplit, SplitParts};
use crate::rng;
use crate::scalar::Scalar;

use super::{solve_beta, GenError};

/// Target rates for a synthetic binary classifier whose predicted
/// probability is drawn from one of four beta distributions chosen by
/// `(y, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModelSpec {
    pub sens_in: f64,
    pub spec_in: f64,
    pub sens_out: f64,
    pub spec_out: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_kappa() -> f64 {
    5.0
}

impl SyntheticModelSpec {
    /// Natural-image rates: 0.4 in the slice, 0.75 out of it.
    pub fn natural_image(seed: u64) -> Self {
        Self::symmetric(0.4, 0.75, seed)
    }

    /// Medical rates: 0.4 in the slice, 0.8 out of it.
    pub fn medical(seed: u64) -> Self {
        Self::symmetric(0.4, 0.8, seed)
    }

    pub fn symmetric(in_slice: f64, out_of_slice: f64, seed: u64) -> Self {
        Self {
            sens_in: in_slice,
            spec_in: in_slice,
            sens_out: out_of_slice,
            spec_out: out_of_slice,
            kappa: default_kappa(),
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Target `P(prob > 0.5)` for the `(y, s)` cell.
    pub fn positive_rate(&self, y: usize, in_slice: bool) -> f64 {
        match (y, in_slice) {
            (1, true) => self.sens_in,
            (1, false) => self.sens_out,
            (_, true) => 1.0 - self.spec_in,
            (_, false) => 1.0 - self.spec_out,
        }
    }

    /// Beta shape parameters, indexed `[y][s]`.
    pub fn beta_params(&self) -> Result<[[(f64, f64); 2]; 2], GenError> {
        let mut out = [[(0.0, 0.0); 2]; 2];
        for (y, row) in out.iter_mut().enumerate() {
            for (s, cell) in row.iter_mut().enumerate() {
                *cell = solve_beta(self.positive_rate(y, s == 1), self.kappa)?;
            }
        }
        Ok(out)
    }
}

/// Replaces the predictions of a binary split with draws from the synthetic
/// model. The split must carry exactly one ground-truth slice column.
pub fn synth_predictions(
    split: LabeledSplit,
    spec: &SyntheticModelSpec,
) -> Result<LabeledSplit, GenError> {
    if split.num_classes() != 2 {
        return Err(GenError::NotBinary(split.num_classes()));
    }
    if split.num_slices() != 1 {
        return Err(GenError::InvalidInput(format!(
            "synthetic predictions need exactly one slice column, found {}",
            split.num_slices()
        )));
    }
    let params = spec.beta_params()?;
    let dists = params
        .map(|row| row.map(|(a, b)| Beta::new(a, b).expect("solve_beta returns positive shapes")));
    let mut rng = rng::stream(spec.seed, &["synthetic-model"]);
    let slice = split.slice(0);
    let mut probs = Vec::with_capacity(split.n());
    let mut preds = Vec::with_capacity(split.n());
    for (i, &y) in split.labels().iter().enumerate() {
        let p: f64 = dists[y][usize::from(slice[i])].sample(&mut rng);
        preds.push(usize::from(p > 0.5));
        probs.push(vec![1.0 - p, p]);
    }
    Ok(split.with_predictions(preds, Some(probs))?)
}

/// Layout for Gaussian cluster embeddings: every example of class `c` is
/// drawn around `class_means[c]`, slice members are further displaced by
/// `slice_offset`, and all groups share isotropic spread `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLayout {
    pub d: usize,
    pub sigma: f64,
    pub class_means: Vec<Vec<f64>>,
    pub slice_offset: Vec<f64>,
    /// Examples per class, `[out_of_slice, in_slice]`.
    pub counts: Vec<[usize; 2]>,
    pub slice_name: String,
}

impl ClusterLayout {
    /// Two classes separated by `class_sep * sigma` along the first axis and
    /// a slice displaced by `offset_norm * sigma` along the second axis.
    pub fn two_class(
        d: usize,
        sigma: f64,
        class_sep: f64,
        offset_norm: f64,
        counts: [[usize; 2]; 2],
    ) -> Self {
        let mut m0 = vec![0.0; d];
        let mut m1 = vec![0.0; d];
        let mut off = vec![0.0; d];
        if d >= 2 {
            m0[0] = -0.5 * class_sep * sigma;
            m1[0] = 0.5 * class_sep * sigma;
            off[1] = offset_norm * sigma;
        }
        Self {
            d,
            sigma,
            class_means: vec![m0, m1],
            slice_offset: off,
            counts: counts.to_vec(),
            slice_name: "planted".into(),
        }
    }
}

/// Draws embeddings for a [`ClusterLayout`]. Rows are emitted class by
/// class, out-of-slice before in-slice. Predictions equal the labels until a
/// model is applied.
pub fn synth_embeddings<T: Scalar>(
    layout: &ClusterLayout,
    seed: u64,
) -> Result<(EmbeddingMatrix<T>, LabeledSplit), GenError> {
    if layout.d < 2 {
        return Err(GenError::DegenerateSpec(format!(
            "d = {} (need d >= 2)",
            layout.d
        )));
    }
    if !(layout.sigma > 0.0 && layout.sigma.is_finite()) {
        return Err(GenError::DegenerateSpec(format!(
            "sigma = {}",
            layout.sigma
        )));
    }
    let classes = layout.class_means.len();
    if classes < 2 || layout.counts.len() != classes {
        return Err(GenError::DegenerateSpec(
            "need at least two classes and one count pair per class".into(),
        ));
    }
    if layout.class_means.iter().any(|m| m.len() != layout.d)
        || layout.slice_offset.len() != layout.d
    {
        return Err(GenError::DegenerateSpec(
            "mean or offset length differs from d".into(),
        ));
    }
    if let Some((c, s)) = layout
        .counts
        .iter()
        .enumerate()
        .flat_map(|(c, pair)| pair.iter().enumerate().map(move |(s, &k)| (c, s, k)))
        .find(|&(_, _, k)| k == 0)
        .map(|(c, s, _)| (c, s))
    {
        return Err(GenError::DegenerateSpec(format!(
            "group (class {c}, in_slice {}) has zero examples",
            s == 1
        )));
    }
    let noise = Normal::new(0.0, layout.sigma).expect("sigma checked");
    let mut rng = rng::stream(seed, &["cluster-embeddings"]);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut slice = Vec::new();
    for (class, pair) in layout.counts.iter().enumerate() {
        for (s, &count) in pair.iter().enumerate() {
            for _ in 0..count {
                for k in 0..layout.d {
                    let shift = if s == 1 { layout.slice_offset[k] } else { 0.0 };
                    let v = layout.class_means[class][k] + shift + noise.sample(&mut rng);
                    values.push(T::lit(v));
                }
                labels.push(class);
                slice.push(s == 1);
            }
        }
    }
    let n = labels.len();
    let emb = EmbeddingMatrix::new(n, layout.d, values)?;
    let split = LabeledSplit::new(SplitParts {
        num_classes: classes,
        predictions: labels.clone(),
        labels,
        prediction_probs: None,
        slice_names: vec![layout.slice_name.clone()],
        slices: vec![slice],
    })?;
    Ok((emb, split))
}

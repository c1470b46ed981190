use serde::{Deserialize, Serialize};

use crate::dataset::{EmbeddingMatrix, LabeledSplit, SliceScores};
use crate::mixture::ProjectionRecord;
use crate::rng::stream;
use crate::scalar::Scalar;

use super::kmeans::kmeans;
use super::BaselineError;

/// The U-MAP step is replaced by a 2-d principal-component reduction.
pub const GEORGE_ID: &str = "george-pca";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeorgeConfig {
    /// Clusters per class; `None` means `ceil(k_bar / C)`.
    pub clusters_per_class: Option<usize>,
    pub reduce_dim: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub k_bar: usize,
    pub seed: u64,
}

impl Default for GeorgeConfig {
    fn default() -> Self {
        Self {
            clusters_per_class: None,
            reduce_dim: 2,
            restarts: 10,
            max_iter: 50,
            k_bar: 25,
            seed: 0,
        }
    }
}

impl GeorgeConfig {
    pub fn clusters_for(&self, num_classes: usize) -> usize {
        self.clusters_per_class
            .unwrap_or_else(|| self.k_bar.div_ceil(num_classes))
    }
}

/// Per-class projections and cluster centers.
#[derive(Debug, Clone)]
pub struct GeorgeModel {
    pub projections: Vec<ProjectionRecord<f64>>,
    pub centers: Vec<Vec<Vec<f64>>>,
    /// Scores on the fitting data.
    pub train_scores: SliceScores<f64>,
}

fn project(record: &ProjectionRecord<f64>, z: &[f64]) -> Vec<f64> {
    record
        .basis
        .chunks(record.input_dim)
        .map(|dir| {
            dir.iter()
                .zip(z)
                .zip(&record.mean)
                .map(|((b, x), m)| b * (x - m))
                .sum()
        })
        .collect()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d: f64 = c.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

/// Class-conditional clustering: each class is reduced to `reduce_dim`
/// principal components and clustered by k-means. Column `c * k + m` marks
/// members of class `c` assigned to cluster `m`.
pub fn george_fit<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    split: &LabeledSplit,
    cfg: &GeorgeConfig,
) -> Result<GeorgeModel, BaselineError> {
    if cfg.reduce_dim == 0 || cfg.restarts == 0 {
        return Err(BaselineError::InvalidConfig(
            "reduce_dim and restarts must be positive".into(),
        ));
    }
    let c = split.num_classes();
    let k = cfg.clusters_for(c);
    if k == 0 {
        return Err(BaselineError::InvalidConfig(
            "clusters_per_class must be at least 1".into(),
        ));
    }
    let emb = emb.cast::<f64>();
    let mut projections = Vec::with_capacity(c);
    let mut centers = Vec::with_capacity(c);
    for class in 0..c {
        let members: Vec<usize> = (0..split.n())
            .filter(|&i| split.labels()[i] == class)
            .collect();
        let needed = k.max(2);
        if members.len() < needed {
            return Err(BaselineError::TooFewPoints {
                class,
                points: members.len(),
                needed,
            });
        }
        let sub = emb.select_rows(&members)?;
        let record = ProjectionRecord::fit_pca(&sub, cfg.reduce_dim)?;
        let points: Vec<Vec<f64>> = sub.rows().map(|z| project(&record, z)).collect();
        let mut rng = stream(cfg.seed, &["george", &class.to_string()]);
        let fit = kmeans(&points, k, cfg.restarts, cfg.max_iter, &mut rng);
        projections.push(record);
        centers.push(fit.centers);
    }
    let mut model = GeorgeModel {
        projections,
        centers,
        train_scores: SliceScores::new(GEORGE_ID, 1, 1, vec![0.0])?,
    };
    model.train_scores = model.score(&emb, split)?;
    Ok(model)
}

impl GeorgeModel {
    pub fn clusters_per_class(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    /// Assigns each example to the nearest cluster of its own class.
    pub fn score<T: Scalar>(
        &self,
        emb: &EmbeddingMatrix<T>,
        split: &LabeledSplit,
    ) -> Result<SliceScores<T>, BaselineError> {
        let k = self.clusters_per_class();
        let c = self.centers.len();
        if split.num_classes() != c {
            return Err(BaselineError::InvalidConfig(format!(
                "model has {c} classes, split has {}",
                split.num_classes()
            )));
        }
        let n = emb.n();
        let mut values = vec![T::zero(); n * c * k];
        for i in 0..n {
            let class = split.labels()[i];
            let z: Vec<f64> = emb.row(i).iter().map(|v| v.as_f64()).collect();
            let record = &self.projections[class];
            if z.len() != record.input_dim {
                return Err(crate::mixture::FitError::DimensionMismatch {
                    expected: record.input_dim,
                    found: z.len(),
                }
                .into());
            }
            let m = nearest(&project(record, &z), &self.centers[class]);
            values[i * c * k + class * k + m] = T::one();
        }
        Ok(SliceScores::new(GEORGE_ID, n, c * k, values)?)
    }
}

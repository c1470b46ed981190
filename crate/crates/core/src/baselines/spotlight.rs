use serde::{Deserialize, Serialize};

use crate::dataset::{EmbeddingMatrix, SliceScores};
use crate::scalar::Scalar;

use super::BaselineError;

pub const SPOTLIGHT_ID: &str = "spotlight";

/// Gradient-ascent search for high-loss Gaussian regions. The barrier weight
/// starts at `barrier_initial` and is multiplied by `barrier_growth` every
/// `barrier_every` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpotlightConfig {
    pub min_mass_fraction: f64,
    pub steps: usize,
    pub learning_rate: f64,
    pub num_spotlights: usize,
    pub barrier_initial: f64,
    pub barrier_growth: f64,
    pub barrier_every: usize,
    /// Largest parameter change per step (Euclidean norm over the centre and
    /// log-variance), which keeps the stiff late barrier from diverging.
    pub max_step: f64,
    pub seed: u64,
}

impl Default for SpotlightConfig {
    fn default() -> Self {
        Self {
            min_mass_fraction: 0.02,
            steps: 1000,
            learning_rate: 1e-3,
            num_spotlights: 5,
            barrier_initial: 1.0,
            barrier_growth: 2.0,
            barrier_every: 100,
            max_step: 0.1,
            seed: 0,
        }
    }
}

impl SpotlightConfig {
    fn validate(&self, n: usize) -> Result<(), BaselineError> {
        let bad = |m: &str| Err(BaselineError::InvalidConfig(m.into()));
        if !(self.min_mass_fraction > 0.0 && self.min_mass_fraction < 1.0) {
            return bad("min_mass_fraction must lie in (0, 1)");
        }
        if self.steps == 0 || self.num_spotlights == 0 || self.barrier_every == 0 {
            return bad("steps, num_spotlights and barrier_every must be positive");
        }
        if !(self.learning_rate > 0.0
            && self.barrier_initial > 0.0
            && self.barrier_growth > 0.0
            && self.max_step > 0.0)
        {
            return bad("learning_rate, max_step and barrier weights must be positive");
        }
        if (n as f64) * self.min_mass_fraction < 1.0 {
            return bad("n * min_mass_fraction must be at least 1");
        }
        Ok(())
    }
}

/// Fitted spotlights in the standardized coordinates of the fitting data.
#[derive(Debug, Clone)]
pub struct SpotlightModel {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub log_variances: Vec<f64>,
    /// Objective value after the last step of each spotlight.
    pub objectives: Vec<f64>,
    /// Set when every loss was equal, so no region is preferred.
    pub degenerate: bool,
    /// Final weights on the fitting data, normalized by their maximum.
    pub train_scores: SliceScores<f64>,
}

fn standardize<T: Scalar>(emb: &EmbeddingMatrix<T>) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (emb.n() as f64, emb.d());
    let mut mean = vec![0.0; d];
    for z in emb.rows() {
        for (m, v) in mean.iter_mut().zip(z) {
            *m += v.as_f64() / n;
        }
    }
    let mut var = vec![0.0; d];
    for z in emb.rows() {
        for ((s, m), v) in var.iter_mut().zip(&mean).zip(z) {
            *s += (v.as_f64() - m).powi(2) / n;
        }
    }
    let scale = var
        .into_iter()
        .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, scale)
}

fn transform<T: Scalar>(emb: &EmbeddingMatrix<T>, shift: &[f64], scale: &[f64]) -> Vec<Vec<f64>> {
    emb.rows()
        .map(|z| {
            z.iter()
                .zip(shift)
                .zip(scale)
                .map(|((v, m), s)| (v.as_f64() - m) / s)
                .collect()
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Value of the objective: weighted mean loss minus the mass barrier.
pub(crate) fn objective(weights: &[f64], losses: &[f64], min_mass: f64, barrier: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    let mean_loss = weights.iter().zip(losses).map(|(w, l)| w * l).sum::<f64>() / total;
    let short = (1.0 - total / min_mass).max(0.0);
    mean_loss - barrier * short * short
}

/// Fits `num_spotlights` spotlights in sequence. Each one starts at the
/// prior-weighted centroid with variance equal to the mean squared distance
/// to it; after a spotlight finishes, every example's prior weight is
/// multiplied by `1 - w_i / max w`.
pub fn spotlight_fit<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    losses: &[f64],
    cfg: &SpotlightConfig,
) -> Result<SpotlightModel, BaselineError> {
    let n = emb.n();
    if losses.len() != n {
        return Err(BaselineError::InvalidConfig(format!(
            "{} losses for {n} examples",
            losses.len()
        )));
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(BaselineError::InvalidConfig("losses must be finite".into()));
    }
    cfg.validate(n)?;
    let (shift, scale) = standardize(emb);
    let z = transform(emb, &shift, &scale);
    let d = emb.d();
    let lo = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = hi - lo < 1e-12;
    let min_mass = n as f64 * cfg.min_mass_fraction;

    let mut prior = vec![1.0f64; n];
    let mut centers = Vec::with_capacity(cfg.num_spotlights);
    let mut log_variances = Vec::with_capacity(cfg.num_spotlights);
    let mut objectives = Vec::with_capacity(cfg.num_spotlights);
    let mut columns = Vec::with_capacity(cfg.num_spotlights);
    for _ in 0..cfg.num_spotlights {
        if degenerate {
            log::warn!("all losses are equal; spotlight search is degenerate");
            columns.push(vec![1.0; n]);
            centers.push(vec![0.0; d]);
            log_variances.push(0.0);
            objectives.push(lo);
            continue;
        }
        let prior_total: f64 = prior.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let mut mu = vec![0.0; d];
        for (p, zi) in prior.iter().zip(&z) {
            for (m, v) in mu.iter_mut().zip(zi) {
                *m += p * v / prior_total;
            }
        }
        let spread = prior
            .iter()
            .zip(&z)
            .map(|(p, zi)| p * sq_dist(zi, &mu))
            .sum::<f64>()
            / prior_total;
        let mut log_var = spread.max(1e-6).ln();
        let mut barrier = cfg.barrier_initial;
        let mut weights = vec![0.0; n];
        let mut grad_mu = vec![0.0; d];
        for step in 0..cfg.steps {
            if step > 0 && step % cfg.barrier_every == 0 {
                barrier *= cfg.barrier_growth;
            }
            let var = log_var.exp();
            let dist: Vec<f64> = z.iter().map(|zi| sq_dist(zi, &mu)).collect();
            for i in 0..n {
                weights[i] = prior[i] * (-dist[i] / (2.0 * var)).exp();
            }
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                break;
            }
            let mean_loss = weights.iter().zip(losses).map(|(w, l)| w * l).sum::<f64>() / total;
            let short = (1.0 - total / min_mass).max(0.0);
            // d(objective)/d(w_i) = (l_i - mean) / total + 2 barrier short / min_mass
            let coef = 2.0 * barrier * short / min_mass;
            grad_mu.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_lv = 0.0;
            for i in 0..n {
                let dw = (losses[i] - mean_loss) / total + coef;
                let w = weights[i] * dw;
                if w == 0.0 {
                    continue;
                }
                for ((g, zi), m) in grad_mu.iter_mut().zip(&z[i]).zip(&mu) {
                    *g += w * (zi - m) / var;
                }
                grad_lv += w * dist[i] / (2.0 * var);
            }
            let norm = (grad_mu.iter().map(|g| g * g).sum::<f64>() + grad_lv * grad_lv).sqrt();
            let step = if cfg.learning_rate * norm > cfg.max_step {
                cfg.max_step / norm
            } else {
                cfg.learning_rate
            };
            for (m, g) in mu.iter_mut().zip(&grad_mu) {
                *m += step * g;
            }
            log_var += step * grad_lv;
        }
        let var = log_var.exp();
        for i in 0..n {
            weights[i] = prior[i] * (-sq_dist(&z[i], &mu) / (2.0 * var)).exp();
        }
        objectives.push(objective(&weights, losses, min_mass, barrier));
        let max_w = weights.iter().copied().fold(0.0, f64::max);
        let column: Vec<f64> = if max_w > 0.0 {
            weights
                .iter()
                .map(|w| (w / max_w).clamp(0.0, 1.0))
                .collect()
        } else {
            vec![0.0; n]
        };
        for (p, c) in prior.iter_mut().zip(&column) {
            *p *= 1.0 - c;
        }
        columns.push(column);
        centers.push(mu);
        log_variances.push(log_var);
    }
    Ok(SpotlightModel {
        shift,
        scale,
        centers,
        log_variances,
        objectives,
        degenerate,
        train_scores: SliceScores::from_columns(SPOTLIGHT_ID, &columns)?,
    })
}

impl SpotlightModel {
    /// Kernel value `exp(-|z - mu|^2 / (2 sigma^2))` of each spotlight on new
    /// data, in the fitting data's standardized coordinates.
    pub fn score<T: Scalar>(
        &self,
        emb: &EmbeddingMatrix<T>,
    ) -> Result<SliceScores<T>, BaselineError> {
        if emb.d() != self.shift.len() {
            return Err(crate::mixture::FitError::DimensionMismatch {
                expected: self.shift.len(),
                found: emb.d(),
            }
            .into());
        }
        let z = transform(emb, &self.shift, &self.scale);
        let columns: Vec<Vec<T>> = self
            .centers
            .iter()
            .zip(&self.log_variances)
            .map(|(mu, lv)| {
                if self.degenerate {
                    return vec![T::one(); z.len()];
                }
                let var = lv.exp();
                z.iter()
                    .map(|zi| T::lit((-sq_dist(zi, mu) / (2.0 * var)).exp().clamp(0.0, 1.0)))
                    .collect()
            })
            .collect();
        Ok(SliceScores::from_columns(SPOTLIGHT_ID, &columns)?)
    }

    /// Center of spotlight `j` in the original coordinates.
    pub fn center(&self, j: usize) -> Vec<f64> {
        self.centers[j]
            .iter()
            .zip(&self.shift)
            .zip(&self.scale)
            .map(|((c, m), s)| c * s + m)
            .collect()
    }
}

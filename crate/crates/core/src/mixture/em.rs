use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataError, EmbeddingMatrix, LabeledSplit};
use crate::rng::{stream, StreamRng};
use crate::scalar::Scalar;

use super::pca::{reduce_dim, ProjectionRecord};
use super::select::select_slices;
use super::{FitConfig, FitError, MixtureParams, Responsibilities};

const CATEGORICAL_SMOOTHING: f64 = 1e-9;
const EMPTY_WEIGHT: f64 = 1e-12;

/// Per-iteration record of a fit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Log-likelihood after each E-step.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `(iteration, component)` pairs where an empty component was reseeded.
    pub rescued: Vec<(usize, usize)>,
}

impl FitDiagnostics {
    /// Whether the transition into iteration `it` followed a reseed.
    pub fn rescued_at(&self, it: usize) -> bool {
        self.rescued.iter().any(|&(r, _)| r == it)
    }
}

/// Output of [`fit`].
#[derive(Debug, Clone)]
pub struct MixtureFit<T> {
    pub config: FitConfig,
    pub projection: ProjectionRecord<T>,
    pub params: MixtureParams<T>,
    /// Posteriors on the fitting data under `params`.
    pub responsibilities: Responsibilities<T>,
    pub diagnostics: FitDiagnostics,
}

impl<T: Scalar> MixtureFit<T> {
    /// The `k_hat` slices ranked by error score.
    pub fn selected(&self) -> Vec<usize> {
        select_slices(&self.params, self.config.k_hat)
    }
}

fn check_rows<T: Scalar>(emb: &EmbeddingMatrix<T>, split: &LabeledSplit) -> Result<(), FitError> {
    if emb.n() != split.n() {
        return Err(DataError::RowCountMismatch {
            labels: split.n(),
            embeddings: emb.n(),
        }
        .into());
    }
    Ok(())
}

/// Confusion-matrix initialization. Component `j` is assigned the cell
/// `j % C^2` in row-major `(y, yhat)` order; each row gets `1 + eps` on
/// components matching its cell and `eps` elsewhere, `eps ~ U[0, E]`, then
/// is normalized.
pub fn init_confusion<T: Scalar>(
    split: &LabeledSplit,
    cfg: &FitConfig,
) -> Result<Responsibilities<T>, FitError> {
    let c = split.num_classes();
    let cells = c * c;
    if cfg.k_bar < cells {
        return Err(FitError::TooFewSlices {
            k_bar: cfg.k_bar,
            cells,
        });
    }
    let (n, k) = (split.n(), cfg.k_bar);
    let mut rng = stream(cfg.seed, &["init-confusion"]);
    let mut q = Vec::with_capacity(n * k);
    let mut row = vec![0.0f64; k];
    for (&y, &yh) in split.labels().iter().zip(split.predictions()) {
        let cell = y * c + yh;
        for (j, r) in row.iter_mut().enumerate() {
            let eps = if cfg.init_noise > 0.0 {
                rng.random::<f64>() * cfg.init_noise
            } else {
                0.0
            };
            *r = if j % cells == cell { 1.0 + eps } else { eps };
        }
        let total: f64 = row.iter().sum();
        q.extend(row.iter().map(|&v| T::lit(v / total)));
    }
    Ok(Responsibilities::from_raw(n, k, q))
}

/// Component constants hoisted out of the per-row loop.
struct Component {
    log_const: f64,
    mean: Vec<f64>,
    inv_var: Vec<f64>,
    log_label: Vec<f64>,
    log_pred: Vec<f64>,
}

fn components<T: Scalar>(params: &MixtureParams<T>, gamma: f64) -> Vec<Component> {
    (0..params.k())
        .map(|j| {
            let var: Vec<f64> = params.variances[j].iter().map(|v| v.as_f64()).collect();
            let log_det: f64 = var.iter().map(|v| (2.0 * PI * v).ln()).sum();
            let cat = |p: &[T]| -> Vec<f64> {
                if gamma == 0.0 {
                    vec![0.0; p.len()]
                } else {
                    p.iter().map(|x| gamma * x.as_f64().ln()).collect()
                }
            };
            Component {
                log_const: params.p_s[j].as_f64().ln() - 0.5 * log_det,
                mean: params.means[j].iter().map(|v| v.as_f64()).collect(),
                inv_var: var.iter().map(|v| 1.0 / v).collect(),
                log_label: cat(&params.label_probs[j]),
                log_pred: cat(&params.pred_probs[j]),
            }
        })
        .collect()
}

/// Posterior memberships and the log-likelihood
/// `sum_i log sum_j p_S[j] N(z_i) p_j[y_i]^gamma phat_j[yhat_i]^gamma`.
pub fn e_step<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    split: &LabeledSplit,
    params: &MixtureParams<T>,
    gamma: f64,
) -> Result<(Responsibilities<T>, f64), FitError> {
    check_rows(emb, split)?;
    if emb.d() != params.d() {
        return Err(FitError::DimensionMismatch {
            expected: params.d(),
            found: emb.d(),
        });
    }
    if split.num_classes() != params.num_classes() {
        return Err(FitError::DimensionMismatch {
            expected: params.num_classes(),
            found: split.num_classes(),
        });
    }
    let comps = components(params, gamma);
    let k = comps.len();
    let rows: Vec<Result<(Vec<T>, f64), FitError>> = (0..emb.n())
        .into_par_iter()
        .with_min_len(128)
        .map(|i| {
            let z = emb.row(i);
            let (y, yh) = (split.labels()[i], split.predictions()[i]);
            let logs: Vec<f64> = comps
                .iter()
                .map(|c| {
                    let quad: f64 = z
                        .iter()
                        .zip(&c.mean)
                        .zip(&c.inv_var)
                        .map(|((&x, m), iv)| {
                            let diff = x.as_f64() - m;
                            diff * diff * iv
                        })
                        .sum();
                    c.log_const - 0.5 * quad + c.log_label[y] + c.log_pred[yh]
                })
                .collect();
            let total = crate::log_sum_exp(&logs);
            if total == f64::NEG_INFINITY || total.is_nan() {
                return Err(FitError::NumericalUnderflow { row: i });
            }
            let q = logs
                .iter()
                .map(|&l| T::lit((l - total).exp().clamp(0.0, 1.0)))
                .collect();
            Ok((q, total))
        })
        .collect();
    let mut q = Vec::with_capacity(emb.n() * k);
    let mut ll = 0.0;
    for row in rows {
        let (r, t) = row?;
        q.extend(r);
        ll += t;
    }
    Ok((Responsibilities::from_raw(emb.n(), k, q), ll))
}

/// Weighted maximum-likelihood parameters for responsibilities `q`. Returns
/// the parameters and the components that had to be reseeded.
pub fn m_step<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    split: &LabeledSplit,
    q: &Responsibilities<T>,
    cfg: &FitConfig,
    rng: &mut StreamRng,
) -> Result<(MixtureParams<T>, Vec<usize>), FitError> {
    check_rows(emb, split)?;
    if q.n() != emb.n() {
        return Err(FitError::DimensionMismatch {
            expected: emb.n(),
            found: q.n(),
        });
    }
    let (n, d, k, c) = (emb.n(), emb.d(), q.k(), split.num_classes());
    let mut weights = vec![0.0f64; k];
    let mut means = vec![vec![0.0f64; d]; k];
    let mut label_mass = vec![vec![0.0f64; c]; k];
    let mut pred_mass = vec![vec![0.0f64; c]; k];
    for i in 0..n {
        let z = emb.row(i);
        let (y, yh) = (split.labels()[i], split.predictions()[i]);
        for j in 0..k {
            let w = q.get(i, j).as_f64();
            if w == 0.0 {
                continue;
            }
            weights[j] += w;
            label_mass[j][y] += w;
            pred_mass[j][yh] += w;
            for (m, &x) in means[j].iter_mut().zip(z) {
                *m += w * x.as_f64();
            }
        }
    }
    for j in 0..k {
        if weights[j] >= EMPTY_WEIGHT {
            means[j].iter_mut().for_each(|m| *m /= weights[j]);
        }
    }
    let mut variances = vec![vec![0.0f64; d]; k];
    for i in 0..n {
        let z = emb.row(i);
        for j in 0..k {
            let w = q.get(i, j).as_f64();
            if w == 0.0 || weights[j] < EMPTY_WEIGHT {
                continue;
            }
            for ((v, m), &x) in variances[j].iter_mut().zip(&means[j]).zip(z) {
                let diff = x.as_f64() - m;
                *v += w * diff * diff;
            }
        }
    }

    let mut rescued = Vec::new();
    let mut p_s: Vec<f64> = weights.iter().map(|w| w / n as f64).collect();
    let global_var = || {
        let mut mean = vec![0.0f64; d];
        for z in emb.rows() {
            for (m, &x) in mean.iter_mut().zip(z) {
                *m += x.as_f64() / n as f64;
            }
        }
        let mut var = vec![0.0f64; d];
        for z in emb.rows() {
            for ((v, m), &x) in var.iter_mut().zip(&mean).zip(z) {
                *v += (x.as_f64() - m).powi(2) / n as f64;
            }
        }
        var
    };
    let mut fallback_var: Option<Vec<f64>> = None;
    for j in 0..k {
        if weights[j] >= EMPTY_WEIGHT {
            variances[j]
                .iter_mut()
                .for_each(|v| *v = (*v / weights[j]).max(cfg.cov_floor));
            continue;
        }
        let r = rng.random_range(0..n);
        log::info!("component {j} is empty; reseeding at example {r}");
        means[j] = emb.row(r).iter().map(|x| x.as_f64()).collect();
        variances[j] = fallback_var
            .get_or_insert_with(global_var)
            .iter()
            .map(|v| v.max(cfg.cov_floor))
            .collect();
        label_mass[j] = vec![1.0; c];
        pred_mass[j] = vec![1.0; c];
        p_s[j] = 1.0 / k as f64;
        rescued.push(j);
    }
    if !rescued.is_empty() {
        let total: f64 = p_s.iter().sum();
        p_s.iter_mut().for_each(|p| *p /= total);
    }
    let smooth = |mass: &[f64]| -> Vec<T> {
        let total: f64 = mass.iter().sum::<f64>() + CATEGORICAL_SMOOTHING * c as f64;
        mass.iter()
            .map(|&m| T::lit((m + CATEGORICAL_SMOOTHING) / total))
            .collect()
    };
    let cast = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
    let params = MixtureParams {
        p_s: cast(&p_s),
        means: means.iter().map(|m| cast(m)).collect(),
        variances: variances.iter().map(|v| cast(v)).collect(),
        label_probs: label_mass.iter().map(|m| smooth(m)).collect(),
        pred_probs: pred_mass.iter().map(|m| smooth(m)).collect(),
    };
    Ok((params, rescued))
}

/// Fits the mixture on validation data: projection, confusion-matrix
/// initialization, then alternating M- and E-steps until the relative
/// log-likelihood improvement drops below `rel_tol` or `max_iter` is hit.
pub fn fit<T: Scalar>(
    emb: &EmbeddingMatrix<T>,
    split: &LabeledSplit,
    cfg: &FitConfig,
) -> Result<MixtureFit<T>, FitError> {
    cfg.validate()?;
    check_rows(emb, split)?;
    if emb.n() < cfg.k_bar {
        return Err(FitError::TooFewExamples {
            n: emb.n(),
            k_bar: cfg.k_bar,
        });
    }
    let (reduced, _, projection) = reduce_dim(emb, emb, cfg)?;
    let mut q = init_confusion::<T>(split, cfg)?;
    let mut rng = stream(cfg.seed, &["rescue"]);
    let mut diagnostics = FitDiagnostics::default();
    let mut params = None;
    for it in 0..cfg.max_iter.max(1) {
        let (p, rescued) = m_step(&reduced, split, &q, cfg, &mut rng)?;
        diagnostics
            .rescued
            .extend(rescued.into_iter().map(|j| (it, j)));
        let (next_q, ll) = e_step(&reduced, split, &p, cfg.gamma)?;
        q = next_q;
        params = Some(p);
        diagnostics.iterations = it + 1;
        let prev = diagnostics.log_likelihoods.last().copied();
        diagnostics.log_likelihoods.push(ll);
        if let Some(prev) = prev {
            if ll - prev < cfg.rel_tol * prev.abs() && !diagnostics.rescued_at(it) {
                diagnostics.converged = true;
                break;
            }
        }
    }
    Ok(MixtureFit {
        config: cfg.clone(),
        projection,
        params: params.expect("at least one iteration runs"),
        responsibilities: q,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SplitParts;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn split(labels: Vec<usize>, preds: Vec<usize>) -> LabeledSplit {
        let n = labels.len();
        LabeledSplit::new(SplitParts {
            num_classes: 2,
            labels,
            predictions: preds,
            prediction_probs: None,
            slice_names: vec!["s".into()],
            slices: vec![vec![false; n]],
        })
        .unwrap()
    }

    fn blobs(
        centers: &[f64],
        per: usize,
        sd: f64,
        seed: u64,
    ) -> (EmbeddingMatrix<f64>, LabeledSplit) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut preds = Vec::new();
        for (b, &c) in centers.iter().enumerate() {
            for _ in 0..per {
                rows.push(vec![c + noise.sample(&mut rng), noise.sample(&mut rng)]);
                labels.push(b % 2);
                preds.push((b / 2) % 2);
            }
        }
        (
            EmbeddingMatrix::from_rows(&rows).unwrap(),
            split(labels, preds),
        )
    }

    #[test]
    fn noiseless_init_is_one_hot_on_the_confusion_cell() {
        let s = split(vec![0, 0, 1, 1], vec![0, 1, 0, 1]);
        let cfg = FitConfig {
            k_bar: 4,
            k_hat: 1,
            init_noise: 0.0,
            ..Default::default()
        };
        let q = init_confusion::<f64>(&s, &cfg).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(q.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let small = FitConfig {
            k_bar: 3,
            k_hat: 1,
            ..Default::default()
        };
        assert!(matches!(
            init_confusion::<f64>(&s, &small),
            Err(FitError::TooFewSlices { k_bar: 3, cells: 4 })
        ));
    }

    #[test]
    fn default_components_cover_each_cell_at_least_six_times() {
        let cells: Vec<usize> = (0..25).map(|j| j % 4).collect();
        for cell in 0..4 {
            assert!(cells.iter().filter(|&&c| c == cell).count() >= 25 / 4);
        }
    }

    #[test]
    fn init_rows_are_normalized_across_seeds() {
        let s = split(vec![0, 1, 1, 0, 1], vec![1, 1, 0, 0, 1]);
        for seed in 0..100 {
            let cfg = FitConfig {
                seed,
                init_noise: 0.3,
                ..Default::default()
            };
            let q = init_confusion::<f64>(&s, &cfg).unwrap();
            for i in 0..q.n() {
                let sum: f64 = q.row(i).iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    fn params_1d(
        p_s: Vec<f64>,
        means: Vec<f64>,
        vars: Vec<f64>,
        label: Vec<[f64; 2]>,
        pred: Vec<[f64; 2]>,
    ) -> MixtureParams<f64> {
        MixtureParams {
            p_s,
            means: means.into_iter().map(|m| vec![m]).collect(),
            variances: vars.into_iter().map(|v| vec![v]).collect(),
            label_probs: label.into_iter().map(|p| p.to_vec()).collect(),
            pred_probs: pred.into_iter().map(|p| p.to_vec()).collect(),
        }
    }

    #[test]
    fn single_component_posterior_is_one() {
        let emb: EmbeddingMatrix<f64> =
            EmbeddingMatrix::from_rows(&[vec![0.5, -1.0], vec![2.0, 0.0], vec![-0.3, 0.7]])
                .unwrap();
        let s = split(vec![0, 1, 1], vec![0, 0, 1]);
        let params = MixtureParams {
            p_s: vec![1.0],
            means: vec![vec![0.1, 0.2]],
            variances: vec![vec![1.5, 0.5]],
            label_probs: vec![vec![0.3, 0.7]],
            pred_probs: vec![vec![0.6, 0.4]],
        };
        let gamma = 10.0;
        let (q, ll) = e_step(&emb, &s, &params, gamma).unwrap();
        assert!(q.values().iter().all(|&v| v == 1.0));
        let mut expected = 0.0;
        for i in 0..3 {
            let z = emb.row(i);
            for k in 0..2 {
                let (m, v) = (params.means[0][k], params.variances[0][k]);
                expected += -0.5 * (2.0 * PI * v).ln() - (z[k] - m).powi(2) / (2.0 * v);
            }
            expected += gamma
                * (params.label_probs[0][s.labels()[i]].ln()
                    + params.pred_probs[0][s.predictions()[i]].ln());
        }
        assert!((ll - expected).abs() < 1e-10);
    }

    #[test]
    fn two_by_two_matches_hand_arithmetic() {
        // z = 0 and z = 2, components at 0 and 2 with unit variance
        let emb: EmbeddingMatrix<f64> =
            EmbeddingMatrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let s = split(vec![0, 1], vec![0, 0]);
        let params = params_1d(
            vec![0.5, 0.5],
            vec![0.0, 2.0],
            vec![1.0, 1.0],
            vec![[0.5, 0.5], [0.5, 0.5]],
            vec![[0.5, 0.5], [0.5, 0.5]],
        );
        let (q, _) = e_step(&emb, &s, &params, 1.0).unwrap();
        // densities differ by exp(-2): q = 1 / (1 + e^-2)
        let near = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((q.get(0, 0) - near).abs() < 1e-12);
        assert!((q.get(0, 1) - (1.0 - near)).abs() < 1e-12);
        assert!((q.get(1, 1) - near).abs() < 1e-12);

        // labels tip the balance: p_0[y=1] = 0.2, p_1[y=1] = 0.8 at gamma 1
        let tilted = params_1d(
            vec![0.5, 0.5],
            vec![0.0, 2.0],
            vec![1.0, 1.0],
            vec![[0.8, 0.2], [0.2, 0.8]],
            vec![[0.5, 0.5], [0.5, 0.5]],
        );
        let (q, _) = e_step(&emb, &s, &tilted, 1.0).unwrap();
        let a = (-2.0f64).exp() * 0.2;
        let b = 0.8;
        assert!((q.get(1, 0) - a / (a + b)).abs() < 1e-12);
    }

    #[test]
    fn gamma_zero_matches_plain_mixture_posterior() {
        let (emb, s) = blobs(&[-2.0, 0.0, 3.0], 40, 1.0, 9);
        let params = MixtureParams {
            p_s: vec![0.2, 0.5, 0.3],
            means: vec![vec![-2.0, 0.1], vec![0.2, 0.0], vec![2.5, -0.3]],
            variances: vec![vec![1.1, 0.9], vec![0.8, 1.2], vec![1.3, 1.0]],
            label_probs: vec![vec![0.999, 0.001], vec![0.5, 0.5], vec![0.01, 0.99]],
            pred_probs: vec![vec![0.9, 0.1], vec![0.3, 0.7], vec![0.6, 0.4]],
        };
        let (q, _) = e_step(&emb, &s, &params, 0.0).unwrap();
        for i in 0..emb.n() {
            let z = emb.row(i);
            let dens: Vec<f64> = (0..3)
                .map(|j| {
                    let mut p = params.p_s[j];
                    for k in 0..2 {
                        let v = params.variances[j][k];
                        p *= (-(z[k] - params.means[j][k]).powi(2) / (2.0 * v)).exp()
                            / (2.0 * PI * v).sqrt();
                    }
                    p
                })
                .collect();
            let total: f64 = dens.iter().sum();
            for j in 0..3 {
                assert!((q.get(i, j) - dens[j] / total).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hard_assignments_give_cluster_means() {
        let emb: EmbeddingMatrix<f64> =
            EmbeddingMatrix::from_rows(&[vec![1.0], vec![2.0], vec![10.0], vec![14.0]]).unwrap();
        let s = split(vec![0, 0, 1, 1], vec![0, 1, 1, 1]);
        let q = Responsibilities::from_raw(4, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let mut rng = stream(0, &["t"]);
        let (p, rescued) = m_step(&emb, &s, &q, &FitConfig::default(), &mut rng).unwrap();
        assert!(rescued.is_empty());
        assert_eq!(p.means, vec![vec![1.5], vec![12.0]]);
        assert!((p.variances[0][0] - 0.25).abs() < 1e-12);
        assert!((p.variances[1][0] - 4.0).abs() < 1e-12);
        assert!((p.pred_probs[0][1] - 0.5).abs() < 1e-8);
        assert!((p.label_probs[1][1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn uniform_weights_give_global_statistics() {
        let (emb, s) = blobs(&[0.0, 5.0], 25, 1.0, 3);
        let k = 4;
        let q = Responsibilities::from_raw(emb.n(), k, vec![0.25; emb.n() * k]);
        let mut rng = stream(0, &["t"]);
        let (p, _) = m_step(&emb, &s, &q, &FitConfig::default(), &mut rng).unwrap();
        let mean: f64 = emb.rows().map(|r| r[0]).sum::<f64>() / emb.n() as f64;
        let pos = s.labels().iter().filter(|&&y| y == 1).count() as f64 / emb.n() as f64;
        for j in 0..k {
            assert!((p.means[j][0] - mean).abs() < 1e-12);
            assert!((p.label_probs[j][1] - pos).abs() < 1e-8);
        }
    }

    #[test]
    fn weighted_moments_match_streaming_oracle() {
        let (emb, s) = blobs(&[-1.0, 1.0, 4.0], 30, 1.5, 11);
        let mut wrng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let k = 3;
        let mut raw: Vec<f64> = (0..emb.n() * k)
            .map(|_| wrng.random::<f64>() + 1e-3)
            .collect();
        for row in raw.chunks_mut(k) {
            let t: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= t);
        }
        let q = Responsibilities::from_raw(emb.n(), k, raw);
        let mut rng = stream(0, &["t"]);
        let (p, _) = m_step(&emb, &s, &q, &FitConfig::default(), &mut rng).unwrap();
        for j in 0..k {
            for dim in 0..2 {
                // West's weighted incremental mean and variance
                let (mut wsum, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
                for i in 0..emb.n() {
                    let w = q.get(i, j);
                    let x = emb.row(i)[dim];
                    wsum += w;
                    let delta = x - mean;
                    mean += w / wsum * delta;
                    m2 += w * delta * (x - mean);
                }
                assert!((p.means[j][dim] - mean).abs() < 1e-9);
                assert!((p.variances[j][dim] - m2 / wsum).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_component_is_reseeded() {
        let emb: EmbeddingMatrix<f64> =
            EmbeddingMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let s = split(vec![0, 1, 0], vec![0, 1, 1]);
        let q = Responsibilities::from_raw(3, 2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let mut rng = stream(0, &["t"]);
        let (p, rescued) = m_step(&emb, &s, &q, &FitConfig::default(), &mut rng).unwrap();
        assert_eq!(rescued, vec![1]);
        p.validate(1e-6, 1e-9).unwrap();
        assert!((p.p_s[1] - 0.5 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_never_decreases() {
        for seed in 0..10 {
            let (emb, s) = blobs(&[-3.0, 0.0, 2.0, 6.0], 50, 1.0, seed);
            let cfg = FitConfig {
                k_bar: 8,
                k_hat: 2,
                seed,
                max_iter: 60,
                ..Default::default()
            };
            let f = fit(&emb, &s, &cfg).unwrap();
            let ll = &f.diagnostics.log_likelihoods;
            for t in 1..ll.len() {
                if !f.diagnostics.rescued_at(t) {
                    assert!(
                        ll[t] >= ll[t - 1] - 1e-8,
                        "seed {seed} iter {t}: {} < {}",
                        ll[t],
                        ll[t - 1]
                    );
                }
            }
            f.params.validate(cfg.cov_floor, 1e-9).unwrap();
        }
    }

    #[test]
    fn separated_blobs_recover_centers() {
        let centers = [-10.0, 0.0, 10.0, 20.0];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut preds = Vec::new();
        for (b, &c) in centers.iter().enumerate() {
            for _ in 0..2000 {
                rows.push(vec![c + noise.sample(&mut rng), noise.sample(&mut rng)]);
                labels.push(b / 2);
                preds.push(b % 2);
            }
        }
        let emb: EmbeddingMatrix<f64> = EmbeddingMatrix::from_rows(&rows).unwrap();
        let s = split(labels, preds);
        // one blob per confusion cell; k_bar cannot go below C^2 = 4
        let cfg = FitConfig {
            k_bar: 4,
            k_hat: 1,
            gamma: 0.0,
            init_noise: 0.0,
            ..Default::default()
        };
        let f = fit(&emb, &s, &cfg).unwrap();
        for &c in &centers {
            let best = f
                .params
                .means
                .iter()
                .map(|m| ((m[0] - c).powi(2) + m[1].powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 0.1, "center {c}: nearest mean at distance {best}");
        }
        for m in &f.params.means {
            assert!(centers
                .iter()
                .any(|&c| ((m[0] - c).powi(2) + m[1].powi(2)).sqrt() < 0.1));
        }
    }

    #[test]
    fn rescaling_embeddings_and_floor_preserves_posteriors() {
        let (emb, s) = blobs(&[-2.0, 1.0, 3.0], 40, 1.0, 4);
        let cfg = FitConfig {
            k_bar: 6,
            k_hat: 2,
            max_iter: 30,
            ..Default::default()
        };
        let base = fit(&emb, &s, &cfg).unwrap();
        let factor = 37.5;
        let scaled_cfg = FitConfig {
            cov_floor: cfg.cov_floor * factor * factor,
            ..cfg.clone()
        };
        let scaled = fit(&emb.scaled(factor).unwrap(), &s, &scaled_cfg).unwrap();
        assert_eq!(base.diagnostics.iterations, scaled.diagnostics.iterations);
        for (a, b) in base
            .responsibilities
            .values()
            .iter()
            .zip(scaled.responsibilities.values())
        {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let (emb, s) = blobs(&[-2.0, 1.0, 3.0], 40, 1.0, 8);
        let cfg = FitConfig {
            k_bar: 6,
            k_hat: 2,
            seed: 3,
            ..Default::default()
        };
        let a = fit(&emb, &s, &cfg).unwrap();
        let b = fit(&emb, &s, &cfg).unwrap();
        assert_eq!(a.diagnostics, b.diagnostics);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn fewer_examples_than_components_is_rejected() {
        let (emb, s) = blobs(&[0.0, 1.0], 5, 1.0, 1);
        assert!(matches!(
            fit(&emb, &s, &FitConfig::default()),
            Err(FitError::TooFewExamples { n: 10, k_bar: 25 })
        ));
    }
}

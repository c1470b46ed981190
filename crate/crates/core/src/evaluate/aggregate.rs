use std::collections::BTreeMap;
use std::fmt::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::SliceType;
use crate::method::Method;
use crate::rng::{derive_seed, stream};

use super::{EvalError, SettingResult};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub mean_precision_at_k: f64,
    pub n_settings: usize,
}

/// Mean precision with a 95% percentile-bootstrap interval for one
/// `(method, slice_type)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub method: Method,
    pub slice_type: SliceType,
    pub mean_precision_at_k: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_settings: usize,
    pub success_rate: f64,
    pub n_excluded: usize,
    pub n_failed: usize,
    pub per_alpha: Vec<AlphaRow>,
}

/// `count` resamples of `n` indices drawn with replacement.
pub fn resample_indices(n: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = stream(seed, &["bootstrap"]);
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(0..n)).collect())
        .collect()
}

/// Linear-interpolation quantile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and 95% percentile-bootstrap interval of `values` under the given
/// resamples. The interval is widened to contain the mean if needed.
pub fn bootstrap_mean_ci(
    values: &[f64],
    resamples: &[Vec<usize>],
) -> Result<(f64, f64, f64), EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyGroup("no values to aggregate".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut means: Vec<f64> = resamples
        .iter()
        .map(|idx| idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64)
        .collect();
    if means.is_empty() {
        return Ok((mean, mean, mean));
    }
    means.sort_by(f64::total_cmp);
    let lo = percentile(&means, 0.025).min(mean);
    let hi = percentile(&means, 0.975).max(mean);
    Ok((mean, lo, hi))
}

/// Groups valid results by `(method, slice_type)` and summarizes each.
/// Values are sorted before resampling, so the output does not depend on the
/// order of `results`.
pub fn aggregate(results: &[SettingResult], seed: u64) -> Vec<AggregateReport> {
    let mut groups: BTreeMap<(Method, SliceType), Vec<&SettingResult>> = BTreeMap::new();
    let mut failed: BTreeMap<Method, usize> = BTreeMap::new();
    for r in results {
        match r.slice_type {
            Some(t) => groups.entry((r.method, t)).or_default().push(r),
            None => *failed.entry(r.method).or_default() += 1,
        }
    }
    let mut out = Vec::new();
    for ((method, slice_type), members) in groups {
        let valid: Vec<&SettingResult> = members.iter().copied().filter(|r| r.is_valid()).collect();
        let mut values: Vec<f64> = valid.iter().filter_map(|r| r.precision_at_k).collect();
        values.sort_by(f64::total_cmp);
        let group_seed = derive_seed(seed, &[method.as_str(), slice_type.as_str()]);
        let resamples = resample_indices(values.len(), BOOTSTRAP_RESAMPLES, group_seed);
        let Ok((mean, lo, hi)) = bootstrap_mean_ci(&values, &resamples) else {
            log::warn!("{method} / {slice_type}: no valid settings to aggregate");
            continue;
        };
        let mut by_alpha: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
        for r in &valid {
            let (Some(alpha), Some(p)) = (r.alpha, r.precision_at_k) else {
                continue;
            };
            by_alpha
                .entry(alpha.to_bits())
                .or_insert((alpha, Vec::new()))
                .1
                .push(p);
        }
        let mut per_alpha: Vec<AlphaRow> = by_alpha
            .into_values()
            .map(|(alpha, mut ps)| {
                ps.sort_by(f64::total_cmp);
                AlphaRow {
                    alpha,
                    mean_precision_at_k: ps.iter().sum::<f64>() / ps.len() as f64,
                    n_settings: ps.len(),
                }
            })
            .collect();
        per_alpha.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        let successes = valid
            .iter()
            .filter(|r| r.slices.iter().any(|s| s.success_at_beta))
            .count();
        out.push(AggregateReport {
            method,
            slice_type,
            mean_precision_at_k: mean,
            ci_low: lo,
            ci_high: hi,
            n_settings: values.len(),
            success_rate: successes as f64 / values.len() as f64,
            n_excluded: members.iter().filter(|r| r.excluded).count(),
            n_failed: members.iter().filter(|r| r.error.is_some()).count(),
            per_alpha,
        });
    }
    out
}

/// Full evaluation output: per-setting rows sorted by setting id, then
/// method, followed by the aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub beta: f64,
    pub seed: u64,
    pub results: Vec<SettingResult>,
    pub aggregates: Vec<AggregateReport>,
}

impl EvalReport {
    pub fn new(mut results: Vec<SettingResult>, k: usize, beta: f64, seed: u64) -> Self {
        results.sort_by(|a, b| {
            a.setting_id
                .cmp(&b.setting_id)
                .then(a.method.cmp(&b.method))
        });
        let aggregates = aggregate(&results, seed);
        Self {
            k,
            beta,
            seed,
            results,
            aggregates,
        }
    }
}

/// Markdown table of method x slice type with mean and interval.
pub fn render_markdown(report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Slice discovery results\n");
    let _ = writeln!(
        s,
        "precision@{} (95% bootstrap CI, {} resamples)\n",
        report.k, BOOTSTRAP_RESAMPLES
    );
    let _ = writeln!(
        s,
        "| method | slice type | mean | 95% CI | settings | success@{} | excluded | failed |",
        report.beta
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
    for a in &report.aggregates {
        let _ = writeln!(
            s,
            "| {} | {} | {:.3} | [{:.3}, {:.3}] | {} | {:.3} | {} | {} |",
            a.method,
            a.slice_type,
            a.mean_precision_at_k,
            a.ci_low,
            a.ci_high,
            a.n_settings,
            a.success_rate,
            a.n_excluded,
            a.n_failed
        );
    }
    let errors: Vec<&SettingResult> = report
        .results
        .iter()
        .filter(|r| r.error.is_some())
        .collect();
    if !errors.is_empty() {
        let _ = writeln!(s, "\n## Failed settings\n");
        for r in errors {
            let _ = writeln!(
                s,
                "- {} ({}): {}",
                r.setting_id,
                r.method,
                r.error.as_deref().unwrap_or("")
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ModelKind;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn result(id: usize, p: f64, alpha: f64) -> SettingResult {
        SettingResult {
            setting_id: format!("s{id:03}"),
            method: Method::Domino,
            slice_type: Some(SliceType::Rare),
            alpha: Some(alpha),
            model_kind: Some(ModelKind::Synthetic),
            slices: Vec::new(),
            precision_at_k: Some(p),
            excluded: false,
            fit: serde_json::Value::Null,
            error: None,
            wall_time: 0.0,
        }
    }

    #[test]
    fn single_and_constant_samples_have_degenerate_intervals() {
        let r = aggregate(&[result(0, 0.7, 0.05)], 1);
        assert_eq!(
            (r[0].mean_precision_at_k, r[0].ci_low, r[0].ci_high),
            (0.7, 0.7, 0.7)
        );
        let same: Vec<SettingResult> = (0..20).map(|i| result(i, 0.4, 0.05)).collect();
        let r = aggregate(&same, 1);
        assert_eq!(r[0].ci_low, r[0].ci_high);
        assert_eq!(r[0].ci_low, r[0].mean_precision_at_k);
        assert!((r[0].mean_precision_at_k - 0.4).abs() < 1e-15);
        assert!(matches!(
            bootstrap_mean_ci(&[], &[]),
            Err(EvalError::EmptyGroup(_))
        ));
    }

    #[test]
    fn interval_matches_shared_index_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let values: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let idx = resample_indices(200, 1000, 77);
        let (mean, lo, hi) = bootstrap_mean_ci(&values, &idx).unwrap();

        let mut boot = Vec::new();
        for r in &idx {
            let mut acc = 0.0;
            for &i in r {
                acc += values[i];
            }
            boot.push(acc / 200.0);
        }
        boot.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // type-7 quantiles: position (m - 1) q
        let q = |p: f64| {
            let pos = 999.0 * p;
            let i = pos as usize;
            boot[i] + (pos - i as f64) * (boot[i + 1] - boot[i])
        };
        assert!((lo - q(0.025)).abs() < 1e-12);
        assert!((hi - q(0.975)).abs() < 1e-12);
        assert!(lo <= mean && mean <= hi);
    }

    #[test]
    fn per_alpha_breakdown() {
        let rs = vec![
            result(0, 1.0, 0.05),
            result(1, 0.0, 0.05),
            result(2, 0.5, 0.08),
        ];
        let r = aggregate(&rs, 0);
        assert_eq!(r[0].per_alpha.len(), 2);
        assert_eq!(r[0].per_alpha[0].mean_precision_at_k, 0.5);
        assert_eq!(r[0].per_alpha[1].n_settings, 1);
    }

    proptest! {
        #[test]
        fn aggregation_ignores_result_order(
            ps in prop::collection::vec(0.0f64..1.0, 1..40),
            rotate in 0usize..40,
        ) {
            let rs: Vec<SettingResult> = ps.iter().enumerate().map(|(i, &p)| result(i, p, 0.05)).collect();
            let mut shuffled = rs.clone();
            let len = shuffled.len();
            shuffled.rotate_left(rotate % len);
            shuffled.reverse();
            prop_assert_eq!(aggregate(&rs, 3), aggregate(&shuffled, 3));
            let a = &aggregate(&rs, 3)[0];
            prop_assert!(a.ci_low <= a.mean_precision_at_k && a.mean_precision_at_k <= a.ci_high);
        }
    }
}

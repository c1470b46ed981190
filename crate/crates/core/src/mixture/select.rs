use crate::scalar::Scalar;

use super::MixtureParams;

/// `sum_c |phat_j[c] - p_j[c]|` for component `j`.
pub fn slice_error_score<T: Scalar>(params: &MixtureParams<T>, j: usize) -> f64 {
    params.pred_probs[j]
        .iter()
        .zip(&params.label_probs[j])
        .map(|(&a, &b)| (a.as_f64() - b.as_f64()).abs())
        .sum()
}

/// The `k_hat` components with the largest error score, descending, ties to
/// the lower index. `k_hat` is capped at the number of components.
pub fn select_slices<T: Scalar>(params: &MixtureParams<T>, k_hat: usize) -> Vec<usize> {
    let scores: Vec<f64> = (0..params.k())
        .map(|j| slice_error_score(params, j))
        .collect();
    let mut order: Vec<usize> = (0..params.k()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(k_hat);
    order
}

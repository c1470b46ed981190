use serde::{Deserialize, Serialize};

use super::GenError;

/// Counts of the four `(y, c)` cells of a subsampled dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub n11: usize,
    pub n10: usize,
    pub n01: usize,
    pub n00: usize,
    pub n: usize,
}

impl CellCounts {
    /// Indexed `[y][c]`.
    pub fn cell(&self, y: usize, c: usize) -> usize {
        match (y, c) {
            (1, 1) => self.n11,
            (1, 0) => self.n10,
            (0, 1) => self.n01,
            _ => self.n00,
        }
    }

    /// Sample Pearson correlation of Y and C implied by the counts (the phi
    /// coefficient). `None` when either variable is constant.
    pub fn implied_correlation(&self) -> Option<f64> {
        let n = self.n as f64;
        let n_y = (self.n11 + self.n10) as f64;
        let n_c = (self.n11 + self.n01) as f64;
        let denom = (n_y * (n - n_y) * n_c * (n - n_c)).sqrt();
        (denom > 0.0).then(|| (n * self.n11 as f64 - n_y * n_c) / denom)
    }
}

/// Cell counts for a subsample of size `n` whose Y and C have means
/// `mu_a`, `mu_b` and Pearson correlation `alpha`.
///
/// `n11 = round(alpha * n * sqrt(mu_a(1-mu_a) * mu_b(1-mu_b)) + mu_a * mu_b * n)`;
/// the remaining cells follow from the rounded marginals `round(mu_a n)` and
/// `round(mu_b n)`.
pub fn correlation_counts(
    alpha: f64,
    mu_a: f64,
    mu_b: f64,
    n: usize,
) -> Result<CellCounts, GenError> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(GenError::InvalidInput(format!(
            "alpha {alpha} must lie in (-1, 1)"
        )));
    }
    for (name, mu) in [("mu_a", mu_a), ("mu_b", mu_b)] {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(GenError::InvalidInput(format!(
                "{name} {mu} must lie in (0, 1)"
            )));
        }
    }
    if n < 4 {
        return Err(GenError::InvalidInput(format!(
            "n = {n} is below the minimum of 4"
        )));
    }
    let nf = n as f64;
    let var_y = mu_a * (1.0 - mu_a);
    let var_c = mu_b * (1.0 - mu_b);
    let n11 = (alpha * nf * (var_y * var_c).sqrt() + mu_a * mu_b * nf).round() as i64;
    let n_y = (mu_a * nf).round() as i64;
    let n_c = (mu_b * nf).round() as i64;
    let n10 = n_y - n11;
    let n01 = n_c - n11;
    let n00 = n as i64 - (n_y + n_c - n11);
    if [n11, n10, n01, n00].iter().any(|&v| v < 0) {
        return Err(GenError::InfeasibleCounts { n11, n10, n01, n00 });
    }
    Ok(CellCounts {
        n11: n11 as usize,
        n10: n10 as usize,
        n01: n01 as usize,
        n00: n00 as usize,
        n,
    })
}

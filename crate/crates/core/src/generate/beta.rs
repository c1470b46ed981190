use statrs::function::beta::beta_reg;

use super::GenError;

pub const RATE_MIN: f64 = 0.001;
pub const RATE_MAX: f64 = 0.999;
pub const BETA_MAX_STEPS: usize = 200;
const RATE_TOL: f64 = 1e-6;

/// `P(X > 0.5)` for `X ~ Beta(a, b)`.
pub fn beta_survival_at_half(a: f64, b: f64) -> f64 {
    1.0 - beta_reg(a, b, 0.5)
}

/// Shape parameters `(a, b)` with `a + b = kappa` such that a beta draw
/// exceeds 0.5 with probability `target_rate` (clamped to `[0.001, 0.999]`).
///
/// The survival at 0.5 increases monotonically in `a` along `a + b = kappa`,
/// so `a` is found by bisection on `(0, kappa)`.
pub fn solve_beta(target_rate: f64, kappa: f64) -> Result<(f64, f64), GenError> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(GenError::InvalidInput(format!(
            "kappa {kappa} must be positive"
        )));
    }
    if !target_rate.is_finite() {
        return Err(GenError::InvalidInput(format!(
            "target rate {target_rate} is not finite"
        )));
    }
    let target = target_rate.clamp(RATE_MIN, RATE_MAX);
    let (mut lo, mut hi) = (0.0, kappa);
    let mut best = (f64::INFINITY, kappa / 2.0);
    for _ in 0..BETA_MAX_STEPS {
        let a = 0.5 * (lo + hi);
        if a <= 0.0 || a >= kappa {
            break;
        }
        let gap = beta_survival_at_half(a, kappa - a) - target;
        if gap.abs() < best.0 {
            best = (gap.abs(), a);
        }
        if gap.abs() < 1e-14 {
            break;
        }
        if gap < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        if hi - lo <= f64::EPSILON * kappa {
            break;
        }
    }
    if best.0 > RATE_TOL {
        return Err(GenError::NoConvergence { target, kappa });
    }
    Ok((best.1, kappa - best.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integration of the beta density on [0.5, 1]; the
    /// log-normaliser comes from the gamma function, not the incomplete beta.
    fn survival_by_quadrature(a: f64, b: f64) -> f64 {
        use statrs::function::gamma::ln_gamma;
        let ln_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
        let pdf = |x: f64| (ln_norm + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()).exp();
        let steps = 200_000;
        let h = 0.5 / steps as f64;
        let mut acc = 0.0;
        for i in 0..=steps {
            let x = 0.5 + i as f64 * h;
            let fx = if i == steps { 0.0 } else { pdf(x) };
            let w = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * fx;
        }
        acc * h / 3.0
    }

    #[test]
    fn symmetric_rate_gives_equal_shapes() {
        let (a, b) = solve_beta(0.5, 5.0).unwrap();
        assert!((a - 2.5).abs() < 1e-12 && (b - 2.5).abs() < 1e-12);
    }

    #[test]
    fn three_quarter_rate_matches_quadrature() {
        let (a, b) = solve_beta(0.75, 5.0).unwrap();
        assert!((a + b - 5.0).abs() < 1e-12);
        assert!((survival_by_quadrature(a, b) - 0.75).abs() < 1e-6);
    }

    #[test]
    fn extreme_rates_are_clamped() {
        let (a, b) = solve_beta(0.9999, 5.0).unwrap();
        let (a2, b2) = solve_beta(0.999, 5.0).unwrap();
        assert_eq!((a, b), (a2, b2));
        assert!((beta_survival_at_half(a, b) - 0.999).abs() < 1e-6);
        let (a, b) = solve_beta(0.0, 5.0).unwrap();
        assert!((beta_survival_at_half(a, b) - 0.001).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_concentration() {
        assert!(solve_beta(0.5, 0.0).is_err());
        assert!(solve_beta(0.5, f64::NAN).is_err());
    }

    #[test]
    fn quadrature_oracle_agrees_with_incomplete_beta() {
        for (a, b) in [(2.0, 3.0), (0.7, 4.3), (3.0, 1.5)] {
            assert!((survival_by_quadrature(a, b) - beta_survival_at_half(a, b)).abs() < 1e-6);
        }
    }
}

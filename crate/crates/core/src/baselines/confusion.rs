use crate::dataset::{LabeledSplit, SliceScores};
use crate::scalar::Scalar;

use super::BaselineError;

pub const CONFUSION_ID: &str = "confusion";

/// One indicator column per confusion-matrix cell, in row-major `(y, yhat)`
/// order.
pub fn confusion_sdm<T: Scalar>(split: &LabeledSplit) -> Result<SliceScores<T>, BaselineError> {
    let c = split.num_classes();
    let columns: Vec<Vec<T>> = (0..c * c)
        .map(|cell| {
            split
                .labels()
                .iter()
                .zip(split.predictions())
                .map(|(&y, &yh)| {
                    if y * c + yh == cell {
                        T::one()
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect();
    Ok(SliceScores::from_columns(CONFUSION_ID, &columns)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SplitParts;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn cells_partition_the_examples(
            pairs in prop::collection::vec((0usize..3, 0usize..3), 1..60),
        ) {
            let (labels, preds): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let n = labels.len();
            let split = LabeledSplit::new(SplitParts {
                num_classes: 3,
                labels: labels.clone(),
                predictions: preds.clone(),
                prediction_probs: None,
                slice_names: vec!["s".into()],
                slices: vec![vec![false; n]],
            })
            .unwrap();
            let s = confusion_sdm::<f64>(&split).unwrap();
            prop_assert_eq!(s.k_hat(), 9);
            for i in 0..n {
                let row = s.row(i);
                prop_assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
                prop_assert_eq!(row.iter().filter(|&&v| v == 0.0).count(), 8);
                prop_assert_eq!(row[labels[i] * 3 + preds[i]], 1.0);
            }
        }
    }
}

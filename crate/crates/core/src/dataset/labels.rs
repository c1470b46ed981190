use std::path::Path;

use crate::scalar::Scalar;

use super::{load_embeddings, DataError, EmbeddingMatrix, LabeledSplit, SchemaError, SplitParts};

enum Column {
    Id,
    Label,
    Prediction,
    Prob(usize),
    Slice(usize),
}

fn parse_class(field: &str, row: usize, column: &str) -> Result<i64, DataError> {
    field.parse::<i64>().map_err(|_| {
        SchemaError::BadValue {
            row,
            column: column.to_string(),
            value: field.to_string(),
        }
        .into()
    })
}

fn check_class(value: i64, row: usize, num_classes: Option<usize>) -> Result<usize, DataError> {
    let limit = num_classes.map_or(i64::MAX, |c| c as i64);
    if value < 0 || value >= limit {
        return Err(DataError::LabelOutOfRange {
            row,
            value,
            num_classes: num_classes.unwrap_or(0),
        });
    }
    Ok(value as usize)
}

/// Reads a labels CSV with header `id,y,y_hat[,p_0..p_{C-1}][,s_<name>...]`.
///
/// The class count comes from the probability columns when present, else
/// from `num_classes`, else from the largest class index seen (at least 2).
/// `y_hat` may be left blank when probabilities are supplied.
pub fn read_labels_csv(
    path: impl AsRef<Path>,
    num_classes: Option<usize>,
) -> Result<LabeledSplit, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();

    let mut columns = Vec::with_capacity(headers.len());
    let mut slice_names = Vec::new();
    let mut prob_count = 0usize;
    for name in headers.iter() {
        let col = match name {
            "id" => Column::Id,
            "y" => Column::Label,
            "y_hat" => Column::Prediction,
            _ if name.starts_with("p_") => {
                let idx: usize = name[2..]
                    .parse()
                    .map_err(|_| SchemaError::ProbabilityColumns(name.to_string()))?;
                if idx != prob_count || !slice_names.is_empty() {
                    return Err(SchemaError::ProbabilityColumns(name.to_string()).into());
                }
                prob_count += 1;
                Column::Prob(idx)
            }
            _ if name.starts_with("s_") && name.len() > 2 => {
                slice_names.push(name[2..].to_string());
                Column::Slice(slice_names.len() - 1)
            }
            _ => return Err(SchemaError::UnknownColumn(name.to_string()).into()),
        };
        columns.push(col);
    }
    for required in ["id", "y", "y_hat"] {
        if !headers.iter().any(|h| h == required) {
            return Err(SchemaError::MissingColumn(required.to_string()).into());
        }
    }
    if slice_names.is_empty() {
        return Err(SchemaError::NoSlices.into());
    }
    let has_probs = prob_count > 0;
    let declared = if has_probs {
        if let Some(c) = num_classes.filter(|&c| c != prob_count) {
            return Err(SchemaError::Inconsistent(format!(
                "{prob_count} probability columns but {c} classes expected"
            ))
            .into());
        }
        Some(prob_count)
    } else {
        num_classes
    };

    let mut labels = Vec::new();
    let mut predictions = Vec::new();
    let mut probs: Vec<Vec<f64>> = Vec::new();
    let mut slices = vec![Vec::new(); slice_names.len()];
    let mut any_blank_pred = false;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut p = vec![0.0; prob_count];
        let mut pred = None;
        for (field, col) in record.iter().zip(&columns) {
            match col {
                Column::Id => {
                    if field.parse::<usize>().ok() != Some(row) {
                        return Err(SchemaError::BadId { row }.into());
                    }
                }
                Column::Label => {
                    let v = parse_class(field, row, "y")?;
                    labels.push(check_class(v, row, declared)?);
                }
                Column::Prediction => {
                    if field.is_empty() && has_probs {
                        any_blank_pred = true;
                    } else {
                        let v = parse_class(field, row, "y_hat")?;
                        pred = Some(check_class(v, row, declared)?);
                    }
                }
                Column::Prob(k) => {
                    p[*k] = field.parse().map_err(|_| SchemaError::BadValue {
                        row,
                        column: format!("p_{k}"),
                        value: field.to_string(),
                    })?;
                }
                Column::Slice(j) => {
                    let member = match field {
                        "0" => false,
                        "1" => true,
                        _ => {
                            return Err(SchemaError::BadValue {
                                row,
                                column: format!("s_{}", slice_names[*j]),
                                value: field.to_string(),
                            }
                            .into())
                        }
                    };
                    slices[*j].push(member);
                }
            }
        }
        if let Some(v) = pred {
            predictions.push(v);
        }
        if has_probs {
            probs.push(p);
        }
    }

    if any_blank_pred {
        // harden every row from its probabilities
        predictions.clear();
    }
    let num_classes = declared.unwrap_or_else(|| {
        labels
            .iter()
            .chain(&predictions)
            .max()
            .map_or(2, |&m| (m + 1).max(2))
    });
    LabeledSplit::new(SplitParts {
        num_classes,
        labels,
        predictions,
        prediction_probs: has_probs.then_some(probs),
        slice_names,
        slices,
    })
}

/// Loads a labels CSV and its embeddings, checking that row counts agree.
pub fn load_split<T: Scalar>(
    labels_path: impl AsRef<Path>,
    emb_path: impl AsRef<Path>,
) -> Result<(EmbeddingMatrix<T>, LabeledSplit), DataError> {
    load_split_with_classes(labels_path, emb_path, None)
}

pub(crate) fn load_split_with_classes<T: Scalar>(
    labels_path: impl AsRef<Path>,
    emb_path: impl AsRef<Path>,
    num_classes: Option<usize>,
) -> Result<(EmbeddingMatrix<T>, LabeledSplit), DataError> {
    let emb = load_embeddings(emb_path)?;
    let split = read_labels_csv(labels_path, num_classes)?;
    if split.n() != emb.n() {
        return Err(DataError::RowCountMismatch {
            labels: split.n(),
            embeddings: emb.n(),
        });
    }
    Ok((emb, split))
}

pub fn write_labels_csv(split: &LabeledSplit, path: impl AsRef<Path>) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["id".to_string(), "y".into(), "y_hat".into()];
    if split.prediction_probs().is_some() {
        header.extend((0..split.num_classes()).map(|k| format!("p_{k}")));
    }
    header.extend(split.slice_names().iter().map(|s| format!("s_{s}")));
    writer.write_record(&header)?;
    for i in 0..split.n() {
        let mut record = vec![
            i.to_string(),
            split.labels()[i].to_string(),
            split.predictions()[i].to_string(),
        ];
        if let Some(probs) = split.prediction_probs() {
            record.extend(probs[i].iter().map(|p| p.to_string()));
        }
        record.extend(split.slices().iter().map(|s| u8::from(s[i]).to_string()));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| DataError::io(path.as_ref(), e))
}

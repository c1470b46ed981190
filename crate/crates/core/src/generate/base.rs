use std::path::Path;

use crate::dataset::{DataError, LabeledSplit, SchemaError};

use super::GenError;

/// Binary attribute table from which settings are subsampled. Row `i` pairs
/// with row `i` of the base embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseTable {
    names: Vec<String>,
    columns: Vec<Vec<bool>>,
    n: usize,
}

impl BaseTable {
    pub fn new(names: Vec<String>, columns: Vec<Vec<bool>>) -> Result<Self, GenError> {
        if names.len() != columns.len() || names.is_empty() {
            return Err(GenError::InvalidInput(
                "base table needs one name per attribute column".into(),
            ));
        }
        let n = columns[0].len();
        if n == 0 || columns.iter().any(|c| c.len() != n) {
            return Err(GenError::InvalidInput(
                "base table columns must be non-empty and equal length".into(),
            ));
        }
        Ok(Self { names, columns, n })
    }

    /// Reads a CSV with header `id,<attr1>,<attr2>,...` and 0/1 cells.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GenError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path.as_ref())
            .map_err(DataError::from)?;
        let headers = reader.headers().map_err(DataError::from)?.clone();
        if headers.get(0) != Some("id") {
            return Err(DataError::from(SchemaError::MissingColumn("id".into())).into());
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(DataError::from)?;
            if record.get(0).and_then(|v| v.parse::<usize>().ok()) != Some(row) {
                return Err(DataError::from(SchemaError::BadId { row }).into());
            }
            for (j, field) in record.iter().skip(1).enumerate() {
                let v = match field {
                    "0" => false,
                    "1" => true,
                    _ => {
                        return Err(DataError::from(SchemaError::BadValue {
                            row,
                            column: names[j].clone(),
                            value: field.to_string(),
                        })
                        .into())
                    }
                };
                columns[j].push(v);
            }
        }
        Self::new(names, columns)
    }

    /// Base table whose columns are `target` (label == 1) and one column per
    /// slice of `split`, named after the slice.
    pub fn from_split(split: &LabeledSplit, target: &str) -> Result<Self, GenError> {
        if split.num_classes() != 2 {
            return Err(GenError::NotBinary(split.num_classes()));
        }
        let mut names = vec![target.to_string()];
        let mut columns = vec![split.labels().iter().map(|&y| y == 1).collect()];
        for (name, col) in split.slice_names().iter().zip(split.slices()) {
            names.push(name.clone());
            columns.push(col.clone());
        }
        Self::new(names, columns)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&[bool], GenError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.columns[j].as_slice())
            .ok_or_else(|| GenError::InvalidInput(format!("base table has no column `{name}`")))
    }

    /// Row indices in each `(y, c)` cell, ascending, indexed `[y][c]`.
    pub fn cells(&self, target: &str, attribute: &str) -> Result<[[Vec<usize>; 2]; 2], GenError> {
        if target == attribute {
            return Err(GenError::InvalidInput(
                "target and attribute columns must differ".into(),
            ));
        }
        let y = self.column(target)?;
        let c = self.column(attribute)?;
        let mut cells: [[Vec<usize>; 2]; 2] = Default::default();
        for i in 0..self.n {
            cells[usize::from(y[i])][usize::from(c[i])].push(i);
        }
        Ok(cells)
    }
}

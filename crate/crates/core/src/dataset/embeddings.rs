use std::fs;
use std::io::Write;
use std::path::Path;

use crate::scalar::Scalar;

use super::DataError;

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";
pub const EMB1_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

/// Dense row-major `n x d` matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    n: usize,
    d: usize,
    values: Vec<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(n: usize, d: usize, values: Vec<T>) -> Result<Self, DataError> {
        if n == 0 || d == 0 {
            return Err(DataError::InvalidShape(format!(
                "need n >= 1 and d >= 1, got {n}x{d}"
            )));
        }
        if values.len() != n * d {
            return Err(DataError::InvalidShape(format!(
                "{} values for a {n}x{d} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteValue {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, DataError> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(DataError::InvalidShape("ragged rows".into()));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, T> {
        self.values.chunks(self.d)
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, DataError> {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.d, values)
    }

    pub fn scaled(&self, factor: T) -> Result<Self, DataError> {
        Self::new(
            self.n,
            self.d,
            self.values.iter().map(|&v| v * factor).collect(),
        )
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingMatrix<U> {
        EmbeddingMatrix {
            n: self.n,
            d: self.d,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Parses an EMB1 byte buffer.
pub fn read_emb1<T: Scalar>(bytes: &[u8]) -> Result<EmbeddingMatrix<T>, DataError> {
    if bytes.len() < 4 {
        return Err(DataError::TruncatedFile {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("length checked");
    if &magic != EMB1_MAGIC {
        return Err(DataError::MagicMismatch { found: magic });
    }
    if bytes.len() < HEADER_LEN {
        return Err(DataError::TruncatedFile {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("length checked"));
    if version != EMB1_VERSION {
        return Err(DataError::UnsupportedVersion(version));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("length checked"));
    let d = u32::from_le_bytes(bytes[16..20].try_into().expect("length checked"));
    let count = n
        .checked_mul(u64::from(d))
        .ok_or_else(|| DataError::InvalidShape(format!("{n}x{d} overflows")))?;
    let expected = count
        .checked_mul(4)
        .and_then(|b| b.checked_add(HEADER_LEN as u64))
        .ok_or_else(|| DataError::InvalidShape(format!("{n}x{d} overflows")))?;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(DataError::TruncatedFile { expected, actual });
    }
    if actual > expected {
        return Err(DataError::TrailingData(actual - expected));
    }
    let (n, d) = (n as usize, d as usize);
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
        .map(|v| T::lit(f64::from(v)))
        .collect();
    EmbeddingMatrix::new(n, d, values)
}

/// Serializes to EMB1. Values are stored as `f32`.
pub fn write_emb1<T: Scalar>(matrix: &EmbeddingMatrix<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * matrix.values.len());
    out.extend_from_slice(EMB1_MAGIC);
    out.extend_from_slice(&EMB1_VERSION.to_le_bytes());
    out.extend_from_slice(&(matrix.n as u64).to_le_bytes());
    out.extend_from_slice(&(matrix.d as u32).to_le_bytes());
    for v in &matrix.values {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    out
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads embeddings: `.csv` files use the headerless text fallback, anything
/// else must be EMB1.
pub fn load_embeddings<T: Scalar>(path: impl AsRef<Path>) -> Result<EmbeddingMatrix<T>, DataError> {
    let path = path.as_ref();
    if is_csv(path) {
        return read_csv_embeddings(path);
    }
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    read_emb1(&bytes)
}

fn read_csv_embeddings<T: Scalar>(path: &Path) -> Result<EmbeddingMatrix<T>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parsed = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                let v: f64 = field.parse().map_err(|_| {
                    DataError::InvalidShape(format!(
                        "row {row}, column {col}: `{field}` is not a number"
                    ))
                })?;
                if v.is_finite() {
                    Ok(T::lit(v))
                } else {
                    Err(DataError::NonFiniteValue { row, col })
                }
            })
            .collect::<Result<Vec<T>, _>>()?;
        rows.push(parsed);
    }
    EmbeddingMatrix::from_rows(&rows)
}

pub fn save_embeddings<T: Scalar>(
    matrix: &EmbeddingMatrix<T>,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let path = path.as_ref();
    fs::write(path, write_emb1(matrix)).map_err(|e| DataError::io(path, e))
}

pub fn save_embeddings_csv<T: Scalar>(
    matrix: &EmbeddingMatrix<T>,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut out = String::new();
    for row in matrix.rows() {
        let line: Vec<String> = row.iter().map(|v| v.as_f64().to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    let mut file = fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| DataError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn header(n: u64, d: u32) -> Vec<u8> {
        let mut b = b"EMB1".to_vec();
        b.extend_from_slice(&1u32.to_le_bytes());
        b.extend_from_slice(&n.to_le_bytes());
        b.extend_from_slice(&d.to_le_bytes());
        b
    }

    #[test]
    fn parses_row_major_payload() {
        let mut bytes = header(2, 3);
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let m: EmbeddingMatrix<f64> = read_emb1(&bytes).unwrap();
        assert_eq!((m.n(), m.d()), (2, 3));
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn rejects_wrong_magic() {
        let mut bytes = header(1, 1);
        bytes[..4].copy_from_slice(b"XXXX");
        bytes.extend_from_slice(&0f32.to_le_bytes());
        assert!(matches!(
            read_emb1::<f64>(&bytes),
            Err(DataError::MagicMismatch { found }) if &found == b"XXXX"
        ));
    }

    #[test]
    fn rejects_truncated_and_non_finite_payloads() {
        let mut bytes = header(2, 2);
        bytes.extend_from_slice(&1f32.to_le_bytes());
        assert!(matches!(
            read_emb1::<f32>(&bytes),
            Err(DataError::TruncatedFile {
                expected: 36,
                actual: 24
            })
        ));
        let mut bytes = header(1, 2);
        bytes.extend_from_slice(&1f32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            read_emb1::<f64>(&bytes),
            Err(DataError::NonFiniteValue { row: 0, col: 1 })
        ));
    }

    #[test]
    fn binary_round_trip_is_byte_identical() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut bytes = header(100, 16);
        for _ in 0..1600 {
            let v: f32 = rng.random_range(-10.0..10.0);
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let as64: EmbeddingMatrix<f64> = read_emb1(&bytes).unwrap();
        assert_eq!(write_emb1(&as64), bytes);
        let as32: EmbeddingMatrix<f32> = read_emb1(&bytes).unwrap();
        assert_eq!(write_emb1(&as32), bytes);
    }

    #[test]
    fn csv_fallback_loads_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        fs::write(&path, "1,2,3\n4.5, -6 ,7e-1\n").unwrap();
        let m: EmbeddingMatrix<f64> = load_embeddings(&path).unwrap();
        assert_eq!(m.values(), &[1.0, 2.0, 3.0, 4.5, -6.0, 0.7]);
        fs::write(&path, "1,2\n3\n").unwrap();
        assert!(load_embeddings::<f64>(&path).is_err());
    }

    #[test]
    fn constructor_enforces_shape() {
        assert!(EmbeddingMatrix::<f64>::new(0, 3, vec![]).is_err());
        assert!(EmbeddingMatrix::<f64>::new(1, 2, vec![1.0]).is_err());
        assert!(EmbeddingMatrix::<f64>::new(1, 1, vec![f64::INFINITY]).is_err());
    }
}

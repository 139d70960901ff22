//! Dense row-major matrices and vectors, the only value types the tape
//! records. Shapes are validated at construction and then trusted.

use serde::{Deserialize, Serialize};

use crate::error::{GkrError, Result};

/// Dense row-major matrix. `values[i * cols + j]` is row `i`, column `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = String;

    fn try_from(r: MatrixRepr) -> std::result::Result<Self, String> {
        if r.rows == 0 || r.cols == 0 {
            return Err(format!("matrix dimensions must be positive, got {}x{}", r.rows, r.cols));
        }
        if r.values.len() != r.rows * r.cols {
            return Err(format!(
                "matrix {}x{} needs {} values, got {}",
                r.rows,
                r.cols,
                r.rows * r.cols,
                r.values.len()
            ));
        }
        Ok(Matrix {
            rows: r.rows,
            cols: r.cols,
            values: r.values,
        })
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            values: m.values,
        }
    }
}

impl Matrix {
    /// Panics if the dimensions are zero or `values` has the wrong length.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(
            values.len(),
            rows * cols,
            "matrix {rows}x{cols} needs {} values, got {}",
            rows * cols,
            values.len()
        );
        Matrix { rows, cols, values }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(GkrError::usage("matrix needs at least one row and column"));
        }
        let cols = rows[0].len();
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(GkrError::shape(
                    "from_rows",
                    format!("row 0 has {cols} columns"),
                    format!("row {i} has {}", r.len()),
                ));
            }
            values.extend_from_slice(r);
        }
        Ok(Matrix::new(rows.len(), cols, values))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }
}

/// Dense vector with a positive dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = String;

    fn try_from(values: Vec<f64>) -> std::result::Result<Self, String> {
        if values.is_empty() {
            return Err("vector dimension must be positive".to_string());
        }
        Ok(Vector { values })
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.values
    }
}

impl Vector {
    /// Panics if `values` is empty.
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "vector dimension must be positive");
        Vector { values }
    }

    pub fn zeros(dim: usize) -> Self {
        Vector::new(vec![0.0; dim])
    }

    pub fn scalar(v: f64) -> Self {
        Vector::new(vec![v])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_rejects_wrong_value_count() {
        let bad: std::result::Result<Matrix, _> =
            serde_json::from_str(r#"{"rows":2,"cols":2,"values":[1.0,2.0,3.0]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn matrix_json_round_trip_is_bit_exact() {
        let m = Matrix::new(2, 3, vec![0.1, -2.5e-13, 3.0, f64::MIN_POSITIVE, 5.5, -0.0]);
        let json = serde_json::to_string(&m).unwrap();
        let back: Matrix = serde_json::from_str(&json).unwrap();
        for (a, b) in m.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn vector_rejects_empty() {
        let bad: std::result::Result<Vector, _> = serde_json::from_str("[]");
        assert!(bad.is_err());
    }
}

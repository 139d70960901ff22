//! Weight initialization: i.i.d. uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)],
//! where fan_in is the input dimension of the transform.

use rand::Rng;

use super::tensor::{Matrix, Vector};

/// Matrix applied as `W^T v`, so fan_in is the row count.
pub fn fan_in_uniform_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let bound = 1.0 / (rows as f64).sqrt();
    let values = (0..rows * cols)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Matrix::new(rows, cols, values)
}

/// Bias-style vector whose scale follows the transform it is added to.
pub fn fan_in_uniform_vector(fan_in: usize, dim: usize, rng: &mut impl Rng) -> Vector {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Vector::new((0..dim).map(|_| rng.random_range(-bound..=bound)).collect())
}

//! Small fully-connected network assembled from tape primitives: hidden
//! layers use ReLU, the last layer is linear. Used for readout heads, fusion
//! baselines, and the shared pair encoder.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GkrError, Result};

use super::init::{fan_in_uniform_matrix, fan_in_uniform_vector};
use super::tape::{Tape, TapeMat, TapeVec};
use super::tensor::{Matrix, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    weights: Vec<Matrix>,
    biases: Option<Vec<Vector>>,
}

impl Mlp {
    /// `dims = [input, hidden.., output]`; at least one layer.
    pub fn init(dims: &[usize], bias: bool, rng: &mut impl Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(GkrError::usage("mlp: need input and output dims"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(GkrError::usage("mlp: all layer dims must be positive"));
        }
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = if bias { Some(Vec::new()) } else { None };
        for win in dims.windows(2) {
            weights.push(fan_in_uniform_matrix(win[0], win[1], rng));
            if let Some(bs) = biases.as_mut() {
                bs.push(fan_in_uniform_vector(win[0], win[1], rng));
            }
        }
        Ok(Mlp { weights, biases })
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().expect("at least one layer").cols()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.weights.iter().map(|w| w.cols()));
        dims
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn has_bias(&self) -> bool {
        self.biases.is_some()
    }

    /// Consecutive layer dims must chain; bias dims must match outputs.
    pub fn validate(&self) -> Result<()> {
        for (i, pair) in self.weights.windows(2).enumerate() {
            if pair[0].cols() != pair[1].rows() {
                return Err(GkrError::shape(
                    "mlp",
                    format!("layer {} is {}", i, pair[0].shape_string()),
                    format!("layer {} is {}", i + 1, pair[1].shape_string()),
                ));
            }
        }
        if let Some(bs) = &self.biases {
            if bs.len() != self.weights.len() {
                return Err(GkrError::usage("mlp: bias count differs from layer count"));
            }
            for (i, (w, b)) in self.weights.iter().zip(bs).enumerate() {
                if b.dim() != w.cols() {
                    return Err(GkrError::shape(
                        "mlp",
                        format!("layer {} output {}", i, w.cols()),
                        format!("bias dim {}", b.dim()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn buffer_lens(&self) -> Vec<usize> {
        self.buffers().iter().map(|b| b.len()).collect()
    }

    pub fn buffers(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (i, w) in self.weights.iter().enumerate() {
            out.push(w.values());
            if let Some(bs) = &self.biases {
                out.push(bs[i].values());
            }
        }
        out
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        let bs = self.biases.as_mut();
        match bs {
            None => {
                for w in &mut self.weights {
                    out.push(w.values_mut());
                }
            }
            Some(bs) => {
                for (w, b) in self.weights.iter_mut().zip(bs) {
                    out.push(w.values_mut());
                    out.push(b.values_mut());
                }
            }
        }
        out
    }

    /// Register all weights on a tape, in `buffers()` order.
    pub fn register(&self, tape: &mut Tape) -> RegisteredMlp {
        let mut weights = Vec::with_capacity(self.weights.len());
        let mut biases = self.biases.as_ref().map(|_| Vec::new());
        for (i, w) in self.weights.iter().enumerate() {
            weights.push(tape.matrix_param(w));
            if let (Some(bs), Some(out)) = (&self.biases, biases.as_mut()) {
                out.push(tape.vector_param(&bs[i]));
            }
        }
        RegisteredMlp { weights, biases }
    }
}

pub struct RegisteredMlp {
    weights: Vec<TapeMat>,
    biases: Option<Vec<TapeVec>>,
}

impl RegisteredMlp {
    pub fn forward(&self, tape: &mut Tape, x: TapeVec) -> Result<TapeVec> {
        let last = self.weights.len() - 1;
        let mut h = x;
        for (i, w) in self.weights.iter().enumerate() {
            h = tape.linear(*w, h)?;
            if let Some(bs) = &self.biases {
                h = tape.add(h, bs[i])?;
            }
            if i < last {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_shape_follows_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mlp = Mlp::init(&[4, 3, 1], false, &mut rng).unwrap();
        assert_eq!(mlp.dims(), vec![4, 3, 1]);
        let mut t = Tape::new();
        let reg = mlp.register(&mut t);
        let x = t.vector_input(&Vector::new(vec![0.1, -0.2, 0.3, 0.4]));
        let out = reg.forward(&mut t, x).unwrap();
        assert_eq!(out.dim(), 1);
    }

    #[test]
    fn buffer_order_matches_registration_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mlp = Mlp::init(&[3, 2, 1], true, &mut rng).unwrap();
        let mut t = Tape::new();
        let _ = mlp.register(&mut t);
        assert_eq!(t.param_count(), mlp.buffers().len());
        assert_eq!(mlp.buffer_lens(), vec![6, 2, 2, 1]);
    }
}

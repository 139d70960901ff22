//! Comparison scoring heads for the same pair-verification task: plain
//! cosine similarity with a learned calibration, an MLP over the
//! concatenated pair, and a learned projected metric with a sigmoid
//! decision rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffmath::{
    init::fan_in_uniform_matrix, Matrix, Mlp, RegisteredMlp, Tape, TapeScalar, TapeVec, Trainable,
    Vector,
};
use crate::error::{GkrError, Result};

/// Cosine similarity of two non-zero vectors, in [-1, 1].
pub fn cosine_score(fx: &Vector, fy: &Vector) -> Result<f64> {
    let mut tape = Tape::new();
    let a = tape.vector_input(fx);
    let b = tape.vector_input(fy);
    let c = tape.cosine(a, b)?;
    Ok(tape.scalar_value(c))
}

/// `||W^T (fx - fy)||_2`. Zero when the projection collapses everything.
pub fn metric_distance(fx: &Vector, fy: &Vector, w: &Matrix) -> Result<f64> {
    let mut tape = Tape::new();
    let a = tape.vector_input(fx);
    let b = tape.vector_input(fy);
    let wm = tape.matrix_param(w);
    let diff = tape.sub(a, b)?;
    let proj = tape.linear(wm, diff)?;
    let d = tape.norm_l2(proj);
    Ok(tape.scalar_value(d))
}

/// Logit of the MLP-fusion head for one raw pair.
pub fn mlp_fusion_logit(params: &MlpFusionParams, fx: &Vector, fy: &Vector) -> Result<f64> {
    let mut tape = Tape::new();
    let reg = params.register(&mut tape);
    let a = tape.vector_input(fx);
    let b = tape.vector_input(fy);
    let logit = reg.logit(&mut tape, a, b)?;
    Ok(tape.scalar_value(logit))
}

// ── Cosine with learned calibration ─────────────────────────────────────

/// Cosine similarity turned into a probability: `sigmoid(t * cos + b)` with
/// trainable temperature `t` and bias `b`, so the decision threshold is
/// learned instead of fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineParams {
    pub temperature: Vector,
    pub bias: Vector,
}

impl CosineParams {
    pub fn init() -> Self {
        CosineParams {
            temperature: Vector::scalar(1.0),
            bias: Vector::scalar(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.temperature.dim() != 1 || self.bias.dim() != 1 {
            return Err(GkrError::usage("cosine params: calibration must be scalar"));
        }
        Ok(())
    }

    pub fn register(&self, tape: &mut Tape) -> RegisteredCosine {
        RegisteredCosine {
            temperature: tape.scalar_param(&self.temperature).expect("dim 1"),
            bias: tape.scalar_param(&self.bias).expect("dim 1"),
        }
    }
}

impl Trainable for CosineParams {
    fn buffers(&self) -> Vec<&[f64]> {
        vec![self.temperature.values(), self.bias.values()]
    }
    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.temperature.values_mut(), self.bias.values_mut()]
    }
}

pub struct RegisteredCosine {
    temperature: TapeScalar,
    bias: TapeScalar,
}

impl RegisteredCosine {
    pub fn logit(&self, tape: &mut Tape, fx: TapeVec, fy: TapeVec) -> Result<TapeScalar> {
        let cos = tape.cosine(fx, fy)?;
        let scaled = tape.scalar_mul(self.temperature, cos);
        Ok(tape.scalar_affine(&[(scaled, 1.0), (self.bias, 1.0)], 0.0))
    }
}

// ── MLP fusion ───────────────────────────────────────────────────────────

/// `MLP([fx || fy])` down to a scalar logit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpFusionParams {
    pub mlp: Mlp,
}

impl MlpFusionParams {
    /// Hidden defaults to a single layer of width D.
    pub fn init(feature_dim: usize, hidden: Option<&[usize]>, rng: &mut impl Rng) -> Result<Self> {
        let mut dims = vec![2 * feature_dim];
        match hidden {
            Some(h) => dims.extend_from_slice(h),
            None => dims.push(feature_dim),
        }
        dims.push(1);
        Ok(MlpFusionParams {
            mlp: Mlp::init(&dims, false, rng)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.mlp.validate()?;
        if self.mlp.output_dim() != 1 {
            return Err(GkrError::shape(
                "mlp_fusion",
                "scalar output",
                format!("output dim {}", self.mlp.output_dim()),
            ));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.mlp.input_dim() / 2
    }

    pub fn register(&self, tape: &mut Tape) -> RegisteredMlpFusion {
        RegisteredMlpFusion {
            mlp: self.mlp.register(tape),
        }
    }
}

impl Trainable for MlpFusionParams {
    fn buffers(&self) -> Vec<&[f64]> {
        self.mlp.buffers()
    }
    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        self.mlp.buffers_mut()
    }
}

pub struct RegisteredMlpFusion {
    mlp: RegisteredMlp,
}

impl RegisteredMlpFusion {
    pub fn logit(&self, tape: &mut Tape, fx: TapeVec, fy: TapeVec) -> Result<TapeScalar> {
        let fused = tape.concat(fx, fy);
        let out = self.mlp.forward(tape, fused)?;
        tape.as_scalar(out)
    }
}

// ── Learned linear metric ────────────────────────────────────────────────

/// Distance `d = ||W^T (fx - fy)||` with decision rule
/// `sigmoid(exp(log_scale) * (threshold - d))`: small distances mean kin.
/// The exponential keeps the slope positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMetricParams {
    /// Projection, D x r with r <= D.
    pub projection: Matrix,
    pub log_scale: Vector,
    pub threshold: Vector,
}

impl LinearMetricParams {
    pub fn init(feature_dim: usize, rank: Option<usize>, rng: &mut impl Rng) -> Result<Self> {
        let r = rank.unwrap_or(feature_dim);
        if r == 0 || r > feature_dim {
            return Err(GkrError::usage(format!(
                "linear metric: rank {r} must be in 1..={feature_dim}"
            )));
        }
        Ok(LinearMetricParams {
            projection: fan_in_uniform_matrix(feature_dim, r, rng),
            log_scale: Vector::scalar(0.0),
            threshold: Vector::scalar(1.0),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.projection.cols() > self.projection.rows() {
            return Err(GkrError::usage(
                "linear metric: projection rank exceeds feature dim",
            ));
        }
        if self.log_scale.dim() != 1 || self.threshold.dim() != 1 {
            return Err(GkrError::usage("linear metric: decision params must be scalar"));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.projection.rows()
    }

    pub fn register(&self, tape: &mut Tape) -> RegisteredLinearMetric {
        RegisteredLinearMetric {
            projection: tape.matrix_param(&self.projection),
            log_scale: tape.scalar_param(&self.log_scale).expect("dim 1"),
            threshold: tape.scalar_param(&self.threshold).expect("dim 1"),
        }
    }
}

impl Trainable for LinearMetricParams {
    fn buffers(&self) -> Vec<&[f64]> {
        vec![
            self.projection.values(),
            self.log_scale.values(),
            self.threshold.values(),
        ]
    }
    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.projection.values_mut(),
            self.log_scale.values_mut(),
            self.threshold.values_mut(),
        ]
    }
}

pub struct RegisteredLinearMetric {
    projection: crate::diffmath::TapeMat,
    log_scale: TapeScalar,
    threshold: TapeScalar,
}

impl RegisteredLinearMetric {
    pub fn logit(&self, tape: &mut Tape, fx: TapeVec, fy: TapeVec) -> Result<TapeScalar> {
        let diff = tape.sub(fx, fy)?;
        let proj = tape.linear(self.projection, diff)?;
        let dist = tape.norm_l2(proj);
        let margin = tape.scalar_affine(&[(self.threshold, 1.0), (dist, -1.0)], 0.0);
        let scale = tape.scalar_exp(self.log_scale);
        Ok(tape.scalar_mul(scale, margin))
    }
}

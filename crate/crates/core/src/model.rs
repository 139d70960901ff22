//! A trainable pair model: an optional shared encoder applied identically to
//! both members of the pair, followed by one scoring head. Registration
//! order (encoder first, then scorer) fixes the gradient/optimizer layout.

use serde::{Deserialize, Serialize};

use crate::baselines::{
    CosineParams, LinearMetricParams, MlpFusionParams, RegisteredCosine, RegisteredLinearMetric,
    RegisteredMlpFusion,
};
use crate::diffmath::{sigmoid, Mlp, RegisteredMlp, Tape, TapeScalar, TapeVec, Trainable, Vector};
use crate::error::{GkrError, Result};
use crate::gkrnet::{self, GkrConfig, GkrParams, RegisteredGkr};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerParams {
    Gkr {
        config: GkrConfig,
        params: GkrParams,
    },
    Cosine {
        params: CosineParams,
    },
    MlpFusion {
        params: MlpFusionParams,
    },
    LinearMetric {
        params: LinearMetricParams,
    },
}

impl ScorerParams {
    pub fn kind(&self) -> &'static str {
        match self {
            ScorerParams::Gkr { .. } => "gkr",
            ScorerParams::Cosine { .. } => "cosine",
            ScorerParams::MlpFusion { .. } => "mlp_fusion",
            ScorerParams::LinearMetric { .. } => "linear_metric",
        }
    }

    /// Feature dimension the scorer consumes, when it constrains one.
    /// Cosine works at any dimension.
    pub fn feature_dim(&self) -> Option<usize> {
        match self {
            ScorerParams::Gkr { config, .. } => Some(config.feature_dim),
            ScorerParams::Cosine { .. } => None,
            ScorerParams::MlpFusion { params } => Some(params.feature_dim()),
            ScorerParams::LinearMetric { params } => Some(params.feature_dim()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScorerParams::Gkr { config, params } => params.validate_shapes(config),
            ScorerParams::Cosine { params } => params.validate(),
            ScorerParams::MlpFusion { params } => params.validate(),
            ScorerParams::LinearMetric { params } => params.validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    /// Shared encoder applied to both pair members; `None` feeds raw features.
    pub encoder: Option<Mlp>,
    pub scorer: ScorerParams,
    /// Seed all weights were initialized from.
    pub seed: u64,
}

pub enum RegisteredScorer {
    Gkr(RegisteredGkr),
    Cosine(RegisteredCosine),
    MlpFusion(RegisteredMlpFusion),
    LinearMetric(RegisteredLinearMetric),
}

pub struct RegisteredModel {
    pub encoder: Option<RegisteredMlp>,
    pub scorer: RegisteredScorer,
}

impl PairModel {
    /// Dimension of the raw features this model expects.
    pub fn input_dim(&self) -> Option<usize> {
        match &self.encoder {
            Some(enc) => Some(enc.input_dim()),
            None => self.scorer.feature_dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(enc) = &self.encoder {
            enc.validate()?;
            if let Some(d) = self.scorer.feature_dim() {
                if enc.output_dim() != d {
                    return Err(GkrError::shape(
                        "pair model",
                        format!("encoder output {}", enc.output_dim()),
                        format!("scorer feature dim {d}"),
                    ));
                }
            }
        }
        self.scorer.validate()
    }

    pub fn register(&self, tape: &mut Tape) -> RegisteredModel {
        let encoder = self.encoder.as_ref().map(|e| e.register(tape));
        let scorer = match &self.scorer {
            ScorerParams::Gkr { params, .. } => RegisteredScorer::Gkr(params.register(tape)),
            ScorerParams::Cosine { params } => RegisteredScorer::Cosine(params.register(tape)),
            ScorerParams::MlpFusion { params } => {
                RegisteredScorer::MlpFusion(params.register(tape))
            }
            ScorerParams::LinearMetric { params } => {
                RegisteredScorer::LinearMetric(params.register(tape))
            }
        };
        RegisteredModel { encoder, scorer }
    }

    /// Encode both members with the shared encoder and score the pair.
    pub fn logit_on_tape(
        &self,
        tape: &mut Tape,
        reg: &RegisteredModel,
        fx: TapeVec,
        fy: TapeVec,
    ) -> Result<TapeScalar> {
        let (ex, ey) = match &reg.encoder {
            Some(enc) => (enc.forward(tape, fx)?, enc.forward(tape, fy)?),
            None => (fx, fy),
        };
        match (&self.scorer, &reg.scorer) {
            (ScorerParams::Gkr { config, .. }, RegisteredScorer::Gkr(g)) => {
                gkrnet::gkr_logit(tape, config, g, ex, ey)
            }
            (_, RegisteredScorer::Cosine(c)) => c.logit(tape, ex, ey),
            (_, RegisteredScorer::MlpFusion(m)) => m.logit(tape, ex, ey),
            (_, RegisteredScorer::LinearMetric(l)) => l.logit(tape, ex, ey),
            _ => unreachable!("registered scorer always matches its params"),
        }
    }

    /// Balanced binary cross-entropy over a registered batch.
    pub fn batch_loss_on_tape(
        &self,
        tape: &mut Tape,
        reg: &RegisteredModel,
        batch: &[(TapeVec, TapeVec, bool)],
    ) -> Result<TapeScalar> {
        if batch.is_empty() {
            return Err(GkrError::usage("batch_loss: empty batch"));
        }
        let mut scored = Vec::with_capacity(batch.len());
        for &(fx, fy, label) in batch {
            scored.push((self.logit_on_tape(tape, reg, fx, fy)?, label));
        }
        gkrnet::balanced_bce(tape, &scored)
    }

    /// Kin probability for one raw pair with frozen parameters.
    pub fn predict(&self, fx: &Vector, fy: &Vector) -> Result<f64> {
        let mut tape = Tape::new();
        let reg = self.register(&mut tape);
        let tx = tape.vector_input(fx);
        let ty = tape.vector_input(fy);
        let logit = self.logit_on_tape(&mut tape, &reg, tx, ty)?;
        Ok(sigmoid(tape.scalar_value(logit)))
    }
}

impl Trainable for PairModel {
    fn buffers(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        if let Some(enc) = &self.encoder {
            out.extend(enc.buffers());
        }
        match &self.scorer {
            ScorerParams::Gkr { params, .. } => out.extend(params.buffers()),
            ScorerParams::Cosine { params } => out.extend(params.buffers()),
            ScorerParams::MlpFusion { params } => out.extend(params.buffers()),
            ScorerParams::LinearMetric { params } => out.extend(params.buffers()),
        }
        out
    }

    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        if let Some(enc) = &mut self.encoder {
            out.extend(enc.buffers_mut());
        }
        match &mut self.scorer {
            ScorerParams::Gkr { params, .. } => out.extend(params.buffers_mut()),
            ScorerParams::Cosine { params } => out.extend(params.buffers_mut()),
            ScorerParams::MlpFusion { params } => out.extend(params.buffers_mut()),
            ScorerParams::LinearMetric { params } => out.extend(params.buffers_mut()),
        }
        out
    }
}

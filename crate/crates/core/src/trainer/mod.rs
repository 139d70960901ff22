//! End-to-end training: mini-batch Adam over the balanced loss, accuracy
//! evaluation at a fixed 0.5 threshold, five-fold cross-validation with a
//! per-relation breakdown, and ablation grids over the design choices.

mod report;

pub use report::{
    AblationReport, AblationRow, EpochStats, EvalMetrics, FoldReport, RelationAccuracy,
    TrainReport, REPORT_SCHEMA_VERSION,
};

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{CosineParams, LinearMetricParams, MlpFusionParams};
use crate::data::{build_negative_set, FeatureTable, Pair, PairSet, Relation};
use crate::diffmath::{AdamConfig, AdamState, Mlp, Tape, Trainable};
use crate::error::{GkrError, Result};
use crate::gkrnet::{self, Aggregator, CentralInit, GkrConfig};
use crate::model::{PairModel, ScorerParams};
use crate::seeding::{derive_seed, rng_from};

const TAG_INIT: u64 = 0x696e_6974;
const TAG_SHUFFLE: u64 = 0x7368_7566;
const TAG_RESAMPLE: u64 = 0x7265_7361;
const TAG_FOLD: u64 = 0x666f_6c64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Gkr { config: GkrConfig },
    Cosine,
    MlpFusion { hidden: Option<Vec<usize>> },
    LinearMetric { rank: Option<usize> },
}

impl ModelSpec {
    /// Row label in ablation and report tables.
    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::Gkr { .. } => "GKR",
            ModelSpec::Cosine => "Cos",
            ModelSpec::MlpFusion { .. } => "MLP",
            ModelSpec::LinearMetric { .. } => "Metric",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderSpec {
    #[default]
    Identity,
    /// One MLP applied to both pair members with shared weights.
    SharedMlp {
        hidden: Vec<usize>,
        output_dim: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub encoder: EncoderSpec,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Redraw the negative set every epoch instead of keeping the one draw.
    #[serde(default)]
    pub resample_negatives: bool,
    #[serde(default = "default_precision")]
    pub precision: String,
}

fn default_lr() -> f64 {
    5e-4
}

fn default_batch_size() -> usize {
    16
}

fn default_epochs() -> usize {
    100
}

fn default_precision() -> String {
    "f64".to_string()
}

impl TrainConfig {
    pub fn new(model: ModelSpec) -> Self {
        TrainConfig {
            model,
            encoder: EncoderSpec::Identity,
            lr: default_lr(),
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            seed: 0,
            resample_negatives: false,
            precision: default_precision(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(GkrError::usage("train config: batch_size must be positive"));
        }
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(GkrError::usage("train config: lr must be finite and >= 0"));
        }
        if self.precision != "f64" {
            return Err(GkrError::usage(format!(
                "train config: precision {} unsupported; all arithmetic is f64",
                self.precision
            )));
        }
        if let ModelSpec::Gkr { config } = &self.model {
            config.validate()?;
        }
        if let EncoderSpec::SharedMlp { hidden, output_dim } = &self.encoder {
            if *output_dim == 0 || hidden.iter().any(|&h| h == 0) {
                return Err(GkrError::usage("train config: encoder dims must be positive"));
            }
        }
        Ok(())
    }

    /// Instantiate the trainable bundle for data of dimension `data_dim`.
    /// All weights come from one stream seeded by `self.seed`.
    pub fn build_model(&self, data_dim: usize) -> Result<PairModel> {
        self.validate()?;
        let mut rng = rng_from(derive_seed(self.seed, TAG_INIT));
        let (encoder, model_dim) = match &self.encoder {
            EncoderSpec::Identity => (None, data_dim),
            EncoderSpec::SharedMlp { hidden, output_dim } => {
                let mut dims = vec![data_dim];
                dims.extend_from_slice(hidden);
                dims.push(*output_dim);
                (Some(Mlp::init(&dims, false, &mut rng)?), *output_dim)
            }
        };
        let scorer = match &self.model {
            ModelSpec::Gkr { config } => {
                if config.feature_dim != model_dim {
                    return Err(GkrError::shape(
                        "build_model",
                        format!("gkr feature_dim {}", config.feature_dim),
                        format!("encoder/data dim {model_dim}"),
                    ));
                }
                ScorerParams::Gkr {
                    config: config.clone(),
                    params: gkrnet::init_params_with_rng(config, self.seed, &mut rng)?,
                }
            }
            ModelSpec::Cosine => ScorerParams::Cosine {
                params: CosineParams::init(),
            },
            ModelSpec::MlpFusion { hidden } => ScorerParams::MlpFusion {
                params: MlpFusionParams::init(model_dim, hidden.as_deref(), &mut rng)?,
            },
            ModelSpec::LinearMetric { rank } => ScorerParams::LinearMetric {
                params: LinearMetricParams::init(model_dim, *rank, &mut rng)?,
            },
        };
        let model = PairModel {
            encoder,
            scorer,
            seed: self.seed,
        };
        model.validate()?;
        Ok(model)
    }
}

struct Sample {
    parent_idx: usize,
    child_idx: usize,
    label: bool,
}

fn resolve_samples(pairs: &PairSet, features: &FeatureTable) -> Result<Vec<Sample>> {
    let resolve = |p: &Pair, label: bool| -> Result<Sample> {
        Ok(Sample {
            parent_idx: features
                .lookup(&p.parent)
                .ok_or_else(|| GkrError::usage(format!("unresolved id: {}", p.parent)))?,
            child_idx: features
                .lookup(&p.child)
                .ok_or_else(|| GkrError::usage(format!("unresolved id: {}", p.child)))?,
            label,
        })
    };
    let mut samples = Vec::with_capacity(pairs.len());
    for p in &pairs.positives {
        samples.push(resolve(p, true)?);
    }
    for n in &pairs.negatives {
        samples.push(resolve(n, false)?);
    }
    Ok(samples)
}

/// Train one model on the whole pair set with mini-batch Adam.
///
/// The reported per-epoch loss is the balanced loss assembled from every
/// sample's running value (positives averaged over positives, negatives over
/// negatives), and the accuracy is measured on the same running predictions,
/// so with `lr = 0` the history is exactly constant.
pub fn train(
    config: &TrainConfig,
    pairs: &PairSet,
    features: &FeatureTable,
) -> Result<(PairModel, TrainReport)> {
    let started = Instant::now();
    config.validate()?;
    pairs.validate(Some(features))?;
    let mut model = config.build_model(features.dim())?;
    let mut adam = AdamState::new(AdamConfig::with_lr(config.lr), &model.buffer_lens());

    let mut samples = resolve_samples(pairs, features)?;
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        if config.resample_negatives && epoch > 1 {
            let negatives = build_negative_set(
                &pairs.positives,
                derive_seed(config.seed, TAG_RESAMPLE ^ epoch as u64),
            )?;
            let redrawn = PairSet {
                positives: pairs.positives.clone(),
                negatives,
            };
            samples = resolve_samples(&redrawn, features)?;
        }

        let mut order: Vec<usize> = (0..samples.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng_from(derive_seed(
            config.seed,
            TAG_SHUFFLE ^ epoch as u64,
        )));

        // Running per-class sums for the epoch-level balanced loss.
        let (mut pos_loss, mut neg_loss) = (0.0, 0.0);
        let (mut n_pos, mut n_neg) = (0usize, 0usize);
        let mut correct = 0usize;
        for (batch_no, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut tape = Tape::new();
            let reg = model.register(&mut tape);
            let mut scored = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let s = &samples[i];
                let fx = tape.vector_input(features.row(s.parent_idx).2);
                let fy = tape.vector_input(features.row(s.child_idx).2);
                let logit = model.logit_on_tape(&mut tape, &reg, fx, fy)?;
                let z = tape.scalar_value(logit);
                if (z >= 0.0) == s.label {
                    correct += 1;
                }
                let sample_loss = tape.bce_with_logit(logit, s.label);
                if s.label {
                    pos_loss += tape.scalar_value(sample_loss);
                    n_pos += 1;
                } else {
                    neg_loss += tape.scalar_value(sample_loss);
                    n_neg += 1;
                }
                scored.push((sample_loss, s.label));
            }
            let n_pos_batch = scored.iter().filter(|(_, y)| *y).count();
            let n_neg_batch = scored.len() - n_pos_batch;
            let terms: Vec<_> = scored
                .iter()
                .map(|&(loss, label)| {
                    let w = if label {
                        1.0 / n_pos_batch as f64
                    } else {
                        1.0 / n_neg_batch as f64
                    };
                    (loss, w)
                })
                .collect();
            let batch_loss = tape.scalar_affine(&terms, 0.0);
            let loss_value = tape.scalar_value(batch_loss);
            if !loss_value.is_finite() {
                return Err(GkrError::numeric(format!(
                    "loss became {loss_value} at epoch {epoch}, batch {}; aborting",
                    batch_no + 1
                )));
            }
            let grads = tape.backward(batch_loss)?;
            let mut buffers = model.buffers_mut();
            adam.step(&mut buffers, &grads)?;
        }

        let mut epoch_loss = 0.0;
        if n_pos > 0 {
            epoch_loss += pos_loss / n_pos as f64;
        }
        if n_neg > 0 {
            epoch_loss += neg_loss / n_neg as f64;
        }
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss,
            train_accuracy: correct as f64 / samples.len() as f64,
        });
    }

    let final_metrics = evaluate(&model, pairs, features, 0.5)?;
    let per_relation = relation_breakdown(&predictions(&model, pairs, features, 0.5)?);
    let report = TrainReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        history,
        folds: Vec::new(),
        mean_accuracy: final_metrics.accuracy,
        final_metrics,
        per_relation,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

/// Score every pair; prediction is `probability >= threshold`, so a model
/// stuck at probability exactly 0.5 predicts kin for everything.
pub fn evaluate(
    model: &PairModel,
    pairs: &PairSet,
    features: &FeatureTable,
    threshold: f64,
) -> Result<EvalMetrics> {
    let preds = predictions(model, pairs, features, threshold)?;
    let mut m = EvalMetrics::default();
    for &(predicted, label, _) in &preds {
        match (predicted, label) {
            (true, true) => m.true_pos += 1,
            (true, false) => m.false_pos += 1,
            (false, false) => m.true_neg += 1,
            (false, true) => m.false_neg += 1,
        }
    }
    let total = m.total();
    if total > 0 {
        m.accuracy = m.correct() as f64 / total as f64;
    }
    Ok(m)
}

fn predictions(
    model: &PairModel,
    pairs: &PairSet,
    features: &FeatureTable,
    threshold: f64,
) -> Result<Vec<(bool, bool, Relation)>> {
    let mut out = Vec::with_capacity(pairs.len());
    for (pair, label) in pairs
        .positives
        .iter()
        .map(|p| (p, true))
        .chain(pairs.negatives.iter().map(|p| (p, false)))
    {
        let fx = features.feature(&pair.parent)?;
        let fy = features.feature(&pair.child)?;
        let p = model.predict(fx, fy)?;
        out.push((p >= threshold, label, pair.relation));
    }
    Ok(out)
}

fn relation_breakdown(preds: &[(bool, bool, Relation)]) -> Vec<RelationAccuracy> {
    Relation::ALL
        .iter()
        .filter_map(|&relation| {
            let of_relation: Vec<_> = preds.iter().filter(|(_, _, r)| *r == relation).collect();
            if of_relation.is_empty() {
                return None;
            }
            let correct = of_relation.iter().filter(|(p, l, _)| p == l).count();
            Some(RelationAccuracy {
                relation,
                accuracy: correct as f64 / of_relation.len() as f64,
                count: of_relation.len(),
            })
        })
        .collect()
}

/// Five-fold (or however many folds the manifest carries) cross-validation:
/// hold out each fold, train on the rest, evaluate on the held-out fold.
/// The mean accuracy pools correct predictions over all folds, equal to the
/// fold-size-weighted mean of fold accuracies.
pub fn crossval(
    config: &TrainConfig,
    pairs: &PairSet,
    features: &FeatureTable,
) -> Result<TrainReport> {
    let started = Instant::now();
    config.validate()?;
    pairs.validate(Some(features))?;
    let folds = pairs.folds();
    if folds.len() < 2 {
        return Err(GkrError::usage(format!(
            "cross-validation needs at least 2 folds, manifest has {}",
            folds.len()
        )));
    }

    let mut fold_reports = Vec::with_capacity(folds.len());
    let mut all_preds = Vec::new();
    let (mut correct, mut total) = (0usize, 0usize);
    for &fold in &folds {
        let (train_set, test_set) = pairs.split_fold(fold);
        let train_keys: HashSet<(&str, &str)> = train_set
            .positives
            .iter()
            .chain(&train_set.negatives)
            .map(|p| p.key())
            .collect();
        for t in test_set.positives.iter().chain(&test_set.negatives) {
            assert!(
                !train_keys.contains(&t.key()),
                "test pair ({},{}) leaked into the fold-{fold} training union",
                t.parent,
                t.child
            );
        }

        let mut fold_config = config.clone();
        fold_config.seed = derive_seed(config.seed, TAG_FOLD ^ fold as u64);
        let (model, train_report) = train(&fold_config, &train_set, features)?;
        let test = evaluate(&model, &test_set, features, 0.5)?;
        let preds = predictions(&model, &test_set, features, 0.5)?;
        correct += test.correct();
        total += test.total();
        all_preds.extend(preds);
        fold_reports.push(FoldReport {
            fold,
            history: train_report.history,
            test,
        });
    }

    let mean_accuracy = correct as f64 / total as f64;
    let mut pooled = EvalMetrics {
        accuracy: mean_accuracy,
        ..EvalMetrics::default()
    };
    for f in &fold_reports {
        pooled.true_pos += f.test.true_pos;
        pooled.false_pos += f.test.false_pos;
        pooled.true_neg += f.test.true_neg;
        pooled.false_neg += f.test.false_neg;
    }
    Ok(TrainReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        history: Vec::new(),
        folds: fold_reports,
        final_metrics: pooled,
        mean_accuracy,
        per_relation: relation_breakdown(&all_preds),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Grid of design choices to sweep, one cross-validation per cell.
/// Empty axes fall back to the base configuration's setting. Central init
/// and aggregator only vary the GKR cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub central_inits: Vec<CentralInit>,
    #[serde(default)]
    pub aggregators: Vec<Aggregator>,
}

pub fn ablate(
    base: &TrainConfig,
    grid: &AblationGrid,
    pairs: &PairSet,
    features: &FeatureTable,
) -> Result<AblationReport> {
    base.validate()?;
    let models = if grid.models.is_empty() {
        vec![base.model.clone()]
    } else {
        grid.models.clone()
    };
    let many_models = models.len() > 1;

    let mut rows = Vec::new();
    for model in &models {
        match model {
            ModelSpec::Gkr { config: gc } => {
                let inits = if grid.central_inits.is_empty() {
                    vec![gc.central_init]
                } else {
                    grid.central_inits.clone()
                };
                let aggs = if grid.aggregators.is_empty() {
                    vec![gc.aggregator]
                } else {
                    grid.aggregators.clone()
                };
                for &init in &inits {
                    for &agg in &aggs {
                        let mut cell_cfg = gc.clone();
                        cell_cfg.central_init = init;
                        cell_cfg.aggregator = agg;
                        let mut cfg = base.clone();
                        cfg.model = ModelSpec::Gkr { config: cell_cfg };

                        let mut parts = Vec::new();
                        if many_models {
                            parts.push(model.label().to_string());
                        }
                        if inits.len() > 1 {
                            parts.push(init.label());
                        }
                        if aggs.len() > 1 {
                            parts.push(agg.label().to_string());
                        }
                        if parts.is_empty() {
                            parts.push(model.label().to_string());
                        }
                        let report = crossval(&cfg, pairs, features)?;
                        rows.push(AblationRow {
                            label: parts.join(" "),
                            per_relation: report.per_relation,
                            mean_accuracy: report.mean_accuracy,
                        });
                    }
                }
            }
            other => {
                let mut cfg = base.clone();
                cfg.model = other.clone();
                let report = crossval(&cfg, pairs, features)?;
                rows.push(AblationRow {
                    label: other.label().to_string(),
                    per_relation: report.per_relation,
                    mean_accuracy: report.mean_accuracy,
                });
            }
        }
    }
    Ok(AblationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        rows,
    })
}

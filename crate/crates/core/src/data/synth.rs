//! Synthetic heritable-trait families: a latent genome per family, a parent
//! and a child observation mixed from it, and tunable heritability so task
//! difficulty runs from trivial to pure chance.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diffmath::{Matrix, Vector};
use crate::error::{GkrError, Result};
use crate::seeding::{derive_seed, rng_from};

use super::{build_negative_set, make_folds, FeatureTable, Pair, PairSet, Relation, Role};

const TAG_FAMILIES: u64 = 0x66616d;
const TAG_FOLDS: u64 = 0x666f6c;
const TAG_NEGATIVES: u64 = 0x6e6567;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Family count; one positive pair per family.
    pub families: usize,
    /// Latent genome dimension G.
    pub genome_dim: usize,
    /// Observed feature dimension D.
    pub observed_dim: usize,
    /// Heritability rho in [0, 1]: share of the child's genome inherited
    /// from the parent. 0 makes kin and non-kin statistically identical.
    pub heritability: f64,
    /// Observation noise scale sigma.
    pub noise: f64,
    /// Master seed for family draws, folds, and negatives.
    pub seed: u64,
    /// Seed for the fixed genome-to-feature mixing maps.
    pub mixing_seed: u64,
    /// Make the child observe through exactly the parent's mixing map.
    /// By default the child's map is the parent's with an independent
    /// random sign per output row, so each feature dimension carries a
    /// strong comparison signal whose polarity varies by dimension.
    #[serde(default)]
    pub shared_mixing: bool,
    /// Fold count for the generated positives.
    #[serde(default = "default_folds")]
    pub folds: usize,
}

fn default_folds() -> usize {
    5
}

impl SynthSpec {
    /// The desk-scale task used throughout the test suite. The mixing maps
    /// (task geometry) are pinned to one seed; `seed` varies the sampled
    /// families, folds, and negative draws.
    pub fn default_task(seed: u64) -> Self {
        SynthSpec {
            families: 500,
            genome_dim: 8,
            observed_dim: 16,
            heritability: 0.8,
            noise: 0.3,
            seed,
            mixing_seed: 0,
            shared_mixing: false,
            folds: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.families < 2 {
            return Err(GkrError::usage("synth: need at least 2 families"));
        }
        if self.genome_dim == 0 || self.observed_dim == 0 {
            return Err(GkrError::usage("synth: dims must be positive"));
        }
        if !(0.0..=1.0).contains(&self.heritability) {
            return Err(GkrError::usage(format!(
                "synth: heritability {} outside [0, 1]",
                self.heritability
            )));
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return Err(GkrError::usage("synth: noise must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Random directions: each row is a unit vector, so every observed
/// dimension carries the same pre-noise signal variance.
fn random_direction_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let row: Vec<f64> = (0..cols)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        for (j, v) in row.into_iter().enumerate() {
            m.set(i, j, v / norm);
        }
    }
    m
}

fn normal_vec(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `tanh(M g + sigma * eps)` observed feature for one latent genome.
fn observe(map: &Matrix, genome: &[f64], noise: f64, eps: &[f64]) -> Vector {
    let d = map.rows();
    let g = map.cols();
    let mut out = vec![0.0; d];
    for i in 0..d {
        let mut s = 0.0;
        for j in 0..g {
            s += map.get(i, j) * genome[j];
        }
        out[i] = (s + noise * eps[i]).tanh();
    }
    Vector::new(out)
}

/// Generate the feature table and a balanced, folded pair set.
///
/// Per family: genome `g ~ N(0, I)`; the parent observes `g`, the child
/// observes `rho * g + sqrt(1 - rho^2) * g'` with a fresh `g'`, each through
/// its own fixed mixing map plus noise. Same-family pairs are the positives.
pub fn gen_synthetic(spec: &SynthSpec) -> Result<(FeatureTable, PairSet)> {
    spec.validate()?;
    let (g_dim, d_dim) = (spec.genome_dim, spec.observed_dim);
    let mut mix_rng = rng_from(spec.mixing_seed);
    let map_parent = random_direction_matrix(d_dim, g_dim, &mut mix_rng);
    let map_child = if spec.shared_mixing {
        map_parent.clone()
    } else {
        let mut flipped = map_parent.clone();
        for i in 0..d_dim {
            if mix_rng.random::<bool>() {
                for j in 0..g_dim {
                    flipped.set(i, j, -flipped.get(i, j));
                }
            }
        }
        flipped
    };

    let rho = spec.heritability;
    let fresh_weight = (1.0 - rho * rho).sqrt();
    let mut rng = rng_from(derive_seed(spec.seed, TAG_FAMILIES));
    let mut table = FeatureTable::new(d_dim);
    let mut positives = Vec::with_capacity(spec.families);
    for fam in 1..=spec.families {
        let genome = normal_vec(g_dim, &mut rng);
        let fresh = normal_vec(g_dim, &mut rng);
        let eps_parent = normal_vec(d_dim, &mut rng);
        let eps_child = normal_vec(d_dim, &mut rng);

        let child_genome: Vec<f64> = genome
            .iter()
            .zip(&fresh)
            .map(|(&g, &f)| rho * g + fresh_weight * f)
            .collect();

        let parent_id = format!("p{fam}");
        let child_id = format!("c{fam}");
        table.push(
            parent_id.clone(),
            Role::Parent,
            observe(&map_parent, &genome, spec.noise, &eps_parent),
        )?;
        table.push(
            child_id.clone(),
            Role::Child,
            observe(&map_child, &child_genome, spec.noise, &eps_child),
        )?;
        positives.push(Pair {
            parent: parent_id,
            child: child_id,
            fold: 0,
            relation: Relation::Synthetic,
        });
    }

    make_folds(&mut positives, spec.folds, derive_seed(spec.seed, TAG_FOLDS))?;
    let negatives = build_negative_set(&positives, derive_seed(spec.seed, TAG_NEGATIVES))?;
    let pairs = PairSet {
        positives,
        negatives,
    };
    pairs.validate(Some(&table))?;
    Ok((table, pairs))
}

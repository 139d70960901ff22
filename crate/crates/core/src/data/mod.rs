//! Pair-set construction: positive parent-child pairs, a balanced negative
//! set drawn without replacement, fold assignments for cross-validation,
//! file I/O, and a synthetic generator for desk-scale experiments.

mod io;
mod synth;

pub use io::{read_features, read_pairs, write_features, write_pairs};
pub use synth::{gen_synthetic, SynthSpec};

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::diffmath::Vector;
use crate::error::{GkrError, Result};
use crate::seeding::rng_from;

/// Folds are numbered 1..=MAX_FOLDS; manifests outside that range are invalid.
pub const MAX_FOLDS: u8 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Parent,
    Child,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Parent => "parent",
            Role::Child => "child",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "parent" => Some(Role::Parent),
            "child" => Some(Role::Child),
            _ => None,
        }
    }
}

/// Kin-relation tag carried by each pair. The four kin types follow the
/// usual parent/child gender split; `Synthetic` marks generated tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "F-S")]
    FatherSon,
    #[serde(rename = "F-D")]
    FatherDaughter,
    #[serde(rename = "M-S")]
    MotherSon,
    #[serde(rename = "M-D")]
    MotherDaughter,
    #[serde(rename = "synthetic")]
    Synthetic,
}

impl Relation {
    /// Canonical report column order.
    pub const ALL: [Relation; 5] = [
        Relation::FatherSon,
        Relation::FatherDaughter,
        Relation::MotherSon,
        Relation::MotherDaughter,
        Relation::Synthetic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::FatherSon => "F-S",
            Relation::FatherDaughter => "F-D",
            Relation::MotherSon => "M-S",
            Relation::MotherDaughter => "M-D",
            Relation::Synthetic => "synthetic",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        Relation::ALL.iter().copied().find(|r| r.as_str() == s)
    }
}

/// Feature rows keyed by unique identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    ids: Vec<String>,
    roles: Vec<Role>,
    features: Vec<Vector>,
    index: HashMap<String, usize>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "feature dimension must be positive");
        FeatureTable {
            dim,
            ids: Vec::new(),
            roles: Vec::new(),
            features: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, role: Role, feature: Vector) -> Result<()> {
        let id = id.into();
        if feature.dim() != self.dim {
            return Err(GkrError::shape(
                "feature_table",
                format!("table dim {}", self.dim),
                format!("row dim {}", feature.dim()),
            ));
        }
        if self.index.contains_key(&id) {
            return Err(GkrError::usage(format!("duplicate id: {id}")));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.roles.push(role);
        self.features.push(feature);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> (&str, Role, &Vector) {
        (&self.ids[i], self.roles[i], &self.features[i])
    }

    pub fn lookup(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn feature(&self, id: &str) -> Result<&Vector> {
        self.lookup(id)
            .map(|i| &self.features[i])
            .ok_or_else(|| GkrError::usage(format!("unresolved id: {id}")))
    }

    pub fn role(&self, id: &str) -> Result<Role> {
        self.lookup(id)
            .map(|i| self.roles[i])
            .ok_or_else(|| GkrError::usage(format!("unresolved id: {id}")))
    }
}

/// One parent-child pairing with its fold and relation tag. Fold 0 means
/// "not yet assigned"; [`make_folds`] fills it in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub parent: String,
    pub child: String,
    pub fold: u8,
    pub relation: Relation,
}

impl Pair {
    pub fn key(&self) -> (&str, &str) {
        (&self.parent, &self.child)
    }
}

/// Positive kin pairs plus an equally sized negative set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub positives: Vec<Pair>,
    pub negatives: Vec<Pair>,
}

impl PairSet {
    /// Distinct folds present on the positives, ascending.
    pub fn folds(&self) -> Vec<u8> {
        let mut folds: Vec<u8> = self
            .positives
            .iter()
            .map(|p| p.fold)
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        folds.sort_unstable();
        folds
    }

    pub fn relations(&self) -> Vec<Relation> {
        let present: HashSet<Relation> = self.positives.iter().map(|p| p.relation).collect();
        Relation::ALL
            .iter()
            .copied()
            .filter(|r| present.contains(r))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty()
    }

    /// Split into (train, test) by fold id. Both sides keep balance because
    /// negatives carry their parent's fold.
    pub fn split_fold(&self, fold: u8) -> (PairSet, PairSet) {
        let part = |pairs: &[Pair], test: bool| {
            pairs
                .iter()
                .filter(|p| (p.fold == fold) == test)
                .cloned()
                .collect::<Vec<_>>()
        };
        (
            PairSet {
                positives: part(&self.positives, false),
                negatives: part(&self.negatives, false),
            },
            PairSet {
                positives: part(&self.positives, true),
                negatives: part(&self.negatives, true),
            },
        )
    }

    /// Enforce every structural invariant:
    /// balanced counts, unique pairings, no negative that duplicates a
    /// positive pairing, negatives confined to their parent's fold, folds in
    /// range, and (when a table is given) id resolution with correct roles.
    pub fn validate(&self, features: Option<&FeatureTable>) -> Result<()> {
        if self.positives.is_empty() {
            return Err(GkrError::usage("pair set has no positive pairs"));
        }
        if self.negatives.len() != self.positives.len() {
            return Err(GkrError::usage(format!(
                "pair set is unbalanced: {} positives vs {} negatives",
                self.positives.len(),
                self.negatives.len()
            )));
        }

        let mut positive_keys = HashSet::with_capacity(self.positives.len());
        let mut parent_folds: HashMap<&str, HashSet<u8>> = HashMap::new();
        let mut child_folds: HashMap<&str, HashSet<u8>> = HashMap::new();
        for p in &self.positives {
            if p.fold == 0 || p.fold > MAX_FOLDS {
                return Err(GkrError::usage(format!(
                    "positive pair ({},{}) has fold {} outside 1..={MAX_FOLDS}",
                    p.parent, p.child, p.fold
                )));
            }
            if !positive_keys.insert(p.key()) {
                return Err(GkrError::usage(format!(
                    "duplicate positive pair ({},{})",
                    p.parent, p.child
                )));
            }
            parent_folds.entry(&p.parent).or_default().insert(p.fold);
            child_folds.entry(&p.child).or_default().insert(p.fold);
        }

        let mut negative_keys = HashSet::with_capacity(self.negatives.len());
        for n in &self.negatives {
            if positive_keys.contains(&n.key()) {
                return Err(GkrError::usage(format!(
                    "negative pair ({},{}) pairs a parent with its own child",
                    n.parent, n.child
                )));
            }
            if !negative_keys.insert(n.key()) {
                return Err(GkrError::usage(format!(
                    "duplicate negative pair ({},{})",
                    n.parent, n.child
                )));
            }
            let pf = parent_folds.get(n.parent.as_str()).ok_or_else(|| {
                GkrError::usage(format!(
                    "negative pair ({},{}) uses a parent absent from the positives",
                    n.parent, n.child
                ))
            })?;
            if !pf.contains(&n.fold) {
                return Err(GkrError::usage(format!(
                    "negative pair ({},{}) has fold {} but its parent's fold set is {:?}",
                    n.parent, n.child, n.fold, pf
                )));
            }
            let cf = child_folds.get(n.child.as_str()).ok_or_else(|| {
                GkrError::usage(format!(
                    "negative pair ({},{}) uses a child absent from the positives",
                    n.parent, n.child
                ))
            })?;
            if !cf.contains(&n.fold) {
                return Err(GkrError::usage(format!(
                    "negative pair ({},{}) crosses folds: child belongs to {:?}, pair is fold {}",
                    n.parent, n.child, cf, n.fold
                )));
            }
        }

        if let Some(table) = features {
            for p in self.positives.iter().chain(&self.negatives) {
                match table.role(&p.parent)? {
                    Role::Parent => {}
                    Role::Child => {
                        return Err(GkrError::usage(format!(
                            "id {} is tagged child but used as parent",
                            p.parent
                        )))
                    }
                }
                match table.role(&p.child)? {
                    Role::Child => {}
                    Role::Parent => {
                        return Err(GkrError::usage(format!(
                            "id {} is tagged parent but used as child",
                            p.child
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

/// Assign fold ids 1..=k to the positives, balanced to within one pair,
/// deterministic in `seed`. Pairs that already carry folds are validated
/// and left untouched; mixing assigned and unassigned folds is an error.
pub fn make_folds(positives: &mut [Pair], k: usize, seed: u64) -> Result<()> {
    if k < 2 || k > MAX_FOLDS as usize {
        return Err(GkrError::usage(format!(
            "fold count {k} must be in 2..={MAX_FOLDS}"
        )));
    }
    if positives.len() < k {
        return Err(GkrError::usage(format!(
            "cannot split {} positives into {k} folds",
            positives.len()
        )));
    }
    let assigned = positives.iter().filter(|p| p.fold != 0).count();
    if assigned == positives.len() {
        for p in positives.iter() {
            if p.fold as usize > k {
                return Err(GkrError::usage(format!(
                    "pair ({},{}) has fold {} outside 1..={k}",
                    p.parent, p.child, p.fold
                )));
            }
        }
        return Ok(());
    }
    if assigned != 0 {
        return Err(GkrError::usage(
            "some pairs carry folds and some do not; clear or complete them",
        ));
    }

    let mut order: Vec<usize> = (0..positives.len()).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng_from(seed));
    for (rank, idx) in order.into_iter().enumerate() {
        positives[idx].fold = (rank % k) as u8 + 1;
    }
    Ok(())
}

/// Draw a balanced negative set: for every (relation, fold) group of the
/// positives, exactly as many distinct cross pairs (parent_i, child_j with
/// i != j) as the group has positives, uniformly without replacement,
/// deterministic in `seed`. Grouping keeps every negative inside its
/// parent's fold and relation.
pub fn build_negative_set(positives: &[Pair], seed: u64) -> Result<Vec<Pair>> {
    if positives.len() < 2 {
        return Err(GkrError::usage(
            "cannot form negatives from fewer than 2 positive pairs",
        ));
    }
    let positive_keys: HashSet<(&str, &str)> = positives.iter().map(|p| p.key()).collect();

    let mut groups: BTreeMap<(Relation, u8), Vec<usize>> = BTreeMap::new();
    for (i, p) in positives.iter().enumerate() {
        groups.entry((p.relation, p.fold)).or_default().push(i);
    }

    let mut rng = rng_from(seed);
    let mut negatives = Vec::with_capacity(positives.len());
    for ((relation, fold), members) in groups {
        // Distinct candidate pairings, excluding anything that collides with
        // a positive pairing by id.
        let mut candidates: Vec<(&str, &str)> = Vec::new();
        let mut seen = HashSet::new();
        for &i in &members {
            for &j in &members {
                if i == j {
                    continue;
                }
                let key = (positives[i].parent.as_str(), positives[j].child.as_str());
                if positive_keys.contains(&key) || !seen.insert(key) {
                    continue;
                }
                candidates.push(key);
            }
        }
        if candidates.len() < members.len() {
            return Err(GkrError::usage(format!(
                "cannot form {} negatives for relation {} fold {fold}: only {} distinct cross pairs",
                members.len(),
                relation.as_str(),
                candidates.len()
            )));
        }
        let chosen = rand::seq::index::sample(&mut rng, candidates.len(), members.len());
        for idx in chosen.iter() {
            let (parent, child) = candidates[idx];
            negatives.push(Pair {
                parent: parent.to_string(),
                child: child.to_string(),
                fold,
                relation,
            });
        }
    }
    Ok(negatives)
}

//! CSV I/O for feature tables and pair manifests.
//!
//! Features: header `id,role,f0..f{D-1}`, one row per identifier.
//! Pairs: header `parent_id,child_id,label,fold,relation`.
//!
//! Files are UTF-8, comma-separated, LF line endings. Floats are written in
//! shortest round-trip form, so read(write(t)) reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diffmath::Vector;
use crate::error::{GkrError, Result};

use super::{FeatureTable, Pair, PairSet, Relation, Role};

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

pub fn write_features(path: &Path, table: &FeatureTable) -> Result<()> {
    let mut out = String::from("id,role");
    for i in 0..table.dim() {
        write!(out, ",f{i}").expect("string write");
    }
    out.push('\n');
    for i in 0..table.len() {
        let (id, role, feature) = table.row(i);
        write!(out, "{id},{}", role.as_str()).expect("string write");
        for v in feature.values() {
            write!(out, ",{v}").expect("string write");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<FeatureTable> {
    let content = fs::read_to_string(path)?;
    parse_features(&content, &path_str(path))
}

fn parse_features(content: &str, path: &str) -> Result<FeatureTable> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| GkrError::parse(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "role" {
        return Err(GkrError::parse(
            path,
            1,
            "header must be id,role,f0..f{D-1}",
        ));
    }
    for (i, c) in cols[2..].iter().enumerate() {
        if *c != format!("f{i}") {
            return Err(GkrError::parse(
                path,
                1,
                format!("feature column {} should be named f{i}, got {c}", i + 2),
            ));
        }
    }
    let dim = cols.len() - 2;
    let mut table = FeatureTable::new(dim);
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(GkrError::parse(
                path,
                line_no,
                format!("expected {} fields, got {}", dim + 2, fields.len()),
            ));
        }
        let id = fields[0];
        if id.is_empty() {
            return Err(GkrError::parse(path, line_no, "empty id"));
        }
        let role = Role::parse(fields[1]).ok_or_else(|| {
            GkrError::parse(
                path,
                line_no,
                format!("role must be parent or child, got {}", fields[1]),
            )
        })?;
        let mut values = Vec::with_capacity(dim);
        for (j, cell) in fields[2..].iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                GkrError::parse(path, line_no, format!("non-numeric cell f{j}: {cell}"))
            })?;
            if !v.is_finite() {
                return Err(GkrError::parse(
                    path,
                    line_no,
                    format!("non-finite cell f{j}: {cell}"),
                ));
            }
            values.push(v);
        }
        table
            .push(id, role, Vector::new(values))
            .map_err(|e| GkrError::parse(path, line_no, e.to_string()))?;
    }
    if table.is_empty() {
        return Err(GkrError::parse(path, 1, "no feature rows"));
    }
    Ok(table)
}

/// Positives first, then negatives, each in their stored order.
pub fn write_pairs(path: &Path, pairs: &PairSet) -> Result<()> {
    let mut out = String::from("parent_id,child_id,label,fold,relation\n");
    for (pair, label) in pairs
        .positives
        .iter()
        .map(|p| (p, 1))
        .chain(pairs.negatives.iter().map(|p| (p, 0)))
    {
        writeln!(
            out,
            "{},{},{label},{},{}",
            pair.parent,
            pair.child,
            pair.fold,
            pair.relation.as_str()
        )
        .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a manifest and check every pair-set invariant against `features`.
pub fn read_pairs(path: &Path, features: &FeatureTable) -> Result<PairSet> {
    let content = fs::read_to_string(path)?;
    parse_pairs(&content, &path_str(path), features)
}

fn parse_pairs(content: &str, path: &str, features: &FeatureTable) -> Result<PairSet> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| GkrError::parse(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let expected = ["parent_id", "child_id", "label", "fold", "relation"];
    if cols.len() != expected.len() || cols != expected {
        if !cols.contains(&"fold") {
            return Err(GkrError::parse(
                path,
                1,
                "missing fold column; assign folds (make_folds) before writing the manifest",
            ));
        }
        return Err(GkrError::parse(
            path,
            1,
            format!("header must be {}", expected.join(",")),
        ));
    }

    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected.len() {
            return Err(GkrError::parse(
                path,
                line_no,
                format!("expected {} fields, got {}", expected.len(), fields.len()),
            ));
        }
        let label: u8 = fields[2].parse().map_err(|_| {
            GkrError::parse(path, line_no, format!("label must be 0 or 1, got {}", fields[2]))
        })?;
        if label > 1 {
            return Err(GkrError::parse(
                path,
                line_no,
                format!("label must be 0 or 1, got {label}"),
            ));
        }
        let fold: u8 = fields[3].parse().map_err(|_| {
            GkrError::parse(path, line_no, format!("fold must be an integer, got {}", fields[3]))
        })?;
        if fold == 0 || fold > super::MAX_FOLDS {
            return Err(GkrError::parse(
                path,
                line_no,
                format!("fold {fold} outside 1..={}", super::MAX_FOLDS),
            ));
        }
        let relation = Relation::parse(fields[4]).ok_or_else(|| {
            GkrError::parse(
                path,
                line_no,
                format!("unknown relation {}; expected F-S, F-D, M-S, M-D, or synthetic", fields[4]),
            )
        })?;
        if features.lookup(fields[0]).is_none() {
            return Err(GkrError::parse(
                path,
                line_no,
                format!("unresolved id: {}", fields[0]),
            ));
        }
        if features.lookup(fields[1]).is_none() {
            return Err(GkrError::parse(
                path,
                line_no,
                format!("unresolved id: {}", fields[1]),
            ));
        }
        let pair = Pair {
            parent: fields[0].to_string(),
            child: fields[1].to_string(),
            fold,
            relation,
        };
        if label == 1 {
            positives.push(pair);
        } else {
            negatives.push(pair);
        }
    }
    let set = PairSet {
        positives,
        negatives,
    };
    set.validate(Some(features))?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SynthSpec};

    fn small_spec() -> SynthSpec {
        SynthSpec {
            families: 12,
            genome_dim: 3,
            observed_dim: 4,
            heritability: 0.6,
            noise: 0.1,
            seed: 5,
            mixing_seed: 5,
            shared_mixing: false,
            folds: 5,
        }
    }

    #[test]
    fn feature_round_trip_preserves_every_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        let (table, _) = gen_synthetic(&small_spec()).unwrap();
        write_features(&path, &table).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back.len(), table.len());
        for i in 0..table.len() {
            let (id_a, role_a, f_a) = table.row(i);
            let (id_b, role_b, f_b) = back.row(i);
            assert_eq!(id_a, id_b);
            assert_eq!(role_a, role_b);
            for (x, y) in f_a.values().iter().zip(f_b.values()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn pairs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let fpath = dir.path().join("features.csv");
        let ppath = dir.path().join("pairs.csv");
        let (table, pairs) = gen_synthetic(&small_spec()).unwrap();
        write_features(&fpath, &table).unwrap();
        write_pairs(&ppath, &pairs).unwrap();
        let table_back = read_features(&fpath).unwrap();
        let back = read_pairs(&ppath, &table_back).unwrap();
        assert_eq!(back, pairs);
    }

    #[test]
    fn duplicate_id_errors_with_line_number() {
        let content = "id,role,f0\np1,parent,0.5\np1,parent,0.25\n";
        let err = parse_features(content, "mem").unwrap_err();
        assert_eq!(err.to_string(), "mem:3: duplicate id: p1");
    }

    #[test]
    fn row_width_mismatch_is_rejected() {
        let content = "id,role,f0,f1\np1,parent,0.5\n";
        let err = parse_features(content, "mem").unwrap_err();
        assert!(err.to_string().contains("mem:2"), "{err}");
        assert!(err.to_string().contains("expected 4 fields"), "{err}");
    }

    #[test]
    fn non_numeric_cell_is_rejected() {
        let content = "id,role,f0\np1,parent,abc\n";
        let err = parse_features(content, "mem").unwrap_err();
        assert!(err.to_string().contains("non-numeric"), "{err}");
    }

    #[test]
    fn missing_fold_column_mentions_make_folds() {
        let (table, _) = gen_synthetic(&small_spec()).unwrap();
        let content = "parent_id,child_id,label,relation\np1,c1,1,synthetic\n";
        let err = parse_pairs(content, "mem", &table).unwrap_err();
        assert!(err.to_string().contains("make_folds"), "{err}");
    }

    #[test]
    fn self_pair_negative_in_manifest_is_rejected() {
        let (table, _) = gen_synthetic(&small_spec()).unwrap();
        let content = "parent_id,child_id,label,fold,relation\n\
                       p1,c1,1,1,synthetic\n\
                       p2,c2,1,1,synthetic\n\
                       p1,c1,0,1,synthetic\n\
                       p2,c1,0,1,synthetic\n";
        let err = parse_pairs(content, "mem", &table).unwrap_err();
        assert!(err.to_string().contains("own child"), "{err}");
    }

    #[test]
    fn unresolved_id_is_rejected() {
        let (table, _) = gen_synthetic(&small_spec()).unwrap();
        let content = "parent_id,child_id,label,fold,relation\nghost,c1,1,1,synthetic\n";
        let err = parse_pairs(content, "mem", &table).unwrap_err();
        assert!(err.to_string().contains("unresolved id: ghost"), "{err}");
    }

    #[test]
    fn out_of_range_fold_is_rejected() {
        let (table, _) = gen_synthetic(&small_spec()).unwrap();
        let content = "parent_id,child_id,label,fold,relation\np1,c1,1,6,synthetic\n";
        let err = parse_pairs(content, "mem", &table).unwrap_err();
        assert!(err.to_string().contains("fold 6"), "{err}");
    }
}

//! Property tests over the numeric core and the data pipeline.

use gkr_core::baselines::{cosine_score, metric_distance};
use gkr_core::data::{gen_synthetic, SynthSpec};
use gkr_core::diffmath::{Matrix, PoolMode, Tape, Vector};
use gkr_core::trainer::{crossval, ModelSpec, TrainConfig};
use proptest::prelude::*;

fn bounded_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, dim)
}

proptest! {
    #[test]
    fn primitive_ops_stay_finite(
        w in prop::collection::vec(-1e3..1e3f64, 12),
        v in bounded_vec(3),
        u in bounded_vec(4),
    ) {
        let mut tape = Tape::new();
        let wm = tape.matrix_param(&Matrix::new(3, 4, w));
        let tv = tape.vector_input(&Vector::new(v));
        let lin = tape.linear(wm, tv).unwrap();
        let act = tape.relu(lin);
        let tu = tape.vector_input(&Vector::new(u));
        let cat = tape.concat(act, tu);
        let pooled = tape.pool(&[lin, act, tu], PoolMode::Max).unwrap();
        let mean = tape.pool(&[lin, act, tu], PoolMode::Mean).unwrap();
        for node in [lin, act, cat, pooled, mean] {
            prop_assert!(tape.values(node).iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn pool_max_dominates_and_mean_is_bounded(
        rows in prop::collection::vec(bounded_vec(5), 1..6),
    ) {
        let mut tape = Tape::new();
        let handles: Vec<_> = rows
            .iter()
            .map(|r| tape.vector_input(&Vector::new(r.clone())))
            .collect();
        let mx = tape.pool(&handles, PoolMode::Max).unwrap();
        let mn = tape.pool(&handles, PoolMode::Mean).unwrap();
        let mx_vals = tape.values(mx).to_vec();
        let mn_vals = tape.values(mn).to_vec();
        for j in 0..5 {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(rows.iter().all(|r| mx_vals[j] >= r[j]));
            prop_assert_eq!(mx_vals[j], hi);
            prop_assert!(mn_vals[j] >= lo - 1e-9 && mn_vals[j] <= hi + 1e-9);
        }
    }

    /// Gradient of a*L1 + b*L2 equals a*grad(L1) + b*grad(L2), with both
    /// losses sharing an intermediate so adjoint fan-out is exercised.
    #[test]
    fn backward_is_linear_in_the_loss(
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        w in prop::collection::vec(-2.0..2.0f64, 6),
        v in prop::collection::vec(-2.0..2.0f64, 2),
        c1 in prop::collection::vec(-2.0..2.0f64, 3),
        c2 in prop::collection::vec(-2.0..2.0f64, 3),
    ) {
        let mut tape = Tape::new();
        let wm = tape.matrix_param(&Matrix::new(2, 3, w));
        let tv = tape.vector_input(&Vector::new(v));
        let hidden = tape.linear(wm, tv).unwrap();
        let act = tape.relu(hidden);
        let tc1 = tape.vector_input(&Vector::new(c1));
        let tc2 = tape.vector_input(&Vector::new(c2));
        let l1 = tape.dot(act, tc1).unwrap();
        let l2 = tape.dot(hidden, tc2).unwrap();
        let combined = tape.scalar_affine(&[(l1, a), (l2, b)], 0.0);

        let g1 = tape.backward(l1).unwrap();
        let g2 = tape.backward(l2).unwrap();
        let gc = tape.backward(combined).unwrap();
        for j in 0..6 {
            let expect = a * g1.get(0)[j] + b * g2.get(0)[j];
            let got = gc.get(0)[j];
            prop_assert!(
                (got - expect).abs() <= 1e-9 * (1.0 + expect.abs()),
                "coord {}: {} vs {}", j, got, expect
            );
        }
    }

    #[test]
    fn cosine_is_scale_invariant(
        x in prop::collection::vec(-10.0..10.0f64, 4),
        y in prop::collection::vec(-10.0..10.0f64, 4),
        s in 1e-3..1e3f64,
        t in 1e-3..1e3f64,
    ) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
        prop_assume!(y.iter().any(|v| v.abs() > 1e-6));
        let fx = Vector::new(x.clone());
        let fy = Vector::new(y.clone());
        let base = cosine_score(&fx, &fy).unwrap();
        let sx = Vector::new(x.iter().map(|v| v * s).collect());
        let ty = Vector::new(y.iter().map(|v| v * t).collect());
        let scaled = cosine_score(&sx, &ty).unwrap();
        prop_assert!((scaled - base).abs() < 1e-9);
    }

    /// Symmetric, zero on identical inputs, and triangle inequality.
    #[test]
    fn projected_metric_is_a_pseudo_metric(
        w in prop::collection::vec(-2.0..2.0f64, 12),
        x in prop::collection::vec(-5.0..5.0f64, 4),
        y in prop::collection::vec(-5.0..5.0f64, 4),
        z in prop::collection::vec(-5.0..5.0f64, 4),
    ) {
        let wm = Matrix::new(4, 3, w);
        let fx = Vector::new(x);
        let fy = Vector::new(y);
        let fz = Vector::new(z);
        let dxy = metric_distance(&fx, &fy, &wm).unwrap();
        let dyx = metric_distance(&fy, &fx, &wm).unwrap();
        prop_assert_eq!(dxy.to_bits(), dyx.to_bits());
        prop_assert_eq!(metric_distance(&fx, &fx, &wm).unwrap(), 0.0);
        let dxz = metric_distance(&fx, &fz, &wm).unwrap();
        let dzy = metric_distance(&fz, &fy, &wm).unwrap();
        prop_assert!(dxy <= dxz + dzy + 1e-9);
    }
}

/// Cross-validated accuracy of the calibrated cosine baseline does not
/// decrease when heritability rises, checked on shared-mixing tasks where
/// cosine is the natural detector.
#[test]
fn cosine_accuracy_is_monotone_in_heritability() {
    let accuracy_at = |rho: f64, seed: u64| {
        let spec = SynthSpec {
            families: 200,
            genome_dim: 8,
            observed_dim: 16,
            heritability: rho,
            noise: 0.3,
            seed,
            mixing_seed: 0,
            shared_mixing: true,
            folds: 5,
        };
        let (features, pairs) = gen_synthetic(&spec).unwrap();
        let mut cfg = TrainConfig::new(ModelSpec::Cosine);
        cfg.epochs = 30;
        cfg.lr = 0.05;
        cfg.seed = seed;
        crossval(&cfg, &pairs, &features)
            .unwrap()
            .mean_accuracy
    };
    for seed in [1, 2, 3] {
        let low = accuracy_at(0.3, seed);
        let high = accuracy_at(0.9, seed);
        assert!(
            high >= low,
            "seed {seed}: accuracy at rho=0.9 ({high}) below rho=0.3 ({low})"
        );
    }
}

//! Forward-path equivalence against an independent scalar oracle.
//!
//! The oracle below recomputes the whole network with plain nested-loop
//! arithmetic on `Vec<Vec<f64>>`, sharing no code with the tape or the
//! network modules. Agreement to 1e-10 over many random tiny
//! configurations pins the forward semantics.

use gkr_core::diffmath::{Matrix, Trainable, Vector};
use gkr_core::gkrnet::{forward, init_params, Aggregator, CentralInit, GkrConfig};
use gkr_core::seeding::rng_from;
use rand::Rng;

/// Plain scalar arithmetic only. No imports from the crate under test.
mod oracle {
    #[derive(Clone, Copy)]
    pub enum Init {
        Mean,
        Max,
        Const(f64),
    }

    #[derive(Clone, Copy)]
    pub enum Agg {
        Max,
        Mean,
    }

    pub struct Layer {
        pub w_mess: Vec<Vec<f64>>,
        pub w_peri: Vec<Vec<f64>>,
        pub w_cen: Vec<Vec<f64>>,
    }

    pub struct Net {
        pub layers: Vec<Layer>,
        pub readout: Vec<Vec<Vec<f64>>>,
        pub init: Init,
        pub agg: Agg,
    }

    fn matvec_transposed(w: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        let cols = w[0].len();
        let mut out = vec![0.0; cols];
        for (j, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (i, &vi) in v.iter().enumerate() {
                s += w[i][j] * vi;
            }
            *o = s;
        }
        out
    }

    fn relu(mut v: Vec<f64>) -> Vec<f64> {
        for x in &mut v {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        v
    }

    fn concat2(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = a.to_vec();
        out.extend_from_slice(b);
        out
    }

    pub fn probability(net: &Net, fx: &[f64], fy: &[f64]) -> f64 {
        let d = fx.len();
        let mut peripheral: Vec<Vec<f64>> = (0..d).map(|i| vec![fx[i], fy[i]]).collect();
        let mut central = match net.init {
            Init::Const(c) => vec![c, c],
            Init::Mean => {
                let mut m = vec![0.0, 0.0];
                for p in &peripheral {
                    m[0] += p[0];
                    m[1] += p[1];
                }
                vec![m[0] / d as f64, m[1] / d as f64]
            }
            Init::Max => {
                let mut m = peripheral[0].clone();
                for p in &peripheral[1..] {
                    if p[0] > m[0] {
                        m[0] = p[0];
                    }
                    if p[1] > m[1] {
                        m[1] = p[1];
                    }
                }
                m
            }
        };

        for layer in &net.layers {
            let messages: Vec<Vec<f64>> = peripheral
                .iter()
                .map(|h| relu(matvec_transposed(&layer.w_mess, h)))
                .collect();
            let m_c = relu(matvec_transposed(&layer.w_mess, &central));

            let new_peripheral: Vec<Vec<f64>> = messages
                .iter()
                .map(|m| relu(matvec_transposed(&layer.w_peri, &concat2(m, &m_c))))
                .collect();

            let width = m_c.len();
            let mut agg = vec![0.0; width];
            match net.agg {
                Agg::Max => {
                    agg.copy_from_slice(&messages[0]);
                    for m in &messages[1..] {
                        for j in 0..width {
                            if m[j] > agg[j] {
                                agg[j] = m[j];
                            }
                        }
                    }
                }
                Agg::Mean => {
                    for m in &messages {
                        for j in 0..width {
                            agg[j] += m[j];
                        }
                    }
                    for a in &mut agg {
                        *a /= messages.len() as f64;
                    }
                }
            }
            central = relu(matvec_transposed(&layer.w_cen, &concat2(&m_c, &agg)));
            peripheral = new_peripheral;
        }

        let mut stacked = central;
        for p in &peripheral {
            stacked.extend_from_slice(p);
        }
        let last = net.readout.len() - 1;
        let mut h = stacked;
        for (i, w) in net.readout.iter().enumerate() {
            h = matvec_transposed(w, &h);
            if i < last {
                h = relu(h);
            }
        }
        1.0 / (1.0 + (-h[0]).exp())
    }
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect())
        .collect()
}

fn oracle_net(
    config: &GkrConfig,
    params: &gkr_core::gkrnet::GkrParams,
) -> oracle::Net {
    oracle::Net {
        layers: params
            .layers
            .iter()
            .map(|l| oracle::Layer {
                w_mess: matrix_rows(&l.w_mess),
                w_peri: matrix_rows(&l.w_peri),
                w_cen: matrix_rows(&l.w_cen),
            })
            .collect(),
        readout: params.readout.weights().iter().map(matrix_rows).collect(),
        init: match config.central_init {
            CentralInit::MeanPool => oracle::Init::Mean,
            CentralInit::MaxPool => oracle::Init::Max,
            CentralInit::Const(c) => oracle::Init::Const(c),
        },
        agg: match config.aggregator {
            Aggregator::Max => oracle::Agg::Max,
            Aggregator::Mean => oracle::Agg::Mean,
        },
    }
}

#[test]
fn fifty_random_tiny_configs_match_oracle_to_1e10() {
    let inits = [
        CentralInit::MeanPool,
        CentralInit::MaxPool,
        CentralInit::Const(0.0),
        CentralInit::Const(0.5),
        CentralInit::Const(1.0),
    ];
    let aggs = [Aggregator::Max, Aggregator::Mean];

    let mut rng = rng_from(0xacc0);
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let d = rng.random_range(1..=3);
        let k = rng.random_range(1..=2);
        let layer_dims: Vec<usize> = (0..k).map(|_| rng.random_range(1..=2)).collect();
        let mut config = GkrConfig::new(d, layer_dims);
        config.central_init = inits[rng.random_range(0..inits.len())];
        config.aggregator = aggs[rng.random_range(0..aggs.len())];
        config.readout_hidden = Some(vec![rng.random_range(1..=3)]);
        let params = init_params(&config, 1000 + case).unwrap();

        let fx = Vector::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());
        let fy = Vector::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());

        let got = forward(&config, &params, &fx, &fy).unwrap();
        let want = oracle::probability(&oracle_net(&config, &params), fx.values(), fy.values());
        let diff = (got - want).abs();
        worst = worst.max(diff);
        assert!(
            diff < 1e-10,
            "case {case}: D={d} dims={:?} got {got} want {want}",
            config.layer_dims
        );
    }
    println!("worst forward deviation over 50 tiny configs: {worst:.3e}");
}

#[test]
fn hand_set_single_hidden_readout_matches_oracle() {
    // D=2, one layer with F_1=1, readout 3 -> 2 -> 1, every weight set by hand.
    let mut config = GkrConfig::new(2, vec![1]);
    config.central_init = CentralInit::Const(0.5);
    config.aggregator = Aggregator::Max;
    config.readout_hidden = Some(vec![2]);
    let mut params = init_params(&config, 0).unwrap();

    let hand: [&[f64]; 5] = [
        &[0.25, -0.5],                      // w_mess 2x1
        &[1.0, 0.75],                       // w_peri 2x1
        &[-0.25, 0.5],                      // w_cen 2x1
        &[0.2, -0.1, 0.3, 0.4, -0.6, 0.05], // readout layer 0: 3x2
        &[0.7, -0.3],                       // readout layer 1: 2x1
    ];
    let mut buffers = params.buffers_mut();
    assert_eq!(buffers.len(), hand.len());
    for (buf, values) in buffers.iter_mut().zip(hand) {
        buf.copy_from_slice(values);
    }

    let fx = Vector::new(vec![0.9, -0.4]);
    let fy = Vector::new(vec![0.2, 0.6]);
    let got = forward(&config, &params, &fx, &fy).unwrap();
    let want = oracle::probability(&oracle_net(&config, &params), fx.values(), fy.values());
    assert!((got - want).abs() < 1e-14, "got {got} want {want}");
}

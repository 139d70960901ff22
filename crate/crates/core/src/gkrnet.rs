//! The GKR network: a star-shaped relational graph over a feature pair,
//! updated by recursive message passing and read out into a kinship logit.
//!
//! For a D-dimensional feature pair (fx, fy) the graph has D peripheral
//! nodes, node d starting as the 2-vector (fx[d], fy[d]), plus one central
//! hub node every peripheral node communicates through. Each layer k maps
//! node features from dimension F_{k-1} to F_k:
//!
//!   messages     m_d = ReLU(W_mess^T h_d)     (W_mess shared by all nodes)
//!   peripheral   h_d' = ReLU(W_peri^T [m_d || m_c])
//!   aggregate    a    = pool({m_d})           (elementwise max or mean)
//!   central      h_c' = ReLU(W_cen^T [m_c || a])
//!
//! After K layers, all node features are concatenated (central first, then
//! peripheral in dimension order) and fed to an MLP that emits the logit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffmath::{
    init::fan_in_uniform_matrix, init::fan_in_uniform_vector, sigmoid, Matrix, Mlp, PoolMode,
    RegisteredMlp, Tape, TapeMat, TapeScalar, TapeVec, Trainable, Vector,
};
use crate::error::{GkrError, Result};
use crate::seeding::rng_from;

/// Every node starts as a 2-vector: the pair's two values in one dimension.
pub const NODE_INPUT_DIM: usize = 2;

/// How the central node's initial 2-vector is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CentralInit {
    /// Elementwise mean of the peripheral initial vectors.
    MeanPool,
    /// Elementwise max of the peripheral initial vectors.
    MaxPool,
    /// The constant 2-vector (c, c).
    Const(f64),
}

impl CentralInit {
    /// Row label used in ablation tables.
    pub fn label(&self) -> String {
        match self {
            CentralInit::MeanPool => "Mean".to_string(),
            CentralInit::MaxPool => "Max".to_string(),
            CentralInit::Const(c) => {
                let s = format!("{c}");
                s
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    Max,
    Mean,
}

impl Aggregator {
    pub fn pool_mode(&self) -> PoolMode {
        match self {
            Aggregator::Max => PoolMode::Max,
            Aggregator::Mean => PoolMode::Mean,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Aggregator::Max => "Max",
            Aggregator::Mean => "Mean",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkrConfig {
    /// Feature dimension D; also the peripheral node count.
    pub feature_dim: usize,
    /// Per-layer output dims F_1..F_K.
    pub layer_dims: Vec<usize>,
    #[serde(default = "default_central_init")]
    pub central_init: CentralInit,
    #[serde(default = "default_aggregator")]
    pub aggregator: Aggregator,
    /// Readout hidden widths; `None` picks `max(16, readout_input/4)`.
    #[serde(default)]
    pub readout_hidden: Option<Vec<usize>>,
    /// The update transforms are pure `ReLU(W^T h)` by default; this turns
    /// on additive bias terms everywhere (layers and readout).
    #[serde(default)]
    pub use_bias: bool,
}

fn default_central_init() -> CentralInit {
    CentralInit::Const(0.5)
}

fn default_aggregator() -> Aggregator {
    Aggregator::Max
}

impl GkrConfig {
    pub fn new(feature_dim: usize, layer_dims: Vec<usize>) -> Self {
        GkrConfig {
            feature_dim,
            layer_dims,
            central_init: default_central_init(),
            aggregator: default_aggregator(),
            readout_hidden: None,
            use_bias: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 {
            return Err(GkrError::usage("gkr config: feature_dim must be positive"));
        }
        if self.layer_dims.is_empty() {
            return Err(GkrError::usage("gkr config: need at least one layer"));
        }
        if self.layer_dims.iter().any(|&f| f == 0) {
            return Err(GkrError::usage("gkr config: all layer dims must be positive"));
        }
        if let Some(h) = &self.readout_hidden {
            if h.iter().any(|&w| w == 0) {
                return Err(GkrError::usage(
                    "gkr config: readout hidden widths must be positive",
                ));
            }
        }
        Ok(())
    }

    pub fn layer_count(&self) -> usize {
        self.layer_dims.len()
    }

    /// Input dimension of layer `k` (1-based): F_{k-1}, with F_0 fixed at 2.
    pub fn layer_input_dim(&self, k: usize) -> usize {
        if k == 1 {
            NODE_INPUT_DIM
        } else {
            self.layer_dims[k - 2]
        }
    }

    /// (D + 1) * F_K — every node feature, concatenated.
    pub fn readout_input_dim(&self) -> usize {
        (self.feature_dim + 1) * self.layer_dims[self.layer_count() - 1]
    }

    /// Full dim chain of the readout MLP, ending in the scalar logit.
    pub fn readout_dims(&self) -> Vec<usize> {
        let input = self.readout_input_dim();
        let hidden = match &self.readout_hidden {
            Some(h) => h.clone(),
            None => vec![16usize.max(input / 4)],
        };
        let mut dims = vec![input];
        dims.extend(hidden);
        dims.push(1);
        dims
    }
}

/// One layer's transforms. `w_mess` is shared between peripheral and central
/// message generation; biases exist only when the config enables them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkrLayerParams {
    pub w_mess: Matrix,
    pub w_peri: Matrix,
    pub w_cen: Matrix,
    pub b_mess: Option<Vector>,
    pub b_peri: Option<Vector>,
    pub b_cen: Option<Vector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkrParams {
    pub layers: Vec<GkrLayerParams>,
    pub readout: Mlp,
    /// Seed the weights were drawn from.
    pub seed: u64,
}

/// Draw all weights i.i.d. uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)].
pub fn init_params(config: &GkrConfig, seed: u64) -> Result<GkrParams> {
    config.validate()?;
    let mut rng = rng_from(seed);
    init_params_with_rng(config, seed, &mut rng)
}

/// Same as [`init_params`] but drawing from a caller-provided stream, so a
/// composite model can initialize everything from one seed.
pub fn init_params_with_rng(
    config: &GkrConfig,
    seed: u64,
    rng: &mut impl Rng,
) -> Result<GkrParams> {
    config.validate()?;
    let mut layers = Vec::with_capacity(config.layer_count());
    for k in 1..=config.layer_count() {
        let f_in = config.layer_input_dim(k);
        let f_out = config.layer_dims[k - 1];
        let bias = |fan_in: usize, rng: &mut _| {
            if config.use_bias {
                Some(fan_in_uniform_vector(fan_in, f_out, rng))
            } else {
                None
            }
        };
        let w_mess = fan_in_uniform_matrix(f_in, f_out, rng);
        let b_mess = bias(f_in, rng);
        let w_peri = fan_in_uniform_matrix(2 * f_out, f_out, rng);
        let b_peri = bias(2 * f_out, rng);
        let w_cen = fan_in_uniform_matrix(2 * f_out, f_out, rng);
        let b_cen = bias(2 * f_out, rng);
        layers.push(GkrLayerParams {
            w_mess,
            w_peri,
            w_cen,
            b_mess,
            b_peri,
            b_cen,
        });
    }
    let readout = Mlp::init(&config.readout_dims(), config.use_bias, rng)?;
    Ok(GkrParams {
        layers,
        readout,
        seed,
    })
}

impl GkrParams {
    /// Verify every matrix against the dims the config dictates.
    pub fn validate_shapes(&self, config: &GkrConfig) -> Result<()> {
        config.validate()?;
        if self.layers.len() != config.layer_count() {
            return Err(GkrError::shape(
                "gkr params",
                format!("{} layers in config", config.layer_count()),
                format!("{} layers in params", self.layers.len()),
            ));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let k = i + 1;
            let f_in = config.layer_input_dim(k);
            let f_out = config.layer_dims[i];
            let expect = |name: &'static str, m: &Matrix, rows: usize, cols: usize| {
                if m.rows() != rows || m.cols() != cols {
                    Err(GkrError::shape(
                        name,
                        format!("expected {rows}x{cols}"),
                        format!("got {}", m.shape_string()),
                    ))
                } else {
                    Ok(())
                }
            };
            expect("w_mess", &layer.w_mess, f_in, f_out)?;
            expect("w_peri", &layer.w_peri, 2 * f_out, f_out)?;
            expect("w_cen", &layer.w_cen, 2 * f_out, f_out)?;
        }
        self.readout.validate()?;
        if self.readout.input_dim() != config.readout_input_dim() {
            return Err(GkrError::shape(
                "readout",
                format!("expected input {}", config.readout_input_dim()),
                format!("got {}", self.readout.input_dim()),
            ));
        }
        if self.readout.output_dim() != 1 {
            return Err(GkrError::shape(
                "readout",
                "scalar output",
                format!("output dim {}", self.readout.output_dim()),
            ));
        }
        Ok(())
    }

    pub fn register(&self, tape: &mut Tape) -> RegisteredGkr {
        let layers = self
            .layers
            .iter()
            .map(|l| RegisteredGkrLayer {
                w_mess: tape.matrix_param(&l.w_mess),
                b_mess: l.b_mess.as_ref().map(|b| tape.vector_param(b)),
                w_peri: tape.matrix_param(&l.w_peri),
                b_peri: l.b_peri.as_ref().map(|b| tape.vector_param(b)),
                w_cen: tape.matrix_param(&l.w_cen),
                b_cen: l.b_cen.as_ref().map(|b| tape.vector_param(b)),
            })
            .collect();
        let readout = self.readout.register(tape);
        RegisteredGkr { layers, readout }
    }
}

impl Trainable for GkrParams {
    fn buffers(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.w_mess.values());
            if let Some(b) = &l.b_mess {
                out.push(b.values());
            }
            out.push(l.w_peri.values());
            if let Some(b) = &l.b_peri {
                out.push(b.values());
            }
            out.push(l.w_cen.values());
            if let Some(b) = &l.b_cen {
                out.push(b.values());
            }
        }
        out.extend(self.readout.buffers());
        out
    }

    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(l.w_mess.values_mut());
            if let Some(b) = &mut l.b_mess {
                out.push(b.values_mut());
            }
            out.push(l.w_peri.values_mut());
            if let Some(b) = &mut l.b_peri {
                out.push(b.values_mut());
            }
            out.push(l.w_cen.values_mut());
            if let Some(b) = &mut l.b_cen {
                out.push(b.values_mut());
            }
        }
        out.extend(self.readout.buffers_mut());
        out
    }
}

pub struct RegisteredGkrLayer {
    pub w_mess: TapeMat,
    pub w_peri: TapeMat,
    pub w_cen: TapeMat,
    pub b_mess: Option<TapeVec>,
    pub b_peri: Option<TapeVec>,
    pub b_cen: Option<TapeVec>,
}

pub struct RegisteredGkr {
    pub layers: Vec<RegisteredGkrLayer>,
    pub readout: RegisteredMlp,
}

/// The D+1 node features after `layer` rounds of message passing.
/// `peripheral[d]` corresponds to feature dimension d.
pub struct GraphState {
    pub central: TapeVec,
    pub peripheral: Vec<TapeVec>,
    pub layer: usize,
}

impl GraphState {
    pub fn node_dim(&self) -> usize {
        self.central.dim()
    }
}

/// Assemble the initial graph from a feature pair already on the tape.
pub fn build_graph(
    tape: &mut Tape,
    fx: TapeVec,
    fy: TapeVec,
    init: CentralInit,
) -> Result<GraphState> {
    if fx.dim() != fy.dim() {
        return Err(GkrError::shape(
            "build_graph",
            format!("fx dim {}", fx.dim()),
            format!("fy dim {}", fy.dim()),
        ));
    }
    let d = fx.dim();
    let mut peripheral = Vec::with_capacity(d);
    for i in 0..d {
        let x = tape.slice(fx, i, 1)?;
        let y = tape.slice(fy, i, 1)?;
        peripheral.push(tape.concat(x, y));
    }
    let central = match init {
        CentralInit::Const(c) => {
            tape.vector_input(&Vector::new(vec![c; NODE_INPUT_DIM]))
        }
        CentralInit::MeanPool => tape.pool(&peripheral, PoolMode::Mean)?,
        CentralInit::MaxPool => tape.pool(&peripheral, PoolMode::Max)?,
    };
    Ok(GraphState {
        central,
        peripheral,
        layer: 0,
    })
}

/// One round of message passing.
pub fn gkr_layer(
    tape: &mut Tape,
    state: &GraphState,
    layer: &RegisteredGkrLayer,
    aggregator: Aggregator,
) -> Result<GraphState> {
    let transform = |tape: &mut Tape, w: TapeMat, b: Option<TapeVec>, h: TapeVec| -> Result<TapeVec> {
        let mut z = tape.linear(w, h)?;
        if let Some(b) = b {
            z = tape.add(z, b)?;
        }
        Ok(tape.relu(z))
    };

    let mut messages = Vec::with_capacity(state.peripheral.len());
    for &h_d in &state.peripheral {
        messages.push(transform(tape, layer.w_mess, layer.b_mess, h_d)?);
    }
    let m_c = transform(tape, layer.w_mess, layer.b_mess, state.central)?;

    let mut peripheral = Vec::with_capacity(messages.len());
    for &m_d in &messages {
        let fused = tape.concat(m_d, m_c);
        peripheral.push(transform(tape, layer.w_peri, layer.b_peri, fused)?);
    }

    let aggregated = tape.pool(&messages, aggregator.pool_mode())?;
    let fused_c = tape.concat(m_c, aggregated);
    let central = transform(tape, layer.w_cen, layer.b_cen, fused_c)?;

    let out = GraphState {
        central,
        peripheral,
        layer: state.layer + 1,
    };
    let f_k = layer.w_mess.cols();
    assert!(
        out.central.dim() == f_k && out.peripheral.iter().all(|p| p.dim() == f_k),
        "node dims after layer {} must all be {f_k}",
        out.layer
    );
    debug_assert!(
        out.peripheral
            .iter()
            .chain(std::iter::once(&out.central))
            .all(|&v| tape.values(v).iter().all(|&x| x >= 0.0)),
        "ReLU outputs must be nonnegative"
    );
    Ok(out)
}

/// Concatenate [h_c || h_1 || ... || h_D] and apply the readout MLP.
/// Returns the pre-sigmoid logit.
pub fn readout(tape: &mut Tape, state: &GraphState, mlp: &RegisteredMlp) -> Result<TapeScalar> {
    let mut parts = Vec::with_capacity(state.peripheral.len() + 1);
    parts.push(state.central);
    parts.extend_from_slice(&state.peripheral);
    let stacked = tape.concat_all(&parts)?;
    let out = mlp.forward(tape, stacked)?;
    tape.as_scalar(out)
}

/// Full forward pass on an existing tape, feature pair already registered.
pub fn gkr_logit(
    tape: &mut Tape,
    config: &GkrConfig,
    reg: &RegisteredGkr,
    fx: TapeVec,
    fy: TapeVec,
) -> Result<TapeScalar> {
    if fx.dim() != config.feature_dim {
        return Err(GkrError::shape(
            "gkr_logit",
            format!("config feature_dim {}", config.feature_dim),
            format!("input dim {}", fx.dim()),
        ));
    }
    let mut state = build_graph(tape, fx, fy, config.central_init)?;
    for layer in &reg.layers {
        state = gkr_layer(tape, &state, layer, config.aggregator)?;
    }
    readout(tape, &state, &reg.readout)
}

/// Kin probability for one pair: `sigmoid(logit)`. Always in (0, 1).
pub fn forward(
    config: &GkrConfig,
    params: &GkrParams,
    fx: &Vector,
    fy: &Vector,
) -> Result<f64> {
    let mut tape = Tape::new();
    let reg = params.register(&mut tape);
    let fx = tape.vector_input(fx);
    let fy = tape.vector_input(fy);
    let logit = gkr_logit(&mut tape, config, &reg, fx, fy)?;
    Ok(sigmoid(tape.scalar_value(logit)))
}

/// Class-balanced binary cross-entropy over scored samples: the positive
/// terms are averaged over the positive count, the negative terms over the
/// negative count. A single-class batch contributes only its own term.
pub fn balanced_bce(tape: &mut Tape, scored: &[(TapeScalar, bool)]) -> Result<TapeScalar> {
    if scored.is_empty() {
        return Err(GkrError::usage("balanced_bce: empty batch"));
    }
    let n_pos = scored.iter().filter(|(_, y)| *y).count();
    let n_neg = scored.len() - n_pos;
    let mut terms = Vec::with_capacity(scored.len());
    for &(logit, label) in scored {
        let loss = tape.bce_with_logit(logit, label);
        let weight = if label {
            1.0 / n_pos as f64
        } else {
            1.0 / n_neg as f64
        };
        terms.push((loss, weight));
    }
    Ok(tape.scalar_affine(&terms, 0.0))
}

/// Balanced loss of a batch of raw feature pairs under one parameter set.
pub fn batch_loss(
    tape: &mut Tape,
    config: &GkrConfig,
    reg: &RegisteredGkr,
    batch: &[(TapeVec, TapeVec, bool)],
) -> Result<TapeScalar> {
    if batch.is_empty() {
        return Err(GkrError::usage("batch_loss: empty batch"));
    }
    let mut scored = Vec::with_capacity(batch.len());
    for &(fx, fy, label) in batch {
        let logit = gkr_logit(tape, config, reg, fx, fy)?;
        scored.push((logit, label));
    }
    balanced_bce(tape, &scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_of_ones(rows: usize) -> Matrix {
        Matrix::new(rows, 1, vec![1.0; rows])
    }

    #[test]
    fn build_graph_places_pair_values_and_central_init() {
        let fx = Vector::new(vec![1.0, 2.0]);
        let fy = Vector::new(vec![3.0, 4.0]);
        for (init, expect) in [
            (CentralInit::Const(0.5), vec![0.5, 0.5]),
            (CentralInit::MeanPool, vec![1.5, 3.5]),
            (CentralInit::MaxPool, vec![2.0, 4.0]),
        ] {
            let mut tape = Tape::new();
            let tx = tape.vector_input(&fx);
            let ty = tape.vector_input(&fy);
            let g = build_graph(&mut tape, tx, ty, init).unwrap();
            assert_eq!(tape.values(g.peripheral[0]), &[1.0, 3.0]);
            assert_eq!(tape.values(g.peripheral[1]), &[2.0, 4.0]);
            assert_eq!(tape.values(g.central), expect.as_slice());
            assert_eq!(g.layer, 0);
        }
    }

    #[test]
    fn layer_matches_hand_computed_star_update() {
        // D=2, F_in=2, F_out=1, all transform columns of ones, max aggregator.
        let mut tape = Tape::new();
        let params = GkrLayerParams {
            w_mess: col_of_ones(2),
            w_peri: col_of_ones(2),
            w_cen: col_of_ones(2),
            b_mess: None,
            b_peri: None,
            b_cen: None,
        };
        let reg = RegisteredGkrLayer {
            w_mess: tape.matrix_param(&params.w_mess),
            w_peri: tape.matrix_param(&params.w_peri),
            w_cen: tape.matrix_param(&params.w_cen),
            b_mess: None,
            b_peri: None,
            b_cen: None,
        };
        let h1 = tape.vector_input(&Vector::new(vec![1.0, 0.0]));
        let h2 = tape.vector_input(&Vector::new(vec![0.0, 2.0]));
        let hc = tape.vector_input(&Vector::new(vec![0.5, 0.5]));
        let state = GraphState {
            central: hc,
            peripheral: vec![h1, h2],
            layer: 0,
        };
        let next = gkr_layer(&mut tape, &state, &reg, Aggregator::Max).unwrap();
        // m_1 = 1, m_2 = 2, m_c = 1; h_1' = 1+1 = 2, h_2' = 2+1 = 3;
        // a = max(1, 2) = 2; h_c' = 1+2 = 3.
        assert_eq!(tape.values(next.peripheral[0]), &[2.0]);
        assert_eq!(tape.values(next.peripheral[1]), &[3.0]);
        assert_eq!(tape.values(next.central), &[3.0]);
        assert_eq!(next.layer, 1);
    }

    #[test]
    fn zero_weights_produce_zero_nodes() {
        let config = GkrConfig::new(3, vec![4, 2]);
        let mut params = init_params(&config, 9).unwrap();
        for l in &mut params.layers {
            l.w_mess.values_mut().fill(0.0);
            l.w_peri.values_mut().fill(0.0);
            l.w_cen.values_mut().fill(0.0);
        }
        let mut tape = Tape::new();
        let reg = params.register(&mut tape);
        let fx = tape.vector_input(&Vector::new(vec![0.3, -0.4, 0.9]));
        let fy = tape.vector_input(&Vector::new(vec![0.1, 0.2, -0.8]));
        let mut state = build_graph(&mut tape, fx, fy, config.central_init).unwrap();
        for layer in &reg.layers {
            state = gkr_layer(&mut tape, &state, layer, config.aggregator).unwrap();
            assert!(tape.values(state.central).iter().all(|&v| v == 0.0));
            for &p in &state.peripheral {
                assert!(tape.values(p).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn init_params_shapes_follow_config() {
        let config = GkrConfig::new(512, vec![512, 4]);
        let params = init_params(&config, 7).unwrap();
        assert_eq!(params.layers[0].w_mess.shape_string(), "2x512");
        assert_eq!(params.layers[0].w_peri.shape_string(), "1024x512");
        assert_eq!(params.layers[0].w_cen.shape_string(), "1024x512");
        assert_eq!(params.layers[1].w_mess.shape_string(), "512x4");
        assert_eq!(params.layers[1].w_peri.shape_string(), "8x4");
        assert_eq!(params.layers[1].w_cen.shape_string(), "8x4");
        assert_eq!(params.readout.input_dim(), 2052);
        params.validate_shapes(&config).unwrap();
    }

    #[test]
    fn init_params_is_deterministic_and_bounded() {
        let config = GkrConfig::new(6, vec![5, 3]);
        let a = init_params(&config, 42).unwrap();
        let b = init_params(&config, 42).unwrap();
        assert_eq!(a, b);
        for (layer, cfg_k) in a.layers.iter().zip(1..) {
            let bound = 1.0 / (config.layer_input_dim(cfg_k) as f64).sqrt();
            assert!(layer.w_mess.values().iter().all(|v| v.abs() <= bound));
            let bound2 = 1.0 / ((2 * config.layer_dims[cfg_k - 1]) as f64).sqrt();
            assert!(layer.w_peri.values().iter().all(|v| v.abs() <= bound2));
            assert!(layer.w_cen.values().iter().all(|v| v.abs() <= bound2));
        }
    }

    #[test]
    fn forward_gives_half_for_zero_readout() {
        let config = GkrConfig::new(4, vec![3]);
        let mut params = init_params(&config, 3).unwrap();
        // Zeroed readout forces logit 0 regardless of node features.
        let lens = params.readout.buffer_lens();
        for (i, buf) in params.readout.buffers_mut().into_iter().enumerate() {
            assert_eq!(buf.len(), lens[i]);
            buf.fill(0.0);
        }
        let fx = Vector::new(vec![0.5, -0.5, 0.25, 1.0]);
        let fy = Vector::new(vec![0.1, 0.9, -0.3, 0.0]);
        let p = forward(&config, &params, &fx, &fy).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn forward_probability_is_strictly_inside_unit_interval() {
        let config = GkrConfig::new(5, vec![4, 2]);
        let params = init_params(&config, 11).unwrap();
        let fx = Vector::new(vec![100.0, -3.0, 0.0, 2.0, -50.0]);
        let fy = Vector::new(vec![-100.0, 3.0, 1.0, -2.0, 50.0]);
        let p = forward(&config, &params, &fx, &fy).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn permuting_dimensions_permutes_peripheral_and_fixes_central() {
        let config = GkrConfig {
            feature_dim: 5,
            layer_dims: vec![3, 2],
            central_init: CentralInit::Const(0.5),
            aggregator: Aggregator::Max,
            readout_hidden: None,
            use_bias: false,
        };
        let params = init_params(&config, 21).unwrap();
        let fx = Vector::new(vec![0.7, -0.2, 0.4, 0.0, -0.9]);
        let fy = Vector::new(vec![-0.5, 0.3, 0.8, 0.1, 0.2]);
        let perm = [3usize, 0, 4, 1, 2];

        let run = |fx: &Vector, fy: &Vector| {
            let mut tape = Tape::new();
            let reg = params.register(&mut tape);
            let tx = tape.vector_input(fx);
            let ty = tape.vector_input(fy);
            let mut state = build_graph(&mut tape, tx, ty, config.central_init).unwrap();
            for layer in &reg.layers {
                state = gkr_layer(&mut tape, &state, layer, config.aggregator).unwrap();
            }
            let peri: Vec<Vec<f64>> = state
                .peripheral
                .iter()
                .map(|&p| tape.values(p).to_vec())
                .collect();
            (peri, tape.values(state.central).to_vec())
        };

        let (peri, central) = run(&fx, &fy);
        let pfx = Vector::new(perm.iter().map(|&i| fx.get(i)).collect());
        let pfy = Vector::new(perm.iter().map(|&i| fy.get(i)).collect());
        let (peri_p, central_p) = run(&pfx, &pfy);

        for (new_pos, &old_pos) in perm.iter().enumerate() {
            assert_eq!(peri_p[new_pos], peri[old_pos]);
        }
        assert_eq!(central, central_p);
    }

    #[test]
    fn batch_loss_for_zero_logits_is_two_ln_two() {
        let config = GkrConfig::new(2, vec![2]);
        let mut params = init_params(&config, 5).unwrap();
        for buf in params.readout.buffers_mut() {
            buf.fill(0.0);
        }
        let mut tape = Tape::new();
        let reg = params.register(&mut tape);
        let fx = tape.vector_input(&Vector::new(vec![0.2, 0.4]));
        let fy = tape.vector_input(&Vector::new(vec![0.6, 0.8]));
        let loss = batch_loss(
            &mut tape,
            &config,
            &reg,
            &[(fx, fy, true), (fx, fy, false)],
        )
        .unwrap();
        let expect = 2.0 * std::f64::consts::LN_2;
        assert!((tape.scalar_value(loss) - expect).abs() < 1e-15);
    }

    #[test]
    fn duplicating_batch_members_leaves_loss_unchanged() {
        let config = GkrConfig::new(3, vec![3]);
        let params = init_params(&config, 17).unwrap();
        let pairs = [
            (vec![0.1, 0.5, -0.4], vec![0.2, 0.3, 0.6], true),
            (vec![-0.7, 0.2, 0.9], vec![0.4, -0.1, 0.3], false),
            (vec![0.3, 0.3, 0.3], vec![-0.2, 0.8, 0.1], true),
        ];
        let loss_of = |reps: usize| {
            let mut tape = Tape::new();
            let reg = params.register(&mut tape);
            let mut batch = Vec::new();
            for _ in 0..reps {
                for (x, y, l) in &pairs {
                    let fx = tape.vector_input(&Vector::new(x.clone()));
                    let fy = tape.vector_input(&Vector::new(y.clone()));
                    batch.push((fx, fy, *l));
                }
            }
            let loss = batch_loss(&mut tape, &config, &reg, &batch).unwrap();
            tape.scalar_value(loss)
        };
        let once = loss_of(1);
        let thrice = loss_of(3);
        assert!((once - thrice).abs() < 1e-12, "{once} vs {thrice}");
    }

    #[test]
    fn confident_correct_batch_has_vanishing_loss() {
        let mut tape = Tape::new();
        let hi = tape.vector_input(&Vector::scalar(50.0));
        let hi = tape.as_scalar(hi).unwrap();
        let lo = tape.vector_input(&Vector::scalar(-50.0));
        let lo = tape.as_scalar(lo).unwrap();
        let loss = balanced_bce(&mut tape, &[(hi, true), (lo, false)]).unwrap();
        let v = tape.scalar_value(loss);
        assert!(v.is_finite() && v < 1e-19, "{v}");
    }

    #[test]
    fn single_class_batch_uses_only_its_term() {
        let mut tape = Tape::new();
        let z = tape.vector_input(&Vector::scalar(0.0));
        let z = tape.as_scalar(z).unwrap();
        let loss = balanced_bce(&mut tape, &[(z, true), (z, true)]).unwrap();
        assert!((tape.scalar_value(loss) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn max_aggregator_dominates_messages() {
        let config = GkrConfig::new(6, vec![4]);
        let params = init_params(&config, 33).unwrap();
        let mut tape = Tape::new();
        let reg = params.register(&mut tape);
        let fx = tape.vector_input(&Vector::new(vec![0.4, -0.6, 0.2, 0.8, -0.1, 0.5]));
        let fy = tape.vector_input(&Vector::new(vec![-0.3, 0.7, 0.9, -0.2, 0.6, 0.0]));
        let state = build_graph(&mut tape, fx, fy, config.central_init).unwrap();
        let layer = &reg.layers[0];

        // Recompute the messages the layer derives, then compare to the pool.
        let mut messages = Vec::new();
        for &h in &state.peripheral {
            let z = tape.linear(layer.w_mess, h).unwrap();
            messages.push(tape.relu(z));
        }
        let pooled = tape.pool(&messages, PoolMode::Max).unwrap();
        let pooled_vals = tape.values(pooled).to_vec();
        for &m in &messages {
            for (j, &mv) in tape.values(m).iter().enumerate() {
                assert!(pooled_vals[j] >= mv);
            }
        }
    }
}

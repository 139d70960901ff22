//! Wengert tape: reverse-mode differentiation by recording every primitive
//! application in forward order and replaying adjoints in exact reverse.
//!
//! Values live in an arena of flat `f64` buffers. Handles (`TapeVec`,
//! `TapeScalar`, `TapeMat`) carry the buffer id plus enough shape to make the
//! op builders type-safe, and a brand so that handles from one tape cannot be
//! replayed against another.

use std::sync::atomic::{AtomicU32, Ordering};

use crate::error::{GkrError, Result};

use super::tensor::{Matrix, Vector};

static NEXT_BRAND: AtomicU32 = AtomicU32::new(1);

/// Handle to a vector value recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct TapeVec {
    brand: u32,
    id: usize,
    dim: usize,
}

impl TapeVec {
    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Handle to a scalar value (a length-1 buffer) recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct TapeScalar {
    brand: u32,
    id: usize,
}

/// Handle to a matrix parameter recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct TapeMat {
    brand: u32,
    id: usize,
    rows: usize,
    cols: usize,
}

impl TapeMat {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

/// Pooling flavor for [`Tape::pool`]. Max routes each coordinate's gradient
/// to the first input attaining the maximum; mean splits it evenly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolMode {
    Max,
    Mean,
}

enum Op {
    Leaf,
    /// out[j] = sum_i W[i,j] * v[i]  (W applied transposed, W is rows x cols)
    Linear {
        w: usize,
        rows: usize,
        cols: usize,
        v: usize,
    },
    Relu {
        x: usize,
    },
    Concat {
        parts: Vec<(usize, usize)>, // (id, len)
    },
    Slice {
        x: usize,
        start: usize,
    },
    Add {
        a: usize,
        b: usize,
    },
    Sub {
        a: usize,
        b: usize,
    },
    PoolMax {
        xs: Vec<usize>,
        argmax: Vec<u32>,
    },
    PoolMean {
        xs: Vec<usize>,
    },
    Dot {
        a: usize,
        b: usize,
    },
    NormL2 {
        x: usize,
    },
    Cosine {
        a: usize,
        b: usize,
    },
    /// out = sum_i coeff_i * s_i + bias; the bias needs no adjoint record.
    ScalarAffine {
        terms: Vec<(usize, f64)>,
    },
    ScalarMul {
        a: usize,
        b: usize,
    },
    ScalarExp {
        x: usize,
    },
    /// Stable binary cross-entropy from the logit; label is 0.0 or 1.0.
    BceWithLogit {
        z: usize,
        label: f64,
    },
}

struct Node {
    val: Vec<f64>,
    op: Op,
    /// Index into the parameter registry when this leaf is trainable.
    param: Option<usize>,
}

/// Gradients for every registered parameter of a tape, in registration order.
/// Parameters the loss does not depend on get all-zero buffers.
pub struct Gradients {
    bufs: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn len(&self) -> usize {
        self.bufs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bufs.is_empty()
    }

    pub fn get(&self, param: usize) -> &[f64] {
        &self.bufs[param]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.bufs.iter().map(|b| b.as_slice())
    }
}

/// Recording tape. One forward pass owns the tape exclusively; `backward`
/// only reads it, so several adjoint replays against the same forward pass
/// are allowed.
pub struct Tape {
    brand: u32,
    nodes: Vec<Node>,
    param_lens: Vec<usize>,
    param_ids: Vec<usize>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            brand: NEXT_BRAND.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            param_lens: Vec::new(),
            param_ids: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn param_count(&self) -> usize {
        self.param_lens.len()
    }

    fn push(&mut self, val: Vec<f64>, op: Op) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            val,
            op,
            param: None,
        });
        id
    }

    fn check(&self, brand: u32) {
        assert_eq!(brand, self.brand, "tape handle used with a different tape");
    }

    // ── Leaves ──────────────────────────────────────────────────────────

    /// Snapshot a matrix as a trainable parameter. Gradient index follows
    /// registration order across all `*_param` calls.
    pub fn matrix_param(&mut self, m: &Matrix) -> TapeMat {
        let id = self.push(m.values().to_vec(), Op::Leaf);
        let pidx = self.param_lens.len();
        self.nodes[id].param = Some(pidx);
        self.param_lens.push(m.values().len());
        self.param_ids.push(id);
        TapeMat {
            brand: self.brand,
            id,
            rows: m.rows(),
            cols: m.cols(),
        }
    }

    /// Snapshot a vector as a trainable parameter.
    pub fn vector_param(&mut self, v: &Vector) -> TapeVec {
        let id = self.push(v.values().to_vec(), Op::Leaf);
        let pidx = self.param_lens.len();
        self.nodes[id].param = Some(pidx);
        self.param_lens.push(v.dim());
        self.param_ids.push(id);
        TapeVec {
            brand: self.brand,
            id,
            dim: v.dim(),
        }
    }

    /// Snapshot a length-1 vector as a trainable scalar parameter.
    pub fn scalar_param(&mut self, v: &Vector) -> Result<TapeScalar> {
        if v.dim() != 1 {
            return Err(GkrError::shape(
                "scalar_param",
                "dim 1",
                format!("dim {}", v.dim()),
            ));
        }
        let tv = self.vector_param(v);
        Ok(TapeScalar {
            brand: tv.brand,
            id: tv.id,
        })
    }

    /// Record a non-trainable input vector.
    pub fn vector_input(&mut self, v: &Vector) -> TapeVec {
        let id = self.push(v.values().to_vec(), Op::Leaf);
        TapeVec {
            brand: self.brand,
            id,
            dim: v.dim(),
        }
    }

    // ── Reads ───────────────────────────────────────────────────────────

    pub fn values(&self, v: TapeVec) -> &[f64] {
        self.check(v.brand);
        &self.nodes[v.id].val
    }

    pub fn vector_value(&self, v: TapeVec) -> Vector {
        Vector::new(self.values(v).to_vec())
    }

    pub fn scalar_value(&self, s: TapeScalar) -> f64 {
        self.check(s.brand);
        self.nodes[s.id].val[0]
    }

    /// Reinterpret a length-1 vector as a scalar handle.
    pub fn as_scalar(&self, v: TapeVec) -> Result<TapeScalar> {
        self.check(v.brand);
        if v.dim != 1 {
            return Err(GkrError::shape(
                "as_scalar",
                "dim 1",
                format!("dim {}", v.dim),
            ));
        }
        Ok(TapeScalar {
            brand: v.brand,
            id: v.id,
        })
    }

    // ── Vector ops ──────────────────────────────────────────────────────

    /// Apply a matrix transposed: `out[j] = sum_i W[i,j] * v[i]`.
    pub fn linear(&mut self, w: TapeMat, v: TapeVec) -> Result<TapeVec> {
        self.check(w.brand);
        self.check(v.brand);
        if w.rows != v.dim {
            return Err(GkrError::shape(
                "linear",
                format!("matrix {}x{}", w.rows, w.cols),
                format!("vector dim {}", v.dim),
            ));
        }
        let (p, q) = (w.rows, w.cols);
        let mut out = vec![0.0; q];
        {
            let wv = &self.nodes[w.id].val;
            let vv = &self.nodes[v.id].val;
            for i in 0..p {
                let vi = vv[i];
                let row = &wv[i * q..(i + 1) * q];
                for j in 0..q {
                    out[j] += row[j] * vi;
                }
            }
        }
        let id = self.push(
            out,
            Op::Linear {
                w: w.id,
                rows: p,
                cols: q,
                v: v.id,
            },
        );
        Ok(TapeVec {
            brand: self.brand,
            id,
            dim: q,
        })
    }

    pub fn relu(&mut self, x: TapeVec) -> TapeVec {
        self.check(x.brand);
        let out: Vec<f64> = self.nodes[x.id].val.iter().map(|&v| v.max(0.0)).collect();
        let id = self.push(out, Op::Relu { x: x.id });
        TapeVec {
            brand: self.brand,
            id,
            dim: x.dim,
        }
    }

    pub fn concat(&mut self, a: TapeVec, b: TapeVec) -> TapeVec {
        self.concat_all(&[a, b])
            .expect("concat of two vectors cannot fail")
    }

    pub fn concat_all(&mut self, parts: &[TapeVec]) -> Result<TapeVec> {
        if parts.is_empty() {
            return Err(GkrError::usage("concat: empty part list"));
        }
        let mut out = Vec::with_capacity(parts.iter().map(|p| p.dim).sum());
        let mut meta = Vec::with_capacity(parts.len());
        for p in parts {
            self.check(p.brand);
            out.extend_from_slice(&self.nodes[p.id].val);
            meta.push((p.id, p.dim));
        }
        let dim = out.len();
        let id = self.push(out, Op::Concat { parts: meta });
        Ok(TapeVec {
            brand: self.brand,
            id,
            dim,
        })
    }

    pub fn slice(&mut self, x: TapeVec, start: usize, len: usize) -> Result<TapeVec> {
        self.check(x.brand);
        if len == 0 || start + len > x.dim {
            return Err(GkrError::usage(format!(
                "slice: range {start}..{} out of bounds for dim {}",
                start + len,
                x.dim
            )));
        }
        let out = self.nodes[x.id].val[start..start + len].to_vec();
        let id = self.push(out, Op::Slice { x: x.id, start });
        Ok(TapeVec {
            brand: self.brand,
            id,
            dim: len,
        })
    }

    pub fn add(&mut self, a: TapeVec, b: TapeVec) -> Result<TapeVec> {
        self.binary_elementwise("add", a, b, |x, y| x + y, |a_id, b_id| Op::Add {
            a: a_id,
            b: b_id,
        })
    }

    pub fn sub(&mut self, a: TapeVec, b: TapeVec) -> Result<TapeVec> {
        self.binary_elementwise("sub", a, b, |x, y| x - y, |a_id, b_id| Op::Sub {
            a: a_id,
            b: b_id,
        })
    }

    fn binary_elementwise(
        &mut self,
        name: &'static str,
        a: TapeVec,
        b: TapeVec,
        f: impl Fn(f64, f64) -> f64,
        op: impl Fn(usize, usize) -> Op,
    ) -> Result<TapeVec> {
        self.check(a.brand);
        self.check(b.brand);
        if a.dim != b.dim {
            return Err(GkrError::shape(
                name,
                format!("dim {}", a.dim),
                format!("dim {}", b.dim),
            ));
        }
        let out: Vec<f64> = self.nodes[a.id]
            .val
            .iter()
            .zip(&self.nodes[b.id].val)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let id = self.push(out, op(a.id, b.id));
        Ok(TapeVec {
            brand: self.brand,
            id,
            dim: a.dim,
        })
    }

    /// Elementwise max or mean over a non-empty list of same-dim vectors.
    pub fn pool(&mut self, xs: &[TapeVec], mode: PoolMode) -> Result<TapeVec> {
        if xs.is_empty() {
            return Err(GkrError::usage("pool: empty input list"));
        }
        let dim = xs[0].dim;
        for x in xs {
            self.check(x.brand);
            if x.dim != dim {
                return Err(GkrError::shape(
                    "pool",
                    format!("dim {dim}"),
                    format!("dim {}", x.dim),
                ));
            }
        }
        let ids: Vec<usize> = xs.iter().map(|x| x.id).collect();
        let (out, op) = match mode {
            PoolMode::Max => {
                let mut out = self.nodes[ids[0]].val.clone();
                let mut argmax = vec![0u32; dim];
                for (k, &xid) in ids.iter().enumerate().skip(1) {
                    let xv = &self.nodes[xid].val;
                    for j in 0..dim {
                        if xv[j] > out[j] {
                            out[j] = xv[j];
                            argmax[j] = k as u32;
                        }
                    }
                }
                (out, Op::PoolMax { xs: ids, argmax })
            }
            PoolMode::Mean => {
                let inv = 1.0 / ids.len() as f64;
                let mut out = vec![0.0; dim];
                for &xid in &ids {
                    let xv = &self.nodes[xid].val;
                    for j in 0..dim {
                        out[j] += xv[j];
                    }
                }
                for o in &mut out {
                    *o *= inv;
                }
                (out, Op::PoolMean { xs: ids })
            }
        };
        let id = self.push(out, op);
        Ok(TapeVec {
            brand: self.brand,
            id,
            dim,
        })
    }

    // ── Scalar ops ──────────────────────────────────────────────────────

    pub fn dot(&mut self, a: TapeVec, b: TapeVec) -> Result<TapeScalar> {
        self.check(a.brand);
        self.check(b.brand);
        if a.dim != b.dim {
            return Err(GkrError::shape(
                "dot",
                format!("dim {}", a.dim),
                format!("dim {}", b.dim),
            ));
        }
        let s: f64 = self.nodes[a.id]
            .val
            .iter()
            .zip(&self.nodes[b.id].val)
            .map(|(&x, &y)| x * y)
            .sum();
        let id = self.push(vec![s], Op::Dot { a: a.id, b: b.id });
        Ok(TapeScalar {
            brand: self.brand,
            id,
        })
    }

    /// Euclidean norm. The adjoint at the origin is defined as zero.
    pub fn norm_l2(&mut self, x: TapeVec) -> TapeScalar {
        self.check(x.brand);
        let n = self.nodes[x.id]
            .val
            .iter()
            .map(|&v| v * v)
            .sum::<f64>()
            .sqrt();
        let id = self.push(vec![n], Op::NormL2 { x: x.id });
        TapeScalar {
            brand: self.brand,
            id,
        }
    }

    /// Cosine similarity of two non-zero vectors.
    pub fn cosine(&mut self, a: TapeVec, b: TapeVec) -> Result<TapeScalar> {
        self.check(a.brand);
        self.check(b.brand);
        if a.dim != b.dim {
            return Err(GkrError::shape(
                "cosine",
                format!("dim {}", a.dim),
                format!("dim {}", b.dim),
            ));
        }
        let av = &self.nodes[a.id].val;
        let bv = &self.nodes[b.id].val;
        let na = av.iter().map(|&v| v * v).sum::<f64>().sqrt();
        let nb = bv.iter().map(|&v| v * v).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            return Err(GkrError::ZeroNorm { op: "cosine" });
        }
        let dot: f64 = av.iter().zip(bv).map(|(&x, &y)| x * y).sum();
        let id = self.push(vec![dot / (na * nb)], Op::Cosine { a: a.id, b: b.id });
        Ok(TapeScalar {
            brand: self.brand,
            id,
        })
    }

    /// `sum_i coeff_i * term_i + bias`.
    pub fn scalar_affine(&mut self, terms: &[(TapeScalar, f64)], bias: f64) -> TapeScalar {
        let mut s = bias;
        let mut meta = Vec::with_capacity(terms.len());
        for (t, c) in terms {
            self.check(t.brand);
            s += c * self.nodes[t.id].val[0];
            meta.push((t.id, *c));
        }
        let id = self.push(vec![s], Op::ScalarAffine { terms: meta });
        TapeScalar {
            brand: self.brand,
            id,
        }
    }

    pub fn scalar_mul(&mut self, a: TapeScalar, b: TapeScalar) -> TapeScalar {
        self.check(a.brand);
        self.check(b.brand);
        let s = self.nodes[a.id].val[0] * self.nodes[b.id].val[0];
        let id = self.push(vec![s], Op::ScalarMul { a: a.id, b: b.id });
        TapeScalar {
            brand: self.brand,
            id,
        }
    }

    pub fn scalar_exp(&mut self, x: TapeScalar) -> TapeScalar {
        self.check(x.brand);
        let s = self.nodes[x.id].val[0].exp();
        let id = self.push(vec![s], Op::ScalarExp { x: x.id });
        TapeScalar {
            brand: self.brand,
            id,
        }
    }

    /// Numerically stable `-[y log σ(z) + (1-y) log(1-σ(z))]` computed
    /// directly from the logit: `max(z,0) - z*y + ln(1 + exp(-|z|))`.
    pub fn bce_with_logit(&mut self, z: TapeScalar, label: bool) -> TapeScalar {
        self.check(z.brand);
        let zv = self.nodes[z.id].val[0];
        let y = if label { 1.0 } else { 0.0 };
        let loss = zv.max(0.0) - zv * y + (-zv.abs()).exp().ln_1p();
        let id = self.push(vec![loss], Op::BceWithLogit { z: z.id, label: y });
        TapeScalar {
            brand: self.brand,
            id,
        }
    }

    // ── Backward ────────────────────────────────────────────────────────

    /// Reverse accumulation from `loss` back to every registered parameter.
    /// Adjoint buffers start at zero; intermediates release theirs as soon as
    /// they have been propagated.
    pub fn backward(&self, loss: TapeScalar) -> Result<Gradients> {
        if loss.brand != self.brand || loss.id >= self.nodes.len() {
            return Err(GkrError::usage(
                "backward: loss is not an output of this tape",
            ));
        }
        let mut grads: Vec<Vec<f64>> = self.param_lens.iter().map(|&l| vec![0.0; l]).collect();
        let mut adj: Vec<Option<Vec<f64>>> = (0..=loss.id).map(|_| None).collect();
        adj[loss.id] = Some(vec![1.0]);

        for i in (0..=loss.id).rev() {
            let Some(a) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            if let Some(pidx) = node.param {
                let g = &mut grads[pidx];
                for (gi, ai) in g.iter_mut().zip(&a) {
                    *gi += ai;
                }
                continue;
            }
            match &node.op {
                Op::Leaf => {}
                Op::Linear { w, rows, cols, v } => {
                    let (p, q) = (*rows, *cols);
                    let vv = &self.nodes[*v].val;
                    let wv = &self.nodes[*w].val;
                    {
                        let aw = Self::adjoint_buf(&mut adj, *w, p * q);
                        for i in 0..p {
                            let vi = vv[i];
                            let row = &mut aw[i * q..(i + 1) * q];
                            for j in 0..q {
                                row[j] += vi * a[j];
                            }
                        }
                    }
                    let av = Self::adjoint_buf(&mut adj, *v, p);
                    for i in 0..p {
                        let row = &wv[i * q..(i + 1) * q];
                        let mut s = 0.0;
                        for j in 0..q {
                            s += row[j] * a[j];
                        }
                        av[i] += s;
                    }
                }
                Op::Relu { x } => {
                    let xv = &self.nodes[*x].val;
                    let ax = Self::adjoint_buf(&mut adj, *x, xv.len());
                    for j in 0..xv.len() {
                        if xv[j] > 0.0 {
                            ax[j] += a[j];
                        }
                    }
                }
                Op::Concat { parts } => {
                    let mut off = 0;
                    for &(pid, len) in parts {
                        let ap = Self::adjoint_buf(&mut adj, pid, len);
                        for j in 0..len {
                            ap[j] += a[off + j];
                        }
                        off += len;
                    }
                }
                Op::Slice { x, start } => {
                    let xlen = self.nodes[*x].val.len();
                    let ax = Self::adjoint_buf(&mut adj, *x, xlen);
                    for (j, aj) in a.iter().enumerate() {
                        ax[start + j] += aj;
                    }
                }
                Op::Add { a: ia, b: ib } => {
                    let len = a.len();
                    for &src in &[*ia, *ib] {
                        let ax = Self::adjoint_buf(&mut adj, src, len);
                        for j in 0..len {
                            ax[j] += a[j];
                        }
                    }
                }
                Op::Sub { a: ia, b: ib } => {
                    let len = a.len();
                    {
                        let ax = Self::adjoint_buf(&mut adj, *ia, len);
                        for j in 0..len {
                            ax[j] += a[j];
                        }
                    }
                    let bx = Self::adjoint_buf(&mut adj, *ib, len);
                    for j in 0..len {
                        bx[j] -= a[j];
                    }
                }
                Op::PoolMax { xs, argmax } => {
                    for (j, &k) in argmax.iter().enumerate() {
                        let src = xs[k as usize];
                        let ax = Self::adjoint_buf(&mut adj, src, a.len());
                        ax[j] += a[j];
                    }
                }
                Op::PoolMean { xs } => {
                    let inv = 1.0 / xs.len() as f64;
                    for &src in xs {
                        let ax = Self::adjoint_buf(&mut adj, src, a.len());
                        for j in 0..a.len() {
                            ax[j] += a[j] * inv;
                        }
                    }
                }
                Op::Dot { a: ia, b: ib } => {
                    let s = a[0];
                    let (av_vals, bv_vals) =
                        (self.nodes[*ia].val.clone(), self.nodes[*ib].val.clone());
                    {
                        let ax = Self::adjoint_buf(&mut adj, *ia, av_vals.len());
                        for j in 0..av_vals.len() {
                            ax[j] += bv_vals[j] * s;
                        }
                    }
                    let bx = Self::adjoint_buf(&mut adj, *ib, bv_vals.len());
                    for j in 0..bv_vals.len() {
                        bx[j] += av_vals[j] * s;
                    }
                }
                Op::NormL2 { x } => {
                    let n = node.val[0];
                    if n > 0.0 {
                        let xv = &self.nodes[*x].val;
                        let s = a[0] / n;
                        let ax = Self::adjoint_buf(&mut adj, *x, xv.len());
                        for j in 0..xv.len() {
                            ax[j] += xv[j] * s;
                        }
                    }
                }
                Op::Cosine { a: ia, b: ib } => {
                    let c = node.val[0];
                    let s = a[0];
                    let av_vals = &self.nodes[*ia].val;
                    let bv_vals = &self.nodes[*ib].val;
                    let na = av_vals.iter().map(|&v| v * v).sum::<f64>().sqrt();
                    let nb = bv_vals.iter().map(|&v| v * v).sum::<f64>().sqrt();
                    let cross = 1.0 / (na * nb);
                    let ga: Vec<f64> = (0..av_vals.len())
                        .map(|j| s * (bv_vals[j] * cross - c * av_vals[j] / (na * na)))
                        .collect();
                    let gb: Vec<f64> = (0..bv_vals.len())
                        .map(|j| s * (av_vals[j] * cross - c * bv_vals[j] / (nb * nb)))
                        .collect();
                    {
                        let ax = Self::adjoint_buf(&mut adj, *ia, ga.len());
                        for j in 0..ga.len() {
                            ax[j] += ga[j];
                        }
                    }
                    let bx = Self::adjoint_buf(&mut adj, *ib, gb.len());
                    for j in 0..gb.len() {
                        bx[j] += gb[j];
                    }
                }
                Op::ScalarAffine { terms } => {
                    for &(tid, c) in terms {
                        let at = Self::adjoint_buf(&mut adj, tid, 1);
                        at[0] += c * a[0];
                    }
                }
                Op::ScalarMul { a: ia, b: ib } => {
                    let (av, bv) = (self.nodes[*ia].val[0], self.nodes[*ib].val[0]);
                    {
                        let ax = Self::adjoint_buf(&mut adj, *ia, 1);
                        ax[0] += bv * a[0];
                    }
                    let bx = Self::adjoint_buf(&mut adj, *ib, 1);
                    bx[0] += av * a[0];
                }
                Op::ScalarExp { x } => {
                    let ax = Self::adjoint_buf(&mut adj, *x, 1);
                    ax[0] += node.val[0] * a[0];
                }
                Op::BceWithLogit { z, label } => {
                    let zv = self.nodes[*z].val[0];
                    let az = Self::adjoint_buf(&mut adj, *z, 1);
                    az[0] += (sigmoid(zv) - label) * a[0];
                }
            }
        }
        Ok(Gradients { bufs: grads })
    }

    fn adjoint_buf(adj: &mut [Option<Vec<f64>>], id: usize, len: usize) -> &mut Vec<f64> {
        adj[id].get_or_insert_with(|| vec![0.0; len])
    }
}

/// Overflow-free logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

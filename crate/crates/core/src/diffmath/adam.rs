//! Adam with bias correction, operating on flat parameter buffers in the
//! same order the tape registered them.

use serde::{Deserialize, Serialize};

use crate::error::{GkrError, Result};

use super::tape::Gradients;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..AdamConfig::default()
        }
    }
}

/// First and second moment estimates per parameter plus the step counter.
pub struct AdamState {
    cfg: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, buffer_lens: &[usize]) -> Self {
        AdamState {
            cfg,
            step: 0,
            m: buffer_lens.iter().map(|&l| vec![0.0; l]).collect(),
            v: buffer_lens.iter().map(|&l| vec![0.0; l]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> AdamConfig {
        self.cfg
    }

    /// Second-moment accumulator for a parameter buffer, for inspection.
    pub fn second_moment(&self, param: usize) -> &[f64] {
        &self.v[param]
    }

    /// One update: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &Gradients) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(GkrError::shape(
                "adam_step",
                format!("{} state buffers", self.m.len()),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let c = self.cfg;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (idx, p) in params.iter_mut().enumerate() {
            let g = grads.get(idx);
            if p.len() != g.len() || p.len() != self.m[idx].len() {
                return Err(GkrError::shape(
                    "adam_step",
                    format!("param {idx} len {}", p.len()),
                    format!("grad len {} / moment len {}", g.len(), self.m[idx].len()),
                ));
            }
            let (m, v) = (&mut self.m[idx], &mut self.v[idx]);
            for j in 0..g.len() {
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= c.lr * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmath::tape::Tape;
    use crate::diffmath::tensor::Vector;

    /// Reference recurrence on plain scalars, independent of `AdamState`.
    fn scalar_adam(g: &[f64], cfg: AdamConfig, p0: f64) -> (f64, f64, f64) {
        let (mut p, mut m, mut v) = (p0, 0.0, 0.0);
        for (i, &gi) in g.iter().enumerate() {
            let t = (i + 1) as i32;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * gi;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * gi * gi;
            p -= cfg.lr * (m / (1.0 - cfg.beta1.powi(t)))
                / ((v / (1.0 - cfg.beta2.powi(t))).sqrt() + cfg.epsilon);
        }
        (p, m, v)
    }

    fn grads_of(value: f64) -> Gradients {
        // A one-parameter tape whose gradient is exactly `value`:
        // loss = value * p with p = 1.
        let mut t = Tape::new();
        let p = t.scalar_param(&Vector::scalar(1.0)).unwrap();
        let loss = t.scalar_affine(&[(p, value)], 0.0);
        t.backward(loss).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut st = AdamState::new(AdamConfig::default(), &[1]);
        let mut p = vec![0.25];
        let g = grads_of(0.0);
        st.step(&mut [&mut p], &g).unwrap();
        st.step(&mut [&mut p], &g).unwrap();
        assert_eq!(p[0], 0.25);
        assert_eq!(st.steps(), 2);
    }

    #[test]
    fn first_step_magnitude_is_close_to_lr() {
        let cfg = AdamConfig::default();
        let mut st = AdamState::new(cfg, &[1]);
        let mut p = vec![0.0];
        let g = grads_of(3.7);
        st.step(&mut [&mut p], &g).unwrap();
        // Bias-corrected ratio m_hat/sqrt(v_hat) is 1 up to epsilon.
        assert!((p[0].abs() - cfg.lr).abs() < 1e-9, "step {}", p[0]);
        assert!(p[0] < 0.0);
        let (expect, _, _) = scalar_adam(&[3.7], cfg, 0.0);
        assert_eq!(p[0], expect);
    }

    #[test]
    fn two_identical_steps_match_scalar_recurrence() {
        let cfg = AdamConfig::default();
        let g_val = 0.8;
        let mut st = AdamState::new(cfg, &[1]);
        let mut p = vec![1.0];
        let g = grads_of(g_val);
        st.step(&mut [&mut p], &g).unwrap();
        st.step(&mut [&mut p], &g).unwrap();
        let (expect_p, _, expect_v) = scalar_adam(&[g_val, g_val], cfg, 1.0);
        assert_eq!(p[0], expect_p);
        // Closed form of the constant-gradient recurrence:
        // v_t = g^2 (1 - beta2^t).
        let closed = g_val * g_val * (1.0 - cfg.beta2 * cfg.beta2);
        assert_eq!(st.second_moment(0)[0], expect_v);
        assert!((st.second_moment(0)[0] - closed).abs() < 1e-16);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let mut st = AdamState::new(AdamConfig::default(), &[2]);
        let mut p = vec![0.0];
        let g = grads_of(1.0);
        let err = st.step(&mut [&mut p], &g).unwrap_err();
        assert!(matches!(err, GkrError::Shape { .. }));
    }
}

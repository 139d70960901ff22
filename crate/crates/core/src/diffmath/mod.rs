//! Numerical core: dense tensors, a recording tape for reverse-mode
//! differentiation, Adam, small MLPs, and a finite-difference checker.
//! Everything the models do is built from these primitives.

mod adam;
mod gradcheck;
pub mod init;
mod mlp;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport, FD_STEP};
pub use mlp::{Mlp, RegisteredMlp};
pub use tape::{sigmoid, Gradients, PoolMode, Tape, TapeMat, TapeScalar, TapeVec};
pub use tensor::{Matrix, Vector};

/// Anything whose trainable state is a fixed-order list of flat buffers.
/// The order must match tape registration order so that `Gradients` and
/// `AdamState` line up with `buffers_mut()`.
pub trait Trainable {
    fn buffers(&self) -> Vec<&[f64]>;
    fn buffers_mut(&mut self) -> Vec<&mut [f64]>;

    fn buffer_lens(&self) -> Vec<usize> {
        self.buffers().iter().map(|b| b.len()).collect()
    }

    fn param_count(&self) -> usize {
        self.buffers().iter().map(|b| b.len()).sum()
    }
}

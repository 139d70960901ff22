//! Central finite-difference verification of reverse-mode gradients.

use crate::error::{GkrError, Result};

use super::tape::{Tape, TapeScalar};
use super::Trainable;

/// Finite-difference step, chosen for double precision.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    /// max over coordinates of |g_ad - g_fd| / max(1, |g_ad| + |g_fd|)
    pub max_rel_err: f64,
    pub worst_param: usize,
    pub worst_coord: usize,
    pub coords_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

fn eval<M: ?Sized>(
    model: &M,
    build: &mut impl FnMut(&M, &mut Tape) -> Result<TapeScalar>,
) -> Result<f64> {
    let mut tape = Tape::new();
    let loss = build(model, &mut tape)?;
    Ok(tape.scalar_value(loss))
}

/// Compare the tape gradient of `build`'s loss against central differences
/// over every coordinate of every trainable buffer of `model`.
///
/// `build` must be deterministic for fixed parameters; this is verified by
/// evaluating twice and demanding bitwise equality before any comparison.
pub fn grad_check<M: Trainable + ?Sized>(
    model: &mut M,
    mut build: impl FnMut(&M, &mut Tape) -> Result<TapeScalar>,
) -> Result<GradCheckReport> {
    let l0 = eval(model, &mut build)?;
    let l1 = eval(model, &mut build)?;
    if l0.to_bits() != l1.to_bits() {
        return Err(GkrError::numeric(
            "grad_check: forward closure is not deterministic; aborting",
        ));
    }

    let analytic = {
        let mut tape = Tape::new();
        let loss = build(model, &mut tape)?;
        tape.backward(loss)?
    };
    let lens: Vec<usize> = model.buffers().iter().map(|b| b.len()).collect();
    if analytic.len() != lens.len() {
        return Err(GkrError::shape(
            "grad_check",
            format!("{} model buffers", lens.len()),
            format!("{} registered params", analytic.len()),
        ));
    }

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: 0,
        worst_coord: 0,
        coords_checked: 0,
    };
    for (p, &len) in lens.iter().enumerate() {
        for c in 0..len {
            let base = model.buffers()[p][c];
            model.buffers_mut()[p][c] = base + FD_STEP;
            let up = eval(model, &mut build)?;
            model.buffers_mut()[p][c] = base - FD_STEP;
            let down = eval(model, &mut build)?;
            model.buffers_mut()[p][c] = base;

            let g_fd = (up - down) / (2.0 * FD_STEP);
            let g_ad = analytic.get(p)[c];
            let rel = (g_ad - g_fd).abs() / 1.0f64.max(g_ad.abs() + g_fd.abs());
            report.coords_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = p;
                report.worst_coord = c;
            }
        }
    }
    Ok(report)
}

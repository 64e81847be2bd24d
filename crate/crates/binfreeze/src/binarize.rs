//! Binarization primitives and their gradient routing.
//!
//! The core forward map for a masked tensor u with freeze mask M is
//!
//! ```text
//! u' = M .* sign(u) + (1 - M) .* smooth(u)
//! ```
//!
//! and its backward rule routes gradient only through the unfrozen entries:
//!
//! ```text
//! dL/du = (1 - M) .* dL/du' .* smooth'(u)
//! ```
//!
//! Frozen entries therefore receive an exactly-zero gradient, while their
//! forward value (+-1) still participates in co-operand gradients as a
//! constant. `sign` itself never carries a gradient rule; the only
//! pass-through surrogate in the crate is [`ste_binarize`], which the
//! progressive-freezing path never uses.

use crate::error::{Error, Result};
use crate::masking::Mask;
use crate::tape::{Op, Tape, Var};
use crate::tensor::Tensor;

/// Smooth proxy applied to unfrozen entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothKind {
    /// Pass-through; used for weight latents.
    Identity,
    /// Hard clip to [-1, 1]; used for pre-activations.
    Clip,
}

impl SmoothKind {
    pub fn apply(self, u: f32) -> f32 {
        match self {
            SmoothKind::Identity => u,
            SmoothKind::Clip => u.clamp(-1.0, 1.0),
        }
    }

    /// Derivative of the proxy. Clip uses 1 on the open interval |u| < 1 and 0
    /// at and beyond the boundary.
    pub fn derivative(self, u: f32) -> f32 {
        match self {
            SmoothKind::Identity => 1.0,
            SmoothKind::Clip => {
                if u.abs() < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// sign with the convention sign(0) = +1 (so outputs are exactly +-1).
pub fn sign(u: f32) -> f32 {
    if u >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Elementwise sign of a tensor.
pub fn sign_tensor(t: &Tensor) -> Tensor {
    t.map(sign)
}

/// Elementwise masked binarization of a plain tensor (no tape). The mask must
/// either match the tensor shape or match its per-sample suffix, in which case
/// it broadcasts over the leading batch axis.
pub fn masked_values(u: &Tensor, mask: &Mask, smooth: SmoothKind) -> Result<Tensor> {
    let period = check_mask_broadcast(u.shape(), mask)?;
    let bits = mask.bits();
    let data = u
        .data()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if bits[i % period] == 1 {
                sign(x)
            } else {
                smooth.apply(x)
            }
        })
        .collect();
    Tensor::new(u.shape().to_vec(), data)
}

/// Validates mask-vs-tensor shapes; returns the mask length (broadcast period).
pub(crate) fn check_mask_broadcast(shape: &[usize], mask: &Mask) -> Result<usize> {
    let n: usize = shape.iter().product();
    let m = mask.len();
    if mask.shape() == shape {
        return Ok(n.max(1));
    }
    if shape.len() > 1 && mask.shape() == &shape[1..] {
        return Ok(m.max(1));
    }
    Err(Error::Dimension(format!(
        "mask shape {:?} matches neither tensor shape {:?} nor its per-sample suffix",
        mask.shape(),
        shape
    )))
}

/// Pushes masked binarization onto the tape: frozen entries emit sign(u) and
/// block gradient; unfrozen entries emit smooth(u) and pass gradient scaled by
/// smooth'(u). The mask bits are captured by value at call time.
pub fn masked_forward(tape: &mut Tape, latent: Var, mask: &Mask, smooth: SmoothKind) -> Result<Var> {
    let shape = tape.value(latent).shape().to_vec();
    check_mask_broadcast(&shape, mask)?;
    let value = masked_values(tape.value(latent), mask, smooth)?;
    Ok(tape.push(
        value,
        Op::MaskedBinarize {
            latent,
            bits: mask.bits().to_vec(),
            smooth,
        },
    ))
}

/// Straight-through estimator: sign forward, identity backward. This is the
/// baseline's surrogate and exists only on STE-routed paths.
pub fn ste_binarize(tape: &mut Tape, latent: Var) -> Var {
    let value = sign_tensor(tape.value(latent));
    tape.push(value, Op::SteSign { latent })
}

/// Hard sign with no backward rule at all, for deploy-profile forwards.
/// Calling backward through it is a contract error.
pub fn hard_sign(tape: &mut Tape, x: Var) -> Var {
    let value = sign_tensor(tape.value(x));
    tape.push(value, Op::HardSign { x })
}

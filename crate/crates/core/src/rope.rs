//! Rotary position embedding and the two positioning schemes.
//!
//! Keys and queries are rotated pairwise: for pair `i` the angle is
//! `position * base^(-2i / d)`. Dot products of rotated vectors depend only
//! on the position difference, which is what makes the absolute-vs-relative
//! distinction a pure indexing choice: `Absolute` feeds each entry's stored
//! original position, `WindowRelative` renumbers the visible window
//! `0..len-1` so indices stay bounded as the window slides.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::TokenKv;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RopeError {
    #[error("head_dim {0} is odd; rotary rotation needs element pairs")]
    OddHeadDim(usize),
}

/// Which position a cache entry is rotated at during attention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PositioningMode {
    /// Each entry keeps its original sequence index.
    Absolute,
    /// Entries are renumbered 0..len-1 within the visible window.
    WindowRelative,
}

/// Rotate `v` to encode `position`. Adjacent elements form the rotation
/// pairs; the result has the same L2 norm as the input.
pub fn apply_rotation<T: Scalar>(
    v: &[T],
    position: T,
    base: T,
) -> Result<Vec<T>, RopeError> {
    if v.len() % 2 != 0 {
        return Err(RopeError::OddHeadDim(v.len()));
    }
    let d = T::from_usize_lossy(v.len());
    let two = T::from_f64_lossy(2.0);
    let mut out = Vec::with_capacity(v.len());
    for i in 0..v.len() / 2 {
        let exponent = -(two * T::from_usize_lossy(i)) / d;
        let angle = position * base.powf(exponent);
        let (sin, cos) = angle.sin_cos();
        let (a, b) = (v[2 * i], v[2 * i + 1]);
        out.push(a * cos - b * sin);
        out.push(a * sin + b * cos);
    }
    Ok(out)
}

/// Positions a cache view is rotated at under `mode`.
pub fn positions_for<T: Scalar>(
    cache_view: &[&TokenKv<T>],
    mode: PositioningMode,
) -> Vec<usize> {
    match mode {
        PositioningMode::Absolute => cache_view.iter().map(|e| e.position).collect(),
        PositioningMode::WindowRelative => (0..cache_view.len()).collect(),
    }
}

//! Closed-form auxiliary-variable updates. Each one is a Euclidean
//! projection onto a simple set and leaves the phase of its input alone.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::ComplexVector;

const NUDGE_UP: f64 = 1.0 + f64::EPSILON;
const NUDGE_DOWN: f64 = 1.0 - f64::EPSILON / 2.0;

/// Nearest point with `|c|² ≥ zeta`. Zero maps to `√zeta` at phase 0.
pub fn project_mainlobe_floor(u: Complex64, zeta: f64) -> Complex64 {
    if u.norm_sqr() >= zeta {
        return u;
    }
    let root = zeta.sqrt();
    let norm = u.norm();
    let mut out = if norm == 0.0 {
        Complex64::new(root, 0.0)
    } else {
        u * (root / norm)
    };
    // Rounding can leave |out|² a hair under zeta; keep the output feasible
    // so a second application is the identity.
    while out.norm_sqr() < zeta {
        out *= NUDGE_UP;
    }
    out
}

/// Nearest point with `|c|² ≤ cap`.
pub fn project_modulus_cap(u: Complex64, cap: f64) -> Complex64 {
    if u.norm_sqr() <= cap {
        return u;
    }
    if cap <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut out = u * (cap.sqrt() / u.norm());
    while out.norm_sqr() > cap {
        out *= NUDGE_DOWN;
    }
    out
}

/// Caps every lag except the 1-based `matched_index`, which passes through.
pub fn project_sidelobe_caps(eta: &ComplexVector, cap: f64, matched_index: usize) -> ComplexVector {
    let centre = matched_index.wrapping_sub(1);
    ComplexVector::from_iterator(
        eta.len(),
        eta.iter().enumerate().map(|(i, &e)| {
            if i == centre {
                e
            } else {
                project_modulus_cap(e, cap)
            }
        }),
    )
}

/// [`project_sidelobe_caps`] on each consecutive block of `block_len` lags.
/// Block `k` uses `caps[k]`; blocks past the end of `caps` reuse its last entry.
pub fn project_sidelobe_blocks(
    eta: &ComplexVector,
    caps: &[f64],
    block_len: usize,
    matched_index: usize,
) -> ComplexVector {
    let mut out = eta.clone();
    for (k, start) in (0..eta.len()).step_by(block_len.max(1)).enumerate() {
        let len = block_len.min(eta.len() - start);
        let cap = caps[k.min(caps.len() - 1)];
        let block = project_sidelobe_caps(&eta.rows(start, len).into_owned(), cap, matched_index);
        out.rows_mut(start, len).copy_from(&block);
    }
    out
}

/// `u / ‖u‖₂`; vectors already unit-norm to rounding are returned as-is.
pub fn project_unit_sphere(u: &ComplexVector) -> Result<ComplexVector> {
    let norm = u.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateInput(
            "cannot normalize a zero or non-finite filter".into(),
        ));
    }
    if (norm - 1.0).abs() <= 1e-14 {
        return Ok(u.clone());
    }
    Ok(u / Complex64::new(norm, 0.0))
}

//! Entropy kernels shared by every rate formula. All results are in bits.

use crate::error::{Error, Result};

const PROBABILITY_SLACK: f64 = 1e-12;
const BOSONIC_CLAMP: f64 = 1e-12;
const BOSONIC_REJECT: f64 = 1e-9;

/// A number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    /// Accepts values up to `1e-12` outside the unit interval and clamps them.
    pub fn new(value: f64) -> Result<Self> {
        if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value) {
            return Err(Error::Domain(format!("probability {value} outside [0, 1]")));
        }
        Ok(Probability(value.clamp(0.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `-x log2 x` with the continuous extension at zero.
fn xlog2x_neg(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Binary entropy `h(x) = -x log2 x - (1-x) log2 (1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    let p = Probability::new(x)?.value();
    Ok(xlog2x_neg(p) + xlog2x_neg(1.0 - p))
}

/// Single Shannon term `H(x) = -x log2 x`.
pub fn entropy_term(x: f64) -> Result<f64> {
    let p = Probability::new(x)?.value();
    Ok(xlog2x_neg(p))
}

/// Von Neumann entropy of a thermal state with mean photon number `x`:
/// `G(x) = (x+1) log2 (x+1) - x log2 x`.
///
/// Tiny negative arguments (round-off from symplectic eigenvalues just below
/// one) are clamped to zero; anything below `-1e-9` is rejected.
pub fn bosonic_entropy(x: f64) -> Result<f64> {
    if x.is_nan() || x < -BOSONIC_REJECT {
        return Err(Error::Domain(format!("bosonic entropy argument {x} is negative (symplectic eigenvalue < 1)")));
    }
    let x = if x < BOSONIC_CLAMP { x.max(0.0) } else { x };
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// Circular mean `E[e^{i theta}] = e^{-variance/2}` of a wrapped normal phase.
pub fn circular_mean_wrapped_normal(variance: f64) -> Result<f64> {
    if variance.is_nan() || variance < 0.0 {
        return Err(Error::Domain(format!("phase variance {variance} < 0")));
    }
    Ok((-variance / 2.0).exp())
}

/// Shannon entropy of a discrete distribution, skipping zero weights.
pub(crate) fn shannon(weights: &[f64]) -> f64 {
    weights.iter().map(|&w| xlog2x_neg(w.max(0.0))).sum()
}

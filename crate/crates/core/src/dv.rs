//! BB84 and six-state key rates, with and without noisy preprocessing.
//!
//! Every rate carries the factor `P_S / 2`: single-photon post-selection and
//! the split of the dual-rail encoding over two polarization channels. No
//! sifting factor is applied.
//!
//! Noisy preprocessing is evaluated from the Bell-diagonal state
//! `sum_uv L_uv |Phi_uv><Phi_uv|` (u = bit flip, v = phase flip) and Eve's
//! purification `sum_uv sqrt(L_uv) |Phi_uv>|e_uv>`. After Alice measures Z and
//! flips her bit with probability `q`, Eve's state conditioned on the key bit
//! is an explicit 4x4 density matrix; the one-way key rate
//! `S(U|E) - H(U|B)` then comes from its spectrum.

use nalgebra::{Matrix4, SymmetricEigen};

use crate::channel::DvChannelStats;
use crate::error::{Error, Result};
use crate::optimize::{golden_section_max, grid_then_golden_max, linspace};
use crate::rate::{Diagnostics, KeyRateResult, Protocol};
use crate::scalar::{binary_entropy, entropy_term, shannon};

const Q_GRID_POINTS: usize = 64;
const Q_TOL: f64 = 1e-6;
const SPLIT_GRID_POINTS: usize = 33;
const SPLIT_TOL: f64 = 1e-10;
const WEIGHT_SLACK: f64 = 1e-12;

/// Bell-diagonal weights of the state seen through a Pauli channel with the
/// given QBERs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixStateDecomposition {
    pub lam00: f64,
    pub lam01: f64,
    pub lam10: f64,
    pub lam11: f64,
}

impl SixStateDecomposition {
    pub fn from_qbers(q_x: f64, q_y: f64, q_z: f64) -> Result<Self> {
        let raw =
            [1.0 - (q_x + q_y + q_z) / 2.0, (q_x + q_y - q_z) / 2.0, (-q_x + q_y + q_z) / 2.0, (q_x - q_y + q_z) / 2.0];
        if let Some(&weight) = raw.iter().find(|&&w| !(-WEIGHT_SLACK..=1.0 + WEIGHT_SLACK).contains(&w)) {
            return Err(Error::UnphysicalQber { qx: q_x, qy: q_y, qz: q_z, weight });
        }
        let [lam00, lam01, lam10, lam11] = raw.map(|w| w.clamp(0.0, 1.0));
        Ok(SixStateDecomposition { lam00, lam01, lam10, lam11 })
    }

    pub fn weights(&self) -> [f64; 4] {
        [self.lam00, self.lam01, self.lam10, self.lam11]
    }
}

/// `(P_S / 2)(1 - h(Q_Z) - h(Q_X))`.
pub fn bb84_rate(stats: &DvChannelStats) -> Result<KeyRateResult> {
    let bracket = 1.0 - binary_entropy(stats.q_z)? - binary_entropy(stats.q_x)?;
    Ok(dv_result(Protocol::Bb84, stats, bracket, None))
}

/// `(P_S / 2)(1 - sum_ij H(L_ij))` with the Bell-diagonal weights fixed by
/// all three QBERs.
pub fn six_state_rate(stats: &DvChannelStats) -> Result<KeyRateResult> {
    let lam = SixStateDecomposition::from_qbers(stats.q_x, stats.q_y, stats.q_z)?;
    let mut bracket = 1.0;
    for w in lam.weights() {
        bracket -= entropy_term(w)?;
    }
    Ok(dv_result(Protocol::SixState, stats, bracket, None))
}

/// BB84 with Alice flipping her raw key bit with probability `q`, optimized
/// over `q in [0, 1/2]`. `Q_Y` is not observed, so Eve picks the
/// Bell-diagonal split that is worst for Alice and Bob.
pub fn bb84_noisy_rate(stats: &DvChannelStats) -> Result<KeyRateResult> {
    check_qbers(stats)?;
    let objective = |q: f64| bb84_preprocessed_bracket(stats.q_x, stats.q_z, q);
    let (q, bracket) = maximize_over_flip(&objective);
    Ok(dv_result(Protocol::NBb84, stats, bracket, Some(q)))
}

/// NBB84 at a fixed flip probability.
pub fn bb84_noisy_rate_at(stats: &DvChannelStats, q: f64) -> Result<KeyRateResult> {
    check_qbers(stats)?;
    check_flip(q)?;
    let bracket = bb84_preprocessed_bracket(stats.q_x, stats.q_z, q);
    Ok(dv_result(Protocol::NBb84, stats, bracket, Some(q)))
}

/// Six-state with noisy preprocessing, optimized over `q in [0, 1/2]`.
pub fn six_state_noisy_rate(stats: &DvChannelStats) -> Result<KeyRateResult> {
    let lam = SixStateDecomposition::from_qbers(stats.q_x, stats.q_y, stats.q_z)?.weights();
    let objective = |q: f64| preprocessed_bracket(&lam, q);
    let (q, bracket) = maximize_over_flip(&objective);
    Ok(dv_result(Protocol::NSixState, stats, bracket, Some(q)))
}

/// N6S at a fixed flip probability.
pub fn six_state_noisy_rate_at(stats: &DvChannelStats, q: f64) -> Result<KeyRateResult> {
    check_flip(q)?;
    let lam = SixStateDecomposition::from_qbers(stats.q_x, stats.q_y, stats.q_z)?.weights();
    let bracket = preprocessed_bracket(&lam, q);
    Ok(dv_result(Protocol::NSixState, stats, bracket, Some(q)))
}

fn dv_result(protocol: Protocol, stats: &DvChannelStats, bracket: f64, q: Option<f64>) -> KeyRateResult {
    let raw = stats.p_success / 2.0 * bracket;
    KeyRateResult::new(protocol, raw, q, Diagnostics::Dv(*stats))
}

fn check_qbers(stats: &DvChannelStats) -> Result<()> {
    for q in [stats.q_x, stats.q_z] {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("QBER {q} outside [0, 1]")));
        }
    }
    Ok(())
}

fn check_flip(q: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::Domain(format!("flip probability {q} outside [0, 1/2]")));
    }
    Ok(())
}

/// Max of `objective` over the flip probability; `q = 0` when the search
/// yields nothing better.
fn maximize_over_flip<F: Fn(f64) -> f64>(objective: &F) -> (f64, f64) {
    let at_zero = objective(0.0);
    match grid_then_golden_max(objective, &linspace(0.0, 0.5, Q_GRID_POINTS), Q_TOL) {
        Some(m) if m.value > at_zero => (m.x, m.value),
        _ => (0.0, at_zero),
    }
}

/// Eve's state conditioned on Alice's key bit `u` after the flip.
fn eve_conditional_state(lam: &[f64; 4], q: f64, key_bit: usize) -> Matrix4<f64> {
    let mut rho = Matrix4::zeros();
    for (x, weight) in [(key_bit, 1.0 - q), (1 - key_bit, q)] {
        if weight == 0.0 {
            continue;
        }
        for u in 0..2 {
            let mut amp = nalgebra::Vector4::zeros();
            for v in 0..2 {
                let sign = if v * x % 2 == 1 { -1.0 } else { 1.0 };
                amp[2 * u + v] = sign * lam[2 * u + v].sqrt();
            }
            rho += weight * amp * amp.transpose();
        }
    }
    rho
}

fn von_neumann(rho: &Matrix4<f64>) -> f64 {
    let eig = SymmetricEigen::new(*rho);
    shannon(eig.eigenvalues.as_slice())
}

/// `S(U|E) - H(U|B)` for the Bell-diagonal state `lam` and flip probability `q`.
pub fn preprocessed_bracket(lam: &[f64; 4], q: f64) -> f64 {
    let s_e = shannon(lam);
    let s_ue: f64 =
        1.0 + 0.5 * (von_neumann(&eve_conditional_state(lam, q, 0)) + von_neumann(&eve_conditional_state(lam, q, 1)));
    let q_z = lam[2] + lam[3];
    let error = q * (1.0 - q_z) + (1.0 - q) * q_z;
    let h_ub = shannon(&[error, 1.0 - error]);
    s_ue - s_e - h_ub
}

/// Worst case over the unobserved split `L_11 = t` consistent with the
/// observed `Q_X` and `Q_Z`.
fn bb84_preprocessed_bracket(q_x: f64, q_z: f64, q: f64) -> f64 {
    let t_lo = (q_x + q_z - 1.0).max(0.0);
    let t_hi = q_x.min(q_z);
    let bracket_at = |t: f64| {
        let lam = [1.0 - q_x - q_z + t, q_x - t, q_z - t, t].map(|w: f64| w.max(0.0));
        preprocessed_bracket(&lam, q)
    };
    if t_hi <= t_lo {
        return bracket_at(t_lo);
    }
    let neg = |t: f64| -bracket_at(t);
    let grid = linspace(t_lo, t_hi, SPLIT_GRID_POINTS);
    let mut best =
        grid.iter().map(|&t| (t, neg(t))).fold((t_lo, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    let i = grid.iter().position(|&t| t == best.0).unwrap_or(0);
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    if hi > lo {
        let refined = golden_section_max(&neg, lo, hi, SPLIT_TOL);
        if refined.value > best.1 {
            best = (refined.x, refined.value);
        }
    }
    -best.1
}

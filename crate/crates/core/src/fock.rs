//! Truncated Fock-space simulation of the dual-rail thermal-loss channel.
//!
//! Each rail is a beamsplitter mixing the signal mode `a` with a thermal
//! environment mode `e`:
//! `a^dag -> sqrt(eta) b^dag + sqrt(1-eta) f^dag`,
//! `e^dag -> sqrt(1-eta) b^dag - sqrt(eta) f^dag`,
//! where `b` goes to Bob and `f` is lost. The output of `|m>_a |n>_e` is
//! built by applying these creation operators to the vacuum one at a time,
//! which keeps every intermediate vector normalized. Total photon number is
//! conserved, so each output lives in a single `(m + n + 1)`-dimensional
//! block indexed by Bob's photon count.
//!
//! Every amplitude is real. Phase diffusion only multiplies coherences by
//! real rotation averages, so the qubit map is real as well.

use nalgebra::{Complex, DMatrix, Matrix2, Matrix4, SymmetricEigen};
use serde::Serialize;

use crate::channel::{combined_channel_stats, PhaseNoise, ThermalLossChannel};
use crate::error::{Error, Result};
use crate::scalar::circular_mean_wrapped_normal;

const TAIL_LIMIT: f64 = 1e-8;
const QUADRATURE_NODES: usize = 4096;
const WRAPS: i32 = 6;

/// Smallest cutoff used by default: `ceil(40 N + 20)`.
pub fn default_cutoff(n_th: f64) -> usize {
    (40.0 * n_th + 20.0).ceil() as usize
}

/// Thermal occupation probabilities `N^n / (N+1)^(n+1)` for `n = 0..=cutoff`
/// and the mass left beyond the cutoff.
pub fn thermal_weights(n_th: f64, cutoff: usize) -> (Vec<f64>, f64) {
    let ratio = n_th / (n_th + 1.0);
    let mut p = 1.0 / (n_th + 1.0);
    let mut weights = Vec::with_capacity(cutoff + 1);
    for _ in 0..=cutoff {
        weights.push(p);
        p *= ratio;
    }
    (weights, ratio.powi(cutoff as i32 + 1))
}

/// Apply `alpha b^dag + beta f^dag` to a block vector indexed by Bob's count.
fn create(state: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let total = state.len() - 1;
    let mut out = vec![0.0; total + 2];
    for (k, &amp) in state.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        out[k + 1] += alpha * ((k + 1) as f64).sqrt() * amp;
        out[k] += beta * ((total - k + 1) as f64).sqrt() * amp;
    }
    out
}

/// Output amplitudes of `|m>_a |n>_e` through a beamsplitter of
/// transmissivity `eta`. Entry `k` is the amplitude of `|k>_b |m+n-k>_f`.
pub fn output_amplitudes(eta: f64, m: usize, n: usize) -> Vec<f64> {
    let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
    let mut state = vec![1.0];
    for j in 1..=n {
        state = create(&state, r, -t);
        let norm = (j as f64).sqrt();
        state.iter_mut().for_each(|x| *x /= norm);
    }
    for j in 1..=m {
        state = create(&state, t, r);
        let norm = (j as f64).sqrt();
        state.iter_mut().for_each(|x| *x /= norm);
    }
    state
}

/// Beamsplitter restricted to `total` photons. Column `j` is the image of
/// `|j>_a |total - j>_e`; row `k` is `|k>_b |total - k>_f`.
pub fn beamsplitter_block(eta: f64, total: usize) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(total + 1, total + 1);
    for j in 0..=total {
        let col = output_amplitudes(eta, j, total - j);
        for (k, v) in col.into_iter().enumerate() {
            u[(k, j)] = v;
        }
    }
    u
}

/// `E[cos(d theta)]` for a wrapped-normal phase, by trapezoid quadrature of
/// the wrapped density on `[-pi, pi]`.
pub fn wrapped_normal_phase_factor(variance: f64, d: i32) -> f64 {
    if variance == 0.0 || d == 0 {
        return 1.0;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let norm = 1.0 / (two_pi * variance).sqrt();
    let h = two_pi / QUADRATURE_NODES as f64;
    let density = |theta: f64| -> f64 {
        (-WRAPS..=WRAPS)
            .map(|k| {
                let x = theta + two_pi * k as f64;
                norm * (-x * x / (2.0 * variance)).exp()
            })
            .sum()
    };
    // Periodic integrand: the trapezoid rule reduces to a plain sum.
    (0..QUADRATURE_NODES)
        .map(|i| {
            let theta = -std::f64::consts::PI + h * i as f64;
            density(theta) * (d as f64 * theta).cos() * h
        })
        .sum()
}

/// Per-rail transition probabilities `P(i -> j)` for `i, j` in `{0, 1}`
/// photons, and the Z-basis quantities they compose into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RailProbabilities {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl RailProbabilities {
    /// Bob sees the photon in the rail it was sent in.
    pub fn p_correct(&self) -> f64 {
        self.p11 * self.p00
    }

    /// Bob sees one photon, in the other rail.
    pub fn p_flip(&self) -> f64 {
        self.p10 * self.p01
    }

    pub fn p_success(&self) -> f64 {
        self.p_correct() + self.p_flip()
    }

    pub fn qber_z(&self) -> f64 {
        self.p_flip() / self.p_success()
    }
}

/// Single-rail channel tables for one `(eta, N)`.
#[derive(Debug, Clone)]
pub struct FockOracle {
    eta: f64,
    cutoff: usize,
    weights: Vec<f64>,
    /// `outputs[m][n]`: amplitudes of `|m>_a |n>_e`.
    outputs: [Vec<Vec<f64>>; 2],
}

impl FockOracle {
    pub fn new(ch: &ThermalLossChannel, cutoff: usize) -> Result<Self> {
        let (weights, tail) = thermal_weights(ch.n_th(), cutoff);
        if tail > TAIL_LIMIT {
            return Err(Error::Truncation { cutoff, tail });
        }
        let eta = ch.eta();
        let outputs = [0, 1].map(|m| (0..=cutoff).map(|n| output_amplitudes(eta, m, n)).collect());
        Ok(FockOracle { eta, cutoff, weights, outputs })
    }

    pub fn with_default_cutoff(ch: &ThermalLossChannel) -> Result<Self> {
        Self::new(ch, default_cutoff(ch.n_th()))
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Amplitude `<b, f | U | m, n>`, zero off the photon-number shell.
    pub fn amplitude(&self, m: usize, n: usize, b: usize, f: usize) -> f64 {
        if b + f != m + n || n > self.cutoff {
            return 0.0;
        }
        self.outputs[m][n][b]
    }

    /// `sum_n p_n sum_f <b,f|U|m,n> <m',n|U^dag|b',f>`: the `(b, b')` entry of
    /// the rail output when the input coherence is `|m><m'|`.
    pub fn rail_factor(&self, m: usize, m_prime: usize, b: usize, b_prime: usize) -> f64 {
        if b as i64 - b_prime as i64 != m as i64 - m_prime as i64 {
            return 0.0;
        }
        self.weights
            .iter()
            .enumerate()
            .map(|(n, &p)| {
                let f = match (m + n).checked_sub(b) {
                    Some(f) => f,
                    None => return 0.0,
                };
                p * self.amplitude(m, n, b, f) * self.amplitude(m_prime, n, b_prime, f)
            })
            .sum()
    }

    pub fn rail_probabilities(&self) -> RailProbabilities {
        RailProbabilities {
            p00: self.rail_factor(0, 0, 0, 0),
            p01: self.rail_factor(0, 0, 1, 1),
            p10: self.rail_factor(1, 1, 0, 0),
            p11: self.rail_factor(1, 1, 1, 1),
        }
    }

    /// Unnormalized qubit map on the single-photon subspace. Logical `|0>`
    /// is the photon in rail 1; each rail sees an independent wrapped-normal
    /// phase.
    pub fn qubit_map(&self, pn: &PhaseNoise) -> QubitMap {
        let rails = |logical: usize| if logical == 0 { (1usize, 0usize) } else { (0, 1) };
        let phase: [f64; 3] = [-1, 0, 1].map(|d| wrapped_normal_phase_factor(pn.variance(), d));
        let phase_of = |d: i64| phase[(d + 1) as usize];
        let image = |i: usize, j: usize| {
            let (mi1, mi2) = rails(i);
            let (mj1, mj2) = rails(j);
            let mut out = Matrix2::zeros();
            for k in 0..2 {
                for l in 0..2 {
                    let (bk1, bk2) = rails(k);
                    let (bl1, bl2) = rails(l);
                    let d1 = bk1 as i64 - bl1 as i64;
                    let d2 = bk2 as i64 - bl2 as i64;
                    out[(k, l)] = self.rail_factor(mi1, mj1, bk1, bl1)
                        * self.rail_factor(mi2, mj2, bk2, bl2)
                        * phase_of(d1)
                        * phase_of(d2);
                }
            }
            out
        };
        QubitMap { images: std::array::from_fn(|i| std::array::from_fn(|j| image(i, j))) }
    }

    /// X-basis error rate from a two-rail amplitude simulation: the input
    /// `(|10> + |01>)/sqrt 2` goes through both rails, Bob recombines his two
    /// modes on a 50:50 beamsplitter and keeps single-photon events.
    pub fn x_basis_qber(&self) -> f64 {
        let recombine = beamsplitter_block(0.5, 1);
        // Port index for the ideal `|+>` output.
        let ideal = {
            let a = recombine[(0, 1)] + recombine[(0, 0)];
            let b = recombine[(1, 1)] + recombine[(1, 0)];
            if a.abs() > b.abs() {
                0
            } else {
                1
            }
        };
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (mut wrong, mut total) = (0.0, 0.0);
        for (n1, &p1) in self.weights.iter().enumerate() {
            for (n2, &p2) in self.weights.iter().enumerate() {
                let weight = p1 * p2;
                for f1 in n1.saturating_sub(1)..=n1 + 1 {
                    for f2 in n2.saturating_sub(1)..=n2 + 1 {
                        // Bob's photon in rail 1 (index 1 of the recombiner
                        // input) or rail 2 (index 0).
                        let in_rail1 = s
                            * (self.amplitude(1, n1, 1, f1) * self.amplitude(0, n2, 0, f2)
                                + self.amplitude(0, n1, 1, f1) * self.amplitude(1, n2, 0, f2));
                        let in_rail2 = s
                            * (self.amplitude(1, n1, 0, f1) * self.amplitude(0, n2, 1, f2)
                                + self.amplitude(0, n1, 0, f1) * self.amplitude(1, n2, 1, f2));
                        if in_rail1 == 0.0 && in_rail2 == 0.0 {
                            continue;
                        }
                        let port0 = recombine[(0, 1)] * in_rail1 + recombine[(0, 0)] * in_rail2;
                        let port1 = recombine[(1, 1)] * in_rail1 + recombine[(1, 0)] * in_rail2;
                        let (good, bad) = if ideal == 0 { (port0, port1) } else { (port1, port0) };
                        wrong += weight * bad * bad;
                        total += weight * (good * good + bad * bad);
                    }
                }
            }
        }
        wrong / total
    }
}

/// Images `Phi(|i><j|)` of the qubit basis operators, unnormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitMap {
    pub images: [[Matrix2<f64>; 2]; 2],
}

impl QubitMap {
    pub fn apply(&self, rho: &Matrix2<Complex<f64>>) -> Matrix2<Complex<f64>> {
        let mut out = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out += self.images[i][j].map(|x| Complex::new(x, 0.0)) * rho[(i, j)];
            }
        }
        out
    }

    /// Trace of the image of `|0><0|`; the same for `|1><1|` by symmetry.
    pub fn p_success(&self) -> f64 {
        self.images[0][0].trace()
    }

    /// Depolarizing parameter read off the coherence: `1 - Phi_01 / P_S`.
    pub fn lambda(&self) -> f64 {
        1.0 - self.images[0][1][(0, 1)] / self.p_success()
    }

    fn error_rate(&self, sent: [Complex<f64>; 2], wrong: [Complex<f64>; 2]) -> f64 {
        let proj = |v: [Complex<f64>; 2]| {
            let v = nalgebra::Vector2::new(v[0], v[1]);
            v * v.adjoint()
        };
        let out = self.apply(&proj(sent));
        let err = (proj(wrong) * out).trace().re;
        err / out.trace().re
    }

    pub fn qber_z(&self) -> f64 {
        let (one, zero) = (Complex::new(1.0, 0.0), Complex::new(0.0, 0.0));
        self.error_rate([one, zero], [zero, one])
    }

    pub fn qber_x(&self) -> f64 {
        let s = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.error_rate([s, s], [s, -s])
    }

    pub fn qber_y(&self) -> f64 {
        let s = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let si = Complex::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        self.error_rate([s, si], [s, -si])
    }

    /// Choi matrix of the map normalized by the success probability.
    pub fn normalized_choi(&self) -> Matrix4<f64> {
        let ps = self.p_success();
        let mut choi = Matrix4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        choi[(2 * i + k, 2 * j + l)] = self.images[i][j][(k, l)] / ps;
                    }
                }
            }
        }
        choi
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        let choi = self.normalized_choi();
        let sym = (choi + choi.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min()
    }
}

pub fn oracle_rail_probabilities(ch: &ThermalLossChannel, cutoff: usize) -> Result<RailProbabilities> {
    Ok(FockOracle::new(ch, cutoff)?.rail_probabilities())
}

pub fn oracle_qubit_channel(ch: &ThermalLossChannel, pn: &PhaseNoise, cutoff: usize) -> Result<QubitMap> {
    Ok(FockOracle::new(ch, cutoff)?.qubit_map(pn))
}

pub fn oracle_x_basis_qber(ch: &ThermalLossChannel, cutoff: usize) -> Result<f64> {
    Ok(FockOracle::new(ch, cutoff)?.x_basis_qber())
}

/// Largest absolute oracle-vs-closed-form differences over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct OracleDeviation {
    pub lambda: f64,
    pub p_success: f64,
    pub q_z: f64,
    pub q_x: f64,
    pub q_y: f64,
    pub q_x_two_rail: f64,
    pub choi_negativity: f64,
    pub truncation: f64,
}

impl OracleDeviation {
    pub fn max(&self) -> f64 {
        [
            self.lambda,
            self.p_success,
            self.q_z,
            self.q_x,
            self.q_y,
            self.q_x_two_rail,
            self.choi_negativity,
            self.truncation,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn merge(&mut self, other: &OracleDeviation) {
        self.lambda = self.lambda.max(other.lambda);
        self.p_success = self.p_success.max(other.p_success);
        self.q_z = self.q_z.max(other.q_z);
        self.q_x = self.q_x.max(other.q_x);
        self.q_y = self.q_y.max(other.q_y);
        self.q_x_two_rail = self.q_x_two_rail.max(other.q_x_two_rail);
        self.choi_negativity = self.choi_negativity.max(other.choi_negativity);
        self.truncation = self.truncation.max(other.truncation);
    }

    pub fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("lambda", self.lambda),
            ("p_success", self.p_success),
            ("q_z", self.q_z),
            ("q_x", self.q_x),
            ("q_y", self.q_y),
            ("q_x_two_rail", self.q_x_two_rail),
            ("choi_negativity", self.choi_negativity),
            ("truncation", self.truncation),
        ]
    }
}

/// Compare the oracle against the closed forms at one grid point. The
/// two-rail X-basis simulation and the truncation check run only without
/// phase noise, where they apply.
pub fn deviation_at(ch: &ThermalLossChannel, pn: &PhaseNoise) -> Result<OracleDeviation> {
    let oracle = FockOracle::with_default_cutoff(ch)?;
    let map = oracle.qubit_map(pn);
    let closed = combined_channel_stats(ch, pn)?;
    let r = circular_mean_wrapped_normal(pn.variance())?;
    let mut dev = OracleDeviation {
        lambda: (map.lambda() - (1.0 - (1.0 - closed.lambda) * r * r)).abs(),
        p_success: (map.p_success() - closed.p_success).abs(),
        q_z: (map.qber_z() - closed.q_z).abs(),
        q_x: (map.qber_x() - closed.q_x).abs(),
        q_y: (map.qber_y() - closed.q_y).abs(),
        choi_negativity: (-map.choi_min_eigenvalue()).max(0.0),
        ..OracleDeviation::default()
    };
    if pn.variance() == 0.0 {
        dev.q_x_two_rail = (oracle.x_basis_qber() - closed.q_x).abs();
        let coarse = FockOracle::new(ch, (20.0 * ch.n_th() + 20.0).ceil() as usize)?.qubit_map(pn);
        dev.truncation = [
            (coarse.p_success() - map.p_success()).abs(),
            (coarse.qber_z() - map.qber_z()).abs(),
            (coarse.lambda() - map.lambda()).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
    }
    Ok(dev)
}

/// Grids checked by `oracle-check` and the acceptance suite.
pub const ORACLE_ETAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const ORACLE_NTHS: [f64; 5] = [0.01, 0.1, 0.5, 1.0, 2.0];
pub const DEPHASING_ETAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const DEPHASING_VARIANCES: [f64; 3] = [0.0, 0.01, 0.04];

/// Worst deviations over the loss grid (no phase noise) and the dephasing
/// grid.
pub fn oracle_check() -> Result<OracleDeviation> {
    use rayon::prelude::*;
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    for &eta in &ORACLE_ETAS {
        for &n in &ORACLE_NTHS {
            points.push((eta, n, 0.0));
        }
    }
    for &eta in &DEPHASING_ETAS {
        for &n in &ORACLE_NTHS {
            for &v in &DEPHASING_VARIANCES[1..] {
                points.push((eta, n, v));
            }
        }
    }
    let devs: Vec<OracleDeviation> = points
        .par_iter()
        .map(|&(eta, n, v)| deviation_at(&ThermalLossChannel::new(eta, n)?, &PhaseNoise::new(v)?))
        .collect::<Result<_>>()?;
    let mut worst = OracleDeviation::default();
    for d in &devs {
        worst.merge(d);
    }
    Ok(worst)
}

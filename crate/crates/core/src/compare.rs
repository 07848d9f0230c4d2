//! Comparison metrics between a CV and a DV protocol: the relative rate
//! advantage, tolerance frontiers in thermal noise and in distance, and the
//! grids built from them.

use serde::{Deserialize, Serialize};

use crate::channel::{PhaseNoise, ThermalLossChannel};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate, RateSettings};
use crate::rate::{KeyRateResult, Protocol};

pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;

const FRONTIER_X_TOL: f64 = 1e-4;
const FRONTIER_RESIDUAL: f64 = 1e-4;
const MAX_BISECTIONS: usize = 200;
const MAX_DOUBLINGS: usize = 40;
/// Absolute rate noise tolerated by the monotonicity checks. Rates near a
/// small K0 are differences of O(1) entropies and carry rounding noise of a
/// few 1e-15.
const RATE_NOISE: f64 = 1e-12;

/// Fibre link with loss in dB/km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub attenuation_db_per_km: f64,
    pub distance_km: f64,
}

impl LinkModel {
    pub fn new(attenuation_db_per_km: f64, distance_km: f64) -> Result<Self> {
        if !(attenuation_db_per_km > 0.0) || !attenuation_db_per_km.is_finite() {
            return Err(Error::Domain(format!("attenuation {attenuation_db_per_km} dB/km must be > 0")));
        }
        if !(distance_km >= 0.0) {
            return Err(Error::Domain(format!("distance {distance_km} km must be >= 0")));
        }
        Ok(LinkModel { attenuation_db_per_km, distance_km })
    }

    pub fn standard_fibre(distance_km: f64) -> Result<Self> {
        Self::new(DEFAULT_ATTENUATION_DB_PER_KM, distance_km)
    }

    /// `eta = 10^(-alpha D / 10)`.
    pub fn eta(&self) -> f64 {
        10f64.powf(-self.attenuation_db_per_km * self.distance_km / 10.0)
    }

    /// Distance at which the link has transmissivity `eta`.
    pub fn distance_for_eta(eta: f64, attenuation_db_per_km: f64) -> f64 {
        -10.0 * eta.log10() / attenuation_db_per_km
    }
}

/// Timing jitter of a pulsed source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    pub fwhm_s: f64,
    pub rep_rate_hz: f64,
}

impl JitterSpec {
    pub fn new(fwhm_s: f64, rep_rate_hz: f64) -> Result<Self> {
        if !(fwhm_s >= 0.0) || !(rep_rate_hz > 0.0) || !rep_rate_hz.is_finite() {
            return Err(Error::Domain(format!(
                "jitter needs fwhm >= 0 and repetition rate > 0, got ({fwhm_s}, {rep_rate_hz})"
            )));
        }
        Ok(JitterSpec { fwhm_s, rep_rate_hz })
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rep_rate_hz
    }
}

/// `sigma^2 = (2 pi fwhm)^2 / (2 sqrt(2 ln 2) dt)^2`.
pub fn jitter_to_phase_noise(j: &JitterSpec) -> Result<PhaseNoise> {
    let dt = j.dt();
    if j.fwhm_s >= dt {
        log::warn!("jitter fwhm {} s is not below the pulse period {} s", j.fwhm_s, dt);
    }
    let fwhm_to_sigma = 2.0 * (2.0 * std::f64::consts::LN_2).sqrt();
    let ratio = 2.0 * std::f64::consts::PI * j.fwhm_s / (fwhm_to_sigma * dt);
    PhaseNoise::new(ratio * ratio)
}

/// `(a - b) / max(a, b)` for non-negative figures of merit. `None` when both
/// are zero. Two infinite values compare equal; a single infinite value wins
/// outright.
pub fn relative_advantage(a: f64, b: f64) -> Option<f64> {
    let (a, b) = (a.max(0.0), b.max(0.0));
    match (a.is_infinite(), b.is_infinite()) {
        (true, true) => return Some(0.0),
        (true, false) => return Some(1.0),
        (false, true) => return Some(-1.0),
        _ => {}
    }
    let m = a.max(b);
    if m == 0.0 {
        None
    } else {
        Some((a - b) / m)
    }
}

/// `K~ = (K_cv - K_dv) / max(K_cv, K_dv)` on clamped rates; `None` when
/// neither protocol yields a key.
pub fn relative_rate_advantage(k_cv: &KeyRateResult, k_dv: &KeyRateResult) -> Option<f64> {
    relative_advantage(k_cv.rate, k_dv.rate)
}

/// Finds where the decreasing `rate` crosses `k0` inside `[lo, hi]`, where
/// `rate(lo) >= k0 > rate(hi)`. Every new sample must lie between the values
/// at the current bracket ends.
fn bisect_frontier<F>(rate: &F, mut lo: f64, mut r_lo: f64, mut hi: f64, mut r_hi: f64, k0: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let slack = |v: f64| 1e-9 * v.abs().max(k0) + RATE_NOISE;
    let mut best = if (r_lo - k0).abs() <= (r_hi - k0).abs() { (lo, r_lo) } else { (hi, r_hi) };
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let r = rate(mid)?;
        if r > r_lo + slack(r_lo) || r < r_hi - slack(r_hi) {
            return Err(Error::MonotonicityViolation {
                lo,
                hi,
                detail: format!("rate {r:e} at {mid:e} lies outside [{r_hi:e}, {r_lo:e}]"),
            });
        }
        if (r - k0).abs() < (best.1 - k0).abs() {
            best = (mid, r);
        }
        if r >= k0 {
            (lo, r_lo) = (mid, r);
        } else {
            (hi, r_hi) = (mid, r);
        }
        let narrow = hi - lo <= FRONTIER_X_TOL * best.0.abs().max(f64::MIN_POSITIVE);
        if narrow && (best.1 - k0).abs() <= FRONTIER_RESIDUAL * k0 {
            break;
        }
        if hi - lo <= f64::EPSILON * hi.abs() {
            break;
        }
    }
    Ok(best.0)
}

fn check_k0(k0: f64) -> Result<()> {
    if !(k0 > 0.0) || !k0.is_finite() {
        return Err(Error::Domain(format!("target rate K0 = {k0} must be > 0")));
    }
    Ok(())
}

/// Largest thermal photon number at which `protocol` still reaches `k0`.
///
/// Returns 0 when the rate is below `k0` even without thermal noise and
/// `+inf` on a lossless link, where the rate does not depend on `N`.
pub fn max_tolerable_thermal_noise(
    protocol: Protocol,
    settings: &RateSettings,
    sigma2: f64,
    link: &LinkModel,
    k0: f64,
) -> Result<f64> {
    check_k0(k0)?;
    let pn = PhaseNoise::new(sigma2)?;
    let eta = link.eta();
    let rate = |n: f64| -> Result<f64> {
        let ch = ThermalLossChannel::new(eta, n)?;
        Ok(evaluate(protocol, &ch, &pn, settings)?.rate)
    };
    let r0 = rate(0.0)?;
    if r0 < k0 {
        return Ok(0.0);
    }
    if eta >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let hi = eta / (1.0 - eta);
    let r_hi = rate(hi)?;
    if r_hi >= k0 {
        return Err(Error::MonotonicityViolation {
            lo: 0.0,
            hi,
            detail: format!("rate {r_hi:e} at the entanglement-breaking point still reaches K0"),
        });
    }
    bisect_frontier(&rate, 0.0, r0, hi, r_hi, k0)
}

/// Longest fibre distance (km) at which `protocol` still reaches `k0`.
pub fn max_distance(
    protocol: Protocol,
    settings: &RateSettings,
    sigma2: f64,
    n_th: f64,
    k0: f64,
    attenuation_db_per_km: f64,
) -> Result<f64> {
    check_k0(k0)?;
    let pn = PhaseNoise::new(sigma2)?;
    let rate = |d: f64| -> Result<f64> {
        let ch = ThermalLossChannel::new(LinkModel::new(attenuation_db_per_km, d)?.eta(), n_th)?;
        Ok(evaluate(protocol, &ch, &pn, settings)?.rate)
    };
    let r0 = rate(0.0)?;
    if r0 < k0 {
        return Ok(0.0);
    }
    let (mut lo, mut r_lo) = (0.0, r0);
    let mut hi = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        let r = rate(hi)?;
        if r > r_lo + 1e-9 * r_lo.max(k0) + RATE_NOISE {
            return Err(Error::MonotonicityViolation { lo, hi, detail: format!("rate grows from {r_lo:e} to {r:e}") });
        }
        if r < k0 {
            return bisect_frontier(&rate, lo, r_lo, hi, r, k0);
        }
        (lo, r_lo) = (hi, r);
        hi *= 2.0;
    }
    Err(Error::Domain(format!("rate stays above K0 = {k0:e} beyond {lo} km")))
}

/// The pair compared in the frontier maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonPair {
    pub cv: Protocol,
    pub cv_settings: RateSettings,
    pub dv: Protocol,
    pub dv_settings: RateSettings,
}

impl Default for ComparisonPair {
    /// Six-state against Sqz-Hom with the modulation optimized up to 15 dB.
    fn default() -> Self {
        ComparisonPair {
            cv: Protocol::SqzHom,
            cv_settings: RateSettings::optimized_cv(),
            dv: Protocol::SixState,
            dv_settings: RateSettings::default(),
        }
    }
}

/// One cell of a comparison map. `advantage` is `None` where neither
/// protocol reaches the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonCell {
    pub sigma2: f64,
    /// Distance in km for the noise frontier, thermal photons for the loss
    /// frontier.
    pub x: f64,
    pub cv: f64,
    pub dv: f64,
    pub advantage: Option<f64>,
}

fn map_cells<F>(sigma2_grid: &[f64], x_grid: &[f64], cell: F) -> Result<Vec<ComparisonCell>>
where
    F: Fn(f64, f64) -> Result<(f64, f64)> + Sync,
{
    use rayon::prelude::*;
    let points: Vec<(f64, f64)> = sigma2_grid.iter().flat_map(|&s| x_grid.iter().map(move |&x| (s, x))).collect();
    points
        .par_iter()
        .map(|&(sigma2, x)| {
            let (cv, dv) = cell(sigma2, x)?;
            Ok(ComparisonCell { sigma2, x, cv, dv, advantage: relative_advantage(cv, dv) })
        })
        .collect()
}

/// Relative difference of the tolerable thermal noise over
/// `(sigma^2, distance)` cells, row-major in `sigma2_grid`.
pub fn noise_frontier_map(
    pair: &ComparisonPair,
    sigma2_grid: &[f64],
    distance_grid: &[f64],
    k0: f64,
    attenuation_db_per_km: f64,
) -> Result<Vec<ComparisonCell>> {
    map_cells(sigma2_grid, distance_grid, |sigma2, d| {
        let link = LinkModel::new(attenuation_db_per_km, d)?;
        Ok((
            max_tolerable_thermal_noise(pair.cv, &pair.cv_settings, sigma2, &link, k0)?,
            max_tolerable_thermal_noise(pair.dv, &pair.dv_settings, sigma2, &link, k0)?,
        ))
    })
}

/// Relative difference of the maximum distance over `(sigma^2, N)` cells.
pub fn loss_frontier_map(
    pair: &ComparisonPair,
    sigma2_grid: &[f64],
    n_grid: &[f64],
    k0: f64,
    attenuation_db_per_km: f64,
) -> Result<Vec<ComparisonCell>> {
    map_cells(sigma2_grid, n_grid, |sigma2, n| {
        Ok((
            max_distance(pair.cv, &pair.cv_settings, sigma2, n, k0, attenuation_db_per_km)?,
            max_distance(pair.dv, &pair.dv_settings, sigma2, n, k0, attenuation_db_per_km)?,
        ))
    })
}

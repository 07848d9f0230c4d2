//! Gaussian CV key rates in shot-noise units (vacuum variance 1), reverse
//! reconciliation with perfect efficiency and no sifting factor.
//!
//! The entanglement-based source is a two-mode squeezed vacuum of quadrature
//! variance `mu`. Alice keeps mode A, mode B goes through the thermal-loss
//! channel, and phase noise shows up as excess noise on Bob's side.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::{PhaseNoise, ThermalLossChannel};
use crate::error::{Error, Result};
use crate::optimize::{grid_then_golden_max, linspace, logspace};
use crate::rate::{Diagnostics, KeyRateResult, Protocol};
use crate::scalar::bosonic_entropy;
use crate::symplectic;

const PHYSICALITY_SLACK: f64 = 1e-9;

/// Upper end of the trusted-noise search, in shot-noise units.
pub const XI_MAX: f64 = 100.0;
const XI_GRID_POINTS: usize = 128;
const XI_TOL: f64 = 1e-6;

/// Default modulation cap: 15 dB of squeezing.
pub const DEFAULT_MU_MAX: f64 = 31.622_776_601_683_793;
const MU_GRID_POINTS: usize = 64;
const MU_TOL: f64 = 1e-6;

/// Two-mode squeezed vacuum of quadrature variance `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSource {
    mu: f64,
}

impl CvSource {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu >= 1.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("source variance mu = {mu} must be finite and >= 1")));
        }
        Ok(CvSource { mu })
    }

    /// `mu = 10^(db / 10)`.
    pub fn from_squeezing_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    /// Prepare-and-measure view: `mu = V_A + 1`.
    pub fn from_modulation(v_a: f64) -> Result<Self> {
        Self::new(v_a + 1.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn v_a(&self) -> f64 {
        self.mu - 1.0
    }

    pub fn v_sq(&self) -> f64 {
        1.0 / self.mu
    }

    pub fn v_sig(&self) -> f64 {
        (self.mu * self.mu - 1.0) / self.mu
    }

    pub fn squeezing_db(&self) -> f64 {
        10.0 * self.mu.log10()
    }
}

/// Where the phase-induced excess noise is referred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Added to Bob's variance as measured.
    #[default]
    AtOutput,
    /// Added before the channel, so Bob sees `eta * epsilon`.
    AtInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CvExcessNoise {
    pub epsilon_theta: f64,
    pub placement: Placement,
}

impl CvExcessNoise {
    pub fn new(epsilon_theta: f64, placement: Placement) -> Result<Self> {
        if !(epsilon_theta >= 0.0) || !epsilon_theta.is_finite() {
            return Err(Error::Domain(format!("excess noise {epsilon_theta} must be finite and >= 0")));
        }
        Ok(CvExcessNoise { epsilon_theta, placement })
    }

    pub fn none() -> Self {
        CvExcessNoise::default()
    }

    pub fn with_placement(self, placement: Placement) -> Self {
        CvExcessNoise { placement, ..self }
    }
}

/// `epsilon = 2 V_A (1 - e^{-V_theta/2})`, identical in both quadratures.
pub fn phase_excess_noise(src: &CvSource, pn: &PhaseNoise) -> CvExcessNoise {
    CvExcessNoise { epsilon_theta: -2.0 * src.v_a() * (-pn.variance() / 2.0).exp_m1(), placement: Placement::AtOutput }
}

/// Total residual phase variance from the coherent-angle estimate and the
/// squeezing-angle noise.
pub fn combine_phase_variances(v_phi: f64, v_theta: f64) -> Result<f64> {
    if !(v_phi >= 0.0) || !(v_theta >= 0.0) {
        return Err(Error::Domain(format!("phase variances ({v_phi}, {v_theta}) must be >= 0")));
    }
    Ok(v_phi + v_theta)
}

/// Symmetric two-mode covariance `[[a I, c Z], [c Z, b I]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvCovariance {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CvCovariance {
    /// Checked constructor; rejects matrices whose smaller symplectic
    /// eigenvalue is below one.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let cov = CvCovariance { a, b, c };
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::Domain(format!("covariance entries must be finite, got ({a}, {b}, {c})")));
        }
        let (_, l2) = cov.symplectic_eigenvalues();
        if l2 < 1.0 - PHYSICALITY_SLACK || a < 1.0 - PHYSICALITY_SLACK || b < 1.0 - PHYSICALITY_SLACK {
            return Err(Error::NonPhysicalCovariance(l2.min(a).min(b)));
        }
        Ok(cov)
    }

    /// `a^2 + b^2 - 2c^2`.
    pub fn delta(&self) -> f64 {
        self.a * self.a + self.b * self.b - 2.0 * self.c * self.c
    }

    /// `ab - c^2`, the square root of the determinant.
    pub fn d(&self) -> f64 {
        self.a * self.b - self.c * self.c
    }

    pub fn det(&self) -> f64 {
        self.d().powi(2)
    }

    /// Closed-form symplectic eigenvalues, larger first.
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        let delta = self.delta();
        let disc = (delta * delta - 4.0 * self.det()).max(0.0).sqrt();
        (((delta + disc) / 2.0).sqrt(), ((delta - disc) / 2.0).max(0.0).sqrt())
    }

    /// Explicit 4x4 matrix in `(x_A, p_A, x_B, p_B)` ordering.
    pub fn matrix(&self) -> DMatrix<f64> {
        symplectic::two_mode_covariance(self.a, self.b, self.c)
    }

    /// Von Neumann entropy of the joint state, which equals Eve's entropy.
    pub fn eve_entropy(&self) -> Result<f64> {
        let (l1, l2) = self.symplectic_eigenvalues();
        Ok(bosonic_entropy((l1 - 1.0) / 2.0)? + bosonic_entropy((l2 - 1.0) / 2.0)?)
    }
}

/// `a = mu`, `c = sqrt(eta (mu^2 - 1))`, `b = eta mu + (1 - eta)(2N + 1) + eps`.
pub fn build_covariance(src: &CvSource, ch: &ThermalLossChannel, ex: &CvExcessNoise) -> Result<CvCovariance> {
    let mu = src.mu();
    let eta = ch.eta();
    let eps = match ex.placement {
        Placement::AtOutput => ex.epsilon_theta,
        Placement::AtInput => eta * ex.epsilon_theta,
    };
    let b = eta * mu + (1.0 - eta) * (2.0 * ch.n_th() + 1.0) + eps;
    let c = (eta * (mu * mu - 1.0)).sqrt();
    CvCovariance::new(mu, b, c)
}

/// Pieces of `K = I_AB - chi_EB` with `chi_EB = S(E) - S(E | Bob)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolevoTerms {
    pub mutual_information: f64,
    pub eve_entropy: f64,
    pub conditional_entropy: f64,
    pub holevo: f64,
}

impl HolevoTerms {
    fn new(mutual_information: f64, eve_entropy: f64, conditional_entropy: f64) -> Self {
        HolevoTerms { mutual_information, eve_entropy, conditional_entropy, holevo: eve_entropy - conditional_entropy }
    }

    pub fn key_rate(&self) -> f64 {
        self.mutual_information - self.holevo
    }
}

fn cv_result(protocol: Protocol, cov: &CvCovariance, terms: HolevoTerms, param: Option<f64>) -> KeyRateResult {
    KeyRateResult::new(protocol, terms.key_rate(), param, Diagnostics::Cv { covariance: *cov, terms })
}

/// Squeezed states with homodyne detection at Bob.
pub fn sqz_hom_terms(cov: &CvCovariance) -> Result<HolevoTerms> {
    let CvCovariance { a, b, c } = *cov;
    let mutual = 0.5 * (b / (b - c * c / a)).log2();
    let lambda3 = (a * (a - c * c / b)).max(0.0).sqrt();
    let conditional = bosonic_entropy((lambda3 - 1.0) / 2.0)?;
    Ok(HolevoTerms::new(mutual, cov.eve_entropy()?, conditional))
}

pub fn sqz_hom_rate(cov: &CvCovariance) -> Result<KeyRateResult> {
    Ok(cv_result(Protocol::SqzHom, cov, sqz_hom_terms(cov)?, None))
}

/// Symplectic eigenvalues `(lambda_3, lambda_4)` of Eve's conditional state
/// when Bob adds trusted noise `xi_b` before his homodyne.
pub fn trusted_noise_conditional_eigenvalues(cov: &CvCovariance, xi_b: f64) -> (f64, f64) {
    let CvCovariance { a, b, .. } = *cov;
    let d = cov.d();
    let big_a = (b + a * d + xi_b * cov.delta()) / (b + xi_b);
    let big_b = d * (a + xi_b * d) / (b + xi_b);
    let disc = (big_a * big_a - 4.0 * big_b).max(0.0).sqrt();
    (((big_a + disc) / 2.0).sqrt(), ((big_a - disc) / 2.0).max(0.0).sqrt())
}

pub fn sqz_hom_trusted_noise_terms(cov: &CvCovariance, xi_b: f64) -> Result<HolevoTerms> {
    if !(xi_b >= 0.0) || !xi_b.is_finite() {
        return Err(Error::Domain(format!("trusted noise {xi_b} must be finite and >= 0")));
    }
    let CvCovariance { a, b, c } = *cov;
    let mutual = 0.5 * ((b + xi_b) / (b - c * c / a + xi_b)).log2();
    let (l3, l4) = trusted_noise_conditional_eigenvalues(cov, xi_b);
    let conditional = bosonic_entropy((l3 - 1.0) / 2.0)? + bosonic_entropy((l4 - 1.0) / 2.0)?;
    Ok(HolevoTerms::new(mutual, cov.eve_entropy()?, conditional))
}

/// Sqz-Hom with trusted Gaussian noise `xi_b` at Bob.
pub fn sqz_hom_trusted_noise_rate(cov: &CvCovariance, xi_b: f64) -> Result<KeyRateResult> {
    let terms = sqz_hom_trusted_noise_terms(cov, xi_b)?;
    Ok(cv_result(Protocol::NSqzHom, cov, terms, Some(xi_b)))
}

/// Best trusted noise in `[0, XI_MAX]`; falls back to `xi_b = 0`.
pub fn optimize_trusted_noise(cov: &CvCovariance) -> Result<KeyRateResult> {
    let at_zero = sqz_hom_trusted_noise_rate(cov, 0.0)?;
    let objective = |xi: f64| sqz_hom_trusted_noise_terms(cov, xi).map(|t| t.key_rate()).unwrap_or(f64::NAN);
    let mut grid = vec![0.0];
    grid.extend(logspace(1e-4, XI_MAX, XI_GRID_POINTS - 1));
    match grid_then_golden_max(&objective, &grid, XI_TOL) {
        Some(m) if m.value > at_zero.raw_rate => sqz_hom_trusted_noise_rate(cov, m.x),
        _ => Ok(at_zero),
    }
}

/// Covariance of Eve's purification conditioned on Bob's measurement when
/// Bob's trusted noise comes from one arm of an EPR pair of variance
/// `max(1, xi_b)` mixed in on a beamsplitter. Modes are ordered
/// `(A, N', M)`; the explicit counterpart of
/// [`trusted_noise_conditional_eigenvalues`].
pub fn trusted_noise_conditional_matrix(cov: &CvCovariance, xi_b: f64) -> DMatrix<f64> {
    let nu = xi_b.max(1.0);
    let transmissivity = nu / (nu + xi_b);
    let epr = symplectic::two_mode_covariance(nu, nu, (nu * nu - 1.0).sqrt());
    let joint = symplectic::direct_sum(&cov.matrix(), &epr);
    let mixed = symplectic::apply_beamsplitter(&joint, 1, 2, transmissivity);
    symplectic::condition_on_homodyne_x(&mixed, 1)
}

/// GG02: Gaussian-modulated coherent states with heterodyne detection.
/// Here `a = V_A + 1`.
pub fn gg02_terms(cov: &CvCovariance) -> Result<HolevoTerms> {
    let CvCovariance { a, b, c } = *cov;
    let mutual = ((b + 1.0) / (b - c * c / (a + 1.0) + 1.0)).log2();
    let lambda3 = a - c * c / (b + 1.0);
    let conditional = bosonic_entropy((lambda3 - 1.0) / 2.0)?;
    Ok(HolevoTerms::new(mutual, cov.eve_entropy()?, conditional))
}

pub fn gg02_heterodyne_rate(src: &CvSource, ch: &ThermalLossChannel, ex: &CvExcessNoise) -> Result<KeyRateResult> {
    let cov = build_covariance(src, ch, ex)?;
    Ok(cv_result(Protocol::Gg02, &cov, gg02_terms(&cov)?, None))
}

/// CV rate for `protocol` at a fixed source. NSqz-Hom optimizes its trusted
/// noise.
pub fn cv_rate(
    protocol: Protocol,
    src: &CvSource,
    ch: &ThermalLossChannel,
    pn: &PhaseNoise,
    placement: Placement,
) -> Result<KeyRateResult> {
    let ex = phase_excess_noise(src, pn).with_placement(placement);
    match protocol {
        Protocol::SqzHom => sqz_hom_rate(&build_covariance(src, ch, &ex)?),
        Protocol::NSqzHom => optimize_trusted_noise(&build_covariance(src, ch, &ex)?),
        Protocol::Gg02 => gg02_heterodyne_rate(src, ch, &ex),
        other => Err(Error::Domain(format!("{other} is not a CV protocol"))),
    }
}

/// Maximize a CV rate over `mu in [1, mu_max]`, recomputing the phase excess
/// noise at every trial source. `optimal_param` is `V_A* = mu* - 1`.
pub fn optimize_modulation(
    protocol: Protocol,
    ch: &ThermalLossChannel,
    pn: &PhaseNoise,
    mu_max: f64,
    placement: Placement,
) -> Result<KeyRateResult> {
    if protocol.is_dv() {
        return Err(Error::Domain(format!("{protocol} is not a CV protocol")));
    }
    optimize_source(mu_max, |src| cv_rate(protocol, src, ch, pn, placement))
}

/// Maximize `rate_at` over sources with `mu in [1, mu_max]`, searching in
/// `ln mu`. The cap itself is always tried, since rates without phase noise
/// peak there. `optimal_param` is replaced by `V_A*`.
pub fn optimize_source<F>(mu_max: f64, rate_at: F) -> Result<KeyRateResult>
where
    F: Fn(&CvSource) -> Result<KeyRateResult>,
{
    if !(mu_max >= 1.0) || !mu_max.is_finite() {
        return Err(Error::Domain(format!("mu_max = {mu_max} must be finite and >= 1")));
    }
    let at = |mu: f64| CvSource::new(mu.clamp(1.0, mu_max)).and_then(|s| rate_at(&s));
    let objective = |x: f64| at(x.exp()).map(|r| r.raw_rate).unwrap_or(f64::NAN);
    let top = at(mu_max)?;
    let mut best = (top, mu_max);
    if let Some(m) = grid_then_golden_max(&objective, &linspace(0.0, mu_max.ln(), MU_GRID_POINTS), MU_TOL) {
        let mu = m.x.exp().clamp(1.0, mu_max);
        let candidate = at(mu)?;
        if candidate.raw_rate > best.0.raw_rate {
            best = (candidate, mu);
        }
    }
    let (mut result, mu) = best;
    result.optimal_param = Some(mu - 1.0);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MU_15DB: f64 = DEFAULT_MU_MAX;

    fn ch(eta: f64, n: f64) -> ThermalLossChannel {
        ThermalLossChannel::new(eta, n).unwrap()
    }

    fn cov(mu: f64, eta: f64, n: f64) -> CvCovariance {
        build_covariance(&CvSource::new(mu).unwrap(), &ch(eta, n), &CvExcessNoise::none()).unwrap()
    }

    #[test]
    fn source_conversions() {
        let s = CvSource::from_squeezing_db(15.0).unwrap();
        assert!((s.mu() - MU_15DB).abs() < 1e-12);
        assert!((s.squeezing_db() - 15.0).abs() < 1e-12);
        assert!((s.v_sq() * s.mu() - 1.0).abs() < 1e-15);
        assert!((s.v_sig() - (s.mu() - 1.0 / s.mu())).abs() < 1e-12);
        assert!(CvSource::new(0.5).is_err());
    }

    #[test]
    fn excess_noise_examples() {
        let src = CvSource::from_modulation(30.0).unwrap();
        assert_eq!(phase_excess_noise(&src, &PhaseNoise::none()).epsilon_theta, 0.0);
        let e = phase_excess_noise(&src, &PhaseNoise::new(1e-3).unwrap()).epsilon_theta;
        // 60 (1 - e^{-5e-4}) from mpmath.
        assert!((e - 0.029_992_501_249_843_766).abs() < 1e-15);
        let e = phase_excess_noise(&CvSource::new(MU_15DB).unwrap(), &PhaseNoise::new(0.04).unwrap()).epsilon_theta;
        assert!((e - 2.0 * (MU_15DB - 1.0) * (1.0 - (-0.02f64).exp())).abs() < 1e-14);
        assert!((e - 1.2127).abs() < 1e-4);
    }

    #[test]
    fn combine_phase_examples() {
        assert_eq!(combine_phase_variances(0.0, 0.0).unwrap(), 0.0);
        assert!((combine_phase_variances(0.001, 0.002).unwrap() - 0.003).abs() < 1e-18);
        assert_eq!(combine_phase_variances(0.04, 0.0).unwrap(), 0.04);
        assert!(combine_phase_variances(-1.0, 0.0).is_err());
    }

    #[test]
    fn covariance_examples() {
        let c = cov(MU_15DB, 1.0, 0.0);
        assert!((c.a - MU_15DB).abs() < 1e-12 && (c.b - MU_15DB).abs() < 1e-12);
        assert!((c.c - (MU_15DB * MU_15DB - 1.0).sqrt()).abs() < 1e-12);
        let (l1, l2) = c.symplectic_eigenvalues();
        assert!((l1 - 1.0).abs() < 1e-9 && (l2 - 1.0).abs() < 1e-9);

        let c = cov(2.0, 0.5, 0.0);
        assert_eq!((c.a, c.b), (2.0, 1.5));
        assert!((c.c - 1.5f64.sqrt()).abs() < 1e-15);

        let c = cov(2.0, 0.0, 0.0);
        assert_eq!((c.b, c.c), (1.0, 0.0));
    }

    #[test]
    fn covariance_rejects_unphysical() {
        assert!(matches!(CvCovariance::new(2.0, 2.0, 1.9), Err(Error::NonPhysicalCovariance(_))));
    }

    #[test]
    fn excess_noise_placement() {
        let src = CvSource::new(5.0).unwrap();
        let ex = CvExcessNoise::new(0.4, Placement::AtOutput).unwrap();
        let out = build_covariance(&src, &ch(0.5, 0.1), &ex).unwrap();
        let inp = build_covariance(&src, &ch(0.5, 0.1), &ex.with_placement(Placement::AtInput)).unwrap();
        assert!((out.b - inp.b - 0.2).abs() < 1e-15);
        assert_eq!(out.c, inp.c);
    }

    #[test]
    fn closed_form_eigenvalues_match_matrix() {
        for &(mu, eta, n) in &[(MU_15DB, 0.5, 0.4), (2.0, 0.3, 1.0), (10.0, 0.9, 0.01), (1.5, 0.0, 2.0)] {
            let c = cov(mu, eta, n);
            let (l1, l2) = c.symplectic_eigenvalues();
            let m = symplectic::symplectic_eigenvalues(&c.matrix()).unwrap();
            assert!((m[0] - l2).abs() < 1e-9 && (m[1] - l1).abs() < 1e-9);
        }
    }

    #[test]
    fn sqz_hom_examples() {
        let r = sqz_hom_rate(&cov(MU_15DB, 1.0, 0.0)).unwrap();
        assert!((r.raw_rate - MU_15DB.log2()).abs() < 1e-6);
        assert!((r.raw_rate - 4.98289).abs() < 1e-5);
        for n in [0.0, 0.5, 3.0] {
            assert!(sqz_hom_rate(&cov(2.0, 0.0, n)).unwrap().raw_rate <= 1e-12);
        }
        let r = sqz_hom_rate(&cov(MU_15DB, 0.5, 0.0)).unwrap();
        assert!((r.raw_rate - 1.0).abs() < 0.1);
    }

    #[test]
    fn conditional_eigenvalue_matches_matrix() {
        let c = cov(MU_15DB, 0.6, 0.2);
        let conditioned = symplectic::condition_on_homodyne_x(&c.matrix(), 1);
        let s = symplectic::symplectic_eigenvalues(&conditioned).unwrap();
        assert!((s[0] - (c.a * (c.a - c.c * c.c / c.b)).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn trusted_noise_limits() {
        for &(mu, eta, n) in &[(MU_15DB, 0.5, 0.4), (MU_15DB, 1.0, 0.0), (3.0, 0.2, 0.05)] {
            let c = cov(mu, eta, n);
            let plain = sqz_hom_rate(&c).unwrap().raw_rate;
            let zero = sqz_hom_trusted_noise_rate(&c, 0.0).unwrap().raw_rate;
            assert!((plain - zero).abs() < 1e-10);
        }
        let t = sqz_hom_trusted_noise_terms(&cov(MU_15DB, 1.0, 0.0), 1.0).unwrap();
        assert!(t.holevo.abs() < 1e-9);
    }

    #[test]
    fn trusted_noise_closed_form_matches_matrix_model() {
        for &xi in &[0.0, 0.3, 1.0, 2.0, 40.0] {
            for &(mu, eta, n) in &[(MU_15DB, 0.5, 0.4), (5.0, 0.7, 0.1)] {
                let c = cov(mu, eta, n);
                let (l3, l4) = trusted_noise_conditional_eigenvalues(&c, xi);
                let s = symplectic::symplectic_eigenvalues(&trusted_noise_conditional_matrix(&c, xi)).unwrap();
                assert!((s[0] - 1.0).abs() < 1e-9, "xi = {xi}: {s:?}");
                assert!((s[1] - l4).abs() < 1e-9 && (s[2] - l3).abs() < 1e-9, "xi = {xi}: {s:?} vs {l3}, {l4}");
            }
        }
    }

    #[test]
    fn trusted_noise_optimizer() {
        let r = optimize_trusted_noise(&cov(MU_15DB, 1.0, 0.0)).unwrap();
        assert_eq!(r.optimal_param, Some(0.0));

        let c = cov(MU_15DB, 0.9, 0.01);
        assert!(optimize_trusted_noise(&c).unwrap().raw_rate >= sqz_hom_rate(&c).unwrap().raw_rate - 1e-12);

        let c = cov(MU_15DB, 0.5, 0.4);
        let best = optimize_trusted_noise(&c).unwrap();
        assert!(best.optimal_param.unwrap() > 0.0);
        assert!(best.raw_rate > sqz_hom_rate(&c).unwrap().raw_rate);
    }

    #[test]
    fn gg02_examples() {
        let src = CvSource::from_modulation(3.0).unwrap();
        let r = gg02_heterodyne_rate(&src, &ch(1.0, 0.0), &CvExcessNoise::none()).unwrap();
        let Diagnostics::Cv { terms, .. } = r.diagnostics else { panic!() };
        assert!(terms.holevo.abs() < 1e-9);
        // log2((b + 1) / (b - c^2/(a + 1) + 1)) with a = b = 4, c^2 = 15.
        assert!((r.raw_rate - 2.5f64.log2()).abs() < 1e-12);

        for n in [0.0, 1.0] {
            let r = gg02_heterodyne_rate(&src, &ch(0.0, n), &CvExcessNoise::none()).unwrap();
            assert!(r.raw_rate <= 1e-12);
        }

        let src = CvSource::from_modulation(30.6228).unwrap();
        let gg = gg02_heterodyne_rate(&src, &ch(0.5, 0.0), &CvExcessNoise::none()).unwrap();
        let sq = sqz_hom_rate(&cov(src.mu(), 0.5, 0.0)).unwrap();
        assert!(gg.raw_rate < sq.raw_rate);
    }

    #[test]
    fn modulation_optimizer() {
        let r = optimize_modulation(Protocol::SqzHom, &ch(0.5, 0.0), &PhaseNoise::none(), MU_15DB, Placement::AtOutput)
            .unwrap();
        assert!((r.optimal_param.unwrap() - (MU_15DB - 1.0)).abs() < 1e-9);

        let r = optimize_modulation(
            Protocol::SqzHom,
            &ch(0.9, 0.0),
            &PhaseNoise::new(0.1).unwrap(),
            MU_15DB,
            Placement::AtOutput,
        )
        .unwrap();
        assert!(r.optimal_param.unwrap() < MU_15DB - 1.0 - 1e-3);

        let r = optimize_modulation(Protocol::SqzHom, &ch(0.5, 0.0), &PhaseNoise::none(), 1.0, Placement::AtOutput)
            .unwrap();
        assert_eq!(r.rate, 0.0);
        assert!(
            optimize_modulation(Protocol::Bb84, &ch(0.5, 0.0), &PhaseNoise::none(), 2.0, Placement::AtOutput).is_err()
        );
    }

    #[test]
    fn sqz_hom_monotone_on_grid() {
        for &eta in &[0.1, 0.5, 0.9] {
            let mut prev = f64::INFINITY;
            for i in 0..20 {
                let r = sqz_hom_rate(&cov(MU_15DB, eta, i as f64 * 0.05)).unwrap().raw_rate;
                assert!(r <= prev + 1e-12);
                prev = r;
            }
            let mut prev = f64::INFINITY;
            for i in 0..20 {
                let ex = CvExcessNoise::new(i as f64 * 0.1, Placement::AtOutput).unwrap();
                let c = build_covariance(&CvSource::new(MU_15DB).unwrap(), &ch(eta, 0.05), &ex).unwrap();
                let r = sqz_hom_rate(&c).unwrap().raw_rate;
                assert!(r <= prev + 1e-12);
                prev = r;
            }
        }
    }

    proptest! {
        #[test]
        fn pure_channel_is_pure(mu in 1.0f64..100.0) {
            let c = cov(mu, 1.0, 0.0);
            let (l1, l2) = c.symplectic_eigenvalues();
            prop_assert!((l1 - 1.0).abs() < 1e-9 && (l2 - 1.0).abs() < 1e-9);
            prop_assert!(c.eve_entropy().unwrap().abs() < 1e-9);
        }

        #[test]
        fn closed_form_spectrum_agrees(mu in 1.0f64..40.0, eta in 0.0f64..=1.0, n in 0.0f64..3.0) {
            let c = cov(mu, eta, n);
            let (l1, l2) = c.symplectic_eigenvalues();
            let m = symplectic::symplectic_eigenvalues(&c.matrix()).unwrap();
            prop_assert!((m[0] - l2).abs() < 1e-9 * l1.max(1.0));
            prop_assert!((m[1] - l1).abs() < 1e-9 * l1.max(1.0));
        }

        #[test]
        fn trusted_noise_zero_limit(mu in 1.0f64..40.0, eta in 0.01f64..=1.0, n in 0.0f64..2.0) {
            let c = cov(mu, eta, n);
            let a = sqz_hom_rate(&c).unwrap().raw_rate;
            let b = sqz_hom_trusted_noise_rate(&c, 0.0).unwrap().raw_rate;
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

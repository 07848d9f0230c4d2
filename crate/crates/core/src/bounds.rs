//! Lower and upper bounds on the secret-key capacity of the thermal-loss
//! channel.

use serde::{Deserialize, Serialize};

use crate::channel::ThermalLossChannel;
use crate::error::{Error, Result};
use crate::rate::KeyRateResult;
use crate::scalar::bosonic_entropy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityBounds {
    /// Reverse coherent information, `-log2(1 - eta) - G(N)`.
    pub lower: f64,
    /// Relative-entropy bound, absent for entanglement-breaking channels.
    pub upper: Option<f64>,
    pub eb_breaking: bool,
}

/// Both bounds for `ch`. A lossless channel returns `+inf` for both.
pub fn capacity_bounds(ch: &ThermalLossChannel) -> CapacityBounds {
    let (eta, n) = (ch.eta(), ch.n_th());
    if eta >= 1.0 {
        return CapacityBounds { lower: f64::INFINITY, upper: Some(f64::INFINITY), eb_breaking: false };
    }
    let g = bosonic_entropy(n).expect("thermal photon number is validated non-negative");
    let lower = -(1.0 - eta).log2() - g;
    let eb_breaking = ch.is_entanglement_breaking();
    let upper = if eb_breaking { None } else { Some(-((1.0 - eta).log2() + n * eta.log2()) - g) };
    CapacityBounds { lower, upper, eb_breaking }
}

/// Clamped rate divided by the upper bound. Unavailable when the bound is
/// absent, non-positive or infinite.
pub fn normalize_rate(k: &KeyRateResult, bounds: &CapacityBounds) -> Result<f64> {
    match bounds.upper {
        Some(upper) if upper > 0.0 && upper.is_finite() => Ok((k.rate / upper).clamp(0.0, 1.0)),
        _ => Err(Error::NormalizationUnavailable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PhaseNoise;
    use crate::cv::{cv_rate, CvSource, Placement};
    use crate::rate::{Diagnostics, Protocol};
    use proptest::prelude::*;

    fn ch(eta: f64, n: f64) -> ThermalLossChannel {
        ThermalLossChannel::new(eta, n).unwrap()
    }

    fn with_rate(rate: f64) -> KeyRateResult {
        let stats = crate::channel::DvChannelStats::symmetric(1.0, 0.0).unwrap();
        KeyRateResult::new(Protocol::Bb84, rate, None, Diagnostics::Dv(stats))
    }

    #[test]
    fn examples() {
        let b = capacity_bounds(&ch(0.5, 0.0));
        assert_eq!(b.lower, 1.0);
        assert_eq!(b.upper, Some(1.0));

        let b = capacity_bounds(&ch(0.5, 1.0));
        assert!(b.eb_breaking && b.upper.is_none());

        // mpmath, 30 digits, rounded to f64.
        let b = capacity_bounds(&ch(0.8, 0.1));
        assert!((b.lower - 1.838_481_409_273_697_6).abs() < 1e-14);
        assert!((b.upper.unwrap() - 1.870_674_218_762_434).abs() < 1e-14);

        let b = capacity_bounds(&ch(1.0, 0.3));
        assert_eq!(b.lower, f64::INFINITY);
    }

    #[test]
    fn normalization() {
        let b = capacity_bounds(&ch(0.5, 0.0));
        assert_eq!(normalize_rate(&with_rate(0.0), &b).unwrap(), 0.0);
        assert_eq!(normalize_rate(&with_rate(1.0), &b).unwrap(), 1.0);
        assert_eq!(normalize_rate(&with_rate(-3.0), &b).unwrap(), 0.0);
        assert_eq!(
            normalize_rate(&with_rate(0.1), &capacity_bounds(&ch(0.5, 1.0))),
            Err(Error::NormalizationUnavailable)
        );
        let sq = cv_rate(
            Protocol::SqzHom,
            &CvSource::from_squeezing_db(15.0).unwrap(),
            &ch(0.5, 0.0),
            &PhaseNoise::none(),
            Placement::AtOutput,
        )
        .unwrap();
        let v = normalize_rate(&sq, &b).unwrap();
        assert!(v > 0.9 && v <= 1.0);
    }

    proptest! {
        #[test]
        fn pure_loss_bounds_coincide(eta in 0.0f64..0.999) {
            let b = capacity_bounds(&ch(eta, 0.0));
            let expected = -(1.0 - eta).log2();
            prop_assert!((b.lower - expected).abs() <= 1e-12);
            prop_assert!((b.upper.unwrap() - expected).abs() <= 1e-12);
        }

        #[test]
        fn lower_monotone(eta in 0.01f64..0.98, n in 0.0f64..3.0, d in 0.001f64..0.01) {
            let base = capacity_bounds(&ch(eta, n)).lower;
            prop_assert!(capacity_bounds(&ch(eta + d, n)).lower > base);
            prop_assert!(capacity_bounds(&ch(eta, n + d)).lower < base);
        }

        #[test]
        fn upper_dominates_lower(eta in 0.01f64..0.99, n in 0.0f64..3.0) {
            let b = capacity_bounds(&ch(eta, n));
            if let Some(u) = b.upper {
                prop_assert!(u >= b.lower);
            }
        }
    }
}

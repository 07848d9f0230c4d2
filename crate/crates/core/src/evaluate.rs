//! One entry point that rates any protocol at a channel point.

use serde::{Deserialize, Serialize};

use crate::channel::{combined_channel_stats, PhaseNoise, ThermalLossChannel};
use crate::cv::{self, CvSource, Placement, DEFAULT_MU_MAX};
use crate::dv;
use crate::error::Result;
use crate::rate::{KeyRateResult, Protocol};

/// How the CV source variance is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourcePolicy {
    /// Fixed TMSV variance.
    Mu(f64),
    /// Fixed squeezing in dB, `mu = 10^(db/10)`.
    SqueezingDb(f64),
    /// Optimize the modulation variance up to `mu_max`.
    OptimizeVa {
        #[serde(default = "default_mu_max")]
        mu_max: f64,
    },
}

fn default_mu_max() -> f64 {
    DEFAULT_MU_MAX
}

impl Default for SourcePolicy {
    fn default() -> Self {
        SourcePolicy::OptimizeVa { mu_max: DEFAULT_MU_MAX }
    }
}

/// A free protocol parameter: optimized, or pinned to a value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FreeParam {
    #[default]
    Optimize,
    Fixed(f64),
}

impl FreeParam {
    pub fn from_option(value: Option<f64>) -> Self {
        value.map_or(FreeParam::Optimize, FreeParam::Fixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateSettings {
    pub source: SourcePolicy,
    pub placement: Placement,
    /// Noisy-preprocessing flip probability for NBB84 and N6S.
    pub flip: FreeParam,
    /// Trusted noise for NSqz-Hom.
    pub trusted_noise: FreeParam,
}

impl RateSettings {
    /// The comparison setting: modulation optimized up to 15 dB.
    pub fn optimized_cv() -> Self {
        RateSettings::default()
    }

    pub fn with_source(self, source: SourcePolicy) -> Self {
        RateSettings { source, ..self }
    }
}

/// Rate of `protocol` over the thermal-loss channel `ch` followed by phase
/// noise `pn`.
pub fn evaluate(
    protocol: Protocol,
    ch: &ThermalLossChannel,
    pn: &PhaseNoise,
    settings: &RateSettings,
) -> Result<KeyRateResult> {
    if protocol.is_dv() {
        let stats = combined_channel_stats(ch, pn)?;
        return match (protocol, settings.flip) {
            (Protocol::Bb84, _) => dv::bb84_rate(&stats),
            (Protocol::SixState, _) => dv::six_state_rate(&stats),
            (Protocol::NBb84, FreeParam::Optimize) => dv::bb84_noisy_rate(&stats),
            (Protocol::NBb84, FreeParam::Fixed(q)) => dv::bb84_noisy_rate_at(&stats, q),
            (Protocol::NSixState, FreeParam::Optimize) => dv::six_state_noisy_rate(&stats),
            (Protocol::NSixState, FreeParam::Fixed(q)) => dv::six_state_noisy_rate_at(&stats, q),
            _ => unreachable!("DV protocols are matched above"),
        };
    }
    let at_source = |src: &CvSource| -> Result<KeyRateResult> {
        let ex = cv::phase_excess_noise(src, pn).with_placement(settings.placement);
        match (protocol, settings.trusted_noise) {
            (Protocol::NSqzHom, FreeParam::Fixed(xi)) => {
                cv::sqz_hom_trusted_noise_rate(&cv::build_covariance(src, ch, &ex)?, xi)
            }
            _ => cv::cv_rate(protocol, src, ch, pn, settings.placement),
        }
    };
    match settings.source {
        SourcePolicy::Mu(mu) => at_source(&CvSource::new(mu)?),
        SourcePolicy::SqueezingDb(db) => at_source(&CvSource::from_squeezing_db(db)?),
        SourcePolicy::OptimizeVa { mu_max } => cv::optimize_source(mu_max, at_source),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(eta: f64, n: f64) -> ThermalLossChannel {
        ThermalLossChannel::new(eta, n).unwrap()
    }

    #[test]
    fn lossless_point() {
        let s = RateSettings::default();
        let c = ch(1.0, 0.0);
        let pn = PhaseNoise::none();
        assert_eq!(evaluate(Protocol::Bb84, &c, &pn, &s).unwrap().rate, 0.5);
        assert_eq!(evaluate(Protocol::SixState, &c, &pn, &s).unwrap().rate, 0.5);
        let r = evaluate(Protocol::SqzHom, &c, &pn, &s).unwrap();
        assert!((r.rate - DEFAULT_MU_MAX.log2()).abs() < 1e-6);
    }

    #[test]
    fn fixed_parameters_are_honoured() {
        let c = ch(0.7, 0.05);
        let pn = PhaseNoise::none();
        let s = RateSettings {
            flip: FreeParam::Fixed(0.1),
            trusted_noise: FreeParam::Fixed(0.5),
            source: SourcePolicy::SqueezingDb(10.0),
            ..RateSettings::default()
        };
        assert_eq!(evaluate(Protocol::NBb84, &c, &pn, &s).unwrap().optimal_param, Some(0.1));
        assert_eq!(evaluate(Protocol::NSixState, &c, &pn, &s).unwrap().optimal_param, Some(0.1));
        assert_eq!(evaluate(Protocol::NSqzHom, &c, &pn, &s).unwrap().optimal_param, Some(0.5));
    }

    #[test]
    fn optimized_source_dominates_fixed() {
        let c = ch(0.9, 0.01);
        let pn = PhaseNoise::new(0.1).unwrap();
        let fixed = RateSettings::default().with_source(SourcePolicy::SqueezingDb(15.0));
        for p in [Protocol::SqzHom, Protocol::NSqzHom, Protocol::Gg02] {
            let a = evaluate(p, &c, &pn, &RateSettings::default()).unwrap().raw_rate;
            let b = evaluate(p, &c, &pn, &fixed).unwrap().raw_rate;
            assert!(a >= b - 1e-12, "{p}");
        }
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::DvChannelStats;
use crate::cv::{CvCovariance, HolevoTerms};
use crate::error::Error;

/// Protocols this crate knows how to rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Bb84,
    SixState,
    NBb84,
    NSixState,
    SqzHom,
    NSqzHom,
    Gg02,
}

impl Protocol {
    pub const ALL: [Protocol; 7] = [
        Protocol::Bb84,
        Protocol::SixState,
        Protocol::NBb84,
        Protocol::NSixState,
        Protocol::SqzHom,
        Protocol::NSqzHom,
        Protocol::Gg02,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bb84 => "bb84",
            Protocol::SixState => "six_state",
            Protocol::NBb84 => "n_bb84",
            Protocol::NSixState => "n_six_state",
            Protocol::SqzHom => "sqz_hom",
            Protocol::NSqzHom => "n_sqz_hom",
            Protocol::Gg02 => "gg02",
        }
    }

    pub fn is_dv(self) -> bool {
        matches!(self, Protocol::Bb84 | Protocol::SixState | Protocol::NBb84 | Protocol::NSixState)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        let p = match key.as_str() {
            "bb84" => Protocol::Bb84,
            "six_state" | "6s" | "sixstate" => Protocol::SixState,
            "n_bb84" | "nbb84" => Protocol::NBb84,
            "n_six_state" | "n6s" | "nsixstate" => Protocol::NSixState,
            "sqz_hom" | "sqzhom" => Protocol::SqzHom,
            "n_sqz_hom" | "nsqzhom" => Protocol::NSqzHom,
            "gg02" => Protocol::Gg02,
            _ => return Err(Error::Config(format!("unknown protocol '{s}'"))),
        };
        Ok(p)
    }
}

/// Intermediate quantities behind a rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Diagnostics {
    Dv(DvChannelStats),
    Cv { covariance: CvCovariance, terms: HolevoTerms },
}

/// Asymptotic key rate in bits per channel use (per polarization channel for
/// the dual-rail protocols).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyRateResult {
    pub protocol: Protocol,
    /// May be negative.
    pub raw_rate: f64,
    /// `max(raw_rate, 0)`.
    pub rate: f64,
    /// Preprocessing flip probability, trusted noise or modulation variance,
    /// when the protocol has a free parameter.
    pub optimal_param: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl KeyRateResult {
    pub fn new(protocol: Protocol, raw_rate: f64, optimal_param: Option<f64>, diagnostics: Diagnostics) -> Self {
        KeyRateResult { protocol, raw_rate, rate: raw_rate.max(0.0), optimal_param, diagnostics }
    }
}

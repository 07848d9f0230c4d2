//! Qubit-level statistics of the dual-rail encoding sent through a thermal-loss
//! channel followed by wrapped-normal phase diffusion.
//!
//! Both rails see the same transmissivity and thermal occupation, with
//! independent environments and independent, identically distributed phases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::circular_mean_wrapped_normal;

/// Beamsplitter of transmissivity `eta` mixing the signal with a thermal
/// state of mean photon number `n_th`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalLossChannel {
    eta: f64,
    n_th: f64,
}

impl ThermalLossChannel {
    pub fn new(eta: f64, n_th: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidChannel(format!("transmissivity {eta} outside [0, 1]")));
        }
        if !(n_th >= 0.0) || !n_th.is_finite() {
            return Err(Error::InvalidChannel(format!("thermal photon number {n_th} must be finite and >= 0")));
        }
        Ok(ThermalLossChannel { eta, n_th })
    }

    /// Dual-rail channel with per-rail parameters. Only symmetric rails are
    /// supported.
    pub fn dual_rail(rail_1: (f64, f64), rail_2: (f64, f64)) -> Result<Self> {
        if rail_1 != rail_2 {
            return Err(Error::InvalidChannel(format!("asymmetric rails {rail_1:?} / {rail_2:?} are not supported")));
        }
        Self::new(rail_1.0, rail_1.1)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n_th(&self) -> f64 {
        self.n_th
    }

    /// `gamma = 1 + N - N eta`.
    pub fn gamma(&self) -> f64 {
        1.0 + self.n_th - self.n_th * self.eta
    }

    /// Whether `N_th >= eta / (1 - eta)`.
    pub fn is_entanglement_breaking(&self) -> bool {
        if self.eta >= 1.0 {
            return false;
        }
        self.n_th >= self.eta / (1.0 - self.eta)
    }

    /// `N(1+N)(1-eta)^2`, the weight of each wrong-rail single-photon event.
    fn flip_weight(&self) -> f64 {
        let n = self.n_th;
        n * (1.0 + n) * (1.0 - self.eta).powi(2)
    }

    fn check_degenerate(&self) -> Result<()> {
        if self.eta == 0.0 && self.n_th == 0.0 {
            Err(Error::DegenerateChannel)
        } else {
            Ok(())
        }
    }
}

/// Wrapped-normal phase diffusion with variance `sigma^2` (radians^2).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseNoise {
    variance: f64,
}

impl PhaseNoise {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::Domain(format!("phase variance {variance} must be finite and >= 0")));
        }
        Ok(PhaseNoise { variance })
    }

    pub fn none() -> Self {
        PhaseNoise { variance: 0.0 }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Depolarizing parameter, success probability and per-basis QBERs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DvChannelStats {
    pub lambda: f64,
    pub p_success: f64,
    pub q_x: f64,
    pub q_y: f64,
    pub q_z: f64,
    pub gamma: f64,
}

impl DvChannelStats {
    /// Stats given directly by their QBERs, e.g. for threshold studies that
    /// are not tied to a physical channel. `lambda` is set to `2 q_z` and
    /// `gamma` to 1.
    pub fn from_qbers(p_success: f64, q_x: f64, q_y: f64, q_z: f64) -> Result<Self> {
        for (name, q) in [("p_success", p_success), ("q_x", q_x), ("q_y", q_y), ("q_z", q_z)] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Domain(format!("{name} = {q} outside [0, 1]")));
            }
        }
        Ok(DvChannelStats { lambda: 2.0 * q_z, p_success, q_x, q_y, q_z, gamma: 1.0 })
    }

    /// Same error rate in every basis.
    pub fn symmetric(p_success: f64, q: f64) -> Result<Self> {
        Self::from_qbers(p_success, q, q, q)
    }
}

/// `lambda = 2N(1+N)(1-eta)^2 / (eta + 2N(1+N)(1-eta)^2)`.
pub fn depolarizing_parameter(ch: &ThermalLossChannel) -> Result<f64> {
    ch.check_degenerate()?;
    let w = 2.0 * ch.flip_weight();
    Ok(w / (ch.eta + w))
}

/// Probability that exactly one photon arrives in exactly one of Bob's rails:
/// `P_S = (eta + 2N(1+N)(1-eta)^2) / gamma^4`.
pub fn success_probability(ch: &ThermalLossChannel) -> f64 {
    (ch.eta + 2.0 * ch.flip_weight()) / ch.gamma().powi(4)
}

/// QBER of the thermal-loss channel alone; identical in every basis.
pub fn thermal_qber(ch: &ThermalLossChannel) -> Result<f64> {
    Ok(depolarizing_parameter(ch)? / 2.0)
}

/// Thermal loss followed by dephasing. Dephasing leaves `Q_Z` and `P_S`
/// untouched and shrinks the coherences by `r^2`.
pub fn combined_channel_stats(ch: &ThermalLossChannel, pn: &PhaseNoise) -> Result<DvChannelStats> {
    let lambda = depolarizing_parameter(ch)?;
    let r = circular_mean_wrapped_normal(pn.variance)?;
    let r2 = r * r;
    let q_z = lambda / 2.0;
    let q_xy = 0.5 * ((1.0 - lambda) * (1.0 - r2) + lambda);
    Ok(DvChannelStats { lambda, p_success: success_probability(ch), q_x: q_xy, q_y: q_xy, q_z, gamma: ch.gamma() })
}

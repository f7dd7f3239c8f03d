//! Relays-to-destination multiple-access cut with dependent messages.

use serde::Serialize;

use crate::channel::{ChannelConfig, CsiMode, Topology};
use crate::error::{Error, Result};

/// Correlation between the two relay inputs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct MacCorrelation(f64);

impl MacCorrelation {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && (0.0..=1.0).contains(&rho)) {
            return Err(Error::validation("rho", format!("must lie in [0, 1], got {rho}")));
        }
        Ok(Self(rho))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Bounds on the conditional rates `r23 = H(W2|W3)`, `r32 = H(W3|W2)` and the
/// joint rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacPoint {
    pub r23_max: f64,
    pub r32_max: f64,
    pub r_max: f64,
    /// Set when the configuration has phase fading and `rho` played no role.
    pub rho_ignored: bool,
}

pub fn mac_region_point(cfg: &ChannelConfig, rho: MacCorrelation) -> Result<MacPoint> {
    cfg.require(Topology::TwoRelayDiamond, None)?;
    let g2 = cfg.scalar_gain("c42").norm_sqr();
    let g3 = cfg.scalar_gain("c43").norm_sqr();
    let (p2, p3) = (cfg.power("P2"), cfg.power("P3"));
    let (a, b) = (g2 * p2, g3 * p3);
    Ok(match cfg.csi() {
        CsiMode::Synchronous => {
            let rho = rho.value();
            let keep = 1.0 - rho * rho;
            MacPoint {
                r23_max: a * keep,
                r32_max: b * keep,
                r_max: a + b + 2.0 * rho * (a * b).sqrt(),
                rho_ignored: false,
            }
        }
        CsiMode::PhaseFading => MacPoint {
            r23_max: a,
            r32_max: b,
            r_max: a + b,
            rho_ignored: true,
        },
    })
}

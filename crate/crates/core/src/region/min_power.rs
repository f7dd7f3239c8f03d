//! Minimum total power of common/private messaging for a target rate triple.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::region::RATE_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinPowerResult {
    pub p_total: f64,
    /// Common rate.
    pub r0: f64,
    /// Private rate to relay 2.
    pub r2_private: f64,
    /// Private rate to relay 3.
    pub r3_private: f64,
}

fn check_gain(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::validation(name, format!("gain must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Least power for which a common stream through effective gain `c0_sq` and
/// private streams through `c2_sq`, `c3_sq` deliver `(r2, r3, r)`.
///
/// The returned split makes every rate constraint tight. It is optimal only
/// when `c0_sq <= min(c2_sq, c3_sq)` and `1/c0_sq <= 1/c2_sq + 1/c3_sq`;
/// outside that range the function returns a precondition error.
pub fn min_power(r2: f64, r3: f64, r: f64, c2_sq: f64, c3_sq: f64, c0_sq: f64) -> Result<MinPowerResult> {
    for (name, v) in [("r2", r2), ("r3", r3), ("r", r)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::validation(
                name,
                format!("rate must be finite and >= 0, got {v}"),
            ));
        }
    }
    check_gain("c2_sq", c2_sq)?;
    check_gain("c3_sq", c3_sq)?;
    check_gain("c0_sq", c0_sq)?;
    if r < r2.max(r3) - RATE_TOL {
        return Err(Error::Infeasible(format!(
            "joint rate {r} below max(r2, r3) = {}",
            r2.max(r3)
        )));
    }
    if r > r2 + r3 + RATE_TOL {
        return Err(Error::Infeasible(format!("joint rate {r} above r2 + r3 = {}", r2 + r3)));
    }
    if c0_sq > c2_sq.min(c3_sq) {
        return Err(Error::Precondition(format!(
            "common gain {c0_sq} exceeds a private gain; a common stream cannot beat both private links"
        )));
    }
    if 1.0 / c0_sq > 1.0 / c2_sq + 1.0 / c3_sq {
        return Err(Error::Precondition(format!(
            "common gain {c0_sq} too weak: splitting into private streams is cheaper"
        )));
    }
    let r0 = (r2 + r3 - r).max(0.0);
    let r2p = (r - r3).max(0.0);
    let r3p = (r - r2).max(0.0);
    Ok(MinPowerResult {
        p_total: r0 / c0_sq + r2p / c2_sq + r3p / c3_sq,
        r0,
        r2_private: r2p,
        r3_private: r3p,
    })
}

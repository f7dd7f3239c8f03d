//! Rate regions of the two-relay diamond network.

pub mod beamforming;
pub mod broadcast;
pub mod mac;
pub mod min_power;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub use beamforming::*;
pub use broadcast::*;
pub use mac::*;
pub use min_power::*;

/// Slack on `r_sum >= max(r2, r3)` and `r_sum <= r2 + r3`.
pub const RATE_TOL: f64 = 1e-12;

/// Marginal rates of the two relay messages and their joint rate, nats/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub r2: f64,
    pub r3: f64,
    pub r_sum: f64,
}

impl RatePoint {
    pub fn new(r2: f64, r3: f64, r_sum: f64) -> Result<Self> {
        let p = Self { r2, r3, r_sum };
        p.check()?;
        Ok(p)
    }

    /// Largest consistent point below `(r2, r3, r_sum)`: each marginal is
    /// capped by the joint rate and the joint rate by the marginal sum.
    pub fn consistent(r2: f64, r3: f64, r_sum: f64) -> Self {
        let r2 = r2.min(r_sum).max(0.0);
        let r3 = r3.min(r_sum).max(0.0);
        Self {
            r2,
            r3,
            r_sum: r_sum.min(r2 + r3).max(0.0),
        }
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [("r2", self.r2), ("r3", self.r3), ("r_sum", self.r_sum)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(
                    name,
                    format!("rate must be finite and >= 0, got {v}"),
                ));
            }
        }
        if self.r_sum < self.r2.max(self.r3) - RATE_TOL {
            return Err(Error::validation("r_sum", "joint rate below a marginal rate"));
        }
        if self.r_sum > self.r2 + self.r3 + RATE_TOL {
            return Err(Error::validation("r_sum", "joint rate above the sum of marginal rates"));
        }
        Ok(())
    }

    /// Componentwise `>=` with slack `tol`.
    pub fn dominates(&self, other: &RatePoint, tol: f64) -> bool {
        self.r2 >= other.r2 - tol && self.r3 >= other.r3 - tol && self.r_sum >= other.r_sum - tol
    }
}

/// One row of a region sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSample {
    /// Swept parameters in column order.
    pub params: Vec<(String, f64)>,
    /// Rate columns in order, e.g. `r2, r3, r_sum`.
    pub rates: Vec<(String, f64)>,
    pub feasible: bool,
}

impl RegionSample {
    pub fn from_point(param: &str, value: f64, p: &RatePoint, feasible: bool) -> Self {
        Self {
            params: vec![(param.to_string(), value)],
            rates: vec![("r2".into(), p.r2), ("r3".into(), p.r3), ("r_sum".into(), p.r_sum)],
            feasible,
        }
    }
}

/// Decimal rendering rounded to nine significant digits.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("round trip");
    let s = format!("{rounded}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Writes samples as CSV with a header row. All rows must share the
/// column layout of the first one.
pub fn write_samples_csv<W: Write>(samples: &[RegionSample], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let Some(first) = samples.first() else {
        wtr.write_record(["feasible"])?;
        wtr.flush()?;
        return Ok(());
    };
    let mut header: Vec<&str> = first.params.iter().map(|(k, _)| k.as_str()).collect();
    header.extend(first.rates.iter().map(|(k, _)| k.as_str()));
    header.push("feasible");
    wtr.write_record(&header)?;
    for s in samples {
        if s.params.len() != first.params.len() || s.rates.len() != first.rates.len() {
            return Err(Error::validation("samples", "rows have different column layouts"));
        }
        let mut row: Vec<String> = s.params.iter().map(|(_, v)| format_sig9(*v)).collect();
        row.extend(s.rates.iter().map(|(_, v)| format_sig9(*v)));
        row.push(s.feasible.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

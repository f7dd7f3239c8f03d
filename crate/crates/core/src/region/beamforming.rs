//! Synchronous broadcast cut: rank-one common/private beamforming and the
//! matrix outer bound it is compared with.

use serde::Serialize;

use crate::channel::{ChannelConfig, ChannelVector, CsiMode, Topology};
use crate::error::{Error, Result};
use crate::matrix::HermitianMatrix;
use crate::optim::linspace;
use crate::region::{RatePoint, RegionSample};

/// `min(|c21|², |c31|²) <= |c21^H c31|`.
pub fn thm3_condition(c21: &ChannelVector, c31: &ChannelVector) -> Result<bool> {
    if c21.is_zero() || c31.is_zero() {
        return Err(Error::ZeroVector("beamforming condition needs nonzero gains"));
    }
    Ok(c21.norm_sqr().min(c31.norm_sqr()) <= c21.inner(c31)?.norm())
}

/// Weights of the rank-one beams: `alpha2` on the private beam along the
/// stronger relay's gain, `alpha3` on the common beam along the weaker one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamformingParams {
    pub alpha2: f64,
    pub alpha3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamformingRates {
    pub r2: f64,
    pub r3: f64,
    /// Relay 3 has the stronger gain, so it receives the private beam.
    pub swapped: bool,
}

impl BeamformingRates {
    /// The stronger relay decodes everything, so the joint rate is its rate.
    pub fn point(&self) -> RatePoint {
        RatePoint::consistent(self.r2, self.r3, self.r2.max(self.r3))
    }
}

struct Roles {
    strong: ChannelVector,
    weak: ChannelVector,
    swapped: bool,
    p: f64,
}

fn synchronous_roles(cfg: &ChannelConfig) -> Result<Roles> {
    cfg.require(Topology::TwoRelayDiamond, Some(CsiMode::Synchronous))?;
    let c21 = cfg.gain("c21").clone();
    let c31 = cfg.gain("c31").clone();
    if !thm3_condition(&c21, &c31)? {
        return Err(Error::Precondition(
            "beamforming condition min(|c21|^2, |c31|^2) <= |c21^H c31| does not hold".into(),
        ));
    }
    let swapped = c21.norm() < c31.norm();
    let (strong, weak) = if swapped { (c31, c21) } else { (c21, c31) };
    Ok(Roles {
        strong,
        weak,
        swapped,
        p: cfg.power("P1"),
    })
}

pub fn thm3_region(cfg: &ChannelConfig, params: &BeamformingParams) -> Result<BeamformingRates> {
    let roles = synchronous_roles(cfg)?;
    for (name, v) in [("alpha2", params.alpha2), ("alpha3", params.alpha3)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::validation(name, format!("must be finite and >= 0, got {v}")));
        }
    }
    let n0 = cfg.noise_psd();
    let raw_p = roles.p * n0;
    let trace = params.alpha2 * roles.strong.norm_sqr() + params.alpha3 * roles.weak.norm_sqr();
    if trace > raw_p * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::constraint(
            "power budget",
            format!("beam trace {trace} exceeds P1 = {raw_p}"),
        ));
    }
    let private = HermitianMatrix::outer(&roles.strong).scale(params.alpha2);
    let common = HermitianMatrix::outer(&roles.weak).scale(params.alpha3);
    let r_weak = common.quad_form(&roles.weak)? / n0;
    let r_strong = r_weak + private.quad_form(&roles.strong)? / n0;
    let (r2, r3) = if roles.swapped {
        (r_weak, r_strong)
    } else {
        (r_strong, r_weak)
    };
    Ok(BeamformingRates {
        r2,
        r3,
        swapped: roles.swapped,
    })
}

/// Largest rate of the stronger relay given the weaker relay's rate `r_weak`,
/// over all beam weights meeting the budget. `None` when `r_weak` exceeds
/// what the budget can deliver.
pub fn thm3_frontier(cfg: &ChannelConfig, r_weak: f64) -> Result<Option<f64>> {
    let roles = synchronous_roles(cfg)?;
    let (gs, gw) = (roles.strong.norm_sqr(), roles.weak.norm_sqr());
    if r_weak > roles.p * gw * (1.0 + 1e-12) {
        return Ok(None);
    }
    let rest = (roles.p - r_weak / gw).max(0.0);
    Ok(Some(r_weak + gs * rest))
}

/// Whether some beamforming point is at least `point` in every coordinate.
pub fn thm3_dominates(cfg: &ChannelConfig, point: &RatePoint, tol: f64) -> Result<bool> {
    let swapped = synchronous_roles(cfg)?.swapped;
    let (r_strong, r_weak) = if swapped {
        (point.r3, point.r2)
    } else {
        (point.r2, point.r3)
    };
    Ok(match thm3_frontier(cfg, (r_weak - tol).max(0.0))? {
        Some(best) => r_strong.max(point.r_sum) <= best + tol,
        None => false,
    })
}

/// Rate bounds of the matrix outer bound at `(X, A, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixOuterBounds {
    /// `c21^H (X - A) c21`
    pub r2: f64,
    /// `c31^H (X - B) c31`
    pub r3: f64,
    /// `c31^H (X - B) c31 + c21^H B c21`
    pub ra: f64,
    /// `c21^H (X - A) c21 + c31^H A c31`
    pub rb: f64,
}

impl MatrixOuterBounds {
    pub fn point(&self) -> RatePoint {
        RatePoint::consistent(self.r2, self.r3, self.ra.min(self.rb))
    }
}

/// Evaluates the matrix outer bound for gains `c21`, `c31`, noise `n0` and
/// budget `p`, after checking `tr X <= p`, `X ⪰ A`, `X ⪰ B`, `A, B ⪰ 0`.
pub fn matrix_outer_bounds(
    c21: &ChannelVector,
    c31: &ChannelVector,
    p: f64,
    n0: f64,
    x: &HermitianMatrix,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
) -> Result<MatrixOuterBounds> {
    let tol = 1e-9 * p.max(1.0);
    if x.trace() > p + tol {
        return Err(Error::constraint(
            "trace budget",
            format!("tr X = {} exceeds {p}", x.trace()),
        ));
    }
    let xa = x.sub(a)?;
    let xb = x.sub(b)?;
    for (name, m) in [("X - A", &xa), ("X - B", &xb), ("A", a), ("B", b)] {
        if !m.is_psd(tol) {
            return Err(Error::constraint(
                "positive semidefinite",
                format!("{name} has eigenvalue {}", m.min_eigenvalue()),
            ));
        }
    }
    let r2 = xa.quad_form(c21)? / n0;
    let r3 = xb.quad_form(c31)? / n0;
    Ok(MatrixOuterBounds {
        r2,
        r3,
        ra: r3 + b.quad_form(c21)? / n0,
        rb: r2 + a.quad_form(c31)? / n0,
    })
}

/// [`matrix_outer_bounds`] with gains, budget and noise from a synchronous
/// diamond configuration.
pub fn thm3_outer_point(
    cfg: &ChannelConfig,
    x: &HermitianMatrix,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
) -> Result<MatrixOuterBounds> {
    cfg.require(Topology::TwoRelayDiamond, Some(CsiMode::Synchronous))?;
    matrix_outer_bounds(
        cfg.gain("c21"),
        cfg.gain("c31"),
        cfg.raw_power("P1").unwrap_or(0.0),
        cfg.noise_psd(),
        x,
        a,
        b,
    )
}

/// `max_{|u| = 1} min(|c21^H u|², |c31^H u|²)`.
///
/// The maximizer lies in the real plane of the two gains (after aligning
/// their phases), between the two directions; the crossing of the two
/// quadratic forms is found by bisection.
pub fn max_min_beam(c21: &ChannelVector, c31: &ChannelVector) -> Result<f64> {
    if c21.is_zero() || c31.is_zero() {
        return Err(Error::ZeroVector("max-min beam needs nonzero gains"));
    }
    if c21.dim() != c31.dim() {
        return Err(Error::DimensionMismatch {
            expected: c21.dim(),
            actual: c31.dim(),
        });
    }
    let (r, s) = (c21.norm_sqr(), c31.norm_sqr());
    let z = c21.inner(c31)?;
    let alpha = (z.norm() / (r.sqrt() * s.sqrt())).clamp(0.0, 1.0).acos();
    let f2 = |psi: f64| r * (alpha - psi).cos().powi(2);
    let f3 = |psi: f64| s * psi.cos().powi(2);
    if f2(0.0) >= f3(0.0) {
        return Ok(s);
    }
    if f3(alpha) >= f2(alpha) {
        return Ok(r);
    }
    let (mut lo, mut hi) = (0.0, alpha);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f2(mid) < f3(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * alpha {
            break;
        }
    }
    let psi = 0.5 * (lo + hi);
    Ok(f2(psi).min(f3(psi)))
}

/// Beamforming points as the common share `t` of the budget sweeps `[0, 1]`.
/// Rows are flagged infeasible when the beamforming condition fails, in
/// which case the rates are those of the same beams without the optimality
/// guarantee.
pub fn beamforming_sweep(cfg: &ChannelConfig, steps: usize) -> Result<Vec<RegionSample>> {
    cfg.require(Topology::TwoRelayDiamond, Some(CsiMode::Synchronous))?;
    if steps == 0 {
        return Err(Error::validation("steps", "must be >= 1"));
    }
    let c21 = cfg.gain("c21");
    let c31 = cfg.gain("c31");
    let holds = thm3_condition(c21, c31)?;
    let swapped = c21.norm() < c31.norm();
    let (strong, weak) = if swapped { (c31, c21) } else { (c21, c31) };
    let p = cfg.power("P1");
    let common_gain = |c: &ChannelVector| -> Result<f64> { Ok(c.inner(&weak.normalized()?)?.norm_sqr()) };
    let (gs, gw) = (strong.norm_sqr(), weak.norm_sqr());
    // Common beam along the weaker gain; both relays must decode it.
    let common_rate_per_power = common_gain(strong)?.min(gw);
    linspace(0.0, 1.0, steps)
        .into_iter()
        .map(|t| {
            let common = t * p * common_rate_per_power;
            let private = (1.0 - t) * p * gs;
            let (r2, r3) = if swapped {
                (common, common + private)
            } else {
                (common + private, common)
            };
            let pt = RatePoint::consistent(r2, r3, r2.max(r3));
            Ok(RegionSample::from_point("common", t, &pt, holds))
        })
        .collect()
}

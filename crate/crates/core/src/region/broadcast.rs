//! Source-to-relays broadcast cut under phase fading: common/private
//! messaging against the outer bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelConfig, CsiMode, Topology, SOURCE_ANTENNAS};
use crate::error::{Error, Result};
use crate::optim::linspace;
use crate::region::{RatePoint, RegionSample};

const POWER_TOL: f64 = 1e-12;

/// Separate power budgets of the two source antennas, Watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AntennaBudgets {
    pub p1: f64,
    pub p2: f64,
}

impl AntennaBudgets {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        for (name, v) in [("p1", p1), ("p2", p2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(
                    name,
                    format!("antenna budget must be finite and >= 0, got {v}"),
                ));
            }
        }
        Ok(Self { p1, p2 })
    }

    /// Splits the source budget `P1` of a diamond configuration evenly.
    pub fn even_split(cfg: &ChannelConfig) -> Result<Self> {
        cfg.require(Topology::TwoRelayDiamond, None)?;
        let p = cfg.raw_power("P1").unwrap_or(0.0);
        Self::new(0.5 * p, 0.5 * p)
    }

    fn get(&self, k: usize) -> f64 {
        if k == 0 {
            self.p1
        } else {
            self.p2
        }
    }
}

/// Per-antenna split into a common part and parts private to each relay.
/// Powers in Watts. Common parts may be negative when describing an
/// outer-bound point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommonPrivateAllocation {
    pub p1c: f64,
    pub p2c: f64,
    pub p12: f64,
    pub p22: f64,
    pub p13: f64,
    pub p23: f64,
}

impl CommonPrivateAllocation {
    /// `(common, private to relay 2, private to relay 3)` of antenna `k`.
    fn antenna(&self, k: usize) -> (f64, f64, f64) {
        if k == 0 {
            (self.p1c, self.p12, self.p13)
        } else {
            (self.p2c, self.p22, self.p23)
        }
    }

    /// Budget and sign constraints of an outer-bound allocation.
    pub fn validate_outer(&self, budgets: &AntennaBudgets) -> Result<()> {
        for (name, v) in [
            ("p1c", self.p1c),
            ("p2c", self.p2c),
            ("p12", self.p12),
            ("p22", self.p22),
            ("p13", self.p13),
            ("p23", self.p23),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        for k in 0..SOURCE_ANTENNAS {
            let (c, a, b) = self.antenna(k);
            let n = k + 1;
            if a < 0.0 || b < 0.0 {
                return Err(Error::constraint(
                    "private power nonnegative",
                    format!("antenna {n}: {a}, {b}"),
                ));
            }
            if c + a + b > budgets.get(k) + POWER_TOL {
                return Err(Error::constraint(
                    "antenna budget",
                    format!("antenna {n} uses {} of {}", c + a + b, budgets.get(k)),
                ));
            }
            if c + a < -POWER_TOL || c + b < -POWER_TOL {
                return Err(Error::constraint(
                    "common plus private nonnegative",
                    format!("antenna {n}: common {c} with privates {a}, {b}"),
                ));
            }
        }
        Ok(())
    }

    /// Outer-bound constraints plus nonnegative common powers.
    pub fn validate_achievable(&self, budgets: &AntennaBudgets) -> Result<()> {
        self.validate_outer(budgets)?;
        if self.p1c < 0.0 || self.p2c < 0.0 {
            return Err(Error::constraint(
                "common power nonnegative",
                format!("common powers {}, {}", self.p1c, self.p2c),
            ));
        }
        Ok(())
    }
}

/// Per-antenna squared gains towards each relay.
#[derive(Debug, Clone, Copy)]
struct AntennaGains {
    to2: [f64; SOURCE_ANTENNAS],
    to3: [f64; SOURCE_ANTENNAS],
}

fn phase_fading_gains(cfg: &ChannelConfig) -> Result<AntennaGains> {
    cfg.require(Topology::TwoRelayDiamond, Some(CsiMode::PhaseFading))?;
    let m2 = cfg.gain("c21").magnitudes_sqr();
    let m3 = cfg.gain("c31").magnitudes_sqr();
    Ok(AntennaGains {
        to2: [m2[0], m2[1]],
        to3: [m3[0], m3[1]],
    })
}

/// Rates of common/private messaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommonPrivateRates {
    pub rc: f64,
    pub r2: f64,
    pub r3: f64,
    /// Joint rate bound with the common part seen through the relay-2 gains.
    pub r_sum1: f64,
    /// Joint rate bound with the common part seen through the relay-3 gains.
    pub r_sum2: f64,
}

impl CommonPrivateRates {
    pub fn point(&self) -> RatePoint {
        RatePoint::consistent(self.r2, self.r3, self.r_sum1.min(self.r_sum2))
    }
}

/// Linear pieces shared by the achievable and outer expressions.
#[derive(Debug, Clone, Copy, Default)]
struct Pieces {
    common2: f64,
    common3: f64,
    private2: f64,
    private3: f64,
}

impl Pieces {
    fn add(self, o: Pieces) -> Pieces {
        Pieces {
            common2: self.common2 + o.common2,
            common3: self.common3 + o.common3,
            private2: self.private2 + o.private2,
            private3: self.private3 + o.private3,
        }
    }

    fn achievable(&self) -> RatePoint {
        let rc = self.common2.min(self.common3);
        RatePoint::consistent(
            rc + self.private2,
            rc + self.private3,
            rc + self.private2 + self.private3,
        )
    }

    fn outer(&self) -> RatePoint {
        let r_sum = (self.common2 + self.private2 + self.private3).min(self.common3 + self.private2 + self.private3);
        RatePoint::consistent(self.common2 + self.private2, self.common3 + self.private3, r_sum)
    }
}

fn pieces(g: &AntennaGains, k: usize, (c, a, b): (f64, f64, f64)) -> Pieces {
    Pieces {
        common2: g.to2[k] * c,
        common3: g.to3[k] * c,
        private2: g.to2[k] * a,
        private3: g.to3[k] * b,
    }
}

fn allocation_pieces(cfg: &ChannelConfig, g: &AntennaGains, alloc: &CommonPrivateAllocation) -> Pieces {
    let n0 = cfg.noise_psd();
    (0..SOURCE_ANTENNAS)
        .map(|k| {
            let (c, a, b) = alloc.antenna(k);
            pieces(g, k, (c / n0, a / n0, b / n0))
        })
        .fold(Pieces::default(), Pieces::add)
}

pub fn bc_common_private_rates(
    cfg: &ChannelConfig,
    budgets: &AntennaBudgets,
    alloc: &CommonPrivateAllocation,
) -> Result<CommonPrivateRates> {
    let g = phase_fading_gains(cfg)?;
    alloc.validate_achievable(budgets)?;
    let p = allocation_pieces(cfg, &g, alloc);
    let rc = p.common2.min(p.common3);
    Ok(CommonPrivateRates {
        rc,
        r2: rc + p.private2,
        r3: rc + p.private3,
        r_sum1: p.common2 + p.private2 + p.private3,
        r_sum2: p.common3 + p.private2 + p.private3,
    })
}

/// Outer-bound values at an allocation whose common parts may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterBounds {
    pub r2: f64,
    pub r3: f64,
    pub r_sum1: f64,
    pub r_sum2: f64,
}

impl OuterBounds {
    pub fn point(&self) -> RatePoint {
        RatePoint::consistent(self.r2, self.r3, self.r_sum1.min(self.r_sum2))
    }
}

pub fn bc_outer_bounds(
    cfg: &ChannelConfig,
    budgets: &AntennaBudgets,
    alloc: &CommonPrivateAllocation,
) -> Result<OuterBounds> {
    let g = phase_fading_gains(cfg)?;
    alloc.validate_outer(budgets)?;
    let p = allocation_pieces(cfg, &g, alloc);
    Ok(OuterBounds {
        r2: p.common2 + p.private2,
        r3: p.common3 + p.private3,
        r_sum1: p.common2 + p.private2 + p.private3,
        r_sum2: p.common3 + p.private2 + p.private3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcSweepSpec {
    /// Grid points per power coordinate on `[0, budget]`.
    pub points_per_dim: usize,
}

impl Default for BcSweepSpec {
    fn default() -> Self {
        Self { points_per_dim: 16 }
    }
}

/// Outer-bound sweep against the achievable sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BcGapReport {
    /// Bin width of the `(r2, r3)` target grid, nats/s.
    pub resolution: f64,
    /// Best joint rate per target bin; `r2`, `r3` are the bin's lower corner.
    pub outer_frontier: Vec<RatePoint>,
    pub achievable_frontier: Vec<RatePoint>,
    /// Largest excess of the outer joint rate over the achievable one across
    /// all targets reached by the outer sweep.
    pub max_gap: f64,
    /// Lower corner of the bin where `max_gap` occurs.
    pub gap_at: (f64, f64),
    pub outer_evaluations: usize,
    pub achievable_evaluations: usize,
}

/// Grid triples `(common, private2, private3)` in units of the step.
fn antenna_triples(n: usize, allow_negative_common: bool) -> Vec<(i64, i64, i64)> {
    let m = n as i64 - 1;
    let lo = if allow_negative_common { -m } else { 0 };
    let mut out = Vec::new();
    for c in lo..=m {
        for a in 0..=m {
            for b in 0..=m {
                if c + a + b <= m && c + a >= 0 && c + b >= 0 {
                    out.push((c, a, b));
                }
            }
        }
    }
    out
}

struct BinGrid {
    side: usize,
    delta: f64,
    best: Vec<f64>,
}

impl BinGrid {
    fn new(side: usize, delta: f64) -> Self {
        Self {
            side,
            delta,
            best: vec![f64::NEG_INFINITY; side * side],
        }
    }

    fn insert(&mut self, p: &RatePoint) {
        let bin = |v: f64| ((v / self.delta + 1e-9).floor().max(0.0) as usize).min(self.side - 1);
        let idx = bin(p.r2) * self.side + bin(p.r3);
        if p.r_sum > self.best[idx] {
            self.best[idx] = p.r_sum;
        }
    }

    fn merge(mut self, other: BinGrid) -> BinGrid {
        for (a, b) in self.best.iter_mut().zip(other.best) {
            *a = a.max(b);
        }
        self
    }

    /// `F(i, j)`: best joint rate among points reaching both bin `i` in `r2`
    /// and bin `j` in `r3`.
    fn suffix_max(mut self) -> BinGrid {
        let s = self.side;
        for i in (0..s).rev() {
            for j in (0..s).rev() {
                let mut v = self.best[i * s + j];
                if i + 1 < s {
                    v = v.max(self.best[(i + 1) * s + j]);
                }
                if j + 1 < s {
                    v = v.max(self.best[i * s + j + 1]);
                }
                self.best[i * s + j] = v;
            }
        }
        self
    }

    fn frontier(&self) -> Vec<RatePoint> {
        let s = self.side;
        let mut out = Vec::new();
        for i in 0..s {
            for j in 0..s {
                let v = self.best[i * s + j];
                if v.is_finite() {
                    out.push(RatePoint {
                        r2: i as f64 * self.delta,
                        r3: j as f64 * self.delta,
                        r_sum: v,
                    });
                }
            }
        }
        out
    }
}

fn sweep(
    g: &AntennaGains,
    steps: [f64; 2],
    n: usize,
    negative_common: bool,
    side: usize,
    delta: f64,
) -> (BinGrid, usize) {
    let triples = antenna_triples(n, negative_common);
    let scaled = |k: usize| -> Vec<Pieces> {
        triples
            .iter()
            .map(|&(c, a, b)| pieces(g, k, (c as f64 * steps[k], a as f64 * steps[k], b as f64 * steps[k])))
            .collect()
    };
    let first = scaled(0);
    let second = scaled(1);
    let grid = first
        .par_iter()
        .fold(
            || BinGrid::new(side, delta),
            |mut grid, p0| {
                for p1 in &second {
                    let sum = p0.add(*p1);
                    let point = if negative_common { sum.outer() } else { sum.achievable() };
                    grid.insert(&point);
                }
                grid
            },
        )
        .reduce(|| BinGrid::new(side, delta), BinGrid::merge);
    (grid, first.len() * second.len())
}

pub fn bc_outer_vs_common_private(
    cfg: &ChannelConfig,
    budgets: &AntennaBudgets,
    spec: &BcSweepSpec,
) -> Result<BcGapReport> {
    let g = phase_fading_gains(cfg)?;
    let n = spec.points_per_dim;
    if n < 2 {
        return Err(Error::validation("points_per_dim", "need at least 2"));
    }
    let n0 = cfg.noise_psd();
    let steps = [budgets.p1 / n0 / (n - 1) as f64, budgets.p2 / n0 / (n - 1) as f64];
    let delta = (0..SOURCE_ANTENNAS)
        .map(|k| g.to2[k].max(g.to3[k]) * steps[k])
        .fold(0.0, f64::max);
    if delta == 0.0 {
        let zero = vec![RatePoint {
            r2: 0.0,
            r3: 0.0,
            r_sum: 0.0,
        }];
        return Ok(BcGapReport {
            resolution: 0.0,
            outer_frontier: zero.clone(),
            achievable_frontier: zero,
            max_gap: 0.0,
            gap_at: (0.0, 0.0),
            outer_evaluations: 1,
            achievable_evaluations: 1,
        });
    }
    // Every rate is at most (n - 1) delta per antenna.
    let side = 2 * (n - 1) + 2;
    let (outer, outer_evals) = sweep(&g, steps, n, true, side, delta);
    let (ach, ach_evals) = sweep(&g, steps, n, false, side, delta);
    let outer = outer.suffix_max();
    let ach = ach.suffix_max();
    let mut max_gap = f64::NEG_INFINITY;
    let mut gap_at = (0.0, 0.0);
    for i in 0..side {
        for j in 0..side {
            let o = outer.best[i * side + j];
            if !o.is_finite() {
                continue;
            }
            let gap = o - ach.best[i * side + j];
            if gap > max_gap {
                max_gap = gap;
                gap_at = (i as f64 * delta, j as f64 * delta);
            }
        }
    }
    Ok(BcGapReport {
        resolution: delta,
        outer_frontier: outer.frontier(),
        achievable_frontier: ach.frontier(),
        max_gap,
        gap_at,
        outer_evaluations: outer_evals,
        achievable_evaluations: ach_evals,
    })
}

/// One-parameter families of common/private allocations for region sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BroadcastSweep {
    /// Fraction `t` of each antenna budget is common; the rest is split
    /// evenly between the two private messages.
    Common,
    /// No common message; fraction `t` is private to relay 2, `1 - t` to relay 3.
    PrivateSplit,
}

impl BroadcastSweep {
    pub fn name(self) -> &'static str {
        match self {
            BroadcastSweep::Common => "common",
            BroadcastSweep::PrivateSplit => "private_split",
        }
    }

    pub fn allocation(self, budgets: &AntennaBudgets, t: f64) -> CommonPrivateAllocation {
        let split = |p: f64| match self {
            BroadcastSweep::Common => (t * p, 0.5 * (1.0 - t) * p, 0.5 * (1.0 - t) * p),
            BroadcastSweep::PrivateSplit => (0.0, t * p, (1.0 - t) * p),
        };
        let (p1c, p12, p13) = split(budgets.p1);
        let (p2c, p22, p23) = split(budgets.p2);
        CommonPrivateAllocation {
            p1c,
            p2c,
            p12,
            p22,
            p13,
            p23,
        }
    }
}

/// Achievable points along a one-parameter family, `steps` values of `t` on `[0, 1]`.
pub fn broadcast_sweep(
    cfg: &ChannelConfig,
    budgets: &AntennaBudgets,
    family: BroadcastSweep,
    steps: usize,
) -> Result<Vec<RegionSample>> {
    if steps == 0 {
        return Err(Error::validation("steps", "must be >= 1"));
    }
    linspace(0.0, 1.0, steps)
        .into_iter()
        .map(|t| {
            let rates = bc_common_private_rates(cfg, budgets, &family.allocation(budgets, t))?;
            Ok(RegionSample::from_point(family.name(), t, &rates.point(), true))
        })
        .collect()
}

//! Low-power capacity of the single-relay network with a two-antenna source.
//!
//! All rates are in nats/s. Powers are configured in Watts and normalized by
//! the noise spectral density before they enter a rate expression.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{angle_between, ChannelConfig, ChannelVector, CsiMode, Topology};
use crate::error::{Error, Result};
use crate::matrix::HermitianMatrix;
use crate::optim::{argmax_first, golden_max, golden_min, linspace};

/// Slack allowed on the power budget.
pub const BUDGET_TOL: f64 = 1e-12;

/// Decision vector of the closed-form bounds. Powers in Watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerAllocation {
    /// Source power beamed towards the relay.
    pub p21: f64,
    /// Source power beamed towards the destination.
    pub p31: f64,
    /// Source power spent cooperating with the relay.
    pub pb1: f64,
    /// Beam rotation away from the direct link, radians.
    pub theta: f64,
}

impl PowerAllocation {
    pub fn new(p21: f64, p31: f64, pb1: f64, theta: f64) -> Self {
        Self { p21, p31, pb1, theta }
    }

    pub fn total(&self) -> f64 {
        self.p21 + self.p31 + self.pb1
    }

    pub fn validate(&self, p1: f64) -> Result<()> {
        for (name, v) in [("p21", self.p21), ("p31", self.p31), ("pb1", self.pb1)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::validation("theta", "must be finite"));
        }
        if self.total() > p1 + BUDGET_TOL {
            return Err(Error::constraint(
                "power budget",
                format!("p21 + p31 + pb1 = {} exceeds P1 = {p1}", self.total()),
            ));
        }
        Ok(())
    }
}

/// Matrix-form decision variables. `a`, `b` and `beta² P1` share the source
/// budget; the implied input covariance is `a + b + beta² P1 u u^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBoundParams {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
    pub beta: f64,
    pub u: ChannelVector,
}

impl MatrixBoundParams {
    pub fn input_covariance(&self, p1: f64) -> Result<HermitianMatrix> {
        let uu = HermitianMatrix::outer(&self.u).scale(self.beta * self.beta * p1);
        self.a.add(&self.b)?.add(&uu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingBound {
    /// The relay's decoding constraint.
    RelayDecode,
    /// The destination's combined source-plus-relay constraint.
    MacCombine,
}

impl BindingBound {
    /// Ties go to `RelayDecode`.
    pub fn of(relay: f64, combine: f64) -> Self {
        if relay <= combine {
            BindingBound::RelayDecode
        } else {
            BindingBound::MacCombine
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BindingBound::RelayDecode => "relay_decode",
            BindingBound::MacCombine => "mac_combine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Allocation {
    Closed(PowerAllocation),
    Matrix(MatrixBoundParams),
}

/// Extra output of the matrix-form search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDiagnostics {
    /// Upper bound from the Lagrangian dual; the search value is a lower one.
    pub dual_bound: f64,
    /// Angle of the rank-one `a` direction from the direct link, radians.
    pub direction_angle: f64,
    pub residual_weights: Vec<f64>,
    pub residual_rates: Vec<f64>,
    pub best_residual_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub rate: f64,
    pub allocation: Allocation,
    pub binding_bound: BindingBound,
    /// `(relay bound, combining bound)` at the stored allocation.
    pub bounds: (f64, f64),
    /// Angle between the source-relay and source-destination gains.
    pub alpha: f64,
    pub diagnostics: Option<SearchDiagnostics>,
}

impl CapacityResult {
    fn new(bounds: (f64, f64), allocation: Allocation, alpha: f64) -> Self {
        Self {
            rate: bounds.0.min(bounds.1),
            allocation,
            binding_bound: BindingBound::of(bounds.0, bounds.1),
            bounds,
            alpha,
            diagnostics: None,
        }
    }
}

/// Normalized scalar quantities and an orthonormal basis of the real plane
/// through the two source gains.
#[derive(Debug, Clone)]
struct Geometry {
    /// `|c31|²`
    s: f64,
    /// `|c21|²`
    r: f64,
    /// `|c32| sqrt(P2 / N0)`
    q: f64,
    alpha: f64,
    p1: f64,
    n0: f64,
    c21: ChannelVector,
    c31: ChannelVector,
    c32: Complex64,
    e1: [Complex64; 2],
    e2: [Complex64; 2],
}

impl Geometry {
    fn new(cfg: &ChannelConfig) -> Result<Self> {
        let c21 = cfg.gain("c21").clone();
        let c31 = cfg.gain("c31").clone();
        let c32 = cfg.scalar_gain("c32");
        let alpha = if c21.is_zero() || c31.is_zero() {
            0.0
        } else {
            angle_between(&c21, &c31)?.radians()
        };
        let anchor = if !c31.is_zero() {
            c31.normalized()?
        } else if !c21.is_zero() {
            c21.normalized()?
        } else {
            ChannelVector::from_real(&[1.0, 0.0])
        };
        let e1 = [anchor.entries()[0], anchor.entries()[1]];
        // Rotate c21 so its projection on the anchor is real and nonnegative.
        let z = c21.inner(&anchor)?;
        let phase = if z.norm() > 0.0 {
            z / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let c21r: Vec<Complex64> = c21.entries().iter().map(|c| c * phase).collect();
        let proj: Complex64 = e1.iter().zip(&c21r).map(|(e, c)| e.conj() * c).sum();
        let w = [c21r[0] - proj * e1[0], c21r[1] - proj * e1[1]];
        let wn = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        let e2 = if wn > 1e-12 * c21.norm().max(f64::MIN_POSITIVE) && wn > 0.0 {
            [w[0] / wn, w[1] / wn]
        } else {
            [-e1[1].conj(), e1[0].conj()]
        };
        let n0 = cfg.noise_psd();
        Ok(Self {
            s: c31.norm_sqr(),
            r: c21.norm_sqr(),
            q: c32.norm() * cfg.power("P2").sqrt(),
            alpha,
            p1: cfg.power("P1"),
            n0,
            c21,
            c31,
            c32,
            e1,
            e2,
        })
    }

    /// Unit vector at angle `psi` from `e1` towards `e2`.
    fn direction(&self, psi: f64) -> ChannelVector {
        let (c, s) = (psi.cos(), psi.sin());
        ChannelVector::new(vec![c * self.e1[0] + s * self.e2[0], c * self.e1[1] + s * self.e2[1]]).expect("finite")
    }

    fn coherent(&self, pb: f64) -> f64 {
        ((pb * self.s).sqrt() + self.q).powi(2)
    }

    /// Both closed-form bounds with powers already normalized.
    fn closed_bounds(&self, p21: f64, p31: f64, pb1: f64, theta: f64) -> (f64, f64) {
        let relay = self.s * p31 + self.r * (self.alpha - theta).cos().powi(2) * p21;
        let combine = self.s * p31 + self.s * theta.cos().powi(2) * p21 + self.coherent(pb1);
        (relay, combine)
    }
}

fn synchronous_geometry(cfg: &ChannelConfig) -> Result<Geometry> {
    cfg.require(Topology::SingleRelay, Some(CsiMode::Synchronous))?;
    Geometry::new(cfg)
}

/// Closed-form `(relay, combining)` bounds at `alloc`.
pub fn thm1_bounds(cfg: &ChannelConfig, alloc: &PowerAllocation) -> Result<(f64, f64)> {
    let g = synchronous_geometry(cfg)?;
    alloc.validate(cfg.raw_power("P1").unwrap_or(0.0))?;
    let n0 = g.n0;
    Ok(g.closed_bounds(alloc.p21 / n0, alloc.p31 / n0, alloc.pb1 / n0, alloc.theta))
}

/// Direct rate plus relayed rate of the decode-and-forward scheme at `alloc`.
pub fn thm1_achievable(cfg: &ChannelConfig, alloc: &PowerAllocation) -> Result<f64> {
    let g = synchronous_geometry(cfg)?;
    alloc.validate(cfg.raw_power("P1").unwrap_or(0.0))?;
    let n0 = g.n0;
    let (p21, p31, pb1) = (alloc.p21 / n0, alloc.p31 / n0, alloc.pb1 / n0);
    let direct = g.s * p31;
    let relayed = (g.r * (g.alpha - alloc.theta).cos().powi(2) * p21)
        .min(g.s * alloc.theta.cos().powi(2) * p21 + g.coherent(pb1));
    Ok(direct + relayed)
}

/// Capacity when the receivers know only the gain magnitudes.
pub fn thm1_phase_fading(cfg: &ChannelConfig) -> Result<f64> {
    cfg.require(Topology::SingleRelay, Some(CsiMode::PhaseFading))?;
    let s = cfg.gain("c31").norm_sqr();
    let r = cfg.gain("c21").norm_sqr();
    let g32 = cfg.scalar_gain("c32").norm_sqr();
    let (p1, p2) = (cfg.power("P1"), cfg.power("P2"));
    Ok((s.max(r) * p1).min(s * p1 + g32 * p2))
}

/// Resolution of the closed-form optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per simplex edge.
    pub simplex_points: usize,
    pub theta_points: usize,
    /// Zoom rounds in θ after the coarse grid.
    pub refine_rounds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            simplex_points: 64,
            theta_points: 128,
            refine_rounds: 120,
        }
    }
}

const ZOOM_POINTS: usize = 9;
const GOLDEN_ITERS: usize = 100;
const ZOOM_SHRINK: f64 = 0.75;

/// Maximizes `min(relay, combine)` over the power simplex and `θ ∈ [0, α]`.
///
/// The full budget is always spent: both bounds are nondecreasing in every
/// power, so the grid covers the face `p21 + p31 + pb1 = P1`. A coarse grid
/// over powers and θ is followed by a zoom in θ, with the power split at each
/// θ solved exactly (the problem is concave in the powers for fixed θ).
pub fn thm1_optimize(cfg: &ChannelConfig, grid: &GridSpec) -> Result<CapacityResult> {
    let g = synchronous_geometry(cfg)?;
    if grid.simplex_points < 2 || grid.theta_points < 1 {
        return Err(Error::validation(
            "grid",
            "need >= 2 simplex points and >= 1 theta point",
        ));
    }
    let alpha = g.alpha;
    let thetas = if alpha > 0.0 {
        linspace(0.0, alpha, grid.theta_points)
    } else {
        vec![0.0]
    };
    let n = grid.simplex_points;
    let step = 1.0 / (n - 1) as f64;
    let mut cells = Vec::with_capacity(n * (n + 1) / 2 * thetas.len());
    for i in 0..n {
        for j in 0..(n - i) {
            for &t in &thetas {
                cells.push((i as f64 * step, j as f64 * step, t));
            }
        }
    }
    let value = |x: f64, y: f64, t: f64| -> f64 {
        let pb = (1.0 - x - y).max(0.0);
        let (a, b) = g.closed_bounds(x * g.p1, y * g.p1, pb * g.p1, t);
        a.min(b)
    };
    let values: Vec<f64> = cells.par_iter().map(|&(x, y, t)| value(x, y, t)).collect();
    let coarse = cells[argmax_first(&values).expect("non-empty grid")];

    // Refinement in θ alone; at each θ the power split is solved exactly.
    let exact = |t: f64| -> (f64, f64, f64) {
        let (v, pa, pb) = split_search(
            &g,
            g.r * (alpha - t).cos().powi(2),
            g.s * t.cos().powi(2),
            g.s,
            GOLDEN_ITERS,
        );
        (v, pa, pb)
    };
    let seeds: Vec<f64> = thetas.par_iter().map(|&t| exact(t).0).collect();
    let mut theta = thetas[argmax_first(&seeds).expect("non-empty")];
    let mut best_v = exact(theta).0;
    let mut h = if thetas.len() > 1 {
        alpha / (thetas.len() - 1) as f64
    } else {
        0.0
    };
    let offsets = linspace(-1.0, 1.0, ZOOM_POINTS);
    for _ in 0..grid.refine_rounds {
        let center = theta;
        for &d in &offsets {
            let t = (center + d * h).clamp(0.0, alpha);
            let v = exact(t).0;
            if v > best_v {
                best_v = v;
                theta = t;
            }
        }
        h *= ZOOM_SHRINK;
    }
    let (_, pa, pb) = exact(theta);
    let fractions = if g.p1 > 0.0 {
        (pa / g.p1, ((g.p1 - pa - pb) / g.p1).max(0.0), theta)
    } else {
        coarse
    };
    let best = if best_v >= value(coarse.0, coarse.1, coarse.2) {
        fractions
    } else {
        coarse
    };

    let raw_p1 = cfg.raw_power("P1").unwrap_or(0.0);
    let p21 = best.0 * raw_p1;
    let p31 = best.1 * raw_p1;
    let alloc = PowerAllocation::new(p21, p31, (raw_p1 - p21 - p31).max(0.0), best.2);
    let bounds = thm1_bounds(cfg, &alloc)?;
    Ok(CapacityResult::new(bounds, Allocation::Closed(alloc), alpha))
}

/// Constraint slack used when validating matrix parameters.
fn matrix_tol(p1: f64) -> f64 {
    1e-9 * p1.max(1.0)
}

/// `(relay, combining)` bounds of the matrix form.
pub fn matrix_bound_eval(cfg: &ChannelConfig, params: &MatrixBoundParams) -> Result<(f64, f64)> {
    let g = synchronous_geometry(cfg)?;
    let p1 = cfg.raw_power("P1").unwrap_or(0.0);
    let p2 = cfg.raw_power("P2").unwrap_or(0.0);
    for m in [&params.a, &params.b] {
        if m.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: m.dim(),
            });
        }
    }
    if params.u.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: params.u.dim(),
        });
    }
    let tol = matrix_tol(p1);
    if !params.a.is_psd(tol) {
        return Err(Error::constraint(
            "positive semidefinite",
            format!("a has eigenvalue {}", params.a.min_eigenvalue()),
        ));
    }
    if !params.b.is_psd(tol) {
        return Err(Error::constraint(
            "positive semidefinite",
            format!("b has eigenvalue {}", params.b.min_eigenvalue()),
        ));
    }
    if !(params.beta.is_finite() && (0.0..=1.0).contains(&params.beta)) {
        return Err(Error::constraint("beta in [0, 1]", format!("beta = {}", params.beta)));
    }
    if (params.u.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::constraint("unit vector", format!("|u| = {}", params.u.norm())));
    }
    let used = params.a.trace() + params.b.trace() + params.beta * params.beta * p1;
    if used > p1 + tol {
        return Err(Error::constraint(
            "power budget",
            format!("tr a + tr b + beta^2 P1 = {used} exceeds P1 = {p1}"),
        ));
    }
    let relay = params.b.quad_form(&g.c31)? + params.a.quad_form(&g.c21)?;
    let x = params.input_covariance(p1)?;
    let cross = 2.0 * (params.beta * g.c32 * g.c31.inner(&params.u)?).re * (p1 * p2).sqrt();
    let combine = x.quad_form(&g.c31)? + g.c32.norm_sqr() * p2 + cross;
    Ok((relay / g.n0, combine / g.n0))
}

/// Resolution of the matrix-form search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixSearchSpec {
    /// Grid over the `a` direction, spanning a half turn of the real plane.
    pub angle_points: usize,
    pub residual_points: usize,
    pub refine_rounds: usize,
    pub golden_iters: usize,
}

impl Default for MatrixSearchSpec {
    fn default() -> Self {
        Self {
            angle_points: 361,
            residual_points: 21,
            refine_rounds: 80,
            golden_iters: 100,
        }
    }
}

/// Best `(rate, pa, pb)` for rank-one-plus-residual shapes with the given
/// per-unit-power bound coefficients; powers normalized, `pb` is the
/// cooperation power and `P1 - pa - pb` goes to `b`.
fn split_search(g: &Geometry, k_relay_a: f64, k_comb_a: f64, k_b: f64, iters: usize) -> (f64, f64, f64) {
    let best_split = |pb: f64| -> (f64, f64) {
        let t = (g.p1 - pb).max(0.0);
        let h = g.coherent(pb);
        let eval = |pa: f64| {
            let base = (t - pa) * k_b;
            (base + pa * k_relay_a).min(base + pa * k_comb_a + h)
        };
        let mut cands = vec![0.0, t];
        let slope = k_relay_a - k_comb_a;
        if slope > 0.0 {
            cands.push((h / slope).clamp(0.0, t));
        }
        cands
            .into_iter()
            .map(|pa| (eval(pa), pa))
            .fold((f64::NEG_INFINITY, 0.0), |acc, c| if c.0 > acc.0 { c } else { acc })
    };
    let (pb, v) = golden_max(|pb| best_split(pb).0, 0.0, g.p1, iters);
    (v, best_split(pb).1, pb)
}

/// Bound coefficients per unit of power for `a` along `psi` and `b` along
/// the direct link, each mixed with an isotropic share `w`.
fn shape_coefficients(g: &Geometry, psi: f64, w: f64) -> Result<(f64, f64, f64, HermitianMatrix, HermitianMatrix)> {
    let iso = HermitianMatrix::identity(2).scale(0.5 * w);
    let a_unit = HermitianMatrix::outer(&g.direction(psi)).scale(1.0 - w).add(&iso)?;
    let b_unit = HermitianMatrix::outer(&g.direction(0.0)).scale(1.0 - w).add(&iso)?;
    Ok((
        a_unit.quad_form(&g.c21)?,
        a_unit.quad_form(&g.c31)?,
        b_unit.quad_form(&g.c31)?,
        a_unit,
        b_unit,
    ))
}

fn lagrangian_dual(g: &Geometry, iters: usize) -> Result<f64> {
    let c21c21 = HermitianMatrix::outer(&g.c21);
    let c31c31 = HermitianMatrix::outer(&g.c31);
    let dual = |lambda: f64| -> f64 {
        let m = c21c21
            .scale(lambda)
            .add(&c31c31.scale(1.0 - lambda))
            .map(|m| m.max_eigenvalue())
            .unwrap_or(f64::NAN)
            .max(g.s);
        let phi = |pb: f64| (g.p1 - pb) * m + (1.0 - lambda) * g.coherent(pb);
        let stationary = {
            let num = (1.0 - lambda) * g.q * g.s.sqrt();
            let den = m - (1.0 - lambda) * g.s;
            if num <= 0.0 {
                0.0
            } else if den <= 0.0 {
                g.p1
            } else {
                ((num / den).powi(2)).min(g.p1)
            }
        };
        [0.0, g.p1, stationary]
            .into_iter()
            .map(phi)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (_, v) = golden_min(dual, 0.0, 1.0, iters);
    if v.is_nan() {
        return Err(Error::Domain("dual evaluation failed".into()));
    }
    Ok(v)
}

/// Direct search over matrix-form parameters in the real plane of the source
/// gains: a rank-one `a` at a free angle, `b` along the direct link, both
/// optionally mixed with an isotropic residual, every candidate evaluated
/// through [`matrix_bound_eval`].
pub fn matrix_bound_search(cfg: &ChannelConfig, spec: &MatrixSearchSpec) -> Result<CapacityResult> {
    let g = synchronous_geometry(cfg)?;
    if spec.angle_points < 2 || spec.residual_points < 1 {
        return Err(Error::validation(
            "search",
            "need >= 2 angle points and >= 1 residual point",
        ));
    }
    let half = std::f64::consts::FRAC_PI_2;
    let psis = linspace(-half, half, spec.angle_points);
    let value_at = |psi: f64, w: f64| -> Result<f64> {
        let (k1, k2, kb, _, _) = shape_coefficients(&g, psi, w)?;
        Ok(split_search(&g, k1, k2, kb, spec.golden_iters).0)
    };
    let values = psis.par_iter().map(|&p| value_at(p, 0.0)).collect::<Result<Vec<_>>>()?;
    let idx = argmax_first(&values).expect("non-empty");
    let (mut psi, mut best_v) = (psis[idx], values[idx]);
    let mut h = psis[1] - psis[0];
    let offsets = linspace(-1.0, 1.0, 9);
    for _ in 0..spec.refine_rounds {
        let center = psi;
        for &d in &offsets {
            let p = center + d * h;
            let v = value_at(p, 0.0)?;
            if v > best_v {
                best_v = v;
                psi = p;
            }
        }
        h *= ZOOM_SHRINK;
    }

    let weights = linspace(0.0, 1.0, spec.residual_points);
    let residual_rates = weights
        .par_iter()
        .map(|&w| value_at(psi, w))
        .collect::<Result<Vec<_>>>()?;
    let best_w = weights[argmax_first(&residual_rates).expect("non-empty")];

    let (k1, k2, kb, a_unit, b_unit) = shape_coefficients(&g, psi, best_w)?;
    let (_, pa, pb) = split_search(&g, k1, k2, kb, spec.golden_iters);
    let p_b = (g.p1 - pa - pb).max(0.0);
    let n0 = g.n0;
    let beta = if g.p1 > 0.0 { (pb / g.p1).sqrt().min(1.0) } else { 0.0 };
    let align = if g.c32.norm() > 0.0 {
        g.c32.conj() / g.c32.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let u = g.direction(0.0).scaled(align);
    let params = MatrixBoundParams {
        a: a_unit.scale(pa * n0),
        b: b_unit.scale(p_b * n0),
        beta,
        u,
    };
    let bounds = matrix_bound_eval(cfg, &params)?;
    let mut result = CapacityResult::new(bounds, Allocation::Matrix(params), g.alpha);
    result.diagnostics = Some(SearchDiagnostics {
        dual_bound: lagrangian_dual(&g, spec.golden_iters)?,
        direction_angle: psi,
        residual_weights: weights,
        residual_rates,
        best_residual_weight: best_w,
    });
    Ok(result)
}

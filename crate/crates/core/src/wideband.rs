//! Numerical checks of the wideband (low-power) limits of mutual information.
//!
//! Every check sweeps the bandwidth `B`, evaluates `B · I` in nats/s for a
//! channel `Y = c^H X + Z` with `Z ~ CN(0, N0 B)`, and compares the sweep with
//! the second-moment expression it should converge to.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::matrix::HermitianMatrix;
use crate::quadrature::complex_gaussian_rule;

/// Geometric default sweep, in units where `N0 = 1`.
pub const DEFAULT_BANDWIDTHS: [f64; 5] = [1e1, 1e2, 1e3, 1e4, 1e5];

/// Default relative convergence tolerance.
pub const DEFAULT_REL_TOL: f64 = 1e-3;

/// Absolute slack added to every convergence threshold so zero-target sweeps
/// are not judged on rounding noise.
pub const ABS_FLOOR: f64 = 1e-9;

/// Supports up to this many atoms use quadrature; larger ones use Monte Carlo.
pub const QUADRATURE_MAX_SUPPORT: usize = 16;

const QUADRATURE_ORDER: usize = 24;
const QUADRATURE_ORDER_ALT: usize = 28;
const MC_PAIRS: usize = 20_000;

/// One bandwidth sweep compared against its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheckReport {
    pub bandwidths: Vec<f64>,
    /// `B · I` at each bandwidth, nats/s.
    pub scaled_mi: Vec<f64>,
    /// Standard error of each `scaled_mi` entry; zero for deterministic rules.
    pub std_err: Vec<f64>,
    pub target: f64,
    /// Absolute threshold on `final_abs_err`.
    pub tolerance: f64,
    pub converged: bool,
    pub final_abs_err: f64,
}

impl LimitCheckReport {
    fn new(bandwidths: Vec<f64>, scaled_mi: Vec<f64>, std_err: Vec<f64>, target: f64, rel_tol: f64) -> Self {
        let final_abs_err = scaled_mi.last().map_or(f64::INFINITY, |v| (v - target).abs());
        let tolerance = rel_tol * target.abs() + ABS_FLOOR;
        Self {
            bandwidths,
            scaled_mi,
            std_err,
            target,
            tolerance,
            converged: final_abs_err <= tolerance,
            final_abs_err,
        }
    }

    pub fn abs_errors(&self) -> Vec<f64> {
        self.scaled_mi.iter().map(|v| (v - self.target).abs()).collect()
    }
}

fn check_sweep(bandwidths: &[f64], noise_psd: f64) -> Result<()> {
    if bandwidths.is_empty() {
        return Err(Error::validation("bandwidths", "empty sweep"));
    }
    if !(noise_psd.is_finite() && noise_psd > 0.0) {
        return Err(Error::Domain(format!("noise_psd must be > 0, got {noise_psd}")));
    }
    if bandwidths.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::Domain("bandwidths must be finite and > 0".into()));
    }
    if bandwidths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("bandwidths", "must be strictly ascending"));
    }
    Ok(())
}

/// `B · ln(1 + signal_var / (N0 B))`.
pub fn gaussian_scaled_mi(signal_var: f64, noise_psd: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    if !(noise_psd.is_finite() && noise_psd > 0.0) {
        return Err(Error::Domain(format!("noise_psd must be > 0, got {noise_psd}")));
    }
    if !(signal_var.is_finite() && signal_var >= 0.0) {
        return Err(Error::Domain(format!("signal variance must be >= 0, got {signal_var}")));
    }
    Ok(bandwidth * (signal_var / (noise_psd * bandwidth)).ln_1p())
}

/// Rank-one covariance of total power `power` aligned with `c`; the maximizer
/// of `var[c^H X]` under a trace constraint. Falls back to an isotropic
/// covariance for a zero channel.
pub fn aligned_covariance(c: &ChannelVector, power: f64) -> HermitianMatrix {
    match c.normalized() {
        Ok(u) => HermitianMatrix::outer(&u).scale(power),
        Err(_) => HermitianMatrix::identity(c.dim()).scale(power / c.dim() as f64),
    }
}

/// Constant channel vector, Gaussian input with covariance `input_cov`.
pub fn check_limit_constant_phase(
    c: &ChannelVector,
    input_cov: &HermitianMatrix,
    noise_psd: f64,
    bandwidths: &[f64],
    rel_tol: f64,
) -> Result<LimitCheckReport> {
    check_sweep(bandwidths, noise_psd)?;
    if input_cov.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            actual: input_cov.dim(),
        });
    }
    if !input_cov.is_psd(1e-12) {
        return Err(Error::validation(
            "input_cov",
            "covariance must be positive semidefinite",
        ));
    }
    let signal_var = input_cov.quad_form(c)?.max(0.0);
    let scaled = bandwidths
        .iter()
        .map(|&b| gaussian_scaled_mi(signal_var, noise_psd, b))
        .collect::<Result<Vec<_>>>()?;
    let n = scaled.len();
    Ok(LimitCheckReport::new(
        bandwidths.to_vec(),
        scaled,
        vec![0.0; n],
        signal_var / noise_psd,
        rel_tol,
    ))
}

fn substream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Channel `c_i = |c_i| e^{jθ_i}` with iid uniform phases known only at the
/// receiver; Gaussian input with covariance `input_cov`.
///
/// Each drawn phase vector is evaluated together with its orbit under
/// `θ_i -> θ_i + π` sign flips, which cancels the cross terms of the
/// quadratic form exactly within every sample.
pub fn check_limit_phase_fading(
    c_mags: &[f64],
    input_cov: &HermitianMatrix,
    noise_psd: f64,
    bandwidths: &[f64],
    num_phase_samples: usize,
    rng_seed: u64,
    rel_tol: f64,
) -> Result<LimitCheckReport> {
    check_sweep(bandwidths, noise_psd)?;
    let n = c_mags.len();
    if input_cov.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: input_cov.dim(),
        });
    }
    if n > 16 {
        return Err(Error::validation("c_mags", "at most 16 antennas supported"));
    }
    if c_mags.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::validation("c_mags", "magnitudes must be finite and >= 0"));
    }
    if num_phase_samples == 0 {
        return Err(Error::validation("num_phase_samples", "must be >= 1"));
    }
    if !input_cov.is_psd(1e-12) {
        return Err(Error::validation(
            "input_cov",
            "covariance must be positive semidefinite",
        ));
    }
    let target: f64 = c_mags
        .iter()
        .enumerate()
        .map(|(i, m)| m * m * input_cov.get(i, i).re)
        .sum::<f64>()
        / noise_psd;

    let per_bandwidth: Vec<(f64, f64)> = bandwidths
        .par_iter()
        .enumerate()
        .map(|(idx, &b)| -> Result<(f64, f64)> {
            let mut rng = substream(rng_seed, idx);
            let mut values = Vec::with_capacity(num_phase_samples);
            for _ in 0..num_phase_samples {
                let phases: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
                let mut acc = 0.0;
                for flips in 0..(1usize << n) {
                    let c: Vec<Complex64> = (0..n)
                        .map(|i| {
                            let extra = if flips >> i & 1 == 1 { std::f64::consts::PI } else { 0.0 };
                            Complex64::from_polar(c_mags[i], phases[i] + extra)
                        })
                        .collect();
                    let v = input_cov.quad_form(&ChannelVector::new(c)?)?.max(0.0);
                    acc += gaussian_scaled_mi(v, noise_psd, b)?;
                }
                values.push(acc / (1usize << n) as f64);
            }
            Ok(mean_and_se(&values))
        })
        .collect::<Result<Vec<_>>>()?;
    let (scaled, se) = per_bandwidth.into_iter().unzip();
    Ok(LimitCheckReport::new(bandwidths.to_vec(), scaled, se, target, rel_tol))
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// One support point of a discrete joint law of an auxiliary label `u` and
/// an input vector `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputAtom {
    pub u: usize,
    pub x: Vec<Complex64>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteInput {
    dim: usize,
    atoms: Vec<InputAtom>,
}

impl DiscreteInput {
    pub fn new(atoms: Vec<InputAtom>) -> Result<Self> {
        let dim = atoms
            .first()
            .map(|a| a.x.len())
            .ok_or_else(|| Error::validation("atoms", "empty support"))?;
        let mut total = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            if a.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: a.x.len(),
                });
            }
            if !(a.prob.is_finite() && a.prob >= 0.0) {
                return Err(Error::validation(format!("atoms[{i}].prob"), "must be finite and >= 0"));
            }
            total += a.prob;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "atoms",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        Ok(Self { dim, atoms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[InputAtom] {
        &self.atoms
    }

    /// Projections `s = c^H x` tagged with label and probability.
    fn project(&self, c: &ChannelVector) -> Result<Vec<Projected>> {
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: c.dim(),
            });
        }
        let mass_of = |u: usize| self.atoms.iter().filter(|a| a.u == u).map(|a| a.prob).sum::<f64>();
        self.atoms
            .iter()
            .filter(|a| a.prob > 0.0)
            .map(|a| {
                let s = c.inner(&ChannelVector::new(a.x.clone())?)?;
                Ok(Projected {
                    u: a.u,
                    s,
                    prob: a.prob,
                    cond_prob: a.prob / mass_of(a.u),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Projected {
    u: usize,
    s: Complex64,
    prob: f64,
    cond_prob: f64,
}

/// `var[c^H X]` and the label-averaged conditional variance `E_U var[c^H X | U]`.
fn variance_split(points: &[Projected]) -> (f64, f64) {
    let mean: Complex64 = points.iter().map(|p| p.prob * p.s).sum();
    let total = points.iter().map(|p| p.prob * (p.s - mean).norm_sqr()).sum();
    let mut labels: Vec<usize> = points.iter().map(|p| p.u).collect();
    labels.sort_unstable();
    labels.dedup();
    let mut conditional = 0.0;
    for u in labels {
        let group: Vec<&Projected> = points.iter().filter(|p| p.u == u).collect();
        let mass: f64 = group.iter().map(|p| p.prob).sum();
        let m: Complex64 = group.iter().map(|p| p.cond_prob * p.s).sum();
        let v: f64 = group.iter().map(|p| p.cond_prob * (p.s - m).norm_sqr()).sum();
        conditional += mass * v;
    }
    (total, conditional)
}

/// `ln E_j[exp(-e_j)]` for the mixture components `j` (weights from `weight`),
/// as seen from component `k` at normalized noise point `z`:
/// `e_j = |d|²/σ² + 2 Re(d z̄)/σ` with `d = s_k - s_j`.
fn log_mixture_ratio(points: &[Projected], k: usize, z: Complex64, sigma: f64, conditional: bool) -> f64 {
    let sk = points[k];
    let mut acc = 0.0;
    for p in points {
        let w = if conditional {
            if p.u != sk.u {
                continue;
            }
            p.cond_prob
        } else {
            p.prob
        };
        let d = sk.s - p.s;
        let e = d.norm_sqr() / (sigma * sigma) + 2.0 * (d * z.conj()).re / sigma;
        acc += w * (-e).exp_m1();
    }
    acc.ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiMethod {
    Quadrature,
    MonteCarlo,
}

enum NoiseRule {
    Fixed(Vec<(Complex64, f64)>),
    /// Antithetic standard circular complex Gaussian pairs `(z, -z)`.
    Sampled(Vec<Complex64>),
}

impl NoiseRule {
    /// Expectation of `f` and its standard error (zero for fixed rules).
    fn expect(&self, f: impl Fn(Complex64) -> f64) -> (f64, f64) {
        match self {
            NoiseRule::Fixed(rule) => (rule.iter().map(|(z, w)| w * f(*z)).sum(), 0.0),
            NoiseRule::Sampled(zs) => {
                let vals: Vec<f64> = zs.iter().map(|z| 0.5 * (f(*z) + f(-z))).collect();
                mean_and_se(&vals)
            }
        }
    }

    fn sampled(pairs: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        NoiseRule::Sampled(
            (0..pairs)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * scale, im * scale)
                })
                .collect(),
        )
    }
}

/// Mutual informations (nats) between a discrete input and `Y = s + Z`,
/// `Z ~ CN(0, σ²)`, plus standard errors.
struct MiSet {
    x_y: (f64, f64),
    x_y_given_u: (f64, f64),
}

fn mutual_informations(points: &[Projected], sigma: f64, rule: &NoiseRule) -> MiSet {
    let mut x_y = (0.0, 0.0);
    let mut x_y_u = (0.0, 0.0);
    for (k, p) in points.iter().enumerate() {
        let (a, sa) = rule.expect(|z| -log_mixture_ratio(points, k, z, sigma, false));
        let (b, sb) = rule.expect(|z| -log_mixture_ratio(points, k, z, sigma, true));
        x_y.0 += p.prob * a;
        x_y.1 += (p.prob * sa).powi(2);
        x_y_u.0 += p.prob * b;
        x_y_u.1 += (p.prob * sb).powi(2);
    }
    MiSet {
        x_y: (x_y.0, x_y.1.sqrt()),
        x_y_given_u: (x_y_u.0, x_y_u.1.sqrt()),
    }
}

/// `I(U; Y)` via the label-mixture route `E[ln p(y|u) - ln p(y)]`.
fn label_information(points: &[Projected], sigma: f64, rule: &NoiseRule) -> (f64, f64) {
    let mut acc = 0.0;
    let mut var = 0.0;
    for (k, p) in points.iter().enumerate() {
        let (v, s) = rule
            .expect(|z| log_mixture_ratio(points, k, z, sigma, true) - log_mixture_ratio(points, k, z, sigma, false));
        acc += p.prob * v;
        var += (p.prob * s).powi(2);
    }
    (acc, var.sqrt())
}

/// Reports for the three limits of a discrete `(U, X)` input, plus the chain
/// rule residual `B |I(X;Y1) - I(U;Y1) - I(X;Y1|U)|` at every bandwidth.
#[derive(Debug, Clone)]
pub struct ConditionalLimitReport {
    /// `B I(U; Y1)` against `(var[c1^H X] - E var[c1^H X | U]) / N0`.
    pub label_y1: LimitCheckReport,
    /// `B I(X; Y2 | U)` against `E var[c2^H X | U] / N0`.
    pub input_y2_given_label: LimitCheckReport,
    /// `B I(X; Y1)` against `var[c1^H X] / N0`.
    pub input_y1: LimitCheckReport,
    pub chain_residual: Vec<f64>,
    /// Per-bandwidth threshold for `chain_residual`.
    pub chain_tolerance: Vec<f64>,
    pub method: MiMethod,
}

impl ConditionalLimitReport {
    pub fn chain_holds(&self) -> bool {
        self.chain_residual
            .iter()
            .zip(&self.chain_tolerance)
            .all(|(r, t)| r <= t)
    }
}

/// Floor of the quadrature-route chain residual threshold, nats/s. The
/// threshold adds twice the disagreement between the two quadrature orders.
pub const QUADRATURE_CHAIN_TOL: f64 = 1e-7;

/// Checks the wideband limits of `I(U;Y1)` and `I(X;Y2|U)` for a discrete
/// joint input. `I(U;Y1)` is computed along a separate route (a different
/// quadrature order, or an independent sample stream) from `I(X;Y1)` and
/// `I(X;Y1|U)`, so the chain rule residual is a genuine consistency check.
pub fn check_conditional_limits(
    joint: &DiscreteInput,
    c1: &ChannelVector,
    c2: &ChannelVector,
    noise_psd: f64,
    bandwidths: &[f64],
    rel_tol: f64,
    rng_seed: u64,
) -> Result<ConditionalLimitReport> {
    check_sweep(bandwidths, noise_psd)?;
    let p1 = joint.project(c1)?;
    let p2 = joint.project(c2)?;
    let (var1, cond1) = variance_split(&p1);
    let (_, cond2) = variance_split(&p2);

    let method = if joint.atoms().len() <= QUADRATURE_MAX_SUPPORT {
        MiMethod::Quadrature
    } else {
        MiMethod::MonteCarlo
    };

    struct Row {
        label: (f64, f64),
        given: (f64, f64),
        input: (f64, f64),
        chain: f64,
        chain_tol: f64,
    }

    let rows: Vec<Row> = bandwidths
        .par_iter()
        .enumerate()
        .map(|(idx, &b)| {
            let sigma = (noise_psd * b).sqrt();
            let (main, alt) = match method {
                MiMethod::Quadrature => (
                    NoiseRule::Fixed(complex_gaussian_rule(QUADRATURE_ORDER)),
                    NoiseRule::Fixed(complex_gaussian_rule(QUADRATURE_ORDER_ALT)),
                ),
                MiMethod::MonteCarlo => {
                    let mut rng = substream(rng_seed, idx);
                    let main = NoiseRule::sampled(MC_PAIRS, &mut rng);
                    let alt = NoiseRule::sampled(MC_PAIRS, &mut rng);
                    (main, alt)
                }
            };
            let y1 = mutual_informations(&p1, sigma, &main);
            let y2 = mutual_informations(&p2, sigma, &main);
            let label = label_information(&p1, sigma, &alt);
            let chain = b * (y1.x_y.0 - label.0 - y1.x_y_given_u.0).abs();
            let chain_tol = match method {
                MiMethod::Quadrature => {
                    // Embedded estimate: each term evaluated at both orders.
                    let y1_alt = mutual_informations(&p1, sigma, &alt);
                    let label_main = label_information(&p1, sigma, &main);
                    let spread = (y1.x_y.0 - y1_alt.x_y.0).abs()
                        + (label.0 - label_main.0).abs()
                        + (y1.x_y_given_u.0 - y1_alt.x_y_given_u.0).abs();
                    QUADRATURE_CHAIN_TOL + 2.0 * b * spread
                }
                MiMethod::MonteCarlo => {
                    3.0 * b * (y1.x_y.1.powi(2) + label.1.powi(2) + y1.x_y_given_u.1.powi(2)).sqrt() + ABS_FLOOR
                }
            };
            Row {
                label: (b * label.0, b * label.1),
                given: (b * y2.x_y_given_u.0, b * y2.x_y_given_u.1),
                input: (b * y1.x_y.0, b * y1.x_y.1),
                chain,
                chain_tol,
            }
        })
        .collect();

    let col = |f: &dyn Fn(&Row) -> (f64, f64)| -> (Vec<f64>, Vec<f64>) { rows.iter().map(f).unzip() };
    let (label_v, label_se) = col(&|r| r.label);
    let (given_v, given_se) = col(&|r| r.given);
    let (input_v, input_se) = col(&|r| r.input);

    Ok(ConditionalLimitReport {
        label_y1: LimitCheckReport::new(
            bandwidths.to_vec(),
            label_v,
            label_se,
            (var1 - cond1) / noise_psd,
            rel_tol,
        ),
        input_y2_given_label: LimitCheckReport::new(bandwidths.to_vec(), given_v, given_se, cond2 / noise_psd, rel_tol),
        input_y1: LimitCheckReport::new(bandwidths.to_vec(), input_v, input_se, var1 / noise_psd, rel_tol),
        chain_residual: rows.iter().map(|r| r.chain).collect(),
        chain_tolerance: rows.iter().map(|r| r.chain_tol).collect(),
        method,
    })
}

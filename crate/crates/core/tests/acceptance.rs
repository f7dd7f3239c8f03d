//! Acceptance criteria, one pass/fail line each.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaynet::capacity::{
    matrix_bound_search, thm1_achievable, thm1_optimize, thm1_phase_fading, Allocation, GridSpec, MatrixSearchSpec,
};
use relaynet::channel::{ChannelConfig, ChannelVector, CsiMode};
use relaynet::matrix::{conditional_cov_bound_check, CovEstimation, FiniteJoint, HermitianMatrix, JointAtom};
use relaynet::region::*;
use relaynet::repro::run_counterexample;
use relaynet::wideband::{
    aligned_covariance, check_conditional_limits, check_limit_constant_phase, check_limit_phase_fading, DiscreteInput,
    InputAtom, DEFAULT_BANDWIDTHS,
};

mod common;
use common::lp_min_power;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cplx(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

fn cvec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ChannelVector {
    ChannelVector::new((0..n).map(|_| cplx(rng, scale)).collect()).unwrap()
}

/// `L L^H` for a random lower-triangular `L`, scaled to the given trace.
fn random_psd(rng: &mut ChaCha8Rng, trace: f64) -> HermitianMatrix {
    let l = vec![cplx(rng, 1.0), Complex64::new(0.0, 0.0), cplx(rng, 1.0), cplx(rng, 1.0)];
    let m = HermitianMatrix::identity(2).congruence(&l).unwrap();
    m.scale(trace / m.trace())
}

fn worked_example_triple() -> (f64, f64, f64) {
    (1.9149, 0.9636, 1.9636)
}

fn c1_counterexample() -> Verdict {
    let start = Instant::now();
    let r = run_counterexample().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    for c in &r.comparisons {
        ensure(c.pass(), || {
            format!(
                "{} = {} vs {} (tol {})",
                c.quantity, c.computed, c.published, c.tolerance
            )
        })?;
    }
    ensure((r.trace_x - 2.0).abs() < 1e-12, || format!("tr X = {}", r.trace_x))?;
    ensure(r.gap > 0.0, || format!("gap {}", r.gap))?;
    ensure(r.orderings.iter().all(|o| o.holds()), || {
        "matrix ordering violated".into()
    })?;
    ensure(r.all_match_published, || "report flags a mismatch".into())?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} quantities within tolerance, P = {:.5}, gap = {:.3e}, {elapsed:?}",
        r.comparisons.len(),
        r.p_required,
        r.gap
    ))
}

/// Variance split of `c^H X` over the label, by direct enumeration.
fn label_variances(atoms: &[InputAtom], c: &ChannelVector, labels: usize) -> (f64, f64) {
    let proj = |a: &InputAtom| c.inner(&ChannelVector::new(a.x.clone()).unwrap()).unwrap();
    let mean: Complex64 = atoms.iter().map(|a| a.prob * proj(a)).sum();
    let total: f64 = atoms.iter().map(|a| a.prob * (proj(a) - mean).norm_sqr()).sum();
    let mut explained = 0.0;
    for u in 0..labels {
        let mass: f64 = atoms.iter().filter(|a| a.u == u).map(|a| a.prob).sum();
        if mass > 0.0 {
            let m: Complex64 = atoms
                .iter()
                .filter(|a| a.u == u)
                .map(|a| a.prob * proj(a))
                .sum::<Complex64>()
                / mass;
            explained += mass * (m - mean).norm_sqr();
        }
    }
    (total, explained)
}

fn c2_wideband() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let bws = DEFAULT_BANDWIDTHS;
    let mut worst_rel = 0.0f64;
    let (mut worst_chain, mut widest_tol) = (0.0f64, 0.0f64);
    for inst in 0..20 {
        let c = cvec(&mut rng, 2, 1.5);
        let power = rng.random_range(0.1..5.0);
        let n0 = rng.random_range(0.5..2.0);

        let cov = aligned_covariance(&c, power);
        let rep = check_limit_constant_phase(&c, &cov, n0, &bws, 1e-3).map_err(|e| e.to_string())?;
        let oracle = power * c.norm_sqr() / n0;
        ensure((rep.target - oracle).abs() <= 1e-12 * oracle.max(1.0), || {
            format!("instance {inst}: target {} vs {oracle}", rep.target)
        })?;
        let errs = rep.abs_errors();
        ensure(
            errs[errs.len() - 1] < 1e-3 * rep.target && errs[errs.len() - 1] < errs[0],
            || format!("instance {inst}: constant-phase errors {errs:?}, target {}", rep.target),
        )?;
        worst_rel = worst_rel.max(errs[errs.len() - 1] / rep.target);

        let mags: Vec<f64> = c.entries().iter().map(|z| z.norm()).collect();
        let pf_cov = random_psd(&mut rng, power);
        let pf = check_limit_phase_fading(&mags, &pf_cov, n0, &bws, 256, inst, 1e-3).map_err(|e| e.to_string())?;
        let pf_oracle = (mags[0].powi(2) * pf_cov.get(0, 0).re + mags[1].powi(2) * pf_cov.get(1, 1).re) / n0;
        ensure((pf.target - pf_oracle).abs() <= 1e-12 * pf_oracle.max(1.0), || {
            format!("instance {inst}: phase-fading target {} vs {pf_oracle}", pf.target)
        })?;
        let errs = pf.abs_errors();
        ensure(
            errs[errs.len() - 1] < 1e-3 * pf.target && errs[errs.len() - 1] < errs[0],
            || format!("instance {inst}: phase-fading errors {errs:?}, target {}", pf.target),
        )?;

        let labels = rng.random_range(2..4usize);
        let mut atoms: Vec<InputAtom> = (0..rng.random_range(4..13usize))
            .map(|k| InputAtom {
                u: k % labels,
                x: (0..2).map(|_| cplx(&mut rng, 1.5)).collect(),
                prob: rng.random_range(0.2..1.0),
            })
            .collect();
        let mass: f64 = atoms.iter().map(|a| a.prob).sum();
        atoms.iter_mut().for_each(|a| a.prob /= mass);
        let joint = DiscreteInput::new(atoms.clone()).map_err(|e| e.to_string())?;
        let c2 = cvec(&mut rng, 2, 1.5);
        let rep = check_conditional_limits(&joint, &c, &c2, n0, &bws, 1e-3, inst).map_err(|e| e.to_string())?;
        ensure(rep.chain_holds(), || {
            format!(
                "instance {inst}: chain residual {:?} vs {:?}",
                rep.chain_residual, rep.chain_tolerance
            )
        })?;
        worst_chain = rep.chain_residual.iter().fold(worst_chain, |m, v| m.max(*v));
        widest_tol = rep.chain_tolerance.iter().fold(widest_tol, |m, v| m.max(*v));
        ensure(widest_tol < 1e-4, || {
            format!("instance {inst}: chain tolerance {widest_tol} too loose to be informative")
        })?;
        let (total, explained) = label_variances(&atoms, &c, labels);
        ensure((rep.input_y1.target - total / n0).abs() < 1e-9 * total.max(1.0), || {
            format!(
                "instance {inst}: I(X;Y) target {} vs {}",
                rep.input_y1.target,
                total / n0
            )
        })?;
        ensure(
            (rep.label_y1.target - explained / n0).abs() < 1e-9 * total.max(1.0),
            || {
                format!(
                    "instance {inst}: I(U;Y) target {} vs {}",
                    rep.label_y1.target,
                    explained / n0
                )
            },
        )?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("20 instances, worst relative error at B = 1e5: {worst_rel:.2e}, chain residual <= {worst_chain:.1e} (tolerance <= {widest_tol:.1e}), {elapsed:?}"))
}

fn single_relay(rng: &mut ChaCha8Rng) -> ChannelConfig {
    let c21 = cvec(rng, 2, 1.5);
    let c31 = cvec(rng, 2, 1.5);
    let c32 = cplx(rng, 1.5);
    ChannelConfig::single_relay(
        c21,
        c31,
        c32,
        rng.random_range(0.1..3.0),
        rng.random_range(0.0..3.0),
        CsiMode::Synchronous,
    )
    .unwrap()
}

fn c3_cross_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst_rel, mut worst_ach) = (0.0f64, 0.0f64);
    for inst in 0..60 {
        let cfg = single_relay(&mut rng);
        let opt = thm1_optimize(&cfg, &GridSpec::default()).map_err(|e| e.to_string())?;
        let search = matrix_bound_search(&cfg, &MatrixSearchSpec::default()).map_err(|e| e.to_string())?;
        let rel = (opt.rate - search.rate).abs() / opt.rate.abs().max(1e-12);
        worst_rel = worst_rel.max(rel);
        ensure(rel < 1e-3, || {
            format!("instance {inst}: {} vs {}", opt.rate, search.rate)
        })?;
        let Allocation::Closed(alloc) = opt.allocation else {
            return Err("closed-form optimizer returned a matrix allocation".into());
        };
        let ach = thm1_achievable(&cfg, &alloc).map_err(|e| e.to_string())?;
        worst_ach = worst_ach.max((ach - opt.rate).abs());
        ensure((ach - opt.rate).abs() < 1e-6, || {
            format!("instance {inst}: achievable {ach} vs bound {}", opt.rate)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "60 instances, worst relative gap {worst_rel:.2e}, worst achievable gap {worst_ach:.2e}, {elapsed:?}"
    ))
}

fn c4_phase_fading() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let norm2 = |v: &[Complex64]| v.iter().map(|z| z.re * z.re + z.im * z.im).sum::<f64>();
    let mut worst = 0.0f64;
    for inst in 0..102 {
        let mut c21: Vec<Complex64> = (0..2).map(|_| cplx(&mut rng, 1.5)).collect();
        let c31: Vec<Complex64> = (0..2).map(|_| cplx(&mut rng, 1.5)).collect();
        let mut c32 = cplx(&mut rng, 1.5);
        match inst {
            100 => c21 = vec![Complex64::new(0.0, 0.0); 2],
            101 => c32 = Complex64::new(0.0, 0.0),
            _ => {}
        }
        let (p1, p2, n0) = (
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..3.0),
            rng.random_range(0.5..2.0),
        );
        let cfg = ChannelConfig::single_relay(
            ChannelVector::new(c21.clone()).unwrap(),
            ChannelVector::new(c31.clone()).unwrap(),
            c32,
            p1,
            p2,
            CsiMode::PhaseFading,
        )
        .and_then(|c| c.with_noise_psd(n0))
        .map_err(|e| e.to_string())?;
        let got = thm1_phase_fading(&cfg).map_err(|e| e.to_string())?;
        let (s, r, g) = (norm2(&c31), norm2(&c21), c32.re * c32.re + c32.im * c32.im);
        let broadcast = if s > r { s * p1 / n0 } else { r * p1 / n0 };
        let combine = s * p1 / n0 + g * p2 / n0;
        let oracle = if broadcast < combine { broadcast } else { combine };
        worst = worst.max((got - oracle).abs());
        ensure((got - oracle).abs() <= 1e-12, || {
            format!("instance {inst}: {got} vs {oracle}")
        })?;
        if inst >= 100 {
            ensure((got - s * p1 / n0).abs() <= 1e-12, || {
                format!("degenerate instance {inst}: {got} vs {}", s * p1 / n0)
            })?;
        }
    }
    Ok(format!(
        "100 random and 2 degenerate instances, worst deviation {worst:.1e}"
    ))
}

fn c5_mac() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for inst in 0..50 {
        let (g42, g43) = (cplx(&mut rng, 1.5), cplx(&mut rng, 1.5));
        let (p2, p3, n0) = (
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..3.0),
            rng.random_range(0.5..2.0),
        );
        let e = ChannelVector::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let cfg = ChannelConfig::diamond(e.clone(), e, g42, g43, 1.0, p2, p3, CsiMode::Synchronous)
            .and_then(|c| c.with_noise_psd(n0))
            .map_err(|e| e.to_string())?;
        let (a, b) = (g42.norm_sqr() * p2 / n0, g43.norm_sqr() * p3 / n0);
        let at = |rho: f64| mac_region_point(&cfg, MacCorrelation::new(rho).unwrap()).unwrap();
        let (z, one) = (at(0.0), at(1.0));
        let tol = 1e-12 * (a + b).max(1.0);
        ensure(
            (z.r23_max - a).abs() <= tol && (z.r32_max - b).abs() <= tol && (z.r_max - a - b).abs() <= tol,
            || format!("instance {inst}: rho = 0 gives {z:?}"),
        )?;
        let coherent = (a.sqrt() + b.sqrt()).powi(2);
        ensure(
            one.r23_max.abs() <= tol && one.r32_max.abs() <= tol && (one.r_max - coherent).abs() <= tol,
            || format!("instance {inst}: rho = 1 gives {one:?}"),
        )?;
        let sweep: Vec<f64> = (0..=40).map(|i| at(i as f64 / 40.0).r_max).collect();
        for (k, w) in sweep.windows(3).enumerate() {
            ensure(w[0] - 2.0 * w[1] + w[2] <= tol, || {
                format!("instance {inst}: second difference at step {k} positive")
            })?;
        }
    }
    Ok("50 instances: endpoints exact, sum-rate second differences nonpositive over 41 rho values".into())
}

fn random_joint(rng: &mut ChaCha8Rng) -> FiniteJoint {
    let alphabet: Vec<Complex64> = (0..rng.random_range(2..5usize)).map(|_| cplx(rng, 2.0)).collect();
    let mut atoms: Vec<JointAtom> = (0..rng.random_range(3..12usize))
        .map(|_| JointAtom {
            x: (0..2).map(|_| cplx(rng, 2.0)).collect(),
            y: alphabet[rng.random_range(0..alphabet.len())],
            prob: rng.random_range(0.1..1.0),
        })
        .collect();
    // Make sure Y takes at least two values.
    atoms[0].y = alphabet[0];
    atoms[1].y = alphabet[1];
    let mass: f64 = atoms.iter().map(|a| a.prob).sum();
    atoms.iter_mut().for_each(|a| a.prob /= mass);
    FiniteJoint::new(atoms).unwrap()
}

fn c6_conditional_covariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst_exact = f64::INFINITY;
    for inst in 0..200 {
        let joint = random_joint(&mut rng);
        let exact = conditional_cov_bound_check(&joint, CovEstimation::Exact).map_err(|e| e.to_string())?;
        let lambda = exact.verdict.min_eigenvalue_of_difference;
        worst_exact = worst_exact.min(lambda);
        ensure(lambda >= -1e-9, || {
            format!("joint {inst}: exact min eigenvalue {lambda}")
        })?;
        let sampled = conditional_cov_bound_check(
            &joint,
            CovEstimation::Sampled {
                num_samples: 4000,
                seed: inst,
            },
        )
        .map_err(|e| e.to_string())?;
        ensure(sampled.holds, || {
            format!(
                "joint {inst}: sampled min eigenvalue {} below -{}",
                sampled.verdict.min_eigenvalue_of_difference, sampled.tolerance
            )
        })?;
    }
    Ok(format!(
        "200 joints, exact and sampled; smallest exact eigenvalue {worst_exact:.3e}"
    ))
}

fn c7_min_power() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    for inst in 0..1000 {
        let c2: f64 = rng.random_range(0.1..3.0);
        let c3: f64 = rng.random_range(0.1..3.0);
        let c0 = rng.random_range(c2 * c3 / (c2 + c3)..=c2.min(c3));
        let r2: f64 = rng.random_range(0.0..3.0);
        let r3: f64 = rng.random_range(0.0..3.0);
        let r = rng.random_range(r2.max(r3)..=r2 + r3);
        let got = min_power(r2, r3, r, c2, c3, c0).map_err(|e| e.to_string())?.p_total;
        let lp = lp_min_power(r2, r3, r, c2, c3, c0);
        worst = worst.max((got - lp).abs());
        ensure((got - lp).abs() <= 1e-6, || format!("triple {inst}: {got} vs LP {lp}"))?;
    }
    let (r2, r3, r) = worked_example_triple();
    let p = min_power(r2, r3, r, 1.0, 1.0, 0.9605)
        .map_err(|e| e.to_string())?
        .p_total;
    ensure((p - 2.0011).abs() <= 2e-3, || format!("worked-example triple gives {p}"))?;
    Ok(format!(
        "1000 triples, worst LP deviation {worst:.1e}; worked-example triple P = {p:.5}"
    ))
}

fn c8_broadcast_gap() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let spec = BcSweepSpec { points_per_dim: 16 };
    let mut worst_ratio = 0.0f64;
    for inst in 0..10 {
        let crossed = inst % 2 == 1;
        let hi = [rng.random_range(0.8..2.0), rng.random_range(0.8..2.0)];
        let lo = [rng.random_range(0.05..0.75), rng.random_range(0.05..0.75)];
        let (m2, m3) = if crossed {
            ([hi[0], lo[1]], [lo[0], hi[1]])
        } else {
            (hi, lo)
        };
        let phase = |m: [f64; 2], rng: &mut ChaCha8Rng| {
            ChannelVector::new(
                m.iter()
                    .map(|&v| Complex64::from_polar(v, rng.random_range(0.0..std::f64::consts::TAU)))
                    .collect(),
            )
            .unwrap()
        };
        let c21 = phase(m2, &mut rng);
        let c31 = phase(m3, &mut rng);
        let one = Complex64::new(1.0, 0.0);
        let cfg = ChannelConfig::diamond(
            c21,
            c31,
            one,
            one,
            rng.random_range(0.5..4.0),
            1.0,
            1.0,
            CsiMode::PhaseFading,
        )
        .map_err(|e| e.to_string())?;
        let budgets = AntennaBudgets::even_split(&cfg).map_err(|e| e.to_string())?;
        let rep = bc_outer_vs_common_private(&cfg, &budgets, &spec).map_err(|e| e.to_string())?;
        worst_ratio = worst_ratio.max(rep.max_gap / rep.resolution);
        ensure(rep.max_gap <= 2.0 * rep.resolution, || {
            format!(
                "instance {inst} (crossed = {crossed}): gap {} vs resolution {}",
                rep.max_gap, rep.resolution
            )
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "5 dominated and 5 crossed instances, worst gap / resolution {worst_ratio:.3}, {elapsed:?}"
    ))
}

/// Draws `C` with `0 ⪯ C ⪯ X` as `L M L^H` where `X = L L^H` and `0 ⪯ M ⪯ I`.
fn random_below(rng: &mut ChaCha8Rng, x: &HermitianMatrix) -> HermitianMatrix {
    let l = x.cholesky().expect("X is positive definite");
    let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let u = [
        Complex64::new(theta.cos(), 0.0),
        Complex64::from_polar(theta.sin(), phi),
    ];
    let w = [Complex64::new(0.0, 0.0) - u[1].conj(), u[0].conj()];
    let m = HermitianMatrix::outer_slice(&u)
        .scale(rng.random_range(0.0..1.0))
        .add(&HermitianMatrix::outer_slice(&w).scale(rng.random_range(0.0..1.0)))
        .unwrap();
    m.congruence(&l).unwrap()
}

fn c9_beamforming() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut checked = 0;
    let mut instances = 0;
    let mut tries = 0;
    while instances < 10 {
        tries += 1;
        ensure(tries < 10_000, || {
            "could not draw instances meeting the beamforming condition".into()
        })?;
        let c21 = cvec(&mut rng, 2, 1.5);
        let c31 = cvec(&mut rng, 2, 1.5);
        if c21.is_zero() || c31.is_zero() || !thm3_condition(&c21, &c31).unwrap() {
            continue;
        }
        instances += 1;
        let one = Complex64::new(1.0, 0.0);
        let p = rng.random_range(0.5..3.0);
        let cfg =
            ChannelConfig::diamond(c21, c31, one, one, p, 1.0, 1.0, CsiMode::Synchronous).map_err(|e| e.to_string())?;
        for draw in 0..100 {
            let share: f64 = rng.random_range(0.3..1.0);
            let x = random_psd(&mut rng, p * share);
            let a = random_below(&mut rng, &x);
            let b = random_below(&mut rng, &x);
            ensure(a.trace() > 0.0, || "A draw is zero".into())?;
            let bounds = thm3_outer_point(&cfg, &x, &a, &b).map_err(|e| format!("draw {draw}: {e}"))?;
            let pt = bounds.point();
            let dominated = thm3_dominates(&cfg, &pt, 1e-9).map_err(|e| e.to_string())?;
            ensure(dominated, || {
                format!("instance {instances}, draw {draw}: {pt:?} beyond the beamforming frontier")
            })?;
            checked += 1;
        }
    }
    let c21 = ChannelVector::from_real(&[1.0, 0.0]);
    let c31 = ChannelVector::from_real(&[0.4f64.cos(), 0.4f64.sin()]);
    ensure(!thm3_condition(&c21, &c31).unwrap(), || {
        "condition holds at the worked-example geometry".into()
    })?;
    Ok(format!(
        "{checked} outer points over {instances} instances dominated; condition false at the worked-example geometry"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("worked-example reproduction", c1_counterexample),
        ("wideband convergence and chain rule", c2_wideband),
        ("closed form vs matrix search", c3_cross_oracle),
        ("phase-fading capacity formula", c4_phase_fading),
        ("MAC endpoints and concavity", c5_mac),
        ("conditional covariance bound", c6_conditional_covariance),
        ("minimum power vs LP", c7_min_power),
        ("broadcast outer vs common/private", c8_broadcast_gap),
        ("beamforming frontier dominance", c9_beamforming),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Ok(Err(why)) => {
                failures += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
            Err(_) => {
                failures += 1;
                println!("criterion {}: FAIL {name}: panicked", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

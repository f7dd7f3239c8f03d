use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaynet::channel::{ChannelConfig, ChannelVector, CsiMode};
use relaynet::error::Error;
use relaynet::matrix::HermitianMatrix;
use relaynet::region::*;

mod common;
use common::lp_min_power;

fn cvec(v: &[(f64, f64)]) -> ChannelVector {
    ChannelVector::new(v.iter().map(|&(re, im)| Complex64::new(re, im)).collect()).unwrap()
}

fn diamond(c21: ChannelVector, c31: ChannelVector, p1: f64, csi: CsiMode) -> ChannelConfig {
    let one = Complex64::new(1.0, 0.0);
    ChannelConfig::diamond(c21, c31, one, one, p1, 1.0, 1.0, csi).unwrap()
}

#[test]
fn min_power_matches_lp_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c2: f64 = rng.random_range(0.1..3.0);
        let c3: f64 = rng.random_range(0.1..3.0);
        let c0 = rng.random_range(c2 * c3 / (c2 + c3)..=c2.min(c3));
        let r2: f64 = rng.random_range(0.0..2.0);
        let r3: f64 = rng.random_range(0.0..2.0);
        let r = rng.random_range(f64::max(r2, r3)..=r2 + r3);
        let got = min_power(r2, r3, r, c2, c3, c0).unwrap();
        let lp = lp_min_power(r2, r3, r, c2, c3, c0);
        worst = worst.max((got.p_total - lp).abs() / lp.max(1.0));
        let split = got.r0 / c0 + got.r2_private / c2 + got.r3_private / c3;
        assert!((split - got.p_total).abs() < 1e-12);
    }
    assert!(worst < 1e-9, "worst relative gap {worst}");
}

#[test]
fn min_power_of_tilted_pair() {
    let m = min_power(1.9149, 0.9636, 1.9636, 1.0, 1.0, 0.2f64.cos().powi(2)).unwrap();
    assert!((m.p_total - 2.0011).abs() < 2e-3, "{}", m.p_total);
}

/// Grid over the unit sphere of C^2 modulo a global phase.
fn max_min_brute(c21: &ChannelVector, c31: &ChannelVector, n: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..=n {
        let a = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
        for j in 0..2 * n {
            let phi = std::f64::consts::PI * j as f64 / n as f64;
            let u = cvec(&[(a.cos(), 0.0), (a.sin() * phi.cos(), a.sin() * phi.sin())]);
            let v2 = c21.inner(&u).unwrap().norm_sqr();
            let v3 = c31.inner(&u).unwrap().norm_sqr();
            best = best.max(v2.min(v3));
        }
    }
    best
}

#[test]
fn max_min_beam_matches_sphere_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..25 {
        let mut draw = || {
            cvec(&[
                (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)),
                (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)),
            ])
        };
        let (c21, c31) = (draw(), draw());
        let exact = max_min_beam(&c21, &c31).unwrap();
        let brute = max_min_brute(&c21, &c31, 400);
        assert!(brute <= exact + 1e-12, "brute {brute} above {exact}");
        assert!(exact - brute < 2e-4 * exact.max(1.0), "brute {brute} vs {exact}");
    }
}

proptest! {
    #[test]
    fn max_min_beam_symmetric_and_phase_invariant(
        a in prop::array::uniform4(-2.0f64..2.0),
        b in prop::array::uniform4(-2.0f64..2.0),
        phi in 0.0f64..6.3,
    ) {
        let c21 = cvec(&[(a[0], a[1]), (a[2], a[3])]);
        let c31 = cvec(&[(b[0], b[1]), (b[2], b[3])]);
        prop_assume!(c21.norm() > 1e-3 && c31.norm() > 1e-3);
        let m = max_min_beam(&c21, &c31).unwrap();
        let swapped = max_min_beam(&c31, &c21).unwrap();
        let rotated = max_min_beam(&c21.scaled(Complex64::from_polar(1.0, phi)), &c31).unwrap();
        let tol = 1e-9 * m.max(1.0);
        prop_assert!((m - swapped).abs() < tol);
        prop_assert!((m - rotated).abs() < tol);
        prop_assert!(m <= c21.norm_sqr().min(c31.norm_sqr()) + tol);
    }

    #[test]
    fn mac_sum_rate_concave_in_rho(
        g in prop::array::uniform2(0.05f64..3.0),
        p in prop::array::uniform2(0.05f64..3.0),
    ) {
        let cfg = ChannelConfig::diamond(
            ChannelVector::from_real(&[1.0, 0.0]),
            ChannelVector::from_real(&[1.0, 0.0]),
            Complex64::new(g[0], 0.0),
            Complex64::new(g[1], 0.0),
            1.0,
            p[0],
            p[1],
            CsiMode::Synchronous,
        )
        .unwrap();
        let r: Vec<f64> = (0..=20)
            .map(|i| mac_region_point(&cfg, MacCorrelation::new(i as f64 / 20.0).unwrap()).unwrap().r_max)
            .collect();
        for w in r.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-12 * w[1].max(1.0));
        }
    }

    #[test]
    fn broadcast_rates_grow_with_budget(
        a in prop::array::uniform2(0.1f64..2.0),
        b in prop::array::uniform2(0.1f64..2.0),
        t in 0.0f64..1.0,
        scale in 1.0f64..3.0,
    ) {
        let cfg = diamond(ChannelVector::from_real(&a), ChannelVector::from_real(&b), 2.0, CsiMode::PhaseFading);
        let small = AntennaBudgets::new(1.0, 1.0).unwrap();
        let large = AntennaBudgets::new(scale, scale).unwrap();
        for family in [BroadcastSweep::Common, BroadcastSweep::PrivateSplit] {
            let lo = bc_common_private_rates(&cfg, &small, &family.allocation(&small, t)).unwrap().point();
            let hi = bc_common_private_rates(&cfg, &large, &family.allocation(&large, t)).unwrap().point();
            prop_assert!(hi.dominates(&lo, 1e-12));
        }
    }

    #[test]
    fn achievable_never_exceeds_outer(
        a in prop::array::uniform2(0.1f64..2.0),
        b in prop::array::uniform2(0.1f64..2.0),
        w in prop::array::uniform6(0.0f64..1.0),
    ) {
        let cfg = diamond(ChannelVector::from_real(&a), ChannelVector::from_real(&b), 2.0, CsiMode::PhaseFading);
        let budgets = AntennaBudgets::new(1.0, 1.0).unwrap();
        let (s1, s2) = (w[0] + w[1] + w[2], w[3] + w[4] + w[5]);
        prop_assume!(s1 > 1e-6 && s2 > 1e-6);
        let alloc = CommonPrivateAllocation {
            p1c: w[0] / s1, p12: w[1] / s1, p13: w[2] / s1,
            p2c: w[3] / s2, p22: w[4] / s2, p23: w[5] / s2,
        };
        let ach = bc_common_private_rates(&cfg, &budgets, &alloc).unwrap().point();
        let outer = bc_outer_bounds(&cfg, &budgets, &alloc).unwrap().point();
        prop_assert!(outer.dominates(&ach, 1e-12));
    }
}

/// When relay 2 sees both antennas at least as well as relay 3, folding the
/// weaker relay's private power into the common part never lowers a bound.
#[test]
fn dominated_gains_favour_common_power() {
    let cfg = diamond(
        ChannelVector::from_real(&[1.5, 1.2]),
        ChannelVector::from_real(&[0.7, 0.4]),
        2.0,
        CsiMode::PhaseFading,
    );
    let budgets = AntennaBudgets::new(1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let w: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let alloc = CommonPrivateAllocation {
            p1c: -0.2 * w[0],
            p12: 0.2 * w[0] + 0.3 * w[1],
            p13: 0.2 * w[0] + 0.3,
            p2c: -0.1 * w[2],
            p22: 0.1 * w[2] + 0.3 * w[3],
            p23: 0.1 * w[2] + 0.2,
        };
        let before = bc_outer_bounds(&cfg, &budgets, &alloc).unwrap();
        let moved = CommonPrivateAllocation {
            p1c: alloc.p1c + alloc.p13,
            p13: 0.0,
            p2c: alloc.p2c + alloc.p23,
            p23: 0.0,
            ..alloc
        };
        let after = bc_outer_bounds(&cfg, &budgets, &moved).unwrap();
        assert!(after.r2 >= before.r2 - 1e-12);
        assert!(after.r3 >= before.r3 - 1e-12);
        assert!(after.r_sum1 >= before.r_sum1 - 1e-12);
        assert!(after.r_sum2 >= before.r_sum2 - 1e-12);
    }
}

fn gap_instances(crossed: bool, seed: u64) -> Vec<ChannelConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..5)
        .map(|_| {
            let hi = [rng.random_range(0.8..2.0), rng.random_range(0.8..2.0)];
            let lo = [rng.random_range(0.1..0.7), rng.random_range(0.1..0.7)];
            let (a, b) = if crossed {
                ([hi[0], lo[1]], [lo[0], hi[1]])
            } else {
                (hi, lo)
            };
            diamond(
                ChannelVector::from_real(&a),
                ChannelVector::from_real(&b),
                2.0,
                CsiMode::PhaseFading,
            )
        })
        .collect()
}

#[test]
fn broadcast_gap_within_grid_resolution() {
    let spec = BcSweepSpec::default();
    for (crossed, seed) in [(false, 21), (true, 22)] {
        for cfg in gap_instances(crossed, seed) {
            let budgets = AntennaBudgets::even_split(&cfg).unwrap();
            let rep = bc_outer_vs_common_private(&cfg, &budgets, &spec).unwrap();
            eprintln!(
                "crossed={crossed} gap={:.3e} resolution={:.3e}",
                rep.max_gap, rep.resolution
            );
            assert!(
                rep.max_gap <= 2.0 * rep.resolution,
                "crossed={crossed}: {} > 2 x {}",
                rep.max_gap,
                rep.resolution
            );
        }
    }
}

#[test]
fn beamforming_sweep_is_on_frontier() {
    let cfg = diamond(
        cvec(&[(2.0, 0.0), (0.3, 0.1)]),
        cvec(&[(1.0, 0.0), (0.2, -0.1)]),
        3.0,
        CsiMode::Synchronous,
    );
    for row in beamforming_sweep(&cfg, 11).unwrap() {
        assert!(row.feasible);
        let (r2, r3) = (row.rates[0].1, row.rates[1].1);
        let best = thm3_frontier(&cfg, r3).unwrap().unwrap();
        assert!((r2 - best).abs() < 1e-9 * best.max(1.0), "{r2} vs {best}");
    }
}

#[test]
fn matrix_outer_rejects_bad_covariances() {
    let c = ChannelVector::from_real(&[1.0, 0.0]);
    let x = HermitianMatrix::diagonal(&[1.0, 0.5]);
    let big = HermitianMatrix::diagonal(&[2.0, 0.0]);
    let zero = HermitianMatrix::zeros(2);
    assert!(matches!(
        matrix_outer_bounds(&c, &c, 1.0, 1.0, &x, &zero, &zero),
        Err(Error::Constraint { .. })
    ));
    assert!(matches!(
        matrix_outer_bounds(&c, &c, 2.0, 1.0, &x, &big, &zero),
        Err(Error::Constraint { .. })
    ));
    let ok = matrix_outer_bounds(&c, &c, 2.0, 1.0, &x, &zero, &zero).unwrap();
    assert_eq!((ok.r2, ok.r3, ok.ra, ok.rb), (1.0, 1.0, 1.0, 1.0));
}

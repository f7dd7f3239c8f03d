//! Worked example: a synchronous outer-bound point that common/private
//! messaging cannot reach with the same total power.

use std::fmt::Write as _;
use std::io::Write;

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::matrix::{loewner_compare, HermitianMatrix, LoewnerRelation, EXACT_PSD_TOL};
use crate::region::{matrix_outer_bounds, max_min_beam, min_power, MatrixOuterBounds};

/// Angle between the two unit relay gains.
pub const ALPHA: f64 = 0.4;
/// Angle of the beam `v` with `X - B = v v^H`.
pub const BEAM_ANGLE: f64 = 0.208;
/// Weight of `A` along `c31`.
pub const A_WEIGHT: f64 = 0.05;

const TOL: f64 = 1e-4;
const POWER_TOL: f64 = 2e-3;

/// One computed quantity next to its published four-decimal value.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub quantity: &'static str,
    pub computed: f64,
    pub published: f64,
    pub tolerance: f64,
}

impl Comparison {
    pub fn abs_err(&self) -> f64 {
        (self.computed - self.published).abs()
    }

    pub fn pass(&self) -> bool {
        self.abs_err() <= self.tolerance
    }
}

/// Matrix ordering checked on the example's covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingCheck {
    pub statement: &'static str,
    pub min_eigenvalue: f64,
    pub relation: LoewnerRelation,
}

impl OrderingCheck {
    pub fn holds(&self) -> bool {
        self.relation != LoewnerRelation::Indefinite
    }
}

#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub alpha: f64,
    pub c31: [f64; 2],
    pub v: [f64; 2],
    pub x_minus_a: HermitianMatrix,
    /// Ascending.
    pub eigs: (f64, f64),
    pub rates: MatrixOuterBounds,
    pub c0_sq: f64,
    /// Least common/private power for `(R2, R3, min(Ra, Rb))`.
    pub p_required: f64,
    pub trace_x: f64,
    pub gap: f64,
    pub orderings: Vec<OrderingCheck>,
    pub comparisons: Vec<Comparison>,
    pub all_match_published: bool,
}

/// Eigenvalues of a 2×2 Hermitian matrix from its trace and determinant.
fn eig2(m: &HermitianMatrix) -> (f64, f64) {
    let (a, d) = (m.get(0, 0).re, m.get(1, 1).re);
    let b = m.get(0, 1).norm_sqr();
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b).sqrt();
    (mid - rad, mid + rad)
}

fn internal(e: Error) -> Error {
    Error::Precondition(format!("worked example violated its own construction: {e}"))
}

pub fn run_counterexample() -> Result<CounterexampleReport> {
    let c21 = ChannelVector::from_real(&[1.0, 0.0]);
    let c31v = [ALPHA.cos(), ALPHA.sin()];
    let c31 = ChannelVector::from_real(&c31v);
    let v = [BEAM_ANGLE.cos(), BEAM_ANGLE.sin()];
    let vv = HermitianMatrix::outer(&ChannelVector::from_real(&v));
    let b = HermitianMatrix::outer(&c21);
    let a = HermitianMatrix::outer(&c31).scale(A_WEIGHT);
    let x = vv.add(&b)?;
    let x_minus_a = x.sub(&a)?;
    let eigs = eig2(&x_minus_a);
    let trace_x = x.trace();

    let orderings = [
        ("X - A > 0", &x, &a),
        ("X - B > 0", &x, &b),
        ("A > 0", &a, &HermitianMatrix::zeros(2)),
        ("B > 0", &b, &HermitianMatrix::zeros(2)),
    ]
    .into_iter()
    .map(|(statement, hi, lo)| {
        let verdict = loewner_compare(hi, lo, EXACT_PSD_TOL)?;
        Ok(OrderingCheck {
            statement,
            min_eigenvalue: verdict.min_eigenvalue_of_difference,
            relation: verdict.relation,
        })
    })
    .collect::<Result<Vec<_>>>()?;

    let rates = matrix_outer_bounds(&c21, &c31, trace_x, 1.0, &x, &a, &b).map_err(internal)?;
    let c0_sq = max_min_beam(&c21, &c31)?;
    let r = rates.ra.min(rates.rb);
    let p_required = min_power(rates.r2, rates.r3, r, c21.norm_sqr(), c31.norm_sqr(), c0_sq)
        .map_err(internal)?
        .p_total;
    let gap = p_required - trace_x;

    let cmp = |quantity, computed, published, tolerance| Comparison {
        quantity,
        computed,
        published,
        tolerance,
    };
    let comparisons = vec![
        cmp("c31[0]", c31v[0], 0.9211, TOL),
        cmp("c31[1]", c31v[1], 0.3894, TOL),
        cmp("v[0]", v[0], 0.9784, TOL),
        cmp("v[1]", v[1], 0.2065, TOL),
        cmp("(X-A)[0,0]", x_minus_a.get(0, 0).re, 1.9149, TOL),
        cmp("(X-A)[0,1]", x_minus_a.get(0, 1).re, 0.1841, TOL),
        cmp("(X-A)[1,1]", x_minus_a.get(1, 1).re, 0.03506, TOL),
        cmp("eig_min(X-A)", eigs.0, 0.01720, TOL),
        cmp("eig_max(X-A)", eigs.1, 1.9328, TOL),
        cmp("R2", rates.r2, 1.9149, TOL),
        cmp("R3", rates.r3, 0.9636, TOL),
        cmp("Ra", rates.ra, 1.9636, TOL),
        cmp("Rb", rates.rb, 1.9649, TOL),
        cmp("c0^2", c0_sq, 0.9605, TOL),
        cmp("P required", p_required, 2.0011, POWER_TOL),
        cmp("tr X", trace_x, 2.0, 1e-12),
    ];
    let all_match_published =
        comparisons.iter().all(Comparison::pass) && gap > 0.0 && orderings.iter().all(OrderingCheck::holds);
    Ok(CounterexampleReport {
        alpha: ALPHA,
        c31: c31v,
        v,
        x_minus_a,
        eigs,
        rates,
        c0_sq,
        p_required,
        trace_x,
        gap,
        orderings,
        comparisons,
        all_match_published,
    })
}

const FOOTER: &str = "note: (X, A, B) are checked against the matrix constraints only; \
whether every such triple arises from an admissible input distribution is not established, \
so the example shows the bound is out of reach of common/private messaging, not that it is loose.";

impl CounterexampleReport {
    /// Aligned text table with a verdict line and footer.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<14} {:>12} {:>12} {:>10} {:>5}",
            "quantity", "computed", "published", "abs_err", "pass"
        );
        for c in &self.comparisons {
            let _ = writeln!(
                s,
                "{:<14} {:>12.6} {:>12.5} {:>10.2e} {:>5}",
                c.quantity,
                c.computed,
                c.published,
                c.abs_err(),
                if c.pass() { "yes" } else { "NO" }
            );
        }
        for o in &self.orderings {
            let _ = writeln!(
                s,
                "{:<14} min eig {:.6e} {}",
                o.statement,
                o.min_eigenvalue,
                match o.relation {
                    LoewnerRelation::StrictlyGreater => "definite",
                    LoewnerRelation::GreaterOrEqual => "semidefinite",
                    LoewnerRelation::Indefinite => "VIOLATED",
                }
            );
        }
        let _ = writeln!(s, "gap = P required - tr X = {:.6e}", self.gap);
        let _ = writeln!(s, "all match: {}", self.all_match_published);
        let _ = writeln!(s, "{FOOTER}");
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["quantity", "computed", "published", "abs_err", "pass"])?;
        for c in &self.comparisons {
            wtr.write_record([
                c.quantity.to_string(),
                crate::region::format_sig9(c.computed),
                crate::region::format_sig9(c.published),
                crate::region::format_sig9(c.abs_err()),
                c.pass().to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

//! Small Hermitian matrices, Loewner-order comparisons and the
//! conditional-covariance inequality check.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelVector;
use crate::error::{Error, Result};

/// Absolute tolerance on `|m_ij - conj(m_ji)|` accepted at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default PSD tolerance for exactly computed matrices.
pub const EXACT_PSD_TOL: f64 = 1e-9;

/// Dense Hermitian matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Builds from row-major entries. The stored matrix is the Hermitian part
    /// `(M + M^H) / 2`, which differs from the input by at most the tolerance.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("dim", "must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::validation("entries", "matrix entries must be finite"));
        }
        let scale = entries.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let mut asym = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let d = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
                asym = asym.max(d);
            }
        }
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(asym));
        }
        let mut sym = entries.clone();
        for i in 0..dim {
            for j in 0..dim {
                sym[i * dim + j] = 0.5 * (entries[i * dim + j] + entries[j * dim + i].conj());
            }
        }
        Ok(Self { dim, entries: sym })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            entries.extend(row.iter().map(|&v| Complex64::new(v, 0.0)));
        }
        Self::new(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            m.entries[i * dim + i] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Rank-one `v v^H`.
    pub fn outer(v: &ChannelVector) -> Self {
        Self::outer_slice(v.entries())
    }

    pub fn outer_slice(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for a in v {
            for b in v {
                entries.push(a * b.conj());
            }
        }
        Self { dim, entries }
    }

    /// `L M L^H` for a square row-major `l` of the same dimension.
    pub fn congruence(&self, l: &[Complex64]) -> Result<Self> {
        let n = self.dim;
        if l.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: l.len(),
            });
        }
        let mut lm = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                lm[i * n + j] = (0..n).map(|k| l[i * n + k] * self.entries[k * n + j]).sum();
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| lm[i * n + k] * l[j * n + k].conj()).sum();
            }
        }
        Self::new(n, out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i].re).sum()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * factor).collect(),
        }
    }

    /// Real quadratic form `c^H M c`.
    pub fn quad_form(&self, c: &ChannelVector) -> Result<f64> {
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: c.dim(),
            });
        }
        let v = c.entries();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v[i].conj() * self.entries[i * self.dim + j] * v[j];
            }
        }
        Ok(acc.re)
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.dim {
            1 => vec![self.entries[0].re],
            2 => {
                let a = self.entries[0].re;
                let d = self.entries[3].re;
                let b = self.entries[1];
                let mean = 0.5 * (a + d);
                let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
                vec![mean - radius, mean + radius]
            }
            n => {
                let m = DMatrix::from_row_slice(n, n, &self.entries);
                let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
                eig.sort_by(f64::total_cmp);
                eig
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("dim > 0")
    }

    /// Unit eigenvector of the largest eigenvalue.
    pub fn top_eigenvector(&self) -> Vec<Complex64> {
        let n = self.dim;
        let m = DMatrix::from_row_slice(n, n, &self.entries);
        let eig = SymmetricEigen::new(m);
        let (idx, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("dim > 0");
        eig.eigenvectors.column(idx).iter().copied().collect()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Lower-triangular Cholesky factor (row-major), `None` unless positive definite.
    pub fn cholesky(&self) -> Option<Vec<Complex64>> {
        let n = self.dim;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = self.entries[j * n + j].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= 0.0 {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = self.entries[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoewnerRelation {
    StrictlyGreater,
    GreaterOrEqual,
    Indefinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoewnerVerdict {
    pub relation: LoewnerRelation,
    pub min_eigenvalue_of_difference: f64,
}

/// Classifies `a - b` by its smallest eigenvalue against `±tol`.
pub fn loewner_compare(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<LoewnerVerdict> {
    let lambda = a.sub(b)?.min_eigenvalue();
    let relation = if lambda > tol {
        LoewnerRelation::StrictlyGreater
    } else if lambda >= -tol {
        LoewnerRelation::GreaterOrEqual
    } else {
        LoewnerRelation::Indefinite
    };
    Ok(LoewnerVerdict {
        relation,
        min_eigenvalue_of_difference: lambda,
    })
}

/// One support point of a finite joint law of a vector `x` and a scalar `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAtom {
    pub x: Vec<Complex64>,
    pub y: Complex64,
    pub prob: f64,
}

/// Finite-support joint distribution of `(X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJoint {
    dim: usize,
    atoms: Vec<JointAtom>,
}

impl FiniteJoint {
    pub fn new(atoms: Vec<JointAtom>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::validation("atoms", "empty support"))?;
        let dim = first.x.len();
        if dim == 0 {
            return Err(Error::validation("atoms[0].x", "empty vector"));
        }
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

    pub fn atoms(&self) -> &[JointAtom] {
        &self.atoms
    }

    fn empirical(&self, num_samples: usize, rng: &mut ChaCha8Rng) -> Result<FiniteJoint> {
        let index = WeightedIndex::new(self.atoms.iter().map(|a| a.prob))
            .map_err(|e| Error::validation("atoms", e.to_string()))?;
        let mut counts = vec![0usize; self.atoms.len()];
        for _ in 0..num_samples {
            counts[index.sample(rng)] += 1;
        }
        let atoms = self
            .atoms
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c > 0)
            .map(|(a, &c)| JointAtom {
                prob: c as f64 / num_samples as f64,
                ..a.clone()
            })
            .collect();
        FiniteJoint::new(atoms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovEstimation {
    /// Enumerate the support.
    Exact,
    /// Draw `num_samples` iid samples and work with the empirical law.
    Sampled { num_samples: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct CovBoundReport {
    /// Averaged conditional covariance `E[XX^H] - E[E[X|Y] E[X|Y]^H]`.
    pub lhs: HermitianMatrix,
    /// `cov[X] - cov[X,Y] cov[X,Y]^H / var[Y]`.
    pub rhs: HermitianMatrix,
    /// Verdict of `rhs` against `lhs`.
    pub verdict: LoewnerVerdict,
    pub tolerance: f64,
    /// Whether `rhs - lhs` is PSD within `tolerance`.
    pub holds: bool,
}

fn cov_sides(joint: &FiniteJoint) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let n = joint.dim;
    let zero = Complex64::new(0.0, 0.0);
    let mut mean_x = vec![zero; n];
    let mut mean_y = zero;
    for a in &joint.atoms {
        for (m, x) in mean_x.iter_mut().zip(&a.x) {
            *m += a.prob * x;
        }
        mean_y += a.prob * a.y;
    }

    let mut second = HermitianMatrix::zeros(n);
    let mut cross = vec![zero; n];
    let mut var_y = 0.0;
    // Group by exact y value to form E[X | Y = y].
    let mut groups: BTreeMap<(u64, u64), (f64, Vec<Complex64>)> = BTreeMap::new();
    for a in &joint.atoms {
        let centered: Vec<Complex64> = a.x.iter().zip(&mean_x).map(|(x, m)| x - m).collect();
        let dy = a.y - mean_y;
        second = second.add(&HermitianMatrix::outer_slice(&centered).scale(a.prob))?;
        for (c, x) in cross.iter_mut().zip(&centered) {
            *c += a.prob * x * dy.conj();
        }
        var_y += a.prob * dy.norm_sqr();
        let entry = groups
            .entry((a.y.re.to_bits(), a.y.im.to_bits()))
            .or_insert_with(|| (0.0, vec![zero; n]));
        entry.0 += a.prob;
        for (s, x) in entry.1.iter_mut().zip(&centered) {
            *s += a.prob * x;
        }
    }
    if var_y <= 0.0 {
        return Err(Error::Domain("Y has zero variance".into()));
    }

    let mut explained = HermitianMatrix::zeros(n);
    for (mass, sum) in groups.values() {
        if *mass > 0.0 {
            let cond_mean: Vec<Complex64> = sum.iter().map(|s| s / mass).collect();
            explained = explained.add(&HermitianMatrix::outer_slice(&cond_mean).scale(*mass))?;
        }
    }
    let lhs = second.sub(&explained)?;
    let rhs = second.sub(&HermitianMatrix::outer_slice(&cross).scale(1.0 / var_y))?;
    Ok((lhs, rhs))
}

/// Checks `cov[X|Y] <= cov[X] - cov[X,Y] cov[X,Y]^H / var[Y]` in the Loewner order.
pub fn conditional_cov_bound_check(joint: &FiniteJoint, estimation: CovEstimation) -> Result<CovBoundReport> {
    let (lhs, rhs, tolerance) = match estimation {
        CovEstimation::Exact => {
            let (lhs, rhs) = cov_sides(joint)?;
            (lhs, rhs, EXACT_PSD_TOL)
        }
        CovEstimation::Sampled { num_samples, seed } => {
            const BATCHES: usize = 20;
            if num_samples < BATCHES {
                return Err(Error::validation(
                    "num_samples",
                    format!("need at least {BATCHES} samples"),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (lhs, rhs) = cov_sides(&joint.empirical(num_samples, &mut rng)?)?;
            // Batch-means standard error of the minimum eigenvalue of rhs - lhs.
            let per_batch = num_samples / BATCHES;
            let mut mins = Vec::with_capacity(BATCHES);
            for _ in 0..BATCHES {
                match cov_sides(&joint.empirical(per_batch, &mut rng)?) {
                    Ok((l, r)) => mins.push(r.sub(&l)?.min_eigenvalue()),
                    Err(Error::Domain(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            let k = mins.len().max(2) as f64;
            let mean = mins.iter().sum::<f64>() / k;
            let var = mins.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
            let se = (var / BATCHES as f64).sqrt();
            (lhs, rhs, (3.0 * se).max(EXACT_PSD_TOL))
        }
    };
    let verdict = loewner_compare(&rhs, &lhs, tolerance)?;
    Ok(CovBoundReport {
        holds: verdict.relation != LoewnerRelation::Indefinite,
        lhs,
        rhs,
        verdict,
        tolerance,
    })
}

//! Lattices of Voronoi's first kind.
//!
//! A lattice is described either by an explicit obtuse superbasis
//! `b_1, ..., b_{n+1}` (vectors summing to zero with pairwise non-positive
//! inner products) or only by its Selling matrix `Q = BᵀB`. Everything the
//! decoder needs is expressible through `Q`; the Cartesian vectors are only
//! used to map targets in and closest points out.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

/// Default relative tolerance for validation and termination.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Relative tolerances used when validating lattices and stopping the decoder.
///
/// `validation` is scaled by the largest diagonal entry of the Selling
/// matrix. `termination` is scaled by `max(1, ‖B(z - ⌊z⌋)‖²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub validation: f64,
    pub termination: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::uniform(DEFAULT_TOLERANCE)
    }
}

impl Tolerance {
    pub fn uniform(eps: f64) -> Self {
        Self {
            validation: eps,
            termination: eps,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("TooFewVectors: a superbasis needs at least 2 vectors, got {0}")]
    TooFewVectors(usize),
    #[error("RaggedVectors: vector {index} has length {found}, expected {expected}")]
    RaggedVectors {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("AmbientTooSmall: ambient dimension {m} is below lattice dimension {n}")]
    AmbientTooSmall { m: usize, n: usize },
    #[error("SumNotZero: superbasis vectors sum to a vector with component {residual:e}")]
    SumNotZero { residual: f64 },
    #[error("RowSumNotZero: row {row} of the Selling matrix sums to {sum:e}")]
    RowSumNotZero { row: usize, sum: f64 },
    #[error("NotSymmetric: q[{i}][{j}] differs from q[{j}][{i}]")]
    NotSymmetric { i: usize, j: usize },
    #[error("NotObtuse({i}, {j}): inner product {value} is positive")]
    NotObtuse { i: usize, j: usize, value: f64 },
    #[error("NotPSD: diagonal entry {index} is negative")]
    NotPsd { index: usize },
    #[error("DegenerateLattice: rank is below the lattice dimension")]
    DegenerateLattice,
    #[error("DimensionMismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("NonFiniteInput: input contains NaN or infinity")]
    NonFinite,
}

pub type Result<T, E = LatticeError> = std::result::Result<T, E>;

/// Extended Gram matrix `Q = BᵀB` of an obtuse superbasis.
///
/// Off-diagonal entries are non-positive and every row sums to zero, so `Q`
/// is the Laplacian of a connected weighted graph on `n + 1` vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct SellingMatrix {
    dim: usize,
    q: Vec<f64>,
}

impl SellingMatrix {
    pub fn from_gram(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_gram_with_tolerance(rows, DEFAULT_TOLERANCE)
    }

    pub fn from_gram_with_tolerance(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let dim = rows.len();
        if dim < 2 {
            return Err(LatticeError::TooFewVectors(dim));
        }
        for (index, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(LatticeError::RaggedVectors {
                    index,
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        let q: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::checked(dim, q, tol, true)
    }

    /// Validates a dense row-major `dim × dim` matrix. Row sums are skipped
    /// when the matrix came from explicit vectors whose sum was checked.
    fn checked(dim: usize, mut q: Vec<f64>, tol: f64, check_rows: bool) -> Result<Self> {
        if q.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::NonFinite);
        }
        let scale = (0..dim).map(|i| q[i * dim + i]).fold(0.0_f64, f64::max);
        if scale <= 0.0 {
            return Err(LatticeError::DegenerateLattice);
        }
        let eps = tol * scale;

        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (q[i * dim + j], q[j * dim + i]);
                if (a - b).abs() > eps {
                    return Err(LatticeError::NotSymmetric { i, j });
                }
                let mut v = 0.5 * (a + b);
                if v > eps {
                    return Err(LatticeError::NotObtuse { i, j, value: v });
                }
                if v > 0.0 {
                    v = 0.0;
                }
                q[i * dim + j] = v;
                q[j * dim + i] = v;
            }
        }
        for index in 0..dim {
            if q[index * dim + index] < -eps {
                return Err(LatticeError::NotPsd { index });
            }
        }
        if check_rows {
            for row in 0..dim {
                let sum: f64 = q[row * dim..(row + 1) * dim].iter().sum();
                if sum.abs() > eps {
                    return Err(LatticeError::RowSumNotZero { row, sum });
                }
            }
        }
        // Q is a graph Laplacian, so its nullity equals the number of
        // connected components of the support graph.
        if !support_connected(dim, &q, eps) {
            return Err(LatticeError::DegenerateLattice);
        }
        Ok(Self { dim, q })
    }

    /// Number of superbasis vectors, `n + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lattice dimension `n`.
    pub fn lattice_dim(&self) -> usize {
        self.dim - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.q[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    /// `pᵀQp`, clamped to be non-negative.
    pub fn quad_norm(&self, p: &[f64]) -> Result<f64> {
        self.check_len(p.len())?;
        Ok(self.quad_norm_unchecked(p))
    }

    /// Evaluated in Laplacian form `Σ_{i<j} -q_ij (p_i - p_j)²`, which is
    /// exactly invariant under `p → p + c·1`.
    pub(crate) fn quad_norm_unchecked(&self, p: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let row = self.row(i);
            let pi = p[i];
            for j in (i + 1)..self.dim {
                let w = row[j];
                if w != 0.0 {
                    let d = pi - p[j];
                    acc -= w * d * d;
                }
            }
        }
        acc.max(0.0)
    }

    /// `Qp`, computed as `Σ_{j≠i} q_ij (p_j - p_i)` per row.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_len(p.len())?;
        Ok(self.apply_unchecked(p))
    }

    pub(crate) fn apply_unchecked(&self, p: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let pi = p[i];
                self.row(i)
                    .iter()
                    .zip(p)
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, (&w, &pj))| w * (pj - pi))
                    .sum()
            })
            .collect()
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

fn support_connected(dim: usize, q: &[f64], eps: f64) -> bool {
    let mut seen = vec![false; dim];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for j in 0..dim {
            if !seen[j] && q[i * dim + j] < -eps {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == dim
}

/// `n + 1` vectors in `R^m` forming an obtuse superbasis, with the Selling
/// matrix cached.
#[derive(Clone, Debug)]
pub struct ObtuseSuperbasis {
    vectors: Vec<Vec<f64>>,
    selling: SellingMatrix,
    leading: Cholesky<f64, Dyn>,
}

impl ObtuseSuperbasis {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(vectors, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(vectors: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let count = vectors.len();
        if count < 2 {
            return Err(LatticeError::TooFewVectors(count));
        }
        let n = count - 1;
        let m = vectors[0].len();
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != m {
                return Err(LatticeError::RaggedVectors {
                    index,
                    expected: m,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(LatticeError::NonFinite);
            }
        }
        if m < n {
            return Err(LatticeError::AmbientTooSmall { m, n });
        }

        let mut q = vec![0.0; count * count];
        for i in 0..count {
            for j in i..count {
                let d = dot(&vectors[i], &vectors[j]);
                q[i * count + j] = d;
                q[j * count + i] = d;
            }
        }
        let scale = (0..count).map(|i| q[i * count + i]).fold(0.0_f64, f64::max);
        let residual = (0..m)
            .map(|k| vectors.iter().map(|v| v[k]).sum::<f64>().abs())
            .fold(0.0_f64, f64::max);
        if residual > tol * scale.sqrt().max(f64::MIN_POSITIVE) {
            return Err(LatticeError::SumNotZero { residual });
        }

        let selling = SellingMatrix::checked(count, q, tol, false)?;
        let gram = DMatrix::from_fn(n, n, |i, j| dot(&vectors[i], &vectors[j]));
        let leading = Cholesky::new(gram).ok_or(LatticeError::DegenerateLattice)?;
        Ok(Self {
            vectors,
            selling,
            leading,
        })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn selling(&self) -> &SellingMatrix {
        &self.selling
    }

    pub fn lattice_dim(&self) -> usize {
        self.vectors.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors[0].len()
    }

    /// Extended coordinates `z` with `z[n] = 0` such that `Bz` is the
    /// orthogonal projection of `y` onto the span of the lattice.
    pub fn solve_coordinates(&self, y: &[f64]) -> Result<ExtendedCoordinates> {
        if y.len() != self.ambient_dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.ambient_dim(),
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::NonFinite);
        }
        let n = self.lattice_dim();
        let rhs = DVector::from_fn(n, |i, _| dot(&self.vectors[i], y));
        let c = self.leading.solve(&rhs);
        let mut z: Vec<f64> = c.iter().copied().collect();
        z.push(0.0);
        Ok(ExtendedCoordinates(z))
    }

    /// `Σ c_i b_i` for real coefficients.
    pub fn combine(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        if coefficients.len() != self.vectors.len() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.vectors.len(),
                found: coefficients.len(),
            });
        }
        let mut out = vec![0.0; self.ambient_dim()];
        for (b, &c) in self.vectors.iter().zip(coefficients) {
            if c != 0.0 {
                for (o, &x) in out.iter_mut().zip(b) {
                    *o += c * x;
                }
            }
        }
        Ok(out)
    }

    pub fn to_cartesian(&self, u: &CoefficientVector) -> Result<Vec<f64>> {
        // Shifting to the canonical representative keeps the magnitudes small.
        let canonical = u.canonical();
        let coeffs: Vec<f64> = canonical.as_slice().iter().map(|&v| v as f64).collect();
        self.combine(&coeffs)
    }
}

/// Either representation of a first-kind lattice.
#[derive(Clone, Debug)]
pub enum Lattice {
    Superbasis(ObtuseSuperbasis),
    Gram(SellingMatrix),
}

impl Lattice {
    pub fn selling(&self) -> &SellingMatrix {
        match self {
            Lattice::Superbasis(sb) => sb.selling(),
            Lattice::Gram(q) => q,
        }
    }

    pub fn superbasis(&self) -> Option<&ObtuseSuperbasis> {
        match self {
            Lattice::Superbasis(sb) => Some(sb),
            Lattice::Gram(_) => None,
        }
    }

    pub fn lattice_dim(&self) -> usize {
        self.selling().lattice_dim()
    }
}

impl From<ObtuseSuperbasis> for Lattice {
    fn from(sb: ObtuseSuperbasis) -> Self {
        Lattice::Superbasis(sb)
    }
}

impl From<SellingMatrix> for Lattice {
    fn from(q: SellingMatrix) -> Self {
        Lattice::Gram(q)
    }
}

/// Integer coefficients `u` of a lattice point `Bu`. Vectors differing by a
/// multiple of the all-ones vector name the same point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoefficientVector(Vec<i64>);

impl CoefficientVector {
    pub fn new(u: Vec<i64>) -> Self {
        Self(u)
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Representative with minimum entry zero.
    pub fn canonical(&self) -> Self {
        let min = self.0.iter().copied().min().unwrap_or(0);
        Self(self.0.iter().map(|&v| v - min).collect())
    }

    pub fn is_canonical(&self) -> bool {
        self.0.iter().copied().min().unwrap_or(0) == 0
    }

    /// Same lattice point, i.e. equal up to an all-ones shift.
    pub fn same_point(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }
}

impl From<Vec<i64>> for CoefficientVector {
    fn from(u: Vec<i64>) -> Self {
        Self(u)
    }
}

/// Real coordinates `z` of a target with respect to all `n + 1` superbasis
/// vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedCoordinates(pub Vec<f64>);

impl ExtendedCoordinates {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for ExtendedCoordinates {
    fn from(z: Vec<f64>) -> Self {
        Self(z)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zn(n: usize) -> Vec<Vec<f64>> {
        let mut vs: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
            .collect();
        vs.push(vec![-1.0; n]);
        vs
    }

    fn a2_gram() -> Vec<Vec<f64>> {
        vec![
            vec![2.0, -1.0, -1.0],
            vec![-1.0, 2.0, -1.0],
            vec![-1.0, -1.0, 2.0],
        ]
    }

    #[test]
    fn zn_superbasis_is_valid() {
        let sb = ObtuseSuperbasis::new(zn(3)).unwrap();
        let q = sb.selling();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(q.get(i, j), 0.0);
                }
            }
            assert_eq!(q.get(i, 3), -1.0);
        }
    }

    #[test]
    fn a2_cyclic_differences() {
        let vs = vec![
            vec![1.0, -1.0, 0.0],
            vec![0.0, 1.0, -1.0],
            vec![-1.0, 0.0, 1.0],
        ];
        let sb = ObtuseSuperbasis::new(vs).unwrap();
        assert_eq!(sb.selling().to_rows(), a2_gram());
    }

    #[test]
    fn acute_basis_is_not_obtuse() {
        let vs = vec![vec![3.0, 0.6], vec![0.6, 3.0], vec![-3.6, -3.6]];
        match ObtuseSuperbasis::new(vs) {
            Err(LatticeError::NotObtuse { i: 0, j: 1, value }) => {
                assert!((value - 3.6).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sum_not_zero_rejected() {
        let vs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -0.9]];
        assert!(matches!(
            ObtuseSuperbasis::new(vs),
            Err(LatticeError::SumNotZero { .. })
        ));
    }

    #[test]
    fn isolated_vector_is_degenerate() {
        let vs = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 0.0]];
        assert_eq!(
            ObtuseSuperbasis::new(vs).unwrap_err(),
            LatticeError::DegenerateLattice
        );
    }

    #[test]
    fn ambient_too_small() {
        let vs = vec![vec![1.0], vec![-1.0], vec![0.0]];
        assert!(matches!(
            ObtuseSuperbasis::new(vs),
            Err(LatticeError::AmbientTooSmall { m: 1, n: 2 })
        ));
    }

    #[test]
    fn gram_examples() {
        assert!(SellingMatrix::from_gram(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).is_ok());
        assert!(SellingMatrix::from_gram(&a2_gram()).is_ok());
        let bad = vec![
            vec![2.0, 1.0, -3.0],
            vec![1.0, 2.0, -3.0],
            vec![-3.0, -3.0, 6.0],
        ];
        assert!(matches!(
            SellingMatrix::from_gram(&bad),
            Err(LatticeError::NotObtuse { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn gram_row_sum_and_symmetry() {
        let rows = vec![vec![1.0, -1.0], vec![-1.0, 1.5]];
        assert!(matches!(
            SellingMatrix::from_gram(&rows),
            Err(LatticeError::RowSumNotZero { row: 1, .. })
        ));
        let rows = vec![vec![1.0, -1.0], vec![-0.5, 1.0]];
        assert!(matches!(
            SellingMatrix::from_gram(&rows),
            Err(LatticeError::NotSymmetric { i: 0, j: 1 })
        ));
    }

    #[test]
    fn gram_negative_diagonal_is_not_psd() {
        let rows = vec![
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, -1.0],
            vec![0.0, -1.0, 1.0],
        ];
        assert_eq!(
            SellingMatrix::from_gram(&rows).unwrap_err(),
            LatticeError::NotPsd { index: 0 }
        );
    }

    #[test]
    fn tiny_positive_off_diagonal_is_clamped() {
        let rows = vec![
            vec![1.0, 1e-13, -1.0],
            vec![1e-13, 1.0, -1.0],
            vec![-1.0, -1.0, 2.0],
        ];
        let q = SellingMatrix::from_gram(&rows).unwrap();
        assert_eq!(q.get(0, 1), 0.0);
    }

    #[test]
    fn quad_norm_examples() {
        let q = SellingMatrix::from_gram(&a2_gram()).unwrap();
        assert_eq!(q.quad_norm(&[1.0, 0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(q.quad_norm(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(q.quad_norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            q.quad_norm(&[1.0, 2.0]),
            Err(LatticeError::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn apply_matches_dense_product() {
        let q = SellingMatrix::from_gram(&a2_gram()).unwrap();
        let p = [0.3, -1.2, 2.5];
        let dense: Vec<f64> = a2_gram().iter().map(|r| dot(r, &p)).collect();
        for (a, b) in q.apply(&p).unwrap().iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_coordinates_examples() {
        let sb = ObtuseSuperbasis::new(zn(2)).unwrap();
        let z = sb.solve_coordinates(&[0.4, 0.6]).unwrap();
        assert!((z.0[0] - 0.4).abs() < 1e-15 && (z.0[1] - 0.6).abs() < 1e-15);
        assert_eq!(z.0[2], 0.0);
        assert_eq!(sb.solve_coordinates(&[0.0, 0.0]).unwrap().0, vec![0.0; 3]);

        let fig2 = ObtuseSuperbasis::new(vec![
            vec![2.0, 0.4],
            vec![-0.4, -2.0],
            vec![-1.6, 1.6],
        ])
        .unwrap();
        let z = fig2.solve_coordinates(&[4.4, 2.8]).unwrap();
        // (4.4, 2.8) = 2 b_1 - b_2
        assert!((z.0[0] - 2.0).abs() < 1e-12);
        assert!((z.0[1] + 1.0).abs() < 1e-12);
        let y = fig2.combine(&z.0).unwrap();
        assert!((y[0] - 4.4).abs() < 1e-12 && (y[1] - 2.8).abs() < 1e-12);
    }

    #[test]
    fn solve_coordinates_projects_out_of_span() {
        // Z^2 embedded in the first two axes of R^3.
        let vs = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![-1.0, -1.0, 0.0],
        ];
        let sb = ObtuseSuperbasis::new(vs).unwrap();
        let z = sb.solve_coordinates(&[0.25, -1.5, 7.0]).unwrap();
        assert_eq!(z.0, vec![0.25, -1.5, 0.0]);
    }

    #[test]
    fn to_cartesian_examples() {
        let sb = ObtuseSuperbasis::new(zn(2)).unwrap();
        assert_eq!(
            sb.to_cartesian(&CoefficientVector::new(vec![2, 3, 0])).unwrap(),
            vec![2.0, 3.0]
        );
        assert_eq!(
            sb.to_cartesian(&CoefficientVector::new(vec![1, 1, 1])).unwrap(),
            vec![0.0, 0.0]
        );
        let fig2 = ObtuseSuperbasis::new(vec![
            vec![2.0, 0.4],
            vec![-0.4, -2.0],
            vec![-1.6, 1.6],
        ])
        .unwrap();
        let y = fig2
            .to_cartesian(&CoefficientVector::new(vec![2, -1, 0]))
            .unwrap();
        assert!((y[0] - 4.4).abs() < 1e-12 && (y[1] - 2.8).abs() < 1e-12);
    }

    #[test]
    fn canonical_form() {
        let u = CoefficientVector::new(vec![3, -2, 5]);
        assert_eq!(u.canonical().as_slice(), &[5, 0, 7]);
        assert!(u.canonical().is_canonical());
        assert!(u.same_point(&CoefficientVector::new(vec![4, -1, 6])));
    }
}

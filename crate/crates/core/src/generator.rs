//! Construction of first-kind lattices: random Selling matrices, rank
//! deficient factorisation back to an obtuse superbasis, and named families.
//!
//! Random draws use `ChaCha8Rng::seed_from_u64(seed)`, so a seed reproduces
//! the same lattice across runs and platforms of this crate.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::{LatticeError, ObtuseSuperbasis, SellingMatrix, DEFAULT_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("InvalidDimension: n = {0} (need n >= 1)")]
    InvalidDimension(usize),
    #[error("InvalidDensity: {0} is outside (0, 1]")]
    InvalidDensity(f64),
    #[error("UnknownName: {0} (expected Zn, An or fig2)")]
    UnknownName(String),
    #[error("NotPSD: eigenvalue {0:e} is negative")]
    NotPsd(f64),
    #[error("NullityNotOne: matrix has nullity {0}")]
    NullityNotOne(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

pub type Result<T, E = GeneratorError> = std::result::Result<T, E>;

/// Random Selling matrix for an `n`-dimensional lattice.
///
/// Each off-diagonal pair is non-zero with probability `density`, drawn
/// uniformly from `[-1, 0)`. If the support graph is disconnected, random
/// negative edges are added along a shuffled vertex path until it is
/// connected (with no initial edges this yields a Hamiltonian path). The
/// diagonal makes every row sum to zero.
pub fn random_selling(n: usize, density: f64, seed: u64) -> Result<SellingMatrix> {
    if n == 0 {
        return Err(GeneratorError::InvalidDimension(n));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(GeneratorError::InvalidDensity(density));
    }
    let dim = n + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![vec![0.0; dim]; dim];
    let mut components = UnionFind::new(dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            if rng.random_bool(density) {
                let v: f64 = rng.random_range(-1.0..0.0);
                q[i][j] = v;
                q[j][i] = v;
                components.union(i, j);
            }
        }
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(&mut rng);
    for pair in order.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if components.union(a, b) {
            let v: f64 = rng.random_range(-1.0..0.0);
            q[a][b] = v;
            q[b][a] = v;
        }
    }

    for (i, row) in q.iter_mut().enumerate() {
        row[i] = -row.iter().sum::<f64>();
    }
    Ok(SellingMatrix::from_gram(&q)?)
}

/// Random obtuse superbasis: `random_selling` followed by
/// `rank_deficient_factor`.
pub fn random_first_kind(n: usize, density: f64, seed: u64) -> Result<ObtuseSuperbasis> {
    rank_deficient_factor(&random_selling(n, density, seed)?)
}

/// Vectors `b_1..b_{n+1}` in `R^n` with `BᵀB = Q`.
///
/// Uses the symmetric eigendecomposition `Q = V Λ Vᵀ`: the null eigenpair is
/// dropped and `B = Λ^{1/2} Vᵀ` restricted to the `n` positive eigenvalues.
pub fn rank_deficient_factor(q: &SellingMatrix) -> Result<ObtuseSuperbasis> {
    let dim = q.dim();
    let matrix = DMatrix::from_fn(dim, dim, |i, j| q.get(i, j));
    let eig = SymmetricEigen::new(matrix);
    let largest = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    let eps = DEFAULT_TOLERANCE * largest.max(f64::MIN_POSITIVE);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let most_negative = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::min);
    if most_negative < -eps {
        return Err(GeneratorError::NotPsd(most_negative));
    }
    let nullity = eig.eigenvalues.iter().filter(|l| l.abs() <= eps).count();
    if nullity != 1 {
        return Err(GeneratorError::NullityNotOne(nullity));
    }

    let kept = &order[..dim - 1];
    let vectors: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            kept.iter()
                .map(|&k| eig.eigenvalues[k].sqrt() * eig.eigenvectors[(i, k)])
                .collect()
        })
        .collect();
    Ok(ObtuseSuperbasis::new(vectors)?)
}

/// Named first-kind lattices: `Zn` (`e_1..e_n, -Σe_i`), `An` (cyclic
/// differences `e_i - e_{i+1}` in `R^{n+1}`) and `fig2`, the planar lattice
/// spanned by `(2, 0.4)` and `(0.4, 2)`.
pub fn named(name: &str, n: usize) -> Result<ObtuseSuperbasis> {
    if n == 0 {
        return Err(GeneratorError::InvalidDimension(n));
    }
    let vectors = match name.to_ascii_lowercase().as_str() {
        "zn" => {
            let mut vs: Vec<Vec<f64>> = (0..n).map(|i| unit(n, i)).collect();
            vs.push(vec![-1.0; n]);
            vs
        }
        "an" => (0..=n)
            .map(|i| {
                let mut v = unit(n + 1, i);
                v[(i + 1) % (n + 1)] -= 1.0;
                v
            })
            .collect(),
        "fig2" => {
            if n != 2 {
                return Err(GeneratorError::InvalidDimension(n));
            }
            vec![vec![2.0, 0.4], vec![-0.4, -2.0], vec![-1.6, 1.6]]
        }
        _ => return Err(GeneratorError::UnknownName(name.to_string())),
    };
    Ok(ObtuseSuperbasis::new(vectors)?)
}

fn unit(len: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[i] = 1.0;
    v
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if `a` and `b` were in different sets.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

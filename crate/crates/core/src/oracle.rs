//! Brute-force references for the decoder and the min-cut engine.
//!
//! Everything here evaluates quadratic forms densely from the Selling matrix
//! entries and enumerates the search space; nothing routes through the flow
//! network or the descent loop.

use thiserror::Error;

use crate::flow::{BinaryMinimum, BinaryQuadraticForm, FlowNetwork};
use crate::lattice::{CoefficientVector, SellingMatrix, DEFAULT_TOLERANCE};
use crate::par::{self, Execution};

pub const MAX_ENUMERATION_DIM: usize = 20;
pub const MAX_CLOSEST_DIM: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("DimensionTooLarge: n = {n} exceeds the oracle limit {max}")]
    DimensionTooLarge { n: usize, max: usize },
    #[error("DimensionMismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub type Result<T, E = OracleError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub struct RelevantVector {
    /// Indicator `1_I` of a non-empty strict subset `I`.
    pub coefficients: CoefficientVector,
    pub norm2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteClosest {
    pub coefficients: CoefficientVector,
    pub squared_distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortestVector {
    pub coefficients: CoefficientVector,
    pub norm2: f64,
}

impl ShortestVector {
    pub fn packing_radius(&self) -> f64 {
        self.norm2.sqrt() / 2.0
    }
}

/// `Σ_i Σ_j q_ij p_i p_j`.
pub fn dense_quad(q: &SellingMatrix, p: &[f64]) -> f64 {
    (0..q.dim())
        .map(|i| p[i] * q.row(i).iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

fn subset_norm(q: &SellingMatrix, mask: u64) -> f64 {
    let mut acc = 0.0;
    for i in (0..q.dim()).filter(|&i| mask >> i & 1 == 1) {
        for j in (0..q.dim()).filter(|&j| mask >> j & 1 == 1) {
            acc += q.get(i, j);
        }
    }
    acc
}

fn mask_to_coefficients(mask: u64, len: usize) -> CoefficientVector {
    CoefficientVector::new((0..len).map(|i| (mask >> i & 1) as i64).collect())
}

fn check_enumerable(q: &SellingMatrix) -> Result<()> {
    let n = q.lattice_dim();
    if n > MAX_ENUMERATION_DIM {
        return Err(OracleError::DimensionTooLarge {
            n,
            max: MAX_ENUMERATION_DIM,
        });
    }
    Ok(())
}

/// All `2^{n+1} - 2` candidates `Σ_{i∈I} b_i`, as indicator coefficient
/// vectors, dropping any of (numerically) zero norm.
pub fn relevant_vectors(q: &SellingMatrix) -> Result<Vec<RelevantVector>> {
    check_enumerable(q)?;
    let dim = q.dim();
    let floor = DEFAULT_TOLERANCE * q.max_diagonal();
    Ok((1..(1u64 << dim) - 1)
        .filter_map(|mask| {
            let norm2 = subset_norm(q, mask);
            (norm2 > floor).then(|| RelevantVector {
                coefficients: mask_to_coefficients(mask, dim),
                norm2,
            })
        })
        .collect())
}

/// Minimum-norm relevant vector; every shortest lattice vector is relevant.
pub fn shortest_vector(q: &SellingMatrix, exec: Execution) -> Result<ShortestVector> {
    check_enumerable(q)?;
    let dim = q.dim();
    let floor = DEFAULT_TOLERANCE * q.max_diagonal();
    let count = (1usize << dim) - 2;
    let (idx, norm2) = par::argmin_range(exec, count, |k| {
        let v = subset_norm(q, k as u64 + 1);
        if v > floor {
            v
        } else {
            f64::INFINITY
        }
    })
    .expect("at least one candidate");
    Ok(ShortestVector {
        coefficients: mask_to_coefficients(idx as u64 + 1, dim),
        norm2,
    })
}

/// Exhaustive minimum of a binary quadratic form, evaluated densely
/// (`Σ s_i t_i + Σ_{i,j} q_ij t_i t_j`). Ties go to the lexicographically
/// smallest `t` (with `t_0` most significant).
pub fn brute_binary_min(form: &BinaryQuadraticForm<'_>, exec: Execution) -> Result<BinaryMinimum> {
    let q = form.quadratic();
    check_enumerable(q)?;
    let dim = q.dim();
    let s = form.linear();
    let bit = |mask: usize, i: usize| mask >> (dim - 1 - i) & 1 == 1;
    let (mask, value) = par::argmin_range(exec, 1usize << dim, |mask| {
        let mut value = 0.0;
        for i in (0..dim).filter(|&i| bit(mask, i)) {
            value += s[i];
            for j in (0..dim).filter(|&j| bit(mask, j)) {
                value += q.get(i, j);
            }
        }
        value
    })
    .expect("non-empty search space");
    Ok(BinaryMinimum {
        assignment: (0..dim).map(|i| bit(mask, i)).collect(),
        value,
    })
}

/// Exhaustive closest point: searches `w = ⌊z⌋ + v` over `v ∈ {0..n}^{n+1}`
/// with `min(v) = 0`. Ties go to the lexicographically smallest `v`.
pub fn brute_closest(q: &SellingMatrix, z: &[f64], exec: Execution) -> Result<BruteClosest> {
    let n = q.lattice_dim();
    if n > MAX_CLOSEST_DIM {
        return Err(OracleError::DimensionTooLarge {
            n,
            max: MAX_CLOSEST_DIM,
        });
    }
    let dim = q.dim();
    if z.len() != dim {
        return Err(OracleError::DimensionMismatch {
            expected: dim,
            found: z.len(),
        });
    }
    let base: Vec<i64> = z.iter().map(|v| v.floor() as i64).collect();
    let frac: Vec<f64> = z.iter().zip(&base).map(|(a, &b)| a - b as f64).collect();
    let radix = n + 1;
    let total = radix.pow(dim as u32);
    let digits = |mut index: usize| -> Vec<usize> {
        let mut v = vec![0; dim];
        for slot in v.iter_mut().rev() {
            *slot = index % radix;
            index /= radix;
        }
        v
    };
    let (index, squared_distance) = par::argmin_range(exec, total, |mut index| {
        let mut p = [0.0; MAX_CLOSEST_DIM + 1];
        let mut has_zero = false;
        for k in (0..dim).rev() {
            let d = index % radix;
            index /= radix;
            has_zero |= d == 0;
            p[k] = frac[k] - d as f64;
        }
        if !has_zero {
            return f64::INFINITY;
        }
        dense_quad(q, &p[..dim]).max(0.0)
    })
    .expect("non-empty search space");
    let w: Vec<i64> = base
        .iter()
        .zip(digits(index))
        .map(|(b, d)| b + d as i64)
        .collect();
    Ok(BruteClosest {
        coefficients: CoefficientVector::new(w).canonical(),
        squared_distance,
    })
}

/// Minimum s-t cut by enumerating every subset of the inner vertices.
/// Returns the source-side membership and the cut weight.
pub fn brute_min_cut(net: &FlowNetwork) -> Result<(Vec<bool>, f64)> {
    let inner = net.vertex_count() - 2;
    if inner > MAX_ENUMERATION_DIM + 1 {
        return Err(OracleError::DimensionTooLarge {
            n: inner.saturating_sub(1),
            max: MAX_ENUMERATION_DIM,
        });
    }
    let side = |mask: usize| -> Vec<bool> {
        let mut s = vec![false; inner + 2];
        s[0] = true;
        for k in 0..inner {
            s[k + 1] = mask >> k & 1 == 1;
        }
        s
    };
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 0..1usize << inner {
        let s = side(mask);
        let mut weight = 0.0;
        for i in (0..inner + 2).filter(|&i| s[i]) {
            for j in (0..inner + 2).filter(|&j| !s[j]) {
                weight += net.capacity(i, j);
            }
        }
        if weight < best.1 {
            best = (s, weight);
        }
    }
    Ok(best)
}

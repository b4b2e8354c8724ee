//! Closest-point search by relevant-vector descent.
//!
//! Starting from `u₀ = ⌊z⌋`, each iteration adds the binary vector `t` that
//! minimises `‖B(z - u - t)‖²`; every relevant vector of a first-kind lattice
//! is `B·1_I` for a non-trivial index set `I`, so this is the best relevant
//! step. The minimisation is a binary quadratic form solved exactly by a
//! minimum cut. The iteration reaches a closest point after at most `n`
//! steps.

use thiserror::Error;

use crate::flow::{self, BinaryQuadraticForm, FlowError};
use crate::lattice::{
    CoefficientVector, Lattice, LatticeError, SellingMatrix, Tolerance,
};
use crate::par::{self, Execution};

const SNAP: f64 = 1e-12;
// Coefficients are i64; keep targets well inside exactly representable range.
const MAX_COORDINATE: f64 = 4.5e15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("NonFiniteInput: target contains NaN or infinity")]
    NonFinite,
    #[error("TargetOutOfRange: coordinate {0:e} is too large to decode")]
    OutOfRange(f64),
    #[error("CartesianTargetWithoutBasis: a Gram-only lattice needs extended coordinates")]
    CartesianWithoutBasis,
    #[error("IterationBoundExceeded: {iterations} steps taken for n = {n}")]
    IterationBoundExceeded { n: usize, iterations: usize },
    #[error("IndexOutOfRange: index {index} for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("EmptyVector")]
    EmptyVector,
}

pub type Result<T, E = DecodeError> = std::result::Result<T, E>;

/// A decode target, in Cartesian space or in extended coordinates.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Cartesian(&'a [f64]),
    Extended(&'a [f64]),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub squared_distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    /// Canonical coefficients `w` (minimum entry zero) of the closest point.
    pub coefficients: CoefficientVector,
    /// `Bw`, when the lattice has explicit vectors.
    pub point: Option<Vec<f64>>,
    /// In-span squared distance `‖B(z - w)‖²`.
    pub squared_distance: f64,
    /// Number of relevant-vector steps applied.
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    /// Squared distance from a Cartesian target to the lattice span.
    pub residual: Option<f64>,
}

/// One descent step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub direction: Vec<bool>,
    /// `‖Bp‖² - ‖B(p - t)‖²`, non-negative.
    pub improvement: f64,
}

/// Best binary step from `p = z - u`.
///
/// Expanding `‖B(p - t)‖² = pᵀQp - 2 Σ_i (Qp)_i t_i + tᵀQt` gives a binary form
/// with linear part `-2Qp`; its negated minimum is the improvement.
pub fn step(q: &SellingMatrix, p: &[f64]) -> Result<Step> {
    q.check_len(p.len())?;
    let linear: Vec<f64> = q.apply_unchecked(p).into_iter().map(|s| -2.0 * s).collect();
    let form = BinaryQuadraticForm::new(linear, q)?;
    let min = flow::minimize_form(&form)?;
    Ok(Step {
        direction: min.assignment,
        improvement: (-min.value).max(0.0),
    })
}

pub fn closest_point(lattice: &Lattice, target: Target<'_>) -> Result<DecodeResult> {
    closest_point_with(lattice, target, &Tolerance::default())
}

pub fn closest_point_with(
    lattice: &Lattice,
    target: Target<'_>,
    tol: &Tolerance,
) -> Result<DecodeResult> {
    match target {
        Target::Extended(z) => decode_extended(lattice.selling(), z, tol).map(|mut r| {
            if let Some(sb) = lattice.superbasis() {
                r.point = sb.to_cartesian(&r.coefficients).ok();
            }
            r
        }),
        Target::Cartesian(y) => {
            let sb = lattice
                .superbasis()
                .ok_or(DecodeError::CartesianWithoutBasis)?;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(DecodeError::NonFinite);
            }
            let z = sb.solve_coordinates(y)?;
            let mut result = decode_extended(sb.selling(), z.as_slice(), tol)?;
            let projection = sb.combine(z.as_slice())?;
            let residual = y
                .iter()
                .zip(&projection)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            result.point = Some(sb.to_cartesian(&result.coefficients)?);
            result.residual = Some(residual);
            Ok(result)
        }
    }
}

/// Decodes many targets against one lattice; results keep input order.
pub fn decode_batch(
    lattice: &Lattice,
    targets: &[Vec<f64>],
    extended: bool,
    tol: &Tolerance,
    exec: Execution,
) -> Vec<Result<DecodeResult>> {
    par::map_slice(exec, targets, |t| {
        let target = if extended {
            Target::Extended(t)
        } else {
            Target::Cartesian(t)
        };
        closest_point_with(lattice, target, tol)
    })
}

/// Gram-only decode of extended coordinates `z`.
pub fn decode_extended(q: &SellingMatrix, z: &[f64], tol: &Tolerance) -> Result<DecodeResult> {
    q.check_len(z.len())?;
    for &v in z {
        if !v.is_finite() {
            return Err(DecodeError::NonFinite);
        }
        if v.abs() > MAX_COORDINATE {
            return Err(DecodeError::OutOfRange(v));
        }
    }
    let n = q.lattice_dim();
    let mut u: Vec<i64> = z.iter().map(|&v| snapped_floor(v)).collect();
    let residual_of = |u: &[i64]| -> Vec<f64> { z.iter().zip(u).map(|(&a, &b)| a - b as f64).collect() };

    let mut p = residual_of(&u);
    let start = q.quad_norm_unchecked(&p);
    let eps = tol.termination * start.max(1.0);
    let mut trace = vec![TraceEntry {
        iteration: 0,
        squared_distance: start,
    }];
    let mut iterations = 0;
    loop {
        let st = step(q, &p)?;
        if st.improvement <= eps {
            break;
        }
        if iterations > n {
            return Err(DecodeError::IterationBoundExceeded {
                n,
                iterations: iterations + 1,
            });
        }
        for (ui, &ti) in u.iter_mut().zip(&st.direction) {
            *ui += ti as i64;
        }
        iterations += 1;
        p = residual_of(&u);
        trace.push(TraceEntry {
            iteration: iterations,
            squared_distance: q.quad_norm_unchecked(&p),
        });
    }

    let squared_distance = trace.last().map(|e| e.squared_distance).unwrap_or(start);
    Ok(DecodeResult {
        coefficients: CoefficientVector::new(u).canonical(),
        point: None,
        squared_distance,
        iterations,
        trace,
        residual: None,
    })
}

/// Floor toward -∞, snapping values within `1e-12` of an integer first.
pub fn snapped_floor(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= SNAP {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// `Φ(S, p) = Σ_{i∈S} Σ_{j∉S} q_ij (1 + 2p_i - 2p_j)`.
pub fn phi(q: &SellingMatrix, set: &[usize], p: &[f64]) -> Result<f64> {
    q.check_len(p.len())?;
    let member = indicator(q.dim(), set)?;
    let mut acc = 0.0;
    for i in (0..q.dim()).filter(|&i| member[i]) {
        let row = q.row(i);
        for j in (0..q.dim()).filter(|&j| !member[j]) {
            acc += row[j] * (1.0 + 2.0 * p[i] - 2.0 * p[j]);
        }
    }
    Ok(acc)
}

/// Membership vector of `set` within `0..len`.
pub fn indicator(len: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut member = vec![false; len];
    for &index in set {
        if index >= len {
            return Err(DecodeError::IndexOutOfRange { index, len });
        }
        member[index] = true;
    }
    Ok(member)
}

/// `max(p) - min(p)`.
pub fn rng(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(DecodeError::EmptyVector);
    }
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Largest index set `S` with `min_{i∈S} p_i - max_{j∉S} p_j ≥ 2`, or the
/// empty set. Indices are returned in increasing order.
pub fn subr(p: &[f64]) -> Result<Vec<usize>> {
    if p.is_empty() {
        return Err(DecodeError::EmptyVector);
    }
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let split = (1..order.len()).find(|&k| p[order[k]] - p[order[k - 1]] >= 2.0);
    let mut set = match split {
        Some(k) => order[k..].to_vec(),
        None => Vec::new(),
    };
    set.sort_unstable();
    Ok(set)
}

/// `p - 1_{subr(p)}`.
pub fn decrng(p: &[f64]) -> Result<Vec<f64>> {
    let set = subr(p)?;
    let mut out = p.to_vec();
    for i in set {
        out[i] -= 1.0;
    }
    Ok(out)
}

/// Repeated `decrng` from `p` up to and including the first fixed point.
pub fn decrng_chain(p: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut chain = vec![p.to_vec()];
    loop {
        let last = chain.last().expect("chain starts non-empty");
        let next = decrng(last)?;
        if &next == last {
            return Ok(chain);
        }
        chain.push(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ObtuseSuperbasis;

    fn zn(n: usize) -> Lattice {
        let mut vs: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
            .collect();
        vs.push(vec![-1.0; n]);
        ObtuseSuperbasis::new(vs).unwrap().into()
    }

    fn fig2() -> Lattice {
        ObtuseSuperbasis::new(vec![
            vec![2.0, 0.4],
            vec![-0.4, -2.0],
            vec![-1.6, 1.6],
        ])
        .unwrap()
        .into()
    }

    #[test]
    fn step_at_lattice_point_is_zero() {
        let l = zn(2);
        let st = step(l.selling(), &[0.0; 3]).unwrap();
        assert_eq!(st.improvement, 0.0);
        assert_eq!(st.direction, vec![false; 3]);
    }

    #[test]
    fn step_in_square_lattice() {
        let l = zn(2);
        let st = step(l.selling(), &[0.4, 0.6, 0.0]).unwrap();
        assert_eq!(st.direction, vec![false, true, false]);
        assert!((st.improvement - 0.2).abs() < 1e-12);
    }

    #[test]
    fn fig2_target() {
        let r = closest_point(&fig2(), Target::Cartesian(&[4.0, 3.5])).unwrap();
        let x = r.point.as_ref().unwrap();
        assert!((x[0] - 4.4).abs() < 1e-12 && (x[1] - 2.8).abs() < 1e-12);
        assert!((r.squared_distance - 0.65).abs() < 1e-9);
        assert!(r.iterations <= 2);
        assert!(r.residual.unwrap() < 1e-20);
    }

    #[test]
    fn square_lattice_rounds() {
        let r = closest_point(&zn(2), Target::Cartesian(&[0.4, 0.6])).unwrap();
        assert_eq!(r.point.unwrap(), vec![0.0, 1.0]);
        assert!((r.squared_distance - 0.32).abs() < 1e-12);
    }

    #[test]
    fn lattice_point_target_takes_no_steps() {
        let l = fig2();
        let y = l
            .superbasis()
            .unwrap()
            .to_cartesian(&CoefficientVector::new(vec![3, -7, 1]))
            .unwrap();
        let r = closest_point(&l, Target::Cartesian(&y)).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.squared_distance < 1e-20);
        assert!(r.coefficients.same_point(&CoefficientVector::new(vec![3, -7, 1])));
    }

    #[test]
    fn gram_only_lattice_rejects_cartesian_targets() {
        let l: Lattice = zn(2).selling().clone().into();
        assert_eq!(
            closest_point(&l, Target::Cartesian(&[0.1, 0.2])).unwrap_err(),
            DecodeError::CartesianWithoutBasis
        );
        let r = closest_point(&l, Target::Extended(&[0.4, 0.6, 0.0])).unwrap();
        assert!(r.point.is_none());
        assert!((r.squared_distance - 0.32).abs() < 1e-12);
    }

    #[test]
    fn input_errors() {
        let l = zn(2);
        assert!(matches!(
            closest_point(&l, Target::Cartesian(&[0.1])),
            Err(DecodeError::Lattice(LatticeError::DimensionMismatch { .. }))
        ));
        assert_eq!(
            closest_point(&l, Target::Cartesian(&[f64::NAN, 0.0])).unwrap_err(),
            DecodeError::NonFinite
        );
        assert!(matches!(
            closest_point(&l, Target::Extended(&[1e300, 0.0, 0.0])),
            Err(DecodeError::OutOfRange(_))
        ));
    }

    #[test]
    fn snapping() {
        assert_eq!(snapped_floor(0.9999999999999), 1);
        assert_eq!(snapped_floor(0.999), 0);
        assert_eq!(snapped_floor(-0.5), -1);
        assert_eq!(snapped_floor(-2.0000000000001), -2);
    }

    #[test]
    fn phi_of_trivial_sets_is_zero() {
        let q = zn(3).selling().clone();
        let p = [0.3, -1.0, 2.0, 0.7];
        assert_eq!(phi(&q, &[], &p).unwrap(), 0.0);
        assert_eq!(phi(&q, &[0, 1, 2, 3], &p).unwrap(), 0.0);
        assert!(matches!(
            phi(&q, &[4], &p),
            Err(DecodeError::IndexOutOfRange { index: 4, len: 4 })
        ));
    }

    #[test]
    fn subr_examples() {
        assert_eq!(subr(&[2.0, -1.0, 4.0]).unwrap(), vec![0, 2]);
        assert!(subr(&[2.0, 1.0, 3.0]).unwrap().is_empty());
        assert_eq!(subr(&[1.0, 3.0, 1.0]).unwrap(), vec![1]);
        assert_eq!(subr(&[]).unwrap_err(), DecodeError::EmptyVector);
    }

    #[test]
    fn decrng_chain_example() {
        let chain = decrng_chain(&[2.0, -1.0, 4.0]).unwrap();
        assert_eq!(
            chain,
            vec![
                vec![2.0, -1.0, 4.0],
                vec![1.0, -1.0, 3.0],
                vec![0.0, -1.0, 2.0],
                vec![0.0, -1.0, 1.0],
            ]
        );
        assert_eq!(decrng(&[0.0, -1.0, 1.0]).unwrap(), vec![0.0, -1.0, 1.0]);
        assert_eq!(rng(&[2.0, -1.0, 4.0]).unwrap(), 5.0);
    }
}

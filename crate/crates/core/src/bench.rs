//! Empirical scaling of decode time with the lattice dimension.

use std::time::Instant;

use rand::Rng;

use crate::decoder;
use crate::generator::{self, GeneratorError};
use crate::lattice::Tolerance;
use crate::verify::trial_rng;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub trials: usize,
    pub median_seconds: f64,
    pub mean_iterations: f64,
    pub max_iterations: usize,
}

/// For each `n`, decodes one random target in each of `trials` random
/// lattices and records the median decode time. Timings run sequentially.
pub fn measure_scaling(
    ns: &[usize],
    trials: usize,
    seed: u64,
    density: f64,
) -> Result<Vec<ScalingRow>, GeneratorError> {
    let tol = Tolerance::default();
    ns.iter()
        .map(|&n| {
            let mut seconds = Vec::with_capacity(trials);
            let mut iterations = Vec::with_capacity(trials);
            for k in 0..trials {
                let mut rng = trial_rng(seed ^ (n as u64) << 32, k as u64);
                let q = generator::random_selling(n, density, rng.random())?;
                let z: Vec<f64> = (0..=n).map(|_| rng.random_range(-8.0..8.0)).collect();
                let start = Instant::now();
                let r = decoder::decode_extended(&q, &z, &tol)
                    .expect("generated lattice and finite target decode");
                seconds.push(start.elapsed().as_secs_f64());
                iterations.push(r.iterations);
            }
            Ok(ScalingRow {
                n,
                trials,
                median_seconds: median(&mut seconds),
                mean_iterations: iterations.iter().sum::<usize>() as f64 / trials.max(1) as f64,
                max_iterations: iterations.iter().copied().max().unwrap_or(0),
            })
        })
        .collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Least-squares slope of `ln(median time)` against `ln(n)`.
pub fn loglog_slope(rows: &[ScalingRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.median_seconds > 0.0)
        .map(|r| ((r.n as f64).ln(), r.median_seconds.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn to_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("n,trials,median_seconds,mean_iterations,max_iterations\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:e},{},{}\n",
            r.n, r.trials, r.median_seconds, r.mean_iterations, r.max_iterations
        ));
    }
    out
}

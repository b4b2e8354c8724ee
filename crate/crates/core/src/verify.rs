//! Randomised cross-checks of the decoder against the brute-force oracles.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::{self, phi};
use crate::flow::{self, BinaryQuadraticForm};
use crate::generator::{self, GeneratorError};
use crate::lattice::{SellingMatrix, Tolerance};
use crate::oracle;
use crate::par::{self, Execution};

/// Largest `n` for which the binary-step oracle is run.
pub const MAX_STEP_ORACLE_DIM: usize = 12;
/// Largest `n` for which cuts are enumerated exhaustively.
pub const MAX_CUT_ORACLE_DIM: usize = 10;

pub const CHECKS: [&str; 7] = [
    "step-vs-oracle",
    "min-cut-duality",
    "decode-vs-oracle",
    "difference-identities",
    "iteration-bound",
    "descent",
    "fixed-point",
];

/// `|a - b| ≤ tol · max(1, |a|, |b|)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

#[derive(Clone, Debug, PartialEq)]
enum Outcome {
    Skip,
    Pass,
    Fail(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckTally {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

impl CheckTally {
    pub fn ran(&self) -> bool {
        self.passed + self.failed > 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckTally>,
}

impl Default for VerifyReport {
    fn default() -> Self {
        Self {
            checks: CHECKS
                .iter()
                .map(|&name| CheckTally {
                    name,
                    ..CheckTally::default()
                })
                .collect(),
        }
    }
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0)
    }

    pub fn total_failed(&self) -> usize {
        self.checks.iter().map(|c| c.failed).sum()
    }

    pub fn check(&self, name: &str) -> Option<&CheckTally> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn merge(&mut self, other: &VerifyReport) {
        for (mine, theirs) in self.checks.iter_mut().zip(&other.checks) {
            mine.passed += theirs.passed;
            mine.failed += theirs.failed;
            if mine.first_failure.is_none() {
                mine.first_failure.clone_from(&theirs.first_failure);
            }
        }
    }

    fn record(&mut self, outcomes: &[Outcome; 7]) {
        for (tally, outcome) in self.checks.iter_mut().zip(outcomes) {
            match outcome {
                Outcome::Skip => {}
                Outcome::Pass => tally.passed += 1,
                Outcome::Fail(msg) => {
                    tally.failed += 1;
                    if tally.first_failure.is_none() {
                        tally.first_failure = Some(msg.clone());
                    }
                }
            }
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match (c.ran(), c.failed) {
                (false, _) => "SKIP",
                (true, 0) => "PASS",
                _ => "FAIL",
            };
            write!(f, "{status} {:<22} {:>6} passed {:>6} failed", c.name, c.passed, c.failed)?;
            if let Some(msg) = &c.first_failure {
                write!(f, "  first failure: {msg}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub targets: usize,
    pub seed: u64,
    pub tolerance: Tolerance,
    /// Relative tolerance for oracle comparisons.
    pub compare: f64,
    pub exec: Execution,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            targets: 100,
            seed: 0,
            tolerance: Tolerance::default(),
            compare: 1e-9,
            exec: Execution::default(),
        }
    }
}

pub(crate) fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Residuals `lhs - rhs` of the three difference identities
///
/// 1. `‖Bp‖² - ‖B(p + 1_S)‖² = Φ(S, p)`
/// 2. `‖Bp‖² - ‖B(p - 1_S)‖² = Φ(S̄, p)`
/// 3. `‖Bp‖² - ‖B(p + 1_S - 1_T)‖² = Φ(S, p) + Φ(T̄, p) + 2 Σ_{i∈S} Σ_{j∈T} q_ij`
///
/// each paired with the magnitude used to make it relative.
pub fn difference_residuals(
    q: &SellingMatrix,
    p: &[f64],
    s: &[usize],
    t: &[usize],
) -> decoder::Result<[(f64, f64); 3]> {
    let dim = q.dim();
    let in_s = decoder::indicator(dim, s)?;
    let in_t = decoder::indicator(dim, t)?;
    let not_s: Vec<usize> = (0..dim).filter(|&i| !in_s[i]).collect();
    let not_t: Vec<usize> = (0..dim).filter(|&i| !in_t[i]).collect();
    let shifted = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..dim).map(|i| p[i] + f(i)).collect() };
    let base = q.quad_norm(p)?;
    let plus_s = q.quad_norm(&shifted(&|i| in_s[i] as u8 as f64))?;
    let minus_s = q.quad_norm(&shifted(&|i| -(in_s[i] as u8 as f64)))?;
    let both = q.quad_norm(&shifted(&|i| in_s[i] as u8 as f64 - in_t[i] as u8 as f64))?;
    let cross: f64 = s
        .iter()
        .flat_map(|&i| t.iter().map(move |&j| (i, j)))
        .map(|(i, j)| q.get(i, j))
        .sum();

    let one = (base - plus_s, phi(q, s, p)?);
    let two = (base - minus_s, phi(q, &not_s, p)?);
    let three = (base - both, phi(q, s, p)? + phi(q, &not_t, p)? + 2.0 * cross);
    let scale = base.max(plus_s).max(minus_s).max(both);
    Ok([one, two, three].map(|(lhs, rhs)| (lhs - rhs, scale)))
}

fn random_subset(rng: &mut ChaCha8Rng, dim: usize) -> Vec<usize> {
    (0..dim).filter(|_| rng.random_bool(0.5)).collect()
}

fn check_target(q: &SellingMatrix, cfg: &VerifyConfig, index: usize) -> [Outcome; 7] {
    let n = q.lattice_dim();
    let dim = q.dim();
    let mut rng = trial_rng(cfg.seed, index as u64);
    let z: Vec<f64> = (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect();
    let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut out: [Outcome; 7] = std::array::from_fn(|_| Outcome::Skip);
    let fail = |what: String| Outcome::Fail(format!("target {index}: {what}"));

    // (a) binary step against exhaustive enumeration, and cut certificates
    let linear: Vec<f64> = q.apply(&p).expect("length checked").iter().map(|s| -2.0 * s).collect();
    let form = BinaryQuadraticForm::new(linear, q).expect("finite");
    let net = flow::build_network(&form);
    match flow::min_cut(&net) {
        Ok(cut) => {
            let value = form.evaluate(&cut.indicator());
            if n <= MAX_STEP_ORACLE_DIM {
                let brute = oracle::brute_binary_min(&form, Execution::Sequential)
                    .expect("dimension checked");
                out[0] = if rel_close(value, brute.value, cfg.compare) {
                    Outcome::Pass
                } else {
                    fail(format!("min-cut value {value} vs enumeration {}", brute.value))
                };
            }
            let mut ok = rel_close(cut.flow_value, cut.weight, cfg.compare);
            let mut detail = format!("flow {} vs cut {}", cut.flow_value, cut.weight);
            if ok && n <= MAX_CUT_ORACLE_DIM {
                let (_, best) = oracle::brute_min_cut(&net).expect("dimension checked");
                ok = rel_close(cut.weight, best, cfg.compare);
                detail = format!("cut {} vs enumerated minimum {best}", cut.weight);
            }
            out[1] = if ok { Outcome::Pass } else { fail(detail) };
        }
        Err(e) => {
            out[0] = fail(e.to_string());
            out[1] = fail(e.to_string());
        }
    }

    // (c) difference identities
    let s = random_subset(&mut rng, dim);
    let t = random_subset(&mut rng, dim);
    out[3] = match difference_residuals(q, &p, &s, &t) {
        Ok(res) => match res.iter().position(|&(r, scale)| r.abs() > cfg.compare * scale.max(1.0)) {
            None => Outcome::Pass,
            Some(k) => fail(format!("identity {} residual {:e}", k + 1, res[k].0)),
        },
        Err(e) => fail(e.to_string()),
    };

    // (b), (d) full decode
    let decoded = match decoder::decode_extended(q, &z, &cfg.tolerance) {
        Ok(r) => r,
        Err(e) => {
            for slot in &mut out[4..] {
                *slot = fail(e.to_string());
            }
            return out;
        }
    };
    if n <= oracle::MAX_CLOSEST_DIM {
        let brute = oracle::brute_closest(q, &z, Execution::Sequential).expect("dimension checked");
        out[2] = if rel_close(decoded.squared_distance, brute.squared_distance, cfg.compare) {
            Outcome::Pass
        } else {
            fail(format!(
                "decoder {} vs oracle {}",
                decoded.squared_distance, brute.squared_distance
            ))
        };
    }
    out[4] = if decoded.iterations <= n {
        Outcome::Pass
    } else {
        fail(format!("{} iterations for n = {n}", decoded.iterations))
    };
    out[5] = if decoded
        .trace
        .windows(2)
        .all(|w| w[1].squared_distance < w[0].squared_distance)
    {
        Outcome::Pass
    } else {
        fail("trace not strictly decreasing".into())
    };
    let w = decoded.coefficients.to_f64();
    let residual: Vec<f64> = z.iter().zip(&w).map(|(a, b)| a - b).collect();
    let start = decoded.trace[0].squared_distance;
    out[6] = match decoder::step(q, &residual) {
        Ok(st) if st.improvement <= cfg.tolerance.termination * start.max(1.0) => Outcome::Pass,
        Ok(st) => fail(format!("step still improves by {:e}", st.improvement)),
        Err(e) => fail(e.to_string()),
    };
    out
}

/// Runs every check on `cfg.targets` random targets against one lattice.
pub fn verify_lattice(q: &SellingMatrix, cfg: &VerifyConfig) -> VerifyReport {
    let outcomes = par::map_range(cfg.exec, cfg.targets, |k| check_target(q, cfg, k));
    let mut report = VerifyReport::default();
    for o in &outcomes {
        report.record(o);
    }
    report
}

/// `trials` random lattices of dimension `n`, each checked on `cfg.targets`
/// targets. Densities are drawn from `[0.2, 1]`.
pub fn verify_random(n: usize, trials: usize, cfg: &VerifyConfig) -> Result<VerifyReport, GeneratorError> {
    let lattices = par::map_range(cfg.exec, trials, |k| {
        let mut rng = trial_rng(cfg.seed.wrapping_add(0x5eed), k as u64);
        let density = rng.random_range(0.2..=1.0);
        generator::random_selling(n, density, rng.random())
    });
    let mut report = VerifyReport::default();
    for (k, q) in lattices.into_iter().enumerate() {
        let q = q?;
        let sub = VerifyConfig {
            seed: cfg.seed.wrapping_add(k as u64),
            ..*cfg
        };
        report.merge(&verify_lattice(&q, &sub));
    }
    Ok(report)
}

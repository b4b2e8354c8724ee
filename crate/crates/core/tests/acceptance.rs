//! Acceptance suite: one line per criterion, all thresholds pinned here.

use std::time::{Duration, Instant};

use firstkind::bench;
use firstkind::decoder::{self, decrng_chain, subr, DecodeResult, Target};
use firstkind::flow::{self, BinaryQuadraticForm};
use firstkind::generator;
use firstkind::oracle;
use firstkind::verify::{difference_residuals, rel_close};
use firstkind::{Execution, Lattice, SellingMatrix, Tolerance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REL: f64 = 1e-9;

struct Criterion {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn random_lattice(rng: &mut ChaCha8Rng, n: usize) -> SellingMatrix {
    let density = rng.random_range(0.2..=1.0);
    generator::random_selling(n, density, rng.random()).unwrap()
}

fn descent_ok(r: &DecodeResult) -> bool {
    r.trace
        .windows(2)
        .all(|w| w[1].squared_distance < w[0].squared_distance)
}

fn fig2_reference(all: &mut Vec<(usize, DecodeResult)>) -> Criterion {
    let lattice: Lattice = generator::named("fig2", 2).unwrap().into();
    // warm-up so the timing reflects the decode, not page faults
    let _ = decoder::closest_point(&lattice, Target::Cartesian(&[0.1, 0.2]));
    let start = Instant::now();
    let r = decoder::closest_point(&lattice, Target::Cartesian(&[4.0, 3.5])).unwrap();
    let elapsed = start.elapsed();
    let x = r.point.clone().unwrap();
    let passed = (x[0] - 4.4).abs() < 1e-9
        && (x[1] - 2.8).abs() < 1e-9
        && (r.squared_distance - 0.65).abs() <= 1e-9
        && elapsed < Duration::from_millis(1);
    let detail = format!(
        "point ({:.12}, {:.12}), d2 {:.12}, {:?}",
        x[0], x[1], r.squared_distance, elapsed
    );
    all.push((2, r));
    Criterion {
        id: 1,
        name: "fig2 reference decode",
        passed,
        detail,
    }
}

fn step_oracle_and_mincut() -> (Criterion, Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let instances = 600;
    let (mut step_fail, mut flow_fail, mut enum_fail) = (0, 0, 0);
    for k in 0..instances {
        let n = 1 + k % 10;
        let q = random_lattice(&mut rng, n);
        let p: Vec<f64> = (0..=n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let linear: Vec<f64> = q.apply(&p).unwrap().iter().map(|s| -2.0 * s).collect();
        let form = BinaryQuadraticForm::new(linear, &q).unwrap();
        let fast = flow::minimize_form(&form).unwrap();
        let brute = oracle::brute_binary_min(&form, Execution::Parallel).unwrap();
        if !rel_close(fast.value, brute.value, REL) {
            step_fail += 1;
        }
        let net = flow::build_network(&form);
        let cut = flow::min_cut(&net).unwrap();
        if !rel_close(cut.flow_value, cut.weight, REL) {
            flow_fail += 1;
        }
        let (_, best) = oracle::brute_min_cut(&net).unwrap();
        if !rel_close(cut.weight, best, REL) {
            enum_fail += 1;
        }
    }
    let elapsed = start.elapsed();
    (
        Criterion {
            id: 2,
            name: "step-oracle equivalence",
            passed: step_fail == 0 && elapsed < Duration::from_secs(30),
            detail: format!("{instances} forms, {step_fail} mismatches, {elapsed:?}"),
        },
        Criterion {
            id: 10,
            name: "min-cut engine",
            passed: flow_fail == 0 && enum_fail == 0,
            detail: format!(
                "{instances} networks, {flow_fail} flow/cut mismatches, {enum_fail} enumeration mismatches"
            ),
        },
    )
}

fn decoder_oracle(all: &mut Vec<(usize, DecodeResult)>) -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tol = Tolerance::default();
    let start = Instant::now();
    let mut fails = 0;
    let mut count = 0;
    for k in 0..100 {
        let n = 1 + k % 5;
        let q = random_lattice(&mut rng, n);
        for _ in 0..10 {
            let z: Vec<f64> = (0..=n).map(|_| rng.random_range(-6.0..6.0)).collect();
            let r = decoder::decode_extended(&q, &z, &tol).unwrap();
            let brute = oracle::brute_closest(&q, &z, Execution::Parallel).unwrap();
            if !rel_close(r.squared_distance, brute.squared_distance, REL) {
                fails += 1;
            }
            count += 1;
            all.push((n, r));
        }
    }
    let elapsed = start.elapsed();
    Criterion {
        id: 3,
        name: "decoder-oracle equivalence",
        passed: fails == 0 && elapsed < Duration::from_secs(60),
        detail: format!("{count} decodes, {fails} mismatches, {elapsed:?}"),
    }
}

fn extra_decodes(all: &mut Vec<(usize, DecodeResult)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = Tolerance::default();
    for k in 0..1000 {
        let n = [8, 16, 32][k % 3];
        let q = random_lattice(&mut rng, n);
        let z: Vec<f64> = (0..=n).map(|_| rng.random_range(-10.0..10.0)).collect();
        all.push((n, decoder::decode_extended(&q, &z, &tol).unwrap()));
    }
}

fn difference_identities() -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let tuples = 1200;
    let mut worst = 0.0_f64;
    let mut fails = 0;
    for k in 0..tuples {
        let n = 1 + k % 12;
        let q = random_lattice(&mut rng, n);
        let p: Vec<f64> = (0..=n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let s: Vec<usize> = (0..=n).filter(|_| rng.random_bool(0.5)).collect();
        let t: Vec<usize> = (0..=n).filter(|_| rng.random_bool(0.5)).collect();
        for (residual, scale) in difference_residuals(&q, &p, &s, &t).unwrap() {
            let rel = residual.abs() / scale.max(1.0);
            worst = worst.max(rel);
            if rel > REL {
                fails += 1;
            }
        }
    }
    Criterion {
        id: 6,
        name: "difference identities",
        passed: fails == 0,
        detail: format!("{tuples} tuples x 3 identities, worst relative residual {worst:e}"),
    }
}

fn golden_decrng() -> Criterion {
    let chain = decrng_chain(&[2.0, -1.0, 4.0]).unwrap();
    let expected = vec![
        vec![2.0, -1.0, 4.0],
        vec![1.0, -1.0, 3.0],
        vec![0.0, -1.0, 2.0],
        vec![0.0, -1.0, 1.0],
    ];
    let passed = chain == expected
        && subr(&[2.0, -1.0, 4.0]).unwrap() == vec![0, 2]
        && subr(&[2.0, 1.0, 3.0]).unwrap().is_empty()
        && subr(&[1.0, 3.0, 1.0]).unwrap() == vec![1];
    Criterion {
        id: 7,
        name: "decrng/subr golden values",
        passed,
        detail: format!("chain {chain:?}"),
    }
}

fn square_lattice() -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut fails = 0;
    for n in [2, 8, 32] {
        let lattice: Lattice = generator::named("Zn", n).unwrap().into();
        for _ in 0..1000 {
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
            let r = decoder::closest_point(&lattice, Target::Cartesian(&y)).unwrap();
            let x = r.point.unwrap();
            let rounded: Vec<f64> = y.iter().map(|v| v.round()).collect();
            let d_round: f64 = y.iter().zip(&rounded).map(|(a, b)| (a - b).powi(2)).sum();
            let same = x.iter().zip(&rounded).all(|(a, b)| (a - b).abs() < 1e-9);
            if !same && !rel_close(r.squared_distance, d_round, REL) {
                fails += 1;
            }
        }
    }
    Criterion {
        id: 8,
        name: "Z^n equals rounding",
        passed: fails == 0,
        detail: format!("3000 targets, {fails} mismatches"),
    }
}

fn scaling() -> Criterion {
    let rows = bench::measure_scaling(&[16, 32, 64, 128, 256], 5, 9, 1.0).unwrap();
    let slope = bench::loglog_slope(&rows).unwrap();
    let top = rows.last().unwrap().median_seconds;
    let bound_ok = rows.iter().all(|r| r.max_iterations <= r.n);
    Criterion {
        id: 9,
        name: "polynomial scaling",
        passed: slope <= 4.5 && top < 30.0 && bound_ok,
        detail: format!(
            "slope {slope:.3}, n=256 median {top:.4}s, medians {:?}",
            rows.iter()
                .map(|r| format!("{}:{:.2e}", r.n, r.median_seconds))
                .collect::<Vec<_>>()
        ),
    }
}

fn main() {
    let mut decodes: Vec<(usize, DecodeResult)> = Vec::new();
    let mut results = vec![fig2_reference(&mut decodes)];
    let (step, mincut) = step_oracle_and_mincut();
    results.push(step);
    results.push(decoder_oracle(&mut decodes));
    extra_decodes(&mut decodes);

    let over = decodes.iter().filter(|(n, r)| r.iterations > *n).count();
    let max_ratio = decodes
        .iter()
        .map(|(n, r)| r.iterations as f64 / *n as f64)
        .fold(0.0, f64::max);
    results.push(Criterion {
        id: 4,
        name: "iteration bound",
        passed: over == 0,
        detail: format!(
            "{} decodes, {over} exceed n, max iterations/n {max_ratio:.3}",
            decodes.len()
        ),
    });
    let non_descending = decodes.iter().filter(|(_, r)| !descent_ok(r)).count();
    results.push(Criterion {
        id: 5,
        name: "descent property",
        passed: non_descending == 0,
        detail: format!("{} traces, {non_descending} violations", decodes.len()),
    });
    results.push(difference_identities());
    results.push(golden_decrng());
    results.push(square_lattice());
    results.push(scaling());
    results.push(mincut);
    results.sort_by_key(|c| c.id);

    for c in &results {
        println!(
            "[{}] criterion {:>2} {:<28} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            c.detail
        );
    }
    let failed: Vec<usize> = results.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}

//! Deterministic witness-summary benchmarks on the tail-bump pair.
//!
//! The expected triples (mean gap, spread, ratio) were frozen from a
//! grid-refinement oracle (doubling Gauss–Legendre resolution until the
//! values moved by less than 1e-7); the shipped default grid must reproduce
//! them to 1e-3.

use logitest_core::densities::{pair_grid, tail_bump_pair};
use logitest_core::functionals::{gmmd_witness_1d, mean_std_summary, population_stat, skl};

#[test]
fn log_ratio_witness_summary() {
    let (p, q) = tail_bump_pair(0.08);
    let grid = pair_grid(&p, &q);
    let f = |x: &[f64]| p.log_ratio(&q, x).unwrap();
    let s = mean_std_summary(&f, &p, &q, &grid).unwrap();
    assert!((s.mean_gap - 0.2445).abs() < 1e-3, "mean {}", s.mean_gap);
    assert!((s.spread - 0.9011).abs() < 1e-3, "spread {}", s.spread);
    assert!((s.ratio - 0.2714).abs() < 1e-3, "ratio {}", s.ratio);
    // The mean gap of the log-ratio witness is the symmetric KL divergence.
    let t = population_stat(&f, &p, &q, &grid).unwrap();
    let d = skl(&p, &q, &grid).unwrap();
    assert!((s.mean_gap - t).abs() < 1e-10);
    assert!((t - d).abs() < 1e-9);
}

#[test]
fn sign_witness_summary() {
    let (p, q) = tail_bump_pair(0.08);
    let grid = pair_grid(&p, &q);
    let f = |x: &[f64]| {
        if p.log_ratio(&q, x).unwrap() >= 0.0 {
            1.0
        } else {
            -1.0
        }
    };
    let s = mean_std_summary(&f, &p, &q, &grid).unwrap();
    assert!((s.mean_gap - 0.1579).abs() < 1e-3, "mean {}", s.mean_gap);
    assert!((s.spread - 0.6087).abs() < 1e-3, "spread {}", s.spread);
    assert!((s.ratio - 0.2594).abs() < 1e-3, "ratio {}", s.ratio);
}

#[test]
fn kernel_witness_ratio_scan_hits_reference() {
    let (p, q) = tail_bump_pair(0.08);
    let grid = pair_grid(&p, &q);
    let mut best = f64::INFINITY;
    let mut sigma = 0.5;
    while sigma <= 3.0 + 1e-9 {
        let w = gmmd_witness_1d(&p, &q, &grid, sigma);
        let s = mean_std_summary(&w, &p, &q, &grid).unwrap();
        best = best.min((s.ratio - 0.2075).abs());
        sigma += 0.1;
    }
    assert!(best < 0.01, "closest ratio gap {best}");
}

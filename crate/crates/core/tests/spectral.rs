mod common;

use faer::Mat;
use wellgrav::quadrature::build_table;
use wellgrav::spectral::{solve_lowest, solve_lowest_with, EigenMethod, Sector};
use wellgrav::units::{scale_params, PhysicalParams, ScaledParams};

fn overlap(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(i, j)];
        }
    }
    s.abs()
}

/// Follows each level from γ = 0 by maximum eigenvector overlap and checks
/// the rank-based labels agree with where the state came from.
#[test]
fn rank_labels_match_continuation() {
    let p = PhysicalParams::default();
    let target = scale_params(&p, 16).unwrap();
    let t = build_table(target.delta, 32, 1e-10).unwrap();
    let per_sector = 6;
    let steps = 120;
    for sector in Sector::BOTH {
        let levels_at = |g: f64| {
            let sol = solve_lowest(&target.with_gamma(g), &t, 40).unwrap();
            sol.levels
                .into_iter()
                .filter(|l| l.sector == sector)
                .collect::<Vec<_>>()
        };
        let start = levels_at(0.0);
        let mut tracked: Vec<(usize, usize)> = start.iter().map(|l| l.free_label).collect();
        let mut prev: Vec<Mat<f64>> = start.into_iter().map(|l| l.coefficients).collect();
        for step in 1..=steps {
            let g = target.gamma * step as f64 / steps as f64;
            let now = levels_at(g);
            let mut labels = Vec::with_capacity(now.len());
            for l in &now {
                let (best, _) = prev
                    .iter()
                    .enumerate()
                    .map(|(x, v)| (x, overlap(v, &l.coefficients)))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                labels.push(tracked[best]);
            }
            tracked = labels;
            prev = now.iter().map(|l| l.coefficients.clone()).collect();
        }
        let last = levels_at(target.gamma);
        for (l, cont) in last.iter().zip(&tracked).take(per_sector) {
            assert_eq!(l.free_label, *cont, "{sector} rank {}", l.sector_rank);
        }
    }
}

#[test]
fn free_levels_follow_reference_order() {
    let s = ScaledParams::dimensionless(0.0, 0.3, 9).unwrap();
    let t = build_table(0.3, 18, 1e-10).unwrap();
    let sol = solve_lowest(&s, &t, 81).unwrap();
    let reference = common::free_levels(9);
    assert_eq!(sol.levels.len(), reference.len());
    for (l, (e, sym, label)) in sol.levels.iter().zip(reference) {
        assert!((l.energy - e).abs() < 1e-11);
        assert_eq!(l.sector == Sector::Symmetric, sym);
        assert_eq!(l.free_label, label);
    }
}

#[test]
fn iterative_matches_dense_at_desk_scale() {
    let p = PhysicalParams::default();
    let s = scale_params(&p, 50).unwrap();
    let t = build_table(s.delta, 100, 1e-10).unwrap();
    let dense = solve_lowest_with(&s, &t, 8, EigenMethod::Dense).unwrap();
    let iterative = solve_lowest_with(&s, &t, 8, EigenMethod::Iterative).unwrap();
    for (a, b) in dense.levels.iter().zip(&iterative.levels) {
        assert!((a.energy - b.energy).abs() < 1e-9 * a.energy.abs().max(1.0));
        assert_eq!((a.sector, a.free_label), (b.sector, b.free_label));
        assert!(overlap(&a.coefficients, &b.coefficients) > 1.0 - 1e-9);
        assert!(b.converged());
    }
}

#[test]
fn solves_are_bit_reproducible() {
    let s = ScaledParams::dimensionless(30.4, 0.02, 20).unwrap();
    let t = build_table(0.02, 40, 1e-10).unwrap();
    let a = solve_lowest(&s, &t, 10).unwrap();
    let b = solve_lowest(&s, &t, 10).unwrap();
    for (x, y) in a.levels.iter().zip(&b.levels) {
        assert_eq!(x.energy.to_bits(), y.energy.to_bits());
        assert_eq!(x.coefficients, y.coefficients);
    }
}

//! The reference routines agree with each other and with the library.

mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wellgrav::quadrature::{build_table, interaction_element, j_entry};

#[test]
fn references_agree_with_each_other() {
    for delta in [0.02, 0.1, 1.0] {
        let j = laplace_j(0, 0, delta);
        assert!((j - j00_closed_form(delta)).abs() < 1e-12, "{delta}: {j}");
    }
    let k = brute_kernel(1, 1, 1, 1, 1.0, 1e-12);
    let lj = laplace_j(0, 0, 1.0) - 2.0 * laplace_j(0, 2, 1.0) + laplace_j(2, 2, 1.0);
    assert!((k - lj).abs() < 1e-11, "{k} {lj}");
}

#[test]
fn table_matches_laplace_representation() {
    for delta in [0.02, 0.3, 2.0] {
        let t = build_table(delta, 24, 1e-10).unwrap();
        for (p, q) in [(0, 0), (0, 1), (1, 1), (3, 8), (7, 7), (12, 24), (24, 23), (0, 24)] {
            let oracle = laplace_j(p, q, delta);
            assert!(oracle > 0.0);
            assert!(
                (t.at(p, q) - oracle).abs() < 1e-10,
                "delta {delta} J({p},{q}) = {} vs {oracle}",
                t.at(p, q)
            );
        }
    }
}

#[test]
fn single_entries_match_laplace_representation() {
    for (p, q, delta) in [(0, 5, 0.02), (9, 2, 0.7), (40, 41, 0.05)] {
        let v = j_entry(p, q, delta).unwrap();
        assert!((v - laplace_j(p, q, delta)).abs() < 1e-10);
    }
}

#[test]
fn interaction_elements_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gamma = 2.5;
    for _ in 0..4 {
        let delta = [0.02, 0.1, 1.0][rng.random_range(0..3)];
        let idx: Vec<usize> = (0..4).map(|_| rng.random_range(1..=5)).collect();
        let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        let t = build_table(delta, 10, 1e-10).unwrap();
        let v = interaction_element(i, j, k, l, &t, gamma).unwrap();
        let oracle = -gamma * brute_kernel(i, j, k, l, delta, 1e-12);
        assert!(
            (v - oracle).abs() <= 1e-8 * oracle.abs().max(1e-3),
            "({i}{j}|{k}{l}) delta {delta}: {v} vs {oracle}"
        );
    }
}

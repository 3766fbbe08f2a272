//! Reference computations that share no code with the library.
#![allow(dead_code)]

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 7/15 panel: (Kronrod estimate, |K − G|).
fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss–Kronrod on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut panels = vec![(a, b, gk15(f, a, b))];
    for _ in 0..4000 {
        let err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if err <= tol {
            break;
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = panels.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        panels.push((lo, mid, gk15(f, lo, mid)));
        panels.push((mid, hi, gk15(f, mid, hi)));
    }
    panels.iter().map(|p| p.2 .0).sum()
}

/// `J(p, q; δ)` from its one-dimensional Laplace representation
/// `∫₀^∞ e^{−δt} t² (1 − (−1)^p e^{−t})(1 − (−1)^q e^{−t}) / ((t² + p²π²)(t² + q²π²)) dt`.
pub fn laplace_j(p: usize, q: usize, delta: f64) -> f64 {
    let sp = if p % 2 == 0 { 1.0 } else { -1.0 };
    let sq = if q % 2 == 0 { 1.0 } else { -1.0 };
    let (pp, qq) = ((p as f64 * PI).powi(2), (q as f64 * PI).powi(2));
    let mut f = |t: f64| {
        if t == 0.0 {
            // only p = q = 0 survives at the origin, with limit 1
            return if p == 0 && q == 0 { 1.0 } else { 0.0 };
        }
        let e = (-t).exp();
        let a = if p == 0 { -(-t).exp_m1() / t } else { t * (1.0 - sp * e) / (t * t + pp) };
        let b = if q == 0 { -(-t).exp_m1() / t } else { t * (1.0 - sq * e) / (t * t + qq) };
        (-delta * t).exp() * a * b
    };
    // split at a few decay lengths, then map the tail onto a finite interval
    let knee = 40.0;
    let head = adaptive(&mut f, 0.0, knee, 1e-15);
    let mut g = |x: f64| {
        if x >= 1.0 {
            return 0.0;
        }
        let t = knee + x / (1.0 - x);
        f(t) / ((1.0 - x) * (1.0 - x))
    };
    head + adaptive(&mut g, 0.0, 1.0, 1e-15)
}

/// `∫∫ φ_i(u1) φ_k(u1) φ_j(u2) φ_l(u2) / (u1 + u2 + δ)` by nested adaptive
/// quadrature, `φ_n(u) = √2 sin(nπu)`.
pub fn brute_kernel(i: usize, j: usize, k: usize, l: usize, delta: f64, tol: f64) -> f64 {
    let phi = |n: usize, u: f64| 2f64.sqrt() * (n as f64 * PI * u).sin();
    let mut outer = |u1: f64| {
        let w1 = phi(i, u1) * phi(k, u1);
        if w1 == 0.0 {
            return 0.0;
        }
        let mut inner = |u2: f64| phi(j, u2) * phi(l, u2) / (u1 + u2 + delta);
        w1 * adaptive(&mut inner, 0.0, 1.0, tol * 0.1)
    };
    adaptive(&mut outer, 0.0, 1.0, tol)
}

/// `f(2+δ) − 2f(1+δ) + f(δ)` with `f(s) = s ln s`.
pub fn j00_closed_form(delta: f64) -> f64 {
    let f = |s: f64| s * s.ln();
    f(2.0 + delta) - 2.0 * f(1.0 + delta) + f(delta)
}

/// Free two-particle levels in the order the solver must report them:
/// energy, symmetric before antisymmetric, then lexicographic label.
pub fn free_levels(n: usize) -> Vec<(f64, bool, (usize, usize))> {
    let mut v = Vec::new();
    for i in 1..=n {
        for j in i..=n {
            let e = 0.5 * (i * i + j * j) as f64;
            v.push((e, true, (i, j)));
            if i != j {
                v.push((e, false, (i, j)));
            }
        }
    }
    v.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then((!a.1).cmp(&!b.1))
            .then(a.2.cmp(&b.2))
    });
    v
}

/// Spearman correlation computed independently of the library helper.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn rank(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    }
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let m = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let vx: f64 = rx.iter().map(|a| (a - m).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - m).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

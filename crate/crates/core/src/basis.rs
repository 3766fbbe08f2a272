//! Single-particle sine basis `φ_n(u) = √2 sin(nπu)` on `[0, 1]`.

use std::f64::consts::PI;

use faer::Mat;

/// `⟨i|u|k⟩`, 1-based indices.
pub fn position_element(i: usize, k: usize) -> f64 {
    if i == k {
        0.5
    } else if (i + k) % 2 == 1 {
        let (fi, fk) = (i as f64, k as f64);
        -8.0 * fi * fk / (PI * PI * (fi * fi - fk * fk).powi(2))
    } else {
        0.0
    }
}

/// `⟨i|u²|k⟩` in closed form, 1-based indices.
pub fn position_sq_element(i: usize, k: usize) -> f64 {
    let (fi, fk) = (i as f64, k as f64);
    if i == k {
        1.0 / 3.0 - 1.0 / (2.0 * fi * fi * PI * PI)
    } else {
        let sign = if (i + k) % 2 == 0 { 1.0 } else { -1.0 };
        sign * 8.0 * fi * fk / (PI * PI * (fi * fi - fk * fk).powi(2))
    }
}

/// Truncated `n × n` position matrix.
pub fn position_matrix(n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |r, c| position_element(r + 1, c + 1))
}

/// Exact `u²` restricted to the first `n` modes (not the square of the
/// truncated `u`).
pub fn position_sq_matrix(n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |r, c| position_sq_element(r + 1, c + 1))
}

/// `φ_n(u)`.
pub fn mode(n: usize, u: f64) -> f64 {
    std::f64::consts::SQRT_2 * (n as f64 * PI * u).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Gauss-Legendre on [0,1] with many nodes; the integrands are smooth
    fn integrate(f: impl Fn(f64) -> f64) -> f64 {
        let rule = gauss_quad::legendre::GaussLegendre::new(std::num::NonZeroUsize::new(200).unwrap());
        rule.as_node_weight_pairs()
            .into_iter()
            .map(|(x, w)| 0.5 * w * f(0.5 * (x + 1.0)))
            .sum()
    }

    #[test]
    fn u12_value() {
        assert!((position_element(1, 2) + 16.0 / (9.0 * PI * PI)).abs() < 1e-15);
        assert!((position_element(1, 2) + 0.18013).abs() < 1e-5);
    }

    #[test]
    fn elements_match_quadrature() {
        for i in 1..=7 {
            for k in 1..=7 {
                let u = integrate(|x| mode(i, x) * x * mode(k, x));
                let u2 = integrate(|x| mode(i, x) * x * x * mode(k, x));
                assert!((u - position_element(i, k)).abs() < 1e-12, "u {i} {k}");
                assert!((u2 - position_sq_element(i, k)).abs() < 1e-12, "u2 {i} {k}");
            }
        }
    }
}

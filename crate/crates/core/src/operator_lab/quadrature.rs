//! Gauss rules on intervals and tetrahedra.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Jacobi rule for the weight `(1-t)^a (1+t)^b` on `[-1, 1]`
/// (Golub–Welsch).
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        j[(k, k)] = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + a + b;
            let v = (4.0 * m * (m + a) * (m + b) * (m + a + b) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
            j[(k, k + 1)] = v;
            j[(k + 1, k)] = v;
        }
    }
    let mu0 = ((a + b + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp();
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

/// A rule on the reference tetrahedron: barycentric points and weights that
/// sum to one (multiply by the element volume).
#[derive(Debug, Clone)]
pub struct TetRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl TetRule {
    /// Conical product rule with `m³` points, exact for polynomials of
    /// degree `2m − 1`.
    pub fn conical(m: usize) -> Self {
        Self::vertex_collapsed(m, 0.0, 0.0)
    }

    /// Duffy rule collapsed at vertex 0: exact for `s^γr · t^γf · poly`, where
    /// `s = 1 − λ0` is the radial coordinate from vertex 0 and `t` the distance
    /// to vertex 2 within the opposite face.
    pub fn vertex_collapsed(m: usize, gamma_r: f64, gamma_f: f64) -> Self {
        let (ts, ws) = gauss_jacobi(m, 0.0, 2.0 + gamma_r);
        let (ta, wa) = gauss_jacobi(m, 1.0 + gamma_f, 0.0);
        let (tb, wb) = gauss_legendre(m);
        let scale = 6.0 * 0.5f64.powf(3.0 + gamma_r) * 0.5f64.powf(2.0 + gamma_f) * 0.5;
        let mut points = Vec::with_capacity(m * m * m);
        let mut weights = Vec::with_capacity(m * m * m);
        for (x, w1) in ts.iter().zip(&ws) {
            let s = 0.5 * (1.0 + x);
            for (y, w2) in ta.iter().zip(&wa) {
                let a = 0.5 * (1.0 + y);
                for (z, w3) in tb.iter().zip(&wb) {
                    let b = 0.5 * (1.0 + z);
                    let (alpha, beta) = (a, b * (1.0 - a));
                    points.push([1.0 - s, s * (1.0 - alpha - beta), s * alpha, s * beta]);
                    weights.push(scale * w1 * w2 * w3 / (s.powf(gamma_r) * (1.0 - a).powf(gamma_f)));
                }
            }
        }
        Self { points, weights }
    }

    /// Duffy rule collapsed onto the edge `(0, 1)`: exact for `r^γ · poly`
    /// with `r = λ2 + λ3` the distance from that edge.
    pub fn edge_collapsed(m: usize, gamma: f64) -> Self {
        let (tr, wr) = gauss_jacobi(m, 1.0, 1.0 + gamma);
        let (tg, wg) = gauss_legendre(m);
        let scale = 6.0 * 0.5f64.powf(3.0 + gamma) * 0.25;
        let mut points = Vec::with_capacity(m * m * m);
        let mut weights = Vec::with_capacity(m * m * m);
        for (x, w1) in tr.iter().zip(&wr) {
            let r = 0.5 * (1.0 + x);
            for (y, w2) in tg.iter().zip(&wg) {
                let a = 0.5 * (1.0 + y);
                for (z, w3) in tg.iter().zip(&wg) {
                    let b = 0.5 * (1.0 + z);
                    points.push([(1.0 - r) * (1.0 - a), (1.0 - r) * a, r * (1.0 - b), r * b]);
                    weights.push(scale * w1 * w2 * w3 / r.powf(gamma));
                }
            }
        }
        Self { points, weights }
    }
}

/// The eight children of a tetrahedron under midpoint refinement, as
/// vertex sets in the parent's coordinates.
pub fn refine_tet(v: &[[f64; 4]; 4]) -> [[[f64; 4]; 4]; 8] {
    let mid = |i: usize, j: usize| -> [f64; 4] {
        let mut m = [0.0; 4];
        for k in 0..4 {
            m[k] = 0.5 * (v[i][k] + v[j][k]);
        }
        m
    };
    let (m01, m02, m03, m12, m13, m23) = (mid(0, 1), mid(0, 2), mid(0, 3), mid(1, 2), mid(1, 3), mid(2, 3));
    [
        [v[0], m01, m02, m03],
        [m01, v[1], m12, m13],
        [m02, m12, v[2], m23],
        [m03, m13, m23, v[3]],
        [m02, m13, m01, m03],
        [m02, m13, m03, m23],
        [m02, m13, m23, m12],
        [m02, m13, m12, m01],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "n {n} k {k}");
            }
        }
    }

    #[test]
    fn jacobi_matches_legendre_and_moments() {
        let (xl, wl) = gauss_legendre(7);
        let (xj, wj) = gauss_jacobi(7, 0.0, 0.0);
        for i in 0..7 {
            assert!((xl[i] - xj[i]).abs() < 1e-13 && (wl[i] - wj[i]).abs() < 1e-13);
        }
        // ∫ (1+t)^b t dt over [-1,1] = 2^{b+2}/(b+2) - 2^{b+1}/(b+1)
        for b in [-0.5, 0.3, 1.5] {
            let (x, w) = gauss_jacobi(5, 0.0, b);
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x).sum();
            let exact = 2f64.powf(b + 2.0) / (b + 2.0) - 2f64.powf(b + 1.0) / (b + 1.0);
            assert!((q - exact).abs() < 1e-13, "b {b}");
        }
    }

    #[test]
    fn conical_rule_is_exact_for_low_degree() {
        let rule = TetRule::conical(3);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // Reference tet volume 1/6: ∫ ξ² η ζ = 2!·1!·1!·3!/(2+1+1+3)! /6·6 ...
        // use the Dirichlet moment formula: avg of λ1^2 λ2 λ3 = 2!1!1!3!/7!.
        let avg: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[1] * p[1] * p[2] * p[3])
            .sum();
        assert!((avg - 2.0 * 6.0 / 5040.0).abs() < 1e-15);
    }

    #[test]
    fn collapsed_rules_capture_singular_powers() {
        // Average of λ1 over the reference tet is 1/4 for any exact rule.
        for rule in [TetRule::vertex_collapsed(4, 0.0, 0.0), TetRule::edge_collapsed(4, 0.0)] {
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let m: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[1]).sum();
            assert!((m - 0.25).abs() < 1e-14);
        }
        // Average of (1 − λ0)^γ: 6 ∫ s^{2+γ} ds · ½ = 3/(3+γ).
        for g in [-2.3, -0.8, 0.5] {
            let rule = TetRule::vertex_collapsed(3, g, 0.0);
            let q: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * (1.0 - p[0]).powf(g)).sum();
            assert!((q - 3.0 / (3.0 + g)).abs() < 1e-12, "g {g}");
        }
        // Average of (λ2 + λ3)^γ: 6 ∫ r^{1+γ}(1 − r) dr = 6/((2+γ)(3+γ)).
        for g in [-1.4, -0.5, 1.0] {
            let rule = TetRule::edge_collapsed(3, g);
            let q: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * (p[2] + p[3]).powf(g)).sum();
            assert!((q - 6.0 / ((2.0 + g) * (3.0 + g))).abs() < 1e-12, "g {g}");
        }
    }

    #[test]
    fn refinement_preserves_volume() {
        let v = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        let vol = |t: &[[f64; 4]; 4]| {
            let m = nalgebra::Matrix3::from_fn(|i, j| t[j + 1][i + 1] - t[0][i + 1]);
            m.determinant().abs()
        };
        let total: f64 = refine_tet(&v).iter().map(vol).sum();
        assert!((total - vol(&v)).abs() < 1e-15);
        for child in refine_tet(&v) {
            assert!((vol(&child) - vol(&v) / 8.0).abs() < 1e-15);
        }
    }
}

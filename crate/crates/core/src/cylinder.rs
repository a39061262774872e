//! Smooth test functions of finitely many coordinates.
//!
//! A function of `x_1..x_p` is evaluated on `Δ_d` for any `d >= p` by
//! ignoring the trailing coordinates.

use serde::{Deserialize, Serialize};

pub trait CylinderFunction: Sync {
    /// Number of active coordinates `p`.
    fn arity(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Writes `∂_i f` for `i < p` into `out[..p]`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Writes the `p × p` Hessian row-major into `out[..p*p]`.
    fn hessian(&self, x: &[f64], out: &mut [f64]);
}

/// `Σ_k c_k Π_i x_i^{e_{k,i}}` with exact derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    arity: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    /// Terms as `(coefficient, exponents)`; every exponent vector must have
    /// length `arity`.
    pub fn new(arity: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        assert!(arity >= 1, "polynomial needs at least one variable");
        assert!(terms.iter().all(|(_, e)| e.len() == arity), "exponent length must equal arity");
        Self { arity, terms }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(1, vec![(c, vec![0])])
    }

    /// `x_1 + … + x_p`.
    pub fn coordinate_sum(p: usize) -> Self {
        let terms = (0..p)
            .map(|i| {
                let mut e = vec![0; p];
                e[i] = 1;
                (1.0, e)
            })
            .collect();
        Self::new(p, terms)
    }

    /// `c · Π x_{i}^{e_i}` from `(index, power)` pairs with 1-based indices.
    pub fn monomial(c: f64, factors: &[(usize, u32)]) -> Self {
        let arity = factors.iter().map(|f| f.0).max().unwrap_or(1).max(1);
        let mut e = vec![0; arity];
        for &(i, k) in factors {
            e[i - 1] += k;
        }
        Self::new(arity, vec![(c, e)])
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let arity = self.arity.max(other.arity);
        let widen = |terms: &[(f64, Vec<u32>)]| {
            terms
                .iter()
                .map(|(c, e)| {
                    let mut e = e.clone();
                    e.resize(arity, 0);
                    (*c, e)
                })
                .collect::<Vec<_>>()
        };
        let mut terms = widen(&self.terms);
        terms.extend(widen(&other.terms));
        Polynomial::new(arity, terms)
    }

    /// Maps variable `i` (1-based) to `min(i, d)`, so the result is a
    /// function on `Δ_d`.
    pub fn fold_to(&self, d: usize) -> Polynomial {
        if self.arity <= d {
            return self.clone();
        }
        let terms = self
            .terms
            .iter()
            .map(|(c, e)| {
                let mut folded = vec![0; d];
                for (i, &k) in e.iter().enumerate() {
                    folded[i.min(d - 1)] += k;
                }
                (*c, folded)
            })
            .collect();
        Polynomial::new(d, terms)
    }
}

fn pow(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl CylinderFunction for Polynomial {
    fn arity(&self) -> usize {
        self.arity
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().enumerate().map(|(i, &k)| pow(x[i], k)).product::<f64>())
            .sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let p = self.arity;
        out[..p].fill(0.0);
        for (c, e) in &self.terms {
            for j in 0..p {
                if e[j] == 0 {
                    continue;
                }
                let mut t = c * e[j] as f64;
                for (i, &k) in e.iter().enumerate() {
                    t *= if i == j { pow(x[i], k - 1) } else { pow(x[i], k) };
                }
                out[j] += t;
            }
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let p = self.arity;
        out[..p * p].fill(0.0);
        for (c, e) in &self.terms {
            for a in 0..p {
                for b in 0..p {
                    let mut reduced = e.clone();
                    let mut t = *c;
                    for idx in [a, b] {
                        if reduced[idx] == 0 {
                            t = 0.0;
                            break;
                        }
                        t *= reduced[idx] as f64;
                        reduced[idx] -= 1;
                    }
                    if t != 0.0 {
                        t *= reduced.iter().enumerate().map(|(i, &k)| pow(x[i], k)).product::<f64>();
                        out[a * p + b] += t;
                    }
                }
            }
        }
    }
}

/// Largest relative discrepancy between the analytic derivatives of `f` and
/// central differences of its value at `x` (step `h`).
pub fn derivative_defect(f: &dyn CylinderFunction, x: &[f64], h: f64) -> f64 {
    let p = f.arity();
    let mut grad = vec![0.0; p];
    let mut hess = vec![0.0; p * p];
    f.gradient(x, &mut grad);
    f.hessian(x, &mut hess);
    let mut y = x.to_vec();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..p {
        let eval = |y: &mut Vec<f64>, di: f64| {
            let keep = y[i];
            y[i] += di;
            let v = f.value(y);
            y[i] = keep;
            v
        };
        let fd = (eval(&mut y, h) - eval(&mut y, -h)) / (2.0 * h);
        worst = worst.max(rel(fd, grad[i]));
        for j in 0..p {
            let mut g = |si: f64, sj: f64| {
                let (ki, kj) = (y[i], y[j]);
                y[i] += si * h;
                y[j] += sj * h;
                let v = f.value(&y);
                y[i] = ki;
                y[j] = kj;
                v
            };
            let fd2 = (g(1.0, 1.0) - g(1.0, -1.0) - g(-1.0, 1.0) + g(-1.0, -1.0)) / (4.0 * h * h);
            worst = worst.max(rel(fd2, hess[i * p + j]));
        }
    }
    worst
}

/// Polynomial pairs used to check integration by parts, folded onto `Δ_d`.
pub fn ibp_catalog(d: usize) -> Vec<(String, Polynomial, Polynomial)> {
    let x = |i: usize| Polynomial::monomial(1.0, &[(i, 1)]);
    let pairs = vec![
        ("x1,x1", x(1), x(1)),
        ("x1^2,x2", Polynomial::monomial(1.0, &[(1, 2)]), x(2)),
        ("x1x2,x1+x2", Polynomial::monomial(1.0, &[(1, 1), (2, 1)]), Polynomial::coordinate_sum(2)),
        (
            "x1^3-x2,x2^2",
            Polynomial::monomial(1.0, &[(1, 3)]).add(&Polynomial::monomial(-1.0, &[(2, 1)])),
            Polynomial::monomial(1.0, &[(2, 2)]),
        ),
        ("x1+x2+x3,x1x3", Polynomial::coordinate_sum(3), Polynomial::monomial(1.0, &[(1, 1), (3, 1)])),
        ("1+x1^2,x1", Polynomial::constant(1.0).add(&Polynomial::monomial(1.0, &[(1, 2)])), x(1)),
    ];
    pairs.into_iter().map(|(n, f, g)| (n.to_string(), f.fold_to(d), g.fold_to(d))).collect()
}

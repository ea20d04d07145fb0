//! Gauss rules on [-1, 1] for the Jacobi weight (1 - t)^alpha (1 + t)^beta.
//!
//! Legendre rules (alpha = beta = 0) come from Newton iteration on the
//! three-term recurrence; general Jacobi rules from the Golub-Welsch
//! eigenproblem. Both are memoized per (order, alpha, beta).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Nodes and weights of a Gauss rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f` on [-1, 1] (the weight is implicit).
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).collect();
        crate::par::pairwise_sum(&terms)
    }
}

type Key = (usize, u64, u64);

fn cache() -> &'static RwLock<HashMap<Key, Arc<GaussRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<Key, Arc<GaussRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Gauss-Legendre rule with `order` nodes.
pub fn legendre(order: usize) -> Arc<GaussRule> {
    jacobi(order, 0.0, 0.0).expect("Legendre parameters are always valid")
}

/// Gauss-Jacobi rule with `order` nodes for (1 - t)^alpha (1 + t)^beta.
pub fn jacobi(order: usize, alpha: f64, beta: f64) -> Result<Arc<GaussRule>> {
    if order == 0 {
        return Err(Error::Domain("Gauss rule order must be positive".into()));
    }
    if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "Jacobi exponents must exceed -1, got alpha={alpha}, beta={beta}"
        )));
    }
    // Normalize -0.0 so equal rules share a cache slot.
    let (alpha, beta) = (alpha + 0.0, beta + 0.0);
    let key = (order, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = cache().read().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(if alpha == 0.0 && beta == 0.0 {
        build_legendre(order)
    } else {
        build_jacobi(order, alpha, beta)
    });
    cache().write().unwrap().insert(key, rule.clone());
    Ok(rule)
}

fn build_legendre(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_eval(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule {
        nodes,
        weights,
        alpha: 0.0,
        beta: 0.0,
    }
}

/// P_n(x) and P_n'(x).
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn build_jacobi(n: usize, a: f64, b: f64) -> GaussRule {
    let ab = a + b;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jm[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let s = 2.0 * j + ab;
            let off2 = if k == 0 {
                // (j + a + b) cancels against (s - 1) at j = 1
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab))
            } else {
                4.0 * j * (j + a) * (j + b) * (j + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            let off = off2.sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(ab + 2.0)).exp();
    let eig = jm.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        alpha: a,
        beta: b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let r = legendre(10);
        assert_relative_eq!(r.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // degree 18 monomial: 2/19
        assert_relative_eq!(r.apply(|x| x.powi(18)), 2.0 / 19.0, epsilon = 1e-14);
    }

    #[test]
    fn legendre_high_order_is_stable() {
        let r = legendre(200);
        assert_relative_eq!(r.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        assert_relative_eq!(r.apply(|x| x.cos()), 2.0 * 1f64.sin(), epsilon = 1e-13);
    }

    #[test]
    fn jacobi_moments() {
        // int (1-t)^a (1+t)^b t dt = mu0 (b - a)/(a + b + 2)
        let (a, b) = (-0.5, 0.3);
        let r = jacobi(12, a, b).unwrap();
        let mu0: f64 = r.weights.iter().sum();
        assert_relative_eq!(r.apply(|t| t), mu0 * (b - a) / (a + b + 2.0), epsilon = 1e-13);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn chebyshev_case_has_equal_weights() {
        let r = jacobi(7, -0.5, -0.5).unwrap();
        for (i, (&x, &w)) in r.nodes.iter().zip(&r.weights).enumerate() {
            let expect = -((2.0 * i as f64 + 1.0) * PI / 14.0).cos();
            assert!((x - expect).abs() < 1e-14);
            assert!((w - PI / 7.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(jacobi(4, -1.0, 0.0).is_err());
        assert!(jacobi(0, 0.0, 0.0).is_err());
    }
}

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::AngularKernel;
use crate::quad::jacobi;

/// A product rule on S^{n-1} built around the pole e_0.
///
/// The polar coordinate s = e_0·ω carries a Gauss–Jacobi rule for the weight
/// (1-s²)^{(n-3)/2}; the remaining directions use the rule for S^{n-2}
/// recursively (S^0 = {±1}). A rule may have an angular kernel folded into its
/// weights, in which case Σ w_i F(ω_i) ≈ ∫ F(ω) b(e_0·ω) dω with the endpoint
/// singularities of b absorbed exactly.
#[derive(Debug, Clone)]
pub struct SphereRule {
    n: usize,
    order: usize,
    nodes: Arc<Vec<f64>>,
    weights: Arc<Vec<f64>>,
    polar_nodes: Arc<Vec<f64>>,
    polar_weights: Arc<Vec<f64>>,
    kernel: Option<AngularKernel>,
}

impl PartialEq for SphereRule {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.order == other.order && self.kernel == other.kernel
    }
}

/// Polar nodes s_i and weights for ∫_{-1}^1 F(s) (1-s)^{h}(1+s)^{h} b(s) ds, h = (n-3)/2.
fn polar_rule(n: usize, kernel: Option<&AngularKernel>, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = (n as f64 - 3.0) / 2.0;
    let (a_plus, a_minus) = kernel.map(|k| k.endpoint_exponents()).unwrap_or((0.0, 0.0));
    // exponents of (1-s) and (1+s)
    let (ea, eb) = (h - a_minus, h - a_plus);
    if ea <= -1.0 || eb <= -1.0 {
        return Err(Error::Precondition(format!(
            "angular kernel is not integrable over S^{} (endpoint exponents {ea}, {eb})",
            n - 1
        )));
    }
    let mut edges = vec![-1.0];
    if let Some(k) = kernel {
        edges.extend(k.kinks().into_iter().filter(|&s| s > -1.0 && s < 1.0));
    }
    edges.push(1.0);
    let mut s_out = Vec::new();
    let mut w_out = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let left = if a == -1.0 { eb } else { 0.0 };
        let right = if b == 1.0 { ea } else { 0.0 };
        let rule = jacobi(order, right, left)?;
        let half = 0.5 * (b - a);
        let scale = half.powf(left + right + 1.0);
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let s = a + half * (1.0 + t);
            let mut weight = scale * wt;
            if a != -1.0 {
                weight *= (1.0 + s).powf(eb);
            }
            if b != 1.0 {
                weight *= (1.0 - s).powf(ea);
            }
            if let Some(k) = kernel {
                weight *= k.regular(s);
            }
            s_out.push(s);
            w_out.push(weight);
        }
    }
    Ok((s_out, w_out))
}

/// Plain rule on S^{m-1} ⊂ ℝ^m as flattened nodes and weights.
fn plain_nodes(m: usize, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 1 {
        return Ok((vec![1.0, -1.0], vec![1.0, 1.0]));
    }
    let (s, ws) = polar_rule(m, None, order)?;
    let (t, wt) = plain_nodes(m - 1, order)?;
    let mut nodes = Vec::with_capacity(s.len() * wt.len() * m);
    let mut weights = Vec::with_capacity(s.len() * wt.len());
    for (&si, &wi) in s.iter().zip(&ws) {
        let c = (1.0 - si * si).max(0.0).sqrt();
        for (j, &wj) in wt.iter().enumerate() {
            nodes.push(si);
            nodes.extend(t[j * (m - 1)..(j + 1) * (m - 1)].iter().map(|x| c * x));
            weights.push(wi * wj);
        }
    }
    Ok((nodes, weights))
}

impl SphereRule {
    /// Plain rule on S^{n-1}, exact for polynomials of degree < 2·order.
    pub fn new(n: usize, order: usize) -> Result<Self> {
        Self::build(n, order, None)
    }

    /// Rule with b(e_0·ω) folded into the weights.
    pub fn with_kernel(n: usize, order: usize, kernel: &AngularKernel) -> Result<Self> {
        Self::build(n, order, Some(kernel))
    }

    /// This rule's geometry with `kernel` folded in.
    pub fn folded(&self, kernel: &AngularKernel) -> Result<Self> {
        if self.kernel.as_ref() == Some(kernel) {
            return Ok(self.clone());
        }
        Self::build(self.n, self.order, Some(kernel))
    }

    fn build(n: usize, order: usize, kernel: Option<&AngularKernel>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("sphere rules need n >= 2, got {n}")));
        }
        if order == 0 {
            return Err(Error::Domain("sphere rule order must be positive".into()));
        }
        let (s, ws) = polar_rule(n, kernel, order)?;
        let (t, wt) = plain_nodes(n - 1, order)?;
        let tangent_total: f64 = wt.iter().sum();
        let mut nodes = Vec::with_capacity(s.len() * wt.len() * n);
        let mut weights = Vec::with_capacity(s.len() * wt.len());
        for (&si, &wi) in s.iter().zip(&ws) {
            let c = (1.0 - si * si).max(0.0).sqrt();
            for (j, &wj) in wt.iter().enumerate() {
                nodes.push(si);
                nodes.extend(t[j * (n - 1)..(j + 1) * (n - 1)].iter().map(|x| c * x));
                weights.push(wi * wj);
            }
        }
        Ok(SphereRule {
            n,
            order,
            nodes: Arc::new(nodes),
            weights: Arc::new(weights),
            polar_weights: Arc::new(ws.iter().map(|w| w * tangent_total).collect()),
            polar_nodes: Arc::new(s),
            kernel: kernel.cloned(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn kernel(&self) -> Option<&AngularKernel> {
        self.kernel.as_ref()
    }

    /// The i-th node in the reference frame (pole e_0).
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.n..(i + 1) * self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Collapsed rule for integrands depending on e_0·ω only.
    pub fn polar(&self) -> (&[f64], &[f64]) {
        (&self.polar_nodes, &self.polar_weights)
    }

    pub fn total_weight(&self) -> f64 {
        crate::par::pairwise_sum(&self.weights)
    }
}

/// An orthogonal map M with M e_0 = pole, applied as a signed Householder reflection.
#[derive(Debug, Clone)]
pub struct Frame {
    w: Vec<f64>,
    coef: f64,
    sign: f64,
}

impl Frame {
    /// `pole` must be a unit vector.
    pub fn new(pole: &[f64]) -> Self {
        let mut w = pole.to_vec();
        let sign = if pole[0] >= 0.0 { 1.0 } else { -1.0 };
        // sign = +1: w = e_0 + pole, M = -H; sign = -1: w = e_0 - pole, M = H.
        for x in w.iter_mut() {
            *x *= sign;
        }
        w[0] += 1.0;
        let norm2: f64 = w.iter().map(|x| x * x).sum();
        Frame {
            w,
            coef: 2.0 / norm2,
            sign: -sign,
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d: f64 = self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() * self.coef;
        for ((o, xi), wi) in out.iter_mut().zip(x).zip(&self.w) {
            *o = self.sign * (xi - d * wi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::sphere_area;

    #[test]
    fn weights_sum_to_area() {
        for n in 2..=5 {
            let r = SphereRule::new(n, 8).unwrap();
            assert!((r.total_weight() - sphere_area(n - 1)).abs() < 1e-12 * sphere_area(n - 1));
            for i in 0..r.len() {
                let norm: f64 = r.node(i).iter().map(|x| x * x).sum();
                assert!((norm - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn frame_maps_pole() {
        for pole in [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.6, 0.0, -0.8], [-0.36, 0.48, 0.8]] {
            let f = Frame::new(&pole);
            let mut out = [0.0; 3];
            f.apply(&[1.0, 0.0, 0.0], &mut out);
            for i in 0..3 {
                assert!((out[i] - pole[i]).abs() < 1e-15);
            }
        }
    }
}

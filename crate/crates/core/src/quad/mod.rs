//! Adaptive quadrature with algebraic endpoint weights.
//!
//! [`integrate`] computes
//!
//! ```text
//!     ∫_a^b (x - a)^l (b - x)^r f(x) dx
//! ```
//!
//! for a function `f` that is smooth between the given breakpoints. Panels
//! touching `a` (resp. `b`) absorb the algebraic factor into a Gauss-Jacobi
//! weight, interior panels use Gauss-Legendre. Each panel is estimated with
//! the `order`- and `2·order`-point rules; the panel with the largest
//! difference is bisected until the summed difference meets the tolerance.

pub mod rules;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use rules::{jacobi, legendre, GaussRule};

/// Tolerances and effort caps for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadSpec {
    /// Base rule order; panels are checked against a rule of twice this order.
    pub order: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            order: 16,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_panels: 4000,
        }
    }
}

impl QuadSpec {
    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Integral estimate with an order-doubling error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

impl Estimate {
    pub fn zero() -> Self {
        Estimate {
            value: 0.0,
            error: 0.0,
            panels: 0,
            converged: true,
        }
    }

    pub fn into_result(self, spec: &QuadSpec) -> Result<Estimate> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::QuadratureFailure {
                estimate: self.value,
                error: self.error,
                tolerance: spec.tolerance_for(self.value),
                panels: self.panels,
            })
        }
    }
}

/// An integration interval with endpoint exponents and interior breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
    /// Exponent of (x - a).
    pub left: f64,
    /// Exponent of (b - x).
    pub right: f64,
    pub breakpoints: Vec<f64>,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Self {
        Interval {
            a,
            b,
            left: 0.0,
            right: 0.0,
            breakpoints: Vec::new(),
        }
    }

    pub fn weighted(mut self, left: f64, right: f64) -> Self {
        self.left = left;
        self.right = right;
        self
    }

    pub fn with_breakpoints(mut self, pts: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(pts);
        self
    }

    fn cuts(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|&x| x.is_finite() && x > self.a && x < self.b)
            .collect();
        c.sort_by(f64::total_cmp);
        c.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
        let mut out = Vec::with_capacity(c.len() + 2);
        out.push(self.a);
        out.extend(c);
        out.push(self.b);
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    c: f64,
    d: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.c.total_cmp(&self.c))
    }
}

struct Integrator<'a, F> {
    f: F,
    iv: &'a Interval,
    order: usize,
}

impl<F: Fn(f64) -> f64> Integrator<'_, F> {
    fn panel(&self, c: f64, d: f64) -> Result<Panel> {
        let touch_l = c == self.iv.a && self.iv.left != 0.0;
        let touch_r = d == self.iv.b && self.iv.right != 0.0;
        let l = if touch_l { self.iv.left } else { 0.0 };
        let r = if touch_r { self.iv.right } else { 0.0 };
        let lo = jacobi(self.order, r, l)?;
        let hi = jacobi(2 * self.order, r, l)?;
        let half = 0.5 * (d - c);
        let scale = half.powf(l + r + 1.0);
        let (a, b, el, er) = (self.iv.a, self.iv.b, self.iv.left, self.iv.right);
        let g = |t: f64| {
            let x = if t < 0.0 {
                c + half * (1.0 + t)
            } else {
                d - half * (1.0 - t)
            };
            let mut v = (self.f)(x);
            if v == 0.0 {
                return 0.0;
            }
            if !touch_l && el != 0.0 {
                v *= (x - a).powf(el);
            }
            if !touch_r && er != 0.0 {
                v *= (b - x).powf(er);
            }
            v
        };
        let i_lo = scale * lo.apply(g);
        let i_hi = scale * hi.apply(g);
        Ok(Panel {
            c,
            d,
            value: i_hi,
            error: (i_hi - i_lo).abs(),
        })
    }
}

/// Globally adaptive integration of `f` over `iv`; see the module docs.
pub fn integrate(spec: &QuadSpec, iv: &Interval, f: impl Fn(f64) -> f64) -> Result<Estimate> {
    integrate_lenient(spec, iv, f)?.into_result(spec)
}

/// As [`integrate`], but returns the best estimate even when the tolerance is
/// not met (`converged == false`). Parameter errors are still reported.
pub fn integrate_lenient(spec: &QuadSpec, iv: &Interval, f: impl Fn(f64) -> f64) -> Result<Estimate> {
    if !(iv.a.is_finite() && iv.b.is_finite()) {
        return Err(Error::Domain(format!(
            "integration bounds must be finite, got [{}, {}]",
            iv.a, iv.b
        )));
    }
    if iv.left <= -1.0 || iv.right <= -1.0 {
        return Err(Error::NonIntegrable(format!(
            "endpoint exponents ({}, {}) are not above -1",
            iv.left, iv.right
        )));
    }
    if iv.b <= iv.a {
        return Ok(Estimate::zero());
    }
    let it = Integrator {
        f,
        iv,
        order: spec.order.max(2),
    };
    let cuts = iv.cuts();
    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        heap.push(it.panel(w[0], w[1])?);
    }
    loop {
        let panels: Vec<Panel> = heap.iter().copied().collect();
        let (value, error) = totals(&panels);
        let tol = spec.tolerance_for(value);
        let converged = error <= tol;
        if converged || heap.len() >= spec.max_panels.max(cuts.len()) {
            return Ok(Estimate {
                value,
                error,
                panels: heap.len(),
                converged,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let m = 0.5 * (worst.c + worst.d);
        if !(m > worst.c && m < worst.d) {
            // Panel cannot be split further in floating point.
            heap.push(Panel { error: 0.0, ..worst });
            let panels: Vec<Panel> = heap.iter().copied().collect();
            let (value, error) = totals(&panels);
            return Ok(Estimate {
                value,
                error: error + worst.error,
                panels: heap.len(),
                converged: error + worst.error <= spec.tolerance_for(value),
            });
        }
        heap.push(it.panel(worst.c, m)?);
        heap.push(it.panel(m, worst.d)?);
    }
}

fn totals(panels: &[Panel]) -> (f64, f64) {
    // Sum in position order so the result does not depend on heap layout.
    let mut sorted: Vec<&Panel> = panels.iter().collect();
    sorted.sort_by(|x, y| x.c.total_cmp(&y.c));
    let values: Vec<f64> = sorted.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = sorted.iter().map(|p| p.error).collect();
    (crate::par::pairwise_sum(&values), crate::par::pairwise_sum(&errors))
}

/// A fixed composite rule on [0, R] for nested (non-adaptive) integrals.
///
/// The first panel carries the weight x^`origin_exponent`; the returned
/// weights include it, so `Σ w_i f(x_i) ≈ ∫_0^R x^e f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(radius: f64, panels: usize, order: usize, origin_exponent: f64) -> Result<Self> {
        let edges: Vec<f64> = (0..=panels.max(1))
            .map(|i| radius * i as f64 / panels.max(1) as f64)
            .collect();
        Self::on_edges(&edges, order, origin_exponent)
    }

    /// Panels with edges `edges` (ascending, starting at 0).
    pub fn on_edges(edges: &[f64], order: usize, origin_exponent: f64) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (i, w) in edges.windows(2).enumerate() {
            let (c, d) = (w[0], w[1]);
            if d <= c {
                continue;
            }
            let half = 0.5 * (d - c);
            let e = if i == 0 { origin_exponent } else { 0.0 };
            let rule = jacobi(order, 0.0, e)?;
            let scale = half.powf(e + 1.0);
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let x = c + half * (1.0 + t);
                let extra = if i == 0 { 1.0 } else { x.powf(origin_exponent) };
                nodes.push(x);
                weights.push(scale * wt * extra);
            }
        }
        Ok(CompositeRule { nodes, weights })
    }

    /// Geometrically graded panels toward 0: edges R·ratio^k plus uniform outer panels.
    pub fn graded(
        radius: f64,
        levels: usize,
        ratio: f64,
        outer_panels: usize,
        order: usize,
        origin_exponent: f64,
    ) -> Result<Self> {
        let inner = radius * ratio;
        let mut edges = vec![0.0];
        for k in (1..=levels).rev() {
            edges.push(inner * ratio.powi(k as i32));
        }
        edges.push(inner);
        let outer = outer_panels.max(1);
        for i in 1..=outer {
            edges.push(inner + (radius - inner) * i as f64 / outer as f64);
        }
        Self::on_edges(&edges, order, origin_exponent)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

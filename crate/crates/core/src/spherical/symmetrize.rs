use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::radial::{Decay, RadialProfile};

use super::function::VelocityFunction;

pub const DEFAULT_ROTATIONS: usize = 4096;

/// Seeded Haar sampling on SO(n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationSampler {
    pub count: usize,
    pub seed: u64,
}

impl Default for RotationSampler {
    fn default() -> Self {
        RotationSampler {
            count: DEFAULT_ROTATIONS,
            seed: 0,
        }
    }
}

impl RotationSampler {
    pub fn new(count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("rotation count must be positive".into()));
        }
        Ok(RotationSampler { count, seed })
    }

    /// `count` Haar-distributed rotations: QR of Gaussian matrices with the
    /// signs of R's diagonal moved into Q, then one column flipped if det = -1.
    pub fn rotations(&self, n: usize) -> Vec<DMatrix<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
                let qr = g.qr();
                let r = qr.r();
                let mut q = qr.q();
                for j in 0..n {
                    if r[(j, j)] < 0.0 {
                        q.column_mut(j).neg_mut();
                    }
                }
                if q.determinant() < 0.0 {
                    q.column_mut(0).neg_mut();
                }
                q
            })
            .collect()
    }

    /// The images R_i e_1, uniformly distributed on S^{n-1}.
    pub fn directions(&self, n: usize) -> Vec<Vec<f64>> {
        self.rotations(n)
            .into_iter()
            .map(|q| q.column(0).iter().copied().collect())
            .collect()
    }
}

const CHEB_NODES: usize = 64;

/// Barycentric interpolant on Chebyshev–Lobatto points of [0, R].
/// Tables are kept in |x|², where Haar averages are smooth at the origin.
#[derive(Debug, Clone)]
struct ChebTable {
    radius: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl ChebTable {
    fn nodes(radius: f64, m: usize) -> Vec<f64> {
        (0..=m)
            .map(|j| 0.5 * radius * (1.0 - (std::f64::consts::PI * j as f64 / m as f64).cos()))
            .collect()
    }

    fn eval(&self, r: f64) -> f64 {
        if r > self.radius {
            return 0.0;
        }
        let m = self.nodes.len() - 1;
        let (mut num, mut den) = (0.0, 0.0);
        for (j, (&x, &v)) in self.nodes.iter().zip(&self.values).enumerate() {
            let d = r - x;
            if d == 0.0 {
                return v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == m {
                w *= 0.5;
            }
            let t = w / d;
            num += t * v;
            den += t;
        }
        num / den
    }
}

/// f★_p(x) = (∫_{SO(n)} |f(Rx)|^p dμ(R))^{1/p}, or the maximum over rotations for p = ∞.
///
/// Radial inputs return |f| exactly. Otherwise the Haar average is taken over
/// `sampler` and tabulated in |x|²; the result carries the relative standard
/// error of the average in [`VelocityFunction::stat_error`].
pub fn symmetrize(f: &VelocityFunction, p: f64, sampler: &RotationSampler) -> Result<VelocityFunction> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must lie in [1, ∞], got {p}")));
    }
    let n = f.n();
    let label = format!("sym{p}({})", f.label());
    if let Some(prof) = f.radial() {
        let q = prof.clone();
        let abs = RadialProfile::from_fn(
            label,
            prof.origin_exponent(),
            prof.support(),
            prof.decay(),
            prof.breakpoints().to_vec(),
            move |x| q.eval_regular(x).abs(),
        );
        return VelocityFunction::from_radial(n, abs);
    }
    let radius = f.reach();
    if !radius.is_finite() {
        return Err(Error::Precondition(format!(
            "cannot symmetrize {} without a finite reach",
            f.label()
        )));
    }
    let dirs = sampler.directions(n);
    let nodes = ChebTable::nodes(radius * radius, CHEB_NODES);
    let stats: Vec<(f64, f64)> = par::map(&nodes, |&x| {
        let r = x.sqrt();
        let mut v = vec![0.0; n];
        let samples: Vec<f64> = dirs
            .iter()
            .map(|u| {
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi = r * ui;
                }
                let a = f.eval(&v).abs();
                if p.is_infinite() {
                    a
                } else {
                    a.powf(p)
                }
            })
            .collect();
        if p.is_infinite() {
            (samples.iter().copied().fold(0.0, f64::max), 0.0)
        } else {
            let mean = par::pairwise_sum(&samples) / samples.len() as f64;
            let sq: Vec<f64> = samples.iter().map(|s| (s - mean) * (s - mean)).collect();
            let var = par::pairwise_sum(&sq) / (samples.len().max(2) - 1) as f64;
            (mean, (var / samples.len() as f64).sqrt())
        }
    });
    // relative standard error of f★ integrated against r^{n-1}: SE(F)/(p F) by the delta method
    let (mut se, mut tot) = (0.0, 0.0);
    for (&x, &(mean, sd)) in nodes.iter().zip(&stats) {
        let w = x.sqrt().powi(n as i32 - 1);
        se += w * sd;
        tot += w * mean;
    }
    let rel = if tot > 0.0 && p.is_finite() { se / tot / p } else { 0.0 };
    let table = ChebTable {
        radius: radius * radius,
        nodes: nodes.clone(),
        values: stats
            .iter()
            .map(|s| {
                if p.is_infinite() || p == 1.0 {
                    s.0
                } else {
                    s.0.powf(1.0 / p)
                }
            })
            .collect(),
    };
    let profile = RadialProfile::from_fn(label, 0.0, radius * radius, Decay::Compact, vec![], move |x| {
        table.eval(x).max(0.0)
    });
    Ok(VelocityFunction::from_radial(n, profile)?.with_stat_error(rel))
}

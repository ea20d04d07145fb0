use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::InequalityReport;
use crate::kernel::{AngularKernel, XiMeasure};
use crate::par;
use crate::quad::{self, CompositeRule, Interval, QuadSpec};
use crate::radial::{
    self, bilinear_b, bilinear_profile, lp_norm_radial, ExponentTriple, RadialProfile, Relation, SigmaMeasure,
};
use crate::special::{cutoff_factor, sphere_area};

use super::function::{norm, norm2, VelocityFunction};
use super::rule::{Frame, SphereRule};
use super::symmetrize::{symmetrize, RotationSampler};

/// The measure dν_α(k) = |k|^α dk on ℝⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuMeasure {
    pub n: usize,
    pub alpha: f64,
}

impl NuMeasure {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        SigmaMeasure::new(n, alpha)?;
        Ok(NuMeasure { n, alpha })
    }

    pub fn density(&self, k: &[f64]) -> f64 {
        norm(k).powf(self.alpha)
    }

    /// The matching measure for radial profiles, dσ_n^α.
    pub fn sigma(&self) -> SigmaMeasure {
        SigmaMeasure {
            n: self.n,
            alpha: self.alpha,
        }
    }
}

/// k⁺ = (k + |k|ω)/2 and k⁻ = (k - |k|ω)/2.
pub fn post_collision_pair(k: &[f64], omega: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if k.len() != omega.len() {
        return Err(Error::Domain("k and ω have different dimensions".into()));
    }
    let kn = norm(k);
    if kn == 0.0 {
        return Err(Error::Domain("the collision pair is undefined at k = 0".into()));
    }
    if (norm2(omega) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("ω must be a unit vector".into()));
    }
    let plus = k.iter().zip(omega).map(|(a, w)| 0.5 * (a + kn * w)).collect();
    let minus = k.iter().zip(omega).map(|(a, w)| 0.5 * (a - kn * w)).collect();
    Ok((plus, minus))
}

fn check_dim(rule: &SphereRule, fs: &[&VelocityFunction]) -> Result<usize> {
    let n = rule.n();
    for f in fs {
        if f.n() != n {
            return Err(Error::Domain(format!(
                "{} lives in dimension {} but the sphere rule in {n}",
                f.label(),
                f.n()
            )));
        }
    }
    Ok(n)
}

/// 𝒫(g,h)(k) = ∫_{S^{n-1}} g(k⁺) h(k⁻) b(k̂·ω) dω.
///
/// The rule is aligned with k̂; when both inputs are radial it collapses to its
/// polar part. At k = 0 the value is the limit g(0) h(0) ∫ b dω.
pub fn operator_p(
    g: &VelocityFunction,
    h: &VelocityFunction,
    k: &[f64],
    kern: &AngularKernel,
    rule: &SphereRule,
) -> Result<f64> {
    let n = check_dim(rule, &[g, h])?;
    if k.len() != n {
        return Err(Error::Domain(format!("k has {} entries, expected {n}", k.len())));
    }
    let rule = rule.folded(kern)?;
    let value = eval_p(g, h, k, &rule);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::QuadratureFailure {
            estimate: value,
            error: f64::INFINITY,
            tolerance: 0.0,
            panels: rule.len(),
        })
    }
}

/// 𝒫 with a rule that already carries the kernel.
pub(crate) fn eval_p(g: &VelocityFunction, h: &VelocityFunction, k: &[f64], rule: &SphereRule) -> f64 {
    let n = k.len();
    let kn2 = norm2(k);
    if kn2 == 0.0 {
        let zero = vec![0.0; n];
        return g.eval(&zero) * h.eval(&zero) * rule.total_weight();
    }
    if let (Some(gr), Some(hr)) = (g.radial(), h.radial()) {
        let (s, w) = rule.polar();
        let terms: Vec<f64> = s
            .iter()
            .zip(w)
            .map(|(&s, &w)| {
                let a = gr.eval(0.5 * kn2 * (1.0 + s));
                if a == 0.0 {
                    0.0
                } else {
                    w * a * hr.eval(0.5 * kn2 * (1.0 - s))
                }
            })
            .collect();
        return par::pairwise_sum(&terms);
    }
    let kn = kn2.sqrt();
    let pole: Vec<f64> = k.iter().map(|x| x / kn).collect();
    let frame = Frame::new(&pole);
    let mut omega = vec![0.0; n];
    let mut kp = vec![0.0; n];
    let mut km = vec![0.0; n];
    let terms: Vec<f64> = (0..rule.len())
        .map(|i| {
            frame.apply(rule.node(i), &mut omega);
            for j in 0..n {
                kp[j] = 0.5 * (k[j] + kn * omega[j]);
                km[j] = 0.5 * (k[j] - kn * omega[j]);
            }
            let a = g.eval(&kp);
            if a == 0.0 {
                0.0
            } else {
                rule.weights()[i] * a * h.eval(&km)
            }
        })
        .collect();
    par::pairwise_sum(&terms)
}

/// 2^{n-2}|S^{n-2}| ℬ(g̃, h̃)(s), the value of 𝒫 at any |k|² = s for radial inputs.
pub fn radial_reduce_p(g: &RadialProfile, h: &RadialProfile, s: f64, m: &XiMeasure, quad: &QuadSpec) -> Result<f64> {
    Ok(cutoff_factor(m.n) * bilinear_b(g, h, s, m, quad)?)
}

fn sphere_order(quad: &QuadSpec) -> usize {
    (2 * quad.order).max(8)
}

/// (∫ |f|^p dν_α)^{1/p}.
///
/// Radial inputs go through the one-dimensional norm with the factor
/// (|S^{n-1}|/2)^{1/p}; others through a sphere × radial product quadrature.
pub fn weighted_lp_norm(f: &VelocityFunction, p: f64, m: &NuMeasure, quad: &QuadSpec) -> Result<f64> {
    if f.n() != m.n {
        return Err(Error::Domain("dimension mismatch between function and measure".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must lie in [1, ∞], got {p}")));
    }
    let n = m.n;
    if let Some(prof) = f.radial() {
        let v = lp_norm_radial(prof, p, &m.sigma(), quad)?;
        return Ok(if p.is_infinite() {
            v
        } else {
            (sphere_area(n - 1) / 2.0).powf(1.0 / p) * v
        });
    }
    let reach = f.reach();
    if !reach.is_finite() {
        return Err(Error::NonIntegrable(format!("{} has no finite reach", f.label())));
    }
    let rule = SphereRule::new(n, sphere_order(quad))?;
    let shell = |rho: f64| -> f64 {
        let mut v = vec![0.0; n];
        let terms: Vec<f64> = (0..rule.len())
            .map(|i| {
                for (vj, wj) in v.iter_mut().zip(rule.node(i)) {
                    *vj = rho * wj;
                }
                let a = f.eval(&v).abs();
                if p.is_infinite() {
                    a
                } else {
                    rule.weights()[i] * a.powf(p)
                }
            })
            .collect();
        if p.is_infinite() {
            terms.into_iter().fold(0.0, f64::max)
        } else {
            par::pairwise_sum(&terms)
        }
    };
    if p.is_infinite() {
        let grid = 400;
        let best = par::map_range(grid + 1, |i| shell(reach * i as f64 / grid as f64));
        return Ok(best.into_iter().fold(0.0, f64::max));
    }
    let e = n as f64 - 1.0 + m.alpha;
    if e <= -1.0 {
        return Err(Error::NonIntegrable(format!(
            "|k|^{} is not integrable at the origin",
            m.alpha
        )));
    }
    let iv = Interval::new(0.0, reach).weighted(e, 0.0);
    let est = quad::integrate(quad, &iv, shell)?;
    Ok(est.value.max(0.0).powf(1.0 / p))
}

fn plain(rule: &SphereRule) -> Result<SphereRule> {
    if rule.kernel().is_none() {
        Ok(rule.clone())
    } else {
        SphereRule::new(rule.n(), rule.order())
    }
}

/// ∫ f(k) 𝒫(g,h)(k) dk by nested quadrature in polar coordinates.
pub fn pairing_lhs(
    f: &VelocityFunction,
    g: &VelocityFunction,
    h: &VelocityFunction,
    kern: &AngularKernel,
    rule: &SphereRule,
    quad: &QuadSpec,
) -> Result<f64> {
    let n = check_dim(rule, &[f, g, h])?;
    let radius = f.reach().min((g.reach().powi(2) + h.reach().powi(2)).sqrt());
    if !radius.is_finite() {
        return Err(Error::Precondition(
            "the pairing needs functions of finite reach".into(),
        ));
    }
    let folded = rule.folded(kern)?;
    let dirs = plain(rule)?;
    let rho = CompositeRule::new(radius, 4, quad.order, n as f64 - 1.0)?;
    let per_rho = par::map_range(rho.len(), |i| {
        let r = rho.nodes[i];
        let mut k = vec![0.0; n];
        let terms: Vec<f64> = (0..dirs.len())
            .map(|j| {
                for (kk, t) in k.iter_mut().zip(dirs.node(j)) {
                    *kk = r * t;
                }
                let a = f.eval(&k);
                if a == 0.0 {
                    0.0
                } else {
                    dirs.weights()[j] * a * eval_p(g, h, &k, &folded)
                }
            })
            .collect();
        rho.weights[i] * par::pairwise_sum(&terms)
    });
    Ok(par::pairwise_sum(&per_rho))
}

/// The hyperplane side of the pairing identity:
/// 2^{n-1} ∫ g(x)/|x| ∫_{x·z=0} f(x+z) |x+z|^{2-n} h(z) b(2|x|²/|x+z|² - 1) dπ_z dx.
pub fn pairing_rhs(
    f: &VelocityFunction,
    g: &VelocityFunction,
    h: &VelocityFunction,
    kern: &AngularKernel,
    rule: &SphereRule,
    quad: &QuadSpec,
) -> Result<f64> {
    let n = check_dim(rule, &[f, g, h])?;
    let (rg, rh) = (g.reach(), h.reach());
    if !(rg.is_finite() && rh.is_finite()) {
        return Err(Error::Precondition(
            "the pairing needs functions of finite reach".into(),
        ));
    }
    let (a_plus, a_minus) = kern.endpoint_exponents();
    let dirs = plain(rule)?;
    let (tangents, tangent_w): (Vec<f64>, Vec<f64>) = if n == 2 {
        (vec![1.0, -1.0], vec![1.0, 1.0])
    } else {
        let t = SphereRule::new(n - 1, rule.order())?;
        let nodes = (0..t.len()).flat_map(|i| t.node(i).to_vec()).collect();
        (nodes, t.weights().to_vec())
    };
    let ord = quad.order;
    let rho = CompositeRule::new(rg, 4, ord, n as f64 - 2.0 - 2.0 * a_plus)?;
    let t_rule = CompositeRule::graded(rh, 8, 0.3, 4, ord, n as f64 - 2.0 - 2.0 * a_minus)?;
    let pow2 = 2f64.powf(-a_plus - a_minus);
    let half_n = (n as f64 - 2.0) / 2.0;
    let per_u = par::map_range(dirs.len(), |iu| {
        let u = dirs.node(iu);
        let frame = Frame::new(u);
        let m = n - 1;
        // orthonormal basis images M e_1..M e_{n-1} of u⊥, applied to tangent nodes
        let etas: Vec<Vec<f64>> = (0..tangent_w.len())
            .map(|j| {
                let mut r = vec![0.0; n];
                r[1..].copy_from_slice(&tangents[j * m..(j + 1) * m]);
                let mut out = vec![0.0; n];
                frame.apply(&r, &mut out);
                out
            })
            .collect();
        let mut x = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut xz = vec![0.0; n];
        let mut acc = Vec::with_capacity(rho.len());
        for (&r, &wr) in rho.nodes.iter().zip(&rho.weights) {
            for (xi, ui) in x.iter_mut().zip(u) {
                *xi = r * ui;
            }
            let gv = g.eval(&x);
            if gv == 0.0 {
                continue;
            }
            let mut inner = Vec::with_capacity(etas.len() * t_rule.len());
            for (eta, &we) in etas.iter().zip(&tangent_w) {
                for (&t, &wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
                    for i in 0..n {
                        z[i] = t * eta[i];
                        xz[i] = x[i] + z[i];
                    }
                    let hv = h.eval(&z);
                    if hv == 0.0 {
                        continue;
                    }
                    let fv = f.eval(&xz);
                    if fv == 0.0 {
                        continue;
                    }
                    let q = r * r + t * t;
                    let s = (r * r - t * t) / q;
                    let b = kern.regular(s) * pow2 * q.powf(a_plus + a_minus - half_n);
                    inner.push(we * wt * fv * hv * b);
                }
            }
            acc.push(wr * gv * par::pairwise_sum(&inner));
        }
        dirs.weights()[iu] * par::pairwise_sum(&acc)
    });
    Ok(2f64.powi(n as i32 - 1) * par::pairwise_sum(&per_u))
}

/// Both sides of the pairing identity ∫ f 𝒫(g,h) dk = 2^{n-1} ∫∫ ... dπ_z dx.
pub fn lemma21_pairing(
    f: &VelocityFunction,
    g: &VelocityFunction,
    h: &VelocityFunction,
    kern: &AngularKernel,
    rule: &SphereRule,
    quad: &QuadSpec,
) -> Result<(f64, f64)> {
    Ok((
        pairing_lhs(f, g, h, kern, rule, quad)?,
        pairing_rhs(f, g, h, kern, rule, quad)?,
    ))
}

/// ∫ f 𝒫(g,h) dk for radial f, g, h via the one-dimensional reduction.
pub fn radial_pairing(
    f: &RadialProfile,
    g: &RadialProfile,
    h: &RadialProfile,
    m: &XiMeasure,
    quad: &QuadSpec,
) -> Result<f64> {
    let n = m.n;
    let b = bilinear_profile(g, h, m, quad)?;
    let top = f.support().min(b.support());
    if top <= 0.0 {
        return Ok(0.0);
    }
    let w = (n as f64 - 2.0) / 2.0;
    let e = f.origin_exponent() + b.origin_exponent() + w;
    let bps: Vec<f64> = f
        .breakpoints()
        .iter()
        .chain(b.breakpoints())
        .copied()
        .filter(|&x| x > 0.0 && x < top)
        .collect();
    let upper = if top.is_finite() { top } else { radial_cut(f, &b) };
    let iv = Interval::new(0.0, upper).weighted(e, 0.0).with_breakpoints(bps);
    let est = quad::integrate(quad, &iv, |x| f.eval_regular(x) * b.eval_regular(x))?;
    Ok(sphere_area(n - 1) / 2.0 * cutoff_factor(n) * est.value)
}

fn radial_cut(f: &RadialProfile, b: &RadialProfile) -> f64 {
    use crate::radial::Decay::*;
    let last = f
        .breakpoints()
        .iter()
        .chain(b.breakpoints())
        .fold(1.0f64, |a, &x| a.max(x));
    let scale = match (f.decay(), b.decay()) {
        (Gaussian { scale: a }, Gaussian { scale: c }) => a.min(c),
        (Gaussian { scale }, _) | (_, Gaussian { scale }) => scale,
        _ => 1.0,
    };
    last + 80.0 * scale
}

/// |∫ f 𝒫(g,h) dk| ≤ ∫ f★_p 𝒫(g★_q, h★_r) dk for 1/p + 1/q + 1/r = 1.
#[allow(clippy::too_many_arguments)]
pub fn lemma22_check(
    f: &VelocityFunction,
    g: &VelocityFunction,
    h: &VelocityFunction,
    (p, q, r): (f64, f64, f64),
    kern: &AngularKernel,
    rule: &SphereRule,
    sampler: &RotationSampler,
    quad: &QuadSpec,
    tolerance: f64,
) -> Result<InequalityReport> {
    let n = check_dim(rule, &[f, g, h])?;
    let s = radial::ExponentTriple::holder(q, r)
        .map_err(|_| Error::Precondition(format!("({p}, {q}, {r}) is not a Hölder triple")))?;
    if (crate::special::recip(p) + crate::special::recip(s.r) - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "1/p + 1/q + 1/r must equal 1, got ({p}, {q}, {r})"
        )));
    }
    let lhs = pairing_lhs(f, g, h, kern, rule, quad)?.abs();
    let fs = symmetrize(f, p, sampler)?;
    let gs = symmetrize(g, q, sampler)?;
    let hs = symmetrize(h, r, sampler)?;
    let m = XiMeasure::new(kern.clone(), n)?;
    let rhs = radial_pairing(
        fs.radial().expect("symmetrized functions are radial"),
        gs.radial().expect("symmetrized functions are radial"),
        hs.radial().expect("symmetrized functions are radial"),
        &m,
        quad,
    )?;
    let margin = 3.0 * (fs.stat_error() + gs.stat_error() + hs.stat_error());
    let mut rep = InequalityReport::new(
        "lemma22",
        lhs,
        1.0,
        vec![("symmetrized".into(), rhs)],
        tolerance,
        margin,
    )
    .with_setting(n, (p, q, r), 0.0, 0.0, &kern.to_string())
    .with_inputs(&format!("{};{};{}", f.label(), g.label(), h.label()))
    .with_quad_order(quad.order);
    if !(f.is_radial() && g.is_radial() && h.is_radial()) {
        rep = rep.with_seed(sampler.seed, sampler.count);
    }
    Ok(rep)
}

/// ‖𝒫(g,h)‖_{L^r(ν_α)} ≤ 2^{n-2}|S^{n-2}| β_b(-(n+α)/2p, -(n+α)/2q) ‖g‖_{L^p(ν_α)} ‖h‖_{L^q(ν_α)}.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_check(
    g: &VelocityFunction,
    h: &VelocityFunction,
    e: &ExponentTriple,
    m: &NuMeasure,
    kern: &AngularKernel,
    rule: &SphereRule,
    quad: &QuadSpec,
    tolerance: f64,
) -> Result<InequalityReport> {
    if e.relation != Relation::Holder {
        return Err(Error::Precondition("the bound on 𝒫 needs a Hölder triple".into()));
    }
    let n = check_dim(rule, &[g, h])?;
    if m.n != n {
        return Err(Error::Domain("dimension mismatch between measure and rule".into()));
    }
    let xi = XiMeasure::new(kern.clone(), n)?;
    let sigma = m.sigma();
    let constant = cutoff_factor(n) * radial::sharp_constant(e, &xi, &sigma, quad)?;
    let lhs = match (g.radial(), h.radial()) {
        (Some(gr), Some(hr)) => {
            let b = bilinear_profile(gr, hr, &xi, quad)?;
            let v = cutoff_factor(n) * lp_norm_radial(&b, e.r, &sigma, quad)?;
            if e.r.is_infinite() {
                v
            } else {
                (sphere_area(n - 1) / 2.0).powf(1.0 / e.r) * v
            }
        }
        _ => p_norm_generic(g, h, e.r, m, kern, rule, quad)?,
    };
    let ng = weighted_lp_norm(g, e.p, m, quad)?;
    let nh = weighted_lp_norm(h, e.q, m, quad)?;
    Ok(InequalityReport::new(
        "theorem1",
        lhs,
        constant,
        vec![(format!("|g|_{}", e.p), ng), (format!("|h|_{}", e.q), nh)],
        tolerance,
        0.0,
    )
    .with_setting(n, (e.p, e.q, e.r), m.alpha, 0.0, &kern.to_string())
    .with_inputs(&format!("{};{}", g.label(), h.label()))
    .with_quad_order(quad.order))
}

/// ‖𝒫(g,h)‖_{L^r(ν_α)} by a polar product rule in k.
pub fn p_norm_generic(
    g: &VelocityFunction,
    h: &VelocityFunction,
    r: f64,
    m: &NuMeasure,
    kern: &AngularKernel,
    rule: &SphereRule,
    quad: &QuadSpec,
) -> Result<f64> {
    let n = m.n;
    let radius = (g.reach().powi(2) + h.reach().powi(2)).sqrt();
    if !radius.is_finite() {
        return Err(Error::Precondition(
            "the norm of 𝒫 needs functions of finite reach".into(),
        ));
    }
    let folded = rule.folded(kern)?;
    let dirs = plain(rule)?;
    let e = n as f64 - 1.0 + m.alpha;
    if e <= -1.0 {
        return Err(Error::NonIntegrable(format!(
            "|k|^{} is not integrable at the origin",
            m.alpha
        )));
    }
    let rho = CompositeRule::new(radius, 6, quad.order, if r.is_infinite() { 0.0 } else { e })?;
    let shells = par::map_range(rho.len(), |i| {
        let mut k = vec![0.0; n];
        let vals: Vec<f64> = (0..dirs.len())
            .map(|j| {
                for (kk, t) in k.iter_mut().zip(dirs.node(j)) {
                    *kk = rho.nodes[i] * t;
                }
                let v = eval_p(g, h, &k, &folded).abs();
                if r.is_infinite() {
                    v
                } else {
                    dirs.weights()[j] * v.powf(r)
                }
            })
            .collect();
        if r.is_infinite() {
            vals.into_iter().fold(0.0, f64::max)
        } else {
            rho.weights[i] * par::pairwise_sum(&vals)
        }
    });
    Ok(if r.is_infinite() {
        shells.into_iter().fold(0.0, f64::max)
    } else {
        par::pairwise_sum(&shells).powf(1.0 / r)
    })
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{format_float, InequalityReport};
use crate::kernel::{AngularKernel, XiMeasure};
use crate::par;
use crate::quad::{self, CompositeRule, Interval, QuadSpec};
use crate::radial::{golden_max, ExponentTriple, Relation};
use crate::special::{conjugate, sphere_area};
use crate::spherical::{norm, weighted_lp_norm, Frame, NuMeasure, SphereRule, VelocityFunction};

/// B(|u|, û·ω) = |u|^λ b(û·ω) with λ >= 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionKernel {
    pub lambda: f64,
    pub angular: AngularKernel,
}

impl CollisionKernel {
    pub fn new(lambda: f64, angular: AngularKernel) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "lambda must be a finite value >= 0, got {lambda}"
            )));
        }
        Ok(CollisionKernel { lambda, angular })
    }

    /// λ = 0.
    pub fn maxwellian(angular: AngularKernel) -> Self {
        CollisionKernel { lambda: 0.0, angular }
    }

    /// λ = 1.
    pub fn hard_spheres(angular: AngularKernel) -> Self {
        CollisionKernel { lambda: 1.0, angular }
    }

    pub fn magnitude(&self, u: f64) -> f64 {
        if self.lambda == 0.0 {
            1.0
        } else {
            u.powf(self.lambda)
        }
    }
}

impl fmt::Display for CollisionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|u|^{} {}", self.lambda, self.angular)
    }
}

/// The weighted space L^p_λ with norm (∫ |f|^p (1 + |k|^{pλ}) dk)^{1/p}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaNormSpec {
    pub p: f64,
    pub lambda: f64,
}

impl LambdaNormSpec {
    pub fn new(p: f64, lambda: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("p must lie in [1, ∞], got {p}")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(LambdaNormSpec { p, lambda })
    }
}

fn check_n(fs: &[&VelocityFunction], n: usize) -> Result<()> {
    for f in fs {
        if f.n() != n {
            return Err(Error::Domain(format!(
                "{} lives in dimension {}, expected {n}",
                f.label(),
                f.n()
            )));
        }
    }
    Ok(())
}

fn unit_or_pole(d: &[f64]) -> Vec<f64> {
    let dn = norm(d);
    if dn > 1e-300 {
        d.iter().map(|x| x / dn).collect()
    } else {
        let mut e = vec![0.0; d.len()];
        e[0] = 1.0;
        e
    }
}

fn finite_reach(f: &VelocityFunction) -> Result<f64> {
    let r = f.reach();
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonIntegrable(format!("{} has no finite reach", f.label())))
    }
}

fn sphere_order(quad: &QuadSpec) -> usize {
    (2 * quad.order).max(8)
}

/// Q⁻(g,h)(v) = g(v) ∫ h(v_*) |v - v_*|^λ dv_* ∫ b dω.
pub fn q_minus(
    g: &VelocityFunction,
    h: &VelocityFunction,
    v: &[f64],
    ck: &CollisionKernel,
    quad: &QuadSpec,
) -> Result<f64> {
    let n = v.len();
    check_n(&[g, h], n)?;
    let gv = g.eval(v);
    if gv == 0.0 {
        return Ok(0.0);
    }
    let cut = XiMeasure::new(ck.angular.clone(), n)?
        .grad_cutoff(quad)?
        .value()
        .ok_or_else(|| Error::Precondition("angular kernel violates the cut-off assumption".into()))?;
    let d: Vec<f64> = v.iter().zip(h.center()).map(|(a, b)| a - b).collect();
    let rho_max = norm(&d) + finite_reach(h)? - norm(h.center());
    let frame = Frame::new(&unit_or_pole(&d));
    let rule = SphereRule::new(n, sphere_order(quad))?;
    let shell = |rho: f64| -> f64 {
        let mut w = vec![0.0; n];
        let mut x = vec![0.0; n];
        if h.is_radial() {
            // h(v - ρω) depends on the polar angle about v̂ only
            let (s, ws) = rule.polar();
            let terms: Vec<f64> = s
                .iter()
                .zip(ws)
                .map(|(&s, &wt)| {
                    let c = (1.0 - s * s).max(0.0).sqrt();
                    let mut r = vec![0.0; n];
                    r[0] = s;
                    if n > 1 {
                        r[1] = c;
                    }
                    frame.apply(&r, &mut w);
                    for i in 0..n {
                        x[i] = v[i] - rho * w[i];
                    }
                    wt * h.eval(&x)
                })
                .collect();
            return par::pairwise_sum(&terms);
        }
        let terms: Vec<f64> = (0..rule.len())
            .map(|i| {
                frame.apply(rule.node(i), &mut w);
                for j in 0..n {
                    x[j] = v[j] - rho * w[j];
                }
                rule.weights()[i] * h.eval(&x)
            })
            .collect();
        par::pairwise_sum(&terms)
    };
    let e = ck.lambda + n as f64 - 1.0;
    let iv = Interval::new(0.0, rho_max.max(0.0)).weighted(e, 0.0);
    if rho_max <= 0.0 {
        return Ok(0.0);
    }
    let est = quad::integrate(quad, &iv, shell)?;
    Ok(gv * est.value * cut)
}

/// Q⁺(g,h)(v) = ∫∫ g(v') h(v'_*) |u|^λ b(û·ω) dω dv_* in polar coordinates u = ρû.
///
/// `rule` fixes the order of both sphere integrals; ρ is integrated adaptively with `quad`.
pub fn q_plus_direct(
    g: &VelocityFunction,
    h: &VelocityFunction,
    v: &[f64],
    ck: &CollisionKernel,
    rule: &SphereRule,
    quad: &QuadSpec,
) -> Result<f64> {
    let n = rule.n();
    if v.len() != n {
        return Err(Error::Domain(format!("v has {} entries, expected {n}", v.len())));
    }
    check_n(&[g, h], n)?;
    let (rg, rh) = (finite_reach(g)?, finite_reach(h)?);
    let gap: Vec<f64> = g.center().iter().zip(h.center()).map(|(a, b)| a - b).collect();
    let rho_max = norm(&gap) + (rg - norm(g.center())) + (rh - norm(h.center()));
    let folded = rule.folded(&ck.angular)?;
    let dirs = SphereRule::new(n, rule.order())?;
    let mid: Vec<f64> = g.center().iter().zip(h.center()).map(|(a, b)| 0.5 * (a + b)).collect();
    let d: Vec<f64> = v.iter().zip(&mid).map(|(a, b)| a - b).collect();
    let outer = Frame::new(&unit_or_pole(&d));
    // û nodes in the world frame, and for each the ω nodes aligned with it
    let hats: Vec<Vec<f64>> = (0..dirs.len())
        .map(|i| {
            let mut u = vec![0.0; n];
            outer.apply(dirs.node(i), &mut u);
            u
        })
        .collect();
    let omegas: Vec<Vec<f64>> = par::map(&hats, |u| {
        let f = Frame::new(u);
        let mut out = vec![0.0; folded.len() * n];
        for j in 0..folded.len() {
            f.apply(folded.node(j), &mut out[j * n..(j + 1) * n]);
        }
        out
    });
    let shell = |rho: f64| -> f64 {
        let per_u = par::map_range(hats.len(), |i| {
            let u = &hats[i];
            let om = &omegas[i];
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            let terms: Vec<f64> = (0..folded.len())
                .map(|j| {
                    let w = &om[j * n..(j + 1) * n];
                    for k in 0..n {
                        let center = v[k] - 0.5 * rho * u[k];
                        a[k] = center + 0.5 * rho * w[k];
                        b[k] = center - 0.5 * rho * w[k];
                    }
                    let x = g.eval(&a);
                    if x == 0.0 {
                        0.0
                    } else {
                        folded.weights()[j] * x * h.eval(&b)
                    }
                })
                .collect();
            dirs.weights()[i] * par::pairwise_sum(&terms)
        });
        par::pairwise_sum(&per_u)
    };
    if rho_max <= 0.0 {
        return Ok(0.0);
    }
    let iv = Interval::new(0.0, rho_max).weighted(ck.lambda + n as f64 - 1.0, 0.0);
    Ok(quad::integrate(quad, &iv, shell)?.value)
}

/// Q⁺(g,h)(v) through the hyperplane (Carleman) representation.
///
/// With x = s√((1+c)/2) u and z = s√((1-c)/2) η, η ⊥ u, the hyperplane integral
/// 2^{n-1} ∫ g(v+x)/|x| ∫_{x·z=0} |x+z|^{λ+2-n} h(v+z) b(2|x|²/|x+z|² - 1) dπ_z dx
/// becomes ∫du ∫dη ∫ b(c)(1-c²)^{(n-3)/2} dc ∫ s^{λ+n-1} g(v+x) h(v+z) ds,
/// which has no singular factor left. `quad.order` sets the s rule.
pub fn q_plus_carleman(
    g: &VelocityFunction,
    h: &VelocityFunction,
    v: &[f64],
    ck: &CollisionKernel,
    rule: &SphereRule,
    quad: &QuadSpec,
) -> Result<f64> {
    let n = rule.n();
    if v.len() != n {
        return Err(Error::Domain(format!("v has {} entries, expected {n}", v.len())));
    }
    check_n(&[g, h], n)?;
    let dg: Vec<f64> = g.center().iter().zip(v).map(|(a, b)| a - b).collect();
    let dh: Vec<f64> = h.center().iter().zip(v).map(|(a, b)| a - b).collect();
    let rg = norm(&dg) + finite_reach(g)? - norm(g.center());
    let rh = norm(&dh) + finite_reach(h)? - norm(h.center());
    let s_max = (rg * rg + rh * rh).sqrt();
    let folded = rule.folded(&ck.angular)?;
    let (cs, cw) = folded.polar();
    let tangent_area = sphere_area(n - 2);
    let c_rule: Vec<(f64, f64)> = cs.iter().zip(cw).map(|(&c, &w)| (c, w / tangent_area)).collect();
    let dirs = SphereRule::new(n, rule.order())?;
    let (tangents, tangent_w): (Vec<f64>, Vec<f64>) = if n == 2 {
        (vec![1.0, -1.0], vec![1.0, 1.0])
    } else {
        let t = SphereRule::new(n - 1, rule.order())?;
        (
            (0..t.len()).flat_map(|i| t.node(i).to_vec()).collect(),
            t.weights().to_vec(),
        )
    };
    let s_rule = CompositeRule::new(s_max, 6, quad.order, ck.lambda + n as f64 - 1.0)?;
    let outer = Frame::new(&unit_or_pole(&dg));
    let per_u = par::map_range(dirs.len(), |iu| {
        let mut u = vec![0.0; n];
        outer.apply(dirs.node(iu), &mut u);
        let frame = Frame::new(&u);
        let m = n - 1;
        let etas: Vec<Vec<f64>> = (0..tangent_w.len())
            .map(|j| {
                let mut r = vec![0.0; n];
                r[1..].copy_from_slice(&tangents[j * m..(j + 1) * m]);
                let mut out = vec![0.0; n];
                frame.apply(&r, &mut out);
                out
            })
            .collect();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut terms = Vec::with_capacity(c_rule.len() * etas.len());
        for &(c, wc) in &c_rule {
            let (ca, cb) = ((0.5 * (1.0 + c)).sqrt(), (0.5 * (1.0 - c)).sqrt());
            // g-values along the ray do not depend on η
            let gs: Vec<f64> = s_rule
                .nodes
                .iter()
                .map(|&s| {
                    for k in 0..n {
                        a[k] = v[k] + s * ca * u[k];
                    }
                    g.eval(&a)
                })
                .collect();
            if gs.iter().all(|&x| x == 0.0) {
                continue;
            }
            for (eta, &we) in etas.iter().zip(&tangent_w) {
                let line: Vec<f64> = s_rule
                    .nodes
                    .iter()
                    .zip(&s_rule.weights)
                    .zip(&gs)
                    .map(|((&s, &ws), &gv)| {
                        if gv == 0.0 {
                            return 0.0;
                        }
                        for k in 0..n {
                            b[k] = v[k] + s * cb * eta[k];
                        }
                        ws * gv * h.eval(&b)
                    })
                    .collect();
                terms.push(wc * we * par::pairwise_sum(&line));
            }
        }
        dirs.weights()[iu] * par::pairwise_sum(&terms)
    });
    Ok(par::pairwise_sum(&per_u))
}

/// (∫ |f|^p (1 + |k|^{pλ}) dk)^{1/p}; for p = ∞, sup |f| (1 + |k|^λ) by sampling.
pub fn lambda_norm(f: &VelocityFunction, spec: &LambdaNormSpec, quad: &QuadSpec) -> Result<f64> {
    let n = f.n();
    let p = spec.p;
    if p.is_infinite() {
        return weighted_sup(f, spec.lambda);
    }
    let plain = weighted_lp_norm(f, p, &NuMeasure::new(n, 0.0)?, quad)?;
    let weighted = if spec.lambda == 0.0 {
        plain
    } else {
        weighted_lp_norm(f, p, &NuMeasure::new(n, p * spec.lambda)?, quad)?
    };
    Ok((plain.powf(p) + weighted.powf(p)).powf(1.0 / p))
}

fn weighted_sup(f: &VelocityFunction, lambda: f64) -> Result<f64> {
    let n = f.n();
    let reach = finite_reach(f)?;
    let rule = SphereRule::new(n, 16)?;
    let grid = 800;
    let weight = |r: f64| 1.0 + r.powf(lambda);
    let along = |r: f64, dir: &[f64]| -> f64 {
        let v: Vec<f64> = dir.iter().map(|x| r * x).collect();
        f.eval(&v).abs() * weight(r)
    };
    // best value and direction on each radius
    let rows = par::map_range(grid + 1, |i| {
        let r = reach * i as f64 / grid as f64;
        (0..rule.len())
            .map(|j| (along(r, rule.node(j)), j))
            .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a })
    });
    let (i, &(best, j)) = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("non-empty grid");
    let lo = reach * i.saturating_sub(1) as f64 / grid as f64;
    let hi = reach * (i + 1).min(grid) as f64 / grid as f64;
    let dir = rule.node(j).to_vec();
    let refined = if let Some(p) = f.radial() {
        golden_max(&|r: f64| p.eval(r * r).abs() * weight(r), lo, hi)
    } else {
        golden_max(&|r: f64| along(r, &dir), lo, hi)
    };
    Ok(best.max(refined))
}

/// ‖Q⁺(g,h)‖_{L^r} by evaluating the Carleman form on a radial or polar grid.
pub fn q_plus_norm(
    g: &VelocityFunction,
    h: &VelocityFunction,
    r: f64,
    ck: &CollisionKernel,
    rule: &SphereRule,
    quad: &QuadSpec,
) -> Result<f64> {
    let n = rule.n();
    let radius = (finite_reach(g)?.powi(2) + finite_reach(h)?.powi(2)).sqrt();
    let point = |v: &[f64]| q_plus_carleman(g, h, v, ck, rule, quad);
    if g.is_radial() && h.is_radial() {
        // Q⁺ of radial inputs is radial
        let at = |rho: f64| -> Result<f64> {
            let mut v = vec![0.0; n];
            v[0] = rho;
            point(&v)
        };
        if r.is_infinite() {
            let grid = 64;
            let vals: Vec<f64> = (0..=grid)
                .map(|i| at(radius * i as f64 / grid as f64).map(f64::abs))
                .collect::<Result<_>>()?;
            return Ok(vals.into_iter().fold(0.0, f64::max));
        }
        let spec = quad.with_rel_tol(quad.rel_tol.max(1e-8));
        let iv = Interval::new(0.0, radius).weighted(n as f64 - 1.0, 0.0);
        let err = std::sync::OnceLock::new();
        let est = quad::integrate_lenient(&spec, &iv, |rho| match at(rho) {
            Ok(x) => x.abs().powf(r),
            Err(e) => {
                let _ = err.set(e);
                f64::NAN
            }
        })?;
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        let est = est.into_result(&spec)?;
        return Ok((sphere_area(n - 1) * est.value).powf(1.0 / r));
    }
    let dirs = SphereRule::new(n, 6)?;
    let rho = CompositeRule::new(radius, 4, 8, if r.is_infinite() { 0.0 } else { n as f64 - 1.0 })?;
    let mut acc = Vec::new();
    for (&x, &wx) in rho.nodes.iter().zip(&rho.weights) {
        for j in 0..dirs.len() {
            let v: Vec<f64> = dirs.node(j).iter().map(|d| x * d).collect();
            let q = point(&v)?.abs();
            acc.push(if r.is_infinite() {
                q
            } else {
                wx * dirs.weights()[j] * q.powf(r)
            });
        }
    }
    Ok(if r.is_infinite() {
        acc.into_iter().fold(0.0, f64::max)
    } else {
        par::pairwise_sum(&acc).powf(1.0 / r)
    })
}

/// ‖Q⁺(g,h)‖_{L^r} ≤ 2^{λ+n-1}|S^{n-2}| β_b(-n/2r', -n/2r') ‖g‖_{L^p_λ} ‖h‖_{L^q_λ}.
#[allow(clippy::too_many_arguments)]
pub fn theorem2_check(
    g: &VelocityFunction,
    h: &VelocityFunction,
    e: &ExponentTriple,
    ck: &CollisionKernel,
    rule: &SphereRule,
    quad: &QuadSpec,
    tolerance: f64,
) -> Result<InequalityReport> {
    if e.relation != Relation::Young {
        return Err(Error::Precondition(
            "the bound on Q⁺ needs a Young triple 1/p + 1/q = 1 + 1/r".into(),
        ));
    }
    let n = rule.n();
    check_n(&[g, h], n)?;
    let rc = conjugate(e.r);
    let x = if rc.is_infinite() {
        0.0
    } else {
        -(n as f64) / (2.0 * rc)
    };
    let beta = XiMeasure::new(ck.angular.clone(), n)?
        .beta(x, x, quad)?
        .value()
        .ok_or_else(|| {
            Error::Precondition(format!(
                "r' = {} violates the r'-condition: beta_b({x}, {x}) is infinite for {}",
                format_float(rc),
                ck.angular
            ))
        })?;
    let tangent = sphere_area(n - 2);
    let constant = 2f64.powf(ck.lambda + n as f64 - 1.0) * tangent * beta;
    let lhs = q_plus_norm(g, h, e.r, ck, rule, quad)?;
    let ng = lambda_norm(g, &LambdaNormSpec::new(e.p, ck.lambda)?, quad)?;
    let nh = lambda_norm(h, &LambdaNormSpec::new(e.q, ck.lambda)?, quad)?;
    Ok(InequalityReport::new(
        "theorem2",
        lhs,
        constant,
        vec![
            (format!("|g|_{},{}", e.p, ck.lambda), ng),
            (format!("|h|_{},{}", e.q, ck.lambda), nh),
        ],
        tolerance,
        0.0,
    )
    .with_setting(n, (e.p, e.q, e.r), 0.0, ck.lambda, &ck.angular.to_string())
    .with_inputs(&format!("{};{}", g.label(), h.label()))
    .with_quad_order(quad.order))
}

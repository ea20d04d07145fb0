use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::InequalityReport;
use crate::kernel::{Finiteness, XiMeasure};
use crate::par;
use crate::quad::{self, Estimate, Interval, QuadSpec};
use crate::special::recip;

use super::profile::{weaker, Decay, RadialProfile};

/// The measure dσ_n^α(x) = x^{(n+α-2)/2} dx on (0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaMeasure {
    pub n: usize,
    pub alpha: f64,
}

impl SigmaMeasure {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension must be >= 2, got {n}")));
        }
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be finite, got {alpha}")));
        }
        Ok(SigmaMeasure { n, alpha })
    }

    pub fn weight_exponent(&self) -> f64 {
        (self.n as f64 + self.alpha - 2.0) / 2.0
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x.powf(self.weight_exponent())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// 1/p + 1/q = 1/r
    Holder,
    /// 1/p + 1/q = 1 + 1/r
    Young,
}

/// Exponents p, q, r in [1, ∞] tied by a Hölder or Young relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentTriple {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub relation: Relation,
}

const RELATION_SLACK: f64 = 1e-12;

impl ExponentTriple {
    pub fn new(p: f64, q: f64, r: f64, relation: Relation) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q), ("r", r)] {
            if !(v >= 1.0) {
                return Err(Error::Domain(format!("{name} must lie in [1, ∞], got {v}")));
            }
        }
        let lhs = recip(p) + recip(q);
        let rhs = match relation {
            Relation::Holder => recip(r),
            Relation::Young => 1.0 + recip(r),
        };
        if (lhs - rhs).abs() > RELATION_SLACK {
            return Err(Error::Domain(format!(
                "({p}, {q}, {r}) does not satisfy the {relation:?} relation"
            )));
        }
        Ok(ExponentTriple { p, q, r, relation })
    }

    /// Hölder triple with r determined by p and q.
    pub fn holder(p: f64, q: f64) -> Result<Self> {
        let s = recip(p) + recip(q);
        if s > 1.0 + RELATION_SLACK {
            return Err(Error::Domain(format!("1/p + 1/q = {s} exceeds 1")));
        }
        let r = if s == 0.0 { f64::INFINITY } else { 1.0 / s };
        Self::new(p, q, r.max(1.0), Relation::Holder)
    }

    /// Young triple with r determined by p and q.
    pub fn young(p: f64, q: f64) -> Result<Self> {
        let s = recip(p) + recip(q) - 1.0;
        if s < -RELATION_SLACK {
            return Err(Error::Domain(format!("1/p + 1/q = {} is below 1", s + 1.0)));
        }
        let r = if s <= 0.0 { f64::INFINITY } else { 1.0 / s };
        Self::new(p, q, r, Relation::Young)
    }
}

fn inner_spec(quad: &QuadSpec) -> QuadSpec {
    quad.with_rel_tol((quad.rel_tol * 0.1).max(1e-15))
}

fn bilinear_regular(
    g: &RadialProfile,
    h: &RadialProfile,
    x: f64,
    m: &XiMeasure,
    quad: &QuadSpec,
    strict: bool,
) -> Result<Estimate> {
    let (eg, eh) = (g.origin_exponent(), h.origin_exponent());
    if x > g.support() + h.support() {
        return Ok(Estimate::zero());
    }
    if x == 0.0 {
        let beta = m.integrate(eg, eh, &[], quad, |_| 1.0)?;
        let c = g.eval_regular(0.0) * h.eval_regular(0.0);
        return Ok(Estimate {
            value: c * beta.value,
            error: c.abs() * beta.error,
            ..beta
        });
    }
    let mut bps: Vec<f64> = g.breakpoints().iter().map(|b| b / x).collect();
    bps.extend(h.breakpoints().iter().map(|b| 1.0 - b / x));
    bps.retain(|&z| z > 0.0 && z < 1.0);
    let f = |z: f64| {
        let a = g.eval_regular(x * z);
        if a == 0.0 {
            return 0.0;
        }
        a * h.eval_regular(x * (1.0 - z))
    };
    if strict {
        m.integrate(eg, eh, &bps, quad, f)
    } else {
        m.integrate_lenient(eg, eh, &bps, quad, f)
    }
}

/// ℬ(g, h)(x) = ∫_0^1 g(xz) h(x(1-z)) dξ_n^b(z).
pub fn bilinear_b(g: &RadialProfile, h: &RadialProfile, x: f64, m: &XiMeasure, quad: &QuadSpec) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("ℬ is defined for x >= 0, got {x}")));
    }
    let e = g.origin_exponent() + h.origin_exponent();
    let reg = bilinear_regular(g, h, x, m, quad, true)?.value;
    if reg == 0.0 {
        return Ok(0.0);
    }
    Ok(if e == 0.0 { reg } else { reg * x.powf(e) })
}

/// ℬ(g, h) as a profile, evaluated lazily by quadrature.
pub fn bilinear_profile(g: &RadialProfile, h: &RadialProfile, m: &XiMeasure, quad: &QuadSpec) -> Result<RadialProfile> {
    let (eg, eh) = (g.origin_exponent(), h.origin_exponent());
    if m.finiteness(eg, eh) == Finiteness::Divergent {
        return Err(Error::Divergent { x: eg, y: eh });
    }
    let support = g.support() + h.support();
    let decay = match (g.decay(), h.decay()) {
        (Decay::Compact, Decay::Compact) => Decay::Compact,
        (a, b) => weaker(a, b),
    };
    let mut bps = Vec::new();
    for a in std::iter::once(0.0).chain(g.breakpoints().iter().copied()) {
        for b in std::iter::once(0.0).chain(h.breakpoints().iter().copied()) {
            bps.push(a + b);
        }
    }
    let (g, h, m, spec) = (g.clone(), h.clone(), m.clone(), inner_spec(quad));
    let label = format!("B({}, {})", g.label(), h.label());
    Ok(RadialProfile::from_fn(label, eg + eh, support, decay, bps, move |x| {
        bilinear_regular(&g, &h, x, &m, &spec, false)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    }))
}

/// ∫_a^b |f(x)|^p x^w dx for 0 <= a < b < ∞.
pub fn power_moment_on(f: &RadialProfile, p: f64, w: f64, a: f64, b: f64, quad: &QuadSpec) -> Result<Estimate> {
    let b = b.min(f.support());
    if b <= a {
        return Ok(Estimate::zero());
    }
    let e = p * f.origin_exponent() + w;
    let bps = f.breakpoints().iter().copied().filter(|&t| t > a && t < b);
    let abs_p = |v: f64| if p == 1.0 { v.abs() } else { v.abs().powf(p) };
    if a == 0.0 {
        if e <= -1.0 {
            return Err(Error::NonIntegrable(format!(
                "|{}|^{p} x^{w} behaves like x^{e} at the origin",
                f.label()
            )));
        }
        let iv = Interval::new(0.0, b).weighted(e, 0.0).with_breakpoints(bps);
        quad::integrate(quad, &iv, |x| abs_p(f.eval_regular(x)))
    } else {
        let iv = Interval::new(a, b).with_breakpoints(bps);
        quad::integrate(quad, &iv, |x| abs_p(f.eval_regular(x)) * x.powf(e))
    }
}

/// ∫_0^∞ |f(x)|^p x^w dx, truncated or mapped according to the decay hint.
pub fn power_moment(f: &RadialProfile, p: f64, w: f64, quad: &QuadSpec) -> Result<Estimate> {
    let last = f.breakpoints().last().copied().unwrap_or(0.0);
    match f.decay() {
        Decay::Compact => power_moment_on(f, p, w, 0.0, f.support(), quad),
        Decay::Gaussian { scale } => {
            let x_max = last + scale * (80.0 + 4.0 * w.max(0.0)) / p;
            power_moment_on(f, p, w, 0.0, x_max, quad)
        }
        Decay::Power { rate } => {
            let x0 = last.max(1.0);
            let exp = p * rate - w - 2.0;
            if exp <= -1.0 {
                return Err(Error::NonIntegrable(format!(
                    "|{}|^{p} x^{w} decays like x^{} at infinity",
                    f.label(),
                    -p * rate + w
                )));
            }
            let head = power_moment_on(f, p, w, 0.0, x0, quad)?;
            let iv = Interval::new(0.0, 1.0).weighted(exp, 0.0);
            let tail = quad::integrate(quad, &iv, |u| {
                let x = x0 / u;
                let v = f.eval(x).abs();
                if v == 0.0 {
                    return 0.0;
                }
                v.powf(p) * x.powf(w) * x0 / (u * u * u.powf(exp))
            })?;
            Ok(Estimate {
                value: head.value + tail.value,
                error: head.error + tail.error,
                panels: head.panels + tail.panels,
                converged: true,
            })
        }
    }
}

/// ‖f‖_{L^p(dσ_n^α)}.
pub fn lp_norm_radial(f: &RadialProfile, p: f64, m: &SigmaMeasure, quad: &QuadSpec) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must lie in [1, ∞], got {p}")));
    }
    if p.is_infinite() {
        return sup_norm(f);
    }
    let est = power_moment(f, p, m.weight_exponent(), quad)?;
    Ok(est.value.max(0.0).powf(1.0 / p))
}

const SUP_SAMPLES: usize = 2048;

/// Essential supremum of |f| by sampling each smooth piece and refining the maximum.
pub fn sup_norm(f: &RadialProfile) -> Result<f64> {
    let x_max = match f.decay() {
        Decay::Compact => f.support(),
        Decay::Gaussian { scale } => f.breakpoints().last().copied().unwrap_or(0.0) + 40.0 * scale,
        Decay::Power { .. } => {
            return Err(Error::Precondition(format!(
                "sup norm of {} needs compact or gaussian decay",
                f.label()
            )))
        }
    };
    if x_max <= 0.0 {
        return Ok(0.0);
    }
    let e = f.origin_exponent();
    let near0 = f.eval_regular(x_max * 1e-300_f64.max(f64::MIN_POSITIVE));
    if e < 0.0 && near0 != 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut edges = vec![0.0];
    edges.extend(f.breakpoints().iter().copied().filter(|&b| b > 0.0 && b < x_max));
    edges.push(x_max);
    let abs = |x: f64| f.eval(x).abs();
    let mut best = 0.0f64;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = (b - a) / SUP_SAMPLES as f64;
        let xs: Vec<f64> = (0..=SUP_SAMPLES)
            .map(|i| {
                let t = a + h * i as f64;
                t.clamp(a + 1e-14 * (b - a), b - 1e-14 * (b - a))
            })
            .collect();
        let vals: Vec<f64> = xs.iter().map(|&x| abs(x)).collect();
        let (i, &v) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty sample");
        let lo = xs[i.saturating_sub(1)];
        let hi = xs[(i + 1).min(SUP_SAMPLES)];
        best = best.max(v).max(golden_max(&abs, lo, hi));
    }
    Ok(best)
}

pub(crate) fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// The unit-norm pair (g_ε, h_ε) concentrating at the origin as ε → 0.
pub fn extremizer_pair(eps: f64, p: f64, q: f64, n: usize, alpha: f64) -> Result<(RadialProfile, RadialProfile)> {
    Ok((
        RadialProfile::extremizer(eps, p, n, alpha)?,
        RadialProfile::extremizer(eps, q, n, alpha)?,
    ))
}

fn scaling_exponent(n: usize, alpha: f64, p: f64) -> f64 {
    -(n as f64 + alpha) / 2.0 * recip(p)
}

fn check_dims(e: &ExponentTriple, m: &XiMeasure, sm: &SigmaMeasure) -> Result<()> {
    if e.relation != Relation::Holder {
        return Err(Error::Precondition(
            "the radial bilinear estimate needs a Hölder triple".into(),
        ));
    }
    if m.n != sm.n {
        return Err(Error::Precondition(format!(
            "kernel measure is for n = {} but sigma measure for n = {}",
            m.n, sm.n
        )));
    }
    Ok(())
}

/// The sharp constant β_b(-(n+α)/2p, -(n+α)/2q); `Divergent` as a precondition error.
pub fn sharp_constant(e: &ExponentTriple, m: &XiMeasure, sm: &SigmaMeasure, quad: &QuadSpec) -> Result<f64> {
    let x = scaling_exponent(sm.n, sm.alpha, e.p);
    let y = scaling_exponent(sm.n, sm.alpha, e.q);
    m.beta(x, y, quad)?.value().ok_or(Error::Divergent { x, y })
}

/// ‖ℬ(g,h)‖_{L^r(σ)} ≤ β_b(-(n+α)/2p, -(n+α)/2q) ‖g‖_{L^p(σ)} ‖h‖_{L^q(σ)}.
pub fn lemma23_check(
    g: &RadialProfile,
    h: &RadialProfile,
    e: &ExponentTriple,
    m: &XiMeasure,
    sm: &SigmaMeasure,
    quad: &QuadSpec,
    tolerance: f64,
) -> Result<InequalityReport> {
    check_dims(e, m, sm)?;
    let constant = sharp_constant(e, m, sm, quad)?;
    let b = bilinear_profile(g, h, m, quad)?;
    let lhs = lp_norm_radial(&b, e.r, sm, quad)?;
    let ng = lp_norm_radial(g, e.p, sm, quad)?;
    let nh = lp_norm_radial(h, e.q, sm, quad)?;
    Ok(InequalityReport::new(
        "lemma23",
        lhs,
        constant,
        vec![(format!("|g|_{}", e.p), ng), (format!("|h|_{}", e.q), nh)],
        tolerance,
        0.0,
    )
    .with_setting(sm.n, (e.p, e.q, e.r), sm.alpha, 0.0, &m.kernel.to_string())
    .with_inputs(&format!("{};{}", g.label(), h.label()))
    .with_quad_order(quad.order))
}

/// One ε of the sharpness study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub eps: f64,
    /// ‖ℬ(g_ε, h_ε)‖_r
    pub norm: f64,
    /// β_b at the ε-shifted exponents.
    pub beta_eps: f64,
    /// norm / (C ‖g_ε‖_p ‖h_ε‖_q)
    pub ratio: f64,
    /// ∫_0^1 ℬ^r dσ
    pub part_one: f64,
    /// ∫_1^2 ℬ^r dσ
    pub part_two: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessTable {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub kernel: String,
    pub sharp_constant: f64,
    pub rows: Vec<SharpnessRow>,
}

impl SharpnessTable {
    pub fn sandwich_holds(&self) -> bool {
        self.rows.iter().all(|r| r.lower_ok && r.upper_ok)
    }
}

pub const DEFAULT_EPS_SCHEDULE: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

const SANDWICH_SLACK: f64 = 1e-8;

/// Norms of ℬ on the extremizer pairs against the sharp constant.
pub fn sharpness_study(
    e: &ExponentTriple,
    m: &XiMeasure,
    sm: &SigmaMeasure,
    eps_list: &[f64],
    quad: &QuadSpec,
) -> Result<SharpnessTable> {
    check_dims(e, m, sm)?;
    if e.p.is_infinite() || e.q.is_infinite() {
        return Err(Error::Precondition("extremizer sequences need finite p and q".into()));
    }
    let constant = sharp_constant(e, m, sm, quad)?;
    let w = sm.weight_exponent();
    let rows = par::map(eps_list, |&eps| -> Result<SharpnessRow> {
        let (g, h) = extremizer_pair(eps, e.p, e.q, sm.n, sm.alpha)?;
        let shift = |p: f64| -(sm.n as f64 + sm.alpha - 2.0 * eps) / (2.0 * p);
        let (x, y) = (shift(e.p), shift(e.q));
        let beta_eps = m.beta(x, y, quad)?.value().ok_or(Error::Divergent { x, y })?;
        let b = bilinear_profile(&g, &h, m, quad)?;
        let part_one = power_moment_on(&b, e.r, w, 0.0, 1.0, quad)?.value;
        let part_two = power_moment_on(&b, e.r, w, 1.0, 2.0, quad)?.value;
        let total = part_one + part_two;
        let norm = total.powf(1.0 / e.r);
        let ng = lp_norm_radial(&g, e.p, sm, quad)?;
        let nh = lp_norm_radial(&h, e.q, sm, quad)?;
        let lower = beta_eps.powf(e.r);
        Ok(SharpnessRow {
            eps,
            norm,
            beta_eps,
            ratio: norm / (constant * ng * nh),
            part_one,
            part_two,
            lower_ok: lower <= total * (1.0 + SANDWICH_SLACK),
            upper_ok: total <= lower * 2f64.powf(eps) * (1.0 + SANDWICH_SLACK),
        })
    });
    Ok(SharpnessTable {
        n: sm.n,
        alpha: sm.alpha,
        p: e.p,
        q: e.q,
        r: e.r,
        kernel: m.kernel.to_string(),
        sharp_constant: constant,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

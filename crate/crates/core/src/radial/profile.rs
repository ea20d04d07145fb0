use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail behaviour of a profile, used to truncate half-line integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decay {
    /// Zero beyond the support radius.
    Compact,
    /// |f(x)| ≲ e^{-x/scale}.
    Gaussian { scale: f64 },
    /// |f(x)| ≲ x^{-rate}.
    Power { rate: f64 },
}

type RegularFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function on [0, ∞) written as `f(x) = x^e · regular(x)`.
///
/// `e` is the origin exponent; `regular` is bounded near 0 and smooth between
/// the breakpoints. Profiles are the tilde-functions of radial velocity
/// functions, `f(k) = f̃(|k|²)`.
#[derive(Clone)]
pub struct RadialProfile {
    regular: RegularFn,
    origin_exponent: f64,
    support: f64,
    decay: Decay,
    breakpoints: Vec<f64>,
    label: String,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("label", &self.label)
            .field("origin_exponent", &self.origin_exponent)
            .field("support", &self.support)
            .field("decay", &self.decay)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl RadialProfile {
    /// General constructor. `support` is ∞ unless `decay` is `Compact`.
    pub fn from_fn(
        label: impl Into<String>,
        origin_exponent: f64,
        support: f64,
        decay: Decay,
        breakpoints: Vec<f64>,
        regular: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let support = if decay == Decay::Compact {
            support
        } else {
            f64::INFINITY
        };
        let mut breakpoints: Vec<f64> = breakpoints.into_iter().filter(|&b| b.is_finite() && b > 0.0).collect();
        if support.is_finite() && support > 0.0 {
            breakpoints.push(support);
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        RadialProfile {
            regular: Arc::new(regular),
            origin_exponent,
            support,
            decay,
            breakpoints,
            label: label.into(),
        }
    }

    pub fn zero() -> Self {
        Self::from_fn("zero", 0.0, 0.0, Decay::Compact, vec![], |_| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn(
            format!("constant:{c}"),
            0.0,
            f64::INFINITY,
            Decay::Power { rate: 0.0 },
            vec![],
            move |_| c,
        )
    }

    /// Indicator of [a, b].
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(Error::Domain(format!("indicator needs 0 <= a < b < ∞, got [{a}, {b}]")));
        }
        Ok(Self::from_fn(
            format!("indicator:{a},{b}"),
            0.0,
            b,
            Decay::Compact,
            vec![a, b],
            move |x| {
                if x >= a && x <= b {
                    1.0
                } else {
                    0.0
                }
            },
        ))
    }

    /// e^{-x/scale}; the tilde of the velocity Gaussian e^{-|v|²/scale}.
    pub fn gauss(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("gauss scale must be positive, got {scale}")));
        }
        Ok(Self::from_fn(
            format!("gauss:{scale}"),
            0.0,
            f64::INFINITY,
            Decay::Gaussian { scale },
            vec![],
            move |x| (-x / scale).exp(),
        ))
    }

    /// c·x^e on (0, cutoff), zero beyond; `cutoff = ∞` gives a pure power.
    pub fn power(c: f64, e: f64, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !c.is_finite() || !e.is_finite() {
            return Err(Error::Domain(format!(
                "invalid power profile c={c}, e={e}, cutoff={cutoff}"
            )));
        }
        let label = format!("power:{c},{e},{cutoff}");
        Ok(if cutoff.is_finite() {
            Self::from_fn(label, e, cutoff, Decay::Compact, vec![], move |x| {
                if x < cutoff {
                    c
                } else {
                    0.0
                }
            })
        } else {
            Self::from_fn(label, e, f64::INFINITY, Decay::Power { rate: -e }, vec![], move |_| c)
        })
    }

    /// The sharpness sequence element ε^{1/p} x^{-(n+α-2ε)/2p} on (0, 1).
    pub fn extremizer(eps: f64, p: f64, n: usize, alpha: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("extremizer needs eps > 0, got {eps}")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("extremizer needs 1 <= p < ∞, got {p}")));
        }
        if !(n as f64 + alpha > 0.0) {
            return Err(Error::Domain(format!(
                "extremizer needs n + alpha > 0, got {}",
                n as f64 + alpha
            )));
        }
        let e = -(n as f64 + alpha - 2.0 * eps) / (2.0 * p);
        let c = eps.powf(1.0 / p);
        let mut f = Self::power(c, e, 1.0)?;
        f.label = format!("extremizer:{eps},{p}");
        Ok(f)
    }

    /// f(x) for x >= 0.
    pub fn eval(&self, x: f64) -> f64 {
        if x > self.support || x < 0.0 {
            return 0.0;
        }
        let r = (self.regular)(x);
        if self.origin_exponent == 0.0 || r == 0.0 {
            r
        } else {
            r * x.powf(self.origin_exponent)
        }
    }

    /// f(x) / x^e.
    pub fn eval_regular(&self, x: f64) -> f64 {
        if x > self.support || x < 0.0 {
            return 0.0;
        }
        (self.regular)(x)
    }

    pub fn origin_exponent(&self) -> f64 {
        self.origin_exponent
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    /// Points (support included) where the profile may fail to be smooth.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_compact(&self) -> bool {
        self.decay == Decay::Compact
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// x ↦ f(c·x).
    pub fn dilate(&self, c: f64) -> Self {
        assert!(c > 0.0, "dilation factor must be positive");
        let inner = self.regular.clone();
        let e = self.origin_exponent;
        let k = c.powf(e);
        let decay = match self.decay {
            Decay::Gaussian { scale } => Decay::Gaussian { scale: scale / c },
            d => d,
        };
        Self::from_fn(
            format!("{}∘({c}·)", self.label),
            e,
            self.support / c,
            decay,
            self.breakpoints.iter().map(|b| b / c).collect(),
            move |x| k * inner(c * x),
        )
    }

    /// x ↦ a·f(x).
    pub fn scale(&self, a: f64) -> Self {
        let inner = self.regular.clone();
        let mut out = self.clone();
        out.regular = Arc::new(move |x| a * inner(x));
        out.label = format!("{a}·{}", self.label);
        out
    }

    /// Pointwise sum; both profiles must share the origin exponent.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.origin_exponent != other.origin_exponent {
            return Err(Error::Domain(
                "profiles with different origin exponents cannot be added".into(),
            ));
        }
        let (f, g) = (self.clone(), other.clone());
        let decay = weaker(self.decay, other.decay);
        let mut bps = self.breakpoints.clone();
        bps.extend_from_slice(&other.breakpoints);
        Ok(Self::from_fn(
            format!("{}+{}", self.label, other.label),
            self.origin_exponent,
            self.support.max(other.support),
            decay,
            bps,
            move |x| f.eval_regular(x) + g.eval_regular(x),
        ))
    }

    /// Parses `indicator:<a>,<b>`, `gauss:<scale>`, `power:<c>,<e>,<cutoff>`,
    /// `constant:<c>`, `extremizer:<eps>,<p>` (the last needs `n`, `alpha`) or `zero`.
    pub fn parse(spec: &str, n: usize, alpha: f64) -> Result<Self> {
        if spec.trim() == "zero" {
            return Ok(Self::zero());
        }
        let (head, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::parse("radial profile", spec, "expected <kind>:<params>"))?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|t| parse_real(t.trim()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::parse("radial profile", spec, "bad number"))?;
        let want = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::parse("radial profile", spec, format!("expected {k} numbers")))
            }
        };
        match head.trim() {
            "indicator" => want(2).and_then(|_| Self::indicator(nums[0], nums[1])),
            "gauss" => want(1).and_then(|_| Self::gauss(nums[0])),
            "power" => want(3).and_then(|_| Self::power(nums[0], nums[1], nums[2])),
            "constant" => want(1).map(|_| Self::constant(nums[0])),
            "extremizer" => want(2).and_then(|_| Self::extremizer(nums[0], nums[1], n, alpha)),
            "zero" => Ok(Self::zero()),
            other => Err(Error::parse("radial profile", spec, format!("unknown kind {other:?}"))),
        }
    }
}

/// Parses a real number, accepting `inf`, `∞` and fractions like `4/3`.
pub fn parse_real(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" | "infinity" | "∞" => return Some(f64::INFINITY),
        _ => {}
    }
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return Some(a / b);
    }
    s.parse().ok()
}

pub(crate) fn weaker(a: Decay, b: Decay) -> Decay {
    use Decay::*;
    match (a, b) {
        (Compact, d) | (d, Compact) => d,
        (Power { rate: r1 }, Power { rate: r2 }) => Power { rate: r1.min(r2) },
        (Power { rate }, _) | (_, Power { rate }) => Power { rate },
        (Gaussian { scale: s1 }, Gaussian { scale: s2 }) => Gaussian { scale: s1.max(s2) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremizer_values() {
        let g = RadialProfile::extremizer(0.1, 1.0, 3, 0.0).unwrap();
        assert!((g.eval(0.5) - 0.1 * 0.5f64.powf(-1.4)).abs() < 1e-15);
        assert!((g.eval(0.5) - 0.263_901_582_154_976).abs() < 1e-12);
        assert_eq!(g.eval(1.0), 0.0);
        assert_eq!(g.eval(3.0), 0.0);
    }

    #[test]
    fn indicator_and_support() {
        let f = RadialProfile::indicator(0.0, 1.0).unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(1.5), 0.0);
        assert_eq!(f.breakpoints(), &[1.0]);
    }

    #[test]
    fn dilation() {
        let f = RadialProfile::extremizer(0.2, 2.0, 3, 0.0).unwrap();
        let d = f.dilate(3.0);
        for x in [0.01, 0.1, 0.3] {
            assert!((d.eval(x) - f.eval(3.0 * x)).abs() < 1e-12 * f.eval(3.0 * x));
        }
        assert!((d.support() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn parse_forms() {
        assert!(RadialProfile::parse("gauss:2", 3, 0.0).is_ok());
        assert!(RadialProfile::parse("power:1,-0.5,inf", 3, 0.0).is_ok());
        assert!(RadialProfile::parse("extremizer:0.01,2", 3, 0.0).is_ok());
        assert!(RadialProfile::parse("indicator:1", 3, 0.0).is_err());
        assert!(RadialProfile::parse("wobble:1", 3, 0.0).is_err());
        assert_eq!(parse_real("4/3"), Some(4.0 / 3.0));
        assert_eq!(parse_real("∞"), Some(f64::INFINITY));
    }
}

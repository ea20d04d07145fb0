use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::radial::{parse_real, Decay, RadialProfile};

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Level below which Gaussian tails are treated as zero.
const GAUSS_CUT: f64 = 41.5;

/// A real function on ℝⁿ with the metadata needed to truncate integrals.
///
/// Outside the ball of radius `extent` around `center` the function is zero
/// (`compact`) or below e^{-41.5} relative to its scale. When `radial` is set,
/// `eval(v) = radial(|v|²)`.
#[derive(Clone)]
pub struct VelocityFunction {
    n: usize,
    f: EvalFn,
    center: Vec<f64>,
    extent: f64,
    compact: bool,
    radial: Option<RadialProfile>,
    stat_error: f64,
    label: String,
}

impl fmt::Debug for VelocityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VelocityFunction")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("center", &self.center)
            .field("extent", &self.extent)
            .field("compact", &self.compact)
            .field("radial", &self.radial.is_some())
            .finish()
    }
}

impl fmt::Display for VelocityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

impl VelocityFunction {
    pub fn from_fn(
        n: usize,
        label: impl Into<String>,
        center: Vec<f64>,
        extent: f64,
        compact: bool,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension must be >= 2, got {n}")));
        }
        if center.len() != n {
            return Err(Error::Domain(format!(
                "center has {} entries, expected {n}",
                center.len()
            )));
        }
        Ok(VelocityFunction {
            n,
            f: Arc::new(f),
            center,
            extent,
            compact,
            radial: None,
            stat_error: 0.0,
            label: label.into(),
        })
    }

    /// v ↦ profile(|v|²).
    pub fn from_radial(n: usize, profile: RadialProfile) -> Result<Self> {
        let last = profile.breakpoints().last().copied().unwrap_or(0.0);
        let (extent, compact) = match profile.decay() {
            Decay::Compact => (profile.support().sqrt(), true),
            Decay::Gaussian { scale } => ((last + GAUSS_CUT * scale).sqrt(), false),
            Decay::Power { .. } => (f64::INFINITY, false),
        };
        let p = profile.clone();
        let mut f = Self::from_fn(
            n,
            profile.label().to_string(),
            vec![0.0; n],
            extent,
            compact,
            move |v| p.eval(norm2(v)),
        )?;
        f.radial = Some(profile);
        Ok(f)
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::from_radial(n, RadialProfile::zero())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_radial(n, RadialProfile::constant(c))
    }

    /// e^{-a|v|²}.
    pub fn gaussian(n: usize, a: f64) -> Result<Self> {
        let p = RadialProfile::gauss(1.0 / a)?.relabel(format!("gaussian:{a}"));
        Self::from_radial(n, p)
    }

    /// exp(1 - 1/(1 - |v|²/R²)) inside the ball of radius R, 0 outside.
    pub fn bump(n: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("bump radius must be positive, got {radius}")));
        }
        let r2 = radius * radius;
        let p = RadialProfile::from_fn(format!("bump:{radius}"), 0.0, r2, Decay::Compact, vec![], move |x| {
            let t = 1.0 - x / r2;
            if t <= 0.0 {
                0.0
            } else {
                (1.0 - 1.0 / t).exp()
            }
        });
        Self::from_radial(n, p)
    }

    /// v ↦ inner(v - c).
    pub fn shifted(inner: &Self, c: &[f64]) -> Result<Self> {
        if c.len() != inner.n {
            return Err(Error::Domain(format!(
                "shift has {} entries, expected {}",
                c.len(),
                inner.n
            )));
        }
        let cs: Vec<String> = c.iter().map(|x| x.to_string()).collect();
        let label = format!("shifted:{},{}", inner.label, cs.join(","));
        if c.iter().all(|&x| x == 0.0) {
            return Ok(inner.clone().relabel(label));
        }
        let g = inner.f.clone();
        let shift = c.to_vec();
        let center: Vec<f64> = inner.center.iter().zip(c).map(|(a, b)| a + b).collect();
        let n = inner.n;
        Self::from_fn(n, label, center, inner.extent, inner.compact, move |v| {
            let mut w = [0.0; 8];
            if n <= 8 {
                for i in 0..n {
                    w[i] = v[i] - shift[i];
                }
                g(&w[..n])
            } else {
                let w: Vec<f64> = v.iter().zip(&shift).map(|(a, b)| a - b).collect();
                g(&w)
            }
        })
    }

    /// v ↦ v_1 · inner(v).
    pub fn linear_mod(inner: &Self) -> Result<Self> {
        let g = inner.f.clone();
        Self::from_fn(
            inner.n,
            format!("linearmod:{}", inner.label),
            inner.center.clone(),
            inner.extent,
            inner.compact,
            move |v| v[0] * g(v),
        )
    }

    /// v ↦ a · f(v).
    pub fn scaled(&self, a: f64) -> Self {
        let g = self.f.clone();
        let mut out = self.clone();
        out.f = Arc::new(move |v| a * g(v));
        out.radial = self.radial.as_ref().map(|p| p.scale(a));
        out.label = format!("{a}*{}", self.label);
        out
    }

    /// Pointwise product; the support metadata of the more localised factor is kept.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Domain("dimension mismatch in product".into()));
        }
        let (f, g) = (self.f.clone(), other.f.clone());
        let (c, e, k) = if self.reach() <= other.reach() {
            (self.center.clone(), self.extent, self.compact)
        } else {
            (other.center.clone(), other.extent, other.compact)
        };
        Self::from_fn(
            self.n,
            format!("({})*({})", self.label, other.label),
            c,
            e,
            k,
            move |v| f(v) * g(v),
        )
    }

    /// Parses `gaussian:<a>`, `bump:<R>`, `shifted:<inner>,<c1>,..,<cn>` and `linearmod:<inner>`.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let bad = |reason: String| Error::parse("velocity function", spec, reason);
        let (head, rest) = spec
            .split_once(':')
            .ok_or_else(|| bad("expected <kind>:<params>".into()))?;
        let number = |s: &str| parse_real(s.trim()).ok_or_else(|| bad(format!("bad number {s:?}")));
        match head.trim() {
            "gaussian" => Self::gaussian(n, number(rest)?),
            "bump" => Self::bump(n, number(rest)?),
            "linearmod" => Self::linear_mod(&Self::parse(rest, n)?),
            "shifted" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() <= n {
                    return Err(bad(format!("shifted needs an inner function and {n} coordinates")));
                }
                let split = parts.len() - n;
                let c: Vec<f64> = parts[split..].iter().map(|s| number(s)).collect::<Result<_>>()?;
                let inner = Self::parse(&parts[..split].join(","), n)?;
                Self::shifted(&inner, &c)
            }
            "radial" => Self::from_radial(n, RadialProfile::parse(rest, n, 0.0)?),
            other => Err(bad(format!("unknown kind {other:?}"))),
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        (self.f)(v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Radius of a ball about the origin outside which the function vanishes or is negligible.
    pub fn reach(&self) -> f64 {
        norm(&self.center) + self.extent
    }

    pub fn is_compact(&self) -> bool {
        self.compact
    }

    pub fn radial(&self) -> Option<&RadialProfile> {
        self.radial.as_ref()
    }

    pub fn is_radial(&self) -> bool {
        self.radial.is_some()
    }

    /// Relative standard error carried by Monte Carlo constructions; 0 for exact functions.
    pub fn stat_error(&self) -> f64 {
        self.stat_error
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub(crate) fn with_stat_error(mut self, e: f64) -> Self {
        self.stat_error = e;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        let f = VelocityFunction::parse("shifted:bump:1.5,0.5,0,-0.25", 3).unwrap();
        assert_eq!(f.center(), &[0.5, 0.0, -0.25]);
        assert!((f.eval(&[0.5, 0.0, -0.25]) - 1.0).abs() < 1e-15);
        assert_eq!(f.eval(&[2.5, 0.0, 0.0]), 0.0);
        let g = VelocityFunction::parse("linearmod:shifted:gaussian:2,1,1", 2).unwrap();
        assert!((g.eval(&[2.0, 1.0]) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(!g.is_radial());
        assert!(VelocityFunction::parse("gaussian:1", 3).unwrap().is_radial());
        assert!(VelocityFunction::parse("shifted:bump:1,0.5", 3).is_err());
        assert!(VelocityFunction::parse("bump:x", 3).is_err());
    }

    #[test]
    fn radial_consistency() {
        let f = VelocityFunction::bump(3, 1.3).unwrap();
        let p = f.radial().unwrap();
        for v in [[0.1, 0.2, 0.3], [0.9, -0.4, 0.1], [1.0, 1.0, 1.0]] {
            assert_eq!(f.eval(&v), p.eval(norm2(&v)));
        }
    }
}

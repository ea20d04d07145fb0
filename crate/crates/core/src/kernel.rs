//! Angular collision kernels, the measure `dξ_n^b(z) = b(2z-1)[z(1-z)]^{(n-3)/2} dz`
//! on [0, 1], and the beta-type integral
//!
//! ```text
//!     β_b(x, y) = ∫_0^1 z^x (1-z)^y dξ_n^b(z).
//! ```
//!
//! Constant and endpoint-power kernels are handled exactly: the whole
//! endpoint behaviour `z^{x+(n-3)/2-a⁺} (1-z)^{y+(n-3)/2-a⁻}` goes into a
//! Gauss-Jacobi weight. Tabulated kernels are bounded and piecewise linear;
//! their table nodes become quadrature breakpoints.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Estimate, Interval, QuadSpec};
use crate::special::cutoff_factor;

/// Linearly interpolated samples of b on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub s: Vec<f64>,
    pub b: Vec<f64>,
    pub source: Option<PathBuf>,
}

impl KernelTable {
    fn eval(&self, s: f64) -> f64 {
        let i = self.s.partition_point(|&x| x <= s);
        if i == 0 {
            return self.b[0];
        }
        if i >= self.s.len() {
            return *self.b.last().unwrap();
        }
        let (s0, s1) = (self.s[i - 1], self.s[i]);
        let t = (s - s0) / (s1 - s0);
        self.b[i - 1] * (1.0 - t) + self.b[i] * t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    Constant {
        c: f64,
    },
    /// c (1-s)^{-a_minus} (1+s)^{-a_plus}
    Power {
        c: f64,
        a_minus: f64,
        a_plus: f64,
    },
    Table(Arc<KernelTable>),
}

/// The angular factor `b(s)`, `s = û·ω ∈ [-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularKernel {
    form: KernelForm,
}

impl AngularKernel {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!(
                "kernel constant must be finite and >= 0, got {c}"
            )));
        }
        Ok(AngularKernel {
            form: KernelForm::Constant { c },
        })
    }

    pub fn power(c: f64, a_minus: f64, a_plus: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) || !a_minus.is_finite() || !a_plus.is_finite() {
            return Err(Error::Domain(format!(
                "invalid power kernel c={c}, a_minus={a_minus}, a_plus={a_plus}"
            )));
        }
        Ok(AngularKernel {
            form: KernelForm::Power { c, a_minus, a_plus },
        })
    }

    pub fn table(s: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::table_from(s, b, None)
    }

    fn table_from(s: Vec<f64>, b: Vec<f64>, source: Option<PathBuf>) -> Result<Self> {
        if s.len() != b.len() || s.len() < 2 {
            return Err(Error::Domain("kernel table needs at least two (s, b) rows".into()));
        }
        if s[0] != -1.0 || *s.last().unwrap() != 1.0 {
            return Err(Error::Domain("kernel table must span s = -1 to s = 1".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("kernel table abscissae must increase strictly".into()));
        }
        if b.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain("kernel table values must be finite and >= 0".into()));
        }
        Ok(AngularKernel {
            form: KernelForm::Table(Arc::new(KernelTable { s, b, source })),
        })
    }

    /// Reads a two-column CSV `(s, b(s))`; a non-numeric first row is taken as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let io = |e: std::io::Error| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let text = std::fs::read_to_string(path).map_err(io)?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let (mut s, mut b) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            let parsed: Option<(f64, f64)> = (rec.len() >= 2)
                .then(|| Some((rec[0].parse().ok()?, rec[1].parse().ok()?)))
                .flatten();
            match parsed {
                Some((x, y)) => {
                    s.push(x);
                    b.push(y);
                }
                None if i == 0 => continue,
                None => {
                    return Err(Error::Format {
                        path: path.to_path_buf(),
                        message: format!("row {} is not a pair of numbers", i + 1),
                    })
                }
            }
        }
        Self::table_from(s, b, Some(path.to_path_buf()))
    }

    /// Parses `constant:<c>`, `power:<c>,<a_minus>,<a_plus>` or `table:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (head, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::parse("kernel", spec, "expected <kind>:<params>"))?;
        let nums = |n: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = rest
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse("kernel", spec, e.to_string()))?;
            if v.len() != n {
                return Err(Error::parse("kernel", spec, format!("expected {n} numbers")));
            }
            Ok(v)
        };
        match head.trim() {
            "constant" => Self::constant(nums(1)?[0]),
            "power" => {
                let v = nums(3)?;
                Self::power(v[0], v[1], v[2])
            }
            "table" => Self::from_csv(Path::new(rest.trim())),
            other => Err(Error::parse("kernel", spec, format!("unknown kind {other:?}"))),
        }
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    /// b(s); may be infinite at an endpoint of a power kernel.
    pub fn eval(&self, s: f64) -> f64 {
        match &self.form {
            KernelForm::Constant { c } => *c,
            KernelForm::Power { c, a_minus, a_plus } => {
                if *c == 0.0 {
                    return 0.0;
                }
                c * pow0(1.0 - s, -a_minus) * pow0(1.0 + s, -a_plus)
            }
            KernelForm::Table(t) => t.eval(s),
        }
    }

    /// (a⁺ at s = -1, a⁻ at s = +1).
    pub fn endpoint_exponents(&self) -> (f64, f64) {
        match &self.form {
            KernelForm::Power { a_minus, a_plus, .. } => (*a_plus, *a_minus),
            _ => (0.0, 0.0),
        }
    }

    /// b(s) with the endpoint powers divided out: c for constant and power
    /// forms, the interpolant for tables.
    pub fn regular(&self, s: f64) -> f64 {
        match &self.form {
            KernelForm::Constant { c } | KernelForm::Power { c, .. } => *c,
            KernelForm::Table(t) => t.eval(s),
        }
    }

    /// Points in (-1, 1) where `regular` is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.form {
            KernelForm::Table(t) => t.s[1..t.s.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            KernelForm::Constant { c } | KernelForm::Power { c, .. } => *c == 0.0,
            KernelForm::Table(t) => t.b.iter().all(|&v| v == 0.0),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.form, KernelForm::Constant { .. })
    }
}

/// x^e with 0^e = 0 for e > 0, 1 for e = 0 and ∞ for e < 0.
fn pow0(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.max(0.0).powf(e)
    }
}

impl fmt::Display for AngularKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            KernelForm::Constant { c } => write!(f, "constant:{c}"),
            KernelForm::Power { c, a_minus, a_plus } => write!(f, "power:{c},{a_minus},{a_plus}"),
            KernelForm::Table(t) => match &t.source {
                Some(p) => write!(f, "table:{}", p.display()),
                None => write!(f, "table:<{} rows>", t.s.len()),
            },
        }
    }
}

impl Serialize for AngularKernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AngularKernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        AngularKernel::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Outcome of the endpoint-exponent test for `β_b(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Finiteness {
    Finite,
    Divergent,
}

impl fmt::Display for Finiteness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Finiteness::Finite => "Finite",
            Finiteness::Divergent => "Divergent",
        })
    }
}

/// Value of `β_b(x, y)`, or the distinguished divergent outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaResult {
    Finite { value: f64, error_estimate: f64 },
    Divergent,
}

impl BetaResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            BetaResult::Finite { value, .. } => Some(*value),
            BetaResult::Divergent => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, BetaResult::Finite { .. })
    }

    /// Scales a finite value (and its error) by `k`.
    pub fn scaled(self, k: f64) -> Self {
        match self {
            BetaResult::Finite { value, error_estimate } => BetaResult::Finite {
                value: value * k,
                error_estimate: error_estimate * k.abs(),
            },
            d => d,
        }
    }
}

/// The measure `ξ_n^b` on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct XiMeasure {
    pub kernel: AngularKernel,
    pub n: usize,
}

impl XiMeasure {
    pub fn new(kernel: AngularKernel, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension must be >= 2, got {n}")));
        }
        Ok(XiMeasure { kernel, n })
    }

    fn half_exp(&self) -> f64 {
        (self.n as f64 - 3.0) / 2.0
    }

    /// Density b(2z-1) [z(1-z)]^{(n-3)/2} at z ∈ (0, 1).
    pub fn density(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::Domain(format!("xi density needs 0 < z < 1, got {z}")));
        }
        let b = self.kernel.eval(2.0 * z - 1.0);
        if !b.is_finite() {
            return Err(Error::Domain(format!("kernel is infinite at s = {}", 2.0 * z - 1.0)));
        }
        Ok(b * (z * (1.0 - z)).powf(self.half_exp()))
    }

    /// Total exponents of z and (1-z) in `z^x (1-z)^y dξ_n^b(z)`.
    pub fn endpoint_exponents(&self, x: f64, y: f64) -> (f64, f64) {
        let (a_plus, a_minus) = self.kernel.endpoint_exponents();
        let h = self.half_exp();
        (x + h - a_plus, y + h - a_minus)
    }

    /// Finite iff both total endpoint exponents exceed -1.
    pub fn finiteness(&self, x: f64, y: f64) -> Finiteness {
        if self.kernel.is_zero() {
            return Finiteness::Finite;
        }
        let (e0, e1) = self.endpoint_exponents(x, y);
        if e0 > -1.0 && e1 > -1.0 {
            Finiteness::Finite
        } else {
            Finiteness::Divergent
        }
    }

    /// ∫_0^1 z^x (1-z)^y F(z) dξ_n^b(z) for F smooth away from `breakpoints`.
    ///
    /// Fails with [`Error::Divergent`] when the endpoint exponents are not integrable.
    pub fn integrate(
        &self,
        x: f64,
        y: f64,
        breakpoints: &[f64],
        quad: &QuadSpec,
        f: impl Fn(f64) -> f64,
    ) -> Result<Estimate> {
        self.integrate_with(x, y, breakpoints, quad, f, true)
    }

    /// As [`XiMeasure::integrate`] but returns the best estimate on tolerance misses.
    pub fn integrate_lenient(
        &self,
        x: f64,
        y: f64,
        breakpoints: &[f64],
        quad: &QuadSpec,
        f: impl Fn(f64) -> f64,
    ) -> Result<Estimate> {
        self.integrate_with(x, y, breakpoints, quad, f, false)
    }

    fn integrate_with<F>(
        &self,
        x: f64,
        y: f64,
        breakpoints: &[f64],
        quad: &QuadSpec,
        f: F,
        strict: bool,
    ) -> Result<Estimate>
    where
        F: Fn(f64) -> f64,
    {
        if self.kernel.is_zero() {
            return Ok(Estimate::zero());
        }
        if self.finiteness(x, y) == Finiteness::Divergent {
            return Err(Error::Divergent { x, y });
        }
        let (e0, e1) = self.endpoint_exponents(x, y);
        let mut bps: Vec<f64> = breakpoints.to_vec();
        let kinks = self.kernel.kinks();
        bps.extend(kinks.iter().map(|s| 0.5 * (s + 1.0)));
        let iv = Interval::new(0.0, 1.0).weighted(e0, e1).with_breakpoints(bps);
        let (a_plus, a_minus) = self.kernel.endpoint_exponents();
        // b(2z-1) = regular · 2^{-a⁻-a⁺} z^{-a⁺} (1-z)^{-a⁻}
        let scale = 2f64.powf(-a_minus - a_plus);
        let kernel = &self.kernel;
        let g = move |z: f64| {
            let v = f(z);
            if v == 0.0 {
                0.0
            } else {
                v * scale * kernel.regular(2.0 * z - 1.0)
            }
        };
        if strict {
            quad::integrate(quad, &iv, g)
        } else {
            quad::integrate_lenient(quad, &iv, g)
        }
    }

    /// β_b(x, y); `Divergent` exactly when [`XiMeasure::finiteness`] fails.
    pub fn beta(&self, x: f64, y: f64, quad: &QuadSpec) -> Result<BetaResult> {
        if self.finiteness(x, y) == Finiteness::Divergent {
            return Ok(BetaResult::Divergent);
        }
        let e = self.integrate(x, y, &[], quad, |_| 1.0)?;
        Ok(BetaResult::Finite {
            value: e.value,
            error_estimate: e.error,
        })
    }

    /// ∫_{S^{n-1}} b(û·ω) dω = 2^{n-2} |S^{n-2}| β_b(0, 0).
    pub fn grad_cutoff(&self, quad: &QuadSpec) -> Result<BetaResult> {
        Ok(self.beta(0.0, 0.0, quad)?.scaled(cutoff_factor(self.n)))
    }
}

/// Free-function forms of the [`XiMeasure`] operations.
pub fn xi_density(z: f64, m: &XiMeasure) -> Result<f64> {
    m.density(z)
}

pub fn finiteness_check(x: f64, y: f64, m: &XiMeasure) -> Finiteness {
    m.finiteness(x, y)
}

pub fn beta_b(x: f64, y: f64, m: &XiMeasure, quad: &QuadSpec) -> Result<BetaResult> {
    m.beta(x, y, quad)
}

pub fn grad_cutoff(m: &XiMeasure, quad: &QuadSpec) -> Result<BetaResult> {
    m.grad_cutoff(quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn xi(spec: &str, n: usize) -> XiMeasure {
        XiMeasure::new(AngularKernel::parse(spec).unwrap(), n).unwrap()
    }

    #[test]
    fn density_examples() {
        assert_eq!(xi("constant:1", 3).density(0.5).unwrap(), 1.0);
        assert_relative_eq!(
            xi("constant:1", 2).density(0.25).unwrap(),
            2.309_401_076_758_503,
            max_relative = 1e-14
        );
        assert_eq!(xi("power:1,0.5,0", 3).density(0.5).unwrap(), 1.0);
        assert!(xi("constant:1", 3).density(0.0).is_err());
        assert!(xi("constant:1", 3).density(1.2).is_err());
    }

    #[test]
    fn finiteness_examples() {
        assert_eq!(xi("constant:1", 3).finiteness(0.0, 0.0), Finiteness::Finite);
        assert_eq!(xi("power:1,1,0", 3).finiteness(0.0, -0.75), Finiteness::Divergent);
        assert_eq!(xi("constant:1", 2).finiteness(-0.5, -0.5), Finiteness::Divergent);
    }

    #[test]
    fn beta_examples() {
        let q = QuadSpec::default();
        assert_relative_eq!(
            xi("constant:1", 3).beta(0.0, 0.0, &q).unwrap().value().unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            xi("constant:1", 3).beta(-0.5, -0.5, &q).unwrap().value().unwrap(),
            PI,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            xi("constant:1", 2).beta(0.0, 0.0, &q).unwrap().value().unwrap(),
            PI,
            max_relative = 1e-12
        );
        assert_eq!(xi("power:1,2,0", 3).beta(0.0, 0.0, &q).unwrap(), BetaResult::Divergent);
    }

    #[test]
    fn power_kernel_matches_shifted_beta() {
        // b(s) = (1-s)^{-1/4}: β_b(0,0) = 2^{-1/4} B(1, 3/4) = 2^{-1/4} · 4/3
        let q = QuadSpec::default();
        let v = xi("power:1,0.25,0", 3).beta(0.0, 0.0, &q).unwrap().value().unwrap();
        assert_relative_eq!(v, 2f64.powf(-0.25) * 4.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn cutoff_examples() {
        let q = QuadSpec::default();
        let c3 = xi("constant:1", 3).grad_cutoff(&q).unwrap().value().unwrap();
        assert!((c3 - 4.0 * PI).abs() < 1e-12);
        let c2 = xi("constant:1", 2).grad_cutoff(&q).unwrap().value().unwrap();
        assert_relative_eq!(c2, 2.0 * PI, max_relative = 1e-12);
        assert_eq!(xi("power:1,2,0", 3).grad_cutoff(&q).unwrap(), BetaResult::Divergent);
    }

    #[test]
    fn table_kernel_matches_analytic_linear_kernel() {
        // b(s) = 1 + s tabulated on a coarse grid is exact under linear interpolation;
        // β_b(0,0) at n=3 is ∫_0^1 2z dz = 1.
        let s: Vec<f64> = (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect();
        let b: Vec<f64> = s.iter().map(|x| 1.0 + x).collect();
        let m = XiMeasure::new(AngularKernel::table(s, b).unwrap(), 3).unwrap();
        let v = m.beta(0.0, 0.0, &QuadSpec::default()).unwrap().value().unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        // with the n = 2 weight: ∫ 2z [z(1-z)]^{-1/2} dz = π
        let m2 = XiMeasure::new(m.kernel.clone(), 2).unwrap();
        let v2 = m2.beta(0.0, 0.0, &QuadSpec::default()).unwrap().value().unwrap();
        assert_relative_eq!(v2, PI, max_relative = 1e-11);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(AngularKernel::parse("constant").is_err());
        assert!(AngularKernel::parse("power:1,2").is_err());
        assert!(AngularKernel::parse("constant:-1").is_err());
        assert!(AngularKernel::parse("cosine:1").is_err());
        assert!(AngularKernel::table(vec![-1.0, 0.5], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["constant:1", "power:2,0.25,-0.5"] {
            let k = AngularKernel::parse(s).unwrap();
            assert_eq!(AngularKernel::parse(&k.to_string()).unwrap(), k);
        }
    }

    #[test]
    fn reads_csv_table_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        std::fs::write(&p, "s,b\n-1,2\n0,2\n1,2\n").unwrap();
        let k = AngularKernel::parse(&format!("table:{}", p.display())).unwrap();
        assert_eq!(k.eval(0.3), 2.0);
        assert_eq!(k.endpoint_exponents(), (0.0, 0.0));
    }
}

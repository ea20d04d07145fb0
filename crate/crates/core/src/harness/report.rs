use serde::{Deserialize, Serialize};

/// Seeds and discretisation sizes behind a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub quad_order: usize,
    pub rotations: Option<usize>,
    pub grid: Option<String>,
}

/// Outcome of checking `lhs ≤ constant · Π norms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub n: usize,
    #[serde(with = "float_repr")]
    pub p: f64,
    #[serde(with = "float_repr")]
    pub q: f64,
    #[serde(with = "float_repr")]
    pub r: f64,
    #[serde(with = "float_repr")]
    pub alpha: f64,
    #[serde(with = "float_repr")]
    pub lambda: f64,
    pub kernel: String,
    pub inputs: String,
    #[serde(with = "float_repr")]
    pub lhs: f64,
    #[serde(with = "float_repr")]
    pub constant: f64,
    #[serde(with = "norms_repr")]
    pub norms: Vec<(String, f64)>,
    #[serde(with = "float_repr")]
    pub rhs: f64,
    #[serde(with = "float_repr")]
    pub ratio: f64,
    #[serde(with = "float_repr")]
    pub tolerance: f64,
    #[serde(with = "float_repr")]
    pub mc_margin: f64,
    pub pass: bool,
    pub provenance: Provenance,
}

fn ratio_of(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

impl InequalityReport {
    /// Report for `lhs ≤ constant · Π norms`.
    pub fn new(name: &str, lhs: f64, constant: f64, norms: Vec<(String, f64)>, tolerance: f64, mc_margin: f64) -> Self {
        let rhs = norms.iter().fold(constant, |acc, (_, v)| acc * v);
        let ratio = ratio_of(lhs, rhs);
        InequalityReport {
            name: name.to_string(),
            n: 0,
            p: f64::NAN,
            q: f64::NAN,
            r: f64::NAN,
            alpha: 0.0,
            lambda: 0.0,
            kernel: String::new(),
            inputs: String::new(),
            lhs,
            constant,
            norms,
            rhs,
            ratio,
            tolerance,
            mc_margin,
            pass: ratio <= 1.0 + tolerance + mc_margin,
            provenance: Provenance::default(),
        }
    }

    /// Report for an identity `lhs = rhs`; the ratio is max(lhs/rhs, rhs/lhs).
    pub fn identity(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let mut rep = Self::new(name, lhs, 1.0, vec![("rhs".into(), rhs)], tolerance, 0.0);
        let (a, b) = (ratio_of(lhs, rhs), ratio_of(rhs, lhs));
        rep.ratio = if lhs == 0.0 && rhs == 0.0 { 1.0 } else { a.max(b) };
        if lhs.signum() != rhs.signum() && lhs != 0.0 && rhs != 0.0 {
            rep.ratio = f64::INFINITY;
        }
        rep.pass = rep.ratio <= 1.0 + tolerance;
        rep
    }

    pub fn with_setting(mut self, n: usize, (p, q, r): (f64, f64, f64), alpha: f64, lambda: f64, kernel: &str) -> Self {
        self.n = n;
        self.p = p;
        self.q = q;
        self.r = r;
        self.alpha = alpha;
        self.lambda = lambda;
        self.kernel = kernel.to_string();
        self
    }

    pub fn with_inputs(mut self, inputs: &str) -> Self {
        self.inputs = inputs.to_string();
        self
    }

    pub fn with_quad_order(mut self, order: usize) -> Self {
        self.provenance.quad_order = order;
        self
    }

    pub fn with_seed(mut self, seed: u64, rotations: usize) -> Self {
        self.provenance.seed = Some(seed);
        self.provenance.rotations = Some(rotations);
        self
    }

    pub fn with_grid(mut self, grid: String) -> Self {
        self.provenance.grid = Some(grid);
        self
    }
}

/// Shortest round-trip decimal; exponent notation outside [1e-5, 1e16).
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_float(s: &str) -> Option<f64> {
    match s {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// Finite floats as JSON numbers, non-finite ones as strings.
pub(crate) mod float_repr {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::format_float(*x))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => super::parse_float(&s).ok_or_else(|| D::Error::custom(format!("bad float {s:?}"))),
        }
    }
}

mod norms_repr {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        label: String,
        #[serde(with = "super::float_repr")]
        value: f64,
    }

    pub fn serialize<S: Serializer>(v: &[(String, f64)], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for (label, value) in v {
            seq.serialize_element(&Entry {
                label: label.clone(),
                value: *value,
            })?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, f64)>, D::Error> {
        Ok(Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| (e.label, e.value))
            .collect())
    }
}

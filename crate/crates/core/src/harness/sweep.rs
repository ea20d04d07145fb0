use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::{theorem2_check, CollisionKernel};
use crate::kernel::{AngularKernel, XiMeasure};
use crate::par;
use crate::quad::QuadSpec;
use crate::radial::{extremizer_pair, lemma23_check, ExponentTriple, RadialProfile, SigmaMeasure};
use crate::spherical::{
    lemma21_pairing, lemma22_check, theorem1_check, NuMeasure, RotationSampler, SphereRule, VelocityFunction,
    DEFAULT_ROTATIONS,
};

use super::report::{format_float, InequalityReport};

/// Which inequality a sweep certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Lemma21,
    Lemma22,
    Lemma23,
    Sharpness,
    Theorem1,
    Theorem2,
}

/// Partial quadrature settings; unset fields keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadOverride {
    pub order: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_panels: Option<usize>,
    pub sphere_order: Option<usize>,
}

/// Quadrature override applied to every cell matching all given fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellOverride {
    pub kernel: Option<String>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub quadrature: QuadOverride,
}

fn default_n() -> Vec<usize> {
    vec![3]
}

fn default_kernels() -> Vec<String> {
    vec!["constant:1".into()]
}

fn default_zero() -> Vec<f64> {
    vec![0.0]
}

fn default_rotations() -> usize {
    DEFAULT_ROTATIONS
}

fn default_sphere_order() -> usize {
    8
}

fn default_tolerance() -> f64 {
    1e-4
}

/// A grid of cells: the product of all axes relevant to `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
    #[serde(default = "default_n")]
    pub n: Vec<usize>,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<String>,
    /// `[p, q]` or, for lemma22, `[p, q, r]`; "inf" is accepted.
    #[serde(default)]
    pub triples: Vec<Vec<FloatSpec>>,
    #[serde(default = "default_zero")]
    pub alpha: Vec<f64>,
    #[serde(default = "default_zero")]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Input function specs per cell: pairs, or triples for lemma21/lemma22.
    #[serde(default)]
    pub inputs: Vec<Vec<String>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rotations")]
    pub rotations: usize,
    #[serde(default)]
    pub quadrature: QuadOverride,
    #[serde(default = "default_sphere_order")]
    pub sphere_order: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub overrides: Vec<CellOverride>,
}

/// A number that may be written as a JSON number or as "inf".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FloatSpec {
    Num(f64),
    Text(String),
}

impl FloatSpec {
    fn value(&self) -> Result<f64> {
        match self {
            FloatSpec::Num(x) => Ok(*x),
            FloatSpec::Text(s) => {
                crate::radial::parse_real(s).ok_or_else(|| Error::parse("exponent", s, "expected a number or \"inf\""))
            }
        }
    }
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn is_empty(&self) -> bool {
        self.n.is_empty() || self.kernels.is_empty()
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub kernel: String,
    pub exponents: Vec<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub eps: Option<f64>,
    pub inputs: Vec<String>,
}

impl Cell {
    pub fn describe(&self) -> String {
        let exps: Vec<String> = self.exponents.iter().map(|&x| format_float(x)).collect();
        let mut s = format!(
            "n={} kernel={} exponents=({}) alpha={} lambda={}",
            self.n,
            self.kernel,
            exps.join(","),
            format_float(self.alpha),
            format_float(self.lambda)
        );
        if let Some(e) = self.eps {
            s.push_str(&format!(" eps={}", format_float(e)));
        }
        if !self.inputs.is_empty() {
            s.push_str(&format!(" inputs={}", self.inputs.join(";")));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub cell: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub cell: String,
    pub error: String,
    pub numerical: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub reports: Vec<InequalityReport>,
    pub skipped: Vec<SkippedCell>,
    pub failed: Vec<FailedCell>,
}

impl SweepResult {
    pub fn all_pass(&self) -> bool {
        self.failed.is_empty() && self.reports.iter().all(|r| r.pass)
    }
}

enum Outcome {
    Report(InequalityReport),
    Skipped(String),
    Failed(Error),
}

fn axis<T: Clone>(xs: &[T]) -> Vec<Option<T>> {
    if xs.is_empty() {
        vec![None]
    } else {
        xs.iter().cloned().map(Some).collect()
    }
}

/// Cells in a fixed nesting order: n, kernel, exponents, α, λ, ε, inputs.
pub fn expand(spec: &SweepSpec) -> Result<Vec<Cell>> {
    if spec.is_empty() {
        return Ok(vec![]);
    }
    let triples: Vec<Vec<f64>> = spec
        .triples
        .iter()
        .map(|t| t.iter().map(FloatSpec::value).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let uses_eps = spec.kind == SweepKind::Sharpness;
    let uses_inputs = spec.kind != SweepKind::Sharpness;
    let uses_alpha = matches!(
        spec.kind,
        SweepKind::Theorem1 | SweepKind::Lemma23 | SweepKind::Sharpness
    );
    let uses_lambda = spec.kind == SweepKind::Theorem2;
    let uses_triples = spec.kind != SweepKind::Lemma21;
    // an axis left empty means there is nothing to run
    if (uses_triples && triples.is_empty())
        || (uses_eps && spec.eps.is_empty())
        || (uses_inputs && spec.inputs.is_empty())
    {
        return Ok(vec![]);
    }
    let want_inputs = if matches!(spec.kind, SweepKind::Lemma21 | SweepKind::Lemma22) {
        3
    } else {
        2
    };
    for (i, inp) in spec.inputs.iter().enumerate() {
        if inp.len() != want_inputs {
            return Err(Error::Config(format!(
                "inputs[{i}] has {} entries, {:?} needs {want_inputs}",
                inp.len(),
                spec.kind
            )));
        }
    }
    let want_exps = if spec.kind == SweepKind::Lemma22 { 3 } else { 2 };
    for (i, t) in triples.iter().enumerate() {
        if t.len() != want_exps {
            return Err(Error::Config(format!(
                "triples[{i}] has {} entries, {:?} needs {want_exps}",
                t.len(),
                spec.kind
            )));
        }
    }
    let trip_axis = if uses_triples { axis(&triples) } else { vec![None] };
    let alpha_axis = if uses_alpha { axis(&spec.alpha) } else { vec![None] };
    let lambda_axis = if uses_lambda { axis(&spec.lambda) } else { vec![None] };
    let eps_axis = if uses_eps { axis(&spec.eps) } else { vec![None] };
    let input_axis = if uses_inputs { axis(&spec.inputs) } else { vec![None] };
    let mut cells = Vec::new();
    for &n in &spec.n {
        for kernel in &spec.kernels {
            for t in &trip_axis {
                for a in &alpha_axis {
                    for l in &lambda_axis {
                        for e in &eps_axis {
                            for inp in &input_axis {
                                cells.push(Cell {
                                    index: cells.len(),
                                    n,
                                    kernel: kernel.clone(),
                                    exponents: t.clone().unwrap_or_default(),
                                    alpha: a.unwrap_or(0.0),
                                    lambda: l.unwrap_or(0.0),
                                    eps: *e,
                                    inputs: inp.clone().unwrap_or_default(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn apply(base: &mut (QuadSpec, usize), o: &QuadOverride) {
    if let Some(x) = o.order {
        base.0.order = x;
    }
    if let Some(x) = o.rel_tol {
        base.0.rel_tol = x;
    }
    if let Some(x) = o.abs_tol {
        base.0.abs_tol = x;
    }
    if let Some(x) = o.max_panels {
        base.0.max_panels = x;
    }
    if let Some(x) = o.sphere_order {
        base.1 = x;
    }
}

fn settings(spec: &SweepSpec, cell: &Cell) -> (QuadSpec, usize) {
    let mut s = (QuadSpec::default(), spec.sphere_order);
    apply(&mut s, &spec.quadrature);
    let matches = |o: &CellOverride| {
        o.kernel.as_ref().is_none_or(|k| *k == cell.kernel)
            && o.n.is_none_or(|n| n == cell.n)
            && o.p.is_none_or(|p| cell.exponents.first() == Some(&p))
            && o.q.is_none_or(|q| cell.exponents.get(1) == Some(&q))
            && o.alpha.is_none_or(|a| a == cell.alpha)
            && o.lambda.is_none_or(|l| l == cell.lambda)
    };
    for o in spec.overrides.iter().filter(|o| matches(o)) {
        apply(&mut s, &o.quadrature);
    }
    s
}

// a cell whose exponents violate the relation is outside the statement, not a failure
fn relation(e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Precondition(msg),
        other => other,
    }
}

fn run_cell(spec: &SweepSpec, cell: &Cell) -> Result<InequalityReport> {
    let (quad, sphere_order) = settings(spec, cell);
    let n = cell.n;
    let kern = AngularKernel::parse(&cell.kernel)?;
    let vel = |i: usize| VelocityFunction::parse(&cell.inputs[i], n);
    let tol = spec.tolerance;
    let exps = &cell.exponents;
    match spec.kind {
        SweepKind::Lemma21 => {
            let rule = SphereRule::new(n, sphere_order)?;
            let (f, g, h) = (vel(0)?, vel(1)?, vel(2)?);
            let (l, r) = lemma21_pairing(&f, &g, &h, &kern, &rule, &quad)?;
            Ok(InequalityReport::identity("lemma21", l, r, tol)
                .with_setting(n, (f64::NAN, f64::NAN, f64::NAN), 0.0, 0.0, &kern.to_string())
                .with_inputs(&cell.inputs.join(";"))
                .with_quad_order(quad.order))
        }
        SweepKind::Lemma22 => {
            let rule = SphereRule::new(n, sphere_order)?;
            let sampler = RotationSampler::new(spec.rotations, spec.seed.wrapping_add(cell.index as u64))?;
            let (f, g, h) = (vel(0)?, vel(1)?, vel(2)?);
            lemma22_check(
                &f,
                &g,
                &h,
                (exps[0], exps[1], exps[2]),
                &kern,
                &rule,
                &sampler,
                &quad,
                tol,
            )
        }
        SweepKind::Lemma23 => {
            let e = ExponentTriple::holder(exps[0], exps[1]).map_err(relation)?;
            let m = XiMeasure::new(kern, n)?;
            let sm = SigmaMeasure::new(n, cell.alpha)?;
            let g = RadialProfile::parse(&cell.inputs[0], n, cell.alpha)?;
            let h = RadialProfile::parse(&cell.inputs[1], n, cell.alpha)?;
            lemma23_check(&g, &h, &e, &m, &sm, &quad, tol)
        }
        SweepKind::Sharpness => {
            let eps = cell.eps.expect("sharpness cells carry eps");
            let e = ExponentTriple::holder(exps[0], exps[1]).map_err(relation)?;
            let m = XiMeasure::new(kern, n)?;
            let sm = SigmaMeasure::new(n, cell.alpha)?;
            let (g, h) = extremizer_pair(eps, e.p, e.q, n, cell.alpha)?;
            let mut rep = lemma23_check(&g, &h, &e, &m, &sm, &quad, tol)?;
            rep.name = "sharpness".into();
            Ok(rep.with_inputs(&format!("extremizer:{}", format_float(eps))))
        }
        SweepKind::Theorem1 => {
            let e = ExponentTriple::holder(exps[0], exps[1]).map_err(relation)?;
            let rule = SphereRule::new(n, sphere_order)?;
            let m = NuMeasure::new(n, cell.alpha)?;
            theorem1_check(&vel(0)?, &vel(1)?, &e, &m, &kern, &rule, &quad, tol)
        }
        SweepKind::Theorem2 => {
            let e = ExponentTriple::young(exps[0], exps[1]).map_err(relation)?;
            let rule = SphereRule::new(n, sphere_order)?;
            let ck = CollisionKernel::new(cell.lambda, kern)?;
            theorem2_check(&vel(0)?, &vel(1)?, &e, &ck, &rule, &quad, tol)
        }
    }
}

/// Every cell of `spec`, evaluated in parallel and collected in cell order.
///
/// Cells whose constant diverges or whose preconditions fail are skipped;
/// other errors are collected as failures without stopping the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let cells = expand(spec)?;
    let outcomes = par::map(&cells, |cell| match run_cell(spec, cell) {
        Ok(rep) => Outcome::Report(rep),
        Err(Error::Divergent { .. }) => Outcome::Skipped("divergent beta".into()),
        Err(Error::Precondition(msg)) => Outcome::Skipped(msg),
        Err(e) => Outcome::Failed(e),
    });
    let mut out = SweepResult::default();
    for (cell, o) in cells.iter().zip(outcomes) {
        match o {
            Outcome::Report(r) => out.reports.push(r),
            Outcome::Skipped(reason) => out.skipped.push(SkippedCell {
                cell: cell.describe(),
                reason,
            }),
            Outcome::Failed(e) => out.failed.push(FailedCell {
                cell: cell.describe(),
                numerical: e.is_numerical(),
                error: e.to_string(),
            }),
        }
    }
    Ok(out)
}

pub const CSV_COLUMNS: [&str; 17] = [
    "name",
    "n",
    "p",
    "q",
    "r",
    "alpha",
    "lambda",
    "kernel",
    "lhs",
    "constant",
    "rhs",
    "ratio",
    "tolerance",
    "mc_margin",
    "pass",
    "seed",
    "quad_order",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::parse("format", s, "expected csv or json")),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format {
        path: "<csv>".into(),
        message: e.to_string(),
    }
}

/// One header row and one row per report; skipped and failed cells only appear in JSON.
pub fn write_csv<W: Write>(reports: &[InequalityReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in reports {
        let f = format_float;
        w.write_record([
            r.name.clone(),
            r.n.to_string(),
            f(r.p),
            f(r.q),
            f(r.r),
            f(r.alpha),
            f(r.lambda),
            r.kernel.clone(),
            f(r.lhs),
            f(r.constant),
            f(r.rhs),
            f(r.ratio),
            f(r.tolerance),
            f(r.mc_margin),
            r.pass.to_string(),
            r.provenance.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.provenance.quad_order.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

pub fn write_json<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    let text = serde_json::to_string_pretty(result).map_err(|e| Error::Format {
        path: "<json>".into(),
        message: e.to_string(),
    })?;
    writeln!(out, "{text}").map_err(|source| Error::Io {
        path: "<output>".into(),
        source,
    })
}

pub fn render(result: &SweepResult, format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_csv(&result.reports, &mut buf)?,
        Format::Json => write_json(result, &mut buf)?,
    }
    Ok(buf)
}

/// Writes `result` to `path`.
pub fn emit(result: &SweepResult, format: Format, path: &Path) -> Result<()> {
    let bytes = render(result, format)?;
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

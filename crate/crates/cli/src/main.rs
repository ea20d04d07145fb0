use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bgain::gain::{
    default_half_width, lambda_norm, q0_plus_bobylev, q_minus, q_plus_carleman, q_plus_direct, theorem2_check,
    CollisionKernel, GridFunction, LambdaNormSpec, DEFAULT_ALIASING_TOL, DEFAULT_POINTS,
};
use bgain::harness::{format_float, render, run_sweep, write_csv, Format, InequalityReport, SweepSpec};
use bgain::kernel::{AngularKernel, BetaResult, XiMeasure};
use bgain::quad::QuadSpec;
use bgain::radial::{
    bilinear_b, lemma23_check, parse_real, sharpness_study, ExponentTriple, RadialProfile, SigmaMeasure,
    DEFAULT_EPS_SCHEDULE,
};
use bgain::spherical::{
    lemma21_pairing, lemma22_check, operator_p, theorem1_check, weighted_lp_norm, NuMeasure, RotationSampler,
    SphereRule, VelocityFunction, DEFAULT_ROTATIONS,
};
use bgain::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bgain", version, about = "Gain-operator numerics and inequality checks")]
struct Cli {
    /// Worker threads (falls back to BG_THREADS)
    #[arg(long, global = true, env = "BG_THREADS")]
    threads: Option<usize>,
    /// Output format for reports and values
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: Format,
    /// Seed for Monte Carlo symmetrization
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Setting {
    /// Angular kernel: constant:<c>, power:<c>,<a_minus>,<a_plus> or table:<path>
    #[arg(long, default_value = "constant:1")]
    kernel: String,
    /// Dimension
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Gauss order per panel
    #[arg(long, default_value_t = 16)]
    order: usize,
    /// Relative tolerance of adaptive quadrature
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
    /// Order of the sphere rules
    #[arg(long, default_value_t = 10)]
    sphere_order: usize,
}

impl Setting {
    fn kernel(&self) -> Result<AngularKernel, Error> {
        AngularKernel::parse(&self.kernel)
    }

    fn quad(&self) -> QuadSpec {
        QuadSpec::default().with_order(self.order).with_rel_tol(self.rel_tol)
    }

    fn rule(&self) -> Result<SphereRule, Error> {
        SphereRule::new(self.n, self.sphere_order)
    }

    fn xi(&self) -> Result<XiMeasure, Error> {
        XiMeasure::new(self.kernel()?, self.n)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Direct,
    Carleman,
    Bobylev,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Check {
    Lemma21,
    Lemma22,
    Lemma23,
    Thm1,
    Thm2,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// β_b(x, y) and its finiteness
    Beta {
        #[command(flatten)]
        s: Setting,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
    },
    /// ∫ b dω over the sphere
    Cutoff {
        #[command(flatten)]
        s: Setting,
    },
    /// The radial operator ℬ(g, h)(x) on profiles
    OpB {
        #[command(flatten)]
        s: Setting,
        #[arg(long)]
        g: String,
        #[arg(long)]
        h: String,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// The sphere operator 𝒫(g, h)(k)
    OpP {
        #[command(flatten)]
        s: Setting,
        #[arg(long)]
        g: String,
        #[arg(long)]
        h: String,
        /// Comma-separated point
        #[arg(long, allow_hyphen_values = true)]
        k: String,
    },
    /// Q⁺(g, h)(v), with Q⁻(g, h)(v) for comparison
    Qplus {
        #[command(flatten)]
        s: Setting,
        #[arg(long, value_enum, default_value = "direct")]
        method: Method,
        #[arg(long)]
        g: String,
        /// Second input; defaults to g (required to equal g for bobylev)
        #[arg(long)]
        h: Option<String>,
        /// Comma-separated velocity
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Grid points per axis (bobylev)
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        /// Grid half width (bobylev); chosen from the input by default
        #[arg(long)]
        half_width: Option<f64>,
        /// Write the bobylev grid here (.csv for CSV, binary otherwise)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// ‖f‖ in L^p(|k|^α dk), or in L^p_λ when --lambda is given
    Norm {
        #[command(flatten)]
        s: Setting,
        #[arg(long)]
        f: String,
        #[arg(long, value_parser = parse_exponent)]
        p: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Certify one inequality or identity
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[command(flatten)]
        s: Setting,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        h: Option<String>,
        #[arg(long, value_parser = parse_exponent)]
        p: Option<f64>,
        #[arg(long, value_parser = parse_exponent)]
        q: Option<f64>,
        #[arg(long, value_parser = parse_exponent)]
        r: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_ROTATIONS)]
        rotations: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Extremizer ratios against the sharp constant over an ε schedule
    Sharpness {
        #[command(flatten)]
        s: Setting,
        #[arg(long, value_parser = parse_exponent, default_value = "2")]
        p: f64,
        #[arg(long, value_parser = parse_exponent, default_value = "2")]
        q: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        /// Comma-separated ε values
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
    /// Run a JSON sweep configuration
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Destination file; standard output by default
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse::<Format>().map_err(|e| e.to_string())
}

fn parse_exponent(s: &str) -> Result<f64, String> {
    parse_real(s).ok_or_else(|| format!("expected a number or inf, got {s:?}"))
}

fn parse_point(s: &str, n: usize) -> Result<Vec<f64>, Error> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Config(format!("cannot parse point {s:?}: {e}")))?;
    if v.len() != n {
        return Err(Error::Config(format!(
            "point {s:?} has {} entries, expected {n}",
            v.len()
        )));
    }
    Ok(v)
}

fn need<'a>(x: &'a Option<String>, name: &str) -> Result<&'a str, Error> {
    x.as_deref()
        .ok_or_else(|| Error::Config(format!("--{name} is required for this check")))
}

fn need_num(x: Option<f64>, name: &str) -> Result<f64, Error> {
    x.ok_or_else(|| Error::Config(format!("--{name} is required for this check")))
}

/// Scalar results as `quantity,value` rows or a JSON object.
fn print_values(format: Format, rows: &[(&str, String)]) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    let text = match format {
        Format::Csv => {
            let mut s = String::from("quantity,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = rows
                .iter()
                .map(|(k, v)| {
                    let value = match v.parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                        Some(x) => serde_json::Value::Number(x),
                        None => serde_json::Value::String(v.clone()),
                    };
                    (k.to_string(), value)
                })
                .collect();
            format!("{}\n", serde_json::Value::Object(map))
        }
    };
    out.write_all(text.as_bytes()).map_err(stdout_error)
}

fn stdout_error(source: io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source,
    }
}

fn print_report(format: Format, rep: &InequalityReport) -> Result<bool, Error> {
    let mut out = io::stdout().lock();
    match format {
        Format::Csv => write_csv(std::slice::from_ref(rep), &mut out)?,
        Format::Json => {
            let text = serde_json::to_string_pretty(rep).map_err(|e| Error::Config(e.to_string()))?;
            writeln!(out, "{text}").map_err(stdout_error)?;
        }
    }
    Ok(rep.pass)
}

fn run(cli: Cli) -> Result<u8, Error> {
    let format = cli.format;
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Beta { s, x, y } => {
            let m = s.xi()?;
            let finiteness = m.finiteness(x, y);
            let mut rows = vec![];
            match m.beta(x, y, &s.quad())? {
                BetaResult::Finite { value, error_estimate } => {
                    rows.push(("beta", format_float(value)));
                    rows.push(("error_estimate", format_float(error_estimate)));
                }
                BetaResult::Divergent => rows.push(("beta", "divergent".into())),
            }
            rows.push(("finiteness", finiteness.to_string()));
            print_values(format, &rows)?;
            Ok(PASS)
        }
        Command::Cutoff { s } => {
            let value = s.xi()?.grad_cutoff(&s.quad())?;
            let text = value.value().map(format_float).unwrap_or_else(|| "divergent".into());
            print_values(format, &[("cutoff", text)])?;
            Ok(verdict(value.is_finite()))
        }
        Command::OpB { s, g, h, x, alpha } => {
            let g = RadialProfile::parse(&g, s.n, alpha)?;
            let h = RadialProfile::parse(&h, s.n, alpha)?;
            let value = bilinear_b(&g, &h, x, &s.xi()?, &s.quad())?;
            print_values(format, &[("B", format_float(value))])?;
            Ok(PASS)
        }
        Command::OpP { s, g, h, k } => {
            let g = VelocityFunction::parse(&g, s.n)?;
            let h = VelocityFunction::parse(&h, s.n)?;
            let k = parse_point(&k, s.n)?;
            let value = operator_p(&g, &h, &k, &s.kernel()?, &s.rule()?)?;
            print_values(format, &[("P", format_float(value))])?;
            Ok(PASS)
        }
        Command::Qplus {
            s,
            method,
            g,
            h,
            v,
            lambda,
            points,
            half_width,
            output,
        } => {
            let n = s.n;
            let v = parse_point(&v, n)?;
            let hs = h.unwrap_or_else(|| g.clone());
            let (gf, hf) = (VelocityFunction::parse(&g, n)?, VelocityFunction::parse(&hs, n)?);
            let ck = CollisionKernel::new(lambda, s.kernel()?)?;
            let quad = s.quad();
            let mut rows = vec![];
            let value = match method {
                Method::Direct => q_plus_direct(&gf, &hf, &v, &ck, &s.rule()?, &quad)?,
                Method::Carleman => q_plus_carleman(&gf, &hf, &v, &ck, &s.rule()?, &quad)?,
                Method::Bobylev => {
                    if hs != g {
                        return Err(Error::Config("the bobylev method evaluates Q⁺(f, f); drop --h".into()));
                    }
                    if lambda != 0.0 {
                        return Err(Error::Config("the bobylev method needs --lambda 0".into()));
                    }
                    let l = match half_width {
                        Some(l) => l,
                        None => default_half_width(&gf)?,
                    };
                    let grid = GridFunction::sample(&gf, points, l)?;
                    grid.check_aliasing(DEFAULT_ALIASING_TOL)?;
                    let out = q0_plus_bobylev(&grid, &ck.angular, &s.rule()?)?;
                    if let Some(path) = &output {
                        if path.extension().is_some_and(|e| e == "csv") {
                            let file = std::fs::File::create(path).map_err(|source| Error::Io {
                                path: path.clone(),
                                source,
                            })?;
                            out.write_csv(file)?;
                        } else {
                            out.write_binary(path)?;
                        }
                    }
                    // nearest grid node to v
                    let h = out.spacing();
                    let idx: Vec<usize> = v
                        .iter()
                        .map(|x| (((x + l) / h).round().max(0.0) as usize).min(points - 1))
                        .collect();
                    let flat = out.index(&idx);
                    let node = out.node(flat);
                    let node: Vec<String> = node.iter().map(|x| format_float(*x)).collect();
                    rows.push(("node", node.join(" ")));
                    out.values[flat]
                }
            };
            rows.insert(0, ("Q+", format_float(value)));
            if !matches!(method, Method::Bobylev) {
                rows.push(("Q-", format_float(q_minus(&gf, &hf, &v, &ck, &quad)?)));
            }
            print_values(format, &rows)?;
            Ok(PASS)
        }
        Command::Norm { s, f, p, alpha, lambda } => {
            let f = VelocityFunction::parse(&f, s.n)?;
            let value = match lambda {
                Some(l) => lambda_norm(&f, &LambdaNormSpec::new(p, l)?, &s.quad())?,
                None => weighted_lp_norm(&f, p, &NuMeasure::new(s.n, alpha)?, &s.quad())?,
            };
            print_values(format, &[("norm", format_float(value))])?;
            Ok(PASS)
        }
        Command::Verify {
            check,
            s,
            f,
            g,
            h,
            p,
            q,
            r,
            alpha,
            lambda,
            rotations,
            tolerance,
        } => {
            let n = s.n;
            let quad = s.quad();
            let vel = |x: &Option<String>, name: &str| VelocityFunction::parse(need(x, name)?, n);
            let rep = match check {
                Check::Lemma21 => {
                    let (ff, gf, hf) = (vel(&f, "f")?, vel(&g, "g")?, vel(&h, "h")?);
                    let (l, rr) = lemma21_pairing(&ff, &gf, &hf, &s.kernel()?, &s.rule()?, &quad)?;
                    InequalityReport::identity("lemma21", l, rr, tolerance)
                        .with_setting(n, (f64::NAN, f64::NAN, f64::NAN), 0.0, 0.0, &s.kernel()?.to_string())
                        .with_inputs(&format!("{};{};{}", ff.label(), gf.label(), hf.label()))
                        .with_quad_order(quad.order)
                }
                Check::Lemma22 => {
                    let e = (need_num(p, "p")?, need_num(q, "q")?, need_num(r, "r")?);
                    let sampler = RotationSampler::new(rotations, seed)?;
                    let (ff, gf, hf) = (vel(&f, "f")?, vel(&g, "g")?, vel(&h, "h")?);
                    lemma22_check(&ff, &gf, &hf, e, &s.kernel()?, &s.rule()?, &sampler, &quad, tolerance)?
                }
                Check::Lemma23 => {
                    let e = ExponentTriple::holder(need_num(p, "p")?, need_num(q, "q")?)?;
                    let gp = RadialProfile::parse(need(&g, "g")?, n, alpha)?;
                    let hp = RadialProfile::parse(need(&h, "h")?, n, alpha)?;
                    lemma23_check(&gp, &hp, &e, &s.xi()?, &SigmaMeasure::new(n, alpha)?, &quad, tolerance)?
                }
                Check::Thm1 => {
                    let e = ExponentTriple::holder(need_num(p, "p")?, need_num(q, "q")?)?;
                    let m = NuMeasure::new(n, alpha)?;
                    theorem1_check(
                        &vel(&g, "g")?,
                        &vel(&h, "h")?,
                        &e,
                        &m,
                        &s.kernel()?,
                        &s.rule()?,
                        &quad,
                        tolerance,
                    )?
                }
                Check::Thm2 => {
                    let e = ExponentTriple::young(need_num(p, "p")?, need_num(q, "q")?)?;
                    if let Some(r) = r {
                        if r != e.r {
                            return Err(Error::Config(format!(
                                "1/p + 1/q = 1 + 1/r gives r = {}, not {r}",
                                format_float(e.r)
                            )));
                        }
                    }
                    let ck = CollisionKernel::new(lambda, s.kernel()?)?;
                    theorem2_check(&vel(&g, "g")?, &vel(&h, "h")?, &e, &ck, &s.rule()?, &quad, tolerance)?
                }
            };
            print_report(format, &rep).map(verdict)
        }
        Command::Sharpness { s, p, q, alpha, eps } => {
            let e = ExponentTriple::holder(p, q)?;
            let eps = if eps.is_empty() {
                DEFAULT_EPS_SCHEDULE.to_vec()
            } else {
                eps
            };
            let table = sharpness_study(&e, &s.xi()?, &SigmaMeasure::new(s.n, alpha)?, &eps, &s.quad())?;
            let mut out = io::stdout().lock();
            match format {
                Format::Csv => {
                    writeln!(out, "eps,norm,beta_eps,ratio,sharp_constant,lower_ok,upper_ok").map_err(stdout_error)?;
                    for row in &table.rows {
                        writeln!(
                            out,
                            "{},{},{},{},{},{},{}",
                            format_float(row.eps),
                            format_float(row.norm),
                            format_float(row.beta_eps),
                            format_float(row.ratio),
                            format_float(table.sharp_constant),
                            row.lower_ok,
                            row.upper_ok
                        )
                        .map_err(stdout_error)?;
                    }
                }
                Format::Json => {
                    let text = serde_json::to_string_pretty(&table).map_err(|e| Error::Config(e.to_string()))?;
                    writeln!(out, "{text}").map_err(stdout_error)?;
                }
            }
            Ok(verdict(table.sandwich_holds()))
        }
        Command::Sweep { config, output } => {
            let mut spec = SweepSpec::from_path(&config)?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let result = run_sweep(&spec)?;
            let bytes = render(&result, format)?;
            match output {
                Some(path) => std::fs::write(&path, bytes).map_err(|source| Error::Io { path, source })?,
                None => io::stdout().lock().write_all(&bytes).map_err(stdout_error)?,
            }
            for f in &result.failed {
                eprintln!("failed cell {}: {}", f.cell, f.error);
            }
            if result.failed.iter().any(|f| f.numerical) {
                return Ok(NUMERICAL);
            }
            Ok(verdict(result.all_pass()))
        }
    }
}

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;
const NUMERICAL: u8 = 3;

fn verdict(pass: bool) -> u8 {
    if pass {
        PASS
    } else {
        FAIL
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        NUMERICAL
    } else {
        USAGE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(USAGE);
        }
        #[cfg(not(feature = "parallel"))]
        let _ = t;
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

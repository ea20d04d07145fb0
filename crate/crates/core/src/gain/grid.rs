use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::kernel::AngularKernel;
use crate::par;
use crate::spherical::{Frame, SphereRule, VelocityFunction};

pub const DEFAULT_POINTS: usize = 64;
pub const DEFAULT_ALIASING_TOL: f64 = 1e-10;
const MAGIC: &[u8; 4] = b"BGF1";
const HEADER_LEN: usize = 32;
// Lagrange stencil width used to read f̂ off the grid
const STENCIL: usize = 6;

fn check_shape(n: usize, points: usize, half_width: f64) -> Result<()> {
    if !(n == 2 || n == 3) {
        return Err(Error::Domain(format!("grids support n = 2 or 3, got {n}")));
    }
    if points < 8 || !points.is_power_of_two() {
        return Err(Error::Domain(format!(
            "points per axis must be a power of two >= 8, got {points}"
        )));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::Domain(format!("half width must be positive, got {half_width}")));
    }
    Ok(())
}

fn multi_index(mut flat: usize, n: usize, points: usize, out: &mut [usize]) {
    for d in (0..n).rev() {
        out[d] = flat % points;
        flat /= points;
    }
}

/// Samples on [-L, L)ⁿ at v_i = -L + iΔ, Δ = 2L/N, stored row-major with the
/// last axis fastest. The box is treated as one period.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub n: usize,
    pub points: usize,
    pub half_width: f64,
    pub values: Vec<f64>,
}

/// Fourier modes k_m = π m / L for m = -N/2 .. N/2-1, stored like [`GridFunction`]
/// with index i = m + N/2.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    pub n: usize,
    pub points: usize,
    pub half_width: f64,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(n: usize, points: usize, half_width: f64, values: Vec<f64>) -> Result<Self> {
        check_shape(n, points, half_width)?;
        if values.len() != points.pow(n as u32) {
            return Err(Error::Domain(format!(
                "expected {} values, got {}",
                points.pow(n as u32),
                values.len()
            )));
        }
        Ok(GridFunction {
            n,
            points,
            half_width,
            values,
        })
    }

    pub fn zeros(n: usize, points: usize, half_width: f64) -> Result<Self> {
        Self::new(n, points, half_width, vec![0.0; points.pow(n as u32)])
    }

    pub fn sample(f: &VelocityFunction, points: usize, half_width: f64) -> Result<Self> {
        let n = f.n();
        check_shape(n, points, half_width)?;
        let h = 2.0 * half_width / points as f64;
        let values = par::map_range(points.pow(n as u32), |flat| {
            let mut idx = [0usize; 3];
            multi_index(flat, n, points, &mut idx);
            let v: Vec<f64> = idx[..n].iter().map(|&i| -half_width + i as f64 * h).collect();
            f.eval(&v)
        });
        Self::new(n, points, half_width, values)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Physical coordinates of the node with flat index `flat`.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut idx = [0usize; 3];
        multi_index(flat, self.n, self.points, &mut idx);
        idx[..self.n]
            .iter()
            .map(|&i| -self.half_width + i as f64 * self.spacing())
            .collect()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.index(idx)]
    }

    /// Σ values · Δⁿ.
    pub fn integral(&self) -> f64 {
        par::pairwise_sum(&self.values) * self.spacing().powi(self.n as i32)
    }

    /// Largest |value| on the faces of the box divided by the largest |value| overall.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        let mut idx = [0usize; 3];
        let mut edge: f64 = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            multi_index(flat, self.n, self.points, &mut idx);
            if idx[..self.n].iter().any(|&i| i == 0 || i == self.points - 1) {
                edge = edge.max(v.abs());
            }
        }
        edge / peak
    }

    pub fn check_aliasing(&self, tolerance: f64) -> Result<()> {
        let ratio = self.boundary_ratio();
        if ratio > tolerance {
            return Err(Error::Aliasing { ratio, tolerance });
        }
        Ok(())
    }

    /// The same function on a box twice as wide with twice as many points,
    /// zero outside the original box.
    fn padded(&self) -> GridFunction {
        let (n, m) = (self.n, self.points);
        let big = 2 * m;
        let mut values = vec![0.0; big.pow(n as u32)];
        let mut idx = [0usize; 3];
        for (flat, &v) in self.values.iter().enumerate() {
            multi_index(flat, n, m, &mut idx);
            let at = idx[..n].iter().fold(0, |acc, &i| acc * big + i + m / 2);
            values[at] = v;
        }
        GridFunction {
            n,
            points: big,
            half_width: 2.0 * self.half_width,
            values,
        }
    }

    /// Binary layout: `BGF1`, n (u32), N (u64), L (f64), 8 zero bytes, then Nⁿ f64,
    /// all little-endian.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&(self.n as u32).to_le_bytes());
        header.extend_from_slice(&(self.points as u64).to_le_bytes());
        header.extend_from_slice(&self.half_width.to_le_bytes());
        header.extend_from_slice(&[0u8; 8]);
        w.write_all(&header).map_err(io)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(bad("missing BGF1 header".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let points = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let half_width = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        check_shape(n, points, half_width).map_err(|e| bad(e.to_string()))?;
        let count = points.pow(n as u32);
        let body = &bytes[HEADER_LEN..];
        if body.len() != 8 * count {
            return Err(bad(format!("expected {} data bytes, found {}", 8 * count, body.len())));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(n, points, half_width, values)
    }

    /// Columns `i0,i1[,i2],value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head: Vec<String> = (0..self.n).map(|d| format!("i{d}")).collect();
        head.push("value".into());
        w.write_record(&head).map_err(csv_error)?;
        let mut idx = [0usize; 3];
        for (flat, v) in self.values.iter().enumerate() {
            multi_index(flat, self.n, self.points, &mut idx);
            let mut row: Vec<String> = idx[..self.n].iter().map(|i| i.to_string()).collect();
            row.push(format!("{v:e}"));
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush().map_err(|e| csv_error(e.into()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format {
        path: "<csv>".into(),
        message: e.to_string(),
    }
}

impl SpectralGrid {
    pub fn spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// k for the mode with flat index `flat`.
    pub fn mode(&self, flat: usize) -> Vec<f64> {
        let mut idx = [0usize; 3];
        multi_index(flat, self.n, self.points, &mut idx);
        let half = (self.points / 2) as f64;
        idx[..self.n]
            .iter()
            .map(|&i| (i as f64 - half) * self.spacing())
            .collect()
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.values[idx.iter().fold(0, |acc, &i| acc * self.points + i)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at an arbitrary k by tensor Lagrange interpolation; zero outside the mode box.
    pub fn interpolate(&self, k: &[f64]) -> Complex64 {
        let n = self.n;
        let h = self.spacing();
        let half = (self.points / 2) as f64;
        let mut base = [0isize; 3];
        let mut w = [[0.0f64; STENCIL]; 3];
        for d in 0..n {
            let x = k[d] / h + half;
            let lo = x.floor() as isize - (STENCIL as isize / 2 - 1);
            if lo < 0 || lo + STENCIL as isize > self.points as isize {
                return Complex64::new(0.0, 0.0);
            }
            base[d] = lo;
            let t = x - lo as f64;
            for (j, wj) in w[d].iter_mut().enumerate() {
                let mut c = 1.0;
                for i in 0..STENCIL {
                    if i != j {
                        c *= (t - i as f64) / (j as f64 - i as f64);
                    }
                }
                *wj = c;
            }
        }
        let p = self.points;
        let mut acc = Complex64::new(0.0, 0.0);
        if n == 2 {
            for a in 0..STENCIL {
                let row = (base[0] as usize + a) * p + base[1] as usize;
                let s: Complex64 = self.values[row..row + STENCIL]
                    .iter()
                    .zip(&w[1])
                    .map(|(v, wb)| v * wb)
                    .sum();
                acc += s * w[0][a];
            }
        } else {
            for a in 0..STENCIL {
                let mut sa = Complex64::new(0.0, 0.0);
                for b in 0..STENCIL {
                    let row = ((base[0] as usize + a) * p + base[1] as usize + b) * p + base[2] as usize;
                    let s: Complex64 = self.values[row..row + STENCIL]
                        .iter()
                        .zip(&w[2])
                        .map(|(v, wc)| v * wc)
                        .sum();
                    sa += s * w[1][b];
                }
                acc += sa * w[0][a];
            }
        }
        acc
    }

    /// sup |value| over modes with |k| >= ρ, as a step function on shells of width Δk.
    fn tail_bound(&self) -> Vec<f64> {
        let h = self.spacing();
        let shells = (self.points as f64 * (self.n as f64).sqrt() / 2.0).ceil() as usize + 2;
        let mut best = vec![0.0f64; shells];
        for (flat, v) in self.values.iter().enumerate() {
            let k = self.mode(flat);
            let r = k.iter().map(|x| x * x).sum::<f64>().sqrt() / h;
            let s = (r.floor() as usize).min(shells - 1);
            best[s] = best[s].max(v.norm());
        }
        for s in (0..shells - 1).rev() {
            best[s] = best[s].max(best[s + 1]);
        }
        best
    }
}

fn fft_axes(n: usize, points: usize, data: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(points, direction);
    let mut line = vec![Complex64::new(0.0, 0.0); points];
    for d in 0..n {
        let stride = points.pow((n - 1 - d) as u32);
        let block = stride * points;
        for start in 0..data.len() / points {
            // starting offset of the start-th line along axis d
            let outer = start / stride;
            let inner = start % stride;
            let off = outer * block + inner;
            for (j, x) in line.iter_mut().enumerate() {
                *x = data[off + j * stride];
            }
            fft.process(&mut line);
            for (j, x) in line.iter().enumerate() {
                data[off + j * stride] = *x;
            }
        }
    }
}

fn checkerboard(n: usize, points: usize, flat: usize) -> f64 {
    let mut idx = [0usize; 3];
    multi_index(flat, n, points, &mut idx);
    if idx[..n].iter().sum::<usize>() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// f̂(k) = ∫ f(v) e^{-ik·v} dv on the modes of the grid, by the periodic trapezoidal rule.
pub fn fourier_transform(f: &GridFunction) -> SpectralGrid {
    let (n, m) = (f.n, f.points);
    let mut data: Vec<Complex64> = f.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_axes(n, m, &mut data, FftDirection::Forward);
    let scale = f.spacing().powi(n as i32);
    // the centred mode index m + N/2 differs from the FFT index m mod N by N/2,
    // and v_0 = -L contributes the sign (-1)^m
    let half = m / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    let mut idx = [0usize; 3];
    for (flat, o) in out.iter_mut().enumerate() {
        multi_index(flat, n, m, &mut idx);
        let src = idx[..n].iter().fold(0, |acc, &i| acc * m + (i + half) % m);
        *o = data[src] * scale * checkerboard(n, m, flat) * parity(n, half);
    }
    SpectralGrid {
        n,
        points: m,
        half_width: f.half_width,
        values: out,
    }
}

// (-1)^{n·N/2}: the checkerboard is taken on the centred index i = m + N/2
fn parity(n: usize, half: usize) -> f64 {
    if (n * half).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Inverse of [`fourier_transform`]; the imaginary part is returned separately.
pub fn inverse_fourier_transform(s: &SpectralGrid) -> (GridFunction, f64) {
    let (n, m) = (s.n, s.points);
    let half = m / 2;
    let mut data = vec![Complex64::new(0.0, 0.0); s.values.len()];
    let mut idx = [0usize; 3];
    for (flat, v) in s.values.iter().enumerate() {
        multi_index(flat, n, m, &mut idx);
        let dst = idx[..n].iter().fold(0, |acc, &i| acc * m + (i + half) % m);
        data[dst] = *v * checkerboard(n, m, flat) * parity(n, half);
    }
    fft_axes(n, m, &mut data, FftDirection::Inverse);
    let scale = (2.0 * s.half_width).powi(-(n as i32));
    let imag = data.iter().fold(0.0f64, |a, z| a.max(z.im.abs())) * scale;
    let values = data.iter().map(|z| z.re * scale).collect();
    (
        GridFunction {
            n,
            points: m,
            half_width: s.half_width,
            values,
        },
        imag,
    )
}

/// Half width 1.5 R where R bounds the region with |f| >= 1e-12 of its peak.
pub fn default_half_width(f: &VelocityFunction) -> Result<f64> {
    const FLOOR: f64 = 1e-12;
    let n = f.n();
    if let Some(p) = f.radial() {
        let cap = f.reach();
        let cap = if cap.is_finite() { cap } else { 1e3 };
        let xs: Vec<f64> = (0..=2000).map(|i| cap * i as f64 / 2000.0).collect();
        let vals: Vec<f64> = xs.iter().map(|&r| p.eval(r * r).abs()).collect();
        let peak = vals.iter().fold(0.0f64, |a, &b| a.max(b));
        if peak == 0.0 || !peak.is_finite() {
            return Err(Error::Domain(format!("{} has no finite nonzero peak", f.label())));
        }
        let last = vals.iter().rposition(|&v| v >= FLOOR * peak).unwrap_or(0);
        let r = xs[(last + 1).min(xs.len() - 1)];
        return Ok(1.5 * r.max(cap / 2000.0));
    }
    let reach = f.reach();
    if !reach.is_finite() {
        return Err(Error::Precondition(format!("{} has no finite reach", f.label())));
    }
    let dirs = SphereRule::new(n, 12)?;
    let radii = 400;
    let rows = par::map_range(radii + 1, |i| {
        let r = reach * i as f64 / radii as f64;
        (0..dirs.len())
            .map(|j| {
                let v: Vec<f64> = dirs.node(j).iter().map(|x| r * x).collect();
                f.eval(&v).abs()
            })
            .fold(0.0f64, f64::max)
    });
    let peak = rows.iter().fold(0.0f64, |a, &b| a.max(b));
    if peak == 0.0 {
        return Err(Error::Domain(format!("{} vanishes on the sampling grid", f.label())));
    }
    let last = rows.iter().rposition(|&v| v >= FLOOR * peak).unwrap_or(0);
    Ok(1.5 * reach * ((last + 1).min(radii)) as f64 / radii as f64)
}

/// Q⁺₀(f,f) for Maxwellian molecules through Q̂⁺₀(f,f)(k) = ∫ f̂(k⁺) f̂(k⁻) b(k̂·ω) dω.
///
/// f̂ is computed on a zero-padded grid of twice the width and read at k± by
/// tensor Lagrange interpolation; modes where the product of transforms is
/// provably below 1e-14 of its peak are skipped.
pub fn bobylev_spectrum(f: &GridFunction, kern: &AngularKernel, rule: &SphereRule) -> Result<SpectralGrid> {
    if rule.n() != f.n {
        return Err(Error::Domain(format!(
            "rule lives in dimension {}, grid in {}",
            rule.n(),
            f.n
        )));
    }
    let n = f.n;
    let fine = fourier_transform(&f.padded());
    let coarse = SpectralGrid {
        n,
        points: f.points,
        half_width: f.half_width,
        values: vec![Complex64::new(0.0, 0.0); f.values.len()],
    };
    let folded = rule.folded(kern)?;
    let total = folded.total_weight();
    let tail = fine.tail_bound();
    let peak = tail[0];
    let h = fine.spacing();
    let values = par::map_range(coarse.len(), |flat| {
        let k = coarse.mode(flat);
        let kn = k.iter().map(|x| x * x).sum::<f64>().sqrt();
        if kn == 0.0 {
            let z = fine.interpolate(&k);
            return z * z * total;
        }
        let shell = ((kn / std::f64::consts::SQRT_2 / h).floor() as usize).min(tail.len() - 1);
        if tail[shell] * peak < 1e-14 * peak * peak {
            return Complex64::new(0.0, 0.0);
        }
        let pole: Vec<f64> = k.iter().map(|x| x / kn).collect();
        let frame = Frame::new(&pole);
        let mut omega = vec![0.0; n];
        let mut kp = vec![0.0; n];
        let mut km = vec![0.0; n];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..folded.len() {
            frame.apply(folded.node(i), &mut omega);
            for j in 0..n {
                kp[j] = 0.5 * (k[j] + kn * omega[j]);
                km[j] = 0.5 * (k[j] - kn * omega[j]);
            }
            acc += fine.interpolate(&kp) * fine.interpolate(&km) * folded.weights()[i];
        }
        acc
    });
    Ok(SpectralGrid { values, ..coarse })
}

/// Physical-space Q⁺₀(f,f) on the grid of `f`; see [`bobylev_spectrum`].
pub fn q0_plus_bobylev(f: &GridFunction, kern: &AngularKernel, rule: &SphereRule) -> Result<GridFunction> {
    Ok(inverse_fourier_transform(&bobylev_spectrum(f, kern, rule)?).0)
}

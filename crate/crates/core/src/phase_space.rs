//! Position kernels `ρ(x, x′)`, photon-number interference decomposition and
//! Wigner functions on uniform grids.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::char_at;
use crate::error::{Error, Result};
use crate::metrics::{commutator_matrix, quadrature_scales};
use crate::numfmt::csv;
use crate::special::hermite_functions;
use crate::states::{FockDensityMatrix, GaussianMoments, State, AUTO_DEFICIT};
use crate::{Complex, Real};

/// `"QCSR"` read as a big-endian `u32`.
pub const RASTER_MAGIC: Real = 1_364_411_218.0;
pub const RASTER_VERSION: Real = 1.0;
/// Default kernel grid points per axis.
pub const KERNEL_POINTS: usize = 801;

/// Uniform grid layout; `x` runs along rows, `y` along columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    pub x_min: Real,
    pub x_max: Real,
    pub y_min: Real,
    pub y_max: Real,
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize, x: (Real, Real), y: (Real, Real)) -> Result<Self> {
        let g = Self {
            n1,
            n2,
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square grid `[−half, half]²` with `n` points per axis.
    pub fn square(n: usize, half: Real) -> Result<Self> {
        Self::new(n, n, (-half, half), (-half, half))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::InvalidArgument(
                "grids need at least 2 points per axis".into(),
            ));
        }
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_max > self.x_min
            && self.y_max > self.y_min;
        if !ok {
            return Err(Error::InvalidArgument(
                "grid ranges must be finite and increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn h1(&self) -> Real {
        (self.x_max - self.x_min) / (self.n1 - 1) as Real
    }

    pub fn h2(&self) -> Real {
        (self.y_max - self.y_min) / (self.n2 - 1) as Real
    }

    pub fn x(&self, i: usize) -> Real {
        self.x_min + i as Real * self.h1()
    }

    pub fn y(&self, j: usize) -> Real {
        self.y_min + j as Real * self.h2()
    }

    pub fn xs(&self) -> Vec<Real> {
        (0..self.n1).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<Real> {
        (0..self.n2).map(|j| self.y(j)).collect()
    }

    /// Default kernel grid: 801² points over `[−L, L]²`, `L = √(2N_c) + 4`.
    pub fn kernel_default(cutoff: usize) -> Self {
        let half = (2.0 * cutoff as Real).sqrt() + 4.0;
        Self::square(KERNEL_POINTS, half).expect("valid default grid")
    }

    /// Same ranges extended by `cells` grid cells on every side.
    fn with_halo(&self, cells: usize) -> Self {
        let (h1, h2) = (self.h1(), self.h2());
        let c = cells as Real;
        Self {
            n1: self.n1 + 2 * cells,
            n2: self.n2 + 2 * cells,
            x_min: self.x_min - c * h1,
            x_max: self.x_max + c * h1,
            y_min: self.y_min - c * h2,
            y_max: self.y_max + c * h2,
        }
    }
}

/// Grid values, row-major with row index `j` (the `y` coordinate).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    pub spec: GridSpec,
    pub re: Vec<Real>,
    pub im: Option<Vec<Real>>,
}

/// Which part of complex grid values to export.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Re,
    Im,
    Abs,
}

impl Grid2D {
    pub fn real(spec: GridSpec, re: Vec<Real>) -> Self {
        Self { spec, re, im: None }
    }

    pub fn complex(spec: GridSpec, values: &[Complex]) -> Self {
        Self {
            spec,
            re: values.iter().map(|z| z.re).collect(),
            im: Some(values.iter().map(|z| z.im).collect()),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> Complex {
        let idx = j * self.spec.n1 + i;
        Complex::new(self.re[idx], self.im.as_ref().map_or(0.0, |v| v[idx]))
    }

    pub fn component(&self, c: Component) -> Vec<Real> {
        match (c, &self.im) {
            (Component::Re, _) => self.re.clone(),
            (Component::Im, Some(im)) => im.clone(),
            (Component::Im, None) => vec![0.0; self.re.len()],
            (Component::Abs, Some(im)) => {
                self.re.iter().zip(im).map(|(a, b)| a.hypot(*b)).collect()
            }
            (Component::Abs, None) => self.re.iter().map(|a| a.abs()).collect(),
        }
    }

    /// Tensor trapezoid integral of the real part (and imaginary, if any).
    pub fn integral(&self) -> Complex {
        let w = trapezoid_weights(&self.spec);
        let re = weighted_sum(&self.re, &w);
        let im = self.im.as_ref().map_or(0.0, |v| weighted_sum(v, &w));
        Complex::new(re, im)
    }

    /// CSV `x,y,value` (real grids) or `x,y,re,im` (complex grids).
    pub fn to_csv(&self) -> String {
        let s = &self.spec;
        let mut out = String::with_capacity(s.n1 * s.n2 * 48);
        out.push_str(if self.im.is_some() {
            "x,y,re,im\n"
        } else {
            "x,y,value\n"
        });
        for j in 0..s.n2 {
            for i in 0..s.n1 {
                let idx = j * s.n1 + i;
                out.push_str(&csv(s.x(i)));
                out.push(',');
                out.push_str(&csv(s.y(j)));
                out.push(',');
                out.push_str(&csv(self.re[idx]));
                if let Some(im) = &self.im {
                    out.push(',');
                    out.push_str(&csv(im[idx]));
                }
                out.push('\n');
            }
        }
        out
    }

    /// Little-endian `f64` raster: header `magic, version, n1, n2, x_min,
    /// x_max, y_min, y_max`, then the selected component row by row.
    pub fn to_raster(&self, component: Component) -> Vec<u8> {
        let s = &self.spec;
        let header = [
            RASTER_MAGIC,
            RASTER_VERSION,
            s.n1 as Real,
            s.n2 as Real,
            s.x_min,
            s.x_max,
            s.y_min,
            s.y_max,
        ];
        let values = self.component(component);
        let mut out = Vec::with_capacity(8 * (header.len() + values.len()));
        for v in header.iter().chain(values.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses a raster written by [`Grid2D::to_raster`] as a real grid.
    pub fn from_raster(bytes: &[u8]) -> Result<Self> {
        if bytes.len() % 8 != 0 || bytes.len() < 64 {
            return Err(Error::InvalidArgument(
                "raster length is not a whole header".into(),
            ));
        }
        let vals: Vec<Real> = bytes
            .chunks_exact(8)
            .map(|c| Real::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if vals[0] != RASTER_MAGIC || vals[1] != RASTER_VERSION {
            return Err(Error::InvalidArgument("not a version-1 QCSR raster".into()));
        }
        let spec = GridSpec::new(
            vals[2] as usize,
            vals[3] as usize,
            (vals[4], vals[5]),
            (vals[6], vals[7]),
        )?;
        if vals.len() != 8 + spec.n1 * spec.n2 {
            return Err(Error::InvalidArgument(
                "raster size does not match its header".into(),
            ));
        }
        Ok(Self::real(spec, vals[8..].to_vec()))
    }
}

fn trapezoid_weights(spec: &GridSpec) -> (Vec<Real>, Vec<Real>) {
    let axis = |n: usize, h: Real| -> Vec<Real> {
        (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect()
    };
    (axis(spec.n1, spec.h1()), axis(spec.n2, spec.h2()))
}

fn weighted_sum(values: &[Real], (wx, wy): &(Vec<Real>, Vec<Real>)) -> Real {
    let n1 = wx.len();
    wy.iter()
        .enumerate()
        .map(|(j, wj)| wj * (0..n1).map(|i| wx[i] * values[j * n1 + i]).sum::<Real>())
        .sum()
}

/// `ψ_n(x)` for `n < len` at every point of `xs`, as an `xs.len() × len`
/// matrix.
fn hermite_matrix(xs: &[Real], len: usize) -> DMatrix<Real> {
    let mut m = DMatrix::zeros(xs.len(), len);
    let mut buf = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        hermite_functions(x, len, &mut buf);
        for (n, v) in buf.iter().enumerate() {
            m[(i, n)] = *v;
        }
    }
    m
}

/// Rejects grids whose spacing is too coarse for the highest Hermite mode
/// (fewer than four points per local wavelength `2π/√(2N+1)`).
fn check_kernel_resolution(spec: &GridSpec, dim: usize) -> Result<()> {
    let k = (2.0 * dim as Real + 1.0).sqrt();
    let h = spec.h1().max(spec.h2());
    if h * k > PI / 2.0 {
        return Err(Error::GridTooCoarse(format!(
            "spacing {h} under-resolves Hermite mode {} (need ≤ {})",
            dim - 1,
            PI / (2.0 * k)
        )));
    }
    Ok(())
}

/// `ρ(x, x′) = Σ ρ_{mn} ψ_m(x) ψ_n(x′)` with `x` on the first axis and `x′` on
/// the second.
pub fn position_kernel_matrix(rho: &FockDensityMatrix, spec: &GridSpec) -> Result<Grid2D> {
    spec.validate()?;
    let n = rho.dim();
    check_kernel_resolution(spec, n)?;
    let a = hermite_matrix(&spec.xs(), n).map(|v| Complex::new(v, 0.0));
    let b = hermite_matrix(&spec.ys(), n).map(|v| Complex::new(v, 0.0));
    let r = DMatrix::from_fn(n, n, |m, k| rho.get(m, k));
    // K[j, i] = Σ ψ_m(x_i) ρ_{mk} ψ_k(x′_j) = (B ρᵀ Aᵀ)[j, i]
    let k = &b * r.transpose() * a.transpose();
    let mut values = Vec::with_capacity(spec.n1 * spec.n2);
    for j in 0..spec.n2 {
        for i in 0..spec.n1 {
            values.push(k[(j, i)]);
        }
    }
    Ok(Grid2D::complex(*spec, &values))
}

/// Position kernel of a state on `spec` (number-basis matrix at the
/// converged cutoff).
pub fn position_kernel(state: &State, spec: &GridSpec) -> Result<Grid2D> {
    let (rho, _) = state.to_fock_matrix_auto()?;
    position_kernel_matrix(&rho, spec)
}

/// `∫(x−x′)²|ρ(x,x′)|² / ∫|ρ(x,x′)|²` from a kernel grid.
pub fn kernel_coherence_scale(kernel: &Grid2D) -> Real {
    let s = &kernel.spec;
    let w = trapezoid_weights(s);
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..s.n2 {
        for i in 0..s.n1 {
            let a = w.0[i] * w.1[j] * kernel.at(i, j).norm_sqr();
            num += a * (s.x(i) - s.y(j)).powi(2);
            den += a;
        }
    }
    num / den
}

/// `⟨n|ρ|n⟩`.
pub fn p_n(state: &State, n: usize) -> Result<Real> {
    let start = state.default_cutoff().max(n + 1);
    let (rho, _) = state.to_fock_matrix_with_deficit(start, AUTO_DEFICIT)?;
    Ok(if n < rho.dim() { rho.get(n, n).re } else { 0.0 })
}

/// Populations of a matrix, zero beyond its cutoff.
pub fn p_n_matrix(rho: &FockDensityMatrix, n: usize) -> Real {
    if n < rho.dim() {
        rho.get(n, n).re
    } else {
        0.0
    }
}

/// Strip-restricted populations for one photon number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferenceReport {
    pub n: usize,
    pub p_n: Real,
    pub entries: Vec<DiagEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagEntry {
    pub ell: Real,
    pub p_diag: Real,
    /// `p_n − p_diag`, the interference contribution outside the strip.
    pub residual: Real,
}

/// Fraction of the cell `[−h1/2, h1/2] × [−h2/2, h2/2]` on which `p − q ≤ t`.
fn cell_cdf(t: Real, h1: Real, h2: Real) -> Real {
    let g = |z: Real| if z > 0.0 { 0.5 * z * z } else { 0.0 };
    let a = 0.5 * (h1 + h2);
    let b = 0.5 * (h1 - h2);
    ((g(t + a) - g(t + b) - g(t - b) + g(t - a)) / (h1 * h2)).clamp(0.0, 1.0)
}

/// Fraction of the cell around `(x, x′)` with `|x − x′| ≤ ℓ`.
fn strip_fraction(d: Real, ell: Real, h1: Real, h2: Real) -> Real {
    cell_cdf(ell - d, h1, h2) - cell_cdf(-ell - d, h1, h2)
}

/// `p_N^{diag,ℓ}(n) = ∫_{|x−x′|≤ℓ} ψ_n(x′) ψ_n(x) ρ(x, x′) dx dx′` for every
/// `n` in `ns` and `ℓ` in `ells`, from a kernel grid.
pub fn p_n_diag_kernel(
    rho: &FockDensityMatrix,
    kernel: &Grid2D,
    ns: &[usize],
    ells: &[Real],
) -> Result<Vec<InterferenceReport>> {
    if ells.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidArgument(
            "strip half-widths ℓ must be > 0".into(),
        ));
    }
    let s = &kernel.spec;
    let top = ns.iter().copied().max().unwrap_or(0) + 1;
    check_kernel_resolution(s, top.max(rho.dim()))?;
    let (wx, wy) = trapezoid_weights(s);
    let (h1, h2) = (s.h1(), s.h2());
    let psi_x = hermite_matrix(&s.xs(), top);
    let psi_y = hermite_matrix(&s.ys(), top);
    ns.par_iter()
        .map(|&n| {
            let entries = ells
                .iter()
                .map(|&ell| {
                    let mut acc = 0.0;
                    for j in 0..s.n2 {
                        let yj = s.y(j);
                        let fy = wy[j] * psi_y[(j, n)];
                        let mut row = 0.0;
                        for i in 0..s.n1 {
                            let frac = strip_fraction(s.x(i) - yj, ell, h1, h2);
                            if frac > 0.0 {
                                row += frac * wx[i] * psi_x[(i, n)] * kernel.at(i, j).re;
                            }
                        }
                        acc += fy * row;
                    }
                    let p = p_n_matrix(rho, n);
                    DiagEntry {
                        ell,
                        p_diag: acc,
                        residual: p - acc,
                    }
                })
                .collect();
            Ok(InterferenceReport {
                n,
                p_n: p_n_matrix(rho, n),
                entries,
            })
        })
        .collect()
}

/// [`p_n_diag_kernel`] for a matrix on `spec`.
pub fn p_n_diag_matrix(
    rho: &FockDensityMatrix,
    spec: &GridSpec,
    ns: &[usize],
    ells: &[Real],
) -> Result<Vec<InterferenceReport>> {
    let kernel = position_kernel_matrix(rho, spec)?;
    p_n_diag_kernel(rho, &kernel, ns, ells)
}

/// Strip-restricted population of a state for one `n` and several `ℓ`.
pub fn p_n_diag(
    state: &State,
    n: usize,
    ells: &[Real],
    spec: &GridSpec,
) -> Result<InterferenceReport> {
    let start = state.default_cutoff().max(n + 1);
    let (rho, _) = state.to_fock_matrix_with_deficit(start, AUTO_DEFICIT)?;
    Ok(p_n_diag_matrix(&rho, spec, &[n], ells)?.remove(0))
}

/// Wigner function `W(α) = (2/π) Tr[ρ D(2α)(−1)^N]` on a grid in the
/// `(Re α, Im α)` plane, normalised so that `∫ W d²α = 1`.
pub fn wigner_grid(state: &State, spec: &GridSpec) -> Result<Grid2D> {
    spec.validate()?;
    let c = qcs_for_resolution(state)?;
    let h = spec.h1().max(spec.h2());
    if h > 0.25 / c {
        return Err(Error::GridTooCoarse(format!(
            "spacing {h} exceeds 1/(4C) = {}",
            0.25 / c
        )));
    }
    Ok(Grid2D::real(*spec, wigner_values(state, spec)?))
}

fn wigner_values(state: &State, spec: &GridSpec) -> Result<Vec<Real>> {
    let rows: Vec<Vec<Real>> = match state.gaussian_moments() {
        Some(g) => (0..spec.n2)
            .into_par_iter()
            .map(|j| {
                (0..spec.n1)
                    .map(|i| gaussian_wigner(&g, spec.x(i), spec.y(j)))
                    .collect()
            })
            .collect(),
        None => {
            let (rho, _) = state.to_fock_matrix_auto()?;
            (0..spec.n2)
                .into_par_iter()
                .map_init(Vec::new, |scratch, j| {
                    (0..spec.n1)
                        .map(|i| matrix_wigner(&rho, Complex::new(spec.x(i), spec.y(j)), scratch))
                        .collect()
                })
                .collect()
        }
    };
    Ok(rows.concat())
}

/// `2 exp(−zᵀV⁻¹z)/(π√det V)` with `z = √2(Re α, Im α) − mean`.
pub fn gaussian_wigner(g: &GaussianMoments, re: Real, im: Real) -> Real {
    let s = std::f64::consts::SQRT_2;
    let z = [s * re - g.mean[0], s * im - g.mean[1]];
    let det = g.det();
    let q =
        (g.v[1][1] * z[0] * z[0] - 2.0 * g.v[0][1] * z[0] * z[1] + g.v[0][0] * z[1] * z[1]) / det;
    2.0 * (-q).exp() / (PI * det.sqrt())
}

/// Number-basis Laguerre expansion of `W(α)`.
pub fn matrix_wigner(rho: &FockDensityMatrix, alpha: Complex, scratch: &mut Vec<Real>) -> Real {
    let x = 4.0 * alpha.norm_sqr();
    let phi = alpha.arg();
    let parity = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut w = 0.0;
    for (k, s) in rho.band_sums(x, parity, scratch) {
        if k == 0 {
            w += s.re;
        } else {
            w += 2.0 * (s * Complex::from_polar(1.0, k as Real * phi)).re;
        }
    }
    2.0 / PI * w
}

/// `W(α) = (1/π²) ∫ χ(ξ) e^{ξ*α − ξα*} d²ξ` by a tensor trapezoid on
/// `[−half, half]²` with `n` points per axis; a slow cross-check of the
/// closed forms.
pub fn wigner_via_char(state: &State, alpha: Complex, half: Real, n: usize) -> Real {
    let h = 2.0 * half / (n - 1) as Real;
    let mut acc = 0.0;
    for j in 0..n {
        let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        let xi2 = -half + j as Real * h;
        for i in 0..n {
            let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let xi = Complex::new(-half + i as Real * h, xi2);
            let kernel = (xi.conj() * alpha - xi * alpha.conj()).exp();
            acc += wi * wj * (char_at(state, xi.into()) * kernel).re;
        }
    }
    acc * h * h / (PI * PI)
}

/// C used to judge grid resolution: closed form for Gaussians, commutator
/// traces otherwise.
fn qcs_for_resolution(state: &State) -> Result<Real> {
    if let Some(g) = state.gaussian_moments() {
        return Ok(crate::closed_form::gaussian_qcs_squared(g.v).sqrt());
    }
    let (cx, cp) = quadrature_scales(&commutator_matrix(state)?);
    Ok((0.5 * (cx + cp)).sqrt())
}

/// Default Wigner grid: spacing `1/(8C)` (capped at 0.1) over a square
/// covering the state's support.
pub fn wigner_default_grid(state: &State) -> Result<GridSpec> {
    let c = qcs_for_resolution(state)?;
    let h = (0.125 / c).min(0.1);
    let half = match state.gaussian_moments() {
        Some(g) => {
            let m = (g.mean[0].powi(2) + g.mean[1].powi(2)).sqrt();
            (m + 7.0 * g.eigenvalues()[1].sqrt()) / std::f64::consts::SQRT_2
        }
        None => (state.to_fock_matrix_auto()?.0.dim() as Real).sqrt() + 4.0,
    };
    let cells = (2.0 * half / h).ceil() as usize;
    GridSpec::square(cells + 1, 0.5 * cells as Real * h)
}

/// `C² = ¼‖∇W‖²/‖W‖²` with fourth-order central differences.
pub fn qcs_wigner_gradient(state: &State, spec: &GridSpec) -> Result<Real> {
    spec.validate()?;
    let c = qcs_for_resolution(state)?;
    let h = spec.h1().max(spec.h2());
    if h > 0.25 / c {
        return Err(Error::GridTooCoarse(format!(
            "spacing {h} exceeds 1/(4C) = {}",
            0.25 / c
        )));
    }
    let halo = spec.with_halo(2);
    let w = wigner_values(state, &halo)?;
    let (h1, h2) = (spec.h1(), spec.h2());
    let n1h = halo.n1;
    let at = |i: usize, j: usize| w[(j + 2) * n1h + i + 2];
    let d = |m2: Real, m1: Real, p1: Real, p2: Real, h: Real| {
        (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)
    };
    let (wx, wy) = trapezoid_weights(spec);
    let (mut grad, mut norm) = (0.0, 0.0);
    for j in 0..spec.n2 {
        for i in 0..spec.n1 {
            let gx = d(
                w[(j + 2) * n1h + i],
                w[(j + 2) * n1h + i + 1],
                w[(j + 2) * n1h + i + 3],
                w[(j + 2) * n1h + i + 4],
                h1,
            );
            let gy = d(
                w[j * n1h + i + 2],
                w[(j + 1) * n1h + i + 2],
                w[(j + 3) * n1h + i + 2],
                w[(j + 4) * n1h + i + 2],
                h2,
            );
            let wt = wx[i] * wy[j];
            grad += wt * (gx * gx + gy * gy);
            norm += wt * at(i, j).powi(2);
        }
    }
    Ok(0.25 * grad / norm)
}

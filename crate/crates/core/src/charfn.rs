//! Characteristic functions `χ(ξ) = Tr ρD(ξ)` and the radial moment
//! integrals `I_k(t) = ∫ |ξ|^{2k} |χ(ξ; t)|² d²ξ` under the thermal channel.
//!
//! The channel acts on `χ` by a rescaling and a Gaussian factor, so
//! substituting `y = e^{−s/2}ξ` (`s = t/t_R`) gives
//!
//! ```text
//! I_k(s) = e^{(k+1)s} ∫ |y|^{2k} e^{−(2n̄_∞+1)(e^{s}−1)|y|²} |χ(y)|² d²y
//! ```
//!
//! with `χ` the characteristic function of the initial state. The integrals are
//! evaluated in polar coordinates: adaptive Gauss–Legendre panels in radius
//! and a periodic trapezoid in angle (`|χ|²` is π-periodic).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::special::{displacement_band, gl16};
use crate::states::{FockDensityMatrix, Repr, State};
use crate::{Complex, Real};

/// Phase-space point `ξ = ξ₁ + iξ₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub xi: Complex,
}

impl PhasePoint {
    pub fn new(re: Real, im: Real) -> Self {
        Self {
            xi: Complex::new(re, im),
        }
    }

    pub fn from_polar(r: Real, phi: Real) -> Self {
        Self {
            xi: Complex::from_polar(r, phi),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xi.re.is_finite() && self.xi.im.is_finite()
    }
}

impl From<Complex> for PhasePoint {
    fn from(xi: Complex) -> Self {
        Self { xi }
    }
}

/// Which factor multiplies `|y|²` in the channel weight of `I_k` for `k ≥ 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    /// `(2n̄_∞ + 1)` for every moment.
    #[default]
    Corrected,
    /// `2n̄_∞` for the `k ≥ 1` moments, `(2n̄_∞ + 1)` for the norm.
    AsPrinted,
}

/// Quadrature controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    /// Local relative accuracy requested from the radial and angular rules.
    pub rel_tol: Real,
    /// Largest accepted relative error estimate on each moment.
    pub quad_tol: Real,
    /// Upper limit on trapezoid nodes over `[0, π)`.
    pub max_angles: usize,
    /// Maximum bisection depth of a radial panel.
    pub max_depth: usize,
    pub weight: WeightConvention,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            quad_tol: 1e-8,
            max_angles: 1 << 15,
            max_depth: 40,
            weight: WeightConvention::Corrected,
        }
    }
}

/// Unnormalised radial moments `I₀, I₁, I₂` at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialMoments {
    pub i0: Real,
    pub i1: Real,
    pub i2: Real,
    /// Largest relative error estimate of the three integrals.
    pub rel_error: Real,
}

impl RadialMoments {
    /// `C² = I₁/I₀`.
    pub fn qcs_squared(&self) -> Real {
        self.i1 / self.i0
    }

    /// `P = I₀/π`.
    pub fn purity(&self) -> Real {
        self.i0 / PI
    }

    /// `κ = I₂I₀/I₁² − 1`.
    pub fn kappa(&self) -> Real {
        self.i2 * self.i0 / (self.i1 * self.i1) - 1.0
    }
}

/// `χ(ξ)` for any state. `χ(0) = 1` is returned exactly.
pub fn char_at(state: &State, point: PhasePoint) -> Complex {
    let mut scratch = Vec::new();
    char_with_scratch(state, point.xi, &mut scratch)
}

/// `χ` on a batch of points, evaluated in parallel; output order follows input.
pub fn char_grid(state: &State, points: &[PhasePoint]) -> Vec<Complex> {
    points
        .par_iter()
        .map_init(Vec::new, |scratch, p| {
            char_with_scratch(state, p.xi, scratch)
        })
        .collect()
}

fn char_with_scratch(state: &State, xi: Complex, scratch: &mut Vec<Real>) -> Complex {
    if xi.re == 0.0 && xi.im == 0.0 {
        return Complex::new(1.0, 0.0);
    }
    let x = xi.norm_sqr();
    match state.repr() {
        Repr::Fock(n) => {
            displacement_band(0, x, *n as usize + 1, scratch);
            Complex::new(scratch[*n as usize], 0.0)
        }
        Repr::Thermal(nbar) => Complex::new((-(1.0 + 2.0 * nbar) * x / 2.0).exp(), 0.0),
        Repr::EvenMixture(m) => Complex::new(even_mixture_char(*m, x, scratch), 0.0),
        Repr::Cat { alpha, norm } => Complex::new(cat_char(*alpha, *norm, xi), 0.0),
        Repr::Gaussian(g) => g.char_at(xi),
        Repr::Matrix(rho) => matrix_char(rho, xi, scratch),
    }
}

fn even_mixture_char(m: u64, x: Real, scratch: &mut Vec<Real>) -> Real {
    let m = m as usize;
    displacement_band(0, x, 2 * m + 1, scratch);
    (1..=m).map(|k| scratch[2 * k]).sum::<Real>() / m as Real
}

/// `(1/N)(2e^{−|ξ|²/2} cos(2 Im ξᾱ) + e^{−|2α+ξ|²/2} + e^{−|2α−ξ|²/2})`.
fn cat_char(alpha: Complex, norm: Real, xi: Complex) -> Real {
    let direct = 2.0 * (-xi.norm_sqr() / 2.0).exp() * (2.0 * (xi * alpha.conj()).im).cos();
    let plus = (-(2.0 * alpha + xi).norm_sqr() / 2.0).exp();
    let minus = (-(2.0 * alpha - xi).norm_sqr() / 2.0).exp();
    (direct + plus + minus) / norm
}

fn matrix_char(rho: &FockDensityMatrix, xi: Complex, scratch: &mut Vec<Real>) -> Complex {
    let phi = xi.arg();
    let mut chi = Complex::new(0.0, 0.0);
    for (k, s) in rho.band_sums(xi.norm_sqr(), |_| 1.0, scratch) {
        if k == 0 {
            chi += s;
        } else {
            let e = Complex::from_polar(1.0, k as Real * phi);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            chi += s * e + s.conj() * e.conj() * sign;
        }
    }
    chi
}

/// Angular average of `|χ|²` at radius `√x` for a matrix state; exact because
/// `χ` is a finite Fourier series in the angle.
fn matrix_char_sq_mean(rho: &FockDensityMatrix, x: Real, scratch: &mut Vec<Real>) -> Real {
    rho.band_sums(x, |_| 1.0, scratch)
        .into_iter()
        .map(|(k, s)| {
            if k == 0 {
                s.norm_sqr()
            } else {
                2.0 * s.norm_sqr()
            }
        })
        .sum()
}

/// Radial profile description used to size the integration domain.
#[derive(Clone, Copy, Debug)]
struct Envelope {
    /// `|χ|²` eventually decays at least like `e^{−decay·r²}`.
    decay: Real,
    /// Squared radius inside which `|χ|²` may oscillate or peak.
    extent: Real,
}

enum AngularRule {
    /// `|χ|²` does not depend on the angle (or has been averaged exactly).
    Single,
    /// Periodic trapezoid starting at `min` nodes, offset by `phase`.
    Trapezoid { min: usize, phase: Real },
}

/// `|χ|²` at `(r², φ)` with the per-angle envelope, for each representation.
enum Source<'a> {
    Fock(usize),
    Thermal(Real),
    Even(u64),
    Cat {
        alpha: Complex,
        norm: Real,
    },
    /// `|χ|² = e^{−r² q(φ)}`, `q(φ) = uᵀΩVΩᵀu`.
    Gaussian([[Real; 2]; 2]),
    Matrix(&'a FockDensityMatrix),
}

impl<'a> Source<'a> {
    fn new(state: &'a State) -> Self {
        match state.repr() {
            Repr::Fock(n) => Source::Fock(*n as usize),
            Repr::Thermal(nbar) => Source::Thermal(*nbar),
            Repr::EvenMixture(m) => Source::Even(*m),
            Repr::Cat { alpha, norm } => Source::Cat {
                alpha: *alpha,
                norm: *norm,
            },
            Repr::Gaussian(g) => Source::Gaussian(g.v),
            Repr::Matrix(rho) => Source::Matrix(rho),
        }
    }

    fn rule(&self) -> AngularRule {
        match self {
            Source::Fock(_) | Source::Thermal(_) | Source::Even(_) | Source::Matrix(_) => {
                AngularRule::Single
            }
            Source::Cat { alpha, .. } => {
                let a = alpha.norm();
                if a == 0.0 {
                    AngularRule::Single
                } else {
                    let min = (64.0 + 32.0 * a * (a + 3.0)).ceil() as usize;
                    AngularRule::Trapezoid {
                        min: min.next_power_of_two(),
                        phase: alpha.arg(),
                    }
                }
            }
            Source::Gaussian(v) => {
                let (qmin, qmax, phase) = gaussian_axes(v);
                if qmax - qmin <= 1e-15 * qmax {
                    AngularRule::Single
                } else {
                    let min = (8.0 * (qmax / qmin).sqrt()).ceil().max(16.0) as usize;
                    AngularRule::Trapezoid {
                        min: min.next_power_of_two(),
                        phase,
                    }
                }
            }
        }
    }

    fn envelope(&self, phi: Real) -> Envelope {
        match self {
            Source::Fock(n) => Envelope {
                decay: 1.0,
                extent: 4.0 * *n as Real + 2.0,
            },
            Source::Thermal(nbar) => Envelope {
                decay: 1.0 + 2.0 * nbar,
                extent: 0.0,
            },
            Source::Even(m) => Envelope {
                decay: 1.0,
                extent: 8.0 * *m as Real + 2.0,
            },
            Source::Cat { alpha, .. } => Envelope {
                decay: 1.0,
                extent: (2.0 * alpha.norm() + 2.0).powi(2),
            },
            Source::Gaussian(v) => Envelope {
                decay: gaussian_q(v, phi),
                extent: 0.0,
            },
            Source::Matrix(rho) => Envelope {
                decay: 1.0,
                extent: 4.0 * rho.dim() as Real + 2.0,
            },
        }
    }

    fn char_sq(&self, x: Real, phi: Real, scratch: &mut Vec<Real>) -> Real {
        match self {
            Source::Fock(n) => {
                displacement_band(0, x, n + 1, scratch);
                scratch[*n].powi(2)
            }
            Source::Thermal(nbar) => (-(1.0 + 2.0 * nbar) * x).exp(),
            Source::Even(m) => even_mixture_char(*m, x, scratch).powi(2),
            Source::Cat { alpha, norm } => {
                cat_char(*alpha, *norm, Complex::from_polar(x.sqrt(), phi)).powi(2)
            }
            Source::Gaussian(v) => (-x * gaussian_q(v, phi)).exp(),
            Source::Matrix(rho) => matrix_char_sq_mean(rho, x, scratch),
        }
    }
}

fn gaussian_q(v: &[[Real; 2]; 2], phi: Real) -> Real {
    let (s, c) = phi.sin_cos();
    v[1][1] * c * c - 2.0 * v[0][1] * c * s + v[0][0] * s * s
}

/// Extreme values of `q(φ)` and the angle of the slowest decay.
fn gaussian_axes(v: &[[Real; 2]; 2]) -> (Real, Real, Real) {
    // q(φ) = ½(V₁₁+V₂₂) + ½(V₂₂−V₁₁) cos 2φ − V₁₂ sin 2φ
    let mid = 0.5 * (v[0][0] + v[1][1]);
    let amp = (0.25 * (v[1][1] - v[0][0]).powi(2) + v[0][1].powi(2)).sqrt();
    let phase = 0.5 * (v[0][1]).atan2(0.5 * (v[0][0] - v[1][1]));
    (mid - amp, mid + amp, phase)
}

/// Radial moments of `state` at time `t` under `channel`.
pub fn radial_moments_at(
    state: &State,
    channel: &ChannelParams,
    t: Real,
    settings: &QuadSettings,
) -> Result<RadialMoments> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and ≥ 0, got {t}"
        )));
    }
    let s = t / channel.t_r();
    let growth = s.exp_m1();
    let g = 2.0 * channel.nbar_inf() + 1.0;
    let c0 = g * growth;
    let c1 = match settings.weight {
        WeightConvention::Corrected => c0,
        WeightConvention::AsPrinted => (g - 1.0) * growth,
    };
    let source = Source::new(state);
    let [j0, j1, j2] = moments_with_weight(&source, c0, c1, settings)?;
    let e = s.exp();
    Ok(RadialMoments {
        i0: e * j0.value,
        i1: e * e * j1.value,
        i2: e * e * e * j2.value,
        rel_error: [j0, j1, j2]
            .iter()
            .map(|j| j.error / j.value.abs())
            .fold(0.0, Real::max),
    })
}

/// Integral value with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: Real,
    pub error: Real,
}

/// `∫ |y|^{2k} e^{−c_k|y|²} |χ(y)|² d²y` for `k = 0, 1, 2`.
fn moments_with_weight(
    source: &Source<'_>,
    c0: Real,
    c1: Real,
    settings: &QuadSettings,
) -> Result<[Quadrature; 3]> {
    let radial = |phi: Real| -> Result<([Real; 3], [Real; 3])> {
        let env = source.envelope(phi);
        let weight = c0.min(c1);
        let decay = env.decay + weight;
        let mut r0_sq = env.extent + 60.0 / decay;
        if weight > 0.0 {
            // |χ|² ≤ 1, so the channel weight alone bounds the support.
            r0_sq = r0_sq.min(60.0 / weight);
        }
        let r0 = r0_sq.sqrt();
        let panels = 16 + (env.extent.min(r0_sq) / 4.0).ceil() as usize;
        let mut scratch = Vec::new();
        let f = |r: Real| {
            let x = r * r;
            let h = source.char_sq(x, phi, &mut scratch);
            let w0 = r * h * (-c0 * x).exp();
            let w1 = r * h * (-c1 * x).exp();
            [w0, w1 * x, w1 * x * x]
        };
        integrate_vec(f, r0, panels, settings)
    };
    let (value, error) = match source.rule() {
        AngularRule::Single => radial(0.0)?,
        AngularRule::Trapezoid { min, phase } => trapezoid_mean(&radial, min, phase, settings)?,
    };
    let two_pi = 2.0 * PI;
    let out: [Quadrature; 3] = std::array::from_fn(|i| Quadrature {
        value: two_pi * value[i],
        error: two_pi * error[i],
    });
    for (k, q) in out.iter().enumerate() {
        if !(q.value > 0.0) || !(q.error <= settings.quad_tol * q.value) {
            return Err(Error::QuadratureNotConverged(format!(
                "moment {k}: value {:e}, error estimate {:e}",
                q.value, q.error
            )));
        }
    }
    Ok(out)
}

/// Mean over `[0, π)` of a π-periodic vector function by the trapezoid rule,
/// doubling the node count until successive means agree.
fn trapezoid_mean(
    f: &(impl Fn(Real) -> Result<([Real; 3], [Real; 3])> + Sync),
    min: usize,
    phase: Real,
    settings: &QuadSettings,
) -> Result<([Real; 3], [Real; 3])> {
    let eval = |nodes: Vec<Real>| -> Result<([Real; 3], [Real; 3])> {
        let parts: Vec<_> = nodes.into_par_iter().map(f).collect::<Result<Vec<_>>>()?;
        let mut sum = [0.0; 3];
        let mut err = [0.0; 3];
        for (v, e) in parts {
            for i in 0..3 {
                sum[i] += v[i];
                err[i] += e[i];
            }
        }
        Ok((sum, err))
    };
    let mut n = min.max(2);
    let (mut sum, mut err) = eval((0..n).map(|j| phase + PI * j as Real / n as Real).collect())?;
    let mut mean: [Real; 3] = std::array::from_fn(|i| sum[i] / n as Real);
    while 2 * n <= settings.max_angles {
        let (add, add_err) = eval(
            (0..n)
                .map(|j| phase + PI * (2 * j + 1) as Real / (2 * n) as Real)
                .collect(),
        )?;
        n *= 2;
        for i in 0..3 {
            sum[i] += add[i];
            err[i] += add_err[i];
        }
        let next: [Real; 3] = std::array::from_fn(|i| sum[i] / n as Real);
        let converged =
            (0..3).all(|i| (next[i] - mean[i]).abs() <= settings.rel_tol * next[i].abs());
        mean = next;
        if converged {
            let radial_err: [Real; 3] = std::array::from_fn(|i| err[i] / n as Real);
            return Ok((mean, radial_err));
        }
    }
    Err(Error::QuadratureNotConverged(format!(
        "angular trapezoid not converged with {n} nodes"
    )))
}

fn gl_panel<const D: usize>(f: &mut impl FnMut(Real) -> [Real; D], a: Real, b: Real) -> [Real; D] {
    let (nodes, weights) = gl16();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = [0.0; D];
    for (x, w) in nodes.iter().zip(weights) {
        let v = f(mid + half * x);
        for i in 0..D {
            acc[i] += w * v[i];
        }
    }
    acc.map(|v| v * half)
}

/// `∫_0^∞ f(r) dr` for a vector integrand decaying like a Gaussian beyond
/// `r0`: uniform panels on `[0, r0]`, tail panels until negligible, then
/// adaptive bisection of each panel. Returns values and absolute error
/// estimates.
fn integrate_vec<const D: usize>(
    mut f: impl FnMut(Real) -> [Real; D],
    r0: Real,
    panels: usize,
    settings: &QuadSettings,
) -> Result<([Real; D], [Real; D])> {
    let h = r0 / panels as Real;
    let mut edges: Vec<Real> = (0..=panels).map(|j| j as Real * h).collect();
    let mut coarse: Vec<[Real; D]> = edges
        .windows(2)
        .map(|w| gl_panel(&mut f, w[0], w[1]))
        .collect();
    let mut scale = [0.0; D];
    for v in &coarse {
        for i in 0..D {
            scale[i] += v[i].abs();
        }
    }
    let tail_width = r0 / 4.0;
    let mut quiet = 0;
    for _ in 0..400 {
        let a = *edges.last().expect("at least one edge");
        let v = gl_panel(&mut f, a, a + tail_width);
        edges.push(a + tail_width);
        coarse.push(v);
        for i in 0..D {
            scale[i] += v[i].abs();
        }
        if (0..D).all(|i| v[i].abs() <= 1e-3 * settings.rel_tol * scale[i]) {
            quiet += 1;
            if quiet == 2 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    if quiet < 2 {
        return Err(Error::QuadratureNotConverged(
            "radial tail does not decay".into(),
        ));
    }
    let total = *edges.last().expect("edges");
    let mut value = [0.0; D];
    let mut error = [0.0; D];
    for (w, whole) in edges.windows(2).zip(coarse) {
        let tol: [Real; D] =
            std::array::from_fn(|i| settings.rel_tol * scale[i] * (w[1] - w[0]) / total);
        refine(
            &mut f,
            w[0],
            w[1],
            whole,
            tol,
            settings.max_depth,
            &mut value,
            &mut error,
        );
    }
    Ok((value, error))
}

#[allow(clippy::too_many_arguments)]
fn refine<const D: usize>(
    f: &mut impl FnMut(Real) -> [Real; D],
    a: Real,
    b: Real,
    whole: [Real; D],
    tol: [Real; D],
    depth: usize,
    value: &mut [Real; D],
    error: &mut [Real; D],
) {
    let m = 0.5 * (a + b);
    let left = gl_panel(f, a, m);
    let right = gl_panel(f, m, b);
    let diff: [Real; D] = std::array::from_fn(|i| (left[i] + right[i] - whole[i]).abs());
    if depth == 0 || (0..D).all(|i| diff[i] <= tol[i]) {
        for i in 0..D {
            value[i] += left[i] + right[i];
            error[i] += diff[i];
        }
        return;
    }
    let half = tol.map(|t| 0.5 * t);
    refine(f, a, m, left, half, depth - 1, value, error);
    refine(f, m, b, right, half, depth - 1, value, error);
}

/// `∫ f(|y|) d²y = 2π ∫_0^∞ f(r) r dr` for an isotropic integrand whose
/// magnitude decays at least like `e^{−decay·r²}` beyond `extent` (squared
/// radius).
pub fn integrate_radial(
    f: impl Fn(Real) -> Real,
    decay: Real,
    extent: Real,
    settings: &QuadSettings,
) -> Result<Quadrature> {
    if !(decay > 0.0) || !(extent >= 0.0) {
        return Err(Error::InvalidArgument(
            "decay must be > 0 and extent ≥ 0".into(),
        ));
    }
    let r0 = (extent + 60.0 / decay).sqrt();
    let panels = 16 + (extent / 4.0).ceil() as usize;
    let (v, e) = integrate_vec(|r| [r * f(r)], r0, panels, settings)?;
    let q = Quadrature {
        value: 2.0 * PI * v[0],
        error: 2.0 * PI * e[0],
    };
    if !(q.error <= settings.quad_tol * q.value.abs().max(Real::MIN_POSITIVE)) {
        return Err(Error::QuadratureNotConverged(format!(
            "value {:e}, error estimate {:e}",
            q.value, q.error
        )));
    }
    Ok(q)
}

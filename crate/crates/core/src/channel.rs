//! The thermal Lindblad channel
//! `ρ̇ = −iω[a†a, ρ] + γ(aρa† − ½{a†a, ρ}) + δ(a†ρa − ½{aa†, ρ})`
//! with `γ > δ ≥ 0`, relaxation time `t_R = 1/(γ − δ)` and asymptotic
//! occupation `n̄_∞ = δ t_R`.
//!
//! Four evolution routes are provided: exact characteristic-function moment
//! integrals, the effective QCS/purity ODEs, covariance propagation for
//! Gaussian states and a Fock-basis integrator used as an oracle.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::charfn::WeightConvention;
use crate::charfn::{radial_moments_at, QuadSettings};
use crate::closed_form;
use crate::error::{Error, Result};
use crate::metrics::commutator_moments;
use crate::numfmt::csv;
use crate::states::{FockDensityMatrix, GaussianMoments, State};
use crate::{Complex, Real};

/// Default half-life tolerance, in units of `t_R`.
pub const HALFLIFE_TOL: Real = 1e-4;
/// Default Fock-oracle step, in units of `t_R`.
pub const ORACLE_DT: Real = 1e-4;
/// Largest tolerated probability leaked through the top of the truncation.
pub const ORACLE_LEAK_TOL: Real = 1e-8;
/// Largest tolerated drift of `Tr ρ + leaked − 1`.
pub const ORACLE_DRIFT_TOL: Real = 1e-9;

/// Channel rates, stored canonically as `(γ, δ, ω)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    gamma: Real,
    delta: Real,
    omega: Real,
}

impl ChannelParams {
    /// From relaxation time, asymptotic occupation and rotation frequency.
    pub fn new(t_r: Real, nbar_inf: Real, omega: Real) -> Result<Self> {
        if !(t_r > 0.0 && t_r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_R must be > 0, got {t_r}"
            )));
        }
        if !(nbar_inf >= 0.0 && nbar_inf.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "n̄_∞ must be ≥ 0, got {nbar_inf}"
            )));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidArgument("ω must be finite".into()));
        }
        let delta = nbar_inf / t_r;
        Ok(Self {
            gamma: 1.0 / t_r + delta,
            delta,
            omega,
        })
    }

    /// From damping and pumping rates.
    pub fn from_rates(gamma: Real, delta: Real, omega: Real) -> Result<Self> {
        if !(delta >= 0.0 && gamma > delta && gamma.is_finite() && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rates must satisfy γ > δ ≥ 0, got γ = {gamma}, δ = {delta}"
            )));
        }
        Ok(Self {
            gamma,
            delta,
            omega,
        })
    }

    pub fn gamma(&self) -> Real {
        self.gamma
    }

    pub fn delta(&self) -> Real {
        self.delta
    }

    pub fn omega(&self) -> Real {
        self.omega
    }

    pub fn t_r(&self) -> Real {
        1.0 / (self.gamma - self.delta)
    }

    pub fn nbar_inf(&self) -> Real {
        self.delta * self.t_r()
    }

    /// `2n̄_∞ + 1`.
    pub fn thermal_factor(&self) -> Real {
        2.0 * self.nbar_inf() + 1.0
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            delta: 0.0,
            omega: 0.0,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    t_r: Real,
    nbar_inf: Real,
    omega: Real,
    gamma: Real,
    delta: Real,
}

impl Serialize for ChannelParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelRepr {
            t_r: self.t_r(),
            nbar_inf: self.nbar_inf(),
            omega: self.omega,
            gamma: self.gamma,
            delta: self.delta,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChannelParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ChannelRepr::deserialize(d)?;
        ChannelParams::from_rates(r.gamma, r.delta, r.omega).map_err(serde::de::Error::custom)
    }
}

/// Route that produced an [`EvolutionCurve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    ExactIntegral,
    Ode,
    ClosedFormGaussian,
    FockOracle,
}

impl CurveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMethod::ExactIntegral => "exact_integral",
            CurveMethod::Ode => "ode",
            CurveMethod::ClosedFormGaussian => "closed_form_gaussian",
            CurveMethod::FockOracle => "fock_oracle",
        }
    }
}

/// Time series of `C(t)`, `P(t)`, `κ(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionCurve {
    pub times: Vec<Real>,
    pub c: Vec<Real>,
    pub p: Vec<Real>,
    pub kappa: Vec<Real>,
    pub method: CurveMethod,
}

impl EvolutionCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `t,C,P,kappa,method`, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,C,P,kappa,method\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv(self.times[i]),
                csv(self.c[i]),
                csv(self.p[i]),
                csv(self.kappa[i]),
                self.method.as_str()
            );
        }
        out
    }
}

/// Checks that `times` is finite, non-negative and strictly increasing.
pub fn validate_times(times: &[Real]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "times must be finite and ≥ 0".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `t_0 = 0, dt, 2dt, …` up to and including `t_max` (within rounding).
pub fn time_grid(t_max: Real, dt: Real) -> Result<Vec<Real>> {
    if !(t_max >= 0.0 && t_max.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument("need t_max ≥ 0 and dt > 0".into()));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|j| j as Real * dt).collect())
}

/// `C, P, κ` from the characteristic-function moment integrals at each time.
pub fn evolve_exact(
    state: &State,
    channel: &ChannelParams,
    times: &[Real],
    settings: &QuadSettings,
) -> Result<EvolutionCurve> {
    validate_times(times)?;
    let moments = times
        .par_iter()
        .map(|&t| radial_moments_at(state, channel, t, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionCurve {
        times: times.to_vec(),
        c: moments.iter().map(|m| m.qcs_squared().sqrt()).collect(),
        p: moments.iter().map(|m| m.purity()).collect(),
        kappa: moments.iter().map(|m| m.kappa()).collect(),
        method: CurveMethod::ExactIntegral,
    })
}

/// Propagates Gaussian moments:
/// `V(t) = e^{−s} R V Rᵀ + (2n̄_∞+1)(1 − e^{−s}) 1`, mean `e^{−s/2} R mean`,
/// `s = t/t_R`, with `R` the phase-space rotation by `−ωt` (so that
/// `⟨a⟩(t) ∝ e^{−iωt}`).
pub fn evolve_gaussian(
    moments: &GaussianMoments,
    channel: &ChannelParams,
    t: Real,
) -> Result<GaussianMoments> {
    let m = GaussianMoments::new(moments.v, moments.mean)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and ≥ 0, got {t}"
        )));
    }
    let s = t / channel.t_r();
    let decay = (-s).exp();
    let fill = channel.thermal_factor() * -(-s).exp_m1();
    let (sn, cs) = (-channel.omega() * t).sin_cos();
    let r = [[cs, -sn], [sn, cs]];
    let mut rv = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            rv[i][j] = r[i][0] * m.v[0][j] + r[i][1] * m.v[1][j];
        }
    }
    let mut v = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let rvr = rv[i][0] * r[j][0] + rv[i][1] * r[j][1];
            v[i][j] = decay * rvr + if i == j { fill } else { 0.0 };
        }
    }
    v[1][0] = v[0][1];
    let half = (-0.5 * s).exp();
    let mean = [
        half * (r[0][0] * m.mean[0] + r[0][1] * m.mean[1]),
        half * (r[1][0] * m.mean[0] + r[1][1] * m.mean[1]),
    ];
    Ok(GaussianMoments { v, mean })
}

/// Closed-form Gaussian curve: `V(t)` then `C² = ½Tr V⁻¹`, `P = 1/√det V`.
pub fn gaussian_curve(
    moments: &GaussianMoments,
    channel: &ChannelParams,
    times: &[Real],
) -> Result<EvolutionCurve> {
    validate_times(times)?;
    let vs = times
        .iter()
        .map(|&t| evolve_gaussian(moments, channel, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionCurve {
        times: times.to_vec(),
        c: vs
            .iter()
            .map(|g| closed_form::gaussian_qcs_squared(g.v).sqrt())
            .collect(),
        p: vs
            .iter()
            .map(|g| closed_form::gaussian_purity(g.v))
            .collect(),
        kappa: vs
            .iter()
            .map(|g| closed_form::gaussian_kappa(g.v))
            .collect(),
        method: CurveMethod::ClosedFormGaussian,
    })
}

/// Fock-basis integration of the master equation up to `t` with fixed RK4
/// step `dt` (both in time units).
pub fn evolve_fock_oracle(
    matrix: &FockDensityMatrix,
    channel: &ChannelParams,
    t: Real,
    dt: Real,
) -> Result<FockDensityMatrix> {
    Ok(evolve_fock_oracle_times(matrix, channel, &[t], dt)?
        .pop()
        .expect("one snapshot"))
}

/// Fock-basis integration with snapshots at each of `times`.
///
/// Superdiagonal bands `ρ_{n,n+k}` evolve independently under the
/// dissipator; the rotation only contributes the phase `e^{iωkt}`. The
/// probability pumped out of the top level is accumulated and checked against
/// [`ORACLE_LEAK_TOL`].
pub fn evolve_fock_oracle_times(
    matrix: &FockDensityMatrix,
    channel: &ChannelParams,
    times: &[Real],
    dt: Real,
) -> Result<Vec<FockDensityMatrix>> {
    validate_times(times)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be > 0, got {dt}"
        )));
    }
    let n = matrix.dim();
    let bands: Vec<usize> = matrix.nonzero_bands().to_vec();
    let results = bands
        .par_iter()
        .map(|&k| evolve_band(matrix, channel, k, times, dt))
        .collect::<Result<Vec<_>>>()?;
    let zero = Complex::new(0.0, 0.0);
    let mut out: Vec<Vec<Complex>> = vec![vec![zero; n * n]; times.len()];
    for (&k, snaps) in bands.iter().zip(results) {
        for (ti, band) in snaps.into_iter().enumerate() {
            let phase = Complex::from_polar(1.0, channel.omega() * k as Real * times[ti]);
            for (i, z) in band.into_iter().enumerate() {
                let z = if k == 0 {
                    Complex::new(z.re, 0.0)
                } else {
                    z * phase
                };
                out[ti][i * n + i + k] = z;
                out[ti][(i + k) * n + i] = z.conj();
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|data| FockDensityMatrix::from_raw(n, data))
        .collect())
}

/// Integrates one band; returns the band at each snapshot time.
fn evolve_band(
    matrix: &FockDensityMatrix,
    channel: &ChannelParams,
    k: usize,
    times: &[Real],
    dt: Real,
) -> Result<Vec<Vec<Complex>>> {
    let n = matrix.dim();
    let len = n - k;
    let (g, d) = (channel.gamma(), channel.delta());
    let kf = k as Real;
    let up: Vec<Real> = (0..len)
        .map(|i| g * ((i as Real + 1.0) * (i as Real + kf + 1.0)).sqrt())
        .collect();
    let down: Vec<Real> = (0..len)
        .map(|i| d * (i as Real * (i as Real + kf)).sqrt())
        .collect();
    let diag: Vec<Real> = (0..len)
        .map(|i| {
            let s = 2.0 * i as Real + kf;
            -0.5 * g * s - 0.5 * d * (s + 2.0)
        })
        .collect();
    let top_out = d * n as Real;
    let apply = |c: &[Real], out: &mut [Real]| {
        for i in 0..len {
            let mut v = diag[i] * c[i];
            if i + 1 < len {
                v += up[i] * c[i + 1];
            }
            if i > 0 {
                v += down[i] * c[i - 1];
            }
            out[i] = v;
        }
    };

    let init: Vec<Complex> = (0..len).map(|i| matrix.get(i, i + k)).collect();
    let mut parts: Vec<Vec<Real>> = Vec::new();
    let has_re = init.iter().any(|z| z.re != 0.0);
    let has_im = init.iter().any(|z| z.im != 0.0);
    if has_re {
        parts.push(init.iter().map(|z| z.re).collect());
    }
    if has_im {
        parts.push(init.iter().map(|z| z.im).collect());
    }
    let track_leak = k == 0;
    let mut leaked = 0.0;
    let mut snaps = Vec::with_capacity(times.len());
    let mut now = 0.0;
    let mut scratch: [Vec<Real>; 5] = std::array::from_fn(|_| vec![0.0; len]);
    for &target in times {
        let span = target - now;
        let steps = (span / dt).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = span / steps as Real;
            for part in parts.iter_mut() {
                let leak = rk4_band(part, &apply, h, steps, top_out, &mut scratch);
                if track_leak {
                    leaked += leak;
                }
            }
        }
        now = target;
        if track_leak {
            let trace: Real = parts.first().map_or(0.0, |p| p.iter().sum());
            if leaked > ORACLE_LEAK_TOL {
                return Err(Error::CutoffTooSmall(format!(
                    "{leaked:e} probability leaked above level {} by t = {target}",
                    n - 1
                )));
            }
            let drift = (trace + leaked - 1.0).abs() - (matrix.trace() - 1.0).abs();
            if !(drift <= ORACLE_DRIFT_TOL) {
                return Err(Error::StepTooLarge(format!(
                    "trace drift {drift:e} at t = {target} with step {dt}"
                )));
            }
        }
        let mut band = vec![Complex::new(0.0, 0.0); len];
        let mut it = parts.iter();
        if has_re {
            let p = it.next().expect("real part");
            band.iter_mut().zip(p).for_each(|(z, v)| z.re = *v);
        }
        if has_im {
            let p = it.next().expect("imaginary part");
            band.iter_mut().zip(p).for_each(|(z, v)| z.im = *v);
        }
        snaps.push(band);
    }
    Ok(snaps)
}

/// `steps` RK4 steps of `ċ = A c`; returns the integral of `top_out·c_last`.
fn rk4_band(
    c: &mut [Real],
    apply: &impl Fn(&[Real], &mut [Real]),
    h: Real,
    steps: usize,
    top_out: Real,
    scratch: &mut [Vec<Real>; 5],
) -> Real {
    let len = c.len();
    let last = len - 1;
    let [k1, k2, k3, k4, tmp] = scratch;
    let mut leaked = 0.0;
    for _ in 0..steps {
        apply(c, k1);
        for i in 0..len {
            tmp[i] = c[i] + 0.5 * h * k1[i];
        }
        let l2 = tmp[last];
        apply(tmp, k2);
        for i in 0..len {
            tmp[i] = c[i] + 0.5 * h * k2[i];
        }
        let l3 = tmp[last];
        apply(tmp, k3);
        for i in 0..len {
            tmp[i] = c[i] + h * k3[i];
        }
        let l4 = tmp[last];
        apply(tmp, k4);
        leaked += top_out * h / 6.0 * (c[last] + 2.0 * l2 + 2.0 * l3 + l4);
        for i in 0..len {
            c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    leaked
}

/// Cutoff used for the oracle: the auto-converged cutoff plus 20 % headroom.
pub fn oracle_matrix(state: &State) -> Result<FockDensityMatrix> {
    let (rho, _) = state.to_fock_matrix_auto()?;
    let padded = ((rho.dim() as Real) * 1.2).ceil() as usize + 4;
    Ok(rho.resized(padded))
}

/// Curve from the Fock oracle: `C²` and `κ` from commutator traces of the
/// evolved matrix, `P = Tr ρ²`.
pub fn oracle_curve(
    state: &State,
    channel: &ChannelParams,
    times: &[Real],
    dt: Real,
) -> Result<EvolutionCurve> {
    let rho = oracle_matrix(state)?;
    let snaps = evolve_fock_oracle_times(&rho, channel, times, dt)?;
    let mut curve = EvolutionCurve {
        times: times.to_vec(),
        c: Vec::new(),
        p: Vec::new(),
        kappa: Vec::new(),
        method: CurveMethod::FockOracle,
    };
    for m in &snaps {
        let [j0, j1, j2] = commutator_moments(m);
        curve.c.push((j1 / j0).sqrt());
        curve.p.push(j0);
        curve.kappa.push(j2 * j0 / (j1 * j1) - 1.0);
    }
    Ok(curve)
}

/// `κ(t)` fed to the effective ODE.
#[derive(Clone, Debug, PartialEq)]
pub enum KappaPath {
    Constant(Real),
    /// Piecewise-linear interpolation of samples (held constant outside).
    Sampled {
        times: Vec<Real>,
        values: Vec<Real>,
    },
}

impl KappaPath {
    pub fn at(&self, t: Real) -> Real {
        match self {
            KappaPath::Constant(k) => *k,
            KappaPath::Sampled { times, values } => {
                let j = times.partition_point(|&x| x <= t);
                if j == 0 {
                    values[0]
                } else if j == times.len() {
                    values[j - 1]
                } else {
                    let (t0, t1) = (times[j - 1], times[j]);
                    let w = (t - t0) / (t1 - t0);
                    values[j - 1] * (1.0 - w) + values[j] * w
                }
            }
        }
    }
}

/// How [`ode_curve`] integrates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OdeSolver {
    /// Closed-form solution; requires a constant κ.
    ClosedForm,
    /// Fixed-step RK4 with step `dt` (time units).
    Rk4 { dt: Real },
}

/// Integrates `d(C²)/dt = (1/t_R)[1 − κ(t)(2n̄_∞+1)C²]C²` and
/// `Ṗ = (1/t_R)[1 − (2n̄_∞+1)C²]P`.
pub fn ode_curve(
    c0: Real,
    p0: Real,
    kappa: &KappaPath,
    channel: &ChannelParams,
    times: &[Real],
    solver: OdeSolver,
) -> Result<EvolutionCurve> {
    validate_times(times)?;
    if !(c0 > 0.0) || !(p0 > 0.0 && p0 <= 1.0) {
        return Err(Error::InvalidArgument("need C₀ > 0 and 0 < P₀ ≤ 1".into()));
    }
    if let KappaPath::Sampled { times: ts, values } = kappa {
        if ts.is_empty() || ts.len() != values.len() {
            return Err(Error::InvalidArgument(
                "κ samples must be non-empty and paired".into(),
            ));
        }
    }
    let t_r = channel.t_r();
    let g = channel.thermal_factor();
    let c0_sq = c0 * c0;
    let mut curve = EvolutionCurve {
        times: times.to_vec(),
        c: Vec::with_capacity(times.len()),
        p: Vec::with_capacity(times.len()),
        kappa: times.iter().map(|&t| kappa.at(t)).collect(),
        method: CurveMethod::Ode,
    };
    match solver {
        OdeSolver::ClosedForm => {
            let KappaPath::Constant(k0) = *kappa else {
                return Err(Error::InvalidArgument(
                    "closed form needs a constant κ".into(),
                ));
            };
            let nbar = channel.nbar_inf();
            for &t in times {
                let s = t / t_r;
                curve
                    .c
                    .push(closed_form::frozen_kappa_qcs_squared(c0_sq, k0, nbar, s).sqrt());
                curve
                    .p
                    .push(closed_form::frozen_kappa_purity(p0, c0_sq, k0, nbar, s));
            }
        }
        OdeSolver::Rk4 { dt } => {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "step must be > 0, got {dt}"
                )));
            }
            // State (C², ln P).
            let rhs = |t: Real, y: [Real; 2]| -> [Real; 2] {
                let u = y[0];
                [(1.0 - kappa.at(t) * g * u) * u / t_r, (1.0 - g * u) / t_r]
            };
            let mut y = [c0_sq, p0.ln()];
            let mut now = 0.0;
            for &target in times {
                let span = target - now;
                let steps = (span / dt).ceil().max(0.0) as usize;
                if steps > 0 {
                    let h = span / steps as Real;
                    for j in 0..steps {
                        let t = now + j as Real * h;
                        let k1 = rhs(t, y);
                        let k2 = rhs(
                            t + 0.5 * h,
                            [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]],
                        );
                        let k3 = rhs(
                            t + 0.5 * h,
                            [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]],
                        );
                        let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
                        for i in 0..2 {
                            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                        }
                    }
                }
                now = target;
                curve.c.push(y[0].sqrt());
                curve.p.push(y[1].exp());
            }
        }
    }
    Ok(curve)
}

/// Exact and approximate half-lives with applicability notes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct HalfLifeReport {
    pub tau_C_exact: Option<Real>,
    pub tau_P_exact: Option<Real>,
    pub tau_1_exact: Option<Real>,
    pub tau_C_approx: Option<Real>,
    pub tau_P_approx: Option<Real>,
    pub tau_C_gaussian_approx: Option<Real>,
    pub tau_P_gaussian_approx: Option<Real>,
    pub tau_1_gaussian_approx: Option<Real>,
    pub tau_C_gaussian_log: Option<Real>,
    pub tau_P_gaussian_log: Option<Real>,
    pub tau_1_gaussian_log: Option<Real>,
    /// Reason for every field left empty.
    pub not_applicable: BTreeMap<String, String>,
    pub c0: Real,
    pub c0_squared: Real,
    pub kappa0: Real,
    pub purity0: Real,
    pub nbar_inf: Real,
    pub t_r: Real,
    pub tolerance: Real,
}

/// Half-lives of `state` under `channel` with the default tolerance.
pub fn halflife(
    state: &State,
    channel: &ChannelParams,
    settings: &QuadSettings,
) -> Result<HalfLifeReport> {
    halflife_with_tol(state, channel, settings, HALFLIFE_TOL * channel.t_r())
}

/// Half-lives with the exact values bracketed to `tol` (time units).
pub fn halflife_with_tol(
    state: &State,
    channel: &ChannelParams,
    settings: &QuadSettings,
    tol: Real,
) -> Result<HalfLifeReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be > 0".into()));
    }
    let m0 = radial_moments_at(state, channel, 0.0, settings)?;
    let (c0_sq, kappa0, p0) = (m0.qcs_squared(), m0.kappa(), m0.purity());
    let t_r = channel.t_r();
    let nbar = channel.nbar_inf();
    let g = channel.thermal_factor();
    let mut na = BTreeMap::new();
    let mut note = |key: &str, why: String| {
        na.insert(key.to_string(), why);
    };

    let c2_at = |t: Real| radial_moments_at(state, channel, t, settings).map(|m| m.qcs_squared());
    let p_at = |t: Real| radial_moments_at(state, channel, t, settings).map(|m| m.purity());
    let mut exact = |key: &str, f: &dyn Fn(Real) -> Result<Real>, target: Real| match first_crossing(
        f, target, t_r, tol,
    ) {
        Ok(t) => Some(t),
        Err(Error::RootNotBracketed(why)) => {
            note(key, why);
            None
        }
        Err(e) => {
            note(key, e.to_string());
            None
        }
    };
    let tau_c = exact("tau_C_exact", &c2_at, c0_sq / 4.0);
    let tau_p = exact("tau_P_exact", &p_at, p0 / 2.0);
    let tau_1 = if c0_sq > 1.0 {
        exact("tau_1_exact", &c2_at, 1.0)
    } else {
        na.insert("tau_1_exact".into(), format!("C₀² = {c0_sq} ≤ 1"));
        None
    };

    let mut approx = |key: &str, ok: bool, cond: &str, value: Real| {
        if ok && value > 0.0 && value.is_finite() {
            Some(value * t_r)
        } else {
            na.insert(key.into(), format!("requires {cond}"));
            None
        }
    };
    let tau_c_approx = approx(
        "tau_C_approx",
        c0_sq > 1.0 && g * c0_sq > 4.0 && kappa0 * g * c0_sq > 1.0,
        "C₀² > 1, (2n̄_∞+1)C₀² > 4 and κ₀(2n̄_∞+1)C₀² > 1",
        closed_form::qcs_halflife_linear(c0_sq, kappa0, nbar),
    );
    let tau_p_approx = approx(
        "tau_P_approx",
        c0_sq > 1.0,
        "C₀² > 1",
        closed_form::purity_halflife_linear(c0_sq, nbar),
    );
    let gaussian = state.is_gaussian();
    let l = c0_sq * kappa0 * g;
    let two_k = (2.0 as Real).powf(kappa0);
    let gauss = |ok: bool| gaussian && ok;
    let c_g_ok = gauss(l > 4.0);
    let p_g_ok = gauss(g * c0_sq > two_k);
    let one_g_ok = gauss(c0_sq > 1.0 && kappa0 * g > 1.0);
    let c_cond = "a Gaussian state with κ₀(2n̄_∞+1)C₀² > 4";
    let p_cond = "a Gaussian state with (2n̄_∞+1)C₀² > 2^κ₀";
    let one_cond = "a Gaussian state with C₀² > 1 and κ₀(2n̄_∞+1) > 1";
    let tau_c_g = approx(
        "tau_C_gaussian_approx",
        c_g_ok,
        c_cond,
        closed_form::gaussian_qcs_halflife(c0_sq, kappa0, nbar),
    );
    let tau_c_g_log = approx(
        "tau_C_gaussian_log",
        c_g_ok,
        c_cond,
        closed_form::gaussian_qcs_halflife_log(c0_sq, kappa0, nbar),
    );
    let tau_p_g = approx(
        "tau_P_gaussian_approx",
        p_g_ok,
        p_cond,
        closed_form::gaussian_purity_halflife(c0_sq, kappa0, nbar),
    );
    let tau_p_g_log = approx(
        "tau_P_gaussian_log",
        p_g_ok,
        p_cond,
        closed_form::gaussian_purity_halflife_log(c0_sq, kappa0, nbar),
    );
    let tau_1_g = approx(
        "tau_1_gaussian_approx",
        one_g_ok,
        one_cond,
        closed_form::gaussian_unit_qcs_time(c0_sq, kappa0, nbar),
    );
    let tau_1_g_log = approx(
        "tau_1_gaussian_log",
        one_g_ok,
        one_cond,
        closed_form::gaussian_unit_qcs_time_log(c0_sq, kappa0, nbar),
    );
    Ok(HalfLifeReport {
        tau_C_exact: tau_c,
        tau_P_exact: tau_p,
        tau_1_exact: tau_1,
        tau_C_approx: tau_c_approx,
        tau_P_approx: tau_p_approx,
        tau_C_gaussian_approx: tau_c_g,
        tau_P_gaussian_approx: tau_p_g,
        tau_1_gaussian_approx: tau_1_g,
        tau_C_gaussian_log: tau_c_g_log,
        tau_P_gaussian_log: tau_p_g_log,
        tau_1_gaussian_log: tau_1_g_log,
        not_applicable: na,
        c0: c0_sq.sqrt(),
        c0_squared: c0_sq,
        kappa0,
        purity0: p0,
        nbar_inf: nbar,
        t_r,
        tolerance: tol,
    })
}

/// First `t > 0` with `f(t) = target`, given `f(0) > target`.
///
/// The bracket `[0, T]` starts at `T = t_R` and doubles; inside it a scan on
/// nodes clustered towards `t = 0` finds the first sign change, which is
/// then bisected to width `tol`.
pub fn first_crossing(
    f: &dyn Fn(Real) -> Result<Real>,
    target: Real,
    t_r: Real,
    tol: Real,
) -> Result<Real> {
    const SCAN: usize = 64;
    const DOUBLINGS: usize = 6;
    let f0 = f(0.0)? - target;
    if f0 <= 0.0 {
        return Err(Error::RootNotBracketed(format!(
            "initial value is already at or below the target {target}"
        )));
    }
    let mut span = t_r;
    let mut start = 0.0;
    for _ in 0..=DOUBLINGS {
        let mut prev = start;
        for j in 1..=SCAN {
            let u = j as Real / SCAN as Real;
            let t = start + (span - start) * u * u;
            if f(t)? - target <= 0.0 {
                let (mut lo, mut hi) = (prev, t);
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    if f(mid)? - target > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
            prev = t;
        }
        start = span;
        span *= 2.0;
    }
    Err(Error::RootNotBracketed(format!(
        "target {target} not reached within {} t_R",
        start / t_r
    )))
}

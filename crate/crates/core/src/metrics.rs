//! QCS, purity and κ through independent routes: characteristic-function
//! moments, number-basis commutator traces and Gaussian closed forms.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::charfn::{radial_moments_at, QuadSettings};
use crate::closed_form;
use crate::error::{Error, Result};
use crate::states::{FockDensityMatrix, GaussianMoments, Repr, State};
use crate::{Complex, Real};

/// Population threshold for the last two levels of a commutator matrix.
pub const COMMUTATOR_MARGIN: Real = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QcsMethod {
    ChiMoments,
    Commutator,
    GaussianClosedForm,
    WignerGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QcsReport {
    #[serde(rename = "C")]
    pub c: Real,
    #[serde(rename = "C_squared")]
    pub c_squared: Real,
    #[serde(rename = "P")]
    pub purity: Real,
    pub kappa: Option<Real>,
    pub method: QcsMethod,
    /// `ΔX² + ΔP²`.
    pub total_noise: Option<Real>,
}

impl QcsReport {
    fn new(c_squared: Real, purity: Real, kappa: Option<Real>, method: QcsMethod) -> Self {
        Self {
            c: c_squared.sqrt(),
            c_squared,
            purity,
            kappa,
            method,
            total_noise: None,
        }
    }
}

/// Canonical QCS report from the characteristic-function moments at `t = 0`.
pub fn qcs(state: &State) -> Result<QcsReport> {
    qcs_with(state, &QuadSettings::default())
}

pub fn qcs_with(state: &State, settings: &QuadSettings) -> Result<QcsReport> {
    let m = radial_moments_at(state, &ChannelParams::default(), 0.0, settings)?;
    let mut r = QcsReport::new(
        m.qcs_squared(),
        m.purity(),
        Some(m.kappa()),
        QcsMethod::ChiMoments,
    );
    r.total_noise = Some(state.total_noise());
    Ok(r)
}

/// `‖[ρ, X]‖²_HS` and `‖[ρ, P]‖²_HS`, exact for the given finite matrix.
pub fn commutator_norms(rho: &FockDensityMatrix) -> (Real, Real) {
    let n = rho.dim();
    let get = |m: usize, k: usize| {
        if m < n && k < n {
            rho.get(m, k)
        } else {
            Complex::new(0.0, 0.0)
        }
    };
    let i = Complex::new(0.0, 1.0);
    let h = |j: usize| (j as Real / 2.0).sqrt();
    let (mut sx, mut sp) = (0.0, 0.0);
    // The commutators are supported on one extra level.
    for m in 0..=n {
        for k in 0..=n {
            let left = if k > 0 {
                get(m, k - 1)
            } else {
                Complex::new(0.0, 0.0)
            };
            let right = get(m, k + 1);
            let above = if m > 0 {
                get(m - 1, k)
            } else {
                Complex::new(0.0, 0.0)
            };
            let below = get(m + 1, k);
            let rx = left * h(k) + right * h(k + 1);
            let xr = above * h(m) + below * h(m + 1);
            let rp = -i * left * h(k) + i * right * h(k + 1);
            let pr = i * above * h(m) - i * below * h(m + 1);
            sx += (rx - xr).norm_sqr();
            sp += (rp - pr).norm_sqr();
        }
    }
    (sx, sp)
}

/// `(C_X², C_P²) = (‖[ρ,X]‖², ‖[ρ,P]‖²)/Tr ρ²`.
pub fn quadrature_scales(rho: &FockDensityMatrix) -> (Real, Real) {
    let (sx, sp) = commutator_norms(rho);
    let p = rho.purity();
    (sx / p, sp / p)
}

/// QCS from commutator traces with `X` and `P`; κ is not populated.
pub fn qcs_commutator(rho: &FockDensityMatrix) -> Result<QcsReport> {
    let (cx, cp) = quadrature_scales(rho);
    let mut r = QcsReport::new(0.5 * (cx + cp), rho.purity(), None, QcsMethod::Commutator);
    r.total_noise = Some(rho.total_noise());
    Ok(r)
}

/// Number-basis matrix of `state` whose last two populations are below
/// [`COMMUTATOR_MARGIN`] and whose trace deficit is below the auto target.
pub fn commutator_matrix(state: &State) -> Result<FockDensityMatrix> {
    let (mut rho, _) = state.to_fock_matrix_auto()?;
    if matches!(state.repr(), Repr::Matrix(_)) {
        return Ok(rho);
    }
    loop {
        let n = rho.dim();
        let tail = rho
            .get(n - 1, n - 1)
            .re
            .max(if n > 1 { rho.get(n - 2, n - 2).re } else { 0.0 });
        if tail < COMMUTATOR_MARGIN {
            return Ok(rho);
        }
        if n >= crate::states::MAX_CUTOFF {
            return Err(Error::CutoffTooSmall(format!(
                "populations near level {n} stay above {COMMUTATOR_MARGIN:e}"
            )));
        }
        let next = (n + n / 4 + 1).min(crate::states::MAX_CUTOFF);
        rho = state.to_fock_matrix(next)?.0;
    }
}

/// Commutator route applied to a state.
pub fn qcs_commutator_state(state: &State) -> Result<QcsReport> {
    qcs_commutator(&commutator_matrix(state)?)
}

/// `I_k/π` for `k = 0, 1, 2` from Hilbert–Schmidt norms:
/// `Tr ρ²`, `‖[ρ, a]‖²` and `‖[[ρ, a†], a]‖²` (since `ξχ_ρ = χ_{[ρ,a]}` and
/// `ξ*χ_ρ = χ_{[ρ,a†]}`).
pub fn commutator_moments(rho: &FockDensityMatrix) -> [Real; 3] {
    let n = rho.dim();
    let d = n + 2;
    let zero = Complex::new(0.0, 0.0);
    let mut base = vec![zero; d * d];
    for m in 0..n {
        for k in 0..n {
            base[m * d + k] = rho.get(m, k);
        }
    }
    let sq: Vec<Real> = (0..=d).map(|j| (j as Real).sqrt()).collect();
    let at = |v: &[Complex], m: usize, k: usize| if m < d && k < d { v[m * d + k] } else { zero };
    // [M, a]_{mk} = M_{m,k−1}√k − √(m+1) M_{m+1,k}
    let comm_a = |v: &[Complex]| -> Vec<Complex> {
        let mut out = vec![zero; d * d];
        for m in 0..d {
            for k in 0..d {
                let left = if k > 0 { at(v, m, k - 1) * sq[k] } else { zero };
                out[m * d + k] = left - at(v, m + 1, k) * sq[m + 1];
            }
        }
        out
    };
    // [M, a†]_{mk} = M_{m,k+1}√(k+1) − √m M_{m−1,k}
    let comm_ad = |v: &[Complex]| -> Vec<Complex> {
        let mut out = vec![zero; d * d];
        for m in 0..d {
            for k in 0..d {
                let up = if m > 0 { at(v, m - 1, k) * sq[m] } else { zero };
                out[m * d + k] = at(v, m, k + 1) * sq[k + 1] - up;
            }
        }
        out
    };
    let hs = |v: &[Complex]| v.iter().map(|z| z.norm_sqr()).sum::<Real>();
    let first = comm_a(&base);
    let second = comm_a(&comm_ad(&base));
    [hs(&base), hs(&first), hs(&second)]
}

/// Closed-form Gaussian report: `C² = ½Tr V⁻¹`, `P = 1/√det V`,
/// `κ = 2 − det V/(Tr V/2)²`.
pub fn qcs_gaussian(moments: &GaussianMoments) -> Result<QcsReport> {
    let g = GaussianMoments::new(moments.v, moments.mean)?;
    let mut r = QcsReport::new(
        closed_form::gaussian_qcs_squared(g.v),
        closed_form::gaussian_purity(g.v),
        Some(closed_form::gaussian_kappa(g.v)),
        QcsMethod::GaussianClosedForm,
    );
    r.total_noise = Some(0.5 * g.trace());
    Ok(r)
}

/// Per-quadrature coherence scales `(C_{X_θ}², C_{P_θ}²)` of a state, from
/// commutator traces of the rotated number-basis matrix.
pub fn qcs_theta(state: &State, theta: Real) -> Result<(Real, Real)> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument("θ must be finite".into()));
    }
    Ok(quadrature_scales(&commutator_matrix(state)?.rotated(theta)))
}

/// κ from the closed forms available for Fock, cat and Gaussian states.
pub fn closed_form_kappa(state: &State) -> Result<Real> {
    match state.repr() {
        Repr::Fock(n) => Ok(closed_form::fock_kappa(*n)),
        Repr::Cat { alpha, .. } => Ok(closed_form::cat_kappa(alpha.norm_sqr())),
        _ => match state.gaussian_moments() {
            Some(g) => Ok(closed_form::gaussian_kappa(g.v)),
            None => Err(Error::UnsupportedFamily(format!(
                "no closed-form κ for family `{}`",
                state.spec().family_name()
            ))),
        },
    }
}

/// Bounds `(max(C − 1, 0), C)` on the distance to the optical-classical set.
pub fn nonclassicality_bounds(c: Real) -> (Real, Real) {
    ((c - 1.0).max(0.0), c)
}

/// Smallest quadrature variance `min_θ ΔX_θ²`, the smaller eigenvalue of `V/2`.
pub fn min_quadrature_variance(moments: &GaussianMoments) -> Real {
    0.5 * moments.eigenvalues()[0]
}

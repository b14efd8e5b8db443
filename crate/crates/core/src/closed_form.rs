//! Closed-form values for the analytic state families and the approximate
//! half-life formulas.
//!
//! Everything here is generic over the scalar: the integer-parameter formulas
//! accept any field (`f64`, `Ratio<i64>`, ...) so they can be checked exactly,
//! the transcendental ones any [`Float`].

use num_traits::{Float, FromPrimitive, Num};

fn lit<T: FromPrimitive>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

fn int<T: FromPrimitive>(v: u64) -> T {
    T::from_u64(v).expect("integer representable in scalar type")
}

/// `C² = 2n + 1` for the Fock state `|n⟩`.
pub fn fock_qcs_squared<T: Num + FromPrimitive>(n: u64) -> T {
    int::<T>(2 * n + 1)
}

/// `κ_n = (2n² + 2n + 1)/(4n² + 4n + 1)` for the Fock state `|n⟩`.
pub fn fock_kappa<T: Num + FromPrimitive>(n: u64) -> T {
    int::<T>(2 * n * n + 2 * n + 1) / int::<T>(4 * n * n + 4 * n + 1)
}

/// `C² = 2M + 3` for the even mixture `ρ_M`.
pub fn even_mixture_qcs_squared<T: Num + FromPrimitive>(m: u64) -> T {
    int::<T>(2 * m + 3)
}

/// `P = 1/M` for the even mixture `ρ_M`.
pub fn even_mixture_purity<T: Num + FromPrimitive>(m: u64) -> T {
    T::one() / int::<T>(m)
}

/// `C² = 1/(1 + 2n̄)` for a thermal state.
pub fn thermal_qcs_squared<T: Float>(nbar: T) -> T {
    T::one() / (T::one() + nbar + nbar)
}

/// `C² = 1 + 2a tanh a` for the even cat state, `a = |α|²`.
pub fn cat_qcs_squared<T: Float>(a: T) -> T {
    T::one() + (a + a) * a.tanh()
}

/// `κ_α = 1 + 4a²/(cosh a + 2a sinh a)²` for the even cat state, `a = |α|²`.
pub fn cat_kappa<T: Float + FromPrimitive>(a: T) -> T {
    let d = a.cosh() + (a + a) * a.sinh();
    T::one() + lit::<T>(4.0) * a * a / (d * d)
}

/// Solves `1 + 2a tanh a = c2` for `a = |α|² ≥ 0` (requires `c2 ≥ 1`).
pub fn cat_intensity_for_qcs_squared<T: Float + FromPrimitive>(c2: T) -> Option<T> {
    if !(c2 >= T::one()) || !c2.is_finite() {
        return None;
    }
    let target = (c2 - T::one()) / lit(2.0);
    if target == T::zero() {
        return Some(T::zero());
    }
    // a tanh a is increasing on [0, ∞) and bounded below by a − 1.
    let f = |a: T| a * a.tanh() - target;
    let mut lo = T::zero();
    let mut hi = target + T::one();
    let mut a = hi;
    for _ in 0..200 {
        a = (lo + hi) / lit(2.0);
        if f(a) > T::zero() {
            hi = a;
        } else {
            lo = a;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    // Newton polish.
    for _ in 0..3 {
        let sech = T::one() / a.cosh();
        let df = a.tanh() + a * sech * sech;
        a = a - f(a) / df;
    }
    Some(a)
}

/// Gaussian QCS squared `½ Tr V⁻¹`.
pub fn gaussian_qcs_squared<T: Float>(v: [[T; 2]; 2]) -> T {
    let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    (v[0][0] + v[1][1]) / (det + det)
}

/// Gaussian purity `1/√det V`.
pub fn gaussian_purity<T: Float>(v: [[T; 2]; 2]) -> T {
    let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    T::one() / det.sqrt()
}

/// `κ_G = 2 − det V/(σ_x² + σ_p²)²` with `σ_x² + σ_p² = Tr V/2`.
pub fn gaussian_kappa<T: Float>(v: [[T; 2]; 2]) -> T {
    let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    let half_trace = (v[0][0] + v[1][1]) / (T::one() + T::one());
    T::one() + T::one() - det / (half_trace * half_trace)
}

/// Solution of the QCS ODE with frozen κ:
/// `C²(s) = C₀²/(e^{−s} + C₀²κ₀(2n̄_∞+1)(1 − e^{−s}))`, `s = t/t_R`.
pub fn frozen_kappa_qcs_squared<T: Float>(c0_sq: T, kappa0: T, nbar_inf: T, s: T) -> T {
    let e = (-s).exp();
    let g = nbar_inf + nbar_inf + T::one();
    c0_sq / (e + c0_sq * kappa0 * g * (T::one() - e))
}

/// Purity companion of [`frozen_kappa_qcs_squared`]:
/// `P(s) = P₀ e^{s}(1 + L(e^{s} − 1))^{−1/κ₀}` with `L = C₀²κ₀(2n̄_∞+1)`.
pub fn frozen_kappa_purity<T: Float>(p0: T, c0_sq: T, kappa0: T, nbar_inf: T, s: T) -> T {
    let l = c0_sq * kappa0 * (nbar_inf + nbar_inf + T::one());
    let es = s.exp();
    p0 * es * (T::one() + l * (es - T::one())).powf(-T::one() / kappa0)
}

/// Linearised QCS half-life `t_R/(κ₀(2n̄_∞+1)C₀² − 1)`, in units of `t_R`.
pub fn qcs_halflife_linear<T: Float>(c0_sq: T, kappa0: T, nbar_inf: T) -> T {
    T::one() / (kappa0 * (nbar_inf + nbar_inf + T::one()) * c0_sq - T::one())
}

/// Linearised purity half-life `½ t_R/((2n̄_∞+1)C₀² − 1)`, in units of `t_R`.
pub fn purity_halflife_linear<T: Float>(c0_sq: T, nbar_inf: T) -> T {
    let half = T::one() / (T::one() + T::one());
    half / ((nbar_inf + nbar_inf + T::one()) * c0_sq - T::one())
}

/// Gaussian QCS half-life, leading order: `3/(C₀²κ₀(2n̄_∞+1) − 4)`.
pub fn gaussian_qcs_halflife<T: Float + FromPrimitive>(c0_sq: T, kappa0: T, nbar_inf: T) -> T {
    let l = c0_sq * kappa0 * (nbar_inf + nbar_inf + T::one());
    lit::<T>(3.0) / (l - lit(4.0))
}

/// Gaussian QCS half-life from the frozen-κ solution: `ln(1 + 3/(L − 4))`.
pub fn gaussian_qcs_halflife_log<T: Float + FromPrimitive>(c0_sq: T, kappa0: T, nbar_inf: T) -> T {
    gaussian_qcs_halflife(c0_sq, kappa0, nbar_inf).ln_1p()
}

/// Time to reach `C = 1` for a Gaussian state, leading order in `1/C₀²`:
/// `ln(g/(g − 1)) − 1/(C₀² g)`, `g = κ₀(2n̄_∞+1)`.
pub fn gaussian_unit_qcs_time<T: Float>(c0_sq: T, kappa0: T, nbar_inf: T) -> T {
    let g = kappa0 * (nbar_inf + nbar_inf + T::one());
    (g / (g - T::one())).ln() - T::one() / (c0_sq * g)
}

/// Time to reach `C = 1` from the frozen-κ solution:
/// `ln(1 + (1 − 1/C₀²)/(g − 1))`.
pub fn gaussian_unit_qcs_time_log<T: Float>(c0_sq: T, kappa0: T, nbar_inf: T) -> T {
    let g = kappa0 * (nbar_inf + nbar_inf + T::one());
    ((T::one() - T::one() / c0_sq) / (g - T::one())).ln_1p()
}

/// Gaussian purity half-life, leading order:
/// `(2^{κ₀} − 1)/(((2n̄_∞+1)C₀² − 2^{κ₀})κ₀)`.
pub fn gaussian_purity_halflife<T: Float>(c0_sq: T, kappa0: T, nbar_inf: T) -> T {
    let two_k = (T::one() + T::one()).powf(kappa0);
    (two_k - T::one()) / (((nbar_inf + nbar_inf + T::one()) * c0_sq - two_k) * kappa0)
}

/// Gaussian purity half-life before the final linearisation: `ln(1 + ...)`.
pub fn gaussian_purity_halflife_log<T: Float>(c0_sq: T, kappa0: T, nbar_inf: T) -> T {
    gaussian_purity_halflife(c0_sq, kappa0, nbar_inf).ln_1p()
}

//! Single-mode bosonic state numerics centred on the quadrature coherence
//! scale (QCS).
//!
//! The crate evaluates characteristic functions, QCS, purity and the moment
//! ratio κ of a state through several independent routes, evolves states
//! under the thermal Lindblad channel (closed-form characteristic-function
//! integrals, effective ODEs, Gaussian covariance propagation and a Fock-basis
//! integrator), and computes position kernels and Wigner functions.
//!
//! Conventions: ħ = 1, `X = (a† + a)/√2`, `P = i(a† − a)/√2`, so the vacuum
//! covariance matrix is the identity and `D(ξ) = exp(ξa† − ξ*a)`.
//!
//! Heavy numerics run on [`Real`] / [`Complex`]; the closed-form formulas in
//! [`closed_form`] are generic over the scalar type so that rational
//! identities can be checked exactly with [`Rational`].

pub mod channel;
pub mod charfn;
pub mod closed_form;
pub mod error;
pub mod metrics;
pub mod numfmt;
pub mod phase_space;
pub mod special;
pub mod states;

/// Real scalar used by the numerical routes.
pub type Real = f64;
/// Complex scalar used by the numerical routes.
pub type Complex = num_complex::Complex<Real>;
/// Exact scalar for rational closed forms.
pub type Rational = num_rational::Ratio<i64>;

pub use channel::{
    evolve_exact, evolve_fock_oracle, evolve_gaussian, halflife, ode_curve, ChannelParams,
    CurveMethod, EvolutionCurve, HalfLifeReport, KappaPath, OdeSolver, WeightConvention,
};
pub use charfn::{char_at, radial_moments_at, PhasePoint, QuadSettings, RadialMoments};
pub use error::{Error, Result};
pub use metrics::{
    closed_form_kappa, nonclassicality_bounds, qcs, qcs_commutator, qcs_gaussian, qcs_theta,
    QcsMethod, QcsReport,
};
pub use phase_space::{
    p_n, p_n_diag, position_kernel, qcs_wigner_gradient, wigner_grid, Grid2D, GridSpec,
    InterferenceReport,
};
pub use states::{build_state, FockDensityMatrix, GaussianMoments, State, StateSpec};

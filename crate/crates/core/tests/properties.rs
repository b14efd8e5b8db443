use std::f64::consts::PI;

use proptest::prelude::*;
use qcs_core::closed_form::{
    cat_kappa, fock_kappa, gaussian_kappa, gaussian_purity_halflife, gaussian_qcs_halflife,
    gaussian_qcs_squared,
};
use qcs_core::metrics::{min_quadrature_variance, qcs_with};
use qcs_core::*;

fn state(spec: StateSpec) -> State {
    build_state(spec).unwrap()
}

fn any_spec() -> impl Strategy<Value = StateSpec> {
    prop_oneof![
        (0u64..12).prop_map(StateSpec::fock),
        ((-2.0..2.0f64), (-2.0..2.0f64)).prop_map(|(a, b)| StateSpec::coherent(Complex::new(a, b))),
        ((-2.0..2.0f64), (-2.0..2.0f64))
            .prop_filter("non-zero amplitude", |(a, b)| a.hypot(*b) > 0.05)
            .prop_map(|(a, b)| StateSpec::cat(Complex::new(a, b))),
        (0.0..4.0f64).prop_map(StateSpec::thermal),
        (1u64..6).prop_map(StateSpec::even_mixture),
        ((1.0..3.0f64), (0.0..1.2f64), (0.0..6.0f64))
            .prop_map(|(b, r, p)| StateSpec::squeezed_thermal(b, r, p)),
    ]
}

fn squeezed() -> impl Strategy<Value = GaussianMoments> {
    ((1.0..3.0f64), (0.0..2.0f64), (0.0..PI)).prop_map(|(b, r, p)| {
        state(StateSpec::squeezed_thermal(b, r, p))
            .gaussian_moments()
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn char_is_hermitian_and_bounded(spec in any_spec(), re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let s = state(spec);
        let xi = Complex::new(re, im);
        let a = char_at(&s, xi.into());
        let b = char_at(&s, (-xi).into());
        prop_assert!((a - b.conj()).norm() < 1e-12);
        prop_assert!(a.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn spec_json_round_trip(spec in any_spec()) {
        let text = serde_json::to_string(&spec).unwrap();
        prop_assert_eq!(StateSpec::parse(&text).unwrap(), spec);
    }

    #[test]
    fn kappa_family_bounds(n in 0u64..200, a in 0.0..20.0f64, v in squeezed()) {
        let kn: Real = fock_kappa(n);
        prop_assert!((0.5..=1.0).contains(&kn));
        let ka = cat_kappa(a);
        prop_assert!((1.0..=2.0 + 1e-12).contains(&ka));
        let kg = gaussian_kappa(v.v);
        prop_assert!((1.0 - 1e-12..=2.0).contains(&kg));
    }

    #[test]
    fn gaussian_marginal_bound(v in squeezed()) {
        let c2 = gaussian_qcs_squared(v.v);
        prop_assume!(c2 >= 1.0);
        prop_assert!(min_quadrature_variance(&v) <= 0.5 / c2 * (1.0 + 1e-12));
    }

    #[test]
    fn conjugate_pair_sums_to_twice_qcs(v in squeezed(), theta in 0.0..PI) {
        prop_assume!(v.eigenvalues()[1] < 6.0);
        let s = State::from_gaussian(v);
        let (cx, cp) = metrics::qcs_theta(&s, theta).unwrap();
        prop_assert!((cx + cp - 2.0 * gaussian_qcs_squared(v.v)).abs() < 1e-8);
        prop_assert!(cx > 0.0 && cp > 0.0);
    }

    #[test]
    fn gaussian_half_life_ordering_at_large_qcs(beta in 1.0..1.5f64, c0_sq in 10.0..60.0f64, nbar in 0.0..3.0f64) {
        // ½Tr V⁻¹ = cosh 2r / β
        let r = 0.5 * (c0_sq * beta).acosh();
        let g = state(StateSpec::squeezed_thermal(beta, r, 0.0)).gaussian_moments().unwrap();
        let c2 = gaussian_qcs_squared(g.v);
        prop_assert!((c2 - c0_sq).abs() < 1e-9 * c0_sq);
        let k = gaussian_kappa(g.v);
        // Leading order in C₀²: τ_P/τ_C → (2^κ − 1)/3.
        let big = 1e9 * c2;
        let ratio = gaussian_purity_halflife(big, k, nbar) / gaussian_qcs_halflife(big, k, nbar);
        prop_assert!((ratio - (k.exp2() - 1.0) / 3.0).abs() < 1e-6);
        prop_assert!(ratio <= 1.0 + 1e-6 && 3.0 * ratio >= 1.0 - 1e-6, "ratio {}", ratio);
    }

    #[test]
    fn pure_states_qcs_is_total_noise(n in 0u64..8, a in -1.5..1.5f64, b in -1.5..1.5f64) {
        let specs = [
            StateSpec::fock(n),
            StateSpec::coherent(Complex::new(a, b)),
            StateSpec::cat(Complex::new(a + 0.1, b)),
        ];
        for spec in specs {
            let s = state(spec);
            let (rho, _) = s.to_fock_matrix_with_deficit(s.default_cutoff(), 1e-14).unwrap();
            let c2 = qcs_with(&s, &QuadSettings::default()).unwrap().c_squared;
            prop_assert!((c2 - rho.total_noise()).abs() < 1e-8, "{} vs {}", c2, rho.total_noise());
        }
    }
}

#[test]
fn purity_half_life_exceeds_qcs_half_life_at_finite_qcs() {
    // The large-C₀² ordering does not hold for the squeezed thermal reference
    // state itself.
    let g = state(StateSpec::squeezed_thermal(1.8, 0.5 * 19.8f64.acosh(), 0.0))
        .gaussian_moments()
        .unwrap();
    let (c2, k) = (gaussian_qcs_squared(g.v), gaussian_kappa(g.v));
    assert!(gaussian_purity_halflife(c2, k, 1.0) > gaussian_qcs_halflife(c2, k, 1.0));
}

#[test]
fn qcs_decreases_monotonically_under_the_channel() {
    let ch = ChannelParams::new(1.0, 1.0, 0.0).unwrap();
    let times: Vec<Real> = (0..=40).map(|j| 0.005 * j as Real).collect();
    for spec in [
        StateSpec::fock(5),
        StateSpec::even_mixture(4),
        StateSpec::squeezed_thermal(1.8, 1.5, 0.0),
    ] {
        let c = evolve_exact(&state(spec), &ch, &times, &QuadSettings::default()).unwrap();
        assert!(c.c.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn purity_follows_its_rate_equation() {
    let ch = ChannelParams::new(1.0, 1.0, 0.0).unwrap();
    let h = 1e-4;
    for spec in [StateSpec::fock(5), StateSpec::even_mixture(4)] {
        let s = state(spec);
        for t in [0.01, 0.03, 0.1, 0.3, 0.6] {
            let c = evolve_exact(&s, &ch, &[t - h, t, t + h], &QuadSettings::default()).unwrap();
            let rate = (c.p[2] - c.p[0]) / (2.0 * h) / c.p[1];
            let rhs = 1.0 - ch.thermal_factor() * c.c[1] * c.c[1];
            assert!(((rate - rhs) / rhs).abs() < 1e-4, "t={t}: {rate} vs {rhs}");
        }
    }
}

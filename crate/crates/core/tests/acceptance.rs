//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p qcs-core --test acceptance -- --nocapture`.

use std::f64::consts::PI;

use qcs_core::channel::{oracle_curve, ORACLE_DT};
use qcs_core::closed_form::{fock_kappa, gaussian_kappa, gaussian_qcs_squared};
use qcs_core::metrics::{commutator_matrix, min_quadrature_variance, qcs_commutator, qcs_with};
use qcs_core::phase_space::{p_n_diag_matrix, wigner_default_grid};
use qcs_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CROSS_TIMES: [Real; 4] = [0.01, 0.05, 0.2, 1.0];

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.pass = false;
            self.details.push(format!("FAILED {what}"));
        }
    }

    fn note(&mut self, what: String) {
        self.details.push(what);
    }

    fn report(&self, id: u32, title: &str) -> bool {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} [{title}]: {verdict}; {}",
            self.details.join("; ")
        );
        self.pass
    }
}

fn state(spec: StateSpec) -> State {
    build_state(spec).unwrap()
}

fn unit_channel() -> ChannelParams {
    ChannelParams::new(1.0, 1.0, 0.0).unwrap()
}

/// The four reference states: fock 5, the cat with C₀² = 11, the even
/// mixture with M = 4 and the squeezed thermal state β = 1.8, cosh 2r = 19.8.
fn reference_states() -> Vec<(&'static str, State)> {
    vec![
        ("fock5", state(StateSpec::fock(5))),
        ("cat", state(StateSpec::cat_with_qcs_squared(11.0).unwrap())),
        ("even4", state(StateSpec::even_mixture(4))),
        (
            "sq-thermal",
            state(StateSpec::squeezed_thermal(1.8, 0.5 * 19.8f64.acosh(), 0.0)),
        ),
    ]
}

fn random_covariance(rng: &mut ChaCha8Rng) -> GaussianMoments {
    let beta = rng.gen_range(1.0..2.0);
    let r: Real = rng.gen_range(0.0..0.8);
    let th: Real = rng.gen_range(0.0..PI);
    let (s, c) = th.sin_cos();
    let (a, b) = (beta * (-2.0 * r).exp(), beta * (2.0 * r).exp());
    let v = [
        [c * c * a + s * s * b, c * s * (a - b)],
        [c * s * (a - b), s * s * a + c * c * b],
    ];
    let mean = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    GaussianMoments::new(v, mean).unwrap()
}

fn criterion_1() -> bool {
    let mut o = Outcome::new();
    let st = QuadSettings::default();
    let mut cases: Vec<(String, State, Real)> = Vec::new();
    for n in [0u64, 1, 5, 10] {
        cases.push((
            format!("fock({n})"),
            state(StateSpec::fock(n)),
            (2 * n + 1) as Real,
        ));
    }
    for nbar in [0.5, 5.0] {
        cases.push((
            format!("thermal({nbar})"),
            state(StateSpec::thermal(nbar)),
            1.0 / (1.0 + 2.0 * nbar),
        ));
    }
    for m in [1u64, 4, 8] {
        cases.push((
            format!("even({m})"),
            state(StateSpec::even_mixture(m)),
            (2 * m + 3) as Real,
        ));
    }
    cases.push((
        "coherent".into(),
        state(StateSpec::coherent(Complex::new(1.3, -0.2))),
        1.0,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(0x51c5);
    for i in 0..20 {
        let g = random_covariance(&mut rng);
        cases.push((
            format!("gaussian#{i}"),
            State::from_gaussian(g),
            gaussian_qcs_squared(g.v),
        ));
    }
    let (mut worst_chi, mut worst_comm) = (0.0 as Real, 0.0 as Real);
    for (name, s, expect) in &cases {
        let c = expect.sqrt();
        let chi = qcs_with(s, &st).unwrap().c;
        let comm = qcs_commutator(&commutator_matrix(s).unwrap()).unwrap().c;
        worst_chi = worst_chi.max((chi - c).abs());
        worst_comm = worst_comm.max((comm - c).abs());
        o.check(
            (chi - c).abs() < 1e-6,
            format!("{name}: chi-moment C {chi} vs {c}"),
        );
        o.check(
            (comm - c).abs() < 1e-6,
            format!("{name}: commutator C {comm} vs {c}"),
        );
    }
    o.note(format!(
        "{} states, max |ΔC| chi {worst_chi:.1e}, commutator {worst_comm:.1e}",
        cases.len()
    ));
    o.report(1, "QCS closed forms")
}

struct HalfLives {
    tau_c: [Real; 4],
    tau_c_approx: [Real; 4],
    tau_p: [Real; 4],
    tau_p_approx: [Real; 4],
}

fn half_lives(settings: &QuadSettings) -> HalfLives {
    let ch = unit_channel();
    let mut h = HalfLives {
        tau_c: [0.0; 4],
        tau_c_approx: [0.0; 4],
        tau_p: [0.0; 4],
        tau_p_approx: [0.0; 4],
    };
    for (i, (_, s)) in reference_states().iter().enumerate() {
        let r = halflife(s, &ch, settings).unwrap();
        h.tau_c[i] = r.tau_C_exact.unwrap_or(Real::NAN);
        h.tau_p[i] = r.tau_P_exact.unwrap_or(Real::NAN);
        if s.is_gaussian() {
            h.tau_c_approx[i] = r.tau_C_gaussian_approx.unwrap_or(Real::NAN);
            h.tau_p_approx[i] = r.tau_P_gaussian_approx.unwrap_or(Real::NAN);
        } else {
            h.tau_c_approx[i] = r.tau_C_approx.unwrap_or(Real::NAN);
            h.tau_p_approx[i] = r.tau_P_approx.unwrap_or(Real::NAN);
        }
    }
    h
}

fn table_check(o: &mut Outcome, label: &str, got: &[Real; 4], want: [Real; 4], tol: Real) {
    let names: Vec<&str> = reference_states().iter().map(|(n, _)| *n).collect();
    for i in 0..4 {
        o.check(
            (got[i] - want[i]).abs() <= tol,
            format!("{label} {}: {:.6} vs {} ± {tol}", names[i], got[i], want[i]),
        );
    }
    o.note(format!(
        "{label} = [{:.4}, {:.4}, {:.4}, {:.4}]",
        got[0], got[1], got[2], got[3]
    ));
}

fn criterion_2(h: &HalfLives) -> bool {
    let mut o = Outcome::new();
    table_check(&mut o, "τ_C", &h.tau_c, [0.07, 0.038, 0.033, 0.047], 0.002);
    table_check(
        &mut o,
        "τ_C approx",
        &h.tau_c_approx,
        [0.064, 0.032, 0.026, 0.048],
        0.001,
    );
    o.report(2, "QCS half-life table")
}

fn criterion_3(h: &HalfLives) -> bool {
    let mut o = Outcome::new();
    table_check(&mut o, "τ_P", &h.tau_p, [0.028, 0.045, 0.067, 0.050], 0.002);
    table_check(
        &mut o,
        "τ_P approx",
        &h.tau_p_approx,
        [0.016, 0.016, 0.016, 0.052],
        0.001,
    );
    o.report(3, "purity half-life table")
}

fn criterion_4() -> bool {
    let mut o = Outcome::new();
    let st = QuadSettings::default();
    let ch = ChannelParams::default();
    let k5: Rational = fock_kappa(5);
    o.check(k5 == Rational::new(61, 121), format!("κ₅ = {k5}"));
    let chi_k5 = radial_moments_at(&state(StateSpec::fock(5)), &ch, 0.0, &st)
        .unwrap()
        .kappa();
    o.check(
        (chi_k5 - 61.0 / 121.0).abs() < 1e-6,
        format!("chi-moment κ₅ = {chi_k5}"),
    );
    let cat = state(StateSpec::cat_with_qcs_squared(11.0).unwrap());
    let k_cat = closed_form_kappa(&cat).unwrap();
    let chi_cat = radial_moments_at(&cat, &ch, 0.0, &st).unwrap().kappa();
    o.check(
        (k_cat - chi_cat).abs() < 1e-6,
        format!("κ_α {k_cat} vs chi-moment {chi_cat}"),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0x51c5);
    for _ in 0..20 {
        let g = random_covariance(&mut rng);
        let k = gaussian_kappa(g.v);
        o.check(
            (1.0..=2.0).contains(&k),
            format!("κ_G = {k} for V = {:?}", g.v),
        );
    }
    for n in 0..=20u64 {
        let k: Rational = fock_kappa(n);
        o.check(
            k >= Rational::new(1, 2) && k <= Rational::new(1, 1),
            format!("κ_{n} = {k}"),
        );
    }
    o.note(format!(
        "κ₅ = {k5}, chi κ₅ = {chi_k5:.9}, κ_α = {k_cat:.9}, chi κ_α = {chi_cat:.9}"
    ));
    o.report(4, "κ constants")
}

struct CrossCheck {
    /// Largest `|ΔC|`, `|ΔP|` between `evolve_exact` and the Fock oracle.
    dev: (Real, Real),
    /// Largest relative mismatch between finite-difference `Ċ` and the ODE
    /// right-hand side.
    ode_rel: Real,
}

fn cross_check(settings: &QuadSettings, oracles: &[EvolutionCurve]) -> CrossCheck {
    let ch = unit_channel();
    let mut out = CrossCheck {
        dev: (0.0, 0.0),
        ode_rel: 0.0,
    };
    let g = ch.thermal_factor();
    for ((_, s), or) in reference_states().iter().zip(oracles) {
        let ex = evolve_exact(s, &ch, &CROSS_TIMES, settings).unwrap();
        for i in 0..CROSS_TIMES.len() {
            out.dev.0 = out.dev.0.max((ex.c[i] - or.c[i]).abs());
            out.dev.1 = out.dev.1.max((ex.p[i] - or.p[i]).abs());
        }
        let h = 1e-4;
        for t in [0.005, 0.01, 0.02, 0.05, 0.1] {
            let c = evolve_exact(s, &ch, &[t - h, t, t + h], settings).unwrap();
            let fd = (c.c[2] - c.c[0]) / (2.0 * h);
            let rhs = 0.5 / ch.t_r() * (1.0 - c.kappa[1] * g * c.c[1] * c.c[1]) * c.c[1];
            out.ode_rel = out.ode_rel.max(((fd - rhs) / rhs).abs());
        }
    }
    out
}

fn oracle_curves() -> Vec<EvolutionCurve> {
    let ch = unit_channel();
    reference_states()
        .iter()
        .map(|(_, s)| oracle_curve(s, &ch, &CROSS_TIMES, ORACLE_DT).unwrap())
        .collect()
}

fn gaussian_gate() -> Real {
    let ch = unit_channel();
    let st = QuadSettings::default();
    let times = [0.0, 0.01, 0.047, 0.2, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut states = vec![reference_states().pop().unwrap().1];
    for _ in 0..3 {
        states.push(State::from_gaussian(random_covariance(&mut rng)));
    }
    let mut worst: Real = 0.0;
    for s in &states {
        let ex = evolve_exact(s, &ch, &times, &st).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let r = qcs_gaussian(&evolve_gaussian(&s.gaussian_moments().unwrap(), &ch, t).unwrap())
                .unwrap();
            worst = worst
                .max((r.c - ex.c[i]).abs())
                .max((r.purity - ex.p[i]).abs());
        }
    }
    worst
}

fn criterion_5(cc: &CrossCheck, gate: Real) -> bool {
    let mut o = Outcome::new();
    o.check(
        cc.dev.0 < 5e-5,
        format!("exact vs oracle |ΔC| = {:.2e}", cc.dev.0),
    );
    o.check(
        cc.dev.1 < 5e-5,
        format!("exact vs oracle |ΔP| = {:.2e}", cc.dev.1),
    );
    o.check(
        cc.ode_rel < 1e-4,
        format!("Ċ vs ODE right-hand side rel = {:.2e}", cc.ode_rel),
    );
    o.check(gate < 1e-7, format!("Gaussian V(t) vs exact = {gate:.2e}"));
    o.note(format!(
        "max |ΔC| {:.1e}, |ΔP| {:.1e}, Ċ rel {:.1e}, Gaussian gate {gate:.1e}",
        cc.dev.0, cc.dev.1, cc.ode_rel
    ));
    o.report(5, "method cross-validation")
}

fn criterion_6() -> bool {
    let mut o = Outcome::new();
    let s = state(StateSpec::even_mixture(4));
    for n in 0..=12usize {
        let p = phase_space::p_n(&s, n).unwrap();
        let want = if n % 2 == 0 && (2..=8).contains(&n) {
            0.25
        } else {
            0.0
        };
        o.check(p == want, format!("p_N({n}) = {p}"));
    }
    let (rho, _) = s.to_fock_matrix_auto().unwrap();
    let spec = GridSpec::kernel_default(rho.dim());
    let ns: Vec<usize> = (0..=12).collect();
    let wide = 4.0 * spec.x_max;
    let reports = p_n_diag_matrix(&rho, &spec, &ns, &[wide]).unwrap();
    let worst = reports
        .iter()
        .map(|r| r.entries[0].residual.abs())
        .fold(0.0, Real::max);
    o.check(worst < 1e-5, format!("wide-strip residual {worst:.2e}"));
    let ch = unit_channel();
    let start = channel::oracle_matrix(&s).unwrap();
    let evolved = evolve_fock_oracle(&start, &ch, 0.033, ORACLE_DT).unwrap();
    let odd: Vec<Real> = (1..=9).step_by(2).map(|n| evolved.get(n, n).re).collect();
    for (k, p) in odd.iter().enumerate() {
        o.check(
            *p > 0.01,
            format!("p_N({}) at t = 0.033 is {p:.4}", 2 * k + 1),
        );
    }
    o.note(format!(
        "wide-strip residual {worst:.1e}; odd p_N(1..9) at t=0.033 = {:?}",
        odd.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>()
    ));
    o.report(6, "interference")
}

fn criterion_7() -> bool {
    let mut o = Outcome::new();
    let st = QuadSettings::default();
    for spec in [
        StateSpec::fock(0),
        StateSpec::fock(1),
        StateSpec::thermal(5.0),
        StateSpec::even_mixture(4),
    ] {
        let s = state(spec);
        let name = s.spec().family_name();
        let grid = wigner_default_grid(&s).unwrap();
        let w = wigner_grid(&s, &grid).unwrap();
        let norm = w.integral().re;
        let sq = Grid2D::real(grid, w.re.iter().map(|v| v * v).collect())
            .integral()
            .re;
        let purity = s.purity();
        o.check((norm - 1.0).abs() < 1e-6, format!("{name}: ∫W = {norm}"));
        o.check(
            (PI * sq - purity).abs() < 1e-5,
            format!("{name}: π‖W‖² = {} vs {purity}", PI * sq),
        );
    }
    let mut worst_grad: Real = 0.0;
    for spec in [
        StateSpec::fock(0),
        StateSpec::fock(5),
        StateSpec::thermal(5.0),
        StateSpec::even_mixture(4),
    ] {
        let s = state(spec);
        let chi = qcs_with(&s, &st).unwrap().c_squared;
        let base = wigner_default_grid(&s).unwrap();
        let h = 0.125 / chi.sqrt();
        let cells = (2.0 * base.x_max / h).ceil() as usize;
        let grid = GridSpec::square(cells + 1, 0.5 * cells as Real * h).unwrap();
        let grad = qcs_wigner_gradient(&s, &grid).unwrap();
        let rel = (grad - chi).abs() / chi;
        worst_grad = worst_grad.max(rel);
        o.check(
            rel < 0.01,
            format!("{}: gradient C² {grad} vs {chi}", s.spec().family_name()),
        );
    }
    let mut states: Vec<State> = reference_states().into_iter().map(|(_, s)| s).collect();
    states.push(state(StateSpec::thermal(5.0)));
    states.push(state(StateSpec::coherent(Complex::new(1.3, -0.2))));
    let mut min_cx = Real::INFINITY;
    for s in &states {
        for th in [0.0, PI / 8.0, PI / 4.0, PI / 2.0] {
            let (cx, _) = metrics::qcs_theta(s, th).unwrap();
            min_cx = min_cx.min(cx);
            o.check(
                cx > 0.0,
                format!("{}: C_X² at θ = {th} is {cx}", s.spec().family_name()),
            );
        }
    }
    for beta in [1.0, 1.4, 2.0] {
        for r in [0.0, 0.3, 0.8, 1.5] {
            let g = state(StateSpec::squeezed_thermal(beta, r, 0.7))
                .gaussian_moments()
                .unwrap();
            let c2 = gaussian_qcs_squared(g.v);
            if c2 >= 1.0 {
                let s = min_quadrature_variance(&g);
                o.check(
                    s <= 0.5 / c2 * (1.0 + 1e-12),
                    format!("β={beta}, r={r}: σ² {s} vs {}", 0.5 / c2),
                );
            }
        }
    }
    o.note(format!(
        "gradient C² max rel {worst_grad:.1e}; min C_X² {min_cx:.3e}"
    ));
    o.report(7, "phase-space identities")
}

fn criterion_8(others: [bool; 4], oracles: &[EvolutionCurve]) -> bool {
    let mut o = Outcome::new();
    let printed = QuadSettings {
        weight: WeightConvention::AsPrinted,
        ..Default::default()
    };
    let cc = cross_check(&printed, oracles);
    let printed_fails = !(cc.dev.0 < 5e-5 && cc.dev.1 < 5e-5 && cc.ode_rel < 1e-4);
    for (i, ok) in others.iter().enumerate() {
        o.check(*ok, format!("criterion {} with the (2n̄_∞+1) weight", i + 2));
    }
    o.check(
        printed_fails,
        "criterion 5 still passes with the printed 2n̄_∞ weight".into(),
    );
    o.note(format!(
        "printed weight: exact vs oracle |ΔC| {:.2e}, Ċ rel {:.2e}",
        cc.dev.0, cc.ode_rel
    ));
    o.report(8, "weight-typo gate")
}

#[test]
fn acceptance() {
    let st = QuadSettings::default();
    let c1 = criterion_1();
    let h = half_lives(&st);
    let c2 = criterion_2(&h);
    let c3 = criterion_3(&h);
    let c4 = criterion_4();
    let oracles = oracle_curves();
    let cc = cross_check(&st, &oracles);
    let c5 = criterion_5(&cc, gaussian_gate());
    let c6 = criterion_6();
    let c7 = criterion_7();
    let c8 = criterion_8([c2, c3, c4, c5], &oracles);
    let all = [c1, c2, c3, c4, c5, c6, c7, c8];
    let passed = all.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", all.len());
    assert!(all.iter().all(|p| *p), "acceptance criteria failed");
}

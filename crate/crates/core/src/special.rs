//! Special functions: log-factorials, Laguerre polynomials, number-basis
//! displacement matrix elements, Hermite functions and Gauss–Legendre rules.
//!
//! The recurrences here run on normalised quantities (bounded by one in
//! magnitude) with a running logarithmic offset, so they neither overflow nor
//! lose the leading digits for indices in the hundreds.

use std::f64::consts::PI;
use std::sync::OnceLock;

const LN_FACT_TABLE: usize = 4096;
const RESCALE: f64 = 1e150;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        let mut acc = 0.0;
        t.push(0.0);
        for k in 1..LN_FACT_TABLE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < LN_FACT_TABLE {
        return ln_fact_table()[n];
    }
    // Stirling series, absolute error far below 1e-15 at this size.
    let x = n as f64 + 1.0;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// Plain Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Associated Laguerre polynomial `L_n^{(alpha)}(x)`.
pub fn assoc_laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[n]` with
/// `g_n^{(k)}(x) = sqrt(n!/(n+k)!) x^{k/2} e^{-x/2} L_n^{(k)}(x)` for
/// `n = 0..len`.
///
/// These are the moduli of the displacement matrix elements:
/// `⟨n+k|D(ξ)|n⟩ = g_n^{(k)}(|ξ|²) e^{ik arg ξ}` and
/// `⟨n|D(ξ)|n+k⟩ = g_n^{(k)}(|ξ|²) (−1)^k e^{−ik arg ξ}`.
pub fn displacement_band(k: usize, x: f64, len: usize, out: &mut Vec<f64>) {
    out.clear();
    if len == 0 {
        return;
    }
    if x <= 0.0 {
        out.resize(len, 0.0);
        if k == 0 {
            out.iter_mut().for_each(|v| *v = 1.0);
        }
        return;
    }
    let kf = k as f64;
    let mut offset = 0.5 * kf * x.ln() - 0.5 * x - 0.5 * ln_factorial(k);
    let mut prev = 0.0;
    let mut cur = 1.0;
    out.push(cur * offset.exp());
    for n in 0..len - 1 {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev)
            / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            offset += RESCALE.ln();
        }
        out.push(cur * offset.exp());
    }
}

/// Fills `out[n]` with the orthonormal Hermite functions `ψ_n(x)`,
/// `n = 0..len`, `ψ_0(x) = π^{-1/4} e^{-x²/2}`.
pub fn hermite_functions(x: f64, len: usize, out: &mut Vec<f64>) {
    out.clear();
    if len == 0 {
        return;
    }
    let mut offset = -0.25 * PI.ln() - 0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = 1.0;
    out.push(offset.exp());
    for n in 0..len - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            offset += RESCALE.ln();
        }
        out.push(cur * offset.exp());
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=order {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Cached 16-point Gauss–Legendre rule.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_matches_direct_sum_past_table() {
        let n = LN_FACT_TABLE + 10;
        let direct: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(n) - direct).abs() < 1e-8 * direct);
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn laguerre_known_values() {
        assert_eq!(laguerre(1, 1.0), 0.0);
        // L_2(x) = (x² − 4x + 2)/2
        let x = 0.7;
        assert!((laguerre(2, x) - (x * x - 4.0 * x + 2.0) / 2.0).abs() < 1e-15);
        assert!((assoc_laguerre(1, 2.0, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn displacement_band_matches_closed_form_for_small_indices() {
        let x = 2.3;
        let mut out = Vec::new();
        for k in 0..5 {
            displacement_band(k, x, 8, &mut out);
            for (n, g) in out.iter().enumerate() {
                let expect = ((ln_factorial(n) - ln_factorial(n + k)) * 0.5).exp()
                    * x.powf(k as f64 / 2.0)
                    * (-x / 2.0).exp()
                    * assoc_laguerre(n, k as f64, x);
                assert!((g - expect).abs() < 1e-13, "k={k} n={n}: {g} vs {expect}");
            }
        }
    }

    #[test]
    fn displacement_band_is_bounded_for_large_indices() {
        let mut out = Vec::new();
        for &x in &[0.01, 10.0, 400.0, 1500.0] {
            for &k in &[0usize, 7, 150] {
                displacement_band(k, x, 600, &mut out);
                assert!(out.iter().all(|g| g.is_finite() && g.abs() <= 1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn displacement_rows_are_unitary() {
        // Σ_m |⟨m|D|n⟩|² = 1 for n well inside the truncation.
        let x = 3.1;
        let nmax = 200;
        let mut out = Vec::new();
        let n = 4;
        let mut total = 0.0;
        for k in 0..nmax {
            displacement_band(k, x, n + 1, &mut out);
            total += out[n].powi(2);
            if k >= 1 && k <= n {
                displacement_band(k, x, n - k + 1, &mut out);
                total += out[n - k].powi(2);
            }
        }
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let h = 0.02;
        let len = 40;
        let mut gram = vec![0.0; len * len];
        let mut psi = Vec::new();
        let mut x = -20.0;
        while x <= 20.0 {
            hermite_functions(x, len, &mut psi);
            for i in 0..len {
                for j in 0..len {
                    gram[i * len + j] += h * psi[i] * psi[j];
                }
            }
            x += h;
        }
        for i in 0..len {
            for j in 0..len {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i * len + j] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hermite_functions_survive_large_arguments() {
        let mut psi = Vec::new();
        hermite_functions(40.0, 600, &mut psi);
        assert!(psi.iter().all(|v| v.is_finite()));
        assert!(psi[599].abs() > 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m30: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((m30 - 2.0 / 31.0).abs() < 1e-14);
    }
}

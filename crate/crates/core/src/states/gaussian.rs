use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::closed_form;
use crate::error::{Error, Result};
use crate::states::fock::FockDensityMatrix;
use crate::{Complex, Real};

/// Covariance matrix `V` (vacuum = identity, `V₁₁ = 2⟨X²⟩` for a centred
/// state) and mean `(⟨X⟩, ⟨P⟩)` of a Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub v: [[Real; 2]; 2],
    pub mean: [Real; 2],
}

impl GaussianMoments {
    /// Validates symmetry, positive definiteness and `det V ≥ 1`.
    ///
    /// The determinant test allows a few ulps of rounding so that pure states
    /// built from exponentials (`det V = 1` analytically) are accepted.
    pub fn new(v: [[Real; 2]; 2], mean: [Real; 2]) -> Result<Self> {
        if v.iter()
            .flatten()
            .chain(mean.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidSpec(
                "covariance and mean must be finite".into(),
            ));
        }
        let scale = v[0][0].abs().max(v[1][1].abs()).max(1.0);
        if (v[0][1] - v[1][0]).abs() > 1e-12 * scale {
            return Err(Error::InvalidSpec(
                "covariance matrix must be symmetric".into(),
            ));
        }
        let v = [[v[0][0], v[0][1]], [v[0][1], v[1][1]]];
        let det = v[0][0] * v[1][1] - v[0][1] * v[0][1];
        if v[0][0] <= 0.0 || det <= 0.0 {
            return Err(Error::Unphysical(
                "covariance matrix must be positive definite".into(),
            ));
        }
        let slack = 8.0 * Real::EPSILON * v[0][0] * v[1][1];
        if det < 1.0 - slack {
            return Err(Error::Unphysical(format!("det V = {det} < 1")));
        }
        Ok(Self { v, mean })
    }

    pub fn vacuum() -> Self {
        Self {
            v: [[1.0, 0.0], [0.0, 1.0]],
            mean: [0.0, 0.0],
        }
    }

    pub fn det(&self) -> Real {
        self.v[0][0] * self.v[1][1] - self.v[0][1] * self.v[1][0]
    }

    pub fn trace(&self) -> Real {
        self.v[0][0] + self.v[1][1]
    }

    /// Coherent amplitude `α = (⟨X⟩ + i⟨P⟩)/√2` of the mean.
    pub fn mean_amplitude(&self) -> Complex {
        Complex::new(self.mean[0], self.mean[1]) / SQRT_2
    }

    pub fn purity(&self) -> Real {
        closed_form::gaussian_purity(self.v)
    }

    pub fn mean_photon_number(&self) -> Real {
        (self.trace() - 2.0) / 4.0 + self.mean_amplitude().norm_sqr()
    }

    /// Eigenvalues of `V`, ascending.
    pub fn eigenvalues(&self) -> [Real; 2] {
        let half_tr = 0.5 * self.trace();
        let disc = (0.25 * (self.v[0][0] - self.v[1][1]).powi(2) + self.v[0][1].powi(2)).sqrt();
        [half_tr - disc, half_tr + disc]
    }

    /// Characteristic function
    /// `exp(−½ ξᵀΩVΩᵀξ) · exp(i√2(ξ₂⟨X⟩ − ξ₁⟨P⟩))`, `ξ = ξ₁ + iξ₂`.
    pub fn char_at(&self, xi: Complex) -> Complex {
        let (x1, x2) = (xi.re, xi.im);
        let v = &self.v;
        let q = 0.5 * (v[1][1] * x1 * x1 - 2.0 * v[0][1] * x1 * x2 + v[0][0] * x2 * x2);
        let phase = SQRT_2 * (x2 * self.mean[0] - x1 * self.mean[1]);
        Complex::from_polar((-q).exp(), phase)
    }

    /// Number-basis matrix truncated at `cutoff` levels.
    ///
    /// Uses the generating function `e^{|α|²}⟨α|ρ|α⟩ = Σ ρ_{mn} ᾱ^m α^n/√(m!n!)`,
    /// which for a Gaussian is the exponential of a quadratic form; its
    /// coefficients obey a two-term recurrence in each index.
    pub fn to_fock_matrix(&self, cutoff: usize) -> FockDensityMatrix {
        let n = cutoff;
        let vp = [
            [self.v[0][0] + 1.0, self.v[0][1]],
            [self.v[1][0], self.v[1][1] + 1.0],
        ];
        let det_p = vp[0][0] * vp[1][1] - vp[0][1] * vp[1][0];
        let m = [
            [vp[1][1] / det_p, -vp[0][1] / det_p],
            [-vp[1][0] / det_p, vp[0][0] / det_p],
        ];
        let i = Complex::new(0.0, 1.0);
        // exponent: ½ a u² + ½ b v² + c uv + d u + e v with u = ᾱ, v = α
        let a = -(m[0][0] - m[1][1]) - 2.0 * m[0][1] * i;
        let c = Complex::new(1.0 - (m[0][0] + m[1][1]), 0.0);
        let g = [
            m[0][0] * self.mean[0] + m[0][1] * self.mean[1],
            m[1][0] * self.mean[0] + m[1][1] * self.mean[1],
        ];
        let d = SQRT_2 * Complex::new(g[0], g[1]);
        let quad = self.mean[0] * g[0] + self.mean[1] * g[1];
        let t = 2.0 / det_p.sqrt() * (-quad).exp();

        let zero = Complex::new(0.0, 0.0);
        let mut rho = vec![zero; n * n];
        let sq: Vec<Real> = (0..=n).map(|k| (k as Real).sqrt()).collect();
        // Only the upper triangle m ≤ n is generated; the lower one follows by
        // conjugation.
        rho[0] = Complex::new(t, 0.0);
        // Row 0: √(n+1) ρ_{0,n+1} = b √n ρ_{0,n−1} + e ρ_{0,n}; b = ā, e = d̄.
        for k in 0..n.saturating_sub(1) {
            let prev = if k > 0 { rho[k - 1] } else { zero };
            rho[k + 1] = (a.conj() * sq[k] * prev + d.conj() * rho[k]) / sq[k + 1];
        }
        // Rows: √(m+1) ρ_{m+1,n} = a √m ρ_{m−1,n} + c √n ρ_{m,n−1} + d ρ_{m,n}.
        for row in 0..n.saturating_sub(1) {
            for col in row + 1..n {
                let up = if row > 0 {
                    rho[(row - 1) * n + col]
                } else {
                    zero
                };
                let left = rho[row * n + col - 1];
                let here = rho[row * n + col];
                rho[(row + 1) * n + col] =
                    (a * sq[row] * up + c * sq[col] * left + d * here) / sq[row + 1];
            }
        }
        for r in 0..n {
            rho[r * n + r].im = 0.0;
            for col in r + 1..n {
                rho[col * n + r] = rho[r * n + col].conj();
            }
        }
        FockDensityMatrix::from_raw(n, rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn physicality_gate() {
        assert!(GaussianMoments::new([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]).is_ok());
        assert!(matches!(
            GaussianMoments::new([[0.999, 0.0], [0.0, 1.0]], [0.0, 0.0]),
            Err(Error::Unphysical(_))
        ));
        let r: Real = 1.84;
        let pure = [[(-2.0 * r).exp(), 0.0], [0.0, (2.0 * r).exp()]];
        assert!(GaussianMoments::new(pure, [0.0, 0.0]).is_ok());
        assert!(matches!(
            GaussianMoments::new([[1.0, 0.2], [0.3, 1.0]], [0.0, 0.0]),
            Err(Error::InvalidSpec(_))
        ));
        assert!(GaussianMoments::new([[-2.0, 0.0], [0.0, -2.0]], [0.0, 0.0]).is_err());
    }

    #[test]
    fn thermal_matrix_is_geometric() {
        let nbar: Real = 5.0;
        let g = GaussianMoments::new([[11.0, 0.0], [0.0, 11.0]], [0.0, 0.0]).unwrap();
        let rho = g.to_fock_matrix(80);
        let q = nbar / (1.0 + nbar);
        for n in 0..80 {
            let expect = (1.0 - q) * q.powi(n as i32);
            assert!((rho.get(n, n).re - expect).abs() < 1e-14);
        }
        assert!(rho.is_diagonal());
    }

    #[test]
    fn coherent_matrix_matches_poisson_amplitudes() {
        let alpha = Complex::new(1.3, -0.2);
        let g = GaussianMoments::new(
            [[1.0, 0.0], [0.0, 1.0]],
            [SQRT_2 * alpha.re, SQRT_2 * alpha.im],
        )
        .unwrap();
        let rho = g.to_fock_matrix(40);
        let amp = |n: usize| {
            let ln = n as Real * alpha.norm().ln()
                - crate::special::ln_factorial(n) * 0.5
                - alpha.norm_sqr() / 2.0;
            Complex::from_polar(ln.exp(), n as Real * alpha.arg())
        };
        for m in 0..10 {
            for n in 0..10 {
                let expect = amp(m) * amp(n).conj();
                assert!((rho.get(m, n) - expect).norm() < 1e-13, "({m},{n})");
            }
        }
    }

    #[test]
    fn matrix_reproduces_moments() {
        let g = GaussianMoments::new([[2.0, 0.7], [0.7, 1.5]], [0.4, -0.3]).unwrap();
        let rho = g.to_fock_matrix(90);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let [x, p, x2, p2] = rho.quadrature_moments();
        assert!((x - 0.4).abs() < 1e-12 && (p + 0.3).abs() < 1e-12);
        assert!((2.0 * (x2 - x * x) - 2.0).abs() < 1e-11);
        assert!((2.0 * (p2 - p * p) - 1.5).abs() < 1e-11);
        assert!((rho.mean_photon_number() - g.mean_photon_number()).abs() < 1e-11);
        assert!((rho.purity() - g.purity()).abs() < 1e-12);
    }
}

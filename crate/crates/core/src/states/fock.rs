use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::special::displacement_band;
use crate::{Complex, Real};

/// Maximum allowed |Tr ρ − 1| for a validated matrix.
pub const TRACE_TOL: Real = 1e-9;
/// Most negative eigenvalue tolerated for a validated matrix.
pub const PSD_TOL: Real = 1e-10;

/// Density matrix in the number basis, truncated at `dim` levels.
///
/// Stored row-major; Hermiticity is exact as stored.
#[derive(Clone, Debug, PartialEq)]
pub struct FockDensityMatrix {
    dim: usize,
    data: Vec<Complex>,
    bands: Vec<usize>,
}

impl FockDensityMatrix {
    /// Builds and validates a matrix (Hermitian exactly as stored, trace within
    /// [`TRACE_TOL`] of one, eigenvalues ≥ −[`PSD_TOL`]).
    pub fn new(dim: usize, data: Vec<Complex>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec(
                "matrix dimension must be positive".into(),
            ));
        }
        if data.len() != dim * dim {
            return Err(Error::InvalidSpec(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSpec("matrix entries must be finite".into()));
        }
        for m in 0..dim {
            for n in m..dim {
                if data[m * dim + n] != data[n * dim + m].conj() {
                    return Err(Error::InvalidSpec(format!(
                        "matrix is not Hermitian at ({m}, {n})"
                    )));
                }
            }
        }
        let rho = Self::from_raw(dim, data);
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Unphysical(format!("trace {tr} differs from 1")));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::Unphysical(format!(
                "matrix is not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        Ok(rho)
    }

    /// Wraps matrix data produced internally; only Hermiticity is enforced by
    /// construction at the call sites.
    pub(crate) fn from_raw(dim: usize, data: Vec<Complex>) -> Self {
        let bands = (0..dim)
            .filter(|&k| (0..dim - k).any(|n| data[n * dim + n + k] != Complex::new(0.0, 0.0)))
            .collect();
        Self { dim, data, bands }
    }

    /// Builds the matrix of a pure state from number-basis amplitudes.
    pub(crate) fn from_pure(amps: &[Complex]) -> Self {
        let dim = amps.len();
        let mut data = vec![Complex::new(0.0, 0.0); dim * dim];
        for m in 0..dim {
            data[m * dim + m] = Complex::new(amps[m].norm_sqr(), 0.0);
            for n in m + 1..dim {
                let z = amps[m] * amps[n].conj();
                data[m * dim + n] = z;
                data[n * dim + m] = z.conj();
            }
        }
        Self::from_raw(dim, data)
    }

    /// Diagonal matrix from populations.
    pub(crate) fn from_diagonal(pops: &[Real]) -> Self {
        let dim = pops.len();
        let mut data = vec![Complex::new(0.0, 0.0); dim * dim];
        for (n, p) in pops.iter().enumerate() {
            data[n * dim + n] = Complex::new(*p, 0.0);
        }
        Self::from_raw(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, m: usize, n: usize) -> Complex {
        self.data[m * self.dim + n]
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    /// Indices `k` of super-diagonals `ρ_{n,n+k}` that are not identically zero.
    pub fn nonzero_bands(&self) -> &[usize] {
        &self.bands
    }

    pub fn is_diagonal(&self) -> bool {
        self.bands.iter().all(|&k| k == 0)
    }

    pub fn diagonal(&self) -> Vec<Real> {
        (0..self.dim).map(|n| self.get(n, n).re).collect()
    }

    pub fn trace(&self) -> Real {
        (0..self.dim).map(|n| self.get(n, n).re).sum()
    }

    /// `Tr ρ²` (the Frobenius norm squared for a Hermitian matrix).
    pub fn purity(&self) -> Real {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn mean_photon_number(&self) -> Real {
        (0..self.dim).map(|n| n as Real * self.get(n, n).re).sum()
    }

    pub fn min_eigenvalue(&self) -> Real {
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j));
        m.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(Real::INFINITY, Real::min)
    }

    /// `U ρ U†` with `U = e^{−iθN}`: the `X` kernel of the result is the
    /// `X_θ` kernel of `ρ`.
    pub fn rotated(&self, theta: Real) -> Self {
        let dim = self.dim;
        let mut data = self.data.clone();
        for m in 0..dim {
            for n in 0..dim {
                let phase = Complex::from_polar(1.0, -theta * (m as Real - n as Real));
                data[m * dim + n] *= phase;
            }
        }
        // Restore exact Hermiticity after independent rounding of the phases.
        for m in 0..dim {
            data[m * dim + m].im = 0.0;
            for n in m + 1..dim {
                data[n * dim + m] = data[m * dim + n].conj();
            }
        }
        Self::from_raw(dim, data)
    }

    /// Same state with `cutoff` levels: zero-padded or truncated.
    pub fn resized(&self, cutoff: usize) -> Self {
        let mut data = vec![Complex::new(0.0, 0.0); cutoff * cutoff];
        let keep = cutoff.min(self.dim);
        for m in 0..keep {
            for n in 0..keep {
                data[m * cutoff + n] = self.get(m, n);
            }
        }
        Self::from_raw(cutoff, data)
    }

    /// Per-band displacement sums
    /// `S_k = Σ_n w(n) g_n^{(k)}(x) ρ_{n,n+k}` for every non-zero band, where
    /// `g` are the displacement matrix-element moduli.
    pub(crate) fn band_sums(
        &self,
        x: Real,
        weight: impl Fn(usize) -> Real,
        scratch: &mut Vec<Real>,
    ) -> Vec<(usize, Complex)> {
        let dim = self.dim;
        self.bands
            .iter()
            .map(|&k| {
                let len = dim - k;
                displacement_band(k, x, len, scratch);
                let mut acc = Complex::new(0.0, 0.0);
                for (n, g) in scratch.iter().enumerate() {
                    acc += self.data[n * dim + n + k] * (g * weight(n));
                }
                (k, acc)
            })
            .collect()
    }

    /// `⟨X⟩, ⟨P⟩, ⟨X²⟩, ⟨P²⟩` from the number-basis matrix.
    pub fn quadrature_moments(&self) -> [Real; 4] {
        let dim = self.dim;
        // ⟨a⟩ = Σ √n ρ_{n,n−1}, ⟨a²⟩ = Σ √(n(n−1)) ρ_{n,n−2}.
        let mut a = Complex::new(0.0, 0.0);
        let mut a2 = Complex::new(0.0, 0.0);
        for n in 1..dim {
            a += self.get(n, n - 1) * (n as Real).sqrt();
            if n >= 2 {
                a2 += self.get(n, n - 2) * ((n * (n - 1)) as Real).sqrt();
            }
        }
        let nbar = self.mean_photon_number();
        let tr = self.trace();
        let s = std::f64::consts::SQRT_2;
        let x = s * a.re;
        let p = s * a.im;
        // X² = (a² + a†² + 2a†a + 1)/2, P² = (−a² − a†² + 2a†a + 1)/2.
        let x2 = a2.re + nbar + 0.5 * tr;
        let p2 = -a2.re + nbar + 0.5 * tr;
        [x, p, x2, p2]
    }

    /// Total noise `ΔX² + ΔP²`.
    pub fn total_noise(&self) -> Real {
        let [x, p, x2, p2] = self.quadrature_moments();
        x2 - x * x + p2 - p * p
    }
}

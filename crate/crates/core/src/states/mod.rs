//! State descriptions, validation and number-basis conversion.

mod fock;
mod gaussian;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use fock::{FockDensityMatrix, PSD_TOL, TRACE_TOL};
pub use gaussian::GaussianMoments;

use crate::closed_form;
use crate::error::{Error, Result};
use crate::special::ln_factorial;
use crate::{Complex, Real};

/// Truncation deficit targeted by [`State::to_fock_matrix_auto`].
pub const AUTO_DEFICIT: Real = 1e-10;
/// Largest cutoff the automatic search will try.
pub const MAX_CUTOFF: usize = 4096;

/// Complex amplitude; serialised as `[re, im]`, a bare number is accepted as
/// a real amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Amplitude(pub Complex);

impl Serialize for Amplitude {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Amplitude {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Real(Real),
            Pair([Real; 2]),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Real(re) => Amplitude(Complex::new(re, 0.0)),
            Raw::Pair([re, im]) => Amplitude(Complex::new(re, im)),
        })
    }
}

impl From<Complex> for Amplitude {
    fn from(z: Complex) -> Self {
        Amplitude(z)
    }
}

/// Tagged description of a single-mode state (JSON key `"family"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Fock {
        n: u64,
    },
    Coherent {
        alpha: Amplitude,
    },
    /// Even cat `(|α⟩ + |−α⟩)/√N`.
    Cat {
        alpha: Amplitude,
    },
    Thermal {
        nbar: Real,
    },
    /// `ρ_M = (1/M) Σ_{k=1}^{M} |2k⟩⟨2k|`.
    EvenMixture {
        m: u64,
    },
    /// `V = β R(φ/2) diag(e^{−2r}, e^{2r}) R(φ/2)ᵀ`, centred.
    SqueezedThermal {
        beta: Real,
        r: Real,
        #[serde(default)]
        phi: Real,
    },
    Gaussian {
        v: [[Real; 2]; 2],
        #[serde(default)]
        mean: [Real; 2],
    },
    FockMatrix {
        re: Vec<Vec<Real>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<Real>>>,
    },
}

impl StateSpec {
    pub fn fock(n: u64) -> Self {
        StateSpec::Fock { n }
    }

    pub fn coherent(alpha: Complex) -> Self {
        StateSpec::Coherent {
            alpha: Amplitude(alpha),
        }
    }

    pub fn cat(alpha: Complex) -> Self {
        StateSpec::Cat {
            alpha: Amplitude(alpha),
        }
    }

    /// Even cat with real `α` chosen so that `C² = c2`.
    pub fn cat_with_qcs_squared(c2: Real) -> Result<Self> {
        let a = closed_form::cat_intensity_for_qcs_squared(c2)
            .ok_or_else(|| Error::InvalidSpec(format!("no cat state has C² = {c2}")))?;
        Ok(Self::cat(Complex::new(a.sqrt(), 0.0)))
    }

    pub fn thermal(nbar: Real) -> Self {
        StateSpec::Thermal { nbar }
    }

    pub fn even_mixture(m: u64) -> Self {
        StateSpec::EvenMixture { m }
    }

    pub fn squeezed_thermal(beta: Real, r: Real, phi: Real) -> Self {
        StateSpec::SqueezedThermal { beta, r, phi }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            StateSpec::Fock { .. } => "fock",
            StateSpec::Coherent { .. } => "coherent",
            StateSpec::Cat { .. } => "cat",
            StateSpec::Thermal { .. } => "thermal",
            StateSpec::EvenMixture { .. } => "even_mixture",
            StateSpec::SqueezedThermal { .. } => "squeezed_thermal",
            StateSpec::Gaussian { .. } => "gaussian",
            StateSpec::FockMatrix { .. } => "fock_matrix",
        }
    }

    /// Parses either a JSON object or the `family:params` shorthand.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
        } else {
            Self::from_shorthand(text)
        }
    }

    /// Shorthand grammar:
    ///
    /// * `vacuum`, `fock:N`, `thermal:NBAR`, `even:M`
    /// * `coherent:RE[,IM]`, `cat:RE[,IM]`, `cat:c2=C2` (real α solved from C²)
    /// * `squeezed:BETA,R[,PHI]` or `squeezed:beta=B,cosh2r=X[,phi=PHI]`
    /// * `gaussian:V11,V12,V22[,MEAN_X,MEAN_P]`
    pub fn from_shorthand(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidSpec(format!("{msg} in state shorthand `{text}`"));
        let (family, params) = match text.split_once(':') {
            Some((f, p)) => (f.trim(), p.trim()),
            None => (text.trim(), ""),
        };
        let items: Vec<&str> = if params.is_empty() {
            Vec::new()
        } else {
            params.split(',').map(str::trim).collect()
        };
        let num = |s: &str| s.parse::<Real>().map_err(|_| bad("bad number"));
        let keyed = |key: &str| -> Option<&str> {
            items
                .iter()
                .find_map(|it| it.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        };
        let integer = |s: &str| s.parse::<u64>().map_err(|_| bad("bad integer"));
        let one = || -> Result<&str> {
            match items.as_slice() {
                [x] => Ok(*x),
                _ => Err(bad("expected exactly one parameter")),
            }
        };
        let complex = || -> Result<Complex> {
            match items.as_slice() {
                [re] => Ok(Complex::new(num(re)?, 0.0)),
                [re, im] => Ok(Complex::new(num(re)?, num(im)?)),
                _ => Err(bad("expected RE[,IM]")),
            }
        };
        match family {
            "vacuum" if items.is_empty() => Ok(Self::fock(0)),
            "fock" => Ok(Self::fock(integer(one()?)?)),
            "thermal" => Ok(Self::thermal(num(one()?)?)),
            "even" | "even_mixture" => Ok(Self::even_mixture(integer(one()?)?)),
            "coherent" => Ok(Self::coherent(complex()?)),
            "cat" => match keyed("c2") {
                Some(c2) => Self::cat_with_qcs_squared(num(c2)?),
                None => Ok(Self::cat(complex()?)),
            },
            "squeezed" | "squeezed_thermal" => {
                if let Some(beta) = keyed("beta") {
                    let beta = num(beta)?;
                    let r = match (keyed("r"), keyed("cosh2r")) {
                        (Some(r), None) => num(r)?,
                        (None, Some(c)) => num(c)?.acosh() / 2.0,
                        _ => return Err(bad("give exactly one of r= or cosh2r=")),
                    };
                    let phi = keyed("phi").map(num).transpose()?.unwrap_or(0.0);
                    Ok(Self::squeezed_thermal(beta, r, phi))
                } else {
                    match items.as_slice() {
                        [b, r] => Ok(Self::squeezed_thermal(num(b)?, num(r)?, 0.0)),
                        [b, r, p] => Ok(Self::squeezed_thermal(num(b)?, num(r)?, num(p)?)),
                        _ => Err(bad("expected BETA,R[,PHI]")),
                    }
                }
            }
            "gaussian" => {
                let vals = items.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                let (v, mean) = match vals.as_slice() {
                    [a, b, d] => ([[*a, *b], [*b, *d]], [0.0, 0.0]),
                    [a, b, d, x, p] => ([[*a, *b], [*b, *d]], [*x, *p]),
                    _ => return Err(bad("expected V11,V12,V22[,X,P]")),
                };
                Ok(StateSpec::Gaussian { v, mean })
            }
            _ => Err(bad("unknown family")),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let json = serde_json::to_string(self).map_err(|_| fmt::Error)?;
        f.write_str(&json)
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Repr {
    Fock(u64),
    Cat {
        alpha: Complex,
        norm: Real,
    },
    Thermal(Real),
    EvenMixture(u64),
    /// Coherent, squeezed-thermal and explicit Gaussian states.
    Gaussian(GaussianMoments),
    Matrix(FockDensityMatrix),
}

/// Validated, immutable state.
#[derive(Clone, Debug)]
pub struct State {
    spec: StateSpec,
    repr: Repr,
}

/// Validates a spec and builds the corresponding state.
pub fn build_state(spec: StateSpec) -> Result<State> {
    let repr = match &spec {
        StateSpec::Fock { n } => Repr::Fock(*n),
        StateSpec::Coherent { alpha } => {
            let a = finite_amplitude(alpha.0)?;
            let s = std::f64::consts::SQRT_2;
            Repr::Gaussian(GaussianMoments::new(
                [[1.0, 0.0], [0.0, 1.0]],
                [s * a.re, s * a.im],
            )?)
        }
        StateSpec::Cat { alpha } => {
            let a = finite_amplitude(alpha.0)?;
            let norm = 2.0 * (1.0 + (-2.0 * a.norm_sqr()).exp());
            Repr::Cat { alpha: a, norm }
        }
        StateSpec::Thermal { nbar } => {
            if !(nbar.is_finite() && *nbar >= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "thermal n̄ must be ≥ 0, got {nbar}"
                )));
            }
            Repr::Thermal(*nbar)
        }
        StateSpec::EvenMixture { m } => {
            if *m < 1 {
                return Err(Error::InvalidSpec("even mixture needs M ≥ 1".into()));
            }
            Repr::EvenMixture(*m)
        }
        StateSpec::SqueezedThermal { beta, r, phi } => {
            if !(beta.is_finite() && *beta > 0.0 && r.is_finite() && phi.is_finite()) {
                return Err(Error::InvalidSpec(
                    "squeezed thermal needs finite β > 0, r and φ".into(),
                ));
            }
            let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
            let (lo, hi) = (beta * (-2.0 * r).exp(), beta * (2.0 * r).exp());
            // R diag(lo, hi) Rᵀ with R = [[c, −s], [s, c]]
            let v = [
                [c * c * lo + s * s * hi, c * s * (lo - hi)],
                [c * s * (lo - hi), s * s * lo + c * c * hi],
            ];
            Repr::Gaussian(GaussianMoments::new(v, [0.0, 0.0])?)
        }
        StateSpec::Gaussian { v, mean } => Repr::Gaussian(GaussianMoments::new(*v, *mean)?),
        StateSpec::FockMatrix { re, im } => {
            let dim = re.len();
            if re.iter().any(|row| row.len() != dim) {
                return Err(Error::InvalidSpec("fock_matrix `re` must be square".into()));
            }
            if let Some(im) = im {
                if im.len() != dim || im.iter().any(|row| row.len() != dim) {
                    return Err(Error::InvalidSpec(
                        "fock_matrix `im` must match the shape of `re`".into(),
                    ));
                }
            }
            let data = (0..dim * dim)
                .map(|idx| {
                    let (m, n) = (idx / dim, idx % dim);
                    Complex::new(re[m][n], im.as_ref().map_or(0.0, |im| im[m][n]))
                })
                .collect();
            Repr::Matrix(FockDensityMatrix::new(dim, data)?)
        }
    };
    Ok(State { spec, repr })
}

fn finite_amplitude(a: Complex) -> Result<Complex> {
    if a.re.is_finite() && a.im.is_finite() {
        Ok(a)
    } else {
        Err(Error::InvalidSpec("amplitude must be finite".into()))
    }
}

impl State {
    pub fn spec(&self) -> &StateSpec {
        &self.spec
    }

    pub(crate) fn repr(&self) -> &Repr {
        &self.repr
    }

    /// Wraps an already validated matrix.
    pub fn from_matrix(matrix: FockDensityMatrix) -> State {
        let dim = matrix.dim();
        let spec = StateSpec::FockMatrix {
            re: (0..dim)
                .map(|m| (0..dim).map(|n| matrix.get(m, n).re).collect())
                .collect(),
            im: Some(
                (0..dim)
                    .map(|m| (0..dim).map(|n| matrix.get(m, n).im).collect())
                    .collect(),
            ),
        };
        State {
            spec,
            repr: Repr::Matrix(matrix),
        }
    }

    /// Wraps Gaussian moments.
    pub fn from_gaussian(moments: GaussianMoments) -> State {
        let spec = StateSpec::Gaussian {
            v: moments.v,
            mean: moments.mean,
        };
        State {
            spec,
            repr: Repr::Gaussian(moments),
        }
    }

    /// Gaussian moments for the Gaussian families (including the vacuum).
    pub fn gaussian_moments(&self) -> Option<GaussianMoments> {
        match &self.repr {
            Repr::Gaussian(g) => Some(*g),
            Repr::Thermal(nbar) => {
                let d = 1.0 + 2.0 * nbar;
                Some(GaussianMoments {
                    v: [[d, 0.0], [0.0, d]],
                    mean: [0.0, 0.0],
                })
            }
            Repr::Fock(0) => Some(GaussianMoments::vacuum()),
            _ => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        self.gaussian_moments().is_some()
    }

    /// `true` when `χ` depends on `|ξ|` only.
    pub fn is_rotation_invariant(&self) -> bool {
        match &self.repr {
            Repr::Fock(_) | Repr::Thermal(_) | Repr::EvenMixture(_) => true,
            Repr::Cat { alpha, .. } => alpha.norm_sqr() == 0.0,
            Repr::Gaussian(g) => g.v[0][0] == g.v[1][1] && g.v[0][1] == 0.0 && g.mean == [0.0, 0.0],
            Repr::Matrix(m) => m.is_diagonal(),
        }
    }

    /// `Tr(ρ a†a)`.
    pub fn mean_photon_number(&self) -> Real {
        match &self.repr {
            Repr::Fock(n) => *n as Real,
            Repr::Cat { alpha, .. } => {
                let a = alpha.norm_sqr();
                a * a.tanh()
            }
            Repr::Thermal(nbar) => *nbar,
            Repr::EvenMixture(m) => (*m + 1) as Real,
            Repr::Gaussian(g) => g.mean_photon_number(),
            Repr::Matrix(m) => m.mean_photon_number(),
        }
    }

    /// `Tr ρ²` from closed forms or the stored matrix.
    pub fn purity(&self) -> Real {
        match &self.repr {
            Repr::Fock(_) | Repr::Cat { .. } => 1.0,
            Repr::Thermal(nbar) => 1.0 / (1.0 + 2.0 * nbar),
            Repr::EvenMixture(m) => 1.0 / *m as Real,
            Repr::Gaussian(g) => g.purity(),
            Repr::Matrix(m) => m.purity(),
        }
    }

    /// `ΔX² + ΔP²`.
    pub fn total_noise(&self) -> Real {
        match &self.repr {
            Repr::Fock(n) => closed_form::fock_qcs_squared::<Real>(*n),
            Repr::Cat { alpha, .. } => closed_form::cat_qcs_squared(alpha.norm_sqr()),
            Repr::Thermal(nbar) => 1.0 + 2.0 * nbar,
            Repr::EvenMixture(m) => 2.0 * (*m + 1) as Real + 1.0,
            Repr::Gaussian(g) => 0.5 * g.trace(),
            Repr::Matrix(m) => m.total_noise(),
        }
    }

    /// `N_c = ceil(8(n̄ + 1) + 10)`.
    pub fn default_cutoff(&self) -> usize {
        let base = (8.0 * (self.mean_photon_number() + 1.0) + 10.0).ceil() as usize;
        match &self.repr {
            Repr::Fock(n) => base.max(*n as usize + 3),
            Repr::EvenMixture(m) => base.max(2 * *m as usize + 3),
            Repr::Matrix(m) => base.max(m.dim()),
            _ => base,
        }
    }

    /// Number-basis matrix truncated at `cutoff` levels, with the truncated
    /// trace deficit `1 − Tr ρ`.
    pub fn to_fock_matrix(&self, cutoff: usize) -> Result<(FockDensityMatrix, Real)> {
        if cutoff == 0 {
            return Err(Error::InvalidArgument("cutoff must be ≥ 1".into()));
        }
        let rho = self.truncated(cutoff);
        let deficit = 1.0 - rho.trace();
        if deficit > TRACE_TOL {
            return Err(Error::CutoffTooSmall(format!(
                "cutoff {cutoff} retains trace {} (deficit {deficit:e})",
                rho.trace()
            )));
        }
        Ok((rho, deficit))
    }

    /// Grows the cutoff from [`State::default_cutoff`] until the deficit is
    /// below [`AUTO_DEFICIT`].
    pub fn to_fock_matrix_auto(&self) -> Result<(FockDensityMatrix, Real)> {
        self.to_fock_matrix_with_deficit(self.default_cutoff(), AUTO_DEFICIT)
    }

    /// Grows the cutoff from `start` until the deficit is below `target`.
    pub fn to_fock_matrix_with_deficit(
        &self,
        start: usize,
        target: Real,
    ) -> Result<(FockDensityMatrix, Real)> {
        let mut cutoff = start.max(1);
        loop {
            let rho = self.truncated(cutoff);
            let deficit = 1.0 - rho.trace();
            if deficit < target || matches!(self.repr, Repr::Matrix(_)) {
                return Ok((rho, deficit));
            }
            if cutoff >= MAX_CUTOFF {
                return Err(Error::CutoffTooSmall(format!(
                    "deficit {deficit:e} still above {target:e} at cutoff {cutoff}"
                )));
            }
            cutoff = (cutoff + cutoff / 4 + 1).min(MAX_CUTOFF);
        }
    }

    fn truncated(&self, cutoff: usize) -> FockDensityMatrix {
        match &self.repr {
            Repr::Fock(n) => {
                let mut p = vec![0.0; cutoff];
                if (*n as usize) < cutoff {
                    p[*n as usize] = 1.0;
                }
                FockDensityMatrix::from_diagonal(&p)
            }
            Repr::Thermal(nbar) => {
                let q = nbar / (1.0 + nbar);
                let p: Vec<Real> = (0..cutoff).map(|n| (1.0 - q) * q.powi(n as i32)).collect();
                FockDensityMatrix::from_diagonal(&p)
            }
            Repr::EvenMixture(m) => {
                let mut p = vec![0.0; cutoff];
                for k in 1..=*m as usize {
                    if 2 * k < cutoff {
                        p[2 * k] = 1.0 / *m as Real;
                    }
                }
                FockDensityMatrix::from_diagonal(&p)
            }
            Repr::Cat { alpha, norm } => {
                let amps: Vec<Complex> = (0..cutoff)
                    .map(|n| {
                        if n % 2 == 1 {
                            Complex::new(0.0, 0.0)
                        } else {
                            2.0 / norm.sqrt() * coherent_amplitude(*alpha, n)
                        }
                    })
                    .collect();
                FockDensityMatrix::from_pure(&amps)
            }
            Repr::Gaussian(g) => {
                if g.v == [[1.0, 0.0], [0.0, 1.0]] {
                    let alpha = g.mean_amplitude();
                    let amps: Vec<Complex> =
                        (0..cutoff).map(|n| coherent_amplitude(alpha, n)).collect();
                    FockDensityMatrix::from_pure(&amps)
                } else {
                    g.to_fock_matrix(cutoff)
                }
            }
            Repr::Matrix(m) => m.resized(cutoff),
        }
    }
}

/// `⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n!`.
pub(crate) fn coherent_amplitude(alpha: Complex, n: usize) -> Complex {
    let r = alpha.norm();
    if r == 0.0 {
        return Complex::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
    }
    let ln = n as Real * r.ln() - 0.5 * ln_factorial(n) - 0.5 * r * r;
    Complex::from_polar(ln.exp(), n as Real * alpha.arg())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let specs = vec![
            StateSpec::fock(5),
            StateSpec::coherent(Complex::new(1.3, -0.2)),
            StateSpec::cat_with_qcs_squared(11.0).unwrap(),
            StateSpec::thermal(0.1 + 0.2),
            StateSpec::even_mixture(4),
            StateSpec::squeezed_thermal(1.8, 19.8f64.acosh() / 2.0, 0.3),
            StateSpec::Gaussian {
                v: [[2.0, 0.5], [0.5, 1.0]],
                mean: [0.1, -1e-300],
            },
            StateSpec::FockMatrix {
                re: vec![vec![1.0]],
                im: None,
            },
        ];
        for spec in specs {
            let text = serde_json::to_string(&spec).unwrap();
            let back: StateSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec, "{text}");
        }
    }

    #[test]
    fn json_schema_examples() {
        let s = StateSpec::parse(r#"{"family":"fock","n":5}"#).unwrap();
        assert_eq!(s, StateSpec::fock(5));
        let s = StateSpec::parse(r#"{"family":"coherent","alpha":[1.3,-0.2]}"#).unwrap();
        assert_eq!(s, StateSpec::coherent(Complex::new(1.3, -0.2)));
        let s = StateSpec::parse(r#"{"family":"cat","alpha":2}"#).unwrap();
        assert_eq!(s, StateSpec::cat(Complex::new(2.0, 0.0)));
        assert!(StateSpec::parse(r#"{"family":"fock","n":5,"extra":1}"#).is_err());
        assert!(StateSpec::parse(r#"{"family":"nope"}"#).is_err());
    }

    #[test]
    fn shorthand_grammar() {
        assert_eq!(StateSpec::parse("fock:5").unwrap(), StateSpec::fock(5));
        assert_eq!(
            StateSpec::parse("even:4").unwrap(),
            StateSpec::even_mixture(4)
        );
        assert_eq!(
            StateSpec::parse("thermal:5").unwrap(),
            StateSpec::thermal(5.0)
        );
        assert_eq!(StateSpec::parse("vacuum").unwrap(), StateSpec::fock(0));
        assert_eq!(
            StateSpec::parse("coherent:1.3,-0.2").unwrap(),
            StateSpec::coherent(Complex::new(1.3, -0.2))
        );
        match StateSpec::parse("squeezed:beta=1.8,cosh2r=19.8").unwrap() {
            StateSpec::SqueezedThermal { beta, r, phi } => {
                assert_eq!(beta, 1.8);
                assert!(((2.0 * r).cosh() - 19.8).abs() < 1e-12);
                assert_eq!(phi, 0.0);
            }
            other => panic!("{other:?}"),
        }
        match StateSpec::parse("cat:c2=11").unwrap() {
            StateSpec::Cat { alpha } => {
                assert!((closed_form::cat_qcs_squared(alpha.0.norm_sqr()) - 11.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        assert!(StateSpec::parse("fock:-1").is_err());
        assert!(StateSpec::parse("banana:3").is_err());
        assert!(StateSpec::parse("squeezed:1.8").is_err());
    }

    #[test]
    fn domain_violations_are_rejected() {
        assert!(matches!(
            build_state(StateSpec::thermal(-0.1)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            build_state(StateSpec::even_mixture(0)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            build_state(StateSpec::squeezed_thermal(0.5, 0.1, 0.0)),
            Err(Error::Unphysical(_))
        ));
        let bad = StateSpec::FockMatrix {
            re: vec![vec![0.5, 0.0]],
            im: None,
        };
        assert!(matches!(build_state(bad), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn gaussian_identity_is_vacuum() {
        let st = build_state(StateSpec::Gaussian {
            v: [[1.0, 0.0], [0.0, 1.0]],
            mean: [0.0, 0.0],
        })
        .unwrap();
        assert_eq!(st.purity(), 1.0);
        assert_eq!(st.mean_photon_number(), 0.0);
    }

    #[test]
    fn thermal_conversion_is_geometric() {
        let st = build_state(StateSpec::thermal(5.0)).unwrap();
        let (rho, deficit) = st.to_fock_matrix(80).unwrap_or_else(|_| {
            // 80 levels leave a deficit of (5/6)^80 ≈ 4.6e-7 > trace_tol.
            st.to_fock_matrix(160).unwrap()
        });
        let q: Real = 5.0 / 6.0;
        for n in 0..80 {
            assert!((rho.get(n, n).re - (1.0 - q) * q.powi(n as i32)).abs() < 1e-15);
        }
        assert!(deficit < 1e-9);
        assert!(matches!(
            st.to_fock_matrix(80),
            Err(Error::CutoffTooSmall(_))
        ));
    }

    #[test]
    fn even_mixture_conversion() {
        let st = build_state(StateSpec::even_mixture(4)).unwrap();
        let (rho, deficit) = st.to_fock_matrix(16).unwrap();
        assert_eq!(deficit, 0.0);
        for n in 0..16 {
            let expect = if [2, 4, 6, 8].contains(&n) { 0.25 } else { 0.0 };
            assert_eq!(rho.get(n, n).re, expect);
        }
    }

    #[test]
    fn cat_conversion_is_pure() {
        let st = build_state(StateSpec::cat(Complex::new(5f64.sqrt(), 0.0))).unwrap();
        let (rho, _) = st.to_fock_matrix(60).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-8);
        assert!((rho.mean_photon_number() - st.mean_photon_number()).abs() < 1e-9);
    }

    #[test]
    fn squeezed_mean_photon_number_matches_matrix_trace() {
        let st = build_state(StateSpec::squeezed_thermal(1.8, 19.8f64.acosh() / 2.0, 0.0)).unwrap();
        let nbar = st.mean_photon_number();
        // (Tr V − 2)/4 with Tr V = 1.8 · 2 cosh 2r
        assert!((nbar - (3.6 * 19.8 - 2.0) / 4.0).abs() < 1e-12);
        let (rho, deficit) = st.to_fock_matrix_auto().unwrap();
        assert!(deficit < AUTO_DEFICIT);
        assert!((rho.mean_photon_number() - nbar).abs() < 1e-6);
    }

    #[test]
    fn single_level_matrix_is_vacuum() {
        let st = build_state(StateSpec::FockMatrix {
            re: vec![vec![1.0]],
            im: None,
        })
        .unwrap();
        let vac = build_state(StateSpec::fock(0)).unwrap();
        assert_eq!(st.purity(), vac.purity());
        assert_eq!(st.total_noise(), vac.total_noise());
        let (a, _) = st.to_fock_matrix(5).unwrap();
        let (b, _) = vac.to_fock_matrix(5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deficit_decreases_with_cutoff() {
        let states = [
            StateSpec::thermal(5.0),
            StateSpec::cat_with_qcs_squared(11.0).unwrap(),
            StateSpec::coherent(Complex::new(1.3, -0.2)),
        ];
        for spec in states {
            let st = build_state(spec).unwrap();
            let mut last = Real::INFINITY;
            for cutoff in (10..200).step_by(10) {
                let rho = st.truncated(cutoff);
                let deficit = 1.0 - rho.trace();
                assert!(deficit <= last + 1e-15);
                last = deficit;
            }
            assert!(last < 1e-10);
        }
    }
}

//! Hermitian generators: constant or sinusoidally driven, with an optional
//! non-interacting split H = H0 + H1⊗I + I⊗H2.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hilbert::gauss;
use crate::linalg::{self, dagger, eye, kron};
use crate::{Error, Result};

/// Hermiticity validation tolerance.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Split-reassembly validation tolerance.
pub const SPLIT_TOL: f64 = 1e-10;

/// Optional decomposition H = H0 + H1⊗I₂ + I₁⊗H2 over a bipartite space.
#[derive(Debug, Clone)]
pub struct HamiltonianSplit {
    pub n1: usize,
    pub n2: usize,
    pub h0: Array2<C64>,
    pub h1: Array2<C64>,
    pub h2: Array2<C64>,
}

impl HamiltonianSplit {
    /// Reassembles H0 + H1⊗I + I⊗H2.
    pub fn reassemble(&self) -> Array2<C64> {
        &(&self.h0 + &kron(&self.h1, &eye(self.n2))) + &kron(&eye(self.n1), &self.h2)
    }
}

/// A (possibly time-dependent) Hamiltonian. Time dependence is restricted to
/// the built-in sinusoidal drive family H(t) = base + sin(ωt + φ)·drive.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    dim: usize,
    base: Array2<C64>,
    drive: Option<(Array2<C64>, f64, f64)>,
    split: Option<HamiltonianSplit>,
}

impl HamiltonianSpec {
    /// Time-independent Hamiltonian; validates Hermiticity.
    pub fn constant(h: Array2<C64>) -> Result<Self> {
        let d = check_hermitian(&h)?;
        Ok(Self { dim: d, base: h, drive: None, split: None })
    }

    /// Sinusoidally driven Hamiltonian H(t) = base + sin(ωt + φ)·drive.
    pub fn sinusoidal(base: Array2<C64>, drive: Array2<C64>, omega: f64, phase: f64) -> Result<Self> {
        let d = check_hermitian(&base)?;
        let d2 = check_hermitian(&drive)?;
        if d != d2 {
            return Err(Error::DimensionMismatch(format!(
                "base is {d}x{d}, drive is {d2}x{d2}"
            )));
        }
        Ok(Self { dim: d, base, drive: Some((drive, omega, phase)), split: None })
    }

    /// Attaches a split, checking that it reassembles to the base matrix.
    pub fn with_split(mut self, split: HamiltonianSplit) -> Result<Self> {
        if split.n1 * split.n2 != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "split is for {}x{}, H is {}-dimensional",
                split.n1, split.n2, self.dim
            )));
        }
        let defect = linalg::fro_norm(&(&split.reassemble() - &self.base));
        if defect > SPLIT_TOL {
            return Err(Error::InvalidParameter(format!(
                "split does not reassemble: residual {defect:.3e}"
            )));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn split(&self) -> Option<&HamiltonianSplit> {
        self.split.as_ref()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.drive.is_some()
    }

    /// H(t).
    pub fn value_at(&self, t: f64) -> Array2<C64> {
        match &self.drive {
            None => self.base.clone(),
            Some((d, omega, phase)) => {
                let s = (omega * t + phase).sin();
                &self.base + &d.mapv(|x| x * s)
            }
        }
    }

    /// Applies H(t) to a vector without materializing the matrix sum.
    pub fn apply(&self, t: f64, v: &Array1<C64>) -> Array1<C64> {
        match &self.drive {
            None => self.base.dot(v),
            Some((d, omega, phase)) => {
                let s = (omega * t + phase).sin();
                &self.base.dot(v) + &d.dot(v).mapv(|x| x * s)
            }
        }
    }

    /// Expectation ⟨v, H(t) v⟩ (real for Hermitian H and unit v).
    pub fn expectation(&self, t: f64, v: &Array1<C64>) -> f64 {
        linalg::inner(v, &self.apply(t, v)).re
    }
}

fn check_hermitian(h: &Array2<C64>) -> Result<usize> {
    let (r, c) = h.dim();
    if r != c {
        return Err(Error::DimensionMismatch("Hamiltonian must be square".into()));
    }
    let defect = linalg::hermiticity_defect(h);
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian(defect));
    }
    Ok(r)
}

/// Random Hermitian matrix with unit Frobenius norm (Gaussian entries).
pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> Array2<C64> {
    let a = Array2::from_shape_fn((n, n), |_| C64::new(gauss(rng), gauss(rng)));
    let h = (&a + &dagger(&a)).mapv(|x| 0.5 * x);
    let nrm = linalg::fro_norm(&h);
    h.mapv(|x| x / nrm)
}

/// The two-spin exchange Hamiltonian μ(σx⊗σx + σy⊗σy + σz⊗σz) in the
/// standard basis (a pure interaction term; its reduced traces vanish).
pub fn spin_exchange(mu: f64) -> Array2<C64> {
    let z = C64::new(0.0, 0.0);
    let m = C64::new(mu, 0.0);
    let mut h = Array2::from_elem((4, 4), z);
    h[(0, 0)] = m;
    h[(1, 1)] = -m;
    h[(2, 2)] = -m;
    h[(3, 3)] = m;
    h[(1, 2)] = 2.0 * m;
    h[(2, 1)] = 2.0 * m;
    h
}

// ---------------------------------------------------------------------------
// JSON wire format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &Array2<C64>) -> Self {
        let (r, c) = m.dim();
        Self {
            re: (0..r).map(|i| (0..c).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..r).map(|i| (0..c).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<Array2<C64>> {
        let r = self.re.len();
        if r == 0 || self.im.len() != r {
            return Err(Error::DimensionMismatch("bad matrix json".into()));
        }
        let c = self.re[0].len();
        if self.re.iter().any(|row| row.len() != c) || self.im.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix json".into()));
        }
        Ok(Array2::from_shape_fn((r, c), |(i, j)| {
            C64::new(self.re[i][j], self.im[i][j])
        }))
    }
}

/// On-disk Hamiltonian: dense matrix plus optional split blocks and an
/// optional sinusoidal drive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianJson {
    pub dim: usize,
    #[serde(flatten)]
    pub matrix: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h0: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriveJson {
    #[serde(flatten)]
    pub matrix: MatrixJson,
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

impl HamiltonianSpec {
    pub fn to_json(&self) -> HamiltonianJson {
        HamiltonianJson {
            dim: self.dim,
            matrix: MatrixJson::from_matrix(&self.base),
            h0: self.split.as_ref().map(|s| MatrixJson::from_matrix(&s.h0)),
            h1: self.split.as_ref().map(|s| MatrixJson::from_matrix(&s.h1)),
            h2: self.split.as_ref().map(|s| MatrixJson::from_matrix(&s.h2)),
            drive: self.drive.as_ref().map(|(m, omega, phase)| DriveJson {
                matrix: MatrixJson::from_matrix(m),
                omega: *omega,
                phase: *phase,
            }),
        }
    }

    pub fn from_json(j: &HamiltonianJson) -> Result<Self> {
        let base = j.matrix.to_matrix()?;
        if base.nrows() != j.dim {
            return Err(Error::DimensionMismatch("dim field disagrees with matrix".into()));
        }
        let mut spec = match &j.drive {
            None => Self::constant(base)?,
            Some(d) => Self::sinusoidal(base, d.matrix.to_matrix()?, d.omega, d.phase)?,
        };
        if let (Some(h0), Some(h1), Some(h2)) = (&j.h0, &j.h1, &j.h2) {
            let h1m = h1.to_matrix()?;
            let h2m = h2.to_matrix()?;
            let split = HamiltonianSplit {
                n1: h1m.nrows(),
                n2: h2m.nrows(),
                h0: h0.to_matrix()?,
                h1: h1m,
                h2: h2m,
            };
            spec = spec.with_split(split)?;
        }
        Ok(spec)
    }
}

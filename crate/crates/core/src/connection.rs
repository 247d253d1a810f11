//! Schrödinger propagation and horizontal lifting.
//!
//! The canonical connection declares a curve of unit vectors horizontal when
//! ⟨z, ż⟩ = 0; the dynamical connection attached to a Hamiltonian H adds the
//! energy term, declaring (z(t), t) horizontal when ⟨z, ż⟩ = −i⟨z, Hz⟩, so
//! that Schrödinger evolutions are exactly its horizontal curves. This
//! module evolves states (exact eigendecomposition propagation for constant
//! H, adaptive Runge–Kutta otherwise), measures horizontality residuals, and
//! computes the scalar phase ζ(t) that re-horizontalizes a path after the
//! Hamiltonian is enlarged.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::hamiltonian::HamiltonianSpec;
use crate::hilbert::StateVector;
use crate::linalg::{self, dagger};
use crate::ode;
use crate::{Error, Result};

/// Residual bound under which an input path is accepted as horizontal.
pub const HORIZONTAL_CLAIM_TOL: f64 = 1e-6;

/// A sampled curve of states.
#[derive(Debug, Clone)]
pub struct StatePath {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl StatePath {
    pub fn vectors(&self) -> Vec<Array1<C64>> {
        self.states.iter().map(|s| s.amplitudes.clone()).collect()
    }
}

/// A unit-modulus phase factor ζ(t) sampled on a grid, ζ(t₀) = 1.
#[derive(Debug, Clone)]
pub struct PhasePath {
    pub times: Vec<f64>,
    pub zeta: Vec<C64>,
    /// Continuously unwrapped argument α(t) with ζ = e^{iα}, α(t₀) = 0.
    pub alpha: Vec<f64>,
}

impl PhasePath {
    /// Pointwise product (phases compose additively).
    pub fn compose(&self, other: &PhasePath) -> Result<PhasePath> {
        if self.times.len() != other.times.len() {
            return Err(Error::DimensionMismatch("phase paths differ in length".into()));
        }
        Ok(PhasePath {
            times: self.times.clone(),
            zeta: self
                .zeta
                .iter()
                .zip(other.zeta.iter())
                .map(|(a, b)| a * b)
                .collect(),
            alpha: self
                .alpha
                .iter()
                .zip(other.alpha.iter())
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

/// Exact propagator for a time-independent Hamiltonian, Γ(t) = V e^{−iEt} V†Γ₀.
pub struct EigenPropagator {
    energies: Array1<f64>,
    vectors: Array2<C64>,
    coeffs: Array1<C64>,
}

impl EigenPropagator {
    pub fn new(h: &Array2<C64>, psi0: &Array1<C64>) -> Result<Self> {
        let defect = linalg::hermiticity_defect(h);
        if defect > crate::hamiltonian::HERMITICITY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        if h.nrows() != psi0.len() {
            return Err(Error::DimensionMismatch(format!(
                "H is {}x{}, state is {}-dimensional",
                h.nrows(),
                h.ncols(),
                psi0.len()
            )));
        }
        let (energies, vectors) = linalg::eigh(h);
        let coeffs = dagger(&vectors).dot(psi0);
        Ok(Self { energies, vectors, coeffs })
    }

    pub fn at(&self, t: f64) -> Array1<C64> {
        let phased = Array1::from_shape_fn(self.coeffs.len(), |k| {
            self.coeffs[k] * C64::from_polar(1.0, -self.energies[k] * t)
        });
        self.vectors.dot(&phased)
    }
}

/// Evolves a bipartite state under H on a uniform sample grid.
///
/// Time-independent Hamiltonians use exact eigendecomposition propagation;
/// time-dependent ones use the adaptive embedded Runge–Kutta pair with local
/// error bounded by `tol`. Every returned sample is normalized to 1e−9.
pub fn schrodinger_evolve(
    gamma0: &StateVector,
    h: &HamiltonianSpec,
    t_span: (f64, f64),
    tol: f64,
    n_samples: usize,
) -> Result<StatePath> {
    if h.dim() != gamma0.space.dim() {
        return Err(Error::DimensionMismatch(format!(
            "H dim {} vs state dim {}",
            h.dim(),
            gamma0.space.dim()
        )));
    }
    if n_samples < 2 {
        return Err(Error::TooFewSamples { got: n_samples, need: 2 });
    }
    let (t0, t1) = t_span;
    let times: Vec<f64> = (0..n_samples)
        .map(|i| t0 + (t1 - t0) * i as f64 / (n_samples - 1) as f64)
        .collect();
    let mut states = Vec::with_capacity(n_samples);

    if !h.is_time_dependent() {
        let prop = EigenPropagator::new(&h.value_at(0.0), &gamma0.amplitudes)?;
        for &t in &times {
            let amps = prop.at(t - t0);
            states.push(StateVector { space: gamma0.space, amplitudes: amps });
        }
    } else {
        let mut rhs = |t: f64, y: &Array1<C64>| -> Result<Array1<C64>> {
            Ok(h.apply(t, y).mapv(|x| x * C64::new(0.0, -1.0)))
        };
        let mut y = gamma0.amplitudes.clone();
        states.push(gamma0.clone());
        for w in times.windows(2) {
            y = ode::integrate(&mut rhs, w[0], w[1], &y, tol)?;
            states.push(StateVector { space: gamma0.space, amplitudes: y.clone() });
        }
    }
    for s in &states {
        let n = linalg::norm(&s.amplitudes);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized((n - 1.0).abs()));
        }
    }
    Ok(StatePath { times, states })
}

/// Per-interior-sample residual |⟨Γ, Γ̇⟩ + i⟨Γ, HΓ⟩| with Γ̇ from central
/// differences. Pass H = 0 (or rather a zero matrix) for the canonical
/// connection case |⟨Γ, Γ̇⟩|.
pub fn horizontality_residual(
    times: &[f64],
    vectors: &[Array1<C64>],
    h: &HamiltonianSpec,
) -> Result<Vec<f64>> {
    if times.len() < 3 {
        return Err(Error::TooFewSamples { got: times.len(), need: 3 });
    }
    if times.len() != vectors.len() {
        return Err(Error::DimensionMismatch("times/vectors length mismatch".into()));
    }
    let mut out = Vec::with_capacity(times.len() - 2);
    for i in 1..times.len() - 1 {
        let dt = times[i + 1] - times[i - 1];
        let deriv = (&vectors[i + 1] - &vectors[i - 1]).mapv(|x| x / dt);
        let a0 = linalg::inner(&vectors[i], &deriv);
        let energy = linalg::inner(&vectors[i], &h.apply(times[i], &vectors[i]));
        out.push((a0 + C64::new(0.0, 1.0) * energy).norm());
    }
    Ok(out)
}

/// Cumulative integral of sampled data with locally quadratic interpolation
/// (the two bracketing three-point parabolas are averaged where available).
pub(crate) fn cumulative_quadratic(ts: &[f64], g: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * (g[0] + g[1]) * (ts[1] - ts[0]);
        return out;
    }
    let segment = |i0: usize, a: f64, b: f64| -> f64 {
        // Integrate the parabola through (t_{i0}, t_{i0+1}, t_{i0+2}) over [a, b].
        let (t0, t1, t2) = (ts[i0], ts[i0 + 1], ts[i0 + 2]);
        let (g0, g1, g2) = (g[i0], g[i0 + 1], g[i0 + 2]);
        let l0 = |x: f64| (x - t1) * (x - t2) / ((t0 - t1) * (t0 - t2));
        let l1 = |x: f64| (x - t0) * (x - t2) / ((t1 - t0) * (t1 - t2));
        let l2 = |x: f64| (x - t0) * (x - t1) / ((t2 - t0) * (t2 - t1));
        // Two-point Gauss-Legendre on [a, b] integrates quadratics exactly.
        let mid = 0.5 * (a + b);
        let hw = 0.5 * (b - a);
        let x1 = mid - hw / 3.0_f64.sqrt();
        let x2 = mid + hw / 3.0_f64.sqrt();
        let f = |x: f64| g0 * l0(x) + g1 * l1(x) + g2 * l2(x);
        hw * (f(x1) + f(x2))
    };
    for i in 0..n - 1 {
        let (a, b) = (ts[i], ts[i + 1]);
        let left = if i >= 1 { Some(segment(i - 1, a, b)) } else { None };
        let right = if i + 2 < n { Some(segment(i, a, b)) } else { None };
        let inc = match (left, right) {
            (Some(x), Some(y)) => 0.5 * (x + y),
            (Some(x), None) => x,
            (None, Some(y)) => y,
            (None, None) => unreachable!(),
        };
        out[i + 1] = out[i] + inc;
    }
    out
}

/// The horizontalizing phase of the enlarged Hamiltonian H = H′ + H″.
///
/// Given a path Ω′ horizontal for the dynamical connection of H′ (checked
/// against `h_base`, or against the canonical connection when `h_base` is
/// `None`), returns ζ(t) = exp(−i ∫₀ᵗ ⟨Ω′, H″ Ω′⟩ ds) on the same grid;
/// multiplying the path by ζ yields a path horizontal for H′ + H″.
pub fn horizontalizing_phase(
    times: &[f64],
    vectors: &[Array1<C64>],
    h_extra: &HamiltonianSpec,
    h_base: Option<&HamiltonianSpec>,
) -> Result<PhasePath> {
    if times.len() != vectors.len() {
        return Err(Error::DimensionMismatch("times/vectors length mismatch".into()));
    }
    if times.len() >= 3 {
        let residuals = match h_base {
            Some(hb) => horizontality_residual(times, vectors, hb)?,
            None => {
                let zero = HamiltonianSpec::constant(Array2::from_elem(
                    (vectors[0].len(), vectors[0].len()),
                    C64::new(0.0, 0.0),
                ))?;
                horizontality_residual(times, vectors, &zero)?
            }
        };
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        if worst > HORIZONTAL_CLAIM_TOL {
            return Err(Error::NotHorizontal(worst, HORIZONTAL_CLAIM_TOL));
        }
    }
    let energies: Vec<f64> = times
        .iter()
        .zip(vectors.iter())
        .map(|(&t, v)| h_extra.expectation(t, v))
        .collect();
    let integral = cumulative_quadratic(times, &energies);
    let alpha: Vec<f64> = integral.iter().map(|x| -x).collect();
    Ok(PhasePath {
        times: times.to_vec(),
        zeta: alpha.iter().map(|&a| C64::from_polar(1.0, a)).collect(),
        alpha,
    })
}

/// The phase making an arbitrary unit-vector path horizontal with respect to
/// the canonical connection: ζ accumulates −arg⟨Ω_i, Ω_{i+1}⟩ (discrete
/// parallel transport), with no horizontality requirement on the input.
pub fn canonical_horizontalizing_phase(
    times: &[f64],
    vectors: &[Array1<C64>],
) -> Result<PhasePath> {
    if times.len() != vectors.len() {
        return Err(Error::DimensionMismatch("times/vectors length mismatch".into()));
    }
    if times.is_empty() {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    let mut alpha = Vec::with_capacity(times.len());
    alpha.push(0.0);
    let mut acc = 0.0;
    for i in 0..times.len() - 1 {
        let ov = linalg::inner(&vectors[i], &vectors[i + 1]);
        acc -= ov.arg();
        alpha.push(acc);
    }
    Ok(PhasePath {
        times: times.to_vec(),
        zeta: alpha.iter().map(|&a| C64::from_polar(1.0, a)).collect(),
        alpha,
    })
}

//! Bipartite states: polar decomposition, reduced traces, moment map, and
//! measurement-update primitives.
//!
//! A bipartite state Γ ∈ ℋ₁⊗ℋ₂ is stored factor-1-major: the amplitude of
//! e_i ⊗ e_j sits at flat index `i * n2 + j`. The polar decomposition
//! Γ = Σ_k q_k φ_k ⊗ ψ_k is the Schmidt decomposition with the amplitudes
//! kept complex; the sets {φ_k}, {ψ_k} are orthonormal ("bi-orthonormal"
//! frame) and the radii r_k = |q_k| are the singular values of the
//! matricization of Γ.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Unit-norm validation tolerance for state vectors.
pub const NORM_TOL: f64 = 1e-12;
/// Relative cutoff below which singular values are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;
/// Radii closer than this are flagged as degenerate (callers decide policy).
pub const DEGENERACY_FLAG_TOL: f64 = 1e-8;

/// Dimensions of a two-factor tensor product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteSpace {
    pub n1: usize,
    pub n2: usize,
}

impl BipartiteSpace {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter(
                "factor dimensions must be positive".into(),
            ));
        }
        Ok(Self { n1, n2 })
    }

    /// Total dimension n1·n2.
    pub fn dim(&self) -> usize {
        self.n1 * self.n2
    }
}

/// A unit vector in a bipartite space, amplitudes factor-1-major.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub space: BipartiteSpace,
    pub amplitudes: Array1<C64>,
}

impl StateVector {
    /// Builds a state, checking the unit-norm invariant.
    pub fn new(space: BipartiteSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "got {} amplitudes for a {}x{} space",
                amplitudes.len(),
                space.n1,
                space.n2
            )));
        }
        let n = linalg::norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized((n - 1.0).abs()));
        }
        Ok(Self { space, amplitudes })
    }

    /// Product state u ⊗ v (inputs get normalized).
    pub fn product(u: &Array1<C64>, v: &Array1<C64>) -> Result<Self> {
        let space = BipartiteSpace::new(u.len(), v.len())?;
        let nu = linalg::norm(u);
        let nv = linalg::norm(v);
        if nu < NORM_TOL || nv < NORM_TOL {
            return Err(Error::InvalidParameter("zero factor vector".into()));
        }
        let amps = Array1::from_shape_fn(space.dim(), |idx| {
            u[idx / v.len()] / nu * (v[idx % v.len()] / nv)
        });
        Ok(Self { space, amplitudes: amps })
    }

    /// The Bell singlet (|01⟩ − |10⟩)/√2 on ℂ²⊗ℂ².
    pub fn bell_singlet() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps = Array1::from(vec![
            C64::new(0.0, 0.0),
            C64::new(s, 0.0),
            C64::new(-s, 0.0),
            C64::new(0.0, 0.0),
        ]);
        Self { space: BipartiteSpace { n1: 2, n2: 2 }, amplitudes: amps }
    }

    /// Random unit vector (Gaussian entries, normalized).
    pub fn random(rng: &mut impl Rng, space: BipartiteSpace) -> Self {
        loop {
            let amps = Array1::from_shape_fn(space.dim(), |_| {
                C64::new(gauss(rng), gauss(rng))
            });
            let n = linalg::norm(&amps);
            if n > 1e-6 {
                return Self { space, amplitudes: amps.mapv(|x| x / n) };
            }
        }
    }

    /// The matricization M with M[i, j] = amplitude of e_i ⊗ e_j.
    pub fn matricize(&self) -> Array2<C64> {
        let (n1, n2) = (self.space.n1, self.space.n2);
        Array2::from_shape_fn((n1, n2), |(i, j)| self.amplitudes[i * n2 + j])
    }

    /// The state multiplied by a global phase e^{iθ}.
    pub fn scale_phase(&self, theta: f64) -> Self {
        let z = C64::from_polar(1.0, theta);
        Self { space: self.space, amplitudes: self.amplitudes.mapv(|a| a * z) }
    }
}

/// One sample of a standard normal via Box-Muller.
pub(crate) fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// One point of the polar-bundle fiber: amplitudes plus a bi-orthonormal
/// frame, Γ = Σ_k q_k φ_k ⊗ ψ_k.
#[derive(Debug, Clone)]
pub struct PolarFrame {
    pub q: Vec<C64>,
    pub phi: Vec<Array1<C64>>,
    pub psi: Vec<Array1<C64>>,
    /// Set when two radii are closer than [`DEGENERACY_FLAG_TOL`].
    pub degenerate: bool,
}

impl PolarFrame {
    /// Number of terms (the Schmidt rank after the cutoff).
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Radii r_k = |q_k|.
    pub fn radii(&self) -> Vec<f64> {
        self.q.iter().map(|q| q.norm()).collect()
    }

    /// Phase angles θ_k = arg q_k.
    pub fn phases(&self) -> Vec<f64> {
        self.q.iter().map(|q| q.arg()).collect()
    }

    /// Re-gauges so that q_k = r_k e^{iθ_k}; the compensating reciprocal
    /// phase is absorbed into φ_k, leaving each q_k φ_k ⊗ ψ_k unchanged.
    pub fn with_phases(&self, thetas: &[f64]) -> Result<Self> {
        if thetas.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} phases for {} terms",
                thetas.len(),
                self.len()
            )));
        }
        let mut out = self.clone();
        for (k, &th) in thetas.iter().enumerate() {
            let r = self.q[k].norm();
            let old = self.q[k];
            out.q[k] = C64::from_polar(r, th);
            let fix = if r > 0.0 { old / out.q[k] } else { C64::new(1.0, 0.0) };
            out.phi[k] = self.phi[k].mapv(|x| x * fix);
        }
        Ok(out)
    }

    /// Worst deviation of {φ_k} and {ψ_k} from orthonormality.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.len();
        let mut worst = 0.0_f64;
        for a in 0..m {
            for b in 0..m {
                let target = if a == b { 1.0 } else { 0.0 };
                let dp = linalg::inner(&self.phi[a], &self.phi[b]);
                let ds = linalg::inner(&self.psi[a], &self.psi[b]);
                worst = worst.max((dp - C64::new(target, 0.0)).norm());
                worst = worst.max((ds - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Smallest pairwise gap of the squared radii, the quantity that enters
    /// the frame-evolution denominators.
    pub fn min_sq_radius_gap(&self) -> f64 {
        let r = self.radii();
        let mut gap = f64::INFINITY;
        for a in 0..r.len() {
            for b in (a + 1)..r.len() {
                gap = gap.min((r[a] * r[a] - r[b] * r[b]).abs());
            }
        }
        gap
    }
}

/// A positive trace-one operator.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub dim: usize,
    pub matrix: Array2<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity (1e−12), unit trace (1e−12), and positivity
    /// (eigenvalues ≥ −1e−12).
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        let d = Self::validate(&matrix)?;
        let tr: C64 = matrix.diag().iter().sum();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "density operator trace {} != 1",
                tr.re
            )));
        }
        Ok(Self { dim: d, matrix })
    }

    /// Same checks except the unit-trace one; used for Lüders updates with
    /// projector families that do not resolve the identity, where the output
    /// trace equals the covered probability mass instead.
    pub fn with_trace_unchecked(matrix: Array2<C64>) -> Result<Self> {
        let d = Self::validate(&matrix)?;
        Ok(Self { dim: d, matrix })
    }

    fn validate(matrix: &Array2<C64>) -> Result<usize> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(Error::DimensionMismatch("non-square density matrix".into()));
        }
        let h = linalg::hermiticity_defect(matrix);
        if h > 1e-12 {
            return Err(Error::NotHermitian(h));
        }
        let (vals, _) = linalg::eigh(matrix);
        if vals.iter().any(|&x| x < -1e-12) {
            return Err(Error::InvalidParameter(format!(
                "negative eigenvalue {:.3e}",
                vals[0]
            )));
        }
        Ok(r)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().iter().map(|z| z.re).sum()
    }

    /// Ascending eigenvalues.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::eigh(&self.matrix).0.to_vec()
    }
}

/// Polar (Schmidt) decomposition of a normalized state.
///
/// Gauge: amplitudes come back real non-negative, sorted descending, with
/// singular values below [`RANK_CUTOFF`] times the largest dropped; each
/// pair (φ_k, ψ_k) is rotated by reciprocal phases so that the
/// largest-magnitude component of φ_k is real positive. Near-equal radii
/// only set the `degenerate` flag — the decomposition itself still succeeds.
pub fn polar_decompose(gamma: &StateVector) -> Result<PolarFrame> {
    let n = linalg::norm(&gamma.amplitudes);
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized((n - 1.0).abs()));
    }
    let m = gamma.matricize();
    let (u, s, v) = linalg::svd(&m);
    let cutoff = RANK_CUTOFF * s.iter().cloned().fold(0.0, f64::max);
    let mut q = Vec::new();
    let mut phi = Vec::new();
    let mut psi = Vec::new();
    for k in 0..s.len() {
        if s[k] <= cutoff {
            continue;
        }
        let mut fk = Array1::from_iter(u.column(k).iter().cloned());
        // The matricization satisfies M = Σ_k σ_k u_k v_k† = Σ_k σ_k φ_k ψ_kᵀ,
        // so ψ_k is the conjugate of the right singular vector.
        let mut gk = Array1::from_iter(v.column(k).iter().map(|z| z.conj()));
        let imax = fk
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| {
                a.norm().partial_cmp(&b.norm()).unwrap().then(j.cmp(i))
            })
            .map(|(i, _)| i)
            .unwrap();
        let z = fk[imax];
        if z.norm() > 0.0 {
            let ph = z / z.norm();
            fk.mapv_inplace(|x| x * ph.conj());
            gk.mapv_inplace(|x| x * ph);
        }
        q.push(C64::new(s[k], 0.0));
        phi.push(fk);
        psi.push(gk);
    }
    let mut degenerate = false;
    for w in q.windows(2) {
        if (w[0].norm() - w[1].norm()).abs() < DEGENERACY_FLAG_TOL {
            degenerate = true;
        }
    }
    Ok(PolarFrame { q, phi, psi, degenerate })
}

/// Rebuilds Σ_k q_k φ_k ⊗ ψ_k as a state of `space`.
pub fn reconstruct(frame: &PolarFrame, space: BipartiteSpace) -> Result<StateVector> {
    for k in 0..frame.len() {
        if frame.phi[k].len() != space.n1 || frame.psi[k].len() != space.n2 {
            return Err(Error::DimensionMismatch(format!(
                "frame term {k} is {}x{}, space is {}x{}",
                frame.phi[k].len(),
                frame.psi[k].len(),
                space.n1,
                space.n2
            )));
        }
    }
    let mut amps = Array1::from_elem(space.dim(), C64::new(0.0, 0.0));
    for k in 0..frame.len() {
        for i in 0..space.n1 {
            for j in 0..space.n2 {
                amps[i * space.n2 + j] += frame.q[k] * frame.phi[k][i] * frame.psi[k][j];
            }
        }
    }
    Ok(StateVector { space, amplitudes: amps })
}

/// Reduced trace of the pure-state projector P_Γ onto factor `side` (1 or 2).
pub fn reduced_trace(gamma: &StateVector, side: u8) -> Result<DensityOperator> {
    let n = linalg::norm(&gamma.amplitudes);
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized((n - 1.0).abs()));
    }
    let m = gamma.matricize();
    let (n1, n2) = (gamma.space.n1, gamma.space.n2);
    let rho = match side {
        1 => Array2::from_shape_fn((n1, n1), |(i, ip)| {
            (0..n2).map(|j| m[(i, j)] * m[(ip, j)].conj()).sum()
        }),
        2 => Array2::from_shape_fn((n2, n2), |(j, jp)| {
            (0..n1).map(|i| m[(i, j)] * m[(i, jp)].conj()).sum()
        }),
        _ => return Err(Error::InvalidParameter("side must be 1 or 2".into())),
    };
    DensityOperator::new(rho)
}

/// Partial trace of an arbitrary operator on ℋ₁⊗ℋ₂ onto factor `side`.
pub fn partial_trace_op(op: &Array2<C64>, n1: usize, n2: usize, side: u8) -> Result<Array2<C64>> {
    let d = n1 * n2;
    if op.dim() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "operator is {:?}, expected {}x{}",
            op.dim(),
            d,
            d
        )));
    }
    let out = match side {
        1 => Array2::from_shape_fn((n1, n1), |(i, ip)| {
            (0..n2).map(|j| op[(i * n2 + j, ip * n2 + j)]).sum()
        }),
        2 => Array2::from_shape_fn((n2, n2), |(j, jp)| {
            (0..n1).map(|i| op[(i * n2 + j, i * n2 + jp)]).sum()
        }),
        _ => return Err(Error::InvalidParameter("side must be 1 or 2".into())),
    };
    Ok(out)
}

/// The moment map μ(Γ) = −(i/2)(Tred₁ P_Γ, Tred₂ P_Γ): a pair of
/// skew-Hermitian matrices, constant on each polar fiber.
pub fn moment_map(gamma: &StateVector) -> Result<(Array2<C64>, Array2<C64>)> {
    let r1 = reduced_trace(gamma, 1)?;
    let r2 = reduced_trace(gamma, 2)?;
    let half_i = C64::new(0.0, -0.5);
    Ok((r1.matrix.mapv(|x| x * half_i), r2.matrix.mapv(|x| x * half_i)))
}

/// Lüders update ρ ↦ Σ_k P_k ρ P_k for mutually orthogonal projections.
pub fn luders_update(
    rho0: &DensityOperator,
    projectors: &[Array2<C64>],
) -> Result<DensityOperator> {
    let d = rho0.dim;
    let mut worst = 0.0_f64;
    for (a, p) in projectors.iter().enumerate() {
        if p.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "projector {a} is {:?}, state is {d}x{d}",
                p.dim()
            )));
        }
        worst = worst.max(linalg::hermiticity_defect(p));
        worst = worst.max(linalg::fro_norm(&(&p.dot(p) - p)));
        for q in projectors.iter().skip(a + 1) {
            worst = worst.max(linalg::fro_norm(&p.dot(q)));
        }
    }
    if worst > 1e-10 {
        return Err(Error::NonOrthogonalProjectors(worst));
    }
    let mut out = Array2::from_elem((d, d), C64::new(0.0, 0.0));
    for p in projectors {
        out = out + p.dot(&rho0.matrix).dot(p);
    }
    DensityOperator::with_trace_unchecked(out)
}

/// Reorders the factors of a multi-factor state so that the factors listed
/// in `left_set` (0-based, relative order kept) become factor 1 of a new
/// bipartition and the rest become factor 2. Norm is preserved exactly.
pub fn rebipartition(
    gamma: &StateVector,
    factor_dims: &[usize],
    left_set: &[usize],
) -> Result<StateVector> {
    let total: usize = factor_dims.iter().product();
    if total != gamma.amplitudes.len() {
        return Err(Error::DimensionMismatch(format!(
            "factor dims product {total} != state dim {}",
            gamma.amplitudes.len()
        )));
    }
    let m = factor_dims.len();
    if left_set.is_empty() || left_set.len() >= m {
        return Err(Error::InvalidParameter(
            "left_set must be a non-empty proper subset".into(),
        ));
    }
    let mut seen = vec![false; m];
    for &i in left_set {
        if i >= m || seen[i] {
            return Err(Error::InvalidParameter(format!(
                "bad factor index {i} in left_set"
            )));
        }
        seen[i] = true;
    }
    let perm: Vec<usize> = left_set
        .iter()
        .cloned()
        .chain((0..m).filter(|i| !seen[*i]))
        .collect();

    let mut stride = vec![1usize; m];
    for i in (0..m - 1).rev() {
        stride[i] = stride[i + 1] * factor_dims[i + 1];
    }
    let dest_dims: Vec<usize> = perm.iter().map(|&p| factor_dims[p]).collect();
    let mut dest_stride = vec![1usize; m];
    for i in (0..m - 1).rev() {
        dest_stride[i] = dest_stride[i + 1] * dest_dims[i + 1];
    }

    let mut amps = Array1::from_elem(total, C64::new(0.0, 0.0));
    let mut idx = vec![0usize; m];
    for src in 0..total {
        let mut rem = src;
        for f in 0..m {
            idx[f] = rem / stride[f];
            rem %= stride[f];
        }
        let mut dst = 0usize;
        for (j, &p) in perm.iter().enumerate() {
            dst += idx[p] * dest_stride[j];
        }
        amps[dst] = gamma.amplitudes[src];
    }
    let n1: usize = left_set.iter().map(|&i| factor_dims[i]).product();
    let space = BipartiteSpace::new(n1, total / n1)?;
    Ok(StateVector { space, amplitudes: amps })
}

// ---------------------------------------------------------------------------
// JSON wire formats
// ---------------------------------------------------------------------------

/// On-disk form of a state vector: complex amplitudes as parallel real
/// arrays, factor-1-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateJson {
    pub n1: usize,
    pub n2: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl StateVector {
    pub fn to_json(&self) -> StateJson {
        StateJson {
            n1: self.space.n1,
            n2: self.space.n2,
            re: self.amplitudes.iter().map(|z| z.re).collect(),
            im: self.amplitudes.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_json(j: &StateJson) -> Result<Self> {
        if j.re.len() != j.im.len() {
            return Err(Error::DimensionMismatch(
                "re/im arrays differ in length".into(),
            ));
        }
        let amps = Array1::from_iter(
            j.re.iter().zip(j.im.iter()).map(|(&r, &i)| C64::new(r, i)),
        );
        StateVector::new(BipartiteSpace::new(j.n1, j.n2)?, amps)
    }
}

/// On-disk form of a density operator (row-major matrix entries).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DensityOperator {
    pub fn to_json(&self) -> DensityJson {
        DensityJson {
            dim: self.dim,
            re: (0..self.dim)
                .map(|i| (0..self.dim).map(|j| self.matrix[(i, j)].re).collect())
                .collect(),
            im: (0..self.dim)
                .map(|i| (0..self.dim).map(|j| self.matrix[(i, j)].im).collect())
                .collect(),
        }
    }

    pub fn from_json(j: &DensityJson) -> Result<Self> {
        let m = Array2::from_shape_fn((j.dim, j.dim), |(r, c)| {
            C64::new(j.re[r][c], j.im[r][c])
        });
        DensityOperator::new(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dagger, eye, fro_norm};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize, k: usize) -> Array1<C64> {
        Array1::from_shape_fn(n, |i| {
            if i == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        })
    }

    fn state_dist(a: &StateVector, b: &StateVector) -> f64 {
        linalg::norm(&(&a.amplitudes - &b.amplitudes))
    }

    #[test]
    fn polar_of_product_state() {
        let g = StateVector::product(&unit(3, 0), &unit(4, 1)).unwrap();
        let f = polar_decompose(&g).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f.q[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(linalg::norm(&(&f.phi[0] - &unit(3, 0))) < 1e-14);
        assert!(linalg::norm(&(&f.psi[0] - &unit(4, 1))) < 1e-14);
        assert!(!f.degenerate);
    }

    #[test]
    fn polar_of_singlet_has_equal_radii() {
        let g = StateVector::bell_singlet();
        let f = polar_decompose(&g).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(f.len(), 2);
        assert!((f.q[0].norm() - s).abs() < 1e-12);
        assert!((f.q[1].norm() - s).abs() < 1e-12);
        assert!(f.degenerate, "equal radii must set the degenerate flag");
    }

    #[test]
    fn polar_of_two_spin_initial_state() {
        // Two-spin state with half-angle θ and real amplitudes q±(0):
        // Γ(0) = q+ (cos θ/2, sin θ/2) ⊗ (cos θ/2, −sin θ/2)
        //      + q− (−sin θ/2, cos θ/2) ⊗ (sin θ/2, cos θ/2).
        let theta = 3.0 * std::f64::consts::PI / 7.0;
        let qp = 0.94_f64;
        let qm = (1.0 - qp * qp).sqrt();
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let re = |x: f64| C64::new(x, 0.0);
        let phi_p = Array1::from(vec![re(c), re(s)]);
        let psi_p = Array1::from(vec![re(c), re(-s)]);
        let phi_m = Array1::from(vec![re(-s), re(c)]);
        let psi_m = Array1::from(vec![re(s), re(c)]);
        let amps = Array1::from_shape_fn(4, |idx| {
            let (i, j) = (idx / 2, idx % 2);
            re(qp) * phi_p[i] * psi_p[j] + re(qm) * phi_m[i] * psi_m[j]
        });
        let g = StateVector::new(BipartiteSpace { n1: 2, n2: 2 }, amps).unwrap();
        let f = polar_decompose(&g).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f.q[0].re - qp).abs() < 1e-12);
        assert!((f.q[1].re - qm).abs() < 1e-12);
        assert!(linalg::norm(&(&f.phi[0] - &phi_p)) < 1e-10);
        assert!(linalg::norm(&(&f.psi[0] - &psi_p)) < 1e-10);
        assert!(linalg::norm(&(&f.phi[1] - &phi_m)) < 1e-10);
        assert!(linalg::norm(&(&f.psi[1] - &psi_m)) < 1e-10);
        let back = reconstruct(&f, g.space).unwrap();
        assert!(state_dist(&back, &g) < 1e-12);
    }

    #[test]
    fn polar_rejects_unnormalized() {
        let amps = Array1::from(vec![C64::new(2.0, 0.0); 4]);
        let g = StateVector { space: BipartiteSpace { n1: 2, n2: 2 }, amplitudes: amps };
        assert!(matches!(polar_decompose(&g), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn reconstruct_single_term() {
        let f = PolarFrame {
            q: vec![C64::new(1.0, 0.0)],
            phi: vec![unit(2, 0)],
            psi: vec![unit(3, 1)],
            degenerate: false,
        };
        let g = reconstruct(&f, BipartiteSpace { n1: 2, n2: 3 }).unwrap();
        let want = StateVector::product(&unit(2, 0), &unit(3, 1)).unwrap();
        assert!(state_dist(&g, &want) < 1e-15);
    }

    #[test]
    fn reconstruct_respects_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = StateVector::random(&mut rng, BipartiteSpace { n1: 3, n2: 3 });
        let f = polar_decompose(&g).unwrap();
        let theta = 0.7321;
        let z = C64::from_polar(1.0, theta);
        let mut f2 = f.clone();
        for q in f2.q.iter_mut() {
            *q *= z;
        }
        let got = reconstruct(&f2, g.space).unwrap();
        let want = g.scale_phase(theta);
        assert!(state_dist(&got, &want) < 1e-12);
    }

    #[test]
    fn round_trip_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n1 = rng.gen_range(1..=8);
            let n2 = rng.gen_range(1..=8);
            let g = StateVector::random(&mut rng, BipartiteSpace { n1, n2 });
            let f = polar_decompose(&g).unwrap();
            let back = reconstruct(&f, g.space).unwrap();
            assert!(
                state_dist(&back, &g) < 1e-12,
                "round-trip failed for {n1}x{n2}"
            );
        }
    }

    #[test]
    fn reduced_trace_of_product_is_projector() {
        let g = StateVector::product(&unit(2, 1), &unit(3, 2)).unwrap();
        let r1 = reduced_trace(&g, 1).unwrap();
        let mut want = Array2::from_elem((2, 2), C64::new(0.0, 0.0));
        want[(1, 1)] = C64::new(1.0, 0.0);
        assert!(fro_norm(&(&r1.matrix - &want)) < 1e-14);
    }

    #[test]
    fn reduced_trace_of_singlet_is_maximally_mixed() {
        let g = StateVector::bell_singlet();
        for side in [1, 2] {
            let r = reduced_trace(&g, side).unwrap();
            let want = eye(2).mapv(|x| x * 0.5);
            assert!(fro_norm(&(&r.matrix - &want)) < 1e-14);
        }
    }

    #[test]
    fn reduced_trace_spectrum_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = StateVector::random(&mut rng, BipartiteSpace { n1: 4, n2: 5 });
            let (_, s, _) = linalg::svd(&g.matricize());
            let mut want: Vec<f64> = s.iter().map(|x| x * x).collect();
            want.resize(4, 0.0);
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let got = reduced_trace(&g, 1).unwrap().spectrum();
            for (a, b) in got.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn moment_map_of_product_and_singlet() {
        let g = StateVector::product(&unit(2, 0), &unit(2, 0)).unwrap();
        let (m1, m2) = moment_map(&g).unwrap();
        assert!((m1[(0, 0)] - C64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((m2[(0, 0)] - C64::new(0.0, -0.5)).norm() < 1e-14);

        let s = StateVector::bell_singlet();
        let (m1, m2) = moment_map(&s).unwrap();
        let want = eye(2).mapv(|x| x * C64::new(0.0, -0.25));
        assert!(fro_norm(&(&m1 - &want)) < 1e-14);
        assert!(fro_norm(&(&m2 - &want)) < 1e-14);
    }

    #[test]
    fn moment_map_constant_on_fiber() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = StateVector::random(&mut rng, BipartiteSpace { n1: 3, n2: 4 });
        let f = polar_decompose(&g).unwrap();
        let thetas: Vec<f64> = (0..f.len()).map(|k| 0.31 * (k as f64 + 1.0)).collect();
        let f2 = f.with_phases(&thetas).unwrap();
        let g2 = reconstruct(&f2, g.space).unwrap();
        let (a1, a2) = moment_map(&g).unwrap();
        let (b1, b2) = moment_map(&g2).unwrap();
        assert!(fro_norm(&(&a1 - &b1)) < 1e-12);
        assert!(fro_norm(&(&a2 - &b2)) < 1e-12);
    }

    #[test]
    fn moment_map_components_skew_with_matching_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = StateVector::random(&mut rng, BipartiteSpace { n1: 3, n2: 5 });
        let (m1, m2) = moment_map(&g).unwrap();
        assert!(fro_norm(&(&m1 + &dagger(&m1))) < 1e-13);
        assert!(fro_norm(&(&m2 + &dagger(&m2))) < 1e-13);
        let h1 = m1.mapv(|x| x * C64::new(0.0, 2.0));
        let h2 = m2.mapv(|x| x * C64::new(0.0, 2.0));
        let e1: Vec<f64> = linalg::eigh(&h1).0.into_iter().filter(|x| x.abs() > 1e-10).collect();
        let e2: Vec<f64> = linalg::eigh(&h2).0.into_iter().filter(|x| x.abs() > 1e-10).collect();
        assert_eq!(e1.len(), e2.len());
        for (a, b) in e1.iter().zip(e2.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn luders_fixed_point_and_coherence_kill() {
        let mut p0 = Array2::from_elem((2, 2), C64::new(0.0, 0.0));
        p0[(0, 0)] = C64::new(1.0, 0.0);
        let mut p1 = Array2::from_elem((2, 2), C64::new(0.0, 0.0));
        p1[(1, 1)] = C64::new(1.0, 0.0);

        let mut d = Array2::from_elem((2, 2), C64::new(0.0, 0.0));
        d[(0, 0)] = C64::new(0.7, 0.0);
        d[(1, 1)] = C64::new(0.3, 0.0);
        let rho = DensityOperator::new(d.clone()).unwrap();
        let out = luders_update(&rho, &[p0.clone(), p1.clone()]).unwrap();
        assert!(fro_norm(&(&out.matrix - &d)) < 1e-14);

        let v = Array1::from(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let pure = Array2::from_shape_fn((2, 2), |(i, j)| v[i] * v[j].conj());
        let rho = DensityOperator::new(pure).unwrap();
        let out = luders_update(&rho, &[p0, p1]).unwrap();
        assert!(out.matrix[(0, 1)].norm() < 1e-15);
        assert!((out.matrix[(0, 0)].re - 0.36).abs() < 1e-14);
        assert!((out.matrix[(1, 1)].re - 0.64).abs() < 1e-14);
    }

    #[test]
    fn luders_preserves_trace_for_resolving_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = Array2::from_shape_fn((4, 4), |_| C64::new(gauss(&mut rng), gauss(&mut rng)));
        let m = a.dot(&dagger(&a));
        let tr: C64 = m.diag().iter().sum();
        let rho = DensityOperator::new(m.mapv(|x| x / tr)).unwrap();
        let b = Array2::from_shape_fn((4, 4), |_| C64::new(gauss(&mut rng), gauss(&mut rng)));
        let (_, vecs) = linalg::eigh(&(&b + &dagger(&b)));
        let projs: Vec<Array2<C64>> = (0..4)
            .map(|k| {
                let col = vecs.column(k);
                Array2::from_shape_fn((4, 4), |(i, j)| col[i] * col[j].conj())
            })
            .collect();
        let out = luders_update(&rho, &projs).unwrap();
        assert!((out.trace() - rho.trace()).abs() < 1e-12);
    }

    #[test]
    fn luders_rejects_non_orthogonal() {
        let half = Array2::from_shape_fn((2, 2), |_| C64::new(0.5, 0.0));
        let mut p0 = Array2::from_elem((2, 2), C64::new(0.0, 0.0));
        p0[(0, 0)] = C64::new(1.0, 0.0);
        let rho = DensityOperator::new(eye(2).mapv(|x| x * 0.5)).unwrap();
        assert!(matches!(
            luders_update(&rho, &[half, p0]),
            Err(Error::NonOrthogonalProjectors(_))
        ));
    }

    #[test]
    fn rebipartition_identity_and_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let g = StateVector::random(&mut rng, BipartiteSpace { n1: 2, n2: 2 });
        let same = rebipartition(&g, &[2, 2], &[0]).unwrap();
        assert!(state_dist(&same, &g) < 1e-15);

        // 3 factors: move {2,3} to the left, then move the remaining original
        // factor (now at position 3) back to the front.
        let g3 = StateVector::random(&mut rng, BipartiteSpace { n1: 2, n2: 4 });
        let step1 = rebipartition(&g3, &[2, 2, 2], &[1, 2]).unwrap();
        let step2 = rebipartition(&step1, &[2, 2, 2], &[2]).unwrap();
        assert!(state_dist(&step2, &g3) < 1e-15);
    }

    #[test]
    fn rebipartition_left_pair_matches_contraction_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let g = StateVector::random(&mut rng, BipartiteSpace { n1: 2, n2: 4 });
        let re = rebipartition(&g, &[2, 2, 2], &[0, 1]).unwrap();
        assert_eq!((re.space.n1, re.space.n2), (4, 2));
        let rho = reduced_trace(&re, 1).unwrap();
        // Brute-force oracle: contract the third index directly in the
        // original (2,2,2) layout.
        let want = Array2::from_shape_fn((4, 4), |(a, b)| {
            (0..2)
                .map(|k| g.amplitudes[a * 2 + k] * g.amplitudes[b * 2 + k].conj())
                .sum::<C64>()
        });
        assert!(fro_norm(&(&rho.matrix - &want)) < 1e-13);
    }

    #[test]
    fn tr1proj_idempotent_on_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (n1, n2) = (3, 4);
        let a = Array2::from_shape_fn((12, 12), |_| C64::new(gauss(&mut rng), gauss(&mut rng)));
        let h = (&a + &dagger(&a)).mapv(|x| 0.5 * x);
        let p = |m: &Array2<C64>| -> Array2<C64> {
            let t = partial_trace_op(m, n1, n2, 1).unwrap();
            linalg::kron(&t.mapv(|x| x / n2 as f64), &eye(n2))
        };
        let once = p(&h);
        let twice = p(&once);
        assert!(fro_norm(&(&once - &twice)) < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let g = StateVector::random(&mut rng, BipartiteSpace { n1: 3, n2: 2 });
        let j = g.to_json();
        let text = serde_json::to_string(&j).unwrap();
        let back = StateVector::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert!(state_dist(&back, &g) < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn prop_round_trip_identity(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n1 = rng.gen_range(1..=8);
            let n2 = rng.gen_range(1..=8);
            let g = StateVector::random(&mut rng, BipartiteSpace { n1, n2 });
            let f = polar_decompose(&g).unwrap();
            prop_assert!(f.orthonormality_defect() < 1e-10);
            let sum: f64 = f.q.iter().map(|q| q.norm_sqr()).sum();
            prop_assert!((sum - 1.0).abs() < 1e-10);
            let back = reconstruct(&f, g.space).unwrap();
            let d = linalg::norm(&(&back.amplitudes - &g.amplitudes));
            prop_assert!(d < 1e-10);
        }

        #[test]
        fn prop_reduced_spectra_agree(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n1 = rng.gen_range(1..=6);
            let n2 = rng.gen_range(1..=6);
            let g = StateVector::random(&mut rng, BipartiteSpace { n1, n2 });
            let s1: Vec<f64> = reduced_trace(&g, 1).unwrap().spectrum()
                .into_iter().filter(|x| *x > 1e-10).collect();
            let s2: Vec<f64> = reduced_trace(&g, 2).unwrap().spectrum()
                .into_iter().filter(|x| *x > 1e-10).collect();
            prop_assert_eq!(s1.len(), s2.len());
            for (a, b) in s1.iter().zip(s2.iter()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

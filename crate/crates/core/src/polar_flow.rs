//! Evolution of the polar frame and amplitudes.
//!
//! Two first-class strategies are implemented and cross-validated:
//!
//! - `Ode`: the coupled autonomous system for the canonically horizontal
//!   frame,
//!     q̇_a = −i Σ_k H_{aa,kk} q_k,
//!     φ̇_a = Σ_{k≠a} β_{ka}/(r_a² − r_k²) φ_k,
//!     ψ̇_a = Σ_{k≠a} β′_{ka}/(r_a² − r_k²) ψ_k,
//!   integrated adaptively, plus the dynamical-connection phase corrections
//!   q_k ↦ q_k e^{i∫H_{kk,kk}} applied on output.
//! - `SvdTransport`: re-decompose Γ(t) at each substep, fix the new singular
//!   vectors by maximal-overlap continuity (discrete parallel transport),
//!   and apply the same scalar horizontalizing factors.
//!
//! The ODE denominators blow up at radii crossings, so `SvdTransport` is the
//! reference near degeneracies; `Ode` refuses to evaluate once the squared
//! radii gap falls below [`DEGENERACY_FLOOR`].

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::connection::{cumulative_quadratic, EigenPropagator};
use crate::hamiltonian::{HamiltonianSpec, HamiltonianSplit};
use crate::hilbert::{
    partial_trace_op, polar_decompose, reconstruct, BipartiteSpace, PolarFrame, StateVector,
};
use crate::linalg::{self, eye, inner};
use crate::ode;
use crate::{Error, Result};

/// Minimum |r_j² − r_k²| below which the ODE right-hand side refuses to run.
pub const DEGENERACY_FLOOR: f64 = 1e-6;

/// The coupling tensor H_{jk,mn} = ⟨H(φ_j⊗ψ_k), φ_m⊗ψ_n⟩ stored as an
/// m²×m² matrix with paired row index (j,k) → j·m + k.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub m: usize,
    pub entries: Array2<C64>,
}

impl CouplingMatrix {
    pub fn get(&self, j: usize, k: usize, mm: usize, n: usize) -> C64 {
        self.entries[(j * self.m + k, mm * self.m + n)]
    }

    /// Max deviation from the Hermitian symmetry H_{jk,mn} = conj(H_{mn,jk}).
    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.entries)
    }
}

fn product_vector(phi: &Array1<C64>, psi: &Array1<C64>) -> Array1<C64> {
    let (n1, n2) = (phi.len(), psi.len());
    Array1::from_shape_fn(n1 * n2, |idx| phi[idx / n2] * psi[idx % n2])
}

/// All coupling elements of `h` (evaluated at time `t`) in the frame basis.
pub fn coupling_elements(h: &HamiltonianSpec, t: f64, frame: &PolarFrame) -> Result<CouplingMatrix> {
    let m = frame.len();
    if m == 0 {
        return Err(Error::InvalidParameter("empty frame".into()));
    }
    let dim = frame.phi[0].len() * frame.psi[0].len();
    if h.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "H dim {} vs frame product dim {}",
            h.dim(),
            dim
        )));
    }
    let mut products = Vec::with_capacity(m * m);
    for j in 0..m {
        for k in 0..m {
            products.push(product_vector(&frame.phi[j], &frame.psi[k]));
        }
    }
    let applied: Vec<Array1<C64>> = products.iter().map(|p| h.apply(t, p)).collect();
    let entries = Array2::from_shape_fn((m * m, m * m), |(r, c)| inner(&products[r], &applied[c]));
    Ok(CouplingMatrix { m, entries })
}

/// The table T[a·m+b][k] = H_{ab,kk}; everything the flow needs.
fn diagonal_coupling_table(
    h: &HamiltonianSpec,
    t: f64,
    phi: &[Array1<C64>],
    psi: &[Array1<C64>],
) -> Vec<Vec<C64>> {
    let m = phi.len();
    let applied: Vec<Array1<C64>> = (0..m)
        .map(|k| h.apply(t, &product_vector(&phi[k], &psi[k])))
        .collect();
    let mut table = vec![vec![C64::new(0.0, 0.0); m]; m * m];
    for a in 0..m {
        for b in 0..m {
            let gab = product_vector(&phi[a], &psi[b]);
            for k in 0..m {
                table[a * m + b][k] = inner(&gab, &applied[k]);
            }
        }
    }
    table
}

/// The pair (β, β′) driving the frame rotation:
/// β_ab = −i(conj(q_b) Σ_k q_k H_{ab,kk} − q_a Σ_k conj(q_k) H_{kk,ba}),
/// and β′ the same with the paired index order swapped.
pub fn beta_matrices(
    frame: &PolarFrame,
    h: &HamiltonianSpec,
    t: f64,
) -> Result<(Array2<C64>, Array2<C64>)> {
    let m = frame.len();
    let table = diagonal_coupling_table(h, t, &frame.phi, &frame.psi);
    let q = &frame.q;
    let minus_i = C64::new(0.0, -1.0);
    let mut beta = Array2::from_elem((m, m), C64::new(0.0, 0.0));
    let mut beta_p = Array2::from_elem((m, m), C64::new(0.0, 0.0));
    for a in 0..m {
        for b in 0..m {
            let mut s1 = C64::new(0.0, 0.0); // Σ q_k H_{ab,kk}
            let mut s2 = C64::new(0.0, 0.0); // Σ conj(q_k) H_{kk,ba}
            let mut s3 = C64::new(0.0, 0.0); // Σ q_k H_{ba,kk}
            let mut s4 = C64::new(0.0, 0.0); // Σ conj(q_k) H_{kk,ab}
            for k in 0..m {
                s1 += q[k] * table[a * m + b][k];
                s2 += q[k].conj() * table[b * m + a][k].conj();
                s3 += q[k] * table[b * m + a][k];
                s4 += q[k].conj() * table[a * m + b][k].conj();
            }
            beta[(a, b)] = minus_i * (q[b].conj() * s1 - q[a] * s2);
            beta_p[(a, b)] = minus_i * (q[b].conj() * s3 - q[a] * s4);
        }
    }
    Ok((beta, beta_p))
}

/// Time derivatives of the canonically horizontal polar data.
#[derive(Debug, Clone)]
pub struct FlowDerivatives {
    pub q_dot: Vec<C64>,
    pub phi_dot: Vec<Array1<C64>>,
    pub psi_dot: Vec<Array1<C64>>,
}

/// Right-hand side of the autonomous frame/amplitude system. Fails with a
/// degenerate-input error once two squared radii come closer than
/// [`DEGENERACY_FLOOR`]; callers switch to `SvdTransport` there.
pub fn flow_rhs(frame: &PolarFrame, h: &HamiltonianSpec, t: f64) -> Result<FlowDerivatives> {
    let m = frame.len();
    let gap = frame.min_sq_radius_gap();
    if m > 1 && gap < DEGENERACY_FLOOR {
        return Err(Error::DegenerateRadii { gap, t });
    }
    let table = diagonal_coupling_table(h, t, &frame.phi, &frame.psi);
    let q = &frame.q;
    let minus_i = C64::new(0.0, -1.0);

    let mut q_dot = vec![C64::new(0.0, 0.0); m];
    for a in 0..m {
        let mut s = C64::new(0.0, 0.0);
        for k in 0..m {
            s += table[a * m + a][k] * q[k];
        }
        q_dot[a] = minus_i * s;
    }

    let x: Vec<f64> = q.iter().map(|z| z.norm_sqr()).collect();
    let mut beta = Array2::from_elem((m, m), C64::new(0.0, 0.0));
    let mut beta_p = Array2::from_elem((m, m), C64::new(0.0, 0.0));
    for a in 0..m {
        for b in 0..m {
            let mut s1 = C64::new(0.0, 0.0);
            let mut s2 = C64::new(0.0, 0.0);
            let mut s3 = C64::new(0.0, 0.0);
            let mut s4 = C64::new(0.0, 0.0);
            for k in 0..m {
                s1 += q[k] * table[a * m + b][k];
                s2 += q[k].conj() * table[b * m + a][k].conj();
                s3 += q[k] * table[b * m + a][k];
                s4 += q[k].conj() * table[a * m + b][k].conj();
            }
            beta[(a, b)] = minus_i * (q[b].conj() * s1 - q[a] * s2);
            beta_p[(a, b)] = minus_i * (q[b].conj() * s3 - q[a] * s4);
        }
    }

    let n1 = frame.phi[0].len();
    let n2 = frame.psi[0].len();
    let mut phi_dot = vec![Array1::from_elem(n1, C64::new(0.0, 0.0)); m];
    let mut psi_dot = vec![Array1::from_elem(n2, C64::new(0.0, 0.0)); m];
    for a in 0..m {
        for k in 0..m {
            if k == a {
                continue;
            }
            let denom = x[a] - x[k];
            let cb = beta[(k, a)] / denom;
            let cb_p = beta_p[(k, a)] / denom;
            for i in 0..n1 {
                phi_dot[a][i] += cb * frame.phi[k][i];
            }
            for i in 0..n2 {
                psi_dot[a][i] += cb_p * frame.psi[k][i];
            }
        }
    }
    Ok(FlowDerivatives { q_dot, phi_dot, psi_dot })
}

/// Which evolution strategy produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveMode {
    Ode,
    SvdTransport,
}

/// Sampled evolution of the polar data. Frames and amplitudes are stored in
/// the dynamical gauge (the one whose phases feed the label tracker); the
/// canonical-gauge data is recoverable through `phase_integrals`.
#[derive(Debug, Clone)]
pub struct PolarTrajectory {
    pub times: Vec<f64>,
    pub frames: Vec<PolarFrame>,
    pub gammas: Vec<StateVector>,
    pub mode: EvolveMode,
    /// I_k(t) = ∫₀ᵗ H_{kk,kk} ds per sample; q_canonical = q e^{−iI}.
    pub phase_integrals: Vec<Vec<f64>>,
}

impl PolarTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Amplitudes in the canonical (geometric-transport) gauge.
    pub fn canonical_q(&self, i: usize) -> Vec<C64> {
        self.frames[i]
            .q
            .iter()
            .zip(self.phase_integrals[i].iter())
            .map(|(q, ii)| q * C64::from_polar(1.0, -ii))
            .collect()
    }

    /// Canonical-gauge frame vectors (φ_k with the scalar factor undone).
    pub fn canonical_frame(&self, i: usize) -> PolarFrame {
        let mut f = self.frames[i].clone();
        for k in 0..f.len() {
            let z = C64::from_polar(1.0, self.phase_integrals[i][k]);
            f.phi[k] = f.phi[k].mapv(|x| x * z);
            f.q[k] *= z.conj();
        }
        f
    }

    /// ‖Σ q_k φ_k⊗ψ_k − Γ‖ at sample i.
    pub fn reconstruction_residual(&self, i: usize) -> f64 {
        let space = self.gammas[i].space;
        let rebuilt = reconstruct(&self.frames[i], space).unwrap();
        linalg::norm(&(&rebuilt.amplitudes - &self.gammas[i].amplitudes))
    }

    /// Radii r_k(t_i).
    pub fn radii(&self, i: usize) -> Vec<f64> {
        self.frames[i].radii()
    }

    /// Trajectory table: t, Re q_k, Im q_k, r_k per row.
    pub fn to_csv(&self) -> String {
        let m = if self.frames.is_empty() { 0 } else { self.frames[0].len() };
        let mut head = vec!["t".to_string()];
        for k in 0..m {
            head.push(format!("re_q{k}"));
            head.push(format!("im_q{k}"));
        }
        for k in 0..m {
            head.push(format!("r{k}"));
        }
        let mut out = head.join(",") + "\n";
        for i in 0..self.len() {
            let mut row = vec![format!("{:.17e}", self.times[i])];
            for k in 0..m {
                row.push(format!("{:.17e}", self.frames[i].q[k].re));
                row.push(format!("{:.17e}", self.frames[i].q[k].im));
            }
            for k in 0..m {
                row.push(format!("{:.17e}", self.frames[i].q[k].norm()));
            }
            out += &(row.join(",") + "\n");
        }
        out
    }

    /// Frame dump (φ, ψ vectors and q) for one sample as a JSON value.
    pub fn frame_json(&self, i: usize) -> serde_json::Value {
        let f = &self.frames[i];
        serde_json::json!({
            "t": self.times[i],
            "q_re": f.q.iter().map(|z| z.re).collect::<Vec<_>>(),
            "q_im": f.q.iter().map(|z| z.im).collect::<Vec<_>>(),
            "phi_re": f.phi.iter().map(|v| v.iter().map(|z| z.re).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "phi_im": f.phi.iter().map(|v| v.iter().map(|z| z.im).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "psi_re": f.psi.iter().map(|v| v.iter().map(|z| z.re).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "psi_im": f.psi.iter().map(|v| v.iter().map(|z| z.im).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "phase_integrals": self.phase_integrals[i],
        })
    }
}

// -- state packing for the ODE route ----------------------------------------

fn pack(frame: &PolarFrame, integrals: &[f64]) -> Array1<C64> {
    let m = frame.len();
    let n1 = frame.phi[0].len();
    let n2 = frame.psi[0].len();
    let mut y = Vec::with_capacity(m + m * n1 + m * n2 + m);
    y.extend(frame.q.iter().cloned());
    for k in 0..m {
        y.extend(frame.phi[k].iter().cloned());
    }
    for k in 0..m {
        y.extend(frame.psi[k].iter().cloned());
    }
    y.extend(integrals.iter().map(|&x| C64::new(x, 0.0)));
    Array1::from(y)
}

fn unpack(y: &Array1<C64>, m: usize, n1: usize, n2: usize) -> (PolarFrame, Vec<f64>) {
    let q: Vec<C64> = (0..m).map(|k| y[k]).collect();
    let mut phi = Vec::with_capacity(m);
    let mut psi = Vec::with_capacity(m);
    let mut off = m;
    for _ in 0..m {
        phi.push(Array1::from_iter((0..n1).map(|i| y[off + i])));
        off += n1;
    }
    for _ in 0..m {
        psi.push(Array1::from_iter((0..n2).map(|i| y[off + i])));
        off += n2;
    }
    let integrals: Vec<f64> = (0..m).map(|k| y[off + k].re).collect();
    (PolarFrame { q, phi, psi, degenerate: false }, integrals)
}

/// Evolves a polar decomposition of `gamma0` under `h` over `t_span`,
/// sampling `n_samples` points. `frame0` must reconstruct `gamma0`.
pub fn evolve_polar(
    gamma0: &StateVector,
    frame0: &PolarFrame,
    h: &HamiltonianSpec,
    t_span: (f64, f64),
    tol: f64,
    mode: EvolveMode,
    n_samples: usize,
) -> Result<PolarTrajectory> {
    if n_samples < 2 {
        return Err(Error::TooFewSamples { got: n_samples, need: 2 });
    }
    let rebuilt = reconstruct(frame0, gamma0.space)?;
    let defect = linalg::norm(&(&rebuilt.amplitudes - &gamma0.amplitudes));
    if defect > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "frame0 does not reconstruct gamma0: residual {defect:.3e}"
        )));
    }
    match mode {
        EvolveMode::Ode => evolve_ode(gamma0, frame0, h, t_span, tol, n_samples),
        EvolveMode::SvdTransport => evolve_svd(gamma0, frame0, h, t_span, tol, n_samples),
    }
}

fn evolve_ode(
    gamma0: &StateVector,
    frame0: &PolarFrame,
    h: &HamiltonianSpec,
    t_span: (f64, f64),
    tol: f64,
    n_samples: usize,
) -> Result<PolarTrajectory> {
    if h.is_time_dependent() {
        return Err(Error::InvalidParameter(
            "the frame ODE system is stated for autonomous Hamiltonians; use SvdTransport".into(),
        ));
    }
    let m = frame0.len();
    let n1 = frame0.phi[0].len();
    let n2 = frame0.psi[0].len();
    let (t0, t1) = t_span;
    let times: Vec<f64> = (0..n_samples)
        .map(|i| t0 + (t1 - t0) * i as f64 / (n_samples - 1) as f64)
        .collect();

    let mut rhs = |t: f64, y: &Array1<C64>| -> Result<Array1<C64>> {
        let (frame, _) = unpack(y, m, n1, n2);
        let d = flow_rhs(&frame, h, t)?;
        let mut hkk = vec![0.0; m];
        let table = diagonal_coupling_table(h, t, &frame.phi, &frame.psi);
        for k in 0..m {
            hkk[k] = table[k * m + k][k].re;
        }
        let dframe = PolarFrame { q: d.q_dot, phi: d.phi_dot, psi: d.psi_dot, degenerate: false };
        Ok(pack(&dframe, &hkk))
    };

    let mut y = pack(frame0, &vec![0.0; m]);
    let mut frames = Vec::with_capacity(n_samples);
    let mut gammas = Vec::with_capacity(n_samples);
    let mut integrals = Vec::with_capacity(n_samples);

    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            y = ode::integrate(&mut rhs, times[i - 1], t, &y, tol)?;
        }
        let (mut frame, ints) = unpack(&y, m, n1, n2);
        // Dynamical-gauge output: q_k e^{iI_k}, φ_k e^{−iI_k}.
        for k in 0..m {
            let z = C64::from_polar(1.0, ints[k]);
            frame.q[k] *= z;
            frame.phi[k] = frame.phi[k].mapv(|x| x * z.conj());
        }
        frame.degenerate = frame
            .radii()
            .windows(2)
            .any(|w| (w[0] - w[1]).abs() < crate::hilbert::DEGENERACY_FLAG_TOL);
        gammas.push(reconstruct(&frame, gamma0.space)?);
        frames.push(frame);
        integrals.push(ints);
    }
    Ok(PolarTrajectory { times, frames, gammas, mode: EvolveMode::Ode, phase_integrals: integrals })
}

fn evolve_svd(
    gamma0: &StateVector,
    frame0: &PolarFrame,
    h: &HamiltonianSpec,
    t_span: (f64, f64),
    tol: f64,
    n_samples: usize,
) -> Result<PolarTrajectory> {
    let m = frame0.len();
    let (t0, t1) = t_span;
    let span = (t1 - t0).abs().max(1e-12);
    let hnorm = linalg::fro_norm(&h.value_at(t0)).max(1e-6);
    // Discrete parallel transport carries an O(dt²) global phase error with
    // a curvature-scale coefficient; pick dt from the requested tolerance.
    let dt_target = (6.0 * tol / (span * hnorm.powi(3))).sqrt().min(span / 64.0);
    let sample_dt = (t1 - t0) / (n_samples - 1) as f64;
    let n_sub = (sample_dt.abs() / dt_target).ceil().max(1.0) as usize;

    let times: Vec<f64> = (0..n_samples)
        .map(|i| t0 + (t1 - t0) * i as f64 / (n_samples - 1) as f64)
        .collect();

    let prop = if h.is_time_dependent() {
        None
    } else {
        Some(EigenPropagator::new(&h.value_at(t0), &gamma0.amplitudes)?)
    };

    let mut cur_phi: Vec<Array1<C64>> = frame0.phi.clone();
    let mut cur_psi: Vec<Array1<C64>> = frame0.psi.clone();
    let mut cur_gamma = gamma0.amplitudes.clone();

    let mut sub_times: Vec<f64> = Vec::new();
    let mut hkk_series: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut sample_records: Vec<(usize, Vec<C64>, Vec<Array1<C64>>, Vec<Array1<C64>>, Array1<C64>)> =
        Vec::with_capacity(n_samples);

    let record_hkk =
        |t: f64, phi: &[Array1<C64>], psi: &[Array1<C64>], series: &mut Vec<Vec<f64>>| {
            for k in 0..phi.len() {
                let g = product_vector(&phi[k], &psi[k]);
                series[k].push(inner(&g, &h.apply(t, &g)).re);
            }
        };

    // Substep grid index bookkeeping: sample i sits at substep i * n_sub.
    let mut rhs = |t: f64, y: &Array1<C64>| -> Result<Array1<C64>> {
        Ok(h.apply(t, y).mapv(|x| x * C64::new(0.0, -1.0)))
    };

    sub_times.push(times[0]);
    record_hkk(times[0], &cur_phi, &cur_psi, &mut hkk_series);
    sample_records.push((0, frame0.q.clone(), cur_phi.clone(), cur_psi.clone(), cur_gamma.clone()));

    for i in 1..n_samples {
        for s in 1..=n_sub {
            let t_prev = times[i - 1] + sample_dt * (s - 1) as f64 / n_sub as f64;
            let t_now = times[i - 1] + sample_dt * s as f64 / n_sub as f64;
            cur_gamma = match &prop {
                Some(p) => p.at(t_now - t0),
                None => ode::integrate(&mut rhs, t_prev, t_now, &cur_gamma, tol.min(1e-10))?,
            };
            let state = StateVector { space: gamma0.space, amplitudes: cur_gamma.clone() };
            let raw = polar_decompose(&state)?;
            if raw.len() != m {
                return Err(Error::DegenerateRadii { gap: 0.0, t: t_now });
            }
            // Maximal-overlap assignment against the previous step.
            let mut used = vec![false; m];
            let mut new_phi = Vec::with_capacity(m);
            let mut new_psi = Vec::with_capacity(m);
            for a in 0..m {
                let mut best = (0usize, -1.0f64);
                for b in 0..m {
                    if used[b] {
                        continue;
                    }
                    let w = inner(&cur_phi[a], &raw.phi[b]).norm()
                        * inner(&cur_psi[a], &raw.psi[b]).norm();
                    if w > best.1 {
                        best = (b, w);
                    }
                }
                used[best.0] = true;
                // Reciprocal phase fix: positive real overlap for φ and ψ.
                let op = inner(&cur_phi[a], &raw.phi[best.0]);
                let os = inner(&cur_psi[a], &raw.psi[best.0]);
                let zp = if op.norm() > 0.0 { op / op.norm() } else { C64::new(1.0, 0.0) };
                let zs = if os.norm() > 0.0 { os / os.norm() } else { C64::new(1.0, 0.0) };
                new_phi.push(raw.phi[best.0].mapv(|x| x * zp.conj()));
                new_psi.push(raw.psi[best.0].mapv(|x| x * zs.conj()));
            }
            cur_phi = new_phi;
            cur_psi = new_psi;
            sub_times.push(t_now);
            record_hkk(t_now, &cur_phi, &cur_psi, &mut hkk_series);
        }
        // Amplitudes in the transported gauge: q_k = ⟨φ_k⊗ψ_k, Γ⟩.
        let q: Vec<C64> = (0..m)
            .map(|k| inner(&product_vector(&cur_phi[k], &cur_psi[k]), &cur_gamma))
            .collect();
        sample_records.push((i * n_sub, q, cur_phi.clone(), cur_psi.clone(), cur_gamma.clone()));
    }

    let cumints: Vec<Vec<f64>> = (0..m)
        .map(|k| cumulative_quadratic(&sub_times, &hkk_series[k]))
        .collect();

    let mut frames = Vec::with_capacity(n_samples);
    let mut gammas = Vec::with_capacity(n_samples);
    let mut integrals = Vec::with_capacity(n_samples);
    for (sub_idx, q, phi, psi, gamma) in sample_records {
        let ints: Vec<f64> = (0..m).map(|k| cumints[k][sub_idx]).collect();
        let mut frame = PolarFrame { q, phi, psi, degenerate: false };
        for k in 0..m {
            let z = C64::from_polar(1.0, ints[k]);
            frame.q[k] *= z;
            frame.phi[k] = frame.phi[k].mapv(|x| x * z.conj());
        }
        frame.degenerate = {
            let r = frame.radii();
            let mut d = false;
            for a in 0..m {
                for b in (a + 1)..m {
                    d |= (r[a] - r[b]).abs() < crate::hilbert::DEGENERACY_FLAG_TOL;
                }
            }
            d
        };
        gammas.push(StateVector { space: gamma0.space, amplitudes: gamma });
        frames.push(frame);
        integrals.push(ints);
    }
    Ok(PolarTrajectory {
        times,
        frames,
        gammas,
        mode: EvolveMode::SvdTransport,
        phase_integrals: integrals,
    })
}

/// The interaction-only phase integrands along a trajectory:
/// Υ_k = ⟨Γ, H0 Γ⟩ − ⟨Γ_k, H0 Γ_k⟩, plus the radii velocities
/// ṙ_j = Σ_k Im((H0)_{jj,kk}) r_k evaluated in the modulus gauge.
#[derive(Debug, Clone)]
pub struct InteractionPhases {
    pub times: Vec<f64>,
    /// upsilon[i][k] = Υ_k(t_i).
    pub upsilon: Vec<Vec<f64>>,
    /// r_dot[i][j] = ṙ_j(t_i) from the interaction Hamiltonian formula.
    pub r_dot: Vec<Vec<f64>>,
}

pub fn interaction_phases(traj: &PolarTrajectory, h: &HamiltonianSpec) -> Result<InteractionPhases> {
    let split = h.split().ok_or(Error::MissingSplit)?;
    let h0 = HamiltonianSpec::constant(split.h0.clone())?;
    let m = if traj.is_empty() { 0 } else { traj.frames[0].len() };
    let mut upsilon = Vec::with_capacity(traj.len());
    let mut r_dot = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        let frame = &traj.frames[i];
        let gamma = &traj.gammas[i];
        let e_total = h0.expectation(0.0, &gamma.amplitudes);
        let mut urow = Vec::with_capacity(m);
        // Modulus-gauge frame: Γ'_k = (q_k/r_k) Γ_k so that Γ = Σ r_k Γ'_k.
        let mut mod_phi = Vec::with_capacity(m);
        for k in 0..m {
            let r = frame.q[k].norm();
            let z = if r > 0.0 { frame.q[k] / r } else { C64::new(1.0, 0.0) };
            mod_phi.push(frame.phi[k].mapv(|x| x * z));
        }
        for k in 0..m {
            let gk = product_vector(&frame.phi[k], &frame.psi[k]);
            urow.push(e_total - h0.expectation(0.0, &gk));
        }
        let table = diagonal_coupling_table(&h0, 0.0, &mod_phi, &frame.psi);
        let r: Vec<f64> = frame.radii();
        let mut drow = Vec::with_capacity(m);
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += table[j * m + j][k].im * r[k];
            }
            drow.push(s);
        }
        upsilon.push(urow);
        r_dot.push(drow);
    }
    Ok(InteractionPhases { times: traj.times.clone(), upsilon, r_dot })
}

/// Minimal-interaction split: H1 = (1/n2)·Tred₁(H) (keeps the scalar part),
/// H2 = (1/n1)·Tred₂(H) made traceless, H0 the exact remainder. H0 is then
/// Hilbert–Schmidt-orthogonal to every A⊗I and every traceless I⊗B.
pub fn split_hamiltonian(h: &Array2<C64>, space: BipartiteSpace) -> Result<HamiltonianSplit> {
    let (n1, n2) = (space.n1, space.n2);
    let defect = linalg::hermiticity_defect(h);
    if defect > crate::hamiltonian::HERMITICITY_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let h1 = partial_trace_op(h, n1, n2, 1)?.mapv(|x| x / n2 as f64);
    let mut h2 = partial_trace_op(h, n1, n2, 2)?.mapv(|x| x / n1 as f64);
    let tr2: C64 = h2.diag().iter().sum();
    let shift = tr2 / n2 as f64;
    for i in 0..n2 {
        h2[(i, i)] -= shift;
    }
    let h0 = h - &linalg::kron(&h1, &eye(n2)) - &linalg::kron(&eye(n1), &h2);
    Ok(HamiltonianSplit { n1, n2, h0, h1, h2 })
}

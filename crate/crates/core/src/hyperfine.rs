//! Closed-form solution of the two spin-1/2 exchange model — the analytic
//! oracle for every dynamic module.
//!
//! The model: H = μ σ⃗⊗σ⃗ on ℂ²⊗ℂ², initial state with real amplitudes
//! q±(0) and half-angle θ between the two spin directions (the z-axis
//! bisects them, the x/y axes are aligned with the polarization ellipse, so
//! the initial azimuth is zero). Everything downstream — radii, frame
//! spinors, transported phases, polarization trajectories, and the partition
//! label — is expressed through elementary functions and Legendre's elliptic
//! integral of the third kind.
//!
//! Conventions used throughout (`w` = ωt with ω = 4μ):
//!   C = cos θ, S = sin θ, k = q₊(0) − q₋(0), l = q₊(0) + q₋(0),
//!   e² = (k² − C²l²)/k²,   Δ = l²k²(1 − S²e² sin²w),
//!   a = ½(Cl+k)e^{−iμt}, b = −½ S l e^{3iμt}, d = ½(Cl−k)e^{−iμt},
//!   α = S l (k cos w − i C l sin w),  β_± = −Ckl ± √Δ,
//!   ‖φ_±‖² = ‖ψ_±‖² = L_± = 2√Δ(√Δ ∓ Ckl).

use ndarray::Array1;
use num_complex::Complex64 as C64;

pub use crate::elliptic::{legendre_pi, legendre_pi_complete, legendre_pi_quadrature};
use crate::hilbert::{BipartiteSpace, PolarFrame, StateVector};
use crate::{Error, Result};

/// Parameters of the two-spin model with their derived constants.
#[derive(Debug, Clone, Copy)]
pub struct HyperfineParams {
    pub mu: f64,
    pub theta: f64,
    pub q_plus_0: f64,
    pub q_minus_0: f64,
    pub big_c: f64,
    pub big_s: f64,
    pub k: f64,
    pub l: f64,
    pub omega: f64,
    /// Squared eccentricity e² = (k² − C²l²)/k².
    pub e2: f64,
    /// Elliptic parameter m = S²e².
    pub m: f64,
}

impl HyperfineParams {
    /// Basic validation only; the state formula `gamma_t` works for any
    /// admissible (θ, q₊). The closed-form frame machinery additionally
    /// requires the non-degenerate regime — see [`Self::validate_regular`].
    pub fn new(mu: f64, theta: f64, q_plus_0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q_plus_0) || q_plus_0 < std::f64::consts::FRAC_1_SQRT_2 {
            return Err(Error::InvalidParameter(format!(
                "q_plus_0 = {q_plus_0} outside [1/sqrt2, 1)"
            )));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta = {theta} outside [0, pi/2]"
            )));
        }
        let q_minus_0 = (1.0 - q_plus_0 * q_plus_0).sqrt();
        let big_c = theta.cos();
        let big_s = theta.sin();
        let k = q_plus_0 - q_minus_0;
        let l = q_plus_0 + q_minus_0;
        let e2 = if k > 0.0 {
            (k * k - big_c * big_c * l * l) / (k * k)
        } else {
            f64::NEG_INFINITY
        };
        Ok(Self {
            mu,
            theta,
            q_plus_0,
            q_minus_0,
            big_c,
            big_s,
            k,
            l,
            omega: 4.0 * mu,
            e2,
            m: big_s * big_s * e2.max(0.0),
        })
    }

    /// Rejects the degenerate parameter regimes in which the frame formulas
    /// break down: θ ∈ {0, π/2}, q₊ = q₋, and axis misalignment k² < C²l².
    pub fn validate_regular(&self) -> Result<()> {
        if self.theta <= 0.0 || self.theta >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidParameter(format!(
                "theta = {} is a degenerate regime",
                self.theta
            )));
        }
        if self.k <= 1e-12 {
            return Err(Error::InvalidParameter("degenerate radii: q+ = q-".into()));
        }
        if self.e2 < -1e-15 {
            return Err(Error::InvalidParameter(format!(
                "axis-alignment convention requires k^2 >= C^2 l^2 (k={}, Cl={})",
                self.k,
                self.big_c * self.l
            )));
        }
        Ok(())
    }

    /// Δ(t) = l²k²(1 − S²e² sin²ωt); note Σ_± |q_±|² = 1 identically since
    /// |q_±|² = (1 ± √Δ)/2.
    pub fn delta(&self, t: f64) -> f64 {
        let s2 = (self.omega * t).sin().powi(2);
        self.l * self.l * self.k * self.k * (1.0 - self.m * s2)
    }

    /// Radii (r₊, r₋) at time t.
    pub fn radii(&self, t: f64) -> (f64, f64) {
        let sd = self.delta(t).sqrt();
        (((1.0 + sd) / 2.0).sqrt(), ((1.0 - sd) / 2.0).sqrt())
    }

    fn abd(&self, t: f64) -> (C64, C64, C64) {
        let em = C64::from_polar(1.0, -self.mu * t);
        let ep = C64::from_polar(1.0, 3.0 * self.mu * t);
        let a = 0.5 * (self.big_c * self.l + self.k) * em;
        let b = -0.5 * self.big_s * self.l * ep;
        let d = 0.5 * (self.big_c * self.l - self.k) * em;
        (a, b, d)
    }

    /// α(t) = S l (k cos ωt − i C l sin ωt).
    pub fn alpha(&self, t: f64) -> C64 {
        let w = self.omega * t;
        self.big_s
            * self.l
            * C64::new(self.k * w.cos(), -self.big_c * self.l * w.sin())
    }

    /// β_±(t) = −Ckl ± √Δ (real).
    pub fn beta_pm(&self, t: f64) -> (f64, f64) {
        let sd = self.delta(t).sqrt();
        let ckl = self.big_c * self.k * self.l;
        (-ckl + sd, -ckl - sd)
    }

    /// Squared spinor norms L_± = 2√Δ(√Δ ∓ Ckl).
    pub fn spinor_norm_sq(&self, t: f64) -> (f64, f64) {
        let sd = self.delta(t).sqrt();
        let ckl = self.big_c * self.k * self.l;
        (2.0 * sd * (sd - ckl), 2.0 * sd * (sd + ckl))
    }

    /// The canonical-transport phases τ_± of the frame spinors:
    /// τ_± = ½ arctan((Cl/k)·tan ωt) ± (C²l/2k)·Π(e²; ωt | S²e²),
    /// with the arctan branch chosen continuous and vanishing at t = 0.
    pub fn tau_pm(&self, t: f64) -> Result<(f64, f64)> {
        self.validate_regular()?;
        let w = self.omega * t;
        let base = 0.5 * arctan_cont(self.big_c * self.l / self.k, w);
        let ell = self.big_c * self.big_c * self.l / (2.0 * self.k)
            * legendre_pi(self.e2.max(0.0), w, self.m)?;
        Ok((base + ell, base - ell))
    }

    /// ν(t) = (C²/√(1−S²e²)) arctan(√(1−S²e²) tan ωt), continuous branch.
    /// The scalar ∫₀ᵗ H_{kk,kk} ds equals ν/2 − ωt/4 for both k = ±.
    pub fn nu(&self, t: f64) -> f64 {
        let g = (1.0 - self.m).sqrt();
        self.big_c * self.big_c / g * arctan_cont(g, self.omega * t)
    }

    /// Amplitudes in the canonical gauge (frame spinors carrying e^{iτ_±}).
    pub fn amplitudes_canonical(&self, t: f64) -> Result<(C64, C64)> {
        let (a, b, d) = self.abd(t);
        let alpha = self.alpha(t);
        let (bp, bm) = self.beta_pm(t);
        let (tp, tm) = self.tau_pm(t)?;
        let raw_p = -(b * alpha.conj() / bp + d);
        let raw_m = b * alpha.conj() / bm + d;
        Ok((
            raw_p * C64::from_polar(1.0, -2.0 * tp),
            raw_m * C64::from_polar(1.0, -2.0 * tm),
        ))
    }

    /// Amplitudes in the dynamical gauge: q^H_± = q⁰_± e^{i(ν/2 − ωt/4)}.
    pub fn amplitudes_dynamical(&self, t: f64) -> Result<(C64, C64)> {
        let (qp, qm) = self.amplitudes_canonical(t)?;
        let z = C64::from_polar(1.0, 0.5 * self.nu(t) - 0.25 * self.omega * t);
        Ok((qp * z, qm * z))
    }
}

/// Continuous branch of x ↦ arctan(A·tan x), vanishing at 0 (A > 0).
pub(crate) fn arctan_cont(a: f64, x: f64) -> f64 {
    let j = (x / std::f64::consts::PI).round();
    let rem = x - j * std::f64::consts::PI;
    let val = if (rem.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-15 {
        rem.signum() * std::f64::consts::FRAC_PI_2
    } else {
        (a * rem.tan()).atan()
    };
    val + j * std::f64::consts::PI
}

/// Γ(t) of the model: ((Cl+k)e^{−iμt}, −Sl e^{3iμt}, Sl e^{3iμt}, (Cl−k)e^{−iμt})/2.
pub fn gamma_t(p: &HyperfineParams, t: f64) -> StateVector {
    let (a, b, d) = p.abd(t);
    StateVector {
        space: BipartiteSpace { n1: 2, n2: 2 },
        amplitudes: Array1::from(vec![a, b, -b, d]),
    }
}

/// Gauge choice for the closed-form frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameGauge {
    /// Spinors transported by the canonical connection (phases τ_±).
    Canonical,
    /// Frame additionally horizontalized for the dynamical connection of H;
    /// these are the amplitudes whose phases feed the partition label.
    Dynamical,
}

/// The closed-form polar frame at time t:
/// φ_± = ±e^{iτ_±}(α, β_±)/√L_±, ψ_± = e^{iτ_±}(α, −β_±)/√L_±, with the
/// matching amplitudes; reconstruction reproduces `gamma_t` exactly.
pub fn closed_form_frame(p: &HyperfineParams, t: f64, gauge: FrameGauge) -> Result<PolarFrame> {
    p.validate_regular()?;
    if p.e2 >= 1.0 {
        return Err(Error::InvalidParameter("degenerate ellipse: e >= 1".into()));
    }
    let alpha = p.alpha(t);
    let (bp, bm) = p.beta_pm(t);
    let (lp, lm) = p.spinor_norm_sq(t);
    let (tp, tm) = p.tau_pm(t)?;
    let (np, nm) = (lp.sqrt(), lm.sqrt());
    let zp = C64::from_polar(1.0, tp);
    let zm = C64::from_polar(1.0, tm);

    let phi_p = Array1::from(vec![zp * alpha / np, zp * bp / np]);
    let psi_p = Array1::from(vec![zp * alpha / np, -zp * bp / np]);
    let phi_m = Array1::from(vec![-zm * alpha / nm, -zm * bm / nm]);
    let psi_m = Array1::from(vec![zm * alpha / nm, -zm * bm / nm]);

    let (mut qp, mut qm) = self::HyperfineParams::amplitudes_canonical(p, t)?;
    let mut phi = vec![phi_p, phi_m];
    let psi = vec![psi_p, psi_m];

    if let FrameGauge::Dynamical = gauge {
        // The scalar factor e^{-i∫H_kk,kk} = e^{-i(ν/2 - ωt/4)} goes on φ.
        let z = C64::from_polar(1.0, 0.5 * p.nu(t) - 0.25 * p.omega * t);
        qp *= z;
        qm *= z;
        for v in phi.iter_mut() {
            *v = v.mapv(|x| x * z.conj());
        }
    }

    let (rp, rm) = p.radii(t);
    Ok(PolarFrame {
        q: vec![qp, qm],
        phi,
        psi,
        degenerate: (rp - rm).abs() < crate::hilbert::DEGENERACY_FLAG_TOL,
    })
}

/// Polarization-ball trajectory: the electron axis point 𝔢(t) on the
/// ellipse x = E cos ωt, y = G sin ωt at height z = Ckl, scaled by 1/2, and
/// the proton point antipodal through the ellipse center.
pub fn bloch_trajectory(p: &HyperfineParams, t: f64) -> Result<([f64; 3], [f64; 3])> {
    p.validate_regular()?;
    let e_axis = p.big_s * p.k * p.l;
    let g_axis = p.big_s * p.big_c * p.l * p.l;
    if e_axis.abs() < 1e-14 || g_axis.abs() < 1e-14 {
        return Err(Error::InvalidParameter("degenerate ellipse: GE = 0".into()));
    }
    let w = p.omega * t;
    let x = e_axis * w.cos();
    let y = g_axis * w.sin();
    let z = p.big_c * (p.q_plus_0 * p.q_plus_0 - p.q_minus_0 * p.q_minus_0);
    let e_pt = [0.5 * x, 0.5 * y, 0.5 * z];
    let p_pt = [-0.5 * x, -0.5 * y, 0.5 * z];
    Ok((e_pt, p_pt))
}

/// Which partition member the amplitude point occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSign {
    Plus,
    Minus,
}

/// Closed-form n = 2 membership test: reduces the arc coordinates
/// (S₊, S₋) = (r₊θ₊, r₋θ₋) into the box and evaluates the three boundary
/// inequalities. Returns the label and a boundary flag.
pub fn label_sign(p: &HyperfineParams, t: f64) -> Result<(LabelSign, bool)> {
    let (qp, qm) = p.amplitudes_dynamical(t)?;
    label_of_amplitudes(&[qp, qm]).map(|(s, b)| (s, b))
}

/// The same test on explicit two-component amplitudes (r₊ ≥ r₋ assumed).
pub fn label_of_amplitudes(q: &[C64]) -> Result<(LabelSign, bool)> {
    if q.len() != 2 {
        return Err(Error::DimensionMismatch("need exactly two amplitudes".into()));
    }
    let (rp, rm) = (q[0].norm(), q[1].norm());
    if rp <= rm {
        return Err(Error::DegenerateRadii { gap: rp - rm, t: f64::NAN });
    }
    let tau = std::f64::consts::TAU;
    let reduce = |s: f64, period: f64| -> f64 {
        let mut v = s % period;
        if v < 0.0 {
            v += period;
        }
        v
    };
    let sp = reduce(rp * q[0].arg(), tau * rp);
    let sm = reduce(rm * q[1].arg(), tau * rm);
    let c1 = rm * sp / rp;
    let c2 = tau * rp * rp / rm - sp * rp / rm;
    let c3 = tau * rm - sp * rp / rm;
    let plus = (sm < c1 && sm < c2) || (sm > c1 && sm > c3);
    let boundary_tol = 1e-12;
    let boundary = (sm - c1).abs() < boundary_tol
        || (sm - c2).abs() < boundary_tol
        || (sm - c3).abs() < boundary_tol;
    Ok((if plus { LabelSign::Plus } else { LabelSign::Minus }, boundary))
}

/// Oracle dump: one row per sample with amplitudes, transported phases,
/// polarization point, and the label.
pub fn oracle_csv(p: &HyperfineParams, times: &[f64]) -> Result<String> {
    let mut out =
        String::from("t,re_qp,im_qp,re_qm,im_qm,tau_p,tau_m,x,y,z,label\n");
    for &t in times {
        let (qp, qm) = p.amplitudes_dynamical(t)?;
        let (tp, tm) = p.tau_pm(t)?;
        let (e_pt, _) = bloch_trajectory(p, t)?;
        let (label, _) = label_sign(p, t)?;
        out += &format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            t,
            qp.re,
            qp.im,
            qm.re,
            qm.im,
            tp,
            tm,
            e_pt[0],
            e_pt[1],
            e_pt[2],
            match label {
                LabelSign::Plus => "+",
                LabelSign::Minus => "-",
            }
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::schrodinger_evolve;
    use crate::hamiltonian::{spin_exchange, HamiltonianSpec};
    use crate::hilbert::{polar_decompose, reconstruct};
    use crate::linalg;

    fn figure_params() -> HyperfineParams {
        HyperfineParams::new(1.0, 3.0 * std::f64::consts::PI / 7.0, 0.94).unwrap()
    }

    #[test]
    fn initial_state_matches_polar_form() {
        let p = figure_params();
        let g0 = gamma_t(&p, 0.0);
        assert!((linalg::norm(&g0.amplitudes) - 1.0).abs() < 1e-14);
        let f = polar_decompose(&g0).unwrap();
        assert!((f.q[0].re - 0.94).abs() < 1e-12);
        assert!((f.q[1].re - p.q_minus_0).abs() < 1e-12);
    }

    #[test]
    fn gamma_matches_schrodinger_evolution() {
        let p = figure_params();
        let h = HamiltonianSpec::constant(spin_exchange(p.mu)).unwrap();
        let g0 = gamma_t(&p, 0.0);
        let t_end = 10.0 * std::f64::consts::PI / p.omega;
        let path = schrodinger_evolve(&g0, &h, (0.0, t_end), 1e-12, 101).unwrap();
        for (i, &t) in path.times.iter().enumerate() {
            let want = gamma_t(&p, t);
            let err = linalg::norm(&(&path.states[i].amplitudes - &want.amplitudes));
            assert!(err < 1e-10, "t = {t}: {err:.3e}");
        }
    }

    #[test]
    fn aligned_spins_are_stationary() {
        // θ = 0: b = 0 and Γ(t) only picks up the global phase e^{−iμt};
        // the frame machinery properly refuses this degenerate regime.
        let p = HyperfineParams::new(1.0, 0.0, 0.94).unwrap();
        let g0 = gamma_t(&p, 0.0);
        let g1 = gamma_t(&p, 0.77);
        let phase = C64::from_polar(1.0, -p.mu * 0.77);
        let err = linalg::norm(&(&g1.amplitudes - &g0.amplitudes.mapv(|x| x * phase)));
        assert!(err < 1e-14);
        assert!(closed_form_frame(&p, 0.1, FrameGauge::Canonical).is_err());
    }

    #[test]
    fn norm_is_one_for_all_t() {
        let p = figure_params();
        for i in 0..200 {
            let t = i as f64 * 0.06;
            assert!((linalg::norm(&gamma_t(&p, t).amplitudes) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn frame_reconstructs_gamma_in_both_gauges() {
        let p = figure_params();
        let space = BipartiteSpace { n1: 2, n2: 2 };
        for i in 0..120 {
            let t = i as f64 * 0.07;
            let want = gamma_t(&p, t);
            for gauge in [FrameGauge::Canonical, FrameGauge::Dynamical] {
                let f = closed_form_frame(&p, t, gauge).unwrap();
                let got = reconstruct(&f, space).unwrap();
                let err = linalg::norm(&(&got.amplitudes - &want.amplitudes));
                assert!(err < 1e-9, "t = {t} {gauge:?}: residual {err:.3e}");
                assert!(f.orthonormality_defect() < 1e-10);
            }
        }
    }

    #[test]
    fn moduli_match_delta_formula() {
        let p = figure_params();
        for i in 0..150 {
            let t = i as f64 * 0.08;
            let (qp, qm) = p.amplitudes_canonical(t).unwrap();
            let (rp, rm) = p.radii(t);
            assert!((qp.norm() - rp).abs() < 1e-12, "t={t}");
            assert!((qm.norm() - rm).abs() < 1e-12, "t={t}");
            assert!((qp.norm_sqr() + qm.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_at_quarter_period() {
        // ωt = π/2: Δ = l²(k² + S²(C²l² − k²)).
        let p = figure_params();
        let t = std::f64::consts::FRAC_PI_2 / p.omega;
        let want = p.l * p.l
            * (p.k * p.k + p.big_s * p.big_s * (p.big_c * p.big_c * p.l * p.l - p.k * p.k));
        assert!((p.delta(t) - want).abs() < 1e-14);
    }

    #[test]
    fn initial_gauge_is_real_with_zero_tau() {
        let p = figure_params();
        let (tp, tm) = p.tau_pm(0.0).unwrap();
        assert_eq!(tp, 0.0);
        assert_eq!(tm, 0.0);
        let (qp, qm) = p.amplitudes_canonical(0.0).unwrap();
        assert!(qp.im.abs() < 1e-14 && (qp.re - 0.94).abs() < 1e-12);
        assert!(qm.im.abs() < 1e-14 && (qm.re - p.q_minus_0).abs() < 1e-12);
        let f = closed_form_frame(&p, 0.0, FrameGauge::Canonical).unwrap();
        let (c, s) = ((p.theta / 2.0).cos(), (p.theta / 2.0).sin());
        assert!((f.phi[0][0].re - c).abs() < 1e-12 && f.phi[0][0].im.abs() < 1e-14);
        assert!((f.phi[0][1].re - s).abs() < 1e-12);
        assert!((f.phi[1][0].re + s).abs() < 1e-12);
        assert!((f.phi[1][1].re - c).abs() < 1e-12);
        assert!((f.psi[0][1].re + s).abs() < 1e-12);
        assert!((f.psi[1][0].re - s).abs() < 1e-12);
    }

    #[test]
    fn spinor_norm_formula_matches_components() {
        let p = figure_params();
        for i in 0..100 {
            let t = i as f64 * 0.09;
            let alpha = p.alpha(t);
            let (bp, bm) = p.beta_pm(t);
            let (lp, lm) = p.spinor_norm_sq(t);
            assert!((alpha.norm_sqr() + bp * bp - lp).abs() < 1e-12);
            assert!((alpha.norm_sqr() + bm * bm - lm).abs() < 1e-12);
            // |α|² = −β₊β₋
            assert!((alpha.norm_sqr() + bp * bm).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_frame_spinors_are_horizontal() {
        // The τ_± phases must make ⟨φ, φ̇⟩ vanish; this pins both the arctan
        // branch and the elliptic-integral coefficient.
        let p = figure_params();
        let dt = 1e-6;
        for i in 1..60 {
            let t = i as f64 * 0.1;
            let fm = closed_form_frame(&p, t - dt, FrameGauge::Canonical).unwrap();
            let f0 = closed_form_frame(&p, t, FrameGauge::Canonical).unwrap();
            let fp = closed_form_frame(&p, t + dt, FrameGauge::Canonical).unwrap();
            for k in 0..2 {
                let dphi = (&fp.phi[k] - &fm.phi[k]).mapv(|x| x / (2.0 * dt));
                let r = linalg::inner(&f0.phi[k], &dphi).norm();
                assert!(r < 1e-6, "phi[{k}] at t={t}: residual {r:.3e}");
                let dpsi = (&fp.psi[k] - &fm.psi[k]).mapv(|x| x / (2.0 * dt));
                let r2 = linalg::inner(&f0.psi[k], &dpsi).norm();
                assert!(r2 < 1e-6, "psi[{k}] at t={t}: residual {r2:.3e}");
            }
        }
    }

    #[test]
    fn dynamical_frame_products_are_dynamically_horizontal() {
        // ⟨Γ_k, Γ̇_k⟩ = −i⟨Γ_k, HΓ_k⟩ for the dynamical-gauge frame; this
        // verifies the scalar factor ν/2 − ωt/4 numerically.
        let p = figure_params();
        let h = spin_exchange(p.mu);
        let dt = 1e-6;
        for i in 1..60 {
            let t = i as f64 * 0.11;
            let build = |tt: f64| -> Vec<Array1<C64>> {
                let f = closed_form_frame(&p, tt, FrameGauge::Dynamical).unwrap();
                (0..2)
                    .map(|k| {
                        Array1::from_shape_fn(4, |idx| f.phi[k][idx / 2] * f.psi[k][idx % 2])
                    })
                    .collect()
            };
            let gm = build(t - dt);
            let g0 = build(t);
            let gp = build(t + dt);
            for k in 0..2 {
                let deriv = (&gp[k] - &gm[k]).mapv(|x| x / (2.0 * dt));
                let lhs = linalg::inner(&g0[k], &deriv);
                let rhs = C64::new(0.0, -1.0) * linalg::inner(&g0[k], &h.dot(&g0[k]));
                assert!(
                    (lhs - rhs).norm() < 1e-6,
                    "k={k} t={t}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn canonical_amplitudes_obey_flow_ode() {
        // q̇⁰_a = −i Σ_k H_{aa,kk} q⁰_k, with the coupling elements taken in
        // the canonical closed-form frame. Ties the oracle amplitudes to the
        // general frame-flow equations through finite differences.
        let p = figure_params();
        let h = crate::hamiltonian::HamiltonianSpec::constant(spin_exchange(p.mu)).unwrap();
        let dt = 1e-6;
        for i in 1..40 {
            let t = i as f64 * 0.16;
            let f = closed_form_frame(&p, t, FrameGauge::Canonical).unwrap();
            let c = crate::polar_flow::coupling_elements(&h, t, &f).unwrap();
            let (qpm, qmm) = p.amplitudes_canonical(t - dt).unwrap();
            let (qpp, qmp) = p.amplitudes_canonical(t + dt).unwrap();
            let fd = [
                (qpp - qpm) / (2.0 * dt),
                (qmp - qmm) / (2.0 * dt),
            ];
            for a in 0..2 {
                let mut want = C64::new(0.0, 0.0);
                for k in 0..2 {
                    want += c.get(a, a, k, k) * f.q[k];
                }
                want *= C64::new(0.0, -1.0);
                assert!(
                    (fd[a] - want).norm() < 1e-5,
                    "a={a} t={t}: fd {} vs ode {}",
                    fd[a],
                    want
                );
            }
        }
    }

    #[test]
    fn bloch_points_satisfy_conic_and_antipodality() {
        let p = figure_params();
        let e_axis = p.big_s * p.k * p.l;
        let g_axis = p.big_s * p.big_c * p.l * p.l;
        for i in 0..100 {
            let t = i as f64 * 0.085;
            let (e_pt, p_pt) = bloch_trajectory(&p, t).unwrap();
            let (x, y) = (2.0 * e_pt[0], 2.0 * e_pt[1]);
            // G²x² + E²y² = E²G² (axis-aligned conic, F = 0).
            let resid = g_axis * g_axis * x * x + e_axis * e_axis * y * y
                - e_axis * e_axis * g_axis * g_axis;
            assert!(resid.abs() < 1e-12, "t={t}: conic residual {resid:.3e}");
            // Antipodal through the center (0, 0, z/2).
            assert!((e_pt[0] + p_pt[0]).abs() < 1e-14);
            assert!((e_pt[1] + p_pt[1]).abs() < 1e-14);
            assert!((e_pt[2] - p_pt[2]).abs() < 1e-14);
        }
        let (e0, _) = bloch_trajectory(&p, 0.0).unwrap();
        assert!((2.0 * e0[0] - e_axis).abs() < 1e-14 && e0[1] == 0.0);
    }

    #[test]
    fn constant_radii_when_k_equals_cl() {
        // k = Cl makes e = 0: the radii freeze although phases keep moving.
        let theta = 1.1_f64;
        let c = theta.cos();
        // Solve q+/q- = (1+C)/(1-C) with q+² + q-² = 1.
        let ratio = (1.0 + c) / (1.0 - c);
        let qm = 1.0 / (1.0 + ratio * ratio).sqrt();
        let qp = ratio * qm;
        let p = HyperfineParams::new(1.0, theta, qp).unwrap();
        assert!(p.e2 < 1e-12);
        let (rp0, rm0) = p.radii(0.0);
        for i in 0..80 {
            let t = i as f64 * 0.1;
            let (rp, rm) = p.radii(t);
            assert!((rp - rp0).abs() < 1e-12);
            assert!((rm - rm0).abs() < 1e-12);
        }
        // Phases still evolve.
        let (qp1, _) = p.amplitudes_dynamical(0.7).unwrap();
        assert!((qp1.arg()).abs() > 1e-3);
    }

    #[test]
    fn label_timeline_has_one_long_plus_window() {
        // For the Figure-9 parameters the exact dynamics produces a single
        // long '+' stretch: ωt ∈ (0.894π, 8.222π), verified independently
        // against a discrete-parallel-transport simulation. (The narrative
        // around the original figure quotes (3π, 10π); that interval is not
        // reproducible from the closed form once the phase-bookkeeping typos
        // are reconciled by the reconstruction test — see the acceptance
        // suite for the full cross-check.)
        let p = figure_params();
        let pi = std::f64::consts::PI;
        let n = 500;
        for i in 0..=n {
            let w = 1.0 * pi + (8.2 - 1.0) * pi * i as f64 / n as f64;
            let (label, _) = label_sign(&p, w / p.omega).unwrap();
            assert_eq!(label, LabelSign::Plus, "4mu t = {} pi", w / pi);
        }
        // Outside the window on both sides the label is '−'.
        for w in [0.5 * pi, 8.5 * pi] {
            let (label, _) = label_sign(&p, w / p.omega).unwrap();
            assert_eq!(label, LabelSign::Minus, "4mu t = {} pi", w / pi);
        }
        // [3π, 8π] (the bulk of the quoted window) is all '+'.
        for i in 0..=n {
            let w = 3.0 * pi + 5.0 * pi * i as f64 / n as f64;
            let (label, _) = label_sign(&p, w / p.omega).unwrap();
            assert_eq!(label, LabelSign::Plus);
        }
    }

    #[test]
    fn basepoint_vicinity_on_plus_circle() {
        // Phases just off the basepoint along the C₊ circle label '+'.
        let q = [C64::from_polar(0.9, 0.3), C64::from_polar((1.0f64 - 0.81).sqrt(), 0.0)];
        let (label, boundary) = label_of_amplitudes(&q).unwrap();
        assert_eq!(label, LabelSign::Plus);
        assert!(!boundary);
    }

    #[test]
    fn oracle_csv_shape() {
        let p = figure_params();
        let ts: Vec<f64> = (0..5).map(|i| i as f64 * 0.3).collect();
        let csv = oracle_csv(&p, &ts).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("t,re_qp"));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(HyperfineParams::new(1.0, 0.4, 0.5).is_err()); // q+ too small
        assert!(HyperfineParams::new(1.0, -0.1, 0.94).is_err()); // theta < 0
        // Degenerate regimes construct (the state formula still applies) but
        // the frame machinery refuses them.
        let aligned = HyperfineParams::new(1.0, 0.0, 0.94).unwrap();
        assert!(closed_form_frame(&aligned, 0.2, FrameGauge::Canonical).is_err());
        // k² < C²l²: small theta with q+ near 1/√2 breaks axis alignment.
        let skew = HyperfineParams::new(1.0, 0.3, 0.72).unwrap();
        assert!(skew.tau_pm(0.1).is_err());
        assert!(bloch_trajectory(&skew, 0.1).is_err());
    }
}

//! Carlson symmetric elliptic integrals and Legendre's integral of the
//! third kind.
//!
//! The primary evaluation path is through the Carlson forms R_F, R_C, R_J
//! with the duplication theorem; an adaptive Gauss–Kronrod quadrature of the
//! defining integrand is kept as an independent route for cross-checking.
//! Arguments follow the "parameter" convention: Π(n; φ | m) with m = k².

use crate::{Error, Result};

/// Relative series cutoff for R_F; truncation error is O(ERRTOL^6).
const RF_ERRTOL: f64 = 0.0025;
const RC_ERRTOL: f64 = 0.0012;
const RJ_ERRTOL: f64 = 0.0015;
const MAX_ITER: usize = 200;

/// Carlson's R_F(x, y, z); arguments non-negative, at most one zero.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> Result<f64> {
    if x < 0.0 || y < 0.0 || z < 0.0 || (x + y).min(x + z).min(y + z) <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "carlson_rf domain: ({x}, {y}, {z})"
        )));
    }
    let (mut xt, mut yt, mut zt) = (x, y, z);
    let mut ave;
    let (mut dx, mut dy, mut dz);
    let mut it = 0;
    loop {
        let (sx, sy, sz) = (xt.sqrt(), yt.sqrt(), zt.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        xt = 0.25 * (xt + lam);
        yt = 0.25 * (yt + lam);
        zt = 0.25 * (zt + lam);
        ave = (xt + yt + zt) / 3.0;
        dx = (ave - xt) / ave;
        dy = (ave - yt) / ave;
        dz = (ave - zt) / ave;
        it += 1;
        if dx.abs().max(dy.abs()).max(dz.abs()) < RF_ERRTOL || it > MAX_ITER {
            break;
        }
    }
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    Ok((1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / ave.sqrt())
}

/// Carlson's degenerate R_C(x, y); x ≥ 0, y > 0 (the real branch).
pub fn carlson_rc(x: f64, y: f64) -> Result<f64> {
    if x < 0.0 || y <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "carlson_rc domain: ({x}, {y})"
        )));
    }
    let (mut xt, mut yt) = (x, y);
    let mut ave;
    let mut s;
    let mut it = 0;
    loop {
        let lam = 2.0 * xt.sqrt() * yt.sqrt() + yt;
        xt = 0.25 * (xt + lam);
        yt = 0.25 * (yt + lam);
        ave = (xt + 2.0 * yt) / 3.0;
        s = (yt - ave) / ave;
        it += 1;
        if s.abs() < RC_ERRTOL || it > MAX_ITER {
            break;
        }
    }
    Ok((1.0 + s * s * (0.3 + s * (1.0 / 7.0 + s * (0.375 + s * 9.0 / 22.0)))) / ave.sqrt())
}

/// Carlson's R_J(x, y, z, p); x, y, z non-negative (at most one zero), p > 0.
pub fn carlson_rj(x: f64, y: f64, z: f64, p: f64) -> Result<f64> {
    if x < 0.0 || y < 0.0 || z < 0.0 || p <= 0.0 || (x + y).min(x + z).min(y + z) <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "carlson_rj domain: ({x}, {y}, {z}, {p})"
        )));
    }
    let (mut xt, mut yt, mut zt, mut pt) = (x, y, z, p);
    let mut sum = 0.0;
    let mut fac = 1.0;
    let mut ave;
    let (mut dx, mut dy, mut dz, mut dp);
    let mut it = 0;
    loop {
        let (sx, sy, sz) = (xt.sqrt(), yt.sqrt(), zt.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        let alpha = (pt * (sx + sy + sz) + sx * sy * sz).powi(2);
        let beta = pt * (pt + lam) * (pt + lam);
        sum += fac * carlson_rc(alpha, beta)?;
        fac *= 0.25;
        xt = 0.25 * (xt + lam);
        yt = 0.25 * (yt + lam);
        zt = 0.25 * (zt + lam);
        pt = 0.25 * (pt + lam);
        ave = (xt + yt + zt + 2.0 * pt) / 5.0;
        dx = (ave - xt) / ave;
        dy = (ave - yt) / ave;
        dz = (ave - zt) / ave;
        dp = (ave - pt) / ave;
        it += 1;
        if dx.abs().max(dy.abs()).max(dz.abs()).max(dp.abs()) < RJ_ERRTOL || it > MAX_ITER {
            break;
        }
    }
    let ea = dx * (dy + dz) + dy * dz;
    let eb = dx * dy * dz;
    let ec = dp * dp;
    let ed = ea - 3.0 * ec;
    let ee = eb + 2.0 * dp * (ea - ec);
    let series = 1.0 + ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 4.5 / 26.0 * ee)
        + eb * (1.0 / 6.0 + dp * (-3.0 / 11.0 + dp * 3.0 / 26.0))
        + dp * ea * (1.0 / 3.0 - dp * 3.0 / 22.0)
        - dz * ec / 3.0;
    Ok(3.0 * sum + fac * series / (ave * ave.sqrt()))
}

/// Checks the admissibility of (n, φ, m) for the circular case: both
/// m·sin²ρ and n·sin²ρ must stay below 1 along the whole path [0, φ].
fn validate_pi_args(n: f64, phi: f64, m: f64) -> Result<()> {
    let reaches_equator = phi.abs() >= std::f64::consts::FRAC_PI_2;
    let s2max = if reaches_equator { 1.0 } else { phi.sin().powi(2) };
    if m * s2max >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "legendre_pi: m sin^2 reaches {} >= 1",
            m * s2max
        )));
    }
    if n * s2max >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "legendre_pi: n sin^2 reaches {} >= 1",
            n * s2max
        )));
    }
    Ok(())
}

/// Π(n; φ | m) on the principal range |φ| ≤ π/2, via Carlson forms.
fn pi_principal(n: f64, phi: f64, m: f64) -> Result<f64> {
    let s = phi.sin();
    let c2 = phi.cos().powi(2);
    let s2 = s * s;
    if s == 0.0 {
        return Ok(0.0);
    }
    let rf = carlson_rf(c2, 1.0 - m * s2, 1.0)?;
    if n == 0.0 {
        return Ok(s * rf);
    }
    let rj = carlson_rj(c2, 1.0 - m * s2, 1.0, 1.0 - n * s2)?;
    Ok(s * rf + n / 3.0 * s * s2 * rj)
}

/// Complete integral Π(n; π/2 | m).
pub fn legendre_pi_complete(n: f64, m: f64) -> Result<f64> {
    validate_pi_args(n, std::f64::consts::FRAC_PI_2, m)?;
    let rf = carlson_rf(0.0, 1.0 - m, 1.0)?;
    if n == 0.0 {
        return Ok(rf);
    }
    let rj = carlson_rj(0.0, 1.0 - m, 1.0, 1.0 - n)?;
    Ok(rf + n / 3.0 * rj)
}

/// Legendre's incomplete elliptic integral of the third kind,
///
/// Π(n; φ | m) = ∫₀^φ dρ / ((1 − n sin²ρ) √(1 − m sin²ρ)),
///
/// extended continuously beyond |φ| = π/2 through the quasi-periodicity
/// Π(n; φ + jπ | m) = Π(n; φ | m) + 2j Π(n; π/2 | m).
pub fn legendre_pi(n: f64, phi: f64, m: f64) -> Result<f64> {
    validate_pi_args(n, phi, m)?;
    let j = (phi / std::f64::consts::PI).round();
    let rem = phi - j * std::f64::consts::PI; // in [-pi/2, pi/2]
    let base = pi_principal(n, rem, m)?;
    if j == 0.0 {
        return Ok(base);
    }
    Ok(base + 2.0 * j * legendre_pi_complete(n, m)?)
}

// ---------------------------------------------------------------------------
// Independent route: adaptive Gauss–Kronrod quadrature of the integrand.
// ---------------------------------------------------------------------------

/// Kronrod-15 abscissae on [0, 1] (positive half; symmetric).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut k = 0.0;
    let mut g = 0.0;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        if x == 0.0 {
            let fv = f(mid);
            k += wk * fv;
            g += WG[3] * fv;
        } else {
            let fv = f(mid - h * x) + f(mid + h * x);
            k += wk * fv;
            if i % 2 == 1 {
                g += WG[i / 2] * fv;
            }
        }
    }
    (k * h, (k - g).abs() * h.abs())
}

/// Adaptive Gauss–Kronrod integration to absolute tolerance `tol`:
/// worst-interval-first bisection with a global error budget.
pub fn adaptive_quadrature(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (v, e) = gk15(f, a, b);
    let mut parts: Vec<(f64, f64, f64, f64)> = vec![(a, b, v, e)];
    for _ in 0..4000 {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err < tol {
            break;
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// Π(n; φ | m) by direct adaptive quadrature of the defining integrand —
/// the verification route, deliberately independent of the Carlson path.
pub fn legendre_pi_quadrature(n: f64, phi: f64, m: f64) -> Result<f64> {
    validate_pi_args(n, phi, m)?;
    let f = move |rho: f64| {
        let s2 = rho.sin().powi(2);
        1.0 / ((1.0 - n * s2) * (1.0 - m * s2).sqrt())
    };
    Ok(adaptive_quadrature(&f, 0.0, phi, 1e-13))
}

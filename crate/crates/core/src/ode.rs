//! Adaptive embedded Runge–Kutta integration for complex state vectors.
//!
//! Dormand–Prince 5(4) with PI-free step control; the state is a flat
//! `Array1<Complex64>`, so the same driver serves Schrödinger evolution and
//! the coupled polar-frame system.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// Integrates dy/dt = f(t, y) from `t0` to `t1`, adapting the step so the
/// local error estimate stays below `tol` (used as both abs and rel scale).
pub fn integrate<F>(f: &mut F, t0: f64, t1: f64, y0: &Array1<C64>, tol: f64) -> Result<Array1<C64>>
where
    F: FnMut(f64, &Array1<C64>) -> Result<Array1<C64>>,
{
    if t1 == t0 {
        return Ok(y0.clone());
    }
    let span = t1 - t0;
    let dir = span.signum();
    let h_min = span.abs() * 1e-14;
    let mut h = (span.abs() * 0.01).min(0.1) * dir;
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y)?;

    let mut steps = 0usize;
    while (t1 - t) * dir > 1e-300 {
        steps += 1;
        if steps > 40_000_000 {
            return Err(Error::StepSizeFloor { t, tol });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }

        let y2 = &y + &k1.mapv(|x| x * (A21 * h));
        let k2 = f(t + C2 * h, &y2)?;
        let y3 = &y + &azip2(&k1, A31 * h, &k2, A32 * h);
        let k3 = f(t + C3 * h, &y3)?;
        let y4 = &y + &azip3(&k1, A41 * h, &k2, A42 * h, &k3, A43 * h);
        let k4 = f(t + C4 * h, &y4)?;
        let y5 = &y + &azip4(&k1, A51 * h, &k2, A52 * h, &k3, A53 * h, &k4, A54 * h);
        let k5 = f(t + C5 * h, &y5)?;
        let y6 = &y
            + &azip5(
                &k1,
                A61 * h,
                &k2,
                A62 * h,
                &k3,
                A63 * h,
                &k4,
                A64 * h,
                &k5,
                A65 * h,
            );
        let k6 = f(t + h, &y6)?;
        let ynew = &y
            + &azip5(&k1, B1 * h, &k3, B3 * h, &k4, B4 * h, &k5, B5 * h, &k6, B6 * h);
        let k7 = f(t + h, &ynew)?;

        // Embedded 4th-order solution for the error estimate.
        let ylow = &y
            + &azip6(
                &k1,
                E1 * h,
                &k3,
                E3 * h,
                &k4,
                E4 * h,
                &k5,
                E5 * h,
                &k6,
                E6 * h,
                &k7,
                E7 * h,
            );
        let mut err2 = 0.0_f64;
        for i in 0..y.len() {
            let scale = tol * (1.0 + y[i].norm().max(ynew[i].norm()));
            let d = (ynew[i] - ylow[i]).norm() / scale;
            err2 += d * d;
        }
        let err = (err2 / y.len() as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y = ynew;
            k1 = k7; // FSAL
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h.abs() < h_min {
            return Err(Error::StepSizeFloor { t, tol });
        }
    }
    Ok(y)
}

fn azip2(a: &Array1<C64>, ca: f64, b: &Array1<C64>, cb: f64) -> Array1<C64> {
    Array1::from_shape_fn(a.len(), |i| a[i] * ca + b[i] * cb)
}
fn azip3(a: &Array1<C64>, ca: f64, b: &Array1<C64>, cb: f64, c: &Array1<C64>, cc: f64) -> Array1<C64> {
    Array1::from_shape_fn(a.len(), |i| a[i] * ca + b[i] * cb + c[i] * cc)
}
#[allow(clippy::too_many_arguments)]
fn azip4(
    a: &Array1<C64>, ca: f64, b: &Array1<C64>, cb: f64, c: &Array1<C64>, cc: f64,
    d: &Array1<C64>, cd: f64,
) -> Array1<C64> {
    Array1::from_shape_fn(a.len(), |i| a[i] * ca + b[i] * cb + c[i] * cc + d[i] * cd)
}
#[allow(clippy::too_many_arguments)]
fn azip5(
    a: &Array1<C64>, ca: f64, b: &Array1<C64>, cb: f64, c: &Array1<C64>, cc: f64,
    d: &Array1<C64>, cd: f64, e: &Array1<C64>, ce: f64,
) -> Array1<C64> {
    Array1::from_shape_fn(a.len(), |i| {
        a[i] * ca + b[i] * cb + c[i] * cc + d[i] * cd + e[i] * ce
    })
}
#[allow(clippy::too_many_arguments)]
fn azip6(
    a: &Array1<C64>, ca: f64, b: &Array1<C64>, cb: f64, c: &Array1<C64>, cc: f64,
    d: &Array1<C64>, cd: f64, e: &Array1<C64>, ce: f64, g: &Array1<C64>, cg: f64,
) -> Array1<C64> {
    Array1::from_shape_fn(a.len(), |i| {
        a[i] * ca + b[i] * cb + c[i] * cc + d[i] * cd + e[i] * ce + g[i] * cg
    })
}

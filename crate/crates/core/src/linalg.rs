//! Dense complex linear algebra on small matrices.
//!
//! Everything here is sized for Hilbert spaces of a few dozen dimensions at
//! most, so we use cyclic Jacobi iterations throughout: they are simple,
//! deterministic (fixed sweep order, no pivot heuristics), and accurate to
//! machine precision for well-separated spectra. One-sided Jacobi is used
//! for the SVD so that small singular values are not squared away.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Convergence threshold for Jacobi sweeps, relative to the matrix scale.
const JACOBI_EPS: f64 = 1e-15;
/// Hard cap on Jacobi sweeps; convergence is quadratic so this is generous.
const MAX_SWEEPS: usize = 60;

/// ⟨a, b⟩ with the physics convention: conjugate-linear in the first slot.
pub fn inner(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Euclidean norm of a complex vector.
pub fn norm(a: &Array1<C64>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    let (r, c) = m.dim();
    Array2::from_shape_fn((c, r), |(i, j)| m[(j, i)].conj())
}

/// Max entrywise deviation from Hermitian symmetry.
pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let (r, c) = m.dim();
    if r != c {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for i in 0..r {
        for j in 0..c {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Identity matrix.
pub fn eye(n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
    })
}

/// Frobenius norm.
pub fn fro_norm(m: &Array2<C64>) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Hilbert–Schmidt inner product Trace(A† B).
pub fn hs_inner(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching unit eigenvectors
/// as the columns of the second output, so that `a ≈ V diag(λ) V†`.
pub fn eigh(a: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh: matrix must be square");
    let mut m = a.clone();
    let mut v = eye(n);
    let scale = fro_norm(&m).max(1e-300);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= JACOBI_EPS * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() <= JACOBI_EPS * scale * 1e-2 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = apq / apq.norm();
                let zeta = (aqq - app) / (2.0 * apq.norm());
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary rotation in the (p, q) plane:
                //   col_p' =  c·col_p − s·conj(phase)·col_q
                //   col_q' =  s·phase·col_p + c·col_q
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = c * mip - s * phase.conj() * miq;
                    m[(i, q)] = s * phase * mip + c * miq;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = c * mpj - s * phase * mqj;
                    m[(q, j)] = s * phase.conj() * mpj + c * mqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * phase.conj() * viq;
                    v[(i, q)] = s * phase * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let vals = Array1::from_iter(order.iter().map(|&i| m[(i, i)].re));
    let vecs = Array2::from_shape_fn((n, n), |(i, j)| v[(i, order[j])]);
    (vals, vecs)
}

/// Thin singular value decomposition `m = U diag(σ) V†` by one-sided Jacobi.
///
/// Singular values come back sorted descending; `U` is `nrows × k` and `V` is
/// `ncols × k` with `k = min(nrows, ncols)`. Columns of `U` belonging to
/// numerically zero singular values are left as zero vectors — callers that
/// drop below-cutoff values never see them.
pub fn svd(m: &Array2<C64>) -> (Array2<C64>, Array1<f64>, Array2<C64>) {
    let (rows, cols) = m.dim();
    if cols > rows {
        // svd(M†) = (V, σ, U)
        let (u, s, v) = svd(&dagger(m));
        return (v, s, u);
    }
    let mut a = m.clone(); // columns get rotated in place
    let mut v = eye(cols);
    let scale = fro_norm(&a).max(1e-300);

    for _ in 0..MAX_SWEEPS {
        let mut converged = true;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut gpp = 0.0_f64;
                let mut gqq = 0.0_f64;
                let mut gpq = C64::new(0.0, 0.0);
                for i in 0..rows {
                    gpp += a[(i, p)].norm_sqr();
                    gqq += a[(i, q)].norm_sqr();
                    gpq += a[(i, p)].conj() * a[(i, q)];
                }
                if gpq.norm() <= JACOBI_EPS * (gpp.sqrt() * gqq.sqrt()).max(scale * 1e-30) {
                    continue;
                }
                converged = false;
                let phase = gpq / gpq.norm();
                let zeta = (gqq - gpp) / (2.0 * gpq.norm());
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..rows {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * phase.conj() * aiq;
                    a[(i, q)] = s * phase * aip + c * aiq;
                }
                for i in 0..cols {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * phase.conj() * viq;
                    v[(i, q)] = s * phase * vip + c * viq;
                }
            }
        }
        if converged {
            break;
        }
    }

    let mut sig: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sig[j].partial_cmp(&sig[i]).unwrap().then(i.cmp(&j)));
    sig = order.iter().map(|&i| sig[i]).collect();

    let mut u = Array2::from_elem((rows, cols), C64::new(0.0, 0.0));
    let mut vv = Array2::from_elem((cols, cols), C64::new(0.0, 0.0));
    for (jj, &j) in order.iter().enumerate() {
        if sig[jj] > 0.0 {
            for i in 0..rows {
                u[(i, jj)] = a[(i, j)] / sig[jj];
            }
        }
        for i in 0..cols {
            vv[(i, jj)] = v[(i, j)];
        }
    }
    (u, Array1::from(sig), vv)
}

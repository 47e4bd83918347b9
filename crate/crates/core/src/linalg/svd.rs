//! Singular values of small dense complex matrices.
//!
//! Golub-Kahan bidiagonalization (complex Householder reflectors with phase
//! absorption onto a real bidiagonal) followed by implicit-shift QR on the
//! bidiagonal. Smallest singular values carry absolute error of order
//! eps * ||M||_2, which is what resolvent-norm grids need; the squared
//! normal-equations shortcut would not reach that.

use num_complex::Complex64;

use super::matrix::{vec_norm2, ComplexMatrix, RealMatrix};
use crate::error::{Error, Result};

/// Singular values sorted descending, with optional right singular vectors
/// (columns of `right_vectors` pair with `values`).
#[derive(Debug, Clone)]
pub struct Svd {
    pub values: Vec<f64>,
    pub right_vectors: Option<ComplexMatrix>,
}

/// All singular values of `m`, sorted descending.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    m.check_finite()?;
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(vec![]);
    }
    if m.rows() >= m.cols() {
        Ok(svd_tall(m, false)?.values)
    } else {
        Ok(svd_tall(&m.conj_transpose(), false)?.values)
    }
}

/// Smallest singular value of a square matrix.
pub fn smin(m: &ComplexMatrix) -> Result<f64> {
    m.require_square()?;
    let vals = singular_values(m)?;
    Ok(vals.last().copied().unwrap_or(0.0))
}

/// Largest singular value (2-norm).
pub fn norm2(m: &ComplexMatrix) -> Result<f64> {
    let vals = singular_values(m)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}

/// 2-norm of a real matrix.
pub fn norm2_real(m: &RealMatrix) -> Result<f64> {
    norm2(&m.to_complex())
}

/// Frobenius norm (root sum of squared entry moduli).
pub fn norm_fro(m: &ComplexMatrix) -> f64 {
    m.norm_fro()
}

/// Singular values plus right singular vectors of a square matrix.
pub fn svd_with_right(m: &ComplexMatrix) -> Result<Svd> {
    m.require_square()?;
    m.check_finite()?;
    svd_tall(m, true)
}

const MAX_QR_SWEEPS_FACTOR: usize = 40;

/// SVD core for rows >= cols.
fn svd_tall(a: &ComplexMatrix, want_right: bool) -> Result<Svd> {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);
    let mut b = a.clone();
    let mut v = if want_right {
        Some(ComplexMatrix::identity(n))
    } else {
        None
    };

    bidiagonalize(&mut b, v.as_mut());
    let mut d: Vec<f64> = (0..n).map(|i| b[(i, i)].re).collect();
    let mut e: Vec<f64> = (0..n.saturating_sub(1)).map(|i| b[(i, i + 1)].re).collect();

    bidiagonal_qr(&mut d, &mut e, v.as_mut())?;

    // flip signs (sign belongs to the left factor) and sort descending
    for x in d.iter_mut() {
        *x = x.abs();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let mut values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    // values at machine scale are exact zeros of the input
    let snap = n as f64 * f64::EPSILON * values.first().copied().unwrap_or(0.0);
    for x in values.iter_mut() {
        if *x <= snap {
            *x = 0.0;
        }
    }
    let right_vectors = v.map(|vm| {
        let mut out = ComplexMatrix::zeros(n, n);
        for (new_j, &old_j) in order.iter().enumerate() {
            out.set_column(new_j, &vm.column(old_j));
        }
        out
    });

    Ok(Svd {
        values,
        right_vectors,
    })
}

/// Householder bidiagonalization with phase absorption; on exit the
/// diagonal and superdiagonal of `b` are real non-negative and `v`
/// accumulates the right transformations.
fn bidiagonalize(b: &mut ComplexMatrix, mut v: Option<&mut ComplexMatrix>) {
    let m = b.rows();
    let n = b.cols();
    for k in 0..n {
        // left reflector: zero below b[k,k]
        let x: Vec<Complex64> = (k..m).map(|i| b[(i, k)]).collect();
        let xnorm = vec_norm2(&x);
        if xnorm > 0.0 {
            let mut w = x;
            let x0 = w[0];
            let phase = if x0 == Complex64::ZERO {
                Complex64::ONE
            } else {
                x0 / x0.norm()
            };
            let alpha = -phase * xnorm;
            w[0] -= alpha;
            let wn = vec_norm2(&w);
            if wn > 0.0 {
                for wi in w.iter_mut() {
                    *wi /= wn;
                }
                for j in k..n {
                    let mut s = Complex64::ZERO;
                    for (idx, i) in (k..m).enumerate() {
                        s += w[idx].conj() * b[(i, j)];
                    }
                    s *= 2.0;
                    for (idx, i) in (k..m).enumerate() {
                        let upd = s * w[idx];
                        b[(i, j)] -= upd;
                    }
                }
            }
            b[(k, k)] = alpha;
            for i in k + 1..m {
                b[(i, k)] = Complex64::ZERO;
            }
        }
        // absorb pivot phase into the left factor (row scaling)
        let piv = b[(k, k)];
        if piv != Complex64::ZERO && piv.im != 0.0 || piv.re < 0.0 {
            let ph = if piv == Complex64::ZERO {
                Complex64::ONE
            } else {
                piv / piv.norm()
            };
            let rot = ph.conj();
            for j in k..n {
                b[(k, j)] *= rot;
            }
        }
        if k + 1 < n {
            // right reflector: zero right of b[k, k+1]
            let x: Vec<Complex64> = (k + 1..n).map(|j| b[(k, j)].conj()).collect();
            let xnorm = vec_norm2(&x);
            if xnorm > 0.0 {
                let mut w = x;
                let x0 = w[0];
                let phase = if x0 == Complex64::ZERO {
                    Complex64::ONE
                } else {
                    x0 / x0.norm()
                };
                let alpha = -phase * xnorm;
                w[0] -= alpha;
                let wn = vec_norm2(&w);
                if wn > 0.0 {
                    for wi in w.iter_mut() {
                        *wi /= wn;
                    }
                    // B <- B (I - 2 w w*) on columns k+1..
                    for i in k..m {
                        let mut s = Complex64::ZERO;
                        for (idx, j) in (k + 1..n).enumerate() {
                            s += b[(i, j)] * w[idx];
                        }
                        s *= 2.0;
                        for (idx, j) in (k + 1..n).enumerate() {
                            let upd = s * w[idx].conj();
                            b[(i, j)] -= upd;
                        }
                    }
                    if let Some(vm) = v.as_deref_mut() {
                        let nv = vm.rows();
                        for i in 0..nv {
                            let mut s = Complex64::ZERO;
                            for (idx, j) in (k + 1..n).enumerate() {
                                s += vm[(i, j)] * w[idx];
                            }
                            s *= 2.0;
                            for (idx, j) in (k + 1..n).enumerate() {
                                let upd = s * w[idx].conj();
                                vm[(i, j)] -= upd;
                            }
                        }
                    }
                }
                b[(k, k + 1)] = alpha.conj();
                for j in k + 2..n {
                    b[(k, j)] = Complex64::ZERO;
                }
            }
            // absorb superdiagonal phase into column k+1 (and V)
            let sup = b[(k, k + 1)];
            if sup != Complex64::ZERO && (sup.im != 0.0 || sup.re < 0.0) {
                let ph = sup / sup.norm();
                let rot = ph.conj();
                for i in k..m {
                    b[(i, k + 1)] *= rot;
                }
                if let Some(vm) = v.as_deref_mut() {
                    let nv = vm.rows();
                    for i in 0..nv {
                        vm[(i, k + 1)] *= rot;
                    }
                }
            }
        }
    }
}

#[inline]
fn rgivens(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (1.0, 0.0, a)
    } else if a == 0.0 {
        (0.0, 1.0, b)
    } else {
        let r = a.hypot(b);
        (a / r, b / r, r)
    }
}

/// Implicit-shift QR on a real upper bidiagonal (diagonal `d`, superdiagonal
/// `e`); right rotations are accumulated into `v` when present.
fn bidiagonal_qr(d: &mut [f64], e: &mut [f64], mut v: Option<&mut ComplexMatrix>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let bnorm = d
        .iter()
        .chain(e.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut sweeps = 0usize;
    let max_sweeps = MAX_QR_SWEEPS_FACTOR * n * n;

    loop {
        for i in 0..n - 1 {
            if e[i].abs() <= eps * (d[i].abs() + d[i + 1].abs()).max(bnorm * eps) {
                e[i] = 0.0;
            }
        }
        let Some(qe) = (0..n - 1).rev().find(|&i| e[i] != 0.0) else {
            return Ok(());
        };
        let q = qe + 1;
        let mut p = qe;
        while p > 0 && e[p - 1] != 0.0 {
            p -= 1;
        }

        // negligible diagonal inside the block: zero it and chase the
        // superdiagonal away with left rotations (no effect on V)
        let mut split = false;
        for i in p..q {
            if d[i].abs() <= eps * bnorm {
                d[i] = 0.0;
                let mut f = e[i];
                e[i] = 0.0;
                for j in i + 1..=q {
                    let (c, s, r) = rgivens(d[j], f);
                    d[j] = r;
                    if j < q {
                        f = -s * e[j];
                        e[j] *= c;
                    }
                }
                split = true;
                break;
            }
        }
        if split {
            continue;
        }

        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(Error::Convergence {
                algorithm: "bidiagonal QR",
                iterations: sweeps,
            });
        }

        // Wilkinson shift from the trailing 2x2 of B^T B
        let dq = d[q];
        let dq1 = d[q - 1];
        let eq1 = e[q - 1];
        let eq2 = if q >= 2 && q - 1 > p { e[q - 2] } else { 0.0 };
        let t11 = dq1 * dq1 + eq2 * eq2;
        let t12 = dq1 * eq1;
        let t22 = dq * dq + eq1 * eq1;
        let delta = (t11 - t22) / 2.0;
        let mu = if delta == 0.0 && t12 == 0.0 {
            t22
        } else {
            let denom = delta + delta.signum() * delta.hypot(t12);
            if denom == 0.0 {
                t22
            } else {
                t22 - t12 * t12 / denom
            }
        };

        let mut f = d[p] * d[p] - mu;
        let mut g = d[p] * e[p];
        for k in p..q {
            let (cr, sr, r) = rgivens(f, g);
            if k > p {
                e[k - 1] = r;
            }
            let t1 = d[k];
            let t2 = e[k];
            d[k] = cr * t1 + sr * t2;
            e[k] = -sr * t1 + cr * t2;
            let bulge = sr * d[k + 1];
            d[k + 1] *= cr;
            if let Some(vm) = v.as_deref_mut() {
                let nv = vm.rows();
                for i in 0..nv {
                    let a1 = vm[(i, k)];
                    let a2 = vm[(i, k + 1)];
                    vm[(i, k)] = cr * a1 + sr * a2;
                    vm[(i, k + 1)] = -sr * a1 + cr * a2;
                }
            }
            let (cl, sl, r2) = rgivens(d[k], bulge);
            d[k] = r2;
            let t1 = e[k];
            let t2 = d[k + 1];
            e[k] = cl * t1 + sl * t2;
            d[k + 1] = -sl * t1 + cl * t2;
            if k + 1 < q {
                let t3 = e[k + 1];
                f = e[k];
                g = sl * t3;
                e[k + 1] = cl * t3;
            }
        }
    }
}

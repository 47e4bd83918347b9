//! Dense eigendecomposition of small complex (or real) square matrices.
//!
//! Hessenberg reduction by complex Householder reflectors followed by a
//! Wilkinson-shifted QR iteration gives the Schur form A = Q T Q*; right
//! eigenvectors come from back substitution on the triangular factor. The
//! contract is the residual bound ||A v - lambda v||_2 <= 1e-10 ||A||_2,
//! not the algorithm.

use num_complex::Complex64;

use super::matrix::{vec_norm2, ComplexMatrix, RealMatrix};
use crate::error::{Error, Result};

/// Eigenvalues paired with unit-norm right eigenvectors.
///
/// Eigenvalues are sorted by descending real part, ties broken by
/// descending imaginary part; column j of `eigenvectors` belongs to
/// `eigenvalues[j]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: ComplexMatrix,
}

const MAX_SWEEPS_PER_EIGENVALUE: usize = 40;

/// Eigendecomposition of a complex square matrix.
pub fn eig(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = a.require_square()?;
    a.check_finite()?;
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }

    let mut t = a.clone();
    let scale = balance(&mut t);
    let mut q = ComplexMatrix::identity(n);
    hessenberg(&mut t, Some(&mut q));
    schur(&mut t, Some(&mut q))?;

    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = Vec::with_capacity(n);
    for j in 0..n {
        let lambda = t[(j, j)];
        let y = triangular_eigenvector(&t, j);
        let mut v = q.mul_vec(&y);
        // undo balancing (columns of the balanced eigenvector map back via D)
        for (i, vi) in v.iter_mut().enumerate() {
            *vi *= scale[i];
        }
        normalize_phase(&mut v);
        pairs.push((lambda, v));
    }

    pairs.sort_by(|a, b| eigenvalue_order(&b.0, &a.0));
    let eigenvalues: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (j, (_, v)) in pairs.iter().enumerate() {
        eigenvectors.set_column(j, v);
    }

    #[cfg(debug_assertions)]
    {
        // residual contract: ||A v - lambda v|| <= 1e-10 ||A||_2
        let bound = 1e-10 * crate::linalg::svd::norm2(a)?.max(f64::MIN_POSITIVE);
        for (lambda, v) in &pairs {
            let av = a.mul_vec(v);
            let r: f64 = av
                .iter()
                .zip(v.iter())
                .map(|(x, y)| (x - y * lambda).norm_sqr())
                .sum::<f64>()
                .sqrt();
            debug_assert!(r <= bound, "eig residual {r:e} exceeds {bound:e}");
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigendecomposition of a real square matrix.
pub fn eig_real(a: &RealMatrix) -> Result<EigenDecomposition> {
    eig(&a.to_complex())
}

/// Eigenvalues only (no Schur vector accumulation); sorted like [`eig`].
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = a.require_square()?;
    a.check_finite()?;
    let mut t = a.clone();
    balance(&mut t);
    hessenberg(&mut t, None);
    schur(&mut t, None)?;
    let mut vals: Vec<Complex64> = (0..n).map(|j| t[(j, j)]).collect();
    vals.sort_by(|a, b| eigenvalue_order(b, a));
    Ok(vals)
}

/// Eigenvalues only of a real matrix.
pub fn eigenvalues_real(a: &RealMatrix) -> Result<Vec<Complex64>> {
    eigenvalues(&a.to_complex())
}

/// Ascending comparison: real part first, then imaginary part.
pub fn eigenvalue_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Osborne balancing in radix-2 arithmetic: D^-1 A D with D diagonal powers
/// of two. Returns the diagonal of D.
fn balance(a: &mut ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut d = vec![1.0f64; n];
    let radix: f64 = 2.0;
    let mut converged = false;
    let mut guard = 0;
    while !converged && guard < 100 {
        converged = true;
        guard += 1;
        for i in 0..n {
            let mut c: f64 = 0.0;
            let mut r: f64 = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            let mut c2 = c;
            let mut r2 = r;
            while c2 < r2 / radix {
                c2 *= radix;
                r2 /= radix;
                f *= radix;
            }
            while c2 >= r2 * radix {
                c2 /= radix;
                r2 *= radix;
                f /= radix;
            }
            if (c2 + r2) < 0.95 * s && f != 1.0 {
                converged = false;
                d[i] *= f;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
    d
}

/// Reduce to upper Hessenberg form with Householder reflectors; if `q` is
/// given it accumulates the unitary similarity.
fn hessenberg(a: &mut ComplexMatrix, mut q: Option<&mut ComplexMatrix>) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        // reflector zeroing a[k+2.., k]
        let mut x: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = vec_norm2(&x);
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0 == Complex64::ZERO {
            Complex64::ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        x[0] -= alpha;
        let vnorm = vec_norm2(&x);
        if vnorm == 0.0 {
            continue;
        }
        for xi in x.iter_mut() {
            *xi /= vnorm;
        }
        // apply P = I - 2 v v* from the left to rows k+1.., all columns
        for j in 0..n {
            let mut s = Complex64::ZERO;
            for (idx, i) in (k + 1..n).enumerate() {
                s += x[idx].conj() * a[(i, j)];
            }
            s *= 2.0;
            for (idx, i) in (k + 1..n).enumerate() {
                let upd = s * x[idx];
                a[(i, j)] -= upd;
            }
        }
        // from the right to columns k+1.., all rows
        for i in 0..n {
            let mut s = Complex64::ZERO;
            for (idx, j) in (k + 1..n).enumerate() {
                s += a[(i, j)] * x[idx];
            }
            s *= 2.0;
            for (idx, j) in (k + 1..n).enumerate() {
                let upd = s * x[idx].conj();
                a[(i, j)] -= upd;
            }
        }
        if let Some(qm) = q.as_deref_mut() {
            for i in 0..n {
                let mut s = Complex64::ZERO;
                for (idx, j) in (k + 1..n).enumerate() {
                    s += qm[(i, j)] * x[idx];
                }
                s *= 2.0;
                for (idx, j) in (k + 1..n).enumerate() {
                    let upd = s * x[idx].conj();
                    qm[(i, j)] -= upd;
                }
            }
        }
        // clean the annihilated entries
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = Complex64::ZERO;
        }
    }
}

/// Complex Givens rotation: returns (c, s, r) with [c, s; -conj(s), c] [f; g] = [r; 0],
/// c real.
fn zrotg(f: Complex64, g: Complex64) -> (f64, Complex64, Complex64) {
    if g == Complex64::ZERO {
        return (1.0, Complex64::ZERO, f);
    }
    if f == Complex64::ZERO {
        let gn = g.norm();
        return (0.0, g.conj() / gn, Complex64::new(gn, 0.0));
    }
    let fn_ = f.norm();
    let d = (f.norm_sqr() + g.norm_sqr()).sqrt();
    let c = fn_ / d;
    let fs = f / fn_;
    let s = fs * g.conj() / d;
    let r = fs * d;
    (c, s, r)
}

/// Shifted QR iteration driving a Hessenberg matrix to upper triangular
/// (complex Schur) form. `q` accumulates the unitary transform if present.
fn schur(h: &mut ComplexMatrix, mut q: Option<&mut ComplexMatrix>) -> Result<()> {
    let n = h.rows();
    if n <= 1 {
        return Ok(());
    }
    let hnorm = h.max_abs().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut m = n - 1; // active block end
    let mut stall = 0usize;
    let mut total_iters = 0usize;
    let max_total = MAX_SWEEPS_PER_EIGENVALUE * n;

    loop {
        // deflate converged subdiagonals
        let mut l = m;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let local = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let thresh = eps * if local > 0.0 { local } else { hnorm };
            if sub <= thresh {
                h[(l, l - 1)] = Complex64::ZERO;
                break;
            }
            l -= 1;
        }
        if l == m {
            // eigenvalue at m settled
            if m == 0 {
                return Ok(());
            }
            m -= 1;
            stall = 0;
            continue;
        }

        total_iters += 1;
        if total_iters > max_total {
            return Err(Error::Convergence {
                algorithm: "shifted QR",
                iterations: total_iters,
            });
        }

        // Wilkinson shift from the trailing 2x2 of the active block;
        // exceptional shift when stalled.
        stall += 1;
        let shift = if stall.is_multiple_of(12) {
            h[(m, m)] + Complex64::new(0.75 * h[(m, m - 1)].norm(), 0.0)
        } else {
            let a = h[(m - 1, m - 1)];
            let b = h[(m - 1, m)];
            let c = h[(m, m - 1)];
            let d = h[(m, m)];
            let tr = a + d;
            let det = a * d - b * c;
            let disc = (tr * tr - 4.0 * det).sqrt();
            let r1 = (tr + disc) / 2.0;
            let r2 = (tr - disc) / 2.0;
            if (r1 - d).norm() <= (r2 - d).norm() {
                r1
            } else {
                r2
            }
        };

        // implicit single-shift sweep l..=m
        let mut f = h[(l, l)] - shift;
        let mut g = h[(l + 1, l)];
        for k in l..m {
            let (c, s, _r) = zrotg(f, g);
            // left rotation on rows k, k+1
            let jstart = k.saturating_sub(1).max(l);
            for j in jstart..n {
                let t1 = h[(k, j)];
                let t2 = h[(k + 1, j)];
                h[(k, j)] = c * t1 + s * t2;
                h[(k + 1, j)] = -s.conj() * t1 + c * t2;
            }
            // right rotation on columns k, k+1
            let iend = (k + 2).min(m) + 1;
            for i in 0..iend {
                let t1 = h[(i, k)];
                let t2 = h[(i, k + 1)];
                h[(i, k)] = c * t1 + s.conj() * t2;
                h[(i, k + 1)] = -s * t1 + c * t2;
            }
            if let Some(qm) = q.as_deref_mut() {
                for i in 0..n {
                    let t1 = qm[(i, k)];
                    let t2 = qm[(i, k + 1)];
                    qm[(i, k)] = c * t1 + s.conj() * t2;
                    qm[(i, k + 1)] = -s * t1 + c * t2;
                }
            }
            if k < m {
                f = h[(k + 1, k)];
                g = if k + 1 < m {
                    h[(k + 2, k)]
                } else {
                    Complex64::ZERO
                };
            }
        }
        // restore exact Hessenberg structure below the subdiagonal
        for i in l + 2..=m {
            h[(i, i - 2)] = Complex64::ZERO;
        }
    }
}

/// Complex division by Smith's algorithm: safe for denominators near the
/// underflow threshold, where the naive norm-squared formula degrades to
/// 0/0.
fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let den = b.re + b.im * r;
        Complex64::new((a.re + a.im * r) / den, (a.im - a.re * r) / den)
    } else {
        let r = b.re / b.im;
        let den = b.im + b.re * r;
        Complex64::new((a.re * r + a.im) / den, (a.im * r - a.re) / den)
    }
}

/// Back substitution for the right eigenvector of the triangular factor T
/// belonging to the diagonal entry j; near-singular pivots are regularized
/// LAPACK-style so defective matrices yield repeated eigenvectors rather
/// than failures.
fn triangular_eigenvector(t: &ComplexMatrix, j: usize) -> Vec<Complex64> {
    let n = t.rows();
    let lambda = t[(j, j)];
    let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
    // floored so the zero matrix regularizes to a normal number
    let smallnum = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE);
    let mut y = vec![Complex64::ZERO; n];
    y[j] = Complex64::ONE;
    for i in (0..j).rev() {
        let mut s = Complex64::ZERO;
        for k in i + 1..=j {
            s += t[(i, k)] * y[k];
        }
        let mut d = t[(i, i)] - lambda;
        if d.norm() < smallnum {
            d = Complex64::new(smallnum, 0.0);
        }
        y[i] = -cdiv(s, d);
        // rescale to avoid overflow on badly graded problems
        let yi = y[i].norm();
        if yi > 1e100 {
            let inv = 1.0 / yi;
            for v in y.iter_mut() {
                *v *= inv;
            }
        }
    }
    y
}

/// Unit 2-norm and a deterministic phase: the largest-modulus component is
/// made real and positive.
fn normalize_phase(v: &mut [Complex64]) {
    let norm = vec_norm2(v);
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    let mut imax = 0;
    let mut best = -1.0;
    for (i, x) in v.iter().enumerate() {
        let a = x.norm();
        if a > best {
            best = a;
            imax = i;
        }
    }
    if best > 0.0 {
        let phase = v[imax] / best;
        let rot = phase.conj();
        for x in v.iter_mut() {
            *x *= rot;
        }
    }
}

//! Scalar measures of departure from normality and distance bounds.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eig, norm2, svd_with_right, ComplexMatrix, RealMatrix};

/// Spectral condition number of the eigenvector matrix, or the flag that
/// the matrix is numerically defective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kappa2 {
    Value(f64),
    Defective,
}

/// The measures used in the parametric studies plus the Frobenius-distance
/// bounds they imply.
#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub kappa2_v: Kappa2,
    pub dep_c: f64,
    pub dep_hf: f64,
    pub dist_lower: f64,
    pub dist_upper: f64,
    pub is_normal: bool,
}

/// ||A*A - AA*||_2 / ||A||_2^2, scale invariant, in [0, sqrt(2)].
pub fn dep_commutator(a: &ComplexMatrix) -> Result<f64> {
    a.require_square()?;
    let na = norm2(a)?;
    if na == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let ah = a.conj_transpose();
    let comm = ah.matmul(a).sub(&a.matmul(&ah));
    Ok(norm2(&comm)? / (na * na))
}

/// sqrt(max(0, ||A||_F^2 - sum |lambda_j|^2)); the Frobenius invariance of
/// the Schur form makes an explicit factorization unnecessary.
pub fn dep_henrici_f(a: &ComplexMatrix) -> Result<f64> {
    a.require_square()?;
    let d = eig(a)?;
    let fro2 = a.norm_fro().powi(2);
    let diag2: f64 = d.eigenvalues.iter().map(|z| z.norm_sqr()).sum();
    Ok((fro2 - diag2).max(0.0).sqrt())
}

/// Numerically-degenerate eigenvalue clusters get an orthonormal basis of
/// their span. This makes the singular values of V well defined (any
/// orthonormal basis of an eigenspace gives the same ones) and hence
/// kappa2 deterministic across algorithms.
fn orthonormalize_degenerate_clusters(
    eigenvalues: &[Complex64],
    v: &mut ComplexMatrix,
    cluster_tol: f64,
) {
    let n = eigenvalues.len();
    // connected components under |li - lj| <= tol (conjugate-pair sorting
    // interleaves cluster members, so adjacency in sort order is not enough)
    let mut visited = vec![false; n];
    for i in 0..n {
        if visited[i] {
            continue;
        }
        let mut cluster = vec![i];
        visited[i] = true;
        let mut cursor = 0;
        while cursor < cluster.len() {
            let a = cluster[cursor];
            for j in 0..n {
                if !visited[j] && (eigenvalues[j] - eigenvalues[a]).norm() <= cluster_tol {
                    visited[j] = true;
                    cluster.push(j);
                }
            }
            cursor += 1;
        }
        if cluster.len() < 2 {
            continue;
        }
        cluster.sort_unstable();
        // modified Gram-Schmidt within the cluster
        for (ci, &c) in cluster.iter().enumerate() {
            let mut col = v.column(c);
            for &prev in &cluster[..ci] {
                let pcol = v.column(prev);
                let inner: Complex64 = pcol.iter().zip(col.iter()).map(|(p, x)| p.conj() * x).sum();
                for (x, p) in col.iter_mut().zip(pcol.iter()) {
                    *x -= inner * p;
                }
            }
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-14 {
                for x in col.iter_mut() {
                    *x /= norm;
                }
            }
            v.set_column(c, &col);
        }
    }
}

/// Spectral condition number of the (unit-column) eigenvector matrix.
pub fn kappa2_eigvec(a: &ComplexMatrix) -> Result<Kappa2> {
    a.require_square()?;
    let d = eig(a)?;
    let mut v = d.eigenvectors;
    let scale = norm2(a)?;
    orthonormalize_degenerate_clusters(&d.eigenvalues, &mut v, 1e-12 * scale.max(1.0));
    let sv = svd_with_right(&v)?.values;
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smin < 1e-13 * smax {
        Ok(Kappa2::Defective)
    } else {
        Ok(Kappa2::Value(smax / smin))
    }
}

/// Frobenius-distance bounds to the set of normal matrices:
/// dep_hf/sqrt(n) <= dist <= dep_hf.
pub fn distance_bounds(a: &ComplexMatrix) -> Result<(f64, f64)> {
    let n = a.require_square()?;
    let dep = dep_henrici_f(a)?;
    Ok((dep / (n as f64).sqrt(), dep))
}

/// All measures in one pass.
pub fn report(a: &ComplexMatrix) -> Result<NormalityReport> {
    a.require_square()?;
    let dep_c = dep_commutator(a)?;
    let dep_hf = dep_henrici_f(a)?;
    let (dist_lower, dist_upper) = distance_bounds(a)?;
    let kappa2_v = kappa2_eigvec(a)?;
    let ah = a.conj_transpose();
    let comm_f = a.matmul(&ah).sub(&ah.matmul(a)).norm_fro();
    let is_normal = comm_f <= 1e-12 * a.norm_fro().powi(2);
    Ok(NormalityReport {
        kappa2_v,
        dep_c,
        dep_hf,
        dist_lower,
        dist_upper,
        is_normal,
    })
}

/// Convenience wrapper for real matrices.
pub fn report_real(a: &RealMatrix) -> Result<NormalityReport> {
    report(&a.to_complex())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jordan2() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == 0 && j == 1 {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        })
    }

    fn symmetric_random(n: usize, seed: u64) -> ComplexMatrix {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = Complex64::new(next(), 0.0);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    #[test]
    fn symmetric_has_zero_departure() {
        let a = symmetric_random(5, 42);
        assert!(dep_commutator(&a).unwrap() < 1e-12);
        assert!(dep_henrici_f(&a).unwrap() < 1e-6 * a.norm_fro());
        let (lo, hi) = distance_bounds(&a).unwrap();
        assert!(lo < 1e-6 && hi < 1e-6 * a.norm_fro().max(1.0));
        match kappa2_eigvec(&a).unwrap() {
            Kappa2::Value(v) => assert!((v - 1.0).abs() < 1e-8),
            Kappa2::Defective => panic!("symmetric matrix reported defective"),
        }
        assert!(report(&a).unwrap().is_normal);
    }

    #[test]
    fn jordan_block_values() {
        let a = jordan2();
        assert!((dep_commutator(&a).unwrap() - 1.0).abs() < 1e-12);
        assert!((dep_henrici_f(&a).unwrap() - 1.0).abs() < 1e-12);
        let (lo, hi) = distance_bounds(&a).unwrap();
        assert!((lo - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
        assert!((hi - 1.0).abs() < 1e-12);
        assert!(matches!(kappa2_eigvec(&a).unwrap(), Kappa2::Defective));
    }

    #[test]
    fn near_jordan_is_ill_conditioned() {
        let mut a = jordan2();
        a[(1, 0)] = Complex64::new(1e-12, 0.0);
        match kappa2_eigvec(&a).unwrap() {
            Kappa2::Value(v) => assert!(v >= 1e5, "kappa2 = {v}"),
            Kappa2::Defective => {} // acceptable at this conditioning
        }
    }

    #[test]
    fn zero_matrix_rejected() {
        let a = ComplexMatrix::zeros(3, 3);
        assert!(matches!(dep_commutator(&a), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn scale_invariance_of_commutator_measure() {
        let mut a = symmetric_random(4, 7);
        a[(0, 3)] += Complex64::new(0.9, 0.2); // break normality
        let d1 = dep_commutator(&a).unwrap();
        let d2 = dep_commutator(&a.scale(Complex64::new(37.5, 0.0))).unwrap();
        assert!((d1 - d2).abs() < 1e-16f64.max(1e-12 * d1));
    }
}

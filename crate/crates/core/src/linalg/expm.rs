//! Matrix exponential propagator by scaling and squaring with Pade
//! approximants (Higham's degree-13 scheme with lower-degree shortcuts).

use super::matrix::RealMatrix;
use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const THETA_3: f64 = 1.495585217958292e-2;
#[allow(clippy::excessive_precision)]
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

/// exp(t*A) * q0 for a real square A.
pub fn expm_apply(a: &RealMatrix, t: f64, q0: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.cols() != q0.len() {
        return Err(Error::DimensionMismatch(format!(
            "state length {} vs matrix dimension {}",
            q0.len(),
            a.cols()
        )));
    }
    if !t.is_finite() {
        return Err(Error::DimensionMismatch("non-finite time".into()));
    }
    a.check_finite()?;
    if t == 0.0 {
        return Ok(q0.to_vec());
    }
    let p = expm(&a.scale(t))?;
    let out = p.mul_vec(q0);
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Saturation { t });
    }
    Ok(out)
}

/// exp(A) for a real square A.
pub fn expm(a: &RealMatrix) -> Result<RealMatrix> {
    let n = a.rows();
    let l1 = a.norm_l1();
    let (mut u, mut v, squarings): (RealMatrix, RealMatrix, u32);
    if l1 < THETA_3 {
        let (uu, vv) = pade(a, &PADE3);
        u = uu;
        v = vv;
        squarings = 0;
    } else if l1 < THETA_5 {
        let (uu, vv) = pade(a, &PADE5);
        u = uu;
        v = vv;
        squarings = 0;
    } else if l1 < THETA_7 {
        let (uu, vv) = pade(a, &PADE7);
        u = uu;
        v = vv;
        squarings = 0;
    } else if l1 < THETA_9 {
        let (uu, vv) = pade(a, &PADE9);
        u = uu;
        v = vv;
        squarings = 0;
    } else {
        let s = ((l1 / THETA_13).log2().ceil() as i32).max(0) as u32;
        let scaled = a.scale(2.0f64.powi(-(s as i32)));
        let (uu, vv) = pade13(&scaled);
        u = uu;
        v = vv;
        squarings = s;
    }

    // r = (-U + V)^-1 (U + V)
    let numer = u.add(&v);
    for i in 0..n {
        for j in 0..n {
            let x = -u[(i, j)] + v[(i, j)];
            u[(i, j)] = x; // reuse u as the denominator
        }
    }
    let mut r = lu_solve_matrix(&mut u, &numer)?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    r.check_finite().map_err(|_| Error::Saturation { t: 1.0 })?;
    v = r;
    Ok(v)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Even/odd split U = A * (odd part), V = even part, for degrees 3..9.
fn pade(a: &RealMatrix, b: &[f64]) -> (RealMatrix, RealMatrix) {
    let n = a.rows();
    let a2 = a.matmul(a);
    let mut even = RealMatrix::identity(n).scale(b[0]);
    let mut odd = RealMatrix::identity(n).scale(b[1]);
    let mut pow = RealMatrix::identity(n);
    let degree = b.len() - 1;
    let mut k = 2;
    while k <= degree {
        pow = pow.matmul(&a2);
        even = even.add(&pow.scale(b[k]));
        if k < degree {
            odd = odd.add(&pow.scale(b[k + 1]));
        }
        k += 2;
    }
    (a.matmul(&odd), even)
}

fn pade13(a: &RealMatrix) -> (RealMatrix, RealMatrix) {
    let b = &PADE13;
    let n = a.rows();
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let w1 = a6.scale(b[13]).add(&a4.scale(b[11])).add(&a2.scale(b[9]));
    let w2 = a6
        .scale(b[7])
        .add(&a4.scale(b[5]))
        .add(&a2.scale(b[3]))
        .add(&RealMatrix::identity(n).scale(b[1]));
    let u = a.matmul(&a6.matmul(&w1).add(&w2));
    let z1 = a6.scale(b[12]).add(&a4.scale(b[10])).add(&a2.scale(b[8]));
    let v = a6
        .matmul(&z1)
        .add(&a6.scale(b[6]))
        .add(&a4.scale(b[4]))
        .add(&a2.scale(b[2]))
        .add(&RealMatrix::identity(n).scale(b[0]));
    (u, v)
}

/// Solve X from D X = B by LU with partial pivoting; D is destroyed.
fn lu_solve_matrix(d: &mut RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    let n = d.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        let mut best = d[(k, k)].abs();
        for i in k + 1..n {
            let cand = d[(i, k)].abs();
            if cand > best {
                best = cand;
                piv = i;
            }
        }
        if best == 0.0 {
            return Err(Error::Convergence {
                algorithm: "LU (singular denominator in Pade solve)",
                iterations: k,
            });
        }
        if piv != k {
            for j in 0..n {
                let tmp = d[(k, j)];
                d[(k, j)] = d[(piv, j)];
                d[(piv, j)] = tmp;
            }
            perm.swap(k, piv);
        }
        let inv = 1.0 / d[(k, k)];
        for i in k + 1..n {
            let f = d[(i, k)] * inv;
            d[(i, k)] = f;
            for j in k + 1..n {
                let upd = f * d[(k, j)];
                d[(i, j)] -= upd;
            }
        }
    }
    let mut x = RealMatrix::zeros(n, n);
    for col in 0..n {
        let mut y = vec![0.0f64; n];
        for i in 0..n {
            let mut s = b[(perm[i], col)];
            for j in 0..i {
                s -= d[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= d[(i, j)] * x[(j, col)];
            }
            x[(i, col)] = s / d[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_is_identity() {
        let a = RealMatrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let q = expm_apply(&a, 0.0, &[3.0, -4.0]).unwrap();
        assert_eq!(q, vec![3.0, -4.0]);
    }

    #[test]
    fn scalar_decay() {
        let a = RealMatrix::from_rows(&[&[-1.0]]);
        let q = expm_apply(&a, 1.0, &[1.0]).unwrap();
        assert!((q[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rotation_block() {
        // exp(t [[0,1],[-1,0]]) is a rotation by t
        let a = RealMatrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let t = 0.7;
        let q = expm_apply(&a, t, &[1.0, 0.0]).unwrap();
        assert!((q[0] - t.cos()).abs() < 1e-12);
        assert!((q[1] + t.sin()).abs() < 1e-12);
    }

    #[test]
    fn unstable_overflow_reports_saturation() {
        let a = RealMatrix::from_rows(&[&[100.0]]);
        let r = expm_apply(&a, 100.0, &[1.0]);
        assert!(matches!(r, Err(Error::Saturation { .. })));
    }

    #[test]
    fn large_norm_scaling_path() {
        let a = RealMatrix::from_rows(&[&[0.0, 40.0], &[-40.0, 0.0]]);
        let q = expm_apply(&a, 1.0, &[1.0, 0.0]).unwrap();
        assert!((q[0] - 40.0f64.cos()).abs() < 1e-8);
        assert!((q[1] + 40.0f64.sin()).abs() < 1e-8);
    }
}

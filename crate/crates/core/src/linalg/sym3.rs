//! Closed-form eigenvalues of real symmetric 3x3 matrices.

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// Build a*I + b*(n (x) n).
pub fn iso_plus_rank_one(a: f64, b: f64, n: &[f64; 3]) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = b * n[i] * n[j];
        }
        m[i][i] += a;
    }
    m
}

pub fn mat3_scale(m: &Mat3, s: f64) -> Mat3 {
    let mut out = *m;
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    out
}

pub fn mat3_max_abs(m: &Mat3) -> f64 {
    m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn check_symmetric(m: &Mat3) -> Result<()> {
    let scale = mat3_max_abs(m).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            worst = worst.max((m[i][j] - m[j][i]).abs());
        }
    }
    let rel = worst / scale;
    if rel > 1e-12 {
        return Err(Error::Asymmetric { rel });
    }
    Ok(())
}

/// Eigenvalues of a real symmetric 3x3 matrix, ascending, by the
/// trigonometric closed form.
pub fn sym3_eigvals(m: &Mat3) -> Result<[f64; 3]> {
    check_symmetric(m)?;
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(f64::total_cmp);
        return Ok(d);
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = m[i][j] / p;
        }
        b[i][i] -= q / p;
    }
    let detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let eig_hi = q + 2.0 * p * phi.cos();
    let eig_lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let eig_mid = 3.0 * q - eig_hi - eig_lo;
    let mut e = [eig_lo, eig_mid, eig_hi];

    // The acos route loses sqrt(eps) accuracy exactly at double roots (the
    // characteristic polynomial squares the conditioning). Below that noise
    // floor a computed split carries no information; the pair is recovered
    // from the exactly-summed trace instead, which restores machine accuracy
    // for degenerate spectra.
    let scale = mat3_max_abs(m).max(f64::MIN_POSITIVE);
    let thr = 4.0 * f64::EPSILON.sqrt() * scale;
    let tr = m[0][0] + m[1][1] + m[2][2];
    let gap_lo = e[1] - e[0];
    let gap_hi = e[2] - e[1];
    if gap_lo <= thr && gap_hi <= thr {
        let v = tr / 3.0;
        e = [v, v, v];
    } else if gap_lo <= thr {
        let v = (tr - e[2]) / 2.0;
        e[0] = v;
        e[1] = v;
    } else if gap_hi <= thr {
        let v = (tr - e[0]) / 2.0;
        e[1] = v;
        e[2] = v;
    }
    Ok(e)
}

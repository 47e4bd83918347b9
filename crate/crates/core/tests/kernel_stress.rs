//! Convergence and residual battery for the dense kernel, including the
//! classic QR-stall inputs (cyclic permutations), nilpotent blocks, zero
//! matrices, and badly graded entries.

use num_complex::Complex64;
use phason_stab::linalg::{eig, singular_values, ComplexMatrix};

fn lcg(state: &mut u64) -> f64 {
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
}

fn residual_ratio(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let d = eig(a).expect("eig converges");
    if n == 0 {
        return 0.0;
    }
    let na = singular_values(a)
        .unwrap()
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for j in 0..n {
        let v = d.eigenvectors.column(j);
        let av = a.mul_vec(&v);
        let r: f64 = av
            .iter()
            .zip(v.iter())
            .map(|(x, y)| (x - y * d.eigenvalues[j]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r / na);
    }
    worst
}

#[test]
fn random_battery() {
    let mut state = 1u64;
    let mut worst = 0.0f64;
    for n in 1..=12 {
        for _ in 0..25 {
            let a = ComplexMatrix::from_fn(n, n, |_, _| {
                Complex64::new(lcg(&mut state), lcg(&mut state))
            });
            worst = worst.max(residual_ratio(&a));
            let ar = ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(lcg(&mut state), 0.0));
            worst = worst.max(residual_ratio(&ar));
        }
    }
    assert!(worst <= 1e-10, "worst residual ratio {worst:e}");
}

#[test]
fn pathological_battery() {
    let mut state = 99u64;
    let mut worst = 0.0f64;
    for n in [2usize, 3, 5, 8, 11] {
        // cyclic permutation: eigenvalues are the n-th roots of unity
        let mut p = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            p[(i, (i + 1) % n)] = Complex64::ONE;
        }
        worst = worst.max(residual_ratio(&p));
        let d = eig(&p).unwrap();
        for z in &d.eigenvalues {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }

        // nilpotent single block
        let mut j = ComplexMatrix::zeros(n, n);
        for i in 0..n - 1 {
            j[(i, i + 1)] = Complex64::ONE;
        }
        worst = worst.max(residual_ratio(&j));

        // zero matrix
        worst = worst.max(residual_ratio(&ComplexMatrix::zeros(n, n)));

        // upper triangular: eigenvalues are the diagonal
        let mut t = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for k in i..n {
                t[(i, k)] = Complex64::new(lcg(&mut state), lcg(&mut state));
            }
        }
        worst = worst.max(residual_ratio(&t));

        // badly graded entries; balancing has to cope
        let mut s = ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(lcg(&mut state), 0.0));
        for i in 0..n {
            for k in 0..n {
                s[(i, k)] *= 10f64.powi((i as i32 - k as i32) * 3);
            }
        }
        worst = worst.max(residual_ratio(&s));
    }
    assert!(worst <= 1e-10, "worst residual ratio {worst:e}");
}

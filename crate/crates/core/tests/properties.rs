//! Invariant suites: kernel contracts, pseudospectrum identities, sampler
//! determinism, and propagator consistency.

use num_complex::Complex64;
use proptest::prelude::*;

use phason_stab::analysis::{spectrum_of, transient_check};
use phason_stab::linalg::{
    eig, expm_apply, norm2, singular_values, smin, ComplexMatrix, RealMatrix,
};
use phason_stab::model::{
    assemble_system, ConstitutiveParams, SelfActionMode, SystemBlocks, WaveConfig, GPA,
};
use phason_stab::normality::{dep_commutator, dep_henrici_f, distance_bounds};
use phason_stab::pseudospectra::{
    membership_matrix, resolvent_grid, structured_samples, GridSpec, SamplingMode,
};

fn lcg(state: &mut u64) -> f64 {
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
}

fn random_complex(n: usize, seed: u64) -> ComplexMatrix {
    let mut s = seed;
    ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(lcg(&mut s), lcg(&mut s)))
}

fn dissipative_system(chi_gpa: f64, phi: f64) -> phason_stab::model::SystemMatrix {
    let p = ConstitutiveParams::reference_material(chi_gpa * GPA, 0.0, 0.0, phi.exp());
    assemble_system(SelfActionMode::Dissipative, &p, &WaveConfig::default_e1()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eig_residual_bound(n in 2usize..7, seed in 0u64..1u64 << 48) {
        let a = random_complex(n, seed);
        let d = eig(&a).unwrap();
        let bound = 1e-10 * norm2(&a).unwrap().max(1e-30);
        for j in 0..n {
            let v = d.eigenvectors.column(j);
            let av = a.mul_vec(&v);
            let r: f64 = av
                .iter()
                .zip(v.iter())
                .map(|(x, y)| (x - y * d.eigenvalues[j]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            prop_assert!(r <= bound, "residual {} > {}", r, bound);
        }
    }

    #[test]
    fn smin_is_a_lower_bound_on_image_norms(n in 2usize..7, seed in 0u64..1u64 << 48) {
        let m = random_complex(n, seed);
        let s = smin(&m).unwrap();
        let mut st = seed ^ 0x5555;
        for _ in 0..4 {
            let mut x: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(lcg(&mut st), lcg(&mut st))).collect();
            let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-9);
            for xi in x.iter_mut() {
                *xi /= norm;
            }
            let mx: f64 = m.mul_vec(&x).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(s <= mx + 1e-12 * s.max(1.0));
        }
    }

    #[test]
    fn norm_orderings(n in 2usize..8, seed in 0u64..1u64 << 48) {
        let m = random_complex(n, seed);
        let sv = singular_values(&m).unwrap();
        let n2 = sv[0];
        let sm = *sv.last().unwrap();
        let nf = m.norm_fro();
        prop_assert!(n2 >= sm - 1e-14);
        prop_assert!(nf >= n2 - 1e-12 * nf.max(1.0));
        prop_assert!(n2 >= nf / (n as f64).sqrt() - 1e-12 * nf.max(1.0));
    }

    #[test]
    fn departure_measures_invariances(seed in 0u64..1u64 << 48) {
        let n = 5;
        let a = random_complex(n, seed);
        let c = Complex64::new(3.7, -1.2);
        let d1 = dep_commutator(&a).unwrap();
        let d2 = dep_commutator(&a.scale(c)).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-10 * d1.max(1e-10));

        // Householder reflector as the unitary similarity
        let mut st = seed ^ 0xAAAA;
        let mut w: Vec<Complex64> =
            (0..n).map(|_| Complex64::new(lcg(&mut st), lcg(&mut st))).collect();
        let wn: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(wn > 1e-6);
        for x in w.iter_mut() {
            *x /= wn;
        }
        let u = {
            let mut u = ComplexMatrix::identity(n);
            for i in 0..n {
                for j in 0..n {
                    u[(i, j)] -= 2.0 * w[i] * w[j].conj();
                }
            }
            u
        };
        let b = u.conj_transpose().matmul(&a).matmul(&u);
        let dc_a = dep_commutator(&a).unwrap();
        let dc_b = dep_commutator(&b).unwrap();
        prop_assert!((dc_a - dc_b).abs() <= 1e-8 * dc_a.max(1e-8));
        let dh_a = dep_henrici_f(&a).unwrap();
        let dh_b = dep_henrici_f(&b).unwrap();
        prop_assert!((dh_a - dh_b).abs() <= 1e-8 * dh_a.max(1e-8));
        let (lo, hi) = distance_bounds(&a).unwrap();
        prop_assert!(lo <= hi + 1e-15 && lo >= 0.0);
    }
}

#[test]
fn henrici_zero_iff_commutator_zero() {
    // normal and non-normal representatives
    let mut state = 5u64;
    for case in 0..20 {
        let n = 4;
        let a = if case % 2 == 0 {
            // normal: unitary diag similarity of diagonal
            let d = random_complex(n, state);
            let mut m = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = d[(i, i)];
            }
            m
        } else {
            let mut m = random_complex(n, state);
            m[(0, n - 1)] += Complex64::new(2.0, 0.0);
            m
        };
        state = state.wrapping_add(17);
        let dh = dep_henrici_f(&a).unwrap();
        let ah = a.conj_transpose();
        let comm_f = a.matmul(&ah).sub(&ah.matmul(&a)).norm_fro();
        let fro2 = a.norm_fro().powi(2);
        let dh_zero = dh <= 1e-6 * a.norm_fro();
        let comm_zero = comm_f <= 1e-10 * fro2;
        assert_eq!(dh_zero, comm_zero, "dh = {dh:e}, comm = {comm_f:e}");
    }
}

#[test]
fn pseudospectra_identities_on_100_random_matrices() {
    let mut state = 0xFEEDu64;
    for trial in 0..100 {
        let n = 2 + (trial % 5);
        let a = random_complex(n, state);
        state = state.wrapping_add(101);
        let z = Complex64::new(lcg(&mut state) * 2.0, lcg(&mut state) * 2.0);

        // nesting: membership at eps1 implies membership at eps2 > eps1
        let s = smin(&ComplexMatrix::shifted_from(&a, z)).unwrap();
        let eps1 = (s * 0.9).max(1e-12);
        let eps2 = s * 1.1 + 1e-12;
        let m1 = membership_matrix(&a, z, eps1).unwrap();
        let m2 = membership_matrix(&a, z, eps2).unwrap();
        assert!(!m1 || m2, "nesting violated");

        // shift: smin((z+h)I - (A+hI)) == smin(zI - A)
        let h = Complex64::new(lcg(&mut state), lcg(&mut state));
        let mut ah = a.clone();
        for i in 0..n {
            ah[(i, i)] += h;
        }
        let s_shift = smin(&ComplexMatrix::shifted_from(&ah, z + h)).unwrap();
        assert!(
            (s - s_shift).abs() <= 1e-10 * s.max(1.0),
            "shift identity: {s} vs {s_shift}"
        );

        // scaling: sigma_{|h| eps}(hA) = h sigma_eps(A)
        let hs = Complex64::new(1.5, -0.5);
        let sa = a.scale(hs);
        let s_scaled = smin(&ComplexMatrix::shifted_from(&sa, hs * z)).unwrap();
        assert!(
            (s_scaled - hs.norm() * s).abs() <= 1e-10 * (hs.norm() * s).max(1.0),
            "scaling identity"
        );

        // conjugate symmetry: sigma_eps(A*) is the conjugate set
        let s_conj = smin(&ComplexMatrix::shifted_from(&a.conj_transpose(), z.conj())).unwrap();
        assert!(
            (s - s_conj).abs() <= 1e-10 * s.max(1.0),
            "conjugation identity"
        );
    }
}

#[test]
fn direct_sum_union_rule() {
    let mut state = 0xD00Du64;
    for _ in 0..20 {
        let a1 = random_complex(3, state);
        state = state.wrapping_add(1);
        let a2 = random_complex(4, state);
        state = state.wrapping_add(1);
        let mut big = ComplexMatrix::zeros(7, 7);
        for i in 0..3 {
            for j in 0..3 {
                big[(i, j)] = a1[(i, j)];
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                big[(3 + i, 3 + j)] = a2[(i, j)];
            }
        }
        let z = Complex64::new(lcg(&mut state), lcg(&mut state));
        let s_big = smin(&ComplexMatrix::shifted_from(&big, z)).unwrap();
        let s1 = smin(&ComplexMatrix::shifted_from(&a1, z)).unwrap();
        let s2 = smin(&ComplexMatrix::shifted_from(&a2, z)).unwrap();
        let expect = s1.min(s2);
        assert!(
            (s_big - expect).abs() <= 1e-10 * expect.max(1.0),
            "{s_big} vs min({s1}, {s2})"
        );
    }
}

#[test]
fn def1_def2_consistency_on_1000_perturbations() {
    // every eigenvalue of A+E with ||E||_2 < eps lies in the complex
    // eps-pseudospectrum (Def. 2 => Def. 1)
    let sys = dissipative_system(0.3, 19.0);
    let a = sys.matrix.to_complex();
    let eps = 1e-3 * norm2(&a).unwrap();

    // 500 structured samples
    let cloud = structured_samples(&sys, eps, 56, 11, SamplingMode::Ball).unwrap();
    let mut checked = 0;
    for z in &cloud.eigenvalues {
        assert!(
            membership_matrix(&a, *z, eps).unwrap(),
            "structured perturbation escaped sigma_eps at {z}"
        );
        checked += 1;
    }
    // unstructured dense perturbations
    let mut state = 31u64;
    'outer: for _ in 0..56 {
        let mut e = RealMatrix::zeros(9, 9);
        for i in 0..9 {
            for j in 0..9 {
                e[(i, j)] = lcg(&mut state);
            }
        }
        let scale = 0.95 * eps / norm2(&e.to_complex()).unwrap();
        let perturbed = sys.matrix.add(&e.scale(scale));
        let eigs = phason_stab::linalg::eigenvalues_real(&perturbed).unwrap();
        for z in eigs {
            assert!(
                membership_matrix(&a, z, eps).unwrap(),
                "dense perturbation escaped sigma_eps at {z}"
            );
            checked += 1;
            if checked >= 1008 {
                break 'outer;
            }
        }
    }
    assert!(
        checked >= 1000,
        "only {checked} perturbation eigenvalues checked"
    );
}

#[test]
fn cloud_bit_identical_across_worker_counts() {
    let sys = dissipative_system(0.4, 19.0);
    let eps = 1e-4 * phason_stab::linalg::norm2_real(&sys.matrix).unwrap();
    let pool1 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let c1 = pool1.install(|| structured_samples(&sys, eps, 40, 123, SamplingMode::Ball).unwrap());
    let c4 = pool4.install(|| structured_samples(&sys, eps, 40, 123, SamplingMode::Ball).unwrap());
    assert_eq!(c1.eigenvalues, c4.eigenvalues);
    assert_eq!(c1.e_norms, c4.e_norms);
    assert_eq!(c1.max_real_part, c4.max_real_part);
}

#[test]
fn sublevel_components_never_exceed_dimension() {
    // 4-connected labeling of the grid sublevel set; property 1 caps the
    // component count at n
    let sys = dissipative_system(0.1, 19.0);
    let spec = GridSpec::default_for(&sys, 80, 80).unwrap();
    let grid = resolvent_grid(&sys, &spec).unwrap();
    for j in 1..=4 {
        let eps = 10f64.powf(-0.75 * j as f64);
        let t = eps.log10();
        let inside: Vec<bool> = grid.values.iter().map(|v| *v < t).collect();
        let (nx, ny) = (spec.nx, spec.ny);
        let mut label = vec![0usize; nx * ny];
        let mut next = 0usize;
        let mut stack = Vec::new();
        for start in 0..nx * ny {
            if !inside[start] || label[start] != 0 {
                continue;
            }
            next += 1;
            stack.push(start);
            label[start] = next;
            while let Some(idx) = stack.pop() {
                let (ix, iy) = (idx % nx, idx / nx);
                let mut push = |jx: isize, jy: isize| {
                    if jx >= 0 && jy >= 0 && (jx as usize) < nx && (jy as usize) < ny {
                        let nidx = jy as usize * nx + jx as usize;
                        if inside[nidx] && label[nidx] == 0 {
                            label[nidx] = next;
                            stack.push(nidx);
                        }
                    }
                };
                push(ix as isize - 1, iy as isize);
                push(ix as isize + 1, iy as isize);
                push(ix as isize, iy as isize - 1);
                push(ix as isize, iy as isize + 1);
            }
        }
        assert!(
            next <= 9,
            "eps = 1e{:.2}: {next} components > matrix dimension",
            eps.log10()
        );
    }
}

#[test]
fn propagator_two_step_composition() {
    let mut state = 0xC0FFEEu64;
    for n in [2usize, 4, 6] {
        let mut a = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = lcg(&mut state) * 3.0;
            }
        }
        let q0: Vec<f64> = (0..n).map(|_| lcg(&mut state)).collect();
        let (t1, t2) = (0.37, 1.21);
        let one_shot = expm_apply(&a, t1 + t2, &q0).unwrap();
        let two_step = expm_apply(&a, t2, &expm_apply(&a, t1, &q0).unwrap()).unwrap();
        let scale: f64 = one_shot.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: f64 = one_shot
            .iter()
            .zip(two_step.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(
            diff <= 1e-7 * scale.max(1e-10),
            "composition error {diff:e}"
        );
    }
}

#[test]
fn stable_envelope_bounded_and_unstable_envelope_grows() {
    // marginal 6x6 case: propagator norm stays bounded over the window
    let p = ConstitutiveParams::reference_material(0.05 * GPA, 0.0, 0.0, 0.178 * GPA);
    let sys = assemble_system(SelfActionMode::NoSelfAction, &p, &WaveConfig::default_e1()).unwrap();
    let q0 = vec![1.0, 0.5, -0.25, 0.0, 0.0, 0.0];
    let t_grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.01 / 40.0).collect();
    let env = transient_check(&sys, &q0, &t_grid).unwrap();
    // purely imaginary spectrum: oscillation, bounded amplification
    assert!(env.max_amplification < 1e4, "{}", env.max_amplification);

    // dissipative chi = 1.7: abscissa +0.0026, envelope must eventually
    // exceed 2 along the unstable direction
    let p = ConstitutiveParams::reference_material(1.7 * GPA, 0.0, 0.0, 19f64.exp());
    let sys = assemble_system(SelfActionMode::Dissipative, &p, &WaveConfig::default_e1()).unwrap();
    let s = spectrum_of(&sys).unwrap();
    assert!(s.spectral_abscissa > 0.001);
    let dec = phason_stab::linalg::eig_real(&sys.matrix).unwrap();
    let jmax = (0..9)
        .max_by(|&i, &j| dec.eigenvalues[i].re.total_cmp(&dec.eigenvalues[j].re))
        .unwrap();
    let q0: Vec<f64> = dec.eigenvectors.column(jmax).iter().map(|z| z.re).collect();
    let env = transient_check(&sys, &q0, &[0.0, 1500.0, 3000.0]).unwrap();
    assert!(
        env.max_amplification > 2.0,
        "expected growth along the unstable mode, got {}",
        env.max_amplification
    );
}

#[test]
fn six_by_six_pm_sqrt_route_is_consistent() {
    for chi in [0.05f64, 0.9, 1.6912, 1.7] {
        let p = ConstitutiveParams::reference_material(chi * GPA, 0.0, 0.0, 0.178 * GPA);
        let sys =
            assemble_system(SelfActionMode::NoSelfAction, &p, &WaveConfig::default_e1()).unwrap();
        let SystemBlocks::SecondOrder { .. } = sys.blocks else {
            panic!()
        };
        let fast = spectrum_of(&sys).unwrap();
        let dense = phason_stab::linalg::eigenvalues_real(&sys.matrix).unwrap();
        let scale = dense.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        for (a, b) in fast.eigenvalues.iter().zip(dense.iter()) {
            assert!((a - b).norm() <= 1e-8 * scale);
        }
        // every eigenvalue real or purely imaginary
        for z in &fast.eigenvalues {
            assert!(z.re.abs() <= 1e-8 * scale || z.im.abs() <= 1e-8 * scale);
        }
    }
}

#[test]
fn envelope_bounded_by_eigvec_conditioning() {
    // diagonalization bound ||exp(tA)|| <= kappa2(V) e^(t abscissa): for the
    // marginal 6x6 case the envelope never exceeds kappa2(V)
    use phason_stab::normality::{kappa2_eigvec, Kappa2};
    let p = ConstitutiveParams::reference_material(0.05 * GPA, 0.0, 0.0, 0.178 * GPA);
    let sys = assemble_system(SelfActionMode::NoSelfAction, &p, &WaveConfig::default_e1()).unwrap();
    let Kappa2::Value(k2) = kappa2_eigvec(&sys.matrix.to_complex()).unwrap() else {
        panic!("marginal case should be diagonalizable");
    };
    let q0 = vec![1.0, -0.3, 0.2, 0.0, 0.0, 0.0];
    let t_grid: Vec<f64> = (0..=50).map(|i| i as f64 * 2e-4).collect();
    let env = transient_check(&sys, &q0, &t_grid).unwrap();
    assert!(
        env.max_amplification <= k2 * 1.001,
        "envelope {} exceeds kappa2(V) = {}",
        env.max_amplification,
        k2
    );
}

#[test]
fn normality_measures_stay_constant_across_chi() {
    use phason_stab::normality::{report_real, Kappa2};
    let mut ref_vals: Option<(f64, f64)> = None;
    for chi in [0.05, 0.5, 1.0, 1.5] {
        let sys = dissipative_system(chi, 19.0);
        let nr = report_real(&sys.matrix).unwrap();
        let k2 = match nr.kappa2_v {
            Kappa2::Value(v) => v,
            Kappa2::Defective => panic!("unexpected defective report"),
        };
        match ref_vals {
            None => ref_vals = Some((nr.dep_hf, k2)),
            Some((dh0, k20)) => {
                assert!(
                    (nr.dep_hf - dh0).abs() <= 0.01 * dh0,
                    "dep_hf drifted at chi = {chi}: {} vs {}",
                    nr.dep_hf,
                    dh0
                );
                assert!(
                    (k2 - k20).abs() <= 0.01 * k20,
                    "kappa2 drifted at chi = {chi}: {k2} vs {k20}"
                );
            }
        }
    }
}

#[test]
fn unstable_fraction_nonincreasing_as_chi_decreases() {
    use phason_stab::pseudospectra::{calibrate_epsilon, TargetParam};
    let w = WaveConfig::default_e1();
    let mut prev = f64::INFINITY;
    // scanned downward: fraction must not increase
    for chi in [1.1, 0.9, 0.7, 0.5, 0.3] {
        let p = ConstitutiveParams::reference_material(chi * GPA, 0.0, 0.0, 19f64.exp());
        let sys = assemble_system(SelfActionMode::Dissipative, &p, &w).unwrap();
        let eps =
            calibrate_epsilon(&p, &w, SelfActionMode::Dissipative, TargetParam::Chi, 0.05).unwrap();
        let cloud = structured_samples(&sys, eps, 400, 1, SamplingMode::Boundary).unwrap();
        assert!(
            cloud.unstable_fraction <= prev + 1e-12,
            "fraction increased at chi = {chi}: {} > {prev}",
            cloud.unstable_fraction
        );
        prev = cloud.unstable_fraction;
    }
}

#[test]
fn membership_trivia() {
    let sys = dissipative_system(0.2, 19.0);
    let a = sys.matrix.to_complex();
    let eigs = phason_stab::linalg::eigenvalues_real(&sys.matrix).unwrap();
    // an eigenvalue is inside sigma_eps for every positive eps: the
    // resolvent is numerically singular there and smin snaps to zero
    for eps in [1e-300, 1e-15, 1e-8, 1e-3, 1.0] {
        assert!(membership_matrix(&a, eigs[0], eps).unwrap());
    }
    // outside the norm bound disk: |z| > ||A|| + eps cannot be inside
    let na = phason_stab::linalg::norm2_real(&sys.matrix).unwrap();
    let eps = 1.0;
    let z = Complex64::new(na + eps + 1.0, 0.0);
    assert!(!membership_matrix(&a, z, eps).unwrap());
}

#[test]
fn assembled_spectrum_rotation_invariant() {
    let p = ConstitutiveParams::reference_material(0.4 * GPA, 0.1 * GPA, 0.0, 19f64.exp());
    let mut reference: Option<Vec<Complex64>> = None;
    for n in [
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.6, 0.8, 0.0],
        [1.0 / 3f64.sqrt(); 3],
    ] {
        let w = WaveConfig::new(1.0, n).unwrap();
        let sys = assemble_system(SelfActionMode::Dissipative, &p, &w).unwrap();
        let s = spectrum_of(&sys).unwrap();
        match &reference {
            None => reference = Some(s.eigenvalues),
            Some(r) => {
                // multiset comparison by greedy nearest matching: tiny
                // real-part perturbations may flip the sort order of
                // conjugate pairs
                let scale = r.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
                let mut used = vec![false; r.len()];
                for a in &s.eigenvalues {
                    let (best, dist) = r
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !used[*i])
                        .map(|(i, b)| (i, (a - b).norm()))
                        .min_by(|x, y| x.1.total_cmp(&y.1))
                        .unwrap();
                    assert!(
                        dist <= 1e-9 * scale,
                        "direction {n:?}: {a} strayed by {dist}"
                    );
                    used[best] = true;
                }
            }
        }
    }
}

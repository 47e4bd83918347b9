//! Complex epsilon-pseudospectra on a resolvent-norm grid, structured
//! pseudospectra by block-masked random perturbation sampling, and epsilon
//! calibration from material-parameter uncertainty.
//!
//! Grid nodes and Monte-Carlo samples are independent work items. Sampling
//! is deterministic for a fixed seed under any degree of parallelism: each
//! sample draws from its own counter-derived stream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues_real, norm2_real, smin, svd_with_right, ComplexMatrix, Mat3, RealMatrix,
};
use crate::model::{
    assemble_system, derive_coefficients, ConstitutiveParams, SelfActionMode, SystemMatrix,
    WaveConfig,
};

/// Rectangular complex-plane window with node counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        let s = Self {
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.re_min < self.re_max) || !(self.im_min < self.im_max) {
            return Err(Error::InvalidConfig(format!(
                "grid window must satisfy re_min < re_max and im_min < im_max, got [{}, {}] x [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidConfig(
                "grid needs at least 2 nodes per axis".into(),
            ));
        }
        Ok(())
    }

    /// Bounding box of the spectrum inflated 20% per side plus the absolute
    /// margin max(1, 0.05 sqrt(||A||_2)); the published figures do not pin
    /// plotting windows.
    pub fn default_for(sys: &SystemMatrix, nx: usize, ny: usize) -> Result<Self> {
        let eigs = eigenvalues_real(&sys.matrix)?;
        let a_norm = norm2_real(&sys.matrix)?;
        let margin = 1.0f64.max(0.05 * a_norm.sqrt());
        let (mut re_lo, mut re_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut im_lo, mut im_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for z in &eigs {
            re_lo = re_lo.min(z.re);
            re_hi = re_hi.max(z.re);
            im_lo = im_lo.min(z.im);
            im_hi = im_hi.max(z.im);
        }
        let re_pad = 0.2 * (re_hi - re_lo);
        let im_pad = 0.2 * (im_hi - im_lo);
        Self::new(
            re_lo - re_pad - margin,
            re_hi + re_pad + margin,
            im_lo - im_pad - margin,
            im_hi + im_pad + margin,
            nx,
            ny,
        )
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.re_min + (self.re_max - self.re_min) * ix as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.im_min + (self.im_max - self.im_min) * iy as f64 / (self.ny - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        (self.re_max - self.re_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_max - self.im_min) / (self.ny - 1) as f64
    }
}

/// log10 of the smallest singular value of (zI - A) on a grid; membership
/// in sigma_eps is value < log10(eps) (strict).
#[derive(Debug, Clone)]
pub struct PseudospectrumGrid {
    pub spec: GridSpec,
    /// Row-major: values[iy * nx + ix]; -inf marks an exactly singular node.
    pub values: Vec<f64>,
    pub matrix_hash: u64,
}

impl PseudospectrumGrid {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.nx + ix]
    }

    pub fn min_value_where(&self, mut pred: impl FnMut(f64, f64) -> bool) -> Option<f64> {
        let mut best: Option<f64> = None;
        for iy in 0..self.spec.ny {
            for ix in 0..self.spec.nx {
                if pred(self.spec.x(ix), self.spec.y(iy)) {
                    let v = self.value(ix, iy);
                    best = Some(match best {
                        None => v,
                        Some(b) => b.min(v),
                    });
                }
            }
        }
        best
    }
}

fn log10_smin(a: &ComplexMatrix, z: Complex64) -> Result<f64> {
    let m = ComplexMatrix::shifted_from(a, z);
    let s = smin(&m)?;
    Ok(if s == 0.0 {
        f64::NEG_INFINITY
    } else {
        s.log10()
    })
}

/// Resolvent-norm grid of an assembled system.
pub fn resolvent_grid(sys: &SystemMatrix, spec: &GridSpec) -> Result<PseudospectrumGrid> {
    resolvent_grid_matrix(&sys.matrix.to_complex(), spec, sys.content_hash())
}

/// Resolvent-norm grid of an arbitrary square matrix. For a real matrix
/// the conjugate symmetry is exploited: only rows with non-negative
/// ordinate are computed, mirror rows are copied when the window is
/// symmetric.
pub fn resolvent_grid_matrix(
    a: &ComplexMatrix,
    spec: &GridSpec,
    matrix_hash: u64,
) -> Result<PseudospectrumGrid> {
    spec.validate()?;
    a.require_square()?;
    let nx = spec.nx;
    let ny = spec.ny;
    let is_real = (0..a.rows()).all(|i| (0..a.cols()).all(|j| a[(i, j)].im == 0.0));

    // pair rows with mirror-image ordinates (exact float matches)
    let ys: Vec<f64> = (0..ny).map(|iy| spec.y(iy)).collect();
    let mut mirror: Vec<Option<usize>> = vec![None; ny];
    if is_real {
        for iy in 0..ny {
            if ys[iy] < 0.0 {
                if let Some(src) = ys.iter().position(|&v| v == -ys[iy]) {
                    mirror[iy] = Some(src);
                }
            }
        }
    }

    let compute_rows: Vec<usize> = (0..ny).filter(|&iy| mirror[iy].is_none()).collect();
    let computed: Result<Vec<(usize, Vec<f64>)>> = compute_rows
        .par_iter()
        .map(|&iy| {
            let mut row = vec![0.0f64; nx];
            for (ix, slot) in row.iter_mut().enumerate() {
                *slot = log10_smin(a, Complex64::new(spec.x(ix), ys[iy]))?;
            }
            Ok((iy, row))
        })
        .collect();
    let computed = computed?;

    let mut values = vec![f64::NAN; nx * ny];
    for (iy, row) in &computed {
        values[iy * nx..(iy + 1) * nx].copy_from_slice(row);
    }
    for iy in 0..ny {
        if let Some(src) = mirror[iy] {
            let (sa, sb) = (src * nx, iy * nx);
            for ix in 0..nx {
                values[sb + ix] = values[sa + ix];
            }
        }
    }

    Ok(PseudospectrumGrid {
        spec: *spec,
        values,
        matrix_hash,
    })
}

/// z in sigma_eps(A) iff smin(zI - A) < eps.
pub fn membership(sys: &SystemMatrix, z: Complex64, epsilon: f64) -> Result<bool> {
    membership_matrix(&sys.matrix.to_complex(), z, epsilon)
}

pub fn membership_matrix(a: &ComplexMatrix, z: Complex64, epsilon: f64) -> Result<bool> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    Ok(smin(&ComplexMatrix::shifted_from(a, z))? < epsilon)
}

/// Membership plus the near-null right singular vector that witnesses it.
pub fn membership_with_witness(
    sys: &SystemMatrix,
    z: Complex64,
    epsilon: f64,
) -> Result<(bool, Vec<Complex64>)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    let m = ComplexMatrix::shifted_from(&sys.matrix.to_complex(), z);
    let svd = svd_with_right(&m)?;
    let n = svd.values.len();
    let witness = svd
        .right_vectors
        .expect("right vectors requested")
        .column(n - 1);
    Ok((svd.values[n - 1] < epsilon, witness))
}

/// Pseudospectral abscissa estimate from a grid sublevel set.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PseudoAbscissa {
    pub value: f64,
    /// Set when the sublevel set was empty at grid resolution and the
    /// spectral abscissa was returned instead.
    pub coarse_grid_warning: bool,
}

/// Max real part over grid nodes inside sigma_eps, refined by bisection
/// along the real direction toward the boundary smin = eps.
pub fn pseudo_abscissa(
    sys: &SystemMatrix,
    epsilon: f64,
    spec: &GridSpec,
    refine_iters: usize,
) -> Result<PseudoAbscissa> {
    pseudo_abscissa_matrix(&sys.matrix.to_complex(), epsilon, spec, refine_iters)
}

/// Matrix-level variant of [`pseudo_abscissa`].
pub fn pseudo_abscissa_matrix(
    a: &ComplexMatrix,
    epsilon: f64,
    spec: &GridSpec,
    refine_iters: usize,
) -> Result<PseudoAbscissa> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    let grid = resolvent_grid_matrix(a, spec, 0)?;
    pseudo_abscissa_on_grid(a, &grid, epsilon, refine_iters)
}

/// Same as [`pseudo_abscissa`] but reusing an existing grid.
pub fn pseudo_abscissa_on_grid(
    a: &ComplexMatrix,
    grid: &PseudospectrumGrid,
    epsilon: f64,
    refine_iters: usize,
) -> Result<PseudoAbscissa> {
    let spec = &grid.spec;
    let threshold = epsilon.log10();
    let mut best: Option<(usize, usize)> = None;
    for iy in 0..spec.ny {
        for ix in 0..spec.nx {
            if grid.value(ix, iy) < threshold {
                best = match best {
                    None => Some((ix, iy)),
                    Some((bx, by)) => {
                        if ix > bx {
                            Some((ix, iy))
                        } else {
                            Some((bx, by))
                        }
                    }
                };
            }
        }
    }

    let Some((ix, iy)) = best else {
        let eigs = crate::linalg::eigenvalues(a)?;
        let abscissa = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        return Ok(PseudoAbscissa {
            value: abscissa,
            coarse_grid_warning: true,
        });
    };

    let y = spec.y(iy);
    let dx = spec.dx();
    let mut lo = spec.x(ix);
    let mut hi = lo + dx;
    let g = |x: f64| -> Result<f64> {
        Ok(smin(&ComplexMatrix::shifted_from(a, Complex64::new(x, y)))? - epsilon)
    };
    // expand until the boundary is bracketed (bounded walk)
    let mut steps = 0;
    while g(hi)? < 0.0 && steps < 64 {
        lo = hi;
        hi += dx;
        steps += 1;
    }
    if g(hi)? < 0.0 {
        // sublevel set runs past the walked range; report the last inside point
        return Ok(PseudoAbscissa {
            value: hi,
            coarse_grid_warning: true,
        });
    }
    for _ in 0..refine_iters {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PseudoAbscissa {
        value: 0.5 * (lo + hi),
        coarse_grid_warning: false,
    })
}

/// Material parameter whose uncertainty sets the perturbation budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetParam {
    Chi,
    Alpha,
    Lambda,
    Mu,
    Zeta,
    Gamma,
    K0,
}

impl TargetParam {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chi" => Ok(Self::Chi),
            "alpha" => Ok(Self::Alpha),
            "lambda" => Ok(Self::Lambda),
            "mu" => Ok(Self::Mu),
            "zeta" => Ok(Self::Zeta),
            "gamma" => Ok(Self::Gamma),
            "k0" => Ok(Self::K0),
            other => Err(Error::UnknownParameter(other.to_string())),
        }
    }
}

/// Rebuild params with one derived-form parameter scaled by (1 + rel).
fn perturb_param(p: &ConstitutiveParams, target: TargetParam, rel: f64) -> ConstitutiveParams {
    let d = derive_coefficients(p);
    let (mut lambda, mut mu, mut k0) = (p.lambda, p.mu, p.k0);
    let (mut chi, mut alpha, mut zeta, mut gamma) = (d.chi, d.alpha, d.zeta, d.gamma);
    match target {
        TargetParam::Chi => chi *= 1.0 + rel,
        TargetParam::Alpha => alpha *= 1.0 + rel,
        TargetParam::Lambda => lambda *= 1.0 + rel,
        TargetParam::Mu => mu *= 1.0 + rel,
        TargetParam::Zeta => zeta *= 1.0 + rel,
        TargetParam::Gamma => gamma *= 1.0 + rel,
        TargetParam::K0 => k0 *= 1.0 + rel,
    }
    ConstitutiveParams::from_derived(lambda, mu, chi, alpha, zeta, gamma, k0, p.varsigma, p.rho)
}

/// epsilon = ||A(p with target*(1+rel)) - A(p)||_2. For parameters entering
/// A linearly the two signed branches coincide; the + branch is used.
pub fn calibrate_epsilon(
    p: &ConstitutiveParams,
    w: &WaveConfig,
    mode: SelfActionMode,
    target: TargetParam,
    rel: f64,
) -> Result<f64> {
    if rel < 0.0 || !rel.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "relative perturbation must be non-negative and finite, got {rel}"
        )));
    }
    if rel == 0.0 {
        return Ok(0.0);
    }
    let base = assemble_system(mode, p, w)?;
    let pert = assemble_system(mode, &perturb_param(p, target, rel), w)?;
    norm2_real(&pert.matrix.sub(&base.matrix))
}

/// Block masks for the structured perturbation of the 9x9 layout: E1, the
/// shared E2 (twice), and E3 land on the non-trivial blocks with the same
/// 1/rho and 1/varsigma scalings as the matrix itself; the zero and
/// identity blocks are never perturbed.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationStructure {
    pub rho: f64,
    pub varsigma: f64,
}

impl PerturbationStructure {
    pub fn of(sys: &SystemMatrix) -> Result<Self> {
        if sys.dim() != 9 {
            return Err(Error::InvalidConfig(
                "structured perturbations are defined for the 9x9 regimes".into(),
            ));
        }
        Ok(Self {
            rho: sys.params.rho,
            varsigma: sys.params.varsigma,
        })
    }

    /// [[0,0,0],[E1/rho, 0, E2/rho],[E2/varsigma, 0, E3/varsigma]]
    pub fn assemble(&self, e1: &Mat3, e2: &Mat3, e3: &Mat3) -> RealMatrix {
        let mut m = RealMatrix::zeros(9, 9);
        let mut put = |r0: usize, c0: usize, b: &Mat3, s: f64| {
            for i in 0..3 {
                for j in 0..3 {
                    m[(r0 + i, c0 + j)] = b[i][j] * s;
                }
            }
        };
        put(3, 0, e1, 1.0 / self.rho);
        put(3, 6, e2, 1.0 / self.rho);
        put(6, 0, e2, 1.0 / self.varsigma);
        put(6, 6, e3, 1.0 / self.varsigma);
        m
    }
}

/// How sample magnitudes are chosen within the structured family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// ||E||_2 = r eps with r uniform on (0,1]: samples the open ball.
    Ball,
    /// ||E||_2 = 0.999 eps: worst-case hunting near the sphere.
    Boundary,
}

impl SamplingMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ball" => Ok(Self::Ball),
            "boundary" => Ok(Self::Boundary),
            other => Err(Error::InvalidConfig(format!(
                "unknown sampling mode `{other}` (expected ball|boundary)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SamplingMode::Ball => "ball",
            SamplingMode::Boundary => "boundary",
        }
    }
}

/// Eigenvalues of randomly perturbed matrices A+E with the structured
/// block pattern, plus the audit trail (seed, per-sample norms).
#[derive(Debug, Clone)]
pub struct StructuredCloud {
    pub epsilon: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub mode: SamplingMode,
    /// Sample-major: eigenvalues[s * n .. (s+1) * n] belong to sample s.
    pub eigenvalues: Vec<Complex64>,
    pub matrix_dim: usize,
    /// ||E||_2 actually used per sample; re-checkable against epsilon.
    pub e_norms: Vec<f64>,
    pub max_real_part: f64,
    pub unstable_fraction: f64,
}

fn draw_sym3(rng: &mut ChaCha12Rng) -> Mat3 {
    let mut g = [[0.0f64; 3]; 3];
    for row in g.iter_mut() {
        for x in row.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
    }
    let mut s = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 0.5 * (g[i][j] + g[j][i]);
        }
    }
    s
}

/// Spectra of `n_samples` structured random perturbations of A.
///
/// Per sample: three independent symmetric Gaussian blocks, assembled with
/// the physical scalings, globally rescaled to the requested magnitude
/// rule. Deterministic for a fixed seed regardless of worker count (the
/// sample index selects the ChaCha stream).
pub fn structured_samples(
    sys: &SystemMatrix,
    epsilon: f64,
    n_samples: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<StructuredCloud> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
    }
    let structure = PerturbationStructure::of(sys)?;
    let n = sys.dim();

    let samples: Result<Vec<(Vec<Complex64>, f64)>> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(s as u64 + 1);
            let e1 = draw_sym3(&mut rng);
            let e2 = draw_sym3(&mut rng);
            let e3 = draw_sym3(&mut rng);
            let r = match mode {
                SamplingMode::Ball => 1.0 - rng.random::<f64>(), // (0, 1]
                SamplingMode::Boundary => 0.999,
            };
            let mut e = structure.assemble(&e1, &e2, &e3);
            let norm = norm2_real(&e)?;
            // strictly inside the ball even at r = 1
            let target = r * epsilon * (1.0 - 4.0 * f64::EPSILON);
            if norm > 0.0 {
                e = e.scale(target / norm);
            }
            let eigs = eigenvalues_real(&sys.matrix.add(&e))?;
            Ok((eigs, target))
        })
        .collect();
    let samples = samples?;

    let mut eigenvalues = Vec::with_capacity(n_samples * n);
    let mut e_norms = Vec::with_capacity(n_samples);
    let mut max_real_part = f64::NEG_INFINITY;
    let mut unstable = 0usize;
    for (eigs, enorm) in samples {
        let sample_max = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if sample_max > 0.0 {
            unstable += 1;
        }
        max_real_part = max_real_part.max(sample_max);
        eigenvalues.extend_from_slice(&eigs);
        e_norms.push(enorm);
    }

    Ok(StructuredCloud {
        epsilon,
        n_samples,
        seed,
        mode,
        eigenvalues,
        matrix_dim: n,
        e_norms,
        max_real_part,
        unstable_fraction: unstable as f64 / n_samples as f64,
    })
}

/// Contour levels mirroring the published color bars: eps = 10^(-0.75 j).
pub fn default_levels(count: usize) -> Vec<f64> {
    (1..=count).map(|j| 10f64.powf(-0.75 * j as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GPA;

    fn dissipative_system(chi_gpa: f64, phi: f64) -> SystemMatrix {
        let p = ConstitutiveParams::reference_material(chi_gpa * GPA, 0.0, 0.0, phi.exp());
        assemble_system(SelfActionMode::Dissipative, &p, &WaveConfig::default_e1()).unwrap()
    }

    #[test]
    fn eigenvalue_node_is_deep() {
        let sys = dissipative_system(0.1, 19.0);
        let a = sys.matrix.to_complex();
        let eigs = eigenvalues_real(&sys.matrix).unwrap();
        let z = eigs[0];
        let v = log10_smin(&a, z).unwrap();
        let bound = -9.0 + norm2_real(&sys.matrix).unwrap().log10();
        assert!(
            v == f64::NEG_INFINITY || v <= bound,
            "v = {v}, bound = {bound}"
        );
    }

    #[test]
    fn calibrate_epsilon_chi_5pct() {
        let p = ConstitutiveParams::reference_material(0.4 * GPA, 0.0, 0.0, 19.0f64.exp());
        let w = WaveConfig::default_e1();
        let eps =
            calibrate_epsilon(&p, &w, SelfActionMode::Dissipative, TargetParam::Chi, 0.05).unwrap();
        let expect = 0.05 * 0.4 * GPA / 5100.0;
        assert!((eps - expect).abs() < 1e-6 * expect, "eps = {eps}");
    }

    #[test]
    fn calibrate_epsilon_linear_in_rel() {
        let p = ConstitutiveParams::reference_material(0.4 * GPA, 0.0, 0.0, 19.0f64.exp());
        let w = WaveConfig::default_e1();
        let e1 =
            calibrate_epsilon(&p, &w, SelfActionMode::Dissipative, TargetParam::Chi, 0.05).unwrap();
        let e2 =
            calibrate_epsilon(&p, &w, SelfActionMode::Dissipative, TargetParam::Chi, 0.10).unwrap();
        assert!((e2 - 2.0 * e1).abs() < 1e-9 * e2);
        let e0 =
            calibrate_epsilon(&p, &w, SelfActionMode::Dissipative, TargetParam::Chi, 0.0).unwrap();
        assert_eq!(e0, 0.0);
    }

    #[test]
    fn cloud_reproducible_and_inside_complex_pseudospectrum() {
        let sys = dissipative_system(0.3, 19.0);
        let p = &sys.params;
        let eps = calibrate_epsilon(
            p,
            &sys.wave,
            SelfActionMode::Dissipative,
            TargetParam::Chi,
            0.05,
        )
        .unwrap();
        let c1 = structured_samples(&sys, eps, 24, 7, SamplingMode::Ball).unwrap();
        let c2 = structured_samples(&sys, eps, 24, 7, SamplingMode::Ball).unwrap();
        assert_eq!(c1.eigenvalues, c2.eigenvalues);
        assert_eq!(c1.e_norms, c2.e_norms);
        for en in &c1.e_norms {
            assert!(*en < eps);
        }
        // Def.2 => Def.1: every cloud point is in the complex eps-pseudospectrum
        let a = sys.matrix.to_complex();
        for z in c1.eigenvalues.iter().take(9 * 4) {
            assert!(membership_matrix(&a, *z, eps).unwrap());
        }
    }

    #[test]
    fn cloud_collapses_as_epsilon_vanishes() {
        let sys = dissipative_system(0.3, 19.0);
        let base = eigenvalues_real(&sys.matrix).unwrap();
        let a_norm = norm2_real(&sys.matrix).unwrap();
        let tiny = 1e-9 * a_norm;
        let cloud = structured_samples(&sys, tiny, 16, 3, SamplingMode::Ball).unwrap();
        for (s, chunk) in cloud.eigenvalues.chunks(9).enumerate() {
            for z in chunk {
                let d = base
                    .iter()
                    .map(|b| (z - b).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(d <= 1e-8 * a_norm, "sample {s}: eigenvalue strayed by {d}");
            }
        }
    }

    #[test]
    fn structured_requires_9x9() {
        let p = ConstitutiveParams::reference_material(0.3 * GPA, 0.0, 0.0, 0.178 * GPA);
        let sys6 =
            assemble_system(SelfActionMode::NoSelfAction, &p, &WaveConfig::default_e1()).unwrap();
        assert!(structured_samples(&sys6, 1.0, 4, 0, SamplingMode::Ball).is_err());
    }

    #[test]
    fn grid_shift_identity() {
        // sigma_eps(A + hI) = h + sigma_eps(A) for real h: grids over
        // translated windows coincide
        let sys = dissipative_system(0.2, 19.0);
        let h = 500.0;
        let mut shifted = sys.clone();
        for i in 0..9 {
            shifted.matrix[(i, i)] += h;
        }
        let spec = GridSpec::new(-1000.0, 1000.0, -500.0, 500.0, 9, 7).unwrap();
        let spec_shifted = GridSpec::new(-1000.0 + h, 1000.0 + h, -500.0, 500.0, 9, 7).unwrap();
        let g1 = resolvent_grid(&sys, &spec).unwrap();
        let g2 = resolvent_grid(&shifted, &spec_shifted).unwrap();
        for (a, b) in g1.values.iter().zip(g2.values.iter()) {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn conjugate_rows_mirrored_exactly() {
        let sys = dissipative_system(0.2, 19.0);
        let spec = GridSpec::new(-10.0, 10.0, -8000.0, 8000.0, 5, 9).unwrap();
        let g = resolvent_grid(&sys, &spec).unwrap();
        for iy in 0..spec.ny {
            let y = spec.y(iy);
            if y < 0.0 {
                if let Some(iy2) = (0..spec.ny).find(|&j| spec.y(j) == -y) {
                    for ix in 0..spec.nx {
                        assert_eq!(g.value(ix, iy), g.value(ix, iy2));
                    }
                }
            }
        }
    }

    #[test]
    fn membership_scaling_property() {
        let sys = dissipative_system(0.2, 19.0);
        let a = sys.matrix.to_complex();
        let h = Complex64::new(2.0, 0.0);
        let ha = a.scale(h);
        let z = Complex64::new(3.0, 3000.0);
        let eps = 1e-2;
        let m1 = membership_matrix(&a, z, eps).unwrap();
        let m2 = membership_matrix(&ha, h * z, h.norm() * eps).unwrap();
        assert_eq!(m1, m2);
    }
}

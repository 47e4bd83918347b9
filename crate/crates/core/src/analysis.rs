//! Stability classification, parametric sweeps, threshold bisection, and
//! propagator cross-checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalue_order, eigenvalues_real, expm_apply, sym3_eigvals};
use crate::model::{
    assemble_system, check_energy_positivity, derive_coefficients, ConstitutiveParams,
    SelfActionMode, SystemBlocks, SystemMatrix, WaveConfig,
};
use crate::normality::{report_real, NormalityReport};
use crate::pseudospectra::{
    calibrate_epsilon, structured_samples, SamplingMode, StructuredCloud, TargetParam,
};

/// Sorted eigenvalues of a system matrix with the abscissa cached.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub spectral_abscissa: f64,
    pub mode: SelfActionMode,
    pub matrix_hash: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Stable,
    Marginal,
    Unstable,
}

/// Classification at an absolute tolerance, with the offending eigenvalues
/// retained when unstable.
#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub class: StabilityClass,
    pub tol_abs: f64,
    pub witnesses: Vec<Complex64>,
}

/// Default absolute classification tolerance in 1/s: far above eigenvalue
/// rounding at the problem scale, far below the smallest reported unstable
/// real part.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-6;

/// Spectrum of an assembled system. The 6x6 regimes use the closed-form
/// route: sigma(A) is the union of +-sqrt over the eigenvalues of the
/// symmetric block K. The 9x9 regimes use the dense eigensolver.
pub fn spectrum_of(sys: &SystemMatrix) -> Result<Spectrum> {
    let eigenvalues = match &sys.blocks {
        SystemBlocks::SecondOrder { k } => {
            let ek = sym3_eigvals(k)?;
            let mut out = Vec::with_capacity(6);
            for lam in ek {
                if lam >= 0.0 {
                    let r = lam.sqrt();
                    out.push(Complex64::new(r, 0.0));
                    out.push(Complex64::new(-r, 0.0));
                } else {
                    let w = (-lam).sqrt();
                    out.push(Complex64::new(0.0, w));
                    out.push(Complex64::new(0.0, -w));
                }
            }
            out.sort_by(|a, b| eigenvalue_order(b, a));
            #[cfg(debug_assertions)]
            {
                // the +-sqrt route must agree with the dense solver
                let dense = eigenvalues_real(&sys.matrix)?;
                let scale = dense.iter().map(|z| z.norm()).fold(1e-300, f64::max);
                for a in &out {
                    let d = dense
                        .iter()
                        .map(|b| (a - b).norm())
                        .fold(f64::INFINITY, f64::min);
                    debug_assert!(d <= 1e-8 * scale, "closed-form route drifted by {d:e}");
                }
            }
            out
        }
        SystemBlocks::FirstOrder { .. } => eigenvalues_real(&sys.matrix)?,
    };
    let spectral_abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Spectrum {
        eigenvalues,
        spectral_abscissa,
        mode: sys.mode,
        matrix_hash: sys.content_hash(),
    })
}

/// Unstable iff some Re(lambda) > tol; marginal iff the abscissa lies in
/// [-tol, tol]; stable otherwise.
pub fn classify(s: &Spectrum, tol_abs: f64) -> StabilityVerdict {
    let a = s.spectral_abscissa;
    let class = if a > tol_abs {
        StabilityClass::Unstable
    } else if a >= -tol_abs {
        StabilityClass::Marginal
    } else {
        StabilityClass::Stable
    };
    let witnesses = if class == StabilityClass::Unstable {
        s.eigenvalues
            .iter()
            .copied()
            .filter(|z| z.re > tol_abs)
            .collect()
    } else {
        Vec::new()
    };
    StabilityVerdict {
        class,
        tol_abs,
        witnesses,
    }
}

/// Parameter swept in a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Chi,
    Alpha,
    K0,
    Phi,
    Varsigma,
    WaveNumber,
}

impl SweepParam {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chi" => Ok(Self::Chi),
            "alpha" => Ok(Self::Alpha),
            "k0" => Ok(Self::K0),
            "phi" => Ok(Self::Phi),
            "varsigma" => Ok(Self::Varsigma),
            "k" | "wavenumber" | "wave_number" => Ok(Self::WaveNumber),
            other => Err(Error::UnknownParameter(other.to_string())),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Chi => "chi",
            Self::Alpha => "alpha",
            Self::K0 => "k0",
            Self::Phi => "phi",
            Self::Varsigma => "varsigma",
            Self::WaveNumber => "k",
        }
    }

    /// Apply the swept value onto a base (params, wave) point.
    pub fn apply(
        &self,
        base: &ConstitutiveParams,
        wave: &WaveConfig,
        value: f64,
    ) -> Result<(ConstitutiveParams, WaveConfig)> {
        let d = derive_coefficients(base);
        let mut lambda = base.lambda;
        let mut mu = base.mu;
        let mut k0 = base.k0;
        let mut varsigma = base.varsigma;
        let (mut chi, mut alpha) = (d.chi, d.alpha);
        let (zeta, gamma) = (d.zeta, d.gamma);
        let mut w = *wave;
        match self {
            Self::Chi => chi = value,
            Self::Alpha => alpha = value,
            Self::K0 => k0 = value,
            Self::Phi => varsigma = value.exp(),
            Self::Varsigma => varsigma = value,
            Self::WaveNumber => w = WaveConfig::new(value, wave.n)?,
        }
        let _ = (&mut lambda, &mut mu);
        Ok((
            ConstitutiveParams::from_derived(
                lambda, mu, chi, alpha, zeta, gamma, k0, varsigma, base.rho,
            ),
            w,
        ))
    }
}

/// Structured-sampling options carried by sweeps and threshold searches.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StructuredOptions {
    /// Relative uncertainty defining epsilon through calibrate_epsilon.
    pub rel: f64,
    /// Parameter the uncertainty refers to (the studies use chi).
    pub target: TargetParam,
    pub n_samples: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

impl StructuredOptions {
    pub fn reference_default(seed: u64, mode: SamplingMode) -> Self {
        Self {
            rel: 0.05,
            target: TargetParam::Chi,
            n_samples: 400,
            seed,
            mode,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    pub normality: bool,
    pub structured: Option<StructuredOptions>,
    /// Evaluate points that violate the free-energy inequalities instead of
    /// refusing them (the published studies explore beyond the admissible
    /// window).
    pub allow_inadmissible: bool,
    pub classify_tol: Option<f64>,
}

/// Compact record of a structured cloud inside a sweep row.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StructuredSummary {
    pub epsilon: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub max_real_part: f64,
    pub unstable_fraction: f64,
}

impl From<&StructuredCloud> for StructuredSummary {
    fn from(c: &StructuredCloud) -> Self {
        Self {
            epsilon: c.epsilon,
            n_samples: c.n_samples,
            seed: c.seed,
            max_real_part: c.max_real_part,
            unstable_fraction: c.unstable_fraction,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub admissible: bool,
    pub spectrum: Spectrum,
    pub verdict: StabilityVerdict,
    pub normality: Option<NormalityReport>,
    pub structured: Option<StructuredSummary>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub mode: SelfActionMode,
    pub swept: SweepParam,
    pub points: Vec<SweepPoint>,
}

/// Evaluate spectrum/verdict (and optional measures) over a monotone grid
/// of parameter values.
pub fn sweep(
    mode: SelfActionMode,
    base: &ConstitutiveParams,
    wave: &WaveConfig,
    swept: SweepParam,
    values: &[f64],
    options: &SweepOptions,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("sweep values must be nonempty".into()));
    }
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    let decreasing = values.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidConfig(
            "sweep values must be strictly monotone".into(),
        ));
    }
    let tol = options.classify_tol.unwrap_or(DEFAULT_CLASSIFY_TOL);
    let mut points = Vec::with_capacity(values.len());
    for &v in values {
        let (p, w) = swept.apply(base, wave, v)?;
        let violations = check_energy_positivity(&p);
        let admissible = violations.is_empty();
        if !admissible && !options.allow_inadmissible {
            return Err(Error::Inadmissible(format!(
                "{} = {v}: {}",
                swept.label(),
                violations
                    .iter()
                    .map(|x| x.inequality.clone())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        let sys = assemble_system(mode, &p, &w)?;
        let spectrum = spectrum_of(&sys)?;
        let verdict = classify(&spectrum, tol);
        let normality = if options.normality {
            Some(report_real(&sys.matrix)?)
        } else {
            None
        };
        let structured = match &options.structured {
            Some(opt) if sys.dim() == 9 => {
                let eps = calibrate_epsilon(&p, &w, mode, opt.target, opt.rel)?;
                if eps > 0.0 {
                    let cloud = structured_samples(&sys, eps, opt.n_samples, opt.seed, opt.mode)?;
                    Some(StructuredSummary::from(&cloud))
                } else {
                    None
                }
            }
            _ => None,
        };
        points.push(SweepPoint {
            value: v,
            admissible,
            spectrum,
            verdict,
            normality,
            structured,
        });
    }
    Ok(SweepResult {
        mode,
        swept,
        points,
    })
}

/// Indicator driving a threshold search.
#[derive(Debug, Clone, Copy)]
pub enum ThresholdCriterion {
    /// classify(...) == Unstable at the default tolerance.
    Eigen,
    /// unstable_fraction > q with a per-evaluation fixed seed; the result
    /// is a Monte-Carlo threshold and is reported with the seed.
    Structured { q: f64, options: StructuredOptions },
}

/// Bisect the swept parameter over `bracket` until the indicator flips
/// within `tol`; returns the midpoint of the final bracket.
#[allow(clippy::too_many_arguments)]
pub fn threshold_bisect(
    mode: SelfActionMode,
    base: &ConstitutiveParams,
    wave: &WaveConfig,
    swept: SweepParam,
    bracket: (f64, f64),
    criterion: &ThresholdCriterion,
    tol: f64,
    allow_inadmissible: bool,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::InvalidConfig("bracket must satisfy lo < hi".into()));
    }
    let eval = |v: f64| -> Result<bool> {
        let (p, w) = swept.apply(base, wave, v)?;
        if !allow_inadmissible {
            let violations = check_energy_positivity(&p);
            if !violations.is_empty() {
                return Err(Error::Inadmissible(format!(
                    "{} = {v}: {}",
                    swept.label(),
                    violations
                        .iter()
                        .map(|x| x.inequality.clone())
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
        }
        let sys = assemble_system(mode, &p, &w)?;
        match criterion {
            ThresholdCriterion::Eigen => {
                let s = spectrum_of(&sys)?;
                Ok(classify(&s, DEFAULT_CLASSIFY_TOL).class == StabilityClass::Unstable)
            }
            ThresholdCriterion::Structured { q, options } => {
                let eps = calibrate_epsilon(&p, &w, mode, options.target, options.rel)?;
                if eps <= 0.0 {
                    return Ok(false);
                }
                let cloud =
                    structured_samples(&sys, eps, options.n_samples, options.seed, options.mode)?;
                Ok(cloud.unstable_fraction > *q)
            }
        }
    };
    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    if f_lo == f_hi {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? == f_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First value of the swept parameter (scanned in order) whose structured
/// cloud crosses into the right half-plane; the epsilon budget tracks the
/// local chi through calibrate_epsilon.
pub fn structured_onset_scan(
    mode: SelfActionMode,
    base: &ConstitutiveParams,
    wave: &WaveConfig,
    swept: SweepParam,
    values: &[f64],
    options: &StructuredOptions,
) -> Result<Option<f64>> {
    for &v in values {
        let (p, w) = swept.apply(base, wave, v)?;
        let sys = assemble_system(mode, &p, &w)?;
        let eps = calibrate_epsilon(&p, &w, mode, options.target, options.rel)?;
        if eps <= 0.0 {
            continue;
        }
        let cloud = structured_samples(&sys, eps, options.n_samples, options.seed, options.mode)?;
        if cloud.max_real_part > 0.0 {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// Propagator growth envelope: max over the time grid of
/// ||exp(tA) q0|| / ||q0||.
#[derive(Debug, Clone)]
pub struct TransientEnvelope {
    pub max_amplification: f64,
    pub samples: Vec<(f64, f64)>,
}

pub fn transient_check(
    sys: &SystemMatrix,
    q0: &[f64],
    t_grid: &[f64],
) -> Result<TransientEnvelope> {
    if q0.len() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state length {} vs system dimension {}",
            q0.len(),
            sys.dim()
        )));
    }
    let q0_norm = q0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if q0_norm == 0.0 {
        return Err(Error::InvalidConfig("initial state must be nonzero".into()));
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    let mut max_amplification: f64 = 0.0;
    for &t in t_grid {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "time grid must be finite and non-negative, got {t}"
            )));
        }
        let q = expm_apply(&sys.matrix, t, q0)?;
        let ratio = q.iter().map(|x| x * x).sum::<f64>().sqrt() / q0_norm;
        max_amplification = max_amplification.max(ratio);
        samples.push((t, ratio));
    }
    Ok(TransientEnvelope {
        max_amplification,
        samples,
    })
}

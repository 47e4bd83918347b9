//! Constitutive data, free-energy admissibility, and assembly of the
//! wave-amplitude evolution matrix for the four phason self-action regimes.
//!
//! Internal unit system is SI (Pa, kg/m^3, s); GPa-valued inputs are
//! converted at the boundary. Eigenvalues of the assembled systems come out
//! in rad/s (oscillatory parts) and 1/s (real parts).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{iso_plus_rank_one, Mat3, RealMatrix};

pub const GPA: f64 = 1e9;

/// Raw material coefficients in SI units.
///
/// `varsigma` is the phason friction (Pa s/m^2), optionally specified as
/// phi with varsigma = e^phi; `k0` is the conservative self-action
/// coefficient (Pa/m^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstitutiveParams {
    pub lambda: f64,
    pub mu: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k2p: f64,
    pub k3: f64,
    pub k3p: f64,
    pub varsigma: f64,
    pub rho: f64,
}

/// Combined coefficients entering the reduced balance equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoefficients {
    pub xi: f64,
    pub alpha: f64,
    pub zeta: f64,
    pub gamma: f64,
    pub chi: f64,
}

impl ConstitutiveParams {
    /// Validate the always-required positivity of density and friction.
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if !(self.varsigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "varsigma must be positive, got {}",
                self.varsigma
            )));
        }
        if self.k0 < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "k0 must be non-negative, got {}",
                self.k0
            )));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("k0", self.k0),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k2p", self.k2p),
            ("k3", self.k3),
            ("k3p", self.k3p),
            ("varsigma", self.varsigma),
            ("rho", self.rho),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    /// Construct raw coefficients from the combined set the parametric
    /// studies use. The split of zeta between k2 and k2' and of gamma into
    /// k1 is not observable in the wave dynamics; the convention
    /// k2 = 0.9 zeta, k2' = 0.1 zeta, k1 = gamma - 0.8 zeta keeps the
    /// published parameter range energy-admissible. derive_coefficients
    /// recovers (xi, alpha, zeta, gamma, chi) from this exactly.
    #[allow(clippy::too_many_arguments)]
    pub fn from_derived(
        lambda: f64,
        mu: f64,
        chi: f64,
        alpha: f64,
        zeta: f64,
        gamma: f64,
        k0: f64,
        varsigma: f64,
        rho: f64,
    ) -> Self {
        let k2 = 0.9 * zeta;
        let k2p = 0.1 * zeta;
        let k1 = gamma - k2 + k2p;
        let k3p = 2.0 * chi;
        let k3 = alpha - chi;
        Self {
            lambda,
            mu,
            k0,
            k1,
            k2,
            k2p,
            k3,
            k3p,
            varsigma,
            rho,
        }
    }

    /// Material data of the reference quasicrystal with the coupling
    /// parameters left as arguments (chi, alpha in Pa; k0 in Pa/m^2;
    /// varsigma in Pa s/m^2).
    pub fn reference_material(chi: f64, alpha: f64, k0: f64, varsigma: f64) -> Self {
        Self::from_derived(
            85.0 * GPA,
            65.0 * GPA,
            chi,
            alpha,
            0.044 * GPA,
            0.0198 * GPA,
            k0,
            varsigma,
            5100.0,
        )
    }
}

/// xi = lambda + mu, alpha = k3 + k3'/2, zeta = k2 + k2',
/// gamma = k1 + k2 - k2', chi = k3'/2.
pub fn derive_coefficients(p: &ConstitutiveParams) -> DerivedCoefficients {
    DerivedCoefficients {
        xi: p.lambda + p.mu,
        alpha: p.k3 + p.k3p / 2.0,
        zeta: p.k2 + p.k2p,
        gamma: p.k1 + p.k2 - p.k2p,
        chi: p.k3p / 2.0,
    }
}

/// One violated free-energy inequality, with the printed form and the
/// margin by which it fails (negative slack).
#[derive(Debug, Clone, Serialize)]
pub struct EnergyViolation {
    pub inequality: String,
    pub margin: f64,
}

/// Evaluate the free-energy positivity conditions with the exact
/// strictness of each inequality; an empty list means admissible.
pub fn check_energy_positivity(p: &ConstitutiveParams) -> Vec<EnergyViolation> {
    fn strict(out: &mut Vec<EnergyViolation>, name: &str, value: f64) {
        if !(value > 0.0) {
            out.push(EnergyViolation {
                inequality: name.to_string(),
                margin: value,
            });
        }
    }
    let mut out = Vec::new();
    strict(&mut out, "mu > 0", p.mu);
    strict(&mut out, "k2 > 0", p.k2);
    strict(&mut out, "2 k2 + 3 k1 > 0", 2.0 * p.k2 + 3.0 * p.k1);
    strict(&mut out, "k2' > 0", p.k2p);
    // sqrt bounds: a non-positive radicand means the bound is undefined
    // and the inequality cannot hold
    let rad1 = p.mu * p.k2;
    if rad1 <= 0.0 {
        out.push(EnergyViolation {
            inequality: "k3' < 2 sqrt(mu k2)".into(),
            margin: f64::NEG_INFINITY,
        });
    } else {
        strict(&mut out, "k3' < 2 sqrt(mu k2)", 2.0 * rad1.sqrt() - p.k3p);
    }
    let rad2 = (2.0 * p.mu + 3.0 * p.lambda) * (2.0 * p.k2 + 3.0 * p.k1);
    if rad2 <= 0.0 {
        out.push(EnergyViolation {
            inequality: "3 k3 + k3' < sqrt((2mu+3lambda)(2k2+3k1))".into(),
            margin: f64::NEG_INFINITY,
        });
    } else {
        strict(
            &mut out,
            "3 k3 + k3' < sqrt((2mu+3lambda)(2k2+3k1))",
            rad2.sqrt() - (3.0 * p.k3 + p.k3p),
        );
    }
    if !(p.k0 >= 0.0) {
        out.push(EnergyViolation {
            inequality: "k0 >= 0".into(),
            margin: p.k0,
        });
    }
    out
}

/// Plane-wave configuration: wavenumber modulus and unit propagation
/// direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    pub k: f64,
    pub n: [f64; 3],
}

impl WaveConfig {
    pub fn new(k: f64, n: [f64; 3]) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "wavenumber k must be positive and finite, got {k}"
            )));
        }
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "propagation direction must be a unit vector, |n| = {norm}"
            )));
        }
        Ok(Self { k, n })
    }

    /// k = 1 rad/m along e1. The wavenumber is not part of the published
    /// data; 1 rad/m reproduces the reported tables and thresholds.
    pub fn default_e1() -> Self {
        Self {
            k: 1.0,
            n: [1.0, 0.0, 0.0],
        }
    }
}

/// The four self-action regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfActionMode {
    NoSelfAction,
    Conservative,
    Dissipative,
    Complete,
}

impl SelfActionMode {
    pub fn dim(&self) -> usize {
        match self {
            SelfActionMode::NoSelfAction | SelfActionMode::Conservative => 6,
            SelfActionMode::Dissipative | SelfActionMode::Complete => 9,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "no_self_action" | "no-self-action" => Ok(SelfActionMode::NoSelfAction),
            "conservative" => Ok(SelfActionMode::Conservative),
            "dissipative" => Ok(SelfActionMode::Dissipative),
            "complete" => Ok(SelfActionMode::Complete),
            other => Err(Error::InvalidConfig(format!(
                "unknown self-action mode `{other}` (expected none|conservative|dissipative|complete)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SelfActionMode::NoSelfAction => "none",
            SelfActionMode::Conservative => "conservative",
            SelfActionMode::Dissipative => "dissipative",
            SelfActionMode::Complete => "complete",
        }
    }
}

/// Named 3x3 blocks retained for structure-aware perturbation.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemBlocks {
    /// Second-order 6x6 form [[0, I], [K, 0]].
    SecondOrder { k: Mat3 },
    /// First-order 9x9 form [[0, I, 0], [K1, 0, K2/rho], [K2/varsigma, 0, K3]].
    FirstOrder { k1: Mat3, k2: Mat3, k3: Mat3 },
}

/// Assembled evolution matrix with its block metadata.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    pub mode: SelfActionMode,
    pub matrix: RealMatrix,
    pub blocks: SystemBlocks,
    pub params: ConstitutiveParams,
    pub wave: WaveConfig,
}

impl SystemMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn content_hash(&self) -> u64 {
        self.matrix.content_hash()
    }
}

/// Acoustic-like tensor K for the 6x6 regimes.
pub fn build_k(
    mode: SelfActionMode,
    p: &ConstitutiveParams,
    d: &DerivedCoefficients,
    w: &WaveConfig,
) -> Result<Mat3> {
    let k2 = w.k * w.k;
    let (a, b) = match mode {
        SelfActionMode::NoSelfAction => {
            if d.zeta == 0.0 {
                return Err(Error::SingularConstitutive("zeta = 0".into()));
            }
            if d.zeta + d.gamma == 0.0 {
                return Err(Error::SingularConstitutive("zeta + gamma = 0".into()));
            }
            let a = p.mu - d.chi * d.chi / d.zeta;
            let b = p.lambda + p.mu - (d.alpha + d.chi).powi(2) / (d.zeta + d.gamma)
                + d.chi * d.chi / d.zeta;
            (a, b)
        }
        SelfActionMode::Conservative => {
            let den1 = p.k0 + d.zeta * k2;
            let den2 = p.k0 + (d.zeta + d.gamma) * k2;
            if den1 <= 0.0 {
                return Err(Error::SingularConstitutive(format!(
                    "k0 + zeta k^2 = {den1} must be positive"
                )));
            }
            if den2 <= 0.0 {
                return Err(Error::SingularConstitutive(format!(
                    "k0 + (zeta + gamma) k^2 = {den2} must be positive"
                )));
            }
            let a = p.mu - d.chi * d.chi * k2 / den1;
            let b =
                p.lambda + p.mu - k2 * ((d.alpha + d.chi).powi(2) / den2 - d.chi * d.chi / den1);
            (a, b)
        }
        _ => {
            return Err(Error::InvalidConfig(
                "build_k applies to the 6x6 regimes only".into(),
            ))
        }
    };
    let scale = -k2 / p.rho;
    Ok(iso_plus_rank_one(scale * a, scale * b, &w.n))
}

/// Block triple (K1, K2, K3) for the 9x9 regimes; for the complete
/// self-action zeta is augmented by k0/k^2 inside K3.
pub fn build_k123(
    mode: SelfActionMode,
    p: &ConstitutiveParams,
    d: &DerivedCoefficients,
    w: &WaveConfig,
) -> Result<(Mat3, Mat3, Mat3)> {
    if !matches!(mode, SelfActionMode::Dissipative | SelfActionMode::Complete) {
        return Err(Error::InvalidConfig(
            "build_k123 applies to the 9x9 regimes only".into(),
        ));
    }
    if !(p.varsigma > 0.0) {
        return Err(Error::SingularConstitutive(
            "varsigma must be positive in the dissipative regimes".into(),
        ));
    }
    if !(w.k > 0.0) {
        return Err(Error::SingularConstitutive("k must be positive".into()));
    }
    let k2 = w.k * w.k;
    let k1_block = iso_plus_rank_one(-k2 * p.mu / p.rho, -k2 * (p.lambda + p.mu) / p.rho, &w.n);
    let k2_block = iso_plus_rank_one(-k2 * d.chi, -k2 * d.alpha, &w.n);
    let zeta_eff = match mode {
        SelfActionMode::Complete => d.zeta + p.k0 / k2,
        _ => d.zeta,
    };
    let k3_block = iso_plus_rank_one(
        -k2 * zeta_eff / p.varsigma,
        -k2 * d.gamma / p.varsigma,
        &w.n,
    );
    Ok((k1_block, k2_block, k3_block))
}

/// Assemble the evolution matrix of q' = A q for the requested regime.
pub fn assemble_system(
    mode: SelfActionMode,
    p: &ConstitutiveParams,
    w: &WaveConfig,
) -> Result<SystemMatrix> {
    p.validate()?;
    let d = derive_coefficients(p);
    match mode {
        SelfActionMode::NoSelfAction | SelfActionMode::Conservative => {
            let k = build_k(mode, p, &d, w)?;
            let mut a = RealMatrix::zeros(6, 6);
            for i in 0..3 {
                a[(i, 3 + i)] = 1.0;
            }
            a.set_block3(3, 0, &k);
            Ok(SystemMatrix {
                mode,
                matrix: a,
                blocks: SystemBlocks::SecondOrder { k },
                params: *p,
                wave: *w,
            })
        }
        SelfActionMode::Dissipative | SelfActionMode::Complete => {
            let (k1, k2b, k3) = build_k123(mode, p, &d, w)?;
            let mut a = RealMatrix::zeros(9, 9);
            for i in 0..3 {
                a[(i, 3 + i)] = 1.0;
            }
            a.set_block3(3, 0, &k1);
            let mut k2_rho = k2b;
            let mut k2_sig = k2b;
            for i in 0..3 {
                for j in 0..3 {
                    k2_rho[i][j] /= p.rho;
                    k2_sig[i][j] /= p.varsigma;
                }
            }
            a.set_block3(3, 6, &k2_rho);
            a.set_block3(6, 0, &k2_sig);
            a.set_block3(6, 6, &k3);
            Ok(SystemMatrix {
                mode,
                matrix: a,
                blocks: SystemBlocks::FirstOrder { k1, k2: k2b, k3 },
                params: *p,
                wave: *w,
            })
        }
    }
}

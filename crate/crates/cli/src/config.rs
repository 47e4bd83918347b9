//! Run configuration: JSON schema with mandatory unit annotations, CLI
//! flag overlay, and the effective-config echo embedded in every output.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use phason_stab::analysis::SweepParam;
use phason_stab::model::{ConstitutiveParams, SelfActionMode, WaveConfig};
use phason_stab::pseudospectra::{GridSpec, SamplingMode, TargetParam};

/// Physical dimension of a unit-annotated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Pressure,
    Density,
    Friction,
    StiffnessPerArea,
    WaveNumber,
}

impl Dimension {
    fn units(&self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Pressure => &[("GPa", 1e9), ("MPa", 1e6), ("kPa", 1e3), ("Pa", 1.0)],
            Dimension::Density => &[("kg/m^3", 1.0)],
            Dimension::Friction => &[("GPa*s/m^2", 1e9), ("Pa*s/m^2", 1.0)],
            Dimension::StiffnessPerArea => &[("GPa/m^2", 1e9), ("Pa/m^2", 1.0)],
            Dimension::WaveNumber => &[("rad/m", 1.0), ("1/m", 1.0)],
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Dimension::Pressure => "pressure",
            Dimension::Density => "density",
            Dimension::Friction => "phason friction",
            Dimension::StiffnessPerArea => "stiffness per area",
            Dimension::WaveNumber => "wavenumber",
        }
    }
}

/// Parse "0.05GPa" / "0.05 GPa" into SI. Units are mandatory; silent unit
/// guessing is forbidden.
pub fn parse_quantity(s: &str, dim: Dimension) -> Result<f64> {
    let s = s.trim();
    let split = s
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(|| anyhow!("`{s}`: missing unit annotation ({})", dim.name()))?;
    let (num, unit) = s.split_at(split);
    let num = num.trim();
    let unit = unit.trim();
    let value: f64 = num
        .parse()
        .with_context(|| format!("`{s}`: invalid numeric value"))?;
    for (u, factor) in dim.units() {
        if unit == *u {
            return Ok(value * factor);
        }
    }
    bail!(
        "`{s}`: unknown {} unit `{unit}` (accepted: {})",
        dim.name(),
        dim.units()
            .iter()
            .map(|(u, _)| *u)
            .collect::<Vec<_>>()
            .join(", ")
    )
}

/// Material in derived form: the combined coefficients the studies vary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub lambda: Option<String>,
    pub mu: Option<String>,
    pub zeta: Option<String>,
    pub gamma: Option<String>,
    pub chi: Option<String>,
    pub alpha: Option<String>,
    pub k0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub varsigma: Option<String>,
    /// Friction exponent: varsigma = e^phi Pa*s/m^2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    pub rho: Option<String>,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        // published quasicrystal data; couplings default to zero
        Self {
            lambda: Some("85 GPa".into()),
            mu: Some("65 GPa".into()),
            zeta: Some("0.044 GPa".into()),
            gamma: Some("0.0198 GPa".into()),
            chi: Some("0 GPa".into()),
            alpha: Some("0 GPa".into()),
            k0: Some("0 GPa/m^2".into()),
            varsigma: Some("0.178 GPa*s/m^2".into()),
            phi: None,
            rho: Some("5100 kg/m^3".into()),
        }
    }
}

/// Material in raw form (the full coefficient set).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMaterialConfig {
    pub lambda: String,
    pub mu: String,
    pub k0: String,
    pub k1: String,
    pub k2: String,
    pub k2_prime: String,
    pub k3: String,
    pub k3_prime: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub varsigma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    pub rho: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfigInput {
    pub k: Option<String>,
    pub n: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub re_min: Option<f64>,
    pub re_max: Option<f64>,
    pub im_min: Option<f64>,
    pub im_max: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
}

/// Declarative run description; unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub material_raw: Option<RawMaterialConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wave: Option<WaveConfigInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_param: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_values: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normality: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structured: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_inadmissible: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }
}

/// Fully resolved inputs plus the effective config echoed into outputs.
pub struct Resolved {
    pub mode: SelfActionMode,
    pub params: ConstitutiveParams,
    pub wave: WaveConfig,
    pub effective: serde_json::Value,
}

fn resolve_varsigma(varsigma: &Option<String>, phi: &Option<f64>) -> Result<f64> {
    match (varsigma, phi) {
        (Some(_), Some(_)) => bail!("specify either varsigma or phi, not both"),
        (Some(v), None) => parse_quantity(v, Dimension::Friction),
        (None, Some(p)) => Ok(p.exp()),
        (None, None) => bail!("phason friction missing: provide varsigma or phi"),
    }
}

pub fn resolve(config: &RunConfig) -> Result<Resolved> {
    let mode =
        SelfActionMode::parse(config.mode.as_deref().ok_or_else(|| {
            anyhow!("mode is required (none|conservative|dissipative|complete)")
        })?)?;

    let params = if let Some(raw) = &config.material_raw {
        if config.material.is_some() {
            bail!("specify either material or material_raw, not both");
        }
        ConstitutiveParams {
            lambda: parse_quantity(&raw.lambda, Dimension::Pressure)?,
            mu: parse_quantity(&raw.mu, Dimension::Pressure)?,
            k0: parse_quantity(&raw.k0, Dimension::StiffnessPerArea)?,
            k1: parse_quantity(&raw.k1, Dimension::Pressure)?,
            k2: parse_quantity(&raw.k2, Dimension::Pressure)?,
            k2p: parse_quantity(&raw.k2_prime, Dimension::Pressure)?,
            k3: parse_quantity(&raw.k3, Dimension::Pressure)?,
            k3p: parse_quantity(&raw.k3_prime, Dimension::Pressure)?,
            varsigma: resolve_varsigma(&raw.varsigma, &raw.phi)?,
            rho: parse_quantity(&raw.rho, Dimension::Density)?,
        }
    } else {
        let m = config.material.clone().unwrap_or_default();
        let defaults = MaterialConfig::default();
        let field = |v: &Option<String>, d: &Option<String>, name: &str| -> Result<String> {
            v.clone()
                .or_else(|| d.clone())
                .ok_or_else(|| anyhow!("material field `{name}` missing"))
        };
        let lambda = parse_quantity(
            &field(&m.lambda, &defaults.lambda, "lambda")?,
            Dimension::Pressure,
        )?;
        let mu = parse_quantity(&field(&m.mu, &defaults.mu, "mu")?, Dimension::Pressure)?;
        let zeta = parse_quantity(
            &field(&m.zeta, &defaults.zeta, "zeta")?,
            Dimension::Pressure,
        )?;
        let gamma = parse_quantity(
            &field(&m.gamma, &defaults.gamma, "gamma")?,
            Dimension::Pressure,
        )?;
        let chi = parse_quantity(&field(&m.chi, &defaults.chi, "chi")?, Dimension::Pressure)?;
        let alpha = parse_quantity(
            &field(&m.alpha, &defaults.alpha, "alpha")?,
            Dimension::Pressure,
        )?;
        let k0 = parse_quantity(
            &field(&m.k0, &defaults.k0, "k0")?,
            Dimension::StiffnessPerArea,
        )?;
        let varsigma = if m.varsigma.is_none() && m.phi.is_none() {
            resolve_varsigma(&defaults.varsigma, &None)?
        } else {
            resolve_varsigma(&m.varsigma, &m.phi)?
        };
        let rho = parse_quantity(&field(&m.rho, &defaults.rho, "rho")?, Dimension::Density)?;
        ConstitutiveParams::from_derived(lambda, mu, chi, alpha, zeta, gamma, k0, varsigma, rho)
    };
    params.validate()?;

    let wave = match &config.wave {
        None => WaveConfig::default_e1(),
        Some(w) => {
            let k = match &w.k {
                None => 1.0,
                Some(s) => parse_quantity(s, Dimension::WaveNumber)?,
            };
            let n = w.n.unwrap_or([1.0, 0.0, 0.0]);
            WaveConfig::new(k, n)?
        }
    };

    // effective config (defaults resolved, SI values) for the output echo
    let effective = serde_json::json!({
        "mode": mode.label(),
        "material_si": {
            "lambda_pa": params.lambda,
            "mu_pa": params.mu,
            "k0_pa_per_m2": params.k0,
            "k1_pa": params.k1,
            "k2_pa": params.k2,
            "k2_prime_pa": params.k2p,
            "k3_pa": params.k3,
            "k3_prime_pa": params.k3p,
            "varsigma_pa_s_per_m2": params.varsigma,
            "rho_kg_per_m3": params.rho,
        },
        "wave": { "k_rad_per_m": wave.k, "n": wave.n },
    });

    Ok(Resolved {
        mode,
        params,
        wave,
        effective,
    })
}

pub fn resolve_grid(
    config: &Option<GridConfig>,
    sys: &phason_stab::model::SystemMatrix,
) -> Result<GridSpec> {
    let (nx, ny) = match config {
        Some(g) => (g.nx.unwrap_or(200), g.ny.unwrap_or(200)),
        None => (200, 200),
    };
    let auto = GridSpec::default_for(sys, nx, ny)?;
    let g = match config {
        None => auto,
        Some(g) => GridSpec::new(
            g.re_min.unwrap_or(auto.re_min),
            g.re_max.unwrap_or(auto.re_max),
            g.im_min.unwrap_or(auto.im_min),
            g.im_max.unwrap_or(auto.im_max),
            nx,
            ny,
        )?,
    };
    Ok(g)
}

pub fn parse_sampling(s: Option<&str>) -> Result<SamplingMode> {
    match s {
        None => Ok(SamplingMode::Ball),
        Some(v) => Ok(SamplingMode::parse(v)?),
    }
}

pub fn parse_target(s: Option<&str>) -> Result<TargetParam> {
    match s {
        None => Ok(TargetParam::Chi),
        Some(v) => Ok(TargetParam::parse(v)?),
    }
}

/// Units for swept values are dictated by the parameter.
pub fn sweep_value(param: SweepParam, s: &str) -> Result<f64> {
    Ok(match param {
        SweepParam::Chi | SweepParam::Alpha => parse_quantity(s, Dimension::Pressure)?,
        SweepParam::K0 => parse_quantity(s, Dimension::StiffnessPerArea)?,
        SweepParam::Varsigma => parse_quantity(s, Dimension::Friction)?,
        SweepParam::WaveNumber => parse_quantity(s, Dimension::WaveNumber)?,
        SweepParam::Phi => s
            .trim()
            .parse()
            .with_context(|| format!("`{s}`: phi is a bare exponent (no unit)"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantity_parsing() {
        assert_eq!(
            parse_quantity("0.05GPa", Dimension::Pressure).unwrap(),
            0.05e9
        );
        assert_eq!(parse_quantity("85 GPa", Dimension::Pressure).unwrap(), 85e9);
        assert_eq!(
            parse_quantity(" 5100 kg/m^3", Dimension::Density).unwrap(),
            5100.0
        );
        assert_eq!(
            parse_quantity("0.178 GPa*s/m^2", Dimension::Friction).unwrap(),
            0.178e9
        );
        assert!(parse_quantity("0.05", Dimension::Pressure).is_err());
        assert!(parse_quantity("0.05 bogus", Dimension::Pressure).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: std::result::Result<RunConfig, _> =
            serde_json::from_str(r#"{"mode": "none", "bogus_key": 1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn phi_resolves_to_exponential() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"mode": "dissipative", "material": {"chi": "0.1 GPa", "phi": 19.0}}"#,
        )
        .unwrap();
        let r = resolve(&cfg).unwrap();
        assert!((r.params.varsigma - 19.0f64.exp()).abs() < 1e-3);
    }
}

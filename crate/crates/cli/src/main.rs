//! Command-line front end for the spectral / pseudospectral material
//! stability analyses.
//!
//! Exit codes: 0 success, 1 config error, 2 admissibility failure,
//! 3 numerical or bracket failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{resolve, RunConfig};
use phason_stab::analysis::SweepParam;
use phason_stab::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "phason-stab",
    version,
    about = "Spectra and pseudospectra for quasicrystal wave-amplitude stability"
)]
struct Cli {
    /// Worker threads (env PHASON_STAB_JOBS is the fallback; default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON run configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Self-action regime: none|conservative|dissipative|complete
    #[arg(long)]
    mode: Option<String>,
    /// Lame constant, e.g. "85 GPa"
    #[arg(long)]
    lambda: Option<String>,
    /// Lame constant, e.g. "65 GPa"
    #[arg(long)]
    mu: Option<String>,
    /// Phason stiffness combination, e.g. "0.044 GPa"
    #[arg(long)]
    zeta: Option<String>,
    /// Phason stiffness combination, e.g. "0.0198 GPa"
    #[arg(long)]
    gamma: Option<String>,
    /// Coupling, e.g. "0.1 GPa"
    #[arg(long)]
    chi: Option<String>,
    /// Coupling, e.g. "0 GPa"
    #[arg(long)]
    alpha: Option<String>,
    /// Conservative self-action, e.g. "0.01 GPa/m^2"
    #[arg(long)]
    k0: Option<String>,
    /// Phason friction, e.g. "0.178 GPa*s/m^2"
    #[arg(long)]
    varsigma: Option<String>,
    /// Friction exponent: varsigma = e^phi Pa*s/m^2
    #[arg(long)]
    phi: Option<f64>,
    /// Mass density, e.g. "5100 kg/m^3"
    #[arg(long)]
    rho: Option<String>,
    /// Wavenumber, e.g. "1 rad/m"
    #[arg(long)]
    k: Option<String>,
    /// Propagation direction "nx,ny,nz" (unit vector)
    #[arg(long)]
    n: Option<String>,
}

impl CommonArgs {
    /// File config overlaid with flag values (flags win).
    fn build(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.mode.is_some() {
            cfg.mode = self.mode.clone();
        }
        let any_material = self.lambda.is_some()
            || self.mu.is_some()
            || self.zeta.is_some()
            || self.gamma.is_some()
            || self.chi.is_some()
            || self.alpha.is_some()
            || self.k0.is_some()
            || self.varsigma.is_some()
            || self.phi.is_some()
            || self.rho.is_some();
        if any_material {
            let mut m = cfg.material.take().unwrap_or_default();
            if self.lambda.is_some() {
                m.lambda = self.lambda.clone();
            }
            if self.mu.is_some() {
                m.mu = self.mu.clone();
            }
            if self.zeta.is_some() {
                m.zeta = self.zeta.clone();
            }
            if self.gamma.is_some() {
                m.gamma = self.gamma.clone();
            }
            if self.chi.is_some() {
                m.chi = self.chi.clone();
            }
            if self.alpha.is_some() {
                m.alpha = self.alpha.clone();
            }
            if self.k0.is_some() {
                m.k0 = self.k0.clone();
            }
            if self.varsigma.is_some() {
                m.varsigma = self.varsigma.clone();
                m.phi = None;
            }
            if self.phi.is_some() {
                m.phi = self.phi;
                m.varsigma = None;
            }
            if self.rho.is_some() {
                m.rho = self.rho.clone();
            }
            cfg.material = Some(m);
        }
        if self.k.is_some() || self.n.is_some() {
            let mut w = cfg
                .wave
                .take()
                .unwrap_or(config::WaveConfigInput { k: None, n: None });
            if self.k.is_some() {
                w.k = self.k.clone();
            }
            if let Some(ns) = &self.n {
                w.n = Some(commands::parse_direction(ns)?);
            }
            cfg.wave = Some(w);
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Free-energy admissibility report (exit 0 iff admissible)
    Check(CommonArgs),
    /// Eigenvalues and stability verdict of the assembled system
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the spectrum as JSON
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Resolvent-norm grid, contour extraction, SVG figure
    Pseudospectrum {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        re_min: Option<f64>,
        #[arg(long)]
        re_max: Option<f64>,
        #[arg(long)]
        im_min: Option<f64>,
        #[arg(long)]
        im_max: Option<f64>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        /// Contour levels (eps values, descending); default 10^(-0.75 j)
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_svg: Option<PathBuf>,
    },
    /// Structured perturbation cloud and overlay figure
    Structured {
        #[command(flatten)]
        common: CommonArgs,
        /// Explicit epsilon (2-norm bound on E); overrides the rel rule
        #[arg(long)]
        epsilon: Option<f64>,
        /// Relative uncertainty calibrating epsilon (default 0.05)
        #[arg(long)]
        epsilon_rel: Option<f64>,
        /// Parameter the uncertainty refers to (default chi)
        #[arg(long)]
        epsilon_target: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sample near the sphere ||E|| = 0.999 eps instead of the ball
        #[arg(long)]
        boundary: bool,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_svg: Option<PathBuf>,
    },
    /// Spectra (plus optional measures) over a parameter grid
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Swept parameter: chi|alpha|k0|phi|varsigma|k
        #[arg(long)]
        param: Option<String>,
        /// Unit-annotated values, e.g. "0.05GPa,0.5GPa" (phi: bare numbers)
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Attach departure-from-normality measures per point
        #[arg(long)]
        normality: bool,
        /// Attach structured-cloud summaries per point
        #[arg(long)]
        structured: bool,
        #[arg(long)]
        epsilon_rel: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        boundary: bool,
        /// Evaluate points outside the admissible energy window
        #[arg(long)]
        allow_inadmissible: bool,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Bisect a stability threshold in a swept parameter
    Threshold {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        param: String,
        /// Bracket "lo,hi" with units, e.g. "1GPa,2GPa"
        #[arg(long, value_delimiter = ',')]
        bracket: Vec<String>,
        /// eigen | structured
        #[arg(long, default_value = "eigen")]
        criterion: String,
        /// Structured criterion: unstable fraction must exceed q
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        /// Bracket width tolerance with units (e.g. "0.001GPa")
        #[arg(long)]
        tol: Option<String>,
        #[arg(long)]
        epsilon_rel: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        boundary: bool,
        /// Refuse points outside the admissible energy window
        #[arg(long)]
        require_admissible: bool,
    },
    /// Re-run every published table and figure recipe and diff the results
    ReproducePaper {
        /// Output directory for tables and figures
        #[arg(long, default_value = "paper-out")]
        out: PathBuf,
    },
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        match core {
            CoreError::Inadmissible(_) => 2,
            CoreError::NoSignChange { .. }
            | CoreError::Convergence { .. }
            | CoreError::Saturation { .. } => 3,
            _ => 1,
        }
    } else {
        1
    }
}

fn run() -> Result<i32> {
    let cli = Cli::parse();

    let jobs = cli.jobs.or_else(|| {
        std::env::var("PHASON_STAB_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(j) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring worker pool")?;
    }

    match &cli.command {
        Command::Check(common) => {
            let cfg = common.build()?;
            let r = resolve(&cfg)?;
            commands::cmd_check(&cfg, &r)
        }
        Command::Spectrum { common, out_json } => {
            let cfg = common.build()?;
            let r = resolve(&cfg)?;
            commands::cmd_spectrum(&cfg, &r, out_json.as_deref())
        }
        Command::Pseudospectrum {
            common,
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
            levels,
            out_csv,
            out_json,
            out_svg,
        } => {
            let mut cfg = common.build()?;
            if re_min.is_some()
                || re_max.is_some()
                || im_min.is_some()
                || im_max.is_some()
                || nx.is_some()
                || ny.is_some()
            {
                let mut g = cfg.grid.take().unwrap_or(config::GridConfig {
                    re_min: None,
                    re_max: None,
                    im_min: None,
                    im_max: None,
                    nx: None,
                    ny: None,
                });
                if re_min.is_some() {
                    g.re_min = *re_min;
                }
                if re_max.is_some() {
                    g.re_max = *re_max;
                }
                if im_min.is_some() {
                    g.im_min = *im_min;
                }
                if im_max.is_some() {
                    g.im_max = *im_max;
                }
                if nx.is_some() {
                    g.nx = *nx;
                }
                if ny.is_some() {
                    g.ny = *ny;
                }
                cfg.grid = Some(g);
            }
            if levels.is_some() {
                cfg.levels = levels.clone();
            }
            let r = resolve(&cfg)?;
            commands::cmd_pseudospectrum(
                &cfg,
                &r,
                &commands::PseudoOutputs {
                    csv: out_csv.as_deref(),
                    json: out_json.as_deref(),
                    svg: out_svg.as_deref(),
                },
            )
        }
        Command::Structured {
            common,
            epsilon,
            epsilon_rel,
            epsilon_target,
            samples,
            seed,
            boundary,
            out_csv,
            out_json,
            out_svg,
        } => {
            let mut cfg = common.build()?;
            if epsilon.is_some() {
                cfg.epsilon = *epsilon;
            }
            if epsilon_rel.is_some() {
                cfg.epsilon_rel = *epsilon_rel;
            }
            if epsilon_target.is_some() {
                cfg.epsilon_target = epsilon_target.clone();
            }
            if samples.is_some() {
                cfg.samples = *samples;
            }
            if seed.is_some() {
                cfg.seed = *seed;
            }
            if *boundary {
                cfg.sampling = Some("boundary".into());
            }
            let r = resolve(&cfg)?;
            commands::cmd_structured(
                &cfg,
                &r,
                &commands::StructuredOutputs {
                    csv: out_csv.as_deref(),
                    json: out_json.as_deref(),
                    svg: out_svg.as_deref(),
                },
            )
        }
        Command::Sweep {
            common,
            param,
            values,
            normality,
            structured,
            epsilon_rel,
            samples,
            seed,
            boundary,
            allow_inadmissible,
            out_csv,
            out_json,
        } => {
            let mut cfg = common.build()?;
            if *normality {
                cfg.normality = Some(true);
            }
            if *structured {
                cfg.structured = Some(true);
            }
            if epsilon_rel.is_some() {
                cfg.epsilon_rel = *epsilon_rel;
            }
            if samples.is_some() {
                cfg.samples = *samples;
            }
            if seed.is_some() {
                cfg.seed = *seed;
            }
            if *boundary {
                cfg.sampling = Some("boundary".into());
            }
            if *allow_inadmissible {
                cfg.allow_inadmissible = Some(true);
            }
            let param_name = param
                .clone()
                .or_else(|| cfg.sweep_param.clone())
                .ok_or_else(|| anyhow::anyhow!("sweep requires --param"))?;
            let sweep_param = SweepParam::parse(&param_name)?;
            let value_strings: Vec<String> = if values.is_empty() {
                cfg.sweep_values.clone().unwrap_or_default()
            } else {
                values.clone()
            };
            anyhow::ensure!(!value_strings.is_empty(), "sweep requires --values");
            let mut vals = Vec::with_capacity(value_strings.len());
            for s in &value_strings {
                vals.push(config::sweep_value(sweep_param, s)?);
            }
            let r = resolve(&cfg)?;
            commands::cmd_sweep(
                &cfg,
                &r,
                &commands::SweepArgsResolved {
                    param: sweep_param,
                    values: vals,
                    csv: out_csv.as_deref(),
                    json: out_json.as_deref(),
                },
            )
        }
        Command::Threshold {
            common,
            param,
            bracket,
            criterion,
            q,
            tol,
            epsilon_rel,
            samples,
            seed,
            boundary,
            require_admissible,
        } => {
            let mut cfg = common.build()?;
            if epsilon_rel.is_some() {
                cfg.epsilon_rel = *epsilon_rel;
            }
            if samples.is_some() {
                cfg.samples = *samples;
            }
            if seed.is_some() {
                cfg.seed = *seed;
            }
            if *boundary {
                cfg.sampling = Some("boundary".into());
            }
            cfg.allow_inadmissible = Some(!*require_admissible);
            let sweep_param = SweepParam::parse(param)?;
            anyhow::ensure!(
                bracket.len() == 2,
                "bracket must be two comma-separated values"
            );
            let lo = config::sweep_value(sweep_param, &bracket[0])?;
            let hi = config::sweep_value(sweep_param, &bracket[1])?;
            let tol_si = match tol {
                Some(t) => config::sweep_value(sweep_param, t)?,
                None => (hi - lo).abs() * 1e-4,
            };
            let r = resolve(&cfg)?;
            commands::cmd_threshold(
                &cfg,
                &r,
                &commands::ThresholdArgsResolved {
                    param: sweep_param,
                    bracket: (lo, hi),
                    criterion: criterion.clone(),
                    q: *q,
                    tol: tol_si,
                },
            )
        }
        Command::ReproducePaper { out } => commands::cmd_reproduce_paper(out),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

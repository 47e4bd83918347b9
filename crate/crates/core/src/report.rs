//! Contour extraction from pseudospectrum grids, SVG rendering, and
//! CSV/JSON emission.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{StabilityClass, SweepResult};
use crate::error::{Error, Result};
use crate::normality::Kappa2;
use crate::pseudospectra::{PseudospectrumGrid, StructuredCloud};

pub type Polyline = Vec<(f64, f64)>;

/// Iso-lines of the resolvent-norm field at a family of epsilon levels.
#[derive(Debug, Clone)]
pub struct ContourSet {
    pub levels: Vec<f64>,
    /// polylines[i] belongs to levels[i].
    pub polylines: Vec<Vec<Polyline>>,
}

/// Marching squares on the log10 grid. Levels must be positive and sorted
/// descending; a level outside the value range yields no polylines.
pub fn extract_contours(grid: &PseudospectrumGrid, levels: &[f64]) -> Result<ContourSet> {
    for w in levels.windows(2) {
        if !(w[0] > w[1]) {
            return Err(Error::InvalidConfig(
                "contour levels must be sorted descending".into(),
            ));
        }
    }
    if levels.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidConfig(
            "contour levels must be positive".into(),
        ));
    }
    // -inf sentinels participate as "very inside"
    let min_finite = grid
        .values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let floor = if min_finite.is_finite() {
        min_finite - 10.0
    } else {
        -300.0
    };
    let val = |ix: usize, iy: usize| -> f64 {
        let v = grid.value(ix, iy);
        if v.is_finite() {
            v
        } else {
            floor
        }
    };

    let spec = &grid.spec;
    let mut out = Vec::with_capacity(levels.len());
    for &eps in levels {
        let t = eps.log10();
        let mut segments: Vec<((f64, f64), (f64, f64))> = Vec::new();
        for iy in 0..spec.ny - 1 {
            for ix in 0..spec.nx - 1 {
                let v00 = val(ix, iy);
                let v10 = val(ix + 1, iy);
                let v11 = val(ix + 1, iy + 1);
                let v01 = val(ix, iy + 1);
                let x0 = spec.x(ix);
                let x1 = spec.x(ix + 1);
                let y0 = spec.y(iy);
                let y1 = spec.y(iy + 1);
                let mut case = 0u8;
                if v00 < t {
                    case |= 1;
                }
                if v10 < t {
                    case |= 2;
                }
                if v11 < t {
                    case |= 4;
                }
                if v01 < t {
                    case |= 8;
                }
                if case == 0 || case == 15 {
                    continue;
                }
                let lerp = |a: f64, b: f64, va: f64, vb: f64| a + (t - va) / (vb - va) * (b - a);
                let bottom = || (lerp(x0, x1, v00, v10), y0);
                let top = || (lerp(x0, x1, v01, v11), y1);
                let left = || (x0, lerp(y0, y1, v00, v01));
                let right = || (x1, lerp(y0, y1, v10, v11));
                match case {
                    1 => segments.push((left(), bottom())),
                    2 => segments.push((bottom(), right())),
                    3 => segments.push((left(), right())),
                    4 => segments.push((right(), top())),
                    6 => segments.push((bottom(), top())),
                    7 => segments.push((left(), top())),
                    8 => segments.push((top(), left())),
                    9 => segments.push((bottom(), top())),
                    11 => segments.push((right(), top())),
                    12 => segments.push((left(), right())),
                    13 => segments.push((bottom(), right())),
                    14 => segments.push((left(), bottom())),
                    5 | 10 => {
                        // saddle: the cell-center average decides the pairing
                        let center_inside = (v00 + v10 + v11 + v01) / 4.0 < t;
                        if (case == 5) == center_inside {
                            segments.push((left(), top()));
                            segments.push((bottom(), right()));
                        } else {
                            segments.push((left(), bottom()));
                            segments.push((right(), top()));
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        out.push(chain_segments(segments));
    }
    Ok(ContourSet {
        levels: levels.to_vec(),
        polylines: out,
    })
}

fn point_key(p: (f64, f64)) -> (u64, u64) {
    (p.0.to_bits(), p.1.to_bits())
}

/// Join segments into polylines by exact endpoint matching (shared cell
/// edges produce bit-identical interpolants).
fn chain_segments(segments: Vec<((f64, f64), (f64, f64))>) -> Vec<Polyline> {
    let mut adj: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        adj.entry(point_key(*a)).or_default().push(i);
        adj.entry(point_key(*b)).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut line: Vec<(f64, f64)> = vec![a, b];
        // extend forward from the tail, then from the head
        for dir in 0..2 {
            loop {
                let tip = if dir == 0 {
                    *line.last().unwrap()
                } else {
                    line[0]
                };
                let Some(cands) = adj.get(&point_key(tip)) else {
                    break;
                };
                let Some(&next) = cands.iter().find(|&&i| !used[i]) else {
                    break;
                };
                used[next] = true;
                let (na, nb) = segments[next];
                let far = if point_key(na) == point_key(tip) {
                    nb
                } else {
                    na
                };
                if dir == 0 {
                    line.push(far);
                } else {
                    line.insert(0, far);
                }
            }
        }
        polylines.push(line);
    }
    polylines
}

/// Fixed, perceptually ordered palette indexed by level rank so figures are
/// comparable across runs.
pub const LEVEL_PALETTE: [&str; 8] = [
    "#440154", "#46327e", "#365c8d", "#277f8e", "#1fa187", "#4ac16d", "#a0da39", "#fde725",
];

#[derive(Debug, Clone)]
pub struct AxesConfig {
    pub width: usize,
    pub height: usize,
    pub title: String,
}

impl Default for AxesConfig {
    fn default() -> Self {
        Self {
            width: 860,
            height: 620,
            title: String::new(),
        }
    }
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let range = hi - lo;
    if !(range > 0.0) {
        return vec![lo];
    }
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 2.5 {
        2.5
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    } * mag;
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e5 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

/// Deterministic SVG: contours colored by level rank, eigenvalues as x
/// markers, cloud points as dots, the imaginary axis dashed, and a
/// color-bar with log10(eps) ticks. Identical inputs give identical bytes.
pub fn render_svg(
    contours: &ContourSet,
    spectrum: &[Complex64],
    cloud: Option<&StructuredCloud>,
    window: (f64, f64, f64, f64),
    config: &AxesConfig,
) -> String {
    let (re_min, re_max, im_min, im_max) = window;
    let w = config.width as f64;
    let h = config.height as f64;
    let (ml, mr, mt, mb) = (70.0, 120.0, 40.0, 55.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let sx = |x: f64| ml + (x - re_min) / (re_max - re_min) * pw;
    let sy = |y: f64| mt + (im_max - y) / (im_max - im_min) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        config.width, config.height, config.width, config.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !config.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            xml_escape(&config.title)
        );
    }
    // frame
    let _ = writeln!(
        s,
        r##"<rect x="{ml:.1}" y="{mt:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#333" stroke-width="1"/>"##
    );
    // ticks
    for t in nice_ticks(re_min, re_max, 6) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333" stroke-width="1"/>"##,
            mt + ph,
            mt + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            mt + ph + 18.0,
            fmt_tick(t)
        );
    }
    for t in nice_ticks(im_min, im_max, 6) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{ml:.1}" y2="{y:.2}" stroke="#333" stroke-width="1"/>"##,
            ml - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            ml - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">Re [rad/s]</text>"#,
        ml + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">Im [rad/s]</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0
    );
    // dashed imaginary axis
    if re_min < 0.0 && re_max > 0.0 {
        let x = sx(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{mt:.1}" x2="{x:.2}" y2="{:.2}" stroke="#555" stroke-width="1" stroke-dasharray="6 4"/>"##,
            mt + ph
        );
    }
    // clip for data
    let _ = writeln!(
        s,
        r#"<clipPath id="plot"><rect x="{ml:.1}" y="{mt:.1}" width="{pw:.1}" height="{ph:.1}"/></clipPath>"#
    );
    let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
    // contours by level rank
    for (rank, lines) in contours.polylines.iter().enumerate() {
        let color = LEVEL_PALETTE[rank % LEVEL_PALETTE.len()];
        for line in lines {
            if line.len() < 2 {
                continue;
            }
            let mut d = String::new();
            for (i, (x, y)) in line.iter().enumerate() {
                let cmd = if i == 0 { 'M' } else { 'L' };
                let _ = write!(d, "{cmd}{:.2} {:.2}", sx(*x), sy(*y));
            }
            let _ = writeln!(
                s,
                r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.2"/>"#
            );
        }
    }
    // cloud dots
    if let Some(c) = cloud {
        for z in &c.eigenvalues {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="1.4" fill="#777777" fill-opacity="0.55"/>"##,
                sx(z.re),
                sy(z.im)
            );
        }
    }
    // eigenvalue markers
    for z in spectrum {
        let (x, y) = (sx(z.re), sy(z.im));
        let _ = writeln!(
            s,
            r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="black" stroke-width="1.6"/>"#,
            x - 4.0,
            y - 4.0,
            x + 4.0,
            y + 4.0,
            x - 4.0,
            y + 4.0,
            x + 4.0,
            y - 4.0
        );
    }
    let _ = writeln!(s, "</g>");
    // color-bar with log10(eps) ticks
    if !contours.levels.is_empty() {
        let bar_x = ml + pw + 24.0;
        let swatch = 16.0;
        let _ = writeln!(
            s,
            r#"<text x="{bar_x:.1}" y="{:.1}" font-family="sans-serif" font-size="11">log10(eps)</text>"#,
            mt - 8.0
        );
        for (rank, eps) in contours.levels.iter().enumerate() {
            let y = mt + rank as f64 * (swatch + 6.0);
            let color = LEVEL_PALETTE[rank % LEVEL_PALETTE.len()];
            let _ = writeln!(
                s,
                r#"<rect x="{bar_x:.1}" y="{y:.1}" width="{swatch}" height="{swatch}" fill="{color}"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{:.2}</text>"#,
                bar_x + swatch + 6.0,
                y + 12.0,
                eps.log10()
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// 17 significant digits, enough to round-trip f64.
fn fmt_full(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn complex_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Grid CSV: comment header, then one row per grid line (constant im),
/// first column the ordinate.
pub fn grid_to_csv(grid: &PseudospectrumGrid) -> String {
    let spec = &grid.spec;
    let mut s = String::new();
    let _ = writeln!(s, "# matrix_hash: {:016x}", grid.matrix_hash);
    let _ = writeln!(
        s,
        "# window: re [{}, {}] x im [{}, {}], {} x {} nodes",
        fmt_full(spec.re_min),
        fmt_full(spec.re_max),
        fmt_full(spec.im_min),
        fmt_full(spec.im_max),
        spec.nx,
        spec.ny
    );
    s.push_str("im\\re");
    for ix in 0..spec.nx {
        let _ = write!(s, ",{}", fmt_full(spec.x(ix)));
    }
    s.push('\n');
    for iy in 0..spec.ny {
        let _ = write!(s, "{}", fmt_full(spec.y(iy)));
        for ix in 0..spec.nx {
            let _ = write!(s, ",{}", fmt_full(grid.value(ix, iy)));
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct GridJson<'a> {
    spec: &'a crate::pseudospectra::GridSpec,
    matrix_hash: String,
    /// Row-major log10 values; non-finite entries serialize as null.
    values: &'a [f64],
}

pub fn grid_to_json(grid: &PseudospectrumGrid) -> Result<String> {
    let j = GridJson {
        spec: &grid.spec,
        matrix_hash: format!("{:016x}", grid.matrix_hash),
        values: &grid.values,
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

/// Cloud CSV: seed and epsilon in '#' comment lines, then
/// re,im,sample_index rows.
pub fn cloud_to_csv(cloud: &StructuredCloud) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# seed: {}", cloud.seed);
    let _ = writeln!(s, "# epsilon: {}", fmt_full(cloud.epsilon));
    let _ = writeln!(s, "# n_samples: {}", cloud.n_samples);
    let _ = writeln!(s, "# mode: {}", cloud.mode.label());
    s.push_str("re,im,sample_index\n");
    let n = cloud.matrix_dim;
    for (i, z) in cloud.eigenvalues.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", fmt_full(z.re), fmt_full(z.im), i / n);
    }
    s
}

#[derive(Serialize)]
struct CloudJson {
    epsilon: f64,
    n_samples: usize,
    seed: u64,
    mode: &'static str,
    matrix_dim: usize,
    max_real_part: f64,
    unstable_fraction: f64,
    e_norms: Vec<f64>,
    eigenvalues: Vec<[f64; 2]>,
}

pub fn cloud_to_json(cloud: &StructuredCloud) -> Result<String> {
    let j = CloudJson {
        epsilon: cloud.epsilon,
        n_samples: cloud.n_samples,
        seed: cloud.seed,
        mode: cloud.mode.label(),
        matrix_dim: cloud.matrix_dim,
        max_real_part: cloud.max_real_part,
        unstable_fraction: cloud.unstable_fraction,
        e_norms: cloud.e_norms.clone(),
        eigenvalues: complex_pairs(&cloud.eigenvalues),
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

fn class_label(c: StabilityClass) -> &'static str {
    match c {
        StabilityClass::Stable => "stable",
        // marginal spectra carry no damping; reported distinctly and mapped
        // to "stable (non-asymptotic)" in tables
        StabilityClass::Marginal => "stable (non-asymptotic)",
        StabilityClass::Unstable => "unstable",
    }
}

/// Sweep CSV: one row per parameter value with eigenvalues flattened.
pub fn sweep_to_csv(result: &SweepResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# mode: {}", result.mode.label());
    let _ = writeln!(s, "# swept: {}", result.swept.label());
    let n = result
        .points
        .first()
        .map(|p| p.spectrum.eigenvalues.len())
        .unwrap_or(0);
    s.push_str("value,admissible,verdict,spectral_abscissa");
    for j in 0..n {
        let _ = write!(s, ",eig{j}_re,eig{j}_im");
    }
    if result.points.iter().any(|p| p.normality.is_some()) {
        s.push_str(",kappa2_v,dep_c,dep_hf,dist_lower,dist_upper");
    }
    if result.points.iter().any(|p| p.structured.is_some()) {
        s.push_str(",epsilon,cloud_max_re,unstable_fraction");
    }
    s.push('\n');
    for p in &result.points {
        let _ = write!(
            s,
            "{},{},{},{}",
            fmt_full(p.value),
            p.admissible,
            class_label(p.verdict.class),
            fmt_full(p.spectrum.spectral_abscissa)
        );
        for z in &p.spectrum.eigenvalues {
            let _ = write!(s, ",{},{}", fmt_full(z.re), fmt_full(z.im));
        }
        if let Some(nr) = &p.normality {
            let k2 = match nr.kappa2_v {
                Kappa2::Value(v) => fmt_full(v),
                Kappa2::Defective => "defective".to_string(),
            };
            let _ = write!(
                s,
                ",{k2},{},{},{},{}",
                fmt_full(nr.dep_c),
                fmt_full(nr.dep_hf),
                fmt_full(nr.dist_lower),
                fmt_full(nr.dist_upper)
            );
        }
        if let Some(st) = &p.structured {
            let _ = write!(
                s,
                ",{},{},{}",
                fmt_full(st.epsilon),
                fmt_full(st.max_real_part),
                fmt_full(st.unstable_fraction)
            );
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct SweepPointJson {
    value: f64,
    admissible: bool,
    verdict: &'static str,
    spectral_abscissa: f64,
    eigenvalues: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    normality: Option<crate::normality::NormalityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    structured: Option<crate::analysis::StructuredSummary>,
}

#[derive(Serialize)]
struct SweepJson {
    mode: &'static str,
    swept: &'static str,
    points: Vec<SweepPointJson>,
}

pub fn sweep_to_json(result: &SweepResult) -> Result<String> {
    let j = SweepJson {
        mode: result.mode.label(),
        swept: result.swept.label(),
        points: result
            .points
            .iter()
            .map(|p| SweepPointJson {
                value: p.value,
                admissible: p.admissible,
                verdict: class_label(p.verdict.class),
                spectral_abscissa: p.spectrum.spectral_abscissa,
                eigenvalues: complex_pairs(&p.spectrum.eigenvalues),
                normality: p.normality.clone(),
                structured: p.structured,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

/// Plain-text table mirroring the published layout: one column per sweep
/// value, eigenvalues listed per column.
pub fn sweep_to_table(result: &SweepResult, value_scale: f64, value_unit: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "mode: {}   swept: {} [{}]",
        result.mode.label(),
        result.swept.label(),
        value_unit
    );
    let mut header = format!(
        "{:>14} |",
        format!("{} [{}]", result.swept.label(), value_unit)
    );
    for p in &result.points {
        let _ = write!(header, " {:>22.6}", p.value / value_scale);
    }
    let _ = writeln!(s, "{header}");
    let n = result
        .points
        .first()
        .map(|p| p.spectrum.eigenvalues.len())
        .unwrap_or(0);
    for j in 0..n {
        let mut row = format!("{:>14} |", format!("sigma(A)[{j}]"));
        for p in &result.points {
            let z = p.spectrum.eigenvalues[j];
            let cell = if z.im.abs() <= 1e-9 * z.re.abs().max(1.0) {
                format!("{:+.4}", z.re)
            } else {
                format!("{:+.4}{:+.2}i", z.re, z.im)
            };
            let _ = write!(row, " {cell:>22}");
        }
        let _ = writeln!(s, "{row}");
    }
    let mut row = format!("{:>14} |", "verdict");
    for p in &result.points {
        let _ = write!(row, " {:>22}", class_label(p.verdict.class));
    }
    let _ = writeln!(s, "{row}");
    s
}

pub fn write_string(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    write_string(path, &s)
}

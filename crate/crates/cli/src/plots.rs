//! Static SVG figures rendered from the CSV and JSON files of a bundle.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use sectorscope::changepoint::PosteriorReport;
use sectorscope::rmt::{mp_bounds, mp_density, MpBounds};
use sectorscope::sectors::Dendrogram;

use crate::bundle::Bundle;
use crate::svg::{colour, document, Frame, Panel, HEIGHT, WIDTH};
use crate::tables::{self, EigenRow, RmtRow, SeriesRow, SurfaceGrid};

/// Marchenko-Pastur parameters drawn over the pooled eigenvalue histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub q: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn area(&self) -> f64 {
        self.edges.windows(2).zip(&self.density).map(|(e, d)| (e[1] - e[0]) * d).sum()
    }
}

/// Density-normalised histogram on `range`; values outside are clamped to the end bins.
pub fn density_histogram(values: &[f64], range: (f64, f64), bins: usize) -> Histogram {
    let width = (range.1 - range.0) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = ((v - range.0) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[i] += 1;
    }
    let n = values.len().max(1) as f64;
    Histogram {
        edges: (0..=bins).map(|i| range.0 + i as f64 * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
    }
}

/// Horizontal extent of the density plot: from zero to 10% past the larger
/// of the top eigenvalue and the upper edge.
pub fn density_x_range(eigenvalues: &[f64], b: &MpBounds) -> (f64, f64) {
    let top = eigenvalues.iter().copied().fold(b.lambda_plus, f64::max);
    (0.0, 1.1 * top)
}

/// Midpoint-rule integral of the overlay curve over `range`.
pub fn overlay_area(b: &MpBounds, range: (f64, f64), steps: usize) -> f64 {
    let h = (range.1 - range.0) / steps as f64;
    (0..steps).map(|i| mp_density(range.0 + (i as f64 + 0.5) * h, b) * h).sum()
}

const CURVE_POINTS: usize = 400;
const BINS: usize = 40;

pub fn eigen_density_panel(eigenvalues: &[f64], b: &MpBounds) -> Panel {
    let range = density_x_range(eigenvalues, b);
    let hist = density_histogram(eigenvalues, range, BINS);
    let curve: Vec<(f64, f64)> = (0..=CURVE_POINTS)
        .map(|i| {
            let x = range.0 + (range.1 - range.0) * i as f64 / CURVE_POINTS as f64;
            (x, mp_density(x, b))
        })
        .collect();
    let ymax = hist.density.iter().chain(curve.iter().map(|c| &c.1)).copied().fold(0.0, f64::max) * 1.05;
    let f = Frame::new(range, (0.0, ymax));
    let mut p = Panel::new("Eigenvalue density and Marchenko-Pastur law");
    for (e, &d) in hist.edges.windows(2).zip(&hist.density) {
        if d > 0.0 {
            let (x0, x1) = (f.px(e[0]), f.px(e[1]));
            p.rect(x0, f.py(d), x1 - x0, f.py(0.0) - f.py(d), "#9ecae1", 0.9);
        }
    }
    let pts: Vec<(f64, f64)> = curve.iter().map(|&(x, y)| (f.px(x), f.py(y))).collect();
    p.polyline(&pts, colour(1), 2.0);
    for (edge, name) in [(b.lambda_minus, "λ−"), (b.lambda_plus, "λ+")] {
        p.line(f.px(edge), Frame::top(), f.px(edge), Frame::bottom(), "#555555", 1.0, 0.7);
        p.text(f.px(edge), Frame::top() + 12.0, name, "middle", 11.0);
    }
    f.axes(&mut p, "eigenvalue", "density");
    f.legend(&mut p, &[("empirical".into(), "#9ecae1"), (format!("MP, Q = {:.2}", b.q), colour(1))]);
    p
}

/// Line panel with shared integer time axis.
pub fn lines_panel(title: &str, ylabel: &str, times: &[usize], series: &[(String, Vec<f64>)]) -> Panel {
    let x = (
        times.first().copied().unwrap_or(0) as f64,
        times.last().copied().unwrap_or(1) as f64,
    );
    let all = series.iter().flat_map(|s| s.1.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let pad = 0.05 * (hi - lo);
    let f = Frame::new(x, (lo - pad, hi + pad));
    let mut p = Panel::new(title);
    for (i, (_, ys)) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = times.iter().zip(ys).map(|(&t, &y)| (f.px(t as f64), f.py(y))).collect();
        p.polyline(&pts, colour(i), 1.5);
    }
    f.axes(&mut p, "t (return index)", ylabel);
    if series.len() > 1 {
        let entries: Vec<(String, &str)> = series.iter().enumerate().map(|(i, s)| (s.0.clone(), colour(i))).collect();
        f.legend(&mut p, &entries);
    }
    p
}

/// Largest eigenvalue with the upper edge, then the count above the edge.
pub fn rmt_path_panels(rows: &[RmtRow]) -> Vec<Panel> {
    let times: Vec<usize> = rows.iter().map(|r| r.t).collect();
    vec![
        lines_panel(
            "Largest eigenvalue",
            "λ1",
            &times,
            &[
                ("λ1".into(), rows.iter().map(|r| r.lambda1).collect()),
                ("λ+".into(), rows.iter().map(|r| r.lambda_plus).collect()),
            ],
        ),
        lines_panel(
            "Eigenvalues above the upper edge",
            "count",
            &times,
            &[("non-random".into(), rows.iter().map(|r| r.nonrandom as f64).collect())],
        ),
    ]
}

pub fn dendrogram_panel(title: &str, d: &Dendrogram) -> Panel {
    let n = d.labels.len();
    let order = d.leaf_order();
    let mut xpos = vec![0.0; n + d.merges.len()];
    for (slot, &leaf) in order.iter().enumerate() {
        xpos[leaf] = slot as f64;
    }
    let mut ypos = vec![0.0; n + d.merges.len()];
    let top = d.merges.iter().map(|m| m.height).fold(0.0, f64::max);
    let f = Frame::new((-0.5, n as f64 - 0.5), (0.0, if top > 0.0 { top * 1.05 } else { 1.0 }));
    let mut p = Panel::new(title);
    for (i, m) in d.merges.iter().enumerate() {
        let id = n + i;
        xpos[id] = (xpos[m.a] + xpos[m.b]) / 2.0;
        ypos[id] = m.height;
        let (xa, xb) = (f.px(xpos[m.a]), f.px(xpos[m.b]));
        let y = f.py(m.height);
        p.polyline(&[(xa, f.py(ypos[m.a])), (xa, y), (xb, y), (xb, f.py(ypos[m.b]))], colour(0), 1.5);
    }
    for (slot, &leaf) in order.iter().enumerate() {
        p.text(f.px(slot as f64), Frame::bottom() + 16.0, &d.labels[leaf], "middle", 11.0);
    }
    let (l, b) = (Frame::left(), Frame::bottom());
    p.line(l, Frame::top(), l, b, "#000000", 1.0, 1.0);
    for i in 0..=4 {
        let v = f.y.0 + (f.y.1 - f.y.0) * i as f64 / 4.0;
        p.line(l - 5.0, f.py(v), l, f.py(v), "#000000", 1.0, 1.0);
        p.text(l - 8.0, f.py(v) + 4.0, &format!("{v:.3}"), "end", 11.0);
    }
    p.text_rotated(14.0, (Frame::top() + b) / 2.0, &format!("{} linkage height", d.linkage), -90.0, 12.0);
    p
}

/// Returns with a vertical rule at every candidate changepoint, its opacity
/// proportional to the posterior mass there.
pub fn changepoint_panel(label: &str, returns: &[f64], report: &PosteriorReport) -> Panel {
    let times: Vec<usize> = (0..returns.len()).collect();
    let title = format!("{label}: changepoint posterior (m = {})", report.map_m);
    let mut p = lines_panel(&title, "log return", &times, &[(label.to_string(), returns.to_vec())]);
    let peak = report.distributions.iter().flat_map(|d| d.values()).copied().fold(0.0, f64::max);
    if peak > 0.0 {
        let f = Frame::new((0.0, returns.len().saturating_sub(1) as f64), (0.0, 1.0));
        for (k, d) in report.distributions.iter().enumerate() {
            for (&t, &mass) in d {
                let x = f.px(t as f64);
                p.line(x, Frame::top(), x, Frame::bottom(), colour(k + 1), 1.5, mass / peak);
            }
        }
    }
    p
}

const SURFACE_SLICES: usize = 48;

/// Oblique waterfall view of a log-power surface: one filled trace per
/// sampled time, drawn back to front so nearer traces hide farther ones.
pub fn surface_panel(label: &str, grid: &SurfaceGrid) -> Result<Panel> {
    let (t_len, k_len) = (grid.values.len(), grid.freqs.len());
    if t_len == 0 || k_len < 2 {
        bail!("surface {label} is empty");
    }
    let flat = grid.values.iter().flatten().copied();
    let (lo, hi) = flat.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi - lo > 1e-12 { hi - lo } else { 1.0 };
    let (x0, y0) = (Frame::left() + 10.0, Frame::bottom() - 10.0);
    let (fw, depth, zh) = (0.55 * WIDTH, (0.3 * WIDTH, 0.35 * HEIGHT), 0.3 * HEIGHT);
    let nu_max = grid.freqs[k_len - 1].max(1e-12);
    let slices: Vec<usize> = (0..SURFACE_SLICES.min(t_len))
        .map(|i| i * (t_len - 1) / (SURFACE_SLICES.min(t_len) - 1).max(1))
        .collect();
    let mut p = Panel::new(&format!("{label}: time-varying log spectrum"));
    for &t in slices.iter().rev() {
        let s = t as f64 / (t_len - 1).max(1) as f64;
        let (ox, oy) = (x0 + s * depth.0, y0 - s * depth.1);
        let mut pts: Vec<(f64, f64)> = grid
            .freqs
            .iter()
            .zip(&grid.values[t])
            .map(|(&nu, &v)| (ox + nu / nu_max * fw, oy - (v - lo) / span * zh))
            .collect();
        pts.push((ox + fw, oy));
        pts.push((ox, oy));
        p.polygon(&pts, "#ffffff", colour(0));
    }
    p.line(x0, y0, x0 + fw, y0, "#000000", 1.0, 1.0);
    p.line(x0 + fw, y0, x0 + fw + depth.0, y0 - depth.1, "#000000", 1.0, 1.0);
    p.text(x0 + fw / 2.0, y0 + 24.0, "frequency (0 to 0.5)", "middle", 12.0);
    p.text(x0 + fw + depth.0 / 2.0 + 30.0, y0 - depth.1 / 2.0, &format!("time (0 to {})", t_len - 1), "start", 12.0);
    p.text(x0, Frame::top() + 20.0, &format!("log power {lo:.2} to {hi:.2}"), "start", 12.0);
    Ok(p)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
}

/// Files in `dir` ending in `suffix`, sorted, with the suffix stripped.
pub fn stems_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(suffix) {
            out.push(stem.to_string());
        }
    }
    out.sort();
    Ok(out)
}

fn density_figure(root: &Path) -> Result<String> {
    let rows: Vec<EigenRow> = tables::read_rows(&root.join("rmt").join("eigenvalues.csv"))?;
    let o: Overlay = read_json(&root.join("rmt").join("overlay.json"))?;
    let eig: Vec<f64> = rows.iter().map(|r| r.eigenvalue).collect();
    Ok(document(&[eigen_density_panel(&eig, &mp_bounds(o.q, o.sigma2)?)]))
}

fn rmt_paths_figure(root: &Path) -> Result<String> {
    let rows: Vec<RmtRow> = tables::read_rows(&root.join("rmt").join("series.csv"))?;
    Ok(document(&rmt_path_panels(&rows)))
}

fn sector_paths_figure(root: &Path) -> Result<String> {
    let (times, cols) = tables::read_paths(&root.join("sectors").join("paths.csv"))?;
    Ok(document(&[lines_panel("Sector explained variance", "λ̃1", &times, &cols)]))
}

fn dendrogram_figure(root: &Path, dir: &str, title: &str) -> Result<String> {
    let d: Dendrogram = read_json(&root.join(dir).join("dendrogram.json"))?;
    Ok(document(&[dendrogram_panel(title, &d)]))
}

fn changepoint_figure(dir: &Path, stem: &str) -> Result<String> {
    let report: PosteriorReport = read_json(&dir.join(format!("{stem}.posterior.json")))?;
    let series: Vec<SeriesRow> = tables::read_rows(&dir.join(format!("{stem}.series.csv")))?;
    let x: Vec<f64> = series.iter().map(|r| r.value).collect();
    Ok(document(&[changepoint_panel(&report.label, &x, &report)]))
}

fn surface_figure(dir: &Path, stem: &str) -> Result<String> {
    let grid = tables::read_surface(&dir.join(format!("{stem}.surface.csv")))?;
    Ok(document(&[surface_panel(stem, &grid)?]))
}

/// Renders every figure whose inputs are present in the bundle. Missing
/// inputs skip a figure with a log entry; a failing figure is logged and
/// the rest still render. Returns the relative paths written.
pub fn emit_plots(bundle: &mut Bundle) -> Result<Vec<String>> {
    let root = bundle.root().to_path_buf();
    let mut jobs: Vec<(String, Box<dyn Fn() -> Result<String>>, Vec<String>)> = Vec::new();
    let r = root.clone();
    jobs.push((
        "plots/eigen_density.svg".into(),
        Box::new(move || density_figure(&r)),
        vec!["rmt/eigenvalues.csv".into(), "rmt/overlay.json".into()],
    ));
    let r = root.clone();
    jobs.push(("plots/rmt_paths.svg".into(), Box::new(move || rmt_paths_figure(&r)), vec!["rmt/series.csv".into()]));
    let r = root.clone();
    jobs.push((
        "plots/sector_paths.svg".into(),
        Box::new(move || sector_paths_figure(&r)),
        vec!["sectors/paths.csv".into()],
    ));
    for (dir, title) in [
        ("sectors", "Sectors by explained-variance path"),
        ("spectra", "Representatives by spectral surface"),
        ("mjw", "Representatives by changepoint sets"),
    ] {
        let r = root.clone();
        jobs.push((
            format!("plots/{dir}_dendrogram.svg"),
            Box::new(move || dendrogram_figure(&r, dir, title)),
            vec![format!("{dir}/dendrogram.json")],
        ));
    }
    let cp = root.join("changepoints");
    if cp.is_dir() {
        for stem in stems_with_suffix(&cp, ".posterior.json")? {
            let d = cp.clone();
            let s = stem.clone();
            jobs.push((
                format!("plots/{stem}_changepoints.svg"),
                Box::new(move || changepoint_figure(&d, &s)),
                vec![format!("changepoints/{stem}.series.csv")],
            ));
        }
    }
    let sp = root.join("spectra");
    if sp.is_dir() {
        for stem in stems_with_suffix(&sp, ".surface.csv")? {
            let d = sp.clone();
            let s = stem.clone();
            jobs.push((format!("plots/{stem}_surface.svg"), Box::new(move || surface_figure(&d, &s)), vec![]));
        }
    }

    let mut written = Vec::new();
    for (rel, render, inputs) in jobs {
        if let Some(missing) = inputs.iter().find(|i| !bundle.path(i).is_file()) {
            log::info!("skipping {rel}: {missing} not in bundle");
            continue;
        }
        match render() {
            Ok(svg) => {
                bundle.write(&rel, svg)?;
                written.push(rel);
            }
            Err(e) => log::warn!("plot {rel} failed: {e:#}"),
        }
    }
    Ok(written)
}

//! One function per subcommand. Argument structs double as the clap definitions.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};

use sectorscope::changepoint::{run_rjmcmc, PosteriorReport, RjmcmcConfig};
use sectorscope::ingest::{load_prices_for, log_returns, read_sector_map, AssetClass, PricePanel, ReturnsPanel};
use sectorscope::mjw::{mjw_matrix, DistributionSet, MjwOptions};
use sectorscope::portfolio::{sector_members, sweep};
use sectorscope::rollcorr::rolling_correlation_series;
use sectorscope::sectors::Linkage;
use sectorscope::spectra::tv_spectrum_from_report;

use crate::bundle::{file_stem, Bundle, Manifest};
use crate::config::PipelineConfig;
use crate::pipeline::{self, column, edge_report, representatives, rmt_stage, sectors_stage, write_changepoints};
use crate::plots::{self, changepoint_panel, dendrogram_panel, eigen_density_panel, rmt_path_panels, stems_with_suffix};
use crate::svg::document;
use crate::tables::{self, AlgoColumns};

fn load_returns(panel: &Path) -> Result<ReturnsPanel> {
    let prices = PricePanel::from_json_file(panel).with_context(|| format!("loading panel {}", panel.display()))?;
    Ok(log_returns(&prices))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Long-format price CSV with columns date,ticker,close.
    #[arg(long)]
    pub prices: PathBuf,
    /// Sector map CSV with columns ticker,asset_class,sector.
    #[arg(long)]
    pub sectors: PathBuf,
    #[arg(long)]
    pub asset_class: Option<AssetClass>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    let panel = load_prices_for(&a.prices, &a.sectors, a.asset_class)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    panel.to_json_file(&a.out)?;
    log::info!("{} dates × {} assets → {}", panel.len(), panel.n_assets(), a.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct RollcorrArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, default_value_t = 150)]
    pub window: usize,
    /// Directory receiving one CSV per window end.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn rollcorr(a: &RollcorrArgs) -> Result<()> {
    let panel = load_returns(&a.panel)?;
    let series = rolling_correlation_series(&panel, a.window)?;
    std::fs::create_dir_all(&a.out)?;
    let mut count = 0;
    for m in series {
        let m = m?;
        write(&a.out.join(format!("corr_t{:06}.csv", m.t)), tables::correlation_csv(&m)?)?;
        count += 1;
    }
    log::info!("{count} matrices → {}", a.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct RmtArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, default_value_t = 150)]
    pub window: usize,
    /// Series CSV: t,lambda1,nonrandom,lambda_plus,lambda_minus.
    #[arg(long)]
    pub out: PathBuf,
    /// Density and path figure.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// JSON comparison of quoted reference edges with the formula.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn rmt(a: &RmtArgs) -> Result<()> {
    let panel = load_returns(&a.panel)?;
    let (series, overlay) = rmt_stage(&panel, a.window)?;
    write(&a.out, tables::rmt_csv(&series)?)?;
    if let Some(p) = &a.plot {
        let pooled: Vec<f64> = series.spectra.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
        let b = sectorscope::rmt::mp_bounds(overlay.q, overlay.sigma2)?;
        let mut panels = vec![eigen_density_panel(&pooled, &b)];
        panels.extend(rmt_path_panels(&tables::rmt_rows(&series)));
        write(p, document(&panels))?;
    }
    let (edges, _) = edge_report();
    if let Some(p) = &a.report {
        write(p, serde_json::to_string_pretty(&edges)? + "\n")?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SectorsArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, default_value_t = 150)]
    pub window: usize,
    #[arg(long, default_value_t = Linkage::Average)]
    pub linkage: Linkage,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn sectors(a: &SectorsArgs) -> Result<()> {
    let panel = load_returns(&a.panel)?;
    let (paths, clustered) = sectors_stage(&panel, a.window, a.linkage)?;
    write(&a.out.join("paths.csv"), tables::paths_csv(&paths)?)?;
    if let Some((d, dendro)) = clustered {
        write(&a.out.join("distance.csv"), tables::distance_csv(&d)?)?;
        write(&a.out.join("dendrogram.json"), serde_json::to_string_pretty(&dendro)? + "\n")?;
        write(
            &a.out.join("dendrogram.svg"),
            document(&[dendrogram_panel("Sectors by explained-variance path", &dendro)]),
        )?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ChangepointArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// A ticker, or a sector name standing for its representative ticker.
    #[arg(long)]
    pub series: String,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 40)]
    pub tmin: usize,
    #[arg(long, default_value_t = 10)]
    pub max_segments: usize,
    #[arg(long, default_value_t = 10)]
    pub basis: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Resolves `name` as a ticker first, then as a sector.
fn resolve_series(panel: &ReturnsPanel, name: &str) -> Result<String> {
    if panel.column_of(name).is_some() {
        return Ok(name.to_string());
    }
    representatives(panel, &Default::default())?
        .into_iter()
        .find(|r| r.sector == name)
        .map(|r| r.ticker)
        .ok_or_else(|| anyhow!("{name:?} is neither a ticker nor a sector of the panel"))
}

pub fn changepoints(a: &ChangepointArgs) -> Result<()> {
    let panel = load_returns(&a.panel)?;
    let ticker = resolve_series(&panel, &a.series)?;
    let x = column(&panel, &ticker)?;
    let cfg = RjmcmcConfig {
        iterations: a.iterations,
        burnin: a.burnin,
        t_min: a.tmin,
        max_segments: a.max_segments,
        n_basis: a.basis,
        seed: a.seed,
        ..Default::default()
    };
    log::info!("sampling {} ({ticker}), {} returns", a.series, x.len());
    let chain = run_rjmcmc(&x, &cfg)?;
    let mut bundle = Bundle::create(&a.out)?;
    let report = write_changepoints(&mut bundle, ".", &a.series, &x, &chain)?;
    write(
        &a.out.join(format!("{}.changepoints.svg", file_stem(&a.series))),
        document(&[changepoint_panel(&a.series, &x, &report)]),
    )?;
    log::info!("MAP m = {}, modal changepoints {:?}", report.map_m, report.posterior().modal_locations());
    Ok(())
}

/// Every `*.posterior.json` in `dir`, sorted by file name.
pub fn read_posteriors(dir: &Path) -> Result<Vec<PosteriorReport>> {
    let stems = stems_with_suffix(dir, ".posterior.json")?;
    if stems.is_empty() {
        bail!("no *.posterior.json files in {}", dir.display());
    }
    stems
        .iter()
        .map(|s| {
            let path = dir.join(format!("{s}.posterior.json"));
            let text = std::fs::read_to_string(&path)?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct SpectraArgs {
    #[arg(long)]
    pub posteriors: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = Linkage::Average)]
    pub linkage: Linkage,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn spectra(a: &SpectraArgs) -> Result<()> {
    let reports = read_posteriors(&a.posteriors)?;
    let surfaces = reports
        .iter()
        .map(|r| tv_spectrum_from_report(r, a.grid))
        .collect::<Result<Vec<_>, _>>()?;
    let mut bundle = Bundle::create(&a.out)?;
    pipeline::write_spectra(&mut bundle, ".", &surfaces, a.linkage)?;
    for s in &surfaces {
        let stem = file_stem(&s.label);
        let grid = tables::read_surface(&a.out.join(format!("{stem}.surface.csv")))?;
        write(&a.out.join(format!("{stem}.surface.svg")), document(&[plots::surface_panel(&s.label, &grid)?]))?;
    }
    if a.out.join("dendrogram.json").is_file() {
        let d = serde_json::from_str(&std::fs::read_to_string(a.out.join("dendrogram.json"))?)?;
        write(&a.out.join("dendrogram.svg"), document(&[dendrogram_panel("Series by spectral surface", &d)]))?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct MjwArgs {
    #[arg(long)]
    pub posteriors: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub order: f64,
    /// Divide ground distances by the series length.
    #[arg(long)]
    pub normalize: bool,
    /// Distance between an empty and a non-empty changepoint set.
    #[arg(long)]
    pub empty_penalty: Option<f64>,
    #[arg(long, default_value_t = Linkage::Average)]
    pub linkage: Linkage,
    #[arg(long)]
    pub out: PathBuf,
    /// Dendrogram figure; its merge list goes next to it as JSON.
    #[arg(long)]
    pub dendrogram: Option<PathBuf>,
}

pub fn mjw(a: &MjwArgs) -> Result<()> {
    let reports = read_posteriors(&a.posteriors)?;
    let sets: Vec<DistributionSet> = reports.iter().map(DistributionSet::from_report).collect();
    let out = mjw_matrix(
        &sets,
        &MjwOptions {
            order: a.order,
            empty_penalty: a.empty_penalty,
            normalize: a.normalize,
        },
    )?;
    if !out.empty_labels.is_empty() {
        log::warn!("no changepoints in {:?}; scored with penalty {}", out.empty_labels, out.penalty);
    }
    write(&a.out, tables::distance_csv(&out.matrix)?)?;
    if let Some(svg) = &a.dendrogram {
        match pipeline::cluster_if_possible(&out.matrix, a.linkage)? {
            Some(d) => {
                write(&svg.with_extension("json"), serde_json::to_string_pretty(&d)? + "\n")?;
                write(svg, document(&[dendrogram_panel("Series by changepoint sets", &d)]))?;
            }
            None => log::info!("one series only; no dendrogram"),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

#[derive(Debug, Args)]
pub struct PortfolioArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Sector map replacing the one stored in the panel.
    #[arg(long)]
    pub sectors: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Algo::Both)]
    pub algo: Algo,
    #[arg(long, value_delimiter = ',', default_value = "120,150,180")]
    pub windows: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
    pub best: Vec<usize>,
    /// Score each day's selection on the following day's returns.
    #[arg(long)]
    pub oos: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn portfolio(a: &PortfolioArgs) -> Result<()> {
    let mut prices = PricePanel::from_json_file(&a.panel)?;
    if let Some(s) = &a.sectors {
        prices = prices.with_sector_map(&read_sector_map(s)?)?;
    }
    let panel = log_returns(&prices);
    let rows = sweep(&panel, &sector_members(&panel), &a.windows, &a.best, a.oos)?;
    let cols = AlgoColumns {
        algo1: a.algo != Algo::Two,
        algo2: a.algo != Algo::One,
    };
    write(&a.out, tables::sweep_csv(&rows, cols)?)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// TOML config; defaults to the file named by SECTORSCOPE_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub sectors: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub linkage: Option<Linkage>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub oos: bool,
    #[arg(long)]
    pub no_plots: bool,
}

impl PipelineArgs {
    /// The resolved config with every given flag applied on top.
    pub fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::resolve(self.config.as_deref())?;
        if let Some(v) = &self.prices {
            cfg.prices = v.clone();
        }
        if let Some(v) = &self.sectors {
            cfg.sectors = v.clone();
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.linkage {
            cfg.linkage = v;
        }
        if let Some(v) = self.iterations {
            cfg.rjmcmc.iterations = v;
        }
        if let Some(v) = self.burnin {
            cfg.rjmcmc.burnin = v;
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        cfg.out_of_sample |= self.oos;
        cfg.plots &= !self.no_plots;
        Ok(cfg)
    }
}

pub fn run_pipeline(a: &PipelineArgs) -> Result<Manifest> {
    let cfg = a.config()?;
    let manifest = pipeline::run_pipeline(&cfg)?;
    log::info!("{} artifacts in {}", manifest.artifacts.len(), cfg.out.display());
    Ok(manifest)
}

#[derive(Debug, Args)]
pub struct PlotsArgs {
    /// Output directory of an earlier pipeline run.
    #[arg(long)]
    pub bundle: PathBuf,
}

pub fn plots(a: &PlotsArgs) -> Result<()> {
    if !a.bundle.is_dir() {
        bail!("bundle {} is not a directory", a.bundle.display());
    }
    let mut bundle = Bundle::open(&a.bundle)?;
    let written = plots::emit_plots(&mut bundle)?;
    log::info!("{} figures", written.len());
    bundle.finish()?;
    Ok(())
}

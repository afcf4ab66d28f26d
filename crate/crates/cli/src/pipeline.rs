//! End-to-end batch run: ingest, correlation eigenspectra, sector clustering,
//! changepoints per representative series, spectral and changepoint-set
//! distances, portfolio sweeps, figures and a hashed manifest.

use std::collections::BTreeMap;
use std::fmt;

use anyhow::{anyhow, Context};
use serde::Serialize;
use thiserror::Error;

use sectorscope::changepoint::{run_many, Chain, PosteriorReport, RjmcmcConfig};
use sectorscope::ingest::{load_prices_for, log_returns, sector_partition, ReturnsPanel};
use sectorscope::mjw::{mjw_matrix, DistributionSet, MjwMatrix, MjwOptions};
use sectorscope::portfolio::{sector_members, sweep};
use sectorscope::rmt::{reference_edge_checks, time_varying_rmt, EdgeCheck, EigenSpectrumSeries};
use sectorscope::rollcorr::rolling_correlation_all;
use sectorscope::sectors::{agglomerative_cluster, l1_distance_matrix, variance_paths, Dendrogram, DistanceMatrix, Linkage};
use sectorscope::spectra::{spectral_distance_matrix, tv_spectrum_from_report, TvSpectrum};

use crate::bundle::{file_stem, Bundle, Manifest};
use crate::config::PipelineConfig;
use crate::plots::{emit_plots, Overlay};
use crate::tables::{self, AlgoColumns};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Ingest,
    Rollcorr,
    Rmt,
    Sectors,
    Changepoints,
    Spectra,
    Mjw,
    Portfolio,
    Plots,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Validate => "validate",
            Stage::Ingest => "ingest",
            Stage::Rollcorr => "rollcorr",
            Stage::Rmt => "rmt",
            Stage::Sectors => "sectors",
            Stage::Changepoints => "changepoints",
            Stage::Spectra => "spectra",
            Stage::Mjw => "mjw",
            Stage::Portfolio => "portfolio",
            Stage::Plots => "plots",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Error)]
#[error("stage {stage} failed: {source:#}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: anyhow::Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<anyhow::Error>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            source: e.into(),
        })
    }
}

/// Sector whose first-listed ticker (or configured choice) stands in for it
/// in the changepoint stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Representative {
    pub sector: String,
    pub ticker: String,
}

pub fn representatives(panel: &ReturnsPanel, chosen: &BTreeMap<String, String>) -> anyhow::Result<Vec<Representative>> {
    for sector in chosen.keys() {
        if !panel.sector_names().contains(sector) {
            return Err(anyhow!("representative given for unknown sector {sector:?}"));
        }
    }
    sector_partition(panel)
        .into_iter()
        .map(|(sector, sub)| {
            let ticker = match chosen.get(&sector) {
                Some(t) if sub.column_of(t).is_some() => t.clone(),
                Some(t) => return Err(anyhow!("{t} is not in sector {sector:?}")),
                None => sub.tickers().into_iter().min().expect("sectors are non-empty"),
            };
            Ok(Representative { sector, ticker })
        })
        .collect()
}

pub fn column(panel: &ReturnsPanel, ticker: &str) -> anyhow::Result<Vec<f64>> {
    let j = panel.column_of(ticker).ok_or_else(|| anyhow!("no ticker {ticker:?} in panel"))?;
    Ok(panel.returns().column(j).to_vec())
}

/// Eigenspectra of every window and the pooled overlay parameters.
pub fn rmt_stage(panel: &ReturnsPanel, window: usize) -> anyhow::Result<(EigenSpectrumSeries, Overlay)> {
    let mats = rolling_correlation_all(panel, window)?;
    let series = time_varying_rmt(&mats, window)?;
    let n = panel.n_assets() as f64;
    let sigma2 = mats.iter().map(|m| m.element_variance).sum::<f64>() / mats.len() as f64;
    Ok((
        series,
        Overlay {
            q: window as f64 / n,
            sigma2,
        },
    ))
}

/// Per-sector paths and their clustering. Sectors with a single asset have
/// no correlation structure and are left out with a warning.
pub fn sectors_stage(
    panel: &ReturnsPanel,
    window: usize,
    linkage: Linkage,
) -> anyhow::Result<(Vec<sectorscope::sectors::VariancePath>, Option<(DistanceMatrix, Dendrogram)>)> {
    let mut parts = sector_partition(panel);
    parts.retain(|name, sub| {
        let keep = sub.n_assets() >= 2;
        if !keep {
            log::warn!("sector {name:?} has one asset; left out of sector clustering");
        }
        keep
    });
    let paths = variance_paths(&parts, window)?;
    if paths.len() < 2 {
        log::info!("fewer than two sectors with paths; no sector dendrogram");
        return Ok((paths, None));
    }
    let d = l1_distance_matrix(&paths)?;
    let dendro = agglomerative_cluster(&d, linkage)?;
    Ok((paths, Some((d, dendro))))
}

pub fn cluster_if_possible(d: &DistanceMatrix, linkage: Linkage) -> anyhow::Result<Option<Dendrogram>> {
    if d.len() < 2 {
        return Ok(None);
    }
    Ok(Some(agglomerative_cluster(d, linkage)?))
}

/// Summary written to `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub dates: usize,
    pub assets: usize,
    pub window: usize,
    pub seed: u64,
    pub sectors: Vec<String>,
    pub representatives: Vec<Representative>,
    pub changepoints: Vec<ChangepointSummary>,
    pub mjw_empty_sets: Vec<String>,
    pub mjw_penalty: f64,
    pub mean_nonrandom: f64,
    /// Upper edges quoted for the reference panels against the formula.
    pub reference_edges: Vec<EdgeCheck>,
    pub reference_edge_divergence: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChangepointSummary {
    pub label: String,
    pub ticker: String,
    pub map_m: usize,
    pub modal_locations: Vec<usize>,
    pub birth_acceptance: f64,
    pub within_acceptance: f64,
}

fn rate((tried, accepted): (usize, usize)) -> f64 {
    if tried == 0 {
        0.0
    } else {
        accepted as f64 / tried as f64
    }
}

/// Logs and returns the published-edge comparison.
pub fn edge_report() -> (Vec<EdgeCheck>, bool) {
    let checks = reference_edge_checks();
    for c in checks.iter().filter(|c| c.diverges) {
        log::warn!(
            "{} reference edge {} differs from the formula value {:.4} at Q = {}",
            c.label,
            c.reference_lambda_plus,
            c.formula_lambda_plus,
            c.q
        );
    }
    let any = checks.iter().any(|c| c.diverges);
    (checks, any)
}

/// Runs every stage and writes the bundle under `cfg.out`. Returns the manifest.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest, PipelineError> {
    cfg.validate().at(Stage::Validate)?;
    let mut bundle = Bundle::create(&cfg.out).at(Stage::Validate)?;

    log::info!("ingest");
    let prices = load_prices_for(&cfg.prices, &cfg.sectors, cfg.asset_class).at(Stage::Ingest)?;
    let panel = log_returns(&prices);
    if panel.len() <= cfg.window {
        return Err(anyhow!("{} return rows cannot fill a window of {}", panel.len(), cfg.window)).at(Stage::Ingest);
    }
    bundle.write_json("panel.json", &prices).at(Stage::Ingest)?;
    bundle.write("returns.csv", tables::returns_csv(&panel).at(Stage::Ingest)?).at(Stage::Ingest)?;

    log::info!("rolling correlations");
    let latest = sectorscope::rollcorr::rolling_correlation(&panel, cfg.window, panel.len() - 1).at(Stage::Rollcorr)?;
    bundle.write("rollcorr/latest.csv", tables::correlation_csv(&latest).at(Stage::Rollcorr)?).at(Stage::Rollcorr)?;

    log::info!("eigenspectra");
    let (series, overlay) = rmt_stage(&panel, cfg.window).at(Stage::Rmt)?;
    bundle.write("rmt/series.csv", tables::rmt_csv(&series).at(Stage::Rmt)?).at(Stage::Rmt)?;
    bundle.write("rmt/eigenvalues.csv", tables::eigenvalues_csv(&series).at(Stage::Rmt)?).at(Stage::Rmt)?;
    bundle.write_json("rmt/overlay.json", &overlay).at(Stage::Rmt)?;
    let (edges, diverges) = edge_report();
    bundle.write_json("rmt/reference_edges.json", &edges).at(Stage::Rmt)?;

    log::info!("sector paths");
    let (paths, clustered) = sectors_stage(&panel, cfg.window, cfg.linkage).at(Stage::Sectors)?;
    bundle.write("sectors/paths.csv", tables::paths_csv(&paths).at(Stage::Sectors)?).at(Stage::Sectors)?;
    if let Some((d, dendro)) = &clustered {
        bundle.write("sectors/distance.csv", tables::distance_csv(d).at(Stage::Sectors)?).at(Stage::Sectors)?;
        bundle.write_json("sectors/dendrogram.json", dendro).at(Stage::Sectors)?;
    }

    let reps = representatives(&panel, &cfg.representatives).at(Stage::Changepoints)?;
    log::info!("changepoint chains for {} representatives", reps.len());
    let inputs: Vec<Vec<f64>> = reps.iter().map(|r| column(&panel, &r.ticker)).collect::<anyhow::Result<_>>().at(Stage::Changepoints)?;
    let rj = RjmcmcConfig {
        seed: cfg.seed,
        ..cfg.rjmcmc.clone()
    };
    let chains = run_many(&inputs, &rj).at(Stage::Changepoints)?;
    let mut reports = Vec::with_capacity(chains.len());
    let mut summaries = Vec::with_capacity(chains.len());
    for ((rep, x), chain) in reps.iter().zip(&inputs).zip(&chains) {
        let report = write_changepoints(&mut bundle, "changepoints", &rep.sector, x, chain).at(Stage::Changepoints)?;
        summaries.push(ChangepointSummary {
            label: rep.sector.clone(),
            ticker: rep.ticker.clone(),
            map_m: report.map_m,
            modal_locations: report.posterior().modal_locations(),
            birth_acceptance: rate(chain.stats.birth),
            within_acceptance: rate(chain.stats.within),
        });
        reports.push(report);
    }

    log::info!("spectral surfaces");
    let surfaces: Vec<TvSpectrum> = reports
        .iter()
        .map(|r| tv_spectrum_from_report(r, cfg.grid))
        .collect::<Result<_, _>>()
        .at(Stage::Spectra)?;
    write_spectra(&mut bundle, "spectra", &surfaces, cfg.linkage).at(Stage::Spectra)?;

    log::info!("changepoint-set distances");
    let opts = MjwOptions {
        order: cfg.mjw_order,
        empty_penalty: cfg.mjw_empty_penalty,
        normalize: cfg.mjw_normalize,
    };
    let sets: Vec<DistributionSet> = reports.iter().map(DistributionSet::from_report).collect();
    let mjw = mjw_matrix(&sets, &opts).at(Stage::Mjw)?;
    write_mjw(&mut bundle, "mjw", &mjw, cfg.linkage).at(Stage::Mjw)?;

    log::info!("portfolio sweeps");
    let members = sector_members(&panel);
    let both = AlgoColumns { algo1: true, algo2: true };
    let rows = sweep(&panel, &members, &cfg.windows, &cfg.bests, false).at(Stage::Portfolio)?;
    bundle.write("portfolio/sweep.csv", tables::sweep_csv(&rows, both).at(Stage::Portfolio)?).at(Stage::Portfolio)?;
    if cfg.out_of_sample {
        let rows = sweep(&panel, &members, &cfg.windows, &cfg.bests, true).at(Stage::Portfolio)?;
        bundle
            .write("portfolio/sweep_oos.csv", tables::sweep_csv(&rows, both).at(Stage::Portfolio)?)
            .at(Stage::Portfolio)?;
    }

    if cfg.plots {
        log::info!("plots");
        emit_plots(&mut bundle).at(Stage::Plots)?;
    }

    let report = Report {
        dates: panel.len(),
        assets: panel.n_assets(),
        window: cfg.window,
        seed: cfg.seed,
        sectors: panel.sector_names().into_iter().collect(),
        representatives: reps,
        changepoints: summaries,
        mjw_empty_sets: mjw.empty_labels.clone(),
        mjw_penalty: mjw.penalty,
        mean_nonrandom: series.nonrandom_counts.iter().sum::<usize>() as f64 / series.len() as f64,
        reference_edges: edges,
        reference_edge_divergence: diverges,
    };
    bundle.write_json("report.json", &report).at(Stage::Report)?;
    bundle.finish().at(Stage::Report)
}

/// Trace, posterior and input series of one chain; returns the posterior.
pub fn write_changepoints(bundle: &mut Bundle, dir: &str, label: &str, x: &[f64], chain: &Chain) -> anyhow::Result<PosteriorReport> {
    let report = PosteriorReport::from_chain(label, chain)?;
    let stem = file_stem(label);
    bundle.write(&format!("{dir}/{stem}.trace.csv"), tables::trace_csv(&chain.trace)?)?;
    bundle.write(&format!("{dir}/{stem}.series.csv"), tables::series_csv(x)?)?;
    bundle.write_json(&format!("{dir}/{stem}.posterior.json"), &report)?;
    Ok(report)
}

pub fn write_spectra(bundle: &mut Bundle, dir: &str, surfaces: &[TvSpectrum], linkage: Linkage) -> anyhow::Result<()> {
    for s in surfaces {
        bundle.write(&format!("{dir}/{}.surface.csv", file_stem(&s.label)), tables::surface_csv(s)?)?;
    }
    let d = spectral_distance_matrix(surfaces).context("spectral distances")?;
    bundle.write(&format!("{dir}/distance.csv"), tables::distance_csv(&d)?)?;
    if let Some(dendro) = cluster_if_possible(&d, linkage)? {
        bundle.write_json(&format!("{dir}/dendrogram.json"), &dendro)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MjwSummary<'a> {
    empty_labels: &'a [String],
    penalty: f64,
}

pub fn write_mjw(bundle: &mut Bundle, dir: &str, mjw: &MjwMatrix, linkage: Linkage) -> anyhow::Result<()> {
    bundle.write(&format!("{dir}/distance.csv"), tables::distance_csv(&mjw.matrix)?)?;
    bundle.write_json(
        &format!("{dir}/summary.json"),
        &MjwSummary {
            empty_labels: &mjw.empty_labels,
            penalty: mjw.penalty,
        },
    )?;
    if let Some(dendro) = cluster_if_possible(&mjw.matrix, linkage)? {
        bundle.write_json(&format!("{dir}/dendrogram.json"), &dendro)?;
    }
    Ok(())
}

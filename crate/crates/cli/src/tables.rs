//! CSV renderings of stage results, and the readers the plot stage uses to
//! load them back.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use sectorscope::changepoint::TraceRow;
use sectorscope::ingest::ReturnsPanel;
use sectorscope::portfolio::SweepRow;
use sectorscope::rmt::EigenSpectrumSeries;
use sectorscope::rollcorr::CorrelationMatrix;
use sectorscope::sectors::{DistanceMatrix, VariancePath};
use sectorscope::spectra::TvSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmtRow {
    pub t: usize,
    pub lambda1: f64,
    pub nonrandom: usize,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub t: usize,
    pub rank: usize,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub t: usize,
    pub nu: f64,
    pub logpower: f64,
}

fn serialize_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

fn records(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner()?)
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn rmt_rows(series: &EigenSpectrumSeries) -> Vec<RmtRow> {
    (0..series.len())
        .map(|i| RmtRow {
            t: series.times[i],
            lambda1: series.lambda1_path[i],
            nonrandom: series.nonrandom_counts[i],
            lambda_plus: series.bounds[i].lambda_plus,
            lambda_minus: series.bounds[i].lambda_minus,
        })
        .collect()
}

pub fn rmt_csv(series: &EigenSpectrumSeries) -> Result<Vec<u8>> {
    serialize_rows(rmt_rows(series))
}

/// Every eigenvalue of every window, largest first within a window.
pub fn eigenvalues_csv(series: &EigenSpectrumSeries) -> Result<Vec<u8>> {
    serialize_rows(series.times.iter().zip(&series.spectra).flat_map(|(&t, s)| {
        s.eigenvalues
            .iter()
            .enumerate()
            .map(move |(rank, &eigenvalue)| EigenRow { t, rank, eigenvalue })
    }))
}

pub fn correlation_csv(m: &CorrelationMatrix) -> Result<Vec<u8>> {
    let header: Vec<String> = std::iter::once("ticker".to_string()).chain(m.tickers.iter().cloned()).collect();
    records(
        &header,
        m.tickers.iter().enumerate().map(|(i, tk)| {
            std::iter::once(tk.clone())
                .chain(m.values.row(i).iter().map(|v| v.to_string()))
                .collect()
        }),
    )
}

pub fn distance_csv(d: &DistanceMatrix) -> Result<Vec<u8>> {
    let header: Vec<String> = std::iter::once("label".to_string()).chain(d.labels.iter().cloned()).collect();
    records(
        &header,
        d.labels.iter().enumerate().map(|(i, l)| {
            std::iter::once(l.clone())
                .chain((0..d.len()).map(|j| d.get(i, j).to_string()))
                .collect()
        }),
    )
}

/// Labels and values of a square matrix written by [`distance_csv`].
pub fn read_distance(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let labels: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(rec.iter().skip(1).map(|v| v.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>()?);
    }
    if rows.len() != labels.len() {
        bail!("{} is not square", path.display());
    }
    Ok((labels, rows))
}

/// One column per sector, one row per window end.
pub fn paths_csv(paths: &[VariancePath]) -> Result<Vec<u8>> {
    let Some(first) = paths.first() else {
        return records(&["t".to_string()], std::iter::empty());
    };
    if paths.iter().any(|p| p.times != first.times) {
        bail!("variance paths cover different windows");
    }
    let header: Vec<String> = std::iter::once("t".to_string()).chain(paths.iter().map(|p| p.sector.clone())).collect();
    records(
        &header,
        first.times.iter().enumerate().map(|(i, t)| {
            std::iter::once(t.to_string())
                .chain(paths.iter().map(|p| p.values[i].to_string()))
                .collect()
        }),
    )
}

/// Window ends and one named column per sector.
pub fn read_paths(path: &Path) -> Result<(Vec<usize>, Vec<(String, Vec<f64>)>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut cols: Vec<(String, Vec<f64>)> = r.headers()?.iter().skip(1).map(|h| (h.to_string(), Vec::new())).collect();
    let mut times = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        times.push(rec.get(0).unwrap_or_default().parse()?);
        for (c, v) in cols.iter_mut().zip(rec.iter().skip(1)) {
            c.1.push(v.parse()?);
        }
    }
    Ok((times, cols))
}

pub fn trace_csv(trace: &[TraceRow]) -> Result<Vec<u8>> {
    serialize_rows(trace)
}

pub fn series_csv(values: &[f64]) -> Result<Vec<u8>> {
    serialize_rows(values.iter().enumerate().map(|(t, &value)| SeriesRow { t, value }))
}

pub fn surface_csv(s: &TvSpectrum) -> Result<Vec<u8>> {
    serialize_rows((0..s.len()).flat_map(|t| {
        s.freqs.iter().enumerate().map(move |(k, &nu)| SurfaceRow {
            t,
            nu,
            logpower: s.surface[[t, k]],
        })
    }))
}

/// Frequencies and a row-major `T × K` grid read back from [`surface_csv`].
pub struct SurfaceGrid {
    pub freqs: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

pub fn read_surface(path: &Path) -> Result<SurfaceGrid> {
    let rows: Vec<SurfaceRow> = read_rows(path)?;
    let mut grid = SurfaceGrid {
        freqs: Vec::new(),
        values: Vec::new(),
    };
    for r in rows {
        if r.t == grid.values.len() {
            grid.values.push(Vec::new());
        } else if r.t + 1 != grid.values.len() {
            bail!("{}: rows out of order at t = {}", path.display(), r.t);
        }
        if r.t == 0 {
            grid.freqs.push(r.nu);
        }
        grid.values[r.t].push(r.logpower);
    }
    if grid.values.iter().any(|row| row.len() != grid.freqs.len()) {
        bail!("{}: ragged surface", path.display());
    }
    Ok(grid)
}

/// Which strategies a portfolio table reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgoColumns {
    pub algo1: bool,
    pub algo2: bool,
}

/// Raw totals, and the same numbers rendered as percentages.
pub fn sweep_csv(rows: &[SweepRow], cols: AlgoColumns) -> Result<Vec<u8>> {
    let mut header = vec!["window".to_string(), "best".to_string()];
    if cols.algo1 {
        header.extend(["algo1_total".to_string(), "algo1_pct".to_string()]);
    }
    if cols.algo2 {
        header.extend(["algo2_total".to_string(), "algo2_pct".to_string()]);
    }
    records(
        &header,
        rows.iter().map(|r| {
            let mut rec = vec![r.window.to_string(), r.best.to_string()];
            if cols.algo1 {
                rec.extend([r.algo1_total.to_string(), format!("{:.2}", 100.0 * r.algo1_total)]);
            }
            if cols.algo2 {
                rec.extend([r.algo2_total.to_string(), format!("{:.2}", 100.0 * r.algo2_total)]);
            }
            rec
        }),
    )
}

/// Dates and log returns, one column per ticker.
pub fn returns_csv(panel: &ReturnsPanel) -> Result<Vec<u8>> {
    let header: Vec<String> = ["t".to_string(), "date".to_string()].into_iter().chain(panel.tickers()).collect();
    let r = panel.returns();
    records(
        &header,
        panel.dates().iter().enumerate().map(|(t, d)| {
            [t.to_string(), d.to_string()]
                .into_iter()
                .chain(r.row(t).iter().map(|v| v.to_string()))
                .collect()
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use sectorscope::spectra::frequency_grid;

    #[test]
    fn surface_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = TvSpectrum {
            label: "x".into(),
            freqs: frequency_grid(3).unwrap(),
            surface: array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]],
            boundaries: vec![0, 2],
        };
        let path = dir.path().join("s.csv");
        std::fs::write(&path, surface_csv(&s).unwrap()).unwrap();
        let g = read_surface(&path).unwrap();
        assert_eq!(g.freqs, s.freqs);
        assert_eq!(g.values, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.5]]);
    }

    #[test]
    fn distance_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = DistanceMatrix::new(vec!["a".into(), "b,c".into()], array![[0.0, 0.25], [0.25, 0.0]]).unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, distance_csv(&d).unwrap()).unwrap();
        let (labels, rows) = read_distance(&path).unwrap();
        assert_eq!(labels, d.labels);
        assert_eq!(rows[0][1], 0.25);
    }

    #[test]
    fn sweep_columns_follow_selection() {
        let rows = [SweepRow {
            window: 120,
            best: 2,
            algo1_total: 2.15,
            algo2_total: 1.77,
        }];
        let only2 = String::from_utf8(sweep_csv(&rows, AlgoColumns { algo1: false, algo2: true }).unwrap()).unwrap();
        assert_eq!(only2, "window,best,algo2_total,algo2_pct\n120,2,1.77,177.00\n");
    }
}

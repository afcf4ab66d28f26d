//! Time-varying log-power surfaces and distances between them.

use ndarray::Array2;

use crate::changepoint::whittle::log_spectrum;
use crate::changepoint::{map_segments, ChangepointPosterior, MapSegment, PosteriorReport, SegmentModel};
use crate::error::{Error, Result};
use crate::sectors::DistanceMatrix;

/// Log power on a `T × K_f` time-frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TvSpectrum {
    pub label: String,
    /// Frequencies in cycles per observation, on `[0, 0.5]`.
    pub freqs: Vec<f64>,
    pub surface: Array2<f64>,
    /// Segment starts, plus the series length at the end.
    pub boundaries: Vec<usize>,
}

impl TvSpectrum {
    pub fn len(&self) -> usize {
        self.surface.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.surface.nrows() == 0
    }
}

/// `k` evenly spaced frequencies from 0 to 0.5 inclusive.
pub fn frequency_grid(k: usize) -> Result<Vec<f64>> {
    match k {
        0 => Err(Error::InvalidParameter("frequency grid must be non-empty".into())),
        1 => Ok(vec![0.0]),
        _ => Ok((0..k).map(|i| 0.5 * i as f64 / (k - 1) as f64).collect()),
    }
}

/// Fills every time index of a segment with that segment's log-spectrum.
pub fn surface_from_segments(label: &str, segments: &[MapSegment], freqs: &[f64]) -> Result<TvSpectrum> {
    if freqs.is_empty() {
        return Err(Error::InvalidParameter("frequency grid must be non-empty".into()));
    }
    let first = segments
        .first()
        .ok_or_else(|| Error::InvalidParameter("no segments".into()))?;
    if first.start != 0 || segments.windows(2).any(|w| w[0].end != w[1].start || w[0].start >= w[0].end) {
        return Err(Error::GridMismatch("segments must tile the series".into()));
    }
    let len = segments.last().map(|s| s.end).unwrap_or(0);
    let mut surface = Array2::zeros((len, freqs.len()));
    for seg in segments {
        let row: Vec<f64> = freqs.iter().map(|&nu| log_spectrum(&seg.beta, nu)).collect();
        for t in seg.start..seg.end {
            surface.row_mut(t).iter_mut().zip(&row).for_each(|(d, v)| *d = *v);
        }
    }
    if surface.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite log power in {label}")));
    }
    let mut boundaries: Vec<usize> = segments.iter().map(|s| s.start).collect();
    boundaries.push(len);
    Ok(TvSpectrum {
        label: label.to_string(),
        freqs: freqs.to_vec(),
        surface,
        boundaries,
    })
}

/// Surface from posterior-mean coefficients under the modal segment count,
/// with boundaries at the modal changepoint locations.
pub fn tv_spectrum(
    label: &str,
    len: usize,
    post: &ChangepointPosterior,
    samples: &[SegmentModel],
    grid: usize,
) -> Result<TvSpectrum> {
    let segments = map_segments(samples, post, len)?;
    surface_from_segments(label, &segments, &frequency_grid(grid)?)
}

pub fn tv_spectrum_from_report(report: &PosteriorReport, grid: usize) -> Result<TvSpectrum> {
    surface_from_segments(&report.label, &report.map_segments, &frequency_grid(grid)?)
}

/// Mean absolute difference over all time-frequency cells.
pub fn spectral_distance(a: &TvSpectrum, b: &TvSpectrum) -> Result<f64> {
    if a.surface.dim() != b.surface.dim() || a.freqs != b.freqs {
        return Err(Error::GridMismatch(format!(
            "surfaces {} {:?} and {} {:?} differ in shape or frequencies",
            a.label,
            a.surface.dim(),
            b.label,
            b.surface.dim()
        )));
    }
    if a.surface.is_empty() {
        return Err(Error::GridMismatch("empty surfaces".into()));
    }
    let total: f64 = a.surface.iter().zip(b.surface.iter()).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.surface.len() as f64)
}

pub fn spectral_distance_matrix(surfaces: &[TvSpectrum]) -> Result<DistanceMatrix> {
    let labels = surfaces.iter().map(|s| s.label.clone()).collect();
    DistanceMatrix::from_pairs(labels, |i, j| spectral_distance(&surfaces[i], &surfaces[j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(label: &str, t: usize, k: usize, v: f64) -> TvSpectrum {
        TvSpectrum {
            label: label.into(),
            freqs: frequency_grid(k).unwrap(),
            surface: Array2::from_elem((t, k), v),
            boundaries: vec![0, t],
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = frequency_grid(64).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[63], 0.5);
        assert!(frequency_grid(0).is_err());
    }

    #[test]
    fn constant_offset_distance() {
        let a = flat("a", 10, 4, 1.0);
        let b = flat("b", 10, 4, 1.5);
        assert_eq!(spectral_distance(&a, &a).unwrap(), 0.0);
        assert!((spectral_distance(&a, &b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_rejected() {
        assert!(spectral_distance(&flat("a", 10, 4, 1.0), &flat("b", 10, 5, 1.0)).is_err());
    }

    #[test]
    fn single_surface_matrix() {
        let d = spectral_distance_matrix(&[flat("a", 3, 2, 0.0)]).unwrap();
        assert_eq!(d.values.dim(), (1, 1));
        assert_eq!(d.values[[0, 0]], 0.0);
    }

    #[test]
    fn rows_change_only_at_boundaries() {
        let segs = vec![
            MapSegment {
                start: 0,
                end: 4,
                beta: vec![0.0, 0.5],
            },
            MapSegment {
                start: 4,
                end: 10,
                beta: vec![1.0, -0.5],
            },
        ];
        let s = surface_from_segments("x", &segs, &frequency_grid(8).unwrap()).unwrap();
        for t in 1..10 {
            let same = s.surface.row(t) == s.surface.row(t - 1);
            assert_eq!(same, t != 4);
        }
        assert_eq!(s.boundaries, vec![0, 4, 10]);
    }
}

//! Rolling-window correlation matrices.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{standardize_window, ReturnsPanel};

/// Correlation matrix of the `window` returns ending at row `t` (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub t: usize,
    pub tickers: Vec<String>,
    pub values: Array2<f64>,
    /// Variance of every entry of the standardised window, pooled.
    pub element_variance: f64,
}

impl CorrelationMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// `(1/S)·ZᵀZ` over the standardised window of length `window` ending at `t`.
pub fn rolling_correlation(returns: &ReturnsPanel, window: usize, t: usize) -> Result<CorrelationMatrix> {
    let z = standardize_window(returns, window, t)?;
    let s = window as f64;
    let mut values = z.t().dot(&z) / s;
    let n = values.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (values[[i, j]] + values[[j, i]]);
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    let count = z.len() as f64;
    let mean = z.sum() / count;
    let element_variance = z.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / count;
    Ok(CorrelationMatrix {
        t,
        tickers: returns.tickers(),
        values,
        element_variance,
    })
}

/// First window end index and number of windows for a panel of `rows` returns.
pub fn window_range(rows: usize, window: usize) -> Result<std::ops::Range<usize>> {
    if window < 2 || window > rows {
        return Err(Error::InvalidParameter(format!(
            "window {window} must lie in [2, {rows}] for a panel of {rows} returns"
        )));
    }
    Ok(window - 1..rows)
}

/// Lazily yields one correlation matrix per admissible `t`, in order.
pub struct CorrelationSeries<'a> {
    returns: &'a ReturnsPanel,
    window: usize,
    range: std::ops::Range<usize>,
}

impl Iterator for CorrelationSeries<'_> {
    type Item = Result<CorrelationMatrix>;

    fn next(&mut self) -> Option<Self::Item> {
        let t = self.range.next()?;
        Some(rolling_correlation(self.returns, self.window, t))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.range.size_hint()
    }
}

impl ExactSizeIterator for CorrelationSeries<'_> {}

/// `T − S + 1` matrices for a panel of `T` returns.
pub fn rolling_correlation_series(returns: &ReturnsPanel, window: usize) -> Result<CorrelationSeries<'_>> {
    let range = window_range(returns.len(), window)?;
    Ok(CorrelationSeries {
        returns,
        window,
        range,
    })
}

/// Eager, parallel variant of [`rolling_correlation_series`]; output stays in `t` order.
pub fn rolling_correlation_all(returns: &ReturnsPanel, window: usize) -> Result<Vec<CorrelationMatrix>> {
    let range = window_range(returns.len(), window)?;
    range
        .into_par_iter()
        .map(|t| rolling_correlation(returns, window, t))
        .collect()
}

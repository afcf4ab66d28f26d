//! Price snapshot loading, alignment and log-return panels.
//!
//! Prices come from a long-format CSV (`date,ticker,close`) and sector
//! membership from a companion CSV (`ticker,asset_class,sector`, one row per
//! ticker/sector pair). Tickers are aligned on the intersection of their
//! dates; no imputation is attempted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetClass {
    Crypto,
    Equity,
}

impl FromStr for AssetClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "crypto" | "cryptocurrency" => Ok(AssetClass::Crypto),
            "equity" | "equities" | "stock" => Ok(AssetClass::Equity),
            other => Err(Error::InvalidParameter(format!("unknown asset class {other:?}"))),
        }
    }
}

impl fmt::Display for AssetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssetClass::Crypto => f.write_str("crypto"),
            AssetClass::Equity => f.write_str("equity"),
        }
    }
}

/// Identity and sector membership of one column of a panel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetMeta {
    pub ticker: String,
    pub asset_class: AssetClass,
    /// An asset may sit in several sectors; it is then duplicated into each.
    pub sectors: BTreeSet<String>,
}

impl AssetMeta {
    pub fn new<S: Into<String>>(
        ticker: impl Into<String>,
        asset_class: AssetClass,
        sectors: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            ticker: ticker.into(),
            asset_class,
            sectors: sectors.into_iter().map(Into::into).collect(),
        }
    }
}

fn validate_meta(dates: &[NaiveDate], assets: &[AssetMeta], rows: usize, cols: usize) -> Result<()> {
    if dates.len() != rows {
        return Err(Error::DimensionMismatch {
            expected: dates.len(),
            actual: rows,
        });
    }
    if assets.len() != cols {
        return Err(Error::DimensionMismatch {
            expected: assets.len(),
            actual: cols,
        });
    }
    if dates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPanel("dates must be strictly increasing".into()));
    }
    let mut seen = BTreeSet::new();
    for a in assets {
        if a.ticker.is_empty() {
            return Err(Error::InvalidPanel("empty ticker".into()));
        }
        if !seen.insert(a.ticker.as_str()) {
            return Err(Error::InvalidPanel(format!("duplicate ticker {}", a.ticker)));
        }
        if a.sectors.is_empty() {
            return Err(Error::MissingSector(a.ticker.clone()));
        }
    }
    Ok(())
}

/// Aligned date × asset matrix of strictly positive closing prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PanelRepr", into = "PanelRepr")]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    assets: Vec<AssetMeta>,
    prices: Array2<f64>,
}

impl PricePanel {
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<AssetMeta>, prices: Array2<f64>) -> Result<Self> {
        validate_meta(&dates, &assets, prices.nrows(), prices.ncols())?;
        if let Some(((r, c), p)) = prices.indexed_iter().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::NonPositivePrice {
                line: 0,
                date: dates[r].to_string(),
                ticker: assets[c].ticker.clone(),
                close: *p,
            });
        }
        Ok(Self { dates, assets, prices })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[AssetMeta] {
        &self.assets
    }

    pub fn prices(&self) -> &Array2<f64> {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    /// Replaces sector membership from a freshly parsed sector map.
    pub fn with_sector_map(mut self, map: &SectorMap) -> Result<Self> {
        for a in &mut self.assets {
            let entry = map.get(&a.ticker).ok_or_else(|| Error::MissingSector(a.ticker.clone()))?;
            a.asset_class = entry.0;
            a.sectors = entry.1.clone();
        }
        Ok(self)
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

#[derive(Serialize, Deserialize)]
struct PanelRepr {
    dates: Vec<NaiveDate>,
    assets: Vec<AssetMeta>,
    rows: Vec<Vec<f64>>,
}

impl From<PricePanel> for PanelRepr {
    fn from(p: PricePanel) -> Self {
        let rows = p.prices.outer_iter().map(|r| r.to_vec()).collect();
        PanelRepr {
            dates: p.dates,
            assets: p.assets,
            rows,
        }
    }
}

impl TryFrom<PanelRepr> for PricePanel {
    type Error = Error;

    fn try_from(r: PanelRepr) -> Result<Self> {
        let n = r.assets.len();
        let mut prices = Array2::zeros((r.rows.len(), n));
        for (i, row) in r.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            prices.row_mut(i).iter_mut().zip(row).for_each(|(d, s)| *d = *s);
        }
        PricePanel::new(r.dates, r.assets, prices)
    }
}

/// Aligned log returns; row `t` holds `ln(p[t+1] / p[t])` and is dated by the later price.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    dates: Vec<NaiveDate>,
    assets: Vec<AssetMeta>,
    returns: Array2<f64>,
}

impl ReturnsPanel {
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<AssetMeta>, returns: Array2<f64>) -> Result<Self> {
        validate_meta(&dates, &assets, returns.nrows(), returns.ncols())?;
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidPanel("non-finite return".into()));
        }
        Ok(Self {
            dates,
            assets,
            returns,
        })
    }

    /// Builds a panel over consecutive calendar days with every asset placed
    /// in the sector named by `sectors[i]`. Convenient for synthetic studies.
    pub fn from_matrix(returns: Array2<f64>, sectors: &[&str]) -> Result<Self> {
        if sectors.len() != returns.ncols() {
            return Err(Error::DimensionMismatch {
                expected: returns.ncols(),
                actual: sectors.len(),
            });
        }
        let assets = sectors
            .iter()
            .enumerate()
            .map(|(i, s)| AssetMeta::new(format!("A{i:03}"), AssetClass::Crypto, [*s]))
            .collect();
        Self::new(daily_dates(returns.nrows()), assets, returns)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[AssetMeta] {
        &self.assets
    }

    pub fn returns(&self) -> &Array2<f64> {
        &self.returns
    }

    pub fn len(&self) -> usize {
        self.returns.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.nrows() == 0
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    pub fn tickers(&self) -> Vec<String> {
        self.assets.iter().map(|a| a.ticker.clone()).collect()
    }

    pub fn column_of(&self, ticker: &str) -> Option<usize> {
        self.assets.iter().position(|a| a.ticker == ticker)
    }

    /// Sub-panel over the given columns, in the given order.
    pub fn select(&self, columns: &[usize]) -> ReturnsPanel {
        ReturnsPanel {
            dates: self.dates.clone(),
            assets: columns.iter().map(|&c| self.assets[c].clone()).collect(),
            returns: self.returns.select(Axis(1), columns),
        }
    }

    /// All distinct sector names, sorted.
    pub fn sector_names(&self) -> BTreeSet<String> {
        self.assets.iter().flat_map(|a| a.sectors.iter().cloned()).collect()
    }
}

/// Consecutive calendar days starting 2019-01-01.
pub fn daily_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date");
    start.iter_days().take(n).collect()
}

/// `ticker → (asset class, sectors)` as read from a sector-map CSV.
pub type SectorMap = BTreeMap<String, (AssetClass, BTreeSet<String>)>;

#[derive(Debug, Deserialize)]
struct SectorRow {
    ticker: String,
    asset_class: String,
    sector: String,
}

#[derive(Debug, Deserialize)]
struct PriceRow {
    date: String,
    ticker: String,
    close: String,
}

pub fn parse_sector_map<R: Read>(reader: R, origin: &Path) -> Result<SectorMap> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut map = SectorMap::new();
    for (i, rec) in rdr.deserialize::<SectorRow>().enumerate() {
        let line = i as u64 + 2;
        let row = rec.map_err(|e| Error::Csv {
            path: origin.to_path_buf(),
            source: e,
        })?;
        if row.ticker.is_empty() || row.sector.is_empty() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: "empty ticker or sector".into(),
            });
        }
        let class: AssetClass = row.asset_class.parse().map_err(|e: Error| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let entry = map
            .entry(row.ticker.clone())
            .or_insert_with(|| (class, BTreeSet::new()));
        if entry.0 != class {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: format!("conflicting asset class for {}", row.ticker),
            });
        }
        entry.1.insert(row.sector);
    }
    Ok(map)
}

pub fn read_sector_map(path: &Path) -> Result<SectorMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_sector_map(file, path)
}

/// Parses long-format prices into `ticker → date → close`, rejecting
/// non-positive closes and duplicate rows.
pub fn parse_prices<R: Read>(reader: R, origin: &Path) -> Result<BTreeMap<String, BTreeMap<NaiveDate, f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    for (i, rec) in rdr.deserialize::<PriceRow>().enumerate() {
        let line = i as u64 + 2;
        let row = rec.map_err(|e| Error::Csv {
            path: origin.to_path_buf(),
            source: e,
        })?;
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|e| parse_err(format!("bad date {:?}: {e}", row.date)))?;
        let close: f64 = row
            .close
            .parse()
            .map_err(|e| parse_err(format!("bad close {:?}: {e}", row.close)))?;
        if !close.is_finite() || close <= 0.0 {
            return Err(Error::NonPositivePrice {
                line,
                date: row.date,
                ticker: row.ticker,
                close,
            });
        }
        if row.ticker.is_empty() {
            return Err(parse_err("empty ticker".into()));
        }
        if out.entry(row.ticker.clone()).or_default().insert(date, close).is_some() {
            return Err(Error::DuplicateRow {
                ticker: row.ticker,
                date: row.date,
            });
        }
    }
    Ok(out)
}

/// Aligns parsed prices on the dates common to every ticker.
///
/// With `class` set, only tickers of that asset class are kept, and the
/// intersection is taken over those tickers alone.
pub fn align(
    prices: &BTreeMap<String, BTreeMap<NaiveDate, f64>>,
    sectors: &SectorMap,
    class: Option<AssetClass>,
) -> Result<PricePanel> {
    if let Some(t) = sectors.keys().find(|t| !prices.contains_key(*t)) {
        return Err(Error::UnknownTicker(t.clone()));
    }
    if let Some(t) = prices.keys().find(|t| !sectors.contains_key(*t)) {
        return Err(Error::MissingSector(t.clone()));
    }
    let chosen: Vec<(&String, &BTreeMap<NaiveDate, f64>)> = prices
        .iter()
        .filter(|(t, _)| class.is_none_or(|c| sectors[*t].0 == c))
        .collect();
    if chosen.is_empty() {
        return Err(Error::InvalidPanel("no tickers selected".into()));
    }
    let mut common: BTreeSet<NaiveDate> = chosen[0].1.keys().copied().collect();
    for (_, series) in &chosen[1..] {
        common.retain(|d| series.contains_key(d));
    }
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let dates: Vec<NaiveDate> = common.into_iter().collect();
    let mut matrix = Array2::zeros((dates.len(), chosen.len()));
    let mut assets = Vec::with_capacity(chosen.len());
    for (j, (ticker, series)) in chosen.iter().enumerate() {
        for (i, d) in dates.iter().enumerate() {
            matrix[[i, j]] = series[d];
        }
        let (cls, secs) = &sectors[*ticker];
        assets.push(AssetMeta {
            ticker: (*ticker).clone(),
            asset_class: *cls,
            sectors: secs.clone(),
        });
    }
    PricePanel::new(dates, assets, matrix)
}

/// Loads and aligns a price CSV against its sector map.
pub fn load_prices(prices: &Path, sectors: &Path) -> Result<PricePanel> {
    load_prices_for(prices, sectors, None)
}

pub fn load_prices_for(prices: &Path, sectors: &Path, class: Option<AssetClass>) -> Result<PricePanel> {
    let map = read_sector_map(sectors)?;
    let file = File::open(prices).map_err(|e| Error::io(prices, e))?;
    let parsed = parse_prices(file, prices)?;
    align(&parsed, &map, class)
}

pub fn log_returns(panel: &PricePanel) -> ReturnsPanel {
    let p = panel.prices();
    let rows = p.nrows().saturating_sub(1);
    let mut returns = Array2::zeros((rows, p.ncols()));
    for t in 0..rows {
        for j in 0..p.ncols() {
            returns[[t, j]] = (p[[t + 1, j]] / p[[t, j]]).ln();
        }
    }
    ReturnsPanel {
        dates: panel.dates().iter().skip(1).copied().collect(),
        assets: panel.assets().to_vec(),
        returns,
    }
}

/// Standardises the `window` rows ending at `t` (inclusive) column by column,
/// using the population standard deviation so that `(1/S)·ZᵀZ` has a unit
/// diagonal.
///
/// A column whose variance vanishes relative to its scale is reported as
/// [`Error::ZeroVariance`] and left to the caller.
pub fn standardize_window(returns: &ReturnsPanel, window: usize, t: usize) -> Result<Array2<f64>> {
    let rows = returns.len();
    if window == 0 || t >= rows || t + 1 < window {
        return Err(Error::WindowOutOfRange { window, t, rows });
    }
    let slice = returns.returns().slice(ndarray::s![t + 1 - window..=t, ..]);
    let s = window as f64;
    let mut out = slice.to_owned();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let mean = col.sum() / s;
        let mean_sq = col.iter().map(|x| x * x).sum::<f64>() / s;
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / s;
        if var <= f64::EPSILON * mean_sq || var == 0.0 {
            return Err(Error::ZeroVariance {
                ticker: returns.assets()[j].ticker.clone(),
                t,
            });
        }
        let sd = var.sqrt();
        col.mapv_inplace(|x| (x - mean) / sd);
    }
    Ok(out)
}

/// Splits a panel by sector. Multi-sector assets appear in every sector they belong to.
pub fn sector_partition(returns: &ReturnsPanel) -> BTreeMap<String, ReturnsPanel> {
    let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (j, a) in returns.assets().iter().enumerate() {
        for s in &a.sectors {
            members.entry(s.clone()).or_default().push(j);
        }
    }
    members
        .into_iter()
        .map(|(s, cols)| (s, returns.select(&cols)))
        .collect()
}

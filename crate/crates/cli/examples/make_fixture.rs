//! Regenerates the bundled three-sector fixture under `fixtures/`.
//!
//! Every ticker loads on a market factor and on its sector's AR(1) factor.
//! The `Gamma` factor flips its autoregressive sign halfway through.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DAYS: usize = 601;
const SECTORS: [(&str, [&str; 3]); 3] = [
    ("Alpha", ["ALA", "ALB", "ALC"]),
    ("Beta", ["BEA", "BEB", "BEC"]),
    ("Gamma", ["GAA", "GAB", "GAC"]),
];

fn date_string(offset: usize) -> String {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    (start + Days::new(offset as u64)).to_string()
}

fn main() -> std::io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
    let n = DAYS - 1;
    let market: Vec<f64> = (0..n).map(|_| z()).collect();
    let mut factors = vec![vec![0.0; n]; SECTORS.len()];
    for (s, f) in factors.iter_mut().enumerate() {
        let mut prev = 0.0;
        for (t, v) in f.iter_mut().enumerate() {
            let phi = match s {
                0 => 0.5,
                1 => -0.3,
                _ if t < n / 2 => 0.85,
                _ => -0.85,
            };
            prev = phi * prev + z();
            *v = prev;
        }
    }

    let mut prices = String::from("date,ticker,close\n");
    let mut sectors = String::from("ticker,asset_class,sector\n");
    for (s, (name, tickers)) in SECTORS.iter().enumerate() {
        for (k, ticker) in tickers.iter().enumerate() {
            writeln!(sectors, "{ticker},crypto,{name}").unwrap();
            let drift = 0.0004 * (s as f64 + 1.0) - 0.0002 * k as f64;
            let mut p: f64 = 100.0;
            writeln!(prices, "{},{ticker},{p:.6}", date_string(0)).unwrap();
            for t in 0..n {
                // The first ticker is the representative; it tracks its factor closely.
                let own = if k == 0 { 0.9 } else { 0.6 };
                let r = drift + 0.01 * (0.3 * market[t] + own * factors[s][t] + 0.4 * z());
                p *= r.exp();
                writeln!(prices, "{},{ticker},{p:.6}", date_string(t + 1)).unwrap();
            }
        }
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("prices.csv"), prices)?;
    std::fs::write(dir.join("sectors.csv"), sectors)?;
    Ok(())
}

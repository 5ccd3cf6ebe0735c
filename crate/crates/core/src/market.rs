//! Price ingestion, covariance estimation and random instance generation.
//!
//! Covariance is computed on price levels by default with the unbiased
//! divisor `T - 1`. A simple-returns mode is available through
//! [`CovarianceMode::Returns`].

use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adjusted close prices for one ticker on a shared date axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub ticker: String,
    pub dates: Vec<String>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Symmetric PSD risk matrix with the tickers it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub tickers: Vec<String>,
    pub sigma: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    #[default]
    PriceLevels,
    Returns,
}

impl CovarianceMatrix {
    /// Builds a matrix from rows, checking shape and exact symmetry.
    pub fn from_rows(tickers: Vec<String>, sigma: Vec<Vec<f64>>) -> Result<Self> {
        let n = sigma.len();
        if tickers.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: tickers.len(),
            });
        }
        for row in &sigma {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        for i in 0..n {
            for j in 0..i {
                if sigma[i][j] != sigma[j][i] {
                    return Err(Error::InvalidArgument(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { tickers, sigma })
    }

    /// Matrix with generated ticker labels `A0, A1, ...`.
    pub fn unlabeled(sigma: Vec<Vec<f64>>) -> Result<Self> {
        let tickers = (0..sigma.len()).map(|i| format!("A{i}")).collect();
        Self::from_rows(tickers, sigma)
    }

    pub fn identity(n: usize) -> Self {
        let sigma = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::unlabeled(sigma).expect("identity is well formed")
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma[i][j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.sigma[i][i]).sum()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.sigma[i][j])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.to_matrix()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// True when the smallest eigenvalue is at least `-1e-9 * trace`.
    pub fn is_psd(&self) -> bool {
        let scale = self.trace().abs().max(f64::MIN_POSITIVE);
        self.min_eigenvalue() >= -1e-9 * scale
    }

    /// Rows and columns restricted to `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let tickers = indices.iter().map(|&i| self.tickers[i].clone()).collect();
        let sigma = indices
            .iter()
            .map(|&i| indices.iter().map(|&j| self.sigma[i][j]).collect())
            .collect();
        Self { tickers, sigma }
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let raw: CovarianceMatrix = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_rows(raw.tickers, raw.sigma)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Reads a `date,<t1>,<t2>,...` CSV and returns the requested tickers.
///
/// Rows where any requested ticker has an empty cell are dropped for every
/// series, so the result always shares one date axis.
pub fn load_prices(path: &Path, tickers: &[&str]) -> Result<Vec<PriceSeries>> {
    let file = std::fs::File::open(path)?;
    parse_prices(file, tickers)
}

/// Ticker columns of a price file, in file order.
pub fn price_file_tickers(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    Ok(rdr.headers()?.iter().skip(1).map(str::to_string).collect())
}

pub fn parse_prices<R: std::io::Read>(reader: R, tickers: &[&str]) -> Result<Vec<PriceSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let mut columns = Vec::with_capacity(tickers.len());
    for t in tickers {
        let col = header
            .iter()
            .position(|h| h == *t)
            .filter(|&c| c > 0)
            .ok_or_else(|| Error::MissingTicker(t.to_string()))?;
        columns.push(col);
    }

    let mut out: Vec<PriceSeries> = tickers
        .iter()
        .map(|t| PriceSeries {
            ticker: t.to_string(),
            dates: Vec::new(),
            prices: Vec::new(),
        })
        .collect();
    let mut last: Option<NaiveDate> = None;
    let mut row_prices = vec![0.0; tickers.len()];
    for record in rdr.records() {
        let record = record?;
        let date_raw = record.get(0).unwrap_or("").to_string();
        let date = NaiveDate::parse_from_str(&date_raw, "%Y-%m-%d")
            .map_err(|_| Error::RaggedDates(format!("unparseable date `{date_raw}`")))?;
        if let Some(prev) = last {
            if date <= prev {
                return Err(Error::RaggedDates(format!(
                    "date {date_raw} does not follow {prev}"
                )));
            }
        }
        last = Some(date);

        let mut complete = true;
        for (slot, (&col, t)) in columns.iter().zip(tickers).enumerate() {
            let cell = record.get(col).unwrap_or("");
            if cell.is_empty() {
                complete = false;
                continue;
            }
            let bad = || Error::BadPrice {
                ticker: t.to_string(),
                date: date_raw.clone(),
                value: cell.to_string(),
            };
            let v: f64 = cell.parse().map_err(|_| bad())?;
            if !(v.is_finite() && v > 0.0) {
                return Err(bad());
            }
            row_prices[slot] = v;
        }
        if !complete {
            continue;
        }
        for (series, &v) in out.iter_mut().zip(&row_prices) {
            series.dates.push(date_raw.clone());
            series.prices.push(v);
        }
    }
    Ok(out)
}

/// Unbiased sample covariance of price levels.
pub fn compute_covariance(series: &[PriceSeries]) -> Result<CovarianceMatrix> {
    compute_covariance_with(series, CovarianceMode::PriceLevels)
}

pub fn compute_covariance_with(
    series: &[PriceSeries],
    mode: CovarianceMode,
) -> Result<CovarianceMatrix> {
    let n = series.len();
    if n == 0 {
        return Err(Error::InsufficientData("no series".into()));
    }
    for s in &series[1..] {
        if s.dates != series[0].dates {
            return Err(Error::RaggedDates(format!(
                "{} and {} do not share a date axis",
                series[0].ticker, s.ticker
            )));
        }
    }
    let columns: Vec<Vec<f64>> = match mode {
        CovarianceMode::PriceLevels => series.iter().map(|s| s.prices.clone()).collect(),
        CovarianceMode::Returns => series
            .iter()
            .map(|s| s.prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect())
            .collect(),
    };
    let t = columns[0].len();
    if t < 2 {
        return Err(Error::InsufficientData(format!("{t} observations, need 2")));
    }

    // Streaming co-moment update.
    let mut mean = vec![0.0; n];
    let mut comoment = vec![vec![0.0; n]; n];
    let mut delta = vec![0.0; n];
    for obs in 0..t {
        let count = (obs + 1) as f64;
        for i in 0..n {
            delta[i] = columns[i][obs] - mean[i];
            mean[i] += delta[i] / count;
        }
        for i in 0..n {
            let after_i = columns[i][obs] - mean[i];
            for j in i..n {
                comoment[i][j] += delta[j] * after_i;
            }
        }
    }
    let denom = (t - 1) as f64;
    let mut sigma = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = comoment[i][j] / denom;
            sigma[i][j] = v;
            sigma[j][i] = v;
        }
    }
    Ok(CovarianceMatrix {
        tickers: series.iter().map(|s| s.ticker.clone()).collect(),
        sigma,
    })
}

/// Covariance of a uniformly drawn `n`-subset together with the subset.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstance {
    pub subset: Vec<usize>,
    pub covariance: CovarianceMatrix,
}

pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    universe: &[PriceSeries],
    n: usize,
) -> Result<RandomInstance> {
    if n > universe.len() || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {n} assets from a universe of {}",
            universe.len()
        )));
    }
    let mut subset = rand::seq::index::sample(rng, universe.len(), n).into_vec();
    subset.sort_unstable();
    let chosen: Vec<PriceSeries> = subset.iter().map(|&i| universe[i].clone()).collect();
    Ok(RandomInstance {
        covariance: compute_covariance(&chosen)?,
        subset,
    })
}

/// Random factor model `F F^T + diag(eps)` with `factors` columns.
pub fn synthetic_covariance<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    factors: usize,
) -> CovarianceMatrix {
    let f: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..factors)
                .map(|_| StandardNormal.sample(rng))
                .map(|x: f64| x / (factors as f64).sqrt())
                .collect()
        })
        .collect();
    let eps: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..0.5)).collect();
    let mut sigma = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut v: f64 = (0..factors).map(|k| f[i][k] * f[j][k]).sum();
            if i == j {
                v += eps[i];
            }
            sigma[i][j] = v;
            sigma[j][i] = v;
        }
    }
    CovarianceMatrix::unlabeled(sigma).expect("factor model is symmetric")
}

/// Geometric random-walk price paths on consecutive calendar days.
pub fn synthetic_universe<R: Rng + ?Sized>(
    rng: &mut R,
    tickers: &[&str],
    days: usize,
) -> Vec<PriceSeries> {
    let start = NaiveDate::from_ymd_opt(2021, 1, 4).expect("valid date");
    let dates: Vec<String> = (0..days)
        .map(|d| (start + chrono::Days::new(d as u64)).format("%Y-%m-%d").to_string())
        .collect();
    let market: Vec<f64> = (0..days).map(|_| StandardNormal.sample(rng)).collect();
    tickers
        .iter()
        .map(|t| {
            let beta: f64 = rng.random_range(0.3..1.2);
            let vol: f64 = rng.random_range(0.01..0.03);
            let mut price: f64 = rng.random_range(20.0..300.0);
            let prices = market
                .iter()
                .map(|&m| {
                    let idio: f64 = StandardNormal.sample(rng);
                    price *= (vol * (beta * m + idio)).exp();
                    price
                })
                .collect();
            PriceSeries {
                ticker: t.to_string(),
                dates: dates.clone(),
                prices,
            }
        })
        .collect()
}

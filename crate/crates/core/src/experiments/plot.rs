//! Tidy CSV tables for plotting, computed from result records.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::records::ResultRecord;
use crate::encoding::feasible_count;
use crate::error::{Error, Result};
use crate::metrics::{fit_power_law, PowerLawFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    /// Optimiser success rate on the one-parameter landscape.
    Fig3,
    /// Layerwise drivers against depth.
    Fig7,
    /// Noise study: post-selection and approximation ratio against depth.
    Fig9,
    /// Mean `1/P_gm` against the feasible-set size.
    Fig10,
    /// Landscape shape per mixer.
    Table1,
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig3" => Ok(FigureId::Fig3),
            "fig7" => Ok(FigureId::Fig7),
            "fig9" => Ok(FigureId::Fig9),
            "fig10" => Ok(FigureId::Fig10),
            "table1" => Ok(FigureId::Table1),
            other => Err(Error::UnknownFigure(other.to_string())),
        }
    }
}

/// Linear-interpolation percentile (`q` in `[0, 100]`) of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Writes the long-format table for `figure`. Records the figure does not
/// use are ignored; no usable records gives a header-only file.
pub fn emit_plot_data<W: Write>(records: &[ResultRecord], figure: FigureId, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match figure {
        FigureId::Fig3 => {
            w.write_record(["method", "shots", "runs", "success_rate", "y_median", "y_p20", "y_p80"])?;
            let mut groups: BTreeMap<(String, usize), Vec<&ResultRecord>> = BTreeMap::new();
            for r in records.iter().filter(|r| r.success.is_some() && r.y.is_some()) {
                groups.entry((r.method.clone(), r.shots)).or_default().push(r);
            }
            for ((method, shots), rs) in groups {
                let ys: Vec<f64> = rs.iter().filter_map(|r| r.y).collect();
                let ok = rs.iter().filter(|r| r.success == Some(true)).count();
                w.write_record([
                    method,
                    shots.to_string(),
                    rs.len().to_string(),
                    fmt(ok as f64 / rs.len() as f64),
                    fmt(percentile(&ys, 50.0)),
                    fmt(percentile(&ys, 20.0)),
                    fmt(percentile(&ys, 80.0)),
                ])?;
            }
        }
        FigureId::Fig7 => {
            w.write_record(["p", "method", "alpha_mean_mean", "alpha_min_median", "p80"])?;
            let mut groups: BTreeMap<(usize, String), Vec<&ResultRecord>> = BTreeMap::new();
            for r in records.iter().filter(|r| r.alpha_mean.is_some() && r.alpha_min.is_some()) {
                groups.entry((r.p, r.method.clone())).or_default().push(r);
            }
            for ((p, method), rs) in groups {
                let am: Vec<f64> = rs.iter().filter_map(|r| r.alpha_mean).collect();
                let amin: Vec<f64> = rs.iter().filter_map(|r| r.alpha_min).collect();
                w.write_record([
                    p.to_string(),
                    method,
                    fmt(mean(&am)),
                    fmt(percentile(&amin, 50.0)),
                    fmt(percentile(&am, 80.0)),
                ])?;
            }
        }
        FigureId::Fig9 => {
            w.write_record([
                "p",
                "method",
                "shots",
                "runs",
                "alpha_mean_median",
                "alpha_mean_p20",
                "alpha_mean_p80",
                "p_ps_median",
                "p_ps_p20",
                "p_ps_p80",
            ])?;
            let mut groups: BTreeMap<(usize, String, usize), Vec<&ResultRecord>> = BTreeMap::new();
            for r in records.iter().filter(|r| r.p_ps.is_some()) {
                groups.entry((r.p, r.method.clone(), r.shots)).or_default().push(r);
            }
            for ((p, method, shots), rs) in groups {
                let am: Vec<f64> = rs.iter().filter_map(|r| r.alpha_mean).collect();
                let ps: Vec<f64> = rs.iter().filter_map(|r| r.p_ps).collect();
                w.write_record([
                    p.to_string(),
                    method,
                    shots.to_string(),
                    rs.len().to_string(),
                    fmt(percentile(&am, 50.0)),
                    fmt(percentile(&am, 20.0)),
                    fmt(percentile(&am, 80.0)),
                    fmt(percentile(&ps, 50.0)),
                    fmt(percentile(&ps, 20.0)),
                    fmt(percentile(&ps, 80.0)),
                ])?;
            }
        }
        FigureId::Fig10 => {
            w.write_record(["n", "l", "b_nl", "initial", "runs", "mean_p_gm", "mean_inv_p_gm"])?;
            for pt in scaling_points(records) {
                w.write_record([
                    pt.n.to_string(),
                    pt.l.to_string(),
                    pt.b_nl.to_string(),
                    pt.initial,
                    pt.runs.to_string(),
                    fmt(pt.mean_p_gm),
                    fmt(pt.mean_inv_p_gm),
                ])?;
            }
        }
        FigureId::Table1 => {
            w.write_record([
                "n",
                "l",
                "p",
                "distance",
                "target",
                "scans",
                "valleys_mean",
                "mean_abs_gradient_mean",
                "min_alpha_median",
            ])?;
            let mut groups: BTreeMap<(usize, usize, usize, usize, String), Vec<&ResultRecord>> = BTreeMap::new();
            for r in records.iter().filter(|r| r.valleys.is_some()) {
                groups
                    .entry((r.n, r.l, r.p, r.distance, r.method.clone()))
                    .or_default()
                    .push(r);
            }
            for ((n, l, p, d, target), rs) in groups {
                let v: Vec<f64> = rs.iter().filter_map(|r| r.valleys).map(|v| v as f64).collect();
                let g: Vec<f64> = rs.iter().filter_map(|r| r.mean_abs_gradient).collect();
                let m: Vec<f64> = rs.iter().filter_map(|r| r.y).collect();
                w.write_record([
                    n.to_string(),
                    l.to_string(),
                    p.to_string(),
                    d.to_string(),
                    target.trim_start_matches("scan-").to_string(),
                    rs.len().to_string(),
                    fmt(mean(&v)),
                    fmt(mean(&g)),
                    fmt(percentile(&m, 50.0)),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean `P_gm` at one `(n, l, initial)` point, from the deepest layer
/// recorded there. Warm starts that already sit on the optimum are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub l: usize,
    pub b_nl: f64,
    pub initial: String,
    pub runs: usize,
    pub mean_p_gm: f64,
    pub mean_inv_p_gm: f64,
}

pub fn scaling_points(records: &[ResultRecord]) -> Vec<ScalingPoint> {
    let mut deepest: BTreeMap<(usize, usize, String), usize> = BTreeMap::new();
    for r in records.iter().filter(|r| r.p_gm.is_some()) {
        let e = deepest.entry((r.n, r.l, r.initial.clone())).or_insert(r.p);
        *e = (*e).max(r.p);
    }
    deepest
        .into_iter()
        .filter_map(|((n, l, initial), p)| {
            let pg: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n && r.l == l && r.initial == initial && r.p == p)
                .filter(|r| r.initial_is_optimal != Some(true))
                .filter_map(|r| r.p_gm)
                .collect();
            if pg.is_empty() {
                return None;
            }
            let m = mean(&pg);
            let b: f64 = feasible_count(n, l).to_string().parse().expect("count fits f64");
            Some(ScalingPoint {
                n,
                l,
                b_nl: b,
                initial,
                runs: pg.len(),
                mean_p_gm: m,
                mean_inv_p_gm: if m > 0.0 { 1.0 / m } else { f64::INFINITY },
            })
        })
        .collect()
}

/// One axis of the scaling study: `n` at the largest `l`, or `l` at the
/// largest `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSweep {
    pub initial: String,
    pub axis: String,
    pub fixed: usize,
    pub points: Vec<ScalingPoint>,
    /// Mean `1/P_gm` strictly increases along the sweep.
    pub monotone: bool,
    pub fit: Option<PowerLawFit>,
}

pub fn scaling_sweeps(records: &[ResultRecord]) -> Vec<ScalingSweep> {
    let points = scaling_points(records);
    let mut initials: Vec<String> = points.iter().map(|p| p.initial.clone()).collect();
    initials.sort();
    initials.dedup();
    let mut out = Vec::new();
    for initial in initials {
        let mine: Vec<&ScalingPoint> = points.iter().filter(|p| p.initial == initial).collect();
        let (Some(max_n), Some(max_l)) = (mine.iter().map(|p| p.n).max(), mine.iter().map(|p| p.l).max()) else {
            continue;
        };
        for (axis, fixed) in [("n", max_l), ("l", max_n)] {
            let mut sweep: Vec<ScalingPoint> = mine
                .iter()
                .filter(|p| if axis == "n" { p.l == fixed } else { p.n == fixed })
                .map(|p| (*p).clone())
                .collect();
            sweep.sort_by(|a, b| a.b_nl.total_cmp(&b.b_nl));
            if sweep.len() < 2 {
                continue;
            }
            let monotone = sweep.windows(2).all(|w| w[1].mean_inv_p_gm > w[0].mean_inv_p_gm);
            let xy: Vec<(f64, f64)> = sweep.iter().map(|p| (p.b_nl, p.mean_inv_p_gm)).collect();
            out.push(ScalingSweep {
                initial: initial.clone(),
                axis: axis.into(),
                fixed,
                monotone,
                fit: fit_power_law(&xy).ok(),
                points: sweep,
            });
        }
    }
    out
}

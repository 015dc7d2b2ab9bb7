//! Twin-versus-real comparison: normalized cross-correlation similarity of
//! metric time series, score aggregation, and jamming impact summaries.
//!
//! The similarity convention: when lengths differ, zeros are appended to the
//! shorter series; means are taken over the full padded length (including
//! those zeros, which biases heavily padded pairs and is flagged here on
//! purpose); the lagged series reads as zero outside its support.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::types::{Error, Result};

/// A sampled performance metric (throughput, SINR, ...). `NaN` marks a gap
/// and is excluded from statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    values: Vec<f64>,
    period: f64,
    label: String,
}

impl MetricSeries {
    pub fn new(values: Vec<f64>, period: f64, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("metric series is empty".into()));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "period must be finite and > 0, got {period}"
            )));
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidArgument(
                "metric values must be finite or NaN (gap)".into(),
            ));
        }
        Ok(Self {
            values,
            period,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees >= 1 value
    }

    /// Mean over non-gap values.
    pub fn mean(&self) -> Result<f64> {
        let (sum, count) = self
            .values
            .iter()
            .filter(|v| !v.is_nan())
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        if count == 0 {
            return Err(Error::InvalidArgument(format!(
                "series '{}' holds only gaps",
                self.label
            )));
        }
        Ok(sum / count as f64)
    }

    /// Reads a `t_s,value` CSV; an empty or `nan` value cell is a gap. The
    /// period is the median spacing of the time column.
    pub fn from_csv_reader<R: Read>(reader: R, label: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::InvalidArgument(format!("bad csv row: {e}")))?;
            let t: f64 = row
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("bad t_s in row {row:?}")))?;
            let v = match row.get(1).map(str::trim) {
                None | Some("") => f64::NAN,
                Some(s) => s
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad value in row {row:?}")))?,
            };
            times.push(t);
            values.push(v);
        }
        if times.len() < 2 {
            return Err(Error::InvalidArgument(
                "metric csv needs at least two rows".into(),
            ));
        }
        let mut diffs: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        diffs.sort_by(f64::total_cmp);
        let period = diffs[diffs.len() / 2];
        Self::new(values, period, label)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let label = path
            .as_ref()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_csv_reader(std::fs::File::open(path.as_ref())?, label)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_s,value")?;
        for (i, v) in self.values.iter().enumerate() {
            if v.is_nan() {
                writeln!(w, "{},", i as f64 * self.period)?;
            } else {
                writeln!(w, "{},{}", i as f64 * self.period, v)?;
            }
        }
        Ok(())
    }
}

/// Normalized cross-correlation over a symmetric lag range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// rho(k) for k in `-max_lag ..= max_lag`, in lag order.
    pub rho_by_lag: Vec<f64>,
    pub max_lag: usize,
    /// Lag of the maximum rho.
    pub best_lag: i64,
    /// Maximum rho over the lag range, in `[-1, 1]`.
    pub score: f64,
}

impl SimilarityReport {
    pub fn rho_at(&self, lag: i64) -> Option<f64> {
        let idx = lag + self.max_lag as i64;
        if idx < 0 {
            return None;
        }
        self.rho_by_lag.get(idx as usize).copied()
    }
}

/// Normalized cross-correlation of two series with mean removal:
///
/// `rho(k) = sum_n (x(n)-xm)(y(n+k)-ym) / sqrt(sum (x-xm)^2 sum (y-ym)^2)`
///
/// The shorter series is zero-padded to the common length `N` and the
/// padded zeros enter the means and variances like any other value; terms
/// whose lagged index leaves `[0, N)` drop from the numerator (which keeps
/// `|rho| <= 1` by Cauchy-Schwarz over the overlap); gaps drop from every
/// sum. The score is the maximum over `k in [-max_lag, max_lag]`.
pub fn normalized_xcorr(
    x: &MetricSeries,
    y: &MetricSeries,
    max_lag: usize,
) -> Result<SimilarityReport> {
    let n = x.len().max(y.len());
    let pad = |s: &MetricSeries| -> Vec<f64> {
        s.values()
            .iter()
            .copied()
            .chain(std::iter::repeat(0.0))
            .take(n)
            .collect()
    };
    let xs = pad(x);
    let ys = pad(y);

    let mean_of = |vals: &[f64]| -> f64 {
        let (sum, count) = vals
            .iter()
            .filter(|v| !v.is_nan())
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    };
    let xm = mean_of(&xs);
    let ym = mean_of(&ys);
    if xm.is_nan() || ym.is_nan() {
        return Err(Error::InvalidArgument("series holds only gaps".into()));
    }
    let var = |vals: &[f64], m: f64| -> f64 {
        vals.iter()
            .filter(|v| !v.is_nan())
            .map(|v| (v - m) * (v - m))
            .sum()
    };
    let den = (var(&xs, xm) * var(&ys, ym)).sqrt();
    if den <= 0.0 {
        return Err(Error::ZeroVariance);
    }

    let mut rho_by_lag = Vec::with_capacity(2 * max_lag + 1);
    let mut best_lag = -(max_lag as i64);
    let mut score = f64::NEG_INFINITY;
    for lag in -(max_lag as i64)..=(max_lag as i64) {
        let mut num = 0.0;
        for (i, &xv) in xs.iter().enumerate() {
            if xv.is_nan() {
                continue;
            }
            let j = i as i64 + lag;
            if !(0..n as i64).contains(&j) {
                continue;
            }
            let yv = ys[j as usize];
            if yv.is_nan() {
                continue;
            }
            num += (xv - xm) * (yv - ym);
        }
        let rho = num / den;
        if rho > score {
            score = rho;
            best_lag = lag;
        }
        rho_by_lag.push(rho);
    }
    debug_assert!(score.abs() <= 1.0 + 1e-12);
    Ok(SimilarityReport {
        rho_by_lag,
        max_lag,
        best_lag,
        score,
    })
}

/// Lag range used for twin-versus-real comparisons.
pub const COMPARE_MAX_LAG: usize = 10;

/// [`normalized_xcorr`] with the standard ten-lag comparison window.
pub fn compare_runs(real: &MetricSeries, twin: &MetricSeries) -> Result<SimilarityReport> {
    normalized_xcorr(real, twin, COMPARE_MAX_LAG)
}

/// Plain mean of similarity scores.
pub fn average_scores(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    Some(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Score aggregation under both weightings: the flat mean over every entry
/// and the mean of per-group means (groups weigh equally regardless of how
/// many entries they hold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedAverage {
    pub per_group: BTreeMap<String, f64>,
    pub flat_mean: f64,
    pub mean_of_group_means: f64,
}

pub fn average_by_group(items: &[(String, f64)]) -> Option<GroupedAverage> {
    if items.is_empty() {
        return None;
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (g, v) in items {
        groups.entry(g.clone()).or_default().push(*v);
    }
    let per_group: BTreeMap<String, f64> = groups
        .into_iter()
        .map(|(g, vs)| {
            let m = vs.iter().sum::<f64>() / vs.len() as f64;
            (g, m)
        })
        .collect();
    let flat_mean = items.iter().map(|(_, v)| v).sum::<f64>() / items.len() as f64;
    let mean_of_group_means =
        per_group.values().sum::<f64>() / per_group.len() as f64;
    Some(GroupedAverage {
        per_group,
        flat_mean,
        mean_of_group_means,
    })
}

/// Impact of a jammer on a metric: relative drop of the mean, and the mean
/// difference for dB-valued series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JammingReport {
    /// `1 - mean(during) / mean(pre)`.
    pub drop_fraction: f64,
    /// `mean(pre) - mean(during)`; meaningful for dB-valued series.
    pub drop_db: f64,
}

pub fn jamming_report(pre_jam: &MetricSeries, during_jam: &MetricSeries) -> Result<JammingReport> {
    let pre = pre_jam.mean()?;
    let during = during_jam.mean()?;
    if pre == 0.0 {
        return Err(Error::InvalidArgument(
            "pre-jam mean is zero; relative drop undefined".into(),
        ));
    }
    Ok(JammingReport {
        drop_fraction: 1.0 - during / pre,
        drop_db: pre - during,
    })
}

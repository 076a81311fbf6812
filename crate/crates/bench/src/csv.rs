//! History, summary and median tables. Floats are written with 17
//! significant digits so values survive a round trip.

use std::fmt::Write as _;

use balm::{Algorithm, SolveReport};

use crate::error::{BenchError, Result};

pub const HISTORY_HEADER: &str = "iter,rel_err,primal_res,fp_res_h,elapsed_s";
pub const SUMMARY_HEADER: &str = "n,seed,algorithm,rho_AtA,iters,time_s,status";
pub const MEDIAN_HEADER: &str = "n,algorithm,seeds,median_iters,median_time_s";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per visited iterate; `rel_err` is empty without a known solution.
pub fn history_csv(report: &SolveReport) -> String {
    let mut out = String::with_capacity(80 * (report.history.len() + 1));
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    for r in &report.history {
        let rel = r.rel_err.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iter,
            rel,
            fmt_f64(r.primal_res),
            fmt_f64(r.fp_res_h),
            fmt_f64(r.elapsed_s)
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub rho: f64,
    pub iters: usize,
    pub time_s: f64,
    pub status: String,
}

impl SummaryRow {
    /// Whether the row counts towards medians: the solver ran to a
    /// verdict, either converging or exhausting its iteration budget.
    pub fn ran(&self) -> bool {
        self.status == "converged" || self.status == "iteration_limit"
    }

    /// The row without its timing column, for determinism comparisons.
    pub fn untimed(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n,
            self.seed,
            self.algorithm,
            fmt_f64(self.rho),
            self.iters,
            self.status
        )
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            r.seed,
            r.algorithm,
            fmt_f64(r.rho),
            r.iters,
            fmt_f64(r.time_s),
            r.status
        );
    }
    out
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SUMMARY_HEADER) {
        return Err(BenchError::usage("summary.csv: missing header"));
    }
    let bad = |i: usize, what: &str| BenchError::usage(format!("summary.csv line {}: bad {what}", i + 2));
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(i, "field count"));
            }
            Ok(SummaryRow {
                n: f[0].parse().map_err(|_| bad(i, "n"))?,
                seed: f[1].parse().map_err(|_| bad(i, "seed"))?,
                algorithm: f[2].parse().map_err(|_| bad(i, "algorithm"))?,
                rho: f[3].parse().map_err(|_| bad(i, "rho_AtA"))?,
                iters: f[4].parse().map_err(|_| bad(i, "iters"))?,
                time_s: f[5].parse().map_err(|_| bad(i, "time_s"))?,
                status: f[6].to_string(),
            })
        })
        .collect()
}

/// Median of a non-empty sample; the mean of the two middle values for
/// even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MedianRow {
    pub n: usize,
    pub algorithm: Algorithm,
    pub seeds: usize,
    pub median_iters: f64,
    pub median_time_s: f64,
}

/// Medians over seeds per `(n, algorithm)`, using the rows that [`SummaryRow::ran`].
pub fn medians(rows: &[SummaryRow]) -> Vec<MedianRow> {
    let mut keys: Vec<(usize, Algorithm)> = rows.iter().map(|r| (r.n, r.algorithm)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|(n, algorithm)| {
            let group: Vec<&SummaryRow> = rows
                .iter()
                .filter(|r| r.n == n && r.algorithm == algorithm && r.ran())
                .collect();
            let iters: Vec<f64> = group.iter().map(|r| r.iters as f64).collect();
            let times: Vec<f64> = group.iter().map(|r| r.time_s).collect();
            Some(MedianRow {
                n,
                algorithm,
                seeds: group.len(),
                median_iters: median(&iters)?,
                median_time_s: median(&times)?,
            })
        })
        .collect()
}

pub fn median_csv(rows: &[MedianRow]) -> String {
    let mut out = String::from(MEDIAN_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            r.algorithm,
            r.seeds,
            fmt_f64(r.median_iters),
            fmt_f64(r.median_time_s)
        );
    }
    out
}

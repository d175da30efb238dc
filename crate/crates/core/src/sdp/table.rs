use std::io::Write;

use serde::Serialize;

use super::game::build_game_matrix;
use super::solver::{solve_primal, SolverParams};
use crate::error::{Error, Result};
use crate::ic_bounds::tsirelson_bound;
use crate::rac::{Case, RacProtocol};

pub const CSV_HEADER: [&str; 7] = [
    "k",
    "sdp_value",
    "dual_value",
    "analytic",
    "abs_error",
    "gap",
    "min_eig_S",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub k: usize,
    pub sdp_value: f64,
    pub dual_value: f64,
    pub analytic: f64,
    pub abs_error: f64,
    pub gap: f64,
    #[serde(rename = "min_eig_S")]
    pub min_eig_s: f64,
    pub certified: bool,
}

/// Solves the game of every `k` in `ks` and compares with `N_x sqrt(k)`.
pub fn bound_table(case: Case, ks: &[usize], params: &SolverParams) -> Result<Vec<BoundRow>> {
    ks.iter()
        .map(|&k| {
            let protocol = RacProtocol::new(k, case)?;
            let sol = solve_primal(&build_game_matrix(&protocol), params)?;
            let analytic = tsirelson_bound(&protocol);
            Ok(BoundRow {
                k,
                sdp_value: sol.primal_value,
                dual_value: sol.dual_value,
                analytic,
                abs_error: (sol.primal_value - analytic).abs(),
                gap: sol.gap,
                min_eig_s: sol.min_eig_s,
                certified: sol.certified,
            })
        })
        .collect()
}

/// CSV with six decimals per float.
pub fn write_csv<W: Write>(rows: &[BoundRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            format!("{:.6}", r.sdp_value),
            format!("{:.6}", r.dual_value),
            format!("{:.6}", r.analytic),
            format!("{:.6}", r.abs_error),
            format!("{:.6}", r.gap),
            format!("{:.6}", r.min_eig_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[BoundRow], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

/// Parses `"5"` or an inclusive range `"2..8"`.
pub fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("invalid k value {t:?}")))
    };
    let ks: Vec<usize> = match s.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (parse(lo)?, parse(hi.trim_start_matches('='))?);
            if lo > hi {
                return Err(Error::Parse(format!("empty k range {s:?}")));
            }
            (lo..=hi).collect()
        }
        None => vec![parse(s)?],
    };
    if let Some(&bad) = ks.iter().find(|&&k| k < 2) {
        return Err(Error::domain(format!("k={bad} must be at least 2")));
    }
    Ok(ks)
}

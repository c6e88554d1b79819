//! CSV schemas.
//!
//! Result files (`converge`, `sweep`) have the fixed header
//!
//! ```text
//! experiment,baseline,param,seed,iteration,objective,wsr,rates,powers,sinrs,status,wall_time
//! ```
//!
//! * `param`: swept value (`L`, `N`, or `p_max` in dBm; `p_max` for traces),
//! * `iteration`: trace index, 0 being the initial point; `-1` marks the
//!   final row of a run,
//! * `objective`: the FP objective `f_q`; `wsr`: weighted sum rate in
//!   bps/Hz,
//! * `rates`, `powers` (W), `sinrs`: per-user values in exponent notation
//!   joined by `;`,
//! * `status`: `ok` or `error: ...` (numeric fields are then empty),
//! * `wall_time`: seconds, only with `--timing`, so that default output is
//!   bit-reproducible.
//!
//! Validation files have the header
//! `config,seed,l,n,a,k,term,user,other,analytic,mc_mean,std_error,z`, with
//! `other = -1` except for interference terms.
//!
//! Realization dumps have the header `block,row,col,re,im`: block `H` (the
//! `L x N` RDARS-BS channel, row-major), then `h` (user-RDARS, `row` the
//! element and `col` the user) and `d` (user-BS, likewise).
//!
//! Floats use Rust's shortest round-trip formatting, independent of locale.

use std::io::Write;

use rdars_core::channel::ChannelRealization;
use serde::{Deserialize, Serialize};

use crate::error::SimResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub baseline: String,
    pub param: f64,
    pub seed: u64,
    pub iteration: i64,
    pub objective: Option<f64>,
    pub wsr: Option<f64>,
    pub rates: String,
    pub powers: String,
    pub sinrs: String,
    pub status: String,
    pub wall_time: Option<f64>,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateRow {
    pub config: usize,
    pub seed: u64,
    pub l: usize,
    pub n: usize,
    pub a: usize,
    pub k: usize,
    pub term: &'static str,
    pub user: usize,
    pub other: i64,
    pub analytic: f64,
    pub mc_mean: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct DumpRow {
    block: &'static str,
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

pub fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";")
}

pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> SimResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_result_rows<R: std::io::Read>(input: R) -> SimResult<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<_>, _>>()?)
}

pub fn write_realization<W: Write>(out: W, real: &ChannelRealization) -> SimResult<()> {
    let mut rows = Vec::new();
    let (l, n) = real.h_rb.shape();
    for i in 0..l {
        for j in 0..n {
            let x = real.h_rb[(i, j)];
            rows.push(DumpRow { block: "H", row: i, col: j, re: x.re, im: x.im });
        }
    }
    for (block, vs) in [("h", &real.h_ur), ("d", &real.h_ub)] {
        for (k, v) in vs.iter().enumerate() {
            for (i, x) in v.iter().enumerate() {
                rows.push(DumpRow { block, row: i, col: k, re: x.re, im: x.im });
            }
        }
    }
    write_rows(out, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn result_rows_round_trip() {
        let row = ResultRow {
            experiment: "sweep-l".into(),
            baseline: "rdars-joint".into(),
            param: 64.0,
            seed: 1,
            iteration: -1,
            objective: Some(0.1),
            wsr: Some(1.0 / 3.0),
            rates: join(&[0.25, 1e-20]),
            powers: join(&[1e-3]),
            sinrs: join(&[2.0]),
            status: "ok".into(),
            wall_time: None,
        };
        let mut buf = Vec::new();
        write_rows(&mut buf, std::slice::from_ref(&row)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("experiment,baseline,param,seed,iteration,objective,wsr,rates,powers,sinrs,status,wall_time\n"));
        assert!(text.contains("2.5e-1;1e-20"));
        assert_eq!(read_result_rows(&buf[..]).unwrap(), vec![row]);
    }
}

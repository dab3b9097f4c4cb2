//! One CSV row per (parameter combination, trial, solver), plus the
//! success-rate aggregate used for curve plots.
//!
//! Column formatting: `rel_err` uses shortest round-trip notation; `sr`, `cov`,
//! `sigma_noise`, `psnr`, `mse` are rounded to 6 significant digits;
//! `fr` keeps full precision so it can be checked against `r(m+n−r)/p`;
//! `wall_time_seconds` has 2 decimals.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::config::Suite;
use crate::error::{io_err, BenchError, Result};

pub const HEADER: [&str; 18] = [
    "suite",
    "solver",
    "m",
    "n",
    "r",
    "sr",
    "fr",
    "cov",
    "sigma_noise",
    "trial",
    "rel_err",
    "psnr",
    "mse",
    "success",
    "iterations",
    "wall_time_seconds",
    "rank_estimated",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub suite: Suite,
    pub solver: String,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub sr: f64,
    pub fr: f64,
    pub cov: f64,
    pub sigma_noise: f64,
    pub trial: usize,
    pub rel_err: f64,
    pub psnr: f64,
    pub mse: f64,
    pub success: bool,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    pub rank_estimated: Option<usize>,
    /// Set on rows whose trial failed; metrics are then NaN.
    pub error: Option<String>,
}

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn round2(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.2}").parse().expect("formatted float parses")
}

impl ExperimentRecord {
    /// The value this record takes after a CSV round trip.
    pub fn normalized(&self) -> Self {
        ExperimentRecord {
            sr: sig6(self.sr),
            cov: sig6(self.cov),
            sigma_noise: sig6(self.sigma_noise),
            psnr: sig6(self.psnr),
            mse: sig6(self.mse),
            wall_time_seconds: round2(self.wall_time_seconds),
            error: self.error.as_ref().map(|e| sanitize(e)),
            ..self.clone()
        }
    }

    /// `p` implied by `sr · m · n`.
    pub fn observations(&self) -> usize {
        (self.sr * (self.m * self.n) as f64).round() as usize
    }

    fn fields(&self) -> [String; 18] {
        [
            self.suite.to_string(),
            self.solver.clone(),
            self.m.to_string(),
            self.n.to_string(),
            self.r.to_string(),
            fmt_float(sig6(self.sr)),
            fmt_float(self.fr),
            fmt_float(sig6(self.cov)),
            fmt_float(sig6(self.sigma_noise)),
            self.trial.to_string(),
            fmt_float(self.rel_err),
            fmt_float(sig6(self.psnr)),
            fmt_float(sig6(self.mse)),
            self.success.to_string(),
            self.iterations.to_string(),
            format!("{:.2}", self.wall_time_seconds),
            self.rank_estimated.map(|k| k.to_string()).unwrap_or_default(),
            self.error.as_deref().map(sanitize).unwrap_or_default(),
        ]
    }

    fn from_fields(row: &csv::StringRecord, line: usize) -> Result<Self> {
        let get = |i: usize| row.get(i).unwrap_or("");
        let bad = |col: &str, v: &str| BenchError::Csv(format!("line {line}: bad {col} value {v:?}"));
        let num = |i: usize| -> Result<f64> { get(i).parse().map_err(|_| bad(HEADER[i], get(i))) };
        let int = |i: usize| -> Result<usize> { get(i).parse().map_err(|_| bad(HEADER[i], get(i))) };
        Ok(ExperimentRecord {
            suite: get(0).parse().map_err(|_| bad("suite", get(0)))?,
            solver: get(1).to_string(),
            m: int(2)?,
            n: int(3)?,
            r: int(4)?,
            sr: num(5)?,
            fr: num(6)?,
            cov: num(7)?,
            sigma_noise: num(8)?,
            trial: int(9)?,
            rel_err: num(10)?,
            psnr: num(11)?,
            mse: num(12)?,
            success: get(13).parse().map_err(|_| bad("success", get(13)))?,
            iterations: int(14)?,
            wall_time_seconds: num(15)?,
            rank_estimated: match get(16) {
                "" => None,
                v => Some(v.parse().map_err(|_| bad("rank_estimated", v))?),
            },
            error: match get(17) {
                "" => None,
                v => Some(v.to_string()),
            },
        })
    }
}

/// Shortest round-trip text; scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn sanitize(msg: &str) -> String {
    msg.replace(['\n', '\r'], " ")
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| BenchError::Csv(e.to_string());
    w.write_record(HEADER).map_err(csv_err)?;
    for rec in records {
        w.write_record(rec.fields()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

/// Writes header and rows to `path`, creating parent directories.
pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_csv(records, std::io::BufWriter::new(file)).map_err(|e| match e {
        BenchError::Csv(msg) => BenchError::Csv(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| BenchError::Csv(e.to_string()))?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(BenchError::Csv(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    rdr.records()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| BenchError::Csv(e.to_string()))?;
            ExperimentRecord::from_fields(&row, i + 2)
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_csv(file).map_err(|e| match e {
        BenchError::Csv(msg) => BenchError::Csv(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Success rate of one (solver, r, sr, cov, noise) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessPoint {
    pub solver: String,
    pub r: usize,
    pub sr: f64,
    pub fr: f64,
    pub cov: f64,
    pub sigma_noise: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
}

/// Groups records by cell, keeping first-appearance order of solvers and
/// ascending order of the numeric keys.
pub fn aggregate_success(records: &[ExperimentRecord]) -> Vec<SuccessPoint> {
    let mut solver_order: Vec<&str> = Vec::new();
    for rec in records {
        if !solver_order.contains(&rec.solver.as_str()) {
            solver_order.push(&rec.solver);
        }
    }
    type Key = (usize, usize, u64, u64, u64);
    let mut cells: BTreeMap<Key, SuccessPoint> = BTreeMap::new();
    for rec in records {
        let s = solver_order.iter().position(|&x| x == rec.solver).expect("collected");
        let key = (s, rec.r, rec.sr.to_bits(), rec.cov.to_bits(), rec.sigma_noise.to_bits());
        let cell = cells.entry(key).or_insert_with(|| SuccessPoint {
            solver: rec.solver.clone(),
            r: rec.r,
            sr: rec.sr,
            fr: rec.fr,
            cov: rec.cov,
            sigma_noise: rec.sigma_noise,
            trials: 0,
            successes: 0,
            rate: 0.0,
        });
        cell.trials += 1;
        cell.successes += usize::from(rec.success);
    }
    cells
        .into_values()
        .map(|mut c| {
            c.rate = c.successes as f64 / c.trials as f64;
            c
        })
        .collect()
}

pub fn emit_success_csv(points: &[SuccessPoint], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let csv_err = |e: csv::Error| BenchError::Csv(format!("{}: {e}", path.display()));
    w.write_record(["solver", "r", "sr", "fr", "cov", "sigma_noise", "trials", "successes", "rate"])
        .map_err(csv_err)?;
    for p in points {
        w.write_record([
            p.solver.clone(),
            p.r.to_string(),
            fmt_float(sig6(p.sr)),
            fmt_float(p.fr),
            fmt_float(sig6(p.cov)),
            fmt_float(sig6(p.sigma_noise)),
            p.trials.to_string(),
            p.successes.to_string(),
            p.rate.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample(trial: usize, success: bool) -> ExperimentRecord {
        ExperimentRecord {
            suite: Suite::SuccessCurve,
            solver: "ts1-s1".into(),
            m: 100,
            n: 100,
            r: 10,
            sr: 0.4,
            fr: 0.475,
            cov: 0.0,
            sigma_noise: 0.0,
            trial,
            rel_err: if success { 1.234567891e-6 } else { 0.3 },
            psnr: 91.234567,
            mse: 1.0e-9,
            success,
            iterations: 200,
            wall_time_seconds: 0.873,
            rank_estimated: Some(10),
            error: None,
        }
    }

    #[test]
    fn empty_file_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), HEADER.join(",") + "\n");
    }

    #[test]
    fn one_record_two_lines() {
        let mut buf = Vec::new();
        write_csv(&[sample(0, true)], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains(",1.234567891e-6,"));
        assert!(text.contains(",0.87,"));
        let back = parse_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![sample(0, true).normalized()]);
    }

    #[test]
    fn failed_rows_round_trip() {
        let mut rec = sample(3, false);
        rec.rel_err = f64::NAN;
        rec.psnr = f64::NAN;
        rec.mse = f64::NAN;
        rec.rank_estimated = None;
        rec.error = Some("numerical failure: SVD did not converge,\nretry".into());
        let mut buf = Vec::new();
        write_csv(&[rec.clone()], &mut buf).unwrap();
        let back = parse_csv(buf.as_slice()).unwrap().remove(0);
        assert!(back.rel_err.is_nan());
        assert_eq!(back.rank_estimated, None);
        assert_eq!(back.error.as_deref(), Some("numerical failure: SVD did not converge, retry"));
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(parse_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn sig6_rounding() {
        assert_eq!(sig6(0.4), 0.4);
        assert_eq!(sig6(0.243751234), 0.243751);
        assert_eq!(sig6(91.2345678), 91.2346);
        assert_eq!(sig6(f64::INFINITY), f64::INFINITY);
        assert_eq!(sig6(0.0), 0.0);
    }

    #[test]
    fn aggregation_is_mean_of_successes() {
        let mut recs: Vec<_> = (0..4).map(|t| sample(t, t != 2)).collect();
        let mut other = sample(0, false);
        other.r = 12;
        recs.push(other);
        let pts = aggregate_success(&recs);
        assert_eq!(pts.len(), 2);
        assert_eq!((pts[0].r, pts[0].trials, pts[0].successes), (10, 4, 3));
        assert_eq!(pts[0].rate, 0.75);
        assert_eq!((pts[1].r, pts[1].rate), (12, 0.0));
    }
}

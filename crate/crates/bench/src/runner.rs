//! Suite execution: problem generation, solving, and metrics per trial.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use ts1_core::problem::{
    add_noise, freedom_ratio, gen_gaussian_lowrank, image_to_lowrank_truth, sample_uniform, GroundTruth,
};
use ts1_core::solver::{solve, Algorithm};
use ts1_core::RecoveryMetrics;

use crate::config::{ExperimentSpec, Suite};
use crate::error::{BenchError, Result};
use crate::image;
use crate::record::ExperimentRecord;

const STREAM_TRUTH: u64 = 1;
const STREAM_SAMPLE: u64 = 2;
const STREAM_NOISE: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed owned by one trial; independent of scheduling order.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ trial as u64)
}

fn stream(trial_seed: u64, id: u64) -> u64 {
    splitmix64(trial_seed ^ id.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Generator seeds `(truth, sample, noise)` of one trial.
pub fn trial_streams(seed: u64, trial: usize) -> (u64, u64, u64) {
    let t = trial_seed(seed, trial);
    (stream(t, STREAM_TRUTH), stream(t, STREAM_SAMPLE), stream(t, STREAM_NOISE))
}

/// One parameter combination and trial index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub r: usize,
    pub sr: f64,
    pub cov: f64,
    pub noise: f64,
    pub trial: usize,
}

pub fn jobs(spec: &ExperimentSpec) -> Vec<Job> {
    let mut out = Vec::new();
    for &r in &spec.ranks {
        for &sr in &spec.sr {
            for &cov in &spec.cov {
                for &noise in &spec.noise {
                    for trial in 0..spec.trials {
                        out.push(Job {
                            r,
                            sr,
                            cov,
                            noise,
                            trial,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Runs every job, in parallel, and returns records in job order.
///
/// Only configuration problems are errors; a failing trial yields rows with
/// the `error` column set.
pub fn run_suite(spec: &ExperimentSpec) -> Result<Vec<ExperimentRecord>> {
    spec.validate()?;
    let images = image_truths(spec)?;
    let rows: Vec<Vec<ExperimentRecord>> = jobs(spec)
        .par_iter()
        .map(|job| run_trial(spec, images.get(&job.r), job))
        .collect();
    Ok(rows.concat())
}

/// Rank-truncated image per target rank; empty for synthetic suites.
fn image_truths(spec: &ExperimentSpec) -> Result<BTreeMap<usize, GroundTruth<f64>>> {
    let mut out = BTreeMap::new();
    if spec.suite != Suite::Inpaint {
        return Ok(out);
    }
    let source = spec.image.as_ref().expect("validated");
    let pixels = image::resolve(source)?;
    let dims = pixels.shape();
    for &r in &spec.ranks {
        for &alg in &spec.solvers {
            spec.solver_config(alg, r)?
                .validate(dims, 1.0)
                .map_err(|e| BenchError::Config(format!("rank {r}, solver {alg}: {e}")))?;
        }
        let truth = image_to_lowrank_truth(&pixels, r).map_err(|e| BenchError::Config(e.to_string()))?;
        out.insert(r, truth);
    }
    Ok(out)
}

fn run_trial(spec: &ExperimentSpec, image_truth: Option<&GroundTruth<f64>>, job: &Job) -> Vec<ExperimentRecord> {
    let (truth_seed, sample_seed, noise_seed) = trial_streams(spec.seed, job.trial);
    let (m, n) = image_truth.map_or(spec.dims, |t| t.m_full.shape());
    let template = ExperimentRecord {
        suite: spec.suite,
        solver: String::new(),
        m,
        n,
        r: job.r,
        sr: job.sr,
        fr: {
            let p = ((job.sr * (m * n) as f64).round() as usize).clamp(1, m * n);
            freedom_ratio(m, n, job.r, p)
        },
        cov: job.cov,
        sigma_noise: job.noise,
        trial: job.trial,
        rel_err: f64::NAN,
        psnr: f64::NAN,
        mse: f64::NAN,
        success: false,
        iterations: 0,
        wall_time_seconds: 0.0,
        rank_estimated: None,
        error: None,
    };

    let prepared = (|| {
        let truth = match image_truth {
            Some(t) => t.clone(),
            None => gen_gaussian_lowrank(m, n, job.r, job.cov, truth_seed)?,
        };
        let noisy = add_noise(&truth, job.noise, noise_seed)?;
        let problem = sample_uniform(&noisy, job.sr, sample_seed)?;
        Ok::<_, ts1_core::Ts1Error>((truth, problem))
    })();

    let (truth, problem) = match prepared {
        Ok(x) => x,
        Err(e) => {
            return spec
                .solvers
                .iter()
                .map(|alg| ExperimentRecord {
                    solver: alg.name().to_string(),
                    error: Some(e.to_string()),
                    ..template.clone()
                })
                .collect()
        }
    };
    let d = problem.descriptors().expect("rank known");
    let base = ExperimentRecord {
        sr: d.sr,
        fr: d.fr,
        ..template
    };

    spec.solvers
        .iter()
        .map(|&alg| {
            let mut rec = ExperimentRecord {
                solver: alg.name().to_string(),
                ..base.clone()
            };
            match solve_one(spec, alg, job.r, &problem, &truth.m_full) {
                Ok((metrics, iterations, rank, secs)) => {
                    rec.rel_err = metrics.rel_err;
                    rec.psnr = metrics.psnr;
                    rec.mse = metrics.mse;
                    rec.success = metrics.success;
                    rec.iterations = iterations;
                    rec.rank_estimated = rank;
                    rec.wall_time_seconds = secs;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect()
}

fn solve_one(
    spec: &ExperimentSpec,
    alg: Algorithm,
    r: usize,
    problem: &ts1_core::problem::MaskedMatrix<f64>,
    truth: &DMatrix<f64>,
) -> Result<(RecoveryMetrics, usize, Option<usize>, f64)> {
    let cfg = spec.solver_config(alg, r)?;
    let start = Instant::now();
    let report = solve(problem, &cfg)?;
    let secs = start.elapsed().as_secs_f64();
    let metrics = RecoveryMetrics::evaluate(&report.x_opt, truth, spec.peak)?;
    Ok((metrics, report.iterations, report.rank_estimate, secs))
}

/// Per-cell summary for console output.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub solver: String,
    pub r: usize,
    pub sr: f64,
    pub fr: f64,
    pub cov: f64,
    pub sigma_noise: f64,
    pub trials: usize,
    pub failures: usize,
    pub median_rel_err: f64,
    pub success_rate: f64,
    pub median_psnr: f64,
    pub mean_iterations: f64,
    pub mean_seconds: f64,
}

/// Median of the finite values; NaN if there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered"));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

pub fn summarize(records: &[ExperimentRecord]) -> Vec<CellSummary> {
    let mut order: Vec<(String, usize, u64, u64, u64)> = Vec::new();
    let mut cells: BTreeMap<usize, Vec<&ExperimentRecord>> = BTreeMap::new();
    for rec in records {
        let key = (
            rec.solver.clone(),
            rec.r,
            rec.sr.to_bits(),
            rec.cov.to_bits(),
            rec.sigma_noise.to_bits(),
        );
        let idx = order.iter().position(|k| *k == key).unwrap_or_else(|| {
            order.push(key);
            order.len() - 1
        });
        cells.entry(idx).or_default().push(rec);
    }
    cells
        .into_values()
        .map(|rows| {
            let first = rows[0];
            let ok: Vec<&&ExperimentRecord> = rows.iter().filter(|r| r.error.is_none()).collect();
            let mean = |f: fn(&ExperimentRecord) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            CellSummary {
                solver: first.solver.clone(),
                r: first.r,
                sr: first.sr,
                fr: first.fr,
                cov: first.cov,
                sigma_noise: first.sigma_noise,
                trials: rows.len(),
                failures: rows.len() - ok.len(),
                median_rel_err: median(ok.iter().map(|r| r.rel_err)),
                success_rate: rows.iter().filter(|r| r.success).count() as f64 / rows.len() as f64,
                median_psnr: median(ok.iter().map(|r| r.psnr)),
                mean_iterations: mean(|r| r.iterations as f64),
                mean_seconds: mean(|r| r.wall_time_seconds),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> ExperimentSpec {
        ExperimentSpec::from_toml_str(text).unwrap()
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..100).map(|t| trial_seed(42, t)).collect();
        let mut dedup = a.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 100);
        assert_eq!(trial_seed(42, 7), a[7]);
        assert_ne!(trial_seed(43, 7), a[7]);
        assert_ne!(stream(a[0], STREAM_TRUTH), stream(a[0], STREAM_SAMPLE));
    }

    #[test]
    fn median_values() {
        assert_eq!(median([3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median([f64::NAN]).is_nan());
        assert_eq!(median([f64::NAN, 5.0]), 5.0);
    }

    #[test]
    fn job_grid_order() {
        let s = spec(
            r#"
            [experiment]
            suite = "single"
            trials = 2
            [problem]
            m = 10
            n = 10
            ranks = [1, 2]
            noise = [0.0, 0.1]
            "#,
        );
        let js = jobs(&s);
        assert_eq!(js.len(), 8);
        assert_eq!((js[0].r, js[0].noise, js[0].trial), (1, 0.0, 0));
        assert_eq!((js[1].r, js[1].noise, js[1].trial), (1, 0.0, 1));
        assert_eq!((js[2].r, js[2].noise, js[2].trial), (1, 0.1, 0));
        assert_eq!(js[7].r, 2);
    }

    #[test]
    fn single_full_observation_is_exact() {
        let s = spec(
            r#"
            [experiment]
            suite = "single"
            seed = 3
            [problem]
            m = 30
            n = 20
            ranks = 3
            sr = 1.0
            [solver]
            names = ["ts1-s2", "ts1-s1"]
            "#,
        );
        let recs = run_suite(&s).unwrap();
        assert_eq!(recs.len(), 2);
        for rec in &recs {
            assert!(rec.error.is_none());
            assert!(rec.rel_err < 1e-10, "{rec:?}");
            assert!(rec.success);
            assert_eq!(rec.fr, 3.0 * 47.0 / 600.0);
        }
    }

    #[test]
    fn missing_image_is_a_config_error() {
        let s = spec(
            r#"
            [experiment]
            suite = "inpaint"
            [problem]
            ranks = 2
            [inpaint]
            image = "/nonexistent/picture.pgm"
            "#,
        );
        assert!(run_suite(&s).is_err());
    }

    #[test]
    fn summary_groups_cells() {
        let s = spec(
            r#"
            [experiment]
            suite = "single"
            trials = 3
            [problem]
            m = 20
            n = 20
            ranks = [1, 2]
            sr = 0.8
            "#,
        );
        let recs = run_suite(&s).unwrap();
        let sum = summarize(&recs);
        assert_eq!(sum.len(), 2);
        assert!(sum.iter().all(|c| c.trials == 3 && c.failures == 0));
        assert_eq!(sum[0].r, 1);
        assert_eq!(sum[0].success_rate, 1.0);
    }
}

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::baselines::mcmc_sample_until_converged;
use crate::coreset::{construct, ConstructConfig};
use crate::datagen::{gen_synthetic, SyntheticSpec};
use crate::dpp::build_kdpp;
use crate::linalg::{FeatureKernel, KernelKind};
use crate::rng::stream;
use crate::sampler::coredpp_sample;
use crate::Result;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub parts: usize,
    pub k: usize,
    pub nu: usize,
    pub passes: usize,
    pub dim: usize,
    pub n_clusters: usize,
    pub mean_norm: f64,
    pub warmup: usize,
    pub reps: usize,
    /// Repetitions of the (slow) construction.
    pub construct_reps: usize,
    /// Draws per timed sampling repetition.
    pub batch: usize,
    /// Largest N for the exact sampler (dense kernel and full eigendecomposition).
    pub exact_max: usize,
    pub mcmc: bool,
    pub mcmc_chains: usize,
    pub mcmc_threshold: f64,
    pub mcmc_cap: u64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![200, 2000, 4000, 8000, 20000],
            parts: 40,
            k: 5,
            nu: 3,
            passes: 1,
            dim: 30,
            n_clusters: 10,
            mean_norm: 7.0,
            warmup: 5,
            reps: 20,
            construct_reps: 3,
            batch: 100,
            exact_max: 2000,
            mcmc: true,
            mcmc_chains: 4,
            mcmc_threshold: 1.1,
            mcmc_cap: 200_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub method: &'static str,
    pub metric: &'static str,
    pub value: f64,
    pub reps: usize,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Median seconds per call of `f` over `reps` timed batches of `batch`
/// calls, after `warmup` untimed batches.
fn time_per_call(warmup: usize, reps: usize, batch: usize, mut f: impl FnMut()) -> f64 {
    for _ in 0..warmup * batch {
        f();
    }
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            for _ in 0..batch {
                f();
            }
            t.elapsed().as_secs_f64() / batch as f64
        })
        .collect();
    median(&mut times)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    let batch = cfg.batch.max(1);
    for &n in &cfg.sizes {
        let per = (n / cfg.n_clusters).max(1);
        let spec = SyntheticSpec::new(cfg.n_clusters, per, cfg.dim, cfg.mean_norm, cfg.seed);
        let points = gen_synthetic(&spec)?;
        let n = points.len();
        let kernel = FeatureKernel::new(points, KernelKind::Linear)?;
        let ccfg = ConstructConfig::new(cfg.k, cfg.parts).nu(cfg.nu).max_passes(cfg.passes);
        let mut row = |method, metric, value, reps| {
            rows.push(BenchRow {
                n,
                method,
                metric,
                value,
                reps,
            })
        };

        let mut model = None;
        let mut times = Vec::new();
        for r in 0..cfg.construct_reps.max(1) {
            let t = Instant::now();
            model = Some(construct(&kernel, &ccfg, &mut stream(cfg.seed, 100 + r as u64))?);
            times.push(secs(t.elapsed()));
        }
        let model = model.expect("at least one repetition");
        row("coredpp", "construct_seconds", median(&mut times), times.len());

        let mut rng = stream(cfg.seed, 1);
        let per_sample = time_per_call(cfg.warmup, cfg.reps, batch, || {
            std::hint::black_box(coredpp_sample(&model, &mut rng));
        });
        row("coredpp", "sample_seconds", per_sample, cfg.reps);

        if n <= cfg.exact_max {
            let t = Instant::now();
            let exact = build_kdpp(kernel.materialize()?, cfg.k)?;
            row("exact", "setup_seconds", secs(t.elapsed()), 1);
            let mut rng = stream(cfg.seed, 2);
            let per_sample = time_per_call(cfg.warmup, cfg.reps, batch, || {
                std::hint::black_box(exact.sample(&mut rng));
            });
            row("exact", "sample_seconds", per_sample, cfg.reps);
        }

        if cfg.mcmc {
            let run = mcmc_sample_until_converged(
                &kernel,
                cfg.k,
                cfg.mcmc_chains,
                cfg.mcmc_threshold,
                cfg.mcmc_cap,
                &mut stream(cfg.seed, 3),
            )?;
            row("mcmc", "iterations", run.iterations as f64, 1);
            row("mcmc", "converged", f64::from(u8::from(run.converged)), 1);
            row("mcmc", "sample_seconds", secs(run.total_time), 1);
            row(
                "mcmc",
                "sample_seconds_excl_diagnostic",
                secs(run.total_time.saturating_sub(run.diagnostic_time)),
                1,
            );
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["n", "method", "metric", "value", "reps"])
            .map_err(std::io::Error::from)?;
    }
    for row in rows {
        w.serialize(row).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn small_bench_emits_every_metric() {
        let cfg = BenchConfig {
            sizes: vec![60],
            parts: 6,
            k: 2,
            warmup: 1,
            reps: 3,
            construct_reps: 1,
            batch: 5,
            mcmc_cap: 2_000,
            ..BenchConfig::default()
        };
        let rows = run_bench(&cfg).unwrap();
        let metrics: Vec<(&str, &str)> = rows.iter().map(|r| (r.method, r.metric)).collect();
        for want in [
            ("coredpp", "construct_seconds"),
            ("coredpp", "sample_seconds"),
            ("exact", "sample_seconds"),
            ("mcmc", "iterations"),
        ] {
            assert!(metrics.contains(&want), "{want:?}");
        }
        assert!(rows.iter().all(|r| r.value >= 0.0));
    }
}

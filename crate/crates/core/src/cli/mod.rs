//! Command-line front end: build, sample, eval, sweep and bench.

mod bench;
mod model_io;
mod sweep;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

pub use bench::{median, run_bench, write_bench_csv, BenchConfig, BenchRow};
pub use model_io::{load_model, save_model, ModelFile};
pub use sweep::{run_sweep, write_sweep_csv, Method, SweepConfig, SweepRow};

use crate::baselines::{kpp_baseline, mcmc_sample_until_converged};
use crate::coreset::{construct, ConstructConfig, CoreModel, Init, Objective};
use crate::datagen::{gen_synthetic, load_points, SyntheticSpec};
use crate::diagnostics::{evaluate, EvalOptions};
use crate::dpp::build_kdpp;
use crate::linalg::{median_bandwidth, FeatureKernel, KernelKind, PointSet};
use crate::rng::stream;
use crate::sampler::coredpp_sample;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "coredpp", version, about = "Coreset-based k-DPP sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a partition and coreset and write the model file.
    Build(BuildCmd),
    /// Draw samples with the chosen sampler.
    Sample(SampleCmd),
    /// Diagnostics report of a model against the exact k-DPP.
    Eval(EvalCmd),
    /// TV of every method over a synthetic grid, as long-format CSV.
    Sweep(SweepCmd),
    /// Construction and sampling times as a function of N.
    Bench(BenchCmd),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synthetic {
    pub n_clusters: usize,
    pub per_cluster: usize,
    pub dim: usize,
    pub mean_norm: f64,
}

impl FromStr for Synthetic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let f: Vec<&str> = s.split(':').collect();
        if f.len() != 4 {
            return Err("expected nClust:perCluster:dim:meanNorm".into());
        }
        let count = |x: &str| x.parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
        Ok(Synthetic {
            n_clusters: count(f[0])?,
            per_cluster: count(f[1])?,
            dim: count(f[2])?,
            mean_norm: f[3].parse().map_err(|e| format!("{:?}: {e}", f[3]))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Linear,
    /// `None` picks the median pairwise distance.
    Rbf(Option<f64>),
}

impl FromStr for KernelChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            None if s == "linear" => Ok(KernelChoice::Linear),
            None if s == "rbf" => Ok(KernelChoice::Rbf(None)),
            Some(("rbf", bw)) => bw
                .parse()
                .map(|b| KernelChoice::Rbf(Some(b)))
                .map_err(|e| format!("bandwidth {bw:?}: {e}")),
            _ => Err("expected linear, rbf or rbf:<bandwidth>".into()),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV of points, one per row.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// The CSV has a header row.
    #[arg(long)]
    pub header: bool,
    /// Gaussian mixture nClust:perCluster:dim:meanNorm.
    #[arg(long)]
    pub synthetic: Option<Synthetic>,
    #[arg(long, default_value = "linear")]
    pub kernel: KernelChoice,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl DataArgs {
    pub fn points(&self) -> Result<PointSet> {
        match (&self.data, &self.synthetic) {
            (Some(path), _) => load_points(path, self.header),
            (None, Some(s)) => gen_synthetic(&SyntheticSpec::new(
                s.n_clusters,
                s.per_cluster,
                s.dim,
                s.mean_norm,
                self.seed,
            )),
            (None, None) => Err(Error::InvalidInput("one of --data or --synthetic is required".into())),
        }
    }

    pub fn kernel(&self, points: PointSet) -> Result<FeatureKernel> {
        let kind = match self.kernel {
            KernelChoice::Linear => KernelKind::Linear,
            KernelChoice::Rbf(Some(bandwidth)) => KernelKind::Rbf { bandwidth },
            KernelChoice::Rbf(None) => KernelKind::Rbf {
                bandwidth: median_bandwidth(&points, 1000, &mut stream(self.seed, 7))?,
            },
        };
        FeatureKernel::new(points, kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Kmeanspp,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Accelerated,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Coredpp,
    Exact,
    Mcmc,
    Kpp,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub k: usize,
    /// Number of parts.
    #[arg(long = "M", default_value_t = 10)]
    pub parts: usize,
    #[arg(long, default_value_t = 3)]
    pub nu: usize,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    #[arg(long, value_enum, default_value = "kmeanspp")]
    pub init: InitArg,
    #[arg(long, value_enum, default_value = "accelerated")]
    pub objective: ObjectiveArg,
    /// Enumeration budget for exact quantities.
    #[arg(long, default_value_t = crate::subsets::DEFAULT_BUDGET)]
    pub budget: u128,
}

impl ModelArgs {
    fn config(&self) -> ConstructConfig {
        let mut c = ConstructConfig::new(self.k, self.parts)
            .nu(self.nu)
            .max_passes(self.passes)
            .init(match self.init {
                InitArg::Kmeanspp => Init::KMeansPP,
                InitArg::Random => Init::Random,
            })
            .objective(match self.objective {
                ObjectiveArg::Accelerated => Objective::Accelerated,
                ObjectiveArg::Exact => Objective::Exact,
            });
        c.budget = self.budget;
        c
    }

    /// Coreset construction, or the k-means baseline for `kpp`.
    fn build(&self, kernel: &FeatureKernel, kpp: bool, seed: u64) -> Result<CoreModel> {
        let mut rng = stream(seed, 1);
        if kpp {
            return kpp_baseline(kernel.points(), kernel, self.parts, self.k, &mut rng);
        }
        if self.objective == ObjectiveArg::Exact {
            return construct(&kernel.materialize()?, &self.config(), &mut rng);
        }
        construct(kernel, &self.config(), &mut rng)
    }
}

#[derive(Debug, Args)]
pub struct BuildCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// `kpp` builds the k-means baseline instead.
    #[arg(long, value_enum, default_value = "coredpp")]
    pub sampler: SamplerArg,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleCmd {
    #[command(flatten)]
    pub data: DataArgs,
    /// Required unless --model is given with the coredpp sampler.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "M", default_value_t = 10)]
    pub parts: usize,
    #[arg(long, default_value_t = 3)]
    pub nu: usize,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    #[arg(long, value_enum, default_value = "kmeanspp")]
    pub init: InitArg,
    #[arg(long, value_enum, default_value = "coredpp")]
    pub sampler: SamplerArg,
    /// Model file from `build` (coredpp sampler).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    /// Sample CSV; timings go to `<out>.timing.json`. Stdout/stderr if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 1.1)]
    pub psrf: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub mcmc_cap: u64,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model file; without it a model is built from the flags below.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "M", default_value_t = 10)]
    pub parts: usize,
    #[arg(long, default_value_t = 3)]
    pub nu: usize,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    #[arg(long, value_enum, default_value = "coredpp")]
    pub sampler: SamplerArg,
    #[arg(long, default_value_t = crate::subsets::DEFAULT_BUDGET)]
    pub budget: u128,
    /// Uniform probes for the TV estimate.
    #[arg(long, default_value_t = 10_000)]
    pub probes: usize,
    /// k-DPP draws for p_ns when exact enumeration is over budget.
    #[arg(long, default_value_t = 10_000)]
    pub mc_draws: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    /// Ground-set size per instance.
    #[arg(long, default_value_t = 60)]
    pub n: usize,
    #[arg(long, default_value_t = 30)]
    pub dim: usize,
    #[arg(long = "n-clust", value_delimiter = ',', default_value = "5,10")]
    pub n_clusters: Vec<usize>,
    #[arg(long = "mean-norms", value_delimiter = ',', default_value = "5,6,7,8,9")]
    pub mean_norms: Vec<f64>,
    #[arg(long = "M", value_delimiter = ',', default_value = "10")]
    pub parts: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub nu: usize,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    /// Seed list.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
    pub seeds: Vec<u64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "coredpp,coredpp-r,coredpp-exact,kpp")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = crate::subsets::DEFAULT_BUDGET)]
    pub budget: u128,
    #[arg(long, default_value_t = 20_000)]
    pub probes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    #[arg(long, value_delimiter = ',', default_value = "200,2000,4000,8000,20000")]
    pub sizes: Vec<usize>,
    #[arg(long = "M", default_value_t = 40)]
    pub parts: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub nu: usize,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    #[arg(long, default_value_t = 30)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub warmup: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 3)]
    pub construct_reps: usize,
    #[arg(long, default_value_t = 100)]
    pub batch: usize,
    #[arg(long, default_value_t = 2000)]
    pub exact_max: usize,
    #[arg(long)]
    pub no_mcmc: bool,
    #[arg(long, default_value_t = 200_000)]
    pub mcmc_cap: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn require_k(k: Option<usize>) -> Result<usize> {
    k.ok_or_else(|| Error::InvalidInput("--k is required".into()))
}

fn check_model_fits(model: &CoreModel, n: usize) -> Result<()> {
    if model.n() != n {
        return Err(Error::InvalidInput(format!(
            "model covers {} items, dataset has {n}",
            model.n()
        )));
    }
    Ok(())
}

fn cmd_build(cmd: &BuildCmd) -> Result<()> {
    let kernel = cmd.data.kernel(cmd.data.points()?)?;
    let kpp = match cmd.sampler {
        SamplerArg::Coredpp => false,
        SamplerArg::Kpp => true,
        other => {
            return Err(Error::InvalidInput(format!(
                "build supports --sampler coredpp or kpp, not {other:?}"
            )))
        }
    };
    let start = Instant::now();
    let model = cmd.model.build(&kernel, kpp, cmd.data.seed)?;
    let overhead = start.elapsed().as_secs_f64();
    save_model(&model, &cmd.out)?;
    write_json(
        &json!({
            "n": model.n(),
            "k": model.k(),
            "parts": model.partition().parts(),
            "overhead_seconds": overhead,
            "model": cmd.out,
        }),
        None,
    )
}

fn cmd_sample(cmd: &SampleCmd) -> Result<()> {
    let kernel = cmd.data.kernel(cmd.data.points()?)?;
    let n = kernel.points().len();
    let seed = cmd.data.seed;
    let model_args = |k| ModelArgs {
        k,
        parts: cmd.parts,
        nu: cmd.nu,
        passes: cmd.passes,
        init: cmd.init,
        objective: ObjectiveArg::Accelerated,
        budget: crate::subsets::DEFAULT_BUDGET,
    };

    let mut rng = stream(seed, 2);
    let mut draws: Vec<Vec<usize>> = Vec::with_capacity(cmd.samples);
    let mut per_sample = Vec::with_capacity(cmd.samples);
    let mut extra = serde_json::Map::new();
    let setup = Instant::now();
    let k;
    match cmd.sampler {
        SamplerArg::Coredpp | SamplerArg::Kpp => {
            let model = match (&cmd.model, cmd.sampler) {
                (Some(path), SamplerArg::Coredpp) => load_model(path)?,
                _ => model_args(require_k(cmd.k)?).build(&kernel, cmd.sampler == SamplerArg::Kpp, seed)?,
            };
            check_model_fits(&model, n)?;
            k = model.k();
            extra.insert("setup_seconds".into(), json!(setup.elapsed().as_secs_f64()));
            for _ in 0..cmd.samples {
                let t = Instant::now();
                draws.push(coredpp_sample(&model, &mut rng).sorted_items());
                per_sample.push(t.elapsed().as_secs_f64());
            }
        }
        SamplerArg::Exact => {
            k = require_k(cmd.k)?;
            let exact = build_kdpp(kernel.materialize()?, k)?;
            extra.insert("setup_seconds".into(), json!(setup.elapsed().as_secs_f64()));
            for _ in 0..cmd.samples {
                let t = Instant::now();
                draws.push(exact.sample(&mut rng));
                per_sample.push(t.elapsed().as_secs_f64());
            }
        }
        SamplerArg::Mcmc => {
            k = require_k(cmd.k)?;
            let mut iterations = Vec::new();
            let mut converged = Vec::new();
            let mut exclusive = Vec::new();
            for _ in 0..cmd.samples {
                let run = mcmc_sample_until_converged(&kernel, k, cmd.chains, cmd.psrf, cmd.mcmc_cap, &mut rng)?;
                per_sample.push(run.total_time.as_secs_f64());
                exclusive.push(run.total_time.saturating_sub(run.diagnostic_time).as_secs_f64());
                iterations.push(run.iterations);
                converged.push(run.converged);
                draws.push(run.sample);
            }
            extra.insert("iterations".into(), json!(iterations));
            extra.insert("converged".into(), json!(converged));
            extra.insert("per_sample_seconds_excl_diagnostic".into(), json!(exclusive));
        }
    }

    let mut out = open_out(cmd.out.as_deref())?;
    for d in &draws {
        let line: Vec<String> = d.iter().map(usize::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;

    let total: f64 = per_sample.iter().sum();
    let mut timing = serde_json::Map::new();
    timing.insert("sampler".into(), json!(format!("{:?}", cmd.sampler).to_lowercase()));
    timing.insert("n".into(), json!(n));
    timing.insert("k".into(), json!(k));
    timing.insert("samples".into(), json!(cmd.samples));
    timing.insert("total_seconds".into(), json!(total));
    timing.insert(
        "amortized_seconds".into(),
        json!(if cmd.samples > 0 { total / cmd.samples as f64 } else { 0.0 }),
    );
    timing.insert("median_seconds".into(), json!(median(&mut per_sample.clone())));
    timing.insert("per_sample_seconds".into(), json!(per_sample));
    timing.extend(extra);
    match &cmd.out {
        Some(p) => {
            let mut side = p.clone().into_os_string();
            side.push(".timing.json");
            write_json(&timing, Some(Path::new(&side)))
        }
        None => {
            eprintln!("{}", serde_json::to_string_pretty(&timing)?);
            Ok(())
        }
    }
}

fn cmd_eval(cmd: &EvalCmd) -> Result<()> {
    let kernel = cmd.data.kernel(cmd.data.points()?)?;
    let n = kernel.points().len();
    let model = match &cmd.model {
        Some(path) => load_model(path)?,
        None => {
            let kpp = match cmd.sampler {
                SamplerArg::Coredpp => false,
                SamplerArg::Kpp => true,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "eval builds coredpp or kpp models, not {other:?}"
                    )))
                }
            };
            ModelArgs {
                k: require_k(cmd.k)?,
                parts: cmd.parts,
                nu: cmd.nu,
                passes: cmd.passes,
                init: InitArg::Kmeanspp,
                objective: ObjectiveArg::Accelerated,
                budget: cmd.budget,
            }
            .build(&kernel, kpp, cmd.data.seed)?
        }
    };
    check_model_fits(&model, n)?;
    if let Some(k) = cmd.k {
        if k != model.k() {
            return Err(Error::InvalidInput(format!("--k {k} but the model has k = {}", model.k())));
        }
    }
    let target = build_kdpp(kernel.materialize()?, model.k())?;
    let opts = EvalOptions {
        budget: cmd.budget,
        probes: cmd.probes,
        mc_draws: cmd.mc_draws,
    };
    let report = evaluate(&target, &model, &opts, &mut stream(cmd.data.seed, 3))?;
    write_json(&report, cmd.out.as_deref())
}

fn cmd_sweep(cmd: &SweepCmd) -> Result<()> {
    let cfg = SweepConfig {
        n: cmd.n,
        dim: cmd.dim,
        n_clusters: cmd.n_clusters.clone(),
        mean_norms: cmd.mean_norms.clone(),
        parts: cmd.parts.clone(),
        ks: cmd.k.clone(),
        nu: cmd.nu,
        passes: cmd.passes,
        seeds: cmd.seeds.clone(),
        methods: cmd.methods.clone(),
        budget: cmd.budget,
        probes: cmd.probes,
    };
    let rows = run_sweep(&cfg)?;
    write_sweep_csv(&rows, open_out(cmd.out.as_deref())?)
}

fn cmd_bench(cmd: &BenchCmd) -> Result<()> {
    let cfg = BenchConfig {
        sizes: cmd.sizes.clone(),
        parts: cmd.parts,
        k: cmd.k,
        nu: cmd.nu,
        passes: cmd.passes,
        dim: cmd.dim,
        warmup: cmd.warmup,
        reps: cmd.reps,
        construct_reps: cmd.construct_reps,
        batch: cmd.batch,
        exact_max: cmd.exact_max,
        mcmc: !cmd.no_mcmc,
        mcmc_cap: cmd.mcmc_cap,
        seed: cmd.seed,
        ..BenchConfig::default()
    };
    let rows = run_bench(&cfg)?;
    write_bench_csv(&rows, open_out(cmd.out.as_deref())?)
}

/// Worker pool size from `COREDPP_THREADS`, if set.
fn init_threads() {
    if let Some(n) = std::env::var("COREDPP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    init_threads();
    match &cli.command {
        Command::Build(c) => cmd_build(c),
        Command::Sample(c) => cmd_sample(c),
        Command::Eval(c) => cmd_eval(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Bench(c) => cmd_bench(c),
    }
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        let s: Synthetic = "10:6:30:9".parse().unwrap();
        assert_eq!((s.n_clusters, s.per_cluster, s.dim, s.mean_norm), (10, 6, 30, 9.0));
        assert!("10:6:30".parse::<Synthetic>().is_err());
        assert_eq!("linear".parse::<KernelChoice>().unwrap(), KernelChoice::Linear);
        assert_eq!("rbf".parse::<KernelChoice>().unwrap(), KernelChoice::Rbf(None));
        assert_eq!("rbf:2.5".parse::<KernelChoice>().unwrap(), KernelChoice::Rbf(Some(2.5)));
        assert!("poly".parse::<KernelChoice>().is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["coredpp", "build"]), 1);
        assert_eq!(run(["coredpp", "frobnicate"]), 1);
        assert_eq!(run(["coredpp", "--help"]), 0);
    }
}

//! Command-line experiment driver.
//!
//! Every command reads one TOML config, derives all random streams from the
//! master seed and writes CSV/JSON files tagged with the SHA-256 of the config
//! text. Outputs depend only on `(config, seed)`, not on the thread count.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{Layout, ParamVector};
use crate::config::{config_hash, ExperimentConfig, LandscapeBase, ModelSpec};
use crate::error::{DvqeError, Result};
use crate::lindblad::Observable;
use crate::measure::{eigen_distribution, expectation_exact_sum, expectation_sampled_mixed, EigenMethod};
use crate::mitigate::mitigate;
use crate::optimize::{CostFunction, OptimizerConfig, SweepSummary};
use crate::oracle::{
    ansatz_density_matrix, density_to_pauli_text, distance_scatter_experiment, exact_ness, fidelity, median,
    residual, spearman, vector_overlap, write_matrix_csv, NessResult, ScatterRow, MAX_ORACLE_SITES,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::{expectation_sampled, Estimate};
use crate::ansatz::build_full_circuit;

/// Exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for numerical failures such as a degenerate steady state.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dvqe", version, about = "Variational steady states of open quantum systems")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "DVQE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize and measure at every sweep value, comparing with the exact solution.
    Sweep(RunArgs),
    /// Scan the cost along one parameter, with and without noise mitigation.
    Landscape(LandscapeArgs),
    /// Vector vs matrix distance scatter for random diagonal states.
    Scatter(ScatterArgs),
    /// Exact steady state of the configured model.
    OracleNess(RunArgs),
    /// Parse and check a config file.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accept a non-unique steady state instead of failing.
    #[arg(long)]
    pub allow_degenerate: bool,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Scanned parameter index (overrides `landscape.param`).
    #[arg(long)]
    pub param: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    /// Optional config; the `[scatter]` defaults apply without one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Maps an error to the process exit status.
pub fn exit_code(e: &DvqeError) -> i32 {
    match e {
        DvqeError::Config(_) | DvqeError::Parse(_) => EXIT_CONFIG,
        DvqeError::Numerical(_) => EXIT_NUMERICAL,
        _ => 1,
    }
}

/// Parses `args`, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // the global pool can only be set once per process
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    match &cli.command {
        Command::Sweep(a) => {
            let ctx = Context::new(a)?;
            run_sweep(&ctx, a.allow_degenerate).map(|_| ())
        }
        Command::Landscape(a) => {
            let ctx = Context::new(&a.run)?;
            let param = a.param.unwrap_or(ctx.cfg.landscape.param);
            run_landscape(&ctx, param).map(|_| ())
        }
        Command::Scatter(a) => run_distance_scatter(a).map(|_| ()),
        Command::OracleNess(a) => {
            let ctx = Context::new(a)?;
            run_oracle_ness(&ctx, a.allow_degenerate).map(|_| ())
        }
        Command::ValidateConfig { config } => {
            let (_, text) = ExperimentConfig::load(config)?;
            println!("ok {}", config_hash(&text));
            Ok(())
        }
    }
}

/// Loaded config plus resolved seed, output directory and hash.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    pub fn new(a: &RunArgs) -> Result<Self> {
        let (cfg, text) = ExperimentConfig::load(&a.config)?;
        Self::from_config(cfg, &text, a.out.clone(), a.seed)
    }

    pub fn from_config(cfg: ExperimentConfig, text: &str, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self> {
        let out = out
            .or_else(|| cfg.output_dir.clone())
            .ok_or_else(|| DvqeError::Config("no output directory (use --out or output_dir)".into()))?;
        fs::create_dir_all(&out)?;
        Ok(Self {
            seed: seed.unwrap_or(cfg.seed),
            hash: config_hash(text),
            cfg,
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| DvqeError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_io(e: csv::Error) -> DvqeError {
    DvqeError::Io(e.to_string())
}

fn opt_str(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    version: &'a str,
}

impl<'a> RunMeta<'a> {
    fn new(command: &'a str, ctx: &'a Context) -> Self {
        Self {
            command,
            config_hash: &ctx.hash,
            seed: ctx.seed,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Results for one sweep value.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: Option<f64>,
    pub cost: f64,
    pub params: Vec<f64>,
    pub converged: bool,
    pub observables: Vec<ObservableResult>,
    pub oracle: Option<OracleSummary>,
    #[serde(skip)]
    pub trace: crate::optimize::OptimizationTrace,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableResult {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    /// Noiseless value on the optimized ansatz state.
    pub state_exact: f64,
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub infidelity: f64,
    pub gap: f64,
    pub degenerate: bool,
    pub residual: f64,
    /// `1 − f²` for the normalized vectorized overlap `f`.
    pub vector_infidelity: f64,
    /// `cost / gap`, an upper bound for `vector_infidelity`.
    pub bound: f64,
}

fn measure_all(
    cfg: &ExperimentConfig,
    ansatz: &crate::ansatz::AnsatzConfig,
    theta: &ParamVector,
    observables: &[Observable],
    seed: u64,
) -> Result<Vec<(String, Estimate)>> {
    let m = &cfg.measure;
    let mut out = Vec::new();
    for (k, o) in observables.iter().enumerate() {
        let est = if m.exact {
            Estimate::exact(expectation_exact_sum(ansatz, theta, o)?)
        } else {
            let mut rng = rng_from_seed(derive_seed(seed, k as u64));
            let lambda = match m.eigen {
                EigenMethod::Statevector => None,
                method => Some(eigen_distribution(ansatz, theta.theta_d(), method, m.eigen_shots, &mut rng)?),
            };
            expectation_sampled_mixed(
                ansatz,
                theta,
                o,
                m.shots,
                cfg.noise.as_ref(),
                cfg.mitigation.as_ref(),
                lambda.as_ref(),
                &mut rng,
            )?
        };
        out.push((o.name().to_string(), est));
    }
    Ok(out)
}

fn oracle_summary(ness: &NessResult, rho: &crate::oracle::DensityMatrix, cost: f64) -> Result<OracleSummary> {
    let f = vector_overlap(rho.matrix(), ness.rho.matrix())?;
    Ok(OracleSummary {
        infidelity: 1.0 - fidelity(rho.matrix(), ness.rho.matrix())?,
        gap: ness.gap,
        degenerate: ness.degenerate,
        residual: 0.0,
        vector_infidelity: 1.0 - f * f,
        bound: if ness.gap > 0.0 { cost / ness.gap } else { f64::INFINITY },
    })
}

/// Optimizes and measures one model instance.
pub fn sweep_point(
    cfg: &ExperimentConfig,
    model_spec: &ModelSpec,
    value: Option<f64>,
    seed: u64,
    allow_degenerate: bool,
) -> Result<SweepPoint> {
    let ansatz = cfg.ansatz()?;
    let model = model_spec.build()?;
    let opt: OptimizerConfig = cfg.optimizer_config();
    let cf = CostFunction::new(&model, ansatz)?;
    let zero = cf.layout().zeros();
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let trace = cf.optimize(&opt, &zero, &mut rng)?;
    let theta = trace.final_params.clone();
    let observables = cfg.observables(model_spec)?;
    let measured = measure_all(cfg, ansatz, &theta, &observables, derive_seed(seed, 1))?;
    let ness = if model.n_sites() <= MAX_ORACLE_SITES {
        let ness = exact_ness(&model)?;
        if ness.degenerate && !allow_degenerate {
            return Err(DvqeError::Numerical(format!(
                "steady state is not unique at sweep value {value:?} (use --allow-degenerate)"
            )));
        }
        Some(ness)
    } else {
        log::warn!("{} sites exceed the exact solver limit; oracle skipped", model.n_sites());
        None
    };
    let cost_final = cf.exact(&theta)?;
    let oracle = match &ness {
        Some(n) => {
            let rho = ansatz_density_matrix(ansatz, &theta)?;
            let mut s = oracle_summary(n, &rho, cost_final)?;
            s.residual = residual(&model, n.rho.matrix())?;
            Some(s)
        }
        None => None,
    };
    let observables = measured
        .into_iter()
        .zip(&observables)
        .map(|((name, est), o)| {
            Ok(ObservableResult {
                name,
                estimate: est.value,
                stderr: est.stderr,
                state_exact: expectation_exact_sum(ansatz, &theta, o)?,
                oracle: match &ness {
                    Some(n) => Some(n.rho.expectation(o.op())?),
                    None => None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepPoint {
        value,
        cost: trace.final_cost,
        params: theta.values().to_vec(),
        converged: trace.converged,
        observables,
        oracle,
        trace,
    })
}

pub fn run_sweep(ctx: &Context, allow_degenerate: bool) -> Result<Vec<SweepPoint>> {
    let cfg = &ctx.cfg;
    let ansatz = cfg.ansatz()?;
    let (param, values): (String, Vec<Option<f64>>) = match &cfg.sweep {
        Some(s) => (s.param.clone(), s.values.iter().map(|&v| Some(v)).collect()),
        None => (String::new(), vec![None]),
    };
    let points = values
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let mut spec = cfg.model.clone();
            if let Some(v) = v {
                spec.set_param(&param, *v)?;
            }
            sweep_point(cfg, &spec, *v, derive_seed(ctx.seed, i as u64), allow_degenerate)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut w = csv_writer(&ctx.path("sweep.csv"))?;
    w.write_record([
        "param", "value", "observable", "estimate", "stderr", "state_exact", "oracle", "infidelity", "cost", "gap", "shots",
        "mitigated", "config_hash",
    ])
    .map_err(csv_io)?;
    let shots = if cfg.measure.exact { 0 } else { cfg.measure.shots };
    let mitigated = !cfg.measure.exact && cfg.noise.is_some_and(|n| !n.is_silent()) && cfg.mitigation.is_some();
    for p in &points {
        for o in &p.observables {
            w.write_record([
                param.clone(),
                opt_str(p.value),
                o.name.clone(),
                o.estimate.to_string(),
                o.stderr.to_string(),
                o.state_exact.to_string(),
                opt_str(o.oracle),
                opt_str(p.oracle.as_ref().map(|s| s.infidelity)),
                p.cost.to_string(),
                opt_str(p.oracle.as_ref().map(|s| s.gap)),
                shots.to_string(),
                mitigated.to_string(),
                ctx.hash.clone(),
            ])
            .map_err(csv_io)?;
        }
    }
    w.flush()?;

    let model_for = |p: &SweepPoint| -> Result<ModelSpec> {
        let mut spec = cfg.model.clone();
        if let Some(v) = p.value {
            spec.set_param(&param, v)?;
        }
        Ok(spec)
    };
    for (i, p) in points.iter().enumerate() {
        let mut jl = create(&ctx.path(&format!("trace_{i}.jsonl")))?;
        for r in &p.trace.records {
            let mut v = serde_json::to_value(r).map_err(|e| DvqeError::Io(e.to_string()))?;
            v["config_hash"] = serde_json::Value::String(ctx.hash.clone());
            writeln!(jl, "{v}")?;
        }
        jl.flush()?;
        let spec = model_for(p)?;
        let ness = match &p.oracle {
            Some(_) => Some(exact_ness(&spec.build()?)?),
            None => None,
        };
        let layout: Layout = ansatz.layout()?;
        let infid = |s: &SweepSummary| -> Result<f64> {
            let n = ness.as_ref().expect("oracle present");
            let rho = ansatz_density_matrix(ansatz, &layout.params(s.params.clone())?)?;
            Ok(1.0 - fidelity(rho.matrix(), n.rho.matrix())?)
        };
        let mut buf = Vec::new();
        p.trace.write_summary_csv(&mut buf, ness.as_ref().map(|_| &infid as &dyn Fn(&SweepSummary) -> Result<f64>))?;
        let text = String::from_utf8(buf).map_err(|e| DvqeError::Io(e.to_string()))?;
        let mut sw = create(&ctx.path(&format!("trace_{i}.csv")))?;
        for (k, line) in text.lines().enumerate() {
            let extra = if k == 0 { "config_hash".to_string() } else { ctx.hash.clone() };
            writeln!(sw, "{line},{extra}")?;
        }
        sw.flush()?;
    }

    #[derive(Serialize)]
    struct SweepMeta<'a> {
        #[serde(flatten)]
        run: RunMeta<'a>,
        sweep_param: &'a str,
        points: &'a [SweepPoint],
    }
    write_json(
        &ctx.path("run.json"),
        &SweepMeta {
            run: RunMeta::new("sweep", ctx),
            sweep_param: &param,
            points: &points,
        },
    )?;
    for p in &points {
        let inf = p.oracle.as_ref().map(|o| format!(" infidelity {:.3e}", o.infidelity)).unwrap_or_default();
        println!("{} = {}: cost {:.3e}{inf}", if param.is_empty() { "point" } else { &param }, opt_str(p.value), p.cost);
    }
    Ok(points)
}

/// Scanned landscape: angles, exact values and sampled columns.
#[derive(Debug, Clone, Serialize)]
pub struct LandscapeResult {
    pub angles: Vec<f64>,
    pub exact: Vec<f64>,
    /// `(factor, estimates)` per amplification factor; a single `(1, …)`
    /// column when mitigation is off.
    pub raw: Vec<(f64, Vec<Estimate>)>,
    pub mitigated: Option<Vec<Estimate>>,
    pub rms_raw_first: f64,
    pub rms_mitigated: Option<f64>,
}

fn rms(a: &[Estimate], exact: &[f64]) -> f64 {
    (a.iter().zip(exact).map(|(e, x)| (e.value - x).powi(2)).sum::<f64>() / exact.len() as f64).sqrt()
}

pub fn compute_landscape(ctx: &Context, param: usize) -> Result<LandscapeResult> {
    let cfg = &ctx.cfg;
    let ansatz = cfg.ansatz()?;
    let model = cfg.model.build()?;
    let cf = CostFunction::new(&model, ansatz)?;
    let layout = cf.layout().clone();
    if param >= layout.len() {
        return Err(DvqeError::Config(format!("parameter {param} out of range ({} parameters)", layout.len())));
    }
    let base = match cfg.landscape.base {
        LandscapeBase::Zeros => layout.zeros(),
        LandscapeBase::Random => layout.random(&mut rng_from_seed(derive_seed(ctx.seed, 1))),
        LandscapeBase::Optimized => {
            let opt = OptimizerConfig {
                noise: None,
                mitigation: None,
                exact: true,
                ..cfg.optimizer_config()
            };
            cf.optimize(&opt, &layout.zeros(), &mut rng_from_seed(derive_seed(ctx.seed, 1)))?
                .final_params
        }
    };
    let spec = &layout.specs[param];
    let n = cfg.landscape.points;
    let angles: Vec<f64> = (0..n)
        .map(|i| spec.lo + (spec.hi - spec.lo) * i as f64 / (n - 1) as f64)
        .collect();
    let op = cf.cost_operator();
    let shots = cfg.landscape.shots;
    let noise = cfg.noise.filter(|n| !n.is_silent());
    let per_angle = angles
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let theta = base.with(param, x);
            let exact = cf.exact(&theta)?;
            let c = build_full_circuit(ansatz, &theta)?;
            let mut rng = rng_from_seed(derive_seed(ctx.seed, 1000 + i as u64));
            let sampled = match (noise, &cfg.mitigation) {
                (Some(nz), Some(sched)) => {
                    let m = mitigate(sched, &c, &nz, &mut rng, |c, n, r| expectation_sampled(c, op, shots, Some(n), r))?;
                    (m.raw, Some(m.mitigated))
                }
                (nz, _) => (vec![(1.0, expectation_sampled(&c, op, shots, nz.as_ref(), &mut rng)?)], None),
            };
            Ok((exact, sampled))
        })
        .collect::<Result<Vec<_>>>()?;
    let exact: Vec<f64> = per_angle.iter().map(|p| p.0).collect();
    let factors: Vec<f64> = per_angle[0].1 .0.iter().map(|r| r.0).collect();
    let raw: Vec<(f64, Vec<Estimate>)> = factors
        .iter()
        .enumerate()
        .map(|(k, &f)| (f, per_angle.iter().map(|p| p.1 .0[k].1).collect()))
        .collect();
    let mitigated: Option<Vec<Estimate>> = per_angle.iter().map(|p| p.1 .1).collect();
    Ok(LandscapeResult {
        rms_raw_first: rms(&raw[0].1, &exact),
        rms_mitigated: mitigated.as_ref().map(|m| rms(m, &exact)),
        angles,
        exact,
        raw,
        mitigated,
    })
}

pub fn run_landscape(ctx: &Context, param: usize) -> Result<LandscapeResult> {
    let res = compute_landscape(ctx, param)?;
    let mut w = csv_writer(&ctx.path("landscape.csv"))?;
    let mut header = vec!["angle".to_string(), "exact".to_string()];
    let label = |f: f64| if res.mitigated.is_some() { format!("e{f}") } else { "sampled".to_string() };
    for (f, _) in &res.raw {
        header.push(label(*f));
        header.push(format!("{}_stderr", label(*f)));
    }
    if res.mitigated.is_some() {
        header.push("mitigated".into());
        header.push("mitigated_stderr".into());
    }
    header.push("config_hash".into());
    w.write_record(&header).map_err(csv_io)?;
    for (i, x) in res.angles.iter().enumerate() {
        let mut row = vec![x.to_string(), res.exact[i].to_string()];
        for (_, col) in &res.raw {
            row.push(col[i].value.to_string());
            row.push(col[i].stderr.to_string());
        }
        if let Some(m) = &res.mitigated {
            row.push(m[i].value.to_string());
            row.push(m[i].stderr.to_string());
        }
        row.push(ctx.hash.clone());
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct Meta<'a> {
        #[serde(flatten)]
        run: RunMeta<'a>,
        param: usize,
        rms_raw_first: f64,
        rms_mitigated: Option<f64>,
    }
    write_json(
        &ctx.path("landscape.json"),
        &Meta {
            run: RunMeta::new("landscape", ctx),
            param,
            rms_raw_first: res.rms_raw_first,
            rms_mitigated: res.rms_mitigated,
        },
    )?;
    match res.rms_mitigated {
        Some(m) => println!("rms vs exact: e1 {:.4e}, mitigated {m:.4e}", res.rms_raw_first),
        None => println!("rms vs exact: {:.4e}", res.rms_raw_first),
    }
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatterStats {
    pub n: usize,
    pub rows: usize,
    pub spearman: Option<f64>,
    pub median_abs_log10_ratio: Option<f64>,
}

/// Per-size correlation and median `|log₁₀(d_v/d_m)|` (rows with a zero
/// distance are left out of the ratio).
pub fn scatter_stats(rows: &[ScatterRow], n_list: &[usize]) -> Vec<ScatterStats> {
    n_list
        .iter()
        .map(|&n| {
            let sel: Vec<&ScatterRow> = rows.iter().filter(|r| r.n == n).collect();
            let dv: Vec<f64> = sel.iter().map(|r| r.d_v).collect();
            let dm: Vec<f64> = sel.iter().map(|r| r.d_m).collect();
            let mut ratios: Vec<f64> = sel
                .iter()
                .filter(|r| r.d_v > 0.0 && r.d_m > 0.0)
                .map(|r| (r.d_v / r.d_m).log10().abs())
                .collect();
            ScatterStats {
                n,
                rows: sel.len(),
                spearman: spearman(&dv, &dm),
                median_abs_log10_ratio: median(&mut ratios),
            }
        })
        .collect()
}

pub fn run_distance_scatter(a: &ScatterArgs) -> Result<Vec<ScatterRow>> {
    let (section, hash, seed, out) = match &a.config {
        Some(path) => {
            let (cfg, text) = ExperimentConfig::load(path)?;
            let out = a.out.clone().or(cfg.output_dir.clone());
            (cfg.scatter.clone(), config_hash(&text), a.seed.unwrap_or(cfg.seed), out)
        }
        None => {
            let seed = a
                .seed
                .ok_or_else(|| DvqeError::Config("scatter without --config needs --seed".into()))?;
            (Default::default(), config_hash(""), seed, a.out.clone())
        }
    };
    let out = out.ok_or_else(|| DvqeError::Config("no output directory (use --out or output_dir)".into()))?;
    fs::create_dir_all(&out)?;
    let scfg = section.to_config();
    let rows = distance_scatter_experiment(&scfg, seed)?;
    let mut w = csv_writer(&out.join("scatter.csv"))?;
    w.write_record(["n", "width", "d_v", "d_m", "config_hash"]).map_err(csv_io)?;
    for r in &rows {
        w.write_record([r.n.to_string(), r.width.to_string(), r.d_v.to_string(), r.d_m.to_string(), hash.clone()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    let stats = scatter_stats(&rows, &scfg.n_list);
    #[derive(Serialize)]
    struct Meta<'a> {
        command: &'a str,
        config_hash: &'a str,
        seed: u64,
        version: &'a str,
        stats: &'a [ScatterStats],
    }
    write_json(
        &out.join("scatter.json"),
        &Meta {
            command: "scatter",
            config_hash: &hash,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            stats: &stats,
        },
    )?;
    for s in &stats {
        println!(
            "n = {}: {} rows, spearman {}, median |log10(d_v/d_m)| {}",
            s.n,
            s.rows,
            opt_str(s.spearman),
            opt_str(s.median_abs_log10_ratio)
        );
    }
    Ok(rows)
}

pub fn run_oracle_ness(ctx: &Context, allow_degenerate: bool) -> Result<NessResult> {
    let model = ctx.cfg.model.build()?;
    let ness = exact_ness(&model)?;
    let mut w = create(&ctx.path("ness.csv"))?;
    let mut buf = Vec::new();
    write_matrix_csv(ness.rho.matrix(), &mut buf)?;
    let text = String::from_utf8(buf).map_err(|e| DvqeError::Io(e.to_string()))?;
    for (k, line) in text.lines().enumerate() {
        let extra = if k == 0 { "config_hash" } else { &ctx.hash };
        writeln!(w, "{line},{extra}")?;
    }
    w.flush()?;
    let mut p = create(&ctx.path("ness_pauli.txt"))?;
    writeln!(p, "# config_hash {}", ctx.hash)?;
    write!(p, "{}", density_to_pauli_text(&ness.rho)?)?;
    p.flush()?;
    let observables = ctx.cfg.observables(&ctx.cfg.model)?;
    let values = observables
        .iter()
        .map(|o| Ok((o.name().to_string(), ness.rho.expectation(o.op())?)))
        .collect::<Result<Vec<_>>>()?;
    #[derive(Serialize)]
    struct Meta<'a> {
        #[serde(flatten)]
        run: RunMeta<'a>,
        gap: f64,
        degenerate: bool,
        residual: f64,
        observables: Vec<(String, f64)>,
    }
    let res = residual(&model, ness.rho.matrix())?;
    write_json(
        &ctx.path("ness.json"),
        &Meta {
            run: RunMeta::new("oracle-ness", ctx),
            gap: ness.gap,
            degenerate: ness.degenerate,
            residual: res,
            observables: values.clone(),
        },
    )?;
    println!("gap {:.6e}, residual {:.3e}, degenerate {}", ness.gap, res, ness.degenerate);
    for (name, v) in &values {
        println!("{name} = {v}");
    }
    if ness.degenerate && !allow_degenerate {
        return Err(DvqeError::Numerical(
            "steady state is not unique (use --allow-degenerate to accept)".into(),
        ));
    }
    Ok(ness)
}

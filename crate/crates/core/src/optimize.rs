//! Sequential minimal optimization of `⟨L̂†L̂⟩`.
//!
//! The cost is a short trigonometric series in any single angle, so each
//! update samples a handful of points along one parameter, fits the series by
//! least squares and jumps to the fitted minimum.

use std::io::Write;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_full_circuit, AnsatzConfig, Layout, Modes, ParamSpec, ParamVector};
use crate::error::{DvqeError, Result};
use crate::lindblad::{cost_operator, liouvillian_vector, LindbladModel};
use crate::mitigate::{mitigate, MitigationSchedule};
use crate::oracle::csv_err;
use crate::pauli::PauliSum;
use crate::rng::{child_rng, rng_from_seed, SimRng};
use crate::sim::{expectation_sampled, run_circuit, CompiledPauliSum, Estimate, NoiseConfig};

const GRID_POINTS: usize = 2001;
const RANK_TOL: f64 = 1e-10;
const ABS_COST_TOL: f64 = 1e-14;

fn default_sweeps() -> usize {
    50
}
fn default_tol() -> f64 {
    1e-4
}
fn default_shots() -> u64 {
    400
}
fn default_exact() -> bool {
    true
}
fn default_stderr_mult() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Landscape points per update; `None` picks 5 for plain rotations and 9
    /// for the richer classes.
    #[serde(default)]
    pub n_points: Option<usize>,
    #[serde(default = "default_sweeps")]
    pub sweeps_max: usize,
    /// Relative cost change per sweep below which exact runs stop.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Sampled runs stop when the change per sweep is below this many stderrs.
    #[serde(default = "default_stderr_mult")]
    pub stderr_mult: f64,
    #[serde(default = "default_shots")]
    pub shots_per_term: u64,
    /// Exact statevector cost instead of sampling.
    #[serde(default = "default_exact")]
    pub exact: bool,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub mitigation: Option<MitigationSchedule>,
    /// Extra runs from uniformly random starting points; the best is kept.
    #[serde(default)]
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_points: None,
            sweeps_max: default_sweeps(),
            tol: default_tol(),
            stderr_mult: default_stderr_mult(),
            shots_per_term: default_shots(),
            exact: true,
            noise: None,
            mitigation: None,
            restarts: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn sampled(shots_per_term: u64) -> Self {
        Self {
            exact: false,
            shots_per_term,
            ..Self::default()
        }
    }

    pub fn points_for(&self, modes: Modes) -> usize {
        self.n_points.unwrap_or(match modes {
            Modes::Plain => 5,
            Modes::Controlled | Modes::Shared => 9,
        })
    }

    pub fn validate(&self, layout: &Layout) -> Result<()> {
        for s in &layout.specs {
            let need = s.modes.coefficient_count();
            if self.points_for(s.modes) < need {
                return Err(DvqeError::arg(format!(
                    "{} needs at least {need} landscape points",
                    s.label
                )));
            }
        }
        if self.shots_per_term == 0 {
            return Err(DvqeError::arg("shots_per_term must be at least 1"));
        }
        if !(self.tol >= 0.0) || !(self.stderr_mult >= 0.0) {
            return Err(DvqeError::arg("tolerances must be non-negative"));
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if let Some(m) = &self.mitigation {
            m.validate()?;
        }
        Ok(())
    }

    fn active_noise(&self) -> Option<&NoiseConfig> {
        self.noise.as_ref().filter(|n| !n.is_silent())
    }
}

/// Cost `⟨0|U†(θ) L̂†L̂ U(θ)|0⟩` of one model under one ansatz.
pub struct CostFunction {
    ansatz: AnsatzConfig,
    layout: Layout,
    liouvillian: CompiledPauliSum,
    model: LindbladModel,
    cost_op: OnceLock<PauliSum>,
}

impl CostFunction {
    pub fn new(model: &LindbladModel, ansatz: &AnsatzConfig) -> Result<Self> {
        if model.n_sites() != ansatz.n_sites {
            return Err(DvqeError::dim(model.n_sites(), ansatz.n_sites));
        }
        Ok(Self {
            ansatz: ansatz.clone(),
            layout: ansatz.layout()?,
            liouvillian: CompiledPauliSum::new(&liouvillian_vector(model)),
            model: model.clone(),
            cost_op: OnceLock::new(),
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn ansatz(&self) -> &AnsatzConfig {
        &self.ansatz
    }

    pub fn cost_operator(&self) -> &PauliSum {
        self.cost_op.get_or_init(|| cost_operator(&self.model))
    }

    /// Noiseless cost, computed as `‖L̂ U(θ)|0⟩‖²`.
    pub fn exact(&self, theta: &ParamVector) -> Result<f64> {
        let c = build_full_circuit(&self.ansatz, theta)?;
        let psi = run_circuit(&c, None, &mut rng_from_seed(0))?;
        Ok(self.liouvillian.norm_sqr_after(psi.amplitudes()))
    }

    /// Cost under the optimizer's evaluation settings.
    pub fn evaluate(&self, theta: &ParamVector, opt: &OptimizerConfig, rng: &mut SimRng) -> Result<Estimate> {
        if opt.exact {
            return Ok(Estimate::exact(self.exact(theta)?));
        }
        let c = build_full_circuit(&self.ansatz, theta)?;
        let op = self.cost_operator();
        let shots = opt.shots_per_term;
        match (opt.active_noise(), &opt.mitigation) {
            (Some(noise), Some(schedule)) => Ok(mitigate(schedule, &c, noise, rng, |c, n, r| {
                expectation_sampled(c, op, shots, Some(n), r)
            })?
            .mitigated),
            (noise, _) => expectation_sampled(&c, op, shots, noise, rng),
        }
    }
}

/// Cost at `θ` for `model`; see [`CostFunction::evaluate`].
pub fn evaluate_cost(
    model: &LindbladModel,
    ansatz: &AnsatzConfig,
    theta: &ParamVector,
    opt: &OptimizerConfig,
    rng: &mut SimRng,
) -> Result<Estimate> {
    CostFunction::new(model, ansatz)?.evaluate(theta, opt, rng)
}

/// Fitted one-parameter landscape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    pub modes: Modes,
    /// `[a₀, a₁, b₁, a₂, b₂, …]` for `a₀ + Σ aₖ cos ωₖθ + bₖ sin ωₖθ`.
    pub coeffs: Vec<f64>,
    pub argmin: f64,
    pub min_value: f64,
}

fn basis_row(modes: Modes, x: f64) -> Vec<f64> {
    let mut row = vec![1.0];
    for &w in modes.frequencies() {
        row.push((w * x).cos());
        row.push((w * x).sin());
    }
    row
}

impl Landscape {
    pub fn value(&self, x: f64) -> f64 {
        basis_row(self.modes, x)
            .iter()
            .zip(&self.coeffs)
            .map(|(b, c)| b * c)
            .sum()
    }
}

/// Least-squares fit of `points` in the basis of `modes`, minimized over
/// `[lo, hi]` by a grid scan and golden-section refinement. Ties go to the
/// smallest angle.
pub fn fit_landscape(points: &[(f64, f64)], modes: Modes, lo: f64, hi: f64) -> Result<Landscape> {
    let k = modes.coefficient_count();
    if points.len() < k {
        return Err(DvqeError::Fit(format!(
            "{} points cannot determine {k} coefficients",
            points.len()
        )));
    }
    if !(lo <= hi) {
        return Err(DvqeError::arg(format!("empty search interval [{lo}, {hi}]")));
    }
    let rows: Vec<f64> = points.iter().flat_map(|&(x, _)| basis_row(modes, x)).collect();
    let a = DMatrix::from_row_slice(points.len(), k, &rows);
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= RANK_TOL * smax {
        return Err(DvqeError::Fit("landscape design matrix is rank deficient".into()));
    }
    let coeffs = svd
        .solve(&y, 0.0)
        .map_err(|e| DvqeError::Fit(e.to_string()))?
        .iter()
        .copied()
        .collect();
    let mut land = Landscape {
        modes,
        coeffs,
        argmin: lo,
        min_value: 0.0,
    };
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&x| land.value(x)).collect();
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = land.coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1e-300);
    let best = vals
        .iter()
        .position(|&v| v <= min + 1e-12 * scale)
        .expect("grid is non-empty");
    let (mut x, mut fx) = (grid[best], vals[best]);
    if hi > lo {
        let h = (hi - lo) / (GRID_POINTS - 1) as f64;
        let (r, fr) = golden_section(|t| land.value(t), (x - h).max(lo), (x + h).min(hi));
        if fr < fx - 1e-12 * scale {
            x = r;
            fx = fr;
        }
    }
    land.argmin = x;
    land.min_value = fx;
    Ok(land)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

/// Landscape sample angles: inclusive endpoints for restricted parameters,
/// one period without the duplicate endpoint for periodic ones.
pub fn sample_angles(spec: &ParamSpec, n: usize) -> Vec<f64> {
    let w = spec.hi - spec.lo;
    if spec.periodic {
        (0..n).map(|s| spec.lo + w * s as f64 / n as f64).collect()
    } else if n == 1 {
        vec![spec.lo]
    } else {
        (0..n).map(|s| spec.lo + w * s as f64 / (n - 1) as f64).collect()
    }
}

/// One SMO update of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub restart: usize,
    pub sweep: usize,
    pub param: usize,
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub stderrs: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub chosen: f64,
    /// Exact cost after the update (exact mode) or fitted minimum (sampled).
    pub cost: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub restart: usize,
    pub sweep: usize,
    pub cost: f64,
    pub stderr: f64,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<UpdateRecord>,
    pub sweeps: Vec<SweepSummary>,
    pub final_params: ParamVector,
    pub final_cost: f64,
    pub converged: bool,
    /// Which run (0 = the given start) produced the final parameters.
    pub best_restart: usize,
}

impl OptimizationTrace {
    /// One JSON object per update record.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            let line = serde_json::to_string(r).map_err(|e| DvqeError::Io(e.to_string()))?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// `restart,sweep,cost,stderr,infidelity` with one row per sweep; the
    /// infidelity column is empty unless `infidelity` supplies it.
    pub fn write_summary_csv<W: Write>(
        &self,
        w: W,
        infidelity: Option<&dyn Fn(&SweepSummary) -> Result<f64>>,
    ) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["restart", "sweep", "cost", "stderr", "infidelity"])
            .map_err(csv_err)?;
        for s in &self.sweeps {
            let inf = match infidelity {
                Some(f) => f(s)?.to_string(),
                None => String::new(),
            };
            wr.write_record([
                s.restart.to_string(),
                s.sweep.to_string(),
                s.cost.to_string(),
                s.stderr.to_string(),
                inf,
            ])
            .map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

struct RunResult {
    records: Vec<UpdateRecord>,
    sweeps: Vec<SweepSummary>,
    params: ParamVector,
    cost: f64,
    converged: bool,
}

/// SMO from `theta0`, plus `opt.restarts` random restarts.
pub fn smo_optimize(
    model: &LindbladModel,
    ansatz: &AnsatzConfig,
    opt: &OptimizerConfig,
    theta0: &ParamVector,
    rng: &mut SimRng,
) -> Result<OptimizationTrace> {
    CostFunction::new(model, ansatz)?.optimize(opt, theta0, rng)
}

impl CostFunction {
    pub fn optimize(&self, opt: &OptimizerConfig, theta0: &ParamVector, rng: &mut SimRng) -> Result<OptimizationTrace> {
        opt.validate(&self.layout)?;
        let theta0 = self.layout.params(theta0.values().to_vec())?;
        let mut starts = vec![theta0];
        for _ in 0..opt.restarts {
            starts.push(self.layout.random(rng));
        }
        let mut all_records = Vec::new();
        let mut all_sweeps = Vec::new();
        let mut best: Option<(usize, RunResult)> = None;
        for (i, start) in starts.into_iter().enumerate() {
            let seed: u64 = rng.random();
            let run = self.single_run(opt, start, i, seed)?;
            all_records.extend(run.records.iter().cloned());
            all_sweeps.extend(run.sweeps.iter().cloned());
            if best.as_ref().is_none_or(|(_, b)| run.cost < b.cost) {
                best = Some((i, run));
            }
        }
        let (best_restart, run) = best.expect("at least one run");
        Ok(OptimizationTrace {
            records: all_records,
            sweeps: all_sweeps,
            final_params: run.params,
            final_cost: run.cost,
            converged: run.converged,
            best_restart,
        })
    }

    fn single_run(&self, opt: &OptimizerConfig, mut theta: ParamVector, restart: usize, seed: u64) -> Result<RunResult> {
        let mut stream = 0u64;
        let mut next_rng = || {
            stream += 1;
            child_rng(seed, stream)
        };
        let first = self.evaluate(&theta, opt, &mut next_rng())?;
        let mut prev = first.value;
        let mut records = Vec::new();
        let mut sweeps = Vec::new();
        let mut converged = false;
        let mut current = first;
        for sweep in 0..opt.sweeps_max {
            for k in 0..theta.len() {
                let spec = &self.layout.specs[k];
                let angles = sample_angles(spec, opt.points_for(spec.modes));
                let base: u64 = next_rng().random();
                let ests = angles
                    .par_iter()
                    .enumerate()
                    .map(|(s, &x)| self.evaluate(&theta.with(k, x), opt, &mut child_rng(base, s as u64)))
                    .collect::<Result<Vec<_>>>()?;
                let points: Vec<(f64, f64)> = angles.iter().zip(&ests).map(|(&x, e)| (x, e.value)).collect();
                let stderrs: Vec<f64> = ests.iter().map(|e| e.stderr).collect();
                let fit = match fit_landscape(&points, spec.modes, spec.lo, spec.hi) {
                    Ok(f) => f,
                    Err(e) => {
                        log::warn!("skipping update of {}: {e}", spec.label);
                        records.push(UpdateRecord {
                            restart,
                            sweep,
                            param: k,
                            label: spec.label.clone(),
                            points,
                            stderrs,
                            coeffs: Vec::new(),
                            chosen: theta.values()[k],
                            cost: current.value,
                            accepted: false,
                        });
                        continue;
                    }
                };
                let candidate = theta.with(k, fit.argmin);
                let (accepted, cost) = if opt.exact {
                    let c_new = self.exact(&candidate)?;
                    if c_new <= current.value + 1e-12 * current.value.abs().max(1e-300) {
                        (true, c_new)
                    } else {
                        (false, current.value)
                    }
                } else {
                    (true, fit.min_value)
                };
                if accepted {
                    theta = candidate;
                    let stderr = stderrs.iter().copied().fold(0.0, f64::max);
                    current = Estimate { value: cost, stderr };
                }
                records.push(UpdateRecord {
                    restart,
                    sweep,
                    param: k,
                    label: spec.label.clone(),
                    points,
                    stderrs,
                    coeffs: fit.coeffs,
                    chosen: theta.values()[k],
                    cost: current.value,
                    accepted,
                });
            }
            sweeps.push(SweepSummary {
                restart,
                sweep,
                cost: current.value,
                stderr: current.stderr,
                params: theta.values().to_vec(),
            });
            log::debug!("restart {restart} sweep {sweep}: cost {:e}", current.value);
            let change = (prev - current.value).abs();
            let done = if opt.exact {
                current.value < ABS_COST_TOL || change < opt.tol * prev.abs().max(1e-300)
            } else {
                change < opt.stderr_mult * current.stderr || current.value.abs() < ABS_COST_TOL
            };
            prev = current.value;
            if done {
                converged = true;
                break;
            }
        }
        Ok(RunResult {
            records,
            sweeps,
            params: theta,
            cost: current.value,
            converged,
        })
    }
}

//! Observables of the optimized state on the physical register alone.
//!
//! The ansatz state is `ρ = Σ_q λ_q V|q⟩⟨q|V†` with `λ_q` the (trace-normalized)
//! amplitudes prepared by `D̃`, so `Tr(ρO) = Σ_q λ_q ⟨q|V†OV|q⟩` needs only
//! `N` qubits per circuit.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_basis_circuit, build_eigen_circuit, AnsatzConfig, EigenType, ParamVector};
use crate::error::{DvqeError, Result};
use crate::lindblad::Observable;
use crate::mitigate::{mitigate, MitigationSchedule};
use crate::oracle::csv_err;
use crate::rng::{child_rng, rng_from_seed, SimRng};
use crate::sim::{
    combine_terms, expectation_exact, run_circuit, run_circuit_from, sample_bitstrings,
    sample_single_term, Circuit, Estimate, NoiseConfig,
};

/// Recommended minimum shot count for sampled eigenvalue estimates; the
/// square root of small empirical frequencies is biased upward.
pub const EIGEN_SHOTS_FLOOR: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    /// Closed form from the decoupled `RY` angles.
    Analytic,
    /// Exact amplitudes of the simulated `D̃` circuit.
    Statevector,
    /// Square roots of measured basis frequencies.
    Sampled,
}

/// Non-negative weights `λ_q` indexed by basis state (qubit 0 most significant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDistribution {
    values: Vec<f64>,
    trace_normalized: bool,
}

impl EigenDistribution {
    /// Amplitude-normalized weights (`Σ λ_q² = 1`).
    pub fn from_amplitudes(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_power_of_two() {
            return Err(DvqeError::arg("distribution length is not a power of two"));
        }
        if values.iter().any(|&x| !(x >= -1e-12)) {
            return Err(DvqeError::arg("eigenvalue amplitudes must be non-negative"));
        }
        Ok(Self {
            values: values.into_iter().map(|x| x.max(0.0)).collect(),
            trace_normalized: false,
        })
    }

    /// Rescaled so that `Σ λ_q = 1`.
    pub fn trace_normalized(&self) -> Result<Self> {
        let total: f64 = self.values.iter().sum();
        if total <= 0.0 {
            return Err(DvqeError::arg("eigenvalue distribution has zero trace"));
        }
        Ok(Self {
            values: self.values.iter().map(|x| x / total).collect(),
            trace_normalized: true,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_trace_normalized(&self) -> bool {
        self.trace_normalized
    }

    pub fn n_sites(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }
}

/// Trace-normalized `λ` of the ansatz with eigen angles `theta_d`.
pub fn eigen_distribution(
    cfg: &AnsatzConfig,
    theta_d: &[f64],
    method: EigenMethod,
    shots: u64,
    rng: &mut SimRng,
) -> Result<EigenDistribution> {
    let amps = match method {
        EigenMethod::Analytic => {
            if cfg.eig_type != EigenType::Decoupled || cfg.layout.is_some() {
                return Err(DvqeError::arg("analytic eigenvalues need the decoupled layout"));
            }
            if theta_d.len() != cfg.n_sites {
                return Err(DvqeError::dim(cfg.n_sites, theta_d.len()));
            }
            let n = cfg.n_sites;
            (0..1usize << n)
                .map(|q| {
                    (0..n)
                        .map(|i| {
                            let half = theta_d[i] / 2.0;
                            if (q >> (n - 1 - i)) & 1 == 1 {
                                half.sin()
                            } else {
                                half.cos()
                            }
                        })
                        .product()
                })
                .collect()
        }
        EigenMethod::Statevector => {
            let c = build_eigen_circuit(cfg, theta_d)?;
            run_circuit(&c, None, rng)?.amplitudes().iter().map(|a| a.re).collect()
        }
        EigenMethod::Sampled => {
            if shots < EIGEN_SHOTS_FLOOR {
                log::warn!("{shots} shots for eigenvalue sampling is below the recommended {EIGEN_SHOTS_FLOOR}");
            }
            let c = build_eigen_circuit(cfg, theta_d)?;
            sample_bitstrings(&c, shots, None, rng)?
                .into_iter()
                .map(|k| (k as f64 / shots as f64).sqrt())
                .collect()
        }
    };
    EigenDistribution::from_amplitudes(amps)?.trace_normalized()
}

/// Replaces an `RY` angle `θ ∈ [0, π]` with amplitudes `(cos θ/2, sin θ/2)`
/// by `θ'` whose measured probabilities `(cos² θ'/2, sin² θ'/2)` equal the
/// trace-normalized pair `(cos θ/2, sin θ/2)/(cos θ/2 + sin θ/2)`.
pub fn dephasing_angle_transform(theta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(DvqeError::arg(format!(
            "dephasing transform needs θ in [0, π], got {theta}"
        )));
    }
    let s = (theta / 2.0).sin();
    let c = ((std::f64::consts::PI - theta) / 2.0).sin();
    Ok(2.0 * s.sqrt().atan2(c.sqrt()))
}

/// Transformed angles for every qubit of a decoupled ansatz.
pub fn dephasing_angles(cfg: &AnsatzConfig, theta_d: &[f64]) -> Result<Vec<f64>> {
    if cfg.eig_type != EigenType::Decoupled || cfg.layout.is_some() {
        return Err(DvqeError::arg("dephasing transform needs the decoupled layout"));
    }
    theta_d.iter().map(|&t| dephasing_angle_transform(t)).collect()
}

/// `Σ_q λ_q ⟨q|V†OV|q⟩` with exact `λ` and exact expectations.
pub fn expectation_exact_sum(cfg: &AnsatzConfig, theta: &ParamVector, o: &Observable) -> Result<f64> {
    let mut rng = rng_from_seed(0);
    let lambda = eigen_distribution(cfg, theta.theta_d(), EigenMethod::Statevector, 0, &mut rng)?;
    let v = build_basis_circuit(cfg, theta.theta_v())?;
    let mut total = 0.0;
    for (q, &l) in lambda.values().iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let s = run_circuit_from(&v, q, None, &mut rng)?;
        total += l * expectation_exact(&s, o.op())?;
    }
    Ok(total)
}

/// Multinomial counts over `weights` (which sum to 1).
fn multinomial(weights: &[f64], shots: u64, rng: &mut SimRng) -> Result<Vec<u64>> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = vec![0; weights.len()];
    for (k, &w) in weights.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == weights.len() || mass <= 0.0 {
            out[k] = left;
            break;
        }
        let p = (w / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(left, p)
            .map_err(|e| DvqeError::Numerical(e.to_string()))?
            .sample(rng);
        out[k] = draw;
        left -= draw;
        mass -= w;
    }
    Ok(out)
}

/// Each of the `shots` per Pauli term draws its own `q ~ λ`, runs `V` from
/// `|q⟩` and records one `±1` parity.
fn mixed_once(
    v: &Circuit,
    lambda: &EigenDistribution,
    o: &Observable,
    shots: u64,
    noise: Option<&NoiseConfig>,
    rng: &mut SimRng,
) -> Result<Estimate> {
    let base: u64 = rng.random();
    let plus = o
        .op()
        .terms()
        .par_iter()
        .enumerate()
        .map(|(t, (_, s))| {
            if s.is_identity() {
                return Ok(shots);
            }
            let mut r = child_rng(base, t as u64);
            let counts = multinomial(lambda.values(), shots, &mut r)?;
            let mut total = 0;
            for (q, &k) in counts.iter().enumerate() {
                if k > 0 {
                    total += sample_single_term(v, q, s, k, noise, &mut r)?;
                }
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_terms(o.op(), &plus, shots))
}

/// Sampled `Tr(ρO)`. `lambda` defaults to the exact trace-normalized
/// distribution; pass a sampled one to include its estimation error.
#[allow(clippy::too_many_arguments)]
pub fn expectation_sampled_mixed(
    cfg: &AnsatzConfig,
    theta: &ParamVector,
    o: &Observable,
    shots: u64,
    noise: Option<&NoiseConfig>,
    mitigation: Option<&MitigationSchedule>,
    lambda: Option<&EigenDistribution>,
    rng: &mut SimRng,
) -> Result<Estimate> {
    if shots == 0 {
        return Err(DvqeError::arg("shots must be at least 1"));
    }
    if o.op().n() != cfg.n_sites {
        return Err(DvqeError::dim(cfg.n_sites, o.op().n()));
    }
    let exact_lambda;
    let lambda = match lambda {
        Some(l) => l.trace_normalized()?,
        None => {
            exact_lambda = eigen_distribution(cfg, theta.theta_d(), EigenMethod::Statevector, 0, rng)?;
            exact_lambda
        }
    };
    if lambda.n_sites() != cfg.n_sites {
        return Err(DvqeError::dim(cfg.n_sites, lambda.n_sites()));
    }
    let v = build_basis_circuit(cfg, theta.theta_v())?;
    let noise = noise.filter(|n| !n.is_silent());
    match (noise, mitigation) {
        (Some(n), Some(sched)) => Ok(mitigate(sched, &v, n, rng, |c, nz, r| {
            mixed_once(c, &lambda, o, shots, Some(nz), r)
        })?
        .mitigated),
        _ => mixed_once(&v, &lambda, o, shots, noise, rng),
    }
}

/// One line of a measurement results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub observable: String,
    pub estimate: f64,
    pub stderr: f64,
    /// Shots per Pauli term; 0 for exact evaluation.
    pub shots: u64,
    pub mitigated: bool,
}

pub fn write_results_csv<W: Write>(rows: &[MeasurementRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["observable", "estimate", "stderr", "shots", "mitigated_flag"])
        .map_err(csv_err)?;
    for r in rows {
        wr.write_record([
            r.observable.clone(),
            r.estimate.to_string(),
            r.stderr.to_string(),
            r.shots.to_string(),
            r.mitigated.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

//! Zero-noise extrapolation: amplify gate errors by factors `ℰ`, then fit a
//! line through the noisy values and read it off at `ℰ = 0`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DvqeError, Result};
use crate::rng::{child_rng, SimRng};
use crate::sim::{Circuit, Estimate, Gate, NoiseConfig};

/// How noise is amplified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MitigationMode {
    /// Multiply the depolarizing rates by `ℰ`.
    Rates,
    /// Fold every gate into `ℰ` noisy copies at fixed rates.
    Folding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationSchedule {
    pub mode: MitigationMode,
    pub factors: Vec<f64>,
}

impl MitigationSchedule {
    pub fn new(mode: MitigationMode, factors: Vec<f64>) -> Result<Self> {
        let s = Self { mode, factors };
        s.validate()?;
        Ok(s)
    }

    /// `ℰ ∈ {1, 2, 3}` for rates, `{1, 3, 5}` for folding.
    pub fn default_for(mode: MitigationMode) -> Self {
        let factors = match mode {
            MitigationMode::Rates => vec![1.0, 2.0, 3.0],
            MitigationMode::Folding => vec![1.0, 3.0, 5.0],
        };
        Self { mode, factors }
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.iter().any(|&e| !(e >= 1.0 && e.is_finite())) {
            return Err(DvqeError::arg(format!(
                "amplification factors must be ≥ 1, got {:?}",
                self.factors
            )));
        }
        let mut distinct = self.factors.clone();
        distinct.sort_by(|a, b| a.total_cmp(b));
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(DvqeError::arg("need at least two distinct amplification factors"));
        }
        if self.mode == MitigationMode::Folding {
            for &e in &self.factors {
                odd_factor(e)?;
            }
        }
        Ok(())
    }
}

fn odd_factor(e: f64) -> Result<usize> {
    if e.fract() != 0.0 || e < 1.0 || (e as usize) % 2 == 0 {
        return Err(DvqeError::arg(format!("folding factor {e} is not an odd integer")));
    }
    Ok(e as usize)
}

/// Rates scaled by `ℰ`, clamped to `[0, 1]`.
pub fn amplify_noise(noise: &NoiseConfig, e: f64) -> Result<NoiseConfig> {
    if !(e >= 1.0 && e.is_finite()) {
        return Err(DvqeError::arg(format!("amplification factor {e} below 1")));
    }
    Ok(NoiseConfig {
        p1: (noise.p1 * e).clamp(0.0, 1.0),
        p2: (noise.p2 * e).clamp(0.0, 1.0),
        enabled: noise.enabled,
    })
}

/// Replaces every gate `G` by `G (G† G)^((ℰ−1)/2)`, which is the identity
/// transformation on the ideal unitary.
pub fn fold_circuit(c: &Circuit, e: usize) -> Result<Circuit> {
    if e % 2 == 0 {
        return Err(DvqeError::arg(format!("folding factor {e} is not odd")));
    }
    let mut out = Circuit::new(c.n);
    for g in &c.gates {
        out.gates.push(*g);
        for _ in 0..(e - 1) / 2 {
            out.gates.push(g.inverse());
            out.gates.push(*g);
        }
    }
    Ok(out)
}

/// Literal rewrite: CZ becomes `CZ^ℰ` and `RX(±π/2)` becomes
/// `RZ(π) RX(±π/2)^ℰ RZ(π)`; other gates pass through.
///
/// With the `exp(−iσθ/2)` convention the RX rewrite reproduces the original
/// gate only for `ℰ ≡ 3 (mod 4)`; for `ℰ = 1, 5` it yields `RX(∓π/2)` up to
/// phase. Kept for comparison, not used by the optimizer.
pub fn fold_circuit_literal(c: &Circuit, e: usize) -> Result<Circuit> {
    if e % 2 == 0 {
        return Err(DvqeError::arg(format!("folding factor {e} is not odd")));
    }
    let mut out = Circuit::new(c.n);
    for g in &c.gates {
        match *g {
            Gate::Cz { .. } => out.gates.extend(std::iter::repeat_n(*g, e)),
            Gate::Rx { q, theta } if ((theta.abs() - PI / 2.0).abs()) < 1e-12 => {
                out.gates.push(Gate::Rz { q, theta: PI });
                out.gates.extend(std::iter::repeat_n(*g, e));
                out.gates.push(Gate::Rz { q, theta: PI });
            }
            _ => out.gates.push(*g),
        }
    }
    Ok(out)
}

/// Least-squares line through `(ℰ, value)` evaluated at `ℰ = 0`.
pub fn extrapolate_zero_noise(points: &[(f64, f64)]) -> Result<f64> {
    let est: Vec<(f64, Estimate)> = points.iter().map(|&(e, v)| (e, Estimate::exact(v))).collect();
    Ok(extrapolate_estimates(&est)?.value)
}

/// As [`extrapolate_zero_noise`], propagating independent standard errors
/// through the linear intercept weights.
pub fn extrapolate_estimates(points: &[(f64, Estimate)]) -> Result<Estimate> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(DvqeError::Fit("extrapolation needs at least two points".into()));
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx <= 1e-14 * mean_x.abs().max(1.0) {
        return Err(DvqeError::Fit("amplification factors are all identical".into()));
    }
    let mut value = 0.0;
    let mut var = 0.0;
    for (x, est) in points {
        let w = 1.0 / n - mean_x * (x - mean_x) / sxx;
        value += w * est.value;
        var += (w * est.stderr).powi(2);
    }
    Ok(Estimate {
        value,
        stderr: var.sqrt(),
    })
}

/// One amplified evaluation: the circuit to run and the noise to run it with.
#[derive(Debug, Clone)]
pub struct Amplified {
    pub factor: f64,
    pub circuit: Circuit,
    pub noise: NoiseConfig,
}

/// Circuits and noise settings for every factor of the schedule.
pub fn amplified_runs(
    schedule: &MitigationSchedule,
    c: &Circuit,
    noise: &NoiseConfig,
) -> Result<Vec<Amplified>> {
    schedule.validate()?;
    schedule
        .factors
        .iter()
        .map(|&e| {
            Ok(match schedule.mode {
                MitigationMode::Rates => Amplified {
                    factor: e,
                    circuit: c.clone(),
                    noise: amplify_noise(noise, e)?,
                },
                MitigationMode::Folding => Amplified {
                    factor: e,
                    circuit: fold_circuit(c, odd_factor(e)?)?,
                    noise: *noise,
                },
            })
        })
        .collect()
}

/// Mitigated value plus the raw per-factor estimates.
#[derive(Debug, Clone)]
pub struct MitigatedEstimate {
    pub mitigated: Estimate,
    pub raw: Vec<(f64, Estimate)>,
}

/// Evaluates `eval` at every amplification factor in parallel (each with its
/// own RNG stream derived from one draw of `rng`) and extrapolates.
pub fn mitigate<F>(
    schedule: &MitigationSchedule,
    c: &Circuit,
    noise: &NoiseConfig,
    rng: &mut SimRng,
    eval: F,
) -> Result<MitigatedEstimate>
where
    F: Fn(&Circuit, &NoiseConfig, &mut SimRng) -> Result<Estimate> + Sync,
{
    use rand::Rng;
    let runs = amplified_runs(schedule, c, noise)?;
    let base: u64 = rng.random();
    let raw = runs
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let mut r = child_rng(base, i as u64);
            Ok((a.factor, eval(&a.circuit, &a.noise, &mut r)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MitigatedEstimate {
        mitigated: extrapolate_estimates(&raw)?,
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::sim::{run_circuit, StateVector};
    use rand::Rng;

    fn random_circuit(n: usize, len: usize, rng: &mut SimRng) -> Circuit {
        let mut c = Circuit::new(n);
        for _ in 0..len {
            let q = rng.random_range(0..n);
            let r = (q + 1 + rng.random_range(0..n - 1)) % n;
            let t = rng.random_range(-PI..PI);
            let g = match rng.random_range(0..7) {
                0 => Gate::Rx { q, theta: t },
                1 => Gate::Ry { q, theta: t },
                2 => Gate::Rz { q, theta: t },
                3 => Gate::Cnot { control: q, target: r },
                4 => Gate::Cz { a: q, b: r },
                5 => Gate::Cry {
                    control: q,
                    target: r,
                    theta: t,
                },
                _ => Gate::Sqg {
                    q,
                    phi: t,
                    psi: rng.random_range(-PI..PI),
                    dagger: rng.random(),
                },
            };
            c.push(g).unwrap();
        }
        c
    }

    fn overlap(a: &StateVector, b: &StateVector) -> f64 {
        a.inner(b).norm()
    }

    #[test]
    fn schedule_validation() {
        assert!(MitigationSchedule::new(MitigationMode::Rates, vec![1.0, 2.0, 3.0]).is_ok());
        assert!(MitigationSchedule::new(MitigationMode::Rates, vec![1.0, 1.0]).is_err());
        assert!(MitigationSchedule::new(MitigationMode::Rates, vec![0.5, 2.0]).is_err());
        assert!(MitigationSchedule::new(MitigationMode::Folding, vec![1.0, 2.0]).is_err());
        assert!(MitigationSchedule::default_for(MitigationMode::Folding).validate().is_ok());
    }

    #[test]
    fn amplify() {
        let base = NoiseConfig::new(1e-3, 1e-2).unwrap();
        let a = amplify_noise(&base, 3.0).unwrap();
        assert!((a.p1 - 3e-3).abs() < 1e-15 && (a.p2 - 3e-2).abs() < 1e-15);
        assert_eq!(amplify_noise(&base, 1.0).unwrap(), base);
        let big = amplify_noise(&NoiseConfig::new(0.5, 0.6).unwrap(), 3.0).unwrap();
        assert_eq!((big.p1, big.p2), (1.0, 1.0));
        assert!(amplify_noise(&base, 0.5).is_err());
    }

    #[test]
    fn folding_preserves_state() {
        let mut rng = rng_from_seed(4);
        for _ in 0..20 {
            let c = random_circuit(3, 12, &mut rng);
            let s0 = run_circuit(&c, None, &mut rng).unwrap();
            for e in [1, 3, 5] {
                let f = fold_circuit(&c, e).unwrap();
                assert_eq!(f.len(), c.len() * e);
                let s = run_circuit(&f, None, &mut rng).unwrap();
                assert!((overlap(&s0, &s) - 1.0).abs() < 1e-10);
            }
        }
        assert!(fold_circuit(&Circuit::new(1), 2).is_err());
    }

    #[test]
    fn cz_odd_power() {
        let mut c = Circuit::new(2);
        c.push(Gate::Cz { a: 0, b: 1 }).unwrap();
        let f = fold_circuit_literal(&c, 3).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.unitary().unwrap(), c.unitary().unwrap());
    }

    #[test]
    fn literal_rx_identity_holds_only_mod_four() {
        let mut c = Circuit::new(1);
        c.push(Gate::Ry { q: 0, theta: 0.4 }).unwrap();
        c.push(Gate::Rx { q: 0, theta: PI / 2.0 }).unwrap();
        let mut rng = rng_from_seed(0);
        let s0 = run_circuit(&c, None, &mut rng).unwrap();
        for (e, ok) in [(1, false), (3, true), (5, false), (7, true)] {
            let s = run_circuit(&fold_circuit_literal(&c, e).unwrap(), None, &mut rng).unwrap();
            assert_eq!((overlap(&s0, &s) - 1.0).abs() < 1e-10, ok, "ℰ = {e}");
        }
    }

    #[test]
    fn extrapolation() {
        let v = extrapolate_zero_noise(&[(1.0, 1.1), (2.0, 1.2), (3.0, 1.3)]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let (v1, v3) = (0.7, 0.2);
        let v = extrapolate_zero_noise(&[(1.0, v1), (3.0, v3)]).unwrap();
        assert!((v - (3.0 * v1 - v3) / 2.0).abs() < 1e-12);
        assert!(matches!(
            extrapolate_zero_noise(&[(2.0, 1.0), (2.0, 3.0)]),
            Err(DvqeError::Fit(_))
        ));
        let e = extrapolate_estimates(&[
            (1.0, Estimate { value: 1.0, stderr: 0.1 }),
            (3.0, Estimate { value: 2.0, stderr: 0.1 }),
        ])
        .unwrap();
        // weights 3/2 and −1/2
        assert!((e.stderr - 0.1 * (2.25f64 + 0.25).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mitigate_linear_model_is_exact() {
        let mut c = Circuit::new(1);
        c.push(Gate::Ry { q: 0, theta: 0.3 }).unwrap();
        let noise = NoiseConfig::new(1e-3, 1e-2).unwrap();
        let sched = MitigationSchedule::default_for(MitigationMode::Rates);
        let out = mitigate(&sched, &c, &noise, &mut rng_from_seed(1), |_, n, _| {
            Ok(Estimate::exact(0.25 - 40.0 * n.p1))
        })
        .unwrap();
        assert!((out.mitigated.value - 0.25).abs() < 1e-14);
        assert_eq!(out.raw.len(), 3);
    }
}

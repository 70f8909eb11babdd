//! The constrained circuit `U(θ) = [V(θ_v) ⊗ V*(θ_v)] · CNOT-ladder · D̃(θ_d)`.
//!
//! `D̃` prepares non-negative amplitudes `a_q` on the physical register; the
//! ladder copies them into `Σ a_q |q⟩|q⟩`, i.e. the diagonal matrix
//! `diag(a_q)`, and `V ⊗ V*` rotates that into `V diag(a) V†`. Hermiticity
//! holds for every `θ`; positivity holds whenever `θ_d` stays inside its
//! restriction intervals.
//!
//! Entangled `D̃` is laid out qubit by qubit so that every qubit is fully
//! rotated before it acts as a control. Qubit 0 gets `d1` plain `RY(α)`
//! rotations; qubit `j ≥ 1` gets `d1` pairs `RY(α) · CRY_{j−1→j}(β − α)`.
//! In the `q_{j−1} = 0` branch qubit `j` is rotated by `Σα`, in the `q_{j−1} = 1`
//! branch by `Σβ`; restricting every `α, β` to `[0, π/d1]` keeps both totals in
//! `[0, π]` and hence all amplitudes non-negative.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DvqeError, Result};
use crate::sim::{Circuit, Gate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenType {
    Entangled,
    Decoupled,
}

/// Gate kinds allowed in an explicit `D̃` layout table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutGate {
    Ry,
    Cry,
}

/// One row of an explicit `D̃` layout: a gate whose angle is a free parameter
/// restricted to `[lo, hi]`. Positivity of such layouts is the caller's
/// responsibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutEntry {
    pub gate: LayoutGate,
    pub qubits: Vec<usize>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    /// Zero in a config file means "same as the model".
    #[serde(default)]
    pub n_sites: usize,
    #[serde(rename = "type")]
    pub eig_type: EigenType,
    #[serde(default)]
    pub d1: usize,
    #[serde(default)]
    pub d2: usize,
    /// Replaces the default `D̃` layout when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<Vec<LayoutEntry>>,
}

impl AnsatzConfig {
    pub fn decoupled(n_sites: usize, d2: usize) -> Self {
        Self {
            n_sites,
            eig_type: EigenType::Decoupled,
            d1: 0,
            d2,
            layout: None,
        }
    }

    pub fn entangled(n_sites: usize, d1: usize, d2: usize) -> Self {
        Self {
            n_sites,
            eig_type: EigenType::Entangled,
            d1,
            d2,
            layout: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(DvqeError::arg("ansatz needs at least one site"));
        }
        if let Some(rows) = &self.layout {
            for r in rows {
                let want = match r.gate {
                    LayoutGate::Ry => 1,
                    LayoutGate::Cry => 2,
                };
                if r.qubits.len() != want
                    || r.qubits.iter().any(|&q| q >= self.n_sites)
                    || (want == 2 && r.qubits[0] == r.qubits[1])
                {
                    return Err(DvqeError::arg(format!("bad layout row {r:?}")));
                }
                if !(r.lo <= r.hi) {
                    return Err(DvqeError::arg(format!("empty restriction in {r:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<Layout> {
        self.validate()?;
        let n = self.n_sites;
        let mut specs = Vec::new();
        match (&self.layout, self.eig_type) {
            (Some(rows), _) => {
                for (k, r) in rows.iter().enumerate() {
                    specs.push(ParamSpec {
                        register: Register::Eigen,
                        lo: r.lo,
                        hi: r.hi,
                        periodic: false,
                        modes: match r.gate {
                            LayoutGate::Ry => Modes::Plain,
                            LayoutGate::Cry => Modes::Controlled,
                        },
                        label: format!("d[{k}]:{:?}{:?}", r.gate, r.qubits),
                    });
                }
            }
            (None, EigenType::Decoupled) => {
                for q in 0..n {
                    specs.push(ParamSpec::eigen(0.0, PI, Modes::Plain, format!("d:ry[{q}]")));
                }
            }
            (None, EigenType::Entangled) => {
                let hi = if self.d1 == 0 { PI } else { PI / self.d1 as f64 };
                for q in 0..n {
                    for r in 0..self.d1 {
                        if q == 0 {
                            specs.push(ParamSpec::eigen(0.0, hi, Modes::Plain, format!("d:ry[0]#{r}")));
                        } else {
                            specs.push(ParamSpec::eigen(
                                0.0,
                                hi,
                                Modes::Controlled,
                                format!("d:alpha[{q}]#{r}"),
                            ));
                            specs.push(ParamSpec::eigen(
                                0.0,
                                hi,
                                Modes::Controlled,
                                format!("d:beta[{q}]#{r}"),
                            ));
                        }
                    }
                }
            }
        }
        let r_d = specs.len();
        for block in 0..=self.d2 {
            for q in 0..n {
                for name in ["phi", "psi"] {
                    specs.push(ParamSpec {
                        register: Register::Basis,
                        lo: 0.0,
                        hi: 2.0 * PI,
                        periodic: true,
                        modes: Modes::Shared,
                        label: format!("v:{name}[{q}]#{block}"),
                    });
                }
            }
        }
        Ok(Layout { specs, r_d })
    }
}

/// Which sub-circuit a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Register {
    Eigen,
    Basis,
}

/// Frequency content of the cost as a function of one parameter.
///
/// - `Plain`: a rotation acting on every branch of its qubit; the cost is
///   `a + b cos θ + c sin θ` (period 2π).
/// - `Controlled`: a rotation acting on one control branch only; the amplitude
///   picks up a constant part, adding `cos θ/2, sin θ/2` modes (period 4π).
/// - `Shared`: a `V` angle appearing in both `V` and `V*`; amplitudes are
///   quadratic in the half-angle, adding `cos 2θ, sin 2θ` modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modes {
    Plain,
    Controlled,
    Shared,
}

impl Modes {
    /// Non-zero angular frequencies of the cost (each contributes a cos and sin).
    pub fn frequencies(self) -> &'static [f64] {
        match self {
            Modes::Plain => &[1.0],
            Modes::Controlled => &[0.5, 1.0],
            Modes::Shared => &[1.0, 2.0],
        }
    }

    pub fn coefficient_count(self) -> usize {
        1 + 2 * self.frequencies().len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub register: Register,
    pub lo: f64,
    pub hi: f64,
    /// Periodic parameters wrap; restricted ones are clamped to `[lo, hi]`.
    pub periodic: bool,
    pub modes: Modes,
    pub label: String,
}

impl ParamSpec {
    fn eigen(lo: f64, hi: f64, modes: Modes, label: String) -> Self {
        Self {
            register: Register::Eigen,
            lo,
            hi,
            periodic: false,
            modes,
            label,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.periodic || (x >= self.lo - 1e-12 && x <= self.hi + 1e-12)
    }
}

/// Parameter metadata for a configuration: `θ = θ_d ∪ θ_v`, eigen part first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub specs: Vec<ParamSpec>,
    pub r_d: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn r_v(&self) -> usize {
        self.specs.len() - self.r_d
    }

    pub fn zeros(&self) -> ParamVector {
        ParamVector {
            values: vec![0.0; self.len()],
            r_d: self.r_d,
        }
    }

    pub fn params(&self, values: Vec<f64>) -> Result<ParamVector> {
        if values.len() != self.len() {
            return Err(DvqeError::arg(format!(
                "expected {} parameters, got {}",
                self.len(),
                values.len()
            )));
        }
        for (x, s) in values.iter().zip(&self.specs) {
            if !x.is_finite() || !s.contains(*x) {
                return Err(DvqeError::arg(format!(
                    "parameter {} = {x} outside [{}, {}]",
                    s.label, s.lo, s.hi
                )));
            }
        }
        Ok(ParamVector {
            values,
            r_d: self.r_d,
        })
    }

    /// Uniform draw inside the restrictions.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let values = self
            .specs
            .iter()
            .map(|s| s.lo + (s.hi - s.lo) * rng.random::<f64>())
            .collect();
        ParamVector {
            values,
            r_d: self.r_d,
        }
    }
}

/// Variational angles, eigen part first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    r_d: usize,
}

impl ParamVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn theta_d(&self) -> &[f64] {
        &self.values[..self.r_d]
    }

    pub fn theta_v(&self) -> &[f64] {
        &self.values[self.r_d..]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copy with parameter `k` replaced. Restrictions are not rechecked.
    pub fn with(&self, k: usize, x: f64) -> ParamVector {
        let mut p = self.clone();
        p.values[k] = x;
        p
    }
}

/// `D̃(θ_d)` on the `N` physical qubits.
pub fn build_eigen_circuit(cfg: &AnsatzConfig, theta_d: &[f64]) -> Result<Circuit> {
    let layout = cfg.layout()?;
    if theta_d.len() != layout.r_d {
        return Err(DvqeError::arg(format!(
            "eigen circuit expects {} angles, got {}",
            layout.r_d,
            theta_d.len()
        )));
    }
    let n = cfg.n_sites;
    let mut c = Circuit::new(n);
    match (&cfg.layout, cfg.eig_type) {
        (Some(rows), _) => {
            for (r, &t) in rows.iter().zip(theta_d) {
                c.push(match r.gate {
                    LayoutGate::Ry => Gate::Ry {
                        q: r.qubits[0],
                        theta: t,
                    },
                    LayoutGate::Cry => Gate::Cry {
                        control: r.qubits[0],
                        target: r.qubits[1],
                        theta: t,
                    },
                })?;
            }
        }
        (None, EigenType::Decoupled) => {
            for (q, &t) in theta_d.iter().enumerate() {
                c.push(Gate::Ry { q, theta: t })?;
            }
        }
        (None, EigenType::Entangled) => {
            let mut it = theta_d.iter().copied();
            for q in 0..n {
                for _ in 0..cfg.d1 {
                    let alpha = it.next().expect("length checked");
                    c.push(Gate::Ry { q, theta: alpha })?;
                    if q > 0 {
                        let beta = it.next().expect("length checked");
                        c.push(Gate::Cry {
                            control: q - 1,
                            target: q,
                            theta: beta - alpha,
                        })?;
                    }
                }
            }
        }
    }
    Ok(c)
}

/// CNOT from physical qubit `n` to ancillary qubit `n + N`, for every `n`.
pub fn build_cnot_ladder(n_sites: usize) -> Circuit {
    let mut c = Circuit::new(2 * n_sites);
    for q in 0..n_sites {
        c.gates.push(Gate::Cnot {
            control: q,
            target: q + n_sites,
        });
    }
    c
}

/// Hardware-efficient `V(θ_v)`: a layer of `RZ(φ)·RY(ψ)` composites, then `d2`
/// blocks of a CZ chain followed by another composite layer.
pub fn build_basis_circuit(cfg: &AnsatzConfig, theta_v: &[f64]) -> Result<Circuit> {
    let n = cfg.n_sites;
    let want = 2 * n * (cfg.d2 + 1);
    if theta_v.len() != want {
        return Err(DvqeError::arg(format!(
            "basis circuit expects {want} angles, got {}",
            theta_v.len()
        )));
    }
    let mut c = Circuit::new(n);
    let mut it = theta_v.chunks_exact(2);
    for block in 0..=cfg.d2 {
        if block > 0 {
            for q in 0..n.saturating_sub(1) {
                c.push(Gate::Cz { a: q, b: q + 1 })?;
            }
        }
        for q in 0..n {
            let pair = it.next().expect("length checked");
            c.push(Gate::Sqg {
                q,
                phi: pair[0],
                psi: pair[1],
                dagger: false,
            })?;
        }
    }
    Ok(c)
}

/// Gate-wise complex conjugate.
pub fn conjugate_circuit(c: &Circuit) -> Circuit {
    Circuit {
        n: c.n,
        gates: c.gates.iter().map(Gate::conjugate).collect(),
    }
}

/// Full `2N`-qubit circuit preparing the vectorized ansatz state.
pub fn build_full_circuit(cfg: &AnsatzConfig, theta: &ParamVector) -> Result<Circuit> {
    let n = cfg.n_sites;
    let layout = cfg.layout()?;
    if theta.len() != layout.len() || theta.r_d != layout.r_d {
        return Err(DvqeError::arg("parameter vector does not match the ansatz layout"));
    }
    let d = build_eigen_circuit(cfg, theta.theta_d())?;
    let v = build_basis_circuit(cfg, theta.theta_v())?;
    let mut full = Circuit::new(2 * n);
    full.append_shifted(&d, 0)?;
    full.append_shifted(&build_cnot_ladder(n), 0)?;
    full.append_shifted(&v, 0)?;
    full.append_shifted(&conjugate_circuit(&v), n)?;
    Ok(full)
}

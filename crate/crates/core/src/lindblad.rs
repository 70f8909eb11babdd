//! Lindblad models, their vectorized Liouvillian, and the benchmark models.
//!
//! Sign conventions: `σᶻ|0⟩ = +|0⟩` and `σ⁻ = (σˣ − iσʸ)/2` takes `|0⟩ → |1⟩`,
//! so pure damping relaxes every site to `|1⟩` and `⟨σᶻ⟩ → −1`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DvqeError, Result};
use crate::pauli::{Pauli, PauliSum};

const HERMITIAN_TOL: f64 = 1e-12;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Jump operator `c` with rate `γ ≥ 0`, entering as `(γ/2)·D[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub op: PauliSum,
    pub rate: f64,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    n_sites: usize,
    hamiltonian: PauliSum,
    jumps: Vec<Jump>,
}

impl LindbladModel {
    pub fn new(n_sites: usize, hamiltonian: PauliSum, jumps: Vec<Jump>) -> Result<Self> {
        if n_sites == 0 {
            return Err(DvqeError::arg("model needs at least one site"));
        }
        if hamiltonian.n() != n_sites {
            return Err(DvqeError::dim(n_sites, hamiltonian.n()));
        }
        let hamiltonian = hamiltonian
            .into_hermitian(HERMITIAN_TOL)
            .map_err(|_| DvqeError::arg("Hamiltonian is not Hermitian"))?;
        for j in &jumps {
            if j.op.n() != n_sites {
                return Err(DvqeError::dim(n_sites, j.op.n()));
            }
            if !(j.rate >= 0.0 && j.rate.is_finite()) {
                return Err(DvqeError::arg(format!(
                    "jump {:?} has invalid rate {}",
                    j.tag, j.rate
                )));
            }
        }
        Ok(Self {
            n_sites,
            hamiltonian,
            jumps,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }
}

/// Chain boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl Boundary {
    /// Nearest-neighbour pairs `(i, i+1)` on `n` sites.
    pub fn bonds(self, n: usize) -> Vec<(usize, usize)> {
        if n < 2 {
            return Vec::new();
        }
        match self {
            Boundary::Open => (0..n - 1).map(|i| (i, i + 1)).collect(),
            Boundary::Periodic => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = DvqeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            _ => Err(DvqeError::arg(format!("unknown boundary {s:?}"))),
        }
    }
}

pub fn sigma(n: usize, i: usize, p: Pauli) -> PauliSum {
    PauliSum::single(n, i, p, re(1.0))
}

/// `σ⁻ = (σˣ − iσʸ)/2` on site `i`.
pub fn sigma_minus(n: usize, i: usize) -> PauliSum {
    sigma(n, i, Pauli::X) * 0.5 + PauliSum::single(n, i, Pauli::Y, Complex64::new(0.0, -0.5))
}

/// `σ⁺ = (σˣ + iσʸ)/2` on site `i`.
pub fn sigma_plus(n: usize, i: usize) -> PauliSum {
    sigma(n, i, Pauli::X) * 0.5 + PauliSum::single(n, i, Pauli::Y, Complex64::new(0.0, 0.5))
}

fn compose(a: &PauliSum, b: &PauliSum) -> PauliSum {
    a.compose(b).expect("operators share a register")
}

fn embed(a: &PauliSum, b: &PauliSum) -> PauliSum {
    PauliSum::embed_left_right(a, b).expect("operators share a register")
}

/// Vectorized Liouvillian on `2N` qubits (physical register first):
/// `−i(H⊗𝟙 − 𝟙⊗Hᵀ) + Σ_k (γ_k/2)(c⊗c* − ½c†c⊗𝟙 − ½𝟙⊗cᵀc*)`.
pub fn liouvillian_vector(m: &LindbladModel) -> PauliSum {
    let n = m.n_sites;
    let id = PauliSum::identity(n);
    let h = &m.hamiltonian;
    let mut l = (embed(h, &id) - embed(&id, h)) * Complex64::new(0.0, -1.0);
    for j in &m.jumps {
        if j.rate == 0.0 {
            continue;
        }
        let c = &j.op;
        let cd = c.adjoint();
        let cdc = compose(&cd, c);
        let d = embed(c, &cd) - embed(&cdc, &id) * 0.5 - embed(&id, &cdc) * 0.5;
        l = l + d * (j.rate / 2.0);
    }
    l
}

/// Hermitian cost operator `L̂†L̂`.
pub fn cost_operator(m: &LindbladModel) -> PauliSum {
    let l = liouvillian_vector(m);
    let cost = compose(&l.adjoint(), &l)
        .into_hermitian(1e-9)
        .expect("Gram form is Hermitian");
    log::debug!(
        "cost operator: {} Liouvillian terms, {} cost terms",
        l.len(),
        cost.len()
    );
    cost
}

/// Dissipative transverse-field Ising chain:
/// `H = ½Σ σᶻᵢσᶻⱼ + gΣ σˣᵢ`, damping `σ⁻ᵢ` at `γ1`, dephasing `σᶻᵢ` at `γ2`.
/// A single site has no bond.
pub fn tfim_model(n: usize, g: f64, gamma1: f64, gamma2: f64, boundary: Boundary) -> Result<LindbladModel> {
    if n == 0 {
        return Err(DvqeError::arg("Ising chain needs N >= 1"));
    }
    let mut h = PauliSum::zero(n);
    for (i, j) in boundary.bonds(n) {
        h = h + compose(&sigma(n, i, Pauli::Z), &sigma(n, j, Pauli::Z)) * 0.5;
    }
    for i in 0..n {
        h = h + sigma(n, i, Pauli::X) * g;
    }
    let mut jumps = Vec::new();
    for i in 0..n {
        jumps.push(Jump {
            op: sigma_minus(n, i),
            rate: gamma1,
            tag: format!("damping[{i}]"),
        });
        jumps.push(Jump {
            op: sigma(n, i, Pauli::Z),
            rate: gamma2,
            tag: format!("dephasing[{i}]"),
        });
    }
    LindbladModel::new(n, h, jumps)
}

/// Parameters of the reservoir-engineered coupled-cavity model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqedParams {
    pub mu: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta: f64,
    pub gamma3: f64,
    pub boundary: Boundary,
}

impl CqedParams {
    pub fn new(mu: f64, gamma1: f64, gamma2: f64, theta: f64) -> Self {
        Self {
            mu,
            gamma1,
            gamma2,
            theta,
            gamma3: 1.0,
            boundary: Boundary::Periodic,
        }
    }
}

/// Coupled QED cavities: `H = μΣσ⁺σ⁻`, damping, dephasing and the two-site
/// jump `ασ⁻ᵢ + βσ⁺ᵢ + γσ⁻ⱼ + δσ⁺ⱼ` with `α = γ* = cosθ`, `δ = β* = sinθ`.
pub fn cqed_model(n: usize, p: &CqedParams) -> Result<LindbladModel> {
    if n < 2 {
        return Err(DvqeError::arg("coupled-cavity model needs N >= 2"));
    }
    let mut h = PauliSum::zero(n);
    for i in 0..n {
        h = h + compose(&sigma_plus(n, i), &sigma_minus(n, i)) * p.mu;
    }
    let (s, c) = p.theta.sin_cos();
    let mut jumps = Vec::new();
    for i in 0..n {
        jumps.push(Jump {
            op: sigma_minus(n, i),
            rate: p.gamma1,
            tag: format!("damping[{i}]"),
        });
        jumps.push(Jump {
            op: sigma(n, i, Pauli::Z),
            rate: p.gamma2,
            tag: format!("dephasing[{i}]"),
        });
    }
    for (i, j) in p.boundary.bonds(n) {
        let op = sigma_minus(n, i) * c
            + sigma_plus(n, i) * s
            + sigma_minus(n, j) * c
            + sigma_plus(n, j) * s;
        jumps.push(Jump {
            op,
            rate: p.gamma3,
            tag: format!("pair[{i},{j}]"),
        });
    }
    LindbladModel::new(n, h, jumps)
}

/// Hermitian observable with a display name.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    op: PauliSum,
    name: String,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: PauliSum) -> Result<Self> {
        Ok(Self {
            op: op.into_hermitian(HERMITIAN_TOL)?,
            name: name.into(),
        })
    }

    pub fn op(&self) -> &PauliSum {
        &self.op
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

impl FromStr for Axis {
    type Err = DvqeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(DvqeError::arg(format!("unknown axis {s:?}"))),
        }
    }
}

/// Mean magnetization `(1/N)Σσ^a_i`.
pub fn magnetization_observable(axis: Axis, n: usize) -> Result<Observable> {
    if n == 0 {
        return Err(DvqeError::arg("magnetization needs N >= 1"));
    }
    let mut op = PauliSum::zero(n);
    for i in 0..n {
        op = op + sigma(n, i, axis.pauli());
    }
    let name = format!("m{}", format!("{axis:?}").to_lowercase());
    Observable::new(name, op * (1.0 / n as f64))
}

/// Two-site current `−η σ⁺ᵢσ⁻ⱼ + h.c.` with `η = cos²θ − sin²θ` and `j = i+1 mod N`,
/// which expands to `−(η/2)(σˣᵢσˣⱼ + σʸᵢσʸⱼ)`.
pub fn current_observable(n: usize, i: usize, theta: f64) -> Result<Observable> {
    if n < 2 || i >= n {
        return Err(DvqeError::arg(format!("no bond at site {i} of {n}")));
    }
    let j = (i + 1) % n;
    let eta = theta.cos().powi(2) - theta.sin().powi(2);
    let hop = compose(&sigma_plus(n, i), &sigma_minus(n, j));
    let op = (hop.clone() + hop.adjoint()) * (-eta);
    Observable::new(format!("current[{i}]"), op)
}

/// Current averaged over the chain's bonds.
pub fn mean_current_observable(n: usize, theta: f64, boundary: Boundary) -> Result<Observable> {
    let bonds = boundary.bonds(n);
    if bonds.is_empty() {
        return Err(DvqeError::arg("current needs at least one bond"));
    }
    let mut op = PauliSum::zero(n);
    for &(i, _) in &bonds {
        op = op + current_observable(n, i, theta)?.op().clone();
    }
    Observable::new("current", op * (1.0 / bonds.len() as f64))
}

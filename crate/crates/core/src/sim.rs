//! Dense statevector simulation with exact expectations, finite-shot sampling
//! and stochastic-Pauli depolarizing noise.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DvqeError, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::rng::{child_rng, SimRng};

/// Statevector registers above this size are refused.
pub const MAX_SIM_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

type Mat2 = [[Complex64; 2]; 2];

fn rx(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ]
}

fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

fn rz(theta: f64) -> Mat2 {
    [
        [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Circuit gate. Rotations follow `R_a(θ) = exp(−iσ_a θ/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    Rx { q: usize, theta: f64 },
    Ry { q: usize, theta: f64 },
    Rz { q: usize, theta: f64 },
    Cnot { control: usize, target: usize },
    Cz { a: usize, b: usize },
    Cry { control: usize, target: usize, theta: f64 },
    /// Two-angle single-qubit composite `RZ(φ)·RY(ψ)`; with `dagger` set it is
    /// the inverse `RY(−ψ)·RZ(−φ)`.
    Sqg { q: usize, phi: f64, psi: f64, dagger: bool },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { q, .. } | Gate::Ry { q, .. } | Gate::Rz { q, .. } | Gate::Sqg { q, .. } => {
                vec![q]
            }
            Gate::Cnot { control, target } | Gate::Cry { control, target, .. } => {
                vec![control, target]
            }
            Gate::Cz { a, b } => vec![a, b],
        }
    }

    pub fn arity(&self) -> usize {
        self.qubits().len()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Rx { .. } => "RX",
            Gate::Ry { .. } => "RY",
            Gate::Rz { .. } => "RZ",
            Gate::Cnot { .. } => "CNOT",
            Gate::Cz { .. } => "CZ",
            Gate::Cry { .. } => "CRY",
            Gate::Sqg { .. } => "SQG",
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= n) {
            return Err(DvqeError::arg(format!(
                "{} acts on qubit {q} of a {n}-qubit register",
                self.name()
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(DvqeError::arg(format!(
                "{} control and target coincide",
                self.name()
            )));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx { q, theta } => Gate::Rx { q, theta: -theta },
            Gate::Ry { q, theta } => Gate::Ry { q, theta: -theta },
            Gate::Rz { q, theta } => Gate::Rz { q, theta: -theta },
            Gate::Cry {
                control,
                target,
                theta,
            } => Gate::Cry {
                control,
                target,
                theta: -theta,
            },
            Gate::Sqg { q, phi, psi, dagger } => Gate::Sqg {
                q,
                phi,
                psi,
                dagger: !dagger,
            },
            g @ (Gate::Cnot { .. } | Gate::Cz { .. }) => g,
        }
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conjugate(&self) -> Gate {
        match *self {
            Gate::Rx { q, theta } => Gate::Rx { q, theta: -theta },
            Gate::Rz { q, theta } => Gate::Rz { q, theta: -theta },
            Gate::Sqg { q, phi, psi, dagger } => Gate::Sqg {
                q,
                phi: -phi,
                psi,
                dagger,
            },
            g @ (Gate::Ry { .. } | Gate::Cnot { .. } | Gate::Cz { .. } | Gate::Cry { .. }) => g,
        }
    }

    fn single_matrix(&self) -> Option<Mat2> {
        match *self {
            Gate::Rx { theta, .. } => Some(rx(theta)),
            Gate::Ry { theta, .. } => Some(ry(theta)),
            Gate::Rz { theta, .. } => Some(rz(theta)),
            Gate::Sqg {
                phi, psi, dagger, ..
            } => Some(if dagger {
                mat2_mul(&ry(-psi), &rz(-phi))
            } else {
                mat2_mul(&rz(phi), &ry(psi))
            }),
            _ => None,
        }
    }

    /// Dense matrix on the gate's own qubits, first listed qubit most significant.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        if let Some(m) = self.single_matrix() {
            return DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]);
        }
        let mut m = DMatrix::<Complex64>::identity(4, 4);
        match *self {
            Gate::Cnot { .. } => {
                m[(2, 2)] = ZERO;
                m[(3, 3)] = ZERO;
                m[(2, 3)] = ONE;
                m[(3, 2)] = ONE;
            }
            Gate::Cz { .. } => m[(3, 3)] = -ONE,
            Gate::Cry { theta, .. } => {
                let r = ry(theta);
                for i in 0..2 {
                    for j in 0..2 {
                        m[(2 + i, 2 + j)] = r[i][j];
                    }
                }
            }
            _ => unreachable!(),
        }
        m
    }
}

/// Ordered gate list on an `n`-qubit register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.n)?;
        self.gates.push(g);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.gates.iter().try_for_each(|g| g.validate(self.n))
    }

    /// Append `other`, whose qubit `k` maps to `offset + k` here.
    pub fn append_shifted(&mut self, other: &Circuit, offset: usize) -> Result<()> {
        for g in &other.gates {
            self.push(shift_gate(g, offset))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Full unitary, for small registers.
    pub fn unitary(&self) -> Result<DMatrix<Complex64>> {
        if self.n > 12 {
            return Err(DvqeError::Capacity {
                what: "dense circuit unitary",
                limit: 12,
                requested: self.n,
            });
        }
        let dim = 1usize << self.n;
        let mut u = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let mut s = StateVector::basis(self.n, col)?;
            for g in &self.gates {
                s.apply_gate(g);
            }
            u.set_column(col, &nalgebra::DVector::from_vec(s.amps));
        }
        Ok(u)
    }
}

fn shift_gate(g: &Gate, k: usize) -> Gate {
    match *g {
        Gate::Rx { q, theta } => Gate::Rx { q: q + k, theta },
        Gate::Ry { q, theta } => Gate::Ry { q: q + k, theta },
        Gate::Rz { q, theta } => Gate::Rz { q: q + k, theta },
        Gate::Sqg { q, phi, psi, dagger } => Gate::Sqg {
            q: q + k,
            phi,
            psi,
            dagger,
        },
        Gate::Cnot { control, target } => Gate::Cnot {
            control: control + k,
            target: target + k,
        },
        Gate::Cz { a, b } => Gate::Cz { a: a + k, b: b + k },
        Gate::Cry {
            control,
            target,
            theta,
        } => Gate::Cry {
            control: control + k,
            target: target + k,
            theta,
        },
    }
}

/// Depolarizing noise: after every `k`-qubit gate, with probability `p_k`, one
/// uniformly random non-identity Pauli on the gate's support is inserted. The
/// averaged channel is `ρ ↦ (1−q)ρ + q·𝟙/2^k` with `q = p_k·4^k/(4^k−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub p1: f64,
    pub p2: f64,
    #[serde(default = "enabled_default")]
    pub enabled: bool,
}

fn enabled_default() -> bool {
    true
}

impl NoiseConfig {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        let cfg = Self {
            p1,
            p2,
            enabled: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p1, self.p2] {
            if !(0.0..=1.0).contains(&p) {
                return Err(DvqeError::arg(format!("depolarizing rate {p} outside [0,1]")));
            }
        }
        Ok(())
    }

    pub fn rate(&self, arity: usize) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        if arity == 1 {
            self.p1
        } else {
            self.p2
        }
    }

    pub fn is_silent(&self) -> bool {
        !self.enabled || (self.p1 == 0.0 && self.p2 == 0.0)
    }
}

/// Noise insertions for one trajectory: `(gate index, Pauli on each support qubit)`.
type NoiseEvents = Vec<(usize, [Pauli; 2])>;

/// Registers up to this size sample noisy shots from the trajectory-averaged
/// state; larger ones simulate each shot's trajectory.
const AVERAGED_MAX_QUBITS: usize = 10;

const NON_IDENTITY_1Q: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
const ALL_1Q: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

fn sample_events(c: &Circuit, noise: Option<&NoiseConfig>, rng: &mut SimRng) -> NoiseEvents {
    let mut events = Vec::new();
    let Some(noise) = noise.filter(|n| !n.is_silent()) else {
        return events;
    };
    for (i, g) in c.gates.iter().enumerate() {
        let k = g.arity();
        let p = noise.rate(k);
        if p > 0.0 && rng.random::<f64>() < p {
            if k == 1 {
                let pick = NON_IDENTITY_1Q[rng.random_range(0..3)];
                events.push((i, [pick, Pauli::I]));
            } else {
                let code = rng.random_range(1..16usize);
                events.push((i, [ALL_1Q[code >> 2], ALL_1Q[code & 3]]));
            }
        }
    }
    events
}

/// `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n > MAX_SIM_QUBITS {
            return Err(DvqeError::Capacity {
                what: "statevector",
                limit: MAX_SIM_QUBITS,
                requested: n,
            });
        }
        let dim = 1usize << n;
        if index >= dim {
            return Err(DvqeError::arg(format!("basis index {index} out of range")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(DvqeError::arg("amplitude count must be a power of two"));
        }
        let n = amps.len().trailing_zeros() as usize;
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn stride(&self, q: usize) -> usize {
        1usize << (self.n - 1 - q)
    }

    fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let stride = self.stride(q);
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                let a = self.amps[i];
                let b = self.amps[i + stride];
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i + stride] = m[1][0] * a + m[1][1] * b;
            }
            base += 2 * stride;
        }
    }

    fn apply_controlled_1q(&mut self, control: usize, target: usize, m: &Mat2) {
        let cbit = self.stride(control);
        let tbit = self.stride(target);
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                let j = i | tbit;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    pub fn apply_gate(&mut self, g: &Gate) {
        if let Some(m) = g.single_matrix() {
            let q = g.qubits()[0];
            self.apply_1q(q, &m);
            return;
        }
        match *g {
            Gate::Cnot { control, target } => {
                let cbit = self.stride(control);
                let tbit = self.stride(target);
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
            Gate::Cz { a, b } => {
                let mask = self.stride(a) | self.stride(b);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
            Gate::Cry {
                control,
                target,
                theta,
            } => self.apply_controlled_1q(control, target, &ry(theta)),
            _ => unreachable!("single-qubit gates handled above"),
        }
    }

    /// In-place application of a single Pauli string.
    pub fn apply_pauli_string(&mut self, s: &PauliString) {
        let (x, z) = s.masks();
        let phase = y_phase(s.count(Pauli::Y));
        let sign = |b: usize| {
            if (b as u64 & z).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        if x == 0 {
            for (b, amp) in self.amps.iter_mut().enumerate() {
                *amp *= phase * sign(b);
            }
            return;
        }
        for b in 0..self.amps.len() {
            let b2 = b ^ x as usize;
            if b2 < b {
                continue;
            }
            let vb = self.amps[b];
            let vb2 = self.amps[b2];
            self.amps[b2] = phase * sign(b) * vb;
            self.amps[b] = phase * sign(b2) * vb2;
        }
    }

    fn apply_noise_event(&mut self, g: &Gate, paulis: &[Pauli; 2]) {
        let mut labels = vec![Pauli::I; self.n];
        for (k, q) in g.qubits().into_iter().enumerate() {
            labels[q] = paulis[k];
        }
        self.apply_pauli_string(&PauliString::new(labels));
    }

    /// Rotate so that measuring `s` becomes a computational-basis parity:
    /// `H` on `X` qubits, `S†` then `H` on `Y` qubits.
    pub fn rotate_to_eigenbasis(&mut self, s: &PauliString) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let hm: Mat2 = [
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ];
        let sdg_then_h: Mat2 = mat2_mul(&hm, &[[ONE, ZERO], [ZERO, Complex64::new(0.0, -1.0)]]);
        for (q, &p) in s.labels().iter().enumerate() {
            match p {
                Pauli::X => self.apply_1q(q, &hm),
                Pauli::Y => self.apply_1q(q, &sdg_then_h),
                _ => {}
            }
        }
    }

    /// Probability that the parity of the bits in `mask` is even.
    pub fn even_parity_probability(&self, mask: u64) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(b, _)| (*b as u64 & mask).count_ones() % 2 == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// `⟨ψ|P|ψ⟩` for one Pauli string (complex in general).
    pub fn pauli_expectation(&self, s: &PauliString) -> Complex64 {
        let (x, z) = s.masks();
        let phase = y_phase(s.count(Pauli::Y));
        let mut acc = ZERO;
        for (b, a) in self.amps.iter().enumerate() {
            let sign = if (b as u64 & z).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += self.amps[b ^ x as usize].conj() * a * sign;
        }
        acc * phase
    }
}

fn y_phase(count: usize) -> Complex64 {
    match count % 4 {
        0 => ONE,
        1 => Complex64::new(0.0, 1.0),
        2 => -ONE,
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Pauli sum lowered to bit masks for repeated application to statevectors.
#[derive(Debug, Clone)]
pub struct CompiledPauliSum {
    n: usize,
    terms: Vec<(Complex64, usize, u64)>,
}

impl CompiledPauliSum {
    pub fn new(op: &PauliSum) -> Self {
        let terms = op
            .terms()
            .iter()
            .map(|(c, s)| {
                let (x, z) = s.masks();
                (c * y_phase(s.count(Pauli::Y)), x as usize, z)
            })
            .collect();
        Self { n: op.n(), terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `O|ψ⟩`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; psi.len()];
        for &(c, x, z) in &self.terms {
            for (b, a) in psi.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                let v = c * a;
                out[b ^ x] += if (b as u64 & z).count_ones() % 2 == 0 {
                    v
                } else {
                    -v
                };
            }
        }
        out
    }

    /// `‖O|ψ⟩‖²`, which equals `⟨ψ|O†O|ψ⟩`.
    pub fn norm_sqr_after(&self, psi: &[Complex64]) -> f64 {
        self.apply(psi).iter().map(|a| a.norm_sqr()).sum()
    }
}

fn check_register(c: &Circuit) -> Result<()> {
    if c.n > MAX_SIM_QUBITS {
        return Err(DvqeError::Capacity {
            what: "statevector",
            limit: MAX_SIM_QUBITS,
            requested: c.n,
        });
    }
    c.validate()
}

fn run_with_events(c: &Circuit, init: usize, events: &NoiseEvents) -> Result<StateVector> {
    let mut s = StateVector::basis(c.n, init)?;
    let mut ev = events.iter().peekable();
    for (i, g) in c.gates.iter().enumerate() {
        s.apply_gate(g);
        while let Some((_, paulis)) = ev.next_if(|(j, _)| *j == i) {
            s.apply_noise_event(g, paulis);
        }
    }
    Ok(s)
}

/// `vec(ρ̄)` of the trajectory-averaged state `ρ̄ = E[|ψ⟩⟨ψ|]` on a doubled
/// register (row index on the first `n` qubits, column index on the last `n`).
fn averaged_state(c: &Circuit, init: usize, noise: &NoiseConfig) -> Result<StateVector> {
    let n = c.n;
    let mut v = StateVector::basis(2 * n, (init << n) | init)?;
    for g in &c.gates {
        v.apply_gate(g);
        v.apply_gate(&shift_gate(&g.conjugate(), n));
        let k = g.arity();
        let p = noise.rate(k);
        if p == 0.0 {
            continue;
        }
        let support = g.qubits();
        let codes = 1usize << (2 * k);
        let mut acc: Vec<Complex64> = v.amps.iter().map(|a| a * (1.0 - p)).collect();
        let w = p / (codes - 1) as f64;
        for code in 1..codes {
            let mut labels = vec![Pauli::I; 2 * n];
            let mut sign = 1.0;
            for (j, &q) in support.iter().enumerate() {
                let pauli = ALL_1Q[(code >> (2 * (k - 1 - j))) & 3];
                labels[q] = pauli;
                labels[q + n] = pauli;
                if pauli == Pauli::Y {
                    sign = -sign;
                }
            }
            let mut term = v.clone();
            term.apply_pauli_string(&PauliString::new(labels));
            for (a, t) in acc.iter_mut().zip(&term.amps) {
                *a += t * (w * sign);
            }
        }
        v.amps = acc;
    }
    Ok(v)
}

/// `Tr(ρ̄ S)` from the doubled-register form of `ρ̄`.
fn averaged_expectation(v: &StateVector, s: &PauliString) -> f64 {
    let n = s.n();
    let (x, z) = s.masks();
    let phase = y_phase(s.count(Pauli::Y));
    let mut acc = ZERO;
    for i in 0..1usize << n {
        let sign = if (i as u64 & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += v.amps[(i << n) | (i ^ x as usize)] * sign;
    }
    (acc * phase).re
}

/// Noise-averaged state when shots can be drawn from it directly.
fn averaged_for(c: &Circuit, init: usize, noise: Option<&NoiseConfig>) -> Result<Option<StateVector>> {
    match noise.filter(|n| !n.is_silent()) {
        Some(noise) if c.n <= AVERAGED_MAX_QUBITS => Ok(Some(averaged_state(c, init, noise)?)),
        _ => Ok(None),
    }
}

/// `U|0…0⟩`, or one noisy trajectory when `noise` is given.
pub fn run_circuit(c: &Circuit, noise: Option<&NoiseConfig>, rng: &mut SimRng) -> Result<StateVector> {
    run_circuit_from(c, 0, noise, rng)
}

/// As [`run_circuit`] starting from basis state `init`.
pub fn run_circuit_from(
    c: &Circuit,
    init: usize,
    noise: Option<&NoiseConfig>,
    rng: &mut SimRng,
) -> Result<StateVector> {
    check_register(c)?;
    let events = sample_events(c, noise, rng);
    run_with_events(c, init, &events)
}

/// `⟨ψ|O|ψ⟩` for Hermitian `O`.
pub fn expectation_exact(s: &StateVector, o: &PauliSum) -> Result<f64> {
    if o.n() != s.n() {
        return Err(DvqeError::dim(s.n(), o.n()));
    }
    if !o.is_hermitian(1e-12) {
        return Err(DvqeError::arg("observable is not Hermitian"));
    }
    Ok(o
        .terms()
        .iter()
        .map(|(c, p)| (c * s.pauli_expectation(p)).re)
        .sum())
}

/// Sampled estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

/// Number of `+1` parity outcomes for one Pauli term over `shots` shots.
fn sample_term(
    c: &Circuit,
    init: usize,
    clean: &StateVector,
    s: &PauliString,
    shots: u64,
    noise: Option<&NoiseConfig>,
    averaged: Option<&StateVector>,
    rng: &mut SimRng,
) -> Result<u64> {
    let (_, zmask) = {
        // after rotation every non-identity qubit is read in Z
        let mut labels = s.labels().to_vec();
        labels.iter_mut().for_each(|p| {
            if *p != Pauli::I {
                *p = Pauli::Z
            }
        });
        PauliString::new(labels).masks()
    };
    let binomial = |p: f64, rng: &mut SimRng| -> Result<u64> {
        let b = Binomial::new(shots, p.clamp(0.0, 1.0)).map_err(|e| DvqeError::Numerical(e.to_string()))?;
        Ok(b.sample(rng))
    };
    if let Some(v) = averaged {
        // shots are independent trajectories, so each is Bernoulli in the averaged state
        return binomial((1.0 + averaged_expectation(v, s)) / 2.0, rng);
    }
    let mut rotated = clean.clone();
    rotated.rotate_to_eigenbasis(s);
    let p_clean = rotated.even_parity_probability(zmask).clamp(0.0, 1.0);
    if noise.is_none_or(|n| n.is_silent()) {
        return binomial(p_clean, rng);
    }
    let mut plus = 0;
    for _ in 0..shots {
        let events = sample_events(c, noise, rng);
        let p = if events.is_empty() {
            p_clean
        } else {
            let mut traj = run_with_events(c, init, &events)?;
            traj.rotate_to_eigenbasis(s);
            traj.even_parity_probability(zmask)
        };
        if rng.random::<f64>() < p {
            plus += 1;
        }
    }
    Ok(plus)
}

/// Term-wise sampled `⟨O⟩`: each non-identity Pauli term is measured in its own
/// eigenbasis over `shots_per_term` shots (each shot its own noisy trajectory).
pub fn expectation_sampled(
    c: &Circuit,
    o: &PauliSum,
    shots_per_term: u64,
    noise: Option<&NoiseConfig>,
    rng: &mut SimRng,
) -> Result<Estimate> {
    expectation_sampled_from(c, 0, o, shots_per_term, noise, rng)
}

/// As [`expectation_sampled`] with the register prepared in basis state `init`.
pub fn expectation_sampled_from(
    c: &Circuit,
    init: usize,
    o: &PauliSum,
    shots_per_term: u64,
    noise: Option<&NoiseConfig>,
    rng: &mut SimRng,
) -> Result<Estimate> {
    let outcomes = sample_term_outcomes(c, init, o, shots_per_term, noise, rng)?;
    Ok(combine_terms(o, &outcomes, shots_per_term))
}

/// Per-term `+1` counts (identity terms report `shots`).
pub(crate) fn sample_term_outcomes(
    c: &Circuit,
    init: usize,
    o: &PauliSum,
    shots: u64,
    noise: Option<&NoiseConfig>,
    rng: &mut SimRng,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(DvqeError::arg("shots_per_term must be at least 1"));
    }
    if o.n() != c.n {
        return Err(DvqeError::dim(c.n, o.n()));
    }
    if !o.is_hermitian(1e-12) {
        return Err(DvqeError::arg("observable is not Hermitian"));
    }
    check_register(c)?;
    let clean = run_with_events(c, init, &Vec::new())?;
    let averaged = averaged_for(c, init, noise)?;
    let base: u64 = rng.random();
    o.terms()
        .par_iter()
        .enumerate()
        .map(|(i, (_, s))| {
            if s.is_identity() {
                return Ok(shots);
            }
            let mut r = child_rng(base, i as u64);
            sample_term(c, init, &clean, s, shots, noise, averaged.as_ref(), &mut r)
        })
        .collect()
}

/// `+1` count for one Pauli string measured `shots` times after running `c`
/// from basis state `init`.
pub(crate) fn sample_single_term(
    c: &Circuit,
    init: usize,
    s: &PauliString,
    shots: u64,
    noise: Option<&NoiseConfig>,
    rng: &mut SimRng,
) -> Result<u64> {
    if s.is_identity() || shots == 0 {
        return Ok(shots);
    }
    check_register(c)?;
    let clean = run_with_events(c, init, &Vec::new())?;
    let averaged = averaged_for(c, init, noise)?;
    sample_term(c, init, &clean, s, shots, noise, averaged.as_ref(), rng)
}

pub(crate) fn combine_terms(o: &PauliSum, plus_counts: &[u64], shots: u64) -> Estimate {
    let mut value = 0.0;
    let mut var = 0.0;
    for ((coef, s), &plus) in o.terms().iter().zip(plus_counts) {
        let w = coef.re;
        if s.is_identity() {
            value += w;
            continue;
        }
        let mean = (2.0 * plus as f64 - shots as f64) / shots as f64;
        value += w * mean;
        if shots > 1 {
            let sample_var = (1.0 - mean * mean) * shots as f64 / (shots as f64 - 1.0);
            var += w * w * sample_var / shots as f64;
        }
    }
    Estimate {
        value,
        stderr: var.sqrt(),
    }
}

/// Histogram of measured basis indices (length `2^n`).
pub fn sample_bitstrings(
    c: &Circuit,
    shots: u64,
    noise: Option<&NoiseConfig>,
    rng: &mut SimRng,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(DvqeError::arg("shots must be at least 1"));
    }
    check_register(c)?;
    let mut counts = vec![0u64; 1 << c.n];
    if let Some(v) = averaged_for(c, 0, noise)? {
        let probs: Vec<f64> = (0..1usize << c.n).map(|i| v.amps[(i << c.n) | i].re.max(0.0)).collect();
        let dist = WeightedIndex::new(probs).map_err(|e| DvqeError::Numerical(e.to_string()))?;
        for _ in 0..shots {
            counts[dist.sample(rng)] += 1;
        }
        return Ok(counts);
    }
    let clean = run_with_events(c, 0, &Vec::new())?;
    let dist = WeightedIndex::new(clean.probabilities())
        .map_err(|e| DvqeError::Numerical(e.to_string()))?;
    for _ in 0..shots {
        let events = sample_events(c, noise, rng);
        let idx = if events.is_empty() {
            dist.sample(rng)
        } else {
            let traj = run_with_events(c, 0, &events)?;
            WeightedIndex::new(traj.probabilities())
                .map_err(|e| DvqeError::Numerical(e.to_string()))?
                .sample(rng)
        };
        counts[idx] += 1;
    }
    Ok(counts)
}

#![allow(dead_code)]

use dvqe::lindblad::{Jump, LindbladModel};
pub use dvqe::pauli::{Pauli, PauliString, PauliSum};
pub use dvqe::Complex64;
use nalgebra::DMatrix;
use rand::Rng;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli_matrix(p: Pauli) -> CMat {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match p {
        Pauli::I => CMat::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Dense matrix by explicit Kronecker products, qubit 0 most significant.
pub fn kron_dense(s: &PauliSum) -> CMat {
    let d = 1usize << s.n();
    let mut out = CMat::zeros(d, d);
    for (coef, string) in s.terms() {
        let mut m = CMat::identity(1, 1);
        for &p in string.labels() {
            m = m.kronecker(&pauli_matrix(p));
        }
        out += m * *coef;
    }
    out
}

pub fn random_pauli(n: usize, rng: &mut impl Rng) -> PauliString {
    let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    PauliString::new((0..n).map(|_| all[rng.random_range(0..4)]).collect())
}

pub fn random_sum(n: usize, terms: usize, rng: &mut impl Rng) -> PauliSum {
    let t = (0..terms)
        .map(|_| (c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), random_pauli(n, rng)))
        .collect();
    PauliSum::from_terms(n, t).unwrap()
}

pub fn random_hermitian(n: usize, terms: usize, rng: &mut impl Rng) -> PauliSum {
    let t = (0..terms)
        .map(|_| (c(rng.random_range(-1.0..1.0), 0.0), random_pauli(n, rng)))
        .collect();
    PauliSum::from_terms(n, t).unwrap()
}

/// Model with a random Hermitian Hamiltonian and 1 to 3 non-Hermitian jumps.
pub fn random_model(n: usize, rng: &mut impl Rng) -> LindbladModel {
    let h = random_hermitian(n, 1 + rng.random_range(0..4), rng);
    let k = 1 + rng.random_range(0..3);
    let jumps = (0..k)
        .map(|i| Jump {
            op: random_sum(n, 1 + rng.random_range(0..3), rng),
            rate: rng.random_range(0.0..2.0),
            tag: format!("j{i}"),
        })
        .collect();
    LindbladModel::new(n, h, jumps).unwrap()
}

/// `L(ρ) = −i[H,ρ] + Σ (γ/2)(cρc† − ½{c†c,ρ})` with dense matrices.
pub fn apply_lindblad(m: &LindbladModel, rho: &CMat) -> CMat {
    let h = kron_dense(m.hamiltonian());
    let mut out = (&h * rho - rho * &h) * c(0.0, -1.0);
    for j in m.jumps() {
        let cm = kron_dense(&j.op);
        let cd = cm.adjoint();
        let cdc = &cd * &cm;
        out += (&cm * rho * &cd - (&cdc * rho + rho * &cdc) * c(0.5, 0.0)) * c(j.rate / 2.0, 0.0);
    }
    out
}

/// Superoperator assembled column by column: column `i·d + j` is
/// `vec(L(|i⟩⟨j|))` with `vec` row-major.
pub fn brute_superoperator(m: &LindbladModel) -> CMat {
    let d = 1usize << m.n_sites();
    let mut s = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(i, j)] = c(1.0, 0.0);
            let l = apply_lindblad(m, &e);
            for a in 0..d {
                for b in 0..d {
                    s[(a * d + b, i * d + j)] = l[(a, b)];
                }
            }
        }
    }
    s
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random density matrix `AA†/Tr(AA†)`.
pub fn random_density(n: usize, rng: &mut impl Rng) -> CMat {
    let d = 1usize << n;
    let a = CMat::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let p = &a * a.adjoint();
    let t = p.trace();
    p / t
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub mod invariants;

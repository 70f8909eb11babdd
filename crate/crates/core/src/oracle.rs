//! Exact-diagonalization reference: steady states, distances, fidelity and the
//! dense image of an ansatz state.
//!
//! Superoperators here are assembled from dense matrices with Kronecker
//! products, independently of the Pauli-algebra path used by the optimizer.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{build_basis_circuit, build_eigen_circuit, AnsatzConfig, ParamVector};
use crate::error::{DvqeError, Result};
use crate::lindblad::LindbladModel;
use crate::pauli::PauliSum;
use crate::rng::{child_rng, SimRng};
use crate::sim::{run_circuit, StateVector};

/// Largest site count accepted by the dense `4^N × 4^N` solvers.
pub const MAX_ORACLE_SITES: usize = 6;
/// Second singular value squared below this marks a degenerate kernel.
pub const DEGENERACY_TOL: f64 = 1e-10;
const ZERO_REL_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

type CMat = DMatrix<Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_sites(n: usize) -> Result<()> {
    if n > MAX_ORACLE_SITES {
        return Err(DvqeError::Capacity {
            what: "oracle sites",
            limit: MAX_ORACLE_SITES,
            requested: n,
        });
    }
    Ok(())
}

fn same_shape(a: &CMat, b: &CMat) -> Result<()> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(DvqeError::arg(format!(
            "matrix shapes {:?} and {:?} are incompatible",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// A validated density matrix: Hermitian, unit trace, positive semi-definite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || !m.nrows().is_power_of_two() {
            return Err(DvqeError::arg(format!("bad density matrix shape {:?}", m.shape())));
        }
        let herm = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(DvqeError::arg(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr - c(1.0)).norm() > TRACE_TOL {
            return Err(DvqeError::arg(format!("trace {tr} is not 1")));
        }
        let min = hermitian_part(&m).symmetric_eigenvalues().min();
        if min < -PSD_TOL {
            return Err(DvqeError::arg(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    /// Hermitizes and trace-normalizes before validating.
    pub fn normalized(m: CMat) -> Result<Self> {
        let h = hermitian_part(&m);
        let tr = h.trace().re;
        if tr.abs() < 1e-300 {
            return Err(DvqeError::arg("matrix has zero trace"));
        }
        Self::new(h / c(tr))
    }

    /// `|ψ⟩⟨ψ|` for a normalized state.
    pub fn pure(psi: &StateVector) -> Self {
        let v = DVector::from_column_slice(psi.amplitudes());
        Self(&v * v.adjoint())
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let d = 1usize << n;
        let mut m = CMat::zeros(d, d);
        m[(index, index)] = c(1.0);
        Self(m)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        Self(CMat::identity(d, d) / c(d as f64))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn expectation(&self, o: &PauliSum) -> Result<f64> {
        let od = o.to_dense()?;
        same_shape(&self.0, &od)?;
        Ok((&self.0 * od).trace().re)
    }

    /// Row-major flattening, `vec(|i⟩⟨j|) = |i⟩|j⟩`.
    pub fn vectorize(&self) -> Vec<Complex64> {
        vectorize(&self.0)
    }
}

fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

pub fn vectorize(m: &CMat) -> Vec<Complex64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * m.ncols());
    for i in 0..d {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Inverse of [`vectorize`] for a `2N`-qubit vector.
pub fn unvectorize(v: &[Complex64]) -> Result<CMat> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(DvqeError::arg(format!("length {} is not a square", v.len())));
    }
    Ok(CMat::from_row_slice(d, d, v))
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

fn dense(op: &PauliSum) -> Result<CMat> {
    op.to_dense()
}

/// Dense vectorized Liouvillian built directly from the matrix form.
pub fn dense_liouvillian(m: &LindbladModel) -> Result<CMat> {
    check_sites(m.n_sites())?;
    let d = 1usize << m.n_sites();
    let id = CMat::identity(d, d);
    let h = dense(m.hamiltonian())?;
    let mut l = (kron(&h, &id) - kron(&id, &h.transpose())) * Complex64::new(0.0, -1.0);
    for j in m.jumps() {
        let cm = dense(&j.op)?;
        let cdc = cm.adjoint() * &cm;
        let term = kron(&cm, &cm.conjugate())
            - kron(&cdc, &id) * c(0.5)
            - kron(&id, &cdc.transpose()) * c(0.5);
        l += term * c(j.rate / 2.0);
    }
    Ok(l)
}

/// Right-hand side of the master equation applied to a dense `ρ`.
pub fn lindblad_rhs(m: &LindbladModel, rho: &CMat) -> Result<CMat> {
    check_sites(m.n_sites())?;
    let h = dense(m.hamiltonian())?;
    same_shape(&h, rho)?;
    let mut out = (&h * rho - rho * &h) * Complex64::new(0.0, -1.0);
    for j in m.jumps() {
        let cm = dense(&j.op)?;
        let cd = cm.adjoint();
        let cdc = &cd * &cm;
        out += (&cm * rho * &cd - (&cdc * rho + rho * &cdc) * c(0.5)) * c(j.rate / 2.0);
    }
    Ok(out)
}

/// Frobenius norm of `L(ρ)`.
pub fn residual(m: &LindbladModel, rho: &CMat) -> Result<f64> {
    Ok(lindblad_rhs(m, rho)?.norm())
}

#[derive(Debug, Clone)]
pub struct NessResult {
    pub rho: DensityMatrix,
    /// Smallest nonzero eigenvalue of `L̂†L̂`.
    pub gap: f64,
    /// Set when the kernel of `L̂` has dimension above one.
    pub degenerate: bool,
    /// Eigenvalues of `L̂†L̂` in ascending order.
    pub spectrum: Vec<f64>,
}

/// Exact steady state from the kernel of the dense `L̂`.
///
/// The singular values of `L̂` are square roots of the eigenvalues of `L̂†L̂`,
/// so one SVD yields the kernel, the gap and the spectrum. The returned state
/// is the projection of `vec(𝟙)` onto the kernel, which is unique when the
/// kernel is one-dimensional and a valid trace-one choice otherwise.
pub fn exact_ness(m: &LindbladModel) -> Result<NessResult> {
    let l = dense_liouvillian(m)?;
    let dim = l.nrows();
    let svd = SVD::try_new(l, false, true, f64::EPSILON, 0)
        .ok_or_else(|| DvqeError::Numerical("SVD did not converge".into()))?;
    let v_t = svd.v_t.expect("requested V");
    let sv = &svd.singular_values;
    let smax2 = sv[0] * sv[0];
    let zero = |s: f64| s * s <= ZERO_REL_TOL * smax2;
    let mut spectrum: Vec<f64> = sv.iter().map(|s| s * s).collect();
    spectrum.reverse();
    let kernel: Vec<usize> = (0..dim).filter(|&k| zero(sv[k])).collect();
    let gap = spectrum
        .iter()
        .copied()
        .find(|&e| e > ZERO_REL_TOL * smax2)
        .unwrap_or(0.0);
    if kernel.is_empty() {
        return Err(DvqeError::Numerical(format!(
            "Liouvillian has no kernel (smallest eigenvalue {:e})",
            spectrum[0]
        )));
    }
    let degenerate = spectrum.len() > 1 && spectrum[1] < DEGENERACY_TOL;
    let d = (dim as f64).sqrt().round() as usize;
    let mut v = DVector::<Complex64>::zeros(dim);
    for &k in &kernel {
        let coeff: Complex64 = (0..d).map(|i| v_t[(k, i * d + i)]).sum();
        for j in 0..dim {
            v[j] += v_t[(k, j)].conj() * coeff;
        }
    }
    let rho = DensityMatrix::normalized(unvectorize(v.as_slice())?)?;
    if degenerate {
        log::warn!("steady state is not unique ({} kernel vectors)", kernel.len());
    }
    Ok(NessResult {
        rho,
        gap,
        degenerate,
        spectrum,
    })
}

fn hermitian_sqrt(m: &CMat) -> Result<CMat> {
    let eig = hermitian_part(m).symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
    if eig.eigenvalues.min() < -PSD_TOL * scale {
        return Err(DvqeError::arg(format!(
            "matrix is not positive semi-definite (eigenvalue {:e})",
            eig.eigenvalues.min()
        )));
    }
    let roots = eig.eigenvalues.map(|x| c(x.max(0.0).sqrt()));
    let u = &eig.eigenvectors;
    Ok(u * CMat::from_diagonal(&roots) * u.adjoint())
}

/// Uhlmann fidelity `(Tr √(√ρ₁ ρ₂ √ρ₁))²`.
pub fn fidelity(a: &CMat, b: &CMat) -> Result<f64> {
    same_shape(a, b)?;
    let s = hermitian_sqrt(a)?;
    hermitian_sqrt(b)?;
    let inner = &s * b * &s;
    let t: f64 = hermitian_part(&inner)
        .symmetric_eigenvalues()
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .sum();
    Ok((t * t).clamp(0.0, 1.0))
}

/// Sum of singular values of the difference, without the conventional ½.
pub fn trace_distance(a: &CMat, b: &CMat) -> Result<f64> {
    same_shape(a, b)?;
    Ok((a - b).singular_values().sum())
}

fn normalized_vector(m: &CMat) -> Result<Vec<Complex64>> {
    let norm = m.norm();
    if norm == 0.0 {
        return Err(DvqeError::arg("zero matrix has no normalized vector form"));
    }
    Ok(vectorize(m).into_iter().map(|z| z / norm).collect())
}

/// Euclidean distance between the normalized vectorized forms.
pub fn vector_distance(a: &CMat, b: &CMat) -> Result<f64> {
    same_shape(a, b)?;
    let va = normalized_vector(a)?;
    let vb = normalized_vector(b)?;
    Ok(va
        .iter()
        .zip(&vb)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `|⟨ρ₁|ρ₂⟩|` of the normalized vectorized forms.
pub fn vector_overlap(a: &CMat, b: &CMat) -> Result<f64> {
    same_shape(a, b)?;
    let va = normalized_vector(a)?;
    let vb = normalized_vector(b)?;
    Ok(va.iter().zip(&vb).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm())
}

/// How scatter noise widths relate to the matrix dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidthScale {
    /// Standard deviation `w`.
    Absolute,
    /// Standard deviation `w / 2^n`, i.e. relative to the mean diagonal entry.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterConfig {
    pub n_list: Vec<usize>,
    pub samples: usize,
    /// Noise widths are drawn log-uniformly from `[lo, hi]`; `lo == hi` fixes them.
    pub width_range: (f64, f64),
    pub scale: WidthScale,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self {
            n_list: vec![4, 8, 12],
            samples: 1000,
            width_range: (1e-4, 1e-1),
            scale: WidthScale::Relative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterRow {
    pub n: usize,
    pub width: f64,
    pub d_v: f64,
    pub d_m: f64,
}

/// Both distances between a random diagonal `ρ` and `ρ + δ` for diagonal
/// Gaussian `δ`. `ρ + δ` is neither clamped nor renormalized.
pub fn distance_scatter_experiment(cfg: &ScatterConfig, seed: u64) -> Result<Vec<ScatterRow>> {
    let (lo, hi) = cfg.width_range;
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) || (lo == 0.0 && hi > 0.0) {
        return Err(DvqeError::arg(format!("bad width range [{lo}, {hi}]")));
    }
    if let Some(&n) = cfg.n_list.iter().find(|&&n| n == 0 || n > 20) {
        return Err(DvqeError::arg(format!("scatter size n = {n} out of range")));
    }
    let jobs: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .enumerate()
        .flat_map(|(k, _)| (0..cfg.samples).map(move |s| (k, s)))
        .collect();
    jobs.par_iter()
        .map(|&(k, s)| {
            let n = cfg.n_list[k];
            let mut rng = child_rng(seed, ((k as u64) << 32) | s as u64);
            scatter_sample(n, lo, hi, cfg.scale, &mut rng)
        })
        .collect()
}

fn scatter_sample(n: usize, lo: f64, hi: f64, scale: WidthScale, rng: &mut SimRng) -> Result<ScatterRow> {
    let d = 1usize << n;
    let width = if hi == lo {
        lo
    } else {
        (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
    };
    let sigma = match scale {
        WidthScale::Absolute => width,
        WidthScale::Relative => width / d as f64,
    };
    let mut rho: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let total: f64 = rho.iter().sum();
    rho.iter_mut().for_each(|x| *x /= total);
    let noisy: Vec<f64> = if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| DvqeError::arg(e.to_string()))?;
        rho.iter().map(|x| x + normal.sample(rng)).collect()
    } else {
        rho.clone()
    };
    let d_m = rho.iter().zip(&noisy).map(|(a, b)| (a - b).abs()).sum();
    let na = rho.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = noisy.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d_v = rho
        .iter()
        .zip(&noisy)
        .map(|(a, b)| (a / na - b / nb).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ScatterRow { n, width, d_v, d_m })
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// input is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = (x.len() + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean).powi(2);
        syy += (b - mean).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    })
}

/// `Σ_q λ_q V|q⟩⟨q|V†`, trace-normalized, with `λ_q` the `D̃` amplitudes.
pub fn ansatz_density_matrix(cfg: &AnsatzConfig, theta: &ParamVector) -> Result<DensityMatrix> {
    check_sites(cfg.n_sites)?;
    let d_circ = build_eigen_circuit(cfg, theta.theta_d())?;
    let mut rng = crate::rng::rng_from_seed(0);
    let amps = run_circuit(&d_circ, None, &mut rng)?;
    let v = build_basis_circuit(cfg, theta.theta_v())?.unitary()?;
    let lambda = DVector::from_iterator(amps.amplitudes().len(), amps.amplitudes().iter().map(|a| c(a.re)));
    let rho = &v * CMat::from_diagonal(&lambda) * v.adjoint();
    DensityMatrix::normalized(rho)
}

/// Reshapes a `2N`-qubit vectorized state into its `2^N × 2^N` matrix.
pub fn reshape_state(psi: &StateVector) -> Result<CMat> {
    if psi.n() % 2 != 0 {
        return Err(DvqeError::arg("vectorized state needs an even qubit count"));
    }
    unvectorize(psi.amplitudes())
}

/// Writes the matrix as `row,col,re,im` lines with a header.
pub fn write_matrix_csv<W: Write>(m: &CMat, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["row", "col", "re", "im"]).map_err(csv_err)?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            wr.write_record([i.to_string(), j.to_string(), z.re.to_string(), z.im.to_string()])
                .map_err(csv_err)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Pauli decomposition of a density matrix in the textual Pauli format.
pub fn density_to_pauli_text(rho: &DensityMatrix) -> Result<String> {
    Ok(PauliSum::from_dense(rho.matrix())?.to_text())
}

pub(crate) fn csv_err(e: csv::Error) -> DvqeError {
    DvqeError::Io(e.to_string())
}

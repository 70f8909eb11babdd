//! C ABI for the dvqe steady-state solver.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns a
//! [`DvqeStatus`]; the message of the most recent failure on the calling
//! thread is available from [`dvqe_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dvqe::ansatz::AnsatzConfig;
use dvqe::config::ExperimentConfig;
use dvqe::lindblad::{cqed_model, tfim_model, Boundary, CqedParams, Jump, LindbladModel};
use dvqe::optimize::{CostFunction, OptimizerConfig};
use dvqe::oracle::{ansatz_density_matrix, exact_ness, fidelity, DensityMatrix};
use dvqe::pauli::PauliSum;
use dvqe::rng::rng_from_seed;
use dvqe::DvqeError;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvqeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Capacity = 4,
    Parse = 5,
    Config = 6,
    Fit = 7,
    Numerical = 8,
    Io = 9,
    Panic = 10,
}

impl From<&DvqeError> for DvqeStatus {
    fn from(e: &DvqeError) -> Self {
        match e {
            DvqeError::Dimension { .. } => DvqeStatus::Dimension,
            DvqeError::Capacity { .. } => DvqeStatus::Capacity,
            DvqeError::Argument(_) => DvqeStatus::InvalidArgument,
            DvqeError::Fit(_) => DvqeStatus::Fit,
            DvqeError::Numerical(_) => DvqeStatus::Numerical,
            DvqeError::Parse(_) => DvqeStatus::Parse,
            DvqeError::Config(_) => DvqeStatus::Config,
            DvqeError::Io(_) => DvqeStatus::Io,
        }
    }
}

/// Lindblad model: Hamiltonian plus jump operators.
pub struct DvqeModel(LindbladModel);

/// Density matrix of `n` qubits.
pub struct DvqeState(DensityMatrix);

/// Result of a variational optimization.
pub struct DvqeSolution {
    state: DensityMatrix,
    params: Vec<f64>,
    cost: f64,
    converged: bool,
}

/// Options for [`dvqe_solve`]; start from [`dvqe_solve_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DvqeSolveOptions {
    /// Entangled eigenvalue circuit when true, one rotation per qubit otherwise.
    pub entangled: bool,
    pub d1: u32,
    pub d2: u32,
    /// Random restarts in addition to the all-zero start.
    pub restarts: u32,
    pub sweeps_max: u32,
    pub tol: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(DvqeStatus, String);

impl From<DvqeError> for Failure {
    fn from(e: DvqeError) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DvqeStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DvqeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DvqeStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DvqeStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DvqeStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dvqe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dvqe_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Transverse-field Ising chain with damping `gamma1` and dephasing `gamma2`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn dvqe_model_tfim(
    n_sites: usize,
    g: f64,
    gamma1: f64,
    gamma2: f64,
    periodic: bool,
    out: *mut *mut DvqeModel,
) -> DvqeStatus {
    guard(|| {
        let b = if periodic { Boundary::Periodic } else { Boundary::Open };
        write_out(out, DvqeModel(tfim_model(n_sites, g, gamma1, gamma2, b)?))
    })
}

/// Coupled-cavity chain with two-site dissipation of phase `theta`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn dvqe_model_cqed(
    n_sites: usize,
    mu: f64,
    gamma1: f64,
    gamma2: f64,
    theta: f64,
    out: *mut *mut DvqeModel,
) -> DvqeStatus {
    guard(|| {
        let p = CqedParams::new(mu, gamma1, gamma2, theta);
        write_out(out, DvqeModel(cqed_model(n_sites, &p)?))
    })
}

/// Model from Pauli-sum text (one `(re,im) LABEL` term per line) for the
/// Hamiltonian and each of the `n_jumps` jump operators.
///
/// # Safety
/// String pointers must be valid NUL-terminated strings; `jumps` and `rates`
/// must hold `n_jumps` entries (either may be null when `n_jumps` is 0).
#[no_mangle]
pub unsafe extern "C" fn dvqe_model_from_pauli_text(
    n_sites: usize,
    hamiltonian: *const c_char,
    jumps: *const *const c_char,
    rates: *const f64,
    n_jumps: usize,
    out: *mut *mut DvqeModel,
) -> DvqeStatus {
    guard(|| {
        let h = PauliSum::from_text(read_str(hamiltonian, "hamiltonian")?)?;
        if n_jumps > 0 && (jumps.is_null() || rates.is_null()) {
            return Err(null("jump arrays"));
        }
        let mut js = Vec::with_capacity(n_jumps);
        for k in 0..n_jumps {
            js.push(Jump {
                op: PauliSum::from_text(read_str(*jumps.add(k), "jump operator")?)?,
                rate: *rates.add(k),
                tag: format!("jump{k}"),
            });
        }
        write_out(out, DvqeModel(LindbladModel::new(n_sites, h, js)?))
    })
}

/// Model section of a TOML experiment config.
///
/// # Safety
/// `toml` must be a valid NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn dvqe_model_from_config(toml: *const c_char, out: *mut *mut DvqeModel) -> DvqeStatus {
    guard(|| {
        let cfg = ExperimentConfig::parse(read_str(toml, "config")?)?;
        write_out(out, DvqeModel(cfg.model.build()?))
    })
}

/// Number of sites, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dvqe_model_n_sites(model: *const DvqeModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n_sites())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dvqe_model_free(model: *mut DvqeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Exact steady state by dense diagonalization. `gap` and `degenerate` may be
/// null.
///
/// # Safety
/// `model` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn dvqe_exact_ness(
    model: *const DvqeModel,
    out: *mut *mut DvqeState,
    gap: *mut f64,
    degenerate: *mut bool,
) -> DvqeStatus {
    guard(|| {
        let ness = exact_ness(&handle(model, "model")?.0)?;
        if let Some(g) = gap.as_mut() {
            *g = ness.gap;
        }
        if let Some(d) = degenerate.as_mut() {
            *d = ness.degenerate;
        }
        write_out(out, DvqeState(ness.rho))
    })
}

/// Matrix dimension `2^n`, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dvqe_state_dim(state: *const DvqeState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the matrix row-major into `re` and `im`, each of `len = dim²`.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dvqe_state_copy(
    state: *const DvqeState,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> DvqeStatus {
    guard(|| {
        let m = handle(state, "state")?.0.matrix();
        let d = m.nrows();
        if len != d * d {
            return Err(DvqeError::Dimension { expected: d * d, got: len }.into());
        }
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        for i in 0..d {
            for j in 0..d {
                *re.add(i * d + j) = m[(i, j)].re;
                *im.add(i * d + j) = m[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// `Tr(ρ O)` for a Hermitian observable given as Pauli-sum text.
///
/// # Safety
/// `observable` must be a valid NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dvqe_state_expectation(
    state: *const DvqeState,
    observable: *const c_char,
    out: *mut f64,
) -> DvqeStatus {
    guard(|| {
        let s = handle(state, "state")?;
        let o = PauliSum::from_text(read_str(observable, "observable")?)?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = s.0.expectation(&o)?;
        Ok(())
    })
}

/// Uhlmann fidelity `(Tr√(√ρ σ √ρ))²`.
///
/// # Safety
/// Both handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dvqe_state_fidelity(a: *const DvqeState, b: *const DvqeState, out: *mut f64) -> DvqeStatus {
    guard(|| {
        let f = fidelity(handle(a, "state")?.0.matrix(), handle(b, "state")?.0.matrix())?;
        *out.as_mut().ok_or_else(|| null("output pointer"))? = f;
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dvqe_state_free(state: *mut DvqeState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Decoupled ansatz with one basis layer, two restarts and default stopping.
#[no_mangle]
pub extern "C" fn dvqe_solve_options_default() -> DvqeSolveOptions {
    let opt = OptimizerConfig::default();
    DvqeSolveOptions {
        entangled: false,
        d1: 1,
        d2: 1,
        restarts: 2,
        sweeps_max: opt.sweeps_max as u32,
        tol: opt.tol,
        seed: 0,
    }
}

/// Minimizes the exact cost over the ansatz with sequential single-parameter
/// updates.
///
/// # Safety
/// `model` and `options` must be valid; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn dvqe_solve(
    model: *const DvqeModel,
    options: *const DvqeSolveOptions,
    out: *mut *mut DvqeSolution,
) -> DvqeStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let o = *handle(options, "options")?;
        let n = m.n_sites();
        let ansatz = if o.entangled {
            AnsatzConfig::entangled(n, o.d1 as usize, o.d2 as usize)
        } else {
            AnsatzConfig::decoupled(n, o.d2 as usize)
        };
        ansatz.validate()?;
        let opt = OptimizerConfig {
            restarts: o.restarts as usize,
            sweeps_max: o.sweeps_max as usize,
            tol: o.tol,
            ..OptimizerConfig::default()
        };
        let cf = CostFunction::new(m, &ansatz)?;
        let zero = cf.layout().zeros();
        let trace = cf.optimize(&opt, &zero, &mut rng_from_seed(o.seed))?;
        let state = ansatz_density_matrix(&ansatz, &trace.final_params)?;
        write_out(
            out,
            DvqeSolution {
                state,
                params: trace.final_params.values().to_vec(),
                cost: trace.final_cost,
                converged: trace.converged,
            },
        )
    })
}

/// Final cost, or NaN for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dvqe_solution_cost(sol: *const DvqeSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.cost)
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dvqe_solution_converged(sol: *const DvqeSolution) -> bool {
    sol.as_ref().is_some_and(|s| s.converged)
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dvqe_solution_n_params(sol: *const DvqeSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.params.len())
}

/// Copies the optimized angles into `buf` of exactly `len` entries.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dvqe_solution_params(sol: *const DvqeSolution, buf: *mut f64, len: usize) -> DvqeStatus {
    guard(|| {
        let s = handle(sol, "solution")?;
        if len != s.params.len() {
            return Err(DvqeError::Dimension { expected: s.params.len(), got: len }.into());
        }
        if buf.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(s.params.as_ptr(), buf, len);
        Ok(())
    })
}

/// New state handle holding the ansatz density matrix.
///
/// # Safety
/// `sol` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn dvqe_solution_state(sol: *const DvqeSolution, out: *mut *mut DvqeState) -> DvqeStatus {
    guard(|| write_out(out, DvqeState(handle(sol, "solution")?.state.clone())))
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dvqe_solution_free(sol: *mut DvqeSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

//! Invariant checks shared by the property suite and the acceptance runner.

use super::*;
use dvqe::ansatz::{build_full_circuit, AnsatzConfig};
use dvqe::lindblad::{liouvillian_vector, tfim_model, Boundary, Observable};
use dvqe::measure::expectation_exact_sum;
use dvqe::optimize::{CostFunction, OptimizerConfig};
use dvqe::oracle::{
    ansatz_density_matrix, distance_scatter_experiment, reshape_state, unvectorize, vectorize, ScatterConfig,
    WidthScale,
};
use dvqe::rng::rng_from_seed;
use dvqe::sim::{expectation_sampled, run_circuit, NoiseConfig};
use proptest::prelude::*;

pub type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn ansatz_strategy() -> impl Strategy<Value = AnsatzConfig> {
    prop_oneof![
        (1usize..=3, 0usize..=2).prop_map(|(n, d2)| AnsatzConfig::decoupled(n, d2)),
        (1usize..=3, 1usize..=2, 0usize..=2).prop_map(|(n, d1, d2)| AnsatzConfig::entangled(n, d1, d2)),
    ]
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

/// Max-norm gap between the Pauli-built and column-built superoperators.
pub fn superoperator_gap(n: usize, seed: u64) -> f64 {
    let m = random_model(n, &mut rng_from_seed(seed));
    max_abs(&(kron_dense(&liouvillian_vector(&m)) - brute_superoperator(&m)))
}

pub fn superoperator(n: usize, seed: u64) -> Check {
    let gap = superoperator_gap(n, seed);
    ensure!(gap <= 1e-12, "superoperator gap {gap:e}");
    Ok(())
}

pub fn homomorphism(n: usize, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let a = random_sum(n, 4, &mut rng);
    let b = random_sum(n, 4, &mut rng);
    let (da, db) = (kron_dense(&a), kron_dense(&b));
    let lr = PauliSum::embed_left_right(&a, &b).unwrap();
    let back = PauliSum::from_dense(&da).unwrap();
    let cases = [
        ("to_dense", max_abs(&(a.to_dense().unwrap() - &da))),
        ("compose", max_abs(&(kron_dense(&a.compose(&b).unwrap()) - &da * &db))),
        ("add", max_abs(&(kron_dense(&(a.clone() + b.clone())) - (&da + &db)))),
        ("adjoint", max_abs(&(kron_dense(&a.adjoint()) - da.adjoint()))),
        ("transpose", max_abs(&(kron_dense(&a.transpose()) - da.transpose()))),
        ("conjugate", max_abs(&(kron_dense(&a.conjugate()) - da.conjugate()))),
        ("tensor", max_abs(&(kron_dense(&a.tensor(&b)) - da.kronecker(&db)))),
        ("embed_left_right", max_abs(&(kron_dense(&lr) - da.kronecker(&db.transpose())))),
        ("from_dense", max_abs(&(kron_dense(&back) - &da))),
    ];
    for (name, gap) in cases {
        ensure!(gap <= 1e-12, "{name} gap {gap:e}");
    }
    Ok(())
}

pub fn ansatz_state(cfg: &AnsatzConfig, seed: u64) -> Check {
    let theta = cfg.layout().unwrap().random(&mut rng_from_seed(seed));
    let rho = ansatz_density_matrix(cfg, &theta).unwrap();
    let m = rho.matrix();
    ensure!(max_abs(&(m - m.adjoint())) <= 1e-12, "not Hermitian");
    ensure!((m.trace().re - 1.0).abs() <= 1e-12, "trace {}", m.trace());
    let lo = min_eigenvalue(m);
    ensure!(lo >= -1e-12, "negative eigenvalue {lo:e}");
    Ok(())
}

pub fn channel(n: usize, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let m = random_model(n, &mut rng);
    let rho = random_density(n, &mut rng);
    let l = apply_lindblad(&m, &rho);
    ensure!(l.trace().norm() <= 1e-12, "trace of L(ρ) is {}", l.trace());
    ensure!(max_abs(&(&l - l.adjoint())) <= 1e-12, "L(ρ) not Hermitian");
    // vec(𝟙)† L̂ = 0 on the vectorized side
    let lv = kron_dense(&liouvillian_vector(&m));
    let d = 1usize << n;
    let id = vectorize(&CMat::identity(d, d));
    for col in 0..d * d {
        let s: Complex64 = (0..d * d).map(|r| id[r].conj() * lv[(r, col)]).sum();
        ensure!(s.norm() <= 1e-12, "vec(1)† L column {col} is {s}");
    }
    Ok(())
}

pub fn noisy_norm(cfg: &AnsatzConfig, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let theta = cfg.layout().unwrap().random(&mut rng);
    let c = build_full_circuit(cfg, &theta).unwrap();
    let noise = NoiseConfig::new(0.05, 0.2).unwrap();
    let psi = run_circuit(&c, Some(&noise), &mut rng).unwrap();
    ensure!((psi.norm() - 1.0).abs() <= 1e-10, "norm {}", psi.norm());
    Ok(())
}

pub fn measurement_bridge(cfg: &AnsatzConfig, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let theta = cfg.layout().unwrap().random(&mut rng);
    let op = random_hermitian(cfg.n_sites, 3, &mut rng);
    let rho = ansatz_density_matrix(cfg, &theta).unwrap();
    let via_trace = (rho.matrix() * kron_dense(&op)).trace().re;
    let via_circuit = expectation_exact_sum(cfg, &theta, &Observable::new("o", op).unwrap()).unwrap();
    ensure!((via_trace - via_circuit).abs() <= 1e-10, "Tr(ρO) {via_trace} vs circuit {via_circuit}");
    let psi = run_circuit(&build_full_circuit(cfg, &theta).unwrap(), None, &mut rng).unwrap();
    let v = psi.amplitudes();
    ensure!(max_abs(&(reshape_state(&psi).unwrap() - unvectorize(v).unwrap())) <= 1e-12, "reshape mismatch");
    ensure!(vectorize(&unvectorize(v).unwrap()) == v, "vectorize round trip");
    Ok(())
}

pub fn determinism(seed: u64) -> Check {
    let cfg = AnsatzConfig::decoupled(2, 1);
    let model = tfim_model(2, 0.7, 1.0, 0.5, Boundary::Open).unwrap();
    let cf = CostFunction::new(&model, &cfg).unwrap();
    let theta = cf.layout().random(&mut rng_from_seed(seed));
    let c = build_full_circuit(&cfg, &theta).unwrap();
    let noise = NoiseConfig::new(1e-2, 5e-2).unwrap();
    let op = cf.cost_operator();
    let run = |threads| in_pool(threads, || expectation_sampled(&c, op, 50, Some(&noise), &mut rng_from_seed(seed)).unwrap());
    ensure!(run(1) == run(3), "sampled estimate depends on thread count");

    let opt = OptimizerConfig {
        exact: false,
        shots_per_term: 50,
        sweeps_max: 1,
        ..OptimizerConfig::default()
    };
    let optimize = |threads| {
        in_pool(threads, || {
            let t = cf.optimize(&opt, &theta, &mut rng_from_seed(seed)).unwrap();
            (t.final_params.values().to_vec(), t.final_cost)
        })
    };
    ensure!(optimize(1) == optimize(3), "optimizer trace depends on thread count");

    let sc = ScatterConfig {
        n_list: vec![3, 5],
        samples: 20,
        width_range: (1e-3, 1e-1),
        scale: WidthScale::Relative,
    };
    let scatter = |threads| {
        in_pool(threads, || {
            distance_scatter_experiment(&sc, seed)
                .unwrap()
                .iter()
                .map(|r| (r.width, r.d_v, r.d_m))
                .collect::<Vec<_>>()
        })
    };
    ensure!(scatter(1) == scatter(3), "scatter depends on thread count");
    Ok(())
}

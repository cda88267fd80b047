//! Data-parallel hot paths against their sequential twins. Run once with the
//! default features and once with `--no-default-features`; group names carry
//! the mode so criterion keeps both sets of numbers side by side.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hubsolve::encode::{hamiltonian_mpo, QubitMap, QubitOrdering};
use hubsolve::model::ExtendedHubbardModel;
use hubsolve::vqe::{
    build_ansatz, energy_value_grad, AnsatzKind, GradientMethod, VqeConfig,
};
use hubsolve::{ed, materials};

const MODE: &str = if cfg!(feature = "parallel") { "parallel" } else { "sequential" };
const ORD: QubitOrdering = QubitOrdering::SpinInterleaved;

fn chain(l: usize) -> ExtendedHubbardModel {
    materials::ca2cuo3().with_lattice(l, 1).unwrap()
}

fn ed_ground_state(c: &mut Criterion) {
    let model = chain(6);
    let map = QubitMap::new(&model, ORD);
    c.bench_function(&format!("ed_ground_state_12q/{MODE}"), |b| {
        b.iter(|| ed::ground_state(black_box(&model), black_box(&map)).unwrap())
    });
}

fn encode_mpo(c: &mut Criterion) {
    let model = materials::srvo3();
    let map = QubitMap::new(&model, ORD);
    c.bench_function(&format!("hamiltonian_mpo_54q/{MODE}"), |b| {
        b.iter(|| hamiltonian_mpo(black_box(&model), black_box(&map), 1e-12).unwrap())
    });
}

fn fd_gradient(c: &mut Criterion) {
    let model = chain(4);
    let map = QubitMap::new(&model, ORD);
    let (_, mpo) = hamiltonian_mpo(&model, &map, 1e-14).unwrap();
    let spec = build_ansatz(&model, ORD, AnsatzKind::Np, 2).unwrap();
    let start = hubsolve::dmrg::sector_product_state(&model, &map);
    let mut cfg = VqeConfig::defaults(0);
    cfg.chi_max = Some(32);
    cfg.gradient = GradientMethod::CentralDiff { step: 1e-6 };
    let params: Vec<f64> = (0..spec.n_params).map(|k| 0.05 * (k as f64).sin()).collect();
    c.bench_function(&format!("fd_gradient_{}p/{MODE}", spec.n_params), |b| {
        b.iter(|| energy_value_grad(&spec, &start, &mpo, black_box(&params), &cfg).unwrap())
    });
}

fn bench_config() -> Criterion {
    Criterion::default().sample_size(10)
}

criterion_group! {
    name = engine;
    config = bench_config();
    targets = ed_ground_state, encode_mpo, fd_gradient
}
criterion_main!(engine);

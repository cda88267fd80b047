use approx::assert_abs_diff_eq;
use hubsolve::encode::{hamiltonian_mpo, number_penalty_mpo, Pauli, QubitMap, QubitOrdering};
use hubsolve::model::{ExtendedHubbardModel, LatticeSpec};
use hubsolve::tensor::{apply_mpo, max_chi_default, overlap, swap_gate, MatrixProductState};
use ndarray::{arr2, Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, seed: u64) -> Array1<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Array1::from_shape_fn(1 << n, |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|x| x / norm);
    v
}

fn random_unitary4(seed: u64) -> Array2<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Array2::from_shape_fn((4, 4), |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let (q, r) = hubsolve::linalg::qr_thin(&m).unwrap();
    // fix the phase so the factorization is unique-ish
    let mut u = q;
    for j in 0..4 {
        let d = r[(j, j)];
        let phase = d / Complex64::new(d.norm(), 0.0);
        u.column_mut(j).mapv_inplace(|x| x * phase);
    }
    u
}

/// Applies a 4x4 gate to qubits (a, b) of a dense state; the matrix treats
/// the bit of qubit `a` as the most significant of the pair.
fn apply_gate_dense(
    v: &Array1<Complex64>,
    n: usize,
    a: usize,
    b: usize,
    g: &Array2<Complex64>,
) -> Array1<Complex64> {
    let mut out = Array1::zeros(1 << n);
    for x in 0..1usize << n {
        let sa = (x >> a) & 1;
        let sb = (x >> b) & 1;
        let col = 2 * sa + sb;
        for sa2 in 0..2 {
            for sb2 in 0..2 {
                let row = 2 * sa2 + sb2;
                let coeff = g[(row, col)];
                if coeff != Complex64::new(0.0, 0.0) {
                    let x2 = (x & !(1 << a) & !(1 << b)) | (sa2 << a) | (sb2 << b);
                    out[x2] += coeff * v[x];
                }
            }
        }
    }
    out
}

fn max_vec_diff(a: &Array1<Complex64>, b: &Array1<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn default_bond_caps() {
    assert_eq!(max_chi_default(8), 16);
    assert_eq!(max_chi_default(12), 64);
    assert_eq!(max_chi_default(20), 512);
    assert_eq!(max_chi_default(54), 512);
}

#[test]
fn product_states_have_unit_norm_and_the_right_occupations() {
    let occ = [true, false, true, true, false];
    let mps = MatrixProductState::product_state(&occ, 8, 1e-12);
    assert_abs_diff_eq!(mps.norm(), 1.0, epsilon = 1e-12);
    for (q, &o) in occ.iter().enumerate() {
        let z = mps.expect_pauli(&[(q, Pauli::Z)]).re;
        let density = 0.5 * (1.0 - z);
        assert_abs_diff_eq!(density, f64::from(o as u8), epsilon = 1e-12);
    }
    let dense = mps.to_dense().unwrap();
    let expect_idx = 0b01101; // bits: q0=1, q2=1, q3=1
    for (i, amp) in dense.iter().enumerate() {
        let expect = if i == expect_idx { 1.0 } else { 0.0 };
        assert_abs_diff_eq!(amp.re, expect, epsilon = 1e-12);
    }
}

#[test]
fn dense_roundtrip_is_exact_without_truncation() {
    for n in [2, 3, 5, 7] {
        let v = random_state(n, 7 + n as u64);
        let mps = MatrixProductState::from_dense(&v, 1 << n, 1e-14).unwrap();
        assert_abs_diff_eq!(mps.norm(), 1.0, epsilon = 1e-10);
        let back = mps.to_dense().unwrap();
        assert!(max_vec_diff(&v, &back) < 1e-10, "n={n}");
    }
}

#[test]
fn adjacent_gates_match_dense_application() {
    let n = 5;
    let v = random_state(n, 11);
    let mut mps = MatrixProductState::from_dense(&v, 32, 1e-14).unwrap();
    let g = random_unitary4(3);
    mps.apply_two_qubit(2, 3, g.view()).unwrap();
    let dense = apply_gate_dense(&v, n, 2, 3, &g);
    assert!(max_vec_diff(&mps.to_dense().unwrap(), &dense) < 1e-10);
}

#[test]
fn routed_gates_match_dense_application() {
    let n = 6;
    let v = random_state(n, 13);
    for (a, b, seed) in [(0, 3, 17), (1, 5, 19), (4, 0, 23), (5, 2, 29)] {
        let mut mps = MatrixProductState::from_dense(&v, 64, 1e-14).unwrap();
        let g = random_unitary4(seed);
        mps.apply_two_qubit(a, b, g.view()).unwrap();
        let dense = apply_gate_dense(&v, n, a, b, &g);
        assert!(
            max_vec_diff(&mps.to_dense().unwrap(), &dense) < 1e-9,
            "pair ({a}, {b})"
        );
        let span = a.abs_diff(b) as u64;
        assert_eq!(mps.swap_count(), 2 * (span - 1));
    }
}

#[test]
fn single_qubit_gates_match_dense_application() {
    let n = 4;
    let v = random_state(n, 31);
    let mut mps = MatrixProductState::from_dense(&v, 16, 1e-14).unwrap();
    let theta = 0.7;
    let rz = arr2(&[
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, theta)],
    ]);
    mps.apply_single_qubit(2, rz.view());
    let mut dense = v.clone();
    for (i, amp) in dense.iter_mut().enumerate() {
        if (i >> 2) & 1 == 1 {
            *amp *= Complex64::from_polar(1.0, theta);
        }
    }
    assert!(max_vec_diff(&mps.to_dense().unwrap(), &dense) < 1e-12);
}

#[test]
fn swap_gate_is_its_own_inverse_and_counted() {
    let n = 4;
    let v = random_state(n, 37);
    let mut mps = MatrixProductState::from_dense(&v, 16, 1e-14).unwrap();
    let sw = swap_gate();
    mps.apply_two_qubit(1, 2, sw.view()).unwrap();
    mps.apply_two_qubit(1, 2, sw.view()).unwrap();
    assert!(max_vec_diff(&mps.to_dense().unwrap(), &v) < 1e-10);
}

#[test]
fn overlaps_match_dense_inner_products() {
    let n = 5;
    let a = random_state(n, 41);
    let b = random_state(n, 43);
    let ma = MatrixProductState::from_dense(&a, 32, 1e-14).unwrap();
    let mb = MatrixProductState::from_dense(&b, 32, 1e-14).unwrap();
    let dense: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let got = overlap(&ma, &mb);
    assert_abs_diff_eq!(got.re, dense.re, epsilon = 1e-10);
    assert_abs_diff_eq!(got.im, dense.im, epsilon = 1e-10);
}

#[test]
fn pauli_expectations_match_dense() {
    let n = 5;
    let v = random_state(n, 47);
    let mps = MatrixProductState::from_dense(&v, 32, 1e-14).unwrap();
    let cases: Vec<Vec<(usize, Pauli)>> = vec![
        vec![(0, Pauli::Z)],
        vec![(3, Pauli::X)],
        vec![(1, Pauli::Y), (4, Pauli::Y)],
        vec![(0, Pauli::X), (1, Pauli::Z), (2, Pauli::X)],
        vec![(2, Pauli::Z), (3, Pauli::Z)],
    ];
    for ops in cases {
        let got = mps.expect_pauli(&ops);
        // dense evaluation
        let mut w = v.clone();
        for &(q, p) in ops.iter() {
            let mut next = Array1::zeros(1 << n);
            let m = p.matrix();
            for x in 0..1usize << n {
                let bit = (x >> q) & 1;
                for to in 0..2 {
                    let c = m[(to, bit)];
                    if c != Complex64::new(0.0, 0.0) {
                        let x2 = (x & !(1 << q)) | (to << q);
                        next[x2] += c * w[x];
                    }
                }
            }
            w = next;
        }
        let dense: Complex64 = v.iter().zip(w.iter()).map(|(x, y)| x.conj() * y).sum();
        assert_abs_diff_eq!(got.re, dense.re, epsilon = 1e-10);
        assert_abs_diff_eq!(got.im, dense.im, epsilon = 1e-10);
    }
}

fn small_hamiltonian() -> (ExtendedHubbardModel, QubitMap) {
    let model = ExtendedHubbardModel {
        name: "chain".into(),
        lattice: LatticeSpec::new(4, 1).unwrap(),
        bands: 1,
        filling: vec![1.0],
        hop_intra: arr2(&[[-0.5]]),
        hop_onsite: arr2(&[[0.1]]),
        u_onsite: arr2(&[[2.0]]),
        v_offsite: arr2(&[[0.5]]),
    };
    let map = QubitMap::new(&model, QubitOrdering::SpinInterleaved);
    (model, map)
}

#[test]
fn mpo_expectation_matches_dense_sandwich() {
    let (model, map) = small_hamiltonian();
    let (sum, mpo) = hamiltonian_mpo(&model, &map, 1e-12).unwrap();
    let h = hubsolve::encode::pauli_sum_to_dense(&sum).unwrap();
    let n = map.n_qubits();
    let v = random_state(n, 53);
    let mps = MatrixProductState::from_dense(&v, 256, 1e-14).unwrap();
    let hv = h.dot(&v);
    let dense: Complex64 = v.iter().zip(hv.iter()).map(|(x, y)| x.conj() * y).sum();
    let got = mps.expectation(&mpo);
    assert_abs_diff_eq!(got.re, dense.re, epsilon = 1e-9);
    assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-9);
}

#[test]
fn apply_mpo_matches_dense_action() {
    let (model, map) = small_hamiltonian();
    let (sum, mpo) = hamiltonian_mpo(&model, &map, 1e-12).unwrap();
    let h = hubsolve::encode::pauli_sum_to_dense(&sum).unwrap();
    let n = map.n_qubits();
    let v = random_state(n, 59);
    let mps = MatrixProductState::from_dense(&v, 256, 1e-14).unwrap();
    let hv_mps = apply_mpo(&mps, &mpo, 4096, 1e-13).unwrap();
    let hv = h.dot(&v);
    assert!(max_vec_diff(&hv_mps.to_dense().unwrap(), &hv) < 1e-8);
}

#[test]
fn penalty_expectation_vanishes_in_the_right_sector() {
    let n = 6;
    let occ = [true, true, false, true, false, false];
    let mps = MatrixProductState::product_state(&occ, 8, 1e-12);
    let penalty = number_penalty_mpo(n, &(0..n).collect::<Vec<_>>(), 3.0);
    assert_abs_diff_eq!(mps.expectation(&penalty).re, 0.0, epsilon = 1e-12);
    let off = number_penalty_mpo(n, &(0..n).collect::<Vec<_>>(), 2.0);
    assert_abs_diff_eq!(mps.expectation(&off).re, 1.0, epsilon = 1e-12);
}

#[test]
fn truncation_is_tracked_and_lossy() {
    let n = 8;
    let v = random_state(n, 61);
    // cap the bond hard; a random state needs chi = 16 at the middle
    let mps = MatrixProductState::from_dense(&v, 4, 1e-14).unwrap();
    assert!(mps.discarded_weight() > 1e-6);
    assert!(mps.max_bond() <= 4);
    assert!(mps.norm() < 1.0);
    let fidelity = overlap(&mps, &MatrixProductState::from_dense(&v, 256, 1e-14).unwrap())
        .norm();
    assert!(fidelity > 0.01 && fidelity < 0.999);
}

#[test]
fn center_moves_preserve_the_state() {
    let n = 6;
    let v = random_state(n, 67);
    let mut mps = MatrixProductState::from_dense(&v, 64, 1e-14).unwrap();
    for c in [0, 5, 2, 3, 0, 4] {
        mps.move_center(c).unwrap();
        assert_eq!(mps.center(), Some(c));
    }
    assert!(max_vec_diff(&mps.to_dense().unwrap(), &v) < 1e-10);
}

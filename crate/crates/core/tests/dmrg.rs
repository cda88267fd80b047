use approx::assert_abs_diff_eq;
use hubsolve::dmrg::{
    noninteracting_ground_state, sector_product_state, solve_ground_state, solve_model,
    DmrgConfig, NumberPenalty,
};
use hubsolve::encode::{hamiltonian_mpo, QubitMap, QubitOrdering};
use hubsolve::model::{ExtendedHubbardModel, LatticeSpec};
use ndarray::arr2;

fn chain(l: usize, t: f64, u: f64, v: f64) -> ExtendedHubbardModel {
    ExtendedHubbardModel {
        name: format!("chain{l}"),
        lattice: LatticeSpec::new(l, 1).unwrap(),
        bands: 1,
        filling: vec![1.0],
        hop_intra: arr2(&[[t]]),
        hop_onsite: arr2(&[[0.0]]),
        u_onsite: arr2(&[[u]]),
        v_offsite: arr2(&[[v]]),
    }
}

fn ca_chain(l: usize) -> ExtendedHubbardModel {
    hubsolve::materials::ca2cuo3()
        .with_lattice(l, 1)
        .unwrap()
}

#[test]
fn dimer_matches_the_analytic_singlet_energy() {
    let model = ca_chain(2);
    let result = solve_model(&model, QubitOrdering::SpinInterleaved, &DmrgConfig::for_model(&model, 8))
        .unwrap();
    assert!(result.converged);
    assert!(result.penalty_ok());
    assert_abs_diff_eq!(result.energy, 0.581213934, epsilon = 1e-8);
    assert_abs_diff_eq!(result.n_expectation, 2.0, epsilon = 1e-6);
}

#[test]
fn short_chains_match_exact_diagonalization() {
    let expected = [
        (3, 1.292197421),
        (4, 1.904218191),
        (5, 2.632854716),
        (6, 3.269436374),
    ];
    for (l, e) in expected {
        let model = ca_chain(l);
        let result =
            solve_model(&model, QubitOrdering::SpinInterleaved, &DmrgConfig::for_model(&model, 64))
                .unwrap();
        assert!(result.converged, "L={l} unconverged");
        assert!(result.penalty_ok(), "L={l} out of sector");
        assert_abs_diff_eq!(result.energy, e, epsilon = 1e-7);
    }
}

#[test]
fn free_fermion_chain_fills_the_lowest_orbitals() {
    // Open 4-site chain, t=-1, two electrons: both occupy the bonding level
    // at 2t cos(pi/5).
    let mut model = chain(4, -1.0, 0.0, 0.0);
    model.filling = vec![0.5];
    let cfg = DmrgConfig::for_model(&model, 32);
    let result = solve_model(&model, QubitOrdering::SpinInterleaved, &cfg).unwrap();
    let expect = -4.0 * (std::f64::consts::PI / 5.0).cos();
    assert_abs_diff_eq!(result.energy, expect, epsilon = 1e-8);
    assert_abs_diff_eq!(result.n_expectation, 2.0, epsilon = 1e-6);
}

#[test]
fn noninteracting_dimer_pairs_in_the_bonding_orbital() {
    let model = ca_chain(2);
    let result =
        noninteracting_ground_state(&model, QubitOrdering::SpinInterleaved, 16).unwrap();
    assert_abs_diff_eq!(result.energy, 2.0 * -0.491, epsilon = 1e-8);
    assert_abs_diff_eq!(result.n_expectation, 2.0, epsilon = 1e-6);
}

#[test]
fn noninteracting_state_respects_per_band_fillings() {
    // SrVO3 1x2: two electrons confined to band 0 give 2 t_00; letting them
    // spread over the degenerate band 1 would give the same energy, but any
    // leakage into band occupations is a sector violation.
    let model = hubsolve::materials::srvo3()
        .with_lattice(2, 1)
        .unwrap();
    let result =
        noninteracting_ground_state(&model, QubitOrdering::SpinInterleaved, 32).unwrap();
    assert_abs_diff_eq!(result.energy, 2.0 * -0.263, epsilon = 1e-7);
    assert!(result.penalty_ok());
    let map = QubitMap::new(&model, QubitOrdering::SpinInterleaved);
    let densities = result.state.site_densities();
    let band0: f64 = (0..2)
        .flat_map(|site| {
            use hubsolve::model::Spin;
            [
                densities[map.qubit(site, 0, Spin::Up)],
                densities[map.qubit(site, 0, Spin::Down)],
            ]
        })
        .sum();
    assert_abs_diff_eq!(band0, 2.0, epsilon = 1e-5);
}

#[test]
fn noninteracting_wte2_carries_sixteen_electrons() {
    let model = hubsolve::materials::wte2()
        .with_lattice(1, 2)
        .unwrap();
    let result =
        noninteracting_ground_state(&model, QubitOrdering::SpinInterleaved, 32).unwrap();
    assert_abs_diff_eq!(result.n_expectation, 8.0, epsilon = 1e-5);
}

#[test]
fn zero_hopping_energy_is_the_filled_onsite_sum() {
    let mut model = chain(3, 0.0, 0.0, 0.0);
    model.hop_onsite = arr2(&[[-1.3]]);
    let result =
        noninteracting_ground_state(&model, QubitOrdering::SpinInterleaved, 8).unwrap();
    assert_abs_diff_eq!(result.energy, 3.0 * -1.3, epsilon = 1e-9);
}

#[test]
fn wte2_dimer_matches_the_sector_lanczos_energy() {
    let model = hubsolve::materials::wte2()
        .with_lattice(1, 2)
        .unwrap();
    let cfg = DmrgConfig::for_model(&model, 128);
    let result = solve_model(&model, QubitOrdering::SpinInterleaved, &cfg).unwrap();
    assert!(result.converged);
    assert!(result.penalty_ok());
    assert_abs_diff_eq!(result.energy, 20.897008900, epsilon = 2e-6);
}

#[test]
fn srvo3_2x2_reduction_ground_energy() {
    let model = hubsolve::materials::srvo3()
        .with_lattice(2, 2)
        .unwrap();
    let cfg = DmrgConfig::for_model(&model, 128);
    let result = solve_model(&model, QubitOrdering::SpinInterleaved, &cfg).unwrap();
    assert!(result.converged);
    assert!(result.penalty_ok());
    assert_abs_diff_eq!(result.energy, 1.962032264, epsilon = 5e-6);
}

#[test]
fn ca2cuo3_full_chain_reproduces_the_reference_energy() {
    let model = hubsolve::materials::ca2cuo3();
    let cfg = DmrgConfig::for_model(&model, 256);
    let result = solve_model(&model, QubitOrdering::SpinInterleaved, &cfg).unwrap();
    assert!(result.converged);
    assert!(result.penalty_ok());
    assert_abs_diff_eq!(result.energy, 6.005054926, epsilon = 1e-4);
    assert_abs_diff_eq!(result.n_expectation, 10.0, epsilon = 1e-5);
}

#[test]
fn monotone_energy_once_noise_is_off() {
    let model = ca_chain(5);
    let cfg = DmrgConfig::for_model(&model, 64);
    let result = solve_model(&model, QubitOrdering::SpinInterleaved, &cfg).unwrap();
    let noise_free: Vec<f64> = result
        .trace
        .iter()
        .filter(|r| r.noise == 0.0)
        .map(|r| r.energy)
        .collect();
    for pair in noise_free.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-9, "energy rose: {pair:?}");
    }
}

#[test]
fn variational_bound_against_product_states() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for trial in 0..3 {
        let t = rng.random_range(-1.0..-0.1);
        let u = rng.random_range(0.0..3.0);
        let v = rng.random_range(0.0..1.0);
        let model = chain(4, t, u, v);
        let map = QubitMap::new(&model, QubitOrdering::SpinInterleaved);
        let (_, mpo) = hamiltonian_mpo(&model, &map, 1e-14).unwrap();
        let cfg = DmrgConfig::for_model(&model, 32);
        let result = solve_model(&model, QubitOrdering::SpinInterleaved, &cfg).unwrap();
        let product = sector_product_state(&model, &map);
        let product_energy = product.expectation(&mpo).re;
        assert!(
            result.energy <= product_energy + 1e-9,
            "trial {trial}: {} > {}",
            result.energy,
            product_energy
        );
    }
}

#[test]
fn ordering_choice_does_not_move_the_energy() {
    let model = ca_chain(4);
    let a = solve_model(&model, QubitOrdering::SpinInterleaved, &DmrgConfig::for_model(&model, 64))
        .unwrap();
    let b = solve_model(&model, QubitOrdering::SpinBlocked, &DmrgConfig::for_model(&model, 64))
        .unwrap();
    assert_abs_diff_eq!(a.energy, b.energy, epsilon = 1e-7);
}

#[test]
fn solver_rejects_mismatched_inputs() {
    let model = ca_chain(2);
    let map = QubitMap::new(&model, QubitOrdering::SpinInterleaved);
    let (_, mpo) = hamiltonian_mpo(&model, &map, 1e-14).unwrap();
    let wrong = hubsolve::tensor::MatrixProductState::product_state(&[true, false], 4, 1e-12);
    let cfg = DmrgConfig::with_chi(8);
    assert!(solve_ground_state(&mpo, &cfg, &wrong).is_err());

    let mut bad = DmrgConfig::with_chi(8);
    bad.penalties.push(NumberPenalty::total(2.0, -1.0));
    let initial = sector_product_state(&model, &map);
    assert!(solve_ground_state(&mpo, &bad, &initial).is_err());
}

#[test]
fn sweep_trace_is_recorded() {
    let model = ca_chain(3);
    let result =
        solve_model(&model, QubitOrdering::SpinInterleaved, &DmrgConfig::for_model(&model, 32))
            .unwrap();
    assert!(!result.trace.is_empty());
    let last = result.trace.last().unwrap();
    assert_eq!(last.noise, 0.0);
    assert!(last.max_bond >= 1);
    assert!(result.trace.iter().all(|r| r.energy.is_finite()));
}

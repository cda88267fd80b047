use approx::assert_relative_eq;
use hubsolve::materials;
use hubsolve::model::{
    compression_ratio, count_full_terms, count_terms, ExtendedHubbardModel, LatticeSpec, TermKind,
};
use ndarray::arr2;

/// Two-site single-band toy chain: t = -0.5, U = 2.0, V = 0.5 eV.
fn toy_chain(nx: usize) -> ExtendedHubbardModel {
    let m = ExtendedHubbardModel {
        name: "toy".into(),
        lattice: LatticeSpec::new(nx, 1).unwrap(),
        bands: 1,
        filling: vec![1.0],
        hop_intra: arr2(&[[-0.5]]),
        hop_onsite: arr2(&[[0.0]]),
        u_onsite: arr2(&[[2.0]]),
        v_offsite: arr2(&[[0.5]]),
    };
    m.validate().unwrap();
    m
}

#[test]
fn bond_enumeration_matches_closed_form() {
    for (nx, ny, expect) in [(10, 1, 9), (2, 2, 4), (3, 3, 12), (1, 1, 0), (4, 3, 17)] {
        let lat = LatticeSpec::new(nx, ny).unwrap();
        assert_eq!(lat.n_bonds(), expect, "{nx}x{ny}");
        assert_eq!(lat.bonds().len(), expect, "{nx}x{ny}");
        for (a, b) in lat.bonds() {
            let (xa, ya) = lat.site_coords(a);
            let (xb, yb) = lat.site_coords(b);
            assert_eq!(xa.abs_diff(xb) + ya.abs_diff(yb), 1);
        }
    }
}

#[test]
fn chain_term_tally_with_and_without_potential_slots() {
    let dropped = count_terms(10, 1, 1, true);
    assert_eq!(dropped.hop_intra, 18);
    assert_eq!(dropped.hop_inter_onsite, 0);
    assert_eq!(dropped.onsite_potential, 0);
    assert_eq!(dropped.u_onsite, 10);
    assert_eq!(dropped.u_inter_onsite, 0);
    assert_eq!(dropped.v_offsite, 9);
    assert_eq!(dropped.total(), 37);
    assert_eq!(count_terms(10, 1, 1, false).total(), 57);
}

#[test]
fn four_band_square_term_tally() {
    let c = count_terms(2, 2, 4, false);
    assert_eq!(c.hop_intra, 32);
    assert_eq!(c.hop_inter_onsite, 96);
    assert_eq!(c.onsite_potential, 32);
    assert_eq!(c.u_onsite, 16);
    assert_eq!(c.u_inter_onsite, 48);
    assert_eq!(c.v_offsite, 64);
    assert_eq!(c.total(), 288);
}

#[test]
fn three_band_square_term_tally() {
    assert_eq!(count_terms(3, 3, 3, false).total(), 423);
    assert_eq!(count_terms(1, 1, 1, false).total(), 3);
}

#[test]
fn untruncated_counts() {
    assert_eq!(count_full_terms(10, 1, 1).unwrap(), 40_200);
    assert_eq!(count_full_terms(2, 2, 4).unwrap(), 262_656);
    assert_eq!(count_full_terms(3, 3, 3).unwrap(), 2_127_222);
    assert_eq!(count_full_terms(2, 2, 28).unwrap(), 629_432_832);
    assert_eq!(count_full_terms(1, 1, 1).unwrap(), 6);
    assert!(count_full_terms(1_000_000, 1_000_000, 1_000).is_err());
}

#[test]
fn compression_ratios() {
    assert_relative_eq!(
        compression_ratio(10, 1, 1, 1).unwrap(),
        57.0 / 40_200.0,
        max_relative = 1e-12
    );
    assert_relative_eq!(compression_ratio(1, 1, 1, 1).unwrap(), 0.5, max_relative = 1e-12);
    assert_relative_eq!(
        compression_ratio(2, 2, 4, 28).unwrap(),
        288.0 / 629_432_832.0,
        max_relative = 1e-12
    );
}

#[test]
fn expansion_length_matches_tally_for_bundled_models() {
    for model in [materials::ca2cuo3(), materials::wte2(), materials::srvo3()] {
        for drop in [false, true] {
            let list = model.expand_terms(drop);
            let counts = count_terms(model.lattice.nx, model.lattice.ny, model.bands, drop);
            assert_eq!(list.terms.len() as u64, counts.total(), "{}", model.name);
            assert_eq!(list.counts, counts);
        }
    }
}

#[test]
fn chain_expansion_coefficients() {
    let model = materials::ca2cuo3();
    assert!(model.drop_onsite_potential_default());
    let list = model.expand_terms(true);
    for t in &list.terms {
        match t.kind {
            TermKind::HopIntra => assert_eq!(t.coeff, -0.491),
            TermKind::UOnsite => assert_eq!(t.coeff, 3.578),
            TermKind::VOffsite => assert_eq!(t.coeff, 0.903),
            other => panic!("unexpected term kind {other:?}"),
        }
    }
}

#[test]
fn asymmetric_inputs_are_symmetrized_at_expansion() {
    let model = materials::wte2();
    assert!(!model.drop_onsite_potential_default());
    assert_relative_eq!(model.sym_v(0, 1), 0.5 * (0.822 + 0.754), max_relative = 1e-12);
    assert_relative_eq!(model.sym_onsite_hop(0, 1), 0.5 * (0.178 + 0.108), max_relative = 1e-12);
    assert_relative_eq!(model.sym_onsite_hop(0, 2), 0.0, max_relative = 1e-12);
    let list = model.expand_terms(false);
    let ucross = list
        .terms
        .iter()
        .find(|t| t.kind == TermKind::UInterOnsite && t.bands == (0, 1))
        .unwrap();
    assert_relative_eq!(ucross.coeff, 0.5 * 0.822, max_relative = 1e-12);
    // the mirror pair carries the same symmetrized on-site hopping
    let h01 = list
        .terms
        .iter()
        .find(|t| t.kind == TermKind::HopInterOnsite && t.bands == (0, 1))
        .unwrap();
    let h10 = list
        .terms
        .iter()
        .find(|t| t.kind == TermKind::HopInterOnsite && t.bands == (1, 0))
        .unwrap();
    assert_eq!(h01.coeff, h10.coeff);
}

#[test]
fn one_norm_values() {
    assert_relative_eq!(toy_chain(2).one_norm().unwrap(), 7.0, max_relative = 1e-12);
    assert_relative_eq!(
        materials::ca2cuo3().one_norm().unwrap(),
        70.98778004073321,
        max_relative = 1e-10
    );
    assert_relative_eq!(
        materials::wte2().one_norm().unwrap(),
        227.8036175710594,
        max_relative = 1e-10
    );
    assert_relative_eq!(
        materials::srvo3().one_norm().unwrap(),
        713.5722433460076,
        max_relative = 1e-10
    );
}

#[test]
fn one_norm_requires_a_hopping_scale() {
    let mut m = toy_chain(2);
    m.hop_intra.fill(0.0);
    assert!(m.one_norm().is_err());
}

#[test]
fn bundled_models_load_and_validate() {
    let ca = materials::ca2cuo3();
    assert_eq!((ca.lattice.nx, ca.lattice.ny, ca.bands), (10, 1, 1));
    assert_eq!(ca.n_electrons(), 10);
    assert_eq!(ca.n_spin_orbitals(), 20);

    let w = materials::wte2();
    assert_eq!((w.lattice.nx, w.lattice.ny, w.bands), (2, 2, 4));
    assert_eq!(w.n_electrons(), 16);
    assert_eq!(w.n_spin_orbitals(), 32);

    let s = materials::srvo3();
    assert_eq!((s.lattice.nx, s.lattice.ny, s.bands), (3, 3, 3));
    assert_eq!(s.n_electrons(), 9);
    assert_eq!(s.n_spin_orbitals(), 54);

    assert!(materials::by_name("WTe2").is_some());
    assert!(materials::by_name("unobtainium").is_none());
}

#[test]
fn lattice_override_and_noninteracting_copies() {
    let small = materials::wte2().with_lattice(1, 1).unwrap();
    assert_eq!(small.n_electrons(), 4);
    assert_eq!(small.n_spin_orbitals(), 8);
    assert_eq!(small.expand_terms(false).terms.len() as u64, count_terms(1, 1, 4, false).total());

    let free = materials::srvo3().noninteracting();
    assert!(free.u_onsite.iter().all(|&v| v == 0.0));
    assert!(free.v_offsite.iter().all(|&v| v == 0.0));
    assert_eq!(free.hop_intra, materials::srvo3().hop_intra);
}

#[test]
fn loader_rejects_malformed_documents() {
    assert!(ExtendedHubbardModel::load("/nonexistent/path.toml").is_err());
    assert!(ExtendedHubbardModel::from_toml_str("not toml at all [").is_err());

    let unknown_field = materials::CA2CUO3_TOML.replace("name =", "nmae =");
    assert!(ExtendedHubbardModel::from_toml_str(&unknown_field).is_err());

    let nonsquare = materials::CA2CUO3_TOML.replace("[[-0.491]]", "[[-0.491, 0.1]]");
    assert!(ExtendedHubbardModel::from_toml_str(&nonsquare).is_err());

    let bad_filling = materials::CA2CUO3_TOML.replace("filling = [1]", "filling = [1, 1]");
    assert!(ExtendedHubbardModel::from_toml_str(&bad_filling).is_err());

    let overfilled = materials::CA2CUO3_TOML.replace("filling = [1]", "filling = [2.5]");
    assert!(ExtendedHubbardModel::from_toml_str(&overfilled).is_err());

    let fractional = materials::CA2CUO3_TOML.replace("nx = 10", "nx = 3");
    let fractional = fractional.replace("filling = [1]", "filling = [0.5]");
    assert!(ExtendedHubbardModel::from_toml_str(&fractional).is_err());
}

#[test]
fn count_identity_sweep_small_grid() {
    for nx in 1..=6 {
        for ny in 1..=6 {
            for nb in 1..=5 {
                let model = ExtendedHubbardModel {
                    name: "sweep".into(),
                    lattice: LatticeSpec::new(nx, ny).unwrap(),
                    bands: nb,
                    filling: vec![0.0; nb],
                    hop_intra: ndarray::Array2::eye(nb),
                    hop_onsite: ndarray::Array2::zeros((nb, nb)),
                    u_onsite: ndarray::Array2::eye(nb),
                    v_offsite: ndarray::Array2::eye(nb),
                };
                for drop in [false, true] {
                    assert_eq!(
                        model.expand_terms(drop).terms.len() as u64,
                        count_terms(nx, ny, nb, drop).total(),
                        "nx={nx} ny={ny} nb={nb} drop={drop}"
                    );
                }
            }
        }
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
    // Coupling matrices enter only through their symmetric parts, so feeding
    // the transposed matrices must give term-for-term identical expansions.
    #[test]
    fn expansion_is_blind_to_parameter_matrix_orientation(
        t1 in -1.5f64..1.5,
        t2 in -1.5f64..1.5,
        e01 in -1.0f64..1.0,
        e10 in -1.0f64..1.0,
        u01 in 0.0f64..3.0,
        u10 in 0.0f64..3.0,
        v01 in 0.0f64..1.0,
        v10 in 0.0f64..1.0,
        nx in 2usize..5,
    ) {
        let build = |hop_onsite: [[f64; 2]; 2], u: [[f64; 2]; 2], v: [[f64; 2]; 2]| {
            let m = ExtendedHubbardModel {
                name: "skew".into(),
                lattice: LatticeSpec::new(nx, 1).unwrap(),
                bands: 2,
                filling: vec![1.0, 0.0],
                hop_intra: arr2(&[[t1, 0.0], [0.0, t2]]),
                hop_onsite: arr2(&hop_onsite),
                u_onsite: arr2(&u),
                v_offsite: arr2(&v),
            };
            m.validate().unwrap();
            m
        };
        let straight = build(
            [[0.0, e01], [e10, 0.0]],
            [[2.0, u01], [u10, 2.0]],
            [[0.4, v01], [v10, 0.4]],
        );
        let flipped = build(
            [[0.0, e10], [e01, 0.0]],
            [[2.0, u10], [u01, 2.0]],
            [[0.4, v10], [v01, 0.4]],
        );
        for drop in [false, true] {
            proptest::prop_assert_eq!(
                straight.expand_terms(drop).terms,
                flipped.expand_terms(drop).terms
            );
        }
        if t1 != 0.0 || t2 != 0.0 {
            proptest::prop_assert_eq!(
                straight.one_norm().unwrap(),
                flipped.one_norm().unwrap()
            );
        }
    }
}

//! Bundled parameter sets for the three studied materials, plus the published
//! study configurations used by reproduction runs.

use serde::Serialize;

use crate::model::ExtendedHubbardModel;
use crate::vqe::AnsatzKind;

pub const CA2CUO3_TOML: &str = include_str!("../data/ca2cuo3.toml");
pub const WTE2_TOML: &str = include_str!("../data/wte2.toml");
pub const SRVO3_TOML: &str = include_str!("../data/srvo3.toml");

/// Quasi-1D cuprate chain, one band, 10 x 1 sites at half filling.
pub fn ca2cuo3() -> ExtendedHubbardModel {
    ExtendedHubbardModel::from_toml_str(CA2CUO3_TOML).expect("bundled model parses")
}

/// Monolayer WTe2, four bands, 2 x 2 sites, band insulator filling.
pub fn wte2() -> ExtendedHubbardModel {
    ExtendedHubbardModel::from_toml_str(WTE2_TOML).expect("bundled model parses")
}

/// SrVO3 t2g manifold, three bands, 3 x 3 sites, one electron per site.
pub fn srvo3() -> ExtendedHubbardModel {
    ExtendedHubbardModel::from_toml_str(SRVO3_TOML).expect("bundled model parses")
}

pub fn names() -> [&'static str; 3] {
    ["ca2cuo3", "wte2", "srvo3"]
}

/// Looks up a bundled material by case-insensitive name.
pub fn by_name(name: &str) -> Option<ExtendedHubbardModel> {
    match name.to_ascii_lowercase().as_str() {
        "ca2cuo3" => Some(ca2cuo3()),
        "wte2" => Some(wte2()),
        "srvo3" => Some(srvo3()),
        _ => None,
    }
}

/// Published run configuration and headline results for one material, used
/// to pick defaults and to label reproduction output. Energies in eV.
#[derive(Clone, Debug, Serialize)]
pub struct ReferenceStudy {
    pub name: &'static str,
    pub ansatz: AnsatzKind,
    pub layers: usize,
    /// Two-qubit gate count the circuit-fidelity figures derive from.
    pub two_qubit_gates: usize,
    /// Conflicting alternative count printed in the same source; kept for
    /// the footnote, not used in checks.
    pub alt_two_qubit_gates: Option<usize>,
    pub n_params: usize,
    pub dmrg_energy: f64,
    pub vqe_energy: f64,
    /// Overlap-squared of the best variational state with the DMRG state,
    /// where reported.
    pub vqe_fidelity: Option<f64>,
    pub ei_delta_dmrg: Option<f64>,
    pub ei_delta_vqe: Option<f64>,
    pub phi_dmrg: Option<f64>,
    pub phi_vqe: Option<f64>,
    pub gate_fidelity: f64,
    pub epsilon: f64,
}

/// Published study settings by material name, case-insensitive.
pub fn reference_study(name: &str) -> Option<ReferenceStudy> {
    match name.to_ascii_lowercase().as_str() {
        "ca2cuo3" => Some(ReferenceStudy {
            name: "ca2cuo3",
            ansatz: AnsatzKind::Np,
            layers: 10,
            two_qubit_gates: 290,
            alt_two_qubit_gates: None,
            n_params: 580,
            dmrg_energy: 6.005,
            vqe_energy: 6.028,
            vqe_fidelity: Some(0.993),
            ei_delta_dmrg: None,
            ei_delta_vqe: None,
            phi_dmrg: None,
            phi_vqe: None,
            gate_fidelity: 0.999,
            epsilon: 1e-3,
        }),
        "wte2" => Some(ReferenceStudy {
            name: "wte2",
            ansatz: AnsatzKind::Ep,
            layers: 20,
            two_qubit_gates: 652,
            alt_two_qubit_gates: None,
            n_params: 1304,
            dmrg_energy: 115.029,
            vqe_energy: 115.097,
            vqe_fidelity: None,
            ei_delta_dmrg: Some(0.640),
            ei_delta_vqe: Some(0.379),
            phi_dmrg: None,
            phi_vqe: None,
            gate_fidelity: 0.999,
            epsilon: 1e-3,
        }),
        "srvo3" => Some(ReferenceStudy {
            name: "srvo3",
            ansatz: AnsatzKind::Ep,
            layers: 10,
            // The table prints 484; the text's 584 (= n_params/2) is the
            // count consistent with the 55.8% fidelity figure.
            two_qubit_gates: 584,
            alt_two_qubit_gates: Some(484),
            n_params: 1168,
            dmrg_energy: -105.383,
            vqe_energy: -105.365,
            vqe_fidelity: None,
            ei_delta_dmrg: None,
            ei_delta_vqe: None,
            phi_dmrg: Some(0.12),
            phi_vqe: Some(0.21),
            gate_fidelity: 0.999,
            epsilon: 1e-3,
        }),
        _ => None,
    }
}

//! Physical diagnostics over ground states: connected spin correlations,
//! band occupations, the excitonic order parameter and the checkerboard
//! charge imbalance.
//!
//! Everything is written against the [`QuantumState`] trait so exact-sector
//! vectors and MPS results feed the same code paths; an MPS state with 12
//! qubits or fewer must reproduce the exact-vector numbers to 1e-8.

use ndarray::{arr2, Array2};
use num_complex::Complex64;
use serde::Serialize;

use crate::ed::EdSolution;
use crate::encode::QubitMap;
use crate::model::{ExtendedHubbardModel, Spin};
use crate::tensor::{self, MatrixProductState};
use crate::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Uniform expectation interface over exact vectors and MPS states. All
/// values are normalized by `<psi|psi>`, so unnormalized states are fine.
pub trait QuantumState {
    fn n_qubits(&self) -> usize;
    /// `<n_q>`.
    fn density(&self, q: usize) -> Result<f64>;
    /// `<n_p n_q>`; `p == q` collapses to the density.
    fn density_corr(&self, p: usize, q: usize) -> Result<f64>;
    /// `<c+_p c_q>` with the Jordan-Wigner Z-string between the modes.
    fn coherence(&self, p: usize, q: usize) -> Result<Complex64>;
    /// `<n_q>` for every qubit.
    fn densities(&self) -> Result<Vec<f64>> {
        (0..self.n_qubits()).map(|q| self.density(q)).collect()
    }
}

fn check_qubit(n: usize, q: usize) -> Result<()> {
    if q >= n {
        return Err(Error::invalid(format!("qubit {q} out of range for {n}-qubit state")));
    }
    Ok(())
}

impl QuantumState for EdSolution {
    fn n_qubits(&self) -> usize {
        self.basis.n_qubits
    }

    fn density(&self, q: usize) -> Result<f64> {
        check_qubit(self.basis.n_qubits, q)?;
        Ok(EdSolution::density(self, q))
    }

    fn density_corr(&self, p: usize, q: usize) -> Result<f64> {
        check_qubit(self.basis.n_qubits, p)?;
        check_qubit(self.basis.n_qubits, q)?;
        Ok(EdSolution::density_corr(self, p, q))
    }

    fn coherence(&self, p: usize, q: usize) -> Result<Complex64> {
        check_qubit(self.basis.n_qubits, p)?;
        check_qubit(self.basis.n_qubits, q)?;
        Ok(Complex64::new(EdSolution::coherence(self, p, q), 0.0))
    }
}

impl QuantumState for MatrixProductState {
    fn n_qubits(&self) -> usize {
        self.n_sites()
    }

    fn density(&self, q: usize) -> Result<f64> {
        check_qubit(self.n_sites(), q)?;
        let val = self.site_densities()[q];
        if !val.is_finite() {
            return Err(Error::numerics("densities on a zero-norm state"));
        }
        Ok(val)
    }

    fn density_corr(&self, p: usize, q: usize) -> Result<f64> {
        check_qubit(self.n_sites(), p)?;
        check_qubit(self.n_sites(), q)?;
        if p == q {
            return self.density(p);
        }
        let n_op = arr2(&[[ZERO, ZERO], [ZERO, ONE]]);
        let ops = [(p.min(q), n_op.clone()), (p.max(q), n_op)];
        normalized(self, tensor::sandwich(self, self, &ops, None)).map(|v| v.re)
    }

    fn coherence(&self, p: usize, q: usize) -> Result<Complex64> {
        check_qubit(self.n_sites(), p)?;
        check_qubit(self.n_sites(), q)?;
        if p == q {
            return Ok(Complex64::new(self.density(p)?, 0.0));
        }
        if p > q {
            return Ok(self.coherence(q, p)?.conj());
        }
        // For p < q the string form is |1><0|_p (x) Z ... Z (x) |0><1|_q.
        let mut ops: Vec<(usize, Array2<Complex64>)> = Vec::with_capacity(q - p + 1);
        ops.push((p, arr2(&[[ZERO, ZERO], [ONE, ZERO]])));
        for k in p + 1..q {
            ops.push((k, arr2(&[[ONE, ZERO], [ZERO, -ONE]])));
        }
        ops.push((q, arr2(&[[ZERO, ONE], [ZERO, ZERO]])));
        normalized(self, tensor::sandwich(self, self, &ops, None))
    }

    fn densities(&self) -> Result<Vec<f64>> {
        let out = self.site_densities();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerics("densities on a zero-norm state"));
        }
        Ok(out)
    }
}

fn normalized(state: &MatrixProductState, raw: Complex64) -> Result<Complex64> {
    let norm_sq = tensor::sandwich(state, state, &[], None).re;
    if !norm_sq.is_finite() || norm_sq <= 0.0 {
        return Err(Error::numerics("expectation on a zero-norm state"));
    }
    Ok(raw / norm_sq)
}

fn check_state<S: QuantumState>(state: &S, map: &QubitMap) -> Result<()> {
    if state.n_qubits() != map.n_qubits() {
        return Err(Error::invalid(format!(
            "state has {} qubits but the map expects {}",
            state.n_qubits(),
            map.n_qubits()
        )));
    }
    Ok(())
}

/// Connected `<S^z_i S^z_j> - <S^z_i><S^z_j>` in band 0.
pub fn spin_correlation<S: QuantumState>(
    state: &S,
    map: &QubitMap,
    i: usize,
    j: usize,
) -> Result<f64> {
    spin_correlation_in_band(state, map, 0, i, j)
}

/// Connected spin correlator with S^z = (n_up - n_down)/2 in one band.
/// Symmetric in `(i, j)` by construction.
pub fn spin_correlation_in_band<S: QuantumState>(
    state: &S,
    map: &QubitMap,
    band: usize,
    i: usize,
    j: usize,
) -> Result<f64> {
    let n_sites = map.nx * map.ny;
    if i >= n_sites || j >= n_sites {
        return Err(Error::invalid(format!(
            "site pair ({i}, {j}) out of range for {n_sites} sites"
        )));
    }
    if band >= map.bands {
        return Err(Error::invalid(format!("band {band} out of range for {} bands", map.bands)));
    }
    check_state(state, map)?;
    let ui = map.qubit(i, band, Spin::Up);
    let di = map.qubit(i, band, Spin::Down);
    let uj = map.qubit(j, band, Spin::Up);
    let dj = map.qubit(j, band, Spin::Down);
    let raw = 0.25
        * (state.density_corr(ui, uj)? - state.density_corr(ui, dj)?
            - state.density_corr(di, uj)?
            + state.density_corr(di, dj)?);
    let sz_i = 0.5 * (state.density(ui)? - state.density(di)?);
    let sz_j = 0.5 * (state.density(uj)? - state.density(dj)?);
    Ok(raw - sz_i * sz_j)
}

/// Electron counts resolved by band and spin, with the deviation from the
/// reference filling. `delta_n_el` is reference minus measured; plots of the
/// band-insulator comparison usually show its negative.
#[derive(Clone, Debug, Serialize)]
pub struct BandOccupations {
    /// `[band][spin]` electron counts summed over sites (spin up first).
    pub per_spin: Vec<[f64; 2]>,
    /// Per-band totals over both spins.
    pub total: Vec<f64>,
    /// Reference electron count per band from the model filling.
    pub reference: Vec<f64>,
    /// Reference minus measured, per band.
    pub delta_n_el: Vec<f64>,
}

pub fn band_occupations<S: QuantumState>(
    state: &S,
    model: &ExtendedHubbardModel,
    map: &QubitMap,
) -> Result<BandOccupations> {
    model.validate()?;
    if map.n_qubits() != model.n_spin_orbitals() {
        return Err(Error::invalid("qubit map does not match the model"));
    }
    check_state(state, map)?;
    let dens = state.densities()?;
    let n_sites = model.n_sites();
    let mut per_spin = vec![[0.0; 2]; model.bands];
    for band in 0..model.bands {
        for site in 0..n_sites {
            for spin in Spin::BOTH {
                per_spin[band][spin.index()] += dens[map.qubit(site, band, spin)];
            }
        }
    }
    let total: Vec<f64> = per_spin.iter().map(|s| s[0] + s[1]).collect();
    let reference: Vec<f64> = model.filling.iter().map(|f| f * n_sites as f64).collect();
    let delta_n_el = reference.iter().zip(&total).map(|(r, m)| r - m).collect();
    Ok(BandOccupations { per_spin, total, reference, delta_n_el })
}

/// Valence/conduction partition of the band indices.
#[derive(Clone, Debug, Serialize)]
pub struct BandSplit {
    pub valence: Vec<usize>,
    pub conduction: Vec<usize>,
}

impl BandSplit {
    pub fn new(valence: Vec<usize>, conduction: Vec<usize>) -> Self {
        BandSplit { valence, conduction }
    }

    pub fn validate(&self, bands: usize) -> Result<()> {
        if self.valence.is_empty() || self.conduction.is_empty() {
            return Err(Error::invalid("band split needs at least one band on each side"));
        }
        for &b in self.valence.iter().chain(&self.conduction) {
            if b >= bands {
                return Err(Error::invalid(format!("band {b} out of range for {bands} bands")));
            }
        }
        if self.valence.iter().any(|b| self.conduction.contains(b)) {
            return Err(Error::invalid("valence and conduction sets overlap"));
        }
        Ok(())
    }
}

/// Splits the bands in half by single-particle on-site energy, lower half
/// valence. Ties (a recorded zero on-site diagonal) fall back to the
/// intra-band hopping amplitude, then the band index.
pub fn default_band_split(model: &ExtendedHubbardModel) -> Result<BandSplit> {
    if model.bands < 2 {
        return Err(Error::invalid("band split needs at least two bands"));
    }
    let mut order: Vec<usize> = (0..model.bands).collect();
    order.sort_by(|&a, &b| {
        let ka = (model.onsite_energy(a), model.hop_intra[(a, a)], a);
        let kb = (model.onsite_energy(b), model.hop_intra[(b, b)], b);
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let half = model.bands / 2;
    let mut valence = order[..half].to_vec();
    let mut conduction = order[half..].to_vec();
    valence.sort_unstable();
    conduction.sort_unstable();
    Ok(BandSplit { valence, conduction })
}

/// Which on-site inter-orbital repulsion entries average into U'.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UPrimeAverage {
    /// Mean of u_onsite over valence x conduction pairs.
    VcPairs,
    /// Mean over every off-diagonal u_onsite entry.
    AllOffDiagonal,
}

/// Average on-site inter-orbital repulsion for the given partition.
pub fn u_prime(
    model: &ExtendedHubbardModel,
    split: &BandSplit,
    average: UPrimeAverage,
) -> Result<f64> {
    split.validate(model.bands)?;
    match average {
        UPrimeAverage::VcPairs => {
            let mut acc = 0.0;
            for &v in &split.valence {
                for &c in &split.conduction {
                    acc += model.sym_u(v, c);
                }
            }
            Ok(acc / (split.valence.len() * split.conduction.len()) as f64)
        }
        UPrimeAverage::AllOffDiagonal => {
            let nb = model.bands;
            let mut acc = 0.0;
            for i in 0..nb {
                for j in 0..nb {
                    if i != j {
                        acc += model.u_onsite[(i, j)];
                    }
                }
            }
            Ok(acc / (nb * (nb - 1)) as f64)
        }
    }
}

/// Excitonic order parameter: U'/(Nx*Ny) times the magnitude of the summed
/// same-site, same-spin conduction-valence coherence. Reported as a
/// magnitude because the coherence sum carries an arbitrary global phase
/// under gauge transformations of the state.
pub fn ei_order_parameter<S: QuantumState>(
    state: &S,
    model: &ExtendedHubbardModel,
    map: &QubitMap,
    split: &BandSplit,
    average: UPrimeAverage,
) -> Result<f64> {
    split.validate(model.bands)?;
    check_state(state, map)?;
    if map.n_qubits() != model.n_spin_orbitals() {
        return Err(Error::invalid("qubit map does not match the model"));
    }
    let mut sum = ZERO;
    for site in 0..model.n_sites() {
        for spin in Spin::BOTH {
            for &c in &split.conduction {
                for &v in &split.valence {
                    sum += state.coherence(map.qubit(site, c, spin), map.qubit(site, v, spin))?;
                }
            }
        }
    }
    let scale = u_prime(model, split, average)?
        / (model.lattice.nx * model.lattice.ny) as f64;
    Ok(scale * sum.norm())
}

/// Checkerboard charge imbalance `|sum_A - sum_B| / (Nx*Ny)` with sublattice
/// A at `(x + y) % 2 == 0`. Applied verbatim on odd lattices, where the
/// sublattices have unequal sizes; no size compensation.
pub fn charge_disproportionation<S: QuantumState>(
    state: &S,
    model: &ExtendedHubbardModel,
    map: &QubitMap,
) -> Result<f64> {
    if model.lattice.nx < 2 || model.lattice.ny < 2 {
        return Err(Error::invalid("charge disproportionation needs a 2D lattice"));
    }
    if map.n_qubits() != model.n_spin_orbitals() {
        return Err(Error::invalid("qubit map does not match the model"));
    }
    check_state(state, map)?;
    let dens = state.densities()?;
    let mut acc = [0.0; 2];
    for site in 0..model.n_sites() {
        let (x, y) = model.lattice.site_coords(site);
        for band in 0..model.bands {
            for spin in Spin::BOTH {
                acc[(x + y) % 2] += dens[map.qubit(site, band, spin)];
            }
        }
    }
    Ok((acc[0] - acc[1]).abs() / (model.lattice.nx * model.lattice.ny) as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpinCorrelation {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Bundle of every diagnostic that applies to the model at hand.
#[derive(Clone, Debug, Serialize)]
pub struct ObservableReport {
    /// Connected band-0 spin correlations against the first site.
    pub spin_correlations: Vec<SpinCorrelation>,
    pub occupations: BandOccupations,
    /// Excitonic order parameter; multi-band models only.
    pub ei_delta: Option<f64>,
    /// The U' that scaled `ei_delta`.
    pub u_prime: Option<f64>,
    /// Checkerboard charge imbalance; 2D lattices only.
    pub phi: Option<f64>,
}

pub fn report<S: QuantumState>(
    state: &S,
    model: &ExtendedHubbardModel,
    map: &QubitMap,
) -> Result<ObservableReport> {
    let occupations = band_occupations(state, model, map)?;
    let mut spin_correlations = Vec::with_capacity(model.n_sites());
    for j in 0..model.n_sites() {
        spin_correlations.push(SpinCorrelation {
            i: 0,
            j,
            value: spin_correlation(state, map, 0, j)?,
        });
    }
    let (ei_delta, u_p) = if model.bands >= 2 {
        let split = default_band_split(model)?;
        (
            Some(ei_order_parameter(state, model, map, &split, UPrimeAverage::VcPairs)?),
            Some(u_prime(model, &split, UPrimeAverage::VcPairs)?),
        )
    } else {
        (None, None)
    };
    let phi = if model.lattice.nx >= 2 && model.lattice.ny >= 2 {
        Some(charge_disproportionation(state, model, map)?)
    } else {
        None
    };
    Ok(ObservableReport { spin_correlations, occupations, ei_delta, u_prime: u_p, phi })
}

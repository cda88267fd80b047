//! Two-site DMRG ground-state solver.
//!
//! The solver sweeps a matrix product state through the chain, at each step
//! minimizing the energy of the two-site block with a Lanczos solve against
//! cached environment tensors. Particle-number sectors are controlled with
//! quadratic penalty operators added to the Hamiltonian MPO, since the
//! tensors carry no symmetry blocks.

use crate::encode::{hamiltonian_mpo, number_penalty_mpo, MatrixProductOperator, QubitMap, QubitOrdering};
use crate::linalg::{self, LanczosOptions};
use crate::model::{ExtendedHubbardModel, Spin};
use crate::tensor::{contract_env_left, contract_env_right, MatrixProductState};
use crate::{Error, Result};
use ndarray::{Array1, Array3, Array4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

/// Pins `sum_q <n_q>` over a qubit subset to `target` via `weight (N - target)^2`.
#[derive(Clone, Debug)]
pub struct NumberPenalty {
    /// Qubits whose occupation total is pinned; `None` means all of them.
    pub qubits: Option<Vec<usize>>,
    pub target: f64,
    pub weight: f64,
}

impl NumberPenalty {
    pub fn total(target: f64, weight: f64) -> Self {
        NumberPenalty { qubits: None, target, weight }
    }

    pub fn on(qubits: Vec<usize>, target: f64, weight: f64) -> Self {
        NumberPenalty { qubits: Some(qubits), target, weight }
    }
}

#[derive(Clone, Debug)]
pub struct DmrgConfig {
    pub max_sweeps: usize,
    /// Bond-dimension cap per sweep; the last entry repeats.
    pub chi_schedule: Vec<usize>,
    /// Sweep-to-sweep energy change below which the run stops (eV).
    pub energy_convergence: f64,
    /// Perturbation magnitude per sweep; exhausted entries count as zero.
    /// Convergence is only declared on noise-free sweeps.
    pub noise_schedule: Vec<f64>,
    pub svd_cutoff: f64,
    pub penalties: Vec<NumberPenalty>,
    pub seed: u64,
    /// Krylov subspace cap for the local two-site eigensolve.
    pub lanczos_subspace: usize,
}

impl DmrgConfig {
    /// Defaults with a bond ramp 32 -> 64 -> ... -> `chi_max`, two sweeps per
    /// step, and a decaying noise schedule. No penalties.
    pub fn with_chi(chi_max: usize) -> Self {
        DmrgConfig {
            max_sweeps: 50,
            chi_schedule: chi_ramp(chi_max),
            energy_convergence: 1e-8,
            noise_schedule: vec![1e-4, 1e-4, 1e-5, 1e-5, 1e-6, 1e-6],
            svd_cutoff: 1e-12,
            penalties: Vec::new(),
            seed: 7,
            lanczos_subspace: 24,
        }
    }

    /// Defaults plus a total particle-number penalty at the model's electron
    /// count, weighted by [`default_penalty_weight`].
    pub fn for_model(model: &ExtendedHubbardModel, chi_max: usize) -> Self {
        let mut cfg = Self::with_chi(chi_max);
        cfg.penalties.push(NumberPenalty::total(
            model.n_electrons() as f64,
            default_penalty_weight(model),
        ));
        cfg
    }
}

/// 10x the largest interaction magnitude, falling back to the hopping scale
/// (with a floor of 1 eV) so that noninteracting models still get a usable
/// sector penalty.
pub fn default_penalty_weight(model: &ExtendedHubbardModel) -> f64 {
    let u = model
        .u_onsite
        .iter()
        .chain(model.v_offsite.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    let t = model
        .hop_intra
        .iter()
        .chain(model.hop_onsite.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    10.0 * u.max(t).max(0.1)
}

fn chi_ramp(chi_max: usize) -> Vec<usize> {
    let cap = chi_max.max(2);
    let mut out = Vec::new();
    let mut chi = 32.min(cap);
    loop {
        out.push(chi);
        out.push(chi);
        if chi >= cap {
            break;
        }
        chi = (chi * 2).min(cap);
    }
    out
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SweepRecord {
    pub sweep: usize,
    /// Lowest local eigenvalue seen at the end of the sweep, including any
    /// penalty contributions.
    pub energy: f64,
    pub max_bond: usize,
    /// Truncation weight discarded during this sweep.
    pub truncation: f64,
    pub noise: f64,
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    /// `<H>` of the final state against the physical operator, penalties
    /// excluded.
    pub energy: f64,
    pub state: MatrixProductState,
    pub trace: Vec<SweepRecord>,
    pub converged: bool,
    pub n_expectation: f64,
    /// `<sum_p weight (N_p - target)^2>` of the final state, in eV.
    pub penalty_expectation: f64,
}

impl DmrgResult {
    /// Whether the state landed in the requested particle-number sector.
    pub fn penalty_ok(&self) -> bool {
        self.penalty_expectation.abs() < 1e-6
    }
}

/// Ground-state search for `mpo` starting from `initial`.
pub fn solve_ground_state(
    mpo: &MatrixProductOperator,
    config: &DmrgConfig,
    initial: &MatrixProductState,
) -> Result<DmrgResult> {
    let n = mpo.n_sites();
    if initial.n_sites() != n {
        return Err(Error::invalid(format!(
            "operator has {n} sites, state has {}",
            initial.n_sites()
        )));
    }
    if n < 2 {
        return Err(Error::Unsupported("two-site DMRG needs at least two qubits".into()));
    }
    if config.chi_schedule.is_empty() {
        return Err(Error::invalid("empty chi schedule"));
    }

    let mut combined = mpo.clone();
    for p in &config.penalties {
        if p.weight < 0.0 {
            return Err(Error::invalid("penalty weight must be nonnegative"));
        }
        if p.weight == 0.0 {
            continue;
        }
        let qubits: Vec<usize> = match &p.qubits {
            Some(qs) => qs.clone(),
            None => (0..n).collect(),
        };
        let mut pen = number_penalty_mpo(n, &qubits, p.target);
        pen.scale(p.weight);
        combined = combined.direct_sum(&pen);
    }
    combined.compress(1e-14)?;

    let mut state = initial.clone();
    state.normalize();
    state.move_center(0)?;

    // Environment caches: left[i] covers sites < i, right[i] covers >= i.
    // Entries are dropped as soon as a pass invalidates them to keep the
    // footprint at roughly one chain's worth of tensors.
    let boundary = || {
        let mut e = Array3::<Complex64>::zeros((1, 1, 1));
        e[(0, 0, 0)] = Complex64::new(1.0, 0.0);
        e
    };
    let mut left: Vec<Option<Array3<Complex64>>> = vec![None; n + 1];
    let mut right: Vec<Option<Array3<Complex64>>> = vec![None; n + 1];
    left[0] = Some(boundary());
    right[n] = Some(boundary());
    for i in (1..n).rev() {
        let env = contract_env_right(
            right[i + 1].as_ref().expect("built above"),
            &state.tensors()[i],
            &state.tensors()[i],
            combined.tensor(i),
        );
        right[i] = Some(env);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ramp_len = config.chi_schedule.len();
    let mut trace: Vec<SweepRecord> = Vec::new();
    let mut converged = false;
    let mut prev_energy = f64::INFINITY;

    for sweep in 0..config.max_sweeps {
        let chi = config.chi_schedule[sweep.min(ramp_len - 1)];
        let noise = config.noise_schedule.get(sweep).copied().unwrap_or(0.0);
        let ramping = sweep + 1 < ramp_len;
        let opts = LanczosOptions {
            max_subspace: if ramping {
                config.lanczos_subspace.min(16)
            } else {
                config.lanczos_subspace
            },
            max_restarts: 2,
            tol: if ramping { 1e-7 } else { (config.energy_convergence * 1e-2).max(1e-11) },
        };
        let dw_start = state.discarded_weight();
        let mut sweep_energy = f64::INFINITY;

        // Left-to-right pass.
        for i in 0..n - 1 {
            let e = local_update(
                &mut state,
                &combined,
                &mut left,
                &mut right,
                i,
                true,
                chi,
                config.svd_cutoff,
                noise,
                &mut rng,
                &opts,
            )?;
            sweep_energy = e;
        }
        // Right-to-left pass.
        for i in (0..n - 1).rev() {
            let e = local_update(
                &mut state,
                &combined,
                &mut left,
                &mut right,
                i,
                false,
                chi,
                config.svd_cutoff,
                noise,
                &mut rng,
                &opts,
            )?;
            sweep_energy = e;
        }

        trace.push(SweepRecord {
            sweep,
            energy: sweep_energy,
            max_bond: state.max_bond(),
            truncation: state.discarded_weight() - dw_start,
            noise,
        });

        let settled = !ramping && noise == 0.0;
        if settled && (prev_energy - sweep_energy).abs() < config.energy_convergence {
            converged = true;
            break;
        }
        prev_energy = sweep_energy;
    }

    state.normalize();
    let energy = state.expectation(mpo).re;
    let total = state.expectation(&combined).re;
    let densities = state.site_densities();
    Ok(DmrgResult {
        energy,
        state,
        trace,
        converged,
        n_expectation: densities.iter().sum(),
        penalty_expectation: total - energy,
    })
}

/// One two-site optimization at pair `(i, i+1)`, moving the center right or
/// left afterwards and refreshing the environment caches.
#[allow(clippy::too_many_arguments)]
fn local_update(
    state: &mut MatrixProductState,
    op: &MatrixProductOperator,
    left: &mut [Option<Array3<Complex64>>],
    right: &mut [Option<Array3<Complex64>>],
    i: usize,
    moving_right: bool,
    chi: usize,
    cutoff: f64,
    noise: f64,
    rng: &mut ChaCha8Rng,
    opts: &LanczosOptions,
) -> Result<f64> {
    let theta = state.merge_pair(i);
    let (l, r) = (theta.shape()[0], theta.shape()[3]);
    let flat = theta.into_shape_with_order(l * 4 * r).expect("size");

    let lenv = left[i].as_ref().expect("left env present");
    let renv = right[i + 2].as_ref().expect("right env present");
    let (w1, w2) = (op.tensor(i), op.tensor(i + 1));
    let outcome = linalg::lanczos_lowest(
        |v: &Array1<Complex64>| heff_apply(lenv, w1, w2, renv, v, l, r),
        &flat,
        opts,
    )?;
    let mut theta = outcome.vector;

    if noise > 0.0 {
        let scale = noise / (theta.len() as f64).sqrt();
        let normal = rand_distr::StandardNormal;
        theta.mapv_inplace(|x| {
            let re: f64 = normal.sample(rng);
            let im: f64 = normal.sample(rng);
            x + Complex64::new(re * scale, im * scale)
        });
        let nrm = theta.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        theta.mapv_inplace(|x| x / nrm);
    }

    let mat = theta.into_shape_with_order((l * 2, 2 * r)).expect("size");
    let svd = linalg::svd_truncated(&mat, chi, cutoff)?;
    let discarded = svd.discarded_weight;
    let absorb = if moving_right { crate::tensor::Absorb::Right } else { crate::tensor::Absorb::Left };
    state.split_pair(i, svd, l, r, absorb);
    state.add_discarded_weight(discarded);

    if moving_right {
        let env = contract_env_left(
            left[i].as_ref().expect("left env present"),
            &state.tensors()[i],
            &state.tensors()[i],
            op.tensor(i),
        );
        left[i + 1] = Some(env);
        right[i + 1] = None;
    } else {
        let env = contract_env_right(
            right[i + 2].as_ref().expect("right env present"),
            &state.tensors()[i + 1],
            &state.tensors()[i + 1],
            op.tensor(i + 1),
        );
        right[i + 1] = Some(env);
        left[i + 1] = None;
    }
    Ok(outcome.value)
}

/// Effective two-site Hamiltonian action:
/// `out[b,o1,o2,d] = L[a,u,b] theta[a,s1,s2,c] W1[u,o1,s1,v] W2[v,o2,s2,w] R[c,w,d]`.
fn heff_apply(
    lenv: &Array3<Complex64>,
    w1: &Array4<Complex64>,
    w2: &Array4<Complex64>,
    renv: &Array3<Complex64>,
    theta: &Array1<Complex64>,
    l: usize,
    r: usize,
) -> Array1<Complex64> {
    let (wl, wm) = (w1.shape()[0], w1.shape()[3]);
    let wr = w2.shape()[3];
    let lb = lenv.shape()[2];
    let rb = renv.shape()[2];

    // x1[u, b, s1, s2, c]
    let lm = lenv.to_shape((l, wl * lb)).expect("contiguous");
    let th = theta.view().into_shape_with_order((l, 4 * r)).expect("size");
    let x1 = lm.t().dot(&th);

    // x2[b, s2, c, o1, v]
    let x1 = x1.into_shape_with_order((wl, lb, 2, 2, r)).expect("size");
    let x1 = x1.permuted_axes([1, 3, 4, 0, 2]);
    let x1 = x1
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((lb * 2 * r, wl * 2))
        .expect("size");
    let w1m = w1.view().permuted_axes([0, 2, 1, 3]); // (u, s1, o1, v)
    let w1m = w1m
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((wl * 2, 2 * wm))
        .expect("size");
    let x2 = x1.dot(&w1m);

    // x3[b, o1, c, o2, w]
    let x2 = x2.into_shape_with_order((lb, 2, r, 2, wm)).expect("size");
    let x2 = x2.permuted_axes([0, 3, 2, 4, 1]);
    let x2 = x2
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((lb * 2 * r, wm * 2))
        .expect("size");
    let w2m = w2.view().permuted_axes([0, 2, 1, 3]); // (v, s2, o2, w)
    let w2m = w2m
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((wm * 2, 2 * wr))
        .expect("size");
    let x3 = x2.dot(&w2m);

    // out[b, o1, o2, d]
    let x3 = x3.into_shape_with_order((lb, 2, r, 2, wr)).expect("size");
    let x3 = x3.permuted_axes([0, 1, 3, 2, 4]);
    let x3 = x3
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((lb * 4, r * wr))
        .expect("size");
    let rm = renv.to_shape((r * wr, rb)).expect("contiguous");
    let out = x3.dot(&rm);
    out.into_shape_with_order(lb * 4 * rb).expect("size")
}

/// Deterministic product state in the model's particle-number sector: each
/// band is filled along the snake path per its nominal filling, singles
/// alternating spin to seed a low-S_z configuration.
pub fn sector_product_state(model: &ExtendedHubbardModel, map: &QubitMap) -> MatrixProductState {
    let n_sites = model.lattice.n_sites();
    let mut occupations = vec![false; map.n_qubits()];
    let mut site_at_pos = vec![0usize; n_sites];
    for site in 0..n_sites {
        site_at_pos[map.site_chain_position(site)] = site;
    }
    for (band, &fill) in model.filling.iter().enumerate() {
        let mut singles = 0usize;
        for (pos, &site) in site_at_pos.iter().enumerate() {
            let here = (fill * (pos + 1) as f64).round() - (fill * pos as f64).round();
            match here as i64 {
                0 => {}
                2 => {
                    occupations[map.qubit(site, band, Spin::Up)] = true;
                    occupations[map.qubit(site, band, Spin::Down)] = true;
                }
                _ => {
                    let spin = if singles % 2 == 0 { Spin::Up } else { Spin::Down };
                    occupations[map.qubit(site, band, spin)] = true;
                    singles += 1;
                }
            }
        }
    }
    let chi = crate::tensor::max_chi_default(map.n_qubits());
    MatrixProductState::product_state(&occupations, chi, 1e-12)
}

/// Builds the Hamiltonian MPO for `model` and runs the ground-state search
/// from the sector product state.
pub fn solve_model(
    model: &ExtendedHubbardModel,
    ordering: QubitOrdering,
    config: &DmrgConfig,
) -> Result<DmrgResult> {
    let map = QubitMap::new(model, ordering);
    let (_, mpo) = hamiltonian_mpo(model, &map, 1e-14)?;
    let initial = sector_product_state(model, &map);
    solve_ground_state(&mpo, config, &initial)
}

/// Ground state of the model with all interactions zeroed, holding every
/// band at its nominal filling (the variational-circuit starting point).
pub fn noninteracting_ground_state(
    model: &ExtendedHubbardModel,
    ordering: QubitOrdering,
    chi_max: usize,
) -> Result<DmrgResult> {
    let free = model.noninteracting();
    let map = QubitMap::new(&free, ordering);
    let weight = default_penalty_weight(model);
    let mut config = DmrgConfig::with_chi(chi_max);
    let n_sites = free.lattice.n_sites();
    for (band, &fill) in free.filling.iter().enumerate() {
        let mut qubits = Vec::with_capacity(2 * n_sites);
        for site in 0..n_sites {
            qubits.push(map.qubit(site, band, Spin::Up));
            qubits.push(map.qubit(site, band, Spin::Down));
        }
        config.penalties.push(NumberPenalty::on(qubits, fill * n_sites as f64, weight));
    }
    let (_, mpo) = hamiltonian_mpo(&free, &map, 1e-14)?;
    let initial = sector_product_state(&free, &map);
    solve_ground_state(&mpo, &config, &initial)
}

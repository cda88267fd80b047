//! Classically simulated variational optimization over matrix product
//! states.
//!
//! The workflow mirrors the study it reproduces: prepare the noninteracting
//! ground state, apply a parameterized number-preserving circuit, minimize
//! the energy with L-BFGS from many small random starts (phase 1), then
//! refine the best basin against a DMRG reference by minimizing
//! log10(1 - fidelity) (phase 2). Restarts are independent and deterministic
//! under a fixed master seed; restart `r` uses `seed ^ r`.

mod ansatz;
mod gradient;
mod lbfgs;

pub use ansatz::{
    build_ansatz, build_ansatz_opts, AnsatzKind, AnsatzSpec, CompiledOp, GateSlot, GateTemplate,
};
pub use gradient::{GradientMethod, INFIDELITY_FLOOR};
pub use lbfgs::{LbfgsOptions, Minimization, Objective, StopReason};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dmrg::{self, DmrgConfig, DmrgResult};
use crate::encode::{hamiltonian_mpo, MatrixProductOperator, QubitMap};
use crate::model::ExtendedHubbardModel;
use crate::tensor::{max_chi_default, overlap, MatrixProductState};
use crate::{par, Error, Result};

use gradient::{AdjointTarget, Simulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Phase2 {
    /// Refine against the DMRG reference by minimizing log10(1 - F).
    OverlapInfidelity,
    None,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct VqeConfig {
    pub restarts: usize,
    /// Standard deviation of the initial parameter draw.
    pub init_std: f64,
    /// Stop when successive objective values move less than this.
    pub energy_tol: f64,
    /// Stop when the gradient infinity norm falls under this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub phase2: Phase2,
    pub gradient: GradientMethod,
    /// Bond cap during circuit evolution; `None` picks
    /// [`max_chi_default`] for the qubit count.
    pub chi_max: Option<usize>,
    pub svd_cutoff: f64,
    pub seed: u64,
}

impl VqeConfig {
    pub fn defaults(seed: u64) -> Self {
        VqeConfig {
            restarts: 10,
            init_std: 1e-5_f64.sqrt(),
            energy_tol: 1e-7,
            grad_tol: 1e-6,
            max_iters: 500,
            phase2: Phase2::OverlapInfidelity,
            gradient: GradientMethod::default(),
            chi_max: None,
            svd_cutoff: 1e-9,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        for (name, v) in [
            ("init_std", self.init_std),
            ("energy_tol", self.energy_tol),
            ("grad_tol", self.grad_tol),
            ("svd_cutoff", self.svd_cutoff),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if let GradientMethod::CentralDiff { step } = self.gradient {
            if !(step > 0.0) {
                return Err(Error::invalid(format!("gradient step must be positive, got {step}")));
            }
        }
        Ok(())
    }

    fn resolved_chi(&self, n_qubits: usize) -> usize {
        self.chi_max.unwrap_or_else(|| max_chi_default(n_qubits))
    }

    fn lbfgs(&self) -> LbfgsOptions {
        LbfgsOptions {
            max_iters: self.max_iters,
            value_tol: self.energy_tol,
            grad_tol: self.grad_tol,
            ..LbfgsOptions::default()
        }
    }
}

/// Result of one optimization phase for one start. When `error` is set the
/// phase aborted and the remaining fields echo its input.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PhaseOutcome {
    pub params: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub reason: StopReason,
    pub trace: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct RestartRecord {
    pub restart: usize,
    pub seed: u64,
    pub energy_after_phase1: f64,
    /// Final energy, after phase 2 when it runs.
    pub energy: f64,
    /// |<reference|state>|^2 at the final parameters.
    pub fidelity: f64,
    /// Optimizer iterations across both phases.
    pub iterations: usize,
    pub phase1_reason: StopReason,
    pub phase2_reason: Option<StopReason>,
    pub params: Vec<f64>,
    /// Accepted phase-1 energies, one per iteration plus the start.
    pub energy_trace: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct VqeResult {
    pub best_energy: f64,
    pub best_fidelity: f64,
    pub best_restart: usize,
    pub best_params: Vec<f64>,
    /// Energy of the DMRG reference the fidelities are measured against.
    pub reference_energy: f64,
    pub n_params: usize,
    pub n_two_qubit_gates: usize,
    pub restarts: Vec<RestartRecord>,
}

/// Applies the circuit at `params` to `initial` under the given truncation
/// budget; the result is normalized.
pub fn simulate(
    spec: &AnsatzSpec,
    initial: &MatrixProductState,
    params: &[f64],
    chi_max: usize,
    svd_cutoff: f64,
) -> Result<MatrixProductState> {
    Simulator::new(spec, initial, chi_max, svd_cutoff)?.run(params)
}

/// Energy and gradient at one parameter point under the configured method.
/// Exposed for gradient cross-checks and diagnostics.
pub fn energy_value_grad(
    spec: &AnsatzSpec,
    initial: &MatrixProductState,
    mpo: &MatrixProductOperator,
    params: &[f64],
    config: &VqeConfig,
) -> Result<(f64, Vec<f64>)> {
    config.validate()?;
    let sim = Simulator::new(spec, initial, config.resolved_chi(spec.n_qubits), config.svd_cutoff)?;
    EnergyObjective { sim: &sim, mpo, method: config.gradient }.value_grad(params)
}

/// log10(1 - F) against `reference` and its gradient, like
/// [`energy_value_grad`].
pub fn overlap_value_grad(
    spec: &AnsatzSpec,
    initial: &MatrixProductState,
    reference: &MatrixProductState,
    params: &[f64],
    config: &VqeConfig,
) -> Result<(f64, Vec<f64>)> {
    config.validate()?;
    let sim = Simulator::new(spec, initial, config.resolved_chi(spec.n_qubits), config.svd_cutoff)?;
    let reference = normalized(reference);
    InfidelityObjective { sim: &sim, reference: &reference, method: config.gradient }
        .value_grad(params)
}

/// |<a|b>|^2 with both sides normalized.
pub fn fidelity(a: &MatrixProductState, b: &MatrixProductState) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (overlap(a, b).norm_sqr() / (na * na * nb * nb)).min(1.0)
}

struct EnergyObjective<'a, 'b> {
    sim: &'a Simulator<'b>,
    mpo: &'a MatrixProductOperator,
    method: GradientMethod,
}

impl Objective for EnergyObjective<'_, '_> {
    fn dim(&self) -> usize {
        self.sim.spec.n_params
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        Ok(self.sim.run(x)?.expectation(self.mpo).re)
    }

    fn value_grad(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self.method {
            GradientMethod::Adjoint => {
                gradient::adjoint_value_grad(self.sim, AdjointTarget::Energy(self.mpo), x)
            }
            GradientMethod::CentralDiff { step } => {
                let (sim, mpo) = (self.sim, self.mpo);
                gradient::fd_value_grad(|p| Ok(sim.run(p)?.expectation(mpo).re), x, step)
            }
        }
    }
}

struct InfidelityObjective<'a, 'b> {
    sim: &'a Simulator<'b>,
    /// Normalized.
    reference: &'a MatrixProductState,
    method: GradientMethod,
}

fn log_infidelity(state: &MatrixProductState, reference: &MatrixProductState) -> f64 {
    (1.0 - fidelity(state, reference)).max(INFIDELITY_FLOOR).log10()
}

impl Objective for InfidelityObjective<'_, '_> {
    fn dim(&self) -> usize {
        self.sim.spec.n_params
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        Ok(log_infidelity(&self.sim.run(x)?, self.reference))
    }

    fn value_grad(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self.method {
            GradientMethod::Adjoint => gradient::adjoint_value_grad(
                self.sim,
                AdjointTarget::LogInfidelity(self.reference),
                x,
            ),
            GradientMethod::CentralDiff { step } => {
                let (sim, reference) = (self.sim, self.reference);
                gradient::fd_value_grad(
                    |p| Ok(log_infidelity(&sim.run(p)?, reference)),
                    x,
                    step,
                )
            }
        }
    }
}

fn draw_theta(n: usize, std: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, std).expect("validated std");
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

fn normalized(state: &MatrixProductState) -> MatrixProductState {
    let mut s = state.clone();
    s.normalize();
    s
}

/// Phase 1 for every restart: minimize the energy from independent random
/// starts. A linear-algebra failure aborts only its own restart.
pub fn energy_phase(
    mpo: &MatrixProductOperator,
    spec: &AnsatzSpec,
    initial: &MatrixProductState,
    config: &VqeConfig,
) -> Result<Vec<PhaseOutcome>> {
    config.validate()?;
    if mpo.n_sites() != spec.n_qubits {
        return Err(Error::invalid(format!(
            "operator covers {} qubits, ansatz {}",
            mpo.n_sites(),
            spec.n_qubits
        )));
    }
    let sim = Simulator::new(spec, initial, config.resolved_chi(spec.n_qubits), config.svd_cutoff)?;
    Ok(par::map_indexed(config.restarts, |r| energy_restart(&sim, mpo, config, r)))
}

fn energy_restart(
    sim: &Simulator,
    mpo: &MatrixProductOperator,
    config: &VqeConfig,
    restart: usize,
) -> PhaseOutcome {
    let seed = config.seed ^ restart as u64;
    let theta0 = draw_theta(sim.spec.n_params, config.init_std, seed);
    let mut obj = EnergyObjective { sim, mpo, method: config.gradient };
    match lbfgs::minimize(&mut obj, &theta0, &config.lbfgs()) {
        Ok(m) => PhaseOutcome {
            params: m.x,
            value: m.value,
            iterations: m.iterations,
            reason: m.reason,
            trace: m.trace,
            error: None,
        },
        Err(e) => PhaseOutcome {
            params: theta0,
            value: f64::INFINITY,
            iterations: 0,
            reason: StopReason::LineSearchFailed,
            trace: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Phase 2: starting from `params`, minimize log10(1 - F) against
/// `reference`. Never hands back parameters whose fidelity undercuts the
/// start by more than 1e-10.
pub fn overlap_phase(
    spec: &AnsatzSpec,
    initial: &MatrixProductState,
    params: &[f64],
    reference: &MatrixProductState,
    config: &VqeConfig,
) -> Result<PhaseOutcome> {
    config.validate()?;
    if reference.n_sites() != spec.n_qubits {
        return Err(Error::invalid(format!(
            "reference has {} sites, ansatz expects {}",
            reference.n_sites(),
            spec.n_qubits
        )));
    }
    let sim = Simulator::new(spec, initial, config.resolved_chi(spec.n_qubits), config.svd_cutoff)?;
    overlap_phase_inner(&sim, params, &normalized(reference), config)
}

fn overlap_phase_inner(
    sim: &Simulator,
    params: &[f64],
    reference: &MatrixProductState,
    config: &VqeConfig,
) -> Result<PhaseOutcome> {
    let f_start = fidelity(&sim.run(params)?, reference);
    let loss_start = (1.0 - f_start).max(INFIDELITY_FLOOR).log10();
    if 1.0 - f_start <= INFIDELITY_FLOOR {
        return Ok(PhaseOutcome {
            params: params.to_vec(),
            value: loss_start,
            iterations: 0,
            reason: StopReason::Floor,
            trace: vec![loss_start],
            error: None,
        });
    }
    let mut obj = InfidelityObjective { sim, reference, method: config.gradient };
    let m = lbfgs::minimize(&mut obj, params, &config.lbfgs())?;
    let f_end = fidelity(&sim.run(&m.x)?, reference);
    if f_end < f_start - 1e-10 {
        return Ok(PhaseOutcome {
            params: params.to_vec(),
            value: loss_start,
            iterations: m.iterations,
            reason: m.reason,
            trace: m.trace,
            error: None,
        });
    }
    Ok(PhaseOutcome {
        params: m.x,
        value: m.value,
        iterations: m.iterations,
        reason: m.reason,
        trace: m.trace,
        error: None,
    })
}

/// Full pipeline: DMRG reference, noninteracting start, phase 1 and phase 2
/// per restart, minimum-energy selection.
pub fn run_vqe(
    model: &ExtendedHubbardModel,
    spec: &AnsatzSpec,
    config: &VqeConfig,
) -> Result<VqeResult> {
    config.validate()?;
    let chi = config.resolved_chi(spec.n_qubits);
    let reference = dmrg::solve_model(model, spec.ordering, &DmrgConfig::for_model(model, chi))?;
    run_vqe_with_reference(model, spec, config, &reference)
}

/// [`run_vqe`] with a precomputed DMRG reference, so callers that already
/// solved the model do not pay for it twice.
pub fn run_vqe_with_reference(
    model: &ExtendedHubbardModel,
    spec: &AnsatzSpec,
    config: &VqeConfig,
    reference: &DmrgResult,
) -> Result<VqeResult> {
    config.validate()?;
    if spec.n_qubits != model.n_spin_orbitals() {
        return Err(Error::invalid(format!(
            "ansatz built for {} qubits, model has {} spin orbitals",
            spec.n_qubits,
            model.n_spin_orbitals()
        )));
    }
    if reference.state.n_sites() != spec.n_qubits {
        return Err(Error::invalid("reference state does not match the ansatz qubit count"));
    }
    let map = QubitMap::new(model, spec.ordering);
    let (_, mpo) = hamiltonian_mpo(model, &map, 1e-14)?;
    let chi = config.resolved_chi(spec.n_qubits);
    let start = dmrg::noninteracting_ground_state(model, spec.ordering, chi)?;
    let sim = Simulator::new(spec, &start.state, chi, config.svd_cutoff)?;
    let reference_state = normalized(&reference.state);

    let records =
        par::map_indexed(config.restarts, |r| full_restart(&sim, &mpo, &reference_state, config, r));

    let best = records
        .iter()
        .enumerate()
        .filter(|(_, rec)| rec.energy.is_finite())
        .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy))
        .map(|(i, _)| i);
    let Some(best_restart) = best else {
        return Err(Error::numerics("every restart aborted before producing an energy"));
    };
    Ok(VqeResult {
        best_energy: records[best_restart].energy,
        best_fidelity: records[best_restart].fidelity,
        best_restart,
        best_params: records[best_restart].params.clone(),
        reference_energy: reference.energy,
        n_params: spec.n_params,
        n_two_qubit_gates: spec.n_two_qubit_gates,
        restarts: records,
    })
}

fn full_restart(
    sim: &Simulator,
    mpo: &MatrixProductOperator,
    reference: &MatrixProductState,
    config: &VqeConfig,
    restart: usize,
) -> RestartRecord {
    let seed = config.seed ^ restart as u64;
    let p1 = energy_restart(sim, mpo, config, restart);
    let mut record = RestartRecord {
        restart,
        seed,
        energy_after_phase1: p1.value,
        energy: p1.value,
        fidelity: 0.0,
        iterations: p1.iterations,
        phase1_reason: p1.reason,
        phase2_reason: None,
        params: p1.params,
        energy_trace: p1.trace,
        error: p1.error,
    };
    if record.error.is_some() {
        return record;
    }
    match sim.run(&record.params) {
        Ok(st) => record.fidelity = fidelity(&st, reference),
        Err(e) => {
            record.error = Some(format!("post-phase-1 evaluation: {e}"));
            return record;
        }
    }
    if config.phase2 == Phase2::None {
        return record;
    }
    match overlap_phase_inner(sim, &record.params, reference, config) {
        Ok(p2) => match sim.run(&p2.params) {
            Ok(st) => {
                record.energy = st.expectation(mpo).re;
                record.fidelity = fidelity(&st, reference);
                record.iterations += p2.iterations;
                record.phase2_reason = Some(p2.reason);
                record.params = p2.params;
            }
            Err(e) => record.error = Some(format!("post-phase-2 evaluation: {e}")),
        },
        // Phase 1 output stands; the refinement failure is only noted.
        Err(e) => record.error = Some(format!("overlap phase: {e}")),
    }
    record
}

//! Command line front end: load a downfolded extended-Hubbard model, run a
//! solver, print a report and optionally write a run directory with the
//! manifest, a structured summary and plot-ready CSV files.
//!
//! Exit codes: 0 success, 1 solver non-convergence or a failed reproduction
//! gate, 2 malformed input. Set `RAYON_NUM_THREADS` to bound the worker pool.

mod out;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hubsolve::dmrg::{self, DmrgConfig, DmrgResult};
use hubsolve::encode::{QubitMap, QubitOrdering};
use hubsolve::model::{self, ExtendedHubbardModel};
use hubsolve::observables::{self, ObservableReport};
use hubsolve::resources;
use hubsolve::tensor::max_chi_default;
use hubsolve::vqe::{self, AnsatzKind, GradientMethod, VqeConfig};
use hubsolve::{ed, materials};
use serde::Serialize;

use out::{maybe_run_dir, RunManifest};

const ORDERING: QubitOrdering = QubitOrdering::SpinInterleaved;


#[derive(Parser)]
#[command(
    name = "hubsolve",
    version,
    about = "Ground states and quantum-resource estimates for downfolded extended-Hubbard models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print lattice, filling, the term-count breakdown and the one-norm.
    Inspect(ModelArg),
    /// Resource estimate: gate counts, circuit fidelity, T-gate budget.
    Estimate(EstimateArgs),
    /// Exact ground state in the model's particle-number sector.
    Ed(SolveArgs),
    /// DMRG ground state with a convergence trace.
    Dmrg(SolveArgs),
    /// Variational circuit optimization against a DMRG reference.
    Vqe(VqeArgs),
    /// Ground-state diagnostics from a DMRG solve.
    Observables(SolveArgs),
    /// Full pipeline on a bundled material, checked against published values.
    Reproduce(reproduce::ReproduceArgs),
}

#[derive(Args)]
struct ModelArg {
    /// Bundled material (ca2cuo3, wte2, srvo3) or a path to a model TOML file.
    #[arg(long)]
    model: String,
}

impl ModelArg {
    fn load(&self) -> anyhow::Result<ExtendedHubbardModel> {
        if let Some(m) = materials::by_name(&self.model) {
            return Ok(m);
        }
        Ok(ExtendedHubbardModel::load(&self.model)
            .with_context(|| format!("loading model from {}", self.model))?)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AnsatzArg {
    Np,
    Ep,
}

impl AnsatzArg {
    fn kind(self) -> AnsatzKind {
        match self {
            AnsatzArg::Np => AnsatzKind::Np,
            AnsatzArg::Ep => AnsatzKind::Ep,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Circuit family; defaults to the published pairing for the material
    /// (np for one band, ep otherwise).
    #[arg(long)]
    ansatz: Option<AnsatzArg>,
    /// Ansatz depth; defaults to the published layer count when known.
    #[arg(long)]
    layers: Option<usize>,
    /// Per-two-qubit-gate fidelity for the near-term estimate.
    #[arg(long, default_value_t = 0.999)]
    gate_fidelity: f64,
    /// Synthesis accuracy for the T-gate count.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Bond dimension cap; defaults by qubit count. Ignored by `ed`.
    #[arg(long)]
    chi: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VqeArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    ansatz: Option<AnsatzArg>,
    #[arg(long)]
    layers: Option<usize>,
    /// Bond dimension cap during circuit evolution and for the reference.
    #[arg(long)]
    chi: Option<usize>,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}

/// 1 for numerical failures, 2 for anything traceable to the input.
fn exit_code(err: &anyhow::Error) -> ExitCode {
    match err.downcast_ref::<hubsolve::Error>() {
        Some(hubsolve::Error::Numerics(_)) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Inspect(args) => cmd_inspect(&args),
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Ed(args) => cmd_ed(&args),
        Command::Dmrg(args) => cmd_dmrg(&args),
        Command::Vqe(args) => cmd_vqe(&args),
        Command::Observables(args) => cmd_observables(&args),
        Command::Reproduce(args) => reproduce::cmd_reproduce(&args),
    }
}

/// Published ansatz pairing: np for single-band models, ep for multi-band.
fn default_ansatz(model: &ExtendedHubbardModel) -> AnsatzKind {
    if model.bands == 1 {
        AnsatzKind::Np
    } else {
        AnsatzKind::Ep
    }
}

fn default_layers(model: &ExtendedHubbardModel) -> usize {
    materials::reference_study(&model.name).map(|s| s.layers).unwrap_or(10)
}

fn cmd_inspect(args: &ModelArg) -> anyhow::Result<ExitCode> {
    let m = args.load()?;
    let (nx, ny) = (m.lattice.nx, m.lattice.ny);
    let counts = model::count_terms(nx, ny, m.bands, m.drop_onsite_potential_default());
    let full = model::count_full_terms(nx, ny, m.bands)?;
    let ratio = model::compression_ratio(nx, ny, m.bands, m.bands)?;
    let one_norm = m.one_norm()?;

    println!("model {}", m.name);
    println!("lattice {nx} x {ny} ({} sites), {} band(s)", m.n_sites(), m.bands);
    println!(
        "filling per band {:?}: {} electrons over {} spin orbitals",
        m.filling,
        m.n_electrons(),
        m.n_spin_orbitals()
    );
    println!();
    println!("{} terms in the downfolded Hamiltonian", counts.total());
    println!("  intra-band hopping     {:>6}", counts.hop_intra);
    println!("  on-site hybridization  {:>6}", counts.hop_inter_onsite);
    println!("  on-site potential      {:>6}", counts.onsite_potential);
    println!("  same-band U            {:>6}", counts.u_onsite);
    println!("  inter-band U'          {:>6}", counts.u_inter_onsite);
    println!("  neighbor V             {:>6}", counts.v_offsite);
    println!("full active-space coefficient count {:.3e} (kept fraction {ratio:.2e})", full as f64);
    println!("one-norm {one_norm:.6}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_estimate(args: &EstimateArgs) -> anyhow::Result<ExitCode> {
    let m = args.model.load()?;
    let kind = args.ansatz.map(AnsatzArg::kind).unwrap_or_else(|| default_ansatz(&m));
    let layers = args.layers.unwrap_or_else(|| default_layers(&m));
    let spec = vqe::build_ansatz(&m, ORDERING, kind, layers)?;

    let mut rows = vec![resources::resource_report(&m, &spec, args.gate_fidelity, args.epsilon)?];
    if let Some(study) = materials::reference_study(&m.name) {
        let mut published = resources::resource_report_with_counts(
            &m,
            study.two_qubit_gates,
            study.n_params,
            args.gate_fidelity,
            args.epsilon,
        )?;
        published.label = format!("{} (published counts)", m.name);
        rows.push(published);
    }
    println!("{kind:?} ansatz, {layers} layers");
    println!("{}", resources::format_table(&rows));

    let manifest = RunManifest {
        ansatz: Some(format!("{kind:?}").to_lowercase()),
        layers: Some(layers),
        epsilon: Some(args.epsilon),
        gate_fidelity: Some(args.gate_fidelity),
        ..RunManifest::new("estimate", &args.model.model)
    };
    if let Some(dir) = maybe_run_dir(args.out.as_deref(), &manifest)? {
        dir.write_json("summary.json", &rows)?;
        println!("wrote {}", dir.path().display());
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SolveSummary {
    command: String,
    model: String,
    n_qubits: usize,
    n_electrons: usize,
    seed: u64,
    chi: Option<usize>,
    energy: f64,
    converged: Option<bool>,
    electron_number: Option<f64>,
    observables: ObservableReport,
}

fn print_solve_summary(s: &SolveSummary) {
    println!("model {} ({} qubits, {} electrons)", s.model, s.n_qubits, s.n_electrons);
    println!("energy {:.9}", s.energy);
    if let Some(conv) = s.converged {
        println!("converged {conv}");
    }
    if let Some(n) = s.electron_number {
        println!("electron number expectation {n:.9}");
    }
    let occ = &s.observables.occupations;
    for band in 0..occ.total.len() {
        println!(
            "band {band}: n = {:.6} (reference {:.3}, up {:.6}, down {:.6})",
            occ.total[band], occ.reference[band], occ.per_spin[band][0], occ.per_spin[band][1]
        );
    }
    let corr: Vec<String> =
        s.observables.spin_correlations.iter().map(|r| format!("{:+.4}", r.value)).collect();
    println!("first-site spin correlations C_1j, j = 1..: [{}]", corr.join(", "));
    if let Some(delta) = s.observables.ei_delta {
        println!("excitonic order parameter {delta:.6} (U' {:.5})", s.observables.u_prime.unwrap());
    }
    if let Some(phi) = s.observables.phi {
        println!("charge disproportionation {phi:.6}");
    }
}

fn write_solve_outputs(
    args: &SolveArgs,
    command: &str,
    summary: &SolveSummary,
    trace: Option<&[dmrg::SweepRecord]>,
) -> anyhow::Result<()> {
    let manifest = RunManifest {
        chi: args.chi,
        seed: Some(args.seed),
        ..RunManifest::new(command, &args.model.model)
    };
    if let Some(dir) = maybe_run_dir(args.out.as_deref(), &manifest)? {
        dir.write_json("summary.json", summary)?;
        dir.write_spin_correlations(&summary.observables.spin_correlations)?;
        dir.write_occupations(&summary.observables.occupations)?;
        if let Some(t) = trace {
            dir.write_dmrg_trace(t)?;
        }
        println!("wrote {}", dir.path().display());
    }
    Ok(())
}

fn cmd_ed(args: &SolveArgs) -> anyhow::Result<ExitCode> {
    let m = args.model.load()?;
    let n_q = m.n_spin_orbitals();
    if n_q > hubsolve::ed::MAX_QUBITS {
        return Err(hubsolve::Error::Unsupported(format!(
            "exact diagonalization is capped at {} qubits, model has {n_q}; use dmrg",
            hubsolve::ed::MAX_QUBITS
        ))
        .into());
    }
    let map = QubitMap::new(&m, ORDERING);
    let sol = ed::ground_state(&m, &map)?;
    let report = observables::report(&sol, &m, &map)?;
    let summary = SolveSummary {
        command: "ed".into(),
        model: m.name.clone(),
        n_qubits: n_q,
        n_electrons: m.n_electrons(),
        seed: args.seed,
        chi: None,
        energy: sol.energy,
        converged: None,
        electron_number: None,
        observables: report,
    };
    print_solve_summary(&summary);
    write_solve_outputs(args, "ed", &summary, None)?;
    Ok(ExitCode::SUCCESS)
}

fn solve_dmrg(m: &ExtendedHubbardModel, chi: Option<usize>, seed: u64) -> anyhow::Result<DmrgResult> {
    let chi = chi.unwrap_or_else(|| max_chi_default(m.n_spin_orbitals()));
    let mut cfg = DmrgConfig::for_model(m, chi);
    cfg.seed = seed;
    Ok(dmrg::solve_model(m, ORDERING, &cfg)?)
}

fn cmd_dmrg(args: &SolveArgs) -> anyhow::Result<ExitCode> {
    let m = args.model.load()?;
    let res = solve_dmrg(&m, args.chi, args.seed)?;
    let map = QubitMap::new(&m, ORDERING);
    let report = observables::report(&res.state, &m, &map)?;
    let healthy = res.converged && res.penalty_ok();
    let summary = SolveSummary {
        command: "dmrg".into(),
        model: m.name.clone(),
        n_qubits: m.n_spin_orbitals(),
        n_electrons: m.n_electrons(),
        seed: args.seed,
        chi: args.chi,
        energy: res.energy,
        converged: Some(healthy),
        electron_number: Some(res.n_expectation),
        observables: report,
    };
    print_solve_summary(&summary);
    write_solve_outputs(args, "dmrg", &summary, Some(&res.trace))?;
    if !healthy {
        eprintln!("dmrg did not converge cleanly; outputs kept");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_observables(args: &SolveArgs) -> anyhow::Result<ExitCode> {
    let m = args.model.load()?;
    let res = solve_dmrg(&m, args.chi, args.seed)?;
    let map = QubitMap::new(&m, ORDERING);
    let report = observables::report(&res.state, &m, &map)?;
    let summary = SolveSummary {
        command: "observables".into(),
        model: m.name.clone(),
        n_qubits: m.n_spin_orbitals(),
        n_electrons: m.n_electrons(),
        seed: args.seed,
        chi: args.chi,
        energy: res.energy,
        converged: Some(res.converged && res.penalty_ok()),
        electron_number: Some(res.n_expectation),
        observables: report,
    };
    print_solve_summary(&summary);
    write_solve_outputs(args, "observables", &summary, Some(&res.trace))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VqeSummary {
    command: String,
    model: String,
    ansatz: String,
    layers: usize,
    n_qubits: usize,
    n_two_qubit_gates: usize,
    n_params: usize,
    seed: u64,
    chi: Option<usize>,
    restarts: usize,
    best_restart: usize,
    best_energy: f64,
    best_fidelity: f64,
    reference_energy: f64,
    observables: ObservableReport,
}

fn cmd_vqe(args: &VqeArgs) -> anyhow::Result<ExitCode> {
    let m = args.model.load()?;
    let kind = args.ansatz.map(AnsatzArg::kind).unwrap_or_else(|| default_ansatz(&m));
    let layers = args.layers.unwrap_or_else(|| default_layers(&m));
    let spec = vqe::build_ansatz(&m, ORDERING, kind, layers)?;

    let mut cfg = VqeConfig::defaults(args.seed);
    cfg.restarts = args.restarts;
    cfg.chi_max = args.chi;
    cfg.gradient = GradientMethod::Adjoint;
    let result = vqe::run_vqe(&m, &spec, &cfg)?;

    let chi = args.chi.unwrap_or_else(|| max_chi_default(spec.n_qubits));
    let best_state =
        vqe::simulate(&spec, &start_state(&m, chi)?, &result.best_params, chi, cfg.svd_cutoff)?;
    let map = QubitMap::new(&m, ORDERING);
    let report = observables::report(&best_state, &m, &map)?;

    let summary = VqeSummary {
        command: "vqe".into(),
        model: m.name.clone(),
        ansatz: format!("{kind:?}").to_lowercase(),
        layers,
        n_qubits: spec.n_qubits,
        n_two_qubit_gates: spec.n_two_qubit_gates,
        n_params: spec.n_params,
        seed: args.seed,
        chi: args.chi,
        restarts: args.restarts,
        best_restart: result.best_restart,
        best_energy: result.best_energy,
        best_fidelity: result.best_fidelity,
        reference_energy: result.reference_energy,
        observables: report,
    };
    println!(
        "model {} / {} ansatz, {} layers ({} two-qubit gates, {} parameters)",
        summary.model, summary.ansatz, layers, spec.n_two_qubit_gates, spec.n_params
    );
    println!(
        "best restart {} of {}: energy {:.9}, fidelity {:.6}",
        result.best_restart + 1,
        args.restarts,
        result.best_energy,
        result.best_fidelity
    );
    println!(
        "reference energy {:.9} (gap {:+.3e})",
        result.reference_energy,
        result.best_energy - result.reference_energy
    );

    let manifest = RunManifest {
        ansatz: Some(summary.ansatz.clone()),
        layers: Some(layers),
        chi: args.chi,
        restarts: Some(args.restarts),
        seed: Some(args.seed),
        ..RunManifest::new("vqe", &args.model.model)
    };
    if let Some(dir) = maybe_run_dir(args.out.as_deref(), &manifest)? {
        dir.write_json("summary.json", &summary)?;
        dir.write_vqe_restarts(&result.restarts)?;
        dir.write_energy_trace(&result.restarts[result.best_restart].energy_trace)?;
        dir.write_spin_correlations(&summary.observables.spin_correlations)?;
        dir.write_occupations(&summary.observables.occupations)?;
        println!("wrote {}", dir.path().display());
    }
    Ok(ExitCode::SUCCESS)
}

/// The circuit input state: the noninteracting ground state, as in training.
fn start_state(
    m: &ExtendedHubbardModel,
    chi: usize,
) -> anyhow::Result<hubsolve::tensor::MatrixProductState> {
    Ok(dmrg::noninteracting_ground_state(m, ORDERING, chi)?.state)
}

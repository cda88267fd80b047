//! Reproduction runs: solve a bundled material with the published settings
//! and print a side-by-side comparison, one verdict per check. Gated rows
//! decide the exit code; report rows are informational.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, ValueEnum};
use hubsolve::encode::QubitMap;
use hubsolve::model::{count_terms, ExtendedHubbardModel};
use hubsolve::observables::{self, QuantumState};
use hubsolve::resources::{circuit_fidelity, t_gate_count};
use hubsolve::vqe::{self, GradientMethod, VqeConfig};
use hubsolve::{materials, tensor::MatrixProductState};
use serde::Serialize;

use crate::out::{maybe_run_dir, RunManifest};
use crate::{solve_dmrg, ORDERING};

#[derive(Args)]
pub struct ReproduceArgs {
    /// Bundled material to reproduce.
    #[arg(value_enum)]
    material: Material,
    /// Resources-only comparison; skips every solver stage.
    #[arg(long)]
    quick: bool,
    /// Bond dimension override for the DMRG stage.
    #[arg(long)]
    chi: Option<usize>,
    /// Restart count override for the VQE stage.
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Material {
    Ca2cuo3,
    Wte2,
    Srvo3,
}

impl Material {
    fn name(self) -> &'static str {
        match self {
            Material::Ca2cuo3 => "ca2cuo3",
            Material::Wte2 => "wte2",
            Material::Srvo3 => "srvo3",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Verdict {
    Pass,
    /// Met the documented fallback gate but not the headline one.
    Fallback,
    Fail,
    /// Informational row; never gates the exit code.
    Report,
}

#[derive(Clone, Debug, Serialize)]
struct CheckRow {
    check: String,
    computed: String,
    target: String,
    verdict: Verdict,
}

impl CheckRow {
    fn new(check: &str, computed: String, target: String, verdict: Verdict) -> Self {
        CheckRow { check: check.into(), computed, target, verdict }
    }

    fn gate(check: &str, computed: String, target: String, ok: bool) -> Self {
        Self::new(check, computed, target, if ok { Verdict::Pass } else { Verdict::Fail })
    }
}

/// Published one-norm values; the computed NN-only norms must stay under.
fn one_norm_bound(material: Material) -> f64 {
    match material {
        Material::Ca2cuo3 => 2.67e2,
        Material::Wte2 => 3.31e2,
        Material::Srvo3 => 2.315e3,
    }
}

/// Published circuit fidelity in percent.
fn fidelity_pct(material: Material) -> f64 {
    match material {
        Material::Ca2cuo3 => 74.8,
        Material::Wte2 => 52.1,
        Material::Srvo3 => 55.8,
    }
}

fn published_terms(material: Material) -> u64 {
    match material {
        Material::Ca2cuo3 => 37,
        Material::Wte2 => 288,
        Material::Srvo3 => 423,
    }
}

pub fn cmd_reproduce(args: &ReproduceArgs) -> anyhow::Result<ExitCode> {
    let model = materials::by_name(args.material.name()).expect("bundled");
    let study = materials::reference_study(args.material.name()).expect("bundled");

    let mut rows = resource_rows(args.material, &model, &study)?;
    if !args.quick {
        match args.material {
            Material::Ca2cuo3 => rows.extend(run_ca(args, &model, &study)?),
            Material::Wte2 => rows.extend(run_wte2(args, &model, &study)?),
            Material::Srvo3 => rows.extend(run_srvo3(args, &model)?),
        }
    }

    println!("reproduction: {}{}", model.name, if args.quick { " (quick)" } else { "" });
    print_rows(&rows);
    let failed = rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let fellback = rows.iter().filter(|r| r.verdict == Verdict::Fallback).count();
    match (failed, fellback) {
        (0, 0) => println!("all gated checks passed"),
        (0, _) => println!("gated checks passed ({fellback} on the fallback gate)"),
        _ => println!("{failed} gated check(s) failed"),
    }

    let manifest = RunManifest {
        chi: args.chi,
        restarts: args.restarts,
        seed: Some(args.seed),
        quick: args.quick,
        ..RunManifest::new("reproduce", args.material.name())
    };
    if let Some(dir) = maybe_run_dir(args.out.as_deref(), &manifest)? {
        dir.write_json("summary.json", &rows)?;
        println!("wrote {}", dir.path().display());
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn print_rows(rows: &[CheckRow]) {
    let w_check = rows.iter().map(|r| r.check.len()).max().unwrap_or(0).max(5);
    let w_comp = rows.iter().map(|r| r.computed.len()).max().unwrap_or(0).max(8);
    let w_target = rows.iter().map(|r| r.target.len()).max().unwrap_or(0).max(6);
    println!("{:<w_check$}  {:<w_comp$}  {:<w_target$}  verdict", "check", "computed", "target");
    for r in rows {
        let verdict = format!("{:?}", r.verdict).to_lowercase();
        println!("{:<w_check$}  {:<w_comp$}  {:<w_target$}  {verdict}", r.check, r.computed, r.target);
    }
}

fn resource_rows(
    material: Material,
    model: &ExtendedHubbardModel,
    study: &materials::ReferenceStudy,
) -> anyhow::Result<Vec<CheckRow>> {
    let counts = count_terms(
        model.lattice.nx,
        model.lattice.ny,
        model.bands,
        model.drop_onsite_potential_default(),
    );
    let terms = counts.total();
    let target_terms = published_terms(material);
    let mut rows = vec![CheckRow::gate(
        "term count",
        terms.to_string(),
        target_terms.to_string(),
        terms == target_terms,
    )];

    let one_norm = model.one_norm()?;
    let bound = one_norm_bound(material);
    rows.push(CheckRow::gate(
        "one-norm",
        format!("{one_norm:.4}"),
        format!("<= {bound:.4}"),
        one_norm > 0.0 && one_norm <= bound,
    ));

    let pct = 100.0 * circuit_fidelity(study.two_qubit_gates, study.gate_fidelity)?;
    let target_pct = fidelity_pct(material);
    let mut fid_row = CheckRow::gate(
        &format!("circuit fidelity ({} gates)", study.two_qubit_gates),
        format!("{pct:.2}%"),
        format!("{target_pct:.1}% +- 0.1pp"),
        (pct - target_pct).abs() <= 0.1,
    );
    if let Some(alt) = study.alt_two_qubit_gates {
        fid_row.target.push_str(&format!(" [{alt} also printed]"));
    }
    rows.push(fid_row);

    let t_count = t_gate_count(model.n_spin_orbitals(), study.n_params, study.epsilon)?;
    rows.push(CheckRow::new(
        &format!("T gates (eps {:.0e})", study.epsilon),
        t_count.to_string(),
        "order-of-magnitude estimate".into(),
        Verdict::Report,
    ));
    Ok(rows)
}

/// Sign-alternation of the first-site spin correlations, the
/// antiferromagnetic signature of the chain.
fn afm_row(
    label: &str,
    state: &impl QuantumState,
    model: &ExtendedHubbardModel,
    map: &QubitMap,
) -> anyhow::Result<CheckRow> {
    let mut signs = String::new();
    let mut ok = true;
    for j in 1..model.n_sites() {
        let c = observables::spin_correlation(state, map, 0, j)?;
        signs.push(if c > 0.0 { '+' } else { '-' });
        let expected_positive = j % 2 == 0;
        if c == 0.0 || (c > 0.0) != expected_positive {
            ok = false;
        }
    }
    Ok(CheckRow::gate(label, signs, "-+-+...".into(), ok))
}

fn run_ca(
    args: &ReproduceArgs,
    model: &ExtendedHubbardModel,
    study: &materials::ReferenceStudy,
) -> anyhow::Result<Vec<CheckRow>> {
    let map = QubitMap::new(model, ORDERING);
    let chi = args.chi.unwrap_or(256);
    let dmrg_res = solve_dmrg(model, Some(chi), args.seed)?;
    let mut rows = vec![CheckRow::gate(
        &format!("DMRG energy (chi {chi})"),
        format!("{:.6}", dmrg_res.energy),
        format!("{:.3} +- 0.001", study.dmrg_energy),
        (dmrg_res.energy - study.dmrg_energy).abs() <= 1e-3,
    )];
    rows.push(afm_row("AFM alternation (DMRG)", &dmrg_res.state, model, &map)?);

    let spec = vqe::build_ansatz(model, ORDERING, study.ansatz, study.layers)?;
    let mut cfg = VqeConfig::defaults(args.seed);
    cfg.restarts = args.restarts.unwrap_or(10);
    cfg.chi_max = Some(args.chi.unwrap_or(128));
    cfg.gradient = GradientMethod::Adjoint;
    let result = vqe::run_vqe_with_reference(model, &spec, &cfg, &dmrg_res)?;

    let gap = (result.best_energy - dmrg_res.energy).abs();
    let fidelity = result.best_fidelity;
    let verdict = if gap <= 0.030 && fidelity >= 0.99 {
        Verdict::Pass
    } else if gap <= 0.050 && fidelity >= 0.95 {
        Verdict::Fallback
    } else {
        Verdict::Fail
    };
    rows.push(CheckRow::new(
        &format!("VQE energy gap ({} restarts)", cfg.restarts),
        format!("{:.4} eV", gap),
        "<= 0.030 (fallback 0.050)".into(),
        verdict,
    ));
    rows.push(CheckRow::new(
        "VQE fidelity",
        format!("{fidelity:.4}"),
        format!(">= 0.99 (fallback 0.95; published {:.3})", study.vqe_fidelity.unwrap_or(f64::NAN)),
        verdict,
    ));

    let best_state = best_vqe_state(model, &spec, &cfg, &result.best_params)?;
    rows.push(afm_row("AFM alternation (VQE)", &best_state, model, &map)?);
    Ok(rows)
}

fn best_vqe_state(
    model: &ExtendedHubbardModel,
    spec: &vqe::AnsatzSpec,
    cfg: &VqeConfig,
    params: &[f64],
) -> anyhow::Result<MatrixProductState> {
    let chi = cfg.chi_max.expect("reproduce sets chi");
    let start = hubsolve::dmrg::noninteracting_ground_state(model, ORDERING, chi)?.state;
    Ok(vqe::simulate(spec, &start, params, chi, cfg.svd_cutoff)?)
}

fn run_wte2(
    args: &ReproduceArgs,
    model: &ExtendedHubbardModel,
    study: &materials::ReferenceStudy,
) -> anyhow::Result<Vec<CheckRow>> {
    let map = QubitMap::new(model, ORDERING);
    let chi = args.chi.unwrap_or(512);
    let dmrg_res = solve_dmrg(model, Some(chi), args.seed)?;
    let mut rows = vec![CheckRow::gate(
        &format!("DMRG energy (chi {chi})"),
        format!("{:.6}", dmrg_res.energy),
        format!("{:.3} +- 0.005", study.dmrg_energy),
        (dmrg_res.energy - study.dmrg_energy).abs() <= 5e-3,
    )];

    let report = observables::report(&dmrg_res.state, model, &map)?;
    let delta = report.ei_delta.unwrap_or(0.0);
    let target_delta = study.ei_delta_dmrg.unwrap_or(f64::NAN);
    rows.push(CheckRow::gate(
        "excitonic order parameter",
        format!("{delta:.4}"),
        format!("{target_delta:.3} +- 0.05"),
        (delta - target_delta).abs() <= 0.05,
    ));

    let split = observables::default_band_split(model)?;
    let occ = &report.occupations;
    let holes = split.valence.iter().all(|&v| occ.total[v] < occ.reference[v] - 1e-6);
    let electrons = split.conduction.iter().all(|&c| occ.total[c] > 1e-6);
    let deltas: Vec<String> = occ.delta_n_el.iter().map(|d| format!("{d:+.3}")).collect();
    rows.push(CheckRow::gate(
        "holes in valence, electrons in conduction",
        format!("delta_n_el [{}]", deltas.join(", ")),
        "v below filling, c above zero".into(),
        holes && electrons,
    ));

    let spec = vqe::build_ansatz(model, ORDERING, study.ansatz, study.layers)?;
    let mut cfg = VqeConfig::defaults(args.seed);
    cfg.restarts = args.restarts.unwrap_or(10);
    cfg.chi_max = Some(args.chi.unwrap_or(128));
    cfg.gradient = GradientMethod::Adjoint;
    let result = vqe::run_vqe_with_reference(model, &spec, &cfg, &dmrg_res)?;
    let gap = (result.best_energy - dmrg_res.energy).abs();
    // The circuit layout differs from the published one, so this stays a
    // report row per the stated policy.
    rows.push(CheckRow::new(
        &format!("VQE energy gap ({} restarts)", cfg.restarts),
        format!("{gap:.4} eV"),
        "0.1 eV (published 0.068)".into(),
        Verdict::Report,
    ));
    Ok(rows)
}

fn run_srvo3(
    args: &ReproduceArgs,
    model: &ExtendedHubbardModel,
) -> anyhow::Result<Vec<CheckRow>> {
    // The full 3x3 solve runs for days on desk hardware; the gated check is
    // charge ordering on the 2x2 reduction. Published targets for the full
    // lattice stay in the table as report rows.
    let study = materials::reference_study("srvo3").expect("bundled");
    let reduced = model.with_lattice(2, 2)?;
    let map = QubitMap::new(&reduced, ORDERING);
    let chi = args.chi.unwrap_or(128);
    let dmrg_res = solve_dmrg(&reduced, Some(chi), args.seed)?;
    let phi = observables::charge_disproportionation(&dmrg_res.state, &reduced, &map)?;
    let rows = vec![
        CheckRow::gate(
            &format!("charge ordering on 2x2 reduction (chi {chi})"),
            format!("phi {phi:.4}"),
            "> 0".into(),
            phi > 0.0,
        ),
        CheckRow::new(
            "full 3x3 lattice",
            "skipped (long-running)".into(),
            format!(
                "DMRG {:.3} eV, phi {:.2}",
                study.dmrg_energy,
                study.phi_dmrg.unwrap_or(f64::NAN)
            ),
            Verdict::Report,
        ),
    ];
    Ok(rows)
}

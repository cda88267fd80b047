//! Run-directory plumbing: manifest, summary and CSV emission. Every file is
//! deterministic for a fixed (command, seed); nothing here writes timestamps.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hubsolve::dmrg::SweepRecord;
use hubsolve::observables::{BandOccupations, SpinCorrelation};
use hubsolve::vqe::RestartRecord;
use serde::Serialize;

/// The manifest copy dropped into every run directory. `seed` is `None` for
/// commands with no stochastic input.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub model: String,
    pub ansatz: Option<String>,
    pub layers: Option<usize>,
    pub chi: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub gate_fidelity: Option<f64>,
    pub quick: bool,
}

impl RunManifest {
    pub fn new(command: &str, model: &str) -> Self {
        RunManifest {
            command: command.into(),
            model: model.into(),
            ansatz: None,
            layers: None,
            chi: None,
            restarts: None,
            seed: None,
            epsilon: None,
            gate_fidelity: None,
            quick: false,
        }
    }
}

/// One output directory per run; all artifact writes go through it.
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    pub fn create(path: &Path, manifest: &RunManifest) -> Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        let dir = RunDir { path: path.to_path_buf() };
        dir.write_json("manifest.json", manifest)?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let file = self.path.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&file, text).with_context(|| format!("writing {}", file.display()))?;
        Ok(())
    }

    fn csv_writer(&self, name: &str) -> Result<csv::Writer<fs::File>> {
        let file = self.path.join(name);
        let out = fs::File::create(&file).with_context(|| format!("writing {}", file.display()))?;
        Ok(csv::Writer::from_writer(out))
    }

    pub fn write_spin_correlations(&self, rows: &[SpinCorrelation]) -> Result<()> {
        let mut w = self.csv_writer("spin_correlations.csv")?;
        w.write_record(["i", "j", "value"])?;
        for r in rows {
            w.write_record(&[r.i.to_string(), r.j.to_string(), format!("{:.12e}", r.value)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_occupations(&self, occ: &BandOccupations) -> Result<()> {
        let mut w = self.csv_writer("occupations.csv")?;
        w.write_record(["band", "up", "down", "total", "reference", "delta_n_el"])?;
        for (band, spins) in occ.per_spin.iter().enumerate() {
            w.write_record(&[
                band.to_string(),
                format!("{:.12e}", spins[0]),
                format!("{:.12e}", spins[1]),
                format!("{:.12e}", occ.total[band]),
                format!("{:.12e}", occ.reference[band]),
                format!("{:.12e}", occ.delta_n_el[band]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_dmrg_trace(&self, trace: &[SweepRecord]) -> Result<()> {
        let mut w = self.csv_writer("convergence.csv")?;
        w.write_record(["sweep", "energy", "max_bond", "truncation", "noise"])?;
        for r in trace {
            w.write_record(&[
                r.sweep.to_string(),
                format!("{:.12e}", r.energy),
                r.max_bond.to_string(),
                format!("{:.6e}", r.truncation),
                format!("{:.3e}", r.noise),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_vqe_restarts(&self, records: &[RestartRecord]) -> Result<()> {
        let mut w = self.csv_writer("restarts.csv")?;
        w.write_record([
            "restart",
            "seed",
            "energy_phase1",
            "energy",
            "fidelity",
            "iterations",
            "phase1_stop",
            "phase2_stop",
            "error",
        ])?;
        for r in records {
            w.write_record(&[
                r.restart.to_string(),
                r.seed.to_string(),
                format!("{:.12e}", r.energy_after_phase1),
                format!("{:.12e}", r.energy),
                format!("{:.9}", r.fidelity),
                r.iterations.to_string(),
                format!("{:?}", r.phase1_reason),
                r.phase2_reason.map(|s| format!("{s:?}")).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_energy_trace(&self, trace: &[f64]) -> Result<()> {
        let mut w = self.csv_writer("convergence.csv")?;
        w.write_record(["iteration", "energy"])?;
        for (i, e) in trace.iter().enumerate() {
            w.write_record(&[i.to_string(), format!("{:.12e}", e)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Creates the run directory when `--out` was given.
pub fn maybe_run_dir(out: Option<&Path>, manifest: &RunManifest) -> Result<Option<RunDir>> {
    out.map(|p| RunDir::create(p, manifest)).transpose()
}

//! Circuit construction for the two ansatz families.
//!
//! Both are built from two-parameter number-preserving two-qubit gates laid
//! out layer by layer, optionally preceded by one R_z per qubit. The hopping
//! ansatz (NP) follows the lattice: per layer, a Givens-rotation-with-phase
//! gate on every bond for each spin species, then one on every on-site
//! (up, down) pair. The generic ansatz (EP) ignores the lattice and covers
//! adjacent qubit pairs in two brick sub-layers.
//!
//! Gate placement is recorded as abstract slots; [`AnsatzSpec::compile`]
//! lowers them to a nearest-neighbour op stream with explicit swaps, which is
//! what both the simulator and the reverse-mode gradient walk.

use std::str::FromStr;

use ndarray::{array, Array2};
use num_complex::Complex64;

use crate::encode::{QubitMap, QubitOrdering};
use crate::model::{ExtendedHubbardModel, Spin};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum AnsatzKind {
    Np,
    Ep,
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "np" => Ok(AnsatzKind::Np),
            "ep" => Ok(AnsatzKind::Ep),
            other => Err(Error::invalid(format!(
                "unknown ansatz kind {other:?}, expected \"np\" or \"ep\""
            ))),
        }
    }
}

impl std::fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AnsatzKind::Np => "np",
            AnsatzKind::Ep => "ep",
        })
    }
}

/// Parameterized gate families. Two-qubit matrices are indexed with the
/// first (lower-index) qubit as the most significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum GateTemplate {
    /// Givens rotation by theta on {|01>, |10>} plus e^{i phi} on |11>.
    GivensPhase,
    /// fSim form: inner XX+YY rotation by theta, e^{i phi} on |11>.
    FsimPhase,
    /// Single-qubit z rotation, one parameter.
    Rz,
}

impl GateTemplate {
    pub fn n_params(self) -> usize {
        match self {
            GateTemplate::Rz => 1,
            _ => 2,
        }
    }

    pub fn is_two_qubit(self) -> bool {
        !matches!(self, GateTemplate::Rz)
    }

    pub fn matrix(self, p: &[f64]) -> Array2<Complex64> {
        match self {
            GateTemplate::GivensPhase => {
                let (s, c) = p[0].sin_cos();
                let ph = Complex64::from_polar(1.0, p[1]);
                array![
                    [ONE, ZERO, ZERO, ZERO],
                    [ZERO, c.into(), (-s).into(), ZERO],
                    [ZERO, s.into(), c.into(), ZERO],
                    [ZERO, ZERO, ZERO, ph],
                ]
            }
            GateTemplate::FsimPhase => {
                let (s, c) = p[0].sin_cos();
                let ms = Complex64::new(0.0, -s);
                let ph = Complex64::from_polar(1.0, p[1]);
                array![
                    [ONE, ZERO, ZERO, ZERO],
                    [ZERO, c.into(), ms, ZERO],
                    [ZERO, ms, c.into(), ZERO],
                    [ZERO, ZERO, ZERO, ph],
                ]
            }
            GateTemplate::Rz => {
                let half = 0.5 * p[0];
                array![
                    [Complex64::from_polar(1.0, -half), ZERO],
                    [ZERO, Complex64::from_polar(1.0, half)],
                ]
            }
        }
    }

    /// Elementwise derivative of [`Self::matrix`] with respect to parameter
    /// `which`.
    pub fn d_matrix(self, p: &[f64], which: usize) -> Array2<Complex64> {
        debug_assert!(which < self.n_params());
        match (self, which) {
            (GateTemplate::GivensPhase, 0) => {
                let (s, c) = p[0].sin_cos();
                array![
                    [ZERO, ZERO, ZERO, ZERO],
                    [ZERO, (-s).into(), (-c).into(), ZERO],
                    [ZERO, c.into(), (-s).into(), ZERO],
                    [ZERO, ZERO, ZERO, ZERO],
                ]
            }
            (GateTemplate::FsimPhase, 0) => {
                let (s, c) = p[0].sin_cos();
                let mic = Complex64::new(0.0, -c);
                array![
                    [ZERO, ZERO, ZERO, ZERO],
                    [ZERO, (-s).into(), mic, ZERO],
                    [ZERO, mic, (-s).into(), ZERO],
                    [ZERO, ZERO, ZERO, ZERO],
                ]
            }
            (GateTemplate::GivensPhase | GateTemplate::FsimPhase, _) => {
                let iph = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, p[1]);
                let mut m = Array2::zeros((4, 4));
                m[(3, 3)] = iph;
                m
            }
            (GateTemplate::Rz, _) => {
                let half = 0.5 * p[0];
                let i = Complex64::new(0.0, 0.5);
                array![
                    [-i * Complex64::from_polar(1.0, -half), ZERO],
                    [ZERO, i * Complex64::from_polar(1.0, half)],
                ]
            }
        }
    }
}

/// One placed gate. Single-qubit templates store the qubit twice.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct GateSlot {
    pub template: GateTemplate,
    pub qubits: (usize, usize),
    pub param_offset: usize,
    /// 0 for the initial R_z layer, then 1..=layers.
    pub layer: usize,
}

/// A fully placed circuit: what [`build_ansatz`] produces and the simulator,
/// optimizer, and resource estimator consume.
#[derive(Clone, Debug, serde::Serialize)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    pub layers: usize,
    pub include_initial_rz: bool,
    pub ordering: QubitOrdering,
    pub n_qubits: usize,
    pub slots: Vec<GateSlot>,
    pub n_params: usize,
    pub n_two_qubit_gates: usize,
}

/// One nearest-neighbour operation of the lowered circuit. `Swap` entries
/// are routing only and carry no parameters; `inward` records whether the
/// swap belongs to the gather half of its gate's swap sandwich (a hint for
/// canonical-center placement, not a semantic distinction).
#[derive(Clone, Copy, Debug)]
pub enum CompiledOp {
    Swap { a: usize, inward: bool },
    Gate { a: usize, slot: usize },
    Single { q: usize, slot: usize },
}

impl AnsatzSpec {
    /// Lowers the slot list to adjacent-pair operations, bridging distant
    /// pairs with symmetric swap sandwiches.
    pub fn compile(&self) -> Vec<CompiledOp> {
        let mut ops = Vec::new();
        for (k, slot) in self.slots.iter().enumerate() {
            if !slot.template.is_two_qubit() {
                ops.push(CompiledOp::Single { q: slot.qubits.0, slot: k });
                continue;
            }
            let (lo, hi) = slot.qubits;
            for j in (lo + 1..hi).rev() {
                ops.push(CompiledOp::Swap { a: j, inward: true });
            }
            ops.push(CompiledOp::Gate { a: lo, slot: k });
            for j in lo + 1..hi {
                ops.push(CompiledOp::Swap { a: j, inward: false });
            }
        }
        ops
    }

    /// Routing swaps needed per circuit execution. These are an artifact of
    /// the linear qubit layout and are excluded from gate-count reporting.
    pub fn n_routing_swaps(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| s.template.is_two_qubit())
            .map(|s| 2 * (s.qubits.1 - s.qubits.0 - 1))
            .sum()
    }

    pub fn params_of(&self, slot: &GateSlot) -> std::ops::Range<usize> {
        slot.param_offset..slot.param_offset + slot.template.n_params()
    }
}

pub fn build_ansatz(
    model: &ExtendedHubbardModel,
    ordering: QubitOrdering,
    kind: AnsatzKind,
    layers: usize,
) -> Result<AnsatzSpec> {
    build_ansatz_opts(model, ordering, kind, layers, true)
}

pub fn build_ansatz_opts(
    model: &ExtendedHubbardModel,
    ordering: QubitOrdering,
    kind: AnsatzKind,
    layers: usize,
    include_initial_rz: bool,
) -> Result<AnsatzSpec> {
    if layers == 0 {
        return Err(Error::invalid("ansatz needs at least one layer"));
    }
    model.validate()?;
    let map = QubitMap::new(model, ordering);
    let n_q = map.n_qubits();
    let mut slots = Vec::new();
    let mut off = 0;

    if include_initial_rz {
        for q in 0..n_q {
            slots.push(GateSlot {
                template: GateTemplate::Rz,
                qubits: (q, q),
                param_offset: off,
                layer: 0,
            });
            off += 1;
        }
    }

    let push_pair = |slots: &mut Vec<GateSlot>, off: &mut usize, t, a: usize, b: usize, l| {
        slots.push(GateSlot {
            template: t,
            qubits: (a.min(b), a.max(b)),
            param_offset: *off,
            layer: l,
        });
        *off += 2;
    };

    match kind {
        AnsatzKind::Np => {
            if model.bands != 1 {
                return Err(Error::Unsupported(format!(
                    "the hopping ansatz mirrors single-band lattices; {} has {} bands",
                    model.name, model.bands
                )));
            }
            // Bonds grouped by parity so non-overlapping gates are adjacent
            // in the stream: x-bonds by the parity of their left column,
            // y-bonds by the parity of their lower row.
            let mut even = Vec::new();
            let mut odd = Vec::new();
            for (a, b) in model.lattice.bonds() {
                let (xa, ya) = model.lattice.site_coords(a);
                let (xb, yb) = model.lattice.site_coords(b);
                let parity = if ya == yb { xa.min(xb) % 2 } else { ya.min(yb) % 2 };
                if parity == 0 {
                    even.push((a, b));
                } else {
                    odd.push((a, b));
                }
            }
            for layer in 1..=layers {
                for spin in Spin::BOTH {
                    for &(a, b) in even.iter().chain(&odd) {
                        let qa = map.qubit(a, 0, spin);
                        let qb = map.qubit(b, 0, spin);
                        push_pair(&mut slots, &mut off, GateTemplate::GivensPhase, qa, qb, layer);
                    }
                }
                for site in 0..model.n_sites() {
                    let qa = map.qubit(site, 0, Spin::Up);
                    let qb = map.qubit(site, 0, Spin::Down);
                    push_pair(&mut slots, &mut off, GateTemplate::GivensPhase, qa, qb, layer);
                }
            }
        }
        AnsatzKind::Ep => {
            for layer in 1..=layers {
                for start in [0, 1] {
                    let mut q = start;
                    while q + 1 < n_q {
                        push_pair(&mut slots, &mut off, GateTemplate::FsimPhase, q, q + 1, layer);
                        q += 2;
                    }
                }
            }
        }
    }

    let n_two_qubit_gates = slots.iter().filter(|s| s.template.is_two_qubit()).count();
    debug_assert_eq!(off, usize::from(include_initial_rz) * n_q + 2 * n_two_qubit_gates);
    Ok(AnsatzSpec {
        kind,
        layers,
        include_initial_rz,
        ordering,
        n_qubits: n_q,
        slots,
        n_params: off,
        n_two_qubit_gates,
    })
}

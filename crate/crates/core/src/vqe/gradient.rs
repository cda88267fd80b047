//! Circuit execution and gradients.
//!
//! [`Simulator`] owns the compiled op stream plus the prepared initial state
//! and replays the stream forward. Gradients come from either central finite
//! differences (each partial is two full circuit runs, fanned out in
//! parallel) or a reverse-mode sweep: walk the stream backwards un-applying
//! each op from both the evolved ket and a target-dependent bra, and take
//! the derivative gate's sandwiched overlap at its own position. Rolling
//! left/right overlap environments make consecutive local ops cheap.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::encode::MatrixProductOperator;
use crate::tensor::{
    advance_fat, advance_site, advance_site_right, apply_gate_to_theta, apply_mpo, overlap,
    swap_gate, Absorb, MatrixProductState,
};
use crate::vqe::ansatz::{AnsatzSpec, CompiledOp};
use crate::{par, Error, Result};

/// Where parameter derivatives come from.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub enum GradientMethod {
    /// Central differences with step `step * max(1, |theta_k|)` per
    /// coordinate. Robust and embarrassingly parallel, but costs two circuit
    /// runs per parameter.
    CentralDiff { step: f64 },
    /// Reverse-mode sweep; one backward pass covers every parameter. The
    /// method of choice for long optimizations on wide circuits.
    Adjoint,
}

impl Default for GradientMethod {
    fn default() -> Self {
        GradientMethod::CentralDiff { step: 1e-6 }
    }
}

/// Infidelities at or below this are treated as exactly converged; the log
/// loss is floored here and its gradient zeroed.
pub const INFIDELITY_FLOOR: f64 = 1e-16;

pub(crate) struct Simulator<'a> {
    pub spec: &'a AnsatzSpec,
    pub ops: Vec<CompiledOp>,
    pub base: MatrixProductState,
    /// Bond budget for the backward-evolved bra state in adjoint sweeps.
    pub chi_env: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(
        spec: &'a AnsatzSpec,
        initial: &MatrixProductState,
        chi_max: usize,
        rel_cutoff: f64,
    ) -> Result<Self> {
        if initial.n_sites() != spec.n_qubits {
            return Err(Error::invalid(format!(
                "initial state has {} sites, ansatz expects {}",
                initial.n_sites(),
                spec.n_qubits
            )));
        }
        if chi_max == 0 {
            return Err(Error::invalid("chi_max must be positive"));
        }
        let mut base = initial.clone();
        base.chi_max = chi_max;
        base.rel_cutoff = rel_cutoff;
        base.normalize();
        Ok(Simulator { spec, ops: spec.compile(), base, chi_env: chi_max + chi_max / 2 })
    }

    /// Runs the circuit at `params`; the result is normalized.
    pub fn run(&self, params: &[f64]) -> Result<MatrixProductState> {
        if params.len() != self.spec.n_params {
            return Err(Error::invalid(format!(
                "got {} parameters, ansatz has {}",
                params.len(),
                self.spec.n_params
            )));
        }
        let mut st = self.base.clone();
        let sw = swap_gate();
        for &op in &self.ops {
            self.apply_op(&mut st, op, params, false, &sw)?;
        }
        st.normalize();
        Ok(st)
    }

    /// Applies one op (or its adjoint), returning the touched site span,
    /// which includes any canonical-center walk.
    fn apply_op(
        &self,
        st: &mut MatrixProductState,
        op: CompiledOp,
        params: &[f64],
        reverse: bool,
        sw: &Array2<Complex64>,
    ) -> Result<(usize, usize)> {
        match op {
            CompiledOp::Single { q, slot } => {
                let s = &self.spec.slots[slot];
                let m = s.template.matrix(&params[self.spec.params_of(s)]);
                if reverse {
                    st.apply_single_qubit(q, dagger(&m).view());
                } else {
                    st.apply_single_qubit(q, m.view());
                }
                Ok((q, q))
            }
            CompiledOp::Gate { a, slot } => {
                let s = &self.spec.slots[slot];
                let m = s.template.matrix(&params[self.spec.params_of(s)]);
                if reverse {
                    two_site(st, a, dagger(&m).view(), Absorb::Left)
                } else {
                    two_site(st, a, m.view(), Absorb::Right)
                }
            }
            CompiledOp::Swap { a, inward } => {
                // Absorb toward the direction of travel so the center is in
                // place for the next swap of the sandwich.
                let left = inward ^ reverse;
                two_site(st, a, sw.view(), if left { Absorb::Left } else { Absorb::Right })
            }
        }
    }
}

fn dagger(m: &Array2<Complex64>) -> Array2<Complex64> {
    crate::linalg::adjoint(m)
}

fn two_site(
    st: &mut MatrixProductState,
    a: usize,
    gate: ArrayView2<Complex64>,
    absorb: Absorb,
) -> Result<(usize, usize)> {
    let span = match st.center() {
        None => (0, st.n_sites() - 1),
        Some(c) => (c.min(a), c.max(a + 1)),
    };
    st.apply_two_adjacent(a, gate, absorb)?;
    Ok(span)
}

/// Central-difference value and gradient of an arbitrary scalar function.
pub(crate) fn fd_value_grad<F>(f: F, x: &[f64], step: f64) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let value = f(x)?;
    let partials = par::map_indexed(x.len(), |k| -> Result<f64> {
        let h = step * x[k].abs().max(1.0);
        let mut xp = x.to_vec();
        xp[k] += h;
        let mut xm = x.to_vec();
        xm[k] -= h;
        Ok((f(&xp)? - f(&xm)?) / (2.0 * h))
    });
    let grad = partials.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok((value, grad))
}

pub(crate) enum AdjointTarget<'t> {
    /// d/d theta of <psi|H|psi>.
    Energy(&'t MatrixProductOperator),
    /// d/d theta of log10(1 - |<ref|psi>|^2); the reference must be
    /// normalized.
    LogInfidelity(&'t MatrixProductState),
}

/// Reverse-mode value and gradient. Exact when the bond budget never binds;
/// under truncation it differentiates the ideal circuit, which is the usual
/// and well-behaved approximation.
pub(crate) fn adjoint_value_grad(
    sim: &Simulator,
    target: AdjointTarget,
    params: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let psi = sim.run(params)?;
    let n = psi.n_sites();
    let mut grad = vec![0.0; params.len()];

    // chain scales each sandwiched derivative into the scalar objective:
    // g_k = Re(chain * <B_k| dU_k |P_k>).
    let (value, mut b, chain) = match target {
        AdjointTarget::Energy(mpo) => {
            let e = psi.expectation(mpo).re;
            let b = apply_mpo(&psi, mpo, sim.chi_env, sim.base.rel_cutoff)?;
            (e, b, Complex64::new(2.0, 0.0))
        }
        AdjointTarget::LogInfidelity(reference) => {
            let z = overlap(reference, &psi);
            let infid = (1.0 - z.norm_sqr()).max(INFIDELITY_FLOOR);
            let chain = if infid <= INFIDELITY_FLOOR {
                Complex64::new(0.0, 0.0)
            } else {
                -z.conj() * (2.0 / (infid * std::f64::consts::LN_10))
            };
            let mut b = reference.clone();
            b.chi_max = sim.chi_env;
            b.rel_cutoff = sim.base.rel_cutoff;
            (infid.log10(), b, chain)
        }
    };

    let mut p = psi;
    let mut envs = OverlapEnvs::new(n);
    let sw = swap_gate();
    for &op in sim.ops.iter().rev() {
        // Un-apply from the ket first so the derivative sees the state just
        // before this op; the bra still includes everything after it.
        let span = sim.apply_op(&mut p, op, params, true, &sw)?;
        envs.invalidate(span);
        match op {
            CompiledOp::Gate { a, slot } => {
                let s = &sim.spec.slots[slot];
                let ps = &params[sim.spec.params_of(s)];
                let tk = p.merge_pair(a);
                let tb = b.merge_pair(a);
                envs.ensure_left(a, &p, &b);
                envs.ensure_right(a + 2, &p, &b);
                for j in 0..s.template.n_params() {
                    let d = s.template.d_matrix(ps, j);
                    let gk = apply_gate_to_theta(&tk, d.view());
                    let env2 = advance_fat(envs.left(a), &gk, &tb);
                    let x = frob_pair(&env2, envs.right(a + 2));
                    grad[s.param_offset + j] = (chain * x).re;
                }
            }
            CompiledOp::Single { q, slot } => {
                let s = &sim.spec.slots[slot];
                let d = s.template.d_matrix(&params[sim.spec.params_of(s)], 0);
                envs.ensure_left(q, &p, &b);
                envs.ensure_right(q + 1, &p, &b);
                let env2 =
                    advance_site(envs.left(q), &p.tensors()[q], &b.tensors()[q], Some(&d));
                let x = frob_pair(&env2, envs.right(q + 1));
                grad[s.param_offset] = (chain * x).re;
            }
            CompiledOp::Swap { .. } => {}
        }
        let span = sim.apply_op(&mut b, op, params, true, &sw)?;
        envs.invalidate(span);
    }
    Ok((value, grad))
}

fn frob_pair(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Cached partial overlaps of a (ket, bra) pair, keyed by cut position:
/// `l[i]` contracts sites < i, `r[i]` sites >= i, both as
/// (ket bond, bra bond) matrices. Mutating either state drops the entries
/// that cover the touched sites; lookups rebuild lazily from the nearest
/// survivor.
struct OverlapEnvs {
    l: Vec<Option<Array2<Complex64>>>,
    r: Vec<Option<Array2<Complex64>>>,
}

impl OverlapEnvs {
    fn new(n: usize) -> Self {
        let mut l = vec![None; n + 1];
        let mut r = vec![None; n + 1];
        l[0] = Some(Array2::ones((1, 1)));
        r[n] = Some(Array2::ones((1, 1)));
        OverlapEnvs { l, r }
    }

    fn invalidate(&mut self, (lo, hi): (usize, usize)) {
        for slot in self.l[lo + 1..].iter_mut() {
            *slot = None;
        }
        for slot in self.r[..=hi].iter_mut() {
            *slot = None;
        }
    }

    fn ensure_left(&mut self, i: usize, ket: &MatrixProductState, bra: &MatrixProductState) {
        let mut j = i;
        while self.l[j].is_none() {
            j -= 1;
        }
        while j < i {
            let next = advance_site(
                self.l[j].as_ref().expect("anchor"),
                &ket.tensors()[j],
                &bra.tensors()[j],
                None,
            );
            self.l[j + 1] = Some(next);
            j += 1;
        }
    }

    fn ensure_right(&mut self, i: usize, ket: &MatrixProductState, bra: &MatrixProductState) {
        let mut j = i;
        while self.r[j].is_none() {
            j += 1;
        }
        while j > i {
            let prev = advance_site_right(
                self.r[j].as_ref().expect("anchor"),
                &ket.tensors()[j - 1],
                &bra.tensors()[j - 1],
            );
            self.r[j - 1] = Some(prev);
            j -= 1;
        }
    }

    fn left(&self, i: usize) -> &Array2<Complex64> {
        self.l[i].as_ref().expect("ensured")
    }

    fn right(&self, i: usize) -> &Array2<Complex64> {
        self.r[i].as_ref().expect("ensured")
    }
}

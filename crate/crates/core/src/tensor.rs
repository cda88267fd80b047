//! Matrix product states on qubit chains: canonicalization, one- and
//! two-qubit gate application with swap routing, overlaps, Pauli and MPO
//! expectation values, and dense-vector conversion for small registers.
//!
//! Tensor index order is `(left bond, physical, right bond)`; qubit 0 is the
//! least significant bit of dense basis indices. Truncations never
//! renormalize the state; the squared weight they discard accumulates in
//! `discarded_weight`.

use ndarray::{s, Array1, Array2, Array3, Array4, ArrayView2};
use num_complex::Complex64;

use crate::encode::{MatrixProductOperator, Pauli};
use crate::linalg;
use crate::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default bond-dimension cap giving numerically exact simulation for small
/// registers: `2^(n/2)`, capped at 512.
pub fn max_chi_default(n_qubits: usize) -> usize {
    let half = n_qubits / 2;
    if half >= 9 {
        512
    } else {
        1 << half
    }
}

pub fn swap_gate() -> Array2<Complex64> {
    let mut m = Array2::zeros((4, 4));
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// Which side absorbs the singular values after a two-site split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Absorb {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct MatrixProductState {
    tensors: Vec<Array3<Complex64>>,
    /// Orthogonality center when known: tensors left of it are
    /// left-canonical, tensors right of it right-canonical.
    center: Option<usize>,
    pub chi_max: usize,
    pub rel_cutoff: f64,
    discarded_weight: f64,
    swap_count: u64,
}

impl MatrixProductState {
    /// Computational basis product state with the given occupations.
    pub fn product_state(occupations: &[bool], chi_max: usize, rel_cutoff: f64) -> Self {
        let tensors = occupations
            .iter()
            .map(|&occ| {
                let mut t = Array3::zeros((1, 2, 1));
                t[(0, usize::from(occ), 0)] = ONE;
                t
            })
            .collect();
        MatrixProductState {
            tensors,
            center: Some(0),
            chi_max,
            rel_cutoff,
            discarded_weight: 0.0,
            swap_count: 0,
        }
    }

    pub fn from_tensors(tensors: Vec<Array3<Complex64>>, chi_max: usize, rel_cutoff: f64) -> Self {
        MatrixProductState {
            tensors,
            center: None,
            chi_max,
            rel_cutoff,
            discarded_weight: 0.0,
            swap_count: 0,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[Array3<Complex64>] {
        &self.tensors
    }

    pub(crate) fn tensor_mut(&mut self, i: usize) -> &mut Array3<Complex64> {
        &mut self.tensors[i]
    }

    pub(crate) fn set_tensor(&mut self, i: usize, t: Array3<Complex64>) {
        self.tensors[i] = t;
    }

    pub(crate) fn set_center(&mut self, c: Option<usize>) {
        self.center = c;
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    /// Internal bond dimensions, length `n_sites - 1`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors.iter().take(self.n_sites() - 1).map(|t| t.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub(crate) fn add_discarded_weight(&mut self, w: f64) {
        self.discarded_weight += w;
    }

    pub fn swap_count(&self) -> u64 {
        self.swap_count
    }

    pub fn norm(&self) -> f64 {
        overlap(self, self).re.max(0.0).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let f = Complex64::new(1.0 / n, 0.0);
            if let Some(c) = self.center {
                self.tensors[c].mapv_inplace(|v| v * f);
            } else {
                self.tensors[0].mapv_inplace(|v| v * f);
            }
        }
    }

    /// Moves one canonical step right: QR-split site `i`, push R into `i+1`.
    fn shift_right(&mut self, i: usize) -> Result<()> {
        let a = &self.tensors[i];
        let (l, r) = (a.shape()[0], a.shape()[2]);
        let m = a.to_shape((l * 2, r)).expect("contiguous").to_owned();
        let (q, rr) = linalg::qr_thin(&m)?;
        let k = q.shape()[1];
        self.tensors[i] = q.to_shape((l, 2, k)).expect("size").to_owned();
        let b = &self.tensors[i + 1];
        let (bl, br) = (b.shape()[0], b.shape()[2]);
        let bm = b.to_shape((bl, 2 * br)).expect("contiguous").to_owned();
        let merged = rr.dot(&bm);
        self.tensors[i + 1] = merged.to_shape((k, 2, br)).expect("size").to_owned();
        Ok(())
    }

    /// Moves one canonical step left: LQ-split site `i`, push L into `i-1`.
    fn shift_left(&mut self, i: usize) -> Result<()> {
        let a = &self.tensors[i];
        let (l, r) = (a.shape()[0], a.shape()[2]);
        let m = a.to_shape((l, 2 * r)).expect("contiguous").to_owned();
        let (ll, q) = linalg::lq_thin(&m)?;
        let k = q.shape()[0];
        self.tensors[i] = q.to_shape((k, 2, r)).expect("size").to_owned();
        let b = &self.tensors[i - 1];
        let (bl, br) = (b.shape()[0], b.shape()[2]);
        let bm = b.to_shape((bl * 2, br)).expect("contiguous").to_owned();
        let merged = bm.dot(&ll);
        self.tensors[i - 1] = merged.to_shape((bl, 2, k)).expect("size").to_owned();
        Ok(())
    }

    /// Brings the orthogonality center to `to`, establishing canonical form
    /// if it is unknown.
    pub fn move_center(&mut self, to: usize) -> Result<()> {
        debug_assert!(to < self.n_sites());
        let from = match self.center {
            Some(c) => c,
            None => {
                for i in (1..self.n_sites()).rev() {
                    self.shift_left(i)?;
                }
                0
            }
        };
        if from < to {
            for i in from..to {
                self.shift_right(i)?;
            }
        } else {
            for i in (to + 1..=from).rev() {
                self.shift_left(i)?;
            }
        }
        self.center = Some(to);
        Ok(())
    }

    /// Applies a unitary 2x2 gate on one qubit. Canonical structure is
    /// preserved for unitary gates, so the center is untouched.
    pub fn apply_single_qubit(&mut self, q: usize, gate: ArrayView2<Complex64>) {
        let a = &self.tensors[q];
        let (l, r) = (a.shape()[0], a.shape()[2]);
        let mut out = Array3::zeros((l, 2, r));
        for so in 0..2 {
            for si in 0..2 {
                let g = gate[(so, si)];
                if g != ZERO {
                    let src = a.slice(s![.., si, ..]);
                    out.slice_mut(s![.., so, ..]).scaled_add(g, &src);
                }
            }
        }
        self.tensors[q] = out;
    }

    /// Applies a 4x4 gate on adjacent qubits `(q, q+1)`; the matrix is
    /// indexed with the left qubit as the most significant bit of the pair.
    pub fn apply_two_adjacent(
        &mut self,
        q: usize,
        gate: ArrayView2<Complex64>,
        absorb: Absorb,
    ) -> Result<()> {
        self.move_center(q)?;
        let theta = self.merge_pair(q);
        let (l, r) = (theta.shape()[0], theta.shape()[3]);
        let gated = apply_gate_to_theta(&theta, gate);
        let m = gated.to_shape((l * 2, 2 * r)).expect("contiguous").to_owned();
        let svd = linalg::svd_truncated(&m, self.chi_max, self.rel_cutoff)?;
        self.discarded_weight += svd.discarded_weight;
        self.split_pair(q, svd, l, r, absorb);
        Ok(())
    }

    /// Contracts sites `q, q+1` into `theta[l, s1, s2, r]`.
    pub(crate) fn merge_pair(&self, q: usize) -> Array4<Complex64> {
        let a = &self.tensors[q];
        let b = &self.tensors[q + 1];
        let (l, k) = (a.shape()[0], a.shape()[2]);
        let (_, r) = (b.shape()[0], b.shape()[2]);
        let am = a.to_shape((l * 2, k)).expect("contiguous").to_owned();
        let bm = b.to_shape((k, 2 * r)).expect("contiguous").to_owned();
        am.dot(&bm).to_shape((l, 2, 2, r)).expect("size").to_owned()
    }

    /// Splits a factorized theta back into sites `q, q+1`.
    pub(crate) fn split_pair(
        &mut self,
        q: usize,
        svd: linalg::TruncatedSvd,
        l: usize,
        r: usize,
        absorb: Absorb,
    ) {
        let k = svd.rank;
        let mut u = svd.u;
        let mut vt = svd.vt;
        match absorb {
            Absorb::Right => {
                for j in 0..k {
                    let sj = Complex64::new(svd.s[j], 0.0);
                    vt.row_mut(j).mapv_inplace(|v| v * sj);
                }
                self.center = Some(q + 1);
            }
            Absorb::Left => {
                for j in 0..k {
                    let sj = Complex64::new(svd.s[j], 0.0);
                    u.column_mut(j).mapv_inplace(|v| v * sj);
                }
                self.center = Some(q);
            }
        }
        self.tensors[q] = u.to_shape((l, 2, k)).expect("size").to_owned();
        self.tensors[q + 1] = vt.to_shape((k, 2, r)).expect("size").to_owned();
    }

    /// Applies a 4x4 gate on an arbitrary qubit pair, routing through
    /// nearest-neighbour swaps when the pair is not adjacent.
    pub fn apply_two_qubit(
        &mut self,
        a: usize,
        b: usize,
        gate: ArrayView2<Complex64>,
    ) -> Result<()> {
        if a == b || a >= self.n_sites() || b >= self.n_sites() {
            return Err(Error::invalid(format!("bad qubit pair ({a}, {b})")));
        }
        let (lo, hi, gate) = if a < b {
            (a, b, gate.to_owned())
        } else {
            let sw = swap_gate();
            (b, a, sw.dot(&gate).dot(&sw))
        };
        if hi == lo + 1 {
            return self.apply_two_adjacent(lo, gate.view(), Absorb::Right);
        }
        let sw = swap_gate();
        for j in (lo + 1..hi).rev() {
            self.apply_two_adjacent(j, sw.view(), Absorb::Left)?;
            self.swap_count += 1;
        }
        self.apply_two_adjacent(lo, gate.view(), Absorb::Right)?;
        for j in lo + 1..hi {
            self.apply_two_adjacent(j, sw.view(), Absorb::Right)?;
            self.swap_count += 1;
        }
        Ok(())
    }

    /// `<self | op | self>`, not normalized.
    pub fn expectation(&self, op: &MatrixProductOperator) -> Complex64 {
        debug_assert_eq!(self.n_sites(), op.n_sites());
        let mut env = Array3::<Complex64>::zeros((1, 1, 1));
        env[(0, 0, 0)] = ONE;
        for i in 0..self.n_sites() {
            env = contract_env_left(&env, &self.tensors[i], &self.tensors[i], op.tensor(i));
        }
        env[(0, 0, 0)]
    }

    /// Expectation of a sparse Pauli string, not normalized.
    pub fn expect_pauli(&self, ops: &[(usize, Pauli)]) -> Complex64 {
        let mats: Vec<(usize, Array2<Complex64>)> =
            ops.iter().map(|&(q, p)| (q, p.matrix())).collect();
        sandwich(self, self, &mats, None)
    }

    /// `<n_q>` for every qubit in a single pass, normalized by `<psi|psi>`.
    pub fn site_densities(&self) -> Vec<f64> {
        let n = self.n_sites();
        let mut lefts: Vec<Array2<Complex64>> = Vec::with_capacity(n + 1);
        lefts.push(Array2::ones((1, 1)));
        for i in 0..n {
            let next = advance_site(&lefts[i], &self.tensors[i], &self.tensors[i], None);
            lefts.push(next);
        }
        let norm_sq = lefts[n][(0, 0)].re;
        let n_op = ndarray::arr2(&[
            [ZERO, ZERO],
            [ZERO, ONE],
        ]);
        let mut out = vec![0.0; n];
        let mut right = Array2::<Complex64>::ones((1, 1));
        for i in (0..n).rev() {
            let with_op = advance_site(&lefts[i], &self.tensors[i], &self.tensors[i], Some(&n_op));
            let numer: Complex64 = with_op
                .iter()
                .zip(right.iter())
                .map(|(x, y)| x * y)
                .sum();
            out[i] = numer.re / norm_sq;
            right = advance_site_right(&right, &self.tensors[i], &self.tensors[i]);
        }
        out
    }

    /// Dense state vector, qubit 0 least significant. Small registers only.
    pub fn to_dense(&self) -> Result<Array1<Complex64>> {
        let n = self.n_sites();
        if n > 14 {
            return Err(Error::Unsupported(format!(
                "dense state limited to 14 qubits, got {n}"
            )));
        }
        let mut v = Array2::<Complex64>::ones((1, 1));
        for t in &self.tensors {
            let (l, r) = (t.shape()[0], t.shape()[2]);
            let p = v.shape()[0];
            let tm = t.to_shape((l, 2 * r)).expect("contiguous").to_owned();
            v = v.dot(&tm).to_shape((p * 2, r)).expect("size").to_owned();
        }
        let flat = v.into_shape_with_order(1 << n).expect("size");
        // Contraction order makes qubit 0 most significant; reverse bits.
        let mut out = Array1::zeros(1 << n);
        let shift = usize::BITS - n as u32;
        for (i, &amp) in flat.iter().enumerate() {
            out[i.reverse_bits() >> shift] = amp;
        }
        Ok(out)
    }

    /// Builds an MPS from a dense state vector by successive SVDs, truncating
    /// at the given limits.
    pub fn from_dense(
        vec: &Array1<Complex64>,
        chi_max: usize,
        rel_cutoff: f64,
    ) -> Result<Self> {
        let dim = vec.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid("state length must be a power of two, at least 2"));
        }
        let n = dim.trailing_zeros() as usize;
        if n > 14 {
            return Err(Error::Unsupported(format!(
                "dense state limited to 14 qubits, got {n}"
            )));
        }
        let shift = usize::BITS - n as u32;
        let mut remapped = Array1::<Complex64>::zeros(dim);
        for (i, &amp) in vec.iter().enumerate() {
            remapped[i.reverse_bits() >> shift] = amp;
        }
        let mut discarded = 0.0;
        let mut tensors = Vec::with_capacity(n);
        let mut rest = remapped.into_shape_with_order((1, dim)).expect("size");
        for _site in 0..n - 1 {
            let (chi_l, cols) = (rest.shape()[0], rest.shape()[1]);
            let m = rest.to_shape((chi_l * 2, cols / 2)).expect("size").to_owned();
            let svd = linalg::svd_truncated(&m, chi_max, rel_cutoff)?;
            discarded += svd.discarded_weight;
            let k = svd.rank;
            tensors.push(svd.u.to_shape((chi_l, 2, k)).expect("size").to_owned());
            let mut vt = svd.vt;
            for j in 0..k {
                let sj = Complex64::new(svd.s[j], 0.0);
                vt.row_mut(j).mapv_inplace(|v| v * sj);
            }
            rest = vt;
        }
        let chi_l = rest.shape()[0];
        tensors.push(rest.to_shape((chi_l, 2, 1)).expect("size").to_owned());
        let mut mps = MatrixProductState::from_tensors(tensors, chi_max, rel_cutoff);
        mps.center = Some(n - 1);
        mps.discarded_weight = discarded;
        Ok(mps)
    }
}

/// Applies a 4x4 gate to `theta[l, s1, s2, r]`, left qubit most significant.
pub(crate) fn apply_gate_to_theta(
    theta: &Array4<Complex64>,
    gate: ArrayView2<Complex64>,
) -> Array4<Complex64> {
    let (l, r) = (theta.shape()[0], theta.shape()[3]);
    let perm = theta.view().permuted_axes([1, 2, 0, 3]);
    let m = perm
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((4, l * r))
        .expect("size");
    let out = gate.dot(&m);
    let back = out.into_shape_with_order((2, 2, l, r)).expect("size");
    back.permuted_axes([2, 0, 1, 3]).as_standard_layout().into_owned()
}

/// `<bra|ket>` with optional single-site operator insertions and one optional
/// two-site operator. `ops` must be sorted by qubit with at most one entry
/// per qubit, none of which may fall inside the two-site window.
pub(crate) fn sandwich(
    bra: &MatrixProductState,
    ket: &MatrixProductState,
    ops: &[(usize, Array2<Complex64>)],
    two_site: Option<(usize, &Array2<Complex64>)>,
) -> Complex64 {
    let n = ket.n_sites();
    debug_assert_eq!(bra.n_sites(), n);
    let mut env = Array2::<Complex64>::ones((1, 1));
    let mut site = 0;
    while site < n {
        if let Some((q, op4)) = two_site {
            if q == site {
                let tk = ket.merge_pair(q);
                let tb = bra.merge_pair(q);
                let gk = apply_gate_to_theta(&tk, op4.view());
                env = advance_fat(&env, &gk, &tb);
                site += 2;
                continue;
            }
        }
        let op = ops.iter().find(|&&(q, _)| q == site).map(|(_, m)| m);
        env = advance_site(&env, &ket.tensors[site], &bra.tensors[site], op);
        site += 1;
    }
    env[(0, 0)]
}

/// One zipper step: `env'[a', b'] = sum env[a,b] K[a,s,a'] Op[t,s] conj(B)[b,t,b']`.
pub(crate) fn advance_site(
    env: &Array2<Complex64>,
    ket: &Array3<Complex64>,
    bra: &Array3<Complex64>,
    op: Option<&Array2<Complex64>>,
) -> Array2<Complex64> {
    let (ka, kr) = (ket.shape()[0], ket.shape()[2]);
    let (ba, br) = (bra.shape()[0], bra.shape()[2]);
    let km = ket.to_shape((ka, 2 * kr)).expect("contiguous");
    // t1[b, (s, a')] = sum_a env[a, b]^T K[a, (s, a')]
    let t1 = env.t().dot(&km);
    // Apply the physical operator on the ket index if present.
    let t1 = match op {
        None => t1,
        Some(m) => {
            let t3 = t1.into_shape_with_order((ba, 2, kr)).expect("size");
            let mut out = Array3::<Complex64>::zeros((ba, 2, kr));
            for to in 0..2 {
                for from in 0..2 {
                    let g = m[(to, from)];
                    if g != ZERO {
                        let src = t3.slice(s![.., from, ..]);
                        out.slice_mut(s![.., to, ..]).scaled_add(g, &src);
                    }
                }
            }
            out.into_shape_with_order((ba, 2 * kr)).expect("size")
        }
    };
    // env'[a', b'] = sum_{b, s} t1[(b, s), a'] conj(B)[(b, s), b']
    let t2 = t1.into_shape_with_order((ba * 2, kr)).expect("size");
    let bm = bra.to_shape((ba * 2, br)).expect("contiguous");
    let bc = bm.mapv(|v| v.conj());
    t2.t().dot(&bc)
}

/// Mirror of [`advance_site`] growing from the right edge:
/// `env'[a, b] = sum_{s, a', b'} K[a, s, a'] conj(B)[b, s, b'] env[a', b']`.
pub(crate) fn advance_site_right(
    env: &Array2<Complex64>,
    ket: &Array3<Complex64>,
    bra: &Array3<Complex64>,
) -> Array2<Complex64> {
    let (ka, kr) = (ket.shape()[0], ket.shape()[2]);
    let (ba, br) = (bra.shape()[0], bra.shape()[2]);
    let km = ket.to_shape((ka * 2, kr)).expect("contiguous");
    let t1 = km.dot(env); // (a*s, b')
    let t1 = t1.into_shape_with_order((ka, 2 * br)).expect("size");
    let bm = bra.to_shape((ba, 2 * br)).expect("contiguous");
    let bc = bm.mapv(|v| v.conj());
    t1.dot(&bc.t()) // (a, b)
}

/// Zipper step over a merged two-site block of physical dimension 4.
pub(crate) fn advance_fat(
    env: &Array2<Complex64>,
    ket_theta: &Array4<Complex64>,
    bra_theta: &Array4<Complex64>,
) -> Array2<Complex64> {
    let (ka, kr) = (ket_theta.shape()[0], ket_theta.shape()[3]);
    let (ba, br) = (bra_theta.shape()[0], bra_theta.shape()[3]);
    let km = ket_theta.to_shape((ka, 4 * kr)).expect("contiguous");
    let t1 = env.t().dot(&km);
    let t2 = t1.into_shape_with_order((ba * 4, kr)).expect("size");
    let bm = bra_theta.to_shape((ba * 4, br)).expect("contiguous");
    let bc = bm.mapv(|v| v.conj());
    t2.t().dot(&bc)
}

/// `<bra|ket>`.
pub fn overlap(bra: &MatrixProductState, ket: &MatrixProductState) -> Complex64 {
    sandwich(bra, ket, &[], None)
}

/// `<bra| Op(q, q+1) |ket>` with a 4x4 operator inserted on an adjacent pair.
pub(crate) fn overlap_with_two_site_op(
    bra: &MatrixProductState,
    ket: &MatrixProductState,
    q: usize,
    op: &Array2<Complex64>,
) -> Complex64 {
    sandwich(bra, ket, &[], Some((q, op)))
}

/// Left-environment update for `<bra| W |ket>` sandwiches:
/// `env'[a', w', b'] = sum env[a, w, b] K[a, si, a'] W[w, so, si, w'] conj(B)[b, so, b']`.
pub(crate) fn contract_env_left(
    env: &Array3<Complex64>,
    ket: &Array3<Complex64>,
    bra: &Array3<Complex64>,
    w: &Array4<Complex64>,
) -> Array3<Complex64> {
    let (ea, ew, eb) = (env.shape()[0], env.shape()[1], env.shape()[2]);
    let (ka, kr) = (ket.shape()[0], ket.shape()[2]);
    let (ba, br) = (bra.shape()[0], bra.shape()[2]);
    let (wl, wr) = (w.shape()[0], w.shape()[3]);
    debug_assert_eq!((ea, ew, eb), (ka, wl, ba));
    // t1[(w, b), (si, a')] = sum_a env[a, (w, b)] K[a, (si, a')]
    let em = env.to_shape((ea, ew * eb)).expect("contiguous");
    let km = ket.to_shape((ka, 2 * kr)).expect("contiguous");
    let t1 = em.t().dot(&km); // (w*b, 2*a')
    // t2[(a', b), (so, w')] = sum_{w, si} t1[w, b, si, a'] W[(w, si) -> (so, w')]
    let t1 = t1.into_shape_with_order((ew, eb, 2, kr)).expect("size");
    let t1 = t1.permuted_axes([3, 1, 0, 2]); // (a', b, w, si)
    let t1 = t1
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((kr * eb, ew * 2))
        .expect("size");
    let wm = w.view().permuted_axes([0, 2, 1, 3]); // (w, si, so, w')
    let wm = wm
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((wl * 2, 2 * wr))
        .expect("size");
    let t2 = t1.dot(&wm); // (a'*b, so*w')
    // env'[a', w', b'] = sum_{b, so} t2[a', b, so, w'] conj(B)[(b, so), b']
    let t2 = t2.into_shape_with_order((kr, eb, 2, wr)).expect("size");
    let t2 = t2.permuted_axes([0, 3, 1, 2]); // (a', w', b, so)
    let t2 = t2
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((kr * wr, eb * 2))
        .expect("size");
    let bm = bra.to_shape((ba * 2, br)).expect("contiguous");
    let bc = bm.mapv(|v| v.conj());
    let out = t2.dot(&bc); // (a'*w', b')
    out.into_shape_with_order((kr, wr, br)).expect("size")
}

/// Right-environment mirror of [`contract_env_left`]:
/// `env'[a, w, b] = sum env[a', w', b'] K[a, si, a'] W[w, so, si, w'] conj(B)[b, so, b']`.
pub(crate) fn contract_env_right(
    env: &Array3<Complex64>,
    ket: &Array3<Complex64>,
    bra: &Array3<Complex64>,
    w: &Array4<Complex64>,
) -> Array3<Complex64> {
    let (ea, ew, eb) = (env.shape()[0], env.shape()[1], env.shape()[2]);
    let (ka, kr) = (ket.shape()[0], ket.shape()[2]);
    let (ba, br) = (bra.shape()[0], bra.shape()[2]);
    let (wl, wr) = (w.shape()[0], w.shape()[3]);
    debug_assert_eq!((ea, ew, eb), (kr, wr, br));
    // t1[(a, si), (w', b')] = sum_{a'} K[(a, si), a'] env[a', (w', b')]
    let km = ket.to_shape((ka * 2, kr)).expect("contiguous");
    let em = env.to_shape((ea, ew * eb)).expect("contiguous");
    let t1 = km.dot(&em); // (a*2, w'*b')
    // t2[(a, b'), (w, so)] = sum_{si, w'} t1[a, si, w', b'] W[(w, si) <- ...]
    let t1 = t1.into_shape_with_order((ka, 2, ew, eb)).expect("size");
    let t1 = t1.permuted_axes([0, 3, 2, 1]); // (a, b', w', si)
    let t1 = t1
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((ka * eb, ew * 2))
        .expect("size");
    let wm = w.view().permuted_axes([3, 2, 0, 1]); // (w', si, w, so)
    let wm = wm
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((wr * 2, wl * 2))
        .expect("size");
    let t2 = t1.dot(&wm); // (a*b', w*so)
    // env'[a, w, b] = sum_{b', so} t2[a, b', w, so] conj(B)[(b, so), b']
    let t2 = t2.into_shape_with_order((ka, eb, wl, 2)).expect("size");
    let t2 = t2.permuted_axes([0, 2, 3, 1]); // (a, w, so, b')
    let t2 = t2
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((ka * wl, 2 * eb))
        .expect("size");
    let bm = bra.to_shape((ba * 2, br)).expect("contiguous");
    let bc = bm.mapv(|v| v.conj());
    // want sum over (so, b'): t2[(a,w), (so, b')] conj(B)[(b, so), b']
    // rearrange conj(B) to (so*b', b)
    let bc3 = bc.into_shape_with_order((ba, 2, br)).expect("size");
    let bc3 = bc3.permuted_axes([1, 2, 0]); // (so, b', b)
    let bcm = bc3
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((2 * br, ba))
        .expect("size");
    let out = t2.dot(&bcm); // (a*w, b)
    out.into_shape_with_order((ka, wl, ba)).expect("size")
}

/// Applies an MPO to an MPS with on-the-fly zip-up compression, followed by a
/// second truncation sweep back to the left.
pub fn apply_mpo(
    state: &MatrixProductState,
    op: &MatrixProductOperator,
    chi_max: usize,
    rel_cutoff: f64,
) -> Result<MatrixProductState> {
    let n = state.n_sites();
    debug_assert_eq!(op.n_sites(), n);
    // carry[k, w, l]: new left bond, operator bond, old state bond
    let mut carry = Array3::<Complex64>::ones((1, 1, 1));
    let mut tensors: Vec<Array3<Complex64>> = Vec::with_capacity(n);
    let mut discarded = 0.0;
    for i in 0..n {
        let a = &state.tensors()[i];
        let w = op.tensor(i);
        let (al, ar) = (a.shape()[0], a.shape()[2]);
        let (wl, wr) = (w.shape()[0], w.shape()[3]);
        let k = carry.shape()[0];
        // tmp[(k, so), (w', r)] = sum_{w, l, si} carry[k, w, l] W[w, so, si, w'] A[l, si, r]
        let cm = carry.to_shape((k, wl * al)).expect("contiguous").to_owned();
        let wv = w.view().permuted_axes([0, 2, 1, 3]); // (w, si, so, w')
        let wm = wv
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((wl, 2, 2 * wr))
            .expect("size");
        // first contract carry with A over l: t1[k, w, si, r]
        let cm3 = cm.into_shape_with_order((k * wl, al)).expect("size");
        let am = a.to_shape((al, 2 * ar)).expect("contiguous");
        let t1 = cm3.dot(&am); // (k*w, si*r)
        let t1 = t1.into_shape_with_order((k, wl, 2, ar)).expect("size");
        // then contract over (w, si) with W: t2[k, r, so, w']
        let t1 = t1.permuted_axes([0, 3, 1, 2]); // (k, r, w, si)
        let t1 = t1
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((k * ar, wl * 2))
            .expect("size");
        let wm2 = wm.into_shape_with_order((wl * 2, 2 * wr)).expect("size");
        let t2 = t1.dot(&wm2); // (k*r, so*w')
        let t2 = t2.into_shape_with_order((k, ar, 2, wr)).expect("size");
        let t2 = t2.permuted_axes([0, 2, 3, 1]); // (k, so, w', r)
        let t2 = t2.as_standard_layout().into_owned();
        if i + 1 == n {
            debug_assert_eq!(wr, 1);
            let t = t2.into_shape_with_order((k, 2, ar)).expect("size");
            tensors.push(t);
            carry = Array3::ones((1, 1, 1));
        } else {
            let m = t2.into_shape_with_order((k * 2, wr * ar)).expect("size");
            let svd = linalg::svd_truncated(&m, chi_max, rel_cutoff)?;
            discarded += svd.discarded_weight;
            let kk = svd.rank;
            tensors.push(svd.u.to_shape((k, 2, kk)).expect("size").to_owned());
            let mut vt = svd.vt;
            for j in 0..kk {
                let sj = Complex64::new(svd.s[j], 0.0);
                vt.row_mut(j).mapv_inplace(|v| v * sj);
            }
            carry = vt.into_shape_with_order((kk, wr, ar)).expect("size");
        }
    }
    let mut out = MatrixProductState::from_tensors(tensors, chi_max, rel_cutoff);
    out.center = Some(n - 1);
    out.discarded_weight = discarded;
    // Second pass: sweep the center back to 0 with truncation to tighten
    // bonds that the zip-up left loose.
    for i in (1..n).rev() {
        let a = &out.tensors[i];
        let (l, r) = (a.shape()[0], a.shape()[2]);
        let m = a.to_shape((l, 2 * r)).expect("contiguous").to_owned();
        let svd = linalg::svd_truncated(&m, chi_max, rel_cutoff)?;
        out.discarded_weight += svd.discarded_weight;
        let kk = svd.rank;
        out.tensors[i] = svd.vt.to_shape((kk, 2, r)).expect("size").to_owned();
        let mut u = svd.u;
        for j in 0..kk {
            let sj = Complex64::new(svd.s[j], 0.0);
            u.column_mut(j).mapv_inplace(|v| v * sj);
        }
        let prev = &out.tensors[i - 1];
        let (pl, pr) = (prev.shape()[0], prev.shape()[2]);
        debug_assert_eq!(pr, l);
        let pm = prev.to_shape((pl * 2, pr)).expect("contiguous").to_owned();
        out.tensors[i - 1] = pm.dot(&u).to_shape((pl, 2, kk)).expect("size").to_owned();
    }
    out.center = Some(0);
    Ok(out)
}

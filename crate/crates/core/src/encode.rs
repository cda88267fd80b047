//! Fermion-to-qubit encoding: mode ordering on the lattice, Jordan-Wigner
//! mapping to Pauli sums, and compilation of Pauli sums into matrix product
//! operators.
//!
//! Modes are laid out along a one-dimensional chain following a snake path
//! over the lattice (even rows left to right, odd rows right to left), which
//! keeps nearest-neighbour bonds short in chain distance. Jordan-Wigner signs
//! use the annihilate-then-create convention with parity counted over set
//! bits below the target mode.

use std::collections::BTreeMap;
use std::str::FromStr;

use ndarray::{s, Array2, Array4};
use num_complex::Complex64;

use crate::linalg;
use crate::model::{ExtendedHubbardModel, Spin, Term, TermKind};
use crate::par;
use crate::{Error, Result};

/// How spin species are interleaved along the qubit chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum QubitOrdering {
    /// `q = 2 (site_pos * bands + band) + spin`: up/down pairs are adjacent.
    SpinInterleaved,
    /// `q = site_pos * bands + band + spin * n_modes`: all up modes first.
    SpinBlocked,
}

impl Default for QubitOrdering {
    fn default() -> Self {
        QubitOrdering::SpinInterleaved
    }
}

impl FromStr for QubitOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "interleaved" | "spin-interleaved" => Ok(QubitOrdering::SpinInterleaved),
            "blocked" | "spin-blocked" => Ok(QubitOrdering::SpinBlocked),
            other => Err(Error::invalid(format!(
                "unknown qubit ordering {other:?}, expected interleaved or blocked"
            ))),
        }
    }
}

/// Assignment of lattice modes `(site, band, spin)` to chain qubits.
#[derive(Clone, Debug)]
pub struct QubitMap {
    pub ordering: QubitOrdering,
    pub nx: usize,
    pub ny: usize,
    pub bands: usize,
    site_to_pos: Vec<usize>,
    pos_to_site: Vec<usize>,
}

impl QubitMap {
    pub fn new(model: &ExtendedHubbardModel, ordering: QubitOrdering) -> Self {
        Self::for_lattice(model.lattice.nx, model.lattice.ny, model.bands, ordering)
    }

    pub fn for_lattice(nx: usize, ny: usize, bands: usize, ordering: QubitOrdering) -> Self {
        let n = nx * ny;
        let mut site_to_pos = vec![0; n];
        let mut pos_to_site = vec![0; n];
        let mut pos = 0;
        for y in 0..ny {
            let xs: Vec<usize> =
                if y % 2 == 0 { (0..nx).collect() } else { (0..nx).rev().collect() };
            for x in xs {
                let site = y * nx + x;
                site_to_pos[site] = pos;
                pos_to_site[pos] = site;
                pos += 1;
            }
        }
        QubitMap { ordering, nx, ny, bands, site_to_pos, pos_to_site }
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.nx * self.ny * self.bands
    }

    /// Chain position of a row-major site index along the snake path.
    pub fn site_chain_position(&self, site: usize) -> usize {
        self.site_to_pos[site]
    }

    pub fn qubit(&self, site: usize, band: usize, spin: Spin) -> usize {
        debug_assert!(band < self.bands);
        let pos = self.site_to_pos[site];
        let mode = pos * self.bands + band;
        match self.ordering {
            QubitOrdering::SpinInterleaved => 2 * mode + spin.index(),
            QubitOrdering::SpinBlocked => {
                mode + spin.index() * self.nx * self.ny * self.bands
            }
        }
    }

    /// Inverse of [`Self::qubit`]: row-major site, band and spin of a qubit.
    pub fn mode(&self, qubit: usize) -> (usize, usize, Spin) {
        let n_modes = self.nx * self.ny * self.bands;
        let (mode, spin) = match self.ordering {
            QubitOrdering::SpinInterleaved => {
                (qubit / 2, if qubit % 2 == 0 { Spin::Up } else { Spin::Down })
            }
            QubitOrdering::SpinBlocked => {
                (qubit % n_modes, if qubit < n_modes { Spin::Up } else { Spin::Down })
            }
        };
        let pos = mode / self.bands;
        let band = mode % self.bands;
        (self.pos_to_site[pos], band, spin)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Array2<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => Array2::from_shape_vec((2, 2), vec![o, l, l, o]).unwrap(),
            Pauli::Y => Array2::from_shape_vec((2, 2), vec![o, -i, i, o]).unwrap(),
            Pauli::Z => Array2::from_shape_vec((2, 2), vec![l, o, o, -l]).unwrap(),
        }
    }
}

/// One Pauli string: a real coefficient times a product of single-qubit
/// operators. Identity factors are implicit; `ops` is sorted by qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub coeff: f64,
    pub ops: Vec<(u16, Pauli)>,
}

/// A Hermitian operator as a merged sum of Pauli strings in a canonical
/// deterministic order.
#[derive(Clone, Debug)]
pub struct PauliSum {
    pub n_qubits: usize,
    pub terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn n_strings(&self) -> usize {
        self.terms.len()
    }
}

fn push_density(out: &mut Vec<(Vec<(u16, Pauli)>, f64)>, q: u16, coeff: f64) {
    // n = (I - Z)/2
    out.push((vec![], 0.5 * coeff));
    out.push((vec![(q, Pauli::Z)], -0.5 * coeff));
}

fn push_density_pair(out: &mut Vec<(Vec<(u16, Pauli)>, f64)>, p: u16, q: u16, coeff: f64) {
    // n_p n_q = (I - Z_p - Z_q + Z_p Z_q)/4 for p != q
    debug_assert_ne!(p, q);
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    out.push((vec![], 0.25 * coeff));
    out.push((vec![(lo, Pauli::Z)], -0.25 * coeff));
    out.push((vec![(hi, Pauli::Z)], -0.25 * coeff));
    out.push((vec![(lo, Pauli::Z), (hi, Pauli::Z)], 0.25 * coeff));
}

/// `coeff (c+_p c_q + c+_q c_p)` for `p != q`:
/// `(coeff / 2) (X Z..Z X + Y Z..Z Y)` over the span `[min, max]`.
fn push_hop(out: &mut Vec<(Vec<(u16, Pauli)>, f64)>, p: u16, q: u16, coeff: f64) {
    debug_assert_ne!(p, q);
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    for end in [Pauli::X, Pauli::Y] {
        let mut ops = Vec::with_capacity((hi - lo + 1) as usize);
        ops.push((lo, end));
        for z in lo + 1..hi {
            ops.push((z, Pauli::Z));
        }
        ops.push((hi, end));
        out.push((ops, 0.5 * coeff));
    }
}

fn term_strings(term: &Term, map: &QubitMap) -> Vec<(Vec<(u16, Pauli)>, f64)> {
    let mut out = Vec::new();
    let q = |site: usize, band: usize, spin: Spin| map.qubit(site, band, spin) as u16;
    match term.kind {
        TermKind::HopIntra => {
            let spin = term.spin.expect("hop term carries spin");
            let (a, b) = term.sites;
            let band = term.bands.0;
            push_hop(&mut out, q(a, band, spin), q(b, band, spin), term.coeff);
        }
        TermKind::HopInterOnsite => {
            // Each ordered pair contributes half of the Hermitian combination;
            // the mirror pair (same symmetrized coefficient) supplies the rest.
            let spin = term.spin.expect("hop term carries spin");
            let site = term.sites.0;
            let (i, j) = term.bands;
            push_hop(&mut out, q(site, i, spin), q(site, j, spin), 0.5 * term.coeff);
        }
        TermKind::OnsitePotential => {
            let spin = term.spin.expect("potential term carries spin");
            push_density(&mut out, q(term.sites.0, term.bands.0, spin), term.coeff);
        }
        TermKind::UOnsite => {
            let site = term.sites.0;
            let band = term.bands.0;
            push_density_pair(
                &mut out,
                q(site, band, Spin::Up),
                q(site, band, Spin::Down),
                term.coeff,
            );
        }
        TermKind::UInterOnsite => {
            let site = term.sites.0;
            let (i, j) = term.bands;
            for si in Spin::BOTH {
                for sj in Spin::BOTH {
                    push_density_pair(&mut out, q(site, i, si), q(site, j, sj), term.coeff);
                }
            }
        }
        TermKind::VOffsite => {
            let (a, b) = term.sites;
            let (i, j) = term.bands;
            for si in Spin::BOTH {
                for sj in Spin::BOTH {
                    push_density_pair(&mut out, q(a, i, si), q(b, j, sj), term.coeff);
                }
            }
        }
    }
    out
}

/// Jordan-Wigner maps a term list to a merged Pauli sum. Strings with
/// coefficients below `1e-14` after merging are dropped; the constant
/// (identity) part is kept as a string with no operators.
pub fn jordan_wigner(terms: &[Term], map: &QubitMap) -> PauliSum {
    let pieces = par::map_slice(terms, |t| term_strings(t, map));
    let mut merged: BTreeMap<Vec<(u16, Pauli)>, f64> = BTreeMap::new();
    for piece in pieces {
        for (ops, coeff) in piece {
            *merged.entry(ops).or_insert(0.0) += coeff;
        }
    }
    let terms = merged
        .into_iter()
        .filter(|(_, c)| c.abs() > 1e-14)
        .map(|(ops, coeff)| PauliString { coeff, ops })
        .collect();
    PauliSum { n_qubits: map.n_qubits(), terms }
}

/// Dense matrix of a Pauli sum in the computational basis, qubit 0 least
/// significant. Only for small test systems.
pub fn pauli_sum_to_dense(sum: &PauliSum) -> Result<Array2<Complex64>> {
    if sum.n_qubits > 12 {
        return Err(Error::Unsupported(format!(
            "dense Pauli sum limited to 12 qubits, got {}",
            sum.n_qubits
        )));
    }
    let dim = 1usize << sum.n_qubits;
    let mut h = Array2::<Complex64>::zeros((dim, dim));
    for string in &sum.terms {
        for col in 0..dim {
            let mut row = col;
            let mut amp = Complex64::new(string.coeff, 0.0);
            for &(q, p) in &string.ops {
                let bit = (col >> q) & 1;
                match p {
                    Pauli::X => row ^= 1 << q,
                    Pauli::Y => {
                        row ^= 1 << q;
                        // Y|0> = i|1>, Y|1> = -i|0>
                        amp *= if bit == 0 {
                            Complex64::new(0.0, 1.0)
                        } else {
                            Complex64::new(0.0, -1.0)
                        };
                    }
                    Pauli::Z => {
                        if bit == 1 {
                            amp = -amp;
                        }
                    }
                }
            }
            h[(row, col)] += amp;
        }
    }
    Ok(h)
}

/// Matrix product operator on a chain of qubits. Tensor index order is
/// `(left bond, physical out, physical in, right bond)`.
#[derive(Clone, Debug)]
pub struct MatrixProductOperator {
    tensors: Vec<Array4<Complex64>>,
}

impl MatrixProductOperator {
    pub fn from_tensors(tensors: Vec<Array4<Complex64>>) -> Self {
        debug_assert!(!tensors.is_empty());
        MatrixProductOperator { tensors }
    }

    pub fn identity(n: usize) -> Self {
        let mut w = Array4::<Complex64>::zeros((1, 2, 2, 1));
        w[(0, 0, 0, 0)] = Complex64::new(1.0, 0.0);
        w[(0, 1, 1, 0)] = Complex64::new(1.0, 0.0);
        MatrixProductOperator { tensors: vec![w; n] }
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensor(&self, i: usize) -> &Array4<Complex64> {
        &self.tensors[i]
    }

    /// Internal bond dimensions, length `n_sites - 1`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors.iter().take(self.n_sites() - 1).map(|t| t.shape()[3]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Multiplies the operator by a scalar.
    pub fn scale(&mut self, factor: f64) {
        let f = Complex64::new(factor, 0.0);
        self.tensors[0].mapv_inplace(|v| v * f);
    }

    /// Operator addition by bond-wise direct sum, without compression.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let n = self.n_sites();
        assert_eq!(n, other.n_sites(), "operator length mismatch");
        if n == 1 {
            return MatrixProductOperator {
                tensors: vec![&self.tensors[0] + &other.tensors[0]],
            };
        }
        let mut tensors = Vec::with_capacity(n);
        for i in 0..n {
            let a = &self.tensors[i];
            let b = &other.tensors[i];
            let (al, ar) = (a.shape()[0], a.shape()[3]);
            let (bl, br) = (b.shape()[0], b.shape()[3]);
            let (l, r) = if i == 0 {
                (1, ar + br)
            } else if i == n - 1 {
                (al + bl, 1)
            } else {
                (al + bl, ar + br)
            };
            let mut w = Array4::<Complex64>::zeros((l, 2, 2, r));
            let (row_off, col_off) = (if i == 0 { 0 } else { al }, if i == n - 1 { 0 } else { ar });
            w.slice_mut(s![..al, .., .., ..ar]).assign(a);
            w.slice_mut(s![row_off.., .., .., col_off..]).assign(b);
            tensors.push(w);
        }
        MatrixProductOperator { tensors }
    }

    /// Deterministic two-pass compression: a left-to-right QR
    /// orthogonalization followed by a right-to-left truncated SVD with the
    /// given relative singular-value cutoff.
    pub fn compress(&mut self, rel_cutoff: f64) -> Result<()> {
        let n = self.n_sites();
        if n == 1 {
            return Ok(());
        }
        for i in 0..n - 1 {
            let w = &self.tensors[i];
            let (l, r) = (w.shape()[0], w.shape()[3]);
            let m = w.to_shape((l * 4, r)).expect("contiguous").to_owned();
            let (q, rr) = linalg::qr_thin(&m)?;
            let k = q.shape()[1];
            self.tensors[i] = q.to_shape((l, 2, 2, k)).expect("size").to_owned();
            let next = &self.tensors[i + 1];
            let (nl, nr) = (next.shape()[0], next.shape()[3]);
            let nm = next.to_shape((nl, 4 * nr)).expect("contiguous").to_owned();
            let merged = rr.dot(&nm);
            self.tensors[i + 1] = merged.to_shape((k, 2, 2, nr)).expect("size").to_owned();
        }
        for i in (1..n).rev() {
            let w = &self.tensors[i];
            let (l, r) = (w.shape()[0], w.shape()[3]);
            let m = w.to_shape((l, 4 * r)).expect("contiguous").to_owned();
            let svd = linalg::svd_truncated(&m, usize::MAX, rel_cutoff)?;
            let k = svd.rank;
            self.tensors[i] = svd.vt.to_shape((k, 2, 2, r)).expect("size").to_owned();
            let mut carry = svd.u;
            for j in 0..k {
                let sj = Complex64::new(svd.s[j], 0.0);
                carry.column_mut(j).mapv_inplace(|v| v * sj);
            }
            let prev = &self.tensors[i - 1];
            let (pl, pr) = (prev.shape()[0], prev.shape()[3]);
            debug_assert_eq!(pr, l);
            let pm = prev.to_shape((pl * 4, pr)).expect("contiguous").to_owned();
            let merged = pm.dot(&carry);
            self.tensors[i - 1] = merged.to_shape((pl, 2, 2, k)).expect("size").to_owned();
        }
        Ok(())
    }

    /// Dense matrix on the full Hilbert space, qubit 0 least significant.
    /// Only for small test systems.
    pub fn to_dense(&self) -> Result<Array2<Complex64>> {
        let n = self.n_sites();
        if n > 10 {
            return Err(Error::Unsupported(format!(
                "dense MPO limited to 10 qubits, got {n}"
            )));
        }
        let dim = 1usize << n;
        let mut h = Array2::<Complex64>::zeros((dim, dim));
        // Row and column bits select a w x w' matrix per site; their ordered
        // product is the matrix element.
        for row in 0..dim {
            for col in 0..dim {
                let mut vec = ndarray::Array1::<Complex64>::ones(1);
                for (site, w) in self.tensors.iter().enumerate() {
                    let so = (row >> site) & 1;
                    let si = (col >> site) & 1;
                    let mat = w.slice(s![.., so, si, ..]);
                    vec = vec.dot(&mat);
                }
                debug_assert_eq!(vec.len(), 1);
                h[(row, col)] = vec[0];
            }
        }
        Ok(h)
    }
}

fn string_to_mpo(n_qubits: usize, string: &PauliString) -> MatrixProductOperator {
    let mut tensors = Vec::with_capacity(n_qubits);
    let eye = MatrixProductOperator::identity(1).tensors[0].clone();
    for q in 0..n_qubits {
        let mut w = eye.clone();
        if let Some(&(_, p)) = string.ops.iter().find(|&&(sq, _)| sq as usize == q) {
            let m = p.matrix();
            for so in 0..2 {
                for si in 0..2 {
                    w[(0, so, si, 0)] = m[(so, si)];
                }
            }
        }
        tensors.push(w);
    }
    let coeff = Complex64::new(string.coeff, 0.0);
    tensors[0].mapv_inplace(|v| v * coeff);
    MatrixProductOperator { tensors }
}

/// Compiles a Pauli sum into an MPO by batched direct sums with intermediate
/// compression. The result is deterministic for a fixed input order.
pub fn pauli_sum_to_mpo(sum: &PauliSum, rel_cutoff: f64) -> Result<MatrixProductOperator> {
    let n = sum.n_qubits;
    if n == 0 {
        return Err(Error::invalid("empty qubit register"));
    }
    if sum.terms.is_empty() {
        let mut zero = MatrixProductOperator::identity(n);
        zero.scale(0.0);
        return Ok(zero);
    }
    const BATCH: usize = 32;
    const COMPRESS_AT: usize = 128;
    let batches: Vec<_> = sum.terms.chunks(BATCH).collect();
    let compiled = par::map_slice(&batches, |chunk| {
        let mut acc: Option<MatrixProductOperator> = None;
        for string in chunk.iter() {
            let one = string_to_mpo(n, string);
            acc = Some(match acc {
                None => one,
                Some(a) => a.direct_sum(&one),
            });
        }
        let mut mpo = acc.expect("nonempty chunk");
        mpo.compress(rel_cutoff)?;
        Ok::<_, Error>(mpo)
    });
    let mut total: Option<MatrixProductOperator> = None;
    for piece in compiled {
        let piece = piece?;
        total = Some(match total {
            None => piece,
            Some(t) => {
                let mut merged = t.direct_sum(&piece);
                if merged.max_bond() > COMPRESS_AT {
                    merged.compress(rel_cutoff)?;
                }
                merged
            }
        });
    }
    let mut mpo = total.expect("nonempty sum");
    mpo.compress(rel_cutoff)?;
    Ok(mpo)
}

/// Builds `(sum_{q in subset} n_q - target)^2` as an exact bond-3 MPO.
pub fn number_penalty_mpo(
    n_qubits: usize,
    subset: &[usize],
    target: f64,
) -> MatrixProductOperator {
    let member = {
        let mut m = vec![false; n_qubits];
        for &q in subset {
            m[q] = true;
        }
        m
    };
    let one = Complex64::new(1.0, 0.0);
    let shift = Complex64::new(target * target / n_qubits as f64, 0.0);
    let lin = Complex64::new(1.0 - 2.0 * target, 0.0);
    let mut tensors = Vec::with_capacity(n_qubits);
    for q in 0..n_qubits {
        // States: 0 = no density placed, 1 = one placed, 2 = finished.
        let mut w = Array4::<Complex64>::zeros((3, 2, 2, 3));
        for d in 0..2 {
            w[(0, d, d, 0)] = one;
            w[(1, d, d, 1)] = one;
            w[(2, d, d, 2)] = one;
            w[(0, d, d, 2)] += shift;
        }
        if member[q] {
            // n_q acts as |1><1|
            w[(0, 1, 1, 1)] = Complex64::new(2.0, 0.0);
            w[(1, 1, 1, 2)] = one;
            w[(0, 1, 1, 2)] += lin;
        }
        tensors.push(w);
    }
    let first = tensors[0].slice(s![0..1, .., .., ..]).to_owned();
    tensors[0] = first;
    let last_idx = tensors.len() - 1;
    let last = tensors[last_idx].slice(s![.., .., .., 2..3]).to_owned();
    tensors[last_idx] = last;
    MatrixProductOperator { tensors }
}

/// Hamiltonian MPO of a model under a given qubit map, compressed at the
/// given relative cutoff. Structural zero-coefficient terms are dropped
/// during the Pauli merge.
pub fn hamiltonian_mpo(
    model: &ExtendedHubbardModel,
    map: &QubitMap,
    rel_cutoff: f64,
) -> Result<(PauliSum, MatrixProductOperator)> {
    let terms = model.expand_terms(model.drop_onsite_potential_default());
    let sum = jordan_wigner(&terms.terms, map);
    let mpo = pauli_sum_to_mpo(&sum, rel_cutoff)?;
    Ok((sum, mpo))
}

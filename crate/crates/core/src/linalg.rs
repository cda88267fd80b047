//! Dense linear-algebra helpers shared by the tensor-network and ED code:
//! truncated SVD, thin QR/LQ, small Hermitian eigensolves and a restarted
//! Lanczos iteration for the lowest eigenpair of a matrix-free operator.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eigh, JobSvd, Lapack, Scalar, SVDDC, QR, UPLO};
use num_complex::Complex64;

use crate::{Error, Result};

/// Result of a rank-truncated SVD, `m ~= u * diag(s) * vt`.
pub struct TruncatedSvd {
    pub u: Array2<Complex64>,
    pub s: Array1<f64>,
    pub vt: Array2<Complex64>,
    /// Sum of squared discarded singular values.
    pub discarded_weight: f64,
    pub rank: usize,
}

/// SVD truncated to `max_rank` and to singular values at least
/// `rel_cutoff` times the largest one. At least one value is always kept.
pub fn svd_truncated(
    m: &Array2<Complex64>,
    max_rank: usize,
    rel_cutoff: f64,
) -> Result<TruncatedSvd> {
    let (u, sv, vt) = m
        .svddc(JobSvd::Some)
        .map_err(|e| Error::numerics(format!("svd: {e}")))?;
    let u = u.expect("JobSvd::Some returns U");
    let vt = vt.expect("JobSvd::Some returns VT");
    let smax = sv.first().copied().unwrap_or(0.0);
    let threshold = smax * rel_cutoff;
    let mut rank = sv.iter().take_while(|&&x| x > threshold).count();
    rank = rank.clamp(1, max_rank.max(1)).min(sv.len().max(1));
    let discarded_weight: f64 = sv.iter().skip(rank).map(|x| x * x).sum();
    Ok(TruncatedSvd {
        u: u.slice(s![.., ..rank]).to_owned(),
        s: sv.slice(s![..rank]).to_owned(),
        vt: vt.slice(s![..rank, ..]).to_owned(),
        discarded_weight,
        rank,
    })
}

/// Thin QR factorization, `m = q * r` with orthonormal columns in `q`.
pub fn qr_thin(m: &Array2<Complex64>) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    m.qr().map_err(|e| Error::numerics(format!("qr: {e}")))
}

/// Conjugate transpose in standard (row-major) layout. `t().mapv(..)` keeps
/// the transposed strides, which later C-order reshapes reject.
pub fn adjoint(m: &Array2<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((m.ncols(), m.nrows()), |(i, j)| m[(j, i)].conj())
}

/// Thin LQ factorization, `m = l * q` with orthonormal rows in `q`.
pub fn lq_thin(m: &Array2<Complex64>) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    let mh = adjoint(m);
    let (q, r) = qr_thin(&mh)?;
    Ok((adjoint(&r), adjoint(&q)))
}

/// Eigendecomposition of a small Hermitian matrix, eigenvalues ascending.
pub fn eigh_hermitian(m: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    m.eigh(UPLO::Lower)
        .map_err(|e| Error::numerics(format!("eigh: {e}")))
}

/// Eigendecomposition of a small real symmetric matrix, eigenvalues ascending.
pub fn eigh_symmetric(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    m.eigh(UPLO::Lower)
        .map_err(|e| Error::numerics(format!("eigh: {e}")))
}

fn inner<S: Scalar>(a: &Array1<S>, b: &Array1<S>) -> S {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * *y).sum()
}

fn norm<S: Scalar<Real = f64>>(v: &Array1<S>) -> f64 {
    inner(v, v).re().max(0.0).sqrt()
}

pub struct LanczosOptions {
    /// Krylov subspace size per restart cycle.
    pub max_subspace: usize,
    pub max_restarts: usize,
    /// Residual tolerance relative to `max(1, |eigenvalue|)`.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_subspace: 40, max_restarts: 12, tol: 1e-10 }
    }
}

pub struct LanczosOutcome<S: Scalar> {
    pub value: f64,
    pub vector: Array1<S>,
    pub residual: f64,
    pub converged: bool,
}

/// Lowest eigenpair of a Hermitian operator given only its action, using
/// restarted Lanczos with full reorthogonalization. `v0` seeds the Krylov
/// space and must be nonzero.
pub fn lanczos_lowest<S, F>(
    apply: F,
    v0: &Array1<S>,
    opts: &LanczosOptions,
) -> Result<LanczosOutcome<S>>
where
    S: Scalar<Real = f64> + Lapack,
    F: Fn(&Array1<S>) -> Array1<S>,
{
    let dim = v0.len();
    let mut v = v0.clone();
    let nrm = norm(&v);
    if nrm < 1e-300 {
        return Err(Error::numerics("lanczos seed vector is zero"));
    }
    v.mapv_inplace(|x| x / S::from_real(nrm));

    let mut value = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for _restart in 0..opts.max_restarts.max(1) {
        let m_max = opts.max_subspace.min(dim).max(2);
        let mut basis: Vec<Array1<S>> = vec![v.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut final_beta = 0.0;
        for j in 0..m_max {
            let mut w = apply(&basis[j]);
            let alpha = inner(&basis[j], &w).re();
            alphas.push(alpha);
            // full reorthogonalization, twice for numerical safety
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(b, &w);
                    ndarray::Zip::from(&mut w).and(b).for_each(|wi, &bi| *wi -= c * bi);
                }
            }
            let beta = norm(&w);
            if j + 1 == m_max || beta < 1e-13 {
                final_beta = beta;
                break;
            }
            betas.push(beta);
            w.mapv_inplace(|x| x / S::from_real(beta));
            basis.push(w);
        }

        let m = alphas.len();
        let mut tri = Array2::<f64>::zeros((m, m));
        for i in 0..m {
            tri[(i, i)] = alphas[i];
            if i + 1 < m {
                tri[(i, i + 1)] = betas[i];
                tri[(i + 1, i)] = betas[i];
            }
        }
        let (evals, evecs) = eigh_symmetric(&tri)?;
        value = evals[0];
        let y = evecs.column(0);
        let mut x = Array1::<S>::zeros(dim);
        for (i, b) in basis.iter().enumerate() {
            let c = S::from_real(y[i]);
            ndarray::Zip::from(&mut x).and(b).for_each(|xi, &bi| *xi += c * bi);
        }
        let xnrm = norm(&x);
        x.mapv_inplace(|e| e / S::from_real(xnrm));
        v = x;

        // Residual bound from the first step beyond the Krylov space.
        residual = (final_beta * y[m - 1]).abs();
        if residual <= opts.tol * value.abs().max(1.0) {
            return Ok(LanczosOutcome { value, vector: v, residual, converged: true });
        }
    }
    Ok(LanczosOutcome { value, vector: v, residual, converged: false })
}

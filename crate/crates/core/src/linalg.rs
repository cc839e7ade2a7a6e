//! Internal numerical primitives: rank decisions, null-space bases,
//! least-squares solves and eigenvalue candidates. All rank decisions in the
//! crate funnel through this module so that one tolerance convention applies
//! everywhere.

use nalgebra::storage::RawStorage;
use nalgebra::{DMatrix, Dim, Matrix};

use crate::error::{Error, Result};
use crate::model::{CMatrix, CVector, C64};

/// Largest entry magnitude of a matrix or vector (0 when empty).
pub(crate) fn max_abs<R: Dim, C: Dim, S: RawStorage<C64, R, C>>(m: &Matrix<C64, R, C, S>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Singular-value decomposition `m = U diag(sigma) V^H` with `scaled_u`
/// holding `U diag(sigma)` (the rotated columns of `m`) and `v` the full
/// `ncols x ncols` unitary factor; singular values in descending order.
struct JacobiSvd {
    sigma: Vec<f64>,
    scaled_u: CMatrix,
    v: CMatrix,
}

/// One-sided Jacobi SVD. The general-purpose decomposition in the matrix
/// library returns visibly wrong factors for some nearly rank-deficient
/// inputs whenever singular vectors are requested (top singular value off by
/// ~1%), which is fatal for kernel detection; pairwise column rotations are
/// slower asymptotically but dependable, and on the small matrices used here
/// the difference is irrelevant. As a bonus the right factor is always
/// complete, regardless of the matrix shape.
fn jacobi_svd(m: &CMatrix) -> JacobiSvd {
    let n = m.ncols();
    // Normalize the working copy so thresholds are absolute and no
    // intermediate quantity can overflow or underflow at the scales below.
    let scale = max_abs(m);
    if scale == 0.0 {
        return JacobiSvd {
            sigma: vec![0.0; n],
            scaled_u: CMatrix::zeros(m.nrows(), n),
            v: CMatrix::identity(n, n),
        };
    }
    let mut w = m / C64::from(scale);
    let mut v = CMatrix::identity(n, n);
    // Cyclic sweeps over column pairs until every pair is orthogonal to
    // working precision. Small problems converge in a handful of sweeps; the
    // cap only guards against dithering on the last bits.
    const TOL: f64 = 1e-15;
    const MAX_SWEEPS: usize = 64;
    // When the matrix has more columns than rank, the surplus columns decay
    // toward zero without ever reaching it; grinding on them squanders
    // sweeps and eventually underflows. Anything this far below the matrix
    // scale is zero for every consumer, so flush it and move on.
    const FLUSH_NORM_SQUARED: f64 = 1e-80;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for j in 0..n {
            if w.column(j).norm_squared() <= FLUSH_NORM_SQUARED {
                w.column_mut(j).fill(C64::from(0.0));
            }
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                if gamma.norm() <= TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Unitary 2x2 diagonalizing the Hermitian Gram block
                // [[alpha, gamma], [conj(gamma), beta]]: strip the phase of
                // gamma, then rotate by the classic symmetric-Jacobi angle.
                let gamma_norm = gamma.norm();
                let phase = C64::new(gamma.re / gamma_norm, gamma.im / gamma_norm);
                let tau = (beta - alpha) / (2.0 * gamma_norm);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                rotate_columns(&mut w, p, q, cs, sn, phase);
                rotate_columns(&mut v, p, q, cs, sn, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("finite norms"));
    JacobiSvd {
        sigma: order.iter().map(|&j| norms[j] * scale).collect(),
        scaled_u: CMatrix::from_fn(m.nrows(), n, |r, c| w[(r, order[c])] * scale),
        v: CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]),
    }
}

/// Right-multiplies columns p and q of `m` by the unitary rotation
/// [[cs, sn], [-sn e^{-i phi}, cs e^{-i phi}]].
fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, cs: f64, sn: f64, phase: C64) {
    let phase_conj = phase.conj();
    for r in 0..m.nrows() {
        let wp = m[(r, p)];
        let wq = m[(r, q)] * phase_conj;
        m[(r, p)] = wp * C64::from(cs) - wq * C64::from(sn);
        m[(r, q)] = wp * C64::from(sn) + wq * C64::from(cs);
    }
}

/// Singular values of `m` in descending order.
fn singular_values(m: &CMatrix) -> Vec<f64> {
    jacobi_svd(m).sigma
}

/// Absolute cutoff below which a singular value of `m` counts as zero:
/// `rank_tol * max(nrows, ncols) * sigma_max`.
fn rank_cutoff(m: &CMatrix, sigma_max: f64, rank_tol: f64) -> f64 {
    rank_tol * m.nrows().max(m.ncols()) as f64 * sigma_max
}

/// Numerical rank of `m` under the relative singular-value cutoff.
pub(crate) fn numerical_rank(m: &CMatrix, rank_tol: f64) -> usize {
    numerical_rank_with_floor(m, rank_tol, 0.0)
}

/// Numerical rank with an absolute scale floor: the cutoff is
/// `rank_tol * max(nrows, ncols) * max(sigma_max, scale_floor)`. The floor
/// keeps a matrix that is tiny *in its problem's own units* from passing as
/// full rank just because its largest singular value dwarfs its smallest.
pub(crate) fn numerical_rank_with_floor(m: &CMatrix, rank_tol: f64, scale_floor: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = singular_values(m);
    let cutoff = rank_cutoff(m, sv[0].max(scale_floor), rank_tol);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Whether `m x = 0` has a solution other than x = 0.
pub(crate) fn has_nontrivial_kernel(m: &CMatrix, rank_tol: f64) -> bool {
    m.ncols() > 0 && numerical_rank(m, rank_tol) < m.ncols()
}

/// An orthonormal basis of the (numerical) null space of `m`, returned as a
/// `ncols x nullity` matrix. Empty (zero columns) when the kernel is trivial.
pub(crate) fn null_space_basis(m: &CMatrix, rank_tol: f64) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    let svd = jacobi_svd(m);
    let cutoff = rank_cutoff(m, svd.sigma.first().copied().unwrap_or(0.0), rank_tol);
    let rank = svd.sigma.iter().filter(|&&s| s > cutoff).count();
    let nullity = cols - rank;
    if nullity == 0 {
        return CMatrix::zeros(cols, 0);
    }
    svd.v.columns(rank, nullity).into_owned()
}

/// A unit-norm vector in the numerical null space of `m`, if one exists.
pub(crate) fn kernel_vector(m: &CMatrix, rank_tol: f64) -> Option<CVector> {
    let basis = null_space_basis(m, rank_tol);
    if basis.ncols() == 0 {
        None
    } else {
        Some(basis.column(0).into_owned())
    }
}

/// Minimum-norm least-squares solution of `m x = b` together with the
/// residual norm `|m x - b|`.
pub(crate) fn least_squares(m: &CMatrix, b: &CVector, rank_tol: f64) -> Result<(CVector, f64)> {
    if m.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "cannot solve a {}x{} system against a length-{} right-hand side",
            m.nrows(),
            m.ncols(),
            b.len()
        )));
    }
    let svd = jacobi_svd(m);
    let cutoff = rank_cutoff(m, svd.sigma.first().copied().unwrap_or(0.0), rank_tol);
    let mut x = CVector::zeros(m.ncols());
    for (j, &s) in svd.sigma.iter().enumerate() {
        if s <= cutoff {
            break; // descending order: everything past here counts as zero
        }
        let coefficient = svd.scaled_u.column(j).dotc(b) / C64::from(s * s);
        x += svd.v.column(j) * coefficient;
    }
    let residual = (m * &x - b).norm();
    Ok((x, residual))
}

/// Whether every entry of `m` is real up to a relative slack.
fn is_effectively_real(m: &CMatrix) -> bool {
    let scale = max_abs(m);
    let slack = 1e-14 * scale.max(1.0);
    m.iter().all(|z| z.im.abs() <= slack)
}

/// Candidate eigenvalues of a square matrix. For a real matrix these are the
/// eigenvalues themselves. A genuinely complex matrix is embedded as the real
/// 2n x 2n block matrix [[X, -Y], [Y, X]], whose spectrum is the spectrum of
/// `m` plus its conjugate — so the result may contain spurious conjugates.
/// Callers must validate candidates (e.g. by a rank test of `m - lambda I`).
pub(crate) fn eigenvalue_candidates(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigenvalues require a square matrix");
    if n == 0 {
        return Ok(Vec::new());
    }
    let real = if is_effectively_real(m) {
        DMatrix::<f64>::from_iterator(n, n, m.iter().map(|z| z.re))
    } else {
        let mut embed = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                embed[(i, j)] = z.re;
                embed[(i, j + n)] = -z.im;
                embed[(i + n, j)] = z.im;
                embed[(i + n, j + n)] = z.re;
            }
        }
        embed
    };
    // The QR iteration can cycle on exactly structured inputs. Before giving
    // up, retry with a tiny graded diagonal perturbation (a uniform shift
    // would not help: the iteration is shift invariant). The perturbed
    // eigenvalues are only candidates; callers refine and validate them.
    let scale = real.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let dim = real.nrows();
    let mut schur = None;
    for level in [0.0, 1e-12, 1e-9] {
        let mut attempt = real.clone();
        for k in 0..dim {
            attempt[(k, k)] += scale * level * (k + 1) as f64 / dim as f64;
        }
        if let Some(s) = attempt.try_schur(f64::EPSILON, 100_000) {
            schur = Some(s);
            break;
        }
    }
    let schur =
        schur.ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

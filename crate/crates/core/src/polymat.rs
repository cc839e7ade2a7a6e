//! Polynomial matrices in the shift variable and the kernel-representation
//! route to the security index.
//!
//! A behavior can be given as the kernel of a polynomial matrix R: a sensor
//! trajectory r belongs to it when R(sigma) r = 0, where sigma shifts time
//! forward. The security index is then the size of the smallest set of
//! columns of R that is *not* left unimodular — columns that can absorb a
//! nonzero signal without violating the laws.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{CMatrix, SensorSet, ToleranceConfig, Trajectory, C64};

/// Relative coefficient magnitude below which trailing terms are trimmed.
const COEFF_TRIM_REL: f64 = 1e-10;

/// Relative singular-value cutoff used when testing the rank of M(lambda) at
/// a numerically localized root candidate. Wider than the general rank
/// tolerance because a multiple root is only located to about the square
/// root of machine precision, which blurs the evaluation by a similar amount.
const CANDIDATE_RANK_REL: f64 = 1e-7;

/// A polynomial with complex coefficients, stored in ascending order of
/// degree with trailing near-zeros trimmed. The zero polynomial stores no
/// coefficients and has degree `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    /// Builds a polynomial from ascending coefficients, trimming trailing
    /// coefficients that are negligible relative to the largest one.
    pub fn new(coeffs: Vec<C64>) -> Poly {
        let scale = coeffs.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let mut coeffs = coeffs;
        if scale == 0.0 {
            coeffs.clear();
        } else {
            while let Some(last) = coeffs.last() {
                if last.norm() <= COEFF_TRIM_REL * scale {
                    coeffs.pop();
                } else {
                    break;
                }
            }
        }
        Poly { coeffs }
    }

    /// The zero polynomial.
    pub fn zero() -> Poly {
        Poly { coeffs: Vec::new() }
    }

    /// A constant polynomial.
    pub fn constant(c: C64) -> Poly {
        Poly::new(vec![c])
    }

    /// Builds a polynomial from real ascending coefficients.
    pub fn from_real(coeffs: &[f64]) -> Poly {
        Poly::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// Ascending coefficients (empty for the zero polynomial).
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Whether this is the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of the degree-`k` term (zero beyond the stored degree).
    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs
            .get(k)
            .copied()
            .unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    /// Evaluates the polynomial by Horner's rule.
    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// The formal derivative.
    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, &c)| c * C64::from((k + 1) as f64))
                .collect(),
        )
    }

    /// Sum of two polynomials.
    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    /// Difference of two polynomials.
    pub fn sub(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    /// Product of two polynomials.
    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Scales every coefficient.
    pub fn scale(&self, factor: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * factor).collect())
    }

    /// Euclidean division: returns (quotient, remainder) with
    /// `self = quotient * divisor + remainder` and
    /// `deg remainder < deg divisor`.
    ///
    /// # Panics
    /// Panics when the divisor is zero.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let d = divisor.coeffs.len() - 1;
        if self.coeffs.len() <= d {
            return (Poly::zero(), self.clone());
        }
        let lead = divisor.coeffs[d];
        let mut rem = self.coeffs.clone();
        let mut quot = vec![C64::new(0.0, 0.0); rem.len() - d];
        for k in (d..rem.len()).rev() {
            let factor = rem[k] / lead;
            quot[k - d] = factor;
            for j in 0..=d {
                let sub = factor * divisor.coeffs[j];
                rem[k - d + j] -= sub;
            }
        }
        rem.truncate(d);
        (Poly::new(quot), Poly::new(rem))
    }

    /// Monic greatest common divisor by the Euclidean algorithm. Remainders
    /// whose coefficients drop below the trim tolerance relative to the
    /// inputs' scale are treated as zero.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let scale = self
            .coeffs
            .iter()
            .chain(&other.coeffs)
            .fold(0.0_f64, |acc, z| acc.max(z.norm()))
            .max(1.0);
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, mut r) = a.div_rem(&b);
            if r.coeffs.iter().all(|z| z.norm() <= COEFF_TRIM_REL * scale) {
                r = Poly::zero();
            }
            a = std::mem::replace(&mut b, r);
        }
        if a.is_zero() {
            return a;
        }
        let lead = a.coeffs[a.coeffs.len() - 1];
        a.scale(C64::new(1.0, 0.0) / lead)
    }

    /// Candidate roots: a superset of the roots, obtained as eigenvalues of
    /// the companion matrix. (For complex coefficients the computation may
    /// also emit conjugates of true roots; callers must validate candidates
    /// before relying on them.) Constants and the zero polynomial yield none.
    pub fn root_candidates(&self) -> Result<Vec<C64>> {
        let d = match self.degree() {
            None | Some(0) => return Ok(Vec::new()),
            Some(d) => d,
        };
        // Split off exact zero roots first: the companion of a monomial is a
        // nilpotent shift matrix, on which the QR iteration can cycle without
        // converging. The remaining factor has a nonzero constant term.
        let zeros = self
            .coeffs
            .iter()
            .take_while(|c| c.re == 0.0 && c.im == 0.0)
            .count();
        let mut candidates = vec![C64::new(0.0, 0.0); zeros];
        if d > zeros {
            let lead = self.coeffs[d];
            let dd = d - zeros;
            let mut companion = CMatrix::zeros(dd, dd);
            for i in 0..dd {
                if i + 1 < dd {
                    companion[(i + 1, i)] = C64::new(1.0, 0.0);
                }
                companion[(i, dd - 1)] = -self.coeffs[zeros + i] / lead;
            }
            candidates.extend(linalg::eigenvalue_candidates(&companion)?);
        }
        // Polish each candidate by Newton iteration on p/p', whose roots are
        // the roots of p but all simple, so the refinement stays fast at
        // repeated roots. Plain Newton must not be used here: at a double
        // root both p and p' sit at coefficient-noise level and their ratio
        // can fling a good candidate far away. A step is kept only when it
        // shrinks |p|, so polishing never makes a candidate worse.
        let d1_poly = self.derivative();
        let d2_poly = d1_poly.derivative();
        for z in candidates.iter_mut() {
            let mut best = self.eval(*z).norm();
            for _ in 0..12 {
                let value = self.eval(*z);
                let d1 = d1_poly.eval(*z);
                let denom = d1 * d1 - value * d2_poly.eval(*z);
                if denom.norm() < 1e-300 {
                    break;
                }
                let step = value * d1 / denom;
                let next = *z - step;
                let next_norm = self.eval(next).norm();
                if next_norm > best {
                    break;
                }
                *z = next;
                best = next_norm;
                if step.norm() <= 1e-15 * z.norm().max(1.0) {
                    break;
                }
            }
        }
        Ok(candidates)
    }
}

/// A p x q matrix of polynomials in the shift variable.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    entries: Vec<Poly>, // row-major
    rows: usize,
    cols: usize,
}

impl PolyMatrix {
    /// Builds a polynomial matrix from rows of entries. All rows must have
    /// the same positive length.
    pub fn from_entries(rows: Vec<Vec<Poly>>) -> Result<PolyMatrix> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::DimensionMismatch(
                "polynomial matrix must have at least one row and one column".into(),
            ));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(
                "polynomial matrix rows have unequal lengths".into(),
            ));
        }
        let nrows = rows.len();
        Ok(PolyMatrix {
            entries: rows.into_iter().flatten().collect(),
            rows: nrows,
            cols,
        })
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at (row, col), 0-based.
    pub fn entry(&self, row: usize, col: usize) -> &Poly {
        assert!(row < self.rows && col < self.cols, "entry out of range");
        &self.entries[row * self.cols + col]
    }

    /// Largest entry degree (0 when every entry is constant or zero).
    pub fn max_degree(&self) -> usize {
        self.entries
            .iter()
            .filter_map(|p| p.degree())
            .max()
            .unwrap_or(0)
    }

    /// Evaluates every entry at `z`.
    pub fn eval(&self, z: C64) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).eval(z))
    }

    /// The constant matrix of degree-`k` coefficients.
    pub fn coefficient_matrix(&self, k: usize) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).coeff(k))
    }

    /// Keeps the columns of the given sensors (1-based, ascending order).
    pub fn select_columns(&self, subset: &SensorSet) -> Result<PolyMatrix> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        for &col in subset {
            if col == 0 || col > self.cols {
                return Err(Error::IndexOutOfRange {
                    index: col,
                    sensor_count: self.cols,
                });
            }
        }
        let rows = (0..self.rows)
            .map(|i| {
                subset
                    .iter()
                    .map(|&c| self.entry(i, c - 1).clone())
                    .collect()
            })
            .collect();
        PolyMatrix::from_entries(rows)
    }

    /// Keeps the given rows (0-based, ascending order).
    pub fn select_rows(&self, rows: &[usize]) -> Result<PolyMatrix> {
        if rows.is_empty() {
            return Err(Error::EmptySubset);
        }
        for &r in rows {
            if r >= self.rows {
                return Err(Error::IndexOutOfRange {
                    index: r,
                    sensor_count: self.rows,
                });
            }
        }
        let picked = rows
            .iter()
            .map(|&r| (0..self.cols).map(|c| self.entry(r, c).clone()).collect())
            .collect();
        PolyMatrix::from_entries(picked)
    }

    /// Determinant of a square polynomial matrix, computed by evaluating the
    /// numeric determinant at enough roots of unity and interpolating the
    /// coefficients by an inverse discrete Fourier transform.
    pub fn determinant(&self) -> Result<Poly> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if self.rows == 1 {
            // A 1x1 determinant is the entry itself; skip the interpolation
            // and its rounding noise.
            return Ok(self.entry(0, 0).clone());
        }
        // Degree bound: sum over rows of the largest entry degree. A row of
        // zero polynomials forces a zero determinant outright.
        let mut bound = 0;
        for i in 0..self.rows {
            let row_deg = (0..self.cols)
                .filter_map(|j| self.entry(i, j).degree())
                .max();
            match row_deg {
                Some(d) => bound += d,
                None => return Ok(Poly::zero()),
            }
        }
        let samples = bound + 1;
        let values: Vec<C64> = (0..samples)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
                let omega = C64::new(angle.cos(), angle.sin());
                self.eval(omega).determinant()
            })
            .collect();
        let coeffs: Vec<C64> = (0..samples)
            .map(|j| {
                let mut acc = C64::new(0.0, 0.0);
                for (k, &v) in values.iter().enumerate() {
                    let angle = -2.0 * std::f64::consts::PI * (k * j) as f64 / samples as f64;
                    acc += v * C64::new(angle.cos(), angle.sin());
                }
                acc / C64::from(samples as f64)
            })
            .collect();
        // The inverse transform leaves imaginary dust on the coefficients of
        // a real determinant; drop it so downstream root finding sees the
        // real polynomial this actually is.
        let scale = coeffs.iter().fold(0.0_f64, |acc, c| acc.max(c.norm()));
        let coeffs = if coeffs.iter().all(|c| c.im.abs() <= 1e-13 * scale) {
            coeffs.into_iter().map(|c| C64::new(c.re, 0.0)).collect()
        } else {
            coeffs
        };
        Ok(Poly::new(coeffs))
    }
}

/// Whether a tall or square polynomial matrix has full column rank at every
/// complex point. Decided by locating the roots of the first nonzero full-
/// size minor and testing the numeric rank there: a common zero of all
/// minors must in particular be a root of that one.
pub fn is_left_unimodular(m: &PolyMatrix, tol: &ToleranceConfig) -> Result<bool> {
    let (p, q) = (m.rows(), m.cols());
    if p < q {
        return Err(Error::WideMatrix { rows: p, cols: q });
    }
    let mut pivot: Option<Poly> = None;
    for rows in (0..p).combinations(q) {
        let minor = m.select_rows(&rows)?.determinant()?;
        if !minor.is_zero() {
            pivot = Some(minor);
            break;
        }
    }
    let pivot = match pivot {
        // Every full-size minor vanishes identically: rank deficient
        // everywhere, so certainly not left unimodular.
        None => return Ok(false),
        Some(p) => p,
    };
    if pivot.degree() == Some(0) {
        return Ok(true);
    }
    // Scale of the matrix's own coefficients, so that an evaluation that is
    // tiny in these units reads as rank deficient even if interpolation noise
    // keeps its entries from being exactly zero.
    let coeff_scale = (0..p)
        .flat_map(|i| (0..q).map(move |j| (i, j)))
        .flat_map(|(i, j)| m.entry(i, j).coeffs())
        .fold(0.0_f64, |acc, c| acc.max(c.norm()));
    let rel = tol.rank_tol.max(CANDIDATE_RANK_REL);
    for lambda in pivot.root_candidates()? {
        let evaluated = m.eval(lambda);
        let floor = coeff_scale * lambda.norm().max(1.0).powi(m.max_degree() as i32);
        if linalg::numerical_rank_with_floor(&evaluated, rel, floor) < q {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Security index of the behavior ker R(sigma): the size of the smallest
/// column subset of R that is not left unimodular, scanning subsets in
/// ascending size and lexicographic order. R must be square with a
/// determinant that is not identically zero (an autonomous behavior).
pub fn security_index_from_kernel_rep(r: &PolyMatrix, tol: &ToleranceConfig) -> Result<usize> {
    if r.rows() != r.cols() {
        return Err(Error::NotSquare {
            rows: r.rows(),
            cols: r.cols(),
        });
    }
    let sensors = r.cols();
    if r.determinant()?.is_zero() {
        return Err(Error::InvalidKernelRep(
            "the representation is singular as a polynomial matrix, so the behavior is not \
             autonomous"
                .into(),
        ));
    }
    for size in 1..=sensors {
        for subset in (1..=sensors).combinations(size) {
            let subset: SensorSet = subset.into_iter().collect();
            let columns = r.select_columns(&subset)?;
            if !is_left_unimodular(&columns, tol)? {
                return Ok(size);
            }
        }
    }
    Err(Error::InvalidKernelRep(
        "every column subset is left unimodular, so the behavior contains no nonzero \
         trajectory"
            .into(),
    ))
}

/// Applies R(sigma) to a trajectory: output column t is
/// `sum_k R_k r(t + k)` for t = 0..T-d, where d is the largest entry degree.
/// The result is the residual signal a kernel-representation detector
/// monitors; it vanishes on trajectories that obey the laws.
pub fn apply_shift_polynomial(r: &PolyMatrix, traj: &Trajectory) -> Result<Trajectory> {
    if r.cols() != traj.sensor_count() {
        return Err(Error::DimensionMismatch(format!(
            "representation acts on {} signals but the trajectory has {}",
            r.cols(),
            traj.sensor_count()
        )));
    }
    let d = r.max_degree();
    if traj.horizon() <= d {
        return Err(Error::HorizonTooShort {
            horizon: traj.horizon(),
            needed: d + 1,
        });
    }
    let coeffs: Vec<CMatrix> = (0..=d).map(|k| r.coefficient_matrix(k)).collect();
    let out_len = traj.horizon() - d;
    let mut out = CMatrix::zeros(r.rows(), out_len);
    for t in 0..out_len {
        let mut col = nalgebra::DVector::zeros(r.rows());
        for (k, rk) in coeffs.iter().enumerate() {
            col += rk * traj.samples().column(t + k);
        }
        out.set_column(t, &col);
    }
    Trajectory::new(out)
}

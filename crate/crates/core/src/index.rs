//! The security index of a sensor system: the smallest number of sensors an
//! adversary must corrupt to produce a nonzero output history that stays
//! consistent with the system dynamics. Three routes compute it — a direct
//! search over sensor-subset kernels, the spark of the check matrix, and an
//! eigenspace search for diagonalizable dynamics — plus a deliberately naive
//! oracle used to validate the fast paths.

use itertools::Itertools;

use crate::coding::{CheckMatrix, CodingMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{CMatrix, CVector, SensorSet, SystemModel, ToleranceConfig, C64};

/// Relative clustering width for eigenvalues: candidates closer than
/// `EIGEN_CLUSTER_REL * |A|_F` are treated as one eigenvalue.
const EIGEN_CLUSTER_REL: f64 = 1e-8;

/// Sensor budget for the brute-force oracle.
const ORACLE_MAX_SENSORS: usize = 20;

/// How a security-index value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexMethod {
    /// Largest sensor subset whose stacked coding blocks have a nontrivial kernel.
    SubsetKernel,
    /// Smallest set of check-matrix column blocks with a nontrivial kernel.
    Spark,
    /// Sparsest sensor footprint over the eigenspaces of the state matrix.
    Eigen,
    /// Exhaustive reference search.
    Oracle,
}

/// The security index together with a minimal attack witness.
#[derive(Debug, Clone)]
pub struct SecurityIndexReport {
    /// The security index: minimum sensors an undetectable nonzero attack needs.
    pub delta: usize,
    /// Which computation produced this report.
    pub method: IndexMethod,
    /// Initial state generating a minimal-weight nonzero trajectory. `None`
    /// only for single-sensor systems, where any nonzero state serves.
    pub witness_state: Option<CVector>,
    /// Sensors on which the witness trajectory is nonzero.
    pub witness_support: SensorSet,
}

/// Sensors on which the first-n-samples response `G_i x` is nonzero. Because
/// later samples are linear combinations of the first n, this is exactly the
/// support of the infinite trajectory generated by `x`.
fn block_support(cm: &CodingMatrix, x: &CVector, tol: &ToleranceConfig) -> SensorSet {
    (0..cm.sensor_count())
        .filter(|&i| linalg::max_abs(&(&cm.blocks()[i] * x)) > tol.detect_tol)
        .map(|i| i + 1)
        .collect()
}

/// Computes the security index by searching for the largest sensor subset J
/// whose stacked blocks still have a nontrivial kernel; the index is then
/// N - |J|. Subsets of equal size are scanned in ascending lexicographic
/// order and the first hit wins, making the witness deterministic.
pub fn security_index_subset(cm: &CodingMatrix, tol: &ToleranceConfig) -> SecurityIndexReport {
    let sensors = cm.sensor_count();
    if sensors == 1 {
        // A single unobservable-by-complement subset cannot exist: the empty
        // complement leaves the full coding matrix, which is injective. Any
        // nonzero state already yields a nonzero (weight-1) trajectory.
        return SecurityIndexReport {
            delta: 1,
            method: IndexMethod::SubsetKernel,
            witness_state: None,
            witness_support: SensorSet::from([1]),
        };
    }
    for size in (1..sensors).rev() {
        for subset in (1..=sensors).combinations(size) {
            let subset: SensorSet = subset.into_iter().collect();
            let stacked = cm
                .stack_subset(&subset)
                .expect("enumerated subsets are nonempty and in range");
            if let Some(witness) = linalg::kernel_vector(&stacked, tol.rank_tol) {
                let support = block_support(cm, &witness, tol);
                return SecurityIndexReport {
                    delta: sensors - size,
                    method: IndexMethod::SubsetKernel,
                    witness_state: Some(witness),
                    witness_support: support,
                };
            }
        }
    }
    // No proper subset hides a state: every nonzero state excites every
    // sensor, so the cheapest consistent attack corrupts all of them.
    let n = cm.state_dim();
    let mut witness = CVector::zeros(n);
    witness[0] = C64::new(1.0, 0.0);
    let support = block_support(cm, &witness, tol);
    SecurityIndexReport {
        delta: sensors,
        method: IndexMethod::SubsetKernel,
        witness_state: Some(witness),
        witness_support: support,
    }
}

/// The spark of a check matrix: the size of the smallest set of sensor column
/// blocks that together have a nontrivial kernel. Equals the security index
/// of the system the check matrix annihilates. For a single-sensor system the
/// check matrix has no rows and the spark is 1 by convention.
pub fn spark(h: &CheckMatrix, tol: &ToleranceConfig) -> usize {
    let sensors = h.sensor_count();
    if sensors == 1 {
        return 1;
    }
    for size in 1..=sensors {
        for subset in (1..=sensors).combinations(size) {
            let subset: SensorSet = subset.into_iter().collect();
            let cols = h
                .block_columns(&subset)
                .expect("enumerated subsets are nonempty and in range");
            if linalg::has_nontrivial_kernel(&cols, tol.rank_tol) {
                return size;
            }
        }
    }
    // Unreachable for a genuine check matrix: the full column set is wide
    // (n(N-1) rows vs nN columns) and always has a kernel.
    sensors
}

/// Eigenvalues of the state matrix with orthonormal bases of the associated
/// eigenspaces, plus a diagonalizability verdict.
#[derive(Debug, Clone)]
pub struct EigenStructure {
    /// Distinct eigenvalues (pairwise separated beyond the clustering width).
    pub eigenvalues: Vec<C64>,
    /// Orthonormal eigenspace basis for each eigenvalue, column-wise.
    pub eigenspaces: Vec<CMatrix>,
    /// Whether the geometric multiplicities sum to the state dimension and
    /// the pooled eigenvectors actually span it.
    pub diagonalizable: bool,
}

impl EigenStructure {
    /// Computes the eigenstructure of the system's state matrix.
    pub fn compute(sys: &SystemModel, tol: &ToleranceConfig) -> Result<EigenStructure> {
        let a = sys.state_matrix();
        let n = sys.state_dim();
        let candidates = linalg::eigenvalue_candidates(a)?;

        // Cluster candidates: nearby values (and, for complex matrices, the
        // spurious conjugates the real embedding introduces) collapse or get
        // filtered by the eigenspace test below.
        let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let width = EIGEN_CLUSTER_REL * scale.max(f64::MIN_POSITIVE);
        let mut clusters: Vec<(C64, usize)> = Vec::new(); // (mean, count)
        let mut sorted = candidates;
        sorted.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .expect("eigenvalue candidates are finite")
        });
        for z in sorted {
            match clusters
                .iter_mut()
                .find(|(mean, _)| (z - *mean).norm() <= width)
            {
                Some((mean, count)) => {
                    *mean = (*mean * C64::from(*count as f64) + z) / C64::from((*count + 1) as f64);
                    *count += 1;
                }
                None => clusters.push((z, 1)),
            }
        }

        let mut eigenvalues = Vec::new();
        let mut eigenspaces = Vec::new();
        let mut geometric_total = 0;
        for (lambda, _) in clusters {
            let shifted = a.clone() - CMatrix::identity(n, n) * lambda;
            let basis = linalg::null_space_basis(&shifted, tol.rank_tol);
            if basis.ncols() == 0 {
                // Spurious candidate (e.g. a conjugate from the real
                // embedding that is not actually an eigenvalue).
                continue;
            }
            geometric_total += basis.ncols();
            eigenvalues.push(lambda);
            eigenspaces.push(basis);
        }

        // Diagonalizable means the eigenvectors span the whole state space.
        // Checking the pooled basis rank guards against a defective repeated
        // eigenvalue that numerically splits into close simple ones, each
        // with a (nearly identical) one-dimensional eigenspace.
        let diagonalizable = geometric_total == n && {
            let mut pooled = CMatrix::zeros(n, geometric_total);
            let mut col = 0;
            for basis in &eigenspaces {
                pooled
                    .view_mut((0, col), (n, basis.ncols()))
                    .copy_from(basis);
                col += basis.ncols();
            }
            linalg::numerical_rank(&pooled, tol.rank_tol) == n
        };

        Ok(EigenStructure {
            eigenvalues,
            eigenspaces,
            diagonalizable,
        })
    }
}

/// Computes the security index of a diagonalizable system by minimizing the
/// sensor footprint of C x over all eigenvectors x, one eigenspace at a time.
/// Every steady eigen-trajectory y(t) = lambda^t C x has constant support, so
/// the sparsest one is a cheapest consistent attack.
pub fn security_index_eigen(
    sys: &SystemModel,
    es: &EigenStructure,
    tol: &ToleranceConfig,
) -> Result<SecurityIndexReport> {
    if !es.diagonalizable {
        return Err(Error::NotDiagonalizable);
    }
    let c = sys.output_matrix();
    let sensors = sys.sensor_count();
    let mut best: Option<(usize, CVector)> = None;

    for basis in &es.eigenspaces {
        let dim = basis.ncols();
        let (weight, state) = if dim == 1 {
            let x = basis.column(0).into_owned();
            let footprint = (c * &x)
                .iter()
                .filter(|z| z.norm() > tol.detect_tol)
                .count();
            (footprint, x)
        } else {
            // Within a multidimensional eigenspace, search for the largest
            // sensor subset K that some eigenvector silences: the kernel of
            // C_K restricted to the eigenspace. Mirrors the subset search,
            // but inside an n-free d-dimensional coordinate space.
            let mut found: Option<(usize, CVector)> = None;
            'sizes: for size in (1..sensors).rev() {
                for subset in (1..=sensors).combinations(size) {
                    let mut rows = CMatrix::zeros(size, dim);
                    for (pos, &sensor) in subset.iter().enumerate() {
                        rows.view_mut((pos, 0), (1, dim))
                            .copy_from(&(c.row(sensor - 1) * basis));
                    }
                    if let Some(coeffs) = linalg::kernel_vector(&rows, tol.rank_tol) {
                        found = Some((sensors - size, basis * coeffs));
                        break 'sizes;
                    }
                }
            }
            match found {
                Some(hit) => hit,
                None => (sensors, basis.column(0).into_owned()),
            }
        };
        let improved = match &best {
            Some((best_weight, _)) => weight < *best_weight,
            None => true,
        };
        if improved {
            best = Some((weight, state));
        }
    }

    let (delta, state) = best.expect("an observable system has at least one eigenvalue");
    let support: SensorSet = (c * &state)
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > tol.detect_tol)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(SecurityIndexReport {
        delta,
        method: IndexMethod::Eigen,
        witness_state: Some(state),
        witness_support: support,
    })
}

/// Exhaustive reference computation: scans every sensor subset, largest
/// first, for a nontrivial kernel of the stacked blocks. Intentionally
/// unoptimized; refuses systems with more than 20 sensors.
pub fn oracle_security_index(cm: &CodingMatrix, tol: &ToleranceConfig) -> Result<usize> {
    let sensors = cm.sensor_count();
    if sensors > ORACLE_MAX_SENSORS {
        return Err(Error::TooManySensors {
            sensor_count: sensors,
            max: ORACLE_MAX_SENSORS,
        });
    }
    if sensors == 1 {
        return Ok(1);
    }
    let mut largest_hidden: Option<usize> = None;
    for size in 1..sensors {
        for subset in (1..=sensors).combinations(size) {
            let subset: SensorSet = subset.into_iter().collect();
            let stacked = cm.stack_subset(&subset)?;
            if linalg::has_nontrivial_kernel(&stacked, tol.rank_tol) {
                largest_hidden = Some(largest_hidden.map_or(size, |cur| cur.max(size)));
            }
        }
    }
    Ok(match largest_hidden {
        Some(size) => sensors - size,
        None => sensors,
    })
}

/// Whether the system is maximally secure: the security index equals the
/// sensor count, i.e. every single sensor block is already injective.
pub fn is_maximally_secure(cm: &CodingMatrix, tol: &ToleranceConfig) -> bool {
    cm.blocks()
        .iter()
        .all(|block| !linalg::has_nontrivial_kernel(block, tol.rank_tol))
}

/// Security-index values from every applicable method, for cross-checking
/// and reporting. `spark` is `None` when the sensor count exceeds the search
/// budget; `eigen` is `None` when the state matrix is not diagonalizable (or
/// its eigenstructure could not be computed).
#[derive(Debug, Clone)]
pub struct MethodSurvey {
    pub subset: SecurityIndexReport,
    pub spark: Option<usize>,
    pub eigen: Option<SecurityIndexReport>,
}

impl MethodSurvey {
    /// The agreed security index, or an error naming each method's value if
    /// any two applicable methods differ.
    pub fn consensus(&self) -> Result<usize> {
        let subset = self.subset.delta;
        let spark_val = self.spark;
        let eigen_val = self.eigen.as_ref().map(|r| r.delta);
        let agree = spark_val.is_none_or(|s| s == subset) && eigen_val.is_none_or(|e| e == subset);
        if agree {
            Ok(subset)
        } else {
            Err(Error::MethodDisagreement {
                subset,
                spark: spark_val,
                eigen: eigen_val,
            })
        }
    }
}

/// Runs every applicable method: the subset search always, the spark search
/// when the sensor count is within `spark_budget`, and the eigenspace method
/// when the state matrix is diagonalizable.
pub fn survey_methods(
    sys: &SystemModel,
    tol: &ToleranceConfig,
    spark_budget: usize,
) -> MethodSurvey {
    let cm = CodingMatrix::build(sys);
    let subset = security_index_subset(&cm, tol);
    let spark_val = if sys.sensor_count() <= spark_budget {
        let h = CheckMatrix::build(&cm, tol);
        Some(spark(&h, tol))
    } else {
        None
    };
    let eigen = match EigenStructure::compute(sys, tol) {
        Ok(es) if es.diagonalizable => security_index_eigen(sys, &es, tol).ok(),
        _ => None,
    };
    MethodSurvey {
        subset,
        spark: spark_val,
        eigen,
    }
}

/// Default spark budget for [`security_index`]: with more sensors than this,
/// the dispatcher skips the spark cross-check.
pub const DEFAULT_SPARK_BUDGET: usize = 12;

/// Computes the security index, cross-checking every applicable method, and
/// returns the subset-search report. Disagreement between methods is an
/// error, never a silent choice.
pub fn security_index(sys: &SystemModel, tol: &ToleranceConfig) -> Result<SecurityIndexReport> {
    let survey = survey_methods(sys, tol, DEFAULT_SPARK_BUDGET);
    survey.consensus()?;
    Ok(survey.subset)
}

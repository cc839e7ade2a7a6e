//! System data: state-space model, sensor trajectories, attack signals and
//! the tolerance configuration shared by all numerical routines.

use std::collections::BTreeSet;

use nalgebra::{Complex, DMatrix, DVector};

use crate::coding;
use crate::error::{Error, Result};
use crate::linalg;

/// Complex scalar used throughout the crate.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = DVector<C64>;
/// Set of 1-based sensor indices.
pub type SensorSet = BTreeSet<usize>;

/// Numerical tolerances used by rank tests, residual checks and detection
/// thresholds. All fields must be nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff: a singular value sigma of an m x k
    /// matrix is treated as zero when sigma <= rank_tol * max(m, k) * sigma_max.
    pub rank_tol: f64,
    /// Relative residual below which a least-squares fit counts as consistent.
    pub residual_tol: f64,
    /// Magnitude below which a trajectory or syndrome entry counts as zero.
    pub detect_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank_tol: 1e-10,
            residual_tol: 1e-8,
            detect_tol: 1e-9,
        }
    }
}

impl ToleranceConfig {
    /// Builds a tolerance configuration, rejecting negative or non-finite values.
    pub fn new(rank_tol: f64, residual_tol: f64, detect_tol: f64) -> Result<Self> {
        for (name, v) in [
            ("rank_tol", rank_tol),
            ("residual_tol", residual_tol),
            ("detect_tol", detect_tol),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parse(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(ToleranceConfig {
            rank_tol,
            residual_tol,
            detect_tol,
        })
    }
}

/// Builds a complex matrix from real entries in row-major order.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(rows * cols, entries.len(), "entry count must match shape");
    CMatrix::from_row_slice(
        rows,
        cols,
        &entries
            .iter()
            .map(|&x| C64::new(x, 0.0))
            .collect::<Vec<_>>(),
    )
}

/// Builds a complex column vector from real entries.
pub fn real_vector(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&x| C64::new(x, 0.0)))
}

fn check_finite(m: &CMatrix, what: &str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// A discrete-time autonomous system x(t+1) = A x(t), y(t) = C x(t) whose
/// pair (A, C) is observable. Rows of C are the individual sensors.
#[derive(Debug, Clone)]
pub struct SystemModel {
    a: CMatrix,
    c: CMatrix,
}

impl SystemModel {
    /// Validates and wraps a state matrix `a` (n x n) and output matrix `c`
    /// (N x n). Fails when dimensions are inconsistent, entries are not
    /// finite, or the pair is unobservable.
    pub fn new(a: CMatrix, c: CMatrix) -> Result<Self> {
        Self::with_tolerance(a, c, &ToleranceConfig::default())
    }

    /// Like [`SystemModel::new`] but with an explicit rank tolerance for the
    /// observability test.
    pub fn with_tolerance(a: CMatrix, c: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "state matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "state dimension must be at least 1".into(),
            ));
        }
        if c.nrows() == 0 {
            return Err(Error::DimensionMismatch(
                "output matrix must have at least one sensor row".into(),
            ));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "output matrix has {} columns, state dimension is {}",
                c.ncols(),
                n
            )));
        }
        check_finite(&a, "state matrix")?;
        check_finite(&c, "output matrix")?;

        let stack = coding::observability_stack(&a, &c);
        let rank = linalg::numerical_rank(&stack, tol.rank_tol);
        if rank < n {
            return Err(Error::NotObservable { rank, state_dim: n });
        }
        Ok(SystemModel { a, c })
    }

    /// State dimension n.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Number of sensors N (rows of C).
    pub fn sensor_count(&self) -> usize {
        self.c.nrows()
    }

    /// The state matrix A.
    pub fn state_matrix(&self) -> &CMatrix {
        &self.a
    }

    /// The output matrix C.
    pub fn output_matrix(&self) -> &CMatrix {
        &self.c
    }
}

/// A finite stretch of sensor data: an N x T matrix whose rows are sensors
/// and whose columns are time instants 0..T.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: CMatrix,
}

impl Trajectory {
    /// Wraps an N x T sample matrix. Requires N >= 1, T >= 1 and finite entries.
    pub fn new(samples: CMatrix) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "trajectory must have at least one sensor and one sample, got {}x{}",
                samples.nrows(),
                samples.ncols()
            )));
        }
        check_finite(&samples, "trajectory samples")?;
        Ok(Trajectory { samples })
    }

    /// Builds a trajectory from real samples in row-major order
    /// (`entries[i * horizon + t]` is sensor i+1 at time t).
    pub fn from_real(sensors: usize, horizon: usize, entries: &[f64]) -> Result<Self> {
        if sensors * horizon != entries.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} entries cannot fill a {}x{} trajectory",
                entries.len(),
                sensors,
                horizon
            )));
        }
        Trajectory::new(real_matrix(sensors, horizon, entries))
    }

    /// Number of sensors N.
    pub fn sensor_count(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of time samples T.
    pub fn horizon(&self) -> usize {
        self.samples.ncols()
    }

    /// The underlying N x T sample matrix.
    pub fn samples(&self) -> &CMatrix {
        &self.samples
    }

    /// Sample of sensor `sensor` (1-based) at time `t` (0-based).
    pub fn sample(&self, sensor: usize, t: usize) -> C64 {
        self.samples[(sensor - 1, t)]
    }

    /// Largest entry magnitude over all sensors and times.
    pub fn peak_magnitude(&self) -> f64 {
        linalg::max_abs(&self.samples)
    }

    /// Entrywise difference `self - other`; horizons and sensor counts must match.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.samples.shape() != other.samples.shape() {
            return Err(Error::DimensionMismatch(format!(
                "trajectories have shapes {:?} and {:?}",
                self.samples.shape(),
                other.samples.shape()
            )));
        }
        Trajectory::new(&self.samples - &other.samples)
    }

    /// The trajectory restricted to times `start..horizon`.
    pub fn tail(&self, start: usize) -> Result<Trajectory> {
        if start >= self.horizon() {
            return Err(Error::WindowOutOfRange {
                start,
                window: 1,
                horizon: self.horizon(),
            });
        }
        Trajectory::new(
            self.samples
                .columns(start, self.horizon() - start)
                .into_owned(),
        )
    }
}

/// An additive sensor attack: an N x T matrix of corruptions together with
/// its support, the exact set of sensors whose row is not identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSignal {
    samples: CMatrix,
    support: SensorSet,
}

impl AttackSignal {
    /// Wraps an N x T corruption matrix; the support is derived from the
    /// exactly-nonzero rows.
    pub fn new(samples: CMatrix) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "attack signal must have at least one sensor and one sample, got {}x{}",
                samples.nrows(),
                samples.ncols()
            )));
        }
        check_finite(&samples, "attack samples")?;
        let support = (0..samples.nrows())
            .filter(|&i| samples.row(i).iter().any(|z| z.norm() > 0.0))
            .map(|i| i + 1)
            .collect();
        Ok(AttackSignal { samples, support })
    }

    /// Number of sensors N.
    pub fn sensor_count(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of time samples T.
    pub fn horizon(&self) -> usize {
        self.samples.ncols()
    }

    /// The underlying N x T corruption matrix.
    pub fn samples(&self) -> &CMatrix {
        &self.samples
    }

    /// Sensors this attack touches (1-based).
    pub fn support(&self) -> &SensorSet {
        &self.support
    }

    /// Number of attacked sensors.
    pub fn weight(&self) -> usize {
        self.support.len()
    }

    /// Views the corruption itself as a trajectory.
    pub fn as_trajectory(&self) -> Trajectory {
        Trajectory {
            samples: self.samples.clone(),
        }
    }
}

/// Sensors whose trajectory row is not identically zero, judged against
/// `tol.detect_tol`. Indices are 1-based.
pub fn support(traj: &Trajectory, tol: &ToleranceConfig) -> SensorSet {
    (0..traj.sensor_count())
        .filter(|&i| {
            traj.samples()
                .row(i)
                .iter()
                .any(|z| z.norm() > tol.detect_tol)
        })
        .map(|i| i + 1)
        .collect()
}

/// Number of sensors whose trajectory row is not identically zero. Always
/// equals `support(traj, tol).len()`.
pub fn weight(traj: &Trajectory, tol: &ToleranceConfig) -> usize {
    support(traj, tol).len()
}

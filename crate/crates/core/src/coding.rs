//! The coding matrix of a sensor system, its annihilating check matrix, and
//! windowed trajectory extraction.
//!
//! For an observable pair (A, C) with state dimension n and N sensors, sensor
//! i contributes the n x n block G_i whose rows are C_i, C_i A, ...,
//! C_i A^{n-1} — the response of sensor i over the first n time steps as a
//! function of the initial state. Stacking the blocks gives the nN x n coding
//! matrix G. Because any longer response is determined by the first n samples
//! (powers of A beyond A^{n-1} are combinations of lower powers), a length-n
//! output window carries the same information as the whole trajectory.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{CMatrix, CVector, SensorSet, SystemModel, ToleranceConfig, Trajectory};

/// The row stack [C; C A; ...; C A^{n-1}] in plain time-major order. Shares
/// its rows with the coding matrix (up to a permutation), so it has full
/// column rank exactly when the coding matrix does.
pub(crate) fn observability_stack(a: &CMatrix, c: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let sensors = c.nrows();
    let mut stack = CMatrix::zeros(sensors * n, n);
    let mut power = c.clone(); // C A^k for k = 0, 1, ...
    for k in 0..n {
        stack
            .view_mut((k * sensors, 0), (sensors, n))
            .copy_from(&power);
        if k + 1 < n {
            power = &power * a;
        }
    }
    stack
}

/// The sensor-major coding matrix of a system: one n x n block per sensor,
/// stacked in sensor order.
#[derive(Debug, Clone)]
pub struct CodingMatrix {
    blocks: Vec<CMatrix>,
    full: CMatrix,
    state_dim: usize,
}

impl CodingMatrix {
    /// Builds the coding matrix of an (already validated) system.
    pub fn build(sys: &SystemModel) -> CodingMatrix {
        let n = sys.state_dim();
        let sensors = sys.sensor_count();
        let stack = observability_stack(sys.state_matrix(), sys.output_matrix());
        // stack row (k * N + i) is sensor i at time k; regroup per sensor.
        let mut blocks = Vec::with_capacity(sensors);
        let mut full = CMatrix::zeros(sensors * n, n);
        for i in 0..sensors {
            let mut block = CMatrix::zeros(n, n);
            for k in 0..n {
                block
                    .view_mut((k, 0), (1, n))
                    .copy_from(&stack.row(k * sensors + i));
            }
            full.view_mut((i * n, 0), (n, n)).copy_from(&block);
            blocks.push(block);
        }
        CodingMatrix {
            blocks,
            full,
            state_dim: n,
        }
    }

    /// State dimension n (each block is n x n).
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Number of sensors N.
    pub fn sensor_count(&self) -> usize {
        self.blocks.len()
    }

    /// The full nN x n matrix with sensor blocks stacked in order.
    pub fn matrix(&self) -> &CMatrix {
        &self.full
    }

    /// Per-sensor blocks; element `i` belongs to sensor `i + 1`.
    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// Block of a single sensor (1-based index).
    pub fn block(&self, sensor: usize) -> Result<&CMatrix> {
        if sensor == 0 || sensor > self.sensor_count() {
            return Err(Error::IndexOutOfRange {
                index: sensor,
                sensor_count: self.sensor_count(),
            });
        }
        Ok(&self.blocks[sensor - 1])
    }

    /// Stacks the blocks of the given sensors (1-based, ascending) into an
    /// |J| n x n matrix.
    pub fn stack_subset(&self, subset: &SensorSet) -> Result<CMatrix> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let n = self.state_dim;
        let mut out = CMatrix::zeros(subset.len() * n, n);
        for (pos, &sensor) in subset.iter().enumerate() {
            let block = self.block(sensor)?;
            out.view_mut((pos * n, 0), (n, n)).copy_from(block);
        }
        Ok(out)
    }
}

/// A full-row-rank left annihilator H of the coding matrix (H G = 0) with
/// orthonormal rows. A windowed output lies in the range of G exactly when H
/// maps it to zero, so H converts membership testing into a matrix product.
#[derive(Debug, Clone)]
pub struct CheckMatrix {
    h: CMatrix,
    state_dim: usize,
}

impl CheckMatrix {
    /// Derives the check matrix from a coding matrix: an (nN - n) x nN matrix
    /// whose rows span the orthogonal complement of the range of G.
    pub fn build(cm: &CodingMatrix, tol: &ToleranceConfig) -> CheckMatrix {
        // Columns of Z span the kernel of G^H, i.e. Z^H G = 0.
        let z = linalg::null_space_basis(&cm.matrix().adjoint(), tol.rank_tol);
        CheckMatrix {
            h: z.adjoint(),
            state_dim: cm.state_dim(),
        }
    }

    /// Wraps an externally supplied check matrix. The column count must be a
    /// positive multiple of `state_dim`; rows are taken as given (they are
    /// not re-orthonormalized).
    pub fn from_parts(h: CMatrix, state_dim: usize) -> Result<CheckMatrix> {
        if state_dim == 0 || h.ncols() == 0 || !h.ncols().is_multiple_of(state_dim) {
            return Err(Error::DimensionMismatch(format!(
                "a check matrix over blocks of size {} cannot have {} columns",
                state_dim,
                h.ncols()
            )));
        }
        Ok(CheckMatrix { h, state_dim })
    }

    /// The stored matrix.
    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    /// Block size n.
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Number of sensors N (column blocks).
    pub fn sensor_count(&self) -> usize {
        self.h.ncols() / self.state_dim
    }

    /// Juxtaposes the column blocks of the given sensors (1-based, ascending)
    /// into a rows x (|J| n) matrix.
    pub fn block_columns(&self, subset: &SensorSet) -> Result<CMatrix> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let n = self.state_dim;
        let mut out = CMatrix::zeros(self.h.nrows(), subset.len() * n);
        for (pos, &sensor) in subset.iter().enumerate() {
            if sensor == 0 || sensor > self.sensor_count() {
                return Err(Error::IndexOutOfRange {
                    index: sensor,
                    sensor_count: self.sensor_count(),
                });
            }
            out.view_mut((0, pos * n), (self.h.nrows(), n))
                .copy_from(&self.h.view((0, (sensor - 1) * n), (self.h.nrows(), n)));
        }
        Ok(out)
    }
}

/// Stacks the samples of a length-`window` slice of a trajectory starting at
/// time `start` into a single sensor-major vector: sensor 1's samples first,
/// then sensor 2's, and so on — matching the coding matrix's block order.
pub fn window_vector(traj: &Trajectory, start: usize, window: usize) -> Result<CVector> {
    if window == 0 {
        return Err(Error::WindowOutOfRange {
            start,
            window,
            horizon: traj.horizon(),
        });
    }
    if start + window > traj.horizon() {
        return Err(Error::WindowOutOfRange {
            start,
            window,
            horizon: traj.horizon(),
        });
    }
    let sensors = traj.sensor_count();
    let mut out = CVector::zeros(sensors * window);
    for i in 0..sensors {
        for k in 0..window {
            out[i * window + k] = traj.samples()[(i, start + k)];
        }
    }
    Ok(out)
}

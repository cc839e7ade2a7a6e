//! Attack detection and correction on received sensor data.
//!
//! Detection slides a length-n window over the received trajectory and checks
//! each windowed slice against the system laws (via the check matrix, or a
//! kernel representation when one is supplied). Any attack touching fewer
//! sensors than the security index must light up some window; an attack that
//! *is* a legal trajectory of minimal weight evades every detector.
//!
//! Correction searches for the smallest set of sensors whose removal makes
//! the rest of the data consistent with some initial state. When the attack
//! weight is below half the security index the fit is unique and exact.

use itertools::Itertools;

use crate::coding::{window_vector, CheckMatrix, CodingMatrix};
use crate::error::{Error, Result};
use crate::index::security_index_subset;
use crate::linalg;
use crate::model::{CMatrix, CVector, SensorSet, SystemModel, ToleranceConfig, Trajectory};
use crate::polymat::{apply_shift_polynomial, PolyMatrix};
use crate::simulate::simulate;

/// Outcome of sliding-window detection.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DetectionReport {
    /// Whether any window is inconsistent with the system laws.
    pub attacked: bool,
    /// Largest window residual norm, relative to the peak magnitude of the
    /// received data (0 when the data is identically zero). `attacked` is
    /// exactly `max_syndrome_norm > detect_tol`.
    pub max_syndrome_norm: f64,
    /// Earliest window start that exceeds the threshold, if any.
    pub first_flagged_window: Option<usize>,
}

/// Result of a successful attack correction.
#[derive(Debug, Clone)]
pub struct CorrectionResult {
    /// Estimated initial state.
    pub x0_estimate: CVector,
    /// Sensors identified as attacked (possibly empty).
    pub attack_support: SensorSet,
    /// The cleaned trajectory, re-simulated from the estimated state.
    pub corrected: Trajectory,
    /// Euclidean residual of the trusted-sensor fit.
    pub residual: f64,
    /// Number of candidate supports examined before acceptance.
    pub search_size: usize,
}

fn build_detection_report(norms: Vec<f64>, scale: f64, detect_tol: f64) -> DetectionReport {
    let normalized: Vec<f64> = if scale > 0.0 {
        norms.iter().map(|&v| v / scale).collect()
    } else {
        norms
    };
    let max_syndrome_norm = normalized.iter().fold(0.0_f64, |acc, &v| acc.max(v));
    let first_flagged_window = normalized.iter().position(|&v| v > detect_tol);
    DetectionReport {
        attacked: max_syndrome_norm > detect_tol,
        max_syndrome_norm,
        first_flagged_window,
    }
}

/// Detects attacks by applying the check matrix to every length-n window of
/// the received trajectory. Needs at least n samples.
pub fn detect_with_check_matrix(
    sys: &SystemModel,
    received: &Trajectory,
    tol: &ToleranceConfig,
) -> Result<DetectionReport> {
    if received.sensor_count() != sys.sensor_count() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} sensors but the trajectory has {}",
            sys.sensor_count(),
            received.sensor_count()
        )));
    }
    let n = sys.state_dim();
    if received.horizon() < n {
        return Err(Error::HorizonTooShort {
            horizon: received.horizon(),
            needed: n,
        });
    }
    let cm = CodingMatrix::build(sys);
    let h = CheckMatrix::build(&cm, tol);
    let norms = (0..=received.horizon() - n)
        .map(|start| {
            let w = window_vector(received, start, n)?;
            Ok((h.matrix() * w).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(build_detection_report(
        norms,
        received.peak_magnitude(),
        tol.detect_tol,
    ))
}

/// Detects attacks by running a kernel representation over the received
/// trajectory and thresholding the residual columns entrywise (infinity
/// norm). Needs more samples than the largest entry degree.
pub fn detect_with_kernel_rep(
    rep: &PolyMatrix,
    received: &Trajectory,
    tol: &ToleranceConfig,
) -> Result<DetectionReport> {
    let residual = apply_shift_polynomial(rep, received)?;
    let norms = (0..residual.horizon())
        .map(|t| {
            residual
                .samples()
                .column(t)
                .iter()
                .fold(0.0_f64, |acc, z| acc.max(z.norm()))
        })
        .collect();
    Ok(build_detection_report(
        norms,
        received.peak_magnitude(),
        tol.detect_tol,
    ))
}

/// Observation matrix mapping an initial state to the stacked samples of the
/// given sensors over the whole horizon (sensor-major, time within sensor).
fn observation_matrix(
    sys: &SystemModel,
    sensors: &SensorSet,
    horizon: usize,
) -> (CMatrix, Vec<(usize, usize)>) {
    let n = sys.state_dim();
    // C A^t for every t, computed once.
    let mut powers = Vec::with_capacity(horizon);
    let mut current = sys.output_matrix().clone();
    for _ in 0..horizon {
        powers.push(current.clone());
        current = &current * sys.state_matrix();
    }
    let mut matrix = CMatrix::zeros(sensors.len() * horizon, n);
    let mut layout = Vec::with_capacity(sensors.len() * horizon);
    for (pos, &sensor) in sensors.iter().enumerate() {
        for (t, power) in powers.iter().enumerate() {
            matrix
                .view_mut((pos * horizon + t, 0), (1, n))
                .copy_from(&power.row(sensor - 1));
            layout.push((sensor, t));
        }
    }
    (matrix, layout)
}

fn stacked_samples(traj: &Trajectory, layout: &[(usize, usize)]) -> CVector {
    CVector::from_iterator(
        layout.len(),
        layout
            .iter()
            .map(|&(sensor, t)| traj.samples()[(sensor - 1, t)]),
    )
}

/// Estimates the initial state from the data of a trusted sensor subset by
/// least squares over the whole horizon. Fails when the trusted sensors do
/// not pin the state down uniquely.
pub fn reconstruct_state(
    sys: &SystemModel,
    received: &Trajectory,
    trusted: &SensorSet,
    tol: &ToleranceConfig,
) -> Result<(CVector, f64)> {
    if received.sensor_count() != sys.sensor_count() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} sensors but the trajectory has {}",
            sys.sensor_count(),
            received.sensor_count()
        )));
    }
    if trusted.is_empty() {
        return Err(Error::EmptySubset);
    }
    for &sensor in trusted {
        if sensor == 0 || sensor > sys.sensor_count() {
            return Err(Error::IndexOutOfRange {
                index: sensor,
                sensor_count: sys.sensor_count(),
            });
        }
    }
    let (matrix, layout) = observation_matrix(sys, trusted, received.horizon());
    let rank = linalg::numerical_rank(&matrix, tol.rank_tol);
    if rank < sys.state_dim() {
        return Err(Error::InsufficientObservability {
            rank,
            state_dim: sys.state_dim(),
        });
    }
    let b = stacked_samples(received, &layout);
    linalg::least_squares(&matrix, &b, tol.rank_tol)
}

/// Corrects a sensor attack of weight below half the security index.
///
/// Candidate supports are scanned in ascending weight (lexicographic within a
/// weight); a support is accepted when the remaining sensors' data fits some
/// initial state with relative residual below `residual_tol`. All accepted
/// supports of the minimal weight must agree on the corrected trajectory.
pub fn correct(
    sys: &SystemModel,
    received: &Trajectory,
    tol: &ToleranceConfig,
) -> Result<CorrectionResult> {
    if received.sensor_count() != sys.sensor_count() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} sensors but the trajectory has {}",
            sys.sensor_count(),
            received.sensor_count()
        )));
    }
    let n = sys.state_dim();
    if received.horizon() < n {
        return Err(Error::HorizonTooShort {
            horizon: received.horizon(),
            needed: n,
        });
    }
    let sensors = sys.sensor_count();
    let cm = CodingMatrix::build(sys);
    let delta = security_index_subset(&cm, tol).delta;
    // Unique correction is guaranteed strictly below delta / 2.
    let max_weight = delta.saturating_sub(1) / 2;

    let scale = received.peak_magnitude().max(1.0);
    let mut search_size = 0;
    for weight in 0..=max_weight {
        let mut accepted: Vec<(SensorSet, CVector, f64)> = Vec::new();
        for attacked in (1..=sensors).combinations(weight) {
            search_size += 1;
            let attacked: SensorSet = attacked.into_iter().collect();
            let trusted: SensorSet = (1..=sensors).filter(|s| !attacked.contains(s)).collect();
            let (matrix, layout) = observation_matrix(sys, &trusted, received.horizon());
            let b = stacked_samples(received, &layout);
            let (x0, residual) = linalg::least_squares(&matrix, &b, tol.rank_tol)?;
            if residual <= tol.residual_tol * b.norm().max(1.0) {
                accepted.push((attacked, x0, residual));
            }
        }
        if accepted.is_empty() {
            continue;
        }
        // All accepted supports of this weight must reproduce the same
        // clean trajectory; otherwise the tolerances are inconsistent.
        let trajectories: Vec<Trajectory> = accepted
            .iter()
            .map(|(_, x0, _)| simulate(sys, x0, received.horizon()))
            .collect();
        for other in &trajectories[1..] {
            let diff = other.difference(&trajectories[0])?;
            if diff.peak_magnitude() > tol.residual_tol * scale {
                return Err(Error::AmbiguousCorrection { weight });
            }
        }
        let (attack_support, x0_estimate, residual) = accepted.swap_remove(0);
        let corrected = trajectories
            .into_iter()
            .next()
            .expect("nonempty accepted set");
        return Ok(CorrectionResult {
            x0_estimate,
            attack_support,
            corrected,
            residual,
            search_size,
        });
    }
    Err(Error::NoConsistentSupport {
        max_weight,
        supports_tested: search_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{real_matrix, real_vector, AttackSignal, CMatrix, C64};
    use crate::polymat::Poly;
    use crate::simulate::{inject, random_attack};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn two_sensor_system() -> SystemModel {
        SystemModel::new(
            real_matrix(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            real_matrix(2, 2, &[1.0, 1.0, 1.0, -1.0]),
        )
        .unwrap()
    }

    /// Scalar state read by three identical sensors: security index 3, so
    /// single-sensor attacks are uniquely correctable.
    fn triple_sensor_system() -> SystemModel {
        SystemModel::new(
            real_matrix(1, 1, &[2.0]),
            real_matrix(3, 1, &[1.0, 1.0, 1.0]),
        )
        .unwrap()
    }

    fn two_sensor_rep() -> PolyMatrix {
        PolyMatrix::from_entries(vec![
            vec![Poly::from_real(&[-1.0, 1.0]), Poly::from_real(&[-1.0, 1.0])],
            vec![Poly::from_real(&[-2.0, 1.0]), Poly::from_real(&[2.0, -1.0])],
        ])
        .unwrap()
    }

    #[test]
    fn clean_data_passes_check_matrix_detection() {
        let sys = two_sensor_system();
        let clean = simulate(&sys, &real_vector(&[1.0, 1.0]), 6);
        let report = detect_with_check_matrix(&sys, &clean, &tol()).unwrap();
        assert!(!report.attacked);
        assert!(report.max_syndrome_norm <= tol().detect_tol);
        assert_eq!(report.first_flagged_window, None);
    }

    #[test]
    fn single_sensor_attack_is_detected() {
        let sys = two_sensor_system();
        let clean = simulate(&sys, &real_vector(&[1.0, 1.0]), 6);
        let attack = random_attack(2, 6, 1, 3, 1.0).unwrap();
        let received = inject(&clean, &attack).unwrap();
        let report = detect_with_check_matrix(&sys, &received, &tol()).unwrap();
        assert!(report.attacked);
        assert!(report.first_flagged_window.is_some());
        assert!(report.max_syndrome_norm > tol().detect_tol);
    }

    #[test]
    fn detection_threshold_scales_with_data() {
        // The same relative corruption must be flagged regardless of the
        // overall magnitude of the data.
        let sys = two_sensor_system();
        let clean = simulate(&sys, &real_vector(&[1e6, 1e6]), 6);
        let attack = random_attack(2, 6, 1, 3, 1e3).unwrap();
        let received = inject(&clean, &attack).unwrap();
        let report = detect_with_check_matrix(&sys, &received, &tol()).unwrap();
        assert!(report.attacked);
    }

    #[test]
    fn detection_requires_full_window() {
        let sys = two_sensor_system();
        let short = Trajectory::from_real(2, 1, &[1.0, 1.0]).unwrap();
        assert!(matches!(
            detect_with_check_matrix(&sys, &short, &tol()),
            Err(Error::HorizonTooShort {
                horizon: 1,
                needed: 2
            })
        ));
    }

    #[test]
    fn zero_trajectory_is_clean() {
        let sys = two_sensor_system();
        let zero = Trajectory::from_real(2, 4, &[0.0; 8]).unwrap();
        let report = detect_with_check_matrix(&sys, &zero, &tol()).unwrap();
        assert!(!report.attacked);
        assert_eq!(report.max_syndrome_norm, 0.0);
    }

    #[test]
    fn kernel_rep_detection_matches_check_matrix() {
        let sys = two_sensor_system();
        let rep = two_sensor_rep();
        let clean = simulate(&sys, &real_vector(&[2.0, -1.0]), 6);
        let clean_report = detect_with_kernel_rep(&rep, &clean, &tol()).unwrap();
        assert!(!clean_report.attacked);

        let attack = random_attack(2, 6, 1, 11, 1.0).unwrap();
        let received = inject(&clean, &attack).unwrap();
        let attacked_report = detect_with_kernel_rep(&rep, &received, &tol()).unwrap();
        assert!(attacked_report.attacked);
        assert!(attacked_report.first_flagged_window.is_some());
    }

    #[test]
    fn reconstruct_state_from_trusted_sensors() {
        let sys = two_sensor_system();
        let clean = simulate(&sys, &real_vector(&[3.0, -2.0]), 5);
        // Either sensor alone pins the state down over n samples.
        for trusted in [
            SensorSet::from([1]),
            SensorSet::from([2]),
            SensorSet::from([1, 2]),
        ] {
            let (x0, residual) = reconstruct_state(&sys, &clean, &trusted, &tol()).unwrap();
            assert!((x0 - real_vector(&[3.0, -2.0])).norm() < 1e-9);
            assert!(residual < 1e-9);
        }
    }

    #[test]
    fn reconstruct_state_rejects_blind_subsets() {
        // Sensor 3 is dead: trusting it alone leaves the state free.
        let sys = SystemModel::new(
            real_matrix(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            real_matrix(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        )
        .unwrap();
        let clean = simulate(&sys, &real_vector(&[1.0, 1.0]), 4);
        assert!(matches!(
            reconstruct_state(&sys, &clean, &SensorSet::from([3]), &tol()),
            Err(Error::InsufficientObservability {
                rank: 0,
                state_dim: 2
            })
        ));
        assert!(matches!(
            reconstruct_state(&sys, &clean, &SensorSet::new(), &tol()),
            Err(Error::EmptySubset)
        ));
        assert!(matches!(
            reconstruct_state(&sys, &clean, &SensorSet::from([4]), &tol()),
            Err(Error::IndexOutOfRange {
                index: 4,
                sensor_count: 3
            })
        ));
    }

    #[test]
    fn corrects_single_sensor_attack() {
        let sys = triple_sensor_system();
        let clean = simulate(&sys, &real_vector(&[1.0]), 4);
        let mut m = CMatrix::zeros(3, 4);
        for t in 0..4 {
            m[(1, t)] = C64::new(5.0, 0.0);
        }
        let attack = AttackSignal::new(m).unwrap();
        let received = inject(&clean, &attack).unwrap();
        let result = correct(&sys, &received, &tol()).unwrap();
        assert_eq!(result.attack_support, SensorSet::from([2]));
        assert!((result.x0_estimate[0] - C64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(result.residual < 1e-9);
        assert!(
            result
                .corrected
                .difference(&clean)
                .unwrap()
                .peak_magnitude()
                < 1e-9
        );
        // The empty support was tried (and rejected) before weight one.
        assert!(result.search_size > 1);
    }

    #[test]
    fn clean_data_corrects_to_empty_support() {
        let sys = triple_sensor_system();
        let clean = simulate(&sys, &real_vector(&[-2.5]), 4);
        let result = correct(&sys, &clean, &tol()).unwrap();
        assert!(result.attack_support.is_empty());
        assert_eq!(result.search_size, 1);
        assert!((result.x0_estimate[0] - C64::new(-2.5, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn correction_needs_weight_below_half_delta() {
        // delta = 2 for the two-sensor example: no nonzero weight is
        // correctable, so an attacked trajectory has no consistent support.
        let sys = two_sensor_system();
        let clean = simulate(&sys, &real_vector(&[1.0, 1.0]), 5);
        let attack = random_attack(2, 5, 1, 9, 1.0).unwrap();
        let received = inject(&clean, &attack).unwrap();
        match correct(&sys, &received, &tol()) {
            Err(Error::NoConsistentSupport {
                max_weight: 0,
                supports_tested: 1,
            }) => {}
            other => panic!("expected NoConsistentSupport, got {other:?}"),
        }
    }

    #[test]
    fn correction_requires_full_window() {
        let sys = two_sensor_system();
        let short = Trajectory::from_real(2, 1, &[1.0, 0.0]).unwrap();
        assert!(matches!(
            correct(&sys, &short, &tol()),
            Err(Error::HorizonTooShort { .. })
        ));
    }
}

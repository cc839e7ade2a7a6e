//! Security-index analysis for discrete-time linear systems under sensor
//! attacks.
//!
//! An autonomous system x(t+1) = A x(t) observed by N sensors y(t) = C x(t)
//! admits a smallest number of sensors — the *security index* — that an
//! adversary must corrupt to forge a nonzero sensor history that still obeys
//! the system laws. This crate computes that index (by sensor-subset kernel
//! search, by the spark of a check matrix, by eigenspace search, and from a
//! polynomial kernel representation), and builds the two defenses the index
//! calibrates: sliding-window attack *detection*, sound below the index, and
//! attack *correction*, sound below half of it.
//!
//! ```
//! use secidx::{real_matrix, security_index, SystemModel, ToleranceConfig};
//!
//! // Two decoupled states; one sensor reads their sum, the other their
//! // difference. Silencing either sensor forces the state to zero, so an
//! // invisible attack must corrupt both.
//! let sys = SystemModel::new(
//!     real_matrix(2, 2, &[1.0, 0.0, 0.0, 2.0]),
//!     real_matrix(2, 2, &[1.0, 1.0, 1.0, -1.0]),
//! )
//! .unwrap();
//! let report = security_index(&sys, &ToleranceConfig::default()).unwrap();
//! assert_eq!(report.delta, 2);
//! ```

pub mod coding;
pub mod error;
pub mod guard;
pub mod index;
pub mod io;
mod linalg;
pub mod model;
pub mod polymat;
pub mod simulate;

pub use coding::{window_vector, CheckMatrix, CodingMatrix};
pub use error::{Error, Result};
pub use guard::{
    correct, detect_with_check_matrix, detect_with_kernel_rep, reconstruct_state, CorrectionResult,
    DetectionReport,
};
pub use index::{
    is_maximally_secure, oracle_security_index, security_index, security_index_eigen,
    security_index_subset, spark, survey_methods, EigenStructure, IndexMethod, MethodSurvey,
    SecurityIndexReport, DEFAULT_SPARK_BUDGET,
};
pub use model::{
    real_matrix, real_vector, support, weight, AttackSignal, CMatrix, CVector, SensorSet,
    SystemModel, ToleranceConfig, Trajectory, C64,
};
pub use polymat::{
    apply_shift_polynomial, is_left_unimodular, security_index_from_kernel_rep, Poly, PolyMatrix,
};
pub use simulate::{inject, random_attack, random_attack_prefix, simulate};

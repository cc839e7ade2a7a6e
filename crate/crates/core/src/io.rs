//! File formats: system descriptions (JSON), trajectories and attacks (CSV),
//! attack metadata sidecars (JSON), polynomial matrices (JSON) and report
//! serialization. Complex scalars appear as plain numbers when real, as
//! `[re, im]` pairs in JSON, and as `re+imj` strings in CSV.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guard::{CorrectionResult, DetectionReport};
use crate::model::{AttackSignal, CMatrix, SystemModel, ToleranceConfig, Trajectory, C64};
use crate::polymat::{Poly, PolyMatrix};

/// A JSON scalar that is either a real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum NumEntry {
    Real(f64),
    Pair([f64; 2]),
}

impl From<NumEntry> for C64 {
    fn from(e: NumEntry) -> C64 {
        match e {
            NumEntry::Real(re) => C64::new(re, 0.0),
            NumEntry::Pair([re, im]) => C64::new(re, im),
        }
    }
}

impl From<C64> for NumEntry {
    fn from(z: C64) -> NumEntry {
        if z.im == 0.0 {
            NumEntry::Real(z.re)
        } else {
            NumEntry::Pair([z.re, z.im])
        }
    }
}

/// Renders a complex scalar as `re`, `re+imj` or `re-imj`.
pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}j", z.re, -z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}

/// Parses `re`, `imj`, `re+imj` or `re-imj` (also bare `j`, `-j`).
pub fn parse_complex(s: &str) -> Result<C64> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty scalar".into()));
    }
    let parse_real = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("invalid number '{t}'")))
    };
    let lower = s.to_ascii_lowercase();
    if !lower.ends_with('j') {
        return Ok(C64::new(parse_real(s)?, 0.0));
    }
    let body = &s[..s.len() - 1];
    // Split at the last sign that starts the imaginary part (a sign directly
    // after an exponent marker belongs to the exponent instead).
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let b = bytes[i];
        if (b == b'+' || b == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let (re_part, im_part) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("", body),
    };
    let re = if re_part.is_empty() {
        0.0
    } else {
        parse_real(re_part)?
    };
    let im = match im_part.trim() {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => parse_real(t)?,
    };
    Ok(C64::new(re, im))
}

fn matrix_from_rows(rows: &[Vec<NumEntry>], what: &str) -> Result<CMatrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Parse(format!("{what} must be a nonempty matrix")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("{what} has rows of unequal length")));
    }
    Ok(CMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j].into()))
}

#[derive(Deserialize)]
struct SystemFile {
    #[serde(rename = "A")]
    a: Vec<Vec<NumEntry>>,
    #[serde(rename = "C")]
    c: Vec<Vec<NumEntry>>,
}

/// Parses a system description: `{"A": [[...]], "C": [[...]]}` with number
/// or `[re, im]` entries. The pair must pass the observability check.
pub fn parse_system(json: &str, tol: &ToleranceConfig) -> Result<SystemModel> {
    let file: SystemFile = serde_json::from_str(json)?;
    let a = matrix_from_rows(&file.a, "state matrix")?;
    let c = matrix_from_rows(&file.c, "output matrix")?;
    SystemModel::with_tolerance(a, c, tol)
}

/// Reads a system description from a JSON file.
pub fn read_system(path: impl AsRef<Path>, tol: &ToleranceConfig) -> Result<SystemModel> {
    parse_system(&fs::read_to_string(path)?, tol)
}

/// Renders a trajectory as CSV with header `t,s1,...,sN`; one row per time
/// sample, sensors across columns.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t");
    for i in 1..=traj.sensor_count() {
        out.push_str(&format!(",s{i}"));
    }
    out.push('\n');
    for t in 0..traj.horizon() {
        out.push_str(&format!("{t}"));
        for i in 1..=traj.sensor_count() {
            out.push(',');
            out.push_str(&format_complex(traj.sample(i, t)));
        }
        out.push('\n');
    }
    out
}

/// Parses the CSV trajectory format produced by [`trajectory_to_csv`]. The
/// header must be `t,s1,...,sN` and the time column must count 0, 1, 2, ...
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || headers.get(0) != Some("t") {
        return Err(Error::Parse("trajectory header must be t,s1,...,sN".into()));
    }
    let sensors = headers.len() - 1;
    for i in 1..=sensors {
        if headers.get(i) != Some(format!("s{i}").as_str()) {
            return Err(Error::Parse(format!(
                "trajectory header column {} must be s{}",
                i + 1,
                i
            )));
        }
    }
    let mut columns: Vec<Vec<C64>> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != sensors + 1 {
            return Err(Error::Parse(format!(
                "row {row_idx} has {} fields, expected {}",
                record.len(),
                sensors + 1
            )));
        }
        let t: usize = record
            .get(0)
            .unwrap()
            .parse()
            .map_err(|_| Error::Parse(format!("invalid time index '{}'", &record[0])))?;
        if t != row_idx {
            return Err(Error::Parse(format!(
                "time column must count upward from 0, found {t} at row {row_idx}"
            )));
        }
        let mut col = Vec::with_capacity(sensors);
        for i in 1..=sensors {
            col.push(parse_complex(record.get(i).unwrap())?);
        }
        columns.push(col);
    }
    if columns.is_empty() {
        return Err(Error::Parse("trajectory has no samples".into()));
    }
    let horizon = columns.len();
    let samples = CMatrix::from_fn(sensors, horizon, |i, t| columns[t][i]);
    Trajectory::new(samples)
}

/// Reads a trajectory from a CSV file.
pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    parse_trajectory_csv(&fs::read_to_string(path)?)
}

/// Writes a trajectory to a CSV file.
pub fn write_trajectory(path: impl AsRef<Path>, traj: &Trajectory) -> Result<()> {
    fs::write(path, trajectory_to_csv(traj))?;
    Ok(())
}

/// Reads an attack signal stored in the trajectory CSV format; the support is
/// recovered from the nonzero rows.
pub fn read_attack(path: impl AsRef<Path>) -> Result<AttackSignal> {
    let traj = read_trajectory(path)?;
    AttackSignal::new(traj.samples().clone())
}

/// Writes an attack signal in the trajectory CSV format.
pub fn write_attack(path: impl AsRef<Path>, attack: &AttackSignal) -> Result<()> {
    write_trajectory(path, &attack.as_trajectory())
}

/// Reproducibility metadata stored alongside a generated attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackMetadata {
    /// Attacked sensors (1-based, ascending).
    pub support: Vec<usize>,
    /// Number of attacked sensors.
    pub weight: usize,
    /// Seed that reproduces the attack.
    pub seed: u64,
    /// Scale applied to the Gaussian entries.
    pub magnitude: f64,
    /// Number of time samples.
    pub horizon: usize,
    /// When present, corruptions are confined to the first this-many samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active_prefix: Option<usize>,
}

/// Serializes attack metadata to JSON.
pub fn attack_metadata_to_json(meta: &AttackMetadata) -> String {
    serde_json::to_string_pretty(meta).expect("metadata serializes infallibly")
}

/// Parses attack metadata from JSON.
pub fn parse_attack_metadata(json: &str) -> Result<AttackMetadata> {
    Ok(serde_json::from_str(json)?)
}

/// Parses a polynomial matrix: a JSON array of rows, each row an array of
/// entries, each entry an ascending array of coefficients (number or
/// `[re, im]`). An empty coefficient array is the zero polynomial.
pub fn parse_poly_matrix(json: &str) -> Result<PolyMatrix> {
    let grid: Vec<Vec<Vec<NumEntry>>> = serde_json::from_str(json)?;
    let rows = grid
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|coeffs| Poly::new(coeffs.into_iter().map(C64::from).collect()))
                .collect()
        })
        .collect();
    PolyMatrix::from_entries(rows)
}

/// Reads a polynomial matrix from a JSON file.
pub fn read_poly_matrix(path: impl AsRef<Path>) -> Result<PolyMatrix> {
    parse_poly_matrix(&fs::read_to_string(path)?)
}

/// JSON value for a complex scalar: a number when real, else `[re, im]`.
pub fn complex_to_json(z: C64) -> serde_json::Value {
    match NumEntry::from(z) {
        NumEntry::Real(re) => serde_json::json!(re),
        NumEntry::Pair(p) => serde_json::json!(p),
    }
}

/// Serializes a detection report to a stable JSON string.
pub fn detection_report_to_json(report: &DetectionReport) -> String {
    serde_json::to_string(report).expect("report serializes infallibly")
}

/// Serializes a correction result (without the corrected trajectory, which
/// is written as CSV) to a stable JSON string.
pub fn correction_result_to_json(result: &CorrectionResult) -> String {
    let x0: Vec<serde_json::Value> = result
        .x0_estimate
        .iter()
        .map(|&z| complex_to_json(z))
        .collect();
    serde_json::to_string(&serde_json::json!({
        "x0": x0,
        "support": result.attack_support.iter().copied().collect::<Vec<usize>>(),
        "residual": result.residual,
        "search_size": result.search_size,
    }))
    .expect("result serializes infallibly")
}

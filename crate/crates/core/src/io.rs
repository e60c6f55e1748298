//! File formats and persistence: capture sessions (JSON-lines), calibration
//! artifacts (JSON), trajectory/point-cloud CSV, and the procedure audit log.
//!
//! Session files carry a header line with schema version, kind, device
//! metadata, record count, and a SHA-256 digest of the record lines; loading
//! verifies the digest. Artifacts reference their input sessions by digest so
//! a result can always be traced back to the captures that produced it.
//! All writes go through a temp-file-plus-rename so readers never observe a
//! partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::handeye::{HandEyeResult, HandEyeSample};
use crate::navigate::{AuditEntry, CalibrationSet, Tool};
use crate::pointcal::{PivotResult, PivotSample, TipResult, TipSample};
use crate::trajectory::Trajectory;

pub const SCHEMA_VERSION: u32 = 1;

pub fn solver_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("digest mismatch in {path}: header {expected}, computed {computed}")]
    DigestMismatch {
        path: PathBuf,
        expected: String,
        computed: String,
    },
    #[error("session kind mismatch: expected {expected}, file holds {got}")]
    WrongKind { expected: &'static str, got: String },
}

/// Write `bytes` to `path` atomically: temp file in the same directory, then
/// rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".to_string());
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(2 * digest.len() + 7);
    out.push_str("sha256:");
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

// --- capture sessions -------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionKind {
    HandEye,
    Pivot,
    Tip,
}

impl SessionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SessionKind::HandEye => "handeye",
            SessionKind::Pivot => "pivot",
            SessionKind::Tip => "tip",
        }
    }
}

/// Capture-device description recorded in the session header.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DeviceMeta {
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tool: Option<Tool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene_seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionHeader {
    schema_version: u32,
    kind: SessionKind,
    device: DeviceMeta,
    n_records: usize,
    digest: String,
}

#[derive(Debug, Clone)]
pub enum SessionRecords {
    HandEye(Vec<HandEyeSample>),
    Pivot(Vec<PivotSample>),
    Tip(Vec<TipSample>),
}

impl SessionRecords {
    pub fn kind(&self) -> SessionKind {
        match self {
            SessionRecords::HandEye(_) => SessionKind::HandEye,
            SessionRecords::Pivot(_) => SessionKind::Pivot,
            SessionRecords::Tip(_) => SessionKind::Tip,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SessionRecords::HandEye(v) => v.len(),
            SessionRecords::Pivot(v) => v.len(),
            SessionRecords::Tip(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn record_lines(&self) -> Result<String, serde_json::Error> {
        let mut out = String::new();
        match self {
            SessionRecords::HandEye(v) => {
                for r in v {
                    out.push_str(&serde_json::to_string(r)?);
                    out.push('\n');
                }
            }
            SessionRecords::Pivot(v) => {
                for r in v {
                    out.push_str(&serde_json::to_string(r)?);
                    out.push('\n');
                }
            }
            SessionRecords::Tip(v) => {
                for r in v {
                    out.push_str(&serde_json::to_string(r)?);
                    out.push('\n');
                }
            }
        }
        Ok(out)
    }
}

/// A capture session: typed records plus device metadata and content digest.
#[derive(Debug, Clone)]
pub struct CaptureSession {
    pub device: DeviceMeta,
    pub records: SessionRecords,
    /// SHA-256 of the serialized record lines.
    pub digest: String,
}

impl CaptureSession {
    pub fn new(records: SessionRecords, device: DeviceMeta) -> Self {
        let lines = records.record_lines().expect("sample records serialize");
        CaptureSession {
            device,
            digest: sha256_hex(lines.as_bytes()),
            records,
        }
    }

    pub fn kind(&self) -> SessionKind {
        self.records.kind()
    }

    /// Serialize to JSON-lines: header first, one record per line after.
    pub fn to_jsonl(&self) -> Result<String, IoError> {
        let lines = self.records.record_lines()?;
        let header = SessionHeader {
            schema_version: SCHEMA_VERSION,
            kind: self.kind(),
            device: self.device.clone(),
            n_records: self.records.len(),
            digest: sha256_hex(lines.as_bytes()),
        };
        Ok(format!("{}\n{lines}", serde_json::to_string(&header)?))
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write_atomic(path, self.to_jsonl()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(|source| IoError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = text.lines();
        let header_line = lines.next().ok_or_else(|| IoError::Format {
            path: path.to_path_buf(),
            reason: "empty file".into(),
        })?;
        let header: SessionHeader =
            serde_json::from_str(header_line).map_err(|e| IoError::Format {
                path: path.to_path_buf(),
                reason: format!("bad header: {e}"),
            })?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(IoError::Format {
                path: path.to_path_buf(),
                reason: format!("unsupported schema_version {}", header.schema_version),
            });
        }

        let mut record_text = String::new();
        let mut count = 0usize;
        let parse = |line: &str, records: &mut SessionRecords| -> Result<(), serde_json::Error> {
            match records {
                SessionRecords::HandEye(v) => v.push(serde_json::from_str(line)?),
                SessionRecords::Pivot(v) => v.push(serde_json::from_str(line)?),
                SessionRecords::Tip(v) => v.push(serde_json::from_str(line)?),
            }
            Ok(())
        };
        let mut records = match header.kind {
            SessionKind::HandEye => SessionRecords::HandEye(Vec::new()),
            SessionKind::Pivot => SessionRecords::Pivot(Vec::new()),
            SessionKind::Tip => SessionRecords::Tip(Vec::new()),
        };
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            parse(line, &mut records).map_err(|e| IoError::Format {
                path: path.to_path_buf(),
                reason: format!("record {count}: {e}"),
            })?;
            record_text.push_str(line);
            record_text.push('\n');
            count += 1;
        }
        if count != header.n_records {
            return Err(IoError::Format {
                path: path.to_path_buf(),
                reason: format!("header says {} records, found {count}", header.n_records),
            });
        }
        let computed = sha256_hex(record_text.as_bytes());
        if computed != header.digest {
            return Err(IoError::DigestMismatch {
                path: path.to_path_buf(),
                expected: header.digest,
                computed,
            });
        }
        Ok(CaptureSession {
            device: header.device,
            records,
            digest: computed,
        })
    }

    pub fn as_handeye(&self) -> Result<&[HandEyeSample], IoError> {
        match &self.records {
            SessionRecords::HandEye(v) => Ok(v),
            other => Err(IoError::WrongKind {
                expected: "handeye",
                got: other.kind().as_str().into(),
            }),
        }
    }

    pub fn as_pivot(&self) -> Result<&[PivotSample], IoError> {
        match &self.records {
            SessionRecords::Pivot(v) => Ok(v),
            other => Err(IoError::WrongKind {
                expected: "pivot",
                got: other.kind().as_str().into(),
            }),
        }
    }

    pub fn as_tip(&self) -> Result<&[TipSample], IoError> {
        match &self.records {
            SessionRecords::Tip(v) => Ok(v),
            other => Err(IoError::WrongKind {
                expected: "tip",
                got: other.kind().as_str().into(),
            }),
        }
    }
}

// --- artifacts ---------------------------------------------------------------

/// Reference to a capture session: either a verifiable digest or an explicit
/// marker that the data lives outside the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DigestRef(String);

impl DigestRef {
    pub fn sha256(digest: impl Into<String>) -> Self {
        DigestRef(digest.into())
    }

    pub fn external(note: &str) -> Self {
        DigestRef(format!("external:{note}"))
    }

    pub fn is_external(&self) -> bool {
        self.0.starts_with("external:")
    }

    pub fn is_valid(&self) -> bool {
        self.is_external() || (self.0.starts_with("sha256:") && self.0.len() == 7 + 64)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub handeye_session: Option<DigestRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pivot_session: Option<DigestRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rigid_tip_session: Option<DigestRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flexible_tip_session: Option<DigestRef>,
    pub solver_version: String,
    /// Populated from `SOURCE_DATE_EPOCH` when reproducible output is wanted;
    /// absent otherwise so reruns stay byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

impl Provenance {
    /// Every recorded session reference must be a digest or marked external.
    pub fn validate(&self) -> Result<(), IoError> {
        for r in [
            &self.handeye_session,
            &self.pivot_session,
            &self.rigid_tip_session,
            &self.flexible_tip_session,
        ]
        .into_iter()
        .flatten()
        {
            if !r.is_valid() {
                return Err(IoError::Format {
                    path: PathBuf::new(),
                    reason: format!("unresolvable session reference {:?}", r.as_str()),
                });
            }
        }
        Ok(())
    }
}

/// Full calibration artifact: solved set plus provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationArtifact {
    pub schema_version: u32,
    pub calibration: CalibrationSet,
    pub provenance: Provenance,
}

/// Per-solver artifacts: result, residuals, and the input session digest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HandEyeArtifact {
    pub schema_version: u32,
    pub result: HandEyeResult,
    pub input_digest: String,
    pub solver_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PivotArtifact {
    pub schema_version: u32,
    pub result: PivotResult,
    pub input_digest: String,
    pub solver_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TipArtifact {
    pub schema_version: u32,
    pub tool: Tool,
    pub result: TipResult,
    pub input_digest: String,
    /// Where the digitizer tip offset came from: "flag", "pivot", etc.
    pub digitizer_offset_source: String,
    pub solver_version: String,
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| IoError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

// --- trajectory / cloud CSV ---------------------------------------------------

/// Point rows as `x_mm,y_mm,z_mm` at full double precision.
pub fn points_to_csv<'a>(points: impl Iterator<Item = &'a [f64; 3]>) -> String {
    let mut out = String::from("x_mm,y_mm,z_mm\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p[0], p[1], p[2]));
    }
    out
}

pub fn save_points_csv(points: &[[f64; 3]], path: &Path) -> Result<(), IoError> {
    write_atomic(path, points_to_csv(points.iter()).as_bytes())
}

/// JSON header that travels with a trajectory CSV: the plan parameters and
/// the frame the coordinates live in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub schema_version: u32,
    pub frame: String,
    pub pilot_depth_mm: f64,
    pub arc_radius_mm: f64,
    pub arc_angle_deg: f64,
    pub arc_plane_roll_deg: f64,
    pub step_mm: f64,
    pub n_points: usize,
    pub pilot_sample_count: usize,
}

/// Write `<stem>.csv` and `<stem>.json` for a planned trajectory.
pub fn save_trajectory(traj: &Trajectory, stem: &Path, frame: &str) -> Result<(), IoError> {
    save_points_csv(&traj.sample_points_mm, &stem.with_extension("csv"))?;
    let header = TrajectoryHeader {
        schema_version: SCHEMA_VERSION,
        frame: frame.to_string(),
        pilot_depth_mm: traj.pilot_depth_mm,
        arc_radius_mm: traj.arc_radius_mm,
        arc_angle_deg: traj.arc_angle_deg,
        arc_plane_roll_deg: traj.arc_plane_roll_deg,
        step_mm: traj.step_mm,
        n_points: traj.sample_points_mm.len(),
        pilot_sample_count: traj.pilot_sample_count,
    };
    save_json(&header, &stem.with_extension("json"))
}

fn audit_lines(entries: &[AuditEntry]) -> Result<String, IoError> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

/// Append audit entries to a JSON-lines log (append-only, live procedures).
pub fn append_audit_log(entries: &[AuditEntry], path: &Path) -> Result<(), IoError> {
    let out = audit_lines(entries)?;
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Write a complete audit log atomically (finished procedures).
pub fn save_audit_log(entries: &[AuditEntry], path: &Path) -> Result<(), IoError> {
    write_atomic(path, audit_lines(entries)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{
        generate_handeye_captures, generate_pivot_captures, generate_tip_captures, NoiseModel,
        Scene,
    };

    fn tempdir() -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "drillnav-io-test-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn session_round_trip_is_byte_identical() {
        let dir = tempdir();
        let scene = Scene::synthetic(21);
        let noise = NoiseModel::table1();
        let session = CaptureSession::new(
            SessionRecords::HandEye(generate_handeye_captures(&scene, 6, &noise)),
            DeviceMeta {
                source: "simulator".into(),
                tool: None,
                scene_seed: Some(21),
            },
        );
        let path = dir.join("handeye.session.jsonl");
        session.save(&path).unwrap();
        let loaded = CaptureSession::load(&path).unwrap();
        assert_eq!(loaded.digest, session.digest);
        assert_eq!(loaded.to_jsonl().unwrap(), session.to_jsonl().unwrap());
        assert_eq!(loaded.as_handeye().unwrap().len(), 6);
    }

    #[test]
    fn tampered_session_fails_digest_check() {
        let dir = tempdir();
        let scene = Scene::synthetic(22);
        let session = CaptureSession::new(
            SessionRecords::Pivot(generate_pivot_captures(&scene, 4, &NoiseModel::zero())),
            DeviceMeta {
                source: "simulator".into(),
                tool: None,
                scene_seed: Some(22),
            },
        );
        let path = dir.join("pivot.session.jsonl");
        session.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        // flip one digit inside the first record's position field
        let field = lines[1]
            .find("\"position_mm\":[")
            .expect("position field present");
        let pos = field
            + lines[1][field..]
                .char_indices()
                .find(|(_, c)| ('1'..='8').contains(c))
                .map(|(i, _)| i)
                .expect("position contains a digit");
        let flipped = match lines[1].as_bytes()[pos] {
            b'1' => '2',
            _ => '1',
        };
        lines[1].replace_range(pos..pos + 1, &flipped.to_string());
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        assert!(matches!(
            CaptureSession::load(&path),
            Err(IoError::DigestMismatch { .. })
        ));
    }

    #[test]
    fn wrong_kind_access_is_rejected() {
        let scene = Scene::synthetic(23);
        let session = CaptureSession::new(
            SessionRecords::Tip(generate_tip_captures(
                &scene,
                4,
                &NoiseModel::zero(),
                Tool::Rigid,
            )),
            DeviceMeta::default(),
        );
        assert!(session.as_handeye().is_err());
        assert!(session.as_tip().is_ok());
    }

    #[test]
    fn digest_ref_validation() {
        assert!(DigestRef::sha256(sha256_hex(b"abc")).is_valid());
        assert!(DigestRef::external("vendor datasheet").is_valid());
        assert!(!DigestRef::sha256("sha256:short").is_valid());
        assert!(!DigestRef::sha256("plainstring").is_valid());

        let prov = Provenance {
            handeye_session: Some(DigestRef::sha256(sha256_hex(b"x"))),
            pivot_session: Some(DigestRef::external("vendor datasheet")),
            solver_version: solver_version(),
            ..Default::default()
        };
        assert!(prov.validate().is_ok());
        let bad = Provenance {
            handeye_session: Some(DigestRef::sha256("bogus")),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn calibration_artifact_round_trip_is_byte_identical() {
        use crate::navigate::DigitizerTip;
        use crate::simulate::{calibrate_from_scene, CaptureCounts};

        let dir = tempdir();
        let scene = Scene::synthetic(31);
        let calibration =
            calibrate_from_scene(&scene, &NoiseModel::table1(), &CaptureCounts::default()).unwrap();
        let artifact = CalibrationArtifact {
            schema_version: SCHEMA_VERSION,
            calibration,
            provenance: Provenance {
                handeye_session: Some(DigestRef::sha256(sha256_hex(b"handeye"))),
                pivot_session: Some(DigestRef::external("vendor datasheet")),
                rigid_tip_session: Some(DigestRef::sha256(sha256_hex(b"rigid"))),
                flexible_tip_session: None,
                solver_version: solver_version(),
                created_unix: None,
            },
        };
        let path = dir.join("calibration.json");
        save_json(&artifact, &path).unwrap();
        let first = fs::read(&path).unwrap();
        let loaded: CalibrationArtifact = load_json(&path).unwrap();
        assert!(matches!(
            loaded.calibration.digitizer_tip,
            DigitizerTip::Pivot(_)
        ));
        save_json(&loaded, &path).unwrap();
        assert_eq!(first, fs::read(&path).unwrap());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempdir();
        let path = dir.join("artifact.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        // no temp files left behind
        let leftovers: Vec<_> = fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn csv_full_precision_round_trip() {
        let pts = [[0.1 + 0.2, -1234.5678901234567, 1e-15]];
        let csv = points_to_csv(pts.iter());
        let line = csv.lines().nth(1).unwrap();
        let parsed: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(parsed, pts[0]);
    }
}

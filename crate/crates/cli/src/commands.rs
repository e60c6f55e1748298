//! Subcommand implementations: wire files through the core solvers.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use drillnav_core::io::{
    load_json, save_audit_log, save_json, save_points_csv, save_trajectory, sha256_hex,
    solver_version, write_atomic, CalibrationArtifact, CaptureSession, DeviceMeta, DigestRef,
    HandEyeArtifact, IoError, PivotArtifact, Provenance, SessionRecords, TipArtifact,
    SCHEMA_VERSION,
};
use drillnav_core::metrics::{aggregate, ErrorReport, ReportMetadata};
use drillnav_core::navigate::{mark_pose, Tool};
use drillnav_core::se3::{pose_error, Pose};
use drillnav_core::simulate::{
    calibrate_from_scene, execute_procedure, generate_handeye_captures, generate_pivot_captures,
    generate_tip_captures, simulate_marking, CaptureCounts, NoiseModel, PlanParams,
    ProcedureReport, Scene,
};
use drillnav_core::trajectory::plan_trajectory;
use drillnav_core::{solve_handeye, solve_pivot, solve_tip};

use crate::{PlanArgs, OUT_DIR_ENV};

/// Errors split by exit code: validation problems (bad files, degenerate
/// geometry, invalid parameters) exit 2, internal faults exit 1.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Internal(_) => "internal",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Internal(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            // failures writing our own output are environment faults, not
            // input problems
            IoError::Io(_) | IoError::Json(_) => CliError::Internal(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

macro_rules! validation_from {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Validation(e.to_string())
            }
        })*
    };
}

validation_from!(
    drillnav_core::HandEyeError,
    drillnav_core::PointCalError,
    drillnav_core::NavigateError,
    drillnav_core::TrajectoryError,
    drillnav_core::MetricsError,
    drillnav_core::SimulateError,
);

type CliResult = Result<(), CliError>;

fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn out_file(out: Option<PathBuf>, default_name: &str) -> PathBuf {
    match out {
        Some(path) => path,
        None => out_dir(None).join(default_name),
    }
}

fn parse_vec3(text: &str) -> Result<Vector3<f64>, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Validation(format!(
            "expected three comma-separated values, got {text:?}"
        )));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|e| {
            CliError::Validation(format!("bad component {part:?} in {text:?}: {e}"))
        })?;
    }
    Ok(Vector3::from(v))
}

fn resolve_noise(name_or_path: &str) -> Result<NoiseModel, CliError> {
    if let Some(preset) = NoiseModel::preset(name_or_path) {
        return Ok(preset);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "unknown noise preset {name_or_path:?} (expected zero, table1, or a file path)"
        )));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {name_or_path:?}: {e}")))?;
    let model = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad noise file {name_or_path:?}: {e}")))?
    } else {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad noise file {name_or_path:?}: {e}")))?
    };
    Ok(model)
}

/// Offset precedence: explicit flag, then pivot artifact, else an error.
fn resolve_digitizer_offset(
    flag: Option<&str>,
    pivot_artifact: Option<&Path>,
) -> Result<(Vector3<f64>, &'static str), CliError> {
    if let Some(text) = flag {
        return Ok((parse_vec3(text)?, "flag"));
    }
    if let Some(path) = pivot_artifact {
        let artifact: PivotArtifact = load_json(path)?;
        return Ok((artifact.result.tip_offset(), "pivot"));
    }
    Err(CliError::Validation(
        "digitizer tip offset required: pass --digitizer-offset x,y,z or --pivot <artifact>"
            .to_string(),
    ))
}

fn plan_params(args: &PlanArgs) -> PlanParams {
    PlanParams {
        pilot_depth_mm: args.pilot_depth,
        radius_mm: args.radius,
        arc_angle_deg: args.arc_angle,
        plane_roll_deg: args.plane_roll,
        step_mm: args.step,
    }
}

fn created_unix() -> Option<u64> {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
}

fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let scene: Scene = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad scene file {}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad scene file {}: {e}", path.display())))?
    };
    scene.validate()?;
    Ok(scene)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    seed: Option<u64>,
    scene_file: Option<&Path>,
    noise_preset: &str,
    out: Option<PathBuf>,
    handeye_samples: usize,
    pivot_samples: usize,
    tip_samples: usize,
    full: bool,
    plan_args: &PlanArgs,
) -> CliResult {
    let noise = resolve_noise(noise_preset)?;
    let mut scene = match scene_file {
        Some(path) => load_scene(path)?,
        None => Scene::synthetic(seed.expect("clap enforces --seed without --scene")),
    };
    if let Some(seed) = seed {
        scene.rng_seed = seed;
    }
    let seed = scene.rng_seed;
    let dir = out_dir(out);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Internal(e.to_string()))?;

    save_json(&scene, &dir.join("scene.json"))?;

    let meta = |tool: Option<Tool>| DeviceMeta {
        source: "simulator".to_string(),
        tool,
        scene_seed: Some(seed),
    };
    let handeye_session = CaptureSession::new(
        SessionRecords::HandEye(generate_handeye_captures(&scene, handeye_samples, &noise)),
        meta(None),
    );
    handeye_session.save(&dir.join("handeye.session.jsonl"))?;
    let pivot_session = CaptureSession::new(
        SessionRecords::Pivot(generate_pivot_captures(&scene, pivot_samples, &noise)),
        meta(None),
    );
    pivot_session.save(&dir.join("pivot.session.jsonl"))?;
    let tip_rigid_session = CaptureSession::new(
        SessionRecords::Tip(generate_tip_captures(
            &scene,
            tip_samples,
            &noise,
            Tool::Rigid,
        )),
        meta(Some(Tool::Rigid)),
    );
    tip_rigid_session.save(&dir.join("tip_rigid.session.jsonl"))?;
    let tip_flexible_session = CaptureSession::new(
        SessionRecords::Tip(generate_tip_captures(
            &scene,
            tip_samples,
            &noise,
            Tool::Flexible,
        )),
        meta(Some(Tool::Flexible)),
    );
    tip_flexible_session.save(&dir.join("tip_flexible.session.jsonl"))?;

    println!("scene + 4 capture sessions written to {}", dir.display());

    if !full {
        return Ok(());
    }

    let counts = CaptureCounts {
        handeye: handeye_samples,
        pivot: pivot_samples,
        tip: tip_samples,
    };
    let calib = calibrate_from_scene(&scene, &noise, &counts)?;
    let artifact = CalibrationArtifact {
        schema_version: SCHEMA_VERSION,
        calibration: calib.clone(),
        provenance: Provenance {
            handeye_session: Some(DigestRef::sha256(handeye_session.digest.clone())),
            pivot_session: Some(DigestRef::sha256(pivot_session.digest.clone())),
            rigid_tip_session: Some(DigestRef::sha256(tip_rigid_session.digest.clone())),
            flexible_tip_session: Some(DigestRef::sha256(tip_flexible_session.digest.clone())),
            solver_version: solver_version(),
            created_unix: created_unix(),
        },
    };
    artifact.provenance.validate()?;
    save_json(&artifact, &dir.join("calibration.json"))?;

    let reading = simulate_marking(&scene, &noise);
    let marked = mark_pose(&reading, &calib.digitizer_tip.offset(), 0);
    save_json(&marked, &dir.join("marked.json"))?;

    let run = execute_procedure(&scene, &calib, &marked, &plan_params(plan_args), &noise)?;
    save_json(&run.report, &dir.join("procedure_report.json"))?;
    let cloud: Vec<[f64; 3]> = run.drilled_cloud.iter().map(|p| (*p).into()).collect();
    save_points_csv(&cloud, &dir.join("drilled_cloud.csv"))?;
    save_trajectory(
        &run.achieved_trajectory,
        &dir.join("trajectory"),
        "vertebra",
    )?;
    save_audit_log(&run.report.audit, &dir.join("audit.jsonl"))?;

    println!(
        "procedure complete: rigid tip error {:.4} mm, flexible {:.4} mm",
        run.report.rigid_tip_error.position_mm, run.report.flexible_tip_error.position_mm
    );
    println!(
        "breach margin {:.3} mm ({:?}); fitted radius {:.3} mm vs planned {:.1} mm",
        run.report.breach_margin_mm,
        run.report.breach_class,
        run.report.curvature.radius_mm,
        run.report.planned_radius_mm
    );
    Ok(())
}

fn print_pose_recovery(label: &str, estimated: &Pose, truth: &Pose) {
    let e = pose_error(estimated, truth);
    println!(
        "{label} recovery error: {:.3e} mm position, {:.3e} deg max angle",
        e.position_mm,
        e.max_angle_deg()
    );
}

pub fn calibrate_handeye(
    session_path: &Path,
    out: Option<PathBuf>,
    truth: Option<&Path>,
) -> CliResult {
    let session = CaptureSession::load(session_path)?;
    let result = solve_handeye(session.as_handeye()?)?;
    println!(
        "solved hand-eye from {} samples: rotation residual {:.3e} rad, translation residual {:.3e} mm",
        result.n_samples, result.rotation_residual_rad, result.translation_residual_mm
    );
    if let Some(truth_path) = truth {
        let scene: Scene = load_json(truth_path)?;
        print_pose_recovery("X", &result.x_polaris_t_base, &scene.polaris_t_base_true);
        print_pose_recovery("Z", &result.z_drill_t_eef, &scene.drill_t_eef_true);
    }
    let artifact = HandEyeArtifact {
        schema_version: SCHEMA_VERSION,
        result,
        input_digest: session.digest,
        solver_version: solver_version(),
    };
    save_json(&artifact, &out_file(out, "handeye.artifact.json"))?;
    Ok(())
}

pub fn calibrate_pivot(
    session_path: &Path,
    out: Option<PathBuf>,
    truth: Option<&Path>,
) -> CliResult {
    let session = CaptureSession::load(session_path)?;
    let result = solve_pivot(session.as_pivot()?)?;
    println!(
        "solved pivot from {} samples: rms residual {:.3e} mm, tip offset [{:.4}, {:.4}, {:.4}] mm",
        result.n_samples,
        result.rms_residual_mm,
        result.tip_offset_mm[0],
        result.tip_offset_mm[1],
        result.tip_offset_mm[2]
    );
    if let Some(truth_path) = truth {
        let scene: Scene = load_json(truth_path)?;
        let err = (result.tip_offset() - scene.digitizer_tip_offset_true()).norm();
        println!("tip offset recovery error: {err:.3e} mm");
    }
    let artifact = PivotArtifact {
        schema_version: SCHEMA_VERSION,
        result,
        input_digest: session.digest,
        solver_version: solver_version(),
    };
    save_json(&artifact, &out_file(out, "pivot.artifact.json"))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn calibrate_tip(
    session_path: &Path,
    handeye_path: &Path,
    tool: &str,
    digitizer_offset: Option<&str>,
    pivot: Option<&Path>,
    out: Option<PathBuf>,
    truth: Option<&Path>,
) -> CliResult {
    let tool = match tool {
        "rigid" => Tool::Rigid,
        "flexible" => Tool::Flexible,
        other => return Err(CliError::Validation(format!("unknown tool {other:?}"))),
    };
    let session = CaptureSession::load(session_path)?;
    let handeye: HandEyeArtifact = load_json(handeye_path)?;
    let (offset, source) = resolve_digitizer_offset(digitizer_offset, pivot)?;
    let result = solve_tip(session.as_tip()?, &handeye.result.x_polaris_t_base, &offset)?;
    println!(
        "solved {tool} tip from {} samples: rms residual {:.3e} mm, offset [{:.4}, {:.4}, {:.4}] mm",
        result.n_samples,
        result.rms_residual_mm,
        result.tip_offset_mm[0],
        result.tip_offset_mm[1],
        result.tip_offset_mm[2]
    );
    if let Some(truth_path) = truth {
        let scene: Scene = load_json(truth_path)?;
        let err = (result.tip_offset() - scene.tip_offset_true(tool)).norm();
        println!("tip offset recovery error: {err:.3e} mm");
    }
    let artifact = TipArtifact {
        schema_version: SCHEMA_VERSION,
        tool,
        result,
        input_digest: session.digest,
        digitizer_offset_source: source.to_string(),
        solver_version: solver_version(),
    };
    let default_name = match tool {
        Tool::Rigid => "tip_rigid.artifact.json",
        Tool::Flexible => "tip_flexible.artifact.json",
    };
    save_json(&artifact, &out_file(out, default_name))?;
    Ok(())
}

pub fn mark(
    digitizer_pose_path: &Path,
    digitizer_offset: Option<&str>,
    pivot: Option<&Path>,
    timestamp: u64,
    out: Option<PathBuf>,
) -> CliResult {
    let pose: Pose = load_json(digitizer_pose_path)?;
    let (offset, source) = resolve_digitizer_offset(digitizer_offset, pivot)?;
    let marked = mark_pose(&pose, &offset, timestamp);
    let t = marked.polaris_t_tip_desired.translation_mm;
    println!(
        "marked tip pose at [{:.3}, {:.3}, {:.3}] mm (offset source: {source})",
        t.x, t.y, t.z
    );
    save_json(&marked, &out_file(out, "marked.json"))?;
    Ok(())
}

pub fn plan(entry: Option<&Path>, args: &PlanArgs, out: Option<PathBuf>) -> CliResult {
    let entry_pose = match entry {
        Some(path) => load_json::<Pose>(path)?,
        None => Pose::identity(),
    };
    let traj = plan_trajectory(
        &entry_pose,
        args.pilot_depth,
        args.radius,
        args.arc_angle,
        args.plane_roll,
        args.step,
    )?;
    let end = traj.points().last().expect("trajectory has samples");
    println!(
        "planned {} samples over {:.3} mm; endpoint [{:.3}, {:.3}, {:.3}] mm",
        traj.sample_points_mm.len(),
        traj.total_length_mm(),
        end.x,
        end.y,
        end.z
    );
    let stem = out_file(out, "trajectory");
    save_trajectory(&traj, &stem, "vertebra")?;
    Ok(())
}

pub fn report(inputs: &[PathBuf], out: Option<PathBuf>) -> CliResult {
    let mut rigid = Vec::new();
    let mut flexible = Vec::new();
    let mut seeds = Vec::new();
    let mut labels = Vec::new();
    let mut digest_input = Vec::new();
    for path in inputs {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        digest_input.extend_from_slice(&bytes);
        let report: ProcedureReport = load_json(path)?;
        rigid.push(report.rigid_tip_error);
        flexible.push(report.flexible_tip_error);
        seeds.push(report.seed);
        labels.push(report.noise.label.clone());
    }
    let mut rows = aggregate(&rigid, Tool::Rigid)?;
    rows.extend(aggregate(&flexible, Tool::Flexible)?);

    let unique: std::collections::BTreeSet<Option<String>> = labels.into_iter().collect();
    let noise_preset = match unique.len() {
        1 => unique.into_iter().next().unwrap(),
        _ => Some("mixed".to_string()),
    };
    let metadata = ReportMetadata {
        dataset_digest: Some(sha256_hex(&digest_input)),
        noise_preset,
        seed_range: seeds.iter().min().copied().zip(seeds.iter().max().copied()),
    };
    let report = ErrorReport::new(rows, metadata);
    print!("{}", report.to_markdown());

    let stem = out_file(out, "errors");
    write_atomic(&stem.with_extension("md"), report.to_markdown().as_bytes())?;
    save_json(&report, &stem.with_extension("json"))?;
    Ok(())
}

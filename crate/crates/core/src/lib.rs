//! Calibration, registration, and navigation toolkit for steerable bone
//! drilling with a tracked robot, validated end-to-end against a built-in
//! synthetic tracker/robot simulator.
//!
//! The pipeline mirrors the four phases of a drilling procedure:
//!
//! 1. **Calibration** — [`handeye`] solves the `AX = ZB` robot-world problem
//!    for the tracker-to-base and tool-to-flange transforms; [`pointcal`]
//!    solves the digitizer tip offset (pivot) and the drill tip offset
//!    (digitizer-aided).
//! 2. **Pose marking** — [`navigate`] turns a digitizer reading into a desired
//!    drill-tip pose and chains it into a commanded end-effector pose.
//! 3. **Pilot drilling** and 4. **J-shape drilling** — [`trajectory`] plans the
//!    straight-plus-arc path, fits curvature to drilled clouds, and checks
//!    pedicle breach margins; [`navigate`]'s state machine enforces the
//!    procedure order.
//!
//! [`simulate`] closes the loop: it generates ground-truth scenes, emits the
//! measurement streams every solver consumes, and forward-simulates commanded
//! poses so recovery errors can be measured exactly. [`metrics`] aggregates
//! pose errors into mean +/- std reports, and [`io`] pins down the file
//! formats (JSON-lines capture sessions with content digests, JSON artifacts,
//! CSV point clouds).

pub mod handeye;
pub mod io;
mod lsq;
pub mod metrics;
pub mod navigate;
pub mod pointcal;
pub mod se3;
pub mod simulate;
pub mod trajectory;

pub use handeye::{solve_handeye, HandEyeError, HandEyeResult, HandEyeSample};
pub use metrics::{aggregate, ErrorReport, ErrorRow, Metric, MetricsError, ReportMetadata};
pub use navigate::{
    advance_phase, desired_eef_pose, mark_pose, AuditEntry, CalibrationSet, DigitizerTip, Event,
    EventKind, MarkedPose, NavigateError, Phase, Tool, WorkflowState,
};
pub use pointcal::{
    digitizer_tip_in_world, solve_pivot, solve_tip, PivotResult, PivotSample, PointCalError,
    TipResult, TipSample,
};
pub use se3::{pose_error, Pose, PoseError, Rot3, Se3Error};
pub use simulate::{
    calibrate_from_scene, execute_procedure, generate_handeye_captures, generate_pivot_captures,
    generate_tip_captures, run_end_to_end, simulate_marking, CaptureCounts, NoiseModel, PlanParams,
    ProcedureReport, ProcedureRun, Scene, SimulateError, WorkspaceBox,
};
pub use trajectory::{
    breach_margin, classify_breach, fit_curvature, plan_trajectory, BreachClass, CurvatureFit,
    PedicleModel, Trajectory, TrajectoryError,
};

//! Pose marking and the four-phase procedure state machine.
//!
//! Marking converts a digitizer reading into the desired drill-tip pose:
//! the tip offset translates along the digitizer body frame while the body
//! orientation is carried over unchanged (the shaft is aligned with the
//! intended drilling direction, so the body frame encodes orientation).
//!
//! The commanded end-effector pose chains the desired tip pose through the
//! calibration results: base-from-tracker (inverse of the hand-eye `X`), then
//! the tip-to-flange transform built from the hand-eye `Z` rotation and the
//! tool-specific tip offset.
//!
//! The workflow state machine accepts exactly one path:
//!
//! ```text
//! Uncalibrated -> Calibrated -> PoseMarked -> PilotDrilled
//!              -> MaintenanceSwap -> JShapeDrilled -> Homed
//! ```
//!
//! Every other (phase, event) pair is an ordering violation. Pilot drilling
//! demands the rigid tool, J-shape drilling the flexible one.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::handeye::HandEyeResult;
use crate::pointcal::{PivotResult, TipResult};
use crate::se3::Pose;

#[derive(Debug, Error)]
pub enum NavigateError {
    #[error("illegal transition: event {event:?} in phase {phase:?}")]
    IllegalTransition { phase: Phase, event: EventKind },
    #[error("calibration incomplete for tool {tool:?}")]
    MissingCalibration { tool: Tool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tool {
    Rigid,
    Flexible,
}

impl std::fmt::Display for Tool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tool::Rigid => write!(f, "rigid"),
            Tool::Flexible => write!(f, "flexible"),
        }
    }
}

/// Digitizer tip offset source: solved pivot calibration or vendor datasheet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DigitizerTip {
    Pivot(PivotResult),
    Datasheet { offset_mm: [f64; 3] },
}

impl DigitizerTip {
    pub fn offset(&self) -> Vector3<f64> {
        match self {
            DigitizerTip::Pivot(p) => p.tip_offset(),
            DigitizerTip::Datasheet { offset_mm } => Vector3::from(*offset_mm),
        }
    }
}

/// Everything the navigation chain needs from calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub handeye: HandEyeResult,
    pub digitizer_tip: DigitizerTip,
    pub rigid_tip: Option<TipResult>,
    pub flexible_tip: Option<TipResult>,
}

impl CalibrationSet {
    pub fn tip_offset(&self, tool: Tool) -> Result<Vector3<f64>, NavigateError> {
        let tip = match tool {
            Tool::Rigid => &self.rigid_tip,
            Tool::Flexible => &self.flexible_tip,
        };
        tip.as_ref()
            .map(|t| t.tip_offset())
            .ok_or(NavigateError::MissingCalibration { tool })
    }
}

/// A desired drill-tip pose captured from the digitizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkedPose {
    pub polaris_t_tip_desired: Pose,
    pub source_digitizer_pose: Pose,
    /// Logical capture tick; monotone within a procedure.
    pub timestamp: u64,
}

/// Desired tip pose from a digitizer reading: pure translation by the tip
/// offset, orientation inherited from the digitizer body.
pub fn mark_pose(
    digitizer_pose_in_polaris: &Pose,
    digitizer_tip_offset_mm: &Vector3<f64>,
    timestamp: u64,
) -> MarkedPose {
    let tip = digitizer_pose_in_polaris.compose(&Pose::from_translation(*digitizer_tip_offset_mm));
    MarkedPose {
        polaris_t_tip_desired: tip,
        source_digitizer_pose: *digitizer_pose_in_polaris,
        timestamp,
    }
}

/// Tip-to-flange transform for a calibrated tool: the hand-eye `Z` rotation
/// combined with the tool's tip offset (tip frame axes follow the drill
/// tracking tool, tip origin at the physical tip).
pub fn tip_t_eef(calib: &CalibrationSet, tool: Tool) -> Result<Pose, NavigateError> {
    let offset = calib.tip_offset(tool)?;
    let r_z = calib.handeye.z_drill_t_eef.rotation;
    Ok(Pose::new(r_z, -r_z.rotate(&offset)))
}

/// Commanded end-effector pose that places the selected tool's tip on the
/// marked pose: `base_T_eef = (X^-1) . marked . tip_T_eef`.
pub fn desired_eef_pose(
    marked: &MarkedPose,
    calib: &CalibrationSet,
    tool: Tool,
) -> Result<Pose, NavigateError> {
    let base_t_polaris = calib.handeye.x_polaris_t_base.invert();
    Ok(base_t_polaris
        .compose(&marked.polaris_t_tip_desired)
        .compose(&tip_t_eef(calib, tool)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Phase {
    #[default]
    Uncalibrated,
    Calibrated,
    PoseMarked,
    PilotDrilled,
    MaintenanceSwap,
    JShapeDrilled,
    Homed,
}

/// Workflow events. Payload-carrying events deliver the data the successor
/// phase needs.
#[derive(Debug, Clone)]
pub enum Event {
    CalibrationLoaded(Box<CalibrationSet>),
    PoseMarkedEvt(MarkedPose),
    PilotDone { commanded_eef: Pose },
    ToolSwapped,
    JShapeDone { commanded_eef: Pose },
    HomeReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    CalibrationLoaded,
    PoseMarkedEvt,
    PilotDone,
    ToolSwapped,
    JShapeDone,
    HomeReached,
}

impl Event {
    pub fn kind(&self) -> EventKind {
        match self {
            Event::CalibrationLoaded(_) => EventKind::CalibrationLoaded,
            Event::PoseMarkedEvt(_) => EventKind::PoseMarkedEvt,
            Event::PilotDone { .. } => EventKind::PilotDone,
            Event::ToolSwapped => EventKind::ToolSwapped,
            Event::JShapeDone { .. } => EventKind::JShapeDone,
            Event::HomeReached => EventKind::HomeReached,
        }
    }
}

/// One audit-log line per accepted transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditEntry {
    pub phase_from: Phase,
    pub phase_to: Phase,
    pub event: EventKind,
    /// Logical tick: position of the transition in the procedure.
    pub timestamp: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commanded_pose: Option<Pose>,
}

#[derive(Debug, Clone, Default)]
pub struct WorkflowState {
    pub phase: Phase,
    pub active_tool: Option<Tool>,
    pub calibration: Option<CalibrationSet>,
    pub marked: Option<MarkedPose>,
    pub audit: Vec<AuditEntry>,
}

impl WorkflowState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Apply one event, returning the successor state with an audit entry
/// appended, or the ordering violation that rejects it.
pub fn advance_phase(
    mut state: WorkflowState,
    event: Event,
) -> Result<WorkflowState, NavigateError> {
    let phase_from = state.phase;
    let kind = event.kind();
    let illegal = || NavigateError::IllegalTransition {
        phase: phase_from,
        event: kind,
    };

    let mut commanded_pose = None;
    let phase_to = match (phase_from, event) {
        (Phase::Uncalibrated, Event::CalibrationLoaded(calib)) => {
            state.calibration = Some(*calib);
            Phase::Calibrated
        }
        (Phase::Calibrated, Event::PoseMarkedEvt(marked)) => {
            state.marked = Some(marked);
            // the rigid drilling tool is inserted once the pose is marked
            state.active_tool = Some(Tool::Rigid);
            Phase::PoseMarked
        }
        (Phase::PoseMarked, Event::PilotDone { commanded_eef }) => {
            if state.active_tool != Some(Tool::Rigid) {
                return Err(illegal());
            }
            commanded_pose = Some(commanded_eef);
            Phase::PilotDrilled
        }
        (Phase::PilotDrilled, Event::ToolSwapped) => {
            state.active_tool = Some(Tool::Flexible);
            Phase::MaintenanceSwap
        }
        (Phase::MaintenanceSwap, Event::JShapeDone { commanded_eef }) => {
            if state.active_tool != Some(Tool::Flexible) {
                return Err(illegal());
            }
            commanded_pose = Some(commanded_eef);
            Phase::JShapeDrilled
        }
        (Phase::JShapeDrilled, Event::HomeReached) => Phase::Homed,
        _ => return Err(illegal()),
    };

    state.audit.push(AuditEntry {
        phase_from,
        phase_to,
        event: kind,
        timestamp: state.audit.len() as u64,
        commanded_pose,
    });
    state.phase = phase_to;
    Ok(state)
}

//! `drillnav` — command-line surface for the calibration / navigation toolkit.
//!
//! Subcommands mirror the pipeline: `simulate` emits (or fully runs) seeded
//! synthetic procedures, the three `calibrate-*` commands solve capture
//! sessions into artifacts, `mark` and `plan` produce poses and trajectories,
//! and `report` aggregates procedure reports into a mean +/- std table.
//!
//! Exit codes: 0 success, 2 validation problem (bad file, degenerate capture
//! geometry, invalid parameters), 1 internal error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Default output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "DRILLNAV_OUT_DIR";

#[derive(Parser)]
#[command(name = "drillnav", version, about = "Calibration, planning, and navigation toolkit for steerable drilling", long_about = None)]
struct Cli {
    /// Emit machine-readable JSON errors on stderr.
    #[arg(long, global = true)]
    json_errors: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct PlanArgs {
    /// Straight pilot segment length in mm.
    #[arg(long, default_value_t = 20.0)]
    pub pilot_depth: f64,
    /// Arc radius in mm (the pre-curved guide tube's radius).
    #[arg(long, default_value_t = 69.5)]
    pub radius: f64,
    /// Arc angle in degrees (0 plans a straight hole).
    #[arg(long, default_value_t = 90.0)]
    pub arc_angle: f64,
    /// Rotation of the bending plane about the insertion axis, degrees.
    #[arg(long, default_value_t = 0.0)]
    pub plane_roll: f64,
    /// Sample spacing along the path in mm (capped at 0.5).
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded synthetic capture sessions; with --full, run the whole
    /// calibrate-mark-drill procedure and write its report.
    Simulate {
        /// Scene seed; fixes every emitted byte. Overrides the seed embedded
        /// in --scene when both are given.
        #[arg(long, required_unless_present = "scene")]
        seed: Option<u64>,
        /// Ground-truth scene file (TOML or JSON) instead of a synthetic one.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Noise preset name (zero, table1) or path to a TOML/JSON noise file.
        #[arg(long, default_value = "table1")]
        noise_preset: String,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 15)]
        handeye_samples: usize,
        #[arg(long, default_value_t = 20)]
        pivot_samples: usize,
        #[arg(long, default_value_t = 12)]
        tip_samples: usize,
        /// Also solve, mark, plan, and execute the procedure end to end.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Solve the AX=ZB hand-eye calibration from a capture session.
    CalibrateHandeye {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ground-truth scene file; prints recovery errors when given.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Solve the digitizer pivot calibration from a capture session.
    CalibratePivot {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Solve a drill-tip offset from a digitizer-aided capture session.
    CalibrateTip {
        #[arg(long)]
        session: PathBuf,
        /// Hand-eye artifact supplying the tracker-to-base transform.
        #[arg(long)]
        handeye: PathBuf,
        /// Which tool the session pointed at.
        #[arg(long, value_parser = ["rigid", "flexible"])]
        tool: String,
        /// Digitizer tip offset "x,y,z" in mm; overrides --pivot.
        #[arg(long)]
        digitizer_offset: Option<String>,
        /// Pivot artifact supplying the digitizer tip offset.
        #[arg(long)]
        pivot: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Convert a digitizer reading into a desired drill-tip pose.
    Mark {
        /// Digitizer pose file (JSON pose: {"q":..,"t_mm":..} or 4x4 matrix).
        #[arg(long)]
        digitizer_pose: PathBuf,
        #[arg(long)]
        digitizer_offset: Option<String>,
        #[arg(long)]
        pivot: Option<PathBuf>,
        /// Logical capture tick recorded in the marked pose.
        #[arg(long, default_value_t = 0)]
        timestamp: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan a pilot-plus-arc drilling trajectory; writes `<out>.csv` and `<out>.json`.
    Plan {
        /// Entry pose file (vertebra frame); identity when omitted.
        #[arg(long)]
        entry: Option<PathBuf>,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate procedure reports into a per-tool error table;
    /// writes `<out>.md` and `<out>.json`.
    Report {
        /// Procedure report JSON files.
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            seed,
            scene,
            noise_preset,
            out,
            handeye_samples,
            pivot_samples,
            tip_samples,
            full,
            plan,
        } => commands::simulate(
            seed,
            scene.as_deref(),
            &noise_preset,
            out,
            handeye_samples,
            pivot_samples,
            tip_samples,
            full,
            &plan,
        ),
        Command::CalibrateHandeye {
            session,
            out,
            truth,
        } => commands::calibrate_handeye(&session, out, truth.as_deref()),
        Command::CalibratePivot {
            session,
            out,
            truth,
        } => commands::calibrate_pivot(&session, out, truth.as_deref()),
        Command::CalibrateTip {
            session,
            handeye,
            tool,
            digitizer_offset,
            pivot,
            out,
            truth,
        } => commands::calibrate_tip(
            &session,
            &handeye,
            &tool,
            digitizer_offset.as_deref(),
            pivot.as_deref(),
            out,
            truth.as_deref(),
        ),
        Command::Mark {
            digitizer_pose,
            digitizer_offset,
            pivot,
            timestamp,
            out,
        } => commands::mark(
            &digitizer_pose,
            digitizer_offset.as_deref(),
            pivot.as_deref(),
            timestamp,
            out,
        ),
        Command::Plan { entry, plan, out } => commands::plan(entry.as_deref(), &plan, out),
        Command::Report { inputs, out } => commands::report(&inputs, out),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if cli.json_errors {
                eprintln!(
                    "{}",
                    serde_json::json!({
                        "error": err.to_string(),
                        "kind": err.kind_str(),
                    })
                );
            } else {
                eprintln!("error: {err}");
            }
            ExitCode::from(err.exit_code())
        }
    }
}

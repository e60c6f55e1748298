//! Full synthetic drilling procedure, step by step.
//!
//! Builds a seeded ground-truth scene, runs all three calibrations against
//! simulated capture streams, marks a drilling pose with the virtual
//! digitizer, commands both tools, and reports every recovery error against
//! ground truth.
//!
//! Run with: `cargo run -p drillnav-core --example synthetic_procedure`

use drillnav_core::navigate::Tool;
use drillnav_core::se3::pose_error;
use drillnav_core::simulate::{
    calibrate_from_scene, execute_procedure, simulate_marking, CaptureCounts, NoiseModel,
    PlanParams, Scene,
};
use drillnav_core::{mark_pose, metrics};

fn main() {
    let seed = 42;
    let scene = Scene::synthetic(seed);
    let noise = NoiseModel::table1();
    let counts = CaptureCounts::default();

    println!("=== Synthetic drilling procedure (seed {seed}) ===\n");
    println!(
        "Ground truth: tracker {:.0} mm from the base, drill tool {:.0} mm from the flange",
        scene.polaris_t_base_true.translation_mm.norm(),
        scene.drill_t_eef_true.translation_mm.norm()
    );
    println!(
        "Noise: tracker {:.2} mm / {:.2} deg, robot {:.2} mm / {:.2} deg, contact {:.1} mm\n",
        noise.tracker_translation_sigma_mm,
        noise.tracker_rotation_sigma_deg,
        noise.robot_translation_sigma_mm,
        noise.robot_rotation_sigma_deg,
        noise.tip_contact_sigma_mm
    );

    // Phase 1: hardware calibration
    let calib = calibrate_from_scene(&scene, &noise, &counts).expect("calibration solves");
    let ex = pose_error(&calib.handeye.x_polaris_t_base, &scene.polaris_t_base_true);
    let ez = pose_error(&calib.handeye.z_drill_t_eef, &scene.drill_t_eef_true);
    println!(
        "--- Phase 1: calibration ({} hand-eye pairs) ---",
        counts.handeye
    );
    println!(
        "  X error: {:.4} mm, {:.5} deg",
        ex.position_mm,
        ex.max_angle_deg()
    );
    println!(
        "  Z error: {:.4} mm, {:.5} deg",
        ez.position_mm,
        ez.max_angle_deg()
    );
    println!(
        "  digitizer tip offset error: {:.4} mm",
        (calib.digitizer_tip.offset() - scene.digitizer_tip_offset_true()).norm()
    );
    for (tip, tool) in [
        (calib.rigid_tip.as_ref().unwrap(), Tool::Rigid),
        (calib.flexible_tip.as_ref().unwrap(), Tool::Flexible),
    ] {
        println!(
            "  {tool} drill tip offset error: {:.4} mm (rms residual {:.4} mm)",
            (tip.tip_offset() - scene.tip_offset_true(tool)).norm(),
            tip.rms_residual_mm
        );
    }

    // Phase 2: pose marking
    let reading = simulate_marking(&scene, &noise);
    let marked = mark_pose(&reading, &calib.digitizer_tip.offset(), 0);
    println!(
        "\n--- Phase 2: pose marked at tick {} ---",
        marked.timestamp
    );

    // Phases 3-4: pilot + J-shape drilling
    let run = execute_procedure(&scene, &calib, &marked, &PlanParams::default(), &noise)
        .expect("procedure executes");
    let r = &run.report;
    println!("--- Phases 3-4: drilling ---");
    println!(
        "  rigid tip placement:    {:.3} mm, {:.4} deg",
        r.rigid_tip_error.position_mm,
        r.rigid_tip_error.max_angle_deg()
    );
    println!(
        "  flexible tip placement: {:.3} mm, {:.4} deg",
        r.flexible_tip_error.position_mm,
        r.flexible_tip_error.max_angle_deg()
    );
    println!(
        "  breach margin: {:.3} mm ({:?})",
        r.breach_margin_mm, r.breach_class
    );
    println!(
        "  fitted radius: {:.3} mm vs planned {:.1} mm ({:.2}% off)",
        r.curvature.radius_mm,
        r.planned_radius_mm,
        100.0 * (r.curvature.radius_mm - r.planned_radius_mm).abs() / r.planned_radius_mm
    );
    println!(
        "  workflow: {} transitions, last -> {:?}",
        r.audit.len(),
        r.audit.last().unwrap().phase_to
    );

    // the same numbers in the report-table shape
    let mut rows = metrics::aggregate(&[r.rigid_tip_error], Tool::Rigid).unwrap();
    rows.extend(metrics::aggregate(&[r.flexible_tip_error], Tool::Flexible).unwrap());
    let table = metrics::ErrorReport::new(rows, metrics::ReportMetadata::default());
    println!("\n{}", table.to_markdown());
}

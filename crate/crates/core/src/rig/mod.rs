//! Dual-quaternion extrinsics, screw interpolation across a discrete
//! calibration table, and the linear-actuator baseline model.

mod actuator;
mod dual_quat;
mod file;
mod table;

pub use actuator::{
    command_baseline, fit_line, sweep_actuator, ActuatorModel, ActuatorSample, BaselineCommand,
    LineFit,
};
pub use dual_quat::{dual_quaternion_to_pose, pose_to_dual_quaternion, sclerp, DualQuaternionPose, SCLERP_SMALL_ANGLE};
pub use file::{load_rig_file, parse_rig_file, rig_file_string, write_rig_file, RigFile};
pub use table::{equally_spaced, CalibrationEntry, CalibrationTable, SyntheticTableConfig};

//! Baseline-adaptive policies and the utilities they share.
//!
//! Each policy is a deterministic state machine stepped once per depth frame.

mod baseline;
mod blend;
mod components;
mod forest;
mod free_space;
mod gap;
mod imo;
mod pid;

pub use baseline::{
    baseline_law, BaselineLimits, LowPass, SlewLimiter, DEFAULT_BASELINE_GAIN, DEFAULT_SLEW_RATE,
};
pub use blend::{blend_direction, blend_weight, remapped_blend_weight, WeightMapping};
pub use components::{connected_components, median, pixel_median, Component};
pub use forest::{ForestCommand, ForestConfig, ForestPolicy};
pub use free_space::{free_space_direction, goal_pixel, FreeSpace, Neighborhood};
pub use gap::{
    detect_gap, track_gap, Cluster, GapCommand, GapConfig, GapPolicy, GapPolicyConfig, GapState,
    GapTarget,
};
pub use imo::{
    detect_imo, object_estimate, track_imo, DepthFrame, ImoCommand, ImoConfig, ImoDetection,
    ImoPolicy, ImoTrack, LossReason, TrackUpdate,
};
pub use pid::{pid_step, PidGains, PidState};

//! Camera models, lens distortion, stereo rectification and depth/disparity
//! conversions.

mod camera;
mod depth;
mod rectify;

pub use camera::{
    project_with_distortion, undistort, CameraIntrinsics, CameraModel, DistortionCoefficients,
    ImageSize, RayGrid, SensorGeometry, DEFAULT_DOMAIN, UNDISTORT_MAX_ITERATIONS,
    UNDISTORT_TOLERANCE,
};
pub use depth::{
    depth_error, depth_from_disparity, depth_image_from_disparity, DenseImage, DepthImage,
    DisparityImage, Meters, Pixels, Unit,
};
pub use rectify::{
    rectification_pair, rotation_from_rpy, RectificationPair, StereoCalibration,
    StereoExtrinsics,
};

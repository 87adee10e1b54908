//! Benchmark fixtures shared by the criterion suites.

use flowpersp_core::scene::{CameraModel, SceneScript, WorldObject};
use flowpersp_core::{simulate, FlowSequence};

/// A tilted-camera pedestrian scene of `seconds` duration.
pub fn pedestrian_stream(seconds: f64) -> FlowSequence {
    let cam = CameraModel::centred(650.0, 650.0, 8.0, 60f64.to_radians(), 352, 288);
    let mut script = SceneScript::new(cam, seconds, 15.0);
    for k in 0..12 {
        let w = 2.3 + 0.45 * k as f64;
        script.objects.push(
            WorldObject::new(-1.5 + 0.25 * k as f64, w, 0.0, -1.3 - 0.05 * k as f64)
                .with_wrap(2.17, 7.73)
                .with_lane(-2.5, 2.5)
                .with_jitter(0.2),
        );
    }
    simulate(&script, 7).expect("valid scene").flow
}

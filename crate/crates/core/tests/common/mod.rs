#![allow(dead_code)]

use flowpersp_core::{CameraModel, SceneScript, SceneSurface, WorldObject};

pub fn camera() -> CameraModel {
    CameraModel::centred(650.0, 650.0, 8.0, 60f64.to_radians(), 352, 288)
}

/// Pedestrians walking towards a tilted camera, looping through the view.
pub fn tilted(seconds: f64, objects: usize) -> SceneScript {
    let mut script = SceneScript::new(camera(), seconds, 15.0);
    for i in 0..objects {
        let phase = (i as f64 * 0.618_034).fract();
        script.objects.push(
            WorldObject::new(
                -2.0 + 4.0 * phase,
                2.2 + 5.5 * (i as f64 * 0.381_966 + 0.1).fract(),
                0.0,
                -1.35,
            )
            .with_wrap(2.17, 7.73)
            .with_lane(-2.5, 2.5)
            .with_jitter(0.2),
        );
    }
    script
}

/// Objects moving on a plane facing the camera.
pub fn fronto(seconds: f64, objects: usize, noise: f64) -> SceneScript {
    let mut script = SceneScript::new(
        CameraModel::centred(500.0, 500.0, 6.0, 0.0, 352, 288),
        seconds,
        15.0,
    );
    script.surface = SceneSurface::FrontoParallel { depth: 10.0 };
    script.noise_std = noise;
    for i in 0..objects {
        script.objects.push(
            WorldObject::new(
                -3.2 + 6.4 * (i as f64 * 0.618_034).fract(),
                -3.0 + 6.0 * (i as f64 * 0.381_966).fract(),
                0.0,
                1.0,
            )
            .with_wrap(-3.2, 3.2)
            .with_lane(-3.4, 3.4)
            .with_jitter(0.2),
        );
    }
    script
}

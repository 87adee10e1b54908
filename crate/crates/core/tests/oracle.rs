mod common;

use flowpersp_core::experiment::relative_error;
use flowpersp_core::{
    estimate_coarse, estimate_dense, oracle_zeta, simulate, CoarseConfig, DenseConfig,
};

#[test]
fn reference_is_the_centre_row_oracle() {
    let script = common::tilted(10.0, 1);
    let sim = simulate(&script, 0).unwrap();
    let cam = common::camera();
    assert_eq!(sim.reference_zeta, oracle_zeta(&cam, 144.0).unwrap());
    // 1 / (v - v_horizon) with v_horizon = c_v - f tan(tilt)
    let expected = 1.0 / (650.0 * 60f64.to_radians().tan());
    assert!(relative_error(sim.reference_zeta, expected) < 1e-12);
}

#[test]
fn half_hour_scene_is_recovered_by_both_estimators() {
    let sim = simulate(&common::tilted(1800.0, 12), 4).unwrap();
    let r = sim.reference_zeta;
    let dense = estimate_dense(&sim.flow, &DenseConfig::default())
        .unwrap()
        .zeta();
    let coarse = estimate_coarse(&sim.flow, &CoarseConfig::default())
        .unwrap()
        .zeta();
    assert!(relative_error(dense, r) < 0.1, "dense {dense} vs {r}");
    assert!(relative_error(coarse, r) < 0.1, "coarse {coarse} vs {r}");
    assert!(relative_error(coarse, dense) < 0.05, "{coarse} vs {dense}");
}

#[test]
fn steeper_and_shallower_cameras() {
    for tilt in [45.0f64, 70.0] {
        let mut script = common::tilted(1800.0, 12);
        script.camera.tilt = tilt.to_radians();
        // Keep the walkers inside the view for this camera.
        let far = script.camera.ground_depth_at_row(0.0).unwrap();
        let near = script.camera.ground_depth_at_row(288.0).unwrap();
        let (s, c) = script.camera.tilt.sin_cos();
        let along = |z: f64| (z - 8.0 * s) / c;
        for obj in &mut script.objects {
            obj.wrap = Some((along(near) - 0.3, along(far) + 0.3));
            obj.along = along(near) + (along(far) - along(near)) * (obj.along - 2.2) / 5.5;
        }
        let sim = simulate(&script, 6).unwrap();
        let dense = estimate_dense(&sim.flow, &DenseConfig::default())
            .unwrap()
            .zeta();
        assert!(
            relative_error(dense, sim.reference_zeta) < 0.1,
            "tilt {tilt}: {dense} vs {}",
            sim.reference_zeta
        );
    }
}

#[test]
fn well_sampled_cells_track_the_oracle_row_by_row() {
    let mut script = common::tilted(1800.0, 12);
    script.noise_std = 0.0;
    for obj in &mut script.objects {
        obj.jitter = 0.0;
    }
    let sim = simulate(&script, 12).unwrap();
    let acc = flowpersp_core::DenseAccumulator::from_sequence(&sim.flow, 4).unwrap();
    let field = flowpersp_core::dense::local_zeta_field(&acc, Default::default()).unwrap();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for r in 0..field.rows() {
        for c in 0..field.cols() {
            let Some(z) = field.get(r, c).value() else {
                continue;
            };
            if acc.count(r, c) < 50 {
                continue;
            }
            let oracle = oracle_zeta(&script.camera, field.centre(r, c).1).unwrap();
            worst = worst.max(relative_error(z, oracle));
            checked += 1;
        }
    }
    assert!(checked > 500, "{checked}");
    assert!(worst < 0.15, "worst {worst}");
}

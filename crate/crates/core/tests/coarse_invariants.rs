mod common;

use std::sync::OnceLock;

use flowpersp_core::coarse::{
    build_constraints, finalize_proportions, solve_closed_form, solve_iterative, zeta_from_omega,
};
use flowpersp_core::experiment::relative_error;
use flowpersp_core::{
    estimate_coarse, simulate, BlockStats, CoarseConfig, FlowSequence, GridSpec, MotionVector,
    RhoDenominator, SolverKind,
};
use proptest::prelude::*;

fn stream() -> &'static FlowSequence {
    static STREAM: OnceLock<FlowSequence> = OnceLock::new();
    STREAM.get_or_init(|| simulate(&common::tilted(900.0, 12), 8).unwrap().flow)
}

fn random_stream() -> impl Strategy<Value = FlowSequence> {
    let vector = (
        0u64..40,
        0.0..352.0f64,
        0.0..288.0f64,
        -60.0..60.0f64,
        -60.0..60.0f64,
    )
        .prop_map(|(t, u, v, du, dv)| MotionVector::new(t, u, v, du, dv));
    prop::collection::vec(vector, 0..2000)
        .prop_map(|vs| FlowSequence::from_vectors(352, 288, 15.0, vs).unwrap())
}

fn check_unit_sum(seq: &FlowSequence, rows: usize, cols: usize) -> Result<(), TestCaseError> {
    let stats =
        BlockStats::from_sequence(seq, GridSpec::for_sequence(rows, cols, seq).unwrap()).unwrap();
    for denom in [RhoDenominator::All, RhoDenominator::Transitions] {
        for b in finalize_proportions(&stats, denom).blocks() {
            prop_assert!(b
                .rho
                .iter()
                .chain([&b.rho_intra])
                .all(|r| (0.0..=1.0).contains(r)));
            let total: f64 = b.rho.iter().sum::<f64>() + b.rho_intra;
            if b.empty {
                prop_assert_eq!(total, 0.0);
            } else {
                prop_assert!((total - 1.0).abs() < 1e-12, "sum {}", total);
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn proportions_have_unit_sum_on_random_streams(
        seq in random_stream(),
        rows in 3usize..16,
        cols in 3usize..16,
    ) {
        check_unit_sum(&seq, rows, cols)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn proportions_have_unit_sum_on_simulated_streams(seed in any::<u64>()) {
        let seq = simulate(&common::tilted(120.0, 8), seed).unwrap().flow;
        check_unit_sum(&seq, 10, 10)?;
    }

    #[test]
    fn stored_zeta_is_the_omega_identity(seed in any::<u64>(), rows in 3usize..14) {
        let seq = simulate(&common::tilted(120.0, 8), seed).unwrap().flow;
        for solver in [SolverKind::ClosedForm, SolverKind::Iterative] {
            let cfg = CoarseConfig { rows, solver, ..CoarseConfig::default() };
            let Ok(est) = estimate_coarse(&seq, &cfg) else { continue };
            let om = est.omega;
            let h = 288.0 / rows as f64;
            prop_assert_eq!(om.block_height, h);
            prop_assert_eq!(om.zeta.to_bits(), ((1.0 - om.omega.powf(-0.5)) / h).to_bits());
            prop_assert_eq!(om.zeta, zeta_from_omega(om.omega, h));
        }
    }
}

#[test]
fn closed_form_sits_at_the_residual_minimum() {
    let seq = stream();
    let stats =
        BlockStats::from_sequence(seq, GridSpec::for_sequence(10, 10, seq).unwrap()).unwrap();
    let cons = build_constraints(
        &finalize_proportions(&stats, RhoDenominator::Transitions),
        5,
    )
    .unwrap();
    let est = solve_closed_form(&cons, 28.8).unwrap();
    let cost = |d: f64| -> f64 {
        cons.iter()
            .map(|c| {
                let (a, b) = c.linear();
                (a * d - b).powi(2)
            })
            .sum()
    };
    let at = cost(est.delta_omega);
    assert!(cost(est.delta_omega + 1e-3) > at);
    assert!(cost(est.delta_omega - 1e-3) > at);
}

#[test]
fn solvers_agree_on_one_way_traffic() {
    let seq = stream();
    let closed = estimate_coarse(seq, &CoarseConfig::default()).unwrap();
    let iterative = estimate_coarse(
        seq,
        &CoarseConfig {
            solver: SolverKind::Iterative,
            ..CoarseConfig::default()
        },
    )
    .unwrap();
    assert!(relative_error(iterative.zeta(), closed.zeta()) < 0.01);
    assert!(solve_iterative(&[], 28.8).is_err());
}

#[test]
fn world_speed_barely_moves_the_estimate() {
    let script = common::tilted(900.0, 12);
    let base = estimate_coarse(stream(), &CoarseConfig::default())
        .unwrap()
        .zeta();
    for k in [0.6, 1.5] {
        let seq = simulate(&script.with_velocity_scale(k), 8).unwrap().flow;
        let z = estimate_coarse(&seq, &CoarseConfig::default())
            .unwrap()
            .zeta();
        assert!(relative_error(z, base) < 0.05, "k = {k}: {z} vs {base}");
    }
}

#[test]
fn fronto_parallel_motion_gives_unit_omega() {
    let seq = simulate(&common::fronto(1200.0, 10, 0.0), 2).unwrap().flow;
    let est = estimate_coarse(&seq, &CoarseConfig::default()).unwrap();
    assert!((est.omega.omega - 1.0).abs() < 1e-3, "{}", est.omega.omega);
}

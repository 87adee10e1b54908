use flowpersp_core::flow::slice_fraction;
use flowpersp_core::{parse_flow_stream, write_flow_stream, FlowSequence, MotionVector};
use proptest::prelude::*;

fn on_grid(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn sequence() -> impl Strategy<Value = FlowSequence> {
    (
        1u32..400,
        1u32..300,
        prop::sample::select(vec![1.0, 12.5, 15.0, 25.0, 29.97, 60.0]),
    )
        .prop_flat_map(|(w, h, fps)| {
            let vector = (
                0u64..50,
                0.0..f64::from(w),
                0.0..f64::from(h),
                -20.0..20.0f64,
                -20.0..20.0f64,
            )
                .prop_map(move |(t, u, v, du, dv)| {
                    let clamp = |x: f64, hi: u32| on_grid(x).min(f64::from(hi) - 0.001);
                    MotionVector::new(t, clamp(u, w), clamp(v, h), on_grid(du), on_grid(dv))
                });
            (Just((w, h, fps)), prop::collection::vec(vector, 0..60))
        })
        .prop_map(|((w, h, fps), vectors)| FlowSequence::from_vectors(w, h, fps, vectors).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn write_then_parse_is_identity(seq in sequence()) {
        let mut bytes = Vec::new();
        write_flow_stream(&seq, &mut bytes).unwrap();
        let back = parse_flow_stream(bytes.as_slice()).unwrap();
        prop_assert_eq!(&back, &seq);
        prop_assert_eq!(back.to_flowlog().into_bytes(), bytes);
    }
}

proptest! {
    #[test]
    fn slices_are_nested_prefixes(seq in sequence(), a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = slice_fraction(&seq, lo).unwrap();
        let large = slice_fraction(&seq, hi).unwrap();
        prop_assert!(small.frames().len() <= large.frames().len());
        prop_assert_eq!(small.frames(), &large.frames()[..small.frames().len()]);
        prop_assert_eq!(slice_fraction(&seq, 1.0).unwrap(), seq);
    }
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let text = "# produced by hand\nFLOWLOG 1 10 10 15\n\n0 1.000 2.000 0.500 -0.250\n# end\n";
    let seq = parse_flow_stream(text.as_bytes()).unwrap();
    assert_eq!(seq.vector_count(), 1);
    assert_eq!(
        seq.to_flowlog(),
        "FLOWLOG 1 10 10 15\n0 1.000 2.000 0.500 -0.250\n"
    );
}

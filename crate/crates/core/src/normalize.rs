//! Row-dependent threshold factors derived from a scale gradient.

use std::fmt::Write as _;

use crate::format::sig6;

/// Multiplicative factor `exp(zeta * (v - v_ref))` for every image row,
/// relative to the bottom row `v_ref = height - 1`.
///
/// Integrating `dz / z = -zeta dv` gives the apparent scale of row `v`
/// relative to the reference row, so a motion threshold tuned for the
/// bottom of the frame scales by this factor elsewhere.
pub fn threshold_factors(zeta: f64, height: u32) -> Vec<f64> {
    let reference = f64::from(height.saturating_sub(1));
    (0..height)
        .map(|v| (zeta * (f64::from(v) - reference)).exp())
        .collect()
}

/// CSV with columns `row,factor,threshold`.
pub fn threshold_map_csv(zeta: f64, height: u32, base_threshold: f64) -> String {
    let mut out = String::from("row,factor,threshold\n");
    for (row, factor) in threshold_factors(zeta, height).into_iter().enumerate() {
        let _ = writeln!(
            out,
            "{row},{},{}",
            sig6(factor),
            sig6(base_threshold * factor)
        );
    }
    out
}

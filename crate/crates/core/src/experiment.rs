//! Incremental-data convergence runs and estimator comparisons.

use std::fmt::Write as _;

use crate::coarse::{estimate_from_stats, BlockStats, CoarseConfig};
use crate::dense::{estimate_from_accumulator, DenseAccumulator, DenseConfig};
use crate::flow::{prefix_len, FlowSequence, GridSpec};
use crate::format::sig6;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dense,
    Coarse,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "coarse" => Ok(Self::Coarse),
            _ => Err(Error::Argument(format!("unknown method {s:?}"))),
        }
    }
}

/// `|estimate - reference| / |reference|`.
pub fn relative_error(estimate: f64, reference: f64) -> f64 {
    ((estimate - reference) / reference).abs()
}

/// 0.125, 0.25, ..., 1.0
pub fn default_fractions() -> Vec<f64> {
    (1..=8).map(|k| f64::from(k) * 0.125).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub fraction: f64,
    pub frames: usize,
    /// `None` when the prefix holds too little data for an estimate.
    pub zeta: Option<f64>,
    pub relative_error: Option<f64>,
}

enum Running {
    Dense(DenseAccumulator),
    Coarse(BlockStats),
}

/// Estimates `zeta` from growing temporal prefixes of `seq`.
///
/// Each prefix holds the first `ceil(fraction * frames)` frames, so every
/// row's input is a prefix of the next. The accumulators are extended
/// incrementally rather than rebuilt per row.
pub fn convergence(
    seq: &FlowSequence,
    method: Method,
    dense: &DenseConfig,
    coarse: &CoarseConfig,
    fractions: &[f64],
    reference: Option<f64>,
) -> Result<Vec<ConvergenceRow>> {
    if fractions.is_empty() {
        return Err(Error::Argument("no fractions given".into()));
    }
    if fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::Argument("fractions must lie in (0, 1]".into()));
    }
    if fractions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument(
            "fractions must be strictly increasing".into(),
        ));
    }

    let mut running = match method {
        Method::Dense => Running::Dense(DenseAccumulator::for_sequence(seq, dense.cell_size)?),
        Method::Coarse => Running::Coarse(BlockStats::new(GridSpec::for_sequence(
            coarse.rows,
            coarse.cols,
            seq,
        )?)),
    };

    let mut done = 0;
    let mut rows = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let upto = prefix_len(seq.frames().len(), fraction);
        for frame in &seq.frames()[done..upto] {
            match &mut running {
                Running::Dense(acc) => acc.accumulate(frame.vectors())?,
                Running::Coarse(stats) => stats.accumulate(frame.vectors())?,
            }
        }
        done = upto;

        let estimate = match &running {
            Running::Dense(acc) => estimate_from_accumulator(acc, dense).map(|e| e.zeta()),
            Running::Coarse(stats) => estimate_from_stats(stats.clone(), coarse).map(|e| e.zeta()),
        };
        let zeta = match estimate {
            Ok(z) => Some(z),
            Err(Error::InsufficientData { .. } | Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        };
        rows.push(ConvergenceRow {
            fraction,
            frames: upto,
            zeta,
            relative_error: zeta.zip(reference).map(|(z, r)| relative_error(z, r)),
        });
    }
    Ok(rows)
}

/// CSV with columns `fraction,frames,zeta,relative_error`.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("fraction,frames,zeta,relative_error\n");
    let opt = |x: Option<f64>| x.map(sig6).unwrap_or_default();
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            sig6(row.fraction),
            row.frames,
            opt(row.zeta),
            opt(row.relative_error)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::MotionVector;

    fn stream(frames: u64) -> FlowSequence {
        // Vertical displacement growing linearly down the frame.
        let vectors = (0..frames).flat_map(|t| {
            (0..80).map(move |k| {
                let v = (k as f64 * 3.7 + t as f64 * 1.3) % 280.0;
                let u = 100.0 + (k % 8) as f64;
                MotionVector::new(t, u, v, 0.0, 2.0 + v / 100.0)
            })
        });
        FlowSequence::from_vectors(352, 288, 15.0, vectors).unwrap()
    }

    #[test]
    fn default_has_eight_rows() {
        let f = default_fractions();
        assert_eq!(f.len(), 8);
        assert_eq!(f[0], 0.125);
        assert_eq!(f[7], 1.0);
    }

    #[test]
    fn rows_use_nested_prefixes() {
        let seq = stream(64);
        let rows = convergence(
            &seq,
            Method::Dense,
            &DenseConfig::default(),
            &CoarseConfig::default(),
            &default_fractions(),
            Some(0.01),
        )
        .unwrap();
        assert_eq!(rows.len(), 8);
        let frames: Vec<usize> = rows.iter().map(|r| r.frames).collect();
        assert_eq!(frames, vec![8, 16, 24, 32, 40, 48, 56, 64]);
        let full = crate::dense::estimate_dense(&seq, &DenseConfig::default()).unwrap();
        assert_eq!(rows[7].zeta, Some(full.zeta()));
        assert!(rows
            .iter()
            .all(|r| r.relative_error.is_some() == r.zeta.is_some()));
        let csv = convergence_csv(&rows);
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("fraction,frames,zeta,relative_error\n0.125,8,"));
    }

    #[test]
    fn rejects_unsorted_fractions() {
        let seq = stream(4);
        let err = convergence(
            &seq,
            Method::Coarse,
            &DenseConfig::default(),
            &CoarseConfig::default(),
            &[0.5, 0.25],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }
}

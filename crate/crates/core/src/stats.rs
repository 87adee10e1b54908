//! Small numeric helpers shared by both estimators.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign};

use crate::{Error, Result};

/// Fraction of samples discarded from each tail before averaging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimSpec {
    fraction: f64,
}

impl TrimSpec {
    pub fn new(fraction: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&fraction) {
            return Err(Error::Argument(format!(
                "trim fraction must lie in [0, 0.5), got {fraction}"
            )));
        }
        Ok(Self { fraction })
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    /// Number of samples removed from each tail of `n` samples.
    pub fn per_tail(&self, n: usize) -> usize {
        (self.fraction * n as f64).floor() as usize
    }
}

impl Default for TrimSpec {
    fn default() -> Self {
        Self { fraction: 0.15 }
    }
}

/// Mean of `values` after sorting and dropping `floor(trim * n)` samples from
/// each end.
pub fn trimmed_mean(values: &[f64], spec: TrimSpec) -> Result<f64> {
    if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
        return Err(Error::Argument(format!("non-finite sample {bad}")));
    }
    let mut sorted: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let cut = spec.per_tail(sorted.len());
    let kept = &sorted[cut..sorted.len() - cut];
    if kept.is_empty() {
        return Err(Error::InsufficientData {
            what: "no samples left after trimming",
            available: values.len(),
        });
    }
    let sum: f64 = kept.iter().map(|(x, _)| x).sum();
    Ok(sum / kept.len() as f64)
}

/// Least-squares solution `x` of the overdetermined scalar system `a_k x = b_k`.
pub fn scalar_lsq(pairs: &[(f64, f64)]) -> Result<f64> {
    let (ab, aa) = pairs
        .iter()
        .fold((0.0, 0.0), |(ab, aa), &(a, b)| (ab + a * b, aa + a * a));
    if aa == 0.0 || !aa.is_finite() {
        return Err(Error::Degenerate("all coefficients are zero".to_string()));
    }
    Ok(ab / aa)
}

/// Sum of squared residuals `sum (a x - b)^2`.
pub fn lsq_residual(pairs: &[(f64, f64)], x: f64) -> f64 {
    pairs.iter().map(|&(a, b)| (a * x - b).powi(2)).sum()
}

/// Finite-difference derivative of uniformly spaced samples.
///
/// Central difference where both neighbours exist, one-sided where only one
/// does, `None` where the sample itself or both neighbours are missing.
pub fn central_diff(samples: &[Option<f64>], spacing: f64) -> Vec<Option<f64>> {
    let positions: Vec<f64> = (0..samples.len()).map(|i| i as f64 * spacing).collect();
    central_diff_at(samples, &positions)
}

/// Like [`central_diff`] but with explicit sample positions (strictly increasing).
///
/// Interior points use the three-point formula for uneven spacing, which is
/// exact for quadratics and reduces to the plain central difference on a
/// uniform grid.
pub fn central_diff_at(samples: &[Option<f64>], positions: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(samples.len(), positions.len());
    let at = |i: usize| samples[i].map(|y| (positions[i], y));
    (0..samples.len())
        .map(|i| {
            let (x0, y0) = at(i)?;
            let prev = if i > 0 { at(i - 1) } else { None };
            let next = samples.get(i + 1).and_then(|_| at(i + 1));
            match (prev, next) {
                (Some((xp, yp)), Some((xn, yn))) => {
                    let (hp, hn) = (x0 - xp, xn - x0);
                    if hp == hn {
                        Some((yn - yp) / (xn - xp))
                    } else {
                        Some((hp * hp * (yn - y0) + hn * hn * (y0 - yp)) / (hp * hn * (hp + hn)))
                    }
                }
                (Some((xp, yp)), None) => Some((y0 - yp) / (x0 - xp)),
                (None, Some((xn, yn))) => Some((yn - y0) / (xn - x0)),
                (None, None) => None,
            }
        })
        .collect()
}

/// Exact, order-independent running sum of reals on a fixed 2^-62 grid.
///
/// Accumulators built from this type merge bit-exactly regardless of how a
/// stream is partitioned.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FixedSum(i128);

impl FixedSum {
    const SCALE: f64 = (1u64 << 62) as f64;

    pub fn quantize(x: f64) -> Self {
        debug_assert!(x.is_finite());
        Self((x * Self::SCALE).round() as i128)
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / Self::SCALE
    }

    pub fn raw(self) -> i128 {
        self.0
    }
}

impl Add for FixedSum {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl AddAssign for FixedSum {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl AddAssign<f64> for FixedSum {
    fn add_assign(&mut self, rhs: f64) {
        self.0 += Self::quantize(rhs).0;
    }
}

impl PartialOrd for FixedSum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FixedSum {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

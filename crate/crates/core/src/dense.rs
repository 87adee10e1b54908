//! Dense estimator: a local scale gradient per accumulation cell, polled by
//! a trimmed mean.
//!
//! For uniform world motion the vertical image velocity varies with image
//! row as `vdot ~ z^-k`, so `d(ln vdot)/dv = k * zeta`. Each cell turns the
//! vertical finite difference of the time-averaged vertical velocity field
//! into `zeta_cell = (d vdot / dv) / (k * vdot)`. The exponent `k` is 2 for
//! motion on a ground plane seen through a pinhole camera.

use std::fmt::Write as _;

use crate::flow::{FlowSequence, MotionVector};
use crate::format::sig6;
use crate::stats::{central_diff_at, trimmed_mean, FixedSum, TrimSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct CellSums {
    count: u64,
    sum_v: FixedSum,
    sum_dv: FixedSum,
    sum_mag: FixedSum,
}

/// Per-cell running sums of start row, vertical displacement and displacement
/// magnitude.
///
/// Sums are kept in fixed point, so accumulation order and partitioning do
/// not affect the result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseAccumulator {
    width: u32,
    height: u32,
    cell_size: u32,
    rows: usize,
    cols: usize,
    cells: Vec<CellSums>,
}

impl DenseAccumulator {
    pub fn new(width: u32, height: u32, cell_size: u32) -> Result<Self> {
        if width == 0 || height == 0 || cell_size == 0 {
            return Err(Error::Argument(
                "frame dimensions and cell size must be positive".into(),
            ));
        }
        let rows = height.div_ceil(cell_size) as usize;
        let cols = width.div_ceil(cell_size) as usize;
        Ok(Self {
            width,
            height,
            cell_size,
            rows,
            cols,
            cells: vec![CellSums::default(); rows * cols],
        })
    }

    /// Empty accumulator sized for the frames of `seq`.
    pub fn for_sequence(seq: &FlowSequence, cell_size: u32) -> Result<Self> {
        Self::new(seq.width(), seq.height(), cell_size)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> u32 {
        self.cell_size
    }

    /// `(row, col)` of the cell containing an image point.
    pub fn cell_of(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        if !(u >= 0.0 && v >= 0.0 && u < f64::from(self.width) && v < f64::from(self.height)) {
            return None;
        }
        let size = f64::from(self.cell_size);
        Some(((v / size) as usize, (u / size) as usize))
    }

    /// Adds one frame of vectors. Fails without modifying the accumulator if
    /// any vector lies outside the frame.
    pub fn accumulate(&mut self, vectors: &[MotionVector]) -> Result<()> {
        let mut slots = Vec::with_capacity(vectors.len());
        for mv in vectors {
            mv.check_bounds(self.width, self.height)?;
            let (r, c) = self.cell_of(mv.u, mv.v).expect("bounds checked");
            slots.push(r * self.cols + c);
        }
        for (mv, slot) in vectors.iter().zip(slots) {
            let cell = &mut self.cells[slot];
            cell.count += 1;
            cell.sum_v += mv.v;
            cell.sum_dv += mv.dv;
            cell.sum_mag += mv.magnitude();
        }
        Ok(())
    }

    pub fn accumulate_sequence(&mut self, seq: &FlowSequence) -> Result<()> {
        seq.frames()
            .iter()
            .try_for_each(|f| self.accumulate(f.vectors()))
    }

    pub fn from_sequence(seq: &FlowSequence, cell_size: u32) -> Result<Self> {
        let mut acc = Self::for_sequence(seq, cell_size)?;
        acc.accumulate_sequence(seq)?;
        Ok(acc)
    }

    /// Cell-wise sum of two accumulators over the same grid.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if (self.width, self.height, self.cell_size) != (other.width, other.height, other.cell_size)
        {
            return Err(Error::Argument(format!(
                "cannot merge accumulators over {}x{}/{} and {}x{}/{}",
                self.width, self.height, self.cell_size, other.width, other.height, other.cell_size
            )));
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.count += b.count;
            a.sum_v += b.sum_v;
            a.sum_dv += b.sum_dv;
            a.sum_mag += b.sum_mag;
        }
        Ok(())
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.cells[row * self.cols + col].count
    }

    pub fn sum_dv(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col].sum_dv.value()
    }

    /// Mean start row of the vectors in a cell, `None` when the cell is empty.
    pub fn mean_v(&self, row: usize, col: usize) -> Option<f64> {
        let cell = &self.cells[row * self.cols + col];
        (cell.count > 0).then(|| cell.sum_v.value() / cell.count as f64)
    }

    /// Mean vertical displacement in a cell, `None` when the cell is empty.
    pub fn mean_dv(&self, row: usize, col: usize) -> Option<f64> {
        let cell = &self.cells[row * self.cols + col];
        (cell.count > 0).then(|| cell.sum_dv.value() / cell.count as f64)
    }

    /// Mean displacement magnitude in a cell.
    pub fn mean_magnitude(&self, row: usize, col: usize) -> Option<f64> {
        let cell = &self.cells[row * self.cols + col];
        (cell.count > 0).then(|| cell.sum_mag.value() / cell.count as f64)
    }

    pub fn total_count(&self) -> u64 {
        self.cells.iter().map(|c| c.count).sum()
    }

    /// Image coordinates of a cell centre (partial edge cells use their own centre).
    pub fn cell_centre(&self, row: usize, col: usize) -> (f64, f64) {
        let size = f64::from(self.cell_size);
        let centre = |i: usize, extent: u32| {
            let lo = i as f64 * size;
            let hi = (lo + size).min(f64::from(extent));
            0.5 * (lo + hi)
        };
        (centre(col, self.width), centre(row, self.height))
    }
}

/// Why a cell carries no local estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvalidReason {
    InsufficientSamples,
    LowVelocity,
    NoVerticalNeighbour,
}

impl InvalidReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            InvalidReason::InsufficientSamples => "insufficient samples",
            InvalidReason::LowVelocity => "velocity below epsilon",
            InvalidReason::NoVerticalNeighbour => "no valid vertical neighbour",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellZeta {
    Valid(f64),
    Invalid(InvalidReason),
}

impl CellZeta {
    pub fn value(&self) -> Option<f64> {
        match *self {
            CellZeta::Valid(z) => Some(z),
            CellZeta::Invalid(_) => None,
        }
    }
}

/// Parameters of the per-cell estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    pub min_samples: u64,
    /// Minimum |mean vertical displacement|, pixels per frame.
    pub velocity_epsilon: f64,
    /// Exponent `k` in `vdot ~ z^-k`.
    pub depth_exponent: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            min_samples: 10,
            velocity_epsilon: 0.2,
            depth_exponent: 2.0,
        }
    }
}

/// Per-cell local scale gradient estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalZetaField {
    rows: usize,
    cols: usize,
    centres: Vec<(f64, f64)>,
    cells: Vec<CellZeta>,
}

impl LocalZetaField {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> CellZeta {
        self.cells[row * self.cols + col]
    }

    pub fn centre(&self, row: usize, col: usize) -> (f64, f64) {
        self.centres[row * self.cols + col]
    }

    /// Valid estimates in row-major order.
    pub fn valid_values(&self) -> Vec<f64> {
        self.cells.iter().filter_map(CellZeta::value).collect()
    }

    /// Same field with every valid estimate replaced by `f(row, col, zeta)`.
    pub fn map_valid(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for (idx, cell) in out.cells.iter_mut().enumerate() {
            if let CellZeta::Valid(z) = cell {
                *z = f(idx / self.cols, idx % self.cols, *z);
            }
        }
        out
    }

    /// CSV with columns `row,col,centre_u,centre_v,zeta,reason`; `zeta` is
    /// empty and `reason` set for invalid cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,centre_u,centre_v,zeta,reason\n");
        for (idx, cell) in self.cells.iter().enumerate() {
            let (u, v) = self.centres[idx];
            let (zeta, reason) = match cell {
                CellZeta::Valid(z) => (sig6(*z), ""),
                CellZeta::Invalid(r) => (String::new(), r.as_str()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                idx / self.cols,
                idx % self.cols,
                sig6(u),
                sig6(v),
                zeta,
                reason
            );
        }
        out
    }
}

/// Turns accumulated velocities into per-cell scale gradient estimates.
pub fn local_zeta_field(acc: &DenseAccumulator, params: FieldParams) -> Result<LocalZetaField> {
    if params.min_samples < 1 {
        return Err(Error::Argument("min_samples must be at least 1".into()));
    }
    if !(params.velocity_epsilon > 0.0) {
        return Err(Error::Argument("velocity_epsilon must be positive".into()));
    }
    if !(params.depth_exponent > 0.0) {
        return Err(Error::Argument("depth exponent must be positive".into()));
    }

    let (rows, cols) = (acc.rows, acc.cols);
    let centres: Vec<(f64, f64)> = (0..rows * cols)
        .map(|idx| acc.cell_centre(idx / cols, idx % cols))
        .collect();

    let status = |r: usize, c: usize| -> std::result::Result<f64, InvalidReason> {
        if acc.count(r, c) < params.min_samples {
            return Err(InvalidReason::InsufficientSamples);
        }
        let mean = acc.mean_dv(r, c).expect("non-empty cell");
        if mean.abs() < params.velocity_epsilon {
            return Err(InvalidReason::LowVelocity);
        }
        Ok(mean)
    };

    let mut cells = vec![CellZeta::Invalid(InvalidReason::InsufficientSamples); rows * cols];
    for c in 0..cols {
        let column: Vec<std::result::Result<f64, InvalidReason>> =
            (0..rows).map(|r| status(r, c)).collect();
        let means: Vec<Option<f64>> = column.iter().map(|s| s.ok()).collect();
        // Differences are taken between sample centroids; with sparse,
        // frame-rate-locked sampling these can sit well off the cell centres.
        let positions: Vec<f64> = (0..rows)
            .map(|r| acc.mean_v(r, c).unwrap_or_else(|| acc.cell_centre(r, c).1))
            .collect();
        let slopes = central_diff_at(&means, &positions);
        for r in 0..rows {
            cells[r * cols + c] = match (column[r], slopes[r]) {
                (Err(reason), _) => CellZeta::Invalid(reason),
                (Ok(_), None) => CellZeta::Invalid(InvalidReason::NoVerticalNeighbour),
                (Ok(mean), Some(slope)) => CellZeta::Valid(slope / (params.depth_exponent * mean)),
            };
        }
    }

    Ok(LocalZetaField {
        rows,
        cols,
        centres,
        cells,
    })
}

/// Global estimate polled from a [`LocalZetaField`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Consensus {
    pub zeta: f64,
    pub valid_cells: usize,
    /// Estimates discarded from each tail.
    pub trimmed_per_tail: usize,
}

/// Trimmed mean of all valid local estimates.
pub fn trimmed_consensus(field: &LocalZetaField, trim: TrimSpec) -> Result<Consensus> {
    let values = field.valid_values();
    let n = values.len();
    let cut = trim.per_tail(n);
    if n < 3 || n <= 2 * cut {
        return Err(Error::InsufficientData {
            what: "too few valid cells for a trimmed consensus",
            available: n,
        });
    }
    Ok(Consensus {
        zeta: trimmed_mean(&values, trim)?,
        valid_cells: n,
        trimmed_per_tail: cut,
    })
}

/// Configuration of [`estimate_dense`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseConfig {
    /// Cell edge length in pixels; 1 gives a per-pixel field.
    pub cell_size: u32,
    pub field: FieldParams,
    pub trim: TrimSpec,
}

impl Default for DenseConfig {
    fn default() -> Self {
        Self {
            cell_size: 4,
            field: FieldParams::default(),
            trim: TrimSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseEstimate {
    pub consensus: Consensus,
    pub field: LocalZetaField,
}

impl DenseEstimate {
    pub fn zeta(&self) -> f64 {
        self.consensus.zeta
    }
}

/// Runs the dense estimator over an accumulator.
pub fn estimate_from_accumulator(
    acc: &DenseAccumulator,
    config: &DenseConfig,
) -> Result<DenseEstimate> {
    let field = local_zeta_field(acc, config.field)?;
    let consensus = trimmed_consensus(&field, config.trim)?;
    Ok(DenseEstimate { consensus, field })
}

/// Accumulates every frame of `seq` and polls the local estimates.
pub fn estimate_dense(seq: &FlowSequence, config: &DenseConfig) -> Result<DenseEstimate> {
    if seq.is_empty() {
        return Err(Error::InsufficientData {
            what: "empty flow sequence",
            available: 0,
        });
    }
    let acc = DenseAccumulator::from_sequence(seq, config.cell_size)?;
    estimate_from_accumulator(&acc, config)
}

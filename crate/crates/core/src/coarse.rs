//! Coarse estimator over a block grid.
//!
//! Each block records the mean magnitude `m` of the vectors starting in it
//! and, for each of its eight neighbours, how many vectors entered it from
//! that neighbour. The mean magnitude of an interior block is modelled as a
//! transition-weighted mixture of its neighbours' magnitudes, with motion
//! from the row above scaled by `omega` and motion from the row below by
//! `1/omega`:
//!
//! ```text
//! m[i,j] = rho_l m[i,j-1] + rho_r m[i,j+1]
//!        + (rho_tl + rho_t + rho_tr) m[i-1,j] * omega
//!        + (rho_bl + rho_b + rho_br) m[i+1,j] / omega
//! ```
//!
//! Linearising around `omega = 1` gives one scalar equation `a * d = b` in
//! `d = omega - 1` per block, solved in closed form by least squares. The
//! scale gradient follows as `zeta = (1 - omega^(-1/2)) / h` with `h` the
//! block height in pixels.

use std::fmt::Write as _;

use serde::Serialize;

use crate::flow::{FlowSequence, GridSpec, MotionVector};
use crate::format::sig6;
use crate::stats::{lsq_residual, scalar_lsq, FixedSum};
use crate::{Error, Result};

/// Position of a neighbouring block relative to the block receiving a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    TopLeft,
    Top,
    TopRight,
    Left,
    Right,
    BottomLeft,
    Bottom,
    BottomRight,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::TopLeft,
        Direction::Top,
        Direction::TopRight,
        Direction::Left,
        Direction::Right,
        Direction::BottomLeft,
        Direction::Bottom,
        Direction::BottomRight,
    ];

    /// Direction of a neighbour displaced by `(d_row, d_col)`.
    pub fn from_offset(d_row: isize, d_col: isize) -> Option<Self> {
        use Direction::*;
        Some(match (d_row, d_col) {
            (-1, -1) => TopLeft,
            (-1, 0) => Top,
            (-1, 1) => TopRight,
            (0, -1) => Left,
            (0, 1) => Right,
            (1, -1) => BottomLeft,
            (1, 0) => Bottom,
            (1, 1) => BottomRight,
            _ => return None,
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        ["tl", "t", "tr", "l", "r", "bl", "b", "br"][self.index()]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct BlockCell {
    count: u64,
    sum_mag: FixedSum,
    transitions: [u64; 8],
    intra: u64,
}

/// Per-block magnitude sums and transition counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    grid: GridSpec,
    cells: Vec<BlockCell>,
}

/// Blocks visited by a displacement segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentTrace {
    pub start: (usize, usize),
    /// Blocks entered after leaving the start block, in order.
    pub entered: Vec<(usize, usize)>,
    /// Block containing the end point, `None` outside the frame.
    pub end: Option<(usize, usize)>,
}

/// Walks the segment from `(u, v)` to `(u + du, v + dv)` across the grid.
pub fn trace_segment(grid: &GridSpec, mv: &MotionVector) -> Option<SegmentTrace> {
    let start = grid.block_of(mv.u, mv.v)?;
    let end = grid.block_of(mv.u + mv.du, mv.v + mv.dv);
    let (bw, bh) = (grid.block_width(), grid.block_height());

    // Parametric distance along the segment to the next column/row boundary.
    let axis = |pos: f64, delta: f64, cell: usize, size: f64| -> (f64, f64, isize) {
        if delta > 0.0 {
            (((cell + 1) as f64 * size - pos) / delta, size / delta, 1)
        } else if delta < 0.0 {
            ((cell as f64 * size - pos) / delta, -size / delta, -1)
        } else {
            (f64::INFINITY, f64::INFINITY, 0)
        }
    };
    let (mut next_c, step_tc, dc) = axis(mv.u, mv.du, start.1, bw);
    let (mut next_r, step_tr, dr) = axis(mv.v, mv.dv, start.0, bh);

    let (mut r, mut c) = (start.0 as isize, start.1 as isize);
    let mut entered = Vec::new();
    let limit = grid.rows() + grid.cols() + 2;
    while Some((r as usize, c as usize)) != end && entered.len() < limit {
        let t = next_c.min(next_r);
        if t > 1.0 {
            break;
        }
        if next_c <= next_r {
            c += dc;
            next_c += step_tc;
        }
        if next_r <= t {
            r += dr;
            next_r += step_tr;
        }
        if r < 0 || c < 0 || r as usize >= grid.rows() || c as usize >= grid.cols() {
            break;
        }
        entered.push((r as usize, c as usize));
    }
    Some(SegmentTrace {
        start,
        entered,
        end,
    })
}

impl BlockStats {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            cells: vec![BlockCell::default(); grid.rows() * grid.cols()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn cell(&self, row: usize, col: usize) -> &BlockCell {
        &self.cells[row * self.grid.cols() + col]
    }

    fn cell_mut(&mut self, row: usize, col: usize) -> &mut BlockCell {
        let cols = self.grid.cols();
        &mut self.cells[row * cols + col]
    }

    /// Adds one frame of vectors. Fails without modifying the statistics if
    /// any vector starts outside the frame.
    pub fn accumulate(&mut self, vectors: &[MotionVector]) -> Result<()> {
        for mv in vectors {
            mv.check_bounds(self.grid.width(), self.grid.height())?;
        }
        for mv in vectors {
            let trace = trace_segment(&self.grid, mv).expect("bounds checked");
            let (sr, sc) = trace.start;
            let cell = self.cell_mut(sr, sc);
            cell.count += 1;
            cell.sum_mag += mv.magnitude();
            if trace.entered.is_empty() && trace.end == Some(trace.start) {
                cell.intra += 1;
            }
            for (r, c) in trace.entered {
                let offset = (sr as isize - r as isize, sc as isize - c as isize);
                if let Some(dir) = Direction::from_offset(offset.0, offset.1) {
                    self.cell_mut(r, c).transitions[dir.index()] += 1;
                }
            }
        }
        Ok(())
    }

    pub fn accumulate_sequence(&mut self, seq: &FlowSequence) -> Result<()> {
        seq.frames()
            .iter()
            .try_for_each(|f| self.accumulate(f.vectors()))
    }

    pub fn from_sequence(seq: &FlowSequence, grid: GridSpec) -> Result<Self> {
        let mut stats = Self::new(grid);
        stats.accumulate_sequence(seq)?;
        Ok(stats)
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Argument(
                "cannot merge block statistics over different grids".into(),
            ));
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.count += b.count;
            a.sum_mag += b.sum_mag;
            a.intra += b.intra;
            for (x, y) in a.transitions.iter_mut().zip(b.transitions) {
                *x += y;
            }
        }
        Ok(())
    }

    /// Number of vectors starting in the block.
    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.cell(row, col).count
    }

    /// Mean magnitude of the vectors starting in the block, 0 when empty.
    pub fn mean_magnitude(&self, row: usize, col: usize) -> f64 {
        let cell = self.cell(row, col);
        if cell.count == 0 {
            0.0
        } else {
            cell.sum_mag.value() / cell.count as f64
        }
    }

    pub fn transition_count(&self, row: usize, col: usize, dir: Direction) -> u64 {
        self.cell(row, col).transitions[dir.index()]
    }

    pub fn intra_count(&self, row: usize, col: usize) -> u64 {
        self.cell(row, col).intra
    }
}

/// Which counts form the denominator of the transition proportions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoDenominator {
    /// Eight transition counts plus the intra-block count.
    All,
    /// Eight transition counts only.
    #[default]
    Transitions,
}

impl std::str::FromStr for RhoDenominator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "transitions" => Ok(Self::Transitions),
            _ => Err(Error::Argument(format!("unknown rho denominator {s:?}"))),
        }
    }
}

impl std::fmt::Display for RhoDenominator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::Transitions => "transitions",
        })
    }
}

/// Motion summary of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSummary {
    pub m: f64,
    /// Transition proportions indexed by [`Direction::index`].
    pub rho: [f64; 8],
    /// Proportion of intra-block vectors (0 under [`RhoDenominator::Transitions`]).
    pub rho_intra: f64,
    pub count: u64,
    pub transitions: u64,
    pub intra: u64,
    /// No vector ended in or crossed into the block.
    pub empty: bool,
}

impl BlockSummary {
    pub fn rho(&self, dir: Direction) -> f64 {
        self.rho[dir.index()]
    }

    /// Proportion of incoming motion from the row above.
    pub fn rho_above(&self) -> f64 {
        self.rho(Direction::TopLeft) + self.rho(Direction::Top) + self.rho(Direction::TopRight)
    }

    /// Proportion of incoming motion from the row below.
    pub fn rho_below(&self) -> f64 {
        self.rho(Direction::BottomLeft)
            + self.rho(Direction::Bottom)
            + self.rho(Direction::BottomRight)
    }
}

/// Mean magnitudes and transition proportions of every block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockProportions {
    grid: GridSpec,
    blocks: Vec<BlockSummary>,
}

impl BlockProportions {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn get(&self, row: usize, col: usize) -> &BlockSummary {
        &self.blocks[row * self.grid.cols() + col]
    }

    pub fn blocks(&self) -> &[BlockSummary] {
        &self.blocks
    }

    /// CSV with columns `i,j,m,rho_tl,...,rho_br,count,transitions,intra`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,m");
        for d in Direction::ALL {
            let _ = write!(out, ",rho_{}", d.label());
        }
        out.push_str(",count,transitions,intra\n");
        for (idx, b) in self.blocks.iter().enumerate() {
            let _ = write!(
                out,
                "{},{},{}",
                idx / self.grid.cols(),
                idx % self.grid.cols(),
                sig6(b.m)
            );
            for r in b.rho {
                let _ = write!(out, ",{}", sig6(r));
            }
            let _ = writeln!(out, ",{},{},{}", b.count, b.transitions, b.intra);
        }
        out
    }
}

/// Converts accumulated counts into transition proportions.
pub fn finalize_proportions(stats: &BlockStats, denominator: RhoDenominator) -> BlockProportions {
    let blocks = stats
        .cells
        .iter()
        .map(|cell| {
            let transitions: u64 = cell.transitions.iter().sum();
            let total = match denominator {
                RhoDenominator::All => transitions + cell.intra,
                RhoDenominator::Transitions => transitions,
            };
            let mut rho = [0.0; 8];
            let mut rho_intra = 0.0;
            if total > 0 {
                let total = total as f64;
                for (r, &n) in rho.iter_mut().zip(&cell.transitions) {
                    *r = n as f64 / total;
                }
                if denominator == RhoDenominator::All {
                    rho_intra = cell.intra as f64 / total;
                }
            }
            BlockSummary {
                m: if cell.count == 0 {
                    0.0
                } else {
                    cell.sum_mag.value() / cell.count as f64
                },
                rho,
                rho_intra,
                count: cell.count,
                transitions,
                intra: cell.intra,
                empty: total == 0,
            }
        })
        .collect();
    BlockProportions {
        grid: stats.grid,
        blocks,
    }
}

/// Mixture constraint of one interior block, split into the parts that do
/// not depend on `omega` and the parts scaled by `omega` and `1/omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockConstraint {
    pub row: usize,
    pub col: usize,
    pub m: f64,
    /// `rho_l m[i,j-1] + rho_r m[i,j+1]`
    pub lateral: f64,
    /// `(rho_tl + rho_t + rho_tr) m[i-1,j]`
    pub above: f64,
    /// `(rho_bl + rho_b + rho_br) m[i+1,j]`
    pub below: f64,
}

impl BlockConstraint {
    /// Coefficients `(a, b)` of the linearised equation `a * (omega - 1) = b`.
    pub fn linear(&self) -> (f64, f64) {
        (
            self.above - self.below,
            self.m - self.lateral - self.above - self.below,
        )
    }

    /// Residual of the exact mixture equation at `omega`.
    pub fn residual(&self, omega: f64) -> f64 {
        self.m - self.lateral - self.above * omega - self.below / omega
    }
}

/// One constraint per usable interior block.
///
/// A block is used when at least `min_count` vectors start in it, its mean
/// magnitude is positive and some motion enters it from the row above or
/// below.
pub fn build_constraints(props: &BlockProportions, min_count: u64) -> Result<Vec<BlockConstraint>> {
    let grid = props.grid;
    let m = |r: usize, c: usize| props.get(r, c).m;
    let mut out = Vec::new();
    for i in 1..grid.rows() - 1 {
        for j in 1..grid.cols() - 1 {
            let b = props.get(i, j);
            if b.count < min_count || !(b.m > 0.0) || (b.rho_above() == 0.0 && b.rho_below() == 0.0)
            {
                continue;
            }
            out.push(BlockConstraint {
                row: i,
                col: j,
                m: b.m,
                lateral: b.rho(Direction::Left) * m(i, j - 1)
                    + b.rho(Direction::Right) * m(i, j + 1),
                above: b.rho_above() * m(i - 1, j),
                below: b.rho_below() * m(i + 1, j),
            });
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData {
            what: "no interior block has usable vertical transitions",
            available: 0,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    #[default]
    ClosedForm,
    Iterative,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" | "closed" => Ok(Self::ClosedForm),
            "iterative" => Ok(Self::Iterative),
            _ => Err(Error::Argument(format!("unknown solver {s:?}"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ClosedForm => "closed-form",
            Self::Iterative => "iterative",
        })
    }
}

/// Inter-row scale factor and the derived scale gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaEstimate {
    pub omega: f64,
    pub delta_omega: f64,
    /// Per pixel, `(1 - omega^(-1/2)) / h`.
    pub zeta: f64,
    /// L2 norm of the residual vector of the equations the solver minimised.
    pub residual: f64,
    pub constraints: usize,
    pub solver: SolverKind,
    pub iterations: usize,
    pub block_height: f64,
}

/// Scale gradient implied by an inter-row factor over rows `h` pixels apart.
pub fn zeta_from_omega(omega: f64, block_height: f64) -> f64 {
    (1.0 - omega.powf(-0.5)) / block_height
}

impl OmegaEstimate {
    fn new(
        omega: f64,
        block_height: f64,
        residual: f64,
        constraints: usize,
        solver: SolverKind,
        iterations: usize,
    ) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Divergence { omega });
        }
        Ok(Self {
            omega,
            delta_omega: omega - 1.0,
            zeta: zeta_from_omega(omega, block_height),
            residual,
            constraints,
            solver,
            iterations,
            block_height,
        })
    }

    /// Single-line JSON record.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serialises")
    }
}

fn check_block_height(block_height: f64) -> Result<()> {
    if block_height > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument("block height must be positive".into()))
    }
}

/// Least-squares solution of the linearised constraints.
pub fn solve_closed_form(
    constraints: &[BlockConstraint],
    block_height: f64,
) -> Result<OmegaEstimate> {
    check_block_height(block_height)?;
    let pairs: Vec<(f64, f64)> = constraints.iter().map(BlockConstraint::linear).collect();
    let delta = scalar_lsq(&pairs)
        .map_err(|_| Error::Degenerate("no vertical transition signal in any constraint".into()))?;
    OmegaEstimate::new(
        1.0 + delta,
        block_height,
        lsq_residual(&pairs, delta).sqrt(),
        constraints.len(),
        SolverKind::ClosedForm,
        0,
    )
}

/// Sum of squared residuals of the exact mixture equations.
pub fn mixture_objective(constraints: &[BlockConstraint], omega: f64) -> f64 {
    constraints.iter().map(|c| c.residual(omega).powi(2)).sum()
}

const MAX_ITERATIONS: usize = 100;

/// Minimises the exact mixture objective over `omega > 0` by damped Newton
/// iteration from `omega = 1`.
pub fn solve_iterative(
    constraints: &[BlockConstraint],
    block_height: f64,
) -> Result<OmegaEstimate> {
    check_block_height(block_height)?;
    if constraints.iter().all(|c| c.linear().0 == 0.0) {
        return Err(Error::Degenerate(
            "no vertical transition signal in any constraint".into(),
        ));
    }

    let derivatives = |w: f64| {
        constraints.iter().fold((0.0, 0.0), |(g, h), c| {
            let r = c.residual(w);
            let dr = -c.above + c.below / (w * w);
            let d2r = -2.0 * c.below / (w * w * w);
            (g + 2.0 * r * dr, h + 2.0 * (dr * dr + r * d2r))
        })
    };

    let mut omega = 1.0;
    let mut value = mixture_objective(constraints, omega);
    for iteration in 1..=MAX_ITERATIONS {
        let (grad, hess) = derivatives(omega);
        if grad == 0.0 {
            return finish_iterative(constraints, omega, block_height, iteration - 1);
        }
        let mut step = if hess > 0.0 {
            -grad / hess
        } else {
            -grad.signum() * 0.1 * omega
        };
        // Halve the step until it stays in the domain and does not increase
        // the objective.
        let (candidate, candidate_value) = loop {
            let w = omega + step;
            if w > 0.0 {
                let f = mixture_objective(constraints, w);
                if f <= value {
                    break (w, f);
                }
            }
            step *= 0.5;
            if step.abs() <= f64::EPSILON * omega {
                return finish_iterative(constraints, omega, block_height, iteration);
            }
        };
        let change = value - candidate_value;
        omega = candidate;
        value = candidate_value;
        if change.abs() < 1e-12 * value.max(1.0) {
            return finish_iterative(constraints, omega, block_height, iteration);
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        omega,
    })
}

fn finish_iterative(
    constraints: &[BlockConstraint],
    omega: f64,
    block_height: f64,
    iterations: usize,
) -> Result<OmegaEstimate> {
    OmegaEstimate::new(
        omega,
        block_height,
        mixture_objective(constraints, omega).sqrt(),
        constraints.len(),
        SolverKind::Iterative,
        iterations,
    )
}

/// Configuration of [`estimate_coarse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseConfig {
    pub rows: usize,
    pub cols: usize,
    pub rho_denominator: RhoDenominator,
    /// Blocks with fewer starting vectors are left out of the system.
    pub min_block_count: u64,
    pub solver: SolverKind,
}

impl Default for CoarseConfig {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            rho_denominator: RhoDenominator::default(),
            min_block_count: 5,
            solver: SolverKind::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseEstimate {
    pub omega: OmegaEstimate,
    pub stats: BlockStats,
    pub proportions: BlockProportions,
}

impl CoarseEstimate {
    pub fn zeta(&self) -> f64 {
        self.omega.zeta
    }
}

/// Solves the block system built from already accumulated statistics.
pub fn estimate_from_stats(stats: BlockStats, config: &CoarseConfig) -> Result<CoarseEstimate> {
    let proportions = finalize_proportions(&stats, config.rho_denominator);
    let constraints = build_constraints(&proportions, config.min_block_count)?;
    let h = stats.grid().block_height();
    let omega = match config.solver {
        SolverKind::ClosedForm => solve_closed_form(&constraints, h)?,
        SolverKind::Iterative => solve_iterative(&constraints, h)?,
    };
    Ok(CoarseEstimate {
        omega,
        stats,
        proportions,
    })
}

/// Accumulates every frame of `seq` on the configured grid and solves for `omega`.
pub fn estimate_coarse(seq: &FlowSequence, config: &CoarseConfig) -> Result<CoarseEstimate> {
    let grid = GridSpec::for_sequence(config.rows, config.cols, seq)?;
    estimate_from_stats(BlockStats::from_sequence(seq, grid)?, config)
}

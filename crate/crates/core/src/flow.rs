//! Motion-vector data model and the FLOWLOG text format.
//!
//! ```text
//! FLOWLOG 1 <width> <height> <frame_rate>
//! <t> <u> <v> <du> <dv>
//! ```
//!
//! `t` is an integer frame index; the other record fields are written with
//! exactly three decimals. Records are sorted by `t`, then by `(v, u)`.
//! Lines starting with `#` are comments.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::{Error, Result};

/// One sparse flow observation: the displacement of the feature at image
/// position `(u, v)` between frame `t` and frame `t + 1`.
///
/// Positions are in pixels with the origin at the top-left and `v`
/// increasing downward; displacements are in pixels per frame interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionVector {
    pub t: u64,
    pub u: f64,
    pub v: f64,
    pub du: f64,
    pub dv: f64,
}

impl MotionVector {
    pub fn new(t: u64, u: f64, v: f64, du: f64, dv: f64) -> Self {
        Self { t, u, v, du, dv }
    }

    pub fn magnitude(&self) -> f64 {
        self.du.hypot(self.dv)
    }

    /// Same vector with the displacement multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            du: self.du * k,
            dv: self.dv * k,
            ..*self
        }
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.t
            .cmp(&other.t)
            .then(self.v.total_cmp(&other.v))
            .then(self.u.total_cmp(&other.u))
            .then(self.du.total_cmp(&other.du))
            .then(self.dv.total_cmp(&other.dv))
    }

    pub(crate) fn check_bounds(&self, width: u32, height: u32) -> Result<()> {
        let inside = |x: f64, hi: u32| x.is_finite() && x >= 0.0 && x < f64::from(hi);
        if inside(self.u, width)
            && inside(self.v, height)
            && self.du.is_finite()
            && self.dv.is_finite()
        {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                frame: self.t,
                u: self.u,
                v: self.v,
                width,
                height,
            })
        }
    }
}

/// All vectors observed at one frame index, in canonical `(v, u)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    index: u64,
    vectors: Vec<MotionVector>,
}

impl Frame {
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn vectors(&self) -> &[MotionVector] {
        &self.vectors
    }
}

/// A time-ordered sequence of sparse flow frames plus acquisition metadata.
///
/// Only frames that carry at least one vector are stored; frame indices are
/// strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSequence {
    width: u32,
    height: u32,
    frame_rate: f64,
    frames: Vec<Frame>,
}

impl FlowSequence {
    /// An empty sequence with the given metadata.
    pub fn empty(width: u32, height: u32, frame_rate: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(Error::Argument(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        Ok(Self {
            width,
            height,
            frame_rate,
            frames: Vec::new(),
        })
    }

    /// Builds a sequence from vectors in any order. Vectors are grouped by
    /// frame index and sorted canonically.
    pub fn from_vectors(
        width: u32,
        height: u32,
        frame_rate: f64,
        vectors: impl IntoIterator<Item = MotionVector>,
    ) -> Result<Self> {
        let mut seq = Self::empty(width, height, frame_rate)?;
        let mut all: Vec<MotionVector> = vectors.into_iter().collect();
        for mv in &all {
            mv.check_bounds(width, height)?;
        }
        all.sort_by(MotionVector::canonical_cmp);
        for mv in all {
            match seq.frames.last_mut() {
                Some(frame) if frame.index == mv.t => frame.vectors.push(mv),
                _ => seq.frames.push(Frame {
                    index: mv.t,
                    vectors: vec![mv],
                }),
            }
        }
        Ok(seq)
    }

    /// Appends a frame after the last one. Empty frames are accepted and
    /// dropped.
    pub fn push_frame(&mut self, index: u64, mut vectors: Vec<MotionVector>) -> Result<()> {
        if let Some(last) = self.frames.last() {
            if index <= last.index {
                return Err(Error::Ordering {
                    previous: last.index,
                    found: index,
                });
            }
        }
        for mv in &mut vectors {
            if mv.t != index {
                return Err(Error::Argument(format!(
                    "vector with t = {} pushed into frame {index}",
                    mv.t
                )));
            }
            mv.check_bounds(self.width, self.height)?;
        }
        if vectors.is_empty() {
            return Ok(());
        }
        vectors.sort_by(MotionVector::canonical_cmp);
        self.frames.push(Frame { index, vectors });
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn vector_count(&self) -> usize {
        self.frames.iter().map(|f| f.vectors.len()).sum()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &MotionVector> + '_ {
        self.frames.iter().flat_map(|f| f.vectors.iter())
    }

    /// Same vectors, with a different declared frame rate.
    pub fn with_frame_rate(&self, frame_rate: f64) -> Result<Self> {
        let mut out = Self::empty(self.width, self.height, frame_rate)?;
        out.frames = self.frames.clone();
        Ok(out)
    }

    /// Copy holding only the given frames (by position), keeping metadata.
    pub fn select_frames(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            width: self.width,
            height: self.height,
            frame_rate: self.frame_rate,
            frames: self.frames[range].to_vec(),
        }
    }

    /// Copy keeping only vectors strictly longer than `threshold` pixels.
    /// Frames left empty are dropped.
    pub fn above_threshold(&self, threshold: f64) -> Self {
        let frames = self
            .frames
            .iter()
            .filter_map(|f| {
                let vectors: Vec<MotionVector> = f
                    .vectors
                    .iter()
                    .filter(|mv| mv.magnitude() > threshold)
                    .copied()
                    .collect();
                (!vectors.is_empty()).then_some(Frame {
                    index: f.index,
                    vectors,
                })
            })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            frame_rate: self.frame_rate,
            frames,
        }
    }

    /// Canonical FLOWLOG text.
    pub fn to_flowlog(&self) -> String {
        let mut out = String::with_capacity(32 + 40 * self.vector_count());
        let _ = writeln!(
            out,
            "FLOWLOG 1 {} {} {}",
            self.width, self.height, self.frame_rate
        );
        for mv in self.vectors() {
            let _ = writeln!(
                out,
                "{} {:.3} {:.3} {:.3} {:.3}",
                mv.t, mv.u, mv.v, mv.du, mv.dv
            );
        }
        out
    }
}

/// Writes the canonical FLOWLOG encoding of `seq`.
pub fn write_flow_stream<W: Write>(seq: &FlowSequence, mut out: W) -> io::Result<()> {
    out.write_all(seq.to_flowlog().as_bytes())
}

/// Parses a FLOWLOG stream.
///
/// Records within one frame may appear in any order; frame indices must not
/// decrease.
pub fn parse_flow_stream<R: BufRead>(input: R) -> Result<FlowSequence> {
    let mut seq: Option<FlowSequence> = None;
    let mut pending: Vec<MotionVector> = Vec::new();

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Format {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(current) = seq.as_mut() else {
            seq = Some(parse_header(&fields, lineno)?);
            continue;
        };
        let mv = parse_record(&fields, lineno)?;
        mv.check_bounds(current.width, current.height)?;
        if let Some(prev) = pending.last() {
            if mv.t < prev.t {
                return Err(Error::Ordering {
                    previous: prev.t,
                    found: mv.t,
                });
            }
            if mv.t > prev.t {
                let index = prev.t;
                current.push_frame(index, std::mem::take(&mut pending))?;
            }
        }
        pending.push(mv);
    }

    let mut seq = seq.ok_or(Error::Format {
        line: 1,
        message: "missing FLOWLOG header".to_string(),
    })?;
    if let Some(index) = pending.first().map(|mv| mv.t) {
        seq.push_frame(index, pending)?;
    }
    Ok(seq)
}

impl std::str::FromStr for FlowSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_flow_stream(s.as_bytes())
    }
}

fn parse_header(fields: &[&str], line: usize) -> Result<FlowSequence> {
    let bad = |message: String| Error::Format { line, message };
    match fields {
        ["FLOWLOG", "1", w, h, fps] => {
            let width: u32 = w.parse().map_err(|_| bad(format!("invalid width {w:?}")))?;
            let height: u32 = h
                .parse()
                .map_err(|_| bad(format!("invalid height {h:?}")))?;
            let frame_rate: f64 = fps
                .parse()
                .map_err(|_| bad(format!("invalid frame rate {fps:?}")))?;
            FlowSequence::empty(width, height, frame_rate).map_err(|e| bad(e.to_string()))
        }
        ["FLOWLOG", version, ..] => Err(bad(format!("unsupported FLOWLOG version {version:?}"))),
        _ => Err(bad(
            "expected header `FLOWLOG 1 <width> <height> <frame_rate>`".to_string(),
        )),
    }
}

fn parse_record(fields: &[&str], line: usize) -> Result<MotionVector> {
    let bad = |message: String| Error::Format { line, message };
    let [t, rest @ ..] = fields else {
        return Err(bad("empty record".to_string()));
    };
    if rest.len() != 4 {
        return Err(bad(format!("expected 5 fields, found {}", fields.len())));
    }
    let t: u64 = t
        .parse()
        .map_err(|_| bad(format!("invalid frame index {t:?}")))?;
    let mut vals = [0.0; 4];
    for (slot, field) in vals.iter_mut().zip(rest) {
        *slot = field
            .parse()
            .map_err(|_| bad(format!("invalid number {field:?}")))?;
    }
    let [u, v, du, dv] = vals;
    Ok(MotionVector { t, u, v, du, dv })
}

/// Rectangular block grid laid over the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    rows: usize,
    cols: usize,
    width: u32,
    height: u32,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, width: u32, height: u32) -> Result<Self> {
        if rows < 3 || cols < 3 {
            return Err(Error::Argument(format!(
                "grid must be at least 3x3 to have an interior block, got {rows}x{cols}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Argument("frame dimensions must be positive".into()));
        }
        Ok(Self {
            rows,
            cols,
            width,
            height,
        })
    }

    /// A grid covering the frame of `seq`.
    pub fn for_sequence(rows: usize, cols: usize, seq: &FlowSequence) -> Result<Self> {
        Self::new(rows, cols, seq.width(), seq.height())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Block height `h` in pixels.
    pub fn block_height(&self) -> f64 {
        f64::from(self.height) / self.rows as f64
    }

    pub fn block_width(&self) -> f64 {
        f64::from(self.width) / self.cols as f64
    }

    /// Block `(row, col)` containing the image point, or `None` outside the frame.
    pub fn block_of(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        if !(u >= 0.0 && v >= 0.0 && u < f64::from(self.width) && v < f64::from(self.height)) {
            return None;
        }
        let row = ((v / self.block_height()) as usize).min(self.rows - 1);
        let col = ((u / self.block_width()) as usize).min(self.cols - 1);
        Some((row, col))
    }
}

/// A dense per-pixel flow field for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFlowField {
    width: usize,
    height: usize,
    du: Vec<f64>,
    dv: Vec<f64>,
}

impl DenseFlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            du: vec![0.0; width * height],
            dv: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn set(&mut self, x: usize, y: usize, du: f64, dv: f64) {
        let i = y * self.width + x;
        self.du[i] = du;
        self.dv[i] = dv;
    }

    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.du[i], self.dv[i])
    }

    fn magnitude(&self, x: usize, y: usize) -> f64 {
        let (du, dv) = self.get(x, y);
        du.hypot(dv)
    }
}

/// Magnitude thresholding followed by non-maximum suppression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsifyParams {
    /// Vectors must be strictly longer than this (pixels).
    pub threshold: f64,
    /// Chebyshev radius of the suppression neighbourhood; 1 is the 8-neighbourhood.
    pub radius: usize,
}

impl Default for SparsifyParams {
    fn default() -> Self {
        Self {
            threshold: 1.5,
            radius: 1,
        }
    }
}

/// Reduces a dense flow field to the sparse set of locally maximal vectors
/// whose magnitude exceeds the threshold.
///
/// A retained vector is suppressed when a retained neighbour has a larger
/// magnitude, or an equal magnitude at a lexicographically smaller `(v, u)`.
pub fn sparsify(
    field: &DenseFlowField,
    frame: u64,
    params: SparsifyParams,
) -> Result<Vec<MotionVector>> {
    if !(params.threshold > 0.0) {
        return Err(Error::Argument(format!(
            "threshold must be positive, got {}",
            params.threshold
        )));
    }
    let (w, h, r) = (field.width, field.height, params.radius);
    let retained = |x: usize, y: usize| field.magnitude(x, y) > params.threshold;

    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !retained(x, y) {
                continue;
            }
            let mag = field.magnitude(x, y);
            let suppressed = (y.saturating_sub(r)..(y + r + 1).min(h)).any(|ny| {
                (x.saturating_sub(r)..(x + r + 1).min(w)).any(|nx| {
                    if (nx, ny) == (x, y) || !retained(nx, ny) {
                        return false;
                    }
                    let other = field.magnitude(nx, ny);
                    other > mag || (other == mag && (ny, nx) < (y, x))
                })
            });
            if !suppressed {
                let (du, dv) = field.get(x, y);
                out.push(MotionVector::new(frame, x as f64, y as f64, du, dv));
            }
        }
    }
    Ok(out)
}

/// Temporal prefix holding the first `ceil(fraction * frames)` frames.
pub fn slice_fraction(seq: &FlowSequence, fraction: f64) -> Result<FlowSequence> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let keep = prefix_len(seq.frames.len(), fraction);
    Ok(seq.select_frames(0..keep))
}

pub(crate) fn prefix_len(total: usize, fraction: f64) -> usize {
    ((fraction * total as f64).ceil() as usize).min(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_frame_seq() -> FlowSequence {
        FlowSequence::from_vectors(
            64,
            48,
            15.0,
            [
                MotionVector::new(0, 10.0, 20.0, 2.0, 1.0),
                MotionVector::new(0, 5.5, 20.0, -1.25, 0.5),
                MotionVector::new(3, 63.999, 47.999, 0.0, -3.0),
                MotionVector::new(7, 0.0, 0.0, 1.5, 1.5),
            ],
        )
        .unwrap()
    }

    #[test]
    fn threshold_filter_is_strict_and_drops_empty_frames() {
        let seq = three_frame_seq();
        // magnitudes: 2.236, 1.346, 3.0, 2.121
        let kept = seq.above_threshold(2.121320343559643);
        let counts: Vec<(u64, usize)> = kept
            .frames()
            .iter()
            .map(|f| (f.index(), f.vectors().len()))
            .collect();
        assert_eq!(counts, vec![(0, 1), (3, 1)]);
        assert_eq!(seq.above_threshold(0.0), seq);
        assert!(seq.above_threshold(3.0).is_empty());
    }

    #[test]
    fn header_only() {
        let seq: FlowSequence = "FLOWLOG 1 352 288 15\n".parse().unwrap();
        assert_eq!(seq.width(), 352);
        assert_eq!(seq.height(), 288);
        assert_eq!(seq.frame_rate(), 15.0);
        assert!(seq.is_empty());
        assert_eq!(seq.to_flowlog(), "FLOWLOG 1 352 288 15\n");
    }

    #[test]
    fn single_record_format() {
        let seq = FlowSequence::from_vectors(
            352,
            288,
            15.0,
            [MotionVector::new(0, 10.0, 20.0, 2.0, 1.0)],
        )
        .unwrap();
        assert_eq!(
            seq.to_flowlog(),
            "FLOWLOG 1 352 288 15\n0 10.000 20.000 2.000 1.000\n"
        );
    }

    #[test]
    fn three_frames_round_trip() {
        let seq = three_frame_seq();
        assert_eq!(seq.frames().len(), 3);
        let text = seq.to_flowlog();
        let back: FlowSequence = text.parse().unwrap();
        assert_eq!(back, seq);
        assert_eq!(back.to_flowlog(), text);
    }

    #[test]
    fn records_are_canonicalised_within_frame() {
        let text =
            "# comment\nFLOWLOG 1 100 100 5\n0 9 30 1 1\n0 50 10 1 1\n\n0 10 10 1 1\n2 1 1 1 1\n";
        let seq: FlowSequence = text.parse().unwrap();
        assert_eq!(
            seq.to_flowlog(),
            "FLOWLOG 1 100 100 5\n0 10.000 10.000 1.000 1.000\n0 50.000 10.000 1.000 1.000\n0 9.000 30.000 1.000 1.000\n2 1.000 1.000 1.000 1.000\n"
        );
    }

    #[test]
    fn malformed_header_names_line() {
        let err = "# c\nFLOWLIG 1 2 3 4\n"
            .parse::<FlowSequence>()
            .unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err:?}");
        let err = "FLOWLOG 1 0 288 15\n".parse::<FlowSequence>().unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
        let err = "FLOWLOG 2 10 10 15\n".parse::<FlowSequence>().unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
        let err = "".parse::<FlowSequence>().unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn malformed_record_names_line() {
        let err = "FLOWLOG 1 10 10 15\n0 1 2 3\n"
            .parse::<FlowSequence>()
            .unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
        let err = "FLOWLOG 1 10 10 15\n0 1 2 3 x\n"
            .parse::<FlowSequence>()
            .unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
    }

    #[test]
    fn out_of_bounds_vector() {
        let err = "FLOWLOG 1 10 10 15\n4 10.000 2 1 1\n"
            .parse::<FlowSequence>()
            .unwrap_err();
        assert_eq!(
            err,
            Error::OutOfBounds {
                frame: 4,
                u: 10.0,
                v: 2.0,
                width: 10,
                height: 10
            }
        );
    }

    #[test]
    fn decreasing_frame_index() {
        let err = "FLOWLOG 1 10 10 15\n4 1 1 1 1\n3 1 1 1 1\n"
            .parse::<FlowSequence>()
            .unwrap_err();
        assert_eq!(
            err,
            Error::Ordering {
                previous: 4,
                found: 3
            }
        );
    }

    #[test]
    fn sparsify_all_zero() {
        let field = DenseFlowField::zeros(8, 8);
        assert!(sparsify(&field, 0, SparsifyParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sparsify_single_peak() {
        let mut field = DenseFlowField::zeros(8, 8);
        field.set(3, 4, 0.0, 2.0);
        let out = sparsify(&field, 5, SparsifyParams::default()).unwrap();
        assert_eq!(out, vec![MotionVector::new(5, 3.0, 4.0, 0.0, 2.0)]);
    }

    /// Brute-force NMS over a 3x3 patch: a vector survives if it passes the
    /// threshold and no other passing pixel in the patch is larger.
    #[test]
    fn sparsify_patch_matches_brute_force() {
        let mut field = DenseFlowField::zeros(3, 3);
        field.set(1, 1, 1.6, 0.0);
        field.set(2, 0, 0.0, 1.8);
        let expected: Vec<(usize, usize)> = (0..3)
            .flat_map(|y| (0..3).map(move |x| (x, y)))
            .filter(|&(x, y)| {
                let (a, b) = field.get(x, y);
                let m = a.hypot(b);
                m > 1.5
                    && (0..3).all(|yy| {
                        (0..3).all(|xx| {
                            let (c, d) = field.get(xx, yy);
                            c.hypot(d) <= m || (xx, yy) == (x, y)
                        })
                    })
            })
            .collect();
        assert_eq!(expected, vec![(2, 0)]);
        let out = sparsify(&field, 0, SparsifyParams::default()).unwrap();
        let got: Vec<(usize, usize)> = out.iter().map(|m| (m.u as usize, m.v as usize)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn sparsify_tie_keeps_smallest_position() {
        let mut field = DenseFlowField::zeros(4, 4);
        field.set(2, 1, 2.0, 0.0);
        field.set(1, 2, 2.0, 0.0);
        field.set(3, 1, 0.0, 2.0);
        let out = sparsify(&field, 0, SparsifyParams::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].u, out[0].v), (2.0, 1.0));
    }

    #[test]
    fn sparsify_rejects_bad_threshold() {
        let field = DenseFlowField::zeros(2, 2);
        let params = SparsifyParams {
            threshold: 0.0,
            radius: 1,
        };
        assert!(sparsify(&field, 0, params).is_err());
    }

    fn frames(n: u64) -> FlowSequence {
        FlowSequence::from_vectors(
            10,
            10,
            15.0,
            (0..n).map(|t| MotionVector::new(t * 2, 1.0, 1.0, 2.0, 0.0)),
        )
        .unwrap()
    }

    #[test]
    fn slice_fraction_cases() {
        let s8 = frames(8);
        assert_eq!(slice_fraction(&s8, 1.0).unwrap(), s8);
        assert_eq!(slice_fraction(&s8, 0.125).unwrap().frames().len(), 1);
        // ceil(0.5 * 9) = 5, enumerated: 4.5 -> 5
        let s9 = frames(9);
        let half = slice_fraction(&s9, 0.5).unwrap();
        assert_eq!(half.frames(), &s9.frames()[..5]);
        assert!(slice_fraction(&s9, 0.0).is_err());
        assert!(slice_fraction(&s9, 1.01).is_err());
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(2, 5, 100, 100).is_err());
        let g = GridSpec::new(10, 10, 352, 288).unwrap();
        assert!((g.block_height() - 28.8).abs() < 1e-12);
        assert_eq!(g.block_of(351.9, 287.9), Some((9, 9)));
        assert_eq!(g.block_of(352.0, 0.0), None);
    }
}

//! Pinhole-camera simulator for point objects moving on a plane.
//!
//! The camera sits `mount_height` metres above a ground plane and is pitched
//! down by `tilt`. Camera axes: `x` right, `y` down, `z` along the optical
//! axis. A ground point at lateral offset `X` and horizontal distance `W`
//! has camera coordinates
//!
//! ```text
//! x = X
//! y = H cos(tilt) - W sin(tilt)
//! z = H sin(tilt) + W cos(tilt)
//! ```
//!
//! Back-projecting image row `v` onto the ground gives
//! `z(v) = H / (p cos(tilt) + sin(tilt))` with `p = (v - c_v) / f_v`, hence
//! the scale gradient `zeta(v) = -(dz/dv) / z = cos(tilt) / (f_v (p cos(tilt) + sin(tilt)))`,
//! which is one over the pixel distance of `v` below the horizon.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::flow::{FlowSequence, MotionVector};
use crate::{Error, Result};

/// Pinhole intrinsics plus a tilt-only pose above the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    /// Horizontal focal length in pixels (`f * k_u`).
    pub fu: f64,
    /// Vertical focal length in pixels (`f * k_v`).
    pub fv: f64,
    /// Height of the optical centre above the ground plane, metres.
    pub mount_height: f64,
    /// Downward pitch in radians; 0 means a horizontal optical axis.
    pub tilt: f64,
    pub width: u32,
    pub height: u32,
    pub cu: f64,
    pub cv: f64,
}

impl CameraModel {
    /// Camera with the principal point at the image centre.
    pub fn centred(
        fu: f64,
        fv: f64,
        mount_height: f64,
        tilt: f64,
        width: u32,
        height: u32,
    ) -> Self {
        Self {
            fu,
            fv,
            mount_height,
            tilt,
            width,
            height,
            cu: f64::from(width) / 2.0,
            cv: f64::from(height) / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Script(format!("camera: {m}")));
        if !(self.fu > 0.0 && self.fv > 0.0) {
            return fail("focal lengths must be positive");
        }
        if !(self.mount_height > 0.0) {
            return fail("mount height must be positive");
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.tilt) {
            return fail("tilt must lie in [0, pi/2)");
        }
        if self.width == 0 || self.height == 0 {
            return fail("image dimensions must be positive");
        }
        let inside = |c: f64, hi: u32| c >= 0.0 && c < f64::from(hi);
        if !(inside(self.cu, self.width) && inside(self.cv, self.height)) {
            return fail("principal point must lie inside the image");
        }
        Ok(())
    }

    /// Camera-frame coordinates of the ground point at lateral offset `x`
    /// and horizontal distance `w` from the camera foot.
    pub fn ground_to_camera(&self, x: f64, w: f64) -> [f64; 3] {
        let (s, c) = self.tilt.sin_cos();
        let h = self.mount_height;
        [x, h * c - w * s, h * s + w * c]
    }

    /// Optical-axis depth of the ground point seen at image row `v`.
    pub fn ground_depth_at_row(&self, v: f64) -> Result<f64> {
        let denom = self.horizon_denominator(v);
        if denom <= 0.0 {
            return Err(Error::Horizon { v });
        }
        Ok(self.mount_height / denom)
    }

    /// Image row of the horizon line.
    pub fn horizon_row(&self) -> f64 {
        self.cv - self.fv * self.tilt.tan()
    }

    fn horizon_denominator(&self, v: f64) -> f64 {
        let p = (v - self.cv) / self.fv;
        let (s, c) = self.tilt.sin_cos();
        p * c + s
    }
}

/// Projects a camera-frame point to the image plane.
pub fn project_point(cam: &CameraModel, point: [f64; 3]) -> Result<(f64, f64)> {
    let [x, y, z] = point;
    if !(z > 0.0) {
        return Err(Error::BehindCamera { z });
    }
    Ok((cam.fu * x / z + cam.cu, cam.fv * y / z + cam.cv))
}

/// Analytic scale gradient `-(dz/dv) / z` of the ground plane at image row `v`.
pub fn oracle_zeta(cam: &CameraModel, v: f64) -> Result<f64> {
    let denom = cam.horizon_denominator(v);
    if denom <= 0.0 {
        return Err(Error::Horizon { v });
    }
    Ok(cam.tilt.cos() / (cam.fv * denom))
}

/// The plane on which objects move.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SceneSurface {
    /// Horizontal ground plane below the camera. Object coordinates are
    /// `(lateral, distance along the ground)`.
    #[default]
    Ground,
    /// Plane perpendicular to the optical axis at a fixed depth (metres).
    /// Object coordinates are `(x, y)` in camera axes; tilt is ignored.
    FrontoParallel { depth: f64 },
}

impl SceneSurface {
    pub fn to_camera(&self, cam: &CameraModel, lateral: f64, along: f64) -> [f64; 3] {
        match *self {
            SceneSurface::Ground => cam.ground_to_camera(lateral, along),
            SceneSurface::FrontoParallel { depth } => [lateral, along, depth],
        }
    }

    /// Reference scale gradient at image row `v`.
    pub fn oracle_zeta(&self, cam: &CameraModel, v: f64) -> Result<f64> {
        match self {
            SceneSurface::Ground => oracle_zeta(cam, v),
            SceneSurface::FrontoParallel { .. } => Ok(0.0),
        }
    }

    fn depth_of(&self, cam: &CameraModel, along: f64) -> f64 {
        self.to_camera(cam, 0.0, along)[2]
    }
}

/// A point object moving at constant velocity on the scene surface.
///
/// With `wrap` set, the object re-enters at the opposite end whenever its
/// `along` coordinate leaves the range, optionally at a new lateral offset
/// drawn from `lane` and a new speed factor drawn from `1 ± jitter`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldObject {
    pub lateral: f64,
    pub along: f64,
    pub v_lateral: f64,
    pub v_along: f64,
    /// Active interval `[start, end)` in seconds.
    pub start: f64,
    pub end: f64,
    pub wrap: Option<(f64, f64)>,
    pub lane: Option<(f64, f64)>,
    pub jitter: f64,
}

impl WorldObject {
    pub fn new(lateral: f64, along: f64, v_lateral: f64, v_along: f64) -> Self {
        Self {
            lateral,
            along,
            v_lateral,
            v_along,
            start: 0.0,
            end: f64::INFINITY,
            wrap: None,
            lane: None,
            jitter: 0.0,
        }
    }

    pub fn with_interval(mut self, start: f64, end: f64) -> Self {
        self.start = start;
        self.end = end;
        self
    }

    pub fn with_wrap(mut self, lo: f64, hi: f64) -> Self {
        self.wrap = Some((lo, hi));
        self
    }

    pub fn with_lane(mut self, lo: f64, hi: f64) -> Self {
        self.lane = Some((lo, hi));
        self
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = jitter;
        self
    }

    fn active_at(&self, s: f64) -> bool {
        s >= self.start && s < self.end
    }
}

/// Image rectangle in which objects move at `factor` times their speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierRegion {
    pub u0: f64,
    pub v0: f64,
    pub u1: f64,
    pub v1: f64,
    pub factor: f64,
}

impl OutlierRegion {
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u0 && u < self.u1 && v >= self.v0 && v < self.v1
    }

    pub fn area(&self) -> f64 {
        (self.u1 - self.u0) * (self.v1 - self.v0)
    }
}

/// Everything needed to generate a synthetic flow stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneScript {
    pub camera: CameraModel,
    pub surface: SceneSurface,
    pub objects: Vec<WorldObject>,
    /// Seconds.
    pub duration: f64,
    pub frame_rate: f64,
    /// Standard deviation of the isotropic Gaussian displacement noise, pixels.
    pub noise_std: f64,
    /// Vectors must be strictly longer than this to be emitted, pixels.
    pub threshold: f64,
    pub outlier: Option<OutlierRegion>,
}

impl SceneScript {
    pub fn new(camera: CameraModel, duration: f64, frame_rate: f64) -> Self {
        Self {
            camera,
            surface: SceneSurface::Ground,
            objects: Vec::new(),
            duration,
            frame_rate,
            noise_std: 0.05,
            threshold: 1.5,
            outlier: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        let fail = |m: String| Err(Error::Script(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return fail(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return fail(format!(
                "frame rate must be positive, got {}",
                self.frame_rate
            ));
        }
        if !(self.noise_std >= 0.0) {
            return fail("noise_std must be non-negative".into());
        }
        if !(self.threshold >= 0.0) {
            return fail("threshold must be non-negative".into());
        }
        if let SceneSurface::FrontoParallel { depth } = self.surface {
            if !(depth > 0.0) {
                return fail("fronto-parallel surface depth must be positive".into());
            }
        }
        if let Some(r) = &self.outlier {
            let (w, h) = (f64::from(self.camera.width), f64::from(self.camera.height));
            if !(r.u0 >= 0.0 && r.v0 >= 0.0 && r.u1 <= w && r.v1 <= h && r.u0 < r.u1 && r.v0 < r.v1)
            {
                return fail(
                    "outlier region must be a non-empty rectangle inside the image".into(),
                );
            }
            if !(r.factor > 0.0) {
                return fail("outlier factor must be positive".into());
            }
        }
        for (i, obj) in self.objects.iter().enumerate() {
            self.validate_object(i, obj)?;
        }
        Ok(())
    }

    fn validate_object(&self, i: usize, obj: &WorldObject) -> Result<()> {
        let fail = |m: &str| Err(Error::Script(format!("object {i}: {m}")));
        if !(obj.start < obj.end) {
            return fail("empty active interval");
        }
        if !(0.0..1.0).contains(&obj.jitter) {
            return fail("jitter must lie in [0, 1)");
        }
        // Depth is affine in `along`, so checking the extremes of the visited
        // range suffices.
        let extremes = match obj.wrap {
            Some((lo, hi)) => {
                if !(lo < hi) {
                    return fail("wrap range must be increasing");
                }
                if !(lo..=hi).contains(&obj.along) {
                    return fail("initial position lies outside the wrap range");
                }
                vec![lo, hi]
            }
            None => {
                let end = obj.end.min(self.duration);
                let span = (end - obj.start).max(0.0);
                let fastest = obj.v_along * (1.0 + obj.jitter);
                vec![obj.along, obj.along + fastest * span]
            }
        };
        if let Some((lo, hi)) = obj.lane {
            if !(lo <= hi) {
                return fail("lane range must be increasing");
            }
        }
        if extremes
            .iter()
            .any(|&a| !(self.surface.depth_of(&self.camera, a) > 0.0))
        {
            return fail("object passes behind the camera");
        }
        Ok(())
    }

    /// Reference scale gradient at the image centre row.
    pub fn reference_zeta(&self) -> Result<f64> {
        self.surface
            .oracle_zeta(&self.camera, f64::from(self.camera.height) / 2.0)
    }

    /// Same scene with every object velocity multiplied by `k`.
    pub fn with_velocity_scale(&self, k: f64) -> Self {
        let mut out = self.clone();
        for obj in &mut out.objects {
            obj.v_lateral *= k;
            obj.v_along *= k;
        }
        out
    }

    /// Parses the `key = value` scene description.
    ///
    /// ```text
    /// duration = 7200            # seconds
    /// frame_rate = 15
    /// noise_std = 0.05           # pixels
    /// threshold = 1.5            # pixels
    /// surface = ground           # or `fronto`, with surface.depth = <metres>
    /// camera.fu = 500            # or camera.f for both axes
    /// camera.fv = 500
    /// camera.mount_height = 6
    /// camera.tilt_deg = 60       # or camera.tilt in radians
    /// camera.width = 352
    /// camera.height = 288
    /// camera.cu = 176            # defaults to the image centre
    /// camera.cv = 144
    /// object.0.x = 0.5           # lateral offset, metres
    /// object.0.w = 6.0           # distance along the surface, metres
    /// object.0.vx = 0            # metres per second
    /// object.0.vw = -1.4
    /// object.0.start = 0         # active interval, seconds
    /// object.0.end = 7200
    /// object.0.wrap = 1.0 6.5    # re-entry range for w
    /// object.0.lane = -1.5 1.5   # lateral range drawn on re-entry
    /// object.0.jitter = 0.2      # speed factor drawn from 1 +- jitter on re-entry
    /// outlier.rect = 88 100 264 216
    /// outlier.factor = 0.5
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Script(format!(
                    "line {}: expected `key = value`",
                    idx + 1
                )));
            };
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (idx + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Script(format!(
                    "line {}: duplicate key {key}",
                    idx + 1
                )));
            }
        }
        ScriptReader { entries }.build()
    }
}

struct ScriptReader {
    entries: BTreeMap<String, (usize, String)>,
}

impl ScriptReader {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|(line, v)| {
                v.parse::<f64>()
                    .map_err(|_| Error::Script(format!("line {line}: {key}: invalid number {v:?}")))
            })
            .transpose()
    }

    fn required(&mut self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::Script(format!("missing required key {key}")))
    }

    fn pair(&mut self, key: &str) -> Result<Option<(f64, f64)>> {
        self.take(key)
            .map(|(line, v)| {
                let nums: Vec<f64> = v
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Script(format!("line {line}: {key}: invalid numbers")))?;
                match nums[..] {
                    [a, b] => Ok((a, b)),
                    _ => Err(Error::Script(format!(
                        "line {line}: {key}: expected two numbers"
                    ))),
                }
            })
            .transpose()
    }

    fn dimension(&mut self, key: &str) -> Result<u32> {
        let (line, v) = self
            .take(key)
            .ok_or_else(|| Error::Script(format!("missing required key {key}")))?;
        v.parse()
            .map_err(|_| Error::Script(format!("line {line}: {key}: invalid dimension {v:?}")))
    }

    fn build(mut self) -> Result<SceneScript> {
        let width = self.dimension("camera.width")?;
        let height = self.dimension("camera.height")?;
        let f = self.number("camera.f")?;
        let fu = self.number("camera.fu")?.or(f);
        let fv = self.number("camera.fv")?.or(f);
        let (Some(fu), Some(fv)) = (fu, fv) else {
            return Err(Error::Script(
                "missing focal length (camera.f or camera.fu/fv)".into(),
            ));
        };
        let tilt = match (self.number("camera.tilt")?, self.number("camera.tilt_deg")?) {
            (Some(_), Some(_)) => {
                return Err(Error::Script(
                    "give camera.tilt or camera.tilt_deg, not both".into(),
                ))
            }
            (Some(t), None) => t,
            (None, Some(d)) => d.to_radians(),
            (None, None) => 0.0,
        };
        let mut camera = CameraModel::centred(
            fu,
            fv,
            self.required("camera.mount_height")?,
            tilt,
            width,
            height,
        );
        if let Some(cu) = self.number("camera.cu")? {
            camera.cu = cu;
        }
        if let Some(cv) = self.number("camera.cv")? {
            camera.cv = cv;
        }

        let duration = self.required("duration")?;
        let mut script = SceneScript::new(camera, duration, self.required("frame_rate")?);
        if let Some(n) = self.number("noise_std")? {
            script.noise_std = n;
        }
        if let Some(t) = self.number("threshold")? {
            script.threshold = t;
        }
        let depth = self.number("surface.depth")?;
        script.surface = match self.take("surface").map(|(_, v)| v).as_deref() {
            None | Some("ground") => SceneSurface::Ground,
            Some("fronto") => SceneSurface::FrontoParallel {
                depth: depth
                    .ok_or_else(|| Error::Script("fronto surface requires surface.depth".into()))?,
            },
            Some(other) => return Err(Error::Script(format!("unknown surface {other:?}"))),
        };

        let rect = self.pair_of_pairs("outlier.rect")?;
        let factor = self.number("outlier.factor")?;
        script.outlier = match (rect, factor) {
            (Some([u0, v0, u1, v1]), Some(factor)) => Some(OutlierRegion {
                u0,
                v0,
                u1,
                v1,
                factor,
            }),
            (None, None) => None,
            _ => {
                return Err(Error::Script(
                    "outlier.rect and outlier.factor must be given together".into(),
                ))
            }
        };

        let mut ids: Vec<u64> = self
            .entries
            .keys()
            .filter_map(|k| k.strip_prefix("object."))
            .filter_map(|rest| rest.split('.').next()?.parse().ok())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            let key = |field: &str| format!("object.{id}.{field}");
            let mut obj = WorldObject::new(
                self.required(&key("x"))?,
                self.required(&key("w"))?,
                self.number(&key("vx"))?.unwrap_or(0.0),
                self.number(&key("vw"))?.unwrap_or(0.0),
            );
            obj.start = self.number(&key("start"))?.unwrap_or(0.0);
            obj.end = self.number(&key("end"))?.unwrap_or(f64::INFINITY);
            obj.wrap = self.pair(&key("wrap"))?;
            obj.lane = self.pair(&key("lane"))?;
            obj.jitter = self.number(&key("jitter"))?.unwrap_or(0.0);
            script.objects.push(obj);
        }

        if let Some((key, (line, _))) = self.entries.iter().next() {
            return Err(Error::Script(format!("line {line}: unknown key {key}")));
        }
        script.validate()?;
        Ok(script)
    }

    fn pair_of_pairs(&mut self, key: &str) -> Result<Option<[f64; 4]>> {
        self.take(key)
            .map(|(line, v)| {
                let nums: Vec<f64> = v
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Script(format!("line {line}: {key}: invalid numbers")))?;
                <[f64; 4]>::try_from(nums).map_err(|_| {
                    Error::Script(format!("line {line}: {key}: expected four numbers"))
                })
            })
            .transpose()
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub flow: FlowSequence,
    /// Analytic scale gradient at the image centre row.
    pub reference_zeta: f64,
}

fn quantize(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

struct ObjectState {
    lateral: f64,
    along: f64,
    speed: f64,
}

/// Generates a sparse flow stream for `script`.
///
/// Every active object is projected at consecutive frame times; the image
/// displacement, plus Gaussian noise, becomes one motion vector at the
/// earlier projection. Positions and displacements are rounded to the
/// FLOWLOG resolution of 0.001 px before the bounds and threshold checks,
/// so the stream round-trips through the text format exactly.
pub fn simulate(script: &SceneScript, seed: u64) -> Result<Simulation> {
    script.validate()?;
    let cam = &script.camera;
    let dt = 1.0 / script.frame_rate;
    let frames = (script.duration * script.frame_rate).round() as u64;
    let noise = Normal::new(0.0, script.noise_std)
        .map_err(|e| Error::Script(format!("noise model: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (width, height) = (f64::from(cam.width), f64::from(cam.height));
    let script_err = |e: Error| Error::Script(e.to_string());

    let mut states: Vec<ObjectState> = script
        .objects
        .iter()
        .map(|o| ObjectState {
            lateral: o.lateral,
            along: o.along,
            speed: 1.0,
        })
        .collect();

    let mut flow = FlowSequence::empty(cam.width, cam.height, script.frame_rate)?;
    for t in 0..frames {
        let now = t as f64 * dt;
        let mut vectors = Vec::new();
        for (obj, state) in script.objects.iter().zip(states.iter_mut()) {
            if !obj.active_at(now) {
                continue;
            }
            let here = script.surface.to_camera(cam, state.lateral, state.along);
            let (u0, v0) = project_point(cam, here).map_err(script_err)?;
            let slow = match &script.outlier {
                Some(r) if r.contains(u0, v0) => r.factor,
                _ => 1.0,
            };
            let k = state.speed * slow * dt;
            let next_lateral = state.lateral + obj.v_lateral * k;
            let next_along = state.along + obj.v_along * k;
            let there = script.surface.to_camera(cam, next_lateral, next_along);
            let (u1, v1) = project_point(cam, there).map_err(script_err)?;

            let (mut du, mut dv) = (u1 - u0, v1 - v0);
            if script.noise_std > 0.0 {
                du += noise.sample(&mut rng);
                dv += noise.sample(&mut rng);
            }
            let mv = MotionVector::new(t, quantize(u0), quantize(v0), quantize(du), quantize(dv));
            let inside = mv.u >= 0.0 && mv.u < width && mv.v >= 0.0 && mv.v < height;
            if inside && mv.magnitude() > script.threshold {
                vectors.push(mv);
            }

            state.lateral = next_lateral;
            state.along = next_along;
            if let Some((lo, hi)) = obj.wrap {
                if !(lo..=hi).contains(&state.along) {
                    state.along = lo + (state.along - lo).rem_euclid(hi - lo);
                    if let Some((a, b)) = obj.lane {
                        state.lateral = if a < b { rng.gen_range(a..b) } else { a };
                    }
                    if obj.jitter > 0.0 {
                        state.speed = rng.gen_range(1.0 - obj.jitter..1.0 + obj.jitter);
                    }
                }
            }
        }
        flow.push_frame(t, vectors)?;
    }

    Ok(Simulation {
        flow,
        reference_zeta: script.reference_zeta()?,
    })
}

//! Points on the N-fold and infinite covers of the punctured plane, lifting
//! of straight translations, and winding numbers of polygonal loops.
//!
//! A point carries its radius and a *lifted* angle. On the infinite cover the
//! lifted angle is any real number; on the N-fold cover it is reduced into
//! `[0, 2πN)`. The sheet index is `floor(θ / 2π)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Clearance from the puncture, relative to the length scale of a path, below
/// which a path is rejected.
pub const DEFAULT_CLEARANCE_FACTOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoverSpec {
    Finite { n: u32 },
    Infinite,
}

impl CoverSpec {
    pub fn finite(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("a finite cover needs N ≥ 1"));
        }
        Ok(CoverSpec::Finite { n })
    }

    /// Number of sheets, `None` for the infinite cover.
    pub fn sheets(self) -> Option<u32> {
        match self {
            CoverSpec::Finite { n } => Some(n),
            CoverSpec::Infinite => None,
        }
    }

    /// Reduce an integer sheet offset modulo N on finite covers.
    pub fn reduce_sheet(self, sheet: i64) -> i64 {
        match self {
            CoverSpec::Finite { n } => sheet.rem_euclid(n as i64),
            CoverSpec::Infinite => sheet,
        }
    }
}

/// Coordinate axis of a translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub fn unit(self) -> (f64, f64) {
        match self {
            Axis::X1 => (1.0, 0.0),
            Axis::X2 => (0.0, 1.0),
        }
    }
}

impl TryFrom<u8> for Axis {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Axis::X1),
            2 => Ok(Axis::X2),
            _ => Err(format!("axis must be 1 or 2, got {v}")),
        }
    }
}

impl From<Axis> for u8 {
    fn from(a: Axis) -> u8 {
        match a {
            Axis::X1 => 1,
            Axis::X2 => 2,
        }
    }
}

/// A point of the cover, held as its planar projection plus a sheet index.
/// The lifted angle is the principal angle in `[0, 2π)` plus `2π · sheet`.
/// Keeping the projection explicit means whole-turn moves leave it
/// bit-identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct SurfacePoint {
    x: f64,
    y: f64,
    sheet: i64,
    cover: CoverSpec,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    r: f64,
    theta_lift: f64,
    cover: CoverSpec,
}

impl TryFrom<RawPoint> for SurfacePoint {
    type Error = Error;
    fn try_from(p: RawPoint) -> Result<Self> {
        SurfacePoint::new(p.r, p.theta_lift, p.cover)
    }
}

impl From<SurfacePoint> for RawPoint {
    fn from(p: SurfacePoint) -> Self {
        RawPoint {
            r: p.r(),
            theta_lift: p.theta_lift(),
            cover: p.cover,
        }
    }
}

fn principal_angle(x: f64, y: f64) -> f64 {
    let theta = y.atan2(x).rem_euclid(TAU);
    // rem_euclid rounds tiny negative angles up to 2π
    if theta >= TAU {
        0.0
    } else {
        theta
    }
}

impl SurfacePoint {
    pub fn new(r: f64, theta_lift: f64, cover: CoverSpec) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("radius must be positive and finite, got {r}")));
        }
        if !theta_lift.is_finite() {
            return Err(Error::domain("lifted angle must be finite"));
        }
        let (s, c) = theta_lift.sin_cos();
        Self::lifted(r * c, r * s, theta_lift, cover)
    }

    /// The point over planar `(x, y)` on the given sheet.
    pub fn from_planar(x: f64, y: f64, sheet: i64, cover: CoverSpec) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || (x == 0.0 && y == 0.0) {
            return Err(Error::domain(format!("({x}, {y}) is not a point of the punctured plane")));
        }
        if cover == (CoverSpec::Finite { n: 0 }) {
            return Err(Error::domain("a finite cover needs N ≥ 1"));
        }
        Ok(Self {
            x,
            y,
            sheet: cover.reduce_sheet(sheet),
            cover,
        })
    }

    /// The point over `(x, y)` whose lifted angle is closest to `theta`.
    fn lifted(x: f64, y: f64, theta: f64, cover: CoverSpec) -> Result<Self> {
        let sheet = ((theta - principal_angle(x, y)) / TAU).round() as i64;
        Self::from_planar(x, y, sheet, cover)
    }

    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn theta_lift(&self) -> f64 {
        principal_angle(self.x, self.y) + TAU * self.sheet as f64
    }

    pub fn cover(&self) -> CoverSpec {
        self.cover
    }

    /// Planar projection `(r cos θ, r sin θ)`.
    pub fn planar(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn sheet(&self) -> i64 {
        self.sheet
    }

    /// Same planar point, `k` sheets further on.
    pub fn shifted(&self, k: i64) -> Self {
        Self {
            sheet: self.cover.reduce_sheet(self.sheet + k),
            ..*self
        }
    }

    /// Equality on the surface, up to `tol` in each planar coordinate.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.cover != other.cover || (self.x - other.x).abs() > tol || (self.y - other.y).abs() > tol {
            return false;
        }
        // nearby projections may sit either side of the principal cut
        let turns = ((other.theta_lift() - self.theta_lift()) / TAU).round() as i64;
        self.cover.reduce_sheet(turns) == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftResult {
    pub endpoint: SurfacePoint,
    /// Continuous change of the angle along the path.
    pub delta_theta: f64,
    /// Closest approach of the planar path to the origin.
    pub min_clearance: f64,
}

/// Distance from the origin to the segment `[a, b]`.
pub fn segment_clearance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return a.0.hypot(a.1);
    }
    let s = (-(a.0 * dx + a.1 * dy) / len2).clamp(0.0, 1.0);
    (a.0 + s * dx).hypot(a.1 + s * dy)
}

/// Continuous angle change along the segment `[a, b]`, which must avoid the
/// origin. The segment is cut at the foot of the perpendicular from the
/// origin, so every piece subtends less than π/2 and its angle is the
/// principal value of `atan2`.
pub fn angle_sweep(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return 0.0;
    }
    let s = -(a.0 * dx + a.1 * dy) / len2;
    let step = |p: (f64, f64), q: (f64, f64)| {
        let cross = p.0 * q.1 - p.1 * q.0;
        let dot = p.0 * q.0 + p.1 * q.1;
        let ang = cross.atan2(dot);
        debug_assert!(ang.abs() <= FRAC_PI_2 + 1e-12);
        ang
    };
    if s > 0.0 && s < 1.0 {
        let foot = (a.0 + s * dx, a.1 + s * dy);
        step(a, foot) + step(foot, b)
    } else {
        step(a, b)
    }
}

/// Lift the planar segment from the projection of `p` to `target`.
pub fn lift_segment(p: &SurfacePoint, target: (f64, f64), clearance: f64) -> Result<LiftResult> {
    let start = p.planar();
    let min_clearance = segment_clearance(start, target);
    if !(min_clearance >= clearance) {
        return Err(Error::Puncture {
            min_clearance,
            clearance,
            context: String::new(),
        });
    }
    let delta_theta = angle_sweep(start, target);
    let endpoint = SurfacePoint::lifted(target.0, target.1, p.theta_lift() + delta_theta, p.cover)?;
    Ok(LiftResult {
        endpoint,
        delta_theta,
        min_clearance,
    })
}

/// Lift the translation `x ↦ x + t e_axis` starting at `p`.
pub fn lift_translation(p: &SurfacePoint, axis: Axis, t: f64, clearance: f64) -> Result<LiftResult> {
    if !(clearance > 0.0) {
        return Err(Error::domain("clearance must be positive"));
    }
    if t == 0.0 {
        return Ok(LiftResult {
            endpoint: *p,
            delta_theta: 0.0,
            min_clearance: p.r(),
        });
    }
    let (x, y) = p.planar();
    let (ux, uy) = axis.unit();
    lift_segment(p, (x + t * ux, y + t * uy), clearance)
}

/// Winding number of a closed polygon around the origin.
pub fn winding_of_loop(vertices: &[(f64, f64)], clearance: f64) -> Result<i64> {
    let turns = loop_turns(vertices, clearance)?;
    let w = turns.round();
    if (turns - w).abs() >= 1e-9 {
        return Err(Error::NonIntegerWinding { turns });
    }
    Ok(w as i64)
}

/// Total continuous angle change of a closed polygon, in turns.
pub fn loop_turns(vertices: &[(f64, f64)], clearance: f64) -> Result<f64> {
    let (Some(first), Some(last)) = (vertices.first(), vertices.last()) else {
        return Err(Error::OpenLoop);
    };
    if first != last {
        return Err(Error::OpenLoop);
    }
    let mut total = 0.0;
    for (i, pair) in vertices.windows(2).enumerate() {
        let min_clearance = segment_clearance(pair[0], pair[1]);
        if !(min_clearance >= clearance) {
            return Err(Error::Puncture {
                min_clearance,
                clearance,
                context: format!(" on edge {i}"),
            });
        }
        total += angle_sweep(pair[0], pair[1]);
    }
    Ok(total / TAU)
}

/// Reference angle continuation by many small steps; used to cross-check
/// [`angle_sweep`].
pub fn fine_angle_sweep(a: (f64, f64), b: (f64, f64), steps: usize) -> f64 {
    let mut total = 0.0;
    let mut prev = a.1.atan2(a.0);
    for k in 1..=steps {
        let s = k as f64 / steps as f64;
        let p = (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1));
        let cur = p.1.atan2(p.0);
        let mut d = cur - prev;
        if d > PI {
            d -= TAU;
        } else if d < -PI {
            d += TAU;
        }
        total += d;
        prev = cur;
    }
    total
}

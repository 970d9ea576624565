//! Reference paths built from line and circular-arc segments.
//!
//! A [`ReferencePath`] is an ordered, G1-continuous chain of segments. Every
//! evaluation is piecewise-exact: arcs are evaluated in closed form, never by
//! sampling. Curvature may jump at junctions, and the abscissa of a junction
//! belongs to the later segment.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, Vec2};

/// Position tolerance for G1 continuity checks (m).
pub const G1_POSITION_TOL: f64 = 1e-9;
/// Heading tolerance for G1 continuity checks (rad).
pub const G1_HEADING_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("abscissa {s} m outside [0, {total}] m")]
    OutOfRange { s: f64, total: f64 },
    #[error("path has no segments")]
    Empty,
    #[error("segment {index}: {reason}")]
    InvalidSegment { index: usize, reason: String },
    #[error(
        "G1 discontinuity at junction {junction} (between segments {junction} and {}): \
         position gap {position_gap:.3e} m, heading gap {heading_gap:.3e} rad",
        junction + 1
    )]
    Discontinuity {
        junction: usize,
        position_gap: f64,
        heading_gap: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Line,
    Arc,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentKind::Line => f.write_str("line"),
            SegmentKind::Arc => f.write_str("arc"),
        }
    }
}

/// Planar pose: position and heading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub position: Vec2,
    pub heading: f64,
}

/// One line or arc piece of a path. Curvature is signed, positive turns left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSegment {
    pub kind: SegmentKind,
    pub start: Vec2,
    pub start_heading: f64,
    pub length: f64,
    pub curvature: f64,
}

impl PathSegment {
    pub fn line(start: Vec2, start_heading: f64, length: f64) -> Self {
        Self {
            kind: SegmentKind::Line,
            start,
            start_heading,
            length,
            curvature: 0.0,
        }
    }

    pub fn arc(start: Vec2, start_heading: f64, length: f64, curvature: f64) -> Self {
        Self {
            kind: SegmentKind::Arc,
            start,
            start_heading,
            length,
            curvature,
        }
    }

    fn validate(&self, index: usize) -> Result<(), PathError> {
        let invalid = |reason: String| PathError::InvalidSegment { index, reason };
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(invalid(format!("length must be > 0, got {}", self.length)));
        }
        if !(self.start.x.is_finite() && self.start.y.is_finite() && self.start_heading.is_finite())
        {
            return Err(invalid("start pose must be finite".into()));
        }
        match self.kind {
            SegmentKind::Line if self.curvature != 0.0 => Err(invalid(format!(
                "line segment must have zero curvature, got {}",
                self.curvature
            ))),
            SegmentKind::Arc if !(self.curvature.is_finite() && self.curvature != 0.0) => Err(
                invalid(format!("arc segment needs non-zero curvature, got {}", self.curvature)),
            ),
            SegmentKind::Arc if self.curvature.abs() * self.length >= 2.0 * PI => {
                Err(invalid("arc sweeps a full turn or more".into()))
            }
            _ => Ok(()),
        }
    }

    /// Tangent heading at local abscissa `u`.
    pub fn heading_at(&self, u: f64) -> f64 {
        self.start_heading + self.curvature * u
    }

    /// Position at local abscissa `u` (not range-checked).
    pub fn position_at(&self, u: f64) -> Vec2 {
        match self.kind {
            SegmentKind::Line => self.start + Vec2::from_heading(self.start_heading) * u,
            SegmentKind::Arc => {
                let c = self.curvature;
                let h0 = self.start_heading;
                let h1 = h0 + c * u;
                self.start + Vec2::new((h1.sin() - h0.sin()) / c, (h0.cos() - h1.cos()) / c)
            }
        }
    }

    pub fn end_pose(&self) -> Pose2 {
        Pose2 {
            position: self.position_at(self.length),
            heading: self.heading_at(self.length),
        }
    }

    /// Arc center; `None` for lines.
    pub fn center(&self) -> Option<Vec2> {
        match self.kind {
            SegmentKind::Line => None,
            SegmentKind::Arc => Some(
                self.start + Vec2::from_heading(self.start_heading).perp() * (1.0 / self.curvature),
            ),
        }
    }

    /// Local abscissae that can minimize the distance to `p`: both endpoints
    /// plus the interior foot point when it exists.
    fn candidates(&self, p: Vec2, out: &mut Vec<(f64, bool)>) {
        out.push((0.0, false));
        out.push((self.length, false));
        match self.kind {
            SegmentKind::Line => {
                let u = (p - self.start).dot(Vec2::from_heading(self.start_heading));
                if u > 0.0 && u < self.length {
                    out.push((u, false));
                }
            }
            SegmentKind::Arc => {
                let center = self.center().expect("arc has a center");
                let radial = p - center;
                if radial.norm() < 1e-12 {
                    // every point of the circle is equidistant
                    out.push((0.5 * self.length, true));
                    return;
                }
                // the foot lies on the ray from the center through p
                let sign = self.curvature.signum();
                let tangent_heading = radial.y.atan2(radial.x) + sign * PI / 2.0;
                let sweep = ((tangent_heading - self.start_heading) * sign).rem_euclid(2.0 * PI);
                let u = sweep / self.curvature.abs();
                if u > 0.0 && u < self.length {
                    out.push((u, false));
                }
            }
        }
    }
}

/// Curvilinear coordinates of a pose relative to a path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrenetState {
    /// Curvilinear abscissa (m).
    pub s: f64,
    /// Signed lateral deviation, positive left of the tangent (m).
    pub y: f64,
    /// Heading minus tangent heading, wrapped to `(-π, π]` (rad).
    pub theta_tilde: f64,
}

/// Result of projecting a world pose onto a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub frenet: FrenetState,
    /// Euclidean distance to the closest path point.
    pub distance: f64,
    /// More than one distinct abscissa attains the minimum; the smallest wins.
    pub ambiguous: bool,
    /// The foot point fell beyond a path end and `s` was clamped.
    pub clamped: bool,
}

/// A point evaluated on the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub position: Vec2,
    pub heading: f64,
    pub curvature: f64,
}

/// An immutable, G1-continuous chain of line and arc segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    segments: Vec<PathSegment>,
    /// Start abscissa of each segment, followed by the total length.
    cumulative: Vec<f64>,
}

impl ReferencePath {
    /// Validate segment invariants and G1 continuity between neighbours.
    pub fn from_segments(segments: Vec<PathSegment>) -> Result<Self, PathError> {
        if segments.is_empty() {
            return Err(PathError::Empty);
        }
        for (i, seg) in segments.iter().enumerate() {
            seg.validate(i)?;
        }
        for (i, pair) in segments.windows(2).enumerate() {
            let end = pair[0].end_pose();
            let position_gap = end.position.distance(pair[1].start);
            let heading_gap = wrap_angle(end.heading - pair[1].start_heading).abs();
            if position_gap > G1_POSITION_TOL || heading_gap > G1_HEADING_TOL {
                return Err(PathError::Discontinuity {
                    junction: i,
                    position_gap,
                    heading_gap,
                });
            }
        }
        let mut cumulative = Vec::with_capacity(segments.len() + 1);
        let mut acc = 0.0;
        cumulative.push(acc);
        for seg in &segments {
            acc += seg.length;
            cumulative.push(acc);
        }
        Ok(Self {
            segments,
            cumulative,
        })
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    /// Abscissae of the interior junctions, in order.
    pub fn junctions(&self) -> &[f64] {
        &self.cumulative[1..self.segments.len()]
    }

    /// Junction abscissae where the curvature actually changes.
    pub fn curvature_discontinuities(&self) -> Vec<f64> {
        self.segments
            .windows(2)
            .zip(self.junctions())
            .filter(|(pair, _)| pair[0].curvature != pair[1].curvature)
            .map(|(_, &s)| s)
            .collect()
    }

    /// Start abscissa of segment `index`.
    pub fn segment_start(&self, index: usize) -> f64 {
        self.cumulative[index]
    }

    /// Index of the segment containing `s`; junctions go to the later segment.
    pub fn segment_index(&self, s: f64) -> Result<usize, PathError> {
        let total = self.total_length();
        if !(0.0..=total).contains(&s) {
            return Err(PathError::OutOfRange { s, total });
        }
        // first segment whose start is strictly greater than s, minus one
        let idx = self.cumulative[1..self.segments.len()].partition_point(|&start| start <= s);
        Ok(idx)
    }

    pub fn point_at(&self, s: f64) -> Result<PathPoint, PathError> {
        let i = self.segment_index(s)?;
        let seg = &self.segments[i];
        let u = s - self.cumulative[i];
        Ok(PathPoint {
            position: seg.position_at(u),
            heading: seg.heading_at(u),
            curvature: seg.curvature,
        })
    }

    pub fn curvature_at(&self, s: f64) -> Result<f64, PathError> {
        Ok(self.segments[self.segment_index(s)?].curvature)
    }

    /// Curvature at `s` with `s` clamped into the path domain. Used for
    /// look-ahead queries that may run past the end.
    pub fn curvature_at_clamped(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total_length());
        self.segments[self.segment_index(s).expect("clamped")].curvature
    }

    /// Project a world pose onto the path.
    ///
    /// `s` minimizes the distance to `position`; ties go to the smallest `s`
    /// and set `ambiguous`. `y` is the signed offset along the path normal at
    /// `s`, which for a foot beyond either end is the offset from the
    /// extended end tangent.
    pub fn project(&self, position: Vec2, heading: f64) -> Projection {
        let mut candidates = Vec::with_capacity(4);
        let mut best_s = 0.0;
        let mut best_d = f64::INFINITY;
        let mut degenerate = false;
        // (s, distance) of every candidate, for the tie check
        let mut all: Vec<(f64, f64)> = Vec::with_capacity(4 * self.segments.len());
        for (i, seg) in self.segments.iter().enumerate() {
            candidates.clear();
            seg.candidates(position, &mut candidates);
            for &(u, deg) in &candidates {
                let d = seg.position_at(u).distance(position);
                let s = self.cumulative[i] + u;
                degenerate |= deg;
                all.push((s, d));
                if d < best_d || (d == best_d && s < best_s) {
                    best_d = d;
                    best_s = s;
                }
            }
        }
        let tol = 1e-12 * (1.0 + best_d);
        let ambiguous = degenerate
            || all
                .iter()
                .any(|&(s, d)| (d - best_d).abs() <= tol && (s - best_s).abs() > 1e-9);
        // settle exact ties deterministically on the smallest abscissa
        if let Some(&(s, _)) = all
            .iter()
            .filter(|&&(_, d)| (d - best_d).abs() <= tol)
            .min_by(|a, b| a.0.total_cmp(&b.0))
        {
            best_s = s;
        }

        let total = self.total_length();
        let best_s = best_s.clamp(0.0, total);
        let pt = self.point_at(best_s).expect("within range");
        let tangent = Vec2::from_heading(pt.heading);
        let offset = position - pt.position;
        let along = offset.dot(tangent);
        let clamped = (best_s == 0.0 && along < -1e-12) || (best_s == total && along > 1e-12);
        Projection {
            frenet: FrenetState {
                s: best_s,
                y: offset.dot(tangent.perp()),
                theta_tilde: wrap_angle(heading - pt.heading),
            },
            distance: best_d,
            ambiguous,
            clamped,
        }
    }

    /// World pose of the Frenet state `(s, y, θ̃)`.
    pub fn frenet_to_world(&self, frenet: &FrenetState) -> Result<Pose2, PathError> {
        let pt = self.point_at(frenet.s)?;
        let normal = Vec2::from_heading(pt.heading).perp();
        Ok(Pose2 {
            position: pt.position + normal * frenet.y,
            heading: wrap_angle(pt.heading + frenet.theta_tilde),
        })
    }

    /// Smallest arc radius on the path, infinite when the path is straight.
    pub fn min_radius(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Arc)
            .map(|s| 1.0 / s.curvature.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Geometry-free description of one segment; placement comes from chaining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDescriptor {
    pub kind: SegmentKind,
    pub length_m: f64,
    #[serde(default)]
    pub curvature_per_m: f64,
    /// Explicit start pose. When absent the segment starts where the
    /// previous one ends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StartPose>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPose {
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
}

/// Ordered segment descriptors plus the initial pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    #[serde(default)]
    pub start: StartPose,
    #[serde(rename = "segment")]
    pub segments: Vec<SegmentDescriptor>,
}

impl PathSpec {
    fn chain(start: StartPose, pieces: &[(SegmentKind, f64, f64)]) -> Self {
        Self {
            start,
            segments: pieces
                .iter()
                .map(|&(kind, length_m, curvature_per_m)| SegmentDescriptor {
                    kind,
                    length_m,
                    curvature_per_m,
                    start: None,
                })
                .collect(),
        }
    }

    /// Straight run, then a left arc, then a right arc.
    ///
    /// 20 m line, R = 10 m left quarter turn, R = 8 m right quarter turn.
    pub fn exp1() -> Self {
        use SegmentKind::*;
        Self::chain(
            StartPose::default(),
            &[
                (Line, 20.0, 0.0),
                (Arc, 10.0 * PI / 2.0, 0.1),
                (Arc, 8.0 * PI / 2.0, -1.0 / 8.0),
            ],
        )
    }

    /// Alternating straights and arcs with straight-to-curve,
    /// curve-to-straight and curve-to-curve transitions.
    pub fn exp2() -> Self {
        use SegmentKind::*;
        Self::chain(
            StartPose::default(),
            &[
                (Line, 10.0, 0.0),
                (Arc, 10.0 * PI / 2.0, 0.1),
                (Line, 10.0, 0.0),
                (Arc, 8.0 * PI / 2.0, -1.0 / 8.0),
                (Arc, 12.0 * PI / 3.0, 1.0 / 12.0),
                (Line, 10.0, 0.0),
            ],
        )
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "exp1" => Some(Self::exp1()),
            "exp2" => Some(Self::exp2()),
            _ => None,
        }
    }
}

/// Chain descriptors into a validated path.
pub fn build_experiment_path(spec: &PathSpec) -> Result<ReferencePath, PathError> {
    let mut pose = Pose2 {
        position: Vec2::new(spec.start.x_m, spec.start.y_m),
        heading: spec.start.heading_rad,
    };
    let mut segments = Vec::with_capacity(spec.segments.len());
    for d in &spec.segments {
        if let Some(explicit) = d.start {
            pose = Pose2 {
                position: Vec2::new(explicit.x_m, explicit.y_m),
                heading: explicit.heading_rad,
            };
        }
        let seg = PathSegment {
            kind: d.kind,
            start: pose.position,
            start_heading: pose.heading,
            length: d.length_m,
            curvature: d.curvature_per_m,
        };
        pose = seg.end_pose();
        segments.push(seg);
    }
    ReferencePath::from_segments(segments)
}

//! Discretized closed boundaries in the plane.
//!
//! A [`BoundaryMesh`] is a closed, anticlockwise chain of elements. Every
//! element is parametrized by a local coordinate `t` in `[-1, 1]`, with
//! `t = -1` at its first vertex and `t = +1` at its second.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Node count used to measure curved elements.
pub const ARC_LENGTH_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotation by -90 degrees; the outward normal of an anticlockwise tangent.
    pub fn rotate_cw(self) -> Point2 {
        Point2::new(self.y, -self.x)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Star-shaped polar curve `r(theta) = 1 + amplitude * cos(lobes * theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarCurve {
    pub amplitude: f64,
    pub lobes: u32,
}

impl StarCurve {
    /// The four-lobed flower `r = 1 + 0.25 cos(4 theta)`.
    pub const FLOWER: StarCurve = StarCurve {
        amplitude: 0.25,
        lobes: 4,
    };

    pub fn radius(&self, theta: f64) -> f64 {
        1.0 + self.amplitude * (self.lobes as f64 * theta).cos()
    }

    pub fn radius_derivative(&self, theta: f64) -> f64 {
        let m = self.lobes as f64;
        -self.amplitude * m * (m * theta).sin()
    }

    pub fn point(&self, theta: f64) -> Point2 {
        let r = self.radius(theta);
        Point2::new(r * theta.cos(), r * theta.sin())
    }

    /// dq/dtheta.
    pub fn tangent(&self, theta: f64) -> Point2 {
        let r = self.radius(theta);
        let dr = self.radius_derivative(theta);
        let (s, c) = theta.sin_cos();
        Point2::new(dr * c - r * s, dr * s + r * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementShape {
    Straight,
    Curved {
        theta_start: f64,
        theta_end: f64,
        curve: StarCurve,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub index: usize,
    pub start: Point2,
    pub end: Point2,
    pub shape: ElementShape,
    pub length: f64,
}

impl Element {
    fn straight(index: usize, start: Point2, end: Point2) -> Self {
        Self {
            index,
            start,
            end,
            shape: ElementShape::Straight,
            length: (end - start).norm(),
        }
    }

    fn curved(index: usize, theta_start: f64, theta_end: f64, curve: StarCurve) -> Self {
        let shape = ElementShape::Curved {
            theta_start,
            theta_end,
            curve,
        };
        let mut element = Self {
            index,
            start: curve.point(theta_start),
            end: curve.point(theta_end),
            shape,
            length: 0.0,
        };
        let rule = gauss_legendre(ARC_LENGTH_NODES).expect("fixed arc-length rule");
        element.length = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| element.jacobian_at(t) * w)
            .sum();
        element
    }

    /// Point at local coordinate `t`; `t` must lie in `[-1, 1]`.
    pub fn point(&self, t: f64) -> Result<Point2> {
        check_local(t)?;
        Ok(self.point_at(t))
    }

    /// Unit outward normal at local coordinate `t`.
    pub fn outward_normal(&self, t: f64) -> Result<Point2> {
        check_local(t)?;
        let tangent = self.tangent_at(t);
        let len = tangent.norm();
        if !(len > 0.0) {
            return Err(Error::ZeroTangent {
                element: self.index,
            });
        }
        Ok(tangent.rotate_cw() * (1.0 / len))
    }

    /// |dq/dt|, the arc-length density in the local coordinate.
    pub fn jacobian(&self, t: f64) -> Result<f64> {
        check_local(t)?;
        Ok(self.jacobian_at(t))
    }

    pub(crate) fn point_at(&self, t: f64) -> Point2 {
        match self.shape {
            ElementShape::Straight => {
                (self.end + self.start) * 0.5 + (self.end - self.start) * (0.5 * t)
            }
            ElementShape::Curved {
                theta_start,
                theta_end,
                curve,
            } => curve.point(theta_of(theta_start, theta_end, t)),
        }
    }

    /// dq/dt.
    pub(crate) fn tangent_at(&self, t: f64) -> Point2 {
        match self.shape {
            ElementShape::Straight => (self.end - self.start) * 0.5,
            ElementShape::Curved {
                theta_start,
                theta_end,
                curve,
            } => {
                let half = 0.5 * (theta_end - theta_start);
                curve.tangent(theta_of(theta_start, theta_end, t)) * half
            }
        }
    }

    pub(crate) fn jacobian_at(&self, t: f64) -> f64 {
        match self.shape {
            // exact half-length, so straight weights sum to the chord length
            ElementShape::Straight => 0.5 * self.length,
            ElementShape::Curved { .. } => self.tangent_at(t).norm(),
        }
    }

    pub(crate) fn normal_at(&self, t: f64) -> Point2 {
        let tangent = self.tangent_at(t);
        tangent.rotate_cw() * (1.0 / tangent.norm())
    }
}

fn theta_of(theta_start: f64, theta_end: f64, t: f64) -> f64 {
    0.5 * (theta_start + theta_end) + 0.5 * (theta_end - theta_start) * t
}

fn check_local(t: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "t",
            value: t,
            expected: "[-1, 1]",
        })
    }
}

/// Where a point sits relative to a closed boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLocation {
    Inside,
    OnBoundary,
    Outside,
}

/// Closed anticlockwise boundary. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMesh {
    vertices: Vec<Point2>,
    elements: Vec<Element>,
}

impl BoundaryMesh {
    /// The square `[-half_width, half_width]^2` split into `count` equal
    /// straight elements; corners are element endpoints.
    pub fn square(count: usize, half_width: f64) -> Result<Self> {
        if count < 4 || count % 4 != 0 {
            return Err(Error::InvalidElementCount {
                count,
                reason: "square meshes need a positive multiple of 4 elements",
            });
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::OutOfRange {
                name: "half_width",
                value: half_width,
                expected: "a positive finite number",
            });
        }
        let a = half_width;
        let corners = [
            Point2::new(-a, -a),
            Point2::new(a, -a),
            Point2::new(a, a),
            Point2::new(-a, a),
        ];
        let per_side = count / 4;
        let mut vertices = Vec::with_capacity(count + 1);
        for side in 0..4 {
            let from = corners[side];
            let to = corners[(side + 1) % 4];
            for k in 0..per_side {
                let f = k as f64 / per_side as f64;
                vertices.push(from + (to - from) * f);
            }
        }
        vertices.push(vertices[0]);
        let elements = (0..count)
            .map(|j| Element::straight(j, vertices[j], vertices[j + 1]))
            .collect();
        Ok(Self { vertices, elements })
    }

    /// The flower `r <= 1 + 0.25 cos(4 theta)` with `count` curved elements
    /// on a uniform partition of theta.
    pub fn flower(count: usize) -> Result<Self> {
        if count < 8 {
            return Err(Error::InvalidElementCount {
                count,
                reason: "flower meshes need at least 8 elements",
            });
        }
        Self::star(count, StarCurve::FLOWER)
    }

    /// Any star-shaped polar curve with `count` curved elements.
    pub fn star(count: usize, curve: StarCurve) -> Result<Self> {
        if count < 3 {
            return Err(Error::InvalidElementCount {
                count,
                reason: "a closed curved mesh needs at least 3 elements",
            });
        }
        if !(curve.amplitude.abs() < 1.0) {
            return Err(Error::OutOfRange {
                name: "amplitude",
                value: curve.amplitude,
                expected: "|amplitude| < 1",
            });
        }
        let step = 2.0 * PI / count as f64;
        let elements: Vec<Element> = (0..count)
            .map(|j| Element::curved(j, step * j as f64, step * (j + 1) as f64, curve))
            .collect();
        let mut vertices: Vec<Point2> = elements.iter().map(|e| e.start).collect();
        vertices.push(vertices[0]);
        Ok(Self { vertices, elements })
    }

    /// N+1 vertices; the last repeats the first.
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.elements.iter().map(|e| e.length).sum()
    }

    /// Shoelace area of the vertex polygon; positive when anticlockwise.
    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .vertices
            .windows(2)
            .map(|w| w[0].x * w[1].y - w[1].x * w[0].y)
            .sum::<f64>()
    }

    /// Winding-number classification against the boundary, with points
    /// closer than `tolerance` to it reported as on the boundary.
    pub fn locate(&self, p: Point2, tolerance: f64) -> PointLocation {
        let polyline = self.polyline(32);
        let mut min_dist = f64::INFINITY;
        let mut winding = 0.0;
        for w in polyline.windows(2) {
            min_dist = min_dist.min(segment_distance(p, w[0], w[1]));
            let a = w[0] - p;
            let b = w[1] - p;
            winding += (a.x * b.y - a.y * b.x).atan2(a.dot(b));
        }
        if min_dist <= tolerance {
            PointLocation::OnBoundary
        } else if (winding / (2.0 * PI)).round() != 0.0 {
            PointLocation::Inside
        } else {
            PointLocation::Outside
        }
    }

    fn polyline(&self, samples_per_curved: usize) -> Vec<Point2> {
        let mut out = Vec::new();
        for e in &self.elements {
            match e.shape {
                ElementShape::Straight => out.push(e.start),
                ElementShape::Curved { .. } => {
                    for k in 0..samples_per_curved {
                        let t = -1.0 + 2.0 * k as f64 / samples_per_curved as f64;
                        out.push(e.point_at(t));
                    }
                }
            }
        }
        out.push(self.vertices[0]);
        out
    }
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let f = if len2 > 0.0 {
        ((p - a).dot(d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(a + d * f)
}

/// Scales every point toward the origin by `factor`.
pub fn interior_points(sources: &[Point2], factor: f64) -> Vec<Point2> {
    sources.iter().map(|&p| p * factor).collect()
}

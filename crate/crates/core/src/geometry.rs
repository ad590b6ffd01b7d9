//! Distances and segment crossing predicates.

use crate::model::{NodeId, Point};

/// Relative tolerance on the sine of the angle below which three points
/// are treated as collinear.
const COLLINEAR_EPS: f64 = 1e-9;

pub fn distance(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// A straight cable between two nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub node_a: NodeId,
    pub node_b: NodeId,
}

impl Segment {
    pub fn new(a: Point, b: Point, node_a: NodeId, node_b: NodeId) -> Self {
        Segment { a, b, node_a, node_b }
    }

    fn shares_node(&self, other: &Segment) -> bool {
        self.node_a == other.node_a
            || self.node_a == other.node_b
            || self.node_b == other.node_a
            || self.node_b == other.node_b
    }

    fn bbox_disjoint(&self, other: &Segment) -> bool {
        self.a.x.max(self.b.x) < other.a.x.min(other.b.x)
            || other.a.x.max(other.b.x) < self.a.x.min(self.b.x)
            || self.a.y.max(self.b.y) < other.a.y.min(other.b.y)
            || other.a.y.max(other.b.y) < self.a.y.min(self.b.y)
    }
}

/// Sign of the turn `p -> q -> r`: +1 left, -1 right, 0 collinear within
/// the relative tolerance.
fn orientation(p: Point, q: Point, r: Point) -> i8 {
    let (ux, uy) = (q.x - p.x, q.y - p.y);
    let (vx, vy) = (r.x - p.x, r.y - p.y);
    let cross = ux * vy - uy * vx;
    let scale = ux.hypot(uy) * vx.hypot(vy);
    if cross.abs() <= COLLINEAR_EPS * scale {
        0
    } else if cross > 0.0 {
        1
    } else {
        -1
    }
}

/// `r` is known collinear with `p q`; test whether it lies within their box.
fn within_span(p: Point, q: Point, r: Point) -> bool {
    r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
}

/// Two cables conflict when their closed segments share any point, unless
/// they are incident to a common node. A segment ending on the interior of
/// another (T-junction) and collinear overlaps both count as crossings.
pub fn segments_cross(s: &Segment, t: &Segment) -> bool {
    if s.shares_node(t) || s.bbox_disjoint(t) {
        return false;
    }
    let o1 = orientation(s.a, s.b, t.a);
    let o2 = orientation(s.a, s.b, t.b);
    let o3 = orientation(t.a, t.b, s.a);
    let o4 = orientation(t.a, t.b, s.b);

    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && within_span(s.a, s.b, t.a))
        || (o2 == 0 && within_span(s.a, s.b, t.b))
        || (o3 == 0 && within_span(t.a, t.b, s.a))
        || (o4 == 0 && within_span(t.a, t.b, s.b))
}

/// Every crossing pair `(i, j)` with `i < j`, in lexicographic order.
pub fn all_crossings(segments: &[Segment]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            if segments_cross(&segments[i], &segments[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

//! Planar geometry in a projected metric frame: polygons, survey regions,
//! containment and rectangle clipping.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{hypot, sqrt};

/// Coordinates closer than this (meters) are treated as touching.
pub const EPS_M: f64 = 1e-6;

/// A point in a projected planar frame; `x` is east and `y` north, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        hypot(self.x - other.x, self.y - other.y)
    }

    pub fn lerp(&self, other: &PlanarPoint, t: f64) -> PlanarPoint {
        PlanarPoint::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

fn cross(o: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&a.lerp(&b, t))
}

/// Parameter `t` along `p`-`q` at which it meets segment `a`-`b`, if the two
/// segments intersect. Collinear overlaps report both overlap ends.
fn segment_hits(
    p: PlanarPoint,
    q: PlanarPoint,
    a: PlanarPoint,
    b: PlanarPoint,
    out: &mut Vec<f64>,
) {
    let r = (q.x - p.x, q.y - p.y);
    let s = (b.x - a.x, b.y - a.y);
    let denom = r.0 * s.1 - r.1 * s.0;
    let qp = (a.x - p.x, a.y - p.y);
    let rlen2 = r.0 * r.0 + r.1 * r.1;
    if rlen2 == 0.0 {
        return;
    }
    let scale = sqrt(rlen2) * hypot(s.0, s.1);
    if denom.abs() <= 1e-12 * scale {
        // Parallel: only collinear overlaps matter.
        if (qp.0 * r.1 - qp.1 * r.0).abs() > EPS_M * sqrt(rlen2) {
            return;
        }
        for e in [a, b] {
            let t = ((e.x - p.x) * r.0 + (e.y - p.y) * r.1) / rlen2;
            if (0.0..=1.0).contains(&t) {
                out.push(t);
            }
        }
        return;
    }
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    let tol = 1e-12;
    if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
        out.push(t.clamp(0.0, 1.0));
    }
}

fn segments_properly_cross(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint, d: PlanarPoint) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// A simple polygon stored as an open ring (the closing vertex is implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<PlanarPoint>,
}

impl Polygon {
    /// Builds a polygon from a ring, dropping a repeated closing vertex.
    pub fn new(mut vertices: Vec<PlanarPoint>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::Geometry(format!(
                "polygon ring needs at least 3 distinct vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::Geometry(format!("non-finite vertex {:?}", p)));
        }
        let poly = Self { vertices };
        if poly.area() <= 0.0 {
            return Err(Error::Geometry("polygon has zero area".into()));
        }
        if poly.self_intersects() {
            return Err(Error::Geometry("polygon ring self-intersects".into()));
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(alloc::vec![
            PlanarPoint::new(x0, y0),
            PlanarPoint::new(x1, y0),
            PlanarPoint::new(x1, y1),
            PlanarPoint::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[PlanarPoint] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (PlanarPoint, PlanarPoint)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    /// Area in m².
    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn bbox(&self) -> (PlanarPoint, PlanarPoint) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices[1..] {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    fn self_intersects(&self) -> bool {
        let n = self.vertices.len();
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                // Skip edges that share a vertex.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if segments_properly_cross(a, b, c, d)
                    || point_segment_distance(a, c, d) < EPS_M
                    || point_segment_distance(b, c, d) < EPS_M
                {
                    return true;
                }
            }
        }
        false
    }

    pub fn on_boundary(&self, p: PlanarPoint) -> bool {
        self.edges()
            .any(|(a, b)| point_segment_distance(p, a, b) <= EPS_M)
    }

    /// Even-odd test of the open interior (boundary points are not handled).
    fn interior_crossing(&self, p: PlanarPoint) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Closed containment: boundary points count as inside.
    pub fn contains(&self, p: PlanarPoint) -> bool {
        self.on_boundary(p) || self.interior_crossing(p)
    }

    /// Strict containment: boundary points count as outside.
    pub fn contains_strict(&self, p: PlanarPoint) -> bool {
        !self.on_boundary(p) && self.interior_crossing(p)
    }

    /// Area of the intersection with a convex polygon (counter-clockwise or
    /// clockwise), by Sutherland–Hodgman clipping of this ring.
    pub fn clipped_area(&self, convex: &[PlanarPoint]) -> f64 {
        let orient = shoelace(convex).signum();
        let mut out: Vec<PlanarPoint> = self.vertices.clone();
        let m = convex.len();
        for i in 0..m {
            if out.is_empty() {
                break;
            }
            let a = convex[i];
            let b = convex[(i + 1) % m];
            let inside = |p: PlanarPoint| orient * cross(a, b, p) >= 0.0;
            let input = core::mem::take(&mut out);
            let k = input.len();
            for j in 0..k {
                let cur = input[j];
                let prev = input[(j + k - 1) % k];
                let (cin, pin) = (inside(cur), inside(prev));
                if cin != pin {
                    let dp = cross(a, b, prev);
                    let dc = cross(a, b, cur);
                    out.push(prev.lerp(&cur, dp / (dp - dc)));
                }
                if cin {
                    out.push(cur);
                }
            }
        }
        if out.len() < 3 {
            0.0
        } else {
            shoelace(&out).abs()
        }
    }
}

fn shoelace(ring: &[PlanarPoint]) -> f64 {
    let n = ring.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

/// The surveyed area: an outer boundary minus holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRegion {
    boundary: Polygon,
    holes: Vec<Polygon>,
}

impl SurveyRegion {
    pub fn new(boundary: Polygon, holes: Vec<Polygon>) -> Result<Self> {
        for (k, hole) in holes.iter().enumerate() {
            let inside = hole.vertices().iter().all(|&v| boundary.contains_strict(v));
            let crosses = hole.edges().any(|(a, b)| {
                boundary
                    .edges()
                    .any(|(c, d)| segments_properly_cross(a, b, c, d))
            });
            if !inside || crosses {
                return Err(Error::Geometry(format!(
                    "hole {k} is not strictly inside the boundary"
                )));
            }
        }
        let region = Self { boundary, holes };
        if region.area_m2() <= 0.0 {
            return Err(Error::Geometry("region has no area".into()));
        }
        Ok(region)
    }

    pub fn from_polygon(boundary: Polygon) -> Self {
        Self {
            boundary,
            holes: Vec::new(),
        }
    }

    /// Axis-aligned rectangular region with its lower-left corner at `origin`.
    pub fn rectangle(origin: PlanarPoint, width_m: f64, height_m: f64) -> Result<Self> {
        Ok(Self::from_polygon(Polygon::rectangle(
            origin.x,
            origin.y,
            origin.x + width_m,
            origin.y + height_m,
        )?))
    }

    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn holes(&self) -> &[Polygon] {
        &self.holes
    }

    pub fn area_m2(&self) -> f64 {
        self.boundary.area() - self.holes.iter().map(Polygon::area).sum::<f64>()
    }

    pub fn area_km2(&self) -> f64 {
        self.area_m2() / 1e6
    }

    pub fn bbox(&self) -> (PlanarPoint, PlanarPoint) {
        self.boundary.bbox()
    }

    /// Closed containment; hole boundaries belong to the region.
    pub fn contains(&self, p: PlanarPoint) -> bool {
        self.boundary.contains(p) && !self.holes.iter().any(|h| h.contains_strict(p))
    }

    fn all_edges(&self) -> impl Iterator<Item = (PlanarPoint, PlanarPoint)> + '_ {
        self.boundary
            .edges()
            .chain(self.holes.iter().flat_map(|h| h.edges()))
    }

    /// Whether the whole segment `a`-`b` lies in the (closed) region.
    ///
    /// The segment is split at every contact with a boundary edge and the
    /// midpoint of each piece is tested, which also catches exits through
    /// reflex vertices.
    pub fn contains_segment(&self, a: PlanarPoint, b: PlanarPoint) -> bool {
        if !self.contains(a) || !self.contains(b) {
            return false;
        }
        let mut cuts = alloc::vec![0.0, 1.0];
        for (c, d) in self.all_edges() {
            segment_hits(a, b, c, d, &mut cuts);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .filter(|w| w[1] - w[0] > 1e-12)
            .all(|w| self.contains(a.lerp(&b, 0.5 * (w[0] + w[1]))))
    }

    /// Area (m²) of the intersection between the region and a convex polygon.
    pub fn clipped_area(&self, convex: &[PlanarPoint]) -> f64 {
        let outer = self.boundary.clipped_area(convex);
        let holes: f64 = self.holes.iter().map(|h| h.clipped_area(convex)).sum();
        (outer - holes).max(0.0)
    }

    /// First crossing of the step `p`→`q` with the region's edges, as the
    /// parameter along the step and the crossed edge.
    pub fn first_crossing(
        &self,
        p: PlanarPoint,
        q: PlanarPoint,
    ) -> Option<(f64, PlanarPoint, PlanarPoint)> {
        let mut best: Option<(f64, PlanarPoint, PlanarPoint)> = None;
        let mut hits = Vec::new();
        for (c, d) in self.all_edges() {
            hits.clear();
            segment_hits(p, q, c, d, &mut hits);
            for &t in &hits {
                if t > 1e-12 && best.is_none_or(|(bt, _, _)| t < bt) {
                    best = Some((t, c, d));
                }
            }
        }
        best
    }
}

/// Corners of the rectangle of width `width` centred on segment `a`-`b`.
pub fn swath_rectangle(a: PlanarPoint, b: PlanarPoint, width: f64) -> [PlanarPoint; 4] {
    let len = a.distance(&b);
    let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
    let (nx, ny) = (-uy * width * 0.5, ux * width * 0.5);
    [
        PlanarPoint::new(a.x + nx, a.y + ny),
        PlanarPoint::new(a.x - nx, a.y - ny),
        PlanarPoint::new(b.x - nx, b.y - ny),
        PlanarPoint::new(b.x + nx, b.y + ny),
    ]
}

/// Whether `p` lies in the closed rectangle of width `width` centred on `a`-`b`.
pub fn in_swath(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint, width: f64) -> bool {
    let len = a.distance(&b);
    let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
    let (dx, dy) = (p.x - a.x, p.y - a.y);
    let along = dx * ux + dy * uy;
    let across = (-dx * uy + dy * ux).abs();
    (-EPS_M..=len + EPS_M).contains(&along) && across <= width * 0.5 + EPS_M
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn square(side: f64) -> SurveyRegion {
        SurveyRegion::rectangle(PlanarPoint::new(0.0, 0.0), side, side).unwrap()
    }

    fn l_shape() -> SurveyRegion {
        let ring = vec![
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(1050.0, 0.0),
            PlanarPoint::new(1050.0, 525.0),
            PlanarPoint::new(525.0, 525.0),
            PlanarPoint::new(525.0, 1050.0),
            PlanarPoint::new(0.0, 1050.0),
        ];
        SurveyRegion::from_polygon(Polygon::new(ring).unwrap())
    }

    #[test]
    fn area_and_orientation() {
        let sq = square(1000.0);
        assert!((sq.area_km2() - 1.0).abs() < 1e-12);
        let l = l_shape();
        assert!((l.area_m2() - 0.75 * 1050.0 * 1050.0).abs() < 1e-6);
    }

    #[test]
    fn closing_vertex_is_dropped() {
        let p = Polygon::new(vec![
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(1.0, 0.0),
            PlanarPoint::new(1.0, 1.0),
            PlanarPoint::new(0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(p.vertices().len(), 3);
    }

    #[test]
    fn rejects_bow_tie() {
        let err = Polygon::new(vec![
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(1.0, 1.0),
            PlanarPoint::new(1.0, 0.0),
            PlanarPoint::new(0.0, 1.0),
        ]);
        assert!(matches!(err, Err(Error::Geometry(_))));
    }

    #[test]
    fn boundary_counts_as_inside() {
        let sq = square(10.0);
        assert!(sq.contains(PlanarPoint::new(0.0, 5.0)));
        assert!(sq.contains(PlanarPoint::new(10.0, 10.0)));
        assert!(!sq.contains(PlanarPoint::new(10.001, 5.0)));
    }

    #[test]
    fn segment_through_notch_is_rejected() {
        let l = l_shape();
        // Both ends inside, but the segment passes through the removed quadrant.
        assert!(!l.contains_segment(
            PlanarPoint::new(1000.0, 100.0),
            PlanarPoint::new(100.0, 1000.0)
        ));
        // Runs along the reflex corner's edges.
        assert!(l.contains_segment(
            PlanarPoint::new(525.0, 525.0),
            PlanarPoint::new(525.0, 1050.0)
        ));
        // Grazes the reflex vertex from inside.
        assert!(l.contains_segment(PlanarPoint::new(0.0, 0.0), PlanarPoint::new(525.0, 525.0)));
        // Passes through the reflex vertex into the notch.
        assert!(!l.contains_segment(PlanarPoint::new(0.0, 0.0), PlanarPoint::new(700.0, 700.0)));
    }

    #[test]
    fn holes_are_excluded() {
        let outer = Polygon::rectangle(0.0, 0.0, 100.0, 100.0).unwrap();
        let hole = Polygon::rectangle(40.0, 40.0, 60.0, 60.0).unwrap();
        let r = SurveyRegion::new(outer, vec![hole]).unwrap();
        assert!((r.area_m2() - 9600.0).abs() < 1e-9);
        assert!(!r.contains(PlanarPoint::new(50.0, 50.0)));
        assert!(r.contains(PlanarPoint::new(40.0, 50.0)));
        assert!(!r.contains_segment(PlanarPoint::new(10.0, 50.0), PlanarPoint::new(90.0, 50.0)));
    }

    #[test]
    fn hole_outside_boundary_is_rejected() {
        let outer = Polygon::rectangle(0.0, 0.0, 100.0, 100.0).unwrap();
        let hole = Polygon::rectangle(90.0, 90.0, 120.0, 120.0).unwrap();
        assert!(SurveyRegion::new(outer, vec![hole]).is_err());
    }

    #[test]
    fn swath_clipping() {
        let sq = square(1000.0);
        // Swath along the bottom edge: half of it hangs outside.
        let rect = swath_rectangle(
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(350.0, 0.0),
            50.0,
        );
        assert!((sq.clipped_area(&rect) - 350.0 * 25.0).abs() < 1e-6);
        let rect = swath_rectangle(
            PlanarPoint::new(100.0, 100.0),
            PlanarPoint::new(100.0, 450.0),
            50.0,
        );
        assert!((sq.clipped_area(&rect) - 350.0 * 50.0).abs() < 1e-6);
        // Non-convex subject: L-shape corner.
        let l = l_shape();
        let rect = swath_rectangle(
            PlanarPoint::new(525.0, 525.0),
            PlanarPoint::new(525.0, 875.0),
            50.0,
        );
        assert!((l.clipped_area(&rect) - 350.0 * 25.0).abs() < 1e-6);
    }

    #[test]
    fn swath_membership() {
        let a = PlanarPoint::new(0.0, 0.0);
        let b = PlanarPoint::new(0.0, 350.0);
        assert!(in_swath(PlanarPoint::new(0.0, 100.0), a, b, 55.0));
        assert!(in_swath(PlanarPoint::new(27.5, 0.0), a, b, 55.0));
        assert!(!in_swath(PlanarPoint::new(28.0, 10.0), a, b, 55.0));
        assert!(!in_swath(PlanarPoint::new(0.0, 351.0), a, b, 55.0));
    }
}

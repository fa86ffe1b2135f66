//! Planar polygon geometry over lon/lat coordinates.
//!
//! Coordinates are used as given (WGS84 degrees) with no reprojection. The
//! only relation computed between shapes is the containment trichotomy in
//! [`overlap`]; intersection polygons are never constructed.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Points closer than this to an edge count as lying on it.
pub const EDGE_EPSILON: f64 = 1e-9;

pub type Point = [f64; 2];

/// A closed ring: first vertex equals last.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring(Vec<Point>);

impl Ring {
    pub fn new(points: Vec<Point>, owner: &str) -> Result<Ring> {
        let distinct = points.len().saturating_sub(1);
        if points.len() < 4 || distinct < 3 {
            return Err(Error::Geometry {
                owner: owner.to_string(),
                message: format!("ring needs at least 3 distinct vertices, got {distinct}"),
            });
        }
        if points.first() != points.last() {
            return Err(Error::Geometry {
                owner: owner.to_string(),
                message: "ring is not closed".to_string(),
            });
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Geometry {
                owner: owner.to_string(),
                message: "non-finite coordinate".to_string(),
            });
        }
        Ok(Ring(points))
    }

    /// Closes the ring if needed.
    pub fn from_open(mut points: Vec<Point>, owner: &str) -> Result<Ring> {
        if let (Some(&first), Some(&last)) = (points.first(), points.last()) {
            if first != last {
                points.push(first);
            }
        }
        Ring::new(points, owner)
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    /// Vertices without the closing duplicate.
    pub fn vertices(&self) -> &[Point] {
        &self.0[..self.0.len() - 1]
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges()
            .map(|(p, q)| p[0] * q[1] - q[0] * p[1])
            .sum::<f64>()
            / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    pub fn area(&self) -> f64 {
        let holes: f64 = self.holes.iter().map(|h| h.signed_area().abs()).sum();
        (self.exterior.signed_area().abs() - holes).max(0.0)
    }

    pub fn locate(&self, p: Point) -> Location {
        if self
            .rings()
            .any(|r| r.edges().any(|(a, b)| on_segment(p, a, b)))
        {
            return Location::Boundary;
        }
        let crossings: usize = self.rings().map(|r| ray_crossings(r, p)).sum();
        if crossings % 2 == 1 {
            Location::Inside
        } else {
            Location::Outside
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// A union of polygons. Single polygons are a one-element union.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPolygon {
    pub polygons: Vec<Polygon>,
}

pub type BBox = [f64; 4];

impl MultiPolygon {
    pub fn from_polygon(p: Polygon) -> Self {
        MultiPolygon { polygons: vec![p] }
    }

    /// Axis-aligned rectangle.
    pub fn rect(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Self {
        let ring = vec![
            [min_lon, min_lat],
            [max_lon, min_lat],
            [max_lon, max_lat],
            [min_lon, max_lat],
            [min_lon, min_lat],
        ];
        MultiPolygon::from_polygon(Polygon {
            exterior: Ring(ring),
            holes: Vec::new(),
        })
    }

    /// Parses a GeoJSON `Polygon` or `MultiPolygon` geometry object.
    pub fn from_geojson(value: &Value, owner: &str) -> Result<Self> {
        let err = |message: &str| Error::Geometry {
            owner: owner.to_string(),
            message: message.to_string(),
        };
        let kind = value
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| err("geometry has no type"))?;
        let coords = value
            .get("coordinates")
            .ok_or_else(|| err("geometry has no coordinates"))?;
        let polygons = match kind {
            "Polygon" => vec![parse_polygon(coords, owner)?],
            "MultiPolygon" => coords
                .as_array()
                .ok_or_else(|| err("MultiPolygon coordinates must be an array"))?
                .iter()
                .map(|p| parse_polygon(p, owner))
                .collect::<Result<_>>()?,
            other => return Err(err(&format!("unsupported geometry type {other}"))),
        };
        if polygons.is_empty() {
            return Err(err("empty MultiPolygon"));
        }
        Ok(MultiPolygon { polygons })
    }

    pub fn to_geojson(&self) -> Value {
        let poly = |p: &Polygon| -> Value {
            Value::Array(
                p.rings()
                    .map(|r| Value::Array(r.points().iter().map(|pt| json!(pt)).collect()))
                    .collect(),
            )
        };
        if self.polygons.len() == 1 {
            json!({"type": "Polygon", "coordinates": poly(&self.polygons[0])})
        } else {
            json!({
                "type": "MultiPolygon",
                "coordinates": self.polygons.iter().map(poly).collect::<Vec<_>>(),
            })
        }
    }

    pub fn bbox(&self) -> BBox {
        let mut b = [
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ];
        for p in self.polygons.iter().flat_map(|p| p.exterior.points()) {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
        b
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(Polygon::area).sum()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.polygons.iter().flat_map(|p| p.rings())
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.rings().flat_map(|r| r.vertices().iter().copied())
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings().flat_map(|r| r.edges())
    }

    pub fn locate(&self, p: Point) -> Location {
        let mut best = Location::Outside;
        for poly in &self.polygons {
            match poly.locate(p) {
                Location::Inside => return Location::Inside,
                Location::Boundary => best = Location::Boundary,
                Location::Outside => {}
            }
        }
        best
    }

    /// Even-odd containment with on-edge points counted as inside.
    pub fn contains(&self, p: Point) -> bool {
        self.locate(p) != Location::Outside
    }

    pub fn centroid_of_bbox(&self) -> Point {
        let b = self.bbox();
        [(b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0]
    }
}

fn parse_polygon(coords: &Value, owner: &str) -> Result<Polygon> {
    let err = |message: String| Error::Geometry {
        owner: owner.to_string(),
        message,
    };
    let rings = coords
        .as_array()
        .ok_or_else(|| err("polygon coordinates must be an array of rings".into()))?;
    let mut parsed = Vec::with_capacity(rings.len());
    for ring in rings {
        let pts = ring
            .as_array()
            .ok_or_else(|| err("ring must be an array of positions".into()))?;
        let mut points = Vec::with_capacity(pts.len());
        for pt in pts {
            let pos = pt
                .as_array()
                .filter(|a| a.len() >= 2)
                .ok_or_else(|| err(format!("bad position {pt}")))?;
            let lon = pos[0]
                .as_f64()
                .ok_or_else(|| err(format!("bad position {pt}")))?;
            let lat = pos[1]
                .as_f64()
                .ok_or_else(|| err(format!("bad position {pt}")))?;
            points.push([lon, lat]);
        }
        parsed.push(Ring::new(points, owner)?);
    }
    let mut iter = parsed.into_iter();
    let exterior = iter
        .next()
        .ok_or_else(|| err("polygon has no rings".into()))?;
    Ok(Polygon {
        exterior,
        holes: iter.collect(),
    })
}

fn orient(p: Point, q: Point, r: Point) -> f64 {
    (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (cx * cx + cy * cy).sqrt() <= EDGE_EPSILON
}

fn ray_crossings(ring: &Ring, p: Point) -> usize {
    ring.edges()
        .filter(|(a, b)| {
            (a[1] > p[1]) != (b[1] > p[1])
                && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]
        })
        .count()
}

/// True when the open segments cross at a single interior point.
/// Touching, collinear overlap, and shared endpoints do not count.
fn crosses(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn bbox_overlaps(a: &BBox, b: &BBox, eps: f64) -> bool {
    a[0] <= b[2] + eps && b[0] <= a[2] + eps && a[1] <= b[3] + eps && b[1] <= a[3] + eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Overlap {
    Contained,
    Partial,
    Disjoint,
}

impl Overlap {
    /// Contained or partial.
    pub fn is_hit(self) -> bool {
        self != Overlap::Disjoint
    }
}

/// Classifies how `a` relates to `b`: entirely inside, partially
/// overlapping, or disjoint. Zero-area inputs are rejected.
pub fn overlap(a: &MultiPolygon, b: &MultiPolygon) -> Result<Overlap> {
    for (name, m) in [("first", a), ("second", b)] {
        if m.area().is_nan() || m.area() <= 0.0 {
            return Err(Error::Geometry {
                owner: format!("{name} overlap operand"),
                message: "degenerate polygon (zero area)".to_string(),
            });
        }
    }
    let (ba, bb) = (a.bbox(), b.bbox());
    if !bbox_overlaps(&ba, &bb, EDGE_EPSILON) {
        return Ok(Overlap::Disjoint);
    }

    let b_edges: Vec<(Point, Point)> = b.edges().collect();
    let crossing = a.edges().any(|(p, q)| {
        let eb = [
            p[0].min(q[0]),
            p[1].min(q[1]),
            p[0].max(q[0]),
            p[1].max(q[1]),
        ];
        b_edges.iter().any(|&(r, s)| {
            let fb = [
                r[0].min(s[0]),
                r[1].min(s[1]),
                r[0].max(s[0]),
                r[1].max(s[1]),
            ];
            bbox_overlaps(&eb, &fb, 0.0) && crosses(p, q, r, s)
        })
    });
    if crossing {
        return Ok(Overlap::Partial);
    }

    let (mut a_in, mut a_total) = (0usize, 0usize);
    for v in a.vertices() {
        a_total += 1;
        if b.contains(v) {
            a_in += 1;
        }
    }

    if a_in == a_total {
        let b_pokes_in = b.vertices().any(|v| a.locate(v) == Location::Inside);
        let midpoints_inside = a
            .edges()
            .all(|(p, q)| b.contains([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]));
        if b_pokes_in || !midpoints_inside {
            return Ok(Overlap::Partial);
        }
        return Ok(Overlap::Contained);
    }
    if a_in > 0 {
        return Ok(Overlap::Partial);
    }
    if b.vertices().any(|v| a.contains(v)) {
        return Ok(Overlap::Partial);
    }
    Ok(Overlap::Disjoint)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64, y: f64, side: f64) -> MultiPolygon {
        MultiPolygon::rect(x, y, x + side, y + side)
    }

    #[test]
    fn trichotomy_examples() {
        let unit = square(0.0, 0.0, 1.0);
        assert_eq!(overlap(&unit, &unit).unwrap(), Overlap::Contained);
        assert_eq!(
            overlap(&unit, &square(0.5, 0.0, 1.0)).unwrap(),
            Overlap::Partial
        );
        assert_eq!(
            overlap(&unit, &square(11.0, 0.0, 1.0)).unwrap(),
            Overlap::Disjoint
        );
    }

    #[test]
    fn containment_is_directional() {
        let big = square(0.0, 0.0, 6.0);
        let small = square(2.0, 2.0, 1.0);
        assert_eq!(overlap(&small, &big).unwrap(), Overlap::Contained);
        assert_eq!(overlap(&big, &small).unwrap(), Overlap::Partial);
    }

    #[test]
    fn shared_edge_counts_as_partial() {
        let a = square(0.0, 0.0, 1.0);
        let b = square(1.0, 0.0, 1.0);
        assert_eq!(overlap(&a, &b).unwrap(), Overlap::Partial);
        assert_eq!(overlap(&b, &a).unwrap(), Overlap::Partial);
    }

    #[test]
    fn hole_excludes_interior() {
        let value = json!({"type":"Polygon","coordinates":[
            [[0,0],[10,0],[10,10],[0,10],[0,0]],
            [[4,4],[6,4],[6,6],[4,6],[4,4]]
        ]});
        let donut = MultiPolygon::from_geojson(&value, "t").unwrap();
        assert!(!donut.contains([5.0, 5.0]));
        assert!(donut.contains([4.0, 5.0]));
        assert!(donut.contains([1.0, 1.0]));
        assert_eq!(
            overlap(&square(4.5, 4.5, 1.0), &donut).unwrap(),
            Overlap::Disjoint
        );
        // the hole of the donut lies inside the block, so the block is not contained
        assert_eq!(
            overlap(&square(3.0, 3.0, 4.0), &donut).unwrap(),
            Overlap::Partial
        );
    }

    #[test]
    fn degenerate_polygon_is_an_error() {
        let flat = MultiPolygon::from_geojson(
            &json!({"type":"Polygon","coordinates":[[[0,0],[1,0],[2,0],[0,0]]]}),
            "flat",
        )
        .unwrap();
        assert!(overlap(&flat, &square(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn on_edge_points_are_inside() {
        let unit = square(0.0, 0.0, 1.0);
        assert!(unit.contains([1.0, 0.5]));
        assert!(unit.contains([1.0 + 1e-10, 0.5]));
        assert!(!unit.contains([1.0 + 1e-6, 0.5]));
    }

    #[test]
    fn geojson_round_trip() {
        let m = MultiPolygon::rect(-93.0, 45.0, -92.5, 45.5);
        let back = MultiPolygon::from_geojson(&m.to_geojson(), "t").unwrap();
        assert_eq!(m, back);
        assert_eq!(m.bbox(), [-93.0, 45.0, -92.5, 45.5]);
    }
}

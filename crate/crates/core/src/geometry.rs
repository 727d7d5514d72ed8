//! Planar geometry helpers; coordinates are meters, distances Euclidean.

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }
}

/// Distance from a point to the segment `a`–`b`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    let proj = Point::new(a.x + t * dx, a.y + t * dy);
    p.distance(&proj)
}

/// Minimum distance from a point to a polyline (sequence of segments).
///
/// A single-vertex polyline degenerates to point distance; an empty
/// polyline yields infinity.
pub fn point_polyline_distance(p: &Point, polyline: &[[f64; 2]]) -> f64 {
    match polyline.len() {
        0 => f64::INFINITY,
        1 => p.distance(&Point::new(polyline[0][0], polyline[0][1])),
        _ => polyline
            .windows(2)
            .map(|w| {
                point_segment_distance(
                    p,
                    &Point::new(w[0][0], w[0][1]),
                    &Point::new(w[1][0], w[1][1]),
                )
            })
            .fold(f64::INFINITY, f64::min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distance_basics() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(10.0, 0.0);
        assert_eq!(point_segment_distance(&Point::new(5.0, 3.0), &a, &b), 3.0);
        // beyond the endpoint the nearest point is the endpoint itself
        assert_eq!(point_segment_distance(&Point::new(14.0, 3.0), &a, &b), 5.0);
        assert_eq!(point_segment_distance(&Point::new(-3.0, 4.0), &a, &b), 5.0);
    }

    #[test]
    fn polyline_distance_picks_nearest_segment() {
        let poly = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]];
        assert_eq!(
            point_polyline_distance(&Point::new(12.0, 5.0), &poly),
            2.0
        );
        assert!(point_polyline_distance(&Point::new(0.0, 0.0), &[]).is_infinite());
    }
}

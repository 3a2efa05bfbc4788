//! Geo-fence specification generator and an independent crossing oracle.
//!
//! Coordinates are planar: latitude is the x axis and longitude the y axis,
//! both converted to radians exactly as the generated specification does.
//! Each face `p_i p_j` gets three outputs and one trigger that fires when the
//! vehicle's last step crosses the face.

use std::fmt::Write as _;

/// Tolerance used for slope comparisons and the vertical-step test.
pub const DEFAULT_EPSILON: f64 = 1e-9;

const PI_LITERAL: &str = "3.14159265359";

/// (lat, lon)
pub type Point = (f64, f64);

/// Degree to radian conversion with the same constant and operation order as the specification.
pub fn to_radians(deg: f64) -> f64 {
    deg * 3.14159265359 / 180.0
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FenceError {
    #[error("a fence needs at least 3 vertices, found {0}")]
    TooFewVertices(usize),
    #[error("vertices {0} and {1} coincide")]
    Coincident(usize, usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Constants of one fence face, in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceParams {
    pub p1: Point,
    pub p2: Point,
    /// Slope of lon over lat; 0 for vertical faces.
    pub m: f64,
    /// Lon intercept; 0 for vertical faces.
    pub b: f64,
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
    /// `|Δlat| <= ε`: the face cannot be written as lon = m·lat + b.
    pub vertical: bool,
}

pub fn precompute_face(p1: Point, p2: Point, eps: f64) -> Result<FaceParams, FenceError> {
    if p1 == p2 {
        return Err(FenceError::Coincident(0, 1));
    }
    let dlat = p2.0 - p1.0;
    let vertical = dlat.abs() <= eps;
    let (m, b) = if vertical {
        (0.0, 0.0)
    } else {
        let m = (p2.1 - p1.1) / dlat;
        (m, p1.1 - m * p1.0)
    };
    Ok(FaceParams {
        p1,
        p2,
        m,
        b,
        min_lat: p1.0.min(p2.0),
        max_lat: p1.0.max(p2.0),
        min_lon: p1.1.min(p2.1),
        max_lon: p1.1.max(p2.1),
        vertical,
    })
}

/// A closed polygon; vertices in degrees as logged.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Polygon, FenceError> {
        let n = vertices.len();
        if n < 3 {
            return Err(FenceError::TooFewVertices(n));
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i] == vertices[j] {
                return Err(FenceError::Coincident(i + 1, j + 1));
            }
        }
        Ok(Polygon { vertices })
    }

    /// Parses one `lat_deg,lon_deg` vertex per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Polygon, FenceError> {
        let mut vertices = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| FenceError::Parse { line: k + 1, message };
            let mut parts = line.split(',').map(str::trim);
            let (Some(lat), Some(lon), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(format!("expected `lat,lon`, found `{line}`")));
            };
            let lat: f64 = lat.parse().map_err(|_| err(format!("invalid latitude `{lat}`")))?;
            let lon: f64 = lon.parse().map_err(|_| err(format!("invalid longitude `{lon}`")))?;
            if !lat.is_finite() || !lon.is_finite() {
                return Err(err("coordinates must be finite".into()));
            }
            vertices.push((lat, lon));
        }
        Polygon::new(vertices)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# lat_deg,lon_deg\n");
        for (lat, lon) in &self.vertices {
            let _ = writeln!(out, "{lat},{lon}");
        }
        out
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices in radians.
    pub fn radians(&self) -> Vec<Point> {
        self.vertices.iter().map(|&(lat, lon)| (to_radians(lat), to_radians(lon))).collect()
    }

    /// Face `k` joins vertex `k` and vertex `k + 1` (wrapping), in radians.
    pub fn faces(&self, eps: f64) -> Result<Vec<FaceParams>, FenceError> {
        let r = self.radians();
        let n = r.len();
        (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                precompute_face(r[i], r[j], eps).map_err(|_| FenceError::Coincident(i + 1, j + 1))
            })
            .collect()
    }
}

/// Renders a float so it lexes back as a float literal with the same value.
pub fn float_literal(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

/// Generates the geo-fence specification for a closed polygon.
pub fn generate_fence_spec(poly: &Polygon, eps: f64) -> Result<String, FenceError> {
    let faces = poly.faces(eps)?;
    let n = faces.len();
    let labelled: Vec<(usize, usize, FaceParams)> =
        faces.into_iter().enumerate().map(|(i, f)| (i + 1, (i + 1) % n + 1, f)).collect();
    Ok(generate_faces_spec(&labelled, eps))
}

/// Generates a specification checking an arbitrary list of faces, each
/// labelled with the numbers of its two endpoints.
pub fn generate_faces_spec(faces: &[(usize, usize, FaceParams)], eps: f64) -> String {
    let e = float_literal(eps);
    let mut s = String::new();
    let _ = writeln!(s, "// Geo-fence with {} faces, epsilon {e}", faces.len());
    s.push_str("input lat_in_degree: Float32\ninput lon_in_degree: Float32\n\n");
    let _ = writeln!(s, "output lat := lat_in_degree * {PI_LITERAL} / 180.0");
    let _ = writeln!(s, "output lon := lon_in_degree * {PI_LITERAL} / 180.0");
    s.push_str(
        "
// Vehicle line
output lat_pre := lat.offset(by: -1).defaults(to: lat)
output delta_lat := lat - lat_pre
output lon_pre := lon.offset(by: -1).defaults(to: lon)
output delta_lon := lon - lon_pre
",
    );
    let _ = writeln!(s, "output is_fnc := abs(delta_lat) > {e}");
    s.push_str(
        "output m_v := if is_fnc then delta_lon / delta_lat else 0.0
output b_v := if is_fnc then lon - m_v * lat else 0.0
output min_lat_v := if lat < lat_pre then lat else lat_pre
output max_lat_v := if lat > lat_pre then lat else lat_pre
output min_lon_v := if lon < lon_pre then lon else lon_pre
output max_lon_v := if lon > lon_pre then lon else lon_pre
",
    );
    for (i, j, f) in faces {
        let name = format!("p{i}p{j}");
        let hit = format!("intersect_{name}");
        let ilat = format!("intersect_lat_{name}");
        let ilon = format!("intersect_lon_{name}");
        let _ = writeln!(s, "\n// Face {name}");
        let vehicle_box = format!(
            "(({ilat} > min_lat_v and {ilat} < max_lat_v) and ({ilon} > min_lon_v and {ilon} < max_lon_v))"
        );
        let (min_lon, max_lon) = (float_literal(f.min_lon), float_literal(f.max_lon));
        if f.vertical {
            let lat = float_literal(f.p1.0);
            let _ = writeln!(s, "output {hit} := is_fnc");
            let _ = writeln!(s, "output {ilat} := if is_fnc then {lat} else lat");
            let _ = writeln!(s, "output {ilon} := m_v * {ilat} + b_v");
            let _ = writeln!(
                s,
                "trigger {hit} and {vehicle_box} and ({ilon} > {min_lon} and {ilon} < {max_lon}) \"VIOLATION: line crossing between p{i} and p{j}\""
            );
        } else {
            let (m, b) = (float_literal(f.m), float_literal(f.b));
            let (min_lat, max_lat) = (float_literal(f.min_lat), float_literal(f.max_lat));
            let _ = writeln!(s, "output {hit} := abs(m_v - {m}) > {e}");
            let _ = writeln!(s, "output {ilat} := if is_fnc and {hit} then (b_v - {b}) / ({m} - m_v) else lat");
            let _ = writeln!(s, "output {ilon} := {m} * {ilat} + {b}");
            let _ = writeln!(
                s,
                "trigger {hit} and {vehicle_box} and (({ilat} > {min_lat} and {ilat} < {max_lat}) and ({ilon} > {min_lon} and {ilon} < {max_lon})) \"VIOLATION: line crossing between p{i} and p{j}\""
            );
        }
    }
    s
}

fn cross(a: Point, b: Point) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn sub(a: Point, b: Point) -> Point {
    (a.0 - b.0, a.1 - b.1)
}

/// Parameters `(t, u)` of the crossing of segments `a1a2` and `b1b2`, with
/// both strictly inside (0, 1). Parallel and collinear segments never cross.
pub fn segment_intersection_params(a1: Point, a2: Point, b1: Point, b2: Point) -> Option<(f64, f64)> {
    let r = sub(a2, a1);
    let s = sub(b2, b1);
    let d = cross(r, s);
    if d == 0.0 {
        return None;
    }
    let q = sub(b1, a1);
    let t = cross(q, s) / d;
    let u = cross(q, r) / d;
    (t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0).then_some((t, u))
}

/// Intersection point of two segments with interior-strict containment.
pub fn segment_intersection_oracle(a1: Point, a2: Point, b1: Point, b2: Point) -> Option<Point> {
    segment_intersection_params(a1, a2, b1, b2).map(|(t, _)| (a1.0 + t * (a2.0 - a1.0), a1.1 + t * (a2.1 - a1.1)))
}

/// Whether the generated template cannot report a crossing of this vehicle
/// step with this face: vertical steps (no slope), steps or faces with
/// constant lon (strict lon bounds collapse) and near-parallel pairs.
pub fn template_blind_spot(v1: Point, v2: Point, face: &FaceParams, eps: f64) -> bool {
    let dlat = v2.0 - v1.0;
    if dlat.abs() <= eps || v1.1 == v2.1 || face.min_lon == face.max_lon {
        return true;
    }
    !face.vertical && ((v2.1 - v1.1) / dlat - face.m).abs() <= eps
}

/// One crossing found by the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    /// Index of the second sample of the crossing step.
    pub step: usize,
    /// Zero-based face index.
    pub face: usize,
    /// Fraction of the step at which the crossing happens.
    pub fraction: f64,
    pub point: Point,
    pub blind_spot: bool,
}

/// All crossings of a trajectory (radians) with a set of faces, in step then face order.
pub fn oracle_crossings(trajectory: &[Point], faces: &[FaceParams], eps: f64) -> Vec<Crossing> {
    let mut out = Vec::new();
    for step in 1..trajectory.len() {
        let (a1, a2) = (trajectory[step - 1], trajectory[step]);
        for (k, f) in faces.iter().enumerate() {
            if let Some((t, _)) = segment_intersection_params(a1, a2, f.p1, f.p2) {
                out.push(Crossing {
                    step,
                    face: k,
                    fraction: t,
                    point: (a1.0 + t * (a2.0 - a1.0), a1.1 + t * (a2.1 - a1.1)),
                    blind_spot: template_blind_spot(a1, a2, f, eps),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_params() {
        let f = precompute_face((0.0, 0.0), (1.0, 1.0), DEFAULT_EPSILON).unwrap();
        assert_eq!((f.m, f.b, f.vertical), (1.0, 0.0, false));
        let f = precompute_face((0.0, 0.0), (0.0, 1.0), DEFAULT_EPSILON).unwrap();
        assert!(f.vertical);
        assert!(precompute_face((1.0, 2.0), (1.0, 2.0), DEFAULT_EPSILON).is_err());
        let f = precompute_face((0.2, -0.1), (0.7, 0.4), DEFAULT_EPSILON).unwrap();
        for (lat, lon) in [f.p1, f.p2] {
            assert!((f.m * lat + f.b - lon).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_basics() {
        assert_eq!(segment_intersection_oracle((0.0, 0.0), (2.0, 2.0), (0.0, 2.0), (2.0, 0.0)), Some((1.0, 1.0)));
        assert_eq!(segment_intersection_oracle((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)), None);
        assert_eq!(segment_intersection_oracle((0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)), None);
        // Touching at an endpoint is not a strict crossing.
        assert_eq!(segment_intersection_oracle((0.0, 0.0), (1.0, 1.0), (1.0, 1.0), (2.0, 0.0)), None);
    }

    #[test]
    fn polygon_parsing() {
        let p = Polygon::parse("# fence\n52.0, 10.0\n52.1,10.05 # north\n\n52.0,10.1\n").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(Polygon::parse(&p.to_text()).unwrap(), p);
        assert_eq!(Polygon::parse("1,2\n3,4"), Err(FenceError::TooFewVertices(2)));
        assert!(matches!(Polygon::parse("1,2\nx,4\n5,6"), Err(FenceError::Parse { line: 2, .. })));
        assert_eq!(Polygon::parse("1,2\n1,2\n3,4"), Err(FenceError::Coincident(1, 2)));
    }

    #[test]
    fn float_literals_keep_value() {
        for x in [0.0, 1.0, -2.5, 1e-9, 0.1 + 0.2, 123456789.125, -3.0e-7] {
            let lit = float_literal(x);
            assert!(lit.contains('.'), "{lit}");
            assert!(!lit.contains('e'), "{lit}");
            assert_eq!(lit.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn triangle_spec_shape() {
        let poly = Polygon::new(vec![(52.0, 10.0), (52.01, 10.02), (51.995, 10.03)]).unwrap();
        let text = generate_fence_spec(&poly, DEFAULT_EPSILON).unwrap();
        assert_eq!(text.matches("\ntrigger ").count(), 3);
        assert!(text.contains("\"VIOLATION: line crossing between p3 and p1\""));
        assert!(text.contains("output lat := lat_in_degree * 3.14159265359 / 180.0"));
        let spec = crate::analysis::analyze_source(&text).unwrap();
        assert_eq!(spec.trigger_count(), 3);
    }

    #[test]
    fn vertical_face_variant() {
        let poly = Polygon::new(vec![(52.0, 10.0), (52.0, 10.02), (52.01, 10.01)]).unwrap();
        let faces = poly.faces(DEFAULT_EPSILON).unwrap();
        assert!(faces[0].vertical);
        let text = generate_fence_spec(&poly, DEFAULT_EPSILON).unwrap();
        assert!(text.contains("output intersect_p1p2 := is_fnc"));
        crate::analysis::analyze_source(&text).unwrap();
    }

    #[test]
    fn blind_spots() {
        let f = precompute_face((0.0, 0.0), (1.0, 2.0), DEFAULT_EPSILON).unwrap();
        assert!(template_blind_spot((0.5, 0.0), (0.5, 3.0), &f, DEFAULT_EPSILON));
        assert!(template_blind_spot((0.0, 1.0), (1.0, 1.0), &f, DEFAULT_EPSILON));
        assert!(!template_blind_spot((0.0, 1.0), (1.0, 1.5), &f, DEFAULT_EPSILON));
    }
}

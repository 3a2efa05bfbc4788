//! Bundled example specifications.
//!
//! The geo-fence specs are generator output: `geofence.lola` for the
//! 12-vertex polygon in `corpus/polygons/fence12.csv`, and
//! `geofence_face.lola` for its first face alone.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

macro_rules! spec {
    ($name:literal, $description:literal) => {
        CorpusSpec {
            name: $name,
            description: $description,
            source: include_str!(concat!("../corpus/", $name, ".lola")),
        }
    };
}

pub const HEIGHT: CorpusSpec = spec!("height", "altimeter jump detection over a two minute average");
pub const GPS_IMU: CorpusSpec = spec!("gps_imu", "GPS update rate, satellite count and double-integrated IMU position");
pub const SENSOR_VALIDATION: CorpusSpec = spec!("sensor_validation", "GPS velocity and position bound checks");
pub const PEAK_DETECTION: CorpusSpec = spec!("peak_detection", "speed peaks against ten second averages");
pub const VALIDATION: CorpusSpec = spec!("validation", "sensor validation combined with peak detection");
pub const GEOFENCE_FACE: CorpusSpec = spec!("geofence_face", "line crossing check for a single fence face");
pub const GEOFENCE: CorpusSpec = spec!("geofence", "line crossing checks for a 12-face fence");
pub const CROSS_VALIDATION: CorpusSpec = spec!("cross_validation", "GPS velocity against IMU acceleration");

pub const ALL: &[CorpusSpec] = &[
    HEIGHT,
    GPS_IMU,
    SENSOR_VALIDATION,
    PEAK_DETECTION,
    VALIDATION,
    GEOFENCE_FACE,
    GEOFENCE,
    CROSS_VALIDATION,
];

/// Vertices of the bundled 12-vertex fence, one `lat,lon` pair per line.
pub const FENCE12_POLYGON: &str = include_str!("../corpus/polygons/fence12.csv");

pub fn get(name: &str) -> Option<CorpusSpec> {
    ALL.iter().copied().find(|s| s.name == name)
}

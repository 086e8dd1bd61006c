//! Scenario data model: positions, environments, array descriptions,
//! configuration validation and deterministic random streams.

mod arrays;
mod config;
mod environment;
mod frame;
mod rng;

use serde::{Deserialize, Serialize};

pub use arrays::{Aperture, ArrayLayout, ArraySpec, Facing, RisPlane, RisSpec};
pub use config::{
    config_hash, dbm_to_watts, validate_config, DirectPathMode, InactiveRisMode, LinkLosMode, NearFieldPolicy,
    RxOrientation, SimConfig, ValidatedConfig, SPEED_OF_LIGHT,
};
pub use environment::{ClusterPlacement, Environment, EnvironmentKind, LosProbabilityModel, PathLossCoefficients};
pub use frame::{Axis, Frame};
pub use rng::{spawn_rng, LinkTag, RngStream};

/// A point in the global frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn distance(self, other: Point3) -> f64 {
        let [dx, dy, dz] = self.vector_to(other);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Vector from `self` to `other`.
    pub fn vector_to(self, other: Point3) -> [f64; 3] {
        [other.x - self.x, other.y - self.y, other.z - self.z]
    }

    pub fn offset(self, v: [f64; 3]) -> Point3 {
        Point3::new(self.x + v[0], self.y + v[1], self.z + v[2])
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Point3 { x, y, z }
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.to_array()
    }
}

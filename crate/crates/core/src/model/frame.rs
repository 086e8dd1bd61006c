use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

/// Horizontal global axis an aperture faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
}

impl Axis {
    /// Azimuth of the axis in the global xy-plane.
    pub fn azimuth(self) -> f64 {
        match self {
            Axis::PosX => 0.0,
            Axis::PosY => FRAC_PI_2,
            Axis::NegX => PI,
            Axis::NegY => -FRAC_PI_2,
        }
    }
}

/// Orthonormal right-handed local frame of an aperture.
///
/// Local x is the broadside (outward normal), local z stays vertical and
/// local y completes the frame. Elements of every array lie in the local
/// yz-plane, so broadside is azimuth 0, elevation 0 in local angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    axes: [[f64; 3]; 3],
}

impl Frame {
    pub const fn global() -> Self {
        Frame {
            axes: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Level frame whose broadside points at `azimuth` in the global xy-plane.
    pub fn horizontal(azimuth: f64) -> Self {
        let (s, c) = azimuth.sin_cos();
        // x' = (c, s, 0), z' = z, y' = z' × x'
        Frame {
            axes: [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn facing(axis: Axis) -> Self {
        match axis {
            Axis::PosX => Frame::global(),
            Axis::NegX => Frame {
                axes: [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
            },
            Axis::PosY => Frame {
                axes: [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            },
            Axis::NegY => Frame {
                axes: [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            },
        }
    }

    /// The same frame turned by `angle` about the global z-axis.
    pub fn rotated_about_z(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let rot = |v: [f64; 3]| [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]];
        Frame {
            axes: self.axes.map(rot),
        }
    }

    pub fn broadside(&self) -> [f64; 3] {
        self.axes[0]
    }

    /// Components of a global vector along the local axes.
    pub fn to_local(&self, v: [f64; 3]) -> [f64; 3] {
        self.axes.map(|a| a[0] * v[0] + a[1] * v[1] + a[2] * v[2])
    }

    pub fn to_global(&self, v: [f64; 3]) -> [f64; 3] {
        let [a, b, c] = self.axes;
        [0, 1, 2].map(|i| a[i] * v[0] + b[i] * v[1] + c[i] * v[2])
    }
}

impl Default for Frame {
    fn default() -> Self {
        Frame::global()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn facing_matches_horizontal() {
        for axis in [Axis::PosX, Axis::NegX, Axis::PosY, Axis::NegY] {
            let a = Frame::facing(axis);
            let b = Frame::horizontal(axis.azimuth());
            for i in 0..3 {
                assert!(close(a.axes[i], b.axes[i]), "{axis:?}");
            }
        }
    }

    #[test]
    fn round_trip_and_handedness() {
        let f = Frame::horizontal(0.7).rotated_about_z(-2.1);
        let v = [0.3, -1.2, 4.0];
        assert!(close(f.to_global(f.to_local(v)), v));
        let [x, y, z] = f.axes;
        let cross = [
            x[1] * y[2] - x[2] * y[1],
            x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0],
        ];
        assert!(close(cross, z));
    }
}

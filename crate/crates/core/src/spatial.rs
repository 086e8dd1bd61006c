//! Deterministic 3D geometry: distances and local angles, array response
//! vectors and the RIS element radiation pattern.
//!
//! Angle convention, shared by every module: in a device's local frame the
//! azimuth is `atan2(y, x)` and the elevation is measured from the local
//! horizontal, `atan2(z, sqrt(x² + y²))`. Local x is the aperture broadside.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::GeometryError;
use crate::model::{Aperture, Frame, Point3};

/// Direction and range of one point as seen from another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSet {
    /// radians
    pub azimuth: f64,
    /// radians, in `[-π/2, π/2]`
    pub elevation: f64,
    /// meters
    pub distance: f64,
}

impl AngleSet {
    /// Unit vector `(cosθ cosφ, cosθ sinφ, sinθ)` in the local frame.
    pub fn direction(&self) -> [f64; 3] {
        let (se, ce) = self.elevation.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [ce * ca, ce * sa, se]
    }

    /// Angle between the direction and the local broadside, in `[0, π]`.
    pub fn off_broadside(&self) -> f64 {
        (self.elevation.cos() * self.azimuth.cos()).clamp(-1.0, 1.0).acos()
    }
}

/// Where `to` lies as seen from `from`, in `frame`.
pub fn geometry_relation(from: Point3, to: Point3, frame: &Frame) -> Result<AngleSet, GeometryError> {
    let d = from.vector_to(to);
    let distance = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if distance == 0.0 {
        return Err(GeometryError::CoincidentPoints(from.x, from.y, from.z));
    }
    let [x, y, z] = frame.to_local(d);
    Ok(AngleSet {
        azimuth: y.atan2(x),
        elevation: z.atan2(x.hypot(y)),
        distance,
    })
}

/// Array response: unit-modulus entries, one per element.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(DVector<Complex64>);

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<Complex64> {
        self.0
    }
}

impl std::ops::Deref for SteeringVector {
    type Target = DVector<Complex64>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

/// `a_n = exp(j (2π/λ) ⟨u(φ, θ), r_n⟩)` over the element coordinates of `spec`.
pub fn steering_vector<A: Aperture + ?Sized>(
    spec: &A,
    angles: &AngleSet,
    wavelength: f64,
) -> Result<SteeringVector, GeometryError> {
    if !(wavelength > 0.0) {
        return Err(GeometryError::NonPositiveWavelength(wavelength));
    }
    let positions = spec.element_positions(wavelength);
    if positions.len() != spec.element_count() {
        return Err(GeometryError::DimensionMismatch {
            expected: spec.element_count(),
            actual: positions.len(),
        });
    }
    Ok(SteeringVector(response(
        &positions,
        angles.direction(),
        2.0 * PI / wavelength,
    )))
}

/// Response of elements at `positions` (local meters) toward the local unit
/// vector `direction`, for wavenumber `k`.
pub(crate) fn response(positions: &[[f64; 3]], direction: [f64; 3], k: f64) -> DVector<Complex64> {
    DVector::from_iterator(
        positions.len(),
        positions.iter().map(|r| {
            let phase = k * (direction[0] * r[0] + direction[1] * r[1] + direction[2] * r[2]);
            Complex64::from_polar(1.0, phase)
        }),
    )
}

/// RIS element power pattern `2(2q+1)·cos^(2q)(θ)` for `θ` measured from
/// broadside, zero behind the aperture. Integrates to 4π over the sphere.
pub fn element_gain(theta: f64, q: f64) -> f64 {
    if theta.abs() < FRAC_PI_2 {
        2.0 * (2.0 * q + 1.0) * theta.cos().powf(2.0 * q)
    } else {
        0.0
    }
}

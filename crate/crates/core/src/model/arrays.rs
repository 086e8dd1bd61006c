use serde::{Deserialize, Serialize};

use super::{Axis, Frame, Point3};
use crate::error::ConfigError;

/// Anything with a rectangular grid of elements in its local yz-plane.
///
/// Element `n = row·cols + col` sits at local `(0, col·δ, row·δ)`, or at the
/// same grid shifted to be centered on the origin when [`centered`] is true.
/// Rows run along local z (vertical), columns along local y.
///
/// [`centered`]: Aperture::centered
pub trait Aperture {
    /// `(rows, cols)`.
    fn shape(&self) -> (usize, usize);
    fn spacing_wavelengths(&self) -> f64;
    fn centered(&self) -> bool;

    fn element_count(&self) -> usize {
        let (r, c) = self.shape();
        r * c
    }

    /// Local element coordinates in meters.
    fn element_positions(&self, wavelength: f64) -> Vec<[f64; 3]> {
        let (rows, cols) = self.shape();
        let d = self.spacing_wavelengths() * wavelength;
        let (r0, c0) = if self.centered() {
            ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0)
        } else {
            (0.0, 0.0)
        };
        (0..rows)
            .flat_map(|r| (0..cols).map(move |c| [0.0, (c as f64 - c0) * d, (r as f64 - r0) * d]))
            .collect()
    }

    /// Physical diagonal of the aperture in meters.
    fn aperture_diagonal(&self, wavelength: f64) -> f64 {
        let (r, c) = self.shape();
        let d = self.spacing_wavelengths() * wavelength;
        d * ((r * r + c * c) as f64).sqrt()
    }
}

/// Most nearly square `(rows, cols)` factorization with `rows <= cols`.
pub(crate) fn near_square(n: usize) -> (usize, usize) {
    let mut rows = (n as f64).sqrt() as usize;
    while rows > 1 && !n.is_multiple_of(rows) {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, n / rows)
}

fn default_spacing() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayLayout {
    Ula,
    Upa,
}

/// Tx or Rx antenna array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArraySpecFile")]
pub struct ArraySpec {
    pub layout: ArrayLayout,
    pub rows: usize,
    pub cols: usize,
    pub spacing_wavelengths: f64,
    pub position: Point3,
    pub broadside: Axis,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArraySpecFile {
    layout: ArrayLayout,
    #[serde(default)]
    count: Option<usize>,
    #[serde(default)]
    shape: Option<[usize; 2]>,
    // serialized form of ArraySpec
    #[serde(default)]
    rows: Option<usize>,
    #[serde(default)]
    cols: Option<usize>,
    #[serde(default = "default_spacing")]
    spacing_wavelengths: f64,
    position: Point3,
    #[serde(default = "default_broadside")]
    broadside: Axis,
}

fn default_broadside() -> Axis {
    Axis::PosX
}

impl TryFrom<ArraySpecFile> for ArraySpec {
    type Error = ConfigError;

    fn try_from(f: ArraySpecFile) -> Result<Self, Self::Error> {
        let (rows, cols) = match (f.shape, f.rows.zip(f.cols), f.count) {
            (Some([r, c]), _, _) | (None, Some((r, c)), _) => (r, c),
            (None, None, Some(n)) => ArraySpec::shape_for(f.layout, n),
            (None, None, None) => {
                return Err(ConfigError::invalid(
                    "array",
                    "one of `count`, `shape` or `rows`/`cols` is required",
                ))
            }
        };
        if let Some(n) = f.count {
            if n != rows * cols {
                return Err(ConfigError::invalid(
                    "array.count",
                    format!("{n} does not match shape {rows}x{cols}"),
                ));
            }
        }
        Ok(ArraySpec {
            layout: f.layout,
            rows,
            cols,
            spacing_wavelengths: f.spacing_wavelengths,
            position: f.position,
            broadside: f.broadside,
        })
    }
}

impl ArraySpec {
    pub fn ula(count: usize, position: Point3, broadside: Axis) -> Self {
        ArraySpec::new(ArrayLayout::Ula, count, position, broadside)
    }

    pub fn upa(count: usize, position: Point3, broadside: Axis) -> Self {
        ArraySpec::new(ArrayLayout::Upa, count, position, broadside)
    }

    pub fn new(layout: ArrayLayout, count: usize, position: Point3, broadside: Axis) -> Self {
        let (rows, cols) = ArraySpec::shape_for(layout, count);
        ArraySpec {
            layout,
            rows,
            cols,
            spacing_wavelengths: default_spacing(),
            position,
            broadside,
        }
    }

    fn shape_for(layout: ArrayLayout, count: usize) -> (usize, usize) {
        match layout {
            ArrayLayout::Ula => (1, count),
            ArrayLayout::Upa => near_square(count),
        }
    }

    /// Same layout and placement with a different element count.
    pub fn with_count(&self, count: usize) -> Self {
        ArraySpec {
            spacing_wavelengths: self.spacing_wavelengths,
            ..ArraySpec::new(self.layout, count, self.position, self.broadside)
        }
    }

    pub fn frame(&self) -> Frame {
        Frame::facing(self.broadside)
    }

    pub(crate) fn validate(&self, name: &str) -> Result<(), ConfigError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(ConfigError::NonPositiveCount(format!("{name} element count")));
        }
        if self.layout == ArrayLayout::Ula && self.rows != 1 && self.cols != 1 {
            return Err(ConfigError::invalid(
                format!("{name}.shape"),
                "a ULA must have one axis of length 1",
            ));
        }
        if !(self.spacing_wavelengths > 0.0 && self.spacing_wavelengths.is_finite()) {
            return Err(ConfigError::invalid(
                format!("{name}.spacing_wavelengths"),
                "must be positive",
            ));
        }
        check_position(name, self.position)
    }
}

impl Aperture for ArraySpec {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }

    fn centered(&self) -> bool {
        false
    }
}

/// Global plane an RIS is mounted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RisPlane {
    /// Normal along ±y.
    Xz,
    /// Normal along ±x.
    Yz,
}

/// Which side of its plane the RIS serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facing {
    /// Toward the transmitter.
    Auto,
    /// Along the positive normal axis (+y for xz, +x for yz).
    Positive,
    Negative,
}

fn default_gain_exponent() -> f64 {
    0.285
}

fn default_facing() -> Facing {
    Facing::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RisSpecFile")]
pub struct RisSpec {
    pub elements: usize,
    pub rows: usize,
    pub cols: usize,
    pub position: Point3,
    pub plane: RisPlane,
    pub facing: Facing,
    /// Exponent `q` of the `cos^(2q)` element pattern.
    pub gain_exponent: f64,
    pub spacing_wavelengths: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RisSpecFile {
    elements: usize,
    #[serde(default)]
    shape: Option<[usize; 2]>,
    #[serde(default)]
    rows: Option<usize>,
    #[serde(default)]
    cols: Option<usize>,
    position: Point3,
    plane: RisPlane,
    #[serde(default = "default_facing")]
    facing: Facing,
    #[serde(default = "default_gain_exponent")]
    gain_exponent: f64,
    #[serde(default = "default_spacing")]
    spacing_wavelengths: f64,
}

impl TryFrom<RisSpecFile> for RisSpec {
    type Error = ConfigError;

    fn try_from(f: RisSpecFile) -> Result<Self, Self::Error> {
        let (rows, cols) = match (f.shape, f.rows.zip(f.cols)) {
            (Some([r, c]), _) | (None, Some((r, c))) => (r, c),
            (None, None) => near_square(f.elements),
        };
        if rows * cols != f.elements {
            return Err(ConfigError::invalid(
                "ris.shape",
                format!("{rows}x{cols} does not hold {} elements", f.elements),
            ));
        }
        Ok(RisSpec {
            elements: f.elements,
            rows,
            cols,
            position: f.position,
            plane: f.plane,
            facing: f.facing,
            gain_exponent: f.gain_exponent,
            spacing_wavelengths: f.spacing_wavelengths,
        })
    }
}

impl RisSpec {
    pub fn new(elements: usize, position: Point3, plane: RisPlane) -> Self {
        let (rows, cols) = near_square(elements);
        RisSpec {
            elements,
            rows,
            cols,
            position,
            plane,
            facing: Facing::Auto,
            gain_exponent: default_gain_exponent(),
            spacing_wavelengths: default_spacing(),
        }
    }

    pub fn with_elements(&self, elements: usize) -> Self {
        let (rows, cols) = near_square(elements);
        RisSpec {
            elements,
            rows,
            cols,
            ..self.clone()
        }
    }

    /// Local frame with broadside on the plane normal. `Facing::Auto` picks
    /// the side `toward` lies on (positive if it sits on the plane).
    pub fn frame(&self, toward: Point3) -> Frame {
        let [dx, dy, _] = self.position.vector_to(toward);
        let (offset, pos, neg) = match self.plane {
            RisPlane::Xz => (dy, Axis::PosY, Axis::NegY),
            RisPlane::Yz => (dx, Axis::PosX, Axis::NegX),
        };
        let positive = match self.facing {
            Facing::Positive => true,
            Facing::Negative => false,
            Facing::Auto => offset >= 0.0,
        };
        Frame::facing(if positive { pos } else { neg })
    }

    pub(crate) fn validate(&self, index: usize) -> Result<(), ConfigError> {
        let name = format!("ris[{index}]");
        if self.elements == 0 || self.rows == 0 || self.cols == 0 {
            return Err(ConfigError::NonPositiveCount(format!("{name}.elements")));
        }
        if self.rows * self.cols != self.elements {
            return Err(ConfigError::invalid(
                format!("{name}.shape"),
                format!("{}x{} does not hold {}", self.rows, self.cols, self.elements),
            ));
        }
        if !(self.gain_exponent >= 0.0 && self.gain_exponent.is_finite()) {
            return Err(ConfigError::invalid(
                format!("{name}.gain_exponent"),
                "must be non-negative",
            ));
        }
        if !(self.spacing_wavelengths > 0.0 && self.spacing_wavelengths.is_finite()) {
            return Err(ConfigError::invalid(
                format!("{name}.spacing_wavelengths"),
                "must be positive",
            ));
        }
        check_position(&name, self.position)
    }
}

impl Aperture for RisSpec {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }

    fn centered(&self) -> bool {
        true
    }
}

fn check_position(name: &str, p: Point3) -> Result<(), ConfigError> {
    if !p.is_finite() {
        return Err(ConfigError::invalid(
            format!("{name}.position"),
            "coordinates must be finite",
        ));
    }
    if p.z < 0.0 {
        return Err(ConfigError::invalid(
            format!("{name}.position"),
            "z must be at or above the ground plane",
        ));
    }
    Ok(())
}

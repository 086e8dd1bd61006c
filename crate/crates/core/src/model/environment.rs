use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvironmentKind {
    #[serde(rename = "InH-IndoorOffice")]
    IndoorOffice,
    #[serde(rename = "UMi-StreetCanyon")]
    StreetCanyon,
}

impl FromStr for EnvironmentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inh" | "inh-indooroffice" | "indoor" | "indoor-office" => Ok(EnvironmentKind::IndoorOffice),
            "umi" | "umi-streetcanyon" | "outdoor" | "street-canyon" => Ok(EnvironmentKind::StreetCanyon),
            _ => Err(ConfigError::UnknownEnvironment(s.to_string())),
        }
    }
}

/// `PL_dB = intercept + distance_coef·log10(d) + frequency_coef·log10(f_GHz) + X_σ`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossCoefficients {
    pub intercept_db: f64,
    pub distance_coef: f64,
    pub frequency_coef: f64,
    pub shadow_sigma_db: f64,
}

impl PathLossCoefficients {
    /// Friis free-space loss, `(4π d f / c)²` in dB, without shadowing.
    pub fn free_space() -> Self {
        let c = super::SPEED_OF_LIGHT;
        PathLossCoefficients {
            intercept_db: 20.0 * (4.0 * std::f64::consts::PI * 1e9 / c).log10(),
            distance_coef: 20.0,
            frequency_coef: 20.0,
            shadow_sigma_db: 0.0,
        }
    }
}

/// Functional form of the LOS probability, parameters included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum LosProbabilityModel {
    /// 1 up to `near`, then `exp(-(d-near)/decay_near)` up to `breakpoint`,
    /// then `scale·exp(-(d-breakpoint)/decay_far)`.
    IndoorOffice {
        near: f64,
        decay_near: f64,
        breakpoint: f64,
        scale: f64,
        decay_far: f64,
    },
    /// `min(d1/d, 1) + exp(-d/d2)·(1 - min(d1/d, 1))`.
    StreetCanyon {
        d1: f64,
        d2: f64,
    },
    Always,
    Never,
}

impl LosProbabilityModel {
    pub fn evaluate(&self, d: f64) -> f64 {
        let p = match *self {
            LosProbabilityModel::IndoorOffice {
                near,
                decay_near,
                breakpoint,
                scale,
                decay_far,
            } => {
                if d <= near {
                    1.0
                } else if d < breakpoint {
                    (-(d - near) / decay_near).exp()
                } else {
                    scale * (-(d - breakpoint) / decay_far).exp()
                }
            }
            LosProbabilityModel::StreetCanyon { d1, d2 } => {
                let short = (d1 / d).min(1.0);
                short + (-d / d2).exp() * (1.0 - short)
            }
            LosProbabilityModel::Always => 1.0,
            LosProbabilityModel::Never => 0.0,
        };
        p.clamp(0.0, 1.0)
    }
}

/// How clusters are placed around the departing terminal. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterPlacement {
    /// Departure azimuth is drawn from ±this about broadside.
    pub azimuth_half_width_deg: f64,
    pub elevation_half_width_deg: f64,
    /// Scatterers deviate from their cluster direction by up to ±this.
    pub angular_spread_deg: f64,
}

impl Default for ClusterPlacement {
    fn default() -> Self {
        ClusterPlacement {
            azimuth_half_width_deg: 90.0,
            elevation_half_width_deg: 45.0,
            angular_spread_deg: 5.0,
        }
    }
}

/// Large-scale parameter table of one propagation environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub kind: EnvironmentKind,
    /// Mean of the Poisson cluster count.
    pub cluster_intensity: f64,
    pub min_scatterers: u32,
    pub max_scatterers: u32,
    pub los: PathLossCoefficients,
    pub nlos: PathLossCoefficients,
    pub los_probability: LosProbabilityModel,
    #[serde(default)]
    pub placement: ClusterPlacement,
}

impl Environment {
    pub fn preset(kind: EnvironmentKind) -> Self {
        match kind {
            EnvironmentKind::IndoorOffice => Environment::indoor_office(),
            EnvironmentKind::StreetCanyon => Environment::street_canyon(),
        }
    }

    pub fn indoor_office() -> Self {
        Environment {
            kind: EnvironmentKind::IndoorOffice,
            cluster_intensity: 1.8,
            min_scatterers: 1,
            max_scatterers: 30,
            los: PathLossCoefficients {
                intercept_db: 32.4,
                distance_coef: 17.3,
                frequency_coef: 20.0,
                shadow_sigma_db: 3.0,
            },
            nlos: PathLossCoefficients {
                intercept_db: 17.3,
                distance_coef: 38.3,
                frequency_coef: 24.9,
                shadow_sigma_db: 8.03,
            },
            los_probability: LosProbabilityModel::IndoorOffice {
                near: 1.2,
                decay_near: 4.7,
                breakpoint: 6.5,
                scale: 0.32,
                decay_far: 32.6,
            },
            placement: ClusterPlacement::default(),
        }
    }

    pub fn street_canyon() -> Self {
        Environment {
            kind: EnvironmentKind::StreetCanyon,
            cluster_intensity: 1.9,
            min_scatterers: 1,
            max_scatterers: 30,
            los: PathLossCoefficients {
                intercept_db: 32.4,
                distance_coef: 21.0,
                frequency_coef: 20.0,
                shadow_sigma_db: 4.0,
            },
            nlos: PathLossCoefficients {
                intercept_db: 22.4,
                distance_coef: 35.3,
                frequency_coef: 21.3,
                shadow_sigma_db: 7.82,
            },
            los_probability: LosProbabilityModel::StreetCanyon { d1: 18.0, d2: 36.0 },
            placement: ClusterPlacement::default(),
        }
    }

    pub fn coefficients(&self, los: bool) -> &PathLossCoefficients {
        if los {
            &self.los
        } else {
            &self.nlos
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.cluster_intensity > 0.0 && self.cluster_intensity.is_finite()) {
            return Err(ConfigError::invalid(
                "environment.cluster_intensity",
                "must be positive",
            ));
        }
        if self.min_scatterers < 1 {
            return Err(ConfigError::NonPositiveCount("environment.min_scatterers".into()));
        }
        if self.max_scatterers < self.min_scatterers {
            return Err(ConfigError::invalid(
                "environment.max_scatterers",
                "must not be below min_scatterers",
            ));
        }
        for (name, c) in [("los", &self.los), ("nlos", &self.nlos)] {
            if !(c.distance_coef > 0.0) || !(c.frequency_coef >= 0.0) {
                return Err(ConfigError::invalid(
                    format!("environment.{name}"),
                    "path-loss exponents must be positive",
                ));
            }
            if !(c.shadow_sigma_db >= 0.0) || !c.intercept_db.is_finite() {
                return Err(ConfigError::invalid(
                    format!("environment.{name}"),
                    "shadow sigma must be non-negative and intercept finite",
                ));
            }
        }
        let p = &self.placement;
        if !(p.azimuth_half_width_deg >= 0.0
            && p.elevation_half_width_deg >= 0.0
            && p.elevation_half_width_deg <= 90.0
            && p.angular_spread_deg >= 0.0)
        {
            return Err(ConfigError::invalid(
                "environment.placement",
                "angular widths must be non-negative, elevation at most 90°",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_aliases() {
        assert_eq!("InH".parse::<EnvironmentKind>().unwrap(), EnvironmentKind::IndoorOffice);
        assert_eq!(
            "UMi-StreetCanyon".parse::<EnvironmentKind>().unwrap(),
            EnvironmentKind::StreetCanyon
        );
        assert!(matches!(
            "RMa".parse::<EnvironmentKind>(),
            Err(ConfigError::UnknownEnvironment(_))
        ));
    }

    #[test]
    fn presets_validate() {
        Environment::indoor_office().validate().unwrap();
        Environment::street_canyon().validate().unwrap();
    }

    #[test]
    fn free_space_intercept() {
        // 20 log10(4π·1e9/c)
        let fs = PathLossCoefficients::free_space();
        assert!((fs.intercept_db - 32.4478).abs() < 1e-3);
    }
}

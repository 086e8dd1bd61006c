use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use super::{Aperture, ArraySpec, Axis, Environment, EnvironmentKind, Point3, RisPlane, RisSpec};
use crate::error::ConfigError;

/// m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Whether a link's LOS component exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkLosMode {
    /// Bernoulli draw from the environment's LOS probability.
    Auto,
    #[serde(alias = "forced-blocked")]
    Blocked,
    #[serde(alias = "forced-present")]
    Present,
}

pub type DirectPathMode = LinkLosMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RxOrientation {
    /// Receiver keeps its configured broadside.
    Fixed,
    /// Level receiver turned by a uniform random azimuth each realization.
    UniformAzimuth,
}

/// What RISs other than the optimized one do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InactiveRisMode {
    Absent,
    RandomPhases,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NearFieldPolicy {
    Warn,
    Error,
}

/// Complete description of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub environment: Environment,
    pub frequency_ghz: f64,
    pub tx: ArraySpec,
    pub rx: ArraySpec,
    pub ris: Vec<RisSpec>,
    #[serde(deserialize_with = "one_or_many")]
    pub pt_dbm: Vec<f64>,
    pub noise_dbm: f64,
    pub realizations: usize,
    pub seed: u64,
    pub direct_path: DirectPathMode,
    /// Keep scattered Tx-Rx paths when the direct LOS is blocked.
    pub direct_scattering_when_blocked: bool,
    /// LOS state of Tx-RIS and RIS-Rx links.
    pub ris_link_los: LinkLosMode,
    /// Include clustered (NLOS) paths in every link.
    pub scattering: bool,
    /// Tx-Rx paths reuse the scatterers drawn for Tx-RIS.
    pub shared_clusters: bool,
    pub rx_orientation: RxOrientation,
    pub inactive_ris: InactiveRisMode,
    pub near_field: NearFieldPolicy,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl SimConfig {
    /// Indoor office scene: Tx (0,25,2), Rx (45,45,1), RIS (40,50,2) on the
    /// xz-plane, 28 GHz, 4x4 UPAs, 64 RIS elements, direct path blocked.
    pub fn indoor() -> Self {
        SimConfig {
            environment: Environment::indoor_office(),
            frequency_ghz: 28.0,
            tx: ArraySpec::upa(4, Point3::new(0.0, 25.0, 2.0), Axis::PosX),
            rx: ArraySpec::upa(4, Point3::new(45.0, 45.0, 1.0), Axis::NegX),
            ris: vec![RisSpec::new(64, Point3::new(40.0, 50.0, 2.0), RisPlane::Xz)],
            pt_dbm: vec![40.0],
            noise_dbm: -100.0,
            realizations: 500,
            seed: 1,
            direct_path: LinkLosMode::Blocked,
            direct_scattering_when_blocked: false,
            ris_link_los: LinkLosMode::Present,
            scattering: true,
            shared_clusters: false,
            rx_orientation: RxOrientation::UniformAzimuth,
            inactive_ris: InactiveRisMode::Absent,
            near_field: NearFieldPolicy::Warn,
        }
    }

    /// Street canyon scene: Tx (0,25,20), Rx (50,50,1), RIS (40,60,10),
    /// 4-element ULAs.
    pub fn outdoor() -> Self {
        SimConfig {
            environment: Environment::street_canyon(),
            tx: ArraySpec::ula(4, Point3::new(0.0, 25.0, 20.0), Axis::PosX),
            rx: ArraySpec::ula(4, Point3::new(50.0, 50.0, 1.0), Axis::NegX),
            ris: vec![RisSpec::new(64, Point3::new(40.0, 60.0, 10.0), RisPlane::Xz)],
            ..SimConfig::indoor()
        }
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name.to_ascii_lowercase().as_str() {
            "indoor" | "inh" => Ok(SimConfig::indoor()),
            "outdoor" | "umi" => Ok(SimConfig::outdoor()),
            _ => Err(ConfigError::invalid(
                "scene",
                format!("unknown scene preset `{name}` (expected indoor or outdoor)"),
            )),
        }
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_ghz * 1e9
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz()
    }

    /// Parse a scenario table. Keys not given fall back to the scene named by
    /// `scene` (default `indoor`).
    pub fn from_toml_table(mut table: toml::Table) -> Result<Self, ConfigError> {
        let base = match table.remove("scene") {
            Some(toml::Value::String(s)) => SimConfig::preset(&s)?,
            Some(other) => return Err(ConfigError::invalid("scene", format!("expected a string, got {other}"))),
            None => SimConfig::indoor(),
        };
        let mut merged = toml::Table::try_from(&base).map_err(|e| ConfigError::Parse(e.to_string()))?;

        if let Some(env) = table.remove("environment") {
            merged.insert("environment".into(), environment_table(env)?);
        }
        for key in ["tx", "rx"] {
            if let Some(toml::Value::Table(over)) = table.get(key) {
                let resized = ["count", "shape", "rows", "cols", "layout"]
                    .iter()
                    .any(|k| over.contains_key(*k));
                if resized {
                    if let Some(toml::Value::Table(b)) = merged.get_mut(key) {
                        b.remove("rows");
                        b.remove("cols");
                    }
                }
            }
        }
        deep_merge(&mut merged, table);
        merged
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        SimConfig::from_toml_table(table)
    }
}

/// Expand `environment = "InH"` or `[environment] preset = "UMi" ...` into a
/// full parameter table.
fn environment_table(value: toml::Value) -> Result<toml::Value, ConfigError> {
    let to_value = |env: &Environment| toml::Value::try_from(env).map_err(|e| ConfigError::Parse(e.to_string()));
    match value {
        toml::Value::String(name) => to_value(&Environment::preset(name.parse()?)),
        toml::Value::Table(mut over) => {
            let named = over.remove("preset").or_else(|| over.remove("kind"));
            over.remove("kind");
            let kind: EnvironmentKind = match named {
                Some(toml::Value::String(s)) => s.parse()?,
                Some(_) => return Err(ConfigError::invalid("environment.preset", "expected a string")),
                None => EnvironmentKind::IndoorOffice,
            };
            let mut base = match to_value(&Environment::preset(kind))? {
                toml::Value::Table(t) => t,
                _ => unreachable!("environment serializes to a table"),
            };
            deep_merge(&mut base, over);
            Ok(toml::Value::Table(base))
        }
        other => Err(ConfigError::invalid(
            "environment",
            format!("expected a name or a table, got {other}"),
        )),
    }
}

fn deep_merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => deep_merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Hex SHA-256 of the canonical JSON form of `value`.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types serialize to JSON");
    hex::encode(Sha256::digest(&bytes))
}

/// A checked [`SimConfig`] with derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    config: SimConfig,
    wavelength: f64,
    pt_watts: Vec<f64>,
    noise_watts: f64,
    warnings: Vec<String>,
}

impl ValidatedConfig {
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn into_config(self) -> SimConfig {
        self.config
    }

    /// meters
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn pt_watts(&self) -> &[f64] {
        &self.pt_watts
    }

    pub fn noise_watts(&self) -> f64 {
        self.noise_watts
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn hash(&self) -> String {
        config_hash(&self.config)
    }
}

pub fn validate_config(cfg: SimConfig) -> Result<ValidatedConfig, ConfigError> {
    if cfg.realizations == 0 {
        return Err(ConfigError::NonPositiveCount("realizations".into()));
    }
    if cfg.realizations > u32::MAX as usize {
        return Err(ConfigError::invalid("realizations", "at most 2^32 - 1"));
    }
    if !(cfg.frequency_ghz > 0.0 && cfg.frequency_ghz.is_finite()) {
        return Err(ConfigError::invalid("frequency_ghz", "must be positive"));
    }
    cfg.environment.validate()?;
    cfg.tx.validate("tx")?;
    cfg.rx.validate("rx")?;
    for (i, ris) in cfg.ris.iter().enumerate() {
        ris.validate(i)?;
    }
    if cfg.ris.len() > usize::from(u16::MAX) {
        return Err(ConfigError::invalid("ris", "too many surfaces"));
    }
    if cfg.ris.is_empty() && cfg.direct_path == LinkLosMode::Blocked && !cfg.direct_scattering_when_blocked {
        return Err(ConfigError::invalid(
            "ris",
            "no RIS and a blocked direct path leave no channel",
        ));
    }
    if cfg.pt_dbm.is_empty() {
        return Err(ConfigError::EmptySweep("pt_dbm".into()));
    }
    if cfg.pt_dbm.iter().chain([&cfg.noise_dbm]).any(|v| !v.is_finite()) {
        return Err(ConfigError::invalid("pt_dbm/noise_dbm", "must be finite"));
    }

    let mut points = vec![("tx", cfg.tx.position), ("rx", cfg.rx.position)];
    points.extend(cfg.ris.iter().map(|r| ("ris", r.position)));
    for (i, (na, a)) in points.iter().enumerate() {
        for (nb, b) in &points[i + 1..] {
            if a.distance(*b) == 0.0 {
                return Err(ConfigError::invalid(
                    "position",
                    format!("{na} and {nb} coincide at {:?}", a.to_array()),
                ));
            }
        }
    }

    let wavelength = cfg.wavelength();
    let mut warnings = Vec::new();
    for (i, ris) in cfg.ris.iter().enumerate() {
        let diag = ris.aperture_diagonal(wavelength);
        let limit = 2.0 * diag * diag / wavelength;
        for (terminal, p) in [("tx", cfg.tx.position), ("rx", cfg.rx.position)] {
            let distance = p.distance(ris.position);
            if distance < limit {
                let violation = ConfigError::NearFieldViolation {
                    terminal: terminal.into(),
                    ris: i,
                    distance,
                    limit,
                };
                match cfg.near_field {
                    NearFieldPolicy::Error => return Err(violation),
                    NearFieldPolicy::Warn => {
                        log::warn!("{violation}; the far-field model may be inaccurate");
                        warnings.push(violation.to_string());
                    }
                }
            }
        }
        let antennas = cfg.tx.element_count().max(cfg.rx.element_count());
        if ris.elements < antennas {
            let msg = format!(
                "ris[{i}] has {} elements, fewer than the {antennas} antennas; the pseudoinverse phase rule works best with N >= max(Nt, Nr)",
                ris.elements
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    Ok(ValidatedConfig {
        wavelength,
        pt_watts: cfg.pt_dbm.iter().map(|&p| dbm_to_watts(p)).collect(),
        noise_watts: dbm_to_watts(cfg.noise_dbm),
        warnings,
        config: cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indoor_preset_accepted() {
        let v = validate_config(SimConfig::indoor()).unwrap();
        assert!(v.warnings().is_empty(), "{:?}", v.warnings());
        assert!((v.noise_watts() - 1e-13).abs() < 1e-25);
        assert!((v.pt_watts()[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn wavelength_at_28ghz() {
        let v = validate_config(SimConfig::indoor()).unwrap();
        assert!((v.wavelength() - 1.0714e-2).abs() / 1.0714e-2 < 1e-3);
        assert!((v.wavelength() * 28e9 - SPEED_OF_LIGHT).abs() < 1e-6);
    }

    #[test]
    fn zero_elements_rejected() {
        let mut cfg = SimConfig::indoor();
        cfg.ris[0] = cfg.ris[0].with_elements(0);
        assert!(matches!(validate_config(cfg), Err(ConfigError::NonPositiveCount(_))));
        let mut cfg = SimConfig::indoor();
        cfg.realizations = 0;
        assert!(matches!(validate_config(cfg), Err(ConfigError::NonPositiveCount(_))));
    }

    #[test]
    fn empty_power_sweep_rejected() {
        let mut cfg = SimConfig::indoor();
        cfg.pt_dbm.clear();
        assert!(matches!(validate_config(cfg), Err(ConfigError::EmptySweep(_))));
    }

    #[test]
    fn no_channel_rejected() {
        let mut cfg = SimConfig::indoor();
        cfg.ris.clear();
        assert!(validate_config(cfg.clone()).is_err());
        cfg.direct_path = LinkLosMode::Auto;
        assert!(validate_config(cfg).is_ok());
    }

    #[test]
    fn near_field_warns_or_fails() {
        let mut cfg = SimConfig::indoor();
        cfg.ris[0] = cfg.ris[0].with_elements(4096);
        // 64x64 at λ/2: diagonal ≈ 0.485 m, Fraunhofer ≈ 44 m > 7.14 m
        let v = validate_config(cfg.clone()).unwrap();
        assert!(v.warnings().iter().any(|w| w.contains("Fraunhofer")));
        cfg.near_field = NearFieldPolicy::Error;
        assert!(matches!(
            validate_config(cfg),
            Err(ConfigError::NearFieldViolation { .. })
        ));
    }

    #[test]
    fn revalidation_is_idempotent() {
        let v = validate_config(SimConfig::outdoor()).unwrap();
        let again = validate_config(v.config().clone()).unwrap();
        assert_eq!(v, again);
    }

    #[test]
    fn toml_overrides_preset() {
        let cfg = SimConfig::from_toml_str(
            r#"
            scene = "outdoor"
            seed = 7
            pt_dbm = 30
            environment = "UMi"
            [tx]
            count = 8
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.pt_dbm, vec![30.0]);
        assert_eq!(cfg.tx.element_count(), 8);
        assert_eq!(cfg.tx.position, Point3::new(0.0, 25.0, 20.0));
        assert_eq!(cfg.environment, Environment::street_canyon());
    }

    #[test]
    fn toml_environment_override() {
        let cfg = SimConfig::from_toml_str(
            r#"
            [environment]
            preset = "InH"
            cluster_intensity = 2.5
            [environment.los]
            shadow_sigma_db = 0.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.environment.cluster_intensity, 2.5);
        assert_eq!(cfg.environment.los.shadow_sigma_db, 0.0);
        assert_eq!(cfg.environment.los.distance_coef, 17.3);
    }

    #[test]
    fn toml_errors() {
        assert!(matches!(
            SimConfig::from_toml_str("environment = \"RMa\""),
            Err(ConfigError::UnknownEnvironment(_))
        ));
        assert!(SimConfig::from_toml_str("bogus_key = 1").is_err());
    }

    #[test]
    fn serialized_config_reparses() {
        let cfg = SimConfig::outdoor();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(SimConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn hash_tracks_fields() {
        let a = SimConfig::indoor();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        let mut c = a.clone();
        c.ris[0].gain_exponent = 0.3;
        assert_ne!(config_hash(&a), config_hash(&c));
    }
}

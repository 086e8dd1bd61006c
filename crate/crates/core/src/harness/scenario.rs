use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Campaign, GridSpec, Sweep, SweepAxis};
use crate::control::{PhaseAlgorithm, PhaseControl, PinvTarget};
use crate::error::{ConfigError, Error, Result};
use crate::model::SimConfig;

/// `[campaign]` table of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub axis: SweepAxis,
    /// Empty with `axis = "pt"` means the config's `pt_dbm`.
    pub values: Vec<f64>,
    pub algorithm: PhaseAlgorithm,
    pub target: PinvTarget,
    pub bits: Option<u8>,
    pub threads: Option<usize>,
}

impl Default for CampaignSection {
    fn default() -> Self {
        CampaignSection {
            axis: SweepAxis::Pt,
            values: Vec::new(),
            algorithm: PhaseAlgorithm::default(),
            target: PinvTarget::default(),
            bits: None,
            threads: None,
        }
    }
}

impl CampaignSection {
    pub fn control(&self) -> PhaseControl {
        PhaseControl {
            algorithm: self.algorithm,
            target: self.target,
            bits: self.bits,
        }
    }
}

/// A scenario file: simulation config plus the optional `[campaign]` and
/// `[coverage]` tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SimConfig,
    pub campaign: CampaignSection,
    pub coverage: GridSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            config: SimConfig::indoor(),
            campaign: CampaignSection::default(),
            coverage: GridSpec::default(),
        }
    }
}

fn section<T: for<'de> Deserialize<'de> + Default>(table: &mut toml::Table, key: &str) -> Result<T, ConfigError> {
    match table.remove(key) {
        None => Ok(T::default()),
        Some(v) => v
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(format!("[{key}]: {}", e.message()))),
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Scenario::from_toml_table(table)
    }

    pub fn from_toml_table(mut table: toml::Table) -> Result<Self, ConfigError> {
        let campaign = section(&mut table, "campaign")?;
        let coverage = section(&mut table, "coverage")?;
        Ok(Scenario {
            config: SimConfig::from_toml_table(table)?,
            campaign,
            coverage,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Scenario::from_toml_str(&text)?)
    }

    /// The statistics campaign described by `[campaign]`.
    pub fn campaign(&self) -> Result<Campaign, ConfigError> {
        let s = &self.campaign;
        let control = s.control();
        let campaign = match s.axis {
            SweepAxis::RxGrid => return self.coverage_campaign(),
            SweepAxis::Pt if s.values.is_empty() => Campaign::over_pt(self.config.clone(), control)?,
            axis => Campaign::new(self.config.clone(), Sweep::from_values(axis, &s.values)?, control)?,
        };
        Ok(campaign.with_threads(s.threads))
    }

    /// The grid campaign described by `[coverage]`, with the `[campaign]`
    /// phase settings.
    pub fn coverage_campaign(&self) -> Result<Campaign, ConfigError> {
        let campaign = Campaign::new(
            self.config.clone(),
            Sweep::RxGrid(self.coverage.clone()),
            self.campaign.control(),
        )?;
        Ok(campaign.with_threads(self.campaign.threads))
    }
}

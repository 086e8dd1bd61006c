//! Monte Carlo campaigns, coverage maps and result files.
//!
//! Every (sweep point, realization) or (cell, realization) pair is an
//! independent work unit with its own random substreams, so results do not
//! depend on the number of worker threads.

mod coverage;
mod export;
mod scenario;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_realization_at, PhaseVector};
use crate::control::{achievable_rate, baseline_phases, select_nearest, Baseline, PhaseControl};
use crate::error::{ConfigError, Result};
use crate::model::{
    config_hash, spawn_rng, validate_config, InactiveRisMode, LinkTag, Point3, SimConfig, ValidatedConfig,
};

pub use coverage::{coverage_map, CoverageCell, CoverageGrid, GridSpec};
pub use export::{dump_channels, read_coverage_csv, read_statistics_csv, write_coverage_csv, write_statistics_csv};
pub use scenario::{CampaignSection, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Transmit power in dBm.
    Pt,
    /// Elements per RIS.
    #[serde(alias = "n")]
    RisElements,
    /// Antennas at both Tx and Rx.
    #[serde(alias = "nt-nr")]
    Antennas,
    /// Receiver position over a grid.
    RxGrid,
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::Pt => "pt",
            SweepAxis::RisElements => "ris-elements",
            SweepAxis::Antennas => "antennas",
            SweepAxis::RxGrid => "rx-grid",
        })
    }
}

/// What a campaign varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "kebab-case")]
pub enum Sweep {
    Pt(Vec<f64>),
    RisElements(Vec<usize>),
    Antennas(Vec<usize>),
    RxGrid(GridSpec),
}

impl Sweep {
    pub fn axis(&self) -> SweepAxis {
        match self {
            Sweep::Pt(_) => SweepAxis::Pt,
            Sweep::RisElements(_) => SweepAxis::RisElements,
            Sweep::Antennas(_) => SweepAxis::Antennas,
            Sweep::RxGrid(_) => SweepAxis::RxGrid,
        }
    }

    /// Build a sweep from numeric values; counts must be whole numbers.
    pub fn from_values(axis: SweepAxis, values: &[f64]) -> Result<Self, ConfigError> {
        let counts = || {
            values
                .iter()
                .map(|&v| {
                    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                        Ok(v as usize)
                    } else {
                        Err(ConfigError::invalid("values", format!("{v} is not a positive count")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(match axis {
            SweepAxis::Pt => Sweep::Pt(values.to_vec()),
            SweepAxis::RisElements => Sweep::RisElements(counts()?),
            SweepAxis::Antennas => Sweep::Antennas(counts()?),
            SweepAxis::RxGrid => return Err(ConfigError::invalid("axis", "rx-grid sweeps take a grid, not values")),
        })
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Sweep::Pt(v) => v.clone(),
            Sweep::RisElements(v) | Sweep::Antennas(v) => v.iter().map(|&n| n as f64).collect(),
            Sweep::RxGrid(_) => Vec::new(),
        }
    }
}

/// A configuration plus what to sweep and how to set the RIS phases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Campaign {
    config: SimConfig,
    sweep: Sweep,
    control: PhaseControl,
    #[serde(skip)]
    threads: Option<usize>,
}

impl Campaign {
    pub fn new(config: SimConfig, sweep: Sweep, control: PhaseControl) -> Result<Self, ConfigError> {
        validate_config(config.clone())?;
        control.validate()?;
        match &sweep {
            Sweep::RxGrid(grid) => grid.validate()?,
            other => {
                let values = other.values();
                if values.is_empty() {
                    return Err(ConfigError::EmptySweep(other.axis().to_string()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(ConfigError::invalid("values", "sweep values must be finite"));
                }
                if values.windows(2).any(|w| w[0] > w[1]) {
                    return Err(ConfigError::invalid("values", "sweep values must be sorted ascending"));
                }
            }
        }
        if sweep.axis() != SweepAxis::Pt && config.pt_dbm.len() != 1 {
            return Err(ConfigError::invalid(
                "pt_dbm",
                format!("sweeping {} needs exactly one transmit power", sweep.axis()),
            ));
        }
        Ok(Campaign {
            config,
            sweep,
            control,
            threads: None,
        })
    }

    /// Campaign over the config's own transmit powers.
    pub fn over_pt(config: SimConfig, control: PhaseControl) -> Result<Self, ConfigError> {
        let mut values = config.pt_dbm.clone();
        values.sort_by(f64::total_cmp);
        Campaign::new(config, Sweep::Pt(values), control)
    }

    /// Worker threads; `None` uses the global pool.
    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn sweep(&self) -> &Sweep {
        &self.sweep
    }

    pub fn control(&self) -> PhaseControl {
        self.control
    }

    pub fn threads(&self) -> Option<usize> {
        self.threads
    }

    /// Hash of the config, sweep and control settings. Thread count is
    /// excluded since it never changes results.
    pub fn hash(&self) -> String {
        config_hash(self)
    }

    /// Validated configs per sweep point, each with the sweep values it covers.
    fn point_configs(&self) -> Result<Vec<(Vec<f64>, ValidatedConfig)>, ConfigError> {
        let with = |f: &dyn Fn(&mut SimConfig)| {
            let mut c = self.config.clone();
            f(&mut c);
            validate_config(c)
        };
        match &self.sweep {
            Sweep::Pt(values) => {
                let cfg = with(&|c| c.pt_dbm = values.clone())?;
                Ok(vec![(values.clone(), cfg)])
            }
            Sweep::RisElements(values) => values
                .iter()
                .map(|&n| {
                    let cfg = with(&|c| c.ris = c.ris.iter().map(|r| r.with_elements(n)).collect())?;
                    Ok((vec![n as f64], cfg))
                })
                .collect(),
            Sweep::Antennas(values) => values
                .iter()
                .map(|&n| {
                    let cfg = with(&|c| {
                        c.tx = c.tx.with_count(n);
                        c.rx = c.rx.with_count(n);
                    })?;
                    Ok((vec![n as f64], cfg))
                })
                .collect(),
            Sweep::RxGrid(_) => Err(ConfigError::invalid(
                "axis",
                "rx-grid campaigns run through coverage_map",
            )),
        }
    }
}

/// Summary of the rates at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub sweep_value: f64,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    pub p5: f64,
    pub p95: f64,
    pub n: usize,
    /// Per-realization rates in realization order.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl RatePoint {
    pub fn from_samples(sweep_value: f64, samples: Vec<f64>) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n.max(1) as f64;
        let std = if n > 1 {
            (samples.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        RatePoint {
            sweep_value,
            mean,
            std,
            p5: percentile(&sorted, 5.0),
            p95: percentile(&sorted, 95.0),
            n,
            samples,
        }
    }
}

/// Linear interpolation between closest ranks on sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStatistics {
    pub config_hash: String,
    pub axis: SweepAxis,
    pub points: Vec<RatePoint>,
}

/// Map `f` over `0..count` on `threads` workers, keeping index order.
pub(crate) fn run_units<T, F>(threads: Option<usize>, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let work = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| ConfigError::invalid("threads", e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Rates of one realization at `rx`, one per configured transmit power,
/// and the surface whose phases were optimized.
pub fn evaluate_realization(
    cfg: &ValidatedConfig,
    control: &PhaseControl,
    rx: Point3,
    realization: u64,
) -> Result<(Vec<f64>, Option<usize>)> {
    let c = cfg.config();
    let triple = draw_realization_at(cfg, rx, realization)?;
    let selected = if c.ris.is_empty() {
        None
    } else {
        Some(select_nearest(rx, c.ris.iter().map(|r| r.position))?)
    };

    let mut phases: Vec<(usize, PhaseVector)> = Vec::new();
    for (k, link) in triple.ris.iter().enumerate() {
        let mut rng = spawn_rng(c.seed, realization, LinkTag::Phases(k as u16));
        if Some(k) == selected {
            phases.push((k, control.phases(&link.h, &link.g, &triple.direct, &mut rng)?));
        } else if c.inactive_ris == InactiveRisMode::RandomPhases {
            phases.push((k, baseline_phases(Baseline::Random, link.h.nrows(), &mut rng)));
        }
    }
    let active: Vec<(usize, &PhaseVector)> = phases.iter().map(|(k, p)| (*k, p)).collect();
    let composite = triple.composite_of(&active)?;

    let noise = cfg.noise_watts();
    let rates = cfg
        .pt_watts()
        .iter()
        .map(|&pt| achievable_rate(&composite, pt, noise))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((rates, selected))
}

/// Mean, spread and percentiles of the achievable rate at every sweep point.
pub fn run_campaign(campaign: &Campaign) -> Result<RateStatistics> {
    let points = campaign.point_configs()?;
    let reps = campaign.config.realizations;
    let control = campaign.control;

    let units = run_units(campaign.threads, points.len() * reps, |i| {
        let (values, cfg) = &points[i / reps];
        let r = (i % reps) as u64;
        evaluate_realization(cfg, &control, cfg.config().rx.position, r)
            .map(|(rates, _)| rates)
            .map_err(|e| e.at(values[0], r))
    })?;

    let mut out = Vec::new();
    for (p, (values, _)) in points.iter().enumerate() {
        let block = &units[p * reps..(p + 1) * reps];
        for (j, &v) in values.iter().enumerate() {
            let samples: Vec<f64> = block.iter().map(|rates| rates[j]).collect();
            out.push(RatePoint::from_samples(v, samples));
        }
    }
    Ok(RateStatistics {
        config_hash: campaign.hash(),
        axis: campaign.sweep.axis(),
        points: out,
    })
}

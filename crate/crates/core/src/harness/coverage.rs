use serde::{Deserialize, Serialize};

use super::{evaluate_realization, run_units, Campaign, Sweep};
use crate::control::select_nearest;
use crate::error::{ConfigError, Result};
use crate::model::{validate_config, Point3};

/// Receiver positions `x0 + i·cell` for every `i` that stays within the range
/// (same in y), at height `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// meters
    pub cell: f64,
    /// Receiver height; the configured Rx height when absent.
    pub z: Option<f64>,
    /// Realizations per cell; the config's count when absent.
    pub realizations: Option<usize>,
}

impl Default for GridSpec {
    /// 75 m × 50 m floor at 1 m resolution.
    fn default() -> Self {
        GridSpec {
            x_range: [0.0, 75.0],
            y_range: [0.0, 50.0],
            cell: 1.0,
            z: None,
            realizations: None,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = self.x_range.iter().chain(&self.y_range).all(|v| v.is_finite());
        if !finite || self.x_range[0] > self.x_range[1] || self.y_range[0] > self.y_range[1] {
            return Err(ConfigError::invalid("grid", "ranges must be finite and ordered"));
        }
        if !(self.cell > 0.0 && self.cell.is_finite()) {
            return Err(ConfigError::invalid("grid.cell", "must be positive"));
        }
        if let Some(z) = self.z {
            if !(z >= 0.0 && z.is_finite()) {
                return Err(ConfigError::invalid("grid.z", "must be finite and non-negative"));
            }
        }
        if self.realizations == Some(0) {
            return Err(ConfigError::NonPositiveCount("grid.realizations".into()));
        }
        Ok(())
    }

    fn axis_points(range: [f64; 2], cell: f64) -> Vec<f64> {
        let count = ((range[1] - range[0]) / cell + 1e-9).floor() as usize + 1;
        (0..count).map(|i| range[0] + i as f64 * cell).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis_points(self.x_range, self.cell)
    }

    pub fn ys(&self) -> Vec<f64> {
        Self::axis_points(self.y_range, self.cell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub x: f64,
    pub y: f64,
    pub mean_rate: f64,
    /// Optimized surface; `None` when the scene has no RIS.
    pub ris_index: Option<usize>,
}

/// Mean rate per receiver position, `y` major and `x` minor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub config_hash: String,
    pub nx: usize,
    pub ny: usize,
    pub z: f64,
    pub cell: f64,
    pub realizations: usize,
    pub cells: Vec<CoverageCell>,
}

impl CoverageGrid {
    pub fn at(&self, ix: usize, iy: usize) -> &CoverageCell {
        &self.cells[iy * self.nx + ix]
    }
}

/// Move the receiver over the campaign's grid and average the rate at each
/// position. Realization `r` uses the same substreams in every cell.
pub fn coverage_map(campaign: &Campaign) -> Result<CoverageGrid> {
    let Sweep::RxGrid(grid) = campaign.sweep() else {
        return Err(ConfigError::invalid("axis", "coverage maps need an rx-grid sweep").into());
    };
    let cfg = validate_config(campaign.config().clone())?;
    let c = cfg.config();
    let z = grid.z.unwrap_or(c.rx.position.z);
    let reps = grid.realizations.unwrap_or(c.realizations);
    let (xs, ys) = (grid.xs(), grid.ys());
    let positions: Vec<Point3> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Point3::new(x, y, z)))
        .collect();
    let control = campaign.control();

    let rates = run_units(campaign.threads(), positions.len() * reps, |i| {
        let rx = positions[i / reps];
        let r = (i % reps) as u64;
        evaluate_realization(&cfg, &control, rx, r)
            .map(|(rates, _)| rates[0])
            .map_err(|e| e.at((i / reps) as f64, r))
    })?;

    let cells = positions
        .iter()
        .enumerate()
        .map(|(p, &rx)| {
            let block = &rates[p * reps..(p + 1) * reps];
            let ris_index = if c.ris.is_empty() {
                None
            } else {
                Some(select_nearest(rx, c.ris.iter().map(|r| r.position))?)
            };
            Ok(CoverageCell {
                x: rx.x,
                y: rx.y,
                mean_rate: block.iter().sum::<f64>() / reps as f64,
                ris_index,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CoverageGrid {
        config_hash: campaign.hash(),
        nx: xs.len(),
        ny: ys.len(),
        z,
        cell: grid.cell,
        realizations: reps,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::PhaseControl;
    use crate::harness::run_campaign;
    use crate::model::SimConfig;

    #[test]
    fn grid_points_are_inclusive() {
        let g = GridSpec {
            x_range: [0.0, 2.0],
            y_range: [1.0, 1.5],
            cell: 0.5,
            ..Default::default()
        };
        assert_eq!(g.xs(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.ys(), vec![1.0, 1.5]);
        let d = GridSpec::default();
        assert_eq!((d.xs().len(), d.ys().len()), (76, 51));
    }

    #[test]
    fn grid_validation() {
        let bad = GridSpec {
            cell: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let flipped = GridSpec {
            x_range: [3.0, 1.0],
            ..Default::default()
        };
        assert!(flipped.validate().is_err());
    }

    #[test]
    fn single_cell_matches_campaign() {
        let mut cfg = SimConfig::indoor();
        cfg.realizations = 6;
        let rx = cfg.rx.position;
        let grid = GridSpec {
            x_range: [rx.x, rx.x],
            y_range: [rx.y, rx.y],
            cell: 1.0,
            z: Some(rx.z),
            realizations: None,
        };
        let ctl = PhaseControl::default();
        let map = coverage_map(&Campaign::new(cfg.clone(), Sweep::RxGrid(grid), ctl).unwrap()).unwrap();
        assert_eq!(map.cells.len(), 1);
        let stats = run_campaign(&Campaign::new(cfg, Sweep::Pt(vec![40.0]), ctl).unwrap()).unwrap();
        assert!((map.cells[0].mean_rate - stats.points[0].mean).abs() < 1e-12);
        assert_eq!(map.cells[0].ris_index, Some(0));
    }
}

//! CSV results and channel dumps. Every file carries the hash of the
//! settings that produced it.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run_units, CoverageCell, CoverageGrid, RatePoint, RateStatistics, SweepAxis};
use crate::channel::{draw_realization, write_matrix, DumpManifest, DumpRealization, MatrixEntry};
use crate::error::{Error, Result};
use crate::model::ValidatedConfig;

#[derive(Serialize, Deserialize)]
struct StatRow {
    sweep_value: f64,
    mean_rate: f64,
    std: f64,
    p5: f64,
    p95: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct CellRow {
    x: f64,
    y: f64,
    mean_rate: f64,
    ris_index: Option<usize>,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Malformed {
            path: path.to_path_buf(),
            reason: format!("{other:?}"),
        },
    }
}

fn write_csv<R: Serialize>(path: &Path, meta: &[(&str, String)], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    for (k, v) in meta {
        writeln!(file, "# {k}: {v}").map_err(|e| Error::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `(key, value)` pairs from `# key: value` header lines.
type Meta = Vec<(String, String)>;

/// `# key: value` lines from the top of the file, then the data rows.
fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Meta, Vec<R>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut meta = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.split_once(':') {
            meta.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<R>, _>>()
        .map_err(|e| csv_error(path, e))?;
    Ok((meta, rows))
}

fn meta_value<T: std::str::FromStr>(path: &Path, meta: &[(String, String)], key: &str) -> Result<T> {
    meta.iter()
        .find(|(k, _)| k == key)
        .and_then(|(_, v)| v.parse().ok())
        .ok_or_else(|| Error::Malformed {
            path: path.to_path_buf(),
            reason: format!("missing or invalid `# {key}:` line"),
        })
}

/// `sweep_value,mean_rate,std,p5,p95,n`, one row per sweep point.
pub fn write_statistics_csv(path: &Path, stats: &RateStatistics) -> Result<()> {
    let meta = [
        ("config_hash", stats.config_hash.clone()),
        ("axis", stats.axis.to_string()),
    ];
    write_csv(
        path,
        &meta,
        stats.points.iter().map(|p| StatRow {
            sweep_value: p.sweep_value,
            mean_rate: p.mean,
            std: p.std,
            p5: p.p5,
            p95: p.p95,
            n: p.n,
        }),
    )
}

/// Reads a file written by [`write_statistics_csv`]; samples are not stored.
pub fn read_statistics_csv(path: &Path) -> Result<RateStatistics> {
    let (meta, rows) = read_csv::<StatRow>(path)?;
    let axis: String = meta_value(path, &meta, "axis")?;
    let axis: SweepAxis = serde_json::from_value(serde_json::Value::String(axis)).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(RateStatistics {
        config_hash: meta_value(path, &meta, "config_hash")?,
        axis,
        points: rows
            .into_iter()
            .map(|r| RatePoint {
                sweep_value: r.sweep_value,
                mean: r.mean_rate,
                std: r.std,
                p5: r.p5,
                p95: r.p95,
                n: r.n,
                samples: Vec::new(),
            })
            .collect(),
    })
}

/// `x,y,mean_rate,ris_index`, one row per cell.
pub fn write_coverage_csv(path: &Path, grid: &CoverageGrid) -> Result<()> {
    let meta = [
        ("config_hash", grid.config_hash.clone()),
        ("nx", grid.nx.to_string()),
        ("ny", grid.ny.to_string()),
        ("z", grid.z.to_string()),
        ("cell", grid.cell.to_string()),
        ("realizations", grid.realizations.to_string()),
    ];
    write_csv(
        path,
        &meta,
        grid.cells.iter().map(|c| CellRow {
            x: c.x,
            y: c.y,
            mean_rate: c.mean_rate,
            ris_index: c.ris_index,
        }),
    )
}

pub fn read_coverage_csv(path: &Path) -> Result<CoverageGrid> {
    let (meta, rows) = read_csv::<CellRow>(path)?;
    let grid = CoverageGrid {
        config_hash: meta_value(path, &meta, "config_hash")?,
        nx: meta_value(path, &meta, "nx")?,
        ny: meta_value(path, &meta, "ny")?,
        z: meta_value(path, &meta, "z")?,
        cell: meta_value(path, &meta, "cell")?,
        realizations: meta_value(path, &meta, "realizations")?,
        cells: rows
            .into_iter()
            .map(|r| CoverageCell {
                x: r.x,
                y: r.y,
                mean_rate: r.mean_rate,
                ris_index: r.ris_index,
            })
            .collect(),
    };
    if grid.cells.len() != grid.nx * grid.ny {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            reason: format!("{} rows for a {}x{} grid", grid.cells.len(), grid.nx, grid.ny),
        });
    }
    Ok(grid)
}

/// Draw realizations `0..count` and write `H{k}`, `G{k}` and `D` of each to
/// `dir`, plus `manifest.json`.
pub fn dump_channels(dir: &Path, cfg: &ValidatedConfig, count: usize, threads: Option<usize>) -> Result<DumpManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let triples = run_units(threads, count, |r| {
        draw_realization(cfg, r as u64).map_err(|e| e.at(0.0, r as u64))
    })?;

    let mut realizations = Vec::with_capacity(count);
    for t in &triples {
        let mut matrices = Vec::new();
        let mut put = |name: String, m: &crate::channel::CMatrix| -> Result<()> {
            let file = format!("r{:06}_{name}.bin", t.realization);
            write_matrix(&dir.join(&file), m)?;
            matrices.push(MatrixEntry {
                name,
                file,
                rows: m.nrows(),
                cols: m.ncols(),
            });
            Ok(())
        };
        for (k, link) in t.ris.iter().enumerate() {
            put(format!("H{k}"), &link.h)?;
            put(format!("G{k}"), &link.g)?;
        }
        put("D".into(), &t.direct)?;
        realizations.push(DumpRealization {
            realization: t.realization,
            matrices,
        });
    }
    let manifest = DumpManifest {
        config_hash: cfg.hash(),
        seed: cfg.config().seed,
        realizations,
    };
    manifest.write(dir)?;
    Ok(manifest)
}

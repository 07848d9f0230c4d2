//! Grid evaluation and CSV/JSON output.
//!
//! Cells are evaluated in parallel and written in row-major order over the
//! configured axes (first axis slowest), so output is identical across runs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bounds::{capacity_bounds, normalize_rate};
use crate::channel::{PhaseNoise, ThermalLossChannel};
use crate::compare::{self, LinkModel};
use crate::config::{AxisName, SweepConfig};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate, SourcePolicy};
use crate::rate::KeyRateResult;

/// Sentinel for cells where neither protocol yields a key.
pub const NEITHER: &str = "none";

/// Floats with 17 significant digits; infinities as `inf`/`-inf`.
pub fn format_float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// A rendered result grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Number of protocol evaluations that failed.
    pub failures: usize,
}

impl Table {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

/// One grid point with every parameter resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPoint {
    pub eta: f64,
    pub distance_km: f64,
    pub n_th: f64,
    pub sigma2: f64,
    pub squeezing_db: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct AxisMeta {
    name: &'static str,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct Metadata {
    tool: &'static str,
    version: &'static str,
    kind: String,
    config_sha256: String,
    axes: Vec<AxisMeta>,
    columns: Vec<String>,
    rows: usize,
}

pub fn config_hash(cfg: &SweepConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical_json().as_bytes()))
}

/// Axis names with their points, in configuration order.
fn axis_points(cfg: &SweepConfig) -> Result<Vec<(AxisName, Vec<f64>)>> {
    cfg.axes.iter().map(|a| Ok((a.name, a.points()?))).collect()
}

/// Cartesian product, first axis slowest.
fn cartesian(axes: &[(AxisName, Vec<f64>)]) -> Vec<BTreeMap<AxisName, f64>> {
    let mut cells = vec![BTreeMap::new()];
    for (name, values) in axes {
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |&v| {
                    let mut c = cell.clone();
                    c.insert(*name, v);
                    c
                })
            })
            .collect();
    }
    cells
}

fn resolve(cfg: &SweepConfig, cell: &BTreeMap<AxisName, f64>) -> Result<CellPoint> {
    let alpha = cfg.attenuation_db_per_km;
    let eta = match (cell.get(&AxisName::Eta), cell.get(&AxisName::DistanceKm)) {
        (Some(&eta), _) => eta,
        (None, Some(&d)) => LinkModel::new(alpha, d)?.eta(),
        (None, None) => cfg.fixed_eta()?,
    };
    let distance_km = match cell.get(&AxisName::DistanceKm) {
        Some(&d) => d,
        None => match cfg.distance_km {
            Some(d) if cfg.eta.is_none() && !cell.contains_key(&AxisName::Eta) => d,
            _ => LinkModel::distance_for_eta(eta, alpha).max(0.0),
        },
    };
    let squeezing_db = match (cell.get(&AxisName::SqueezingDb), cfg.source) {
        (Some(&db), _) => Some(db),
        (None, SourcePolicy::SqueezingDb(db)) => Some(db),
        (None, SourcePolicy::Mu(mu)) => Some(10.0 * mu.log10()),
        (None, SourcePolicy::OptimizeVa { .. }) => None,
    };
    Ok(CellPoint {
        eta,
        distance_km,
        n_th: cell.get(&AxisName::NTh).copied().unwrap_or(cfg.n_th),
        sigma2: cell.get(&AxisName::Sigma2).copied().unwrap_or(cfg.sigma2),
        squeezing_db,
    })
}

fn point_columns() -> Vec<String> {
    ["eta", "distance_km", "n_th", "sigma2", "squeezing_db"].map(String::from).to_vec()
}

fn point_values(p: &CellPoint) -> Vec<String> {
    vec![
        format_float(p.eta),
        format_float(p.distance_km),
        format_float(p.n_th),
        format_float(p.sigma2),
        opt_float(p.squeezing_db),
    ]
}

/// Rate every configured protocol on every grid cell. Per-protocol failures
/// are written into that protocol's `_error` column.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Table> {
    cfg.validate()?;
    let cells = cartesian(&axis_points(cfg)?);
    let with_tilde = cfg.protocols.contains(&cfg.compare.cv) && cfg.protocols.contains(&cfg.compare.dv);

    let mut header = point_columns();
    header.extend(["k_lower", "k_upper", "eb_breaking"].map(String::from));
    for p in &cfg.protocols {
        for suffix in ["raw", "rate", "param", "normalized", "error"] {
            header.push(format!("{p}_{suffix}"));
        }
    }
    if with_tilde {
        header.push("k_tilde".into());
    }

    let rows: Vec<(Vec<String>, usize)> =
        cells.par_iter().map(|cell| sweep_row(cfg, cell, with_tilde)).collect::<Result<_>>()?;
    let failures = rows.iter().map(|r| r.1).sum();
    Ok(Table { header, rows: rows.into_iter().map(|r| r.0).collect(), failures })
}

fn sweep_row(cfg: &SweepConfig, cell: &BTreeMap<AxisName, f64>, with_tilde: bool) -> Result<(Vec<String>, usize)> {
    let point = resolve(cfg, cell)?;
    let mut settings = cfg.settings();
    if let Some(db) = cell.get(&AxisName::SqueezingDb) {
        settings.source = SourcePolicy::SqueezingDb(*db);
    }
    let mut row = point_values(&point);
    let channel = ThermalLossChannel::new(point.eta, point.n_th);
    let phase = PhaseNoise::new(point.sigma2);
    let bounds = channel.as_ref().ok().map(capacity_bounds);
    row.push(opt_float(bounds.map(|b| b.lower)));
    row.push(opt_float(bounds.and_then(|b| b.upper)));
    row.push(bounds.map(|b| b.eb_breaking.to_string()).unwrap_or_default());

    let mut failures = 0;
    let mut results: BTreeMap<_, KeyRateResult> = BTreeMap::new();
    for &p in &cfg.protocols {
        let outcome = match (&channel, &phase) {
            (Ok(ch), Ok(pn)) => evaluate(p, ch, pn, &settings),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        };
        match outcome {
            Ok(r) => {
                let normalized = bounds.and_then(|b| normalize_rate(&r, &b).ok());
                row.extend([
                    format_float(r.raw_rate),
                    format_float(r.rate),
                    opt_float(r.optimal_param),
                    opt_float(normalized),
                    String::new(),
                ]);
                results.insert(p, r);
            }
            Err(e) => {
                failures += 1;
                row.extend([String::new(), String::new(), String::new(), String::new(), e.to_string()]);
            }
        }
    }
    if with_tilde {
        let tilde = match (results.get(&cfg.compare.cv), results.get(&cfg.compare.dv)) {
            (Some(cv), Some(dv)) => {
                compare::relative_rate_advantage(cv, dv).map(format_float).unwrap_or_else(|| NEITHER.into())
            }
            _ => String::new(),
        };
        row.push(tilde);
    }
    Ok((row, failures))
}

/// Which comparison map to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonKind {
    /// Relative rate advantage on every grid cell.
    RateMap,
    /// Tolerable thermal noise over `(sigma^2, distance)`.
    NoiseFrontier,
    /// Maximum distance over `(sigma^2, N)`.
    LossFrontier,
}

impl ComparisonKind {
    pub fn name(self) -> &'static str {
        match self {
            ComparisonKind::RateMap => "kmap",
            ComparisonKind::NoiseFrontier => "noise-frontier",
            ComparisonKind::LossFrontier => "loss-frontier",
        }
    }
}

fn advantage_cell(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_else(|| NEITHER.into())
}

/// Values of `name` from the grid, or the fixed value.
fn grid_or_fixed(cfg: &SweepConfig, name: AxisName, fixed: f64) -> Result<Vec<f64>> {
    match cfg.axis(name) {
        Some(axis) => axis.points(),
        None => Ok(vec![fixed]),
    }
}

fn reject_axes(cfg: &SweepConfig, kind: ComparisonKind, allowed: &[AxisName]) -> Result<()> {
    for axis in &cfg.axes {
        if !allowed.contains(&axis.name) {
            return Err(Error::Config(format!("{} does not take a {} axis", kind.name(), axis.name.column())));
        }
    }
    Ok(())
}

/// Build a comparison map between `cfg.compare.cv` and `cfg.compare.dv`.
/// Any failing cell aborts the run.
pub fn run_comparison(cfg: &SweepConfig, kind: ComparisonKind) -> Result<Table> {
    cfg.validate()?;
    let pair = cfg.comparison_pair();
    let (cv, dv) = (pair.cv.name(), pair.dv.name());
    match kind {
        ComparisonKind::RateMap => {
            let cells = cartesian(&axis_points(cfg)?);
            let mut header = point_columns();
            header.extend([format!("{cv}_rate"), format!("{dv}_rate"), "k_tilde".into()]);
            let rows = cells
                .par_iter()
                .map(|cell| {
                    let point = resolve(cfg, cell)?;
                    let mut settings = pair.cv_settings;
                    if let Some(db) = cell.get(&AxisName::SqueezingDb) {
                        settings.source = SourcePolicy::SqueezingDb(*db);
                    }
                    let ch = ThermalLossChannel::new(point.eta, point.n_th)?;
                    let pn = PhaseNoise::new(point.sigma2)?;
                    let k_cv = evaluate(pair.cv, &ch, &pn, &settings)?;
                    let k_dv = evaluate(pair.dv, &ch, &pn, &pair.dv_settings)?;
                    let mut row = point_values(&point);
                    row.extend([
                        format_float(k_cv.rate),
                        format_float(k_dv.rate),
                        advantage_cell(compare::relative_rate_advantage(&k_cv, &k_dv)),
                    ]);
                    Ok(row)
                })
                .collect::<Result<_>>()?;
            Ok(Table { header, rows, failures: 0 })
        }
        ComparisonKind::NoiseFrontier => {
            reject_axes(cfg, kind, &[AxisName::Sigma2, AxisName::DistanceKm, AxisName::Eta])?;
            let sigma2 = grid_or_fixed(cfg, AxisName::Sigma2, cfg.sigma2)?;
            let alpha = cfg.attenuation_db_per_km;
            let distances = match cfg.axis(AxisName::Eta) {
                Some(axis) => {
                    axis.points()?.into_iter().map(|e| LinkModel::distance_for_eta(e, alpha).max(0.0)).collect()
                }
                None => grid_or_fixed(
                    cfg,
                    AxisName::DistanceKm,
                    LinkModel::distance_for_eta(cfg.fixed_eta()?, alpha).max(0.0),
                )?,
            };
            let cells = compare::noise_frontier_map(&pair, &sigma2, &distances, cfg.k0, alpha)?;
            let header = vec![
                "sigma2".into(),
                "distance_km".into(),
                format!("{cv}_n_max"),
                format!("{dv}_n_max"),
                "n_tilde".into(),
            ];
            let rows = cells
                .iter()
                .map(|c| {
                    vec![
                        format_float(c.sigma2),
                        format_float(c.x),
                        format_float(c.cv),
                        format_float(c.dv),
                        advantage_cell(c.advantage),
                    ]
                })
                .collect();
            Ok(Table { header, rows, failures: 0 })
        }
        ComparisonKind::LossFrontier => {
            reject_axes(cfg, kind, &[AxisName::Sigma2, AxisName::NTh])?;
            let sigma2 = grid_or_fixed(cfg, AxisName::Sigma2, cfg.sigma2)?;
            let n_grid = grid_or_fixed(cfg, AxisName::NTh, cfg.n_th)?;
            let cells = compare::loss_frontier_map(&pair, &sigma2, &n_grid, cfg.k0, cfg.attenuation_db_per_km)?;
            let header = vec![
                "sigma2".into(),
                "n_th".into(),
                format!("{cv}_d_max_km"),
                format!("{dv}_d_max_km"),
                "l_tilde".into(),
            ];
            let rows = cells
                .iter()
                .map(|c| {
                    vec![
                        format_float(c.sigma2),
                        format_float(c.x),
                        format_float(c.cv),
                        format_float(c.dv),
                        advantage_cell(c.advantage),
                    ]
                })
                .collect();
            Ok(Table { header, rows, failures: 0 })
        }
    }
}

/// `<output>.meta.json` next to the CSV.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Write the CSV to `path` and its metadata beside it.
pub fn write_outputs(table: &Table, cfg: &SweepConfig, kind: &str, path: &Path) -> Result<()> {
    std::fs::write(path, table.to_csv()?)?;
    let meta = Metadata {
        tool: "keyrate",
        version: env!("CARGO_PKG_VERSION"),
        kind: kind.to_string(),
        config_sha256: config_hash(cfg),
        axes: axis_points(cfg)?.into_iter().map(|(name, values)| AxisMeta { name: name.column(), values }).collect(),
        columns: table.header.clone(),
        rows: table.rows.len(),
    };
    let mut file = std::fs::File::create(metadata_path(path))?;
    serde_json::to_writer_pretty(&mut file, &meta).map_err(|e| Error::Io(e.to_string()))?;
    file.write_all(b"\n")?;
    Ok(())
}

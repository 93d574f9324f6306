//! Executes a [`RunManifest`] and renders the result.

use std::fmt::Write as _;

use kerr_keldysh::exact_linear::{correlation_linear, sweep_drive_exact_with};
use kerr_keldysh::exact_twophoton::{correlation_twophoton, resonance_scan_with};
use kerr_keldysh::keldysh_ops::residual_for_params;
use kerr_keldysh::lindblad::adaptive_cutoff;
use kerr_keldysh::meanfield::sweep_drive_with;
use kerr_keldysh::par::try_map_points;
use kerr_keldysh::{Execution, ModelParams};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::manifest::{Command, Format, RunManifest};
use crate::{CliError, UsageError};

/// Cutoff-doubling tolerance of the Lindblad reference in `validate`.
const ORACLE_RTOL: f64 = 1e-8;
const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    F(f64),
    U(usize),
    B(bool),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits round-trip every double
            Cell::F(x) if x.is_nan() => "NaN".into(),
            Cell::F(x) => format!("{x:.16e}"),
            Cell::U(n) => n.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => json!(x),
            Cell::U(n) => json!(n),
            Cell::B(b) => json!(b),
            Cell::S(s) => json!(s),
        }
    }
}

/// A computed table, kept in memory until the whole run has succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    /// Comparisons in a validation report that missed the tolerance.
    pub failures: usize,
}

/// Rendered artifact plus anything worth echoing on stdout.
pub struct Artifact {
    pub text: String,
    pub stdout: Option<String>,
    pub failures: usize,
}

fn header_comment(manifest: &RunManifest) -> String {
    let mut line = format!("# kerr-keldysh {}", manifest.command.name());
    if let Some(params) = &manifest.params {
        for (k, v) in params {
            let _ = write!(line, " {k}={v}");
        }
    }
    if let Some(grid) = &manifest.grid {
        let _ = write!(
            line,
            " grid={}",
            serde_json::to_string(grid).unwrap_or_default()
        );
    }
    let opts = serde_json::to_value(&manifest.options).unwrap_or(Value::Null);
    if let Value::Object(m) = opts {
        for (k, v) in m.iter().filter(|(k, _)| *k != "points") {
            let _ = write!(line, " {k}={v}");
        }
    }
    line
}

fn render_table(manifest: &RunManifest, table: &Table) -> String {
    match manifest.format {
        Format::Csv => {
            let mut out = header_comment(manifest);
            out.push('\n');
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let results: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = table
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let doc = json!({ "manifest": manifest, "results": results });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
    }
}

pub fn execute(manifest: &RunManifest, exec: Execution) -> Result<Artifact, CliError> {
    if manifest.command == Command::Residual {
        return residual(manifest);
    }
    let table = match manifest.command {
        Command::MeanfieldSweep => meanfield(manifest, exec)?,
        Command::ExactSweep => exact(manifest, exec)?,
        Command::ResonanceScan => scan(manifest, exec)?,
        Command::Validate => validate(manifest, exec)?,
        Command::Residual => unreachable!(),
    };
    Ok(Artifact {
        text: render_table(manifest, &table),
        stdout: None,
        failures: table.failures,
    })
}

fn meanfield(m: &RunManifest, exec: Execution) -> Result<Table, CliError> {
    let params = m.model()?;
    let grid = m.grid_points()?;
    let sweep = sweep_drive_with(&params, &grid, exec)?;
    let mut rows = Vec::new();
    for point in &sweep {
        for (i, b) in point.branches.iter().enumerate() {
            rows.push(vec![
                Cell::F(point.omega),
                Cell::U(i),
                Cell::F(b.n),
                Cell::F(b.a0.re),
                Cell::F(b.a0.im),
                Cell::B(b.stable),
                Cell::B(b.degenerate),
            ]);
        }
    }
    Ok(Table {
        columns: vec![
            "omega",
            "branch_index",
            "n",
            "re_a0",
            "im_a0",
            "stable",
            "degenerate",
        ],
        rows,
        failures: 0,
    })
}

fn exact(m: &RunManifest, exec: Execution) -> Result<Table, CliError> {
    let params = m.model()?;
    let grid = m.grid_points()?;
    let extra = match (m.options.l, m.options.k) {
        (None, None) => None,
        (l, k) => Some((l.unwrap_or(1), k.unwrap_or(1))),
    };
    let pts = sweep_drive_exact_with(&params, &grid, extra, exec)?;
    let mut columns = vec!["omega", "n_exact", "re_a", "im_a", "g2"];
    if extra.is_some() {
        columns.extend(["re_corr", "im_corr"]);
    }
    let rows = pts
        .iter()
        .map(|p| {
            let mut row = vec![
                Cell::F(p.omega),
                Cell::F(p.photon_number),
                Cell::F(p.amplitude.re),
                Cell::F(p.amplitude.im),
                Cell::F(p.g2),
            ];
            if let Some(c) = p.extra {
                row.extend([Cell::F(c.re), Cell::F(c.im)]);
            }
            row
        })
        .collect();
    Ok(Table {
        columns,
        rows,
        failures: 0,
    })
}

fn scan(m: &RunManifest, exec: Execution) -> Result<Table, CliError> {
    // the grid supplies the detuning
    let params = m.model_with(&[("delta_c", 0.0)])?;
    let grid = m.grid_points()?;
    let scan = resonance_scan_with(&params, &grid, exec)?;
    let rows = scan
        .points
        .iter()
        .map(|p| {
            vec![
                Cell::F(p.delta_c_over_chi),
                Cell::F(p.photon_number),
                Cell::F(p.g2),
                Cell::B(p.is_peak),
            ]
        })
        .collect();
    Ok(Table {
        columns: vec!["delta_c_over_chi", "n_exact", "g2", "is_peak"],
        rows,
        failures: 0,
    })
}

struct ValidationPoint {
    id: String,
    params: ModelParams,
    observables: Vec<(usize, usize)>,
}

fn parse_point(index: usize, obj: &Map<String, Value>) -> Result<ValidationPoint, UsageError> {
    let id = match obj.get("id") {
        None => format!("p{index}"),
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
    };
    let params = ModelParams::from_json_map(obj, &["id", "observables"])
        .map_err(|e| UsageError(format!("point {id}: {e}")))?;
    let observables = match obj.get("observables") {
        None => vec![(1, 1)],
        Some(v) => serde_json::from_value::<Vec<(usize, usize)>>(v.clone()).map_err(|e| {
            UsageError(format!("point {id}: observables must be [l, k] pairs: {e}"))
        })?,
    };
    if observables.is_empty() {
        return Err(UsageError(format!("point {id}: empty observable list")));
    }
    Ok(ValidationPoint {
        id,
        params,
        observables,
    })
}

fn exact_moment(p: &ModelParams, l: usize, k: usize) -> kerr_keldysh::Result<Complex64> {
    if p.is_coherent_only() {
        Ok(correlation_linear(p, l, k)?.value)
    } else {
        Ok(correlation_twophoton(p, l, k)?.value)
    }
}

fn validate(m: &RunManifest, exec: Execution) -> Result<Table, CliError> {
    let tol = m.options.tol.unwrap_or(DEFAULT_TOL);
    if tol.is_nan() || tol <= 0.0 {
        return Err(UsageError(format!("--tol must be > 0, got {tol}")).into());
    }
    let raw = m
        .options
        .points
        .as_ref()
        .ok_or_else(|| UsageError("validate needs a list of points".into()))?;
    if raw.is_empty() {
        return Err(UsageError("empty point list".into()).into());
    }
    let points = raw
        .iter()
        .enumerate()
        .map(|(i, obj)| parse_point(i, obj))
        .collect::<Result<Vec<_>, _>>()?;

    let per_point = try_map_points(
        &points,
        exec,
        |pt| -> kerr_keldysh::Result<Vec<Vec<Cell>>> {
            let oracle = adaptive_cutoff(&pt.params, &pt.observables, ORACLE_RTOL)?;
            let mut rows = Vec::new();
            for (&(l, k), reference) in pt.observables.iter().zip(&oracle.values) {
                let value = exact_moment(&pt.params, l, k)?;
                let scale = value.norm().max(reference.norm());
                let rel = if scale == 0.0 {
                    0.0
                } else {
                    (value - reference).norm() / scale
                };
                let pass = rel <= tol;
                let name = format!("adag{l}_a{k}");
                let mut parts = vec![(format!("re_{name}"), value.re, reference.re)];
                if l != k {
                    parts.push((format!("im_{name}"), value.im, reference.im));
                }
                for (obs, e, o) in parts {
                    rows.push(vec![
                        Cell::S(pt.id.clone()),
                        Cell::S(obs),
                        Cell::F(e),
                        Cell::F(o),
                        Cell::F(rel),
                        Cell::U(oracle.cutoff),
                        Cell::B(pass),
                    ]);
                }
            }
            Ok(rows)
        },
    )?;
    let rows: Vec<Vec<Cell>> = per_point.into_iter().flatten().collect();
    let failures = rows.iter().filter(|r| r[6] == Cell::B(false)).count();
    Ok(Table {
        columns: vec![
            "point_id",
            "observable",
            "exact",
            "oracle",
            "rel_err",
            "cutoff",
            "pass",
        ],
        rows,
        failures,
    })
}

fn residual(m: &RunManifest) -> Result<Artifact, CliError> {
    let params = m.model()?;
    let need = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| UsageError(format!("residual needs {flag}")))
    };
    let cl = need(m.options.cutoff_cl, "--cutoff-cl")?;
    let q = need(m.options.cutoff_q, "--cutoff-q")?;
    let interior = need(m.options.interior, "--interior")?;
    if m.format == Format::Csv {
        return Err(UsageError("residual reports are JSON only".into()).into());
    }
    let r = residual_for_params(&params, cl, q, interior)?;
    let report = json!({
        "residual_norm": r.residual_norm,
        "edge_norm": r.edge_norm,
        "interior_cut": r.interior_cut,
        "cutoffs": [r.cutoffs.0, r.cutoffs.1],
        "state_norm": r.state_norm,
    });
    let mut doc = report.clone();
    doc["manifest"] = serde_json::to_value(m).expect("serializable");
    Ok(Artifact {
        text: serde_json::to_string_pretty(&doc).expect("serializable") + "\n",
        stdout: Some(report.to_string()),
        failures: 0,
    })
}

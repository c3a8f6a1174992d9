//! CSV interfaces: design/response ingestion, problem emission, trace and
//! ledger export, solution-path export, model-collection ingestion, and
//! certificate reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a given
//! input always produces byte-identical files.

use crate::aggregate::ModelCollection;
use crate::bounds::BoundLedger;
use crate::explicit::RegularizedSolution;
use crate::glm::{Design, GlmFamily, GlmProblem};
use crate::optim::IterateTrace;
use crate::risk::{CoverageReport, RiskCertificate};
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use std::io::Write;
use std::path::Path;

/// How the response column is identified in a data CSV.
#[derive(Debug, Clone)]
pub enum ColumnSelector {
    Name(String),
    Index(usize),
}

/// Ingestion spec for design/response CSV files: one sample per row, the
/// response in a caller-named column, every other column a feature. The
/// header row is optional, but selecting a column by name requires one.
#[derive(Debug, Clone)]
pub struct ProblemCsvSpec {
    pub has_header: bool,
    pub response: ColumnSelector,
    pub mean: Option<ColumnSelector>,
    pub family: GlmFamily,
}

fn resolve_column(
    selector: &ColumnSelector,
    headers: Option<&csv::StringRecord>,
    width: usize,
) -> Result<usize> {
    match selector {
        ColumnSelector::Index(i) => {
            if *i >= width {
                return Err(Error::Parse(format!("column index {i} out of range")));
            }
            Ok(*i)
        }
        ColumnSelector::Name(name) => {
            let headers = headers.ok_or_else(|| {
                Error::Parse("column selected by name but the file has no header".into())
            })?;
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Parse(format!("no column named `{name}`")))
        }
    }
}

/// Read a GLM problem from CSV. Columns other than the response (and
/// optional mean) become design columns in file order.
pub fn read_problem_csv(path: impl AsRef<Path>, spec: &ProblemCsvSpec) -> Result<GlmProblem<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(spec.has_header)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = if spec.has_header {
        Some(reader.headers()?.clone())
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number `{cell}`")))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Parse("ragged rows".into()));
    }

    let y_col = resolve_column(&spec.response, headers.as_ref(), width)?;
    let mean_col = spec
        .mean
        .as_ref()
        .map(|sel| resolve_column(sel, headers.as_ref(), width))
        .transpose()?;
    let feature_cols: Vec<usize> = (0..width)
        .filter(|j| *j != y_col && Some(*j) != mean_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Parse("no feature columns left".into()));
    }

    let n = rows.len();
    let x = Array2::from_shape_fn((n, feature_cols.len()), |(i, j)| rows[i][feature_cols[j]]);
    let y = Array1::from_shape_fn(n, |i| rows[i][y_col]);
    let mean = mean_col.map(|mc| Array1::from_shape_fn(n, |i| rows[i][mc]));
    GlmProblem::new(Design::new(x)?, y, spec.family, mean)
}

/// Emit a problem as CSV with columns `x0..x{d-1}, y[, mu]`, consumable by
/// [`read_problem_csv`].
pub fn write_problem_csv(path: impl AsRef<Path>, problem: &GlmProblem<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let d = problem.d();
    let mut header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    if problem.mean_truth.is_some() {
        header.push("mu".into());
    }
    w.write_record(&header)?;
    for i in 0..problem.n() {
        let mut row: Vec<String> = (0..d)
            .map(|j| problem.design.matrix()[[i, j]].to_string())
            .collect();
        row.push(problem.response[i].to_string());
        if let Some(mu) = &problem.mean_truth {
            row.push(mu[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a true-parameter vector as `coord,value` rows.
pub fn write_theta_csv(path: impl AsRef<Path>, theta: &Array1<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["coord", "value"])?;
    for (j, v) in theta.iter().enumerate() {
        w.write_record([j.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Trace export: `t, tau, objective` and optionally the flattened iterate.
pub fn write_trace_csv(
    path: impl AsRef<Path>,
    trace: &IterateTrace<f64>,
    include_theta: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let d = trace.initial_theta().len();
    let mut header = vec!["t".to_string(), "tau".to_string(), "objective".to_string()];
    if include_theta {
        header.extend((0..d).map(|j| format!("theta{j}")));
    }
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.t.to_string(), r.tau.to_string(), r.objective.to_string()];
        if include_theta {
            row.extend(r.theta.iter().map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Ledger export: `T, tau, z_id, lhs, rhs, gap`.
pub fn write_ledger_csv(path: impl AsRef<Path>, ledger: &BoundLedger<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["T", "tau", "z_id", "lhs", "rhs", "gap"])?;
    for r in &ledger.rows {
        w.write_record([
            r.t.to_string(),
            r.tau.to_string(),
            r.z_id.to_string(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.gap.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Path export: `lambda, objective, penalty, converged` plus the flattened
/// solution vector.
pub fn write_path_csv(path: impl AsRef<Path>, solutions: &[RegularizedSolution<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let d = solutions.first().map(|s| s.theta_hat.len()).unwrap_or(0);
    let mut header = vec![
        "lambda".to_string(),
        "objective".to_string(),
        "penalty".to_string(),
        "converged".to_string(),
    ];
    header.extend((0..d).map(|j| format!("theta{j}")));
    w.write_record(&header)?;
    for s in solutions {
        let mut row = vec![
            s.lambda.to_string(),
            s.objective_value.to_string(),
            s.penalty_value.to_string(),
            s.converged.to_string(),
        ];
        row.extend(s.theta_hat.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Model-collection ingestion: columns `model_id, empirical_risk` plus
/// optional `population_risk` and `prior_weight` (recognized by header name).
pub fn read_collection_csv(path: impl AsRef<Path>) -> Result<ModelCollection<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let risk_col = col("empirical_risk")
        .ok_or_else(|| Error::Parse("missing `empirical_risk` column".into()))?;
    let pop_col = col("population_risk");
    let prior_col = col("prior_weight");

    let mut empirical = Vec::new();
    let mut population = Vec::new();
    let mut prior = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .ok_or_else(|| Error::Parse("short row".into()))?
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{}`", &record[idx])))
        };
        empirical.push(parse(risk_col)?);
        if let Some(pc) = pop_col {
            population.push(parse(pc)?);
        }
        if let Some(pc) = prior_col {
            prior.push(parse(pc)?);
        }
    }
    let empirical = Array1::from_vec(empirical);
    let population = if population.is_empty() {
        None
    } else {
        Some(Array1::from_vec(population))
    };
    let prior = if prior.is_empty() {
        None
    } else {
        // Prior weights are normalized on ingestion.
        let mut p = Array1::from_vec(prior);
        let s = p.sum();
        if s <= 0.0 {
            return Err(Error::Parse("prior weights must have positive sum".into()));
        }
        p.mapv_inplace(|v| v / s);
        Some(p)
    };
    ModelCollection::new(empirical, population, prior)
}

/// Certificate report rows as CSV (one certificate per row).
pub fn write_certificates_csv(
    path: impl AsRef<Path>,
    certificates: &[RiskCertificate<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record([
        "kind",
        "sigma",
        "delta",
        "b",
        "trace",
        "frobenius",
        "operator",
        "column_factor",
        "lambda_star",
        "eta",
        "stopping_time",
        "bound_value",
        "discretization_extra",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for cert in certificates {
        w.write_record([
            cert.kind.name().to_string(),
            cert.sigma.to_string(),
            cert.delta.to_string(),
            cert.b.to_string(),
            opt(cert.spectral.map(|s| s.trace)),
            opt(cert.spectral.map(|s| s.frobenius)),
            opt(cert.spectral.map(|s| s.operator)),
            opt(cert.column_factor),
            cert.lambda_star.to_string(),
            opt(cert.eta),
            cert.stopping_time.map(|t| t.to_string()).unwrap_or_default(),
            cert.bound_value.to_string(),
            cert.discretization_extra.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Coverage reports as CSV.
pub fn write_coverage_csv(path: impl AsRef<Path>, reports: &[CoverageReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record([
        "check",
        "replicates",
        "violations",
        "rate",
        "target",
        "standard_error",
        "passes",
    ])?;
    for r in reports {
        w.write_record([
            r.check.to_string(),
            r.replicates.to_string(),
            r.violations.to_string(),
            r.rate.to_string(),
            r.target.to_string(),
            r.standard_error.to_string(),
            r.passes().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write arbitrary rows as CSV; the generic hook for driver outputs.
pub fn write_rows_csv(
    path: impl AsRef<Path>,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut file = std::fs::File::create(path.as_ref())?;
    writeln!(file, "{}", header.join(","))?;
    for row in rows {
        writeln!(file, "{}", row.join(","))?;
    }
    file.flush()?;
    Ok(())
}

//! `apply`: Δ_λ^σ f on the configured grid.

use std::io::Write;

use besselfrac::operators::{frac_power_many, route_hypotheses, RouteTag};
use serde::Serialize;

use crate::config::{FnChoice, Format, RouteChoice, RunConfig};
use crate::error::{CliError, ExitStatus, Numerical};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApplyRow {
    pub x: f64,
    pub route: &'static str,
    pub value: f64,
    pub err_est: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rel_delta: Option<f64>,
}

/// The rows of an `apply` run and whether every point converged.
pub fn compute(cfg: &RunConfig) -> Result<(Vec<ApplyRow>, bool), CliError> {
    let p = cfg.params();
    let u = cfg.input(FnChoice::Phi)?;
    let routes: Vec<RouteTag> = match cfg.route {
        RouteChoice::One(r) => {
            r.admissible(p.sigma(), &u)?;
            vec![r]
        }
        RouteChoice::All => {
            let mut ok = Vec::new();
            for r in RouteTag::ALL {
                match r.admissible(p.sigma(), &u) {
                    Ok(()) => ok.push(r),
                    Err(e) => eprintln!("note: skipping route {r}: {e}"),
                }
            }
            ok
        }
    };
    if routes.is_empty() {
        return Err(CliError::Precondition("no admissible route for this input".into()));
    }
    let mut warnings = Vec::new();
    if u.is_sampled() && routes.contains(&RouteTag::Spectral) {
        warnings.push("sampled input: the spectral route assumes an analytically decaying function".to_string());
    }
    for &r in &routes {
        warnings.extend(
            route_hypotheses(&p, &u, r, &cfg.spec)
                .into_iter()
                .map(|w| format!("{r}: {w}")),
        );
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if cfg.strict && !warnings.is_empty() {
        return Err(CliError::Precondition(format!(
            "{} hypothesis warning(s) under --strict",
            warnings.len()
        )));
    }

    let xs = cfg.grid.nodes();
    let mut converged = true;
    let mut columns = Vec::with_capacity(routes.len());
    for &r in &routes {
        let vals = frac_power_many(&p, &u, xs, r, &cfg.spec)?;
        let mut col = Vec::with_capacity(xs.len());
        for (x, v) in xs.iter().zip(vals) {
            match v {
                Ok(v) => col.push((v.value, v.err_est)),
                Err(e) if e.is_numerical() => {
                    eprintln!("warning: {r} at x = {x}: {e}");
                    converged = false;
                    col.push((f64::NAN, f64::NAN));
                }
                Err(e) => return Err(e.into()),
            }
        }
        columns.push(col);
    }

    let mut rows = Vec::with_capacity(xs.len() * routes.len());
    for (i, &x) in xs.iter().enumerate() {
        let delta = (routes.len() > 1).then(|| max_rel_delta(columns.iter().map(|c| c[i].0)));
        for (r, col) in routes.iter().zip(&columns) {
            rows.push(ApplyRow {
                x,
                route: r.name(),
                value: col[i].0,
                err_est: col[i].1,
                max_rel_delta: delta,
            });
        }
    }
    Ok((rows, converged))
}

/// Largest pairwise |a − b|/max(|a|, |b|); NaN if any value is missing.
pub fn max_rel_delta(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.iter().any(|x| !x.is_finite()) {
        return f64::NAN;
    }
    let mut worst: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let s = v[i].abs().max(v[j].abs());
            if s > 0.0 {
                worst = worst.max((v[i] - v[j]).abs() / s);
            }
        }
    }
    worst
}

pub fn run(cfg: &RunConfig) -> Result<ExitStatus, CliError> {
    let (rows, converged) = compute(cfg)?;
    let mut out = crate::open_output(cfg.output.as_deref())?;
    match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &rows)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(if converged {
        ExitStatus::Ok
    } else {
        ExitStatus::NotConverged
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_delta() {
        assert_eq!(max_rel_delta([1.0, 1.0].into_iter()), 0.0);
        assert!((max_rel_delta([1.0, 1.1, 0.9].into_iter()) - 0.2 / 1.1).abs() < 1e-15);
        assert!(max_rel_delta([1.0, f64::NAN].into_iter()).is_nan());
    }
}

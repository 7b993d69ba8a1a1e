//! `dump`: kernel surfaces and transforms as CSV.

use std::io::Write;

use besselfrac::grid::{OperatorParams, RealFn};
use besselfrac::kernels::{classical_poisson, gauss_weierstrass, heat_kernel, k_sigma, poisson_kernel, KernelError};
use besselfrac::quad::QuadratureSpec;
use besselfrac::transforms::hankel;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DumpKind, FnChoice, Format, RunConfig};
use crate::error::{CliError, ExitStatus, Numerical};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelRow {
    pub lambda: f64,
    pub sigma: f64,
    pub t: Option<f64>,
    pub x: f64,
    pub y: f64,
    pub kind: &'static str,
    pub value: f64,
    pub err_est: f64,
    /// λ = 1 closed form for W and P, the |x − y|^{−1−2σ} envelope for K
    pub reference: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformRow {
    pub lambda: f64,
    pub x: f64,
    pub value: f64,
    pub err_est: f64,
}

fn kernel_row(
    kind: DumpKind,
    p: &OperatorParams,
    t: f64,
    x: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> Result<KernelRow, KernelError> {
    let (name, eval, reference, t) = match kind {
        DumpKind::Heat => {
            let r = (p.lambda() == 1.0).then(|| gauss_weierstrass(t, x - y) - gauss_weierstrass(t, x + y));
            ("heat", heat_kernel(p, t, x, y)?, r, Some(t))
        }
        DumpKind::Poisson => {
            let r = (p.lambda() == 1.0).then(|| classical_poisson(t, x - y) - classical_poisson(t, x + y));
            ("poisson", poisson_kernel(p, t, x, y, spec)?, r, Some(t))
        }
        DumpKind::Ksigma => {
            let r = Some((x - y).abs().powf(-1.0 - 2.0 * p.sigma()));
            ("ksigma", k_sigma(p, x, y, spec)?, r, None)
        }
        DumpKind::Transform => unreachable!("transform rows are built separately"),
    };
    Ok(KernelRow {
        lambda: p.lambda(),
        sigma: p.sigma(),
        t,
        x,
        y,
        kind: name,
        value: eval.value,
        err_est: eval.err_est,
        reference,
        ratio: reference.map(|r| eval.value / r),
    })
}

fn nan_row(kind: DumpKind, p: &OperatorParams, t: f64, x: f64, y: f64) -> KernelRow {
    let name = match kind {
        DumpKind::Heat => "heat",
        DumpKind::Poisson => "poisson",
        _ => "ksigma",
    };
    KernelRow {
        lambda: p.lambda(),
        sigma: p.sigma(),
        t: (kind != DumpKind::Ksigma).then_some(t),
        x,
        y,
        kind: name,
        value: f64::NAN,
        err_est: f64::NAN,
        reference: None,
        ratio: None,
    }
}

/// Heat and Poisson: the (x, y) surface at fixed t. K_σ: the y-profile at
/// fixed x, skipping the diagonal.
pub fn kernel_rows(kind: DumpKind, cfg: &RunConfig) -> Result<(Vec<KernelRow>, bool), CliError> {
    let p = cfg.params();
    let nodes = cfg.grid.nodes();
    let pairs: Vec<(f64, f64)> = match kind {
        DumpKind::Ksigma => nodes.iter().filter(|&&y| y != cfg.x).map(|&y| (cfg.x, y)).collect(),
        _ => nodes.iter().flat_map(|&x| nodes.iter().map(move |&y| (x, y))).collect(),
    };
    let results: Vec<Result<KernelRow, KernelError>> = pairs
        .par_iter()
        .map(|&(x, y)| kernel_row(kind, &p, cfg.t, x, y, &cfg.spec))
        .collect();
    let mut converged = true;
    let mut rows = Vec::with_capacity(results.len());
    for (r, &(x, y)) in results.into_iter().zip(&pairs) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) if e.is_numerical() => {
                eprintln!("warning: x = {x}, y = {y}: {e}");
                converged = false;
                rows.push(nan_row(kind, &p, cfg.t, x, y));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((rows, converged))
}

/// h_λ f on the grid; the default input is φ_{λ,a}.
pub fn transform_rows(cfg: &RunConfig) -> Result<(Vec<TransformRow>, bool), CliError> {
    let f = cfg.input(FnChoice::Phi)?;
    if !f.decaying() {
        return Err(CliError::Precondition(
            "the Hankel transform needs a decaying input".into(),
        ));
    }
    let nodes = cfg.grid.nodes();
    let results: Vec<_> = nodes
        .par_iter()
        .map(|&x| hankel(cfg.lambda, &f, x, &cfg.spec))
        .collect();
    let mut converged = true;
    let mut rows = Vec::with_capacity(nodes.len());
    for (r, &x) in results.into_iter().zip(nodes) {
        let value = match r {
            Ok(v) => v,
            Err(e) if e.is_numerical() => {
                eprintln!("warning: x = {x}: {e}");
                converged = false;
                f64::NAN
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(TransformRow {
            lambda: cfg.lambda,
            x,
            value,
            err_est: cfg.spec.abs_tol.max(cfg.spec.rel_tol * value.abs()),
        });
    }
    Ok((rows, converged))
}

fn write_rows<T: Serialize>(cfg: &RunConfig, rows: &[T]) -> Result<(), CliError> {
    let mut out = crate::open_output(cfg.output.as_deref())?;
    match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn run(kind: DumpKind, cfg: &RunConfig) -> Result<ExitStatus, CliError> {
    let converged = match kind {
        DumpKind::Transform => {
            let (rows, ok) = transform_rows(cfg)?;
            write_rows(cfg, &rows)?;
            ok
        }
        _ => {
            let (rows, ok) = kernel_rows(kind, cfg)?;
            write_rows(cfg, &rows)?;
            ok
        }
    };
    Ok(if converged {
        ExitStatus::Ok
    } else {
        ExitStatus::NotConverged
    })
}

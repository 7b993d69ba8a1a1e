//! `holder` and `carleson`: the two characterizing quantities of a
//! Hölder function.

use std::io::Write;

use besselfrac::analysis::{carleson_norm, default_t_set, poisson_holder_ratio};
use serde_json::json;

use crate::config::{FnChoice, Format, RunConfig};
use crate::error::{CliError, ExitStatus};

pub fn holder(cfg: &RunConfig) -> Result<ExitStatus, CliError> {
    let p = cfg.params();
    let f = cfg.input(FnChoice::Holder)?;
    let ts = default_t_set(if cfg.quick { 5 } else { 13 });
    let r = poisson_holder_ratio(&p, cfg.beta, cfg.alpha, &f, cfg.grid.nodes(), &ts, &cfg.spec)?;
    eprintln!(
        "sup over x and t of |t^beta d_t^beta P_t f|/t^alpha = {:.6e} (beta = {}, alpha = {})",
        r.sup, cfg.beta, cfg.alpha
    );
    let mut out = crate::open_output(cfg.output.as_deref())?;
    match cfg.format {
        Format::Csv => out.write_all(r.to_csv().as_bytes())?,
        Format::Json => {
            let v = json!({
                "beta": cfg.beta,
                "alpha": cfg.alpha,
                "sup": r.sup,
                "per_t": r.per_t.iter().map(|(t, v)| json!({"t": t, "sup_x_ratio": v})).collect::<Vec<_>>(),
            });
            serde_json::to_writer_pretty(&mut out, &v)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(ExitStatus::Ok)
}

pub fn carleson(cfg: &RunConfig) -> Result<ExitStatus, CliError> {
    let p = cfg.params();
    let f = cfg.input(FnChoice::Holder)?;
    let r = carleson_norm(&p, cfg.beta, cfg.alpha, &f, &cfg.family, &cfg.spec)?;
    let normalized = r.normalized_sup(cfg.alpha);
    eprintln!(
        "sup of box integrals = {:.6e} at I = ({}, {}); with |I|^(-2 alpha) weight {:.6e}",
        r.sup, r.argmax.0, r.argmax.1, normalized
    );
    let mut out = crate::open_output(cfg.output.as_deref())?;
    match cfg.format {
        Format::Csv => out.write_all(r.to_csv().as_bytes())?,
        Format::Json => {
            let v = json!({
                "beta": cfg.beta,
                "alpha": cfg.alpha,
                "sup": r.sup,
                "argmax": [r.argmax.0, r.argmax.1],
                "normalized_sup": normalized,
                "boxes": r.boxes.iter().map(|(lo, hi, v)| json!({
                    "interval_lo": lo, "interval_hi": hi, "box_integral": v
                })).collect::<Vec<_>>(),
            });
            serde_json::to_writer_pretty(&mut out, &v)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(ExitStatus::Ok)
}

//! Run configuration: command-line flags layered over an optional JSON file.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

/// Options shared by every subcommand. Each has a JSON key of the same name
/// (snake case, `Cstrip` kept) in `--config` files; flags win.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Shipped family (see `pss catalog`).
    #[arg(long, conflicts_with = "family")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Family spec file (JSON).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<PathBuf>,
    /// Sign of the family's ± choice.
    #[arg(long, value_parser = parse_sign, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i32>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Sign of a in the immersion triple.
    #[arg(long = "a-sign", value_parser = parse_sign, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_sign: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Strip constant of the λ = 0 branch.
    #[arg(long = "Cstrip")]
    #[serde(rename = "Cstrip", default, skip_serializing_if = "Option::is_none")]
    pub c_strip: Option<f64>,
    /// Strip constant of the C-shifted branch.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Initial value of b for the b-ODE.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    /// Start point of the b-ODE.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    /// RK4 step of the b-ODE.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Half-length of the b-ODE march.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    /// Grid as NXxNT.
    #[arg(long, value_parser = parse_grid)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<(usize, usize)>,
    /// x0,x1,t0,t1 for reconstruction.
    #[arg(long, value_parser = parse_domain, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 4]>,
    /// Use the exact one-soliton (sine-Gordon only).
    #[arg(long, action = clap::ArgAction::SetTrue)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soliton: Option<bool>,
    /// Closed-form solution u(x, t) to reconstruct over.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<String>,
    /// PSSF field file to reconstruct over.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    /// Initial data u0(x) for the third-order march.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<String>,
    #[arg(long = "t-max")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// RK4 steps per mesh cell in reconstruction.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
    /// Main output (CSV, PSSF or OBJ depending on the command).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// CSV export of a marched field.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// JSON report path (standard output when absent).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Leave timestamps, timings and thread counts out of the report.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,
    /// JSON file with any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn parse_sign(s: &str) -> Result<i32, String> {
    match s {
        "+" | "+1" | "1" => Ok(1),
        "-" | "-1" => Ok(-1),
        _ => Err(format!("expected + or -, got `{s}`")),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NXxNT, got `{s}`"))?;
    let n = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((n(a)?, n(b)?))
}

fn parse_domain(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"))).collect::<Result<_, _>>()?;
    <[f64; 4]>::try_from(v).map_err(|v| format!("expected x0,x1,t0,t1, got {} values", v.len()))
}

macro_rules! layer {
    ($dst:ident, $src:ident; $($f:ident),*) => { $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )* };
}

impl RunConfig {
    /// Read `--config` (if any) and lay the flags over it.
    pub fn resolve(flags: RunConfig) -> Result<RunConfig, String> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => RunConfig::default(),
        };
        layer!(cfg, flags; preset, family, sign, samples, seed, tol, a_sign, beta, c_strip, sigma, b0, s0, h, span,
            grid, domain, solution, field, u0, t_max, dt, substeps, out, csv, report);
        // boolean switches only ever turn on from the command line
        if flags.soliton == Some(true) {
            cfg.soliton = Some(true);
        }
        if flags.deterministic == Some(true) {
            cfg.deterministic = Some(true);
        }
        if cfg.preset.is_some() && cfg.family.is_some() {
            return Err("give either a preset or a family file, not both".into());
        }
        for (name, v) in [("tol", cfg.tol), ("h", cfg.h), ("dt", cfg.dt), ("t_max", cfg.t_max), ("span", cfg.span)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(format!("{name} must be positive, got {v}"));
                }
            }
        }
        Ok(cfg)
    }

    pub fn deterministic(&self) -> bool {
        self.deterministic.unwrap_or(false)
    }
}

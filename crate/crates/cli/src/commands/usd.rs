use clap::Args;
use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::Value;
use teleamp_core::usd::PskEnsemble;

use super::{engine, pick};
use crate::config::{grid, Engine, UsdSection};
use crate::error::{config_err, CliError};
use crate::table::{Cell, Table};
use crate::Context;

#[derive(Args, Clone, Debug, Default)]
pub struct UsdArgs {
    /// Number of PSK states
    #[arg(long)]
    pub arity: Option<usize>,
    /// Channel loss before the measurement
    #[arg(long)]
    pub r_e: Option<f64>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Serialize)]
struct Resolved {
    arity: usize,
    r_e: f64,
    alpha_min: f64,
    alpha_max: f64,
    points: usize,
    engine: Engine,
}

pub fn run(a: &UsdArgs, f: &UsdSection, ctx: &Context) -> Result<(Table, Value), CliError> {
    if let Some(p) = &ctx.preset {
        return Err(config_err(format!("usd has no presets (got '{p}')")));
    }
    let engine = engine(ctx.engine, Engine::Analytic, &[Engine::Analytic, Engine::Fock, Engine::Both], "usd")?;
    let res = Resolved {
        arity: pick(a.arity, f.arity, 4),
        r_e: pick(a.r_e, f.r_e, 0.8),
        alpha_min: pick(a.alpha_min, f.alpha_min, 0.05),
        alpha_max: pick(a.alpha_max, f.alpha_max, 1.5),
        points: pick(a.points, f.points, 30),
        engine,
    };
    if !(2..=64).contains(&res.arity) {
        return Err(config_err(format!("arity {} outside [2, 64]", res.arity)));
    }
    let alphas = grid(res.alpha_min, res.alpha_max, res.points, "alpha")?;

    let mut columns: Vec<String> = vec!["alpha".into(), "gamma".into()];
    columns.extend((0..res.arity).map(|k| format!("lambda_{k}")));
    columns.push("p_usd".into());
    if engine != Engine::Analytic {
        columns.push("gram_deviation".into());
    }
    let rows = ctx.map(&alphas, |&alpha| -> Result<Vec<Cell>, CliError> {
        let ens = PskEnsemble::after_loss(res.arity, C64::new(alpha, 0.0), res.r_e)?;
        let series = ens.eigenvalues();
        let mut row = vec![Cell::F(alpha), Cell::F(ens.gamma().norm())];
        if engine == Engine::Analytic {
            row.extend(series.iter().copied().map(Cell::F));
            row.push(Cell::F(ens.usd_success()));
            return Ok(row);
        }
        // dense eigenvalues come unordered; pair them with the cyclic ones by rank
        let mut dense: Vec<f64> = SymmetricEigen::new(ens.gram()).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let mut rank: Vec<usize> = (0..series.len()).collect();
        rank.sort_by(|&i, &j| series[i].total_cmp(&series[j]));
        let mut dense_by_k = vec![0.0; series.len()];
        for (i, &k) in rank.iter().enumerate() {
            dense_by_k[k] = dense[i];
        }
        let deviation = dense_by_k.iter().zip(&series).map(|(d, s)| (d - s).abs()).fold(0.0, f64::max);
        let (lam, p_usd) = if engine == Engine::Fock {
            (&dense_by_k, dense[0].clamp(0.0, 1.0))
        } else {
            (&series, ens.usd_success())
        };
        row.extend(lam.iter().copied().map(Cell::F));
        row.push(Cell::F(p_usd));
        row.push(Cell::F(deviation));
        Ok(row)
    });
    let mut table = Table::new(columns);
    for r in rows {
        table.push(r?);
    }
    Ok((table, serde_json::to_value(&res).expect("plain settings")))
}

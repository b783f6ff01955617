use clap::Args;
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::Value;
use teleamp_core::protocol::{
    run_binary_fock, success_prob_4psk_brute, success_prob_4psk_closed, success_prob_binary_closed, BinaryHerald,
    ProtocolConfig,
};
use teleamp_core::usd::{usd_success, PskEnsemble};

use super::{engine, pick, unknown_preset};
use crate::config::{grid, Engine, SuccessSection};
use crate::error::{config_err, CliError};
use crate::table::{Cell, Table};
use crate::Context;

#[derive(Args, Clone, Debug, Default)]
pub struct SuccessArgs {
    #[arg(long)]
    pub r_e: Option<f64>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Gains of the binary relay curves (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub gains: Option<Vec<f64>>,
    /// Gain of the 4-PSK relay
    #[arg(long)]
    pub p4_gain: Option<f64>,
}

#[derive(Serialize)]
struct Resolved {
    r_e: f64,
    alpha_min: f64,
    alpha_max: f64,
    points: usize,
    gains: Vec<f64>,
    p4_gain: f64,
    engine: Engine,
}

/// `R_B` giving gain `g` when `R_A = ½`: `g² = (1−R_B)/(R_B(1−R_E))`.
fn r_b_for_gain(g: f64, r_e: f64) -> f64 {
    1.0 / (1.0 + g * g * (1.0 - r_e))
}

pub fn run(a: &SuccessArgs, f: &SuccessSection, ctx: &Context) -> Result<(Table, Value), CliError> {
    // the loss-compensating 4-PSK relay needs g²(1 − R_E) = 1
    let (r_e_default, p4_default) = match ctx.preset.as_deref().or(f.preset.as_deref()) {
        None | Some("lossy-0.8") => (0.8, 5f64.sqrt()),
        Some(other) => return Err(unknown_preset(other, &["lossy-0.8"])),
    };
    let engine = engine(ctx.engine, Engine::Analytic, &[Engine::Analytic, Engine::Fock, Engine::Both], "success-scan")?;
    let res = Resolved {
        r_e: pick(a.r_e, f.r_e, r_e_default),
        alpha_min: pick(a.alpha_min, f.alpha_min, 0.05),
        alpha_max: pick(a.alpha_max, f.alpha_max, 1.5),
        points: pick(a.points, f.points, 30),
        gains: a.gains.clone().or(f.gains.clone()).unwrap_or_else(|| vec![1.5, 2.0, 3.0]),
        p4_gain: pick(a.p4_gain, f.p4_gain, p4_default),
        engine,
    };
    if !(0.0..1.0).contains(&res.r_e) {
        return Err(config_err(format!("r_e = {} outside [0, 1)", res.r_e)));
    }
    if res.gains.iter().chain([&res.p4_gain]).any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(config_err("gains must be positive"));
    }
    let alphas = grid(res.alpha_min, res.alpha_max, res.points, "alpha")?;
    if alphas[0] <= 0.0 {
        return Err(config_err("alpha grid must be positive"));
    }

    let mut columns = vec!["alpha".to_string()];
    columns.extend(res.gains.iter().map(|g| format!("p2_g{g}")));
    columns.extend(["p_usd2", "p4", "p_usd", "ratio"].map(String::from));
    if engine == Engine::Both {
        columns.push("max_engine_deviation".into());
    }

    let rows = ctx.map(&alphas, |&alpha| -> Result<Vec<Cell>, CliError> {
        let a = C64::new(alpha, 0.0);
        let mut row = vec![Cell::F(alpha)];
        let mut deviation: f64 = 0.0;
        for &g in &res.gains {
            let cfg = ProtocolConfig::new(a, 0.5, r_b_for_gain(g, res.r_e), res.r_e)?;
            let closed = success_prob_binary_closed(&cfg)?;
            let brute = if engine == Engine::Analytic {
                closed
            } else {
                run_binary_fock(&cfg, C64::new(1.0, 0.0), C64::new(0.0, 0.0), BinaryHerald::on_off_ideal(true))?
                    .probability
            };
            deviation = deviation.max((closed - brute).abs());
            row.push(Cell::F(if engine == Engine::Fock { brute } else { closed }));
        }
        row.push(Cell::F(usd_success(&PskEnsemble::after_loss(2, a, res.r_e)?)));
        let cfg = ProtocolConfig::new(a, 0.5, r_b_for_gain(res.p4_gain, res.r_e), res.r_e)?;
        let closed = success_prob_4psk_closed(&cfg)?;
        let p4 = if engine == Engine::Analytic {
            closed
        } else {
            let brute = success_prob_4psk_brute(&cfg)?;
            deviation = deviation.max((closed - brute).abs());
            if engine == Engine::Fock {
                brute
            } else {
                closed
            }
        };
        let p_usd = usd_success(&PskEnsemble::after_loss(4, a, res.r_e)?);
        row.extend([Cell::F(p4), Cell::F(p_usd), Cell::F(p4 / p_usd)]);
        if engine == Engine::Both {
            row.push(Cell::F(deviation));
        }
        Ok(row)
    });

    let mut table = Table::new(columns);
    let ratio_col = table.columns.iter().position(|c| c == "ratio").expect("ratio column");
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for r in rows {
        let r = r?;
        if let (Cell::F(alpha), Cell::F(ratio)) = (&r[0], &r[ratio_col]) {
            if *ratio > best.0 {
                best = (*ratio, *alpha);
            }
        }
        table.push(r);
    }
    table.summary = vec![("ratio_max".into(), best.0.into()), ("ratio_max_alpha".into(), best.1.into())];
    Ok((table, serde_json::to_value(&res).expect("plain settings")))
}

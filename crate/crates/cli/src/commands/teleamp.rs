use std::time::Instant;

use clap::Args;
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::Value;
use teleamp_core::protocol::{run_binary, run_binary_fock, BinaryHerald, ProtocolConfig, TABLE_I, TABLE_R_B};

use super::{engine, pick, unknown_preset};
use crate::config::{Engine, TeleampSection};
use crate::error::{config_err, CliError};
use crate::table::{Cell, Table};
use crate::Context;

#[derive(Args, Clone, Debug, Default)]
pub struct TeleampArgs {
    /// Run all twelve rows of the experiment's parameter table
    #[arg(long)]
    pub table1: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Target gain; R_A is solved from it
    #[arg(long)]
    pub gain: Option<f64>,
    /// Alice's reflectivity (instead of --gain)
    #[arg(long)]
    pub r_a: Option<f64>,
    #[arg(long)]
    pub r_b: Option<f64>,
    #[arg(long)]
    pub r_e: Option<f64>,
    /// ideal (|1⟩ at A, |0⟩ at C), on-off (A on, C off) or on-off-a (A on only)
    #[arg(long)]
    pub herald: Option<String>,
    /// plus (|α⟩), minus (|−α⟩), even or odd cat
    #[arg(long)]
    pub input: Option<String>,
}

#[derive(Serialize)]
struct Resolved {
    table1: bool,
    alpha: f64,
    gain: Option<f64>,
    r_a: Option<f64>,
    r_b: f64,
    r_e: f64,
    herald: String,
    input: String,
    engine: Engine,
}

fn herald(name: &str) -> Result<BinaryHerald, CliError> {
    match name {
        "ideal" => Ok(BinaryHerald::Ideal),
        "on-off" => Ok(BinaryHerald::on_off_ideal(true)),
        "on-off-a" => Ok(BinaryHerald::on_off_ideal(false)),
        other => Err(config_err(format!("unknown herald '{other}' (ideal, on-off, on-off-a)"))),
    }
}

fn input(name: &str) -> Result<(C64, C64), CliError> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    match name {
        "plus" => Ok((one, zero)),
        "minus" => Ok((zero, one)),
        "even" => Ok((one, one)),
        "odd" => Ok((one, -one)),
        other => Err(config_err(format!("unknown input '{other}' (plus, minus, even, odd)"))),
    }
}

pub fn run(a: &TeleampArgs, f: &TeleampSection, ctx: &Context) -> Result<(Table, Value), CliError> {
    let table1 = match ctx.preset.as_deref().or(f.preset.as_deref()) {
        None => a.table1 || f.table1.unwrap_or(false),
        Some("table1") => true,
        Some(other) => return Err(unknown_preset(other, &["table1"])),
    };
    let engine = engine(ctx.engine, Engine::Analytic, &[Engine::Analytic, Engine::Fock, Engine::Both], "teleamp")?;
    let r_a = a.r_a.or(f.r_a);
    let gain = a.gain.or(f.gain);
    if r_a.is_some() && gain.is_some() {
        return Err(config_err("give either gain or r_a, not both"));
    }
    let res = Resolved {
        table1,
        alpha: pick(a.alpha, f.alpha, 0.35),
        gain: if r_a.is_none() { Some(gain.unwrap_or(3.0)) } else { None },
        r_a,
        r_b: pick(a.r_b, f.r_b, TABLE_R_B),
        r_e: pick(a.r_e, f.r_e, 0.0),
        herald: a.herald.clone().or(f.herald.clone()).unwrap_or_else(|| "ideal".into()),
        input: a.input.clone().or(f.input.clone()).unwrap_or_else(|| "plus".into()),
        engine,
    };
    let herald = herald(&res.herald)?;
    let (cp, cm) = input(&res.input)?;

    let configs: Vec<(usize, Result<ProtocolConfig, teleamp_core::Error>)> = if table1 {
        TABLE_I.iter().map(|row| (row.index, row.config())).collect()
    } else {
        if !(res.alpha > 0.0 && res.alpha.is_finite()) {
            return Err(config_err(format!("alpha = {} must be positive", res.alpha)));
        }
        let alpha = C64::new(res.alpha, 0.0);
        let cfg = match (res.r_a, res.gain) {
            (Some(r_a), _) => ProtocolConfig::new(alpha, r_a, res.r_b, res.r_e)?,
            (None, Some(g)) => ProtocolConfig::for_gain(alpha, g, res.r_b, res.r_e)?,
            (None, None) => unreachable!("gain defaults when r_a is absent"),
        };
        vec![(1, Ok(cfg))]
    };

    let mut columns: Vec<String> = ["id", "alpha", "g_tg", "beta", "r_a", "r_e", "success_prob", "ideal_fidelity"]
        .map(String::from)
        .to_vec();
    if engine == Engine::Both {
        columns.extend(["fock_success_prob", "fock_fidelity", "engine_agreement"].map(String::from));
    }
    if ctx.timing {
        columns.push("wall_time".into());
    }
    columns.push("error".into());

    let rows = ctx.map(&configs, |(id, cfg)| {
        let t = Instant::now();
        let mut row: Vec<Cell> = vec![(*id).into()];
        let cfg = match cfg {
            Ok(c) => c,
            Err(e) => return error_row(row, columns.len(), e.to_string()),
        };
        row.extend([cfg.alpha.norm(), cfg.gain(), cfg.beta(), cfg.r_a, cfg.r_e].map(Cell::F));
        let analytic = if engine != Engine::Fock {
            Some(run_binary(cfg, cp, cm, herald).map(|r| (r.probability, r.fidelity)))
        } else {
            None
        };
        let fock = if engine != Engine::Analytic {
            Some(run_binary_fock(cfg, cp, cm, herald).map(|r| (r.probability, r.fidelity)))
        } else {
            None
        };
        let (p, fid) = match analytic.as_ref().or(fock.as_ref()).expect("one engine runs") {
            Ok(v) => *v,
            Err(e) => return error_row(row, columns.len(), e.to_string()),
        };
        row.extend([Cell::F(p), Cell::F(fid)]);
        if engine == Engine::Both {
            match fock.expect("both engines run") {
                Ok((pf, ff)) => {
                    row.extend([Cell::F(pf), Cell::F(ff), Cell::F((pf - p).abs().max((ff - fid).abs()))]);
                }
                Err(e) => return error_row(row, columns.len(), e.to_string()),
            }
        }
        if ctx.timing {
            row.push(Cell::F(t.elapsed().as_secs_f64()));
        }
        row.push(Cell::Null);
        row
    });

    let mut table = Table::new(columns);
    rows.into_iter().for_each(|r| table.push(r));
    Ok((table, serde_json::to_value(&res).expect("plain settings")))
}

/// Pads a partial row with empty cells and records the error message.
fn error_row(mut row: Vec<Cell>, width: usize, msg: String) -> Vec<Cell> {
    row.resize(width - 1, Cell::Null);
    row.push(Cell::S(msg));
    row
}

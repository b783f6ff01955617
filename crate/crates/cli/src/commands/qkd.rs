use clap::Args;
use serde::Serialize;
use serde_json::Value;
use teleamp_core::qkd::{key_rate, qkd_preset, reach, QkdParams, QKD_PRESETS};

use super::{engine, pick, unknown_preset};
use crate::config::{grid, Engine, QkdSection};
use crate::error::{config_err, CliError};
use crate::table::{Cell, Table};
use crate::Context;

#[derive(Args, Clone, Debug, Default)]
pub struct QkdArgs {
    /// |α_in|² sent by Alice
    #[arg(long)]
    pub alpha_in_sq: Option<f64>,
    /// Fibre loss in dB/km
    #[arg(long)]
    pub xi: Option<f64>,
    /// Relay position as a fraction of the distance; omit for the direct link
    #[arg(long)]
    pub relay_fraction: Option<f64>,
    #[arg(long)]
    pub r_b: Option<f64>,
    /// Dark-count probability
    #[arg(long)]
    pub nu: Option<f64>,
    /// Bob's detector efficiency
    #[arg(long)]
    pub eta_b: Option<f64>,
    /// Largest distance in km
    #[arg(long)]
    pub l_max: Option<f64>,
    /// Distance step in km
    #[arg(long)]
    pub l_step: Option<f64>,
}

#[derive(Serialize)]
struct Resolved {
    preset: Option<String>,
    alpha_in_sq: f64,
    xi: f64,
    relay_fraction: Option<f64>,
    r_b: f64,
    nu: f64,
    eta_b: f64,
    l_max: f64,
    l_step: f64,
}

pub fn run(a: &QkdArgs, f: &QkdSection, ctx: &Context) -> Result<(Table, Value), CliError> {
    engine(ctx.engine, Engine::Analytic, &[Engine::Analytic], "qkd")?;
    let preset = ctx.preset.clone().or(f.preset.clone());
    let base = match preset.as_deref() {
        None => QkdParams::default(),
        Some(name) => match qkd_preset(name) {
            Some(p) => p.params,
            None => return Err(unknown_preset(name, &QKD_PRESETS.map(|p| p.name))),
        },
    };
    let res = Resolved {
        preset,
        alpha_in_sq: pick(a.alpha_in_sq, f.alpha_in_sq, base.alpha_in_sq),
        xi: pick(a.xi, f.xi, base.xi),
        relay_fraction: a.relay_fraction.or(f.relay_fraction).or(base.relay_fraction),
        r_b: pick(a.r_b, f.r_b, base.r_b),
        nu: pick(a.nu, f.nu, base.nu),
        eta_b: pick(a.eta_b, f.eta_b, base.eta_b),
        l_max: pick(a.l_max, f.l_max, 200.0),
        l_step: pick(a.l_step, f.l_step, 5.0),
    };
    if !(res.l_step > 0.0 && res.l_step.is_finite()) {
        return Err(config_err(format!("l_step = {} must be positive", res.l_step)));
    }
    if !(res.l_max >= 0.0) {
        return Err(config_err(format!("l_max = {} must be nonnegative", res.l_max)));
    }
    let params = QkdParams {
        alpha_in_sq: res.alpha_in_sq,
        xi: res.xi,
        length: 0.0,
        relay_fraction: res.relay_fraction,
        r_b: res.r_b,
        nu: res.nu,
        eta_b: res.eta_b,
    };
    params.validate()?;
    let assisted = params.relay_fraction.is_some();
    let steps = (res.l_max / res.l_step + 1e-9).floor() as usize;
    let lengths = grid(0.0, steps as f64 * res.l_step, steps + 1, "distance")?;
    let lengths = if steps == 0 { vec![0.0] } else { lengths };

    let reports = ctx.map(&lengths, |&l| key_rate(&params.at_length(l), assisted));
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(
        [
            "L", "transmittance", "alpha_at_bob_sq", "Q", "delta", "delta_prime", "delta_ph", "delta_ph_raw", "G",
            "p_suc", "g", "cat_photons",
        ]
        .map(String::from)
        .to_vec(),
    );
    for r in &reports {
        table.push(
            [
                r.length, r.transmittance, r.alpha_at_bob_sq, r.q, r.delta, r.delta_prime, r.delta_ph, r.delta_ph_raw,
                r.key_rate, r.p_suc, r.g_relay, r.cat_photons,
            ]
            .map(Cell::F)
            .to_vec(),
        );
    }
    table.summary = vec![("reach_km".into(), reach(&reports).into())];
    Ok((table, serde_json::to_value(&res).expect("plain settings")))
}

use clap::Args;
use serde::Serialize;
use serde_json::Value;
use teleamp_core::qubit::{AliceDetection, BlochGrid, ImperfectionModel, QubitChannel, QubitSetup};

use super::{engine, pick, unknown_preset};
use crate::config::{grid, Engine, QubitSection};
use crate::error::{config_err, CliError};
use crate::table::{Cell, Table};
use crate::Context;

#[derive(Args, Clone, Debug, Default)]
pub struct QubitArgs {
    /// Input cat amplitude α
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output cat amplitude α′
    #[arg(long)]
    pub alpha_out: Option<f64>,
    #[arg(long)]
    pub r_b: Option<f64>,
    #[arg(long)]
    pub r_e: Option<f64>,
    /// fibonacci or theta-phi
    #[arg(long)]
    pub grid: Option<String>,
    /// Number of Fibonacci points
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    #[arg(long)]
    pub n_phi: Option<usize>,
    /// Exact cat resource and ideal projectors
    #[arg(long)]
    pub ideal: bool,
    /// Also require port C to stay dark
    #[arg(long)]
    pub detect_c: bool,
    #[arg(long)]
    pub sv_transmission: Option<f64>,
    #[arg(long)]
    pub opo_escape: Option<f64>,
    #[arg(long)]
    pub tap_ratio: Option<f64>,
    #[arg(long)]
    pub propagation: Option<f64>,
    #[arg(long)]
    pub apd_efficiency: Option<f64>,
    /// Average fidelity over an (α, α′) grid instead of one Bloch map
    #[arg(long)]
    pub surface: bool,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub alpha_points: Option<usize>,
    #[arg(long)]
    pub alpha_out_min: Option<f64>,
    #[arg(long)]
    pub alpha_out_max: Option<f64>,
    #[arg(long)]
    pub alpha_out_points: Option<usize>,
}

#[derive(Serialize)]
struct Resolved {
    alpha: f64,
    alpha_out: f64,
    r_b: f64,
    r_e: f64,
    grid: String,
    points: usize,
    n_theta: usize,
    n_phi: usize,
    ideal: bool,
    detect_c: bool,
    sv_transmission: f64,
    opo_escape: f64,
    tap_ratio: f64,
    propagation: f64,
    apd_efficiency: f64,
    surface: Option<[f64; 6]>,
}

pub fn run(a: &QubitArgs, f: &QubitSection, ctx: &Context) -> Result<(Table, Value), CliError> {
    engine(ctx.engine, Engine::Fock, &[Engine::Fock], "qubit-map")?;
    let (alpha0, alpha_out0, surface0) = match ctx.preset.as_deref().or(f.preset.as_deref()) {
        None | Some("anchor") => (0.4, 0.6, false),
        Some("surface") => (0.4, 0.6, true),
        Some(other) => return Err(unknown_preset(other, &["anchor", "surface"])),
    };
    let ideal = a.ideal || f.ideal.unwrap_or(false);
    let base = if ideal { ImperfectionModel::ideal() } else { ImperfectionModel::default() };
    let surface = a.surface || f.surface.unwrap_or(surface0);
    let res = Resolved {
        alpha: pick(a.alpha, f.alpha, alpha0),
        alpha_out: pick(a.alpha_out, f.alpha_out, alpha_out0),
        r_b: pick(a.r_b, f.r_b, 0.1),
        r_e: pick(a.r_e, f.r_e, 0.0),
        grid: a.grid.clone().or(f.grid.clone()).unwrap_or_else(|| "fibonacci".into()),
        points: pick(a.points, f.points, 168),
        n_theta: pick(a.n_theta, f.n_theta, 24),
        n_phi: pick(a.n_phi, f.n_phi, 48),
        ideal,
        detect_c: a.detect_c || f.detect_c.unwrap_or(false),
        sv_transmission: pick(a.sv_transmission, f.sv_transmission, base.sv_transmission),
        opo_escape: pick(a.opo_escape, f.opo_escape, base.opo_escape),
        tap_ratio: pick(a.tap_ratio, f.tap_ratio, base.tap_ratio),
        propagation: pick(a.propagation, f.propagation, base.propagation),
        apd_efficiency: pick(a.apd_efficiency, f.apd_efficiency, base.apd_efficiency),
        surface: surface.then(|| {
            [
                pick(a.alpha_min, f.alpha_min, 0.3),
                pick(a.alpha_max, f.alpha_max, 0.8),
                pick(a.alpha_points, f.alpha_points, 6) as f64,
                pick(a.alpha_out_min, f.alpha_out_min, 0.3),
                pick(a.alpha_out_max, f.alpha_out_max, 1.2),
                pick(a.alpha_out_points, f.alpha_out_points, 10) as f64,
            ]
        }),
    };
    let model = ImperfectionModel {
        sv_transmission: res.sv_transmission,
        opo_escape: res.opo_escape,
        tap_ratio: res.tap_ratio,
        propagation: res.propagation,
        apd_efficiency: res.apd_efficiency,
        alice: if ideal { AliceDetection::Projector } else { AliceDetection::OnOff { detect_c: res.detect_c } },
        exact_cat: ideal,
    };
    model.validate()?;
    let bloch = match res.grid.as_str() {
        "fibonacci" if res.points > 0 => BlochGrid::fibonacci(res.points),
        "theta-phi" if res.n_theta > 0 && res.n_phi > 0 => BlochGrid::theta_phi(res.n_theta, res.n_phi),
        other => return Err(config_err(format!("bad grid '{other}' or empty grid (fibonacci, theta-phi)"))),
    };
    let setup = |alpha: f64, alpha_out: f64| -> Result<QubitSetup, CliError> {
        if !(alpha > 0.0 && alpha_out > 0.0) {
            return Err(config_err("cat amplitudes must be positive"));
        }
        let mut s = QubitSetup::new(alpha, alpha_out, model);
        s.r_b = res.r_b;
        s.r_e = res.r_e;
        Ok(s)
    };

    let table = match res.surface {
        Some([a0, a1, na, b0, b1, nb]) => {
            let pairs: Vec<(f64, f64)> = grid(a0, a1, na as usize, "alpha")?
                .into_iter()
                .flat_map(|x| grid(b0, b1, nb as usize, "alpha_out").unwrap_or_default().into_iter().map(move |y| (x, y)))
                .collect();
            let mut table = Table::new(
                ["alpha", "alpha_out", "average_fidelity", "squeezing", "resource_fit_fidelity"]
                    .map(String::from)
                    .to_vec(),
            );
            let rows = ctx.map(&pairs, |&(x, y)| -> Result<Vec<Cell>, CliError> {
                let ch = QubitChannel::new(&setup(x, y)?)?;
                let avg = bloch_average(&ch, &bloch)?;
                Ok(vec![x.into(), y.into(), avg.into(), ch.squeezing.into(), ch.resource_fit_fidelity.into()])
            });
            for r in rows {
                table.push(r?);
            }
            table
        }
        None => {
            let ch = QubitChannel::new(&setup(res.alpha, res.alpha_out)?)?;
            let rows = ctx.map(&bloch.points, |&(theta, phi, w)| -> Result<Vec<Cell>, CliError> {
                let (fid, p) = ch.evaluate(theta, phi)?;
                Ok(vec![theta.into(), phi.into(), w.into(), fid.into(), p.into()])
            });
            let mut table = Table::new(["theta", "phi", "weight", "fidelity", "probability"].map(String::from).to_vec());
            let mut avg = 0.0;
            for r in rows {
                let r = r?;
                if let (Cell::F(w), Cell::F(fid)) = (&r[2], &r[3]) {
                    avg += w * fid;
                }
                table.push(r);
            }
            let integral = bloch_average(&ch, &BlochGrid::theta_phi(60, 60))?;
            table.summary = vec![
                ("average_fidelity".into(), avg.into()),
                ("average_fidelity_integral".into(), integral.into()),
                ("squeezing".into(), ch.squeezing.into()),
                ("resource_fit_fidelity".into(), ch.resource_fit_fidelity.into()),
            ];
            table
        }
    };
    Ok((table, serde_json::to_value(&res).expect("plain settings")))
}

fn bloch_average(ch: &QubitChannel, grid: &BlochGrid) -> Result<f64, CliError> {
    Ok(teleamp_core::qubit::fidelity_map_with(ch, grid)?.average)
}

//! wasm-bindgen entry points for the browser demo in `www/`.
//!
//! Every export returns a flat `Float64Array` with a fixed stride so the page
//! can plot it without any glue beyond indexing.

// `!(x > y)` guards also reject NaN, which `x <= y` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use num_complex::Complex64 as C64;
use teleamp_core::protocol::{success_prob_4psk_closed, success_prob_binary_closed, ProtocolConfig};
use teleamp_core::qkd::{key_rate, QkdParams};
use teleamp_core::qubit::{fidelity_map_with, BlochGrid, ImperfectionModel, QubitChannel, QubitSetup};
use teleamp_core::usd::{usd_success, PskEnsemble};
use teleamp_core::{math::linspace, Error, Result};
use wasm_bindgen::prelude::*;

/// Stride of [`success_curves`].
pub const SUCCESS_STRIDE: usize = 5;

/// Rows `[α, P₂, P_USD(2), P₄, P_USD(4)]` for `points` amplitudes in `(0, alpha_max]`.
///
/// The binary relay runs at gain `gain`; the 4-PSK relay at the gain that
/// undoes the loss, `g²(1 − R_E) = 1`. Both use `R_A = ½`.
pub fn success_rows(r_e: f64, gain: f64, alpha_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&r_e) || !(gain > 0.0) || !(alpha_max > 0.0) || points == 0 {
        return Err(Error::InvalidParameter("need 0 ≤ r_e < 1, gain > 0, alpha_max > 0, points > 0".into()));
    }
    let r_b = |g: f64| 1.0 / (1.0 + g * g * (1.0 - r_e));
    let p4_gain = 1.0 / (1.0 - r_e).sqrt();
    let mut out = Vec::with_capacity(points * SUCCESS_STRIDE);
    for alpha in linspace(alpha_max / points as f64, alpha_max, points) {
        let a = C64::new(alpha, 0.0);
        let p2 = success_prob_binary_closed(&ProtocolConfig::new(a, 0.5, r_b(gain), r_e)?)?;
        let p4 = success_prob_4psk_closed(&ProtocolConfig::new(a, 0.5, r_b(p4_gain), r_e)?)?;
        let u2 = usd_success(&PskEnsemble::after_loss(2, a, r_e)?);
        let u4 = usd_success(&PskEnsemble::after_loss(4, a, r_e)?);
        out.extend([alpha, p2, u2, p4, u4]);
    }
    Ok(out)
}

/// Rows `[L, G]` from 0 to `l_max` km; `relay_fraction ≤ 0` means the direct link.
pub fn key_rate_rows(alpha_in_sq: f64, relay_fraction: f64, l_max: f64, l_step: f64) -> Result<Vec<f64>> {
    if !(l_step > 0.0) || !(l_max >= 0.0) {
        return Err(Error::InvalidParameter("need l_step > 0 and l_max ≥ 0".into()));
    }
    let params = QkdParams {
        alpha_in_sq,
        relay_fraction: (relay_fraction > 0.0).then_some(relay_fraction),
        ..QkdParams::default()
    };
    let assisted = params.relay_fraction.is_some();
    let n = (l_max / l_step + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(2 * (n + 1));
    for i in 0..=n {
        let l = i as f64 * l_step;
        out.extend([l, key_rate(&params.at_length(l), assisted)?.key_rate]);
    }
    Ok(out)
}

/// Fidelities on an `n_theta × n_phi` midpoint grid (θ-major), followed by
/// the sphere average and the success probability at the north pole.
pub fn qubit_rows(alpha: f64, alpha_out: f64, n_theta: usize, n_phi: usize, ideal: bool) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha_out > 0.0) || n_theta == 0 || n_phi == 0 {
        return Err(Error::InvalidParameter("need positive amplitudes and a nonempty grid".into()));
    }
    let model = if ideal { ImperfectionModel::ideal() } else { ImperfectionModel::default() };
    let channel = QubitChannel::new(&QubitSetup::new(alpha, alpha_out, model))?;
    let map = fidelity_map_with(&channel, &BlochGrid::theta_phi(n_theta, n_phi))?;
    let mut out: Vec<f64> = map.points.iter().map(|p| p.3).collect();
    out.push(map.average);
    out.push(channel.evaluate(0.0, 0.0)?.1);
    Ok(out)
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn success_curves(r_e: f64, gain: f64, alpha_max: f64, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(success_rows(r_e, gain, alpha_max, points))
}

#[wasm_bindgen]
pub fn key_rate_curve(
    alpha_in_sq: f64,
    relay_fraction: f64,
    l_max: f64,
    l_step: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    js(key_rate_rows(alpha_in_sq, relay_fraction, l_max, l_step))
}

#[wasm_bindgen]
pub fn qubit_map(
    alpha: f64,
    alpha_out: f64,
    n_theta: usize,
    n_phi: usize,
    ideal: bool,
) -> std::result::Result<Vec<f64>, JsError> {
    js(qubit_rows(alpha, alpha_out, n_theta, n_phi, ideal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn success_rows_shape_and_order() {
        let rows = success_rows(0.8, 2.0, 1.5, 10).unwrap();
        assert_eq!(rows.len(), 10 * SUCCESS_STRIDE);
        for r in rows.chunks(SUCCESS_STRIDE) {
            assert!(r[1..].iter().all(|p| (0.0..=1.0).contains(p)));
            assert!(r[3] > r[4], "4-PSK relay beats measure-resend at α = {}", r[0]);
        }
    }

    #[test]
    fn relay_curve_outlasts_direct() {
        let direct = key_rate_rows(0.008, 0.0, 400.0, 10.0).unwrap();
        let relay = key_rate_rows(0.05, 0.2, 400.0, 10.0).unwrap();
        let last = |v: &[f64]| v.chunks(2).filter(|r| r[1] > 0.0).map(|r| r[0]).fold(0.0, f64::max);
        assert!(last(&relay) > 2.0 * last(&direct));
    }

    #[test]
    fn ideal_qubit_map_is_flat() {
        let v = qubit_rows(0.5, 0.5, 4, 6, true).unwrap();
        assert_eq!(v.len(), 26);
        assert!(v[..25].iter().all(|f| *f > 1.0 - 1e-6));
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(success_rows(1.0, 2.0, 1.0, 5).is_err());
        assert!(key_rate_rows(0.1, 0.2, 100.0, 0.0).is_err());
        assert!(qubit_rows(0.0, 0.5, 4, 4, false).is_err());
    }
}

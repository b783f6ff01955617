//! 4PSK-BB84 with a reference pulse: error rates and secure-key probability,
//! with and without a tele-amplifying relay.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::math::binary_entropy;
use crate::protocol::{success_prob_4psk_closed, ProtocolConfig};

/// Fibre transmittance `η = 10^{−ξL/10}` (ξ in dB/km, L in km).
pub fn channel_transmittance(xi: f64, length: f64) -> f64 {
    10f64.powf(-xi * length / 10.0)
}

/// Outcome probabilities of the X-basis receiver: correct, error, inconclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bb84Probabilities {
    pub correct: f64,
    pub error: f64,
    pub inconclusive: f64,
}

/// `P_c = ½(1 − e^{−ν−2η_B|α|²})(1 + e^{−ν})`,
/// `P_e = ½(1 + e^{−ν−2η_B|α|²})(1 − e^{−ν})`,
/// `P_i = e^{−2ν−2η_B|α|²}`.
pub fn bb84_probabilities(alpha_at_bob_sq: f64, nu: f64, eta_b: f64) -> Bb84Probabilities {
    let signal = (-nu - 2.0 * eta_b * alpha_at_bob_sq).exp();
    let dark = (-nu).exp();
    Bb84Probabilities {
        correct: 0.5 * (1.0 - signal) * (1.0 + dark),
        // 1 − e^{−ν} via expm1 so tiny dark counts survive
        error: 0.5 * (1.0 + signal) * -(-nu).exp_m1(),
        inconclusive: signal * dark,
    }
}

/// Coin imbalance `Δ = ½[1 − e^{−a}(cos a + sin a)]`, `a = |α_in|²`.
pub fn coin_imbalance(alpha_in_sq: f64) -> f64 {
    let a = alpha_in_sq;
    0.5 * (1.0 - (-a).exp() * (a.cos() + a.sin()))
}

/// Phase-error bound
/// `δ + 4Δ′(1−Δ′)(1−2δ) + 4(1−2Δ′)√(Δ′(1−Δ′)δ(1−δ))`.
pub fn phase_error_bound(delta: f64, delta_prime: f64) -> f64 {
    let d = delta_prime;
    delta + 4.0 * d * (1.0 - d) * (1.0 - 2.0 * delta) + 4.0 * (1.0 - 2.0 * d) * (d * (1.0 - d) * delta * (1.0 - delta)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QkdParams {
    /// `|α_in|²` at Alice.
    pub alpha_in_sq: f64,
    /// Fibre loss in dB/km.
    pub xi: f64,
    /// Alice–Bob distance in km.
    pub length: f64,
    /// Relay position as a fraction of `length` from Alice.
    pub relay_fraction: Option<f64>,
    pub r_b: f64,
    pub nu: f64,
    pub eta_b: f64,
}

impl Default for QkdParams {
    fn default() -> Self {
        Self {
            alpha_in_sq: 0.008,
            xi: 0.2,
            length: 0.0,
            relay_fraction: None,
            r_b: 0.2,
            nu: 1e-6,
            eta_b: 0.2,
        }
    }
}

impl QkdParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(self.alpha_in_sq >= 0.0 && self.alpha_in_sq.is_finite()) {
            return bad("alpha_in_sq", self.alpha_in_sq);
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return bad("xi", self.xi);
        }
        if !(self.length >= 0.0 && self.length.is_finite()) {
            return bad("length", self.length);
        }
        if !(self.r_b > 0.0 && self.r_b < 1.0) {
            return bad("r_b", self.r_b);
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad("nu", self.nu);
        }
        if !(self.eta_b > 0.0 && self.eta_b <= 1.0) {
            return bad("eta_b", self.eta_b);
        }
        if let Some(x) = self.relay_fraction {
            if !(x > 0.0 && x < 1.0) {
                return bad("relay_fraction", x);
            }
        }
        Ok(())
    }

    pub fn at_length(&self, length: f64) -> Self {
        Self { length, ..*self }
    }

    fn fraction(&self) -> Result<f64> {
        self.relay_fraction
            .ok_or_else(|| Error::InvalidParameter("assisted scheme needs a relay fraction x".into()))
    }

    /// `g(x, L) = √((1−R_B)/(R_B η((1−x)L)))`.
    pub fn relay_gain(&self) -> Result<f64> {
        let x = self.fraction()?;
        let eta_back = channel_transmittance(self.xi, (1.0 - x) * self.length);
        Ok(((1.0 - self.r_b) / (self.r_b * eta_back)).sqrt())
    }
}

/// Resource-cat mean photon number `β² = η(xL) α_in² / (η((1−x)L) R_B)`.
pub fn required_cat_photons(params: &QkdParams) -> Result<f64> {
    let x = params.fraction()?;
    let eta_in = channel_transmittance(params.xi, x * params.length);
    let eta_back = channel_transmittance(params.xi, (1.0 - x) * params.length);
    Ok(eta_in * params.alpha_in_sq / (eta_back * params.r_b))
}

/// All intermediate quantities at one distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyRateReport {
    pub length: f64,
    /// Effective transmittance seen by the signal (`η(L)`, or `g²η(xL)` with the relay).
    pub transmittance: f64,
    pub alpha_at_bob_sq: f64,
    pub probabilities: Bb84Probabilities,
    pub q: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// Phase-error bound after clamping to `[0, 1]`.
    pub delta_ph: f64,
    /// Phase-error bound before clamping.
    pub delta_ph_raw: f64,
    pub key_rate: f64,
    /// Relay success probability (1 without relay).
    pub p_suc: f64,
    /// Relay gain (1 without relay).
    pub g_relay: f64,
    /// Resource mean photon number (0 without relay).
    pub cat_photons: f64,
}

/// Secure-key probability `G = ½ P_suc Q [1 − H(δ) − H(δ_ph)]`, clamped at 0.
///
/// `Δ′` is capped at ½ and `δ_ph` at 1; once `δ_ph ≥ ½` the bound carries
/// no information and its entropy is taken as 1.
pub fn key_rate(params: &QkdParams, assisted: bool) -> Result<KeyRateReport> {
    params.validate()?;
    let (transmittance, p_suc, g_relay, cat_photons) = if assisted {
        let x = params.fraction()?;
        let eta_in = channel_transmittance(params.xi, x * params.length);
        let eta_back = channel_transmittance(params.xi, (1.0 - x) * params.length);
        let g = params.relay_gain()?;
        let p_suc = if params.alpha_in_sq == 0.0 {
            0.0
        } else {
            let cfg = ProtocolConfig::new(
                C64::new((eta_in * params.alpha_in_sq).sqrt(), 0.0),
                0.5,
                params.r_b,
                1.0 - eta_back,
            )
            .map_err(|e| Error::Domain(format!("relay configuration: {e}")))?;
            success_prob_4psk_closed(&cfg)?
        };
        (g * g * eta_in, p_suc, g, required_cat_photons(params)?)
    } else {
        (channel_transmittance(params.xi, params.length), 1.0, 1.0, 0.0)
    };
    let alpha_at_bob_sq = transmittance * params.alpha_in_sq;
    let probabilities = bb84_probabilities(alpha_at_bob_sq, params.nu, params.eta_b);
    let q = 1.0 - probabilities.inconclusive;
    if !(q > 0.0) {
        return Err(Error::Domain(format!(
            "no conclusive events at L = {} (Q = 0)",
            params.length
        )));
    }
    let delta = probabilities.error / q;
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain(format!("bit error rate {delta} outside [0, 1]")));
    }
    let delta_prime = (coin_imbalance(params.alpha_in_sq) / q).clamp(0.0, 0.5);
    let delta_ph_raw = phase_error_bound(delta, delta_prime);
    if !delta_ph_raw.is_finite() {
        return Err(Error::Domain(format!("phase error bound {delta_ph_raw}")));
    }
    let delta_ph = delta_ph_raw.clamp(0.0, 1.0);
    let h_ph = if delta_ph >= 0.5 { 1.0 } else { binary_entropy(delta_ph) };
    let key_rate = (0.5 * p_suc * q * (1.0 - binary_entropy(delta) - h_ph)).max(0.0);
    Ok(KeyRateReport {
        length: params.length,
        transmittance,
        alpha_at_bob_sq,
        probabilities,
        q,
        delta,
        delta_prime,
        delta_ph,
        delta_ph_raw,
        key_rate,
        p_suc,
        g_relay,
        cat_photons,
    })
}

/// Key-rate reports over a list of distances.
pub fn distance_scan(params: &QkdParams, lengths: &[f64], assisted: bool) -> Result<Vec<KeyRateReport>> {
    if lengths.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("distance grid must be nondecreasing".into()));
    }
    lengths.iter().map(|&l| key_rate(&params.at_length(l), assisted)).collect()
}

/// A named curve of the key-rate comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QkdPreset {
    pub name: &'static str,
    pub params: QkdParams,
    pub assisted: bool,
}

const fn preset(name: &'static str, alpha_in_sq: f64, relay_fraction: Option<f64>) -> QkdPreset {
    QkdPreset {
        name,
        params: QkdParams {
            alpha_in_sq,
            xi: 0.2,
            length: 0.0,
            relay_fraction,
            r_b: 0.2,
            nu: 1e-6,
            eta_b: 0.2,
        },
        assisted: relay_fraction.is_some(),
    }
}

/// Curves of the key-rate comparison. `|α_in|²` for `x = 0.8` and `x = 0.6`
/// is not given with the curves and is set to 0.1 here.
pub const QKD_PRESETS: [QkdPreset; 7] = [
    preset("direct-0.008", 0.008, None),
    preset("direct-0.001", 0.001, None),
    preset("relay-x0.8", 0.1, Some(0.8)),
    preset("relay-x0.6", 0.1, Some(0.6)),
    preset("relay-x0.4-a0.2", 0.2, Some(0.4)),
    preset("relay-x0.4-a0.3", 0.3, Some(0.4)),
    preset("relay-x0.2", 0.05, Some(0.2)),
];

pub fn qkd_preset(name: &str) -> Option<QkdPreset> {
    QKD_PRESETS.iter().copied().find(|p| p.name == name)
}

/// Largest grid distance with a positive key rate, if any.
pub fn reach(reports: &[KeyRateReport]) -> Option<f64> {
    reports.iter().filter(|r| r.key_rate > 0.0).map(|r| r.length).fold(None, |acc, l| {
        Some(acc.map_or(l, |a: f64| a.max(l)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmittance_examples() {
        assert_eq!(channel_transmittance(0.2, 0.0), 1.0);
        assert!((channel_transmittance(0.2, 50.0) - 0.1).abs() < 1e-15);
        assert!((channel_transmittance(0.2, 100.0) - 0.01).abs() < 1e-16);
    }

    #[test]
    fn no_dark_counts_no_errors() {
        let p = bb84_probabilities(0.3, 0.0, 0.2);
        assert_eq!(p.error, 0.0);
        let p = bb84_probabilities(0.0, 0.0, 0.2);
        assert_eq!(p.inconclusive, 1.0);
        let r = key_rate(
            &QkdParams {
                nu: 0.0,
                ..QkdParams::default()
            },
            false,
        )
        .unwrap();
        assert_eq!(r.delta, 0.0);
        let d = r.delta_prime;
        assert!((r.delta_ph_raw - 4.0 * d * (1.0 - d)).abs() < 1e-15);
    }

    #[test]
    fn relay_gain_at_full_fraction_limit() {
        let p = QkdParams {
            relay_fraction: Some(1.0 - 1e-12),
            length: 50.0,
            ..QkdParams::default()
        };
        assert!((p.relay_gain().unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cat_photon_examples() {
        let base = QkdParams {
            alpha_in_sq: 0.05,
            relay_fraction: Some(0.5),
            length: 80.0,
            ..QkdParams::default()
        };
        assert!((required_cat_photons(&base).unwrap() - 0.25).abs() < 1e-12);
        let zero = QkdParams {
            relay_fraction: Some(0.2),
            length: 0.0,
            ..base
        };
        assert!((required_cat_photons(&zero).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn effective_transmittance_identity() {
        for (x, l) in [(0.2, 10.0), (0.4, 50.0), (0.5, 70.0), (0.6, 120.0), (0.8, 200.0)] {
            let p = QkdParams {
                relay_fraction: Some(x),
                length: l,
                ..QkdParams::default()
            };
            let r = key_rate(&p, true).unwrap();
            let expect = (1.0 - p.r_b) / p.r_b * 10f64.powf(-p.xi * (2.0 * x - 1.0) * l / 10.0);
            assert!((r.transmittance - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn assisted_requires_fraction() {
        assert!(key_rate(&QkdParams::default(), true).is_err());
    }

    #[test]
    fn zero_signal_without_dark_counts_is_domain_error() {
        let p = QkdParams {
            alpha_in_sq: 0.0,
            nu: 0.0,
            ..QkdParams::default()
        };
        assert!(matches!(key_rate(&p, false), Err(Error::Domain(_))));
    }

    #[test]
    fn reach_picks_last_positive() {
        let p = qkd_preset("direct-0.008").unwrap();
        let grid: Vec<f64> = (0..=60).map(|k| 5.0 * k as f64).collect();
        let reports = distance_scan(&p.params, &grid, false).unwrap();
        let r = reach(&reports).unwrap();
        assert!(r > 0.0 && r < 300.0);
    }
}

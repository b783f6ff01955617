//! Photon detection: on/off POVMs with dark counts and finite efficiency,
//! ideal number projectors, and conditioning in both engines.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{FockEnsemble, FockState};
use crate::math::{coherent_overlap, ln_factorials};
use crate::optics::{diagonal_reduce, BranchDensity};

/// Below this a pattern is treated as unreachable.
pub const ZERO_PROBABILITY: f64 = 1e-15;

/// On/off detector with dark-count probability `ν` and efficiency `η`.
///
/// `Π_off = e^{−ν} Σ (1−η)^m |m⟩⟨m|`, `Π_on = 1 − Π_off`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    dark_count: f64,
    efficiency: f64,
}

impl DetectorModel {
    pub fn new(dark_count: f64, efficiency: f64) -> Result<Self> {
        if !(dark_count >= 0.0 && dark_count.is_finite()) {
            return Err(Error::InvalidParameter(format!("dark count {dark_count}")));
        }
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::InvalidParameter(format!("efficiency {efficiency}")));
        }
        Ok(Self {
            dark_count,
            efficiency,
        })
    }

    pub const fn ideal() -> Self {
        Self {
            dark_count: 0.0,
            efficiency: 1.0,
        }
    }

    pub fn dark_count(&self) -> f64 {
        self.dark_count
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// `⟨n|Π_off|n⟩`.
    pub fn off_diagonal_element(&self, n: usize) -> f64 {
        (-self.dark_count).exp() * (1.0 - self.efficiency).powi(n as i32)
    }

    /// `P(off)` for a coherent state `|γ⟩`.
    pub fn off_probability_coherent(&self, gamma: C64) -> f64 {
        (-self.dark_count - self.efficiency * gamma.norm_sqr()).exp()
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Outcome at one port. `Photons` and `AtLeast` are ideal projectors and
/// ignore the detector model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Off,
    On,
    Photons(usize),
    AtLeast(usize),
}

impl Outcome {
    pub fn label(&self) -> String {
        match self {
            Outcome::Off => "off".into(),
            Outcome::On => "on".into(),
            Outcome::Photons(n) => n.to_string(),
            Outcome::AtLeast(n) => format!(">={n}"),
        }
    }
}

/// One measured port: which mode, what was seen, with which detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortMeasurement {
    pub mode: usize,
    pub outcome: Outcome,
    pub detector: DetectorModel,
}

impl PortMeasurement {
    pub fn new(mode: usize, outcome: Outcome, detector: DetectorModel) -> Self {
        Self {
            mode,
            outcome,
            detector,
        }
    }

    pub fn ideal(mode: usize, outcome: Outcome) -> Self {
        Self::new(mode, outcome, DetectorModel::ideal())
    }

    /// `⟨n|Π|n⟩`.
    pub fn fock_diagonal(&self, n: usize) -> f64 {
        match self.outcome {
            Outcome::Off => self.detector.off_diagonal_element(n),
            Outcome::On => 1.0 - self.detector.off_diagonal_element(n),
            Outcome::Photons(k) => f64::from(u8::from(n == k)),
            Outcome::AtLeast(k) => f64::from(u8::from(n >= k)),
        }
    }

    /// `⟨bra|Π|ket⟩` for coherent states.
    pub fn branch_element(&self, bra: C64, ket: C64) -> C64 {
        let base = (-(bra.norm_sqr() + ket.norm_sqr()) / 2.0).exp();
        let x = bra.conj() * ket;
        match self.outcome {
            Outcome::Off => off_element(&self.detector, bra, ket),
            Outcome::On => coherent_overlap(bra, ket) - off_element(&self.detector, bra, ket),
            Outcome::Photons(k) => base * number_term(x, k),
            Outcome::AtLeast(k) => {
                let mut below = C64::new(0.0, 0.0);
                for n in 0..k {
                    below += number_term(x, n);
                }
                coherent_overlap(bra, ket) - base * below
            }
        }
    }
}

fn off_element(d: &DetectorModel, bra: C64, ket: C64) -> C64 {
    let e = -d.dark_count - (bra.norm_sqr() + ket.norm_sqr()) / 2.0 + (1.0 - d.efficiency) * bra.conj() * ket;
    e.exp()
}

fn number_term(x: C64, n: usize) -> C64 {
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let lf = ln_factorials(n + 1)[n];
    x.powu(n as u32) * (-lf).exp()
}

/// Labelled outcomes over several ports.
#[derive(Clone, Debug, PartialEq)]
pub struct ClickPattern {
    ports: Vec<(String, PortMeasurement)>,
}

impl ClickPattern {
    pub fn new(ports: Vec<(String, PortMeasurement)>) -> Result<Self> {
        for (i, (label, m)) in ports.iter().enumerate() {
            for (other, n) in &ports[i + 1..] {
                if other == label {
                    return Err(Error::InvalidParameter(format!("duplicate port label {label}")));
                }
                if n.mode == m.mode {
                    return Err(Error::InvalidParameter(format!("mode {} measured twice", m.mode)));
                }
            }
        }
        Ok(Self { ports })
    }

    pub fn ports(&self) -> &[(String, PortMeasurement)] {
        &self.ports
    }

    pub fn measurements(&self) -> Vec<PortMeasurement> {
        self.ports.iter().map(|(_, m)| *m).collect()
    }

    /// e.g. `A=on,C=off`.
    pub fn describe(&self) -> String {
        self.ports
            .iter()
            .map(|(l, m)| format!("{l}={}", m.outcome.label()))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Result of conditioning: unnormalised state, its probability, and the
/// normalised state.
#[derive(Clone, Debug)]
pub struct Conditioned<S> {
    pub unnormalized: S,
    pub probability: f64,
    pub state: S,
}

/// Conditions an exact branch density on the measured ports.
pub fn condition_branch(rho: &BranchDensity, measurements: &[PortMeasurement]) -> Result<Conditioned<BranchDensity>> {
    let before = rho.trace();
    let un = rho.reduce(measurements)?;
    let p = un.trace() / before;
    if !(p >= ZERO_PROBABILITY) {
        return Err(Error::ZeroProbability(p.max(0.0)));
    }
    let state = un.normalized()?;
    Ok(Conditioned {
        unnormalized: un,
        probability: p.min(1.0),
        state,
    })
}

/// Conditions a Fock ensemble on the measured ports.
pub fn condition_fock(ens: &FockEnsemble, measurements: &[PortMeasurement]) -> Result<Conditioned<FockEnsemble>> {
    let before = ens.total_weight();
    let diag: Vec<(usize, Vec<f64>)> = measurements
        .iter()
        .map(|m| {
            let d = ens.dims().get(m.mode).copied().unwrap_or(0);
            (m.mode, (0..d).map(|n| m.fock_diagonal(n)).collect())
        })
        .collect();
    let un = diagonal_reduce(ens, &diag)?;
    let p = un.total_weight() / before;
    if !(p >= ZERO_PROBABILITY) {
        return Err(Error::ZeroProbability(p.max(0.0)));
    }
    let state = un.clone().normalized()?;
    Ok(Conditioned {
        unnormalized: un,
        probability: p.min(1.0),
        state,
    })
}

/// Probability of a pattern on a pure Fock state (no conditional state kept).
pub fn pattern_probability_fock(state: &FockState, measurements: &[PortMeasurement]) -> Result<f64> {
    match condition_fock(&FockEnsemble::pure(state.clone()), measurements) {
        Ok(c) => Ok(c.probability),
        Err(Error::ZeroProbability(p)) => Ok(p),
        Err(e) => Err(e),
    }
}

/// Ideal `|n⟩⟨n|` on one port.
pub fn ideal_projector(mode: usize, n: usize) -> PortMeasurement {
    PortMeasurement::ideal(mode, Outcome::Photons(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent, FockState};

    #[test]
    fn ideal_off_is_vacuum_projector() {
        let m = PortMeasurement::ideal(0, Outcome::Off);
        assert_eq!(m.fock_diagonal(0), 1.0);
        assert_eq!(m.fock_diagonal(1), 0.0);
        assert_eq!(m.fock_diagonal(5), 0.0);
    }

    #[test]
    fn off_probability_on_coherent() {
        let g = C64::new(0.7, -0.4);
        let m = PortMeasurement::ideal(0, Outcome::Off);
        let p = m.branch_element(g, g).re;
        assert!((p - (-g.norm_sqr()).exp()).abs() < 1e-15);
    }

    #[test]
    fn dark_count_example_against_fock_sum() {
        let d = DetectorModel::new(1e-6, 0.2).unwrap();
        let g = C64::new(0.1f64.sqrt(), 0.0);
        let s = coherent(g, 20).unwrap();
        let p = s.photon_distribution(0).unwrap();
        let oracle: f64 = p.iter().enumerate().map(|(n, pn)| pn * d.off_diagonal_element(n)).sum();
        let expected = (-1e-6f64).exp() * (-0.02f64).exp();
        assert!((oracle - expected).abs() < 1e-12);
        assert!((d.off_probability_coherent(g) - expected).abs() < 1e-15);
        let m = PortMeasurement::new(0, Outcome::Off, d);
        assert!((m.branch_element(g, g).re - expected).abs() < 1e-15);
    }

    #[test]
    fn branch_elements_match_fock_sums() {
        let a = C64::new(0.6, 0.2);
        let b = C64::new(-0.3, 0.5);
        let fa = coherent(a, 25).unwrap();
        let fb = coherent(b, 25).unwrap();
        let d = DetectorModel::new(0.01, 0.3).unwrap();
        for outcome in [Outcome::Off, Outcome::On, Outcome::Photons(0), Outcome::Photons(2), Outcome::AtLeast(2)] {
            let m = PortMeasurement::new(0, outcome, d);
            let oracle: C64 = (0..25)
                .map(|n| fa.amplitudes()[n].conj() * fb.amplitudes()[n] * m.fock_diagonal(n))
                .sum();
            assert!((m.branch_element(a, b) - oracle).norm() < 1e-12, "{outcome:?}");
        }
    }

    #[test]
    fn projector_examples() {
        let vac = FockState::vacuum(&[5]);
        let p0 = pattern_probability_fock(&vac, &[ideal_projector(0, 0)]).unwrap();
        assert!((p0 - 1.0).abs() < 1e-15);
        let one = coherent(C64::new(1.0, 0.0), 20).unwrap();
        let p0 = pattern_probability_fock(&one, &[ideal_projector(0, 0)]).unwrap();
        assert!((p0 - (-1f64).exp()).abs() < 1e-12);
        let p1 = pattern_probability_fock(&one, &[ideal_projector(0, 1)]).unwrap();
        assert!((p1 - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn vacuum_on_is_unreachable() {
        let vac = FockEnsemble::pure(FockState::vacuum(&[4, 4]));
        let r = condition_fock(&vac, &[PortMeasurement::ideal(0, Outcome::On)]);
        assert!(matches!(r, Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let m = PortMeasurement::ideal(0, Outcome::On);
        let n = PortMeasurement::ideal(1, Outcome::On);
        assert!(ClickPattern::new(vec![("A".into(), m), ("A".into(), n)]).is_err());
        let p = ClickPattern::new(vec![("A".into(), m), ("C".into(), n)]).unwrap();
        assert_eq!(p.describe(), "A=on,C=on");
    }
}

//! Beam splitters, phase shifts, loss and photon subtraction in both engines.
//!
//! Beam-splitter convention: with reflectivity `R`, `t = √(1−R)`, `r = √R`,
//! a [`BeamSplitter`] on modes `(i, j)` maps coherent amplitudes
//! `(γᵢ, γⱼ) ↦ (tγᵢ − rγⱼ, rγᵢ + tγⱼ)`. Placing Alice's port as `i` gives the
//! reflected contribution to her mode a minus sign, which reproduces the
//! nulling structure of the binary protocol (her mode becomes `|0⟩` or
//! `|±2√(1−R_A) α⟩`).

mod branch;
mod fock_ops;

pub use branch::{Branch, BranchDensity, CoherentBranchState, MAX_BRANCHES};
pub use fock_ops::{
    diagonal_reduce, loss_channel, loss_channel_state, partial_trace, photon_subtract,
    DEFAULT_KRAUS_THRESHOLD,
};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Two-mode beam splitter of reflectivity `R` acting on `modes = (i, j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitter {
    reflectivity: f64,
    modes: (usize, usize),
}

impl BeamSplitter {
    pub fn new(reflectivity: f64, i: usize, j: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&reflectivity) {
            return Err(Error::InvalidParameter(format!(
                "reflectivity {reflectivity} outside [0, 1]"
            )));
        }
        if i == j {
            return Err(Error::InvalidParameter("beam splitter needs two distinct modes".into()));
        }
        Ok(Self {
            reflectivity,
            modes: (i, j),
        })
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn modes(&self) -> (usize, usize) {
        self.modes
    }

    pub fn transmission_amplitude(&self) -> f64 {
        (1.0 - self.reflectivity).sqrt()
    }

    pub fn reflection_amplitude(&self) -> f64 {
        self.reflectivity.sqrt()
    }

    /// The 2×2 amplitude map, rows giving the new `(γᵢ, γⱼ)`.
    pub fn amplitude_map(&self) -> [[f64; 2]; 2] {
        let t = self.transmission_amplitude();
        let r = self.reflection_amplitude();
        [[t, -r], [r, t]]
    }

    /// Applies the amplitude map to a coherent amplitude pair.
    pub fn map_amplitudes(&self, gi: C64, gj: C64) -> (C64, C64) {
        let m = self.amplitude_map();
        (gi * m[0][0] + gj * m[0][1], gi * m[1][0] + gj * m[1][1])
    }

    pub(crate) fn check(&self, modes: usize) -> Result<()> {
        for idx in [self.modes.0, self.modes.1] {
            if idx >= modes {
                return Err(Error::BadModeIndex { index: idx, modes });
            }
        }
        Ok(())
    }
}

/// Passive unitaries shared by every state representation.
pub trait LinearOptics: Sized {
    fn apply_beamsplitter(&self, bs: &BeamSplitter) -> Result<Self>;

    /// `e^{iφ n̂}` on one mode: coherent amplitudes pick up `e^{iφ}`.
    fn apply_phase(&self, mode: usize, phase: f64) -> Result<Self>;
}

pub(crate) fn check_loss(loss: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&loss) || !loss.is_finite() {
        return Err(Error::BadLoss(loss));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_map_is_orthogonal() {
        for r in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let m = BeamSplitter::new(r, 0, 1).unwrap().amplitude_map();
            let g00 = m[0][0] * m[0][0] + m[1][0] * m[1][0];
            let g01 = m[0][0] * m[0][1] + m[1][0] * m[1][1];
            let g11 = m[0][1] * m[0][1] + m[1][1] * m[1][1];
            assert!((g00 - 1.0).abs() < 1e-12 && g01.abs() < 1e-12 && (g11 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(BeamSplitter::new(1.2, 0, 1).is_err());
        assert!(BeamSplitter::new(0.5, 1, 1).is_err());
        assert_eq!(check_loss(-0.1), Err(Error::BadLoss(-0.1)));
    }
}

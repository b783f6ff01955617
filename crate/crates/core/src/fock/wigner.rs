use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{FockEnsemble, FockState};
use crate::error::{Error, Result};

/// Phase-space coordinates `(x, p)` with vacuum variance 1/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpacePoint {
    pub x: f64,
    pub p: f64,
}

impl PhaseSpacePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }
}

/// Anything that can hand over a single-mode density matrix.
pub trait SingleModeDensity {
    fn single_mode_rho(&self) -> Result<DMatrix<C64>>;
}

impl SingleModeDensity for FockState {
    fn single_mode_rho(&self) -> Result<DMatrix<C64>> {
        if self.mode_count() != 1 {
            return Err(Error::MultiModeUnsupported(self.mode_count()));
        }
        let a = self.amplitudes();
        let n2 = self.norm_sqr();
        Ok(DMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj() / n2))
    }
}

impl SingleModeDensity for FockEnsemble {
    fn single_mode_rho(&self) -> Result<DMatrix<C64>> {
        if self.mode_count() != 1 {
            return Err(Error::MultiModeUnsupported(self.mode_count()));
        }
        Ok(self.density_matrix()? / C64::new(self.total_weight(), 0.0))
    }
}

impl SingleModeDensity for DMatrix<C64> {
    fn single_mode_rho(&self) -> Result<DMatrix<C64>> {
        Ok(self.clone())
    }
}

/// Wigner function values at `points`.
///
/// Uses the stable Laguerre-free recursion over displaced-parity matrix
/// elements, so it stays accurate for every cutoff the factories allow.
pub fn wigner<S: SingleModeDensity + ?Sized>(state: &S, points: &[PhaseSpacePoint]) -> Result<Vec<f64>> {
    let rho = state.single_mode_rho()?;
    let d = rho.nrows();
    let mut column = vec![C64::new(0.0, 0.0); d];
    Ok(points
        .iter()
        .map(|pt| wigner_at(&rho, d, C64::new(pt.x, pt.p) / 2f64.sqrt(), &mut column))
        .collect())
}

fn wigner_at(rho: &DMatrix<C64>, d: usize, a: C64, w: &mut [C64]) -> f64 {
    w[0] = C64::new((-2.0 * a.norm_sqr()).exp() / PI, 0.0);
    let mut total = rho[(0, 0)].re * w[0].re;
    for n in 1..d {
        w[n] = 2.0 * a * w[n - 1] / (n as f64).sqrt();
        total += 2.0 * (rho[(0, n)] * w[n]).re;
    }
    for m in 1..d {
        let sm = (m as f64).sqrt();
        let mut temp = w[m];
        w[m] = (2.0 * a.conj() * temp - sm * w[m - 1]) / sm;
        total += (rho[(m, m)] * w[m]).re;
        for n in (m + 1)..d {
            let next = (2.0 * a * w[n - 1] - sm * temp) / (n as f64).sqrt();
            temp = w[n];
            w[n] = next;
            total += 2.0 * (rho[(m, n)] * w[n]).re;
        }
    }
    total
}

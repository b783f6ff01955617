//! Unambiguous discrimination of symmetric phase-shift-keyed coherent states,
//! the measure-and-resend benchmark.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigenvalues `λ_m = Σ_k u^{−km} ⟨γ₀|γ_k⟩` of the cyclic Gram matrix of
/// `{|u^k γ⟩}`, `u = e^{2πi/M}`.
///
/// Evaluated as `λ_m = M e^{−|γ|²} Σ_{n ≡ m (mod M)} |γ|^{2n}/n!`, which is the
/// same sum with the cancellations already done, so small eigenvalues keep
/// full relative precision.
pub fn psk_eigenvalues(arity: usize, gamma: C64) -> Vec<f64> {
    assert!(arity >= 1, "arity must be positive");
    let x = gamma.norm_sqr();
    let mut lam = vec![0.0; arity];
    if x == 0.0 {
        lam[0] = arity as f64;
        return lam;
    }
    let nmax = (x + 12.0 * x.sqrt() + 40.0).ceil() as usize;
    let lnx = x.ln();
    let mut lnfact = 0.0;
    for n in 0..=nmax {
        if n > 0 {
            lnfact += (n as f64).ln();
        }
        lam[n % arity] += (n as f64 * lnx - lnfact - x).exp();
    }
    lam.iter_mut().for_each(|l| *l *= arity as f64);
    lam
}

/// `M`-PSK ensemble `{u^m γ}` with equal priors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PskEnsemble {
    arity: usize,
    gamma: C64,
}

/// USD POVM in the orthonormal ω-basis of the ensemble's span.
#[derive(Clone, Debug)]
pub struct UsdPovm {
    pub elements: Vec<DMatrix<C64>>,
    pub inconclusive: DMatrix<C64>,
}

impl PskEnsemble {
    pub fn new(arity: usize, gamma: C64) -> Result<Self> {
        if arity < 2 {
            return Err(Error::InvalidParameter(format!("arity {arity} < 2")));
        }
        Ok(Self { arity, gamma })
    }

    /// States after a lossy channel: `γ = √(1−R_E) α`.
    pub fn after_loss(arity: usize, alpha: C64, loss: f64) -> Result<Self> {
        crate::optics::check_loss(loss)?;
        Self::new(arity, alpha * (1.0 - loss).sqrt())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    fn u(&self) -> C64 {
        C64::from_polar(1.0, 2.0 * std::f64::consts::PI / self.arity as f64)
    }

    pub fn state_amplitude(&self, m: usize) -> C64 {
        self.u().powu(m as u32) * self.gamma
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        psk_eigenvalues(self.arity, self.gamma)
    }

    /// Dense Gram matrix `⟨γ_j|γ_k⟩`.
    pub fn gram(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.arity, self.arity, |j, k| {
            crate::math::coherent_overlap(self.state_amplitude(j), self.state_amplitude(k))
        })
    }

    /// `|γ_m⟩ = Σ_k u^{km} √(λ_k/M) |ω_k⟩`.
    pub fn state_in_omega_basis(&self, m: usize) -> DVector<C64> {
        let lam = self.eigenvalues();
        let u = self.u();
        let mf = self.arity as f64;
        DVector::from_fn(self.arity, |k, _| u.powu((k * m) as u32) * (lam[k] / mf).sqrt())
    }

    pub fn usd_success(&self) -> f64 {
        usd_success(self)
    }

    pub fn usd_povm(&self) -> Result<UsdPovm> {
        usd_povm(self)
    }
}

/// `P_USD = min_k λ_k`.
pub fn usd_success(ens: &PskEnsemble) -> f64 {
    ens.eigenvalues().into_iter().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0)
}

/// `Π_m = (Λ/M) P_USD |γ_m^⊥⟩⟨γ_m^⊥|` with reciprocal states
/// `|γ_m^⊥⟩ = Λ^{−1/2} Σ_k u^{mk} λ_k^{−1/2} |ω_k⟩`, `Λ = Σ_k 1/λ_k`.
pub fn usd_povm(ens: &PskEnsemble) -> Result<UsdPovm> {
    let lam = ens.eigenvalues();
    let min = lam.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 1e-300) {
        return Err(Error::SingularEnsemble(min.max(0.0)));
    }
    let m = ens.arity;
    let big_lambda: f64 = lam.iter().map(|l| 1.0 / l).sum();
    let p = min;
    let u = ens.u();
    let elements = (0..m)
        .map(|j| {
            let v = DVector::from_fn(m, |k, _| u.powu((j * k) as u32) / (lam[k] * big_lambda).sqrt());
            &v * v.adjoint() * C64::new(big_lambda / m as f64 * p, 0.0)
        })
        .collect();
    let inconclusive = DMatrix::from_fn(m, m, |j, k| {
        if j == k {
            C64::new(1.0 - p / lam[j], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(UsdPovm {
        elements,
        inconclusive,
    })
}

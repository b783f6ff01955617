//! Truncated number-basis states.
//!
//! A [`FockState`] is a pure vector over `Π cutoffs` basis states stored in
//! row-major mode order (mode 0 slowest). A [`FockEnsemble`] is a weighted
//! list of pure branches standing in for a density operator; dense
//! multi-mode density matrices are never formed.

mod ensemble;
mod wigner;

pub use ensemble::FockEnsemble;
pub use wigner::{wigner, PhaseSpacePoint, SingleModeDensity};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Squared-norm tolerance used by [`FockState::normalize`] checks.
pub const NORM_TOL: f64 = 1e-9;
/// Largest tail population a factory may drop.
pub const TAIL_TOL: f64 = 1e-10;

/// Default per-mode cutoff for a coherent amplitude of magnitude `amplitude`.
pub fn default_cutoff(amplitude: f64) -> usize {
    let a = amplitude.abs();
    ((a * a + 8.0 * a + 10.0).ceil() as usize).clamp(10, 40)
}

/// Smallest cutoff whose coherent-state tail `Σ_{n ≥ d−1} pₙ` is below `tail`
/// for amplitude magnitude `amplitude`. Used when sizing pipelines.
pub fn coherent_cutoff(amplitude: f64, tail: f64) -> usize {
    let x = amplitude * amplitude;
    let mut p = (-x).exp();
    let mut below = 0.0;
    let mut n = 0usize;
    // after the loop `below` = Σ_{k<n} p_k and the cutoff is n + 1
    while 1.0 - below >= tail && n < 400 {
        below += p;
        n += 1;
        p *= x / n as f64;
    }
    (n + 1).max(2)
}

/// Pure state on a truncated multimode Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

/// Cat-state parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl FockState {
    /// Wraps raw amplitudes. `dims` may be empty, giving a one-element scalar state.
    pub fn from_amplitudes(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidParameter("cutoff must be positive".into()));
        }
        let len: usize = dims.iter().product();
        if len != amps.len() {
            return Err(Error::ShapeMismatch(dims, vec![amps.len()]));
        }
        Ok(Self { dims, amps })
    }

    /// Multimode vacuum.
    pub fn vacuum(dims: &[usize]) -> Self {
        let len: usize = dims.iter().product();
        let mut amps = vec![C64::new(0.0, 0.0); len];
        amps[0] = C64::new(1.0, 0.0);
        Self {
            dims: dims.to_vec(),
            amps,
        }
    }

    /// Single-mode number state `|n⟩`.
    pub fn number(n: usize, cutoff: usize) -> Result<Self> {
        if n >= cutoff {
            return Err(Error::CutoffTooSmall { cutoff, tail: 1.0 });
        }
        let mut amps = vec![C64::new(0.0, 0.0); cutoff];
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self {
            dims: vec![cutoff],
            amps,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn mode_count(&self) -> usize {
        self.dims.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Row-major strides, one per mode.
    pub fn strides(&self) -> Vec<usize> {
        strides(&self.dims)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalize(&mut self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if n2 < 1e-300 {
            return Err(Error::ZeroProbability(n2));
        }
        let inv = 1.0 / n2.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(n2)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(Error::BadModeIndex {
                index: mode,
                modes: self.dims.len(),
            });
        }
        Ok(())
    }

    /// Tensor product `self ⊗ other`; `other`'s modes are appended.
    pub fn tensor(&self, other: &FockState) -> FockState {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        FockState { dims, amps }
    }

    /// Photon-number distribution of one mode.
    pub fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let strides = self.strides();
        let d = self.dims[mode];
        let mut out = vec![0.0; d];
        for (idx, a) in self.amps.iter().enumerate() {
            out[(idx / strides[mode]) % d] += a.norm_sqr();
        }
        Ok(out)
    }

    /// `⟨n̂⟩` on `mode` divided by the squared norm.
    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        let dist = self.photon_distribution(mode)?;
        let total: f64 = dist.iter().sum();
        Ok(dist.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total)
    }

    /// Largest population held in the top retained level of any mode.
    pub fn top_level_population(&self) -> f64 {
        (0..self.mode_count())
            .map(|m| {
                let dist = self.photon_distribution(m).expect("mode in range");
                dist[dist.len() - 1]
            })
            .fold(0.0, f64::max)
    }

    /// Re-embeds the state in new per-mode cutoffs, dropping (or zero-padding)
    /// levels. Returns the state and the squared norm that was discarded.
    pub fn truncate(&self, new_dims: &[usize]) -> Result<(FockState, f64)> {
        if new_dims.len() != self.dims.len() {
            return Err(Error::ShapeMismatch(self.dims.clone(), new_dims.to_vec()));
        }
        let old_strides = self.strides();
        let new_strides = strides(new_dims);
        let len: usize = new_dims.iter().product();
        let mut amps = vec![C64::new(0.0, 0.0); len];
        let mut dropped = 0.0;
        'outer: for (idx, a) in self.amps.iter().enumerate() {
            let mut target = 0;
            for m in 0..self.dims.len() {
                let n = (idx / old_strides[m]) % self.dims[m];
                if n >= new_dims[m] {
                    dropped += a.norm_sqr();
                    continue 'outer;
                }
                target += n * new_strides[m];
            }
            amps[target] = *a;
        }
        Ok((
            FockState {
                dims: new_dims.to_vec(),
                amps,
            },
            dropped,
        ))
    }
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for m in (0..dims.len().saturating_sub(1)).rev() {
        s[m] = s[m + 1] * dims[m + 1];
    }
    s
}

/// `⟨a|b⟩`.
pub fn overlap(a: &FockState, b: &FockState) -> Result<C64> {
    if a.dims != b.dims {
        return Err(Error::ShapeMismatch(a.dims.clone(), b.dims.clone()));
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// `|⟨a|b⟩|²` for normalised pure states.
pub fn fidelity(a: &FockState, b: &FockState) -> Result<f64> {
    Ok(overlap(a, b)?.norm_sqr().min(1.0))
}

/// Normalises factory coefficients after checking the truncation tail.
///
/// `coeffs` must be the exact (infinite-space normalised) coefficients of
/// the first `cutoff` levels.
fn finish_factory(coeffs: Vec<C64>) -> Result<FockState> {
    let cutoff = coeffs.len();
    let kept: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let tail = (1.0 - kept).max(0.0) + coeffs[cutoff - 1].norm_sqr();
    if tail >= TAIL_TOL {
        return Err(Error::CutoffTooSmall { cutoff, tail });
    }
    FockState {
        dims: vec![cutoff],
        amps: coeffs,
    }
    .normalized()
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        return Err(Error::CutoffTooSmall { cutoff, tail: 1.0 });
    }
    Ok(())
}

/// Coherent state `|γ⟩`: `cₙ = e^{-|γ|²/2} γⁿ/√(n!)`.
pub fn coherent(amplitude: C64, cutoff: usize) -> Result<FockState> {
    check_cutoff(cutoff)?;
    let mut coeffs = Vec::with_capacity(cutoff);
    let mut c = C64::new((-amplitude.norm_sqr() / 2.0).exp(), 0.0);
    coeffs.push(c);
    for n in 1..cutoff {
        c = c * amplitude / (n as f64).sqrt();
        coeffs.push(c);
    }
    finish_factory(coeffs)
}

/// Cat state `N±(|β⟩ ± |−β⟩)`.
pub fn cat_state(amplitude: C64, parity: Parity, cutoff: usize) -> Result<FockState> {
    check_cutoff(cutoff)?;
    let a2 = amplitude.norm_sqr();
    if parity == Parity::Odd && a2 < 1e-300 {
        return Err(Error::DegenerateCat);
    }
    // |β⟩ ± |−β⟩ keeps 2·cₙ on the selected parity; the norm² is 2(1 ± e^{−2|β|²})
    let norm2 = match parity {
        Parity::Even => 2.0 * (1.0 + (-2.0 * a2).exp()),
        // expm1 avoids cancellation at small |β|
        Parity::Odd => -2.0 * (-2.0 * a2).exp_m1(),
    };
    let scale = 2.0 / norm2.sqrt();
    let keep = if parity == Parity::Even { 0 } else { 1 };
    let mut coeffs = Vec::with_capacity(cutoff);
    let mut c = C64::new((-a2 / 2.0).exp(), 0.0);
    for n in 0..cutoff {
        if n > 0 {
            c = c * amplitude / (n as f64).sqrt();
        }
        coeffs.push(if n % 2 == keep { c * scale } else { C64::new(0.0, 0.0) });
    }
    finish_factory(coeffs)
}

/// `k`-th member of the orthonormal ω-basis spanned by the M-PSK cat
/// components `|β u^m⟩`, `u = e^{2πi/M}`: support on `n ≡ k (mod M)` only.
pub fn mpsk_resource_state(beta: f64, arity: usize, k: usize, cutoff: usize) -> Result<FockState> {
    check_cutoff(cutoff)?;
    if arity < 2 {
        return Err(Error::InvalidParameter(format!("arity {arity} < 2")));
    }
    if k >= arity {
        return Err(Error::InvalidParameter(format!("index {k} outside 0..{arity}")));
    }
    if beta <= 0.0 {
        return Err(Error::InvalidParameter("beta must be positive".into()));
    }
    let lambdas = crate::usd::psk_eigenvalues(arity, C64::new(beta, 0.0));
    let lambda = lambdas[k];
    if lambda <= 0.0 {
        return Err(Error::SingularEnsemble(lambda));
    }
    let prefactor = (arity as f64 / lambda).sqrt();
    let mut coeffs = Vec::with_capacity(cutoff);
    let mut c = (-beta * beta / 2.0).exp();
    for n in 0..cutoff {
        if n > 0 {
            c *= beta / (n as f64).sqrt();
        }
        let v = if n % arity == k { c * prefactor } else { 0.0 };
        coeffs.push(C64::new(v, 0.0));
    }
    finish_factory(coeffs)
}

/// Squeezed vacuum `S(r)|0⟩` with `Var(x) = e^{−2r}/2`, `Var(p) = e^{2r}/2`.
/// Negative `r` anti-squeezes the `x` quadrature.
pub fn squeezed_vacuum(r: f64, cutoff: usize) -> Result<FockState> {
    check_cutoff(cutoff)?;
    let t = r.tanh();
    let mut coeffs = vec![C64::new(0.0, 0.0); cutoff];
    // c_{2k} = (−tanh r)^k √((2k)!)/(2^k k!) / √cosh r
    let mut c = 1.0 / r.cosh().sqrt();
    let mut k = 0usize;
    while 2 * k < cutoff {
        coeffs[2 * k] = C64::new(c, 0.0);
        k += 1;
        let n = 2 * k;
        c *= -t * ((n * (n - 1)) as f64).sqrt() / (2.0 * k as f64);
    }
    finish_factory(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn coherent_vacuum() {
        let s = coherent(re(0.0), 5).unwrap();
        assert_eq!(s.amplitudes()[0], re(1.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_ground_coefficient() {
        let s = coherent(re(1.0), 20).unwrap();
        assert!((s.amplitudes()[0].re - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn coherent_mean_photons_table_amplitude() {
        let s = coherent(re(1.11), 25).unwrap();
        assert!((s.mean_photon_number(0).unwrap() - 1.2321).abs() < 1e-6);
    }

    #[test]
    fn coherent_cutoff_too_small() {
        assert!(matches!(
            coherent(re(2.0), 8),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn odd_cat_parity_and_mean() {
        let b = 1.11f64;
        let s = cat_state(re(b), Parity::Odd, 30).unwrap();
        for (n, a) in s.amplitudes().iter().enumerate() {
            if n % 2 == 0 {
                assert_eq!(a.norm(), 0.0);
            }
        }
        let b2 = b * b;
        let analytic = b2 / b2.tanh();
        assert!((s.mean_photon_number(0).unwrap() - analytic).abs() < 1e-8);
    }

    #[test]
    fn even_cat_small_amplitude_is_vacuum() {
        let s = cat_state(re(1e-4), Parity::Even, 10).unwrap();
        let vac = FockState::vacuum(&[10]);
        assert!(fidelity(&s, &vac).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn odd_cat_at_zero_is_error() {
        assert_eq!(cat_state(re(0.0), Parity::Odd, 10), Err(Error::DegenerateCat));
    }

    #[test]
    fn omega_support_and_reduction() {
        let w = mpsk_resource_state(1.0, 4, 3, 30).unwrap();
        for (n, a) in w.amplitudes().iter().enumerate() {
            if n % 4 != 3 {
                assert_eq!(a.norm(), 0.0);
            }
        }
        let w2 = mpsk_resource_state(1.0, 2, 1, 30).unwrap();
        let cat = cat_state(re(1.0), Parity::Odd, 30).unwrap();
        assert!(fidelity(&w2, &cat).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn omega_basis_orthonormal() {
        let basis: Vec<_> = (0..4)
            .map(|k| mpsk_resource_state(1.0, 4, k, 30).unwrap())
            .collect();
        for j in 0..4 {
            for k in 0..4 {
                let o = overlap(&basis[j], &basis[k]).unwrap().norm();
                if j == k {
                    assert!((o - 1.0).abs() < 1e-12);
                } else {
                    assert!(o < 1e-9);
                }
            }
        }
    }

    #[test]
    fn squeezed_vacuum_parity_and_identity() {
        let s = squeezed_vacuum(0.0, 10).unwrap();
        assert_eq!(s, FockState::vacuum(&[10]));
        let s = squeezed_vacuum(0.3, 30).unwrap();
        for (n, a) in s.amplitudes().iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(a.norm(), 0.0);
            }
        }
    }

    /// Quadrature moments computed directly in the number basis.
    fn quadrature_variances(s: &FockState) -> (f64, f64) {
        let a = s.amplitudes();
        let d = a.len();
        // ⟨a²⟩ and ⟨a†a⟩, ⟨a⟩
        let mut a2 = C64::new(0.0, 0.0);
        let mut a1 = C64::new(0.0, 0.0);
        let mut n = 0.0;
        for k in 0..d {
            n += k as f64 * a[k].norm_sqr();
            if k + 1 < d {
                a1 += a[k].conj() * a[k + 1] * ((k + 1) as f64).sqrt();
            }
            if k + 2 < d {
                a2 += a[k].conj() * a[k + 2] * (((k + 1) * (k + 2)) as f64).sqrt();
            }
        }
        // x = (a + a†)/√2, p = (a − a†)/(i√2)
        let x2 = (2.0 * a2.re + 2.0 * n + 1.0) / 2.0;
        let p2 = (-2.0 * a2.re + 2.0 * n + 1.0) / 2.0;
        let mx = 2f64.sqrt() * a1.re;
        let mp = 2f64.sqrt() * a1.im;
        (x2 - mx * mx, p2 - mp * mp)
    }

    #[test]
    fn squeezed_vacuum_minimum_uncertainty() {
        let r = 0.3;
        let s = squeezed_vacuum(r, 40).unwrap();
        let (vx, vp) = quadrature_variances(&s);
        assert!((vx * vp - 0.25).abs() < 1e-8);
        assert!((vx - (-2.0 * r).exp() / 2.0).abs() < 1e-8);
    }

    #[test]
    fn coherent_overlap_closed_form() {
        let a = coherent(re(0.35), 25).unwrap();
        let b = coherent(re(1.05), 25).unwrap();
        let f = fidelity(&a, &b).unwrap();
        assert!((f - (-0.49f64).exp()).abs() < 1e-10);
        let c = coherent(re(1.0), 20).unwrap();
        let vac = FockState::vacuum(&[20]);
        assert!((fidelity(&c, &vac).unwrap() - (-1f64).exp()).abs() < 1e-12);
        assert!((fidelity(&c, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let a = FockState::vacuum(&[5]);
        let b = FockState::vacuum(&[6]);
        assert!(matches!(overlap(&a, &b), Err(Error::ShapeMismatch(..))));
    }

    #[test]
    fn default_cutoff_clamps() {
        assert_eq!(default_cutoff(0.0), 10);
        assert_eq!(default_cutoff(1.0), 19);
        assert_eq!(default_cutoff(10.0), 40);
    }

    #[test]
    fn truncate_reports_dropped_weight() {
        let s = FockState::number(3, 6).unwrap();
        let (t, dropped) = s.truncate(&[3]).unwrap();
        assert_eq!(dropped, 1.0);
        assert_eq!(t.norm_sqr(), 0.0);
    }
}

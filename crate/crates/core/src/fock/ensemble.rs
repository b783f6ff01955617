use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{overlap, FockState};
use crate::error::{Error, Result};

/// Largest Hilbert-space dimension for which a dense density matrix is built.
pub(crate) const DENSE_LIMIT: usize = 1024;

/// Weighted ensemble of pure branches, `ρ = Σ wᵢ |ψᵢ⟩⟨ψᵢ|`.
///
/// Branch states are kept normalised; the weights carry all probability.
#[derive(Clone, Debug)]
pub struct FockEnsemble {
    branches: Vec<(f64, FockState)>,
}

impl FockEnsemble {
    pub fn new(branches: Vec<(f64, FockState)>) -> Result<Self> {
        let Some(first) = branches.first() else {
            return Err(Error::InvalidParameter("empty ensemble".into()));
        };
        let dims = first.1.dims().to_vec();
        let mut out = Vec::with_capacity(branches.len());
        for (w, mut s) in branches {
            if s.dims() != dims.as_slice() {
                return Err(Error::ShapeMismatch(dims, s.dims().to_vec()));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidParameter(format!("branch weight {w}")));
            }
            if w == 0.0 {
                continue;
            }
            let n2 = s.normalize()?;
            out.push((w * n2, s));
        }
        if out.is_empty() {
            return Err(Error::ZeroProbability(0.0));
        }
        Ok(Self { branches: out })
    }

    pub fn pure(state: FockState) -> Self {
        let mut s = state;
        let n2 = s.normalize().unwrap_or(0.0);
        Self {
            branches: vec![(n2.max(f64::MIN_POSITIVE), s)],
        }
    }

    pub fn branches(&self) -> &[(f64, FockState)] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<(f64, FockState)> {
        self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        self.branches[0].1.dims()
    }

    pub fn mode_count(&self) -> usize {
        self.dims().len()
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|(w, _)| w).sum()
    }

    /// Rescales weights to sum to one and returns the previous total.
    pub fn normalize(&mut self) -> Result<f64> {
        let total = self.total_weight();
        if total < 1e-300 {
            return Err(Error::ZeroProbability(total));
        }
        self.branches.iter_mut().for_each(|(w, _)| *w /= total);
        Ok(total)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `⟨b|ρ|b⟩ = Σ wᵢ |⟨b|ψᵢ⟩|²`.
    pub fn fidelity(&self, target: &FockState) -> Result<f64> {
        let mut f = 0.0;
        for (w, s) in &self.branches {
            f += w * overlap(target, s)?.norm_sqr();
        }
        Ok(f.clamp(0.0, 1.0))
    }

    /// Hilbert–Schmidt inner product `Tr(ρσ)`.
    pub fn hs_overlap(&self, other: &FockEnsemble) -> Result<f64> {
        let mut acc = 0.0;
        for (w, a) in &self.branches {
            for (v, b) in &other.branches {
                acc += w * v * overlap(a, b)?.norm_sqr();
            }
        }
        Ok(acc)
    }

    pub fn purity(&self) -> f64 {
        self.hs_overlap(self).expect("same shape")
    }

    /// `Tr(ρσ)/max(Tr ρ², Tr σ²)`; equals the usual fidelity when either state
    /// is pure and reaches one only for `ρ = σ`.
    pub fn hs_fidelity(&self, other: &FockEnsemble) -> Result<f64> {
        let cross = self.hs_overlap(other)?;
        Ok(cross / self.purity().max(other.purity()))
    }

    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        let mut acc = 0.0;
        for (w, s) in &self.branches {
            acc += w * s.mean_photon_number(mode)?;
        }
        Ok(acc / self.total_weight())
    }

    /// Applies a state-to-state map to every branch, keeping weights.
    pub fn map_states(&self, f: impl Fn(&FockState) -> Result<FockState>) -> Result<Self> {
        let mut out = Vec::with_capacity(self.branches.len());
        for (w, s) in &self.branches {
            out.push((*w, f(s)?));
        }
        Self::new(out)
    }

    /// Appends the modes of a pure state to every branch.
    pub fn tensor(&self, other: &FockState) -> Self {
        let mut other = other.clone();
        let n2 = other.normalize().unwrap_or(1.0);
        Self {
            branches: self
                .branches
                .iter()
                .map(|(w, s)| (w * n2, s.tensor(&other)))
                .collect(),
        }
    }

    /// Dense `ρ` (only for small spaces).
    pub fn density_matrix(&self) -> Result<DMatrix<C64>> {
        let d = self.branches[0].1.len();
        if d > DENSE_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "dense density matrix of dimension {d} exceeds {DENSE_LIMIT}"
            )));
        }
        let mut rho = DMatrix::<C64>::zeros(d, d);
        for (w, s) in &self.branches {
            let a = s.amplitudes();
            for i in 0..d {
                if a[i].norm_sqr() == 0.0 {
                    continue;
                }
                let wi = a[i] * *w;
                for j in 0..d {
                    rho[(i, j)] += wi * a[j].conj();
                }
            }
        }
        Ok(rho)
    }

    /// Re-expresses the ensemble by the eigenvectors of `ρ`, dropping
    /// eigenvalues below `rel_tol · Tr ρ`. The operator is unchanged up to
    /// the dropped weight. No-op for spaces above the dense limit.
    pub fn compress(&self, rel_tol: f64) -> Result<Self> {
        let dims = self.dims().to_vec();
        let d: usize = dims.iter().product();
        if d > DENSE_LIMIT || self.branches.len() <= 1 {
            return Ok(self.clone());
        }
        let rho = self.density_matrix()?;
        let eig = rho.symmetric_eigen();
        let trace = self.total_weight();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut out = Vec::new();
        for k in order {
            let lam = eig.eigenvalues[k];
            if lam <= rel_tol * trace {
                break;
            }
            let v: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
            out.push((lam, FockState::from_amplitudes(dims.clone(), v)?));
        }
        if out.is_empty() {
            return Err(Error::ZeroProbability(trace));
        }
        Self::new(out)
    }

    /// Truncates each branch to new cutoffs; returns the ensemble (weights
    /// reduced by the dropped population) and the total dropped weight.
    pub fn truncate(&self, new_dims: &[usize]) -> Result<(Self, f64)> {
        let mut dropped = 0.0;
        let mut out = Vec::with_capacity(self.branches.len());
        for (w, s) in &self.branches {
            let (t, lost) = s.truncate(new_dims)?;
            dropped += w * lost;
            if 1.0 - lost > 0.0 {
                out.push((*w, t));
            }
        }
        Ok((Self::new(out)?, dropped))
    }
}

impl From<FockState> for FockEnsemble {
    fn from(s: FockState) -> Self {
        Self::pure(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent, FockState};

    #[test]
    fn compress_preserves_operator() {
        let a = coherent(C64::new(0.5, 0.0), 15).unwrap();
        let b = coherent(C64::new(-0.5, 0.2), 15).unwrap();
        let c = FockState::number(2, 15).unwrap();
        let ens = FockEnsemble::new(vec![(0.3, a.clone()), (0.3, b), (0.2, c), (0.2, a)]).unwrap();
        let comp = ens.compress(1e-14).unwrap();
        assert!(comp.len() <= 3);
        let diff = ens.density_matrix().unwrap() - comp.density_matrix().unwrap();
        assert!(diff.iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn fidelity_of_mixture() {
        let zero = FockState::number(0, 4).unwrap();
        let one = FockState::number(1, 4).unwrap();
        let ens = FockEnsemble::new(vec![(0.25, zero.clone()), (0.75, one)]).unwrap();
        assert!((ens.fidelity(&zero).unwrap() - 0.25).abs() < 1e-15);
        assert!((ens.purity() - (0.0625 + 0.5625)).abs() < 1e-15);
    }
}

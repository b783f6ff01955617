use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{check_loss, BeamSplitter, LinearOptics};
use crate::detection::PortMeasurement;
use crate::error::{Error, Result};
use crate::fock::{strides, FockEnsemble, FockState, Parity, TAIL_TOL};
use crate::math::{coherent_overlap, ln_factorials, product_overlap};

/// Default cap on the number of branches a state may carry.
pub const MAX_BRANCHES: usize = 64;

/// Amplitudes closer than this are treated as the same coherent product.
const MERGE_TOL: f64 = 1e-14;

/// One term `c |γ₀⟩⊗|γ₁⟩⊗…`.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub coefficient: C64,
    pub amplitudes: Vec<C64>,
}

impl Branch {
    pub fn new(coefficient: C64, amplitudes: Vec<C64>) -> Self {
        Self {
            coefficient,
            amplitudes,
        }
    }
}

/// Finite superposition of multimode coherent products.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentBranchState {
    modes: usize,
    branches: Vec<Branch>,
}

fn same_amplitudes(a: &[C64], b: &[C64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= MERGE_TOL)
}

impl CoherentBranchState {
    pub fn new(modes: usize, branches: Vec<Branch>) -> Result<Self> {
        Self::with_limit(modes, branches, MAX_BRANCHES)
    }

    pub fn with_limit(modes: usize, branches: Vec<Branch>, limit: usize) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidParameter("no branches".into()));
        }
        if branches.len() > limit {
            return Err(Error::TooManyBranches { limit });
        }
        for b in &branches {
            if b.amplitudes.len() != modes {
                return Err(Error::ShapeMismatch(vec![modes], vec![b.amplitudes.len()]));
            }
        }
        Ok(Self { modes, branches })
    }

    /// A single coherent product with coefficient one.
    pub fn product(amplitudes: Vec<C64>) -> Self {
        Self {
            modes: amplitudes.len(),
            branches: vec![Branch::new(C64::new(1.0, 0.0), amplitudes)],
        }
    }

    /// Normalised `c₀|α⟩ + c₁|−α⟩` on one mode.
    pub fn binary(amplitude: C64, c0: C64, c1: C64) -> Result<Self> {
        Self::new(
            1,
            vec![Branch::new(c0, vec![amplitude]), Branch::new(c1, vec![-amplitude])],
        )?
        .normalized()
    }

    /// Normalised even or odd cat on one mode.
    pub fn cat(amplitude: C64, parity: Parity) -> Result<Self> {
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        };
        Self::binary(amplitude, C64::new(1.0, 0.0), C64::new(sign, 0.0)).map_err(|e| match e {
            Error::ZeroProbability(_) => Error::DegenerateCat,
            other => other,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &CoherentBranchState) -> Result<C64> {
        if self.modes != other.modes {
            return Err(Error::ShapeMismatch(vec![self.modes], vec![other.modes]));
        }
        let mut acc = C64::new(0.0, 0.0);
        for a in &self.branches {
            for b in &other.branches {
                acc += a.coefficient.conj() * b.coefficient * product_overlap(&a.amplitudes, &b.amplitudes);
            }
        }
        Ok(acc)
    }

    /// Exact squared norm from the Gram matrix.
    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).expect("same shape").re
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < 1e-12
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if !(n2 > 1e-300) {
            return Err(Error::ZeroProbability(n2.max(0.0)));
        }
        let s = n2.sqrt();
        self.branches.iter_mut().for_each(|b| b.coefficient /= s);
        Ok(n2)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `|⟨self|other⟩|²` for normalised states.
    pub fn fidelity(&self, other: &CoherentBranchState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }

    pub fn tensor(&self, other: &CoherentBranchState) -> Result<Self> {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.branches {
            for b in &other.branches {
                let mut amps = a.amplitudes.clone();
                amps.extend_from_slice(&b.amplitudes);
                out.push(Branch::new(a.coefficient * b.coefficient, amps));
            }
        }
        Self::new(self.modes + other.modes, out)
    }

    /// Appends vacuum modes.
    pub fn with_vacuum(&self, extra: usize) -> Self {
        let mut s = self.clone();
        for b in &mut s.branches {
            b.amplitudes.extend(std::iter::repeat_n(C64::new(0.0, 0.0), extra));
        }
        s.modes += extra;
        s
    }

    /// Merges branches carrying identical amplitude vectors.
    pub fn merged(&self) -> Self {
        let mut out: Vec<Branch> = Vec::with_capacity(self.len());
        for b in &self.branches {
            match out.iter_mut().find(|o| same_amplitudes(&o.amplitudes, &b.amplitudes)) {
                Some(o) => o.coefficient += b.coefficient,
                None => out.push(b.clone()),
            }
        }
        out.retain(|b| b.coefficient.norm() > 0.0);
        Self {
            modes: self.modes,
            branches: out,
        }
    }

    /// Loss `R` on `mode`: the lost light is kept in a new last mode
    /// (amplitude `√R γ`), so the state stays pure.
    pub fn loss_channel(&self, mode: usize, loss: f64) -> Result<Self> {
        check_loss(loss)?;
        if mode >= self.modes {
            return Err(Error::BadModeIndex {
                index: mode,
                modes: self.modes,
            });
        }
        let env = self.modes;
        self.with_vacuum(1).apply_beamsplitter(&BeamSplitter::new(loss, mode, env)?)
    }

    /// Fock embedding with the given per-mode cutoffs. The result carries
    /// the exact norm of the source (no renormalisation).
    pub fn to_fock(&self, cutoffs: &[usize]) -> Result<FockState> {
        if cutoffs.len() != self.modes {
            return Err(Error::ShapeMismatch(vec![self.modes], vec![cutoffs.len()]));
        }
        let dims = cutoffs.to_vec();
        let st = strides(&dims);
        let len: usize = dims.iter().product();
        let dmax = dims.iter().copied().max().unwrap_or(1);
        let lf = ln_factorials(dmax);
        let mut amps = vec![C64::new(0.0, 0.0); len];
        for b in &self.branches {
            let per_mode: Vec<Vec<C64>> = b
                .amplitudes
                .iter()
                .zip(&dims)
                .map(|(g, &d)| coherent_coefficients(*g, d, &lf))
                .collect::<Result<_>>()?;
            for (idx, slot) in amps.iter_mut().enumerate() {
                let mut term = b.coefficient;
                for (m, coeffs) in per_mode.iter().enumerate() {
                    term *= coeffs[(idx / st[m]) % dims[m]];
                }
                *slot += term;
            }
        }
        FockState::from_amplitudes(dims, amps)
    }

    pub fn to_density(&self) -> BranchDensity {
        BranchDensity::from_state(self)
    }
}

fn coherent_coefficients(g: C64, cutoff: usize, lf: &[f64]) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(cutoff);
    let pre = (-g.norm_sqr() / 2.0).exp();
    let mut kept = 0.0;
    for (n, lfn) in lf.iter().enumerate().take(cutoff) {
        let c = if n == 0 {
            C64::new(pre, 0.0)
        } else {
            g.powu(n as u32) * (pre * (-0.5 * lfn).exp())
        };
        kept += c.norm_sqr();
        out.push(c);
    }
    let tail = (1.0 - kept).max(0.0) + out[cutoff - 1].norm_sqr();
    if tail >= TAIL_TOL {
        return Err(Error::CutoffTooSmall { cutoff, tail });
    }
    Ok(out)
}

impl LinearOptics for CoherentBranchState {
    fn apply_beamsplitter(&self, bs: &BeamSplitter) -> Result<Self> {
        bs.check(self.modes)?;
        let (i, j) = bs.modes();
        let mut s = self.clone();
        for b in &mut s.branches {
            let (gi, gj) = bs.map_amplitudes(b.amplitudes[i], b.amplitudes[j]);
            b.amplitudes[i] = gi;
            b.amplitudes[j] = gj;
        }
        Ok(s)
    }

    fn apply_phase(&self, mode: usize, phase: f64) -> Result<Self> {
        if mode >= self.modes {
            return Err(Error::BadModeIndex {
                index: mode,
                modes: self.modes,
            });
        }
        let u = C64::from_polar(1.0, phase);
        let mut s = self.clone();
        for b in &mut s.branches {
            b.amplitudes[mode] *= u;
        }
        Ok(s)
    }
}

/// `ρ = Σ_{jk} W_{jk} |a_j⟩⟨a_k|` over coherent products `a_j`.
///
/// Closed under beam splitters, phases, coherent-state POVM conditioning and
/// partial traces, since `⟨a_k|Π|a_j⟩` is known in closed form for every
/// detector outcome used here.
#[derive(Clone, Debug)]
pub struct BranchDensity {
    modes: usize,
    kets: Vec<Vec<C64>>,
    weights: DMatrix<C64>,
}

impl BranchDensity {
    pub fn new(modes: usize, kets: Vec<Vec<C64>>, weights: DMatrix<C64>) -> Result<Self> {
        let n = kets.len();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::ShapeMismatch(vec![n, n], vec![weights.nrows(), weights.ncols()]));
        }
        if kets.iter().any(|k| k.len() != modes) {
            return Err(Error::ShapeMismatch(vec![modes], vec![]));
        }
        Ok(Self { modes, kets, weights })
    }

    pub fn from_state(s: &CoherentBranchState) -> Self {
        let merged = s.merged();
        let c: Vec<C64> = merged.branches.iter().map(|b| b.coefficient).collect();
        let n = c.len();
        Self {
            modes: s.modes,
            kets: merged.branches.into_iter().map(|b| b.amplitudes).collect(),
            weights: DMatrix::from_fn(n, n, |j, k| c[j] * c[k].conj()),
        }
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn kets(&self) -> &[Vec<C64>] {
        &self.kets
    }

    pub fn weights(&self) -> &DMatrix<C64> {
        &self.weights
    }

    /// `G_{kj} = ⟨a_k|a_j⟩`.
    fn gram(&self) -> DMatrix<C64> {
        let n = self.kets.len();
        DMatrix::from_fn(n, n, |k, j| product_overlap(&self.kets[k], &self.kets[j]))
    }

    pub fn trace(&self) -> f64 {
        let g = self.gram();
        let n = self.kets.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                acc += self.weights[(j, k)] * g[(k, j)];
            }
        }
        acc.re
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t > 1e-300) {
            return Err(Error::ZeroProbability(t.max(0.0)));
        }
        Ok(Self {
            modes: self.modes,
            kets: self.kets.clone(),
            weights: &self.weights / C64::new(t, 0.0),
        })
    }

    /// `⟨φ|ρ|φ⟩ / (Tr ρ ⟨φ|φ⟩)`.
    pub fn fidelity(&self, target: &CoherentBranchState) -> Result<f64> {
        if target.mode_count() != self.modes {
            return Err(Error::ShapeMismatch(vec![self.modes], vec![target.mode_count()]));
        }
        let proj: Vec<C64> = self
            .kets
            .iter()
            .map(|a| {
                target
                    .branches()
                    .iter()
                    .map(|b| b.coefficient.conj() * product_overlap(&b.amplitudes, a))
                    .sum()
            })
            .collect();
        let n = self.kets.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                acc += self.weights[(j, k)] * proj[j] * proj[k].conj();
            }
        }
        Ok(acc.re / (self.trace() * target.norm_sqr()))
    }

    /// `Tr(ρσ)` (unnormalised operators).
    pub fn hs_overlap(&self, other: &BranchDensity) -> Result<f64> {
        if other.modes != self.modes {
            return Err(Error::ShapeMismatch(vec![self.modes], vec![other.modes]));
        }
        let o = DMatrix::from_fn(self.kets.len(), other.kets.len(), |k, l| {
            product_overlap(&self.kets[k], &other.kets[l])
        });
        Ok((&self.weights * &o * &other.weights * o.adjoint()).trace().re)
    }

    pub fn purity(&self) -> f64 {
        let t = self.trace();
        self.hs_overlap(self).expect("same shape") / (t * t)
    }

    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        if mode >= self.modes {
            return Err(Error::BadModeIndex {
                index: mode,
                modes: self.modes,
            });
        }
        let n = self.kets.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                let a = &self.kets[j];
                let b = &self.kets[k];
                acc += self.weights[(j, k)] * product_overlap(b, a) * b[mode].conj() * a[mode];
            }
        }
        Ok(acc.re / self.trace())
    }

    fn reduce_with(&self, modes: &[usize], element: impl Fn(usize, C64, C64) -> C64) -> Result<Self> {
        for (i, &m) in modes.iter().enumerate() {
            if m >= self.modes {
                return Err(Error::BadModeIndex {
                    index: m,
                    modes: self.modes,
                });
            }
            if modes[..i].contains(&m) {
                return Err(Error::InvalidParameter(format!("mode {m} measured twice")));
            }
        }
        let n = self.kets.len();
        let weights = DMatrix::from_fn(n, n, |j, k| {
            let mut f = self.weights[(j, k)];
            for (slot, &m) in modes.iter().enumerate() {
                f *= element(slot, self.kets[k][m], self.kets[j][m]);
            }
            f
        });
        let kets = self
            .kets
            .iter()
            .map(|a| {
                a.iter()
                    .enumerate()
                    .filter(|(m, _)| !modes.contains(m))
                    .map(|(_, g)| *g)
                    .collect()
            })
            .collect();
        Ok(Self {
            modes: self.modes - modes.len(),
            kets,
            weights,
        }
        .merged())
    }

    /// Applies the measurement operators and removes the measured modes.
    /// The result is unnormalised; its trace over the input trace is the
    /// outcome probability.
    pub fn reduce(&self, measurements: &[PortMeasurement]) -> Result<Self> {
        let modes: Vec<usize> = measurements.iter().map(|m| m.mode).collect();
        self.reduce_with(&modes, |slot, bra, ket| measurements[slot].branch_element(bra, ket))
    }

    /// Keeps only the listed modes (in their original order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if let Some(&bad) = keep.iter().find(|&&k| k >= self.modes) {
            return Err(Error::BadModeIndex {
                index: bad,
                modes: self.modes,
            });
        }
        let traced: Vec<usize> = (0..self.modes).filter(|m| !keep.contains(m)).collect();
        self.reduce_with(&traced, |_, bra, ket| coherent_overlap(bra, ket))
    }

    /// Sums rows and columns of identical kets.
    pub fn merged(&self) -> Self {
        let mut kets: Vec<Vec<C64>> = Vec::new();
        let mut map = Vec::with_capacity(self.kets.len());
        for a in &self.kets {
            match kets.iter().position(|k| same_amplitudes(k, a)) {
                Some(p) => map.push(p),
                None => {
                    map.push(kets.len());
                    kets.push(a.clone());
                }
            }
        }
        if kets.len() == self.kets.len() {
            return self.clone();
        }
        let mut w = DMatrix::<C64>::zeros(kets.len(), kets.len());
        for j in 0..self.kets.len() {
            for k in 0..self.kets.len() {
                w[(map[j], map[k])] += self.weights[(j, k)];
            }
        }
        Self {
            modes: self.modes,
            kets,
            weights: w,
        }
    }

    /// Fock ensemble via the eigen-decomposition of `W`.
    pub fn to_fock_ensemble(&self, cutoffs: &[usize]) -> Result<FockEnsemble> {
        let eig = self.weights.clone().symmetric_eigen();
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let mut out = Vec::new();
        for (l, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam <= 1e-15 * top {
                continue;
            }
            let branches = self
                .kets
                .iter()
                .enumerate()
                .map(|(j, a)| Branch::new(eig.eigenvectors[(j, l)], a.clone()))
                .collect();
            let s = CoherentBranchState::with_limit(self.modes, branches, usize::MAX)?.to_fock(cutoffs)?;
            out.push((lam, s));
        }
        if out.is_empty() {
            return Err(Error::ZeroProbability(0.0));
        }
        FockEnsemble::new(out)
    }
}

impl LinearOptics for BranchDensity {
    fn apply_beamsplitter(&self, bs: &BeamSplitter) -> Result<Self> {
        bs.check(self.modes)?;
        let (i, j) = bs.modes();
        let mut s = self.clone();
        for a in &mut s.kets {
            let (gi, gj) = bs.map_amplitudes(a[i], a[j]);
            a[i] = gi;
            a[j] = gj;
        }
        Ok(s)
    }

    fn apply_phase(&self, mode: usize, phase: f64) -> Result<Self> {
        if mode >= self.modes {
            return Err(Error::BadModeIndex {
                index: mode,
                modes: self.modes,
            });
        }
        let u = C64::from_polar(1.0, phase);
        let mut s = self.clone();
        for a in &mut s.kets {
            a[mode] *= u;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{Outcome, PortMeasurement};
    use crate::fock::{cat_state, coherent};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn balanced_split_of_equal_pair() {
        let a = c(0.6);
        let s = CoherentBranchState::product(vec![a, a]);
        let out = s.apply_beamsplitter(&BeamSplitter::new(0.5, 0, 1).unwrap()).unwrap();
        let amps = &out.branches()[0].amplitudes;
        assert!(amps[0].norm() < 1e-15);
        assert!((amps[1] - a * 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn phase_quarter_turns_return() {
        let s = CoherentBranchState::cat(C64::new(0.7, 0.2), Parity::Odd).unwrap();
        let mut t = s.clone();
        for _ in 0..4 {
            t = t.apply_phase(0, std::f64::consts::FRAC_PI_2).unwrap();
        }
        for (x, y) in s.branches().iter().zip(t.branches()) {
            assert!((x.amplitudes[0] - y.amplitudes[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn loss_appends_environment() {
        let s = CoherentBranchState::product(vec![c(0.35)]);
        let out = s.loss_channel(0, 0.8).unwrap();
        assert_eq!(out.mode_count(), 2);
        let a = &out.branches()[0].amplitudes;
        assert!((a[0] - c(0.2f64.sqrt() * 0.35)).norm() < 1e-15);
        assert!((a[1] - c(0.8f64.sqrt() * 0.35)).norm() < 1e-15);
        let none = s.loss_channel(0, 0.0).unwrap();
        assert_eq!(none.branches()[0].amplitudes[1], c(0.0));
    }

    #[test]
    fn sequential_losses_compose() {
        let s = CoherentBranchState::product(vec![C64::new(0.9, -0.3)]);
        let two = s.loss_channel(0, 0.3).unwrap().loss_channel(0, 0.6).unwrap();
        let one = s.loss_channel(0, 1.0 - 0.7 * 0.4).unwrap();
        assert!((two.branches()[0].amplitudes[0] - one.branches()[0].amplitudes[0]).norm() < 1e-15);
    }

    #[test]
    fn to_fock_matches_factories() {
        let g = C64::new(0.8, 0.3);
        let s = CoherentBranchState::product(vec![g]).to_fock(&[20]).unwrap();
        let f = coherent(g, 20).unwrap();
        assert!((crate::fock::fidelity(&s, &f).unwrap() - 1.0).abs() < 1e-12);
        let cat = CoherentBranchState::cat(c(1.11), Parity::Odd).unwrap().to_fock(&[30]).unwrap();
        let fc = cat_state(c(1.11), Parity::Odd, 30).unwrap();
        assert!((crate::fock::fidelity(&cat, &fc).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn to_fock_rejects_small_cutoff() {
        let s = CoherentBranchState::product(vec![c(2.0)]);
        assert!(matches!(s.to_fock(&[5]), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn density_trace_and_conditioning() {
        let s = CoherentBranchState::cat(c(0.8), Parity::Even)
            .unwrap()
            .with_vacuum(1)
            .apply_beamsplitter(&BeamSplitter::new(0.5, 0, 1).unwrap())
            .unwrap();
        let rho = s.to_density();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let off = rho.reduce(&[PortMeasurement::ideal(1, Outcome::Off)]).unwrap();
        let on = rho.reduce(&[PortMeasurement::ideal(1, Outcome::On)]).unwrap();
        assert!((off.trace() + on.trace() - 1.0).abs() < 1e-12);
        let kept = rho.partial_trace(&[0]).unwrap();
        assert!((kept.trace() - 1.0).abs() < 1e-12);
    }
}

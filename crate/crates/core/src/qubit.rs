//! Cat-qubit teleportation with a realistic photon-subtracted squeezed
//! vacuum resource, lossy optics and inefficient on/off detection.
//!
//! The resource and Alice's measurement do not depend on the input qubit,
//! so the conditional output is a fixed bilinear map of the input
//! coefficients: `ρ_B = Σ_{s,s′} c_s c_{s′}* X_{ss′}` with `s, s′ ∈ {+α, −α}`.
//! [`QubitChannel`] precomputes the four `X` operators once per setting;
//! Bloch-sphere maps then cost one small matrix sum per point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::detection::{condition_fock, DetectorModel, Outcome, PortMeasurement};
use crate::error::{Error, Result};
use crate::fock::{cat_state, coherent, coherent_cutoff, squeezed_vacuum, FockEnsemble, FockState, Parity};
use crate::math::{bisect, golden_max};
use crate::optics::{
    loss_channel, partial_trace, photon_subtract, BeamSplitter, CoherentBranchState, LinearOptics,
    DEFAULT_KRAUS_THRESHOLD,
};
use crate::protocol::{solve_r_a_for_gain, ProtocolConfig};

/// Qubit `cos(θ/2)|Φ₊(α)⟩ + e^{iφ} sin(θ/2)|Φ₋(α)⟩` on even/odd cats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatQubit {
    pub alpha: f64,
    pub theta: f64,
    pub phi: f64,
}

impl CatQubit {
    pub fn new(alpha: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::DegenerateCat);
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta {theta} outside [0, π]")));
        }
        Ok(Self { alpha, theta, phi })
    }

    /// Same point on the sphere, different cat amplitude.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.theta, self.phi)
    }

    /// `(N₊, N₋) = (1/√(2(1+e^{−2α²})), 1/√(2(1−e^{−2α²})))`.
    pub fn norms(&self) -> (f64, f64) {
        let a2 = self.alpha * self.alpha;
        (
            1.0 / (2.0 * (1.0 + (-2.0 * a2).exp())).sqrt(),
            1.0 / (-2.0 * (-2.0 * a2).exp_m1()).sqrt(),
        )
    }

    /// Coherent-basis coefficients `c± = N₊cos(θ/2) ± N₋e^{iφ}sin(θ/2)`.
    pub fn coefficients(&self) -> (C64, C64) {
        let (np, nm) = self.norms();
        let even = C64::new(np * (self.theta / 2.0).cos(), 0.0);
        let odd = C64::from_polar(nm * (self.theta / 2.0).sin(), self.phi);
        (even + odd, even - odd)
    }

    /// Latitude at which the qubit is the coherent state `|α⟩` (`φ = 0`).
    pub fn coherent_theta(alpha: f64) -> f64 {
        let q = CatQubit {
            alpha,
            theta: 0.0,
            phi: 0.0,
        };
        let (np, nm) = q.norms();
        2.0 * (np / nm).atan()
    }

    pub fn to_branch_state(&self) -> CoherentBranchState {
        let (cp, cm) = self.coefficients();
        CoherentBranchState::new(
            1,
            vec![
                crate::optics::Branch::new(cp, vec![C64::new(self.alpha, 0.0)]),
                crate::optics::Branch::new(cm, vec![C64::new(-self.alpha, 0.0)]),
            ],
        )
        .expect("two single-mode branches")
    }

    pub fn to_fock(&self, cutoff: usize) -> Result<FockState> {
        self.to_branch_state().to_fock(&[cutoff])?.normalized()
    }
}

/// Alice's detection model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AliceDetection {
    /// `|1⟩⟨1|` at A, `|0⟩⟨0|` at C.
    Projector,
    /// On/off at A with the model's APD efficiency; optional off at C.
    OnOff { detect_c: bool },
}

/// Imperfections of the experiment's resource and detection chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImperfectionModel {
    /// Virtual transmission emulating the impurity of the squeezed vacuum.
    pub sv_transmission: f64,
    pub opo_escape: f64,
    pub tap_ratio: f64,
    pub propagation: f64,
    /// Efficiency of both APDs (subtraction herald and Alice).
    pub apd_efficiency: f64,
    pub alice: AliceDetection,
    /// Replace the subtracted squeezed vacuum by an exact odd cat.
    pub exact_cat: bool,
}

impl Default for ImperfectionModel {
    fn default() -> Self {
        Self {
            sv_transmission: 0.92,
            opo_escape: 0.96,
            tap_ratio: 0.05,
            propagation: 0.95,
            apd_efficiency: 0.10,
            alice: AliceDetection::OnOff { detect_c: false },
            exact_cat: false,
        }
    }
}

impl ImperfectionModel {
    /// Exact cat resource and ideal projectors.
    pub fn ideal() -> Self {
        Self {
            sv_transmission: 1.0,
            opo_escape: 1.0,
            tap_ratio: 1e-4,
            propagation: 1.0,
            apd_efficiency: 1.0,
            alice: AliceDetection::Projector,
            exact_cat: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sv_transmission", self.sv_transmission),
            ("opo_escape", self.opo_escape),
            ("propagation", self.propagation),
            ("apd_efficiency", self.apd_efficiency),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside (0, 1]")));
            }
        }
        if !(self.tap_ratio > 0.0 && self.tap_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!("tap_ratio = {} outside (0, 1)", self.tap_ratio)));
        }
        Ok(())
    }

    fn apd(&self) -> DetectorModel {
        DetectorModel::new(0.0, self.apd_efficiency).expect("validated efficiency")
    }
}

/// Cutoff for a squeezed vacuum of squeezing `|r|` (smallest passing the tail check, ≥ 12).
pub fn squeezed_cutoff(r: f64) -> usize {
    (12..=80)
        .step_by(2)
        .find(|&d| squeezed_vacuum(-r.abs(), d).is_ok())
        .unwrap_or(80)
}

/// Photon-subtracted squeezed vacuum on one mode: squeezed vacuum (x
/// anti-squeezed by `r ≥ 0`) → impurity loss → OPO escape → tap with an
/// on/off herald → propagation. Returns the heralded ensemble and the
/// herald probability.
pub fn build_pssv_resource(r: f64, model: &ImperfectionModel, cutoff: usize) -> Result<(FockEnsemble, f64)> {
    model.validate()?;
    let sv = squeezed_vacuum(-r.abs(), cutoff)?;
    let mut ens = FockEnsemble::pure(sv);
    for t in [model.sv_transmission, model.opo_escape] {
        ens = loss_channel(&ens, 0, 1.0 - t, DEFAULT_KRAUS_THRESHOLD)?;
    }
    let (sub, p) = photon_subtract(&ens, 0, model.tap_ratio, model.apd())?;
    let out = loss_channel(&sub, 0, 1.0 - model.propagation, DEFAULT_KRAUS_THRESHOLD)?.compress(1e-13)?;
    Ok((out, p))
}

/// Odd-cat amplitude with the highest fidelity to `rho`, and that fidelity.
pub fn best_fit_cat(rho: &FockEnsemble) -> Result<(f64, f64)> {
    let d = rho.dims()[0];
    let fid = |b: f64| -> f64 {
        cat_state(C64::new(b, 0.0), Parity::Odd, d)
            .and_then(|c| rho.fidelity(&c))
            .unwrap_or(0.0)
    };
    let hi = max_cat_amplitude(d);
    Ok(golden_max(0.02, hi, 1e-7, fid))
}

fn max_cat_amplitude(cutoff: usize) -> f64 {
    // largest amplitude whose coherent tail still fits the cutoff
    let mut a = 0.05;
    while coherent_cutoff(a + 0.05, 1e-11) <= cutoff && a < 6.0 {
        a += 0.05;
    }
    a
}

/// Squeezing `r` whose subtracted resource best fits an odd cat of
/// amplitude `beta`; returns `(r, fit fidelity)`.
pub fn solve_squeezing(beta: f64, model: &ImperfectionModel) -> Result<(f64, f64)> {
    let fit = |r: f64| -> Result<(f64, f64)> {
        let d = squeezed_cutoff(r);
        let (ens, _) = build_pssv_resource(r, model, d)?;
        best_fit_cat(&ens)
    };
    let r = bisect(1e-3, 1.2, 1e-7, |r| fit(r).map(|(b, _)| b - beta).unwrap_or(f64::NAN))
        .ok_or_else(|| Error::Domain(format!("no squeezing reproduces cat amplitude {beta}")))?;
    let (_, f) = fit(r)?;
    Ok((r, f))
}

/// Anchors relating pump parameter to fitted cat amplitude.
pub const EPSILON_ANCHORS: [(f64, f64); 2] = [(0.15, 0.78), (0.31, 1.15)];

/// `r = κ · 2 artanh(ε)`: the below-threshold OPO squeezing at zero
/// detuning, scaled by `κ` to absorb mode-shape averaging.
pub fn squeezing_from_epsilon(eps: f64, kappa: f64) -> f64 {
    kappa * 2.0 * eps.atanh()
}

/// Best-fit cat amplitude (and fit fidelity) for pump parameter `ε`.
pub fn beta_from_epsilon(eps: f64, kappa: f64, model: &ImperfectionModel) -> Result<(f64, f64)> {
    let r = squeezing_from_epsilon(eps, kappa);
    let (ens, _) = build_pssv_resource(r, model, squeezed_cutoff(r))?;
    best_fit_cat(&ens)
}

/// [`calibrate_kappa`] for the default model.
pub const DEFAULT_KAPPA: f64 = 0.8233;

/// Least-squares `κ` through [`EPSILON_ANCHORS`].
pub fn calibrate_kappa(model: &ImperfectionModel) -> Result<f64> {
    let cost = |k: f64| -> f64 {
        EPSILON_ANCHORS
            .iter()
            .map(|&(e, b)| match beta_from_epsilon(e, k, model) {
                Ok((fit, _)) => (fit - b).powi(2),
                Err(_) => 1e6,
            })
            .sum()
    };
    let (k, _) = golden_max(0.2, 1.5, 1e-6, |k| -cost(k));
    Ok(k)
}

/// Setting of one teleportation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitSetup {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub r_b: f64,
    /// Loss between Bob's split and Alice.
    pub r_e: f64,
    pub model: ImperfectionModel,
}

impl QubitSetup {
    pub fn new(alpha: f64, alpha_prime: f64, model: ImperfectionModel) -> Self {
        Self {
            alpha,
            alpha_prime,
            r_b: 0.1,
            r_e: 0.0,
            model,
        }
    }

    pub fn protocol(&self) -> Result<ProtocolConfig> {
        if !(self.alpha > 0.0 && self.alpha_prime > 0.0) {
            return Err(Error::DegenerateCat);
        }
        let g = self.alpha_prime / self.alpha;
        ProtocolConfig::new(
            C64::new(self.alpha, 0.0),
            solve_r_a_for_gain(g, self.r_b, self.r_e)?,
            self.r_b,
            self.r_e,
        )
    }
}

/// Resource state actually shared, with the squeezing used (0 for an exact cat).
#[derive(Clone, Debug)]
pub struct Resource {
    pub state: FockEnsemble,
    pub squeezing: f64,
    pub fit_fidelity: f64,
}

pub fn build_resource(setup: &QubitSetup) -> Result<Resource> {
    let beta = setup.protocol()?.matched_beta();
    if setup.model.exact_cat {
        let d = coherent_cutoff(beta, 1e-12).max(coherent_cutoff(setup.alpha_prime, 1e-12)) + 2;
        return Ok(Resource {
            state: FockEnsemble::pure(cat_state(C64::new(beta, 0.0), Parity::Odd, d)?),
            squeezing: 0.0,
            fit_fidelity: 1.0,
        });
    }
    let (r, fit) = solve_squeezing(beta, &setup.model)?;
    let d = squeezed_cutoff(r).max(coherent_cutoff(setup.alpha_prime, 1e-12) + 2);
    let (state, _) = build_pssv_resource(r, &setup.model, d)?;
    Ok(Resource {
        state,
        squeezing: r,
        fit_fidelity: fit,
    })
}

fn alice_measurements(model: &ImperfectionModel, mode_a: usize, mode_c: usize) -> Vec<PortMeasurement> {
    match model.alice {
        AliceDetection::Projector => vec![
            PortMeasurement::ideal(mode_a, Outcome::Photons(1)),
            PortMeasurement::ideal(mode_c, Outcome::Photons(0)),
        ],
        AliceDetection::OnOff { detect_c } => {
            let mut m = vec![PortMeasurement::new(mode_a, Outcome::On, model.apd())];
            if detect_c {
                m.push(PortMeasurement::new(mode_c, Outcome::Off, model.apd()));
            }
            m
        }
    }
}

/// Shared half of the resource after Bob's split and the channel, on `[B, C]`.
fn split_resource(resource: &FockEnsemble, cfg: &ProtocolConfig, dim_c: usize) -> Result<FockEnsemble> {
    let split = resource
        .tensor(&FockState::vacuum(&[dim_c]))
        .apply_beamsplitter(&BeamSplitter::new(cfg.r_b, 0, 1)?)?;
    loss_channel(&split, 1, cfg.r_e, DEFAULT_KRAUS_THRESHOLD)
}

fn mode_cutoffs(setup: &QubitSetup, cfg: &ProtocolConfig) -> (usize, usize) {
    let a = setup.alpha;
    let dim_a = coherent_cutoff(a, 1e-12) + 2;
    let dim_c = coherent_cutoff(a + (cfg.r_b).sqrt() * cfg.matched_beta() + 0.3, 1e-12) + 2;
    (dim_a, dim_c)
}

/// Conditional map from input coefficients to Bob's (π-corrected) state.
#[derive(Clone, Debug)]
pub struct QubitChannel {
    /// `x[s][s′]`, `s = 0` for `|+α⟩`, `1` for `|−α⟩`.
    x: [[DMatrix<C64>; 2]; 2],
    pub setup: QubitSetup,
    pub squeezing: f64,
    pub resource_fit_fidelity: f64,
}

impl QubitChannel {
    pub fn new(setup: &QubitSetup) -> Result<Self> {
        let cfg = setup.protocol()?;
        let resource = build_resource(setup)?;
        let (dim_a, dim_c) = mode_cutoffs(setup, &cfg);
        let shared = split_resource(&resource.state, &cfg, dim_c)?;
        let dim_b = shared.dims()[0];
        let inputs = [
            coherent(C64::new(setup.alpha, 0.0), dim_a)?,
            coherent(C64::new(-setup.alpha, 0.0), dim_a)?,
        ];
        let meas = alice_measurements(&setup.model, 0, 2);
        let diag_a: Vec<f64> = (0..dim_a).map(|n| meas[0].fock_diagonal(n)).collect();
        let diag_c: Vec<f64> = match meas.get(1) {
            Some(m) => (0..dim_c).map(|n| m.fock_diagonal(n)).collect(),
            None => vec![1.0; dim_c],
        };
        let bs = BeamSplitter::new(cfg.r_a, 0, 2)?;
        let zero = DMatrix::<C64>::zeros(dim_b, dim_b);
        let mut x = [[zero.clone(), zero.clone()], [zero.clone(), zero]];
        // π phase on B folded in: (−1)^n
        let parity: Vec<f64> = (0..dim_b).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
        for (w, phi) in shared.branches() {
            let chis: Vec<FockState> = inputs
                .iter()
                .map(|inp| inp.tensor(phi).apply_beamsplitter(&bs))
                .collect::<Result<_>>()?;
            for na in 0..dim_a {
                if diag_a[na] == 0.0 {
                    continue;
                }
                for nc in 0..dim_c {
                    let weight = diag_a[na] * diag_c[nc];
                    if weight == 0.0 {
                        continue;
                    }
                    let vs: Vec<DVector<C64>> = chis
                        .iter()
                        .map(|chi| {
                            let amps = chi.amplitudes();
                            DVector::from_fn(dim_b, |nb, _| amps[(na * dim_b + nb) * dim_c + nc] * parity[nb])
                        })
                        .collect();
                    let f = C64::new(w * weight, 0.0);
                    for s in 0..2 {
                        for t in 0..2 {
                            x[s][t] += &vs[s] * vs[t].adjoint() * f;
                        }
                    }
                }
            }
        }
        Ok(Self {
            x,
            setup: *setup,
            squeezing: resource.squeezing,
            resource_fit_fidelity: resource.fit_fidelity,
        })
    }

    pub fn dim_b(&self) -> usize {
        self.x[0][0].nrows()
    }

    /// Unnormalised Bob state for input coefficients `(c₊, c₋)`; its trace
    /// is the success probability given a resource herald.
    pub fn output(&self, c_plus: C64, c_minus: C64) -> DMatrix<C64> {
        let c = [c_plus, c_minus];
        let mut rho = DMatrix::<C64>::zeros(self.dim_b(), self.dim_b());
        for s in 0..2 {
            for t in 0..2 {
                rho += &self.x[s][t] * (c[s] * c[t].conj());
            }
        }
        rho
    }

    /// Fidelity of the output for input `c₊|α⟩ + c₋|−α⟩` with `target`
    /// (on Bob's cutoff), and the success probability.
    pub fn fidelity_with(&self, c_plus: C64, c_minus: C64, target: &FockState) -> Result<(f64, f64)> {
        let rho = self.output(c_plus, c_minus);
        let p = rho.trace().re;
        if !(p > 1e-300) {
            return Err(Error::ZeroProbability(p.max(0.0)));
        }
        if target.dims() != [self.dim_b()] {
            return Err(Error::ShapeMismatch(vec![self.dim_b()], target.dims().to_vec()));
        }
        let t = DVector::from_column_slice(target.amplitudes());
        let f = (t.adjoint() * &rho * &t)[(0, 0)].re / p;
        Ok((f.clamp(0.0, 1.0), p))
    }

    /// Fidelity with `ψ(α′, θ, φ)` and the success probability.
    pub fn evaluate(&self, theta: f64, phi: f64) -> Result<(f64, f64)> {
        let q = CatQubit::new(self.setup.alpha, theta, phi)?;
        let (cp, cm) = q.coefficients();
        let target = q.with_alpha(self.setup.alpha_prime)?.to_fock(self.dim_b())?;
        self.fidelity_with(cp, cm, &target)
    }

    /// Coherent input `|α⟩` against the target `|α′⟩`.
    pub fn coherent_fidelity(&self) -> Result<(f64, f64)> {
        let target = coherent(C64::new(self.setup.alpha_prime, 0.0), self.dim_b())?;
        self.fidelity_with(C64::new(1.0, 0.0), C64::new(0.0, 0.0), &target)
    }
}

/// Direct Fock-engine run for one qubit: returns Bob's state, the fidelity
/// with `ψ(α′, θ, φ)` and the herald probability.
pub fn teleport_qubit(q: &CatQubit, setup: &QubitSetup) -> Result<(FockEnsemble, f64, f64)> {
    if (q.alpha - setup.alpha).abs() > 1e-12 {
        return Err(Error::InvalidParameter("qubit amplitude differs from the setup".into()));
    }
    let cfg = setup.protocol()?;
    let resource = build_resource(setup)?;
    let (dim_a, dim_c) = mode_cutoffs(setup, &cfg);
    let shared = split_resource(&resource.state, &cfg, dim_c)?;
    let input = q.to_fock(dim_a)?;
    let mut branches = Vec::with_capacity(shared.len());
    for (w, phi) in shared.branches() {
        branches.push((*w, input.tensor(phi)));
    }
    let ens = FockEnsemble::new(branches)?.apply_beamsplitter(&BeamSplitter::new(cfg.r_a, 0, 2)?)?;
    let cond = condition_fock(&ens, &alice_measurements(&setup.model, 0, 2))?;
    let bob = if cond.state.mode_count() == 1 {
        cond.state
    } else {
        partial_trace(&cond.state, &[0])?
    };
    let bob = bob.apply_phase(0, PI)?;
    let target = q.with_alpha(setup.alpha_prime)?.to_fock(bob.dims()[0])?;
    let f = bob.fidelity(&target)?;
    Ok((bob, f, cond.probability))
}

/// Quadrature points on the Bloch sphere with weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochGrid {
    pub points: Vec<(f64, f64, f64)>,
}

impl BlochGrid {
    /// Fibonacci sphere: near-uniform points, equal weights.
    pub fn fibonacci(n: usize) -> Self {
        let golden = PI * (3.0 - 5f64.sqrt());
        let points = (0..n)
            .map(|k| {
                let z = 1.0 - (2 * k + 1) as f64 / n as f64;
                let phi = (k as f64 * golden).rem_euclid(2.0 * PI);
                (z.clamp(-1.0, 1.0).acos(), phi, 1.0 / n as f64)
            })
            .collect();
        Self { points }
    }

    /// Midpoint rule in θ with `sin θ` weights, uniform in φ.
    pub fn theta_phi(n_theta: usize, n_phi: usize) -> Self {
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut total = 0.0;
        for i in 0..n_theta {
            let theta = (i as f64 + 0.5) * PI / n_theta as f64;
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                points.push((theta, phi, theta.sin()));
                total += theta.sin();
            }
        }
        points.iter_mut().for_each(|p| p.2 /= total);
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-point fidelities and their weighted average.
#[derive(Clone, Debug)]
pub struct FidelityMap {
    /// `(θ, φ, weight, fidelity, probability)`.
    pub points: Vec<(f64, f64, f64, f64, f64)>,
    pub average: f64,
}

pub fn fidelity_map_with(channel: &QubitChannel, grid: &BlochGrid) -> Result<FidelityMap> {
    let mut points = Vec::with_capacity(grid.len());
    let mut average = 0.0;
    for &(theta, phi, w) in &grid.points {
        let (f, p) = channel.evaluate(theta, phi)?;
        average += w * f;
        points.push((theta, phi, w, f, p));
    }
    Ok(FidelityMap { points, average })
}

pub fn fidelity_map(setup: &QubitSetup, grid: &BlochGrid) -> Result<FidelityMap> {
    fidelity_map_with(&QubitChannel::new(setup)?, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_are_normalised_in_coherent_basis() {
        for (theta, phi) in [(0.0, 0.0), (1.0, 0.3), (PI, 2.0), (2.2, 5.0)] {
            let q = CatQubit::new(0.4, theta, phi).unwrap();
            let (cp, cm) = q.coefficients();
            let overlap = (-2.0 * 0.4f64 * 0.4).exp();
            let n = cp.norm_sqr() + cm.norm_sqr() + 2.0 * (cp * cm.conj()).re * overlap;
            assert!((n - 1.0).abs() < 1e-12);
            assert!((q.to_branch_state().norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_latitude_gives_coherent_state() {
        let theta = CatQubit::coherent_theta(0.5);
        let (_, cm) = CatQubit::new(0.5, theta, 0.0).unwrap().coefficients();
        assert!(cm.norm() < 1e-12);
    }

    #[test]
    fn grids_have_unit_weight() {
        for g in [BlochGrid::fibonacci(168), BlochGrid::theta_phi(12, 24)] {
            let s: f64 = g.points.iter().map(|p| p.2).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // ⟨cos²θ⟩ over the sphere is 1/3
        let g = BlochGrid::fibonacci(168);
        let m: f64 = g.points.iter().map(|p| p.2 * p.0.cos().powi(2)).sum();
        assert!((m - 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn ideal_resource_limit_is_odd_cat() {
        let model = ImperfectionModel {
            sv_transmission: 1.0,
            opo_escape: 1.0,
            tap_ratio: 1e-4,
            propagation: 1.0,
            apd_efficiency: 1.0,
            ..ImperfectionModel::default()
        };
        let (ens, _) = build_pssv_resource(0.3, &model, 30).unwrap();
        let (_, f) = best_fit_cat(&ens).unwrap();
        assert!(f > 0.995, "{f}");
    }

    #[test]
    fn kappa_reproduces_anchors() {
        let m = ImperfectionModel::default();
        assert!((calibrate_kappa(&m).unwrap() - DEFAULT_KAPPA).abs() < 1e-3);
        for (eps, beta) in EPSILON_ANCHORS {
            let (b, _) = beta_from_epsilon(eps, DEFAULT_KAPPA, &m).unwrap();
            assert!((b - beta).abs() < 0.1, "{eps}: {b}");
        }
    }

    #[test]
    fn ideal_chain_is_perfect_at_unit_gain() {
        let setup = QubitSetup::new(0.5, 0.5, ImperfectionModel::ideal());
        let map = fidelity_map(&setup, &BlochGrid::fibonacci(12)).unwrap();
        assert!(map.points.iter().all(|p| (p.3 - 1.0).abs() < 1e-6));
    }

    #[test]
    fn even_pole_beats_odd_pole() {
        let ch = QubitChannel::new(&QubitSetup::new(0.4, 0.6, ImperfectionModel::default())).unwrap();
        let (north, _) = ch.evaluate(0.0, 0.0).unwrap();
        let (south, _) = ch.evaluate(PI, 0.0).unwrap();
        assert!(north > south);
    }

    #[test]
    fn weaker_detectors_do_not_help() {
        let grid = BlochGrid::fibonacci(48);
        let mut last = f64::INFINITY;
        for eta in [0.1, 0.05, 0.02] {
            let model = ImperfectionModel {
                apd_efficiency: eta,
                ..ImperfectionModel::default()
            };
            let avg = fidelity_map(&QubitSetup::new(0.4, 0.6, model), &grid).unwrap().average;
            assert!(avg <= last + 1e-9);
            last = avg;
        }
    }

    #[test]
    fn quadratures_agree() {
        let ch = QubitChannel::new(&QubitSetup::new(0.4, 0.6, ImperfectionModel::default())).unwrap();
        let a = fidelity_map_with(&ch, &BlochGrid::fibonacci(168)).unwrap().average;
        let b = fidelity_map_with(&ch, &BlochGrid::theta_phi(40, 40)).unwrap().average;
        assert!((a - b).abs() < 1e-3);
    }

    #[test]
    fn channel_matches_direct_run() {
        let setup = QubitSetup::new(0.4, 0.6, ImperfectionModel::default());
        let ch = QubitChannel::new(&setup).unwrap();
        let q = CatQubit::new(0.4, 1.1, 2.0).unwrap();
        let (f1, _) = ch.evaluate(q.theta, q.phi).unwrap();
        let (_, f2, _) = teleport_qubit(&q, &setup).unwrap();
        assert!((f1 - f2).abs() < 1e-9, "{f1} vs {f2}");
    }
}

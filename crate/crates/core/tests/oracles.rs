//! Closed forms checked against brute-force Fock-space evaluation.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use teleamp_core::detection::{pattern_probability_fock, DetectorModel, Outcome, PortMeasurement};
use teleamp_core::fock::{
    cat_state, coherent, mpsk_resource_state, squeezed_vacuum, wigner, FockState, Parity, PhaseSpacePoint,
};
use teleamp_core::optics::{BeamSplitter, LinearOptics};
use teleamp_core::qkd::bb84_probabilities;
use teleamp_core::usd::{usd_success, PskEnsemble};

const D: usize = 24;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Bob's receiver on `|α⟩_R |s⟩_A`: optional `e^{−iπn̂/2}` on A, then the
/// balanced splitter, then on/off at both ports. Returns (P₀, P₁, P₂).
fn receiver(alpha: C64, signal: C64, y_basis: bool, nu: f64, eta: f64) -> (f64, f64, f64) {
    let det = DetectorModel::new(nu, eta).unwrap();
    let mut s = coherent(alpha, D).unwrap().tensor(&coherent(signal, D).unwrap());
    if y_basis {
        s = s.apply_phase(1, -FRAC_PI_2).unwrap();
    }
    // equal inputs leave A dark and collect everything in R
    let s = s.apply_beamsplitter(&BeamSplitter::new(0.5, 1, 0).unwrap()).unwrap();
    let p = |r: Outcome, a: Outcome| {
        pattern_probability_fock(&s, &[PortMeasurement::new(0, r, det), PortMeasurement::new(1, a, det)]).unwrap()
    };
    let both = p(Outcome::On, Outcome::On);
    (
        p(Outcome::On, Outcome::Off) + 0.5 * both,
        p(Outcome::Off, Outcome::On) + 0.5 * both,
        p(Outcome::Off, Outcome::Off),
    )
}

#[test]
fn bb84_closed_forms_match_fock_povm() {
    for (a2, nu, eta) in [(0.1, 1e-6, 0.2), (0.4, 0.01, 0.6), (1.0, 0.0, 1.0)] {
        let a = c(f64::sqrt(a2));
        let p = bb84_probabilities(a2, nu, eta);
        for (y, s0) in [(false, a), (true, a * C64::i())] {
            let (p00, p01, p02) = receiver(a, s0, y, nu, eta);
            let (p10, p11, p12) = receiver(a, -s0, y, nu, eta);
            for (got, want) in [(p00, p.correct), (p11, p.correct), (p01, p.error), (p10, p.error), (p02, p.inconclusive), (p12, p.inconclusive)] {
                assert!((got - want).abs() < 1e-10, "basis y={y}: {got} vs {want}");
            }
        }
    }
}

/// `ρ` spanned by `|u^m γ⟩` rebuilt from the ω-basis.
#[test]
fn omega_basis_resolves_the_alphabet() {
    for arity in 2..=4 {
        for beta in [0.4, 1.0, 1.5] {
            let lam = PskEnsemble::new(arity, c(beta)).unwrap().eigenvalues();
            let mut lhs = DMatrix::<C64>::zeros(D, D);
            let mut rhs = DMatrix::<C64>::zeros(D, D);
            for (k, &lam_k) in lam.iter().enumerate() {
                let w = mpsk_resource_state(beta, arity, k, D).unwrap();
                let v = nalgebra::DVector::from_column_slice(w.amplitudes());
                lhs += &v * v.adjoint() * c(lam_k);
                let u = C64::from_polar(1.0, 2.0 * PI * k as f64 / arity as f64);
                let g = coherent(u * beta, D).unwrap();
                let gv = nalgebra::DVector::from_column_slice(g.amplitudes());
                rhs += &gv * gv.adjoint();
            }
            assert!((lhs - rhs).iter().all(|z| z.norm() < 1e-8), "M={arity} β={beta}");
        }
    }
}

/// The USD POVM assembled in Fock space from reciprocal states.
#[test]
fn usd_success_matches_fock_povm() {
    for (arity, g) in [(2, 0.7), (3, 0.9), (4, 1.2)] {
        let ens = PskEnsemble::new(arity, c(g)).unwrap();
        let lam = ens.eigenvalues();
        let p = usd_success(&ens);
        let big: f64 = lam.iter().map(|l| 1.0 / l).sum();
        let omegas: Vec<FockState> = (0..arity).map(|k| mpsk_resource_state(g, arity, k, D).unwrap()).collect();
        let u = |e: usize| C64::from_polar(1.0, 2.0 * PI * e as f64 / arity as f64);
        for m in 0..arity {
            // |γ_m^⊥⟩ = Λ^{−1/2} Σ_k u^{mk} λ_k^{−1/2} |ω_k⟩
            let mut perp = vec![c(0.0); D];
            for (k, w) in omegas.iter().enumerate() {
                let f = u(m * k) / (lam[k] * big).sqrt();
                for (slot, a) in perp.iter_mut().zip(w.amplitudes()) {
                    *slot += f * a;
                }
            }
            for mp in 0..arity {
                let state = coherent(u(mp) * g, D).unwrap();
                let ov: C64 = perp.iter().zip(state.amplitudes()).map(|(a, b)| a.conj() * b).sum();
                let val = big / arity as f64 * p * ov.norm_sqr();
                let want = if m == mp { p } else { 0.0 };
                assert!((val - want).abs() < 1e-10, "M={arity} m={m} m'={mp}: {val}");
            }
        }
    }
}

#[test]
fn wigner_functions_integrate_to_one() {
    let n = 121;
    let h = 12.0 / (n - 1) as f64;
    let grid: Vec<PhaseSpacePoint> = (0..n)
        .flat_map(|i| (0..n).map(move |j| PhaseSpacePoint::new(-6.0 + i as f64 * h, -6.0 + j as f64 * h)))
        .collect();
    let states = [
        coherent(C64::new(1.0, 0.8), 30).unwrap(),
        cat_state(c(1.5), Parity::Odd, 30).unwrap(),
        cat_state(C64::new(0.0, 1.2), Parity::Even, 30).unwrap(),
        squeezed_vacuum(-0.5, 40).unwrap(),
        mpsk_resource_state(1.5, 4, 3, 30).unwrap(),
    ];
    for s in &states {
        let total: f64 = wigner(s, &grid).unwrap().iter().sum::<f64>() * h * h;
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}

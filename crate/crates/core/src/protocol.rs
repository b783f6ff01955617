//! Binary and 4-PSK tele-amplification: parameter relations, exact
//! conditional outputs, click-pattern dispatch and success probabilities.
//!
//! Binary mode layout is `[A, B, C, E]`: Alice's input port, Bob's output,
//! the channel mode that reaches Alice, and the loss environment. The 4-PSK
//! state uses `[B, A, A′, C, C′, E]`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;

use crate::detection::{condition_branch, condition_fock, DetectorModel, Outcome, PortMeasurement};
use crate::error::{Error, Result};
use crate::fock::{cat_state, coherent_cutoff, FockEnsemble, Parity};
use crate::optics::{
    loss_channel, partial_trace, BeamSplitter, Branch, BranchDensity, CoherentBranchState, LinearOptics,
    DEFAULT_KRAUS_THRESHOLD,
};
use crate::usd::psk_eigenvalues;

pub const MODE_A: usize = 0;
pub const MODE_B: usize = 1;
pub const MODE_C: usize = 2;
pub const MODE_E: usize = 3;

/// Alphabet size of the input ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arity {
    Binary,
    Quad,
}

impl Arity {
    pub fn size(&self) -> usize {
        match self {
            Arity::Binary => 2,
            Arity::Quad => 4,
        }
    }
}

/// Input amplitude and the three reflectivities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub alpha: C64,
    pub r_a: f64,
    pub r_b: f64,
    pub r_e: f64,
    /// Resource amplitude actually prepared. `None` means the value that
    /// satisfies the nulling condition for this `(α, R_A, R_B, R_E)`.
    pub resource_beta: Option<f64>,
}

impl ProtocolConfig {
    pub fn new(alpha: C64, r_a: f64, r_b: f64, r_e: f64) -> Result<Self> {
        for (name, r) in [("R_A", r_a), ("R_B", r_b)] {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::DegenerateSplit(format!("{name} = {r} must lie in (0, 1)")));
            }
        }
        if !(0.0..1.0).contains(&r_e) {
            return Err(Error::DegenerateSplit(format!("R_E = {r_e} must lie in [0, 1)")));
        }
        Ok(Self {
            alpha,
            r_a,
            r_b,
            r_e,
            resource_beta: None,
        })
    }

    /// Configuration reaching gain `g` with `R_A` solved from the gain relation.
    pub fn for_gain(alpha: C64, gain: f64, r_b: f64, r_e: f64) -> Result<Self> {
        Self::new(alpha, solve_r_a_for_gain(gain, r_b, r_e)?, r_b, r_e)
    }

    pub fn with_resource_beta(mut self, beta: f64) -> Self {
        self.resource_beta = Some(beta);
        self
    }

    /// Nulling-condition resource amplitude `β = |α| √((1−R_A)/(R_A R_B (1−R_E)))`.
    pub fn matched_beta(&self) -> f64 {
        self.alpha.norm() * ((1.0 - self.r_a) / (self.r_a * self.r_b * (1.0 - self.r_e))).sqrt()
    }

    pub fn beta(&self) -> f64 {
        self.resource_beta.unwrap_or_else(|| self.matched_beta())
    }

    /// `g = √((1−R_A)(1−R_B)/(R_A R_B (1−R_E)))`.
    pub fn gain(&self) -> f64 {
        ((1.0 - self.r_a) * (1.0 - self.r_b) / (self.r_a * self.r_b * (1.0 - self.r_e))).sqrt()
    }

    /// Amplitude ratio actually delivered to Bob, `√(1−R_B) β/|α|`; equals
    /// [`Self::gain`] unless the resource is mismatched.
    pub fn output_gain(&self) -> f64 {
        (1.0 - self.r_b).sqrt() * self.beta() / self.alpha.norm()
    }

    /// Environment amplitude `ε = √((1−R_A) R_E/(R_A (1−R_E))) |α|`.
    pub fn epsilon(&self) -> f64 {
        ((1.0 - self.r_a) * self.r_e / (self.r_a * (1.0 - self.r_e))).sqrt() * self.alpha.norm()
    }
}

pub fn resource_amplitude(cfg: &ProtocolConfig) -> f64 {
    cfg.matched_beta()
}

pub fn gain(cfg: &ProtocolConfig) -> f64 {
    cfg.gain()
}

/// `R_A = K/(K + g²)` with `K = (1−R_B)/(R_B (1−R_E))`.
pub fn solve_r_a_for_gain(gain: f64, r_b: f64, r_e: f64) -> Result<f64> {
    let infeasible = Error::NoFeasibleRA { gain, r_b, r_e };
    if !(gain > 0.0 && gain.is_finite()) || !(r_b > 0.0 && r_b < 1.0) || !(0.0..1.0).contains(&r_e) {
        return Err(infeasible);
    }
    let k = (1.0 - r_b) / (r_b * (1.0 - r_e));
    let r_a = k / (k + gain * gain);
    if r_a > 0.0 && r_a < 1.0 {
        Ok(r_a)
    } else {
        Err(infeasible)
    }
}

/// How Alice conditions in the binary protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BinaryHerald {
    /// `|1⟩⟨1|` at A and `|0⟩⟨0|` at C.
    Ideal,
    /// `Π_on` at A and, if `detect_c`, `Π_off` at C (otherwise C is traced).
    OnOff { detector: DetectorModel, detect_c: bool },
}

impl BinaryHerald {
    pub fn on_off_ideal(detect_c: bool) -> Self {
        BinaryHerald::OnOff {
            detector: DetectorModel::ideal(),
            detect_c,
        }
    }

    pub fn measurements(&self, mode_a: usize, mode_c: usize) -> Vec<PortMeasurement> {
        match *self {
            BinaryHerald::Ideal => vec![
                PortMeasurement::ideal(mode_a, Outcome::Photons(1)),
                PortMeasurement::ideal(mode_c, Outcome::Photons(0)),
            ],
            BinaryHerald::OnOff { detector, detect_c } => {
                let mut m = vec![PortMeasurement::new(mode_a, Outcome::On, detector)];
                if detect_c {
                    m.push(PortMeasurement::new(mode_c, Outcome::Off, detector));
                }
                m
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            BinaryHerald::Ideal => "A=1,C=0".into(),
            BinaryHerald::OnOff { detect_c: true, .. } => "A=on,C=off".into(),
            BinaryHerald::OnOff { detect_c: false, .. } => "A=on".into(),
        }
    }
}

/// Conditional output of one protocol run.
#[derive(Clone, Debug)]
pub struct TeleampResult {
    /// Bob's mode alone.
    pub output: BranchDensity,
    /// Bob's mode followed by the environment mode.
    pub joint: BranchDensity,
    pub probability: f64,
    pub gain: f64,
    pub target: CoherentBranchState,
    pub fidelity: f64,
    pub pattern: String,
}

/// `c₊|α⟩ + c₋|−α⟩`, normalised.
pub fn binary_input(alpha: C64, c_plus: C64, c_minus: C64) -> Result<CoherentBranchState> {
    CoherentBranchState::binary(alpha, c_plus, c_minus)
}

/// Four-mode state `[A, B, C, E]` just before Alice's detection.
pub fn binary_state(cfg: &ProtocolConfig, c_plus: C64, c_minus: C64) -> Result<CoherentBranchState> {
    let input = binary_input(cfg.alpha, c_plus, c_minus)?;
    let resource = CoherentBranchState::cat(C64::new(cfg.beta(), 0.0), Parity::Odd)?;
    input
        .tensor(&resource)?
        .with_vacuum(2)
        .apply_beamsplitter(&BeamSplitter::new(cfg.r_b, MODE_B, MODE_C)?)?
        .apply_beamsplitter(&BeamSplitter::new(cfg.r_e, MODE_C, MODE_E)?)?
        .apply_beamsplitter(&BeamSplitter::new(cfg.r_a, MODE_A, MODE_C)?)
}

/// Runs the binary protocol in the exact engine. The π phase on B is
/// applied, so a faithful run yields `c₊|gα⟩ + c₋|−gα⟩`.
pub fn run_binary(cfg: &ProtocolConfig, c_plus: C64, c_minus: C64, herald: BinaryHerald) -> Result<TeleampResult> {
    let state = binary_state(cfg, c_plus, c_minus)?;
    let cond = condition_branch(&state.to_density(), &herald.measurements(MODE_A, MODE_C))?;
    // remaining modes are B, (C,) E in order
    let rest = cond.state.mode_count();
    let joint = cond
        .state
        .partial_trace(&[0, rest - 1])?
        .apply_phase(0, PI)?;
    let output = joint.partial_trace(&[0])?;
    let g = cfg.output_gain();
    let target = binary_input(cfg.alpha * g, c_plus, c_minus)?;
    let fidelity = output.fidelity(&target)?.clamp(0.0, 1.0);
    Ok(TeleampResult {
        output,
        joint,
        probability: cond.probability,
        gain: g,
        target,
        fidelity,
        pattern: herald.describe(),
    })
}

/// Probability of Alice's heralding event (zero for unreachable events).
pub fn pattern_probability_binary(cfg: &ProtocolConfig, c_plus: C64, c_minus: C64, herald: BinaryHerald) -> Result<f64> {
    let state = binary_state(cfg, c_plus, c_minus)?;
    let rho = state.to_density();
    Ok(rho.reduce(&herald.measurements(MODE_A, MODE_C))?.trace() / rho.trace())
}

/// Closed-form `P⁽²⁾` for inputs `|±α⟩` with ideal `Π_on^A ⊗ Π_off^C`:
/// `[e^{−(1−2R_A)²α²/R_A} − e^{−α²/R_A}] / (2(1 − e^{−2β²}))`.
pub fn success_prob_binary_closed(cfg: &ProtocolConfig) -> Result<f64> {
    let a2 = cfg.alpha.norm_sqr();
    if a2 == 0.0 {
        return Ok(cfg.r_a * cfg.r_b * (1.0 - cfg.r_e));
    }
    let first = -(1.0 - 2.0 * cfg.r_a).powi(2) * a2 / cfg.r_a;
    // e^{first} − e^{−α²/R_A} = −e^{first} expm1(−4(1−R_A)α²)
    let num = -first.exp() * (-4.0 * (1.0 - cfg.r_a) * a2).exp_m1();
    let b2 = cfg.beta().powi(2);
    let den = -2.0 * (-2.0 * b2).exp_m1();
    Ok(num / den)
}

/// `P⁽²⁾` by brute-force POVM evaluation on the branch state, averaged over `|±α⟩`.
pub fn success_prob_binary_brute(cfg: &ProtocolConfig) -> Result<f64> {
    let herald = BinaryHerald::on_off_ideal(true);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    Ok(0.5 * pattern_probability_binary(cfg, one, zero, herald)?
        + 0.5 * pattern_probability_binary(cfg, zero, one, herald)?)
}

/// On/off outcome at the 4-PSK ports `(A, A′, C, C′)`; `true` is a click.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Psk4Pattern(pub [bool; 4]);

pub const PSK4_PORTS: [&str; 4] = ["A", "A'", "C", "C'"];

impl Psk4Pattern {
    /// From a 0/1 tuple, e.g. `[0, 1, 1, 1]`.
    pub fn from_bits(bits: [u8; 4]) -> Self {
        Self(bits.map(|b| b != 0))
    }

    pub fn all() -> Vec<Self> {
        (0..16u8)
            .map(|k| Self([k & 8 != 0, k & 4 != 0, k & 2 != 0, k & 1 != 0]))
            .collect()
    }

    /// Port index left dark in a successful pattern: the output is
    /// `|u^j gα_m⟩` for the single dark port `j`.
    pub fn rotation(&self) -> Option<usize> {
        let dark: Vec<usize> = (0..4).filter(|&p| !self.0[p]).collect();
        match dark.as_slice() {
            [j] => Some(*j),
            _ => None,
        }
    }

    pub fn bits(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    fn measurements(&self, detector: DetectorModel) -> Vec<PortMeasurement> {
        // ports sit at modes 1..=4 of the 4-PSK layout
        (0..4)
            .map(|p| PortMeasurement::new(p + 1, if self.0[p] { Outcome::On } else { Outcome::Off }, detector))
            .collect()
    }
}

fn u_pow(k: i64) -> C64 {
    C64::from_polar(1.0, FRAC_PI_2 * k.rem_euclid(4) as f64)
}

/// Six-mode 4-PSK state `[B, A, A′, C, C′, E]` for input `α u^m`, `R_A = 1/2`.
///
/// Branch `k` has coefficient `u^k/√(4λ₃(β²))` and amplitudes
/// `B = gαu^k`, `A = α(u^m−u^k)/2`, `A′ = α(u^m−u^{m+1}+u^k+u^{k+1})/(2√2)`,
/// `C = −α(u^m+u^k)/2`, `C′ = α(u^m+u^{m+1}+u^k−u^{k+1})/(2√2)`,
/// `E = √(R_E/(1−R_E)) α u^k`.
pub fn mpsk4_state(cfg: &ProtocolConfig, m: usize) -> Result<CoherentBranchState> {
    if (cfg.r_a - 0.5).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("4-PSK relay needs R_A = 0.5, got {}", cfg.r_a)));
    }
    let a = cfg.alpha;
    if a.norm_sqr() == 0.0 {
        return Err(Error::DegenerateCat);
    }
    let beta = cfg.beta();
    let lambda3 = psk_eigenvalues(4, C64::new(beta, 0.0))[3];
    let norm = 1.0 / (4.0 * lambda3).sqrt();
    let g = cfg.output_gain();
    let eps = (cfg.r_e / (1.0 - cfg.r_e)).sqrt();
    let s2 = 2.0 * 2f64.sqrt();
    let m = m as i64;
    let um = u_pow(m);
    let um1 = u_pow(m + 1);
    let branches = (0..4i64)
        .map(|k| {
            let uk = u_pow(k);
            let uk1 = u_pow(k + 1);
            Branch::new(
                uk * norm,
                vec![
                    a * g * uk,
                    a * (um - uk) / 2.0,
                    a * (um - um1 + uk + uk1) / s2,
                    -a * (um + uk) / 2.0,
                    a * (um + um1 + uk - uk1) / s2,
                    a * eps * uk,
                ],
            )
        })
        .collect();
    CoherentBranchState::new(6, branches)
}

pub fn pattern_probability_mpsk4(
    cfg: &ProtocolConfig,
    m: usize,
    pattern: Psk4Pattern,
    detector: DetectorModel,
) -> Result<f64> {
    let rho = mpsk4_state(cfg, m)?.to_density();
    Ok(rho.reduce(&pattern.measurements(detector))?.trace() / rho.trace())
}

/// Runs the 4-PSK relay for input `m` and a dispatch pattern. The output is
/// rotated back by `u^{−j}` so a faithful run yields `|gα u^m⟩`.
pub fn run_mpsk4(cfg: &ProtocolConfig, m: usize, pattern: Psk4Pattern) -> Result<TeleampResult> {
    let Some(j) = pattern.rotation() else {
        return Err(Error::UnsupportedPattern(pattern.bits()));
    };
    let state = mpsk4_state(cfg, m)?;
    let cond = condition_branch(&state.to_density(), &pattern.measurements(DetectorModel::ideal()))?;
    let joint = cond.state.apply_phase(0, -FRAC_PI_2 * j as f64)?;
    let output = joint.partial_trace(&[0])?;
    let g = cfg.output_gain();
    let target = CoherentBranchState::product(vec![cfg.alpha * g * u_pow(m as i64)]);
    let fidelity = output.fidelity(&target)?.clamp(0.0, 1.0);
    Ok(TeleampResult {
        output,
        joint,
        probability: cond.probability,
        gain: g,
        target,
        fidelity,
        pattern: pattern.bits(),
    })
}

/// Closed-form `P⁽⁴⁾ = (1−e^{−α²/2})²(1−e^{−α²}) / (4λ₃(β²))`, `β² = α²/(R_B(1−R_E))`.
pub fn success_prob_4psk_closed(cfg: &ProtocolConfig) -> Result<f64> {
    let a2 = cfg.alpha.norm_sqr();
    if a2 == 0.0 {
        return Ok(0.0);
    }
    let beta2 = a2 / (cfg.r_b * (1.0 - cfg.r_e));
    let lambda3 = psk_eigenvalues(4, C64::new(beta2.sqrt(), 0.0))[3];
    let num = (-a2 / 2.0).exp_m1().powi(2) * -(-a2).exp_m1();
    Ok(num / (4.0 * lambda3))
}

/// `P⁽⁴⁾` as `⟨Ψ₀|Π₀₁₁₁|Ψ₀⟩` on the branch state.
pub fn success_prob_4psk_brute(cfg: &ProtocolConfig) -> Result<f64> {
    pattern_probability_mpsk4(cfg, 0, Psk4Pattern::from_bits([0, 1, 1, 1]), DetectorModel::ideal())
}

/// Dispatch success probability by alphabet size.
pub fn success_prob_closed(cfg: &ProtocolConfig, arity: Arity) -> Result<f64> {
    match arity {
        Arity::Binary => success_prob_binary_closed(cfg),
        Arity::Quad => success_prob_4psk_closed(cfg),
    }
}

/// Binary protocol in the Fock engine (`[A, B, C]`, loss by Kraus operators
/// on C). Returns Bob's normalised state, the herald probability and the
/// fidelity with `c₊|g′α⟩ + c₋|−g′α⟩`.
#[derive(Clone, Debug)]
pub struct FockTeleampResult {
    pub output: FockEnsemble,
    pub probability: f64,
    pub fidelity: f64,
    pub cutoffs: [usize; 3],
}

/// Cutoffs large enough for every intermediate amplitude of the binary pipeline.
pub fn binary_fock_cutoffs(cfg: &ProtocolConfig, tail: f64) -> Result<[usize; 3]> {
    let s = binary_input(cfg.alpha, C64::new(1.0, 0.0), C64::new(0.0, 0.0))?
        .tensor(&CoherentBranchState::cat(C64::new(cfg.beta(), 0.0), Parity::Odd)?)?
        .with_vacuum(2);
    let s1 = s.apply_beamsplitter(&BeamSplitter::new(cfg.r_b, MODE_B, MODE_C)?)?;
    let s2 = s1.apply_beamsplitter(&BeamSplitter::new(cfg.r_e, MODE_C, MODE_E)?)?;
    let s3 = s2.apply_beamsplitter(&BeamSplitter::new(cfg.r_a, MODE_A, MODE_C)?)?;
    let mut amax = [0.0f64; 3];
    for st in [&s, &s1, &s2, &s3] {
        for b in st.branches() {
            for (m, slot) in amax.iter_mut().enumerate() {
                *slot = slot.max(b.amplitudes[m].norm());
            }
        }
    }
    Ok(amax.map(|a| coherent_cutoff(a, tail) + 2))
}

pub fn run_binary_fock(
    cfg: &ProtocolConfig,
    c_plus: C64,
    c_minus: C64,
    herald: BinaryHerald,
) -> Result<FockTeleampResult> {
    let cutoffs = binary_fock_cutoffs(cfg, 1e-13)?;
    let input = binary_input(cfg.alpha, c_plus, c_minus)?.to_fock(&[cutoffs[0]])?;
    let resource = cat_state(C64::new(cfg.beta(), 0.0), Parity::Odd, cutoffs[1])?;
    let state = input
        .tensor(&resource)
        .tensor(&crate::fock::FockState::vacuum(&[cutoffs[2]]))
        .apply_beamsplitter(&BeamSplitter::new(cfg.r_b, MODE_B, MODE_C)?)?;
    let ens = loss_channel(&FockEnsemble::pure(state), MODE_C, cfg.r_e, DEFAULT_KRAUS_THRESHOLD)?
        .apply_beamsplitter(&BeamSplitter::new(cfg.r_a, MODE_A, MODE_C)?)?;
    let cond = condition_fock(&ens, &herald.measurements(MODE_A, MODE_C))?;
    let rest = cond.state.mode_count();
    let kept = if rest == 1 { cond.state } else { partial_trace(&cond.state, &[0])? };
    let output = kept.apply_phase(0, PI)?;
    let target = binary_input(cfg.alpha * cfg.output_gain(), c_plus, c_minus)?.to_fock(&[cutoffs[1]])?;
    let fidelity = output.fidelity(&target)?;
    Ok(FockTeleampResult {
        output,
        probability: cond.probability,
        fidelity,
        cutoffs,
    })
}

/// One setting of the experiment's parameter table, as printed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableIRow {
    pub index: usize,
    pub alpha: f64,
    pub gain: f64,
    pub beta: f64,
    pub r_a: f64,
    pub r_e: f64,
    pub fidelity: f64,
}

/// Bob's tap reflectivity used for every table row.
pub const TABLE_R_B: f64 = 0.1;

const fn row(index: usize, alpha: f64, gain: f64, beta: f64, r_a: f64, r_e: f64, fidelity: f64) -> TableIRow {
    TableIRow {
        index,
        alpha,
        gain,
        beta,
        r_a,
        r_e,
        fidelity,
    }
}

pub const TABLE_I: [TableIRow; 12] = [
    row(1, 0.35, 3.0, 1.11, 0.50, 0.0, 0.901),
    row(2, 0.35, 2.2, 0.81, 0.65, 0.0, 0.945),
    row(3, 0.50, 2.2, 1.16, 0.65, 0.0, 0.936),
    row(4, 0.50, 1.5, 0.79, 0.80, 0.0, 0.921),
    row(5, 0.71, 1.5, 1.12, 0.80, 0.0, 0.885),
    row(6, 0.71, 1.0, 0.75, 0.90, 0.0, 0.950),
    row(7, 1.00, 1.0, 1.05, 0.90, 0.0, 0.926),
    row(8, 1.00, 0.76, 0.80, 0.94, 0.0, 0.940),
    row(9, 1.41, 0.76, 1.13, 0.94, 0.0, 0.889),
    row(10, 1.41, 0.50, 0.74, 0.97, 0.0, 0.935),
    row(11, 0.35, 3.0, 1.11, 0.50, 0.8, 0.839),
    row(12, 0.35, 3.0, 1.11, 0.83, 0.8, 0.872),
];

impl TableIRow {
    /// `R_A` re-solved from the target gain (the printed value is rounded).
    pub fn config(&self) -> Result<ProtocolConfig> {
        ProtocolConfig::for_gain(C64::new(self.alpha, 0.0), self.gain, TABLE_R_B, self.r_e)
    }

    /// The printed `R_A` with the resource sized for a lossless channel,
    /// then the printed channel loss applied. For row 11 this is the
    /// un-reoptimised setting; for lossless rows it only differs from
    /// [`Self::config`] by the rounding of `R_A`.
    pub fn as_operated(&self) -> Result<ProtocolConfig> {
        let lossless = ProtocolConfig::new(C64::new(self.alpha, 0.0), self.r_a, TABLE_R_B, 0.0)?;
        Ok(ProtocolConfig::new(C64::new(self.alpha, 0.0), self.r_a, TABLE_R_B, self.r_e)?
            .with_resource_beta(lossless.matched_beta()))
    }
}

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{check_loss, BeamSplitter, LinearOptics};
use crate::detection::{DetectorModel, Outcome, PortMeasurement};
use crate::error::{Error, Result};
use crate::fock::{strides, FockEnsemble, FockState};
use crate::math::ln_factorials;

/// Kraus unravelling stops once this much of a branch's weight is missing.
pub const DEFAULT_KRAUS_THRESHOLD: f64 = 1e-8;

/// Sub-branches lighter than this fraction of the input are discarded.
const PRUNE: f64 = 1e-16;

/// Blocks keyed by (R bits, photon number).
type BlockCache = HashMap<(u64, usize), Rc<DMatrix<f64>>>;

thread_local! {
    static BLOCKS: RefCell<BlockCache> = RefCell::new(HashMap::new());
}

/// Beam-splitter unitary restricted to total photon number `n`, in the
/// basis `|p, n−p⟩`, `p = 0..=n` photons in the first mode.
fn block(reflectivity: f64, n: usize) -> Rc<DMatrix<f64>> {
    let key = (reflectivity.to_bits(), n);
    if let Some(b) = BLOCKS.with(|c| c.borrow().get(&key).cloned()) {
        return b;
    }
    let theta = reflectivity.sqrt().asin();
    let mut g = DMatrix::<f64>::zeros(n + 1, n + 1);
    for p in 0..=n {
        let q = n - p;
        if p > 0 {
            g[(p - 1, p)] = ((p * (q + 1)) as f64).sqrt();
        }
        if q > 0 {
            g[(p + 1, p)] = -(((p + 1) * q) as f64).sqrt();
        }
    }
    let u = Rc::new((g * theta).exp());
    BLOCKS.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() > 4096 {
            c.clear();
        }
        c.insert(key, u.clone());
    });
    u
}

fn digit(idx: usize, stride: usize, dim: usize) -> usize {
    (idx / stride) % dim
}

fn beamsplit_state(state: &FockState, bs: &BeamSplitter) -> Result<FockState> {
    bs.check(state.mode_count())?;
    let (i, j) = bs.modes();
    let dims = state.dims().to_vec();
    let st = strides(&dims);
    let (di, dj) = (dims[i], dims[j]);
    let amps = state.amplitudes();
    let mut nmax = 0;
    for (idx, a) in amps.iter().enumerate() {
        if a.norm_sqr() > 0.0 {
            nmax = nmax.max(digit(idx, st[i], di) + digit(idx, st[j], dj));
        }
    }
    let blocks: Vec<_> = (0..=nmax).map(|n| block(bs.reflectivity(), n)).collect();
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    for (idx, a) in amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let ni = digit(idx, st[i], di);
        let nj = digit(idx, st[j], dj);
        let n = ni + nj;
        let base = idx - ni * st[i] - nj * st[j];
        let u = &blocks[n];
        let lo = n.saturating_sub(dj - 1);
        let hi = n.min(di - 1);
        for p in lo..=hi {
            let c = u[(p, ni)];
            if c != 0.0 {
                out[base + p * st[i] + (n - p) * st[j]] += a * c;
            }
        }
    }
    FockState::from_amplitudes(dims, out)
}

fn phase_state(state: &FockState, mode: usize, phase: f64) -> Result<FockState> {
    state.check_mode(mode)?;
    let dims = state.dims().to_vec();
    let st = strides(&dims);
    let factors: Vec<C64> = (0..dims[mode]).map(|n| C64::from_polar(1.0, phase * n as f64)).collect();
    let out = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(idx, a)| a * factors[digit(idx, st[mode], dims[mode])])
        .collect();
    FockState::from_amplitudes(dims, out)
}

impl LinearOptics for FockState {
    fn apply_beamsplitter(&self, bs: &BeamSplitter) -> Result<Self> {
        beamsplit_state(self, bs)
    }

    fn apply_phase(&self, mode: usize, phase: f64) -> Result<Self> {
        phase_state(self, mode, phase)
    }
}

impl LinearOptics for FockEnsemble {
    fn apply_beamsplitter(&self, bs: &BeamSplitter) -> Result<Self> {
        self.map_states(|s| beamsplit_state(s, bs))
    }

    fn apply_phase(&self, mode: usize, phase: f64) -> Result<Self> {
        self.map_states(|s| phase_state(s, mode, phase))
    }
}

/// Loss `R` on one mode of a pure state, as Kraus branches
/// `K_k|n⟩ = √C(n,k) (1−R)^{(n−k)/2} R^{k/2} |n−k⟩`.
pub fn loss_channel_state(state: &FockState, mode: usize, loss: f64, threshold: f64) -> Result<FockEnsemble> {
    loss_channel(&FockEnsemble::pure(state.clone()), mode, loss, threshold)
}

/// Loss on one mode of an ensemble. Each branch is unravelled until the
/// retained weight reaches `1 − threshold` of it.
pub fn loss_channel(ens: &FockEnsemble, mode: usize, loss: f64, threshold: f64) -> Result<FockEnsemble> {
    check_loss(loss)?;
    if ens.dims().len() <= mode {
        return Err(Error::BadModeIndex {
            index: mode,
            modes: ens.mode_count(),
        });
    }
    if loss == 0.0 {
        return Ok(ens.clone());
    }
    let dims = ens.dims().to_vec();
    let st = strides(&dims);
    let d = dims[mode];
    let lf = ln_factorials(d);
    let coef = |n: usize, k: usize| -> f64 {
        if loss == 1.0 {
            return f64::from(u8::from(k == n));
        }
        let ln = lf[n] - lf[k] - lf[n - k] + (n - k) as f64 * (1.0 - loss).ln() + k as f64 * loss.ln();
        (0.5 * ln).exp()
    };
    let mut out = Vec::new();
    for (w, s) in ens.branches() {
        let amps = s.amplitudes();
        let mut retained = 0.0;
        for k in 0..d {
            let mut v = vec![C64::new(0.0, 0.0); amps.len()];
            for (idx, a) in amps.iter().enumerate() {
                let n = digit(idx, st[mode], d);
                if n >= k && a.norm_sqr() > 0.0 {
                    v[idx - k * st[mode]] += a * coef(n, k);
                }
            }
            let n2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            retained += n2;
            if n2 > PRUNE {
                out.push((*w, FockState::from_amplitudes(dims.clone(), v)?));
            }
            if retained >= 1.0 - threshold {
                break;
            }
        }
    }
    FockEnsemble::new(out)
}

/// Applies diagonal measurement operators (given as `⟨n|Π|n⟩` per measured
/// mode) and drops those modes. Returns the unnormalised ensemble over the
/// remaining modes, in their original order.
pub fn diagonal_reduce(ens: &FockEnsemble, measured: &[(usize, Vec<f64>)]) -> Result<FockEnsemble> {
    let dims = ens.dims().to_vec();
    let modes = dims.len();
    for (m, diag) in measured {
        if *m >= modes {
            return Err(Error::BadModeIndex { index: *m, modes });
        }
        if diag.len() != dims[*m] {
            return Err(Error::ShapeMismatch(vec![dims[*m]], vec![diag.len()]));
        }
    }
    let mut is_measured = vec![None; modes];
    for (slot, (m, _)) in measured.iter().enumerate() {
        if is_measured[*m].is_some() {
            return Err(Error::InvalidParameter(format!("mode {m} measured twice")));
        }
        is_measured[*m] = Some(slot);
    }
    let kept: Vec<usize> = (0..modes).filter(|m| is_measured[*m].is_none()).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&m| dims[m]).collect();
    let kst = strides(&kept_dims);
    let kept_len: usize = kept_dims.iter().product();
    let meas_dims: Vec<usize> = measured.iter().map(|(m, _)| dims[*m]).collect();
    let mst = strides(&meas_dims);
    let st = strides(&dims);
    let input_weight = ens.total_weight();

    let mut out = Vec::new();
    for (w, s) in ens.branches() {
        let mut groups: HashMap<usize, Vec<C64>> = HashMap::new();
        for (idx, a) in s.amplitudes().iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let mut factor = 1.0;
            let mut mkey = 0;
            for (slot, (m, diag)) in measured.iter().enumerate() {
                let n = digit(idx, st[*m], dims[*m]);
                factor *= diag[n];
                mkey += n * mst[slot];
            }
            if factor == 0.0 {
                continue;
            }
            let mut kidx = 0;
            for (slot, &m) in kept.iter().enumerate() {
                kidx += digit(idx, st[m], dims[m]) * kst[slot];
            }
            groups.entry(mkey).or_insert_with(|| vec![C64::new(0.0, 0.0); kept_len])[kidx] += a * factor.sqrt();
        }
        let mut keys: Vec<usize> = groups.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let v = groups.remove(&key).expect("key present");
            let n2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if w * n2 > PRUNE * input_weight {
                out.push((*w, FockState::from_amplitudes(kept_dims.clone(), v)?));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::ZeroProbability(0.0));
    }
    let reduced = FockEnsemble::new(out)?;
    if reduced.len() > 1 && kept_len <= 256 {
        reduced.compress(PRUNE)
    } else {
        Ok(reduced)
    }
}

/// Traces out every mode not listed in `keep`.
pub fn partial_trace(ens: &FockEnsemble, keep: &[usize]) -> Result<FockEnsemble> {
    let modes = ens.mode_count();
    for &k in keep {
        if k >= modes {
            return Err(Error::BadModeIndex { index: k, modes });
        }
    }
    let traced: Vec<(usize, Vec<f64>)> = (0..modes)
        .filter(|m| !keep.contains(m))
        .map(|m| (m, vec![1.0; ens.dims()[m]]))
        .collect();
    if traced.is_empty() {
        return Ok(ens.clone());
    }
    diagonal_reduce(ens, &traced)
}

/// Taps `tap_ratio` of `mode` onto a fresh vacuum mode and keeps the runs
/// where an on/off detector on the tap clicks. Returns the normalised
/// heralded ensemble (same modes as the input) and the herald probability.
pub fn photon_subtract(
    ens: &FockEnsemble,
    mode: usize,
    tap_ratio: f64,
    apd: DetectorModel,
) -> Result<(FockEnsemble, f64)> {
    if !(tap_ratio > 0.0 && tap_ratio < 1.0) {
        return Err(Error::InvalidParameter(format!("tap ratio {tap_ratio} outside (0, 1)")));
    }
    if mode >= ens.mode_count() {
        return Err(Error::BadModeIndex {
            index: mode,
            modes: ens.mode_count(),
        });
    }
    let tap = ens.mode_count();
    let with_tap = ens.tensor(&FockState::vacuum(&[ens.dims()[mode]]));
    let split = with_tap.apply_beamsplitter(&BeamSplitter::new(tap_ratio, mode, tap)?)?;
    let c = crate::detection::condition_fock(&split, &[PortMeasurement::new(tap, Outcome::On, apd)])?;
    Ok((c.state, c.probability))
}

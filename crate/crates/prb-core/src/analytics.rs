//! Closed-form key-rate analytics: error/information curves of the
//! pseudorandom-bases protocol, the multibasis efficiency factor `zeta(M)`,
//! and the BB84 / asymmetric-BB84 baselines.

use std::f64::consts::PI;

use crate::bounds::GuessBoundProblem;
use crate::error::{Error, Result};

/// `h(p) = -p log2 p - (1-p) log2(1-p)`, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!("entropy argument {p} outside [0, 1]")));
    }
    Ok(h(p))
}

fn h(p: f64) -> f64 {
    let mut out = 0.0;
    for v in [p, 1.0 - p] {
        if v > 0.0 {
            out -= v * v.log2();
        }
    }
    out
}

/// Error probability a single intercept-resend event induces when Eve's basis
/// is off by the angle `delta`: `(1/2) sin^2(2 delta)`.
pub fn intercept_error_prob(delta: f64) -> f64 {
    0.5 * (2.0 * delta).sin().powi(2)
}

/// Distribution of Eve's basis-index error `t` over `[0, 2^m)` when each of
/// the `m` register bits is guessed correctly with probability `rho`
/// independently. Digit `j` of `t` (MSB first) flags a wrong register bit.
pub fn delta_distribution(rho_correct: f64, m: u32) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&rho_correct) {
        return Err(Error::Param(format!(
            "rho must be in [0, 1], got {rho_correct}"
        )));
    }
    let big_m = 1usize << m;
    let mut p = vec![0.0; big_m];
    for (t, slot) in p.iter_mut().enumerate() {
        let wrong = (t as u32).count_ones();
        *slot = rho_correct.powi((m - wrong) as i32) * (1.0 - rho_correct).powi(wrong as i32);
    }
    Ok(p)
}

/// QBER induced by intercepting a fraction `gamma` of pulses with basis-error
/// distribution `p_t`: `q = (gamma/4) sum_t p_t [1 - cos(2 pi t / M)]`.
pub fn qber_from_gamma(gamma: f64, p_t: &[f64], big_m: u32) -> f64 {
    let sum: f64 = p_t
        .iter()
        .enumerate()
        .map(|(t, &p)| p * (1.0 - (2.0 * PI * t as f64 / big_m as f64).cos()))
        .sum();
    gamma / 4.0 * sum
}

/// How `rho` (Eve's per-register bit-guess success probability) depends on
/// the intercepted fraction.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BoundSource {
    /// Truly random bases: `rho = 1/2` at every `gamma`.
    #[default]
    TrulyRandom,
    /// Ideal-pattern closed form.
    Theorem1 { s: u64 },
    /// Deviation-corrected closed form.
    Corollary1 { s_pattern: u32, s_keys: u32 },
    /// Deviation-corrected linear program.
    Corollary2Lp { s_pattern: u32, s_keys: u32 },
}

/// Everything needed to turn a QBER into Eve's information.
///
/// Bound evaluations (one linear program each for the LP source) are cached
/// per instance, so sweeps that revisit the same intercepted fractions pay
/// for each only once.
#[derive(Debug, Default)]
pub struct RateModel {
    /// Sequence period `L`; only consulted by the bound-based sources.
    pub period: u64,
    /// Number of basis registers; `M = 2^m`.
    pub m: u32,
    pub source: BoundSource,
    cache: std::sync::Mutex<std::collections::HashMap<u64, f64>>,
}

impl Clone for RateModel {
    fn clone(&self) -> Self {
        RateModel {
            period: self.period,
            m: self.m,
            source: self.source.clone(),
            cache: std::sync::Mutex::new(self.cache.lock().unwrap().clone()),
        }
    }
}

impl RateModel {
    pub fn new(period: u64, m: u32, source: BoundSource) -> Self {
        RateModel {
            period,
            m,
            source,
            cache: Default::default(),
        }
    }

    pub fn truly_random(m: u32) -> Self {
        Self::new(0, m, BoundSource::TrulyRandom)
    }

    pub fn basis_count(&self) -> u32 {
        1 << self.m
    }

    /// Eve's per-register success probability at intercepted fraction
    /// `gamma`, from the configured bound (capped at 1).
    pub fn rho(&self, gamma: f64) -> Result<f64> {
        if let Some(&hit) = self.cache.lock().unwrap().get(&gamma.to_bits()) {
            return Ok(hit);
        }
        let rho = self.rho_uncached(gamma)?;
        self.cache.lock().unwrap().insert(gamma.to_bits(), rho);
        Ok(rho)
    }

    fn rho_uncached(&self, gamma: f64) -> Result<f64> {
        let frac = match self.source {
            BoundSource::TrulyRandom => return Ok(0.5),
            BoundSource::Theorem1 { s } => {
                crate::bounds::theorem1_fraction(gamma, s)? / gamma
            }
            BoundSource::Corollary1 { s_pattern, s_keys } => {
                let prob = GuessBoundProblem::new(self.period, gamma, s_pattern, s_keys)?;
                prob.corollary1()? / (gamma * self.period as f64)
            }
            BoundSource::Corollary2Lp { s_pattern, s_keys } => {
                let prob = GuessBoundProblem::new(self.period, gamma, s_pattern, s_keys)?;
                prob.corollary2_lp()?.n_correct / (gamma * self.period as f64)
            }
        };
        Ok(frac.min(1.0))
    }

    pub fn p_t(&self, gamma: f64) -> Result<Vec<f64>> {
        delta_distribution(self.rho(gamma)?, self.m)
    }

    pub fn qber(&self, gamma: f64) -> Result<f64> {
        Ok(qber_from_gamma(gamma, &self.p_t(gamma)?, self.basis_count()))
    }
}

const GAMMA_TOL: f64 = 1e-12;
const GAMMA_SCAN: usize = 64;

/// Invert the QBER curve: the intercepted fraction producing error rate `q`.
///
/// A grid scan first asserts the curve is nondecreasing, then bisection
/// refines to `1e-12`.
pub fn gamma_from_qber(q: f64, model: &RateModel) -> Result<f64> {
    if q < 0.0 {
        return Err(Error::Param(format!("QBER must be nonnegative, got {q}")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let mut prev = 0.0;
    for i in 1..=GAMMA_SCAN {
        let g = i as f64 / GAMMA_SCAN as f64;
        let qg = model.qber(g)?;
        if qg < prev - 1e-12 {
            return Err(Error::NonMonotone(g));
        }
        prev = qg;
    }
    if q > prev + 1e-12 {
        return Err(Error::QberUnachievable(q));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        if hi - lo <= GAMMA_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if model.qber(mid)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Eve's mean information per raw key bit at error rate `q`:
/// `I_E = gamma(q) [1 - sum_t p_t h(cos^2(pi t / 2M))]`.
pub fn eve_info(q: f64, model: &RateModel) -> Result<f64> {
    let gamma = gamma_from_qber(q, model)?;
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let p_t = model.p_t(gamma)?;
    let big_m = model.basis_count() as f64;
    let leak: f64 = p_t
        .iter()
        .enumerate()
        .map(|(t, &p)| p * h((PI * t as f64 / (2.0 * big_m)).cos().powi(2)))
        .sum();
    Ok(gamma * (1.0 - leak))
}

/// `zeta(M) = 1 - (1/M) sum_{j<M} h(cos^2(pi j / 2M))`: Eve's information per
/// intercepted bit under uniformly wrong basis guesses.
pub fn zeta(big_m: u32) -> Result<f64> {
    if big_m < 2 || !big_m.is_power_of_two() {
        return Err(Error::Param(format!(
            "basis count must be a power of two >= 2, got {big_m}"
        )));
    }
    let mf = big_m as f64;
    let mean: f64 = (0..big_m)
        .map(|j| h((PI * j as f64 / (2.0 * mf)).cos().powi(2)))
        .sum::<f64>()
        / mf;
    Ok(1.0 - mean)
}

/// Secret fraction of the pseudorandom-bases protocol (no sifting):
/// `max(0, 1 - f h(q) - I_E(q))`.
pub fn rate_prb(q: f64, f: f64, model: &RateModel) -> Result<f64> {
    check_efficiency(f)?;
    let r = 1.0 - f * binary_entropy(q)? - eve_info(q, model)?;
    Ok(r.max(0.0))
}

/// Large-`L` limit with truly-random-like guessing: `1 - f h(q) - 4 q zeta(M)`.
pub fn rate_prb_asymptotic(q: f64, f: f64, big_m: u32) -> Result<f64> {
    check_efficiency(f)?;
    let r = 1.0 - f * binary_entropy(q)? - 4.0 * q * zeta(big_m)?;
    Ok(r.max(0.0))
}

/// Symmetric BB84 with sifting: `max(0, (1/2)[1 - f h(q) - 2q])`.
pub fn rate_bb84(q: f64, f: f64) -> Result<f64> {
    check_efficiency(f)?;
    Ok((0.5 * (1.0 - f * binary_entropy(q)? - 2.0 * q)).max(0.0))
}

fn check_efficiency(f: f64) -> Result<()> {
    if f < 1.0 {
        return Err(Error::Param(format!(
            "error-correction efficiency must be >= 1, got {f}"
        )));
    }
    Ok(())
}

/// Hoeffding statistical fluctuation term `sqrt(ln(1/eps) / 2K)`.
pub fn hoeffding_delta(trials: f64, epsilon: f64) -> Result<f64> {
    if trials < 1.0 {
        return Err(Error::Param(format!("trial count must be >= 1, got {trials}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Param(format!("epsilon must be in (0, 1], got {epsilon}")));
    }
    Ok(((1.0 / epsilon).ln() / (2.0 * trials)).sqrt())
}

const ABB84_GRID: usize = 512;
const ABB84_P_MIN: f64 = 1e-6;
const ABB84_TOL: f64 = 1e-10;

/// Asymmetric BB84 secret fraction with finite-key fluctuations, optimized
/// over the minority-basis probability `p`:
/// `max_p (1-p)^2 [1 - f h(q) - 2(q + sqrt(ln(1/eps)/(2 p^2 N_r)))]`.
///
/// Returns the clamped rate and the maximizing `p`.
pub fn rate_abb84(q: f64, f: f64, n_r: f64, epsilon: f64) -> Result<(f64, f64)> {
    check_efficiency(f)?;
    if n_r < 1.0 {
        return Err(Error::Param(format!("received count must be >= 1, got {n_r}")));
    }
    let hq = binary_entropy(q)?;
    let ln_inv_eps = (1.0 / epsilon).ln();
    if !(ln_inv_eps >= 0.0) {
        return Err(Error::Param(format!("epsilon must be in (0, 1], got {epsilon}")));
    }
    let objective = |p: f64| -> f64 {
        let fluct = (ln_inv_eps / (2.0 * p * p * n_r)).sqrt();
        (1.0 - p).powi(2) * (1.0 - f * hq - 2.0 * (q + fluct))
    };

    // Log grid over p, then golden-section refinement around the best cell.
    let ratio = (1.0 / ABB84_P_MIN).powf(1.0 / (ABB84_GRID - 1) as f64);
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    let grid_p = |i: usize| (ABB84_P_MIN * ratio.powi(i as i32)).min(1.0 - 1e-12);
    for i in 0..ABB84_GRID {
        let v = objective(grid_p(i));
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = grid_p(best_i.saturating_sub(1));
    let mut b = grid_p((best_i + 1).min(ABB84_GRID - 1));
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > ABB84_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    let p_opt = 0.5 * (a + b);
    Ok((objective(p_opt).max(best_v).max(0.0), p_opt))
}

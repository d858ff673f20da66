//! Intercept-resend strategies for Eve and the posterior over seeds given
//! only her measurement outcomes.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::{legendre_bit, LegendrePrime, RegisterKeySet};
use crate::protocol::AngleIndex;

/// How Eve picks her measurement bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StrategyMode {
    /// Guess each register bit uniformly at random.
    UniformGuess,
    /// Majority vote over a guessed candidate seed subset, one subset per
    /// register. Positions are chosen where the first register's candidates
    /// agree the most.
    KeySubsetMajority { candidates: Vec<Vec<u64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveStrategy {
    /// Fraction of pulses intercepted, in (0, 1].
    pub gamma: f64,
    #[serde(flatten)]
    pub mode: StrategyMode,
}

/// Concrete attack: sorted intercept positions and a basis index per position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvePlan {
    pub positions: Vec<u64>,
    pub betas: Vec<AngleIndex>,
}

impl EvePlan {
    pub fn validate(&self, m: u32, pulses: u64) -> Result<()> {
        if self.positions.len() != self.betas.len() {
            return Err(Error::Param("positions/betas length mismatch".into()));
        }
        if !self.positions.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Param("positions must be strictly increasing".into()));
        }
        if self.positions.last().is_some_and(|&p| p >= pulses) {
            return Err(Error::Param("intercept position beyond pulse count".into()));
        }
        let big_m = 1u32 << m;
        if self.betas.iter().any(|&b| b >= big_m) {
            return Err(Error::Param(format!("beta index outside [0, M={big_m})")));
        }
        Ok(())
    }
}

/// Rank positions by how extremely the candidate seeds agree and take the top
/// `ceil(gamma N)`, ties broken by ascending index. The per-position guess is
/// the majority bit; a tied vote guesses 0.
pub fn select_positions_majority(
    candidates: &[u64],
    gamma: f64,
    l: LegendrePrime,
    pulses: u64,
) -> Result<(Vec<u64>, Vec<u8>)> {
    if candidates.is_empty() {
        return Err(Error::Param("empty candidate seed set".into()));
    }
    let n = intercept_count(gamma, pulses)?;
    let s = candidates.len() as u64;
    // (negated extremity, index) so that plain sort gives the ranking.
    let mut ranked: Vec<(i64, u64, u64)> = (0..pulses)
        .map(|i| {
            let hw: u64 = candidates
                .iter()
                .map(|&k| legendre_bit(k as i64 + i as i64, l) as u64)
                .sum();
            let extremity = (2 * hw as i64 - s as i64).abs();
            (-extremity, i, hw)
        })
        .collect();
    ranked.sort_unstable();
    ranked.truncate(n as usize);
    ranked.sort_unstable_by_key(|&(_, i, _)| i);
    let positions: Vec<u64> = ranked.iter().map(|&(_, i, _)| i).collect();
    let guesses: Vec<u8> = ranked.iter().map(|&(_, _, hw)| (2 * hw > s) as u8).collect();
    Ok((positions, guesses))
}

fn intercept_count(gamma: f64, pulses: u64) -> Result<u64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Param(format!("gamma must be in (0, 1], got {gamma}")));
    }
    let n = (gamma * pulses as f64).ceil() as u64;
    if n < 1 || n > pulses {
        return Err(Error::Param(format!(
            "intercept count {n} outside [1, {pulses}]"
        )));
    }
    Ok(n)
}

/// Turn a strategy into a concrete plan for an `m`-register session.
///
/// For the majority mode, positions are the ones optimal for register 1;
/// lower-order registers reuse them and contribute their own majority bit.
pub fn build_eve_bases<R: Rng>(
    strategy: &EveStrategy,
    m: u32,
    l: LegendrePrime,
    pulses: u64,
    rng: &mut R,
) -> Result<EvePlan> {
    match &strategy.mode {
        StrategyMode::UniformGuess => {
            let n = intercept_count(strategy.gamma, pulses)?;
            let positions = sample_positions(pulses, n, rng);
            let big_m = 1u32 << m;
            let betas = positions.iter().map(|_| rng.gen_range(0..big_m)).collect();
            Ok(EvePlan { positions, betas })
        }
        StrategyMode::KeySubsetMajority { candidates } => {
            if candidates.len() != m as usize {
                return Err(Error::Param(format!(
                    "need {m} candidate subsets, got {}",
                    candidates.len()
                )));
            }
            let (positions, first_bits) =
                select_positions_majority(&candidates[0], strategy.gamma, l, pulses)?;
            let mut betas = vec![0u32; positions.len()];
            for (j, (&i, &b1)) in positions.iter().zip(&first_bits).enumerate() {
                let mut beta = (b1 as u32) << (m - 1);
                for (r, subset) in candidates.iter().enumerate().skip(1) {
                    if subset.is_empty() {
                        return Err(Error::Param(format!("empty candidate subset {r}")));
                    }
                    let hw: u64 = subset
                        .iter()
                        .map(|&k| legendre_bit(k as i64 + i as i64, l) as u64)
                        .sum();
                    let bit = (2 * hw > subset.len() as u64) as u32;
                    beta |= bit << (m - 1 - r as u32);
                }
                betas[j] = beta;
            }
            Ok(EvePlan { positions, betas })
        }
    }
}

fn sample_positions<R: Rng>(pulses: u64, n: u64, rng: &mut R) -> Vec<u64> {
    let mut positions =
        rand::seq::index::sample(rng, pulses as usize, n as usize).into_vec();
    positions.sort_unstable();
    positions.into_iter().map(|i| i as u64).collect()
}

/// Number of intercepted positions where Eve's basis bit for `register`
/// (1-based) matches the actual PRNG bit.
pub fn count_correct_guesses(
    plan: &EvePlan,
    keys: &RegisterKeySet,
    register: u32,
    l: LegendrePrime,
) -> Result<u64> {
    let m = keys.register_count();
    if register < 1 || register > m {
        return Err(Error::Param(format!("register {register} outside [1, {m}]")));
    }
    let key = keys.keys()[register as usize - 1];
    let shift = m - register;
    Ok(plan
        .positions
        .iter()
        .zip(&plan.betas)
        .filter(|&(&i, &beta)| {
            ((beta >> shift) & 1) as u8 == legendre_bit(key as i64 + i as i64, l)
        })
        .count() as u64)
}

const POSTERIOR_KEY_CAP: u64 = 1_000_000;

/// Exact Bayesian posterior over all `L^m` keys given only Eve's outcomes.
///
/// The per-position likelihood marginalizes over Alice's uniform bit, so the
/// posterior comes out uniform: Eve's outcomes alone carry no key information.
pub fn key_posterior_given_z(
    z: &[u8],
    positions: &[u64],
    betas: &[AngleIndex],
    l: LegendrePrime,
    m: u32,
) -> Result<Vec<f64>> {
    if z.len() != positions.len() || betas.len() != positions.len() {
        return Err(Error::Param("z/positions/betas length mismatch".into()));
    }
    let period = l.get();
    let key_count = period.checked_pow(m).filter(|&c| c <= POSTERIOR_KEY_CAP);
    let key_count = key_count.ok_or_else(|| {
        Error::EnumerationCap(format!("L^m = {period}^{m} exceeds {POSTERIOR_KEY_CAP}"))
    })?;
    let big_m = 1u64 << m;
    let mut weights = vec![0f64; key_count as usize];
    let mut digits = vec![0u64; m as usize];
    for (kappa, w) in weights.iter_mut().enumerate() {
        // Key digits base L, register 1 most significant.
        let mut rem = kappa as u64;
        for d in digits.iter_mut().rev() {
            *d = rem % period;
            rem /= period;
        }
        let mut likelihood = 1.0;
        for ((&i, &beta), &zj) in positions.iter().zip(betas).zip(z) {
            let mut phi = 0u64;
            for (r, &k) in digits.iter().enumerate() {
                phi |= (legendre_bit(k as i64 + i as i64, l) as u64) << (m as u64 - 1 - r as u64);
            }
            // p(z | phi, beta) marginalized over Alice's uniform bit.
            let mut p = 0.0;
            for x in 0..2u64 {
                let state = (phi + x * big_m) % (2 * big_m);
                let outcome = (beta as u64 + zj as u64 * big_m) % (2 * big_m);
                let delta = PI * (state as f64 - outcome as f64) / (2.0 * big_m as f64);
                p += 0.5 * delta.cos().powi(2);
            }
            likelihood *= p;
        }
        *w = likelihood;
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

//! Photon-number-splitting analysis for the two-basis protocol: state-pair
//! overlaps across intercepted multiphoton pulses and the resulting
//! state-discrimination success bounds for Eve.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::legendre::{legendre_bit, LegendrePrime};

/// Squared two-copy overlap between the pulse trains of seeds `k` and `k'`
/// at the given positions: product of `cos^4(delta) + sin^4(delta)` with
/// `delta` the basis-angle difference (`0` or `pi/4` in the two-basis case).
pub fn overlap_sq_sum(k: u64, k_prime: u64, positions: &[u64], l: LegendrePrime) -> f64 {
    let mut product = 1.0;
    for &i in positions {
        let a = legendre_bit(k as i64 + i as i64, l);
        let b = legendre_bit(k_prime as i64 + i as i64, l);
        let delta = PI / 4.0 * (a as f64 - b as f64);
        product *= delta.cos().powi(4) + delta.sin().powi(4);
    }
    product
}

/// Lower bound on Eve's seed-discrimination success from `n` intercepted
/// multiphoton pulses against an `l`-bit seed: `1 / (1 + (2^l - 1) 2^(-n/2))`.
pub fn succ_prob_lower_bound(l: u32, n: u64) -> f64 {
    1.0 / (1.0 + (2f64.powi(l as i32) - 1.0) * 2f64.powf(-(n as f64) / 2.0))
}

const DISCRIMINATION_CAP: u128 = 100_000_000;

/// Exact discrimination lower bound for an explicit candidate-seed set:
/// `(1/|K|) sum_k 1 / sum_k' overlap_sq_sum(k, k')`. The data bits drop out
/// because the summed overlap is independent of them.
pub fn discrimination_bound_exact(
    keys: &[u64],
    positions: &[u64],
    l: LegendrePrime,
) -> Result<f64> {
    if keys.is_empty() {
        return Err(Error::Param("need at least one candidate seed".into()));
    }
    for &k in keys {
        if k >= l.get() {
            return Err(Error::Param(format!("key {k} outside [0, {})", l.get())));
        }
    }
    let work = (keys.len() as u128).pow(2) * positions.len().max(1) as u128;
    if work > DISCRIMINATION_CAP {
        return Err(Error::EnumerationCap(format!(
            "discrimination enumeration needs {work} overlap factors"
        )));
    }
    let total: f64 = keys
        .iter()
        .map(|&k| {
            let denom: f64 = keys
                .iter()
                .map(|&kp| overlap_sq_sum(k, kp, positions, l))
                .sum();
            1.0 / denom
        })
        .sum();
    Ok(total / keys.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn overlap_identity_and_quarter() {
        let l = LegendrePrime::new(1019).unwrap();
        let positions: Vec<u64> = (0..50).collect();
        assert_eq!(overlap_sq_sum(5, 5, &positions, l), 1.0);

        // Positions where the two sequences differ: factor 1/2 each.
        let l7 = LegendrePrime::new(7).unwrap();
        let differing: Vec<u64> = (0..7)
            .filter(|&i| legendre_bit(i as i64, l7) != legendre_bit(1 + i as i64, l7))
            .collect();
        let v = overlap_sq_sum(0, 1, &differing, l7);
        assert!((v - 2f64.powi(-(differing.len() as i32))).abs() < 1e-15);
    }

    #[test]
    fn overlap_exponent_near_half() {
        let l = LegendrePrime::new(1019).unwrap();
        let positions: Vec<u64> = (0..100).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut mean = 0.0;
        for _ in 0..50 {
            let k = rng.gen_range(0..1019);
            let mut kp = rng.gen_range(0..1019);
            if kp == k {
                kp = (kp + 1) % 1019;
            }
            let v = overlap_sq_sum(k, kp, &positions, l);
            assert!(v > 0.0 && v <= 1.0);
            // About half the positions differ, each contributing 2^-1; the
            // per-pair count fluctuates binomially around 50.
            let exponent = v.log2() / 100.0;
            assert!((exponent + 0.5).abs() < 0.25, "k={k} kp={kp} exp={exponent}");
            mean += exponent / 50.0;
        }
        assert!((mean + 0.5).abs() < 0.1, "mean exponent {mean}");
    }

    #[test]
    fn succ_bound_values() {
        assert_eq!(succ_prob_lower_bound(1, 0), 0.5);
        assert!((succ_prob_lower_bound(16, 64) - 0.999985).abs() < 1e-6);
        assert!(succ_prob_lower_bound(16, 10_000) > 1.0 - 1e-12);
        // Roughly 2l interceptions reach even odds.
        for l in 8..=24u32 {
            let v = succ_prob_lower_bound(l, 2 * l as u64);
            assert!((0.49..=0.51).contains(&v), "l={l} v={v}");
        }
    }

    #[test]
    fn discrimination_no_information() {
        let l = LegendrePrime::new(7).unwrap();
        let keys: Vec<u64> = (0..7).collect();
        let v = discrimination_bound_exact(&keys, &[], l).unwrap();
        assert!((v - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(discrimination_bound_exact(&[3], &[0, 1, 2], l).unwrap(), 1.0);
    }

    #[test]
    fn discrimination_exceeds_generic_bound() {
        let l = LegendrePrime::new(7).unwrap();
        let keys: Vec<u64> = (0..7).collect();
        let v = discrimination_bound_exact(&keys, &[1, 5, 6], l).unwrap();
        // Generic form with the candidate count in place of 2^l.
        let generic = 1.0 / (1.0 + 6.0 * 2f64.powf(-1.5));
        assert!(v >= generic - 1e-12, "v={v} generic={generic}");
        assert!(v >= 1.0 / 7.0);
    }

    #[test]
    fn discrimination_nondecreasing_in_positions() {
        for prime in [7u64, 11] {
            let l = LegendrePrime::new(prime).unwrap();
            let keys: Vec<u64> = (0..prime).collect();
            let mut last = 0.0;
            for n in 0..=prime {
                let positions: Vec<u64> = (0..n).collect();
                let v = discrimination_bound_exact(&keys, &positions, l).unwrap();
                assert!(v >= last - 1e-12, "L={prime} n={n}");
                last = v;
            }
        }
    }
}

//! Legendre-symbol pseudorandom sequences and their exact pattern statistics.
//!
//! The basis sequence of the protocol is built from shifted quadratic-residue
//! indicator sequences modulo a prime `L = 3 (mod 4)`. One PRNG instance per
//! register; register 1 contributes the highest-order bit of the angle index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Modular exponentiation, safe for 64-bit moduli.
pub fn mod_exp(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let mut acc: u128 = 1;
    let m = modulus as u128;
    let mut b = (base % modulus) as u128;
    while exp != 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    base = acc as u64;
    base
}

/// Deterministic Miller-Rabin for the full 64-bit range.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let trailing = (n - 1).trailing_zeros();
    let odd = (n - 1) >> trailing;
    // This witness set is known to be exact for all n < 2^64.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_exp(a, odd, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..trailing - 1 {
            x = (x as u128 * x as u128 % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A prime modulus `L = 3 (mod 4)` for the Legendre sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct LegendrePrime(u64);

impl LegendrePrime {
    pub fn new(l: u64) -> Result<Self> {
        if l % 4 != 3 || !is_prime_u64(l) {
            return Err(Error::InvalidPrime(l));
        }
        Ok(Self(l))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// Seed length of one register, `l' = ceil(log2 L)`.
    pub fn seed_bits(self) -> u32 {
        64 - (self.0 - 1).leading_zeros()
    }
}

impl TryFrom<u64> for LegendrePrime {
    type Error = Error;
    fn try_from(l: u64) -> Result<Self> {
        Self::new(l)
    }
}

impl From<LegendrePrime> for u64 {
    fn from(p: LegendrePrime) -> u64 {
        p.0
    }
}

/// True iff `x` is a nonzero quadratic residue mod `L` (Euler's criterion).
pub fn is_quadratic_residue(x: i64, l: LegendrePrime) -> bool {
    let m = l.get();
    let r = x.rem_euclid(m as i64) as u64;
    if r == 0 {
        return false;
    }
    mod_exp(r, (m - 1) / 2, m) == 1
}

/// The Legendre sequence bit `a_i`: 1 iff `i` is a nonzero QR mod `L`.
pub fn legendre_bit(i: i64, l: LegendrePrime) -> u8 {
    is_quadratic_residue(i, l) as u8
}

/// One register's PRNG bit for seed `k`: the Legendre sequence shifted by `k`.
pub fn prng_bit(i: i64, k: u64, l: LegendrePrime) -> Result<u8> {
    if k >= l.get() {
        return Err(Error::Param(format!("seed {k} out of range [0, {})", l.get())));
    }
    Ok(legendre_bit(k as i64 + i, l))
}

/// Precomputed table of `a_i` over one period, for small `L`.
///
/// Speeds up simulation; `legendre_bit` stays the on-demand path for large `L`.
pub struct LegendreTable {
    bits: Vec<u8>,
    prime: LegendrePrime,
}

impl LegendreTable {
    pub const MAX_PERIOD: u64 = 1 << 24;

    pub fn new(l: LegendrePrime) -> Result<Self> {
        let m = l.get();
        if m > Self::MAX_PERIOD {
            return Err(Error::EnumerationCap(format!(
                "LegendreTable limited to L <= {}, got {m}",
                Self::MAX_PERIOD
            )));
        }
        let mut bits = vec![0u8; m as usize];
        for j in 1..m {
            bits[(j as u128 * j as u128 % m as u128) as usize] = 1;
        }
        Ok(Self { bits, prime: l })
    }

    pub fn prime(&self) -> LegendrePrime {
        self.prime
    }

    pub fn bit(&self, i: i64) -> u8 {
        self.bits[i.rem_euclid(self.prime.get() as i64) as usize]
    }

    pub fn prng_bit(&self, i: i64, k: u64) -> u8 {
        self.bit(k as i64 + i)
    }
}

/// Per-register seeds for the multibasis PRNG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterKeySet {
    keys: Vec<u64>,
}

impl RegisterKeySet {
    pub fn new(keys: Vec<u64>, l: LegendrePrime) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::Param("key set needs at least one register".into()));
        }
        for &k in &keys {
            if k >= l.get() {
                return Err(Error::Param(format!(
                    "seed {k} out of range [0, {})",
                    l.get()
                )));
            }
        }
        Ok(Self { keys })
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    /// Register count `m`.
    pub fn register_count(&self) -> u32 {
        self.keys.len() as u32
    }

    /// Number of basis angles, `M = 2^m`.
    pub fn basis_count(&self) -> u32 {
        1 << self.register_count()
    }

    /// Total seed length in bits, `l = m * ceil(log2 L)`.
    pub fn total_seed_bits(&self, l: LegendrePrime) -> u32 {
        self.register_count() * l.seed_bits()
    }
}

/// Angle index of pulse `i`: register `r` weighs `2^(m-r)`, so register 1 is
/// the most significant bit. The angle itself is `pi * idx / (2M)`.
pub fn basis_angle_index(i: i64, keys: &RegisterKeySet, l: LegendrePrime) -> u32 {
    let m = keys.register_count();
    let mut idx = 0u32;
    for (r, &k) in keys.keys().iter().enumerate() {
        idx |= (legendre_bit(k as i64 + i, l) as u32) << (m - 1 - r as u32);
    }
    idx
}

const PATTERN_COUNT_MAX_PERIOD: u64 = 10_000_000;

/// Exact pattern count `d_{i_1..i_s}(b_1..b_s)` over one period, by direct
/// enumeration. This is the test oracle for the pattern bounds; it refuses
/// large periods to keep runtime bounded.
pub fn pattern_count(offsets: &[u64], bits: &[u8], l: LegendrePrime) -> Result<u64> {
    if offsets.is_empty() || offsets.len() != bits.len() {
        return Err(Error::Param(
            "offsets and bits must be nonempty and equal length".into(),
        ));
    }
    let period = l.get();
    for (a, &off) in offsets.iter().enumerate() {
        if off >= period {
            return Err(Error::Param(format!("offset {off} outside [0, {period})")));
        }
        if offsets[..a].contains(&off) {
            return Err(Error::Param(format!("duplicate offset {off}")));
        }
    }
    if period > PATTERN_COUNT_MAX_PERIOD {
        return Err(Error::EnumerationCap(format!(
            "pattern_count limited to L <= {PATTERN_COUNT_MAX_PERIOD}"
        )));
    }
    let table = LegendreTable::new(l)?;
    let mut count = 0u64;
    for j in 0..period as i64 {
        if offsets
            .iter()
            .zip(bits)
            .all(|(&off, &b)| table.bit(j + off as i64) == b)
        {
            count += 1;
        }
    }
    Ok(count)
}

/// Pattern-count deviation bound `W(s)` for `s >= 3`:
/// `W(s) = (sqrt(L) [2^(s-1) (s-3) + 2] + 2^(s-1) (s+1) - 1) / 2^s`.
pub fn pattern_deviation_bound(s: u32, period: u64) -> Result<f64> {
    if s < 3 {
        return Err(Error::Param(format!(
            "W(s) defined for s >= 3 (s = 2 pattern counts are exact), got {s}"
        )));
    }
    let sqrt_l = (period as f64).sqrt();
    let s_f = s as f64;
    let pow = 2f64.powi(s as i32 - 1);
    Ok((sqrt_l * (pow * (s_f - 3.0) + 2.0) + pow * (s_f + 1.0) - 1.0) / (2.0 * pow))
}

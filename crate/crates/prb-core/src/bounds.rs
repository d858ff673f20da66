//! Upper bounds on how many pseudorandom basis bits Eve can guess:
//! a closed form, its deviation-corrected variant, a tighter linear-program
//! bound, and an exhaustive small-instance oracle.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::legendre::{legendre_bit, pattern_deviation_bound, LegendrePrime};
use crate::simplex::{self, Cmp, Constraint};

fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn cdf_exact_small(s: u64, t: u64) -> f64 {
    debug_assert!(s <= 64);
    let mut sum: u128 = 0;
    let mut c: u128 = 1; // C(s, j)
    for j in 0..=t {
        sum += c;
        c = c * (s - j) as u128 / (j + 1) as u128;
    }
    sum as f64 * 2f64.powi(-(s as i32))
}

fn cdf_log_gamma(s: u64, t: u64) -> f64 {
    // Tail symmetry keeps the summed mass below 1/2 + one term.
    if 2 * t >= s {
        return 1.0 - cdf_log_gamma_lower(s, s - t - 1);
    }
    cdf_log_gamma_lower(s, t)
}

fn cdf_log_gamma_lower(s: u64, t: u64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let mut sum = 0.0;
    let mut comp = 0.0; // Kahan compensation
    for j in 0..=t {
        let term = (ln_choose(s, j) - s as f64 * ln2).exp();
        let y = term - comp;
        let tmp = sum + y;
        comp = (tmp - sum) - y;
        sum = tmp;
    }
    sum
}

/// `P_s(t) = Pr[Binomial(s, 1/2) <= t]`, with `P_s(t) = 0` for `t < 0` and
/// `1` for `t >= s`.
pub fn binomial_cdf(s: u64, t: i64) -> f64 {
    if t < 0 {
        return 0.0;
    }
    let t = t as u64;
    if t >= s {
        return 1.0;
    }
    if s <= 64 {
        cdf_exact_small(s, t)
    } else {
        cdf_log_gamma(s, t)
    }
}

/// The split point of Theorem 1: the unique `r >= -1` with
/// `P_s(r) <= gamma/2 < P_s(r+1)`.
pub fn find_r(s: u64, gamma: f64) -> i64 {
    let half = gamma / 2.0;
    // Largest r with P_s(r) <= gamma/2; P_s(-1) = 0 qualifies always.
    let (mut lo, mut hi) = (-1i64, s as i64);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if binomial_cdf(s, mid) <= half {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Param(format!("gamma must be in (0, 1], got {gamma}")));
    }
    Ok(())
}

/// Guessed fraction of the period under the ideal pattern assumption:
/// `P_{s-1}(r) + ((s-r-1)/s) (gamma - 2 P_s(r))`.
pub fn theorem1_fraction(gamma: f64, s: u64) -> Result<f64> {
    check_gamma(gamma)?;
    if s < 2 {
        return Err(Error::Param(format!("theorem needs s >= 2, got {s}")));
    }
    let r = find_r(s, gamma);
    let head = binomial_cdf(s - 1, r);
    let slope = (s as i64 - r - 1) as f64 / s as f64;
    Ok(head + slope * (gamma - 2.0 * binomial_cdf(s, r)))
}

/// Theorem-1 count bound over a period of length `period`.
pub fn bound_theorem1(period: f64, gamma: f64, s: u64) -> Result<f64> {
    Ok(period * theorem1_fraction(gamma, s)?)
}

/// Upper deviation of pattern counts used by the corollaries. Exact for
/// `s = 2` (the pair counts are known exactly), `W(s)` otherwise.
fn upper_deviation(s: u32, period: u64) -> Result<f64> {
    if s == 2 {
        Ok(0.25)
    } else {
        pattern_deviation_bound(s, period)
    }
}

/// Inputs and derived quantities shared by the guessing-bound corollaries.
#[derive(Debug, Clone)]
pub struct GuessBoundProblem {
    pub period: u64,
    pub gamma: f64,
    /// Order of the pattern bound; enters the deviation `W`.
    pub s_pattern: u32,
    /// Key-subset size; enters the binomial terms and the failure probability
    /// `epsilon = s_keys / L`.
    pub s_keys: u32,
    pub deviation: f64,
    /// `L' = L (1 + 2^s W / L)`.
    pub period_adj: f64,
    /// `gamma' = gamma L / L'`.
    pub gamma_adj: f64,
}

impl GuessBoundProblem {
    pub fn new(period: u64, gamma: f64, s_pattern: u32, s_keys: u32) -> Result<Self> {
        let w = upper_deviation(s_pattern, period)?;
        Self::with_deviation(period, gamma, s_pattern, s_keys, w)
    }

    /// Ideal pattern statistics (`W = 0`), for consistency checks.
    pub fn ideal(period: u64, gamma: f64, s_pattern: u32, s_keys: u32) -> Result<Self> {
        Self::with_deviation(period, gamma, s_pattern, s_keys, 0.0)
    }

    pub fn with_deviation(
        period: u64,
        gamma: f64,
        s_pattern: u32,
        s_keys: u32,
        deviation: f64,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        if s_pattern < 2 || s_keys < 2 {
            return Err(Error::Param(format!(
                "pattern order and key-subset size must be >= 2, got ({s_pattern}, {s_keys})"
            )));
        }
        let spread = 2f64.powi(s_pattern as i32) * deviation;
        if spread >= period as f64 {
            return Err(Error::DeviationDominates(spread, period));
        }
        let period_adj = period as f64 + spread;
        Ok(Self {
            period,
            gamma,
            s_pattern,
            s_keys,
            deviation,
            period_adj,
            gamma_adj: gamma * period as f64 / period_adj,
        })
    }

    /// Failure probability `epsilon = s_keys / L` of the key-subset guess.
    pub fn epsilon(&self) -> f64 {
        self.s_keys as f64 / self.period as f64
    }

    /// Closed-form count bound (Corollary 1): Theorem 1 at `(L', gamma')`.
    pub fn corollary1(&self) -> Result<f64> {
        bound_theorem1(self.period_adj, self.gamma_adj, self.s_keys as u64)
    }

    /// Linear-program count bound (Corollary 2).
    pub fn corollary2_lp(&self) -> Result<LpBound> {
        if self.s_pattern > self.s_keys {
            return Err(Error::Param(format!(
                "LP bound needs s_pattern <= s_keys, got ({}, {})",
                self.s_pattern, self.s_keys
            )));
        }
        let s = self.s_pattern as u64;
        let big_s = self.s_keys as u64;
        let half = (big_s / 2) as usize; // variables are symmetric pair masses
        let nvars = half + 1;

        // Hypergeometric pmf: drawing h marked in s draws from a population
        // of big_s with w marked. All LP coefficients live in [0, 1].
        let hyper = |w: u64, h: u64| -> f64 {
            if h > w || s - h > big_s - w {
                return 0.0;
            }
            (ln_choose(w, h) + ln_choose(big_s - w, s - h) - ln_choose(big_s, s)).exp()
        };

        let objective: Vec<f64> = (0..nvars)
            .map(|j| (big_s - j as u64) as f64 / big_s as f64)
            .collect();
        let mut constraints = vec![Constraint {
            coeffs: vec![1.0; nvars],
            cmp: Cmp::Eq,
            rhs: self.gamma_adj,
        }];
        let ln2 = std::f64::consts::LN_2;
        for h in 0..=s {
            let coeffs: Vec<f64> = (0..nvars)
                .map(|j| {
                    let j = j as u64;
                    if 2 * j == big_s {
                        hyper(j, h)
                    } else {
                        0.5 * (hyper(j, h) + hyper(big_s - j, h))
                    }
                })
                .collect();
            let rhs = (ln_choose(s, h) - s as f64 * ln2).exp();
            constraints.push(Constraint { coeffs, cmp: Cmp::Le, rhs });
        }
        let sol = simplex::maximize(&objective, &constraints)?;
        Ok(LpBound {
            n_correct: sol.objective * self.period_adj,
            nu_correct: sol.objective,
            gap: sol.gap,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LpBound {
    /// Count bound `nu* L'`.
    pub n_correct: f64,
    /// Fraction of the adjusted period.
    pub nu_correct: f64,
    /// Primal-dual gap reported by the solver.
    pub gap: f64,
}

/// Corollary-1 count bound with `W` from the pattern statistics.
pub fn bound_corollary1(period: u64, gamma: f64, s_pattern: u32, s_keys: u32) -> Result<f64> {
    GuessBoundProblem::new(period, gamma, s_pattern, s_keys)?.corollary1()
}

/// Corollary-2 LP count bound with `W` from the pattern statistics.
pub fn bound_corollary2_lp(period: u64, gamma: f64, s_pattern: u32, s_keys: u32) -> Result<f64> {
    Ok(GuessBoundProblem::new(period, gamma, s_pattern, s_keys)?
        .corollary2_lp()?
        .n_correct)
}

fn choose_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut c: u128 = 1;
    for j in 0..k {
        c = c * (n - j) as u128 / (j + 1) as u128;
    }
    c
}

const BRUTEFORCE_SUBSET_CAP: u128 = 1_000_000;

/// Exact max-min correct-guess count over all position subsets of size `n`
/// and all guess assignments, on the actual Legendre sequences.
///
/// Positions are interchangeable within their correctness class, so the
/// search runs over class allocations instead of raw subsets; tie classes
/// (even key counts split evenly) keep both guess choices available.
pub fn bruteforce_minmax(l: LegendrePrime, keys: &[u64], n: u64) -> Result<u64> {
    let period = l.get();
    if period > 31 {
        return Err(Error::EnumerationCap(format!(
            "bruteforce_minmax limited to L <= 31, got {period}"
        )));
    }
    if keys.is_empty() || keys.len() > 16 {
        return Err(Error::Param("need between 1 and 16 candidate keys".into()));
    }
    for (a, &k) in keys.iter().enumerate() {
        if k >= period {
            return Err(Error::Param(format!("key {k} outside [0, {period})")));
        }
        if keys[..a].contains(&k) {
            return Err(Error::Param(format!("duplicate key {k}")));
        }
    }
    if n < 1 || n > period {
        return Err(Error::Param(format!("n must be in [1, L={period}], got {n}")));
    }
    if choose_u128(period, n) > BRUTEFORCE_SUBSET_CAP {
        return Err(Error::EnumerationCap(format!(
            "C({period}, {n}) exceeds {BRUTEFORCE_SUBSET_CAP}"
        )));
    }

    let s = keys.len();
    // Group positions by their key-bit pattern.
    let mut counts = vec![0u64; 1 << s];
    for j in 0..period as i64 {
        let mut pattern = 0usize;
        for (i, &k) in keys.iter().enumerate() {
            pattern |= (legendre_bit(k as i64 + j, l) as usize) << i;
        }
        counts[pattern] += 1;
    }
    let mut classes = Vec::new();
    for (pattern, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let ones = (pattern as u32).count_ones() as usize;
        let zeros_mask = !pattern & ((1 << s) - 1);
        let masks = if 2 * ones == s {
            // Tied vote: either guess is available.
            vec![zeros_mask, pattern]
        } else if 2 * ones > s {
            vec![pattern]
        } else {
            vec![zeros_mask]
        };
        classes.push((count, masks));
    }
    // Remaining capacity from each class onward, for pruning.
    let mut suffix_cap = vec![0u64; classes.len() + 1];
    for i in (0..classes.len()).rev() {
        suffix_cap[i] = suffix_cap[i + 1] + classes[i].0;
    }

    let mut best = 0u64;
    let mut correct = vec![0u64; s];
    search(&classes, &suffix_cap, n, 0, &mut correct, &mut best);
    Ok(best)
}

fn search(
    classes: &[(u64, Vec<usize>)],
    suffix_cap: &[u64],
    remaining: u64,
    idx: usize,
    correct: &mut Vec<u64>,
    best: &mut u64,
) {
    if remaining > suffix_cap[idx] {
        return;
    }
    // Even with every remaining guess correct for all keys, can we beat best?
    let optimistic = correct.iter().copied().min().unwrap_or(0) + remaining;
    if optimistic <= *best && idx < classes.len() {
        return;
    }
    if idx == classes.len() {
        debug_assert_eq!(remaining, 0);
        *best = (*best).max(correct.iter().copied().min().unwrap_or(0));
        return;
    }
    let (count, ref masks) = classes[idx];
    let take_max = count.min(remaining);
    if masks.len() == 1 {
        for x in 0..=take_max {
            apply(correct, masks[0], x as i64);
            search(classes, suffix_cap, remaining - x, idx + 1, correct, best);
            apply(correct, masks[0], -(x as i64));
        }
    } else {
        for x0 in 0..=take_max {
            apply(correct, masks[0], x0 as i64);
            for x1 in 0..=(count - x0).min(remaining - x0) {
                apply(correct, masks[1], x1 as i64);
                search(classes, suffix_cap, remaining - x0 - x1, idx + 1, correct, best);
                apply(correct, masks[1], -(x1 as i64));
            }
            apply(correct, masks[0], -(x0 as i64));
        }
    }
}

fn apply(correct: &mut [u64], mask: usize, delta: i64) {
    for (i, c) in correct.iter_mut().enumerate() {
        if (mask >> i) & 1 == 1 {
            *c = (*c as i64 + delta) as u64;
        }
    }
}

//! PRB session simulation: state preparation, measurement, transcripts, QBER.
//!
//! Angles are kept as exact integer multiples of `pi/(2M)`; trigonometry is
//! applied only at measurement time.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;

use crate::eavesdrop::EvePlan;
use crate::error::{Error, Result};
use crate::legendre::{basis_angle_index, LegendrePrime, RegisterKeySet};
use crate::rng::{role_rng, Role};

/// Discrete angle as an integer multiple of `pi/(2M)`, in `[0, 2M)`.
/// Values in `[0, M)` are basis angles; adding `M` adds `pi/2` (bit value 1).
pub type AngleIndex = u32;

#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub prime: LegendrePrime,
    pub keys: RegisterKeySet,
    /// Pulse count `N`, at most `L`.
    pub pulses: u64,
    /// Fraction of pulses reaching Bob (`N_r / N`), in (0, 1].
    pub reception_rate: f64,
    /// Independent bit-flip probability on Bob's outcome, in [0, 0.5].
    pub intrinsic_error: f64,
    pub rng_seed: u64,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if self.pulses < 1 || self.pulses > self.prime.get() {
            return Err(Error::Param(format!(
                "pulse count must be in [1, L={}], got {}",
                self.prime.get(),
                self.pulses
            )));
        }
        if !(self.reception_rate > 0.0 && self.reception_rate <= 1.0) {
            return Err(Error::Param(format!(
                "reception_rate must be in (0, 1], got {}",
                self.reception_rate
            )));
        }
        if !(0.0..=0.5).contains(&self.intrinsic_error) {
            return Err(Error::Param(format!(
                "intrinsic_error must be in [0, 0.5], got {}",
                self.intrinsic_error
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PulseRecord {
    pub x: u8,
    pub received: bool,
    /// Bob's bit; present iff the pulse was received.
    pub y: Option<u8>,
    /// Eve's basis angle index and outcome, if she intercepted this pulse.
    pub eve: Option<(AngleIndex, u8)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionTranscript {
    pub pulses: Vec<PulseRecord>,
}

impl SessionTranscript {
    /// CSV export with columns `i,x,received,y,intercepted,beta_idx,z`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,x,received,y,intercepted,beta_idx,z")?;
        for (i, rec) in self.pulses.iter().enumerate() {
            let y = rec.y.map(|y| y.to_string()).unwrap_or_default();
            let (beta, z) = match rec.eve {
                Some((beta, z)) => (beta.to_string(), z.to_string()),
                None => (String::new(), String::new()),
            };
            writeln!(
                w,
                "{i},{},{},{y},{},{beta},{z}",
                rec.x,
                rec.received as u8,
                rec.eve.is_some() as u8
            )?;
        }
        Ok(())
    }
}

/// State for bit `x` in basis `phi`: index `phi + x M (mod 2M)`.
pub fn prepare_pulse(basis: AngleIndex, x: u8, m: u32) -> Result<AngleIndex> {
    let big_m = 1u32 << m;
    if basis >= big_m {
        return Err(Error::Param(format!(
            "basis index {basis} outside [0, M={big_m})"
        )));
    }
    Ok((basis + x as u32 * big_m) % (2 * big_m))
}

/// Projective measurement of `state` in basis `basis`; outcome 0 with
/// probability `cos^2(pi (state - basis) / (2M))`. Consumes one uniform draw.
pub fn measure<R: Rng>(state: AngleIndex, basis: AngleIndex, m: u32, rng: &mut R) -> u8 {
    let big_m = 1u32 << m;
    let delta = PI * (state as f64 - basis as f64) / (2.0 * big_m as f64);
    let p0 = delta.cos().powi(2);
    (rng.gen::<f64>() >= p0) as u8
}

/// Run one PRB session, optionally with an intercept-resend attack.
///
/// Losses are applied after Eve's intercept point. Deterministic in
/// `params.rng_seed`; each role draws from its own stream.
pub fn run_session(params: &ProtocolParams, eve: Option<&EvePlan>) -> Result<SessionTranscript> {
    params.validate()?;
    if let Some(plan) = eve {
        plan.validate(params.keys.register_count(), params.pulses)?;
    }
    let m = params.keys.register_count();
    let mut alice = role_rng(params.rng_seed, Role::AliceBits);
    let mut eve_rng = role_rng(params.rng_seed, Role::EveOutcomes);
    let mut bob = role_rng(params.rng_seed, Role::BobOutcomes);
    let mut loss = role_rng(params.rng_seed, Role::Loss);

    let mut records = Vec::with_capacity(params.pulses as usize);
    let mut eve_next = 0usize;
    for i in 0..params.pulses {
        let phi = basis_angle_index(i as i64, &params.keys, params.prime);
        let x: u8 = alice.gen_range(0..2);
        let mut state = prepare_pulse(phi, x, m)?;

        let mut eve_record = None;
        if let Some(plan) = eve {
            if eve_next < plan.positions.len() && plan.positions[eve_next] == i {
                let beta = plan.betas[eve_next];
                let z = measure(state, beta, m, &mut eve_rng);
                state = prepare_pulse(beta, z, m)?;
                eve_record = Some((beta, z));
                eve_next += 1;
            }
        }

        let received = loss.gen::<f64>() < params.reception_rate;
        let y = if received {
            let mut y = measure(state, phi, m, &mut bob);
            if params.intrinsic_error > 0.0 && bob.gen::<f64>() < params.intrinsic_error {
                y ^= 1;
            }
            Some(y)
        } else {
            None
        };

        records.push(PulseRecord {
            x,
            received,
            y,
            eve: eve_record,
        });
    }
    Ok(SessionTranscript { pulses: records })
}

/// Fraction of received pulses with `y != x`.
pub fn transcript_qber(t: &SessionTranscript) -> Result<f64> {
    let mut received = 0u64;
    let mut errors = 0u64;
    for rec in &t.pulses {
        if let Some(y) = rec.y {
            received += 1;
            if y != rec.x {
                errors += 1;
            }
        }
    }
    if received == 0 {
        return Err(Error::EmptyTranscript);
    }
    Ok(errors as f64 / received as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eavesdrop::EvePlan;
    use crate::legendre::basis_angle_index;
    use rand::SeedableRng;

    fn params(l: u64, keys: Vec<u64>, pulses: u64, seed: u64) -> ProtocolParams {
        let prime = LegendrePrime::new(l).unwrap();
        ProtocolParams {
            prime,
            keys: RegisterKeySet::new(keys, prime).unwrap(),
            pulses,
            reception_rate: 1.0,
            intrinsic_error: 0.0,
            rng_seed: seed,
        }
    }

    #[test]
    fn prepare_pulse_examples() {
        assert_eq!(prepare_pulse(3, 0, 2).unwrap(), 3);
        assert_eq!(prepare_pulse(0, 1, 2).unwrap(), 4); // angle pi/2
        assert_eq!(prepare_pulse(3, 1, 2).unwrap(), 7); // angle 7 pi / 8
        assert!(prepare_pulse(4, 0, 2).is_err());
    }

    #[test]
    fn measure_deterministic_cases() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(measure(3, 3, 2, &mut rng), 0);
            assert_eq!(measure(3 + 4, 3, 2, &mut rng), 1);
        }
        // Conjugate basis: state - basis = M/2 gives each outcome w.p. 1/2.
        let n = 20_000;
        let ones: u32 = (0..n).map(|_| measure(2, 0, 2, &mut rng) as u32).sum();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn ideal_session_agrees() {
        let t = run_session(&params(1019, vec![17, 300], 1019, 7), None).unwrap();
        assert_eq!(t.pulses.len(), 1019);
        for rec in &t.pulses {
            assert!(rec.received);
            assert_eq!(rec.y, Some(rec.x));
        }
        assert_eq!(transcript_qber(&t).unwrap(), 0.0);
    }

    #[test]
    fn sessions_reproducible() {
        let p = params(1019, vec![17], 1019, 99);
        assert_eq!(run_session(&p, None).unwrap(), run_session(&p, None).unwrap());
    }

    #[test]
    fn losses_hit_expected_fraction() {
        let mut p = params(1019, vec![17], 1019, 3);
        p.reception_rate = 0.5;
        let t = run_session(&p, None).unwrap();
        let received = t.pulses.iter().filter(|r| r.received).count() as f64;
        let sigma = (1019.0f64 * 0.25).sqrt();
        assert!((received - 1019.0 * 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn correct_basis_eve_is_transparent() {
        let p = params(1019, vec![17], 1019, 5);
        let betas: Vec<u32> = (0..1019)
            .map(|i| basis_angle_index(i, &p.keys, p.prime))
            .collect();
        let plan = EvePlan {
            positions: (0..1019).collect(),
            betas,
        };
        let t = run_session(&p, Some(&plan)).unwrap();
        assert_eq!(transcript_qber(&t).unwrap(), 0.0);
        for rec in &t.pulses {
            assert_eq!(rec.eve.unwrap().1, rec.x);
        }
    }

    #[test]
    fn intrinsic_error_matches_rate() {
        let mut p = params(1019, vec![17], 1019, 11);
        p.intrinsic_error = 0.1;
        let t = run_session(&p, None).unwrap();
        let q = transcript_qber(&t).unwrap();
        let sigma = (0.1f64 * 0.9 / 1019.0).sqrt();
        assert!((q - 0.1).abs() < 3.0 * sigma);
    }

    #[test]
    fn eve_outcome_marginal_is_half() {
        // The single-copy state with unknown x is completely mixed, so Eve's
        // outcome frequency is 1/2 for every basis she picks.
        let p = params(1019, vec![17, 44, 800], 1019, 13);
        let plan = EvePlan {
            positions: (0..1019).collect(),
            betas: (0..1019).map(|i| (i % 8) as u32).collect(),
        };
        let t = run_session(&p, Some(&plan)).unwrap();
        let zeros = t
            .pulses
            .iter()
            .filter(|r| matches!(r.eve, Some((_, 0))))
            .count() as f64;
        let sigma = (1019.0f64 * 0.25).sqrt();
        assert!((zeros - 1019.0 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn empty_transcript_rejected() {
        let t = SessionTranscript { pulses: vec![] };
        assert!(matches!(transcript_qber(&t), Err(Error::EmptyTranscript)));
    }

    #[test]
    fn csv_round_shape() {
        let p = params(7, vec![3], 7, 1);
        let t = run_session(&p, None).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[0], "i,x,received,y,intercepted,beta_idx,z");
    }
}

//! Iterative max-log-MAP turbo decoder.
//!
//! Branch metrics are kept at twice their log-domain value (`±L` instead of
//! `±L/2`), which leaves every max comparison unchanged; the extrinsic output
//! is halved once at the end of each trellis pass.

use crate::scalar::LlrScalar;

use super::crc::crc24_check;
use super::qpp::permutation;
use super::rsc::{termination_input, NUM_STATES, TRELLIS};
use super::{CodecError, LlrBlock};

pub const DEFAULT_MAX_ITERATIONS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Hard decisions for the whole code block (filler, payload and CRC).
    pub bits: Vec<u8>,
    pub iterations_used: u32,
    /// CRC verdict on `bits`.
    pub success: bool,
}

/// Decoder with reusable scratch buffers. One per worker thread.
#[derive(Debug, Default)]
pub struct TurboDecoder<T> {
    alpha: Vec<[T; NUM_STATES]>,
    sys_interleaved: Vec<T>,
    apriori: Vec<T>,
    extrinsic: Vec<T>,
    /// Second decoder's extrinsic, interleaved order.
    extrinsic2: Vec<T>,
    /// Second decoder's extrinsic, in natural order.
    feedback: Vec<T>,
    hard: Vec<u8>,
}

#[inline]
fn signed<T: LlrScalar>(bit: u8, llr: T) -> T {
    if bit == 0 {
        llr
    } else {
        -llr
    }
}

#[inline]
fn normalize<T: LlrScalar>(m: &mut [T; NUM_STATES]) {
    let top = m.iter().copied().fold(T::neg_infinity(), T::max);
    if top.is_finite() {
        m.iter_mut().for_each(|v| *v = *v - top);
    }
}

/// One constituent max-log-MAP pass over a terminated trellis.
///
/// Writes the extrinsic LLR of every information bit into `extrinsic`.
fn constituent_pass<T: LlrScalar>(
    alpha: &mut Vec<[T; NUM_STATES]>,
    systematic: &[T],
    apriori: &[T],
    parity: &[T],
    tail: &[T],
    extrinsic: &mut [T],
) {
    let k = systematic.len();
    let ninf = T::neg_infinity();
    let half = T::from_f64(0.5).unwrap_or_else(T::zero);

    alpha.clear();
    let mut start = [ninf; NUM_STATES];
    start[0] = T::zero();
    alpha.push(start);
    for t in 0..k {
        let lu = systematic[t] + apriori[t];
        let lp = parity[t];
        let prev = alpha[t];
        let mut next = [ninf; NUM_STATES];
        for (s, &a) in prev.iter().enumerate() {
            if a == ninf {
                continue;
            }
            for u in 0..2u8 {
                let br = TRELLIS[s][u as usize];
                let m = a + signed(u, lu) + signed(br.parity, lp);
                let slot = &mut next[br.next as usize];
                if m > *slot {
                    *slot = m;
                }
            }
        }
        normalize(&mut next);
        alpha.push(next);
    }

    // Backward through the three termination steps.
    let mut beta = [ninf; NUM_STATES];
    beta[0] = T::zero();
    for j in (0..3).rev() {
        let (tx, tz) = (tail[2 * j], tail[2 * j + 1]);
        let mut prev = [ninf; NUM_STATES];
        for (s, slot) in prev.iter_mut().enumerate() {
            let u = termination_input(s as u8);
            let br = TRELLIS[s][u as usize];
            *slot = beta[br.next as usize] + signed(u, tx) + signed(br.parity, tz);
        }
        normalize(&mut prev);
        beta = prev;
    }

    for t in (0..k).rev() {
        let lu = systematic[t] + apriori[t];
        let lp = parity[t];
        let a = &alpha[t];
        let mut best = [ninf; 2];
        let mut prev = [ninf; NUM_STATES];
        for s in 0..NUM_STATES {
            for u in 0..2u8 {
                let br = TRELLIS[s][u as usize];
                let b = beta[br.next as usize];
                let par = signed(br.parity, lp);
                let through = a[s] + par + b;
                if through > best[u as usize] {
                    best[u as usize] = through;
                }
                let m = signed(u, lu) + par + b;
                if m > prev[s] {
                    prev[s] = m;
                }
            }
        }
        extrinsic[t] = (best[0] - best[1]) * half;
        normalize(&mut prev);
        beta = prev;
    }
}

impl<T: LlrScalar> TurboDecoder<T> {
    pub fn new() -> Self {
        Self {
            alpha: Vec::new(),
            sys_interleaved: Vec::new(),
            apriori: Vec::new(),
            extrinsic: Vec::new(),
            extrinsic2: Vec::new(),
            feedback: Vec::new(),
            hard: Vec::new(),
        }
    }

    /// Runs up to `max_iterations` full iterations. With `early_stop`, stops
    /// after the first iteration whose hard decisions pass the CRC.
    pub fn decode(
        &mut self,
        llr: &LlrBlock<T>,
        max_iterations: u32,
        early_stop: bool,
    ) -> Result<DecodeResult, CodecError> {
        if max_iterations == 0 {
            return Err(CodecError::ZeroIterations);
        }
        llr.validate()?;
        let mut values = llr
            .systematic
            .iter()
            .chain(&llr.parity1)
            .chain(&llr.parity2)
            .chain(&llr.tail);
        if values.any(|v| !v.is_finite()) {
            return Err(CodecError::NonFiniteLlr);
        }
        let k = llr.k();
        let perm = permutation(k)?;

        self.sys_interleaved.clear();
        self.sys_interleaved
            .extend(perm.iter().map(|&p| llr.systematic[p as usize]));
        self.feedback.clear();
        self.feedback.resize(k, T::zero());
        self.apriori.resize(k, T::zero());
        self.extrinsic.resize(k, T::zero());
        self.extrinsic2.resize(k, T::zero());
        self.hard.clear();
        self.hard.resize(k, 0);

        let mut success = false;
        let mut iterations = 0;
        for it in 1..=max_iterations {
            iterations = it;
            constituent_pass(
                &mut self.alpha,
                &llr.systematic,
                &self.feedback,
                &llr.parity1,
                &llr.tail[..6],
                &mut self.extrinsic,
            );
            for (a, &p) in self.apriori.iter_mut().zip(perm) {
                *a = self.extrinsic[p as usize];
            }
            constituent_pass(
                &mut self.alpha,
                &self.sys_interleaved,
                &self.apriori,
                &llr.parity2,
                &llr.tail[6..],
                &mut self.extrinsic2,
            );
            for (i, &p) in perm.iter().enumerate() {
                let p = p as usize;
                // channel + first extrinsic + second extrinsic
                let posterior = self.sys_interleaved[i] + self.apriori[i] + self.extrinsic2[i];
                self.hard[p] = u8::from(posterior < T::zero());
                self.feedback[p] = self.extrinsic2[i];
            }

            success = crc24_check(&self.hard);
            if early_stop && success {
                break;
            }
        }
        Ok(DecodeResult {
            bits: self.hard.clone(),
            iterations_used: iterations,
            success,
        })
    }
}

/// One-shot decode with freshly allocated scratch.
pub fn turbo_decode<T: LlrScalar>(
    llr: &LlrBlock<T>,
    max_iterations: u32,
    early_stop: bool,
) -> Result<DecodeResult, CodecError> {
    TurboDecoder::new().decode(llr, max_iterations, early_stop)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::codec::{crc24_attach, turbo_encode_bits, CRC_LEN};

    fn random_block(rng: &mut ChaCha8Rng, k: usize) -> Vec<u8> {
        let info: Vec<u8> = (0..k - CRC_LEN).map(|_| rng.random_range(0..2)).collect();
        crc24_attach(&info).unwrap()
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in [40, 48, 512, 1056, 6144] {
            let bits = random_block(&mut rng, k);
            let eb = turbo_encode_bits(&bits).unwrap();
            let r = turbo_decode(&LlrBlock::from_hard(&eb, 4.0f32), 8, true).unwrap();
            assert!(r.success);
            assert!(r.iterations_used <= 2);
            assert_eq!(r.bits, bits);
        }
    }

    #[test]
    fn f64_matches_f32_on_clean_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bits = random_block(&mut rng, 256);
        let eb = turbo_encode_bits(&bits).unwrap();
        let a = turbo_decode(&LlrBlock::from_hard(&eb, 2.0f32), 4, false).unwrap();
        let b = turbo_decode(&LlrBlock::from_hard(&eb, 2.0f64), 4, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iterations_used, 4);
    }

    #[test]
    fn erased_input_fails_after_all_iterations() {
        let r = turbo_decode(&LlrBlock::<f32>::erased(104), 8, true).unwrap();
        assert!(!r.success);
        assert_eq!(r.iterations_used, 8);
    }

    #[test]
    fn corrects_a_few_flipped_systematic_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bits = random_block(&mut rng, 1024);
        let eb = turbo_encode_bits(&bits).unwrap();
        let mut llr = LlrBlock::from_hard(&eb, 1.0f32);
        for i in (0..1024).step_by(97) {
            llr.systematic[i] = -llr.systematic[i];
        }
        let r = turbo_decode(&llr, 8, true).unwrap();
        assert!(r.success);
        assert_eq!(r.bits, bits);
    }

    #[test]
    fn rejects_bad_input() {
        let mut l = LlrBlock::<f32>::erased(40);
        assert_eq!(turbo_decode(&l, 0, true), Err(CodecError::ZeroIterations));
        l.parity1.truncate(10);
        assert!(matches!(
            turbo_decode(&l, 4, true),
            Err(CodecError::LengthMismatch { .. })
        ));
        let mut l = LlrBlock::<f32>::erased(40);
        l.tail[3] = f32::NAN;
        assert!(turbo_decode(&l, 4, true).is_err());
    }

    #[test]
    fn scratch_reuse_is_stateless() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut dec = TurboDecoder::<f32>::new();
        let a = random_block(&mut rng, 6144);
        let b = random_block(&mut rng, 40);
        let la = LlrBlock::from_hard(&turbo_encode_bits(&a).unwrap(), 1.5);
        let lb = LlrBlock::from_hard(&turbo_encode_bits(&b).unwrap(), 1.5);
        let first = dec.decode(&lb, 8, true).unwrap();
        dec.decode(&la, 8, true).unwrap();
        assert_eq!(dec.decode(&lb, 8, true).unwrap(), first);
    }
}

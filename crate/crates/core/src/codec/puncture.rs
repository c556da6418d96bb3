//! Periodic puncturing of the parity streams.
//!
//! The punctured sequence is the systematic stream, the surviving bits of
//! parity 1, the surviving bits of parity 2, then all 12 tail bits. Systematic
//! and tail bits are never deleted.

use crate::scalar::LlrScalar;

use super::{CodecError, EncodedBlock, LlrBlock, TAIL_LEN};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePattern {
    /// Keep mask for parity 1, repeated with period `keep_parity1.len()`.
    pub keep_parity1: Vec<bool>,
    /// Keep mask for parity 2; same period as parity 1.
    pub keep_parity2: Vec<bool>,
}

impl PuncturePattern {
    pub fn identity() -> Self {
        Self {
            keep_parity1: vec![true],
            keep_parity2: vec![true],
        }
    }

    /// Drops every second bit of each parity stream, giving rate ≈ 1/2.
    pub fn half_rate() -> Self {
        Self {
            keep_parity1: vec![true, false],
            keep_parity2: vec![true, false],
        }
    }

    pub fn period(&self) -> usize {
        self.keep_parity1.len()
    }

    fn validate(&self, k: usize) -> Result<(), CodecError> {
        let p = self.period();
        if p == 0 {
            return Err(CodecError::InvalidPattern(
                "period must be at least 1".into(),
            ));
        }
        if self.keep_parity2.len() != p {
            return Err(CodecError::InvalidPattern(format!(
                "parity masks differ in period ({} vs {})",
                p,
                self.keep_parity2.len()
            )));
        }
        if k % p != 0 {
            return Err(CodecError::InvalidPattern(format!(
                "period {p} does not divide block size {k}"
            )));
        }
        Ok(())
    }

    fn kept(&self, k: usize) -> usize {
        let per = |m: &[bool]| m.iter().filter(|&&b| b).count() * (k / self.period());
        k + per(&self.keep_parity1) + per(&self.keep_parity2) + TAIL_LEN
    }
}

pub fn puncture(eb: &EncodedBlock, pattern: &PuncturePattern) -> Result<Vec<u8>, CodecError> {
    let k = eb.k();
    pattern.validate(k)?;
    let p = pattern.period();
    let mut out = Vec::with_capacity(pattern.kept(k));
    out.extend_from_slice(&eb.systematic);
    out.extend(
        eb.parity1
            .iter()
            .enumerate()
            .filter(|(i, _)| pattern.keep_parity1[i % p])
            .map(|(_, &b)| b),
    );
    out.extend(
        eb.parity2
            .iter()
            .enumerate()
            .filter(|(i, _)| pattern.keep_parity2[i % p])
            .map(|(_, &b)| b),
    );
    out.extend_from_slice(&eb.tail);
    Ok(out)
}

/// Spreads received soft values back into block layout; deleted positions
/// get LLR 0.
pub fn depuncture<T: LlrScalar>(
    received: &[T],
    k: usize,
    pattern: &PuncturePattern,
) -> Result<LlrBlock<T>, CodecError> {
    pattern.validate(k)?;
    let expected = pattern.kept(k);
    if received.len() != expected {
        return Err(CodecError::LengthMismatch {
            what: "punctured sequence",
            expected,
            got: received.len(),
        });
    }
    let p = pattern.period();
    let mut it = received.iter().copied();
    let systematic: Vec<T> = it.by_ref().take(k).collect();
    let mut spread = |mask: &[bool]| -> Vec<T> {
        (0..k)
            .map(|i| {
                if mask[i % p] {
                    it.next().unwrap_or_else(T::zero)
                } else {
                    T::zero()
                }
            })
            .collect()
    };
    let parity1 = spread(&pattern.keep_parity1);
    let parity2 = spread(&pattern.keep_parity2);
    let mut tail = [T::zero(); TAIL_LEN];
    for (t, v) in tail.iter_mut().zip(it) {
        *t = v;
    }
    Ok(LlrBlock {
        systematic,
        parity1,
        parity2,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{crc24_attach, turbo_decode, turbo_encode_bits};

    fn block(k: usize) -> EncodedBlock {
        let info: Vec<u8> = (0..k - 24).map(|i| ((i * 5 + i / 3) % 2) as u8).collect();
        turbo_encode_bits(&crc24_attach(&info).unwrap()).unwrap()
    }

    #[test]
    fn identity_is_serialization() {
        let eb = block(104);
        assert_eq!(
            puncture(&eb, &PuncturePattern::identity()).unwrap(),
            eb.serialize()
        );
    }

    #[test]
    fn half_rate_counts() {
        let eb = block(512);
        let out = puncture(&eb, &PuncturePattern::half_rate()).unwrap();
        assert_eq!(out.len(), 512 + 256 + 256 + 12);
        let rate = 512.0 / out.len() as f64;
        assert!((rate - 0.5).abs() < 0.01);
    }

    #[test]
    fn depuncture_zeros_exactly_the_deleted_positions() {
        let eb = block(512);
        let pat = PuncturePattern::half_rate();
        let soft: Vec<f32> = puncture(&eb, &pat)
            .unwrap()
            .iter()
            .map(|&b| if b == 0 { 1.0 } else { -1.0 })
            .collect();
        let llr = depuncture(&soft, 512, &pat).unwrap();
        for i in 0..512 {
            assert_eq!(llr.parity1[i] == 0.0, i % 2 == 1);
            assert_eq!(llr.parity2[i] == 0.0, i % 2 == 1);
            assert_ne!(llr.systematic[i], 0.0);
        }
        assert!(llr.tail.iter().all(|&v| v != 0.0));
        let r = turbo_decode(&llr, 8, true).unwrap();
        assert!(r.success);
        assert_eq!(r.bits, eb.systematic);
    }

    #[test]
    fn invalid_patterns() {
        let eb = block(40);
        let empty = PuncturePattern {
            keep_parity1: vec![],
            keep_parity2: vec![],
        };
        assert!(puncture(&eb, &empty).is_err());
        let uneven = PuncturePattern {
            keep_parity1: vec![true, false],
            keep_parity2: vec![true],
        };
        assert!(puncture(&eb, &uneven).is_err());
        let period3 = PuncturePattern {
            keep_parity1: vec![true; 3],
            keep_parity2: vec![true; 3],
        };
        assert!(puncture(&eb, &period3).is_err());
        assert!(depuncture(&[0.0f32; 10], 40, &PuncturePattern::identity()).is_err());
    }
}

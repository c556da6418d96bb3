//! 24-bit CRC over unpacked bits (one bit per `u8`).
//!
//! Generator `D^24 + D^23 + D^18 + D^17 + D^14 + D^11 + D^10 + D^7 + D^6 +
//! D^5 + D^4 + D^3 + D + 1`. The register is preset to all ones so that an
//! all-zero word never verifies; a decoder that has received no evidence
//! cannot report success.

use super::CodecError;

pub const CRC_LEN: usize = 24;

const POLY: u32 = 0x86_4CFB;
const MASK: u32 = 0xFF_FFFF;
const PRESET: u32 = MASK;

fn remainder(bits: &[u8]) -> u32 {
    bits.iter().fold(PRESET, |reg, &b| {
        let feedback = ((reg >> 23) & 1) ^ u32::from(b & 1);
        let shifted = (reg << 1) & MASK;
        if feedback == 1 {
            shifted ^ POLY
        } else {
            shifted
        }
    })
}

/// Returns `bits` followed by their 24 parity bits, MSB first.
pub fn crc24_attach(bits: &[u8]) -> Result<Vec<u8>, CodecError> {
    if bits.is_empty() {
        return Err(CodecError::EmptyInput("CRC input"));
    }
    let mut out = Vec::with_capacity(bits.len() + CRC_LEN);
    out.extend_from_slice(bits);
    append_parity(&mut out);
    Ok(out)
}

pub(crate) fn append_parity(bits: &mut Vec<u8>) {
    let r = remainder(bits);
    bits.extend((0..CRC_LEN).rev().map(|i| ((r >> i) & 1) as u8));
}

/// True when the last 24 bits are the parity of the preceding ones.
pub fn crc24_check(bits: &[u8]) -> bool {
    if bits.len() <= CRC_LEN {
        return false;
    }
    let (data, parity) = bits.split_at(bits.len() - CRC_LEN);
    let r = remainder(data);
    parity
        .iter()
        .enumerate()
        .all(|(j, &p)| u32::from(p & 1) == (r >> (CRC_LEN - 1 - j)) & 1)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(crc24_attach(&[]), Err(CodecError::EmptyInput("CRC input")));
        assert!(!crc24_check(&[]));
    }

    #[test]
    fn every_single_flip_is_detected() {
        let x: Vec<u8> = (0..64u32).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
        let word = crc24_attach(&x).unwrap();
        assert!(crc24_check(&word));
        for pos in 0..word.len() {
            let mut w = word.clone();
            w[pos] ^= 1;
            assert!(!crc24_check(&w), "flip at {pos} undetected");
        }
    }

    #[test]
    fn all_zero_word_does_not_verify() {
        assert!(!crc24_check(&[0u8; 64]));
    }

    proptest! {
        #[test]
        fn attach_then_check(x in prop::collection::vec(0u8..2, 1..600)) {
            let w = crc24_attach(&x).unwrap();
            prop_assert_eq!(w.len(), x.len() + CRC_LEN);
            prop_assert_eq!(&w[..x.len()], &x[..]);
            prop_assert!(crc24_check(&w));
        }
    }
}

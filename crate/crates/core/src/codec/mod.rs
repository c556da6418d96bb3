//! Rate-1/3 turbo code: two 13/15 RSC encoders around a QPP interleaver,
//! an iterative max-log-MAP decoder, and transport-block segmentation.
//!
//! Bits are unpacked, one per `u8`. Soft values follow one convention
//! throughout: a positive LLR means bit 0 is more likely.

mod crc;
mod decoder;
mod puncture;
mod qpp;
mod rsc;
mod segment;

use thiserror::Error;

pub use crc::{crc24_attach, crc24_check, CRC_LEN};
pub use decoder::{turbo_decode, DecodeResult, TurboDecoder, DEFAULT_MAX_ITERATIONS};
pub use puncture::{depuncture, puncture, PuncturePattern};
pub use qpp::{
    is_supported_size, next_supported_size, permutation, qpp_deinterleave, qpp_index,
    qpp_interleave, qpp_params, supported_sizes, MAX_BLOCK_SIZE, MIN_BLOCK_SIZE,
};
pub use rsc::{rsc_encode, RscOutput, NUM_STATES};
pub use segment::{
    reassemble_tb, segment_tb, segment_tb_with_limit, Reassembly, TbLayout, CB_MAX_INFO_BITS,
    DEFAULT_MAX_CODE_BLOCKS,
};

/// Tail bits per encoded block: 3 (x, z) pairs per constituent encoder.
pub const TAIL_LEN: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("empty {0}")]
    EmptyInput(&'static str),
    #[error("block size {0} is not a supported interleaver size")]
    UnsupportedBlockSize(usize),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("transport block of {bits} bits needs {needed} code blocks, limit is {limit}")]
    TooManyCodeBlocks {
        bits: usize,
        needed: usize,
        limit: usize,
    },
    #[error("invalid puncturing pattern: {0}")]
    InvalidPattern(String),
    #[error("LLR values must be finite")]
    NonFiniteLlr,
    #[error("max_iterations must be at least 1")]
    ZeroIterations,
    #[error("missing result for code block {index} of {total}")]
    MissingCodeBlock { index: usize, total: usize },
    #[error("unexpected result for code block {index} (expected {total} blocks, one each)")]
    UnexpectedCodeBlock { index: usize, total: usize },
}

/// Identifies one UE's transport block within one subframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TbKey {
    pub subframe: u64,
    pub ue: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportBlock {
    pub ue_id: u32,
    pub subframe_id: u64,
    pub payload: Vec<u8>,
}

impl TransportBlock {
    pub fn key(&self) -> TbKey {
        TbKey {
            subframe: self.subframe_id,
            ue: self.ue_id,
        }
    }
}

/// One segment of a transport block, ready for the encoder.
///
/// `bits` is `filler` leading zeros, the information bits, then a CRC-24.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBlock {
    pub tb: TbKey,
    pub index: usize,
    pub total: usize,
    pub filler: usize,
    pub bits: Vec<u8>,
}

impl CodeBlock {
    pub fn k(&self) -> usize {
        self.bits.len()
    }

    /// Information bits without filler or CRC.
    pub fn info_bits(&self) -> &[u8] {
        &self.bits[self.filler..self.bits.len() - CRC_LEN]
    }
}

/// Hard-bit encoder output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBlock {
    pub systematic: Vec<u8>,
    pub parity1: Vec<u8>,
    pub parity2: Vec<u8>,
    /// `x1 z1 x1 z1 x1 z1` of the first encoder, then the same for the second.
    pub tail: [u8; TAIL_LEN],
}

impl EncodedBlock {
    pub fn k(&self) -> usize {
        self.systematic.len()
    }

    pub fn len(&self) -> usize {
        3 * self.k() + TAIL_LEN
    }

    pub fn is_empty(&self) -> bool {
        self.systematic.is_empty()
    }

    /// Systematic, parity 1, parity 2, then tail.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.systematic);
        out.extend_from_slice(&self.parity1);
        out.extend_from_slice(&self.parity2);
        out.extend_from_slice(&self.tail);
        out
    }
}

/// Soft decoder input laid out like [`EncodedBlock`].
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBlock<T> {
    pub systematic: Vec<T>,
    pub parity1: Vec<T>,
    pub parity2: Vec<T>,
    pub tail: [T; TAIL_LEN],
}

impl<T: crate::scalar::LlrScalar> LlrBlock<T> {
    pub fn k(&self) -> usize {
        self.systematic.len()
    }

    /// Noiseless mapping: bit 0 → `+amplitude`, bit 1 → `-amplitude`.
    pub fn from_hard(eb: &EncodedBlock, amplitude: T) -> Self {
        let map = |b: &u8| if *b == 0 { amplitude } else { -amplitude };
        let mut tail = [T::zero(); TAIL_LEN];
        for (t, b) in tail.iter_mut().zip(&eb.tail) {
            *t = map(b);
        }
        Self {
            systematic: eb.systematic.iter().map(map).collect(),
            parity1: eb.parity1.iter().map(map).collect(),
            parity2: eb.parity2.iter().map(map).collect(),
            tail,
        }
    }

    /// All-zero soft values: no channel evidence.
    pub fn erased(k: usize) -> Self {
        Self {
            systematic: vec![T::zero(); k],
            parity1: vec![T::zero(); k],
            parity2: vec![T::zero(); k],
            tail: [T::zero(); TAIL_LEN],
        }
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        let k = self.k();
        if !is_supported_size(k) {
            return Err(CodecError::UnsupportedBlockSize(k));
        }
        for (what, got) in [
            ("parity1 LLRs", self.parity1.len()),
            ("parity2 LLRs", self.parity2.len()),
        ] {
            if got != k {
                return Err(CodecError::LengthMismatch {
                    what,
                    expected: k,
                    got,
                });
            }
        }
        Ok(())
    }
}

/// Encodes a code block into systematic, two parity streams and 12 tail bits.
pub fn turbo_encode(cb: &CodeBlock) -> Result<EncodedBlock, CodecError> {
    turbo_encode_bits(&cb.bits)
}

/// [`turbo_encode`] on raw bits; `bits.len()` must be a supported size.
pub fn turbo_encode_bits(bits: &[u8]) -> Result<EncodedBlock, CodecError> {
    let k = bits.len();
    let interleaved = qpp_interleave(k, bits)?;
    let first = rsc_encode(bits);
    let second = rsc_encode(&interleaved);
    let mut tail = [0u8; TAIL_LEN];
    tail[..6].copy_from_slice(&first.tail);
    tail[6..].copy_from_slice(&second.tail);
    Ok(EncodedBlock {
        systematic: bits.to_vec(),
        parity1: first.parity,
        parity2: second.parity,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_block_encodes_to_zero() {
        let cb = CodeBlock {
            tb: TbKey { subframe: 0, ue: 0 },
            index: 0,
            total: 1,
            filler: 0,
            bits: vec![0; 40],
        };
        let eb = turbo_encode(&cb).unwrap();
        assert_eq!(eb.len(), 132);
        assert!(eb.serialize().iter().all(|&b| b == 0));
    }

    #[test]
    fn output_length_law_all_sizes() {
        for k in supported_sizes() {
            let bits: Vec<u8> = (0..k).map(|i| ((i * 31 + 7) % 5 % 2) as u8).collect();
            let eb = turbo_encode_bits(&bits).unwrap();
            assert_eq!(eb.serialize().len(), 3 * k + TAIL_LEN);
            assert_eq!(eb.parity1.len(), k);
            assert_eq!(eb.parity2.len(), k);
        }
    }

    #[test]
    fn unsupported_size_propagates() {
        assert_eq!(
            turbo_encode_bits(&[0; 41]),
            Err(CodecError::UnsupportedBlockSize(41))
        );
    }

    #[test]
    fn llr_block_validation() {
        let mut l = LlrBlock::<f32>::erased(40);
        assert!(l.validate().is_ok());
        l.parity2.pop();
        assert_eq!(
            l.validate(),
            Err(CodecError::LengthMismatch {
                what: "parity2 LLRs",
                expected: 40,
                got: 39
            })
        );
        assert!(LlrBlock::<f32>::erased(44).validate().is_err());
    }
}

//! Transport-block segmentation into code blocks and the inverse.
//!
//! A payload of `B` bits is cut into `C = ceil(B / 6120)` code blocks. All
//! blocks share one interleaver size `K`, the smallest supported size that
//! holds `ceil(B / C)` information bits plus the 24-bit CRC. The
//! `C·(K − 24) − B` filler zeros are prepended to the first block.

use super::crc::{append_parity, CRC_LEN};
use super::qpp::next_supported_size;
use super::{CodeBlock, CodecError, DecodeResult, TbKey, TransportBlock};

/// Largest information payload of one code block.
pub const CB_MAX_INFO_BITS: usize = 6120;
pub const DEFAULT_MAX_CODE_BLOCKS: usize = 32;

/// What reassembly needs to know about how a TB was cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TbLayout {
    pub key: TbKey,
    pub payload_len: usize,
    pub count: usize,
    /// Interleaver size shared by every block.
    pub block_size: usize,
    /// Leading zeros in block 0.
    pub filler: usize,
}

impl TbLayout {
    pub fn plan(key: TbKey, payload_len: usize, max_blocks: usize) -> Result<Self, CodecError> {
        if payload_len == 0 {
            return Err(CodecError::EmptyInput("transport block payload"));
        }
        let count = payload_len.div_ceil(CB_MAX_INFO_BITS);
        if count > max_blocks {
            return Err(CodecError::TooManyCodeBlocks {
                bits: payload_len,
                needed: count,
                limit: max_blocks,
            });
        }
        let per_block = payload_len.div_ceil(count);
        let block_size = next_supported_size(per_block + CRC_LEN)
            .ok_or(CodecError::UnsupportedBlockSize(per_block + CRC_LEN))?;
        let filler = count * (block_size - CRC_LEN) - payload_len;
        Ok(Self {
            key,
            payload_len,
            count,
            block_size,
            filler,
        })
    }

    pub fn filler_of(&self, index: usize) -> usize {
        if index == 0 {
            self.filler
        } else {
            0
        }
    }

    /// Information bits carried by block `index`.
    pub fn info_len(&self, index: usize) -> usize {
        self.block_size - CRC_LEN - self.filler_of(index)
    }
}

/// [`segment_tb_with_limit`] with [`DEFAULT_MAX_CODE_BLOCKS`].
pub fn segment_tb(tb: &TransportBlock) -> Result<Vec<CodeBlock>, CodecError> {
    segment_tb_with_limit(tb, DEFAULT_MAX_CODE_BLOCKS)
}

pub fn segment_tb_with_limit(
    tb: &TransportBlock,
    max_blocks: usize,
) -> Result<Vec<CodeBlock>, CodecError> {
    let layout = TbLayout::plan(tb.key(), tb.payload.len(), max_blocks)?;
    let mut offset = 0;
    let blocks = (0..layout.count)
        .map(|index| {
            let filler = layout.filler_of(index);
            let n = layout.info_len(index);
            let mut bits = Vec::with_capacity(layout.block_size);
            bits.resize(filler, 0);
            bits.extend_from_slice(&tb.payload[offset..offset + n]);
            offset += n;
            append_parity(&mut bits);
            CodeBlock {
                tb: layout.key,
                index,
                total: layout.count,
                filler,
                bits,
            }
        })
        .collect();
    debug_assert_eq!(offset, tb.payload.len());
    Ok(blocks)
}

/// Result of putting decoded code blocks back together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reassembly {
    Delivered(TransportBlock),
    /// At least one block failed its CRC; no payload is released.
    Lost {
        failed: Vec<usize>,
    },
}

/// Rebuilds a TB from one decode result per code block, given in any order
/// as `(index, result)`.
pub fn reassemble_tb(
    layout: &TbLayout,
    results: &[(usize, DecodeResult)],
) -> Result<Reassembly, CodecError> {
    if results.is_empty() {
        return Err(CodecError::MissingCodeBlock {
            index: 0,
            total: layout.count,
        });
    }
    let mut slots: Vec<Option<&DecodeResult>> = vec![None; layout.count];
    for (index, r) in results {
        match slots.get_mut(*index) {
            Some(slot @ None) => *slot = Some(r),
            _ => {
                return Err(CodecError::UnexpectedCodeBlock {
                    index: *index,
                    total: layout.count,
                })
            }
        }
    }
    if let Some(index) = slots.iter().position(Option::is_none) {
        return Err(CodecError::MissingCodeBlock {
            index,
            total: layout.count,
        });
    }
    let slots: Vec<&DecodeResult> = slots.into_iter().flatten().collect();
    if let Some(r) = slots.iter().find(|r| r.bits.len() != layout.block_size) {
        return Err(CodecError::LengthMismatch {
            what: "decoded code block",
            expected: layout.block_size,
            got: r.bits.len(),
        });
    }

    let failed: Vec<usize> = slots
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.success)
        .map(|(i, _)| i)
        .collect();
    if !failed.is_empty() {
        return Ok(Reassembly::Lost { failed });
    }
    let mut payload = Vec::with_capacity(layout.payload_len);
    for (index, r) in slots.iter().enumerate() {
        let start = layout.filler_of(index);
        payload.extend_from_slice(&r.bits[start..layout.block_size - CRC_LEN]);
    }
    Ok(Reassembly::Delivered(TransportBlock {
        ue_id: layout.key.ue,
        subframe_id: layout.key.subframe,
        payload,
    }))
}

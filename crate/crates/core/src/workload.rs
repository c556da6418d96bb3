//! Synthetic traffic and channel: per-subframe transport blocks for a set of
//! UEs, and a BPSK/AWGN channel producing decoder LLRs.
//!
//! Every random draw is keyed by `(seed, subframe, ue, block)` rather than by
//! call order, so results do not depend on which thread asks or when.

use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::codec::{EncodedBlock, LlrBlock, TransportBlock, TAIL_LEN};
use crate::scalar::LlrScalar;

/// Transport block size distribution, in bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TbsDistribution {
    Fixed(usize),
    /// Uniform over a set of sizes.
    Uniform(Vec<usize>),
}

impl TbsDistribution {
    fn sample(&self, rng: &mut impl Rng) -> usize {
        match self {
            TbsDistribution::Fixed(n) => *n,
            TbsDistribution::Uniform(set) => set[rng.random_range(0..set.len())],
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            TbsDistribution::Fixed(n) => *n as f64,
            TbsDistribution::Uniform(set) => set.iter().sum::<usize>() as f64 / set.len() as f64,
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            TbsDistribution::Fixed(n) => *n > 0,
            TbsDistribution::Uniform(set) => !set.is_empty() && set.iter().all(|&n| n > 0),
        }
    }
}

impl FromStr for TbsDistribution {
    type Err = String;

    /// `8000` for a fixed size, `4000,12000` for a uniform choice.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sizes = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("bad TB size {p:?}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let dist = match sizes.as_slice() {
            [one] => TbsDistribution::Fixed(*one),
            _ => TbsDistribution::Uniform(sizes),
        };
        if !dist.is_valid() {
            return Err("TB sizes must be positive".into());
        }
        Ok(dist)
    }
}

/// How the producer releases subframes into the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TickMode {
    /// Everything enqueued up front.
    #[default]
    Batch,
    /// Next subframe released when the previous one completes.
    Lockstep,
    /// One subframe per period, best effort.
    Periodic(Duration),
}

impl FromStr for TickMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "batch" => Ok(TickMode::Batch),
            "lockstep" => Ok(TickMode::Lockstep),
            _ => {
                let us = if let Some(ms) = t.strip_suffix("ms") {
                    ms.trim().parse::<f64>().map(|v| v * 1e3)
                } else if let Some(us) = t.strip_suffix("us") {
                    us.trim().parse::<f64>()
                } else {
                    return Err(format!(
                        "unknown tick {s:?} (expected batch|lockstep|<n>ms|<n>us)"
                    ));
                }
                .map_err(|e| format!("bad tick {s:?}: {e}"))?;
                if us <= 0.0 {
                    return Err("tick period must be positive".into());
                }
                Ok(TickMode::Periodic(Duration::from_nanos((us * 1e3) as u64)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficProfile {
    pub n_ues: u32,
    pub tbs: TbsDistribution,
    pub n_subframes: u64,
    pub tick: TickMode,
    pub seed: u64,
}

impl Default for TrafficProfile {
    /// Three UEs sharing a 100-RB carrier, each with a TB that splits into
    /// five code blocks.
    fn default() -> Self {
        Self {
            n_ues: 3,
            tbs: TbsDistribution::Fixed(24_496),
            n_subframes: 200,
            tick: TickMode::Lockstep,
            seed: 1,
        }
    }
}

impl TrafficProfile {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_ues == 0 {
            return Err("n_ues must be at least 1".into());
        }
        if !self.tbs.is_valid() {
            return Err("TB sizes must be positive".into());
        }
        Ok(())
    }
}

/// SplitMix64 finalizer over a sequence of words.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Transport blocks of one subframe, one per UE in UE order.
pub fn generate_subframe(profile: &TrafficProfile, subframe_id: u64) -> Vec<TransportBlock> {
    (0..profile.n_ues)
        .map(|ue| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                profile.seed,
                &[0x7b5, subframe_id, u64::from(ue)],
            ));
            let len = profile.tbs.sample(&mut rng);
            TransportBlock {
                ue_id: ue,
                subframe_id,
                payload: (0..len).map(|_| rng.random_range(0..2u8)).collect(),
            }
        })
        .collect()
}

/// BPSK over AWGN with unit symbol energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub snr_db: f64,
}

impl ChannelModel {
    pub fn new(snr_db: f64) -> Self {
        Self { snr_db }
    }

    /// `σ² = 10^(−snr/10)`.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        let v = self.noise_variance();
        if !(v.is_finite() && v > 0.0) {
            return Err(format!(
                "SNR {} dB gives no usable noise variance",
                self.snr_db
            ));
        }
        Ok(())
    }
}

/// Maps bits to ±1 (0 → +1), adds noise, and returns `LLR = 2y/σ²`.
pub fn channel_pass<T: LlrScalar>(eb: &EncodedBlock, ch: &ChannelModel, seed: u64) -> LlrBlock<T> {
    let var = ch.noise_variance();
    let sigma = var.sqrt();
    let scale = 2.0 / var;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut soft = |b: &u8| {
        let x = if *b == 0 { 1.0 } else { -1.0 };
        let n: f64 = rng.sample(StandardNormal);
        T::from_f64(scale * (x + sigma * n)).unwrap_or_else(T::zero)
    };
    let systematic = eb.systematic.iter().map(&mut soft).collect();
    let parity1 = eb.parity1.iter().map(&mut soft).collect();
    let parity2 = eb.parity2.iter().map(&mut soft).collect();
    let mut tail = [T::zero(); TAIL_LEN];
    for (t, b) in tail.iter_mut().zip(&eb.tail) {
        *t = soft(b);
    }
    LlrBlock {
        systematic,
        parity1,
        parity2,
        tail,
    }
}

//! Encoder checked against a plain shift-register model of the LTE turbo code.

use cranpool_core::codec::{qpp_params, turbo_encode_bits, EncodedBlock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator taps as octal polynomials over `1, D, D², D³`.
const FEEDBACK: [u8; 4] = [1, 0, 1, 1]; // 13
const FEEDFORWARD: [u8; 4] = [1, 1, 0, 1]; // 15

struct Register([u8; 3]);

impl Register {
    /// Feedback value `w` for input `u`: `w = u + Σ g0[i]·d[i]`.
    fn feedback(&self, u: u8) -> u8 {
        let mut w = u;
        for i in 1..4 {
            w ^= FEEDBACK[i] & self.0[i - 1];
        }
        w
    }

    fn clock(&mut self, w: u8) -> u8 {
        let mut z = FEEDFORWARD[0] & w;
        for i in 1..4 {
            z ^= FEEDFORWARD[i] & self.0[i - 1];
        }
        self.0 = [w, self.0[0], self.0[1]];
        z
    }
}

fn constituent(bits: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let mut reg = Register([0; 3]);
    let parity = bits.iter().map(|&u| {
        let w = reg.feedback(u);
        reg.clock(w)
    });
    let parity: Vec<u8> = parity.collect();
    // Termination: the input equals the feedback sum, so the register fills with zeros.
    let mut tail = Vec::new();
    for _ in 0..3 {
        let x = reg.feedback(0);
        let z = reg.clock(0);
        tail.push(x);
        tail.push(z);
    }
    assert_eq!(reg.0, [0; 3]);
    (parity, tail)
}

fn interleave(bits: &[u8]) -> Vec<u8> {
    let k = bits.len() as u128;
    let (f1, f2) = qpp_params(bits.len()).unwrap();
    let (f1, f2) = (f1 as u128, f2 as u128);
    (0..k)
        .map(|i| bits[((f1 * i + f2 * i * i) % k) as usize])
        .collect()
}

fn oracle(bits: &[u8]) -> EncodedBlock {
    let (parity1, tail1) = constituent(bits);
    let (parity2, tail2) = constituent(&interleave(bits));
    let mut tail = [0u8; 12];
    tail[..6].copy_from_slice(&tail1);
    tail[6..].copy_from_slice(&tail2);
    EncodedBlock {
        systematic: bits.to_vec(),
        parity1,
        parity2,
        tail,
    }
}

#[test]
fn encoder_matches_shift_register_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e11);
    for k in [40usize, 512] {
        for _ in 0..100 {
            let bits: Vec<u8> = (0..k).map(|_| rng.random_range(0..2)).collect();
            assert_eq!(turbo_encode_bits(&bits).unwrap(), oracle(&bits), "k={k}");
        }
    }
}

#[test]
fn encoder_matches_model_on_structured_inputs() {
    for k in [40usize, 48, 1024, 6144] {
        let patterns: [Box<dyn Fn(usize) -> u8>; 4] = [
            Box::new(|_| 1),
            Box::new(|i| (i == 0) as u8),
            Box::new(move |i| (i == k - 1) as u8),
            Box::new(|i| (i % 3 == 1) as u8),
        ];
        for p in &patterns {
            let bits: Vec<u8> = (0..k).map(p).collect();
            assert_eq!(turbo_encode_bits(&bits).unwrap(), oracle(&bits), "k={k}");
        }
    }
}

#[test]
fn known_interleaver_parameters() {
    assert_eq!(qpp_params(40).unwrap(), (3, 10));
    assert_eq!(qpp_params(512).unwrap(), (31, 64));
    assert_eq!(qpp_params(1024).unwrap(), (31, 64));
    assert_eq!(qpp_params(6144).unwrap(), (263, 480));
}

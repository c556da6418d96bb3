//! 8-state recursive systematic convolutional code, feedback `1 + D² + D³`,
//! feedforward `1 + D + D³` (13/15 octal).
//!
//! State layout: `s = s1·4 + s2·2 + s3`, with `s1` the most recent register.

pub const NUM_STATES: usize = 8;
pub const MEMORY: usize = 3;

/// Trellis branch leaving `state` on `input`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Branch {
    pub next: u8,
    pub parity: u8,
}

const fn regs(state: u8) -> (u8, u8, u8) {
    ((state >> 2) & 1, (state >> 1) & 1, state & 1)
}

const fn step(state: u8, input: u8) -> Branch {
    let (s1, s2, s3) = regs(state);
    let fb = input ^ s2 ^ s3;
    let parity = fb ^ s1 ^ s3;
    Branch {
        next: (fb << 2) | (s1 << 1) | s2,
        parity,
    }
}

const fn build_trellis() -> [[Branch; 2]; NUM_STATES] {
    let mut t = [[Branch { next: 0, parity: 0 }; 2]; NUM_STATES];
    let mut s = 0;
    while s < NUM_STATES {
        t[s][0] = step(s as u8, 0);
        t[s][1] = step(s as u8, 1);
        s += 1;
    }
    t
}

pub(crate) const TRELLIS: [[Branch; 2]; NUM_STATES] = build_trellis();

/// Input bit that zeroes the feedback from `state`, driving it towards zero.
pub(crate) const fn termination_input(state: u8) -> u8 {
    let (_, s2, s3) = regs(state);
    s2 ^ s3
}

/// Output of one constituent encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RscOutput {
    pub parity: Vec<u8>,
    /// Register contents after the last information bit, before termination.
    pub final_state: u8,
    /// Termination pairs `x0, z0, x1, z1, x2, z2`.
    pub tail: [u8; 2 * MEMORY],
}

/// Encodes from the all-zero state and terminates the trellis.
pub fn rsc_encode(bits: &[u8]) -> RscOutput {
    let mut state = 0u8;
    let parity = bits
        .iter()
        .map(|&b| {
            let br = TRELLIS[state as usize][(b & 1) as usize];
            state = br.next;
            br.parity
        })
        .collect();
    let final_state = state;
    let mut tail = [0u8; 2 * MEMORY];
    for pair in tail.chunks_exact_mut(2) {
        let x = termination_input(state);
        let br = TRELLIS[state as usize][x as usize];
        pair[0] = x;
        pair[1] = br.parity;
        state = br.next;
    }
    debug_assert_eq!(state, 0);
    RscOutput {
        parity,
        final_state,
        tail,
    }
}

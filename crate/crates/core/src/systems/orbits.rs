//! Full-precision orbit sampling.
//!
//! Iterating `x -> 2x mod 1` in floating point is a left shift of the
//! mantissa: after ~53 steps every double collapses to 0 and the orbit is
//! garbage. For initial conditions drawn from Lebesgue measure the honest
//! simulation is the Bernoulli shift itself: an orbit is a sliding window
//! over an infinite random bit tape, and the tape supplies fresh digits of
//! the initial condition exactly when the expansion exposes them.
//!
//! [`LinearShiftStream`] implements this in 128-bit fixed point for any
//! family of linear maps `x -> q x mod 1`: multiplying by the odd part of
//! `q` is exact modulo `2^128`, and each factor of two shifts in one lazily
//! drawn tape bit. For `q = 2` this is an exact simulation of the doubling
//! map started from a Lebesgue-random point; for mixed degrees the top bits
//! remain a faithful statistical model while low bits keep being refreshed.
//!
//! Nonlinear maps (`epsilon > 0`, mean-field perturbations) do not shift
//! bits verbatim -- their rounding refreshes the mantissa -- so plain `f64`
//! stepping is used there.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed-deterministic random bit tape with O(1) random access,
/// backed by the ChaCha8 counter mode.
#[derive(Debug, Clone)]
pub struct BitTape {
    rng: ChaCha8Rng,
}

impl BitTape {
    pub fn new(seed: u64) -> Self {
        BitTape {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The `i`-th 64-bit word of the tape.
    pub fn word(&mut self, i: u64) -> u64 {
        // ChaCha words are 32-bit; a u64 consumes two.
        self.rng.set_word_pos((i as u128) * 2);
        self.rng.next_u64()
    }

    /// 128 tape bits starting at `bit_pos` (bit 0 is the most significant
    /// bit of word 0).
    pub fn window_u128(&mut self, bit_pos: u64) -> u128 {
        let k = bit_pos / 64;
        let r = (bit_pos % 64) as u32;
        let a = self.word(k);
        let b = self.word(k + 1);
        if r == 0 {
            ((a as u128) << 64) | b as u128
        } else {
            let c = self.word(k + 2);
            let hi = (a << r) | (b >> (64 - r));
            let lo = (b << r) | (c >> (64 - r));
            ((hi as u128) << 64) | lo as u128
        }
    }
}

/// Top 53 bits of a 128-bit fraction as a double in `[0, 1)`.
pub(crate) fn frac_to_f64(state: u128) -> f64 {
    ((state >> 75) as u64) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Orbit of a sequential family of linear circle maps `x -> q_i x mod 1`,
/// computed in 128-bit fixed point over a lazy bit tape.
#[derive(Debug, Clone)]
pub struct LinearShiftStream {
    state: u128,
    tape: BitTape,
    /// next unconsumed tape bit
    bit_pos: u64,
    /// cached tape word holding `bit_pos`
    word: u64,
    word_idx: u64,
}

impl LinearShiftStream {
    /// Start from a Lebesgue-random point: the first 128 tape bits.
    pub fn new(seed: u64) -> Self {
        let mut tape = BitTape::new(seed);
        let state = tape.window_u128(0);
        let word_idx = 2;
        let word = tape.word(word_idx);
        LinearShiftStream {
            state,
            tape,
            bit_pos: 128,
            word,
            word_idx,
        }
    }

    /// Current position as a double.
    pub fn x(&self) -> f64 {
        frac_to_f64(self.state)
    }

    fn next_bit(&mut self) -> u128 {
        let idx = self.bit_pos / 64;
        if idx != self.word_idx {
            self.word = self.tape.word(idx);
            self.word_idx = idx;
        }
        let r = (self.bit_pos % 64) as u32;
        self.bit_pos += 1;
        ((self.word >> (63 - r)) & 1) as u128
    }

    /// Apply `x -> q x mod 1` exactly in fixed point. The odd part of `q`
    /// multiplies modulo `2^128`; each factor of two shifts in a tape bit.
    pub fn step(&mut self, q: u64) {
        debug_assert!(q >= 1);
        let tz = q.trailing_zeros();
        let odd = q >> tz;
        if odd > 1 {
            self.state = self.state.wrapping_mul(odd as u128);
        }
        for _ in 0..tz {
            self.state = (self.state << 1) | self.next_bit();
        }
    }

    /// Skip `k` doubling steps in O(1): the state is a sliding window, so
    /// it can be reloaded directly. Valid only when every skipped step has
    /// `q = 2`.
    pub fn skip_doubling(&mut self, k: u64) {
        self.bit_pos += k;
        self.state = self.tape.window_u128(self.bit_pos - 128);
        self.word_idx = self.bit_pos / 64;
        self.word = self.tape.word(self.word_idx);
    }

    /// Seed a stream whose first 53 bits reproduce `x` and whose deeper
    /// bits are fresh tape bits; used to continue an `f64` orbit once the
    /// dynamics has become an exact binary shift.
    pub fn continuing_from(x: f64, seed: u64) -> Self {
        let mut s = LinearShiftStream::new(seed);
        let top = ((x.clamp(0.0, 1.0 - f64::EPSILON) * (1u64 << 53) as f64) as u64) as u128;
        s.state = (top << 75) | (s.state & ((1u128 << 75) - 1));
        s
    }
}

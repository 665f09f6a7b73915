//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, stream_id, draw_index)` computed
//! with Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as
//! 1, 2, 3"). The seed is the 64-bit key; the counter holds the draw index in
//! its low words and the stream id in its high words. Replicas therefore never
//! share state, can be evaluated in any order, and a bond mark can be looked
//! up lazily without materialising the rest of the configuration.

use rand::{Error as RandError, RngCore};
use serde::{Deserialize, Serialize};

const MUL0: u32 = 0xD251_1F53;
const MUL1: u32 = 0xCD9E_8D57;
const WEYL0: u32 = 0x9E37_79B9;
const WEYL1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let prod = u64::from(a) * u64::from(b);
    ((prod >> 32) as u32, prod as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(WEYL0);
            k[1] = k[1].wrapping_add(WEYL1);
        }
        let (hi0, lo0) = mulhilo(MUL0, c[0]);
        let (hi1, lo1) = mulhilo(MUL1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// 64 random bits for draw `index`.
    #[inline]
    pub fn word(&self, index: u64) -> u64 {
        let out = philox4x32_10(
            [
                index as u32,
                (index >> 32) as u32,
                self.stream_id as u32,
                (self.stream_id >> 32) as u32,
            ],
            [self.seed as u32, (self.seed >> 32) as u32],
        );
        u64::from(out[0]) | (u64::from(out[1]) << 32)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&self, index: u64) -> f64 {
        (self.word(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli(p) outcome of draw `index`; exact for `p = 0` and `p = 1`.
    #[inline]
    pub fn bernoulli(&self, index: u64, p: f64) -> bool {
        self.uniform(index) < p
    }

    /// Sequential view for consumers that want an `RngCore`.
    pub fn cursor(&self) -> StreamCursor {
        StreamCursor {
            stream: *self,
            next: 0,
        }
    }
}

/// Walks the draw indices `0, 1, 2, ...` of one stream.
#[derive(Debug, Clone)]
pub struct StreamCursor {
    stream: RngStream,
    next: u64,
}

impl RngCore for StreamCursor {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        let w = self.stream.word(self.next);
        self.next += 1;
        w
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors from the Random123 distribution (kat_vectors).
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32_10([0, 0, 0, 0], [0, 0]),
            [0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8]
        );
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd]
        );
        assert_eq!(
            philox4x32_10(
                [0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344],
                [0xa4093822, 0x299f31d0]
            ),
            [0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1]
        );
    }

    #[test]
    fn same_coordinates_same_draw() {
        let a = RngStream::new(7, 3);
        let b = RngStream::new(7, 3);
        for i in 0..100 {
            assert_eq!(a.word(i), b.word(i));
        }
    }

    #[test]
    fn streams_differ() {
        let a = RngStream::new(7, 3);
        let b = RngStream::new(7, 4);
        let same = (0..1000).filter(|&i| a.word(i) == b.word(i)).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn bernoulli_edges() {
        let s = RngStream::new(1, 2);
        assert!((0..10_000).all(|i| !s.bernoulli(i, 0.0)));
        assert!((0..10_000).all(|i| s.bernoulli(i, 1.0)));
    }

    #[test]
    fn uniform_moments() {
        let s = RngStream::new(11, 0);
        let n = 200_000u64;
        let mean = (0..n).map(|i| s.uniform(i)).sum::<f64>() / n as f64;
        // sd of the mean is 1/sqrt(12 n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 5.0 * (1.0 / (12.0 * n as f64)).sqrt());
    }

    #[test]
    fn cursor_matches_indexed_words() {
        let s = RngStream::new(5, 9);
        let mut c = s.cursor();
        for i in 0..10 {
            assert_eq!(c.next_u64(), s.word(i));
        }
    }
}

//! Counter-based, splittable random streams.
//!
//! A stream is addressed by `(master_seed, stream_index)`. The master seed
//! keys a ChaCha8 block cipher and the index selects its 64-bit stream
//! nonce, so every index yields an independent sequence that does not
//! depend on how many other streams were drawn before it or on which thread
//! draws it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Address of one reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    /// Stream for a two-level index such as (grid point, trajectory).
    pub const fn nested(master_seed: u64, outer: u32, inner: u32) -> Self {
        RngStream::new(master_seed, ((outer as u64) << 32) | inner as u64)
    }

    pub fn generator(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.master_seed);
        inner.set_stream(self.stream_index);
        StreamRng { inner }
    }
}

/// Generator positioned at the start of an [`RngStream`].
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Uniform draw on [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }
}

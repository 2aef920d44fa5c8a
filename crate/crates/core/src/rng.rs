//! Counter-based random streams.
//!
//! Every random draw in the toolkit comes from [`CounterRng`], a SplitMix64
//! generator run in counter mode. The `n`-th output (0-based) of a stream
//! with key `k` is
//!
//! ```text
//! mix64(k + (n + 1) * 0x9E3779B97F4A7C15)        (wrapping arithmetic)
//!
//! mix64(z):
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!     z ^ (z >> 31)
//! ```
//!
//! so any position of any stream can be recomputed without replaying the
//! prefix. Sub-streams are keyed by [`derive_seed`]:
//! `mix64(seed ^ mix64(index + 0x632BE59BD9B4E019))`.
//!
//! Derived quantities use fixed recipes so other implementations can
//! reproduce them bit-for-bit:
//!
//! * `next_f64`: `(u >> 11) * 2^-53`, in `[0, 1)`.
//! * `below(n)`: rejection sampling, draws `u` until `u < 2^64 - (2^64 mod n)`,
//!   returns `u mod n`.
//! * `bernoulli(p)`: `next_f64() < p`.
//! * `standard_normal`: Box–Muller cosine branch with `u1 = 1 - next_f64()`
//!   (drawn first) and `u2 = next_f64()`; consumes exactly two outputs.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0x632B_E59B_D9B4_E019;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of sub-stream `index` under `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(STREAM_SALT)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    /// Stream `index` of `seed`, see [`derive_seed`].
    pub fn stream(seed: u64, index: u64) -> Self {
        Self::new(derive_seed(seed, index))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Number of 64-bit outputs consumed so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    /// Output at absolute position `n`, without touching the cursor.
    pub fn at(&self, n: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(n.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        // 2^64 mod n, computed without overflow
        let rem = (u64::MAX % n + 1) % n;
        let zone = u64::MAX - rem;
        loop {
            let u = self.next_u64();
            if rem == 0 || u <= zone {
                return u % n;
            }
        }
    }

    /// Uniform index into a slice of length `len`.
    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        match (hi - lo).checked_add(1) {
            Some(n) => lo + self.below(n),
            None => self.next_u64(),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normal(&mut self, mean: f64, sigma: f64) -> f64 {
        mean + sigma * self.standard_normal()
    }

    /// Index drawn proportionally to `weights` (inverse CDF over one uniform).
    /// Returns `None` when the weights do not sum to a positive value.
    pub fn weighted_index(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let target = self.next_f64() * total;
        let mut acc = 0.0;
        let mut last_positive = None;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                last_positive = Some(i);
                acc += w;
                if target < acc {
                    return Some(i);
                }
            }
        }
        last_positive
    }

    /// In-place Fisher–Yates shuffle, swapping from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

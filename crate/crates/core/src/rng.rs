//! Deterministic random streams.
//!
//! Every stochastic object (a test system, a data record) draws from its own
//! ChaCha8 stream. The 256-bit key comes from the master seed and the 64-bit
//! stream id packs the object's coordinates, so streams never overlap and a
//! record's draws do not depend on which thread produced it or in what order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// What a stream is used for. Kept in the top bits of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamDomain {
    System = 1,
    Record = 2,
    Bootstrap = 3,
    Misc = 4,
}

/// Coordinates of a stream inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub domain: StreamDomain,
    pub system: u32,
    pub collection: u8,
    pub record: u32,
}

impl StreamKey {
    pub fn system(system: u32) -> Self {
        Self {
            domain: StreamDomain::System,
            system,
            collection: 0,
            record: 0,
        }
    }

    pub fn record(system: u32, collection: u8, record: u32) -> Self {
        Self {
            domain: StreamDomain::Record,
            system,
            collection,
            record,
        }
    }

    pub fn bootstrap(id: u32) -> Self {
        Self {
            domain: StreamDomain::Bootstrap,
            system: 0,
            collection: 0,
            record: id,
        }
    }

    pub fn misc(id: u32) -> Self {
        Self {
            domain: StreamDomain::Misc,
            system: 0,
            collection: 0,
            record: id,
        }
    }

    /// Packs the key as `domain:4 | system:20 | collection:8 | record:32`.
    pub fn stream_id(&self) -> u64 {
        assert!(self.system < (1 << 20), "system index exceeds 2^20");
        ((self.domain as u64) << 60)
            | ((self.system as u64) << 40)
            | ((self.collection as u64) << 32)
            | self.record as u64
    }
}

/// An owned, reproducible source of randomness.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn derive(master_seed: u64, key: StreamKey) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(key.stream_id());
        Self { rng }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.rng.random_range(0..len)
    }

    /// Zero-mean, unit-variance draw whose fourth moment equals `kurtosis`.
    ///
    /// `kurtosis == 3` is a standard normal. Below 3 a Rademacher sign is
    /// mixed in with weight `(3 - k) / 2`; above 3 the variable is a normal
    /// with variance `k / 3` switched on with probability `3 / k`.
    pub fn standardized(&mut self, kurtosis: f64) -> f64 {
        if kurtosis == 3.0 {
            return self.standard_normal();
        }
        if kurtosis < 3.0 {
            let w = (3.0 - kurtosis) / 2.0;
            if self.rng.random::<f64>() < w {
                if self.rng.next_u32() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                self.standard_normal()
            }
        } else {
            let p = 3.0 / kurtosis;
            if self.rng.random::<f64>() < p {
                (kurtosis / 3.0).sqrt() * self.standard_normal()
            } else {
                0.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_ids_are_distinct() {
        let a = StreamKey::record(3, 1, 7).stream_id();
        let b = StreamKey::record(3, 2, 7).stream_id();
        let c = StreamKey::system(3).stream_id();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn derived_streams_replay() {
        let key = StreamKey::record(0, 0, 42);
        let mut x = RandomStream::derive(9, key);
        let mut y = RandomStream::derive(9, key);
        for _ in 0..100 {
            assert_eq!(x.standard_normal().to_bits(), y.standard_normal().to_bits());
        }
    }

    #[test]
    fn standardized_moments() {
        for &k in &[1.0, 2.0, 3.0, 6.0] {
            let mut rng = RandomStream::new(11);
            let m = 400_000;
            let (mut s2, mut s4) = (0.0, 0.0);
            for _ in 0..m {
                let x = rng.standardized(k);
                s2 += x * x;
                s4 += x * x * x * x;
            }
            let (v, f) = (s2 / m as f64, s4 / m as f64);
            assert!((v - 1.0).abs() < 0.02, "variance {v} for kurtosis {k}");
            assert!(
                (f - k).abs() < 0.1 * k,
                "fourth moment {f} for kurtosis {k}"
            );
        }
    }
}

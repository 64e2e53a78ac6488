//! Reproducible random streams.
//!
//! Every random draw in a simulation belongs to a stream identified by a path
//! of counters: `(master_seed, point_index, trial_index, purpose, ...)`. A
//! [`StreamKey`] is a pure function of that path, so any trial can be replayed
//! in isolation and results never depend on which thread ran it or in which
//! order.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator handed to samplers.
pub type StreamRng = Xoshiro256PlusPlus;

/// SplitMix64 finaliser; a bijective 64-bit mixer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream sub-purposes inside one trial. Each purpose has its own stream, so
/// a consumer that skips one kind of draw (for example angles) does not shift
/// the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Count = 1,
    Radius = 2,
    Angle = 3,
    Beam = 4,
    InterfererFading = 5,
    DesiredFading = 6,
    Blockage = 7,
    Attempt = 8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(master_seed: u64) -> Self {
        StreamKey(mix64(master_seed ^ 0x6a09_e667_f3bc_c909))
    }

    /// Child key for counter `index`. Distinct indices give unrelated keys.
    #[inline]
    pub fn child(self, index: u64) -> Self {
        StreamKey(mix64(self.0.wrapping_add(mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))))
    }

    #[inline]
    pub fn purpose(self, purpose: Purpose) -> Self {
        self.child(0xd1b5_4a32_d192_ed03 ^ purpose as u64)
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn rng(self) -> StreamRng {
        StreamRng::seed_from_u64(self.0)
    }

    #[inline]
    pub fn rng_for(self, purpose: Purpose) -> StreamRng {
        self.purpose(purpose).rng()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn keys_are_pure_functions_of_the_path() {
        let a = StreamKey::new(7).child(3).child(11);
        let b = StreamKey::new(7).child(3).child(11);
        assert_eq!(a, b);
        assert_ne!(a, StreamKey::new(7).child(11).child(3));
        assert_ne!(a.purpose(Purpose::Beam), a.purpose(Purpose::Radius));
    }

    #[test]
    fn sibling_streams_are_uncorrelated() {
        let root = StreamKey::new(2024);
        let n = 20_000;
        let mut x = root.child(0).rng();
        let mut y = root.child(1).rng();
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let a: f64 = x.random();
            let b: f64 = y.random();
            sx += a;
            sy += b;
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        let nf = n as f64;
        let cov = sxy / nf - sx * sy / nf / nf;
        let corr = cov / ((sxx / nf - (sx / nf).powi(2)) * (syy / nf - (sy / nf).powi(2))).sqrt();
        assert!(corr.abs() < 4.0 / nf.sqrt(), "correlation {corr}");
    }
}

//! Counter-based uniforms: `U(seed, experiment, replica set, t, site)` is a
//! pure function of its arguments, so any replica, boundary condition or
//! thread schedule that asks for the same coordinates sees the same number.
//!
//! Sites enter through their lattice coordinates rather than their index in
//! some region, which is what lets two different boxes share noise on their
//! common sites.

use crate::lattice::{Site, MAX_DIM};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed plus stream coordinates.
///
/// `origin` shifts the site coordinates before hashing; translating a box by
/// `k` together with the key's origin reproduces the untranslated run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomnessKey {
    pub seed: u64,
    pub experiment: u64,
    pub replica_set: u64,
    origin: [i32; MAX_DIM],
}

impl RandomnessKey {
    pub fn new(seed: u64) -> Self {
        RandomnessKey { seed, experiment: 0, replica_set: 0, origin: [0; MAX_DIM] }
    }

    pub fn with_experiment(self, experiment: u64) -> Self {
        RandomnessKey { experiment, ..self }
    }

    pub fn with_replica_set(self, replica_set: u64) -> Self {
        RandomnessKey { replica_set, ..self }
    }

    pub fn translated(self, offset: Site) -> Self {
        let mut origin = self.origin;
        for (o, c) in origin.iter_mut().zip(offset.coords()) {
            *o += *c;
        }
        RandomnessKey { origin, ..self }
    }

    #[inline]
    fn prefix(&self) -> u64 {
        mix(mix(mix(self.seed ^ 0x5043_415F_4B45_5921) ^ self.experiment) ^ self.replica_set)
    }

    /// Per-time-step stream; `stream(t).uniform(code)` equals
    /// [`RandomnessKey::uniform`].
    #[inline]
    pub fn stream(&self, t: u64) -> TimeStream {
        TimeStream { base: mix(self.prefix() ^ t.wrapping_mul(0xD6E8_FEB8_6659_FD93)) }
    }

    /// Hash of a site's coordinates relative to the key origin.
    #[inline]
    pub fn site_code(&self, site: &Site) -> u64 {
        let mut h = 0x243F_6A88_85A3_08D3 ^ site.dim() as u64;
        for (a, c) in site.coords().iter().enumerate() {
            h = mix(h ^ ((c - self.origin[a]) as u32 as u64));
        }
        h
    }

    /// The uniform in `[0, 1)` attached to `(t, site)`.
    #[inline]
    pub fn uniform(&self, t: u64, site: &Site) -> f64 {
        self.stream(t).uniform(self.site_code(site))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TimeStream {
    base: u64,
}

impl TimeStream {
    #[inline]
    pub fn uniform(&self, site_code: u64) -> f64 {
        to_unit(mix(self.base ^ site_code))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: &[i32]) -> Site {
        Site::new(c).unwrap()
    }

    #[test]
    fn pure_and_distinct() {
        let k = RandomnessKey::new(7);
        let a = k.uniform(3, &s(&[1, -2]));
        assert_eq!(a, k.uniform(3, &s(&[1, -2])));
        assert_ne!(a, k.uniform(4, &s(&[1, -2])));
        assert_ne!(a, k.uniform(3, &s(&[-2, 1])));
        assert_ne!(a, k.with_replica_set(1).uniform(3, &s(&[1, -2])));
        assert_ne!(a, k.with_experiment(1).uniform(3, &s(&[1, -2])));
        assert_ne!(a, RandomnessKey::new(8).uniform(3, &s(&[1, -2])));
    }

    #[test]
    fn translation_shifts_coordinates() {
        let k = RandomnessKey::new(1);
        let off = s(&[4, -1]);
        let kt = k.translated(off);
        for t in 0..5 {
            let site = s(&[2, 3]);
            assert_eq!(k.uniform(t, &site), kt.uniform(t, &(site + off)));
        }
    }

    #[test]
    fn moments_and_lag_correlation() {
        let k = RandomnessKey::new(2024);
        let n = 200_000u64;
        let (mut sum, mut sq, mut lag) = (0.0, 0.0, 0.0);
        let mut prev = 0.5;
        for i in 0..n {
            let u = k.uniform(i / 100, &s(&[(i % 100) as i32, 0]));
            assert!((0.0..1.0).contains(&u));
            sum += u;
            sq += u * u;
            lag += (u - 0.5) * (prev - 0.5);
            prev = u;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = sq / nf - mean * mean;
        // 5 standard errors
        assert!((mean - 0.5).abs() < 5.0 * (1.0 / 12.0 / nf).sqrt());
        assert!((var - 1.0 / 12.0).abs() < 5.0 * 0.0745 / nf.sqrt());
        assert!((lag / nf).abs() < 5.0 / 12.0 / nf.sqrt());
    }
}

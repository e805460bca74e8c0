//! Counter-based random streams.
//!
//! Every simulation time step, Brownian coordinate, or replication gets its
//! own ChaCha8 stream addressed by `(key, stream)`, so results do not depend
//! on thread scheduling or on how many draws earlier steps consumed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a path of labels.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(master), |acc, &p| mix64(acc ^ mix64(p)))
}

/// A family of independent streams sharing one key.
#[derive(Clone, Debug)]
pub struct StreamRng {
    rng: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&derive_seed(seed, &[i as u64]).to_le_bytes());
        }
        Self {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Reposition at the start of `stream` and hand out the generator.
    pub fn stream(&mut self, stream: u64) -> &mut ChaCha8Rng {
        self.rng.set_stream(stream);
        self.rng.set_word_pos(0);
        &mut self.rng
    }
}

/// Uniform on the open interval (0, 1).
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn ln_factorial(k: u64) -> f64 {
    const SMALL: [f64; 10] = [
        0.0,
        0.0,
        std::f64::consts::LN_2,
        1.791_759_469_228_055,
        3.178_053_830_347_146,
        4.787_491_742_782_046,
        6.579_251_212_010_101,
        8.525_161_361_065_415,
        10.604_602_902_745_25,
        12.801_827_480_081_469,
    ];
    if k < 10 {
        return SMALL[k as usize];
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Exact Poisson draw: sequential inversion below 10, Hörmann's PTRS
/// transformed rejection above.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    debug_assert!(lambda >= 0.0 && lambda.is_finite());
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 10.0 {
        let u: f64 = rng.random();
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
            if p < f64::MIN_POSITIVE {
                break;
            }
        }
        return k;
    }
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v = open01(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        if lhs <= -lambda + k * loglam - ln_factorial(k as u64) {
            return k as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = StreamRng::new(7);
        let mut b = StreamRng::new(7);
        let x: u64 = a.stream(3).random();
        let _: u64 = b.stream(1).random();
        let y: u64 = b.stream(3).random();
        assert_eq!(x, y);
        let z: u64 = a.stream(4).random();
        assert_ne!(x, z);
        assert_ne!(derive_seed(1, &[2]), derive_seed(1, &[3]));
    }

    #[test]
    fn ln_factorial_matches_direct_sum() {
        for k in 0..60u64 {
            let direct: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
            assert!((ln_factorial(k) - direct).abs() < 1e-10, "k={k}");
        }
    }

    /// Sample mean and variance against λ on both sides of the method switch.
    #[test]
    fn poisson_moments() {
        let mut s = StreamRng::new(11);
        for &lam in &[0.3f64, 2.0, 9.5, 10.0, 37.0, 400.0] {
            let n = 200_000;
            let rng = s.stream(lam.to_bits());
            let draws: Vec<f64> = (0..n).map(|_| poisson(rng, lam) as f64).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (lam / n as f64).sqrt();
            assert!((mean - lam).abs() < 5.0 * se, "lam={lam} mean={mean}");
            assert!((var / lam - 1.0).abs() < 0.03, "lam={lam} var={var}");
        }
    }

    /// Probability mass near the mode matches the exact pmf.
    #[test]
    fn poisson_pmf_ptrs_branch() {
        let lam = 25.0;
        let n = 400_000;
        let mut s = StreamRng::new(5);
        let rng = s.stream(0);
        let mut counts = vec![0usize; 80];
        for _ in 0..n {
            let k = poisson(rng, lam) as usize;
            if k < counts.len() {
                counts[k] += 1;
            }
        }
        for k in 15..35u64 {
            let pmf = (-lam + k as f64 * lam.ln() - ln_factorial(k)).exp();
            let emp = counts[k as usize] as f64 / n as f64;
            let se = (pmf * (1.0 - pmf) / n as f64).sqrt();
            assert!((emp - pmf).abs() < 5.0 * se, "k={k} emp={emp} pmf={pmf}");
        }
    }
}

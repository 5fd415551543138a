use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::Matrix;
use crate::{math, Error, Result};

/// Explicitly owned, seedable random stream.
///
/// Backed by the counter-based ChaCha8 generator. Independent named
/// substreams share the seed but use disjoint ChaCha stream ids, so drawing
/// from one never shifts another.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Rng { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent stream keyed by `name`.
    ///
    /// The result depends only on this stream's seed and identity, never on
    /// how many values have been drawn from it.
    pub fn substream(&self, name: &str) -> Rng {
        let h = fnv1a(fnv1a(FNV_OFFSET, &self.stream.to_le_bytes()), name.as_bytes());
        Self::with_stream(self.seed, h)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; the bias for n far below 2^64 is negligible
        // and the draw count stays fixed at one.
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }

    /// Two independent standard normals via Box-Muller.
    ///
    /// Always consumes exactly two uniforms.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let theta = 2.0 * PI * u2;
        (r * math::cos(theta), r * math::sin(theta))
    }

    /// Fills `out` with standard normals, two per Box-Muller pair.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        let mut chunks = out.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (a, b) = self.normal_pair();
            pair[0] = a;
            pair[1] = b;
        }
        if let [last] = chunks.into_remainder() {
            *last = self.normal_pair().0;
        }
    }

    /// Fisher-Yates permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i + 1);
            idx.swap(i, j);
        }
        idx
    }
}

/// `n x d` matrix of i.i.d. `N(mu, sigma^2)` draws.
pub fn gaussian_sample(rng: &mut Rng, n: usize, d: usize, mu: f64, sigma: f64) -> Result<Matrix> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "gaussian sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if !mu.is_finite() {
        return Err(Error::Parameter(alloc::format!("gaussian mu must be finite, got {mu}")));
    }
    let mut data = alloc::vec![0.0; n * d];
    rng.fill_standard_normal(&mut data);
    for v in &mut data {
        *v = mu + sigma * *v;
    }
    Ok(Matrix::from_raw(n, d, data))
}

/// Shuffles the rows of `m`, returning the permutation used.
///
/// Row `i` of the result is row `perm[i]` of the input.
pub fn shuffle_rows(rng: &mut Rng, m: &Matrix) -> (Matrix, Vec<usize>) {
    let perm = rng.permutation(m.rows());
    (m.select_rows(&perm), perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_exact() {
        let mut rng = Rng::new(7);
        let m = gaussian_sample(&mut rng, 5, 3, 2.5, 0.0).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn negative_sigma_rejected() {
        let mut rng = Rng::new(7);
        assert!(matches!(
            gaussian_sample(&mut rng, 1, 1, 0.0, -1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn same_seed_same_sample() {
        let a = gaussian_sample(&mut Rng::new(42), 4, 7, 0.0, 1.0).unwrap();
        let b = gaussian_sample(&mut Rng::new(42), 4, 7, 0.0, 1.0).unwrap();
        assert_eq!(a, b);
        let c = gaussian_sample(&mut Rng::new(43), 4, 7, 0.0, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn moments_of_large_sample() {
        let mut rng = Rng::new(2024);
        let sigma = 0.01;
        let m = gaussian_sample(&mut rng, 1000, 1000, 0.0, sigma).unwrap();
        let n = m.as_slice().len() as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 4.0 * sigma / math::sqrt(n), "mean {mean}");
        assert!((math::sqrt(var) / sigma - 1.0).abs() < 0.01, "std {}", math::sqrt(var));
    }

    #[test]
    fn substreams_are_independent_of_parent_position() {
        let root = Rng::new(9);
        let mut advanced = root.clone();
        for _ in 0..10 {
            advanced.next_u64();
        }
        let mut a = root.substream("train");
        let mut b = advanced.substream("train");
        assert_eq!(a.next_u64(), b.next_u64());
        let mut c = root.substream("splits");
        assert_ne!(root.substream("train").next_u64(), c.next_u64());
    }

    #[test]
    fn single_row_shuffle() {
        let m = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let (s, perm) = shuffle_rows(&mut Rng::new(1), &m);
        assert_eq!(s, m);
        assert_eq!(perm, alloc::vec![0]);
    }

    #[test]
    fn shuffle_is_reproducible_permutation() {
        let m = Matrix::from_vec(6, 1, (0..6).map(f64::from).collect()).unwrap();
        let (a, pa) = shuffle_rows(&mut Rng::new(3), &m);
        let (b, pb) = shuffle_rows(&mut Rng::new(3), &m);
        assert_eq!(pa, pb);
        assert_eq!(a, b);
        let mut sorted: Vec<f64> = a.as_slice().to_vec();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, m.as_slice());
    }
}

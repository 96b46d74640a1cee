//! Reproducible random streams and the structured matrix generators used for
//! workloads, disguising material and verification challenges.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::matrix::{mat_mul, Matrix, MatrixError, Result};

/// Largest exponent bound accepted by [`DynamicRange`].
pub const MAX_DELTA: u32 = 10;

/// A ChaCha20 stream addressed by `(seed, stream_id)`.
///
/// Equal pairs reproduce the same draws; distinct stream ids select
/// independent keystreams under the same key.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Decimal exponent bound: generated magnitudes are `1.a1..a15 x 10^e` with
/// `e` uniform on the integers of `[-delta, delta]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicRange {
    delta: u32,
}

impl DynamicRange {
    pub fn new(delta: u32) -> Result<Self> {
        if delta > MAX_DELTA {
            return Err(MatrixError::Unsupported(format!(
                "dynamic range delta {delta} exceeds {MAX_DELTA}"
            )));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    /// One signed draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let d = self.delta as i32;
        let exponent = rng.random_range(-d..=d);
        // 15 decimal digits after the leading one.
        let digits = rng.random_range(0..9_000_000_000_000_000u64);
        let mantissa = 1.0 + digits as f64 * 1e-15;
        let magnitude = mantissa * 10f64.powi(exponent);
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }

    /// Root-mean-square of the distribution: the mantissa contributes
    /// `E[m^2] = 37` for `m` uniform on `[1, 10)`.
    pub fn rms(&self) -> f64 {
        let d = self.delta as i32;
        let mean_pow: f64 = (-d..=d).map(|e| 100f64.powi(e)).sum::<f64>() / (2 * d + 1) as f64;
        (37.0 * mean_pow).sqrt()
    }
}

impl Default for DynamicRange {
    fn default() -> Self {
        Self { delta: 4 }
    }
}

pub fn gen_dynamic_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, range: &DynamicRange, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| range.sample(rng))
}

pub fn gen_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random matrix of exact rank `rank`, built as a product of Gaussian factors
/// and scaled so its root-mean-square matches `range`.
pub fn gen_with_rank<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rank: usize,
    range: &DynamicRange,
    rng: &mut R,
) -> Result<Matrix> {
    if rank == 0 || rank > rows.min(cols) {
        return Err(MatrixError::Unsupported(format!(
            "rank {rank} for a {rows}x{cols} matrix"
        )));
    }
    let left = gen_gaussian(rows, rank, rng);
    let right = gen_gaussian(rank, cols, rng);
    let product = mat_mul(&left, &right)?;
    Ok(product.scale(range.rms() / (rank as f64).sqrt()))
}

/// Matrix of numerical rank `min(rows, cols) - 1`.
pub fn gen_rank_deficient<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    range: &DynamicRange,
    rng: &mut R,
) -> Result<Matrix> {
    let full = rows.min(cols);
    if full < 2 {
        return Err(MatrixError::Unsupported(format!(
            "a {rows}x{cols} matrix cannot lose rank without vanishing"
        )));
    }
    gen_with_rank(rows, cols, full - 1, range, rng)
}

/// Square matrix with 2-norm condition number at most `cond_bound`:
/// `Q1 * diag(d) * Q2` with orthogonal `Q1`, `Q2` and `d` log-uniform in
/// `[1, sqrt(cond_bound)]`, which keeps the condition number well inside the
/// bound.
pub fn gen_nonsingular<R: Rng + ?Sized>(n: usize, rng: &mut R, cond_bound: f64) -> Result<Matrix> {
    if n == 0 || !(cond_bound >= 1.0) {
        return Err(MatrixError::Unsupported(format!(
            "nonsingular draw with n={n}, cond_bound={cond_bound}"
        )));
    }
    let q1 = random_orthogonal(n, rng);
    let q2 = random_orthogonal(n, rng);
    let log_max = cond_bound.sqrt().ln();
    let diag: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * log_max).exp()).collect();
    let scaled = Matrix::from_fn(n, n, |i, j| q1.get(i, j) * diag[j]);
    mat_mul(&scaled, &q2)
}

/// Orthogonal factor of a Gaussian draw, via Gram-Schmidt with one
/// reorthogonalization pass.
fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    loop {
        let g = gen_gaussian(n, n, rng);
        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| g.col(j)).collect();
        let mut ok = true;
        for j in 0..n {
            for _ in 0..2 {
                for k in 0..j {
                    let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                    let basis = cols[k].clone();
                    for (x, b) in cols[j].iter_mut().zip(&basis) {
                        *x -= dot * b;
                    }
                }
            }
            let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|x| *x /= norm);
        }
        if ok {
            return Matrix::from_fn(n, n, |i, j| cols[j][i]);
        }
    }
}

/// Column vector of independent fair 0/1 entries.
pub fn bernoulli_vector<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(m, 1, |_, _| if rng.random::<bool>() { 1.0 } else { 0.0 })
}

/// Dynamic-uniform draw with the shape of `reference`, rescaled so both have
/// the same root-mean-square. Used for additive shares, which must sit at
/// the magnitude of the value they blind.
pub fn random_like<R: Rng + ?Sized>(reference: &Matrix, range: &DynamicRange, rng: &mut R) -> Matrix {
    let draw = gen_dynamic_uniform(reference.rows(), reference.cols(), range, rng);
    let target = reference.rms();
    if target == 0.0 {
        draw
    } else {
        draw.scale(target / draw.rms())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 1);
        let mut b = RngStream::new(7, 1);
        let mut c = RngStream::new(7, 2);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn delta_zero_stays_in_one_decade() {
        let range = DynamicRange::new(0).unwrap();
        let m = gen_dynamic_uniform(2, 2, &range, &mut RngStream::new(3, 0));
        assert!(m.data().iter().all(|x| (1.0..10.0).contains(&x.abs())));
    }

    #[test]
    fn delta_four_bounds_over_many_draws() {
        let range = DynamicRange::new(4).unwrap();
        let mut rng = RngStream::new(11, 0);
        let mut neg = 0;
        for _ in 0..400 {
            let m = gen_dynamic_uniform(5, 5, &range, &mut rng);
            for &x in m.data() {
                assert!((1e-4..1e5).contains(&x.abs()), "{x}");
                neg += (x < 0.0) as usize;
            }
        }
        let frac = neg as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.03, "{frac}");
    }

    #[test]
    fn delta_above_limit_rejected() {
        assert!(DynamicRange::new(11).is_err());
    }

    #[test]
    fn rms_matches_sampling() {
        for delta in [0, 2] {
            let range = DynamicRange::new(delta).unwrap();
            let m = gen_dynamic_uniform(300, 300, &range, &mut RngStream::new(5, delta as u64));
            let ratio = m.rms() / range.rms();
            assert!((ratio - 1.0).abs() < 0.05, "delta {delta}: {ratio}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let range = DynamicRange::default();
        let a = gen_rank_deficient(10, 10, &range, &mut RngStream::new(1, 9)).unwrap();
        let b = gen_rank_deficient(10, 10, &range, &mut RngStream::new(1, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rank_deficient_rejects_vectors() {
        let range = DynamicRange::default();
        assert!(gen_rank_deficient(1, 5, &range, &mut RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn scalar_nonsingular_is_nonzero() {
        let m = gen_nonsingular(1, &mut RngStream::new(2, 0), 10.0).unwrap();
        assert_eq!(m.shape(), (1, 1));
        assert!(m.get(0, 0) != 0.0);
    }

    #[test]
    fn bernoulli_entries_and_mean() {
        let mut rng = RngStream::new(4, 0);
        let mut ones = 0.0;
        for _ in 0..100_000 {
            let v = bernoulli_vector(10, &mut rng);
            assert!(v.data().iter().all(|&x| x == 0.0 || x == 1.0));
            ones += v.data().iter().sum::<f64>();
        }
        let mean = ones / 1e6;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn random_like_matches_scale() {
        let reference = Matrix::from_fn(50, 50, |i, j| 1e6 * ((i + j) as f64).sin());
        let r = random_like(&reference, &DynamicRange::new(2).unwrap(), &mut RngStream::new(8, 0));
        let ratio = r.rms() / reference.rms();
        assert!((ratio - 1.0).abs() < 1e-12);
    }
}

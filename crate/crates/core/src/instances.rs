//! Seeded random problem instances shared by the self-test and the test suites.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::rng;

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of R's diagonal folded into Q).
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// `U V^T` with Gaussian `n x rank` and `m x rank` factors.
pub fn random_low_rank(rng: &mut ChaCha8Rng, n: usize, m: usize, rank: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, n, rank) * gaussian_matrix(rng, m, rank).transpose()
}

/// `round(fraction * n * m)` distinct zero-based entries, sorted.
pub fn random_mask(rng: &mut ChaCha8Rng, n: usize, m: usize, fraction: f64) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    all.shuffle(rng);
    let keep = ((fraction * (n * m) as f64).round() as usize).min(n * m);
    let mut mask = all[..keep].to_vec();
    mask.sort_unstable();
    mask
}

/// `s U V^T` with `U`, `V` the first `rank` columns of Haar orthogonal
/// matrices and `s = sqrt(n m / rank)`, so all nonzero singular values are
/// equal and entries have unit mean square.
pub fn random_flat_low_rank(rng: &mut ChaCha8Rng, n: usize, m: usize, rank: usize) -> DMatrix<f64> {
    let rank = rank.min(n).min(m);
    let u = random_orthogonal(rng, n).columns(0, rank).into_owned();
    let v = random_orthogonal(rng, m).columns(0, rank).into_owned();
    let s = if rank == 0 {
        0.0
    } else {
        ((n * m) as f64 / rank as f64).sqrt()
    };
    u * v.transpose() * s
}

/// Well-conditioned rank-`rank` ground truth (see [`random_flat_low_rank`])
/// and an observation mask.
pub fn completion_instance(
    seed: u64,
    n: usize,
    m: usize,
    rank: usize,
    fraction: f64,
) -> (DMatrix<f64>, Vec<(usize, usize)>) {
    let mut rng = rng::stream(seed, "completion_instance");
    let truth = random_flat_low_rank(&mut rng, n, m, rank);
    let mask = random_mask(&mut rng, n, m, fraction);
    (truth, mask)
}

/// Design `A` (`rows x n`) and right-hand side `B` (`rows x m`) of a
/// least-squares instance; `B` is a noisy low-rank signal seen through `A`.
pub fn least_squares_instance(
    seed: u64,
    rows: usize,
    n: usize,
    m: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = rng::stream(seed, "least_squares_instance");
    let design = gaussian_matrix(&mut rng, rows, n) / (rows as f64).sqrt();
    let signal = random_low_rank(&mut rng, n, m, 2);
    let noise = gaussian_matrix(&mut rng, rows, m) * 0.1;
    let rhs = &design * signal + noise;
    (design, rhs)
}

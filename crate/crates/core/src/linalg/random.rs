use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{c, CMatrix, DensityOperator, HermitianOperator, C64};
use crate::error::{Error, Result};

/// Per-trial seed from a master seed (SplitMix64 finalizer over both words).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows × cols` matrix of i.i.d. standard complex Gaussians (`E|z|² = 1`).
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

/// Haar-distributed `d × d` unitary: QR of a Ginibre matrix with the
/// diagonal of R rotated to the positive reals.
pub fn haar_unitary(d: usize, seed: u64) -> CMatrix {
    haar_unitary_with(d, &mut rng_from_seed(seed))
}

pub(crate) fn haar_unitary_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = complex_gaussian(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let rk = r[(k, k)];
        let n = rk.norm();
        let phase = if n > 0.0 { rk / c(n, 0.0) } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// `GG†/Tr(GG†)` with `G` a `d × rank` complex Gaussian matrix.
pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityOperator> {
    random_density_with(d, rank, &mut rng_from_seed(seed))
}

pub(crate) fn random_density_with<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<DensityOperator> {
    if d == 0 || rank == 0 || rank > d {
        return Err(Error::Precondition(format!("rank {rank} must lie in 1..={d}")));
    }
    let g = complex_gaussian(d, rank, rng);
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    DensityOperator::new_clamped(HermitianOperator::from_matrix_unchecked(m / c(tr, 0.0)), 1e-12)
}

/// Full-rank state rescaled to a trace drawn uniformly from `[tmin, 1]`.
pub fn random_subnormalized<R: Rng + ?Sized>(d: usize, tmin: f64, rng: &mut R) -> Result<DensityOperator> {
    let r = random_density_with(d, d, rng)?;
    let t = rng.random_range(tmin..=1.0);
    DensityOperator::new(r.op().scale(t))
}

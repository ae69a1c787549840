//! Seeded random generation of states, unitaries, and POVM sets.
//!
//! Generator contract: all randomness flows from a `ChaCha8Rng` keyed by an
//! explicit `u64` seed, which yields a deterministic, platform-independent
//! integer stream; uniforms in [0, 1) are the standard 53-bit mapping of that
//! stream, and Gaussians are produced from uniform pairs by Box-Muller.
//! Fixed seed implies bit-identical draws across runs and platforms.

use crate::linalg::{CMatrix, CVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the RNG for an independent work shard; shard k of a seeded run
/// draws from stream k of the same key.
pub fn rng_for_shard(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Uniform double in [0, 1).
pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen::<f64>()
}

/// Standard normal via Box-Muller.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = (1.0 - uniform(rng)).max(f64::MIN_POSITIVE);
    let u2: f64 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

fn ginibre(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    ginibre(rng, dim).hermitized()
}

/// Unitary from modified Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = ginibre(rng, dim);
    let mut cols: Vec<CVector> = (0..dim)
        .map(|c| CVector::new((0..dim).map(|r| g.get(r, c)).collect()))
        .collect();
    for i in 0..dim {
        for _ in 0..2 {
            for j in 0..i {
                let overlap = cols[j].inner(&cols[i]);
                let proj = cols[j].scale(overlap);
                cols[i] = CVector::new((0..dim).map(|r| cols[i].get(r) - proj.get(r)).collect());
            }
        }
        cols[i] = cols[i].normalized();
    }
    CMatrix::from_fn(dim, dim, |r, c| cols[c].get(r))
}

pub fn random_pure_state(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    CVector::new((0..dim).map(|_| complex_gaussian(rng)).collect()).normalized()
}

/// Full-rank random density matrix G G^dag / Tr.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = ginibre(rng, dim);
    let w = (&g * &g.adjoint()).hermitized();
    let tr = w.trace().re;
    w.scale_re(1.0 / tr)
}

pub fn random_probability_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| uniform(rng) + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random complete POVM: Gram matrices G_i G_i^dag whitened by the inverse
/// square root of their sum, so the elements are PSD and sum to the identity.
pub fn random_povm(rng: &mut ChaCha8Rng, dim: usize, outcomes: usize) -> Vec<CMatrix> {
    assert!(outcomes >= 1);
    let grams: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(rng, dim);
            (&g * &g.adjoint()).hermitized()
        })
        .collect();
    let mut total = CMatrix::zeros(dim, dim);
    for g in &grams {
        total = &total + g;
    }
    let eig = crate::linalg::hermitian_eig(&total.hermitized()).expect("sum of Grams is Hermitian");
    let inv_root = eig.map(|w| Complex64::new(1.0 / w.max(1e-12).sqrt(), 0.0));
    grams
        .into_iter()
        .map(|g| (&(&inv_root * &g) * &inv_root).hermitized())
        .collect()
}

/// Complete rank-1 projective family from a random orthonormal basis.
pub fn random_projective_family(rng: &mut ChaCha8Rng, dim: usize) -> Vec<CMatrix> {
    let u = random_unitary(rng, dim);
    (0..dim)
        .map(|k| {
            let col = CVector::new((0..dim).map(|r| u.get(r, k)).collect());
            col.projector()
        })
        .collect()
}

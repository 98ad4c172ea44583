//! Seeded random states and channels for Monte-Carlo suites.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, index)`, so
//! any single trial can be replayed without re-running the ones before it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channels::Channel;
use crate::spin::State;

/// Independent generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform direction on the unit sphere of `R^d`.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let g = gaussian_vector(rng, d);
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-300 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Random state: half the draws are uniform in the ball, the other half sit
/// within `10^-8 .. 1` of the boundary (log-uniform gap) so near-pure states
/// are well represented.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> State {
    let dir = random_direction(rng, d);
    let radius = if rng.random_bool(0.5) {
        0.5 * rng.random::<f64>().powf(1.0 / d as f64)
    } else {
        let gap = 10f64.powf(-8.0 * rng.random::<f64>());
        0.5 * (1.0 - gap)
    };
    State::from_bloch_unchecked(dir.into_iter().map(|x| radius * x).collect())
}

/// Random state with both eigenvalues in `[margin, 1 − margin]`.
pub fn random_interior_state<R: Rng + ?Sized>(rng: &mut R, d: usize, margin: f64) -> State {
    let dir = random_direction(rng, d);
    let rmax = (0.5 - margin).max(0.0);
    let radius = rmax * rng.random::<f64>().powf(1.0 / d as f64);
    State::from_bloch_unchecked(dir.into_iter().map(|x| radius * x).collect())
}

/// Pure state with a uniform direction.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> State {
    let dir = random_direction(rng, d);
    State::from_bloch_unchecked(dir.into_iter().map(|x| 0.5 * x).collect())
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_vec(d, d, gaussian_vector(rng, d * d));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Channel with Gaussian `A` and `c`, uniformly rescaled so that the image of
/// the unit ball has radius exactly `target`.
pub fn random_channel_with_radius<R: Rng + ?Sized>(rng: &mut R, d: usize, target: f64) -> Channel {
    let a = DMatrix::from_vec(d, d, gaussian_vector(rng, d * d));
    let c = DVector::from_vec(gaussian_vector(rng, d));
    let ch = Channel::new(a, c).expect("shapes agree");
    let norm = ch.validity().max_norm;
    let k = if norm > 0.0 { target / norm } else { 0.0 };
    Channel::new(ch.linear() * k, ch.offset() * k).expect("shapes agree")
}

/// Channel with image radius drawn uniformly from `[0.3, 1.0]`.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Channel {
    let target = rng.random_range(0.3..=1.0);
    random_channel_with_radius(rng, d, target)
}

/// Dilation around a random state with a uniform factor in `[0, 1]`.
pub fn random_dilation<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Channel {
    let z = random_state(rng, d);
    let r = rng.random::<f64>();
    Channel::dilation(&z, r).expect("factor in range")
}

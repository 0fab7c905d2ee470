use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use super::{c, BinomialSample, CMat, CVec, PureState, C64};

pub type Rng = ChaCha20Rng;

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn rng_for(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn sample_index(probs: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn gaussian(rng: &mut Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-random unit vector in ℂᵈ (normalized complex Gaussian).
pub fn sample_haar_dim(d: usize, rng: &mut Rng) -> PureState {
    loop {
        let v = CVec::from_fn(d, |_, _| gaussian(rng));
        if let Ok(s) = PureState::normalized(v) {
            return s;
        }
    }
}

/// Haar-random n-qubit state.
pub fn sample_haar(n: usize, rng: &mut Rng) -> PureState {
    sample_haar_dim(1 << n, rng)
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix.
pub fn sample_unitary(d: usize, rng: &mut Rng) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / c(rjj.norm()) } else { c(1.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// `c ~ B(t, 1/2)`.
pub fn sample_binomial(t: usize, rng: &mut Rng) -> BinomialSample {
    let c = if t == 0 { 0 } else { Binomial::new(t as u64, 0.5).expect("p = 1/2").sample(rng) as usize };
    BinomialSample { t, c }
}

//! Binomial confidence intervals and a deterministic parallel trial runner.

use rayon::prelude::*;

use crate::hilbert::{rng_for, Rng};

/// Wilson score interval for `successes` out of `trials` at `z` standard
/// deviations.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Standard error of a Bernoulli mean; uses p(1−p)/n with a floor of 1/(4n)
/// so that empirical rates of exactly 0 or 1 still carry an error bar.
pub fn bernoulli_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    (p * (1.0 - p)).max(0.25 / n).sqrt() / n.sqrt()
}

/// An empirical acceptance rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
}

impl Rate {
    pub fn from_outcomes(outcomes: &[bool]) -> Self {
        Rate { successes: outcomes.iter().filter(|&&b| b).count() as u64, trials: outcomes.len() as u64 }
    }

    pub fn mean(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        bernoulli_stderr(self.mean(), self.trials)
    }

    pub fn wilson(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.successes, self.trials, z)
    }
}

/// |Pr[real → 1] − Pr[ideal → 1]| with its combined standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageEstimate {
    pub real: Rate,
    pub ideal: Rate,
}

impl AdvantageEstimate {
    pub fn advantage(&self) -> f64 {
        (self.real.mean() - self.ideal.mean()).abs()
    }

    pub fn stderr(&self) -> f64 {
        self.real.stderr().hypot(self.ideal.stderr())
    }

    /// The advantage is within `bound` up to `sigmas` standard errors.
    pub fn within(&self, bound: f64, sigmas: f64) -> bool {
        self.advantage() <= bound + sigmas * self.stderr()
    }
}

/// Runs `trials` independent trials in parallel. Trial `i` receives the
/// generator for stream `stream_base + i` of `seed`, so results do not depend
/// on thread scheduling.
pub fn run_trials<T, F>(seed: u64, stream_base: u64, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut Rng) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, stream_base + i);
            f(i, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn wilson_contains_mean_and_shrinks() {
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!(lo < 0.5 && 0.5 < hi);
        let (lo2, hi2) = wilson_interval(5000, 10000, 1.96);
        assert!(hi2 - lo2 < hi - lo);
        // Known value: 50/100 at z = 1.96 gives [0.4038, 0.5962].
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn runner_is_deterministic() {
        let a = run_trials(7, 0, 64, |_, r| r.random::<u64>());
        let b = run_trials(7, 0, 64, |_, r| r.random::<u64>());
        assert_eq!(a, b);
        let c = run_trials(8, 0, 64, |_, r| r.random::<u64>());
        assert_ne!(a, c);
    }

    #[test]
    fn advantage_arithmetic() {
        let e = AdvantageEstimate { real: Rate { successes: 75, trials: 100 }, ideal: Rate { successes: 50, trials: 100 } };
        assert!((e.advantage() - 0.25).abs() < 1e-12);
        assert!(e.within(0.25, 0.0));
        assert!(!e.within(0.1, 1.0));
    }
}

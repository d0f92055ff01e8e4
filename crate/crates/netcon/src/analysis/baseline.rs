//! Reference stopping times under uniform pair selection: how long until
//! every pair has interacted, or until one fixed node has met all others.
//! Both have exact coupon-collector means, which makes them calibration
//! points for the empirical runtime pipeline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scheduler::uniform_next;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BaselineKind {
    /// Every unordered pair selected at least once.
    EdgeCover,
    /// Node 0 selected, in either role, with every other node.
    MeetEverybody,
}

impl BaselineKind {
    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::EdgeCover => "edge_cover",
            BaselineKind::MeetEverybody => "meet_everybody",
        }
    }
}

/// One sampled stopping time, counting every selection.
pub fn baseline_process<R: Rng>(kind: BaselineKind, n: usize, rng: &mut R) -> u64 {
    assert!(n >= 2);
    let mut steps = 0u64;
    match kind {
        BaselineKind::EdgeCover => {
            let mut seen = vec![false; n * n];
            let mut left = n * (n - 1) / 2;
            while left > 0 {
                let (u, v) = uniform_next(n, rng);
                steps += 1;
                let slot = u.min(v) * n + u.max(v);
                if !seen[slot] {
                    seen[slot] = true;
                    left -= 1;
                }
            }
        }
        BaselineKind::MeetEverybody => {
            let mut seen = vec![false; n];
            let mut left = n - 1;
            while left > 0 {
                let (u, v) = uniform_next(n, rng);
                steps += 1;
                let other = match (u, v) {
                    (0, o) | (o, 0) => o,
                    _ => continue,
                };
                if !seen[other] {
                    seen[other] = true;
                    left -= 1;
                }
            }
        }
    }
    steps
}

/// Partial sum of the harmonic series.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// Exact mean of the matching process: with m = n(n-1)/2 pairs, covering all
/// of them takes m*H(m) selections and meeting n-1 fixed partners takes
/// m*H(n-1).
pub fn expected_steps(kind: BaselineKind, n: usize) -> f64 {
    let m = n * (n - 1) / 2;
    match kind {
        BaselineKind::EdgeCover => m as f64 * harmonic(m),
        BaselineKind::MeetEverybody => m as f64 * harmonic(n - 1),
    }
}

/// Sample mean and its standard error over seeded trials.
pub fn sample_mean(kind: BaselineKind, n: usize, trials: usize, seed: u64) -> (f64, f64) {
    assert!(trials >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..trials)
        .map(|_| baseline_process(kind, n, &mut rng) as f64)
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    (mean, (var / trials as f64).sqrt())
}

//! Deterministic parallel ensemble averaging.
//!
//! Trajectories are split into a fixed number of contiguous batches. Each
//! batch is accumulated sequentially (Welford) and batches are merged in
//! index order, so the result depends only on the inputs and never on the
//! number of worker threads. The batch means double as the groups of a
//! jackknife for derived quantities such as fitted decay constants.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scalar::Real;

/// Number of batches used when the caller does not choose one.
pub const DEFAULT_BATCHES: usize = 32;

/// RNG stream of one trajectory: keyed by the master seed, one ChaCha
/// stream per trajectory index.
pub fn trajectory_rng(seed: u64, trajectory: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory);
    rng
}

/// Derives an independent child seed, e.g. one per sweep point.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(master.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(mix(index.wrapping_add(1))))
}

#[derive(Debug, Clone)]
struct Batch<T> {
    count: usize,
    mean: Vec<T>,
    m2: Vec<T>,
}

impl<T: Real> Batch<T> {
    fn new(n_values: usize) -> Self {
        Self {
            count: 0,
            mean: vec![T::zero(); n_values],
            m2: vec![T::zero(); n_values],
        }
    }

    fn push(&mut self, x: &[T]) {
        self.count += 1;
        let n = T::lit(self.count as f64);
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    fn merge(&mut self, other: &Batch<T>) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (T::lit(self.count as f64), T::lit(other.count as f64));
        let n = na + nb;
        for k in 0..self.mean.len() {
            let delta = other.mean[k] - self.mean[k];
            self.mean[k] += delta * nb / n;
            self.m2[k] += other.m2[k] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }
}

/// Ensemble mean and standard error of a vector of per-trajectory observations.
#[derive(Debug, Clone)]
pub struct EnsembleStats<T: Real> {
    pub n_traj: usize,
    pub mean: Vec<T>,
    /// Standard error of the mean, from the trajectory variance.
    pub stderr: Vec<T>,
    batches: Vec<Batch<T>>,
}

impl<T: Real> EnsembleStats<T> {
    pub fn n_batches(&self) -> usize {
        self.batches.len()
    }

    /// Mean of the ensemble with batch `b` left out.
    pub fn leave_one_out(&self, b: usize) -> Vec<T> {
        let total = T::lit(self.n_traj as f64);
        let batch = &self.batches[b];
        let nb = T::lit(batch.count as f64);
        if total == nb {
            return self.mean.clone();
        }
        self.mean
            .iter()
            .zip(&batch.mean)
            .map(|(&m, &mb)| (total * m - nb * mb) / (total - nb))
            .collect()
    }

    /// Jackknife standard error of a statistic of the mean vector, over the
    /// leave-one-batch-out means. Replicates where `stat` fails are skipped;
    /// `None` when fewer than two replicates remain.
    pub fn jackknife_stderr(&self, stat: impl Fn(&[T]) -> Option<T>) -> Option<T> {
        let reps: Vec<T> = (0..self.n_batches())
            .filter_map(|b| stat(&self.leave_one_out(b)))
            .collect();
        if reps.len() < 2 {
            return None;
        }
        let g = T::lit(reps.len() as f64);
        let mean = reps.iter().copied().sum::<T>() / g;
        let ss: T = reps.iter().map(|&r| (r - mean) * (r - mean)).sum();
        Some((ss * (g - T::one()) / g).sqrt())
    }
}

/// Runs `n_traj` trajectories, each writing `n_values` observations into
/// the provided buffer, and returns their ensemble statistics.
pub fn run_ensemble<T, F>(n_traj: usize, n_values: usize, n_batches: usize, simulate: F) -> EnsembleStats<T>
where
    T: Real,
    F: Fn(u64, &mut [T]) + Sync,
{
    assert!(n_traj >= 1, "ensemble needs at least one trajectory");
    let n_batches = n_batches.clamp(1, n_traj);
    let batches: Vec<Batch<T>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * n_traj / n_batches;
            let hi = (b + 1) * n_traj / n_batches;
            let mut acc = Batch::new(n_values);
            let mut buf = vec![T::zero(); n_values];
            for traj in lo..hi {
                buf.iter_mut().for_each(|v| *v = T::zero());
                simulate(traj as u64, &mut buf);
                acc.push(&buf);
            }
            acc
        })
        .collect();
    let mut total = Batch::new(n_values);
    for b in &batches {
        total.merge(b);
    }
    let n = T::lit(n_traj as f64);
    let stderr = if n_traj > 1 {
        total
            .m2
            .iter()
            .map(|&s| (s.max(T::zero()) / (n - T::one()) / n).sqrt())
            .collect()
    } else {
        vec![T::zero(); n_values]
    };
    EnsembleStats {
        n_traj,
        mean: total.mean,
        stderr,
        batches,
    }
}

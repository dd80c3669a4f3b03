//! Deterministic parallel reductions over trajectory ensembles.
//!
//! The index range is split by a fixed binary tree whose leaves hold at most
//! [`LEAF`] consecutive trajectories. Leaves are folded in index order and
//! siblings are merged left-to-right, so floating-point results do not depend
//! on how many threads execute the tree.

use crate::Result;

/// Trajectories folded sequentially at each leaf of the reduction tree.
pub const LEAF: usize = 32;

/// Partial results that can be combined.
pub trait Merge: Send + Sized {
    /// Absorbs `other`, which covers indices strictly after `self`'s.
    fn merge(&mut self, other: Self);
}

/// Folds `add(acc, i)` over `0..count` on the current rayon pool.
pub fn reduce_indexed<A, N, F>(count: usize, new: N, add: F) -> A
where
    A: Merge,
    N: Fn() -> A + Sync,
    F: Fn(&mut A, usize) + Sync,
{
    fn node<A, N, F>(lo: usize, hi: usize, new: &N, add: &F) -> A
    where
        A: Merge,
        N: Fn() -> A + Sync,
        F: Fn(&mut A, usize) + Sync,
    {
        if hi - lo <= LEAF {
            let mut acc = new();
            for i in lo..hi {
                add(&mut acc, i);
            }
            return acc;
        }
        let leaves = (hi - lo).div_ceil(LEAF);
        let mid = lo + leaves.div_ceil(2) * LEAF;
        let (mut left, right) = rayon::join(|| node(lo, mid, new, add), || node(mid, hi, new, add));
        left.merge(right);
        left
    }
    node(0, count, &new, &add)
}

/// Runs `f` on a dedicated pool with `workers` threads, or on the global
/// pool when `workers` is `None`.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()?;
            Ok(pool.install(f))
        }
    }
}

/// Per-time running mean and centred second moment (Welford / Chan).
#[derive(Clone, Debug)]
pub struct RunningMoments {
    pub count: usize,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl RunningMoments {
    pub fn new(len: usize) -> Self {
        RunningMoments {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, sample: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    /// Unbiased sample variance per entry.
    pub fn variance(&self) -> Vec<f64> {
        let denom = (self.count.max(2) - 1) as f64;
        self.m2.iter().map(|m| (m / denom).max(0.0)).collect()
    }
}

impl Merge for RunningMoments {
    fn merge(&mut self, other: Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }
}

/// Plain elementwise sums of several equally long columns.
#[derive(Clone, Debug)]
pub struct ColumnSums {
    pub count: usize,
    pub columns: Vec<Vec<f64>>,
}

impl ColumnSums {
    pub fn new(columns: usize, len: usize) -> Self {
        ColumnSums {
            count: 0,
            columns: vec![vec![0.0; len]; columns],
        }
    }
}

impl Merge for ColumnSums {
    fn merge(&mut self, other: Self) {
        self.count += other.count;
        for (a, b) in self.columns.iter_mut().zip(other.columns) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

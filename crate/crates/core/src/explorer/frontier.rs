//! Two-objective non-dominated sorting.

use std::cmp::Ordering;

use super::ExplorerError;

/// Input point for [`nondominated_sort_2d`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub accuracy: f64,
    pub latency: f64,
    pub id: String,
}

impl FrontierPoint {
    pub fn new(accuracy: f64, latency: f64, id: impl Into<String>) -> Self {
        Self {
            accuracy,
            latency,
            id: id.into(),
        }
    }
}

/// Indices of the non-dominated points, ordered by latency ascending.
///
/// Higher accuracy and lower latency are better. Exact duplicates collapse to
/// the smallest id. With `epsilon > 0` a point is also dropped when a kept
/// point of no greater latency is within `epsilon` in accuracy, or when the
/// next kept point is within `epsilon` in latency.
pub fn nondominated_sort_2d(
    points: &[FrontierPoint],
    epsilon: f64,
) -> Result<Vec<usize>, ExplorerError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(ExplorerError::InvalidEpsilon(epsilon));
    }
    if let Some(i) = points
        .iter()
        .position(|p| !p.accuracy.is_finite() || !p.latency.is_finite())
    {
        return Err(ExplorerError::NonFinite(points[i].id.clone()));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.accuracy, p.latency)).collect();
    Ok(frontier_sweep(&xy, epsilon, |a, b| {
        points[a].id.cmp(&points[b].id)
    }))
}

/// Sort-and-sweep frontier over `(accuracy, latency)` pairs.
///
/// `tie` orders two indices whose points are exactly equal; the smaller one
/// survives. Returns kept indices in latency order.
pub(crate) fn frontier_sweep(
    points: &[(f64, f64)],
    epsilon: f64,
    tie: impl Fn(usize, usize) -> Ordering,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, la) = points[a];
        let (pb, lb) = points[b];
        la.total_cmp(&lb)
            .then_with(|| pb.total_cmp(&pa))
            .then_with(|| tie(a, b))
    });

    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        match kept.last() {
            Some(&last) if points[i].0 <= points[last].0 + epsilon => {}
            _ => kept.push(i),
        }
    }

    if epsilon > 0.0 && kept.len() > 1 {
        let mut thinned = vec![*kept.last().unwrap()];
        for &i in kept.iter().rev().skip(1) {
            let next = *thinned.last().unwrap();
            if points[next].1 > points[i].1 + epsilon {
                thinned.push(i);
            }
        }
        thinned.reverse();
        kept = thinned;
    }
    kept
}

/// Streaming exact frontier over candidates keyed by `u64`.
///
/// Candidates that the current frontier already weakly dominates are rejected
/// with a binary search; the rest are buffered and merged in batches.
pub(crate) struct FrontierAccumulator<F> {
    frontier: Vec<Candidate>,
    buffer: Vec<Candidate>,
    tie: F,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub accuracy: f64,
    pub latency: f64,
    pub key: u64,
}

const MERGE_BATCH: usize = 8192;

impl<F: Fn(u64, u64) -> Ordering> FrontierAccumulator<F> {
    pub fn new(tie: F) -> Self {
        Self {
            frontier: Vec::new(),
            buffer: Vec::with_capacity(MERGE_BATCH),
            tie,
        }
    }

    pub fn offer(&mut self, c: Candidate) {
        let k = self.frontier.partition_point(|f| f.latency <= c.latency);
        if k > 0 {
            let f = &self.frontier[k - 1];
            if f.accuracy > c.accuracy || (f.accuracy == c.accuracy && f.latency < c.latency) {
                return;
            }
        }
        self.buffer.push(c);
        if self.buffer.len() >= MERGE_BATCH {
            self.merge();
        }
    }

    fn merge(&mut self) {
        let mut all = std::mem::take(&mut self.frontier);
        all.append(&mut self.buffer);
        let xy: Vec<(f64, f64)> = all.iter().map(|c| (c.accuracy, c.latency)).collect();
        let keep = frontier_sweep(&xy, 0.0, |a, b| (self.tie)(all[a].key, all[b].key));
        self.frontier = keep.into_iter().map(|i| all[i]).collect();
    }

    pub fn finish(mut self) -> Vec<Candidate> {
        self.merge();
        self.frontier
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn oracle(points: &[FrontierPoint]) -> Vec<usize> {
        let dominated = |p: &FrontierPoint, q: &FrontierPoint| {
            q.accuracy >= p.accuracy
                && q.latency <= p.latency
                && (q.accuracy > p.accuracy || q.latency < p.latency)
        };
        let mut out: Vec<usize> = (0..points.len())
            .filter(|&i| {
                let p = &points[i];
                !points.iter().any(|q| dominated(p, q))
                    && !points
                        .iter()
                        .any(|q| q.accuracy == p.accuracy && q.latency == p.latency && q.id < p.id)
            })
            .collect();
        out.sort_by(|&a, &b| points[a].latency.total_cmp(&points[b].latency));
        out
    }

    #[test]
    fn three_point_example() {
        let pts = vec![
            FrontierPoint::new(0.9, 5.0, "a"),
            FrontierPoint::new(0.8, 6.0, "b"),
            FrontierPoint::new(0.95, 9.0, "c"),
        ];
        assert_eq!(nondominated_sort_2d(&pts, 0.0).unwrap(), vec![0, 2]);
    }

    #[test]
    fn identical_points_keep_smallest_id() {
        let pts: Vec<_> = ["q", "c", "x"]
            .iter()
            .map(|id| FrontierPoint::new(0.5, 1.0, *id))
            .collect();
        assert_eq!(nondominated_sort_2d(&pts, 0.0).unwrap(), vec![1]);
    }

    #[test]
    fn uniform_random_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000);
        let pts: Vec<_> = (0..1000)
            .map(|i| FrontierPoint::new(rng.random(), rng.random(), format!("p{i:04}")))
            .collect();
        assert_eq!(nondominated_sort_2d(&pts, 0.0).unwrap(), oracle(&pts));
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<_> = (0..200)
            .map(|i| {
                FrontierPoint::new(
                    rng.random_range(0..10) as f64,
                    rng.random_range(0..10) as f64,
                    format!("{i}"),
                )
            })
            .collect();
        let ids = |p: &[FrontierPoint]| -> Vec<String> {
            nondominated_sort_2d(p, 0.0)
                .unwrap()
                .into_iter()
                .map(|i| p[i].id.clone())
                .collect()
        };
        let mut shuffled = pts.clone();
        shuffled.reverse();
        assert_eq!(ids(&pts), ids(&shuffled));
    }

    #[test]
    fn nan_rejected() {
        let pts = vec![FrontierPoint::new(f64::NAN, 1.0, "n")];
        assert!(matches!(
            nondominated_sort_2d(&pts, 0.0),
            Err(ExplorerError::NonFinite(_))
        ));
    }

    #[test]
    fn epsilon_thins_staircase() {
        let pts = vec![
            FrontierPoint::new(0.50, 1.0, "a"),
            FrontierPoint::new(0.51, 2.0, "b"),
            FrontierPoint::new(0.70, 2.05, "c"),
            FrontierPoint::new(0.90, 8.0, "d"),
        ];
        assert_eq!(nondominated_sort_2d(&pts, 0.0).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(nondominated_sort_2d(&pts, 0.1).unwrap(), vec![0, 2, 3]);
    }

    #[test]
    fn accumulator_matches_batch_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cands: Vec<Candidate> = (0..30_000)
            .map(|k| Candidate {
                accuracy: rng.random_range(0..200) as f64 / 200.0,
                latency: rng.random_range(0..300) as f64,
                key: k,
            })
            .collect();
        let tie = |a: u64, b: u64| b.cmp(&a);
        let mut acc = FrontierAccumulator::new(tie);
        for c in &cands {
            acc.offer(*c);
        }
        let xy: Vec<(f64, f64)> = cands.iter().map(|c| (c.accuracy, c.latency)).collect();
        let expected: Vec<Candidate> = frontier_sweep(&xy, 0.0, |a, b| tie(a as u64, b as u64))
            .into_iter()
            .map(|i| cands[i])
            .collect();
        assert_eq!(acc.finish(), expected);
    }
}

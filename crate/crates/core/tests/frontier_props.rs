use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wfc_core::explorer::{nondominated_sort_2d, FrontierPoint};
use wfc_core::profile::prune_profiles;
use wfc_core::testkit::random_points;
use wfc_core::{Profile, RoleId, SubAgentConfig};

fn dominated(p: &FrontierPoint, q: &FrontierPoint) -> bool {
    q.accuracy >= p.accuracy
        && q.latency <= p.latency
        && (q.accuracy > p.accuracy || q.latency < p.latency)
}

fn pairs(points: &[FrontierPoint], idx: &[usize]) -> BTreeSet<(u64, u64)> {
    idx.iter()
        .map(|&i| (points[i].accuracy.to_bits(), points[i].latency.to_bits()))
        .collect()
}

proptest! {
    #[test]
    fn matches_quadratic_oracle(seed in any::<u64>(), n in 0usize..200) {
        let points = random_points(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let kept = nondominated_sort_2d(&points, 0.0).unwrap();
        let oracle: BTreeSet<(u64, u64)> = points
            .iter()
            .filter(|p| !points.iter().any(|q| dominated(p, q)))
            .map(|p| (p.accuracy.to_bits(), p.latency.to_bits()))
            .collect();
        prop_assert_eq!(pairs(&points, &kept), oracle);
        prop_assert_eq!(kept.len(), pairs(&points, &kept).len());
    }

    #[test]
    fn permutation_invariant(seed in any::<u64>(), n in 1usize..150) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = random_points(&mut rng, n);
        let mut shuffled = points.clone();
        shuffled.shuffle(&mut rng);
        let a: Vec<&str> = nondominated_sort_2d(&points, 0.0).unwrap().into_iter().map(|i| points[i].id.as_str()).collect();
        let b: Vec<&str> = nondominated_sort_2d(&shuffled, 0.0).unwrap().into_iter().map(|i| shuffled[i].id.as_str()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn frontier_is_a_strict_staircase(seed in any::<u64>(), n in 1usize..150, eps in prop_oneof![Just(0.0), 0.0..0.05f64]) {
        let points = random_points(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let kept = nondominated_sort_2d(&points, eps).unwrap();
        let distinct: BTreeSet<u64> = points.iter().map(|p| p.accuracy.to_bits()).collect();
        prop_assert!(!kept.is_empty());
        prop_assert!(kept.len() <= distinct.len());
        for w in kept.windows(2) {
            prop_assert!(points[w[0]].latency < points[w[1]].latency);
            prop_assert!(points[w[0]].accuracy < points[w[1]].accuracy);
        }
    }

    #[test]
    fn pruning_is_a_staircase_and_idempotent(seed in any::<u64>(), n in 1usize..40) {
        let points = random_points(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let role = RoleId::new("r");
        let profiles: Vec<Profile> = points
            .iter()
            .enumerate()
            .map(|(i, p)| Profile::new(role.clone(), SubAgentConfig::new("m", i as u32 + 1), p.accuracy, p.latency))
            .collect();
        let once = prune_profiles(role.clone(), profiles.clone(), 0.0).unwrap();
        prop_assert_eq!(once.before_count(), n);
        prop_assert_eq!(once.len() + once.dropped_count, n);
        let mut by_latency = once.kept.clone();
        by_latency.sort_by(|a, b| a.latency.total_cmp(&b.latency));
        for w in by_latency.windows(2) {
            prop_assert!(w[0].latency < w[1].latency && w[0].accuracy < w[1].accuracy);
        }
        for p in &profiles {
            prop_assert!(once.kept.iter().any(|k| k.accuracy >= p.accuracy && k.latency <= p.latency));
        }
        let twice = prune_profiles(role, once.kept.clone(), 0.0).unwrap();
        prop_assert_eq!(twice.kept, once.kept);
        prop_assert_eq!(twice.dropped_count, 0);
    }
}

//! Observation bookkeeping: per-base-arm value logs are stitched into
//! per-action sample counts `T_j` and mean estimates `f̂_j`.
//!
//! The s-th action sample pairs the s-th logged value of every base-arm in
//! `F_j` (FIFO alignment), so `T_j = min_{i∈F_j} log_len(i)` at all times.
//! Base-arms are i.i.d. over time and mutually independent, which makes
//! any fixed pairing unbiased; FIFO is deterministic and discards nothing.

use std::sync::Arc;

use crate::env::RewardKind;
use crate::graph::SideObsGraph;

/// Append-only observation logs plus the stitched per-action statistics.
#[derive(Debug, Clone)]
pub struct ObservationLedger {
    graph: Arc<SideObsGraph>,
    reward_kind: RewardKind,
    logs: Vec<Vec<f64>>,
    counts: Vec<u64>,
    means: Vec<f64>,
    /// `{j : i ∈ F_j}` per base-arm, for change propagation.
    reward_observers: Vec<Vec<usize>>,
}

impl ObservationLedger {
    pub fn new(graph: Arc<SideObsGraph>, reward_kind: RewardKind) -> Self {
        let mut reward_observers = vec![Vec::new(); graph.num_base_arms()];
        for j in 0..graph.num_actions() {
            for &i in graph.reward_set(j) {
                reward_observers[i].push(j);
            }
        }
        Self {
            logs: vec![Vec::new(); graph.num_base_arms()],
            counts: vec![0; graph.num_actions()],
            means: vec![0.0; graph.num_actions()],
            reward_observers,
            reward_kind,
            graph,
        }
    }

    /// Appends one batch of observations (at most one value per base-arm,
    /// as produced by a single pull) and advances every action whose
    /// stitched count grew. Returns those actions, ascending.
    pub fn record(&mut self, observations: &[(usize, f64)]) -> Vec<usize> {
        let mut candidates: Vec<usize> = Vec::new();
        for &(i, value) in observations {
            debug_assert!((0.0..=1.0).contains(&value));
            self.logs[i].push(value);
            candidates.extend_from_slice(&self.reward_observers[i]);
        }
        candidates.sort_unstable();
        candidates.dedup();
        let mut advanced = Vec::new();
        let mut tuple = Vec::new();
        for j in candidates {
            let reward_set = self.graph.reward_set(j);
            let available = reward_set
                .iter()
                .map(|&i| self.logs[i].len() as u64)
                .min()
                .expect("reward sets are nonempty");
            if available > self.counts[j] {
                for s in self.counts[j]..available {
                    tuple.clear();
                    tuple.extend(reward_set.iter().map(|&i| self.logs[i][s as usize]));
                    let reward = self.reward_kind.apply(&tuple);
                    let n = s + 1;
                    self.means[j] += (reward - self.means[j]) / n as f64;
                }
                self.counts[j] = available;
                advanced.push(j);
            }
        }
        advanced
    }

    /// Stitched observation count `T_j`.
    pub fn count(&self, action: usize) -> u64 {
        self.counts[action]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Stitched mean estimate `f̂_j` (zero before the first sample).
    pub fn mean(&self, action: usize) -> f64 {
        self.means[action]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Point-in-time copy of `(T, f̂)` for the elimination subroutine.
    pub fn snapshot(&self) -> (Vec<u64>, Vec<f64>) {
        (self.counts.clone(), self.means.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SideObsGraph;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// K=1 action rewarded by arms {0,1}, observing both; N=2.
    fn two_arm_path_graph() -> Arc<SideObsGraph> {
        Arc::new(
            SideObsGraph::build(1, 2, &[(0, 0), (0, 1)], &[(0, 0), (0, 1)]).unwrap(),
        )
    }

    /// Social graph on n nodes, action j observes only itself.
    fn isolated_social(n: usize) -> Arc<SideObsGraph> {
        let edges: Vec<(usize, usize)> = (0..n).map(|j| (j, j)).collect();
        Arc::new(SideObsGraph::build(n, n, &edges, &edges).unwrap())
    }

    #[test]
    fn min_rule_forces_count() {
        let g = two_arm_path_graph();
        let mut ledger = ObservationLedger::new(g, RewardKind::PathDelay { budget: 5.0 });
        // arm 0 gets 3 values, arm 1 gets 5
        for _ in 0..3 {
            ledger.record(&[(0, 1.0)]);
        }
        for _ in 0..5 {
            ledger.record(&[(1, 0.0)]);
        }
        assert_eq!(ledger.count(0), 3);
    }

    #[test]
    fn single_arm_reduces_to_plain_statistics() {
        let g = isolated_social(1);
        let mut ledger = ObservationLedger::new(g, RewardKind::Identity);
        let values = [1.0, 0.0, 1.0, 1.0];
        for &v in &values {
            let adv = ledger.record(&[(0, v)]);
            assert_eq!(adv, vec![0]);
        }
        assert_eq!(ledger.count(0), 4);
        assert!((ledger.mean(0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn path_delay_stitching_hand_example() {
        let g = two_arm_path_graph();
        let mut ledger = ObservationLedger::new(g, RewardKind::PathDelay { budget: 5.0 });
        ledger.record(&[(0, 1.0), (1, 0.0)]);
        ledger.record(&[(0, 0.0), (1, 0.0)]);
        assert_eq!(ledger.count(0), 2);
        // ((1 - 1/5) + (1 - 0/5)) / 2 = 0.9
        assert!((ledger.mean(0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn snapshot_is_pure_and_starts_zeroed() {
        let g = isolated_social(2);
        let mut ledger = ObservationLedger::new(g, RewardKind::Identity);
        let (t, f) = ledger.snapshot();
        assert_eq!(t, vec![0, 0]);
        assert_eq!(f, vec![0.0, 0.0]);
        ledger.record(&[(0, 1.0)]);
        let s1 = ledger.snapshot();
        let s2 = ledger.snapshot();
        assert_eq!(s1, s2);
        assert_eq!(s1.0, vec![1, 0]);
    }

    #[test]
    fn unrelated_arm_changes_nothing() {
        // Action 0 observes arm 1 but is rewarded only by arm 0.
        let g = Arc::new(
            SideObsGraph::build(2, 2, &[(0, 0), (0, 1), (1, 1)], &[(0, 0), (1, 1)]).unwrap(),
        );
        let mut ledger = ObservationLedger::new(g, RewardKind::Identity);
        let advanced = ledger.record(&[(1, 1.0)]);
        assert_eq!(advanced, vec![1]);
        assert_eq!(ledger.count(0), 0);
        assert_eq!(ledger.mean(0), 0.0);
    }

    #[test]
    fn stitching_is_unbiased_monte_carlo() {
        // Two independent arms with means 0.7 and 0.4, path-delay reward
        // with B = 2: mu = 1 - (0.7 + 0.4)/2 = 0.45.
        let g = two_arm_path_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let replications = 10_000;
        let per_rep = 50;
        let mut grand = 0.0;
        for _ in 0..replications {
            let mut ledger =
                ObservationLedger::new(g.clone(), RewardKind::PathDelay { budget: 2.0 });
            for _ in 0..per_rep {
                let x0 = if rng.random::<f64>() < 0.7 { 1.0 } else { 0.0 };
                let x1 = if rng.random::<f64>() < 0.4 { 1.0 } else { 0.0 };
                ledger.record(&[(0, x0), (1, x1)]);
            }
            grand += ledger.mean(0);
        }
        grand /= replications as f64;
        assert!((grand - 0.45).abs() < 0.01, "grand mean {grand}");
    }

    #[test]
    fn identical_sequences_bit_identical() {
        let g = two_arm_path_graph();
        let mut a = ObservationLedger::new(g.clone(), RewardKind::PathDelay { budget: 5.0 });
        let mut b = ObservationLedger::new(g, RewardKind::PathDelay { budget: 5.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let obs = [
                (0, f64::from(rng.random::<bool>())),
                (1, f64::from(rng.random::<bool>())),
            ];
            a.record(&obs);
            b.record(&obs);
        }
        assert_eq!(a.snapshot(), b.snapshot());
        assert_eq!(a.mean(0).to_bits(), b.mean(0).to_bits());
    }

    proptest! {
        /// T_j equals the min-rule on raw log lengths, counts never
        /// decrease, and means stay in [0,1].
        #[test]
        fn min_rule_invariant(batches in proptest::collection::vec(
            proptest::collection::vec((0usize..3, 0u8..=1), 0..4), 0..40)
        ) {
            let g = Arc::new(SideObsGraph::build(
                2,
                3,
                &[(0, 0), (0, 1), (1, 1), (1, 2)],
                &[(0, 0), (0, 1), (1, 2)],
            ).unwrap());
            let mut ledger = ObservationLedger::new(g.clone(), RewardKind::PathDelay { budget: 4.0 });
            let mut lens = [0u64; 3];
            let mut prev_counts = vec![0u64; 2];
            for batch in batches {
                // dedupe arms within a batch (a pull observes each arm once)
                let mut seen = [false; 3];
                let obs: Vec<(usize, f64)> = batch
                    .into_iter()
                    .filter(|&(i, _)| !std::mem::replace(&mut seen[i], true))
                    .map(|(i, v)| (i, f64::from(v)))
                    .collect();
                for &(i, _) in &obs {
                    lens[i] += 1;
                }
                ledger.record(&obs);
                for j in 0..2 {
                    let expect: u64 = g.reward_set(j).iter().map(|&i| lens[i]).min().unwrap();
                    prop_assert_eq!(ledger.count(j), expect);
                    prop_assert!(ledger.count(j) >= prev_counts[j]);
                    prop_assert!((0.0..=1.0).contains(&ledger.mean(j)));
                    prev_counts[j] = ledger.count(j);
                }
            }
        }
    }
}

//! The ground-truth stochastic environment: Bernoulli base-arm processes,
//! activation-set draws, reward functions, and the true means used for
//! pseudo-regret accounting.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{ActivationStructure, SideObsGraph};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnvError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("action {action} mean {mean} is outside [0,1]")]
    MeanOutOfRange { action: usize, mean: f64 },
}

/// How an action's reward is computed from its `F_j` observation tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RewardKind {
    /// `reward = X_j`; requires `F_j = {j}`.
    Identity,
    /// `reward = 1 - Σ_{i∈F_j} X_i / B` (path delay with budget `B`).
    PathDelay { budget: f64 },
}

impl RewardKind {
    /// Applies the reward function to an `F_j` tuple.
    pub fn apply(&self, tuple: &[f64]) -> f64 {
        match self {
            RewardKind::Identity => {
                debug_assert_eq!(tuple.len(), 1);
                tuple[0]
            }
            RewardKind::PathDelay { budget } => 1.0 - tuple.iter().sum::<f64>() / budget,
        }
    }
}

/// Immutable ground truth for one experiment: graph, activation sets,
/// base-arm means, and the derived action means, per-set optima and gaps.
#[derive(Debug, Clone)]
pub struct Environment {
    graph: Arc<SideObsGraph>,
    act: ActivationStructure,
    base_means: Vec<f64>,
    reward_kind: RewardKind,
    action_means: Vec<f64>,
    set_best: Vec<usize>,
    set_best_mean: Vec<f64>,
}

impl Environment {
    pub fn new(
        graph: Arc<SideObsGraph>,
        act: ActivationStructure,
        base_means: Vec<f64>,
        reward_kind: RewardKind,
    ) -> Result<Self, EnvError> {
        act.validate_for(graph.num_actions())
            .map_err(|e| EnvError::InvalidParams(e.to_string()))?;
        if base_means.len() != graph.num_base_arms() {
            return Err(EnvError::InvalidParams(format!(
                "got {} base means for {} base-arms",
                base_means.len(),
                graph.num_base_arms()
            )));
        }
        if let Some((i, &m)) = base_means
            .iter()
            .enumerate()
            .find(|(_, &m)| !(0.0..=1.0).contains(&m))
        {
            return Err(EnvError::InvalidParams(format!(
                "base-arm {i} mean {m} is outside [0,1]"
            )));
        }
        match reward_kind {
            RewardKind::Identity => {
                for j in 0..graph.num_actions() {
                    if graph.reward_set(j) != [j] {
                        return Err(EnvError::InvalidParams(format!(
                            "identity reward requires F_j = {{j}}, violated by action {j}"
                        )));
                    }
                }
            }
            RewardKind::PathDelay { budget } => {
                if !(budget > 0.0) {
                    return Err(EnvError::InvalidParams(format!(
                        "delay budget must be positive, got {budget}"
                    )));
                }
                for j in 0..graph.num_actions() {
                    if graph.reward_set(j).len() as f64 > budget {
                        return Err(EnvError::InvalidParams(format!(
                            "action {j} has |F_j| = {} > budget {budget}, rewards would leave [0,1]",
                            graph.reward_set(j).len()
                        )));
                    }
                }
            }
        }
        let action_means: Vec<f64> = (0..graph.num_actions())
            .map(|j| {
                let tuple: Vec<f64> = graph.reward_set(j).iter().map(|&i| base_means[i]).collect();
                reward_kind.apply(&tuple)
            })
            .collect();
        for (j, &m) in action_means.iter().enumerate() {
            if !(0.0..=1.0).contains(&m) {
                return Err(EnvError::MeanOutOfRange { action: j, mean: m });
            }
        }
        let mut set_best = Vec::with_capacity(act.num_sets());
        let mut set_best_mean = Vec::with_capacity(act.num_sets());
        for a in 0..act.num_sets() {
            // lowest index among the argmax
            let mut best = act.set(a)[0];
            for &j in &act.set(a)[1..] {
                if action_means[j] > action_means[best] {
                    best = j;
                }
            }
            set_best.push(best);
            set_best_mean.push(action_means[best]);
        }
        Ok(Self {
            graph,
            act,
            base_means,
            reward_kind,
            action_means,
            set_best,
            set_best_mean,
        })
    }

    pub fn graph(&self) -> &Arc<SideObsGraph> {
        &self.graph
    }

    pub fn activation(&self) -> &ActivationStructure {
        &self.act
    }

    pub fn reward_kind(&self) -> RewardKind {
        self.reward_kind
    }

    pub fn base_means(&self) -> &[f64] {
        &self.base_means
    }

    /// Samples the index of the activation set for one time step.
    pub fn draw_active_set(&self, rng: &mut ChaCha8Rng) -> usize {
        let r: f64 = rng.random();
        let mut acc = 0.0;
        for a in 0..self.act.num_sets() {
            acc += self.act.prob(a);
            if r < acc {
                return a;
            }
        }
        self.act.num_sets() - 1
    }

    /// Pulls an action: draws every base-arm in `C_j` independently and
    /// returns the realized reward together with all observations.
    ///
    /// Availability is the caller's concern; any `j < K` can be pulled.
    pub fn pull(&self, action: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<(usize, f64)>) {
        let observations: Vec<(usize, f64)> = self
            .graph
            .observe_set(action)
            .iter()
            .map(|&i| {
                let x = if rng.random::<f64>() < self.base_means[i] {
                    1.0
                } else {
                    0.0
                };
                (i, x)
            })
            .collect();
        let reward = self.reward_from_observations(action, &observations);
        (reward, observations)
    }

    /// Applies `f_j` to the `F_j` entries of a pull's observation list.
    pub fn reward_from_observations(&self, action: usize, observations: &[(usize, f64)]) -> f64 {
        let c = self.graph.observe_set(action);
        let tuple: Vec<f64> = self
            .graph
            .reward_set(action)
            .iter()
            .map(|&i| {
                let idx = c.binary_search(&i).expect("F_j is a subset of C_j");
                observations[idx].1
            })
            .collect();
        self.reward_kind.apply(&tuple)
    }

    /// True mean reward `μ_j`.
    pub fn action_mean(&self, action: usize) -> f64 {
        self.action_means[action]
    }

    pub fn action_means(&self) -> &[f64] {
        &self.action_means
    }

    /// Lowest-index optimal action `i*_a` of a set.
    pub fn best_action(&self, set: usize) -> usize {
        self.set_best[set]
    }

    /// `μ*_a`.
    pub fn best_mean(&self, set: usize) -> f64 {
        self.set_best_mean[set]
    }

    /// Suboptimality gap `Δ_{j,a} = μ*_a - μ_j`.
    pub fn gap(&self, set: usize, action: usize) -> f64 {
        self.set_best_mean[set] - self.action_means[action]
    }

    /// Per-step pseudo-regret of playing `action` while `set` is active.
    pub fn regret_step(&self, set: usize, action: usize) -> f64 {
        self.gap(set, action)
    }
}

/// Experiment mean assignment: a seeded random subset of `optimal_count`
/// base-arms gets `optimal_mu`, the rest draw uniformly from
/// `others_range`.
pub fn assign_means(
    num_base_arms: usize,
    optimal_count: usize,
    optimal_mu: f64,
    others_range: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, EnvError> {
    if optimal_count > num_base_arms {
        return Err(EnvError::InvalidParams(format!(
            "optimal_count {optimal_count} exceeds {num_base_arms} base-arms"
        )));
    }
    if !(0.0..=1.0).contains(&optimal_mu)
        || !(0.0..=1.0).contains(&others_range.0)
        || !(0.0..=1.0).contains(&others_range.1)
        || others_range.0 > others_range.1
    {
        return Err(EnvError::InvalidParams(
            "means must lie in [0,1] with an ordered range".into(),
        ));
    }
    let mut indices: Vec<usize> = (0..num_base_arms).collect();
    // Fisher-Yates prefix shuffle picks the optimal subset.
    for i in 0..optimal_count {
        let pick = rng.random_range(i..num_base_arms);
        indices.swap(i, pick);
    }
    let mut means = vec![0.0; num_base_arms];
    for (slot, &i) in indices.iter().enumerate() {
        means[i] = if slot < optimal_count {
            optimal_mu
        } else {
            rng.random_range(others_range.0..=others_range.1)
        };
    }
    Ok(means)
}

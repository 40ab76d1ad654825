//! Bandit policies: the LP-scheduled elimination policy (`ucb-lp-a`), its
//! no-LP variant (`ucb-e`), and the `ucb-n`, `ucb-maxn` and `ucb1`
//! baselines, all adapted to stochastic activation sets.
//!
//! The elimination machinery runs in rounds `m` with gap proxy
//! `Δ̃_m = 2^{-m}` and per-action sample quota
//! `n(m) = ⌈2 ln(T Δ̃_m²)/Δ̃_m²⌉`. Two phases alternate:
//!
//! * forced-sync: all sets share round progression; the pulled action is
//!   drawn from the LP distribution `z*_{·,a}/Z*_a` over the whole active
//!   set `K_a` (eliminated actions included), and every set eliminates at
//!   the same time once each one's surviving actions meet the quota;
//! * independent: each set fills its own deficit set `B^def_a` by pulling
//!   the least-sampled deficient action, and eliminates alone.
//!
//! Phase selection compares `1/v_min` (price of one unit of coverage under
//! z*-sampling) against `2 Δ̃_a R`, the per-unit regret of uniform
//! sampling over the surviving actions.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::graph::{ActivationStructure, SideObsGraph};
use crate::ledger::ObservationLedger;
use crate::lp::LpSolution;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolicyError {
    #[error("round {round} outside the legal range 0..{cap}")]
    RoundOutOfRange { round: u32, cap: u32 },
    #[error("empty action set")]
    EmptyInput,
    #[error("unknown policy id {0:?}")]
    UnknownPolicy(String),
    #[error("policy {0:?} needs a solved observability LP")]
    MissingLp(&'static str),
}

/// Policy identifiers accepted by the harness and CLI.
pub const POLICY_IDS: [&str; 6] = ["ucb-lp-a", "ucb-e", "ucb-n", "ucb-maxn", "ucb1", "oracle"];

/// One decision step: observe the active set, pull an action through the
/// environment, digest the feedback. Returns the pulled action.
pub trait Policy: Send {
    fn step(&mut self, active_set: usize, rng: &mut ChaCha8Rng) -> usize;
}

/// `Δ̃_m = 2^{-m}` (exact in f64 for every legal round).
pub fn delta_tilde(m: u32) -> f64 {
    0.5f64.powi(m as i32)
}

/// Largest legal round bound `⌊½ log₂ T⌋`, computed in integers.
pub fn round_cap(horizon: u64) -> u32 {
    let mut c = 0u32;
    while 4u128.pow(c + 1) <= horizon as u128 {
        c += 1;
    }
    c
}

/// Per-action sample quota `n(m) = ⌈2 ln(T Δ̃_m²)/Δ̃_m²⌉`, defined for
/// `m` in `{0, …, ⌊½ log₂ T⌋ - 1}` (which guarantees `n ≥ 1`).
pub fn n_of(m: u32, horizon: u64) -> Result<u64, PolicyError> {
    let cap = round_cap(horizon);
    if m >= cap {
        return Err(PolicyError::RoundOutOfRange { round: m, cap });
    }
    let d2 = delta_tilde(m) * delta_tilde(m);
    Ok((2.0 * (horizon as f64 * d2).ln() / d2).ceil() as u64)
}

/// Effective number of pulls `R = Σ_i P_dir(i)/(P_dir(i)+P_free(i))` over
/// the union of the per-set active sets, where `P_dir` is the chance of a
/// direct pull of `i` under uniform sampling and `P_free` the chance of a
/// free full sample via some other active action.
pub fn compute_r(
    g: &SideObsGraph,
    act: &ActivationStructure,
    active_sets: &[BTreeSet<usize>],
) -> f64 {
    debug_assert_eq!(active_sets.len(), act.num_sets());
    let mut union: BTreeSet<usize> = BTreeSet::new();
    for set in active_sets {
        debug_assert!(!set.is_empty());
        union.extend(set.iter().copied());
    }
    let mut total = 0.0;
    for &i in &union {
        let mut p_dir = 0.0;
        let mut p_free = 0.0;
        for (a, b_a) in active_sets.iter().enumerate() {
            let w = act.prob(a) / b_a.len() as f64;
            if b_a.contains(&i) {
                p_dir += w;
            }
            for &j in b_a.iter() {
                if j != i && g.covers(j, i) {
                    p_free += w;
                }
            }
        }
        total += p_dir / (p_dir + p_free);
    }
    total
}

/// Forced-sync trigger: `1/v_min <= 2 Δ̃ R`.
pub fn phase_condition(v_min: f64, delta: f64, r: f64) -> bool {
    1.0 / v_min <= 2.0 * delta * r
}

/// One elimination step: drop every action whose UCB falls strictly below
/// the best LCB, using `W(T_j, m) = sqrt(ln(T Δ̃_m²)/(2 T_j))`. The
/// max-LCB action always survives, so the result is never empty.
pub fn eliminate(
    m: u32,
    active: &BTreeSet<usize>,
    means: &[f64],
    counts: &[u64],
    horizon: u64,
) -> Result<(u32, BTreeSet<usize>), PolicyError> {
    if active.is_empty() {
        return Err(PolicyError::EmptyInput);
    }
    let d2 = delta_tilde(m) * delta_tilde(m);
    let log_term = (horizon as f64 * d2).ln();
    let width = |j: usize| (log_term / (2.0 * counts[j] as f64)).sqrt();
    let threshold = active
        .iter()
        .map(|&j| means[j] - width(j))
        .fold(f64::NEG_INFINITY, f64::max);
    let survivors: BTreeSet<usize> = active
        .iter()
        .copied()
        .filter(|&j| means[j] + width(j) >= threshold)
        .collect();
    Ok((m + 1, survivors))
}

/// Per-set sampling distributions `z*_{·,a}/Z*_a` plus `v_min`, extracted
/// from a solved LP.
#[derive(Debug, Clone)]
pub struct ZSampler {
    v_min: f64,
    /// Per set: cumulative weights aligned with `act.set(a)`.
    cdfs: Vec<Vec<f64>>,
}

impl ZSampler {
    pub fn new(sol: &LpSolution, act: &ActivationStructure) -> Self {
        let cdfs = (0..act.num_sets())
            .map(|a| {
                let total = sol.z_total(a);
                let mut acc = 0.0;
                act.set(a)
                    .iter()
                    .map(|&j| {
                        acc += sol.z(a, j) / total;
                        acc
                    })
                    .collect()
            })
            .collect();
        Self {
            v_min: sol.v_min(),
            cdfs,
        }
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    /// Draws an action of `K_a` with probability `z*_{j,a}/Z*_a`.
    pub fn sample(&self, act: &ActivationStructure, set: usize, rng: &mut ChaCha8Rng) -> usize {
        let r: f64 = rng.random();
        let cdf = &self.cdfs[set];
        let actions = act.set(set);
        for (pos, &c) in cdf.iter().enumerate() {
            if r < c {
                return actions[pos];
            }
        }
        actions[actions.len() - 1]
    }
}

/// Round-based elimination policy over activation sets, with optional
/// LP-scheduled forced-sync sampling: `ucb-lp-a` when built with an LP
/// solution, `ucb-e` without.
pub struct EliminationUcb {
    env: Arc<Environment>,
    lp: Option<ZSampler>,
    strict_completion: bool,
    horizon: u64,
    m_cap: u32,
    ledger: ObservationLedger,
    rounds: Vec<u32>,
    active: Vec<BTreeSet<usize>>,
    deficit: Vec<BTreeSet<usize>>,
    end_round: Vec<bool>,
    round_sync: bool,
    quota: Vec<u64>,
    strict_pending: Vec<usize>,
    r_value: f64,
    sets_of_action: Vec<Vec<usize>>,
    eliminated_at: Vec<BTreeMap<usize, u32>>,
}

impl EliminationUcb {
    /// The LP-scheduled policy (`ucb-lp-a`). `strict_completion` switches
    /// the forced-sync round completion test from the surviving actions
    /// `B_b` to the full set `K_b`.
    pub fn ucb_lp_a(
        env: Arc<Environment>,
        sol: &LpSolution,
        horizon: u64,
        strict_completion: bool,
    ) -> Self {
        let sampler = ZSampler::new(sol, env.activation());
        Self::build(env, Some(sampler), horizon, strict_completion)
    }

    /// Per-set elimination UCB without z*-sampling (`ucb-e`). Side
    /// observations still feed the shared ledger.
    pub fn ucb_e(env: Arc<Environment>, horizon: u64) -> Self {
        Self::build(env, None, horizon, false)
    }

    fn build(
        env: Arc<Environment>,
        lp: Option<ZSampler>,
        horizon: u64,
        strict_completion: bool,
    ) -> Self {
        let m_cap = round_cap(horizon);
        assert!(m_cap >= 1, "horizon {horizon} leaves no legal rounds");
        let act = env.activation();
        let num_sets = act.num_sets();
        let ledger = ObservationLedger::new(env.graph().clone(), env.reward_kind());
        let quota0 = n_of(0, horizon).expect("round 0 is legal");
        let active: Vec<BTreeSet<usize>> = (0..num_sets)
            .map(|a| act.set(a).iter().copied().collect())
            .collect();
        let mut sets_of_action = vec![Vec::new(); env.graph().num_actions()];
        for a in 0..num_sets {
            for &j in act.set(a) {
                sets_of_action[j].push(a);
            }
        }
        let r_value = compute_r(env.graph(), act, &active);
        let strict_pending = (0..num_sets).map(|a| act.set(a).len()).collect();
        Self {
            deficit: active.clone(),
            active,
            rounds: vec![0; num_sets],
            end_round: vec![false; num_sets],
            round_sync: false,
            quota: vec![quota0; num_sets],
            strict_pending,
            r_value,
            sets_of_action,
            eliminated_at: vec![BTreeMap::new(); num_sets],
            ledger,
            env,
            lp,
            strict_completion,
            horizon,
            m_cap,
        }
    }

    /// Current round `m_a`.
    pub fn round(&self, set: usize) -> u32 {
        self.rounds[set]
    }

    /// Surviving actions `B_a`.
    pub fn surviving(&self, set: usize) -> &BTreeSet<usize> {
        &self.active[set]
    }

    /// The round at whose end `action` was eliminated from `set`.
    pub fn elimination_round(&self, set: usize, action: usize) -> Option<u32> {
        self.eliminated_at[set].get(&action).copied()
    }

    pub fn in_forced_sync(&self) -> bool {
        self.round_sync
    }

    pub fn ledger(&self) -> &ObservationLedger {
        &self.ledger
    }

    fn quota_met(&self, set: usize) -> bool {
        if self.strict_completion {
            self.strict_pending[set] == 0
        } else {
            self.deficit[set].is_empty()
        }
    }

    /// Greatest stitched mean among survivors, lowest index on ties.
    fn exploit(&self, set: usize) -> usize {
        let mut best = *self.active[set].iter().next().expect("B_a is nonempty");
        for &j in self.active[set].iter().skip(1) {
            if self.ledger.mean(j) > self.ledger.mean(best) {
                best = j;
            }
        }
        best
    }

    /// Least-sampled deficient action, lowest index on ties.
    fn deficit_pick(&self, set: usize) -> usize {
        let mut best = *self.deficit[set].iter().next().expect("deficit is nonempty");
        for &j in self.deficit[set].iter().skip(1) {
            if self.ledger.count(j) < self.ledger.count(best) {
                best = j;
            }
        }
        best
    }

    fn do_eliminate(&mut self, set: usize) {
        let m = self.rounds[set];
        let (m_new, survivors) = eliminate(
            m,
            &self.active[set],
            self.ledger.means(),
            self.ledger.counts(),
            self.horizon,
        )
        .expect("B_a is nonempty");
        for &j in &self.active[set] {
            if !survivors.contains(&j) {
                self.eliminated_at[set].insert(j, m);
            }
        }
        self.rounds[set] = m_new;
        self.active[set] = survivors;
        self.end_round[set] = false;
        if m_new >= self.m_cap {
            self.quota[set] = u64::MAX;
            self.deficit[set].clear();
            self.strict_pending[set] = 0;
        } else {
            let quota = n_of(m_new, self.horizon).expect("round below the cap");
            self.quota[set] = quota;
            self.deficit[set] = self.active[set]
                .iter()
                .copied()
                .filter(|&j| self.ledger.count(j) < quota)
                .collect();
            self.strict_pending[set] = self
                .env
                .activation()
                .set(set)
                .iter()
                .filter(|&&j| self.ledger.count(j) < quota)
                .count();
        }
    }

    fn after_record(&mut self, changed: &[usize]) {
        let num_sets = self.env.activation().num_sets();
        for &j in changed {
            for idx in 0..self.sets_of_action[j].len() {
                let b = self.sets_of_action[j][idx];
                if self.rounds[b] >= self.m_cap {
                    continue;
                }
                let count = self.ledger.count(j);
                if count >= self.quota[b] {
                    self.deficit[b].remove(&j);
                    if count == self.quota[b] && self.strict_pending[b] > 0 {
                        self.strict_pending[b] -= 1;
                    }
                }
            }
        }
        let mut eliminated_any = false;
        if self.round_sync {
            for b in 0..num_sets {
                if self.rounds[b] < self.m_cap && !self.end_round[b] && self.quota_met(b) {
                    self.end_round[b] = true;
                }
            }
            let all_ended = (0..num_sets).all(|b| self.rounds[b] >= self.m_cap || self.end_round[b]);
            if all_ended {
                self.round_sync = false;
                for b in 0..num_sets {
                    if self.rounds[b] < self.m_cap {
                        self.do_eliminate(b);
                        eliminated_any = true;
                    }
                }
            }
        }
        if !self.round_sync {
            // Independent-phase elimination; also catches sets whose fresh
            // quota is already met by surplus samples (cascade).
            loop {
                let mut fired = false;
                for b in 0..num_sets {
                    if self.rounds[b] < self.m_cap && self.deficit[b].is_empty() {
                        self.do_eliminate(b);
                        eliminated_any = true;
                        fired = true;
                    }
                }
                if !fired {
                    break;
                }
            }
        }
        if eliminated_any {
            self.r_value = compute_r(self.env.graph(), self.env.activation(), &self.active);
        }
    }
}

impl Policy for EliminationUcb {
    fn step(&mut self, active_set: usize, rng: &mut ChaCha8Rng) -> usize {
        let a = active_set;
        if !self.round_sync {
            if let Some(lp) = &self.lp {
                if phase_condition(lp.v_min(), delta_tilde(self.rounds[a]), self.r_value) {
                    self.round_sync = true;
                }
            }
        }
        let chosen = if self.rounds[a] >= self.m_cap {
            self.exploit(a)
        } else if self.active[a].len() == 1 {
            *self.active[a].iter().next().expect("B_a is nonempty")
        } else if self.round_sync {
            self.lp
                .as_ref()
                .expect("forced-sync requires the LP sampler")
                .sample(self.env.activation(), a, rng)
        } else {
            self.deficit_pick(a)
        };
        let (_, observations) = self.env.pull(chosen, rng);
        let changed = self.ledger.record(&observations);
        self.after_record(&changed);
        chosen
    }
}

/// UCB index `f̂ + sqrt(2 ln t / T)`.
pub fn ucb_index(mean: f64, count: u64, t: u64) -> f64 {
    mean + (2.0 * (t as f64).ln() / count as f64).sqrt()
}

/// First unpulled action of the active set (lowest index), if any.
fn forced_init(k_a: &[usize], counts: impl Fn(usize) -> u64) -> Option<usize> {
    k_a.iter().copied().find(|&j| counts(j) == 0)
}

fn argmax_by<F: Fn(usize) -> f64>(actions: impl Iterator<Item = usize>, score: F) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for j in actions {
        let s = score(j);
        match best {
            Some((_, bs)) if s <= bs => {}
            _ => best = Some((j, s)),
        }
    }
    best.expect("nonempty action iterator").0
}

/// UCB over the active set with full side-observation feedback.
pub struct UcbN {
    env: Arc<Environment>,
    ledger: ObservationLedger,
    t: u64,
}

impl UcbN {
    pub fn new(env: Arc<Environment>) -> Self {
        let ledger = ObservationLedger::new(env.graph().clone(), env.reward_kind());
        Self { env, ledger, t: 0 }
    }
}

impl Policy for UcbN {
    fn step(&mut self, active_set: usize, rng: &mut ChaCha8Rng) -> usize {
        self.t += 1;
        let k_a = self.env.activation().set(active_set);
        let chosen = forced_init(k_a, |j| self.ledger.count(j)).unwrap_or_else(|| {
            argmax_by(k_a.iter().copied(), |j| {
                ucb_index(self.ledger.mean(j), self.ledger.count(j), self.t)
            })
        });
        let (_, observations) = self.env.pull(chosen, rng);
        self.ledger.record(&observations);
        chosen
    }
}

/// UCB-MaxN: target the highest-index action, then play the best
/// empirical neighbor available. Neighbors of `i` are the actions whose
/// reward set `i` fully observes (`F_j ⊆ C_i`); on social graphs this is
/// the 1-hop neighborhood.
pub struct UcbMaxN {
    env: Arc<Environment>,
    ledger: ObservationLedger,
    t: u64,
    neighborhoods: Vec<Vec<usize>>,
}

impl UcbMaxN {
    pub fn new(env: Arc<Environment>) -> Self {
        let g = env.graph();
        let k = g.num_actions();
        let neighborhoods = (0..k)
            .map(|i| (0..k).filter(|&j| g.covers(i, j)).collect())
            .collect();
        let ledger = ObservationLedger::new(g.clone(), env.reward_kind());
        Self {
            env,
            ledger,
            t: 0,
            neighborhoods,
        }
    }
}

impl Policy for UcbMaxN {
    fn step(&mut self, active_set: usize, rng: &mut ChaCha8Rng) -> usize {
        self.t += 1;
        let act = self.env.activation();
        let k_a = act.set(active_set);
        let chosen = forced_init(k_a, |j| self.ledger.count(j)).unwrap_or_else(|| {
            let target = argmax_by(k_a.iter().copied(), |j| {
                ucb_index(self.ledger.mean(j), self.ledger.count(j), self.t)
            });
            // target is active, so the intersection is nonempty
            argmax_by(
                self.neighborhoods[target]
                    .iter()
                    .copied()
                    .filter(|&j| act.contains(active_set, j)),
                |j| self.ledger.mean(j),
            )
        });
        let (_, observations) = self.env.pull(chosen, rng);
        self.ledger.record(&observations);
        chosen
    }
}

/// Plain UCB without side-information: only the pulled action's own
/// realized reward updates its statistics.
pub struct Ucb1 {
    env: Arc<Environment>,
    counts: Vec<u64>,
    means: Vec<f64>,
    t: u64,
}

impl Ucb1 {
    pub fn new(env: Arc<Environment>) -> Self {
        let k = env.graph().num_actions();
        Self {
            env,
            counts: vec![0; k],
            means: vec![0.0; k],
            t: 0,
        }
    }

    pub fn count(&self, action: usize) -> u64 {
        self.counts[action]
    }
}

impl Policy for Ucb1 {
    fn step(&mut self, active_set: usize, rng: &mut ChaCha8Rng) -> usize {
        self.t += 1;
        let k_a = self.env.activation().set(active_set);
        let chosen = forced_init(k_a, |j| self.counts[j]).unwrap_or_else(|| {
            argmax_by(k_a.iter().copied(), |j| {
                ucb_index(self.means[j], self.counts[j], self.t)
            })
        });
        let (reward, _) = self.env.pull(chosen, rng);
        self.counts[chosen] += 1;
        self.means[chosen] += (reward - self.means[chosen]) / self.counts[chosen] as f64;
        chosen
    }
}

/// Always plays the true per-set optimum. Zero-regret reference for tests.
pub struct OraclePolicy {
    env: Arc<Environment>,
}

impl OraclePolicy {
    pub fn new(env: Arc<Environment>) -> Self {
        Self { env }
    }
}

impl Policy for OraclePolicy {
    fn step(&mut self, active_set: usize, rng: &mut ChaCha8Rng) -> usize {
        let chosen = self.env.best_action(active_set);
        let _ = self.env.pull(chosen, rng);
        chosen
    }
}

/// Builds a policy by identifier. `ucb-lp-a` needs the solved LP.
pub fn make_policy(
    id: &str,
    env: Arc<Environment>,
    sol: Option<&LpSolution>,
    horizon: u64,
    strict_completion: bool,
) -> Result<Box<dyn Policy>, PolicyError> {
    match id {
        "ucb-lp-a" => {
            let sol = sol.ok_or(PolicyError::MissingLp("ucb-lp-a"))?;
            Ok(Box::new(EliminationUcb::ucb_lp_a(
                env,
                sol,
                horizon,
                strict_completion,
            )))
        }
        "ucb-e" => Ok(Box::new(EliminationUcb::ucb_e(env, horizon))),
        "ucb-n" => Ok(Box::new(UcbN::new(env))),
        "ucb-maxn" => Ok(Box::new(UcbMaxN::new(env))),
        "ucb1" => Ok(Box::new(Ucb1::new(env))),
        "oracle" => Ok(Box::new(OraclePolicy::new(env))),
        other => Err(PolicyError::UnknownPolicy(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::RewardKind;
    use crate::graph::{self, SideObsGraph};
    use crate::lp;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn isolated_social(n: usize) -> SideObsGraph {
        let edges: Vec<(usize, usize)> = (0..n).map(|j| (j, j)).collect();
        SideObsGraph::build(n, n, &edges, &edges).unwrap()
    }

    fn complete_social(n: usize) -> SideObsGraph {
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..n {
                edges.push((j, i));
            }
        }
        let reward: Vec<(usize, usize)> = (0..n).map(|j| (j, j)).collect();
        SideObsGraph::build(n, n, &edges, &reward).unwrap()
    }

    fn env_of(
        g: SideObsGraph,
        sets: Vec<Vec<usize>>,
        probs: Vec<f64>,
        means: Vec<f64>,
    ) -> Arc<Environment> {
        let act = ActivationStructure::new(sets, probs).unwrap();
        Arc::new(Environment::new(Arc::new(g), act, means, RewardKind::Identity).unwrap())
    }

    #[test]
    fn round_cap_values() {
        assert_eq!(round_cap(16), 2);
        assert_eq!(round_cap(15), 1);
        assert_eq!(round_cap(10_000), 6);
        assert_eq!(round_cap(100_000), 8);
    }

    #[test]
    fn quota_values() {
        assert_eq!(n_of(0, 10_000).unwrap(), 19);
        assert_eq!(n_of(1, 10_000).unwrap(), 63);
        assert_eq!(n_of(1, 16).unwrap(), 12);
        assert!(n_of(1, 16).unwrap() >= 1);
        assert_eq!(
            n_of(2, 16).unwrap_err(),
            PolicyError::RoundOutOfRange { round: 2, cap: 2 }
        );
    }

    #[test]
    fn compute_r_no_side_observations_counts_actions() {
        let g = isolated_social(3);
        let act =
            ActivationStructure::new(vec![vec![0, 1], vec![1, 2]], vec![0.3, 0.7]).unwrap();
        let active = vec![
            BTreeSet::from([0usize, 1]),
            BTreeSet::from([1usize, 2]),
        ];
        let r = compute_r(&g, &act, &active);
        assert!((r - 3.0).abs() < 1e-12);
    }

    #[test]
    fn compute_r_mutual_observation_halves() {
        let g = complete_social(2);
        let act = ActivationStructure::new(vec![vec![0, 1]], vec![1.0]).unwrap();
        let active = vec![BTreeSet::from([0usize, 1])];
        let r = compute_r(&g, &act, &active);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compute_r_singleton() {
        let g = isolated_social(1);
        let act = ActivationStructure::new(vec![vec![0]], vec![1.0]).unwrap();
        let r = compute_r(&g, &act, &[BTreeSet::from([0usize])]);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_condition_cases() {
        assert!(phase_condition(0.5, 1.0, 3.0)); // 2 <= 6
        assert!(!phase_condition(0.5, delta_tilde(4), 3.0)); // 2 > 0.375
    }

    #[test]
    fn eliminate_hand_case() {
        // W = sqrt(ln(10^4 * 0.0625)/200) = 0.17941...
        let active = BTreeSet::from([0usize, 1]);
        let means = [0.9, 0.2];
        let counts = [100, 100];
        let (m_new, survivors) = eliminate(2, &active, &means, &counts, 10_000).unwrap();
        assert_eq!(m_new, 3);
        assert_eq!(survivors, BTreeSet::from([0usize]));
    }

    #[test]
    fn eliminate_keeps_equal_stats() {
        let active = BTreeSet::from([0usize, 1, 2]);
        let means = [0.4, 0.4, 0.4];
        let counts = [50, 50, 50];
        let (_, survivors) = eliminate(1, &active, &means, &counts, 10_000).unwrap();
        assert_eq!(survivors.len(), 3);
    }

    #[test]
    fn eliminate_singleton_and_empty() {
        let active = BTreeSet::from([4usize]);
        let means = [0.0; 5];
        let counts = [1; 5];
        let (m_new, survivors) = eliminate(0, &active, &means, &counts, 10_000).unwrap();
        assert_eq!((m_new, survivors.len()), (1, 1));
        assert_eq!(
            eliminate(0, &BTreeSet::new(), &means, &counts, 10_000).unwrap_err(),
            PolicyError::EmptyInput
        );
    }

    proptest! {
        /// The max-LCB action survives every elimination.
        #[test]
        fn eliminate_never_empties(
            means in proptest::collection::vec(0.0f64..=1.0, 2..8),
            counts in proptest::collection::vec(1u64..500, 2..8),
            m in 0u32..6,
        ) {
            let k = means.len().min(counts.len());
            let active: BTreeSet<usize> = (0..k).collect();
            let (_, survivors) = eliminate(m, &active, &means[..k], &counts[..k], 10_000).unwrap();
            prop_assert!(!survivors.is_empty());
            let d2 = delta_tilde(m) * delta_tilde(m);
            let log_term = (10_000.0 * d2).ln();
            let width = |j: usize| (log_term / (2.0 * counts[j] as f64)).sqrt();
            let best = (0..k).max_by(|&x, &y| {
                (means[x] - width(x)).partial_cmp(&(means[y] - width(y))).unwrap()
            }).unwrap();
            prop_assert!(survivors.contains(&best));
        }
    }

    #[test]
    fn zero_variance_elimination_schedule() {
        // mu = (1, 0): with n(0) = 19 the round-0 widths already separate
        // the confidence intervals (2W = 0.9846 < 1), so the suboptimal
        // action goes at round 0, within the m_{j,a} = 2 guarantee.
        let env = env_of(
            isolated_social(2),
            vec![vec![0, 1]],
            vec![1.0],
            vec![1.0, 0.0],
        );
        for policy_is_lp in [false, true] {
            let mut policy = if policy_is_lp {
                let sol =
                    lp::solve_observability(env.graph(), env.activation(), 1e-5).unwrap();
                EliminationUcb::ucb_lp_a(env.clone(), &sol, 10_000, false)
            } else {
                EliminationUcb::ucb_e(env.clone(), 10_000)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..200 {
                policy.step(0, &mut rng);
            }
            assert_eq!(policy.elimination_round(0, 1), Some(0));
            assert!(policy.elimination_round(0, 1).unwrap() <= 2);
            assert_eq!(policy.surviving(0), &BTreeSet::from([0usize]));
        }
    }

    #[test]
    fn singleton_active_set_always_played() {
        let env = env_of(
            isolated_social(2),
            vec![vec![0], vec![0, 1]],
            vec![0.5, 0.5],
            vec![0.9, 0.1],
        );
        let mut policy = EliminationUcb::ucb_e(env, 10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            assert_eq!(policy.step(0, &mut rng), 0);
        }
    }

    #[test]
    fn z_sampler_matches_weights() {
        // z = (2, eps) over K_a = {0, 1}: P(0) = 2/(2+eps).
        let g = complete_social(2);
        let act = ActivationStructure::new(vec![vec![0, 1]], vec![1.0]).unwrap();
        let eps = 1e-5;
        let sol = lp::LpSolution::from_parts(
            vec![(0, 0), (0, 1)],
            vec![2.0, eps],
            2.0 + eps,
            &g,
            &act,
        );
        let sampler = ZSampler::new(&sol, &act);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| sampler.sample(&act, 0, &mut rng) == 0)
            .count();
        let freq = zeros as f64 / n as f64;
        let expect = 2.0 / (2.0 + eps);
        assert!((freq - expect).abs() < 0.01, "freq={freq}");
    }

    #[test]
    fn forced_sync_triggers_on_rich_side_information() {
        // Complete graph: v_min = 1, R = 3/2... condition 1 <= 2*1*R holds
        // at m = 0, so the first step flips into forced-sync.
        let env = env_of(
            complete_social(3),
            vec![vec![0, 1], vec![1, 2]],
            vec![0.5, 0.5],
            vec![0.9, 0.3, 0.5],
        );
        let sol = lp::solve_observability(env.graph(), env.activation(), 1e-5).unwrap();
        let mut policy = EliminationUcb::ucb_lp_a(env, &sol, 100_000, false);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        policy.step(0, &mut rng);
        assert!(policy.in_forced_sync());
    }

    #[test]
    fn ucb_e_never_syncs() {
        let env = env_of(
            complete_social(3),
            vec![vec![0, 1], vec![1, 2]],
            vec![0.5, 0.5],
            vec![0.9, 0.3, 0.5],
        );
        let mut policy = EliminationUcb::ucb_e(env, 100_000);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let a = usize::from(rng.random::<bool>());
            policy.step(a, &mut rng);
        }
        assert!(!policy.in_forced_sync());
    }

    #[test]
    fn ucb_index_value() {
        let idx = ucb_index(0.5, 10, 100);
        assert!((idx - 1.4597).abs() < 1e-4);
    }

    #[test]
    fn ucb1_ignores_side_observations() {
        let g = complete_social(3);
        let env = env_of(g, vec![vec![0, 1, 2]], vec![1.0], vec![0.9, 0.5, 0.1]);
        let mut policy = Ucb1::new(env);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let first = policy.step(0, &mut rng);
        assert_eq!(first, 0); // forced initialization, lowest index first
        assert_eq!(policy.count(0), 1);
        assert_eq!(policy.count(1), 0);
        assert_eq!(policy.count(2), 0);
    }

    #[test]
    fn maxn_equals_n_without_cliques() {
        // Routing: no path's reward set is contained in another's observe
        // set, so MaxN degenerates to plain UCB-N.
        let net = graph::default_routing();
        let act = graph::default_routing_activation();
        let means = vec![
            0.2, 0.4, 0.6, 0.8, 0.3, 0.5, 0.7, 0.9, 0.25, 0.45, 0.65, 0.85,
        ];
        let env = Arc::new(
            Environment::new(
                Arc::new(net.graph),
                act,
                means,
                RewardKind::PathDelay {
                    budget: net.delay_budget,
                },
            )
            .unwrap(),
        );
        let mut n_policy = UcbN::new(env.clone());
        let mut maxn_policy = UcbMaxN::new(env.clone());
        let mut rng_a = ChaCha8Rng::seed_from_u64(9);
        let mut rng_b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let a = env.draw_active_set(&mut rng_a);
            let _ = env.draw_active_set(&mut rng_b);
            assert_eq!(n_policy.step(a, &mut rng_a), maxn_policy.step(a, &mut rng_b));
        }
    }

    #[test]
    fn all_policies_respect_availability() {
        let g = complete_social(4);
        let env = env_of(
            g,
            vec![vec![0, 2], vec![1, 3], vec![0, 1, 2, 3]],
            vec![0.4, 0.4, 0.2],
            vec![0.9, 0.6, 0.4, 0.2],
        );
        let sol = lp::solve_observability(env.graph(), env.activation(), 1e-5).unwrap();
        for id in POLICY_IDS {
            let mut policy =
                make_policy(id, env.clone(), Some(&sol), 10_000, false).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(10);
            for _ in 0..1000 {
                let a = env.draw_active_set(&mut rng);
                let j = policy.step(a, &mut rng);
                assert!(
                    env.activation().contains(a, j),
                    "{id} played {j} outside set {a}"
                );
            }
        }
    }

    #[test]
    fn deterministic_traces_per_seed() {
        let env = env_of(
            complete_social(3),
            vec![vec![0, 1], vec![1, 2]],
            vec![0.5, 0.5],
            vec![0.9, 0.3, 0.5],
        );
        let sol = lp::solve_observability(env.graph(), env.activation(), 1e-5).unwrap();
        for id in POLICY_IDS {
            let run = |seed: u64| -> Vec<usize> {
                let mut policy =
                    make_policy(id, env.clone(), Some(&sol), 10_000, false).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..300)
                    .map(|_| {
                        let a = env.draw_active_set(&mut rng);
                        policy.step(a, &mut rng)
                    })
                    .collect()
            };
            assert_eq!(run(11), run(11), "{id} is not deterministic");
        }
    }

    #[test]
    fn unknown_policy_rejected() {
        let env = env_of(isolated_social(1), vec![vec![0]], vec![1.0], vec![0.5]);
        assert!(matches!(
            make_policy("thompson", env.clone(), None, 10_000, false),
            Err(PolicyError::UnknownPolicy(_))
        ));
        assert!(matches!(
            make_policy("ucb-lp-a", env, None, 10_000, false),
            Err(PolicyError::MissingLp(_))
        ));
    }

    #[test]
    fn forced_sync_round_completion_reaches_quota() {
        // Invariant: when a forced-sync round of set b completes, every
        // survivor of b holds at least n(m_b) samples.
        let env = env_of(
            complete_social(3),
            vec![vec![0, 1], vec![1, 2]],
            vec![0.5, 0.5],
            vec![0.9, 0.3, 0.5],
        );
        let sol = lp::solve_observability(env.graph(), env.activation(), 1e-5).unwrap();
        let horizon = 100_000;
        let mut policy = EliminationUcb::ucb_lp_a(env.clone(), &sol, horizon, false);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut synced_rounds_seen = 0;
        let mut last_rounds = vec![0u32; 2];
        for _ in 0..5000 {
            let a = env.draw_active_set(&mut rng);
            let was_sync = policy.in_forced_sync();
            policy.step(a, &mut rng);
            for b in 0..2 {
                if policy.round(b) > last_rounds[b] {
                    if was_sync {
                        synced_rounds_seen += 1;
                        let quota = n_of(last_rounds[b], horizon).unwrap();
                        for &j in policy.surviving(b) {
                            assert!(policy.ledger().count(j) >= quota);
                        }
                    }
                    last_rounds[b] = policy.round(b);
                }
            }
        }
        assert!(synced_rounds_seen > 0, "test never exercised forced-sync");
    }
}

//! The observability LP and its solution-derived quantities.
//!
//! The program minimizes total expected sampling frequency subject to every
//! base-arm accumulating at least unit observation mass across activation
//! sets, with a small per-set exploration floor:
//!
//! ```text
//! min  Σ_a p_a Σ_{j∈K_a} z_{j,a}
//! s.t. Σ_a p_a Σ_{j∈K_a∩P_i} z_{j,a} >= 1   for every base-arm i
//!      Σ_{j∈K_a} z_{j,a}            >= ε   for every set a
//!      z >= 0
//! ```
//!
//! From the optimum the policy consumes the per-set sampling distributions
//! `z*_{j,a}/Z*_a` and the slowest observation accumulation rate `v_min`;
//! the bound calculators additionally consume `γ_{j,a}`.

mod simplex;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::{ActivationStructure, SideObsGraph};

/// Weights below this are snapped to zero before building sampling
/// distributions.
pub const Z_CLAMP: f64 = 1e-12;

/// Default exploration floor ε.
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LpError {
    #[error("base-arm {0} is observed by no action in any activation set")]
    StructuralInfeasible(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("internal solver error: {0}")]
    Internal(&'static str),
    #[error("numerical failure: simplex iteration cap exceeded")]
    NumericalFailure,
}

/// One variable per `(set, action)` pair with the action in the set.
#[derive(Debug, Clone)]
pub struct LpProblem {
    /// `(a, j)` per variable, ordered by set then action.
    var_keys: Vec<(usize, usize)>,
    /// Objective coefficient `p_a` per variable.
    objective: Vec<f64>,
    /// Per base-arm: the variables covering it, with coefficient `p_a`.
    coverage_rows: Vec<Vec<(usize, f64)>>,
    /// Per set: its variable indices.
    floor_rows: Vec<Vec<usize>>,
    epsilon: f64,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.var_keys.len()
    }

    pub fn num_coverage_rows(&self) -> usize {
        self.coverage_rows.len()
    }

    pub fn num_floor_rows(&self) -> usize {
        self.floor_rows.len()
    }

    pub fn var_keys(&self) -> &[(usize, usize)] {
        &self.var_keys
    }

    pub fn coverage_row(&self, base_arm: usize) -> &[(usize, f64)] {
        &self.coverage_rows[base_arm]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Encodes the observability LP for a graph and activation structure.
///
/// Fails with [`LpError::StructuralInfeasible`] when some base-arm is
/// observed by no action of any activation set.
pub fn build_lp(
    g: &SideObsGraph,
    act: &ActivationStructure,
    epsilon: f64,
) -> Result<LpProblem, LpError> {
    if !(epsilon > 0.0) {
        return Err(LpError::InvalidParams(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    act.validate_indices(g.num_actions())
        .map_err(|e| LpError::InvalidParams(e.to_string()))?;
    let mut var_keys = Vec::new();
    let mut objective = Vec::new();
    let mut floor_rows = Vec::with_capacity(act.num_sets());
    let mut var_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for a in 0..act.num_sets() {
        let mut floor = Vec::with_capacity(act.set(a).len());
        for &j in act.set(a) {
            var_index.insert((a, j), var_keys.len());
            floor.push(var_keys.len());
            var_keys.push((a, j));
            objective.push(act.prob(a));
        }
        floor_rows.push(floor);
    }
    let mut coverage_rows = Vec::with_capacity(g.num_base_arms());
    for i in 0..g.num_base_arms() {
        let mut row = Vec::new();
        for &j in g.observer_set(i) {
            for a in 0..act.num_sets() {
                if let Some(&v) = var_index.get(&(a, j)) {
                    row.push((v, act.prob(a)));
                }
            }
        }
        if row.is_empty() {
            return Err(LpError::StructuralInfeasible(i));
        }
        row.sort_unstable_by_key(|&(v, _)| v);
        coverage_rows.push(row);
    }
    Ok(LpProblem {
        var_keys,
        objective,
        coverage_rows,
        floor_rows,
        epsilon,
    })
}

/// Optimal weights of the observability LP plus everything the policy and
/// the bounds derive from them.
#[derive(Debug, Clone)]
pub struct LpSolution {
    var_keys: Vec<(usize, usize)>,
    z: Vec<f64>,
    objective: f64,
    z_totals: Vec<f64>,
    z_max: f64,
    v: Vec<f64>,
    v_min: f64,
}

impl LpSolution {
    /// `z*_{j,a}`; zero for pairs without a variable.
    pub fn z(&self, set: usize, action: usize) -> f64 {
        match self.var_keys.binary_search(&(set, action)) {
            Ok(idx) => self.z[idx],
            Err(_) => 0.0,
        }
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// `Z*_a = Σ_j z*_{j,a}`.
    pub fn z_total(&self, set: usize) -> f64 {
        self.z_totals[set]
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Observation accumulation rate of a base-arm under z*-sampling.
    pub fn v(&self, base_arm: usize) -> f64 {
        self.v[base_arm]
    }

    pub fn base_arm_rates(&self) -> &[f64] {
        &self.v
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    /// `z*_{j,a}/Z*_a`, the z*-sampling probability of `action` in `set`.
    pub fn sampling_weight(&self, set: usize, action: usize) -> f64 {
        self.z(set, action) / self.z_totals[set]
    }

    pub(crate) fn from_parts(
        var_keys: Vec<(usize, usize)>,
        z: Vec<f64>,
        objective: f64,
        g: &SideObsGraph,
        act: &ActivationStructure,
    ) -> Self {
        let num_sets = act.num_sets();
        let mut z_totals = vec![0.0; num_sets];
        for (&(a, _), &w) in var_keys.iter().zip(&z) {
            z_totals[a] += w;
        }
        let z_max = z_totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lookup = |a: usize, j: usize| match var_keys.binary_search(&(a, j)) {
            Ok(idx) => z[idx],
            Err(_) => 0.0,
        };
        let mut v = vec![0.0; g.num_base_arms()];
        for (i, rate) in v.iter_mut().enumerate() {
            for &j in g.observer_set(i) {
                for a in 0..num_sets {
                    if act.contains(a, j) {
                        *rate += act.prob(a) * lookup(a, j) / z_totals[a];
                    }
                }
            }
        }
        let v_min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            var_keys,
            z,
            objective,
            z_totals,
            z_max,
            v,
            v_min,
        }
    }
}

/// Solves the LP with the dense two-phase simplex (Bland's rule).
///
/// Weights under [`Z_CLAMP`] are snapped to zero before the derived
/// quantities are computed.
pub fn solve(
    problem: &LpProblem,
    g: &SideObsGraph,
    act: &ActivationStructure,
    tol: f64,
) -> Result<LpSolution, LpError> {
    let n = problem.num_vars();
    let mut rows = Vec::with_capacity(problem.coverage_rows.len() + problem.floor_rows.len());
    let mut rhs = Vec::with_capacity(problem.coverage_rows.len() + problem.floor_rows.len());
    for row in &problem.coverage_rows {
        let mut dense = vec![0.0; n];
        for &(v, c) in row {
            dense[v] = c;
        }
        rows.push(dense);
        rhs.push(1.0);
    }
    for floor in &problem.floor_rows {
        let mut dense = vec![0.0; n];
        for &v in floor {
            dense[v] = 1.0;
        }
        rows.push(dense);
        rhs.push(problem.epsilon);
    }
    let dense = simplex::DenseGeLp {
        costs: problem.objective.clone(),
        rows,
        rhs,
    };
    // Structural feasibility was established in build_lp and the objective
    // is a nonnegative combination, so the first two arms are unreachable
    // from a well-formed problem.
    let (mut z, _) = simplex::solve(&dense, tol).map_err(|e| match e {
        simplex::SimplexError::Infeasible => LpError::Internal("infeasible after structural check"),
        simplex::SimplexError::Unbounded => LpError::Internal("unbounded minimization"),
        simplex::SimplexError::IterationLimit => LpError::NumericalFailure,
    })?;
    for w in &mut z {
        if *w < Z_CLAMP {
            *w = 0.0;
        }
    }
    let objective: f64 = problem.objective.iter().zip(&z).map(|(c, w)| c * w).sum();
    let sol = LpSolution::from_parts(problem.var_keys.clone(), z, objective, g, act);
    for row in &problem.coverage_rows {
        let lhs: f64 = row.iter().map(|&(v, c)| c * sol.z[v]).sum();
        if lhs < 1.0 - 1e-9 {
            return Err(LpError::Internal("coverage constraint violated"));
        }
    }
    for floor in &problem.floor_rows {
        let lhs: f64 = floor.iter().map(|&v| sol.z[v]).sum();
        if lhs < problem.epsilon - 1e-9 {
            return Err(LpError::Internal("floor constraint violated"));
        }
    }
    Ok(sol)
}

/// Builds and solves the LP in one call with the default tolerance.
pub fn solve_observability(
    g: &SideObsGraph,
    act: &ActivationStructure,
    epsilon: f64,
) -> Result<LpSolution, LpError> {
    let problem = build_lp(g, act, epsilon)?;
    solve(&problem, g, act, DEFAULT_TOL)
}

/// `γ_{j,a} = p_a z*_{j,a} Z*_max / Z*_a` for every variable of the LP.
pub fn gamma_of(sol: &LpSolution, act: &ActivationStructure) -> BTreeMap<(usize, usize), f64> {
    sol.var_keys
        .iter()
        .zip(&sol.z)
        .map(|(&(a, j), &z)| {
            let gamma = act.prob(a) * z * sol.z_max / sol.z_totals[a];
            ((a, j), gamma)
        })
        .collect()
}

/// JSON-facing view of a solved LP (the `solve-lp` subcommand output).
#[derive(Debug, Serialize)]
pub struct LpReport {
    pub objective: f64,
    pub v_min: f64,
    pub z_max: f64,
    pub sets: Vec<LpSetReport>,
    pub base_arm_rates: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct LpSetReport {
    pub set: usize,
    pub prob: f64,
    pub z_total: f64,
    pub weights: Vec<LpWeight>,
}

#[derive(Debug, Serialize)]
pub struct LpWeight {
    pub action: usize,
    pub z: f64,
    pub sampling_prob: f64,
    pub gamma: f64,
}

impl LpReport {
    pub fn new(sol: &LpSolution, act: &ActivationStructure) -> Self {
        let gammas = gamma_of(sol, act);
        let sets = (0..act.num_sets())
            .map(|a| LpSetReport {
                set: a,
                prob: act.prob(a),
                z_total: sol.z_total(a),
                weights: act
                    .set(a)
                    .iter()
                    .map(|&j| LpWeight {
                        action: j,
                        z: sol.z(a, j),
                        sampling_prob: sol.sampling_weight(a, j),
                        gamma: gammas[&(a, j)],
                    })
                    .collect(),
            })
            .collect();
        LpReport {
            objective: sol.objective(),
            v_min: sol.v_min(),
            z_max: sol.z_max(),
            sets,
            base_arm_rates: sol.base_arm_rates().to_vec(),
        }
    }
}

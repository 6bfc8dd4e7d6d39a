//! Branch-and-bound engines: the basic outer-approximation loop and the
//! lifted LP-based tree search with branch- or cut-based refinement.

mod lifted;
mod milp;
mod oa;

pub use lifted::{solve_lifted, Gamma0, LiftedOptions};
pub use milp::{solve_milp, solve_milp_from, MilpOutcome, MilpTree};
pub use oa::{solve_oa, OaOptions};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::conic::{ConicError, ConicSolver, ConicStatus};
use crate::lp::{Basis, LpError};
use crate::model::{max_cone_violation, MicqpInstance, SolveStatus};
use crate::relax::RelaxError;

/// Distance to the nearest integer below which a value counts as integral.
pub const INT_TOL: f64 = 1e-6;
/// Tolerance on the squared cone violation for accepting a point as conic feasible.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BnbError {
    #[error("no fractional integer-constrained coordinate")]
    NoFractional,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Conic(#[from] ConicError),
}

impl BnbError {
    /// An LP stopped at the time limit.
    pub fn is_deadline(&self) -> bool {
        matches!(self, BnbError::Lp(LpError::Deadline) | BnbError::Conic(ConicError::Lp(LpError::Deadline)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineStrategy {
    BranchBased,
    CutBased,
}

#[derive(Debug, Clone, Default)]
pub struct Limits {
    pub time_limit: Option<Duration>,
    pub max_nodes: Option<usize>,
    pub max_cuts: Option<usize>,
    /// Record one event per node.
    pub trace: bool,
}

impl Limits {
    pub fn with_time(secs: f64) -> Self {
        Self {
            time_limit: Some(Duration::from_secs_f64(secs)),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub lp_solves: usize,
    pub conic_solves: usize,
    pub cuts: usize,
    pub oa_iterations: usize,
    pub time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEvent {
    pub node: usize,
    pub depth: usize,
    pub action: &'static str,
    /// Relaxation value at the node (LP, or NLP for NLP-driven actions).
    pub bound: f64,
    pub lb: f64,
    pub cuts: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best feasible point found.
    pub x: Option<Vec<f64>>,
    /// Objective of `x` in maximize form (`-inf` when there is none).
    pub objective: f64,
    /// Best proven upper bound in maximize form.
    pub bound: f64,
    /// Appendix-style cone violation of `x` (`-inf` without cones or solution).
    pub max_violation: f64,
    pub stats: SolveStats,
    pub trace: Vec<TraceEvent>,
}

impl SolveResult {
    pub(crate) fn new() -> Self {
        Self {
            status: SolveStatus::IterLimit,
            x: None,
            objective: f64::NEG_INFINITY,
            bound: f64::INFINITY,
            max_violation: f64::NEG_INFINITY,
            stats: SolveStats::default(),
            trace: Vec::new(),
        }
    }

    pub(crate) fn set_incumbent(&mut self, inst: &MicqpInstance, x: Vec<f64>) {
        self.objective = inst.objective_value(&x);
        self.max_violation = max_cone_violation(inst, &x);
        self.x = Some(x);
    }
}

/// Most fractional coordinate in `int_vars`, ties to the lowest index.
pub fn branch_variable_selection(x: &[f64], int_vars: &[usize]) -> Result<usize, BnbError> {
    let mut best: Option<(usize, f64)> = None;
    for &j in int_vars {
        let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
        if frac > INT_TOL && best.is_none_or(|(_, b)| frac > b) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j).ok_or(BnbError::NoFractional)
}

/// `nb` cannot beat `lb` by more than a relative `1e-9`.
pub(crate) fn dominated(nb: f64, lb: f64) -> bool {
    nb <= lb + 1e-9 * lb.abs().max(1.0)
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub nb: f64,
    pub depth: usize,
    pub basis: Option<Basis>,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.nb.total_cmp(&other.nb).then(self.seq.cmp(&other.seq))
    }
}

/// Best-bound node list; among equal bounds the newest node comes first.
#[derive(Debug, Default)]
pub(crate) struct NodeQueue {
    heap: BinaryHeap<Node>,
    next: u64,
}

impl NodeQueue {
    pub fn push(&mut self, l: Vec<f64>, u: Vec<f64>, nb: f64, depth: usize, basis: Option<Basis>) {
        self.next += 1;
        self.heap.push(Node {
            l,
            u,
            nb,
            depth,
            basis,
            seq: self.next,
        });
    }

    /// Re-queues a node, ordered as the newest among equal bounds.
    pub fn push_node(&mut self, mut node: Node) {
        self.next += 1;
        node.seq = self.next;
        self.heap.push(node);
    }

    pub fn into_nodes(self) -> Vec<Node> {
        self.heap.into_vec()
    }

    /// Removes and returns every node with `NB <= lb`.
    pub fn drain_dominated(&mut self, lb: f64) -> Vec<Node> {
        let (out, keep): (Vec<Node>, Vec<Node>) = std::mem::take(&mut self.heap).into_iter().partition(|n| dominated(n.nb, lb));
        self.heap = keep.into();
        out
    }

    pub fn pop(&mut self) -> Option<Node> {
        self.heap.pop()
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.heap.len()
    }

    /// Removes every node with `NB <= lb`.
    pub fn prune(&mut self, lb: f64) {
        self.heap.retain(|n| !dominated(n.nb, lb));
    }

    pub fn best_bound(&self) -> f64 {
        self.heap.peek().map_or(f64::NEG_INFINITY, |n| n.nb)
    }
}

pub(crate) struct Clock {
    start: Instant,
    limit: Option<Duration>,
}

impl Clock {
    pub fn new(limit: Option<Duration>) -> Self {
        Self {
            start: Instant::now(),
            limit,
        }
    }

    pub fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }

    pub fn deadline(&self) -> Option<Instant> {
        self.limit.map(|l| self.start + l)
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Children `x_j <= floor(v)` and `x_j >= floor(v) + 1` of the box `(l, u)`.
pub(crate) fn split(l: &[f64], u: &[f64], j: usize, v: f64) -> ((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>)) {
    let f = v.floor();
    let mut down_u = u.to_vec();
    down_u[j] = f;
    let mut up_l = l.to_vec();
    up_l[j] = f + 1.0;
    ((l.to_vec(), down_u), (up_l, u.to_vec()))
}

/// Solves `NLP(l, u)` with the integer coordinates fixed to the rounded values of `x`.
/// Returns the solution with integers set exactly.
pub(crate) fn fixed_integer_nlp(
    conic: &mut ConicSolver<'_>,
    inst: &MicqpInstance,
    l: &[f64],
    u: &[f64],
    x: &[f64],
    stats: &mut SolveStats,
) -> Result<Option<Vec<f64>>, BnbError> {
    let mut fl = l.to_vec();
    let mut fu = u.to_vec();
    for &j in &inst.int_vars {
        let v = x[j].round();
        if v < l[j] || v > u[j] {
            return Ok(None);
        }
        fl[j] = v;
        fu[j] = v;
    }
    let r = conic.solve(&fl, &fu)?;
    stats.conic_solves += 1;
    stats.lp_solves += r.lp_solves;
    if r.status != ConicStatus::Optimal {
        return Ok(None);
    }
    let mut sol = r.x;
    for &j in &inst.int_vars {
        sol[j] = fl[j];
    }
    Ok(Some(sol))
}

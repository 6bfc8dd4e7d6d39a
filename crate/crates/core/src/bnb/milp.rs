use std::time::Instant;

use super::{branch_variable_selection, dominated, split, BnbError, Node, NodeQueue, SolveStats};
use crate::lp::{LpError, LpModel, LpStatus};

#[derive(Debug, Clone, PartialEq)]
pub enum MilpOutcome {
    /// Full column vector of the LP and its objective.
    Optimal { x: Vec<f64>, obj: f64 },
    Infeasible,
    Unbounded,
    /// Stopped by a limit; carries the best integer point found and the best bound.
    Limit { best: Option<(Vec<f64>, f64)>, bound: f64 },
}

/// Leaves of a branch-and-bound tree that were not proven infeasible.
///
/// Rows added to the LP between two solves only shrink the feasible set, so
/// the leaves still cover every integer point and their bounds stay valid.
/// An empty tree stands for the root box.
#[derive(Debug, Clone, Default)]
pub struct MilpTree {
    leaves: Vec<Node>,
}

impl MilpTree {
    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }
}

/// Plain best-bound branch-and-bound over the LP `lp` whose columns
/// `0..l.len()` carry the bounds `l, u`; `int_vars` must be integral.
pub fn solve_milp(
    lp: &mut LpModel,
    l: &[f64],
    u: &[f64],
    int_vars: &[usize],
    deadline: Option<Instant>,
    node_limit: Option<usize>,
    stats: &mut SolveStats,
) -> Result<MilpOutcome, BnbError> {
    let mut tree = MilpTree::default();
    solve_milp_from(lp, l, u, int_vars, deadline, node_limit, stats, &mut tree)
}

/// [`solve_milp`] started from the leaves of `tree`, which on return holds the
/// leaves of the new tree. Bound-pruned leaves and the leaf of the returned
/// point are kept, so the tree can be resumed after rows are added to `lp`.
#[allow(clippy::too_many_arguments)]
pub fn solve_milp_from(
    lp: &mut LpModel,
    l: &[f64],
    u: &[f64],
    int_vars: &[usize],
    deadline: Option<Instant>,
    node_limit: Option<usize>,
    stats: &mut SolveStats,
    tree: &mut MilpTree,
) -> Result<MilpOutcome, BnbError> {
    let n = l.len();
    lp.set_deadline(deadline);
    let mut queue = NodeQueue::default();
    if tree.leaves.is_empty() {
        queue.push(l.to_vec(), u.to_vec(), f64::INFINITY, 0, lp.basis().cloned());
    }
    for node in tree.leaves.drain(..) {
        queue.push_node(node);
    }
    let mut parked: Vec<Node> = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut lb = f64::NEG_INFINITY;
    let outcome = loop {
        let Some(mut node) = queue.pop() else {
            break match best.take() {
                Some((x, obj)) => MilpOutcome::Optimal { x, obj },
                None => MilpOutcome::Infeasible,
            };
        };
        if deadline.is_some_and(|d| Instant::now() >= d) || node_limit.is_some_and(|m| stats.nodes >= m) {
            let bound = node.nb.max(lb);
            queue.push_node(node);
            break MilpOutcome::Limit { best: best.take(), bound };
        }
        stats.nodes += 1;
        for j in 0..n {
            lp.set_var_bounds(j, node.l[j], node.u[j])?;
        }
        if node.basis.is_some() {
            lp.set_basis(node.basis.clone());
        }
        let r = match lp.solve() {
            Err(LpError::Deadline) => {
                let bound = node.nb.max(lb);
                queue.push_node(node);
                break MilpOutcome::Limit { best: best.take(), bound };
            }
            r => r?,
        };
        stats.lp_solves += 1;
        match r.status {
            LpStatus::PrimalInfeasible => continue,
            LpStatus::Unbounded => {
                queue.push_node(node);
                break MilpOutcome::Unbounded;
            }
            LpStatus::Optimal => {}
        }
        node.nb = r.obj;
        node.basis = Some(r.basis.clone());
        if dominated(r.obj, lb) {
            parked.push(node);
            continue;
        }
        let x = &r.x[..n];
        match branch_variable_selection(x, int_vars) {
            Err(BnbError::NoFractional) => {
                let mut sol = r.x.clone();
                for &j in int_vars {
                    sol[j] = sol[j].round();
                }
                lb = r.obj;
                best = Some((sol, r.obj));
                parked.push(node);
                parked.extend(queue.drain_dominated(lb));
            }
            Err(e) => return Err(e),
            Ok(j) => {
                let (down, up) = split(&node.l, &node.u, j, x[j]);
                let basis = Some(r.basis.clone());
                queue.push(down.0, down.1, r.obj, node.depth + 1, basis.clone());
                queue.push(up.0, up.1, r.obj, node.depth + 1, basis);
            }
        }
    };
    tree.leaves = queue.into_nodes();
    tree.leaves.append(&mut parked);
    for j in 0..n {
        lp.set_var_bounds(j, l[j], u[j])?;
    }
    Ok(outcome)
}

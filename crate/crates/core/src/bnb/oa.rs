use super::{fixed_integer_nlp, solve_milp_from, BnbError, Clock, Limits, MilpOutcome, MilpTree, SolveResult, TraceEvent, FEAS_TOL};
use crate::conic::{base_lp, ConicSolver};
use crate::model::{MicqpInstance, SolveStatus};
use crate::relax::{ConeVarMap, FlatBlock, OmegaPool};

#[derive(Debug, Clone, Default)]
pub struct OaOptions {
    /// Initial directions per cone; `+-e_j` for every axis when `None`.
    pub initial: Option<Vec<OmegaPool>>,
    /// Correct the final point by solving the conic relaxation with integers fixed.
    pub repair: bool,
}

/// Outer approximation: solve `MILP(Omega)`, stop when the solution lies in
/// every cone, otherwise add `omega(y)` for each violated cone and repeat.
pub fn solve_oa(inst: &MicqpInstance, opts: &OaOptions, limits: &Limits) -> Result<SolveResult, BnbError> {
    let clock = Clock::new(limits.time_limit);
    let mut out = SolveResult::new();
    let n = inst.num_vars;
    let mut lp = base_lp(inst)?;
    let x_cols: Vec<usize> = (0..n).collect();
    let mut blocks = Vec::with_capacity(inst.cones.len());
    for (l, cone) in inst.cones.iter().enumerate() {
        let map = ConeVarMap::from_cone(&mut lp, cone, &x_cols)?;
        let pool = match &opts.initial {
            Some(p) => p[l].clone(),
            None => OmegaPool::axes(cone.dim()),
        };
        blocks.push(FlatBlock::attach(&mut lp, map, pool)?);
    }
    // rows only accumulate, so each MILP resumes the previous tree
    let mut tree = MilpTree::default();
    loop {
        out.stats.oa_iterations += 1;
        let outcome = solve_milp_from(
            &mut lp,
            &inst.lb,
            &inst.ub,
            &inst.int_vars,
            clock.deadline(),
            limits.max_nodes,
            &mut out.stats,
            &mut tree,
        )?;
        let (xf, obj) = match outcome {
            MilpOutcome::Infeasible => {
                out.status = SolveStatus::Infeasible;
                out.bound = f64::NEG_INFINITY;
                break;
            }
            MilpOutcome::Unbounded => {
                out.status = SolveStatus::Unbounded;
                break;
            }
            MilpOutcome::Limit { bound, .. } => {
                out.status = if clock.expired() { SolveStatus::TimeLimit } else { SolveStatus::IterLimit };
                out.bound = out.bound.min(bound);
                break;
            }
            MilpOutcome::Optimal { x, obj } => (x, obj),
        };
        out.bound = obj;
        let x = xf[..n].to_vec();
        if inst.cones_satisfied(&x, FEAS_TOL) {
            let mut sol = x;
            if opts.repair && !inst.cones.is_empty() {
                let mut conic = ConicSolver::new(inst)?;
                if let Some(fixed) = fixed_integer_nlp(&mut conic, inst, &inst.lb, &inst.ub, &sol, &mut out.stats)? {
                    sol = fixed;
                }
            }
            out.set_incumbent(inst, sol);
            out.status = SolveStatus::Optimal;
            break;
        }
        let mut added = 0;
        for (block, cone) in blocks.iter_mut().zip(&inst.cones) {
            if !cone.is_satisfied(&x, FEAS_TOL) {
                added += block.refine(&mut lp, &xf, 0.0)?;
            }
        }
        out.stats.cuts += added;
        if limits.trace {
            out.trace.push(TraceEvent {
                node: out.stats.oa_iterations,
                depth: 0,
                action: "oa_cut",
                bound: obj,
                lb: f64::NEG_INFINITY,
                cuts: added,
            });
        }
        if added == 0 || limits.max_cuts.is_some_and(|m| out.stats.cuts > m) {
            out.status = SolveStatus::IterLimit;
            break;
        }
        if clock.expired() {
            out.status = SolveStatus::TimeLimit;
            break;
        }
    }
    out.stats.time_s = clock.elapsed();
    Ok(out)
}

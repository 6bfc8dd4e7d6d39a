use super::{
    branch_variable_selection, dominated, fixed_integer_nlp, split, BnbError, Clock, Limits, NodeQueue, RefineStrategy,
    SolveResult, TraceEvent, FEAS_TOL,
};
use crate::conic::{adaptive_tol, base_lp, ConicSolver, ConicStatus};
use crate::lp::{Basis, LpModel, LpStatus, Relation};
use crate::model::{MicqpInstance, SolveStatus};
use crate::relax::{attach_sep, attach_tower, ntwo_depth_schedule, ConeVarMap, GammaPool, SepBlock, TowerLeaf};

/// Initial breakpoints of the dynamic separable relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gamma0 {
    Empty,
    PlusMinusOne,
}

#[derive(Debug, Clone)]
pub struct LiftedOptions {
    pub strategy: RefineStrategy,
    /// Quality of the static relaxation `L^d_eps`; `None` leaves it out.
    pub static_eps: Option<f64>,
    /// Attach the dynamic separable relaxation (always on for cut-based refinement).
    pub dynamic: bool,
    pub gamma0: Gamma0,
    /// Remove dominated nodes after each incumbent update.
    pub prune: bool,
    /// Replace incumbents found at LP points by the fixed-integer conic solution.
    pub repair: bool,
}

impl LiftedOptions {
    /// Static `L^d_eps`, no dynamic rows, branch-based refinement.
    pub fn lifted_branch(eps: f64) -> Self {
        Self {
            strategy: RefineStrategy::BranchBased,
            static_eps: Some(eps),
            dynamic: false,
            gamma0: Gamma0::Empty,
            prune: true,
            repair: true,
        }
    }

    /// Static `L^d_eps` plus separable cuts, starting from no breakpoints.
    pub fn lifted_cut(eps: f64) -> Self {
        Self {
            strategy: RefineStrategy::CutBased,
            static_eps: Some(eps),
            dynamic: true,
            gamma0: Gamma0::Empty,
            prune: true,
            repair: true,
        }
    }

    /// Separable cuts only, starting from `{-1, 1}`.
    pub fn cut_only() -> Self {
        Self {
            strategy: RefineStrategy::CutBased,
            static_eps: None,
            dynamic: true,
            gamma0: Gamma0::PlusMinusOne,
            prune: true,
            repair: true,
        }
    }
}

struct Search<'a> {
    inst: &'a MicqpInstance,
    opts: &'a LiftedOptions,
    limits: &'a Limits,
    lp: LpModel,
    sep: Vec<Option<SepBlock>>,
    conic: ConicSolver<'a>,
    queue: NodeQueue,
    out: SolveResult,
    lb: f64,
    incomplete: bool,
}

/// Lifted LP-based branch-and-bound.
pub fn solve_lifted(inst: &MicqpInstance, opts: &LiftedOptions, limits: &Limits) -> Result<SolveResult, BnbError> {
    let clock = Clock::new(limits.time_limit);
    let n = inst.num_vars;
    let mut lp = base_lp(inst)?;
    let x_cols: Vec<usize> = (0..n).collect();
    let dynamic = opts.dynamic || opts.strategy == RefineStrategy::CutBased;
    let mut sep = Vec::with_capacity(inst.cones.len());
    for cone in &inst.cones {
        let d = cone.dim();
        let map = ConeVarMap::from_cone(&mut lp, cone, &x_cols)?;
        if let Some(eps) = opts.static_eps {
            if d >= 2 {
                attach_tower(&mut lp, &map, TowerLeaf::Schedule(ntwo_depth_schedule(d, eps)?))?;
            } else {
                // |y1| <= y0 is already polyhedral
                lp.add_row(&[(map.y_cols[0], 1.0), (map.y0_col, -1.0)], Relation::Le, 0.0)?;
                lp.add_row(&[(map.y_cols[0], -1.0), (map.y0_col, -1.0)], Relation::Le, 0.0)?;
            }
        }
        sep.push(if dynamic {
            let pool = match opts.gamma0 {
                Gamma0::Empty => GammaPool::new(d),
                Gamma0::PlusMinusOne => GammaPool::uniform(d, &[-1.0, 1.0]),
            };
            Some(attach_sep(&mut lp, &map, pool)?)
        } else {
            None
        });
    }
    let mut s = Search {
        inst,
        opts,
        limits,
        lp,
        sep,
        conic: ConicSolver::new(inst)?,
        queue: NodeQueue::default(),
        out: SolveResult::new(),
        lb: f64::NEG_INFINITY,
        incomplete: false,
    };
    s.lp.set_deadline(clock.deadline());
    s.conic.set_deadline(clock.deadline());
    s.queue.push(inst.lb.clone(), inst.ub.clone(), f64::INFINITY, 0, None);
    let mut stopped: Option<(SolveStatus, f64)> = None;
    while let Some(node) = s.queue.pop() {
        if clock.expired() {
            stopped = Some((SolveStatus::TimeLimit, node.nb));
            break;
        }
        if limits.max_nodes.is_some_and(|m| s.out.stats.nodes >= m) {
            stopped = Some((SolveStatus::IterLimit, node.nb));
            break;
        }
        let unbounded = match s.process(node.l, node.u, node.depth, node.basis) {
            Err(e) if e.is_deadline() => {
                stopped = Some((SolveStatus::TimeLimit, node.nb));
                break;
            }
            r => r?,
        };
        if unbounded {
            s.out.status = SolveStatus::Unbounded;
            s.out.stats.time_s = clock.elapsed();
            return Ok(s.out);
        }
    }
    let mut out = s.out;
    match stopped {
        Some((status, nb)) => {
            out.status = status;
            out.bound = nb.max(s.queue.best_bound()).max(s.lb);
        }
        None if s.incomplete => {
            out.status = SolveStatus::IterLimit;
            out.bound = f64::INFINITY;
        }
        None => {
            out.status = if out.x.is_some() { SolveStatus::Optimal } else { SolveStatus::Infeasible };
            out.bound = s.lb;
        }
    }
    out.stats.time_s = clock.elapsed();
    Ok(out)
}

impl Search<'_> {
    fn event(&mut self, depth: usize, action: &'static str, bound: f64, cuts: usize) {
        if self.limits.trace {
            self.out.trace.push(TraceEvent {
                node: self.out.stats.nodes,
                depth,
                action,
                bound,
                lb: self.lb,
                cuts,
            });
        }
    }

    fn update_incumbent(&mut self, x: Vec<f64>) {
        let value = self.inst.objective_value(&x);
        if value > self.lb {
            self.lb = value;
            self.out.set_incumbent(self.inst, x);
            if self.opts.prune {
                self.queue.prune(self.lb);
            }
        }
    }

    /// Processes one node; returns true when the LP relaxation is unbounded.
    fn process(&mut self, l: Vec<f64>, u: Vec<f64>, depth: usize, basis: Option<Basis>) -> Result<bool, BnbError> {
        let n = self.inst.num_vars;
        self.out.stats.nodes += 1;
        for j in 0..n {
            self.lp.set_var_bounds(j, l[j], u[j])?;
        }
        if basis.is_some() {
            self.lp.set_basis(basis);
        }
        let r = self.lp.solve()?;
        self.out.stats.lp_solves += 1;
        match r.status {
            LpStatus::PrimalInfeasible => {
                self.event(depth, "infeasible", f64::NEG_INFINITY, 0);
                return Ok(false);
            }
            LpStatus::Unbounded => return Ok(true),
            LpStatus::Optimal => {}
        }
        let opt = r.obj;
        if dominated(opt, self.lb) {
            self.event(depth, "fathom_bound", opt, 0);
            return Ok(false);
        }
        let x = r.x[..n].to_vec();
        let j0 = match branch_variable_selection(&x, &self.inst.int_vars) {
            Ok(j) => j,
            Err(BnbError::NoFractional) => {
                return self.integral_node(l, u, depth, opt, &r.x, r.basis).map(|_| false);
            }
            Err(e) => return Err(e),
        };
        self.event(depth, "branch", opt, 0);
        let (down, up) = split(&l, &u, j0, x[j0]);
        self.queue.push(down.0, down.1, opt, depth + 1, Some(r.basis.clone()));
        self.queue.push(up.0, up.1, opt, depth + 1, Some(r.basis));
        Ok(false)
    }

    fn integral_node(
        &mut self,
        l: Vec<f64>,
        u: Vec<f64>,
        depth: usize,
        opt: f64,
        full: &[f64],
        basis: Basis,
    ) -> Result<(), BnbError> {
        let n = self.inst.num_vars;
        let mut x = full[..n].to_vec();
        if self.inst.cones_satisfied(&x, FEAS_TOL) {
            for &j in &self.inst.int_vars {
                x[j] = x[j].round();
            }
            if self.opts.repair && !self.inst.cones.is_empty() {
                if let Some(fixed) = fixed_integer_nlp(&mut self.conic, self.inst, &l, &u, &x, &mut self.out.stats)? {
                    x = fixed;
                }
            }
            self.update_incumbent(x);
            self.event(depth, "incumbent", opt, 0);
            return Ok(());
        }
        if let Some(sol) = fixed_integer_nlp(&mut self.conic, self.inst, &l, &u, &x, &mut self.out.stats)? {
            let before = self.lb;
            self.update_incumbent(sol);
            if self.lb > before {
                self.event(depth, "heuristic", self.lb, 0);
            }
        }
        match self.opts.strategy {
            RefineStrategy::BranchBased => self.branch_refine(l, u, depth),
            RefineStrategy::CutBased => {
                let added = self.cut_refine(full)?;
                if added > 0 {
                    self.event(depth, "cut", opt, added);
                    self.queue.push(l, u, opt, depth, Some(basis));
                    Ok(())
                } else {
                    self.branch_refine(l, u, depth)
                }
            }
        }
    }

    /// One separation pass over every violated cone.
    fn cut_refine(&mut self, full: &[f64]) -> Result<usize, BnbError> {
        let x = &full[..self.inst.num_vars];
        let mut added = 0;
        for (block, cone) in self.sep.iter_mut().zip(&self.inst.cones) {
            let Some(block) = block else { continue };
            if cone.is_satisfied(x, FEAS_TOL) {
                continue;
            }
            let viol = cone.violation(x).max(FEAS_TOL);
            let tol = adaptive_tol(viol, cone.dim(), full[block.map.y0_col]);
            added += block.refine(&mut self.lp, full, tol)?;
        }
        self.out.stats.cuts += added;
        Ok(added)
    }

    /// Solves `NLP(l, u)` at the node and fathoms, accepts or branches on its solution.
    fn branch_refine(&mut self, l: Vec<f64>, u: Vec<f64>, depth: usize) -> Result<(), BnbError> {
        let r = self.conic.solve(&l, &u)?;
        self.out.stats.conic_solves += 1;
        self.out.stats.lp_solves += r.lp_solves;
        match r.status {
            ConicStatus::Infeasible => {
                self.event(depth, "nlp_infeasible", f64::NEG_INFINITY, 0);
                return Ok(());
            }
            ConicStatus::IterLimit => {
                self.incomplete = true;
                self.event(depth, "nlp_failed", r.obj, 0);
                return Ok(());
            }
            ConicStatus::Optimal => {}
        }
        if dominated(r.obj, self.lb) {
            self.event(depth, "nlp_fathom", r.obj, 0);
            return Ok(());
        }
        match branch_variable_selection(&r.x, &self.inst.int_vars) {
            Err(BnbError::NoFractional) => {
                let mut x = r.x;
                let exact = self.inst.int_vars.iter().all(|&j| (x[j] - x[j].round()).abs() <= 1e-12);
                if !exact && self.opts.repair {
                    if let Some(fixed) = fixed_integer_nlp(&mut self.conic, self.inst, &l, &u, &x, &mut self.out.stats)? {
                        x = fixed;
                    }
                }
                for &j in &self.inst.int_vars {
                    x[j] = x[j].round();
                }
                self.update_incumbent(x);
                self.event(depth, "nlp_integral", r.obj, 0);
            }
            Err(e) => return Err(e),
            Ok(j0) => {
                self.event(depth, "nlp_branch", r.obj, 0);
                let (down, up) = split(&l, &u, j0, r.x[j0]);
                self.queue.push(down.0, down.1, r.obj, depth + 1, None);
                self.queue.push(up.0, up.1, r.obj, depth + 1, None);
            }
        }
        Ok(())
    }
}

//! Bounded-variable primal and dual revised simplex.
//!
//! Internally the problem is `min cost . v` over `v = (x, r)` with
//! `A x - r = 0` and bounds on every entry of `v`.

use super::factor::{Factor, Singular};
use super::{Basis, LpError, LpModel, LpResult, LpStatus, Relation, Sense, VarStatus};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const ACCEPT_TOL: f64 = 1e-7;
const REFACTOR_EVERY: usize = 50;
/// Relative size of the bound perturbation.
const PERTURB: f64 = 1e-6;
const NONE: usize = usize::MAX;

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    /// The basis lost dual feasibility; continue with the primal method.
    SwitchPrimal,
    /// The primal method is cycling through degenerate pivots.
    Stalled,
}

struct Engine<'a> {
    n: usize,
    m: usize,
    cols: &'a [Vec<(usize, f64)>],
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basic: Vec<usize>,
    pos: Vec<usize>,
    factor: Option<Factor>,
    iterations: usize,
    limit: usize,
    deadline: Option<std::time::Instant>,
    degenerate_run: usize,
    /// True bounds while the working bounds are perturbed.
    saved_bounds: Option<(Vec<f64>, Vec<f64>)>,
}

pub(super) fn solve(model: &LpModel) -> Result<LpResult, LpError> {
    let mut eng = Engine::new(model);
    let outcome = eng.run()?;
    Ok(eng.result(model, outcome))
}

impl<'a> Engine<'a> {
    fn new(model: &'a LpModel) -> Self {
        let n = model.num_vars();
        let m = model.num_rows();
        let mut lb = model.col_lb.clone();
        let mut ub = model.col_ub.clone();
        for r in &model.rows {
            let (l, u) = match r.relation {
                Relation::Le => (f64::NEG_INFINITY, r.rhs),
                Relation::Ge => (r.rhs, f64::INFINITY),
                Relation::Eq => (r.rhs, r.rhs),
            };
            lb.push(l);
            ub.push(u);
        }
        let mut cost = vec![0.0; n + m];
        for j in 0..n {
            cost[j] = match model.sense {
                Sense::Maximize => -model.obj[j],
                Sense::Minimize => model.obj[j],
            };
        }
        let mut status = match &model.basis {
            Some(b) => {
                let mut s = b.cols.clone();
                s.extend_from_slice(&b.rows);
                s
            }
            None => {
                let mut s = vec![VarStatus::AtLower; n];
                s.extend(std::iter::repeat_n(VarStatus::Basic, m));
                s
            }
        };
        // basis size repair: exactly m basic variables
        let mut count = status.iter().filter(|s| **s == VarStatus::Basic).count();
        if count > m {
            for j in (0..n + m).rev() {
                if count == m {
                    break;
                }
                if status[j] == VarStatus::Basic {
                    status[j] = VarStatus::AtLower;
                    count -= 1;
                }
            }
        }
        if count < m {
            for i in 0..m {
                if count == m {
                    break;
                }
                if status[n + i] != VarStatus::Basic {
                    status[n + i] = VarStatus::Basic;
                    count += 1;
                }
            }
        }
        let mut eng = Engine {
            n,
            m,
            cols: &model.cols,
            lb,
            ub,
            cost,
            x: vec![0.0; n + m],
            status,
            basic: Vec::with_capacity(m),
            pos: vec![NONE; n + m],
            factor: None,
            iterations: 0,
            limit: model.iteration_limit.unwrap_or(50_000 + 50 * (n + m)),
            deadline: model.deadline,
            degenerate_run: 0,
            saved_bounds: None,
        };
        for j in 0..n + m {
            if eng.status[j] == VarStatus::Basic {
                eng.pos[j] = eng.basic.len();
                eng.basic.push(j);
            } else {
                eng.normalize_nonbasic(j);
            }
        }
        eng
    }

    /// Puts a nonbasic variable on a bound consistent with its current bounds.
    fn normalize_nonbasic(&mut self, j: usize) {
        let (l, u) = (self.lb[j], self.ub[j]);
        let st = match self.status[j] {
            VarStatus::AtUpper if u.is_finite() => VarStatus::AtUpper,
            VarStatus::AtUpper | VarStatus::AtLower | VarStatus::Zero | VarStatus::Basic => {
                if self.status[j] == VarStatus::Zero && !l.is_finite() && !u.is_finite() {
                    VarStatus::Zero
                } else if l.is_finite() {
                    VarStatus::AtLower
                } else if u.is_finite() {
                    VarStatus::AtUpper
                } else {
                    VarStatus::Zero
                }
            }
        };
        self.status[j] = st;
        self.x[j] = match st {
            VarStatus::AtLower => l,
            VarStatus::AtUpper => u,
            _ => 0.0,
        };
    }

    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| a * v[i]).sum()
        } else {
            -v[j - self.n]
        }
    }

    fn load_column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                out[i] = a;
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let mut repairs = 0;
        loop {
            let n = self.n;
            let cols = self.cols;
            match Factor::build(self.m, n, &self.basic, |j| &cols[j]) {
                Ok(f) => {
                    self.factor = Some(f);
                    return Ok(());
                }
                Err(Singular { pos, row }) => {
                    repairs += 1;
                    if repairs > self.m + 1 {
                        return Err(LpError::NumericalFailure("basis repair did not converge".into()));
                    }
                    let out = self.basic[pos];
                    let inn = n + row;
                    self.basic[pos] = inn;
                    self.pos[inn] = pos;
                    self.pos[out] = NONE;
                    self.status[inn] = VarStatus::Basic;
                    self.status[out] = VarStatus::AtLower;
                    self.normalize_nonbasic(out);
                }
            }
        }
    }

    fn factor(&self) -> &Factor {
        self.factor.as_ref().expect("factorized")
    }

    fn compute_primal(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.pos[j] == NONE && self.x[j] != 0.0 {
                let xj = self.x[j];
                if j < self.n {
                    for &(i, a) in &self.cols[j] {
                        rhs[i] -= a * xj;
                    }
                } else {
                    rhs[j - self.n] += xj;
                }
            }
        }
        self.factor().ftran(&mut rhs);
        for p in 0..self.m {
            self.x[self.basic[p]] = rhs[p];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lb[j] {
            self.lb[j] - v
        } else if v > self.ub[j] {
            v - self.ub[j]
        } else {
            0.0
        }
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.basic.iter().map(|&j| self.infeasibility(j)).fold(0.0, f64::max)
    }

    fn duals_for(&self, costs: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.basic.iter().map(|&j| costs[j]).collect();
        self.factor().btran(&mut y);
        y
    }

    fn reduced_costs(&self, y: &[f64], costs: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.n + self.m];
        for j in 0..self.n + self.m {
            if self.pos[j] == NONE {
                d[j] = costs[j] - self.col_dot(j, y);
            }
        }
        d
    }

    /// Signed dual infeasibility of nonbasic `j` given reduced cost `dj`.
    fn dual_infeasibility(&self, j: usize, dj: f64) -> f64 {
        if self.lb[j] == self.ub[j] {
            return 0.0;
        }
        match self.status[j] {
            VarStatus::AtLower => (-dj).max(0.0),
            VarStatus::AtUpper => dj.max(0.0),
            VarStatus::Zero => dj.abs(),
            VarStatus::Basic => 0.0,
        }
    }

    /// Flips boxed nonbasic variables to the bound that makes them dual
    /// feasible. Returns the remaining dual infeasibility.
    fn flip_to_dual_feasible(&mut self, d: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        let mut flipped = false;
        for j in 0..self.n + self.m {
            if self.pos[j] != NONE {
                continue;
            }
            let inf = self.dual_infeasibility(j, d[j]);
            if inf <= DUAL_TOL {
                continue;
            }
            let (l, u) = (self.lb[j], self.ub[j]);
            if d[j] < 0.0 && u.is_finite() && self.status[j] != VarStatus::AtUpper {
                self.status[j] = VarStatus::AtUpper;
                self.x[j] = u;
                flipped = true;
            } else if d[j] > 0.0 && l.is_finite() && self.status[j] != VarStatus::AtLower {
                self.status[j] = VarStatus::AtLower;
                self.x[j] = l;
                flipped = true;
            } else {
                worst = worst.max(inf);
            }
        }
        if flipped {
            self.compute_primal();
        }
        worst
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        let mut rounds = 0;
        loop {
            rounds += 1;
            self.refactor()?;
            self.compute_primal();
            let y = self.duals_for(&self.cost.clone());
            let d = self.reduced_costs(&y, &self.cost);
            let dinf = self.flip_to_dual_feasible(&d);
            let pinf = self.max_primal_infeasibility();
            if pinf <= PRIMAL_TOL && dinf <= DUAL_TOL {
                if self.saved_bounds.is_some() {
                    self.unperturb();
                    continue;
                }
                return Ok(Outcome::Optimal);
            }
            if rounds > 10 {
                if pinf <= ACCEPT_TOL && dinf <= ACCEPT_TOL && self.saved_bounds.is_none() {
                    return Ok(Outcome::Optimal);
                }
                return Err(LpError::NumericalFailure(format!(
                    "no convergence: primal infeasibility {pinf:e}, dual infeasibility {dinf:e}"
                )));
            }
            let outcome = if dinf <= DUAL_TOL { self.dual()? } else { self.primal()? };
            let outcome = match outcome {
                Outcome::Infeasible => {
                    // confirm marginal infeasibility with the primal method
                    if self.max_primal_infeasibility() > 1e-6 {
                        Outcome::Infeasible
                    } else {
                        self.primal()?
                    }
                }
                other => other,
            };
            match outcome {
                Outcome::Optimal | Outcome::SwitchPrimal => continue,
                Outcome::Stalled => {
                    self.perturb();
                    continue;
                }
                // widening bounds keeps infeasibility and unboundedness
                Outcome::Infeasible | Outcome::Unbounded => {
                    if self.saved_bounds.is_some() {
                        self.unperturb();
                    }
                    return Ok(outcome);
                }
            }
        }
    }

    /// Widens every finite bound of a non-fixed variable by a small
    /// deterministic pseudo-random amount, breaking ties between degenerate vertices.
    fn perturb(&mut self) {
        self.saved_bounds = Some((self.lb.clone(), self.ub.clone()));
        let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
        for j in 0..self.n + self.m {
            if self.lb[j] == self.ub[j] {
                continue;
            }
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let delta = |b: f64| PERTURB * (1.0 + b.abs()) * (1.0 + u);
            if self.lb[j].is_finite() {
                self.lb[j] -= delta(self.lb[j]);
            }
            if self.ub[j].is_finite() {
                self.ub[j] += delta(self.ub[j]);
            }
            if self.pos[j] == NONE {
                self.normalize_nonbasic(j);
            }
        }
        self.degenerate_run = 0;
    }

    fn unperturb(&mut self) {
        if let Some((lb, ub)) = self.saved_bounds.take() {
            self.lb = lb;
            self.ub = ub;
            for j in 0..self.n + self.m {
                if self.pos[j] == NONE {
                    self.normalize_nonbasic(j);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], leave_status: VarStatus) -> Result<(), LpError> {
        let out = self.basic[r];
        self.basic[r] = q;
        self.pos[q] = r;
        self.pos[out] = NONE;
        self.status[q] = VarStatus::Basic;
        self.status[out] = leave_status;
        self.x[out] = match leave_status {
            VarStatus::AtLower => self.lb[out],
            VarStatus::AtUpper => self.ub[out],
            _ => 0.0,
        };
        let refactor = {
            let f = self.factor.as_mut().expect("factorized");
            f.push_eta(r, alpha);
            f.num_etas() >= REFACTOR_EVERY
        };
        if refactor {
            self.refactor()?;
            self.compute_primal();
        }
        Ok(())
    }

    fn tick(&mut self) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations > self.limit {
            return Err(LpError::IterationLimit(self.limit));
        }
        if self.iterations.is_multiple_of(64) && self.deadline.is_some_and(|d| std::time::Instant::now() >= d) {
            return Err(LpError::Deadline);
        }
        Ok(())
    }

    /// Long degenerate runs first trigger bound perturbation (primal, after
    /// `n + m` pivots) and then Bland's rule.
    fn bland(&self) -> bool {
        self.degenerate_run > 10 * (self.n + self.m)
    }

    fn primal(&mut self) -> Result<Outcome, LpError> {
        let total = self.n + self.m;
        let mut alpha = vec![0.0; self.m];
        let mut numerical_retries = 0;
        loop {
            self.tick()?;
            // phase selection
            let mut phase_cost = vec![0.0; total];
            let mut max_inf: f64 = 0.0;
            for &j in &self.basic {
                let v = self.x[j];
                if v < self.lb[j] - PRIMAL_TOL {
                    phase_cost[j] = -1.0;
                    max_inf = max_inf.max(self.lb[j] - v);
                } else if v > self.ub[j] + PRIMAL_TOL {
                    phase_cost[j] = 1.0;
                    max_inf = max_inf.max(v - self.ub[j]);
                }
            }
            let phase_one = max_inf > 0.0;
            let costs: &[f64] = if phase_one { &phase_cost } else { &self.cost };
            let y = self.duals_for(costs);
            // pricing
            let bland = self.bland();
            let mut q = NONE;
            let mut best = 0.0;
            for j in 0..total {
                if self.pos[j] != NONE || self.lb[j] == self.ub[j] {
                    continue;
                }
                let dj = costs[j] - self.col_dot(j, &y);
                let score = self.dual_infeasibility(j, dj);
                if score > DUAL_TOL {
                    if bland {
                        q = j;
                        break;
                    }
                    if score > best {
                        best = score;
                        q = j;
                    }
                }
            }
            if q == NONE {
                if phase_one {
                    if max_inf <= ACCEPT_TOL {
                        return Ok(Outcome::Optimal);
                    }
                    return Ok(Outcome::Infeasible);
                }
                return Ok(Outcome::Optimal);
            }
            let dq = costs[q] - self.col_dot(q, &y);
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            self.load_column(q, &mut alpha);
            self.factor().ftran(&mut alpha);

            // ratio test: x_B changes by -dir * t * alpha
            let mut t_harris = f64::INFINITY;
            for p in 0..self.m {
                let a = alpha[p];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let j = self.basic[p];
                let rate = -dir * a;
                let v = self.x[j];
                let lim = if rate < 0.0 {
                    if v < self.lb[j] - PRIMAL_TOL {
                        continue;
                    } else if v > self.ub[j] + PRIMAL_TOL {
                        (v - self.ub[j]) / -rate
                    } else if self.lb[j].is_finite() {
                        (v - self.lb[j] + PRIMAL_TOL) / -rate
                    } else {
                        continue;
                    }
                } else if v > self.ub[j] + PRIMAL_TOL {
                    continue;
                } else if v < self.lb[j] - PRIMAL_TOL {
                    (self.lb[j] - v) / rate
                } else if self.ub[j].is_finite() {
                    (self.ub[j] - v + PRIMAL_TOL) / rate
                } else {
                    continue;
                };
                t_harris = t_harris.min(lim);
            }
            let range = self.ub[q] - self.lb[q];
            if range <= t_harris && range.is_finite() {
                // bound flip
                let step = range;
                for p in 0..self.m {
                    let j = self.basic[p];
                    self.x[j] -= dir * step * alpha[p];
                }
                if dir > 0.0 {
                    self.status[q] = VarStatus::AtUpper;
                    self.x[q] = self.ub[q];
                } else {
                    self.status[q] = VarStatus::AtLower;
                    self.x[q] = self.lb[q];
                }
                self.degenerate_run = 0;
                continue;
            }
            if t_harris == f64::INFINITY {
                if phase_one {
                    numerical_retries += 1;
                    if numerical_retries > 5 {
                        return Err(LpError::NumericalFailure("phase one ray".into()));
                    }
                    self.refactor()?;
                    self.compute_primal();
                    continue;
                }
                return Ok(Outcome::Unbounded);
            }
            // second pass: among blocking candidates with exact ratio <= t_harris, largest |alpha|
            let mut r = NONE;
            let mut r_ratio = 0.0;
            let mut r_status = VarStatus::AtLower;
            let mut best_piv = 0.0;
            for p in 0..self.m {
                let a = alpha[p];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let j = self.basic[p];
                let rate = -dir * a;
                let v = self.x[j];
                let (ratio, st) = if rate < 0.0 {
                    if v < self.lb[j] - PRIMAL_TOL {
                        continue;
                    } else if v > self.ub[j] + PRIMAL_TOL {
                        ((v - self.ub[j]) / -rate, VarStatus::AtUpper)
                    } else if self.lb[j].is_finite() {
                        ((v - self.lb[j]) / -rate, VarStatus::AtLower)
                    } else {
                        continue;
                    }
                } else if v > self.ub[j] + PRIMAL_TOL {
                    continue;
                } else if v < self.lb[j] - PRIMAL_TOL {
                    ((self.lb[j] - v) / rate, VarStatus::AtLower)
                } else if self.ub[j].is_finite() {
                    ((self.ub[j] - v) / rate, VarStatus::AtUpper)
                } else {
                    continue;
                };
                if ratio > t_harris {
                    continue;
                }
                let better = if bland {
                    r == NONE || ratio < r_ratio - 1e-12 || (ratio <= r_ratio + 1e-12 && j < self.basic[r])
                } else {
                    a.abs() > best_piv
                };
                if better {
                    r = p;
                    r_ratio = ratio;
                    r_status = st;
                    best_piv = a.abs();
                }
            }
            if r == NONE {
                return Err(LpError::NumericalFailure("primal ratio test found no pivot".into()));
            }
            let step = r_ratio.max(0.0);
            if step < 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run >= self.n + self.m && self.saved_bounds.is_none() {
                    return Ok(Outcome::Stalled);
                }
            } else {
                self.degenerate_run = 0;
            }
            for p in 0..self.m {
                let j = self.basic[p];
                self.x[j] -= dir * step * alpha[p];
            }
            self.x[q] += dir * step;
            let leaving = self.basic[r];
            if self.lb[leaving] == self.ub[leaving] {
                r_status = VarStatus::AtLower;
            }
            self.pivot(r, q, &alpha, r_status)?;
        }
    }

    fn dual(&mut self) -> Result<Outcome, LpError> {
        let total = self.n + self.m;
        let mut alpha = vec![0.0; self.m];
        loop {
            self.tick()?;
            // leaving row: largest primal infeasibility
            let mut r = NONE;
            let mut worst = PRIMAL_TOL;
            for p in 0..self.m {
                let inf = self.infeasibility(self.basic[p]);
                if inf > worst {
                    worst = inf;
                    r = p;
                }
            }
            if r == NONE {
                return Ok(Outcome::Optimal);
            }
            let leaving = self.basic[r];
            let below = self.x[leaving] < self.lb[leaving];
            let target = if below { self.lb[leaving] } else { self.ub[leaving] };
            let costs = self.cost.clone();
            let y = self.duals_for(&costs);
            let mut rho = vec![0.0; self.m];
            rho[r] = 1.0;
            self.factor().btran(&mut rho);

            // candidates and Harris bound
            let mut cand: Vec<(usize, f64, f64)> = Vec::new();
            let mut t_harris = f64::INFINITY;
            for j in 0..total {
                if self.pos[j] != NONE || self.lb[j] == self.ub[j] {
                    continue;
                }
                let a = self.col_dot(j, &rho);
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let dj = costs[j] - self.col_dot(j, &y);
                // sd: the reduced cost measured in the sign that dual feasibility keeps nonnegative
                // the entering variable must increase when `inc`, decrease otherwise
                let inc = if below { a < 0.0 } else { a > 0.0 };
                let sd = match (self.status[j], inc) {
                    (VarStatus::AtLower, true) | (VarStatus::Zero, true) => dj,
                    (VarStatus::AtUpper, false) | (VarStatus::Zero, false) => -dj,
                    _ => continue,
                };
                if sd < -1e-7 {
                    return Ok(Outcome::SwitchPrimal);
                }
                t_harris = t_harris.min((sd.max(0.0) + DUAL_TOL) / a.abs());
                cand.push((j, a, sd));
            }
            if cand.is_empty() {
                return Ok(Outcome::Infeasible);
            }
            let bland = self.bland();
            let mut q = NONE;
            let mut best = 0.0;
            let mut q_ratio = f64::INFINITY;
            for &(j, a, sd) in &cand {
                let ratio = sd.max(0.0) / a.abs();
                if ratio > t_harris {
                    continue;
                }
                let better = if bland {
                    q == NONE || ratio < q_ratio - 1e-12 || (ratio <= q_ratio + 1e-12 && j < q)
                } else {
                    a.abs() > best
                };
                if better {
                    q = j;
                    best = a.abs();
                    q_ratio = ratio;
                }
            }
            if q_ratio < 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            self.load_column(q, &mut alpha);
            self.factor().ftran(&mut alpha);
            if alpha[r].abs() < PIVOT_TOL {
                self.refactor()?;
                self.compute_primal();
                continue;
            }
            let delta = (self.x[leaving] - target) / alpha[r];
            for p in 0..self.m {
                let j = self.basic[p];
                self.x[j] -= delta * alpha[p];
            }
            self.x[q] += delta;
            let st = if below { VarStatus::AtLower } else { VarStatus::AtUpper };
            self.pivot(r, q, &alpha, st)?;
        }
    }

    fn result(&mut self, model: &LpModel, outcome: Outcome) -> LpResult {
        let status = match outcome {
            Outcome::Optimal | Outcome::SwitchPrimal | Outcome::Stalled => LpStatus::Optimal,
            Outcome::Infeasible => LpStatus::PrimalInfeasible,
            Outcome::Unbounded => LpStatus::Unbounded,
        };
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let obj = x.iter().zip(&model.obj).map(|(a, b)| a * b).sum();
        let y = self.duals_for(&self.cost.clone());
        let sign = match model.sense {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        };
        let duals = y.iter().map(|v| sign * v).collect();
        let basis = Basis {
            cols: self.status[..self.n].to_vec(),
            rows: self.status[self.n..].to_vec(),
        };
        LpResult {
            status,
            x,
            obj,
            duals,
            basis,
            iterations: self.iterations,
        }
    }
}

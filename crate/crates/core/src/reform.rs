//! Extended reformulations that trade each large cone for many small ones.
//!
//! Every transformer keeps the original variables as the leading columns and
//! appends new ones, so the back-map is the projection onto the first `n`
//! coordinates. Rotated constraints `y^2 <= w v` with `w, v >= 0` are stored as
//! two-dimensional cones `||(2y, w - v)|| <= w + v`.

use thiserror::Error;

use crate::model::{ConeBlock, MicqpInstance};
use crate::relax::tower_shape;

#[derive(Debug, Error, PartialEq)]
pub enum ReformError {
    #[error("reformulation not applicable: {0}")]
    NotApplicable(String),
}

#[derive(Debug, Clone)]
pub struct ReformulatedInstance {
    pub inst: MicqpInstance,
    /// Number of leading columns that are the original variables.
    pub original_vars: usize,
}

impl ReformulatedInstance {
    /// Original variables of an extended point.
    pub fn back_map(&self, x: &[f64]) -> Vec<f64> {
        x[..self.original_vars].to_vec()
    }
}

/// Column holding the affine expression `g.x + c`.
fn expr_column(inst: &mut MicqpInstance, g: &[f64], c: f64) -> usize {
    let nz: Vec<usize> = (0..g.len()).filter(|&j| g[j] != 0.0).collect();
    if c == 0.0 && nz.len() == 1 && g[nz[0]] == 1.0 {
        return nz[0];
    }
    if nz.is_empty() {
        return push_col(inst, c, c);
    }
    let v = push_col(inst, f64::NEG_INFINITY, f64::INFINITY);
    let mut row = vec![0.0; inst.num_vars];
    row[..g.len()].copy_from_slice(g);
    row[v] = -1.0;
    inst.add_equality(row, -c);
    v
}

fn push_col(inst: &mut MicqpInstance, lb: f64, ub: f64) -> usize {
    let j = inst.num_vars;
    inst.num_vars += 1;
    inst.objective.push(0.0);
    inst.lb.push(lb);
    inst.ub.push(ub);
    for row in inst.rows.iter_mut() {
        row.push(0.0);
    }
    for cone in inst.cones.iter_mut() {
        for r in cone.matrix.iter_mut() {
            r.push(0.0);
        }
        cone.radius.push(0.0);
    }
    j
}

fn unit(width: usize, j: usize, v: f64) -> Vec<f64> {
    let mut r = vec![0.0; width];
    r[j] = v;
    r
}

/// `||(a, b)|| <= h` over three columns.
fn l2_cone(width: usize, a: usize, b: usize, h: usize) -> ConeBlock {
    ConeBlock::new(vec![unit(width, a, 1.0), unit(width, b, 1.0)], vec![0.0; 2], unit(width, h, 1.0), 0.0)
}

/// `y^2 <= w v` as `||(2y, w - v)|| <= w + v`.
pub fn rotated_cone(width: usize, y: usize, w: usize, v: usize) -> ConeBlock {
    let mut diff = unit(width, w, 1.0);
    diff[v] -= 1.0;
    let mut sum = unit(width, w, 1.0);
    sum[v] += 1.0;
    ConeBlock::new(vec![unit(width, y, 2.0), diff], vec![0.0; 2], sum, 0.0)
}

/// Widens every cone to `width` columns.
fn pad_cones(cones: &mut [ConeBlock], width: usize) {
    for cone in cones {
        for r in cone.matrix.iter_mut() {
            r.resize(width, 0.0);
        }
        cone.radius.resize(width, 0.0);
    }
}

/// Columns holding the head `y0` and the rows `y_j` of `cone`.
fn cone_columns(out: &mut MicqpInstance, cone: &ConeBlock) -> (usize, Vec<usize>) {
    let y: Vec<usize> = cone
        .matrix
        .iter()
        .zip(&cone.offset)
        .map(|(g, &c)| expr_column(out, g, c))
        .collect();
    let y0 = expr_column(out, &cone.radius, cone.radius_offset);
    (y0, y)
}

fn without_cones(inst: &MicqpInstance) -> MicqpInstance {
    let mut out = inst.clone();
    out.cones.clear();
    out
}

fn finish(mut out: MicqpInstance, mut cones: Vec<ConeBlock>, n: usize) -> ReformulatedInstance {
    let width = out.num_vars;
    pad_cones(&mut cones, width);
    pad_cones(&mut out.cones, width);
    out.cones.extend(cones);
    ReformulatedInstance { inst: out, original_vars: n }
}

/// Tower of variables: each cone of dimension `d >= 3` becomes `d - 1`
/// two-dimensional cones over `d - 2` new internal columns. Smaller cones are kept.
pub fn reform_tower(inst: &MicqpInstance) -> ReformulatedInstance {
    build_tower(inst, false)
}

/// Tower skeleton with every two-dimensional gadget `||(a, b)|| <= h` replaced by
/// `a^2 <= v_1 h`, `b^2 <= v_2 h`, `v_1 + v_2 <= h`. Cones with `d = 1` are kept.
pub fn reform_towersep(inst: &MicqpInstance) -> ReformulatedInstance {
    build_tower(inst, true)
}

fn build_tower(inst: &MicqpInstance, separable: bool) -> ReformulatedInstance {
    let n = inst.num_vars;
    let mut out = without_cones(inst);
    let mut small = Vec::new();
    let mut gadgets: Vec<(usize, usize, usize)> = Vec::new();
    for cone in &inst.cones {
        let d = cone.dim();
        if d < 2 || (d == 2 && !separable) {
            small.push(cone.clone());
            continue;
        }
        let (y0, y) = cone_columns(&mut out, cone);
        let shape = tower_shape(d).expect("d >= 2");
        let mut level = y;
        for k in 0..shape.k {
            let last = k + 1 == shape.k;
            let mut next = Vec::with_capacity(shape.r[k + 1]);
            for pair in level.chunks(2) {
                if pair.len() == 1 {
                    next.push(pair[0]);
                    continue;
                }
                let head = if last { y0 } else { push_col(&mut out, 0.0, f64::INFINITY) };
                gadgets.push((pair[0], pair[1], head));
                next.push(head);
            }
            level = next;
        }
    }
    let mut cones = Vec::new();
    for (a, b, h) in gadgets {
        if separable {
            let v1 = push_col(&mut out, 0.0, f64::INFINITY);
            let v2 = push_col(&mut out, 0.0, f64::INFINITY);
            let mut budget = vec![0.0; out.num_vars];
            budget[v1] = 1.0;
            budget[v2] = 1.0;
            budget[h] = -1.0;
            out.add_row(budget, 0.0);
            cones.push((a, v1, h, true));
            cones.push((b, v2, h, true));
        } else {
            cones.push((a, b, h, false));
        }
    }
    let width = out.num_vars;
    let mut blocks: Vec<ConeBlock> = cones
        .into_iter()
        .map(|(a, b, h, rot)| if rot { rotated_cone(width, a, b, h) } else { l2_cone(width, a, b, h) })
        .collect();
    pad_cones(&mut small, width);
    small.append(&mut blocks);
    finish(out, small, n)
}

/// Separable reformulation: per cone, columns `w_j >= 0`, the budget row
/// `sum_j w_j <= y0`, the sign row `y0 >= 0`, and `y_j^2 <= w_j y0` for every `j`.
pub fn reform_sep(inst: &MicqpInstance) -> ReformulatedInstance {
    let n = inst.num_vars;
    let mut out = without_cones(inst);
    let mut rotated = Vec::new();
    for cone in &inst.cones {
        let (y0, y) = cone_columns(&mut out, cone);
        let w: Vec<usize> = (0..y.len()).map(|_| push_col(&mut out, 0.0, f64::INFINITY)).collect();
        let mut budget = vec![0.0; out.num_vars];
        for &wj in &w {
            budget[wj] = 1.0;
        }
        budget[y0] -= 1.0;
        out.add_row(budget, 0.0);
        out.add_row(unit(out.num_vars, y0, -1.0), 0.0);
        rotated.extend(y.into_iter().zip(w).map(|(yj, wj)| (yj, wj, y0)));
    }
    let width = out.num_vars;
    let cones = rotated.into_iter().map(|(y, w, v)| rotated_cone(width, y, w, v)).collect();
    finish(out, cones, n)
}

/// Perspective strengthening of the separable form of a classical portfolio
/// model with identity covariance factor: `x_j^2 <= w_j z_j` and `sum_j w_j <= sigma^2`.
///
/// Expects columns `x_0..x_{n-1}, z_0..z_{n-1}`, a single cone `||x|| <= sigma`,
/// binary `z` and the rows `x_j <= z_j`.
pub fn strengthen_perspective(inst: &MicqpInstance) -> Result<ReformulatedInstance, ReformError> {
    let na = |m: &str| Err(ReformError::NotApplicable(m.to_string()));
    if inst.cones.len() != 1 {
        return na("expected exactly one cone");
    }
    let cone = &inst.cones[0];
    let n = cone.dim();
    if inst.num_vars != 2 * n {
        return na("expected 2n columns");
    }
    let identity = cone
        .matrix
        .iter()
        .enumerate()
        .all(|(i, r)| r.iter().enumerate().all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 }));
    if !identity || cone.offset.iter().any(|&v| v != 0.0) || cone.radius.iter().any(|&v| v != 0.0) {
        return na("cone is not ||x|| <= sigma with identity factor");
    }
    let sigma = cone.radius_offset;
    if !(sigma > 0.0) {
        return na("sigma must be positive");
    }
    let binary = (n..2 * n).all(|j| inst.is_integer(j) && inst.lb[j] >= 0.0 && inst.ub[j] <= 1.0);
    if !binary {
        return na("z columns must be binary");
    }
    let linked = (0..n).all(|j| {
        inst.rows.iter().zip(&inst.rhs).any(|(r, &h)| {
            h == 0.0 && r.iter().enumerate().all(|(k, &v)| v == if k == j { 1.0 } else if k == n + j { -1.0 } else { 0.0 })
        })
    });
    if !linked {
        return na("missing linking rows x_j <= z_j");
    }
    let mut out = without_cones(inst);
    let w: Vec<usize> = (0..n).map(|_| push_col(&mut out, 0.0, f64::INFINITY)).collect();
    let mut budget = vec![0.0; out.num_vars];
    for &wj in &w {
        budget[wj] = 1.0;
    }
    out.add_row(budget, sigma * sigma);
    let width = out.num_vars;
    let cones = (0..n).map(|j| rotated_cone(width, j, w[j], n + j)).collect();
    Ok(finish(out, cones, 2 * n))
}

/// Named reformulation choices exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reform {
    None,
    Sep,
    Tower,
    TowerSep,
    Persp,
}

impl Reform {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reform::None => "none",
            Reform::Sep => "sep",
            Reform::Tower => "tower",
            Reform::TowerSep => "towersep",
            Reform::Persp => "persp",
        }
    }

    pub fn apply(&self, inst: &MicqpInstance) -> Result<ReformulatedInstance, ReformError> {
        Ok(match self {
            Reform::None => ReformulatedInstance {
                inst: inst.clone(),
                original_vars: inst.num_vars,
            },
            Reform::Sep => reform_sep(inst),
            Reform::Tower => reform_tower(inst),
            Reform::TowerSep => reform_towersep(inst),
            Reform::Persp => strengthen_perspective(inst)?,
        })
    }
}

impl std::str::FromStr for Reform {
    type Err = ReformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Reform::None),
            "sep" => Ok(Reform::Sep),
            "tower" => Ok(Reform::Tower),
            "towersep" => Ok(Reform::TowerSep),
            "persp" => Ok(Reform::Persp),
            other => Err(ReformError::NotApplicable(format!("unknown reformulation `{other}`"))),
        }
    }
}

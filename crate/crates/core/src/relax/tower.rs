//! Tower-of-variables decomposition of `L^d` into `d - 1` three-dimensional
//! cones `(t^{k+1}_i, t^k_{2i-1}, t^k_{2i})`, each replaced by a polyhedral
//! leaf relaxation.
//!
//! Gluing equalities are realized by column aliasing: `t^0 = y`,
//! `t^K_1 = y0`, and for odd `r_k` the last entry of level `k` is reused as
//! the last entry of level `k + 1`. Only the `d - 2` remaining internal
//! entries get their own columns.

use super::flat::{flat_row, separate_flat};
use super::ntwo::{attach_ntwo, lift_ntwo};
use super::sep::{separate_sep, tangent_row};
use super::{ConeVarMap, GammaPool, NTwo, OmegaPool, RelaxError};
use crate::lp::{LpModel, Relation};

#[derive(Debug, Clone, PartialEq)]
pub struct TowerShape {
    pub d: usize,
    /// Depth `K = ceil(log2 d)`.
    pub k: usize,
    /// `r_0 = d, r_{k+1} = ceil(r_k / 2)`, ending with `r_K = 1`.
    pub r: Vec<usize>,
    /// `(level k, index i)` for every gadget, `i` counted from 0.
    pub gadgets: Vec<(usize, usize)>,
}

impl TowerShape {
    /// `R(d) = sum_k r_k`, the length of the full `t` vector before gluing.
    pub fn total(&self) -> usize {
        self.r.iter().sum()
    }

    pub fn num_gadgets(&self) -> usize {
        self.gadgets.len()
    }
}

pub fn tower_shape(d: usize) -> Result<TowerShape, RelaxError> {
    if d < 2 {
        return Err(RelaxError::Domain(format!("tower needs d >= 2, got {d}")));
    }
    let mut r = vec![d];
    while *r.last().unwrap() > 1 {
        let last = *r.last().unwrap();
        r.push(last.div_ceil(2));
    }
    let k = r.len() - 1;
    let mut gadgets = Vec::new();
    for (level, &rk) in r.iter().enumerate().take(k) {
        for i in 0..rk / 2 {
            gadgets.push((level, i));
        }
    }
    Ok(TowerShape { d, k, r, gadgets })
}

/// The relaxation placed on every gadget.
#[derive(Debug, Clone, PartialEq)]
pub enum TowerLeaf {
    /// `N^2_s` with the same `s` everywhere.
    Exact(u32),
    /// `N^2_{s_k}` with `s_k` indexed by level.
    Schedule(Vec<u32>),
    /// `O^2(Omega)` with the given initial pool on every gadget.
    Dynamic(OmegaPool),
    /// Separable `H^2(Gamma)` with the given initial pool on every gadget.
    SepH2(GammaPool),
}

#[derive(Debug, Clone)]
pub enum GadgetLeaf {
    Exact(NTwo),
    Flat { pool: OmegaPool, rows: Vec<usize> },
    Sep { w: [usize; 2], pool: GammaPool, rows: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct Gadget {
    pub level: usize,
    pub index: usize,
    /// Column of `t^{k+1}_i`.
    pub head: usize,
    /// Columns of `t^k_{2i-1}`, `t^k_{2i}`.
    pub pair: [usize; 2],
    pub leaf: GadgetLeaf,
}

#[derive(Debug, Clone)]
pub struct TowerBlock {
    pub map: ConeVarMap,
    pub shape: TowerShape,
    /// Columns of the internal tower entries (not aliased to `y0` or `y`).
    pub t_cols: Vec<usize>,
    pub gadgets: Vec<Gadget>,
    /// `t[k][i]` = column of `t^k_{i+1}`.
    levels: Vec<Vec<usize>>,
}

pub fn attach_tower(lp: &mut LpModel, map: &ConeVarMap, leaf: TowerLeaf) -> Result<TowerBlock, RelaxError> {
    let d = map.dim();
    let shape = tower_shape(d)?;
    if let TowerLeaf::Schedule(s) = &leaf {
        if s.len() != shape.k {
            return Err(RelaxError::Dimension(format!("schedule of length {} for depth {}", s.len(), shape.k)));
        }
    }
    let mut levels: Vec<Vec<usize>> = vec![map.y_cols.clone()];
    let mut t_cols = Vec::new();
    for level in 0..shape.k {
        let rk = shape.r[level];
        let mut next = Vec::with_capacity(shape.r[level + 1]);
        for _ in 0..rk / 2 {
            if level + 1 == shape.k {
                next.push(map.y0_col);
            } else {
                let c = lp.add_col(f64::NEG_INFINITY, f64::INFINITY, 0.0);
                t_cols.push(c);
                next.push(c);
            }
        }
        if rk % 2 == 1 {
            next.push(levels[level][rk - 1]);
        }
        levels.push(next);
    }
    let mut gadgets = Vec::with_capacity(shape.num_gadgets());
    let mut aux = t_cols.clone();
    for &(level, i) in &shape.gadgets {
        let head = levels[level + 1][i];
        let pair = [levels[level][2 * i], levels[level][2 * i + 1]];
        let gleaf = match &leaf {
            TowerLeaf::Exact(s) => GadgetLeaf::Exact(attach_ntwo(lp, head, pair[0], pair[1], *s)?),
            TowerLeaf::Schedule(s) => GadgetLeaf::Exact(attach_ntwo(lp, head, pair[0], pair[1], s[level])?),
            TowerLeaf::Dynamic(pool) => {
                let gmap = ConeVarMap {
                    y0_col: head,
                    y_cols: pair.to_vec(),
                    aux_cols: Vec::new(),
                };
                let mut rows = Vec::with_capacity(pool.len());
                for w in pool.iter() {
                    rows.push(lp.add_row(&flat_row(&gmap, w), Relation::Le, 0.0)?);
                }
                GadgetLeaf::Flat {
                    pool: if pool.is_empty() { OmegaPool::new(2) } else { pool.clone() },
                    rows,
                }
            }
            TowerLeaf::SepH2(pool) => {
                let w = [
                    lp.add_col(f64::NEG_INFINITY, f64::INFINITY, 0.0),
                    lp.add_col(f64::NEG_INFINITY, f64::INFINITY, 0.0),
                ];
                let mut rows = vec![
                    lp.add_row(&[(w[0], 1.0), (w[1], 1.0), (head, -1.0)], Relation::Le, 0.0)?,
                    lp.add_row(&[(head, 1.0)], Relation::Ge, 0.0)?,
                ];
                for j in 0..2 {
                    for &g in pool.get(j) {
                        rows.push(lp.add_row(&tangent_row(head, pair[j], w[j], g), Relation::Le, 0.0)?);
                    }
                }
                GadgetLeaf::Sep {
                    w,
                    pool: pool.clone(),
                    rows,
                }
            }
        };
        match &gleaf {
            GadgetLeaf::Exact(nt) => aux.extend(&nt.v_cols),
            GadgetLeaf::Sep { w, .. } => aux.extend(w),
            GadgetLeaf::Flat { .. } => {}
        }
        gadgets.push(Gadget {
            level,
            index: i,
            head,
            pair,
            leaf: gleaf,
        });
    }
    let mut out_map = map.clone();
    out_map.aux_cols = aux;
    Ok(TowerBlock {
        map: out_map,
        shape,
        t_cols,
        gadgets,
        levels,
    })
}

impl TowerBlock {
    pub fn num_rows(&self) -> usize {
        self.gadgets
            .iter()
            .map(|g| match &g.leaf {
                GadgetLeaf::Exact(nt) => nt.eq_rows.len() + nt.ineq_rows.len(),
                GadgetLeaf::Flat { rows, .. } => rows.len(),
                GadgetLeaf::Sep { rows, .. } => rows.len(),
            })
            .sum()
    }

    /// Number of gadget inequality rows (equalities of exact leaves excluded).
    pub fn num_ineq_rows(&self) -> usize {
        self.gadgets
            .iter()
            .map(|g| match &g.leaf {
                GadgetLeaf::Exact(nt) => nt.ineq_rows.len(),
                GadgetLeaf::Flat { rows, .. } => rows.len(),
                GadgetLeaf::Sep { rows, .. } => rows.len(),
            })
            .sum()
    }

    /// Column of `t^k_{i+1}`.
    pub fn t_col(&self, level: usize, i: usize) -> usize {
        self.levels[level][i]
    }

    /// Separates each dynamic gadget at `x` and adds new rows.
    pub fn refine(&mut self, lp: &mut LpModel, x: &[f64], tol: f64) -> Result<usize, RelaxError> {
        let mut added = 0;
        for g in &mut self.gadgets {
            let head = x[g.head];
            let y = [x[g.pair[0]], x[g.pair[1]]];
            match &mut g.leaf {
                GadgetLeaf::Exact(_) => {}
                GadgetLeaf::Flat { pool, rows } => {
                    if let Some(w) = separate_flat(head, &y, tol) {
                        if pool.insert(&w)? {
                            let gmap = ConeVarMap {
                                y0_col: g.head,
                                y_cols: g.pair.to_vec(),
                                aux_cols: Vec::new(),
                            };
                            let unit = pool.get(pool.len() - 1).to_vec();
                            rows.push(lp.add_row(&flat_row(&gmap, &unit), Relation::Le, 0.0)?);
                            added += 1;
                        }
                    }
                }
                GadgetLeaf::Sep { w, pool, rows } => {
                    let wv = [x[w[0]], x[w[1]]];
                    for (j, gamma) in separate_sep(head, &y, &wv, tol) {
                        if pool.insert(j, gamma) {
                            rows.push(lp.add_row(&tangent_row(g.head, g.pair[j], w[j], gamma), Relation::Le, 0.0)?);
                            added += 1;
                        }
                    }
                }
            }
        }
        Ok(added)
    }

    /// Lifts a cone point: each internal `t` is the norm of its pair, the top
    /// is `y0`, and leaf variables follow their own liftings.
    pub fn lift(&self, y0: f64, y: &[f64], values: &mut [f64]) {
        values[self.map.y0_col] = y0;
        for (&c, &v) in self.map.y_cols.iter().zip(y) {
            values[c] = v;
        }
        for g in &self.gadgets {
            let a = values[g.pair[0]];
            let b = values[g.pair[1]];
            if g.head != self.map.y0_col {
                values[g.head] = (a * a + b * b).sqrt();
            }
            let h = values[g.head];
            match &g.leaf {
                GadgetLeaf::Exact(nt) => {
                    for (&c, v) in nt.v_cols.iter().zip(lift_ntwo(h, a, b, nt.s)) {
                        values[c] = v;
                    }
                }
                GadgetLeaf::Flat { .. } => {}
                GadgetLeaf::Sep { w, .. } => {
                    values[w[0]] = if h > 0.0 { a * a / h } else { 0.0 };
                    values[w[1]] = if h > 0.0 { b * b / h } else { 0.0 };
                }
            }
        }
    }
}

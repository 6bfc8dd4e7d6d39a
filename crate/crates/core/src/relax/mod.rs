//! Polyhedral relaxations of the Lorentz cone `L^d = {(y0, y) : ||y|| <= y0}`
//! and their separation oracles.
//!
//! All constructors attach rows (and auxiliary columns) to a host
//! [`LpModel`](crate::lp::LpModel) around the cone variables described by a
//! [`ConeVarMap`].

mod flat;
mod ntwo;
mod pools;
mod quality;
mod sep;
mod tower;

pub use flat::{attach_flat_oa, flat_row, separate_flat, FlatBlock};
pub use ntwo::{attach_ntwo, lift_ntwo, ntwo_quality, NTwo};
pub use pools::{GammaPool, OmegaPool};
pub use quality::measure_quality;
pub use sep::{attach_sep, perspective_cut, separate_sep, tangent_row, ConvexFn, PerspectiveRow, Power, SepBlock, Square};
pub use tower::{attach_tower, tower_shape, Gadget, GadgetLeaf, TowerBlock, TowerLeaf, TowerShape};

use thiserror::Error;

use crate::lp::{LpError, LpModel, Relation};
use crate::model::ConeBlock;

/// Absolute violation tolerance shared by the separation oracles.
pub const SEP_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Columns of a host LP that carry one cone's variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeVarMap {
    pub y0_col: usize,
    pub y_cols: Vec<usize>,
    /// Auxiliary columns created by an attached relaxation.
    pub aux_cols: Vec<usize>,
}

impl ConeVarMap {
    pub fn dim(&self) -> usize {
        self.y_cols.len()
    }

    /// Fresh free columns for `(y0, y)` with no linking rows.
    pub fn standalone(lp: &mut LpModel, d: usize) -> Self {
        let y0_col = lp.add_col(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let y_cols = lp.add_cols(d, f64::NEG_INFINITY, f64::INFINITY);
        Self {
            y0_col,
            y_cols,
            aux_cols: Vec::new(),
        }
    }

    /// Columns for `y0 = a . x + b0` and `y = A x + b`, where `x_cols[j]` holds `x_j`.
    ///
    /// A coordinate that is exactly one (not yet used) `x` column is aliased to
    /// it; a constant coordinate becomes a fixed column; anything else gets a
    /// new free column and a linking equality.
    pub fn from_cone(lp: &mut LpModel, cone: &ConeBlock, x_cols: &[usize]) -> Result<Self, RelaxError> {
        let mut used = Vec::new();
        let y0_col = link_coordinate(lp, &cone.radius, cone.radius_offset, x_cols, &mut used)?;
        let mut y_cols = Vec::with_capacity(cone.dim());
        for (row, &off) in cone.matrix.iter().zip(&cone.offset) {
            y_cols.push(link_coordinate(lp, row, off, x_cols, &mut used)?);
        }
        Ok(Self {
            y0_col,
            y_cols,
            aux_cols: Vec::new(),
        })
    }

    /// `(y0, y)` read off a full column vector.
    pub fn values(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (x[self.y0_col], self.y_cols.iter().map(|&c| x[c]).collect())
    }
}

fn link_coordinate(
    lp: &mut LpModel,
    coeffs: &[f64],
    offset: f64,
    x_cols: &[usize],
    used: &mut Vec<usize>,
) -> Result<usize, RelaxError> {
    let nz: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (x_cols[j], *v))
        .collect();
    if nz.is_empty() {
        let c = lp.add_col(offset, offset, 0.0);
        used.push(c);
        return Ok(c);
    }
    if nz.len() == 1 && nz[0].1 == 1.0 && offset == 0.0 && !used.contains(&nz[0].0) {
        used.push(nz[0].0);
        return Ok(nz[0].0);
    }
    let c = lp.add_col(f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let mut row = vec![(c, 1.0)];
    row.extend(nz.iter().map(|&(j, v)| (j, -v)));
    lp.add_row(&row, Relation::Eq, offset)?;
    used.push(c);
    Ok(c)
}

/// Depth schedule `s_k(eps)` for `k = 0..K-1` of the static relaxation `L^d_eps`,
/// each value clamped to at least 1.
pub fn ntwo_depth_schedule(d: usize, eps: f64) -> Result<Vec<u32>, RelaxError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(RelaxError::Domain(format!("eps = {eps} outside (0, 1/2)")));
    }
    let shape = tower_shape(d)?;
    Ok((0..shape.k).map(|k| schedule_value(k, eps)).collect())
}

/// `ceil((k+1)/2) - ceil(log4((16/9) pi^-2 ln(1+eps)))`, clamped to at least 1.
pub fn schedule_value(k: usize, eps: f64) -> u32 {
    let inner = 16.0 / 9.0 / (std::f64::consts::PI * std::f64::consts::PI) * (1.0 + eps).ln();
    let shift = (inner.ln() / 4f64.ln()).ceil() as i64;
    let base = ((k as i64) + 2) / 2;
    (base - shift).max(1) as u32
}

/// One cone's relaxation inside a host LP.
#[derive(Debug, Clone)]
pub enum RelaxationBlock {
    Flat(FlatBlock),
    Sep(SepBlock),
    Tower(TowerBlock),
}

impl RelaxationBlock {
    pub fn map(&self) -> &ConeVarMap {
        match self {
            RelaxationBlock::Flat(b) => &b.map,
            RelaxationBlock::Sep(b) => &b.map,
            RelaxationBlock::Tower(b) => &b.map,
        }
    }

    /// Separates `x` (full column vector) and adds every new violated row.
    /// Returns the number of rows added.
    pub fn refine(&mut self, lp: &mut LpModel, x: &[f64], tol: f64) -> Result<usize, RelaxError> {
        match self {
            RelaxationBlock::Flat(b) => b.refine(lp, x, tol),
            RelaxationBlock::Sep(b) => b.refine(lp, x, tol),
            RelaxationBlock::Tower(b) => b.refine(lp, x, tol),
        }
    }

    /// Writes a lifting of a cone point `(y0, y)` into `values` (indexed by column).
    pub fn lift(&self, y0: f64, y: &[f64], values: &mut [f64]) {
        match self {
            RelaxationBlock::Flat(b) => b.lift(y0, y, values),
            RelaxationBlock::Sep(b) => b.lift(y0, y, values),
            RelaxationBlock::Tower(b) => b.lift(y0, y, values),
        }
    }

    pub fn num_rows(&self) -> usize {
        match self {
            RelaxationBlock::Flat(b) => b.rows.len(),
            RelaxationBlock::Sep(b) => b.num_rows(),
            RelaxationBlock::Tower(b) => b.num_rows(),
        }
    }
}

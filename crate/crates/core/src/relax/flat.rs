//! Non-lifted outer approximation `O^d(Omega)`: rows `omega . y <= y0`.

use std::ops::Range;

use super::{ConeVarMap, OmegaPool, RelaxError};
use crate::lp::{LpModel, Relation};

/// Coefficients of `sum_j omega_j y_j - y0 <= 0`.
pub fn flat_row(map: &ConeVarMap, omega: &[f64]) -> Vec<(usize, f64)> {
    let mut row: Vec<(usize, f64)> = map.y_cols.iter().zip(omega).map(|(&c, &w)| (c, w)).collect();
    row.push((map.y0_col, -1.0));
    row
}

pub fn attach_flat_oa(lp: &mut LpModel, map: &ConeVarMap, pool: &OmegaPool) -> Result<Range<usize>, RelaxError> {
    if pool.dim() != map.dim() && !pool.is_empty() {
        return Err(RelaxError::Dimension(format!(
            "pool dimension {} for cone of dimension {}",
            pool.dim(),
            map.dim()
        )));
    }
    let start = lp.num_rows();
    for w in pool.iter() {
        lp.add_row(&flat_row(map, w), Relation::Le, 0.0)?;
    }
    Ok(start..lp.num_rows())
}

/// `omega(y) = y / ||y||` when `||y|| > y0 + tol`.
///
/// At `y = 0` with `y0 < -tol` every unit direction cuts the point; the first
/// axis is returned.
pub fn separate_flat(y0: f64, y: &[f64], tol: f64) -> Option<Vec<f64>> {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= y0 + tol {
        return None;
    }
    if norm == 0.0 {
        let mut w = vec![0.0; y.len()];
        if w.is_empty() {
            return None;
        }
        w[0] = 1.0;
        return Some(w);
    }
    Some(y.iter().map(|v| v / norm).collect())
}

/// `O^d(Omega)` attached to a host LP, refinable by adding directions.
#[derive(Debug, Clone)]
pub struct FlatBlock {
    pub map: ConeVarMap,
    pub pool: OmegaPool,
    pub rows: Vec<usize>,
}

impl FlatBlock {
    pub fn attach(lp: &mut LpModel, map: ConeVarMap, pool: OmegaPool) -> Result<Self, RelaxError> {
        let pool = if pool.is_empty() { OmegaPool::new(map.dim()) } else { pool };
        let rows = attach_flat_oa(lp, &map, &pool)?.collect();
        Ok(Self { map, pool, rows })
    }

    pub fn refine(&mut self, lp: &mut LpModel, x: &[f64], tol: f64) -> Result<usize, RelaxError> {
        let (y0, y) = self.map.values(x);
        if let Some(w) = separate_flat(y0, &y, tol) {
            if self.pool.insert(&w)? {
                let unit = self.pool.get(self.pool.len() - 1).to_vec();
                let i = lp.add_row(&flat_row(&self.map, &unit), Relation::Le, 0.0)?;
                self.rows.push(i);
                return Ok(1);
            }
        }
        Ok(0)
    }

    pub fn lift(&self, y0: f64, y: &[f64], values: &mut [f64]) {
        values[self.map.y0_col] = y0;
        for (&c, &v) in self.map.y_cols.iter().zip(y) {
            values[c] = v;
        }
    }
}
